#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hasod/augment.hpp"
#include "hasod/designgen.hpp"
#include "hasod/json_io.hpp"
#include "hasod/optimize.hpp"
#include "hasod/screening.hpp"
#include "hasod/surrogate.hpp"

namespace hasod {

inline constexpr std::string_view kSessionSchema = "hasod-session/1";

struct SessionConfig {
  std::size_t k = 6;
  std::uint64_t seed = 0;
  ScreeningConfig screening;        // elastic net 0.01 / 0.5, ridge SE 0.01, eps 1e-8
  double combined_lambda = 0.1;
  std::size_t n3 = 6;
  double region_halfwidth = 0.3;
  bool axial_clip = false;
  bool include_quadratics_on_C = true;
  DEConfig de;

  void validate() const;  // InvalidConfig / KTooSmall / KTooLarge
};

Json to_json(const SessionConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
SessionConfig session_config_from_json(const Json& j, SessionConfig base = {});

enum class SessionPhase { AwaitP1Responses, AwaitP2Responses, AwaitP3Responses, Complete };
std::string_view to_string(SessionPhase phase);
SessionPhase session_phase_from_string(std::string_view text);

struct DesignBlock {
  Design design;
  std::vector<std::optional<double>> responses;

  bool complete() const;
};

struct HasodResult {
  Vector x_star;
  double predicted_y = 0.0;
  double predicted_sd = 0.0;
  std::vector<std::size_t> critical_factors;
  std::vector<FactorPair> significant_interactions;
  std::size_t total_runs = 0;
  std::string strategy_used;
  // Posterior variance at the Phase-2 optimum: before and after conditioning
  // on the refinement points (same hyperparameters), and the final model's
  // variance at the final optimum.
  double variance_before = 0.0;
  double variance_after_at_old_xstar = 0.0;
  double variance_after = 0.0;
};

Json to_json(const HasodResult& result);
HasodResult hasod_result_from_json(const Json& j);

struct SessionState {
  SessionConfig config;
  SessionPhase phase = SessionPhase::AwaitP1Responses;
  std::vector<DesignBlock> designs;
  std::optional<ScreeningReport> screening;
  std::optional<FactorClassification> classification;
  std::optional<Strategy> strategy;
  std::optional<CombinedModel> combined;
  std::optional<KernelParams> gp_phase2;
  std::optional<KernelParams> gp_final;
  std::optional<OptimumEstimate> optimum_phase2;
  std::optional<OptimumEstimate> optimum_final;
  std::optional<HasodResult> result;

  std::size_t total_rows() const;
  std::size_t answered_rows() const;
};

struct ProposedRun {
  std::size_t row_id = 0;
  Vector levels;
};

struct Response {
  std::size_t row_id = 0;
  double y = 0.0;
};

SessionState create_session(const SessionConfig& config);
std::vector<ProposedRun> propose_runs(const SessionState& state);
// All-or-nothing: on error the returned state is never produced and `state`
// is untouched.
SessionState ingest_responses(const SessionState& state, const std::vector<Response>& responses);
HasodResult finalize_report(const SessionState& state);

// Stacked rows and responses of every answered row, in row-id order.
Matrix answered_x(const SessionState& state);
Vector answered_y(const SessionState& state);
// GP posterior used for queries: the final model once complete, else the
// Phase-2 model. Throws NotComplete before Phase 2 finishes.
GPModel current_gp(const SessionState& state);

Json session_to_json(const SessionState& state);
SessionState session_from_json(const Json& j);
std::string session_to_string(const SessionState& state);  // canonical
SessionState session_from_string(const std::string& text);
void save_session(const SessionState& state, const std::filesystem::path& path);
SessionState load_session(const std::filesystem::path& path);

// CSV exchange: "run_id,f1,...,fk" for batches, "run_id,y" for responses.
std::string batch_to_csv(const std::vector<ProposedRun>& runs, std::size_t k);
std::vector<Response> responses_from_csv(const std::string& text);

}  // namespace hasod
