#include "hasod/session.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hasod/errors.hpp"

namespace hasod {

namespace {

// Child-stream indices of the session's root stream, one per random step.
enum StreamSlot : std::uint64_t {
  kPhase1Design = 1,
  kPhase2GpFit = 2,
  kPhase2Optimum = 3,
  kRefinement = 4,
  kFinalGpFit = 5,
  kFinalOptimum = 6,
};

RandomStream slot(const SessionConfig& c, StreamSlot s) { return RandomStream(c.seed).child(s); }

std::size_t current_block(SessionPhase phase) {
  switch (phase) {
    case SessionPhase::AwaitP1Responses: return 0;
    case SessionPhase::AwaitP2Responses: return 1;
    case SessionPhase::AwaitP3Responses: return 2;
    case SessionPhase::Complete: break;
  }
  throw Error(ErrorCode::SessionComplete, "session is complete");
}

DesignBlock make_block(Design design) {
  DesignBlock b;
  b.responses.assign(design.size(), std::nullopt);
  b.design = std::move(design);
  return b;
}

GPModel phase2_model(const SessionState& s) {
  // Phase-2 GP is conditioned on the P1 and P2 rows only.
  std::size_t n = s.designs[0].design.size() + s.designs[1].design.size();
  Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s.config.k));
  Vector y(static_cast<Eigen::Index>(n));
  Eigen::Index r = 0;
  for (std::size_t b = 0; b < 2; ++b) {
    const auto& blk = s.designs[b];
    for (std::size_t i = 0; i < blk.design.size(); ++i, ++r) {
      X.row(r) = blk.design.rows.row(static_cast<Eigen::Index>(i));
      y(r) = *blk.responses[i];
    }
  }
  return gp_condition(X, y, *s.gp_phase2);
}

void run_phase1(SessionState& s) {
  const DesignBlock& p1 = s.designs[0];
  Vector y(static_cast<Eigen::Index>(p1.responses.size()));
  for (std::size_t i = 0; i < p1.responses.size(); ++i) y(static_cast<Eigen::Index>(i)) = *p1.responses[i];
  s.screening = cwess_scores(p1.design.rows, y, s.config.screening);
  s.classification = ensure_critical_factor(classify_factors(*s.screening), *s.screening);
  s.strategy = select_strategy(s.classification->k_c, s.classification->n_int);
  s.designs.push_back(make_block(
      build_augmentation(*s.strategy, *s.classification, p1.design, AugmentOptions{s.config.axial_clip})));
  s.phase = SessionPhase::AwaitP2Responses;
}

void run_phase2(SessionState& s) {
  const Matrix X = answered_x(s);
  const Vector y = answered_y(s);
  s.combined = fit_combined(X, y, *s.classification, s.strategy->kind, s.config.include_quadratics_on_C,
                            s.config.combined_lambda);
  RandomStream fit_stream = slot(s.config, kPhase2GpFit);
  const GPModel gp = gp_fit(X, y, fit_stream);
  s.gp_phase2 = gp.params;
  RandomStream opt_stream = slot(s.config, kPhase2Optimum);
  s.optimum_phase2 = estimate_optimum(gp, s.config.de, opt_stream);
  RandomStream ref_stream = slot(s.config, kRefinement);
  s.designs.push_back(make_block(refinement_points(gp, s.optimum_phase2->x_star, s.config.n3,
                                                   s.config.region_halfwidth, s.config.de, ref_stream)));
  s.phase = SessionPhase::AwaitP3Responses;
}

void run_phase3(SessionState& s) {
  const Matrix X = answered_x(s);
  const Vector y = answered_y(s);
  RandomStream fit_stream = slot(s.config, kFinalGpFit);
  const GPModel gp = gp_fit(X, y, fit_stream);
  s.gp_final = gp.params;
  RandomStream opt_stream = slot(s.config, kFinalOptimum);
  s.optimum_final = estimate_optimum(gp, s.config.de, opt_stream);

  HasodResult r;
  r.x_star = s.optimum_final->x_star;
  r.predicted_y = s.optimum_final->mu_at_x_star;
  r.predicted_sd = std::sqrt(std::max(0.0, s.optimum_final->var_at_x_star));
  r.critical_factors = s.classification->critical_set;
  r.significant_interactions = s.classification->significant_interactions;
  r.total_runs = s.answered_rows();
  r.strategy_used = std::string(to_string(s.strategy->kind));
  const GPModel before = phase2_model(s);
  const Vector& old_x = s.optimum_phase2->x_star;
  r.variance_before = gp_variance(before, old_x);
  r.variance_after_at_old_xstar = gp_variance(condition_on_points(before, s.designs[2].design.rows), old_x);
  r.variance_after = s.optimum_final->var_at_x_star;
  s.result = r;
  s.phase = SessionPhase::Complete;
}

void advance(SessionState& s) {
  // Loops because an augmentation block can be empty when every candidate row
  // already appeared in Phase 1.
  while (s.phase != SessionPhase::Complete && s.designs[current_block(s.phase)].complete()) {
    switch (s.phase) {
      case SessionPhase::AwaitP1Responses: run_phase1(s); break;
      case SessionPhase::AwaitP2Responses: run_phase2(s); break;
      case SessionPhase::AwaitP3Responses: run_phase3(s); break;
      case SessionPhase::Complete: break;
    }
  }
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? to_json(*v) : Json(nullptr);
}

Json pairs_json(const std::vector<FactorPair>& pairs) {
  Json out = Json::array();
  for (const auto& [i, j] : pairs) out.push_back(Json::array({i, j}));
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

void SessionConfig::validate() const {
  if (k < 2) throw Error(ErrorCode::KTooSmall, "k must be at least 2");
  if (k > 20) throw Error(ErrorCode::KTooLarge, "k must be at most 20");
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(screening.en_lambda) || !positive(screening.se_lambda) || !positive(combined_lambda) ||
      !positive(screening.epsilon) || !positive(region_halfwidth)) {
    throw Error(ErrorCode::InvalidConfig, "lambdas, epsilon and region_halfwidth must be positive");
  }
  if (!(screening.en_alpha >= 0.0 && screening.en_alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "elastic-net alpha must lie in [0, 1]");
  }
  if (n3 < 1) throw Error(ErrorCode::InvalidConfig, "n3 must be at least 1");
  if (!(de.crossover >= 0.0 && de.crossover <= 1.0) || !positive(de.f_weight) || !positive(de.tol) ||
      de.max_generations < 1 || de.stall_window < 1 || (de.population != 0 && de.population < 4)) {
    throw Error(ErrorCode::InvalidConfig, "invalid differential evolution settings");
  }
}

Json to_json(const SessionConfig& c) {
  return Json{{"k", c.k},
              {"seed", c.seed},
              {"en_lambda", c.screening.en_lambda},
              {"en_alpha", c.screening.en_alpha},
              {"se_lambda", c.screening.se_lambda},
              {"epsilon", c.screening.epsilon},
              {"combined_lambda", c.combined_lambda},
              {"n3", c.n3},
              {"region_halfwidth", c.region_halfwidth},
              {"axial_clip", c.axial_clip},
              {"include_quadratics_on_C", c.include_quadratics_on_C},
              {"de", to_json(c.de)}};
}

SessionConfig session_config_from_json(const Json& j, SessionConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  static const std::set<std::string> known = {"k",  "seed", "en_lambda", "en_alpha", "se_lambda", "epsilon",
                                              "combined_lambda", "n3", "region_halfwidth", "axial_clip",
                                              "include_quadratics_on_C", "de"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw Error(ErrorCode::InvalidConfig, "unknown config key " + it.key());
  }
  try {
    c.k = j.value("k", c.k);
    c.seed = j.value("seed", c.seed);
    c.screening.en_lambda = j.value("en_lambda", c.screening.en_lambda);
    c.screening.en_alpha = j.value("en_alpha", c.screening.en_alpha);
    c.screening.se_lambda = j.value("se_lambda", c.screening.se_lambda);
    c.screening.epsilon = j.value("epsilon", c.screening.epsilon);
    c.combined_lambda = j.value("combined_lambda", c.combined_lambda);
    c.n3 = j.value("n3", c.n3);
    c.region_halfwidth = j.value("region_halfwidth", c.region_halfwidth);
    c.axial_clip = j.value("axial_clip", c.axial_clip);
    c.include_quadratics_on_C = j.value("include_quadratics_on_C", c.include_quadratics_on_C);
    if (j.contains("de")) c.de = de_config_from_json(j.at("de"));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return c;
}

std::string_view to_string(SessionPhase phase) {
  switch (phase) {
    case SessionPhase::AwaitP1Responses: return "AwaitP1Responses";
    case SessionPhase::AwaitP2Responses: return "AwaitP2Responses";
    case SessionPhase::AwaitP3Responses: return "AwaitP3Responses";
    case SessionPhase::Complete: return "Complete";
  }
  return "?";
}

SessionPhase session_phase_from_string(std::string_view text) {
  for (auto p : {SessionPhase::AwaitP1Responses, SessionPhase::AwaitP2Responses, SessionPhase::AwaitP3Responses,
                 SessionPhase::Complete}) {
    if (to_string(p) == text) return p;
  }
  throw Error(ErrorCode::MalformedInput, "unknown phase " + std::string(text));
}

bool DesignBlock::complete() const {
  return std::all_of(responses.begin(), responses.end(), [](const auto& r) { return r.has_value(); });
}

Json to_json(const HasodResult& r) {
  return Json{{"x_star", vector_to_json(r.x_star)},
              {"predicted_y", r.predicted_y},
              {"predicted_sd", r.predicted_sd},
              {"critical_factors", r.critical_factors},
              {"significant_interactions", pairs_json(r.significant_interactions)},
              {"total_runs", r.total_runs},
              {"strategy_used", r.strategy_used},
              {"variance_before", r.variance_before},
              {"variance_after_at_old_xstar", r.variance_after_at_old_xstar},
              {"variance_after", r.variance_after}};
}

HasodResult hasod_result_from_json(const Json& j) {
  try {
    HasodResult r;
    r.x_star = vector_from_json(j.at("x_star"));
    r.predicted_y = j.at("predicted_y").get<double>();
    r.predicted_sd = j.at("predicted_sd").get<double>();
    r.critical_factors = j.at("critical_factors").get<std::vector<std::size_t>>();
    for (const auto& p : j.at("significant_interactions")) {
      r.significant_interactions.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    }
    r.total_runs = j.at("total_runs").get<std::size_t>();
    r.strategy_used = j.at("strategy_used").get<std::string>();
    r.variance_before = j.at("variance_before").get<double>();
    r.variance_after_at_old_xstar = j.at("variance_after_at_old_xstar").get<double>();
    r.variance_after = j.at("variance_after").get<double>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("result: ") + e.what());
  }
}

std::size_t SessionState::total_rows() const {
  std::size_t n = 0;
  for (const auto& b : designs) n += b.design.size();
  return n;
}

std::size_t SessionState::answered_rows() const {
  std::size_t n = 0;
  for (const auto& b : designs) {
    n += static_cast<std::size_t>(std::count_if(b.responses.begin(), b.responses.end(),
                                                [](const auto& r) { return r.has_value(); }));
  }
  return n;
}

SessionState create_session(const SessionConfig& config) {
  config.validate();
  SessionState s;
  s.config = config;
  RandomStream stream = slot(config, kPhase1Design);
  s.designs.push_back(make_block(mdsd(config.k, stream)));
  return s;
}

std::vector<ProposedRun> propose_runs(const SessionState& state) {
  const std::size_t b = current_block(state.phase);
  std::size_t row_id = 0;
  for (std::size_t i = 0; i < b; ++i) row_id += state.designs[i].design.size();
  std::vector<ProposedRun> out;
  const DesignBlock& blk = state.designs[b];
  for (std::size_t i = 0; i < blk.design.size(); ++i, ++row_id) {
    if (!blk.responses[i]) out.push_back({row_id, blk.design.rows.row(static_cast<Eigen::Index>(i)).transpose()});
  }
  return out;
}

SessionState ingest_responses(const SessionState& state, const std::vector<Response>& responses) {
  const std::size_t b = current_block(state.phase);
  std::size_t first = 0;
  for (std::size_t i = 0; i < b; ++i) first += state.designs[i].design.size();
  const std::size_t end = first + state.designs[b].design.size();

  SessionState next = state;
  std::set<std::size_t> seen;
  for (const Response& r : responses) {
    if (r.row_id >= state.total_rows()) {
      throw Error(ErrorCode::UnknownRowId, "row " + std::to_string(r.row_id) + " does not exist");
    }
    if (r.row_id < first || !seen.insert(r.row_id).second ||
        state.designs[b].responses[r.row_id - first].has_value()) {
      throw Error(ErrorCode::DuplicateResponse, "row " + std::to_string(r.row_id) + " already has a response");
    }
    if (r.row_id >= end) throw Error(ErrorCode::UnknownRowId, "row " + std::to_string(r.row_id) + " is not pending");
    if (!std::isfinite(r.y)) {
      throw Error(ErrorCode::NonFiniteResponse, "row " + std::to_string(r.row_id) + " response is not finite");
    }
    next.designs[b].responses[r.row_id - first] = r.y;
  }
  advance(next);
  return next;
}

HasodResult finalize_report(const SessionState& state) {
  if (state.phase != SessionPhase::Complete || !state.result) {
    throw Error(ErrorCode::NotComplete, "session is in phase " + std::string(to_string(state.phase)));
  }
  return *state.result;
}

Matrix answered_x(const SessionState& state) {
  Matrix X(static_cast<Eigen::Index>(state.answered_rows()), static_cast<Eigen::Index>(state.config.k));
  Eigen::Index r = 0;
  for (const auto& b : state.designs) {
    for (std::size_t i = 0; i < b.design.size(); ++i) {
      if (b.responses[i]) X.row(r++) = b.design.rows.row(static_cast<Eigen::Index>(i));
    }
  }
  return X;
}

Vector answered_y(const SessionState& state) {
  Vector y(static_cast<Eigen::Index>(state.answered_rows()));
  Eigen::Index r = 0;
  for (const auto& b : state.designs) {
    for (const auto& v : b.responses) {
      if (v) y(r++) = *v;
    }
  }
  return y;
}

GPModel current_gp(const SessionState& state) {
  if (state.gp_final) return gp_condition(answered_x(state), answered_y(state), *state.gp_final);
  if (state.gp_phase2) return phase2_model(state);
  throw Error(ErrorCode::NotComplete, "no surrogate before Phase 2 completes");
}

Json session_to_json(const SessionState& s) {
  Json designs = Json::array();
  for (const auto& b : s.designs) {
    Json d = to_json(b.design);
    Json resp = Json::array();
    for (const auto& r : b.responses) resp.push_back(r ? Json(*r) : Json(nullptr));
    d["responses"] = resp;
    designs.push_back(d);
  }
  Json gp = nullptr;
  if (s.gp_phase2) gp = Json{{"phase2", to_json(*s.gp_phase2)}, {"final", optional_json(s.gp_final)}};
  Json opt = nullptr;
  if (s.optimum_phase2) {
    opt = Json{{"phase2", to_json(*s.optimum_phase2)}, {"final", optional_json(s.optimum_final)}};
  }
  return Json{{"schema_version", std::string(kSessionSchema)},
              {"config", to_json(s.config)},
              {"phase", std::string(to_string(s.phase))},
              {"designs", designs},
              {"screening", optional_json(s.screening)},
              {"classification", optional_json(s.classification)},
              {"strategy", optional_json(s.strategy)},
              {"combined", optional_json(s.combined)},
              {"gp", gp},
              {"optimum", opt},
              {"result", optional_json(s.result)},
              {"rng_algorithm", std::string(RandomStream::kAlgorithm)}};
}

SessionState session_from_json(const Json& j) {
  try {
    if (j.at("schema_version").get<std::string>() != kSessionSchema) {
      throw Error(ErrorCode::MalformedInput, "unsupported schema_version");
    }
    if (j.at("rng_algorithm").get<std::string>() != RandomStream::kAlgorithm) {
      throw Error(ErrorCode::MalformedInput, "session was written with a different random stream algorithm");
    }
    SessionState s;
    s.config = session_config_from_json(j.at("config"));
    s.config.validate();
    s.phase = session_phase_from_string(j.at("phase").get<std::string>());
    for (const auto& d : j.at("designs")) {
      DesignBlock b = make_block(design_from_json(d, s.config.k));
      const Json& resp = d.at("responses");
      if (resp.size() != b.design.size()) throw Error(ErrorCode::MalformedInput, "responses length mismatch");
      for (std::size_t i = 0; i < resp.size(); ++i) {
        if (!resp[i].is_null()) b.responses[i] = resp[i].get<double>();
      }
      s.designs.push_back(std::move(b));
    }
    if (!j.at("screening").is_null()) s.screening = screening_report_from_json(j["screening"]);
    if (!j.at("classification").is_null()) s.classification = classification_from_json(j["classification"]);
    if (!j.at("strategy").is_null()) s.strategy = strategy_from_json(j["strategy"]);
    if (!j.at("combined").is_null()) s.combined = combined_model_from_json(j["combined"]);
    if (const Json& gp = j.at("gp"); !gp.is_null()) {
      s.gp_phase2 = kernel_params_from_json(gp.at("phase2"));
      if (!gp.at("final").is_null()) s.gp_final = kernel_params_from_json(gp["final"]);
    }
    if (const Json& opt = j.at("optimum"); !opt.is_null()) {
      s.optimum_phase2 = optimum_from_json(opt.at("phase2"));
      if (!opt.at("final").is_null()) s.optimum_final = optimum_from_json(opt["final"]);
    }
    if (!j.at("result").is_null()) s.result = hasod_result_from_json(j["result"]);
    const std::size_t expected_blocks = s.phase == SessionPhase::Complete ? 3 : current_block(s.phase) + 1;
    if (s.designs.size() != expected_blocks) throw Error(ErrorCode::MalformedInput, "design blocks do not match phase");
    return s;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("session: ") + e.what());
  }
}

std::string session_to_string(const SessionState& state) { return canonical_dump(session_to_json(state)) + "\n"; }

SessionState session_from_string(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedInput, e.what());
  }
  return session_from_json(j);
}

void save_session(const SessionState& state, const std::filesystem::path& path) {
  write_file_atomic(path, session_to_string(state));
}

SessionState load_session(const std::filesystem::path& path) { return session_from_string(read_file(path)); }

std::string batch_to_csv(const std::vector<ProposedRun>& runs, std::size_t k) {
  std::ostringstream out;
  out << "run_id";
  for (std::size_t i = 1; i <= k; ++i) out << ",f" << i;
  out << '\n';
  out.precision(17);
  for (const auto& r : runs) {
    out << r.row_id;
    for (Eigen::Index i = 0; i < r.levels.size(); ++i) out << ',' << r.levels(i);
    out << '\n';
  }
  return out.str();
}

std::vector<Response> responses_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<Response> out;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const auto where = " on line " + std::to_string(line_no);
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw Error(ErrorCode::MalformedInput, "expected two columns" + where);
    }
    const std::string a = trim(line.substr(0, comma));
    const std::string b = trim(line.substr(comma + 1));
    if (!header_seen) {
      header_seen = true;
      if (a != "run_id" || b != "y") throw Error(ErrorCode::MalformedInput, "header must be run_id,y");
      continue;
    }
    Response r;
    try {
      std::size_t used = 0;
      if (a.empty() || a[0] == '-' || a[0] == '+') throw std::invalid_argument(a);
      r.row_id = std::stoull(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
      r.y = std::stod(b, &used);
      if (used != b.size()) throw std::invalid_argument(b);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::MalformedInput, "cannot parse '" + line + "'" + where);
    }
    out.push_back(r);
  }
  if (!header_seen) throw Error(ErrorCode::MalformedInput, "empty responses file");
  return out;
}

}  // namespace hasod
