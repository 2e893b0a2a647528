#include "hasod/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <CLI11.hpp>

#include "hasod/bench.hpp"
#include "hasod/errors.hpp"
#include "hasod/service.hpp"
#include "hasod/session.hpp"

namespace hasod {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path batch_path(const fs::path& session_file) {
  fs::path p = session_file;
  p.replace_extension();
  p += ".batch.csv";
  return p;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Json status_json(const SessionState& s) {
  Json j{{"phase", std::string(to_string(s.phase))},
         {"k", s.config.k},
         {"total_rows", s.total_rows()},
         {"answered_rows", s.answered_rows()},
         {"pending_rows", s.phase == SessionPhase::Complete ? 0 : propose_runs(s).size()}};
  if (s.classification) {
    Json labels = Json::array();
    for (auto l : s.classification->labels) labels.push_back(std::string(to_string(l)));
    Json pairs = Json::array();
    for (const auto& [a, b] : s.classification->significant_interactions) pairs.push_back(Json::array({a, b}));
    j["classification"] = Json{{"labels", labels},
                               {"critical_set", s.classification->critical_set},
                               {"k_c", s.classification->k_c},
                               {"significant_interactions", pairs},
                               {"n_int", s.classification->n_int},
                               {"tau_crit", s.classification->tau_crit}};
  } else {
    j["classification"] = nullptr;
  }
  j["strategy"] = s.strategy ? Json(std::string(to_string(s.strategy->kind))) : Json(nullptr);
  return j;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive three-phase design of experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hasod 1.0");

  std::size_t factors = 0;
  std::uint64_t seed = 0;
  std::string out_path, session_path, responses_path, config_path;
  auto* cmd_new = app.add_subcommand("new", "create a session and write its first batch");
  cmd_new->add_option("--factors", factors, "number of factors k")->required();
  cmd_new->add_option("--seed", seed, "random seed")->required();
  cmd_new->add_option("--out", out_path, "session file to create")->required();
  cmd_new->add_option("--config", config_path, "JSON file of config overrides");

  auto* cmd_propose = app.add_subcommand("propose", "print pending runs as CSV");
  cmd_propose->add_option("--session", session_path)->required();

  auto* cmd_ingest = app.add_subcommand("ingest", "ingest a run_id,y CSV of responses");
  cmd_ingest->add_option("--session", session_path)->required();
  cmd_ingest->add_option("--responses", responses_path)->required();

  auto* cmd_status = app.add_subcommand("status", "print phase and classification as JSON");
  cmd_status->add_option("--session", session_path)->required();

  auto* cmd_report = app.add_subcommand("report", "print the final result as JSON");
  cmd_report->add_option("--session", session_path)->required();

  std::string scenarios = "all", methods = "all", scenario_file;
  std::size_t reps = 10;
  std::uint64_t bench_seed = 1;
  std::string out_dir;
  auto* cmd_bench = app.add_subcommand("bench", "run the scenario benchmark");
  cmd_bench->add_option("--scenarios", scenarios, "all or a comma list of names");
  cmd_bench->add_option("--methods", methods, "all or a comma list of HASOD,Traditional,StdDSD,LHS,Sobol");
  cmd_bench->add_option("--reps", reps)->check(CLI::PositiveNumber);
  cmd_bench->add_option("--seed", bench_seed);
  cmd_bench->add_option("--out", out_dir)->required();
  cmd_bench->add_option("--scenario-file", scenario_file, "JSON list of scenario definitions");

  int port = 8080;
  std::string host = "127.0.0.1";
  std::string sessions_dir;
  auto* cmd_serve = app.add_subcommand("serve", "start the HTTP service");
  cmd_serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  cmd_serve->add_option("--host", host);
  cmd_serve->add_option("--sessions-dir", sessions_dir);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "hasod 1.0\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*cmd_new) {
      SessionConfig cfg;
      if (!config_path.empty()) {
        Json j;
        try {
          j = Json::parse(read_file(config_path));
        } catch (const Json::exception& e) {
          throw UsageError(std::string("config file is not JSON: ") + e.what());
        }
        cfg = session_config_from_json(j, cfg);
      }
      cfg.k = factors;
      cfg.seed = seed;
      const SessionState s = create_session(cfg);
      save_session(s, out_path);
      const fs::path batch = batch_path(out_path);
      write_file_atomic(batch, batch_to_csv(propose_runs(s), cfg.k));
      out << batch.string() << "\n";
    } else if (*cmd_propose) {
      const SessionState s = load_session(session_path);
      out << batch_to_csv(propose_runs(s), s.config.k);
    } else if (*cmd_ingest) {
      const SessionState s = load_session(session_path);
      std::vector<Response> responses;
      try {
        responses = responses_from_csv(read_file(responses_path));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedInput || e.code() == ErrorCode::IoError) throw UsageError(e.what());
        throw;
      }
      const SessionState next = ingest_responses(s, responses);
      save_session(next, session_path);
      if (next.phase != SessionPhase::Complete) {
        write_file_atomic(batch_path(session_path), batch_to_csv(propose_runs(next), next.config.k));
      }
      out << to_string(next.phase) << "\n";
    } else if (*cmd_status) {
      out << canonical_dump(status_json(load_session(session_path))) << "\n";
    } else if (*cmd_report) {
      out << canonical_dump(to_json(finalize_report(load_session(session_path)))) << "\n";
    } else if (*cmd_bench) {
      BenchPlan plan;
      plan.reps = reps;
      plan.master_seed = bench_seed;
      std::vector<ScenarioTruth> pool;
      if (!scenario_file.empty()) {
        Json j;
        try {
          j = Json::parse(read_file(scenario_file));
        } catch (const Json::exception& e) {
          throw UsageError(std::string("scenario file is not JSON: ") + e.what());
        }
        pool = scenarios_from_json(j);
      }
      auto lookup = [&](const std::string& name) {
        for (const auto& t : pool) {
          if (t.name == name) return t;
        }
        return make_scenario(name);
      };
      if (scenarios == "all") {
        for (const auto& n : scenario_names()) plan.scenarios.push_back(lookup(n));
        for (const auto& t : pool) {
          if (std::find(scenario_names().begin(), scenario_names().end(), t.name) == scenario_names().end()) {
            plan.scenarios.push_back(t);
          }
        }
      } else {
        for (const auto& n : split(scenarios)) plan.scenarios.push_back(lookup(n));
      }
      if (methods == "all") {
        plan.methods = all_methods();
      } else {
        for (const auto& m : split(methods)) plan.methods.push_back(method_from_string(m));
      }
      if (plan.scenarios.empty() || plan.methods.empty()) throw UsageError("no scenarios or methods selected");
      const BenchReport rep = aggregate_report(run_benchmark(plan));
      fs::create_directories(out_dir);
      write_file_atomic(fs::path(out_dir) / "results.csv", rep.csv);
      write_file_atomic(fs::path(out_dir) / "report.md", rep.markdown);
      out << (fs::path(out_dir) / "results.csv").string() << "\n";
    } else if (*cmd_serve) {
      if (sessions_dir.empty()) {
        const char* env = std::getenv("HASOD_SESSIONS_DIR");
        sessions_dir = env != nullptr && *env != '\0' ? env : "sessions";
      }
      return serve(host, port, sessions_dir);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "IoError: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace hasod
