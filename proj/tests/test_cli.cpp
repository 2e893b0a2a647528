#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hasod/bench.hpp"
#include "hasod/cli.hpp"
#include "hasod/session.hpp"

using namespace hasod;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hasod");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hasod_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

}  // namespace

TEST_CASE("new writes a session and its first batch") {
  const fs::path dir = scratch("new");
  const std::string file = (dir / "s.json").string();
  const Run r = cli({"new", "--factors", "6", "--seed", "42", "--out", file});
  REQUIRE(r.code == 0);
  const fs::path batch = dir / "s.batch.csv";
  CHECK(r.out == batch.string() + "\n");
  CHECK(fs::exists(batch));
  const SessionState s = load_session(file);
  CHECK(propose_runs(s).size() == 15);

  const Run p = cli({"propose", "--session", file});
  CHECK(p.code == 0);
  CHECK(std::count(p.out.begin(), p.out.end(), '\n') == 16);
  CHECK(p.out.rfind("run_id,f1,f2,f3,f4,f5,f6\n", 0) == 0);
}

TEST_CASE("usage and domain errors") {
  const fs::path dir = scratch("errors");
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"new", "--factors", "6", "--seed", "1"}).code == 2);
  CHECK(cli({"new", "--factors", "6", "--seed", "1", "--out", (dir / "a.json").string(), "--bogus"}).code == 2);
  CHECK(cli({"new", "--factors", "six", "--seed", "1", "--out", (dir / "a.json").string()}).code == 2);

  const Run small = cli({"new", "--factors", "1", "--seed", "1", "--out", (dir / "b.json").string()});
  CHECK(small.code == 1);
  CHECK(small.err.rfind("KTooSmall", 0) == 0);

  const Run missing = cli({"status", "--session", (dir / "none.json").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.rfind("IoError", 0) == 0);

  const std::string file = (dir / "c.json").string();
  REQUIRE(cli({"new", "--factors", "3", "--seed", "1", "--out", file}).code == 0);
  const Run rep = cli({"report", "--session", file});
  CHECK(rep.code == 1);
  CHECK(rep.err.rfind("NotComplete", 0) == 0);

  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("malformed responses leave the session untouched") {
  const fs::path dir = scratch("malformed");
  const std::string file = (dir / "s.json").string();
  REQUIRE(cli({"new", "--factors", "4", "--seed", "3", "--out", file}).code == 0);
  const std::string before = read_file(file);
  write(dir / "bad.csv", "run_id,y\n0,not-a-number\n");
  CHECK(cli({"ingest", "--session", file, "--responses", (dir / "bad.csv").string()}).code == 2);
  CHECK(read_file(file) == before);

  write(dir / "dup.csv", "run_id,y\n0,1\n0,2\n");
  const Run dup = cli({"ingest", "--session", file, "--responses", (dir / "dup.csv").string()});
  CHECK(dup.code == 1);
  CHECK(dup.err.rfind("DuplicateResponse", 0) == 0);
  CHECK(read_file(file) == before);
}

TEST_CASE("full session through the command line") {
  const fs::path dir = scratch("flow");
  const std::string file = (dir / "s.json").string();
  REQUIRE(cli({"new", "--factors", "3", "--seed", "5", "--out", file}).code == 0);
  RandomStream noise(4);
  std::string phase;
  for (int step = 0; step < 10 && phase != "Complete\n"; ++step) {
    const SessionState s = load_session(file);
    std::ostringstream csv;
    csv << "run_id,y\n";
    csv.precision(17);
    for (const auto& r : propose_runs(s)) {
      csv << r.row_id << ',' << 5 * r.levels(0) - 2 * r.levels(1) * r.levels(1) + 0.3 * noise.next_normal() << '\n';
    }
    write(dir / "r.csv", csv.str());
    const Run in = cli({"ingest", "--session", file, "--responses", (dir / "r.csv").string()});
    REQUIRE(in.code == 0);
    phase = in.out;
  }
  CHECK(phase == "Complete\n");

  const Run status = cli({"status", "--session", file});
  CHECK(status.code == 0);
  const Json st = Json::parse(status.out);
  CHECK(st["phase"] == "Complete");
  CHECK(st["classification"]["k_c"].get<int>() >= 1);

  const Run report = cli({"report", "--session", file});
  CHECK(report.code == 0);
  const Json r = Json::parse(report.out);
  CHECK(r["x_star"].size() == 3);
  CHECK(r["total_runs"] == load_session(file).answered_rows());
}

TEST_CASE("bench writes csv and markdown") {
  const fs::path dir = scratch("bench");
  const Run r = cli({"bench", "--scenarios", "sparse_few", "--methods", "HASOD", "--reps", "2", "--seed", "1", "--out",
                     dir.string()});
  REQUIRE(r.code == 0);
  const std::string csv = read_file(dir / "results.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(fs::exists(dir / "report.md"));

  CHECK(cli({"bench", "--scenarios", "nope", "--reps", "2", "--out", dir.string()}).code == 1);
  CHECK(cli({"bench", "--methods", "HASOD", "--reps", "1", "--scenarios", "sparse_few", "--out", dir.string()}).code == 1);

  write(dir / "sc.json", R"([{"name":"tiny","main_coeffs":[3,0,0,1],"noise_sigma":0.5}])");
  const Run custom = cli({"bench", "--scenarios", "tiny", "--methods", "Traditional,StdDSD", "--reps", "2",
                          "--scenario-file", (dir / "sc.json").string(), "--out", (dir / "c").string()});
  CHECK(custom.code == 0);
  const std::string c = read_file(dir / "c" / "results.csv");
  CHECK(c.find("Traditional,tiny,") != std::string::npos);
}
