#include <doctest.h>

#include <json.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cppdse/report.hpp"
#include "support/fixtures.hpp"

using namespace cppdse;
namespace fs = std::filesystem;

namespace {

struct tmpdir {
  fs::path path;
  tmpdir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("cppdse_ut_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~tmpdir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

cli_options base_opts(const std::string& kernel, const std::string& out_dir,
                      const std::string& platform = "virtex7") {
  cli_options o;
  o.kernel_path = testsup::fixture_dir() + "/kernels/" + kernel + ".json";
  o.report_path = testsup::fixture_dir() + "/reports/" + kernel + ".json";
  o.platform_path = testsup::fixture_dir() + "/platforms/" + platform + ".json";
  o.out_dir = out_dir;
  return o;
}

struct run_result {
  int code = -1;
  std::string out, err;
};

template <typename Fn>
run_result run(Fn fn, const cli_options& o) {
  std::ostringstream out, err;
  run_result r;
  r.code = fn(o, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

std::string strip_timestamp(std::string text) {
  auto pos = text.find("\"created_utc\"");
  if (pos == std::string::npos) return text;
  auto endpos = text.find('\n', pos);
  text.erase(pos, endpos - pos);
  return text;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("check accepts a mappable kernel and records the verdict") {
  tmpdir td;
  cli_options o = base_opts("dotburst", td.str());
  o.subcommand = "check";
  run_result r = run(cmd_check, o);
  CHECK(r.code == exit_ok);
  CHECK(r.out.find("mappable") != std::string::npos);

  nlohmann::json j = read_json(td.path / "check.json");
  CHECK(j["legal"] == true);
  CHECK(j["kernel"] == "dotburst");
  REQUIRE(j.contains("pe_loop_candidates"));
  CHECK(j["pe_loop_candidates"][0] == "i");
  REQUIRE(j.contains("manifest"));
  CHECK(j["manifest"]["tool"] == "cppdse");
  CHECK(j["manifest"]["version"] == "0.1.0");
  CHECK(j["manifest"]["inputs"]["kernel"] == o.kernel_path);
  CHECK(j["manifest"].contains("created_utc"));
}

TEST_CASE("check reports an unmappable kernel as a domain failure") {
  tmpdir td;
  cli_options o = base_opts("dynchunk", td.str());
  run_result r = run(cmd_check, o);
  CHECK(r.code == exit_domain);
  CHECK(r.err.find("cannot statically allocate") != std::string::npos);
  nlohmann::json j = read_json(td.path / "check.json");
  CHECK(j["legal"] == false);
  CHECK_FALSE(j["failures"].empty());
}

TEST_CASE("missing inputs are usage errors") {
  tmpdir td;
  cli_options o = base_opts("dotburst", td.str());
  o.kernel_path = td.str() + "/does_not_exist.json";
  run_result r = run(cmd_check, o);
  CHECK(r.code == exit_usage);
  CHECK(r.err.rfind("error:", 0) == 0);

  cli_options empty;
  empty.out_dir = td.str();
  CHECK(run(cmd_check, empty).code == exit_usage);
}

TEST_CASE("artifacts are byte-identical apart from the timestamp") {
  tmpdir a, b;
  cli_options oa = base_opts("dotburst", a.str());
  cli_options ob = base_opts("dotburst", b.str());
  REQUIRE(run(cmd_check, oa).code == exit_ok);
  REQUIRE(run(cmd_check, ob).code == exit_ok);
  std::string ja = strip_timestamp(testsup::read_file((a.path / "check.json").string()));
  std::string jb = strip_timestamp(testsup::read_file((b.path / "check.json").string()));
  CHECK(ja == jb);
}

TEST_CASE("space lists every tunable with the exact cardinality") {
  tmpdir td;
  cli_options o = base_opts("dotburst", td.str());
  run_result r = run(cmd_space, o);
  CHECK(r.code == exit_ok);
  nlohmann::json j = read_json(td.path / "space.json");
  CHECK(j["cardinality"] == "82944");
  REQUIRE(j["params"].size() == 4);
  CHECK(j["params"][0]["name"] == "tile");
  CHECK(j["params"][0]["num_values"] == 48);
  CHECK(j["params"][2]["name"] == "bw.x");
}

TEST_CASE("estimate prices a named point") {
  tmpdir td;
  cli_options o = base_opts("dotburst", td.str());
  o.point_path = testsup::fixture_dir() + "/points/dotburst_full.json";
  run_result r = run(cmd_estimate, o);
  CHECK(r.code == exit_ok);
  CHECK(r.out.find("2145") != std::string::npos);
  nlohmann::json j = read_json(td.path / "estimate.json");
  CHECK(j["cost"]["cycles_total"] == 2145);
  CHECK(j["cost"]["computation_bound"] == true);
  CHECK(j["point"]["tile"] == 48);
  CHECK(j["pe_loop"] == "i");
}

TEST_CASE("estimate defaults to the minimal point") {
  tmpdir td;
  cli_options o = base_opts("dotburst", td.str());
  run_result r = run(cmd_estimate, o);
  CHECK(r.code == exit_ok);
  nlohmann::json j = read_json(td.path / "estimate.json");
  CHECK(j["point"]["tile"] == 1);
  CHECK(j["point"]["pe"] == 1);
  CHECK(j["cost"]["cycles_total"].get<std::int64_t>() > 0);
}

TEST_CASE("point files accept both wrapped and flat forms") {
  tmpdir td;
  std::ofstream flat(td.path / "flat.json");
  flat << R"({"tile": 48, "pe": 48, "bw.x": 16, "bw.s": 16})";
  flat.close();
  cli_options o = base_opts("dotburst", td.str());
  o.point_path = (td.path / "flat.json").string();
  run_result r = run(cmd_estimate, o);
  CHECK(r.code == exit_ok);
  CHECK(read_json(td.path / "estimate.json")["cost"]["cycles_total"] == 2145);
}

TEST_CASE("off-lattice and unknown parameters are usage errors") {
  tmpdir td;
  std::ofstream bad(td.path / "bad.json");
  bad << R"({"tile": 49, "pe": 48, "bw.x": 16, "bw.s": 16})";
  bad.close();
  cli_options o = base_opts("dotburst", td.str());
  o.point_path = (td.path / "bad.json").string();
  CHECK(run(cmd_estimate, o).code == exit_usage);

  std::ofstream unknown(td.path / "unknown.json");
  unknown << R"({"tile": 48, "pe": 48, "bw.x": 16, "bw.s": 16, "bw.z": 16})";
  unknown.close();
  o.point_path = (td.path / "unknown.json").string();
  run_result r = run(cmd_estimate, o);
  CHECK(r.code == exit_usage);
  CHECK(r.err.find("bw.z") != std::string::npos);
}

TEST_CASE("an incomplete report is surfaced as a usage error") {
  tmpdir td;
  cli_options o = base_opts("nw_like", td.str());
  o.report_path = testsup::fixture_dir() + "/reports/nw_missing.json";
  run_result r = run(cmd_estimate, o);
  CHECK(r.code == exit_usage);
  CHECK(r.err.find("report incomplete: missing entry for 'align'") != std::string::npos);
}

TEST_CASE("explore writes the result bundle") {
  tmpdir td;
  cli_options o = base_opts("dotburst", td.str());
  o.budget_evals = 320;
  o.budget_secs = 1e9;
  o.seed = 5;
  o.jobs = 1;
  o.trace = true;
  run_result r = run(cmd_explore, o);
  CHECK(r.code == exit_ok);

  nlohmann::json j = read_json(td.path / "explore.json");
  CHECK(j["found_feasible"] == true);
  CHECK(j["evals"] == 320);
  CHECK(j.contains("best_point"));
  CHECK(j.contains("best_cost"));
  CHECK(j["arms"].size() == 4);
  CHECK(j["manifest"]["seed"] == 5);

  std::string trace = testsup::read_file((td.path / "trace.csv").string());
  CHECK(trace.rfind("time_ms,evals,best_cycles\n", 0) == 0);
  std::string src = testsup::read_file((td.path / "best_source.txt").string());
  CHECK(src.find("const int") != std::string::npos);
}

TEST_CASE("simulate reports per-stage divergence and a gantt") {
  tmpdir td;
  cli_options o = base_opts("bytepack", td.str(), "smallfpga");
  o.point_path = testsup::fixture_dir() + "/points/bytepack_t10.json";
  run_result r = run(cmd_simulate, o);
  CHECK(r.code == exit_ok);
  nlohmann::json j = read_json(td.path / "simulate.json");
  CHECK(j["sim"]["total_cycles"] == 1490);
  CHECK(j["model"]["total_cycles"] == 1500);
  CHECK(j["divergence_pct"]["total"].get<double>() < 5.0);
  std::string gantt = testsup::read_file((td.path / "gantt.csv").string());
  CHECK(gantt.rfind("tile,stage,start_cycle,end_cycle\n", 0) == 0);
}

}  // TEST_SUITE
