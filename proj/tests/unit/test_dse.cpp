#include <doctest.h>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "cppdse/dse.hpp"
#include "support/fixtures.hpp"

using namespace cppdse;

namespace {

explore_options quick_opts(std::uint64_t evals, std::uint64_t seed, int jobs) {
  explore_options o;
  o.budget_secs = 1e9;  // evaluation budget terminates the run
  o.budget_evals = evals;
  o.seed = seed;
  o.jobs = jobs;
  o.record_trace = true;
  return o;
}

bool same_trace(const explore_result& a, const explore_result& b) {
  if (a.trace.size() != b.trace.size()) return false;
  for (size_t i = 0; i < a.trace.size(); ++i) {
    if (a.trace[i].evals != b.trace[i].evals) return false;
    if (a.trace[i].best_cycles != b.trace[i].best_cycles) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("dse") {

TEST_CASE("exhaustive search finds the witnessed optimum") {
  auto f = testsup::load_fixture("dotburst");
  exhaustive_result r = exhaustive_search(f->design, f->model, f->platform, 1000000);
  CHECK(r.found_feasible);
  CHECK(r.evals == 82944);
  CHECK(r.best_cost.cycles_total == 2054);
  // ties break toward lower bram, then lut, then the smaller point, so the
  // 256-in/512-out assignment wins over its mirror image
  CHECK(r.best_point ==
        testsup::named_point(f->design, {{"tile", 48}, {"pe", 48}, {"bw.x", 256}, {"bw.s", 512}}));
  CHECK(r.best_cost.feasible_80pct);
}

TEST_CASE("exhaustive search refuses oversized spaces") {
  auto f = testsup::load_fixture("vadd_mini");
  CHECK_THROWS_WITH_AS(exhaustive_search(f->design, f->model, f->platform, 1000000),
                       doctest::Contains("131072000"), std::invalid_argument);
}

TEST_CASE("penalty objective grows with resource overuse") {
  auto f = testsup::load_fixture("lookup28");
  design_point ok = testsup::named_point(
      f->design,
      {{"tile", 28}, {"pe", 14}, {"bw.keys", 512}, {"bw.results", 512}, {"bw.table", 512}});
  design_point over = testsup::named_point(
      f->design,
      {{"tile", 28}, {"pe", 28}, {"bw.keys", 512}, {"bw.results", 512}, {"bw.table", 512}});
  cost_estimate e_ok = estimate(f->design, f->model, f->platform, ok);
  cost_estimate e_over = estimate(f->design, f->model, f->platform, over);
  REQUIRE(e_ok.feasible_80pct);
  REQUIRE_FALSE(e_over.feasible_80pct);
  CHECK(infeasible_objective(e_over, f->platform) > 1e15);
  CHECK(infeasible_objective(e_over, f->platform) >
        infeasible_objective(e_ok, f->platform));
}

TEST_CASE("search results replay for a fixed seed") {
  auto f = testsup::load_fixture("dotburst");
  explore_result a = explore(f->design, f->model, f->platform, quick_opts(1024, 42, 1));
  explore_result b = explore(f->design, f->model, f->platform, quick_opts(1024, 42, 1));

  CHECK(a.found_feasible);
  CHECK(a.evals == 1024);
  CHECK(a.best_point == b.best_point);
  CHECK(a.best_cost.cycles_total == b.best_cost.cycles_total);
  CHECK(same_trace(a, b));
  REQUIRE(a.arms.size() == b.arms.size());
  for (size_t i = 0; i < a.arms.size(); ++i) {
    CHECK(a.arms[i].proposals == b.arms[i].proposals);
    CHECK(a.arms[i].reward_sum == b.arms[i].reward_sum);
  }
}

TEST_CASE("worker count changes nothing but wall time") {
  auto f = testsup::load_fixture("seqalign");
  explore_result serial = explore(f->design, f->model, f->platform, quick_opts(640, 7, 1));
  explore_result threaded = explore(f->design, f->model, f->platform, quick_opts(640, 7, 3));
  CHECK(serial.best_point == threaded.best_point);
  CHECK(same_trace(serial, threaded));
}

TEST_CASE("the incumbent never worsens along a run") {
  auto f = testsup::load_fixture("lookup28");
  explore_result r = explore(f->design, f->model, f->platform, quick_opts(1600, 11, 1));
  REQUIRE(r.found_feasible);
  CHECK(r.best_cost.feasible_80pct);
  std::int64_t last = -1;
  for (const auto& row : r.trace) {
    if (row.best_cycles < 0) {
      CHECK(last == -1);  // no feasible point can be forgotten
      continue;
    }
    if (last > 0) CHECK(row.best_cycles <= last);
    last = row.best_cycles;
  }
  REQUIRE_FALSE(r.trace.empty());
  CHECK(r.trace.back().best_cycles == r.best_cost.cycles_total);
  CHECK(r.trace.back().evals == r.evals);
}

TEST_CASE("proposal counts add up across arms") {
  auto f = testsup::load_fixture("dotburst");
  explore_result r = explore(f->design, f->model, f->platform, quick_opts(800, 3, 1));
  std::set<std::string> names;
  std::uint64_t proposals = 0;
  for (const auto& a : r.arms) {
    names.insert(a.name);
    proposals += a.proposals;
    CHECK(a.feasible_hits <= a.proposals);
  }
  CHECK(proposals == r.evals);
  CHECK(names == std::set<std::string>{"annealing", "genetic", "hill_climb", "random"});
}

TEST_CASE("a wall-clock budget alone also terminates") {
  auto f = testsup::load_fixture("dotburst");
  explore_options o;
  o.budget_secs = 0.05;
  o.budget_evals = 0;  // unlimited evaluations
  o.seed = 1;
  o.jobs = 1;
  explore_result r = explore(f->design, f->model, f->platform, o);
  CHECK(r.evals > 0);
  CHECK(r.elapsed_ms >= 50.0);
}

TEST_CASE("a feasible best is preferred over any infeasible one") {
  // on the tight device the feasible region is a sliver; once any arm lands
  // in it the result must come from that region
  auto f = testsup::load_fixture("bytepack", "smallfpga");
  explore_result r = explore(f->design, f->model, f->platform, quick_opts(6000, 9, 1));
  if (r.found_feasible) {
    CHECK(r.best_cost.feasible_80pct);
    CHECK(r.best_cost.bram <= (f->platform.bram_blocks * 4) / 5);
  }
  CHECK(r.evals == 6000);
}

}  // TEST_SUITE
