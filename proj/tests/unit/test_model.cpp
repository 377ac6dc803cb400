#include <doctest.h>

#include <cstdint>
#include <random>
#include <string>

#include "cppdse/model.hpp"
#include "support/fixtures.hpp"

using namespace cppdse;

namespace {

const model_constants::node_c& constants_for(const testsup::fixture& f, const std::string& id) {
  for (size_t i = 0; i < f.design.nodes.size(); ++i)
    if (f.design.nodes[i].id == id) return f.model.nodes[i];
  throw std::runtime_error("no node " + id);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("platform parsing applies defaults and rejects junk") {
  platform_config def = default_platform();
  platform_config empty = parse_platform("{}");
  CHECK(empty.s_unit == def.s_unit);
  CHECK(empty.b_phy == def.b_phy);
  CHECK(empty.bram_blocks == def.bram_blocks);
  CHECK(empty.luts == def.luts);
  CHECK(empty.axi_max_bits == def.axi_max_bits);

  platform_config v7 =
      parse_platform(testsup::read_file(testsup::fixture_dir() + "/platforms/virtex7.json"));
  CHECK(v7.bram_blocks == 2940);
  CHECK(v7.dram_latency_cycles == 20);
  CHECK(v7.b_phy == 36);

  CHECK_THROWS_WITH_AS(parse_platform("{\"lutz\": 3}"),
                       doctest::Contains("unknown platform key 'lutz'"), parse_error);
  CHECK_THROWS_WITH_AS(parse_platform("{\"luts\": 0}"), doctest::Contains("positive"),
                       parse_error);
  CHECK_THROWS_AS(parse_platform("nope"), parse_error);
}

TEST_CASE("report parsing is strict about keys and sample placement") {
  CHECK_THROWS_WITH_AS(
      parse_report(R"({"loops": {"i": {"ii": 1, "c_r": 1, "uf": [1, 3],
                     "lut": [10, 20], "ff": [10, 20], "dsp": [0, 0]}}})"),
      doctest::Contains("consecutive"), parse_error);
  CHECK_THROWS_WITH_AS(
      parse_report(R"({"loops": {"i": {"ii": 0, "c_r": 1, "uf": [1, 2],
                     "lut": [10, 20], "ff": [10, 20], "dsp": [0, 0]}}})"),
      doctest::Contains("ii must be at least 1"), parse_error);
  CHECK_THROWS_WITH_AS(
      parse_report(R"({"loops": {"i": {"ii": 1, "c_r": 1, "frobnicate": 3}}})"),
      doctest::Contains("unknown loop report key 'frobnicate'"), parse_error);
  CHECK_THROWS_WITH_AS(parse_report(R"({"wires": {}})"),
                       doctest::Contains("unknown report section 'wires'"), parse_error);

  synth_report r = parse_report(
      testsup::read_file(testsup::fixture_dir() + "/reports/dotburst.json"));
  REQUIRE(r.find_loop("i") != nullptr);
  CHECK(r.find_loop("i")->ii == 2);
  CHECK(r.find_loop("i")->r_lo.lut == 200);
  CHECK(r.find_loop("i")->r_hi.lut == 260);
  REQUIRE(r.find_module("engine") != nullptr);
  CHECK(r.find_module("engine")->r_r.lut == 300);
  CHECK(r.find_loop("nope") == nullptr);
}

TEST_CASE("loop cycle primitive") {
  CHECK(cycles_loop(10, 2, 48, 48) == 12);
  CHECK(cycles_loop(10, 2, 48, 1) == 106);
  CHECK(cycles_loop(0, 1, 1000, 3) == 334);
  CHECK(cycles_loop(7, 3, 1, 1) == 10);
}

TEST_CASE("memory block packing primitives") {
  platform_config p = default_platform();  // 1024 entries per block at 36 bits
  CHECK(n_blk(16, p) == 1);
  CHECK(n_blk(36, p) == 1);
  CHECK(n_blk(37, p) == 2);
  CHECK(n_blk(512, p) == 15);
  CHECK(v_blocks(1024, 36, p) == 1);
  CHECK(v_blocks(1025, 36, p) == 2);
  CHECK(v_blocks(48, 16, p) == 1);
  CHECK(v_blocks(2048, 72, p) == 2);

  CHECK(bram_buffer(48, 48, 16, 1, p) == 48);
  CHECK(bram_buffer(48, 48, 16, 2, p) == 96);

  // block counts depend on the width only through the ganging factor
  std::int64_t at37 = v_blocks(5000, 37, p);
  for (std::int64_t bw = 38; bw <= 72; ++bw) CHECK(v_blocks(5000, bw, p) == at37);
  // one gang of two blocks holds exactly 2048 entries; a three-block gang
  // cannot be fractionally occupied, so the same depth costs a full extra block
  CHECK(v_blocks(2048, 37, p) == 2);
  CHECK(v_blocks(2048, 73, p) == 3);

  // partition bumps can round capacity down: 4100 entries at one block per
  // partition pair beat the 4-way split that wastes half of each block pair
  CHECK(bram_buffer(4100, 4, 16, 1, p) == 8);
  CHECK(bram_buffer(4100, 5, 16, 1, p) == 5);

  // doubling the partition factor never frees blocks
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    std::int64_t s = 1 + static_cast<std::int64_t>(rng() % 100000);
    std::int64_t pf = 1 + static_cast<std::int64_t>(rng() % 32);
    std::int64_t bw = 1 + static_cast<std::int64_t>(rng() % 512);
    CHECK(bram_buffer(s, 2 * pf, bw, 1, p) >= bram_buffer(s, pf, bw, 1, p));
  }
}

TEST_CASE("read multiplexer cost") {
  platform_config p = default_platform();
  (void)p;
  CHECK(lut_mux(0) == 0);
  CHECK(lut_mux(1) == 0);
  CHECK(lut_mux(2) == 1);
  CHECK(lut_mux(4) == 1);
  CHECK(lut_mux(5) == 3);
  CHECK(lut_mux(16) == 5);
  CHECK(lut_mux(48) == 16);
  CHECK(lut_mux(64) == 21);
  CHECK(lut_mux(256) == 85);
  // closed form at powers of four: (4^n - 1) / 3
  for (std::int64_t n = 1, k = 4; n <= 6; ++n, k *= 4) CHECK(lut_mux(k) == (k - 1) / 3);
}

TEST_CASE("buffer LUT cost") {
  CHECK(lut_buffer(48, 8, 4, 48, 16, 2) == 2 * (48 * 12 + 16 * 16));
  CHECK(lut_buffer(10, 6, 3, 1, 512, 2) == 180);  // single partition needs no mux
}

TEST_CASE("burst transfer cycles") {
  platform_config p = default_platform();
  CHECK(burst_cycles(0, 512, p) == 0);
  CHECK(burst_cycles(768, 16, p) == 68);
  CHECK(burst_cycles(768, 512, p) == 22);
  CHECK(burst_cycles(1, 512, p) == 21);
  platform_config slow = p;
  slow.dram_latency_cycles = 50000;
  CHECK(burst_cycles(1600000, 512, slow) == 53125);
}

TEST_CASE("whole-kernel cycle assembly") {
  CHECK(cycles_total(22, 2009, 22, 1) == 2053);
  CHECK(cycles_total(30, 35, 30, 24) == 1500);
  CHECK(cycles_total(100, 10, 100, 5) == 1200);  // io bound: 5*200 + 200
}

TEST_CASE("model constants bind report entries onto the design") {
  auto f = testsup::load_fixture("dotburst");
  CHECK(f->model.total_work == 48);
  CHECK(f->model.warnings.empty());

  const auto& mac = constants_for(*f, "mac");
  CHECK(mac.ii == 1);
  CHECK(mac.tc == 2000);
  CHECK(mac.c_r == 4);
  CHECK(mac.lut_iter == 120);
  CHECK(mac.ff_iter == 200);
  CHECK(mac.dsp_iter == 3);

  const auto& engine = constants_for(*f, "engine");
  CHECK(engine.c_r == 2);
  CHECK(engine.lut_r == 300);

  const auto& tiles = constants_for(*f, "$tiles");
  CHECK(tiles.c_r == 0);
  CHECK(tiles.ii == 1);

  REQUIRE(f->model.buffers.size() == 2);
  CHECK(f->model.buffers[0].r_ctrl == 8);  // inherited from the binding loop
  CHECK(f->model.buffers[0].r_data == 4);
  CHECK(f->model.buffers[0].ff_r == 10);
}

TEST_CASE("negative per-unroll deltas clamp with a warning") {
  auto f = testsup::load_fixture("dotburst");
  synth_report bad = f->report;
  bad.loops["mac"].r_hi.lut = 400;  // below the lut sample at the lower factor
  model_constants m = init_model(f->design, bad);
  REQUIRE_FALSE(m.warnings.empty());
  CHECK(m.warnings[0].find("clamped") != std::string::npos);
  CHECK(m.warnings[0].find("mac") != std::string::npos);
  for (size_t i = 0; i < f->design.nodes.size(); ++i) {
    if (f->design.nodes[i].id == "mac") CHECK(m.nodes[i].lut_iter == 0);
  }
}

TEST_CASE("missing report entries raise report_incomplete") {
  kernel_spec spec = parse_kernel_spec(
      testsup::read_file(testsup::fixture_dir() + "/kernels/nw_like.json"));
  arch_hierarchy h = build_hierarchy(spec);
  synth_report rep = parse_report(
      testsup::read_file(testsup::fixture_dir() + "/reports/nw_missing.json"));
  cpp_design d = construct_design(h, "pairs");
  CHECK_THROWS_WITH_AS(init_model(d, rep),
                       "report incomplete: missing entry for 'align'", report_incomplete);
}

TEST_CASE("cost estimate on a fully resolved configuration") {
  auto f = testsup::load_fixture("dotburst");
  design_point pt =
      testsup::named_point(f->design, {{"tile", 48}, {"pe", 48}, {"bw.x", 16}, {"bw.s", 16}});
  cost_estimate e = estimate(f->design, f->model, f->platform, pt);

  CHECK(e.num_tiles == 1);
  CHECK(e.cycles_load == 68);
  CHECK(e.cycles_store == 68);
  CHECK(e.cycles_compute == 2009);
  CHECK(e.cycles_total == 2145);
  CHECK(e.cycles_total ==
        cycles_total(e.cycles_load, e.cycles_compute, e.cycles_store, e.num_tiles));

  CHECK(e.bram == 192);
  CHECK(e.lut == 26368);
  CHECK(e.ff == 27944);
  CHECK(e.dsp == 336);

  CHECK(e.c2c == doctest::Approx(2009.0 / 136.0));
  CHECK(e.computation_bound);
  CHECK(e.feasible_80pct);
  CHECK(e.fits_100pct);
  CHECK(e.util_bram == doctest::Approx(192.0 / 2940.0));
}

TEST_CASE("estimate covers io-bound shapes and partial tiles") {
  auto f = testsup::load_fixture("bytepack", "smallfpga");
  design_point pt = testsup::named_point(
      f->design, {{"tile", 10}, {"pe", 1}, {"bw.src", 512}, {"bw.dst", 512}});
  cost_estimate e = estimate(f->design, f->model, f->platform, pt);
  CHECK(e.num_tiles == 24);
  CHECK(e.cycles_load == 30);
  CHECK(e.cycles_store == 30);
  CHECK(e.cycles_compute == 55);
  CHECK(e.cycles_total == 1500);
  CHECK(e.bram == 40);
  CHECK_FALSE(e.computation_bound);
  CHECK(e.c2c < 1.0);
  CHECK(e.feasible_80pct);

  // partial tile: the model still charges every tile at the full size
  design_point pt7 = testsup::named_point(
      f->design, {{"tile", 7}, {"pe", 1}, {"bw.src", 512}, {"bw.dst", 512}});
  cost_estimate e7 = estimate(f->design, f->model, f->platform, pt7);
  CHECK(e7.num_tiles == 35);  // ceil(240 / 7)
  CHECK(e7.cycles_total == 35 * std::max<std::int64_t>(e7.cycles_load + e7.cycles_store,
                                                       e7.cycles_compute) +
                               e7.cycles_load + e7.cycles_store);
}

TEST_CASE("one-time transfers cover task-independent arrays only") {
  auto f = testsup::load_fixture("lookup28");
  design_point pt = testsup::named_point(
      f->design,
      {{"tile", 28}, {"pe", 14}, {"bw.keys", 512}, {"bw.results", 512}, {"bw.table", 512}});
  CHECK(one_time_io_cycles(f->design, f->platform, pt, true) == 148);
  CHECK(one_time_io_cycles(f->design, f->platform, pt, false) == 0);

  cost_estimate e = estimate(f->design, f->model, f->platform, pt);
  CHECK(e.num_tiles == 1);
  CHECK(e.cycles_load == 34);
  CHECK(e.cycles_store == 24);
  CHECK(e.cycles_compute == 813);
  CHECK(e.cycles_total == 1019);  // 813 + 58 + one-time 148
  CHECK(e.bram == 2310);
  CHECK(e.feasible_80pct);

  // one more PE replica tips the 80% block budget (2475 of 2940) but still fits
  design_point pt15 = testsup::named_point(
      f->design,
      {{"tile", 28}, {"pe", 15}, {"bw.keys", 512}, {"bw.results", 512}, {"bw.table", 512}});
  cost_estimate e15 = estimate(f->design, f->model, f->platform, pt15);
  CHECK(e15.bram == 2475);
  CHECK_FALSE(e15.feasible_80pct);
  CHECK(e15.fits_100pct);

  CHECK_THROWS_AS(estimate(f->design, f->model, f->platform, design_point{1, 2, 3}),
                  std::invalid_argument);
}

}  // TEST_SUITE
