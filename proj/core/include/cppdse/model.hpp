#ifndef CPPDSE_MODEL_HPP
#define CPPDSE_MODEL_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cppdse/design.hpp"

namespace cppdse {

// Target device description. S_unit is the number of entries one physical
// block stores at width b_phy (the reading this artifact commits to).
struct platform_config {
  std::int64_t s_unit = 1024;
  std::int64_t b_phy = 36;
  std::int64_t bram_blocks = 2940;
  std::int64_t luts = 433200;
  std::int64_t ffs = 866400;
  std::int64_t dsps = 3600;
  std::int64_t axi_max_bits = 512;
  std::int64_t dram_latency_cycles = 20;
  double bytes_per_cycle_per_bit = 0.125;  // off-chip bytes/cycle per bit of port width
};

platform_config parse_platform(const std::string& json_text);
platform_config default_platform();

struct resource_sample {
  std::int64_t lut = 0, ff = 0, dsp = 0;
};

// Synthesis-report feed. Loops carry the initiation interval, the standalone
// iteration cycles and resource samples at two consecutive unroll factors;
// the per-unroll increment is recovered from the delta.
struct loop_report {
  std::int64_t ii = 1;
  std::optional<std::int64_t> tc;  // backs dynamic trip counts
  std::int64_t c_r = 0;
  std::int64_t uf_lo = 1;          // the two samples are at uf_lo and uf_lo+1
  resource_sample r_lo, r_hi;
  std::int64_t r_ctrl = 0, r_data = 0;
};

struct module_report {
  std::int64_t c_r = 0;
  resource_sample r_r;
};

struct buffer_report {  // optional per-array overrides
  std::optional<std::int64_t> r_ctrl, r_data;
  std::int64_t ff_r = 0;
};

struct synth_report {
  std::map<std::string, loop_report> loops;
  std::map<std::string, module_report> modules;
  std::map<std::string, buffer_report> buffers;

  const loop_report* find_loop(const std::string& id) const;
  const module_report* find_module(const std::string& id) const;
};

synth_report parse_report(const std::string& json_text);

class report_incomplete : public std::runtime_error {
 public:
  explicit report_incomplete(const std::string& id)
      : std::runtime_error("report incomplete: missing entry for '" + id + "'") {}
};

// Calibrated constants for one design, aligned with cpp_design::nodes and
// ::buffers. Negative per-unroll resource deltas clamp to zero and leave a
// warning behind.
struct model_constants {
  struct node_c {
    std::int64_t ii = 1;
    std::int64_t tc = 0;      // resolved trip count (0: use tile dispatch)
    bool tc_known = true;
    std::int64_t c_r = 0;
    std::int64_t lut_iter = 0, ff_iter = 0, dsp_iter = 0;  // loops: per-unroll increments
    std::int64_t lut_r = 0, ff_r = 0, dsp_r = 0;           // modules: standalone block
  };
  struct buffer_c {
    std::int64_t r_ctrl = 0, r_data = 0, ff_r = 0;
  };
  std::vector<node_c> nodes;
  std::vector<buffer_c> buffers;
  std::int64_t total_work = 0;  // PE-loop trip count after report substitution
  std::vector<std::string> warnings;
};

// Binds report values onto the design. Throws report_incomplete when a loop
// or module of the original hierarchy lacks an entry; synthesized structure
// ("$"-prefixed ids) defaults to zero-cost entries.
model_constants init_model(const cpp_design& d, const synth_report& report);

// --- primitive estimators -------------------------------------------------

// Pipelined loop latency: C_loop = C_iter + II * ceil(TC / UF)
std::int64_t cycles_loop(std::int64_t c_iter, std::int64_t ii, std::int64_t tc, std::int64_t uf);

// Blocks for one partition of s entries at width bw:
//   N_blk = ceil(bw / b_phy); V = ceil(s / (N_blk * S_unit)) * N_blk
std::int64_t n_blk(std::int64_t bw, const platform_config& p);
std::int64_t v_blocks(std::int64_t entries, std::int64_t bw, const platform_config& p);

// Whole buffer: PF partitions of ceil(S/PF) entries each, times the copy
// count (2 for double-buffered pairs).
std::int64_t bram_buffer(std::int64_t entries, std::int64_t pf, std::int64_t bw,
                         std::int64_t copies, const platform_config& p);

// Read multiplexer tree cost: sum over ceil(log4 k) levels of ceil(k / 4^i).
std::int64_t lut_mux(std::int64_t k);

// Per buffer: R_mem * (R_ctrl + R_data) + mux(PF) * bw summed over copies.
std::int64_t lut_buffer(std::int64_t mem_blocks_one_copy, std::int64_t r_ctrl,
                        std::int64_t r_data, std::int64_t pf, std::int64_t bw,
                        std::int64_t copies);

// Burst transfer: ceil(bits / port_bits_per_cycle) + DRAM latency.
std::int64_t burst_cycles(std::int64_t bits, std::int64_t bw, const platform_config& p);

// Whole-kernel assembly: num_tiles * max(C_l + C_s, C_c) + (C_l + C_s).
std::int64_t cycles_total(std::int64_t c_load, std::int64_t c_compute, std::int64_t c_store,
                          std::int64_t num_tiles);

// --- design-level evaluation ------------------------------------------------

struct cost_estimate {
  std::int64_t cycles_total = 0;  // whole kernel, fill/drain included
  std::int64_t cycles_load = 0;   // per full tile
  std::int64_t cycles_compute = 0;
  std::int64_t cycles_store = 0;
  std::int64_t num_tiles = 1;
  std::int64_t bram = 0, lut = 0, ff = 0, dsp = 0;
  double c2c = 0.0;  // cycles_compute / (cycles_load + cycles_store)
  bool computation_bound = false;
  double util_bram = 0, util_lut = 0, util_ff = 0, util_dsp = 0;
  bool feasible_80pct = false;
  bool fits_100pct = false;
};

// Per-tile stage cycles (exposed for the simulator, which shares them).
std::int64_t stage_io_cycles(const cpp_design& d, const model_constants& m,
                             const platform_config& p, const design_point& pt,
                             bool load_stage, std::int64_t items_in_tile);
std::int64_t stage_compute_cycles(const cpp_design& d, const model_constants& m,
                                  const design_point& pt, std::int64_t items_in_tile);

// Bursts that happen once per kernel run, outside the tile pipeline: initial
// fills of task-independent input arrays (load side) and final write-backs of
// task-independent outputs (store side).
std::int64_t one_time_io_cycles(const cpp_design& d, const platform_config& p,
                                const design_point& pt, bool load_side);

cost_estimate estimate(const cpp_design& d, const model_constants& m,
                       const platform_config& p, const design_point& pt);

}  // namespace cppdse

#endif  // CPPDSE_MODEL_HPP
