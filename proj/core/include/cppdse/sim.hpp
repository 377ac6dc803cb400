#ifndef CPPDSE_SIM_HPP
#define CPPDSE_SIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cppdse/model.hpp"

namespace cppdse {

struct sim_config {
  std::int64_t startup_cycles = 0;  // fixed pipeline start-up cost
  bool record_gantt = true;
};

struct gantt_row {
  std::int64_t tile = 0;
  char stage = 'l';  // 'l' | 'c' | 's'
  std::int64_t start = 0, end = 0;
};

struct sim_result {
  std::int64_t total_cycles = 0;
  std::int64_t num_tiles = 0;
  std::int64_t busy_load = 0, busy_compute = 0, busy_store = 0;
  double util_load = 0, util_compute = 0, util_store = 0;
  std::vector<gantt_row> gantt;
};

// Replays the double-buffered three-stage pipeline tile by tile: iteration i
// loads tile i, computes tile i-1 and stores tile i-2; load and store share
// the off-chip port and never overlap, both overlap compute. The last tile
// may be partial and transfers/dispatches only its remainder.
sim_result simulate(const cpp_design& d, const model_constants& m, const platform_config& p,
                    const design_point& pt, const sim_config& cfg = {});

struct divergence_report {
  std::int64_t model_total = 0, sim_total = 0;
  double total_pct = 0;  // |model - sim| / sim * 100
  std::int64_t model_load = 0, sim_load = 0;
  std::int64_t model_compute = 0, sim_compute = 0;
  std::int64_t model_store = 0, sim_store = 0;
  double load_pct = 0, compute_pct = 0, store_pct = 0;
};

divergence_report compare_with_model(const cpp_design& d, const model_constants& m,
                                     const platform_config& p, const design_point& pt,
                                     const sim_config& cfg = {});

// CSV with header tile,stage,start_cycle,end_cycle.
std::string gantt_csv(const sim_result& r);

}  // namespace cppdse

#endif  // CPPDSE_SIM_HPP
