#ifndef CPPDSE_LEGALIZE_HPP
#define CPPDSE_LEGALIZE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cppdse/model.hpp"

namespace cppdse {

// Classification of an off-chip array relative to a PE-loop candidate.
struct array_class {
  const array_decl* array = nullptr;
  bool task_dependent = false;
  // task-dependent: elements consumed per PE-iterator step
  bool chunk_static = false;
  std::int64_t chunk_elems = 0;
  // task-independent: whole-array footprint
  bool size_static = false;
  std::int64_t total_elems = 0;
};

std::vector<array_class> classify_arrays(const arch_hierarchy& h, const std::string& pe_loop);

struct check_result {
  bool ok = true;
  std::string message;
};

// Task-dependent chunks must be statically sized and non-overlapping
// (constant coefficient a, constant offset b, b < a).
check_result check_task_dependent(const arch_hierarchy& h, const std::string& pe_loop,
                                  const std::vector<array_class>& classes);

// Task-independent arrays are duplicated per PE; their combined footprint at
// the maximum PE count must fit the BRAM budget, and must be inferable.
check_result check_task_independent(const arch_hierarchy& h, const std::string& pe_loop,
                                    const std::vector<array_class>& classes,
                                    const platform_config& platform);

// The whole template at the minimal design point must fit the device (100%
// budgets). Throws report_incomplete when the report lacks base entries.
check_result check_kernel_size(const arch_hierarchy& h, const std::string& pe_loop,
                               const synth_report& report, const platform_config& platform);

struct check_failure {
  std::string pe_loop;
  std::string check;  // "task_dependent" | "task_independent" | "kernel_size"
  std::string message;
};

struct legalization_verdict {
  bool legal = false;
  std::vector<std::string> pe_loop_candidates;  // passing loops, pre-order
  std::vector<check_failure> failures;
};

// Tries every loop of the nest as the PE loop and keeps the survivors.
legalization_verdict legalize(const arch_hierarchy& h, const synth_report& report,
                              const platform_config& platform);

}  // namespace cppdse

#endif  // CPPDSE_LEGALIZE_HPP
