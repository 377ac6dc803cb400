#ifndef CPPDSE_DSE_HPP
#define CPPDSE_DSE_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cppdse/legalize.hpp"
#include "cppdse/model.hpp"

namespace cppdse {

// Objective seen by the search techniques. Infeasible points are not hidden:
// they come back with a penalty that grows with resource overuse so a
// technique can learn where the boundary is.
struct eval_outcome {
  design_point point;
  cost_estimate cost;
  bool feasible = false;
  double objective = 0;  // cycles if feasible, penalty otherwise (lower is better)
};

struct search_context {
  const design_space* space = nullptr;
  // Best feasible point so far, if any. Shared across techniques.
  std::optional<eval_outcome> best;
  std::uint64_t evals_done = 0;
};

// A technique proposes candidate points and hears back about every point it
// proposed. Implementations must draw randomness only from the rng handed in,
// so runs replay exactly for a given seed.
class search_technique {
 public:
  virtual ~search_technique() = default;
  virtual std::string name() const = 0;
  virtual design_point propose(const search_context& ctx, std::mt19937_64& rng) = 0;
  virtual void feedback(const eval_outcome& out, const search_context& ctx,
                        std::mt19937_64& rng) = 0;
};

std::unique_ptr<search_technique> make_random_search();
std::unique_ptr<search_technique> make_hill_climb();
std::unique_ptr<search_technique> make_annealing();
std::unique_ptr<search_technique> make_genetic();
std::vector<std::unique_ptr<search_technique>> builtin_techniques();

struct arm_stats {
  std::string name;
  std::uint64_t proposals = 0;
  std::uint64_t feasible_hits = 0;
  std::uint64_t improvements = 0;
  double reward_sum = 0;       // lifetime
  double window_reward = 0;    // over the sliding window
  bool disabled = false;
};

struct trace_row {
  double time_ms = 0;
  std::uint64_t evals = 0;
  std::int64_t best_cycles = -1;  // -1 until a feasible point is found
};

struct explore_options {
  double budget_secs = 180.0;          // wall-clock budget (default)
  std::uint64_t budget_evals = 0;      // 0 = unlimited, stop on time only
  std::uint64_t seed = 1905;
  int jobs = 1;
  bool record_trace = false;
};

struct explore_result {
  bool found_feasible = false;
  design_point best_point;
  cost_estimate best_cost;
  std::uint64_t evals = 0;
  double elapsed_ms = 0;
  std::vector<arm_stats> arms;
  std::vector<trace_row> trace;
};

// Bandit-driven search over the design space of one accelerator candidate.
// Results depend only on the seed and the budgets, never on jobs.
explore_result explore(const cpp_design& d, const model_constants& m, const platform_config& p,
                       const explore_options& opts);

struct exhaustive_result {
  bool found_feasible = false;
  design_point best_point;
  cost_estimate best_cost;
  std::uint64_t evals = 0;
};

// Walks every point in the space. Refuses spaces larger than max_points
// (throws std::invalid_argument) so a typo cannot pin a machine for days.
// Ties on cycles break toward lower BRAM, then lower LUT, then the
// lexicographically smaller point, so the result is a single well-defined
// answer.
exhaustive_result exhaustive_search(const cpp_design& d, const model_constants& m,
                                    const platform_config& p,
                                    std::uint64_t max_points = 1000000);

// Penalty objective used for infeasible points; exposed for tests.
double infeasible_objective(const cost_estimate& c, const platform_config& p);

}  // namespace cppdse

#endif  // CPPDSE_DSE_HPP
