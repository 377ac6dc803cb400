#include "cppdse/dse.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <thread>

namespace cppdse {

double infeasible_objective(const cost_estimate& c, const platform_config& p) {
  (void)p;
  double overuse = 0;
  for (double u : {c.util_bram, c.util_lut, c.util_ff, c.util_dsp})
    overuse += std::max(0.0, u - 0.8);
  // far above any cycle count, ordered by how badly the budget is blown, with
  // cycles as a mild secondary pull so gradients exist inside the wall
  return 1e15 * (1.0 + overuse) + static_cast<double>(c.cycles_total) * 1e-3;
}

namespace {

design_point random_point(const design_space& s, std::mt19937_64& rng) {
  design_point pt;
  pt.reserve(s.params.size());
  for (const auto& prm : s.params)
    pt.push_back(prm.values[rng() % prm.values.size()]);
  return pt;
}

// one-parameter mutation with geometric step sizes, in index space
design_point step_point(const design_space& s, const design_point& base, std::mt19937_64& rng) {
  design_point pt = base;
  for (int attempt = 0; attempt < 4; ++attempt) {
    const size_t pi = rng() % s.params.size();
    const auto& prm = s.params[pi];
    const auto n = static_cast<std::int64_t>(prm.values.size());
    if (n <= 1) continue;
    const std::int64_t delta = std::int64_t{1} << (rng() % 5);  // 1,2,4,8,16
    const std::int64_t sign = (rng() & 1) ? 1 : -1;
    std::int64_t idx = prm.index_of(pt[pi]) + sign * delta;
    idx = std::clamp<std::int64_t>(idx, 0, n - 1);
    if (prm.values[static_cast<size_t>(idx)] != pt[pi]) {
      pt[pi] = prm.values[static_cast<size_t>(idx)];
      return pt;
    }
  }
  return pt;  // rare: everything clamped back onto itself
}

class random_search final : public search_technique {
 public:
  std::string name() const override { return "random"; }
  design_point propose(const search_context& ctx, std::mt19937_64& rng) override {
    return random_point(*ctx.space, rng);
  }
  void feedback(const eval_outcome&, const search_context&, std::mt19937_64&) override {}
};

class hill_climb final : public search_technique {
 public:
  std::string name() const override { return "hill_climb"; }

  design_point propose(const search_context& ctx, std::mt19937_64& rng) override {
    if (!cur_) return random_point(*ctx.space, rng);
    return step_point(*ctx.space, cur_->point, rng);
  }

  void feedback(const eval_outcome& out, const search_context& ctx, std::mt19937_64&) override {
    if (!cur_ || out.objective <= cur_->objective) {  // <= : walk plateaus
      cur_ = out;
      rejects_ = 0;
      return;
    }
    if (++rejects_ >= 24) {  // stuck: restart from the global best
      if (ctx.best) cur_ = *ctx.best;
      rejects_ = 0;
    }
  }

 private:
  std::optional<eval_outcome> cur_;
  int rejects_ = 0;
};

class annealing final : public search_technique {
 public:
  std::string name() const override { return "annealing"; }

  design_point propose(const search_context& ctx, std::mt19937_64& rng) override {
    if (!cur_) return random_point(*ctx.space, rng);
    return step_point(*ctx.space, cur_->point, rng);
  }

  void feedback(const eval_outcome& out, const search_context&, std::mt19937_64& rng) override {
    if (!cur_) {
      cur_ = out;
    } else {
      const double denom = std::max(std::abs(cur_->objective), 1e-9);
      const double rel = (out.objective - cur_->objective) / denom;
      if (rel <= 0) {
        cur_ = out;
      } else {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (std::exp(-rel / temp_) > u) cur_ = out;
      }
    }
    temp_ = std::max(temp_ * 0.998, 0.005);
  }

 private:
  std::optional<eval_outcome> cur_;
  double temp_ = 0.35;
};

class genetic final : public search_technique {
 public:
  std::string name() const override { return "genetic"; }

  design_point propose(const search_context& ctx, std::mt19937_64& rng) override {
    const design_space& s = *ctx.space;
    if (pop_.size() < 8) return random_point(s, rng);
    const eval_outcome& a = tournament(rng);
    const eval_outcome& b = tournament(rng);
    design_point child(s.params.size());
    for (size_t i = 0; i < s.params.size(); ++i) {
      child[i] = (rng() & 1) ? a.point[i] : b.point[i];
      if (rng() % 100 < 15)  // mutation keeps diversity up
        child[i] = s.params[i].values[rng() % s.params[i].values.size()];
    }
    return child;
  }

  void feedback(const eval_outcome& out, const search_context&, std::mt19937_64&) override {
    auto pos = std::lower_bound(pop_.begin(), pop_.end(), out.objective,
                                [](const eval_outcome& e, double v) { return e.objective < v; });
    pop_.insert(pos, out);
    if (pop_.size() > 24) pop_.pop_back();
  }

 private:
  const eval_outcome& tournament(std::mt19937_64& rng) {
    const size_t i = rng() % pop_.size();
    const size_t j = rng() % pop_.size();
    return pop_[std::min(i, j)];  // pop_ is sorted, lower index = better
  }
  std::vector<eval_outcome> pop_;
};

}  // namespace

std::unique_ptr<search_technique> make_random_search() { return std::make_unique<random_search>(); }
std::unique_ptr<search_technique> make_hill_climb() { return std::make_unique<hill_climb>(); }
std::unique_ptr<search_technique> make_annealing() { return std::make_unique<annealing>(); }
std::unique_ptr<search_technique> make_genetic() { return std::make_unique<genetic>(); }

std::vector<std::unique_ptr<search_technique>> builtin_techniques() {
  std::vector<std::unique_ptr<search_technique>> v;
  v.push_back(make_random_search());
  v.push_back(make_hill_climb());
  v.push_back(make_annealing());
  v.push_back(make_genetic());
  return v;
}

// ---------------------------------------------------------------------------
// Bandit scheduler

namespace {

constexpr size_t kRoundSize = 16;
constexpr size_t kWindow = 64;
constexpr double kFloorWeight = 0.05;

struct arm_state {
  std::unique_ptr<search_technique> tech;
  arm_stats stats;
  std::deque<double> window;

  double window_sum() const {
    double s = 0;
    for (double r : window) s += r;
    return s;
  }
  void push_reward(double r) {
    stats.reward_sum += r;
    window.push_back(r);
    if (window.size() > kWindow) window.pop_front();
  }
};

// largest-remainder split of `total` proposals across the enabled arms
std::vector<size_t> allocate(const std::vector<arm_state>& arms, size_t total) {
  std::vector<size_t> out(arms.size(), 0);
  std::vector<double> w(arms.size(), 0.0);
  double wsum = 0;
  for (size_t i = 0; i < arms.size(); ++i) {
    if (arms[i].stats.disabled) continue;
    const double mean =
        arms[i].window.empty() ? 0.0 : arms[i].window_sum() / static_cast<double>(arms[i].window.size());
    w[i] = std::max(mean, 0.0) + kFloorWeight;
    wsum += w[i];
  }
  if (wsum <= 0) return out;

  std::vector<std::pair<double, size_t>> rema;
  size_t assigned = 0;
  for (size_t i = 0; i < arms.size(); ++i) {
    if (w[i] == 0) continue;
    const double quota = static_cast<double>(total) * w[i] / wsum;
    out[i] = static_cast<size_t>(quota);
    assigned += out[i];
    rema.push_back({quota - std::floor(quota), i});
  }
  std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (size_t k = 0; assigned < total && k < rema.size(); ++k, ++assigned) out[rema[k].second]++;
  // spillover when fewer arms than leftovers (all fractions consumed)
  for (size_t i = 0; assigned < total; i = (i + 1) % arms.size())
    if (w[i] > 0) {
      out[i]++;
      assigned++;
    }
  return out;
}

eval_outcome evaluate_point(const cpp_design& d, const model_constants& m,
                            const platform_config& p, design_point pt) {
  eval_outcome out;
  out.cost = estimate(d, m, p, pt);
  out.point = std::move(pt);
  out.feasible = out.cost.feasible_80pct;
  out.objective = out.feasible ? static_cast<double>(out.cost.cycles_total)
                               : infeasible_objective(out.cost, p);
  return out;
}

bool outcome_better(const eval_outcome& a, const eval_outcome& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.objective != b.objective) return a.objective < b.objective;
  if (a.cost.bram != b.cost.bram) return a.cost.bram < b.cost.bram;
  if (a.cost.lut != b.cost.lut) return a.cost.lut < b.cost.lut;
  return a.point < b.point;
}

}  // namespace

explore_result explore(const cpp_design& d, const model_constants& m, const platform_config& p,
                       const explore_options& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  const design_space space = build_design_space(d);
  std::mt19937_64 rng(opts.seed);

  std::vector<arm_state> arms;
  for (auto& t : builtin_techniques()) {
    arm_state a;
    a.stats.name = t->name();
    a.tech = std::move(t);
    arms.push_back(std::move(a));
  }

  search_context ctx;
  ctx.space = &space;

  explore_result res;
  std::optional<eval_outcome> best_any;  // including infeasible, for reporting

  while (true) {
    if (opts.budget_evals > 0 && ctx.evals_done >= opts.budget_evals) break;
    if (opts.budget_evals == 0 && elapsed_ms() >= opts.budget_secs * 1000.0) break;
    if (opts.budget_evals > 0 && opts.budget_secs > 0 &&
        elapsed_ms() >= opts.budget_secs * 1000.0)
      break;

    size_t round = kRoundSize;
    if (opts.budget_evals > 0)
      round = std::min<std::uint64_t>(round, opts.budget_evals - ctx.evals_done);

    const auto counts = allocate(arms, round);
    std::vector<std::pair<size_t, design_point>> batch;  // (arm, point), proposal order
    batch.reserve(round);
    for (size_t ai = 0; ai < arms.size(); ++ai)
      for (size_t k = 0; k < counts[ai]; ++k)
        batch.push_back({ai, arms[ai].tech->propose(ctx, rng)});
    if (batch.empty()) break;

    // evaluation order never matters: results land by index and all feedback
    // happens afterwards in proposal order, so jobs only changes wall time
    std::vector<eval_outcome> results(batch.size());
    const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(batch.size())));
    if (jobs == 1) {
      for (size_t i = 0; i < batch.size(); ++i)
        results[i] = evaluate_point(d, m, p, batch[i].second);
    } else {
      std::atomic<size_t> next{0};
      std::vector<std::thread> pool;
      pool.reserve(static_cast<size_t>(jobs));
      for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
          for (size_t i = next.fetch_add(1); i < batch.size(); i = next.fetch_add(1))
            results[i] = evaluate_point(d, m, p, batch[i].second);
        });
      for (auto& th : pool) th.join();
    }

    for (size_t i = 0; i < batch.size(); ++i) {
      arm_state& arm = arms[batch[i].first];
      const eval_outcome& out = results[i];
      ctx.evals_done++;
      arm.stats.proposals++;

      double reward = 0;
      if (out.feasible) {
        arm.stats.feasible_hits++;
        if (!ctx.best) {
          reward = 1.0;  // first feasible point is the big prize
          arm.stats.improvements++;
        } else if (out.objective < ctx.best->objective) {
          const double prev = ctx.best->objective;
          reward = std::clamp((prev - out.objective) / prev, 0.0, 1.0);
          arm.stats.improvements++;
        }
        if (!ctx.best || outcome_better(out, *ctx.best)) ctx.best = out;
      }
      arm.push_reward(reward);
      if (!best_any || outcome_better(out, *best_any)) best_any = out;
      arm.tech->feedback(out, ctx, rng);
    }

    // a long-dry arm gets benched once some other arm still earns
    size_t enabled = 0;
    for (const auto& a : arms)
      if (!a.stats.disabled) enabled++;
    for (auto& a : arms) {
      if (a.stats.disabled || enabled <= 1) continue;
      if (a.stats.proposals < 128 || a.window.size() < kWindow) continue;
      if (a.window_sum() > 0) continue;
      bool someone_earning = false;
      for (const auto& other : arms)
        if (&other != &a && !other.stats.disabled && other.window_sum() > 0)
          someone_earning = true;
      if (someone_earning) {
        a.stats.disabled = true;
        enabled--;
      }
    }

    if (opts.record_trace) {
      trace_row row;
      row.time_ms = elapsed_ms();
      row.evals = ctx.evals_done;
      row.best_cycles = ctx.best ? ctx.best->cost.cycles_total : -1;
      res.trace.push_back(row);
    }
  }

  res.found_feasible = ctx.best.has_value();
  const std::optional<eval_outcome>& pick = ctx.best ? ctx.best : best_any;
  if (pick) {
    res.best_point = pick->point;
    res.best_cost = pick->cost;
  }
  res.evals = ctx.evals_done;
  res.elapsed_ms = elapsed_ms();
  for (auto& a : arms) {
    a.stats.window_reward = a.window_sum();
    res.arms.push_back(a.stats);
  }
  return res;
}

exhaustive_result exhaustive_search(const cpp_design& d, const model_constants& m,
                                    const platform_config& p, std::uint64_t max_points) {
  std::uint64_t card = 1;
  bool overflow = false;
  for (const auto& prm : d.params) {
    const auto n = static_cast<std::uint64_t>(prm.values.size());
    if (card > max_points / n) {  // card * n would pass max_points
      overflow = true;
      break;
    }
    card *= n;
  }
  if (overflow || card > max_points) {
    const design_space s = build_design_space(d);
    throw std::invalid_argument("design space holds " + s.cardinality +
                                " points, more than the exhaustive limit of " +
                                std::to_string(max_points));
  }

  exhaustive_result res;
  std::optional<eval_outcome> best;
  std::vector<size_t> idx(d.params.size(), 0);
  design_point pt(d.params.size());
  while (true) {
    for (size_t i = 0; i < d.params.size(); ++i) pt[i] = d.params[i].values[idx[i]];
    eval_outcome out = evaluate_point(d, m, p, pt);
    res.evals++;
    if (!best || outcome_better(out, *best)) best = std::move(out);

    bool wrapped = false;
    size_t i = d.params.size();
    while (true) {
      if (i == 0) {  // odometer wrapped all the way around: done
        wrapped = true;
        break;
      }
      --i;
      if (++idx[i] < d.params[i].values.size()) break;
      idx[i] = 0;
    }
    if (wrapped) break;
  }
  if (best) {
    res.found_feasible = best->feasible;
    res.best_point = best->point;
    res.best_cost = best->cost;
  }
  return res;
}

}  // namespace cppdse
