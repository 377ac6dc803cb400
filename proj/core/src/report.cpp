#include "cppdse/report.hpp"

#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cppdse/dse.hpp"
#include "cppdse/legalize.hpp"
#include "cppdse/sim.hpp"

namespace cppdse {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot read file", path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json manifest_obj(const cli_options& o) {
  ordered_json m;
  m["tool"] = tool_name;
  m["version"] = tool_version;
  m["created_utc"] = utc_now();
  m["command"] = o.subcommand;
  ordered_json in;
  in["kernel"] = o.kernel_path;
  in["report"] = o.report_path;
  in["platform"] = o.platform_path.empty() ? "builtin" : o.platform_path;
  if (!o.point_path.empty()) in["point"] = o.point_path;
  m["inputs"] = in;
  m["seed"] = o.seed;
  m["jobs"] = o.jobs;
  m["budget_secs"] = o.budget_secs;
  m["budget_evals"] = o.budget_evals;
  return m;
}

std::filesystem::path artifact_path(const cli_options& o, const std::string& name) {
  std::filesystem::path dir = o.out_dir.empty() ? "." : o.out_dir;
  if (!o.out_dir.empty()) std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error("cannot write file", path.string());
  out << content;
}

void write_artifact(const cli_options& o, const std::string& name, const ordered_json& j) {
  write_file(artifact_path(o, name), j.dump(2) + "\n");
}

struct loaded_inputs {
  kernel_spec spec;
  arch_hierarchy h;
  synth_report report;
  platform_config platform;
};

// Fills `li` in place. The hierarchy keeps pointers into li.spec, so it must
// be built after the spec has reached its final address; returning a
// loaded_inputs by value would leave h.spec dangling.
void load_common(const cli_options& o, loaded_inputs& li) {
  if (o.kernel_path.empty()) throw parse_error("a kernel file is required", "--kernel");
  if (o.report_path.empty()) throw parse_error("a synthesis report is required", "--report");
  li.spec = parse_kernel_spec(slurp(o.kernel_path));
  li.report = parse_report(slurp(o.report_path));
  li.platform = o.platform_path.empty() ? default_platform() : parse_platform(slurp(o.platform_path));
  li.h = build_hierarchy(li.spec);
}

design_point load_point(const cpp_design& d, const std::string& path) {
  json j;
  try {
    j = json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw parse_error(e.what(), path);
  }
  if (j.contains("point")) j = j["point"];
  if (!j.is_object()) throw parse_error("point file must hold an object of parameter values", path);

  design_point pt(d.params.size());
  std::vector<bool> seen(d.params.size(), false);
  for (const auto& [key, val] : j.items()) {
    int pi = -1;
    for (size_t i = 0; i < d.params.size(); ++i)
      if (d.params[i].name == key) pi = static_cast<int>(i);
    if (pi < 0) throw parse_error("unknown parameter '" + key + "'", path);
    if (!val.is_number_integer()) throw parse_error("parameter '" + key + "' must be an integer", path);
    pt[static_cast<size_t>(pi)] = val.get<std::int64_t>();
    seen[static_cast<size_t>(pi)] = true;
  }
  for (size_t i = 0; i < d.params.size(); ++i)
    if (!seen[i]) throw parse_error("missing parameter '" + d.params[i].name + "'", path);
  return pt;
}

design_point minimal_point(const cpp_design& d) {
  design_point pt;
  pt.reserve(d.params.size());
  for (const auto& prm : d.params) pt.push_back(prm.values.front());
  return pt;
}

ordered_json point_obj(const cpp_design& d, const design_point& pt) {
  ordered_json j;
  for (size_t i = 0; i < d.params.size(); ++i) j[d.params[i].name] = pt[i];
  return j;
}

ordered_json cost_obj(const cost_estimate& e) {
  ordered_json j;
  j["cycles_total"] = e.cycles_total;
  j["cycles_load"] = e.cycles_load;
  j["cycles_compute"] = e.cycles_compute;
  j["cycles_store"] = e.cycles_store;
  j["num_tiles"] = e.num_tiles;
  j["bram"] = e.bram;
  j["lut"] = e.lut;
  j["ff"] = e.ff;
  j["dsp"] = e.dsp;
  j["util_bram"] = e.util_bram;
  j["util_lut"] = e.util_lut;
  j["util_ff"] = e.util_ff;
  j["util_dsp"] = e.util_dsp;
  j["c2c"] = std::isfinite(e.c2c) ? e.c2c : -1.0;
  j["computation_bound"] = e.computation_bound;
  j["feasible_80pct"] = e.feasible_80pct;
  j["fits_100pct"] = e.fits_100pct;
  return j;
}

const char* role_name(tunable_param::role_t r) {
  switch (r) {
    case tunable_param::role_t::tile: return "tile";
    case tunable_param::role_t::pe: return "pe";
    case tunable_param::role_t::unroll: return "unroll";
    case tunable_param::role_t::bitwidth: return "bitwidth";
  }
  return "?";
}

// shared by the commands that need a constructed design: legalizes and takes
// the first surviving PE-loop candidate
struct prepared_design {
  loaded_inputs in;
  legalization_verdict verdict;
  cpp_design design;
  model_constants model;
};

int prepare(const cli_options& o, std::ostream& err, prepared_design* out) {
  load_common(o, out->in);
  out->verdict = legalize(out->in.h, out->in.report, out->in.platform);
  if (!out->verdict.legal) {
    err << "kernel '" << out->in.spec.name << "' cannot be mapped onto the template:\n";
    for (const auto& f : out->verdict.failures)
      err << "  loop '" << f.pe_loop << "' [" << f.check << "]: " << f.message << "\n";
    return exit_domain;
  }
  out->design = construct_design(out->in.h, out->verdict.pe_loop_candidates.front(),
                                 out->in.platform.axi_max_bits);
  out->model = init_model(out->design, out->in.report);
  return exit_ok;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }
}

}  // namespace

std::string manifest_json(const cli_options& o) { return manifest_obj(o).dump(2); }

int cmd_check(const cli_options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    loaded_inputs li;
    load_common(o, li);
    const legalization_verdict v = legalize(li.h, li.report, li.platform);

    ordered_json j;
    j["manifest"] = manifest_obj(o);
    j["kernel"] = li.spec.name;
    j["legal"] = v.legal;
    j["pe_loop_candidates"] = v.pe_loop_candidates;
    j["failures"] = ordered_json::array();
    for (const auto& f : v.failures)
      j["failures"].push_back({{"pe_loop", f.pe_loop}, {"check", f.check}, {"message", f.message}});
    write_artifact(o, "check.json", j);

    if (v.legal) {
      out << "kernel '" << li.spec.name << "' is mappable; PE loop candidates:";
      for (const auto& c : v.pe_loop_candidates) out << " " << c;
      out << "\n";
      for (const auto& f : v.failures)
        out << "  rejected loop '" << f.pe_loop << "' [" << f.check << "]: " << f.message << "\n";
      return exit_ok;
    }
    err << "kernel '" << li.spec.name << "' cannot be mapped onto the template:\n";
    for (const auto& f : v.failures)
      err << "  loop '" << f.pe_loop << "' [" << f.check << "]: " << f.message << "\n";
    return exit_domain;
  });
}

int cmd_space(const cli_options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    prepared_design pd;
    if (const int rc = prepare(o, err, &pd); rc != exit_ok) return rc;
    const design_space s = build_design_space(pd.design);

    ordered_json j;
    j["manifest"] = manifest_obj(o);
    j["kernel"] = pd.in.spec.name;
    j["pe_loop"] = pd.design.pe_loop;
    j["cardinality"] = s.cardinality;
    j["params"] = ordered_json::array();
    for (const auto& prm : s.params) {
      ordered_json pj;
      pj["name"] = prm.name;
      pj["role"] = role_name(prm.role);
      pj["target"] = prm.target;
      pj["num_values"] = prm.values.size();
      pj["min"] = prm.values.front();
      pj["max"] = prm.values.back();
      pj["values"] = prm.values;
      j["params"].push_back(std::move(pj));
    }
    write_artifact(o, "space.json", j);

    out << "design space for kernel '" << pd.in.spec.name << "' (PE loop '" << pd.design.pe_loop
        << "'): " << s.cardinality << " points\n";
    for (const auto& prm : s.params)
      out << "  " << prm.name << " [" << role_name(prm.role) << "]: " << prm.values.size()
          << " values in [" << prm.values.front() << ", " << prm.values.back() << "]\n";
    return exit_ok;
  });
}

int cmd_estimate(const cli_options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    prepared_design pd;
    if (const int rc = prepare(o, err, &pd); rc != exit_ok) return rc;
    const design_point pt =
        o.point_path.empty() ? minimal_point(pd.design) : load_point(pd.design, o.point_path);
    const cost_estimate e = estimate(pd.design, pd.model, pd.in.platform, pt);

    ordered_json j;
    j["manifest"] = manifest_obj(o);
    j["kernel"] = pd.in.spec.name;
    j["pe_loop"] = pd.design.pe_loop;
    j["point"] = point_obj(pd.design, pt);
    j["cost"] = cost_obj(e);
    j["warnings"] = pd.model.warnings;
    write_artifact(o, "estimate.json", j);

    out << "kernel '" << pd.in.spec.name << "' at";
    for (size_t i = 0; i < pd.design.params.size(); ++i)
      out << " " << pd.design.params[i].name << "=" << pt[i];
    out << "\n";
    out << "  cycles: " << e.cycles_total << " total over " << e.num_tiles
        << " tiles (per tile: load " << e.cycles_load << ", compute " << e.cycles_compute
        << ", store " << e.cycles_store << ")\n";
    out << "  bound: " << (e.computation_bound ? "computation" : "communication")
        << " (compute-to-communication " << std::fixed << std::setprecision(3) << e.c2c << ")\n";
    out << "  resources: bram " << e.bram << ", lut " << e.lut << ", ff " << e.ff << ", dsp "
        << e.dsp << (e.feasible_80pct ? " (within 80% budgets)" : " (over 80% budgets)") << "\n";
    for (const auto& w : pd.model.warnings) out << "  warning: " << w << "\n";
    return exit_ok;
  });
}

int cmd_explore(const cli_options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    prepared_design pd;
    if (const int rc = prepare(o, err, &pd); rc != exit_ok) return rc;

    explore_options eo;
    eo.budget_secs = o.budget_secs;
    eo.budget_evals = o.budget_evals;
    eo.seed = o.seed;
    eo.jobs = o.jobs;
    eo.record_trace = true;
    const explore_result res = explore(pd.design, pd.model, pd.in.platform, eo);

    ordered_json j;
    j["manifest"] = manifest_obj(o);
    j["kernel"] = pd.in.spec.name;
    j["pe_loop"] = pd.design.pe_loop;
    j["found_feasible"] = res.found_feasible;
    j["evals"] = res.evals;
    j["elapsed_ms"] = res.elapsed_ms;
    if (!res.best_point.empty()) {
      j["best_point"] = point_obj(pd.design, res.best_point);
      j["best_cost"] = cost_obj(res.best_cost);
    }
    j["arms"] = ordered_json::array();
    for (const auto& a : res.arms)
      j["arms"].push_back({{"name", a.name},
                           {"proposals", a.proposals},
                           {"feasible_hits", a.feasible_hits},
                           {"improvements", a.improvements},
                           {"reward_sum", a.reward_sum},
                           {"window_reward", a.window_reward},
                           {"disabled", a.disabled}});
    write_artifact(o, "explore.json", j);

    if (o.trace) {
      std::ostringstream csv;
      csv << "time_ms,evals,best_cycles\n";
      for (const auto& row : res.trace)
        csv << std::fixed << std::setprecision(3) << row.time_ms << "," << row.evals << ","
            << row.best_cycles << "\n";
      write_file(artifact_path(o, "trace.csv"), csv.str());
    }
    if (res.found_feasible)
      write_file(artifact_path(o, "best_source.txt"),
                 emit_pseudo_source(pd.design, res.best_point));

    out << "explored " << res.evals << " points in " << std::fixed << std::setprecision(1)
        << res.elapsed_ms << " ms\n";
    if (res.found_feasible) {
      out << "best configuration (" << res.best_cost.cycles_total << " cycles):";
      for (size_t i = 0; i < pd.design.params.size(); ++i)
        out << " " << pd.design.params[i].name << "=" << res.best_point[i];
      out << "\n";
    } else {
      err << "no configuration stayed within the 80% resource budgets\n";
    }
    for (const auto& a : res.arms)
      out << "  arm " << a.name << ": " << a.proposals << " proposals, " << a.feasible_hits
          << " feasible, " << a.improvements << " improvements"
          << (a.disabled ? " (disabled)" : "") << "\n";
    return res.found_feasible ? exit_ok : exit_domain;
  });
}

int cmd_simulate(const cli_options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    prepared_design pd;
    if (const int rc = prepare(o, err, &pd); rc != exit_ok) return rc;
    const design_point pt =
        o.point_path.empty() ? minimal_point(pd.design) : load_point(pd.design, o.point_path);

    const sim_result s = simulate(pd.design, pd.model, pd.in.platform, pt);
    const divergence_report dv = compare_with_model(pd.design, pd.model, pd.in.platform, pt);

    ordered_json j;
    j["manifest"] = manifest_obj(o);
    j["kernel"] = pd.in.spec.name;
    j["pe_loop"] = pd.design.pe_loop;
    j["point"] = point_obj(pd.design, pt);
    j["sim"] = {{"total_cycles", s.total_cycles},
                {"num_tiles", s.num_tiles},
                {"busy_load", s.busy_load},
                {"busy_compute", s.busy_compute},
                {"busy_store", s.busy_store},
                {"util_load", s.util_load},
                {"util_compute", s.util_compute},
                {"util_store", s.util_store}};
    j["model"] = {{"total_cycles", dv.model_total},
                  {"load_cycles", dv.model_load},
                  {"compute_cycles", dv.model_compute},
                  {"store_cycles", dv.model_store}};
    j["divergence_pct"] = {{"total", dv.total_pct},
                           {"load", dv.load_pct},
                           {"compute", dv.compute_pct},
                           {"store", dv.store_pct}};
    write_artifact(o, "simulate.json", j);
    write_file(artifact_path(o, "gantt.csv"), gantt_csv(s));

    out << "simulated " << s.num_tiles << " tiles: " << s.total_cycles << " cycles (model says "
        << dv.model_total << ", off by " << std::fixed << std::setprecision(2) << dv.total_pct
        << "%)\n";
    out << "  stage busy cycles: load " << s.busy_load << ", compute " << s.busy_compute
        << ", store " << s.busy_store << "\n";
    return exit_ok;
  });
}

}  // namespace cppdse
