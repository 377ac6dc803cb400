#include "cppdse/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <json.hpp>

namespace cppdse {

namespace {

using nlohmann::json;

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::int64_t as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer())
    throw parse_error("expected an integer", where);
  return j.get<std::int64_t>();
}

std::pair<std::int64_t, std::int64_t> as_int_pair(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2)
    throw parse_error("expected a two-element array", where);
  return {as_int(j[0], where), as_int(j[1], where)};
}

}  // namespace

platform_config default_platform() { return platform_config{}; }

platform_config parse_platform(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw parse_error(e.what(), "platform");
  }
  if (!j.is_object()) throw parse_error("platform file must hold a JSON object", "platform");

  platform_config p;
  for (const auto& [key, val] : j.items()) {
    if (key == "s_unit") p.s_unit = as_int(val, key);
    else if (key == "b_phy") p.b_phy = as_int(val, key);
    else if (key == "bram_blocks") p.bram_blocks = as_int(val, key);
    else if (key == "luts") p.luts = as_int(val, key);
    else if (key == "ffs") p.ffs = as_int(val, key);
    else if (key == "dsps") p.dsps = as_int(val, key);
    else if (key == "axi_max_bits") p.axi_max_bits = as_int(val, key);
    else if (key == "dram_latency_cycles") p.dram_latency_cycles = as_int(val, key);
    else if (key == "bytes_per_cycle_per_bit") {
      if (!val.is_number()) throw parse_error("expected a number", key);
      p.bytes_per_cycle_per_bit = val.get<double>();
    } else {
      throw parse_error("unknown platform key '" + key + "'", "platform");
    }
  }
  if (p.s_unit < 1 || p.b_phy < 1 || p.bram_blocks < 1 || p.luts < 1 || p.ffs < 1 ||
      p.dsps < 1 || p.axi_max_bits < 1 || p.dram_latency_cycles < 0 ||
      p.bytes_per_cycle_per_bit <= 0.0)
    throw parse_error("platform values must be positive", "platform");
  return p;
}

// ---------------------------------------------------------------------------
// Synthesis report

const loop_report* synth_report::find_loop(const std::string& id) const {
  auto it = loops.find(id);
  return it == loops.end() ? nullptr : &it->second;
}

const module_report* synth_report::find_module(const std::string& id) const {
  auto it = modules.find(id);
  return it == modules.end() ? nullptr : &it->second;
}

synth_report parse_report(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw parse_error(e.what(), "report");
  }
  if (!j.is_object()) throw parse_error("report file must hold a JSON object", "report");

  synth_report r;
  for (const auto& [section, body] : j.items()) {
    if (section == "loops") {
      for (const auto& [id, lj] : body.items()) {
        loop_report lr;
        for (const auto& [key, val] : lj.items()) {
          const std::string where = "loops." + id + "." + key;
          if (key == "ii") lr.ii = as_int(val, where);
          else if (key == "tc") lr.tc = as_int(val, where);
          else if (key == "c_r") lr.c_r = as_int(val, where);
          else if (key == "uf") {
            auto [lo, hi] = as_int_pair(val, where);
            if (hi != lo + 1)
              throw parse_error("unroll samples must be at consecutive factors", where);
            lr.uf_lo = lo;
          } else if (key == "lut") {
            std::tie(lr.r_lo.lut, lr.r_hi.lut) = as_int_pair(val, where);
          } else if (key == "ff") {
            std::tie(lr.r_lo.ff, lr.r_hi.ff) = as_int_pair(val, where);
          } else if (key == "dsp") {
            std::tie(lr.r_lo.dsp, lr.r_hi.dsp) = as_int_pair(val, where);
          } else if (key == "r_ctrl") lr.r_ctrl = as_int(val, where);
          else if (key == "r_data") lr.r_data = as_int(val, where);
          else throw parse_error("unknown loop report key '" + key + "'", where);
        }
        if (lr.ii < 1) throw parse_error("ii must be at least 1", "loops." + id);
        r.loops[id] = lr;
      }
    } else if (section == "modules") {
      for (const auto& [id, mj] : body.items()) {
        module_report mr;
        for (const auto& [key, val] : mj.items()) {
          const std::string where = "modules." + id + "." + key;
          if (key == "c_r") mr.c_r = as_int(val, where);
          else if (key == "lut") mr.r_r.lut = as_int(val, where);
          else if (key == "ff") mr.r_r.ff = as_int(val, where);
          else if (key == "dsp") mr.r_r.dsp = as_int(val, where);
          else throw parse_error("unknown module report key '" + key + "'", where);
        }
        r.modules[id] = mr;
      }
    } else if (section == "buffers") {
      for (const auto& [id, bj] : body.items()) {
        buffer_report br;
        for (const auto& [key, val] : bj.items()) {
          const std::string where = "buffers." + id + "." + key;
          if (key == "r_ctrl") br.r_ctrl = as_int(val, where);
          else if (key == "r_data") br.r_data = as_int(val, where);
          else if (key == "ff_r") br.ff_r = as_int(val, where);
          else throw parse_error("unknown buffer report key '" + key + "'", where);
        }
        r.buffers[id] = br;
      }
    } else {
      throw parse_error("unknown report section '" + section + "'", "report");
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Model binding

model_constants init_model(const cpp_design& d, const synth_report& report) {
  model_constants m;
  m.nodes.resize(d.nodes.size());
  m.buffers.resize(d.buffers.size());

  auto clamp_delta = [&](std::int64_t lo, std::int64_t hi, const std::string& id,
                         const char* what) -> std::int64_t {
    if (hi < lo) {
      m.warnings.push_back("negative per-unroll " + std::string(what) + " delta for '" + id +
                           "' clamped to 0");
      return 0;
    }
    return hi - lo;
  };

  for (size_t i = 0; i < d.nodes.size(); ++i) {
    const design_node& n = d.nodes[i];
    model_constants::node_c& c = m.nodes[i];
    const bool synthetic = !n.id.empty() && n.id[0] == '$';

    if (n.kind == design_node::kind_t::loop) {
      if (synthetic) {
        c.tc_known = false;  // tile loop trip depends on the point
        continue;
      }
      const loop_report* lr = report.find_loop(n.id);
      if (!lr) throw report_incomplete(n.id);
      c.ii = lr->ii;
      c.c_r = lr->c_r;
      if (n.trip.known) {
        c.tc = n.trip.value;
      } else if (lr->tc) {
        c.tc = *lr->tc;
        if (c.tc < 1) throw parse_error("reported trip count must be positive", n.id);
      } else {
        throw report_incomplete(n.id);
      }
      c.lut_iter = clamp_delta(lr->r_lo.lut, lr->r_hi.lut, n.id, "lut");
      c.ff_iter = clamp_delta(lr->r_lo.ff, lr->r_hi.ff, n.id, "ff");
      c.dsp_iter = clamp_delta(lr->r_lo.dsp, lr->r_hi.dsp, n.id, "dsp");
    } else {
      const module_report* mr = report.find_module(n.id);
      if (!mr) {
        const bool is_root = static_cast<int>(i) == d.root;
        if (synthetic || is_root) continue;  // structural shells default to free
        throw report_incomplete(n.id);
      }
      c.c_r = mr->c_r;
      c.lut_r = mr->r_r.lut;
      c.ff_r = mr->r_r.ff;
      c.dsp_r = mr->r_r.dsp;
    }
  }

  if (d.total_work.known) {
    m.total_work = d.total_work.value;
  } else {
    const loop_report* lr = report.find_loop(d.pe_loop);
    if (!lr || !lr->tc) throw report_incomplete(d.pe_loop);
    m.total_work = *lr->tc;
  }
  if (m.total_work < 1) throw parse_error("total work must be positive", d.pe_loop);

  for (size_t i = 0; i < d.buffers.size(); ++i) {
    const cpp_buffer& b = d.buffers[i];
    model_constants::buffer_c& c = m.buffers[i];
    const buffer_report* br = nullptr;
    if (auto it = report.buffers.find(b.id); it != report.buffers.end()) br = &it->second;
    const loop_report* bind = b.binding_loop.empty() ? nullptr : report.find_loop(b.binding_loop);
    c.r_ctrl = br && br->r_ctrl ? *br->r_ctrl : (bind ? bind->r_ctrl : 0);
    c.r_data = br && br->r_data ? *br->r_data : (bind ? bind->r_data : 0);
    c.ff_r = br ? br->ff_r : 0;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Primitive estimators

std::int64_t cycles_loop(std::int64_t c_iter, std::int64_t ii, std::int64_t tc, std::int64_t uf) {
  return c_iter + ii * ceil_div(tc, uf);
}

std::int64_t n_blk(std::int64_t bw, const platform_config& p) { return ceil_div(bw, p.b_phy); }

std::int64_t v_blocks(std::int64_t entries, std::int64_t bw, const platform_config& p) {
  if (entries <= 0) return 0;
  const std::int64_t nb = n_blk(bw, p);
  return ceil_div(entries, nb * p.s_unit) * nb;
}

std::int64_t bram_buffer(std::int64_t entries, std::int64_t pf, std::int64_t bw,
                         std::int64_t copies, const platform_config& p) {
  return copies * pf * v_blocks(ceil_div(entries, pf), bw, p);
}

std::int64_t lut_mux(std::int64_t k) {
  if (k <= 1) return 0;
  std::int64_t sum = 0;
  for (std::int64_t span = 4;; span *= 4) {
    sum += ceil_div(k, span);
    if (span >= k) break;
  }
  return sum;
}

std::int64_t lut_buffer(std::int64_t mem_blocks_one_copy, std::int64_t r_ctrl,
                        std::int64_t r_data, std::int64_t pf, std::int64_t bw,
                        std::int64_t copies) {
  return copies * (mem_blocks_one_copy * (r_ctrl + r_data) + lut_mux(pf) * bw);
}

std::int64_t burst_cycles(std::int64_t bits, std::int64_t bw, const platform_config& p) {
  if (bits <= 0) return 0;
  const double bits_per_cycle = 8.0 * p.bytes_per_cycle_per_bit * static_cast<double>(bw);
  const auto transfer = static_cast<std::int64_t>(
      std::ceil(static_cast<double>(bits) / bits_per_cycle));
  return transfer + p.dram_latency_cycles;
}

std::int64_t cycles_total(std::int64_t c_load, std::int64_t c_compute, std::int64_t c_store,
                          std::int64_t num_tiles) {
  return num_tiles * std::max(c_load + c_store, c_compute) + (c_load + c_store);
}

// ---------------------------------------------------------------------------
// Design-level evaluation

std::int64_t stage_io_cycles(const cpp_design& d, const model_constants& m,
                             const platform_config& p, const design_point& pt,
                             bool load_stage, std::int64_t items_in_tile) {
  (void)m;
  std::int64_t cycles = 0;
  for (const auto& b : d.buffers) {
    if (!b.off_chip_pair) continue;
    const bool in = b.array->direction != array_direction::out;
    const bool out = b.array->direction != array_direction::in;
    if (load_stage ? !in : !out) continue;
    const std::int64_t bits = items_in_tile * b.chunk_elems * b.array->element_bits;
    cycles += burst_cycles(bits, d.buffer_bw(b, pt), p);  // one shared memory port
  }
  return cycles;
}

std::int64_t one_time_io_cycles(const cpp_design& d, const platform_config& p,
                                const design_point& pt, bool load_side) {
  std::int64_t cycles = 0;
  for (const auto& b : d.buffers) {
    if (b.off_chip_pair || b.array->location != array_location::off_chip) continue;
    const bool in = b.array->direction != array_direction::out;
    const bool out = b.array->direction != array_direction::in;
    if (load_side ? !in : !out) continue;
    const std::int64_t bits = b.fixed_elems * b.array->element_bits;
    cycles += burst_cycles(bits, d.buffer_bw(b, pt), p);
  }
  return cycles;
}

namespace {

std::int64_t node_cycles(const cpp_design& d, const model_constants& m, const design_point& pt,
                         int idx, std::int64_t items_in_tile) {
  const design_node& n = d.nodes[static_cast<size_t>(idx)];
  const model_constants::node_c& c = m.nodes[static_cast<size_t>(idx)];
  std::int64_t inner = 0;
  for (int ci : n.children) inner += node_cycles(d, m, pt, ci, items_in_tile);

  if (n.kind == design_node::kind_t::module) return c.c_r + inner;

  const std::int64_t c_iter = c.c_r + inner;
  switch (n.schedule) {
    case loop_schedule::dispatch: {
      const std::int64_t pe = d.value_at(pt, d.pe_param);
      return cycles_loop(c_iter, c.ii, items_in_tile, pe);
    }
    case loop_schedule::flattened:
      return c_iter + c.ii;
    case loop_schedule::unrolled: {
      const std::int64_t uf = n.uf_param >= 0 ? d.value_at(pt, n.uf_param) : 1;
      return cycles_loop(c_iter, c.ii, c.tc, uf);
    }
    default:
      return cycles_loop(c_iter, c.ii, c.tc, 1);
  }
}

std::int64_t node_unroll(const cpp_design& d, const design_point& pt, const design_node& n) {
  if (n.kind != design_node::kind_t::loop) return 1;
  switch (n.schedule) {
    case loop_schedule::dispatch: return d.value_at(pt, d.pe_param);
    case loop_schedule::flattened: return n.uf_fixed;
    case loop_schedule::unrolled: return n.uf_param >= 0 ? d.value_at(pt, n.uf_param) : 1;
    default: return 1;
  }
}

// How many body instances of each node exist in hardware. The dispatch loop
// replicates its subtree per PE; unrolled loops per unroll factor.
std::vector<std::int64_t> replication(const cpp_design& d, const design_point& pt) {
  std::vector<std::int64_t> mults(d.nodes.size(), 1);
  for (size_t i = 0; i < d.nodes.size(); ++i) {
    const std::int64_t uf = node_unroll(d, pt, d.nodes[i]);
    for (int ci : d.nodes[i].children) mults[static_cast<size_t>(ci)] = mults[i] * uf;
  }
  return mults;
}

}  // namespace

std::int64_t stage_compute_cycles(const cpp_design& d, const model_constants& m,
                                  const design_point& pt, std::int64_t items_in_tile) {
  if (d.compute_stage < 0) return 0;
  return node_cycles(d, m, pt, d.compute_stage, items_in_tile);
}

cost_estimate estimate(const cpp_design& d, const model_constants& m,
                       const platform_config& p, const design_point& pt) {
  d.check_point(pt);

  cost_estimate e;
  const std::int64_t tile = d.value_at(pt, d.tile_param);
  e.num_tiles = ceil_div(m.total_work, tile);
  e.cycles_load = stage_io_cycles(d, m, p, pt, true, tile);
  e.cycles_store = stage_io_cycles(d, m, p, pt, false, tile);
  e.cycles_compute = stage_compute_cycles(d, m, pt, tile);

  std::int64_t total = cycles_total(e.cycles_load, e.cycles_compute, e.cycles_store, e.num_tiles);

  // loops outside the tile pipeline repeat the whole tiled run
  for (int cur = d.nodes[static_cast<size_t>(d.tile_loop)].parent; cur >= 0;
       cur = d.nodes[static_cast<size_t>(cur)].parent) {
    const design_node& n = d.nodes[static_cast<size_t>(cur)];
    const model_constants::node_c& c = m.nodes[static_cast<size_t>(cur)];
    if (n.kind == design_node::kind_t::loop)
      total = c.c_r + c.ii * c.tc + c.tc * total;
    else
      total += c.c_r;
  }
  total += one_time_io_cycles(d, p, pt, true) + one_time_io_cycles(d, p, pt, false);
  e.cycles_total = total;

  const auto mults = replication(d, pt);
  for (size_t i = 0; i < d.nodes.size(); ++i) {
    const design_node& n = d.nodes[i];
    const model_constants::node_c& c = m.nodes[i];
    if (n.kind == design_node::kind_t::loop) {
      const std::int64_t uf = node_unroll(d, pt, n);
      e.lut += c.lut_iter * uf * mults[i];
      e.ff += c.ff_iter * uf * mults[i];
      e.dsp += c.dsp_iter * uf * mults[i];
    } else {
      e.lut += c.lut_r * mults[i];
      e.ff += c.ff_r * mults[i];
      e.dsp += c.dsp_r * mults[i];
    }
  }
  for (size_t i = 0; i < d.buffers.size(); ++i) {
    const cpp_buffer& b = d.buffers[i];
    const model_constants::buffer_c& c = m.buffers[i];
    const std::int64_t bw = d.buffer_bw(b, pt);
    const std::int64_t pf = d.pf_product(b, pt);
    const std::int64_t entries = ceil_div(d.buffer_bits(b, tile), bw);
    // a buffer owned by a replicated loop lives inside each instance, so the
    // owner's own unroll factor multiplies in on top of its surroundings
    const design_node& owner = d.nodes[static_cast<size_t>(b.owner_node)];
    const std::int64_t copies =
        b.copies * mults[static_cast<size_t>(b.owner_node)] * node_unroll(d, pt, owner);
    const std::int64_t mem_one = bram_buffer(entries, pf, bw, 1, p);
    e.bram += mem_one * copies;
    e.lut += lut_buffer(mem_one, c.r_ctrl, c.r_data, pf, bw, copies);
    e.ff += copies * (bw + c.ff_r);
  }

  const std::int64_t io = e.cycles_load + e.cycles_store;
  if (io > 0)
    e.c2c = static_cast<double>(e.cycles_compute) / static_cast<double>(io);
  else
    e.c2c = e.cycles_compute > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  e.computation_bound = e.cycles_compute > io;

  e.util_bram = static_cast<double>(e.bram) / static_cast<double>(p.bram_blocks);
  e.util_lut = static_cast<double>(e.lut) / static_cast<double>(p.luts);
  e.util_ff = static_cast<double>(e.ff) / static_cast<double>(p.ffs);
  e.util_dsp = static_cast<double>(e.dsp) / static_cast<double>(p.dsps);
  e.feasible_80pct = 5 * e.bram <= 4 * p.bram_blocks && 5 * e.lut <= 4 * p.luts &&
                     5 * e.ff <= 4 * p.ffs && 5 * e.dsp <= 4 * p.dsps;
  e.fits_100pct =
      e.bram <= p.bram_blocks && e.lut <= p.luts && e.ff <= p.ffs && e.dsp <= p.dsps;
  return e;
}

}  // namespace cppdse
