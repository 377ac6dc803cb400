#include "cppdse/design.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "cppdse/legalize.hpp"

namespace cppdse {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

std::int64_t prev_pow2(std::int64_t n) {
  if (n < 1) throw std::invalid_argument("prev_pow2 needs n >= 1");
  std::int64_t p = 1;
  while (p * 2 <= n) p *= 2;
  return p;
}

std::int64_t next_pow2(std::int64_t n) {
  if (n < 1) throw std::invalid_argument("next_pow2 needs n >= 1");
  std::int64_t p = 1;
  while (p < n) p *= 2;
  return p;
}

std::vector<std::int64_t> make_value_set(std::int64_t min, std::int64_t max, range_kind kind) {
  if (min < 1 || max < min) throw std::invalid_argument("bad value range");
  std::vector<std::int64_t> vs;
  if (kind == range_kind::pow2) {
    for (std::int64_t v = min; v <= max; v *= 2) {
      vs.push_back(v);
      if (v > max / 2) break;  // would overflow past max anyway
    }
    return vs;
  }
  const std::int64_t span = max - min + 1;
  if (span <= 4096) {
    vs.reserve(static_cast<size_t>(span));
    for (std::int64_t v = min; v <= max; ++v) vs.push_back(v);
    return vs;
  }
  // wide ranges: dense up to 64, then powers of two, then max itself
  for (std::int64_t v = min; v <= std::min<std::int64_t>(64, max); ++v) vs.push_back(v);
  for (std::int64_t p = 128; p < max; p *= 2)
    if (p > vs.back()) vs.push_back(p);
  if (vs.back() != max) vs.push_back(max);
  return vs;
}

bool tunable_param::contains(std::int64_t v) const {
  return std::binary_search(values.begin(), values.end(), v);
}

int tunable_param::index_of(std::int64_t v) const {
  auto it = std::lower_bound(values.begin(), values.end(), v);
  if (it == values.end() || *it != v) return -1;
  return static_cast<int>(it - values.begin());
}

int design_space::find_param(const std::string& name) const {
  for (size_t i = 0; i < params.size(); ++i)
    if (params[i].name == name) return static_cast<int>(i);
  return -1;
}

void cpp_design::check_point(const design_point& pt) const {
  if (pt.size() != params.size())
    throw std::invalid_argument("design point has " + std::to_string(pt.size()) +
                                " values, expected " + std::to_string(params.size()));
  for (size_t i = 0; i < params.size(); ++i)
    if (!params[i].contains(pt[i]))
      throw std::invalid_argument("value " + std::to_string(pt[i]) +
                                  " is not a candidate for parameter '" + params[i].name + "'");
}

std::int64_t cpp_design::pf_product(const cpp_buffer& b, const design_point& pt) const {
  std::int64_t total = 1;
  for (const auto& dim : b.pf) {
    std::int64_t f = 1;
    for (const auto& src : dim) {
      const std::int64_t v = src.param >= 0 ? value_at(pt, src.param) : src.fixed;
      f = std::max(f, v);
    }
    total *= f;
  }
  return total;
}

std::int64_t cpp_design::buffer_bits(const cpp_buffer& b, std::int64_t tile) const {
  const std::int64_t elems = b.task_dependent ? tile * b.chunk_elems : b.fixed_elems;
  return elems * b.array->element_bits;
}

std::int64_t cpp_design::buffer_bw(const cpp_buffer& b, const design_point& pt) const {
  return b.bw_param >= 0 ? value_at(pt, b.bw_param) : b.fixed_bw;
}

// ---------------------------------------------------------------------------
// Construction steps

namespace {

int add_node(cpp_design& d, design_node n, int parent) {
  n.parent = parent;
  d.nodes.push_back(std::move(n));
  const int idx = static_cast<int>(d.nodes.size()) - 1;
  if (parent >= 0) d.nodes[static_cast<size_t>(parent)].children.push_back(idx);
  return idx;
}

// Mirrors an architecture subtree below `arch_parent` into the design.
void mirror_children(cpp_design& d, const arch_hierarchy& h, int arch_parent, int design_parent) {
  for (int ci : h.at(arch_parent).children) {
    const arch_node& a = h.at(ci);
    design_node n;
    n.id = a.id;
    n.arch_index = ci;
    if (a.kind == arch_node::kind_t::loop) {
      n.kind = design_node::kind_t::loop;
      n.schedule = loop_schedule::pipelined;  // refined by steps 4 and 5
      n.trip = a.loop->trip_count;
    } else {
      n.kind = design_node::kind_t::module;
    }
    const int idx = add_node(d, std::move(n), design_parent);
    mirror_children(d, h, ci, idx);
  }
}

const loop_decl* arch_loop(const cpp_design& d, const design_node& n) {
  if (n.arch_index < 0) return nullptr;
  return d.h->at(n.arch_index).loop;
}

// First loop (pre-order) whose access list touches the array; its report
// entry supplies the buffer's control/data LUT constants.
std::string find_binding_loop(const arch_hierarchy& h, const std::string& array_id) {
  for (const arch_node* n : walk(h)) {
    if (n->kind != arch_node::kind_t::loop) continue;
    for (const auto& acc : n->loop->accesses)
      if (acc.array == array_id) return n->id;
  }
  return {};
}

// Recomputed after every step that adds unroll information: each buffer
// dimension collects the unroll sources of the iterators indexing it.
void rebuild_pf_sources(cpp_design& d) {
  const kernel_spec& spec = *d.h->spec;
  auto loop_node = [&](const std::string& id) -> const design_node* {
    for (const auto& n : d.nodes)
      if (n.kind == design_node::kind_t::loop && n.id == id) return &n;
    return nullptr;
  };
  auto scan_accesses = [&](cpp_buffer& b, const std::vector<array_access>& accs) {
    for (const auto& acc : accs) {
      if (acc.array != b.id || acc.irregular) continue;
      const size_t nd = std::min(acc.dims.size(), b.pf.size());
      for (size_t di = 0; di < nd; ++di) {
        const std::string& iter = acc.dims[di].iter;
        if (iter.empty()) continue;
        pf_source src;
        if (iter == d.pe_loop) {
          if (d.pe_param < 0) continue;
          src.param = d.pe_param;
        } else {
          const design_node* n = loop_node(iter);
          if (!n) continue;
          if (n->schedule == loop_schedule::flattened)
            src.fixed = n->uf_fixed;
          else if (n->schedule == loop_schedule::unrolled && n->uf_param >= 0)
            src.param = n->uf_param;
          else
            continue;
        }
        b.pf[di].push_back(src);
      }
    }
  };
  for (auto& b : d.buffers) {
    b.pf.assign(b.array->dims.size(), {});
    for (const auto& l : spec.loops) scan_accesses(b, l.accesses);
    for (const auto& m : spec.modules) scan_accesses(b, m.accesses);
  }
}

int find_module_node(const cpp_design& d, const std::string& id) {
  for (size_t i = 0; i < d.nodes.size(); ++i)
    if (d.nodes[i].kind == design_node::kind_t::module && d.nodes[i].id == id)
      return static_cast<int>(i);
  return -1;
}

}  // namespace

cpp_design apply_data_tiling(const arch_hierarchy& h, const std::string& pe_loop) {
  cpp_design d;
  d.h = &h;
  d.pe_loop = pe_loop;

  const int pe_arch = h.find(pe_loop);
  if (pe_arch < 0 || h.at(pe_arch).kind != arch_node::kind_t::loop)
    throw std::invalid_argument("PE loop '" + pe_loop + "' is not a loop of the kernel");
  d.total_work = h.at(pe_arch).loop->trip_count;

  tunable_param tile;
  tile.name = "tile";
  tile.role = tunable_param::role_t::tile;
  tile.target = pe_loop;
  tile.min = 1;
  tile.max = d.total_work.known ? d.total_work.value : 64;  // dynamic work: bounded guess
  tile.inc = range_kind::seq;
  tile.values = make_value_set(tile.min, tile.max, tile.inc);
  d.params.push_back(std::move(tile));
  d.tile_param = 0;

  // root module
  design_node root;
  root.kind = design_node::kind_t::module;
  root.id = h.at(h.root).id;
  root.arch_index = h.root;
  add_node(d, std::move(root), -1);
  d.root = 0;

  // loops/modules between the root and the PE loop stay outside the tile loop
  std::vector<int> path;
  for (int cur = h.at(pe_arch).parent; cur != h.root; cur = h.at(cur).parent)
    path.push_back(cur);
  std::reverse(path.begin(), path.end());
  int attach = d.root;
  for (int ai : path) {
    const arch_node& a = h.at(ai);
    design_node n;
    n.id = a.id;
    n.arch_index = ai;
    if (a.kind == arch_node::kind_t::loop) {
      n.kind = design_node::kind_t::loop;
      n.schedule = loop_schedule::pipelined;
      n.trip = a.loop->trip_count;
    } else {
      n.kind = design_node::kind_t::module;
    }
    attach = add_node(d, std::move(n), attach);
  }

  design_node tiles;
  tiles.kind = design_node::kind_t::loop;
  tiles.id = "$tiles";
  tiles.schedule = loop_schedule::tile_pipeline;
  tiles.trip = extent_t::dynamic();  // num_tiles + 2, known only per point
  d.tile_loop = add_node(d, std::move(tiles), attach);

  // the PE loop becomes the intra-tile dispatch loop
  design_node dispatch;
  dispatch.kind = design_node::kind_t::loop;
  dispatch.id = pe_loop;
  dispatch.arch_index = pe_arch;
  dispatch.schedule = loop_schedule::dispatch;
  dispatch.trip = h.at(pe_arch).loop->trip_count;
  d.dispatch_loop = add_node(d, std::move(dispatch), d.tile_loop);

  mirror_children(d, h, pe_arch, d.dispatch_loop);

  // buffers: task-dependent chunks stream tile by tile, task-independent
  // arrays are loaded whole, module locals stay private scratch
  const auto classes = classify_arrays(h, pe_loop);
  for (const auto& cls : classes) {
    cpp_buffer b;
    b.id = cls.array->id;
    b.array = cls.array;
    b.fixed_bw = cls.array->element_bits;
    b.binding_loop = find_binding_loop(h, b.id);
    if (cls.task_dependent) {
      if (!cls.chunk_static)
        throw std::invalid_argument("array '" + b.id +
                                    "' has no static chunk; kernel must pass legalization first");
      b.task_dependent = true;
      b.off_chip_pair = true;
      b.chunk_elems = cls.chunk_elems;
      b.owner_node = d.root;
    } else {
      if (!cls.size_static)
        throw std::invalid_argument("array '" + b.id +
                                    "' has no static size; kernel must pass legalization first");
      b.fixed_elems = cls.total_elems;
      b.owner_node = d.dispatch_loop;  // duplicated once per PE
    }
    b.pf.assign(b.array->dims.size(), {});
    d.buffers.push_back(std::move(b));
    d.nodes[static_cast<size_t>(d.buffers.back().owner_node)].buffers.push_back(
        static_cast<int>(d.buffers.size()) - 1);
  }
  for (const auto& a : h.spec->arrays) {
    if (a.location != array_location::on_chip) continue;
    cpp_buffer b;
    b.id = a.id;
    b.array = &a;
    b.fixed_bw = a.element_bits;
    b.binding_loop = find_binding_loop(h, a.id);
    const auto total = a.total_elems();
    if (!total)
      throw std::invalid_argument("on-chip array '" + a.id + "' needs static dimensions");
    b.fixed_elems = *total;
    b.owner_node = d.root;
    for (const auto& m : h.spec->modules) {
      if (std::find(m.locals.begin(), m.locals.end(), a.id) == m.locals.end()) continue;
      const int owner = find_module_node(d, m.id);
      if (owner >= 0) b.owner_node = owner;
      break;
    }
    b.pf.assign(a.dims.size(), {});
    d.buffers.push_back(std::move(b));
    d.nodes[static_cast<size_t>(d.buffers.back().owner_node)].buffers.push_back(
        static_cast<int>(d.buffers.size()) - 1);
  }
  return d;
}

void apply_coarse_pipeline(cpp_design& d) {
  if (d.load_stage >= 0) return;  // already applied

  design_node load;
  load.kind = design_node::kind_t::module;
  load.id = "$load";
  d.load_stage = add_node(d, std::move(load), d.tile_loop);

  design_node compute;
  compute.kind = design_node::kind_t::module;
  compute.id = "$compute";
  d.compute_stage = add_node(d, std::move(compute), d.tile_loop);

  design_node store;
  store.kind = design_node::kind_t::module;
  store.id = "$store";
  d.store_stage = add_node(d, std::move(store), d.tile_loop);

  // re-home the dispatch subtree under the compute stage and put the stages
  // in load/compute/store order
  auto& tile_children = d.nodes[static_cast<size_t>(d.tile_loop)].children;
  tile_children.erase(std::find(tile_children.begin(), tile_children.end(), d.dispatch_loop));
  tile_children = {d.load_stage, d.compute_stage, d.store_stage};
  d.nodes[static_cast<size_t>(d.dispatch_loop)].parent = d.compute_stage;
  d.nodes[static_cast<size_t>(d.compute_stage)].children.push_back(d.dispatch_loop);

  // ping-pong pairs: every streamed buffer exists twice
  for (auto& b : d.buffers)
    if (b.off_chip_pair) b.copies = 2;
}

void duplicate_pes(cpp_design& d) {
  if (d.pe_param >= 0) return;
  tunable_param pe;
  pe.name = "pe";
  pe.role = tunable_param::role_t::pe;
  pe.target = d.pe_loop;
  pe.min = 1;
  pe.max = d.total_work.known ? d.total_work.value : 64;
  pe.inc = range_kind::seq;
  pe.values = make_value_set(pe.min, pe.max, pe.inc);
  d.params.push_back(std::move(pe));
  d.pe_param = static_cast<int>(d.params.size()) - 1;
  d.nodes[static_cast<size_t>(d.dispatch_loop)].uf_param = d.pe_param;
  rebuild_pf_sources(d);
}

void flatten_small_loops(cpp_design& d) {
  for (auto& n : d.nodes) {
    if (n.kind != design_node::kind_t::loop) continue;
    if (n.schedule != loop_schedule::pipelined) continue;  // only undecided in-PE loops
    const loop_decl* l = arch_loop(d, n);
    if (!l) continue;
    if (&n == &d.nodes[static_cast<size_t>(d.dispatch_loop)]) continue;
    if (n.trip.known && n.trip.value < 16 && !l->carried_dependency) {
      n.schedule = loop_schedule::flattened;
      n.uf_fixed = n.trip.value;
    }
  }
  rebuild_pf_sources(d);
}

void schedule_fine_grained(cpp_design& d) {
  // Decide pipelined vs tunable-unroll for the in-PE loops that step 4 left
  // alone. A loop stays pipelined when its iterations cannot be replicated:
  // carried dependency, or a body that still contains sequential structure.
  const bool in_pe = true;
  (void)in_pe;
  for (size_t i = 0; i < d.nodes.size(); ++i) {
    design_node& n = d.nodes[i];
    if (n.kind != design_node::kind_t::loop) continue;
    if (n.schedule != loop_schedule::pipelined) continue;
    if (static_cast<int>(i) == d.dispatch_loop || static_cast<int>(i) == d.tile_loop) continue;
    // only loops inside the PE template are candidates
    bool under_dispatch = false;
    for (int cur = n.parent; cur >= 0; cur = d.nodes[static_cast<size_t>(cur)].parent)
      if (cur == d.dispatch_loop) {
        under_dispatch = true;
        break;
      }
    if (!under_dispatch) continue;
    const loop_decl* l = arch_loop(d, n);
    if (!l || l->carried_dependency) continue;
    bool replicable = true;
    for (int ci : n.children) {
      const design_node& c = d.nodes[static_cast<size_t>(ci)];
      if (c.kind != design_node::kind_t::loop || c.schedule != loop_schedule::flattened) {
        replicable = false;
        break;
      }
    }
    if (!replicable) continue;

    tunable_param uf;
    uf.name = "uf." + n.id;
    uf.role = tunable_param::role_t::unroll;
    uf.target = n.id;
    uf.min = 1;
    uf.max = n.trip.known ? prev_pow2(n.trip.value) : 64;
    uf.inc = range_kind::seq;
    uf.values = make_value_set(uf.min, uf.max, uf.inc);
    d.params.push_back(std::move(uf));
    n.schedule = loop_schedule::unrolled;
    n.uf_param = static_cast<int>(d.params.size()) - 1;
  }
  rebuild_pf_sources(d);
}

void reorganize_buffers(cpp_design& d, std::int64_t axi_max_bits) {
  for (auto& b : d.buffers) {
    if (b.array->location != array_location::off_chip) continue;
    if (b.bw_param >= 0) continue;
    tunable_param bw;
    bw.name = "bw." + b.id;
    bw.role = tunable_param::role_t::bitwidth;
    bw.target = b.id;
    bw.min = std::min<std::int64_t>(next_pow2(b.array->element_bits), axi_max_bits);
    bw.max = axi_max_bits;
    bw.inc = range_kind::pow2;
    bw.values = make_value_set(bw.min, bw.max, bw.inc);
    d.params.push_back(std::move(bw));
    b.bw_param = static_cast<int>(d.params.size()) - 1;
  }
  rebuild_pf_sources(d);
}

cpp_design construct_design(const arch_hierarchy& h, const std::string& pe_loop,
                            std::int64_t axi_max_bits) {
  cpp_design d = apply_data_tiling(h, pe_loop);
  apply_coarse_pipeline(d);
  duplicate_pes(d);
  flatten_small_loops(d);
  schedule_fine_grained(d);
  reorganize_buffers(d, axi_max_bits);
  return d;
}

// ---------------------------------------------------------------------------
// Design space

namespace {

// product of small factors as an exact decimal string
std::string decimal_product(const std::vector<size_t>& factors) {
  std::vector<std::uint32_t> digits{1};  // little-endian base 10
  for (size_t f : factors) {
    std::uint64_t carry = 0;
    for (auto& dgt : digits) {
      const std::uint64_t v = static_cast<std::uint64_t>(dgt) * f + carry;
      dgt = static_cast<std::uint32_t>(v % 10);
      carry = v / 10;
    }
    while (carry) {
      digits.push_back(static_cast<std::uint32_t>(carry % 10));
      carry /= 10;
    }
  }
  std::string s;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it)
    s += static_cast<char>('0' + *it);
  return s;
}

}  // namespace

design_space build_design_space(const cpp_design& d) {
  design_space s;
  s.params = d.params;
  std::vector<size_t> sizes;
  sizes.reserve(s.params.size());
  for (const auto& p : s.params) sizes.push_back(p.values.size());
  s.cardinality = decimal_product(sizes);
  return s;
}

resolved_design resolve(const cpp_design& d, const design_point& pt) {
  d.check_point(pt);
  resolved_design r;
  r.design = &d;
  r.point = pt;
  r.tile = d.value_at(pt, d.tile_param);
  r.pe = d.value_at(pt, d.pe_param);
  r.loop_uf.assign(d.nodes.size(), 1);
  for (size_t i = 0; i < d.nodes.size(); ++i) {
    const design_node& n = d.nodes[i];
    if (n.kind != design_node::kind_t::loop) continue;
    switch (n.schedule) {
      case loop_schedule::dispatch:
        r.loop_uf[i] = r.pe;
        break;
      case loop_schedule::flattened:
        r.loop_uf[i] = n.uf_fixed;
        break;
      case loop_schedule::unrolled:
        r.loop_uf[i] = n.uf_param >= 0 ? d.value_at(pt, n.uf_param) : 1;
        break;
      default:
        break;
    }
  }
  r.buffer_bw.reserve(d.buffers.size());
  r.buffer_pf.reserve(d.buffers.size());
  for (const auto& b : d.buffers) {
    r.buffer_bw.push_back(d.buffer_bw(b, pt));
    r.buffer_pf.push_back(d.pf_product(b, pt));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pseudo-source rendering

namespace {

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

void render_body(const cpp_design& d, const resolved_design& r, int node, int depth,
                 std::ostringstream& out) {
  const std::string ind(static_cast<size_t>(depth) * 2, ' ');
  for (int ci : d.nodes[static_cast<size_t>(node)].children) {
    const design_node& n = d.nodes[static_cast<size_t>(ci)];
    if (n.kind == design_node::kind_t::module) {
      out << ind << n.id << "();  // submodule\n";
      render_body(d, r, ci, depth, out);
      continue;
    }
    std::string trip = n.trip.known ? std::to_string(n.trip.value)
                       : n.trip.symbol.empty() ? std::string("N")
                                               : n.trip.symbol;
    switch (n.schedule) {
      case loop_schedule::flattened:
        out << ind << "// #pragma cpp unroll  (full, factor=" << n.uf_fixed << ")\n";
        break;
      case loop_schedule::unrolled:
        out << ind << "// #pragma cpp parallel factor=" << r.loop_uf[static_cast<size_t>(ci)]
            << "\n";
        break;
      case loop_schedule::pipelined:
        out << ind << "// #pragma cpp pipeline\n";
        break;
      default:
        break;
    }
    out << ind << "for (int " << n.id << " = 0; " << n.id << " < " << trip << "; ++" << n.id
        << ") {\n";
    render_body(d, r, ci, depth + 1, out);
    out << ind << "}\n";
  }
}

}  // namespace

std::string emit_pseudo_source(const cpp_design& d, const design_point& pt) {
  const resolved_design r = resolve(d, pt);
  const std::int64_t total = d.total_work.known ? d.total_work.value : -1;
  const std::int64_t num_tiles = total > 0 ? (total + r.tile - 1) / r.tile : -1;

  std::ostringstream out;
  const std::string kernel = d.nodes[static_cast<size_t>(d.root)].id;
  out << "// accelerator configuration for kernel '" << kernel << "'\n";
  out << "// PE loop: " << d.pe_loop << "\n\n";
  out << "const int TILE_" << upper(d.pe_loop) << " = " << r.tile << ";\n";
  if (num_tiles > 0)
    out << "const int NUM_TILES = " << num_tiles << ";  // ceil(" << total << " / " << r.tile
        << ")\n";
  else
    out << "const int NUM_TILES = /* ceil(work / tile), work known at run time */ -1;\n";
  out << "const int NUM_PE = " << r.pe << ";\n\n";

  out << "// on-chip buffers (copies x entries @ bits, partitions)\n";
  for (size_t i = 0; i < d.buffers.size(); ++i) {
    const cpp_buffer& b = d.buffers[i];
    const std::int64_t bits = d.buffer_bits(b, r.tile);
    const std::int64_t bw = r.buffer_bw[i];
    const std::int64_t entries = (bits + bw - 1) / bw;
    out << "//   " << b.id << "_buf: " << b.copies << " x " << entries << " @ " << bw
        << "b, partition x" << r.buffer_pf[i];
    if (!b.off_chip_pair && b.array->location == array_location::off_chip)
      out << ", one copy per PE";
    out << "\n";
  }

  out << "\nvoid load(int t) {\n";
  for (const auto& b : d.buffers)
    if (b.off_chip_pair && b.array->direction != array_direction::out)
      out << "  burst_read(" << b.id << " + t * TILE_" << upper(d.pe_loop) << " * "
          << b.chunk_elems << ", " << b.id << "_buf[t % 2]);\n";
  out << "}\n\nvoid compute(int t) {\n";
  out << "  // #pragma cpp parallel factor=" << r.pe << "\n";
  out << "  for (int " << d.pe_loop << " = 0; " << d.pe_loop << " < TILE_" << upper(d.pe_loop)
      << "; ++" << d.pe_loop << ") {\n";
  render_body(d, r, d.dispatch_loop, 2, out);
  out << "  }\n}\n\nvoid store(int t) {\n";
  for (const auto& b : d.buffers)
    if (b.off_chip_pair && b.array->direction != array_direction::in)
      out << "  burst_write(" << b.id << "_buf[t % 2], " << b.id << " + t * TILE_"
          << upper(d.pe_loop) << " * " << b.chunk_elems << ");\n";
  out << "}\n\nvoid " << kernel << "_top() {\n";
  out << "  for (int t = 0; t < NUM_TILES + 2; ++t) {\n";
  out << "    if (t % 2 == 0) { load(ping, t); compute(pong, t - 1); store(ping, t - 2); }\n";
  out << "    else            { load(pong, t); compute(ping, t - 1); store(pong, t - 2); }\n";
  out << "  }\n}\n";
  return out.str();
}

}  // namespace cppdse
