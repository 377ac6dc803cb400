#ifndef CPPDSE_DESIGN_HPP
#define CPPDSE_DESIGN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cppdse/ir.hpp"

namespace cppdse {

// A tunable knob with an auto(min, max, inc) candidate range. Value sets are
// materialized eagerly; seq ranges wider than 4096 are thinned to {min..64}
// plus the powers of two up to max (max itself always stays in).
enum class range_kind { seq, pow2 };

std::vector<std::int64_t> make_value_set(std::int64_t min, std::int64_t max, range_kind kind);
std::int64_t prev_pow2(std::int64_t n);
std::int64_t next_pow2(std::int64_t n);

struct tunable_param {
  enum class role_t { tile, pe, unroll, bitwidth };
  std::string name;  // "tile", "pe", "uf.<loop>", "bw.<array>"
  role_t role = role_t::unroll;
  std::string target;  // loop or array id
  std::int64_t min = 1, max = 1;
  range_kind inc = range_kind::seq;
  std::vector<std::int64_t> values;

  bool contains(std::int64_t v) const;
  int index_of(std::int64_t v) const;  // -1 when absent
};

// A point assigns one value per param, in param order.
using design_point = std::vector<std::int64_t>;

struct design_space {
  std::vector<tunable_param> params;
  std::string cardinality;  // exact product as a decimal string

  int find_param(const std::string& name) const;
};

// ---------------------------------------------------------------------------
// The constructed pipeline: load / compute / store stages around a tile loop,
// a PE-dispatch loop inside compute, scheduling annotations on every template
// loop and on-chip buffers for every array.

// Per-dimension partition-factor sources; the effective PF(d) at a point is
// the max over sources (unroll params and fixed unrolls touching that dim).
struct pf_source {
  int param = -1;           // index into cpp_design::params, or -1
  std::int64_t fixed = 1;   // used when param == -1
};

struct cpp_buffer {
  std::string id;  // array id
  const array_decl* array = nullptr;
  int copies = 1;             // 2 once the coarse pipeline double-buffers it
  bool off_chip_pair = false; // paired with an off-chip array (streamed per tile)
  bool task_dependent = false;
  std::int64_t chunk_elems = 0;  // per work item, task-dependent pairs only
  std::int64_t fixed_elems = 0;  // whole-array size otherwise
  int bw_param = -1;             // -1: fixed width
  std::int64_t fixed_bw = 0;
  std::vector<std::vector<pf_source>> pf;  // per dimension
  int owner_node = 0;       // design node holding this buffer
  std::string binding_loop; // report entry supplying ctrl/data constants
};

enum class loop_schedule {
  tile_pipeline,  // the coarse num_tiles+2 loop
  dispatch,       // intra-tile loop, trip = tile, unroll = PE count
  flattened,      // fully unrolled, UF fixed to the trip count
  unrolled,       // tunable partial unroll
  pipelined       // II-driven, not tunable
};

struct design_node {
  enum class kind_t { module, loop };
  kind_t kind = kind_t::module;
  std::string id;  // report key ("$"-prefixed for synthesized structure)
  int parent = -1;
  std::vector<int> children;
  std::vector<int> buffers;  // indices into cpp_design::buffers
  int arch_index = -1;       // originating hierarchy node, -1 for synthetic

  // loop fields
  loop_schedule schedule = loop_schedule::pipelined;
  extent_t trip;        // declared trip count (dispatch: unused)
  int uf_param = -1;    // unrolled/dispatch
  std::int64_t uf_fixed = 1;
};

struct cpp_design {
  const arch_hierarchy* h = nullptr;
  std::string pe_loop;
  extent_t total_work;  // trip count of the PE loop

  std::vector<tunable_param> params;
  int tile_param = -1;
  int pe_param = -1;

  std::vector<design_node> nodes;  // [0] is the root module
  int root = 0;
  int tile_loop = -1;
  int load_stage = -1, compute_stage = -1, store_stage = -1;
  int dispatch_loop = -1;

  std::vector<cpp_buffer> buffers;

  std::int64_t value_at(const design_point& pt, int param) const {
    return pt.at(static_cast<size_t>(param));
  }
  void check_point(const design_point& pt) const;  // throws std::invalid_argument
  std::int64_t pf_product(const cpp_buffer& b, const design_point& pt) const;
  std::int64_t buffer_bits(const cpp_buffer& b, std::int64_t tile) const;  // one copy
  std::int64_t buffer_bw(const cpp_buffer& b, const design_point& pt) const;
};

// Construction steps, applied in order. Callers normally just use
// construct_design; the steps stay separate so each rewrite can be tested on
// its own. The pe_loop must have passed legalization.
cpp_design apply_data_tiling(const arch_hierarchy& h, const std::string& pe_loop);
void apply_coarse_pipeline(cpp_design& d);
void duplicate_pes(cpp_design& d);
void flatten_small_loops(cpp_design& d);
void schedule_fine_grained(cpp_design& d);
void reorganize_buffers(cpp_design& d, std::int64_t axi_max_bits = 512);

cpp_design construct_design(const arch_hierarchy& h, const std::string& pe_loop,
                            std::int64_t axi_max_bits = 512);

// Snapshot of the tunables with the exact cardinality.
design_space build_design_space(const cpp_design& d);

// A fully substituted configuration.
struct resolved_design {
  const cpp_design* design = nullptr;
  design_point point;
  std::int64_t tile = 1;
  std::int64_t pe = 1;
  std::vector<std::int64_t> loop_uf;    // per design node (1 for modules)
  std::vector<std::int64_t> buffer_bw;  // per buffer
  std::vector<std::int64_t> buffer_pf;  // per buffer, product over dims
};

resolved_design resolve(const cpp_design& d, const design_point& pt);

// Code-listing rendition of a resolved configuration (deterministic text).
std::string emit_pseudo_source(const cpp_design& d, const design_point& pt);

}  // namespace cppdse

#endif  // CPPDSE_DESIGN_HPP
