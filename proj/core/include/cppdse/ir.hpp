#ifndef CPPDSE_IR_HPP
#define CPPDSE_IR_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cppdse {

// Raised for malformed kernel documents. `where` carries json-pointer-ish
// context so CLI users can find the offending node.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, const std::string& where)
      : std::runtime_error(where.empty() ? what : what + " (at " + where + ")"),
        where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

// An integer that is either a literal or a reference to a named scalar.
// Scalars declared without a compile-time value stay symbolic, which is how
// runtime-dependent coefficients/extents are expressed.
struct sym_int {
  std::int64_t value = 0;
  std::string symbol;  // empty for literals

  bool is_literal() const { return symbol.empty(); }
  static sym_int literal(std::int64_t v) { return {v, {}}; }
};

// Dimension extent or trip count. `known == false` means dynamic.
struct extent_t {
  std::int64_t value = 0;
  bool known = false;
  std::string symbol;  // set when declared via an unresolved scalar

  static extent_t fixed(std::int64_t v) { return {v, true, {}}; }
  static extent_t dynamic(std::string sym = {}) { return {0, false, std::move(sym)}; }
};

struct scalar_decl {
  std::string name;
  std::optional<std::int64_t> value;  // nullopt: runtime scalar
};

enum class array_location { off_chip, on_chip };
enum class array_direction { in, out, inout };

struct array_decl {
  std::string id;
  int element_bits = 32;  // 1..64
  std::vector<extent_t> dims;
  array_location location = array_location::off_chip;
  // Transfer direction for off-chip arrays (ignored for on-chip locals).
  array_direction direction = array_direction::inout;

  // Total element count; nullopt when any extent is dynamic.
  std::optional<std::int64_t> total_elems() const;
};

// One dimension of an affine access: coeff * iter + offset. Only the
// single-iterator form is representable; anything richer must be flagged
// irregular on the enclosing access.
struct affine_term {
  std::string iter;  // loop id, empty when the index is constant
  sym_int coeff = sym_int::literal(1);
  sym_int offset = sym_int::literal(0);
};

struct array_access {
  std::string array;
  std::vector<affine_term> dims;
  bool irregular = false;
};

// Loop bodies are ordered lists of nested loops, inline module definitions
// and statement blocks. Nodes live in flat per-kind vectors on kernel_spec
// and bodies reference them by id, which keeps the spec copyable and makes
// uniqueness checks trivial.
struct body_ref {
  enum kind_t { loop, call, stmts } kind = loop;
  std::string id;  // stmts: optional label
};

struct loop_decl {
  std::string id;
  extent_t trip_count;
  bool carried_dependency = false;
  std::vector<array_access> accesses;
  std::vector<body_ref> body;
};

struct module_decl {
  std::string id;
  std::vector<std::string> locals;  // on-chip arrays owned by this module
  std::vector<array_access> accesses;
  std::vector<body_ref> body;
};

struct kernel_spec {
  int format_version = 1;
  std::string name;
  std::vector<scalar_decl> scalars;
  std::vector<array_decl> arrays;
  std::vector<loop_decl> loops;      // every loop in the document
  std::vector<module_decl> modules;  // every inline module
  std::string top_loop;              // id of the single top-level loop

  const loop_decl* find_loop(const std::string& id) const;
  const module_decl* find_module(const std::string& id) const;
  const array_decl* find_array(const std::string& id) const;
  const scalar_decl* find_scalar(const std::string& name) const;
};

// Parse/serialize the JSON kernel-description format (format_version 1).
// parse_kernel_spec validates ids, extents and affine accesses and resolves
// scalar references that have compile-time values.
kernel_spec parse_kernel_spec(const std::string& json_text);
std::string serialize(const kernel_spec& spec);

// ---------------------------------------------------------------------------
// Architecture hierarchy: the loop/module tree plus array attachment points,
// the shape every later stage (legalizer, constructor, model) walks.

struct arch_node {
  enum class kind_t { module, loop };
  kind_t kind = kind_t::module;
  std::string id;
  int parent = -1;
  std::vector<int> children;  // body order
  const loop_decl* loop = nullptr;
  const module_decl* mod = nullptr;
  // Arrays attached here: root carries the off-chip interface arrays,
  // module nodes carry their on-chip locals.
  std::vector<const array_decl*> arrays;
  bool has_stmts = false;  // standalone logic marker
};

struct arch_hierarchy {
  const kernel_spec* spec = nullptr;  // must outlive the hierarchy
  std::vector<arch_node> nodes;       // pre-order; nodes[0] is the root module
  int root = 0;

  const arch_node& at(int i) const { return nodes.at(static_cast<size_t>(i)); }
  int find(const std::string& id) const;  // -1 when absent
  bool is_ancestor(int a, int b) const;   // a strictly above b
};

// Builds the tree: a root module named after the kernel, the top loop under
// it, inline modules and nested loops in declaration order.
arch_hierarchy build_hierarchy(const kernel_spec& spec);

// Deterministic pre-order visit; the returned pointers stay valid while the
// hierarchy is alive.
std::vector<const arch_node*> walk(const arch_hierarchy& h);

}  // namespace cppdse

#endif  // CPPDSE_IR_HPP
