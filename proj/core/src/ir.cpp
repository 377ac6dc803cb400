#include "cppdse/ir.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cppdse {

using nlohmann::json;
using nlohmann::ordered_json;

std::optional<std::int64_t> array_decl::total_elems() const {
  std::int64_t total = 1;
  for (const auto& d : dims) {
    if (!d.known) return std::nullopt;
    total *= d.value;
  }
  return total;
}

const loop_decl* kernel_spec::find_loop(const std::string& id) const {
  for (const auto& l : loops)
    if (l.id == id) return &l;
  return nullptr;
}

const module_decl* kernel_spec::find_module(const std::string& id) const {
  for (const auto& m : modules)
    if (m.id == id) return &m;
  return nullptr;
}

const array_decl* kernel_spec::find_array(const std::string& id) const {
  for (const auto& a : arrays)
    if (a.id == id) return &a;
  return nullptr;
}

const scalar_decl* kernel_spec::find_scalar(const std::string& name) const {
  for (const auto& s : scalars)
    if (s.name == name) return &s;
  return nullptr;
}

namespace {

// Shared parse state: declared names (one namespace for the whole document,
// so report keys can never collide) and the scalar table.
struct parse_ctx {
  kernel_spec* spec;
  std::set<std::string> ids;

  void claim(const std::string& id, const std::string& where) {
    if (id.empty()) throw parse_error("empty id", where);
    if (!ids.insert(id).second) throw parse_error("duplicate id '" + id + "'", where);
  }
};

std::int64_t require_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw parse_error("expected an integer", where);
  return j.get<std::int64_t>();
}

sym_int parse_sym_int(const json& j, const parse_ctx& ctx, const std::string& where) {
  if (j.is_number_integer()) return sym_int::literal(j.get<std::int64_t>());
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    const scalar_decl* s = ctx.spec->find_scalar(name);
    if (!s) throw parse_error("unknown scalar '" + name + "'", where);
    if (s->value) return sym_int::literal(*s->value);
    return {0, name};
  }
  throw parse_error("expected an integer or scalar name", where);
}

extent_t parse_extent(const json& j, const parse_ctx& ctx, const std::string& where) {
  if (j.is_string() && j.get<std::string>() == "dynamic") return extent_t::dynamic();
  sym_int v = parse_sym_int(j, ctx, where);
  if (!v.is_literal()) return extent_t::dynamic(v.symbol);
  if (v.value <= 0) throw parse_error("extent must be positive", where);
  return extent_t::fixed(v.value);
}

array_access parse_access(const json& j, const parse_ctx& ctx, const std::string& where) {
  array_access acc;
  if (!j.is_object() || !j.contains("array"))
    throw parse_error("access needs an 'array' field", where);
  acc.array = j.at("array").get<std::string>();
  acc.irregular = j.value("irregular", false);
  if (j.contains("dims")) {
    size_t di = 0;
    for (const auto& dj : j.at("dims")) {
      const std::string dw = where + "/dims/" + std::to_string(di++);
      affine_term t;
      if (dj.contains("iter") && !dj.at("iter").is_null())
        t.iter = dj.at("iter").get<std::string>();
      if (dj.contains("coeff")) t.coeff = parse_sym_int(dj.at("coeff"), ctx, dw);
      if (dj.contains("offset")) t.offset = parse_sym_int(dj.at("offset"), ctx, dw);
      acc.dims.push_back(std::move(t));
    }
  }
  return acc;
}

void parse_body(const json& items, parse_ctx& ctx, std::vector<body_ref>& out,
                const std::string& where);

loop_decl parse_loop(const json& j, parse_ctx& ctx, const std::string& where) {
  loop_decl l;
  if (!j.is_object()) throw parse_error("loop must be an object", where);
  l.id = j.value("id", std::string{});
  ctx.claim(l.id, where);
  if (!j.contains("trip_count")) throw parse_error("loop needs 'trip_count'", where);
  l.trip_count = parse_extent(j.at("trip_count"), ctx, where + "/trip_count");
  l.carried_dependency = j.value("carried_dependency", false);
  if (j.contains("accesses")) {
    size_t ai = 0;
    for (const auto& aj : j.at("accesses"))
      l.accesses.push_back(parse_access(aj, ctx, where + "/accesses/" + std::to_string(ai++)));
  }
  if (j.contains("body")) parse_body(j.at("body"), ctx, l.body, where + "/body");
  return l;
}

module_decl parse_module(const json& j, parse_ctx& ctx, const std::string& where) {
  module_decl m;
  if (!j.is_object()) throw parse_error("module call must be an object", where);
  m.id = j.value("id", std::string{});
  ctx.claim(m.id, where);
  if (j.contains("locals"))
    for (const auto& lj : j.at("locals")) m.locals.push_back(lj.get<std::string>());
  if (j.contains("accesses")) {
    size_t ai = 0;
    for (const auto& aj : j.at("accesses"))
      m.accesses.push_back(parse_access(aj, ctx, where + "/accesses/" + std::to_string(ai++)));
  }
  if (j.contains("body")) parse_body(j.at("body"), ctx, m.body, where + "/body");
  return m;
}

void parse_body(const json& items, parse_ctx& ctx, std::vector<body_ref>& out,
                const std::string& where) {
  if (!items.is_array()) throw parse_error("body must be a list", where);
  size_t i = 0;
  for (const auto& item : items) {
    const std::string iw = where + "/" + std::to_string(i++);
    if (!item.is_object()) throw parse_error("body item must be an object", iw);
    if (item.contains("loop")) {
      loop_decl l = parse_loop(item.at("loop"), ctx, iw + "/loop");
      out.push_back({body_ref::loop, l.id});
      ctx.spec->loops.push_back(std::move(l));
    } else if (item.contains("call")) {
      module_decl m = parse_module(item.at("call"), ctx, iw + "/call");
      out.push_back({body_ref::call, m.id});
      ctx.spec->modules.push_back(std::move(m));
    } else if (item.contains("stmts")) {
      std::string label;
      if (item.at("stmts").is_string()) label = item.at("stmts").get<std::string>();
      out.push_back({body_ref::stmts, label});
    } else {
      throw parse_error("body item must be one of loop/call/stmts", iw);
    }
  }
}

// Checks every access after the full document is known: arrays must be
// declared, iterators must name loops.
void validate_accesses(const kernel_spec& spec) {
  auto check = [&](const std::vector<array_access>& accs, const std::string& owner) {
    for (const auto& acc : accs) {
      if (!spec.find_array(acc.array))
        throw parse_error("access to undeclared array '" + acc.array + "'", owner);
      for (const auto& t : acc.dims)
        if (!t.iter.empty() && !spec.find_loop(t.iter))
          throw parse_error("access iterator '" + t.iter + "' is not a loop", owner);
    }
  };
  for (const auto& l : spec.loops) check(l.accesses, l.id);
  for (const auto& m : spec.modules) check(m.accesses, m.id);
}

ordered_json sym_to_json(const sym_int& v) {
  if (v.is_literal()) return ordered_json(v.value);
  return ordered_json(v.symbol);
}

ordered_json extent_to_json(const extent_t& e) {
  if (e.known) return ordered_json(e.value);
  if (!e.symbol.empty()) return ordered_json(e.symbol);
  return ordered_json("dynamic");
}

ordered_json access_to_json(const array_access& a) {
  ordered_json j;
  j["array"] = a.array;
  ordered_json dims = ordered_json::array();
  for (const auto& t : a.dims) {
    ordered_json d;
    d["coeff"] = sym_to_json(t.coeff);
    d["offset"] = sym_to_json(t.offset);
    if (t.iter.empty())
      d["iter"] = nullptr;
    else
      d["iter"] = t.iter;
    dims.push_back(std::move(d));
  }
  j["dims"] = std::move(dims);
  if (a.irregular) j["irregular"] = true;
  return j;
}

ordered_json loop_to_json(const kernel_spec& spec, const loop_decl& l);

ordered_json body_to_json(const kernel_spec& spec, const std::vector<body_ref>& body) {
  ordered_json items = ordered_json::array();
  for (const auto& ref : body) {
    ordered_json item;
    switch (ref.kind) {
      case body_ref::loop:
        item["loop"] = loop_to_json(spec, *spec.find_loop(ref.id));
        break;
      case body_ref::call: {
        const module_decl& m = *spec.find_module(ref.id);
        ordered_json mj;
        mj["id"] = m.id;
        if (!m.locals.empty()) mj["locals"] = m.locals;
        if (!m.accesses.empty()) {
          ordered_json accs = ordered_json::array();
          for (const auto& a : m.accesses) accs.push_back(access_to_json(a));
          mj["accesses"] = std::move(accs);
        }
        if (!m.body.empty()) mj["body"] = body_to_json(spec, m.body);
        item["call"] = std::move(mj);
        break;
      }
      case body_ref::stmts:
        item["stmts"] = ref.id.empty() ? ordered_json(true) : ordered_json(ref.id);
        break;
    }
    items.push_back(std::move(item));
  }
  return items;
}

ordered_json loop_to_json(const kernel_spec& spec, const loop_decl& l) {
  ordered_json j;
  j["id"] = l.id;
  j["trip_count"] = extent_to_json(l.trip_count);
  if (l.carried_dependency) j["carried_dependency"] = true;
  if (!l.accesses.empty()) {
    ordered_json accs = ordered_json::array();
    for (const auto& a : l.accesses) accs.push_back(access_to_json(a));
    j["accesses"] = std::move(accs);
  }
  if (!l.body.empty()) j["body"] = body_to_json(spec, l.body);
  return j;
}

}  // namespace

kernel_spec parse_kernel_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw parse_error(std::string("invalid JSON: ") + e.what(), "");
  }
  if (!doc.is_object()) throw parse_error("document must be a JSON object", "/");

  kernel_spec spec;
  parse_ctx ctx{&spec, {}};

  if (doc.value("format_version", 0) != 1)
    throw parse_error("unsupported or missing format_version (expected 1)", "/format_version");
  spec.format_version = 1;

  if (!doc.contains("name") || !doc.at("name").is_string() ||
      doc.at("name").get<std::string>().empty())
    throw parse_error("kernel needs a non-empty 'name'", "/name");
  spec.name = doc.at("name").get<std::string>();
  ctx.claim(spec.name, "/name");

  if (doc.contains("scalars")) {
    size_t si = 0;
    for (const auto& sj : doc.at("scalars")) {
      const std::string where = "/scalars/" + std::to_string(si++);
      scalar_decl s;
      s.name = sj.value("name", std::string{});
      ctx.claim(s.name, where);
      if (sj.contains("value")) s.value = require_int(sj.at("value"), where + "/value");
      spec.scalars.push_back(std::move(s));
    }
  }

  if (!doc.contains("arrays") || !doc.at("arrays").is_array())
    throw parse_error("kernel needs an 'arrays' list", "/arrays");
  size_t ai = 0;
  for (const auto& aj : doc.at("arrays")) {
    const std::string where = "/arrays/" + std::to_string(ai++);
    array_decl a;
    a.id = aj.value("id", std::string{});
    ctx.claim(a.id, where);
    a.element_bits = static_cast<int>(aj.value("element_bits", 32));
    if (a.element_bits < 1 || a.element_bits > 64)
      throw parse_error("element_bits must be in 1..64", where);
    if (!aj.contains("dims") || !aj.at("dims").is_array() || aj.at("dims").empty())
      throw parse_error("array needs a non-empty 'dims' list", where);
    size_t di = 0;
    for (const auto& dj : aj.at("dims"))
      a.dims.push_back(parse_extent(dj, ctx, where + "/dims/" + std::to_string(di++)));
    const std::string loc = aj.value("location", std::string("off_chip"));
    if (loc == "off_chip")
      a.location = array_location::off_chip;
    else if (loc == "on_chip")
      a.location = array_location::on_chip;
    else
      throw parse_error("location must be off_chip or on_chip", where);
    const std::string dir = aj.value("direction", std::string("inout"));
    if (dir == "in")
      a.direction = array_direction::in;
    else if (dir == "out")
      a.direction = array_direction::out;
    else if (dir == "inout")
      a.direction = array_direction::inout;
    else
      throw parse_error("direction must be in/out/inout", where);
    spec.arrays.push_back(std::move(a));
  }

  if (!doc.contains("top_loop"))
    throw parse_error("kernel needs a 'top_loop'", "/top_loop");
  if (doc.at("top_loop").is_array())
    throw parse_error("multiple top-level loops are not allowed", "/top_loop");
  loop_decl top = parse_loop(doc.at("top_loop"), ctx, "/top_loop");
  spec.top_loop = top.id;
  // keep document order: the top loop is declared before its nested loops
  spec.loops.insert(spec.loops.begin(), std::move(top));

  validate_accesses(spec);
  return spec;
}

std::string serialize(const kernel_spec& spec) {
  ordered_json doc;
  doc["format_version"] = spec.format_version;
  doc["name"] = spec.name;
  if (!spec.scalars.empty()) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : spec.scalars) {
      ordered_json sj;
      sj["name"] = s.name;
      if (s.value) sj["value"] = *s.value;
      arr.push_back(std::move(sj));
    }
    doc["scalars"] = std::move(arr);
  }
  ordered_json arrays = ordered_json::array();
  for (const auto& a : spec.arrays) {
    ordered_json aj;
    aj["id"] = a.id;
    aj["element_bits"] = a.element_bits;
    ordered_json dims = ordered_json::array();
    for (const auto& d : a.dims) dims.push_back(extent_to_json(d));
    aj["dims"] = std::move(dims);
    aj["location"] = a.location == array_location::off_chip ? "off_chip" : "on_chip";
    aj["direction"] = a.direction == array_direction::in    ? "in"
                      : a.direction == array_direction::out ? "out"
                                                            : "inout";
    arrays.push_back(std::move(aj));
  }
  doc["arrays"] = std::move(arrays);
  doc["top_loop"] = loop_to_json(spec, *spec.find_loop(spec.top_loop));
  return doc.dump(2) + "\n";
}

// --------------------------------------------------------------------------
// Hierarchy

namespace {

void attach_body(arch_hierarchy& h, int parent, const std::vector<body_ref>& body);

int add_loop_node(arch_hierarchy& h, int parent, const loop_decl& l) {
  arch_node n;
  n.kind = arch_node::kind_t::loop;
  n.id = l.id;
  n.parent = parent;
  n.loop = &l;
  h.nodes.push_back(std::move(n));
  const int idx = static_cast<int>(h.nodes.size()) - 1;
  h.nodes[static_cast<size_t>(parent)].children.push_back(idx);
  attach_body(h, idx, l.body);
  return idx;
}

int add_module_node(arch_hierarchy& h, int parent, const module_decl& m) {
  arch_node n;
  n.kind = arch_node::kind_t::module;
  n.id = m.id;
  n.parent = parent;
  n.mod = &m;
  for (const auto& local : m.locals) {
    const array_decl* a = h.spec->find_array(local);
    if (!a) throw parse_error("module '" + m.id + "' claims undeclared local '" + local + "'", m.id);
    if (a->location != array_location::on_chip)
      throw parse_error("module local '" + local + "' must be an on_chip array", m.id);
    n.arrays.push_back(a);
  }
  h.nodes.push_back(std::move(n));
  const int idx = static_cast<int>(h.nodes.size()) - 1;
  h.nodes[static_cast<size_t>(parent)].children.push_back(idx);
  attach_body(h, idx, m.body);
  return idx;
}

void attach_body(arch_hierarchy& h, int parent, const std::vector<body_ref>& body) {
  for (const auto& ref : body) {
    switch (ref.kind) {
      case body_ref::loop:
        add_loop_node(h, parent, *h.spec->find_loop(ref.id));
        break;
      case body_ref::call:
        add_module_node(h, parent, *h.spec->find_module(ref.id));
        break;
      case body_ref::stmts:
        h.nodes[static_cast<size_t>(parent)].has_stmts = true;
        break;
    }
  }
}

}  // namespace

int arch_hierarchy::find(const std::string& id) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

bool arch_hierarchy::is_ancestor(int a, int b) const {
  for (int cur = at(b).parent; cur != -1; cur = at(cur).parent)
    if (cur == a) return true;
  return false;
}

arch_hierarchy build_hierarchy(const kernel_spec& spec) {
  arch_hierarchy h;
  h.spec = &spec;

  arch_node root;
  root.kind = arch_node::kind_t::module;
  root.id = spec.name;
  std::set<std::string> claimed;
  for (const auto& m : spec.modules)
    for (const auto& l : m.locals) claimed.insert(l);
  for (const auto& a : spec.arrays)
    if (a.location == array_location::off_chip || !claimed.count(a.id))
      root.arrays.push_back(&a);
  h.nodes.push_back(std::move(root));

  const loop_decl* top = spec.find_loop(spec.top_loop);
  if (!top) throw parse_error("top loop '" + spec.top_loop + "' not found", "/top_loop");
  add_loop_node(h, 0, *top);

  // every declared loop/module must appear exactly once
  const size_t expected = 1 + spec.loops.size() + spec.modules.size();
  if (h.nodes.size() != expected)
    throw parse_error("hierarchy does not cover every declared loop/module", spec.name);
  return h;
}

std::vector<const arch_node*> walk(const arch_hierarchy& h) {
  // nodes are stored in construction order, which is already pre-order
  std::vector<const arch_node*> seq;
  seq.reserve(h.nodes.size());
  for (const auto& n : h.nodes) seq.push_back(&n);
  return seq;
}

}  // namespace cppdse
