#include "cppdse/legalize.hpp"

#include <algorithm>
#include <sstream>

namespace cppdse {

namespace {

// elements covered by one PE-iterator step along an access term: the term
// coefficient times the extent of every trailing array dimension
bool chunk_of_access(const array_decl& a, const array_access& acc, const std::string& pe_loop,
                     std::int64_t* out) {
  for (size_t di = 0; di < acc.dims.size(); ++di) {
    const affine_term& t = acc.dims[di];
    if (t.iter != pe_loop) continue;
    if (!t.coeff.is_literal() || t.coeff.value <= 0) return false;
    std::int64_t chunk = t.coeff.value;
    for (size_t k = di + 1; k < a.dims.size(); ++k) {
      if (!a.dims[k].known) return false;
      chunk *= a.dims[k].value;
    }
    *out = chunk;
    return true;
  }
  return false;
}

bool touches_pe(const array_access& acc, const std::string& pe_loop) {
  if (acc.irregular) return false;
  for (const auto& t : acc.dims)
    if (t.iter == pe_loop) return true;
  return false;
}

template <typename Fn>
void each_access(const kernel_spec& spec, Fn&& fn) {
  for (const auto& l : spec.loops)
    for (const auto& acc : l.accesses) fn(acc);
  for (const auto& m : spec.modules)
    for (const auto& acc : m.accesses) fn(acc);
}

}  // namespace

std::vector<array_class> classify_arrays(const arch_hierarchy& h, const std::string& pe_loop) {
  const kernel_spec& spec = *h.spec;
  std::vector<array_class> out;
  for (const auto& a : spec.arrays) {
    if (a.location != array_location::off_chip) continue;
    array_class cls;
    cls.array = &a;

    bool irregular_touch = false;
    bool chunk_ok = true;
    std::int64_t chunk = 0;
    each_access(spec, [&](const array_access& acc) {
      if (acc.array != a.id) return;
      if (acc.irregular) {
        irregular_touch = true;
        return;
      }
      if (!touches_pe(acc, pe_loop)) return;
      cls.task_dependent = true;
      std::int64_t c = 0;
      if (chunk_of_access(a, acc, pe_loop, &c))
        chunk = std::max(chunk, c);
      else
        chunk_ok = false;
    });

    if (cls.task_dependent) {
      cls.chunk_static = chunk_ok && !irregular_touch && chunk > 0;
      cls.chunk_elems = cls.chunk_static ? chunk : 0;
    } else {
      const auto total = a.total_elems();
      cls.size_static = total.has_value();
      cls.total_elems = cls.size_static ? *total : 0;
    }
    out.push_back(cls);
  }
  return out;
}

check_result check_task_dependent(const arch_hierarchy& h, const std::string& pe_loop,
                                  const std::vector<array_class>& classes) {
  const kernel_spec& spec = *h.spec;
  for (const auto& cls : classes) {
    if (!cls.task_dependent) continue;
    if (!cls.chunk_static)
      return {false, "cannot statically allocate a chunk of array '" + cls.array->id +
                         "' per iteration of loop '" + pe_loop + "'"};

    // chunks of neighboring iterations must not overlap: constant offset
    // strictly inside the stride
    check_result bad{true, {}};
    each_access(spec, [&](const array_access& acc) {
      if (!bad.ok || acc.array != cls.array->id || acc.irregular) return;
      for (const auto& t : acc.dims) {
        if (t.iter != pe_loop) continue;
        // chunk_static already guarantees a positive literal coefficient here
        if (!t.coeff.is_literal() || !t.offset.is_literal()) continue;
        const std::int64_t stride = t.coeff.value;
        if (t.offset.value < 0 || t.offset.value >= stride) {
          std::ostringstream os;
          os << "overlapping chunks of array '" << cls.array->id << "': offset "
             << t.offset.value << " reaches outside the stride " << stride << " of loop '"
             << pe_loop << "'";
          bad = {false, os.str()};
        }
      }
    });
    if (!bad.ok) return bad;
  }
  return {true, {}};
}

check_result check_task_independent(const arch_hierarchy& h, const std::string& pe_loop,
                                    const std::vector<array_class>& classes,
                                    const platform_config& platform) {
  std::int64_t blocks = 0;
  for (const auto& cls : classes) {
    if (cls.task_dependent) continue;
    if (!cls.size_static)
      return {false, "size not inferable for array '" + cls.array->id +
                         "'; it would be replicated per PE of loop '" + pe_loop + "'"};
    blocks += v_blocks(cls.total_elems, cls.array->element_bits, platform);
  }
  if (blocks == 0) return {true, {}};

  const arch_node* pe = nullptr;
  for (const arch_node* n : walk(h))
    if (n->kind == arch_node::kind_t::loop && n->id == pe_loop) pe = n;
  const std::int64_t max_pe =
      pe && pe->loop->trip_count.known ? pe->loop->trip_count.value : 64;
  if (blocks * max_pe > platform.bram_blocks) {
    std::ostringstream os;
    os << "task-independent arrays need " << blocks * max_pe << " memory blocks at the maximum "
       << max_pe << " PEs of loop '" << pe_loop << "', device has " << platform.bram_blocks;
    return {false, os.str()};
  }
  return {true, {}};
}

check_result check_kernel_size(const arch_hierarchy& h, const std::string& pe_loop,
                               const synth_report& report, const platform_config& platform) {
  const cpp_design d = construct_design(h, pe_loop, platform.axi_max_bits);
  const model_constants m = init_model(d, report);  // report_incomplete passes through

  design_point minimal;
  minimal.reserve(d.params.size());
  for (const auto& prm : d.params) minimal.push_back(prm.values.front());

  const cost_estimate e = estimate(d, m, platform, minimal);
  if (e.fits_100pct) return {true, {}};
  std::ostringstream os;
  os << "kernel does not fit the device even at the minimal configuration of loop '" << pe_loop
     << "' (bram " << e.bram << "/" << platform.bram_blocks << ", lut " << e.lut << "/"
     << platform.luts << ", ff " << e.ff << "/" << platform.ffs << ", dsp " << e.dsp << "/"
     << platform.dsps << ")";
  return {false, os.str()};
}

legalization_verdict legalize(const arch_hierarchy& h, const synth_report& report,
                              const platform_config& platform) {
  legalization_verdict v;
  for (const arch_node* n : walk(h)) {
    if (n->kind != arch_node::kind_t::loop) continue;
    const std::string& pe = n->id;
    const auto classes = classify_arrays(h, pe);

    if (auto r = check_task_dependent(h, pe, classes); !r.ok) {
      v.failures.push_back({pe, "task_dependent", r.message});
      continue;
    }
    if (auto r = check_task_independent(h, pe, classes, platform); !r.ok) {
      v.failures.push_back({pe, "task_independent", r.message});
      continue;
    }
    if (auto r = check_kernel_size(h, pe, report, platform); !r.ok) {
      v.failures.push_back({pe, "kernel_size", r.message});
      continue;
    }
    v.pe_loop_candidates.push_back(pe);
  }
  v.legal = !v.pe_loop_candidates.empty();
  return v;
}

}  // namespace cppdse
