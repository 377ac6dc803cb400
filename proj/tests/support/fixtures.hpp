#ifndef CPPDSE_TESTS_SUPPORT_FIXTURES_HPP
#define CPPDSE_TESTS_SUPPORT_FIXTURES_HPP

#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cppdse/design.hpp"
#include "cppdse/legalize.hpp"
#include "cppdse/model.hpp"

namespace testsup {

inline std::string fixture_dir() { return FIXTURE_DIR; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A kernel parsed all the way down to calibrated model constants. The members
// point at each other (hierarchy -> spec, design -> hierarchy), so the bundle
// lives behind a unique_ptr and never moves.
struct fixture {
  cppdse::kernel_spec spec;
  cppdse::arch_hierarchy h;
  cppdse::synth_report report;
  cppdse::platform_config platform;
  cppdse::legalization_verdict verdict;
  std::string pe_loop;
  cppdse::cpp_design design;
  cppdse::model_constants model;
};

inline std::unique_ptr<fixture> load_fixture(const std::string& kernel,
                                             const std::string& platform_file = "virtex7") {
  auto f = std::make_unique<fixture>();
  f->spec = cppdse::parse_kernel_spec(read_file(fixture_dir() + "/kernels/" + kernel + ".json"));
  f->h = cppdse::build_hierarchy(f->spec);
  f->report = cppdse::parse_report(read_file(fixture_dir() + "/reports/" + kernel + ".json"));
  f->platform =
      cppdse::parse_platform(read_file(fixture_dir() + "/platforms/" + platform_file + ".json"));
  f->verdict = cppdse::legalize(f->h, f->report, f->platform);
  if (!f->verdict.legal) throw std::runtime_error("fixture " + kernel + " fails legalization");
  f->pe_loop = f->verdict.pe_loop_candidates.front();
  f->design = cppdse::construct_design(f->h, f->pe_loop, f->platform.axi_max_bits);
  f->model = cppdse::init_model(f->design, f->report);
  return f;
}

// Builds a point from (name, value) pairs; every parameter must be covered.
inline cppdse::design_point named_point(
    const cppdse::cpp_design& d,
    const std::vector<std::pair<std::string, std::int64_t>>& vals) {
  cppdse::design_point pt;
  pt.reserve(d.params.size());
  for (const auto& p : d.params) {
    bool found = false;
    for (const auto& kv : vals) {
      if (kv.first == p.name) {
        pt.push_back(kv.second);
        found = true;
        break;
      }
    }
    if (!found) throw std::runtime_error("named_point: missing parameter " + p.name);
  }
  if (vals.size() != d.params.size())
    throw std::runtime_error("named_point: extra parameter values supplied");
  return pt;
}

// The kernels the search and validation tests sweep, with their platforms.
struct bench_kernel {
  const char* kernel;
  const char* platform;
};

inline const std::vector<bench_kernel>& bench_kernels() {
  static const std::vector<bench_kernel> v = {{"dotburst", "virtex7"},
                                              {"bytepack", "smallfpga"},
                                              {"seqalign", "virtex7"},
                                              {"lookup28", "virtex7"},
                                              {"relay50", "highlat"}};
  return v;
}

}  // namespace testsup

#endif  // CPPDSE_TESTS_SUPPORT_FIXTURES_HPP
