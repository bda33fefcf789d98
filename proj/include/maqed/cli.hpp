#pragma once

// The maqed front end: factorize | verify | kernels | evolve.

#include "maqed/config.hpp"
#include "maqed/coupling.hpp"
#include "maqed/dynamics.hpp"
#include "maqed/io.hpp"
#include "maqed/noise_algebra.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <thread>

namespace maqed {

enum ExitCode : int {
  ExitOk = 0,
  ExitConfig = 1,
  ExitNonPassive = 2,
  ExitIdentity = 3,
  ExitGeometry = 4,
};

inline int exit_code_for(Errc e) {
  switch (e) {
  case Errc::NonPassive: return ExitNonPassive;
  case Errc::IdentityViolated: return ExitIdentity;
  case Errc::UnsupportedGeometry: return ExitGeometry;
  default: return ExitConfig;
  }
}

/// MAQED_THREADS caps the worker count; unset means the hardware count.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("MAQED_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<unsigned>(n, unsigned(v));
    else if (v < 1) n = 1;
  }
  return n;
}

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Results go
/// to caller-owned slots, so the output does not depend on scheduling.
template <class F> void parallel_for(std::size_t n, F &&fn) {
  const unsigned workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex lock;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard g(lock);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto &t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct RunContext {
  ScenarioConfig config;
  std::string config_bytes;
  std::filesystem::path out;
  std::ostream *log = &std::cerr;
};

namespace cli_detail {

inline std::vector<double> abs_times(const ScenarioConfig &c) {
  std::vector<double> t;
  for (const double v : c.time.build()) t.push_back(std::abs(v));
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

inline std::vector<WaveMode> selected_modes(const ScenarioConfig &c,
                                            const std::vector<WaveMode> &all,
                                            bool excited_only) {
  std::set<std::array<int, 3>> want;
  if (!excited_only) want.insert(c.kernel_modes.begin(), c.kernel_modes.end());
  if (want.empty()) {
    for (const auto &a : c.modes) want.insert(a.n);
    for (const auto &a : c.medium_amplitudes) want.insert(a.n);
  }
  std::vector<WaveMode> out;
  for (const auto &m : all) {
    if (want.empty() ? !excited_only : want.count(m.n) > 0) out.push_back(m);
  }
  return out;
}

inline json pole_list(const KernelEngine &eng) {
  json arr = json::array();
  if (eng.poles()) {
    for (const cplx p : eng.poles()->lambda_roots) arr.push_back({p.real(), p.imag()});
  }
  return arr;
}

inline std::vector<std::size_t> q_nodes_for(const ScenarioConfig &c,
                                            const std::array<int, 3> &n) {
  std::set<std::size_t> qs(c.q_nodes.begin(), c.q_nodes.end());
  for (const auto &a : c.medium_amplitudes) {
    if (a.n == n) qs.insert(a.q);
  }
  return {qs.begin(), qs.end()};
}

inline KernelOptions kernel_options(const ScenarioConfig &c) {
  KernelOptions o;
  o.method = c.method;
  return o;
}

inline void write_artifacts(const RunContext &ctx, const std::string &sidecar_name,
                            json sidecar,
                            const std::vector<std::pair<std::string, std::string>> &files) {
  json hashes = json::object();
  for (const auto &[name, bytes] : files) {
    write_file(ctx.out / name, bytes);
    hashes[name] = sha256_hex(bytes);
  }
  sidecar["files"] = hashes;
  sidecar["provenance"] = provenance(ctx.config_bytes);
  write_file(ctx.out / sidecar_name, json_text(sidecar));
}

} // namespace cli_detail

// ------------------------------------------------------------- factorize

inline int cmd_factorize(const RunContext &ctx) {
  const auto &c = ctx.config;
  const auto k = c.constants();
  const auto grid = c.omega.build();
  json windows = json::array();
  for (std::size_t cell = 0; cell < c.electric.size(); ++cell) {
    for (const auto &[field, list] :
         {std::pair{"electric", &c.electric}, std::pair{"magnetic", &c.magnetic}}) {
      for (const auto &w : nonpassive_windows((*list)[cell].model, grid)) {
        windows.push_back({{"cell", cell}, {"field", field}, {"lo", w.lo}, {"hi", w.hi}});
      }
    }
  }
  if (!windows.empty()) {
    json rep;
    rep["units"] = std::string(unit_tag(c.units));
    rep["status"] = "non-passive";
    rep["windows"] = windows;
    cli_detail::write_artifacts(ctx, "nonpassive.json", rep, {});
    *ctx.log << "non-passive medium: " << windows.size() << " window(s), first ["
             << windows[0]["lo"].get<double>() << ", " << windows[0]["hi"].get<double>()
             << "] (" << windows[0]["field"].get<std::string>() << ")\n";
    return ExitNonPassive;
  }
  std::vector<std::pair<std::string, std::string>> files;
  std::vector<CouplingSpectrum> spectra(c.electric.size());
  parallel_for(spectra.size(), [&](std::size_t cell) {
    spectra[cell] = factorize_spectrum(
        build_spectrum(c.electric[cell].model, c.magnetic[cell].model, grid, k));
  });
  for (std::size_t cell = 0; cell < spectra.size(); ++cell) {
    const std::string suffix = c.homogeneous() ? "" : "_cell" + std::to_string(cell);
    files.emplace_back("spectrum" + suffix + ".csv", spectrum_csv(spectra[cell]));
    files.emplace_back("factors" + suffix + ".csv", factors_csv(spectra[cell]));
  }
  json side;
  side["units"] = std::string(unit_tag(c.units));
  side["constants"] = constants_json(k);
  side["grid"] = {{"reference", c.omega.omega_ref},
                  {"lo", c.omega.lo},
                  {"hi", c.omega.hi},
                  {"nodes", c.omega.nodes}};
  side["cells"] = c.cells;
  side["gauge"] = "canonical";
  cli_detail::write_artifacts(ctx, "spectrum.json", side, files);
  return ExitOk;
}

// ---------------------------------------------------------------- verify

inline int cmd_verify(const RunContext &ctx) {
  const auto &c = ctx.config;
  const auto k = c.constants();
  json checks = json::array();
  bool all_pass = true;
  std::size_t nonpassive = 0;
  std::optional<CouplingSpectrum> external;
  std::vector<std::pair<std::string, std::string>> inputs;
  if (!c.spectrum.empty()) {
    if (!c.homogeneous()) {
      throw Error(Errc::Config, "verify.spectrum applies to homogeneous media only");
    }
    const std::string bytes = read_file(c.spectrum);
    inputs.emplace_back(c.spectrum, bytes);
    external = read_spectrum_csv(bytes, c.spectrum, k);
  }
  const auto grid = external ? external->omega : c.omega.build();

  for (std::size_t cell = 0; cell < c.electric.size(); ++cell) {
    CommutatorCheck opt;
    opt.tol = c.tolerance;
    if (external) opt.spectrum = &*external;
    const auto rep = verify_commutator_identity(c.electric[cell].model, c.magnetic[cell].model,
                                                grid, k, opt);
    json nodes = json::array();
    for (const auto &n : rep.nodes) {
      json j{{"omega", n.omega}, {"dev_P", n.dev_P}, {"dev_M", n.dev_M}, {"passive", n.passive}};
      if (!n.error.empty()) j["error"] = n.error;
      nodes.push_back(j);
    }
    checks.push_back({{"name", "noise_commutator"},
                      {"cell", cell},
                      {"tolerance", rep.tolerance},
                      {"passed", rep.passed},
                      {"max_dev_P", rep.max_dev_P},
                      {"argmax_P", rep.argmax_P},
                      {"max_dev_M", rep.max_dev_M},
                      {"argmax_M", rep.argmax_M},
                      {"nonpassive_nodes", rep.nonpassive_nodes},
                      {"nodes", nodes}});
    all_pass = all_pass && rep.passed;
    nonpassive += rep.nonpassive_nodes;
  }

  auto is = [&](auto pred) {
    return std::all_of(c.electric.begin(), c.electric.end(), pred) &&
           std::all_of(c.magnetic.begin(), c.magnetic.end(), pred);
  };
  const bool vacuum =
      is([](const ModelConfig &m) { return std::holds_alternative<VacuumModel>(m.model); });
  const bool lossless = is([](const ModelConfig &m) {
    return std::holds_alternative<VacuumModel>(m.model) ||
           std::holds_alternative<InstantaneousModel>(m.model);
  });

  if (lossless) {
    // noise densities vanish identically without absorption
    double worst = 0.0;
    for (std::size_t cell = 0; cell < c.electric.size(); ++cell) {
      const auto s = external ? *external
                              : build_spectrum(c.electric[cell].model, c.magnetic[cell].model,
                                               grid, k);
      for (std::size_t i = 0; i < s.size(); ++i) {
        worst = std::max({worst, s.ffT[i].cwiseAbs().maxCoeff(), s.ggT[i].cwiseAbs().maxCoeff()});
      }
    }
    const bool ok = worst == 0.0;
    checks.push_back({{"name", "nonabsorptive_noise_vanishes"},
                      {"tolerance", 0.0},
                      {"passed", ok},
                      {"max_abs_entry", worst}});
    all_pass = all_pass && ok;
  }

  if (vacuum && c.homogeneous()) {
    const auto modes = enumerate_modes(c.geometry, k.c);
    std::vector<double> dev(modes.size(), 0.0);
    std::vector<char> medium_zero(modes.size(), 1);
    const auto spec = build_spectrum(VacuumModel{}, VacuumModel{}, c.omega.build(), k);
    const std::vector<std::size_t> probe{0, spec.size() / 2, spec.size() - 1};
    parallel_for(modes.size(), [&](std::size_t i) {
      const WaveMode &m = modes[i];
      const LambdaOperator op{m.k, VacuumModel{}, VacuumModel{}, k};
      const auto ts = linear_grid(0.0, 10.0 / m.omega, 41);
      const auto mk = compute_kernels(op, m, spec, probe, ts, cli_detail::kernel_options(c));
      const CTensor3 pt = transverse_delta(m.k).cast<cplx>();
      double d = 0.0;
      for (std::size_t j = 0; j < ts.size(); ++j) {
        const CTensor3 want = cplx(0.0, k.c * k.c) * std::exp(cplx(0.0, -m.omega * ts[j])) * pt;
        d = std::max(d, (pt * mk.eta_plus.values[j] * pt - want).cwiseAbs().maxCoeff());
      }
      dev[i] = d / (k.c * k.c);
      for (const auto *set : {&mk.xi_plus, &mk.xi_minus, &mk.zeta_plus, &mk.zeta_minus}) {
        for (const auto &ks : *set) {
          for (const auto &v : ks.values) {
            if (!v.isZero(0.0)) medium_zero[i] = 0;
          }
        }
      }
    });
    const double worst = *std::max_element(dev.begin(), dev.end());
    const bool zero = std::all_of(medium_zero.begin(), medium_zero.end(), [](char z) { return z; });
    const bool ok = worst < 1e-8 && zero;
    checks.push_back({{"name", "vacuum_reduction"},
                      {"tolerance", 1e-8},
                      {"passed", ok},
                      {"modes", modes.size()},
                      {"max_rel_dev_eta_T", worst},
                      {"medium_kernels_zero", zero}});
    all_pass = all_pass && ok;
  }

  json rep;
  rep["units"] = std::string(unit_tag(c.units));
  rep["constants"] = constants_json(k);
  rep["passed"] = all_pass && nonpassive == 0;
  rep["checks"] = checks;
  rep["provenance"] = provenance(ctx.config_bytes, inputs);
  write_file(ctx.out / "verify_report.json", json_text(rep));
  if (nonpassive > 0) {
    *ctx.log << "non-passive medium: " << nonpassive << " node(s) excluded\n";
    return ExitNonPassive;
  }
  if (!all_pass) {
    for (const auto &ch : checks) {
      if (!ch["passed"].get<bool>()) {
        *ctx.log << "identity violated: " << ch["name"].get<std::string>();
        if (ch.contains("max_dev_P")) {
          *ctx.log << " max_dev_P=" << ch["max_dev_P"].get<double>()
                   << " max_dev_M=" << ch["max_dev_M"].get<double>();
        }
        *ctx.log << "\n";
      }
    }
    return ExitIdentity;
  }
  return ExitOk;
}

// --------------------------------------------------------------- kernels

namespace cli_detail {

struct KernelJob {
  WaveMode mode;
  ModeKernels kernels;
  json poles;
};

inline std::vector<KernelJob> run_kernels(const ScenarioConfig &c,
                                          const std::vector<WaveMode> &modes,
                                          const CouplingSpectrum &spec) {
  const auto k = c.constants();
  const LambdaOperator base =
      LambdaOperator::from(c.map(c.electric), c.map(c.magnetic), Vec3::Zero(), k);
  const auto ts = abs_times(c);
  std::vector<KernelJob> jobs(modes.size());
  parallel_for(modes.size(), [&](std::size_t i) {
    LambdaOperator op = base;
    op.k = modes[i].k;
    const auto opt = kernel_options(c);
    jobs[i].mode = modes[i];
    jobs[i].kernels = compute_kernels(op, modes[i], spec, q_nodes_for(c, modes[i].n), ts, opt);
    jobs[i].poles = pole_list(KernelEngine(op, modes[i], opt));
  });
  return jobs;
}

inline CouplingSpectrum spectrum_for_kernels(const ScenarioConfig &c, bool needed) {
  const auto k = c.constants();
  if (!needed) {
    CouplingSpectrum s;
    s.consts = k;
    s.omega = c.omega.build();
    s.ffT.assign(s.omega.size(), Tensor3::Zero());
    s.ggT.assign(s.omega.size(), Tensor3::Zero());
    return s;
  }
  return factorize_spectrum(
      build_spectrum(c.electric.front().model, c.magnetic.front().model, c.omega.build(), k));
}

} // namespace cli_detail

inline int cmd_kernels(const RunContext &ctx) {
  const auto &c = ctx.config;
  const auto k = c.constants();
  if (!c.homogeneous()) {
    throw Error(Errc::UnsupportedGeometry, "kernels need a homogeneous medium");
  }
  const auto all = enumerate_modes(c.geometry, k.c);
  const auto modes = cli_detail::selected_modes(c, all, false);
  bool need_spec = !c.q_nodes.empty() || !c.medium_amplitudes.empty();
  const auto spec = cli_detail::spectrum_for_kernels(c, need_spec);
  const auto jobs = cli_detail::run_kernels(c, modes, spec);
  std::vector<std::pair<std::string, std::string>> files;
  json list = json::array();
  for (const auto &j : jobs) {
    const std::string tag = mode_tag(j.mode.n);
    json m{{"n", j.mode.n},
           {"k", {j.mode.k(0), j.mode.k(1), j.mode.k(2)}},
           {"omega", j.mode.omega},
           {"file", "kernels_" + tag + ".csv"},
           {"poles", j.poles}};
    files.emplace_back("kernels_" + tag + ".csv", kernels_csv(j.kernels, c.units));
    if (!j.kernels.q_nodes.empty()) {
      m["medium_file"] = "medium_kernels_" + tag + ".csv";
      files.emplace_back("medium_kernels_" + tag + ".csv",
                         medium_kernels_csv(j.kernels, spec, c.units));
    }
    list.push_back(m);
  }
  json side;
  side["units"] = std::string(unit_tag(c.units));
  side["constants"] = constants_json(k);
  side["method"] = c.method == LaplaceMethod::Residue ? "residue" : "talbot";
  side["branches"] = "eta columns: forward kernel at t; etam columns: backward kernel at -t";
  side["modes"] = list;
  cli_detail::write_artifacts(ctx, "kernels.json", side, files);
  return ExitOk;
}

// ---------------------------------------------------------------- evolve

inline int cmd_evolve(const RunContext &ctx) {
  const auto &c = ctx.config;
  const auto k = c.constants();
  if (!c.homogeneous()) {
    throw Error(Errc::UnsupportedGeometry, "evolution needs a homogeneous medium");
  }
  const auto all = enumerate_modes(c.geometry, k.c);
  const auto modes = cli_detail::selected_modes(c, all, true);
  const auto spec = cli_detail::spectrum_for_kernels(c, !c.medium_amplitudes.empty());

  InitialState init;
  auto index_of = [&](const std::array<int, 3> &n) {
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i].n == n) return i;
    }
    throw Error(Errc::Config, "mode not in the enumerated box");
  };
  for (const auto &a : c.modes) {
    auto &slot = init.modes[index_of(a.n)];
    slot.alpha[0] += a.alpha[0];
    slot.alpha[1] += a.alpha[1];
  }
  for (const auto &a : c.medium_amplitudes) {
    init.medium.push_back({index_of(a.n), a.nu, a.q, a.delta, a.beta});
  }
  const auto jobs = cli_detail::run_kernels(c, modes, spec);
  KernelSet set;
  json list = json::array();
  for (const auto &j : jobs) {
    set.push_back(j.kernels);
    list.push_back({{"n", j.mode.n}, {"omega", j.mode.omega}, {"poles", j.poles}});
  }
  const auto field = evolve_field_expectation(all, set, init, spec, c.points, c.time.build(), k,
                                              c.geometry.volume());
  json side;
  side["units"] = std::string(unit_tag(c.units));
  side["constants"] = constants_json(k);
  side["volume"] = c.geometry.volume();
  side["modes"] = list;
  cli_detail::write_artifacts(ctx, "field.json", side, {{"field.csv", field_csv(field, c.units)}});
  return ExitOk;
}

// ------------------------------------------------------------------ main

inline int run_cli(int argc, char **argv, std::ostream &out = std::cout,
                   std::ostream &err = std::cerr) {
  CLI::App app{"maqed: quantized fields in anisotropic absorptive magnetodielectrics"};
  std::string command, config_path, out_dir;
  bool dump = false;
  app.add_option("command", command, "factorize | verify | kernels | evolve")
      ->required()
      ->check(CLI::IsMember({"factorize", "verify", "kernels", "evolve"}));
  app.add_option("--config", config_path, "scenario YAML")->required();
  app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  app.add_flag("--dump-config", dump, "print the resolved configuration and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return ExitOk;
    }
    err << "maqed: " << e.what() << "\n" << app.help();
    return ExitConfig;
  }
  try {
    RunContext ctx;
    ctx.config_bytes = read_file(config_path);
    ctx.config = parse_config(ctx.config_bytes, config_path);
    if (!out_dir.empty()) ctx.config.out_dir = out_dir;
    ctx.out = ctx.config.out_dir;
    ctx.log = &err;
    if (dump) {
      out << dump_config(ctx.config);
      return ExitOk;
    }
    if (command == "factorize") return cmd_factorize(ctx);
    if (command == "verify") return cmd_verify(ctx);
    if (command == "kernels") return cmd_kernels(ctx);
    return cmd_evolve(ctx);
  } catch (const Error &e) {
    err << "maqed: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception &e) {
    err << "maqed: " << e.what() << "\n";
    return ExitConfig;
  }
}

} // namespace maqed
