#pragma once

// Scenario files: strict YAML schema, resolution of relative paths, and a
// canonical re-emission that parses back to the same structure.

#include "maqed/coupling.hpp"
#include "maqed/dynamics.hpp"
#include "maqed/error.hpp"
#include "maqed/medium.hpp"
#include "maqed/mode_space.hpp"

#include <yaml-cpp/yaml.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace maqed {

struct ModelConfig {
  SusceptibilityModel model = VacuumModel{};
  std::string table; // resolved path of a tabulated model
};

struct ModeAmplitudeConfig {
  std::array<int, 3> n{};
  std::array<cplx, 2> alpha{0.0, 0.0};
};

struct MediumAmplitudeConfig {
  std::array<int, 3> n{};
  int nu = 0;
  std::size_t q = 0;
  cplx delta = 0.0;
  cplx beta = 0.0;
};

struct TimeGrid {
  double start = 0.0;
  double stop = 10.0;
  std::size_t nodes = 101;

  std::vector<double> build() const {
    if (nodes == 1) return {start};
    return linear_grid(start, stop, nodes);
  }
};

struct ScenarioConfig {
  std::string name = "scenario";
  UnitSystem units = UnitSystem::Natural;
  BoxGeometry geometry;
  std::array<int, 3> cells{1, 1, 1};
  std::vector<ModelConfig> electric{ModelConfig{}};
  std::vector<ModelConfig> magnetic{ModelConfig{}};
  GridSpec omega;
  TimeGrid time;
  std::vector<ModeAmplitudeConfig> modes;
  std::vector<MediumAmplitudeConfig> medium_amplitudes;
  std::vector<Vec3> points{Vec3::Zero()};
  LaplaceMethod method = LaplaceMethod::Residue;
  std::vector<std::array<int, 3>> kernel_modes; // empty: excited modes, else all
  std::vector<std::size_t> q_nodes;
  double tolerance = 1e-10;
  std::string spectrum; // spectrum file checked by verify instead of the model's
  std::string out_dir = "out";

  PhysicalConstants constants() const {
    return units == UnitSystem::SI ? PhysicalConstants::si() : PhysicalConstants::natural();
  }
  bool homogeneous() const { return electric.size() == 1 && magnetic.size() == 1; }
  MaterialMap map(const std::vector<ModelConfig> &models) const {
    MaterialMap m;
    m.extent = {geometry.L1, geometry.L2, geometry.L3};
    m.cells = models.size() == 1 ? std::array<int, 3>{1, 1, 1} : cells;
    m.models.clear();
    for (const auto &mc : models) m.models.push_back(mc.model);
    return m;
  }
};

inline std::string_view unit_tag(UnitSystem u) { return u == UnitSystem::SI ? "SI" : "natural"; }

// ---------------------------------------------------------------- equality

inline bool same_model(const SusceptibilityModel &a, const SusceptibilityModel &b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      overloaded{
          [](const VacuumModel &, const VacuumModel &) { return true; },
          [](const LorentzModel &x, const LorentzModel &y) {
            return x.plasma == y.plasma && x.gamma == y.gamma && x.K == y.K;
          },
          [](const RectPulseModel &x, const RectPulseModel &y) {
            return x.chi0 == y.chi0 && x.delta == y.delta;
          },
          [](const InstantaneousModel &x, const InstantaneousModel &y) {
            return x.chi0 == y.chi0;
          },
          [](const TabulatedModel &x, const TabulatedModel &y) {
            return x.omega == y.omega && x.im_chi == y.im_chi;
          },
          [](const auto &, const auto &) { return false; }},
      a, b);
}

inline bool operator==(const ModelConfig &a, const ModelConfig &b) {
  return a.table == b.table && same_model(a.model, b.model);
}
inline bool operator==(const ModeAmplitudeConfig &a, const ModeAmplitudeConfig &b) {
  return a.n == b.n && a.alpha == b.alpha;
}
inline bool operator==(const MediumAmplitudeConfig &a, const MediumAmplitudeConfig &b) {
  return a.n == b.n && a.nu == b.nu && a.q == b.q && a.delta == b.delta && a.beta == b.beta;
}

inline bool operator==(const ScenarioConfig &a, const ScenarioConfig &b) {
  const auto geo = [](const BoxGeometry &g) {
    return std::tuple(g.L1, g.L2, g.L3, g.n_max);
  };
  const auto grid = [](const GridSpec &g) {
    return std::tuple(g.omega_ref, g.lo, g.hi, g.nodes);
  };
  const auto tg = [](const TimeGrid &g) { return std::tuple(g.start, g.stop, g.nodes); };
  return a.name == b.name && a.units == b.units && geo(a.geometry) == geo(b.geometry) &&
         a.cells == b.cells && a.electric == b.electric && a.magnetic == b.magnetic &&
         grid(a.omega) == grid(b.omega) && tg(a.time) == tg(b.time) && a.modes == b.modes &&
         a.medium_amplitudes == b.medium_amplitudes && a.points == b.points &&
         a.method == b.method && a.kernel_modes == b.kernel_modes && a.q_nodes == b.q_nodes &&
         a.tolerance == b.tolerance && a.spectrum == b.spectrum && a.out_dir == b.out_dir;
}

// ---------------------------------------------------------------- parsing

namespace config_detail {

class Reader {
public:
  explicit Reader(std::string file) : file_(std::move(file)) {}

  [[noreturn]] void fail(const YAML::Node &at, const std::string &msg) const {
    std::ostringstream os;
    os << file_;
    if (at.IsDefined() && at.Mark().line >= 0) {
      os << ":" << at.Mark().line + 1 << ":" << at.Mark().column + 1;
    }
    os << ": " << msg;
    throw Error(Errc::Config, os.str());
  }

  void expect_map(const YAML::Node &n, const std::string &where,
                  std::initializer_list<const char *> keys) const {
    if (!n.IsMap()) fail(n, where + " must be a mapping");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto &kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  template <class T> T scalar(const YAML::Node &n, const std::string &what) const {
    if (!n.IsScalar()) fail(n, what + " must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception &) {
      fail(n, what + ": cannot read '" + n.Scalar() + "'");
    }
  }

  double number(const YAML::Node &n, const std::string &what) const {
    const double v = scalar<double>(n, what);
    if (!std::isfinite(v)) fail(n, what + " must be finite");
    return v;
  }

  double positive(const YAML::Node &n, const std::string &what) const {
    const double v = number(n, what);
    if (!(v > 0.0)) fail(n, what + " must be > 0");
    return v;
  }

  std::vector<double> numbers(const YAML::Node &n, const std::string &what,
                              std::size_t count) const {
    if (!n.IsSequence() || n.size() != count) {
      fail(n, what + " must be a list of " + std::to_string(count) + " numbers");
    }
    std::vector<double> out;
    for (const auto &x : n) out.push_back(number(x, what));
    return out;
  }

  std::array<int, 3> index3(const YAML::Node &n, const std::string &what) const {
    if (!n.IsSequence() || n.size() != 3) fail(n, what + " must be a list of 3 integers");
    return {scalar<int>(n[0], what), scalar<int>(n[1], what), scalar<int>(n[2], what)};
  }

  cplx complex(const YAML::Node &n, const std::string &what) const {
    if (n.IsScalar()) return number(n, what);
    const auto v = numbers(n, what + " ([re, im])", 2);
    return {v[0], v[1]};
  }

  // 3x3 as nested rows, or a 3-list read as a diagonal
  Tensor3 tensor(const YAML::Node &n, const std::string &what) const {
    if (!n.IsSequence() || n.size() != 3) fail(n, what + " must be 3 rows or a 3-diagonal");
    Tensor3 t = Tensor3::Zero();
    if (n[0].IsScalar()) {
      for (int i = 0; i < 3; ++i) t(i, i) = number(n[i], what);
      return t;
    }
    for (int i = 0; i < 3; ++i) {
      const auto row = numbers(n[i], what + " row", 3);
      for (int j = 0; j < 3; ++j) t(i, j) = row[j];
    }
    return t;
  }

  const std::string &file() const { return file_; }

private:
  std::string file_;
};

inline TabulatedModel read_table(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open table " + path);
  TabulatedModel m;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      if (line.rfind("omega,im_chi_11", 0) != 0) {
        throw Error(Errc::Config, path + ":" + std::to_string(lineno) +
                                      ": expected header omega,im_chi_11,...,im_chi_33");
      }
      continue;
    }
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception &) {
        throw Error(Errc::Config, path + ":" + std::to_string(lineno) + ": bad number '" +
                                      cell + "'");
      }
    }
    if (v.size() != 10) {
      throw Error(Errc::Config, path + ":" + std::to_string(lineno) + ": expected 10 columns");
    }
    m.omega.push_back(v[0]);
    Tensor3 t;
    for (int i = 0; i < 9; ++i) t(i / 3, i % 3) = v[1 + i];
    m.im_chi.push_back(t);
  }
  return m;
}

inline ModelConfig read_model(const Reader &r, const YAML::Node &n, const std::string &where,
                              const std::filesystem::path &base) {
  if (!n.IsMap() || !n["model"]) r.fail(n, where + " needs a 'model' key");
  const auto kind = r.scalar<std::string>(n["model"], where + ".model");
  ModelConfig out;
  if (kind == "vacuum") {
    r.expect_map(n, where, {"model"});
    out.model = VacuumModel{};
  } else if (kind == "lorentz") {
    r.expect_map(n, where, {"model", "plasma", "gamma", "K"});
    LorentzModel m;
    if (n["plasma"]) m.plasma = r.number(n["plasma"], where + ".plasma");
    if (n["gamma"]) m.gamma = r.number(n["gamma"], where + ".gamma");
    if (n["K"]) m.K = r.tensor(n["K"], where + ".K");
    if (m.plasma < 0.0) r.fail(n["plasma"], where + ".plasma must be >= 0");
    if (m.gamma < 0.0) r.fail(n["gamma"], where + ".gamma must be >= 0");
    out.model = m;
  } else if (kind == "rect_pulse") {
    r.expect_map(n, where, {"model", "chi0", "delta"});
    if (!n["chi0"] || !n["delta"]) r.fail(n, where + " needs chi0 and delta");
    out.model = RectPulseModel{r.tensor(n["chi0"], where + ".chi0"),
                               r.positive(n["delta"], where + ".delta")};
  } else if (kind == "instantaneous") {
    r.expect_map(n, where, {"model", "chi0"});
    if (!n["chi0"]) r.fail(n, where + " needs chi0");
    out.model = InstantaneousModel{r.tensor(n["chi0"], where + ".chi0")};
  } else if (kind == "tabulated") {
    r.expect_map(n, where, {"model", "file"});
    if (!n["file"]) r.fail(n, where + " needs file");
    std::filesystem::path p = r.scalar<std::string>(n["file"], where + ".file");
    if (p.is_relative()) p = base / p;
    out.table = std::filesystem::weakly_canonical(p).string();
    try {
      out.model = read_table(out.table);
    } catch (const Error &e) {
      r.fail(n["file"], e.what());
    }
  } else {
    r.fail(n["model"], "unknown model '" + kind +
                           "' (vacuum, lorentz, rect_pulse, instantaneous, tabulated)");
  }
  try {
    validate(out.model);
  } catch (const Error &e) {
    r.fail(n, where + ": " + e.what());
  }
  return out;
}

inline std::vector<ModelConfig> read_models(const Reader &r, const YAML::Node &n,
                                            const std::string &where,
                                            const std::filesystem::path &base) {
  std::vector<ModelConfig> out;
  if (n.IsSequence()) {
    for (std::size_t i = 0; i < n.size(); ++i) {
      out.push_back(read_model(r, n[i], where + "[" + std::to_string(i) + "]", base));
    }
    if (out.empty()) r.fail(n, where + " is empty");
  } else {
    out.push_back(read_model(r, n, where, base));
  }
  return out;
}

} // namespace config_detail

/// Parse a scenario from YAML text; `file` anchors messages and resolves
/// relative paths.
inline ScenarioConfig parse_config(const std::string &text, const std::string &file) {
  using namespace config_detail;
  const Reader r(file);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException &e) {
    std::ostringstream os;
    os << file << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": " << e.msg;
    throw Error(Errc::Config, os.str());
  }
  const std::filesystem::path base = std::filesystem::absolute(file).parent_path();
  ScenarioConfig c;
  if (root.IsNull()) return c;
  r.expect_map(root, "top level",
               {"name", "units", "geometry", "medium", "grids", "initial_state", "kernels",
                "points", "verify", "output"});
  if (root["name"]) c.name = r.scalar<std::string>(root["name"], "name");
  if (auto u = root["units"]) {
    const auto s = r.scalar<std::string>(u, "units");
    if (s == "natural") c.units = UnitSystem::Natural;
    else if (s == "SI" || s == "si") c.units = UnitSystem::SI;
    else r.fail(u, "units must be natural or SI");
  }
  if (auto g = root["geometry"]) {
    r.expect_map(g, "geometry", {"L", "n_max"});
    if (g["L"]) {
      const auto L = r.numbers(g["L"], "geometry.L", 3);
      for (double v : L) {
        if (!(v > 0.0)) r.fail(g["L"], "geometry.L entries must be > 0");
      }
      c.geometry.L1 = L[0];
      c.geometry.L2 = L[1];
      c.geometry.L3 = L[2];
    }
    if (g["n_max"]) {
      c.geometry.n_max = r.scalar<int>(g["n_max"], "geometry.n_max");
      if (c.geometry.n_max < 1) r.fail(g["n_max"], "geometry.n_max must be >= 1");
    }
  }
  if (auto m = root["medium"]) {
    r.expect_map(m, "medium", {"electric", "magnetic", "cells"});
    if (m["electric"]) c.electric = read_models(r, m["electric"], "medium.electric", base);
    if (m["magnetic"]) c.magnetic = read_models(r, m["magnetic"], "medium.magnetic", base);
    if (m["cells"]) {
      c.cells = r.index3(m["cells"], "medium.cells");
      for (int v : c.cells) {
        if (v < 1) r.fail(m["cells"], "medium.cells entries must be >= 1");
      }
    }
    const std::size_t ncell = std::size_t(c.cells[0]) * c.cells[1] * c.cells[2];
    for (const auto *list : {&c.electric, &c.magnetic}) {
      if (list->size() != 1 && list->size() != ncell) {
        r.fail(m, "medium: each model list needs 1 or cells[0]*cells[1]*cells[2] = " +
                      std::to_string(ncell) + " entries");
      }
    }
    // a single model on either side is broadcast over the cells
    if (c.electric.size() != c.magnetic.size()) {
      auto &one = c.electric.size() == 1 ? c.electric : c.magnetic;
      one.assign(ncell, one.front());
    }
    if (c.electric.size() == 1) c.cells = {1, 1, 1};
  }
  if (auto g = root["grids"]) {
    r.expect_map(g, "grids", {"omega", "time"});
    if (auto w = g["omega"]) {
      r.expect_map(w, "grids.omega", {"reference", "lo", "hi", "nodes"});
      if (w["reference"]) c.omega.omega_ref = r.positive(w["reference"], "grids.omega.reference");
      if (w["lo"]) c.omega.lo = r.positive(w["lo"], "grids.omega.lo");
      if (w["hi"]) c.omega.hi = r.positive(w["hi"], "grids.omega.hi");
      if (w["nodes"]) c.omega.nodes = r.scalar<std::size_t>(w["nodes"], "grids.omega.nodes");
      if (!(c.omega.hi > c.omega.lo)) r.fail(w, "grids.omega: hi must exceed lo");
      if (c.omega.nodes < 2) r.fail(w, "grids.omega.nodes must be >= 2");
    }
    if (auto t = g["time"]) {
      r.expect_map(t, "grids.time", {"start", "stop", "nodes"});
      if (t["start"]) c.time.start = r.number(t["start"], "grids.time.start");
      if (t["stop"]) c.time.stop = r.number(t["stop"], "grids.time.stop");
      if (t["nodes"]) c.time.nodes = r.scalar<std::size_t>(t["nodes"], "grids.time.nodes");
      if (c.time.nodes < 1) r.fail(t, "grids.time.nodes must be >= 1");
      if (c.time.nodes > 1 && !(c.time.stop > c.time.start)) {
        r.fail(t, "grids.time: stop must exceed start");
      }
    }
  }
  if (auto s = root["initial_state"]) {
    r.expect_map(s, "initial_state", {"modes", "medium"});
    if (auto ms = s["modes"]) {
      if (!ms.IsSequence()) r.fail(ms, "initial_state.modes must be a list");
      for (const auto &e : ms) {
        r.expect_map(e, "initial_state.modes[]", {"n", "alpha"});
        if (!e["n"]) r.fail(e, "mode amplitude needs n");
        ModeAmplitudeConfig a;
        a.n = r.index3(e["n"], "n");
        if (a.n == std::array<int, 3>{0, 0, 0}) r.fail(e["n"], "n = (0,0,0) is not a mode");
        if (auto al = e["alpha"]) {
          if (!al.IsSequence() || al.size() != 2) r.fail(al, "alpha must list 2 amplitudes");
          a.alpha = {r.complex(al[0], "alpha"), r.complex(al[1], "alpha")};
        }
        c.modes.push_back(a);
      }
    }
    if (auto ms = s["medium"]) {
      if (!ms.IsSequence()) r.fail(ms, "initial_state.medium must be a list");
      for (const auto &e : ms) {
        r.expect_map(e, "initial_state.medium[]", {"n", "nu", "q", "delta", "beta"});
        if (!e["n"] || !e["nu"] || !e["q"]) r.fail(e, "medium amplitude needs n, nu and q");
        MediumAmplitudeConfig a;
        a.n = r.index3(e["n"], "n");
        a.nu = r.scalar<int>(e["nu"], "nu");
        if (a.nu < 0 || a.nu > 2) r.fail(e["nu"], "nu must be 0, 1 or 2");
        a.q = r.scalar<std::size_t>(e["q"], "q");
        if (e["delta"]) a.delta = r.complex(e["delta"], "delta");
        if (e["beta"]) a.beta = r.complex(e["beta"], "beta");
        c.medium_amplitudes.push_back(a);
      }
    }
  }
  if (auto k = root["kernels"]) {
    r.expect_map(k, "kernels", {"method", "modes", "q_nodes"});
    if (k["method"]) {
      const auto s = r.scalar<std::string>(k["method"], "kernels.method");
      if (s == "residue") c.method = LaplaceMethod::Residue;
      else if (s == "talbot") c.method = LaplaceMethod::Talbot;
      else r.fail(k["method"], "kernels.method must be residue or talbot");
    }
    if (auto ms = k["modes"]) {
      if (!ms.IsSequence()) r.fail(ms, "kernels.modes must be a list");
      for (const auto &e : ms) {
        const auto n = r.index3(e, "kernels.modes[]");
        if (n == std::array<int, 3>{0, 0, 0}) r.fail(e, "n = (0,0,0) is not a mode");
        c.kernel_modes.push_back(n);
      }
    }
    if (auto qs = k["q_nodes"]) {
      if (!qs.IsSequence()) r.fail(qs, "kernels.q_nodes must be a list");
      for (const auto &e : qs) c.q_nodes.push_back(r.scalar<std::size_t>(e, "q_nodes[]"));
    }
  }
  if (auto p = root["points"]) {
    if (!p.IsSequence() || p.size() == 0) r.fail(p, "points must be a non-empty list");
    c.points.clear();
    for (const auto &e : p) {
      const auto v = r.numbers(e, "points[]", 3);
      c.points.emplace_back(v[0], v[1], v[2]);
    }
  }
  if (auto v = root["verify"]) {
    r.expect_map(v, "verify", {"tolerance", "spectrum"});
    if (v["tolerance"]) c.tolerance = r.positive(v["tolerance"], "verify.tolerance");
    if (v["spectrum"]) {
      std::filesystem::path p = r.scalar<std::string>(v["spectrum"], "verify.spectrum");
      if (p.is_relative()) p = base / p;
      c.spectrum = std::filesystem::weakly_canonical(p).string();
    }
  }
  if (auto o = root["output"]) {
    r.expect_map(o, "output", {"directory"});
    if (o["directory"]) c.out_dir = r.scalar<std::string>(o["directory"], "output.directory");
  }
  for (const auto &a : c.medium_amplitudes) {
    if (a.q >= c.omega.nodes) r.fail(root["initial_state"], "medium amplitude q out of range");
  }
  for (const std::size_t q : c.q_nodes) {
    if (q >= c.omega.nodes) r.fail(root["kernels"], "kernels.q_nodes entry out of range");
  }
  // modes must exist in the enumerated box
  auto in_box = [&](const std::array<int, 3> &n) {
    for (int v : n) {
      if (std::abs(v) > c.geometry.n_max) return false;
    }
    return true;
  };
  for (const auto &a : c.modes) {
    if (!in_box(a.n)) r.fail(root["initial_state"], "mode index beyond geometry.n_max");
  }
  for (const auto &a : c.medium_amplitudes) {
    if (!in_box(a.n)) r.fail(root["initial_state"], "mode index beyond geometry.n_max");
  }
  for (const auto &n : c.kernel_modes) {
    if (!in_box(n)) r.fail(root["kernels"], "mode index beyond geometry.n_max");
  }
  return c;
}

inline ScenarioConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Config, path + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

// ---------------------------------------------------------------- dumping

namespace config_detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void emit_tensor(YAML::Emitter &e, const Tensor3 &t) {
  e << YAML::Flow << YAML::BeginSeq;
  for (int i = 0; i < 3; ++i) {
    e << YAML::Flow << YAML::BeginSeq;
    for (int j = 0; j < 3; ++j) e << num(t(i, j));
    e << YAML::EndSeq;
  }
  e << YAML::EndSeq;
}

inline void emit_complex(YAML::Emitter &e, cplx z) {
  e << YAML::Flow << YAML::BeginSeq << num(z.real()) << num(z.imag()) << YAML::EndSeq;
}

inline void emit_index(YAML::Emitter &e, const std::array<int, 3> &n) {
  e << YAML::Flow << YAML::BeginSeq << n[0] << n[1] << n[2] << YAML::EndSeq;
}

inline void emit_model(YAML::Emitter &e, const ModelConfig &mc) {
  e << YAML::BeginMap;
  std::visit(overloaded{[&](const VacuumModel &) { e << YAML::Key << "model" << YAML::Value << "vacuum"; },
                        [&](const LorentzModel &m) {
                          e << YAML::Key << "model" << YAML::Value << "lorentz";
                          e << YAML::Key << "plasma" << YAML::Value << num(m.plasma);
                          e << YAML::Key << "gamma" << YAML::Value << num(m.gamma);
                          e << YAML::Key << "K" << YAML::Value;
                          emit_tensor(e, m.K);
                        },
                        [&](const RectPulseModel &m) {
                          e << YAML::Key << "model" << YAML::Value << "rect_pulse";
                          e << YAML::Key << "chi0" << YAML::Value;
                          emit_tensor(e, m.chi0);
                          e << YAML::Key << "delta" << YAML::Value << num(m.delta);
                        },
                        [&](const InstantaneousModel &m) {
                          e << YAML::Key << "model" << YAML::Value << "instantaneous";
                          e << YAML::Key << "chi0" << YAML::Value;
                          emit_tensor(e, m.chi0);
                        },
                        [&](const TabulatedModel &) {
                          e << YAML::Key << "model" << YAML::Value << "tabulated";
                          e << YAML::Key << "file" << YAML::Value << YAML::DoubleQuoted
                            << mc.table;
                        }},
             mc.model);
  e << YAML::EndMap;
}

inline void emit_models(YAML::Emitter &e, const std::vector<ModelConfig> &list) {
  if (list.size() == 1) {
    emit_model(e, list.front());
    return;
  }
  e << YAML::BeginSeq;
  for (const auto &m : list) emit_model(e, m);
  e << YAML::EndSeq;
}

} // namespace config_detail

/// Fully resolved scenario as YAML; parse_config of the result gives back
/// an equal ScenarioConfig.
inline std::string dump_config(const ScenarioConfig &c) {
  using namespace config_detail;
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << c.name;
  e << YAML::Key << "units" << YAML::Value << std::string(unit_tag(c.units));
  e << YAML::Key << "geometry" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "L" << YAML::Value << YAML::Flow << YAML::BeginSeq << num(c.geometry.L1)
    << num(c.geometry.L2) << num(c.geometry.L3) << YAML::EndSeq;
  e << YAML::Key << "n_max" << YAML::Value << c.geometry.n_max;
  e << YAML::EndMap;
  e << YAML::Key << "medium" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "cells" << YAML::Value;
  emit_index(e, c.cells);
  e << YAML::Key << "electric" << YAML::Value;
  emit_models(e, c.electric);
  e << YAML::Key << "magnetic" << YAML::Value;
  emit_models(e, c.magnetic);
  e << YAML::EndMap;
  e << YAML::Key << "grids" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "omega" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "reference" << YAML::Value << num(c.omega.omega_ref);
  e << YAML::Key << "lo" << YAML::Value << num(c.omega.lo);
  e << YAML::Key << "hi" << YAML::Value << num(c.omega.hi);
  e << YAML::Key << "nodes" << YAML::Value << c.omega.nodes;
  e << YAML::EndMap;
  e << YAML::Key << "time" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "start" << YAML::Value << num(c.time.start);
  e << YAML::Key << "stop" << YAML::Value << num(c.time.stop);
  e << YAML::Key << "nodes" << YAML::Value << c.time.nodes;
  e << YAML::EndMap;
  e << YAML::EndMap;
  e << YAML::Key << "initial_state" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "modes" << YAML::Value << YAML::BeginSeq;
  for (const auto &a : c.modes) {
    e << YAML::BeginMap << YAML::Key << "n" << YAML::Value;
    emit_index(e, a.n);
    e << YAML::Key << "alpha" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    emit_complex(e, a.alpha[0]);
    emit_complex(e, a.alpha[1]);
    e << YAML::EndSeq << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "medium" << YAML::Value << YAML::BeginSeq;
  for (const auto &a : c.medium_amplitudes) {
    e << YAML::BeginMap << YAML::Key << "n" << YAML::Value;
    emit_index(e, a.n);
    e << YAML::Key << "nu" << YAML::Value << a.nu;
    e << YAML::Key << "q" << YAML::Value << a.q;
    e << YAML::Key << "delta" << YAML::Value;
    emit_complex(e, a.delta);
    e << YAML::Key << "beta" << YAML::Value;
    emit_complex(e, a.beta);
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::EndMap;
  e << YAML::Key << "kernels" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "method" << YAML::Value
    << (c.method == LaplaceMethod::Residue ? "residue" : "talbot");
  e << YAML::Key << "modes" << YAML::Value << YAML::BeginSeq;
  for (const auto &n : c.kernel_modes) emit_index(e, n);
  e << YAML::EndSeq;
  e << YAML::Key << "q_nodes" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const std::size_t q : c.q_nodes) e << q;
  e << YAML::EndSeq;
  e << YAML::EndMap;
  e << YAML::Key << "points" << YAML::Value << YAML::BeginSeq;
  for (const auto &p : c.points) {
    e << YAML::Flow << YAML::BeginSeq << num(p(0)) << num(p(1)) << num(p(2)) << YAML::EndSeq;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "verify" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "tolerance" << YAML::Value << num(c.tolerance);
  if (!c.spectrum.empty()) {
    e << YAML::Key << "spectrum" << YAML::Value << YAML::DoubleQuoted << c.spectrum;
  }
  e << YAML::EndMap;
  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "directory" << YAML::Value << YAML::DoubleQuoted << c.out_dir;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

} // namespace maqed
