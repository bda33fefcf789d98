#pragma once

// File artifacts: CSV tables with a unit tag line, JSON sidecars, SHA-256
// provenance. Numbers are written with %.17g so a re-read is exact.

#include "maqed/coupling.hpp"
#include "maqed/dynamics.hpp"
#include "maqed/error.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef MAQED_VERSION
#define MAQED_VERSION "0.1.0"
#endif
#ifndef MAQED_GIT_REVISION
#define MAQED_GIT_REVISION "unknown"
#endif

namespace maqed {

using json = nlohmann::ordered_json;

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string sha256_hex(const std::string &bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::Io, "sha256 failed");
  }
  static const char *hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path &path, const std::string &bytes) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << bytes;
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

/// Tool identity, the config hash and the inputs' hashes. The timestamp is
/// SOURCE_DATE_EPOCH when set, so even sidecars can be made byte-identical.
inline json provenance(const std::string &config_bytes,
                       const std::vector<std::pair<std::string, std::string>> &inputs = {}) {
  json p;
  p["tool"] = "maqed";
  p["version"] = MAQED_VERSION;
  p["revision"] = MAQED_GIT_REVISION;
  p["config_sha256"] = sha256_hex(config_bytes);
  json in = json::object();
  for (const auto &[name, bytes] : inputs) in[name] = sha256_hex(bytes);
  p["inputs"] = in;
  std::time_t t = std::time(nullptr);
  if (const char *epoch = std::getenv("SOURCE_DATE_EPOCH")) t = std::time_t(std::atoll(epoch));
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  p["generated_at"] = buf;
  return p;
}

inline json constants_json(const PhysicalConstants &k) {
  json j;
  j["units"] = k.units == UnitSystem::SI ? "SI" : "natural";
  j["hbar"] = k.hbar;
  j["eps0"] = k.eps0;
  j["mu0"] = k.mu0;
  j["c"] = k.c;
  return j;
}

// ---------------------------------------------------------------- CSV

class CsvWriter {
public:
  CsvWriter(UnitSystem u, const std::vector<std::string> &columns) {
    os_ << "# units=" << (u == UnitSystem::SI ? "SI" : "natural") << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
    os_ << "\n";
  }
  void row(const std::vector<double> &v) {
    for (std::size_t i = 0; i < v.size(); ++i) os_ << (i ? "," : "") << fmt17(v[i]);
    os_ << "\n";
  }
  std::string str() const { return os_.str(); }

private:
  std::ostringstream os_;
};

struct CsvTable {
  std::string units; // empty when the file has no tag line
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline CsvTable parse_csv(const std::string &text, const std::string &name) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("units=");
      if (pos != std::string::npos) t.units = line.substr(pos + 6);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (t.columns.empty()) {
      for (auto &c : cells) {
        c.erase(0, c.find_first_not_of(' '));
        t.columns.push_back(c);
      }
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw Error(Errc::Config, name + ":" + std::to_string(lineno) + ": expected " +
                                    std::to_string(t.columns.size()) + " columns");
    }
    std::vector<double> row;
    for (const auto &c : cells) {
      char *end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str()) {
        throw Error(Errc::Config, name + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::vector<std::string> tensor_columns(const std::string &stem) {
  std::vector<std::string> out;
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j) out.push_back(stem + "_" + std::to_string(i) + std::to_string(j));
  return out;
}

inline std::vector<std::string> complex_tensor_columns(const std::string &stem) {
  std::vector<std::string> out;
  for (const auto &c : tensor_columns(stem)) {
    out.push_back("Re_" + c);
    out.push_back("Im_" + c);
  }
  return out;
}

inline void append(std::vector<double> &row, const Tensor3 &t) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) row.push_back(t(i, j));
}

inline void append(std::vector<double> &row, const CTensor3 &t) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      row.push_back(t(i, j).real());
      row.push_back(t(i, j).imag());
    }
}

inline std::string spectrum_csv(const CouplingSpectrum &s) {
  std::vector<std::string> cols{"omega"};
  for (const auto &c : tensor_columns("ffT")) cols.push_back(c);
  for (const auto &c : tensor_columns("ggT")) cols.push_back(c);
  CsvWriter w(s.consts.units, cols);
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::vector<double> row{s.omega[i]};
    append(row, s.ffT[i]);
    append(row, s.ggT[i]);
    w.row(row);
  }
  return w.str();
}

inline std::string factors_csv(const CouplingSpectrum &s) {
  std::vector<std::string> cols{"omega"};
  for (const auto &c : tensor_columns("f")) cols.push_back(c);
  for (const auto &c : tensor_columns("g")) cols.push_back(c);
  CsvWriter w(s.consts.units, cols);
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::vector<double> row{s.omega[i]};
    append(row, s.factor_f[i]);
    append(row, s.factor_g[i]);
    w.row(row);
  }
  return w.str();
}

/// Spectrum from its CSV form; the unit tag must match `k`.
inline CouplingSpectrum read_spectrum_csv(const std::string &text, const std::string &name,
                                          const PhysicalConstants &k) {
  const CsvTable t = parse_csv(text, name);
  const std::string want = k.units == UnitSystem::SI ? "SI" : "natural";
  if (!t.units.empty() && t.units != want) {
    throw Error(Errc::Config, name + ": spectrum units " + t.units + " but config uses " + want);
  }
  std::vector<std::string> cols{"omega"};
  for (const auto &c : tensor_columns("ffT")) cols.push_back(c);
  for (const auto &c : tensor_columns("ggT")) cols.push_back(c);
  if (t.columns != cols) throw Error(Errc::Config, name + ": unexpected spectrum columns");
  CouplingSpectrum s;
  s.consts = k;
  for (const auto &r : t.rows) {
    s.omega.push_back(r[0]);
    Tensor3 f, g;
    for (int i = 0; i < 9; ++i) {
      f(i / 3, i % 3) = r[1 + i];
      g(i / 3, i % 3) = r[10 + i];
    }
    s.ffT.push_back(f);
    s.ggT.push_back(g);
  }
  return s;
}

inline std::string mode_tag(const std::array<int, 3> &n) {
  std::ostringstream os;
  os << "n" << n[0] << "_" << n[1] << "_" << n[2];
  return os.str();
}

/// Photon kernels of one mode: t, eta+ (Re/Im per entry), eta- at the same |t|.
inline std::string kernels_csv(const ModeKernels &mk, UnitSystem u) {
  std::vector<std::string> cols{"t"};
  for (const auto &c : complex_tensor_columns("eta")) cols.push_back(c);
  for (const auto &c : complex_tensor_columns("etam")) cols.push_back(c);
  CsvWriter w(u, cols);
  for (std::size_t i = 0; i < mk.eta_plus.t.size(); ++i) {
    std::vector<double> row{mk.eta_plus.t[i]};
    append(row, mk.eta_plus.values[i]);
    append(row, mk.eta_minus.values[i]);
    w.row(row);
  }
  return w.str();
}

/// Medium kernels of one mode: one block of rows per spectrum node.
inline std::string medium_kernels_csv(const ModeKernels &mk, const CouplingSpectrum &s,
                                      UnitSystem u) {
  std::vector<std::string> cols{"q", "omega_q", "t"};
  for (const char *stem : {"xi", "xim", "zeta", "zetam"}) {
    for (const auto &c : complex_tensor_columns(stem)) cols.push_back(c);
  }
  CsvWriter w(u, cols);
  for (std::size_t a = 0; a < mk.q_nodes.size(); ++a) {
    for (std::size_t i = 0; i < mk.eta_plus.t.size(); ++i) {
      std::vector<double> row{double(mk.q_nodes[a]), s.omega[mk.q_nodes[a]], mk.eta_plus.t[i]};
      append(row, mk.xi_plus[a].values[i]);
      append(row, mk.xi_minus[a].values[i]);
      append(row, mk.zeta_plus[a].values[i]);
      append(row, mk.zeta_minus[a].values[i]);
      w.row(row);
    }
  }
  return w.str();
}

inline std::string field_csv(const FieldSeries &f, UnitSystem u) {
  CsvWriter w(u, {"t", "x", "y", "z", "Ex", "Ey", "Ez"});
  for (std::size_t it = 0; it < f.t.size(); ++it) {
    for (std::size_t ir = 0; ir < f.r.size(); ++ir) {
      const Vec3 &r = f.r[ir];
      const Vec3 &E = f.E[it * f.r.size() + ir];
      w.row({f.t[it], r(0), r(1), r(2), E(0), E(1), E(2)});
    }
  }
  return w.str();
}

inline std::string json_text(const json &j) { return j.dump(2) + "\n"; }

} // namespace maqed
