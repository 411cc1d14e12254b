#include "kwc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>

#include "json.hpp"
#include "kwc/bundle.hpp"
#include "kwc/box.hpp"
#include "kwc/control.hpp"
#include "kwc/grid.hpp"
#include "kwc/operators.hpp"
#include "kwc/oracle.hpp"
#include "kwc/state.hpp"

namespace kwc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Formatting / low-level emit helpers
// ---------------------------------------------------------------------------

json jnum(double x) {
  // nlohmann silently turns non-finite numbers into null; the artifact
  // contract wants them visible as literal strings instead.
  if (std::isfinite(x)) return json(x);
  return json(format_double(x));
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + p.string());
  os << s;
  os.flush();
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

void write_json(const fs::path& p, const json& j) {
  write_text(p, j.dump(2) + "\n");
}

void write_csv(const fs::path& p, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::string out = header + "\n";
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  write_text(p, out);
}

void write_field_csv(const fs::path& p, const SpatialGrid& g,
                     const ScalarField& f) {
  std::string out = g.dim == 1 ? "x,value\n" : "x,y,value\n";
  for (int j = 0; j < g.n_nodes(); ++j) {
    for (int d = 0; d < g.dim; ++d) {
      out += format_double(g.nodes(j, d));
      out += ',';
    }
    out += format_double(f(j));
    out += '\n';
  }
  write_text(p, out);
}

void write_field_series(const fs::path& dir, const char* prefix,
                        const SpatialGrid& g, const ScalarTrajectory& w) {
  for (int i = 0; i <= w.time.n; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04d.csv", prefix, i);
    write_field_csv(dir / name, g, w[i]);
  }
}

// ---------------------------------------------------------------------------
// Tabulated nonlinearities: natural cubic spline with clamped-segment
// extrapolation, so second derivatives exist everywhere.
// ---------------------------------------------------------------------------

class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    m_.assign(n, 0.0);
    if (n > 2) {
      // Thomas solve of the natural-spline tridiagonal system.
      std::vector<double> diag(n, 0), off(n, 0), rhs(n, 0);
      for (int i = 1; i < n - 1; ++i) {
        const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
        diag[i] = 2.0 * (h0 + h1);
        off[i] = h1;
        rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
      }
      for (int i = 2; i < n - 1; ++i) {
        const double w = (x_[i] - x_[i - 1]) / diag[i - 1];
        diag[i] -= w * off[i - 1];
        rhs[i] -= w * rhs[i - 1];
      }
      for (int i = n - 2; i >= 1; --i)
        m_[i] = (rhs[i] - off[i] * m_[i + 1]) / diag[i];
    }
  }

  double value(double t) const {
    const int i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
    return A * y_[i] + B * y_[i + 1] +
           ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
  }

  double deriv(double t) const {
    const int i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h - (3.0 * A * A - 1.0) * h * m_[i] / 6.0 +
           (3.0 * B * B - 1.0) * h * m_[i + 1] / 6.0;
  }

  double deriv2(double t) const {
    const int i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
    return A * m_[i] + B * m_[i + 1];
  }

 private:
  int segment(double t) const {
    const int n = static_cast<int>(x_.size());
    int lo = 0, hi = n - 1;
    if (t <= x_.front()) return 0;
    if (t >= x_.back()) return n - 2;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (t < x_[mid] ? hi : lo) = mid;
    }
    return lo;
  }

  std::vector<double> x_, y_, m_;
};

NonlinearityBundle tabulated_bundle(const RunConfig& cfg) {
  auto sG = std::make_shared<CubicSpline>(cfg.tab_eta, cfg.tab_G);
  auto s0 = std::make_shared<CubicSpline>(cfg.tab_eta, cfg.tab_alpha0);
  auto sa = std::make_shared<CubicSpline>(cfg.tab_eta, cfg.tab_alpha);
  NonlinearityBundle b;
  b.G = [sG](double r) { return sG->value(r); };
  b.g = [sG](double r) { return sG->deriv(r); };
  b.gp = [sG](double r) { return sG->deriv2(r); };
  b.alpha0 = [s0](double r) { return s0->value(r); };
  b.alpha0p = [s0](double r) { return s0->deriv(r); };
  b.alpha = [sa](double r) { return sa->value(r); };
  b.alphap = [sa](double r) { return sa->deriv(r); };
  b.alphapp = [sa](double r) { return sa->deriv2(r); };
  b.delta_star = cfg.tab_delta_star;
  validate_bundle(b, cfg.tab_eta.front(), cfg.tab_eta.back());
  return b;
}

NonlinearityBundle resolve_bundle(const RunConfig& cfg) {
  if (cfg.bundle_name == "default") return default_bundle();
  if (cfg.bundle_name == "tabulated") return tabulated_bundle(cfg);
  throw ConfigError("bundle.name: unknown bundle '" + cfg.bundle_name + "'");
}

// ---------------------------------------------------------------------------
// Field specs: "name" or "name:key=value,key=value". A bare value after
// the colon stands for the shape's main parameter.
// ---------------------------------------------------------------------------

struct FieldSpec {
  std::string name;
  std::map<std::string, std::string> kv;
};

FieldSpec parse_spec(const std::string& spec, const char* which) {
  FieldSpec out;
  const auto colon = spec.find(':');
  out.name = spec.substr(0, colon);
  if (out.name.empty())
    throw ConfigError(std::string(which) + ": empty field spec");
  if (colon == std::string::npos) return out;
  std::string rest = spec.substr(colon + 1);
  size_t pos = 0;
  while (pos <= rest.size()) {
    const auto comma = rest.find(',', pos);
    const std::string tok =
        rest.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (!tok.empty()) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) {
        const char* main_key = out.name == "constant"  ? "value"
                               : out.name == "csv"     ? "path"
                                                       : "amp";
        out.kv[main_key] = tok;
      } else {
        out.kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

double spec_num(const FieldSpec& s, const char* key, double def,
                const char* which) {
  const auto it = s.kv.find(key);
  if (it == s.kv.end()) return def;
  try {
    size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(which) + ": parameter '" + key +
                      "' is not a number: '" + it->second + "'");
  }
}

void reject_unknown_params(const FieldSpec& s,
                           std::initializer_list<const char*> allowed,
                           const char* which) {
  for (const auto& kv : s.kv) {
    bool ok = false;
    for (const char* a : allowed)
      if (kv.first == a) ok = true;
    if (!ok)
      throw ConfigError(std::string(which) + ": shape '" + s.name +
                        "' has no parameter '" + kv.first + "'");
  }
}

ScalarField read_nodal_csv(const fs::path& path, int n_nodes,
                           const char* which) {
  std::ifstream is(path);
  if (!is)
    throw ConfigError(std::string(which) + ": cannot open CSV file '" +
                      path.string() + "'");
  std::vector<double> vals;
  std::string line;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty()) continue;
    try {
      size_t used = 0;
      vals.push_back(std::stod(line, &used));
      if (used != line.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError(std::string(which) + ": CSV file '" + path.string() +
                        "' has a non-numeric line: '" + line + "'");
    }
  }
  if (static_cast<int>(vals.size()) != n_nodes)
    throw ConfigError(std::string(which) + ": CSV file '" + path.string() +
                      "' has " + std::to_string(vals.size()) +
                      " values, grid has " + std::to_string(n_nodes) +
                      " nodes");
  ScalarField f(n_nodes);
  for (int j = 0; j < n_nodes; ++j) f(j) = vals[static_cast<size_t>(j)];
  return f;
}

ScalarField resolve_field(const SpatialGrid& g, const RunConfig& cfg,
                          const std::string& spec, const char* which) {
  const FieldSpec s = parse_spec(spec, which);
  const int nn = g.n_nodes();
  ScalarField f(nn);
  if (s.name == "constant") {
    reject_unknown_params(s, {"value"}, which);
    f.setConstant(spec_num(s, "value", 0.0, which));
    return f;
  }
  if (s.name == "sine") {
    reject_unknown_params(s, {"off", "amp", "freq"}, which);
    const double off = spec_num(s, "off", 0.0, which);
    const double amp = spec_num(s, "amp", 1.0, which);
    const double freq = spec_num(s, "freq", 1.0, which);
    for (int j = 0; j < nn; ++j) {
      double prod = 1.0;
      for (int d = 0; d < g.dim; ++d) {
        const double xh = (g.nodes(j, d) - cfg.extents[d][0]) /
                          (cfg.extents[d][1] - cfg.extents[d][0]);
        prod *= std::sin(2.0 * kPi * freq * xh);
      }
      f(j) = off + amp * prod;
    }
    return f;
  }
  if (s.name == "gaussian-bump") {
    reject_unknown_params(s, {"off", "amp", "width", "cx", "cy"}, which);
    const double off = spec_num(s, "off", 0.0, which);
    const double amp = spec_num(s, "amp", 1.0, which);
    const double width = spec_num(s, "width", 0.1, which);
    if (!(width > 0))
      throw ConfigError(std::string(which) + ": width must be positive");
    double c[2];
    c[0] = spec_num(s, "cx", 0.5 * (cfg.extents[0][0] + cfg.extents[0][1]), which);
    if (g.dim > 1)
      c[1] = spec_num(s, "cy", 0.5 * (cfg.extents[1][0] + cfg.extents[1][1]), which);
    for (int j = 0; j < nn; ++j) {
      double r2 = 0;
      for (int d = 0; d < g.dim; ++d) {
        const double dx = g.nodes(j, d) - c[d];
        r2 += dx * dx;
      }
      f(j) = off + amp * std::exp(-r2 / (2.0 * width * width));
    }
    return f;
  }
  if (s.name == "parabola") {
    reject_unknown_params(s, {"amp"}, which);
    const double amp = spec_num(s, "amp", 1.0, which);
    for (int j = 0; j < nn; ++j) {
      double prod = 1.0;
      for (int d = 0; d < g.dim; ++d) {
        const double lo = cfg.extents[d][0], hi = cfg.extents[d][1];
        prod *= (g.nodes(j, d) - lo) * (hi - g.nodes(j, d)) /
                ((hi - lo) * (hi - lo));
      }
      f(j) = amp * prod;
    }
    return f;
  }
  if (s.name == "csv") {
    reject_unknown_params(s, {"path"}, which);
    const auto it = s.kv.find("path");
    if (it == s.kv.end())
      throw ConfigError(std::string(which) + ": csv spec needs a path");
    return read_nodal_csv(it->second, nn, which);
  }
  throw ConfigError(std::string(which) + ": unknown field shape '" + s.name +
                    "' (expected constant, sine, gaussian-bump, parabola, or csv)");
}

// Eager syntax validation at load time (CSV contents are read later).
void validate_spec(const std::string& spec, bool target, const char* which) {
  if (target && spec == "uncontrolled-endpoint") return;
  const FieldSpec s = parse_spec(spec, which);
  static const char* names[] = {"constant", "sine", "gaussian-bump",
                                "parabola", "csv"};
  bool known = false;
  for (const char* n : names)
    if (s.name == n) known = true;
  if (!known)
    throw ConfigError(std::string(which) + ": unknown field shape '" + s.name +
                      "'");
  if (s.name == "csv") {
    const auto it = s.kv.find("path");
    if (it == s.kv.end())
      throw ConfigError(std::string(which) + ": csv spec needs a path");
    if (!fs::exists(it->second))
      throw ConfigError(std::string(which) + ": CSV file '" + it->second +
                        "' does not exist");
  }
}

// ---------------------------------------------------------------------------
// Strict JSON config parsing
// ---------------------------------------------------------------------------

const json* find_key(const json& j, const char* k) {
  const auto it = j.find(k);
  return it == j.end() ? nullptr : &*it;
}

void expect_keys(const json& j, const std::string& prefix,
                 std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) ok = true;
    if (!ok) throw ConfigError("unknown config key: " + prefix + it.key());
  }
}

const json& expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  return j;
}

double as_num(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<int>();
}

std::string as_str(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

std::vector<double> as_num_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (size_t i = 0; i < j.size(); ++i)
    out.push_back(as_num(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API
// ---------------------------------------------------------------------------

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

RunConfig load_config(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot open config file: " + file.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  expect_object(j, "config root");
  expect_keys(j, "", {"grid", "time", "params", "bundle", "fields", "box",
                      "ocp", "eps_list", "suites", "seed", "out_dir"});
  RunConfig cfg;

  // time: the step size has no safe universal default, so it is the one
  // required key.
  const json* jt = find_key(j, "time");
  if (!jt) throw ConfigError("time: section is required (time.tau must be set)");
  expect_object(*jt, "time");
  expect_keys(*jt, "time.", {"T", "tau"});
  const json* jtau = find_key(*jt, "tau");
  if (!jtau) throw ConfigError("time.tau: key is required");
  cfg.tau = as_num(*jtau, "time.tau");
  if (const json* v = find_key(*jt, "T")) cfg.T = as_num(*v, "time.T");
  if (!(cfg.tau > 0)) throw ConfigError("time.tau: must be positive");
  if (!(cfg.T > 0)) throw ConfigError("time.T: must be positive");
  if (cfg.tau > cfg.T) throw ConfigError("time.tau: must not exceed time.T");

  if (const json* jg = find_key(j, "grid")) {
    expect_object(*jg, "grid");
    expect_keys(*jg, "grid.", {"dim", "resolution", "extents"});
    if (const json* v = find_key(*jg, "dim")) cfg.dim = as_int(*v, "grid.dim");
    if (cfg.dim != 1 && cfg.dim != 2)
      throw ConfigError("grid.dim: must be 1 or 2");
    if (const json* v = find_key(*jg, "resolution")) {
      if (!v->is_array()) throw ConfigError("grid.resolution: expected an array");
      cfg.resolution.clear();
      for (size_t i = 0; i < v->size(); ++i)
        cfg.resolution.push_back(
            as_int((*v)[i], "grid.resolution[" + std::to_string(i) + "]"));
    } else {
      cfg.resolution.assign(static_cast<size_t>(cfg.dim), 64);
    }
    if (const json* v = find_key(*jg, "extents")) {
      if (!v->is_array()) throw ConfigError("grid.extents: expected an array");
      cfg.extents.clear();
      for (size_t i = 0; i < v->size(); ++i) {
        const std::string path = "grid.extents[" + std::to_string(i) + "]";
        const std::vector<double> pair = as_num_list((*v)[i], path);
        if (pair.size() != 2) throw ConfigError(path + ": expected [lo, hi]");
        cfg.extents.push_back({pair[0], pair[1]});
      }
    } else {
      cfg.extents.assign(static_cast<size_t>(cfg.dim), {0.0, 1.0});
    }
    if (static_cast<int>(cfg.resolution.size()) != cfg.dim)
      throw ConfigError("grid.resolution: needs one entry per dimension");
    if (static_cast<int>(cfg.extents.size()) != cfg.dim)
      throw ConfigError("grid.extents: needs one entry per dimension");
    for (size_t i = 0; i < cfg.resolution.size(); ++i)
      if (cfg.resolution[i] < 1)
        throw ConfigError("grid.resolution[" + std::to_string(i) +
                          "]: must be at least 1");
    for (size_t i = 0; i < cfg.extents.size(); ++i)
      if (!(cfg.extents[i][1] > cfg.extents[i][0]))
        throw ConfigError("grid.extents[" + std::to_string(i) +
                          "]: upper bound must exceed lower bound");
  }

  if (const json* jp = find_key(j, "params")) {
    expect_object(*jp, "params");
    expect_keys(*jp, "params.",
                {"mu", "nu", "eps", "L_u", "L_v", "M_eta", "M_theta", "M_u",
                 "M_v", "C_emb"});
    auto grab = [&](const char* k, double& dst) {
      if (const json* v = find_key(*jp, k))
        dst = as_num(*v, std::string("params.") + k);
    };
    grab("mu", cfg.params.mu);
    grab("nu", cfg.params.nu);
    grab("eps", cfg.params.eps);
    grab("L_u", cfg.params.L_u);
    grab("L_v", cfg.params.L_v);
    grab("M_eta", cfg.params.M_eta);
    grab("M_theta", cfg.params.M_theta);
    grab("M_u", cfg.params.M_u);
    grab("M_v", cfg.params.M_v);
    grab("C_emb", cfg.params.C_emb);
    cfg.params.validate();
  }

  if (const json* jb = find_key(j, "bundle")) {
    expect_object(*jb, "bundle");
    expect_keys(*jb, "bundle.",
                {"name", "eta", "G", "alpha0", "alpha", "delta_star"});
    if (const json* v = find_key(*jb, "name"))
      cfg.bundle_name = as_str(*v, "bundle.name");
    if (cfg.bundle_name != "default" && cfg.bundle_name != "tabulated")
      throw ConfigError("bundle.name: expected 'default' or 'tabulated'");
    const bool tab = cfg.bundle_name == "tabulated";
    for (const char* k : {"eta", "G", "alpha0", "alpha", "delta_star"})
      if (!tab && find_key(*jb, k))
        throw ConfigError(std::string("bundle.") + k +
                          ": only valid for the tabulated bundle");
    if (tab) {
      for (const char* k : {"eta", "G", "alpha0", "alpha"})
        if (!find_key(*jb, k))
          throw ConfigError(std::string("bundle.") + k +
                            ": required for the tabulated bundle");
      cfg.tab_eta = as_num_list(*find_key(*jb, "eta"), "bundle.eta");
      cfg.tab_G = as_num_list(*find_key(*jb, "G"), "bundle.G");
      cfg.tab_alpha0 = as_num_list(*find_key(*jb, "alpha0"), "bundle.alpha0");
      cfg.tab_alpha = as_num_list(*find_key(*jb, "alpha"), "bundle.alpha");
      if (const json* v = find_key(*jb, "delta_star"))
        cfg.tab_delta_star = as_num(*v, "bundle.delta_star");
      if (cfg.tab_eta.size() < 2)
        throw ConfigError("bundle.eta: needs at least two sample points");
      if (cfg.tab_G.size() != cfg.tab_eta.size() ||
          cfg.tab_alpha0.size() != cfg.tab_eta.size() ||
          cfg.tab_alpha.size() != cfg.tab_eta.size())
        throw ConfigError("bundle: eta, G, alpha0, alpha need equal lengths");
      for (size_t i = 1; i < cfg.tab_eta.size(); ++i)
        if (!(cfg.tab_eta[i] > cfg.tab_eta[i - 1]))
          throw ConfigError("bundle.eta: sample points must be strictly increasing");
      if (!(cfg.tab_delta_star > 0))
        throw ConfigError("bundle.delta_star: must be positive");
    }
  }

  if (const json* jf = find_key(j, "fields")) {
    expect_object(*jf, "fields");
    expect_keys(*jf, "fields.", {"eta0", "theta0", "eta_ad", "theta_ad"});
    if (const json* v = find_key(*jf, "eta0"))
      cfg.eta0_spec = as_str(*v, "fields.eta0");
    if (const json* v = find_key(*jf, "theta0"))
      cfg.theta0_spec = as_str(*v, "fields.theta0");
    if (const json* v = find_key(*jf, "eta_ad"))
      cfg.eta_ad_spec = as_str(*v, "fields.eta_ad");
    if (const json* v = find_key(*jf, "theta_ad"))
      cfg.theta_ad_spec = as_str(*v, "fields.theta_ad");
  }
  validate_spec(cfg.eta0_spec, false, "fields.eta0");
  validate_spec(cfg.theta0_spec, false, "fields.theta0");
  validate_spec(cfg.eta_ad_spec, true, "fields.eta_ad");
  validate_spec(cfg.theta_ad_spec, true, "fields.theta_ad");

  if (const json* jx = find_key(j, "box")) {
    expect_object(*jx, "box");
    expect_keys(*jx, "box.", {"lower", "upper"});
    if (const json* v = find_key(*jx, "lower"))
      cfg.box_lower = as_num(*v, "box.lower");
    if (const json* v = find_key(*jx, "upper"))
      cfg.box_upper = as_num(*v, "box.upper");
    if (!(cfg.box_lower <= cfg.box_upper))
      throw ConfigError("box: lower bound must not exceed upper bound");
  }

  if (const json* jo = find_key(j, "ocp")) {
    expect_object(*jo, "ocp");
    expect_keys(*jo, "ocp.",
                {"tol", "max_iters", "armijo_init", "armijo_shrink",
                 "armijo_c1", "max_halvings"});
    if (const json* v = find_key(*jo, "tol"))
      cfg.ocp.tol = as_num(*v, "ocp.tol");
    if (const json* v = find_key(*jo, "max_iters"))
      cfg.ocp.max_iters = as_int(*v, "ocp.max_iters");
    if (const json* v = find_key(*jo, "armijo_init"))
      cfg.ocp.armijo_init = as_num(*v, "ocp.armijo_init");
    if (const json* v = find_key(*jo, "armijo_shrink"))
      cfg.ocp.armijo_shrink = as_num(*v, "ocp.armijo_shrink");
    if (const json* v = find_key(*jo, "armijo_c1"))
      cfg.ocp.armijo_c1 = as_num(*v, "ocp.armijo_c1");
    if (const json* v = find_key(*jo, "max_halvings"))
      cfg.ocp.max_halvings = as_int(*v, "ocp.max_halvings");
    if (!(cfg.ocp.tol > 0)) throw ConfigError("ocp.tol: must be positive");
    if (cfg.ocp.max_iters < 1)
      throw ConfigError("ocp.max_iters: must be at least 1");
    if (!(cfg.ocp.armijo_init > 0))
      throw ConfigError("ocp.armijo_init: must be positive");
    if (!(cfg.ocp.armijo_shrink > 0 && cfg.ocp.armijo_shrink < 1))
      throw ConfigError("ocp.armijo_shrink: must lie in (0, 1)");
    if (!(cfg.ocp.armijo_c1 > 0 && cfg.ocp.armijo_c1 < 1))
      throw ConfigError("ocp.armijo_c1: must lie in (0, 1)");
    if (cfg.ocp.max_halvings < 1)
      throw ConfigError("ocp.max_halvings: must be at least 1");
  }

  if (const json* v = find_key(j, "eps_list")) {
    cfg.eps_list = as_num_list(*v, "eps_list");
    for (size_t i = 0; i < cfg.eps_list.size(); ++i)
      if (!(cfg.eps_list[i] > 0))
        throw ConfigError("eps_list[" + std::to_string(i) +
                          "]: must be positive");
  }

  if (const json* v = find_key(j, "suites")) {
    if (!v->is_array()) throw ConfigError("suites: expected an array of names");
    cfg.suites.clear();
    const std::vector<std::string> known = check_names();
    for (size_t i = 0; i < v->size(); ++i) {
      const std::string nm =
          as_str((*v)[i], "suites[" + std::to_string(i) + "]");
      if (std::find(known.begin(), known.end(), nm) == known.end())
        throw ConfigError("suites[" + std::to_string(i) +
                          "]: unknown suite '" + nm + "'");
      cfg.suites.push_back(nm);
    }
  }

  if (const json* v = find_key(j, "seed")) {
    const long long s = [&] {
      if (!v->is_number_integer())
        throw ConfigError("seed: expected a nonnegative integer");
      return v->get<long long>();
    }();
    if (s < 0) throw ConfigError("seed: expected a nonnegative integer");
    cfg.seed = static_cast<unsigned>(s);
  }

  if (const json* v = find_key(j, "out_dir")) {
    cfg.out_dir = as_str(*v, "out_dir");
    if (cfg.out_dir.empty()) throw ConfigError("out_dir: must be nonempty");
  }

  return cfg;
}

SpatialGrid grid_from_config(const RunConfig& cfg) {
  return build_grid(cfg.dim, cfg.resolution, cfg.extents);
}

BoxConstraint box_from_config(const RunConfig& cfg, const TimeGrid& tg,
                              int n_nodes) {
  return uniform_box(tg, n_nodes, cfg.box_lower, cfg.box_upper);
}

StateInstance build_instance(const DiscreteOperators& ops,
                             const RunConfig& cfg) {
  StateInstance inst;
  inst.tg = make_time_grid(cfg.T, cfg.tau);
  inst.params = cfg.params;
  inst.params.validate();
  inst.bundle = resolve_bundle(cfg);
  const SpatialGrid& g = ops.grid;
  inst.eta0 = resolve_field(g, cfg, cfg.eta0_spec, "fields.eta0");
  inst.theta0 = resolve_field(g, cfg, cfg.theta0_spec, "fields.theta0");
  const ScalarField zero = ScalarField::Zero(g.n_nodes());
  inst.u = constant_trajectory(inst.tg, zero);
  inst.v = constant_trajectory(inst.tg, zero);
  const bool unc_eta = cfg.eta_ad_spec == "uncontrolled-endpoint";
  const bool unc_theta = cfg.theta_ad_spec == "uncontrolled-endpoint";
  inst.eta_ad = zero;
  inst.theta_ad = zero;
  if (unc_eta || unc_theta) {
    const StateTrajectory un = solve_state(ops, inst);
    if (unc_eta) inst.eta_ad = un.eta[inst.tg.n];
    if (unc_theta) inst.theta_ad = un.theta[inst.tg.n];
  }
  if (!unc_eta)
    inst.eta_ad = resolve_field(g, cfg, cfg.eta_ad_spec, "fields.eta_ad");
  if (!unc_theta)
    inst.theta_ad = resolve_field(g, cfg, cfg.theta_ad_spec, "fields.theta_ad");
  return inst;
}

// ---------------------------------------------------------------------------
// Subcommand drivers
// ---------------------------------------------------------------------------

namespace {

json config_json(const RunConfig& cfg) {
  json g;
  g["dim"] = cfg.dim;
  g["resolution"] = cfg.resolution;
  json ext = json::array();
  for (const auto& e : cfg.extents) ext.push_back({jnum(e[0]), jnum(e[1])});
  g["extents"] = ext;
  json t;
  t["T"] = jnum(cfg.T);
  t["tau"] = jnum(cfg.tau);
  json p;
  p["mu"] = jnum(cfg.params.mu);
  p["nu"] = jnum(cfg.params.nu);
  p["eps"] = jnum(cfg.params.eps);
  p["L_u"] = jnum(cfg.params.L_u);
  p["L_v"] = jnum(cfg.params.L_v);
  p["M_eta"] = jnum(cfg.params.M_eta);
  p["M_theta"] = jnum(cfg.params.M_theta);
  p["M_u"] = jnum(cfg.params.M_u);
  p["M_v"] = jnum(cfg.params.M_v);
  p["C_emb"] = jnum(cfg.params.C_emb);
  json b;
  b["name"] = cfg.bundle_name;
  if (cfg.bundle_name == "tabulated") {
    auto arr = [](const std::vector<double>& v) {
      json a = json::array();
      for (double x : v) a.push_back(jnum(x));
      return a;
    };
    b["eta"] = arr(cfg.tab_eta);
    b["G"] = arr(cfg.tab_G);
    b["alpha0"] = arr(cfg.tab_alpha0);
    b["alpha"] = arr(cfg.tab_alpha);
    b["delta_star"] = jnum(cfg.tab_delta_star);
  }
  json f;
  f["eta0"] = cfg.eta0_spec;
  f["theta0"] = cfg.theta0_spec;
  f["eta_ad"] = cfg.eta_ad_spec;
  f["theta_ad"] = cfg.theta_ad_spec;
  json x;
  x["lower"] = jnum(cfg.box_lower);
  x["upper"] = jnum(cfg.box_upper);
  json o;
  o["tol"] = jnum(cfg.ocp.tol);
  o["max_iters"] = cfg.ocp.max_iters;
  o["armijo_init"] = jnum(cfg.ocp.armijo_init);
  o["armijo_shrink"] = jnum(cfg.ocp.armijo_shrink);
  o["armijo_c1"] = jnum(cfg.ocp.armijo_c1);
  o["max_halvings"] = cfg.ocp.max_halvings;
  json eps = json::array();
  for (double e : cfg.eps_list) eps.push_back(jnum(e));
  json root;
  root["grid"] = g;
  root["time"] = t;
  root["params"] = p;
  root["bundle"] = b;
  root["fields"] = f;
  root["box"] = x;
  root["ocp"] = o;
  root["eps_list"] = eps;
  root["suites"] = cfg.suites;
  root["seed"] = cfg.seed;
  // out_dir is deliberately not echoed: artifacts must be byte-identical
  // for the same run regardless of where they are written
  return root;
}

struct Prepared {
  SpatialGrid grid;
  std::unique_ptr<DiscreteOperators> ops;
  StateInstance inst;
};

Prepared prepare(const RunConfig& cfg) {
  Prepared p;
  p.grid = grid_from_config(cfg);
  p.ops = assemble_operators(p.grid);
  p.inst = build_instance(*p.ops, cfg);
  return p;
}

void emit_energy_csv(const fs::path& out, const TimeGrid& tg,
                     const std::vector<double>& energy) {
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < energy.size(); ++i)
    rows.push_back({tg.node(static_cast<int>(i)), energy[i]});
  write_csv(out / "energy.csv", "t,energy", rows);
}

int run_solve_state(const RunConfig& cfg, const fs::path& out) {
  Prepared pr = prepare(cfg);
  const StateTrajectory st = solve_state(*pr.ops, pr.inst);
  emit_energy_csv(out, pr.inst.tg, st.energy);
  fs::create_directories(out / "fields");
  write_field_series(out / "fields", "eta", pr.grid, st.eta);
  write_field_series(out / "fields", "theta", pr.grid, st.theta);
  long iters = 0;
  for (int it : st.newton_iters_eta) iters += it;
  for (int it : st.newton_iters_theta) iters += it;
  double max_inc = -std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < st.energy.size(); ++i)
    max_inc = std::max(max_inc, st.energy[i] - st.energy[i - 1]);
  json diag;
  diag["energy_initial"] = jnum(st.energy.front());
  diag["energy_final"] = jnum(st.energy.back());
  diag["max_energy_step_increase"] = jnum(max_inc);
  diag["newton_iterations"] = iters;
  write_json(out / "diagnostics.json", diag);
  return 0;
}

int run_solve_ocp(const RunConfig& cfg, const fs::path& out,
                  std::string& error) {
  Prepared pr = prepare(cfg);
  const BoxConstraint box =
      box_from_config(cfg, pr.inst.tg, pr.grid.n_nodes());
  const OcpReport rep = solve_ocp(*pr.ops, pr.inst, box, cfg.ocp);
  std::vector<std::vector<double>> rows;
  for (const OcpIterate& it : rep.history)
    rows.push_back({static_cast<double>(it.iter), it.J, it.residual_u,
                    it.residual_v, it.step});
  write_csv(out / "cost.csv", "iter,J,residual_u,residual_v,step", rows);
  emit_energy_csv(out, pr.inst.tg, rep.state.energy);
  fs::create_directories(out / "fields");
  write_field_series(out / "fields", "eta", pr.grid, rep.state.eta);
  write_field_series(out / "fields", "theta", pr.grid, rep.state.theta);
  write_field_series(out / "fields", "u", pr.grid, rep.u);
  write_field_series(out / "fields", "v", pr.grid, rep.v);
  write_field_series(out / "fields", "p", pr.grid, rep.adjoint.p);
  write_field_series(out / "fields", "z", pr.grid, rep.adjoint.z);
  const OptimalityResiduals res = optimality_residuals(
      *pr.ops, pr.inst, box, rep.u, rep.v, rep.adjoint, cfg.seed);
  json diag;
  diag["converged"] = rep.converged;
  diag["iterations"] = static_cast<int>(rep.history.size());
  diag["final_cost"] = jnum(rep.final_cost);
  diag["fixed_point_residual"] = jnum(res.fixed_point);
  diag["v_stationarity"] = jnum(res.vstat);
  diag["vi_min"] = jnum(res.vi_min);
  if (!rep.failure.empty()) diag["failure"] = rep.failure;
  write_json(out / "diagnostics.json", diag);
  if (!rep.converged) {
    error = rep.failure.empty() ? "optimizer did not converge" : rep.failure;
    return 3;
  }
  return 0;
}

int run_gradcheck(const RunConfig& cfg, const fs::path& out) {
  Prepared pr = prepare(cfg);
  const DiscreteOperators& ops = *pr.ops;
  const StateTrajectory st = solve_state(ops, pr.inst);
  const LinearState adj = solve_adjoint(ops, pr.inst, st);

  const TimeGrid tg = pr.inst.tg;
  auto direction = [&](bool cosine, double a0, double a1) {
    ScalarTrajectory w;
    w.time = tg;
    w.vals.resize(static_cast<size_t>(tg.n) + 1);
    for (int i = 0; i <= tg.n; ++i) {
      const double t = tg.node(i);
      ScalarField f(pr.grid.n_nodes());
      for (int jn = 0; jn < pr.grid.n_nodes(); ++jn) {
        double prod = 1.0;
        for (int d = 0; d < pr.grid.dim; ++d) {
          const double xh = (pr.grid.nodes(jn, d) - cfg.extents[d][0]) /
                            (cfg.extents[d][1] - cfg.extents[d][0]);
          prod *= cosine ? std::cos(kPi * xh) : std::sin(kPi * xh);
        }
        f(jn) = (a0 + a1 * t) * prod;
      }
      w[i] = f;
    }
    return w;
  };
  const ScalarTrajectory du = direction(false, 1.0, -0.5);
  const ScalarTrajectory dv = direction(true, 0.4, 0.3);
  const double pairing = cost_directional(ops, pr.inst, adj, du, dv);

  std::vector<std::vector<double>> rows;
  double max_rel = 0;
  for (const double delta : {1e-3, 1e-4, 1e-5}) {
    const FdGradient fd = fd_gradient(ops, pr.inst, du, dv, delta);
    const double rel = std::abs(pairing - fd.extrapolated) /
                       std::max(std::abs(fd.extrapolated), 1e-300);
    max_rel = std::max(max_rel, rel);
    rows.push_back(
        {delta, fd.fd_coarse, fd.fd_fine, fd.extrapolated, pairing, rel});
  }
  write_csv(out / "gradcheck.csv",
            "delta,fd_coarse,fd_fine,fd_extrapolated,adjoint_pairing,rel_err",
            rows);
  const bool pass = max_rel <= 1e-3;
  json diag;
  diag["adjoint_pairing"] = jnum(pairing);
  diag["max_rel_err"] = jnum(max_rel);
  diag["pass"] = pass;
  write_json(out / "diagnostics.json", diag);
  return pass ? 0 : 1;
}

int run_eps_sweep(const RunConfig& cfg, const fs::path& out,
                  std::string& error) {
  if (cfg.eps_list.empty())
    throw ConfigError("eps_list: must be nonempty for eps-sweep");
  Prepared pr = prepare(cfg);
  const BoxConstraint box =
      box_from_config(cfg, pr.inst.tg, pr.grid.n_nodes());
  const std::vector<EpsLevel> levels = epsilon_continuation(
      *pr.ops, pr.inst, box, cfg.eps_list, cfg.ocp);
  std::vector<std::vector<double>> rows;
  json arr = json::array();
  bool all_conv = true;
  for (const EpsLevel& lv : levels) {
    rows.push_back({lv.eps, lv.cost_value, lv.cost_gap_prev,
                    lv.control_dist_prev, lv.sup_flux_norm, lv.max_dir_error,
                    static_cast<double>(lv.ocp.history.size()),
                    lv.ocp.converged ? 1.0 : 0.0});
    json e;
    e["eps"] = jnum(lv.eps);
    e["cost"] = jnum(lv.cost_value);
    e["cost_gap_prev"] = jnum(lv.cost_gap_prev);
    e["control_dist_prev"] = jnum(lv.control_dist_prev);
    e["sup_flux_norm"] = jnum(lv.sup_flux_norm);
    e["max_dir_error"] = jnum(lv.max_dir_error);
    e["dir_floor"] = jnum(lv.dir_floor);
    e["iterations"] = static_cast<int>(lv.ocp.history.size());
    e["converged"] = lv.ocp.converged;
    arr.push_back(e);
    all_conv = all_conv && lv.ocp.converged;
  }
  write_csv(out / "sweep.csv",
            "eps,cost,cost_gap_prev,control_dist_prev,sup_flux_norm,"
            "max_dir_error,iterations,converged",
            rows);
  json diag;
  diag["levels"] = arr;
  diag["all_converged"] = all_conv;
  write_json(out / "diagnostics.json", diag);
  if (!all_conv) {
    error = "one or more sweep levels did not converge";
    return 3;
  }
  return 0;
}

int run_check_suites(const RunConfig& cfg, const fs::path& out) {
  const std::vector<CheckResult> results = run_checks(cfg.suites);
  json arr = json::array();
  bool all = true;
  for (const CheckResult& res : results) {
    json e;
    e["name"] = res.name;
    e["passed"] = res.passed;
    json m;
    for (const auto& kv : res.metrics) m[kv.first] = jnum(kv.second);
    e["metrics"] = m;
    e["notes"] = res.notes;
    arr.push_back(e);
    all = all && res.passed;
    std::printf("  %-22s %s\n", res.name.c_str(),
                res.passed ? "PASS" : "FAIL");
  }
  json diag;
  diag["checks"] = arr;
  diag["all_passed"] = all;
  write_json(out / "diagnostics.json", diag);
  return all ? 0 : 1;
}

}  // namespace

int run_subcommand(const std::string& cmd, const RunConfig& cfg) {
  const fs::path out = cfg.out_dir;
  int code = 0;
  std::string status = "ok", error;
  try {
    fs::create_directories(out);
    if (cmd == "solve-state") {
      code = run_solve_state(cfg, out);
    } else if (cmd == "solve-ocp") {
      code = run_solve_ocp(cfg, out, error);
    } else if (cmd == "gradcheck") {
      code = run_gradcheck(cfg, out);
    } else if (cmd == "eps-sweep") {
      code = run_eps_sweep(cfg, out, error);
    } else if (cmd == "check") {
      code = run_check_suites(cfg, out);
    } else {
      throw ConfigError("unknown subcommand: " + cmd);
    }
  } catch (const ConfigError& e) {
    status = "config-error";
    error = e.what();
    code = 2;
  } catch (const StepSizeError& e) {
    status = "solver-failure";
    error = e.what();
    code = 3;
  } catch (const SolverError& e) {
    status = "solver-failure";
    error = e.what();
    code = 3;
  } catch (const std::exception& e) {
    status = "solver-failure";
    error = e.what();
    code = 3;
  }
  if (code == 1) status = "check-failure";
  if (code == 3 && status == "ok") status = "solver-failure";
  json meta;
  meta["subcommand"] = cmd;
  meta["status"] = status;
  if (!error.empty()) meta["error"] = error;
  meta["seed"] = cfg.seed;
  json ver;
  ver["kwcopt"] = kVersion;
  ver["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
  meta["version"] = ver;
  meta["config"] = config_json(cfg);
  try {
    fs::create_directories(out);
    write_json(out / "meta.json", meta);
  } catch (const std::exception&) {
    if (code == 0) code = 3;
  }
  return code;
}

int emit_config_error(const std::string& cmd, const std::string& out_dir,
                      const std::string& message) {
  try {
    fs::create_directories(out_dir);
    json meta;
    meta["subcommand"] = cmd;
    meta["status"] = "config-error";
    meta["error"] = message;
    write_json(fs::path(out_dir) / "meta.json", meta);
  } catch (const std::exception&) {
    // the exit code still reports the config error
  }
  return 2;
}

}  // namespace kwc
