#include "streco/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace streco {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + key + ": " + v);
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for " + key + ": " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad boolean value for " + key + ": " + v);
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

void set_key(ExperimentConfig& cfg, const std::string& section,
             const std::string& key, const std::string& value) {
  auto unknown = [&]() -> void {
    throw ConfigError("config: unknown key [" + section + "] " + key);
  };
  if (section == "grid") {
    if (key == "nx") cfg.nx = static_cast<int>(to_int(key, value));
    else if (key == "nt") cfg.nt = static_cast<int>(to_int(key, value));
    else if (key == "x_min") cfg.x_min = to_double(key, value);
    else if (key == "x_max") cfg.x_max = to_double(key, value);
    else if (key == "T") cfg.T = to_double(key, value);
    else unknown();
  } else if (section == "coefficients") {
    if (key == "c") cfg.c.name = value;
    else if (key == "c_params") cfg.c.params = to_list(key, value);
    else if (key == "d") cfg.d.name = value;
    else if (key == "d_params") cfg.d.params = to_list(key, value);
    else if (key == "y0") cfg.y0.name = value;
    else if (key == "y0_params") cfg.y0.params = to_list(key, value);
    else if (key == "numeric_c_x") cfg.numeric_c_x = to_bool(key, value);
    else unknown();
  } else if (section == "weights") {
    if (key == "kind") cfg.weight_kind = value;
    else if (key == "K1") cfg.K1 = to_double(key, value);
    else if (key == "K2") cfg.K2 = to_double(key, value);
    else if (key == "m") cfg.m = to_double(key, value);
    else if (key == "cap") cfg.log_cap = to_double(key, value);
    else if (key == "rho_star") cfg.rho_star = to_double(key, value);
    else unknown();
  } else if (section == "observation") {
    if (key == "omega_a") cfg.omega_a = to_double(key, value);
    else if (key == "omega_b") cfg.omega_b = to_double(key, value);
    else if (key == "sigma") cfg.sigma = to_double(key, value);
    else if (key == "seed")
      cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "quad_order")
      cfg.quad_order = static_cast<int>(to_int(key, value));
    else unknown();
  } else if (section == "formulation") {
    if (key == "name") cfg.formulation = value;
    else if (key == "r") cfg.r = to_double(key, value);
    else if (key == "r1") cfg.r1 = to_double(key, value);
    else if (key == "r2") cfg.r2 = to_double(key, value);
    else if (key == "alpha") cfg.alpha = to_double(key, value);
    else if (key == "alpha1") cfg.alpha1 = to_double(key, value);
    else if (key == "alpha2") cfg.alpha2 = to_double(key, value);
    else if (key == "eta") cfg.eta = to_double(key, value);
    else if (key == "eta1") cfg.eta1 = to_double(key, value);
    else if (key == "eta2") cfg.eta2 = to_double(key, value);
    else if (key == "eps") cfg.eps = to_double(key, value);
    else if (key == "realization") cfg.realization = value;
    else if (key == "multiplier") cfg.multiplier = value;
    else unknown();
  } else if (section == "solver") {
    if (key == "kind") cfg.solver = value;
    else if (key == "tol") cfg.tol = to_double(key, value);
    else if (key == "maxit") cfg.maxit = static_cast<int>(to_int(key, value));
    else if (key == "renormalize") cfg.renormalize = to_bool(key, value);
    else unknown();
  } else if (section == "output") {
    if (key == "dir") cfg.out_dir = value;
    else unknown();
  } else {
    throw ConfigError("config: unknown section [" + section + "]");
  }
}

bool one_of(const std::string& v, std::initializer_list<const char*> opts) {
  return std::any_of(opts.begin(), opts.end(),
                     [&](const char* o) { return v == o; });
}

double eval_preset(const PresetSpec& p, double x, double x_min, double x_max) {
  const auto& a = p.params;
  auto at = [&](std::size_t i, double dflt) {
    return i < a.size() ? a[i] : dflt;
  };
  if (p.name == "constant") return at(0, 0.0);
  if (p.name == "polynomial") {
    double v = 0.0, xp = 1.0;
    for (double coef : a) {
      v += coef * xp;
      xp *= x;
    }
    return v;
  }
  if (p.name == "eigenmode") {
    const double amp = at(0, 1.0), mode = at(1, 1.0), off = at(2, 0.0);
    const double xh = (x - x_min) / (x_max - x_min);
    return off + amp * std::sin(mode * M_PI * xh);
  }
  if (p.name == "bump") {
    const double amp = at(0, 1.0), ctr = at(1, 0.5 * (x_min + x_max));
    const double wid = at(2, 0.1 * (x_max - x_min)), off = at(3, 0.0);
    const double z = (x - ctr) / wid;
    return off + amp * std::exp(-z * z);
  }
  throw ConfigError("config: unknown preset " + p.name);
}

double eval_preset_dx(const PresetSpec& p, double x, double x_min,
                      double x_max) {
  const auto& a = p.params;
  auto at = [&](std::size_t i, double dflt) {
    return i < a.size() ? a[i] : dflt;
  };
  if (p.name == "constant") return 0.0;
  if (p.name == "polynomial") {
    double v = 0.0, xp = 1.0;
    for (std::size_t k = 1; k < a.size(); ++k) {
      v += static_cast<double>(k) * a[k] * xp;
      xp *= x;
    }
    return v;
  }
  if (p.name == "eigenmode") {
    const double amp = at(0, 1.0), mode = at(1, 1.0);
    const double L = x_max - x_min;
    return amp * (mode * M_PI / L) * std::cos(mode * M_PI * (x - x_min) / L);
  }
  if (p.name == "bump") {
    const double amp = at(0, 1.0), ctr = at(1, 0.5 * (x_min + x_max));
    const double wid = at(2, 0.1 * (x_max - x_min));
    const double z = (x - ctr) / wid;
    return amp * std::exp(-z * z) * (-2.0 * z / wid);
  }
  throw ConfigError("config: unknown preset " + p.name);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: malformed section header at line " +
                          std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key=value at line " +
                        std::to_string(lineno));
    if (section.empty())
      throw ConfigError("config: key outside any section at line " +
                        std::to_string(lineno));
    set_key(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.nx < 1 || cfg.nt < 1)
    throw ConfigError("config: nx and nt must be >= 1");
  if (!(cfg.x_max > cfg.x_min)) throw ConfigError("config: x_max <= x_min");
  if (!(cfg.T > 0.0)) throw ConfigError("config: T must be positive");
  for (const PresetSpec* p : {&cfg.c, &cfg.d, &cfg.y0})
    if (!one_of(p->name, {"constant", "polynomial", "eigenmode", "bump"}))
      throw ConfigError("config: unknown preset " + p->name);
  if (!one_of(cfg.weight_kind, {"unit", "power", "carleman-c", "carleman-p"}))
    throw ConfigError("config: unknown weight kind " + cfg.weight_kind);
  if (!(cfg.rho_star > 0.0)) throw ConfigError("config: rho_star must be > 0");
  if (!(cfg.log_cap > 0.0)) throw ConfigError("config: cap must be > 0");
  if (!(cfg.m > 0.0 && cfg.m < 1.0)) throw ConfigError("config: m in (0,1)");
  if (!(cfg.K1 > 0.0 && cfg.K2 > 0.0))
    throw ConfigError("config: K1, K2 must be > 0");
  if (cfg.omega_a < cfg.x_min || cfg.omega_b > cfg.x_max)
    throw ConfigError("config: omega outside the spatial domain");
  if (!(cfg.omega_b > cfg.omega_a)) throw ConfigError("config: empty omega");
  if (cfg.sigma < 0.0) throw ConfigError("config: sigma must be >= 0");
  if (cfg.quad_order < 2 || cfg.quad_order > 4)
    throw ConfigError("config: quad_order in {2,3,4}");
  if (!one_of(cfg.formulation, {"mf", "mf-alpha", "mf4", "mf4-alpha", "qr"}))
    throw ConfigError("config: unknown formulation " + cfg.formulation);
  for (auto [label, v] : {std::pair<const char*, double>{"r", cfg.r},
                          {"r1", cfg.r1},
                          {"r2", cfg.r2}})
    if (v < 0.0) throw ConfigError(std::string("config: ") + label + " < 0");
  for (auto [label, v] : {std::pair<const char*, double>{"alpha", cfg.alpha},
                          {"alpha1", cfg.alpha1},
                          {"alpha2", cfg.alpha2}})
    if (v < 0.0 || v >= 1.0)
      throw ConfigError(std::string("config: ") + label + " must be in [0,1)");
  for (auto [label, v] : {std::pair<const char*, double>{"eta", cfg.eta},
                          {"eta1", cfg.eta1},
                          {"eta2", cfg.eta2}})
    if (!(v > 0.0))
      throw ConfigError(std::string("config: ") + label + " must be > 0");
  if (!(cfg.eps > 0.0)) throw ConfigError("config: eps must be > 0");
  if (!one_of(cfg.realization, {"matched", "literal"}))
    throw ConfigError("config: unknown realization " + cfg.realization);
  if (!one_of(cfg.multiplier, {"p0", "q1", "hermite"}))
    throw ConfigError("config: unknown multiplier space " + cfg.multiplier);
  if (!one_of(cfg.solver, {"direct", "dual"}))
    throw ConfigError("config: unknown solver " + cfg.solver);
  if (!(cfg.tol > 0.0)) throw ConfigError("config: tol must be > 0");
  if (cfg.out_dir.empty()) throw ConfigError("config: empty output dir");
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  auto list = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? "," : "") + num(v[i]);
    return s;
  };
  out << "[grid]\n"
      << "nx = " << cfg.nx << "\nnt = " << cfg.nt << "\nx_min = "
      << num(cfg.x_min) << "\nx_max = " << num(cfg.x_max) << "\nT = "
      << num(cfg.T) << "\n\n[coefficients]\n"
      << "c = " << cfg.c.name << "\nc_params = " << list(cfg.c.params)
      << "\nd = " << cfg.d.name << "\nd_params = " << list(cfg.d.params)
      << "\ny0 = " << cfg.y0.name << "\ny0_params = " << list(cfg.y0.params)
      << "\nnumeric_c_x = " << (cfg.numeric_c_x ? "true" : "false")
      << "\n\n[weights]\n"
      << "kind = " << cfg.weight_kind << "\nK1 = " << num(cfg.K1)
      << "\nK2 = " << num(cfg.K2) << "\nm = " << num(cfg.m) << "\ncap = "
      << num(cfg.log_cap) << "\nrho_star = " << num(cfg.rho_star)
      << "\n\n[observation]\n"
      << "omega_a = " << num(cfg.omega_a) << "\nomega_b = " << num(cfg.omega_b)
      << "\nsigma = " << num(cfg.sigma) << "\nseed = " << cfg.seed
      << "\nquad_order = " << cfg.quad_order << "\n\n[formulation]\n"
      << "name = " << cfg.formulation << "\nr = " << num(cfg.r) << "\nr1 = "
      << num(cfg.r1) << "\nr2 = " << num(cfg.r2) << "\nalpha = "
      << num(cfg.alpha) << "\nalpha1 = " << num(cfg.alpha1) << "\nalpha2 = "
      << num(cfg.alpha2) << "\neta = " << num(cfg.eta) << "\neta1 = "
      << num(cfg.eta1) << "\neta2 = " << num(cfg.eta2) << "\neps = "
      << num(cfg.eps) << "\nrealization = " << cfg.realization
      << "\nmultiplier = " << cfg.multiplier << "\n\n[solver]\n"
      << "kind = " << cfg.solver << "\ntol = " << num(cfg.tol) << "\nmaxit = "
      << cfg.maxit << "\nrenormalize = " << (cfg.renormalize ? "true" : "false")
      << "\n\n[output]\n"
      << "dir = " << cfg.out_dir << "\n";
  return out.str();
}

SpaceTimeGrid make_grid(const ExperimentConfig& cfg) {
  return build_grid(cfg.x_min, cfg.x_max, cfg.T, cfg.nx, cfg.nt);
}

Coefficients make_coefficients(const ExperimentConfig& cfg) {
  Coefficients co;
  const double a = cfg.x_min, b = cfg.x_max;
  const PresetSpec c = cfg.c, d = cfg.d, y0 = cfg.y0;
  co.c = [c, a, b](double x) { return eval_preset(c, x, a, b); };
  if (!cfg.numeric_c_x)
    co.c_x = [c, a, b](double x) { return eval_preset_dx(c, x, a, b); };
  co.d = [d, a, b](double x, double) { return eval_preset(d, x, a, b); };
  co.y0 = [y0, a, b](double x) { return eval_preset(y0, x, a, b); };

  // c0: sampled lower bound of c.
  double cmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 512; ++i)
    cmin = std::min(cmin, co.c(a + (b - a) * i / 512.0));
  co.c0 = cmin;
  return co;
}

WeightFamily make_weights(const ExperimentConfig& cfg) {
  WeightKind kind = WeightKind::Unit;
  if (cfg.weight_kind == "power") kind = WeightKind::Power;
  else if (cfg.weight_kind == "carleman-c") kind = WeightKind::CarlemanC;
  else if (cfg.weight_kind == "carleman-p") kind = WeightKind::CarlemanP;
  const BetaProfile beta = build_beta(cfg.K1, cfg.K2, cfg.omega_a, cfg.omega_b,
                                      cfg.m, cfg.x_min, cfg.x_max);
  return make_weight_family(kind, beta, cfg.rho_star, cfg.log_cap);
}

}  // namespace streco
