#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "heavysum/errors.hpp"
#include "heavysum/path.hpp"

namespace heavysum::cli {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    unsigned long long u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i]);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

const std::set<std::string> kChecks{"tail", "mixing", "lemma5", "mbc", "moments", "twohumps", "diophantine"};

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ExperimentConfig::set(const std::string& key, const std::string& v) {
  auto list = [&](std::vector<double>& dst) {
    dst.clear();
    for (const auto& item : split_list(v)) dst.push_back(to_double(key, item));
  };
  if (key == "map") map = v;
  else if (key == "x") x = to_double(key, v);
  else if (key == "a") a = to_double(key, v);
  else if (key == "s") s = to_double(key, v);
  else if (key == "psi") psi = v;
  else if (key == "r") r = static_cast<int>(to_uint(key, v));
  else if (key == "alpha") {
    alpha_auto = v == "auto";
    if (!alpha_auto) alpha = to_double(key, v);
  } else if (key == "delta") delta = to_double(key, v);
  else if (key == "D") {
    D_auto = v == "auto";
    if (!D_auto) D = to_double(key, v);
  } else if (key == "eps") eps = to_double(key, v);
  else if (key == "k_min") k_min = static_cast<int>(to_uint(key, v));
  else if (key == "k_max") k_max = static_cast<int>(to_uint(key, v));
  else if (key == "seeds") seeds = to_uint(key, v);
  else if (key == "master_seed") master_seed = to_uint(key, v);
  else if (key == "source") source = v;
  else if (key == "samples") samples = to_uint(key, v);
  else if (key == "path_seeds") path_seeds = to_uint(key, v);
  else if (key == "path_grid") path_grid = static_cast<int>(to_uint(key, v));
  else if (key == "checks") checks = split_list(v);
  else if (key == "jump_budget_max_fraction") jump_budget_max_fraction = to_double(key, v);
  else if (key == "lemma5_factor") lemma5_factor = to_double(key, v);
  else if (key == "moment_factor") moment_factor = to_double(key, v);
  else if (key == "alpha_bar") alpha_bar = to_double(key, v);
  else if (key == "eps_bar") eps_bar = to_double(key, v);
  else if (key == "sep_K") sep_K = to_double(key, v);
  else if (key == "eps_hat") eps_hat = to_double(key, v);
  else if (key == "C") C = to_double(key, v);
  else if (key == "mbc_orbits") mbc_orbits = to_uint(key, v);
  else if (key == "mbc_k") mbc_k = static_cast<int>(to_uint(key, v));
  else if (key == "window_c") window_c = to_double(key, v);
  else if (key == "window_eps") window_eps = to_double(key, v);
  else if (key == "interval") {
    std::vector<double> iv;
    list(iv);
    if (iv.size() != 2) throw ConfigError("interval: expected lo,hi");
    interval_lo = iv[0];
    interval_hi = iv[1];
  } else if (key == "target_times") list(target_times);
  else if (key == "target_sizes") list(target_sizes);
  else if (key == "tol") tol = to_double(key, v);
  else if (key == "coverage_factor") coverage_factor = to_double(key, v);
  else if (key == "out") out = v;
  else if (key == "timestamps") timestamps = to_bool(key, v);
  else throw ConfigError("unknown key '" + key + "'");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    auto key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    cfg.set(key, value);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::finalize() {
  try {
    (void)make_map();
    (void)make_observable();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  {
    auto m = make_map();
    map = m.is_linear() ? "linear:" + std::to_string(m.degree()) : "perturbed:" + num(m.eps_pert());
  }
  if (!(s > 0.0 && s < 2.0)) throw ConfigError("s must lie in (0, 2)");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  if (k_min < 4) throw ConfigError("k_min must be >= 4");
  if (k_max < k_min || k_max > 40) throw ConfigError("need k_min <= k_max <= 40");
  if (mbc_k < 4 || mbc_k > 40) throw ConfigError("mbc_k must lie in 4..40");
  if (seeds == 0 || mbc_orbits == 0) throw ConfigError("seeds and mbc_orbits must be positive");
  if (source != "orbit" && source != "iid") throw ConfigError("source must be orbit or iid");
  if (path_grid < 2 || (path_grid & (path_grid - 1)) != 0) throw ConfigError("path_grid must be a power of two >= 2");
  for (const auto& c : checks)
    if (!kChecks.contains(c)) throw ConfigError("unknown check '" + c + "'");
  if (alpha_auto) {
    if (r < 1) throw ConfigError("alpha = auto needs r >= 1");
    alpha = alpha_window(r, s).midpoint();
  }
  if (!(alpha > 0.0 && alpha <= 1.0 / s)) throw ConfigError("alpha must lie in (0, 1/s]");
  if (D_auto) {
    D = 0.0;
    for (int q = 1; q <= 10'000; ++q)
      if (validate_D(q * delta, s, alpha)) {
        D = q * delta;
        break;
      }
    if (D == 0.0) throw ConfigError("no multiple of delta passes the D conditions");
  }
  if (!(D > 0.0) || !validate_D(D, s, alpha)) throw ConfigError("D fails the trimming conditions for (s, alpha)");
  if (alpha_bar == 0.0) alpha_bar = alpha / 2.0;
  if (!(alpha_bar > 0.0 && alpha_bar < alpha)) throw ConfigError("need 0 < alpha_bar < alpha");
  if (!(eps > 0.0 && eps_bar > 0.0 && C > 0.0 && tol > 0.0)) throw ConfigError("eps, eps_bar, C, tol must be positive");
  if (!(window_eps > 0.0 && window_eps < window_c)) throw ConfigError("need 0 < window_eps < window_c");
  if (!(0.0 <= interval_lo && interval_lo < interval_hi && interval_hi <= 1.0))
    throw ConfigError("interval must satisfy 0 <= lo < hi <= 1");
  if (target_times.size() != target_sizes.size()) throw ConfigError("target_times and target_sizes differ in length");
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv{
      {"map", map},
      {"x", num(x)},
      {"a", num(a)},
      {"s", num(s)},
      {"psi", psi},
      {"r", std::to_string(r)},
      {"alpha", alpha_auto ? "auto" : num(alpha)},
      {"delta", num(delta)},
      {"D", D_auto ? "auto" : num(D)},
      {"eps", num(eps)},
      {"k_min", std::to_string(k_min)},
      {"k_max", std::to_string(k_max)},
      {"seeds", std::to_string(seeds)},
      {"master_seed", std::to_string(master_seed)},
      {"source", source},
      {"samples", std::to_string(samples)},
      {"path_seeds", std::to_string(path_seeds)},
      {"path_grid", std::to_string(path_grid)},
      {"checks", join(checks)},
      {"jump_budget_max_fraction", num(jump_budget_max_fraction)},
      {"lemma5_factor", num(lemma5_factor)},
      {"moment_factor", num(moment_factor)},
      {"alpha_bar", num(alpha_bar)},
      {"eps_bar", num(eps_bar)},
      {"sep_K", num(sep_K)},
      {"eps_hat", num(eps_hat)},
      {"C", num(C)},
      {"mbc_k", std::to_string(mbc_k)},
      {"mbc_orbits", std::to_string(mbc_orbits)},
      {"window_c", num(window_c)},
      {"window_eps", num(window_eps)},
      {"interval", num(interval_lo) + "," + num(interval_hi)},
      {"target_times", join(target_times)},
      {"target_sizes", join(target_sizes)},
      {"tol", num(tol)},
      {"coverage_factor", num(coverage_factor)},
      {"timestamps", timestamps ? "true" : "false"},
  };
  std::string text;
  for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
  return text;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

CircleMap ExperimentConfig::make_map() const {
  auto colon = map.find(':');
  std::string kind = map.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : map.substr(colon + 1);
  if (kind == "doubling" && arg.empty()) return CircleMap::linear(2);
  if (kind == "linear") return CircleMap::linear(static_cast<int>(to_uint("map", arg)));
  if (kind == "perturbed") return CircleMap::perturbed_doubling(to_double("map", arg));
  throw ConfigError("map must be doubling, linear:<m> or perturbed:<eps>, got '" + map + "'");
}

SingularObservable ExperimentConfig::make_observable() const {
  if (psi == "none") return SingularObservable(a, s, x);
  if (psi.rfind("cosine:", 0) == 0) return SingularObservable(a, s, x, PsiKind::kCosine, to_double("psi", psi.substr(7)));
  throw ConfigError("psi must be none or cosine:<c>, got '" + psi + "'");
}

}  // namespace heavysum::cli
