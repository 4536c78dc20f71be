#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "heavysum/circle_map.hpp"
#include "heavysum/density.hpp"
#include "heavysum/errors.hpp"
#include "heavysum/events.hpp"
#include "heavysum/j1.hpp"
#include "heavysum/observable.hpp"
#include "heavysum/path.hpp"
#include "heavysum/rng.hpp"
#include "report.hpp"
#include "scan.hpp"
#include "svg.hpp"

namespace heavysum::cli {

namespace fs = std::filesystem;

namespace {

// Seeds for estimators live far above the orbit seed indices.
std::uint64_t aux_seed(const ExperimentConfig& cfg, std::uint64_t tag) {
  return derive_seed(cfg.master_seed, (std::uint64_t{1} << 40) + tag);
}

void write_file(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path());
  std::ofstream f(file);
  if (!f) throw Error("cannot write " + file.string());
  f << text;
  if (!f) throw Error("write failed: " + file.string());
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Json wilson_json(std::size_t k, std::size_t n) {
  auto [lo, hi] = wilson_interval(k, n);
  return {{"count", k}, {"samples", n}, {"fraction", static_cast<double>(k) / static_cast<double>(n)},
          {"ci", {lo, hi}}};
}

struct GofResult {
  double chi2 = 0.0;
  int dof = 0;
  double p = 1.0;
};

// Chi-square of a count histogram against Binomial(N, sigma), pooling
// adjacent cells until each expected count is at least 5.
GofResult binomial_gof(const std::vector<std::size_t>& hist, double N, double sigma, std::size_t seeds) {
  boost::math::binomial_distribution<double> bin(N, sigma);
  const double n = static_cast<double>(seeds);
  GofResult g;
  double expected = 0.0, observed = 0.0;
  int cells = 0;
  for (std::size_t k = 0; k < hist.size(); ++k) {
    bool last = k + 1 == hist.size();
    double p = last ? boost::math::cdf(boost::math::complement(bin, static_cast<double>(k) - 1.0))
                    : boost::math::pdf(bin, static_cast<double>(k));
    expected += p * n;
    observed += static_cast<double>(hist[k]);
    double rest = last ? 0.0 : boost::math::cdf(boost::math::complement(bin, static_cast<double>(k))) * n;
    if ((expected >= 5.0 && rest >= 5.0) || last) {
      if (expected > 0.0) g.chi2 += (observed - expected) * (observed - expected) / expected;
      expected = observed = 0.0;
      ++cells;
    }
  }
  g.dof = cells - 1;
  if (g.dof >= 1) g.p = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(g.dof), g.chi2));
  return g;
}

// Stratified draws from a piecewise-constant density by inverting its CDF.
std::vector<double> sample_density(const DensityEstimate& mu, std::size_t n, std::uint64_t seed) {
  const auto& v = mu.values();
  std::vector<double> cdf(v.size() + 1, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) cdf[i + 1] = cdf[i] + v[i] * mu.bin_width();
  Engine eng(seed);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = (static_cast<double>(i) + uniform01(eng)) / static_cast<double>(n) * cdf.back();
    auto b = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) - 1;
    b = std::min(b, v.size() - 1);
    double within = v[b] > 0.0 ? (u - cdf[b]) / (v[b] * mu.bin_width()) : 0.5;
    y[i] = std::min((static_cast<double>(b) + within) * mu.bin_width(), std::nextafter(1.0, 0.0));
  }
  return y;
}

std::string csv_path(std::size_t seed, std::size_t N) {
  return "paths/seed" + std::to_string(seed) + "_N" + std::to_string(N) + ".csv";
}

// ---------------------------------------------------------------- checks

struct CheckContext {
  const ExperimentConfig& cfg;
  Scanner scanner;
  std::optional<std::vector<SeedScan>> scans;

  explicit CheckContext(const ExperimentConfig& c) : cfg(c), scanner(c) {}

  const std::vector<SeedScan>& all_scans() {
    if (!scans) scans = scan_all(scanner, cfg.out, 0);
    return *scans;
  }
  std::vector<double> ladder_x() const {
    std::vector<double> x;
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) x.push_back(k);
    return x;
  }
};

Json check_tail(CheckContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto phi = cfg.make_observable();
  const auto& mu = ctx.scanner.density();
  std::vector<double> t_grid;
  for (int i = 0; i < 4; ++i) t_grid.push_back(cfg.a * std::pow(16.0 * std::pow(4.0, i), 1.0 / cfg.s));
  auto analytic = tail_constant(phi, mu, t_grid);
  auto y = sample_density(mu, cfg.samples, aux_seed(cfg, 1));
  auto sampled = tail_constant_sampled(phi, y, mu.at(wrap01(cfg.x)), t_grid);
  bool pass = true;
  Json rows = Json::array();
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    double diff = std::fabs(sampled.scaled[i] - analytic.scaled[i]);
    // 5% relative, or three sampling errors when those are wider
    bool ok = diff <= std::max(0.05 * analytic.scaled[i], 3.0 * sampled.stderr_[i]);
    pass = pass && ok;
    rows.push_back({{"t", t_grid[i]},
                    {"analytic", analytic.scaled[i]},
                    {"sampled", sampled.scaled[i]},
                    {"stderr", sampled.stderr_[i]},
                    {"ci", {sampled.scaled[i] - 1.96 * sampled.stderr_[i], sampled.scaled[i] + 1.96 * sampled.stderr_[i]}},
                    {"ok", ok}});
  }
  Json trend{{"x_label", "log10 t"}, {"y_label", "t^s mu(phi > t)"}, {"series", Json::array()}};
  Json sx = Json::array(), sy = Json::array(), slo = Json::array(), shi = Json::array(), ay = Json::array();
  for (const auto& r : rows) {
    sx.push_back(std::log10(r["t"].get<double>()));
    sy.push_back(r["sampled"]);
    slo.push_back(r["ci"][0]);
    shi.push_back(r["ci"][1]);
    ay.push_back(r["analytic"]);
  }
  trend["series"].push_back({{"name", "sampled"}, {"x", sx}, {"y", sy}, {"lo", slo}, {"hi", shi}});
  trend["series"].push_back({{"name", "density"}, {"x", sx}, {"y", ay}});
  return {{"pass", pass},
          {"samples", cfg.samples},
          {"two_sided", analytic.two_sided},
          {"one_sided_convention", analytic.one_sided_convention},
          {"fitted_sampled", sampled.fitted},
          {"rows", rows},
          {"trend", trend}};
}

Json check_mixing(CheckContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto map = cfg.make_map();
  const auto& mu = ctx.scanner.density();
  auto half = CircleStep::indicator(0.0, 0.5);
  auto rep = correlation_lags(map, half, half, 20, cfg.samples, aux_seed(cfg, 2), mu);
  std::vector<CircleStep> phis{half, CircleStep::indicator(0.0, 0.25)};
  std::vector<int> times{0, 3};
  auto mc = multiple_correlation(map, phis, times, cfg.samples, aux_seed(cfg, 3));
  auto br = mixing_bracket(phis, times, rep.fitted_C, rep.fitted_theta, mc, 3.0, mu);
  bool pass = rep.fitted_theta < 1.0 && br.inside;
  Json sx = Json::array(), sy = Json::array(), lo = Json::array(), hi = Json::array(), env = Json::array();
  for (std::size_t i = 0; i < rep.lags.size(); ++i) {
    sx.push_back(rep.lags[i]);
    sy.push_back(std::fabs(rep.values[i]));
    lo.push_back(std::max(0.0, std::fabs(rep.values[i]) - 1.96 * rep.stderr_[i]));
    hi.push_back(std::fabs(rep.values[i]) + 1.96 * rep.stderr_[i]);
    env.push_back(rep.envelope(rep.lags[i]));
  }
  return {{"pass", pass},
          {"samples", rep.samples},
          {"theta_hat", rep.fitted_theta},
          {"C_hat", rep.fitted_C},
          {"correlations", Json::parse(rep.to_json())},
          {"multiple", {{"lhs", mc.lhs}, {"lhs_stderr", mc.lhs_stderr}, {"rhs", mc.rhs}, {"samples", mc.samples}}},
          {"bracket", {{"lower", br.lower}, {"upper", br.upper}, {"inside", br.inside}}},
          {"trend",
           {{"x_label", "lag"},
            {"y_label", "|correlation|"},
            {"series", {{{"name", "measured"}, {"x", sx}, {"y", sy}, {"lo", lo}, {"hi", hi}},
                        {{"name", "envelope"}, {"x", sx}, {"y", env}}}}}}};
}

Json check_lemma5(CheckContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& scans = ctx.all_scans();
  Json med = Json::array(), lo = Json::array(), hi = Json::array();
  for (int r = 0; r < cfg.rungs(); ++r) {
    std::vector<double> v;
    for (const auto& s : scans) v.push_back(s.rungs[static_cast<std::size_t>(r)].sup_remainder);
    std::sort(v.begin(), v.end());
    // distribution-free 95% interval for the median from order statistics
    double n = static_cast<double>(v.size());
    auto at = [&](double q) { return v[static_cast<std::size_t>(std::clamp(q, 0.0, n - 1.0))]; };
    med.push_back(median(v));
    lo.push_back(at(std::floor(n / 2 - 0.98 * std::sqrt(n))));
    hi.push_back(at(std::ceil(n / 2 + 0.98 * std::sqrt(n))));
  }
  double ratio = med.front().get<double>() / med.back().get<double>();
  return {{"pass", ratio >= cfg.lemma5_factor},
          {"samples", scans.size()},
          {"median_ratio", ratio},
          {"required", cfg.lemma5_factor},
          {"trend",
           {{"x_label", "log2 N"},
            {"y_label", "median sup |S''| / norm"},
            {"series", {{{"name", "median"}, {"x", ctx.ladder_x()}, {"y", med}, {"lo", lo}, {"hi", hi}}}}}}};
}

Json check_mbc(CheckContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto map = cfg.make_map();
  auto phi = cfg.make_observable();
  const std::size_t N = cfg.horizon(cfg.mbc_k);
  const int r = std::max(cfg.r, 1);
  Json out{{"N", N}};
  bool pass = true;

  auto window = EventSpec::window(cfg.alpha, cfg.window_c, cfg.window_eps);
  std::vector<EventSpec> specs(static_cast<std::size_t>(r), window);
  std::vector<std::size_t> tuple;
  for (int j = 1; j <= r; ++j) tuple.push_back(static_cast<std::size_t>(j) * N / static_cast<std::size_t>(r + 1));
  try {
    auto m1 = estimate_M1(map, phi, specs, N, tuple, SeparationParams{cfg.sep_K, cfg.eps_hat}, cfg.samples,
                          aux_seed(cfg, 4));
    bool ok = m1.ci_low <= 1.0 && 1.0 <= m1.ci_high;
    pass = pass && ok;
    out["M1"] = Json::parse(m1.to_json());
    out["M1"]["ok"] = ok;
  } catch (const InsufficientStatistics& e) {
    pass = false;
    out["M1"] = {{"error", e.what()}, {"ok", false}};
  }

  auto m2 = estimate_M2(map, phi, EventSpec::exceedance(cfg.alpha, cfg.C), N, 1, 30, cfg.samples, aux_seed(cfg, 5));
  pass = pass && m2.monotone_envelope;
  out["M2"] = {{"samples", m2.samples},
               {"sigma", m2.sigma},
               {"gaps", m2.gaps},
               {"joint", m2.joint},
               {"stderr", m2.stderr_},
               {"recurrence_bound", m2.recurrence_bound ? Json(*m2.recurrence_bound) : Json()},
               {"theta_hat", m2.theta_hat},
               {"ok", m2.monotone_envelope}};

  std::vector<EventSpec> one{window};
  std::vector<TimeInterval> I{{cfg.interval_lo, cfg.interval_hi}};
  auto m4 = estimate_M4_intervals(map, phi, one, I, N, 0.0, cfg.mbc_orbits, aux_seed(cfg, 6),
                                  cfg.iid() ? PointSource::kIid : PointSource::kOrbit);
  bool ok4 = m4.ratio >= 0.5 && m4.ratio <= 1.5;
  pass = pass && ok4;
  out["M4"] = Json::parse(m4.to_json());
  out["M4"]["ok"] = ok4;
  out["pass"] = pass;
  return out;
}

Json check_moments(CheckContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& scans = ctx.all_scans();
  const bool periodic = detect_period(cfg.make_map(), wrap01(cfg.x), 64, 1e-12).has_value();
  Json y = Json::array(), lo = Json::array(), hi = Json::array();
  double mn = kInf, mx = 0.0;
  for (int r = 0; r < cfg.rungs(); ++r) {
    std::vector<double> band;
    for (const auto& s : scans) band.push_back(s.rungs[static_cast<std::size_t>(r)].band0);
    auto m = moment_estimate(band, static_cast<double>(cfg.horizon(cfg.k_min + r)), cfg.s, cfg.delta, 2, periodic);
    y.push_back(m.normalized);
    lo.push_back(m.normalized - 1.96 * m.stderr_);
    hi.push_back(m.normalized + 1.96 * m.stderr_);
    mn = std::min(mn, m.normalized);
    mx = std::max(mx, m.normalized);
  }
  double spread = mx / mn;
  return {{"pass", spread <= cfg.moment_factor},
          {"samples", scans.size()},
          {"periodic_correction", periodic},
          {"spread", spread},
          {"required", cfg.moment_factor},
          {"trend",
           {{"x_label", "log2 N"},
            {"y_label", periodic ? "E S^2 / (N^(2/s) (ln N)^(2 delta) (ln ln N)^2)" : "E S^2 / (N^(2/s) (ln N)^(2 delta))"},
            {"series", {{{"name", "normalized moment"}, {"x", ctx.ladder_x()}, {"y", y}, {"lo", lo}, {"hi", hi}}}}}}};
}

Json check_twohumps(CheckContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& scans = ctx.all_scans();
  Json per = Json::array(), y = Json::array(), lo = Json::array(), hi = Json::array();
  std::vector<std::size_t> counts;
  for (int r = 0; r < cfg.rungs(); ++r) {
    std::size_t k = 0;
    for (const auto& s : scans) k += s.rungs[static_cast<std::size_t>(r)].two_humps ? 1 : 0;
    counts.push_back(k);
    auto w = wilson_json(k, scans.size());
    per.push_back(w);
    y.push_back(w["fraction"]);
    lo.push_back(w["ci"][0]);
    hi.push_back(w["ci"][1]);
  }
  // frequency at the largest N may not exceed the upper CI of the smallest
  auto [l0, h0] = wilson_interval(counts.front(), scans.size());
  (void)l0;
  double last = static_cast<double>(counts.back()) / static_cast<double>(scans.size());
  return {{"pass", last <= h0},
          {"samples", scans.size()},
          {"per_N", per},
          {"trend",
           {{"x_label", "log2 N"},
            {"y_label", "fraction with two humps"},
            {"series", {{{"name", "two humps"}, {"x", ctx.ladder_x()}, {"y", y}, {"lo", lo}, {"hi", hi}}}}}}};
}

Json check_diophantine(CheckContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto map = cfg.make_map();
  const double x = wrap01(cfg.x);
  Json out{{"pass", true}, {"informational", true}};
  if (auto q = detect_period(map, x, 64, 1e-12)) {
    out["verdict"] = "periodic";
    out["period"] = *q;
    return out;
  }
  const double N = static_cast<double>(cfg.horizon(cfg.k_max));
  const double rho_min = std::pow(cfg.a / ctx.scanner.norm(cfg.horizon(cfg.k_max)), cfg.s);
  auto rep = diophantine_check(map, x, rho_min, 1.0, 0.25);
  out["verdict"] = rep.is_diophantine ? "diophantine on grid" : "recurrent";
  out["exact"] = rep.exact;
  out["rho_min"] = rho_min;
  out["pairs_tested"] = rep.pairs_tested;
  out["violations"] = rep.witnesses.size();
  auto series = classify_Sr(cfg.a, cfg.s, ctx.scanner.density().at(x), cfg.C, cfg.alpha, std::max(cfg.r, 1), 40);
  out["S_r"] = {{"verdict", series.verdict == SeriesVerdict::kFinite ? "finite" : "infinite"},
                {"exponent", series.exponent}};
  out["N_max"] = N;
  return out;
}

// ---------------------------------------------------------------- coverage

struct Target {
  std::vector<double> times, sizes;

  CadlagStep path() const { return CadlagStep::from_jumps(times, sizes); }
};

Target validated_target(const ExperimentConfig& cfg) {
  Target t{cfg.target_times, cfg.target_sizes};
  if (t.times.size() > static_cast<std::size_t>(cfg.r))
    throw PreconditionViolation("target has more than r = " + std::to_string(cfg.r) + " jumps");
  const double gap = 2.0 * cfg.eps_hat;
  double prev = 0.0;  // I_0 = 0 must be separated too
  for (std::size_t j = 0; j < t.times.size(); ++j) {
    if (!(t.times[j] - prev > gap) || t.times[j] > 1.0)
      throw PreconditionViolation(fmt("target jump time %.6g is not more than 2 eps_hat = %.6g after %.6g", t.times[j],
                                      gap, prev));
    if (!(t.sizes[j] > cfg.tol))
      throw PreconditionViolation(fmt("target jump size %.6g must exceed tol = %.6g", t.sizes[j], cfg.tol));
    prev = t.times[j];
  }
  return t;
}

// P(d_J1(project_Hr(W'_N), W) < tol) with Poisson counts of large terms;
// G(z) = N mu(phi > z norm) is the mean number of terms above z.
//  - W = 0: no term above tol.
//  - one jump (c, t0): the largest term z at time t satisfies
//    |t - t0| + |z - c| < tol, so the rate integrates, over t, the
//    probability that the maximum lands in (c - v, c + v], v = tol - |t - t0|:
//    exp(-G(c + v)) - exp(-G(c - v)).
//  - more jumps: first order only. lambda = int_0^tol d/du[prod_j N len_j(u)]
//    prod_j sigma_j(tol - u) du, probability 1 - exp(-lambda).
double coverage_prediction(const Target& target, double tol, double N, double nm, const SingularObservable& phi,
                           const DensityEstimate& mu) {
  auto G = [&](double z) { return N * level_set_measure(phi, z * nm, mu); };
  if (target.times.empty()) return std::exp(-G(tol));
  constexpr int kSteps = 400;
  if (target.times.size() == 1) {
    const double t0 = target.times[0], c = target.sizes[0];
    const double lo = std::max(t0 - tol, 0.0), hi = std::min(t0 + tol, 1.0);
    double p = 0.0;
    for (int i = 0; i < kSteps; ++i) {
      double t = lo + (hi - lo) * (i + 0.5) / kSteps;
      double v = tol - std::fabs(t - t0);
      p += std::exp(-G(c + v)) - std::exp(-G(c - v));
    }
    return p * (hi - lo) / kSteps;
  }
  auto count = [&](double u) {
    double m = 1.0;
    for (double t : target.times) m *= N * (std::min(t + u, 1.0) - std::max(t - u, 0.0));
    return m;
  };
  auto sigma = [&](double v) {
    double m = 1.0;
    for (double c : target.sizes) m *= (G(c - v) - G(c + v)) / N;
    return m;
  };
  double lambda = 0.0;
  for (int i = 0; i < kSteps; ++i) {
    double u0 = tol * i / kSteps, u1 = tol * (i + 1) / kSteps;
    lambda += (count(u1) - count(u0)) * sigma(tol - 0.5 * (u0 + u1));
  }
  return 1.0 - std::exp(-lambda);
}

}  // namespace

// ---------------------------------------------------------------- commands

int simulate_paths(const ExperimentConfig& cfg) {
  Scanner scanner(cfg);
  const std::size_t n_paths = std::min(cfg.path_seeds, cfg.seeds);
  auto scans = scan_all(scanner, cfg.out, n_paths);
  const fs::path out(cfg.out);
  Json index = Json::array();
  for (std::size_t i = 0; i < n_paths; ++i)
    for (const auto& r : scans[i].rungs) {
      auto W = scanner.grid_W(r), Wp = scanner.grid_W_prime(r);
      auto H = project_Hr(scanner.trimmed_path(r), static_cast<std::size_t>(cfg.r));
      const int G = scanner.grid_points(r.N);
      std::string csv = "t,W,W_prime,H_r\n";
      for (int g = 0; g <= G; ++g) {
        double t = static_cast<double>(g) / G;
        csv += fmt("%.17g,%.17g,%.17g,%.17g\n", t, W[static_cast<std::size_t>(g)], Wp[static_cast<std::size_t>(g)], H(t));
      }
      const std::string file = csv_path(i, r.N);
      write_file(out / file, csv);
      const std::string jumps = file.substr(0, file.size() - 4) + "_jumps.csv";
      write_file(out / jumps, H.jumps_csv());
      index.push_back({{"seed", i}, {"N", r.N}, {"csv", file}, {"jumps", jumps}, {"trimmed_jumps", r.big.size()}});
    }
  write_file(out / "paths" / "index.json", index.dump(2) + "\n");
  auto report = Report::open(cfg, out);
  report.set_section("paths", {{"pass", true}, {"seeds", n_paths}, {"index", "paths/index.json"}, {"files", index.size()}});
  report.save();
  std::cout << "wrote " << index.size() << " paths under " << (out / "paths").string() << "\n";
  return 0;
}

int verify_jump_budget(const ExperimentConfig& cfg) {
  Scanner scanner(cfg);
  auto scans = scan_all(scanner, cfg.out, 0);
  const std::size_t n = scans.size();
  auto phi = cfg.make_observable();
  const auto lebesgue = DensityEstimate::lebesgue();
  Json per = Json::array(), y = Json::array(), lo = Json::array(), hi = Json::array();
  std::string csv = "N,count,seeds\n";
  bool monotone = true, binomial_ok = true;
  double prev_hi = 1.0, last = 0.0;
  std::vector<double> last_hist;
  for (int r = 0; r < cfg.rungs(); ++r) {
    const std::size_t N = cfg.horizon(cfg.k_min + r);
    std::vector<std::size_t> hist(64, 0);
    std::size_t over = 0;
    for (const auto& s : scans) {
      std::size_t c = s.rungs[static_cast<std::size_t>(r)].macro_count;
      ++hist[std::min<std::size_t>(c, 63)];
      over += c > static_cast<std::size_t>(cfg.r) ? 1 : 0;
    }
    while (hist.size() > 1 && hist.back() == 0) hist.pop_back();
    for (std::size_t c = 0; c < hist.size(); ++c) csv += fmt("%zu,%zu,%zu\n", N, c, hist[c]);
    auto w = wilson_json(over, n);
    w["N"] = N;
    w["histogram"] = hist;
    double wl = w["ci"][0], wh = w["ci"][1];
    monotone = monotone && wl <= prev_hi;
    prev_hi = wh;
    last = w["fraction"];
    if (cfg.iid()) {
      const double thr = cfg.eps * normalizer(static_cast<double>(N), cfg.s, cfg.alpha);
      const double sigma = level_set_measure(phi, thr, lebesgue);
      hist.push_back(0);  // open top cell
      auto g = binomial_gof(hist, static_cast<double>(N), sigma, n);
      // Bonferroni across the ladder
      bool ok = g.p > 0.01 / cfg.rungs();
      binomial_ok = binomial_ok && ok;
      w["binomial"] = {{"sigma", sigma}, {"chi2", g.chi2}, {"dof", g.dof}, {"p", g.p}, {"ok", ok}};
    }
    per.push_back(w);
    y.push_back(w["fraction"]);
    lo.push_back(wl);
    hi.push_back(wh);
    if (r + 1 == cfg.rungs()) last_hist.assign(hist.begin(), hist.end());
  }
  write_file(fs::path(cfg.out) / "jump_budget.csv", csv);
  bool pass = monotone && last <= cfg.jump_budget_max_fraction && binomial_ok;
  Json section{{"pass", pass},
               {"samples", n},
               {"r", cfg.r},
               {"monotone_up_to_ci", monotone},
               {"fraction_at_N_max", last},
               {"max_fraction", cfg.jump_budget_max_fraction},
               {"per_N", per},
               {"trend",
                {{"x_label", "log2 N"},
                 {"y_label", "fraction with count > r"},
                 {"series", {{{"name", "P(count > r)"}, {"x", Json::array()}, {"y", y}, {"lo", lo}, {"hi", hi}}}}}},
               {"histogram", {{"x_label", "macroscopic terms at N_max"}, {"counts", last_hist}}}};
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) section["trend"]["series"][0]["x"].push_back(k);
  if (cfg.iid()) section["binomial_ok"] = binomial_ok;
  auto report = Report::open(cfg, cfg.out);
  report.set_section("jump_budget", section);
  report.save();
  std::cout << fmt("jump budget: P(count > %d) at 2^%d = %.4f (max %.4f), monotone up to CI: %s%s -> %s\n", cfg.r,
                   cfg.k_max, last, cfg.jump_budget_max_fraction, monotone ? "yes" : "no",
                   cfg.iid() ? (binomial_ok ? ", Binomial ok" : ", Binomial rejected") : "", pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

int verify_coverage(const ExperimentConfig& cfg) {
  const Target target = validated_target(cfg);
  const CadlagStep W = target.path();
  Scanner scanner(cfg);
  auto scans = scan_all(scanner, cfg.out, 0);
  const std::size_t n = scans.size();
  auto phi = cfg.make_observable();
  const auto& mu = scanner.density();
  const std::size_t R = static_cast<std::size_t>(cfg.rungs());

  std::vector<std::vector<double>> dist(n, std::vector<double>(R));
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    for (std::size_t r = 0; r < R; ++r) {
      auto H = project_Hr(scanner.trimmed_path(scans[static_cast<std::size_t>(i)].rungs[r]),
                          static_cast<std::size_t>(cfg.r));
      dist[static_cast<std::size_t>(i)][r] = j1_distance(H, W).distance;
    }

  std::string csv = "seed,N,distance,hit\n";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < R; ++r)
      csv += fmt("%zu,%zu,%.17g,%d\n", i, cfg.horizon(cfg.k_min + static_cast<int>(r)), dist[i][r],
                 dist[i][r] < cfg.tol ? 1 : 0);
  write_file(fs::path(cfg.out) / "coverage_hits.csv", csv);

  Json per = Json::array(), xs = Json::array(), fy = Json::array(), flo = Json::array(), fhi = Json::array(),
       py = Json::array();
  bool pass = true;
  std::size_t qualified = 0;
  for (std::size_t r = 0; r < R; ++r) {
    const std::size_t N = cfg.horizon(cfg.k_min + static_cast<int>(r));
    const double nm = scanner.norm(N), Nd = static_cast<double>(N);
    const double pred = coverage_prediction(target, cfg.tol, Nd, nm, phi, mu);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) k += dist[i][r] < cfg.tol ? 1 : 0;
    auto w = wilson_json(k, n);
    double freq = w["fraction"];
    double expected = pred * static_cast<double>(n);
    bool judged = expected >= 10.0;
    bool ok = !judged || (freq >= pred / cfg.coverage_factor && freq <= pred * cfg.coverage_factor);
    qualified += judged ? 1 : 0;
    pass = pass && ok;
    w["N"] = N;
    w["predicted"] = pred;
    w["ratio"] = pred > 0.0 ? freq / pred : 0.0;
    w["judged"] = judged;
    w["ok"] = ok;
    per.push_back(w);
    xs.push_back(cfg.k_min + static_cast<int>(r));
    fy.push_back(freq);
    flo.push_back(w["ci"][0]);
    fhi.push_back(w["ci"][1]);
    py.push_back(pred);
  }
  if (qualified == 0) pass = false;  // nothing to compare against
  Json section{{"pass", pass},
               {"samples", n},
               {"tol", cfg.tol},
               {"target", {{"times", target.times}, {"sizes", target.sizes}}},
               {"factor", cfg.coverage_factor},
               {"judged_N", qualified},
               {"reason", qualified == 0 ? "fewer than 10 expected hits at every N" : ""},
               {"per_N", per},
               {"trend",
                {{"x_label", "log2 N"},
                 {"y_label", "hit frequency"},
                 {"series", {{{"name", "observed"}, {"x", xs}, {"y", fy}, {"lo", flo}, {"hi", fhi}},
                             {{"name", "predicted"}, {"x", xs}, {"y", py}}}}}}};
  auto report = Report::open(cfg, cfg.out);
  report.set_section("coverage", section);
  report.save();
  std::cout << fmt("coverage: %zu of %zu N values judged, %s\n", qualified, R, pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

int run_check(const ExperimentConfig& cfg, const std::string& name) {
  std::vector<std::string> names = name.empty() ? cfg.checks : std::vector<std::string>{name};
  CheckContext ctx(cfg);
  auto report = Report::open(cfg, cfg.out);
  bool pass = true;
  for (const auto& c : names) {
    Json section;
    try {
      if (c == "tail") section = check_tail(ctx);
      else if (c == "mixing") section = check_mixing(ctx);
      else if (c == "lemma5") section = check_lemma5(ctx);
      else if (c == "mbc") section = check_mbc(ctx);
      else if (c == "moments") section = check_moments(ctx);
      else if (c == "twohumps") section = check_twohumps(ctx);
      else if (c == "diophantine") section = check_diophantine(ctx);
      else throw ConfigError("unknown check '" + c + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      section = {{"pass", false}, {"error", "check " + c + ": " + e.what()}};
    }
    bool ok = section.value("pass", false);
    pass = pass && ok;
    std::cout << c << ": " << (ok ? "PASS" : "FAIL");
    if (section.contains("error")) std::cout << " (" << section["error"].get<std::string>() << ")";
    std::cout << "\n";
    report.set_section(c, std::move(section));
  }
  report.save();
  return pass ? 0 : 1;
}

int print_report(const std::string& out) {
  auto report = Report::read(out);
  if (report.empty()) {
    std::cout << "empty report\n";
    return 0;
  }
  const auto& p = report.provenance();
  std::cout << "config " << p.value("config_hash", "?") << ", code " << p.value("code_version", "?") << "\n";
  for (const auto& [name, s] : report.sections().items()) {
    std::cout << (s.value("pass", false) ? "PASS " : "FAIL ") << name;
    if (s.contains("error")) std::cout << ": " << s["error"].get<std::string>();
    if (s.contains("samples")) std::cout << " (" << s["samples"].dump() << " samples)";
    std::cout << "\n";
  }
  return report.all_pass() ? 0 : 1;
}

int emit_plots(const std::string& out) {
  auto report = Report::read(out);
  if (report.empty()) return 0;
  const fs::path dir = fs::path(out) / "plots";
  for (const auto& [name, s] : report.sections().items()) {
    if (s.contains("trend")) {
      std::vector<svg::Series> series;
      for (const auto& js : s["trend"]["series"]) {
        svg::Series ser;
        ser.name = js.value("name", "");
        ser.x = js["x"].get<std::vector<double>>();
        ser.y = js["y"].get<std::vector<double>>();
        if (js.contains("lo")) {
          ser.lo = js["lo"].get<std::vector<double>>();
          ser.hi = js["hi"].get<std::vector<double>>();
        }
        series.push_back(std::move(ser));
      }
      write_file(dir / (name + "_trend.svg"),
                 svg::trend(name, s["trend"].value("x_label", ""), s["trend"].value("y_label", ""), series));
    }
    if (s.contains("histogram"))
      write_file(dir / (name + "_histogram.svg"),
                 svg::histogram(name, s["histogram"].value("x_label", ""), s["histogram"]["counts"].get<std::vector<double>>()));
    if (name == "paths") {
      std::ifstream f(fs::path(out) / s.value("index", "paths/index.json"));
      if (!f) throw Error("cannot read path index under " + out);
      Json index = Json::parse(f);
      if (index.empty()) continue;
      // the longest path of the first seed
      Json pick = index.front();
      for (const auto& e : index)
        if (e["seed"] == pick["seed"] && e["N"] > pick["N"]) pick = e;
      std::ifstream csv(fs::path(out) / pick["csv"].get<std::string>());
      std::ifstream jumps(fs::path(out) / pick["jumps"].get<std::string>());
      if (!csv || !jumps) throw Error("cannot read path files listed in the index");
      std::vector<double> t, w, jt;
      std::string line;
      std::getline(csv, line);
      while (std::getline(csv, line)) {
        std::stringstream ls(line);
        std::string a, b;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        t.push_back(std::stod(a));
        w.push_back(std::stod(b));
      }
      std::getline(jumps, line);
      while (std::getline(jumps, line))
        if (!line.empty()) jt.push_back(std::stod(line.substr(0, line.find(','))));
      write_file(dir / "path.svg",
                 svg::step_path(fmt("W_N, seed %d, N = %zu (projected jumps marked)", pick["seed"].get<int>(),
                                    pick["N"].get<std::size_t>()),
                                t, w, jt));
    }
  }
  return 0;
}

}  // namespace heavysum::cli
