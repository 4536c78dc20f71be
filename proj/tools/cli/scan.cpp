#include "scan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "heavysum/circle.hpp"
#include "heavysum/errors.hpp"
#include "heavysum/events.hpp"
#include "heavysum/rng.hpp"
#include "json.hpp"

namespace heavysum::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

Scanner::Scanner(const ExperimentConfig& cfg)
    : cfg_(cfg), map_(cfg.make_map()), phi_(cfg.make_observable()), mu_(invariant_density(map_)) {
  const double s = cfg.s;
  floor_ = kInf;
  b_full_ = centering_constant(phi_, TruncationSpec::none(), mu_);
  for (int r = 0; r < cfg.rungs(); ++r) {
    double N = static_cast<double>(cfg.horizon(cfg.k_min + r));
    upper_.push_back(normalizer(N, s, cfg.delta));
    macro_.push_back(cfg.eps * normalizer(N, s, cfg.alpha));
    b_first_.push_back(centering_constant(phi_, TruncationSpec::upper_tail(upper_.back()), mu_));
    b_second_.push_back(centering_constant(phi_, TruncationSpec::lower(upper_.back()), mu_));
    floor_ = std::min({floor_, macro_.back(), normalizer(N, s, 0.0), two_humps_level(N, s, cfg.alpha, cfg.eps_bar)});
  }
}

double Scanner::norm(std::size_t N) const { return normalizer(static_cast<double>(N), cfg_.s, cfg_.alpha); }

int Scanner::grid_points(std::size_t N) const {
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg_.path_grid), N));
}

SeedScan Scanner::scan(std::size_t seed_index, bool with_grid) const {
  const std::uint64_t seed = derive_seed(cfg_.master_seed, seed_index);
  const int R = cfg_.rungs();
  const std::size_t N_max = cfg_.horizon(cfg_.k_max);
  const std::size_t N_min = cfg_.horizon(cfg_.k_min);
  const std::size_t g = std::max<std::size_t>(1, N_min / static_cast<std::size_t>(grid_points(N_min)));

  Engine eng(seed);
  std::optional<OrbitStream> stream;
  if (!cfg_.iid()) stream.emplace(map_.is_linear() ? OrbitStream::exact(map_, seed) : OrbitStream::floating(map_, seed));

  std::vector<std::pair<std::size_t, double>> logged;
  std::vector<double> S2(R, 0.0), sup2(R, 0.0), grid;
  if (with_grid) grid.push_back(0.0);
  double S = 0.0;
  int first_active = 0;
  for (std::size_t n = 1; n <= N_max; ++n) {
    double y = cfg_.iid() ? fixed_to_double(eng()) : stream->next();
    double X = phi_(y);
    S += X;
    if (X >= floor_) logged.emplace_back(n, X);
    for (int r = first_active; r < R; ++r) {
      S2[r] += (X < upper_[r] ? X : 0.0) - b_second_[r];
      sup2[r] = std::max(sup2[r], std::fabs(S2[r]));
    }
    if (n == cfg_.horizon(cfg_.k_min + first_active)) ++first_active;
    if (with_grid && n % g == 0) grid.push_back(S);
  }

  SeedScan out;
  out.seed_index = seed_index;
  for (int r = 0; r < R; ++r) {
    RungSummary rs;
    rs.N = cfg_.horizon(cfg_.k_min + r);
    const double N = static_cast<double>(rs.N);
    const double band_lo = normalizer(N, cfg_.s, 0.0);
    for (auto [k, X] : logged) {
      if (k > rs.N) break;
      rs.macro_count += X > macro_[r] ? 1 : 0;
      if (X > band_lo && X <= upper_[r]) rs.band0 += X;
      if (X >= upper_[r]) rs.big.emplace_back(k, X);
    }
    rs.sup_remainder = sup2[r] / norm(rs.N);
    rs.two_humps = !two_humps_scan(logged, rs.N, cfg_.s, cfg_.alpha_bar, cfg_.alpha, cfg_.eps_bar,
                                   SeparationParams{cfg_.sep_K, cfg_.eps_hat}.s_of(N))
                        .empty();
    if (with_grid) {
      const int G = grid_points(rs.N);
      const std::size_t stride = rs.N / static_cast<std::size_t>(G) / g;
      for (int i = 0; i <= G; ++i) rs.grid_S.push_back(grid[static_cast<std::size_t>(i) * stride]);
    }
    out.rungs.push_back(std::move(rs));
  }
  return out;
}

CadlagStep Scanner::trimmed_path(const RungSummary& r) const {
  std::vector<double> t, z;
  const double nm = norm(r.N);
  for (auto [k, X] : r.big) {
    t.push_back(static_cast<double>(k) / static_cast<double>(r.N));
    z.push_back(X / nm);
  }
  return CadlagStep::from_jumps(t, z);
}

std::vector<double> Scanner::grid_W(const RungSummary& r) const {
  std::vector<double> w;
  const int G = grid_points(r.N);
  const double nm = norm(r.N);
  for (int i = 0; i <= G; ++i) {
    double n = static_cast<double>(i) * static_cast<double>(r.N) / G;
    w.push_back((r.grid_S[static_cast<std::size_t>(i)] - n * b_full_) / nm);
  }
  return w;
}

std::vector<double> Scanner::grid_W_prime(const RungSummary& r) const {
  const int G = grid_points(r.N);
  const double nm = norm(r.N);
  const int rung = static_cast<int>(std::log2(static_cast<double>(r.N))) - cfg_.k_min;
  const double b1 = b_first_[static_cast<std::size_t>(rung)];
  std::vector<double> w;
  std::size_t j = 0;
  double big_sum = 0.0;
  for (int i = 0; i <= G; ++i) {
    double n = static_cast<double>(i) * static_cast<double>(r.N) / G;
    while (j < r.big.size() && static_cast<double>(r.big[j].first) <= n) big_sum += r.big[j++].second;
    w.push_back((big_sum - n * b1) / nm);
  }
  return w;
}

namespace {

fs::path checkpoint_path(const fs::path& out, std::size_t seed, std::size_t N) {
  return out / "checkpoints" / ("seed" + std::to_string(seed) + "_N" + std::to_string(N) + ".json");
}

void write_checkpoint(const fs::path& file, const std::string& hash, std::size_t seed, const RungSummary& r) {
  ordered_json j;
  j["config_hash"] = hash;
  j["seed_index"] = seed;
  j["N"] = r.N;
  j["macro_count"] = r.macro_count;
  j["sup_remainder"] = r.sup_remainder;
  j["band0"] = r.band0;
  j["two_humps"] = r.two_humps;
  j["big"] = r.big;
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw Error("cannot write checkpoint " + tmp.string());
    f << j.dump() << "\n";
  }
  fs::rename(tmp, file);
}

std::optional<RungSummary> read_checkpoint(const fs::path& file, const std::string& hash) {
  std::ifstream f(file);
  if (!f) return std::nullopt;
  try {
    auto j = ordered_json::parse(f);
    if (j.at("config_hash") != hash) return std::nullopt;
    RungSummary r;
    r.N = j.at("N");
    r.macro_count = j.at("macro_count");
    r.sup_remainder = j.at("sup_remainder");
    r.band0 = j.at("band0");
    r.two_humps = j.at("two_humps");
    r.big = j.at("big").get<std::vector<std::pair<std::size_t, double>>>();
    return r;
  } catch (const std::exception&) {
    return std::nullopt;  // damaged checkpoint: recompute
  }
}

}  // namespace

std::vector<SeedScan> scan_all(const Scanner& scanner, const fs::path& out, std::size_t grid_seeds) {
  const auto& cfg = scanner.config();
  const std::string hash = cfg.hash();
  fs::create_directories(out / "checkpoints");
  std::vector<SeedScan> scans(cfg.seeds);
  std::vector<std::string> errors(cfg.seeds);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(cfg.seeds); ++i) {
    const auto seed = static_cast<std::size_t>(i);
    try {
      bool with_grid = seed < grid_seeds;
      SeedScan sc;
      sc.seed_index = seed;
      bool complete = !with_grid;
      for (int r = 0; complete && r < cfg.rungs(); ++r) {
        auto c = read_checkpoint(checkpoint_path(out, seed, cfg.horizon(cfg.k_min + r)), hash);
        if (c)
          sc.rungs.push_back(std::move(*c));
        else
          complete = false;
      }
      if (!complete) {
        sc = scanner.scan(seed, with_grid);
        for (const auto& r : sc.rungs) write_checkpoint(checkpoint_path(out, seed, r.N), hash, seed, r);
      }
      scans[seed] = std::move(sc);
    } catch (const std::exception& e) {
      errors[seed] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw Error("seed " + std::to_string(i) + ": " + errors[i]);
  return scans;
}

}  // namespace heavysum::cli
