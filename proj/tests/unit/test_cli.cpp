#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "config.hpp"
#include "heavysum/circle_map.hpp"
#include "heavysum/errors.hpp"
#include "heavysum/observable.hpp"
#include "heavysum/path.hpp"
#include "heavysum/rng.hpp"
#include "scan.hpp"

using namespace heavysum;
using namespace heavysum::cli;

namespace {

ExperimentConfig small_config() {
  auto cfg = ExperimentConfig::parse(
      "s = 0.5\n"
      "r = 1\n"
      "alpha = 1.5   # inside (1/(2s), 1/s]\n"
      "k_min = 8\n"
      "k_max = 10\n"
      "seeds = 4\n"
      "master_seed = 17\n");
  cfg.finalize();
  return cfg;
}

}  // namespace

TEST_CASE("parse reads keys, comments and lists") {
  auto cfg = ExperimentConfig::parse("# header\nmap = perturbed:0.05\ns = 1.5\nchecks = tail , moments\n\n"
                                     "target_times = 0.3, 0.7\ntarget_sizes = 1,2\nr = 2\n");
  CHECK(cfg.map == "perturbed:0.05");
  CHECK(cfg.s == 1.5);
  CHECK(cfg.checks == std::vector<std::string>{"tail", "moments"});
  CHECK(cfg.target_times == std::vector<double>{0.3, 0.7});
  CHECK(cfg.target_sizes == std::vector<double>{1.0, 2.0});
}

TEST_CASE("malformed input raises ConfigError") {
  CHECK_THROWS_AS(ExperimentConfig::parse("nokey\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("s = abc\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("seeds = -3\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("interval = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/heavysum.cfg"), ConfigError);
}

TEST_CASE("finalize enforces invariants") {
  auto bad = [](const std::string& text) {
    auto cfg = ExperimentConfig::parse(text);
    CHECK_THROWS_AS(cfg.finalize(), ConfigError);
  };
  bad("k_min = 3\n");
  bad("k_min = 12\nk_max = 10\n");
  bad("s = 0.5\nalpha = 2.5\n");    // alpha > 1/s
  bad("s = 2\n");
  bad("s = 1.5\nalpha = 0.6\nD = 1\n");  // needs D (2 - s) + 2 alpha > 3
  bad("map = circle:3\n");
  bad("checks = tail, nosuch\n");
  bad("window_eps = 2\n");
  bad("path_grid = 1000\n");
  bad("source = replay\n");
}

TEST_CASE("auto alpha and D") {
  auto cfg = ExperimentConfig::parse("s = 1.5\nr = 1\n");
  cfg.finalize();
  auto w = alpha_window(1, 1.5);
  CHECK(cfg.alpha == doctest::Approx(w.midpoint()));
  CHECK(w.contains(cfg.alpha));
  CHECK(validate_D(cfg.D, cfg.s, cfg.alpha));
  // the smallest multiple of delta that passes
  CHECK_FALSE(validate_D(cfg.D - cfg.delta, cfg.s, cfg.alpha));
  CHECK(cfg.alpha_bar == doctest::Approx(cfg.alpha / 2));
}

TEST_CASE("canonical form and hash") {
  auto a = ExperimentConfig::parse("s = 0.5\nalpha = 1.5\nmap = doubling\n");
  auto b = ExperimentConfig::parse("map = linear:2\n\n  alpha=1.50\ns=5e-1\n");
  a.finalize();
  b.finalize();
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);

  auto lines = a.canonical();
  std::vector<std::string> keys;
  for (std::size_t pos = 0; pos < lines.size();) {
    auto nl = lines.find('\n', pos);
    keys.push_back(lines.substr(pos, lines.find(" = ", pos) - pos));
    pos = nl + 1;
  }
  CHECK(std::is_sorted(keys.begin(), keys.end()));

  b.out = "elsewhere";
  CHECK(a.hash() == b.hash());
  b.master_seed = 2;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("scan agrees with a direct pass over the orbit") {
  auto cfg = small_config();
  Scanner scanner(cfg);
  auto sc = scanner.scan(1, true);
  REQUIRE(sc.rungs.size() == 3);

  auto map = cfg.make_map();
  auto phi = cfg.make_observable();
  auto stream = OrbitStream::exact(map, derive_seed(cfg.master_seed, 1));
  std::vector<double> X;
  for (std::size_t n = 0; n < cfg.horizon(cfg.k_max); ++n) X.push_back(phi(stream.next()));

  for (const auto& r : sc.rungs) {
    const double N = static_cast<double>(r.N);
    const double upper = normalizer(N, cfg.s, cfg.delta), macro = cfg.eps * normalizer(N, cfg.s, cfg.alpha);
    std::size_t count = 0;
    double band = 0.0, S2 = 0.0, sup = 0.0;
    std::vector<std::pair<std::size_t, double>> big;
    for (std::size_t k = 1; k <= r.N; ++k) {
      double v = X[k - 1];
      count += v > macro ? 1 : 0;
      if (v > std::pow(N, 1.0 / cfg.s) && v <= upper) band += v;
      if (v >= upper) big.emplace_back(k, v);
      S2 += v < upper ? v : 0.0;  // s < 1: no centering
      sup = std::max(sup, std::fabs(S2));
    }
    CHECK(r.macro_count == count);
    CHECK(r.band0 == doctest::Approx(band).epsilon(1e-12));
    CHECK(r.sup_remainder == doctest::Approx(sup / normalizer(N, cfg.s, cfg.alpha)).epsilon(1e-12));
    CHECK(r.big == big);
    REQUIRE(r.grid_S.size() == static_cast<std::size_t>(scanner.grid_points(r.N)) + 1);
    double total = 0.0;
    for (std::size_t k = 0; k < r.N; ++k) total += X[k];
    CHECK(r.grid_S.back() == doctest::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("checkpoints reproduce a fresh scan") {
  auto cfg = small_config();
  auto dir = std::filesystem::temp_directory_path() / "heavysum_test_cli";
  std::filesystem::remove_all(dir);
  Scanner scanner(cfg);
  auto fresh = scan_all(scanner, dir, 0);
  auto again = scan_all(scanner, dir, 0);  // served from checkpoints
  REQUIRE(fresh.size() == again.size());
  for (std::size_t i = 0; i < fresh.size(); ++i)
    for (std::size_t r = 0; r < fresh[i].rungs.size(); ++r) {
      CHECK(fresh[i].rungs[r].macro_count == again[i].rungs[r].macro_count);
      CHECK(fresh[i].rungs[r].sup_remainder == again[i].rungs[r].sup_remainder);
      CHECK(fresh[i].rungs[r].band0 == again[i].rungs[r].band0);
      CHECK(fresh[i].rungs[r].big == again[i].rungs[r].big);
    }
  // a different configuration ignores them
  auto other = cfg;
  other.master_seed = 18;
  auto moved = scan_all(Scanner(other), dir, 0);
  CHECK(moved[0].rungs.back().big != fresh[0].rungs.back().big);
  std::filesystem::remove_all(dir);
}
