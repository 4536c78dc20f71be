#include "heavysum/j1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "heavysum/errors.hpp"

namespace heavysum {

double value_distance(double z1, double z2, ValueMetric metric) noexcept {
  if (metric == ValueMetric::kCompactified) return std::fabs(std::atan(z1) - std::atan(z2));
  if (z1 == z2) return 0.0;  // also covers equal infinities
  return std::fabs(z1 - z2);
}

double Reparameterization::operator()(double u) const {
  if (knots.empty()) return u;
  if (u <= knots.front().first) return knots.front().second;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    auto [u0, v0] = knots[i - 1];
    auto [u1, v1] = knots[i];
    if (u <= u1) return u1 > u0 ? v0 + (v1 - v0) * (u - u0) / (u1 - u0) : v1;
  }
  return knots.back().second;
}

double Reparameterization::displacement() const {
  double m = 0.0;
  for (auto [u, v] : knots) m = std::max(m, std::fabs(v - u));
  return m;
}

Reparameterization Reparameterization::inverse() const {
  Reparameterization r;
  for (auto [u, v] : knots) r.knots.emplace_back(v, u);
  return r;
}

std::string Reparameterization::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "u,lambda\n";
  for (auto [u, v] : knots) os << u << ',' << v << '\n';
  return os.str();
}

namespace {

struct Levels {
  std::vector<double> t;  // jump times
  std::vector<double> L;  // L[0] initial, L[i] after jump i
};

Levels levels_of(const CadlagStep& h) {
  Levels r;
  r.t = h.jump_times();
  r.L.push_back(h.initial_value());
  r.L.insert(r.L.end(), h.levels().begin(), h.levels().end());
  return r;
}

}  // namespace

double uniform_distance(const CadlagStep& h1, const CadlagStep& h2, ValueMetric metric) {
  std::vector<double> ts{0.0};
  ts.insert(ts.end(), h1.jump_times().begin(), h1.jump_times().end());
  ts.insert(ts.end(), h2.jump_times().begin(), h2.jump_times().end());
  double m = 0.0;
  for (double t : ts) m = std::max(m, value_distance(h1(t), h2(t), metric));
  return m;
}

namespace {

// Exact DP over interleavings. Move kinds out of state (i, j):
//   0: place the (i+1)-th mapped jump of h1 in the slot after b_j
//   1: pass the (j+1)-th jump of h2
//   2: make them coincide
struct InterleaveDP {
  const Levels& A;
  const Levels& B;
  ValueMetric metric;
  std::size_t n1, n2;
  std::vector<double> val;  // (n1+1) x (n2+1)

  InterleaveDP(const Levels& a, const Levels& b, ValueMetric m)
      : A(a), B(b), metric(m), n1(a.t.size()), n2(b.t.size()), val((n1 + 1) * (n2 + 1)) {
    for (std::size_t i = 0; i <= n1; ++i)
      for (std::size_t j = 0; j <= n2; ++j) val[idx(i, j)] = value_distance(A.L[i], B.L[j], metric);
  }

  std::size_t idx(std::size_t i, std::size_t j) const { return i * (n2 + 1) + j; }
  double b_lo(std::size_t j) const { return j == 0 ? 0.0 : B.t[j - 1]; }
  double b_hi(std::size_t j) const { return j < n2 ? B.t[j] : 1.0; }
  bool a_pinned(std::size_t i) const { return A.t[i] == 1.0; }
  bool b_pinned(std::size_t j) const { return B.t[j] == 1.0; }

  // cost of a move, or +inf if the move is not admissible
  double cost(std::size_t i, std::size_t j, int kind) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (kind == 0) {
      if (i >= n1) return inf;
      if (a_pinned(i)) return (j == n2 && (n2 == 0 || !b_pinned(n2 - 1))) ? 0.0 : inf;
      if (j == n2 && n2 > 0 && b_pinned(n2 - 1)) return inf;
      double a = A.t[i];
      return std::max({b_lo(j) - a, a - b_hi(j), 0.0});
    }
    if (kind == 1) {
      if (j >= n2) return inf;
      if (b_pinned(j)) return (i == n1 && (n1 == 0 || !a_pinned(n1 - 1))) ? 0.0 : inf;
      if (i == n1 && n1 > 0 && a_pinned(n1 - 1)) return inf;
      return 0.0;
    }
    if (i >= n1 || j >= n2) return inf;
    if (a_pinned(i) != b_pinned(j)) return inf;
    return std::fabs(A.t[i] - B.t[j]);
  }

  // minimal bottleneck time cost using only states with value <= V
  double bottleneck(double V, std::vector<double>& T, std::vector<int>* choice) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    T.assign(val.size(), inf);
    if (choice) choice->assign(val.size(), -1);
    if (val[0] > V) return inf;
    T[0] = 0.0;
    for (std::size_t i = 0; i <= n1; ++i) {
      for (std::size_t j = 0; j <= n2; ++j) {
        std::size_t s = idx(i, j);
        if (val[s] > V || (i == 0 && j == 0)) continue;
        double best = inf;
        int arg = -1;
        auto relax = [&](std::size_t pi, std::size_t pj, int kind) {
          std::size_t p = idx(pi, pj);
          if (T[p] == inf) return;
          double c = std::max(T[p], cost(pi, pj, kind));
          if (c < best) {
            best = c;
            arg = kind;
          }
        };
        if (i > 0) relax(i - 1, j, 0);
        if (j > 0) relax(i, j - 1, 1);
        if (i > 0 && j > 0) relax(i - 1, j - 1, 2);
        T[s] = best;
        if (choice) (*choice)[s] = arg;
      }
    }
    return T[idx(n1, n2)];
  }
};

J1Result j1_ordered(const CadlagStep& h1, const CadlagStep& h2, ValueMetric metric) {
  Levels A = levels_of(h1), B = levels_of(h2);
  InterleaveDP dp(A, B, metric);
  std::vector<double> cands = dp.val;
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  double best = std::numeric_limits<double>::infinity();
  double bestV = 0.0, bestT = 0.0;
  std::vector<double> T;
  for (double V : cands) {
    if (V >= best) break;
    double t = dp.bottleneck(V, T, nullptr);
    if (V + t < best) {
      best = V + t;
      bestV = V;
      bestT = t;
    }
  }
  J1Result r;
  r.metric = metric;
  r.distance = best;
  r.time_term = bestT;
  // witness: walk back the optimal lattice path
  std::vector<int> choice;
  dp.bottleneck(bestV, T, &choice);
  std::vector<std::pair<double, double>> knots;
  std::size_t i = dp.n1, j = dp.n2;
  double vterm = 0.0;
  while (i > 0 || j > 0) {
    vterm = std::max(vterm, dp.val[dp.idx(i, j)]);
    int k = choice[dp.idx(i, j)];
    if (k == 0) {
      --i;
      knots.emplace_back(std::clamp(A.t[i], dp.b_lo(j), dp.b_hi(j)), A.t[i]);
    } else if (k == 1) {
      --j;
    } else {
      --i;
      --j;
      knots.emplace_back(B.t[j], A.t[i]);
    }
  }
  vterm = std::max(vterm, dp.val[0]);
  r.value_term = vterm;
  std::reverse(knots.begin(), knots.end());
  r.witness.knots.emplace_back(0.0, 0.0);
  for (auto& k : knots)
    if (k.first < 1.0 || k.second < 1.0) r.witness.knots.push_back(k);
  r.witness.knots.emplace_back(1.0, 1.0);
  return r;
}

// Fixed order on inputs so that d(h1, h2) and d(h2, h1) run the same arithmetic.
bool canonical_before(const CadlagStep& a, const CadlagStep& b) {
  if (a.jump_count() != b.jump_count()) return a.jump_count() < b.jump_count();
  if (a.initial_value() != b.initial_value()) return a.initial_value() < b.initial_value();
  if (a.jump_times() != b.jump_times()) return a.jump_times() < b.jump_times();
  return a.levels() <= b.levels();
}

}  // namespace

J1Result j1_distance(const CadlagStep& h1, const CadlagStep& h2, ValueMetric metric, std::size_t max_jumps) {
  if (h1.jump_count() > max_jumps || h2.jump_count() > max_jumps)
    throw BudgetExceeded("J1 distance: input has more jumps than the configured maximum");
  if (canonical_before(h1, h2)) return j1_ordered(h1, h2, metric);
  J1Result r = j1_ordered(h2, h1, metric);
  r.witness = r.witness.inverse();
  return r;
}

bool is_J1_close(const CadlagStep& h1, const CadlagStep& h2, double tol, ValueMetric metric, std::size_t max_jumps) {
  if (!(tol > 0.0)) throw PreconditionViolation("J1 closeness needs tol > 0");
  return j1_distance(h1, h2, metric, max_jumps).distance <= tol;
}

// ---------------------------------------------------------------------------
// Oracle

namespace {

double max_abs_jump(const CadlagStep& h, ValueMetric metric) {
  double m = 0.0;
  for (std::size_t i = 0; i < h.jump_count(); ++i)
    m = std::max(m, value_distance(h.level_before(i), h.levels()[i], metric));
  return m;
}

// sup over sampled t of inf over |u - t| <= T of d(h1(u), h2(t))
double window_gap(const CadlagStep& h1, const CadlagStep& h2, double T, ValueMetric metric) {
  const auto& a = h1.jump_times();
  std::vector<double> ts{0.0, 1.0};
  for (double b : h2.jump_times()) ts.push_back(b);
  for (double x : a) {
    ts.push_back(std::clamp(x - T, 0.0, 1.0));
    ts.push_back(std::clamp(x + T, 0.0, 1.0));
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::size_t base = ts.size();
  for (std::size_t i = 0; i + 1 < base; ++i) ts.push_back(0.5 * (ts[i] + ts[i + 1]));
  const std::size_t n = a.size();
  double g = 0.0;
  for (double t : ts) {
    double lo = t - T, hi = t + T;
    double c = h2(t);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p <= n; ++p) {
      double start = p == 0 ? 0.0 : a[p - 1];
      double end = p < n ? a[p] : 1.0;
      if (start <= hi && end >= lo) {
        double level = p == 0 ? h1.initial_value() : h1.levels()[p - 1];
        best = std::min(best, value_distance(level, c, metric));
      }
    }
    g = std::max(g, best);
  }
  return g;
}

}  // namespace

J1Bracket j1_oracle(const CadlagStep& h1, const CadlagStep& h2, int resolution, ValueMetric metric) {
  if (resolution < 8) throw PreconditionViolation("J1 oracle needs resolution >= 8");
  const double G = resolution;

  // lower bound
  double lower = 0.0;
  lower = std::max(lower, value_distance(h1(0.0), h2(0.0), metric));
  lower = std::max(lower, value_distance(h1(1.0), h2(1.0), metric));
  lower = std::max(lower, value_distance(h1.sup(), h2.sup(), metric));
  lower = std::max(lower, value_distance(h1.inf(), h2.inf(), metric));
  lower = std::max(lower, 0.5 * std::fabs(max_abs_jump(h1, metric) - max_abs_jump(h2, metric)));
  std::vector<double> Ts;
  for (int k = 0; k <= resolution; ++k) Ts.push_back(k / G);
  for (double x : h1.jump_times())
    for (double y : h2.jump_times()) Ts.push_back(std::fabs(x - y));
  std::sort(Ts.begin(), Ts.end());
  Ts.erase(std::unique(Ts.begin(), Ts.end()), Ts.end());
  std::vector<double> gap(Ts.size());
  for (std::size_t k = 0; k < Ts.size(); ++k)
    gap[k] = std::max(window_gap(h1, h2, Ts[k], metric), window_gap(h2, h1, Ts[k], metric));
  double relax = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < Ts.size(); ++k) relax = std::min(relax, Ts[k] + gap[k + 1]);
  lower = std::max(lower, relax);

  // upper bound: lattice search over piecewise-linear time changes
  std::vector<double> P;
  for (int k = 0; k <= resolution; ++k) P.push_back(k / G);
  P.insert(P.end(), h1.jump_times().begin(), h1.jump_times().end());
  P.insert(P.end(), h2.jump_times().begin(), h2.jump_times().end());
  std::sort(P.begin(), P.end());
  P.erase(std::unique(P.begin(), P.end()), P.end());
  const int n = static_cast<int>(P.size());
  constexpr int W = 8;
  // value sup along the segment (u0,v0) -> (u1,v1); lambda maps u to v
  auto seg_value = [&](int k0, int l0, int k1, int l1) {
    double u0 = P[k0], u1 = P[k1], v0 = P[l0], v1 = P[l1];
    auto lam = [&](double t) { return v1 > v0 ? v0 + (v1 - v0) * (t - u0) / (u1 - u0) : v0; };
    std::vector<double> br{u0, u1};
    for (double b : h2.jump_times())
      if (b > u0 && b < u1) br.push_back(b);
    if (v1 > v0)
      for (double x : h1.jump_times())
        if (x > v0 && x < v1) br.push_back(u0 + (x - v0) * (u1 - u0) / (v1 - v0));
    std::sort(br.begin(), br.end());
    double m = std::max(value_distance(h1(v0), h2(u0), metric), value_distance(h1(v1), h2(u1), metric));
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
      double t = 0.5 * (br[i] + br[i + 1]);
      if (!(t > br[i] && t < br[i + 1])) continue;
      m = std::max(m, value_distance(h1(lam(t)), h2(t), metric));
    }
    return m;
  };
  struct Edge {
    int from;
    double v;
  };
  std::vector<std::vector<Edge>> in(static_cast<std::size_t>(n) * n);
  std::vector<double> values;
  for (int k1 = 1; k1 < n; ++k1)
    for (int l1 = 0; l1 < n; ++l1)
      for (int k0 = std::max(0, k1 - W); k0 < k1; ++k0)
        for (int l0 = std::max(0, l1 - W); l0 <= l1; ++l0) {
          // lambda < 1 before u = 1, so it cannot sit flat at the top
          if (l0 == l1 && l1 == n - 1) continue;
          double v = seg_value(k0, l0, k1, l1);
          in[static_cast<std::size_t>(k1) * n + l1].push_back({k0 * n + l0, v});
          values.push_back(v);
        }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  double upper = std::numeric_limits<double>::infinity();
  std::vector<double> D(static_cast<std::size_t>(n) * n);
  for (double V : values) {
    if (V >= upper) break;
    std::fill(D.begin(), D.end(), std::numeric_limits<double>::infinity());
    D[0] = 0.0;
    for (int k = 1; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        double disp = std::fabs(P[l] - P[k]);
        double best = std::numeric_limits<double>::infinity();
        for (const Edge& e : in[static_cast<std::size_t>(k) * n + l])
          if (e.v <= V && D[e.from] < best) best = D[e.from];
        D[static_cast<std::size_t>(k) * n + l] = std::max(best, disp);
      }
    upper = std::min(upper, V + D.back());
  }
  return {lower, upper};
}

}  // namespace heavysum
