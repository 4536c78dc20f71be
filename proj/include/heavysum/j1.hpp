#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "heavysum/path.hpp"

namespace heavysum {

enum class ValueMetric { kRaw, kCompactified };

/// Distance between two path values: |z1 - z2| or |atan z1 - atan z2|.
double value_distance(double z1, double z2, ValueMetric metric) noexcept;

/// Piecewise-linear time change through knots (u, lambda(u)), from (0,0) to
/// (1,1). Knots are nondecreasing; equal consecutive coordinates mark the
/// boundary of the admissible class (the infimum is not always attained).
struct Reparameterization {
  std::vector<std::pair<double, double>> knots;

  static Reparameterization identity() { return {{{0.0, 0.0}, {1.0, 1.0}}}; }
  double operator()(double u) const;
  /// sup |lambda(u) - u|, attained at a knot.
  double displacement() const;
  Reparameterization inverse() const;
  std::string to_csv() const;
};

struct J1Result {
  double distance = 0.0;
  double value_term = 0.0;  // ||h1 o lambda - h2||_inf for the witness
  double time_term = 0.0;   // ||lambda - id||_inf for the witness
  Reparameterization witness;
  ValueMetric metric = ValueMetric::kRaw;
};

/// sup_t d(h1(t), h2(t)), exact on the merged breakpoint grid.
double uniform_distance(const CadlagStep& h1, const CadlagStep& h2, ValueMetric metric = ValueMetric::kRaw);

inline constexpr std::size_t kDefaultMaxJumps = 32;

/// Skorokhod J1 distance inf_lambda ||h1 o lambda - h2|| + ||lambda - id||.
///
/// Any admissible lambda induces an interleaving of the mapped jump times of
/// h1 with the jump times of h2 (coincidences allowed in the closure). For a
/// fixed interleaving the value term is the largest level mismatch over the
/// visited pairs of levels, and the best time term comes from clamping every
/// mapped jump time into its slot between neighbouring jumps of h2. A
/// dynamic program over the lattice of interleavings, thresholded on the
/// value term, gives the exact infimum in O((n1 n2)^2).
///
/// Throws BudgetExceeded if either path has more than max_jumps jumps.
J1Result j1_distance(const CadlagStep& h1, const CadlagStep& h2, ValueMetric metric = ValueMetric::kRaw,
                     std::size_t max_jumps = kDefaultMaxJumps);

struct J1Bracket {
  double lower = 0.0;
  double upper = 0.0;
};

/// Independent bracket for d_J1. Upper: best piecewise-linear lambda with
/// knots on a lattice built from the grid k/resolution and all jump times.
/// Lower: the largest of several J1-Lipschitz functionals (endpoint values,
/// sup, inf, largest jump) and a windowed relaxation that only uses
/// |lambda(t) - t| <= T without ordering.
J1Bracket j1_oracle(const CadlagStep& h1, const CadlagStep& h2, int resolution,
                    ValueMetric metric = ValueMetric::kRaw);

bool is_J1_close(const CadlagStep& h1, const CadlagStep& h2, double tol, ValueMetric metric = ValueMetric::kRaw,
                 std::size_t max_jumps = kDefaultMaxJumps);

}  // namespace heavysum
