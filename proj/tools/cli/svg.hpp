#pragma once

#include <string>
#include <vector>

namespace heavysum::cli::svg {

struct Series {
  std::string name;
  std::vector<double> x, y;
  std::vector<double> lo, hi;  // error bars, optional
};

/// Line chart with optional error bars; one color per series.
std::string trend(const std::string& title, const std::string& x_label, const std::string& y_label,
                  const std::vector<Series>& series);

std::string histogram(const std::string& title, const std::string& x_label, const std::vector<double>& counts);

/// Cadlag step path drawn from (t, value) samples, with a marker at each jump.
std::string step_path(const std::string& title, const std::vector<double>& t, const std::vector<double>& v,
                      const std::vector<double>& jump_times);

}  // namespace heavysum::cli::svg
