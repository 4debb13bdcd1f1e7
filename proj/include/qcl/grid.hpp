#pragma once

#include <cstddef>
#include <vector>

namespace qcl {

/// Uniform periodic 1D grid. Points are x_j = x_min + j*dx for j < n,
/// and x_max itself is identified with x_min.
class SpatialGrid {
 public:
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double dx() const { return (x_max_ - x_min_) / static_cast<double>(n_); }
  double length() const { return x_max_ - x_min_; }

  double x(std::size_t j) const { return x_min_ + static_cast<double>(j) * dx(); }
  std::size_t index_of(double x) const;  // nearest grid index, wrapped into [0, n)
  double wrap(double x) const;           // periodic image in [x_min, x_max)
  bool contains(double x) const { return x >= x_min_ && x < x_max_; }

  std::vector<double> coordinates() const;
  /// Angular wavenumbers in FFT order; the Nyquist entry is negative.
  std::vector<double> wavenumbers() const;
  double nyquist() const;

  bool operator==(const SpatialGrid&) const = default;

 private:
  friend SpatialGrid make_grid(double, double, std::size_t);
  SpatialGrid(double x_min, double x_max, std::size_t n) : x_min_(x_min), x_max_(x_max), n_(n) {}

  double x_min_;
  double x_max_;
  std::size_t n_;
};

inline constexpr std::size_t kMinGridPoints = 16;

/// Throws ConfigError unless x_max > x_min and n is a power of two >= 16.
SpatialGrid make_grid(double x_min, double x_max, std::size_t n_points);

}  // namespace qcl
