#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "qcl/grid.hpp"
#include "qcl/state.hpp"

namespace qcl {

/// In-place complex DFT of fixed length. Plans are created under a global
/// lock (FFTW planning is not thread-safe); execution is not shared, so each
/// thread owns its transforms. The inverse is unnormalized.
class Fft {
 public:
  explicit Fft(std::size_t n);
  Fft(std::size_t n0, std::size_t n1);  // 2D, row-major
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;

  std::size_t size() const { return size_; }
  void forward(std::span<cplx> data) const;
  void inverse(std::span<cplx> data) const;

 private:
  struct Plans;
  std::unique_ptr<Plans> plans_;
  std::size_t size_ = 0;
};

/// Fraction of the spectrum kept by the 2/3 dealiasing rule.
inline constexpr double kDealiasFraction = 2.0 / 3.0;

/// Spectral calculus on one periodic grid. Holds scratch storage, so one
/// instance must not be used from two threads at once.
class Spectral1d {
 public:
  explicit Spectral1d(const SpatialGrid& grid);

  const SpatialGrid& grid() const { return grid_; }
  const std::vector<double>& wavenumbers() const { return k_; }

  /// d/dx of a complex field; the Nyquist mode is dropped.
  void derivative(std::span<const cplx> f, std::span<cplx> out);
  /// d^2/dx^2 of a real field over the full spectrum.
  void laplacian(std::span<const double> f, std::span<double> out);
  /// d^2/dx^2 of a real field keeping only |k| <= 2/3 k_nyquist.
  void laplacian_dealiased(std::span<const double> f, std::span<double> out);
  /// psi <- IFFT(exp(-i hbar k^2 dt / 2m) FFT(psi))
  void kinetic_step(std::span<cplx> psi, double hbar, double mass, double dt);
  /// Share of sum |psi_k|^2 carried by modes above the dealiasing cutoff.
  double spectral_tail(std::span<const cplx> psi);
  /// <k> and <k^2> weighted by |psi_k|^2. The Nyquist mode is excluded from <k>.
  struct Moments {
    double mean_k = 0.0;
    double mean_k2 = 0.0;
  };
  Moments wavenumber_moments(std::span<const cplx> psi);

 private:
  SpatialGrid grid_;
  std::vector<double> k_;
  std::vector<double> dealias_;
  Fft fft_;
  std::vector<cplx> work_;
  double kinetic_key_[3] = {0, 0, 0};
  std::vector<cplx> kinetic_phase_;
};

/// Partial derivatives on a tensor grid (x1 slow index).
class Spectral2d {
 public:
  Spectral2d(const SpatialGrid& grid1, const SpatialGrid& grid2);

  /// Dealiased d^2/dx1^2 and d^2/dx2^2 of a real field.
  void partial_laplacians_dealiased(std::span<const double> f, std::span<double> d11,
                                    std::span<double> d22);
  void kinetic_step(std::span<cplx> psi, double hbar, double mass1, double mass2, double dt);
  double spectral_tail(std::span<const cplx> psi);

 private:
  SpatialGrid grid1_;
  SpatialGrid grid2_;
  std::vector<double> k1_, k2_, keep1_, keep2_;
  Fft fft_;
  std::vector<cplx> work_;
  std::vector<cplx> work2_;
  double kinetic_key_[4] = {0, 0, 0, 0};
  std::vector<cplx> kinetic_phase_;
};

}  // namespace qcl
