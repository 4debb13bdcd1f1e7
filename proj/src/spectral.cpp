#include "qcl/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace qcl {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

struct Fft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

Fft::Fft(std::size_t n) : plans_(std::make_unique<Plans>()), size_(n) {
  std::vector<cplx> scratch(n);
  const int len = static_cast<int>(n);
  std::lock_guard lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->forward = fftw_plan_dft_1d(len, as_fftw(scratch.data()), as_fftw(scratch.data()),
                                     FFTW_FORWARD, flags);
  plans_->inverse = fftw_plan_dft_1d(len, as_fftw(scratch.data()), as_fftw(scratch.data()),
                                     FFTW_BACKWARD, flags);
}

Fft::Fft(std::size_t n0, std::size_t n1) : plans_(std::make_unique<Plans>()), size_(n0 * n1) {
  std::vector<cplx> scratch(size_);
  std::lock_guard lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->forward = fftw_plan_dft_2d(static_cast<int>(n0), static_cast<int>(n1),
                                     as_fftw(scratch.data()), as_fftw(scratch.data()),
                                     FFTW_FORWARD, flags);
  plans_->inverse = fftw_plan_dft_2d(static_cast<int>(n0), static_cast<int>(n1),
                                     as_fftw(scratch.data()), as_fftw(scratch.data()),
                                     FFTW_BACKWARD, flags);
}

Fft::~Fft() = default;
Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(std::span<cplx> data) const {
  fftw_execute_dft(plans_->forward, as_fftw(data.data()), as_fftw(data.data()));
}

void Fft::inverse(std::span<cplx> data) const {
  fftw_execute_dft(plans_->inverse, as_fftw(data.data()), as_fftw(data.data()));
}

Spectral1d::Spectral1d(const SpatialGrid& grid)
    : grid_(grid), k_(grid.wavenumbers()), dealias_(grid.size()), fft_(grid.size()),
      work_(grid.size()) {
  const double cutoff = kDealiasFraction * grid.nyquist();
  for (std::size_t j = 0; j < k_.size(); ++j) dealias_[j] = std::abs(k_[j]) <= cutoff ? 1.0 : 0.0;
}

void Spectral1d::derivative(std::span<const cplx> f, std::span<cplx> out) {
  const std::size_t n = k_.size();
  for (std::size_t j = 0; j < n; ++j) work_[j] = f[j];
  fft_.forward(work_);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) work_[j] *= cplx(0.0, k_[j] * inv_n);
  work_[n / 2] = 0.0;
  fft_.inverse(work_);
  for (std::size_t j = 0; j < n; ++j) out[j] = work_[j];
}

void Spectral1d::laplacian(std::span<const double> f, std::span<double> out) {
  const std::size_t n = k_.size();
  for (std::size_t j = 0; j < n; ++j) work_[j] = f[j];
  fft_.forward(work_);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) work_[j] *= -k_[j] * k_[j] * inv_n;
  fft_.inverse(work_);
  for (std::size_t j = 0; j < n; ++j) out[j] = work_[j].real();
}

void Spectral1d::laplacian_dealiased(std::span<const double> f, std::span<double> out) {
  const std::size_t n = k_.size();
  for (std::size_t j = 0; j < n; ++j) work_[j] = f[j];
  fft_.forward(work_);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) work_[j] *= -k_[j] * k_[j] * dealias_[j] * inv_n;
  fft_.inverse(work_);
  for (std::size_t j = 0; j < n; ++j) out[j] = work_[j].real();
}

void Spectral1d::kinetic_step(std::span<cplx> psi, double hbar, double mass, double dt) {
  const std::size_t n = k_.size();
  if (kinetic_phase_.size() != n || kinetic_key_[0] != hbar || kinetic_key_[1] != mass ||
      kinetic_key_[2] != dt) {
    kinetic_phase_.resize(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double phase = -hbar * k_[j] * k_[j] * dt / (2.0 * mass);
      kinetic_phase_[j] = std::polar(inv_n, phase);
    }
    kinetic_key_[0] = hbar;
    kinetic_key_[1] = mass;
    kinetic_key_[2] = dt;
  }
  fft_.forward(psi);
  for (std::size_t j = 0; j < n; ++j) psi[j] *= kinetic_phase_[j];
  fft_.inverse(psi);
}

double Spectral1d::spectral_tail(std::span<const cplx> psi) {
  const std::size_t n = k_.size();
  for (std::size_t j = 0; j < n; ++j) work_[j] = psi[j];
  fft_.forward(work_);
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double p = std::norm(work_[j]);
    total += p;
    if (dealias_[j] == 0.0) tail += p;
  }
  return total > 0.0 ? tail / total : 0.0;
}

Spectral1d::Moments Spectral1d::wavenumber_moments(std::span<const cplx> psi) {
  const std::size_t n = k_.size();
  for (std::size_t j = 0; j < n; ++j) work_[j] = psi[j];
  fft_.forward(work_);
  double total = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double p = std::norm(work_[j]);
    total += p;
    if (j != n / 2) m1 += k_[j] * p;
    m2 += k_[j] * k_[j] * p;
  }
  if (total == 0.0) return {};
  return {m1 / total, m2 / total};
}

Spectral2d::Spectral2d(const SpatialGrid& grid1, const SpatialGrid& grid2)
    : grid1_(grid1), grid2_(grid2), k1_(grid1.wavenumbers()), k2_(grid2.wavenumbers()),
      keep1_(grid1.size()), keep2_(grid2.size()), fft_(grid1.size(), grid2.size()),
      work_(grid1.size() * grid2.size()), work2_(grid1.size() * grid2.size()) {
  const double c1 = kDealiasFraction * grid1.nyquist();
  const double c2 = kDealiasFraction * grid2.nyquist();
  for (std::size_t i = 0; i < k1_.size(); ++i) keep1_[i] = std::abs(k1_[i]) <= c1 ? 1.0 : 0.0;
  for (std::size_t j = 0; j < k2_.size(); ++j) keep2_[j] = std::abs(k2_[j]) <= c2 ? 1.0 : 0.0;
}

void Spectral2d::partial_laplacians_dealiased(std::span<const double> f, std::span<double> d11,
                                              std::span<double> d22) {
  const std::size_t n1 = k1_.size();
  const std::size_t n2 = k2_.size();
  for (std::size_t idx = 0; idx < f.size(); ++idx) work_[idx] = f[idx];
  fft_.forward(work_);
  const double inv_n = 1.0 / static_cast<double>(n1 * n2);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const std::size_t idx = i * n2 + j;
      const double keep = keep1_[i] * keep2_[j] * inv_n;
      work2_[idx] = work_[idx] * (-k2_[j] * k2_[j] * keep);
      work_[idx] *= -k1_[i] * k1_[i] * keep;
    }
  }
  fft_.inverse(work_);
  fft_.inverse(work2_);
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    d11[idx] = work_[idx].real();
    d22[idx] = work2_[idx].real();
  }
}

void Spectral2d::kinetic_step(std::span<cplx> psi, double hbar, double mass1, double mass2,
                              double dt) {
  const std::size_t n1 = k1_.size();
  const std::size_t n2 = k2_.size();
  if (kinetic_phase_.size() != n1 * n2 || kinetic_key_[0] != hbar || kinetic_key_[1] != mass1 ||
      kinetic_key_[2] != mass2 || kinetic_key_[3] != dt) {
    kinetic_phase_.resize(n1 * n2);
    const double inv_n = 1.0 / static_cast<double>(n1 * n2);
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        const double e = k1_[i] * k1_[i] / (2.0 * mass1) + k2_[j] * k2_[j] / (2.0 * mass2);
        kinetic_phase_[i * n2 + j] = std::polar(inv_n, -hbar * e * dt);
      }
    }
    kinetic_key_[0] = hbar;
    kinetic_key_[1] = mass1;
    kinetic_key_[2] = mass2;
    kinetic_key_[3] = dt;
  }
  fft_.forward(psi);
  for (std::size_t idx = 0; idx < psi.size(); ++idx) psi[idx] *= kinetic_phase_[idx];
  fft_.inverse(psi);
}

double Spectral2d::spectral_tail(std::span<const cplx> psi) {
  const std::size_t n1 = k1_.size();
  const std::size_t n2 = k2_.size();
  for (std::size_t idx = 0; idx < psi.size(); ++idx) work_[idx] = psi[idx];
  fft_.forward(work_);
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const double p = std::norm(work_[i * n2 + j]);
      total += p;
      if (keep1_[i] * keep2_[j] == 0.0) tail += p;
    }
  }
  return total > 0.0 ? tail / total : 0.0;
}

}  // namespace qcl
