#include "qcl/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "qcl/errors.hpp"

namespace qcl {

DensityCdf::DensityCdf(const WaveState& psi) : grid_(psi.grid) {
  const std::size_t n = grid_.size();
  const double dx = grid_.dx();
  const auto rho = psi.density();
  knots_.resize(n + 2);
  knots_[0] = grid_.x_min();
  for (std::size_t i = 1; i <= n; ++i) knots_[i] = grid_.x_min() + (static_cast<double>(i) - 0.5) * dx;
  knots_[n + 1] = grid_.x_max();
  cumulative_.assign(n + 2, 0.0);
  for (std::size_t i = 0; i <= n; ++i) {
    cumulative_[i + 1] = cumulative_[i] + rho[i % n] * (knots_[i + 1] - knots_[i]);
  }
  const double total = cumulative_.back();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegenerateStateError("DensityCdf: density has no mass");
  }
  for (auto& c : cumulative_) c /= total;
  cumulative_.back() = 1.0;
}

double DensityCdf::cdf(double x) const {
  x = grid_.wrap(x);
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const std::size_t i = std::min<std::size_t>(
      static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - knots_.begin() - 1, 0)),
      knots_.size() - 2);
  const double width = knots_[i + 1] - knots_[i];
  const double frac = width > 0.0 ? (x - knots_[i]) / width : 0.0;
  return cumulative_[i] + frac * (cumulative_[i + 1] - cumulative_[i]);
}

double DensityCdf::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("DensityCdf::quantile: u outside [0, 1]");
  if (u >= 1.0) return knots_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  const double mass = cumulative_[i + 1] - cumulative_[i];
  return knots_[i] + (u - cumulative_[i]) / mass * (knots_[i + 1] - knots_[i]);
}

double TrajectoryEnsemble::frozen_fraction() const {
  return attempted_steps == 0
             ? 0.0
             : static_cast<double>(frozen_steps) / static_cast<double>(attempted_steps);
}

TrajectoryEnsemble sample_initial(const WaveState& psi, std::size_t n_traj, std::uint64_t seed) {
  if (n_traj == 0) throw ConfigError("sample_initial: need at least one trajectory");
  const DensityCdf cdf(psi);
  Rng rng(seed);
  TrajectoryEnsemble ens{psi.grid, {}, psi.t, seed};
  ens.positions.resize(n_traj);
  for (auto& x : ens.positions) x = psi.grid.wrap(cdf.quantile(rng.uniform()));
  return ens;
}

PolarFields guidance_fields(const WaveState& psi, const PhysicalParams& params, double epsilon,
                            Spectral1d& spectral) {
  PolarFields f;
  const std::size_t n = psi.values.size();
  f.R.resize(n);
  double max_r = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    f.R[j] = std::abs(psi.values[j]);
    max_r = std::max(max_r, f.R[j]);
  }
  f.node_mask.resize(n);
  for (std::size_t j = 0; j < n; ++j) f.node_mask[j] = f.R[j] < epsilon * max_r;
  f.v = velocity_field(psi, params, epsilon, spectral);
  return f;
}

namespace {

std::optional<double> interpolate(const PolarFields& f, const SpatialGrid& grid, double x) {
  const std::size_t n = grid.size();
  const double s = (x - grid.x_min()) / grid.dx();
  const double fl = std::floor(s);
  const double frac = s - fl;
  const auto j0 = static_cast<std::size_t>(
      ((static_cast<long long>(fl) % static_cast<long long>(n)) + static_cast<long long>(n)) %
      static_cast<long long>(n));
  const std::size_t j1 = (j0 + 1) % n;
  if (f.node_mask[j0] || f.node_mask[j1]) return std::nullopt;
  const double v = (1.0 - frac) * f.v[j0] + frac * f.v[j1];
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

TrajectoryEnsemble advance(const TrajectoryEnsemble& ens, const PolarFields& fields_t,
                           const PolarFields& fields_next, double dt) {
  const std::size_t n = ens.grid.size();
  if (fields_t.v.size() != n || fields_next.v.size() != n || fields_t.node_mask.size() != n ||
      fields_next.node_mask.size() != n) {
    throw ShapeError("advance: velocity fields do not match the ensemble grid");
  }
  TrajectoryEnsemble out = ens;
  out.t = ens.t + dt;
  const auto averaged = [&](double x) -> std::optional<double> {
    const auto a = interpolate(fields_t, ens.grid, x);
    const auto b = interpolate(fields_next, ens.grid, x);
    if (!a || !b) return std::nullopt;
    return 0.5 * (*a + *b);
  };
  for (auto& x : out.positions) {
    ++out.attempted_steps;
    const auto k1 = interpolate(fields_t, ens.grid, x);
    if (!k1) {
      ++out.frozen_steps;
      continue;
    }
    const auto k2 = averaged(ens.grid.wrap(x + 0.5 * dt * *k1));
    if (!k2) {
      ++out.frozen_steps;
      continue;
    }
    const double next = x + dt * *k2;
    if (!ens.grid.contains(next)) ++out.wraps;
    x = ens.grid.wrap(next);
  }
  return out;
}

double ks_distance(std::span<const double> samples, const DensityCdf& cdf) {
  if (samples.empty()) throw ShapeError("ks_distance: no samples");
  std::vector<double> g(samples.size());
  std::transform(samples.begin(), samples.end(), g.begin(),
                 [&](double x) { return cdf.cdf(x); });
  std::sort(g.begin(), g.end());
  const double n = static_cast<double>(g.size());
  double d = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, g[i] - lo, hi - g[i]});
  }
  return d;
}

double equivariance_statistic(const TrajectoryEnsemble& ens, const WaveState& psi) {
  if (!(ens.grid == psi.grid)) throw ShapeError("equivariance_statistic: grid mismatch");
  return ks_distance(ens.positions, DensityCdf(psi));
}

std::size_t ordering_violations(std::span<const double> initial, std::span<const double> current) {
  if (initial.size() != current.size()) throw ShapeError("ordering_violations: size mismatch");
  std::vector<std::size_t> idx(initial.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return initial[a] < initial[b]; });
  std::size_t count = 0;
  for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
    if (current[idx[k + 1]] < current[idx[k]]) ++count;
  }
  return count;
}

TrajectoryTracker::TrajectoryTracker(TrajectoryEnsemble ensemble, const WaveState& initial,
                                     PhysicalParams params, double epsilon,
                                     std::size_t record_every)
    : ensemble_(std::move(ensemble)), initial_(ensemble_.positions), params_(params),
      epsilon_(epsilon), record_every_(std::max<std::size_t>(record_every, 1)),
      spectral_(initial.grid) {
  if (!(ensemble_.grid == initial.grid)) throw ShapeError("TrajectoryTracker: grid mismatch");
  current_ = guidance_fields(initial, params_, epsilon_, spectral_);
  record(initial);
}

void TrajectoryTracker::operator()(const WaveState& before, const WaveState& after,
                                   std::size_t step) {
  auto next = guidance_fields(after, params_, epsilon_, spectral_);
  ensemble_ = advance(ensemble_, current_, next, after.t - before.t);
  ensemble_.t = after.t;
  current_ = std::move(next);
  if ((step + 1) % record_every_ == 0) record(after);
}

void TrajectoryTracker::finalize(const WaveState& psi) {
  if (history_t_.empty() || history_t_.back() != psi.t) record(psi);
}

double TrajectoryTracker::max_ks() const {
  double m = 0.0;
  for (const auto& s : ks_) m = std::max(m, s.ks);
  return m;
}

void TrajectoryTracker::record(const WaveState& psi) {
  ks_.push_back({psi.t, equivariance_statistic(ensemble_, psi)});
  history_t_.push_back(psi.t);
  history_.push_back(ensemble_.positions);
}

}  // namespace qcl
