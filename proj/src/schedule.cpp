#include "qcl/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qcl/errors.hpp"

namespace qcl {
namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

LambdaSchedule::LambdaSchedule(Form form) : form_(form) {
  std::visit(overloaded{
                 [](const ConstantLambda& c) {
                   if (!std::isfinite(c.value)) throw ConfigError("constant lambda must be finite");
                 },
                 [](const ExponentialLambda& e) {
                   if (!(e.tau > 0.0) || !std::isfinite(e.tau))
                     throw ConfigError("exponential lambda needs tau > 0");
                 },
                 [](const LinearRampLambda& r) {
                   if (!std::isfinite(r.t_start) || !std::isfinite(r.t_end) || r.t_start < 0.0 ||
                       r.t_end < r.t_start)
                     throw ConfigError("linear ramp needs 0 <= t_start <= t_end");
                 },
             },
             form_);
}

std::string LambdaSchedule::describe() const {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const ConstantLambda& c) { out << "constant(" << c.value << ")"; },
                 [&](const ExponentialLambda& e) { out << "exponential(tau=" << e.tau << ")"; },
                 [&](const LinearRampLambda& r) {
                   out << "linear_ramp(" << r.t_start << ", " << r.t_end << ")";
                 },
             },
             form_);
  return out.str();
}

double lambda_at(const LambdaSchedule& schedule, double t) {
  if (!(t >= 0.0)) throw DomainError("lambda_at: time must be non-negative");
  const double raw = std::visit(
      overloaded{
          [](const ConstantLambda& c) { return c.value; },
          [&](const ExponentialLambda& e) { return -std::expm1(-t / e.tau); },
          [&](const LinearRampLambda& r) {
            if (t >= r.t_end) return 1.0;
            if (t <= r.t_start) return 0.0;
            return (t - r.t_start) / (r.t_end - r.t_start);
          },
      },
      schedule.form());
  return std::clamp(raw, 0.0, 1.0);
}

double EffectiveLambda::clamped() const { return std::clamp(value, 0.0, 1.0); }

EffectiveLambda effective_lambda(std::span<const double> lambdas, std::span<const double> qs) {
  if (lambdas.empty() || lambdas.size() != qs.size()) {
    throw ShapeError("effective_lambda: needs equal, non-empty lambda and Q arrays");
  }
  double num = 0.0;
  double den = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    num += lambdas[i] * qs[i];
    den += qs[i];
    scale += std::abs(qs[i]);
  }
  if (den == 0.0 || std::abs(den) <= 1e-14 * scale) {
    throw DegenerateStateError("effective_lambda: the quantum potentials sum to zero");
  }
  EffectiveLambda out;
  out.value = num / den;
  out.in_unit_range = out.value >= 0.0 && out.value <= 1.0;
  return out;
}

double thermal_wavelength(double mass, double temperature, const PhysicalParams& params) {
  if (!(mass > 0.0) || !(temperature > 0.0)) {
    throw DomainError("thermal_wavelength: mass and temperature must be positive");
  }
  return params.hbar / std::sqrt(2.0 * mass * params.boltzmann * temperature);
}

void DecoherenceParams::validate() const {
  if (!(mass > 0.0) || !(temperature > 0.0) || !(gamma > 0.0) || !(separation > 0.0)) {
    throw DomainError("decoherence parameters must all be strictly positive");
  }
}

DecoherenceTime decoherence_time(const DecoherenceParams& params, const PhysicalParams& constants) {
  params.validate();
  DecoherenceTime out;
  out.thermal_wavelength = thermal_wavelength(params.mass, params.temperature, constants);
  const double r = out.thermal_wavelength / params.separation;
  out.ratio = r * r;
  out.tau_r = 1.0 / params.gamma;
  out.tau_d = out.tau_r * out.ratio;
  return out;
}

}  // namespace qcl
