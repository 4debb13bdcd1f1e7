#pragma once

#include <span>
#include <string>
#include <variant>

#include "qcl/units.hpp"

namespace qcl {

/// lambda(t) = value
struct ConstantLambda {
  double value = 0.0;
  bool operator==(const ConstantLambda&) const = default;
};

/// lambda(t) = 1 - exp(-t / tau)
struct ExponentialLambda {
  double tau = 1.0;
  bool operator==(const ExponentialLambda&) const = default;
};

/// lambda rises linearly from 0 at t_start to 1 at t_end.
struct LinearRampLambda {
  double t_start = 0.0;
  double t_end = 1.0;
  bool operator==(const LinearRampLambda&) const = default;
};

/// Coupling of the classical-potential term as a function of elapsed time.
/// Values are clamped to [0, 1].
class LambdaSchedule {
 public:
  using Form = std::variant<ConstantLambda, ExponentialLambda, LinearRampLambda>;

  LambdaSchedule() : form_(ConstantLambda{0.0}) {}
  LambdaSchedule(Form form);  // NOLINT: implicit by design of the variant forms

  static LambdaSchedule constant(double value) { return {ConstantLambda{value}}; }
  static LambdaSchedule exponential(double tau) { return {ExponentialLambda{tau}}; }
  static LambdaSchedule linear_ramp(double t_start, double t_end) {
    return {LinearRampLambda{t_start, t_end}};
  }

  const Form& form() const { return form_; }
  std::string describe() const;
  bool operator==(const LambdaSchedule&) const = default;

 private:
  Form form_;
};

/// Throws DomainError for t < 0.
double lambda_at(const LambdaSchedule& schedule, double t);

struct EffectiveLambda {
  double value = 0.0;
  bool in_unit_range = true;  // false when mixed-sign weights push value outside [0, 1]
  double clamped() const;
};

/// sum_i lambda_i Q_i / sum_i Q_i. Throws ShapeError on length mismatch or
/// empty input and DegenerateStateError when sum Q_i vanishes.
EffectiveLambda effective_lambda(std::span<const double> lambdas, std::span<const double> qs);

/// hbar / sqrt(2 m k_B T). SI constants unless `params` says otherwise.
double thermal_wavelength(double mass, double temperature,
                          const PhysicalParams& params = PhysicalParams::si_units(1.0));

struct DecoherenceParams {
  double mass = 0.0;         // kg
  double temperature = 0.0;  // K
  double gamma = 0.0;        // 1/s, relaxation rate = 1 / tau_R
  double separation = 0.0;   // m
  void validate() const;
};

struct DecoherenceTime {
  double thermal_wavelength = 0.0;
  double tau_r = 0.0;
  double tau_d = 0.0;
  double ratio = 0.0;  // tau_D / tau_R = (lambda_T / dx)^2
};

/// tau_D = gamma^-1 (lambda_T / dx)^2.
DecoherenceTime decoherence_time(const DecoherenceParams& params,
                                 const PhysicalParams& constants = PhysicalParams::si_units(1.0));

}  // namespace qcl
