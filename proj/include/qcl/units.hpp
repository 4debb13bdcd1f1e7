#pragma once

namespace qcl {

// CODATA 2018 exact values.
namespace si {
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double boltzmann = 1.380649e-23;       // J / K
inline constexpr double electron_mass = 9.1093837015e-31;  // kg
}  // namespace si

/// Constants used by the wave and density-matrix solvers. Natural units
/// (hbar = m = k_B = 1) are the default; SI values only enter the
/// decoherence calculator.
struct PhysicalParams {
  double hbar = 1.0;
  double mass = 1.0;
  double boltzmann = 1.0;

  static PhysicalParams natural() { return {}; }
  static PhysicalParams si_units(double mass_kg) {
    return {si::hbar, mass_kg, si::boltzmann};
  }

  void validate() const;
  bool operator==(const PhysicalParams&) const = default;
};

/// Scales mapping the natural unit system onto SI. Fixing a mass and a
/// length scale fixes time (m L^2 / hbar) and energy (hbar^2 / m L^2).
class NaturalUnits {
 public:
  NaturalUnits(double mass_kg, double length_m);

  double mass_kg() const { return mass_kg_; }
  double length_m() const { return length_m_; }
  double time_s() const { return mass_kg_ * length_m_ * length_m_ / si::hbar; }
  double energy_j() const { return si::hbar * si::hbar / (mass_kg_ * length_m_ * length_m_); }
  double temperature_k() const { return energy_j() / si::boltzmann; }

  double to_si_time(double t) const { return t * time_s(); }
  double from_si_time(double seconds) const { return seconds / time_s(); }
  double to_si_length(double x) const { return x * length_m_; }
  double from_si_length(double meters) const { return meters / length_m_; }
  double from_si_temperature(double kelvin) const { return kelvin / temperature_k(); }

 private:
  double mass_kg_;
  double length_m_;
};

}  // namespace qcl
