#pragma once

#include <string>
#include <variant>
#include <vector>

#include "qcl/grid.hpp"
#include "qcl/units.hpp"

namespace qcl {

struct FreePotential {
  bool operator==(const FreePotential&) const = default;
};

/// V = m omega^2 (x - center)^2 / 2
struct HarmonicPotential {
  double omega = 1.0;
  double center = 0.0;
  bool operator==(const HarmonicPotential&) const = default;
};

/// Rectangular barrier of the given height on |x - center| <= width/2.
struct BarrierPotential {
  double height = 1.0;
  double width = 1.0;
  double center = 0.0;
  bool operator==(const BarrierPotential&) const = default;
};

using PotentialSpec = std::variant<FreePotential, HarmonicPotential, BarrierPotential>;

void validate(const PotentialSpec& potential);
double evaluate(const PotentialSpec& potential, double x, const PhysicalParams& params);
std::vector<double> evaluate(const PotentialSpec& potential, const SpatialGrid& grid,
                             const PhysicalParams& params);
std::string describe(const PotentialSpec& potential);

}  // namespace qcl
