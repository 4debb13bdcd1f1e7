#include "qcl/potential.hpp"

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

void validate(const PotentialSpec& potential) {
  std::visit(overloaded{
                 [](const FreePotential&) {},
                 [](const HarmonicPotential& h) {
                   if (!(h.omega > 0.0) || !std::isfinite(h.center))
                     throw ConfigError("harmonic potential needs omega > 0 and a finite center");
                 },
                 [](const BarrierPotential& b) {
                   if (!std::isfinite(b.height) || !(b.width > 0.0) || !std::isfinite(b.center))
                     throw ConfigError("barrier needs finite height, width > 0 and finite center");
                 },
             },
             potential);
}

double evaluate(const PotentialSpec& potential, double x, const PhysicalParams& params) {
  return std::visit(overloaded{
                        [](const FreePotential&) { return 0.0; },
                        [&](const HarmonicPotential& h) {
                          const double d = x - h.center;
                          return 0.5 * params.mass * h.omega * h.omega * d * d;
                        },
                        [&](const BarrierPotential& b) {
                          return std::abs(x - b.center) <= 0.5 * b.width ? b.height : 0.0;
                        },
                    },
                    potential);
}

std::vector<double> evaluate(const PotentialSpec& potential, const SpatialGrid& grid,
                             const PhysicalParams& params) {
  validate(potential);
  std::vector<double> v(grid.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = evaluate(potential, grid.x(j), params);
  return v;
}

std::string describe(const PotentialSpec& potential) {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const FreePotential&) { out << "free"; },
                 [&](const HarmonicPotential& h) {
                   out << "harmonic(omega=" << h.omega << ", center=" << h.center << ")";
                 },
                 [&](const BarrierPotential& b) {
                   out << "barrier(height=" << b.height << ", width=" << b.width
                       << ", center=" << b.center << ")";
                 },
             },
             potential);
  return out.str();
}

}  // namespace qcl
