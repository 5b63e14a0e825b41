#include "rpack/intensity.hpp"

#include <cmath>

#include "rpack/errors.hpp"
#include "rpack/quadrature.hpp"

namespace rpack {

IntensityModel IntensityModel::homogeneous(double rate) {
  if (!std::isfinite(rate) || rate < 0.0) throw InvalidArgument("intensity must be >= 0");
  IntensityModel m;
  m.rate_max_ = rate;
  return m;
}

IntensityModel IntensityModel::density(std::function<double(const Position&)> fn,
                                       double rate_max, std::string label) {
  if (!fn) throw InvalidArgument("density intensity needs a callable");
  if (!std::isfinite(rate_max) || rate_max < 0.0)
    throw InvalidArgument("density intensity needs a finite rate bound >= 0");
  IntensityModel m;
  m.kind_ = Kind::density;
  m.rate_max_ = rate_max;
  m.fn_ = std::move(fn);
  m.label_ = std::move(label);
  return m;
}

double IntensityModel::total(const Box& box) const {
  if (is_homogeneous()) return rate_max_ * box.volume();
  return integrate_box(fn_, box, 1e-9).value;
}

}  // namespace rpack
