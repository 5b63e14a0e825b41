#pragma once

#include <functional>
#include <string>

#include "rpack/geometry.hpp"

namespace rpack {

/// Intensity λ of the proposed Poisson process (per unit volume per unit timer).
class IntensityModel {
 public:
  enum class Kind { homogeneous, density };

  static IntensityModel homogeneous(double rate);
  /// Inhomogeneous intensity λ(x) ≤ rate_max, realized by rejection.
  static IntensityModel density(std::function<double(const Position&)> fn, double rate_max,
                                std::string label = "density");

  Kind kind() const { return kind_; }
  bool is_homogeneous() const { return kind_ == Kind::homogeneous; }
  double rate_max() const { return rate_max_; }
  const std::string& label() const { return label_; }

  double at(const Position& x) const { return fn_ ? fn_(x) : rate_max_; }
  /// Λ(box).
  double total(const Box& box) const;

 private:
  Kind kind_ = Kind::homogeneous;
  double rate_max_ = 0.0;
  std::function<double(const Position&)> fn_;
  std::string label_ = "homogeneous";
};

}  // namespace rpack
