#pragma once

#include <functional>
#include <vector>

#include "rpack/geometry.hpp"

namespace rpack {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod (15 point) on [a,b]; `tol` is relative.
QuadResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, unsigned max_depth = 15);

/// Nested adaptive Gauss-Kronrod over a box (1D or 2D).
QuadResult integrate_box(const std::function<double(const Position&)>& f, const Box& box,
                         double tol = 1e-8, unsigned max_depth = 12);

struct GaussNode {
  double x;
  double w;
};

/// Gauss-Legendre nodes mapped to [a,b]. Supported orders: 2..30.
std::vector<GaussNode> gauss_legendre(int n, double a, double b);

/// Tensor Gauss-Legendre nodes over a box, `n` per axis; weights include the box volume.
std::vector<std::pair<Position, double>> gauss_legendre_box(int n, const Box& box);

}  // namespace rpack
