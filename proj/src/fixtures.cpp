#include "rpack/fixtures.hpp"

#include <cmath>

#include "rpack/errors.hpp"

namespace rpack {

Fixture line_fixture(int n) {
  if (n < 1) throw InvalidArgument("line fixture needs at least one point");
  Fixture f;
  f.name = "line" + std::to_string(n);
  f.kernel = ContentionKernel::hard_disc(2.0 / 3.0);
  f.pattern.window = Window::segment(n + 1.0, BoundaryMode::dilate, 0.0);
  f.pattern.horizon = 1.0;
  for (int i = 1; i <= n; ++i) {
    f.pattern.points.push_back({i, {static_cast<double>(i), 0.0}, 1.0 - 1.0 / i});
    f.labels.push_back(std::to_string(i));
  }
  return f;
}

Fixture pentagon_fixture() {
  Fixture f;
  f.name = "pentagon";
  f.kernel = ContentionKernel::hard_disc(0.65);
  const double circum = 1.0 / (2.0 * std::sin(M_PI / 5.0));
  const double timers[5] = {0.1, 0.2, 0.4, 0.5, 0.3};
  f.pattern.window = Window::square(4.0, BoundaryMode::dilate, 0.0);
  f.pattern.horizon = 1.0;
  for (int i = 0; i < 5; ++i) {
    const double a = M_PI / 2.0 + 2.0 * M_PI * i / 5.0;
    f.pattern.points.push_back(
        {i, {2.0 + circum * std::cos(a), 2.0 + circum * std::sin(a)}, timers[i]});
    f.labels.push_back(std::string(1, static_cast<char>('A' + i)));
  }
  return f;
}

}  // namespace rpack
