#pragma once

#include <string>
#include <vector>

#include "rpack/contention.hpp"
#include "rpack/pattern.hpp"

namespace rpack {

struct Fixture {
  std::string name;
  TimedPattern pattern;
  ContentionKernel kernel;
  std::vector<std::string> labels;  ///< labels[i] names pattern.points[i]
};

/// Points 1..n on a line, disc radius 2/3, t(i) = 1 − 1/i. Ids equal the positions.
Fixture line_fixture(int n);

/// Regular pentagon A..E with unit sides, disc radius 0.65 so only cycle neighbours contend.
/// Timers A .1, B .2, C .4, D .5, E .3.
Fixture pentagon_fixture();

}  // namespace rpack
