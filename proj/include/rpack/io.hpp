#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rpack/packing.hpp"
#include "rpack/pattern.hpp"

namespace rpack {

/// Shortest text that reads back to the same double.
std::string format_double(double x);

/// Per-point marks written next to a pattern: e_0..e_K, e_∞ and the prefix class at level K.
struct PatternMarks {
  int K = -1;  ///< −1: no marks
  RetentionMarks marks;
  std::vector<int> classes;
};

PatternMarks compute_marks(const TimedPattern& pattern, const ContentionField& field, int K);

/// CSV with header `id,x[,y],timer[,e0..eK,einf,class]`, one row per point in input order.
void write_pattern_csv(std::ostream& out, const TimedPattern& pattern, const PatternMarks& marks = {});

/// Reads the columns id, x, (y), timer; mark columns are ignored. Validates the result.
TimedPattern read_pattern_csv(std::istream& in, const Window& window, double horizon);

}  // namespace rpack
