#include "rpack/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "rpack/errors.hpp"

namespace rpack {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

PatternMarks compute_marks(const TimedPattern& pattern, const ContentionField& field, int K) {
  if (K < 0) throw InvalidArgument("mark level must be >= 0");
  PatternMarks pm;
  pm.K = K;
  pm.marks = matern_k(pattern, field, K);
  pm.classes = classify_prefix(pm.marks, K);
  return pm;
}

void write_pattern_csv(std::ostream& out, const TimedPattern& pattern, const PatternMarks& pm) {
  const int dim = pattern.window.dim();
  out << "id,x";
  if (dim == 2) out << ",y";
  out << ",timer";
  if (pm.K >= 0) {
    for (int k = 0; k <= pm.K; ++k) out << ",e" << k;
    out << ",einf,class";
  }
  out << '\n';
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const auto& p = pattern.points[i];
    out << p.id << ',' << format_double(p.pos[0]);
    if (dim == 2) out << ',' << format_double(p.pos[1]);
    out << ',' << format_double(p.timer);
    if (pm.K >= 0) {
      const auto v = static_cast<std::uint32_t>(i);
      for (int k = 0; k <= pm.K; ++k) out << ',' << int(pm.marks.at(v, k));
      out << ',' << int(pm.marks.einf[i]) << ',' << pm.classes[i];
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

template <class T>
T parse_number(const std::string& s, std::size_t line) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidArgument("pattern CSV line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

TimedPattern read_pattern_csv(std::istream& in, const Window& window, double horizon) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("pattern CSV is empty");
  const auto header = split(line);
  auto column = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int cid = column("id"), cx = column("x"), cy = column("y"), ct = column("timer");
  if (cid < 0 || cx < 0 || ct < 0 || (window.dim() == 2 && cy < 0))
    throw InvalidArgument("pattern CSV header lacks id, x, y or timer");
  TimedPattern p;
  p.window = window;
  p.horizon = horizon;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw InvalidArgument("pattern CSV line " + std::to_string(n) + ": wrong number of fields");
    TimedPoint pt;
    pt.id = parse_number<std::int64_t>(cells[cid], n);
    pt.pos[0] = parse_number<double>(cells[cx], n);
    if (window.dim() == 2) pt.pos[1] = parse_number<double>(cells[cy], n);
    pt.timer = parse_number<double>(cells[ct], n);
    p.points.push_back(pt);
  }
  validate_pattern(p);
  return p;
}

}  // namespace rpack
