#include "rpack/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rpack/errors.hpp"
#include "rpack/functional.hpp"
#include "rpack/neighbor_grid.hpp"
#include "rpack/packing.hpp"
#include "rpack/parallel.hpp"
#include "rpack/quadrature.hpp"
#include "rpack/stats.hpp"

namespace rpack {

std::string model_name(Model m) {
  switch (m) {
    case Model::poisson: return "poisson";
    case Model::matern1: return "matern1";
    case Model::maternK: return "maternK";
    case Model::maternInf: return "maternInf";
  }
  return "unknown";
}

Model parse_model(const std::string& s) {
  if (s == "poisson") return Model::poisson;
  if (s == "matern1") return Model::matern1;
  if (s == "maternK") return Model::maternK;
  if (s == "maternInf") return Model::maternInf;
  throw InvalidArgument("unknown model '" + s + "' (poisson|matern1|maternK|maternInf)");
}

int ModelSpec::level() const {
  switch (model) {
    case Model::poisson: return 0;
    case Model::matern1: return 1;
    case Model::maternK: return k;
    case Model::maternInf: return -1;
  }
  return -1;
}

void ModelSpec::validate() const {
  if (!std::isfinite(t) || t < 0.0) throw InvalidArgument("t must be a finite value >= 0");
  if (model == Model::maternK && (k < 0 || k > 64)) throw InvalidArgument("k must lie in [0, 64]");
  if (dim() != 1 && dim() != 2) throw InvalidArgument("dimension must be 1 or 2");
}

namespace {

/// Streaming mean / M2 that merges in a fixed order.
struct Moments {
  double n = 0.0, mean = 0.0, m2 = 0.0;

  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }
  Summary summary() const {
    Summary s;
    s.n = static_cast<std::size_t>(n);
    s.mean = mean;
    s.variance = n > 1.0 ? m2 / (n - 1.0) : 0.0;
    s.sigma = n > 1.0 ? std::sqrt(s.variance / n) : 0.0;
    return s;
  }
};

/// Runs fn(r, seed, row) for each replicate, row holding `columns` outputs, and returns
/// per-column moments. Batches bound memory for very large replicate counts.
template <class Fn>
std::vector<Summary> replicate_columns(const RunOptions& opts, std::size_t columns, Fn&& fn) {
  constexpr std::size_t kBatch = 1 << 15;
  std::vector<Moments> acc(columns);
  std::vector<double> rows;
  for (std::size_t start = 0; start < opts.replicates; start += kBatch) {
    const std::size_t m = std::min(kBatch, opts.replicates - start);
    rows.assign(m * columns, 0.0);
    parallel_for(m, opts.threads, [&](std::size_t i) {
      const std::size_t r = start + i;
      fn(r, replicate_seed_of(opts.seed, r), rows.data() + i * columns);
    });
    std::vector<double> col(m);
    for (std::size_t c = 0; c < columns; ++c) {
      for (std::size_t i = 0; i < m; ++i) col[i] = rows[i * columns + c];
      const Summary s = summarize(col);
      acc[c].merge({static_cast<double>(m), s.mean, s.variance * static_cast<double>(m - 1)});
    }
  }
  std::vector<Summary> out;
  for (const auto& a : acc) out.push_back(a.summary());
  return out;
}

Estimate to_estimate(const Summary& s, const RunOptions& opts) {
  Estimate e;
  e.mean = s.mean;
  e.sigma = s.sigma;
  e.level = opts.level;
  e.half_width = normal_z(opts.level) * s.sigma;
  e.replicates = s.n;
  e.seed = opts.seed;
  return e;
}

void require_replicates(const RunOptions& opts, std::size_t min = 2) {
  if (opts.replicates < min)
    throw InvalidArgument("need at least " + std::to_string(min) + " replicates");
}

double kernel_at(const ContentionKernel& k, const Window& w, const Position& a, const Position& b) {
  return k.profile(w.distance2(a, b));
}

/// Retained points with their timers, in timer order.
struct Retained {
  std::vector<Position> pos;
  std::vector<double> timer;
  std::vector<int> cls;
};

Retained collect(const Realization& real, const std::vector<int>* classes = nullptr) {
  Retained out;
  const auto order = timer_order(real.pattern);
  for (auto i : order) {
    if (classes) {
      out.pos.push_back(real.pattern.points[i].pos);
      out.timer.push_back(real.pattern.points[i].timer);
      out.cls.push_back((*classes)[i]);
    } else if (real.retained[i]) {
      out.pos.push_back(real.pattern.points[i].pos);
      out.timer.push_back(real.pattern.points[i].timer);
    }
  }
  return out;
}

CheckReport verdict(CheckReport rep, const Summary& s) {
  rep.value = s.mean;
  rep.sigma = s.sigma;
  rep.pass = s.sigma > 0.0 ? std::abs(s.mean) < 3.0 * s.sigma : std::abs(s.mean) < 1e-12;
  return rep;
}

void check_support_inside(const ModelSpec& spec, const TestFunction& v) {
  const auto sb = v.support_bounds();
  if (!sb) return;
  const Box area = spec.window.mode() == BoundaryMode::torus ? spec.window.region() : spec.window.core();
  for (int a = 0; a < spec.dim(); ++a)
    if (sb->lo[a] < area.lo[a] - 1e-12 || sb->hi[a] > area.hi[a] + 1e-12)
      throw InvalidArgument("support of 1 - v escapes the simulation window");
}

}  // namespace

Estimate make_estimate(const std::vector<double>& per_replicate, const RunOptions& opts) {
  return to_estimate(summarize(per_replicate), opts);
}

Estimate make_ratio_estimate(const std::vector<double>& num, const std::vector<double>& den,
                             const RunOptions& opts) {
  if (num.size() != den.size() || num.size() < 2)
    throw InvalidArgument("ratio estimate needs matched samples");
  const double md = pairwise_sum(den) / static_cast<double>(den.size());
  if (md == 0.0) throw NumericalError("ratio estimate: denominator is zero in every replicate");
  const double mn = pairwise_sum(num) / static_cast<double>(num.size());
  const double ratio = mn / md;
  std::vector<double> lin(num.size());
  for (std::size_t i = 0; i < num.size(); ++i) lin[i] = num[i] - ratio * den[i];
  const Summary s = summarize(lin);
  Estimate e;
  e.mean = ratio;
  e.sigma = s.sigma / std::abs(md);
  e.level = opts.level;
  e.half_width = normal_z(opts.level) * e.sigma;
  e.replicates = num.size();
  e.seed = opts.seed;
  return e;
}

SeedSpec replicate_seed_of(std::uint64_t seed, std::size_t r) {
  SeedSpec base;
  base.master_seed = seed;
  return replicate_seed(base, r);
}

Realization simulate(const ModelSpec& spec, const SeedSpec& seed) {
  Realization out;
  out.pattern = sample_poisson(spec.window, spec.intensity, spec.t, seed);
  const int level = spec.level();
  if (level == 0 || spec.kernel.is_null()) {
    out.retained.assign(out.pattern.size(), 1);
    return out;
  }
  const ContentionField field(spec.kernel, seed, spec.window);
  if (level < 0) {
    out.retained = matern_inf(out.pattern, field);
  } else {
    const auto marks = matern_k(out.pattern, field, level);
    out.retained.resize(out.pattern.size());
    for (std::size_t i = 0; i < out.pattern.size(); ++i)
      out.retained[i] = marks.at(static_cast<std::uint32_t>(i), level);
  }
  return out;
}

Estimate estimate_gf(const ModelSpec& spec, const TestFunction& v, const RunOptions& opts) {
  spec.validate();
  require_replicates(opts);
  check_support_inside(spec, v);
  if (v.is_one()) {
    Estimate e;
    e.mean = 1.0;
    e.level = opts.level;
    e.replicates = opts.replicates;
    e.seed = opts.seed;
    return e;
  }
  const auto cols = replicate_columns(opts, 1, [&](std::size_t, const SeedSpec& s, double* row) {
    const auto real = simulate(spec, s);
    double p = 1.0;
    for (std::size_t i = 0; i < real.pattern.size() && p > 0.0; ++i)
      if (real.retained[i]) p *= v.eval(real.pattern.points[i].pos, spec.window);
    row[0] = p;
  });
  return to_estimate(cols[0], opts);
}

Estimate estimate_intensity(const ModelSpec& spec, const Box& region, const RunOptions& opts) {
  spec.validate();
  require_replicates(opts);
  if (!(region.volume() > 0.0)) throw InvalidArgument("intensity region is empty");
  const Box core = spec.window.core();
  for (int a = 0; a < spec.dim(); ++a)
    if (region.lo[a] < core.lo[a] - 1e-12 || region.hi[a] > core.hi[a] + 1e-12)
      throw InvalidArgument("intensity region must lie in the core window");
  const double vol = region.volume();
  const auto cols = replicate_columns(opts, 1, [&](std::size_t, const SeedSpec& s, double* row) {
    const auto real = simulate(spec, s);
    double n = 0.0;
    for (std::size_t i = 0; i < real.pattern.size(); ++i)
      if (real.retained[i] && region.contains(real.pattern.points[i].pos)) n += 1.0;
    row[0] = n / vol;
  });
  return to_estimate(cols[0], opts);
}

Estimate estimate_palm_gf(const ModelSpec& spec, const TestFunction& v, const Position& center,
                          double delta, const RunOptions& opts) {
  spec.validate();
  require_replicates(opts);
  check_support_inside(spec, v);
  if (delta <= 0.0) delta = spec.kernel.cutoff(spec.dim()) / 20.0;
  if (!(delta > 0.0)) throw InvalidArgument("ball radius must be > 0");
  if (!spec.window.in_core(center)) throw InvalidArgument("Palm centre must lie in the core window");
  std::vector<double> num(opts.replicates), den(opts.replicates);
  parallel_for(opts.replicates, opts.threads, [&](std::size_t r) {
    const auto real = simulate(spec, replicate_seed_of(opts.seed, r));
    const auto ret = collect(real);
    double nsum = 0.0, count = 0.0;
    for (std::size_t i = 0; i < ret.pos.size(); ++i) {
      if (spec.window.distance2(ret.pos[i], center) >= delta * delta) continue;
      count += 1.0;
      double p = 1.0;
      for (std::size_t j = 0; j < ret.pos.size() && p > 0.0; ++j)
        if (j != i) p *= v.eval(ret.pos[j], spec.window);
      nsum += p;
    }
    num[r] = nsum;
    den[r] = count;
  });
  return make_ratio_estimate(num, den, opts);
}

namespace {

ModelSpec widened(const ModelSpec& spec, double horizon) {
  ModelSpec s = spec;
  s.t = horizon;
  return s;
}

std::vector<std::pair<Position, double>> deficiency_nodes(const TestFunction& v,
                                                          const IntensityModel& intensity,
                                                          int nodes) {
  std::vector<std::pair<Position, double>> out;
  if (v.is_one()) return out;
  for (auto [x, w] : support_nodes({&v}, intensity, nodes)) {
    const double d = 1.0 - v(x);
    if (d != 0.0) out.emplace_back(x, w * d);
  }
  return out;
}

}  // namespace

CheckReport check_ode_inf(const ModelSpec& spec, const TestFunction& v, double t,
                          const RunOptions& opts, const OdeOptions& ode) {
  spec.validate();
  require_replicates(opts);
  check_support_inside(spec, v);
  if (spec.model != Model::maternInf) throw InvalidArgument("check_ode_inf needs the maternInf model");
  if (!(ode.delta > 0.0) || !(t - ode.delta > 0.0)) throw InvalidArgument("need t - delta > 0");
  const double dt = ode.delta;
  const ModelSpec wide = widened(spec, t + dt);
  const auto nodes = deficiency_nodes(v, spec.intensity, ode.nodes);
  const Window& w = spec.window;

  const auto cols = replicate_columns(opts, 3, [&](std::size_t, const SeedSpec& s, double* row) {
    const auto ret = collect(simulate(wide, s));
    double fp = 1.0, fm = 1.0;
    for (std::size_t i = 0; i < ret.pos.size(); ++i) {
      const double vi = v.eval(ret.pos[i], w);
      fp *= vi;
      if (ret.timer[i] < t - dt) fm *= vi;
    }
    double integral = 0.0;
    for (const auto& [x, wt] : nodes) {
      double p = 1.0;
      for (std::size_t i = 0; i < ret.pos.size() && ret.timer[i] < t && p > 0.0; ++i)
        p *= v.eval(ret.pos[i], w) * (1.0 - kernel_at(spec.kernel, w, x, ret.pos[i]));
      integral += wt * p;
    }
    row[0] = (fp - fm) / (2.0 * dt);
    row[1] = integral;
    row[2] = row[0] + integral;
  });
  CheckReport rep;
  rep.check = "ode";
  rep.inputs = {{"t", t}, {"delta", dt}, {"replicates", static_cast<double>(opts.replicates)}};
  rep.details = {{"derivative", cols[0].mean}, {"integral", cols[1].mean}};
  rep.seed = opts.seed;
  rep = verdict(rep, cols[2]);
  if (cols[1].mean != 0.0 && 3.0 * cols[2].sigma > 0.5 * std::abs(cols[1].mean)) {
    rep.pass = false;
    rep.note = "confidence interval too wide for a meaningful check; increase replicates";
  }
  return rep;
}

CheckReport check_ode_g(const ModelSpec& spec, const std::vector<TestFunction>& vs, double t,
                        const RunOptions& opts, const OdeOptions& ode) {
  spec.validate();
  require_replicates(opts);
  if (vs.empty()) throw InvalidArgument("g_k needs k+1 test functions");
  for (const auto& v : vs) check_support_inside(spec, v);
  const int K = static_cast<int>(vs.size()) - 1;
  if (!(ode.delta > 0.0) || !(t - ode.delta > 0.0)) throw InvalidArgument("need t - delta > 0");
  const double dt = ode.delta;
  const ModelSpec wide = widened(spec, t + dt);
  const Window& w = spec.window;

  const auto cols = replicate_columns(opts, 3, [&](std::size_t, const SeedSpec& s, double* row) {
    Realization real;
    real.pattern = sample_poisson(wide.window, wide.intensity, wide.t, s);
    const ContentionField field(spec.kernel, s, w);
    const auto marks = matern_k(real.pattern, field, K);
    const auto classes = classify_prefix(marks, K);
    const auto pts = collect(real, &classes);
    auto g_at = [&](double tau, const std::vector<TestFunction>& args) {
      double p = 1.0;
      for (std::size_t i = 0; i < pts.pos.size() && pts.timer[i] < tau && p > 0.0; ++i)
        p *= args[static_cast<std::size_t>(pts.cls[i])].eval(pts.pos[i], w);
      return p;
    };
    const GEstimator est = [&](double, const std::vector<TestFunction>& args) {
      return Measured{g_at(t, args), 0.0, 0.0};
    };
    row[0] = (g_at(t + dt, vs) - g_at(t - dt, vs)) / (2.0 * dt);
    row[1] = gk_rhs(t, vs, spec.intensity, spec.kernel, est, ode.nodes).value;
    row[2] = row[0] - row[1];
  });
  CheckReport rep;
  rep.check = "odek";
  rep.inputs = {{"t", t}, {"delta", dt}, {"k", K}, {"replicates", static_cast<double>(opts.replicates)}};
  rep.details = {{"derivative", cols[0].mean}, {"rhs", cols[1].mean}};
  rep.seed = opts.seed;
  rep = verdict(rep, cols[2]);
  if (cols[1].mean != 0.0 && 3.0 * cols[2].sigma > 0.5 * std::abs(cols[1].mean)) {
    rep.pass = false;
    rep.note = "confidence interval too wide for a meaningful check; increase replicates";
  }
  return rep;
}

CheckReport check_ode_k(const ModelSpec& spec, const TestFunction& v, double t,
                        const RunOptions& opts, const OdeOptions& ode) {
  const int K = spec.level();
  if (K < 0) throw InvalidArgument("check_ode_k needs a k-Matern model");
  return check_ode_g(spec, fk_embedding(K, v), t, opts, ode);
}

QuasiEnvelope quasi_poisson_envelope(double eps, double deficiency, double weighted_mass) {
  if (!(eps > 0.0)) throw InvalidArgument("epsilon must be > 0");
  const double x = eps * deficiency;
  const double theta = (std::expm1(x) - x) / eps;
  return {deficiency * std::exp(-eps * weighted_mass) - theta, deficiency + theta};
}

std::vector<double> intercept_weights(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) throw InvalidArgument("need at least two abscissae");
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double sxx = 0.0;
  for (double x : xs) sxx += (x - mx) * (x - mx);
  if (sxx == 0.0) throw InvalidArgument("abscissae must differ");
  std::vector<double> w;
  for (double x : xs) w.push_back(1.0 / n - mx * (x - mx) / sxx);
  return w;
}

CheckReport check_quasi_poisson(const ModelSpec& spec, const TestFunction& v,
                                const std::vector<double>& eps_in, const RunOptions& opts) {
  spec.validate();
  require_replicates(opts);
  check_support_inside(spec, v);
  if (eps_in.size() < 2) throw InvalidArgument("need at least two epsilon values");
  std::vector<double> eps = eps_in;
  std::sort(eps.begin(), eps.end());
  const Box core = spec.window.core();
  const double NN = kernel_mass(spec.kernel, spec.dim(), MassScope::weighted, &spec.intensity, &core);
  for (double e : eps)
    if (!(e > 0.0) || (NN > 0.0 && e >= 0.1 / NN))
      throw InvalidArgument("epsilon values must lie in (0, 1/(10 N))");
  const double D = v.deficiency(spec.intensity);
  const auto weights = intercept_weights(eps);
  const ModelSpec wide = widened(spec, eps.back());
  const std::size_t m = eps.size();

  const auto cols = replicate_columns(opts, m + 1, [&](std::size_t, const SeedSpec& s, double* row) {
    const auto ret = collect(simulate(wide, s));
    double intercept = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double p = 1.0;
      for (std::size_t i = 0; i < ret.pos.size() && ret.timer[i] < eps[j]; ++i)
        p *= v.eval(ret.pos[i], spec.window);
      row[j] = (1.0 - p) / eps[j];
      intercept += weights[j] * row[j];
    }
    row[m] = intercept;
  });

  CheckReport rep;
  rep.check = "quasi";
  rep.seed = opts.seed;
  rep.inputs = {{"deficiency", D}, {"weighted_mass", NN},
                {"replicates", static_cast<double>(opts.replicates)}};
  bool inside = true;
  for (std::size_t j = 0; j < m; ++j) {
    const auto env = quasi_poisson_envelope(eps[j], D, NN);
    const std::string tag = "eps" + std::to_string(j);
    rep.inputs[tag] = eps[j];
    rep.details[tag + "_value"] = cols[j].mean;
    rep.details[tag + "_sigma"] = cols[j].sigma;
    rep.details[tag + "_lower"] = env.lower;
    rep.details[tag + "_upper"] = env.upper;
    if (cols[j].mean < env.lower - 3.0 * cols[j].sigma || cols[j].mean > env.upper + 3.0 * cols[j].sigma)
      inside = false;
  }
  const Summary& icpt = cols[m];
  rep.value = -icpt.mean;
  rep.sigma = icpt.sigma;
  rep.details["target_slope"] = -D;
  rep.details["inside_envelopes"] = inside ? 1.0 : 0.0;
  const bool slope_ok = icpt.sigma > 0.0 ? std::abs(icpt.mean - D) < 3.0 * icpt.sigma
                                         : std::abs(icpt.mean - D) < 1e-12;
  rep.pass = inside && slope_ok;
  if (!inside) rep.note = "estimate outside envelope";
  return rep;
}

Density1dResult packing_density_1d(double length, double t, const RunOptions& opts, double lambda,
                                   bool fill_gaps) {
  if (!(length > 2.0)) throw InvalidArgument("ring length must exceed two rod lengths");
  if (!(t >= 0.0) || !(lambda >= 0.0)) throw InvalidArgument("t and lambda must be >= 0");
  require_replicates(opts);
  ModelSpec spec;
  spec.window = Window::segment(length, BoundaryMode::torus);
  spec.intensity = IntensityModel::homogeneous(lambda);
  spec.kernel = ContentionKernel::hard_disc(0.5);
  spec.model = Model::maternInf;
  spec.t = t;

  const auto cols = replicate_columns(opts, 2, [&](std::size_t, const SeedSpec& s, double* row) {
    const auto real = simulate(spec, s);
    std::vector<double> xs;
    for (std::size_t i = 0; i < real.pattern.size(); ++i)
      if (real.retained[i]) xs.push_back(real.pattern.points[i].pos[0]);
    std::sort(xs.begin(), xs.end());
    std::uint64_t draws = 0;
    auto uniform = [&] { return counter_uniform(s.master_seed, stream::aux, draws++, 0); };
    double count = static_cast<double>(xs.size());
    bool saturated = !xs.empty();
    std::vector<std::pair<double, double>> gaps;  // (left centre, gap length)
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double next = i + 1 < xs.size() ? xs[i + 1] : xs[0] + length;
      const double g = next - xs[i];
      if (g > 2.0) saturated = false;
      gaps.emplace_back(xs[i], g);
    }
    if (fill_gaps) {
      if (xs.empty()) {
        gaps.emplace_back(0.0, length);
        count += 1.0;
      }
      // Later arrivals in a gap land uniformly in its admissible part until none remains.
      while (!gaps.empty()) {
        const auto [a, g] = gaps.back();
        gaps.pop_back();
        if (!(g > 2.0)) continue;
        const double x = a + 1.0 + uniform() * (g - 2.0);
        count += 1.0;
        gaps.emplace_back(a, x - a);
        gaps.emplace_back(x, a + g - x);
      }
    }
    row[0] = count / length;
    row[1] = saturated ? 1.0 : 0.0;
  });
  Density1dResult out;
  out.density = to_estimate(cols[0], opts);
  out.replicates = opts.replicates;
  out.saturated = static_cast<std::size_t>(std::llround(cols[1].mean * static_cast<double>(opts.replicates)));
  return out;
}

Estimate blocked_fraction_2d(const BlockedOptions& bo, const RunOptions& opts) {
  require_replicates(opts);
  if (!(bo.radius > 0.0) || !(bo.side > 4.0 * bo.radius) || !(bo.lambda_n >= 0.0))
    throw InvalidArgument("blocked fraction needs r > 0, side > 4r and lambda N >= 0");
  if (bo.model != Model::matern1 && bo.model != Model::maternInf)
    throw InvalidArgument("blocked fraction supports matern1 and maternInf");
  const double reach = 2.0 * bo.radius;
  const double N = M_PI * reach * reach;
  if (bo.require_jamming && -std::expm1(-bo.lambda_n) < 0.99)
    throw InvalidArgument("not in the jamming regime: retained intensity is not within 1% of 1/N");
  ModelSpec spec;
  spec.window = Window::square(bo.side, BoundaryMode::torus);
  spec.intensity = IntensityModel::homogeneous(bo.lambda_n / N);
  spec.kernel = ContentionKernel::hard_disc(bo.radius);
  spec.model = bo.model;
  spec.t = 1.0;
  const double step = bo.grid_step > 0.0 ? bo.grid_step : reach / 20.0;
  const int cells = std::max(1, static_cast<int>(std::round(bo.side / step)));
  const double h = bo.side / cells;
  const Box region = spec.window.region();

  const auto cols = replicate_columns(opts, 1, [&](std::size_t, const SeedSpec& s, double* row) {
    const auto real = simulate(spec, s);
    std::vector<Position> kept;
    for (std::size_t i = 0; i < real.pattern.size(); ++i)
      if (real.retained[i]) kept.push_back(real.pattern.points[i].pos);
    NeighborGrid grid(region, reach, true, kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) grid.insert(static_cast<std::uint32_t>(i), kept[i]);
    std::size_t blocked = 0;
    for (int ix = 0; ix < cells; ++ix)
      for (int iy = 0; iy < cells; ++iy) {
        const Position p{region.lo[0] + (ix + 0.5) * h, region.lo[1] + (iy + 0.5) * h};
        bool hit = false;
        grid.for_each_near(p, [&](std::uint32_t j) {
          if (!hit && spec.window.distance2(p, kept[j]) < reach * reach) hit = true;
        });
        blocked += hit ? 1 : 0;
      }
    row[0] = static_cast<double>(blocked) / (static_cast<double>(cells) * cells);
  });
  return to_estimate(cols[0], opts);
}

MomentDensity estimate_factorial_density(const ModelSpec& spec, int n, const FactorialGrid& fg,
                                         const RunOptions& opts) {
  spec.validate();
  require_replicates(opts);
  MomentDensity out;
  out.order = n;
  out.t = spec.t;
  const int dim = spec.dim();
  if (n == 1) {
    const Box& d = fg.domain;
    if (!(d.volume() > 0.0) || fg.cells_per_axis < 1) throw InvalidArgument("empty density grid");
    const Box core = spec.window.core();
    for (int a = 0; a < dim; ++a)
      if (d.lo[a] < core.lo[a] - 1e-12 || d.hi[a] > core.hi[a] + 1e-12)
        throw InvalidArgument("density grid must lie in the core window");
    const int c = fg.cells_per_axis;
    const int ny = dim == 2 ? c : 1;
    const double wx = (d.hi[0] - d.lo[0]) / c;
    const double wy = dim == 2 ? (d.hi[1] - d.lo[1]) / c : 1.0;
    const double cell_vol = wx * wy;
    const std::size_t ncell = static_cast<std::size_t>(c) * ny;
    const auto cols = replicate_columns(opts, ncell, [&](std::size_t, const SeedSpec& s, double* row) {
      const auto real = simulate(spec, s);
      for (std::size_t i = 0; i < real.pattern.size(); ++i) {
        if (!real.retained[i]) continue;
        const auto& p = real.pattern.points[i].pos;
        if (!d.contains(p)) continue;
        const int ix = std::min(c - 1, static_cast<int>((p[0] - d.lo[0]) / wx));
        const int iy = dim == 2 ? std::min(c - 1, static_cast<int>((p[1] - d.lo[1]) / wy)) : 0;
        row[static_cast<std::size_t>(iy) * c + ix] += 1.0 / cell_vol;
      }
    });
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < c; ++ix) {
        const auto& s = cols[static_cast<std::size_t>(iy) * c + ix];
        out.nodes.push_back({d.lo[0] + (ix + 0.5) * wx, dim == 2 ? d.lo[1] + (iy + 0.5) * wy : 0.0});
        out.values.push_back(s.mean);
        out.sigma.push_back(s.sigma);
        out.undersampled.push_back(s.mean * cell_vol * static_cast<double>(s.n) < fg.min_count);
      }
    return out;
  }
  if (n != 2) throw InvalidArgument("factorial densities are available for n in {1, 2}");
  if (spec.window.mode() != BoundaryMode::torus || !spec.intensity.is_homogeneous())
    throw InvalidArgument("pair density estimation needs a homogeneous model on a torus");
  const Box region = spec.window.region();
  for (int a = 0; a < dim; ++a)
    if (!(fg.r_max > 0.0) || fg.r_max >= 0.5 * (region.hi[a] - region.lo[a]))
      throw InvalidArgument("r_max must lie in (0, half the torus side)");
  if (fg.bins < 1) throw InvalidArgument("need at least one bin");
  const double bw = fg.r_max / fg.bins;
  const double vol = spec.window.volume();
  const auto cols = replicate_columns(opts, static_cast<std::size_t>(fg.bins),
                                      [&](std::size_t, const SeedSpec& s, double* row) {
    const auto real = simulate(spec, s);
    std::vector<Position> kept;
    for (std::size_t i = 0; i < real.pattern.size(); ++i)
      if (real.retained[i]) kept.push_back(real.pattern.points[i].pos);
    NeighborGrid grid(region, fg.r_max, true, kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) grid.insert(static_cast<std::uint32_t>(i), kept[i]);
    for (std::size_t i = 0; i < kept.size(); ++i)
      grid.for_each_near(kept[i], [&](std::uint32_t j) {
        if (j == i) return;
        const double d = std::sqrt(spec.window.distance2(kept[i], kept[j]));
        if (d < fg.r_max) row[std::min(fg.bins - 1, static_cast<int>(d / bw))] += 1.0;
      });
  });
  for (int b = 0; b < fg.bins; ++b) {
    const double r0 = b * bw, r1 = r0 + bw;
    const double shell = dim == 2 ? M_PI * (r1 * r1 - r0 * r0) : 2.0 * bw;
    const double scale = 1.0 / (vol * shell);
    out.nodes.push_back({r0 + 0.5 * bw, 0.0});
    out.values.push_back(cols[b].mean * scale);
    out.sigma.push_back(cols[b].sigma * scale);
    out.undersampled.push_back(cols[b].mean * static_cast<double>(cols[b].n) < fg.min_count);
  }
  return out;
}

CheckReport check_palm_identity(const ModelSpec& spec, const TestFunction& v,
                                const PalmCheckOptions& po, const RunOptions& opts) {
  spec.validate();
  require_replicates(opts);
  check_support_inside(spec, v);
  if (spec.model != Model::maternInf) throw InvalidArgument("the Palm identity check needs maternInf");
  if (!(po.delta > 0.0)) throw InvalidArgument("ball radius must be > 0");
  if (!(spec.t > 0.0)) throw InvalidArgument("t must be > 0");
  const Window& w = spec.window;
  const int dim = spec.dim();

  std::vector<std::pair<Position, double>> ball;
  if (dim == 1) {
    for (auto [x, wt] : gauss_legendre(2 * po.space_nodes, po.center[0] - po.delta, po.center[0] + po.delta))
      ball.push_back({{x, 0.0}, wt * spec.intensity.at({x, 0.0})});
  } else {
    const int m = 4 * po.space_nodes;
    for (auto [rho, wt] : gauss_legendre(po.space_nodes, 0.0, po.delta))
      for (int j = 0; j < m; ++j) {
        const double phi = 2.0 * M_PI * (j + 0.5) / m;
        const Position y{po.center[0] + rho * std::cos(phi), po.center[1] + rho * std::sin(phi)};
        ball.push_back({y, wt * rho * 2.0 * M_PI / m * spec.intensity.at(y)});
      }
  }
  const auto xnodes = deficiency_nodes(v, spec.intensity, po.space_nodes);
  const auto taus = gauss_legendre(po.tau_nodes, 0.0, spec.t);

  const auto cols = replicate_columns(opts, 4, [&](std::size_t, const SeedSpec& s, double* row) {
    const auto ret = collect(simulate(spec, s));
    const std::size_t n = ret.pos.size();
    std::vector<double> vz(n);
    std::vector<std::uint8_t> in_ball(n);
    for (std::size_t i = 0; i < n; ++i) {
      vz[i] = v.eval(ret.pos[i], w);
      in_ball[i] = w.distance2(ret.pos[i], po.center) < po.delta * po.delta;
    }
    auto others = [&](std::size_t y, std::size_t upto, const Position* x) {
      double p = 1.0;
      for (std::size_t j = 0; j < upto && p > 0.0; ++j) {
        if (j == y) continue;
        p *= vz[j];
        if (x) p *= 1.0 - kernel_at(spec.kernel, w, *x, ret.pos[j]);
      }
      return p;
    };
    double L = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (in_ball[i]) L += others(i, n, nullptr);
    double R1 = 0.0, R2 = 0.0;
    for (const auto& [tau, wt] : taus) {
      const std::size_t upto =
          static_cast<std::size_t>(std::lower_bound(ret.timer.begin(), ret.timer.end(), tau) - ret.timer.begin());
      for (const auto& [y, wy] : ball) R1 += wt * wy * others(n, upto, &y);
      for (const auto& [x, wx] : xnodes) {
        double inner = 0.0;
        for (std::size_t i = 0; i < upto; ++i)
          if (in_ball[i])
            inner += (1.0 - kernel_at(spec.kernel, w, x, ret.pos[i])) * others(i, upto, &x);
        R2 += wt * wx * inner;
      }
    }
    row[0] = L;
    row[1] = R1;
    row[2] = R2;
    row[3] = L - R1 + R2;
  });
  CheckReport rep;
  rep.check = "palm";
  rep.seed = opts.seed;
  rep.inputs = {{"t", spec.t}, {"delta", po.delta}, {"center_x", po.center[0]}, {"center_y", po.center[1]},
                {"replicates", static_cast<double>(opts.replicates)}};
  rep.details = {{"lhs", cols[0].mean}, {"rhs_first", cols[1].mean}, {"rhs_second", cols[2].mean}};
  return verdict(rep, cols[3]);
}

Estimate mean_cluster_size(const ModelSpec& spec, const RunOptions& opts) {
  spec.validate();
  require_replicates(opts);
  std::vector<double> num(opts.replicates), den(opts.replicates);
  parallel_for(opts.replicates, opts.threads, [&](std::size_t r) {
    const SeedSpec s = replicate_seed_of(opts.seed, r);
    const auto pattern = sample_poisson(spec.window, spec.intensity, spec.t, s);
    const ContentionField field(spec.kernel, s, spec.window);
    const auto sizes = cluster_sizes(build_conflict_graph(pattern, field));
    num[r] = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
    den[r] = static_cast<double>(sizes.size());
  });
  return make_ratio_estimate(num, den, opts);
}

}  // namespace rpack
