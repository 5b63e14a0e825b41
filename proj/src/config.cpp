#include "rpack/config.hpp"

#include <cstdio>
#include <set>

#include "rpack/errors.hpp"

namespace rpack {

using nlohmann::json;

std::string config_hash(const json& tree) {
  const std::string s = tree.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

/// Object reader that remembers which keys were read and rejects the rest.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidArgument(where() + " must be an object");
  }
  ~Obj() = default;

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw InvalidArgument(name(key) + " must be a number");
    return v.get<double>();
  }
  long long integer(const std::string& key, long long def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw InvalidArgument(name(key) + " must be an integer");
    return v.get<long long>();
  }
  std::uint64_t unsigned_int(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw InvalidArgument(name(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw InvalidArgument(name(key) + " must be true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw InvalidArgument(name(key) + " must be a string");
    return v.get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw InvalidArgument("unknown config key '" + name(it.key()) + "'");
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Position position(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || j.size() > 2) throw InvalidArgument(what + " must be [x] or [x, y]");
  Position p{0.0, 0.0};
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidArgument(what + " entries must be numbers");
    p[i] = j[i].get<double>();
  }
  return p;
}

Box box_of(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || j.size() > 2) throw InvalidArgument(what + " must be [[lo,hi]] or [[lo,hi],[lo,hi]]");
  Box b;
  b.dim = static_cast<int>(j.size());
  for (std::size_t a = 0; a < j.size(); ++a) {
    if (!j[a].is_array() || j[a].size() != 2 || !j[a][0].is_number() || !j[a][1].is_number())
      throw InvalidArgument(what + " axes must be [lo, hi] pairs");
    b.lo[a] = j[a][0].get<double>();
    b.hi[a] = j[a][1].get<double>();
    if (!(b.hi[a] > b.lo[a])) throw InvalidArgument(what + " axes need lo < hi");
  }
  return b;
}

ContentionKernel kernel_of(const json& j) {
  Obj o(j, "kernel");
  const std::string type = o.string("type", "hard_disc");
  ContentionKernel k;
  if (type == "hard_disc") {
    k = ContentionKernel::hard_disc(o.number("r", 0.5));
  } else if (type == "bernoulli_disc") {
    k = ContentionKernel::bernoulli_disc(o.number("r", 0.5), o.number("q", 1.0));
  } else if (type == "rayleigh") {
    k = ContentionKernel::rayleigh(o.number("theta", 1.0));
  } else if (type == "none") {
    k = ContentionKernel::none();
  } else {
    throw InvalidArgument("kernel.type must be hard_disc, bernoulli_disc, rayleigh or none");
  }
  if (o.has("trunc_eps")) k = k.with_trunc_eps(o.number("trunc_eps", ContentionKernel::default_trunc_eps));
  o.finish();
  return k;
}

Window window_of(const json& j, const ContentionKernel& kernel) {
  Obj o(j, "window");
  const Box b = box_of(o.has("bounds") ? o.at("bounds") : json::array({{0.0, 10.0}, {0.0, 10.0}}),
                       "window.bounds");
  const std::string mode = o.string("boundary", "torus");
  BoundaryMode m;
  if (mode == "torus") m = BoundaryMode::torus;
  else if (mode == "dilate") m = BoundaryMode::dilate;
  else throw InvalidArgument("window.boundary must be torus or dilate");
  const double margin = o.number("margin", m == BoundaryMode::dilate ? kernel.cutoff(b.dim) : 0.0);
  o.finish();
  return Window::box(b, m, margin);
}

TestFunction test_function_of(const json& j, int dim, const ContentionKernel& kernel) {
  if (j.is_string()) {
    if (j.get<std::string>() != "one") throw InvalidArgument("v must be \"one\" or an object");
    return TestFunction::one(dim);
  }
  Obj o(j, "v");
  std::vector<Region> regions;
  if (o.has("regions")) {
    const auto& arr = o.at("regions");
    if (!arr.is_array()) throw InvalidArgument("v.regions must be an array");
    for (const auto& r : arr) {
      Obj ro(r, "v.regions[]");
      const double c = ro.number("c", 1.0);
      if (ro.has("box")) {
        const Box b = box_of(ro.at("box"), "v.regions[].box");
        if (b.dim != dim) throw InvalidArgument("region dimension differs from the window");
        regions.push_back(Region::make_box(b, c));
      } else if (ro.has("disc")) {
        Obj d(ro.at("disc"), "v.regions[].disc");
        const Position ctr = position(d.at("center"), "disc center");
        regions.push_back(Region::make_disc(dim, ctr, d.number("radius", 1.0), c));
        d.finish();
      } else {
        throw InvalidArgument("each region needs a box or a disc");
      }
      ro.finish();
    }
  }
  TestFunction v = regions.empty() ? TestFunction::one(dim) : TestFunction::indicator_mix(regions);
  if (o.has("anchors")) {
    std::vector<Position> xs;
    for (const auto& a : o.at("anchors")) xs.push_back(position(a, "v.anchors[]"));
    v = v.with_anchors(xs, kernel);
  }
  o.finish();
  return v;
}

}  // namespace

RunConfig parse_config(const json& tree) {
  RunConfig cfg;
  cfg.tree = tree.is_null() ? json::object() : tree;
  Obj top(cfg.tree, "");

  ModelSpec& m = cfg.model;
  if (top.has("kernel")) m.kernel = kernel_of(top.at("kernel"));
  m.window = window_of(top.has("window") ? top.at("window") : json::object(), m.kernel);
  if (top.has("intensity")) {
    Obj io(top.at("intensity"), "intensity");
    const double rate = io.number("rate", 1.0);
    if (!(rate >= 0.0)) throw InvalidArgument("intensity.rate must be >= 0");
    m.intensity = IntensityModel::homogeneous(rate);
    io.finish();
  }
  m.model = parse_model(top.string("model", "maternInf"));
  m.k = static_cast<int>(top.integer("k", 1));
  m.t = top.number("t", 1.0);
  m.validate();
  if (top.has("v")) cfg.v = test_function_of(top.at("v"), m.dim(), m.kernel);
  else cfg.v = TestFunction::one(m.dim());

  cfg.run.seed = top.unsigned_int("seed", 1);
  cfg.run.replicates = top.unsigned_int("replicates", 1000);
  cfg.run.threads = static_cast<unsigned>(top.unsigned_int("threads", 0));
  cfg.run.level = top.number("level", 0.95);
  if (!(cfg.run.level > 0.0 && cfg.run.level < 1.0)) throw InvalidArgument("level must lie in (0,1)");
  cfg.output = top.string("output", "");

  if (top.has("gf")) {
    Obj g(top.at("gf"), "gf");
    cfg.order = static_cast<int>(g.integer("order", cfg.order));
    cfg.cubature.samples = g.unsigned_int("samples", cfg.cubature.samples);
    cfg.cubature.inner_samples = g.unsigned_int("inner_samples", cfg.cubature.inner_samples);
    cfg.cubature.max_steps = static_cast<int>(g.integer("max_steps", cfg.cubature.max_steps));
    cfg.cubature.step_fraction = g.number("step_fraction", cfg.cubature.step_fraction);
    g.finish();
  }
  if (cfg.order < 1) throw InvalidArgument("gf.order must be >= 1");
  if (!(cfg.cubature.step_fraction > 0.0 && cfg.cubature.step_fraction < 1.0))
    throw InvalidArgument("gf.step_fraction must lie in (0,1)");
  cfg.cubature.seed = cfg.run.seed;
  cfg.cubature.threads = cfg.run.threads;

  if (top.has("check")) {
    Obj c(top.at("check"), "check");
    cfg.ode.delta = c.number("delta", cfg.ode.delta);
    cfg.ode.nodes = static_cast<int>(c.integer("nodes", cfg.ode.nodes));
    cfg.ode_t = c.number("t", cfg.ode_t);
    if (c.has("eps")) {
      cfg.eps.clear();
      for (const auto& e : c.at("eps")) {
        if (!e.is_number()) throw InvalidArgument("check.eps entries must be numbers");
        cfg.eps.push_back(e.get<double>());
      }
    }
    if (c.has("palm")) {
      Obj p(c.at("palm"), "check.palm");
      if (p.has("center")) cfg.palm.center = position(p.at("center"), "check.palm.center");
      cfg.palm.delta = p.number("delta", cfg.palm.delta);
      cfg.palm.tau_nodes = static_cast<int>(p.integer("tau_nodes", cfg.palm.tau_nodes));
      cfg.palm.space_nodes = static_cast<int>(p.integer("space_nodes", cfg.palm.space_nodes));
      p.finish();
    }
    if (c.has("density1d")) {
      Obj d(c.at("density1d"), "check.density1d");
      cfg.length = d.number("length", cfg.length);
      cfg.t_saturation = d.number("t", cfg.t_saturation);
      cfg.fill_gaps = d.boolean("fill_gaps", cfg.fill_gaps);
      d.finish();
    }
    if (c.has("blocked2d")) {
      Obj b(c.at("blocked2d"), "check.blocked2d");
      cfg.blocked.radius = b.number("radius", cfg.blocked.radius);
      cfg.blocked.lambda_n = b.number("lambda_n", cfg.blocked.lambda_n);
      cfg.blocked.side = b.number("side", cfg.blocked.side);
      cfg.blocked.grid_step = b.number("grid_step", cfg.blocked.grid_step);
      cfg.blocked.model = parse_model(b.string("model", model_name(cfg.blocked.model)));
      cfg.blocked.require_jamming = b.boolean("require_jamming", cfg.blocked.require_jamming);
      b.finish();
    }
    c.finish();
  }
  if (cfg.ode.nodes < 2 || cfg.ode.nodes > 30) throw InvalidArgument("check.nodes must lie in [2, 30]");

  cfg.grid.domain = m.window.core();
  if (top.has("moments")) {
    Obj mo(top.at("moments"), "moments");
    cfg.moment_order = static_cast<int>(mo.integer("order", 1));
    cfg.grid.cells_per_axis = static_cast<int>(mo.integer("cells", cfg.grid.cells_per_axis));
    if (mo.has("domain")) cfg.grid.domain = box_of(mo.at("domain"), "moments.domain");
    cfg.grid.r_max = mo.number("r_max", cfg.grid.r_max);
    cfg.grid.bins = static_cast<int>(mo.integer("bins", cfg.grid.bins));
    cfg.grid.min_count = mo.unsigned_int("min_count", cfg.grid.min_count);
    cfg.moment_series = mo.boolean("series", false);
    mo.finish();
  }

  if (top.has("simulate")) {
    Obj s(top.at("simulate"), "simulate");
    cfg.fixture = s.string("fixture", "");
    cfg.line_n = static_cast<int>(s.integer("line_n", cfg.line_n));
    cfg.levels = static_cast<int>(s.integer("levels", cfg.levels));
    s.finish();
  }
  if (!cfg.fixture.empty() && cfg.fixture != "line" && cfg.fixture != "pentagon")
    throw InvalidArgument("simulate.fixture must be line or pentagon");
  if (cfg.levels < 0 || cfg.levels > 64) throw InvalidArgument("simulate.levels must lie in [0, 64]");

  top.finish();
  // Output location and thread count do not change results.
  cfg.tree.erase("output");
  cfg.tree.erase("threads");
  cfg.hash = config_hash(cfg.tree);
  return cfg;
}

void set_config_key(json& tree, const std::string& dotted, const std::string& value) {
  if (tree.is_null()) tree = json::object();
  json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw InvalidArgument("bad config key '" + dotted + "'");
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    json& child = (*node)[key];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw InvalidArgument("config key '" + dotted + "' crosses a non-object");
    node = &child;
    start = dot + 1;
  }
}

json to_json(const Estimate& e) {
  return {{"mean", e.mean},         {"sigma", e.sigma}, {"half_width", e.half_width},
          {"level", e.level},       {"replicates", e.replicates}, {"seed", e.seed}};
}

json to_json(const GfEstimate& e) {
  json j = {{"method", method_name(e.method)}, {"t", e.t},         {"value", e.value},
            {"error", e.error},                {"sigma", e.sigma}, {"order", e.order},
            {"seed", e.seed},                  {"config_hash", e.config_hash}};
  if (e.steps > 0) j["steps"] = e.steps;
  return j;
}

json to_json(const CheckReport& r) {
  json j = {{"check", r.check}, {"inputs", r.inputs}, {"value", r.value},
            {"sigma", r.sigma}, {"pass", r.pass},     {"seed", r.seed}};
  if (!r.details.empty()) j["details"] = r.details;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

}  // namespace rpack
