#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rpack/config.hpp"
#include "rpack/errors.hpp"
#include "rpack/fixtures.hpp"
#include "rpack/io.hpp"
#include "rpack/packing.hpp"

using namespace rpack;
using nlohmann::json;

namespace {

constexpr double kRenyi = 0.74759;
constexpr double kRenyiTol = 0.01;
constexpr double kBlocked = 0.75;
constexpr double kBlockedTol = 0.02;

struct Globals {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<unsigned> threads;
  std::string output;
};

json load_tree(const Globals& g) {
  json tree = json::object();
  if (!g.config_path.empty()) {
    std::ifstream in(g.config_path);
    if (!in) throw InvalidArgument("cannot open config file " + g.config_path);
    tree = json::parse(in, nullptr, false);
    if (tree.is_discarded()) throw InvalidArgument("config file is not valid JSON: " + g.config_path);
  }
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + s + "'");
    set_config_key(tree, s.substr(0, eq), s.substr(eq + 1));
  }
  if (g.seed) tree["seed"] = *g.seed;
  if (g.replicates) tree["replicates"] = *g.replicates;
  if (g.threads) tree["threads"] = *g.threads;
  if (!g.output.empty()) tree["output"] = g.output;
  return tree;
}

/// Writes `text` to the configured output (or stdout) and a JSON envelope next to files.
void emit(const RunConfig& cfg, const std::string& text, const json& envelope) {
  if (cfg.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + cfg.output);
  out << text;
  if (!envelope.is_null()) {
    std::ofstream env(cfg.output + ".json", std::ios::binary);
    if (!env) throw std::runtime_error("cannot write " + cfg.output + ".json");
    env << envelope.dump(2) << '\n';
  }
}

void emit_json(const RunConfig& cfg, const json& j) { emit(cfg, j.dump(2) + "\n", json()); }

json base_envelope(const RunConfig& cfg) {
  return {{"config_hash", cfg.hash}, {"seed", cfg.run.seed}, {"config", cfg.tree}};
}

int cmd_simulate(const RunConfig& cfg) {
  TimedPattern pattern;
  ContentionKernel kernel = cfg.model.kernel;
  std::vector<std::string> labels;
  SeedSpec seed;
  seed.master_seed = cfg.run.seed;
  std::optional<ContentionField> field;
  if (!cfg.fixture.empty()) {
    Fixture f = cfg.fixture == "line" ? line_fixture(cfg.line_n) : pentagon_fixture();
    pattern = f.pattern;
    kernel = f.kernel;
    labels = f.labels;
    field.emplace(kernel, seed, pattern.window);
  } else {
    pattern = sample_poisson(cfg.model.window, cfg.model.intensity, cfg.model.t, seed);
    field.emplace(kernel, seed, cfg.model.window);
  }
  std::size_t ties = 0;
  timer_order(pattern, &ties);
  if (ties > 0) std::cerr << "warning: " << ties << " timer ties broken by id\n";
  const PatternMarks pm = compute_marks(pattern, *field, cfg.levels);

  std::ostringstream csv;
  write_pattern_csv(csv, pattern, pm);

  json env = base_envelope(cfg);
  env["points"] = pattern.size();
  env["levels"] = cfg.levels;
  env["ties"] = ties;
  json retained = json::object();
  auto ids_where = [&](auto pred) {
    json arr = json::array();
    for (std::size_t i = 0; i < pattern.size(); ++i)
      if (pred(i)) arr.push_back(labels.empty() ? json(pattern.points[i].id) : json(labels[i]));
    return arr;
  };
  for (int k = 0; k <= cfg.levels; ++k)
    retained[std::to_string(k)] = ids_where([&](std::size_t i) { return pm.marks.at(static_cast<std::uint32_t>(i), k) == 1; });
  retained["inf"] = ids_where([&](std::size_t i) { return pm.marks.einf[i] == 1; });
  env["retained"] = retained;
  if (!cfg.fixture.empty()) env["fixture"] = cfg.fixture;
  emit(cfg, csv.str(), env);
  return 0;
}

GfEstimate mc_estimate(const RunConfig& cfg) {
  const Estimate e = estimate_gf(cfg.model, cfg.v, cfg.run);
  GfEstimate g;
  g.method = GfMethod::monte_carlo;
  g.t = cfg.model.t;
  g.value = e.mean;
  g.sigma = e.sigma;
  g.error = e.half_width;
  g.seed = cfg.run.seed;
  g.config_hash = cfg.hash;
  return g;
}

int cmd_gf(const RunConfig& cfg, const std::string& method) {
  const auto& m = cfg.model;
  auto series = [&] {
    GfEstimate s = gf_series_inf(m.t, cfg.v, m.intensity, m.kernel, cfg.order, cfg.cubature);
    s.config_hash = cfg.hash;
    return s;
  };
  auto bounds = [&] {
    GfBounds b = gf_bounds_inf(m.t, cfg.v, m.intensity, m.kernel);
    b.lower.config_hash = b.upper.config_hash = cfg.hash;
    b.lower.seed = b.upper.seed = cfg.run.seed;
    return b;
  };
  if (method == "series") {
    emit_json(cfg, to_json(series()));
  } else if (method == "bounds") {
    const auto b = bounds();
    emit_json(cfg, {{"lower", to_json(b.lower)}, {"upper", to_json(b.upper)}, {"config_hash", cfg.hash}});
  } else if (method == "mc") {
    emit_json(cfg, to_json(mc_estimate(cfg)));
  } else {
    const auto b = bounds();
    const auto s = series();
    const auto mc = mc_estimate(cfg);
    const bool sandwich = b.lower.value - 3 * mc.sigma <= mc.value && mc.value <= b.upper.value + 3 * mc.sigma;
    const bool agree = std::abs(s.value - mc.value) <= s.error + 3 * std::hypot(s.sigma, mc.sigma);
    emit_json(cfg, {{"rows", {to_json(b.lower), to_json(s), to_json(mc), to_json(b.upper)}},
                    {"sandwich", sandwich},
                    {"series_agrees", agree},
                    {"config_hash", cfg.hash}});
  }
  return 0;
}

CheckReport run_check(const RunConfig& cfg, const std::string& which) {
  if (which == "ode") return check_ode_inf(cfg.model, cfg.v, cfg.ode_t, cfg.run, cfg.ode);
  if (which == "odek") return check_ode_k(cfg.model, cfg.v, cfg.ode_t, cfg.run, cfg.ode);
  if (which == "quasi") return check_quasi_poisson(cfg.model, cfg.v, cfg.eps, cfg.run);
  if (which == "palm") return check_palm_identity(cfg.model, cfg.v, cfg.palm, cfg.run);
  CheckReport r;
  r.check = which;
  r.seed = cfg.run.seed;
  if (which == "density1d") {
    const auto d = packing_density_1d(cfg.length, cfg.t_saturation, cfg.run, 1.0, cfg.fill_gaps);
    r.inputs = {{"length", cfg.length}, {"t", cfg.t_saturation}, {"replicates", double(cfg.run.replicates)},
                {"target", kRenyi}, {"tolerance", kRenyiTol}};
    r.value = d.density.mean;
    r.sigma = d.density.sigma;
    r.details = {{"saturated_before_fill", double(d.saturated)}, {"fill_gaps", cfg.fill_gaps ? 1.0 : 0.0}};
    r.pass = std::abs(r.value - kRenyi) <= kRenyiTol;
    if (!cfg.fill_gaps && d.saturated < d.replicates) {
      r.pass = false;
      r.note = "saturation not reached in " + std::to_string(d.replicates - d.saturated) + " of " +
               std::to_string(d.replicates) + " replicates";
    }
    return r;
  }
  if (which == "blocked2d") {
    const auto e = blocked_fraction_2d(cfg.blocked, cfg.run);
    r.inputs = {{"radius", cfg.blocked.radius}, {"lambda_n", cfg.blocked.lambda_n}, {"side", cfg.blocked.side},
                {"replicates", double(cfg.run.replicates)}, {"target", kBlocked}, {"tolerance", kBlockedTol}};
    r.value = e.mean;
    r.sigma = e.sigma;
    r.pass = std::abs(r.value - kBlocked) <= kBlockedTol;
    return r;
  }
  throw InvalidArgument("unknown check '" + which + "' (ode|odek|quasi|palm|density1d|blocked2d)");
}

int cmd_check(const RunConfig& cfg, const std::vector<std::string>& which, bool csv) {
  bool all = true;
  json reports = json::array();
  std::ostringstream rows;
  rows << "check,value,sigma,pass,seed,config_hash\n";
  for (const auto& w : which) {
    const CheckReport r = run_check(cfg, w);
    all = all && r.pass;
    json j = to_json(r);
    j["config_hash"] = cfg.hash;
    reports.push_back(j);
    rows << r.check << ',' << format_double(r.value) << ',' << format_double(r.sigma) << ','
         << (r.pass ? "true" : "false") << ',' << r.seed << ',' << cfg.hash << '\n';
  }
  if (csv) emit(cfg, rows.str(), base_envelope(cfg));
  else emit_json(cfg, reports.size() == 1 ? reports[0] : reports);
  return all ? 0 : 1;
}

int cmd_moments(const RunConfig& cfg) {
  const MomentDensity md = estimate_factorial_density(cfg.model, cfg.moment_order, cfg.grid, cfg.run);
  std::ostringstream out;
  const bool series = cfg.moment_series && cfg.moment_order == 1;
  if (cfg.moment_order == 1) {
    out << "x,y,value,sigma,undersampled";
    if (series) out << ",series,series_sigma,series_error";
    out << '\n';
  } else {
    out << "r,value,sigma,undersampled\n";
  }
  MomentEvaluator ev;
  ev.order = cfg.order;
  ev.cubature = cfg.cubature;
  ev.dim = cfg.model.dim();
  for (std::size_t i = 0; i < md.values.size(); ++i) {
    const auto& p = md.nodes[i];
    out << format_double(p[0]) << ',';
    if (cfg.moment_order == 1) out << format_double(p[1]) << ',';
    out << format_double(md.values[i]) << ',' << format_double(md.sigma[i]) << ','
        << int(md.undersampled[i]);
    if (series) {
      const double lam = cfg.model.intensity.at(p);
      const Measured m = moment_density_inf(cfg.model.t, p, cfg.model.intensity, cfg.model.kernel, ev);
      out << ',' << format_double(lam * m.value) << ',' << format_double(lam * m.sigma) << ','
          << format_double(lam * m.error);
    }
    out << '\n';
  }
  json env = base_envelope(cfg);
  env["order"] = cfg.moment_order;
  env["t"] = cfg.model.t;
  emit(cfg, out.str(), env);
  return 0;
}

int cmd_fixtures(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  struct Item {
    std::string name;
    json config;
  };
  const std::vector<Item> items{
      {"line", {{"simulate", {{"fixture", "line"}, {"line_n", 7}, {"levels", 3}}}}},
      {"pentagon", {{"simulate", {{"fixture", "pentagon"}, {"levels", 2}}}}},
  };
  for (const auto& it : items) {
    const fs::path cfg_path = fs::path(dir) / (it.name + ".config.json");
    std::ofstream(cfg_path) << it.config.dump(2) << '\n';
    json tree = it.config;
    tree["output"] = (fs::path(dir) / (it.name + ".csv")).string();
    cmd_simulate(parse_config(tree));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matern-type packing simulations, generating-functional evaluation and identity checks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_path, "JSON config file");
  app.add_option("--set", g.sets, "Override a config key, e.g. --set gf.order=16")->take_all();
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--replicates", g.replicates, "Monte Carlo replicates");
  app.add_option("--threads", g.threads, "Worker threads (default: RPACK_THREADS or all cores)");
  app.add_option("-o,--output", g.output, "Output file (default: stdout)");
  app.fallthrough();

  auto* sim = app.add_subcommand("simulate", "Sample a pattern and write it with its thinning marks");
  std::string method;
  auto* gf = app.add_subcommand("gf", "Generating functional of the infinite model");
  gf->add_option("method", method, "series|bounds|mc|all")
      ->required()
      ->check(CLI::IsMember({"series", "bounds", "mc", "all"}));
  std::vector<std::string> which;
  bool csv = false;
  auto* check = app.add_subcommand("check", "Run identity checks; exit 1 if any fails");
  check->add_option("which", which, "ode|odek|quasi|palm|density1d|blocked2d")
      ->required()
      ->check(CLI::IsMember({"ode", "odek", "quasi", "palm", "density1d", "blocked2d"}));
  check->add_flag("--csv", csv, "Emit one CSV summary row per check");
  auto* moments = app.add_subcommand("moments", "Estimate factorial moment densities");
  std::string dir = "fixtures";
  auto* fixtures = app.add_subcommand("fixtures", "Write the line and pentagon fixtures");
  fixtures->add_option("--dir", dir, "Target directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fixtures->parsed()) return cmd_fixtures(dir);
    const RunConfig cfg = parse_config(load_tree(g));
    if (sim->parsed()) return cmd_simulate(cfg);
    if (gf->parsed()) return cmd_gf(cfg, method);
    if (check->parsed()) return cmd_check(cfg, which, csv);
    if (moments->parsed()) return cmd_moments(cfg);
  } catch (const InvalidArgument& e) {
    std::cerr << json{{"error", "invalid_argument"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << json{{"error", "invalid_argument"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "runtime_error"}, {"message", e.what()}}.dump() << '\n';
    return 3;
  }
  return 2;
}
