#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gte/acreg.hpp"
#include "gte/json_io.hpp"
#include "gte/scenario.hpp"
#include "gte/transport.hpp"

using namespace gte;
namespace fs = std::filesystem;

namespace {

struct AssertionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::optional<int> refine;
  std::optional<double> tolerance;
  std::optional<std::size_t> dict_size;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

class Output {
public:
  Output(const Flags& flags, const Scenario* s) {
    std::string dir = "gte_out";
    if (s && s->doc.contains("output")) dir = as_string(s->doc["output"], "/output");
    if (flags.out) dir = *flags.out;
    dir_ = dir;
    fs::create_directories(dir_);
  }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << text;
  }
  void write_json(const std::string& name, const Json& j) const { write(name, j.dump(2) + "\n"); }

private:
  fs::path dir_;
};

double assertion(const Scenario& s, const std::string& key, double fallback) {
  if (!s.doc.contains("assertions")) return fallback;
  const Json& a = s.doc["assertions"];
  if (!a.is_object()) throw SchemaError("/assertions", "expected an object");
  if (!a.contains(key)) return fallback;
  return as_number(a[key], "/assertions/" + key);
}

bool assertion_flag(const Scenario& s, const std::string& key) {
  if (!s.doc.contains("assertions") || !s.doc["assertions"].contains(key)) return false;
  const Json& v = s.doc["assertions"][key];
  if (!v.is_boolean()) throw SchemaError("/assertions/" + key, "expected true or false");
  return v.get<bool>();
}

const Json* section(const Scenario& s, const std::string& key) {
  if (!s.doc.contains(key)) return nullptr;
  const Json& j = s.doc[key];
  if (!j.is_object()) throw SchemaError("/" + key, "expected an object");
  return &j;
}

double tolerance(const Scenario& s, const Flags& f) { return f.tolerance.value_or(s.tolerance); }
std::uint64_t seed(const Scenario& s, const Flags& f) { return f.seed.value_or(s.seed); }

std::size_t dict_size(const Scenario& s, const Flags& f) {
  if (f.dict_size) return *f.dict_size;
  if (const Json* d = section(s, "dictionary"); d && d->contains("size")) {
    const int n = as_int((*d)["size"], "/dictionary/size");
    if (n < 1) throw SchemaError("/dictionary/size", "expected a positive integer");
    return static_cast<std::size_t>(n);
  }
  return 64;
}

FlowMap make_flow(const Scenario& s, const Flags& f) {
  return FlowMap(field_from_json(require(s.doc, "field", ""), "/field", s.box), tolerance(s, f));
}

std::vector<double> scenario_grid(const Scenario& s) {
  if (const Json* g = section(s, "grid")) return grid_from_json(*g, "/grid");
  return uniform_grid(16);
}

int run_flow(const Scenario& s, const Flags& f) {
  const FlowMap flow = make_flow(s, f);
  std::vector<Vec> points;
  const Json* fs_ = section(s, "flow");
  if (fs_ && fs_->contains("points")) {
    const Json& ps = (*fs_)["points"];
    if (!ps.is_array() || ps.empty()) throw SchemaError("/flow/points", "expected a non-empty array of points");
    for (std::size_t i = 0; i < ps.size(); ++i)
      points.push_back(as_vec(ps[i], "/flow/points/" + std::to_string(i), s.box.dimension()));
  } else {
    points.push_back(0.5 * (s.box.lower + s.box.upper));
  }
  const std::vector<double> grid = scenario_grid(s);
  const double max_round_trip = assertion(s, "max_round_trip", 1e-6);
  const double variation_bound = flow.field().sup_integral(0.0, 1.0) + tolerance(s, f) + 1e-9;

  std::ostringstream csv;
  csv << "t,point";
  for (int i = 0; i < s.box.dimension(); ++i) csv << ",x" << i + 1;
  csv << '\n';
  Json summary;
  Json finals = Json::array();
  double worst_round_trip = 0.0, worst_variation = 0.0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    Vec prev = points[p];
    double variation = 0.0;
    for (double t : grid) {
      const Vec y = flow.flow(0.0, t, points[p]);
      csv << format_number(t) << ',' << p;
      for (Eigen::Index i = 0; i < y.size(); ++i) csv << ',' << format_number(y[i]);
      csv << '\n';
      variation += (y - prev).norm();
      prev = y;
      worst_round_trip = std::max(worst_round_trip, (flow.flow_inverse(t, y) - points[p]).norm());
    }
    worst_variation = std::max(worst_variation, variation);
    finals.push_back(std::vector<double>(prev.data(), prev.data() + prev.size()));
  }
  summary["family"] = family_name(flow.field().family());
  summary["budget"] = flow.budget(1.0);
  summary["final_points"] = finals;
  summary["max_round_trip_error"] = worst_round_trip;
  summary["max_variation"] = worst_variation;
  summary["variation_bound"] = variation_bound;
  const Output out(f, &s);
  out.write("flow.csv", csv.str());
  out.write_json("flow.json", summary);
  std::cout << summary.dump(2) << '\n';
  if (worst_round_trip > max_round_trip) throw AssertionFailure("round trip error exceeds max_round_trip");
  if (worst_variation > variation_bound) throw AssertionFailure("trajectory variation exceeds the time integral of sup|b|");
  return 0;
}

int run_transport(const Scenario& s, const Flags& f) {
  const FlowMap flow = make_flow(s, f);
  const Current t0 = current_from_scenario(s);
  const std::vector<double> grid = scenario_grid(s);
  Trajectory traj;
  try {
    traj = solve_gte(flow, t0, grid);
  } catch (const Error& e) {
    throw AssertionFailure(std::string("mass bound: ") + e.what());
  }
  std::ostringstream csv;
  csv << "t,mass\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    csv << format_number(grid[i]) << ',' << format_number(mass(traj.currents[i])) << '\n';
  const Output out(f, &s);
  out.write_json("trajectory.json", to_json(traj));
  out.write("mass.csv", csv.str());
  Json summary;
  summary["times"] = grid.size();
  summary["mass_bound"] = traj.mass_bound;
  summary["flagged"] = traj.flagged;
  const FormDictionary dict = dictionary_from_scenario(s, t0.grade(), dict_size(s, f), seed(s, f));
  double drift = 0.0;
  for (const auto& c : traj.currents) drift = std::max(drift, distance(c, t0, dict));
  summary["max_distance_from_initial"] = drift;
  std::cout << summary.dump(2) << '\n';
  if (assertion_flag(s, "constant_trajectory") && drift > 1e-12)
    throw AssertionFailure("constant_trajectory: the current moved");
  return 0;
}

int run_residual(const Scenario& s, const Flags& f) {
  const FlowMap flow = make_flow(s, f);
  const Current t0 = current_from_scenario(s);
  std::vector<int> intervals;
  const Json* rs = section(s, "residual");
  if (rs && rs->contains("intervals") && !f.refine) {
    for (double v : as_numbers((*rs)["intervals"], "/residual/intervals")) intervals.push_back(static_cast<int>(v));
  } else {
    const int levels = f.refine.value_or(4);
    if (levels < 1) throw SchemaError("", "--refine must be positive");
    for (int i = 0, n = 16; i < levels; ++i, n *= 2) intervals.push_back(n);
  }
  std::optional<ResidualKind> kind;
  if (rs && rs->contains("kind")) {
    const std::string k = as_string((*rs)["kind"], "/residual/kind");
    if (k == "weak") kind = ResidualKind::Weak;
    else if (k == "smooth") kind = ResidualKind::Smooth;
    else throw SchemaError("/residual/kind", "expected weak or smooth");
  }
  const FormDictionary dict = dictionary_from_scenario(s, t0.grade(), dict_size(s, f), seed(s, f));
  const ResidualReport rep = residual_study(flow, t0, dict, intervals, kind);
  Json j = to_json(rep);
  Json rows = Json::array();
  for (std::size_t i = 0; i < rep.intervals.size(); ++i)
    rows.push_back({{"intervals", rep.intervals[i]}, {"max_residual", rep.max_residual[i]}});
  j["refinements"] = rows;
  const Output out(f, &s);
  out.write_json("residual.json", j);
  out.write("residual_rows.csv", residual_rows_csv(rep));
  out.write_json("dictionary.json", to_json(dict));
  std::cout << j.dump(2) << '\n';
  const double min_slope = assertion(s, "min_slope", 1.0);
  const double max_final = assertion(s, "max_final_residual", 1e-4);
  if (!rep.at_noise_floor && rep.intervals.size() >= 2 && (!rep.slope || *rep.slope < min_slope))
    throw AssertionFailure("refinement slope below min_slope");
  if (rep.max_residual.back() > max_final) throw AssertionFailure("final residual exceeds max_final_residual");
  return 0;
}

// f = t^p on a graded grid t_i = (i / K)^q, with the chord slopes as upper gradient.
std::pair<Sampled1D, Sampled1D> approx_samples(const Json& fj, const std::string& where) {
  const std::string kind = as_string(require(fj, "kind", where), where + "/kind");
  if (kind == "power") {
    const double p = fj.contains("exponent") ? as_number(fj["exponent"], where + "/exponent") : 0.5;
    const int cells = fj.contains("cells") ? as_int(fj["cells"], where + "/cells") : 4096;
    const double grading = fj.contains("grading") ? as_number(fj["grading"], where + "/grading") : 2.0;
    if (!(p > 0.0)) throw SchemaError(where + "/exponent", "exponent must be positive");
    if (cells < 2) throw SchemaError(where + "/cells", "need at least two cells");
    if (!(grading >= 1.0)) throw SchemaError(where + "/grading", "grading must be at least 1");
    std::vector<double> grid(cells + 1), values(cells + 1), g(cells);
    for (int i = 0; i <= cells; ++i) {
      grid[i] = std::pow(static_cast<double>(i) / cells, grading);
      values[i] = std::pow(grid[i], p);
    }
    for (int i = 0; i < cells; ++i) g[i] = std::abs(values[i + 1] - values[i]) / (grid[i + 1] - grid[i]);
    return {Sampled1D::linear(grid, values), Sampled1D::constant(grid, g)};
  }
  if (kind == "samples") {
    const auto grid = as_numbers(require(fj, "grid", where), where + "/grid");
    const auto values = as_numbers(require(fj, "values", where), where + "/values");
    const auto g = as_numbers(require(fj, "upper_gradient", where), where + "/upper_gradient");
    try {
      return {Sampled1D::linear(grid, values), Sampled1D::constant(grid, g)};
    } catch (const Error& e) {
      throw SchemaError(where, e.what());
    }
  }
  throw SchemaError(where + "/kind", "unknown function kind \"" + kind + "\" (expected power or samples)");
}

int run_approx(const Scenario& s, const Flags& f) {
  const Json* as = section(s, "approx");
  Json fallback = {{"kind", "power"}};
  const Json& fj = as && as->contains("function") ? (*as)["function"] : fallback;
  const auto [fs_, g] = approx_samples(fj, "/approx/function");
  std::vector<int> js;
  if (as && as->contains("js")) {
    for (double v : as_numbers((*as)["js"], "/approx/js")) {
      if (v < 1.0 || v != std::floor(v)) throw SchemaError("/approx/js", "indices must be positive integers");
      js.push_back(static_cast<int>(v));
    }
  } else {
    const int levels = f.refine.value_or(7);
    for (int i = 0, j = 4; i < levels; ++i, j *= 2) js.push_back(j);
  }
  std::ostringstream csv;
  csv << "j,complement_measure,weak_constant,complement_ratio,sup_error,sup_bound,l1_derivative_error,"
         "l1_derivative_bound\n";
  Json reports = Json::array();
  bool sup_ok = true, l1_monotone = true;
  double last_l1 = std::numeric_limits<double>::infinity();
  for (int j : js) {
    const ApproximationReport r = approximate_ac(fs_, g, j);
    reports.push_back(to_json(r));
    csv << j << ',' << format_number(r.complement_measure) << ',' << format_number(r.weak_constant) << ','
        << format_number(r.complement_ratio) << ',' << format_number(r.sup_error) << ',' << format_number(r.sup_bound)
        << ',' << format_number(r.l1_derivative_error) << ',' << format_number(r.l1_derivative_bound) << '\n';
    sup_ok = sup_ok && r.sup_error <= r.sup_bound * (1.0 + 1e-12) + 1e-15;
    l1_monotone = l1_monotone && r.l1_derivative_error <= last_l1 * (1.0 + 1e-9) + 1e-15;
    last_l1 = r.l1_derivative_error;
  }
  Json j;
  j["reports"] = reports;
  j["sup_bound_holds"] = sup_ok;
  j["l1_error_monotone"] = l1_monotone;
  const Output out(f, &s);
  out.write_json("approx.json", j);
  out.write("approx.csv", csv.str());
  out.write("approx_f.csv", to_csv(fs_));
  out.write("approx_g.csv", to_csv(g));
  std::cout << j.dump(2) << '\n';
  if (!sup_ok) throw AssertionFailure("sup error exceeds twice the largest gap integral of g");
  if (!l1_monotone) throw AssertionFailure("L1 derivative error is not monotone in j");
  return 0;
}

int run_maximal(const Scenario& s, const Flags& f) {
  const Json& m = require(s.doc, "maximal", "");
  Sampled1D g;
  if (m.contains("csv")) {
    fs::path p = as_string(m["csv"], "/maximal/csv");
    if (p.is_relative()) p = fs::path(s.path).parent_path() / p;
    std::ifstream in(p);
    if (!in) throw SchemaError("/maximal/csv", "cannot open " + p.string());
    std::ostringstream text;
    text << in.rdbuf();
    try {
      g = sampled_from_csv(text.str(), Sampled1D::Kind::PiecewiseConstant);
    } catch (const Error& e) {
      throw SchemaError("/maximal/csv", e.what());
    }
  } else {
    const Json& gj = require(m, "g", "/maximal");
    try {
      g = Sampled1D::constant(as_numbers(require(gj, "grid", "/maximal/g"), "/maximal/g/grid"),
                              as_numbers(require(gj, "values", "/maximal/g"), "/maximal/g/values"));
    } catch (const SchemaError&) {
      throw;
    } catch (const Error& e) {
      throw SchemaError("/maximal/g", e.what());
    }
  }
  const Sampled1D mg = maximal_function(g);
  const double c = weak_type_constant(mg, g);
  Json j;
  j["nodes"] = mg.grid.size();
  j["l1_norm"] = g.total_integral();
  j["max"] = *std::max_element(mg.values.begin(), mg.values.end());
  j["weak_constant"] = c;
  if (m.contains("lambda")) {
    const double lambda = as_number(m["lambda"], "/maximal/lambda");
    const Sublevel sub = sublevel_closed(mg, lambda);
    Json parts = Json::array();
    for (const auto& iv : sub.set.intervals()) parts.push_back({iv.lower, iv.upper});
    j["sublevel"] = {{"lambda", lambda}, {"intervals", parts}, {"flagged", sub.flagged}};
  }
  const Output out(f, &s);
  out.write("maximal.csv", to_csv(mg));
  out.write_json("maximal.json", j);
  std::cout << j.dump(2) << '\n';
  if (c > assertion(s, "max_weak_constant", 2.0 + 1e-6)) throw AssertionFailure("weak (1,1) constant above bound");
  return 0;
}

int run_demo(const Scenario* s, const Flags& f) {
  NonuniquenessOptions o;
  if (s) {
    if (const Json* d = section(*s, "demo")) {
      if (d->contains("intervals")) o.intervals = as_int((*d)["intervals"], "/demo/intervals");
      if (d->contains("eps")) o.eps = as_numbers((*d)["eps"], "/demo/eps");
    }
    o.seed = s->seed;
    if (s->doc.contains("tolerance")) o.tolerance = s->tolerance;
  }
  if (f.tolerance) o.tolerance = *f.tolerance;
  if (f.seed) o.seed = *f.seed;
  if (f.dict_size) o.dictionary_size = *f.dict_size;
  const NonuniquenessReport rep = nonuniqueness_demo(o);
  const Json j = to_json(rep);
  const Output out(f, s);
  out.write_json("nonuniqueness.json", j);
  std::cout << j.dump(2) << '\n';
  if (!rep.verdict) {
    std::string failed;
    if (!rep.residuals_ok) failed += " residuals";
    if (!rep.initial_ok) failed += " initial_distance";
    if (!rep.mass_ok) failed += " mass_difference";
    if (!rep.distances_ok) failed += " convergence";
    throw AssertionFailure("non-uniqueness verdict failed:" + failed);
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transport of currents along flows of integrable-in-time Lipschitz fields"};
  app.require_subcommand(1);
  CLI::App* run = app.add_subcommand("run", "run a scenario: flow | transport | residual | approx | maximal | demo nonuniqueness");
  std::vector<std::string> args;
  Flags flags;
  run->add_option("args", args, "subcommand followed by the scenario file")->required();
  run->add_option("--refine", flags.refine, "number of refinement levels");
  run->add_option("--tolerance", flags.tolerance, "integrator tolerance");
  run->add_option("--dict-size", flags.dict_size, "test-form dictionary size");
  run->add_option("--seed", flags.seed, "dictionary seed");
  run->add_option("--out", flags.out, "output directory");
  CLI11_PARSE(app, argc, argv);

  const std::string cmd = args[0];
  std::optional<Scenario> scenario;
  try {
    if (cmd == "demo") {
      if (args.size() < 2 || args[1] != "nonuniqueness") {
        std::cerr << "error: expected `run demo nonuniqueness [scenario.json]`\n";
        return 2;
      }
      if (args.size() > 2) scenario = load_scenario(args[2]);
      return run_demo(scenario ? &*scenario : nullptr, flags);
    }
    if (args.size() != 2) {
      std::cerr << "error: expected `run " << cmd << " <scenario.json>`\n";
      return 2;
    }
    scenario = load_scenario(args[1]);
    if (cmd == "flow") return run_flow(*scenario, flags);
    if (cmd == "transport") return run_transport(*scenario, flags);
    if (cmd == "residual") return run_residual(*scenario, flags);
    if (cmd == "approx") return run_approx(*scenario, flags);
    if (cmd == "maximal") return run_maximal(*scenario, flags);
    std::cerr << "error: unknown subcommand \"" << cmd << "\"\n";
    return 2;
  } catch (const SchemaError& e) {
    if (scenario) std::cerr << "schema error: " << describe(*scenario, e) << '\n';
    else std::cerr << "schema error: " << (args.size() > 1 ? args.back() : std::string("")) << ": " << e.what() << '\n';
    return 2;
  } catch (const AssertionFailure& e) {
    std::cerr << "assertion failed: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "assertion failed: " << e.what() << '\n';
    return 1;
  }
}
