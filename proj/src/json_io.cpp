#include "gte/json_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace gte {

namespace {

std::string child(const std::string& where, const std::string& key) { return where + "/" + key; }
std::string child(const std::string& where, std::size_t i) { return where + "/" + std::to_string(i); }

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

} // namespace

const Json& require(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where, "missing required key \"" + key + "\"");
  return *it;
}

double as_number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where, "expected a number");
  return v.get<double>();
}

int as_int(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) throw SchemaError(where, "expected an integer");
  return v.get<int>();
}

std::string as_string(const Json& v, const std::string& where) {
  if (!v.is_string()) throw SchemaError(where, "expected a string");
  return v.get<std::string>();
}

std::vector<double> as_numbers(const Json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], child(where, i)));
  return out;
}

Vec as_vec(const Json& v, const std::string& where, int dimension) {
  const auto xs = as_numbers(v, where);
  if (dimension >= 0 && static_cast<int>(xs.size()) != dimension)
    throw SchemaError(where, "expected " + std::to_string(dimension) + " components, got " + std::to_string(xs.size()));
  if (xs.empty()) throw SchemaError(where, "expected a non-empty vector");
  return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

Mat as_mat(const Json& v, const std::string& where, int rows, int cols) {
  if (!v.is_array() || v.empty()) throw SchemaError(where, "expected a non-empty array of rows");
  if (rows >= 0 && static_cast<int>(v.size()) != rows)
    throw SchemaError(where, "expected " + std::to_string(rows) + " rows");
  const Vec first = as_vec(v[0], child(where, 0), cols);
  Mat m(v.size(), first.size());
  for (std::size_t i = 0; i < v.size(); ++i) m.row(i) = as_vec(v[i], child(where, i), static_cast<int>(first.size()));
  return m;
}

Json to_json(const Current& t) {
  Json j;
  j["dimension"] = t.dimension();
  j["grade"] = t.grade();
  if (t.flagged()) j["flagged"] = true;
  if (t.has_atoms() || !t.has_simplices()) {
    Json atoms = Json::array();
    for (const auto& a : t.atoms()) {
      Json aj;
      aj["point"] = vec_json(a.point);
      aj["weight"] = a.weight;
      if (t.grade() == 0) {
        aj["scalar"] = a.tau[0];
      } else if (a.tau.witness()) {
        Json vs = Json::array();
        for (const Vec& v : *a.tau.witness()) vs.push_back(vec_json(v));
        aj["vectors"] = vs;
      } else {
        aj["coefficients"] = std::vector<double>(a.tau.coefficients().begin(), a.tau.coefficients().end());
      }
      atoms.push_back(aj);
    }
    j["atoms"] = atoms;
  }
  if (t.has_simplices()) {
    Json verts = Json::array();
    for (const Vec& v : t.vertices()) verts.push_back(vec_json(v));
    Json simps = Json::array();
    for (const auto& s : t.simplices()) simps.push_back({{"vertices", s.vertices}, {"multiplicity", s.multiplicity}});
    j["vertices"] = verts;
    j["simplices"] = simps;
  }
  j["kind"] = t.has_simplices() ? (t.has_atoms() ? "mixed" : "simplicial") : "dirac";
  return j;
}

Current current_from_json(const Json& j, const std::string& where) {
  const std::string kind = as_string(require(j, "kind", where), child(where, "kind"));
  const int grade = as_int(require(j, "grade", where), child(where, "grade"));
  if (kind == "dirac") {
    const Json& atoms = require(j, "atoms", where);
    const std::string aw = child(where, "atoms");
    if (!atoms.is_array() || atoms.empty()) throw SchemaError(aw, "expected a non-empty array of atoms");
    Current out;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string at = child(aw, i);
      const Vec p = as_vec(require(atoms[i], "point", at), child(at, "point"));
      const int d = static_cast<int>(p.size());
      if (i == 0) {
        if (d < 1 || d > kMaxDimension) throw SchemaError(child(at, "point"), "dimension out of range");
        if (grade < 0 || grade > d) throw SchemaError(child(where, "grade"), "grade out of range");
        out = Current(d, grade);
      } else if (d != out.dimension()) {
        throw SchemaError(child(at, "point"), "all atoms must share one dimension");
      }
      double w = 1.0;
      if (atoms[i].contains("weight")) w = as_number(atoms[i]["weight"], child(at, "weight"));
      MultiVector tau = MultiVector::scalar(d, 1.0);
      if (grade > 0) {
        const Json& vs = require(atoms[i], "vectors", at);
        const std::string vw = child(at, "vectors");
        if (!vs.is_array() || static_cast<int>(vs.size()) != grade)
          throw SchemaError(vw, "expected " + std::to_string(grade) + " witness vectors");
        std::vector<Vec> vecs;
        for (std::size_t v = 0; v < vs.size(); ++v) vecs.push_back(as_vec(vs[v], child(vw, v), d));
        tau = MultiVector::from_vectors(vecs, d);
      } else if (atoms[i].contains("scalar")) {
        tau = MultiVector::scalar(d, as_number(atoms[i]["scalar"], child(at, "scalar")));
      }
      try {
        out.add_atom({p, std::move(tau), w});
      } catch (const Error& e) {
        throw SchemaError(at, e.what());
      }
    }
    return out;
  }
  if (kind == "simplicial") {
    const Json& verts = require(j, "vertices", where);
    const std::string vw = child(where, "vertices");
    if (!verts.is_array() || verts.empty()) throw SchemaError(vw, "expected a non-empty array of vertices");
    std::vector<Vec> vs;
    for (std::size_t i = 0; i < verts.size(); ++i)
      vs.push_back(as_vec(verts[i], child(vw, i), i == 0 ? -1 : static_cast<int>(vs.front().size())));
    const int d = static_cast<int>(vs.front().size());
    if (d < 1 || d > kMaxDimension) throw SchemaError(vw, "dimension out of range");
    if (grade < 0 || grade > d) throw SchemaError(child(where, "grade"), "grade out of range");
    const Json& simps = require(j, "simplices", where);
    const std::string sw = child(where, "simplices");
    if (!simps.is_array()) throw SchemaError(sw, "expected an array of simplices");
    std::vector<Simplex> ss;
    for (std::size_t i = 0; i < simps.size(); ++i) {
      const std::string si = child(sw, i);
      const Json& idx = require(simps[i], "vertices", si);
      if (!idx.is_array() || static_cast<int>(idx.size()) != grade + 1)
        throw SchemaError(child(si, "vertices"), "expected " + std::to_string(grade + 1) + " vertex indices");
      Simplex s;
      for (std::size_t q = 0; q < idx.size(); ++q) {
        const int v = as_int(idx[q], child(child(si, "vertices"), q));
        if (v < 0 || v >= static_cast<int>(vs.size()))
          throw SchemaError(child(child(si, "vertices"), q), "vertex index out of range");
        s.vertices.push_back(v);
      }
      if (simps[i].contains("multiplicity")) s.multiplicity = as_number(simps[i]["multiplicity"], child(si, "multiplicity"));
      ss.push_back(std::move(s));
    }
    try {
      return Current::simplicial(grade, std::move(vs), std::move(ss));
    } catch (const Error& e) {
      throw SchemaError(where, e.what());
    }
  }
  throw SchemaError(child(where, "kind"), "unknown current kind \"" + kind + "\" (expected dirac or simplicial)");
}

Json to_json(const TestForm& w) {
  Json j;
  j["dimension"] = w.dimension();
  j["grade"] = w.grade();
  j["center"] = vec_json(w.center());
  j["radius"] = w.radius();
  Json terms = Json::array();
  for (const auto& t : w.terms()) {
    Json tj;
    std::vector<int> idx;
    for (int i = 0; i < w.dimension(); ++i)
      if (t.index & (1u << i)) idx.push_back(i + 1);
    tj["index"] = idx;
    tj["scale"] = t.scale;
    tj["derivatives"] = t.derivatives;
    Json mons = Json::array();
    for (const auto& m : t.poly.monomials()) {
      std::vector<int> e(m.exponents.begin(), m.exponents.begin() + w.dimension());
      mons.push_back({{"coefficient", m.coefficient}, {"exponents", e}});
    }
    tj["monomials"] = mons;
    terms.push_back(tj);
  }
  j["terms"] = terms;
  return j;
}

Json to_json(const FormDictionary& dict) {
  Json j;
  j["dimension"] = dict.dimension;
  j["grade"] = dict.grade;
  j["seed"] = dict.seed;
  Json forms = Json::array();
  for (const auto& w : dict.forms) forms.push_back(to_json(w));
  j["forms"] = forms;
  Json cuts = Json::array();
  for (const auto& c : dict.cutoffs) cuts.push_back({{"center", c.center()}, {"radius", c.radius()}});
  j["cutoffs"] = cuts;
  return j;
}

Json to_json(const Trajectory& traj) {
  Json j;
  j["times"] = traj.times;
  Json cs = Json::array();
  for (const auto& c : traj.currents) cs.push_back(to_json(c));
  j["currents"] = cs;
  j["mass_bound"] = traj.mass_bound;
  j["flagged"] = traj.flagged;
  return j;
}

Json to_json(const ResidualReport& rep) {
  Json j;
  j["kind"] = rep.kind == ResidualKind::Weak ? "weak" : "smooth";
  j["dictionary_size"] = rep.dictionary_size;
  j["intervals"] = rep.intervals;
  Json mr = Json::array();
  for (double v : rep.max_residual) mr.push_back(number_or_null(v));
  j["max_residual"] = mr;
  j["quadrature_step"] = rep.quadrature_step;
  j["slope"] = rep.slope ? Json(*rep.slope) : Json(nullptr);
  j["at_noise_floor"] = rep.at_noise_floor;
  j["noise_floor"] = ResidualReport::kNoiseFloor;
  return j;
}

Json to_json(const NonuniquenessReport& rep) {
  Json j;
  j["eps"] = rep.eps;
  j["residual_first"] = rep.residual_first;
  j["residual_second"] = rep.residual_second;
  j["distance_first"] = rep.distance_first;
  j["distance_second"] = rep.distance_second;
  j["initial_distance"] = rep.initial_distance;
  j["final_distance"] = rep.final_distance;
  j["mass_difference"] = rep.mass_difference;
  j["residuals_ok"] = rep.residuals_ok;
  j["initial_ok"] = rep.initial_ok;
  j["mass_ok"] = rep.mass_ok;
  j["distances_ok"] = rep.distances_ok;
  j["verdict"] = rep.verdict;
  return j;
}

Json to_json(const ApproximationReport& rep) {
  Json j;
  j["j"] = rep.j;
  j["complement_measure"] = rep.complement_measure;
  j["weak_constant"] = rep.weak_constant;
  j["complement_ratio"] = rep.complement_ratio;
  j["sup_error"] = rep.sup_error;
  j["sup_bound"] = rep.sup_bound;
  j["l1_derivative_error"] = rep.l1_derivative_error;
  j["l1_derivative_bound"] = rep.l1_derivative_bound;
  j["lipschitz_on_e"] = rep.lipschitz_on_e;
  j["time_lipschitz"] = rep.time_lipschitz;
  j["flagged"] = rep.flagged;
  return j;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string residual_rows_csv(const ResidualReport& rep) {
  std::ostringstream out;
  out << "intervals,form,cutoff,residual\n";
  for (const auto& r : rep.rows)
    out << r.intervals << ',' << r.form << ',' << r.cutoff << ',' << format_number(r.residual) << '\n';
  return out.str();
}

std::string to_csv(const Sampled1D& s) {
  std::ostringstream out;
  out << "node,value\n";
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    out << format_number(s.grid[i]) << ',' << (i < s.values.size() ? format_number(s.values[i]) : std::string()) << '\n';
  return out.str();
}

Sampled1D sampled_from_csv(const std::string& text, Sampled1D::Kind kind) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> nodes, values;
  int lineno = 0;
  bool trailing_blank = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.find_first_of("0123456789") == std::string::npos) continue; // header
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("csv line " + std::to_string(lineno) + ": expected node,value");
    const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
    double x = 0.0, y = 0.0;
    auto parse = [&](const std::string& s, double& out) {
      const char* first = s.data();
      const char* last = s.data() + s.size();
      while (first < last && *first == ' ') ++first;
      const auto r = std::from_chars(first, last, out);
      return r.ec == std::errc() && r.ptr == last;
    };
    if (!parse(a, x)) throw Error("csv line " + std::to_string(lineno) + ": bad node");
    if (b.empty()) {
      // last node of a piecewise-constant sample has no cell value
      nodes.push_back(x);
      trailing_blank = true;
      continue;
    }
    if (trailing_blank) throw Error("csv line " + std::to_string(lineno) + ": value after the final node");
    if (!parse(b, y)) throw Error("csv line " + std::to_string(lineno) + ": bad value");
    nodes.push_back(x);
    values.push_back(y);
  }
  if (kind == Sampled1D::Kind::PiecewiseLinear) return Sampled1D::linear(std::move(nodes), std::move(values));
  if (!trailing_blank && !values.empty()) values.pop_back();
  return Sampled1D::constant(std::move(nodes), std::move(values));
}

} // namespace gte
