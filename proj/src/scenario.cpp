#include "gte/scenario.hpp"

#include <fstream>
#include <sstream>
#include <string_view>

namespace gte {

namespace {

std::string child(const std::string& where, const std::string& key) { return where + "/" + key; }

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Walks well-formed JSON text recording the line where each value starts.
class Scanner {
public:
  Scanner(const std::string& text, std::map<std::string, int>& lines) : s_(text), lines_(lines) {}

  void run() {
    skip();
    value("");
  }

private:
  void skip() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) {
      if (s_[i_] == '\n') ++line_;
      ++i_;
    }
  }

  std::string string() {
    std::string out;
    ++i_; // opening quote
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
        out += s_[i_ + 1];
        i_ += 2;
        continue;
      }
      out += s_[i_++];
    }
    ++i_;
    return out;
  }

  void value(const std::string& pointer) {
    lines_.emplace(pointer, line_);
    if (i_ >= s_.size()) return;
    const char c = s_[i_];
    if (c == '{') {
      ++i_;
      skip();
      while (i_ < s_.size() && s_[i_] != '}') {
        const std::string key = string();
        skip();
        ++i_; // colon
        skip();
        value(pointer + "/" + escape_token(key));
        skip();
        if (i_ < s_.size() && s_[i_] == ',') {
          ++i_;
          skip();
        }
      }
      ++i_;
    } else if (c == '[') {
      ++i_;
      skip();
      std::size_t n = 0;
      while (i_ < s_.size() && s_[i_] != ']') {
        value(pointer + "/" + std::to_string(n++));
        skip();
        if (i_ < s_.size() && s_[i_] == ',') {
          ++i_;
          skip();
        }
      }
      ++i_;
    } else if (c == '"') {
      string();
    } else {
      while (i_ < s_.size() && std::string_view(",]} \t\r\n").find(s_[i_]) == std::string_view::npos) ++i_;
    }
  }

  const std::string& s_;
  std::map<std::string, int>& lines_;
  std::size_t i_ = 0;
  int line_ = 1;
};

TimeProfile profile_from(const Json& j, const std::string& where) {
  const std::string p = as_string(j, where);
  if (p == "one") return TimeProfile::One;
  if (p == "sine") return TimeProfile::Sine;
  if (p == "inv_sqrt") return TimeProfile::InvSqrt;
  if (p == "inv_linear") return TimeProfile::InvLinear;
  throw SchemaError(where, "unknown time profile \"" + p + "\" (expected one, sine, inv_sqrt or inv_linear)");
}

Box box_from(const Json& j, const std::string& where) {
  Box b;
  b.lower = as_vec(require(j, "lower", where), child(where, "lower"));
  b.upper = as_vec(require(j, "upper", where), child(where, "upper"), static_cast<int>(b.lower.size()));
  if (b.lower.size() > kMaxDimension) throw SchemaError(child(where, "lower"), "dimension out of range");
  for (Eigen::Index i = 0; i < b.lower.size(); ++i)
    if (!(b.lower[i] < b.upper[i])) throw SchemaError(where, "lower must be below upper in every coordinate");
  return b;
}

} // namespace

JsonLocator::JsonLocator(const std::string& text) { Scanner(text, lines_).run(); }

int JsonLocator::line(const std::string& pointer) const {
  std::string p = pointer;
  for (;;) {
    const auto it = lines_.find(p);
    if (it != lines_.end()) return it->second;
    if (p.empty()) return 1;
    p.erase(p.rfind('/'));
  }
}

Scenario parse_scenario(const std::string& text, const std::string& path) {
  Scenario s;
  s.path = path;
  try {
    s.doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  s.locator = JsonLocator(text);
  if (!s.doc.is_object()) throw SchemaError("", "scenario must be a JSON object");
  const Json& seed = require(s.doc, "seed", "");
  if (!seed.is_number_unsigned()) throw SchemaError("/seed", "expected a non-negative integer");
  s.seed = seed.get<std::uint64_t>();
  if (s.doc.contains("tolerance")) {
    s.tolerance = as_number(s.doc["tolerance"], "/tolerance");
    if (!(s.tolerance > 0.0)) throw SchemaError("/tolerance", "tolerance must be positive");
  }
  s.box = box_from(require(s.doc, "bounding_box", ""), "/bounding_box");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("", "cannot open scenario file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path);
}

std::string describe(const Scenario& s, const SchemaError& e) {
  std::string msg = e.what();
  // parse errors already carry their own position
  const int line = msg.rfind("invalid JSON", 0) == 0 ? 0 : s.locator.line(e.pointer());
  std::string out = s.path;
  if (line > 0) out += ":" + std::to_string(line);
  out += ": ";
  if (!e.pointer().empty()) out += e.pointer() + ": ";
  return out + msg;
}

FieldPtr field_from_json(const Json& j, const std::string& where, const Box& box) {
  const std::string family = as_string(require(j, "family", where), child(where, "family"));
  const int d = box.dimension();
  FieldPtr field;
  try {
    if (family == "zero") {
      field = make_zero_field(box);
    } else if (family == "constant") {
      field = make_constant_field(as_vec(require(j, "vector", where), child(where, "vector"), d), box);
    } else if (family == "linear" || family == "time_modulated") {
      const Mat a = as_mat(require(j, "matrix", where), child(where, "matrix"), d, d);
      Vec c = Vec::Zero(d);
      if (j.contains("offset")) c = as_vec(j["offset"], child(where, "offset"), d);
      TimeProfile p = TimeProfile::One;
      if (j.contains("profile")) p = profile_from(j["profile"], child(where, "profile"));
      field = make_affine_field(family == "linear" ? FieldFamily::Linear : FieldFamily::TimeModulated, a, c, p, box);
    } else if (family == "shear") {
      if (d != 2) throw SchemaError(child(where, "family"), "the shear field lives in dimension 2");
      field = make_shear_field(box);
    } else if (family == "gridded") {
      const std::vector<double> edges = as_numbers(require(j, "edges", where), child(where, "edges"));
      const Json& ms = require(j, "matrices", where);
      if (!ms.is_array()) throw SchemaError(child(where, "matrices"), "expected an array of matrices");
      std::vector<Mat> mats;
      std::vector<Vec> offs;
      for (std::size_t i = 0; i < ms.size(); ++i)
        mats.push_back(as_mat(ms[i], child(child(where, "matrices"), std::to_string(i)), d, d));
      if (j.contains("offsets")) {
        const Json& os = j["offsets"];
        if (!os.is_array() || os.size() != ms.size())
          throw SchemaError(child(where, "offsets"), "expected one offset per matrix");
        for (std::size_t i = 0; i < os.size(); ++i)
          offs.push_back(as_vec(os[i], child(child(where, "offsets"), std::to_string(i)), d));
      } else {
        offs.assign(mats.size(), Vec::Zero(d));
      }
      field = make_gridded_field(edges, mats, offs, box);
    } else {
      throw SchemaError(child(where, "family"), "unknown field family \"" + family +
                                                    "\" (expected zero, constant, linear, time_modulated, shear or gridded)");
    }
    if (j.contains("mollify")) {
      const double eps = as_number(j["mollify"], child(where, "mollify"));
      if (!(eps > 0.0)) throw SchemaError(child(where, "mollify"), "mollification radius must be positive");
      field = mollify(field, eps);
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(where, e.what());
  }
  return field;
}

Current current_from_scenario(const Scenario& s) {
  const Current c = current_from_json(require(s.doc, "current", ""), "/current");
  if (c.dimension() != s.box.dimension())
    throw SchemaError("/current", "current dimension differs from the bounding box dimension");
  return c;
}

std::vector<double> grid_from_json(const Json& j, const std::string& where) {
  if (j.contains("times")) {
    const auto ts = as_numbers(j["times"], child(where, "times"));
    if (ts.size() < 2) throw SchemaError(child(where, "times"), "expected at least two times");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (ts[i] < 0.0 || ts[i] > 1.0) throw SchemaError(child(where, "times"), "times must lie in [0, 1]");
      if (i > 0 && !(ts[i - 1] < ts[i])) throw SchemaError(child(where, "times"), "times must increase");
    }
    return ts;
  }
  const int n = as_int(require(j, "intervals", where), child(where, "intervals"));
  if (n < 1) throw SchemaError(child(where, "intervals"), "expected a positive integer");
  std::vector<double> g(n + 1);
  for (int i = 0; i <= n; ++i) g[i] = static_cast<double>(i) / n;
  return g;
}

FormDictionary dictionary_from_scenario(const Scenario& s, int grade, std::size_t size, std::uint64_t seed) {
  DictionaryOptions o;
  o.dimension = s.box.dimension();
  o.grade = grade;
  o.size = size;
  o.seed = seed;
  o.lattice_lower = s.box.lower;
  o.lattice_upper = s.box.upper;
  if (s.doc.contains("dictionary")) {
    const Json& j = s.doc["dictionary"];
    const std::string w = "/dictionary";
    if (!j.is_object()) throw SchemaError(w, "expected an object");
    if (j.contains("lattice_lower")) o.lattice_lower = as_vec(j["lattice_lower"], w + "/lattice_lower", o.dimension);
    if (j.contains("lattice_upper")) o.lattice_upper = as_vec(j["lattice_upper"], w + "/lattice_upper", o.dimension);
    if (j.contains("spacing")) o.spacing = as_number(j["spacing"], w + "/spacing");
    if (j.contains("radii")) o.radii = as_numbers(j["radii"], w + "/radii");
  }
  try {
    return make_dictionary(o);
  } catch (const Error& e) {
    throw SchemaError("/dictionary", e.what());
  }
}

} // namespace gte
