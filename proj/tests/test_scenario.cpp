#include <doctest.h>

#include <string>

#include "gte/scenario.hpp"

using namespace gte;

namespace {

const char* kGood = R"({
  "seed": 3,
  "tolerance": 1e-9,
  "bounding_box": {"lower": [-2, -2], "upper": [2, 2]},
  "field": {"family": "linear", "matrix": [[0, 1], [-1, 0]], "profile": "sine"},
  "current": {
    "kind": "simplicial",
    "grade": 1,
    "vertices": [[0, 0], [1, 0]],
    "simplices": [{"vertices": [0, 1], "multiplicity": 2}]
  },
  "grid": {"intervals": 8}
})";

std::string error_of(const std::string& text, const std::function<void(const Scenario&)>& use = {}) {
  Scenario s;
  try {
    s = parse_scenario(text, "s.json");
    if (use) use(s);
  } catch (const SchemaError& e) {
    return describe(s.path.empty() ? Scenario{"s.json", {}, JsonLocator(text), 0, 1e-8, {}} : s, e);
  }
  return "";
}

} // namespace

TEST_CASE("a valid scenario") {
  const Scenario s = parse_scenario(kGood, "good.json");
  CHECK(s.seed == 3);
  CHECK(s.tolerance == 1e-9);
  CHECK(s.box.dimension() == 2);
  const FieldPtr b = field_from_json(s.doc["field"], "/field", s.box);
  CHECK(b->family() == FieldFamily::Linear);
  const Current c = current_from_scenario(s);
  CHECK(c.grade() == 1);
  CHECK(mass(c) == doctest::Approx(2.0));
  CHECK(grid_from_json(s.doc["grid"], "/grid").size() == 9);
  const FormDictionary dict = dictionary_from_scenario(s, 1, 16, s.seed);
  CHECK(dict.forms.size() == 16);
  CHECK(dict.grade == 1);
}

TEST_CASE("schema errors name the line and pointer") {
  SUBCASE("non-numeric matrix entry") {
    const std::string text = std::string(kGood).replace(std::string(kGood).find("[-1, 0]"), 7, "[-1, \"x\"]");
    const std::string msg =
        error_of(text, [](const Scenario& s) { field_from_json(s.doc["field"], "/field", s.box); });
    CHECK(msg == "s.json:5: /field/matrix/1/1: expected a number");
  }
  SUBCASE("unknown family") {
    const std::string text = std::string(kGood).replace(std::string(kGood).find("linear"), 6, "spiral");
    const std::string msg =
        error_of(text, [](const Scenario& s) { field_from_json(s.doc["field"], "/field", s.box); });
    CHECK(msg.find("s.json:5: /field/family: unknown field family") == 0);
  }
  SUBCASE("missing seed") {
    const std::string text = std::string(kGood).replace(std::string(kGood).find("\"seed\": 3,"), 10, "");
    CHECK(error_of(text).find("s.json:1: ") == 0);
    CHECK(error_of(text).find("seed") != std::string::npos);
  }
  SUBCASE("vertex index out of range") {
    const std::string text = std::string(kGood).replace(std::string(kGood).find("[0, 1], \"m"), 6, "[0, 7]");
    CHECK(error_of(text, [](const Scenario& s) { current_from_scenario(s); }) ==
          "s.json:10: /current/simplices/0/vertices/1: vertex index out of range");
  }
  SUBCASE("inverted box") {
    const std::string text = std::string(kGood).replace(std::string(kGood).find("[2, 2]"), 6, "[2, -3]");
    CHECK(error_of(text).find("s.json:4: /bounding_box: lower must be below upper") == 0);
  }
  SUBCASE("malformed JSON") {
    CHECK(error_of("{\"seed\": 1,,}").find("invalid JSON") != std::string::npos);
  }
  SUBCASE("fields outside class (L) are schema errors") {
    const std::string text = std::string(kGood).replace(std::string(kGood).find("sine"), 4, "inv_linear");
    Scenario s = parse_scenario(text, "s.json");
    const FieldPtr b = field_from_json(s.doc["field"], "/field", s.box);
    CHECK_THROWS_AS(FlowMap{b}, Error);
  }
}

TEST_CASE("field families from JSON") {
  const Box box{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
  CHECK(field_from_json(Json::parse(R"({"family": "zero"})"), "", box)->family() == FieldFamily::Zero);
  CHECK(field_from_json(Json::parse(R"({"family": "constant", "vector": [1, 2]})"), "", box)->family() ==
        FieldFamily::Constant);
  CHECK(field_from_json(Json::parse(R"({"family": "shear"})"), "", box)->family() == FieldFamily::Shear);
  CHECK(field_from_json(Json::parse(R"({"family": "shear", "mollify": 0.1})"), "", box)->family() ==
        FieldFamily::Mollified);
  const FieldPtr g = field_from_json(
      Json::parse(R"({"family": "gridded", "edges": [0, 0.5, 1], "matrices": [[[0, 1], [0, 0]], [[0, 0], [1, 0]]]})"), "",
      box);
  CHECK(g->family() == FieldFamily::Gridded);
  CHECK_THROWS_AS(field_from_json(Json::parse(R"({"family": "gridded", "edges": [0, 1], "matrices": []})"), "/f", box),
                  SchemaError);
  CHECK_THROWS_AS(field_from_json(Json::parse(R"({"family": "constant", "vector": [1, 2, 3]})"), "/f", box),
                  SchemaError);
}

TEST_CASE("currents round-trip through JSON") {
  Vec p(2), v(2);
  p << 0.25, -0.5;
  v << 0.1, 1.0;
  Current c = Current::dirac(p, MultiVector::vector(v), 1.5);
  c.add_atom({-p, MultiVector::vector(-v), 0.5});
  const Current back = current_from_json(to_json(c), "");
  REQUIRE(back.atoms().size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK((back.atoms()[i].point - c.atoms()[i].point).norm() == 0.0);
    CHECK((back.atoms()[i].tau - c.atoms()[i].tau).max_abs() == 0.0);
    CHECK(back.atoms()[i].weight == c.atoms()[i].weight);
  }
  const Current point = Current::dirac(p, MultiVector::scalar(2, 2.0));
  CHECK(current_from_json(to_json(point), "").atoms()[0].tau[0] == 2.0);
  const Scenario s = parse_scenario(kGood, "good.json");
  const Current seg = current_from_scenario(s);
  const Current seg_back = current_from_json(to_json(seg), "");
  CHECK(seg_back.simplices().size() == 1);
  CHECK(seg_back.simplices()[0].multiplicity == 2.0);
}

TEST_CASE("CSV samples and number formatting") {
  const Sampled1D lin = Sampled1D::linear({0.0, 0.1, 1.0 / 3.0}, {1.0, -2.5, 1e-300});
  const Sampled1D lin_back = sampled_from_csv(to_csv(lin), Sampled1D::Kind::PiecewiseLinear);
  CHECK(lin_back.grid == lin.grid);
  CHECK(lin_back.values == lin.values);
  const Sampled1D pc = Sampled1D::constant({0.0, 0.5, 1.0}, {3.0, 4.0});
  const std::string text = to_csv(pc);
  CHECK(text == "node,value\n0,3\n0.5,4\n1,\n");
  const Sampled1D pc_back = sampled_from_csv(text, Sampled1D::Kind::PiecewiseConstant);
  CHECK(pc_back.values == pc.values);
  CHECK_THROWS_AS(sampled_from_csv("node,value\n0,abc\n1,2\n", Sampled1D::Kind::PiecewiseLinear), Error);
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
}

TEST_CASE("JSON reports") {
  NonuniquenessReport r;
  r.eps = {0.1};
  r.verdict = true;
  const Json j = to_json(r);
  CHECK(j["verdict"] == true);
  const Scenario s = parse_scenario(kGood, "good.json");
  const FormDictionary dict = dictionary_from_scenario(s, 1, 4, 1);
  const Json d = to_json(dict);
  CHECK(d.contains("forms"));
}
