#pragma once

#include <string>

#include <json.hpp>

#include "gte/acreg.hpp"
#include "gte/currents.hpp"
#include "gte/testforms.hpp"
#include "gte/transport.hpp"

namespace gte {

using Json = nlohmann::json;

// Input that does not match the expected shape. pointer is the JSON pointer
// of the offending value ("" for the document root).
class SchemaError : public Error {
public:
  SchemaError(std::string pointer, const std::string& what) : Error(what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

private:
  std::string pointer_;
};

// Typed accessors that raise SchemaError naming the pointer.
const Json& require(const Json& obj, const std::string& key, const std::string& where);
double as_number(const Json& v, const std::string& where);
int as_int(const Json& v, const std::string& where);
std::string as_string(const Json& v, const std::string& where);
Vec as_vec(const Json& v, const std::string& where, int dimension = -1);
Mat as_mat(const Json& v, const std::string& where, int rows = -1, int cols = -1);
std::vector<double> as_numbers(const Json& v, const std::string& where);

// {kind: "dirac", grade, dimension, atoms: [{point, vectors, weight}]} or
// {kind: "simplicial", grade, vertices, simplices: [{vertices, multiplicity}]}.
Json to_json(const Current& t);
Current current_from_json(const Json& j, const std::string& where);

Json to_json(const TestForm& w);
Json to_json(const FormDictionary& dict);
Json to_json(const Trajectory& traj);
Json to_json(const ResidualReport& rep);
Json to_json(const NonuniquenessReport& rep);
Json to_json(const ApproximationReport& rep);

// One row per (intervals, form, cutoff).
std::string residual_rows_csv(const ResidualReport& rep);

// Two-column CSV "node,value".
std::string to_csv(const Sampled1D& s);
Sampled1D sampled_from_csv(const std::string& text, Sampled1D::Kind kind);

// Shortest round-trip decimal form of a double.
std::string format_number(double v);

} // namespace gte
