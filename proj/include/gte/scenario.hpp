#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "gte/flows.hpp"
#include "gte/json_io.hpp"

namespace gte {

// Source line of every value in a JSON text, keyed by JSON pointer.
class JsonLocator {
public:
  JsonLocator() = default;
  explicit JsonLocator(const std::string& text);
  // Line of the value at pointer, or of its nearest located ancestor.
  int line(const std::string& pointer) const;

private:
  std::map<std::string, int> lines_;
};

struct Scenario {
  std::string path;
  Json doc;
  JsonLocator locator;
  std::uint64_t seed = 0;
  double tolerance = 1e-8;
  Box box;
};

// Schema violations surface as SchemaError; use describe() for a
// "path:line: message" rendering.
Scenario parse_scenario(const std::string& text, const std::string& path);
Scenario load_scenario(const std::string& path);
std::string describe(const Scenario& s, const SchemaError& e);

FieldPtr field_from_json(const Json& j, const std::string& where, const Box& box);
Current current_from_scenario(const Scenario& s);
std::vector<double> grid_from_json(const Json& j, const std::string& where);
// Dictionary section is optional; lattice defaults to the bounding box.
FormDictionary dictionary_from_scenario(const Scenario& s, int grade, std::size_t size, std::uint64_t seed);

} // namespace gte
