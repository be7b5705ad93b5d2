#ifndef EXPBATCH_QUERY_HPP
#define EXPBATCH_QUERY_HPP

// Research-query DSL. Grammar:
//
//   query  := <name> '.' <range>
//   name   := [A-Za-z_][A-Za-z0-9_]*
//   range  := 'Log' N            power-of-two N, expands to 1,2,4,...,N
//           | 'Linear' N '.C' K  K divides N, expands to i*N/K for i=1..K
//           | 'Set{' a ',' b ... '}'   labels, declaration order
//
// e.g. population_size.Log8 expands the population size across {1,2,4,8}.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "expbatch/core_model.hpp"
#include "expbatch/error.hpp"
#include "expbatch/xml.hpp"

namespace expbatch::query {

struct RangeSpec {
  enum class Kind { Log, Linear, Set };
  Kind kind = Kind::Log;
  std::int64_t max = 1;    // Log, Linear
  std::int64_t count = 1;  // Linear
  std::vector<std::string> labels;  // Set

  bool operator==(const RangeSpec&) const = default;
};

struct ResearchQuery {
  std::string variable_name;
  RangeSpec range;

  bool operator==(const ResearchQuery&) const = default;
};

// A variable definition binds query values to template changes. Numeric
// ranges substitute each value's decimal string for `{value}` in the
// transform templates; Set variables may instead carry one transform list
// per case label.
struct VariableDefinition {
  std::string name;
  std::vector<xml::Transform> transform_templates;
  std::map<std::string, std::vector<xml::Transform>> case_transforms;
};

struct BoundVariable {
  ResearchQuery query;
  std::vector<std::pair<CriteriaValue, std::vector<xml::Transform>>>
      per_value_transforms;
  std::vector<std::string> warnings;  // e.g. PlaceholderUnused notes
};

// Errors: SyntaxError (no dot, bad keyword, bad name/labels),
// NotPowerOfTwo, NonDivisible, EmptySet.
ResearchQuery parse_query(const std::string& text);

// Canonical text form; parse_query(render_query(q)) == q.
std::string render_query(const ResearchQuery& q);

std::vector<CriteriaValue> expand_values(const RangeSpec& range);

// Errors: UnknownVariable, MissingCase. A numeric-range template with no
// `{value}` placeholder produces a warning, not an error.
BoundVariable bind_variable(
    const ResearchQuery& q,
    const std::map<std::string, VariableDefinition>& defs);

}  // namespace expbatch::query

#endif  // EXPBATCH_QUERY_HPP
