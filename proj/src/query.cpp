#include "expbatch/query.hpp"

#include <cctype>
#include <set>

namespace expbatch::query {

namespace {

bool is_valid_variable_name(const std::string& name) {
  if (name.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_')
    return false;
  for (char c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

std::int64_t parse_positive_int(const std::string& s, const std::string& ctx) {
  if (s.empty())
    throw Error(ErrorKind::SyntaxError, ctx + ": missing number");
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw Error(ErrorKind::SyntaxError, ctx + ": '" + s + "' is not a number");
  if (s.size() > 18)
    throw Error(ErrorKind::SyntaxError, ctx + ": '" + s + "' is too large");
  std::int64_t v = std::stoll(s);
  if (v < 1)
    throw Error(ErrorKind::SyntaxError, ctx + ": value must be positive");
  return v;
}

bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

std::int64_t parse_nonnegative_int(const std::string& s,
                                   const std::string& ctx) {
  if (s.empty())
    throw Error(ErrorKind::SyntaxError, ctx + ": missing number");
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw Error(ErrorKind::SyntaxError, ctx + ": '" + s + "' is not a number");
  if (s.size() > 18)
    throw Error(ErrorKind::SyntaxError, ctx + ": '" + s + "' is too large");
  return std::stoll(s);
}

RangeSpec parse_range(const std::string& text) {
  RangeSpec range;
  if (text.rfind("Log", 0) == 0) {
    range.kind = RangeSpec::Kind::Log;
    // Zero is parseable so that Log0 reports NotPowerOfTwo, not a syntax
    // error.
    range.max = parse_nonnegative_int(text.substr(3), "Log range");
    if (!is_power_of_two(range.max))
      throw Error(ErrorKind::NotPowerOfTwo,
                  "Log" + std::to_string(range.max) +
                      ": maximum must be a power of two");
    return range;
  }
  if (text.rfind("Linear", 0) == 0) {
    std::size_t dot = text.find('.', 6);
    if (dot == std::string::npos || text.compare(dot, 2, ".C") != 0)
      throw Error(ErrorKind::SyntaxError,
                  "Linear range needs a '.C<count>' suffix");
    range.kind = RangeSpec::Kind::Linear;
    range.max = parse_positive_int(text.substr(6, dot - 6), "Linear range");
    range.count = parse_positive_int(text.substr(dot + 2), "Linear count");
    if (range.max % range.count != 0)
      throw Error(ErrorKind::NonDivisible,
                  "Linear" + std::to_string(range.max) + ".C" +
                      std::to_string(range.count) + ": count must divide max");
    return range;
  }
  if (text.rfind("Set{", 0) == 0) {
    if (text.back() != '}')
      throw Error(ErrorKind::SyntaxError, "Set range missing closing '}'");
    std::string body = text.substr(4, text.size() - 5);
    if (body.empty())
      throw Error(ErrorKind::EmptySet, "Set range has no labels");
    range.kind = RangeSpec::Kind::Set;
    std::size_t start = 0;
    std::set<std::string> seen;
    while (true) {
      std::size_t comma = body.find(',', start);
      std::string label = body.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!is_valid_label(label))
        throw Error(ErrorKind::SyntaxError,
                    "bad set label '" + label +
                        "' (need nonempty [A-Za-z0-9_-])");
      if (!seen.insert(label).second)
        throw Error(ErrorKind::SyntaxError, "duplicate set label '" + label + "'");
      range.labels.push_back(std::move(label));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return range;
  }
  throw Error(ErrorKind::SyntaxError,
              "unknown range '" + text + "' (expected Log<N>, Linear<N>.C<K> "
              "or Set{a,b,...})");
}

// Replaces every occurrence of `{value}` in s.
std::string substitute(const std::string& s, const std::string& value,
                       bool* used) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = s.find("{value}", pos);
    if (hit == std::string::npos) {
      out += s.substr(pos);
      return out;
    }
    out += s.substr(pos, hit - pos);
    out += value;
    *used = true;
    pos = hit + 7;
  }
}

xml::Transform substitute_transform(const xml::Transform& t,
                                    const std::string& value, bool* used) {
  xml::Transform out = t;
  if (t.kind == xml::Transform::Kind::SetAttr) {
    out.value = substitute(t.value, value, used);
  } else if (t.kind == xml::Transform::Kind::AddChild) {
    for (auto& [name, v] : out.attrs) v = substitute(v, value, used);
  }
  return out;
}

}  // namespace

ResearchQuery parse_query(const std::string& text) {
  std::size_t dot = text.find('.');
  if (dot == std::string::npos)
    throw Error(ErrorKind::SyntaxError,
                "query '" + text + "' has no '.' separating name and range");
  ResearchQuery q;
  q.variable_name = text.substr(0, dot);
  if (!is_valid_variable_name(q.variable_name))
    throw Error(ErrorKind::SyntaxError,
                "bad variable name '" + q.variable_name + "'");
  q.range = parse_range(text.substr(dot + 1));
  return q;
}

std::string render_query(const ResearchQuery& q) {
  switch (q.range.kind) {
    case RangeSpec::Kind::Log:
      return q.variable_name + ".Log" + std::to_string(q.range.max);
    case RangeSpec::Kind::Linear:
      return q.variable_name + ".Linear" + std::to_string(q.range.max) + ".C" +
             std::to_string(q.range.count);
    case RangeSpec::Kind::Set: {
      std::string out = q.variable_name + ".Set{";
      for (std::size_t i = 0; i < q.range.labels.size(); ++i) {
        if (i) out += ',';
        out += q.range.labels[i];
      }
      return out + "}";
    }
  }
  return q.variable_name;
}

std::vector<CriteriaValue> expand_values(const RangeSpec& range) {
  std::vector<CriteriaValue> values;
  switch (range.kind) {
    case RangeSpec::Kind::Log:
      for (std::int64_t v = 1;; v *= 2) {
        values.push_back({std::to_string(v), v});
        if (v >= range.max) break;
      }
      break;
    case RangeSpec::Kind::Linear: {
      std::int64_t step = range.max / range.count;
      for (std::int64_t i = 1; i <= range.count; ++i)
        values.push_back({std::to_string(i * step), i * step});
      break;
    }
    case RangeSpec::Kind::Set:
      for (const auto& label : range.labels)
        values.push_back({label, std::nullopt});
      break;
  }
  return values;
}

BoundVariable bind_variable(
    const ResearchQuery& q,
    const std::map<std::string, VariableDefinition>& defs) {
  auto it = defs.find(q.variable_name);
  if (it == defs.end())
    throw Error(ErrorKind::UnknownVariable,
                "no definition for variable '" + q.variable_name + "'");
  const VariableDefinition& def = it->second;
  if (def.transform_templates.empty() && def.case_transforms.empty())
    throw Error(ErrorKind::InvariantError,
                "variable '" + q.variable_name + "' defines no transforms");

  BoundVariable bound;
  bound.query = q;
  const bool numeric = q.range.kind != RangeSpec::Kind::Set;
  const bool use_cases =
      !def.case_transforms.empty() &&
      (q.range.kind == RangeSpec::Kind::Set || def.transform_templates.empty());

  const std::vector<CriteriaValue> values = expand_values(q.range);
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    const CriteriaValue& value = values[vi];
    std::vector<xml::Transform> transforms;
    if (use_cases) {
      auto cs = def.case_transforms.find(value.label);
      if (cs == def.case_transforms.end())
        throw Error(ErrorKind::MissingCase,
                    "variable '" + q.variable_name + "' has no case for '" +
                        value.label + "'");
      transforms = cs->second;
    } else {
      for (const xml::Transform& tmpl : def.transform_templates) {
        bool used = false;
        transforms.push_back(substitute_transform(tmpl, value.label, &used));
        if (numeric && !used && vi == 0) {
          bound.warnings.push_back("PlaceholderUnused: transform " +
                                   tmpl.str() + " contains no {value}");
        }
      }
    }
    bound.per_value_transforms.emplace_back(value, std::move(transforms));
  }
  return bound;
}

}  // namespace expbatch::query
