#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "actune/rng.hpp"
#include "actune/util.hpp"

namespace actune {

// A parameter value: double for real, int64 for integer, string for
// categorical. The variant index must match the parameter kind.
using Value = std::variant<double, int64_t, std::string>;

inline std::string value_repr(const Value& v) {
  switch (v.index()) {
    case 0: return repr_double(std::get<double>(v));
    case 1: return std::to_string(std::get<int64_t>(v));
    default: return std::get<std::string>(v);
  }
}

enum class ParamKind { Real, Integer, Categorical };

inline const char* to_string(ParamKind k) {
  switch (k) {
    case ParamKind::Real: return "real";
    case ParamKind::Integer: return "integer";
    default: return "categorical";
  }
}

// "active iff parent == value" clause; single-parent equality only.
struct Condition {
  std::string parent;
  std::string trigger_repr;  // parent value in its textual representation
  bool operator==(const Condition&) const = default;
};

struct Parameter {
  std::string name;
  ParamKind kind = ParamKind::Real;
  double lo = 0.0, hi = 0.0;              // real/integer
  std::vector<std::string> categories;    // categorical
  Value default_value;
  bool log_scale = false;
  std::optional<Condition> condition;

  bool operator==(const Parameter&) const = default;

  bool contains(const Value& v) const {
    switch (kind) {
      case ParamKind::Real:
        return std::holds_alternative<double>(v) && std::get<double>(v) >= lo &&
               std::get<double>(v) <= hi;
      case ParamKind::Integer:
        return std::holds_alternative<int64_t>(v) && std::get<int64_t>(v) >= (int64_t)lo &&
               std::get<int64_t>(v) <= (int64_t)hi;
      default:
        return std::holds_alternative<std::string>(v) &&
               std::find(categories.begin(), categories.end(), std::get<std::string>(v)) !=
                   categories.end();
    }
  }
};

// One assignment of values to (active) parameters; values for inactive
// conditional parameters must be absent.
struct Configuration {
  std::map<std::string, Value> values;

  bool operator==(const Configuration&) const = default;

  bool has(const std::string& name) const { return values.count(name) > 0; }

  // Stable id over the active values; independent of insertion order since
  // the map is name-sorted.
  uint64_t id() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [name, v] : values) {
      h = hash_combine(h, hash64(name));
      h = hash_combine(h, hash64(value_repr(v)));
    }
    return h;
  }

  std::string id_hex() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(id()));
    return buf;
  }

  std::string canonical() const {
    std::string out;
    for (const auto& [name, v] : values) {
      out += name;
      out += '=';
      out += value_repr(v);
      out += '\x1f';
    }
    return out;
  }
};

class ConfigSpace {
 public:
  ConfigSpace() = default;
  explicit ConfigSpace(std::vector<Parameter> params) : params_(std::move(params)) { check(); }

  const std::vector<Parameter>& parameters() const { return params_; }
  size_t size() const { return params_.size(); }

  const Parameter* find(const std::string& name) const {
    for (const auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  bool operator==(const ConfigSpace& o) const { return params_ == o.params_; }

  // Activity under a concrete assignment: a conditional parameter is active
  // iff its parent is active and carries the trigger value.
  bool is_active(const Parameter& p, const Configuration& c) const {
    if (!p.condition) return true;
    const Parameter* parent = find(p.condition->parent);
    if (!parent || !is_active(*parent, c)) return false;
    auto it = c.values.find(parent->name);
    if (it == c.values.end()) return false;
    return value_repr(it->second) == p.condition->trigger_repr;
  }

  Configuration default_configuration() const {
    Configuration c;
    for (const auto& p : params_) {
      if (is_active(p, c)) c.values[p.name] = p.default_value;
    }
    return c;
  }

 private:
  void check() const {
    for (size_t i = 0; i < params_.size(); ++i)
      for (size_t j = i + 1; j < params_.size(); ++j)
        if (params_[i].name == params_[j].name)
          throw Error("duplicate parameter name: " + params_[i].name);
    for (const auto& p : params_) {
      if (p.condition && !find(p.condition->parent))
        throw Error("unknown parent in condition of '" + p.name + "': " + p.condition->parent);
    }
  }

  std::vector<Parameter> params_;
};

namespace detail {

inline Value parse_value_for(const Parameter& p, const std::string& tok, const std::string& path,
                             int line) {
  switch (p.kind) {
    case ParamKind::Real: {
      double d;
      if (!parse_double(tok, d)) throw ParseError(path, line, "bad real value '" + tok + "'");
      return d;
    }
    case ParamKind::Integer: {
      long long v;
      if (!parse_int(tok, v)) throw ParseError(path, line, "bad integer value '" + tok + "'");
      return static_cast<int64_t>(v);
    }
    default:
      return tok;
  }
}

inline bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
      return false;
  return true;
}

}  // namespace detail

// Parses the one-parameter-per-line space format:
//   name real [lo,hi] default v [log] [| parent==value]
//   name integer [lo,hi] default v [log] [| parent==value]
//   name categorical {a,b,c} default a [| parent==value]
// '#' starts a comment. A condition's parent must be declared on an earlier
// line, which keeps the condition graph acyclic and sampling top-down.
inline ConfigSpace parse_config_space_text(const std::string& text, const std::string& path) {
  std::vector<Parameter> params;
  auto declared = [&](const std::string& n) -> const Parameter* {
    for (const auto& p : params)
      if (p.name == n) return &p;
    return nullptr;
  };

  int lineno = 0;
  for (std::string& raw : split(text, '\n')) {
    ++lineno;
    std::string line = raw;
    if (size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;

    Parameter p;
    std::string head = line;
    if (size_t bar = line.find('|'); bar != std::string::npos) {
      head = trim(line.substr(0, bar));
      std::string cond = trim(line.substr(bar + 1));
      size_t eq = cond.find("==");
      if (eq == std::string::npos) throw ParseError(path, lineno, "condition must be parent==value");
      Condition c;
      c.parent = trim(cond.substr(0, eq));
      c.trigger_repr = trim(cond.substr(eq + 2));
      if (c.parent.empty() || c.trigger_repr.empty())
        throw ParseError(path, lineno, "empty condition side");
      p.condition = c;
    }

    // name and kind
    auto ws = head.find_first_of(" \t");
    if (ws == std::string::npos) throw ParseError(path, lineno, "expected: name kind domain default v");
    p.name = head.substr(0, ws);
    if (!detail::valid_name(p.name)) throw ParseError(path, lineno, "bad parameter name '" + p.name + "'");
    if (p.name == "seed")
      throw ParseError(path, lineno,
                       "parameter 'seed' is reserved: random seeds are supplied per run by the "
                       "harness and must not be tuned");
    if (declared(p.name)) throw ParseError(path, lineno, "duplicate parameter name '" + p.name + "'");
    std::string rest = trim(head.substr(ws));
    ws = rest.find_first_of(" \t");
    if (ws == std::string::npos) throw ParseError(path, lineno, "missing domain");
    std::string kind_tok = rest.substr(0, ws);
    rest = trim(rest.substr(ws));

    char open = 0, close = 0;
    if (kind_tok == "real") {
      p.kind = ParamKind::Real;
      open = '[', close = ']';
    } else if (kind_tok == "integer" || kind_tok == "int") {
      p.kind = ParamKind::Integer;
      open = '[', close = ']';
    } else if (kind_tok == "categorical" || kind_tok == "cat") {
      p.kind = ParamKind::Categorical;
      open = '{', close = '}';
    } else {
      throw ParseError(path, lineno, "unknown kind '" + kind_tok + "'");
    }

    size_t ob = rest.find(open);
    size_t cb = rest.find(close);
    if (ob == std::string::npos || cb == std::string::npos || cb < ob)
      throw ParseError(path, lineno, std::string("malformed domain, expected ") + open + "..." + close);
    std::string domain = rest.substr(ob + 1, cb - ob - 1);
    rest = trim(rest.substr(cb + 1));

    if (p.kind == ParamKind::Categorical) {
      for (auto& v : split(domain, ',')) {
        std::string t = trim(v);
        if (t.empty()) throw ParseError(path, lineno, "empty categorical value");
        p.categories.push_back(t);
      }
      if (p.categories.empty()) throw ParseError(path, lineno, "empty categorical domain");
      for (size_t i = 0; i < p.categories.size(); ++i)
        for (size_t j = i + 1; j < p.categories.size(); ++j)
          if (p.categories[i] == p.categories[j])
            throw ParseError(path, lineno, "duplicate categorical value '" + p.categories[i] + "'");
    } else {
      auto bounds = split(domain, ',');
      if (bounds.size() != 2) throw ParseError(path, lineno, "domain needs exactly lo,hi");
      double lo, hi;
      if (!parse_double(bounds[0], lo) || !parse_double(bounds[1], hi))
        throw ParseError(path, lineno, "bad numeric bounds");
      if (p.kind == ParamKind::Integer) {
        long long ilo, ihi;
        if (!parse_int(bounds[0], ilo) || !parse_int(bounds[1], ihi))
          throw ParseError(path, lineno, "integer bounds must be integers");
        if (ilo > ihi) throw ParseError(path, lineno, "lo must be <= hi for integer");
      } else if (!(lo < hi)) {
        throw ParseError(path, lineno, "lo must be < hi for real");
      }
      p.lo = lo;
      p.hi = hi;
    }

    auto toks = split_ws(rest);
    if (toks.size() < 2 || toks[0] != "default")
      throw ParseError(path, lineno, "expected 'default <value>' after domain");
    p.default_value = detail::parse_value_for(p, toks[1], path, lineno);
    size_t next = 2;
    if (next < toks.size() && toks[next] == "log") {
      if (p.kind == ParamKind::Categorical)
        throw ParseError(path, lineno, "log scale is only valid for real/integer");
      p.log_scale = true;
      ++next;
    }
    if (next < toks.size())
      throw ParseError(path, lineno, "trailing tokens after parameter definition");

    if (!p.contains(p.default_value))
      throw ParseError(path, lineno, "default outside domain for '" + p.name + "'");
    if (p.log_scale && p.lo <= 0.0)
      throw ParseError(path, lineno, "log scale requires lo > 0 for '" + p.name + "'");

    if (p.condition) {
      const Parameter* parent = declared(p.condition->parent);
      if (!parent)
        throw ParseError(path, lineno,
                         "unknown parent in condition: '" + p.condition->parent +
                             "' (parents must be declared before their children)");
      Value trigger = detail::parse_value_for(*parent, p.condition->trigger_repr, path, lineno);
      if (!parent->contains(trigger))
        throw ParseError(path, lineno, "condition value '" + p.condition->trigger_repr +
                                           "' not in domain of parent '" + parent->name + "'");
      p.condition->trigger_repr = value_repr(trigger);  // normalize
    }

    params.push_back(std::move(p));
  }
  return ConfigSpace(std::move(params));
}

inline ConfigSpace parse_config_space(const std::string& path) {
  return parse_config_space_text(read_text_file(path), path);
}

inline std::string to_pcs_text(const ConfigSpace& space) {
  std::string out;
  for (const auto& p : space.parameters()) {
    out += p.name;
    out += ' ';
    out += to_string(p.kind);
    out += ' ';
    if (p.kind == ParamKind::Categorical) {
      out += '{';
      for (size_t i = 0; i < p.categories.size(); ++i) {
        if (i) out += ',';
        out += p.categories[i];
      }
      out += '}';
    } else if (p.kind == ParamKind::Integer) {
      out += '[' + std::to_string((int64_t)p.lo) + ',' + std::to_string((int64_t)p.hi) + ']';
    } else {
      out += '[' + repr_double(p.lo) + ',' + repr_double(p.hi) + ']';
    }
    out += " default ";
    out += value_repr(p.default_value);
    if (p.log_scale) out += " log";
    if (p.condition) out += " | " + p.condition->parent + "==" + p.condition->trigger_repr;
    out += '\n';
  }
  return out;
}

// Uniform sample per parameter (log-uniform where marked), conditions
// resolved in declaration order; deterministic for a given stream state.
inline Configuration sample_random_config(const ConfigSpace& space, RngStream& rng) {
  Configuration c;
  for (const auto& p : space.parameters()) {
    if (!space.is_active(p, c)) continue;
    switch (p.kind) {
      case ParamKind::Real:
        c.values[p.name] = p.log_scale ? rng.log_uniform(p.lo, p.hi) : rng.uniform(p.lo, p.hi);
        break;
      case ParamKind::Integer: {
        int64_t v;
        if (p.log_scale) {
          double x = rng.log_uniform(p.lo, p.hi);
          v = std::clamp<int64_t>(std::llround(x), (int64_t)p.lo, (int64_t)p.hi);
        } else {
          v = rng.uniform_int((int64_t)p.lo, (int64_t)p.hi);
        }
        c.values[p.name] = v;
        break;
      }
      default:
        c.values[p.name] = p.categories[rng.index(p.categories.size())];
    }
  }
  return c;
}

// Violations are data, not errors: an empty list means the configuration
// satisfies every invariant in this space.
inline std::vector<std::string> validate_config(const ConfigSpace& space, const Configuration& c) {
  std::vector<std::string> violations;
  for (const auto& [name, v] : c.values) {
    if (!space.find(name)) violations.push_back("unknown parameter '" + name + "'");
  }
  for (const auto& p : space.parameters()) {
    bool active = space.is_active(p, c);
    auto it = c.values.find(p.name);
    if (active) {
      if (it == c.values.end()) {
        violations.push_back("missing value for active parameter '" + p.name + "'");
      } else if (!p.contains(it->second)) {
        if ((p.kind == ParamKind::Real && !std::holds_alternative<double>(it->second)) ||
            (p.kind == ParamKind::Integer && !std::holds_alternative<int64_t>(it->second)) ||
            (p.kind == ParamKind::Categorical && !std::holds_alternative<std::string>(it->second)))
          violations.push_back("type mismatch for '" + p.name + "'");
        else
          violations.push_back("'" + p.name + "' out of range");
      }
    } else if (it != c.values.end()) {
      violations.push_back("inactive parameter assigned: '" + p.name + "'");
    }
  }
  return violations;
}

}  // namespace actune
