#pragma once

#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "actune/util.hpp"

namespace actune {

struct Cnf {
  int num_vars = 0;
  std::vector<std::vector<int>> clauses;
};

inline Cnf parse_dimacs_text(const std::string& text, const std::string& path) {
  Cnf cnf;
  bool header_seen = false;
  std::vector<int> current;
  int lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == 'c') continue;
    if (line[0] == 'p') {
      auto toks = split_ws(line);
      if (toks.size() != 4 || toks[1] != "cnf")
        throw ParseError(path, lineno, "malformed problem line");
      long long nv, nc;
      if (!parse_int(toks[2], nv) || !parse_int(toks[3], nc) || nv < 0 || nc < 0)
        throw ParseError(path, lineno, "bad counts in problem line");
      cnf.num_vars = static_cast<int>(nv);
      header_seen = true;
      continue;
    }
    if (!header_seen) throw ParseError(path, lineno, "clause before problem line");
    for (const auto& tok : split_ws(line)) {
      long long lit;
      if (!parse_int(tok, lit)) throw ParseError(path, lineno, "bad literal '" + tok + "'");
      if (lit == 0) {
        cnf.clauses.push_back(current);
        current.clear();
      } else {
        if (std::llabs(lit) > cnf.num_vars)
          throw ParseError(path, lineno, "literal " + tok + " out of declared variable range");
        current.push_back(static_cast<int>(lit));
      }
    }
  }
  if (!header_seen) throw ParseError(path, 0, "missing problem line");
  if (!current.empty()) cnf.clauses.push_back(current);  // tolerate missing final 0
  return cnf;
}

inline Cnf parse_dimacs(const std::string& path) {
  return parse_dimacs_text(read_text_file(path), path);
}

struct SolutionClaim {
  enum class Kind { None, Sat, Unsat };
  Kind kind = Kind::None;
  std::vector<int> literals;  // for SAT: model in DIMACS v-line convention
};

// SAT-competition output convention: one `s` status line, `v` lines with
// model literals terminated by 0.
inline SolutionClaim parse_solver_claim(const std::string& output) {
  SolutionClaim claim;
  for (const auto& raw : split(output, '\n')) {
    std::string line = trim(raw);
    if (line.rfind("s ", 0) == 0) {
      std::string answer = trim(line.substr(2));
      if (answer == "SATISFIABLE") claim.kind = SolutionClaim::Kind::Sat;
      else if (answer == "UNSATISFIABLE") claim.kind = SolutionClaim::Kind::Unsat;
    } else if (line.rfind("v ", 0) == 0 || line == "v") {
      for (const auto& tok : split_ws(line.substr(1))) {
        long long lit;
        if (parse_int(tok, lit) && lit != 0) claim.literals.push_back(static_cast<int>(lit));
      }
    }
  }
  return claim;
}

enum class ReferenceAnswer { Unknown, Sat, Unsat };

// answers file: one `<instance-basename> SAT|UNSAT` per line.
inline std::map<std::string, ReferenceAnswer> parse_answers_file(const std::string& path) {
  std::map<std::string, ReferenceAnswer> out;
  int lineno = 0;
  for (const auto& raw : split(read_text_file(path), '\n')) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto toks = split_ws(line);
    if (toks.size() != 2) throw ParseError(path, lineno, "expected: instance SAT|UNSAT");
    if (toks[1] == "SAT") out[toks[0]] = ReferenceAnswer::Sat;
    else if (toks[1] == "UNSAT") out[toks[0]] = ReferenceAnswer::Unsat;
    else throw ParseError(path, lineno, "answer must be SAT or UNSAT");
  }
  return out;
}

struct VerificationVerdict {
  enum class V { Verified, WrongAnswer, NotChecked };
  V verdict = V::NotChecked;
  std::string detail;
};

// Checks a claimed answer against the formula. SAT claims are verified
// against the model clause by clause; UNSAT claims can only be compared to a
// known reference answer (proof checking is out of scope), otherwise they
// pass through unchecked.
inline VerificationVerdict verify_sat_solution(const Cnf& cnf, const SolutionClaim& claim,
                                               ReferenceAnswer reference = ReferenceAnswer::Unknown) {
  using V = VerificationVerdict::V;
  if (claim.kind == SolutionClaim::Kind::None)
    return {V::WrongAnswer, "no SATISFIABLE/UNSATISFIABLE status claimed"};

  if (claim.kind == SolutionClaim::Kind::Unsat) {
    if (reference == ReferenceAnswer::Sat)
      return {V::WrongAnswer, "claimed UNSATISFIABLE but reference answer is SAT"};
    if (reference == ReferenceAnswer::Unsat)
      return {V::Verified, "UNSAT claim consistent with reference answer"};
    return {V::NotChecked, "UNSAT claim without reference answer"};
  }

  // SAT claim: build the assignment
  std::map<int, bool> assignment;
  for (int lit : claim.literals) {
    int var = std::abs(lit);
    if (var == 0 || var > cnf.num_vars)
      return {V::WrongAnswer, "model literal " + std::to_string(lit) + " out of range"};
    bool val = lit > 0;
    auto it = assignment.find(var);
    if (it != assignment.end() && it->second != val)
      return {V::WrongAnswer, "conflicting assignment for variable " + std::to_string(var)};
    assignment[var] = val;
  }
  if (assignment.empty()) return {V::WrongAnswer, "SAT claim without a model"};

  for (size_t i = 0; i < cnf.clauses.size(); ++i) {
    bool satisfied = false;
    for (int lit : cnf.clauses[i]) {
      auto it = assignment.find(std::abs(lit));
      if (it != assignment.end() && it->second == (lit > 0)) {
        satisfied = true;
        break;
      }
    }
    if (!satisfied)
      return {V::WrongAnswer, "clause " + std::to_string(i + 1) + " violated by the model"};
  }
  return {V::Verified, "model satisfies all " + std::to_string(cnf.clauses.size()) + " clauses"};
}

// Minimal DPLL with unit propagation; fine for the small fixture formulas
// this project ships, not a general-purpose solver.
inline std::optional<std::vector<int>> dpll_solve(const Cnf& cnf) {
  std::vector<int> assign(static_cast<size_t>(cnf.num_vars) + 1, 0);  // 0 unknown, +1/-1

  struct Frame {
    int var;
    int tried;  // 0 none, 1 first value tried
    std::vector<int> trail;
  };

  auto value = [&](int lit) {
    int v = assign[std::abs(lit)];
    if (v == 0) return 0;
    return (lit > 0) == (v > 0) ? 1 : -1;
  };

  std::function<bool(std::vector<int>&)> propagate = [&](std::vector<int>& trail) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& clause : cnf.clauses) {
        int unassigned = 0, last = 0;
        bool sat = false;
        for (int lit : clause) {
          int v = value(lit);
          if (v == 1) { sat = true; break; }
          if (v == 0) { ++unassigned; last = lit; }
        }
        if (sat) continue;
        if (unassigned == 0) return false;  // conflict
        if (unassigned == 1) {
          assign[std::abs(last)] = last > 0 ? 1 : -1;
          trail.push_back(std::abs(last));
          changed = true;
        }
      }
    }
    return true;
  };

  std::vector<Frame> stack;
  std::vector<int> root_trail;
  if (!propagate(root_trail)) return std::nullopt;

  while (true) {
    int branch_var = 0;
    for (int v = 1; v <= cnf.num_vars; ++v)
      if (assign[v] == 0) { branch_var = v; break; }
    if (branch_var == 0) break;  // complete assignment

    stack.push_back({branch_var, 0, {}});
    assign[branch_var] = 1;
    stack.back().trail.push_back(branch_var);
    while (!propagate(stack.back().trail)) {
      // undo and flip / backtrack
      while (true) {
        if (stack.empty()) return std::nullopt;
        Frame& f = stack.back();
        for (int v : f.trail) assign[v] = 0;
        f.trail.clear();
        if (f.tried == 0) {
          f.tried = 1;
          assign[f.var] = -1;
          f.trail.push_back(f.var);
          break;
        }
        stack.pop_back();
      }
    }
  }

  std::vector<int> model;
  for (int v = 1; v <= cnf.num_vars; ++v) model.push_back(assign[v] >= 0 ? v : -v);
  return model;
}

}  // namespace actune
