#pragma once

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ldgba/types.hpp"

namespace ldgba {

enum class LtlKind { True, False, Atom, Not, And, Or, Implies, Next, Until, Eventually, Globally };

// Immutable LTL syntax tree. Copies share structure.
class LtlFormula {
 public:
  static LtlFormula top();
  static LtlFormula bottom();
  static LtlFormula atom(std::string name);
  static LtlFormula negation(LtlFormula operand);
  static LtlFormula conjunction(LtlFormula lhs, LtlFormula rhs);
  static LtlFormula disjunction(LtlFormula lhs, LtlFormula rhs);
  static LtlFormula implication(LtlFormula lhs, LtlFormula rhs);
  static LtlFormula next(LtlFormula operand);
  static LtlFormula until(LtlFormula lhs, LtlFormula rhs);
  static LtlFormula eventually(LtlFormula operand);
  static LtlFormula globally(LtlFormula operand);

  LtlKind kind() const;
  const std::string& name() const;  // Atom only
  // Unary operators keep their operand in lhs().
  const LtlFormula& lhs() const;
  const LtlFormula& rhs() const;

  bool is_unary() const;
  bool is_binary() const;
  bool is_propositional() const;

  std::set<std::string> atoms() const;

  // Fully parenthesized normal form; parse_ltl(f.to_string()) == f.
  std::string to_string() const;

  friend bool operator==(const LtlFormula& a, const LtlFormula& b);

 private:
  struct Node;
  explicit LtlFormula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

// Grammar, loosest binding first:
//   formula := or ('->' formula)?
//   or      := and ('|' and)*
//   and     := until ('&' until)*
//   until   := unary ('U' until)?
//   unary   := ('!' | 'X' | 'F' | 'G') unary | primary
//   primary := 'true' | 'false' | [a-z][a-z0-9_]* | '(' formula ')'
LtlFormula parse_ltl(std::string_view text);

// One formula per file; '#' starts a line comment.
LtlFormula read_ltl_file(const std::filesystem::path& path);

// The infinite word prefix · cycle^ω over the ordered universe `aps`.
struct LassoWord {
  std::vector<std::string> aps;
  std::vector<ApSet> prefix;
  std::vector<ApSet> cycle;

  std::size_t positions() const { return prefix.size() + cycle.size(); }
  std::size_t successor(std::size_t i) const { return i + 1 < positions() ? i + 1 : prefix.size(); }
  ApSet letter(std::size_t i) const { return i < prefix.size() ? prefix[i] : cycle[i - prefix.size()]; }
};

bool eval_lasso(const LtlFormula& phi, const LassoWord& word);

// Truth value of a temporal-free formula on a single letter over `aps`.
bool eval_propositional(const LtlFormula& phi, const std::vector<std::string>& aps, ApSet letter);

// The specification GF a & GF b & G !c used throughout the grid-world example.
LtlFormula formula_gfa_gfb_gnc();

}  // namespace ldgba
