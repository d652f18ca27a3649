#include "ldgba/ltl.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace ldgba {

struct LtlFormula::Node {
  LtlKind kind;
  std::string name;
  std::vector<LtlFormula> children;
};

namespace {

const LtlFormula& no_child() {
  static const LtlFormula f = LtlFormula::top();
  return f;
}

}  // namespace

LtlFormula LtlFormula::top() { return LtlFormula(std::make_shared<const Node>(Node{LtlKind::True, {}, {}})); }
LtlFormula LtlFormula::bottom() { return LtlFormula(std::make_shared<const Node>(Node{LtlKind::False, {}, {}})); }

LtlFormula LtlFormula::atom(std::string name) {
  if (name.empty()) throw Error("atomic proposition name must be nonempty");
  return LtlFormula(std::make_shared<const Node>(Node{LtlKind::Atom, std::move(name), {}}));
}

#define LDGBA_UNARY(fn, k) \
  LtlFormula LtlFormula::fn(LtlFormula operand) { \
    return LtlFormula(std::make_shared<const Node>(Node{LtlKind::k, {}, {std::move(operand)}})); \
  }
#define LDGBA_BINARY(fn, k) \
  LtlFormula LtlFormula::fn(LtlFormula lhs, LtlFormula rhs) { \
    return LtlFormula(std::make_shared<const Node>(Node{LtlKind::k, {}, {std::move(lhs), std::move(rhs)}})); \
  }
LDGBA_UNARY(negation, Not)
LDGBA_UNARY(next, Next)
LDGBA_UNARY(eventually, Eventually)
LDGBA_UNARY(globally, Globally)
LDGBA_BINARY(conjunction, And)
LDGBA_BINARY(disjunction, Or)
LDGBA_BINARY(implication, Implies)
LDGBA_BINARY(until, Until)
#undef LDGBA_UNARY
#undef LDGBA_BINARY

LtlKind LtlFormula::kind() const { return node_->kind; }
const std::string& LtlFormula::name() const { return node_->name; }
const LtlFormula& LtlFormula::lhs() const { return node_->children.empty() ? no_child() : node_->children[0]; }
const LtlFormula& LtlFormula::rhs() const { return node_->children.size() < 2 ? no_child() : node_->children[1]; }

bool LtlFormula::is_unary() const { return node_->children.size() == 1; }
bool LtlFormula::is_binary() const { return node_->children.size() == 2; }

bool LtlFormula::is_propositional() const {
  switch (kind()) {
    case LtlKind::Next:
    case LtlKind::Until:
    case LtlKind::Eventually:
    case LtlKind::Globally:
      return false;
    default:
      for (const auto& c : node_->children)
        if (!c.is_propositional()) return false;
      return true;
  }
}

std::set<std::string> LtlFormula::atoms() const {
  std::set<std::string> out;
  if (kind() == LtlKind::Atom) out.insert(name());
  for (const auto& c : node_->children) {
    auto sub = c.atoms();
    out.insert(sub.begin(), sub.end());
  }
  return out;
}

std::string LtlFormula::to_string() const {
  switch (kind()) {
    case LtlKind::True: return "true";
    case LtlKind::False: return "false";
    case LtlKind::Atom: return name();
    case LtlKind::Not: return "!" + lhs().to_string();
    case LtlKind::Next: return "X " + lhs().to_string();
    case LtlKind::Eventually: return "F " + lhs().to_string();
    case LtlKind::Globally: return "G " + lhs().to_string();
    case LtlKind::And: return "(" + lhs().to_string() + " & " + rhs().to_string() + ")";
    case LtlKind::Or: return "(" + lhs().to_string() + " | " + rhs().to_string() + ")";
    case LtlKind::Implies: return "(" + lhs().to_string() + " -> " + rhs().to_string() + ")";
    case LtlKind::Until: return "(" + lhs().to_string() + " U " + rhs().to_string() + ")";
  }
  return {};
}

bool operator==(const LtlFormula& a, const LtlFormula& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind() || a.name() != b.name()) return false;
  if (a.node_->children.size() != b.node_->children.size()) return false;
  for (std::size_t i = 0; i < a.node_->children.size(); ++i)
    if (!(a.node_->children[i] == b.node_->children[i])) return false;
  return true;
}

namespace {

enum class Tok { Not, And, Or, Implies, Next, Until, Eventually, Globally, True, False, Ident, LParen, RParen, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    const std::size_t l = line, k = col;
    auto single = [&](Tok t) {
      out.push_back({t, std::string(1, c), l, k});
      advance(1);
    };
    switch (c) {
      case '!': single(Tok::Not); continue;
      case '&': single(Tok::And); continue;
      case '|': single(Tok::Or); continue;
      case '(': single(Tok::LParen); continue;
      case ')': single(Tok::RParen); continue;
      case 'X': single(Tok::Next); continue;
      case 'U': single(Tok::Until); continue;
      case 'F': single(Tok::Eventually); continue;
      case 'G': single(Tok::Globally); continue;
      default: break;
    }
    if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
      out.push_back({Tok::Implies, "->", l, k});
      advance(2);
      continue;
    }
    if (c >= 'a' && c <= 'z') {
      std::size_t j = i;
      while (j < text.size() && ((text[j] >= 'a' && text[j] <= 'z') || (text[j] >= '0' && text[j] <= '9') || text[j] == '_'))
        ++j;
      std::string word(text.substr(i, j - i));
      Tok t = word == "true" ? Tok::True : word == "false" ? Tok::False : Tok::Ident;
      out.push_back({t, word, l, k});
      advance(j - i);
      continue;
    }
    throw ParseError("unknown operator '" + std::string(1, c) + "'", l, k);
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  LtlFormula parse() {
    LtlFormula f = formula();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return f;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& take() { return tokens_[pos_++]; }
  bool accept(Tok t) {
    if (peek().kind != t) return false;
    ++pos_;
    return true;
  }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, peek().line, peek().column); }

  LtlFormula formula() {
    LtlFormula lhs = disjunction();
    if (accept(Tok::Implies)) return LtlFormula::implication(lhs, formula());
    return lhs;
  }

  LtlFormula disjunction() {
    LtlFormula f = conjunction();
    while (accept(Tok::Or)) f = LtlFormula::disjunction(f, conjunction());
    return f;
  }

  LtlFormula conjunction() {
    LtlFormula f = until();
    while (accept(Tok::And)) f = LtlFormula::conjunction(f, until());
    return f;
  }

  LtlFormula until() {
    LtlFormula lhs = unary();
    if (accept(Tok::Until)) return LtlFormula::until(lhs, until());
    return lhs;
  }

  LtlFormula unary() {
    if (accept(Tok::Not)) return LtlFormula::negation(unary());
    if (accept(Tok::Next)) return LtlFormula::next(unary());
    if (accept(Tok::Eventually)) return LtlFormula::eventually(unary());
    if (accept(Tok::Globally)) return LtlFormula::globally(unary());
    return primary();
  }

  LtlFormula primary() {
    switch (peek().kind) {
      case Tok::True: take(); return LtlFormula::top();
      case Tok::False: take(); return LtlFormula::bottom();
      case Tok::Ident: return LtlFormula::atom(take().text);
      case Tok::LParen: {
        take();
        LtlFormula f = formula();
        if (!accept(Tok::RParen)) fail("expected ')'");
        return f;
      }
      case Tok::End: fail("unexpected end of input");
      default: fail("unexpected '" + peek().text + "'");
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

using Truth = std::vector<char>;

Truth evaluate(const LtlFormula& f, const LassoWord& w, const std::unordered_map<std::string, std::size_t>& index) {
  const std::size_t n = w.positions();
  Truth out(n, 0);
  switch (f.kind()) {
    case LtlKind::True: std::fill(out.begin(), out.end(), 1); break;
    case LtlKind::False: break;
    case LtlKind::Atom: {
      auto it = index.find(f.name());
      if (it == index.end()) throw Error("atom '" + f.name() + "' is not in the word's proposition universe");
      for (std::size_t i = 0; i < n; ++i) out[i] = (w.letter(i) >> it->second) & 1u;
      break;
    }
    case LtlKind::Not: {
      Truth a = evaluate(f.lhs(), w, index);
      for (std::size_t i = 0; i < n; ++i) out[i] = !a[i];
      break;
    }
    case LtlKind::And:
    case LtlKind::Or:
    case LtlKind::Implies: {
      Truth a = evaluate(f.lhs(), w, index);
      Truth b = evaluate(f.rhs(), w, index);
      for (std::size_t i = 0; i < n; ++i) {
        if (f.kind() == LtlKind::And) out[i] = a[i] && b[i];
        else if (f.kind() == LtlKind::Or) out[i] = a[i] || b[i];
        else out[i] = !a[i] || b[i];
      }
      break;
    }
    case LtlKind::Next: {
      Truth a = evaluate(f.lhs(), w, index);
      for (std::size_t i = 0; i < n; ++i) out[i] = a[w.successor(i)];
      break;
    }
    case LtlKind::Until:
    case LtlKind::Eventually: {
      // Least fixpoint of out = goal | (hold & X out).
      Truth hold = f.kind() == LtlKind::Until ? evaluate(f.lhs(), w, index) : Truth(n, 1);
      out = evaluate(f.kind() == LtlKind::Until ? f.rhs() : f.lhs(), w, index);
      for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t k = n; k-- > 0;) {
          if (!out[k] && hold[k] && out[w.successor(k)]) {
            out[k] = 1;
            changed = true;
          }
        }
      }
      break;
    }
    case LtlKind::Globally: {
      // Greatest fixpoint of out = a & X out.
      out = evaluate(f.lhs(), w, index);
      for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t k = n; k-- > 0;) {
          if (out[k] && !out[w.successor(k)]) {
            out[k] = 0;
            changed = true;
          }
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace

LtlFormula parse_ltl(std::string_view text) { return Parser(tokenize(text)).parse(); }

LtlFormula read_ltl_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open formula file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_ltl(buffer.str());
}

bool eval_lasso(const LtlFormula& phi, const LassoWord& word) {
  if (word.cycle.empty()) throw Error("lasso word needs a nonempty cycle");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < word.aps.size(); ++i) index.emplace(word.aps[i], i);
  return evaluate(phi, word, index)[0] != 0;
}

bool eval_propositional(const LtlFormula& phi, const std::vector<std::string>& aps, ApSet letter) {
  if (!phi.is_propositional()) throw Error("guard contains a temporal operator: " + phi.to_string());
  LassoWord w{aps, {}, {letter}};
  return eval_lasso(phi, w);
}

LtlFormula formula_gfa_gfb_gnc() { return parse_ltl("G F a & G F b & G !c"); }

}  // namespace ldgba
