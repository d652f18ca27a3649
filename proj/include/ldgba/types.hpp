#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ldgba {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;
using TransitionId = std::uint32_t;

// Subset of an ordered atomic-proposition universe; bit i is the i-th AP.
using ApSet = std::uint32_t;

// Bit j-1 set iff a transition belongs to accepting set F_j.
using AccMask = std::uint32_t;

inline constexpr std::size_t kMaxPropositions = 16;
inline constexpr std::size_t kMaxAcceptanceSets = 32;

inline constexpr AccMask full_mask(std::size_t num_sets) {
  return num_sets >= 32 ? ~AccMask{0} : (AccMask{1} << num_sets) - 1;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    return "parse error at " + std::to_string(line) + ":" + std::to_string(column) + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// A letter of Σ = 2^AP ∪ {ε}.
class Letter {
 public:
  constexpr Letter() = default;

  static constexpr Letter of(ApSet aps) { return Letter(false, aps); }
  static constexpr Letter epsilon() { return Letter(true, 0); }

  constexpr bool is_epsilon() const { return epsilon_; }
  constexpr ApSet aps() const { return aps_; }

  constexpr auto operator<=>(const Letter&) const = default;

 private:
  constexpr Letter(bool eps, ApSet aps) : epsilon_(eps), aps_(aps) {}

  // Declaration order makes ε sort after every proper letter.
  bool epsilon_ = false;
  ApSet aps_ = 0;
};

}  // namespace ldgba
