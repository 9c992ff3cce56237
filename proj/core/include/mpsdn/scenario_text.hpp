#pragma once

// Generic block document underlying scenario files:
//
//   keyword arg arg { key = value  key = [ v v v ]  bare_word }
//
// '#' starts a comment that runs to end of line. See docs/scenario-format.md.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mpsdn::text {

struct Entry {
  std::string key;
  std::vector<std::string> values;  // one value unless written as a [ list ]
  bool is_list = false;
  int line = 0;
};

struct Statement {
  std::string keyword;
  std::vector<std::string> args;
  std::vector<Entry> entries;
  std::vector<std::string> words;  // bare words inside the body
  int line = 0;

  const Entry* find(std::string_view key) const;

  // Typed accessors. Throw ParseError naming the key and line on malformed values.
  std::optional<double> number(std::string_view key) const;
  std::optional<long long> integer(std::string_view key) const;
  std::optional<std::string> string(std::string_view key) const;
  std::vector<double> numbers(std::string_view key) const;

  /// Rejects any entry whose key is not in `allowed`.
  void expect_keys(std::initializer_list<std::string_view> allowed) const;
};

struct Document {
  std::vector<Statement> statements;

  std::vector<const Statement*> all(std::string_view keyword) const;
  const Statement* first(std::string_view keyword) const;
};

/// Throws ParseError with the line number of the first offending token.
Document parse(std::string_view source);

std::string write(const Document& doc);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

}  // namespace mpsdn::text
