#include "mpsdn/scenario_text.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "mpsdn/types.hpp"

namespace mpsdn::text {
namespace {

enum class TokKind { Word, LBrace, RBrace, LBracket, RBracket, Equals, End };

struct Token {
  TokKind kind;
  std::string text;
  int line;
};

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' ||
         c == '+' || c == ':' || c == '/' || c == '<' || c == '>' || c == '*';
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
    } else if (c == '{') {
      out.push_back({TokKind::LBrace, "{", line});
      ++i;
    } else if (c == '}') {
      out.push_back({TokKind::RBrace, "}", line});
      ++i;
    } else if (c == '[') {
      out.push_back({TokKind::LBracket, "[", line});
      ++i;
    } else if (c == ']') {
      out.push_back({TokKind::RBracket, "]", line});
      ++i;
    } else if (c == '=') {
      out.push_back({TokKind::Equals, "=", line});
      ++i;
    } else if (c == '"') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
      if (j >= src.size() || src[j] != '"') throw ParseError(line, "unterminated string");
      out.push_back({TokKind::Word, std::string(src.substr(i + 1, j - i - 1)), line});
      i = j + 1;
    } else if (is_word_char(c)) {
      std::size_t j = i;
      while (j < src.size() && is_word_char(src[j])) ++j;
      out.push_back({TokKind::Word, std::string(src.substr(i, j - i)), line});
      i = j;
    } else {
      throw ParseError(line, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({TokKind::End, "", line});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Document run() {
    Document doc;
    while (peek().kind != TokKind::End) doc.statements.push_back(statement());
    return doc;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  Token take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  Statement statement() {
    Token kw = take();
    if (kw.kind != TokKind::Word) throw ParseError(kw.line, "expected statement keyword, got '" + kw.text + "'");
    Statement st;
    st.keyword = kw.text;
    st.line = kw.line;
    while (peek().kind == TokKind::Word) st.args.push_back(take().text);
    Token open = take();
    if (open.kind != TokKind::LBrace)
      throw ParseError(open.line, "expected '{' after '" + st.keyword + "'");
    while (peek().kind != TokKind::RBrace) {
      const Token& t = peek();
      if (t.kind == TokKind::End) throw ParseError(t.line, "unterminated block '" + st.keyword + "'");
      if (t.kind != TokKind::Word) throw ParseError(t.line, "unexpected '" + t.text + "' in block");
      if (peek(1).kind == TokKind::Equals) {
        Entry e;
        e.key = take().text;
        e.line = t.line;
        take();  // '='
        if (peek().kind == TokKind::LBracket) {
          take();
          e.is_list = true;
          while (peek().kind == TokKind::Word) e.values.push_back(take().text);
          Token close = take();
          if (close.kind != TokKind::RBracket) throw ParseError(close.line, "expected ']' closing list '" + e.key + "'");
        } else {
          Token v = take();
          if (v.kind != TokKind::Word) throw ParseError(v.line, "expected value for '" + e.key + "'");
          e.values.push_back(v.text);
        }
        for (const auto& prev : st.entries)
          if (prev.key == e.key) throw ParseError(e.line, "duplicate key '" + e.key + "'");
        st.entries.push_back(std::move(e));
      } else {
        st.words.push_back(take().text);
      }
    }
    take();  // '}'
    return st;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

double to_double(const std::string& s, const std::string& key, int line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(line, "'" + key + "' expects a number, got '" + s + "'");
  return v;
}

bool needs_quotes(const std::string& s) {
  if (s.empty()) return true;
  for (char c : s)
    if (!is_word_char(c)) return true;
  return false;
}

std::string quoted(const std::string& s) { return needs_quotes(s) ? "\"" + s + "\"" : s; }

}  // namespace

const Entry* Statement::find(std::string_view key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

std::optional<double> Statement::number(std::string_view key) const {
  const Entry* e = find(key);
  if (!e) return std::nullopt;
  if (e->is_list || e->values.size() != 1) throw ParseError(e->line, "'" + e->key + "' expects a single number");
  return to_double(e->values.front(), e->key, e->line);
}

std::optional<long long> Statement::integer(std::string_view key) const {
  const Entry* e = find(key);
  if (!e) return std::nullopt;
  if (e->is_list || e->values.size() != 1) throw ParseError(e->line, "'" + e->key + "' expects a single integer");
  long long v = 0;
  const std::string& s = e->values.front();
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(e->line, "'" + e->key + "' expects an integer, got '" + s + "'");
  return v;
}

std::optional<std::string> Statement::string(std::string_view key) const {
  const Entry* e = find(key);
  if (!e) return std::nullopt;
  if (e->is_list || e->values.size() != 1) throw ParseError(e->line, "'" + e->key + "' expects a single value");
  return e->values.front();
}

std::vector<double> Statement::numbers(std::string_view key) const {
  std::vector<double> out;
  const Entry* e = find(key);
  if (!e) return out;
  for (const auto& v : e->values) out.push_back(to_double(v, e->key, e->line));
  return out;
}

void Statement::expect_keys(std::initializer_list<std::string_view> allowed) const {
  for (const auto& e : entries) {
    bool ok = false;
    for (auto a : allowed) ok = ok || (e.key == a);
    if (!ok) throw ParseError(e.line, "unknown key '" + e.key + "' in '" + keyword + "' block");
  }
}

std::vector<const Statement*> Document::all(std::string_view keyword) const {
  std::vector<const Statement*> out;
  for (const auto& s : statements)
    if (s.keyword == keyword) out.push_back(&s);
  return out;
}

const Statement* Document::first(std::string_view keyword) const {
  for (const auto& s : statements)
    if (s.keyword == keyword) return &s;
  return nullptr;
}

Document parse(std::string_view source) { return Parser(tokenize(source)).run(); }

std::string write(const Document& doc) {
  std::ostringstream os;
  for (const auto& st : doc.statements) {
    os << st.keyword;
    for (const auto& a : st.args) os << ' ' << quoted(a);
    os << " {";
    for (const auto& w : st.words) os << ' ' << quoted(w);
    for (const auto& e : st.entries) {
      os << ' ' << e.key << " = ";
      if (e.is_list) {
        os << '[';
        for (const auto& v : e.values) os << ' ' << quoted(v);
        os << " ]";
      } else {
        os << quoted(e.values.front());
      }
    }
    os << " }\n";
  }
  return os.str();
}

std::string format_number(double v) {
  char buf[64];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == v) break;
  }
  return buf;
}

}  // namespace mpsdn::text
