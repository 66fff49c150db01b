#pragma once

// The theory file format: a line-oriented declaration language for feature
// spaces, value hierarchies, and rules. This header holds the lexer, a
// recovering parser producing a faithful document form, the canonical
// printer, and the compiler from documents to built theories.

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pci/error.hpp"
#include "pci/feature_space.hpp"
#include "pci/rational.hpp"
#include "pci/schema.hpp"
#include "pci/theory.hpp"

namespace pci {

struct SourceSpan {
  std::size_t line = 0;  // 1-based; 0 means "no position"
  std::size_t col = 0;
};

struct Diagnostic {
  SourceSpan span;
  std::string message;
};

/// As-written form of one theory file, close enough to the text that printing
/// it reproduces the same declarations in the same order.
struct DocHierarchyNode {
  std::string feature;
  std::string node;
  ValueExpr expr;
  SourceSpan span;

  friend bool operator==(const DocHierarchyNode& a, const DocHierarchyNode& b) {
    return a.feature == b.feature && a.node == b.node && a.expr == b.expr;
  }
};

struct DocOutcome {
  ValueTerm value;  // name or number term
  Rat probability;
  bool at_form = false;                    // written as "target: value @ p"
  std::optional<std::string> at_feature;   // the feature named in that form
  SourceSpan span;

  friend bool operator==(const DocOutcome& a, const DocOutcome& b) {
    return a.value == b.value && a.probability == b.probability;
  }
};

struct DocRule {
  std::string id;
  bool auto_id = false;  // id was assigned, not written
  std::vector<std::pair<std::string, ValueExpr>> context;  // written order
  std::vector<DocOutcome> outcomes;
  SourceSpan span;

  friend bool operator==(const DocRule& a, const DocRule& b) {
    return a.id == b.id && a.context == b.context && a.outcomes == b.outcomes;
  }
};

struct DocFeature {
  FeatureDef def;
  SourceSpan span;

  friend bool operator==(const DocFeature& a, const DocFeature& b) {
    return a.def.name == b.def.name && a.def.is_enum == b.def.is_enum &&
           a.def.enum_values == b.def.enum_values && a.def.range == b.def.range;
  }
};

struct TheoryDocument {
  std::vector<DocFeature> features;
  std::vector<DocHierarchyNode> hierarchy;
  std::string target;
  bool has_target = false;
  SourceSpan target_span;
  std::string action;
  bool has_action = false;
  SourceSpan action_span;
  std::vector<DocRule> rules;

  friend bool operator==(const TheoryDocument& a, const TheoryDocument& b) {
    return a.features == b.features && a.hierarchy == b.hierarchy &&
           a.has_target == b.has_target && (!a.has_target || a.target == b.target) &&
           a.has_action == b.has_action && (!a.has_action || a.action == b.action) &&
           a.rules == b.rules;
  }
};

struct ParseResult {
  TheoryDocument document;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

namespace detail {

enum class Tok {
  ident,
  number,
  decimal,
  newline,
  lbrace,
  rbrace,
  comma,
  colon,
  equals,
  arrow,
  dotdot,
  pipe,
  at,
  star,
  slash,
  bad,
  end
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::int64_t num = 0;
  SourceSpan span;
};

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) { scan_all(); }

  const std::vector<Token>& tokens() const { return tokens_; }

private:
  void scan_all() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        push(Tok::newline, "\n");
        ++pos_;
        ++line_;
        col_ = 1;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        advance(1);
        continue;
      }
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance(1);
        continue;
      }
      if (ident_start(c)) {
        scan_ident();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '-' && pos_ + 1 < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) ||
          (c == '.' && pos_ + 1 < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
        scan_number();
        continue;
      }
      if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
        push(Tok::arrow, "->");
        advance(2);
        continue;
      }
      if (c == '.' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '.') {
        push(Tok::dotdot, "..");
        advance(2);
        continue;
      }
      switch (c) {
        case '{': push(Tok::lbrace, "{"); break;
        case '}': push(Tok::rbrace, "}"); break;
        case ',': push(Tok::comma, ","); break;
        case ':': push(Tok::colon, ":"); break;
        case '=': push(Tok::equals, "="); break;
        case '|': push(Tok::pipe, "|"); break;
        case '@': push(Tok::at, "@"); break;
        case '*': push(Tok::star, "*"); break;
        case '/': push(Tok::slash, "/"); break;
        default: {
          tokens_.push_back({Tok::bad, std::string("unexpected character '") + c + "'", 0,
                             {line_, col_}});
          advance(1);
          continue;
        }
      }
      advance(1);
    }
    push(Tok::newline, "\n");
    push(Tok::end, "");
  }

  void scan_ident() {
    std::size_t start = pos_;
    SourceSpan span{line_, col_};
    advance(1);
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (ident_char(c)) {
        advance(1);
      } else if (c == '-' && pos_ + 1 < text_.size() && ident_char(text_[pos_ + 1])) {
        advance(2);
      } else {
        break;
      }
    }
    Token t;
    t.kind = Tok::ident;
    t.text = std::string(text_.substr(start, pos_ - start));
    t.span = span;
    tokens_.push_back(std::move(t));
  }

  void scan_number() {
    std::size_t start = pos_;
    SourceSpan span{line_, col_};
    bool decimal = false;
    if (text_[pos_] == '-') advance(1);
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
      advance(1);
    if (pos_ < text_.size() && text_[pos_] == '.' &&
        !(pos_ + 1 < text_.size() && text_[pos_ + 1] == '.')) {
      decimal = true;
      advance(1);
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        advance(1);
    }
    Token t;
    t.kind = decimal ? Tok::decimal : Tok::number;
    t.text = std::string(text_.substr(start, pos_ - start));
    if (!decimal) {
      try {
        t.num = std::stoll(t.text);
      } catch (const std::exception&) {
        t.kind = Tok::bad;
        t.text = "integer '" + t.text + "' is out of range";
      }
    }
    t.span = span;
    tokens_.push_back(std::move(t));
  }

  void push(Tok kind, std::string text) {
    tokens_.push_back({kind, std::move(text), 0, {line_, col_}});
  }

  void advance(std::size_t n) {
    pos_ += n;
    col_ += n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
  std::vector<Token> tokens_;
};

inline bool reserved_name(const std::string& s) {
  return s == "feature" || s == "values" || s == "int" || s == "hierarchy" ||
         s == "target" || s == "action" || s == "rule" || s == "inf";
}

class Parser {
public:
  explicit Parser(std::string_view text) : lexer_(text) {}

  ParseResult run() {
    ParseResult out;
    while (!at(Tok::end)) {
      if (at(Tok::newline)) {
        ++pos_;
        continue;
      }
      try {
        statement(out.document);
      } catch (const Diagnostic& d) {
        out.diagnostics.push_back(d);
        while (!at(Tok::end) && !at(Tok::newline)) ++pos_;
      }
    }
    std::set<std::string> taken;
    for (const DocRule& r : out.document.rules)
      if (!r.id.empty()) taken.insert(r.id);
    std::size_t n = 0;
    for (DocRule& r : out.document.rules) {
      if (!r.id.empty()) continue;
      do {
        r.id = "r" + std::to_string(++n);
      } while (taken.count(r.id));
      taken.insert(r.id);
      r.auto_id = true;
    }
    return out;
  }

private:
  [[noreturn]] void fail(const std::string& message) const {
    if (at(Tok::bad)) throw Diagnostic{peek().span, peek().text};
    throw Diagnostic{peek().span, message};
  }

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    const auto& ts = lexer_.tokens();
    return i < ts.size() ? ts[i] : ts.back();
  }

  bool at(Tok k, std::size_t ahead = 0) const { return peek(ahead).kind == k; }

  Token take() { return lexer_.tokens()[pos_++]; }

  Token expect(Tok k, const std::string& what) {
    if (!at(k)) fail("expected " + what);
    return take();
  }

  void skip_newlines() {
    while (at(Tok::newline)) ++pos_;
  }

  std::string expect_name(const std::string& what) {
    if (!at(Tok::ident)) fail("expected " + what);
    Token t = take();
    if (reserved_name(t.text)) throw Diagnostic{t.span, "'" + t.text + "' is a keyword"};
    return t.text;
  }

  void end_statement() {
    if (at(Tok::end)) return;
    if (!at(Tok::newline)) fail("expected end of line");
    ++pos_;
  }

  void statement(TheoryDocument& doc) {
    const Token& head = peek();
    if (head.kind != Tok::ident) fail("expected a declaration");
    if (head.text == "feature") {
      feature_statement(doc);
    } else if (head.text == "hierarchy") {
      hierarchy_statement(doc);
    } else if (head.text == "target") {
      Token kw = take();
      std::string name = expect_name("a feature name after 'target'");
      if (doc.has_target) throw Diagnostic{kw.span, "target declared twice"};
      doc.target = name;
      doc.has_target = true;
      doc.target_span = kw.span;
      end_statement();
    } else if (head.text == "action") {
      Token kw = take();
      std::string name = expect_name("a feature name after 'action'");
      if (doc.has_action) throw Diagnostic{kw.span, "action declared twice"};
      doc.action = name;
      doc.has_action = true;
      doc.action_span = kw.span;
      end_statement();
    } else if (head.text == "rule") {
      rule_statement(doc);
    } else {
      fail("expected 'feature', 'hierarchy', 'target', 'action', or 'rule'");
    }
  }

  void feature_statement(TheoryDocument& doc) {
    Token kw = take();
    DocFeature f;
    f.span = kw.span;
    f.def.name = expect_name("a feature name");
    if (!at(Tok::ident) || peek().text != "values") fail("expected 'values'");
    take();
    if (at(Tok::ident) && peek().text == "int") {
      take();
      f.def.is_enum = false;
      f.def.range = interval_bounds();
    } else {
      expect(Tok::lbrace, "'{' or 'int'");
      skip_newlines();
      while (true) {
        if (at(Tok::ident)) {
          Token t = take();
          if (reserved_name(t.text))
            throw Diagnostic{t.span, "'" + t.text + "' is a keyword"};
          f.def.enum_values.push_back(t.text);
        } else if (at(Tok::number)) {
          f.def.enum_values.push_back(take().text);
        } else {
          fail("expected a value name");
        }
        skip_newlines();
        if (at(Tok::comma)) {
          ++pos_;
          skip_newlines();
          continue;
        }
        break;
      }
      expect(Tok::rbrace, "'}'");
    }
    doc.features.push_back(std::move(f));
    end_statement();
  }

  IntInterval interval_bounds() {
    if (!at(Tok::number)) fail("expected an integer lower bound");
    std::int64_t lo = take().num;
    expect(Tok::dotdot, "'..'");
    if (at(Tok::ident) && peek().text == "inf") {
      take();
      return {lo, kNoUpperBound};
    }
    if (!at(Tok::number)) fail("expected an integer upper bound or 'inf'");
    return {lo, take().num};
  }

  void hierarchy_statement(TheoryDocument& doc) {
    Token kw = take();
    DocHierarchyNode h;
    h.span = kw.span;
    h.feature = expect_name("a feature name after 'hierarchy'");
    expect(Tok::colon, "':'");
    h.node = expect_name("a node name");
    expect(Tok::equals, "'='");
    expect(Tok::lbrace, "'{'");
    skip_newlines();
    while (true) {
      ValueExpr term = pipe_expression();
      for (ValueTerm& t : term) h.expr.push_back(std::move(t));
      skip_newlines();
      if (at(Tok::comma)) {
        ++pos_;
        skip_newlines();
        continue;
      }
      break;
    }
    expect(Tok::rbrace, "'}'");
    doc.hierarchy.push_back(std::move(h));
    end_statement();
  }

  ValueTerm value_term() {
    if (at(Tok::ident)) {
      Token t = take();
      if (reserved_name(t.text)) throw Diagnostic{t.span, "'" + t.text + "' is a keyword"};
      return ValueTerm::named(t.text);
    }
    if (at(Tok::number)) {
      Token t = take();
      if (at(Tok::dotdot)) {
        ++pos_;
        if (at(Tok::ident) && peek().text == "inf") {
          ++pos_;
          return ValueTerm::interval(t.num, kNoUpperBound);
        }
        if (!at(Tok::number)) fail("expected an integer upper bound or 'inf'");
        return ValueTerm::interval(t.num, take().num);
      }
      return ValueTerm::number(t.num);
    }
    fail("expected a value");
  }

  ValueExpr pipe_expression() {
    ValueExpr expr;
    expr.push_back(value_term());
    while (at(Tok::pipe)) {
      ++pos_;
      expr.push_back(value_term());
    }
    return expr;
  }

  Rat probability_value() {
    SourceSpan where = peek().span;
    try {
      if (at(Tok::decimal)) return parse_probability(take().text);
      if (at(Tok::number)) {
        Token n = take();
        if (at(Tok::slash)) {
          ++pos_;
          if (!at(Tok::number)) fail("expected a denominator");
          Token d = take();
          return parse_probability(n.text + "/" + d.text);
        }
        return parse_probability(n.text);
      }
    } catch (const Error& e) {
      throw Diagnostic{where, e.what()};
    }
    fail("expected a probability");
  }

  void rule_statement(TheoryDocument& doc) {
    Token kw = take();
    DocRule r;
    r.span = kw.span;
    if (at(Tok::ident)) {
      Token t = take();
      if (reserved_name(t.text)) throw Diagnostic{t.span, "'" + t.text + "' is a keyword"};
      r.id = t.text;
    }
    if (at(Tok::lbrace)) {
      ++pos_;
      skip_newlines();
      if (!at(Tok::rbrace)) {
        while (true) {
          std::string feat = expect_name("a feature name");
          expect(Tok::equals, "'='");
          ValueExpr expr = pipe_expression();
          r.context.emplace_back(std::move(feat), std::move(expr));
          skip_newlines();
          if (at(Tok::comma)) {
            ++pos_;
            skip_newlines();
            continue;
          }
          break;
        }
      }
      expect(Tok::rbrace, "'}'");
    }
    expect(Tok::arrow, "'->'");
    skip_newlines();
    expect(Tok::lbrace, "'{'");
    skip_newlines();
    while (true) {
      r.outcomes.push_back(outcome_entry());
      skip_newlines();
      if (at(Tok::comma)) {
        ++pos_;
        skip_newlines();
        continue;
      }
      break;
    }
    expect(Tok::rbrace, "'}'");
    doc.rules.push_back(std::move(r));
    end_statement();
  }

  DocOutcome outcome_entry() {
    DocOutcome o;
    o.span = peek().span;
    ValueTerm first = value_term();
    expect(Tok::colon, "':'");
    // Either "value: p" or "feature: value @ p".
    if (at(Tok::ident) ||
        (at(Tok::number) && at(Tok::at, 1))) {
      ValueTerm second = value_term();
      expect(Tok::at, "'@'");
      if (first.kind != ValueTerm::Kind::name)
        throw Diagnostic{o.span, "expected the target feature's name before ':'"};
      o.at_form = true;
      o.at_feature = first.name;
      o.value = std::move(second);
      o.probability = probability_value();
      return o;
    }
    o.value = std::move(first);
    o.probability = probability_value();
    return o;
  }

  Lexer lexer_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline ParseResult parse_theory(std::string_view text) {
  return detail::Parser(text).run();
}

inline std::string value_expr_to_string(const ValueExpr& expr, const char* sep = "|") {
  std::string out;
  for (std::size_t i = 0; i < expr.size(); ++i) {
    if (i) out += sep;
    const ValueTerm& t = expr[i];
    switch (t.kind) {
      case ValueTerm::Kind::name: out += t.name; break;
      case ValueTerm::Kind::number: out += std::to_string(t.lo); break;
      case ValueTerm::Kind::interval:
        out += std::to_string(t.lo) + "..";
        out += t.hi == kNoUpperBound ? "inf" : std::to_string(t.hi);
        break;
    }
  }
  return out;
}

/// Canonical text for a document: same declarations in the same order,
/// probabilities as exact fractions, one statement per line. Parsing the
/// output yields an equal document.
inline std::string print_theory(const TheoryDocument& doc) {
  std::string out;
  for (const DocFeature& f : doc.features) {
    out += "feature " + f.def.name + " values ";
    if (f.def.is_enum) {
      out += "{ ";
      for (std::size_t i = 0; i < f.def.enum_values.size(); ++i) {
        if (i) out += ", ";
        out += f.def.enum_values[i];
      }
      out += " }";
    } else {
      out += "int " + std::to_string(f.def.range.lo) + "..";
      out += f.def.range.unbounded() ? "inf" : std::to_string(f.def.range.hi);
    }
    out += "\n";
  }
  if (doc.has_action) out += "action " + doc.action + "\n";
  if (doc.has_target) out += "target " + doc.target + "\n";
  for (const DocHierarchyNode& h : doc.hierarchy) {
    out += "hierarchy " + h.feature + ": " + h.node + " = { ";
    out += value_expr_to_string(h.expr, ", ");
    out += " }\n";
  }
  for (const DocRule& r : doc.rules) {
    out += "rule " + r.id;
    if (!r.context.empty()) {
      out += " { ";
      for (std::size_t i = 0; i < r.context.size(); ++i) {
        if (i) out += ", ";
        out += r.context[i].first + " = " + value_expr_to_string(r.context[i].second);
      }
      out += " }";
    }
    out += " -> { ";
    for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
      if (i) out += ", ";
      const DocOutcome& o = r.outcomes[i];
      out += value_expr_to_string({o.value}) + ": " + format_rational(o.probability);
    }
    out += " }\n";
  }
  return out;
}

/// Builds the executable theory a document describes. Throws Error with a
/// "line N:" prefix when the offending declaration is known.
inline Theory<Rat> compile_theory(const TheoryDocument& doc) {
  if (!doc.has_target) throw Error("no target feature declared");
  std::vector<FeatureDef> features;
  for (const DocFeature& f : doc.features) {
    FeatureDef def = f.def;
    if (doc.has_action && def.name == doc.action) def.kind = FeatureKind::action;
    features.push_back(std::move(def));
  }
  if (doc.has_action) {
    bool found = false;
    for (const auto& f : features) found = found || f.name == doc.action;
    if (!found) throw Error("action feature '" + doc.action + "' is not declared");
  }
  FeatureSpace::Hierarchy hier;
  for (const DocHierarchyNode& h : doc.hierarchy) {
    auto& nodes = hier[h.feature];
    if (!nodes.emplace(h.node, h.expr).second)
      throw Error("line " + std::to_string(h.span.line) + ": hierarchy node '" + h.node +
                  "' declared twice for feature '" + h.feature + "'");
  }
  FeatureSpace space = FeatureSpace::build(std::move(features), std::move(hier), doc.target);

  const FeatureDef& target = space.feature(space.target());
  std::vector<Rule<Rat>> rules;
  for (const DocRule& r : doc.rules) {
    std::string where = "line " + std::to_string(r.span.line) + ": ";
    try {
      Rule<Rat> rule;
      rule.id = r.id;
      std::map<std::string, ValueSet> bindings;
      for (const auto& [feat, expr] : r.context) {
        ValueSet set = space.expand(feat, expr);
        auto it = bindings.find(feat);
        if (it != bindings.end())
          throw Error("rule '" + r.id + "' binds feature '" + feat + "' twice");
        bindings.emplace(feat, std::move(set));
      }
      rule.context = Schema::of(space, std::move(bindings));
      for (const DocOutcome& o : r.outcomes) {
        if (o.at_feature && *o.at_feature != space.target())
          throw Error("rule '" + r.id + "' assigns to '" + *o.at_feature +
                      "', but the target is '" + space.target() + "'");
        Atom value;
        if (o.value.kind == ValueTerm::Kind::interval)
          throw Error("rule '" + r.id + "' uses an interval as an outcome value");
        if (target.is_enum) {
          value = o.value.kind == ValueTerm::Kind::name ? Atom(o.value.name)
                                                        : Atom(std::to_string(o.value.lo));
        } else {
          if (o.value.kind == ValueTerm::Kind::name)
            throw Error("rule '" + r.id + "' assigns to non-integer value '" +
                        o.value.name + "'");
          value = Atom(o.value.lo);
        }
        rule.distribution.push_back({std::move(value), o.probability});
      }
      rules.push_back(std::move(rule));
    } catch (const Error& e) {
      throw Error(where + e.what());
    }
  }
  return Theory<Rat>::build(std::move(space), std::move(rules));
}

/// Parses a situation line: comma-separated `feature = value-expression`
/// entries, `feature = *` for an explicit "any value", or a single `*` for
/// the empty situation. Unmentioned features are unconstrained.
inline Schema parse_situation(const FeatureSpace& space, std::string_view text) {
  detail::Lexer lexer(text);
  const std::vector<detail::Token>& ts = lexer.tokens();
  std::size_t pos = 0;
  auto at = [&](detail::Tok k) { return ts[pos].kind == k; };
  auto skip_nl = [&] {
    while (at(detail::Tok::newline)) ++pos;
  };
  skip_nl();
  std::map<std::string, ValueSet> bindings;
  if (at(detail::Tok::star)) {
    ++pos;
    skip_nl();
    if (!at(detail::Tok::end)) throw Error("unexpected text after '*'");
    return Schema::of(space, {});
  }
  if (at(detail::Tok::end)) return Schema::of(space, {});
  while (true) {
    if (!at(detail::Tok::ident)) throw Error("expected a feature name in the situation");
    std::string feat = ts[pos++].text;
    if (!at(detail::Tok::equals)) throw Error("expected '=' after '" + feat + "'");
    ++pos;
    ValueSet set;
    if (at(detail::Tok::star)) {
      ++pos;
      set = space.full_set(feat);
    } else {
      ValueExpr expr;
      while (true) {
        if (at(detail::Tok::ident)) {
          expr.push_back(ValueTerm::named(ts[pos++].text));
        } else if (at(detail::Tok::number)) {
          std::int64_t lo = ts[pos++].num;
          if (at(detail::Tok::dotdot)) {
            ++pos;
            if (at(detail::Tok::ident) && ts[pos].text == "inf") {
              ++pos;
              expr.push_back(ValueTerm::interval(lo, kNoUpperBound));
            } else if (at(detail::Tok::number)) {
              expr.push_back(ValueTerm::interval(lo, ts[pos++].num));
            } else {
              throw Error("expected an upper bound after '..'");
            }
          } else {
            expr.push_back(ValueTerm::number(lo));
          }
        } else {
          throw Error("expected a value for feature '" + feat + "'");
        }
        if (at(detail::Tok::pipe)) {
          ++pos;
          continue;
        }
        break;
      }
      set = space.expand(feat, expr);
    }
    if (bindings.count(feat)) throw Error("situation mentions '" + feat + "' twice");
    bindings.emplace(feat, std::move(set));
    skip_nl();
    if (at(detail::Tok::comma)) {
      ++pos;
      skip_nl();
      continue;
    }
    break;
  }
  skip_nl();
  if (!at(detail::Tok::end)) throw Error("unexpected text at the end of the situation");
  return Schema::of(space, std::move(bindings));
}

}  // namespace pci
