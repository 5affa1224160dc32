#pragma once

#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "schemeplan/model.hpp"

namespace schemeplan {

class ParseError : public std::runtime_error {
 public:
  enum class Kind { Lexical, Syntax, Semantic };

  ParseError(Kind kind, int line, int column, std::string message, std::string expected = {})
      : std::runtime_error(format(line, column, message, expected)),
        kind(kind),
        line(line),
        column(column),
        message(std::move(message)),
        expected(std::move(expected)) {}

  Kind kind;
  int line;
  int column;
  std::string message;
  std::string expected;
  std::string code;  // violation code for semantic errors

 private:
  static std::string format(int line, int column, const std::string& message, const std::string& expected) {
    std::string out = std::to_string(line) + ":" + std::to_string(column) + ": " + message;
    if (!expected.empty()) out += " (expected " + expected + ")";
    return out;
  }
};

namespace dsl {

enum class Tok { Word, Colon, LParen, RParen, Comma, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 0;
  int column = 0;
};

inline const char* describe(Tok t) {
  switch (t) {
    case Tok::Word: return "identifier";
    case Tok::Colon: return "':'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::End: return "end of line";
  }
  return "?";
}

// Splits the source into lines of tokens; comments and blank lines vanish.
inline std::vector<std::vector<Token>> tokenize(std::string_view text) {
  std::vector<std::vector<Token>> lines;
  int line = 1;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view src = text.substr(pos, eol - pos);
    std::vector<Token> toks;
    for (std::size_t i = 0; i < src.size();) {
      char c = src[i];
      int col = static_cast<int>(i) + 1;
      if (c == '#') break;
      if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
        continue;
      }
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
        toks.push_back({Tok::Word, std::string(src.substr(i, j - i)), line, col});
        i = j;
        continue;
      }
      Tok kind;
      switch (c) {
        case ':': kind = Tok::Colon; break;
        case '(': kind = Tok::LParen; break;
        case ')': kind = Tok::RParen; break;
        case ',': kind = Tok::Comma; break;
        default:
          throw ParseError(ParseError::Kind::Lexical, line, col,
                           std::string("unexpected character '") + c + "'");
      }
      toks.push_back({kind, std::string(1, c), line, col});
      ++i;
    }
    if (!toks.empty()) {
      toks.push_back({Tok::End, "", line, static_cast<int>(src.size()) + 1});
      lines.push_back(std::move(toks));
    }
    pos = eol + 1;
    ++line;
  }
  return lines;
}

class LineParser {
 public:
  explicit LineParser(const std::vector<Token>& toks) : toks_(toks) {}

  const Token& peek() const { return toks_[i_]; }
  bool at_end() const { return peek().kind == Tok::End; }

  const Token& expect(Tok kind) {
    const Token& t = peek();
    if (t.kind != kind) fail(t, std::string("unexpected ") + found(t), describe(kind));
    ++i_;
    return t;
  }

  void keyword(std::string_view word) {
    const Token& t = peek();
    if (t.kind != Tok::Word || t.text != word) {
      fail(t, std::string("unexpected ") + found(t), "'" + std::string(word) + "'");
    }
    ++i_;
  }

  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    ++i_;
    return true;
  }

  const Token& ident(const char* what) {
    const Token& t = peek();
    if (t.kind != Tok::Word) fail(t, std::string("unexpected ") + found(t), what);
    if (!is_identifier(t.text)) fail(t, "'" + t.text + "' is not a valid identifier", what);
    ++i_;
    return t;
  }

  void finish() {
    if (!at_end()) fail(peek(), std::string("unexpected ") + found(peek()), "end of line");
  }

  [[noreturn]] static void fail(const Token& t, std::string message, std::string expected) {
    throw ParseError(ParseError::Kind::Syntax, t.line, t.column, std::move(message), std::move(expected));
  }

 private:
  static std::string found(const Token& t) {
    return t.kind == Tok::Word ? "'" + t.text + "'" : describe(t.kind);
  }

  const std::vector<Token>& toks_;
  std::size_t i_ = 0;
};

struct SourcePos {
  int line = 0;
  int column = 0;
};

}  // namespace dsl

// Parses the line-oriented plan language. The result always passes
// validate_plan; otherwise the first violation is thrown as a semantic error.
inline SchemePlan parse_plan(std::string_view text) {
  using dsl::LineParser;
  using dsl::Tok;

  SchemePlan plan;
  bool have_header = false;
  std::map<Location, dsl::SourcePos> where;
  std::set<RouteId> normal_seen, reverse_seen;

  auto note = [&](Location loc, const dsl::Token& t) { where[std::move(loc)] = {t.line, t.column}; };

  for (const auto& toks : dsl::tokenize(text)) {
    LineParser p(toks);
    const dsl::Token& head = p.peek();
    if (head.kind != Tok::Word) LineParser::fail(head, "statement must start with a keyword", "keyword");

    if (!have_header) {
      p.keyword("plan");
      plan.name = p.ident("plan name").text;
      p.finish();
      have_header = true;
      note({Section::Plan, plan.name}, head);
      continue;
    }

    const std::string kw = head.text;
    p.expect(Tok::Word);
    if (kw == "unit") {
      const dsl::Token& kind = p.ident("'linear' or 'point'");
      if (kind.text == "linear") {
        Unit u;
        u.id = UnitId(p.ident("unit id").text);
        ConnectorId a(p.ident("connector").text);
        ConnectorId b(p.ident("connector").text);
        u.shape = Linear{a, b};
        p.finish();
        note({Section::Unit, u.id.str()}, head);
        for (const auto& c : u.connectors()) note({Section::Connector, c.str()}, head);
        plan.units.push_back(std::move(u));
      } else if (kind.text == "point") {
        Unit u;
        u.id = UnitId(p.ident("unit id").text);
        Point pt;
        p.keyword("stem");
        pt.stem = ConnectorId(p.ident("connector").text);
        p.keyword("left");
        pt.left = ConnectorId(p.ident("connector").text);
        p.keyword("right");
        pt.right = ConnectorId(p.ident("connector").text);
        p.finish();
        u.shape = pt;
        note({Section::Unit, u.id.str()}, head);
        for (const auto& c : u.connectors()) note({Section::Connector, c.str()}, head);
        plan.units.push_back(std::move(u));
      } else {
        LineParser::fail(kind, "unknown unit kind '" + kind.text + "'", "'linear' or 'point'");
      }
    } else if (kw == "marker") {
      const dsl::Token& kind = p.ident("'entry', 'exit' or 'boundary'");
      Marker m;
      if (kind.text == "entry") {
        m.kind = MarkerKind::Entry;
      } else if (kind.text == "exit") {
        m.kind = MarkerKind::Exit;
      } else if (kind.text == "boundary") {
        m.kind = MarkerKind::Boundary;
      } else {
        LineParser::fail(kind, "unknown marker kind '" + kind.text + "'", "'entry', 'exit' or 'boundary'");
      }
      if (m.kind != MarkerKind::Boundary || p.peek().text != "at") {
        m.name = MarkerName(p.ident("marker name").text);
      }
      p.keyword("at");
      m.at = ConnectorId(p.ident("connector").text);
      p.finish();
      note({Section::Marker, m.name.empty() ? m.at.str() : m.name.str()}, head);
      plan.markers.push_back(std::move(m));
    } else if (kw == "route") {
      Route r;
      r.id = RouteId(p.ident("route id").text);
      p.expect(Tok::Colon);
      note({Section::Route, r.id.str()}, head);
      while (!p.at_end()) {
        const dsl::Token& ut = p.ident("unit id");
        UnitPathPair step;
        step.unit = UnitId(ut.text);
        p.expect(Tok::LParen);
        step.path.from = ConnectorId(p.ident("connector").text);
        p.expect(Tok::Comma);
        step.path.to = ConnectorId(p.ident("connector").text);
        p.expect(Tok::RParen);
        r.steps.push_back(std::move(step));
        note({Section::Route, r.id.str(), static_cast<int>(r.steps.size())}, ut);
      }
      plan.routes.push_back(std::move(r));
    } else if (kw == "clear" || kw == "normal" || kw == "reverse") {
      const dsl::Token& rt = p.ident("route id");
      RouteId rid(rt.text);
      p.expect(Tok::Colon);
      std::vector<UnitId> units;
      while (!p.at_end()) units.emplace_back(p.ident("unit id").text);
      if (kw == "clear") {
        if (plan.control.count(rid)) {
          throw ParseError(ParseError::Kind::Semantic, rt.line, rt.column,
                           "duplicate clear entry for route '" + rid.str() + "'");
        }
        plan.control[rid].clear = std::move(units);
      } else {
        auto it = plan.control.find(rid);
        if (it == plan.control.end()) {
          throw ParseError(ParseError::Kind::Semantic, rt.line, rt.column,
                           kw + " entry for route '" + rid.str() + "' before its clear entry");
        }
        auto& seen = kw == "normal" ? normal_seen : reverse_seen;
        if (!seen.insert(rid).second) {
          throw ParseError(ParseError::Kind::Semantic, rt.line, rt.column,
                           "duplicate " + kw + " entry for route '" + rid.str() + "'");
        }
        (kw == "normal" ? it->second.normal : it->second.reverse) = std::move(units);
      }
      note({Section::Clear, rid.str()}, head);
    } else if (kw == "release") {
      const dsl::Token& rt = p.ident("route id");
      RouteId rid(rt.text);
      p.expect(Tok::Colon);
      if (plan.release.count(rid)) {
        throw ParseError(ParseError::Kind::Semantic, rt.line, rt.column,
                         "duplicate release entry for route '" + rid.str() + "'");
      }
      auto& entries = plan.release[rid];
      note({Section::Release, rid.str()}, head);
      while (!p.at_end()) {
        if (!entries.empty()) p.expect(Tok::Comma);
        const dsl::Token& pt = p.ident("point id");
        ReleaseEntry e;
        e.point = UnitId(pt.text);
        p.keyword("by");
        e.cleared_by = UnitId(p.ident("unit id").text);
        entries.push_back(std::move(e));
        note({Section::Release, rid.str(), static_cast<int>(entries.size())}, pt);
      }
    } else if (kw == "plan") {
      LineParser::fail(head, "plan header given twice", "statement");
    } else {
      LineParser::fail(head, "unknown statement '" + kw + "'",
                       "'unit', 'marker', 'route', 'clear', 'normal', 'reverse' or 'release'");
    }
  }

  if (!have_header) {
    throw ParseError(ParseError::Kind::Syntax, 1, 1, "missing plan header", "'plan'");
  }

  for (const auto& v : validate_plan(plan)) {
    if (v.severity != Severity::Error) continue;
    dsl::SourcePos pos{1, 1};
    if (auto it = where.find(v.location); it != where.end()) {
      pos = it->second;
    } else if (auto jt = where.find(Location{v.location.section, v.location.id}); jt != where.end()) {
      pos = jt->second;
    }
    ParseError err(ParseError::Kind::Semantic, pos.line, pos.column, v.message + " [" + v.location.to_string() + "]");
    err.code = v.code;
    throw err;
  }
  return plan;
}

namespace dsl {

inline void print_units(std::ostream& os, const char* kw, const RouteId& id, const std::vector<UnitId>& units) {
  os << kw << ' ' << id << " :";
  for (const auto& u : units) os << ' ' << u;
  os << '\n';
}

}  // namespace dsl

// Canonical text: sections in a fixed order, entries in declaration order
// (route order for the tables).
inline std::string print_plan(const SchemePlan& plan) {
  std::ostringstream os;
  os << "plan " << plan.name << '\n';

  if (!plan.units.empty()) os << '\n';
  for (const auto& u : plan.units) {
    if (const auto* p = u.as_point()) {
      os << "unit point " << u.id << " stem " << p->stem << " left " << p->left << " right " << p->right << '\n';
    } else {
      const auto& l = std::get<Linear>(u.shape);
      os << "unit linear " << u.id << ' ' << l.end_a << ' ' << l.end_b << '\n';
    }
  }

  if (!plan.markers.empty()) os << '\n';
  for (const auto& m : plan.markers) {
    os << "marker " << to_string(m.kind);
    if (!m.name.empty()) os << ' ' << m.name;
    os << " at " << m.at << '\n';
  }

  if (!plan.routes.empty()) os << '\n';
  for (const auto& r : plan.routes) {
    os << "route " << r.id << " :";
    for (const auto& s : r.steps) os << ' ' << s.unit << '(' << s.path.from << ',' << s.path.to << ')';
    os << '\n';
  }

  // Table rows follow route order; rows for unknown routes go last.
  auto ordered_keys = [&](const auto& table) {
    std::vector<RouteId> keys;
    for (const auto& r : plan.routes) {
      if (table.count(r.id) && std::find(keys.begin(), keys.end(), r.id) == keys.end()) keys.push_back(r.id);
    }
    for (const auto& [k, _] : table) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    return keys;
  };

  if (!plan.control.empty()) os << '\n';
  for (const auto& rid : ordered_keys(plan.control)) {
    const auto& e = plan.control.at(rid);
    dsl::print_units(os, "clear", rid, e.clear);
    if (!e.normal.empty()) dsl::print_units(os, "normal", rid, e.normal);
    if (!e.reverse.empty()) dsl::print_units(os, "reverse", rid, e.reverse);
  }

  if (!plan.release.empty()) os << '\n';
  for (const auto& rid : ordered_keys(plan.release)) {
    os << "release " << rid << " :";
    bool first = true;
    for (const auto& e : plan.release.at(rid)) {
      os << (first ? " " : ", ") << e.point << " by " << e.cleared_by;
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace schemeplan
