#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "schemeplan/dsl.hpp"

namespace schemeplan {

struct Multiplicity {
  unsigned lower = 0;
  std::optional<unsigned> upper;  // nullopt = unbounded
  friend bool operator==(const Multiplicity&, const Multiplicity&) = default;
};

struct RelationEnd {
  std::string cls;
  Multiplicity mult;
};

struct Relation {
  enum class Kind { Association, Composition };
  Kind kind = Kind::Association;
  std::string name = "has";
  RelationEnd a;  // a.mult: how many A per B
  RelationEnd b;  // b.mult: how many B per A
  bool dynamic = false;
};

struct Property {
  std::string cls;
  std::string name;
  std::string type;
  bool flexible = false;
};

struct ClassModel {
  std::string name;
  std::vector<std::string> classes;
  std::vector<std::pair<std::string, std::string>> generalisations;  // (sub, super)
  std::vector<Property> properties;
  std::vector<Relation> relations;
};

namespace cm_detail {

struct Word {
  std::string text;
  int column;
};

inline std::vector<Word> split(const std::string& line) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    if (line[i] == ':') {
      out.push_back({":", static_cast<int>(i) + 1});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' && line[j] != ':') ++j;
    out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
    i = j;
  }
  return out;
}

inline std::optional<Multiplicity> parse_mult(const std::string& text) {
  static const std::regex re(R"(\[(\d+|\*)(?:\.\.(\d+|\*))?\])");
  std::smatch m;
  if (!std::regex_match(text, m, re)) return std::nullopt;
  Multiplicity out;
  auto bound = [](const std::string& s) -> std::optional<unsigned> {
    if (s == "*") return std::nullopt;
    return static_cast<unsigned>(std::stoul(s));
  };
  if (!m[2].matched) {
    if (m[1] == "*") return out;  // [*] = [0..*]
    out.lower = *bound(m[1]);
    out.upper = out.lower;
    return out;
  }
  if (m[1] == "*") return std::nullopt;
  out.lower = *bound(m[1]);
  out.upper = bound(m[2]);
  return out;
}

}  // namespace cm_detail

// Line-oriented class-model language:
//   model <Name>
//   class <Name>
//   extends <Sub> <Super>
//   prop rigid|flexible <Class> <name> : <Type>
//   assoc|comp [<name>] <A> <mult> -- <B> <mult> [dynamic]
inline ClassModel parse_class_model(std::string_view text) {
  using cm_detail::Word;
  ClassModel model;
  std::map<std::string, int> class_line;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  bool first = true;

  struct Pending {
    std::string cls;
    Word at;
    int line;
  };
  std::vector<Pending> refs;

  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    auto w = cm_detail::split(raw);
    if (w.empty()) continue;
    auto fail = [&](const Word& at, const std::string& msg, const std::string& expected = {}) {
      throw ParseError(ParseError::Kind::Syntax, line, at.column, msg, expected);
    };
    auto end_col = static_cast<int>(raw.size()) + 1;
    auto word = [&](std::size_t i, const char* what) -> const Word& {
      if (i >= w.size()) throw ParseError(ParseError::Kind::Syntax, line, end_col, "line ends early", what);
      if (!is_identifier(w[i].text)) fail(w[i], "'" + w[i].text + "' is not a valid identifier", what);
      return w[i];
    };
    auto done = [&](std::size_t i) {
      if (i < w.size()) fail(w[i], "unexpected '" + w[i].text + "'", "end of line");
    };

    const std::string kw = w[0].text;
    if (kw == "model") {
      if (!first) fail(w[0], "model header must come first");
      model.name = word(1, "model name").text;
      done(2);
    } else if (kw == "class") {
      const auto& name = word(1, "class name");
      if (class_line.count(name.text)) {
        throw ParseError(ParseError::Kind::Semantic, line, name.column, "class '" + name.text + "' declared twice");
      }
      class_line[name.text] = line;
      model.classes.push_back(name.text);
      done(2);
    } else if (kw == "extends") {
      const auto& sub = word(1, "subclass");
      const auto& sup = word(2, "superclass");
      done(3);
      refs.push_back({sub.text, sub, line});
      refs.push_back({sup.text, sup, line});
      model.generalisations.emplace_back(sub.text, sup.text);
    } else if (kw == "prop") {
      if (w.size() < 2 || (w[1].text != "rigid" && w[1].text != "flexible")) {
        fail(w.size() < 2 ? Word{"", end_col} : w[1], "expected rigidity", "'rigid' or 'flexible'");
      }
      Property p;
      p.flexible = w[1].text == "flexible";
      const auto& cls = word(2, "class name");
      p.cls = cls.text;
      p.name = word(3, "property name").text;
      if (w.size() < 5 || w[4].text != ":") fail(w.size() < 5 ? Word{"", end_col} : w[4], "expected ':'", "':'");
      p.type = word(5, "type name").text;
      done(6);
      refs.push_back({p.cls, cls, line});
      model.properties.push_back(std::move(p));
    } else if (kw == "assoc" || kw == "comp") {
      Relation r;
      r.kind = kw == "comp" ? Relation::Kind::Composition : Relation::Kind::Association;
      std::size_t i = 1;
      if (w.size() > 3 && !w[2].text.empty() && w[2].text[0] != '[') {
        r.name = word(1, "relation name").text;
        i = 2;
      }
      const auto& a = word(i, "class name");
      if (i + 1 >= w.size()) fail(Word{"", end_col}, "line ends early", "multiplicity");
      auto ma = cm_detail::parse_mult(w[i + 1].text);
      if (!ma) fail(w[i + 1], "bad multiplicity '" + w[i + 1].text + "'", "[m..n], [m..*], [*] or [n]");
      if (i + 2 >= w.size() || w[i + 2].text != "--") {
        fail(i + 2 < w.size() ? w[i + 2] : Word{"", end_col}, "expected '--'", "'--'");
      }
      const auto& b = word(i + 3, "class name");
      if (i + 4 >= w.size()) fail(Word{"", end_col}, "line ends early", "multiplicity");
      auto mb = cm_detail::parse_mult(w[i + 4].text);
      if (!mb) fail(w[i + 4], "bad multiplicity '" + w[i + 4].text + "'", "[m..n], [m..*], [*] or [n]");
      std::size_t next = i + 5;
      if (next < w.size() && w[next].text == "dynamic") {
        r.dynamic = true;
        ++next;
      }
      done(next);
      for (const auto* m : {&*ma, &*mb}) {
        if (m->upper && m->lower > *m->upper) {
          throw ParseError(ParseError::Kind::Semantic, line, a.column, "multiplicity lower bound exceeds upper bound");
        }
      }
      r.a = {a.text, *ma};
      r.b = {b.text, *mb};
      refs.push_back({a.text, a, line});
      refs.push_back({b.text, b, line});
      model.relations.push_back(std::move(r));
    } else {
      fail(w[0], "unknown statement '" + kw + "'", "'model', 'class', 'extends', 'prop', 'assoc' or 'comp'");
    }
    first = false;
  }

  for (const auto& ref : refs) {
    if (!class_line.count(ref.cls)) {
      throw ParseError(ParseError::Kind::Semantic, ref.line, ref.at.column, "class '" + ref.cls + "' is not declared");
    }
  }

  // Generalisation must be acyclic: walk supers from each class.
  std::map<std::string, std::vector<std::string>> supers;
  for (const auto& [sub, sup] : model.generalisations) supers[sub].push_back(sup);
  std::map<std::string, int> mark;  // 1 = on stack, 2 = done
  std::function<bool(const std::string&)> cyclic = [&](const std::string& c) {
    if (mark[c] == 1) return true;
    if (mark[c] == 2) return false;
    mark[c] = 1;
    for (const auto& s : supers[c]) {
      if (cyclic(s)) return true;
    }
    mark[c] = 2;
    return false;
  };
  for (const auto& c : model.classes) {
    if (cyclic(c)) {
      throw ParseError(ParseError::Kind::Semantic, class_line[c], 1, "generalisation cycle through class '" + c + "'");
    }
  }
  return model;
}

struct Notation {
  const char* forall;
  const char* exists;
  const char* dot;
  const char* neg;
  const char* conj;
  const char* disj;
  const char* implies;
  const char* times;
  const char* partial;

  static Notation ascii() { return {"forall", "exists", ".", "not", "/\\", "\\/", "=>", "*", "->?"}; }
  static Notation unicode() { return {"∀", "∃", "•", "¬", "∧", "∨", "⇒", "×", "→?"}; }
};

namespace cm_detail {

inline std::string var_base(const std::string& cls) {
  std::string v(1, static_cast<char>(std::tolower(static_cast<unsigned char>(cls[0]))));
  return v;
}

inline std::vector<std::string> vars(const std::string& base, unsigned n) {
  if (n == 1) return {base};
  std::vector<std::string> out;
  for (unsigned i = 1; i <= n; ++i) out.push_back(base + std::to_string(i));
  return out;
}

inline std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

// Multiplicity axioms for the `many` end seen from one `owner`.
// `atom(o, m)` renders the relation with arguments in declaration order.
template <class Atom>
void multiplicity_axioms(std::vector<std::string>& out, const Notation& n, const std::string& owner_cls,
                         const std::string& many_cls, const Multiplicity& mult, Atom atom) {
  std::string ov = var_base(owner_cls);
  std::string mv = var_base(many_cls);
  if (mv == ov) {
    mv.clear();
    for (char c : many_cls) mv += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (mv == ov) mv += "x";
  }
  const std::string d = std::string(" ") + n.dot + " ";
  if (mult.lower > 0) {
    auto ws = vars(mv, mult.lower);
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < ws.size(); ++i) {
      for (std::size_t j = i + 1; j < ws.size(); ++j) parts.push_back(std::string(n.neg) + " (" + ws[i] + " = " + ws[j] + ")");
    }
    for (const auto& w : ws) parts.push_back(atom(ov, w));
    out.push_back(std::string(n.dot) + " " + n.forall + " " + ov + " : " + owner_cls + d + n.exists + " " + join(ws, ", ") +
                  " : " + many_cls + d + join(parts, std::string(" ") + n.conj + " "));
  }
  if (mult.upper) {
    auto ws = vars(mv, *mult.upper + 1);
    if (ws.size() == 1) ws = {mv + "1"};  // upper bound 0
    std::vector<std::string> atoms, eqs;
    for (const auto& w : ws) atoms.push_back(atom(ov, w));
    for (std::size_t i = 0; i < ws.size(); ++i) {
      for (std::size_t j = i + 1; j < ws.size(); ++j) eqs.push_back(ws[i] + " = " + ws[j]);
    }
    std::string conclusion = eqs.empty() ? "false" : join(eqs, std::string(" ") + n.disj + " ");
    if (*mult.upper == 0) {
      out.push_back(std::string(n.dot) + " " + n.forall + " " + ov + " : " + owner_cls + "; " + ws[0] + " : " + many_cls +
                    d + n.neg + " " + atoms[0]);
    } else {
      out.push_back(std::string(n.dot) + " " + n.forall + " " + ov + " : " + owner_cls + "; " + join(ws, ", ") + " : " +
                    many_cls + d + join(atoms, std::string(" ") + n.conj + " ") + " " + n.implies + " " + conclusion);
    }
  }
}

inline std::string emit(const ClassModel& model, const Notation& n, bool lift_time) {
  std::ostringstream os;
  const std::string x = std::string(" ") + n.times + " ";

  std::vector<std::string> sorts = model.classes;
  for (const auto& p : model.properties) {
    if (p.type == "Boolean") continue;
    if (std::find(sorts.begin(), sorts.end(), p.type) == sorts.end()) sorts.push_back(p.type);
  }

  if (lift_time || !sorts.empty()) os << "%% Classes:\n";
  if (lift_time) {
    std::vector<std::string> all{"Time"};
    all.insert(all.end(), sorts.begin(), sorts.end());
    os << (all.size() == 1 ? "sort " : "sorts ") << join(all, ", ") << '\n';
  } else if (!sorts.empty()) {
    os << (sorts.size() == 1 ? "sort " : "sorts ") << join(sorts, ", ") << '\n';
  }

  if (!model.generalisations.empty()) {
    os << "%% Hierarchy:\n";
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::string>> subs;
    for (const auto& [sub, sup] : model.generalisations) {
      if (!subs.count(sup)) order.push_back(sup);
      subs[sup].push_back(sub);
    }
    std::vector<std::string> groups;
    for (const auto& sup : order) groups.push_back(join(subs[sup], ", ") + " < " + sup);
    os << "sorts " << join(groups, "; ") << '\n';
  }

  if (!model.properties.empty()) {
    os << "%% Properties:\n";
    for (const auto& p : model.properties) {
      os << (p.flexible && !lift_time ? "flexible ops " : "op ") << p.name << " : " << p.cls
         << (p.flexible && lift_time ? x + "Time" : "") << " " << n.partial << " " << p.type << '\n';
    }
  }

  auto relations = [&](Relation::Kind kind, const char* title) {
    bool any = false;
    for (const auto& r : model.relations) {
      if (r.kind != kind) continue;
      if (!any) os << "%% " << title << ":\n";
      any = true;
      os << (r.dynamic && !lift_time ? "flexible preds " : "pred ") << r.name << " : " << r.a.cls << x << r.b.cls
         << (r.dynamic && lift_time ? x + "Time" : "") << '\n';
    }
  };
  relations(Relation::Kind::Composition, "Compositions");
  relations(Relation::Kind::Association, "Associations");

  if (!sorts.empty()) {
    os << "%% Is Alive preds:\n";
    std::vector<std::string> preds;
    for (const auto& s : sorts) preds.push_back("isAlive : " + s);
    os << "preds " << join(preds, "; ") << '\n';
    os << "%% the technical axioms constraining isAlive are not generated\n";
  }

  std::vector<std::string> axioms;
  for (const auto& r : model.relations) {
    // Keep the time variable clear of the relation's own variables.
    std::string tv = var_base(r.a.cls) == "t" || var_base(r.b.cls) == "t" ? "time" : "t";
    auto atom = [&](const std::string& a, const std::string& b) {
      return r.name + "(" + a + "," + b + (r.dynamic && lift_time ? "," + tv : "") + ")";
    };
    auto swapped = [&](const std::string& b, const std::string& a) { return atom(a, b); };
    std::vector<std::string> here;
    multiplicity_axioms(here, n, r.a.cls, r.b.cls, r.b.mult, atom);
    multiplicity_axioms(here, n, r.b.cls, r.a.cls, r.a.mult, swapped);
    if (r.dynamic && lift_time) {
      for (auto& ax : here) ax = std::string(n.dot) + " " + n.forall + " " + tv + " : Time " + ax;
    }
    axioms.insert(axioms.end(), here.begin(), here.end());
  }
  if (!axioms.empty()) {
    os << "%% Multiplicities:\n";
    for (const auto& a : axioms) os << a << '\n';
  }
  return os.str();
}

}  // namespace cm_detail

// Signature and multiplicity axioms in modal form: flexible symbols carry the
// `flexible` keyword, everything else is rigid by default.
inline std::string emit_modal(const ClassModel& model, const Notation& n = Notation::ascii()) {
  return cm_detail::emit(model, n, false);
}

// The Time-parameter translation: adds sort Time and a Time argument to every
// flexible symbol; rigid symbols and their axioms are unchanged.
inline std::string emit_casl(const ClassModel& model, const Notation& n = Notation::ascii()) {
  return cm_detail::emit(model, n, true);
}

}  // namespace schemeplan
