#include "clx/formula.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <functional>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace clx {

struct Formula::Node {
  Op op;
  Atom atom;            // Op::Atom only
  const Node* a = nullptr;
  const Node* b = nullptr;
  long long size = 1;
  size_t hash = 0;
};

namespace {

struct NodeKey {
  Op op;
  const Formula::Node* a;
  const Formula::Node* b;
  Atom atom;
  bool operator==(const NodeKey& o) const {
    return op == o.op && a == o.a && b == o.b && atom == o.atom;
  }
};

struct NodeKeyHash {
  size_t operator()(const NodeKey& k) const {
    size_t h = std::hash<int>()(int(k.op));
    h = h * 1000003u ^ std::hash<const void*>()(k.a);
    h = h * 1000003u ^ std::hash<const void*>()(k.b);
    h = h * 1000003u ^ std::hash<int>()(int(k.atom.kind));
    h = h * 1000003u ^ std::hash<std::string>()(k.atom.name);
    return h;
  }
};

struct Pool {
  std::mutex mu;
  std::deque<Formula::Node> nodes;
  std::unordered_map<NodeKey, const Formula::Node*, NodeKeyHash> table;

  const Formula::Node* intern(Op op, const Atom& atom, const Formula::Node* a,
                              const Formula::Node* b) {
    NodeKey key{op, a, b, atom};
    std::lock_guard<std::mutex> lk(mu);
    auto it = table.find(key);
    if (it != table.end()) return it->second;
    Formula::Node n;
    n.op = op;
    n.atom = atom;
    n.a = a;
    n.b = b;
    switch (op) {
      case Op::Falsum:
      case Op::Atom:
        n.size = 1;
        break;
      case Op::Box:
        n.size = 1 + a->size;
        break;
      case Op::Imp:
        n.size = 1 + a->size + b->size;
        break;
    }
    n.hash = NodeKeyHash()(key);
    nodes.push_back(n);
    const Formula::Node* p = &nodes.back();
    table.emplace(key, p);
    return p;
  }
};

Pool& pool() {
  static Pool* p = new Pool;
  return *p;
}

const Formula::Node* falsum_node() {
  static const Formula::Node* n = pool().intern(Op::Falsum, Atom{AtomKind::Variable, ""}, nullptr, nullptr);
  return n;
}

}  // namespace

Formula::Formula() : n_(falsum_node()) {}

Formula Formula::falsum() { return Formula(falsum_node()); }

Formula Formula::atom(const Atom& a) {
  assert(!a.name.empty());
  return Formula(pool().intern(Op::Atom, a, nullptr, nullptr));
}

Formula Formula::imp(Formula a, Formula b) {
  return Formula(pool().intern(Op::Imp, Atom{AtomKind::Variable, ""}, a.n_, b.n_));
}

Formula Formula::box(Formula a) {
  return Formula(pool().intern(Op::Box, Atom{AtomKind::Variable, ""}, a.n_, nullptr));
}

Formula Formula::top() { return imp(falsum(), falsum()); }
Formula Formula::neg(Formula a) { return imp(a, falsum()); }
Formula Formula::conj(Formula a, Formula b) { return neg(imp(a, neg(b))); }
Formula Formula::disj(Formula a, Formula b) { return imp(neg(a), b); }
Formula Formula::iff(Formula a, Formula b) { return conj(imp(a, b), imp(b, a)); }
Formula Formula::dia(Formula a) { return neg(box(neg(a))); }
Formula Formula::boxdot(Formula a) { return conj(a, box(a)); }
Formula Formula::diadot(Formula a) { return disj(a, dia(a)); }

Formula Formula::conj(const std::vector<Formula>& fs) {
  if (fs.empty()) return top();
  Formula acc = fs.front();
  for (size_t i = 1; i < fs.size(); ++i) acc = conj(acc, fs[i]);
  return acc;
}

Formula Formula::disj(const std::vector<Formula>& fs) {
  if (fs.empty()) return falsum();
  Formula acc = fs.front();
  for (size_t i = 1; i < fs.size(); ++i) acc = disj(acc, fs[i]);
  return acc;
}

Op Formula::op() const { return n_->op; }
const Atom& Formula::atom_ref() const { return n_->atom; }
Formula Formula::left() const { return Formula(n_->a); }
Formula Formula::right() const { return Formula(n_->b); }
Formula Formula::child() const { return Formula(n_->a); }
long long Formula::size() const { return n_->size; }
size_t Formula::hash() const { return n_->hash; }

bool Formula::is_top() const {
  return op() == Op::Imp && left().is_falsum() && right().is_falsum();
}

int Formula::compare(const Formula& a, const Formula& b) {
  if (a.n_ == b.n_) return 0;
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  if (a.op() != b.op()) return int(a.op()) < int(b.op()) ? -1 : 1;
  switch (a.op()) {
    case Op::Falsum:
      return 0;
    case Op::Atom: {
      const Atom& x = a.atom_ref();
      const Atom& y = b.atom_ref();
      if (x == y) return 0;
      return x < y ? -1 : 1;
    }
    case Op::Box:
      return compare(a.child(), b.child());
    case Op::Imp: {
      int c = compare(a.left(), b.left());
      if (c != 0) return c;
      return compare(a.right(), b.right());
    }
  }
  return 0;
}

void Formula::collect_atoms(std::set<Atom>& out) const {
  switch (op()) {
    case Op::Falsum:
      return;
    case Op::Atom:
      out.insert(atom_ref());
      return;
    case Op::Box:
      child().collect_atoms(out);
      return;
    case Op::Imp:
      left().collect_atoms(out);
      right().collect_atoms(out);
      return;
  }
}

std::set<Atom> Formula::atoms() const {
  std::set<Atom> s;
  collect_atoms(s);
  return s;
}

// ---------------------------------------------------------------------------
// Printing. The printer recognizes the derived-connective encodings and emits
// the sugared syntax; parse(print(f)) == f.

namespace {

enum class Sugar { Falsum, Top, AtomS, Not, And, Or, Imp, Iff, Box, Dia, BoxDot, DiaDot };

struct SugarView {
  Sugar s;
  Formula a, b;
};

bool match_not(const Formula& f, Formula& a) {
  if (f.op() != Op::Imp || !f.right().is_falsum()) return false;
  a = f.left();
  return true;
}

bool match_and(const Formula& f, Formula& a, Formula& b) {
  // ¬(a → ¬b)
  Formula inner;
  if (!match_not(f, inner)) return false;
  if (inner.op() != Op::Imp) return false;
  Formula nb;
  if (!match_not(inner.right(), nb)) return false;
  a = inner.left();
  b = nb;
  return true;
}

bool match_or(const Formula& f, Formula& a, Formula& b) {
  // ¬a → b, with b ≠ ⊥ (that case prints as negation)
  if (f.op() != Op::Imp) return false;
  Formula na;
  if (!match_not(f.left(), na)) return false;
  if (f.right().is_falsum()) return false;
  a = na;
  b = f.right();
  return true;
}

bool match_dia(const Formula& f, Formula& a) {
  // ¬□¬a
  Formula inner;
  if (!match_not(f, inner)) return false;
  if (inner.op() != Op::Box) return false;
  Formula na;
  if (!match_not(inner.child(), na)) return false;
  a = na;
  return true;
}

SugarView view(const Formula& f) {
  if (f.is_falsum()) return {Sugar::Falsum, f, f};
  if (f.op() == Op::Atom) return {Sugar::AtomS, f, f};
  if (f.op() == Op::Box) return {Sugar::Box, f.child(), f};
  if (f.is_top()) return {Sugar::Top, f, f};
  Formula a, b;
  if (match_and(f, a, b)) {
    if (b.op() == Op::Box && b.child() == a) return {Sugar::BoxDot, a, b};
    // a↔b = (a→b)∧(b→a)
    if (a.op() == Op::Imp && b.op() == Op::Imp && a.left() == b.right() &&
        a.right() == b.left() && !(a == b))
      return {Sugar::Iff, a.left(), a.right()};
    return {Sugar::And, a, b};
  }
  if (match_dia(f, a)) return {Sugar::Dia, a, f};
  if (match_or(f, a, b)) {
    Formula da;
    if (match_dia(b, da) && da == a) return {Sugar::DiaDot, a, b};
    return {Sugar::Or, a, b};
  }
  if (match_not(f, a)) return {Sugar::Not, a, f};
  return {Sugar::Imp, f.left(), f.right()};
}

// Precedence: iff(1) < imp(2) < or(3) < and(4) < unary(5) < atoms.
int sugar_prec(Sugar s) {
  switch (s) {
    case Sugar::Iff: return 1;
    case Sugar::Imp: return 2;
    case Sugar::Or: return 3;
    case Sugar::And: return 4;
    case Sugar::Not:
    case Sugar::Box:
    case Sugar::Dia:
    case Sugar::BoxDot:
    case Sugar::DiaDot: return 5;
    default: return 6;
  }
}

void print_rec(const Formula& f, std::ostringstream& out, int min_prec) {
  SugarView v = view(f);
  int p = sugar_prec(v.s);
  bool paren = p < min_prec;
  if (paren) out << "(";
  switch (v.s) {
    case Sugar::Falsum: out << "false"; break;
    case Sugar::Top: out << "true"; break;
    case Sugar::AtomS:
      if (f.atom_ref().is_parameter()) out << "$";
      out << f.atom_ref().name;
      break;
    case Sugar::Not: out << "!"; print_rec(v.a, out, 5); break;
    case Sugar::Box: out << "[]"; print_rec(v.a, out, 5); break;
    case Sugar::Dia: out << "<>"; print_rec(v.a, out, 5); break;
    case Sugar::BoxDot: out << "[.]"; print_rec(v.a, out, 5); break;
    case Sugar::DiaDot: out << "<.>"; print_rec(v.a, out, 5); break;
    case Sugar::And:
      print_rec(v.a, out, 4); out << " & "; print_rec(v.b, out, 5);
      break;
    case Sugar::Or:
      print_rec(v.a, out, 3); out << " | "; print_rec(v.b, out, 4);
      break;
    case Sugar::Imp:
      print_rec(v.a, out, 3); out << " -> "; print_rec(v.b, out, 2);
      break;
    case Sugar::Iff:
      print_rec(v.a, out, 2); out << " <-> "; print_rec(v.b, out, 2);
      break;
  }
  if (paren) out << ")";
}

}  // namespace

std::string Formula::print() const {
  if (size() > 1000000)
    return "<formula with " + std::to_string(size()) + " symbols, " +
           std::to_string(dag_size(*this)) + " distinct subterms>";
  std::ostringstream out;
  print_rec(*this, out, 0);
  return out.str();
}

// ---------------------------------------------------------------------------
// Parser.

namespace {

struct Token {
  enum Kind { Ident, Param, True, False, LPar, RPar, Not, And, Or, Arrow, Iff,
              Box, Dia, BoxDot, DiaDot, Comma, Slash, End } kind;
  std::string text;
  int pos;
};

struct Lexer {
  const std::string& s;
  size_t i = 0;
  explicit Lexer(const std::string& str) : s(str) {}

  Token next() {
    while (i < s.size() && isspace(static_cast<unsigned char>(s[i]))) ++i;
    int pos = int(i);
    if (i >= s.size()) return {Token::End, "", pos};
    char c = s[i];
    auto two = [&](size_t n) { return s.substr(i, n); };
    if (two(3) == "<->") { i += 3; return {Token::Iff, "<->", pos}; }
    if (two(3) == "[.]") { i += 3; return {Token::BoxDot, "[.]", pos}; }
    if (two(3) == "<.>") { i += 3; return {Token::DiaDot, "<.>", pos}; }
    if (two(2) == "->") { i += 2; return {Token::Arrow, "->", pos}; }
    if (two(2) == "[]") { i += 2; return {Token::Box, "[]", pos}; }
    if (two(2) == "<>") { i += 2; return {Token::Dia, "<>", pos}; }
    switch (c) {
      case '(': ++i; return {Token::LPar, "(", pos};
      case ')': ++i; return {Token::RPar, ")", pos};
      case '!': ++i; return {Token::Not, "!", pos};
      case '&': ++i; return {Token::And, "&", pos};
      case '|': ++i; return {Token::Or, "|", pos};
      case ',': ++i; return {Token::Comma, ",", pos};
      case '/': ++i; return {Token::Slash, "/", pos};
      case '$': {
        ++i;
        size_t j = i;
        while (j < s.size() && (isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
        if (j == i) throw ParseError(pos, "expected identifier after '$'");
        std::string name = s.substr(i, j - i);
        i = j;
        return {Token::Param, name, pos};
      }
      default:
        if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
          size_t j = i;
          while (j < s.size() && (isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
          std::string name = s.substr(i, j - i);
          i = j;
          if (name == "true") return {Token::True, name, pos};
          if (name == "false") return {Token::False, name, pos};
          return {Token::Ident, name, pos};
        }
        throw ParseError(pos, std::string("unexpected character '") + c + "'");
    }
  }
};

struct Parser {
  std::vector<Token> toks;
  size_t i = 0;
  const std::set<std::string>& declared;

  Parser(const std::string& text, const std::set<std::string>& decl) : declared(decl) {
    Lexer lx(text);
    for (;;) {
      Token t = lx.next();
      toks.push_back(t);
      if (t.kind == Token::End) break;
    }
  }

  const Token& peek() const { return toks[i]; }
  Token take() { return toks[i++]; }
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(peek().pos, msg); }

  Formula fla() { return iff(); }

  Formula iff() {
    Formula f = imp();
    while (peek().kind == Token::Iff) {
      take();
      f = Formula::iff(f, imp());
    }
    return f;
  }

  Formula imp() {
    Formula f = or_();
    if (peek().kind == Token::Arrow) {
      take();
      return Formula::imp(f, imp());  // right associative
    }
    return f;
  }

  Formula or_() {
    Formula f = and_();
    while (peek().kind == Token::Or) {
      take();
      f = Formula::disj(f, and_());
    }
    return f;
  }

  Formula and_() {
    Formula f = un();
    while (peek().kind == Token::And) {
      take();
      f = Formula::conj(f, un());
    }
    return f;
  }

  Formula un() {
    switch (peek().kind) {
      case Token::Not: take(); return Formula::neg(un());
      case Token::Box: take(); return Formula::box(un());
      case Token::Dia: take(); return Formula::dia(un());
      case Token::BoxDot: take(); return Formula::boxdot(un());
      case Token::DiaDot: take(); return Formula::diadot(un());
      default: return atom();
    }
  }

  Formula atom() {
    Token t = peek();
    switch (t.kind) {
      case Token::True: take(); return Formula::top();
      case Token::False: take(); return Formula::falsum();
      case Token::LPar: {
        take();
        Formula f = fla();
        if (peek().kind != Token::RPar) fail("expected ')'");
        take();
        return f;
      }
      case Token::Param: take(); return Formula::atom(param(t.text));
      case Token::Ident:
        take();
        if (declared.count(t.text)) return Formula::atom(param(t.text));
        return Formula::atom(var(t.text));
      default:
        fail("expected formula");
    }
  }

  std::vector<Formula> fla_list(Token::Kind stop1, Token::Kind stop2) {
    std::vector<Formula> out;
    if (peek().kind == stop1 || peek().kind == stop2) return out;
    out.push_back(fla());
    while (peek().kind == Token::Comma) {
      take();
      out.push_back(fla());
    }
    return out;
  }
};

}  // namespace

Formula parse(const std::string& text, const std::set<std::string>& declared_params) {
  Parser p(text, declared_params);
  Formula f = p.fla();
  if (p.peek().kind != Token::End) p.fail("trailing input");
  return f;
}

Rule::Rule(std::vector<Formula> prem, std::vector<Formula> concl)
    : premises(std::move(prem)), conclusions(std::move(concl)) {
  auto norm = [](std::vector<Formula>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  norm(premises);
  norm(conclusions);
}

std::string Rule::print() const {
  std::ostringstream out;
  for (size_t i = 0; i < premises.size(); ++i) {
    if (i) out << ", ";
    out << premises[i].print();
  }
  out << " / ";
  for (size_t i = 0; i < conclusions.size(); ++i) {
    if (i) out << ", ";
    out << conclusions[i].print();
  }
  return out.str();
}

std::set<Atom> Rule::atoms() const {
  std::set<Atom> s;
  for (const auto& f : premises) f.collect_atoms(s);
  for (const auto& f : conclusions) f.collect_atoms(s);
  return s;
}

Rule parse_rule(const std::string& text, const std::set<std::string>& declared_params) {
  Parser p(text, declared_params);
  std::vector<Formula> prem = p.fla_list(Token::Slash, Token::Slash);
  if (p.peek().kind != Token::Slash) p.fail("expected '/'");
  p.take();
  std::vector<Formula> concl = p.fla_list(Token::End, Token::End);
  if (p.peek().kind != Token::End) p.fail(p.peek().kind == Token::Slash ? "more than one '/'" : "trailing input");
  return Rule(std::move(prem), std::move(concl));
}

// ---------------------------------------------------------------------------
// Substitution.

void Substitution::set(const Atom& v, Formula f) {
  if (v.is_parameter()) throw std::invalid_argument("substitution domain must be variables");
  if (f == Formula::atom(v)) {
    map_.erase(v);
    return;
  }
  map_[v] = f;
}

std::optional<Formula> Substitution::lookup(const Atom& v) const {
  auto it = map_.find(v);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

namespace {

Formula apply_rec(const std::map<Atom, Formula>& m, Formula f,
                  std::unordered_map<const Formula::Node*, Formula>& memo) {
  auto it = memo.find(f.node());
  if (it != memo.end()) return it->second;
  Formula out = f;
  switch (f.op()) {
    case Op::Falsum:
      break;
    case Op::Atom: {
      auto mi = m.find(f.atom_ref());
      if (mi != m.end()) out = mi->second;
      break;
    }
    case Op::Box:
      out = Formula::box(apply_rec(m, f.child(), memo));
      break;
    case Op::Imp:
      out = Formula::imp(apply_rec(m, f.left(), memo), apply_rec(m, f.right(), memo));
      break;
  }
  memo.emplace(f.node(), out);
  return out;
}

}  // namespace

Formula Substitution::apply(Formula f) const {
  if (map_.empty()) return f;
  std::unordered_map<const Formula::Node*, Formula> memo;
  return apply_rec(map_, f, memo);
}

std::vector<Formula> Substitution::apply(const std::vector<Formula>& fs) const {
  std::vector<Formula> out;
  out.reserve(fs.size());
  for (const auto& f : fs) out.push_back(apply(f));
  return out;
}

Substitution Substitution::compose(const Substitution& sigma, const Substitution& tau) {
  Substitution r;
  for (const auto& [v, f] : tau.map_) r.set(v, sigma.apply(f));
  for (const auto& [v, f] : sigma.map_) {
    if (!tau.map_.count(v)) r.set(v, f);
  }
  return r;
}

std::string Substitution::print() const {
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (const auto& [v, f] : map_) {
    if (!first) out << ", ";
    first = false;
    out << v.name << " := " << f.print();
  }
  out << "}";
  return out.str();
}

// ---------------------------------------------------------------------------
// Subformulas and complexity statistics.

namespace {

void collect_sub(Formula f, std::set<Formula>& seen) {
  if (seen.count(f)) return;
  seen.insert(f);
  switch (f.op()) {
    case Op::Falsum:
    case Op::Atom:
      return;
    case Op::Box:
      collect_sub(f.child(), seen);
      return;
    case Op::Imp:
      collect_sub(f.left(), seen);
      collect_sub(f.right(), seen);
      return;
  }
}

}  // namespace

std::vector<Formula> subformulas(const std::vector<Formula>& gamma) {
  std::set<Formula> seen;
  for (const auto& f : gamma) collect_sub(f, seen);
  return std::vector<Formula>(seen.begin(), seen.end());
}

std::size_t dag_size(Formula f) {
  std::set<Formula> seen;
  collect_sub(f, seen);
  return seen.size();
}

bool is_subformula_closed(const std::vector<Formula>& sigma) {
  std::set<Formula> s(sigma.begin(), sigma.end());
  for (const auto& f : sigma) {
    switch (f.op()) {
      case Op::Falsum:
      case Op::Atom:
        break;
      case Op::Box:
        if (!s.count(f.child())) return false;
        break;
      case Op::Imp:
        if (!s.count(f.left()) || !s.count(f.right())) return false;
        break;
    }
  }
  return true;
}

ComplexityStats stats(const std::vector<Formula>& gamma, const std::vector<Formula>& delta) {
  std::vector<Formula> all = gamma;
  all.insert(all.end(), delta.begin(), delta.end());
  std::vector<Formula> sigma_all = subformulas(all);
  int b = 0;
  for (const auto& f : sigma_all)
    if (f.op() == Op::Box) ++b;

  std::vector<Formula> sigma_g = subformulas(gamma);
  std::set<Formula> theta;
  for (const auto& f : sigma_g) {
    if (f.op() == Op::Atom && f.atom_ref().is_parameter()) theta.insert(f);
    if (f.op() == Op::Box) {
      theta.insert(f);
      theta.insert(f.child());
    }
  }
  long long n = 0;
  for (const auto& f : all) n += f.size();
  return ComplexityStats{b, int(theta.size()), n};
}

long long countermodel_size_bound(const ComplexityStats& s, std::size_t delta_size) {
  return 3ll * (1ll << s.b) * ((1ll << s.m) + (long long)delta_size);
}

// ---------------------------------------------------------------------------
// Simplifier: Boolean-skeleton minimization with opaque boxes and atoms.

namespace {

// Tiny BDD with if-then-else over a fixed leaf order.
struct Bdd {
  struct BNode { int var; int lo, hi; };
  std::vector<BNode> nodes;  // 0 = false, 1 = true
  std::map<std::tuple<int, int, int>, int> unique;
  std::map<std::tuple<int, int, int>, int> ite_memo;

  Bdd() {
    nodes.push_back({-1, 0, 0});
    nodes.push_back({-1, 1, 1});
  }

  int mk(int var, int lo, int hi) {
    if (lo == hi) return lo;
    auto key = std::make_tuple(var, lo, hi);
    auto it = unique.find(key);
    if (it != unique.end()) return it->second;
    nodes.push_back({var, lo, hi});
    int id = int(nodes.size()) - 1;
    unique.emplace(key, id);
    return id;
  }

  int var_of(int f) const { return nodes[f].var; }

  int ite(int f, int g, int h) {
    if (f == 1) return g;
    if (f == 0) return h;
    if (g == h) return g;
    if (g == 1 && h == 0) return f;
    auto key = std::make_tuple(f, g, h);
    auto it = ite_memo.find(key);
    if (it != ite_memo.end()) return it->second;
    auto top = [&](int x) {
      return x <= 1 ? INT32_MAX : nodes[x].var;
    };
    int v = std::min(std::min(top(f), top(g)), top(h));
    auto cof = [&](int x, bool hi) {
      if (x <= 1 || nodes[x].var != v) return x;
      return hi ? nodes[x].hi : nodes[x].lo;
    };
    int hi = ite(cof(f, true), cof(g, true), cof(h, true));
    int lo = ite(cof(f, false), cof(g, false), cof(h, false));
    int r = mk(v, lo, hi);
    ite_memo.emplace(key, r);
    return r;
  }

  int band(int a, int b) { return ite(a, b, 0); }
  int bor(int a, int b) { return ite(a, 1, b); }
  int bnot(int a) { return ite(a, 0, 1); }
  int bimp(int a, int b) { return ite(a, b, 1); }
};

// Collect the Boolean skeleton leaves (atoms and boxes) in DFS order.
void collect_leaves(Formula f, std::vector<Formula>& order, std::set<Formula>& seen) {
  if (seen.count(f)) return;
  seen.insert(f);
  switch (f.op()) {
    case Op::Falsum:
      return;
    case Op::Atom:
    case Op::Box:
      order.push_back(f);
      return;
    case Op::Imp:
      collect_leaves(f.left(), order, seen);
      collect_leaves(f.right(), order, seen);
      return;
  }
}

int to_bdd(Formula f, Bdd& bdd, const std::map<Formula, int>& leaf_idx) {
  switch (f.op()) {
    case Op::Falsum:
      return 0;
    case Op::Atom:
    case Op::Box:
      return bdd.mk(leaf_idx.at(f), 0, 1);
    case Op::Imp:
      return bdd.bimp(to_bdd(f.left(), bdd, leaf_idx), to_bdd(f.right(), bdd, leaf_idx));
  }
  return 0;
}

Formula from_bdd(const Bdd& bdd, int f, const std::vector<Formula>& leaves,
                 std::map<int, Formula>& memo) {
  if (f == 0) return Formula::falsum();
  if (f == 1) return Formula::top();
  auto it = memo.find(f);
  if (it != memo.end()) return it->second;
  const auto& n = bdd.nodes[f];
  Formula v = leaves[n.var];
  Formula out;
  if (n.hi == 1 && n.lo == 0) {
    out = v;
  } else if (n.hi == 0 && n.lo == 1) {
    out = Formula::neg(v);
  } else if (n.hi == 1) {
    out = Formula::disj(v, from_bdd(bdd, n.lo, leaves, memo));
  } else if (n.lo == 0) {
    out = Formula::conj(v, from_bdd(bdd, n.hi, leaves, memo));
  } else if (n.hi == 0) {
    out = Formula::conj(Formula::neg(v), from_bdd(bdd, n.lo, leaves, memo));
  } else if (n.lo == 1) {
    out = Formula::imp(v, from_bdd(bdd, n.hi, leaves, memo));
  } else {
    Formula hi = from_bdd(bdd, n.hi, leaves, memo);
    Formula lo = from_bdd(bdd, n.lo, leaves, memo);
    out = Formula::conj(Formula::imp(v, hi), Formula::disj(v, lo));
  }
  memo.emplace(f, out);
  return out;
}

Formula fold_constants(Formula f, std::unordered_map<const Formula::Node*, Formula>& memo) {
  auto it = memo.find(f.node());
  if (it != memo.end()) return it->second;
  Formula out = f;
  switch (f.op()) {
    case Op::Falsum:
    case Op::Atom:
      break;
    case Op::Box: {
      Formula c = fold_constants(f.child(), memo);
      out = c.is_top() ? Formula::top() : Formula::box(c);  // □⊤ = ⊤ over K4
      break;
    }
    case Op::Imp: {
      Formula a = fold_constants(f.left(), memo);
      Formula b = fold_constants(f.right(), memo);
      if (a.is_falsum() || b.is_top())
        out = Formula::top();
      else if (a.is_top())
        out = b;
      else if (a == b)
        out = Formula::top();
      else
        out = Formula::imp(a, b);
      break;
    }
  }
  memo.emplace(f.node(), out);
  return out;
}

Formula simplify_rec(Formula f, std::size_t max_leaves,
                     std::unordered_map<const Formula::Node*, Formula>& memo) {
  auto it = memo.find(f.node());
  if (it != memo.end()) return it->second;
  Formula out;
  if (f.op() == Op::Falsum || f.op() == Op::Atom) {
    out = f;
  } else if (f.op() == Op::Box) {
    Formula c = simplify_rec(f.child(), max_leaves, memo);
    out = c.is_top() ? Formula::top() : Formula::box(c);
  } else {
    // Simplify the maximal boxed leaves first, then minimize the skeleton.
    std::vector<Formula> order;
    std::set<Formula> seen;
    collect_leaves(f, order, seen);
    Substitution leaf_sub;
    std::map<Formula, Formula> leaf_map;
    bool changed = false;
    for (const auto& leaf : order) {
      if (leaf.op() == Op::Box) {
        Formula s = simplify_rec(leaf, max_leaves, memo);
        if (s != leaf) changed = true;
        leaf_map[leaf] = s;
      } else {
        leaf_map[leaf] = leaf;
      }
    }
    Formula g = f;
    if (changed) {
      std::unordered_map<const Formula::Node*, Formula> rmemo;
      std::function<Formula(Formula)> rebuild = [&](Formula h) -> Formula {
        auto hit = rmemo.find(h.node());
        if (hit != rmemo.end()) return hit->second;
        Formula r = h;
        if (h.op() == Op::Atom || h.op() == Op::Box)
          r = leaf_map.at(h);
        else if (h.op() == Op::Imp)
          r = Formula::imp(rebuild(h.left()), rebuild(h.right()));
        rmemo.emplace(h.node(), r);
        return r;
      };
      g = rebuild(f);
    }
    order.clear();
    seen.clear();
    collect_leaves(g, order, seen);
    if (order.size() <= max_leaves) {
      Bdd bdd;
      std::map<Formula, int> leaf_idx;
      for (size_t i = 0; i < order.size(); ++i) leaf_idx[order[i]] = int(i);
      int b = to_bdd(g, bdd, leaf_idx);
      std::map<int, Formula> fmemo;
      out = from_bdd(bdd, b, order, fmemo);
    } else {
      std::unordered_map<const Formula::Node*, Formula> cmemo;
      out = fold_constants(g, cmemo);
    }
  }
  memo.emplace(f.node(), out);
  return out;
}

}  // namespace

Formula simplify(Formula f, std::size_t max_leaves) {
  std::unordered_map<const Formula::Node*, Formula> memo;
  return simplify_rec(f, max_leaves, memo);
}

}  // namespace clx
