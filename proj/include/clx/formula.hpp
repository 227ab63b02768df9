#ifndef CLX_FORMULA_HPP
#define CLX_FORMULA_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace clx {

enum class AtomKind : uint8_t { Variable, Parameter };

// (kind, name) is the identity of an atom; names are nonempty identifiers.
struct Atom {
  AtomKind kind;
  std::string name;

  bool operator==(const Atom& o) const { return kind == o.kind && name == o.name; }
  bool operator<(const Atom& o) const {
    if (kind != o.kind) return kind < o.kind;
    return name < o.name;
  }
  bool is_parameter() const { return kind == AtomKind::Parameter; }
};

inline Atom var(std::string name) { return Atom{AtomKind::Variable, std::move(name)}; }
inline Atom param(std::string name) { return Atom{AtomKind::Parameter, std::move(name)}; }

enum class Op : uint8_t { Falsum, Atom, Imp, Box };

// Immutable modal formula over the primitive core {⊥, →, □}. Nodes are
// interned, so equality is pointer equality and subterm sharing is free.
// Derived connectives are stored as their primitive expansions:
//   ⊤ = ⊥→⊥, ¬a = a→⊥, a∧b = ¬(a→¬b), a∨b = ¬a→b, a↔b = (a→b)∧(b→a),
//   ◇a = ¬□¬a, ⊡a = a∧□a, ⋄̇a = a∨◇a.
// The printer re-sugars these patterns.
class Formula {
 public:
  struct Node;

  Formula();  // ⊥

  static Formula falsum();
  static Formula atom(const Atom& a);
  static Formula imp(Formula a, Formula b);
  static Formula box(Formula a);

  static Formula top();
  static Formula neg(Formula a);
  static Formula conj(Formula a, Formula b);
  static Formula disj(Formula a, Formula b);
  static Formula iff(Formula a, Formula b);
  static Formula dia(Formula a);
  static Formula boxdot(Formula a);   // ⊡
  static Formula diadot(Formula a);   // ⋄̇
  // n-ary with the usual conventions: empty conjunction ⊤, empty disjunction ⊥.
  static Formula conj(const std::vector<Formula>& fs);
  static Formula disj(const std::vector<Formula>& fs);

  Op op() const;
  const Atom& atom_ref() const;  // op()==Atom
  Formula left() const;          // op()==Imp
  Formula right() const;         // op()==Imp
  Formula child() const;         // op()==Box
  long long size() const;        // symbol count of the primitive tree

  bool operator==(const Formula& o) const { return n_ == o.n_; }
  bool operator!=(const Formula& o) const { return n_ != o.n_; }
  // Deterministic structural order: by size, then by shape. Stable across runs.
  bool operator<(const Formula& o) const { return compare(*this, o) < 0; }
  static int compare(const Formula& a, const Formula& b);

  bool is_falsum() const { return op() == Op::Falsum; }
  bool is_top() const;

  const Node* node() const { return n_; }
  size_t hash() const;

  std::string print() const;
  // Atoms occurring in the formula.
  void collect_atoms(std::set<Atom>& out) const;
  std::set<Atom> atoms() const;

 private:
  explicit Formula(const Node* n) : n_(n) {}
  const Node* n_;
  friend struct FormulaHash;
};

struct FormulaHash {
  size_t operator()(const Formula& f) const { return f.hash(); }
};

struct ParseError : std::runtime_error {
  int position;
  ParseError(int pos, const std::string& msg)
      : std::runtime_error("parse error at " + std::to_string(pos) + ": " + msg),
        position(pos) {}
};

// Grammar (see README): `[]` box, `<>` diamond, `[.]`/`<.>` dotted forms,
// `!`, `&`, `|`, `->` (right assoc), `<->`, `true`, `false`, identifiers,
// `$`-prefixed identifiers. `$name` and declared identifiers parse as
// parameters, all other identifiers as variables.
Formula parse(const std::string& text, const std::set<std::string>& declared_params = {});

// Premises and conclusions are duplicate-free sets in the structural order.
struct Rule {
  std::vector<Formula> premises;
  std::vector<Formula> conclusions;

  Rule() = default;
  Rule(std::vector<Formula> prem, std::vector<Formula> concl);
  bool operator==(const Rule& o) const {
    return premises == o.premises && conclusions == o.conclusions;
  }
  std::string print() const;
  std::set<Atom> atoms() const;
};

// "φ1, ..., φk / ψ1, ..., ψl" with either list possibly empty.
Rule parse_rule(const std::string& text, const std::set<std::string>& declared_params = {});

// Parameter-preserving substitution: an explicit map on variables, identity
// elsewhere. Parameters are fixed points by construction.
class Substitution {
 public:
  Substitution() = default;

  void set(const Atom& v, Formula f);
  std::optional<Formula> lookup(const Atom& v) const;
  const std::map<Atom, Formula>& mapping() const { return map_; }

  Formula apply(Formula f) const;
  std::vector<Formula> apply(const std::vector<Formula>& fs) const;

  // compose(σ, τ): apply τ first, then σ; apply(compose(σ,τ), x) = σ(τ(x)).
  static Substitution compose(const Substitution& sigma, const Substitution& tau);

  bool operator==(const Substitution& o) const { return map_ == o.map_; }
  std::string print() const;

 private:
  std::map<Atom, Formula> map_;
};

// Subformula closure of a set of formulas, in the structural order (subterms
// always precede their superterms).
std::vector<Formula> subformulas(const std::vector<Formula>& gamma);

// Number of distinct subterms. Shared subterms are interned, so heavily
// composed formulas can be word-sized here while their tree size explodes.
std::size_t dag_size(Formula f);
bool is_subformula_closed(const std::vector<Formula>& sigma);

struct ComplexityStats {
  int b;        // distinct boxed subformulas of Γ∪Δ
  int m;        // |(Σ∩Par) ∪ {ψ,□ψ : □ψ∈Σ}| with Σ = Sub(Γ)
  long long n;  // total symbol length of Γ∪Δ
};

ComplexityStats stats(const std::vector<Formula>& gamma, const std::vector<Formula>& delta);

// 3·2^b·(2^m + |Δ|)
long long countermodel_size_bound(const ComplexityStats& s, std::size_t delta_size);

// Equivalence-preserving cleanup: constant folding, absorption, deduplication
// of ∧/∨ operands via Boolean-skeleton minimization over opaque atoms and
// boxes. Sound over every normal extension of K4 (uses □⊤ = ⊤).
Formula simplify(Formula f, std::size_t max_leaves = 12);

}  // namespace clx

#endif
