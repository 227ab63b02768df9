#ifndef CLX_PROJECTIVE_HPP
#define CLX_PROJECTIVE_HPP

#include <optional>
#include <vector>

#include "clx/caps.hpp"
#include "clx/formula.hpp"
#include "clx/logic.hpp"
#include "clx/typecore.hpp"

namespace clx {

// Per variable, a Boolean function of the parameters: rows[e] holds the
// variable bits assigned under parameter assignment e. Parameter and
// variable positions follow the sorted atom order.
struct BooleanTable {
  std::vector<Atom> params;  // sorted
  std::vector<Atom> vars;    // sorted
  std::vector<uint32_t> rows;  // size 2^|params|

  bool value(uint32_t e, int var_index) const { return rows[e] >> var_index & 1; }
};

// θ_{φ,D}(x) = (⊡φ ∧ x) ∨ (¬⊡φ ∧ d_x), with d_x rendered as a full DNF over
// the parameters.
Substitution loewenheim(Formula phi, const BooleanTable& d);

// One full pass: the composition of all 2^(|V|·2^|P|) Löwenheim substitutions
// in the lexicographic order of their tables, images simplified.
Substitution theta(Formula phi, const Caps& caps = Caps());

// (|B|+1)(2^|P|+1) with B the bodies of boxed subformulas of φ.
int theta_iterations(Formula phi);

// θ^N with per-factor simplification and early stabilization.
Substitution theta_power(Formula phi, const Caps& caps = Caps());

// Iterates the tower one full pass at a time and returns the first power that
// verifies as an L-unifier of φ through the type engine, together with the
// verification grade. Compositions of Löwenheim factors always satisfy the
// projectivity equation, so any verified prefix is a projective unifier. When
// φ has the extension property but every checkable power exceeds the caps,
// the full θ^N is returned ungraded (WitnessGrade::Bounded).
std::pair<Substitution, bool> theta_unifier(const LogicSpec& l, Formula phi,
                                            const Caps& caps = Caps());

// A root-attachment shape over saturation data: parameter assignments for the
// would-be tight predecessor cluster plus the generator pairs it would see.
struct ExtConfig {
  bool reflexive = false;
  std::vector<std::vector<bool>> root_params;  // E; singleton when irreflexive
  std::vector<TypePair> generators;
  std::string print(const SigmaContext& ctx) const;
};

// Decides whether the type set `allowed` (over ctx) has the model extension
// property: every feasible attachment admits a variable assignment keeping
// all new root types inside `allowed`. Returns the first failing
// configuration in the deterministic order, or nullopt when the property
// holds. Configurations absorbed by a reflexive generator realizing all the
// requested parameter assignments are skipped.
std::optional<ExtConfig> mep_failure(const LogicSpec& l, const SigmaContext& ctx,
                                     const std::vector<TypeMask>& allowed,
                                     const Caps& caps = Caps());

enum class WitnessGrade { Exact, Bounded };

struct ProjectivityResult {
  bool projective = false;
  std::optional<Substitution> unifier;       // yes-witness
  std::optional<ExtConfig> counterexample;   // no-witness
  WitnessGrade grade = WitnessGrade::Exact;  // how the yes-witness re-verified
};

ProjectivityResult projective(const LogicSpec& l, Formula phi, const Caps& caps = Caps());

struct ApproxMember {
  std::vector<TypeMask> types;  // the type set U over Sub(φ)
  Formula psi;                  // ψ_U, simplified Boolean combination of Σ
};

// Maximal projective members among the achievable type-set family over
// Types(φ); a complete projective approximation of φ.
std::vector<ApproxMember> projective_approximation(const LogicSpec& l, Formula phi,
                                                   const Caps& caps = Caps());

// Same search over a caller-supplied context and allowed set (used for
// unification, where the allowed set is cut out by several premises).
std::vector<ApproxMember> projective_approximation_over(const LogicSpec& l,
                                                        const SigmaContext& ctx,
                                                        const std::vector<TypeMask>& allowed,
                                                        const Caps& caps = Caps());

// ψ_U as a Boolean combination of the free components of ctx.
Formula type_set_formula(const SigmaContext& ctx, const std::vector<TypeMask>& types);

}  // namespace clx

#endif
