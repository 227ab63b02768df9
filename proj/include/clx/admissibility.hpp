#ifndef CLX_ADMISSIBILITY_HPP
#define CLX_ADMISSIBILITY_HPP

#include <optional>
#include <string>
#include <vector>

#include "clx/caps.hpp"
#include "clx/formula.hpp"
#include "clx/kripke.hpp"
#include "clx/logic.hpp"
#include "clx/projective.hpp"

namespace clx {

enum class Verdict { Admissible, NotAdmissible, Undecided };
enum class EngineKind { A, B, Both };

struct EngineDisagreement : std::logic_error {
  explicit EngineDisagreement(const std::string& what) : std::logic_error(what) {}
};

struct Decision {
  Verdict verdict = Verdict::Undecided;
  std::string note;                           // undecided reason, diagnostics
  std::optional<Substitution> unifier_witness;  // unifies Γ, no δ (engine A)
  std::optional<ExtConfig> witness_set_note;    // unused placeholder for future data
  std::optional<Model> model_witness;           // pseudoextensible countermodel (engine B)
};

// Γ |~_L Δ. Engine A goes through projective type sets over Sub(Γ); engine B
// searches realizable type sets over Sub(Γ∪Δ) that are pseudoextensible with
// respect to Sub(Γ) and refute every conclusion. With EngineKind::Both the
// verdicts must coincide or EngineDisagreement is thrown.
Decision admissible(const LogicSpec& l, const Rule& rule, EngineKind engine = EngineKind::Both,
                    const Caps& caps = Caps());

// Certificate check for a NotAdmissible model witness: frame membership,
// premises globally true, every conclusion refuted somewhere, and
// pseudoextensibility with respect to Sub(premises) by direct tight
// pseudopredecessor search.
bool check_certificate(const LogicSpec& l, const Rule& rule, const Model& m,
                       const Caps& caps = Caps());

// Direct pseudoextensibility test of a model for the logic's effective
// extension conditions, with respect to the subformula-closed sigma.
bool pseudoextensible(const LogicSpec& l, const Model& m, const std::vector<Formula>& sigma,
                      const Caps& caps = Caps());

bool unifiable(const LogicSpec& l, const std::vector<Formula>& gamma,
               const Caps& caps = Caps());

// Projective unifiers of the projective approximation of ⋀Γ: a complete set.
std::vector<Substitution> unify(const LogicSpec& l, const std::vector<Formula>& gamma,
                                const Caps& caps = Caps());

enum class UnificationType { Unitary, Finitary };
UnificationType unification_type(const LogicSpec& l);

// The directedness criterion: ◇⊡x → □⋄̇x is a tautology.
bool directed_unification(const LogicSpec& l, const Caps& caps = Caps());

}  // namespace clx

#endif
