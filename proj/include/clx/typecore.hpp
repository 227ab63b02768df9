#ifndef CLX_TYPECORE_HPP
#define CLX_TYPECORE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clx/caps.hpp"
#include "clx/formula.hpp"
#include "clx/kripke.hpp"
#include "clx/logic.hpp"

namespace clx {

// Assignment Σ → {0,1} packed into a word (|Σ| ≤ 64).
using TypeMask = uint64_t;

// Small dynamic bitset used for sets of type ids (cones, unions).
class Bits {
 public:
  Bits() = default;
  explicit Bits(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

  std::size_t size() const { return n_; }
  bool get(std::size_t i) const { return w_[i >> 6] >> (i & 63) & 1; }
  void set(std::size_t i) { w_[i >> 6] |= uint64_t(1) << (i & 63); }
  int count() const;
  bool none() const;
  bool subset_of(const Bits& o) const;
  Bits operator|(const Bits& o) const;
  void or_into(const Bits& o);  // *this |= o
  bool operator==(const Bits& o) const { return n_ == o.n_ && w_ == o.w_; }
  bool operator<(const Bits& o) const;  // by popcount, then lexicographic

  template <typename Fn>
  void for_each(Fn fn) const {
    for (std::size_t i = 0; i < n_; ++i)
      if (get(i)) fn(int(i));
  }

 private:
  std::size_t n_ = 0;
  std::vector<uint64_t> w_;
};

// A subformula-closed formula set with indexing and the data needed to
// complete free components (atoms, boxes) into full coherent assignments.
class SigmaContext {
 public:
  SigmaContext() = default;
  SigmaContext(const std::vector<Formula>& seeds, const Caps& caps);

  const std::vector<Formula>& sigma() const { return sigma_; }
  int index_of(const Formula& f) const;        // -1 when absent
  int require_index(const Formula& f) const;   // throws when absent

  const std::vector<int>& param_indices() const { return params_; }
  const std::vector<int>& var_indices() const { return vars_; }
  const std::vector<std::pair<int, int>>& boxes() const { return boxes_; }  // (□ψ, ψ)
  int atom_count() const { return int(params_.size() + vars_.size()); }
  int free_count() const { return atom_count() + int(boxes_.size()); }

  bool coherent(TypeMask t) const;
  template <typename Pred>
  std::vector<TypeMask> enumerate_types(const Caps& caps, Pred pred) const {
    if (free_count() > caps.max_free) throw CapExceeded("free components");
    std::vector<TypeMask> out;
    std::size_t total = std::size_t(1) << free_count();
    if (total > caps.max_types) throw CapExceeded("type count");
    for (std::size_t bits = 0; bits < total; ++bits) {
      TypeMask t = complete(bits);
      if (pred(t)) out.push_back(t);
    }
    return out;
  }
  std::vector<TypeMask> all_types(const Caps& caps) const;

  // Truth of a Boolean combination of Σ-members under an assignment.
  bool eval(const Formula& f, TypeMask t) const;

  // Free-component layout: atoms first (params then vars), then boxes.
  TypeMask complete(std::size_t free_bits) const;

  std::vector<std::string> param_names() const;
  std::vector<std::string> var_names() const;

 private:
  std::vector<Formula> sigma_;
  std::map<Formula, int> index_;
  std::vector<int> params_, vars_;             // Σ indices of atoms
  std::vector<std::pair<int, int>> boxes_;     // Σ indices (box, body)
};

// A cluster specification: a set of distinct atom assignments over the
// context's atoms (bit i of an assignment = truth of atom i, params first),
// with a reflexivity flag; irreflexive clusters are singletons.
struct ClusterSpec {
  bool reflexive = false;
  std::vector<uint32_t> assignments;  // sorted, distinct
};

// Realizability datum of finite rooted models over an allowed type set:
// the set of root types (sharing box components), root reflexivity, and the
// full set of types realized in a witness model (cone).
struct TypePair {
  std::vector<int> root_types;  // sorted type ids
  bool reflexive = false;
  Bits cone;                    // includes root types
  // provenance for materialization
  ClusterSpec spec;
  std::vector<int> generators;  // pair ids of one witnessing attachment
  Bits gen_union;               // cone union over the generators
};

// An achievable cone union together with the least number of distinct
// realizability pairs whose cones produce it.
struct UnionEntry {
  Bits bits;
  int n_min = 0;
  std::vector<int> generators;  // witnessing pair ids, |generators| == n_min
};

struct Saturation {
  std::vector<TypeMask> types;      // the allowed inventory, sorted
  std::vector<TypePair> pairs;      // in deterministic emission order
  std::vector<UnionEntry> unions;   // sorted by (|bits|, bits)
  int type_id(TypeMask t) const;    // -1 when absent
};

// Least fixpoint of root-attachment over the allowed inventory: emits exactly
// the realizability data of finite rooted L-models whose realized types stay
// inside `allowed`.
Saturation saturate(const LogicSpec& l, const SigmaContext& ctx,
                    const std::vector<TypeMask>& allowed, const Caps& caps = Caps());

// The achievable "what a new root sees" data: realized cone unions with the
// least generator count producing each; deterministic order.
std::vector<UnionEntry> realizable_type_sets(const LogicSpec& l, const SigmaContext& ctx,
                                             const std::vector<TypeMask>& allowed,
                                             const Caps& caps = Caps());

// A compact view of the achievable type-set family, for inventories of at
// most 64 types: realized sets of rooted models (cones) and their unions,
// with witness provenance for materialization. This drops the per-pair
// root-type bookkeeping of `saturate`, which the set-level searches never
// consult.
class TypeSetFamily {
 public:
  struct Entry {
    uint64_t set = 0;
    int n_min = 0;
    std::vector<int> cone_ids;  // a witnessing attachment, |cone_ids| == n_min
  };

  TypeSetFamily(const LogicSpec& l, const SigmaContext& ctx,
                const std::vector<TypeMask>& allowed, const Caps& caps = Caps());

  const std::vector<TypeMask>& types() const { return inv_; }
  const std::vector<Entry>& family() const { return family_; }  // (popcount, value) order
  std::vector<TypeMask> member_types(uint64_t set) const;
  // Disjoint union of the witness models behind the entry's cones.
  Model materialize_union(const Entry& e, const Caps& caps = Caps()) const;

 private:
  LogicSpec l_;
  SigmaContext ctx_;
  std::vector<TypeMask> inv_;
  std::vector<uint64_t> cones_;
  struct ConeInfo {
    ClusterSpec spec;
    std::vector<int> gen_cones;
  };
  std::vector<ConeInfo> cone_info_;
  std::vector<Entry> family_;

  void materialize_cone(int cone_id, const Caps& caps, std::vector<bool>& refl,
                        std::vector<std::pair<int, int>>& edges,
                        std::vector<uint32_t>& assignment_of,
                        std::vector<int>& cluster_out) const;
};

// Materialize the witness model of a saturation pair.
Model materialize(const SigmaContext& ctx, const Saturation& sat, int pair_id,
                  const Caps& caps = Caps());

// --------------------------------------------------------------------------
// Profile-level realizability: the same fixpoint with cone unions collapsed
// to their □-body profiles. Root attachments only consult the cone through
// which box bodies hold at every cone type, so this is exact for root-type
// realizability while staying polynomial in the type inventory.

struct ProfilePair {
  std::vector<int> point_types;  // per spec assignment
  bool reflexive = false;
  TypeMask profile = 0;  // normalized over body bits
  ClusterSpec spec;
  std::vector<int> generators;  // ProfilePair ids of a witnessing attachment
};

struct ProfileEntry {
  TypeMask profile = 0;
  int n_min = 0;
  std::vector<int> generators;
};

class RootRealizability {
 public:
  RootRealizability(const LogicSpec& l, const SigmaContext& ctx,
                    const std::vector<TypeMask>& allowed, const Caps& caps = Caps());

  const std::vector<TypeMask>& types() const { return inv_; }
  const std::vector<ProfilePair>& pairs() const { return pairs_; }
  const std::vector<ProfileEntry>& profiles() const { return profiles_; }
  TypeMask normalize(TypeMask profile) const { return profile | ~body_mask_; }
  TypeMask full_profile() const { return normalize(~TypeMask(0)); }

  // First pair with a cluster point violating the target, as (pair, point).
  std::optional<std::pair<int, int>> find_refuting_root(const Formula& target) const;
  Model materialize_pair(int pair_id) const;

  // Cluster types over a given profile; empty when a point leaves the
  // inventory. masks_out receives the per-point assignments when non-null.
  std::vector<int> cluster_types(const ClusterSpec& spec, TypeMask profile,
                                 std::vector<TypeMask>* masks_out = nullptr) const;

 private:
  LogicSpec l_;
  SigmaContext ctx_;
  Caps caps_;
  std::vector<TypeMask> inv_;
  std::map<TypeMask, int> inv_idx_;
  TypeMask body_mask_ = 0;
  std::vector<ProfilePair> pairs_;
  std::vector<ProfileEntry> profiles_;
  std::vector<int> atom_pos_;
  std::vector<ClusterSpec> specs_;

  void run();
};

// Global consequence over finite L-models.
bool consequence(const LogicSpec& l, const std::vector<Formula>& gamma, Formula phi,
                 const Caps& caps = Caps());
bool tautology(const LogicSpec& l, Formula phi, const Caps& caps = Caps());

// Boolean-combination variant: premises and target are Boolean combinations
// of members of ctx.
bool consequence_over(const LogicSpec& l, const SigmaContext& ctx,
                      const std::vector<Formula>& premises, const Formula& target,
                      const Caps& caps = Caps());

// b for the countermodel bounds: |{φ} ∪ {ψ : □ψ ∈ Sub(Γ ∪ {φ})}|.
int countermodel_box_count(const std::vector<Formula>& gamma, Formula phi);

// Rooted L-model satisfying Γ globally and refuting φ at the root point
// (point id "r0"), minimized by selective filtration to a tree of clusters
// of size < 3·2^(b-1), depth ≤ b+1, cluster size ≤ b, branching ≤ max(b-1,1).
std::optional<Model> countermodel(const LogicSpec& l, const std::vector<Formula>& gamma,
                                  Formula phi, const Caps& caps = Caps());

}  // namespace clx

#endif
