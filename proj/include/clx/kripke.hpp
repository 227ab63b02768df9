#ifndef CLX_KRIPKE_HPP
#define CLX_KRIPKE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clx/caps.hpp"
#include "clx/formula.hpp"

namespace clx {

// Sentinel for infinite components of extension conditions ((∞) clusters,
// n = ∞ successor counts). Concrete models never reach it.
inline constexpr int kInf = 1000000;

// Root-cluster shape of a rooted frame: • (irreflexive singleton) or a
// k-point reflexive cluster; (∞) appears only in extension conditions.
struct ClusterType {
  bool reflexive;
  int k;  // 1 for •; cluster size otherwise

  bool operator==(const ClusterType& o) const {
    return reflexive == o.reflexive && k == o.k;
  }
  bool operator<(const ClusterType& o) const {
    if (reflexive != o.reflexive) return reflexive < o.reflexive;
    return k < o.k;
  }
  std::string print() const;
};

inline ClusterType irr_cluster() { return ClusterType{false, 1}; }
inline ClusterType refl_cluster(int k) { return ClusterType{true, k}; }

// ⟨C,n⟩ for a rooted frame: root cluster type plus the number of immediate
// successor clusters of the root.
struct FrameType {
  ClusterType cluster;
  int n;
  bool operator==(const FrameType& o) const { return cluster == o.cluster && n == o.n; }
  std::string print() const;
};

// Finite transitive parametric Kripke model with a full atom valuation.
// The relation is stored transitively closed with explicit self-loops for
// reflexive points.
class Model {
 public:
  Model() = default;
  // Points named by ids; edges are closed transitively on construction.
  Model(std::vector<std::string> point_ids, std::vector<bool> reflexive,
        std::vector<std::pair<int, int>> edges,
        std::vector<std::string> params, std::vector<std::string> vars);

  int size() const { return int(ids_.size()); }
  const std::vector<std::string>& point_ids() const { return ids_; }
  const std::vector<std::string>& params() const { return params_; }
  const std::vector<std::string>& vars() const { return vars_; }

  bool related(int u, int v) const { return rel_[u][v]; }
  bool reflexive(int u) const { return rel_[u][u]; }
  bool le(int u, int v) const { return u == v || rel_[u][v]; }
  bool same_cluster(int u, int v) const { return u == v || (rel_[u][v] && rel_[v][u]); }

  bool atom_true(int u, const Atom& a) const;
  void set_atom(int u, const Atom& a, bool value);
  bool has_atom(const Atom& a) const;

  // Clusters as sorted point lists, in order of minimal point.
  std::vector<std::vector<int>> clusters() const;
  std::vector<int> cluster_of(int u) const;

  // Frame statistics.
  FrameType type_of(int u) const;  // in the submodel generated by u
  int depth() const;
  int branching() const;
  int width() const;
  int max_cluster() const;

  std::vector<int> upset_strict(const std::vector<int>& xs) const;  // X↑
  std::vector<int> upset(const std::vector<int>& xs) const;         // X⇑

  std::string to_json() const;
  static Model from_json(const std::string& text);

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<bool>> rel_;
  std::vector<std::string> params_;
  std::vector<std::string> vars_;
  std::map<Atom, std::vector<bool>> val_;

  void close_transitive();
};

// Satisfaction under the stored valuation; memoized per call over Sub(φ).
bool sat(const Model& m, int u, Formula f);
// Points of M satisfying φ.
std::vector<bool> sat_set(const Model& m, Formula f);
bool globally_true(const Model& m, Formula f);

// σ(M): same frame and parameter valuation, x true at u iff M,u ⊨ σ(x).
Model transform(const Model& m, const Substitution& sigma);

// Rule validity: for every variable valuation extending the model's
// parameter valuation, some premise fails globally or some conclusion holds
// globally. Exhaustive over valuations; guarded by caps.
bool rule_valid(const Model& m, const Rule& r, const Caps& caps = Caps());

// A ⟨•,{e}⟩ or ⟨◦,E⟩ specification: assignments of the model's parameters.
struct TpSpec {
  bool reflexive;
  // Each element assigns all declared parameters of the model (by index).
  std::vector<std::vector<bool>> assignments;  // E; singleton for •
};

// Tight predecessor of X per the defining set equations; absent = nullopt.
std::optional<std::vector<int>> find_tp(const Model& m, const std::vector<int>& xs,
                                        const TpSpec& spec);

// Tight pseudopredecessor of X with respect to a subformula-closed Σ.
std::optional<std::vector<int>> find_tpp(const Model& m, const std::vector<int>& xs,
                                         const TpSpec& spec,
                                         const std::vector<Formula>& sigma);

}  // namespace clx

#endif
