#ifndef CLX_LOGIC_HPP
#define CLX_LOGIC_HPP

#include <optional>
#include <string>
#include <vector>

#include "clx/formula.hpp"
#include "clx/kripke.hpp"

namespace clx {

// A pair ⟨C,n⟩ with C a cluster type or (∞) and n ∈ ω ∪ {∞}.
struct ExtensionCondition {
  ClusterType cluster;  // k == kInf encodes (∞)
  int n;                // kInf encodes ∞

  bool finite() const { return cluster.k < kInf && n < kInf; }
  bool operator==(const ExtensionCondition& o) const {
    return cluster == o.cluster && n == o.n;
  }
  bool operator<(const ExtensionCondition& o) const {
    if (!(cluster == o.cluster)) return cluster < o.cluster;
    return n < o.n;
  }
  std::string print() const;
};

inline ExtensionCondition ec(ClusterType c, int n) { return ExtensionCondition{c, n}; }
inline ExtensionCondition ec_irr(int n) { return ExtensionCondition{irr_cluster(), n}; }
inline ExtensionCondition ec_refl(int k, int n) { return ExtensionCondition{refl_cluster(k), n}; }

// Component orders: on successor counts, 0 is incomparable to everything
// else and 0 < n ≤ m ≤ ∞ otherwise; on cluster types, • only below itself
// and (k) ⪯ (l) iff k ≤ l (with (∞) on top). ⪯ is the product order.
bool nle0(int n, int m);
bool cluster_le(const ClusterType& c, const ClusterType& d);
bool ec_leq(const ExtensionCondition& a, const ExtensionCondition& b);

// The unique finite antichain equivalent to a finite condition set.
std::vector<ExtensionCondition> canonical_antichain(std::vector<ExtensionCondition> t);

enum class ParamMode { Infinite, Finite };

// A cluster-extensible logic given by its canonical exclusion basis (a finite
// ⪯-antichain of finite extension conditions), plus the parameter discipline.
class LogicSpec {
 public:
  LogicSpec() = default;
  LogicSpec(std::string name, std::vector<ExtensionCondition> xcb);

  static LogicSpec preset(const std::string& name);  // throws on unknown name
  static LogicSpec from_json(const std::string& text);
  std::string to_json() const;

  const std::string& name() const { return name_; }
  const std::vector<ExtensionCondition>& xcb() const { return xcb_; }

  ParamMode param_mode() const { return mode_; }
  const std::vector<std::string>& declared_params() const { return params_; }
  void set_infinite_params();
  void set_finite_params(std::vector<std::string> params);
  // 2^|Par| in finite mode, effectively unbounded otherwise.
  long long cluster_size_limit() const;
  // In finite mode every submitted formula must use only declared parameters.
  void check_formula(const Formula& f) const;
  void check_rule(const Rule& r) const;

  // Membership of ⟨C,n⟩ among the conditions the logic is extensible for
  // (equivalently: not in the upward closure of xcb). Accepts ∞ components.
  bool tp_member(const ExtensionCondition& t) const;
  bool excluded(const ExtensionCondition& t) const { return !tp_member(t); }

  // Whether some finite frame of the logic has type ⟨C,n⟩.
  bool has_type_frame(const ExtensionCondition& t) const;
  bool consistent() const;  // some frame exists

  // Maximal elements of the extensibility type (with (∞)/∞ components when
  // the closure rules fire).
  std::vector<ExtensionCondition> base() const;
  // base() additionally restricted to cluster sizes ≤ 2^|Par| and to
  // conditions realized by frames; what the admissibility machinery uses.
  std::vector<ExtensionCondition> effective_base() const;

  bool is_linear() const;
  std::optional<int> bounded_branching() const;

  std::string print_info() const;

 private:
  std::string name_;
  std::vector<ExtensionCondition> xcb_;
  ParamMode mode_ = ParamMode::Infinite;
  std::vector<std::string> params_;
};

// Frame membership: no point generates a subframe of excluded type.
bool is_l_frame(const LogicSpec& l, const Model& m);

// Lattice operations on the class, via exclusion types.
LogicSpec join(const LogicSpec& a, const LogicSpec& b);
LogicSpec meet_clx(const LogicSpec& a, const LogicSpec& b);

// Canonical axiom α_t for a finite extension condition.
Formula alpha_axiom(const ExtensionCondition& t);

// Structural validity of α_t on a finite frame: no rooted generated subframe
// of type ⪰ t. No valuation search.
bool validates_alpha(const Model& m, const ExtensionCondition& t);

// {α_t : t ∈ xcb}.
std::vector<Formula> axiomatize(const LogicSpec& l);

std::vector<std::string> preset_names();

}  // namespace clx

#endif
