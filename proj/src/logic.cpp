#include "clx/logic.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <sstream>

#include "json.hpp"

namespace clx {

std::string ExtensionCondition::print() const {
  std::string ns = n >= kInf ? "inf" : std::to_string(n);
  return "<" + cluster.print() + "," + ns + ">";
}

bool nle0(int n, int m) {
  if (n == 0 || m == 0) return n == m;
  return n <= m;
}

bool cluster_le(const ClusterType& c, const ClusterType& d) {
  if (c.reflexive != d.reflexive) return false;
  if (!c.reflexive) return true;  // • ⪯ •
  return c.k <= d.k;
}

bool ec_leq(const ExtensionCondition& a, const ExtensionCondition& b) {
  return cluster_le(a.cluster, b.cluster) && nle0(a.n, b.n);
}

std::vector<ExtensionCondition> canonical_antichain(std::vector<ExtensionCondition> t) {
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  std::vector<ExtensionCondition> out;
  for (const auto& a : t) {
    bool maximal = true;
    for (const auto& b : t)
      if (!(a == b) && ec_leq(a, b)) maximal = false;
    if (maximal) out.push_back(a);
  }
  return out;
}

LogicSpec::LogicSpec(std::string name, std::vector<ExtensionCondition> xcb)
    : name_(std::move(name)), xcb_(std::move(xcb)) {
  for (const auto& t : xcb_)
    if (!t.finite()) throw std::invalid_argument("xcb members must be finite conditions");
  std::vector<ExtensionCondition> canon = xcb_;
  // minimal elements of the upward closure = remove elements above others
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());
  std::vector<ExtensionCondition> min;
  for (const auto& a : canon) {
    bool minimal = true;
    for (const auto& b : canon)
      if (!(a == b) && ec_leq(b, a)) minimal = false;
    if (minimal) min.push_back(a);
  }
  xcb_ = std::move(min);
}

void LogicSpec::set_infinite_params() {
  mode_ = ParamMode::Infinite;
  params_.clear();
}

void LogicSpec::set_finite_params(std::vector<std::string> params) {
  std::sort(params.begin(), params.end());
  params.erase(std::unique(params.begin(), params.end()), params.end());
  mode_ = ParamMode::Finite;
  params_ = std::move(params);
}

long long LogicSpec::cluster_size_limit() const {
  if (mode_ == ParamMode::Infinite) return kInf;
  if (params_.size() >= 20) return kInf;
  return 1ll << params_.size();
}

void LogicSpec::check_formula(const Formula& f) const {
  if (mode_ == ParamMode::Infinite) return;
  for (const auto& a : f.atoms())
    if (a.is_parameter() &&
        !std::binary_search(params_.begin(), params_.end(), a.name))
      throw std::invalid_argument("undeclared parameter: " + a.name);
}

void LogicSpec::check_rule(const Rule& r) const {
  for (const auto& f : r.premises) check_formula(f);
  for (const auto& f : r.conclusions) check_formula(f);
}

bool LogicSpec::tp_member(const ExtensionCondition& t) const {
  // t is excluded iff some xcb member lies ⪯-below it. For ∞ components this
  // is the right test as well: an xcb member below ⟨(∞),n⟩ is below some
  // finite approximation and vice versa.
  for (const auto& x : xcb_)
    if (ec_leq(x, t)) return false;
  return true;
}

bool LogicSpec::consistent() const {
  return tp_member(ec_irr(0)) || tp_member(ec_refl(1, 0));
}

bool LogicSpec::has_type_frame(const ExtensionCondition& t) const {
  if (!tp_member(t)) return false;
  if (t.n == 0) return true;
  return consistent();
}

std::vector<ExtensionCondition> LogicSpec::base() const {
  // Grid one past the xcb maxima: beyond it membership is constant, so the
  // maximal elements of the extensibility type live inside the grid, with
  // kInf standing for the ω-closure points.
  int max_k = 1, max_n = 0;
  for (const auto& x : xcb_) {
    if (x.cluster.reflexive) max_k = std::max(max_k, x.cluster.k);
    if (x.n < kInf) max_n = std::max(max_n, x.n);
  }
  std::vector<ClusterType> cs{irr_cluster()};
  for (int k = 1; k <= max_k + 1; ++k) cs.push_back(refl_cluster(k));
  cs.push_back(refl_cluster(kInf));
  std::vector<int> ns;
  for (int n = 0; n <= max_n + 1; ++n) ns.push_back(n);
  ns.push_back(kInf);

  auto in_tp = [&](const ExtensionCondition& t) {
    ExtensionCondition probe = t;
    if (probe.cluster.k >= kInf) probe.cluster.k = max_k + 1;
    if (probe.n >= kInf) probe.n = std::max(probe.n == kInf ? max_n + 1 : probe.n, 1);
    if (t.n >= kInf) probe.n = max_n + 1;
    return tp_member(probe);
  };

  std::vector<ExtensionCondition> members;
  for (const auto& c : cs)
    for (int n : ns) {
      ExtensionCondition t{c, n};
      if (in_tp(t)) members.push_back(t);
    }
  return canonical_antichain(members);
}

std::vector<ExtensionCondition> LogicSpec::effective_base() const {
  long long limit = cluster_size_limit();
  std::vector<ExtensionCondition> b = base();
  if (!consistent()) return {};
  std::vector<ExtensionCondition> capped;
  for (auto t : b) {
    if (t.cluster.reflexive && t.cluster.k > limit) t.cluster.k = int(limit);
    if (t.cluster.reflexive && t.cluster.k <= 0) continue;
    capped.push_back(t);
  }
  return canonical_antichain(capped);
}

bool LogicSpec::is_linear() const {
  return excluded(ec_irr(2)) && excluded(ec_refl(1, 2));
}

std::optional<int> LogicSpec::bounded_branching() const {
  int max_n = 0;
  for (const auto& x : xcb_)
    if (x.n < kInf) max_n = std::max(max_n, x.n);
  for (int k = 0; k <= max_n + 1; ++k)
    if (excluded(ec_irr(k + 1)) && excluded(ec_refl(1, k + 1))) return k;
  return std::nullopt;
}

bool is_l_frame(const LogicSpec& l, const Model& m) {
  for (int u = 0; u < m.size(); ++u) {
    FrameType t = m.type_of(u);
    if (l.excluded(ExtensionCondition{t.cluster, t.n})) return false;
  }
  return true;
}

LogicSpec join(const LogicSpec& a, const LogicSpec& b) {
  std::vector<ExtensionCondition> both = a.xcb();
  both.insert(both.end(), b.xcb().begin(), b.xcb().end());
  // minimal elements of the union of the two upward closures
  std::sort(both.begin(), both.end());
  both.erase(std::unique(both.begin(), both.end()), both.end());
  std::vector<ExtensionCondition> min;
  for (const auto& x : both) {
    bool minimal = true;
    for (const auto& y : both)
      if (!(x == y) && ec_leq(y, x)) minimal = false;
    if (minimal) min.push_back(x);
  }
  LogicSpec out(a.name() + "+" + b.name(), min);
  return out;
}

namespace {

// Least upper bound of two finite conditions when it exists.
std::optional<ExtensionCondition> ec_lub(const ExtensionCondition& a,
                                         const ExtensionCondition& b) {
  if (a.cluster.reflexive != b.cluster.reflexive) return std::nullopt;
  if ((a.n == 0) != (b.n == 0)) return std::nullopt;
  ClusterType c = a.cluster.reflexive
                      ? refl_cluster(std::max(a.cluster.k, b.cluster.k))
                      : irr_cluster();
  return ExtensionCondition{c, std::max(a.n, b.n)};
}

}  // namespace

LogicSpec meet_clx(const LogicSpec& a, const LogicSpec& b) {
  // xcl of the meet is the intersection of the two upward closures, whose
  // minimal elements are the existing lubs of pairs from the two bases.
  std::vector<ExtensionCondition> lubs;
  for (const auto& x : a.xcb())
    for (const auto& y : b.xcb())
      if (auto l = ec_lub(x, y)) lubs.push_back(*l);
  std::sort(lubs.begin(), lubs.end());
  lubs.erase(std::unique(lubs.begin(), lubs.end()), lubs.end());
  std::vector<ExtensionCondition> min;
  for (const auto& x : lubs) {
    bool minimal = true;
    for (const auto& y : lubs)
      if (!(x == y) && ec_leq(y, x)) minimal = false;
    if (minimal) min.push_back(x);
  }
  return LogicSpec(a.name() + "^" + b.name(), min);
}

// ---------------------------------------------------------------------------
// Presets.

namespace {

std::vector<ExtensionCondition> stack(std::vector<ClusterType> cs, std::vector<int> ns) {
  std::vector<ExtensionCondition> out;
  for (const auto& c : cs)
    for (int n : ns) out.push_back(ExtensionCondition{c, n});
  return out;
}

std::optional<int> suffix_int(const std::string& s, const std::string& prefix) {
  if (s.size() <= prefix.size() || s.compare(0, prefix.size(), prefix) != 0)
    return std::nullopt;
  std::string rest = s.substr(prefix.size());
  for (char c : rest)
    if (!isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  return std::stoi(rest);
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"K4",  "S4",    "K4Grz", "S4Grz", "K4.3", "K4BB<k>", "K4BC<k>",
          "S4.1.4", "K4B", "S5",    "GL",    "GL.3",  "S4.3", "Triv",
          "Verum",  "Form", "D4",   "K4.1",  "S4.1"};
}

LogicSpec LogicSpec::preset(const std::string& name) {
  auto C = [](int k) { return refl_cluster(k); };
  ClusterType I = irr_cluster();
  if (name == "K4") return LogicSpec(name, {});
  if (name == "S4") return LogicSpec(name, stack({I}, {0, 1}));
  if (name == "K4Grz") return LogicSpec(name, stack({C(2)}, {0, 1}));
  if (name == "S4Grz") return LogicSpec(name, stack({I, C(2)}, {0, 1}));
  if (name == "K4.3") return LogicSpec(name, stack({I, C(1)}, {2}));
  if (name == "S4.1.4")
    return LogicSpec(name, {ec_irr(0), ec_irr(1), ec_refl(2, 1)});
  if (name == "K4B") return LogicSpec(name, stack({I, C(1)}, {1}));
  if (name == "S5") return LogicSpec(name, {ec_irr(0), ec_irr(1), ec_refl(1, 1)});
  if (name == "GL") return LogicSpec(name, stack({C(1)}, {0, 1}));
  if (name == "GL.3") return LogicSpec(name, {ec_refl(1, 0), ec_refl(1, 1), ec_irr(2)});
  if (name == "S4.3") return LogicSpec(name, {ec_irr(0), ec_irr(1), ec_refl(1, 2)});
  if (name == "Triv") return LogicSpec(name, {ec_irr(0), ec_refl(2, 0), ec_irr(1), ec_refl(1, 1)});
  if (name == "Verum") return LogicSpec(name, {ec_refl(1, 0), ec_irr(1), ec_refl(1, 1)});
  if (name == "Form") return LogicSpec(name, stack({I, C(1)}, {0, 1}));
  if (name == "D4") return LogicSpec(name, {ec_irr(0)});
  if (name == "K4.1") return LogicSpec(name, {ec_refl(2, 0)});
  if (name == "S4.1") return LogicSpec(name, {ec_irr(0), ec_irr(1), ec_refl(2, 0)});
  if (auto k = suffix_int(name, "K4BB"))
    return LogicSpec(name, stack({I, C(1)}, {*k + 1}));
  if (auto k = suffix_int(name, "K4BC")) {
    if (*k < 1) throw std::invalid_argument("K4BC requires k >= 1");
    return LogicSpec(name, stack({C(*k + 1)}, {0, 1}));
  }
  throw std::invalid_argument("unknown logic preset: " + name);
}

LogicSpec LogicSpec::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::vector<ExtensionCondition> xcb;
  for (const auto& e : j.value("xcb", nlohmann::json::array())) {
    ClusterType c;
    const auto& cl = e.at("cluster");
    if (cl.is_string()) {
      if (cl.get<std::string>() != "irr")
        throw std::invalid_argument("cluster must be \"irr\" or a positive integer");
      c = irr_cluster();
    } else {
      int k = cl.get<int>();
      if (k < 1) throw std::invalid_argument("reflexive cluster size must be >= 1");
      c = refl_cluster(k);
    }
    xcb.push_back(ExtensionCondition{c, e.at("n").get<int>()});
  }
  LogicSpec l(j.value("name", std::string("custom")), xcb);
  const auto& p = j.at("params");
  if (p.is_string()) {
    if (p.get<std::string>() != "infinite")
      throw std::invalid_argument("params must be \"infinite\" or a list");
    l.set_infinite_params();
  } else {
    l.set_finite_params(p.get<std::vector<std::string>>());
  }
  return l;
}

std::string LogicSpec::to_json() const {
  nlohmann::json j;
  j["name"] = name_;
  j["xcb"] = nlohmann::json::array();
  for (const auto& t : xcb_) {
    nlohmann::json e;
    if (t.cluster.reflexive)
      e["cluster"] = t.cluster.k;
    else
      e["cluster"] = "irr";
    e["n"] = t.n;
    j["xcb"].push_back(e);
  }
  if (mode_ == ParamMode::Infinite)
    j["params"] = "infinite";
  else
    j["params"] = params_;
  return j.dump(2);
}

std::string LogicSpec::print_info() const {
  std::ostringstream out;
  out << "logic: " << name_ << "\n";
  out << "xcb:";
  for (const auto& t : xcb_) out << " " << t.print();
  if (xcb_.empty()) out << " (empty)";
  out << "\nbase:";
  for (const auto& t : base()) out << " " << t.print();
  if (base().empty()) out << " (empty)";
  out << "\nparams: ";
  if (mode_ == ParamMode::Infinite) {
    out << "infinite";
  } else {
    out << "{";
    for (size_t i = 0; i < params_.size(); ++i) out << (i ? "," : "") << params_[i];
    out << "}";
  }
  out << "\nlinear: " << (is_linear() ? "yes" : "no");
  out << "\nbounded branching: ";
  if (auto k = bounded_branching())
    out << *k;
  else
    out << "none";
  out << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Canonical axioms.

namespace {

Formula xvar(int i) { return Formula::atom(var("x" + std::to_string(i))); }
Formula yvar(int i) { return Formula::atom(var("y" + std::to_string(i))); }

}  // namespace

Formula alpha_axiom(const ExtensionCondition& t) {
  if (!t.finite()) throw std::invalid_argument("alpha axiom needs a finite condition");
  int n = t.n;
  if (!t.cluster.reflexive) {
    if (n == 0) return Formula::dia(Formula::top());
    if (n == 1) {
      Formula y = Formula::atom(var("y"));
      return Formula::imp(Formula::box(y),
                          Formula::disj(y, Formula::box(Formula::falsum())));
    }
    std::vector<Formula> prem;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        prem.push_back(Formula::box(Formula::disj(Formula::boxdot(xvar(i)),
                                                  Formula::boxdot(xvar(j)))));
    std::vector<Formula> con;
    for (int i = 0; i < n; ++i) con.push_back(Formula::box(xvar(i)));
    return Formula::imp(Formula::conj(prem), Formula::disj(con));
  }
  int k = t.cluster.k;
  if (n == 0) {
    std::vector<Formula> disj;
    for (int e = 0; e < k; ++e) {
      std::vector<Formula> prior;
      for (int d = 0; d < e; ++d) prior.push_back(yvar(d));
      disj.push_back(Formula::diadot(Formula::box(Formula::imp(Formula::conj(prior), yvar(e)))));
    }
    return Formula::disj(disj);
  }
  std::vector<Formula> beta;
  for (int d = 0; d < k; ++d)
    for (int e = d + 1; e < k; ++e) beta.push_back(Formula::disj(yvar(d), yvar(e)));
  for (int d = 0; d < k; ++d)
    for (int e = 0; e < k; ++e)
      beta.push_back(Formula::imp(Formula::box(yvar(d)), yvar(e)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) beta.push_back(Formula::disj(xvar(i), Formula::boxdot(xvar(j))));
  for (int e = 0; e < k; ++e)
    for (int i = 0; i < n; ++i) {
      beta.push_back(Formula::imp(Formula::box(xvar(i)), yvar(e)));
      beta.push_back(Formula::disj(xvar(i), Formula::boxdot(yvar(e))));
    }
  for (int i = 0; i < n; ++i) {
    std::vector<Formula> ys;
    ys.push_back(xvar(i));
    for (int e = 0; e < k; ++e) ys.push_back(yvar(e));
    beta.push_back(Formula::imp(Formula::conj(ys), Formula::box(xvar(i))));
  }
  return Formula::imp(Formula::boxdot(Formula::conj(beta)), yvar(0));
}

bool validates_alpha(const Model& m, const ExtensionCondition& t) {
  for (int u = 0; u < m.size(); ++u) {
    FrameType ft = m.type_of(u);
    if (ec_leq(t, ExtensionCondition{ft.cluster, ft.n})) return false;
  }
  return true;
}

std::vector<Formula> axiomatize(const LogicSpec& l) {
  std::vector<Formula> out;
  for (const auto& t : l.xcb()) out.push_back(alpha_axiom(t));
  return out;
}

}  // namespace clx
