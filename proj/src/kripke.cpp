#include "clx/kripke.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace clx {

std::string ClusterType::print() const {
  if (!reflexive) return "irr";
  if (k >= kInf) return "(inf)";
  return "(" + std::to_string(k) + ")";
}

std::string FrameType::print() const {
  return "<" + cluster.print() + "," + std::to_string(n) + ">";
}

Model::Model(std::vector<std::string> point_ids, std::vector<bool> reflexive,
             std::vector<std::pair<int, int>> edges, std::vector<std::string> params,
             std::vector<std::string> vars)
    : ids_(std::move(point_ids)), params_(std::move(params)), vars_(std::move(vars)) {
  int n = int(ids_.size());
  rel_.assign(n, std::vector<bool>(n, false));
  for (auto [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::invalid_argument("edge endpoint out of range");
    rel_[u][v] = true;
  }
  for (int u = 0; u < n; ++u)
    if (u < int(reflexive.size()) && reflexive[u]) rel_[u][u] = true;
  close_transitive();
  for (const auto& p : params_) val_[param(p)].assign(n, false);
  for (const auto& v : vars_) val_[var(v)].assign(n, false);
}

void Model::close_transitive() {
  int n = size();
  for (int k = 0; k < n; ++k)
    for (int u = 0; u < n; ++u)
      if (rel_[u][k])
        for (int v = 0; v < n; ++v)
          if (rel_[k][v]) rel_[u][v] = true;
}

bool Model::has_atom(const Atom& a) const { return val_.count(a) != 0; }

bool Model::atom_true(int u, const Atom& a) const {
  auto it = val_.find(a);
  if (it == val_.end()) throw std::invalid_argument("unknown atom " + a.name);
  return it->second[u];
}

void Model::set_atom(int u, const Atom& a, bool value) {
  auto it = val_.find(a);
  if (it == val_.end()) throw std::invalid_argument("unknown atom " + a.name);
  it->second[u] = value;
}

std::vector<std::vector<int>> Model::clusters() const {
  int n = size();
  std::vector<bool> done(n, false);
  std::vector<std::vector<int>> out;
  for (int u = 0; u < n; ++u) {
    if (done[u]) continue;
    std::vector<int> c;
    for (int v = 0; v < n; ++v)
      if (same_cluster(u, v)) {
        c.push_back(v);
        done[v] = true;
      }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<int> Model::cluster_of(int u) const {
  std::vector<int> c;
  for (int v = 0; v < size(); ++v)
    if (same_cluster(u, v)) c.push_back(v);
  return c;
}

namespace {

// Immediate successor clusters of cls(u) within the cone of u.
int immediate_successor_clusters(const Model& m, int u) {
  int n = m.size();
  std::vector<int> reps;
  for (int v = 0; v < n; ++v) {
    if (!m.related(u, v) || m.same_cluster(u, v)) continue;
    bool rep = true;
    for (int w : reps)
      if (m.same_cluster(v, w)) rep = false;
    if (rep) reps.push_back(v);
  }
  int count = 0;
  for (int v : reps) {
    bool immediate = true;
    for (int w : reps) {
      if (m.same_cluster(v, w)) continue;
      if (m.related(u, w) && m.related(w, v) && !m.same_cluster(u, w)) immediate = false;
    }
    if (immediate) ++count;
  }
  return count;
}

}  // namespace

FrameType Model::type_of(int u) const {
  ClusterType c;
  if (!reflexive(u)) {
    c = irr_cluster();
  } else {
    c = refl_cluster(int(cluster_of(u).size()));
  }
  return FrameType{c, immediate_successor_clusters(*this, u)};
}

int Model::depth() const {
  auto cls = clusters();
  int nc = int(cls.size());
  std::vector<int> d(nc, 1);
  // longest chain of clusters; relation is a strict partial order on clusters
  std::vector<int> order(nc);
  for (int i = 0; i < nc; ++i) order[i] = i;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < nc; ++j) {
        if (i == j) continue;
        int u = cls[i][0], v = cls[j][0];
        if (related(u, v) && !same_cluster(u, v)) {
          if (d[i] < d[j] + 1) {
            d[i] = d[j] + 1;
            changed = true;
          }
        }
      }
  }
  int best = 0;
  for (int i = 0; i < nc; ++i) best = std::max(best, d[i]);
  return best;
}

int Model::branching() const {
  int best = 0;
  for (int u = 0; u < size(); ++u)
    best = std::max(best, immediate_successor_clusters(*this, u));
  return best;
}

int Model::width() const {
  // maximal antichain within any rooted subframe; brute force over cluster
  // representatives (an antichain has at most one point per cluster).
  auto cls = clusters();
  if (cls.size() > 20) throw CapExceeded("width enumeration");
  int best = 0;
  for (int r = 0; r < size(); ++r) {
    std::vector<int> reps;
    for (const auto& c : cls)
      if (r == c[0] || same_cluster(r, c[0]) || related(r, c[0])) reps.push_back(c[0]);
    int k = int(reps.size());
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
      bool anti = true;
      for (int i = 0; i < k && anti; ++i)
        if (mask >> i & 1)
          for (int j = i + 1; j < k && anti; ++j)
            if (mask >> j & 1)
              if (related(reps[i], reps[j]) || related(reps[j], reps[i])) anti = false;
      if (anti) best = std::max(best, __builtin_popcount(mask));
    }
  }
  return best;
}

int Model::max_cluster() const {
  int best = 0;
  for (const auto& c : clusters()) best = std::max(best, int(c.size()));
  return best;
}

std::vector<int> Model::upset_strict(const std::vector<int>& xs) const {
  std::vector<bool> in(size(), false);
  for (int x : xs)
    for (int v = 0; v < size(); ++v)
      if (related(x, v)) in[v] = true;
  std::vector<int> out;
  for (int v = 0; v < size(); ++v)
    if (in[v]) out.push_back(v);
  return out;
}

std::vector<int> Model::upset(const std::vector<int>& xs) const {
  std::vector<bool> in(size(), false);
  for (int x : xs) {
    in[x] = true;
    for (int v = 0; v < size(); ++v)
      if (related(x, v)) in[v] = true;
  }
  std::vector<int> out;
  for (int v = 0; v < size(); ++v)
    if (in[v]) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------------------
// Satisfaction.

namespace {

struct Evaluator {
  const Model& m;
  std::unordered_map<const Formula::Node*, std::vector<bool>> memo;

  explicit Evaluator(const Model& model) : m(model) {}

  const std::vector<bool>& eval(Formula f) {
    auto it = memo.find(f.node());
    if (it != memo.end()) return it->second;
    std::vector<bool> col(m.size(), false);
    switch (f.op()) {
      case Op::Falsum:
        break;
      case Op::Atom:
        for (int u = 0; u < m.size(); ++u) col[u] = m.atom_true(u, f.atom_ref());
        break;
      case Op::Imp: {
        const auto& a = eval(f.left());
        const auto& b = eval(f.right());
        for (int u = 0; u < m.size(); ++u) col[u] = !a[u] || b[u];
        break;
      }
      case Op::Box: {
        const auto& a = eval(f.child());
        for (int u = 0; u < m.size(); ++u) {
          bool all = true;
          for (int v = 0; v < m.size() && all; ++v)
            if (m.related(u, v) && !a[v]) all = false;
          col[u] = all;
        }
        break;
      }
    }
    return memo.emplace(f.node(), std::move(col)).first->second;
  }
};

}  // namespace

bool sat(const Model& m, int u, Formula f) {
  Evaluator ev(m);
  return ev.eval(f)[u];
}

std::vector<bool> sat_set(const Model& m, Formula f) {
  Evaluator ev(m);
  return ev.eval(f);
}

bool globally_true(const Model& m, Formula f) {
  auto col = sat_set(m, f);
  for (bool b : col)
    if (!b) return false;
  return true;
}

Model transform(const Model& m, const Substitution& sigma) {
  Model out = m;
  Evaluator ev(m);
  for (const auto& v : m.vars()) {
    Atom a = var(v);
    Formula image = Formula::atom(a);
    if (auto f = sigma.lookup(a)) image = *f;
    const auto& col = ev.eval(image);
    for (int u = 0; u < m.size(); ++u) out.set_atom(u, a, col[u]);
  }
  return out;
}

bool rule_valid(const Model& m, const Rule& r, const Caps& caps) {
  std::set<Atom> atoms = r.atoms();
  std::vector<Atom> vars;
  for (const auto& a : atoms) {
    if (!m.has_atom(a)) throw std::invalid_argument("rule atom outside model universe: " + a.name);
    if (!a.is_parameter()) vars.push_back(a);
  }
  if (int(vars.size()) > caps.max_rule_vars) throw CapExceeded("rule_valid variables");
  long long bits = (long long)vars.size() * m.size();
  if (bits > 62 || (std::size_t(1) << bits) > caps.max_rule_valuations)
    throw CapExceeded("rule_valid valuations");

  Model work = m;
  std::size_t total = std::size_t(1) << bits;
  for (std::size_t val = 0; val < total; ++val) {
    std::size_t x = val;
    for (const auto& a : vars)
      for (int u = 0; u < m.size(); ++u) {
        work.set_atom(u, a, x & 1);
        x >>= 1;
      }
    bool satisfied = false;
    for (const auto& p : r.premises)
      if (!globally_true(work, p)) {
        satisfied = true;
        break;
      }
    if (!satisfied)
      for (const auto& c : r.conclusions)
        if (globally_true(work, c)) {
          satisfied = true;
          break;
        }
    if (!satisfied) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Tight predecessors.

namespace {

bool params_match(const Model& m, int u, const std::vector<bool>& e) {
  const auto& ps = m.params();
  for (size_t i = 0; i < ps.size(); ++i)
    if (m.atom_true(u, param(ps[i])) != e[i]) return false;
  return true;
}

}  // namespace

std::optional<std::vector<int>> find_tp(const Model& m, const std::vector<int>& xs,
                                        const TpSpec& spec) {
  std::vector<int> up = m.upset(xs);
  std::vector<bool> target(m.size(), false);
  for (int v : up) target[v] = true;

  if (!spec.reflexive) {
    if (spec.assignments.size() != 1)
      throw std::invalid_argument("irreflexive tp spec needs a single assignment");
    for (int u = 0; u < m.size(); ++u) {
      if (!params_match(m, u, spec.assignments[0])) continue;
      bool ok = true;
      for (int v = 0; v < m.size() && ok; ++v)
        if (m.related(u, v) != target[v]) ok = false;
      if (ok) return std::vector<int>{u};
    }
    return std::nullopt;
  }

  if (spec.assignments.empty()) throw std::invalid_argument("reflexive tp spec needs E nonempty");
  // Candidates live in a single cluster; pick one point per assignment.
  for (const auto& cluster : m.clusters()) {
    std::vector<int> pick(spec.assignments.size(), -1);
    bool ok = true;
    for (size_t i = 0; i < spec.assignments.size() && ok; ++i) {
      for (int u : cluster)
        if (params_match(m, u, spec.assignments[i])) {
          pick[i] = u;
          break;
        }
      if (pick[i] < 0) ok = false;
    }
    if (!ok) continue;
    // u_e↑ = X⇑ ∪ {u_f : f ∈ E}, for every member.
    std::vector<bool> want = target;
    for (int u : pick) want[u] = true;
    for (int u : pick) {
      for (int v = 0; v < m.size() && ok; ++v)
        if (m.related(u, v) != want[v]) ok = false;
      if (!ok) break;
    }
    if (ok) return pick;
  }
  return std::nullopt;
}

std::optional<std::vector<int>> find_tpp(const Model& m, const std::vector<int>& xs,
                                         const TpSpec& spec,
                                         const std::vector<Formula>& sigma) {
  if (!is_subformula_closed(sigma)) throw std::invalid_argument("sigma not subformula-closed");
  std::vector<Formula> boxed;
  for (const auto& f : sigma)
    if (f.op() == Op::Box) boxed.push_back(f);

  Evaluator ev(m);
  // For each boxed □ψ ∈ Σ: whether every w ∈ X satisfies ⊡ψ.
  std::vector<bool> profile(boxed.size(), true);
  for (size_t i = 0; i < boxed.size(); ++i) {
    const auto& bx = ev.eval(boxed[i]);
    const auto& body = ev.eval(boxed[i].child());
    for (int w : xs)
      if (!(body[w] && bx[w])) profile[i] = false;
  }

  if (!spec.reflexive) {
    if (spec.assignments.size() != 1)
      throw std::invalid_argument("irreflexive tpp spec needs a single assignment");
    for (int u = 0; u < m.size(); ++u) {
      if (!params_match(m, u, spec.assignments[0])) continue;
      bool ok = true;
      for (size_t i = 0; i < boxed.size() && ok; ++i)
        if (ev.eval(boxed[i])[u] != profile[i]) ok = false;
      if (ok) return std::vector<int>{u};
    }
    return std::nullopt;
  }

  if (spec.assignments.empty()) throw std::invalid_argument("reflexive tpp spec needs E nonempty");
  size_t k = spec.assignments.size();
  std::vector<std::vector<int>> candidates(k);
  for (size_t i = 0; i < k; ++i)
    for (int u = 0; u < m.size(); ++u)
      if (params_match(m, u, spec.assignments[i])) candidates[i].push_back(u);

  std::vector<int> pick(k, 0);
  std::vector<size_t> idx(k, 0);
  for (size_t i = 0; i < k; ++i)
    if (candidates[i].empty()) return std::nullopt;
  for (;;) {
    for (size_t i = 0; i < k; ++i) pick[i] = candidates[i][idx[i]];
    // u_e ⊨ □ψ iff (all of X ⊨ ⊡ψ) and (all u_f ⊨ ψ).
    bool ok = true;
    for (size_t b = 0; b < boxed.size() && ok; ++b) {
      bool rhs = profile[b];
      const auto& body = ev.eval(boxed[b].child());
      for (int u : pick)
        if (!body[u]) rhs = false;
      const auto& bx = ev.eval(boxed[b]);
      for (int u : pick)
        if (bx[u] != rhs) ok = false;
    }
    if (ok) return pick;
    size_t i = 0;
    while (i < k && ++idx[i] == candidates[i].size()) {
      idx[i] = 0;
      ++i;
    }
    if (i == k) return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// JSON.

std::string Model::to_json() const {
  nlohmann::json j;
  j["params"] = params_;
  j["vars"] = vars_;
  j["points"] = nlohmann::json::array();
  for (int u = 0; u < size(); ++u) {
    nlohmann::json p;
    p["id"] = ids_[u];
    p["reflexive"] = reflexive(u);
    std::vector<std::string> atoms;
    for (const auto& name : vars_)
      if (atom_true(u, var(name))) atoms.push_back(name);
    for (const auto& name : params_)
      if (atom_true(u, param(name))) atoms.push_back("$" + name);
    p["true_atoms"] = atoms;
    j["points"].push_back(p);
  }
  j["edges"] = nlohmann::json::array();
  for (int u = 0; u < size(); ++u)
    for (int v = 0; v < size(); ++v)
      if (u != v && related(u, v)) j["edges"].push_back({ids_[u], ids_[v]});
  return j.dump(2);
}

Model Model::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::vector<std::string> params = j.value("params", std::vector<std::string>{});
  std::vector<std::string> vars = j.value("vars", std::vector<std::string>{});
  std::vector<std::string> ids;
  std::vector<bool> refl;
  std::map<std::string, int> index;
  for (const auto& p : j.at("points")) {
    std::string id = p.at("id").get<std::string>();
    if (index.count(id)) throw std::invalid_argument("duplicate point id " + id);
    index[id] = int(ids.size());
    ids.push_back(id);
    if (p.contains("reflexive") && !p["reflexive"].is_boolean())
      throw std::invalid_argument("reflexive flag must be boolean");
    refl.push_back(p.value("reflexive", false));
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.value("edges", nlohmann::json::array())) {
    std::string a = e.at(0).get<std::string>(), b = e.at(1).get<std::string>();
    if (!index.count(a) || !index.count(b))
      throw std::invalid_argument("dangling edge endpoint");
    edges.emplace_back(index[a], index[b]);
  }
  Model m(ids, refl, edges, params, vars);
  for (const auto& p : j.at("points")) {
    int u = index[p.at("id").get<std::string>()];
    for (const auto& a : p.value("true_atoms", std::vector<std::string>{})) {
      Atom atom = a.starts_with("$") ? param(a.substr(1)) : var(a);
      if (!m.has_atom(atom)) throw std::invalid_argument("atom outside universe: " + a);
      m.set_atom(u, atom, true);
    }
  }
  return m;
}

}  // namespace clx
