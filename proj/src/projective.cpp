#include "clx/projective.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <sstream>

namespace clx {

// ---------------------------------------------------------------------------
// Löwenheim substitutions.

Substitution loewenheim(Formula phi, const BooleanTable& d) {
  Formula bd = Formula::boxdot(phi);
  Formula nbd = Formula::neg(bd);
  Substitution out;
  for (int vi = 0; vi < int(d.vars.size()); ++vi) {
    // d_x as a full DNF over the parameters
    std::vector<Formula> cubes;
    for (uint32_t e = 0; e < d.rows.size(); ++e) {
      if (!d.value(e, vi)) continue;
      std::vector<Formula> lits;
      for (int pi = 0; pi < int(d.params.size()); ++pi) {
        Formula p = Formula::atom(d.params[pi]);
        lits.push_back(e >> pi & 1 ? p : Formula::neg(p));
      }
      cubes.push_back(Formula::conj(lits));
    }
    Formula dx = Formula::disj(cubes);
    Formula x = Formula::atom(d.vars[vi]);
    out.set(d.vars[vi], Formula::disj(Formula::conj(bd, x), Formula::conj(nbd, dx)));
  }
  return out;
}

namespace {

void split_atoms(Formula phi, std::vector<Atom>& params, std::vector<Atom>& vars) {
  for (const auto& a : phi.atoms()) {
    if (a.is_parameter())
      params.push_back(a);
    else
      vars.push_back(a);
  }
}

std::vector<BooleanTable> all_tables(Formula phi, const Caps& caps) {
  std::vector<Atom> params, vars;
  split_atoms(phi, params, vars);
  std::size_t rows = std::size_t(1) << params.size();
  std::size_t bits = vars.size() * rows;
  if (int(bits) > caps.max_theta_bits) throw CapExceeded("theta table bits");
  std::vector<BooleanTable> out;
  for (std::size_t code = 0; code < (std::size_t(1) << bits); ++code) {
    BooleanTable d;
    d.params = params;
    d.vars = vars;
    d.rows.assign(rows, 0);
    std::size_t c = code;
    for (std::size_t e = 0; e < rows; ++e) {
      d.rows[e] = uint32_t(c & ((std::size_t(1) << vars.size()) - 1));
      c >>= vars.size();
    }
    out.push_back(std::move(d));
  }
  return out;
}

Substitution simplify_images(const Substitution& s, const Caps& caps) {
  Substitution out;
  for (const auto& [v, f] : s.mapping()) out.set(v, simplify(f, caps.max_simplify_leaves));
  return out;
}

}  // namespace

Substitution theta(Formula phi, const Caps& caps) {
  // Build the lexicographic product by prepending factors: every factor keeps
  // its guard ⊡φ over the original φ, so images stay Boolean combinations of
  // a fixed leaf set and the per-step minimization keeps them small.
  std::vector<BooleanTable> tables = all_tables(phi, caps);
  Substitution acc;
  for (auto it = tables.rbegin(); it != tables.rend(); ++it)
    acc = simplify_images(Substitution::compose(loewenheim(phi, *it), acc), caps);
  return acc;
}

int theta_iterations(Formula phi) {
  std::set<Formula> bodies;
  for (const auto& f : subformulas({phi}))
    if (f.op() == Op::Box) bodies.insert(f.child());
  std::vector<Atom> params, vars;
  split_atoms(phi, params, vars);
  return int((bodies.size() + 1) * ((std::size_t(1) << params.size()) + 1));
}

namespace {

Substitution theta_round(Formula phi, const std::vector<BooleanTable>& tables,
                         Substitution acc, const Caps& caps) {
  for (auto it = tables.rbegin(); it != tables.rend(); ++it) {
    acc = simplify_images(Substitution::compose(loewenheim(phi, *it), acc), caps);
    for (const auto& [v, f] : acc.mapping()) {
      (void)v;
      if (dag_size(f) > 20000) throw CapExceeded("theta image growth");
    }
  }
  return acc;
}

}  // namespace

Substitution theta_power(Formula phi, const Caps& caps) {
  std::vector<BooleanTable> tables = all_tables(phi, caps);
  int n = theta_iterations(phi);
  Substitution acc;
  for (int round = 0; round < n; ++round) {
    Substitution before = acc;
    acc = theta_round(phi, tables, std::move(acc), caps);
    if (acc == before) break;  // stabilized: further rounds reproduce it
  }
  return acc;
}

std::pair<Substitution, bool> theta_unifier(const LogicSpec& l, Formula phi, const Caps& caps) {
  std::vector<BooleanTable> tables = all_tables(phi, caps);
  int n = theta_iterations(phi);
  Substitution acc;
  bool grown = false;
  for (int round = 0; round < n; ++round) {
    Substitution before = acc;
    try {
      acc = theta_round(phi, tables, std::move(acc), caps);
    } catch (const CapExceeded&) {
      grown = true;
      acc = before;
      break;
    }
    try {
      Caps vcaps = caps;  // image closures outgrow the input-side caps quickly
      vcaps.max_sigma = 64;
      vcaps.max_free = 14;
      vcaps.max_types = 16384;
      if (tautology(l, acc.apply(phi), vcaps)) return {acc, true};
    } catch (const CapExceeded&) {
      grown = true;  // image closure beyond the caps; larger powers only grow
      break;
    }
    if (acc == before) break;  // stabilized
  }
  (void)grown;
  return {acc, false};
}

// ---------------------------------------------------------------------------
// Model extension property over type sets.

std::string ExtConfig::print(const SigmaContext& ctx) const {
  std::ostringstream out;
  out << (reflexive ? "reflexive" : "irreflexive") << " root, params {";
  auto names = ctx.param_names();
  for (std::size_t i = 0; i < root_params.size(); ++i) {
    if (i) out << "; ";
    for (std::size_t p = 0; p < root_params[i].size(); ++p) {
      if (p) out << ",";
      out << (root_params[i][p] ? "" : "!") << names[p];
    }
    if (root_params[i].empty()) out << "-";
  }
  out << "}, " << generators.size() << " generator(s)";
  return out.str();
}

namespace {

// The extension-property search runs on the profile-level realizability data:
// the variable-assignment check on a prospective root cluster only consults
// the attachment through its □-body profile, and a failing configuration can
// never be an absorbed one (a reflexive generator realizing all requested
// parameter assignments always admits the assignment that copies its root
// types), so profiles carry everything the decision needs.
struct MepEngine {
  const LogicSpec& l;
  const SigmaContext& ctx;
  const Caps& caps;
  RootRealizability rr;
  int np, nv;

  MepEngine(const LogicSpec& logic, const SigmaContext& c, const std::vector<TypeMask>& allowed,
            const Caps& cp)
      : l(logic), ctx(c), caps(cp), rr(logic, c, allowed, cp) {
    np = int(ctx.param_indices().size());
    nv = int(ctx.var_indices().size());
  }

  // Does some variable assignment on the root cluster keep every root type
  // allowed?
  bool some_assignment_good(const std::vector<uint32_t>& root_es, bool reflexive,
                            TypeMask profile) const {
    std::size_t k = root_es.size();
    std::size_t bits = k * nv;
    if (bits > 24) throw CapExceeded("root assignment search");
    for (std::size_t v = 0; v < (std::size_t(1) << bits); ++v) {
      ClusterSpec spec;
      spec.reflexive = reflexive;
      std::size_t b = v;
      for (std::size_t i = 0; i < k; ++i) {
        uint32_t vbits = uint32_t(b & ((1u << nv) - 1));
        b >>= nv;
        spec.assignments.push_back(root_es[i] | (vbits << np));
      }
      if (!rr.cluster_types(spec, profile).empty()) return true;
    }
    return false;
  }

  std::optional<ExtConfig> search() const {
    uint32_t pe_universe = uint32_t(1) << np;
    struct RootSpec {
      bool reflexive;
      std::vector<uint32_t> es;
    };
    std::vector<RootSpec> rspecs;
    for (uint32_t e = 0; e < pe_universe; ++e) rspecs.push_back({false, {e}});
    std::vector<uint32_t> sets;
    for (uint32_t s = 1; s < (uint32_t(1) << pe_universe); ++s) sets.push_back(s);
    std::stable_sort(sets.begin(), sets.end(), [](uint32_t a, uint32_t b) {
      int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
      if (pa != pb) return pa < pb;
      return a < b;
    });
    for (uint32_t s : sets) {
      RootSpec r{true, {}};
      for (uint32_t e = 0; e < pe_universe; ++e)
        if (s >> e & 1) r.es.push_back(e);
      rspecs.push_back(std::move(r));
    }

    auto as_config = [&](const RootSpec& r, const std::vector<int>& gens) {
      ExtConfig cfg;
      cfg.reflexive = r.reflexive;
      for (uint32_t e : r.es) {
        std::vector<bool> row;
        for (int p = 0; p < np; ++p) row.push_back(e >> p & 1);
        cfg.root_params.push_back(row);
      }
      for (int g : gens) {
        const ProfilePair& pp = rr.pairs()[g];
        TypePair tp;
        tp.root_types = pp.point_types;
        std::sort(tp.root_types.begin(), tp.root_types.end());
        tp.root_types.erase(std::unique(tp.root_types.begin(), tp.root_types.end()),
                            tp.root_types.end());
        tp.reflexive = pp.reflexive;
        tp.spec = pp.spec;
        // reconstruct the witness cone from the materialized model
        Model m = rr.materialize_pair(g);
        tp.cone = Bits(rr.types().size());
        for (int u = 0; u < m.size(); ++u) {
          TypeMask t = 0;
          for (std::size_t i = 0; i < ctx.sigma().size(); ++i)
            if (sat(m, u, ctx.sigma()[i])) t |= TypeMask(1) << i;
          auto it = std::lower_bound(rr.types().begin(), rr.types().end(), t);
          if (it != rr.types().end() && *it == t)
            tp.cone.set(std::size_t(it - rr.types().begin()));
        }
        cfg.generators.push_back(std::move(tp));
      }
      return cfg;
    };

    // the empty attachment first, then profiles in deterministic order
    for (const auto& r : rspecs) {
      ClusterType c = r.reflexive ? refl_cluster(int(r.es.size())) : irr_cluster();
      if (!l.tp_member(ExtensionCondition{c, 0})) continue;
      if (!some_assignment_good(r.es, r.reflexive, rr.full_profile()))
        return as_config(r, {});
    }
    std::vector<const ProfileEntry*> entries;
    for (const auto& e : rr.profiles()) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(), [](const ProfileEntry* a, const ProfileEntry* b) {
      return a->profile < b->profile;
    });
    for (const ProfileEntry* e : entries) {
      for (const auto& r : rspecs) {
        ClusterType c = r.reflexive ? refl_cluster(int(r.es.size())) : irr_cluster();
        if (!l.tp_member(ExtensionCondition{c, e->n_min})) continue;
        if (!some_assignment_good(r.es, r.reflexive, e->profile))
          return as_config(r, e->generators);
      }
    }
    return std::nullopt;
  }
};

}  // namespace

std::optional<ExtConfig> mep_failure(const LogicSpec& l, const SigmaContext& ctx,
                                     const std::vector<TypeMask>& allowed, const Caps& caps) {
  MepEngine eng(l, ctx, allowed, caps);
  return eng.search();
}

// ---------------------------------------------------------------------------
// Projectivity.

ProjectivityResult projective(const LogicSpec& l, Formula phi, const Caps& caps) {
  l.check_formula(phi);
  ProjectivityResult res;
  SigmaContext ctx({phi}, caps);
  std::vector<TypeMask> u =
      ctx.enumerate_types(caps, [&](TypeMask t) { return ctx.eval(phi, t); });
  auto failure = mep_failure(l, ctx, u, caps);
  if (failure) {
    res.projective = false;
    res.counterexample = std::move(failure);
    return res;
  }
  res.projective = true;
  auto [sigma, verified] = theta_unifier(l, phi, caps);
  res.unifier = sigma;
  res.grade = verified ? WitnessGrade::Exact : WitnessGrade::Bounded;
  return res;
}

Formula type_set_formula(const SigmaContext& ctx, const std::vector<TypeMask>& types) {
  std::vector<Formula> cubes;
  for (TypeMask t : types) {
    std::vector<Formula> lits;
    for (int i : ctx.param_indices()) {
      Formula a = ctx.sigma()[i];
      lits.push_back(t >> i & 1 ? a : Formula::neg(a));
    }
    for (int i : ctx.var_indices()) {
      Formula a = ctx.sigma()[i];
      lits.push_back(t >> i & 1 ? a : Formula::neg(a));
    }
    for (const auto& [bi, body] : ctx.boxes()) {
      (void)body;
      Formula a = ctx.sigma()[bi];
      lits.push_back(t >> bi & 1 ? a : Formula::neg(a));
    }
    cubes.push_back(Formula::conj(lits));
  }
  return simplify(Formula::disj(cubes));
}

std::vector<ApproxMember> projective_approximation(const LogicSpec& l, Formula phi,
                                                   const Caps& caps) {
  l.check_formula(phi);
  SigmaContext ctx({phi}, caps);
  std::vector<TypeMask> u_phi =
      ctx.enumerate_types(caps, [&](TypeMask t) { return ctx.eval(phi, t); });
  return projective_approximation_over(l, ctx, u_phi, caps);
}

std::vector<ApproxMember> projective_approximation_over(const LogicSpec& l,
                                                        const SigmaContext& ctx,
                                                        const std::vector<TypeMask>& allowed,
                                                        const Caps& caps) {
  TypeSetFamily fam(l, ctx, allowed, caps);

  // candidate type sets: achievable cone unions, largest first; the empty
  // model's set comes last (it only matters for inconsistent logics)
  std::vector<uint64_t> sets;
  for (const auto& e : fam.family()) sets.push_back(e.set);
  sets.push_back(0);
  std::sort(sets.begin(), sets.end(), [](uint64_t a, uint64_t b) {
    int pa = __builtin_popcountll(a), pb = __builtin_popcountll(b);
    if (pa != pb) return pa > pb;
    return a < b;
  });

  std::vector<ApproxMember> out;
  std::vector<uint64_t> accepted;
  for (uint64_t u : sets) {
    bool subsumed = false;
    for (uint64_t acc : accepted)
      if ((u & ~acc) == 0) subsumed = true;
    if (subsumed) continue;
    std::vector<TypeMask> types = fam.member_types(u);
    if (mep_failure(l, ctx, types, caps).has_value()) continue;
    accepted.push_back(u);
    ApproxMember m;
    m.types = types;
    m.psi = type_set_formula(ctx, types);
    out.push_back(std::move(m));
    if (out.size() > caps.max_family) throw CapExceeded("approximation family");
  }
  return out;
}

}  // namespace clx
