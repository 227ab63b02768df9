#include "clx/admissibility.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "clx/typecore.hpp"

namespace clx {

namespace {

// --------------------------------------------------------------------------
// Engine A: projective type sets over Sub(Γ).

Decision engine_a(const LogicSpec& l, const Rule& rule, const Caps& caps) {
  Decision d;
  SigmaContext ctx(rule.premises, caps);
  std::vector<TypeMask> allowed = ctx.enumerate_types(caps, [&](TypeMask t) {
    for (const auto& g : rule.premises)
      if (!ctx.eval(g, t)) return false;
    return true;
  });
  TypeSetFamily fam(l, ctx, allowed, caps);

  std::vector<Formula> joint = rule.premises;
  joint.insert(joint.end(), rule.conclusions.begin(), rule.conclusions.end());
  SigmaContext ctx_plus(joint, caps);

  std::vector<uint64_t> sets;
  for (const auto& e : fam.family()) sets.push_back(e.set);
  sets.push_back(0);
  std::sort(sets.begin(), sets.end(), [](uint64_t a, uint64_t b) {
    int pa = __builtin_popcountll(a), pb = __builtin_popcountll(b);
    if (pa != pb) return pa > pb;
    return a < b;
  });

  std::vector<uint64_t> implying;  // sets whose formula proves some conclusion
  for (uint64_t u : sets) {
    bool skip = false;
    for (uint64_t i : implying)
      if ((u & ~i) == 0) skip = true;
    if (skip) continue;
    std::vector<TypeMask> types = fam.member_types(u);
    Formula psi = type_set_formula(ctx, types);
    bool proves_some = false;
    for (const auto& delta : rule.conclusions)
      if (consequence_over(l, ctx_plus, {psi}, delta, caps)) {
        proves_some = true;
        break;
      }
    if (proves_some) {
      implying.push_back(u);
      continue;
    }
    if (!mep_failure(l, ctx, types, caps).has_value()) {
      d.verdict = Verdict::NotAdmissible;
      try {
        auto [sigma, verified] = theta_unifier(l, psi, caps);
        d.unifier_witness = sigma;
        if (!verified) d.note = "unifier verified at bounded scale only";
      } catch (const CapExceeded& e) {
        d.note = std::string("unifier construction capped: ") + e.what();
      }
      return d;
    }
  }
  d.verdict = Verdict::Admissible;
  return d;
}

// --------------------------------------------------------------------------
// Engine B: pseudoextensible realizable type sets over Sub(Γ∪Δ).

struct SigmaRestriction {
  std::vector<std::pair<int, int>> boxes;  // (box idx, body idx) with box ∈ Sub(Γ)
  std::vector<int> params;                 // ctx param indices with atom ∈ Sub(Γ)
};

SigmaRestriction restrict_to(const SigmaContext& ctx, const std::vector<Formula>& gamma) {
  std::vector<Formula> sub = subformulas(gamma);
  std::set<Formula> in(sub.begin(), sub.end());
  SigmaRestriction r;
  for (const auto& [bi, body] : ctx.boxes())
    if (in.count(ctx.sigma()[bi])) r.boxes.emplace_back(bi, body);
  for (int pi : ctx.param_indices())
    if (in.count(ctx.sigma()[pi])) r.params.push_back(pi);
  return r;
}

// Pseudoextensibility of a set of types for the given conditions, with the
// tight-pseudopredecessor clauses evaluated on box profiles.
bool typeset_pseudoextensible(const std::vector<TypeMask>& types, const SigmaRestriction& sr,
                              const std::vector<ExtensionCondition>& conds, const Caps& caps) {
  int nb = int(sr.boxes.size());
  int np = int(sr.params.size());
  auto bdt_profile = [&](TypeMask t) {
    uint32_t p = 0;
    for (int j = 0; j < nb; ++j)
      if ((t >> sr.boxes[j].second & 1) && (t >> sr.boxes[j].first & 1)) p |= 1u << j;
    return p;
  };
  auto box_profile = [&](TypeMask t) {
    uint32_t p = 0;
    for (int j = 0; j < nb; ++j)
      if (t >> sr.boxes[j].first & 1) p |= 1u << j;
    return p;
  };
  auto body_bits = [&](TypeMask t) {
    uint32_t p = 0;
    for (int j = 0; j < nb; ++j)
      if (t >> sr.boxes[j].second & 1) p |= 1u << j;
    return p;
  };
  auto params_of = [&](TypeMask t) {
    uint32_t p = 0;
    for (int j = 0; j < np; ++j)
      if (t >> sr.params[j] & 1) p |= 1u << j;
    return p;
  };
  uint32_t full = nb == 64 ? ~0u : (uint32_t(1) << nb) - 1;

  std::set<uint32_t> base_profiles;
  for (TypeMask t : types) base_profiles.insert(bdt_profile(t));

  // distinct candidate behaviours: (params, box profile, body bits)
  struct Cand {
    uint32_t params, boxes, bodies;
    bool operator<(const Cand& o) const {
      return std::tie(params, boxes, bodies) < std::tie(o.params, o.boxes, o.bodies);
    }
  };
  std::set<Cand> cand_set;
  for (TypeMask t : types) cand_set.insert({params_of(t), box_profile(t), body_bits(t)});
  std::vector<Cand> cands(cand_set.begin(), cand_set.end());

  uint32_t pe_universe = uint32_t(1) << np;

  for (const auto& cond : conds) {
    // achievable X-profiles for |X| ≤₀ n
    std::set<uint32_t> profiles;
    if (cond.n == 0) {
      profiles.insert(full);
    } else {
      std::set<uint32_t> layer = base_profiles;
      profiles = layer;
      int depth = cond.n >= kInf ? nb + 1 : cond.n;  // ∩-closure saturates fast
      for (int step = 1; step < depth; ++step) {
        std::set<uint32_t> next;
        for (uint32_t p : profiles)
          for (uint32_t b : base_profiles) next.insert(p & b);
        std::size_t before = profiles.size();
        profiles.insert(next.begin(), next.end());
        if (profiles.size() == before) break;
      }
      if (types.empty()) profiles.clear();
    }

    std::vector<std::vector<uint32_t>> e_sets;  // each E as a list of param words
    if (!cond.cluster.reflexive) {
      for (uint32_t e = 0; e < pe_universe; ++e) e_sets.push_back({e});
    } else {
      long long limit = std::min<long long>(cond.cluster.k, pe_universe);
      for (uint32_t s = 1; s < (uint32_t(1) << pe_universe); ++s) {
        if (__builtin_popcount(s) > limit) continue;
        std::vector<uint32_t> es;
        for (uint32_t e = 0; e < pe_universe; ++e)
          if (s >> e & 1) es.push_back(e);
        e_sets.push_back(std::move(es));
      }
    }

    for (uint32_t pi : profiles) {
      for (const auto& es : e_sets) {
        bool found = false;
        if (!cond.cluster.reflexive) {
          uint32_t e = es[0];
          for (const auto& c : cands)
            if (c.params == e && c.boxes == pi) {
              found = true;
              break;
            }
        } else {
          // tuple search over candidate behaviours per assignment
          std::vector<std::vector<Cand>> per_e(es.size());
          bool feasible = true;
          for (std::size_t i = 0; i < es.size(); ++i) {
            for (const auto& c : cands)
              if (c.params == es[i]) per_e[i].push_back(c);
            if (per_e[i].empty()) feasible = false;
          }
          if (feasible) {
            std::size_t total = 1;
            for (const auto& v : per_e) {
              total *= v.size();
              if (total > caps.max_rule_valuations) throw CapExceeded("tpp tuple search");
            }
            std::vector<std::size_t> idx(es.size(), 0);
            for (;;) {
              uint32_t common = full;
              for (std::size_t i = 0; i < es.size(); ++i) common &= per_e[i][idx[i]].bodies;
              uint32_t beta = pi & common;
              bool ok = true;
              for (std::size_t i = 0; i < es.size() && ok; ++i)
                if (per_e[i][idx[i]].boxes != beta) ok = false;
              if (ok) {
                found = true;
                break;
              }
              std::size_t i = 0;
              while (i < es.size() && ++idx[i] == per_e[i].size()) {
                idx[i] = 0;
                ++i;
              }
              if (i == es.size()) break;
            }
          }
        }
        if (!found) return false;
      }
    }
  }
  return true;
}

Decision engine_b(const LogicSpec& l, const Rule& rule, const Caps& caps) {
  Decision d;
  std::vector<Formula> joint = rule.premises;
  joint.insert(joint.end(), rule.conclusions.begin(), rule.conclusions.end());
  SigmaContext ctx(joint, caps);
  std::vector<TypeMask> allowed = ctx.enumerate_types(caps, [&](TypeMask t) {
    for (const auto& g : rule.premises)
      if (!ctx.eval(g, t)) return false;
    return true;
  });
  TypeSetFamily fam(l, ctx, allowed, caps);
  SigmaRestriction sr = restrict_to(ctx, rule.premises);
  std::vector<ExtensionCondition> conds = l.effective_base();

  auto refutes_all = [&](const std::vector<TypeMask>& types) {
    for (const auto& delta : rule.conclusions) {
      bool somewhere = false;
      for (TypeMask t : types)
        if (!ctx.eval(delta, t)) {
          somewhere = true;
          break;
        }
      if (!somewhere) return false;
    }
    return true;
  };

  // the empty model first (it can only refute conclusion-free rules, and is
  // pseudoextensible exactly when no condition demands a witness point)
  {
    std::vector<TypeMask> none;
    if (refutes_all(none) && typeset_pseudoextensible(none, sr, conds, caps)) {
      d.verdict = Verdict::NotAdmissible;
      d.model_witness = Model({}, {}, {}, ctx.param_names(), ctx.var_names());
      return d;
    }
  }

  for (const auto& entry : fam.family()) {  // smallest witnesses first
    std::vector<TypeMask> types = fam.member_types(entry.set);
    if (!refutes_all(types)) continue;
    if (!typeset_pseudoextensible(types, sr, conds, caps)) continue;
    d.verdict = Verdict::NotAdmissible;
    d.model_witness = fam.materialize_union(entry, caps);
    return d;
  }
  d.verdict = Verdict::Admissible;
  return d;
}

Decision run_engine(const LogicSpec& l, const Rule& rule, EngineKind engine, const Caps& caps) {
  auto safely = [&](auto fn) {
    Decision d;
    try {
      d = fn();
    } catch (const CapExceeded& e) {
      d.verdict = Verdict::Undecided;
      d.note = e.what();
    }
    return d;
  };
  if (engine == EngineKind::A) return safely([&] { return engine_a(l, rule, caps); });
  if (engine == EngineKind::B) return safely([&] { return engine_b(l, rule, caps); });
  Decision da = safely([&] { return engine_a(l, rule, caps); });
  Decision db = safely([&] { return engine_b(l, rule, caps); });
  if (da.verdict == Verdict::Undecided) return db;
  if (db.verdict == Verdict::Undecided) return da;
  if (da.verdict != db.verdict)
    throw EngineDisagreement("admissibility engines disagree on " + rule.print() + " over " +
                             l.name());
  Decision merged = da;
  merged.model_witness = db.model_witness;
  return merged;
}

}  // namespace

Decision admissible(const LogicSpec& l, const Rule& rule, EngineKind engine, const Caps& caps) {
  l.check_rule(rule);
  return run_engine(l, rule, engine, caps);
}

// --------------------------------------------------------------------------
// Certificates: the point-level pseudoextensibility check.

bool pseudoextensible(const LogicSpec& l, const Model& m, const std::vector<Formula>& sigma,
                      const Caps& caps) {
  if (!is_subformula_closed(sigma)) throw std::invalid_argument("sigma not subformula-closed");
  std::vector<Formula> boxes;
  std::vector<std::string> pnames;
  for (const auto& f : sigma) {
    if (f.op() == Op::Box) boxes.push_back(f);
    if (f.op() == Op::Atom && f.atom_ref().is_parameter()) pnames.push_back(f.atom_ref().name);
  }
  std::sort(pnames.begin(), pnames.end());
  int nb = int(boxes.size());
  int np = int(pnames.size());
  if (nb > 30 || np > 4) throw CapExceeded("certificate sigma");
  std::vector<std::vector<bool>> box_col, body_col;
  for (const auto& b : boxes) {
    box_col.push_back(sat_set(m, b));
    body_col.push_back(sat_set(m, b.child()));
  }
  uint32_t full = (uint32_t(1) << nb) - 1;
  auto bdt_profile = [&](int u) {
    uint32_t p = 0;
    for (int j = 0; j < nb; ++j)
      if (body_col[j][u] && box_col[j][u]) p |= 1u << j;
    return p;
  };
  auto box_profile = [&](int u) {
    uint32_t p = 0;
    for (int j = 0; j < nb; ++j)
      if (box_col[j][u]) p |= 1u << j;
    return p;
  };
  auto bodies_of = [&](int u) {
    uint32_t p = 0;
    for (int j = 0; j < nb; ++j)
      if (body_col[j][u]) p |= 1u << j;
    return p;
  };
  auto params_of = [&](int u) {
    uint32_t p = 0;
    for (int j = 0; j < np; ++j)
      if (m.atom_true(u, param(pnames[j]))) p |= 1u << j;
    return p;
  };

  std::set<uint32_t> base_profiles;
  for (int u = 0; u < m.size(); ++u) base_profiles.insert(bdt_profile(u));
  uint32_t pe_universe = uint32_t(1) << np;

  for (const auto& cond : l.effective_base()) {
    std::set<uint32_t> profiles;
    if (cond.n == 0) {
      profiles.insert(full);
    } else if (m.size() > 0) {
      profiles = base_profiles;
      int depth = cond.n >= kInf ? nb + 1 : cond.n;
      for (int step = 1; step < depth; ++step) {
        std::set<uint32_t> next;
        for (uint32_t p : profiles)
          for (uint32_t b : base_profiles) next.insert(p & b);
        std::size_t before = profiles.size();
        profiles.insert(next.begin(), next.end());
        if (profiles.size() == before) break;
      }
    }
    std::vector<std::vector<uint32_t>> e_sets;
    if (!cond.cluster.reflexive) {
      for (uint32_t e = 0; e < pe_universe; ++e) e_sets.push_back({e});
    } else {
      long long limit = std::min<long long>(cond.cluster.k, pe_universe);
      for (uint32_t s = 1; s < (uint32_t(1) << pe_universe); ++s) {
        if (__builtin_popcount(s) > limit) continue;
        std::vector<uint32_t> es;
        for (uint32_t e = 0; e < pe_universe; ++e)
          if (s >> e & 1) es.push_back(e);
        e_sets.push_back(std::move(es));
      }
    }
    for (uint32_t pi : profiles) {
      for (const auto& es : e_sets) {
        bool found = false;
        if (!cond.cluster.reflexive) {
          for (int u = 0; u < m.size(); ++u)
            if (params_of(u) == es[0] && box_profile(u) == pi) {
              found = true;
              break;
            }
        } else {
          std::vector<std::vector<int>> per_e(es.size());
          bool feasible = true;
          for (std::size_t i = 0; i < es.size(); ++i) {
            for (int u = 0; u < m.size(); ++u)
              if (params_of(u) == es[i]) per_e[i].push_back(u);
            if (per_e[i].empty()) feasible = false;
          }
          if (feasible) {
            std::size_t total = 1;
            for (const auto& v : per_e) {
              total *= v.size();
              if (total > caps.max_rule_valuations) throw CapExceeded("tpp tuple search");
            }
            std::vector<std::size_t> idx(es.size(), 0);
            for (;;) {
              uint32_t common = full;
              for (std::size_t i = 0; i < es.size(); ++i) common &= bodies_of(per_e[i][idx[i]]);
              uint32_t beta = pi & common;
              bool ok = true;
              for (std::size_t i = 0; i < es.size() && ok; ++i)
                if (box_profile(per_e[i][idx[i]]) != beta) ok = false;
              if (ok) {
                found = true;
                break;
              }
              std::size_t i = 0;
              while (i < es.size() && ++idx[i] == per_e[i].size()) {
                idx[i] = 0;
                ++i;
              }
              if (i == es.size()) break;
            }
          }
        }
        if (!found) return false;
      }
    }
  }
  return true;
}

bool check_certificate(const LogicSpec& l, const Rule& rule, const Model& m, const Caps& caps) {
  l.check_rule(rule);
  for (const auto& a : rule.atoms())
    if (!m.has_atom(a)) throw std::invalid_argument("certificate model lacks atom " + a.name);
  if (!is_l_frame(l, m)) return false;
  for (const auto& g : rule.premises)
    if (!globally_true(m, g)) return false;
  for (const auto& c : rule.conclusions)
    if (globally_true(m, c)) return false;
  return pseudoextensible(l, m, subformulas(rule.premises), caps);
}

// --------------------------------------------------------------------------
// Unification.

bool unifiable(const LogicSpec& l, const std::vector<Formula>& gamma, const Caps& caps) {
  Decision d = admissible(l, Rule(gamma, {}), EngineKind::A, caps);
  if (d.verdict == Verdict::Undecided) throw CapExceeded(d.note);
  return d.verdict == Verdict::NotAdmissible;
}

std::vector<Substitution> unify(const LogicSpec& l, const std::vector<Formula>& gamma,
                                const Caps& caps) {
  for (const auto& g : gamma) l.check_formula(g);
  SigmaContext ctx(gamma, caps);
  std::vector<TypeMask> allowed = ctx.enumerate_types(caps, [&](TypeMask t) {
    for (const auto& g : gamma)
      if (!ctx.eval(g, t)) return false;
    return true;
  });
  std::vector<Substitution> out;
  for (const auto& member : projective_approximation_over(l, ctx, allowed, caps))
    out.push_back(theta_unifier(l, member.psi, caps).first);
  return out;
}

UnificationType unification_type(const LogicSpec& l) {
  return l.is_linear() ? UnificationType::Unitary : UnificationType::Finitary;
}

bool directed_unification(const LogicSpec& l, const Caps& caps) {
  Formula x = Formula::atom(var("x"));
  Formula axiom = Formula::imp(Formula::dia(Formula::boxdot(x)),
                               Formula::box(Formula::diadot(x)));
  return tautology(l, axiom, caps);
}

}  // namespace clx
