#include "clx/typecore.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace clx {

// ---------------------------------------------------------------------------
// Bits.

int Bits::count() const {
  int c = 0;
  for (uint64_t w : w_) c += __builtin_popcountll(w);
  return c;
}

bool Bits::none() const {
  for (uint64_t w : w_)
    if (w) return false;
  return true;
}

bool Bits::subset_of(const Bits& o) const {
  for (std::size_t i = 0; i < w_.size(); ++i)
    if (w_[i] & ~o.w_[i]) return false;
  return true;
}

Bits Bits::operator|(const Bits& o) const {
  Bits r = *this;
  r.or_into(o);
  return r;
}

void Bits::or_into(const Bits& o) {
  for (std::size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
}

bool Bits::operator<(const Bits& o) const {
  int c = count(), oc = o.count();
  if (c != oc) return c < oc;
  return w_ < o.w_;
}

// ---------------------------------------------------------------------------
// SigmaContext.

SigmaContext::SigmaContext(const std::vector<Formula>& seeds, const Caps& caps) {
  sigma_ = subformulas(seeds);
  if (int(sigma_.size()) > caps.max_sigma || sigma_.size() > 64)
    throw CapExceeded("sigma size");
  for (int i = 0; i < int(sigma_.size()); ++i) index_[sigma_[i]] = i;
  for (int i = 0; i < int(sigma_.size()); ++i) {
    const Formula& f = sigma_[i];
    if (f.op() == Op::Atom) {
      if (f.atom_ref().is_parameter())
        params_.push_back(i);
      else
        vars_.push_back(i);
    } else if (f.op() == Op::Box) {
      boxes_.emplace_back(i, index_.at(f.child()));
    }
  }
}

int SigmaContext::index_of(const Formula& f) const {
  auto it = index_.find(f);
  return it == index_.end() ? -1 : it->second;
}

int SigmaContext::require_index(const Formula& f) const {
  int i = index_of(f);
  if (i < 0) throw std::invalid_argument("formula not in sigma: " + f.print());
  return i;
}

TypeMask SigmaContext::complete(std::size_t free_bits) const {
  TypeMask t = 0;
  int pos = 0;
  for (int i : params_) {
    if (free_bits >> pos & 1) t |= TypeMask(1) << i;
    ++pos;
  }
  for (int i : vars_) {
    if (free_bits >> pos & 1) t |= TypeMask(1) << i;
    ++pos;
  }
  for (const auto& [bi, body] : boxes_) {
    (void)body;
    if (free_bits >> pos & 1) t |= TypeMask(1) << bi;
    ++pos;
  }
  for (int i = 0; i < int(sigma_.size()); ++i) {
    const Formula& f = sigma_[i];
    if (f.op() == Op::Imp) {
      bool a = t >> index_.at(f.left()) & 1;
      bool b = t >> index_.at(f.right()) & 1;
      if (!a || b) t |= TypeMask(1) << i;
    }
  }
  return t;
}

bool SigmaContext::coherent(TypeMask t) const {
  for (int i = 0; i < int(sigma_.size()); ++i) {
    const Formula& f = sigma_[i];
    bool v = t >> i & 1;
    if (f.op() == Op::Falsum && v) return false;
    if (f.op() == Op::Imp) {
      bool a = t >> index_.at(f.left()) & 1;
      bool b = t >> index_.at(f.right()) & 1;
      if (v != (!a || b)) return false;
    }
  }
  return true;
}

std::vector<TypeMask> SigmaContext::all_types(const Caps& caps) const {
  return enumerate_types(caps, [](TypeMask) { return true; });
}

bool SigmaContext::eval(const Formula& f, TypeMask t) const {
  int i = index_of(f);
  if (i >= 0) return t >> i & 1;
  switch (f.op()) {
    case Op::Falsum:
      return false;
    case Op::Imp:
      return !eval(f.left(), t) || eval(f.right(), t);
    default:
      throw std::invalid_argument("not a Boolean combination over sigma: " + f.print());
  }
}

std::vector<std::string> SigmaContext::param_names() const {
  std::vector<std::string> out;
  for (int i : params_) out.push_back(sigma_[i].atom_ref().name);
  return out;
}

std::vector<std::string> SigmaContext::var_names() const {
  std::vector<std::string> out;
  for (int i : vars_) out.push_back(sigma_[i].atom_ref().name);
  return out;
}

// ---------------------------------------------------------------------------
// Shared helpers.

namespace {

std::vector<ClusterSpec> enumerate_specs(int atoms, const Caps& caps) {
  if (atoms > caps.max_cluster_atoms) throw CapExceeded("cluster atoms");
  std::vector<ClusterSpec> specs;
  uint32_t universe = uint32_t(1) << atoms;
  for (uint32_t a = 0; a < universe; ++a) specs.push_back(ClusterSpec{false, {a}});
  std::vector<uint32_t> subsets;
  for (uint32_t s = 1; s < (uint32_t(1) << universe); ++s) subsets.push_back(s);
  std::stable_sort(subsets.begin(), subsets.end(), [](uint32_t a, uint32_t b) {
    int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
    if (pa != pb) return pa < pb;
    return a < b;
  });
  for (uint32_t s : subsets) {
    ClusterSpec cs;
    cs.reflexive = true;
    for (uint32_t a = 0; a < universe; ++a)
      if (s >> a & 1) cs.assignments.push_back(a);
    specs.push_back(std::move(cs));
  }
  return specs;
}

Model assemble_model(const SigmaContext& ctx, const std::vector<bool>& refl,
                     const std::vector<std::pair<int, int>>& edges,
                     const std::vector<uint32_t>& assignment_of);

std::vector<int> make_atom_positions(const SigmaContext& ctx) {
  std::vector<int> atom_pos(ctx.sigma().size(), -1);
  int pos = 0;
  for (int i : ctx.param_indices()) atom_pos[i] = pos++;
  for (int i : ctx.var_indices()) atom_pos[i] = pos++;
  return atom_pos;
}

// Types of a cluster over a body profile (bit i = whether body i holds at
// every type the root sees past its own cluster).
std::vector<TypeMask> cluster_masks(const SigmaContext& ctx, const std::vector<int>& atom_pos,
                                    const ClusterSpec& spec, TypeMask profile) {
  size_t k = spec.assignments.size();
  std::vector<TypeMask> masks(k, 0);
  for (std::size_t i = 0; i < ctx.sigma().size(); ++i) {
    const Formula& f = ctx.sigma()[i];
    switch (f.op()) {
      case Op::Falsum:
        break;
      case Op::Atom:
        for (size_t p = 0; p < k; ++p)
          if (spec.assignments[p] >> atom_pos[i] & 1) masks[p] |= TypeMask(1) << i;
        break;
      case Op::Imp: {
        int a = ctx.require_index(f.left()), b = ctx.require_index(f.right());
        for (size_t p = 0; p < k; ++p) {
          bool av = masks[p] >> a & 1, bv = masks[p] >> b & 1;
          if (!av || bv) masks[p] |= TypeMask(1) << i;
        }
        break;
      }
      case Op::Box: {
        int body = ctx.require_index(f.child());
        bool from_cone = profile >> body & 1;
        bool cluster_all = true;
        if (spec.reflexive)
          for (size_t p = 0; p < k; ++p)
            if (!(masks[p] >> body & 1)) cluster_all = false;
        bool v = from_cone && (!spec.reflexive || cluster_all);
        if (v)
          for (size_t p = 0; p < k; ++p) masks[p] |= TypeMask(1) << i;
        break;
      }
    }
  }
  return masks;
}

}  // namespace

// ---------------------------------------------------------------------------
// Exact saturation: realizability pairs with full cones, plus the achievable
// cone-union family. Worklist relaxation runs over distinct cones.

int Saturation::type_id(TypeMask t) const {
  auto it = std::lower_bound(types.begin(), types.end(), t);
  if (it == types.end() || *it != t) return -1;
  return int(it - types.begin());
}

namespace {

struct ExactEngine {
  const LogicSpec& l;
  const SigmaContext& ctx;
  const Caps& caps;
  Saturation out;
  std::map<TypeMask, int> inv_idx;
  std::vector<int> atom_pos;
  std::vector<ClusterSpec> specs;

  std::map<std::tuple<std::vector<int>, bool, Bits>, int> pair_index;
  std::vector<Bits> cones;  // distinct pair cones, in emission order
  std::map<Bits, int> cone_index;
  std::vector<int> cone_witness;  // a pair id per cone

  std::vector<UnionEntry> unions;
  std::map<Bits, int> union_index;
  std::deque<int> fresh_cones, dirty_unions;

  ExactEngine(const LogicSpec& logic, const SigmaContext& c, const std::vector<TypeMask>& allowed,
              const Caps& cp)
      : l(logic), ctx(c), caps(cp) {
    out.types = allowed;
    std::sort(out.types.begin(), out.types.end());
    out.types.erase(std::unique(out.types.begin(), out.types.end()), out.types.end());
    for (int i = 0; i < int(out.types.size()); ++i) inv_idx[out.types[i]] = i;
    atom_pos = make_atom_positions(ctx);
    specs = enumerate_specs(ctx.atom_count(), caps);
  }

  std::vector<char> all_true_of(const Bits& u) const {
    std::vector<char> all(ctx.sigma().size(), 1);
    u.for_each([&](int id) {
      TypeMask t = out.types[id];
      for (std::size_t i = 0; i < ctx.sigma().size(); ++i)
        if (!(t >> i & 1)) all[i] = 0;
    });
    return all;
  }

  void attach(int uid) {  // uid < 0: the n = 0 branch
    Bits u = uid < 0 ? Bits(out.types.size()) : unions[uid].bits;
    int n = uid < 0 ? 0 : unions[uid].n_min;
    std::vector<char> all = all_true_of(u);
    TypeMask profile = 0;
    for (std::size_t i = 0; i < all.size(); ++i)
      if (all[i]) profile |= TypeMask(1) << i;
    for (const auto& spec : specs) {
      ClusterType c = spec.reflexive ? refl_cluster(int(spec.assignments.size()))
                                     : irr_cluster();
      if (!l.tp_member(ExtensionCondition{c, n})) continue;
      std::vector<TypeMask> masks = cluster_masks(ctx, atom_pos, spec, profile);
      std::vector<int> pts;
      bool inside = true;
      for (TypeMask m : masks) {
        auto it = inv_idx.find(m);
        if (it == inv_idx.end()) {
          inside = false;
          break;
        }
        pts.push_back(it->second);
      }
      if (!inside) continue;
      std::vector<int> roots = pts;
      std::sort(roots.begin(), roots.end());
      roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
      Bits cone = u;
      for (int id : roots) cone.set(std::size_t(id));
      auto key = std::make_tuple(roots, spec.reflexive, cone);
      if (pair_index.count(key)) continue;
      if (out.pairs.size() >= caps.max_pairs) throw CapExceeded("saturation pairs");
      TypePair p;
      p.root_types = roots;
      p.reflexive = spec.reflexive;
      p.cone = cone;
      p.spec = spec;
      if (uid >= 0) p.generators = unions[uid].generators;
      p.gen_union = u;
      int pid = int(out.pairs.size());
      pair_index[key] = pid;
      out.pairs.push_back(std::move(p));
      if (!cone_index.count(cone)) {
        cone_index[cone] = int(cones.size());
        cones.push_back(cone);
        cone_witness.push_back(pid);
        fresh_cones.push_back(int(cones.size()) - 1);
      }
    }
  }

  void relax(const Bits& bits, int n, std::vector<int> gens) {
    auto it = union_index.find(bits);
    if (it == union_index.end()) {
      if (unions.size() >= caps.max_unions) throw CapExceeded("cone unions");
      union_index[bits] = int(unions.size());
      unions.push_back(UnionEntry{bits, n, std::move(gens)});
      dirty_unions.push_back(int(unions.size()) - 1);
    } else if (unions[it->second].n_min > n) {
      unions[it->second].n_min = n;
      unions[it->second].generators = std::move(gens);
      dirty_unions.push_back(it->second);
    }
  }

  void run() {
    attach(-1);
    while (!fresh_cones.empty() || !dirty_unions.empty()) {
      if (!fresh_cones.empty()) {
        int cid = fresh_cones.front();
        fresh_cones.pop_front();
        relax(cones[cid], 1, {cone_witness[cid]});
        std::size_t existing = unions.size();
        for (std::size_t u = 0; u < existing; ++u) {
          if (cones[cid].subset_of(unions[u].bits)) continue;
          std::vector<int> g = unions[u].generators;
          g.push_back(cone_witness[cid]);
          relax(unions[u].bits | cones[cid], unions[u].n_min + 1, std::move(g));
        }
      } else {
        int uid = dirty_unions.front();
        dirty_unions.pop_front();
        attach(uid);
        std::size_t ncones = cones.size();
        for (std::size_t cid = 0; cid < ncones; ++cid) {
          if (cones[cid].subset_of(unions[uid].bits)) continue;
          std::vector<int> g = unions[uid].generators;
          g.push_back(cone_witness[cid]);
          relax(unions[uid].bits | cones[cid], unions[uid].n_min + 1, std::move(g));
        }
      }
    }
    out.unions = unions;
    std::sort(out.unions.begin(), out.unions.end(),
              [](const UnionEntry& a, const UnionEntry& b) { return a.bits < b.bits; });
  }
};

}  // namespace

Saturation saturate(const LogicSpec& l, const SigmaContext& ctx,
                    const std::vector<TypeMask>& allowed, const Caps& caps) {
  ExactEngine e(l, ctx, allowed, caps);
  e.run();
  return std::move(e.out);
}

std::vector<UnionEntry> realizable_type_sets(const LogicSpec& l, const SigmaContext& ctx,
                                             const std::vector<TypeMask>& allowed,
                                             const Caps& caps) {
  return saturate(l, ctx, allowed, caps).unions;
}

// ---------------------------------------------------------------------------
// Compact type-set family over word-sized inventories.

TypeSetFamily::TypeSetFamily(const LogicSpec& l, const SigmaContext& ctx,
                             const std::vector<TypeMask>& allowed, const Caps& caps)
    : l_(l), ctx_(ctx), inv_(allowed) {
  std::sort(inv_.begin(), inv_.end());
  inv_.erase(std::unique(inv_.begin(), inv_.end()), inv_.end());
  if (inv_.size() > 64) throw CapExceeded("family inventory");
  std::map<TypeMask, int> inv_idx;
  for (int i = 0; i < int(inv_.size()); ++i) inv_idx[inv_[i]] = i;
  std::vector<int> atom_pos = make_atom_positions(ctx_);
  std::vector<ClusterSpec> specs = enumerate_specs(ctx_.atom_count(), caps);

  std::map<uint64_t, int> cone_index;
  struct UnionData {
    int n_min;
    std::vector<int> gens;
  };
  std::map<uint64_t, UnionData> unions;
  std::deque<int> fresh_cones;
  std::deque<uint64_t> dirty_unions;
  std::vector<uint64_t> union_order;  // insertion order for deterministic scans

  auto profile_of = [&](uint64_t set) {
    TypeMask all = ~TypeMask(0);
    for (int i = 0; i < int(inv_.size()); ++i)
      if (set >> i & 1) all &= inv_[i];
    return all;
  };

  auto attach = [&](uint64_t u, int n, int src_union_marker) {
    (void)src_union_marker;
    TypeMask profile = profile_of(u);
    for (const auto& spec : specs) {
      ClusterType c = spec.reflexive ? refl_cluster(int(spec.assignments.size()))
                                     : irr_cluster();
      if (!l_.tp_member(ExtensionCondition{c, n})) continue;
      std::vector<TypeMask> masks = cluster_masks(ctx_, atom_pos, spec, profile);
      uint64_t roots = 0;
      bool inside = true;
      for (TypeMask m : masks) {
        auto it = inv_idx.find(m);
        if (it == inv_idx.end()) {
          inside = false;
          break;
        }
        roots |= uint64_t(1) << it->second;
      }
      if (!inside) continue;
      uint64_t cone = u | roots;
      if (cone_index.count(cone)) continue;
      if (cones_.size() >= caps.max_pairs) throw CapExceeded("family cones");
      cone_index[cone] = int(cones_.size());
      cones_.push_back(cone);
      ConeInfo info;
      info.spec = spec;
      auto it = unions.find(u);
      if (u != 0 && it != unions.end()) info.gen_cones = it->second.gens;
      cone_info_.push_back(std::move(info));
      fresh_cones.push_back(int(cones_.size()) - 1);
    }
  };

  auto relax = [&](uint64_t set, int n, std::vector<int> gens) {
    auto it = unions.find(set);
    if (it == unions.end()) {
      if (unions.size() >= caps.max_unions) throw CapExceeded("family unions");
      unions.emplace(set, UnionData{n, std::move(gens)});
      union_order.push_back(set);
      dirty_unions.push_back(set);
    } else if (it->second.n_min > n) {
      it->second.n_min = n;
      it->second.gens = std::move(gens);
      dirty_unions.push_back(set);
    }
  };

  attach(0, 0, -1);
  while (!fresh_cones.empty() || !dirty_unions.empty()) {
    if (!fresh_cones.empty()) {
      int cid = fresh_cones.front();
      fresh_cones.pop_front();
      relax(cones_[cid], 1, {cid});
      std::size_t existing = union_order.size();
      for (std::size_t i = 0; i < existing; ++i) {
        uint64_t u = union_order[i];
        if ((cones_[cid] & ~u) == 0) continue;
        const UnionData& ud = unions.at(u);
        std::vector<int> g = ud.gens;
        g.push_back(cid);
        relax(u | cones_[cid], ud.n_min + 1, std::move(g));
      }
    } else {
      uint64_t u = dirty_unions.front();
      dirty_unions.pop_front();
      attach(u, unions.at(u).n_min, 0);
      std::size_t ncones = cones_.size();
      for (std::size_t cid = 0; cid < ncones; ++cid) {
        if ((cones_[cid] & ~u) == 0) continue;
        const UnionData& ud = unions.at(u);
        std::vector<int> g = ud.gens;
        g.push_back(int(cid));
        relax(u | cones_[cid], ud.n_min + 1, std::move(g));
      }
    }
  }
  for (const auto& [set, data] : unions)
    family_.push_back(Entry{set, data.n_min, data.gens});
  std::sort(family_.begin(), family_.end(), [](const Entry& a, const Entry& b) {
    int pa = __builtin_popcountll(a.set), pb = __builtin_popcountll(b.set);
    if (pa != pb) return pa < pb;
    return a.set < b.set;
  });
}

std::vector<TypeMask> TypeSetFamily::member_types(uint64_t set) const {
  std::vector<TypeMask> out;
  for (int i = 0; i < int(inv_.size()); ++i)
    if (set >> i & 1) out.push_back(inv_[i]);
  return out;
}

void TypeSetFamily::materialize_cone(int cone_id, const Caps& caps, std::vector<bool>& refl,
                                     std::vector<std::pair<int, int>>& edges,
                                     std::vector<uint32_t>& assignment_of,
                                     std::vector<int>& cluster_out) const {
  const ConeInfo& info = cone_info_[cone_id];
  int k = int(info.spec.assignments.size());
  int base = int(refl.size());
  if (refl.size() + info.spec.assignments.size() > caps.max_points)
    throw CapExceeded("materialized model size");
  for (int i = 0; i < k; ++i) {
    refl.push_back(info.spec.reflexive);
    assignment_of.push_back(info.spec.assignments[i]);
  }
  if (info.spec.reflexive)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) edges.emplace_back(base + i, base + j);
  for (int g : info.gen_cones) {
    std::vector<int> sub;
    materialize_cone(g, caps, refl, edges, assignment_of, sub);
    for (int i = 0; i < k; ++i)
      for (int s : sub) edges.emplace_back(base + i, s);
  }
  cluster_out.clear();
  for (int i = 0; i < k; ++i) cluster_out.push_back(base + i);
}

Model TypeSetFamily::materialize_union(const Entry& e, const Caps& caps) const {
  std::vector<bool> refl;
  std::vector<std::pair<int, int>> edges;
  std::vector<uint32_t> assignment_of;
  std::vector<int> scratch;
  for (int cid : e.cone_ids) materialize_cone(cid, caps, refl, edges, assignment_of, scratch);
  return assemble_model(ctx_, refl, edges, assignment_of);
}

// ---------------------------------------------------------------------------
// Materialization of exact pairs.

namespace {

void materialize_rec(const Saturation& sat, int pair_id, const Caps& caps,
                     std::vector<bool>& refl, std::vector<std::pair<int, int>>& edges,
                     std::vector<uint32_t>& assignment_of, std::vector<int>& cluster_out) {
  const TypePair& p = sat.pairs[pair_id];
  int k = int(p.spec.assignments.size());
  int base = int(refl.size());
  if (refl.size() + p.spec.assignments.size() > caps.max_points)
    throw CapExceeded("materialized model size");
  for (int i = 0; i < k; ++i) {
    refl.push_back(p.spec.reflexive);
    assignment_of.push_back(p.spec.assignments[i]);
  }
  if (p.spec.reflexive)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) edges.emplace_back(base + i, base + j);
  for (int g : p.generators) {
    std::vector<int> sub_cluster;
    materialize_rec(sat, g, caps, refl, edges, assignment_of, sub_cluster);
    for (int i = 0; i < k; ++i)
      for (int s : sub_cluster) edges.emplace_back(base + i, s);
  }
  cluster_out.clear();
  for (int i = 0; i < k; ++i) cluster_out.push_back(base + i);
}

Model assemble_model(const SigmaContext& ctx, const std::vector<bool>& refl,
                     const std::vector<std::pair<int, int>>& edges,
                     const std::vector<uint32_t>& assignment_of) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < refl.size(); ++i) ids.push_back("w" + std::to_string(i));
  Model m(ids, refl, edges, ctx.param_names(), ctx.var_names());
  int pos = 0;
  for (int pi : ctx.param_indices()) {
    Atom a = param(ctx.sigma()[pi].atom_ref().name);
    for (std::size_t u = 0; u < refl.size(); ++u)
      m.set_atom(int(u), a, assignment_of[u] >> pos & 1);
    ++pos;
  }
  for (int vi : ctx.var_indices()) {
    Atom a = var(ctx.sigma()[vi].atom_ref().name);
    for (std::size_t u = 0; u < refl.size(); ++u)
      m.set_atom(int(u), a, assignment_of[u] >> pos & 1);
    ++pos;
  }
  return m;
}

}  // namespace

Model materialize(const SigmaContext& ctx, const Saturation& sat, int pair_id,
                  const Caps& caps) {
  std::vector<bool> refl;
  std::vector<std::pair<int, int>> edges;
  std::vector<uint32_t> assignment_of;
  std::vector<int> root_cluster;
  materialize_rec(sat, pair_id, caps, refl, edges, assignment_of, root_cluster);
  return assemble_model(ctx, refl, edges, assignment_of);
}

// ---------------------------------------------------------------------------
// Profile-level realizability.

RootRealizability::RootRealizability(const LogicSpec& l, const SigmaContext& ctx,
                                     const std::vector<TypeMask>& allowed, const Caps& caps)
    : l_(l), ctx_(ctx), caps_(caps), inv_(allowed) {
  std::sort(inv_.begin(), inv_.end());
  inv_.erase(std::unique(inv_.begin(), inv_.end()), inv_.end());
  for (int i = 0; i < int(inv_.size()); ++i) inv_idx_[inv_[i]] = i;
  for (const auto& [bi, body] : ctx_.boxes()) {
    (void)bi;
    body_mask_ |= TypeMask(1) << body;
  }
  atom_pos_ = make_atom_positions(ctx_);
  specs_ = enumerate_specs(ctx_.atom_count(), caps_);
  run();
}

std::vector<int> RootRealizability::cluster_types(const ClusterSpec& spec, TypeMask profile,
                                                  std::vector<TypeMask>* masks_out) const {
  std::vector<TypeMask> masks = cluster_masks(ctx_, atom_pos_, spec, profile);
  std::vector<int> ids;
  for (TypeMask m : masks) {
    auto it = inv_idx_.find(m);
    if (it == inv_idx_.end()) return {};
    ids.push_back(it->second);
  }
  if (masks_out) *masks_out = masks;
  return ids;
}

void RootRealizability::run() {
  std::map<std::tuple<std::vector<int>, bool, TypeMask>, int> pair_index;
  std::map<TypeMask, int> profile_index;
  std::deque<int> fresh_pairs, dirty_profiles;

  auto attach = [&](int pid) {
    TypeMask profile = pid < 0 ? full_profile() : profiles_[pid].profile;
    int n = pid < 0 ? 0 : profiles_[pid].n_min;
    for (const auto& spec : specs_) {
      ClusterType c = spec.reflexive ? refl_cluster(int(spec.assignments.size()))
                                     : irr_cluster();
      if (!l_.tp_member(ExtensionCondition{c, n})) continue;
      std::vector<TypeMask> masks;
      std::vector<int> pts = cluster_types(spec, profile, &masks);
      if (pts.empty()) continue;
      TypeMask pprof = profile;
      for (TypeMask m : masks) pprof &= m;
      pprof = normalize(pprof);
      auto key = std::make_tuple(pts, spec.reflexive, pprof);
      if (pair_index.count(key)) continue;
      if (pairs_.size() >= caps_.max_pairs) throw CapExceeded("realizability pairs");
      ProfilePair p;
      p.point_types = pts;
      p.reflexive = spec.reflexive;
      p.profile = pprof;
      p.spec = spec;
      if (pid >= 0) p.generators = profiles_[pid].generators;
      pair_index[key] = int(pairs_.size());
      pairs_.push_back(std::move(p));
      fresh_pairs.push_back(int(pairs_.size()) - 1);
    }
  };
  auto relax = [&](TypeMask profile, int n, std::vector<int> gens) {
    auto it = profile_index.find(profile);
    if (it == profile_index.end()) {
      profile_index[profile] = int(profiles_.size());
      profiles_.push_back(ProfileEntry{profile, n, std::move(gens)});
      dirty_profiles.push_back(int(profiles_.size()) - 1);
    } else if (profiles_[it->second].n_min > n) {
      profiles_[it->second].n_min = n;
      profiles_[it->second].generators = std::move(gens);
      dirty_profiles.push_back(it->second);
    }
  };

  attach(-1);
  while (!fresh_pairs.empty() || !dirty_profiles.empty()) {
    if (!fresh_pairs.empty()) {
      int pid = fresh_pairs.front();
      fresh_pairs.pop_front();
      relax(pairs_[pid].profile, 1, {pid});
      std::size_t existing = profiles_.size();
      for (std::size_t u = 0; u < existing; ++u) {
        TypeMask merged = profiles_[u].profile & pairs_[pid].profile;
        if (merged == profiles_[u].profile) continue;
        std::vector<int> g = profiles_[u].generators;
        g.push_back(pid);
        relax(merged, profiles_[u].n_min + 1, std::move(g));
      }
    } else {
      int uid = dirty_profiles.front();
      dirty_profiles.pop_front();
      attach(uid);
      std::size_t npairs = pairs_.size();
      for (std::size_t pid = 0; pid < npairs; ++pid) {
        TypeMask merged = profiles_[uid].profile & pairs_[pid].profile;
        if (merged == profiles_[uid].profile) continue;
        std::vector<int> g = profiles_[uid].generators;
        g.push_back(int(pid));
        relax(merged, profiles_[uid].n_min + 1, std::move(g));
      }
    }
  }
}

std::optional<std::pair<int, int>> RootRealizability::find_refuting_root(
    const Formula& target) const {
  for (int pid = 0; pid < int(pairs_.size()); ++pid) {
    const ProfilePair& p = pairs_[pid];
    for (std::size_t i = 0; i < p.point_types.size(); ++i)
      if (!ctx_.eval(target, inv_[p.point_types[i]])) return std::make_pair(pid, int(i));
  }
  return std::nullopt;
}

Model RootRealizability::materialize_pair(int pair_id) const {
  std::vector<bool> refl;
  std::vector<std::pair<int, int>> edges;
  std::vector<uint32_t> assignment_of;
  std::function<std::vector<int>(int)> rec = [&](int pd) {
    const ProfilePair& p = pairs_[pd];
    int k = int(p.spec.assignments.size());
    int base = int(refl.size());
    if (refl.size() + p.spec.assignments.size() > caps_.max_points)
      throw CapExceeded("materialized model size");
    for (int i = 0; i < k; ++i) {
      refl.push_back(p.spec.reflexive);
      assignment_of.push_back(p.spec.assignments[i]);
    }
    if (p.spec.reflexive)
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) edges.emplace_back(base + i, base + j);
    for (int g : p.generators) {
      std::vector<int> sub = rec(g);
      for (int i = 0; i < k; ++i)
        for (int s : sub) edges.emplace_back(base + i, s);
    }
    std::vector<int> cluster;
    for (int i = 0; i < k; ++i) cluster.push_back(base + i);
    return cluster;
  };
  rec(pair_id);
  return assemble_model(ctx_, refl, edges, assignment_of);
}

// ---------------------------------------------------------------------------
// Consequence.

bool consequence_over(const LogicSpec& l, const SigmaContext& ctx,
                      const std::vector<Formula>& premises, const Formula& target,
                      const Caps& caps) {
  std::vector<TypeMask> allowed = ctx.enumerate_types(caps, [&](TypeMask t) {
    for (const auto& g : premises)
      if (!ctx.eval(g, t)) return false;
    return true;
  });
  RootRealizability eng(l, ctx, allowed, caps);
  return !eng.find_refuting_root(target).has_value();
}

bool consequence(const LogicSpec& l, const std::vector<Formula>& gamma, Formula phi,
                 const Caps& caps) {
  for (const auto& g : gamma) l.check_formula(g);
  l.check_formula(phi);
  std::vector<Formula> seeds = gamma;
  seeds.push_back(phi);
  SigmaContext ctx(seeds, caps);
  return consequence_over(l, ctx, gamma, phi, caps);
}

bool tautology(const LogicSpec& l, Formula phi, const Caps& caps) {
  return consequence(l, {}, phi, caps);
}

// ---------------------------------------------------------------------------
// Countermodel extraction with selective-filtration minimization.

int countermodel_box_count(const std::vector<Formula>& gamma, Formula phi) {
  std::vector<Formula> seeds = gamma;
  seeds.push_back(phi);
  std::set<Formula> b;
  b.insert(phi);
  for (const auto& f : subformulas(seeds))
    if (f.op() == Op::Box) b.insert(f.child());
  return int(b.size());
}

namespace {

// Tree-of-clusters extraction from a finite refuting model. Follows the
// finite-model-property construction: selection of refuting clusters guided
// by the sets of box bodies settled above each point, with successor pruning;
// yields the size/depth/cluster/branching bounds.
struct Minimizer {
  const Model& w;
  std::vector<Formula> bset;  // φ first, then box bodies, deterministic order
  std::vector<std::vector<bool>> bcol;  // truth columns of B members
  std::vector<uint64_t> bdt;            // per point, bitmask over bset

  Minimizer(const Model& model, const std::vector<Formula>& gamma, Formula phi) : w(model) {
    std::vector<Formula> seeds = gamma;
    seeds.push_back(phi);
    std::set<Formula> bodies;
    for (const auto& f : subformulas(seeds))
      if (f.op() == Op::Box) bodies.insert(f.child());
    bodies.erase(phi);
    bset.push_back(phi);
    for (const auto& f : bodies) bset.push_back(f);
    if (bset.size() > 63) throw CapExceeded("countermodel box set");
    for (const auto& f : bset) bcol.push_back(sat_set(w, f));
    bdt.assign(w.size(), 0);
    for (int u = 0; u < w.size(); ++u)
      for (std::size_t b = 0; b < bset.size(); ++b) {
        bool holds = bcol[b][u];
        for (int v = 0; v < w.size() && holds; ++v)
          if (w.related(u, v) && !bcol[b][v]) holds = false;
        if (holds) bdt[u] |= uint64_t(1) << b;
      }
  }

  uint64_t full() const { return (uint64_t(1) << bset.size()) - 1; }

  std::vector<int> strictly_above(int u) const {
    std::vector<int> out;
    for (int v = 0; v < w.size(); ++v)
      if (w.related(u, v) && !w.same_cluster(u, v)) out.push_back(v);
    return out;
  }

  uint64_t crit(int u) const {
    uint64_t inter = full();
    for (int v : strictly_above(u)) inter &= bdt[v];
    return inter & ~bdt[u];
  }

  struct Node {
    std::vector<int> points;  // images in w
    bool reflexive;
    int phi_pos = -1;  // index into points refuting φ (root node only)
    std::vector<Node> children;
  };

  Node build(int rep) {
    Node node;
    std::vector<int> cluster = w.cluster_of(rep);
    node.reflexive = w.reflexive(rep);
    uint64_t cr = crit(rep);
    if (cr == 0) {
      node.points = {cluster[0]};
      node.reflexive = w.reflexive(cluster[0]);
    } else {
      std::vector<int> chosen;
      for (std::size_t b = 0; b < bset.size(); ++b) {
        if (!(cr >> b & 1)) continue;
        bool covered = false;
        for (int u : chosen)
          if (!bcol[b][u]) covered = true;
        if (covered) continue;
        for (int u : cluster)
          if (!bcol[b][u]) {
            chosen.push_back(u);
            break;
          }
      }
      for (int i = int(chosen.size()) - 1; i >= 0; --i) {
        std::vector<int> rest;
        for (int j = 0; j < int(chosen.size()); ++j)
          if (j != i) rest.push_back(chosen[j]);
        bool covers = true;
        for (std::size_t b = 0; b < bset.size() && covers; ++b) {
          if (!(cr >> b & 1)) continue;
          bool cov = false;
          for (int u : rest)
            if (!bcol[b][u]) cov = true;
          if (!cov) covers = false;
        }
        if (covers) chosen = rest;
      }
      node.points = chosen;
      if (cr & 1) {
        for (std::size_t i = 0; i < node.points.size(); ++i)
          if (!bcol[0][node.points[i]]) {
            node.phi_pos = int(i);
            break;
          }
      }
    }

    std::vector<int> above = strictly_above(rep);
    if (above.empty()) return node;
    std::vector<uint64_t> sets;
    for (int v : above) sets.push_back(bdt[v]);
    std::sort(sets.begin(), sets.end(), [](uint64_t a, uint64_t b) {
      int pa = __builtin_popcountll(a), pb = __builtin_popcountll(b);
      if (pa != pb) return pa < pb;
      return a < b;
    });
    sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
    std::vector<uint64_t> minimal;
    for (uint64_t s : sets) {
      bool min = true;
      for (uint64_t t : sets)
        if (t != s && (t & ~s) == 0) min = false;
      if (min) minimal.push_back(s);
    }
    bool changed = true;
    while (changed && minimal.size() >= 2) {
      changed = false;
      for (std::size_t i = 0; i < minimal.size(); ++i) {
        uint64_t inter = full();
        for (std::size_t j = 0; j < minimal.size(); ++j)
          if (j != i) inter &= minimal[j];
        if ((inter & ~minimal[i]) == 0) {
          minimal.erase(minimal.begin() + i);
          changed = true;
          break;
        }
      }
    }
    for (uint64_t d : minimal) {
      int pick = -1;
      for (int v : above) {
        if (bdt[v] != d) continue;
        bool maximal = true;
        for (int z : strictly_above(v))
          if (bdt[z] == d) maximal = false;
        if (maximal && (pick < 0 || v < pick)) pick = v;
      }
      assert(pick >= 0);
      node.children.push_back(build(pick));
    }
    return node;
  }
};

void assemble(const Minimizer::Node& node, std::vector<int>& image, std::vector<bool>& refl,
              std::vector<std::pair<int, int>>& edges, bool root) {
  int base = int(image.size());
  int k = int(node.points.size());
  std::vector<int> pts = node.points;
  if (root && node.phi_pos > 0) std::swap(pts[0], pts[node.phi_pos]);
  for (int u : pts) {
    image.push_back(u);
    refl.push_back(node.reflexive);
  }
  if (node.reflexive)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) edges.emplace_back(base + i, base + j);
  for (const auto& c : node.children) {
    int child_base = int(image.size());
    assemble(c, image, refl, edges, false);
    for (int i = 0; i < k; ++i) edges.emplace_back(base + i, child_base);
  }
}

}  // namespace

std::optional<Model> countermodel(const LogicSpec& l, const std::vector<Formula>& gamma,
                                  Formula phi, const Caps& caps) {
  for (const auto& g : gamma) l.check_formula(g);
  l.check_formula(phi);
  std::vector<Formula> seeds = gamma;
  seeds.push_back(phi);
  SigmaContext ctx(seeds, caps);
  std::vector<TypeMask> allowed = ctx.enumerate_types(caps, [&](TypeMask t) {
    for (const auto& g : gamma)
      if (!ctx.eval(g, t)) return false;
    return true;
  });
  RootRealizability eng(l, ctx, allowed, caps);
  auto ref = eng.find_refuting_root(phi);
  if (!ref) return std::nullopt;

  Model w = eng.materialize_pair(ref->first);
  int u0 = ref->second;  // root cluster points come first in the materialization

  Minimizer mz(w, gamma, phi);
  int root = u0;
  bool moved = true;
  while (moved) {
    moved = false;
    for (int v : mz.strictly_above(root))
      if (!(mz.bdt[v] & 1)) {
        root = v;
        moved = true;
        break;
      }
  }
  Minimizer::Node tree = mz.build(root);

  std::vector<int> image;
  std::vector<bool> refl;
  std::vector<std::pair<int, int>> edges;
  assemble(tree, image, refl, edges, true);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < image.size(); ++i) ids.push_back("r" + std::to_string(i));
  Model out(ids, refl, edges, w.params(), w.vars());
  for (const auto& p : w.params())
    for (std::size_t i = 0; i < image.size(); ++i)
      out.set_atom(int(i), param(p), w.atom_true(image[i], param(p)));
  for (const auto& v : w.vars())
    for (std::size_t i = 0; i < image.size(); ++i)
      out.set_atom(int(i), var(v), w.atom_true(image[i], var(v)));

  if (!is_l_frame(l, out)) throw std::logic_error("countermodel left the frame class");
  for (const auto& g : gamma)
    if (!globally_true(out, g)) throw std::logic_error("countermodel lost a premise");
  if (sat_set(out, phi)[0]) throw std::logic_error("countermodel satisfies the goal");
  return out;
}

}  // namespace clx
