// Test-side oracles, kept independent of the library's evaluation path:
// a bitmask model checker over small frames and exhaustive enumeration of
// transitive frames. Used to cross-check the engines.
#ifndef CLX_TESTUTIL_HPP
#define CLX_TESTUTIL_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "clx/formula.hpp"
#include "clx/kripke.hpp"

namespace clxtest {

// A frame on n <= 6 points: succ[u] is the bitmask of points u sees.
struct BitFrame {
  int n = 0;
  std::array<uint8_t, 6> succ{};

  bool related(int u, int v) const { return succ[u] >> v & 1; }
  bool reflexive(int u) const { return related(u, u); }
  bool transitive() const {
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v)
        if (related(u, v) && (succ[v] & ~succ[u])) return false;
    return true;
  }
  bool rooted_at(int r) const {
    uint8_t cone = uint8_t(succ[r] | (1u << r));
    return cone == (1u << n) - 1;
  }
  bool has_root() const {
    for (int r = 0; r < n; ++r)
      if (rooted_at(r)) return true;
    return false;
  }
  uint64_t key() const {
    uint64_t k = n;
    for (int u = 0; u < n; ++u) k = (k << 6) | succ[u];
    return k;
  }
  BitFrame permuted(const std::vector<int>& perm) const {
    BitFrame out;
    out.n = n;
    for (int u = 0; u < n; ++u) {
      uint8_t s = 0;
      for (int v = 0; v < n; ++v)
        if (related(u, v)) s |= uint8_t(1u << perm[v]);
      out.succ[perm[u]] = s;
    }
    return out;
  }
  uint64_t canon_key() const {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    uint64_t best = ~0ull;
    do {
      best = std::min(best, permuted(perm).key());
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
};

// All transitive frames on exactly n labeled points.
inline std::vector<BitFrame> all_transitive_frames(int n) {
  std::vector<BitFrame> out;
  BitFrame f;
  f.n = n;
  long long total = 1ll << (n * n);
  for (long long bits = 0; bits < total; ++bits) {
    long long b = bits;
    for (int u = 0; u < n; ++u) {
      f.succ[u] = uint8_t(b & ((1 << n) - 1));
      b >>= n;
    }
    if (f.transitive()) out.push_back(f);
  }
  return out;
}

// One representative per isomorphism class.
inline std::vector<BitFrame> transitive_frames_up_to_iso(int n) {
  std::vector<BitFrame> out;
  std::set<uint64_t> seen;
  for (const auto& f : all_transitive_frames(n))
    if (seen.insert(f.canon_key()).second) out.push_back(f);
  return out;
}

// Bitmask evaluation: valuation maps atoms to point masks; returns the mask
// of points satisfying f. Independent of clx::sat.
inline uint8_t bit_eval(const BitFrame& fr, const clx::Formula& f,
                        const std::map<clx::Atom, uint8_t>& val,
                        std::unordered_map<const clx::Formula::Node*, uint8_t>* memo) {
  auto it = memo->find(f.node());
  if (it != memo->end()) return it->second;
  uint8_t full = uint8_t((1u << fr.n) - 1);
  uint8_t r = 0;
  switch (f.op()) {
    case clx::Op::Falsum:
      r = 0;
      break;
    case clx::Op::Atom:
      r = val.at(f.atom_ref());
      break;
    case clx::Op::Imp:
      r = uint8_t((~bit_eval(fr, f.left(), val, memo) | bit_eval(fr, f.right(), val, memo)) & full);
      break;
    case clx::Op::Box: {
      uint8_t body = bit_eval(fr, f.child(), val, memo);
      for (int u = 0; u < fr.n; ++u)
        if ((fr.succ[u] & ~body) == 0) r |= uint8_t(1u << u);
      break;
    }
  }
  memo->emplace(f.node(), r);
  return r;
}

struct BitModel {
  BitFrame frame;
  std::map<clx::Atom, uint8_t> val;

  uint8_t eval(const clx::Formula& f) const {
    std::unordered_map<const clx::Formula::Node*, uint8_t> memo;
    return bit_eval(frame, f, val, &memo);
  }
  bool global(const clx::Formula& f) const {
    return eval(f) == uint8_t((1u << frame.n) - 1);
  }
};

// Enumerate valuations of the given atoms over the frame (2^(|atoms|*n)).
template <typename Fn>
void for_each_valuation(const BitFrame& fr, const std::vector<clx::Atom>& atoms, Fn fn) {
  int bits = int(atoms.size()) * fr.n;
  for (uint64_t x = 0; x < (1ull << bits); ++x) {
    BitModel m;
    m.frame = fr;
    uint64_t b = x;
    for (const auto& a : atoms) {
      m.val[a] = uint8_t(b & ((1u << fr.n) - 1));
      b >>= fr.n;
    }
    fn(m);
  }
}

// Validity of f under all valuations of its atoms (plus `extra` atoms pinned
// by the caller inside fn is not supported; this is plain frame validity).
inline bool frame_valid(const BitFrame& fr, const clx::Formula& f) {
  std::set<clx::Atom> atom_set = f.atoms();
  std::vector<clx::Atom> atoms(atom_set.begin(), atom_set.end());
  bool valid = true;
  int bits = int(atoms.size()) * fr.n;
  for (uint64_t x = 0; x < (1ull << bits) && valid; ++x) {
    BitModel m;
    m.frame = fr;
    uint64_t b = x;
    for (const auto& a : atoms) {
      m.val[a] = uint8_t(b & ((1u << fr.n) - 1));
      b >>= fr.n;
    }
    if (!m.global(f)) valid = false;
  }
  return valid;
}

// Convert a BitModel to a clx::Model (declared universe from the atom map
// plus any extra names).
inline clx::Model to_model(const BitModel& bm, std::vector<std::string> extra_params = {},
                           std::vector<std::string> extra_vars = {}) {
  std::vector<std::string> ids;
  std::vector<bool> refl;
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < bm.frame.n; ++u) {
    ids.push_back("w" + std::to_string(u));
    refl.push_back(bm.frame.reflexive(u));
    for (int v = 0; v < bm.frame.n; ++v)
      if (u != v && bm.frame.related(u, v)) edges.emplace_back(u, v);
  }
  std::set<std::string> ps(extra_params.begin(), extra_params.end());
  std::set<std::string> vs(extra_vars.begin(), extra_vars.end());
  for (const auto& [a, mask] : bm.val) {
    (void)mask;
    if (a.is_parameter())
      ps.insert(a.name);
    else
      vs.insert(a.name);
  }
  clx::Model m(ids, refl, edges, std::vector<std::string>(ps.begin(), ps.end()),
               std::vector<std::string>(vs.begin(), vs.end()));
  for (const auto& [a, mask] : bm.val)
    for (int u = 0; u < bm.frame.n; ++u) m.set_atom(u, a, mask >> u & 1);
  return m;
}

// Random transitive parametric model generator.
inline clx::Model random_model(std::mt19937& rng, int max_points,
                               const std::vector<std::string>& params,
                               const std::vector<std::string>& vars) {
  std::uniform_int_distribution<int> np(1, max_points);
  int n = np(rng);
  std::vector<std::string> ids;
  std::vector<bool> refl;
  std::vector<std::pair<int, int>> edges;
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> edge(0, 2);
  for (int u = 0; u < n; ++u) {
    ids.push_back("w" + std::to_string(u));
    refl.push_back(coin(rng));
  }
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v && edge(rng) == 0) edges.emplace_back(u, v);
  clx::Model m(ids, refl, edges, params, vars);
  for (const auto& p : params)
    for (int u = 0; u < n; ++u) m.set_atom(u, clx::param(p), coin(rng));
  for (const auto& v : vars)
    for (int u = 0; u < n; ++u) m.set_atom(u, clx::var(v), coin(rng));
  return m;
}

}  // namespace clxtest

#endif
