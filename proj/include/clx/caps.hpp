#ifndef CLX_CAPS_HPP
#define CLX_CAPS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clx {

// Resource limits. Exceeding one never yields a wrong answer; the engines
// report a distinguished "undecided: resource" outcome instead.
struct Caps {
  int max_sigma = 32;                      // subformula-closure size
  int max_free = 16;                       // free type components (atoms + boxes)
  std::size_t max_types = 20000;           // enumerated coherent types
  std::size_t max_pairs = 20000;           // saturation pairs
  std::size_t max_unions = 20000;          // achievable cone unions
  int max_cluster_atoms = 3;               // |P ∪ V| for cluster-spec enumeration
  std::size_t max_points = 200000;         // materialized model size
  int max_rule_vars = 6;                   // rule_valid valuation search
  std::size_t max_rule_valuations = std::size_t(1) << 22;
  int max_theta_bits = 8;                  // |V| * 2^|P| for Löwenheim towers
  std::size_t max_family = 20000;          // candidate type-set family (engines)
  std::size_t max_simplify_leaves = 24;    // Boolean-skeleton minimization
};

class CapExceeded : public std::runtime_error {
 public:
  explicit CapExceeded(const std::string& which)
      : std::runtime_error("resource cap exceeded: " + which), which_(which) {}
  const std::string& which() const { return which_; }

 private:
  std::string which_;
};

}  // namespace clx

#endif
