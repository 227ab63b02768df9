#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "clx/logic.hpp"
#include "testutil.hpp"

using namespace clx;
using clxtest::BitFrame;

namespace {

std::vector<ExtensionCondition> sorted(std::vector<ExtensionCondition> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("ec order") {
  CHECK(ec_leq(ec_refl(1, 2), ec_refl(3, kInf)));
  CHECK(!ec_leq(ec_irr(0), ec_irr(1)));  // 0 incomparable to positives
  CHECK(!ec_leq(ec_refl(2, 1), ec_irr(1)));
  CHECK(ec_leq(ec_irr(1), ec_irr(kInf)));
  CHECK(ec_leq(ec_refl(2, 0), ec_refl(kInf, 0)));
  CHECK(!ec_leq(ec_refl(1, 0), ec_refl(1, kInf)));

  // partial order on a grid of conditions
  std::vector<ExtensionCondition> grid;
  for (int refl = 0; refl <= 1; ++refl)
    for (int k = 1; k <= 3; ++k)
      for (int n : {0, 1, 2, kInf}) {
        if (!refl && k > 1) continue;
        grid.push_back(ExtensionCondition{ClusterType{bool(refl), refl ? k : 1}, n});
      }
  for (const auto& a : grid) {
    CHECK(ec_leq(a, a));
    for (const auto& b : grid) {
      if (ec_leq(a, b) && ec_leq(b, a)) CHECK(a == b);
      for (const auto& c : grid)
        if (ec_leq(a, b) && ec_leq(b, c)) CHECK(ec_leq(a, c));
    }
  }
}

TEST_CASE("canonical antichain") {
  // comparable pair collapses
  auto r = canonical_antichain({ec_irr(1), ec_irr(2)});
  CHECK(r == std::vector<ExtensionCondition>{ec_irr(2)});

  // an antichain is a fixpoint
  std::vector<ExtensionCondition> anti{ec_irr(0), ec_irr(2), ec_refl(2, 1)};
  CHECK(sorted(canonical_antichain(anti)) == sorted(anti));
  CHECK(canonical_antichain(canonical_antichain(anti)) == canonical_antichain(anti));

  // a generated chain of cluster sizes is represented by its (∞) bound
  auto r2 = canonical_antichain({ec_refl(1, 1), ec_refl(2, 1), ec_refl(kInf, 1)});
  CHECK(r2 == std::vector<ExtensionCondition>{ec_refl(kInf, 1)});
}

TEST_CASE("preset exclusion bases") {
  CHECK(LogicSpec::preset("K4").xcb().empty());
  CHECK(sorted(LogicSpec::preset("GL").xcb()) ==
        sorted({ec_refl(1, 0), ec_refl(1, 1)}));
  CHECK(sorted(LogicSpec::preset("K4.3").xcb()) == sorted({ec_irr(2), ec_refl(1, 2)}));
  CHECK(sorted(LogicSpec::preset("S5").xcb()) ==
        sorted({ec_irr(0), ec_irr(1), ec_refl(1, 1)}));
  CHECK_THROWS(LogicSpec::preset("K5"));
}

TEST_CASE("derived bases match the published characteristics") {
  auto I = [](int n) { return ec_irr(n); };
  auto R = [](int k, int n) { return ec_refl(k, n); };
  const int inf = kInf;
  std::vector<std::pair<std::string, std::vector<ExtensionCondition>>> expect = {
      {"K4", {I(0), I(inf), R(inf, 0), R(inf, inf)}},
      {"S4", {R(inf, 0), R(inf, inf)}},
      {"K4Grz", {I(0), I(inf), R(1, 0), R(1, inf)}},
      {"S4Grz", {R(1, 0), R(1, inf)}},
      {"K4.3", {I(0), I(1), R(inf, 0), R(inf, 1)}},
      {"K4BB2", {I(0), I(2), R(inf, 0), R(inf, 2)}},
      {"K4BC2", {I(0), I(inf), R(2, 0), R(2, inf)}},
      {"S4.1.4", {R(inf, 0), R(1, inf)}},
      {"K4B", {I(0), R(inf, 0)}},
      {"S5", {R(inf, 0)}},
      {"GL", {I(0), I(inf)}},
      {"GL.3", {I(0), I(1)}},
      {"S4.3", {R(inf, 0), R(inf, 1)}},
      {"Triv", {R(1, 0)}},
      {"Verum", {I(0)}},
      {"Form", {}},
      {"D4", {R(inf, 0), I(inf), R(inf, inf)}},
      {"K4.1", {I(0), R(1, 0), I(inf), R(inf, inf)}},
      {"S4.1", {R(1, 0), R(inf, inf)}},
  };
  for (const auto& [name, base] : expect) {
    CAPTURE(name);
    CHECK(sorted(LogicSpec::preset(name).base()) == sorted(base));
  }
}

TEST_CASE("frame membership") {
  Model irr({"u"}, {false}, {}, {}, {});
  Model refl({"u"}, {true}, {}, {}, {});
  CHECK(is_l_frame(LogicSpec::preset("K4"), irr));
  CHECK(is_l_frame(LogicSpec::preset("K4"), refl));
  CHECK(!is_l_frame(LogicSpec::preset("S4"), irr));
  CHECK(!is_l_frame(LogicSpec::preset("GL"), refl));
  CHECK(is_l_frame(LogicSpec::preset("GL"), irr));
}

TEST_CASE("classification helpers") {
  auto s43 = LogicSpec::preset("S4.3");
  CHECK(s43.is_linear());
  CHECK(LogicSpec::preset("K4.3").is_linear());
  CHECK(LogicSpec::preset("S5").is_linear());
  CHECK(!LogicSpec::preset("K4").is_linear());
  CHECK(!LogicSpec::preset("S4Grz").is_linear());

  CHECK(!LogicSpec::preset("K4").bounded_branching().has_value());
  CHECK(LogicSpec::preset("S4.3").bounded_branching() == 1);
  CHECK(LogicSpec::preset("S5").bounded_branching() == 0);
  CHECK(LogicSpec::preset("K4BB3").bounded_branching() == 3);

  CHECK(!LogicSpec::preset("Form").has_type_frame(ec_irr(0)));
  CHECK(LogicSpec::preset("GL").has_type_frame(ec_irr(2)));
  CHECK(!LogicSpec::preset("GL").has_type_frame(ec_refl(1, 0)));
}

TEST_CASE("lattice operations") {
  auto eq_logic = [](const LogicSpec& a, const LogicSpec& b) {
    return sorted(a.xcb()) == sorted(b.xcb());
  };
  CHECK(eq_logic(meet_clx(LogicSpec::preset("S4Grz"), LogicSpec::preset("S5")),
                 LogicSpec::preset("S4.1.4")));
  CHECK(eq_logic(join(LogicSpec::preset("S4"), LogicSpec::preset("K4Grz")),
                 LogicSpec::preset("S4Grz")));
  CHECK(eq_logic(join(LogicSpec::preset("GL"), LogicSpec::preset("GL")),
                 LogicSpec::preset("GL")));
  CHECK(eq_logic(join(LogicSpec::preset("S4"), LogicSpec::preset("GL")),
                 LogicSpec::preset("Form")));
}

TEST_CASE("alpha axioms") {
  CHECK(alpha_axiom(ec_irr(0)) == parse("<>true"));
  CHECK(alpha_axiom(ec_irr(1)) == parse("[]y -> y | []false"));
  CHECK(alpha_axiom(ec_refl(1, 0)) == parse("<.>[](true -> y0)"));

  Model irr({"u"}, {false}, {}, {}, {});
  Model refl({"u"}, {true}, {}, {}, {});
  CHECK(validates_alpha(irr, ec_refl(1, 0)));
  CHECK(!validates_alpha(refl, ec_refl(1, 0)));
  Model fork({"r", "a", "b"}, {false, false, false}, {{0, 1}, {0, 2}}, {}, {});
  CHECK(!validates_alpha(fork, ec_irr(2)));

  CHECK(axiomatize(LogicSpec::preset("K4")).empty());
  CHECK(axiomatize(LogicSpec::preset("GL")) ==
        std::vector<Formula>{alpha_axiom(ec_refl(1, 0)), alpha_axiom(ec_refl(1, 1))});
  auto s4 = axiomatize(LogicSpec::preset("S4"));
  CHECK(s4 == std::vector<Formula>{alpha_axiom(ec_irr(0)), alpha_axiom(ec_irr(1))});
}

TEST_CASE("structural alpha validity equals exhaustive validity on small frames") {
  std::vector<ExtensionCondition> conds;
  for (int refl = 0; refl <= 1; ++refl)
    for (int k = 1; k <= (refl ? 2 : 1); ++k)
      for (int n = 0; n <= 2; ++n)
        conds.push_back(ExtensionCondition{ClusterType{bool(refl), k}, n});

  for (int n = 1; n <= 3; ++n) {
    for (const auto& fr : clxtest::transitive_frames_up_to_iso(n)) {
      clxtest::BitModel bm;
      bm.frame = fr;
      Model m = clxtest::to_model(bm);
      for (const auto& t : conds) {
        CAPTURE(n);
        CAPTURE(t.print());
        CHECK(validates_alpha(m, t) == clxtest::frame_valid(fr, alpha_axiom(t)));
      }
    }
  }
}

TEST_CASE("logic json round trip") {
  LogicSpec l = LogicSpec::from_json(
      R"({"name":"custom","xcb":[{"cluster":"irr","n":2},{"cluster":1,"n":2}],"params":["p","q"]})");
  CHECK(sorted(l.xcb()) == sorted({ec_irr(2), ec_refl(1, 2)}));
  CHECK(l.param_mode() == ParamMode::Finite);
  CHECK(l.declared_params() == std::vector<std::string>{"p", "q"});
  LogicSpec l2 = LogicSpec::from_json(l.to_json());
  CHECK(sorted(l2.xcb()) == sorted(l.xcb()));

  LogicSpec inf = LogicSpec::from_json(R"({"name":"x","xcb":[],"params":"infinite"})");
  CHECK(inf.param_mode() == ParamMode::Infinite);

  // finite mode rejects undeclared parameters
  LogicSpec fin = LogicSpec::preset("K4");
  fin.set_finite_params({"p"});
  CHECK_NOTHROW(fin.check_formula(parse("$p & x")));
  CHECK_THROWS(fin.check_formula(parse("$q")));
}
