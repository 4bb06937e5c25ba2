#include <gtest/gtest.h>

#include <map>
#include <set>
#include <string>

#include "quintic/couplings.hpp"

using namespace quintic;

namespace {

SignedExpansion make(std::vector<int> mu, std::string signs) {
  SignedExpansion e;
  e.collapse.k = static_cast<int>(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) e.collapse.mu[i] = mu[i];
  for (char c : signs) e.signs.push_back(c == '+' ? Sign::Plus : Sign::Minus);
  return e;
}

// Term-rewriting oracle: slots hold strings, "p" is a bare phi and a node is
// "N<l>(c1,c2,c3,c4,c5)".
struct OracleNode {
  std::string term;
  std::vector<std::string> children;
};

std::map<int, OracleNode> oracle_mark(const SignedExpansion& e) {
  const int k = e.collapse.k;
  std::vector<std::string> un(2 * k + 2, "p"), pr(2 * k + 2, "p");
  std::map<int, OracleNode> nodes;
  for (int l = k; l >= 1; --l) {
    const int m = e.collapse.mu[l - 1];
    const bool plus = e.signs[l - 1] == Sign::Plus;
    auto& own = plus ? un : pr;
    auto& oth = plus ? pr : un;
    OracleNode n;
    n.children = {own[m], own[2 * l], own[2 * l + 1], oth[2 * l], oth[2 * l + 1]};
    n.term = "N" + std::to_string(l) + "(";
    for (const auto& c : n.children) n.term += c + ",";
    n.term += ")";
    own[m] = n.term;
    nodes[l] = n;
  }
  return nodes;
}

NodeKind oracle_kind(const OracleNode& n, int l, int k) {
  if (l == k) return NodeKind::Q_R;
  const bool r = n.term.find("N" + std::to_string(k) + "(") != std::string::npos;
  bool phi = false;
  for (const auto& c : n.children) phi = phi || c == "p";
  if (r) return phi ? NodeKind::Q_phi_R : NodeKind::Q_R;
  return phi ? NodeKind::Q_phi : NodeKind::Q;
}

}  // namespace

TEST(CollapseMaps, CountsAndBound) {
  for (int k = 1; k <= 8; ++k) {
    const auto maps = enumerate_collapse_maps(k);
    EXPECT_EQ(maps.size(), double_factorial(2 * k - 1)) << k;
    EXPECT_LE(maps.size(), std::uint64_t{1} << (3 * k - 1)) << k;
    std::set<std::vector<int>> seen;
    for (const auto& m : maps) {
      EXPECT_TRUE(valid(m));
      EXPECT_EQ(m.at(2), 1);
      seen.insert(std::vector<int>(m.mu.begin(), m.mu.begin() + k));
    }
    EXPECT_EQ(seen.size(), maps.size());
  }
  EXPECT_EQ(count_collapse_maps(9), double_factorial(17));
}

TEST(CollapseMaps, SmallCases) {
  EXPECT_EQ(enumerate_collapse_maps(1).size(), 1u);
  const auto two = enumerate_collapse_maps(2);
  ASSERT_EQ(two.size(), 3u);
  for (int v = 1; v <= 3; ++v) EXPECT_EQ(two[v - 1].at(4), v);
  EXPECT_EQ(enumerate_collapse_maps(4).size(), 105u);
  EXPECT_LE(105, 2048);
  EXPECT_THROW(enumerate_collapse_maps(9), Error);
}

TEST(RawCount, BruteForceAgainstPrintedFormula) {
  EXPECT_EQ(raw_summand_count(1).bruteforce, 2u);
  EXPECT_EQ(raw_summand_count(1).printed_formula, 6u);
  EXPECT_EQ(raw_summand_count(2).bruteforce, 12u);
  for (int k = 1; k <= 12; ++k) {
    const auto r = raw_summand_count(k);
    EXPECT_EQ(r.bruteforce, double_factorial(2 * k - 1) << k);
    EXPECT_NE(r.bruteforce, r.printed_formula);
  }
  for (int k = 1; k <= 6; ++k) EXPECT_EQ(raw_summand_count(k).bruteforce, count_collapse_maps(k) << k);
}

TEST(Marking, WorkedExample) {
  const auto nodes = mark_expansion(make({1, 2, 3}, "+-+"));
  ASSERT_EQ(nodes.size(), 3u);
  EXPECT_EQ(nodes[2].kind, NodeKind::Q_R);
  EXPECT_EQ(nodes[2].degree(), 7);
  EXPECT_EQ(nodes[1].kind, NodeKind::Q_phi);
  EXPECT_EQ(nodes[1].degree(), 5);
  EXPECT_EQ(nodes[0].kind, NodeKind::Q_phi_R);
  EXPECT_EQ(nodes[0].degree(), 3);
  const auto c = classify_couplings(make({1, 2, 3}, "+-+"));
  EXPECT_EQ(c.unclogged, (std::set<int>{1, 2}));
  EXPECT_TRUE(c.congested.empty());
  EXPECT_EQ(estimate_schedule(make({1, 2, 3}, "+-+")), (std::vector<Estimate>{Estimate::MLFL1, Estimate::MLFL2}));
}

TEST(Marking, SingleCoupling) {
  for (const char* s : {"+", "-"}) {
    const auto nodes = mark_expansion(make({1}, s));
    ASSERT_EQ(nodes.size(), 1u);
    EXPECT_EQ(nodes[0].kind, NodeKind::Q_R);
    EXPECT_TRUE(classify_couplings(make({1}, s)).unclogged.empty());
  }
}

TEST(Marking, AgreesWithRewritingOracle) {
  for (int k = 1; k <= 4; ++k) {
    for_each_signed_expansion(k, [&](const SignedExpansion& e) {
      const auto nodes = mark_expansion(e);
      const auto ref = oracle_mark(e);
      for (int l = 1; l <= k; ++l) {
        const auto& n = nodes[l - 1];
        const auto& o = ref.at(l);
        EXPECT_EQ(n.kind, oracle_kind(o, l, k)) << describe(e) << " level " << l;
        int bare = 0;
        for (const auto& c : o.children) bare += c == "p";
        EXPECT_EQ(n.bare_children(), bare) << describe(e);
      }
    });
  }
}

TEST(Marking, BareFactorConservation) {
  for (int k = 1; k <= 5; ++k) {
    for_each_signed_expansion(k, [&](const SignedExpansion& e) {
      const auto t = mark(e).tally;
      EXPECT_EQ(t.bare_consumed_by_classified + t.bare_surviving, 4 * k - 3) << describe(e);
    });
  }
  // no bare factor survives here, so the classified nodes take all 4k-3
  const auto t = mark(make({1, 1}, "+-")).tally;
  EXPECT_EQ(t.bare_surviving, 0);
  EXPECT_EQ(t.bare_consumed_by_classified, 5);
}

TEST(Marking, ClassificationSoundness) {
  for (int k = 2; k <= 5; ++k) {
    for_each_signed_expansion(k, [&](const SignedExpansion& e) {
      const auto nodes = mark_expansion(e);
      int with_r = 0;
      for (int l = 1; l < k; ++l) {
        const auto& n = nodes[l - 1];
        const bool phi = n.kind == NodeKind::Q_phi || n.kind == NodeKind::Q_phi_R;
        EXPECT_EQ(phi, n.bare_children() > 0);
        // at most one child carries the innermost node
        int r_children = 0;
        for (int c : n.children) r_children += c > 0 && nodes[c - 1].contains_innermost;
        EXPECT_LE(r_children, 1);
        with_r += r_children;
      }
      const auto c = classify_couplings(e);
      EXPECT_EQ(c.unclogged.size() + c.congested.size(), static_cast<std::size_t>(k - 1));
      for (int l : c.unclogged) EXPECT_EQ(c.congested.count(l), 0u);
    });
  }
}

TEST(Marking, SecondOrderAlwaysUnclogged) {
  int seen = 0;
  for_each_signed_expansion(2, [&](const SignedExpansion& e) {
    ++seen;
    EXPECT_EQ(classify_couplings(e).unclogged, (std::set<int>{1}));
  });
  EXPECT_EQ(seen, 12);
}

TEST(MinUnclogged, LowerBound) {
  EXPECT_EQ(min_unclogged(2).min_count, 1);
  for (int k = 2; k <= 7; ++k) {
    const auto r = min_unclogged(k);
    EXPECT_EQ(r.expansions, double_factorial(2 * k - 1) << k);
    EXPECT_GE(r.min_count, unclogged_lower_bound(k)) << k;
    EXPECT_TRUE(r.bound_holds) << k;
    EXPECT_EQ(static_cast<int>(classify_couplings(r.witness).unclogged.size()), r.min_count);
  }
}

TEST(Schedule, MultilinearEstimatesDominate) {
  for (int k = 2; k <= 5; ++k) {
    for_each_signed_expansion(k, [&](const SignedExpansion& e) {
      const auto s = estimate_schedule(e);
      ASSERT_EQ(s.size(), static_cast<std::size_t>(k - 1));
      int mlfl = 0;
      for (auto x : s) mlfl += x == Estimate::MLFL1 || x == Estimate::MLFL2;
      EXPECT_GE(mlfl, unclogged_lower_bound(k)) << describe(e);
    });
  }
}
