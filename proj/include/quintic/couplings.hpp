#pragma once

// Symbolic bookkeeping for the Duhamel expansion of the hierarchy: collapse
// maps, signed couplings, the quintic-node marking and the
// unclogged/congested classification.
//
// Levels are numbered 1..k from the outermost coupling. Level l applies
// B^{+/-}_{mu(2l); 2l, 2l+1}: B+ contracts unprimed slot mu with the slots
// 2l, 2l+1 on both sides and leaves the node on unprimed mu; B- does the
// same on the primed side. Levels are applied innermost first.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "quintic/error.hpp"

namespace quintic {

inline constexpr int kMaxCouplingLevels = 12;

// mu on even arguments only: mu[l-1] = mu(2l).
struct CollapseMap {
  int k = 1;
  std::array<int, kMaxCouplingLevels> mu{};

  int at(int even) const {
    require(even % 2 == 0 && even >= 2 && even <= 2 * k, "collapse map is defined on 2, 4, ..., 2k");
    return mu[static_cast<std::size_t>(even / 2 - 1)];
  }
  bool operator==(const CollapseMap&) const = default;
};

inline bool valid(const CollapseMap& m) {
  if (m.k < 1 || m.k > kMaxCouplingLevels || m.mu[0] != 1) return false;
  for (int l = 1; l <= m.k; ++l) {
    const int v = m.mu[static_cast<std::size_t>(l - 1)];
    if (v < 1 || v >= 2 * l) return false;
  }
  return true;
}

enum class Sign : std::uint8_t { Plus, Minus };

struct SignedExpansion {
  CollapseMap collapse;
  std::vector<Sign> signs;  // signs[l-1] for level l
};

inline void validate(const SignedExpansion& e) {
  require(valid(e.collapse), "invalid collapse map");
  require(static_cast<int>(e.signs.size()) == e.collapse.k, "need one sign per coupling");
}

enum class NodeKind { Q, Q_phi, Q_R, Q_phi_R };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Q: return "Q";
    case NodeKind::Q_phi: return "Q_phi";
    case NodeKind::Q_R: return "Q_R";
    case NodeKind::Q_phi_R: return "Q_phi_R";
  }
  return "?";
}

// Child slot contents: 0 for a bare propagated phi, otherwise the level of the
// node it holds.
struct QuinticNode {
  int level = 0;
  NodeKind kind = NodeKind::Q;
  bool primed = false;  // which side the node lives on
  int slot = 0;         // mu(2 level)
  std::array<int, 5> children{};
  bool contains_innermost = false;

  int bare_children() const {
    int c = 0;
    for (int v : children) c += v == 0;
    return c;
  }
  int degree() const { return 2 * level + 1; }
};

// ---------------------------------------------------------------------------
// counting

inline std::uint64_t double_factorial(int m) {
  std::uint64_t r = 1;
  for (int v = m; v > 1; v -= 2) r *= static_cast<std::uint64_t>(v);
  return r;
}

// Visits every collapse map in lexicographic order of (mu(2), mu(4), ...).
inline void for_each_collapse_map(int k, const std::function<void(const CollapseMap&)>& fn) {
  require(k >= 1 && k <= 10, "collapse map enumeration needs 1 <= k <= 10");
  CollapseMap m;
  m.k = k;
  m.mu[0] = 1;
  std::function<void(int)> rec = [&](int l) {
    if (l > k) {
      fn(m);
      return;
    }
    for (int v = 1; v < 2 * l; ++v) {
      m.mu[static_cast<std::size_t>(l - 1)] = v;
      rec(l + 1);
    }
  };
  rec(2);
}

// Materialized list; the streaming form covers k up to 10.
inline std::vector<CollapseMap> enumerate_collapse_maps(int k) {
  require(k >= 1 && k <= 8, "materialized collapse map lists need 1 <= k <= 8");
  std::vector<CollapseMap> out;
  out.reserve(double_factorial(2 * k - 1));
  for_each_collapse_map(k, [&](const CollapseMap& m) { out.push_back(m); });
  return out;
}

inline std::uint64_t count_collapse_maps(int k) {
  std::uint64_t c = 0;
  for_each_collapse_map(k, [&](const CollapseMap&) { ++c; });
  return c;
}

struct RawCount {
  std::uint64_t bruteforce = 0;
  std::uint64_t printed_formula = 0;  // closed form (2k+1)!! 2^k, kept for comparison
};

// Number of signed summands in the k-fold Duhamel iterate with
// B^{(2l+1)} = sum_{j=1}^{2l-1} (B+_j - B-_j), counted by expanding level by level.
inline RawCount raw_summand_count(int k) {
  require(k >= 1 && k <= kMaxCouplingLevels, "raw count needs 1 <= k <= 12");
  // summands(l) = number of terms produced by levels l..k
  std::vector<std::uint64_t> summands(static_cast<std::size_t>(k) + 2, 0);
  summands[static_cast<std::size_t>(k) + 1] = 1;
  for (int l = k; l >= 1; --l) {
    std::uint64_t s = 0;
    for (int j = 1; j <= 2 * l - 1; ++j)
      for (int sign = 0; sign < 2; ++sign) s += summands[static_cast<std::size_t>(l) + 1];
    summands[static_cast<std::size_t>(l)] = s;
  }
  return {summands[1], double_factorial(2 * k + 1) * (std::uint64_t{1} << k)};
}

// ---------------------------------------------------------------------------
// marking

struct MarkingTally {
  int bare_consumed_by_classified = 0;  // bare phi inside nodes of levels 1..k-1
  int bare_surviving = 0;               // bare phi left in slots 1 and 1'
};

struct Marking {
  std::vector<QuinticNode> nodes;  // nodes[l-1] is the level-l node
  MarkingTally tally;
};

inline Marking mark(const SignedExpansion& e) {
  validate(e);
  const int k = e.collapse.k;
  std::array<int, 2 * kMaxCouplingLevels + 2> un{}, pr{};
  Marking out;
  out.nodes.resize(static_cast<std::size_t>(k));
  for (int l = k; l >= 1; --l) {
    auto& node = out.nodes[static_cast<std::size_t>(l - 1)];
    node.level = l;
    node.slot = e.collapse.mu[static_cast<std::size_t>(l - 1)];
    node.primed = e.signs[static_cast<std::size_t>(l - 1)] == Sign::Minus;
    auto& own = node.primed ? pr : un;
    auto& other = node.primed ? un : pr;
    const auto a = static_cast<std::size_t>(2 * l);
    const auto m = static_cast<std::size_t>(node.slot);
    node.children = {own[m], own[a], own[a + 1], other[a], other[a + 1]};
    node.contains_innermost = l == k;
    for (int c : node.children)
      if (c != 0 && out.nodes[static_cast<std::size_t>(c - 1)].contains_innermost) node.contains_innermost = true;
    const bool phi = node.bare_children() > 0;
    if (l == k)
      node.kind = NodeKind::Q_R;
    else if (node.contains_innermost)
      node.kind = phi ? NodeKind::Q_phi_R : NodeKind::Q_R;
    else
      node.kind = phi ? NodeKind::Q_phi : NodeKind::Q;
    if (l < k) out.tally.bare_consumed_by_classified += node.bare_children();
    own[m] = l;
    own[a] = own[a + 1] = other[a] = other[a + 1] = -1;  // traced out
  }
  out.tally.bare_surviving = (un[1] == 0) + (pr[1] == 0);
  return out;
}

inline std::vector<QuinticNode> mark_expansion(const SignedExpansion& e) { return mark(e).nodes; }

struct Classification {
  std::set<int> unclogged;
  std::set<int> congested;
};

inline Classification classify_couplings(const SignedExpansion& e) {
  Classification c;
  const auto nodes = mark_expansion(e);
  for (int l = 1; l < e.collapse.k; ++l) {
    if (nodes[static_cast<std::size_t>(l - 1)].bare_children() > 0)
      c.unclogged.insert(l);
    else
      c.congested.insert(l);
  }
  return c;
}

enum class Estimate { MLFL1, MLFL2, Old1, Old2 };

inline const char* to_string(Estimate e) {
  switch (e) {
    case Estimate::MLFL1: return "MLFL1";
    case Estimate::MLFL2: return "MLFL2";
    case Estimate::Old1: return "Old1";
    case Estimate::Old2: return "Old2";
  }
  return "?";
}

// Estimate used for the node of each level 1..k-1.
inline std::vector<Estimate> estimate_schedule(const SignedExpansion& e) {
  const auto nodes = mark_expansion(e);
  std::vector<Estimate> out;
  for (int l = 1; l < e.collapse.k; ++l) {
    switch (nodes[static_cast<std::size_t>(l - 1)].kind) {
      case NodeKind::Q_phi_R: out.push_back(Estimate::MLFL1); break;
      case NodeKind::Q_phi: out.push_back(Estimate::MLFL2); break;
      case NodeKind::Q_R: out.push_back(Estimate::Old1); break;
      case NodeKind::Q: out.push_back(Estimate::Old2); break;
    }
  }
  return out;
}

// Visits every signed expansion, lexicographic in (mu, signs) with + before -.
inline void for_each_signed_expansion(int k, const std::function<void(const SignedExpansion&)>& fn) {
  SignedExpansion e;
  e.signs.assign(static_cast<std::size_t>(k), Sign::Plus);
  for_each_collapse_map(k, [&](const CollapseMap& m) {
    e.collapse = m;
    for (std::uint32_t bits = 0; bits < (1u << k); ++bits) {
      for (int l = 0; l < k; ++l) e.signs[static_cast<std::size_t>(l)] = (bits >> (k - 1 - l)) & 1u ? Sign::Minus : Sign::Plus;
      fn(e);
    }
  });
}

struct MinUnclogged {
  int k = 0;
  int min_count = 0;
  std::uint64_t expansions = 0;
  SignedExpansion witness;  // first expansion attaining the minimum
  bool bound_holds = true;  // 4k-4 <= 5(k-1-j) for every congested count j seen
};

inline int unclogged_lower_bound(int k) { return (4 * (k - 1) + 4) / 5; }

inline MinUnclogged min_unclogged(int k) {
  require(k >= 1 && k <= 7, "exhaustive search needs 1 <= k <= 7");
  MinUnclogged r;
  r.k = k;
  r.min_count = k;
  for_each_signed_expansion(k, [&](const SignedExpansion& e) {
    ++r.expansions;
    const auto m = mark(e);
    int unclogged = 0;
    for (int l = 1; l < k; ++l) unclogged += m.nodes[static_cast<std::size_t>(l - 1)].bare_children() > 0;
    const int congested = (k - 1) - unclogged;
    if (4 * k - 4 > 5 * (k - 1 - congested)) r.bound_holds = false;
    if (unclogged < r.min_count) {
      r.min_count = unclogged;
      r.witness = e;
    }
  });
  return r;
}

inline std::string describe(const SignedExpansion& e) {
  std::string s = "mu=(";
  for (int l = 1; l <= e.collapse.k; ++l) {
    if (l > 1) s += ",";
    s += std::to_string(e.collapse.mu[static_cast<std::size_t>(l - 1)]);
  }
  s += ") signs=(";
  for (std::size_t l = 0; l < e.signs.size(); ++l) {
    if (l > 0) s += ",";
    s += e.signs[l] == Sign::Plus ? "+" : "-";
  }
  return s + ")";
}

}  // namespace quintic
