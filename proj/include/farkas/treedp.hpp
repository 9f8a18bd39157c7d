#pragma once

// Minimal witnesses of tree-shaped DTMCs in polynomial time. The chain is
// first made binary by splitting wide distributions through fresh
// intermediate states, then l_q(i), the best probability reachable from q
// with exactly i counted states below q, is tabulated bottom-up.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "farkas/error.hpp"
#include "farkas/linsys.hpp"
#include "farkas/model.hpp"
#include "farkas/rational.hpp"
#include "farkas/witness.hpp"

namespace farkas {

namespace detail {

inline void require_single_action(const ReachMdp& m) {
  for (std::size_t s : m.transient_states()) {
    if (m.choices(s).size() > 1) {
      throw Unsupported("tree algorithm needs a DTMC; state " + m.label(s) + " has several actions");
    }
  }
}

}  // namespace detail

/// True iff every state of S except s0 has exactly one predecessor in S,
/// s0 has none, and all of S is reachable from s0.
inline bool is_tree_shaped(const ReachMdp& m) {
  detail::require_single_action(m);
  std::vector<std::size_t> indegree(m.state_count(), 0);
  for (std::size_t s : m.transient_states()) {
    for (const auto& tr : m.choice(s, 0).transitions) {
      if (!m.is_terminal(tr.target)) ++indegree[tr.target];
    }
  }
  for (std::size_t s : m.transient_states()) {
    if (indegree[s] != (s == m.initial() ? 0u : 1u)) return false;
  }
  auto reach = reachable_from(m, m.initial());
  for (std::size_t s : m.transient_states()) {
    if (!reach[s]) return false;
  }
  return true;
}

struct BinarizationMap {
  std::size_t original_state_count = 0;
  std::vector<std::vector<std::size_t>> fresh_states;      // per original state: u_1..u_{n-1}
  std::vector<std::pair<std::size_t, std::size_t>> origin;  // fresh state - offset -> (state, j)
  std::vector<std::size_t> order;                           // the total order, goal first

  bool is_fresh(std::size_t s) const { return s >= original_state_count; }
  std::vector<bool> fresh_mask() const {
    std::vector<bool> out(original_state_count + origin.size(), false);
    for (std::size_t i = original_state_count; i < out.size(); ++i) out[i] = true;
    return out;
  }
};

/// Default order: goal first, then the remaining states by index.
inline std::vector<std::size_t> default_order(const ReachMdp& m) {
  std::vector<std::size_t> order{m.goal()};
  for (std::size_t s = 0; s < m.state_count(); ++s) {
    if (s != m.goal()) order.push_back(s);
  }
  return order;
}

/// Binarization B(m, <). Fresh states are numbered after the original ones,
/// in order of the state they expand.
inline std::pair<ReachMdp, BinarizationMap> binarize(const ReachMdp& m, std::optional<std::vector<std::size_t>> order = {}) {
  if (!is_tree_shaped(m)) throw Unsupported("model is not tree-shaped");
  BinarizationMap map;
  map.original_state_count = m.state_count();
  map.order = order ? *order : default_order(m);
  {
    auto sorted = map.order;
    std::sort(sorted.begin(), sorted.end());
    bool permutation = sorted.size() == m.state_count();
    for (std::size_t i = 0; permutation && i < sorted.size(); ++i) permutation = sorted[i] == i;
    if (!permutation || map.order.front() != m.goal()) {
      throw Error("binarization order must list every state with goal first");
    }
  }
  std::vector<std::size_t> rank(m.state_count());
  for (std::size_t i = 0; i < map.order.size(); ++i) rank[map.order[i]] = i;
  map.fresh_states.resize(m.state_count());

  struct Edge {
    std::size_t from, to;
    Rational p;
  };
  std::vector<Edge> edges;
  std::size_t next = m.state_count();
  for (std::size_t q : m.transient_states()) {
    auto post = m.choice(q, 0).transitions;
    std::sort(post.begin(), post.end(), [&](const auto& a, const auto& b) { return rank[a.target] < rank[b.target]; });
    if (post.size() <= 2) {
      for (const auto& tr : post) edges.push_back({q, tr.target, tr.probability});
      continue;
    }
    const std::size_t n = post.size() - 1;
    std::vector<std::size_t> u{q};
    for (std::size_t j = 1; j < n; ++j) {
      map.fresh_states[q].push_back(next);
      map.origin.emplace_back(q, j);
      u.push_back(next++);
    }
    Rational consumed(0);
    for (std::size_t j = 0; j < n; ++j) {
      const Rational rest = 1 - consumed;
      if (sgn(rest) == 0) throw InternalError("binarization: no probability left");
      const Rational here = post[j].probability / rest;
      edges.push_back({u[j], post[j].target, here});
      if (j + 1 < n) {
        edges.push_back({u[j], u[j + 1], 1 - here});
      } else {
        edges.push_back({u[j], post[n].target, post[n].probability / rest});
      }
      consumed += post[j].probability;
    }
  }
  MdpBuilder b(m.kind(), next, m.initial(), m.goal(), m.fail());
  for (std::size_t s = 0; s < m.state_count(); ++s) b.set_label(s, m.label(s));
  for (std::size_t i = 0; i < map.origin.size(); ++i) {
    const auto& [q, j] = map.origin[i];
    b.set_label(m.state_count() + i, "u" + std::to_string(j) + "@" + m.label(q));
  }
  for (const auto& e : edges) {
    const std::size_t owner = e.from < m.state_count() ? e.from : map.origin[e.from - m.state_count()].first;
    b.add(e.from, m.choice(owner, 0).action, e.to, e.p);
  }
  return {b.build(), std::move(map)};
}

struct DpTable {
  std::vector<std::vector<Rational>> l;              // l_q(0..|q|_S)
  std::vector<std::vector<std::size_t>> split;       // states given to the first child
  std::vector<std::vector<std::size_t>> children;    // successors other than goal/fail
  std::vector<std::vector<Rational>> child_prob;
  std::vector<Rational> to_goal;                     // b(q)
  std::vector<std::size_t> size;                     // |q|_S
  std::vector<bool> counted;                         // q in S (not fresh, not goal/fail)
  std::size_t root = 0;
};

/// Bottom-up tables for a binary tree-shaped chain; `fresh` marks states
/// that do not count towards the witness size.
inline DpTable dp_tables(const ReachMdp& b, const std::vector<bool>& fresh) {
  detail::require_single_action(b);
  if (fresh.size() != b.state_count()) throw DimensionMismatch("fresh-state mask has the wrong size");
  const std::size_t n = b.state_count();
  DpTable t;
  t.root = b.initial();
  t.l.resize(n);
  t.split.resize(n);
  t.children.resize(n);
  t.child_prob.resize(n);
  t.to_goal.assign(n, Rational(0));
  t.size.assign(n, 0);
  t.counted.assign(n, false);
  t.l[b.goal()] = {Rational(1)};
  t.l[b.fail()] = {Rational(0)};

  // Breadth-first from the root; a tree visits each state once.
  std::vector<std::size_t> order{b.initial()};
  std::vector<bool> seen(n, false);
  seen[b.initial()] = true;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t q = order[i];
    const auto& trs = b.choice(q, 0).transitions;
    if (trs.size() > 2) throw Unsupported("dp_tables needs a binary chain; state " + b.label(q) + " has more successors");
    for (const auto& tr : trs) {
      if (tr.target == b.goal()) {
        t.to_goal[q] += tr.probability;
      } else if (tr.target != b.fail()) {
        if (seen[tr.target]) throw Unsupported("model is not tree-shaped");
        seen[tr.target] = true;
        order.push_back(tr.target);
        t.children[q].push_back(tr.target);
        t.child_prob[q].push_back(tr.probability);
      }
    }
  }

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t q = *it;
    const auto& kids = t.children[q];
    const auto& mu = t.child_prob[q];
    // Best split of i states among the children.
    std::vector<Rational> best;
    std::vector<std::size_t> arg;
    std::size_t below = 0;
    if (kids.empty()) {
      best = {Rational(0)};
      arg = {0};
    } else if (kids.size() == 1) {
      below = t.size[kids[0]];
      for (std::size_t i = 0; i <= below; ++i) {
        best.push_back(mu[0] * t.l[kids[0]][i]);
        arg.push_back(i);
      }
    } else {
      const std::size_t a = t.size[kids[0]], c = t.size[kids[1]];
      below = a + c;
      for (std::size_t i = 0; i <= below; ++i) {
        std::optional<Rational> top;
        std::size_t top_j = 0;
        for (std::size_t j = (i > c ? i - c : 0); j <= std::min(i, a); ++j) {
          Rational v = mu[0] * t.l[kids[0]][j] + mu[1] * t.l[kids[1]][i - j];
          if (!top || v > *top) {
            top = v;
            top_j = j;
          }
        }
        best.push_back(*top);
        arg.push_back(top_j);
      }
    }
    t.counted[q] = !fresh[q];
    if (t.counted[q]) {
      t.size[q] = below + 1;
      t.l[q] = {Rational(0)};
      t.split[q] = {0};
      for (std::size_t i = 0; i <= below; ++i) {
        t.l[q].push_back(t.to_goal[q] + best[i]);
        t.split[q].push_back(arg[i]);
      }
    } else {
      t.size[q] = below;
      t.l[q].clear();
      for (std::size_t i = 0; i <= below; ++i) t.l[q].push_back(t.to_goal[q] + best[i]);
      t.split[q] = arg;
    }
  }
  return t;
}

inline DpTable dp_tables(const ReachMdp& b, const BinarizationMap& map) { return dp_tables(b, map.fresh_mask()); }

/// Counted states of the subtree allocation realizing l_q(i).
inline std::vector<std::size_t> reconstruct(const DpTable& t, std::size_t q, std::size_t i) {
  std::vector<std::size_t> kept;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{q, i}};
  while (!stack.empty()) {
    auto [s, k] = stack.back();
    stack.pop_back();
    if (k == 0) continue;
    std::size_t rest = k;
    if (t.counted[s]) {
      kept.push_back(s);
      rest = k - 1;
    }
    const auto& kids = t.children[s];
    const std::size_t first = t.split[s][k];
    if (kids.size() == 1) {
      stack.emplace_back(kids[0], rest);
    } else if (kids.size() == 2) {
      stack.emplace_back(kids[0], first);
      stack.emplace_back(kids[1], rest - first);
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct TreeWitness {
  WitnessResult witness;
  std::vector<Rational> l_root;  // l_{s0}(0..|S|)
  std::size_t k = 0;
};

/// State-minimal witness of a tree-shaped DTMC for Pr(goal) >= lambda.
inline TreeWitness tree_witness_with_table(const ReachMdp& m, const Rational& lambda) {
  if (!is_tree_shaped(m)) throw Unsupported("model is not tree-shaped");
  const Rational pr = initial_probability(m, Direction::min);
  if (pr < lambda) throw PropertyFalse("Pr = " + to_string(pr) + " < lambda = " + to_string(lambda));
  auto [b, map] = binarize(m);
  auto table = dp_tables(b, map);
  const auto& l = table.l[b.initial()];
  std::size_t k = 1;
  while (l[k] < lambda) ++k;
  auto kept = reconstruct(table, b.initial(), k);
  auto sub = restrict_states(m, kept);
  Rational reached = initial_probability(sub.mdp, Direction::min);
  if (reached != l[k]) throw InternalError("tree witness does not reach the tabulated probability");

  TreeWitness out;
  const auto fs = build_farkas_system(m);
  const PolytopeSpec spec{PolytopeFlavor::min_nonneg, lambda};
  out.witness.point = detail::lifted_point(m, fs, spec, sub);
  out.witness.subsystem = std::move(sub);
  out.witness.state_count = k;
  out.witness.method = WitnessMethod::tree;
  out.witness.optimal = true;
  out.witness.lower = out.witness.upper = k;
  out.witness.probability = reached;
  out.l_root = l;
  out.k = k;
  return out;
}

inline WitnessResult tree_minimal_witness(const ReachMdp& m, const Rational& lambda) {
  return tree_witness_with_table(m, lambda).witness;
}

}  // namespace farkas
