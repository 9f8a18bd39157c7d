#pragma once

// The clique-to-witness reduction, exhaustive oracles, and seeded generators
// for random models, tree-shaped chains and graphs.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "farkas/error.hpp"
#include "farkas/linsys.hpp"
#include "farkas/model.hpp"
#include "farkas/rational.hpp"

namespace farkas {

class UndirectedGraph {
 public:
  explicit UndirectedGraph(std::size_t n = 0) : n_(n) {}

  std::size_t vertex_count() const { return n_; }
  const std::set<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }

  void add_edge(std::size_t u, std::size_t v) {
    if (u >= n_ || v >= n_) throw Error("edge endpoint out of range");
    if (u == v) throw Error("self-loop on vertex " + std::to_string(u));
    if (!edges_.insert(std::minmax(u, v)).second) {
      throw Error("duplicate edge " + std::to_string(u) + " " + std::to_string(v));
    }
  }

  bool adjacent(std::size_t u, std::size_t v) const { return edges_.count(std::minmax(u, v)) > 0; }

 private:
  std::size_t n_;
  std::set<std::pair<std::size_t, std::size_t>> edges_;
};

/// `graph <n>` followed by one `u v` line per edge (0-based).
inline UndirectedGraph parse_graph(std::string_view text) {
  detail::Lines lines(text);
  std::string_view raw;
  std::optional<UndirectedGraph> g;
  while (lines.next(raw)) {
    auto tokens = detail::split_ws(detail::strip_comment(raw));
    if (tokens.empty()) continue;
    if (!g) {
      auto n = tokens.size() == 2 && tokens[0] == "graph" ? detail::parse_index(tokens[1]) : std::nullopt;
      if (!n) throw ParseError(lines.number(), "expected 'graph <n>'");
      g.emplace(*n);
      continue;
    }
    if (tokens.size() != 2) throw ParseError(lines.number(), "expected '<u> <v>'");
    auto u = detail::parse_index(tokens[0]);
    auto v = detail::parse_index(tokens[1]);
    if (!u || !v) throw ParseError(lines.number(), "malformed vertex index");
    try {
      g->add_edge(*u, *v);
    } catch (const Error& e) {
      throw ParseError(lines.number(), e.what());
    }
  }
  if (!g) throw ParseError(lines.number(), "empty graph document");
  return *g;
}

inline std::string serialize_graph(const UndirectedGraph& g) {
  std::string out = "graph " + std::to_string(g.vertex_count()) + "\n";
  for (const auto& [u, v] : g.edges()) out += std::to_string(u) + " " + std::to_string(v) + "\n";
  return out;
}

struct CliqueInstance {
  ReachMdp model;
  Rational lambda;
  std::size_t kprime = 0;  // state budget including s0, goal and fail
};

/// Acyclic DTMC over {s0} u V u E u {goal, fail}: s0 -> v with 1/n,
/// v -> {v,w} with 1/n per incident edge, {v,w} -> goal with 1, and the
/// residual mass of each state to fail. G has a k-clique iff the chain has a
/// witness for Pr >= k(k-1)/n^2 with at most k + k(k-1)/2 + 3 states.
inline CliqueInstance clique_to_witness_instance(const UndirectedGraph& g, std::size_t k) {
  const std::size_t n = g.vertex_count();
  if (k < 3) throw Error("clique size must be at least 3");
  if (n < k) throw Error("graph has fewer vertices than the clique size");
  const std::size_t e = g.edges().size();
  const std::size_t goal = 1 + n + e, fail = goal + 1;
  MdpBuilder b(ModelKind::dtmc, fail + 1, 0, goal, fail);
  b.set_label(0, "s0");
  b.set_label(goal, "goal");
  b.set_label(fail, "fail");
  const Rational inv_n(1, static_cast<long>(n));
  for (std::size_t v = 0; v < n; ++v) {
    b.set_label(1 + v, "v" + std::to_string(v));
    b.add(0, dtmc_action, 1 + v, inv_n);
  }
  std::vector<std::size_t> degree(n, 0);
  std::size_t idx = 1 + n;
  for (const auto& [u, v] : g.edges()) {
    b.set_label(idx, "e" + std::to_string(u) + "_" + std::to_string(v));
    b.add(1 + u, dtmc_action, idx, inv_n);
    b.add(1 + v, dtmc_action, idx, inv_n);
    b.add(idx, dtmc_action, goal, Rational(1));
    ++degree[u];
    ++degree[v];
    ++idx;
  }
  for (std::size_t v = 0; v < n; ++v) {
    Rational rest = 1 - inv_n * static_cast<long>(degree[v]);
    if (rest > 0) b.add(1 + v, dtmc_action, fail, rest);
  }
  Rational lambda(static_cast<long>(k * (k - 1)), static_cast<long>(n * n));
  lambda.canonicalize();
  CliqueInstance out{b.build(), lambda, k + k * (k - 1) / 2 + 3};
  return out;
}

/// Exact maximum clique size by subset enumeration (n <= 16).
inline std::size_t brute_force_max_clique(const UndirectedGraph& g) {
  const std::size_t n = g.vertex_count();
  if (n > 16) throw Unsupported("brute_force_max_clique is limited to 16 vertices");
  std::vector<std::uint32_t> adj(n, 0);
  for (const auto& [u, v] : g.edges()) {
    adj[u] |= 1u << v;
    adj[v] |= 1u << u;
  }
  std::size_t best = n > 0 ? 1 : 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::size_t size = static_cast<std::size_t>(std::popcount(mask));
    if (size <= best) continue;
    bool clique = true;
    for (std::size_t v = 0; v < n && clique; ++v) {
      if ((mask >> v & 1u) && (adj[v] | (1u << v) | ~mask) != ~0u) clique = false;
    }
    if (clique) best = size;
  }
  return best;
}

/// Exhaustive state-minimal witness search. Every subset R of S containing
/// s0 is evaluated once in floating point; subsets whose value lies within
/// 1e-9 of a queried threshold are re-evaluated exactly.
class WitnessOracle {
 public:
  static constexpr std::size_t max_states = 22;

  WitnessOracle(const ReachMdp& m, Direction dir) : model_(m), dir_(dir) {
    require_no_trap(m);
    cols_ = m.transient_states();
    if (cols_.size() > max_states) throw Unsupported("brute-force oracle is limited to 22 states");
    auto full = make_reach_system<double>(m);
    initial_ = full.initial;
    const std::size_t n = cols_.size();
    const std::uint32_t count = 1u << n;
    values_.assign(count, -1.0);
    for (std::uint32_t mask = 0; mask < count; ++mask) {
      if (!(mask >> initial_ & 1u)) continue;
      values_[mask] = masked_value(full, mask);
    }
  }

  /// Minimal |R| with Pr_{M_R}(goal) >= lambda, or nullopt when none exists.
  std::optional<std::size_t> min_witness(const Rational& lambda) const {
    const double lam = lambda.get_d();
    const std::size_t n = cols_.size();
    for (std::size_t k = 1; k <= n; ++k) {
      std::vector<std::uint32_t> close;
      for (std::uint32_t mask = 0; mask < values_.size(); ++mask) {
        if (values_[mask] < 0 || static_cast<std::size_t>(std::popcount(mask)) != k) continue;
        if (values_[mask] >= lam + 1e-9) return k;
        if (values_[mask] > lam - 1e-9) close.push_back(mask);
      }
      for (std::uint32_t mask : close) {
        if (exact_value(mask) >= lambda) return k;
      }
    }
    return std::nullopt;
  }

  /// All state sets (as parent indices) of the given size that witness lambda.
  std::vector<std::vector<std::size_t>> witnesses_of_size(const Rational& lambda, std::size_t k) const {
    std::vector<std::vector<std::size_t>> out;
    for (std::uint32_t mask = 0; mask < values_.size(); ++mask) {
      if (values_[mask] < 0 || static_cast<std::size_t>(std::popcount(mask)) != k) continue;
      if (values_[mask] < lambda.get_d() - 1e-9) continue;
      if (exact_value(mask) >= lambda) out.push_back(states_of(mask));
    }
    return out;
  }

  Rational exact_value(std::uint32_t mask) const {
    auto states = states_of(mask);
    return initial_probability(restrict_states(model_, states).mdp, dir_);
  }

  std::vector<std::size_t> states_of(std::uint32_t mask) const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < cols_.size(); ++c) {
      if (mask >> c & 1u) out.push_back(cols_[c]);
    }
    return out;
  }

 private:
  double masked_value(const ReachSystem<double>& full, std::uint32_t mask) const {
    std::vector<std::size_t> local(full.size(), npos);
    ReachSystem<double> sys;
    for (std::size_t c = 0; c < full.size(); ++c) {
      if (mask >> c & 1u) local[c] = sys.states.size(), sys.states.emplace_back();
    }
    sys.initial = local[initial_];
    for (std::size_t c = 0; c < full.size(); ++c) {
      if (local[c] == npos) continue;
      for (const auto& row : full.states[c]) {
        ActionRow<double> r;
        r.to_goal = row.to_goal;
        for (const auto& [t, p] : row.succ) {
          if (local[t] != npos) r.succ.emplace_back(local[t], p);
        }
        sys.states[local[c]].push_back(std::move(r));
      }
    }
    return solve_reach(sys, dir_).values[sys.initial];
  }

  ReachMdp model_;
  Direction dir_;
  std::vector<std::size_t> cols_;
  std::size_t initial_ = 0;
  std::vector<double> values_;
};

/// Minimal number of states of a witnessing subsystem for Pr^dir >= lambda,
/// s0 always counted; nullopt stands for "no witness exists".
inline std::optional<std::size_t> brute_force_min_witness(const ReachMdp& m, const Rational& lambda,
                                                          Direction dir) {
  return WitnessOracle(m, dir).min_witness(lambda);
}

// ---------------------------------------------------------------------------
// Generators

namespace detail {

/// Random composition of a total D <= 20 into `parts` positive integers,
/// returned as probabilities with denominator D.
inline std::vector<Rational> random_distribution(std::mt19937_64& rng, std::size_t parts) {
  const long lo = static_cast<long>(std::max<std::size_t>(parts, 2));
  const long total = std::uniform_int_distribution<long>(lo, std::max<long>(lo, 20))(rng);
  std::vector<long> cuts;
  std::vector<long> pool;
  for (long i = 1; i < total; ++i) pool.push_back(i);
  std::shuffle(pool.begin(), pool.end(), rng);
  cuts.assign(pool.begin(), pool.begin() + static_cast<long>(parts) - 1);
  std::sort(cuts.begin(), cuts.end());
  std::vector<Rational> out;
  long prev = 0;
  for (long c : cuts) {
    out.emplace_back(c - prev, total);
    prev = c;
  }
  out.emplace_back(total - prev, total);
  for (auto& q : out) q.canonicalize();
  return out;
}

}  // namespace detail

/// Seeded random model with `states` states in S (indices 0..states-1, s0 = 0,
/// goal = states, fail = states + 1), 1..`actions` actions per state and up
/// to `branching` successors per action. A spanning tree from s0 makes every
/// state reachable, and every action has an edge to a higher index or to
/// goal/fail, so no scheduler can stay inside S forever.
inline ReachMdp random_model(std::uint64_t seed, std::size_t states, std::size_t actions,
                            std::size_t branching) {
  if (states == 0 || actions == 0 || branching == 0) throw Error("random_model parameters must be positive");
  std::mt19937_64 rng(seed);
  const std::size_t goal = states, fail = states + 1;
  const ModelKind kind = actions == 1 ? ModelKind::dtmc : ModelKind::mdp;
  const std::string labels = "abcdefghijklmnopqrstuvwxyz";
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  std::vector<std::size_t> action_count(states);
  for (auto& a : action_count) a = pick(1, actions);
  std::vector<std::vector<std::set<std::size_t>>> succ(states);
  for (std::size_t s = 0; s < states; ++s) succ[s].resize(action_count[s]);
  for (std::size_t s = 1; s < states; ++s) {
    std::size_t parent = pick(0, s - 1);
    succ[parent][pick(0, action_count[parent] - 1)].insert(s);
  }
  for (std::size_t s = 0; s < states; ++s) {
    for (auto& targets : succ[s]) {
      // Forward edge: a higher index in S, goal, or fail.
      std::size_t forward = pick(s + 1, states + 1);
      targets.insert(forward);
      std::size_t want = pick(1, branching);
      for (std::size_t tries = 0; targets.size() < want && tries < 4 * branching; ++tries) {
        targets.insert(pick(0, states + 1));
      }
    }
  }
  MdpBuilder b(kind, states + 2, 0, goal, fail);
  for (std::size_t s = 0; s < states; ++s) {
    for (std::size_t a = 0; a < action_count[s]; ++a) {
      std::string label = kind == ModelKind::dtmc ? std::string(dtmc_action) : std::string(1, labels[a % 26]);
      auto probs = detail::random_distribution(rng, succ[s][a].size());
      std::size_t i = 0;
      for (std::size_t t : succ[s][a]) b.add(s, label, t, probs[i++]);
    }
  }
  return b.build();
}

/// Seeded random tree-shaped DTMC: states 0..n-1 form a tree rooted at s0
/// (parent of i is below i); each state also moves to goal and/or fail.
inline ReachMdp random_tree_dtmc(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw Error("random_tree_dtmc needs at least one state");
  std::mt19937_64 rng(seed);
  const std::size_t goal = n, fail = n + 1;
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t s = 1; s < n; ++s) {
    children[std::uniform_int_distribution<std::size_t>(0, s - 1)(rng)].push_back(s);
  }
  MdpBuilder b(ModelKind::dtmc, n + 2, 0, goal, fail);
  std::bernoulli_distribution coin(0.6);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> targets = children[s];
    bool to_goal = coin(rng);
    bool to_fail = coin(rng);
    if (targets.empty() && !to_goal && !to_fail) to_goal = true;
    if (targets.empty() && !to_fail) to_fail = coin(rng);
    if (to_goal) targets.push_back(goal);
    if (to_fail) targets.push_back(fail);
    auto probs = detail::random_distribution(rng, targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) b.add(s, dtmc_action, targets[i], probs[i]);
  }
  return b.build();
}

inline UndirectedGraph random_graph(std::uint64_t seed, std::size_t n, double edge_probability) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(edge_probability);
  UndirectedGraph g(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (coin(rng)) g.add_edge(u, v);
    }
  }
  return g;
}

}  // namespace farkas
