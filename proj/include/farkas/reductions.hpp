#pragma once

// Transition-minimal and size-minimal witnesses reduced to state-minimal
// witnesses of a derived model in which every relevant transition becomes a
// state. Transitions into fail never help a witness, so they are not
// materialized and are not counted.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "farkas/linsys.hpp"
#include "farkas/model.hpp"
#include "farkas/rational.hpp"

namespace farkas {

enum class ReductionKind { size_to_state, transition_to_state };

struct ReducedModel {
  ReductionKind kind = ReductionKind::size_to_state;
  ReachMdp mdp;
  std::vector<std::size_t> origin_state;      // derived index -> original state, or npos
  std::vector<TransitionRef> origin_triple;   // derived index -> transition (valid when origin_state is npos)
  std::vector<bool> is_triple;
};

/// Transitions (s, a, t) of the model with t != fail, in state, action,
/// listing order.
inline std::vector<TransitionRef> useful_transitions(const ReachMdp& m) {
  std::vector<TransitionRef> out;
  for (std::size_t s : m.transient_states()) {
    for (std::size_t a = 0; a < m.choices(s).size(); ++a) {
      for (const auto& tr : m.choice(s, a).transitions) {
        if (tr.target != m.fail()) out.push_back({s, a, tr.target});
      }
    }
  }
  return out;
}

namespace detail {

inline std::string triple_label(const ReachMdp& m, const TransitionRef& t) {
  return m.label(t.state) + ":" + m.choice(t.state, t.action).action + ":" + m.label(t.target);
}

inline std::size_t triple_index(const std::vector<TransitionRef>& triples, const TransitionRef& t) {
  auto it = std::lower_bound(triples.begin(), triples.end(), t);
  return static_cast<std::size_t>(it - triples.begin());
}

}  // namespace detail

/// Size reduction: keeps every original state and inserts a state on each
/// non-fail transition, s --a,p--> (s,a,t) --1--> t. A state-minimal
/// witness of the result has |S'| + |T'| states.
inline ReducedModel reduce_size_to_state(const ReachMdp& m) {
  const auto triples = useful_transitions(m);
  const std::size_t n = m.state_count();
  ReducedModel r;
  r.kind = ReductionKind::size_to_state;
  r.origin_state.resize(n + triples.size(), npos);
  r.origin_triple.resize(n + triples.size(), TransitionRef{npos, npos, npos});
  r.is_triple.assign(n + triples.size(), false);
  MdpBuilder b(m.kind(), n + triples.size(), m.initial(), m.goal(), m.fail());
  for (std::size_t s = 0; s < n; ++s) {
    r.origin_state[s] = s;
    b.set_label(s, m.label(s));
  }
  for (std::size_t i = 0; i < triples.size(); ++i) {
    r.origin_triple[n + i] = triples[i];
    r.is_triple[n + i] = true;
    b.set_label(n + i, detail::triple_label(m, triples[i]));
  }
  for (std::size_t s : m.transient_states()) {
    for (std::size_t a = 0; a < m.choices(s).size(); ++a) {
      const auto& c = m.choice(s, a);
      for (const auto& tr : c.transitions) {
        if (tr.target == m.fail()) {
          b.add(s, c.action, m.fail(), tr.probability);
        } else {
          b.add(s, c.action, n + detail::triple_index(triples, {s, a, tr.target}), tr.probability);
        }
      }
    }
  }
  for (std::size_t i = 0; i < triples.size(); ++i) {
    b.add(n + i, m.choice(triples[i].state, triples[i].action).action, triples[i].target, Rational(1));
  }
  r.mdp = b.build();
  return r;
}

/// Transition reduction: states are s0, goal, fail and one state per
/// non-fail transition. From (s,a,t) with t in S the actions of t lead to
/// the transitions leaving t; (s,a,goal) moves to goal. A state-minimal
/// witness of the result has 1 + |T'| states.
inline ReducedModel reduce_transition_to_state(const ReachMdp& m) {
  const auto triples = useful_transitions(m);
  const std::size_t base = 3;  // s0, goal, fail
  const std::size_t n = base + triples.size();
  ReducedModel r;
  r.kind = ReductionKind::transition_to_state;
  r.origin_state.assign(n, npos);
  r.origin_triple.assign(n, TransitionRef{npos, npos, npos});
  r.is_triple.assign(n, false);
  r.origin_state[0] = m.initial();
  r.origin_state[1] = m.goal();
  r.origin_state[2] = m.fail();
  MdpBuilder b(m.kind(), n, 0, 1, 2);
  b.set_label(0, m.label(m.initial()));
  b.set_label(1, m.label(m.goal()));
  b.set_label(2, m.label(m.fail()));
  for (std::size_t i = 0; i < triples.size(); ++i) {
    r.origin_triple[base + i] = triples[i];
    r.is_triple[base + i] = true;
    b.set_label(base + i, detail::triple_label(m, triples[i]));
  }
  // Derived state d behaves like original state t: emit t's choices.
  auto emit_like = [&](std::size_t d, std::size_t t) {
    for (std::size_t a = 0; a < m.choices(t).size(); ++a) {
      const auto& c = m.choice(t, a);
      for (const auto& tr : c.transitions) {
        if (tr.target == m.fail()) {
          b.add(d, c.action, 2, tr.probability);
        } else {
          b.add(d, c.action, base + detail::triple_index(triples, {t, a, tr.target}), tr.probability);
        }
      }
    }
  };
  emit_like(0, m.initial());
  const std::string into_goal = m.is_dtmc() ? std::string(dtmc_action) : "goal";
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (triples[i].target == m.goal()) {
      b.add(base + i, into_goal, 1, Rational(1));
    } else {
      emit_like(base + i, triples[i].target);
    }
  }
  r.mdp = b.build();
  return r;
}

/// A witness expressed as kept states and kept transitions of the original
/// model.
struct TransitionWitness {
  std::vector<std::size_t> states;           // ascending, s0 included
  std::vector<TransitionRef> transitions;    // ascending
  Subsystem subsystem;
  Rational probability;

  std::size_t transition_count() const { return transitions.size(); }
  std::size_t size() const { return states.size() + transitions.size(); }
};

/// Maps a subsystem of the derived model back to the original model. Only
/// transitions whose source is kept and whose target is goal or kept
/// survive; the kept states are s0 plus the sources and S-targets of those.
inline TransitionWitness map_back(const ReachMdp& m, const ReducedModel& r, const Subsystem& derived, Direction dir) {
  std::vector<bool> kept_derived(r.mdp.state_count(), false);
  for (std::size_t p : derived.parent_state) kept_derived[p] = true;
  std::vector<bool> kept_state(m.state_count(), false);
  kept_state[m.initial()] = true;
  std::vector<TransitionRef> candidates;
  for (std::size_t d = 0; d < r.mdp.state_count(); ++d) {
    if (!kept_derived[d]) continue;
    if (r.is_triple[d]) {
      candidates.push_back(r.origin_triple[d]);
    } else if (r.kind == ReductionKind::size_to_state && !m.is_terminal(r.origin_state[d])) {
      kept_state[r.origin_state[d]] = true;
    }
  }
  TransitionWitness w;
  if (r.kind == ReductionKind::size_to_state) {
    for (const auto& t : candidates) {
      if (kept_state[t.state] && (t.target == m.goal() || kept_state[t.target])) w.transitions.push_back(t);
    }
  } else {
    // The derived model carries the source information in the triples:
    // (s,a,t) is usable when s is s0 or some kept triple ends in s.
    std::vector<bool> entered(m.state_count(), false);
    entered[m.initial()] = true;
    for (const auto& t : candidates) {
      if (t.target != m.goal()) entered[t.target] = true;
    }
    for (const auto& t : candidates) {
      if (entered[t.state]) w.transitions.push_back(t);
    }
  }
  std::sort(w.transitions.begin(), w.transitions.end());
  std::vector<bool> final_state(m.state_count(), false);
  final_state[m.initial()] = true;
  for (const auto& t : w.transitions) {
    final_state[t.state] = true;
    if (t.target != m.goal()) final_state[t.target] = true;
  }
  for (std::size_t s = 0; s < m.state_count(); ++s) {
    if (final_state[s]) w.states.push_back(s);
  }
  w.subsystem = restrict_transitions(m, w.states, w.transitions);
  w.probability = initial_probability(w.subsystem.mdp, dir);
  return w;
}

}  // namespace farkas
