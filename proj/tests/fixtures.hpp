#pragma once

#include <string>

#include "farkas/model.hpp"

namespace fixtures {

inline const std::string d1_text =
    "dtmc\n"
    "states: 4\n"
    "initial: 0\n"
    "goal: 2\n"
    "fail: 3\n"
    "0 - 1 1/2\n"
    "0 - 2 3/10\n"
    "0 - 3 1/5\n"
    "1 - 2 2/5\n"
    "1 - 3 3/5\n";

inline farkas::ReachMdp d1() { return farkas::parse_model(d1_text); }

/// s0 -> goal with probability 1.
inline farkas::ReachMdp sure_goal() {
  return farkas::parse_model("dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 - 1 1\n");
}

/// One state, action a reaches goal, action b reaches fail.
inline farkas::ReachMdp coin_choice() {
  return farkas::parse_model(
      "mdp\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 a 1 1\n0 b 2 1\n");
}

/// The chain s0 -> {a, b}, a -> {goal 4/5, fail 1/5}, b -> {goal 3/5, fail 2/5}.
inline farkas::ReachMdp small_tree() {
  return farkas::parse_model(
      "dtmc\nstates: 5\ninitial: 0\ngoal: 3\nfail: 4\n"
      "0 - 1 1/2\n0 - 2 1/2\n"
      "1 - 3 4/5\n1 - 4 1/5\n"
      "2 - 3 3/5\n2 - 4 2/5\n");
}

/// A small MDP with a cycle and two actions at s0.
inline farkas::ReachMdp cyclic_mdp() {
  return farkas::parse_model(
      "mdp\nstates: 5\ninitial: 0\ngoal: 3\nfail: 4\n"
      "0 a 1 1/2\n0 a 2 1/2\n"
      "0 b 3 1/4\n0 b 1 3/4\n"
      "1 a 0 1/3\n1 a 3 1/3\n1 a 4 1/3\n"
      "2 a 2 1/2\n2 a 3 1/4\n2 a 4 1/4\n"
      "2 b 4 1\n");
}

}  // namespace fixtures
