#pragma once

// Reachability MDPs with distinguished initial, goal and fail states;
// parsing/serialization, structural validation and subsystem construction.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "farkas/error.hpp"
#include "farkas/rational.hpp"

namespace farkas {

enum class ModelKind { mdp, dtmc };
enum class Direction { min, max };
enum class Relation { ge, gt, le, lt };

inline constexpr std::string_view dtmc_action = "-";

struct Transition {
  std::size_t target;
  Rational probability;
  bool operator==(const Transition&) const = default;
};

struct Choice {
  std::string action;
  std::vector<Transition> transitions;
  bool operator==(const Choice&) const = default;
};

struct StateAction {
  std::size_t state;
  std::size_t action;  // position in the state's enabled-action list
  auto operator<=>(const StateAction&) const = default;
};

struct TransitionRef {
  std::size_t state;
  std::size_t action;
  std::size_t target;
  auto operator<=>(const TransitionRef&) const = default;
};

/// Immutable MDP in the shape required by the Farkas framework: states
/// 0..n-1, an initial state, and absorbing goal/fail states. Only states of
/// S (everything but goal and fail) carry enabled actions.
class ReachMdp {
 public:
  ModelKind kind() const { return kind_; }
  std::size_t state_count() const { return choices_.size(); }
  std::size_t initial() const { return initial_; }
  std::size_t goal() const { return goal_; }
  std::size_t fail() const { return fail_; }
  const std::string& label(std::size_t s) const { return labels_[s]; }
  const std::vector<std::string>& labels() const { return labels_; }

  bool is_terminal(std::size_t s) const { return s == goal_ || s == fail_; }

  /// Enabled actions of `s` in input order; empty for goal and fail.
  std::span<const Choice> choices(std::size_t s) const { return choices_[s]; }
  const Choice& choice(std::size_t s, std::size_t a) const { return choices_[s][a]; }

  /// States of S in ascending index order.
  std::vector<std::size_t> transient_states() const {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < state_count(); ++s) {
      if (!is_terminal(s)) out.push_back(s);
    }
    return out;
  }

  /// Enabled state-action pairs in state order, then action order.
  std::vector<StateAction> pairs() const {
    std::vector<StateAction> out;
    for (std::size_t s = 0; s < state_count(); ++s) {
      for (std::size_t a = 0; a < choices_[s].size(); ++a) out.push_back({s, a});
    }
    return out;
  }

  std::size_t transition_count() const {
    std::size_t n = 0;
    for (const auto& cs : choices_) {
      for (const auto& c : cs) n += c.transitions.size();
    }
    return n;
  }

  bool is_dtmc() const {
    for (std::size_t s = 0; s < state_count(); ++s) {
      if (!is_terminal(s) && choices_[s].size() != 1) return false;
    }
    return true;
  }

  Rational probability(std::size_t s, std::size_t a, std::size_t t) const {
    Rational p(0);
    for (const auto& tr : choices_[s][a].transitions) {
      if (tr.target == t) p += tr.probability;
    }
    return p;
  }

  std::optional<std::size_t> find_action(std::size_t s, std::string_view label) const {
    for (std::size_t a = 0; a < choices_[s].size(); ++a) {
      if (choices_[s][a].action == label) return a;
    }
    return std::nullopt;
  }

  ReachMdp relabeled(std::vector<std::string> labels) const {
    if (labels.size() != state_count()) throw DimensionMismatch("label count does not match the states");
    ReachMdp copy = *this;
    copy.labels_ = std::move(labels);
    return copy;
  }

  bool operator==(const ReachMdp&) const = default;

 private:
  friend class MdpBuilder;
  ModelKind kind_ = ModelKind::mdp;
  std::vector<std::string> labels_;
  std::size_t initial_ = 0;
  std::size_t goal_ = 0;
  std::size_t fail_ = 0;
  std::vector<std::vector<Choice>> choices_;
};

/// Structural invariant violation detected while building a model.
class InvariantViolation : public ModelError {
 public:
  InvariantViolation(const std::string& what, std::optional<StateAction> where = std::nullopt)
      : ModelError(what), where_(where) {}
  std::optional<StateAction> where() const { return where_; }

 private:
  std::optional<StateAction> where_;
};

/// Incremental construction of a ReachMdp; build() enforces every invariant.
class MdpBuilder {
 public:
  MdpBuilder(ModelKind kind, std::size_t state_count, std::size_t initial, std::size_t goal,
             std::size_t fail)
      : kind_(kind), initial_(initial), goal_(goal), fail_(fail), choices_(state_count) {
    if (state_count == 0) throw ModelError("model needs at least one state");
    for (std::size_t idx : {initial, goal, fail}) {
      if (idx >= state_count) throw ModelError("state index out of range: " + std::to_string(idx));
    }
    if (goal == fail) throw ModelError("goal and fail must be distinct");
    if (initial == goal || initial == fail) {
      throw ModelError("initial state must differ from goal and fail");
    }
    labels_.reserve(state_count);
    for (std::size_t s = 0; s < state_count; ++s) labels_.push_back(std::to_string(s));
  }

  std::size_t state_count() const { return choices_.size(); }

  MdpBuilder& set_label(std::size_t s, std::string label) {
    labels_.at(s) = std::move(label);
    return *this;
  }

  /// Adds P(src, action, dst) = p. Returns the pair the transition belongs to
  /// (nullopt for the ignored self-loops of goal and fail).
  std::optional<StateAction> add(std::size_t src, std::string_view action, std::size_t dst,
                                 const Rational& p) {
    if (src >= state_count() || dst >= state_count()) {
      throw ModelError("state index out of range");
    }
    if (kind_ == ModelKind::dtmc && action != dtmc_action) {
      throw ModelError("dtmc transitions must use action label '-'");
    }
    if (p <= 0 || p > 1) throw ModelError("probability must lie in (0,1]");
    if (src == goal_ || src == fail_) {
      if (dst != src) {
        throw ModelError(std::string(src == goal_ ? "goal" : "fail") + " not absorbing");
      }
      if (p != 1) throw ModelError("non-stochastic row");
      return std::nullopt;
    }
    auto& cs = choices_[src];
    auto it = std::find_if(cs.begin(), cs.end(), [&](const Choice& c) { return c.action == action; });
    if (it == cs.end()) {
      cs.push_back(Choice{std::string(action), {}});
      it = std::prev(cs.end());
    }
    StateAction where{src, static_cast<std::size_t>(it - cs.begin())};
    for (const auto& tr : it->transitions) {
      if (tr.target == dst) throw InvariantViolation("duplicate transition", where);
    }
    it->transitions.push_back(Transition{dst, p});
    return where;
  }

  ReachMdp build() const {
    for (std::size_t s = 0; s < state_count(); ++s) {
      if (s == goal_ || s == fail_) continue;
      if (choices_[s].empty()) {
        throw InvariantViolation("state " + std::to_string(s) + " has no enabled action");
      }
      if (kind_ == ModelKind::dtmc && choices_[s].size() != 1) {
        throw InvariantViolation("dtmc state with several actions", StateAction{s, 1});
      }
      for (std::size_t a = 0; a < choices_[s].size(); ++a) {
        Rational sum(0);
        for (const auto& tr : choices_[s][a].transitions) sum += tr.probability;
        if (sum != 1) {
          throw InvariantViolation("non-stochastic row at state " + std::to_string(s) +
                                       " action " + choices_[s][a].action + " (sum " +
                                       to_string(sum) + ")",
                                   StateAction{s, a});
        }
      }
    }
    ReachMdp m;
    m.kind_ = kind_;
    m.labels_ = labels_;
    m.initial_ = initial_;
    m.goal_ = goal_;
    m.fail_ = fail_;
    m.choices_ = choices_;
    return m;
  }

 private:
  ModelKind kind_;
  std::size_t initial_, goal_, fail_;
  std::vector<std::vector<Choice>> choices_;
  std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Properties

struct PropertySpec {
  Direction direction = Direction::min;
  Relation relation = Relation::ge;
  Rational lambda;
  bool operator==(const PropertySpec&) const = default;
};

inline bool is_lower_bound(Relation r) { return r == Relation::ge || r == Relation::gt; }
inline bool is_strict(Relation r) { return r == Relation::gt || r == Relation::lt; }

inline bool compare(const Rational& lhs, Relation r, const Rational& rhs) {
  switch (r) {
    case Relation::ge: return lhs >= rhs;
    case Relation::gt: return lhs > rhs;
    case Relation::le: return lhs <= rhs;
    case Relation::lt: return lhs < rhs;
  }
  return false;
}

inline std::string_view to_string(Direction d) { return d == Direction::min ? "min" : "max"; }

inline std::string_view relation_symbol(Relation r) {
  switch (r) {
    case Relation::ge: return ">=";
    case Relation::gt: return ">";
    case Relation::le: return "<=";
    case Relation::lt: return "<";
  }
  return "?";
}

inline std::string_view relation_keyword(Relation r) {
  switch (r) {
    case Relation::ge: return "ge";
    case Relation::gt: return "gt";
    case Relation::le: return "le";
    case Relation::lt: return "lt";
  }
  return "?";
}

inline std::optional<Relation> relation_from_keyword(std::string_view s) {
  if (s == "ge") return Relation::ge;
  if (s == "gt") return Relation::gt;
  if (s == "le") return Relation::le;
  if (s == "lt") return Relation::lt;
  return std::nullopt;
}

inline std::string to_string(const PropertySpec& p) {
  return std::string(to_string(p.direction)) + std::string(relation_symbol(p.relation)) +
         to_string(p.lambda);
}

/// Parses the compact grammar `min>=2/5`, `max<0.3`, ...
inline PropertySpec parse_property(std::string_view text) {
  PropertySpec p;
  if (text.starts_with("min")) {
    p.direction = Direction::min;
  } else if (text.starts_with("max")) {
    p.direction = Direction::max;
  } else {
    throw Error("property must start with min or max: " + std::string(text));
  }
  text.remove_prefix(3);
  if (text.starts_with(">=")) {
    p.relation = Relation::ge;
    text.remove_prefix(2);
  } else if (text.starts_with("<=")) {
    p.relation = Relation::le;
    text.remove_prefix(2);
  } else if (text.starts_with(">")) {
    p.relation = Relation::gt;
    text.remove_prefix(1);
  } else if (text.starts_with("<")) {
    p.relation = Relation::lt;
    text.remove_prefix(1);
  } else {
    throw Error("property relation must be one of >=, >, <=, <");
  }
  auto lambda = try_parse_rational(text);
  if (!lambda) throw Error("malformed threshold: " + std::string(text));
  if (*lambda < 0 || *lambda > 1) throw Error("threshold must lie in [0,1]");
  p.lambda = *lambda;
  return p;
}

/// Memoryless randomized scheduler: per state, a weight for each enabled
/// action (goal and fail carry empty rows).
struct MRScheduler {
  std::vector<std::vector<Rational>> weights;
  bool operator==(const MRScheduler&) const = default;

  static MRScheduler deterministic(const ReachMdp& m, std::span<const std::size_t> action_of) {
    MRScheduler s;
    s.weights.resize(m.state_count());
    for (std::size_t st = 0; st < m.state_count(); ++st) {
      if (m.is_terminal(st)) continue;
      s.weights[st].assign(m.choices(st).size(), Rational(0));
      s.weights[st][action_of[st]] = 1;
    }
    return s;
  }
};

// ---------------------------------------------------------------------------
// Text format

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<std::size_t> parse_index(std::string_view s) {
  if (s.empty() || s.size() > 18) return std::nullopt;
  std::size_t v = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

inline std::string_view strip_comment(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  return line;
}

struct Lines {
  explicit Lines(std::string_view text) : text_(text) {}
  bool next(std::string_view& line) {
    if (pos_ > text_.size()) return false;
    auto end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++number_;
    return true;
  }
  std::size_t number() const { return number_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t number_ = 0;
};

}  // namespace detail

/// Parses the line-based model format (`mdp`/`dtmc` header, `states:`,
/// `initial:`, `goal:`, `fail:`, then `<src> <action> <dst> <prob>` lines).
inline ReachMdp parse_model(std::string_view text) {
  detail::Lines lines(text);
  std::string_view raw;
  std::optional<ModelKind> kind;
  std::optional<std::size_t> states, initial, goal, fail;
  std::optional<MdpBuilder> builder;
  std::map<StateAction, std::size_t> first_line;

  while (lines.next(raw)) {
    auto tokens = detail::split_ws(detail::strip_comment(raw));
    if (tokens.empty()) continue;
    const std::size_t ln = lines.number();
    if (!kind) {
      if (tokens.size() == 1 && tokens[0] == "mdp") {
        kind = ModelKind::mdp;
      } else if (tokens.size() == 1 && tokens[0] == "dtmc") {
        kind = ModelKind::dtmc;
      } else {
        throw ParseError(ln, "expected 'mdp' or 'dtmc'");
      }
      continue;
    }
    if (tokens[0].ends_with(":")) {
      if (builder) throw ParseError(ln, "header line after transitions");
      if (tokens.size() != 2) throw ParseError(ln, "expected '<key>: <value>'");
      auto value = detail::parse_index(tokens[1]);
      if (!value) throw ParseError(ln, "expected a non-negative integer");
      auto key = tokens[0].substr(0, tokens[0].size() - 1);
      std::optional<std::size_t>* slot = nullptr;
      if (key == "states") slot = &states;
      if (key == "initial") slot = &initial;
      if (key == "goal") slot = &goal;
      if (key == "fail") slot = &fail;
      if (!slot) throw ParseError(ln, "unknown header key '" + std::string(key) + "'");
      if (*slot) throw ParseError(ln, "duplicate header key '" + std::string(key) + "'");
      *slot = *value;
      continue;
    }
    if (!builder) {
      if (!states || !initial || !goal || !fail) {
        throw ParseError(ln, "states, initial, goal and fail must be declared before transitions");
      }
      try {
        builder.emplace(*kind, *states, *initial, *goal, *fail);
      } catch (const ModelError& e) {
        throw ParseError(ln, e.what());
      }
    }
    if (tokens.size() != 4) throw ParseError(ln, "expected '<src> <action> <dst> <prob>'");
    auto src = detail::parse_index(tokens[0]);
    auto dst = detail::parse_index(tokens[2]);
    auto prob = try_parse_rational(tokens[3]);
    if (!src || !dst) throw ParseError(ln, "malformed state index");
    if (!prob) throw ParseError(ln, "malformed probability '" + std::string(tokens[3]) + "'");
    try {
      if (auto where = builder->add(*src, tokens[1], *dst, *prob)) first_line.emplace(*where, ln);
    } catch (const ModelError& e) {
      throw ParseError(ln, e.what());
    }
  }
  if (!kind) throw ParseError(lines.number(), "empty model");
  if (!builder) {
    if (!states || !initial || !goal || !fail) {
      throw ParseError(lines.number(), "incomplete header");
    }
    try {
      builder.emplace(*kind, *states, *initial, *goal, *fail);
    } catch (const ModelError& e) {
      throw ParseError(lines.number(), e.what());
    }
  }
  try {
    return builder->build();
  } catch (const InvariantViolation& e) {
    std::size_t ln = lines.number();
    if (auto w = e.where()) {
      if (auto it = first_line.find(*w); it != first_line.end()) ln = it->second;
    }
    throw ParseError(ln, e.what());
  }
}

inline std::string serialize_model(const ReachMdp& m) {
  std::ostringstream out;
  out << (m.kind() == ModelKind::dtmc ? "dtmc" : "mdp") << '\n';
  out << "states: " << m.state_count() << '\n';
  out << "initial: " << m.initial() << '\n';
  out << "goal: " << m.goal() << '\n';
  out << "fail: " << m.fail() << '\n';
  for (std::size_t s = 0; s < m.state_count(); ++s) {
    for (const auto& c : m.choices(s)) {
      for (const auto& tr : c.transitions) {
        out << s << ' ' << c.action << ' ' << tr.target << ' ' << to_string(tr.probability) << '\n';
      }
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  struct Violation {
    std::string check;
    std::vector<std::size_t> states;
  };
  bool ok = true;
  std::vector<Violation> violations;
};

inline std::vector<bool> reachable_from(const ReachMdp& m, std::size_t start) {
  std::vector<bool> seen(m.state_count(), false);
  std::deque<std::size_t> queue{start};
  seen[start] = true;
  while (!queue.empty()) {
    std::size_t s = queue.front();
    queue.pop_front();
    for (const auto& c : m.choices(s)) {
      for (const auto& tr : c.transitions) {
        if (!seen[tr.target]) {
          seen[tr.target] = true;
          queue.push_back(tr.target);
        }
      }
    }
  }
  return seen;
}

/// Greatest fixed point of Z -> {s in Z | some action keeps all mass in Z}.
/// Non-empty exactly when some scheduler avoids goal and fail forever.
inline std::vector<std::size_t> trapping_states(const ReachMdp& m) {
  std::vector<bool> in_z(m.state_count(), false);
  for (std::size_t s : m.transient_states()) in_z[s] = true;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < m.state_count(); ++s) {
      if (!in_z[s]) continue;
      bool stays = std::any_of(m.choices(s).begin(), m.choices(s).end(), [&](const Choice& c) {
        return std::all_of(c.transitions.begin(), c.transitions.end(),
                           [&](const Transition& t) { return in_z[t.target]; });
      });
      if (!stays) {
        in_z[s] = false;
        changed = true;
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < m.state_count(); ++s) {
    if (in_z[s]) out.push_back(s);
  }
  return out;
}

inline ValidationReport validate(const ReachMdp& m) {
  ValidationReport report;
  auto seen = reachable_from(m, m.initial());
  std::vector<std::size_t> unreachable;
  for (std::size_t s : m.transient_states()) {
    if (!seen[s]) unreachable.push_back(s);
  }
  if (!unreachable.empty()) report.violations.push_back({"unreachable", std::move(unreachable)});
  if (auto trap = trapping_states(m); !trap.empty()) {
    report.violations.push_back({"avoids-goal-and-fail", std::move(trap)});
  }
  report.ok = report.violations.empty();
  return report;
}

inline void require_validated(const ReachMdp& m) {
  auto report = validate(m);
  if (!report.ok) {
    std::string msg = "model not validated:";
    for (const auto& v : report.violations) {
      msg += " " + v.check + " {";
      for (std::size_t i = 0; i < v.states.size(); ++i) {
        msg += (i ? "," : "") + std::to_string(v.states[i]);
      }
      msg += "}";
    }
    throw ModelError(msg);
  }
}

// ---------------------------------------------------------------------------
// Transformations

namespace detail {

/// Copies the states flagged in `keep` (in index order) and lets `emit` add
/// the transitions of each kept state through the remapped builder.
template <class Emit>
ReachMdp remap_states(const ReachMdp& m, const std::vector<bool>& keep,
                      std::vector<std::size_t>& parent_of, Emit&& emit) {
  std::vector<std::size_t> new_index(m.state_count(), static_cast<std::size_t>(-1));
  parent_of.clear();
  for (std::size_t s = 0; s < m.state_count(); ++s) {
    if (keep[s]) {
      new_index[s] = parent_of.size();
      parent_of.push_back(s);
    }
  }
  MdpBuilder b(m.kind(), parent_of.size(), new_index[m.initial()], new_index[m.goal()],
               new_index[m.fail()]);
  for (std::size_t i = 0; i < parent_of.size(); ++i) b.set_label(i, m.label(parent_of[i]));
  for (std::size_t s : parent_of) {
    if (!m.is_terminal(s)) emit(b, s, new_index);
  }
  return b.build();
}

}  // namespace detail

/// Restriction to states reachable from s0; goal and fail are always kept.
inline ReachMdp prune_unreachable(const ReachMdp& m) {
  auto keep = reachable_from(m, m.initial());
  keep[m.goal()] = keep[m.fail()] = true;
  std::vector<std::size_t> parent_of;
  return detail::remap_states(m, keep, parent_of, [&](MdpBuilder& b, std::size_t s, const auto& idx) {
    for (const auto& c : m.choices(s)) {
      for (const auto& tr : c.transitions) b.add(idx[s], c.action, idx[tr.target], tr.probability);
    }
  });
}

/// The property about fail equivalent to `p` about goal once goal and fail
/// are exchanged: Pr^max(goal) <= l iff Pr^min(fail) >= 1 - l, and so on.
/// Relies on goal or fail being reached almost surely.
inline PropertySpec swap_property(const PropertySpec& p) {
  PropertySpec q;
  q.direction = p.direction == Direction::min ? Direction::max : Direction::min;
  switch (p.relation) {
    case Relation::ge: q.relation = Relation::le; break;
    case Relation::gt: q.relation = Relation::lt; break;
    case Relation::le: q.relation = Relation::ge; break;
    case Relation::lt: q.relation = Relation::gt; break;
  }
  q.lambda = 1 - p.lambda;
  return q;
}

/// Exchanges the roles of goal and fail.
inline ReachMdp swap_goal_fail(const ReachMdp& m) {
  MdpBuilder b(m.kind(), m.state_count(), m.initial(), m.fail(), m.goal());
  for (std::size_t s = 0; s < m.state_count(); ++s) {
    b.set_label(s, m.label(s));
    for (const auto& c : m.choices(s)) {
      for (const auto& tr : c.transitions) b.add(s, c.action, tr.target, tr.probability);
    }
  }
  return b.build();
}

/// A subsystem M_R together with the parent bookkeeping.
struct Subsystem {
  ReachMdp mdp;
  std::vector<StateAction> kept_pairs;     // parent indices, ascending
  std::vector<std::size_t> parent_state;   // subsystem index -> parent index

  /// |S'|: retained states other than goal and fail.
  std::size_t state_count() const { return mdp.transient_states().size(); }
};

/// Builds M_R for a set R of enabled pairs. Kept pairs keep their mass into
/// retained non-fail states, the rest of their mass goes to fail; non-kept
/// pairs of retained states move to fail with probability 1. s0, goal and
/// fail are always retained.
inline Subsystem restrict(const ReachMdp& m, std::span<const StateAction> r) {
  std::vector<std::vector<bool>> kept(m.state_count());
  for (std::size_t s = 0; s < m.state_count(); ++s) kept[s].assign(m.choices(s).size(), false);
  std::vector<bool> keep_state(m.state_count(), false);
  for (const auto& p : r) {
    if (p.state >= m.state_count() || p.action >= m.choices(p.state).size()) {
      throw ModelError("restrict: pair is not enabled in the model");
    }
    kept[p.state][p.action] = true;
    keep_state[p.state] = true;
  }
  keep_state[m.initial()] = keep_state[m.goal()] = keep_state[m.fail()] = true;

  Subsystem sub;
  sub.mdp = detail::remap_states(
      m, keep_state, sub.parent_state, [&](MdpBuilder& b, std::size_t s, const auto& idx) {
        const std::size_t fail = idx[m.fail()];
        for (std::size_t a = 0; a < m.choices(s).size(); ++a) {
          const auto& c = m.choice(s, a);
          Rational to_fail(0);
          for (const auto& tr : c.transitions) {
            if (kept[s][a] && keep_state[tr.target] && tr.target != m.fail()) {
              b.add(idx[s], c.action, idx[tr.target], tr.probability);
            } else {
              to_fail += tr.probability;
            }
          }
          if (to_fail > 0) b.add(idx[s], c.action, fail, to_fail);
        }
      });
  for (std::size_t s = 0; s < m.state_count(); ++s) {
    for (std::size_t a = 0; a < kept[s].size(); ++a) {
      if (kept[s][a]) sub.kept_pairs.push_back({s, a});
    }
  }
  return sub;
}

/// M_R for a state set R, expanded to every enabled action of each state.
inline Subsystem restrict_states(const ReachMdp& m, std::span<const std::size_t> states) {
  std::vector<StateAction> pairs;
  for (std::size_t s : states) {
    if (s >= m.state_count() || m.is_terminal(s)) {
      throw ModelError("restrict: only states of S can be kept");
    }
    for (std::size_t a = 0; a < m.choices(s).size(); ++a) pairs.push_back({s, a});
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return restrict(m, pairs);
}

/// Subsystem that keeps the given states with all their actions but only the
/// listed transitions; every other transition of a kept state goes to fail.
inline Subsystem restrict_transitions(const ReachMdp& m, std::span<const std::size_t> states,
                                      std::span<const TransitionRef> transitions) {
  std::vector<bool> keep_state(m.state_count(), false);
  for (std::size_t s : states) keep_state.at(s) = true;
  keep_state[m.initial()] = keep_state[m.goal()] = keep_state[m.fail()] = true;
  std::vector<TransitionRef> kept(transitions.begin(), transitions.end());
  std::sort(kept.begin(), kept.end());
  auto is_kept = [&](std::size_t s, std::size_t a, std::size_t t) {
    return std::binary_search(kept.begin(), kept.end(), TransitionRef{s, a, t});
  };
  Subsystem sub;
  sub.mdp = detail::remap_states(
      m, keep_state, sub.parent_state, [&](MdpBuilder& b, std::size_t s, const auto& idx) {
        for (std::size_t a = 0; a < m.choices(s).size(); ++a) {
          const auto& c = m.choice(s, a);
          Rational to_fail(0);
          for (const auto& tr : c.transitions) {
            if (keep_state[tr.target] && tr.target != m.fail() && is_kept(s, a, tr.target)) {
              b.add(idx[s], c.action, idx[tr.target], tr.probability);
            } else {
              to_fail += tr.probability;
            }
          }
          if (to_fail > 0) b.add(idx[s], c.action, idx[m.fail()], to_fail);
        }
      });
  for (std::size_t s = 0; s < m.state_count(); ++s) {
    if (!keep_state[s]) continue;
    for (std::size_t a = 0; a < m.choices(s).size(); ++a) sub.kept_pairs.push_back({s, a});
  }
  return sub;
}

inline void check_scheduler(const ReachMdp& m, const MRScheduler& sched) {
  if (sched.weights.size() != m.state_count()) {
    throw DimensionMismatch("scheduler has the wrong number of states");
  }
  for (std::size_t s : m.transient_states()) {
    const auto& w = sched.weights[s];
    if (w.size() != m.choices(s).size()) {
      throw ModelError("scheduler support outside the enabled actions of state " + std::to_string(s));
    }
    Rational sum(0);
    for (const auto& x : w) {
      if (x < 0) throw ModelError("negative scheduler weight at state " + std::to_string(s));
      sum += x;
    }
    if (sum != 1) throw ModelError("scheduler weights of state " + std::to_string(s) + " do not sum to 1");
  }
}

/// DTMC with P_D(s,t) = sum_a P(s,a,t) * sched(s)(a).
inline ReachMdp induced_dtmc(const ReachMdp& m, const MRScheduler& sched) {
  check_scheduler(m, sched);
  MdpBuilder b(ModelKind::dtmc, m.state_count(), m.initial(), m.goal(), m.fail());
  for (std::size_t s = 0; s < m.state_count(); ++s) {
    b.set_label(s, m.label(s));
    if (m.is_terminal(s)) continue;
    std::vector<std::pair<std::size_t, Rational>> row;
    for (std::size_t a = 0; a < m.choices(s).size(); ++a) {
      const Rational& w = sched.weights[s][a];
      if (w == 0) continue;
      for (const auto& tr : m.choice(s, a).transitions) {
        auto it = std::find_if(row.begin(), row.end(), [&](const auto& e) { return e.first == tr.target; });
        if (it == row.end()) {
          row.emplace_back(tr.target, w * tr.probability);
        } else {
          it->second += w * tr.probability;
        }
      }
    }
    for (const auto& [t, p] : row) b.add(s, dtmc_action, t, p);
  }
  return b.build();
}

// ---------------------------------------------------------------------------
// Subsystem text format: the model format plus trailing comment lines.

inline std::string serialize_subsystem(const Subsystem& sub, const ReachMdp& parent) {
  std::string out = serialize_model(sub.mdp);
  for (const auto& p : sub.kept_pairs) {
    out += "# kept-pair " + std::to_string(p.state) + " " + parent.choice(p.state, p.action).action + "\n";
  }
  for (std::size_t i = 0; i < sub.parent_state.size(); ++i) {
    out += "# parent-state " + std::to_string(i) + " " + std::to_string(sub.parent_state[i]) + "\n";
  }
  return out;
}

/// Reads back a subsystem file. Kept pairs are resolved against `parent`.
inline Subsystem parse_subsystem(std::string_view text, const ReachMdp& parent) {
  Subsystem sub;
  sub.mdp = parse_model(text);
  sub.parent_state.assign(sub.mdp.state_count(), static_cast<std::size_t>(-1));
  detail::Lines lines(text);
  std::string_view raw;
  while (lines.next(raw)) {
    auto hash = raw.find('#');
    if (hash == std::string_view::npos) continue;
    auto tokens = detail::split_ws(raw.substr(hash + 1));
    if (tokens.size() == 3 && tokens[0] == "kept-pair") {
      auto s = detail::parse_index(tokens[1]);
      if (!s || *s >= parent.state_count()) throw ParseError(lines.number(), "bad kept-pair state");
      auto a = parent.find_action(*s, tokens[2]);
      if (!a) throw ParseError(lines.number(), "kept-pair action not enabled in parent");
      sub.kept_pairs.push_back({*s, *a});
    } else if (tokens.size() == 3 && tokens[0] == "parent-state") {
      auto i = detail::parse_index(tokens[1]);
      auto p = detail::parse_index(tokens[2]);
      if (!i || !p || *i >= sub.parent_state.size() || *p >= parent.state_count()) {
        throw ParseError(lines.number(), "bad parent-state line");
      }
      sub.parent_state[*i] = *p;
    }
  }
  for (std::size_t i = 0; i < sub.parent_state.size(); ++i) {
    if (sub.parent_state[i] == static_cast<std::size_t>(-1)) {
      throw ParseError(lines.number(), "missing parent-state for state " + std::to_string(i));
    }
  }
  std::vector<std::string> labels;
  for (std::size_t p : sub.parent_state) labels.push_back(parent.label(p));
  sub.mdp = sub.mdp.relabeled(std::move(labels));
  return sub;
}

}  // namespace farkas
