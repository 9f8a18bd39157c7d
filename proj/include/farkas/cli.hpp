#pragma once

// Command-line front end. Exit codes: 0 success, 1 input or usage error,
// 2 rejected (verification or validation), 3 property false.

#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "farkas/certificates.hpp"
#include "farkas/error.hpp"
#include "farkas/hardness.hpp"
#include "farkas/linsys.hpp"
#include "farkas/model.hpp"
#include "farkas/reductions.hpp"
#include "farkas/treedp.hpp"
#include "farkas/witness.hpp"

namespace farkas::cli {

enum ExitCode : int { ok = 0, input_error = 1, rejected = 2, property_false = 3 };

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write " + path);
  file << text;
  if (!file) throw Error("cannot write " + path);
}

inline std::string format_value(const Rational& q, const std::optional<int>& decimal) {
  return decimal ? to_decimal(q, *decimal) : to_string(q);
}

inline std::string state_list(const ReachMdp& m, const std::vector<std::size_t>& states) {
  std::string out;
  for (std::size_t s : states) out += ' ' + m.label(s);
  return out;
}

inline FarkasCertificate read_certificate(const std::string& text, const ReachMdp& m) {
  const std::size_t cols = m.transient_states().size();
  const std::size_t rows = m.pairs().size();
  auto first = parse_certificate(text, std::max(cols, rows));
  if (text.find("dimension:") != std::string::npos) return first;
  return parse_certificate(text, first.kind == CertificateKind::z ? cols : rows);
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Farkas certificates and minimal witnessing subsystems for MDP reachability", "farkas"};
  app.require_subcommand(1);
  app.fallthrough();

  bool swap = false;
  std::optional<int> decimal;
  app.add_flag("--swap-goal-fail", swap, "Exchange goal and fail (upper bounds become lower bounds)");
  app.add_option("--decimal", decimal, "Print values as decimals with this many digits")->check(CLI::Range(1, 200));

  std::string model_path, second_path, out_path, prop_text, dir_text, method = "exact", flavor_text, lambda_text,
      reduce_to, milp_path;
  std::size_t iters = 2, clique_k = 0;
  double budget = 0.0;

  auto* probability = app.add_subcommand("probability", "Print Pr^min or Pr^max of reaching goal from s0");
  probability->add_option("model", model_path, "Model file")->required();
  probability->add_option("--dir", dir_text, "min or max")->required()->check(CLI::IsMember({"min", "max"}));

  auto* certify = app.add_subcommand("certify", "Emit a verified Farkas certificate for a property");
  certify->add_option("model", model_path, "Model file")->required();
  certify->add_option("--prop", prop_text, "Property such as min>=2/5")->required();
  certify->add_option("-o,--output", out_path, "Certificate file (stdout when omitted)");

  auto* verify = app.add_subcommand("verify", "Check a certificate exactly");
  verify->add_option("model", model_path, "Model file")->required();
  verify->add_option("certificate", second_path, "Certificate file")->required();

  auto* witness = app.add_subcommand("witness", "Compute a witnessing subsystem for a lower bound");
  witness->add_option("model", model_path, "Model file")->required();
  witness->add_option("--prop", prop_text, "Property such as min>=3/10")->required();
  witness->add_option("--method", method, "qs or exact")->check(CLI::IsMember({"qs", "exact"}));
  witness->add_option("--iters", iters, "QS iterations")->check(CLI::Range(1, 1000));
  witness->add_option("--budget", budget, "Time budget in seconds for the exact method (0: none)")
      ->check(CLI::NonNegativeNumber);
  witness->add_option("--flavor", flavor_text, "Polytope flavor, min or max (must match the property)")
      ->check(CLI::IsMember({"min", "max"}));
  witness->add_option("--milp", milp_path, "Also write the minimal-witness MILP in CPLEX-LP format");
  witness->add_option("-o,--output", out_path, "Subsystem file (stdout when omitted)");

  auto* tree = app.add_subcommand("tree-witness", "Minimal witness of a tree-shaped DTMC");
  tree->add_option("model", model_path, "Model file")->required();
  tree->add_option("--lambda", lambda_text, "Threshold")->required();
  tree->add_option("-o,--output", out_path, "Subsystem file (stdout when omitted)");

  auto* reduce = app.add_subcommand("reduce", "Derive the model whose state-minimal witnesses are size- or transition-minimal");
  reduce->add_option("model", model_path, "Model file")->required();
  reduce->add_option("--to", reduce_to, "state-from-size or state-from-transition")
      ->required()
      ->check(CLI::IsMember({"state-from-size", "state-from-transition"}));
  reduce->add_option("-o,--output", out_path, "Output file (stdout when omitted)");

  auto* clique = app.add_subcommand("gen-clique", "Witness instance encoding a clique question");
  clique->add_option("graph", model_path, "Graph file")->required();
  clique->add_option("k", clique_k, "Clique size")->required();
  clique->add_option("-o,--output", out_path, "Output file (stdout when omitted)");

  auto* validate_cmd = app.add_subcommand("validate", "Check reachability and the absence of trapping states");
  validate_cmd->add_option("model", model_path, "Model file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : input_error;
  }

  auto load_model = [&]() {
    auto m = parse_model(detail::read_file(model_path));
    return swap ? swap_goal_fail(m) : m;
  };
  auto load_property = [&]() {
    auto p = parse_property(prop_text);
    return swap ? swap_property(p) : p;
  };

  try {
    if (*probability) {
      auto m = load_model();
      const Direction dir = dir_text == "min" ? Direction::min : Direction::max;
      const auto fs = build_farkas_system(m);
      out << detail::format_value(reach_probabilities(m, dir)[fs.initial_col], decimal) << '\n';
      return ok;
    }
    if (*certify) {
      auto m = load_model();
      auto cert = generate_certificate(m, load_property());
      detail::emit(out_path, serialize_certificate(cert), out);
      return ok;
    }
    if (*verify) {
      auto m = load_model();
      VerificationReport report;
      try {
        report = verify_certificate(m, detail::read_certificate(detail::read_file(second_path), m));
      } catch (const DimensionMismatch& e) {
        out << "rejected\n" << e.what() << '\n';
        return rejected;
      }
      if (report.ok) {
        out << "ok\n";
        return ok;
      }
      out << "rejected\n";
      for (const auto& v : report.violations) out << v << '\n';
      return rejected;
    }
    if (*witness) {
      auto m = load_model();
      auto p = load_property();
      if (p.relation != Relation::ge) {
        throw Error("witnesses are defined for non-strict lower bounds (>=) only; got " + to_string(p) +
                    (is_lower_bound(p.relation) ? "" : " (use --swap-goal-fail for upper bounds)"));
      }
      PolytopeSpec spec{p.direction == Direction::min ? PolytopeFlavor::min_nonneg : PolytopeFlavor::max, p.lambda};
      if (!flavor_text.empty() && flavor_text != to_string(spec.flavor)) {
        throw Error("--flavor " + flavor_text + " does not match the property direction");
      }
      WitnessResult w = method == "qs" ? qs_heuristic(m, spec, iters)
                                       : exact_minimal_witness(m, spec, MilpOptions{budget, 0});
      if (!milp_path.empty()) detail::emit(milp_path, export_milp(m, spec), out);
      detail::emit(out_path, serialize_witness(w, m), out);
      return ok;
    }
    if (*tree) {
      auto m = load_model();
      auto lambda = try_parse_rational(lambda_text);
      if (!lambda || *lambda < 0 || *lambda > 1) throw Error("threshold must be a rational in [0,1]");
      auto w = tree_minimal_witness(m, *lambda);
      detail::emit(out_path, serialize_witness(w, m), out);
      return ok;
    }
    if (*reduce) {
      auto m = load_model();
      require_validated(m);
      auto r = reduce_to == "state-from-size" ? reduce_size_to_state(m) : reduce_transition_to_state(m);
      std::ostringstream text;
      text << serialize_model(r.mdp);
      for (std::size_t d = 0; d < r.mdp.state_count(); ++d) {
        if (r.is_triple[d]) {
          const auto& t = r.origin_triple[d];
          text << "# triple " << d << ' ' << t.state << ' ' << m.choice(t.state, t.action).action << ' ' << t.target
               << '\n';
        } else {
          text << "# origin " << d << ' ' << r.origin_state[d] << '\n';
        }
      }
      detail::emit(out_path, text.str(), out);
      return ok;
    }
    if (*clique) {
      auto g = parse_graph(detail::read_file(model_path));
      auto inst = clique_to_witness_instance(g, clique_k);
      detail::emit(out_path,
                   serialize_model(inst.model) + "# lambda " + to_string(inst.lambda) + "\n# kprime " +
                       std::to_string(inst.kprime) + "\n",
                   out);
      return ok;
    }
    if (*validate_cmd) {
      auto m = load_model();
      auto report = validate(m);
      if (report.ok) {
        out << "ok\n";
        return ok;
      }
      for (const auto& v : report.violations) out << v.check << ':' << detail::state_list(m, v.states) << '\n';
      return rejected;
    }
  } catch (const PropertyFalse& e) {
    err << "property false: " << e.what() << '\n';
    return property_false;
  } catch (const Infeasible& e) {
    err << "property false: " << e.what() << '\n';
    return property_false;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return input_error;
  }
  return input_error;
}

}  // namespace farkas::cli
