// Command-line front end: query a theory, validate one, or compare the
// engine's answer against an explicit joint distribution.
//
// Exit codes: 0 success (fallbacks still succeed, but set flags in the
// output); 2 file or command parse error; 3 semantic, validation, or data
// error; 4 malformed situation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pci/engine.hpp"
#include "pci/oracle.hpp"
#include "pci/render.hpp"
#include "pci/text.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitSemantic = 3;
constexpr int kExitSituation = 4;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Parse + compile a theory file, reporting diagnostics on stderr.
/// Returns nullopt and sets exit_code on failure.
std::optional<pci::Theory<pci::Rat>> load_theory(const std::string& path, int& exit_code) {
  std::optional<std::string> text = read_file(path);
  if (!text) {
    std::cerr << path << ": cannot read file\n";
    exit_code = kExitParse;
    return std::nullopt;
  }
  pci::ParseResult parsed = pci::parse_theory(*text);
  if (!parsed.ok()) {
    for (const pci::Diagnostic& d : parsed.diagnostics)
      std::cerr << path << ":" << d.span.line << ":" << d.span.col << ": " << d.message
                << "\n";
    exit_code = kExitParse;
    return std::nullopt;
  }
  try {
    return pci::compile_theory(parsed.document);
  } catch (const pci::Error& e) {
    std::cerr << path << ": " << e.what() << "\n";
    exit_code = kExitSemantic;
    return std::nullopt;
  }
}

int run_query(const std::string& theory_path, const std::string& situation_text,
              bool trace, bool json, bool skip_validate, std::size_t cap) {
  int code = kExitOk;
  auto theory = load_theory(theory_path, code);
  if (!theory) return code;
  if (!skip_validate) {
    pci::ValidationReport report = theory->validate(cap);
    if (!report.valid) {
      if (json)
        std::cout << pci::validation_json(report).dump(2) << "\n";
      else
        std::cerr << pci::render_validation_text(report);
      return kExitSemantic;
    }
  }
  pci::Schema situation;
  try {
    situation = pci::parse_situation(theory->space(), situation_text);
  } catch (const pci::Error& e) {
    std::cerr << "situation: " << e.what() << "\n";
    return kExitSituation;
  }
  pci::Prediction<pci::Rat> pred = pci::pci_predict(*theory, situation);
  if (json)
    std::cout << pci::prediction_json(pred, trace).dump(2) << "\n";
  else
    std::cout << pci::render_prediction_text(pred, trace);
  return kExitOk;
}

int run_validate(const std::string& theory_path, bool json, std::size_t cap) {
  int code = kExitOk;
  auto theory = load_theory(theory_path, code);
  if (!theory) return code;
  pci::ValidationReport report = theory->validate(cap);
  if (json)
    std::cout << pci::validation_json(report).dump(2) << "\n";
  else
    std::cout << pci::render_validation_text(report);
  return report.valid ? kExitOk : kExitSemantic;
}

struct AssumptionCheck {
  std::string situation;
  std::string rule;
  std::string partner;  // empty when the rule shares nothing
  std::string given;
  bool plain_defined = false;
  double plain_violation = 0.0;
  bool target_defined = false;
  double target_violation = 0.0;  // worst case over target values
};

/// The independence assumptions a combination step relied on, checked
/// against the joint: at each position, the rule's unique features must be
/// independent of the remaining rules' contexts given the shared features,
/// both unconditionally and given each target value.
void collect_assumptions(const pci::JointTable<pci::Rat>& joint,
                         const pci::Theory<pci::Rat>& theory,
                         const pci::TraceNode<pci::Rat>& node,
                         std::vector<AssumptionCheck>& out) {
  if (node.combined) {
    for (std::size_t k = 0; k + 1 < node.positions.size(); ++k) {
      const auto& pos = node.positions[k];
      const pci::Rule<pci::Rat>* rule = theory.rule_by_id(pos.rule_id);
      if (!rule) continue;
      AssumptionCheck check;
      check.situation = node.situation.to_string();
      check.rule = pos.rule_id;
      if (pos.partner_id) check.partner = *pos.partner_id;
      check.given = pos.shared_schema.to_string();
      try {
        std::set<std::string> unique(pos.unique.begin(), pos.unique.end());
        pci::Schema a = pci::project(theory.space(), rule->context, unique);
        pci::Schema b;
        for (std::size_t j = k + 1; j < node.positions.size(); ++j) {
          const pci::Rule<pci::Rat>* later = theory.rule_by_id(node.positions[j].rule_id);
          if (later) b = pci::conjoin(theory.space(), b, later->context);
        }
        pci::EventIndependence plain =
            pci::event_independence(joint, a, b, pos.shared_schema);
        check.plain_defined = plain.defined;
        check.plain_violation = plain.violation;
        bool any = false;
        double worst = 0.0;
        std::size_t td = joint.dim_index(joint.target());
        for (const pci::Atom& v : joint.dims()[td].values) {
          pci::Schema given_t = pci::conjoin(
              theory.space(), pos.shared_schema,
              pci::Schema::of(theory.space(),
                              {{joint.target(), pci::ValueSet::singleton(v)}}));
          pci::EventIndependence cond = pci::event_independence(joint, a, b, given_t);
          if (cond.defined) {
            any = true;
            worst = std::max(worst, cond.violation);
          }
        }
        check.target_defined = any;
        check.target_violation = worst;
      } catch (const pci::Error&) {
        // Leave the check marked undefined: the joint cannot express it.
      }
      out.push_back(std::move(check));
    }
    for (const auto& pos : node.positions)
      if (pos.denominator) collect_assumptions(joint, theory, *pos.denominator, out);
  }
  if (node.fallback_trace) collect_assumptions(joint, theory, *node.fallback_trace, out);
}

int run_oracle(const std::string& joint_path, const std::string& theory_path,
               const std::string& contexts_path, const std::string& situation_text,
               bool json) {
  std::optional<std::string> csv = read_file(joint_path);
  if (!csv) {
    std::cerr << joint_path << ": cannot read file\n";
    return kExitParse;
  }
  pci::JointTable<pci::Rat> joint = pci::parse_joint_csv(*csv);
  std::optional<pci::Theory<pci::Rat>> theory;
  if (!theory_path.empty()) {
    int code = kExitOk;
    theory = load_theory(theory_path, code);
    if (!theory) return code;
  } else {
    std::optional<std::string> lines = read_file(contexts_path);
    if (!lines) {
      std::cerr << contexts_path << ": cannot read file\n";
      return kExitParse;
    }
    pci::FeatureSpace space = pci::space_from_joint(joint);
    std::vector<pci::Schema> contexts;
    std::istringstream in(*lines);
    std::string line;
    bool has_default = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      pci::Schema ctx;
      try {
        ctx = pci::parse_situation(space, line);
      } catch (const pci::Error& e) {
        std::cerr << contexts_path << ":" << lineno << ": " << e.what() << "\n";
        return kExitSituation;
      }
      if (ctx.is_empty()) has_default = true;
      contexts.push_back(std::move(ctx));
    }
    if (!has_default) contexts.insert(contexts.begin(), pci::Schema{});
    theory = pci::Theory<pci::Rat>::build(
        space, pci::rules_from_joint(joint, contexts));
  }

  pci::Schema situation;
  try {
    situation = pci::parse_situation(theory->space(), situation_text);
  } catch (const pci::Error& e) {
    std::cerr << "situation: " << e.what() << "\n";
    return kExitSituation;
  }

  std::vector<pci::Outcome<pci::Rat>> exact =
      pci::exact_conditional(joint, situation, joint.target());
  pci::Prediction<pci::Rat> pred = pci::pci_predict(*theory, situation);

  // Per-value differences over the union of both supports, in joint order.
  struct Delta {
    std::string value;
    pci::Rat exact;
    pci::Rat engine;
    double diff;
  };
  std::vector<Delta> deltas;
  double max_diff = 0.0;
  for (const auto& o : exact) {
    pci::Rat e = o.probability;
    pci::Rat p = pred.probability_of(o.value);
    pci::Rat d = e > p ? e - p : p - e;
    deltas.push_back({pci::atom_to_string(o.value), e, p, pci::to_double(d)});
    max_diff = std::max(max_diff, pci::to_double(d));
  }
  for (const auto& o : pred.distribution) {
    bool known = false;
    for (const auto& e : exact) known = known || e.value == o.value;
    if (!known) {
      deltas.push_back({pci::atom_to_string(o.value), pci::Rat(0), o.probability,
                        pci::to_double(o.probability)});
      max_diff = std::max(max_diff, pci::to_double(o.probability));
    }
  }

  std::vector<AssumptionCheck> assumptions;
  collect_assumptions(joint, *theory, pred.trace, assumptions);

  if (json) {
    nlohmann::json j;
    j["situation"] = situation.to_string();
    j["target"] = joint.target();
    j["exact"] = pci::distribution_json(exact);
    j["pci"] = pci::prediction_json(pred, false);
    nlohmann::json ds = nlohmann::json::array();
    for (const auto& d : deltas)
      ds.push_back({{"value", d.value},
                    {"exact", pci::prob_json(d.exact)},
                    {"pci", pci::prob_json(d.engine)},
                    {"diff", d.diff}});
    j["differences"] = ds;
    j["max_difference"] = max_diff;
    nlohmann::json as = nlohmann::json::array();
    for (const auto& a : assumptions) {
      nlohmann::json e;
      e["situation"] = a.situation;
      e["rule"] = a.rule;
      if (!a.partner.empty()) e["partner"] = a.partner;
      e["given"] = a.given;
      e["unconditional"] = a.plain_defined
                               ? nlohmann::json{{"violation", a.plain_violation}}
                               : nlohmann::json{{"undefined", true}};
      e["given_target"] = a.target_defined
                              ? nlohmann::json{{"violation", a.target_violation}}
                              : nlohmann::json{{"undefined", true}};
      as.push_back(std::move(e));
    }
    j["assumptions"] = as;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }

  std::cout << "situation: " << situation.to_string() << "\n";
  std::cout << "exact conditional:\n";
  for (const auto& o : pci::display_order(exact))
    std::cout << "  " << pci::atom_to_string(o.value) << ": "
              << pci::format_rational(o.probability) << "\n";
  std::cout << "engine prediction:\n";
  for (const auto& o : pci::display_order(pred.distribution))
    std::cout << "  " << pci::atom_to_string(o.value) << ": "
              << pci::format_rational(o.probability) << "\n";
  if (!pred.flags.empty()) {
    std::cout << "flags:";
    for (const auto& f : pred.flags) std::cout << " " << f;
    std::cout << "\n";
  }
  std::cout << "differences:\n";
  for (const auto& d : deltas) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", d.diff);
    std::cout << "  " << d.value << ": " << buf << "\n";
  }
  {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", max_diff);
    std::cout << "max difference: " << buf << "\n";
  }
  if (assumptions.empty()) {
    std::cout << "assumptions: none (single rule applied)\n";
  } else {
    std::cout << "assumptions:\n";
    for (const auto& a : assumptions) {
      std::cout << "  " << a.rule;
      if (!a.partner.empty()) std::cout << " sharing {" << a.given << "} with " << a.partner;
      std::cout << " in " << a.situation << ":\n";
      auto line = [](const char* label, bool defined, double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        std::cout << "    " << label << ": "
                  << (defined ? (v <= 1e-12 ? std::string("holds") : "violated by " + std::string(buf))
                              : std::string("undefined in this joint"))
                  << "\n";
      };
      line("independence given shared features", a.plain_defined, a.plain_violation);
      line("independence given target and shared features", a.target_defined,
           a.target_violation);
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uniquely predictive theories: query, validate, compare"};
  app.require_subcommand(1);

  std::string theory_path, situation_text, joint_path, contexts_path;
  bool trace = false, json = false, skip_validate = false;
  std::size_t cap = 1000000;

  CLI::App* query = app.add_subcommand("query", "answer a situation query from a theory");
  query->add_option("theory", theory_path, "theory file")->required();
  query->add_option("situation", situation_text,
                    "situation: feature=value pairs, comma separated, '*' any")
      ->required();
  query->add_flag("--trace", trace, "show the full derivation tree");
  query->add_flag("--json", json, "machine-readable output");
  query->add_flag("--skip-validate", skip_validate, "skip the validity sweep");
  query->add_option("--cap", cap, "validation sweep cap");

  CLI::App* validate = app.add_subcommand("validate", "check a theory is uniquely predictive");
  validate->add_option("theory", theory_path, "theory file")->required();
  validate->add_flag("--json", json, "machine-readable output");
  validate->add_option("--cap", cap, "validation sweep cap");

  CLI::App* oracle =
      app.add_subcommand("oracle", "compare the engine against an explicit joint");
  oracle->add_option("--joint", joint_path, "joint distribution CSV")->required();
  auto* th = oracle->add_option("--theory", theory_path, "theory file to query");
  auto* cx = oracle->add_option("--contexts", contexts_path,
                                "context file: one schema per line; rules are read off the joint");
  th->excludes(cx);
  cx->excludes(th);
  oracle->add_option("situation", situation_text, "situation to compare at");
  oracle->add_flag("--json", json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (app.got_subcommand(query))
      return run_query(theory_path, situation_text, trace, json, skip_validate, cap);
    if (app.got_subcommand(validate)) return run_validate(theory_path, json, cap);
    if (app.got_subcommand(oracle)) {
      if (theory_path.empty() == contexts_path.empty()) {
        std::cerr << "oracle needs exactly one of --theory or --contexts\n";
        return kExitParse;
      }
      return run_oracle(joint_path, theory_path, contexts_path, situation_text, json);
    }
  } catch (const pci::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSemantic;
  }
  return kExitOk;
}
