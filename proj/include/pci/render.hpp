#pragma once

// Presentation of predictions, traces, and validation reports as terminal
// text and as JSON. The JSON layout is part of the tool's interface and is
// kept stable; tests pin it.

#include <algorithm>
#include <string>
#include <vector>

#include "json.hpp"
#include "pci/engine.hpp"
#include "pci/rational.hpp"
#include "pci/theory.hpp"

namespace pci {

/// Numbers are rendered with both an exact text form and a double value, so
/// consumers can pick precision or readability.
template <class P>
nlohmann::json prob_json(const P& p) {
  return {{"text", prob_traits<P>::to_string(p)}, {"value", to_double(p)}};
}

/// Display order for distributions: most probable first, ties in the target
/// domain's order (which is the order the vectors already carry).
template <class P>
std::vector<Outcome<P>> display_order(std::vector<Outcome<P>> dist) {
  std::stable_sort(dist.begin(), dist.end(), [](const Outcome<P>& a, const Outcome<P>& b) {
    return b.probability < a.probability;
  });
  return dist;
}

template <class P>
nlohmann::json distribution_json(const std::vector<Outcome<P>>& dist) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& o : display_order(dist))
    arr.push_back({{"value", atom_to_string(o.value)}, {"p", prob_json(o.probability)}});
  return arr;
}

/// Every node carries the same keys: situation, msr_ids, ordering, shared,
/// unique, raw, normalization, fallback — plus distribution, combined, and
/// the denominator/fallback subtrees where they exist.
template <class P>
nlohmann::json trace_json(const TraceNode<P>& node) {
  nlohmann::json j;
  j["situation"] = node.situation.to_string();
  j["msr_ids"] = node.msr_ids;
  j["combined"] = node.combined;
  nlohmann::json ordering = nlohmann::json::array();
  nlohmann::json shared = nlohmann::json::array();
  nlohmann::json unique = nlohmann::json::array();
  nlohmann::json positions = nlohmann::json::array();
  for (const auto& pos : node.positions) {
    ordering.push_back(pos.rule_id);
    shared.push_back(pos.shared);
    unique.push_back(pos.unique);
    nlohmann::json p;
    p["rule"] = pos.rule_id;
    if (pos.partner_id) p["partner"] = *pos.partner_id;
    p["shared"] = pos.shared;
    p["unique"] = pos.unique;
    if (!pos.shared_schema.is_empty())
      p["shared_situation"] = pos.shared_schema.to_string();
    if (pos.denominator) p["denominator"] = trace_json(*pos.denominator);
    positions.push_back(std::move(p));
  }
  j["ordering"] = ordering;
  j["shared"] = shared;
  j["unique"] = unique;
  j["positions"] = positions;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : node.rows)
    rows.push_back({{"value", atom_to_string(row.value)},
                    {"numerator", prob_json(row.numerator)},
                    {"denominator", prob_json(row.denominator)},
                    {"raw", prob_json(row.raw)}});
  j["raw"] = rows;
  j["normalization"] =
      node.combined ? prob_json(node.normalization) : prob_json(prob_traits<P>::one());
  j["fallback"] = fallback_name(node.fallback);
  if (node.fallback != FallbackKind::none && !node.fallback_schema.is_empty())
    j["fallback_situation"] = node.fallback_schema.to_string();
  if (node.fallback_trace) j["fallback_trace"] = trace_json(*node.fallback_trace);
  if (node.zero_denominator) j["zero_denominator"] = true;
  j["distribution"] = distribution_json(node.distribution);
  return j;
}

template <class P>
nlohmann::json prediction_json(const Prediction<P>& pred, bool with_trace) {
  nlohmann::json j;
  j["situation"] = pred.trace.situation.to_string();
  j["distribution"] = distribution_json(pred.distribution);
  j["flags"] = pred.flags;
  if (with_trace) j["trace"] = trace_json(pred.trace);
  return j;
}

inline nlohmann::json validation_json(const ValidationReport& report) {
  nlohmann::json j;
  j["valid"] = report.valid;
  j["complete"] = report.complete;
  j["situations"] = report.situations_enumerated;
  j["rule_sets_checked"] = report.msr_sets_checked;
  j["rules"] = report.rule_count;
  j["height"] = report.dag_height;
  nlohmann::json vs = nlohmann::json::array();
  for (const auto& v : report.violations)
    vs.push_back({{"rules", v.rule_ids}, {"witness", v.witness.to_string()}});
  j["violations"] = vs;
  return j;
}

namespace detail {

template <class P>
void trace_text(const TraceNode<P>& node, std::string& out, std::size_t indent) {
  std::string pad(indent * 2, ' ');
  out += pad + "situation: " + node.situation.to_string() + "\n";
  std::string msr;
  for (const auto& id : node.msr_ids) msr += (msr.empty() ? "" : ", ") + id;
  out += pad + "rules: " + (msr.empty() ? "(none)" : msr) + "\n";
  if (node.combined) {
    for (const auto& pos : node.positions) {
      out += pad + "- " + pos.rule_id;
      if (pos.partner_id) {
        std::string sh;
        for (const auto& f : pos.shared) sh += (sh.empty() ? "" : ", ") + f;
        out += " shares {" + sh + "} with " + *pos.partner_id;
      } else {
        out += " shares nothing";
      }
      out += "\n";
    }
    for (const auto& row : node.rows)
      out += pad + "  " + atom_to_string(row.value) + ": " +
             prob_traits<P>::to_string(row.numerator) + " / " +
             prob_traits<P>::to_string(row.denominator) + " = " +
             prob_traits<P>::to_string(row.raw) + "\n";
    out += pad + "  normalization: " + prob_traits<P>::to_string(node.normalization) + "\n";
    for (const auto& pos : node.positions)
      if (pos.denominator) {
        out += pad + "  divisor for " + pos.rule_id + ":\n";
        trace_text(*pos.denominator, out, indent + 2);
      }
  }
  if (node.fallback != FallbackKind::none) {
    out += pad + "fallback: " + fallback_name(node.fallback);
    if (!node.fallback_schema.is_empty())
      out += " on " + node.fallback_schema.to_string();
    out += "\n";
    if (node.fallback_trace) trace_text(*node.fallback_trace, out, indent + 1);
  }
  std::string dist;
  for (const auto& o : node.distribution)
    dist += (dist.empty() ? "" : ", ") + atom_to_string(o.value) + ": " +
            prob_traits<P>::to_string(o.probability);
  out += pad + "gives: " + dist + "\n";
}

}  // namespace detail

template <class P>
std::string render_prediction_text(const Prediction<P>& pred, bool with_trace) {
  std::string out;
  out += "situation: " + pred.trace.situation.to_string() + "\n";
  for (const auto& o : display_order(pred.distribution))
    out += "  " + atom_to_string(o.value) + ": " + prob_traits<P>::to_string(o.probability) +
           "\n";
  if (!pred.flags.empty()) {
    std::string fl;
    for (const auto& f : pred.flags) fl += (fl.empty() ? "" : ", ") + f;
    out += "flags: " + fl + "\n";
  }
  if (with_trace) {
    out += "trace:\n";
    detail::trace_text(pred.trace, out, 1);
  }
  return out;
}

inline std::string render_validation_text(const ValidationReport& report) {
  std::string out;
  out += std::string("theory is ") + (report.valid ? "uniquely predictive" : "NOT uniquely predictive") + "\n";
  out += "  rules: " + std::to_string(report.rule_count) +
         ", height: " + std::to_string(report.dag_height) + "\n";
  out += "  situations swept: " + std::to_string(report.situations_enumerated) +
         (report.complete ? "" : " (cap reached; sweep incomplete)") + "\n";
  out += "  rule sets checked: " + std::to_string(report.msr_sets_checked) + "\n";
  for (const auto& v : report.violations) {
    std::string ids;
    for (const auto& id : v.rule_ids) ids += (ids.empty() ? "" : ", ") + id;
    out += "  no separable ordering for {" + ids + "} in situation " +
           v.witness.to_string() + "\n";
  }
  return out;
}

}  // namespace pci
