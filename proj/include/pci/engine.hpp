#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pci/error.hpp"
#include "pci/rational.hpp"
#include "pci/schema.hpp"
#include "pci/theory.hpp"

namespace pci {

/// Why a node of the inference tree fell back instead of (or after) combining:
///   zero_sum       - the combined raws summed to zero (no value survived)
///   non_separable  - the rule set admits no separable ordering
///   prior          - a fallback had no shared features to condition on
///   progress_guard - recursing would have revisited a situation already open
enum class FallbackKind { none, zero_sum, non_separable, prior, progress_guard };

inline const char* fallback_name(FallbackKind k) {
  switch (k) {
    case FallbackKind::none: return "none";
    case FallbackKind::zero_sum: return "zero-sum";
    case FallbackKind::non_separable: return "non-separable";
    case FallbackKind::prior: return "prior";
    case FallbackKind::progress_guard: return "progress-guard";
  }
  return "none";
}

/// One node of the inference trace: what was asked, which rules applied, how
/// they were ordered and split, the per-value arithmetic, and how the final
/// distribution was reached. Denominators and fallbacks hang off as subtrees.
template <class P>
struct TraceNode {
  struct Position {
    std::string rule_id;
    std::optional<std::string> partner_id;
    std::vector<std::string> shared;
    std::vector<std::string> unique;
    Schema shared_schema;
    std::shared_ptr<const TraceNode<P>> denominator;  // set when a division happened
  };
  struct Row {
    Atom value;
    P numerator{};
    P denominator{};
    P raw{};
  };

  Schema situation;
  std::vector<std::string> msr_ids;
  std::vector<Position> positions;  // combination order; empty unless combined
  std::vector<Row> rows;            // per candidate target value, domain order
  P normalization{};                // sum of raws; final p = raw / normalization
  bool combined = false;
  FallbackKind fallback = FallbackKind::none;
  Schema fallback_schema;
  std::shared_ptr<const TraceNode<P>> fallback_trace;
  bool zero_denominator = false;
  std::vector<Outcome<P>> distribution;  // what this node concluded

  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& pos : positions)
      if (pos.denominator) d = std::max(d, pos.denominator->depth());
    if (fallback_trace) d = std::max(d, fallback_trace->depth());
    return d + 1;
  }
};

template <class P>
struct Prediction {
  std::vector<Outcome<P>> distribution;
  TraceNode<P> trace;
  std::set<std::string> flags;  // every fallback or anomaly hit anywhere

  P probability_of(const Atom& value) const {
    for (const auto& o : distribution)
      if (o.value == value) return o.probability;
    return P{};
  }
};

namespace detail {

template <class P>
class EngineRun {
public:
  explicit EngineRun(const Theory<P>& theory) : theory_(theory) {}

  TraceNode<P> predict(const Schema& situation) {
    for (const Schema& open : path_)
      if (open == situation) return guard_node(situation);
    path_.push_back(situation);
    TraceNode<P> node = predict_inner(situation);
    path_.pop_back();
    return node;
  }

  std::set<std::string>& flags() { return flags_; }

  TraceNode<P> predict_with_ordering(const Schema& situation, const MsrOrdering& ordering) {
    path_.push_back(situation);
    TraceNode<P> node;
    node.situation = situation;
    for (std::size_t i : ordering.order) node.msr_ids.push_back(theory_.rule(i).id);
    std::sort(node.msr_ids.begin(), node.msr_ids.end());
    combine(node, ordering);
    if (!(node.normalization > P{})) {
      std::vector<std::size_t> msr = ordering.order;
      std::sort(msr.begin(), msr.end());
      fall_back(node, msr, FallbackKind::zero_sum);
    } else {
      for (const auto& row : node.rows)
        node.distribution.push_back({row.value, row.raw / node.normalization});
    }
    path_.pop_back();
    return node;
  }

private:
  TraceNode<P> predict_inner(const Schema& situation) {
    TraceNode<P> node;
    node.situation = situation;
    std::vector<std::size_t> msr = theory_.msr_set(situation);
    for (std::size_t i : msr) node.msr_ids.push_back(theory_.rule(i).id);
    if (msr.size() == 1) {
      node.distribution = theory_.rule(msr[0]).distribution;
      return node;
    }
    std::optional<MsrOrdering> ordering = theory_.separable_ordering(msr);
    if (!ordering) {
      fall_back(node, msr, FallbackKind::non_separable);
      return node;
    }
    combine(node, *ordering);
    if (!(node.normalization > P{})) {
      fall_back(node, msr, FallbackKind::zero_sum);
      return node;
    }
    for (const auto& row : node.rows)
      node.distribution.push_back({row.value, row.raw / node.normalization});
    return node;
  }

  /// The product form: for each candidate target value, multiply what every
  /// rule in the ordering says, then divide out what was already known before
  /// each rule (but the last) contributed: the conditional on the features it
  /// shares with its partner, or the unconditional prior when it shares
  /// nothing. Each division is backed by a recursive sub-inference. The raws
  /// are then normalized to sum to one.
  void combine(TraceNode<P>& node, const MsrOrdering& ordering) {
    node.combined = true;
    const FeatureDef& target = theory_.space().feature(theory_.space().target());
    std::map<std::size_t, Atom> candidates;  // domain position -> value
    for (std::size_t i : ordering.order)
      for (const auto& o : theory_.rule(i).distribution)
        candidates.emplace(theory_.space().domain_position(target, o.value), o.value);

    std::vector<std::optional<std::size_t>> den_index(ordering.order.size());
    std::vector<const TraceNode<P>*> den_nodes;
    for (std::size_t k = 0; k < ordering.order.size(); ++k) {
      const SplitInfo& split = ordering.splits[k];
      typename TraceNode<P>::Position pos;
      pos.rule_id = theory_.rule(ordering.order[k]).id;
      if (split.partner) pos.partner_id = theory_.rule(*split.partner).id;
      pos.shared.assign(split.shared.begin(), split.shared.end());
      pos.unique.assign(split.unique_feats.begin(), split.unique_feats.end());
      pos.shared_schema = split.shared_schema;
      if (k + 1 < ordering.order.size()) {
        auto sub = std::make_shared<TraceNode<P>>(predict(split.shared_schema));
        den_index[k] = den_nodes.size();
        den_nodes.push_back(sub.get());
        pos.denominator = std::move(sub);
      }
      node.positions.push_back(std::move(pos));
    }

    P total{};
    for (const auto& [posn, value] : candidates) {
      typename TraceNode<P>::Row row;
      row.value = value;
      row.numerator = prob_traits<P>::one();
      for (std::size_t i : ordering.order)
        row.numerator = row.numerator * theory_.rule(i).probability_of(value);
      row.denominator = prob_traits<P>::one();
      for (std::size_t k = 0; k < ordering.order.size(); ++k)
        if (den_index[k]) {
          P q = probability_in(*den_nodes[*den_index[k]], value);
          row.denominator = row.denominator * q;
        }
      if (!(row.numerator > P{})) {
        row.raw = P{};
      } else if (!(row.denominator > P{})) {
        row.raw = P{};
        node.zero_denominator = true;
        flags_.insert("zero-denominator");
      } else {
        row.raw = row.numerator / row.denominator;
      }
      total = total + row.raw;
      node.rows.push_back(std::move(row));
    }
    node.normalization = total;
  }

  /// Fallback for a rule set that could not be combined: re-ask about just
  /// the features all of its rules agree on; with nothing shared, keep the
  /// default rule's answer.
  void fall_back(TraceNode<P>& node, const std::vector<std::size_t>& msr, FallbackKind kind) {
    node.fallback = kind;
    flags_.insert(std::string(fallback_name(kind)) + "-fallback");
    Schema common = common_schema(msr);
    node.fallback_schema = common;
    if (common.is_empty()) {
      node.fallback = kind;  // keep the trigger; note the prior separately
      flags_.insert("prior-fallback");
      node.distribution = theory_.rule(theory_.default_rule()).distribution;
      return;
    }
    std::vector<std::size_t> sub_msr = theory_.msr_set(common);
    if (sub_msr == msr) {
      flags_.insert("progress-guard");
      node.distribution = theory_.rule(theory_.default_rule()).distribution;
      return;
    }
    auto sub = std::make_shared<TraceNode<P>>(predict(common));
    node.distribution = sub->distribution;
    node.fallback_trace = std::move(sub);
  }

  /// Features every rule of the set constrains, bound to the intersection of
  /// what they allow.
  Schema common_schema(const std::vector<std::size_t>& msr) const {
    if (msr.empty()) return {};
    std::map<std::string, ValueSet> merged(
        theory_.rule(msr[0]).context.bindings().begin(),
        theory_.rule(msr[0]).context.bindings().end());
    for (std::size_t k = 1; k < msr.size() && !merged.empty(); ++k) {
      const Schema& ctx = theory_.rule(msr[k]).context;
      for (auto it = merged.begin(); it != merged.end();) {
        const ValueSet* v = ctx.find(it->first);
        if (!v) {
          it = merged.erase(it);
          continue;
        }
        ValueSet both = intersect(it->second, *v);
        if (both.empty()) {
          it = merged.erase(it);
        } else {
          it->second = std::move(both);
          ++it;
        }
      }
    }
    return Schema::of(theory_.space(), std::move(merged));
  }

  TraceNode<P> guard_node(const Schema& situation) {
    flags_.insert("progress-guard");
    TraceNode<P> node;
    node.situation = situation;
    node.fallback = FallbackKind::progress_guard;
    node.distribution = theory_.rule(theory_.default_rule()).distribution;
    return node;
  }

  static P probability_in(const TraceNode<P>& node, const Atom& value) {
    for (const auto& o : node.distribution)
      if (o.value == value) return o.probability;
    return P{};
  }

  const Theory<P>& theory_;
  std::vector<Schema> path_;
  std::set<std::string> flags_;
};

}  // namespace detail

/// Answers "how is the target distributed in this situation?" for any
/// situation schema, combining every most specific satisfied rule.
template <class P>
Prediction<P> pci_predict(const Theory<P>& theory, const Schema& situation) {
  detail::EngineRun<P> run(theory);
  Prediction<P> out;
  out.trace = run.predict(situation);
  out.distribution = out.trace.distribution;
  out.flags = std::move(run.flags());
  return out;
}

/// Same combination arithmetic, but with the caller choosing the ordering
/// (which must be a separable ordering of the situation's rule set). Lets
/// callers check that every admissible ordering gives the same answer.
template <class P>
Prediction<P> pci_predict_with_ordering(const Theory<P>& theory, const Schema& situation,
                                        const MsrOrdering& ordering) {
  detail::EngineRun<P> run(theory);
  Prediction<P> out;
  out.trace = run.predict_with_ordering(situation, ordering);
  out.distribution = out.trace.distribution;
  out.flags = std::move(run.flags());
  return out;
}

}  // namespace pci
