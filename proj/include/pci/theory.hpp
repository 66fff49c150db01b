#pragma once

#include <algorithm>
#include <cstddef>
#include <type_traits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pci/error.hpp"
#include "pci/feature_space.hpp"
#include "pci/rational.hpp"
#include "pci/schema.hpp"
#include "pci/values.hpp"

namespace pci {

template <class P>
struct Outcome {
  Atom value;
  P probability{};
  bool operator==(const Outcome&) const = default;
};

/// A conditional-distribution rule: whenever the context holds, the target
/// feature is distributed as stated. Values left out carry probability zero.
template <class P>
struct Rule {
  std::string id;
  std::size_t index = 0;  // declaration order; ties in orderings break on it
  Schema context;
  std::vector<Outcome<P>> distribution;  // target-domain order, unique values

  P probability_of(const Atom& value) const {
    for (const auto& o : distribution)
      if (o.value == value) return o.probability;
    return P{};
  }

  bool assigns_nonzero(const Atom& value) const {
    return probability_of(value) > P{};
  }
};

/// One position of a separable ordering: which later rule (if any) this one
/// shares features with, which of its context features those are, and the
/// schema binding them to the intersected value sets. The engine conditions
/// on that schema to divide out the shared evidence.
struct SplitInfo {
  std::optional<std::size_t> partner;  // rule index within the theory
  std::set<std::string> shared;
  std::set<std::string> unique_feats;
  Schema shared_schema;
};

struct MsrOrdering {
  std::vector<std::size_t> order;  // rule indices, most constrained handled first
  std::vector<SplitInfo> splits;   // parallel to order
};

struct ValidationViolation {
  std::vector<std::string> rule_ids;
  Schema witness;
};

struct ValidationReport {
  bool valid = true;
  bool complete = true;  // false when the enumeration cap cut the sweep short
  std::size_t situations_enumerated = 0;
  std::size_t msr_sets_checked = 0;
  std::size_t rule_count = 0;
  std::size_t dag_height = 0;
  std::vector<ValidationViolation> violations;
};

/// An immutable theory: a feature space plus a set of rules whose contexts
/// form a DAG under strict implication, with a default rule (empty context)
/// at the root. All engine queries and validation run against one of these.
template <class P>
class Theory {
public:
  static Theory build(FeatureSpace space, std::vector<Rule<P>> rules) {
    Theory t;
    t.space_ = std::move(space);
    t.rules_ = std::move(rules);
    const FeatureDef& target = t.space_.feature(t.space_.target());
    std::set<std::string> ids;
    std::optional<std::size_t> default_rule;
    for (std::size_t i = 0; i < t.rules_.size(); ++i) {
      Rule<P>& r = t.rules_[i];
      r.index = i;
      if (r.id.empty()) throw Error("rule without an id");
      if (!ids.insert(r.id).second) throw Error("duplicate rule id '" + r.id + "'");
      if (r.context.binds(t.space_.target()))
        throw Error("rule '" + r.id + "' constrains the target feature");
      if (r.distribution.empty())
        throw Error("rule '" + r.id + "' has an empty distribution");
      std::set<std::size_t> seen;
      P sum{};
      for (const auto& o : r.distribution) {
        if (!t.space_.full_set(target.name).contains(o.value))
          throw Error("rule '" + r.id + "' assigns probability to '" +
                      atom_to_string(o.value) + "', which is outside the target domain");
        if (!seen.insert(t.space_.domain_position(target, o.value)).second)
          throw Error("rule '" + r.id + "' lists '" + atom_to_string(o.value) +
                      "' twice");
        if (o.probability < P{} || o.probability > prob_traits<P>::one())
          throw Error("rule '" + r.id + "' has a probability outside [0, 1]");
        sum += o.probability;
      }
      if (!prob_traits<P>::sum_is_one(sum))
        throw Error("rule '" + r.id + "' has probabilities that do not sum to 1");
      std::sort(r.distribution.begin(), r.distribution.end(),
                [&](const Outcome<P>& a, const Outcome<P>& b) {
                  return t.space_.domain_position(target, a.value) <
                         t.space_.domain_position(target, b.value);
                });
      if (r.context.is_empty()) {
        if (default_rule)
          throw Error("rules '" + t.rules_[*default_rule].id + "' and '" + r.id +
                      "' both have an unconditional context");
        default_rule = i;
      }
    }
    if (!default_rule)
      throw Error("theory has no default rule (a rule with no conditions)");
    t.default_rule_ = *default_rule;
    for (std::size_t i = 0; i < t.rules_.size(); ++i)
      for (std::size_t j = i + 1; j < t.rules_.size(); ++j)
        if (t.rules_[i].context == t.rules_[j].context)
          throw Error("rules '" + t.rules_[i].id + "' and '" + t.rules_[j].id +
                      "' have the same context");
    t.dag_height_ = t.compute_height();
    return t;
  }

  const FeatureSpace& space() const { return space_; }
  const std::vector<Rule<P>>& rules() const { return rules_; }
  const Rule<P>& rule(std::size_t index) const { return rules_.at(index); }
  std::size_t default_rule() const { return default_rule_; }
  std::size_t dag_height() const { return dag_height_; }

  const Rule<P>* rule_by_id(const std::string& id) const {
    for (const auto& r : rules_)
      if (r.id == id) return &r;
    return nullptr;
  }

  std::vector<std::size_t> satisfied_set(const Schema& situation) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rules_.size(); ++i)
      if (satisfies(situation, rules_[i].context)) out.push_back(i);
    return out;
  }

  /// Most specific of the satisfied rules: those with no satisfied rule whose
  /// context strictly implies theirs.
  std::vector<std::size_t> msr_set(const Schema& situation) const {
    std::vector<std::size_t> sat = satisfied_set(situation);
    std::vector<std::size_t> out;
    for (std::size_t i : sat) {
      bool shadowed = false;
      for (std::size_t j : sat)
        if (j != i && rules_[j].context.strictly_implies(rules_[i].context)) {
          shadowed = true;
          break;
        }
      if (!shadowed) out.push_back(i);
    }
    return out;
  }

  /// Features a candidate's context shares with each rule of a set, as the
  /// split the engine needs: defined only when all shared features point at
  /// one single partner (or none).
  std::optional<SplitInfo> separability_split(std::size_t candidate,
                                              const std::vector<std::size_t>& rest) const {
    const Schema& ctx = rules_[candidate].context;
    std::optional<std::size_t> partner;
    for (std::size_t j : rest) {
      if (j == candidate) continue;
      SharedFeatures sh = shared_features(space_, ctx, false, rules_[j].context, false);
      if (sh.features.empty()) continue;
      if (partner && *partner != j) return std::nullopt;
      partner = j;
    }
    SplitInfo split;
    split.partner = partner;
    if (partner) {
      SharedFeatures sh =
          shared_features(space_, ctx, false, rules_[*partner].context, false);
      split.shared = sh.features;
      split.shared_schema = sh.overlap;
    }
    for (const auto& [name, set] : ctx.bindings())
      if (!split.shared.count(name)) split.unique_feats.insert(name);
    return split;
  }

  /// Greedy separable ordering over a set of rule indices: repeatedly peel
  /// off the lowest-numbered rule separable from the remainder. Empty result
  /// means no such ordering exists under the greedy strategy (and, since
  /// separability of a rule only depends on the remaining set, none exists
  /// at all).
  std::optional<MsrOrdering> separable_ordering(std::vector<std::size_t> set) const {
    std::sort(set.begin(), set.end());
    MsrOrdering out;
    std::vector<std::size_t> remaining = std::move(set);
    while (remaining.size() > 1) {
      bool advanced = false;
      for (std::size_t k = 0; k < remaining.size(); ++k) {
        std::size_t cand = remaining[k];
        if (auto split = separability_split(cand, remaining)) {
          out.order.push_back(cand);
          out.splits.push_back(std::move(*split));
          remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(k));
          advanced = true;
          break;
        }
      }
      if (!advanced) return std::nullopt;
    }
    if (remaining.size() == 1) {
      SplitInfo last;
      for (const auto& [name, set_] : rules_[remaining[0]].context.bindings())
        last.unique_feats.insert(name);
      out.order.push_back(remaining[0]);
      out.splits.push_back(std::move(last));
    }
    return out;
  }

  /// Every separable ordering of a rule set, found by trying each separable
  /// candidate at each step. Meant for small sets; `cap` bounds the count.
  std::vector<MsrOrdering> all_separable_orderings(std::vector<std::size_t> set,
                                                   std::size_t cap = 10000) const {
    std::sort(set.begin(), set.end());
    std::vector<MsrOrdering> out;
    MsrOrdering partial;
    enumerate_orderings(set, partial, out, cap);
    return out;
  }

  /// Sweeps representative situations (one per distinguishable combination of
  /// context-relevant value regions), collects the distinct rule sets the
  /// engine would have to combine, and checks each has a separable ordering.
  ValidationReport validate(std::size_t cap = 1000000) const {
    ValidationReport report;
    report.rule_count = rules_.size();
    report.dag_height = dag_height_;

    // Per feature, the value regions that different contexts can tell apart:
    // every non-empty intersection pattern of the value sets the contexts
    // mention. Leaving the feature unbound is always one more choice and
    // subsumes "bound outside everything mentioned".
    std::vector<std::string> feats;
    std::vector<std::vector<ValueSet>> regions;
    for (const FeatureDef& f : space_.features()) {
      if (f.name == space_.target()) continue;
      std::vector<ValueSet> mentioned;
      for (const auto& r : rules_)
        if (const ValueSet* v = r.context.find(f.name)) {
          if (std::find(mentioned.begin(), mentioned.end(), *v) == mentioned.end())
            mentioned.push_back(*v);
        }
      if (mentioned.empty()) continue;
      std::vector<ValueSet> atoms = distinguishable_regions(f, mentioned);
      feats.push_back(f.name);
      regions.push_back(std::move(atoms));
    }

    std::set<std::vector<std::size_t>> seen_sets;
    std::vector<std::size_t> odo(feats.size(), 0);  // regions[i].size() == unbound
    bool done = feats.empty();
    bool first = true;
    while (!done || first) {
      first = false;
      if (report.situations_enumerated >= cap) {
        report.complete = false;
        break;
      }
      std::map<std::string, ValueSet> bindings;
      for (std::size_t i = 0; i < feats.size(); ++i)
        if (odo[i] < regions[i].size()) bindings.emplace(feats[i], regions[i][odo[i]]);
      Schema situation = Schema::of(space_, std::move(bindings));
      ++report.situations_enumerated;
      std::vector<std::size_t> msr = msr_set(situation);
      if (msr.size() > 1 && seen_sets.insert(msr).second) {
        ++report.msr_sets_checked;
        if (!separable_ordering(msr)) {
          report.valid = false;
          ValidationViolation v;
          for (std::size_t i : msr) v.rule_ids.push_back(rules_[i].id);
          v.witness = situation;
          report.violations.push_back(std::move(v));
        }
      }
      done = true;
      for (std::size_t i = 0; i < odo.size(); ++i) {
        if (++odo[i] <= regions[i].size()) {
          done = false;
          break;
        }
        odo[i] = 0;
      }
      if (feats.empty()) break;
    }
    return report;
  }

private:
  /// Non-empty atoms of the partition a family of value sets induces on a
  /// feature's domain, identified by which of the sets each atom lies in.
  /// The all-outside region is dropped: an unbound feature covers it.
  std::vector<ValueSet> distinguishable_regions(const FeatureDef& f,
                                                const std::vector<ValueSet>& sets) const {
    std::vector<ValueSet> atoms;
    std::size_t n = sets.size();
    for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
      ValueSet region = f.full_set();
      for (std::size_t i = 0; i < n && !region.empty(); ++i) {
        if (mask & (std::size_t{1} << i)) {
          region = intersect(region, sets[i]);
        } else {
          region = subtract_within(region, sets[i], f);
        }
      }
      if (!region.empty()) atoms.push_back(std::move(region));
    }
    return atoms;
  }

  /// region minus set, staying inside the (possibly unbounded) feature domain.
  static ValueSet subtract_within(const ValueSet& region, const ValueSet& set,
                                  const FeatureDef& f) {
    if (region.empty()) return region;
    if (f.is_enum) {
      std::vector<std::string> kept;
      for (const Atom& a : region.atoms())
        if (!set.contains(a)) kept.push_back(std::get<std::string>(a));
      return kept.empty() ? ValueSet{} : ValueSet::of_atoms(kept);
    }
    std::vector<IntInterval> kept;
    for (const IntInterval& r : region.intervals()) {
      std::int64_t lo = r.lo;
      for (const IntInterval& s : set.intervals()) {
        if (!s.unbounded() && s.hi < lo) continue;
        if (s.lo > (r.unbounded() ? kNoUpperBound : r.hi)) break;
        if (s.lo > lo) kept.push_back({lo, s.lo - 1});
        if (s.unbounded()) {
          lo = kNoUpperBound;
          break;
        }
        lo = s.hi + 1;
        if (!r.unbounded() && lo > r.hi) break;
      }
      if (lo != kNoUpperBound && (r.unbounded() || lo <= r.hi))
        kept.push_back({lo, r.unbounded() ? kNoUpperBound : r.hi});
    }
    return kept.empty() ? ValueSet{} : ValueSet::of_intervals(kept);
  }

  void enumerate_orderings(const std::vector<std::size_t>& remaining, MsrOrdering& partial,
                           std::vector<MsrOrdering>& out, std::size_t cap) const {
    if (out.size() >= cap) return;
    if (remaining.size() <= 1) {
      MsrOrdering finished = partial;
      if (remaining.size() == 1) {
        SplitInfo last;
        for (const auto& [name, set_] : rules_[remaining[0]].context.bindings())
          last.unique_feats.insert(name);
        finished.order.push_back(remaining[0]);
        finished.splits.push_back(std::move(last));
      }
      out.push_back(std::move(finished));
      return;
    }
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      std::size_t cand = remaining[k];
      auto split = separability_split(cand, remaining);
      if (!split) continue;
      partial.order.push_back(cand);
      partial.splits.push_back(std::move(*split));
      std::vector<std::size_t> rest = remaining;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
      enumerate_orderings(rest, partial, out, cap);
      partial.order.pop_back();
      partial.splits.pop_back();
    }
  }

  std::size_t compute_height() const {
    std::vector<std::size_t> memo(rules_.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < rules_.size(); ++i) best = std::max(best, height_of(i, memo));
    return best;
  }

  std::size_t height_of(std::size_t i, std::vector<std::size_t>& memo) const {
    if (memo[i]) return memo[i];
    std::size_t h = 1;
    for (std::size_t j = 0; j < rules_.size(); ++j)
      if (j != i && rules_[j].context.strictly_implies(rules_[i].context))
        h = std::max(h, 1 + height_of(j, memo));
    return memo[i] = h;
  }

  FeatureSpace space_;
  std::vector<Rule<P>> rules_;
  std::size_t default_rule_ = 0;
  std::size_t dag_height_ = 0;
};

/// Rebuilds a theory with probabilities converted to another scalar type
/// (e.g. exact rationals to doubles for comparison against numeric oracles).
template <class To, class From>
Theory<To> convert_theory(const Theory<From>& t) {
  std::vector<Rule<To>> rules;
  rules.reserve(t.rules().size());
  for (const Rule<From>& r : t.rules()) {
    Rule<To> c;
    c.id = r.id;
    c.context = r.context;
    for (const auto& o : r.distribution) {
      To p;
      if constexpr (std::is_same_v<To, From>) {
        p = o.probability;
      } else if constexpr (std::is_same_v<To, double>) {
        p = to_double(o.probability);
      } else {
        p = To(o.probability);
      }
      c.distribution.push_back({o.value, std::move(p)});
    }
    rules.push_back(std::move(c));
  }
  return Theory<To>::build(t.space(), std::move(rules));
}

}  // namespace pci
