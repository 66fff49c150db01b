#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pci/error.hpp"
#include "pci/feature_space.hpp"
#include "pci/values.hpp"

namespace pci {

/// A feature schema: a partial description of the world that binds some
/// features to non-empty sets of admissible values. Unbound features are
/// unconstrained. Construction canonicalizes: a binding that admits a
/// feature's whole domain is the same as no binding and gets dropped, so
/// structural equality coincides with semantic equality.
///
/// Rule contexts, situations, and the intermediate descriptions produced
/// during inference are all schemata; a situation is just a schema we happen
/// to be asking about.
class Schema {
public:
  Schema() = default;

  static Schema of(const FeatureSpace& space, std::map<std::string, ValueSet> bindings) {
    Schema s;
    for (auto& [name, set] : bindings) {
      const FeatureDef& f = space.feature(name);
      if (set.empty()) throw Error("schema binds feature '" + name + "' to no values");
      if (!set.subset_of(f.full_set()))
        throw Error("schema binds feature '" + name + "' outside its domain");
      if (f.full_set().subset_of(set)) continue;  // whole domain: not a constraint
      s.bindings_.emplace(name, std::move(set));
    }
    return s;
  }

  static Schema empty_schema() { return {}; }

  const std::map<std::string, ValueSet>& bindings() const { return bindings_; }
  bool is_empty() const { return bindings_.empty(); }

  bool binds(const std::string& feature) const { return bindings_.count(feature) != 0; }

  const ValueSet* find(const std::string& feature) const {
    auto it = bindings_.find(feature);
    return it == bindings_.end() ? nullptr : &it->second;
  }

  std::vector<std::string> bound_features() const {
    std::vector<std::string> out;
    out.reserve(bindings_.size());
    for (const auto& [name, set] : bindings_) out.push_back(name);
    return out;
  }

  /// True when every world matching *this also matches `other`: for each
  /// feature `other` binds, *this binds it to a subset.
  bool implies(const Schema& other) const {
    for (const auto& [name, set] : other.bindings_) {
      auto it = bindings_.find(name);
      if (it == bindings_.end() || !it->second.subset_of(set)) return false;
    }
    return true;
  }

  bool strictly_implies(const Schema& other) const {
    return implies(other) && !(other.implies(*this));
  }

  bool operator==(const Schema&) const = default;

  std::string to_string() const {
    if (bindings_.empty()) return "*";
    std::string out;
    for (const auto& [name, set] : bindings_) {
      if (!out.empty()) out += ", ";
      out += name + "=" + set.to_string();
    }
    return out;
  }

private:
  std::map<std::string, ValueSet> bindings_;
};

/// A situation satisfies a rule's context when it implies it: everything the
/// context requires is guaranteed by the situation.
inline bool satisfies(const Schema& situation, const Schema& context) {
  return situation.implies(context);
}

/// Features two descriptions have in common: those both constrain to
/// overlapping value sets. When the space declares an action feature, a
/// situation that leaves it unbound is taken to cover every action, so an
/// action binding in the other schema still counts as shared. `is_situation`
/// flags which of the two sides get that reading.
struct SharedFeatures {
  std::set<std::string> features;
  Schema overlap;  // the shared features bound to the intersected value sets
};

inline SharedFeatures shared_features(const FeatureSpace& space, const Schema& a,
                                      bool a_is_situation, const Schema& b,
                                      bool b_is_situation) {
  SharedFeatures out;
  std::map<std::string, ValueSet> overlap;
  auto consider = [&](const std::string& name, const ValueSet& va, const ValueSet& vb) {
    ValueSet both = intersect(va, vb);
    if (both.empty()) return;
    out.features.insert(name);
    overlap.emplace(name, std::move(both));
  };
  for (const auto& [name, va] : a.bindings()) {
    if (const ValueSet* vb = b.find(name)) {
      consider(name, va, *vb);
    } else if (b_is_situation && space.action() && *space.action() == name) {
      consider(name, va, space.full_set(name));
    }
  }
  if (a_is_situation && space.action()) {
    const std::string& act = *space.action();
    if (!a.binds(act))
      if (const ValueSet* vb = b.find(act)) consider(act, space.full_set(act), *vb);
  }
  out.overlap = Schema::of(space, std::move(overlap));
  return out;
}

/// Pointwise conjunction of two schemata; errors if any feature's sets are
/// disjoint (no world matches both).
inline Schema conjoin(const FeatureSpace& space, const Schema& a, const Schema& b) {
  std::map<std::string, ValueSet> merged(a.bindings().begin(), a.bindings().end());
  for (const auto& [name, vb] : b.bindings()) {
    auto it = merged.find(name);
    if (it == merged.end()) {
      merged.emplace(name, vb);
    } else {
      ValueSet both = intersect(it->second, vb);
      if (both.empty())
        throw Error("conjunction binds feature '" + name + "' to no values");
      it->second = std::move(both);
    }
  }
  return Schema::of(space, std::move(merged));
}

/// Restriction of a schema to a set of features.
inline Schema project(const FeatureSpace& space, const Schema& s,
                      const std::set<std::string>& features) {
  std::map<std::string, ValueSet> kept;
  for (const auto& [name, set] : s.bindings())
    if (features.count(name)) kept.emplace(name, set);
  return Schema::of(space, std::move(kept));
}

}  // namespace pci
