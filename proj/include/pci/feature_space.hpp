#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pci/error.hpp"
#include "pci/values.hpp"

namespace pci {

enum class FeatureKind { world, action };

/// A feature declaration: a name plus either a finite enumeration of atomic
/// values or an integer range (the upper end may be unbounded). At most one
/// feature per theory carries the action kind.
struct FeatureDef {
  std::string name;
  FeatureKind kind = FeatureKind::world;
  bool is_enum = true;
  std::vector<std::string> enum_values;  // declaration order, unique
  IntInterval range;                     // integer features only

  ValueSet full_set() const {
    if (is_enum) return ValueSet::of_atoms(enum_values);
    return ValueSet::of_intervals({range});
  }
};

/// One term of a value expression as written in a theory file:
/// a name (atom or hierarchy node), a bare integer, or an integer interval.
struct ValueTerm {
  enum class Kind { name, number, interval };
  Kind kind = Kind::name;
  std::string name;
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  static ValueTerm named(std::string n) { return {Kind::name, std::move(n), 0, 0}; }
  static ValueTerm number(std::int64_t v) { return {Kind::number, {}, v, v}; }
  static ValueTerm interval(std::int64_t lo, std::int64_t hi) {
    return {Kind::interval, {}, lo, hi};
  }
  bool operator==(const ValueTerm&) const = default;
};

/// A union of terms, e.g. "wall|food" or "1..3|7".
using ValueExpr = std::vector<ValueTerm>;

/// Immutable universe of a theory: feature declarations, value hierarchies,
/// the target feature and the optional action feature. Everything that
/// interprets value expressions or schemata is resolved against one of these.
class FeatureSpace {
public:
  using Hierarchy = std::map<std::string, std::map<std::string, ValueExpr>>;

  static FeatureSpace build(std::vector<FeatureDef> features, Hierarchy hierarchy,
                            std::string target) {
    FeatureSpace sp;
    sp.features_ = std::move(features);
    sp.hierarchy_ = std::move(hierarchy);
    sp.target_ = std::move(target);
    for (std::size_t i = 0; i < sp.features_.size(); ++i) {
      const FeatureDef& f = sp.features_[i];
      if (f.name.empty()) throw Error("feature with empty name");
      if (!sp.index_.emplace(f.name, i).second)
        throw Error("duplicate feature name '" + f.name + "'");
      if (f.is_enum) {
        if (f.enum_values.empty())
          throw Error("feature '" + f.name + "' has an empty value enumeration");
        std::set<std::string> seen;
        for (const auto& v : f.enum_values)
          if (!seen.insert(v).second)
            throw Error("feature '" + f.name + "' repeats value '" + v + "'");
      } else if (!f.range.unbounded() && f.range.lo > f.range.hi) {
        throw Error("feature '" + f.name + "' has an empty integer range");
      }
      if (f.kind == FeatureKind::action) {
        if (sp.action_) throw Error("more than one action feature declared");
        sp.action_ = f.name;
      }
    }
    if (!sp.index_.count(sp.target_))
      throw Error("target feature '" + sp.target_ + "' is not declared");
    if (sp.action_ && *sp.action_ == sp.target_)
      throw Error("the target feature cannot be the action feature");
    sp.validate_hierarchy();
    return sp;
  }

  const std::vector<FeatureDef>& features() const { return features_; }
  const std::string& target() const { return target_; }
  const std::optional<std::string>& action() const { return action_; }
  const Hierarchy& hierarchy() const { return hierarchy_; }

  bool has_feature(const std::string& name) const { return index_.count(name) != 0; }

  const FeatureDef& feature(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown feature '" + name + "'");
    return features_[it->second];
  }

  std::size_t feature_index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown feature '" + name + "'");
    return it->second;
  }

  ValueSet full_set(const std::string& name) const { return feature(name).full_set(); }

  /// Resolves a value expression for a feature into a canonical value set,
  /// expanding hierarchy nodes. Errors on unknown names, cyclic node
  /// references, values outside the domain, and empty expansions.
  ValueSet expand(const std::string& feature_name, const ValueExpr& expr) const {
    const FeatureDef& f = feature(feature_name);
    std::vector<std::string> stack;
    ValueSet out = expand_terms(f, expr, stack);
    if (out.empty())
      throw Error("value expression for feature '" + feature_name + "' is empty");
    return out;
  }

  /// Position of an atom in the target feature's domain order; used to keep
  /// distributions and printed output deterministic.
  std::size_t domain_position(const FeatureDef& f, const Atom& a) const {
    if (f.is_enum) {
      const std::string& s = std::get<std::string>(a);
      for (std::size_t i = 0; i < f.enum_values.size(); ++i)
        if (f.enum_values[i] == s) return i;
      throw Error("value '" + s + "' is not in the domain of '" + f.name + "'");
    }
    std::int64_t v = std::get<std::int64_t>(a);
    return static_cast<std::size_t>(v - f.range.lo);
  }

private:
  ValueSet expand_terms(const FeatureDef& f, const ValueExpr& expr,
                        std::vector<std::string>& stack) const {
    ValueSet acc;
    for (const ValueTerm& t : expr) {
      switch (t.kind) {
        case ValueTerm::Kind::number: {
          if (f.is_enum) {
            std::string name = std::to_string(t.lo);
            check_enum_atom(f, name);
            acc = unite(acc, ValueSet::of_atoms({name}));
          } else {
            check_range(f, {t.lo, t.lo});
            acc = unite(acc, ValueSet::of_intervals({{t.lo, t.lo}}));
          }
          break;
        }
        case ValueTerm::Kind::interval: {
          if (f.is_enum)
            throw Error("interval value used with enumeration feature '" + f.name + "'");
          if (t.hi != kNoUpperBound && t.lo > t.hi)
            throw Error("empty interval in expression for '" + f.name + "'");
          check_range(f, {t.lo, t.hi});
          acc = unite(acc, ValueSet::of_intervals({{t.lo, t.hi}}));
          break;
        }
        case ValueTerm::Kind::name: {
          auto hf = hierarchy_.find(f.name);
          if (hf != hierarchy_.end()) {
            auto node = hf->second.find(t.name);
            if (node != hf->second.end()) {
              for (const auto& frame : stack)
                if (frame == t.name)
                  throw Error("cyclic hierarchy node '" + t.name + "' for feature '" +
                              f.name + "'");
              stack.push_back(t.name);
              acc = unite(acc, expand_terms(f, node->second, stack));
              stack.pop_back();
              break;
            }
          }
          if (!f.is_enum)
            throw Error("unknown hierarchy node '" + t.name + "' for integer feature '" +
                        f.name + "'");
          check_enum_atom(f, t.name);
          acc = unite(acc, ValueSet::of_atoms({t.name}));
          break;
        }
      }
    }
    return acc;
  }

  void check_enum_atom(const FeatureDef& f, const std::string& name) const {
    for (const auto& v : f.enum_values)
      if (v == name) return;
    throw Error("value '" + name + "' is not in the domain of feature '" + f.name + "'");
  }

  void check_range(const FeatureDef& f, IntInterval iv) const {
    if (iv.lo < f.range.lo ||
        (!f.range.unbounded() && (iv.unbounded() || iv.hi > f.range.hi)))
      throw Error("interval outside the domain of feature '" + f.name + "'");
  }

  void validate_hierarchy() {
    for (const auto& [fname, nodes] : hierarchy_) {
      const FeatureDef& f = feature(fname);
      for (const auto& [node, expr] : nodes) {
        if (f.is_enum)
          for (const auto& v : f.enum_values)
            if (v == node)
              throw Error("hierarchy node '" + node + "' collides with a value of '" +
                          fname + "'");
        std::vector<std::string> stack{node};
        ValueSet s = expand_terms(f, expr, stack);
        if (s.empty())
          throw Error("hierarchy node '" + node + "' of '" + fname + "' expands to nothing");
      }
    }
  }

  std::vector<FeatureDef> features_;
  std::map<std::string, std::size_t> index_;
  Hierarchy hierarchy_;
  std::string target_;
  std::optional<std::string> action_;
};

}  // namespace pci
