#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "pci/error.hpp"

namespace pci {

/// One atomic feature value: an enumeration symbol or an integer.
using Atom = std::variant<std::int64_t, std::string>;

inline std::string atom_to_string(const Atom& a) {
  if (std::holds_alternative<std::int64_t>(a))
    return std::to_string(std::get<std::int64_t>(a));
  return std::get<std::string>(a);
}

/// Upper bound sentinel for intervals open to the right, as in 10..inf.
inline constexpr std::int64_t kNoUpperBound = std::numeric_limits<std::int64_t>::max();

struct IntInterval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;  // kNoUpperBound means unbounded above

  bool unbounded() const { return hi == kNoUpperBound; }
  bool contains(std::int64_t v) const { return v >= lo && (unbounded() || v <= hi); }
  bool operator==(const IntInterval&) const = default;
};

/// A set of values for one feature, in canonical form: sorted unique atom
/// lists for enumeration features, sorted disjoint maximal intervals for
/// integer features. Canonical form makes structural equality coincide
/// with set equality.
class ValueSet {
public:
  ValueSet() = default;

  static ValueSet of_atoms(std::vector<std::string> atoms) {
    ValueSet s;
    s.is_atoms_ = true;
    std::sort(atoms.begin(), atoms.end());
    atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
    s.atoms_ = std::move(atoms);
    return s;
  }

  static ValueSet of_intervals(std::vector<IntInterval> ivs) {
    for (const auto& iv : ivs)
      if (!iv.unbounded() && iv.lo > iv.hi)
        throw Error("interval lower bound exceeds upper bound");
    ValueSet s;
    s.is_atoms_ = false;
    std::sort(ivs.begin(), ivs.end(),
              [](const IntInterval& a, const IntInterval& b) { return a.lo < b.lo; });
    for (const auto& iv : ivs) {
      if (!s.intervals_.empty()) {
        IntInterval& last = s.intervals_.back();
        // merge overlapping or adjacent runs of integers
        if (last.unbounded() || (iv.lo <= last.hi + 1)) {
          if (last.unbounded() || iv.unbounded())
            last.hi = kNoUpperBound;
          else
            last.hi = std::max(last.hi, iv.hi);
          continue;
        }
      }
      s.intervals_.push_back(iv);
    }
    return s;
  }

  static ValueSet singleton(const Atom& a) {
    if (std::holds_alternative<std::int64_t>(a)) {
      std::int64_t v = std::get<std::int64_t>(a);
      return of_intervals({{v, v}});
    }
    return of_atoms({std::get<std::string>(a)});
  }

  bool is_atoms() const { return is_atoms_; }
  bool empty() const { return is_atoms_ ? atoms_.empty() : intervals_.empty(); }
  const std::vector<std::string>& atoms() const { return atoms_; }
  const std::vector<IntInterval>& intervals() const { return intervals_; }

  bool contains(const Atom& a) const {
    if (is_atoms_) {
      if (!std::holds_alternative<std::string>(a)) return false;
      return std::binary_search(atoms_.begin(), atoms_.end(), std::get<std::string>(a));
    }
    if (!std::holds_alternative<std::int64_t>(a)) return false;
    std::int64_t v = std::get<std::int64_t>(a);
    for (const auto& iv : intervals_)
      if (iv.contains(v)) return true;
    return false;
  }

  bool subset_of(const ValueSet& other) const {
    require_same_kind(other);
    if (is_atoms_) {
      return std::includes(other.atoms_.begin(), other.atoms_.end(),
                           atoms_.begin(), atoms_.end());
    }
    for (const auto& iv : intervals_) {
      bool covered = false;
      for (const auto& o : other.intervals_) {
        if (iv.lo >= o.lo && (o.unbounded() || (!iv.unbounded() && iv.hi <= o.hi))) {
          covered = true;
          break;
        }
      }
      if (!covered) return false;
    }
    return true;
  }

  friend ValueSet intersect(const ValueSet& a, const ValueSet& b) {
    a.require_same_kind(b);
    if (a.is_atoms_) {
      std::vector<std::string> out;
      std::set_intersection(a.atoms_.begin(), a.atoms_.end(),
                            b.atoms_.begin(), b.atoms_.end(), std::back_inserter(out));
      return of_atoms(std::move(out));
    }
    std::vector<IntInterval> out;
    for (const auto& x : a.intervals_) {
      for (const auto& y : b.intervals_) {
        std::int64_t lo = std::max(x.lo, y.lo);
        std::int64_t hi = (x.unbounded()) ? y.hi : (y.unbounded() ? x.hi : std::min(x.hi, y.hi));
        if (hi == kNoUpperBound || lo <= hi) out.push_back({lo, hi});
      }
    }
    return of_intervals(std::move(out));
  }

  friend ValueSet unite(const ValueSet& a, const ValueSet& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    a.require_same_kind(b);
    if (a.is_atoms_) {
      std::vector<std::string> out = a.atoms_;
      out.insert(out.end(), b.atoms_.begin(), b.atoms_.end());
      return of_atoms(std::move(out));
    }
    std::vector<IntInterval> out = a.intervals_;
    out.insert(out.end(), b.intervals_.begin(), b.intervals_.end());
    return of_intervals(std::move(out));
  }

  bool operator==(const ValueSet&) const = default;

  std::string to_string() const {
    std::string out;
    if (is_atoms_) {
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (i) out += "|";
        out += atoms_[i];
      }
      return out;
    }
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      if (i) out += "|";
      const auto& iv = intervals_[i];
      if (!iv.unbounded() && iv.lo == iv.hi) {
        out += std::to_string(iv.lo);
      } else {
        out += std::to_string(iv.lo);
        out += "..";
        out += iv.unbounded() ? "inf" : std::to_string(iv.hi);
      }
    }
    return out;
  }

private:
  void require_same_kind(const ValueSet& other) const {
    if (!empty() && !other.empty() && is_atoms_ != other.is_atoms_)
      throw Error("value sets of different kinds cannot be combined");
  }

  bool is_atoms_ = true;
  std::vector<std::string> atoms_;
  std::vector<IntInterval> intervals_;
};

}  // namespace pci
