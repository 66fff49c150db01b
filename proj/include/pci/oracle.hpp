#pragma once

// Ground-truth side of the project: dense joint distributions with exact
// conditionals, a maximum-entropy fit, and independence checks. Everything
// here works from first principles on the table; none of it consults the
// rule-combination engine, so the two sides can check each other.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pci/error.hpp"
#include "pci/feature_space.hpp"
#include "pci/rational.hpp"
#include "pci/schema.hpp"
#include "pci/theory.hpp"
#include "pci/values.hpp"

namespace pci {

struct JointDim {
  std::string name;
  std::vector<Atom> values;
};

/// A dense joint distribution over finitely many features, the last of which
/// is the target. Capped at 4096 cells: big enough for every desk-scale
/// check, small enough that exhaustive sweeps stay instant.
template <class P>
class JointTable {
public:
  static constexpr std::size_t kMaxCells = 4096;

  static JointTable build(std::vector<JointDim> dims, std::vector<P> probs) {
    JointTable t;
    t.dims_ = std::move(dims);
    t.probs_ = std::move(probs);
    if (t.dims_.empty()) throw Error("joint table needs at least one dimension");
    std::set<std::string> names;
    std::size_t cells = 1;
    for (const JointDim& d : t.dims_) {
      if (!names.insert(d.name).second)
        throw Error("joint table repeats dimension '" + d.name + "'");
      if (d.values.empty())
        throw Error("joint table dimension '" + d.name + "' has no values");
      std::set<std::string> vals;
      for (const Atom& a : d.values)
        if (!vals.insert(atom_to_string(a)).second)
          throw Error("dimension '" + d.name + "' repeats value '" + atom_to_string(a) +
                      "'");
      if (cells > kMaxCells / d.values.size())
        throw Error("joint table exceeds " + std::to_string(kMaxCells) + " cells");
      cells *= d.values.size();
    }
    if (t.probs_.size() != cells)
      throw Error("joint table has " + std::to_string(t.probs_.size()) +
                  " probabilities for " + std::to_string(cells) + " cells");
    P sum{};
    for (const P& p : t.probs_) {
      if (p < P{}) throw Error("joint table has a negative probability");
      sum += p;
    }
    P off = sum - prob_traits<P>::one();
    if (off < P{}) off = -off;
    if (to_double(off) > 1e-12)
      throw Error("joint table probabilities sum to " + prob_traits<P>::to_string(sum) +
                  ", not 1");
    return t;
  }

  const std::vector<JointDim>& dims() const { return dims_; }
  const std::string& target() const { return dims_.back().name; }
  std::size_t cells() const { return probs_.size(); }
  const std::vector<P>& probabilities() const { return probs_; }

  std::size_t dim_index(const std::string& name) const {
    for (std::size_t i = 0; i < dims_.size(); ++i)
      if (dims_[i].name == name) return i;
    throw Error("joint table has no dimension '" + name + "'");
  }

  std::size_t value_index(std::size_t dim, const Atom& value) const {
    const JointDim& d = dims_[dim];
    for (std::size_t i = 0; i < d.values.size(); ++i)
      if (d.values[i] == value) return i;
    throw Error("dimension '" + d.name + "' has no value '" + atom_to_string(value) + "'");
  }

  std::size_t flatten(const std::vector<std::size_t>& idx) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i)
      flat = flat * dims_[i].values.size() + idx[i];
    return flat;
  }

  P at(const std::vector<std::size_t>& idx) const { return probs_[flatten(idx)]; }
  void set(const std::vector<std::size_t>& idx, P p) { probs_[flatten(idx)] = std::move(p); }

  template <class Fn>
  void for_each_cell(Fn&& fn) const {
    std::vector<std::size_t> idx(dims_.size(), 0);
    for (std::size_t flat = 0; flat < probs_.size(); ++flat) {
      fn(static_cast<const std::vector<std::size_t>&>(idx), probs_[flat]);
      for (std::size_t i = idx.size(); i-- > 0;) {
        if (++idx[i] < dims_[i].values.size()) break;
        idx[i] = 0;
      }
    }
  }

  /// Whether the cell at `idx` lies inside the worlds a schema admits.
  /// Features the schema binds that the table does not model are an error:
  /// the table cannot answer questions about them.
  bool cell_matches(const std::vector<std::size_t>& idx, const Schema& schema) const {
    for (const auto& [name, set] : schema.bindings()) {
      std::size_t d = dim_index(name);
      if (!set.contains(dims_[d].values[idx[d]])) return false;
    }
    return true;
  }

  P mass(const Schema& schema) const {
    P total{};
    for_each_cell([&](const std::vector<std::size_t>& idx, const P& p) {
      if (cell_matches(idx, schema)) total += p;
    });
    return total;
  }

private:
  std::vector<JointDim> dims_;
  std::vector<P> probs_;
};

/// P(feature = v | given), one entry per value of the feature, straight from
/// the table. Conditioning on an impossible event is an error.
template <class P>
std::vector<Outcome<P>> exact_conditional(const JointTable<P>& joint, const Schema& given,
                                          const std::string& feature) {
  std::size_t d = joint.dim_index(feature);
  const JointDim& dim = joint.dims()[d];
  std::vector<P> num(dim.values.size(), P{});
  P den{};
  joint.for_each_cell([&](const std::vector<std::size_t>& idx, const P& p) {
    if (!joint.cell_matches(idx, given)) return;
    den += p;
    num[idx[d]] += p;
  });
  if (!(den > P{}))
    throw Error("conditioning event '" + given.to_string() + "' has probability zero");
  std::vector<Outcome<P>> out;
  out.reserve(dim.values.size());
  for (std::size_t i = 0; i < dim.values.size(); ++i)
    out.push_back({dim.values[i], num[i] / den});
  return out;
}

struct MeConstraint {
  Schema context;
  std::vector<Outcome<double>> distribution;  // over the target dimension
};

/// Fits a joint over `dims` (target last) agreeing with every conditional
/// constraint, by iterative proportional scaling from the uniform table:
/// cycle the constraints in order, each time rescaling the matching slice so
/// the target conditional equals the constrained one, until every constraint
/// holds within `tol`. The uniform start point means the fit adds no
/// structure beyond what the constraints force. Inconsistent constraints or
/// failure to converge raise errors.
inline JointTable<double> me_fit(std::vector<JointDim> dims,
                                 const std::vector<MeConstraint>& constraints,
                                 double tol = 1e-10, std::size_t max_sweeps = 100000) {
  std::size_t cells = 1;
  for (const JointDim& d : dims) cells *= std::max<std::size_t>(d.values.size(), 1);
  JointTable<double> t =
      JointTable<double>::build(std::move(dims), std::vector<double>(cells, 1.0 / cells));
  std::size_t td = t.dims().size() - 1;
  const JointDim& target = t.dims()[td];

  auto wanted = [&](const MeConstraint& c, std::size_t value_idx) {
    for (const auto& o : c.distribution)
      if (o.value == target.values[value_idx]) return o.probability;
    return 0.0;
  };

  std::vector<double> slice(target.values.size());
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double worst = 0.0;
    for (const MeConstraint& c : constraints) {
      std::fill(slice.begin(), slice.end(), 0.0);
      double ctx_mass = 0.0;
      t.for_each_cell([&](const std::vector<std::size_t>& idx, const double& p) {
        if (!t.cell_matches(idx, c.context)) return;
        ctx_mass += p;
        slice[idx[td]] += p;
      });
      if (ctx_mass <= 0.0)
        throw Error("constraints drove context '" + c.context.to_string() +
                    "' to probability zero");
      std::vector<double> factor(target.values.size(), 1.0);
      for (std::size_t v = 0; v < target.values.size(); ++v) {
        double want = wanted(c, v);
        double have = slice[v] / ctx_mass;
        worst = std::max(worst, std::abs(have - want));
        if (slice[v] > 0.0) {
          factor[v] = want * ctx_mass / slice[v];
        } else if (want > 0.0) {
          throw Error("constraint on '" + c.context.to_string() +
                      "' cannot be met: its slice already has probability zero");
        }
      }
      std::vector<std::size_t> idx(t.dims().size(), 0);
      t.for_each_cell([&](const std::vector<std::size_t>& i, const double& p) {
        if (t.cell_matches(i, c.context) && factor[i[td]] != 1.0)
          t.set(i, p * factor[i[td]]);
      });
    }
    if (worst <= tol) return t;
  }
  throw Error("maximum-entropy fit did not converge");
}

struct IndependenceReport {
  bool holds = true;
  double max_violation = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // conditioning assignments with probability zero
};

/// Checks P(A, B | g) = P(A | g) * P(B | g) for every joint assignment of the
/// A-features and B-features, at every assignment of `given_features`
/// conjoined with the fixed `given` schema. Zero-probability conditioning
/// assignments are skipped and counted.
template <class P>
IndependenceReport independence_holds(const JointTable<P>& joint,
                                      const std::vector<std::string>& a_features,
                                      const std::vector<std::string>& b_features,
                                      const Schema& given,
                                      const std::vector<std::string>& given_features = {},
                                      double tol = 1e-12) {
  IndependenceReport report;
  std::vector<std::size_t> ad, bd, gd;
  for (const auto& n : a_features) ad.push_back(joint.dim_index(n));
  for (const auto& n : b_features) bd.push_back(joint.dim_index(n));
  for (const auto& n : given_features) gd.push_back(joint.dim_index(n));

  auto enumerate = [&](const std::vector<std::size_t>& dims_idx, auto&& fn) {
    std::vector<std::size_t> pick(dims_idx.size(), 0);
    while (true) {
      fn(static_cast<const std::vector<std::size_t>&>(pick));
      std::size_t i = pick.size();
      for (; i-- > 0;) {
        if (++pick[i] < joint.dims()[dims_idx[i]].values.size()) break;
        pick[i] = 0;
      }
      if (i == std::size_t(-1)) break;
    }
  };

  enumerate(gd, [&](const std::vector<std::size_t>& gpick) {
    // Mass of the conditioning event and of each A/B/AB assignment under it.
    auto matches_g = [&](const std::vector<std::size_t>& idx) {
      for (std::size_t i = 0; i < gd.size(); ++i)
        if (idx[gd[i]] != gpick[i]) return false;
      return joint.cell_matches(idx, given);
    };
    P gmass{};
    joint.for_each_cell([&](const std::vector<std::size_t>& idx, const P& p) {
      if (matches_g(idx)) gmass += p;
    });
    if (!(gmass > P{})) {
      ++report.skipped;
      return;
    }
    enumerate(ad, [&](const std::vector<std::size_t>& apick) {
      enumerate(bd, [&](const std::vector<std::size_t>& bpick) {
        P pa{}, pb{}, pab{};
        joint.for_each_cell([&](const std::vector<std::size_t>& idx, const P& p) {
          if (!matches_g(idx)) return;
          bool ina = true, inb = true;
          for (std::size_t i = 0; i < ad.size(); ++i)
            if (idx[ad[i]] != apick[i]) {
              ina = false;
              break;
            }
          for (std::size_t i = 0; i < bd.size(); ++i)
            if (idx[bd[i]] != bpick[i]) {
              inb = false;
              break;
            }
          if (ina) pa += p;
          if (inb) pb += p;
          if (ina && inb) pab += p;
        });
        P lhs = pab * gmass;  // compare pab/g == (pa/g)(pb/g) without division
        P rhs = pa * pb;
        P diff = lhs > rhs ? lhs - rhs : rhs - lhs;
        // The cross-multiplied difference is |P(ab|g) - P(a|g)P(b|g)| * g^2.
        double viol = to_double(diff) / (to_double(gmass) * to_double(gmass));
        report.max_violation = std::max(report.max_violation, viol);
        ++report.checked;
        if (viol > tol) report.holds = false;
      });
    });
  });
  return report;
}

struct EventIndependence {
  bool defined = false;   // false when the conditioning event has no mass
  double violation = 0.0;  // |P(a and b | given) - P(a | given) P(b | given)|
};

/// Independence of two specific events given a third, straight off the table.
template <class P>
EventIndependence event_independence(const JointTable<P>& joint, const Schema& a,
                                     const Schema& b, const Schema& given) {
  EventIndependence out;
  P pg{}, pa{}, pb{}, pab{};
  joint.for_each_cell([&](const std::vector<std::size_t>& idx, const P& p) {
    if (!joint.cell_matches(idx, given)) return;
    pg += p;
    bool ina = joint.cell_matches(idx, a);
    bool inb = joint.cell_matches(idx, b);
    if (ina) pa += p;
    if (inb) pb += p;
    if (ina && inb) pab += p;
  });
  if (!(pg > P{})) return out;
  out.defined = true;
  P lhs = pab * pg;
  P rhs = pa * pb;
  P diff = lhs > rhs ? lhs - rhs : rhs - lhs;
  out.violation = to_double(diff) / (to_double(pg) * to_double(pg));
  return out;
}

/// Reads conditional-distribution rules off a joint: one rule per context,
/// each carrying the target's exact conditional under that context.
template <class P>
std::vector<Rule<P>> rules_from_joint(const JointTable<P>& joint,
                                      const std::vector<Schema>& contexts) {
  std::vector<Rule<P>> rules;
  std::size_t n = 0;
  for (const Schema& ctx : contexts) {
    Rule<P> r;
    r.id = "r" + std::to_string(++n);
    r.context = ctx;
    r.distribution = exact_conditional(joint, ctx, joint.target());
    rules.push_back(std::move(r));
  }
  return rules;
}

/// A feature space in which every table dimension is an enumerated feature
/// and the last dimension is the target. Lets joint-derived rules, schemata,
/// and theories be built without a separate declaration file.
template <class P>
FeatureSpace space_from_joint(const JointTable<P>& joint) {
  std::vector<FeatureDef> features;
  for (const JointDim& d : joint.dims()) {
    FeatureDef f;
    f.name = d.name;
    f.is_enum = true;
    for (const Atom& a : d.values) f.enum_values.push_back(atom_to_string(a));
    features.push_back(std::move(f));
  }
  return FeatureSpace::build(std::move(features), {}, joint.target());
}

inline double entropy(const JointTable<double>& joint) {
  double h = 0.0;
  for (double p : joint.probabilities())
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (std::string& s : out) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace detail

/// Parses a joint distribution from CSV. The header row names the columns:
/// zero or more plain features, then the target feature, then the literal
/// column `p`. Each data row gives one cell's values and its probability
/// (decimal or numerator/denominator). Unlisted cells are zero. Value order
/// within a dimension follows first appearance.
inline JointTable<Rat> parse_joint_csv(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(cur);

  std::vector<std::vector<std::string>> rows;
  for (const std::string& line : lines) {
    std::string stripped = line;
    std::size_t b = stripped.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    if (stripped[b] == '#') continue;
    rows.push_back(detail::split_csv_line(stripped));
  }
  if (rows.size() < 2) throw Error("joint CSV needs a header row and at least one cell");
  const std::vector<std::string>& header = rows.front();
  if (header.size() < 2 || header.back() != "p")
    throw Error("joint CSV header must end with the probability column 'p'");
  std::size_t nfeat = header.size() - 1;
  for (std::size_t i = 0; i < nfeat; ++i)
    if (header[i].empty()) throw Error("joint CSV header has an empty column name");

  std::vector<JointDim> dims(nfeat);
  for (std::size_t i = 0; i < nfeat; ++i) dims[i].name = header[i];
  std::vector<std::vector<std::size_t>> cell_idx;
  std::vector<Rat> cell_p;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw Error("joint CSV row " + std::to_string(r + 1) + " has " +
                  std::to_string(row.size()) + " columns, expected " +
                  std::to_string(header.size()));
    std::vector<std::size_t> idx(nfeat);
    for (std::size_t i = 0; i < nfeat; ++i) {
      if (row[i].empty())
        throw Error("joint CSV row " + std::to_string(r + 1) + " has an empty value");
      Atom a = row[i];
      auto& vals = dims[i].values;
      auto it = std::find(vals.begin(), vals.end(), a);
      if (it == vals.end()) {
        vals.push_back(a);
        idx[i] = vals.size() - 1;
      } else {
        idx[i] = static_cast<std::size_t>(it - vals.begin());
      }
    }
    cell_idx.push_back(std::move(idx));
    cell_p.push_back(parse_probability(row[nfeat]));
  }

  std::size_t cells = 1;
  for (const JointDim& d : dims) {
    if (d.values.empty()) throw Error("joint CSV column '" + d.name + "' has no values");
    if (cells > JointTable<Rat>::kMaxCells / d.values.size())
      throw Error("joint CSV exceeds " + std::to_string(JointTable<Rat>::kMaxCells) +
                  " cells");
    cells *= d.values.size();
  }
  std::vector<Rat> probs(cells, Rat(0));
  std::vector<bool> seen(cells, false);
  for (std::size_t k = 0; k < cell_idx.size(); ++k) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < nfeat; ++i)
      flat = flat * dims[i].values.size() + cell_idx[k][i];
    if (seen[flat]) throw Error("joint CSV lists the same cell twice");
    seen[flat] = true;
    probs[flat] = cell_p[k];
  }
  return JointTable<Rat>::build(std::move(dims), std::move(probs));
}

template <class P>
std::string serialize_joint_csv(const JointTable<P>& joint) {
  std::string out;
  for (const JointDim& d : joint.dims()) out += d.name + ",";
  out += "p\n";
  joint.for_each_cell([&](const std::vector<std::size_t>& idx, const P& p) {
    if (!(p > P{})) return;
    for (std::size_t i = 0; i < idx.size(); ++i)
      out += atom_to_string(joint.dims()[i].values[idx[i]]) + ",";
    out += prob_traits<P>::to_string(p) + "\n";
  });
  return out;
}

template <class To, class From>
JointTable<To> convert_joint(const JointTable<From>& joint) {
  std::vector<To> probs;
  probs.reserve(joint.probabilities().size());
  for (const From& p : joint.probabilities()) {
    if constexpr (std::is_same_v<To, From>) {
      probs.push_back(p);
    } else if constexpr (std::is_same_v<To, double>) {
      probs.push_back(to_double(p));
    } else {
      probs.push_back(To(p));
    }
  }
  return JointTable<To>::build(joint.dims(), std::move(probs));
}

}  // namespace pci
