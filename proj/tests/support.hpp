// Shared helpers for the test suite: tiny Boolean feature spaces, compact
// rule/schema builders, seeded random generators, and brute-force referees
// implemented straight from the definitions so they can disagree with the
// library's cleverer code paths.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pci/theory.hpp"

namespace testsupport {

using pci::FeatureDef;
using pci::FeatureKind;
using pci::FeatureSpace;
using pci::Outcome;
using pci::Rat;
using pci::Rule;
using pci::Schema;
using pci::Theory;
using pci::ValueSet;

/// n Boolean ground features x1..xn plus a Boolean target g.
inline FeatureSpace bool_space(std::size_t n) {
  std::vector<FeatureDef> features;
  for (std::size_t i = 1; i <= n; ++i) {
    FeatureDef f;
    f.name = "x" + std::to_string(i);
    f.kind = FeatureKind::world;
    f.is_enum = true;
    f.enum_values = {"t", "f"};
    features.push_back(std::move(f));
  }
  FeatureDef g;
  g.name = "g";
  g.kind = FeatureKind::world;
  g.is_enum = true;
  g.enum_values = {"t", "f"};
  features.push_back(std::move(g));
  return FeatureSpace::build(std::move(features), {}, "g");
}

/// Bindings as (feature, "v" or "v1|v2") pairs.
using Bindings = std::vector<std::pair<std::string, std::string>>;

inline Schema sch(const FeatureSpace& space, const Bindings& bindings) {
  std::map<std::string, ValueSet> out;
  for (const auto& [feature, spec] : bindings) {
    std::vector<std::string> atoms;
    std::string cur;
    for (char c : spec) {
      if (c == '|') {
        atoms.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    atoms.push_back(cur);
    out[feature] = ValueSet::of_atoms(std::move(atoms));
  }
  return Schema::of(space, std::move(out));
}

/// A Boolean-target rule: P(g=t) = p, P(g=f) = 1-p.
inline Rule<Rat> brule(const FeatureSpace& space, std::string id, std::size_t index,
                       const Bindings& bindings, const Rat& p) {
  Rule<Rat> r;
  r.id = std::move(id);
  r.index = index;
  r.context = sch(space, bindings);
  r.distribution = {{std::string("t"), p}, {std::string("f"), Rat(1) - p}};
  return r;
}

struct RuleSpec {
  std::string id;
  Bindings bindings;
  Rat p;
};

inline Theory<Rat> btheory(const FeatureSpace& space, const std::vector<RuleSpec>& specs) {
  std::vector<Rule<Rat>> rules;
  for (std::size_t i = 0; i < specs.size(); ++i)
    rules.push_back(brule(space, specs[i].id, i, specs[i].bindings, specs[i].p));
  return Theory<Rat>::build(space, std::move(rules));
}

/// Every fully ground situation: one atomic value per non-target feature.
inline std::vector<Schema> all_ground(const FeatureSpace& space) {
  std::vector<const FeatureDef*> dims;
  for (const auto& f : space.features())
    if (f.name != space.target()) dims.push_back(&f);
  std::vector<Schema> out;
  std::vector<std::size_t> idx(dims.size(), 0);
  while (true) {
    std::map<std::string, ValueSet> bindings;
    for (std::size_t i = 0; i < dims.size(); ++i)
      bindings[dims[i]->name] = ValueSet::of_atoms({dims[i]->enum_values[idx[i]]});
    out.push_back(Schema::of(space, std::move(bindings)));
    std::size_t i = 0;
    for (; i < dims.size(); ++i) {
      if (++idx[i] < dims[i]->enum_values.size()) break;
      idx[i] = 0;
    }
    if (i == dims.size()) break;
  }
  return out;
}

/// Satisfaction and most-specific selection recomputed with plain loops.
inline bool brute_satisfies(const Schema& situation, const Schema& context) {
  for (const auto& [feature, required] : context.bindings()) {
    const ValueSet* have = situation.find(feature);
    if (!have || !have->subset_of(required)) return false;
  }
  return true;
}

inline std::vector<std::size_t> brute_msr(const Theory<Rat>& theory, const Schema& situation) {
  std::vector<std::size_t> satisfied;
  for (std::size_t i = 0; i < theory.rules().size(); ++i)
    if (brute_satisfies(situation, theory.rule(i).context)) satisfied.push_back(i);
  std::vector<std::size_t> out;
  for (std::size_t i : satisfied) {
    bool shadowed = false;
    for (std::size_t j : satisfied)
      if (j != i && theory.rule(j).context.strictly_implies(theory.rule(i).context)) {
        shadowed = true;
        break;
      }
    if (!shadowed) out.push_back(i);
  }
  return out;
}

/// Definitional separable-sequence check: at each position, every feature the
/// rule shares with the remainder must be shared with one single rule.
inline bool brute_separable_sequence(const Theory<Rat>& theory,
                                     const std::vector<std::size_t>& order) {
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    const Schema& ctx = theory.rule(order[k]).context;
    std::set<std::size_t> partners;
    for (const auto& [feature, values] : ctx.bindings()) {
      for (std::size_t m = k + 1; m < order.size(); ++m) {
        const ValueSet* other = theory.rule(order[m]).context.find(feature);
        if (other && !intersect(values, *other).empty()) partners.insert(order[m]);
      }
    }
    if (partners.size() > 1) return false;
  }
  return true;
}

inline bool brute_has_separable_order(const Theory<Rat>& theory, std::vector<std::size_t> set) {
  std::sort(set.begin(), set.end());
  do {
    if (brute_separable_sequence(theory, set)) return true;
  } while (std::next_permutation(set.begin(), set.end()));
  return false;
}

/// Every situation distinguishable over a small Boolean space: each feature
/// unbound, t, or f.
inline std::vector<Schema> all_boolean_situations(const FeatureSpace& space) {
  std::vector<std::string> names;
  for (const auto& f : space.features())
    if (f.name != space.target()) names.push_back(f.name);
  std::vector<Schema> out;
  std::vector<int> choice(names.size(), 0);  // 0 unbound, 1 t, 2 f
  while (true) {
    std::map<std::string, ValueSet> bindings;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (choice[i] != 0)
        bindings[names[i]] = ValueSet::of_atoms({choice[i] == 1 ? "t" : "f"});
    out.push_back(Schema::of(space, std::move(bindings)));
    std::size_t i = 0;
    for (; i < names.size(); ++i) {
      if (++choice[i] <= 2) break;
      choice[i] = 0;
    }
    if (i == names.size()) break;
  }
  return out;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::size_t below(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_);
  }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(gen_) < p; }
  /// A probability from the grid k/64 with 0 < k < 64.
  Rat probability() { return Rat(1 + static_cast<long>(below(63)), 64); }
  /// A probability from the grid k/40 with 4 <= k <= 36 (clear of 0 and 1).
  Rat mid_probability() { return Rat(4 + static_cast<long>(below(33)), 40); }

  std::mt19937_64& gen() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// A random Boolean theory: default rule plus up to extra_rules distinct
/// random contexts. Returns nothing when a duplicate context came up.
/// With entangle_chance, sometimes adds a ring of three pairwise-overlapping
/// two-feature contexts, the smallest pattern with no separable ordering, so
/// validation tests see a healthy share of rejectable theories.
inline std::optional<Theory<Rat>> random_bool_theory(Rng& rng, const FeatureSpace& space,
                                                     std::size_t extra_rules,
                                                     double bind_chance = 0.45,
                                                     double entangle_chance = 0.0) {
  std::vector<RuleSpec> specs;
  specs.push_back({"prior", {}, rng.probability()});
  std::set<std::string> seen{""};
  std::size_t n = space.features().size() - 1;
  for (std::size_t r = 0; r < extra_rules; ++r) {
    Bindings bindings;
    std::string key;
    for (std::size_t i = 1; i <= n; ++i) {
      if (!rng.chance(bind_chance)) continue;
      std::string v = rng.chance(0.5) ? "t" : "f";
      bindings.emplace_back("x" + std::to_string(i), v);
      key += "x" + std::to_string(i) + "=" + v + ";";
    }
    if (!seen.insert(key).second) return std::nullopt;
    specs.push_back({"r" + std::to_string(r + 1), std::move(bindings), rng.probability()});
  }
  if (entangle_chance > 0 && n >= 3 && rng.chance(entangle_chance)) {
    std::vector<std::size_t> feats;
    for (std::size_t i = 1; i <= n; ++i) feats.push_back(i);
    std::shuffle(feats.begin(), feats.end(), rng.gen());
    feats.resize(3);
    std::sort(feats.begin(), feats.end());
    std::vector<std::string> vals;
    for (int i = 0; i < 3; ++i) vals.push_back(rng.chance(0.5) ? "t" : "f");
    auto add_pair = [&](std::size_t a, std::size_t b, const char* id) {
      Bindings bindings;
      std::string key;
      for (std::size_t j : {a, b}) {
        bindings.emplace_back("x" + std::to_string(feats[j]), vals[j]);
        key += "x" + std::to_string(feats[j]) + "=" + vals[j] + ";";
      }
      if (!seen.insert(key).second) return false;
      specs.push_back({id, std::move(bindings), rng.probability()});
      return true;
    };
    if (!add_pair(0, 1, "e1") || !add_pair(1, 2, "e2") || !add_pair(0, 2, "e3"))
      return std::nullopt;
  }
  return btheory(space, specs);
}

/// A random situation over the ground features: each feature bound to a
/// single value with probability bind_chance, else left unknown.
inline Schema random_situation(Rng& rng, const FeatureSpace& space, double bind_chance = 0.7) {
  Bindings bindings;
  for (const auto& f : space.features()) {
    if (f.name == space.target()) continue;
    if (!rng.chance(bind_chance)) continue;
    bindings.emplace_back(f.name, f.enum_values[rng.below(f.enum_values.size())]);
  }
  return sch(space, bindings);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace testsupport

#ifdef PCI_BIN_PATH
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>
#include <unistd.h>

namespace testsupport {

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

/// Runs the built CLI with the given argument string, capturing exit status,
/// stdout, and stderr.
inline CliResult run_cli(const std::string& args) {
  static int counter = 0;
  namespace fs = std::filesystem;
  fs::path base = fs::temp_directory_path() /
                  ("pci_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::path out_path = base.string() + ".out";
  fs::path err_path = base.string() + ".err";
  std::string cmd = std::string(PCI_BIN_PATH) + " " + args + " >" + out_path.string() + " 2>" +
                    err_path.string();
  int rc = std::system(cmd.c_str());
  CliResult result;
  result.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  result.out = read_file(out_path.string());
  result.err = read_file(err_path.string());
  fs::remove(out_path);
  fs::remove(err_path);
  return result;
}

}  // namespace testsupport
#endif  // PCI_BIN_PATH
