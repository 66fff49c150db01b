#include "pci/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "support.hpp"

namespace {

using pci::Atom;
using pci::exact_conditional;
using pci::FeatureDef;
using pci::FeatureKind;
using pci::FeatureSpace;
using pci::JointDim;
using pci::JointTable;
using pci::MeConstraint;
using pci::Outcome;
using pci::Rat;
using pci::Schema;
using pci::ValueSet;

JointDim bdim(std::string name) {
  return {std::move(name), {Atom{std::string("t")}, Atom{std::string("f")}}};
}

/// A Boolean feature space mirroring a list of Boolean dims, target last.
FeatureSpace space_for(const std::vector<std::string>& names) {
  std::vector<FeatureDef> features;
  for (const auto& n : names)
    features.push_back(FeatureDef{.name = n,
                                  .kind = FeatureKind::world,
                                  .is_enum = true,
                                  .enum_values = {"t", "f"}});
  return FeatureSpace::build(std::move(features), {}, names.back());
}

double dprob(const std::vector<Outcome<double>>& dist, const std::string& value) {
  for (const auto& o : dist)
    if (o.value == Atom{value}) return o.probability;
  return 0.0;
}

Rat rprob(const std::vector<Outcome<Rat>>& dist, const std::string& value) {
  for (const auto& o : dist)
    if (o.value == Atom{value}) return o.probability;
  return Rat(0);
}

TEST(JointTable, BuildEnforcesItsInvariants) {
  std::vector<JointDim> dims{bdim("a"), bdim("g")};
  EXPECT_NO_THROW(JointTable<Rat>::build(dims, {Rat(1, 4), Rat(1, 4), Rat(1, 4), Rat(1, 4)}));
  EXPECT_THROW(JointTable<Rat>::build(dims, {Rat(1, 4), Rat(1, 4), Rat(1, 4), Rat(1, 2)}),
               pci::Error);  // sums past 1
  EXPECT_THROW(JointTable<Rat>::build(dims, {Rat(3, 4), Rat(1, 4), Rat(1, 4), Rat(-1, 4)}),
               pci::Error);  // negative
  EXPECT_THROW(JointTable<Rat>::build(dims, {Rat(1, 2), Rat(1, 2)}), pci::Error);  // count
  EXPECT_THROW(JointTable<Rat>::build({bdim("a"), bdim("a")},
                                      {Rat(1, 4), Rat(1, 4), Rat(1, 4), Rat(1, 4)}),
               pci::Error);  // duplicate dimension

  std::vector<JointDim> big;
  for (int i = 0; i < 13; ++i) big.push_back(bdim("x" + std::to_string(i)));
  EXPECT_THROW(JointTable<double>::build(big, std::vector<double>(8192, 1.0 / 8192)),
               pci::Error);  // past the cell cap
}

TEST(JointTable, MassAndConditionals) {
  // P(y=t) = 0.4, P(g=t & y=t) = 0.1.
  JointTable<Rat> j = JointTable<Rat>::build(
      {bdim("y"), bdim("g")}, {Rat(1, 10), Rat(3, 10), Rat(3, 10), Rat(3, 10)});
  FeatureSpace space = space_for({"y", "g"});
  Schema y = Schema::of(space, {{"y", ValueSet::of_atoms({"t"})}});
  EXPECT_EQ(j.mass(y), Rat(2, 5));
  auto dist = exact_conditional(j, y, "g");
  EXPECT_EQ(rprob(dist, "t"), Rat(1, 4));
  EXPECT_EQ(rprob(dist, "f"), Rat(3, 4));

  Rat total(0);
  for (const auto& o : exact_conditional(j, Schema::empty_schema(), "g"))
    total += o.probability;
  EXPECT_EQ(total, Rat(1));
}

TEST(JointTable, UniformTableAnswersUniformly) {
  std::vector<JointDim> dims{bdim("a"), bdim("b"), bdim("c"), bdim("g")};
  JointTable<Rat> j = JointTable<Rat>::build(dims, std::vector<Rat>(16, Rat(1, 16)));
  FeatureSpace space = space_for({"a", "b", "c", "g"});
  for (const auto& bindings :
       std::vector<testsupport::Bindings>{{}, {{"a", "t"}}, {{"a", "t"}, {"b", "f"}}}) {
    auto dist = exact_conditional(j, testsupport::sch(space, bindings), "g");
    EXPECT_EQ(rprob(dist, "t"), Rat(1, 2));
  }
}

TEST(JointTable, ZeroMassConditioningIsAnError) {
  JointTable<Rat> j = JointTable<Rat>::build({bdim("a"), bdim("g")},
                                             {Rat(1, 2), Rat(1, 2), Rat(0), Rat(0)});
  FeatureSpace space = space_for({"a", "g"});
  EXPECT_THROW(exact_conditional(j, testsupport::sch(space, {{"a", "f"}}), "g"), pci::Error);
}

TEST(MeFit, NoConstraintsKeepsTheUniform) {
  JointTable<double> j = pci::me_fit({bdim("a"), bdim("g")}, {});
  for (double p : j.probabilities()) EXPECT_NEAR(p, 0.25, 1e-12);
}

TEST(MeFit, SingleMarginalConstraintIsExactlyMet) {
  MeConstraint c;
  c.distribution = {{std::string("t"), 0.2}, {std::string("f"), 0.8}};
  JointTable<double> j = pci::me_fit({bdim("g")}, {c});
  EXPECT_NEAR(j.probabilities()[0], 0.2, 1e-12);
  EXPECT_NEAR(j.probabilities()[1], 0.8, 1e-12);
}

TEST(MeFit, ConstraintsAreReproducedAndEntropyIsMaximal) {
  FeatureSpace space = space_for({"x", "g"});
  MeConstraint c;
  c.distribution = {{std::string("t"), 0.2}, {std::string("f"), 0.8}};
  JointTable<double> fit = pci::me_fit({bdim("x"), bdim("g")}, {c});
  // With nothing else constrained, x stays uniform and independent.
  EXPECT_NEAR(fit.at({0, 0}), 0.1, 1e-10);
  EXPECT_NEAR(fit.at({1, 0}), 0.1, 1e-10);
  double best = pci::entropy(fit);

  // No feasible table found by sampling beats the fit's entropy.
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (int trial = 0; trial < 25; ++trial) {
    double a = u(gen) * 0.2;   // mass on x=t within the g=t slice
    double b = u(gen) * 0.8;   // mass on x=t within the g=f slice
    JointTable<double> other = JointTable<double>::build(
        {bdim("x"), bdim("g")}, {a, b, 0.2 - a, 0.8 - b});
    EXPECT_LE(pci::entropy(other), best + 1e-9);
  }
}

/// The chain benchmark: P(S)=0.1, P(S|blond)=0.3, P(S|tall,blond)=0.45,
/// P(S|blond,blue-eyed)=0.55. The fitted joint's conditional at
/// tall,blond,blue-eyed comes out at exactly 0.7.
JointTable<double> chain_fit() {
  FeatureSpace space = space_for({"tall", "blond", "blue-eyed", "S"});
  auto constraint = [&](testsupport::Bindings b, double p) {
    MeConstraint c;
    c.context = testsupport::sch(space, b);
    c.distribution = {{std::string("t"), p}, {std::string("f"), 1.0 - p}};
    return c;
  };
  return pci::me_fit({bdim("tall"), bdim("blond"), bdim("blue-eyed"), bdim("S")},
                     {constraint({}, 0.1), constraint({{"blond", "t"}}, 0.3),
                      constraint({{"tall", "t"}, {"blond", "t"}}, 0.45),
                      constraint({{"blond", "t"}, {"blue-eyed", "t"}}, 0.55)});
}

TEST(MeFit, ChainBenchmarkConditional) {
  JointTable<double> fit = chain_fit();
  FeatureSpace space = space_for({"tall", "blond", "blue-eyed", "S"});
  Schema all = testsupport::sch(
      space, {{"tall", "t"}, {"blond", "t"}, {"blue-eyed", "t"}});
  EXPECT_NEAR(dprob(exact_conditional(fit, all, "S"), "t"), 0.7, 1e-8);

  // Every constraint is reproduced by reading rules back off the table.
  auto rules = pci::rules_from_joint(
      fit, {Schema::empty_schema(), testsupport::sch(space, {{"blond", "t"}}),
            testsupport::sch(space, {{"tall", "t"}, {"blond", "t"}}),
            testsupport::sch(space, {{"blond", "t"}, {"blue-eyed", "t"}})});
  EXPECT_NEAR(dprob(rules[0].distribution, "t"), 0.1, 1e-9);
  EXPECT_NEAR(dprob(rules[1].distribution, "t"), 0.3, 1e-9);
  EXPECT_NEAR(dprob(rules[2].distribution, "t"), 0.45, 1e-9);
  EXPECT_NEAR(dprob(rules[3].distribution, "t"), 0.55, 1e-9);
  EXPECT_EQ(rules[0].id, "r1");
}

TEST(MeFit, ChainBenchmarkIndependenceStructure) {
  JointTable<double> fit = chain_fit();
  FeatureSpace space = space_for({"tall", "blond", "blue-eyed", "S"});
  Schema blond = testsupport::sch(space, {{"blond", "t"}});
  // Given only the shared feature, the two unique features are NOT
  // independent in the fitted joint.
  auto plain = pci::independence_holds(fit, {"tall"}, {"blue-eyed"}, blond);
  EXPECT_FALSE(plain.holds);
  EXPECT_NEAR(plain.max_violation, 0.0336807, 1e-4);
  // Given the shared feature AND the target, they are.
  auto conditioned =
      pci::independence_holds(fit, {"tall"}, {"blue-eyed"}, blond, {"S"});
  EXPECT_TRUE(conditioned.holds || conditioned.max_violation < 1e-10);
  EXPECT_LT(conditioned.max_violation, 1e-10);
}

/// The nested benchmark: constraints 1/5, 2/5 (x1), 1/2 (x1,x2), 3/5 (x1,x3),
/// 3/10 (x3,x4). The fitted conditional at the all-true situation differs
/// from the engine's 27/34: the two methods genuinely diverge here.
TEST(MeFit, NestedBenchmarkDivergesFromTheEngine) {
  FeatureSpace space = space_for({"a", "b", "c", "d", "g"});
  auto constraint = [&](testsupport::Bindings bn, double p) {
    MeConstraint c;
    c.context = testsupport::sch(space, bn);
    c.distribution = {{std::string("t"), p}, {std::string("f"), 1.0 - p}};
    return c;
  };
  JointTable<double> fit =
      pci::me_fit({bdim("a"), bdim("b"), bdim("c"), bdim("d"), bdim("g")},
                  {constraint({}, 0.2), constraint({{"a", "t"}}, 0.4),
                   constraint({{"a", "t"}, {"b", "t"}}, 0.5),
                   constraint({{"a", "t"}, {"c", "t"}}, 0.6),
                   constraint({{"c", "t"}, {"d", "t"}}, 0.3)});
  Schema all = testsupport::sch(space, {{"a", "t"}, {"b", "t"}, {"c", "t"}, {"d", "t"}});
  double me = dprob(exact_conditional(fit, all, "g"), "t");
  EXPECT_NEAR(me, 0.7191669365534441, 1e-9);
  EXPECT_NEAR(std::abs(me - 27.0 / 34.0), 0.0749507, 1e-6);
}

TEST(Independence, ProductFormHoldsCorrelationDoesNot) {
  JointTable<Rat> prod = JointTable<Rat>::build(
      {bdim("a"), bdim("b")}, {Rat(3, 20), Rat(7, 20), Rat(3, 20), Rat(7, 20)});
  auto ok = pci::independence_holds(prod, {"a"}, {"b"}, Schema::empty_schema());
  EXPECT_TRUE(ok.holds);
  EXPECT_EQ(ok.checked, 4u);

  JointTable<Rat> corr = JointTable<Rat>::build(
      {bdim("a"), bdim("b")}, {Rat(1, 2), Rat(0), Rat(0), Rat(1, 2)});
  auto bad = pci::independence_holds(corr, {"a"}, {"b"}, Schema::empty_schema());
  EXPECT_FALSE(bad.holds);
  EXPECT_NEAR(bad.max_violation, 0.25, 1e-12);
}

TEST(Independence, ZeroMassConditioningSlicesAreSkipped) {
  // b never takes value f, so conditioning on it is skipped, not an error.
  JointTable<Rat> j = JointTable<Rat>::build(
      {bdim("a"), bdim("b")}, {Rat(1, 2), Rat(0), Rat(1, 2), Rat(0)});
  auto report = pci::independence_holds(j, {"a"}, {}, Schema::empty_schema(), {"b"});
  EXPECT_EQ(report.skipped, 1u);
  EXPECT_TRUE(report.holds);
}

TEST(Independence, EventLevelCheck) {
  FeatureSpace space = space_for({"a", "b"});
  JointTable<Rat> corr = JointTable<Rat>::build(
      {bdim("a"), bdim("b")}, {Rat(1, 2), Rat(0), Rat(0), Rat(1, 2)});
  auto ev = pci::event_independence(corr, testsupport::sch(space, {{"a", "t"}}),
                                    testsupport::sch(space, {{"b", "t"}}),
                                    Schema::empty_schema());
  EXPECT_TRUE(ev.defined);
  EXPECT_NEAR(ev.violation, 0.25, 1e-12);

  auto undef = pci::event_independence(corr, testsupport::sch(space, {{"a", "t"}}),
                                       testsupport::sch(space, {{"b", "t"}}),
                                       testsupport::sch(space, {{"a", "t"}, {"b", "f"}}));
  EXPECT_FALSE(undef.defined);
}

TEST(RulesFromJoint, DeterministicDependence) {
  // g copies a.
  JointTable<Rat> j = JointTable<Rat>::build({bdim("a"), bdim("g")},
                                             {Rat(1, 2), Rat(0), Rat(0), Rat(1, 2)});
  FeatureSpace space = space_for({"a", "g"});
  auto rules = pci::rules_from_joint(
      j, {Schema::empty_schema(), testsupport::sch(space, {{"a", "t"}})});
  EXPECT_EQ(rprob(rules[0].distribution, "t"), Rat(1, 2));
  EXPECT_EQ(rprob(rules[1].distribution, "t"), Rat(1));
}

TEST(JointCsv, ParsesCommentsFractionsAndSparseCells) {
  std::string text =
      "# two features and a target\n"
      "a,s,p\n"
      "t,y,1/4\n"
      "t,n,0.25\n"
      "f,y,1/2\n";  // the f,n cell is left out and so carries zero
  JointTable<Rat> j = pci::parse_joint_csv(text);
  ASSERT_EQ(j.dims().size(), 2u);
  EXPECT_EQ(j.dims()[0].name, "a");
  EXPECT_EQ(j.target(), "s");
  // Values appear in first-mention order.
  EXPECT_EQ(j.dims()[0].values, (std::vector<Atom>{Atom{std::string("t")},
                                                   Atom{std::string("f")}}));
  EXPECT_EQ(j.dims()[1].values, (std::vector<Atom>{Atom{std::string("y")},
                                                   Atom{std::string("n")}}));
  EXPECT_EQ(j.at({0, 0}), Rat(1, 4));
  EXPECT_EQ(j.at({1, 1}), Rat(0));
  EXPECT_EQ(j.mass(Schema()), Rat(1));
}

TEST(JointCsv, RejectsMalformedTables) {
  EXPECT_THROW(pci::parse_joint_csv(""), pci::Error);
  EXPECT_THROW(pci::parse_joint_csv("a,s\nt,y\n"), pci::Error);          // no p column
  EXPECT_THROW(pci::parse_joint_csv("a,p\nt,1/2\nt,1/2\n"), pci::Error);  // same cell twice
  EXPECT_THROW(pci::parse_joint_csv("a,p\nt,1/2\nf,1/3\n"), pci::Error);  // sums to 5/6
  EXPECT_THROW(pci::parse_joint_csv("a,p\nt,1/2,zzz\nf,1/2\n"), pci::Error);  // row width
  EXPECT_THROW(pci::parse_joint_csv("a,p\nt,nonsense\n"), pci::Error);   // bad probability
}

TEST(JointCsv, SerializeOmitsZeroCellsAndRoundTrips) {
  JointTable<Rat> j = JointTable<Rat>::build(
      {bdim("a"), bdim("g")}, {Rat(1, 4), Rat(1, 4), Rat(1, 2), Rat(0)});
  std::string text = pci::serialize_joint_csv(j);
  EXPECT_EQ(text.find(",0\n"), std::string::npos);
  JointTable<Rat> back = pci::parse_joint_csv(text);
  EXPECT_EQ(back.at({0, 0}), Rat(1, 4));
  EXPECT_EQ(back.at({1, 0}), Rat(1, 2));
  EXPECT_EQ(back.mass(Schema()), Rat(1));
}

TEST(JointCsv, ConvertsBetweenScalarModes) {
  JointTable<Rat> j = JointTable<Rat>::build(
      {bdim("a"), bdim("g")}, {Rat(1, 3), Rat(1, 6), Rat(1, 4), Rat(1, 4)});
  JointTable<double> d = pci::convert_joint<double>(j);
  EXPECT_NEAR(d.at({0, 0}), 1.0 / 3.0, 1e-15);
}

TEST(MeFit, InfeasibleConstraintsRaise) {
  MeConstraint everything;
  everything.distribution = {{std::string("t"), 1.0}};
  FeatureSpace space = space_for({"x", "g"});
  MeConstraint nothing;
  nothing.context = testsupport::sch(space, {{"x", "t"}});
  nothing.distribution = {{std::string("t"), 0.0}, {std::string("f"), 1.0}};
  // P(g=t)=1 overall but P(g=t|x=t)=0 forces the x=t slice to vanish.
  EXPECT_THROW(pci::me_fit({bdim("x"), bdim("g")}, {everything, nothing}), pci::Error);
}

}  // namespace
