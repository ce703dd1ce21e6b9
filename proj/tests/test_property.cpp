#include <gtest/gtest.h>

#include <cstdlib>

#include "upec/property.hpp"
#include "upec/soc_models.hpp"

using namespace upec;

namespace {

ProofConfig soc_config(const std::string& extra_sys = "") {
  ProofConfig c;
  c.s_sys_patterns = {"soc.*"};
  if (!extra_sys.empty()) c.s_sys_patterns.push_back(extra_sys);
  return c;
}

// 3-bit counter wrapping at 8.
Netlist counter() {
  NetlistBuilder b;
  auto x = b.state("soc.x", 3);
  b.next(x, b.add(x, b.constant(3, 1)));
  return b.build();
}

SignalConstraint inv(const std::string& signal, Cmp cmp, std::uint64_t v) {
  SignalConstraint c;
  c.name = signal + "_" + std::string(cmp_name(cmp));
  c.signal = signal;
  c.cmp = cmp;
  c.value = v;
  return c;
}

struct EnvGuard {
  explicit EnvGuard(const char* value) {
    if (value)
      ::setenv("UPEC_SSC_BUDGET", value, 1);
    else
      ::unsetenv("UPEC_SSC_BUDGET");
  }
  ~EnvGuard() { ::unsetenv("UPEC_SSC_BUDGET"); }
};

}  // namespace

TEST(Property, EmptySetHolds) {
  auto n = counter();
  auto out = check_upec_ssc(n, StateSet{}, soc_config());
  EXPECT_TRUE(out.holds());
  EXPECT_FALSE(out.counterexample.has_value());
}

TEST(Property, RejectsSetOutsideSystemState) {
  NetlistBuilder b;
  auto v = b.state("core.v", 1);
  b.hold(v);
  auto n = b.build();
  EXPECT_THROW(check_upec_ssc(n, StateSet{v}, soc_config()), ConfigError);
}

TEST(Property, UnrolledScheduleChecks) {
  auto n = counter();
  auto x = n.signal("soc.x").id;
  auto cfg = soc_config();
  EXPECT_THROW(check_upec_ssc_unrolled(n, 2, {StateSet{x}, StateSet{x}}, cfg), ConfigError);
  EXPECT_THROW(check_upec_ssc_unrolled(n, 1, {StateSet{}, StateSet{x}}, cfg), ConfigError);
  EXPECT_THROW(check_upec_ssc_unrolled(n, 0, {StateSet{x}}, cfg), ConfigError);
  EXPECT_TRUE(check_upec_ssc_unrolled(n, 3, {StateSet{x}, StateSet{x}, StateSet{x}, StateSet{x}}, cfg).holds());
}

TEST(Property, InvariantCounterexample) {
  auto n = counter();
  auto out = check_invariant(n, inv("soc.x", Cmp::Ult, 5), soc_config());
  ASSERT_FALSE(out.holds());
  const auto& cex = *out.counterexample;
  EXPECT_FALSE(cex.two_instances);
  ASSERT_EQ(cex.trace[0].size(), 2u);
  auto x = n.signal("soc.x").id;
  EXPECT_EQ(as_bits(cex.trace[0][0].states.at(x)), 4u);
  EXPECT_EQ(as_bits(cex.trace[0][1].states.at(x)), 5u);
}

TEST(Property, TautologicalInvariantHolds) {
  auto n = counter();
  EXPECT_TRUE(check_invariant(n, inv("soc.x", Cmp::Ule, 7), soc_config()).holds());
}

TEST(Property, InvariantRelativeToOthers) {
  // x stays below 4 only when y (its increment) is zero.
  NetlistBuilder b;
  auto x = b.state("soc.x", 3);
  auto y = b.state("soc.y", 3);
  b.next(x, b.add(x, y));
  b.hold(y);
  auto n = b.build();
  auto cfg = soc_config();
  auto x_small = inv("soc.x", Cmp::Ult, 4);
  EXPECT_FALSE(check_invariant(n, x_small, cfg).holds());
  cfg.invariants = {inv("soc.y", Cmp::Eq, 0)};
  EXPECT_TRUE(check_invariant(n, x_small, cfg).holds());
}

TEST(Property, CrossbarInvariantsHold) {
  for (auto v : {SocVariant::Vulnerable, SocVariant::Hwpe, SocVariant::Fixed}) {
    auto b = generate_soc(v);
    auto n = parse_netlist(b.netlist_text);
    auto cfg = parse_config(b.config);
    for (const auto& i : cfg.invariants) EXPECT_TRUE(check_invariant(n, i, cfg).holds()) << i.name;
  }
}

TEST(Property, BudgetPrecedence) {
  ProofConfig cfg;
  {
    EnvGuard g(nullptr);
    EXPECT_EQ(resolve_budget(std::nullopt, cfg), kDefaultConflictBudget);
    cfg.conflict_budget = 500;
    EXPECT_EQ(resolve_budget(std::nullopt, cfg), 500u);
    EXPECT_EQ(resolve_budget(7, cfg), 7u);
  }
  {
    EnvGuard g("42");
    EXPECT_EQ(resolve_budget(std::nullopt, cfg), 42u);
    EXPECT_EQ(resolve_budget(7, cfg), 7u);
  }
  {
    EnvGuard g("lots");
    EXPECT_THROW(resolve_budget(std::nullopt, cfg), ConfigError);
  }
}

TEST(Property, BudgetExhaustionThrows) {
  auto b = generate_soc(SocVariant::Fixed);
  auto n = parse_netlist(b.netlist_text);
  auto cfg = parse_config(b.config);
  auto sys = s_sys(n, cfg);
  StateSet s;
  for (auto id : sys)
    if (n.name_of(id).rfind("soc.priv_xbar", 0) != 0) s.insert(id);
  CheckOptions opts;
  opts.budget = 0;
  EXPECT_THROW(check_upec_ssc(n, s, cfg, opts), BudgetExceeded);
  opts.budget.reset();
  EXPECT_TRUE(check_upec_ssc(n, s, cfg, opts).holds());
}

TEST(Property, QueryHookSeesClauses) {
  auto n = counter();
  std::size_t seen = 0;
  CheckOptions opts;
  opts.on_query = [&](const ClauseSet& cs) { seen = cs.clauses.size(); };
  auto out = check_upec_ssc(n, StateSet{n.signal("soc.x").id}, soc_config(), opts);
  EXPECT_GT(seen, 0u);
  EXPECT_EQ(out.stats.clauses, seen);
}
