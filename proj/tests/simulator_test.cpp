#include "workload/simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "workload/error.hpp"
#include "workload/labeling.hpp"

namespace workload {
namespace {

// One slow channel: enough for latent-state and prompt statistics.
EmissionModel sparse_emissions() {
  EmissionModel em;
  em.schema = {{"VehicleSpeed", "mph", 0, 160, true}};
  em.mixtures = {{Mixture{{1.0, 55.0, 5.0}}, Mixture{{1.0, 40.0, 5.0}}}};
  em.separation = 3.0;
  return em;
}

SimConfig sparse_config(std::uint64_t seed, double duration = 2400.0) {
  SimConfig cfg;
  cfg.duration_s = duration;
  cfg.rate_hz = {1.0};
  cfg.seed = seed;
  return cfg;
}

DriverStyle plain_style(Awp a) {
  auto s = default_style(a);
  s.spread.clear();
  return s;
}

std::string journey_text(const SimulatedJourney& sj) {
  std::ostringstream os;
  write_journey(sj.journey, os);
  write_truth(sj.truth, os);
  return os.str();
}

TEST(Mixture, MomentsOfTwoComponents) {
  const Mixture m = {{0.5, 0.0, 1.0}, {0.5, 2.0, 1.0}};
  EXPECT_DOUBLE_EQ(mixture_mean(m), 1.0);
  EXPECT_DOUBLE_EQ(mixture_sd(m), std::sqrt(2.0));
}

TEST(Emissions, SeparationShiftsHighMeans) {
  const auto zero = can_bus_emissions(0.0);
  for (std::size_t c = 0; c < zero.schema.size(); ++c) {
    EXPECT_EQ(zero.mixture(c, Workload::Low), zero.mixture(c, Workload::High));
  }
  const auto three = can_bus_emissions(3.0);
  for (std::size_t c = 0; c < three.schema.size(); ++c) {
    const auto& lo = three.mixture(c, Workload::Low);
    const double gap = std::abs(mixture_mean(three.mixture(c, Workload::High)) - mixture_mean(lo));
    EXPECT_NEAR(gap, 3.0 * mixture_sd(lo), 1e-9);
  }
}

TEST(DwellMatrix, DiagonalFromMeanDwell) {
  const auto m = dwell_matrix("x", 10.0, 2.0, 20.0);
  EXPECT_DOUBLE_EQ(m.rho_ll(), 1.0 - 1.0 / 200.0);
  EXPECT_DOUBLE_EQ(m.rho_hh(), 1.0 - 1.0 / 40.0);
}

TEST(DriverStyle, DefaultsSitInsideTheirBands) {
  for (Awp a : {Awp::L, Awp::M, Awp::H}) {
    const auto s = default_style(a);
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(awp_from_lwr(s.matrix.stationary()[0]), a);
  }
  auto bad = default_style(Awp::L);
  bad.matrix = dwell_matrix("x", 4.0, 5.0, 20.0);
  EXPECT_THROW(bad.validate(), InvariantError);
  bad = default_style(Awp::L);
  bad.press_reliability = 0.5;
  EXPECT_THROW(bad.validate(), InvariantError);
  EXPECT_THROW(default_style(Awp::L, 1.5), InvariantError);
}

TEST(DriverStyle, ZeroOffsetRemovesSpreadDifferences) {
  for (Awp a : {Awp::L, Awp::M, Awp::H}) {
    for (double v : default_style(a, 0.0).spread) EXPECT_EQ(v, 1.0);
  }
}

TEST(Simulate, DeterministicPerSeed) {
  SimConfig cfg;
  cfg.duration_s = 60;
  cfg.seed = 77;
  cfg.random_road_script = true;
  const auto em = can_bus_emissions(1.0);
  const auto a = simulate_journey(cfg, default_style(Awp::M), em, "d");
  const auto b = simulate_journey(cfg, default_style(Awp::M), em, "d");
  EXPECT_EQ(journey_text(a), journey_text(b));
  cfg.seed = 78;
  EXPECT_NE(journey_text(simulate_journey(cfg, default_style(Awp::M), em, "d")), journey_text(a));
}

TEST(Simulate, TimestampsAndAggregateRate) {
  SimConfig cfg;
  cfg.duration_s = 300;
  cfg.seed = 5;
  const auto sj = simulate_journey(cfg, default_style(Awp::H), can_bus_emissions(1.0));
  EXPECT_NO_THROW(validate(sj.journey));
  double total = 0.0;
  for (double r : default_rates_hz()) total += r;
  EXPECT_EQ(total, 200.0);
  const double realized = static_cast<double>(sj.journey.samples.size()) / cfg.duration_s;
  EXPECT_NEAR(realized, total, 0.05 * total);
  std::vector<double> last(sj.journey.schema.size(), -1.0);
  for (const auto& s : sj.journey.samples) {
    EXPECT_GT(s.t, last[s.channel]);
    last[s.channel] = s.t;
  }
}

TEST(Simulate, EmpiricalPersistenceMatchesMatrix) {
  const auto style = plain_style(Awp::H);
  const auto sj = simulate_journey(sparse_config(3, 6000.0), style, sparse_emissions());
  const auto& st = sj.truth.states;
  ASSERT_GE(st.size(), 100000u);
  std::size_t hh = 0, h = 0, ll = 0, l = 0;
  for (std::size_t k = 1; k < st.size(); ++k) {
    if (st[k - 1] == Workload::High) {
      ++h;
      hh += st[k] == Workload::High;
    } else {
      ++l;
      ll += st[k] == Workload::Low;
    }
  }
  EXPECT_NEAR(static_cast<double>(hh) / static_cast<double>(h), style.matrix.rho_hh(), 0.02);
  EXPECT_NEAR(static_cast<double>(ll) / static_cast<double>(l), style.matrix.rho_ll(), 0.02);
}

TEST(Simulate, ReliablePressesFollowTruth) {
  auto style = plain_style(Awp::M);
  style.press_reliability = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto sj = simulate_journey(sparse_config(seed, 600.0), style, sparse_emissions());
    ASSERT_FALSE(sj.journey.prompts.empty());
    for (const auto& p : sj.journey.prompts) {
      EXPECT_EQ(p.t_press.has_value(), sj.truth.at(p.t_prompt) == Workload::Low) << p.t_prompt;
      const double gap = p.t_press ? *p.t_press - p.t_prompt : 0.5;
      EXPECT_GE(gap, 0.2 - 1e-9);
      EXPECT_LE(gap, 1.5 + 1e-9);
    }
  }
}

TEST(Simulate, PromptSpacing) {
  const auto sj = simulate_journey(sparse_config(8, 600.0), plain_style(Awp::M), sparse_emissions());
  const auto& p = sj.journey.prompts;
  for (std::size_t k = 1; k < p.size(); ++k) {
    const double gap = p[k].t_prompt - p[k - 1].t_prompt;
    EXPECT_GE(gap, 5.0 - 1e-9);
    EXPECT_LE(gap, 10.0 + 1e-9);
  }
}

TEST(Simulate, LowProfileLwrStaysInBand) {
  const auto style = plain_style(Awp::L);
  int inside = 0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    const auto sj = simulate_journey(sparse_config(derive_seed(1000, s)), style, sparse_emissions());
    const double r = lwr(label_prompts(sj.journey).labels);
    inside += r > 0.85 && r <= 1.0;
  }
  EXPECT_GE(inside, static_cast<int>(std::ceil(0.95 * seeds)));
}

TEST(Simulate, ScriptedContextOverridesStyle) {
  SimConfig cfg = sparse_config(4, 400.0);
  // Nearly absorbing High inside the script interval.
  cfg.script.push_back({{ContextKind::Road, 100.0, 300.0, "junction"}, TransitionMatrix("j", 0.5, 0.99999)});
  const auto sj = simulate_journey(cfg, plain_style(Awp::L), sparse_emissions());
  std::size_t high = 0, n = 0;
  for (double t = 110.0; t < 300.0; t += 0.05) {
    ++n;
    high += sj.truth.at(t) == Workload::High;
  }
  EXPECT_GT(static_cast<double>(high) / static_cast<double>(n), 0.95);
  ASSERT_EQ(sj.journey.contexts.size(), 1u);
  EXPECT_EQ(sj.journey.contexts[0].tag, "junction");
}

TEST(Simulate, RandomRoadScriptCoversJourney) {
  SimConfig cfg = sparse_config(6, 1200.0);
  cfg.random_road_script = true;
  const auto sj = simulate_journey(cfg, plain_style(Awp::M), sparse_emissions());
  const auto& c = sj.journey.contexts;
  ASSERT_FALSE(c.empty());
  EXPECT_EQ(c.front().t_start, 0.0);
  EXPECT_EQ(c.back().t_end, 1200.0);
  for (std::size_t k = 1; k < c.size(); ++k) EXPECT_EQ(c[k].t_start, c[k - 1].t_end);
}

TEST(Population, SizeIdsAndLabels) {
  SimConfig cfg;
  cfg.duration_s = 2400;
  cfg.rate_hz = {1, 1, 1, 1, 1, 1, 1};
  cfg.seed = 21;
  const auto pop = simulate_population(8, cfg);
  ASSERT_EQ(pop.size(), 24u);
  EXPECT_EQ(pop.front().journey.id, "sim-L-00");
  EXPECT_EQ(pop.back().journey.id, "sim-H-07");
  std::size_t match = 0;
  for (const auto& sj : pop) {
    ASSERT_TRUE(sj.journey.awp_label);
    EXPECT_EQ(*sj.journey.awp_label, awp_from_lwr(lwr(label_prompts(sj.journey).labels)));
    match += *sj.journey.awp_label == sj.intended;
  }
  EXPECT_GE(static_cast<double>(match) / 24.0, 0.9);
}

TEST(Truth, WriteReadRoundTrip) {
  GroundTruth g;
  g.tick_hz = 20.0;
  g.states = {Workload::Low, Workload::Low, Workload::High, Workload::Low};
  std::stringstream ss;
  ss << "# header\n";
  write_truth(g, ss);
  const auto back = read_truth(ss);
  ASSERT_EQ(back.size(), 4u);
  EXPECT_EQ(back[2], (std::pair<double, Workload>{0.1, Workload::High}));
  EXPECT_EQ(g.at(0.149), Workload::High);
  EXPECT_EQ(g.at(0.15), Workload::Low);
  EXPECT_EQ(g.at(99.0), Workload::Low);
  std::istringstream bad("0 Low\n0 High\n");
  EXPECT_THROW(read_truth(bad), ParseError);
}

TEST(SimConfig, Validation) {
  SimConfig cfg;
  cfg.duration_s = -1;
  EXPECT_THROW(cfg.validate(), InvariantError);
  cfg = SimConfig{};
  cfg.press_delay_max_s = 6.0;
  EXPECT_THROW(cfg.validate(), InvariantError);
  cfg = SimConfig{};
  cfg.rate_hz = {1.0, 2.0};
  EXPECT_THROW(simulate_journey(cfg, default_style(Awp::M), can_bus_emissions(1.0)), InvariantError);
}

}  // namespace
}  // namespace workload
