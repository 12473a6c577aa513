#include "workload/labeling.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "label_oracle.hpp"
#include "test_support.hpp"
#include "workload/error.hpp"

namespace workload {
namespace {

std::vector<LabeledInstant> make_labels(std::size_t low, std::size_t high) {
  std::vector<LabeledInstant> out;
  for (std::size_t i = 0; i < low; ++i) out.push_back({static_cast<double>(out.size()), Workload::Low});
  for (std::size_t i = 0; i < high; ++i) out.push_back({static_cast<double>(out.size()), Workload::High});
  return out;
}

Journey speed_journey(std::vector<double> times) {
  Journey j;
  j.id = "lab";
  j.schema = {{"VehicleSpeed", "mph", 0, 160, true}};
  for (double t : times) j.samples.push_back({0, t, 50.0});
  return j;
}

TEST(LabelPrompts, PressBeforeNextPromptIsLow) {
  Journey j = speed_journey({});
  j.prompts = {{10.0, 11.0}, {17.0, std::nullopt}};
  const auto r = label_prompts(j);
  ASSERT_EQ(r.labels.size(), 2u);
  EXPECT_EQ(r.labels[0], (LabeledInstant{10.0, Workload::Low}));
  EXPECT_EQ(r.labels[1], (LabeledInstant{17.0, Workload::High}));
  EXPECT_EQ(r.ignored_presses, 0u);
}

TEST(LabelPrompts, CountsAtStudyScale) {
  Journey j = speed_journey({});
  for (int i = 0; i < 5264; ++i) {
    PromptEvent p{7.0 * i, std::nullopt};
    if (i < 3730) p.t_press = 7.0 * i + 1.0;
    j.prompts.push_back(p);
  }
  const auto r = label_prompts(j);
  const auto low = std::count_if(r.labels.begin(), r.labels.end(),
                                 [](const LabeledInstant& l) { return l.label == Workload::Low; });
  EXPECT_EQ(low, 3730);
  EXPECT_EQ(r.labels.size() - static_cast<std::size_t>(low), 1534u);
}

TEST(Lwr, DirectRatio) {
  EXPECT_EQ(lwr(make_labels(7, 3)), 0.7);
  EXPECT_EQ(lwr(make_labels(5, 0)), 1.0);
  EXPECT_EQ(lwr(make_labels(3730, 1534)), 3730.0 / 5264.0);
  EXPECT_NEAR(lwr(make_labels(3730, 1534)), 0.70859, 1e-5);
  EXPECT_THROW(lwr(std::vector<LabeledInstant>{}), InvariantError);
}

TEST(Lwr, PermutationInvariant) {
  std::mt19937_64 rng(2);
  auto labels = make_labels(13, 29);
  const double ref = lwr(labels);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(labels.begin(), labels.end(), rng);
    EXPECT_EQ(lwr(labels), ref);
  }
}

TEST(AwpFromLwr, BandsAndEdges) {
  EXPECT_EQ(awp_from_lwr(0.40), Awp::H);
  EXPECT_EQ(awp_from_lwr(0.70), Awp::M);
  EXPECT_EQ(awp_from_lwr(0.90), Awp::L);
  EXPECT_EQ(awp_from_lwr(0.55), Awp::H);
  EXPECT_EQ(awp_from_lwr(std::nextafter(0.55, 1.0)), Awp::M);
  EXPECT_EQ(awp_from_lwr(0.85), Awp::M);
  EXPECT_EQ(awp_from_lwr(std::nextafter(0.85, 1.0)), Awp::L);
  EXPECT_EQ(awp_from_lwr(0.0), Awp::H);
  EXPECT_EQ(awp_from_lwr(1.0), Awp::L);
  EXPECT_THROW(awp_from_lwr(-0.01), InvariantError);
  EXPECT_THROW(awp_from_lwr(1.01), InvariantError);
}

TEST(AwpFromLwr, MonotoneNonIncreasingWorkload) {
  // Enum order is L < M < H, so the index must never rise with LWR.
  Awp prev = awp_from_lwr(0.0);
  for (int k = 1; k <= 1000; ++k) {
    const Awp cur = awp_from_lwr(k / 1000.0);
    EXPECT_LE(static_cast<int>(cur), static_cast<int>(prev)) << k;
    prev = cur;
  }
}

TEST(ExpandLabels, SinglePromptWindow) {
  const auto j = speed_journey({9, 10, 11, 20});
  const std::vector<LabeledInstant> labels = {{10, Workload::Low}};
  const auto out = expand_labels(j, labels, {2.0, 2.0});
  ASSERT_EQ(out.size(), 3u);
  for (const auto& s : out) EXPECT_EQ(s.label, Workload::Low);
  EXPECT_EQ(out.back().sample.t, 11.0);
}

TEST(ExpandLabels, MidpointTruncation) {
  const auto j = speed_journey({11, 11.5, 12});
  const std::vector<LabeledInstant> labels = {{10, Workload::Low}, {13, Workload::High}};
  const auto out = expand_labels(j, labels, {2.0, 2.0});
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].label, Workload::Low);
  EXPECT_EQ(out[1].label, Workload::High);  // on the boundary: later prompt
  EXPECT_EQ(out[2].label, Workload::High);
}

TEST(ExpandLabels, RejectsInvalidWindow) {
  const auto j = speed_journey({1});
  const std::vector<LabeledInstant> labels = {{1, Workload::Low}};
  EXPECT_THROW(expand_labels(j, labels, {-1.0, 2.0}), InvariantError);
  EXPECT_THROW(expand_labels(j, labels, {0.0, 0.0}), InvariantError);
}

std::vector<std::pair<std::size_t, Workload>> brute_force(const Journey& j, const std::vector<LabeledInstant>& labels,
                                                          const LabelWindow& w) {
  auto r = testing::brute_force_labels(j, labels, w);
  EXPECT_EQ(r.double_claims, 0u);
  return r.samples;
}

TEST(ExpandLabels, MatchesBruteForceOracle) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto j = testing::random_journey(rng, 400, 1 + rng() % 8);
    const auto labels = label_prompts(j).labels;
    const LabelWindow w{u(rng), u(rng) + 0.01};
    const auto got = expand_labels(j, labels, w);
    const auto want = brute_force(j, labels, w);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_EQ(got[k].sample, j.samples[want[k].first]);
      EXPECT_EQ(got[k].label, want[k].second);
    }
  }
}

TEST(ExpandLabels, BoundaryTimesAgreeWithOracle) {
  // Samples placed exactly on window edges and midpoints.
  const auto j = speed_journey({5, 7, 8, 8.5, 9, 10, 12, 13});
  const std::vector<LabeledInstant> labels = {{7, Workload::Low}, {10, Workload::High}};
  const LabelWindow w{2.0, 3.0};
  const auto got = expand_labels(j, labels, w);
  const auto want = brute_force(j, labels, w);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t k = 0; k < got.size(); ++k) EXPECT_EQ(got[k].label, want[k].second);
}

}  // namespace
}  // namespace workload
