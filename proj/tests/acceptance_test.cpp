// Acceptance gate: runs every criterion at its stated tolerance and prints one
// PASS/FAIL line each. Exit status is non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "filter_oracle.hpp"
#include "label_oracle.hpp"
#include "test_support.hpp"
#include "transform_oracle.hpp"
#include "workload/cli.hpp"
#include "workload/eval.hpp"
#include "workload/filter.hpp"
#include "workload/labeling.hpp"
#include "workload/likelihood.hpp"
#include "workload/profiler.hpp"
#include "workload/simulator.hpp"

namespace {

using namespace workload;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<Journey> journeys_of(const std::vector<SimulatedJourney>& sims) {
  std::vector<Journey> out;
  for (const auto& s : sims) out.push_back(s.journey);
  return out;
}

// 1. Filter against an independent log-space forward pass.
Outcome forward_oracle() {
  std::mt19937_64 rng(20240101);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t instants = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto fc = testing::random_filter_case(rng, 10000);
    const double prior = 0.05 + 0.9 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto got = run_filter(fc.journey, init_filter(std::make_shared<const ContextPolicy>(fc.policy),
                                                        std::make_shared<const LikelihoodSet>(fc.tables), prior));
    const auto want = testing::forward_pass(prior, fc.steps);
    if (got.size() != want.size()) return {false, "posterior count differs from oracle"};
    for (std::size_t k = 0; k < got.size(); ++k) {
      worst = std::max({worst, std::abs(got[k].pi_low - want[k][0]), std::abs(got[k].pi_high - want[k][1])});
    }
    instants += got.size();
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 5.0,
          fmt("50 journeys, %zu instants, max |diff| %.2e (tol 1e-9), %.2f s (limit 5 s)", instants, worst, secs)};
}

// 2. Normalization, positivity and likelihood scale invariance of one update.
Outcome recursion_invariants() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double norm_err = 0.0;
  double scale_err = 0.0;
  std::size_t non_positive = 0;
  WorkloadPosterior p{0.0, 0.5, 0.5};
  for (int i = 0; i < 100000; ++i) {
    const TransitionMatrix a("r", 1e-6 + (1 - 2e-6) * u(rng), 1e-6 + (1 - 2e-6) * u(rng));
    const double l_low = std::pow(10.0, -12.0 + 14.0 * u(rng));
    const double l_high = std::pow(10.0, -12.0 + 14.0 * u(rng));
    const double c = std::pow(10.0, -6.0 + 12.0 * u(rng));
    const auto next = bayes_update(p, a, l_low, l_high, p.t + 0.01);
    const auto scaled = bayes_update(p, a, c * l_low, c * l_high, p.t + 0.01);
    norm_err = std::max(norm_err, std::abs(next.pi_low + next.pi_high - 1.0));
    non_positive += !(next.pi_low > 0.0 && next.pi_high > 0.0);
    scale_err = std::max({scale_err, std::abs(next.pi_low - scaled.pi_low), std::abs(next.pi_high - scaled.pi_high)});
    p = next;
    // Occasionally restart so the chain keeps visiting interior posteriors.
    if (u(rng) < 0.1) {
      p.pi_low = 1e-9 + (1.0 - 2e-9) * u(rng);
      p.pi_high = 1.0 - p.pi_low;
    }
  }
  return {norm_err <= 1e-12 && non_positive == 0 && scale_err <= 1e-12,
          fmt("1e5 steps: max |sum-1| %.1e, non-positive %zu, max scale diff %.1e (tol 1e-12)", norm_err,
              non_positive, scale_err)};
}

// 3. Uninformative likelihoods drive the Standard matrix to its stationary law.
Outcome stationary_convergence() {
  const auto& a = builtin_matrix("Standard");
  // Left eigenvector for eigenvalue 1 of a two-state chain.
  const double target_low = a.rho_hl() / (a.rho_lh() + a.rho_hl());
  bool pass = std::abs(target_low - 2.0 / 7.0) < 1e-15;
  double worst = 0.0;
  for (double prior : {0.001, 0.5, 0.999}) {
    WorkloadPosterior p{0.0, prior, 1.0 - prior};
    for (int k = 1; k <= 200; ++k) p = bayes_update(p, a, 1.0, 1.0, k);
    worst = std::max({worst, std::abs(p.pi_low - 2.0 / 7.0), std::abs(p.pi_high - 5.0 / 7.0)});
  }
  pass = pass && worst <= 1e-6;
  return {pass, fmt("after 200 steps max distance to (2/7, 5/7) %.2e (tol 1e-6)", worst)};
}

// Matrix with the Standard High persistence and a stationary Low share p.
TransitionMatrix prior_matched(double p) {
  const double rho_hh = builtin_matrix("Standard").rho_hh();
  return TransitionMatrix("prior-matched", 1.0 - (1.0 - rho_hh) * (1.0 - p) / p, rho_hh);
}

struct Recovery {
  double accuracy = 0.0;
  double max_prior = 0.0;
  double standard_accuracy = 0.0;
};

// Leave-one-journey-out filtering of a small population, scored against the
// simulator's latent state at every filter instant.
Recovery state_recovery(double separation, std::uint64_t seed) {
  SimConfig cfg;
  cfg.duration_s = 600;
  cfg.separation = separation;
  cfg.seed = seed;
  const auto sims = simulate_population(2, cfg);
  const auto js = journeys_of(sims);
  std::size_t hit = 0, hit_std = 0, n = 0, high = 0;
  for (std::size_t i = 0; i < js.size(); ++i) {
    auto tables = std::make_shared<const LikelihoodSet>(train_likelihoods(js, {}, {}, {js[i].id}));
    std::size_t low = 0, total = 0;
    for (std::size_t k = 0; k < js.size(); ++k) {
      if (k == i) continue;
      for (const auto& l : label_prompts(js[k]).labels) {
        low += l.label == Workload::Low;
        ++total;
      }
    }
    const double p_low = static_cast<double>(low) / static_cast<double>(total);
    const auto matched = run_filter(
        js[i], init_filter(std::make_shared<const ContextPolicy>(policy_fixed(prior_matched(p_low))), tables));
    const auto standard = run_filter(
        js[i], init_filter(std::make_shared<const ContextPolicy>(policy_fixed(builtin_matrix("Standard"))), tables));
    for (std::size_t k = 0; k < matched.size(); ++k) {
      const Workload truth = sims[i].truth.at(matched[k].t);
      hit += decide(matched[k], 0.5) == truth;
      hit_std += decide(standard[k], 0.5) == truth;
      high += truth == Workload::High;
      ++n;
    }
  }
  const double hf = static_cast<double>(high) / static_cast<double>(n);
  return {static_cast<double>(hit) / static_cast<double>(n), std::max(hf, 1.0 - hf),
          static_cast<double>(hit_std) / static_cast<double>(n)};
}

// 4. MAP accuracy against simulator ground truth.
Outcome state_recovery_criterion() {
  bool pass = true;
  std::string detail;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto strong = state_recovery(3.0, derive_seed(40, s));
    const auto none = state_recovery(0.0, derive_seed(41, s));
    pass = pass && strong.accuracy >= 0.85 && strong.standard_accuracy >= 0.85 &&
           std::abs(none.accuracy - none.max_prior) <= 0.03;
    detail += fmt("seed %llu: sep3 acc %.3f (Standard %.3f); sep0 acc %.3f vs max prior %.3f (Standard %.3f). ",
                  static_cast<unsigned long long>(s), strong.accuracy, strong.standard_accuracy, none.accuracy,
                  none.max_prior, none.standard_accuracy);
  }
  return {pass, detail};
}

// 5. Context adaptation: road policy AUC and AWP-matched F1 for low-AWP drivers.
Outcome adaptation_benefit() {
  int road_ok = 0;
  int awp_ok = 0;
  double min_dauc = 1.0, min_df1 = 1.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    SimConfig cfg;
    cfg.duration_s = 600;
    cfg.separation = 0.5;
    cfg.random_road_script = true;
    cfg.seed = derive_seed(500, s);
    const auto road_train = journeys_of(simulate_population(2, cfg));
    cfg.seed = derive_seed(501, s);
    const auto road_test = journeys_of(simulate_population(2, cfg));
    const std::vector<PolicySpec> road_specs = {parse_policy_spec("fixed:Standard"), parse_policy_spec("road")};
    const auto rr = compare_policies(road_test, train_likelihoods(road_train, {}, {}), road_specs, {});
    const double dauc = rr.policies[1].roc.auc - rr.policies[0].roc.auc;
    road_ok += dauc >= 0.03;
    min_dauc = std::min(min_dauc, dauc);

    SimConfig style_cfg;
    style_cfg.duration_s = 600;
    style_cfg.seed = derive_seed(510, s);
    const auto awp_train = journeys_of(simulate_population(2, style_cfg));
    style_cfg.seed = derive_seed(511, s);
    const auto awp_test = journeys_of(simulate_population(3, style_cfg));
    const std::vector<PolicySpec> awp_specs = {parse_policy_spec("fixed:Standard"), parse_policy_spec("awp")};
    const auto ar = compare_policies(awp_test, train_likelihoods(awp_train, {}, {}), awp_specs, {});
    const auto& fixed_by = ar.policies[0].map_by_awp;
    const auto& awp_by = ar.policies[1].map_by_awp;
    if (fixed_by.count(Awp::L) && awp_by.count(Awp::L)) {
      const double df1 = awp_by.at(Awp::L).f1 - fixed_by.at(Awp::L).f1;
      awp_ok += df1 >= 0.05;
      min_df1 = std::min(min_df1, df1);
    }
  }
  const int need = static_cast<int>(std::ceil(0.8 * seeds));
  return {road_ok >= need && awp_ok >= need,
          fmt("road AUC gain >= 0.03 in %d/%d seeds (min %.3f); AWP low-profile F1 gain >= 0.05 in %d/%d seeds "
              "(min %.3f); need %d",
              road_ok, seeds, min_dauc, awp_ok, seeds, min_df1, need)};
}

// Test-side trapezoid over a table's own grid.
double integral(const LikelihoodTable& t) {
  double s = 0.0;
  for (std::size_t k = 1; k < t.grid.size(); ++k) s += 0.5 * (t.density[k] + t.density[k - 1]) * (t.grid[k] - t.grid[k - 1]);
  return s;
}

// 6. KDE tables integrate to one and approximate a known density.
Outcome kde_correctness() {
  double worst = 0.0;
  std::size_t tables = 0;
  SimConfig cfg;
  cfg.duration_s = 600;
  cfg.seed = 6;
  const auto set = train_likelihoods(journeys_of(simulate_population(1, cfg)), {}, {});
  for (const auto& ch : set.channels()) {
    for (Workload s : {Workload::Low, Workload::High}) {
      worst = std::max(worst, std::abs(integral(set.table(ch, s)) - 1.0));
      ++tables;
    }
  }
  std::mt19937_64 rng(66);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(20 + rng() % 500);
    std::lognormal_distribution<double> ln(0.0, 0.3 + 1.5 * std::uniform_real_distribution<double>(0, 1)(rng));
    for (double& x : v) x = (rng() % 2 ? 1.0 : -1.0) * ln(rng);
    worst = std::max(worst, std::abs(integral(fit_kde(v, KdeConfig{})) - 1.0));
    ++tables;
  }
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> draws(10000);
  for (double& x : draws) x = nd(rng);
  const auto t = fit_kde(draws, KdeConfig{});
  double sup = 0.0;
  for (int k = 0; k <= 4000; ++k) {
    const double x = -2.0 + k * 0.001;
    sup = std::max(sup, std::abs(t.at(x) - std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0))));
  }
  return {worst <= 1e-3 && sup <= 0.02,
          fmt("%zu tables, max |integral-1| %.2e (tol 1e-3); N(0,1) sup-norm on [-2,2] %.4f (tol 0.02)", tables, worst,
              sup)};
}

// 7. Transform against direct per-channel convolution.
Outcome transform_oracle() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  std::size_t out_of_range = 0;
  std::size_t shift_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t q = 1 + rng() % 6;
    const std::size_t len = 16 + rng() % 48;
    auto bank = build_kernel_bank(rng(), q, len, 84 + rng() % 200);
    std::vector<Window> train;
    for (int i = 0; i < 3; ++i) train.push_back(testing::random_window(rng, q, len));
    fit_biases(bank, train);
    const auto w = testing::random_window(rng, q, len);
    const auto got = transform(w, bank);
    const auto want = testing::direct_features(w, bank);
    if (got.size() != want.size()) return {false, "feature count differs from oracle"};
    for (std::size_t k = 0; k < got.size(); ++k) {
      worst = std::max(worst, std::abs(got[k] - want[k]));
      out_of_range += got[k] < 0.0 || got[k] > 1.0;
    }
    const auto d = testing::dyadic_window(rng, q, len);
    auto shifted = d;
    const double c = static_cast<double>(static_cast<int>(rng() % 400) - 200) / 16.0;
    for (double& v : shifted.values) v += c;
    shift_mismatch += transform(shifted, bank) != transform(d, bank);
  }
  return {worst <= 1e-9 && out_of_range == 0 && shift_mismatch == 0,
          fmt("100 windows: max |diff| %.1e (tol 1e-9), out of [0,1] %zu, shift mismatches %zu", worst, out_of_range,
              shift_mismatch)};
}

// 8. Sequence filter over per-window scores on simulated populations.
Outcome profiling() {
  const int seeds = 20;
  int never_worse = 0;
  int high = 0;
  double lo = 1.0;
  for (int s = 0; s < seeds; ++s) {
    SimConfig cfg;
    cfg.seed = derive_seed(800, s);
    const auto js = journeys_of(simulate_population(8, cfg));
    ProfileOptions opt;
    opt.length = 400;
    opt.seed = derive_seed(801, s);
    const auto r = profile_population(js, opt);
    never_worse += r.journey_accuracy() >= r.window_accuracy();
    high += r.journey_accuracy() >= 0.85;
    lo = std::min(lo, r.journey_accuracy());
  }
  const int need = static_cast<int>(std::ceil(0.8 * seeds));
  return {never_worse == seeds && high >= need,
          fmt("sequence >= window accuracy in %d/%d seeds; sequence accuracy >= 0.85 in %d/%d (need %d), min %.3f",
              never_worse, seeds, high, seeds, need, lo)};
}

// 9. Label arithmetic and window expansion.
Outcome labeling() {
  std::vector<LabeledInstant> labels;
  for (int i = 0; i < 10; ++i) labels.push_back({static_cast<double>(i), i < 7 ? Workload::Low : Workload::High});
  bool pass = lwr(labels) == 0.7 && awp_from_lwr(0.7) == Awp::M;
  pass = pass && awp_from_lwr(0.55) == Awp::H && awp_from_lwr(std::nextafter(0.55, 1.0)) == Awp::M;
  pass = pass && awp_from_lwr(0.85) == Awp::M && awp_from_lwr(std::nextafter(0.85, 1.0)) == Awp::L;
  const bool examples = pass;

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  std::size_t mismatches = 0, claims = 0, samples = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto j = testing::random_journey(rng, 400, 1 + rng() % 8);
    const auto l = label_prompts(j).labels;
    const LabelWindow w{u(rng), u(rng) + 0.01};
    const auto got = expand_labels(j, l, w);
    const auto want = testing::brute_force_labels(j, l, w);
    claims += want.double_claims;
    if (got.size() != want.samples.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t k = 0; k < got.size(); ++k) {
      mismatches += !(got[k].sample == j.samples[want.samples[k].first]) || got[k].label != want.samples[k].second;
    }
    samples += got.size();
  }
  pass = pass && mismatches == 0 && claims == 0;
  return {pass, fmt("examples %s; 500 random expansions, %zu labeled samples, %zu mismatches, %zu double claims",
                    examples ? "exact" : "WRONG", samples, mismatches, claims)};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

// 10. Two identical CLI pipeline runs produce identical bytes.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "workload_acceptance_determinism";
  const fs::path run = root / "run";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream cfg(root / "sim.cfg");
    cfg << "seed = 11\nmode = population\nn_per_class = 2\nduration_s = 120\nroad_script = random\n";
  }
  auto pipeline = [&]() {
    const std::string r = run.string();
    const std::vector<std::vector<std::string>> steps = {
        {"simulate", "--config", (root / "sim.cfg").string(), "--out", r + "/sim"},
        {"label", "--journey", r + "/sim/sim-L-00.journey", "--out", r + "/labels.txt"},
        {"train", "--journeys", r + "/sim", "--out", r + "/tables"},
        {"filter", "--journey", r + "/sim/sim-M-01.journey", "--tables", r + "/tables", "--policy", "road",
         "--threshold", "0.5", "--out", r + "/posterior.txt"},
        {"evaluate", "--pred", r + "/posterior.txt", "--truth", r + "/sim/sim-M-01.truth", "--out", r + "/eval.txt"},
        {"compare", "--journeys", r + "/sim", "--tables", r + "/tables", "--out", r + "/compare.txt"},
        {"profile", "--journeys", r + "/sim", "--length", "400", "--features", "300", "--seed", "3", "--out",
         r + "/profile.txt"},
    };
    for (const auto& args : steps) {
      std::ostringstream out, err;
      if (cli::run(args, out, err) != 0) throw std::runtime_error(args[0] + " failed: " + err.str());
    }
    return read_tree(run);
  };
  const auto first = pipeline();
  fs::remove_all(run);
  const auto second = pipeline();
  fs::remove_all(root);
  std::size_t differ = first.size() == second.size() ? 0 : 1;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    differ += it == second.end() || it->second != bytes;
  }
  return {differ == 0 && first.size() > 10,
          fmt("%zu artifacts from simulate/label/train/filter/evaluate/compare/profile, %zu differ", first.size(),
              differ)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"forward-oracle equivalence", forward_oracle},
      {"recursion invariants", recursion_invariants},
      {"stationary convergence", stationary_convergence},
      {"state recovery", state_recovery_criterion},
      {"adaptation benefit", adaptation_benefit},
      {"KDE correctness", kde_correctness},
      {"transform oracle", transform_oracle},
      {"profiling with sequence filter", profiling},
      {"labeling exactness", labeling},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
