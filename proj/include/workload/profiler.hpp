#ifndef WORKLOAD_PROFILER_HPP
#define WORKLOAD_PROFILER_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "workload/eval.hpp"
#include "workload/stream_model.hpp"

namespace workload {

/// Raw streams arrive at about 200 Hz and are resampled ten times slower.
inline constexpr double kRawRateHz = 200.0;
inline constexpr double kDownsampleFactor = 10.0;
inline constexpr double kResampleHz = kRawRateHz / kDownsampleFactor;

inline constexpr std::array<std::size_t, 6> kWindowLengths = {100, 200, 400, 600, 1200, 1800};
inline constexpr std::size_t kDefaultWindowLength = 400;

/// Q x L samples stored row-major (one row per channel).
struct Window {
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<double> values;
  double t_start = 0.0;
  std::string journey_id;

  Window() = default;
  Window(std::size_t q, std::size_t l) : channels(q), length(l), values(q * l, 0.0) {}

  double& at(std::size_t c, std::size_t i) { return values[c * length + i]; }
  double at(std::size_t c, std::size_t i) const { return values[c * length + i]; }
  std::span<const double> row(std::size_t c) const { return {values.data() + c * length, length}; }
  std::span<double> row(std::size_t c) { return {values.data() + c * length, length}; }
};

/// Linear interpolation of one channel's samples at time t; constant beyond the
/// first and last sample.
double interpolate_at(std::span<const double> times, std::span<const double> values, double t);

/// Channels (rates derived where flagged) linearly interpolated onto a uniform
/// kResampleHz grid starting at t = 0, one row per channel.
struct Resampled {
  std::vector<std::string> channels;
  std::vector<std::vector<double>> rows;
  double hz = kResampleHz;

  std::size_t length() const { return rows.empty() ? 0 : rows.front().size(); }
};

Resampled resample(const Journey& j, double hz = kResampleHz);

/// Consecutive non-overlapping windows of `length` samples, unscaled.
std::vector<Window> slice_windows(const Journey& j, std::size_t length);

struct RobustScaleParams {
  std::vector<double> median;
  std::vector<double> iqr;     // 1 where flagged constant
  std::vector<bool> constant;  // IQR was zero

  void apply(Window& w) const;
};

RobustScaleParams fit_robust_scale(std::span<const Window> training);

/// slice_windows followed by scaling. Shorter journeys yield no windows.
std::vector<Window> preprocess(const Journey& j, std::size_t length, const RobustScaleParams& scale);

/// Random convolutional kernel bank. Every kernel has 9 taps: -1 everywhere
/// except three positions of weight 2. Each (kernel, dilation) pair reads the
/// sum of a random channel subset and owns a run of bias thresholds.
struct KernelBank {
  struct Combination {
    std::size_t kernel = 0;  // index into kernels
    std::size_t dilation = 1;
    std::vector<std::size_t> channels;
    std::vector<double> quantiles;  // levels used to fit the biases
    std::vector<double> biases;

    bool operator==(const Combination&) const = default;
  };

  std::uint64_t seed = 0;
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<std::array<std::size_t, 3>> kernels;  // positions of the 2-weights
  std::vector<Combination> combinations;
  bool fitted = false;

  std::size_t feature_count() const;
  bool operator==(const KernelBank&) const = default;
};

inline constexpr std::size_t kKernelTaps = 9;
inline constexpr std::size_t kDefaultFeatureCount = 2000;

std::array<double, kKernelTaps> kernel_weights(const std::array<std::size_t, 3>& twos);

KernelBank build_kernel_bank(std::uint64_t seed, std::size_t channels, std::size_t length = kDefaultWindowLength,
                             std::size_t feature_count = kDefaultFeatureCount);

/// Sets every bias from the convolution output quantiles of one randomly chosen
/// training window per combination.
void fit_biases(KernelBank& bank, std::span<const Window> training);

/// Convolution (no padding) of the summed channel subset for one combination.
std::vector<double> convolve(const Window& w, const KernelBank& bank, const KernelBank::Combination& combo);

/// Proportion of positive values per (combination, bias), each in [0, 1].
std::vector<double> transform(const Window& w, const KernelBank& bank);

/// Confidence per profile, indexed by Awp (L, M, H).
using ScoreVector = std::array<double, kAwpCount>;

/// One-vs-rest ridge regression on standardized features with the penalty
/// chosen by generalized cross-validation; scores are the softmax of the three
/// outputs.
class RidgeClassifier {
 public:
  static std::vector<double> default_alphas();

  void fit(std::span<const std::vector<double>> features, std::span<const Awp> labels,
           std::span<const double> alphas = {});

  std::array<double, kAwpCount> decision(std::span<const double> x) const;
  ScoreVector scores(std::span<const double> x) const;

  double alpha() const { return alpha_; }
  bool fitted() const { return !weights_.empty(); }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
  std::vector<std::array<double, kAwpCount>> weights_;  // per feature
  std::array<double, kAwpCount> intercept_{};
  double alpha_ = 0.0;
};

/// Arithmetic mean per class, renormalized.
ScoreVector sequence_filter(std::span<const ScoreVector> scores);

/// Argmax; ties resolve toward the higher workload (H over M over L).
Awp decide_awp(const ScoreVector& s);

enum class SplitMode { Window, Journey };

struct ProfileOptions {
  std::size_t length = kDefaultWindowLength;
  std::uint64_t seed = 7;
  SplitMode split = SplitMode::Window;
  double train_fraction = 0.8;
  std::size_t feature_count = kDefaultFeatureCount;
};

struct JourneyProfile {
  std::string journey_id;
  Awp truth = Awp::M;
  std::vector<ScoreVector> window_scores;  // test windows of this journey
  ScoreVector fused{};
  Awp decision = Awp::M;
};

struct ProfileReport {
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
  double alpha = 0.0;
  ClassConfusion window_confusion;   // per test window, no sequence filter
  ClassConfusion journey_confusion;  // per journey, after the sequence filter
  std::vector<JourneyProfile> journeys;

  double window_accuracy() const { return window_confusion.accuracy(); }
  double journey_accuracy() const { return journey_confusion.accuracy(); }
};

/// End-to-end profiling: windowing, scaling, transform, training on the
/// training split and sequence-filtered decisions on the test split. Every
/// journey needs an awp_label.
ProfileReport profile_population(std::span<const Journey> journeys, const ProfileOptions& opt);

void write_profile_report(const ProfileReport& r, std::ostream& out);

}  // namespace workload

#endif  // WORKLOAD_PROFILER_HPP
