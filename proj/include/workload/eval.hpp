#ifndef WORKLOAD_EVAL_HPP
#define WORKLOAD_EVAL_HPP

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "workload/filter.hpp"
#include "workload/labeling.hpp"
#include "workload/likelihood.hpp"
#include "workload/stream_model.hpp"

namespace workload {

/// High is the positive class.
struct BinaryConfusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  void add(Workload truth, Workload pred);
};

struct BinaryMetrics {
  BinaryConfusion counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the corresponding denominator was zero and the value reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

BinaryMetrics metrics_from_counts(const BinaryConfusion& c);
BinaryMetrics binary_metrics(std::span<const Workload> truth, std::span<const Workload> pred);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // predict High when score >= threshold
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0, 0) to (1, 1)
  double auc = 0.0;
};

RocCurve roc(std::span<const Workload> truth, std::span<const double> scores);

struct F1Threshold {
  double threshold = 0.0;
  double f1 = 0.0;
};

/// Sweeps the minimum score and the midpoints between consecutive distinct
/// scores; ties in F1 go to the lower threshold.
F1Threshold best_f1_threshold(std::span<const Workload> truth, std::span<const double> scores);

/// Counts per (truth, predicted) profile, indexed by Awp.
struct ClassConfusion {
  std::array<std::array<std::size_t, kAwpCount>, kAwpCount> counts{};

  void add(Awp truth, Awp pred) { ++counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)]; }
  std::size_t total() const;
  std::size_t row_total(Awp truth) const;
  double accuracy() const;
  /// Unweighted mean of per-class F1 over classes present in truth or prediction.
  double macro_f1() const;
};

void write_confusion(const ClassConfusion& c, std::ostream& out);

/// How a compared policy is chosen for each journey.
struct PolicySpec {
  enum class Kind { Fixed, Road, Profile, AwpMatched };
  Kind kind = Kind::Fixed;
  std::string matrix = "Standard";  // for Fixed

  std::string name() const;
  ContextPolicy resolve(const Journey& j) const;
};

/// "fixed:<name>", "road", "profile" or "awp" (matched to each journey's label).
PolicySpec parse_policy_spec(std::string_view text);

struct JourneyResult {
  std::string journey_id;
  std::optional<Awp> awp;
  std::size_t instances = 0;
  std::size_t positives = 0;
  std::optional<double> auc;  // when both classes occur
  BinaryMetrics at_pooled_threshold;
};

struct PolicyReport {
  std::string policy;
  RocCurve roc;
  F1Threshold best;
  BinaryMetrics pooled;  // micro: all instances pooled, at the best threshold
  std::vector<JourneyResult> journeys;
  // Per-journey averages of accuracy, precision, recall and F1.
  BinaryMetrics journey_average;
  std::map<Awp, BinaryMetrics> by_awp;  // pooled within each profile class
  // Same tallies at the filter's MAP decision (pi_high >= 0.5).
  BinaryMetrics map;
  std::map<Awp, BinaryMetrics> map_by_awp;
};

struct ComparisonReport {
  std::vector<PolicyReport> policies;
};

/// Instances are the samples labeled by expand_labels; each is scored by the
/// posterior pi_high of its instant.
ComparisonReport compare_policies(std::span<const Journey> journeys, const LikelihoodSet& tables,
                                  std::span<const PolicySpec> policies, const LabelWindow& w);

void write_report(const ComparisonReport& r, std::ostream& out);

}  // namespace workload

#endif  // WORKLOAD_EVAL_HPP
