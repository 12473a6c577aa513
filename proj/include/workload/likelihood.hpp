#ifndef WORKLOAD_LIKELIHOOD_HPP
#define WORKLOAD_LIKELIHOOD_HPP

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "workload/labeling.hpp"
#include "workload/stream_model.hpp"

namespace workload {

struct KdeConfig {
  // Silverman's rule when unset.
  std::optional<double> fixed_bandwidth;
  // Lower bound on the grid size; the grid is refined so that its spacing never
  // exceeds half a bandwidth.
  std::size_t grid_points = 512;
  double grid_margin = 8.0;  // in bandwidths, each side of the data range
  double density_floor = 1e-9;

  void validate() const;
};

/// Gaussian KDE sampled on a uniform grid, before flooring.
struct KdeGrid {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// 0.9 * min(sd, IQR / 1.34) * n^(-1/5); falls back to sd when the IQR is zero.
/// Throws InvariantError for constant input.
double silverman_bandwidth(std::span<const double> values);

KdeGrid kde_on_grid(std::span<const double> values, const KdeConfig& cfg);

/// Trapezoidal integral of `density` over `grid`.
double trapezoid(std::span<const double> grid, std::span<const double> density);

/// Discretized p(y | state) for one channel. Evaluation interpolates linearly and
/// clamps outside the grid to the edge value.
struct LikelihoodTable {
  std::string channel;
  Workload state = Workload::Low;
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;

  double at(double x) const;
  bool operator==(const LikelihoodTable&) const = default;
};

LikelihoodTable fit_kde(std::span<const double> values, const KdeConfig& cfg, std::string channel = {},
                        Workload state = Workload::Low);

/// Low/High tables per channel.
class LikelihoodSet {
 public:
  void insert(LikelihoodTable table);

  bool contains(std::string_view channel) const { return find(channel).has_value(); }
  std::optional<std::size_t> find(std::string_view channel) const;
  const LikelihoodTable& table(std::string_view channel, Workload state) const;
  const LikelihoodTable& table(std::size_t channel_slot, Workload state) const;

  std::size_t channel_count() const { return channels_.size(); }
  std::size_t table_count() const;
  const std::vector<std::string>& channels() const { return channels_; }

  /// Every channel has both states.
  bool complete() const;

  bool operator==(const LikelihoodSet&) const = default;

 private:
  std::vector<std::string> channels_;
  std::vector<std::array<std::optional<LikelihoodTable>, 2>> tables_;
};

/// Fits one table per (channel, state) from samples labeled by expand_labels.
/// Journeys whose id is in `exclude` are skipped (leave-one-driver-out).
LikelihoodSet train_likelihoods(std::span<const Journey> journeys, const LabelWindow& w, const KdeConfig& cfg,
                                const std::set<std::string>& exclude = {});

struct NamedObservation {
  std::string_view channel;
  double value = 0.0;
};

/// Product over channels of p(y_q | state). Throws on a channel without tables.
double eval_likelihood(const LikelihoodSet& tables, std::span<const NamedObservation> obs, Workload state);

/// Tables resolved against one journey schema for per-sample evaluation.
class BoundLikelihood {
 public:
  BoundLikelihood(const LikelihoodSet& tables, std::span<const ChannelSchema> schema);

  /// Likelihoods (Low, High) of the samples, which must share one instant.
  std::array<double, 2> eval(std::span<const ChannelSample> obs) const;

 private:
  const LikelihoodSet* tables_;
  std::vector<std::optional<std::size_t>> slot_;
  std::vector<std::string> names_;
};

void write_table(const LikelihoodTable& table, std::ostream& out);
std::vector<LikelihoodTable> read_tables(std::istream& in, const std::string& source = "<stream>");

/// One `<channel>.<state>.tbl` file per table.
void save_likelihoods(const LikelihoodSet& set, const std::filesystem::path& dir, std::string_view preamble = {});
LikelihoodSet load_likelihoods(const std::filesystem::path& dir);

}  // namespace workload

#endif  // WORKLOAD_LIKELIHOOD_HPP
