#ifndef WORKLOAD_SIMULATOR_HPP
#define WORKLOAD_SIMULATOR_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "workload/filter.hpp"
#include "workload/stream_model.hpp"

namespace workload {

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double sd = 1.0;

  bool operator==(const GaussianComponent&) const = default;
};

using Mixture = std::vector<GaussianComponent>;

double mixture_mean(const Mixture& m);
double mixture_sd(const Mixture& m);

/// State-conditional emission mixtures for every channel of `schema`.
struct EmissionModel {
  std::vector<ChannelSchema> schema;
  std::vector<std::array<Mixture, 2>> mixtures;  // [channel][Workload]
  double separation = 0.0;

  const Mixture& mixture(ChannelIndex c, Workload s) const { return mixtures.at(c)[static_cast<std::size_t>(s)]; }
  void validate() const;
};

/// CAN-bus emission model. The High mixture equals the Low mixture with every
/// component mean moved by `separation` times the Low mixture's standard
/// deviation, in a fixed per-channel direction.
EmissionModel can_bus_emissions(double separation);

/// Builds a matrix from mean dwell times (seconds) at a given tick rate.
TransitionMatrix dwell_matrix(std::string name, double dwell_low_s, double dwell_high_s, double tick_hz);

struct DriverStyle {
  Awp awp = Awp::M;
  TransitionMatrix matrix = dwell_matrix("style-M", 9.0, 3.5, 20.0);
  double press_reliability = 0.98;
  // Per-channel multiplier on component spreads; empty means 1 everywhere.
  std::vector<double> spread;

  /// Throws unless reliability is in (0.9, 1] and the stationary Low share of
  /// `matrix` falls in the LWR band of `awp`.
  void validate() const;
};

/// Tuned style for each profile at 20 Hz ticks. `offset` in [0, 1] scales the
/// spread multipliers toward 1 (0 removes every style difference but dynamics).
DriverStyle default_style(Awp a, double offset = 1.0);

struct ScriptedContext {
  ContextAnnotation annotation;
  TransitionMatrix matrix;
};

/// Tick-rate matrices used by the random road script.
std::map<std::string, TransitionMatrix> default_road_dynamics();

struct SimConfig {
  double duration_s = 2400.0;
  double tick_hz = 20.0;
  // Mean arrival rate per channel of the emission schema; empty selects the
  // CAN-bus defaults, which total 200 Hz.
  std::vector<double> rate_hz;
  double jitter = 0.3;  // relative half-width of the inter-arrival jitter
  double prompt_min_s = 5.0;
  double prompt_max_s = 10.0;
  double press_delay_min_s = 0.2;
  double press_delay_max_s = 1.5;
  // Explicit context script; inside an interval its matrix replaces the style's.
  std::vector<ScriptedContext> script;
  // Generate a road-type script per journey instead (overrides `script`).
  bool random_road_script = false;
  double separation = 1.0;    // used by simulate_population
  double style_offset = 1.0;  // used by simulate_population
  std::uint64_t seed = 1;

  void validate() const;
};

std::vector<double> default_rates_hz();

/// Latent state per tick; tick k covers [k / tick_hz, (k + 1) / tick_hz).
struct GroundTruth {
  double tick_hz = 20.0;
  std::vector<Workload> states;

  Workload at(double t) const;
};

struct SimulatedJourney {
  Journey journey;
  GroundTruth truth;
  Awp intended = Awp::M;
};

/// splitmix64 of (seed, stream); independent sub-seeds for parallel journeys.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

SimulatedJourney simulate_journey(const SimConfig& cfg, const DriverStyle& style, const EmissionModel& em,
                                  const std::string& journey_id = "sim");

/// n_per_class journeys per profile; labels come from the realized LWR.
std::vector<SimulatedJourney> simulate_population(std::size_t n_per_class, const SimConfig& cfg);

void write_truth(const GroundTruth& truth, std::ostream& out);
/// Step-function truth `<t> <Low|High>` lines, as written by write_truth.
std::vector<std::pair<double, Workload>> read_truth(std::istream& in, const std::string& source = "<stream>");

}  // namespace workload

#endif  // WORKLOAD_SIMULATOR_HPP
