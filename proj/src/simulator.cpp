#include "workload/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "workload/error.hpp"
#include "workload/labeling.hpp"

namespace workload {

double mixture_mean(const Mixture& m) {
  double mean = 0.0;
  for (const auto& c : m) mean += c.weight * c.mean;
  return mean;
}

double mixture_sd(const Mixture& m) {
  const double mean = mixture_mean(m);
  double second = 0.0;
  for (const auto& c : m) second += c.weight * (c.sd * c.sd + c.mean * c.mean);
  return std::sqrt(std::max(0.0, second - mean * mean));
}

void EmissionModel::validate() const {
  if (mixtures.size() != schema.size()) throw InvariantError("emission model needs one mixture pair per channel");
  if (!(separation >= 0.0)) throw InvariantError("separation must be >= 0");
  for (std::size_t c = 0; c < mixtures.size(); ++c) {
    for (const auto& m : mixtures[c]) {
      if (m.empty()) throw InvariantError("empty mixture for channel '" + schema[c].id + "'");
      double total = 0.0;
      for (const auto& g : m) {
        if (!(g.weight >= 0.0) || !(g.sd > 0.0)) {
          throw InvariantError("mixture of '" + schema[c].id + "' needs weights >= 0 and sd > 0");
        }
        total += g.weight;
      }
      if (std::abs(total - 1.0) > 1e-9) throw InvariantError("mixture weights of '" + schema[c].id + "' must sum to 1");
    }
  }
}

EmissionModel can_bus_emissions(double separation) {
  struct Base {
    Mixture low;
    double direction;
  };
  // Same order as can_bus_schema().
  const std::vector<Base> bases = {
      {{{0.5, 55.0, 6.0}, {0.5, 68.0, 5.0}}, -1.0},      // VehicleSpeed: slower under load
      {{{0.8, 0.0, 15.0}, {0.2, 0.0, 60.0}}, 1.0},       // SteeringWheelAngle
      {{{0.7, 40.0, 15.0}, {0.3, 100.0, 40.0}}, 1.0},    // SteeringWheelAngleSpeed
      {{{0.7, 25.0, 8.0}, {0.3, 45.0, 10.0}}, 1.0},      // PedalPos
      {{{0.6, 12.0, 4.0}, {0.4, 30.0, 10.0}}, 1.0},      // BrakePressure
      {{{0.8, 0.0, 0.8}, {0.2, 0.0, 2.5}}, 1.0},         // LateralAcceleration
      {{{0.8, 0.0, 3.0}, {0.2, 0.0, 10.0}}, 1.0},        // YawRate
  };
  EmissionModel em;
  em.schema = can_bus_schema();
  em.separation = separation;
  for (const auto& b : bases) {
    Mixture high = b.low;
    const double shift = b.direction * separation * mixture_sd(b.low);
    for (auto& g : high) g.mean += shift;
    em.mixtures.push_back({b.low, high});
  }
  em.validate();
  return em;
}

TransitionMatrix dwell_matrix(std::string name, double dwell_low_s, double dwell_high_s, double tick_hz) {
  return TransitionMatrix(std::move(name), 1.0 - 1.0 / (dwell_low_s * tick_hz), 1.0 - 1.0 / (dwell_high_s * tick_hz));
}

void DriverStyle::validate() const {
  if (!(press_reliability > 0.9 && press_reliability <= 1.0)) {
    throw InvariantError("press reliability must lie in (0.9, 1]");
  }
  const double pi_low = matrix.stationary()[0];
  if (awp_from_lwr(pi_low) != awp) {
    throw InvariantError("style matrix '" + matrix.name() + "' has stationary Low share " + format_number(pi_low) +
                         " outside the band of profile " + std::string(to_string(awp)));
  }
  for (double s : spread) {
    if (!(s > 0.0)) throw InvariantError("spread multipliers must be positive");
  }
}

DriverStyle default_style(Awp a, double offset) {
  if (!(offset >= 0.0 && offset <= 1.0)) throw InvariantError("style offset must lie in [0, 1]");
  DriverStyle s;
  s.awp = a;
  s.press_reliability = 0.98;
  std::vector<double> spread;
  switch (a) {
    case Awp::L:
      s.matrix = dwell_matrix("style-L", 40.0, 2.0, 20.0);
      spread = {0.85, 0.7, 0.75, 0.85, 0.85, 0.7, 0.7};
      break;
    case Awp::M:
      s.matrix = dwell_matrix("style-M", 9.0, 3.5, 20.0);
      spread = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
      break;
    case Awp::H:
      s.matrix = dwell_matrix("style-H", 4.0, 5.0, 20.0);
      spread = {1.2, 1.4, 1.35, 1.2, 1.2, 1.4, 1.4};
      break;
  }
  for (double& v : spread) v = 1.0 + offset * (v - 1.0);
  s.spread = std::move(spread);
  return s;
}

std::map<std::string, TransitionMatrix> default_road_dynamics() {
  return {
      {"junction", dwell_matrix("road-junction", 1.5, 8.0, 20.0)},
      {"urban", dwell_matrix("road-urban", 5.0, 5.0, 20.0)},
      {"country", dwell_matrix("road-country", 15.0, 3.0, 20.0)},
      {"motorway", dwell_matrix("road-motorway", 40.0, 2.0, 20.0)},
  };
}

std::vector<double> default_rates_hz() { return {25.0, 40.0, 40.0, 25.0, 25.0, 25.0, 20.0}; }

void SimConfig::validate() const {
  if (!(duration_s > 0.0)) throw InvariantError("duration must be positive");
  if (!(tick_hz > 0.0)) throw InvariantError("tick rate must be positive");
  for (double r : rate_hz) {
    if (!(r > 0.0)) throw InvariantError("channel rates must be positive");
  }
  if (!(jitter >= 0.0 && jitter < 1.0)) throw InvariantError("jitter must lie in [0, 1)");
  if (!(prompt_min_s > 0.0 && prompt_min_s <= prompt_max_s)) throw InvariantError("prompt bounds need 0 < min <= max");
  if (!(press_delay_min_s >= 0.0 && press_delay_min_s <= press_delay_max_s && press_delay_max_s < prompt_min_s)) {
    throw InvariantError("press delay must lie within the minimum prompt gap");
  }
  if (!(separation >= 0.0)) throw InvariantError("separation must be >= 0");
  if (!(style_offset >= 0.0 && style_offset <= 1.0)) throw InvariantError("style offset must lie in [0, 1]");
}

Workload GroundTruth::at(double t) const {
  if (states.empty()) throw InvariantError("empty ground truth");
  const double k = std::floor(t * tick_hz);
  if (k <= 0.0) return states.front();
  const auto idx = static_cast<std::size_t>(k);
  return idx < states.size() ? states[idx] : states.back();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::int64_t to_ms(double seconds) { return static_cast<std::int64_t>(std::llround(seconds * 1000.0)); }
double from_ms(std::int64_t ms) { return static_cast<double>(ms) / 1000.0; }

double draw(const Mixture& m, double spread, Rng& rng) {
  double u = uniform(rng, 0.0, 1.0);
  const GaussianComponent* pick = &m.back();
  for (const auto& g : m) {
    if (u < g.weight) {
      pick = &g;
      break;
    }
    u -= g.weight;
  }
  return pick->mean + spread * pick->sd * std::normal_distribution<double>(0.0, 1.0)(rng);
}

std::vector<ScriptedContext> random_road_script(double duration_s, Rng& rng) {
  const auto dynamics = default_road_dynamics();
  struct Segment {
    const char* tag;
    double min_s;
    double max_s;
  };
  const Segment segments[] = {{"junction", 6.0, 15.0}, {"urban", 40.0, 120.0}, {"country", 60.0, 180.0},
                              {"motorway", 120.0, 300.0}};
  // Successor weights (junction, urban, country, motorway) per current type.
  const double next[4][4] = {{0.0, 0.5, 0.5, 0.0}, {0.6, 0.0, 0.2, 0.2}, {0.4, 0.3, 0.0, 0.3}, {0.5, 0.0, 0.5, 0.0}};

  std::vector<ScriptedContext> out;
  std::size_t type = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
  std::int64_t start = 0;
  const std::int64_t end = to_ms(duration_s);
  while (start < end) {
    const auto& seg = segments[type];
    std::int64_t stop = start + to_ms(uniform(rng, seg.min_s, seg.max_s));
    stop = std::min(stop, end);
    if (stop <= start) break;
    out.push_back({ContextAnnotation{ContextKind::Road, from_ms(start), from_ms(stop), seg.tag}, dynamics.at(seg.tag)});
    start = stop;
    std::discrete_distribution<std::size_t> pick({next[type][0], next[type][1], next[type][2], next[type][3]});
    type = pick(rng);
  }
  return out;
}

}  // namespace

SimulatedJourney simulate_journey(const SimConfig& cfg, const DriverStyle& style, const EmissionModel& em,
                                  const std::string& journey_id) {
  cfg.validate();
  style.validate();
  em.validate();
  const std::vector<double> rates = cfg.rate_hz.empty() ? default_rates_hz() : cfg.rate_hz;
  if (rates.size() != em.schema.size()) throw InvariantError("one arrival rate per channel required");
  if (!style.spread.empty() && style.spread.size() != em.schema.size()) {
    throw InvariantError("one spread multiplier per channel required");
  }

  Rng rng(cfg.seed);
  SimulatedJourney out;
  out.intended = style.awp;
  Journey& j = out.journey;
  j.id = journey_id;
  j.schema = em.schema;

  const std::vector<ScriptedContext> script = cfg.random_road_script ? random_road_script(cfg.duration_s, rng)
                                                                     : cfg.script;
  for (const auto& s : script) j.contexts.push_back(s.annotation);

  // Latent workload at fixed ticks.
  const auto n_ticks = static_cast<std::size_t>(std::ceil(cfg.duration_s * cfg.tick_hz));
  out.truth.tick_hz = cfg.tick_hz;
  out.truth.states.reserve(n_ticks);
  std::size_t ctx = 0;
  auto active = [&](double t) -> const TransitionMatrix& {
    while (ctx < script.size() && script[ctx].annotation.t_end <= t) ++ctx;
    if (ctx < script.size() && script[ctx].annotation.covers(t)) return script[ctx].matrix;
    for (const auto& s : script) {
      if (s.annotation.covers(t)) return s.matrix;
    }
    return style.matrix;
  };
  Workload state = uniform(rng, 0.0, 1.0) < active(0.0).stationary()[0] ? Workload::Low : Workload::High;
  out.truth.states.push_back(state);
  for (std::size_t k = 1; k < n_ticks; ++k) {
    const auto& a = active(static_cast<double>(k) / cfg.tick_hz);
    const double stay = state == Workload::Low ? a.rho_ll() : a.rho_hh();
    if (uniform(rng, 0.0, 1.0) >= stay) state = state == Workload::Low ? Workload::High : Workload::Low;
    out.truth.states.push_back(state);
  }

  // Asynchronous channel arrivals on a millisecond clock.
  const std::int64_t end_ms = to_ms(cfg.duration_s);
  for (ChannelIndex c = 0; c < em.schema.size(); ++c) {
    const double period_ms = 1000.0 / rates[c];
    const double spread = style.spread.empty() ? 1.0 : style.spread[c];
    const auto& range = em.schema[c];
    std::int64_t t = static_cast<std::int64_t>(std::floor(uniform(rng, 0.0, period_ms)));
    while (t < end_ms) {
      const double ts = from_ms(t);
      const double v = draw(em.mixture(c, out.truth.at(ts)), spread, rng);
      j.samples.push_back({c, ts, std::clamp(v, range.min, range.max)});
      const double gap = period_ms * (1.0 + cfg.jitter * uniform(rng, -1.0, 1.0));
      t += std::max<std::int64_t>(1, std::llround(gap));
    }
  }
  std::stable_sort(j.samples.begin(), j.samples.end(), [](const ChannelSample& a, const ChannelSample& b) {
    return a.t < b.t || (a.t == b.t && a.channel < b.channel);
  });

  // Prompts and presses.
  std::int64_t prompt = 0;
  while (true) {
    prompt += to_ms(uniform(rng, cfg.prompt_min_s, cfg.prompt_max_s));
    if (prompt >= end_ms) break;
    PromptEvent p{from_ms(prompt), std::nullopt};
    const double delay = uniform(rng, cfg.press_delay_min_s, cfg.press_delay_max_s);
    const bool answered = uniform(rng, 0.0, 1.0) < style.press_reliability;
    if (out.truth.at(p.t_prompt) == Workload::Low && answered) p.t_press = from_ms(prompt + to_ms(delay));
    j.prompts.push_back(p);
  }
  if (!j.prompts.empty()) j.awp_label = awp_from_lwr(lwr(label_prompts(j).labels));
  validate(j);
  return out;
}

std::vector<SimulatedJourney> simulate_population(std::size_t n_per_class, const SimConfig& cfg) {
  if (n_per_class < 1) throw InvariantError("population needs at least one journey per class");
  const EmissionModel em = can_bus_emissions(cfg.separation);
  std::vector<SimulatedJourney> out;
  std::uint64_t stream = 0;
  for (Awp a : {Awp::L, Awp::M, Awp::H}) {
    const DriverStyle style = default_style(a, cfg.style_offset);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      SimConfig c = cfg;
      c.seed = derive_seed(cfg.seed, stream++);
      std::ostringstream id;
      id << "sim-" << to_string(a) << '-' << (i < 10 ? "0" : "") << i;
      out.push_back(simulate_journey(c, style, em, id.str()));
    }
  }
  return out;
}

void write_truth(const GroundTruth& truth, std::ostream& out) {
  for (std::size_t k = 0; k < truth.states.size(); ++k) {
    out << format_number(static_cast<double>(k) / truth.tick_hz) << ' ' << to_string(truth.states[k]) << '\n';
  }
}

std::vector<std::pair<double, Workload>> read_truth(std::istream& in, const std::string& source) {
  std::vector<std::pair<double, Workload>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string tok; ls >> tok;) f.push_back(tok);
    if (f.empty() || f[0].front() == '#') continue;
    // Label files carry a leading record tag; summaries are skipped.
    if (f[0] == "R") continue;
    if (f[0] == "L") f.erase(f.begin());
    if (f.size() != 2) throw ParseError(source, lineno, "expected: <t> <Low|High>");
    try {
      const double t = parse_number(f[0]);
      if (!out.empty() && !(t > out.back().first)) throw ParseError(source, lineno, "truth times must increase");
      out.emplace_back(t, parse_workload(f[1]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return out;
}

}  // namespace workload
