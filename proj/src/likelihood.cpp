#include "workload/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "workload/error.hpp"

namespace workload {

namespace {

// Kernel support in bandwidths; exp(-0.5 * 9^2) is below double epsilon.
constexpr double kKernelReach = 9.0;
constexpr std::size_t kMaxGridPoints = std::size_t{1} << 18;

double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double silverman_sorted(std::span<const double> sorted) {
  const auto n = static_cast<double>(sorted.size());
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) {
    throw InvariantError("constant data: Silverman bandwidth is zero; use a fixed bandwidth");
  }
  return 0.9 * spread * std::pow(n, -0.2);
}

}  // namespace

void KdeConfig::validate() const {
  if (fixed_bandwidth && !(*fixed_bandwidth > 0.0 && std::isfinite(*fixed_bandwidth))) {
    throw InvariantError("fixed KDE bandwidth must be positive");
  }
  if (grid_points < 2) throw InvariantError("KDE grid needs at least 2 points");
  if (!(grid_margin >= 0.0)) throw InvariantError("KDE grid margin must be >= 0");
  if (!(density_floor > 0.0 && density_floor < 1.0)) throw InvariantError("density floor must lie in (0, 1)");
}

double silverman_bandwidth(std::span<const double> values) {
  if (values.size() < 2) throw InvariantError("Silverman bandwidth needs at least 2 values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return silverman_sorted(sorted);
}

KdeGrid kde_on_grid(std::span<const double> values, const KdeConfig& cfg) {
  cfg.validate();
  if (values.size() < 2) throw InvariantError("KDE needs at least 2 values");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvariantError("KDE input must be finite");
  }
  // Sorting fixes the summation order, so the result does not depend on the
  // input permutation.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  KdeGrid out;
  out.bandwidth = cfg.fixed_bandwidth ? *cfg.fixed_bandwidth : silverman_sorted(sorted);
  const double h = out.bandwidth;
  const double lo = sorted.front() - cfg.grid_margin * h;
  const double hi = sorted.back() + cfg.grid_margin * h;

  std::size_t n_grid = cfg.grid_points;
  if (hi > lo) {
    const auto needed = static_cast<std::size_t>(std::ceil((hi - lo) / (0.5 * h))) + 1;
    n_grid = std::max(n_grid, std::min(needed, kMaxGridPoints));
  }
  // A zero-width span only happens for a constant input with zero margin.
  const double span = hi > lo ? hi - lo : 2.0 * h;
  const double start = hi > lo ? lo : lo - h;
  const double dx = span / static_cast<double>(n_grid - 1);

  out.grid.resize(n_grid);
  for (std::size_t k = 0; k < n_grid; ++k) out.grid[k] = start + dx * static_cast<double>(k);
  out.grid.back() = start + span;
  out.density.assign(n_grid, 0.0);

  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  const double reach = kKernelReach * h;
  for (double x : sorted) {
    const auto k0 = static_cast<std::ptrdiff_t>(std::ceil((x - reach - start) / dx));
    const auto k1 = static_cast<std::ptrdiff_t>(std::floor((x + reach - start) / dx));
    const auto first = static_cast<std::size_t>(std::max<std::ptrdiff_t>(k0, 0));
    const auto last = static_cast<std::size_t>(std::min<std::ptrdiff_t>(k1, static_cast<std::ptrdiff_t>(n_grid) - 1));
    for (std::size_t k = first; k <= last && k < n_grid; ++k) {
      const double u = (out.grid[k] - x) / h;
      out.density[k] += std::exp(-0.5 * u * u);
    }
  }
  for (double& d : out.density) d *= norm;
  return out;
}

double trapezoid(std::span<const double> grid, std::span<const double> density) {
  double total = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    total += 0.5 * (grid[k] - grid[k - 1]) * (density[k] + density[k - 1]);
  }
  return total;
}

double LikelihoodTable::at(double x) const {
  if (x <= grid.front()) return density.front();
  if (x >= grid.back()) return density.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const auto hi = static_cast<std::size_t>(it - grid.begin());
  const auto lo = hi - 1;
  const double frac = (x - grid[lo]) / (grid[hi] - grid[lo]);
  return density[lo] + frac * (density[hi] - density[lo]);
}

LikelihoodTable fit_kde(std::span<const double> values, const KdeConfig& cfg, std::string channel, Workload state) {
  KdeGrid raw = kde_on_grid(values, cfg);
  LikelihoodTable t;
  t.channel = std::move(channel);
  t.state = state;
  t.bandwidth = raw.bandwidth;
  t.grid = std::move(raw.grid);
  t.density = std::move(raw.density);
  for (double& d : t.density) d = std::max(d, cfg.density_floor);
  return t;
}

std::optional<std::size_t> LikelihoodSet::find(std::string_view channel) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i] == channel) return i;
  }
  return std::nullopt;
}

void LikelihoodSet::insert(LikelihoodTable table) {
  auto slot = find(table.channel);
  if (!slot) {
    slot = channels_.size();
    channels_.push_back(table.channel);
    tables_.emplace_back();
  }
  tables_[*slot][static_cast<std::size_t>(table.state)] = std::move(table);
}

const LikelihoodTable& LikelihoodSet::table(std::size_t channel_slot, Workload state) const {
  const auto& t = tables_.at(channel_slot)[static_cast<std::size_t>(state)];
  if (!t) {
    throw InvariantError("no " + std::string(to_string(state)) + " table for channel '" + channels_[channel_slot] +
                         "'");
  }
  return *t;
}

const LikelihoodTable& LikelihoodSet::table(std::string_view channel, Workload state) const {
  const auto slot = find(channel);
  if (!slot) throw InvariantError("no likelihood table for channel '" + std::string(channel) + "'");
  return table(*slot, state);
}

std::size_t LikelihoodSet::table_count() const {
  std::size_t n = 0;
  for (const auto& pair : tables_) n += static_cast<std::size_t>(pair[0].has_value()) + pair[1].has_value();
  return n;
}

bool LikelihoodSet::complete() const {
  return std::all_of(tables_.begin(), tables_.end(), [](const auto& p) { return p[0] && p[1]; });
}

LikelihoodSet train_likelihoods(std::span<const Journey> journeys, const LabelWindow& w, const KdeConfig& cfg,
                                const std::set<std::string>& exclude) {
  cfg.validate();
  std::vector<std::string> names;
  std::vector<std::array<std::vector<double>, 2>> values;
  auto slot_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    names.push_back(name);
    values.emplace_back();
    return names.size() - 1;
  };

  for (const auto& j : journeys) {
    if (exclude.count(j.id)) continue;
    std::vector<std::size_t> slots;
    for (const auto& c : j.schema) slots.push_back(slot_of(c.id));
    const auto labels = label_prompts(j);
    for (const auto& ls : expand_labels(j, labels.labels, w)) {
      values[slots[ls.sample.channel]][static_cast<std::size_t>(ls.label)].push_back(ls.sample.value);
    }
  }

  LikelihoodSet out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (Workload state : {Workload::Low, Workload::High}) {
      const auto& v = values[i][static_cast<std::size_t>(state)];
      if (v.size() < 2) {
        throw InvariantError("insufficient labeled samples for channel '" + names[i] + "' in state " +
                             std::string(to_string(state)) + " (" + std::to_string(v.size()) + ")");
      }
      try {
        out.insert(fit_kde(v, cfg, names[i], state));
      } catch (const InvariantError& e) {
        throw InvariantError("channel '" + names[i] + "' state " + std::string(to_string(state)) + ": " + e.what());
      }
    }
  }
  return out;
}

double eval_likelihood(const LikelihoodSet& tables, std::span<const NamedObservation> obs, Workload state) {
  if (obs.empty()) throw InvariantError("likelihood of an empty observation set");
  double p = 1.0;
  for (const auto& o : obs) p *= tables.table(o.channel, state).at(o.value);
  return p;
}

BoundLikelihood::BoundLikelihood(const LikelihoodSet& tables, std::span<const ChannelSchema> schema)
    : tables_(&tables) {
  for (const auto& c : schema) {
    auto slot = tables.find(c.id);
    if (slot) {
      tables.table(*slot, Workload::Low);
      tables.table(*slot, Workload::High);
    }
    slot_.push_back(slot);
    names_.push_back(c.id);
  }
}

std::array<double, 2> BoundLikelihood::eval(std::span<const ChannelSample> obs) const {
  if (obs.empty()) throw InvariantError("likelihood of an empty observation set");
  std::array<double, 2> p{1.0, 1.0};
  for (const auto& s : obs) {
    const auto& slot = slot_.at(s.channel);
    if (!slot) throw InvariantError("no likelihood table for channel '" + names_[s.channel] + "'");
    p[0] *= tables_->table(*slot, Workload::Low).at(s.value);
    p[1] *= tables_->table(*slot, Workload::High).at(s.value);
  }
  return p;
}

void write_table(const LikelihoodTable& table, std::ostream& out) {
  out << "T " << table.channel << ' ' << to_string(table.state) << ' ' << format_number(table.bandwidth) << ' '
      << table.grid.size() << '\n';
  for (std::size_t k = 0; k < table.grid.size(); ++k) {
    out << format_number(table.grid[k]) << ' ' << format_number(table.density[k]) << '\n';
  }
}

std::vector<LikelihoodTable> read_tables(std::istream& in, const std::string& source) {
  std::vector<LikelihoodTable> out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t remaining = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string tok; ls >> tok;) f.push_back(tok);
    if (f.empty()) continue;
    try {
      if (remaining == 0) {
        if (f.size() != 5 || f[0] != "T") throw ParseError(source, lineno, "expected: T <channel> <state> <bandwidth> <n_grid>");
        LikelihoodTable t;
        t.channel = f[1];
        t.state = parse_workload(f[2]);
        t.bandwidth = parse_number(f[3]);
        remaining = std::stoul(f[4]);
        if (remaining < 2) throw ParseError(source, lineno, "table needs at least 2 grid points");
        out.push_back(std::move(t));
      } else {
        if (f.size() != 2) throw ParseError(source, lineno, "expected: <x> <density>");
        auto& t = out.back();
        const double x = parse_number(f[0]);
        const double d = parse_number(f[1]);
        if (!t.grid.empty() && !(x > t.grid.back())) throw ParseError(source, lineno, "grid must strictly increase");
        if (!(d >= 0.0)) throw ParseError(source, lineno, "density must be non-negative");
        t.grid.push_back(x);
        t.density.push_back(d);
        --remaining;
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, lineno, e.what());
    } catch (const std::out_of_range& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  if (remaining != 0) throw ParseError(source, lineno, "truncated table");
  return out;
}

void save_likelihoods(const LikelihoodSet& set, const std::filesystem::path& dir, std::string_view preamble) {
  std::filesystem::create_directories(dir);
  for (const auto& channel : set.channels()) {
    for (Workload state : {Workload::Low, Workload::High}) {
      const auto path = dir / (channel + "." + std::string(to_string(state)) + ".tbl");
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write table file '" + path.string() + "'");
      out << preamble;
      write_table(set.table(channel, state), out);
      if (!out) throw Error("I/O failure writing '" + path.string() + "'");
    }
  }
}

LikelihoodSet load_likelihoods(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("table directory '" + dir.string() + "' not found");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".tbl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  LikelihoodSet set;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw Error("cannot open table file '" + f.string() + "'");
    for (auto& t : read_tables(in, f.string())) set.insert(std::move(t));
  }
  if (set.channel_count() == 0) throw Error("no tables found in '" + dir.string() + "'");
  if (!set.complete()) throw InvariantError("table directory '" + dir.string() + "' lacks a Low or High table");
  return set;
}

}  // namespace workload
