#include "workload/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "workload/error.hpp"
#include "workload/simulator.hpp"

namespace workload {

namespace {

double quantile_inplace(std::vector<double>& v, double q) {
  // Linear interpolation between order statistics.
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (frac == 0.0 || lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + frac * (b - a);
}

}  // namespace

double interpolate_at(std::span<const double> times, std::span<const double> values, double t) {
  if (times.empty()) throw InvariantError("cannot interpolate a channel without samples");
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  const auto lo = hi - 1;
  const double frac = (t - times[lo]) / (times[hi] - times[lo]);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Resampled resample(const Journey& j, double hz) {
  if (!(hz > 0.0)) throw InvariantError("resampling rate must be positive");
  const Journey full = derive_rate_channels(j);
  const std::size_t q = full.schema.size();
  std::vector<std::vector<double>> times(q);
  std::vector<std::vector<double>> values(q);
  double t_last = 0.0;
  for (const auto& s : full.samples) {
    times[s.channel].push_back(s.t);
    values[s.channel].push_back(s.value);
    t_last = std::max(t_last, s.t);
  }

  Resampled out;
  out.hz = hz;
  const auto n = full.samples.empty() ? std::size_t{0} : static_cast<std::size_t>(std::floor(t_last * hz)) + 1;
  for (std::size_t c = 0; c < q; ++c) {
    out.channels.push_back(full.schema[c].id);
    std::vector<double> row(n, 0.0);
    if (!times[c].empty()) {
      // Walk the samples once; the grid is increasing.
      std::size_t hi = 0;
      const auto& ts = times[c];
      const auto& vs = values[c];
      for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / hz;
        while (hi < ts.size() && ts[hi] <= t) ++hi;
        if (hi == 0) {
          row[k] = vs.front();
        } else if (hi == ts.size()) {
          row[k] = vs.back();
        } else {
          const std::size_t lo = hi - 1;
          row[k] = vs[lo] + (t - ts[lo]) / (ts[hi] - ts[lo]) * (vs[hi] - vs[lo]);
        }
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<Window> slice_windows(const Journey& j, std::size_t length) {
  if (length < kKernelTaps) throw InvariantError("window length must be at least 9 samples");
  const Resampled r = resample(j);
  const std::size_t q = r.rows.size();
  const std::size_t count = r.length() / length;
  std::vector<Window> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    Window win(q, length);
    win.t_start = static_cast<double>(w * length) / r.hz;
    win.journey_id = j.id;
    for (std::size_t c = 0; c < q; ++c) {
      std::copy_n(r.rows[c].begin() + static_cast<std::ptrdiff_t>(w * length), length, win.row(c).begin());
    }
    out.push_back(std::move(win));
  }
  return out;
}

void RobustScaleParams::apply(Window& w) const {
  if (w.channels != median.size()) throw InvariantError("scaler channel count does not match the window");
  for (std::size_t c = 0; c < w.channels; ++c) {
    for (double& v : w.row(c)) v = (v - median[c]) / iqr[c];
  }
}

RobustScaleParams fit_robust_scale(std::span<const Window> training) {
  if (training.empty()) throw InvariantError("robust scaler needs training windows");
  const std::size_t q = training.front().channels;
  RobustScaleParams p;
  std::vector<double> buf;
  for (std::size_t c = 0; c < q; ++c) {
    buf.clear();
    for (const auto& w : training) {
      if (w.channels != q) throw InvariantError("training windows disagree on channel count");
      const auto row = w.row(c);
      buf.insert(buf.end(), row.begin(), row.end());
    }
    const double med = quantile_inplace(buf, 0.5);
    const double iqr = quantile_inplace(buf, 0.75) - quantile_inplace(buf, 0.25);
    p.median.push_back(med);
    p.constant.push_back(!(iqr > 0.0));
    p.iqr.push_back(iqr > 0.0 ? iqr : 1.0);
  }
  return p;
}

std::vector<Window> preprocess(const Journey& j, std::size_t length, const RobustScaleParams& scale) {
  auto windows = slice_windows(j, length);
  for (auto& w : windows) scale.apply(w);
  return windows;
}

std::size_t KernelBank::feature_count() const {
  std::size_t n = 0;
  for (const auto& c : combinations) n += c.quantiles.size();
  return n;
}

std::array<double, kKernelTaps> kernel_weights(const std::array<std::size_t, 3>& twos) {
  std::array<double, kKernelTaps> w;
  w.fill(-1.0);
  for (auto i : twos) w[i] = 2.0;
  return w;
}

KernelBank build_kernel_bank(std::uint64_t seed, std::size_t channels, std::size_t length, std::size_t feature_count) {
  if (channels < 1) throw InvariantError("kernel bank needs at least one channel");
  if (length < kKernelTaps) throw InvariantError("window length must be at least 9 samples");
  if (feature_count < 1) throw InvariantError("kernel bank needs at least one feature");

  KernelBank bank;
  bank.seed = seed;
  bank.channels = channels;
  bank.length = length;
  for (std::size_t a = 0; a < kKernelTaps; ++a) {
    for (std::size_t b = a + 1; b < kKernelTaps; ++b) {
      for (std::size_t c = b + 1; c < kKernelTaps; ++c) bank.kernels.push_back({a, b, c});
    }
  }

  // Dilations are powers of two with the dilated kernel inside the window.
  std::vector<std::size_t> dilations;
  for (std::size_t d = 1; (kKernelTaps - 1) * d < length; d *= 2) dilations.push_back(d);

  const std::size_t combos = bank.kernels.size() * dilations.size();
  const std::size_t per = feature_count / combos;
  const std::size_t extra = feature_count % combos;

  std::mt19937_64 rng(seed);
  const double max_exponent = std::log2(static_cast<double>(std::min<std::size_t>(channels, kKernelTaps)) + 1.0);
  constexpr double kGolden = 1.6180339887498949;
  std::size_t feature = 0;
  std::size_t index = 0;
  for (std::size_t d : dilations) {
    for (std::size_t k = 0; k < bank.kernels.size(); ++k, ++index) {
      const std::size_t n_bias = per + (index < extra ? 1 : 0);
      if (n_bias == 0) continue;
      KernelBank::Combination combo;
      combo.kernel = k;
      combo.dilation = d;
      const double e = std::uniform_real_distribution<double>(0.0, max_exponent)(rng);
      const auto n_ch = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(std::pow(2.0, e))), 1,
                                                std::min<std::size_t>(channels, kKernelTaps));
      std::vector<std::size_t> all(channels);
      std::iota(all.begin(), all.end(), std::size_t{0});
      std::shuffle(all.begin(), all.end(), rng);
      combo.channels.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_ch));
      std::sort(combo.channels.begin(), combo.channels.end());
      for (std::size_t b = 0; b < n_bias; ++b, ++feature) {
        const double level = static_cast<double>(feature + 1) * kGolden;
        combo.quantiles.push_back(level - std::floor(level));
      }
      combo.biases.assign(n_bias, 0.0);
      bank.combinations.push_back(std::move(combo));
    }
  }
  return bank;
}

std::vector<double> convolve(const Window& w, const KernelBank& bank, const KernelBank::Combination& combo) {
  const std::size_t d = combo.dilation;
  const std::size_t span = (kKernelTaps - 1) * d;
  if (w.length <= span) throw InvariantError("window shorter than the dilated kernel");
  std::vector<double> sum(w.length, 0.0);
  for (std::size_t c : combo.channels) {
    const auto row = w.row(c);
    for (std::size_t i = 0; i < w.length; ++i) sum[i] += row[i];
  }
  const auto& twos = bank.kernels[combo.kernel];
  const std::size_t n = w.length - span;
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    double all = 0.0;
    for (std::size_t j = 0; j < kKernelTaps; ++j) all += sum[t + j * d];
    const double peaks = sum[t + twos[0] * d] + sum[t + twos[1] * d] + sum[t + twos[2] * d];
    out[t] = 3.0 * peaks - all;
  }
  return out;
}

void fit_biases(KernelBank& bank, std::span<const Window> training) {
  if (training.empty()) throw InvariantError("bias fitting needs training windows");
  std::mt19937_64 rng(derive_seed(bank.seed, 1));
  std::uniform_int_distribution<std::size_t> pick(0, training.size() - 1);
  for (auto& combo : bank.combinations) {
    const Window& w = training[pick(rng)];
    if (w.channels != bank.channels || w.length != bank.length) {
      throw InvariantError("training window shape does not match the kernel bank");
    }
    auto out = convolve(w, bank, combo);
    std::sort(out.begin(), out.end());
    for (std::size_t b = 0; b < combo.quantiles.size(); ++b) {
      const double pos = combo.quantiles[b] * static_cast<double>(out.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, out.size() - 1);
      combo.biases[b] = out[lo] + (pos - static_cast<double>(lo)) * (out[hi] - out[lo]);
    }
  }
  bank.fitted = true;
}

std::vector<double> transform(const Window& w, const KernelBank& bank) {
  if (w.channels != bank.channels || w.length != bank.length) {
    throw InvariantError("window shape does not match the kernel bank");
  }
  std::vector<double> features;
  features.reserve(bank.feature_count());
  for (const auto& combo : bank.combinations) {
    const auto out = convolve(w, bank, combo);
    const auto n = static_cast<double>(out.size());
    for (double bias : combo.biases) {
      std::size_t positive = 0;
      for (double v : out) positive += v > bias ? 1 : 0;
      features.push_back(static_cast<double>(positive) / n);
    }
  }
  return features;
}

ScoreVector sequence_filter(std::span<const ScoreVector> scores) {
  if (scores.empty()) throw InvariantError("sequence filter needs at least one score vector");
  ScoreVector mean{};
  for (const auto& s : scores) {
    for (std::size_t k = 0; k < kAwpCount; ++k) mean[k] += s[k];
  }
  const double total = mean[0] + mean[1] + mean[2];
  if (!(total > 0.0)) throw InvariantError("score vectors must have positive mass");
  for (double& v : mean) v /= total;
  return mean;
}

Awp decide_awp(const ScoreVector& s) {
  // Scan from H down so the higher workload wins ties.
  Awp best = Awp::H;
  for (Awp a : {Awp::M, Awp::L}) {
    if (s[static_cast<std::size_t>(a)] > s[static_cast<std::size_t>(best)]) best = a;
  }
  return best;
}

ProfileReport profile_population(std::span<const Journey> journeys, const ProfileOptions& opt) {
  if (!(opt.train_fraction > 0.0 && opt.train_fraction < 1.0)) throw InvariantError("train fraction must lie in (0, 1)");
  std::vector<std::vector<Window>> windows;
  std::vector<Awp> labels;
  for (const auto& j : journeys) {
    if (!j.awp_label) throw InvariantError("journey '" + j.id + "' has no AWP label");
    labels.push_back(*j.awp_label);
    windows.push_back(slice_windows(j, opt.length));
  }

  // (journey, window) pairs.
  using Ref = std::pair<std::size_t, std::size_t>;
  std::vector<Ref> train;
  std::vector<Ref> test;
  std::mt19937_64 rng(derive_seed(opt.seed, 2));
  if (opt.split == SplitMode::Window) {
    std::vector<Ref> all;
    for (std::size_t j = 0; j < windows.size(); ++j) {
      for (std::size_t w = 0; w < windows[j].size(); ++w) all.emplace_back(j, w);
    }
    std::shuffle(all.begin(), all.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(opt.train_fraction * static_cast<double>(all.size())));
    train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  } else {
    // Stratified by profile so every class appears in training.
    for (Awp a : {Awp::L, Awp::M, Awp::H}) {
      std::vector<std::size_t> members;
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] == a) members.push_back(j);
      }
      std::shuffle(members.begin(), members.end(), rng);
      auto n_train = static_cast<std::size_t>(std::llround(opt.train_fraction * static_cast<double>(members.size())));
      if (members.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
      for (std::size_t i = 0; i < members.size(); ++i) {
        auto& dst = i < n_train ? train : test;
        for (std::size_t w = 0; w < windows[members[i]].size(); ++w) dst.emplace_back(members[i], w);
      }
    }
  }
  if (train.empty() || test.empty()) throw InvariantError("split leaves an empty training or test set");

  std::vector<Window> train_windows;
  train_windows.reserve(train.size());
  for (const auto& [j, w] : train) train_windows.push_back(windows[j][w]);
  const RobustScaleParams scale = fit_robust_scale(train_windows);
  for (auto& w : train_windows) scale.apply(w);
  for (auto& per_journey : windows) {
    for (auto& w : per_journey) scale.apply(w);
  }

  KernelBank bank = build_kernel_bank(opt.seed, train_windows.front().channels, opt.length, opt.feature_count);
  fit_biases(bank, train_windows);
  train_windows.clear();

  std::vector<std::vector<double>> train_x;
  std::vector<Awp> train_y;
  train_x.reserve(train.size());
  for (const auto& [j, w] : train) {
    train_x.push_back(transform(windows[j][w], bank));
    train_y.push_back(labels[j]);
  }
  RidgeClassifier clf;
  clf.fit(train_x, train_y);
  train_x.clear();

  ProfileReport report;
  report.train_windows = train.size();
  report.test_windows = test.size();
  report.alpha = clf.alpha();

  std::sort(test.begin(), test.end());
  std::vector<std::optional<JourneyProfile>> per(journeys.size());
  for (const auto& [j, w] : test) {
    const ScoreVector s = clf.scores(transform(windows[j][w], bank));
    report.window_confusion.add(labels[j], decide_awp(s));
    if (!per[j]) per[j] = JourneyProfile{journeys[j].id, labels[j], {}, {}, Awp::M};
    per[j]->window_scores.push_back(s);
  }
  for (auto& p : per) {
    if (!p) continue;
    p->fused = sequence_filter(p->window_scores);
    p->decision = decide_awp(p->fused);
    report.journey_confusion.add(p->truth, p->decision);
    report.journeys.push_back(std::move(*p));
  }
  return report;
}

void write_profile_report(const ProfileReport& r, std::ostream& out) {
  auto vec = [](const ScoreVector& s) {
    return format_number(s[0]) + " " + format_number(s[1]) + " " + format_number(s[2]);
  };
  out << "train_windows " << r.train_windows << "\n";
  out << "test_windows " << r.test_windows << "\n";
  out << "ridge_alpha " << format_number(r.alpha) << "\n";
  out << "window_accuracy " << format_number(r.window_accuracy()) << "\n";
  out << "window_macro_f1 " << format_number(r.window_confusion.macro_f1()) << "\n";
  out << "journey_accuracy " << format_number(r.journey_accuracy()) << "\n";
  out << "journey_macro_f1 " << format_number(r.journey_confusion.macro_f1()) << "\n";
  for (const auto& j : r.journeys) {
    out << "journey " << j.journey_id << " truth " << to_string(j.truth) << " decision " << to_string(j.decision)
        << " fused " << vec(j.fused) << " windows " << j.window_scores.size() << "\n";
    for (const auto& s : j.window_scores) out << "  window " << vec(s) << " -> " << to_string(decide_awp(s)) << "\n";
  }
  out << "window ";
  write_confusion(r.window_confusion, out);
  out << "journey ";
  write_confusion(r.journey_confusion, out);
}

}  // namespace workload
