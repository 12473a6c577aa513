#include "workload/eval.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <cmath>
#include <numeric>
#include <ostream>

#include "workload/error.hpp"

namespace workload {

void BinaryConfusion::add(Workload truth, Workload pred) {
  if (truth == Workload::High) {
    ++(pred == Workload::High ? tp : fn);
  } else {
    ++(pred == Workload::High ? fp : tn);
  }
}

BinaryMetrics metrics_from_counts(const BinaryConfusion& c) {
  BinaryMetrics m;
  m.counts = c;
  const auto total = c.total();
  m.accuracy = total ? static_cast<double>(c.tp + c.tn) / static_cast<double>(total) : 0.0;
  if (c.tp + c.fp > 0) {
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  } else {
    m.precision_undefined = true;
  }
  if (c.tp + c.fn > 0) {
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  } else {
    m.recall_undefined = true;
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.f1_undefined = true;
  }
  return m;
}

BinaryMetrics binary_metrics(std::span<const Workload> truth, std::span<const Workload> pred) {
  if (truth.size() != pred.size()) throw InvariantError("truth and prediction lengths differ");
  if (truth.empty()) throw InvariantError("metrics of an empty label sequence");
  BinaryConfusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) c.add(truth[i], pred[i]);
  return metrics_from_counts(c);
}

namespace {

struct Ranked {
  std::vector<std::size_t> order;  // by descending score
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

Ranked rank_scores(std::span<const Workload> truth, std::span<const double> scores) {
  if (truth.size() != scores.size()) throw InvariantError("truth and score lengths differ");
  Ranked r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InvariantError("scores must be finite");
    ++(truth[i] == Workload::High ? r.positives : r.negatives);
  }
  if (r.positives == 0 || r.negatives == 0) throw InvariantError("both High and Low must occur in the truth");
  r.order.resize(truth.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return r;
}

}  // namespace

RocCurve roc(std::span<const Workload> truth, std::span<const double> scores) {
  const Ranked r = rank_scores(truth, scores);
  RocCurve c;
  c.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0;
  std::size_t fp = 0;
  const auto p = static_cast<double>(r.positives);
  const auto n = static_cast<double>(r.negatives);
  for (std::size_t i = 0; i < r.order.size();) {
    const double s = scores[r.order[i]];
    while (i < r.order.size() && scores[r.order[i]] == s) {
      ++(truth[r.order[i]] == Workload::High ? tp : fp);
      ++i;
    }
    c.points.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p, s});
  }
  for (std::size_t k = 1; k < c.points.size(); ++k) {
    const auto& a = c.points[k - 1];
    const auto& b = c.points[k];
    c.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return c;
}

F1Threshold best_f1_threshold(std::span<const Workload> truth, std::span<const double> scores) {
  const Ranked r = rank_scores(truth, scores);
  F1Threshold best{0.0, -1.0};
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < r.order.size();) {
    const double s = scores[r.order[i]];
    while (i < r.order.size() && scores[r.order[i]] == s) {
      ++(truth[r.order[i]] == Workload::High ? tp : fp);
      ++i;
    }
    const std::size_t fn = r.positives - tp;
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    const double threshold = i < r.order.size() ? 0.5 * (s + scores[r.order[i]]) : s;
    // Thresholds only decrease along the sweep, so >= keeps the lowest on ties.
    if (f1 >= best.f1) best = {threshold, f1};
  }
  return best;
}

std::size_t ClassConfusion::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return n;
}

std::size_t ClassConfusion::row_total(Awp truth) const {
  const auto& row = counts[static_cast<std::size_t>(truth)];
  return std::accumulate(row.begin(), row.end(), std::size_t{0});
}

double ClassConfusion::accuracy() const {
  const auto n = total();
  if (n == 0) return 0.0;
  std::size_t diag = 0;
  for (std::size_t k = 0; k < kAwpCount; ++k) diag += counts[k][k];
  return static_cast<double>(diag) / static_cast<double>(n);
}

double ClassConfusion::macro_f1() const {
  double sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t k = 0; k < kAwpCount; ++k) {
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t o = 0; o < kAwpCount; ++o) {
      row += counts[k][o];
      col += counts[o][k];
    }
    if (row == 0 && col == 0) continue;
    ++classes;
    const double tp = static_cast<double>(counts[k][k]);
    const double denom = static_cast<double>(row + col);
    sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  return classes ? sum / static_cast<double>(classes) : 0.0;
}

void write_confusion(const ClassConfusion& c, std::ostream& out) {
  out << "confusion (rows=truth, cols=predicted)   L   M   H\n";
  for (Awp t : {Awp::L, Awp::M, Awp::H}) {
    out << "  " << to_string(t) << "                                    ";
    for (Awp p : {Awp::L, Awp::M, Awp::H}) {
      out << ' ' << c.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] << "  ";
    }
    out << '\n';
  }
}

std::string PolicySpec::name() const {
  switch (kind) {
    case Kind::Fixed: return "fixed:" + matrix;
    case Kind::Road: return "road";
    case Kind::Profile: return "profile";
    case Kind::AwpMatched: return "awp";
  }
  return "?";
}

ContextPolicy PolicySpec::resolve(const Journey& j) const {
  switch (kind) {
    case Kind::Fixed: return policy_fixed(builtin_matrix(matrix));
    case Kind::Road: return policy_from_road_types();
    case Kind::Profile: return policy_from_profile_contexts();
    case Kind::AwpMatched:
      if (!j.awp_label) throw InvariantError("journey '" + j.id + "' has no AWP label for the awp policy");
      return policy_from_awp(*j.awp_label);
  }
  throw InvariantError("unknown policy kind");
}

PolicySpec parse_policy_spec(std::string_view text) {
  PolicySpec s;
  if (text == "road") {
    s.kind = PolicySpec::Kind::Road;
  } else if (text == "profile") {
    s.kind = PolicySpec::Kind::Profile;
  } else if (text == "awp") {
    s.kind = PolicySpec::Kind::AwpMatched;
  } else if (text.starts_with("fixed:")) {
    s.matrix = std::string(text.substr(6));
    builtin_matrix(s.matrix);
  } else {
    throw InvariantError("unknown policy '" + std::string(text) + "' (expected fixed:<name>, road, profile, awp)");
  }
  return s;
}

namespace {

struct Instances {
  std::vector<Workload> truth;
  std::vector<double> scores;
};

Instances score_journey(const Journey& j, const std::shared_ptr<const LikelihoodSet>& tables,
                        const ContextPolicy& policy, const LabelWindow& w) {
  const auto labels = label_prompts(j);
  const auto labeled = expand_labels(j, labels.labels, w);
  const auto s0 = init_filter(std::make_shared<const ContextPolicy>(policy), tables);
  const auto post = run_filter(j, s0);

  Instances out;
  out.truth.reserve(labeled.size());
  out.scores.reserve(labeled.size());
  std::size_t k = 0;
  for (const auto& ls : labeled) {
    while (k < post.size() && post[k].t < ls.sample.t) ++k;
    if (k == post.size() || post[k].t != ls.sample.t) throw InvariantError("no posterior at a labeled instant");
    out.truth.push_back(ls.label);
    out.scores.push_back(post[k].pi_high);
  }
  return out;
}

BinaryMetrics at_threshold(std::span<const Workload> truth, std::span<const double> scores, double threshold) {
  BinaryConfusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    c.add(truth[i], scores[i] >= threshold ? Workload::High : Workload::Low);
  }
  return metrics_from_counts(c);
}

}  // namespace

ComparisonReport compare_policies(std::span<const Journey> journeys, const LikelihoodSet& tables,
                                  std::span<const PolicySpec> policies, const LabelWindow& w) {
  if (policies.size() < 2) throw InvariantError("comparison needs at least two policies");
  const auto shared = std::make_shared<const LikelihoodSet>(tables);
  ComparisonReport report;
  for (const auto& spec : policies) {
    std::vector<Instances> per_journey;
    Instances pooled;
    for (const auto& j : journeys) {
      per_journey.push_back(score_journey(j, shared, spec.resolve(j), w));
      const auto& inst = per_journey.back();
      pooled.truth.insert(pooled.truth.end(), inst.truth.begin(), inst.truth.end());
      pooled.scores.insert(pooled.scores.end(), inst.scores.begin(), inst.scores.end());
    }

    PolicyReport pr;
    pr.policy = spec.name();
    pr.roc = roc(pooled.truth, pooled.scores);
    pr.best = best_f1_threshold(pooled.truth, pooled.scores);
    pr.pooled = at_threshold(pooled.truth, pooled.scores, pr.best.threshold);

    pr.map = at_threshold(pooled.truth, pooled.scores, 0.5);

    std::map<Awp, BinaryConfusion> by_awp;
    std::map<Awp, BinaryConfusion> map_by_awp;
    for (std::size_t i = 0; i < journeys.size(); ++i) {
      const auto& inst = per_journey[i];
      JourneyResult jr;
      jr.journey_id = journeys[i].id;
      jr.awp = journeys[i].awp_label;
      jr.instances = inst.truth.size();
      jr.positives = static_cast<std::size_t>(std::count(inst.truth.begin(), inst.truth.end(), Workload::High));
      if (jr.positives > 0 && jr.positives < jr.instances) jr.auc = roc(inst.truth, inst.scores).auc;
      jr.at_pooled_threshold = at_threshold(inst.truth, inst.scores, pr.best.threshold);
      if (jr.awp) {
        auto& c = by_awp[*jr.awp];
        const auto& m = jr.at_pooled_threshold.counts;
        c.tp += m.tp;
        c.fp += m.fp;
        c.tn += m.tn;
        c.fn += m.fn;
        const auto d = at_threshold(inst.truth, inst.scores, 0.5).counts;
        auto& e = map_by_awp[*jr.awp];
        e.tp += d.tp;
        e.fp += d.fp;
        e.tn += d.tn;
        e.fn += d.fn;
      }
      if (jr.instances > 0) {
        pr.journey_average.accuracy += jr.at_pooled_threshold.accuracy;
        pr.journey_average.precision += jr.at_pooled_threshold.precision;
        pr.journey_average.recall += jr.at_pooled_threshold.recall;
        pr.journey_average.f1 += jr.at_pooled_threshold.f1;
      }
      pr.journeys.push_back(std::move(jr));
    }
    const auto counted = static_cast<double>(std::count_if(
        pr.journeys.begin(), pr.journeys.end(), [](const JourneyResult& r) { return r.instances > 0; }));
    if (counted > 0) {
      pr.journey_average.accuracy /= counted;
      pr.journey_average.precision /= counted;
      pr.journey_average.recall /= counted;
      pr.journey_average.f1 /= counted;
    }
    for (const auto& [awp, c] : by_awp) pr.by_awp[awp] = metrics_from_counts(c);
    for (const auto& [awp, c] : map_by_awp) pr.map_by_awp[awp] = metrics_from_counts(c);
    report.policies.push_back(std::move(pr));
  }
  return report;
}

void write_report(const ComparisonReport& r, std::ostream& out) {
  for (const auto& p : r.policies) {
    out << "policy " << p.policy << '\n';
    out << "  pooled auc=" << format_number(p.roc.auc) << " best_threshold=" << format_number(p.best.threshold)
        << " f1=" << format_number(p.pooled.f1) << " accuracy=" << format_number(p.pooled.accuracy)
        << " precision=" << format_number(p.pooled.precision) << " recall=" << format_number(p.pooled.recall)
        << '\n';
    out << "  journey-average accuracy=" << format_number(p.journey_average.accuracy)
        << " precision=" << format_number(p.journey_average.precision)
        << " recall=" << format_number(p.journey_average.recall) << " f1=" << format_number(p.journey_average.f1)
        << '\n';
    for (const auto& [awp, m] : p.by_awp) {
      out << "  awp " << to_string(awp) << " f1=" << format_number(m.f1) << " precision=" << format_number(m.precision)
          << " recall=" << format_number(m.recall) << '\n';
    }
    out << "  map f1=" << format_number(p.map.f1) << " accuracy=" << format_number(p.map.accuracy)
        << " precision=" << format_number(p.map.precision) << " recall=" << format_number(p.map.recall) << '\n';
    for (const auto& [awp, m] : p.map_by_awp) {
      out << "  map awp " << to_string(awp) << " f1=" << format_number(m.f1)
          << " precision=" << format_number(m.precision) << " recall=" << format_number(m.recall) << '\n';
    }
    for (const auto& j : p.journeys) {
      out << "  journey " << j.journey_id << " awp=" << (j.awp ? to_string(*j.awp) : "-") << " n=" << j.instances
          << " high=" << j.positives << " auc=" << (j.auc ? format_number(*j.auc) : "-")
          << " f1=" << format_number(j.at_pooled_threshold.f1)
          << " accuracy=" << format_number(j.at_pooled_threshold.accuracy) << '\n';
    }
  }
  out << "table policy,auc,threshold,f1,accuracy,precision,recall\n";
  for (const auto& p : r.policies) {
    out << "row " << p.policy << ',' << format_number(p.roc.auc) << ',' << format_number(p.best.threshold) << ','
        << format_number(p.pooled.f1) << ',' << format_number(p.pooled.accuracy) << ','
        << format_number(p.pooled.precision) << ',' << format_number(p.pooled.recall) << '\n';
  }
}

}  // namespace workload
