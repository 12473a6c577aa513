#include "workload/filter.hpp"

#include <algorithm>
#include <cmath>

#include "workload/error.hpp"

namespace workload {

TransitionMatrix::TransitionMatrix(std::string name, double rho_ll, double rho_hh)
    : name_(std::move(name)), rho_ll_(rho_ll), rho_hh_(rho_hh) {
  if (!(rho_ll > 0.0 && rho_ll < 1.0) || !(rho_hh > 0.0 && rho_hh < 1.0)) {
    throw InvariantError("transition matrix '" + name_ + "': diagonal entries must lie in (0, 1)");
  }
}

std::array<double, 2> TransitionMatrix::stationary() const {
  const double to_high = rho_lh();
  const double to_low = rho_hl();
  const double pi_low = to_low / (to_low + to_high);
  return {pi_low, to_high / (to_low + to_high)};
}

std::vector<TransitionMatrix> builtin_matrices() {
  return {
      {"Standard", 0.8, 0.92}, {"H", 0.4, 0.98}, {"Ha", 0.7, 0.92}, {"La", 0.75, 0.8}, {"L", 0.9, 0.8},
  };
}

const TransitionMatrix& builtin_matrix(std::string_view name) {
  static const std::vector<TransitionMatrix> all = builtin_matrices();
  for (const auto& m : all) {
    if (m.name() == name) return m;
  }
  throw InvariantError("unknown transition matrix '" + std::string(name) + "'");
}

const TransitionMatrix& ContextPolicy::select(std::optional<std::string_view> tag) const {
  if (tag) {
    if (auto it = by_tag.find(*tag); it != by_tag.end()) return it->second;
  }
  return fallback;
}

ContextPolicy policy_fixed(const TransitionMatrix& m) {
  return ContextPolicy{"fixed:" + m.name(), std::nullopt, m, {}};
}

ContextPolicy policy_from_road_types() {
  ContextPolicy p{"road", ContextKind::Road, builtin_matrix("Standard"), {}};
  p.by_tag.emplace("junction", builtin_matrix("H"));
  p.by_tag.emplace("urban", builtin_matrix("Ha"));
  p.by_tag.emplace("country", builtin_matrix("La"));
  p.by_tag.emplace("motorway", builtin_matrix("L"));
  return p;
}

namespace {

const TransitionMatrix& matrix_for_awp(Awp a) {
  switch (a) {
    case Awp::L: return builtin_matrix("L");
    case Awp::M: return builtin_matrix("Standard");
    case Awp::H: return builtin_matrix("H");
  }
  return builtin_matrix("Standard");
}

}  // namespace

ContextPolicy policy_from_awp(Awp a) {
  return ContextPolicy{"awp:" + std::string(to_string(a)), std::nullopt, matrix_for_awp(a), {}};
}

ContextPolicy policy_from_profile_contexts() {
  ContextPolicy p{"profile", ContextKind::Profile, builtin_matrix("Standard"), {}};
  for (Awp a : {Awp::L, Awp::M, Awp::H}) p.by_tag.emplace(std::string(to_string(a)), matrix_for_awp(a));
  return p;
}

ContextPolicy parse_policy(std::string_view text) {
  if (text == "road") return policy_from_road_types();
  if (text == "profile") return policy_from_profile_contexts();
  if (text.starts_with("fixed:")) return policy_fixed(builtin_matrix(text.substr(6)));
  if (text.starts_with("awp:")) {
    try {
      return policy_from_awp(parse_awp(text.substr(4)));
    } catch (const std::invalid_argument& e) {
      throw InvariantError(e.what());
    }
  }
  throw InvariantError("unknown policy '" + std::string(text) + "' (expected fixed:<name>, road, profile, awp:<L|M|H>)");
}

FilterState init_filter(std::shared_ptr<const ContextPolicy> policy, std::shared_ptr<const LikelihoodSet> tables,
                        std::optional<double> prior_low) {
  if (!policy) throw InvariantError("filter needs a context policy");
  if (!tables) throw InvariantError("filter needs likelihood tables");
  const double p0 = prior_low ? *prior_low : policy->fallback.stationary()[0];
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw InvariantError("prior must lie in [0, 1]");
  FilterState s;
  s.posterior = {0.0, p0, 1.0 - p0};
  s.policy = std::move(policy);
  s.tables = std::move(tables);
  return s;
}

WorkloadPosterior bayes_update(const WorkloadPosterior& prev, const TransitionMatrix& a, double l_low, double l_high,
                               double t) {
  const double pred_low = a.rho_ll() * prev.pi_low + a.rho_hl() * prev.pi_high;
  const double pred_high = a.rho_lh() * prev.pi_low + a.rho_hh() * prev.pi_high;
  const double hat_low = l_low * pred_low;
  const double hat_high = l_high * pred_high;
  const double total = hat_low + hat_high;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw InvariantError("posterior normalizer is not positive at t=" + format_number(t));
  }
  return {t, hat_low / total, hat_high / total};
}

namespace {

void check_time(const FilterState& s, double t) {
  const bool ok = s.steps == 0 ? t >= s.posterior.t : t > s.posterior.t;
  if (!ok || !std::isfinite(t)) {
    throw InvariantError("filter step at t=" + format_number(t) + " does not follow t=" + format_number(s.posterior.t));
  }
}

}  // namespace

FilterState step(const FilterState& s, double t, std::span<const NamedObservation> obs,
                 std::optional<std::string_view> context) {
  check_time(s, t);
  const auto& a = s.policy->select(context);
  const double l_low = eval_likelihood(*s.tables, obs, Workload::Low);
  const double l_high = eval_likelihood(*s.tables, obs, Workload::High);
  FilterState next = s;
  next.posterior = bayes_update(s.posterior, a, l_low, l_high, t);
  ++next.steps;
  return next;
}

std::vector<WorkloadPosterior> run_filter(const Journey& j, const FilterState& s0) {
  const BoundLikelihood lik(*s0.tables, j.schema);
  const ContextPolicy& policy = *s0.policy;

  std::vector<const ContextAnnotation*> contexts;
  if (policy.kind) {
    for (const auto& c : j.contexts) {
      if (c.kind == *policy.kind) contexts.push_back(&c);
    }
    std::sort(contexts.begin(), contexts.end(),
              [](const ContextAnnotation* a, const ContextAnnotation* b) { return a->t_start < b->t_start; });
  }

  std::vector<WorkloadPosterior> out;
  WorkloadPosterior post = s0.posterior;
  std::size_t steps = s0.steps;
  std::size_t ctx = 0;
  std::span<const ChannelSample> samples(j.samples);

  for (std::size_t i = 0; i < samples.size();) {
    const double t = samples[i].t;
    std::size_t k = i + 1;
    while (k < samples.size() && samples[k].t == t) ++k;

    if (steps == 0 ? !(t >= post.t) : !(t > post.t)) {
      throw InvariantError("journey '" + j.id + "': filter step at t=" + format_number(t) + " does not follow t=" +
                           format_number(post.t));
    }
    while (ctx < contexts.size() && contexts[ctx]->t_end <= t) ++ctx;
    std::optional<std::string_view> tag;
    if (ctx < contexts.size() && contexts[ctx]->covers(t)) tag = contexts[ctx]->tag;

    const auto l = lik.eval(samples.subspan(i, k - i));
    post = bayes_update(post, policy.select(tag), l[0], l[1], t);
    ++steps;
    out.push_back(post);
    i = k;
  }
  return out;
}

Workload decide(const WorkloadPosterior& p, double threshold) {
  return p.pi_high >= threshold ? Workload::High : Workload::Low;
}

}  // namespace workload
