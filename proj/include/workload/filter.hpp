#ifndef WORKLOAD_FILTER_HPP
#define WORKLOAD_FILTER_HPP

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "workload/likelihood.hpp"
#include "workload/stream_model.hpp"

namespace workload {

/// Two-state Markov chain over {Low, High}. Only the diagonal is stored; the
/// off-diagonal entries are its complements, so rows always sum to one.
class TransitionMatrix {
 public:
  /// Throws InvariantError unless both diagonals lie in (0, 1).
  TransitionMatrix(std::string name, double rho_ll, double rho_hh);

  const std::string& name() const { return name_; }
  double rho_ll() const { return rho_ll_; }
  double rho_hh() const { return rho_hh_; }
  double rho_lh() const { return 1.0 - rho_ll_; }  // Low -> High
  double rho_hl() const { return 1.0 - rho_hh_; }  // High -> Low

  /// (pi_L, pi_H) with pi = pi * A.
  std::array<double, 2> stationary() const;

  bool operator==(const TransitionMatrix&) const = default;

 private:
  std::string name_;
  double rho_ll_;
  double rho_hh_;
};

/// Standard, H, Ha, La and L.
std::vector<TransitionMatrix> builtin_matrices();
const TransitionMatrix& builtin_matrix(std::string_view name);

/// Picks the transition matrix for each step from the active context tag.
struct ContextPolicy {
  std::string name;
  // Annotation kind the policy reacts to; none means the fallback is always used.
  std::optional<ContextKind> kind;
  TransitionMatrix fallback = builtin_matrix("Standard");
  std::map<std::string, TransitionMatrix, std::less<>> by_tag;

  const TransitionMatrix& select(std::optional<std::string_view> tag) const;
};

ContextPolicy policy_fixed(const TransitionMatrix& m);
/// junction -> H, urban -> Ha, country -> La, motorway -> L.
ContextPolicy policy_from_road_types();
/// L -> L, M -> Standard, H -> H as a constant matrix.
ContextPolicy policy_from_awp(Awp a);
/// Same mapping driven by `profile` annotations inside the journey.
ContextPolicy policy_from_profile_contexts();
/// "fixed:<matrix>", "road", "profile" or "awp:<L|M|H>".
ContextPolicy parse_policy(std::string_view text);

struct WorkloadPosterior {
  double t = 0.0;
  double pi_low = 0.5;
  double pi_high = 0.5;
};

struct FilterState {
  WorkloadPosterior posterior;
  std::shared_ptr<const ContextPolicy> policy;
  std::shared_ptr<const LikelihoodSet> tables;
  std::size_t steps = 0;
};

/// Prior defaults to the stationary distribution of the policy fallback.
FilterState init_filter(std::shared_ptr<const ContextPolicy> policy, std::shared_ptr<const LikelihoodSet> tables,
                        std::optional<double> prior_low = std::nullopt);

/// One predict/update/normalize cycle given the two observation likelihoods.
WorkloadPosterior bayes_update(const WorkloadPosterior& prev, const TransitionMatrix& a, double l_low, double l_high,
                               double t);

/// Requires t > posterior.t, except that the very first step may land on the
/// initial time.
FilterState step(const FilterState& s, double t, std::span<const NamedObservation> obs,
                 std::optional<std::string_view> context = std::nullopt);

/// One posterior per distinct sample instant of the journey, in time order.
std::vector<WorkloadPosterior> run_filter(const Journey& j, const FilterState& s0);

/// High iff pi_high >= threshold.
Workload decide(const WorkloadPosterior& p, double threshold);

}  // namespace workload

#endif  // WORKLOAD_FILTER_HPP
