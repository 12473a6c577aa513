#ifndef WORKLOAD_LABELING_HPP
#define WORKLOAD_LABELING_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "workload/stream_model.hpp"

namespace workload {

struct LabeledInstant {
  double t = 0.0;  // prompt time
  Workload label = Workload::High;

  bool operator==(const LabeledInstant&) const = default;
};

struct PromptLabels {
  std::vector<LabeledInstant> labels;
  // Presses that do not fall in [t_prompt, next t_prompt). They never become
  // labels.
  std::size_t ignored_presses = 0;
};

/// A prompt answered by a press before the next prompt is Low, otherwise High.
PromptLabels label_prompts(const Journey& j);

/// Low workload ratio #Low / (#Low + #High). Throws on empty input.
double lwr(std::span<const LabeledInstant> labels);

/// H if lwr <= 0.55, M if lwr <= 0.85, L otherwise.
Awp awp_from_lwr(double lwr);

/// Samples in [t_prompt - pre_s, t_prompt + post_s] inherit the prompt label.
/// Windows of adjacent prompts are cut at their midpoint; a sample exactly on
/// a midpoint belongs to the later prompt.
struct LabelWindow {
  double pre_s = 2.0;
  double post_s = 3.0;

  void validate() const;
};

struct LabeledSample {
  ChannelSample sample;
  Workload label = Workload::High;
};

std::vector<LabeledSample> expand_labels(const Journey& j, std::span<const LabeledInstant> labels,
                                         const LabelWindow& w);

}  // namespace workload

#endif  // WORKLOAD_LABELING_HPP
