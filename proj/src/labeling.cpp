#include "workload/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "workload/error.hpp"

namespace workload {

PromptLabels label_prompts(const Journey& j) {
  PromptLabels out;
  out.labels.reserve(j.prompts.size());
  for (std::size_t i = 0; i < j.prompts.size(); ++i) {
    const auto& p = j.prompts[i];
    const double next = i + 1 < j.prompts.size() ? j.prompts[i + 1].t_prompt
                                                   : std::numeric_limits<double>::infinity();
    bool pressed = false;
    if (p.t_press) {
      if (*p.t_press >= p.t_prompt && *p.t_press < next) {
        pressed = true;
      } else {
        ++out.ignored_presses;
      }
    }
    out.labels.push_back({p.t_prompt, pressed ? Workload::Low : Workload::High});
  }
  return out;
}

double lwr(std::span<const LabeledInstant> labels) {
  if (labels.empty()) throw InvariantError("LWR of an empty label sequence is undefined");
  const auto low = std::count_if(labels.begin(), labels.end(),
                                 [](const LabeledInstant& l) { return l.label == Workload::Low; });
  return static_cast<double>(low) / static_cast<double>(labels.size());
}

Awp awp_from_lwr(double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw InvariantError("LWR must lie in [0, 1], got " + format_number(value));
  }
  if (value <= 0.55) return Awp::H;
  if (value <= 0.85) return Awp::M;
  return Awp::L;
}

void LabelWindow::validate() const {
  if (!(pre_s >= 0.0) || !(post_s >= 0.0) || !(pre_s + post_s > 0.0) || !std::isfinite(pre_s + post_s)) {
    throw InvariantError("label window needs finite pre_s, post_s >= 0 with pre_s + post_s > 0");
  }
}

std::vector<LabeledSample> expand_labels(const Journey& j, std::span<const LabeledInstant> labels,
                                         const LabelWindow& w) {
  w.validate();
  std::vector<LabeledSample> out;
  if (labels.empty()) return out;

  // Each prompt owns the territory [mid(prev, this), mid(this, next)).
  std::vector<double> boundaries;
  boundaries.reserve(labels.size() - 1);
  for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
    boundaries.push_back(0.5 * (labels[i].t + labels[i + 1].t));
  }

  for (const auto& s : j.samples) {
    const auto owner = static_cast<std::size_t>(
        std::upper_bound(boundaries.begin(), boundaries.end(), s.t) - boundaries.begin());
    const auto& l = labels[owner];
    if (s.t >= l.t - w.pre_s && s.t <= l.t + w.post_s) out.push_back({s, l.label});
  }
  return out;
}

}  // namespace workload
