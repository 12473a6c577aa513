#ifndef WORKLOAD_STREAM_MODEL_HPP
#define WORKLOAD_STREAM_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace workload {

/// Binary instantaneous workload level.
enum class Workload : std::uint8_t { Low = 0, High = 1 };

/// Average workload profile. L means a low-workload driver (high LWR).
enum class Awp : std::uint8_t { L = 0, M = 1, H = 2 };

inline constexpr std::size_t kAwpCount = 3;

std::string_view to_string(Workload w);
std::string_view to_string(Awp a);
Workload parse_workload(std::string_view text);
Awp parse_awp(std::string_view text);

struct ChannelSchema {
  std::string id;
  std::string unit;
  double min = 0.0;
  double max = 1.0;
  bool derive_rate = false;

  bool contains(double v) const { return v >= min && v <= max; }
  bool operator==(const ChannelSchema&) const = default;
};

using ChannelIndex = std::size_t;

/// One reading of one channel. `channel` indexes the owning journey's schema.
struct ChannelSample {
  ChannelIndex channel = 0;
  double t = 0.0;
  double value = 0.0;

  bool operator==(const ChannelSample&) const = default;
};

struct PromptEvent {
  double t_prompt = 0.0;
  std::optional<double> t_press;

  bool operator==(const PromptEvent&) const = default;
};

enum class ContextKind : std::uint8_t { Road, Profile };

std::string_view to_string(ContextKind k);
ContextKind parse_context_kind(std::string_view text);

/// Road tags are junction/urban/country/motorway; profile tags are L/M/H.
struct ContextAnnotation {
  ContextKind kind = ContextKind::Road;
  double t_start = 0.0;
  double t_end = 0.0;
  std::string tag;

  bool covers(double t) const { return t >= t_start && t < t_end; }
  bool operator==(const ContextAnnotation&) const = default;
};

bool is_valid_context_tag(ContextKind kind, std::string_view tag);

struct Journey {
  std::string id;
  std::vector<ChannelSchema> schema;
  std::vector<ChannelSample> samples;  // globally time-ordered
  std::vector<PromptEvent> prompts;
  std::vector<ContextAnnotation> contexts;
  std::optional<Awp> awp_label;

  std::optional<ChannelIndex> find_channel(std::string_view id) const;
  /// Throws InvariantError when the channel is not in the schema.
  ChannelIndex channel_index(std::string_view id) const;

  bool operator==(const Journey&) const = default;
};

/// Checks every journey invariant; throws InvariantError naming the rule.
void validate(const Journey& j);

Journey read_journey(const std::filesystem::path& path);
Journey parse_journey(std::istream& in, const std::string& source = "<stream>");

void write_journey(const Journey& j, std::ostream& out);
/// `preamble` lines are written verbatim before the header (each must start
/// with '#').
void write_journey(const Journey& j, const std::filesystem::path& path,
                   std::string_view preamble = {});

/// Appends a backward-difference rate companion for every channel flagged
/// `derive_rate` that does not already have one.
Journey derive_rate_channels(const Journey& j);

std::string rate_channel_name(std::string_view base);

/// The seven CAN-bus channels used for estimation. Rates are derived for all
/// but the two steering-wheel signals.
std::vector<ChannelSchema> can_bus_schema();

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);
/// Throws std::invalid_argument on malformed input.
double parse_number(std::string_view text);

}  // namespace workload

#endif  // WORKLOAD_STREAM_MODEL_HPP
