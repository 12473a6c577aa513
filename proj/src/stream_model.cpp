#include "workload/stream_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "workload/error.hpp"

namespace workload {

namespace {

// Timestamps carry at least millisecond resolution, so a rate can never exceed
// the channel span divided by one millisecond.
constexpr double kMinTimeResolution = 1e-3;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string_view to_string(Workload w) { return w == Workload::Low ? "Low" : "High"; }

std::string_view to_string(Awp a) {
  switch (a) {
    case Awp::L: return "L";
    case Awp::M: return "M";
    case Awp::H: return "H";
  }
  return "?";
}

Workload parse_workload(std::string_view text) {
  if (text == "Low" || text == "L" || text == "0") return Workload::Low;
  if (text == "High" || text == "H" || text == "1") return Workload::High;
  throw std::invalid_argument("unknown workload level '" + std::string(text) + "'");
}

Awp parse_awp(std::string_view text) {
  if (text == "L") return Awp::L;
  if (text == "M") return Awp::M;
  if (text == "H") return Awp::H;
  throw std::invalid_argument("unknown workload profile '" + std::string(text) + "'");
}

std::string_view to_string(ContextKind k) { return k == ContextKind::Road ? "road" : "profile"; }

ContextKind parse_context_kind(std::string_view text) {
  if (text == "road") return ContextKind::Road;
  if (text == "profile") return ContextKind::Profile;
  throw std::invalid_argument("unknown context kind '" + std::string(text) + "'");
}

bool is_valid_context_tag(ContextKind kind, std::string_view tag) {
  if (kind == ContextKind::Road) {
    return tag == "junction" || tag == "urban" || tag == "country" || tag == "motorway";
  }
  return tag == "L" || tag == "M" || tag == "H";
}

std::optional<ChannelIndex> Journey::find_channel(std::string_view channel_id) const {
  for (ChannelIndex i = 0; i < schema.size(); ++i) {
    if (schema[i].id == channel_id) return i;
  }
  return std::nullopt;
}

ChannelIndex Journey::channel_index(std::string_view channel_id) const {
  if (auto i = find_channel(channel_id)) return *i;
  throw InvariantError("journey '" + id + "': unknown channel '" + std::string(channel_id) + "'");
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw std::invalid_argument("malformed number '" + std::string(text) + "'");
  }
  return v;
}

void validate(const Journey& j) {
  auto fail = [&](const std::string& rule) {
    throw InvariantError("journey '" + j.id + "': " + rule);
  };

  for (std::size_t i = 0; i < j.schema.size(); ++i) {
    const auto& c = j.schema[i];
    if (c.id.empty()) fail("channel id must be non-empty");
    if (!(c.min < c.max)) fail("channel '" + c.id + "' requires min < max");
    for (std::size_t k = 0; k < i; ++k) {
      if (j.schema[k].id == c.id) fail("duplicate channel id '" + c.id + "'");
    }
  }

  std::vector<double> last_t(j.schema.size(), -1.0);
  double prev_t = 0.0;
  for (std::size_t i = 0; i < j.samples.size(); ++i) {
    const auto& s = j.samples[i];
    if (s.channel >= j.schema.size()) fail("sample " + std::to_string(i) + " references unknown channel");
    const auto& c = j.schema[s.channel];
    if (!std::isfinite(s.t) || s.t < 0.0) fail("sample time must be finite and >= 0 (channel '" + c.id + "')");
    if (!std::isfinite(s.value)) fail("sample value must be finite (channel '" + c.id + "')");
    if (!c.contains(s.value)) {
      fail("value " + format_number(s.value) + " of channel '" + c.id + "' at t=" + format_number(s.t) +
           " outside range [" + format_number(c.min) + ", " + format_number(c.max) + "]");
    }
    if (i > 0 && s.t < prev_t) fail("samples must be time-ordered (t=" + format_number(s.t) + ")");
    if (s.t <= last_t[s.channel]) {
      fail("timestamps of channel '" + c.id + "' must strictly increase (t=" + format_number(s.t) + ")");
    }
    last_t[s.channel] = s.t;
    prev_t = s.t;
  }

  for (std::size_t i = 0; i < j.prompts.size(); ++i) {
    const auto& p = j.prompts[i];
    if (!std::isfinite(p.t_prompt) || p.t_prompt < 0.0) fail("prompt time must be finite and >= 0");
    if (i > 0 && !(p.t_prompt > j.prompts[i - 1].t_prompt)) fail("prompts must be ordered by prompt time");
    if (p.t_press) {
      if (!(*p.t_press >= p.t_prompt)) fail("press at " + format_number(*p.t_press) + " precedes its prompt");
      if (i + 1 < j.prompts.size() && !(*p.t_press < j.prompts[i + 1].t_prompt)) {
        fail("press at " + format_number(*p.t_press) + " is not before the next prompt");
      }
    }
  }

  for (std::size_t i = 0; i < j.contexts.size(); ++i) {
    const auto& c = j.contexts[i];
    if (!(c.t_start < c.t_end)) fail("context requires t_start < t_end");
    if (!is_valid_context_tag(c.kind, c.tag)) {
      fail("invalid " + std::string(to_string(c.kind)) + " context tag '" + c.tag + "'");
    }
    for (std::size_t k = 0; k < i; ++k) {
      const auto& o = j.contexts[k];
      if (o.kind == c.kind && c.t_start < o.t_end && o.t_start < c.t_end) {
        fail("overlapping " + std::string(to_string(c.kind)) + " contexts");
      }
    }
  }
}

Journey parse_journey(std::istream& in, const std::string& source) {
  Journey j;
  bool have_id = false;
  std::unordered_map<std::string, ChannelIndex> index;
  std::string line;
  std::size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    auto f = split_fields(line);
    if (f.empty() || f[0].front() == '#') continue;
    auto err = [&](const std::string& what) { return ParseError(source, lineno, what); };
    auto num = [&](std::string_view text) {
      try {
        return parse_number(text);
      } catch (const std::invalid_argument& e) {
        throw err(e.what());
      }
    };

    const std::string_view tag = f[0];
    if (tag == "H") {
      if (f.size() != 6) throw err("header expects: H <channel> <unit> <min> <max> <derive_rate 0|1>");
      if (f[5] != "0" && f[5] != "1") throw err("derive_rate must be 0 or 1");
      ChannelSchema c{std::string(f[1]), std::string(f[2]), num(f[3]), num(f[4]), f[5] == "1"};
      if (index.count(c.id)) throw err("duplicate channel '" + c.id + "'");
      index.emplace(c.id, j.schema.size());
      j.schema.push_back(std::move(c));
    } else if (tag == "J") {
      if (have_id) throw err("duplicate journey record");
      if (f.size() != 2 && f.size() != 4) throw err("journey record expects: J <id> [awp L|M|H]");
      j.id = std::string(f[1]);
      if (f.size() == 4) {
        if (f[2] != "awp") throw err("expected 'awp' keyword");
        try {
          j.awp_label = parse_awp(f[3]);
        } catch (const std::invalid_argument& e) {
          throw err(e.what());
        }
      }
      have_id = true;
    } else if (tag == "S") {
      if (f.size() != 4) throw err("sample expects: S <channel> <t> <value>");
      auto it = index.find(std::string(f[1]));
      if (it == index.end()) throw err("sample for undeclared channel '" + std::string(f[1]) + "'");
      j.samples.push_back({it->second, num(f[2]), num(f[3])});
    } else if (tag == "P") {
      if (f.size() != 2 && f.size() != 3) throw err("prompt expects: P <t_prompt> [t_press]");
      PromptEvent p{num(f[1]), std::nullopt};
      if (f.size() == 3) p.t_press = num(f[2]);
      j.prompts.push_back(p);
    } else if (tag == "C") {
      if (f.size() != 5) throw err("context expects: C <kind> <t_start> <t_end> <tag>");
      ContextAnnotation c;
      try {
        c.kind = parse_context_kind(f[1]);
      } catch (const std::invalid_argument& e) {
        throw err(e.what());
      }
      c.t_start = num(f[2]);
      c.t_end = num(f[3]);
      c.tag = std::string(f[4]);
      j.contexts.push_back(std::move(c));
    } else {
      throw err("unknown record tag '" + std::string(tag) + "'");
    }
  }
  if (!have_id) throw ParseError(source, lineno, "missing journey record 'J <id>'");
  validate(j);
  return j;
}

Journey read_journey(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open journey file '" + path.string() + "'");
  return parse_journey(in, path.string());
}

void write_journey(const Journey& j, std::ostream& out) {
  for (const auto& c : j.schema) {
    out << "H " << c.id << ' ' << c.unit << ' ' << format_number(c.min) << ' ' << format_number(c.max) << ' '
        << (c.derive_rate ? 1 : 0) << '\n';
  }
  out << "J " << j.id;
  if (j.awp_label) out << " awp " << to_string(*j.awp_label);
  out << '\n';
  for (const auto& c : j.contexts) {
    out << "C " << to_string(c.kind) << ' ' << format_number(c.t_start) << ' ' << format_number(c.t_end) << ' '
        << c.tag << '\n';
  }
  for (const auto& p : j.prompts) {
    out << "P " << format_number(p.t_prompt);
    if (p.t_press) out << ' ' << format_number(*p.t_press);
    out << '\n';
  }
  for (const auto& s : j.samples) {
    out << "S " << j.schema.at(s.channel).id << ' ' << format_number(s.t) << ' ' << format_number(s.value) << '\n';
  }
}

void write_journey(const Journey& j, const std::filesystem::path& path, std::string_view preamble) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write journey file '" + path.string() + "'");
  out << preamble;
  write_journey(j, out);
  out.flush();
  if (!out) throw Error("I/O failure writing '" + path.string() + "'");
}

std::string rate_channel_name(std::string_view base) { return std::string(base) + "_rate"; }

Journey derive_rate_channels(const Journey& j) {
  Journey out = j;
  std::vector<std::optional<ChannelIndex>> companion(j.schema.size());
  for (ChannelIndex c = 0; c < j.schema.size(); ++c) {
    const auto& base = j.schema[c];
    if (!base.derive_rate) continue;
    const std::string name = rate_channel_name(base.id);
    if (j.find_channel(name)) continue;
    const double span = (base.max - base.min) / kMinTimeResolution;
    companion[c] = out.schema.size();
    out.schema.push_back({name, base.unit + "/s", -span, span, false});
  }
  if (out.schema.size() == j.schema.size()) return out;

  out.samples.clear();
  out.samples.reserve(j.samples.size() * 2);
  std::vector<std::optional<ChannelSample>> prev(j.schema.size());
  for (const auto& s : j.samples) {
    out.samples.push_back(s);
    if (!companion[s.channel]) continue;
    if (auto& p = prev[s.channel]) {
      const double dt = s.t - p->t;
      if (!(dt > 0.0)) {
        throw InvariantError("journey '" + j.id + "': duplicate timestamp " + format_number(s.t) + " in channel '" +
                             j.schema[s.channel].id + "'");
      }
      const double rate = (s.value - p->value) / dt;
      const auto& rc = out.schema[*companion[s.channel]];
      if (!rc.contains(rate)) {
        throw InvariantError("journey '" + j.id + "': rate of channel '" + j.schema[s.channel].id + "' at t=" +
                             format_number(s.t) + " exceeds the millisecond-resolution bound");
      }
      out.samples.push_back({*companion[s.channel], s.t, rate});
    }
    prev[s.channel] = s;
  }
  return out;
}

std::vector<ChannelSchema> can_bus_schema() {
  return {
      {"VehicleSpeed", "mph", 0.0, 160.0, true},
      {"SteeringWheelAngle", "deg", -780.0, 780.0, false},
      {"SteeringWheelAngleSpeed", "deg/s", 0.0, 1016.0, false},
      {"PedalPos", "percent", 0.0, 100.0, true},
      {"BrakePressure", "bar", 0.0, 204.6, true},
      {"LateralAcceleration", "m/s^2", -11.0, 11.0, true},
      {"YawRate", "deg/s", -100.0, 100.0, true},
  };
}

}  // namespace workload
