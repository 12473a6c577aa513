#ifndef WORKLOAD_CLI_HPP
#define WORKLOAD_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "workload/error.hpp"
#include "workload/simulator.hpp"

namespace workload::cli {

inline constexpr const char* kVersion = "0.3.0";
inline constexpr const char* kOutDirEnv = "WORKLOAD_OUT_DIR";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` file; '#' starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key, double fallback) const;
  std::uint64_t get_unsigned(const std::string& key, std::uint64_t fallback) const;
  /// Throws Error naming the first key outside `known`.
  void require_known(const std::vector<std::string>& known) const;

  const std::string& text() const { return text_; }

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
  std::string text_;
};

struct SimulationPlan {
  SimConfig config;
  bool population = true;
  std::size_t n_per_class = 8;
  Awp style = Awp::M;
  std::size_t n_journeys = 1;
};

SimulationPlan plan_from_config(const KeyValueConfig& cfg);

/// 64-bit FNV-1a, used for config digests in provenance headers.
std::uint64_t fnv1a(std::string_view text);

/// `# workload <version> <command> seed=<seed> config=<digest>` plus newline.
std::string provenance(const std::string& command, std::uint64_t seed, std::uint64_t digest);

/// Entry point. Returns 0 on success, 1 on usage errors, 2 on data errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace workload::cli

#endif  // WORKLOAD_CLI_HPP
