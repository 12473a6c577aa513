#include "workload/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "workload/eval.hpp"
#include "workload/filter.hpp"
#include "workload/labeling.hpp"
#include "workload/likelihood.hpp"
#include "workload/profiler.hpp"
#include "workload/simulator.hpp"
#include "workload/stream_model.hpp"

namespace workload::cli {

namespace fs = std::filesystem;

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
  KeyValueConfig cfg;
  cfg.source_ = source;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    cfg.text_ += line;
    cfg.text_ += '\n';
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError(source, lineno, "expected 'key = value'");
    if (cfg.values_.count(key)) throw ParseError(source, lineno, "duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  return parse(in, path.string());
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_number(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return parse_number(it->second);
  } catch (const std::invalid_argument&) {
    throw Error(source_ + ": key '" + key + "' expects a number, got '" + it->second + "'");
  }
}

std::uint64_t KeyValueConfig::get_unsigned(const std::string& key, std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::uint64_t v = 0;
  const auto& s = it->second;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(source_ + ": key '" + key + "' expects a non-negative integer, got '" + s + "'");
  }
  return v;
}

void KeyValueConfig::require_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(source_ + ": unknown key '" + key + "'");
    }
  }
}

SimulationPlan plan_from_config(const KeyValueConfig& cfg) {
  cfg.require_known({"seed", "mode", "n_per_class", "style", "n_journeys", "duration_s", "tick_hz", "separation",
                     "style_offset", "road_script", "jitter", "prompt_min_s", "prompt_max_s"});
  SimulationPlan plan;
  auto& c = plan.config;
  c.seed = cfg.get_unsigned("seed", 1);
  c.duration_s = cfg.get_number("duration_s", c.duration_s);
  c.tick_hz = cfg.get_number("tick_hz", c.tick_hz);
  c.separation = cfg.get_number("separation", c.separation);
  c.style_offset = cfg.get_number("style_offset", c.style_offset);
  c.jitter = cfg.get_number("jitter", c.jitter);
  c.prompt_min_s = cfg.get_number("prompt_min_s", c.prompt_min_s);
  c.prompt_max_s = cfg.get_number("prompt_max_s", c.prompt_max_s);
  const std::string road = cfg.get("road_script", "none");
  if (road != "none" && road != "random") throw Error("road_script must be 'none' or 'random'");
  c.random_road_script = road == "random";
  const std::string mode = cfg.get("mode", "population");
  if (mode != "population" && mode != "single") throw Error("mode must be 'population' or 'single'");
  plan.population = mode == "population";
  plan.n_per_class = cfg.get_unsigned("n_per_class", plan.n_per_class);
  plan.n_journeys = cfg.get_unsigned("n_journeys", plan.n_journeys);
  try {
    plan.style = parse_awp(cfg.get("style", "M"));
  } catch (const std::invalid_argument& e) {
    throw Error(e.what());
  }
  c.validate();
  return plan;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string provenance(const std::string& command, std::uint64_t seed, std::uint64_t digest) {
  std::ostringstream os;
  os << "# workload " << kVersion << ' ' << command << " seed=" << seed << " config=" << std::hex << std::setw(16)
     << std::setfill('0') << digest << '\n';
  return os.str();
}

namespace {

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

fs::path output_path(const Common& c, const std::string& default_name) {
  if (!c.out.empty()) return c.out;
  if (const char* dir = std::getenv(kOutDirEnv); dir && *dir) return fs::path(dir) / default_name;
  throw UsageError("--out is required (or set " + std::string(kOutDirEnv) + ")");
}

// Digest of the config file (when given) and every argument except the output
// location, so the same run written elsewhere carries the same header.
std::uint64_t run_digest(const std::vector<std::string>& args, const Common& c) {
  std::string text;
  if (!c.config.empty()) text += KeyValueConfig::load(c.config).text();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out") {
      ++i;
      continue;
    }
    if (args[i].starts_with("--out=")) continue;
    text += args[i];
    text += '\x1f';
  }
  return fnv1a(text);
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

std::vector<Journey> read_journey_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("journey directory '" + dir.string() + "' not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".journey") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .journey files in '" + dir.string() + "'");
  std::vector<Journey> out;
  for (const auto& f : files) out.push_back(read_journey(f));
  return out;
}

std::vector<std::pair<double, std::vector<double>>> read_columns(const fs::path& path, std::size_t min_cols) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<std::pair<double, std::vector<double>>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string tok; ls >> tok;) f.push_back(tok);
    if (f.empty() || f[0].front() == '#') continue;
    if (f.size() < min_cols) throw ParseError(path.string(), lineno, "too few columns");
    try {
      std::vector<double> cols;
      for (std::size_t k = 1; k < f.size(); ++k) {
        if (f[k] == "Low" || f[k] == "High") {
          cols.push_back(f[k] == "High" ? 1.0 : 0.0);
        } else {
          cols.push_back(parse_number(f[k]));
        }
      }
      rows.emplace_back(parse_number(f[0]), std::move(cols));
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return rows;
}

void write_metrics(const BinaryMetrics& m, std::ostream& out) {
  out << "accuracy " << format_number(m.accuracy) << "\n";
  out << "precision " << format_number(m.precision) << (m.precision_undefined ? " undefined" : "") << "\n";
  out << "recall " << format_number(m.recall) << (m.recall_undefined ? " undefined" : "") << "\n";
  out << "f1 " << format_number(m.f1) << (m.f1_undefined ? " undefined" : "") << "\n";
  out << "counts tp=" << m.counts.tp << " fp=" << m.counts.fp << " tn=" << m.counts.tn << " fn=" << m.counts.fn
      << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Driver workload estimation and profiling toolkit", "workload"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  auto add_common = [&](CLI::App* sub, bool with_seed) {
    sub->add_option("--config", common.config, "Key-value configuration file");
    sub->add_option("--out", common.out, "Output path (default: $" + std::string(kOutDirEnv) + "/...)");
    if (with_seed) sub->add_option("--seed", common.seed, "Random seed")->each([&](const std::string&) { common.seed_set = true; });
  };

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate synthetic journeys with ground truth");
  add_common(sim, true);

  // label
  std::string journey_path;
  LabelWindow window;
  auto* lab = app.add_subcommand("label", "Label prompts and report LWR/AWP");
  add_common(lab, false);
  lab->add_option("--journey", journey_path, "Journey log")->required();
  lab->add_option("--pre", window.pre_s, "Seconds before each prompt");
  lab->add_option("--post", window.post_s, "Seconds after each prompt");

  // train
  std::string journeys_dir;
  std::vector<std::string> excludes;
  std::string bandwidth = "silverman";
  std::size_t grid_points = 512;
  auto* train = app.add_subcommand("train", "Learn KDE likelihood tables");
  add_common(train, false);
  train->add_option("--journeys", journeys_dir, "Directory of .journey files")->required();
  train->add_option("--exclude", excludes, "Journey ids left out of training");
  train->add_option("--pre", window.pre_s, "Seconds before each prompt");
  train->add_option("--post", window.post_s, "Seconds after each prompt");
  train->add_option("--bandwidth", bandwidth, "'silverman' or a fixed bandwidth");
  train->add_option("--grid", grid_points, "Minimum grid points per table");

  // filter
  std::string tables_dir;
  std::string policy_text = "fixed:Standard";
  std::optional<double> threshold;
  auto* filt = app.add_subcommand("filter", "Run the workload filter over a journey");
  add_common(filt, false);
  filt->add_option("--journey", journey_path, "Journey log")->required();
  filt->add_option("--tables", tables_dir, "Directory of likelihood tables")->required();
  filt->add_option("--policy", policy_text, "fixed:<name> | road | profile | awp:<L|M|H>");
  filt->add_option("--threshold", threshold, "Decision threshold on pi_high");

  // profile
  ProfileOptions popt;
  std::string split_text = "window";
  auto* prof = app.add_subcommand("profile", "Classify drivers into workload profiles");
  add_common(prof, false);
  prof->add_option("--journeys", journeys_dir, "Directory of labeled .journey files")->required();
  prof->add_option("--length", popt.length, "Window length in samples at 20 Hz");
  prof->add_option("--seed", popt.seed, "Kernel and split seed");
  prof->add_option("--split", split_text, "window | journey")->check(CLI::IsMember({"window", "journey"}));
  prof->add_option("--features", popt.feature_count, "Number of transform features");

  // evaluate
  std::string pred_path;
  std::string truth_path;
  std::string scores_path;
  auto* evalc = app.add_subcommand("evaluate", "Score filter output against ground truth");
  add_common(evalc, false);
  evalc->add_option("--pred", pred_path, "Filter output")->required();
  evalc->add_option("--truth", truth_path, "Truth sidecar or label file")->required();
  evalc->add_option("--scores", scores_path, "Optional '<t> <score>' file replacing pi_high");
  evalc->add_option("--threshold", threshold, "Threshold when predictions carry no decision");

  // compare
  std::vector<std::string> policy_list = {"fixed:Standard", "road", "awp"};
  auto* cmp = app.add_subcommand("compare", "Compare filter policies on labeled journeys");
  add_common(cmp, false);
  cmp->add_option("--journeys", journeys_dir, "Directory of .journey files")->required();
  cmp->add_option("--tables", tables_dir, "Directory of likelihood tables")->required();
  cmp->add_option("--policies", policy_list, "Policies to compare")->delimiter(',');
  cmp->add_option("--pre", window.pre_s, "Seconds before each prompt");
  cmp->add_option("--post", window.post_s, "Seconds after each prompt");

  std::vector<std::string> argv_store;
  argv_store.push_back("workload");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const std::uint64_t digest = run_digest(args, common);

    if (*sim) {
      if (common.config.empty()) throw UsageError("simulate requires --config");
      const auto plan = plan_from_config(KeyValueConfig::load(common.config));
      SimConfig cfg = plan.config;
      if (common.seed_set) cfg.seed = common.seed;
      const std::string header = provenance("simulate", cfg.seed, digest);
      std::vector<SimulatedJourney> journeys;
      if (plan.population) {
        journeys = simulate_population(plan.n_per_class, cfg);
      } else {
        const auto em = can_bus_emissions(cfg.separation);
        const auto style = default_style(plan.style, cfg.style_offset);
        for (std::size_t i = 0; i < plan.n_journeys; ++i) {
          SimConfig c = cfg;
          c.seed = derive_seed(cfg.seed, i);
          std::ostringstream id;
          id << "sim-" << to_string(plan.style) << '-' << std::setw(2) << std::setfill('0') << i;
          journeys.push_back(simulate_journey(c, style, em, id.str()));
        }
      }
      const fs::path dir = output_path(common, "simulated");
      fs::create_directories(dir);
      for (const auto& sj : journeys) {
        write_journey(sj.journey, dir / (sj.journey.id + ".journey"), header);
        auto t = open_output(dir / (sj.journey.id + ".truth"));
        t << header;
        write_truth(sj.truth, t);
      }
      out << "simulated " << journeys.size() << " journeys into " << dir.string() << "\n";
      return 0;
    }

    if (*lab) {
      window.validate();
      const Journey j = read_journey(journey_path);
      const auto labels = label_prompts(j);
      auto o = open_output(output_path(common, j.id + ".labels"));
      o << provenance("label", 0, digest);
      for (const auto& l : labels.labels) o << "L " << format_number(l.t) << ' ' << to_string(l.label) << '\n';
      const auto expanded = expand_labels(j, labels.labels, window);
      const auto n_low = std::count_if(labels.labels.begin(), labels.labels.end(),
                                       [](const LabeledInstant& l) { return l.label == Workload::Low; });
      o << "R journey " << j.id << " prompts " << labels.labels.size() << " low " << n_low << " high "
        << labels.labels.size() - static_cast<std::size_t>(n_low) << " ignored_presses " << labels.ignored_presses
        << " labeled_samples " << expanded.size();
      if (!labels.labels.empty()) {
        const double r = lwr(labels.labels);
        o << " lwr " << format_number(r) << " awp " << to_string(awp_from_lwr(r));
      }
      o << '\n';
      return 0;
    }

    if (*train) {
      KdeConfig kde;
      kde.grid_points = grid_points;
      if (bandwidth != "silverman") {
        try {
          kde.fixed_bandwidth = parse_number(bandwidth);
        } catch (const std::invalid_argument&) {
          throw UsageError("--bandwidth expects 'silverman' or a number");
        }
      }
      window.validate();
      const auto journeys = read_journey_dir(journeys_dir);
      const std::set<std::string> excluded(excludes.begin(), excludes.end());
      const auto tables = train_likelihoods(journeys, window, kde, excluded);
      const fs::path dir = output_path(common, "tables");
      save_likelihoods(tables, dir, provenance("train", 0, digest));
      out << "wrote " << tables.table_count() << " tables into " << dir.string() << "\n";
      return 0;
    }

    if (*filt) {
      if (threshold && !(*threshold > 0.0 && *threshold < 1.0)) throw UsageError("--threshold must lie in (0, 1)");
      const Journey j = read_journey(journey_path);
      auto tables = std::make_shared<const LikelihoodSet>(load_likelihoods(tables_dir));
      auto policy = std::make_shared<const ContextPolicy>(parse_policy(policy_text));
      const auto post = run_filter(j, init_filter(policy, tables));
      auto o = open_output(output_path(common, j.id + ".posterior"));
      o << provenance("filter", 0, digest);
      for (const auto& p : post) {
        o << format_number(p.t) << ' ' << format_number(p.pi_low) << ' ' << format_number(p.pi_high);
        if (threshold) o << ' ' << to_string(decide(p, *threshold));
        o << '\n';
      }
      return 0;
    }

    if (*prof) {
      popt.split = split_text == "journey" ? SplitMode::Journey : SplitMode::Window;
      const auto journeys = read_journey_dir(journeys_dir);
      const auto report = profile_population(journeys, popt);
      auto o = open_output(output_path(common, "profile.report"));
      o << provenance("profile", popt.seed, digest);
      write_profile_report(report, o);
      return 0;
    }

    if (*evalc) {
      const auto pred = read_columns(pred_path, 3);
      std::ifstream tin(truth_path);
      if (!tin) throw Error("cannot open '" + truth_path + "'");
      const auto truth = read_truth(tin, truth_path);
      if (pred.empty() || truth.empty()) throw Error("empty prediction or truth file");

      std::vector<double> scores;
      if (!scores_path.empty()) {
        const auto s = read_columns(scores_path, 2);
        if (s.size() != pred.size()) throw Error("scores and predictions differ in length");
        for (const auto& r : s) scores.push_back(r.second.front());
      } else {
        for (const auto& r : pred) scores.push_back(r.second.at(1));
      }

      std::vector<Workload> t_labels;
      std::vector<Workload> p_labels;
      std::size_t k = 0;
      const double thr = threshold.value_or(0.5);
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const double t = pred[i].first;
        while (k + 1 < truth.size() && truth[k + 1].first <= t) ++k;
        t_labels.push_back(truth[k].second);
        const auto& cols = pred[i].second;
        if (cols.size() >= 3 && !threshold) {
          p_labels.push_back(cols[2] > 0.5 ? Workload::High : Workload::Low);
        } else {
          p_labels.push_back(scores[i] >= thr ? Workload::High : Workload::Low);
        }
      }

      std::ostringstream report;
      report << provenance("evaluate", 0, digest);
      report << "instances " << t_labels.size() << "\n";
      write_metrics(binary_metrics(t_labels, p_labels), report);
      const bool both = std::count(t_labels.begin(), t_labels.end(), Workload::High) > 0 &&
                        std::count(t_labels.begin(), t_labels.end(), Workload::Low) > 0;
      if (both) {
        report << "auc " << format_number(roc(t_labels, scores).auc) << "\n";
        const auto best = best_f1_threshold(t_labels, scores);
        report << "best_f1_threshold " << format_number(best.threshold) << " f1 " << format_number(best.f1) << "\n";
      } else {
        report << "auc undefined (single-class truth)\n";
      }
      if (common.out.empty() && !std::getenv(kOutDirEnv)) {
        out << report.str();
      } else {
        auto o = open_output(output_path(common, "evaluation.report"));
        o << report.str();
      }
      return 0;
    }

    if (*cmp) {
      window.validate();
      const auto journeys = read_journey_dir(journeys_dir);
      const auto tables = load_likelihoods(tables_dir);
      std::vector<PolicySpec> specs;
      for (const auto& p : policy_list) specs.push_back(parse_policy_spec(p));
      const auto report = compare_policies(journeys, tables, specs, window);
      auto o = open_output(output_path(common, "compare.report"));
      o << provenance("compare", 0, digest);
      write_report(report, o);
      return 0;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace workload::cli
