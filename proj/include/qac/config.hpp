#ifndef QAC_CONFIG_HPP_
#define QAC_CONFIG_HPP_

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qac/ane_curiosity.hpp"
#include "qac/baseline_curiosity.hpp"
#include "qac/curiosity.hpp"
#include "qac/errors.hpp"
#include "qac/ppo.hpp"
#include "qac/scene.hpp"

namespace qac {

enum class TaskKind : std::uint8_t { kDense, kSparse };

inline std::string_view to_string(TaskKind t) {
  return t == TaskKind::kDense ? "dense" : "sparse";
}

struct ExperimentConfig {
  TaskKind task = TaskKind::kSparse;
  CuriosityMethod method = CuriosityMethod::kNone;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::string output_dir = "runs";
  std::string label;          // empty: derived from task/method/ane fields
  std::string question_file;  // optional AnE question pool
  int jobs = 1;

  TrainerConfig trainer;
  std::optional<int> epochs_override;  // else 4 for rnd, 3 otherwise
  EnvConfig env;
  AnEConfig ane;
  IcmConfig icm;
  RndConfig rnd;

  int effective_epochs() const {
    if (epochs_override) return *epochs_override;
    return method == CuriosityMethod::kRnd ? 4 : 3;
  }

  std::string effective_label() const {
    if (!label.empty()) return label;
    std::string s = std::string(to_string(task)) + "_" +
                    std::string(method == CuriosityMethod::kNone
                                    ? "ppo"
                                    : to_string(method));
    if (method == CuriosityMethod::kAne)
      s += "_h" + std::to_string(ane.hop) + "_n" + std::to_string(ane.n);
    if (!trainer.extrinsic_enabled) s += "_noext";
    return s;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno != 0)
    throw ConfigError("expected a number, got '" + v + "'");
  return d;
}

inline long parse_long(const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long n = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno != 0)
    throw ConfigError("expected an integer, got '" + v + "'");
  return n;
}

inline int parse_int(const std::string& v) {
  const long n = parse_long(v);
  if (n < -2147483647L || n > 2147483647L)
    throw ConfigError("integer out of range: " + v);
  return static_cast<int>(n);
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

inline std::vector<std::uint64_t> parse_seeds(const std::string& v) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const long s = parse_long(item);
    if (s < 0) throw ConfigError("seeds must be non-negative");
    out.push_back(static_cast<std::uint64_t>(s));
  }
  if (out.empty()) throw ConfigError("at least one seed is required");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct KeySpec {
  Setter set;
  Getter get;
};

inline std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Keys are "section.name"; top-level keys have an empty section.
inline const std::vector<std::pair<std::string, KeySpec>>& key_table() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, KeySpec>> kTable = {
      {"task",
       {[](C& c, const std::string& v) {
          if (v == "dense") c.task = TaskKind::kDense;
          else if (v == "sparse") c.task = TaskKind::kSparse;
          else throw ConfigError("task must be dense or sparse, got '" + v + "'");
        },
        [](const C& c) { return std::string(to_string(c.task)); }}},
      {"method",
       {[](C& c, const std::string& v) {
          if (v == "ppo" || v == "none") c.method = CuriosityMethod::kNone;
          else if (v == "icm") c.method = CuriosityMethod::kIcm;
          else if (v == "rnd") c.method = CuriosityMethod::kRnd;
          else if (v == "ane") c.method = CuriosityMethod::kAne;
          else
            throw ConfigError("method must be ppo, icm, rnd or ane, got '" +
                              v + "'");
        },
        [](const C& c) {
          return c.method == CuriosityMethod::kNone
                     ? std::string("ppo")
                     : std::string(to_string(c.method));
        }}},
      {"seeds",
       {[](C& c, const std::string& v) { c.seeds = parse_seeds(v); },
        [](const C& c) {
          std::string s;
          for (std::size_t i = 0; i < c.seeds.size(); ++i)
            s += (i ? "," : "") + std::to_string(c.seeds[i]);
          return s;
        }}},
      {"output_dir",
       {[](C& c, const std::string& v) { c.output_dir = v; },
        [](const C& c) { return c.output_dir; }}},
      {"label",
       {[](C& c, const std::string& v) { c.label = v; },
        [](const C& c) { return c.effective_label(); }}},
      {"question_file",
       {[](C& c, const std::string& v) { c.question_file = v; },
        [](const C& c) { return c.question_file; }}},
      {"jobs",
       {[](C& c, const std::string& v) { c.jobs = parse_int(v); },
        [](const C& c) { return std::to_string(c.jobs); }}},
      {"extrinsic_enabled",
       {[](C& c, const std::string& v) {
          c.trainer.extrinsic_enabled = parse_bool(v);
        },
        [](const C& c) {
          return std::string(c.trainer.extrinsic_enabled ? "true" : "false");
        }}},

      {"trainer.rollouts",
       {[](C& c, const std::string& v) { c.trainer.rollouts = parse_int(v); },
        [](const C& c) { return std::to_string(c.trainer.rollouts); }}},
      {"trainer.rollout_length",
       {[](C& c, const std::string& v) {
          c.trainer.rollout_length = parse_int(v);
        },
        [](const C& c) { return std::to_string(c.trainer.rollout_length); }}},
      {"trainer.epochs",
       {[](C& c, const std::string& v) { c.epochs_override = parse_int(v); },
        [](const C& c) { return std::to_string(c.effective_epochs()); }}},
      {"trainer.gamma",
       {[](C& c, const std::string& v) { c.trainer.gamma = parse_double(v); },
        [](const C& c) { return fmt_double(c.trainer.gamma); }}},
      {"trainer.gae_lambda",
       {[](C& c, const std::string& v) {
          c.trainer.gae_lambda = parse_double(v);
        },
        [](const C& c) { return fmt_double(c.trainer.gae_lambda); }}},
      {"trainer.clip",
       {[](C& c, const std::string& v) { c.trainer.clip = parse_double(v); },
        [](const C& c) { return fmt_double(c.trainer.clip); }}},
      {"trainer.lr",
       {[](C& c, const std::string& v) { c.trainer.lr = parse_double(v); },
        [](const C& c) { return fmt_double(c.trainer.lr); }}},
      {"trainer.entropy_coef",
       {[](C& c, const std::string& v) {
          c.trainer.entropy_coef = parse_double(v);
        },
        [](const C& c) { return fmt_double(c.trainer.entropy_coef); }}},
      {"trainer.value_coef",
       {[](C& c, const std::string& v) {
          c.trainer.value_coef = parse_double(v);
        },
        [](const C& c) { return fmt_double(c.trainer.value_coef); }}},
      {"trainer.max_grad_norm",
       {[](C& c, const std::string& v) {
          c.trainer.max_grad_norm = parse_double(v);
        },
        [](const C& c) { return fmt_double(c.trainer.max_grad_norm); }}},
      {"trainer.intrinsic_scale",
       {[](C& c, const std::string& v) {
          c.trainer.intrinsic_scale = parse_double(v);
        },
        [](const C& c) { return fmt_double(c.trainer.intrinsic_scale); }}},
      {"trainer.extrinsic_enabled",
       {[](C& c, const std::string& v) {
          c.trainer.extrinsic_enabled = parse_bool(v);
        },
        [](const C& c) {
          return std::string(c.trainer.extrinsic_enabled ? "true" : "false");
        }}},
      {"trainer.normalize_advantages",
       {[](C& c, const std::string& v) {
          c.trainer.normalize_advantages = parse_bool(v);
        },
        [](const C& c) {
          return std::string(c.trainer.normalize_advantages ? "true" : "false");
        }}},
      {"trainer.hidden",
       {[](C& c, const std::string& v) {
          const int h = parse_int(v);
          if (h < 1) throw ConfigError("trainer.hidden must be >= 1");
          c.trainer.hidden = static_cast<std::size_t>(h);
        },
        [](const C& c) { return std::to_string(c.trainer.hidden); }}},
      {"trainer.success_window",
       {[](C& c, const std::string& v) {
          c.trainer.success_window = parse_int(v);
        },
        [](const C& c) { return std::to_string(c.trainer.success_window); }}},
      {"trainer.checkpoint_interval",
       {[](C& c, const std::string& v) {
          c.trainer.checkpoint_interval = parse_int(v);
        },
        [](const C& c) {
          return std::to_string(c.trainer.checkpoint_interval);
        }}},

      {"ane.hop",
       {[](C& c, const std::string& v) {
          const int h = parse_int(v);
          if (h < 1 || h > 3)
            throw ConfigError("hop must be one of 1, 2, 3, got " + v);
          c.ane.hop = h;
        },
        [](const C& c) { return std::to_string(c.ane.hop); }}},
      {"ane.n",
       {[](C& c, const std::string& v) { c.ane.n = parse_int(v); },
        [](const C& c) { return std::to_string(c.ane.n); }}},
      {"ane.alpha",
       {[](C& c, const std::string& v) { c.ane.alpha = parse_double(v); },
        [](const C& c) { return fmt_double(c.ane.alpha); }}},
      {"ane.reservoir_size",
       {[](C& c, const std::string& v) {
          c.ane.reservoir_size = parse_long(v);
        },
        [](const C& c) { return std::to_string(c.ane.reservoir_size); }}},
      {"ane.slots",
       {[](C& c, const std::string& v) { c.ane.slots = parse_int(v); },
        [](const C& c) { return std::to_string(c.ane.slots); }}},

      {"env.max_steps",
       {[](C& c, const std::string& v) { c.env.max_steps = parse_int(v); },
        [](const C& c) { return std::to_string(c.env.max_steps); }}},
      {"env.half_extent",
       {[](C& c, const std::string& v) {
          c.env.half_extent = parse_double(v);
        },
        [](const C& c) { return fmt_double(c.env.half_extent); }}},
      {"env.radius",
       {[](C& c, const std::string& v) { c.env.radius = parse_double(v); },
        [](const C& c) { return fmt_double(c.env.radius); }}},
      {"env.push_distance",
       {[](C& c, const std::string& v) {
          c.env.push_distance = parse_double(v);
        },
        [](const C& c) { return fmt_double(c.env.push_distance); }}},
      {"env.vertical_tolerance",
       {[](C& c, const std::string& v) {
          c.env.vertical_tolerance = parse_double(v);
        },
        [](const C& c) { return fmt_double(c.env.vertical_tolerance); }}},
      {"env.relation_margin",
       {[](C& c, const std::string& v) {
          c.env.relation_margin = parse_double(v);
          c.ane.relation_margin = c.env.relation_margin;
        },
        [](const C& c) { return fmt_double(c.env.relation_margin); }}},

      {"icm.eta",
       {[](C& c, const std::string& v) { c.icm.eta = parse_double(v); },
        [](const C& c) { return fmt_double(c.icm.eta); }}},
      {"icm.forward_weight",
       {[](C& c, const std::string& v) {
          c.icm.forward_weight = parse_double(v);
        },
        [](const C& c) { return fmt_double(c.icm.forward_weight); }}},
      {"icm.lr",
       {[](C& c, const std::string& v) { c.icm.lr = parse_double(v); },
        [](const C& c) { return fmt_double(c.icm.lr); }}},
      {"icm.use_image",
       {[](C& c, const std::string& v) { c.icm.use_image = parse_bool(v); },
        [](const C& c) {
          return std::string(c.icm.use_image ? "true" : "false");
        }}},
      {"rnd.lr",
       {[](C& c, const std::string& v) { c.rnd.lr = parse_double(v); },
        [](const C& c) { return fmt_double(c.rnd.lr); }}},
      {"rnd.normalize",
       {[](C& c, const std::string& v) { c.rnd.normalize = parse_bool(v); },
        [](const C& c) {
          return std::string(c.rnd.normalize ? "true" : "false");
        }}},
      {"rnd.use_image",
       {[](C& c, const std::string& v) { c.rnd.use_image = parse_bool(v); },
        [](const C& c) {
          return std::string(c.rnd.use_image ? "true" : "false");
        }}},
  };
  return kTable;
}

inline const KeySpec* find_key(const std::string& full) {
  for (const auto& [name, spec] : key_table())
    if (name == full) return &spec;
  return nullptr;
}

}  // namespace detail

// Sets one "section.key" (or top-level "key") from text.
inline void set_config_value(ExperimentConfig& config, const std::string& key,
                             const std::string& value) {
  const auto* spec = detail::find_key(key);
  if (!spec) throw ConfigError("unknown config key '" + key + "'");
  try {
    spec->set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

// Range and cross-field checks on a fully assembled configuration.
inline void validate(const ExperimentConfig& c) {
  validate(c.env);
  TrainerConfig t = c.trainer;
  t.epochs = c.effective_epochs();
  validate(t);
  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (c.method == CuriosityMethod::kAne) {
    validate(c.ane);
    if (c.question_file.empty() && c.ane.reservoir_size >
                                       static_cast<long>(question_count(c.ane.hop)))
      throw ConfigError("ane.reservoir_size exceeds the enumerable questions");
  }
}

// INI-style "key = value" text with [trainer], [ane], [env], [icm] and [rnd]
// sections; '#' and ';' start comments.
inline void apply_config_text(ExperimentConfig& config, const std::string& text,
                              const std::string& source = "<config>") {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto where = source + ":" + std::to_string(line_no) + ": ";
    const auto hash = line.find_first_of("#;");
    std::string body = detail::trim(line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + "unterminated section");
      section = detail::trim(body.substr(1, body.size() - 2));
      if (section != "trainer" && section != "ane" && section != "env" &&
          section != "icm" && section != "rnd")
        throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + "expected 'key = value'");
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    try {
      set_config_value(config, full, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

inline ExperimentConfig load_config_file(const std::string& path,
                                         ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(base, ss.str(), path);
  return base;
}

// Canonical dump with every default resolved; parses back to the same config.
inline std::string dump_config(const ExperimentConfig& config) {
  std::string out;
  std::string current;
  for (const auto& [name, spec] : detail::key_table()) {
    if (name == "trainer.extrinsic_enabled") continue;
    const auto dot = name.find('.');
    const std::string section = dot == std::string::npos ? "" : name.substr(0, dot);
    const std::string key = dot == std::string::npos ? name : name.substr(dot + 1);
    if (section != current) {
      out += "\n[" + section + "]\n";
      current = section;
    }
    out += key + " = " + spec.get(config) + "\n";
  }
  return out;
}

}  // namespace qac

#endif  // QAC_CONFIG_HPP_
