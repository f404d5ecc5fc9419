#include "zsmeta/cli/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace zsmeta::cli {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v, const char* expected) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, expected);
  return out;
}

std::size_t to_size(const std::string& k, const std::string& v) { return parse_number<std::size_t>(k, v, "a count"); }
std::uint64_t to_u64(const std::string& k, const std::string& v) { return parse_number<std::uint64_t>(k, v, "an integer"); }
double to_double(const std::string& k, const std::string& v) {
  const double d = parse_number<double>(k, v, "a number");
  if (!std::isfinite(d)) bad_value(k, v, "a finite number");
  return d;
}
bool to_bool(const std::string& k, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(k, v, "true|false");
}

template <class T, class F>
std::vector<T> to_list(const std::string& k, const std::string& v, F parse) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse(k, trim(item)));
  if (out.empty()) bad_value(k, v, "a comma-separated list");
  return out;
}

// shortest text that reads back to the same double
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += fmt(xs[i]);
    else
      s += std::to_string(xs[i]);
  }
  return s;
}

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SIZE_KEY(name, field)                                                                 \
  Key{name, [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = to_size(k, v); }, \
      [](const ExperimentConfig& c) { return std::to_string(c.field); }}
#define DOUBLE_KEY(name, field)                                                                 \
  Key{name, [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); }, \
      [](const ExperimentConfig& c) { return fmt(c.field); }}
#define STRING_KEY(name, field)                                                                         \
  Key{name, [](ExperimentConfig& c, const std::string&, const std::string& v) { c.field = v; }, \
      [](const ExperimentConfig& c) { return c.field; }}

const std::vector<Key>& registry() {
  static const std::vector<Key> keys{
      Key{"seed",
          [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); },
          [](const ExperimentConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }},
      STRING_KEY("data", data),
      STRING_KEY("out", out),
      STRING_KEY("split_file", split_file),
      STRING_KEY("checkpoint", checkpoint),
      SIZE_KEY("tickers", synth.n_tickers),
      SIZE_KEY("days", synth.n_days),
      SIZE_KEY("regimes", synth.n_regimes),
      STRING_KEY("start_date", synth.start_date),
      SIZE_KEY("window", data_opts.window),
      SIZE_KEY("horizon", data_opts.horizon),
      Key{"split_ratios",
          [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            const auto r = to_list<double>(k, v, to_double);
            if (r.size() != 3) bad_value(k, v, "three ratios train,val,test");
            c.data_opts.ratios = {r[0], r[1], r[2]};
          },
          [](const ExperimentConfig& c) {
            return join(std::vector<double>(c.data_opts.ratios.begin(), c.data_opts.ratios.end()));
          }},
      SIZE_KEY("vol_window", data_opts.split_vol_window),
      Key{"task_source",
          [](ExperimentConfig& c, const std::string&, const std::string& v) {
            c.train.source = metalearn::parse_task_source(v);
          },
          [](const ExperimentConfig& c) { return std::string(metalearn::to_string(c.train.source)); }},
      Key{"arch", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.train.arch = enc::parse_arch(v); },
          [](const ExperimentConfig& c) { return std::string(enc::to_string(c.train.arch)); }},
      SIZE_KEY("embed_dim", train.embed_dim),
      SIZE_KEY("baseline_tasks", train.baseline_tasks),
      DOUBLE_KEY("inner_lr", train.meta.inner_lr),
      DOUBLE_KEY("outer_lr", train.meta.outer_lr),
      SIZE_KEY("inner_steps", train.meta.inner_steps),
      DOUBLE_KEY("delta", train.meta.delta),
      Key{"first_order",
          [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.meta.first_order = to_bool(k, v); },
          [](const ExperimentConfig& c) { return std::string(c.train.meta.first_order ? "true" : "false"); }},
      SIZE_KEY("epochs", train.meta.epochs),
      SIZE_KEY("batch_size", train.meta.batch_size),
      SIZE_KEY("patience", train.meta.patience),
      SIZE_KEY("components", train.tasks.components),
      SIZE_KEY("n_intra", train.tasks.n_intra),
      DOUBLE_KEY("cc_ratio", train.tasks.cc_ratio),
      DOUBLE_KEY("ht_ratio", train.tasks.ht_ratio),
      SIZE_KEY("task_size", train.tasks.task_size),
      DOUBLE_KEY("support_fraction", train.tasks.support_fraction),
      SIZE_KEY("hard_pairs", train.tasks.hard_pairs),
      DOUBLE_KEY("gmm_tol", train.tasks.gmm_tol),
      Key{"gmm_max_iter",
          [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.train.tasks.gmm_max_iter = parse_number<int>(k, v, "an integer");
          },
          [](const ExperimentConfig& c) { return std::to_string(c.train.tasks.gmm_max_iter); }},
      SIZE_KEY("top_n", top_n),
      SIZE_KEY("mmd_samples", mmd_samples),
      Key{"cc_grid",
          [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.cc_grid = to_list<double>(k, v, to_double); },
          [](const ExperimentConfig& c) { return join(c.cc_grid); }},
      Key{"ht_grid",
          [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.ht_grid = to_list<double>(k, v, to_double); },
          [](const ExperimentConfig& c) { return join(c.ht_grid); }},
      Key{"seeds",
          [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.seeds = to_list<std::uint64_t>(k, v, to_u64);
          },
          [](const ExperimentConfig& c) { return join(c.seeds); }},
  };
  return keys;
}

#undef SIZE_KEY
#undef DOUBLE_KEY
#undef STRING_KEY

const Key& find_key(const std::string& name) {
  for (const auto& k : registry())
    if (k.name == name) return k;
  throw ConfigError("unknown config key '" + name + "'");
}

}  // namespace

void ExperimentConfig::propagate_seed() {
  if (!seed) return;
  synth.seed = *seed;
  data_opts.split_seed = *seed;
  train.seed = *seed;
  train.meta.seed = *seed;
  train.tasks.seed = *seed;
}

void ExperimentConfig::validate() const {
  if (data.empty()) synth.validate();
  if (data_opts.window < 1) throw std::invalid_argument("window must be at least 1");
  if (data_opts.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  double total = 0.0;
  for (double r : data_opts.ratios) {
    if (!(r > 0.0)) throw std::invalid_argument("split ratios must be positive");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
  if (data_opts.split_vol_window < 2) throw std::invalid_argument("vol_window must be at least 2");
  train.validate();
  if (top_n < 1) throw std::invalid_argument("top_n must be at least 1");
  if (mmd_samples < 2) throw std::invalid_argument("mmd_samples must be at least 2");
  for (double v : cc_grid)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("cc_grid values must lie in [0, 1]");
  for (double v : ht_grid)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("ht_grid values must lie in [0, 1]");
  if (out.empty()) throw std::invalid_argument("out must not be empty");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& k : registry()) n.push_back(k.name);
    return n;
  }();
  return names;
}

void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  try {
    find_key(key).set(cfg, key, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::string get_key(const ExperimentConfig& cfg, const std::string& key) { return find_key(key).get(cfg); }

std::pair<std::string, std::string> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + text + "'");
  std::pair<std::string, std::string> kv{trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
  find_key(kv.first);
  return kv;
}

std::vector<std::pair<std::string, std::string>> parse_config(std::istream& in, const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_assignment(line));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  for (const auto& k : registry()) {
    const auto v = k.get(cfg);
    // an unset seed stays unset on reload
    if (k.name == "seed" && v.empty()) continue;
    out << k.name << '=' << v << '\n';
  }
}

}  // namespace zsmeta::cli
