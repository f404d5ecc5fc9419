#include "zsmeta/cli/commands.h"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "zsmeta/common/seed.h"
#include "zsmeta/evalkit/mmd.h"

namespace zsmeta::cli {

namespace fs = std::filesystem;
using dataio::SplitPart;

namespace {

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  body(out);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  write_file(path, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return nlohmann::json::parse(in);
}

fs::path prepare_out(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + cfg.out + "'");
  write_file(dir / "config.txt", [&](std::ostream& o) { write_config(o, cfg); });
  return dir;
}

// shortest text that reads back to the same double
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

// CSV-safe single-line message.
std::string clean(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '"' || c == '\n' || c == '\r') c = ' ';
  return s;
}

Eigen::MatrixXd window_matrix(const dataio::WindowSet& ws) {
  const std::size_t cols = ws.length * ws.features;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(ws.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < ws.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = ws.samples[r].window[c];
  return m;
}

struct Summary {
  std::size_t runs = 0;
  std::optional<double> mean, std;
};

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.runs = xs.size();
  if (!xs.empty()) s.mean = evalkit::stable_mean(xs);
  if (xs.size() >= 2) s.std = evalkit::sample_std(xs);
  return s;
}

constexpr const char* kMetricNames[] = {"ic", "icir", "rank_ic", "rank_icir"};

std::array<std::optional<double>, 4> headline(const evalkit::EvalReport& r) {
  return {r.ic, r.icir, r.rank_ic, r.rank_icir};
}

}  // namespace

dataio::RawPanel load_raw(const ExperimentConfig& cfg) {
  if (!cfg.data.empty()) return dataio::build_panel(dataio::read_price_csv(cfg.data));
  return dataio::build_panel(dataio::gen_synthetic(cfg.synth).rows);
}

PreparedData load_data(const ExperimentConfig& cfg) {
  const auto raw = load_raw(cfg);
  std::optional<dataio::SplitSpec> given;
  if (!cfg.split_file.empty()) given = dataio::split_from_json(read_json(cfg.split_file));
  return prepare_data(raw, cfg.data_opts, given);
}

TrialResult run_trial(const metalearn::TrainConfig& train, const PreparedData& data, std::size_t top_n) {
  auto trained = metalearn::train(data.windows_of(SplitPart::kTrain), data.windows_of(SplitPart::kVal), train);
  auto test = evalkit::evaluate(metalearn::predict_panel(trained.params, data.windows_of(SplitPart::kTest)), top_n);
  return {std::move(trained), std::move(test)};
}

std::array<Variant, 4> ablation_variants(double cc_ratio, double ht_ratio) {
  return {Variant{"intra_only", 0.0, 0.0}, Variant{"intra_inter", cc_ratio, 0.0}, Variant{"intra_hard", 0.0, ht_ratio},
          Variant{"full", cc_ratio, ht_ratio}};
}

void cmd_gen(const ExperimentConfig& cfg) {
  const auto dir = prepare_out(cfg);
  const auto data = dataio::gen_synthetic(cfg.synth);
  write_file(dir / "prices.csv", [&](std::ostream& o) { dataio::write_price_csv(o, data.rows); });
  write_file(dir / "regimes.csv", [&](std::ostream& o) {
    o << "date,regime,index\n";
    for (std::size_t t = 0; t < data.dates.size(); ++t)
      o << data.dates[t] << ',' << data.regimes[t] << ',' << fmt(data.index[t]) << '\n';
  });
  nlohmann::ordered_json meta;
  meta["seed"] = cfg.synth.seed;
  meta["generator"] = dataio::to_json(cfg.synth);
  meta["rows"] = data.rows.size();
  meta["dates"] = data.dates.size();
  meta["tickers"] = data.tickers.size();
  meta["files"] = {"prices.csv", "regimes.csv"};
  write_json(dir / "metadata.json", meta);
}

void cmd_train(const ExperimentConfig& cfg) {
  const auto dir = prepare_out(cfg);
  const auto data = load_data(cfg);
  write_json(dir / "split.json", dataio::to_json(data.split));
  const auto res =
      metalearn::train(data.windows_of(SplitPart::kTrain), data.windows_of(SplitPart::kVal), cfg.train);
  write_json(dir / "checkpoint.json", enc::to_json(res.params));
  write_json(dir / "history.json", metalearn::to_json(res.history));
  write_json(dir / "timing.json", metalearn::timing_json(res.history));
}

void cmd_eval(const ExperimentConfig& cfg) {
  if (cfg.checkpoint.empty()) throw ConfigError("missing required key 'checkpoint'");
  const auto dir = prepare_out(cfg);
  const auto params = enc::params_from_json(read_json(cfg.checkpoint));
  const auto data = load_data(cfg);
  const auto& test = data.windows_of(SplitPart::kTest);
  if (params.dims().input != test.features || params.dims().horizon != test.horizon) {
    throw std::invalid_argument("checkpoint expects " + std::to_string(params.dims().input) + " features and horizon " +
                                std::to_string(params.dims().horizon) + ", data has " + std::to_string(test.features) +
                                " and " + std::to_string(test.horizon));
  }
  auto report = evalkit::evaluate(metalearn::predict_panel(params, test), cfg.top_n);
  const auto seed = cfg.seed.value_or(0);
  report.mmd = evalkit::mmd(
      evalkit::subsample_rows(window_matrix(data.windows_of(SplitPart::kTrain)), cfg.mmd_samples, derive_seed(seed, {40, 0})),
      evalkit::subsample_rows(window_matrix(test), cfg.mmd_samples, derive_seed(seed, {40, 2})));
  write_json(dir / "report.json", evalkit::to_json(report));
  write_file(dir / "daily.csv", [&](std::ostream& o) { evalkit::write_daily_csv(o, report); });
}

void cmd_sweep(const ExperimentConfig& cfg) {
  const auto dir = prepare_out(cfg);
  const auto data = load_data(cfg);
  write_json(dir / "split.json", dataio::to_json(data.split));

  struct Run {
    double cc, ht;
    std::uint64_t seed;
    std::optional<evalkit::EvalReport> report;
    std::string error;
  };
  std::vector<Run> runs;
  for (double cc : cfg.cc_grid)
    for (double ht : cfg.ht_grid)
      for (auto seed : cfg.seeds) {
        Run run{cc, ht, seed, std::nullopt, {}};
        try {
          auto train = cfg.train;
          train.tasks.cc_ratio = cc;
          train.tasks.ht_ratio = ht;
          train.seed = train.meta.seed = train.tasks.seed = seed;
          run.report = run_trial(train, data, cfg.top_n).test;
        } catch (const std::exception& e) {
          run.error = e.what();
        }
        runs.push_back(std::move(run));
      }

  write_file(dir / "sweep.csv", [&](std::ostream& o) {
    o << "row_type,cc,ht,seed,status,runs,ic,icir,rank_ic,rank_icir,ar,ir,icir_cv,error\n";
    for (const auto& r : runs) {
      o << "run," << fmt(r.cc) << ',' << fmt(r.ht) << ',' << r.seed << ',';
      if (r.report) {
        const auto& p = *r.report;
        o << "ok,1," << fmt(p.ic) << ',' << fmt(p.icir) << ',' << fmt(p.rank_ic) << ',' << fmt(p.rank_icir) << ','
          << fmt(p.ar) << ',' << fmt(p.ir) << ",,\n";
      } else {
        o << "error,0,,,,,,,," << clean(r.error) << '\n';
      }
    }
    // per-cell means over the successful seeds
    for (double cc : cfg.cc_grid)
      for (double ht : cfg.ht_grid) {
        std::array<std::vector<double>, 6> cols;
        for (const auto& r : runs) {
          if (r.cc != cc || r.ht != ht || !r.report) continue;
          const auto& p = *r.report;
          const std::array<std::optional<double>, 6> v{p.ic, p.icir, p.rank_ic, p.rank_icir, p.ar, p.ir};
          for (std::size_t k = 0; k < 6; ++k)
            if (v[k]) cols[k].push_back(*v[k]);
        }
        const std::size_t ok = cols[4].size();
        o << "aggregate," << fmt(cc) << ',' << fmt(ht) << ",," << (ok ? "ok" : "error") << ',' << ok;
        for (const auto& c : cols) o << ',' << fmt(summarize(c).mean);
        const auto icir = summarize(cols[1]);
        std::optional<double> cv;
        if (icir.std && icir.mean && *icir.mean != 0.0) cv = *icir.std / *icir.mean;
        o << ',' << fmt(cv) << ',' << (ok ? "" : "no successful runs") << '\n';
      }
  });
}

void cmd_ablate(const ExperimentConfig& cfg) {
  const auto dir = prepare_out(cfg);
  const auto data = load_data(cfg);
  write_json(dir / "split.json", dataio::to_json(data.split));

  const auto variants = ablation_variants(cfg.train.tasks.cc_ratio, cfg.train.tasks.ht_ratio);
  std::array<std::array<std::vector<double>, 4>, 4> values;  // [variant][metric]
  std::array<std::size_t, 4> failures{};
  std::ostringstream runs_csv;
  runs_csv << "variant,cc,ht,seed,status,ic,icir,rank_ic,rank_icir,error\n";
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (auto seed : cfg.seeds) {
      runs_csv << variants[v].name << ',' << fmt(variants[v].cc_ratio) << ',' << fmt(variants[v].ht_ratio) << ','
               << seed << ',';
      try {
        auto train = cfg.train;
        train.source = metalearn::TaskSource::kProposed;
        train.tasks.cc_ratio = variants[v].cc_ratio;
        train.tasks.ht_ratio = variants[v].ht_ratio;
        train.seed = train.meta.seed = train.tasks.seed = seed;
        const auto m = headline(run_trial(train, data, cfg.top_n).test);
        runs_csv << "ok";
        for (std::size_t k = 0; k < 4; ++k) {
          runs_csv << ',' << fmt(m[k]);
          if (m[k]) values[v][k].push_back(*m[k]);
        }
        runs_csv << ",\n";
      } catch (const std::exception& e) {
        ++failures[v];
        runs_csv << "error,,,,," << clean(e.what()) << '\n';
      }
    }
  }
  write_file(dir / "ablation_runs.csv", [&](std::ostream& o) { o << runs_csv.str(); });
  write_file(dir / "ablation.csv", [&](std::ostream& o) {
    o << "variant,cc,ht,runs,failed";
    for (const char* name : kMetricNames) o << ',' << name << "_mean," << name << "_std";
    o << '\n';
    for (std::size_t v = 0; v < variants.size(); ++v) {
      o << variants[v].name << ',' << fmt(variants[v].cc_ratio) << ',' << fmt(variants[v].ht_ratio) << ','
        << cfg.seeds.size() - failures[v] << ',' << failures[v];
      for (std::size_t k = 0; k < 4; ++k) {
        const auto s = summarize(values[v][k]);
        o << ',' << fmt(s.mean) << ',' << fmt(s.std);
      }
      o << '\n';
    }
  });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-shot meta-learning experiments on price panels"};
  app.require_subcommand(1);

  struct Sources {
    std::string config_file;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
  };
  std::map<std::string, Sources> sources;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"gen", "Generate a synthetic price panel"},
      {"train", "Split, window and train an encoder"},
      {"eval", "Evaluate a checkpoint on the test split"},
      {"sweep", "Train and evaluate over a cc x ht grid and several seeds"},
      {"ablate", "Compare the four task-mix variants over several seeds"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    auto& src = sources[name];
    sub->add_option("--config", src.config_file, "key=value config file");
    sub->add_option("--set", src.sets, "override, key=value (repeatable)");
    for (const auto& key : config_keys()) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      sub->add_option_function<std::string>(
          "--" + flag, [&src, key](const std::string& v) { src.flags[key] = v; }, "config key " + key);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const auto& src = sources[command];
  try {
    ExperimentConfig cfg;
    if (!src.config_file.empty())
      for (const auto& [k, v] : read_config(src.config_file)) set_key(cfg, k, v);
    for (const auto& [k, v] : src.flags) set_key(cfg, k, v);
    for (const auto& s : src.sets) {
      const auto [k, v] = parse_assignment(s);
      set_key(cfg, k, v);
    }
    if (!cfg.seed && (command == "train" || command == "sweep" || command == "ablate"))
      throw ConfigError("missing required key 'seed'");
    cfg.propagate_seed();
    cfg.validate();

    if (command == "gen") cmd_gen(cfg);
    else if (command == "train") cmd_train(cfg);
    else if (command == "eval") cmd_eval(cfg);
    else if (command == "sweep") cmd_sweep(cfg);
    else cmd_ablate(cfg);
    return 0;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace zsmeta::cli
