#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "uafkit/analysis.hpp"
#include "uafkit/datasets.hpp"
#include "uafkit/fitter.hpp"
#include "uafkit/json_io.hpp"
#include "uafkit/network.hpp"
#include "uafkit/targets.hpp"
#include "uafkit/uaf.hpp"

namespace uafkit::cli {
namespace {

// Bad input from the caller: unknown flags, unreadable or malformed files,
// values the library rejects. Maps to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path, const std::string& flag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw UsageError(flag + ": cannot read '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json read_json(const std::string& path, const std::string& flag) {
  const std::string text = read_file(path, flag);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw UsageError(flag + ": malformed JSON in '" + path + "': " + e.what());
  }
}

// Runs a decoder, re-labelling schema and validation failures with the flag
// whose file or value caused them.
template <typename Decode>
auto decode(const std::string& flag, Decode&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

// Writes `content` to stdout when `path` is empty or "-", otherwise to a
// sibling temporary that is renamed over `path` once complete.
void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) {
      throw std::runtime_error("cannot write '" + tmp.string() + "'");
    }
    file << content;
    file.flush();
    if (!file) {
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot replace '" + path + "'");
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("UAFKIT_SEED");
  if (raw == nullptr || *raw == '\0') {
    return std::nullopt;
  }
  const std::string text(raw);
  std::uint64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw UsageError("UAFKIT_SEED: expected a nonnegative integer, got '" + text + "'");
  }
  return value;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// "±x" for a pair that is symmetric at the printed precision, otherwise the values joined by `sep`.
std::string locations_text(const std::vector<double>& xs, const char* sep, int digits) {
  if (xs.empty()) return "-";
  if (xs.size() == 2 && fixed(-xs[0], digits) == fixed(xs[1], digits)) {
    return "±" + fixed(xs[1], digits);
  }
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += sep;
    s += fixed(xs[i], digits);
  }
  return s;
}

std::string row_name(const Preset& p) {
  std::string name = preset_name(p.kind);
  if (p.kind == PresetKind::LeakyRelu) name += "(" + format_double(p.alpha) + ")";
  return name;
}

// Options shared by the subcommands that need a parameter vector.
struct ParamSource {
  std::string preset;
  std::string params_file;
  double alpha = 0.1;

  void add_to(CLI::App& app, bool required) {
    auto* p = app.add_option("--preset", preset, "Preset kind (identity, step, sigmoid, ...)");
    auto* f = app.add_option("--params", params_file,
                             "JSON file with A..E, or a fit result carrying them");
    p->excludes(f);
    f->excludes(p);
    if (required) {
      app.require_option(1, 0);
    }
    app.add_option("--alpha", alpha, "LeakyReLU slope")->capture_default_str();
  }

  bool given() const { return !preset.empty() || !params_file.empty(); }

  PresetKind kind() const {
    return decode("--preset", [&] { return parse_preset_kind(preset); });
  }

  UafParams resolve() const {
    if (!params_file.empty()) {
      const Json j = read_json(params_file, "--params");
      return decode("--params", [&] {
        if (j.is_object() && j.contains("params") && j["params"].is_object()) {
          return params_from_json(j["params"], "params");
        }
        return params_from_json(j, "params");
      });
    }
    if (preset.empty()) throw UsageError("one of --preset or --params is required");
    const PresetKind k = kind();
    return decode("--alpha", [&] { return uafkit::preset(Preset{k, alpha}); });
  }
};

struct Grid {
  double from = -10.0;
  double to = 10.0;
  int n = kDefaultSamples;

  void add_to(CLI::App& app) {
    app.add_option("--from", from, "First sample")->capture_default_str();
    app.add_option("--to", to, "Last sample")->capture_default_str();
    app.add_option("--n", n, "Number of samples")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }

  double at(int i) const {
    if (n == 1) return from;
    if (i == n - 1) return to;
    return from + (to - from) * static_cast<double>(i) / static_cast<double>(n - 1);
  }

  void check() const {
    if (!std::isfinite(from) || !std::isfinite(to)) throw UsageError("--from/--to: must be finite");
    if (n > 1 && !(from < to)) throw UsageError("--from/--to: need from < to");
  }
};

std::string eval_csv(const UafParams& p, const Grid& grid) {
  std::string s = "x,f_uaf\n";
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.at(i);
    s += format_double(x) + "," + format_double(eval_stable(p, x)) + "\n";
  }
  return s;
}

std::string sweep_csv(const UafParams& p, const TargetActivation& t, const Grid& grid) {
  std::string s = "x,f_uaf,f_target,error\n";
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.at(i);
    s += format_double(x) + "," + format_double(eval_stable(p, x)) + "," +
         format_double(target_eval(t, x)) + "," + format_double(approx_error(p, t, x)) + "\n";
  }
  return s;
}

std::string table_text(const RmseTable& t) {
  std::string s;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %10s %10s  %s\n", "activation", "rmse", "max_error",
                "location");
  s += line;
  for (const RmseRow& row : t.rows) {
    std::snprintf(line, sizeof(line), "%-16s %10s %10s  %s\n", row_name(row.kind).c_str(),
                  fixed(row.rmse, 5).c_str(), fixed(row.max_error, 5).c_str(),
                  row.max_error == 0.0 ? "-" : locations_text(row.locations, ", ", 6).c_str());
    s += line;
  }
  return s;
}

// Table columns at table precision, plus the unrounded values for plotting.
std::string table_csv(const RmseTable& t) {
  std::string s = "activation,rmse,max_error,locations,rmse_exact,max_error_exact\n";
  for (const RmseRow& row : t.rows) {
    std::string locs;
    for (std::size_t i = 0; i < row.locations.size(); ++i) {
      if (i) locs += ';';
      locs += format_double(row.locations[i]);
    }
    s += row_name(row.kind) + "," + fixed(row.rmse, 5) + "," + fixed(row.max_error, 5) + "," +
         locs + "," + format_double(row.rmse) + "," + format_double(row.max_error) + "\n";
  }
  return s;
}

std::string presets_text(double alpha) {
  std::string s;
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %-22s %-22s %-22s %-22s %s\n", "kind", "A", "B", "C",
                "D", "E");
  s += line;
  for (PresetKind k : kAllPresetKinds) {
    const UafParams p = preset(Preset{k, alpha});
    std::snprintf(line, sizeof(line), "%-12s %-22s %-22s %-22s %-22s %s\n", preset_name(k),
                  format_double(p.A).c_str(), format_double(p.B).c_str(),
                  format_double(p.C).c_str(), format_double(p.D).c_str(),
                  format_double(p.E).c_str());
    s += line;
  }
  return s;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Universal activation function toolkit", "uafkit");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Sample the UAF on a uniform grid (CSV x,f_uaf)");
  ParamSource eval_src;
  Grid eval_grid;
  std::string eval_out;
  eval_src.add_to(*eval_cmd, true);
  eval_grid.add_to(*eval_cmd);
  eval_cmd->add_option("--output,-o", eval_out, "Output file (default stdout)");

  // presets
  auto* presets_cmd = app.add_subcommand("presets", "Inspect the built-in parameter presets");
  presets_cmd->require_subcommand(1);
  double presets_alpha = 0.1;
  presets_cmd->add_option("--alpha", presets_alpha, "LeakyReLU slope")->capture_default_str();
  auto* list_cmd = presets_cmd->add_subcommand("list", "Table of every preset");
  auto* show_cmd = presets_cmd->add_subcommand("show", "One preset as JSON");
  std::string show_kind;
  show_cmd->add_option("kind", show_kind, "Preset kind")->required();
  show_cmd->add_option("--alpha", presets_alpha, "LeakyReLU slope");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit UAF parameters to a target activation");
  std::string fit_spec_file, fit_builtin, fit_out;
  auto* spec_opt = fit_cmd->add_option("--spec", fit_spec_file, "FitSpec JSON file");
  auto* builtin_opt = fit_cmd->add_option("--builtin", fit_builtin, "Built-in spec name")
                          ->check(CLI::IsMember(builtin_fit_spec_names()));
  spec_opt->excludes(builtin_opt);
  builtin_opt->excludes(spec_opt);
  fit_cmd->require_option(1, 0);
  fit_cmd->add_option("--output,-o", fit_out, "Output file (default stdout)");

  // report
  auto* report_cmd = app.add_subcommand("report", "Approximation-error analysis (JSON)");
  std::string report_kind, report_params, report_out;
  double report_alpha = 0.1;
  Interval report_interval;
  int report_samples = kDefaultSamples;
  report_cmd->add_option("--preset", report_kind, "Target kind")->required();
  report_cmd->add_option("--params", report_params, "Parameters to analyse (default: the preset)");
  report_cmd->add_option("--alpha", report_alpha, "LeakyReLU slope")->capture_default_str();
  report_cmd->add_option("--lo", report_interval.lo, "Interval start")->capture_default_str();
  report_cmd->add_option("--hi", report_interval.hi, "Interval end")->capture_default_str();
  report_cmd->add_option("--samples", report_samples, "Grid size for the RMSE")
      ->capture_default_str();
  report_cmd->add_option("--output,-o", report_out, "Output file (default stdout)");

  // table
  auto* table_cmd = app.add_subcommand("table", "RMSE and max error of every preset");
  int table_samples = kDefaultSamples;
  double table_alpha = 0.1;
  std::string table_format = "text", table_out;
  table_cmd->add_option("--samples", table_samples, "Grid size")->capture_default_str();
  table_cmd->add_option("--alpha", table_alpha, "LeakyReLU slope")->capture_default_str();
  table_cmd->add_option("--format", table_format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}))
      ->capture_default_str();
  table_cmd->add_option("--output,-o", table_out, "Output file (default stdout)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a small network on a synthetic dataset");
  std::string train_config, train_dataset, train_out, train_csv;
  int train_samples = 2000;
  double train_snr = 30.0, train_spread = 1.0;
  std::optional<std::uint64_t> train_data_seed;
  train_cmd->add_option("--config", train_config, "NetworkConfig JSON file")->required();
  train_cmd->add_option("--dataset", train_dataset, "gas or blobs")
      ->required()
      ->check(CLI::IsMember({"gas", "blobs"}));
  train_cmd->add_option("--samples", train_samples, "Dataset size")->capture_default_str();
  train_cmd->add_option("--snr", train_snr, "Gas-analogue SNR in dB")->capture_default_str();
  train_cmd->add_option("--spread", train_spread, "Blob standard deviation")->capture_default_str();
  train_cmd->add_option("--data-seed", train_data_seed, "Dataset seed (default: network seed)");
  train_cmd->add_option("--output,-o", train_out, "TrainReport JSON file (default stdout)");
  train_cmd->add_option("--csv", train_csv, "Per-epoch trajectory CSV file");

  // sweep
  auto* sweep_cmd =
      app.add_subcommand("sweep", "UAF against a target (CSV x,f_uaf,f_target,error)");
  ParamSource sweep_src;
  Grid sweep_grid;
  std::string sweep_target, sweep_out;
  sweep_src.add_to(*sweep_cmd, false);
  sweep_grid.add_to(*sweep_cmd);
  sweep_cmd->add_option("--target", sweep_target, "Target kind (default: the preset)");
  sweep_cmd->add_option("--output,-o", sweep_out, "Output file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "uafkit: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << "Run '" << sub->get_name() << " --help' for usage.\n";
    return kExitUsage;
  }

  if (*eval_cmd) {
    eval_grid.check();
    emit(eval_out, eval_csv(eval_src.resolve(), eval_grid), out);
  } else if (*presets_cmd) {
    if (*list_cmd) {
      out << decode("--alpha", [&] { return presets_text(presets_alpha); });
    } else {
      const PresetKind k = decode("kind", [&] { return parse_preset_kind(show_kind); });
      const UafParams p = decode("--alpha", [&] { return preset(Preset{k, presets_alpha}); });
      out << dump(to_json(p));
    }
  } else if (*fit_cmd) {
    FitSpec spec;
    if (!fit_spec_file.empty()) {
      const Json j = read_json(fit_spec_file, "--spec");
      spec = decode("--spec", [&] { return fit_spec_from_json(j); });
    } else {
      spec = builtin_fit_spec(fit_builtin);
    }
    emit(fit_out, dump(to_json(fit(spec))), out);
  } else if (*report_cmd) {
    const PresetKind k = decode("--preset", [&] { return parse_preset_kind(report_kind); });
    const TargetActivation target(k, report_alpha);
    ParamSource src{report_params.empty() ? report_kind : "", report_params, report_alpha};
    const UafParams p = src.resolve();
    const ErrorReport rep = decode("--lo/--hi", [&] {
      validate(report_interval);
      if (report_samples < 2) throw std::invalid_argument("--samples must be at least 2");
      return error_report(p, target, report_interval, report_samples);
    });
    emit(report_out, dump(to_json(rep)), out);
  } else if (*table_cmd) {
    if (table_samples < 2) throw UsageError("--samples: must be at least 2");
    const RmseTable t = decode("--alpha", [&] { return rmse_table(table_samples, table_alpha); });
    std::string text;
    if (table_format == "csv") {
      text = table_csv(t);
    } else if (table_format == "json") {
      text = dump(to_json(t));
    } else {
      text = table_text(t);
    }
    emit(table_out, text, out);
  } else if (*train_cmd) {
    const Json j = read_json(train_config, "--config");
    NetworkConfig config = decode("--config", [&] { return network_config_from_json(j); });
    if (const auto seed = seed_from_env()) config.seed = *seed;
    const std::uint64_t data_seed = train_data_seed.value_or(config.seed);
    const int n_in = config.layer_sizes.front();
    const int n_out = config.layer_sizes.back();
    const Dataset data = decode("--dataset", [&] {
      return train_dataset == "gas"
                 ? make_gas_analogue(data_seed, train_samples, n_in, n_out, train_snr)
                 : make_blobs(data_seed, train_samples, n_out, n_in, train_spread);
    });
    const TrainReport report = train(config, data);
    emit(train_out, dump(to_json(report)), out);
    if (!train_csv.empty()) {
      std::ostringstream csv;
      write_trajectory_csv(csv, report);
      emit(train_csv, csv.str(), out);
    }
    if (report.failed) {
      err << "uafkit: training diverged at epoch " << report.failure_epoch << "\n";
      return kExitFailure;
    }
  } else if (*sweep_cmd) {
    if (!sweep_src.given()) throw UsageError("one of --preset or --params is required");
    if (sweep_target.empty() && sweep_src.preset.empty()) {
      throw UsageError("--target: required when parameters come from --params");
    }
    const std::string target_name = sweep_target.empty() ? sweep_src.preset : sweep_target;
    const PresetKind k = decode("--target", [&] { return parse_preset_kind(target_name); });
    sweep_grid.check();
    const TargetActivation target = decode("--alpha", [&] {
      const TargetActivation t(k, sweep_src.alpha);
      if (k == PresetKind::LeakyRelu) preset(Preset{k, sweep_src.alpha});
      return t;
    });
    emit(sweep_out, sweep_csv(sweep_src.resolve(), target, sweep_grid), out);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const UsageError& e) {
    err << "uafkit: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "uafkit: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace uafkit::cli
