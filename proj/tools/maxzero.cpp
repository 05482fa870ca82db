// maxzero: max-test for many zero restrictions on a dataset, plus the Monte
// Carlo driver.
//
// Exit codes: 0 ok, 2 input/config error, 3 numerical failure.

#include "maxzero/bootstrap.hpp"
#include "maxzero/dataset_io.hpp"
#include "maxzero/errors.hpp"
#include "maxzero/harness.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using maxzero::Method;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

bool is_input_code(maxzero::ErrorCode c) {
  using maxzero::ErrorCode;
  return c == ErrorCode::InputError || c == ErrorCode::ConfigInvalid ||
         c == ErrorCode::IoError || c == ErrorCode::IndexOutOfRange;
}

struct DataOptions {
  std::string data_path;
  std::vector<double> alphas;
  std::vector<std::string> methods;
  std::size_t M = 1000;
  std::string k = "all";
  std::string weights;
  std::string se = "robust";
  std::string wald_se = "robust";
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::string out = "-";
  std::string format = "json";
  std::string weight_reuse = "reuse_sample_weights";
  std::string draws_path;
};

struct McOptions {
  std::string config_path;
  std::optional<std::size_t> replications;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> M;
  std::string out;
  std::string format;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw maxzero::IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw maxzero::IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw maxzero::IoError("failed writing '" + path + "'");
}

std::size_t resolve_k(const std::string& spec, const maxzero::Dataset& data) {
  std::size_t requested = data.k_theta();
  if (spec == "rate") {
    requested = maxzero::rate_rule_k(data.n());
  } else if (spec != "all") {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(spec, &pos);
      if (pos != spec.size() || v < 1) throw std::invalid_argument(spec);
      requested = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw maxzero::InputError("--k must be a positive count, \"rate\" or \"all\"; got '" +
                                spec + "'");
    }
  }
  return maxzero::cap_k(requested, data);
}

std::vector<Method> resolve_methods(const DataOptions& opt, bool compare) {
  if (compare) {
    return {Method::max, Method::max_t, Method::wald_asymptotic, Method::wald_normalized,
            Method::wald_bootstrap, Method::wald_normalized_bootstrap};
  }
  std::vector<Method> methods;
  for (const auto& m : opt.methods) {
    const Method parsed = maxzero::method_from_string(m);
    bool seen = false;
    for (Method x : methods) seen = seen || x == parsed;
    if (!seen) methods.push_back(parsed);
  }
  if (methods.empty()) {
    const bool flat = !opt.weights.empty() &&
                      maxzero::weight_scheme_from_string(opt.weights) == maxzero::WeightScheme::flat;
    methods.push_back(flat ? Method::max : Method::max_t);
  }
  return methods;
}

int run_on_data(const DataOptions& opt, bool compare) {
  const std::string raw = read_file(opt.data_path);
  const maxzero::Dataset data = maxzero::parse_dataset_csv(raw);
  const std::vector<Method> methods = resolve_methods(opt, compare);
  std::vector<double> alphas = opt.alphas.empty() ? std::vector<double>{0.01, 0.05, 0.10}
                                                  : opt.alphas;
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw maxzero::InputError("--alpha must lie in (0, 1)");
  }

  maxzero::MethodRunOptions run;
  run.k_used = resolve_k(opt.k, data);
  run.bootstrap.M = opt.M;
  run.bootstrap.seed = opt.seed;
  run.bootstrap.replication = 0;
  run.bootstrap.workers = opt.workers;
  run.bootstrap.se = maxzero::se_flavor_from_string(opt.se);
  run.bootstrap.weight_reuse = maxzero::weight_reuse_from_string(opt.weight_reuse);
  run.bootstrap.record_draws = !opt.draws_path.empty();
  run.wald_se = maxzero::se_flavor_from_string(opt.wald_se);
  run.bootstrap.validate();

  // Digest covers the data bytes and every setting that can move a number.
  ordered_json settings;
  settings["command"] = compare ? "compare" : "test";
  settings["data_fnv1a"] = maxzero::hex64(maxzero::fnv1a64(raw));
  std::vector<std::string> method_names;
  for (Method m : methods) method_names.emplace_back(maxzero::to_string(m));
  settings["methods"] = method_names;
  settings["alphas"] = alphas;
  settings["M"] = run.bootstrap.M;
  settings["k_used"] = run.k_used;
  settings["se"] = maxzero::to_string(run.bootstrap.se);
  settings["wald_se"] = maxzero::to_string(run.wald_se);
  settings["weight_reuse"] = maxzero::to_string(run.bootstrap.weight_reuse);
  settings["seed"] = opt.seed;
  const std::string digest = maxzero::hex64(maxzero::fnv1a64(settings.dump()));

  const auto outcomes = maxzero::run_methods(data, methods, run);

  ordered_json doc;
  doc["version"] = maxzero::library_version();
  doc["seed"] = opt.seed;
  doc["config_digest"] = digest;
  doc["n"] = data.n();
  doc["k_delta"] = data.k_delta();
  doc["k_theta"] = data.k_theta();
  doc["k_used"] = run.k_used;
  doc["M"] = run.bootstrap.M;
  doc["se"] = maxzero::to_string(run.bootstrap.se);
  doc["wald_se"] = maxzero::to_string(run.wald_se);
  auto results = ordered_json::array();
  bool any_failed = false;
  bool all_failed = true;
  for (const auto& o : outcomes) {
    ordered_json entry;
    if (o.result) {
      entry = ordered_json::parse(maxzero::to_json(*o.result));
      auto decisions = ordered_json::object();
      for (double a : alphas) {
        decisions[ordered_json(a).dump()] = *o.result->p_value < a;
      }
      entry["reject"] = decisions;
      if (o.bootstrap) {
        entry["failed_draws"] = o.bootstrap->failed;
        if (o.bootstrap->degenerate) entry["warning"] = "BootstrapDegenerate";
      }
      entry["error"] = nullptr;
      all_failed = false;
    } else {
      entry["method"] = maxzero::to_string(o.method);
      entry["statistic"] = nullptr;
      entry["p_value"] = nullptr;
      entry["argmax_index"] = nullptr;
      entry["k_used"] = run.k_used;
      entry["n"] = data.n();
      entry["error"] = o.error ? std::string(maxzero::to_string(*o.error)) : "unknown";
      entry["message"] = o.error_message;
      any_failed = true;
      if (o.error && is_input_code(*o.error)) throw maxzero::Error(*o.error, o.error_message);
    }
    results.push_back(entry);
  }
  doc["results"] = results;
  write_text(opt.out, doc.dump(2) + "\n");

  if (!opt.draws_path.empty()) {
    std::ostringstream dump;
    for (const auto& o : outcomes) {
      if (!o.bootstrap || !o.bootstrap->draws) continue;
      dump << "# " << maxzero::to_string(o.method) << '\n';
      maxzero::write_draws_csv(*o.bootstrap, dump);
    }
    write_text(opt.draws_path, dump.str());
  }

  // `compare` tolerates methods that cannot run on this design (Wald with
  // k >= n - k_delta); `test` does not.
  if (compare) return all_failed ? kExitNumerical : kExitOk;
  return any_failed ? kExitNumerical : kExitOk;
}

int run_mc(const McOptions& opt) {
  maxzero::ExperimentConfig cfg = maxzero::load_experiment_config(opt.config_path);
  if (opt.replications) cfg.replications = *opt.replications;
  if (opt.workers) cfg.workers = *opt.workers;
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.dgp.seed = *opt.seed;
    cfg.bootstrap.seed = *opt.seed;
  }
  if (opt.M) cfg.bootstrap.M = *opt.M;
  if (!opt.format.empty()) cfg.output_format = maxzero::report_format_from_string(opt.format);
  std::string out = opt.out.empty() ? cfg.output_path : opt.out;
  if (out.empty()) out = "-";
  cfg.validate();

  const maxzero::ExperimentReport report = maxzero::run_experiment(cfg);
  maxzero::emit_report(report, out, cfg.output_format, cfg.include_timing);

  std::ostream& summary = out == "-" ? std::cerr : std::cout;
  summary << "maxzero " << maxzero::library_version() << " seed=" << report.seed
          << " config_digest=" << report.config_digest << '\n'
          << maxzero::report_summary(report);
  return kExitOk;
}

void add_data_options(CLI::App* cmd, DataOptions& opt, bool compare) {
  cmd->add_option("--data", opt.data_path, "Dataset CSV (columns y, d1..dK, t1..tJ)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--alpha", opt.alphas, "Significance level; repeatable")
      ->allow_extra_args(false);
  if (!compare) {
    cmd->add_option("--method", opt.methods,
                    "max | max_t | wald_asymptotic | wald_normalized | wald_bootstrap | "
                    "wald_normalized_bootstrap; repeatable")
        ->allow_extra_args(false);
    cmd->add_option("--weights", opt.weights, "Weights when --method is absent: flat | tstat");
  }
  cmd->add_option("--M", opt.M, "Bootstrap draws")->capture_default_str();
  cmd->add_option("--k", opt.k, "Parsimonious models: a count, \"rate\" or \"all\"")
      ->capture_default_str();
  cmd->add_option("--se", opt.se, "Max-t standard errors: robust | homoskedastic")
      ->capture_default_str();
  cmd->add_option("--wald-se", opt.wald_se, "Wald covariance: robust | homoskedastic")
      ->capture_default_str();
  cmd->add_option("--weight-reuse", opt.weight_reuse,
                  "reuse_sample_weights | recompute_per_draw")
      ->capture_default_str();
  cmd->add_option("--seed", opt.seed, "Master seed")->capture_default_str();
  cmd->add_option("--workers", opt.workers, "Threads for bootstrap draws (0 = all cores)")
      ->capture_default_str();
  cmd->add_option("--out", opt.out, "Output path, - for stdout")->capture_default_str();
  cmd->add_option("--format", opt.format, "Output format (json)")
      ->check(CLI::IsMember({"json"}))
      ->capture_default_str();
  cmd->add_option("--draws", opt.draws_path, "Write per-draw bootstrap statistics here (CSV)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Max-test for many zero restrictions with a wild bootstrap"};
  app.set_version_flag("--version", std::string(maxzero::library_version()));
  app.require_subcommand(1);

  DataOptions test_opt;
  DataOptions compare_opt;
  McOptions mc_opt;

  CLI::App* test_cmd = app.add_subcommand("test", "Run max-tests on a dataset");
  add_data_options(test_cmd, test_opt, false);

  CLI::App* compare_cmd = app.add_subcommand("compare", "Run every method on a dataset");
  add_data_options(compare_cmd, compare_opt, true);

  CLI::App* mc_cmd = app.add_subcommand("mc", "Run a Monte Carlo experiment from a config");
  mc_cmd->add_option("--config", mc_opt.config_path, "Experiment config (.toml or .json)")
      ->required()
      ->check(CLI::ExistingFile);
  mc_cmd->add_option("--replications", mc_opt.replications, "Override R");
  mc_cmd->add_option("--workers", mc_opt.workers, "Override worker count");
  mc_cmd->add_option("--seed", mc_opt.seed, "Override master seed");
  mc_cmd->add_option("--M", mc_opt.M, "Override bootstrap draws");
  mc_cmd->add_option("--out", mc_opt.out, "Report path, - for stdout");
  mc_cmd->add_option("--format", mc_opt.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*test_cmd) return run_on_data(test_opt, false);
    if (*compare_cmd) return run_on_data(compare_opt, true);
    return run_mc(mc_opt);
  } catch (const maxzero::InputError& e) {
    std::cerr << "maxzero: input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const maxzero::Error& e) {
    std::cerr << "maxzero: " << maxzero::to_string(e.code()) << ": " << e.what() << '\n';
    return is_input_code(e.code()) ? kExitInput : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "maxzero: " << e.what() << '\n';
    return kExitNumerical;
  }
}
