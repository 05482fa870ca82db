#include "maxzero/harness.hpp"

#include "json_codec.hpp"
#include "maxzero/dataset_io.hpp"
#include "maxzero/errors.hpp"
#include "maxzero/parallel.hpp"
#include "maxzero/rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>

#ifndef MAXZERO_VERSION_STRING
#define MAXZERO_VERSION_STRING "0.0.0"
#endif

namespace maxzero {

using detail::json;

std::string_view library_version() noexcept { return MAXZERO_VERSION_STRING; }

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::size_t KRule::resolve(std::size_t n) const { return rate ? rate_rule_k(n) : fixed; }

std::string KRule::label() const { return rate ? "rate" : std::to_string(fixed); }

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw ConfigInvalid("unknown output format '" + std::string(s) + "' (csv|json)");
}

void ExperimentConfig::validate() const {
  if (replications < 1) throw ConfigInvalid("replications must be >= 1");
  if (methods.empty()) throw ConfigInvalid("at least one method is required");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    for (std::size_t j = i + 1; j < methods.size(); ++j) {
      if (methods[i] == methods[j]) {
        throw ConfigInvalid("method '" + std::string(to_string(methods[i])) + "' listed twice");
      }
    }
  }
  if (levels.empty()) throw ConfigInvalid("at least one significance level is required");
  for (double a : levels) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigInvalid("significance levels must lie in (0, 1)");
  }
  if (!k_rule.rate && k_rule.fixed < 1) throw ConfigInvalid("k must be >= 1");
  bootstrap.validate();
  dgp.validate();
  if (dgp.n < dgp.k_delta + 2) throw ConfigInvalid("dgp.n must be at least k_delta + 2");
  const std::size_t k = std::min(k_rule.resolve(dgp.n), dgp.k_theta);
  for (Method m : methods) {
    if (!is_max_family(m) && dgp.n <= dgp.k_delta + k) {
      throw ConfigInvalid("method '" + std::string(to_string(m)) + "' needs n > k_delta + k (n=" +
                          std::to_string(dgp.n) + ", k_delta=" + std::to_string(dgp.k_delta) +
                          ", k=" + std::to_string(k) + "); only max and max_t apply here");
    }
  }
}

namespace {

KRule k_rule_from_json(const json& j) {
  KRule rule;
  const auto it = j.find("k");
  if (it == j.end() || it->is_null()) return rule;
  if (it->is_string()) {
    if (it->get<std::string>() != "rate") throw ConfigInvalid("k must be a count or \"rate\"");
    rule.rate = true;
    return rule;
  }
  rule.fixed = detail::get_count(j, "k", rule.fixed);
  return rule;
}

}  // namespace

ExperimentConfig experiment_config_from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigInvalid(std::string("config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigInvalid("config must be a table/object");

  static const char* const known[] = {"name",      "seed",      "replications", "workers",
                                      "methods",   "alphas",    "k",            "se",
                                      "wald_se",   "dgp",       "bootstrap",    "output",
                                      "record_p_values",        "include_timing"};
  for (const auto& item : j.items()) {
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return item.key() == k; }) == std::end(known)) {
      throw ConfigInvalid("unknown config key '" + item.key() + "'");
    }
  }

  ExperimentConfig cfg;
  cfg.name = detail::get_or<std::string>(j, "name", "");
  json dgp_json = j.value("dgp", json::object());
  if (!dgp_json.is_object()) throw ConfigInvalid("dgp must be a table/object");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigInvalid("seed must be a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  } else if (dgp_json.contains("seed") && dgp_json["seed"].is_number_unsigned()) {
    cfg.seed = dgp_json["seed"].get<std::uint64_t>();
  }
  cfg.replications = detail::get_count(j, "replications", cfg.replications);
  cfg.workers = detail::get_count(j, "workers", cfg.workers);
  cfg.k_rule = k_rule_from_json(j);
  if (j.contains("methods")) {
    const json& m = j["methods"];
    if (!m.is_array()) throw ConfigInvalid("methods must be an array of strings");
    cfg.methods.clear();
    for (const auto& e : m) {
      if (!e.is_string()) throw ConfigInvalid("methods must be an array of strings");
      cfg.methods.push_back(method_from_string(e.get<std::string>()));
    }
  }
  if (j.contains("alphas")) {
    const Vector a = detail::vector_from_json(j["alphas"], "alphas");
    cfg.levels.assign(a.data(), a.data() + a.size());
  }
  cfg.bootstrap.se = se_flavor_from_string(detail::get_or<std::string>(j, "se", "robust"));
  cfg.wald_se = se_flavor_from_string(detail::get_or<std::string>(j, "wald_se", "homoskedastic"));
  cfg.record_p_values = detail::get_or<bool>(j, "record_p_values", false);
  cfg.include_timing = detail::get_or<bool>(j, "include_timing", false);

  if (const auto it = j.find("bootstrap"); it != j.end()) {
    if (!it->is_object()) throw ConfigInvalid("bootstrap must be a table/object");
    cfg.bootstrap.M = detail::get_count(*it, "M", cfg.bootstrap.M);
    cfg.bootstrap.weight_reuse = weight_reuse_from_string(
        detail::get_or<std::string>(*it, "weight_reuse", "reuse_sample_weights"));
  }
  if (const auto it = j.find("output"); it != j.end()) {
    if (!it->is_object()) throw ConfigInvalid("output must be a table/object");
    cfg.output_path = detail::get_or<std::string>(*it, "path", "");
    cfg.output_format = report_format_from_string(detail::get_or<std::string>(*it, "format", "csv"));
  }

  dgp_json["seed"] = cfg.seed;
  if (!dgp_json.contains("n")) throw ConfigInvalid("dgp.n is required");
  if (!dgp_json.contains("k_theta")) {
    const std::size_t n = detail::get_count(dgp_json, "n", 0);
    if (n < 2) throw ConfigInvalid("dgp.n must be >= 2");
    dgp_json["k_theta"] = cfg.k_rule.resolve(n);
  }
  cfg.dgp = detail::dgp_from_json(dgp_json);
  cfg.bootstrap.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_experiment_config(std::string_view text, ConfigFormat format) {
  return experiment_config_from_json(config_text_to_json(text, format));
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_config_as_json(path));
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["replications"] = cfg.replications;
  std::vector<std::string> methods;
  for (Method m : cfg.methods) methods.emplace_back(to_string(m));
  j["methods"] = methods;
  j["alphas"] = cfg.levels;
  if (cfg.k_rule.rate) {
    j["k"] = "rate";
  } else {
    j["k"] = cfg.k_rule.fixed;
  }
  j["se"] = to_string(cfg.bootstrap.se);
  j["wald_se"] = to_string(cfg.wald_se);
  j["record_p_values"] = cfg.record_p_values;
  j["bootstrap"] = {{"M", cfg.bootstrap.M},
                    {"weight_reuse", to_string(cfg.bootstrap.weight_reuse)}};
  j["dgp"] = detail::dgp_to_json(cfg.dgp);
  return j.dump();
}

std::string config_digest(const ExperimentConfig& cfg) {
  return hex64(fnv1a64(experiment_config_to_json(cfg)));
}

std::vector<MethodOutcome> run_methods(const Dataset& data, const std::vector<Method>& methods,
                                       const MethodRunOptions& options) {
  const LinearResponse model(data.k_delta());
  const std::size_t n = data.n();
  const std::size_t k = options.k_used;
  std::vector<MethodOutcome> out(methods.size());
  for (std::size_t i = 0; i < methods.size(); ++i) out[i].method = methods[i];

  auto record_error = [&](std::size_t i, const Error& e) {
    out[i].error = e.code();
    out[i].error_message = e.what();
  };
  auto indices_of = [&](auto pred) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < methods.size(); ++i) {
      if (pred(methods[i])) idx.push_back(i);
    }
    return idx;
  };

  // Max family: one set of draws for every weight scheme.
  const auto max_idx = indices_of(is_max_family);
  if (!max_idx.empty()) {
    std::vector<WeightScheme> schemes;
    for (std::size_t i : max_idx) {
      schemes.push_back(methods[i] == Method::max ? WeightScheme::flat : WeightScheme::inv_se);
    }
    try {
      const auto outcomes = max_bootstrap_multi(data, model, k, schemes, options.bootstrap);
      for (std::size_t s = 0; s < max_idx.size(); ++s) {
        TestResult r;
        r.method = methods[max_idx[s]];
        r.statistic = outcomes[s].observed;
        r.p_value = outcomes[s].p_value;
        r.argmax_index = outcomes[s].argmax_index;
        r.k_used = k;
        r.n = n;
        out[max_idx[s]].result = r;
        out[max_idx[s]].bootstrap = outcomes[s];
      }
    } catch (const Error& e) {
      for (std::size_t i : max_idx) record_error(i, e);
    }
  }

  const auto asy_idx = indices_of([](Method m) {
    return m == Method::wald_asymptotic || m == Method::wald_normalized;
  });
  if (!asy_idx.empty()) {
    try {
      const FullFit fit = fit_full(data, model, k, options.wald_se);
      const TestResult w = wald_statistic(fit, n);
      for (std::size_t i : asy_idx) {
        out[i].result = methods[i] == Method::wald_asymptotic ? w : normalized_wald(w, k);
      }
    } catch (const Error& e) {
      for (std::size_t i : asy_idx) record_error(i, e);
    }
  }

  const auto boot_idx = indices_of([](Method m) {
    return m == Method::wald_bootstrap || m == Method::wald_normalized_bootstrap;
  });
  if (!boot_idx.empty()) {
    try {
      BootstrapConfig bcfg = options.bootstrap;
      bcfg.se = options.wald_se;
      const WaldBootstrapOutcome wb = wald_bootstrap(data, model, k, bcfg);
      for (std::size_t i : boot_idx) {
        const bool plain = methods[i] == Method::wald_bootstrap;
        const BootstrapOutcome& o = plain ? wb.wald : wb.normalized;
        TestResult r;
        r.method = methods[i];
        r.statistic = o.observed;
        r.p_value = o.p_value;
        r.k_used = k;
        r.n = n;
        out[i].result = r;
        out[i].bootstrap = o;
      }
    } catch (const Error& e) {
      for (std::size_t i : boot_idx) record_error(i, e);
    }
  }
  return out;
}

namespace {

std::size_t workers_from_env(std::size_t fallback) {
  const char* raw = std::getenv("MAXZERO_WORKERS");
  if (raw == nullptr || *raw == '\0') return fallback;
  const std::string_view s(raw);
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigInvalid("MAXZERO_WORKERS must be a nonnegative integer, got '" +
                        std::string(s) + "'");
  }
  return value;
}

struct ReplicationResult {
  std::vector<double> p;  // per method, NaN on failure
  std::vector<ReplicationFailure> failures;
};

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressCallback& progress) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t workers = resolve_workers(workers_from_env(cfg.workers));
  const std::size_t R = cfg.replications;
  const std::size_t k_requested = cfg.k_rule.resolve(cfg.dgp.n);
  const std::size_t method_count = cfg.methods.size();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<ReplicationResult> results(R);
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  parallel_for(R, workers, [&](std::size_t idx) {
    const std::size_t r = idx + 1;
    ReplicationResult& rr = results[idx];
    rr.p.assign(method_count, nan);
    try {
      RngStream stream(cfg.seed, stream_id(r, 0));
      const Dataset data = gen_dataset(cfg.dgp, stream);
      MethodRunOptions opt;
      opt.bootstrap = cfg.bootstrap;
      opt.bootstrap.seed = cfg.seed;
      opt.bootstrap.replication = r;
      opt.bootstrap.workers = 1;
      opt.bootstrap.record_draws = false;
      opt.wald_se = cfg.wald_se;
      opt.k_used = cap_k(k_requested, data);
      const auto outcomes = run_methods(data, cfg.methods, opt);
      for (std::size_t m = 0; m < method_count; ++m) {
        if (outcomes[m].result && outcomes[m].result->p_value) {
          rr.p[m] = *outcomes[m].result->p_value;
        } else if (outcomes[m].error) {
          rr.failures.push_back({r, std::string(to_string(cfg.methods[m])),
                                 std::string(to_string(*outcomes[m].error)),
                                 outcomes[m].error_message});
        }
      }
    } catch (const Error& e) {
      rr.failures.push_back({r, "data", std::string(to_string(e.code())), e.what()});
    }
    if (progress) {
      const std::size_t d = done.fetch_add(1) + 1;
      std::lock_guard lock(progress_mutex);
      progress(d, R);
    }
  });

  ExperimentReport report;
  report.name = cfg.name;
  report.version = std::string(library_version());
  report.config_digest = config_digest(cfg);
  report.seed = cfg.seed;
  report.replications = R;
  report.M = cfg.bootstrap.M;
  report.n = cfg.dgp.n;
  report.k_delta = cfg.dgp.k_delta;
  report.k_theta = std::min(k_requested, cfg.dgp.k_theta);
  report.covariate_case = case_label(cfg.dgp);
  report.alternative = alternative_label(cfg.dgp.alternative);

  for (const auto& rr : results) {
    report.failures.insert(report.failures.end(), rr.failures.begin(), rr.failures.end());
  }
  const double budget = 0.01 * static_cast<double>(R);
  for (std::size_t m = 0; m < method_count; ++m) {
    std::size_t valid = 0;
    for (const auto& rr : results) valid += std::isnan(rr.p[m]) ? 0 : 1;
    const std::size_t failed = R - valid;
    if (static_cast<double>(failed) > budget) {
      // Surface the first failure of this method with its own error code.
      ErrorCode code = ErrorCode::BootstrapDegenerate;
      std::string detail;
      for (const auto& f : report.failures) {
        if (f.method != to_string(cfg.methods[m]) && f.method != "data") continue;
        for (int c = 0; c <= static_cast<int>(ErrorCode::IoError); ++c) {
          if (f.error == to_string(static_cast<ErrorCode>(c))) code = static_cast<ErrorCode>(c);
        }
        detail = " (replication " + std::to_string(f.replication) + ": " + f.message + ")";
        break;
      }
      throw Error(code, std::string(to_string(cfg.methods[m])) + ": " + std::to_string(failed) +
                            " of " + std::to_string(R) + " replications failed" + detail);
    }
    for (double alpha : cfg.levels) {
      RejectionRow row;
      row.method = cfg.methods[m];
      row.alpha = alpha;
      row.valid = valid;
      for (const auto& rr : results) {
        if (!std::isnan(rr.p[m]) && rr.p[m] < alpha) ++row.rejections;
      }
      row.reject_rate = static_cast<double>(row.rejections) / static_cast<double>(valid);
      report.rows.push_back(row);
    }
    if (cfg.record_p_values) {
      auto& pv = report.p_values[std::string(to_string(cfg.methods[m]))];
      pv.reserve(R);
      for (const auto& rr : results) pv.push_back(rr.p[m]);
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "method,alpha,reject_rate,R,M,n,k_delta,k_theta,case,alternative,seed\n";
  for (const RejectionRow& row : report.rows) {
    out << to_string(row.method) << ',' << format_double(row.alpha) << ','
        << format_double(row.reject_rate) << ',' << report.replications << ',' << report.M << ','
        << report.n << ',' << report.k_delta << ',' << report.k_theta << ','
        << csv_field(report.covariate_case) << ',' << csv_field(report.alternative) << ','
        << report.seed << '\n';
  }
  return out.str();
}

std::string report_to_json(const ExperimentReport& report, bool include_timing) {
  nlohmann::ordered_json j;
  j["name"] = report.name;
  j["version"] = report.version;
  j["config_digest"] = report.config_digest;
  j["seed"] = report.seed;
  j["replications"] = report.replications;
  j["M"] = report.M;
  j["n"] = report.n;
  j["k_delta"] = report.k_delta;
  j["k_theta"] = report.k_theta;
  j["covariate_case"] = report.covariate_case;
  j["alternative"] = report.alternative;
  auto rows = nlohmann::ordered_json::array();
  for (const RejectionRow& row : report.rows) {
    rows.push_back({{"method", to_string(row.method)},
                    {"alpha", row.alpha},
                    {"reject_rate", row.reject_rate},
                    {"rejections", row.rejections},
                    {"valid", row.valid}});
  }
  j["results"] = rows;
  auto failures = nlohmann::ordered_json::array();
  for (const ReplicationFailure& f : report.failures) {
    failures.push_back({{"replication", f.replication},
                        {"method", f.method},
                        {"error", f.error},
                        {"message", f.message}});
  }
  j["failures"] = failures;
  if (!report.p_values.empty()) {
    auto pv = nlohmann::ordered_json::object();
    for (const auto& [method, values] : report.p_values) {
      auto arr = nlohmann::ordered_json::array();
      for (double v : values) {
        if (std::isnan(v)) {
          arr.push_back(nullptr);
        } else {
          arr.push_back(v);
        }
      }
      pv[method] = arr;
    }
    j["p_values"] = pv;
  }
  if (include_timing) j["wall_seconds"] = report.wall_seconds;
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("report JSON: ") + e.what());
  }
  try {
    ExperimentReport r;
    r.name = j.at("name").get<std::string>();
    r.version = j.at("version").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.replications = j.at("replications").get<std::size_t>();
    r.M = j.at("M").get<std::size_t>();
    r.n = j.at("n").get<std::size_t>();
    r.k_delta = j.at("k_delta").get<std::size_t>();
    r.k_theta = j.at("k_theta").get<std::size_t>();
    r.covariate_case = j.at("covariate_case").get<std::string>();
    r.alternative = j.at("alternative").get<std::string>();
    for (const auto& row : j.at("results")) {
      RejectionRow rr;
      rr.method = method_from_string(row.at("method").get<std::string>());
      rr.alpha = row.at("alpha").get<double>();
      rr.reject_rate = row.at("reject_rate").get<double>();
      rr.rejections = row.at("rejections").get<std::size_t>();
      rr.valid = row.at("valid").get<std::size_t>();
      r.rows.push_back(rr);
    }
    for (const auto& f : j.at("failures")) {
      r.failures.push_back({f.at("replication").get<std::size_t>(),
                            f.at("method").get<std::string>(), f.at("error").get<std::string>(),
                            f.at("message").get<std::string>()});
    }
    if (const auto it = j.find("p_values"); it != j.end()) {
      for (const auto& item : it->items()) {
        auto& dest = r.p_values[item.key()];
        for (const auto& v : item.value()) {
          dest.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                     : v.get<double>());
        }
      }
    }
    if (const auto it = j.find("wall_seconds"); it != j.end()) {
      r.wall_seconds = it->get<double>();
    }
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("report JSON: ") + e.what());
  }
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& path,
                 ReportFormat format, bool include_timing) {
  const std::string text =
      format == ReportFormat::csv ? report_to_csv(report) : report_to_json(report, include_timing);
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw IoError("failed writing report to stdout");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string report_summary(const ExperimentReport& report) {
  std::ostringstream out;
  out << (report.name.empty() ? std::string("experiment") : report.name) << ": n=" << report.n
      << " k_delta=" << report.k_delta << " k=" << report.k_theta
      << " case=" << report.covariate_case << " alternative=" << report.alternative
      << " R=" << report.replications << " M=" << report.M << " seed=" << report.seed << '\n';
  out << std::left << std::setw(28) << "method" << std::right << std::setw(8) << "alpha"
      << std::setw(12) << "reject" << std::setw(8) << "valid" << '\n';
  for (const RejectionRow& row : report.rows) {
    out << std::left << std::setw(28) << to_string(row.method) << std::right << std::setw(8)
        << std::fixed << std::setprecision(2) << row.alpha << std::setw(12)
        << std::setprecision(3) << row.reject_rate << std::setw(8) << row.valid << '\n';
  }
  if (!report.failures.empty()) {
    out << report.failures.size() << " method failure(s) recorded\n";
  }
  return out.str();
}

}  // namespace maxzero
