#pragma once

#include "maxzero/bootstrap.hpp"
#include "maxzero/config_reader.hpp"
#include "maxzero/dgp.hpp"
#include "maxzero/errors.hpp"
#include "maxzero/inference.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace maxzero {

/// Library version, e.g. "0.1.0".
[[nodiscard]] std::string_view library_version() noexcept;

/// 64-bit FNV-1a, used as a short digest of canonical config text.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes) noexcept;
[[nodiscard]] std::string hex64(std::uint64_t value);

/// Number of parsimonious models: a fixed count or the rate rule in n.
struct KRule {
  bool rate = false;
  std::size_t fixed = 10;

  [[nodiscard]] std::size_t resolve(std::size_t n) const;
  [[nodiscard]] std::string label() const;
};

enum class ReportFormat { csv, json };

[[nodiscard]] ReportFormat report_format_from_string(std::string_view s);

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  DgpSpec dgp;
  std::vector<Method> methods{Method::max, Method::max_t};
  KRule k_rule;
  std::vector<double> levels{0.01, 0.05, 0.10};
  std::size_t replications = 1000;
  /// M, weight reuse and the se flavor of the max-t weights.
  BootstrapConfig bootstrap;
  /// Covariance flavor of every Wald variant.
  SeFlavor wald_se = SeFlavor::homoskedastic;
  std::size_t workers = 0;
  std::string output_path;
  ReportFormat output_format = ReportFormat::csv;
  /// Keep per-replication p-values in the report (for calibration checks).
  bool record_p_values = false;
  /// Emit wall time in reports. Off by default so reports are byte-stable.
  bool include_timing = false;

  /// Throws ConfigInvalid.
  void validate() const;
};

/// Builds a config from JSON text (see configs/README.md for the schema).
/// Missing keys take the defaults above; dgp.k_theta defaults to the k rule
/// evaluated at dgp.n and dgp.seed mirrors the experiment seed.
[[nodiscard]] ExperimentConfig experiment_config_from_json(std::string_view json_text);
[[nodiscard]] ExperimentConfig load_experiment_config(const std::filesystem::path& path);
[[nodiscard]] ExperimentConfig parse_experiment_config(std::string_view text,
                                                       ConfigFormat format);
/// Canonical JSON of a config. Output paths, worker counts and the timing
/// switch are left out since they do not change results.
[[nodiscard]] std::string experiment_config_to_json(const ExperimentConfig& cfg);
[[nodiscard]] std::string config_digest(const ExperimentConfig& cfg);

struct RejectionRow {
  Method method = Method::max;
  double alpha = 0.05;
  double reject_rate = 0.0;
  std::size_t rejections = 0;
  std::size_t valid = 0;

  bool operator==(const RejectionRow&) const = default;
};

struct ReplicationFailure {
  std::size_t replication = 0;
  std::string method;  ///< "data" when generation itself failed
  std::string error;   ///< ErrorCode name
  std::string message;

  bool operator==(const ReplicationFailure&) const = default;
};

struct ExperimentReport {
  std::string name;
  std::string version;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::size_t replications = 0;
  std::size_t M = 0;
  std::size_t n = 0;
  std::size_t k_delta = 0;
  std::size_t k_theta = 0;
  std::string covariate_case;
  std::string alternative;
  std::vector<RejectionRow> rows;
  std::vector<ReplicationFailure> failures;
  /// Per method, one p-value per replication (NaN when that run failed).
  std::map<std::string, std::vector<double>> p_values;
  double wall_seconds = 0.0;

  bool operator==(const ExperimentReport&) const = default;
};

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

/// Runs every replication r = 1..R on a worker pool. Replication r reads its
/// data from stream (r, 0) and bootstrap draw j from stream (r, j), so the
/// report does not depend on the worker count. MAXZERO_WORKERS overrides
/// cfg.workers. Per-replication failures are recorded; more than 1% of
/// replications failing for any method is fatal.
[[nodiscard]] ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                              const ProgressCallback& progress = {});

/// Methods requested for one dataset: the p-value of each, sharing draws
/// where possible. Exposed for the CLI.
struct MethodOutcome {
  Method method = Method::max;
  std::optional<TestResult> result;
  std::optional<BootstrapOutcome> bootstrap;
  std::optional<ErrorCode> error;
  std::string error_message;
};

struct MethodRunOptions {
  BootstrapConfig bootstrap;
  SeFlavor wald_se = SeFlavor::homoskedastic;
  std::size_t k_used = 10;
};

/// Runs `methods` on one dataset. Failures of individual methods are
/// captured in the outcome rather than thrown.
[[nodiscard]] std::vector<MethodOutcome> run_methods(const Dataset& data,
                                                     const std::vector<Method>& methods,
                                                     const MethodRunOptions& options);

[[nodiscard]] std::string report_to_csv(const ExperimentReport& report);
[[nodiscard]] std::string report_to_json(const ExperimentReport& report,
                                         bool include_timing = false);
[[nodiscard]] ExperimentReport report_from_json(std::string_view text);

/// Writes the report to `path` ("-" for stdout). Throws IoError.
void emit_report(const ExperimentReport& report, const std::filesystem::path& path,
                 ReportFormat format, bool include_timing = false);

/// Fixed-width table for terminals.
[[nodiscard]] std::string report_summary(const ExperimentReport& report);

}  // namespace maxzero
