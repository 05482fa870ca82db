#pragma once

#include "maxzero/model.hpp"
#include "maxzero/rng.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace maxzero {

enum class CovariateCase {
  independent,            ///< all columns iid N(0,1)
  block_dependent,        ///< x = A w + v within (nuisance, test) blocks; blocks independent
  cross_block_dependent,  ///< x = A w + v over all k_delta + k_theta columns
  dispersion,             ///< x_delta iid N(0,1); x_theta ~ N(0, Psi) with diagonal Psi
};

/// Diagonal of Psi in the dispersion case.
///   graded:   Psi_ii = 1 + 100 (i - 1) / k_theta
///   spike10:  Psi_11 = 10, others 1
///   spike100: Psi_11 = 100, others 1
enum class DispersionProfile { graded, spike10, spike100 };

enum class AlternativeKind { null, alt_i, alt_ii, alt_iii, local, custom };

/// How theta_0 is built from k_theta and n.
///
///   null     theta_0 = 0
///   alt_i    theta_0 = magnitude e_1
///   alt_ii   theta_0,i = i / k_theta
///   alt_iii  theta_0,i = magnitude for every i
///   local    theta_0 = c / sqrt(n), c = values zero-padded (or magnitude e_1 when empty)
///   custom   theta_0 = values zero-padded to k_theta
struct AlternativeSpec {
  AlternativeKind kind = AlternativeKind::null;
  double magnitude = 0.001;
  Vector values;
};

enum class ErrorDistribution { std_normal };

struct DgpSpec {
  std::size_t n = 100;
  std::size_t k_delta = 0;
  std::size_t k_theta = 10;
  CovariateCase covariate_case = CovariateCase::cross_block_dependent;
  DispersionProfile dispersion = DispersionProfile::graded;
  /// Empty means the default 1_{k_delta}.
  Vector delta0;
  AlternativeSpec alternative;
  ErrorDistribution error = ErrorDistribution::std_normal;
  std::uint64_t seed = 0;

  /// Throws ConfigInvalid on inconsistent dimensions.
  void validate() const;
  [[nodiscard]] Vector resolved_delta0() const;
};

/// Fixed part of a covariate draw: loading matrices and dispersion scales.
///
/// Columns are ordered [x_delta, x_theta]. `loading` is k x k with k =
/// k_delta + k_theta; in the block case it is block diagonal.
struct CovariateDesign {
  CovariateCase covariate_case = CovariateCase::independent;
  std::size_t k_delta = 0;
  std::size_t k_theta = 0;
  Matrix loading;   ///< empty unless a factor case
  Vector scale;     ///< per-column standard deviation multiplier (dispersion case)
  int rank_repairs = 0;

  /// E[x x'] implied by the design.
  [[nodiscard]] Matrix population_covariance() const;
};

/// If A is numerically rank deficient (sigma_min <= 1e-10 sigma_max) adds an
/// independent U[0,1] draw to each diagonal entry, repeating until it is not.
/// Returns the number of repairs applied.
int repair_loading(Matrix& a, RngStream& stream);

[[nodiscard]] CovariateDesign draw_design(const DgpSpec& spec, RngStream& stream);

/// n x (k_delta + k_theta) covariate matrix from an already drawn design.
[[nodiscard]] Matrix sample_covariates(const CovariateDesign& design, std::size_t n,
                                       RngStream& stream);

/// draw_design followed by sample_covariates on the same stream.
[[nodiscard]] Matrix gen_covariates(const DgpSpec& spec, RngStream& stream);

[[nodiscard]] Vector theta0(const DgpSpec& spec);

struct GeneratedData {
  Dataset data;
  CovariateDesign design;
  Vector theta0;
};

/// Full draw: design, covariates, then errors, all from `stream`.
[[nodiscard]] GeneratedData gen_draw(const DgpSpec& spec, RngStream& stream);
[[nodiscard]] Dataset gen_dataset(const DgpSpec& spec, RngStream& stream);

[[nodiscard]] std::string_view to_string(CovariateCase c) noexcept;
[[nodiscard]] std::string_view to_string(DispersionProfile p) noexcept;
[[nodiscard]] std::string_view to_string(AlternativeKind k) noexcept;
/// Human label such as "dispersion(graded)" used in reports.
[[nodiscard]] std::string case_label(const DgpSpec& spec);
[[nodiscard]] std::string alternative_label(const AlternativeSpec& alt);

[[nodiscard]] CovariateCase covariate_case_from_string(std::string_view s);
[[nodiscard]] DispersionProfile dispersion_from_string(std::string_view s);
[[nodiscard]] AlternativeKind alternative_from_string(std::string_view s);

/// JSON text of the spec; parses back to an equal spec.
[[nodiscard]] std::string dgp_spec_to_json(const DgpSpec& spec);
[[nodiscard]] DgpSpec dgp_spec_from_json(std::string_view text);

}  // namespace maxzero
