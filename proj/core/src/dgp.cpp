#include "maxzero/dgp.hpp"

#include "json_codec.hpp"
#include "maxzero/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace maxzero {

void DgpSpec::validate() const {
  if (k_theta < 1) throw ConfigInvalid("dgp: k_theta must be >= 1");
  if (n < k_delta + 2) {
    throw ConfigInvalid("dgp: n=" + std::to_string(n) + " must be at least k_delta + 2 = " +
                        std::to_string(k_delta + 2));
  }
  if (delta0.size() != 0 && static_cast<std::size_t>(delta0.size()) != k_delta) {
    throw ConfigInvalid("dgp: delta0 has length " + std::to_string(delta0.size()) +
                        " but k_delta=" + std::to_string(k_delta));
  }
  const auto nvals = static_cast<std::size_t>(alternative.values.size());
  switch (alternative.kind) {
    case AlternativeKind::custom:
      if (nvals == 0) throw ConfigInvalid("dgp: custom alternative needs values");
      [[fallthrough]];
    case AlternativeKind::local:
      if (nvals > k_theta) {
        throw ConfigInvalid("dgp: alternative has " + std::to_string(nvals) +
                            " values but k_theta=" + std::to_string(k_theta));
      }
      break;
    default:
      break;
  }
  if (!std::isfinite(alternative.magnitude) || !alternative.values.allFinite() ||
      !delta0.allFinite()) {
    throw ConfigInvalid("dgp: parameters must be finite");
  }
}

Vector DgpSpec::resolved_delta0() const {
  if (delta0.size() != 0) return delta0;
  return Vector::Ones(static_cast<Eigen::Index>(k_delta));
}

Matrix CovariateDesign::population_covariance() const {
  const auto k = static_cast<Eigen::Index>(k_delta + k_theta);
  switch (covariate_case) {
    case CovariateCase::block_dependent:
    case CovariateCase::cross_block_dependent:
      return loading * loading.transpose() + Matrix::Identity(k, k);
    case CovariateCase::dispersion:
      return scale.array().square().matrix().asDiagonal();
    case CovariateCase::independent:
      break;
  }
  return Matrix::Identity(k, k);
}

namespace {

bool rank_deficient(const Matrix& a) {
  if (a.size() == 0) return false;
  Eigen::BDCSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  const double smax = s.maxCoeff();
  return smax == 0.0 || s.minCoeff() <= 1e-10 * smax;
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& stream) {
  Matrix a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = stream.uniform(-1.0, 1.0);
  }
  return a;
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& stream) {
  Matrix z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = stream.normal();
  }
  return z;
}

}  // namespace

int repair_loading(Matrix& a, RngStream& stream) {
  int repairs = 0;
  // One repair is what the design calls for; the loop only matters for
  // pathological inputs such as A = 0 with unlucky diagonal draws.
  while (rank_deficient(a)) {
    if (repairs == 64) throw NonPositiveDefinite("loading matrix stays rank deficient");
    for (Eigen::Index i = 0; i < std::min(a.rows(), a.cols()); ++i) {
      a(i, i) += stream.uniform(0.0, 1.0);
    }
    ++repairs;
  }
  return repairs;
}

CovariateDesign draw_design(const DgpSpec& spec, RngStream& stream) {
  spec.validate();
  CovariateDesign design;
  design.covariate_case = spec.covariate_case;
  design.k_delta = spec.k_delta;
  design.k_theta = spec.k_theta;
  const auto kd = static_cast<Eigen::Index>(spec.k_delta);
  const auto kt = static_cast<Eigen::Index>(spec.k_theta);
  const Eigen::Index k = kd + kt;
  design.scale = Vector::Ones(k);

  switch (spec.covariate_case) {
    case CovariateCase::independent:
      break;
    case CovariateCase::cross_block_dependent:
      design.loading = uniform_matrix(k, k, stream);
      design.rank_repairs = repair_loading(design.loading, stream);
      break;
    case CovariateCase::block_dependent: {
      design.loading = Matrix::Zero(k, k);
      Matrix ad = uniform_matrix(kd, kd, stream);
      design.rank_repairs += repair_loading(ad, stream);
      Matrix at = uniform_matrix(kt, kt, stream);
      design.rank_repairs += repair_loading(at, stream);
      design.loading.topLeftCorner(kd, kd) = ad;
      design.loading.bottomRightCorner(kt, kt) = at;
      break;
    }
    case CovariateCase::dispersion:
      for (Eigen::Index i = 0; i < kt; ++i) {
        double psi = 1.0;
        switch (spec.dispersion) {
          case DispersionProfile::graded:
            psi = 1.0 + 100.0 * static_cast<double>(i) / static_cast<double>(kt);
            break;
          case DispersionProfile::spike10:
            psi = i == 0 ? 10.0 : 1.0;
            break;
          case DispersionProfile::spike100:
            psi = i == 0 ? 100.0 : 1.0;
            break;
        }
        design.scale[kd + i] = std::sqrt(psi);
      }
      break;
  }
  return design;
}

Matrix sample_covariates(const CovariateDesign& design, std::size_t n, RngStream& stream) {
  const auto k = static_cast<Eigen::Index>(design.k_delta + design.k_theta);
  const auto rows = static_cast<Eigen::Index>(n);
  const bool factor = design.covariate_case == CovariateCase::block_dependent ||
                      design.covariate_case == CovariateCase::cross_block_dependent;
  // Draw order is part of the reproducibility contract: W then V, each k x n
  // filled observation by observation.
  Matrix xt;  // k x n
  if (factor) {
    const Matrix w = normal_matrix(k, rows, stream);
    const Matrix v = normal_matrix(k, rows, stream);
    xt = design.loading * w + v;
  } else {
    xt = normal_matrix(k, rows, stream);
    if (design.scale.size() == k) xt = design.scale.asDiagonal() * xt;
  }
  return xt.transpose();
}

Matrix gen_covariates(const DgpSpec& spec, RngStream& stream) {
  const CovariateDesign design = draw_design(spec, stream);
  return sample_covariates(design, spec.n, stream);
}

Vector theta0(const DgpSpec& spec) {
  const auto kt = static_cast<Eigen::Index>(spec.k_theta);
  Vector theta = Vector::Zero(kt);
  const AlternativeSpec& alt = spec.alternative;
  switch (alt.kind) {
    case AlternativeKind::null:
      break;
    case AlternativeKind::alt_i:
      theta[0] = alt.magnitude;
      break;
    case AlternativeKind::alt_ii:
      for (Eigen::Index i = 0; i < kt; ++i) {
        theta[i] = static_cast<double>(i + 1) / static_cast<double>(kt);
      }
      break;
    case AlternativeKind::alt_iii:
      theta.setConstant(alt.magnitude);
      break;
    case AlternativeKind::local: {
      const double root_n = std::sqrt(static_cast<double>(spec.n));
      if (alt.values.size() == 0) {
        theta[0] = alt.magnitude / root_n;
      } else {
        theta.head(alt.values.size()) = alt.values / root_n;
      }
      break;
    }
    case AlternativeKind::custom:
      theta.head(alt.values.size()) = alt.values;
      break;
  }
  return theta;
}

GeneratedData gen_draw(const DgpSpec& spec, RngStream& stream) {
  CovariateDesign design = draw_design(spec, stream);
  const Matrix x = sample_covariates(design, spec.n, stream);
  const auto kd = static_cast<Eigen::Index>(spec.k_delta);
  const auto kt = static_cast<Eigen::Index>(spec.k_theta);
  const Vector eps = draw_std_normals(stream, spec.n);
  Vector theta = theta0(spec);
  Vector y = x.leftCols(kd) * spec.resolved_delta0() + x.rightCols(kt) * theta + eps;
  return GeneratedData{Dataset(std::move(y), x.leftCols(kd), x.rightCols(kt)), std::move(design),
                       std::move(theta)};
}

Dataset gen_dataset(const DgpSpec& spec, RngStream& stream) {
  return gen_draw(spec, stream).data;
}

std::string_view to_string(CovariateCase c) noexcept {
  switch (c) {
    case CovariateCase::independent: return "independent";
    case CovariateCase::block_dependent: return "block_dependent";
    case CovariateCase::cross_block_dependent: return "cross_block_dependent";
    case CovariateCase::dispersion: return "dispersion";
  }
  return "unknown";
}

std::string_view to_string(DispersionProfile p) noexcept {
  switch (p) {
    case DispersionProfile::graded: return "graded";
    case DispersionProfile::spike10: return "spike10";
    case DispersionProfile::spike100: return "spike100";
  }
  return "unknown";
}

std::string_view to_string(AlternativeKind k) noexcept {
  switch (k) {
    case AlternativeKind::null: return "null";
    case AlternativeKind::alt_i: return "alt_i";
    case AlternativeKind::alt_ii: return "alt_ii";
    case AlternativeKind::alt_iii: return "alt_iii";
    case AlternativeKind::local: return "local";
    case AlternativeKind::custom: return "custom";
  }
  return "unknown";
}

std::string case_label(const DgpSpec& spec) {
  std::string label(to_string(spec.covariate_case));
  if (spec.covariate_case == CovariateCase::dispersion) {
    label += "(" + std::string(to_string(spec.dispersion)) + ")";
  }
  return label;
}

std::string alternative_label(const AlternativeSpec& alt) {
  std::string label(to_string(alt.kind));
  switch (alt.kind) {
    case AlternativeKind::alt_i:
    case AlternativeKind::alt_iii:
      return label + "(" + detail::json(alt.magnitude).dump() + ")";
    case AlternativeKind::local:
      if (alt.values.size() == 0) return label + "(" + detail::json(alt.magnitude).dump() + ")";
      [[fallthrough]];
    case AlternativeKind::custom:
      return label + detail::vector_to_json(alt.values).dump();
    default:
      return label;
  }
}

CovariateCase covariate_case_from_string(std::string_view s) {
  if (s == "independent") return CovariateCase::independent;
  if (s == "block_dependent") return CovariateCase::block_dependent;
  if (s == "cross_block_dependent") return CovariateCase::cross_block_dependent;
  if (s == "dispersion") return CovariateCase::dispersion;
  throw ConfigInvalid("unknown covariate case '" + std::string(s) + "'");
}

DispersionProfile dispersion_from_string(std::string_view s) {
  if (s == "graded" || s == "a") return DispersionProfile::graded;
  if (s == "spike10" || s == "b") return DispersionProfile::spike10;
  if (s == "spike100" || s == "c") return DispersionProfile::spike100;
  throw ConfigInvalid("unknown dispersion profile '" + std::string(s) + "'");
}

AlternativeKind alternative_from_string(std::string_view s) {
  if (s == "null") return AlternativeKind::null;
  if (s == "alt_i" || s == "i") return AlternativeKind::alt_i;
  if (s == "alt_ii" || s == "ii") return AlternativeKind::alt_ii;
  if (s == "alt_iii" || s == "iii") return AlternativeKind::alt_iii;
  if (s == "local") return AlternativeKind::local;
  if (s == "custom") return AlternativeKind::custom;
  throw ConfigInvalid("unknown alternative '" + std::string(s) + "'");
}

namespace detail {

std::size_t get_count(const json& obj, const char* key, std::size_t fallback) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (it->is_number_unsigned()) return it->get<std::size_t>();
  if (it->is_number_float()) {
    const double v = it->get<double>();
    if (v >= 0 && std::floor(v) == v) return static_cast<std::size_t>(v);
  }
  throw ConfigInvalid(std::string("key '") + key + "' must be a nonnegative integer");
}

json dgp_to_json(const DgpSpec& spec) {
  json alt = {{"kind", to_string(spec.alternative.kind)},
              {"magnitude", spec.alternative.magnitude}};
  if (spec.alternative.values.size() != 0) alt["values"] = vector_to_json(spec.alternative.values);
  json j = {{"n", spec.n},
            {"k_delta", spec.k_delta},
            {"k_theta", spec.k_theta},
            {"covariates", to_string(spec.covariate_case)},
            {"alternative", alt},
            {"error", "std_normal"},
            {"seed", spec.seed}};
  if (spec.covariate_case == CovariateCase::dispersion) {
    j["dispersion"] = to_string(spec.dispersion);
  }
  if (spec.delta0.size() != 0) j["delta0"] = vector_to_json(spec.delta0);
  return j;
}

DgpSpec dgp_from_json(const json& j) {
  if (!j.is_object()) throw ConfigInvalid("dgp: expected a table/object");
  DgpSpec spec;
  spec.n = get_count(j, "n", spec.n);
  spec.k_delta = get_count(j, "k_delta", spec.k_delta);
  spec.k_theta = get_count(j, "k_theta", spec.k_theta);
  spec.covariate_case = covariate_case_from_string(
      get_or<std::string>(j, "covariates", std::string(to_string(spec.covariate_case))));
  if (j.contains("dispersion")) {
    spec.dispersion = dispersion_from_string(get_or<std::string>(j, "dispersion", "graded"));
  }
  if (j.contains("delta0")) spec.delta0 = vector_from_json(j.at("delta0"), "dgp.delta0");
  if (get_or<std::string>(j, "error", "std_normal") != "std_normal") {
    throw ConfigInvalid("dgp: only error = \"std_normal\" is supported");
  }
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned()) throw ConfigInvalid("dgp: seed must be a nonnegative integer");
    spec.seed = s.get<std::uint64_t>();
  }
  if (const auto it = j.find("alternative"); it != j.end()) {
    if (it->is_string()) {
      spec.alternative.kind = alternative_from_string(it->get<std::string>());
    } else if (it->is_object()) {
      spec.alternative.kind =
          alternative_from_string(get_or<std::string>(*it, "kind", "null"));
      spec.alternative.magnitude = get_or<double>(*it, "magnitude", spec.alternative.magnitude);
      if (it->contains("values")) {
        spec.alternative.values = vector_from_json(it->at("values"), "dgp.alternative.values");
      }
    } else {
      throw ConfigInvalid("dgp: alternative must be a string or a table");
    }
  }
  spec.validate();
  return spec;
}

}  // namespace detail

std::string dgp_spec_to_json(const DgpSpec& spec) { return detail::dgp_to_json(spec).dump(2); }

DgpSpec dgp_spec_from_json(std::string_view text) {
  detail::json j;
  try {
    j = detail::json::parse(text);
  } catch (const detail::json::parse_error& e) {
    throw ConfigInvalid(std::string("dgp JSON: ") + e.what());
  }
  return detail::dgp_from_json(j);
}

}  // namespace maxzero
