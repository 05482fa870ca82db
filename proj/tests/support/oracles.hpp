#pragma once

// Reference implementations used only by tests. They deliberately avoid the
// library's own numerics (no Eigen solves, no Boost special functions) so a
// shared bug cannot make both sides agree.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using Real = long double;

// 2x2 solve by Cramer's rule.
inline std::array<double, 2> cramer2(double a11, double a12, double a21, double a22, double b1,
                                     double b2) {
  const double det = a11 * a22 - a12 * a21;
  return {(b1 * a22 - a12 * b2) / det, (a11 * b2 - b1 * a21) / det};
}

// Regularized lower incomplete gamma by its power series.
inline Real gamma_p_series(Real a, Real x) {
  Real term = 1.0L / a;
  Real sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-20L) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma by a modified-Lentz continued fraction.
inline Real gamma_q_fraction(Real a, Real x) {
  const Real tiny = 1e-300L;
  Real b = x + 1.0L - a;
  Real c = 1.0L / tiny;
  Real d = 1.0L / b;
  Real h = d;
  for (int i = 1; i < 10000; ++i) {
    const Real an = -i * (i - a);
    b += 2.0L;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0L / d;
    const Real delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0L) < 1e-20L) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline double chisq_sf(double x, int df) {
  if (x <= 0.0) return 1.0;
  const Real a = df / 2.0L;
  const Real hx = x / 2.0L;
  if (hx < a + 1.0L) return static_cast<double>(1.0L - gamma_p_series(a, hx));
  return static_cast<double>(gamma_q_fraction(a, hx));
}

// erfc from the Maclaurin series of erf; fine for |x| below about 3.
inline double erfc_series(double xd) {
  const Real x = xd;
  Real term = x;
  Real sum = x;
  for (int n = 1; n < 500; ++n) {
    term *= -x * x / n;
    const Real add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-22L) break;
  }
  const Real pi = 3.141592653589793238462643383279502884L;
  return static_cast<double>(1.0L - 2.0L / std::sqrt(pi) * sum);
}

inline double normal_sf(double z) { return 0.5 * erfc_series(z / std::sqrt(2.0)); }

// Nelder-Mead in long double with restarts around the incumbent.
inline std::vector<Real> nelder_mead(const std::function<Real(const std::vector<Real>&)>& f,
                                     std::vector<Real> x0, Real step = 0.5L,
                                     int restarts = 6, int max_iter = 20000) {
  const std::size_t d = x0.size();
  for (int r = 0; r < restarts; ++r) {
    std::vector<std::vector<Real>> s(d + 1, x0);
    for (std::size_t i = 0; i < d; ++i) s[i + 1][i] += step;
    std::vector<Real> fs(d + 1);
    for (std::size_t i = 0; i <= d; ++i) fs[i] = f(s[i]);
    std::vector<std::size_t> order(d + 1);
    for (int it = 0; it < max_iter; ++it) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fs[a] < fs[b]; });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second = order[d - (d > 0 ? 1 : 0)];
      Real spread = 0;
      for (std::size_t i = 0; i <= d; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
          spread = std::max(spread, std::fabs(s[i][c] - s[best][c]));
        }
      }
      if (spread < 1e-15L) break;
      std::vector<Real> centroid(d, 0.0L);
      for (std::size_t i = 0; i <= d; ++i) {
        if (i == worst) continue;
        for (std::size_t c = 0; c < d; ++c) centroid[c] += s[i][c] / d;
      }
      auto along = [&](Real t) {
        std::vector<Real> p(d);
        for (std::size_t c = 0; c < d; ++c) p[c] = centroid[c] + t * (s[worst][c] - centroid[c]);
        return p;
      };
      const auto xr = along(-1.0L);
      const Real fr = f(xr);
      if (fr < fs[best]) {
        const auto xe = along(-2.0L);
        const Real fe = f(xe);
        if (fe < fr) {
          s[worst] = xe;
          fs[worst] = fe;
        } else {
          s[worst] = xr;
          fs[worst] = fr;
        }
      } else if (fr < fs[second]) {
        s[worst] = xr;
        fs[worst] = fr;
      } else {
        const auto xc = fr < fs[worst] ? along(-0.5L) : along(0.5L);
        const Real fc = f(xc);
        if (fc < std::min(fr, fs[worst])) {
          s[worst] = xc;
          fs[worst] = fc;
        } else {
          for (std::size_t i = 0; i <= d; ++i) {
            if (i == best) continue;
            for (std::size_t c = 0; c < d; ++c) s[i][c] = s[best][c] + 0.5L * (s[i][c] - s[best][c]);
            fs[i] = f(s[i]);
          }
        }
      }
    }
    x0 = s[static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin())];
    step *= 0.1L;
  }
  return x0;
}

// Least squares by Gaussian elimination with partial pivoting on the normal
// equations, accumulated in long double.
inline std::vector<Real> least_squares(const std::vector<std::vector<Real>>& cols,
                                       const std::vector<Real>& y) {
  const std::size_t p = cols.size();
  std::vector<std::vector<Real>> a(p, std::vector<Real>(p + 1, 0.0L));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t t = 0; t < y.size(); ++t) a[i][j] += cols[i][t] * cols[j][t];
    }
    for (std::size_t t = 0; t < y.size(); ++t) a[i][p] += cols[i][t] * y[t];
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    if (a[c][c] == 0.0L) throw std::runtime_error("oracle: singular system");
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const Real m = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= m * a[c][k];
    }
  }
  std::vector<Real> x(p);
  for (std::size_t i = 0; i < p; ++i) x[i] = a[i][p] / a[i][i];
  return x;
}

// Textbook single regression of y on [X_delta, x] with the White
// heteroskedasticity-robust (HC0) and the classical standard error of the
// last coefficient.
struct TStat {
  double coef = 0.0;
  double se_robust = 0.0;
  double se_classical = 0.0;
};

inline TStat regression_t(const Eigen::MatrixXd& x_delta, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) {
  const std::size_t n = static_cast<std::size_t>(y.size());
  const std::size_t p = static_cast<std::size_t>(x_delta.cols()) + 1;
  std::vector<std::vector<Real>> cols(p, std::vector<Real>(n));
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c + 1 < p; ++c) cols[c][t] = x_delta(t, c);
    cols[p - 1][t] = x(t);
  }
  std::vector<Real> yy(y.data(), y.data() + n);
  const auto beta = least_squares(cols, yy);
  std::vector<Real> e(n);
  Real sse = 0;
  for (std::size_t t = 0; t < n; ++t) {
    Real fit = 0;
    for (std::size_t c = 0; c < p; ++c) fit += beta[c] * cols[c][t];
    e[t] = yy[t] - fit;
    sse += e[t] * e[t];
  }
  // Gauss-Jordan inverse of the Gram matrix.
  std::vector<std::vector<Real>> g(p, std::vector<Real>(2 * p, 0.0L));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t t = 0; t < n; ++t) g[i][j] += cols[i][t] * cols[j][t];
    }
    g[i][p + i] = 1.0L;
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::fabs(g[r][c]) > std::fabs(g[piv][c])) piv = r;
    }
    std::swap(g[c], g[piv]);
    const Real d = g[c][c];
    for (auto& v : g[c]) v /= d;
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const Real m = g[r][c];
      for (std::size_t k = 0; k < 2 * p; ++k) g[r][k] -= m * g[c][k];
    }
  }
  const std::size_t last = p - 1;
  Real meat = 0;
  for (std::size_t t = 0; t < n; ++t) {
    Real a = 0;
    for (std::size_t c = 0; c < p; ++c) a += g[last][p + c] * cols[c][t];
    meat += a * a * e[t] * e[t];
  }
  TStat out;
  out.coef = static_cast<double>(beta[last]);
  out.se_robust = static_cast<double>(std::sqrt(meat));
  out.se_classical = static_cast<double>(std::sqrt(sse / (n - p) * g[last][p + last]));
  return out;
}

// Random helpers on std::mt19937_64, independent of the library's generator.
struct Draws {
  explicit Draws(std::uint64_t seed) : gen(seed) {}
  std::mt19937_64 gen;
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  std::size_t integer(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
  }
  Eigen::MatrixXd normal_matrix(Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal();
    }
    return m;
  }
  Eigen::VectorXd normal_vector(Eigen::Index n) { return normal_matrix(n, 1).col(0); }
};

}  // namespace oracle
