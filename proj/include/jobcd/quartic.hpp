#pragma once

// Real roots of polynomials up to degree four. The quartic path is Ferrari's
// method (depressed quartic + resolvent cubic); roots are Newton-polished and a
// companion-matrix eigenvalue solve takes over when the closed form loses
// accuracy.

#include "jobcd/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace jobcd {

namespace quartic_detail {

inline double horner(const std::array<double, 5>& c, int degree, double t) {
  // c[k] multiplies t^k
  double v = c[static_cast<std::size_t>(degree)];
  for (int k = degree - 1; k >= 0; --k) v = v * t + c[static_cast<std::size_t>(k)];
  return v;
}

inline double horner_deriv(const std::array<double, 5>& c, int degree, double t) {
  if (degree == 0) return 0.0;
  double v = degree * c[static_cast<std::size_t>(degree)];
  for (int k = degree - 1; k >= 1; --k) v = v * t + k * c[static_cast<std::size_t>(k)];
  return v;
}

/// A few guarded Newton steps; keeps the best iterate by residual.
inline double polish(const std::array<double, 5>& c, int degree, double t) {
  double best = t;
  double best_res = std::abs(horner(c, degree, t));
  for (int it = 0; it < 12 && best_res > 0.0; ++it) {
    const double d = horner_deriv(c, degree, t);
    if (d == 0.0 || !std::isfinite(d)) break;
    const double next = t - horner(c, degree, t) / d;
    if (!std::isfinite(next)) break;
    const double res = std::abs(horner(c, degree, next));
    t = next;
    if (res < best_res) {
      best = next;
      best_res = res;
    } else if (res >= 2.0 * best_res) {
      break;
    }
  }
  return best;
}

inline void dedupe(std::vector<double>& roots) {
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots) {
    if (!out.empty() && std::abs(r - out.back()) <= 1e-10 * std::max(1.0, std::abs(r))) continue;
    out.push_back(r);
  }
  roots.swap(out);
}

/// Real roots of the monic quadratic t^2 + b t + c, with a relative
/// tolerance on a slightly negative discriminant (double roots).
inline std::vector<double> monic_quadratic(double b, double c) {
  const double disc = b * b - 4.0 * c;
  const double mag = std::max({b * b, std::abs(4.0 * c), 1e-300});
  if (disc < -1e-14 * mag) return {};
  const double sq = std::sqrt(std::max(disc, 0.0));
  // avoid cancellation
  const double qv = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  if (qv == 0.0) return {0.0, 0.0};
  return {qv, c / qv};
}

/// Real roots of the monic cubic t^3 + a t^2 + b t + c.
inline std::vector<double> monic_cubic(double a, double b, double c) {
  const double qq = (a * a - 3.0 * b) / 9.0;
  const double rr = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
  const double q3 = qq * qq * qq;
  const double shift = a / 3.0;
  const double disc = rr * rr - q3;
  const double mag = std::max({rr * rr, std::abs(q3), 1e-300});
  if (disc <= 1e-14 * mag && qq > 0.0) {
    const double ratio = std::clamp(rr / std::sqrt(q3), -1.0, 1.0);
    const double theta = std::acos(ratio);
    const double m = -2.0 * std::sqrt(qq);
    constexpr double two_pi = 6.283185307179586476925;
    return {m * std::cos(theta / 3.0) - shift, m * std::cos((theta + two_pi) / 3.0) - shift,
            m * std::cos((theta - two_pi) / 3.0) - shift};
  }
  const double big_a = -std::copysign(std::cbrt(std::abs(rr) + std::sqrt(std::max(disc, 0.0))), rr);
  const double big_b = big_a == 0.0 ? 0.0 : qq / big_a;
  return {big_a + big_b - shift};
}

inline std::vector<double> companion_real_roots(const std::array<double, 5>& c, int degree) {
  Matrix comp = Matrix::Zero(degree, degree);
  const double lead = c[static_cast<std::size_t>(degree)];
  for (int k = 0; k < degree; ++k) comp(0, k) = -c[static_cast<std::size_t>(degree - 1 - k)] / lead;
  for (int k = 1; k < degree; ++k) comp(k, k - 1) = 1.0;
  Eigen::EigenSolver<Matrix> es(comp, false);
  std::vector<double> out;
  for (Index k = 0; k < degree; ++k) {
    const auto ev = es.eigenvalues()(k);
    if (std::abs(ev.imag()) <= 1e-7 * std::max(1.0, std::abs(ev.real()))) out.push_back(ev.real());
  }
  return out;
}

/// Closed-form real roots (unpolished) of a polynomial of exact degree 1..4.
inline std::vector<double> closed_form_roots(const std::array<double, 5>& c, int degree) {
  const double lead = c[static_cast<std::size_t>(degree)];
  switch (degree) {
    case 1:
      return {-c[0] / c[1]};
    case 2:
      return monic_quadratic(c[1] / lead, c[0] / lead);
    case 3:
      return monic_cubic(c[2] / lead, c[1] / lead, c[0] / lead);
    default:
      break;
  }
  std::vector<double> roots;
  const double a = c[3] / lead;
  const double b = c[2] / lead;
  const double cc = c[1] / lead;
  const double d = c[0] / lead;
  const double a2 = a * a;
  // t = y - a/4 gives y^4 + p y^2 + q y + r
  const double p = b - 3.0 * a2 / 8.0;
  const double q = cc - a * b / 2.0 + a2 * a / 8.0;
  const double r = d - a * cc / 4.0 + a2 * b / 16.0 - 3.0 * a2 * a2 / 256.0;
  const double shift = a / 4.0;
  const double qmag = std::max({1.0, std::pow(std::abs(p), 1.5), std::pow(std::abs(r), 0.75)});
  if (std::abs(q) <= 1e-14 * qmag) {
    for (double z : monic_quadratic(p, r)) {
      if (z < 0.0) {
        if (z > -1e-14 * std::max(1.0, std::abs(p))) z = 0.0;
        else continue;
      }
      const double y = std::sqrt(z);
      roots.push_back(y - shift);
      roots.push_back(-y - shift);
    }
    return roots;
  }
  // resolvent: 8m^3 + 8p m^2 + (2p^2 - 8r) m - q^2 = 0, take the largest root (> 0)
  const auto ms = monic_cubic(p, (p * p / 4.0 - r), -q * q / 8.0);
  double m = *std::max_element(ms.begin(), ms.end());
  const std::array<double, 5> resolvent{-q * q / 8.0, p * p / 4.0 - r, p, 1.0, 0.0};
  m = polish(resolvent, 3, m);
  if (m > 0.0) {
    const double sq = std::sqrt(2.0 * m);
    const double k = q / (2.0 * sq);
    for (double y : monic_quadratic(-sq, p / 2.0 + m + k)) roots.push_back(y - shift);
    for (double y : monic_quadratic(sq, p / 2.0 + m - k)) roots.push_back(y - shift);
  }
  return roots;
}

inline int effective_degree(const std::array<double, 5>& c, double scale) {
  int degree = 4;
  while (degree > 0 && std::abs(c[static_cast<std::size_t>(degree)]) <= 1e-12 * scale) --degree;
  return degree;
}

/// Polished candidates of c inside the closed unit interval that pass the residual test.
inline void unit_interval_roots(const std::array<double, 5>& c, int degree, const std::vector<double>& raw,
                                double tol, std::vector<double>& out) {
  for (double t : raw) {
    if (!std::isfinite(t) || std::abs(t) > 1.0 + 1e-6) continue;
    t = polish(c, degree, t);
    if (std::abs(t) > 1.0 || std::abs(horner(c, degree, t)) > tol) continue;
    out.push_back(t);
  }
}

/// Roots of c and of its reversal rev (mapped back through t = 1/s) from one candidate source.
inline std::vector<double> collect_roots(const std::array<double, 5>& c, const std::array<double, 5>& rev,
                                         double tol, bool companion) {
  const auto source = [&](const std::array<double, 5>& poly) {
    // the reversal can lose degree when c has a zero constant term
    double scale = 0.0;
    for (double v : poly) scale = std::max(scale, std::abs(v));
    const int d = effective_degree(poly, scale);
    if (d == 0) return std::pair<int, std::vector<double>>{0, {}};
    return std::pair<int, std::vector<double>>{d, companion ? companion_real_roots(poly, d) : closed_form_roots(poly, d)};
  };
  std::vector<double> out;
  const auto [di, inner] = source(c);
  if (di > 0) unit_interval_roots(c, di, inner, tol, out);
  std::vector<double> outer;
  const auto [dr, raw] = source(rev);
  if (dr > 0) unit_interval_roots(rev, dr, raw, tol, outer);
  for (double s : outer)
    if (s != 0.0 && std::abs(s) < 1.0) out.push_back(1.0 / s);
  dedupe(out);
  return out;
}

}  // namespace quartic_detail

/// Quality summary of the last root solve; exposed for tests and diagnostics.
struct QuarticStats {
  bool used_companion = false;
  int degree = 0;
};

/// All real roots of c4 t^4 + c3 t^3 + c2 t^2 + c1 t + c0, sorted ascending.
/// Roots with |t| <= 1 satisfy |poly(t)| <= 1e-8 * max|c_k|; larger roots are found
/// as roots s = 1/t of the reversed polynomial and satisfy the same bound on
/// |poly(t)| / t^4. Coefficients below 1e-12 * max|c_k| at the top are treated as
/// zero, which discards roots beyond roughly 1e12 in magnitude.
inline std::vector<double> solve_quartic(double c4, double c3, double c2, double c1, double c0,
                                         QuarticStats* stats = nullptr) {
  using namespace quartic_detail;
  const std::array<double, 5> c{c0, c1, c2, c3, c4};
  double scale = 0.0;
  for (double v : c) {
    require(std::isfinite(v), "solve_quartic: non-finite coefficient");
    scale = std::max(scale, std::abs(v));
  }
  require(scale > 0.0, "solve_quartic: all coefficients are zero");

  const int degree = effective_degree(c, scale);
  if (stats) *stats = QuarticStats{false, degree};
  if (degree == 0) return {};

  // Reversed polynomial of the effective degree: s^degree p(1/s).
  std::array<double, 5> rev{};
  for (int k = 0; k <= degree; ++k) rev[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(degree - k)];

  const double tol = 1e-8 * std::max(1.0, scale);
  // Closed forms lose roots when the monic normalisation is badly scaled; the
  // companion eigenvalues are merged in to catch those.
  std::vector<double> roots = collect_roots(c, rev, tol, false);
  if (degree >= 3) {
    const std::vector<double> extra = collect_roots(c, rev, tol, true);
    const std::size_t before = roots.size();
    roots.insert(roots.end(), extra.begin(), extra.end());
    dedupe(roots);
    if (stats && roots.size() > before) stats->used_companion = true;
  }
  dedupe(roots);
  return roots;
}

}  // namespace jobcd
