#pragma once

// Independent reference constructions used only by the tests.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

using Real = long double;

struct Coeffs {
  std::vector<Real> alpha;  // nodes 0..M-1
  std::vector<Real> beta;   // nodes 0..M
};

/// Node times in units of the anchor step: s_M = 0, s_{M-1} = -1, earlier steps shrink by zeta.
inline std::vector<Real> nodes(int M, const std::vector<double>& zeta) {
  std::vector<Real> steps(static_cast<std::size_t>(M));
  steps[M - 1] = 1.0L;
  for (int i = M - 1; i >= 1; --i) steps[i - 1] = steps[i] / static_cast<Real>(zeta[i - 1]);
  std::vector<Real> s(static_cast<std::size_t>(M + 1), 0.0L);
  for (int j = M - 1; j >= 0; --j) s[j] = s[j + 1] - steps[j];
  return s;
}

/// Lagrange basis polynomial j over `pts` evaluated at x.
inline Real basis(const std::vector<Real>& pts, std::size_t j, Real x) {
  Real v = 1.0L;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k != j) v *= (x - pts[k]) / (pts[j] - pts[k]);
  }
  return v;
}

/// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<Real>& x, std::vector<Real>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0L);
  w.assign(static_cast<std::size_t>(n), 0.0L);
  const Real pi = 3.141592653589793238462643383279502884L;
  for (int i = 0; i < n; ++i) {
    Real z = std::cos(pi * (i + 0.75L) / (n + 0.5L));
    Real dp = 0.0L;
    for (int it = 0; it < 100; ++it) {
      Real p0 = 1.0L, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const Real p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0L);
      const Real dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-19L) break;
    }
    x[i] = z;
    w[i] = 2.0L / ((1.0L - z * z) * dp * dp);
  }
}

/// integral over [-1, 0] of the Lagrange basis j.
inline Real adams_weight(const std::vector<Real>& pts, std::size_t j) {
  std::vector<Real> gx, gw;
  gauss_legendre(8, gx, gw);
  Real sum = 0.0L;
  for (std::size_t q = 0; q < gx.size(); ++q) sum += 0.5L * gw[q] * basis(pts, j, 0.5L * (gx[q] - 1.0L));
  return sum;
}

/// family: "ab", "am" or "bdf".
inline Coeffs coefficients(const std::string& family, int M, const std::vector<double>& zeta) {
  const std::vector<Real> s = nodes(M, zeta);
  Coeffs c;
  c.alpha.assign(static_cast<std::size_t>(M), 0.0L);
  c.beta.assign(static_cast<std::size_t>(M + 1), 0.0L);
  if (family == "bdf") {
    // derivative at 0 of every basis polynomial over all M + 1 nodes
    std::vector<Real> d(static_cast<std::size_t>(M + 1));
    for (int j = 0; j < M; ++j) {
      Real num = 1.0L, den = 1.0L;
      for (int k = 0; k <= M; ++k) {
        if (k == j) continue;
        den *= s[j] - s[k];
        if (k != M) num *= -s[k];
      }
      d[j] = num / den;
    }
    d[M] = 0.0L;
    for (int k = 0; k < M; ++k) d[M] += 1.0L / (0.0L - s[k]);
    for (int j = 0; j < M; ++j) c.alpha[j] = d[j] / d[M];
    c.beta[M] = 1.0L / d[M];
    return c;
  }
  c.alpha[M - 1] = -1.0L;
  const bool implicit = family == "am";
  std::vector<Real> pts(s.begin(), s.begin() + (implicit ? M + 1 : M));
  for (std::size_t j = 0; j < pts.size(); ++j) c.beta[j] = adams_weight(pts, j);
  return c;
}

struct GoldenRow {
  std::string scheme;
  int M = 0;
  int p = 0;
  std::string kind;
  int j = 0;
  long long numerator = 0;
  long long denominator = 1;
  double value = 0.0;
};

inline std::vector<GoldenRow> read_golden(const std::string& path) {
  std::ifstream in(path);
  std::vector<GoldenRow> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    GoldenRow r;
    std::string f;
    std::getline(ss, r.scheme, ',');
    std::getline(ss, f, ',');
    r.M = std::stoi(f);
    std::getline(ss, f, ',');
    r.p = std::stoi(f);
    std::getline(ss, r.kind, ',');
    std::getline(ss, f, ',');
    r.j = std::stoi(f);
    std::getline(ss, f, ',');
    r.numerator = std::stoll(f);
    std::getline(ss, f, ',');
    r.denominator = std::stoll(f);
    std::getline(ss, f, ',');
    r.value = std::stod(f);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace oracle
