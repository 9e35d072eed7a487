#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

/// Classical RK4 for m' = g(t, m) on [0, T] with n_steps; returns m at every
/// output time T * j / n_out (j = 0..n_out). n_steps must be a multiple of n_out.
inline std::vector<double> rk4(const std::function<double(double, double)>& g, double m0, double T, int n_steps,
                               int n_out) {
  std::vector<double> out{m0};
  const double h = T / n_steps;
  const int stride = n_steps / n_out;
  double m = m0;
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * h;
    const double k1 = g(t, m);
    const double k2 = g(t + h / 2, m + h / 2 * k1);
    const double k3 = g(t + h / 2, m + h / 2 * k2);
    const double k4 = g(t + h, m + h * k3);
    m += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if ((k + 1) % stride == 0) out.push_back(m);
  }
  return out;
}

/// Root of a strictly increasing g on [lo, hi] by plain bisection.
inline double bisect(const std::function<double(double)>& g, double lo, double hi, int iters = 200) {
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Gaussian density with variance v, in long double.
inline long double gauss(long double v, long double x) {
  return std::exp(-x * x / (2.0L * v)) / std::sqrt(2.0L * std::numbers::pi_v<long double> * v);
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double normal_pdf(double v, double x) { return static_cast<double>(gauss(v, x)); }

}  // namespace oracle
