#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gamedyn/simplex.hpp"

namespace gamedyn {

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_init = 1e-4;
  double h_max = 0.5;
  double h_min = 1e-13;
  size_t max_steps = 100'000'000;
};

// Dense-output polynomial of one accepted Dormand-Prince 5(4) step,
// evaluated Horner-style in theta = (t - t0)/h.
struct StepDense {
  double t0 = 0, h = 0;
  Vec r1, r2, r3, r4, r5;

  void eval(double t, Vec& out) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    out.resize(r1.size());
    for (size_t i = 0; i < r1.size(); ++i)
      out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
  }
  Vec eval(double t) const {
    Vec out;
    eval(t, out);
    return out;
  }
};

namespace dopri5 {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b* (embedded 4th order difference)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

}  // namespace dopri5

// Adaptive DP5(4) with FSAL and dense output. The sink is invoked after each
// accepted step as sink(dense, t_new, y, f_new); it may shift y by a gauge
// transformation under which f is invariant (softmax log recentring relies
// on this), because f_new is reused as the first stage of the next step.
template <class F, class Sink>
inline void integrate_adaptive(F&& f, Vec y, double t0, double t1, const OdeOptions& opt,
                               Sink&& sink) {
  using namespace dopri5;
  const size_t n = y.size();
  if (t1 <= t0) throw std::invalid_argument("integrate_adaptive: need t1 > t0");

  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);
  f(t0, y, k1);
  for (double v : k1)
    if (!std::isfinite(v)) throw std::runtime_error("integrate_adaptive: non-finite derivative");

  double t = t0;
  double h = std::min(opt.h_init, std::min(opt.h_max, t1 - t0));
  bool rejected = false;
  StepDense dense;
  dense.r1.resize(n);
  dense.r2.resize(n);
  dense.r3.resize(n);
  dense.r4.resize(n);
  dense.r5.resize(n);

  for (size_t step = 0; step < opt.max_steps; ++step) {
    if (t >= t1) return;
    h = std::min(h, t1 - t);
    if (h < opt.h_min) throw std::runtime_error("integrate_adaptive: step size underflow");

    for (size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, ytmp, k2);
    for (size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, ytmp, k3);
    for (size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, ytmp, k4);
    for (size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, ytmp, k5);
    for (size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + h, ytmp, k6);
    for (size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(t + h, ynew, k7);

    double err = 0;
    for (size_t i = 0; i < n; ++i) {
      double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err += (ei / sc) * (ei / sc);
    }
    err = std::sqrt(err / static_cast<double>(n));
    if (!std::isfinite(err)) err = 2.0;  // force rejection

    if (err <= 1.0) {
      dense.t0 = t;
      dense.h = h;
      for (size_t i = 0; i < n; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        dense.r1[i] = y[i];
        dense.r2[i] = ydiff;
        dense.r3[i] = bspl;
        dense.r4[i] = ydiff - h * k7[i] - bspl;
        dense.r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                           d7 * k7[i]);
      }
      t += h;
      y = ynew;
      sink(dense, t, y, k7);
      k1 = k7;  // FSAL; sink shifts keep f(y) unchanged
      double fac = 0.9 * std::pow(err > 1e-30 ? err : 1e-30, -0.2);
      fac = std::min(rejected ? 1.0 : 10.0, std::max(0.2, fac));
      h = std::min(opt.h_max, h * fac);
      rejected = false;
    } else {
      double fac = std::max(0.2, 0.9 * std::pow(err, -0.2));
      h *= fac;
      rejected = true;
    }
  }
  throw std::runtime_error("integrate_adaptive: max step count exceeded");
}

}  // namespace gamedyn
