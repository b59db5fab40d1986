#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "gamedyn/rational.hpp"

namespace gamedyn {

// Population states live on the probability simplex. Two flavors are used
// throughout: exact rational points (equilibria, best-reply events) and
// float points (replicator trajectories).
using Vec = std::vector<double>;
using RatVec = std::vector<Rat>;

inline Vec to_double(const RatVec& r) {
  Vec v(r.size());
  for (size_t i = 0; i < r.size(); ++i) v[i] = to_double(r[i]);
  return v;
}

inline bool is_simplex(const RatVec& x) {
  Rat s = 0;
  for (const auto& xi : x) {
    if (sgn(xi) < 0) return false;
    s += xi;
  }
  return s == 1;
}

inline bool is_simplex(const Vec& x, double tol = 1e-12) {
  double s = 0;
  for (double xi : x) {
    if (xi < 0) return false;
    s += xi;
  }
  return std::abs(s - 1.0) <= tol;
}

inline void require_simplex(const RatVec& x, const char* who) {
  if (!is_simplex(x)) throw std::invalid_argument(std::string(who) + ": point not on the simplex");
}

inline void require_simplex(const Vec& x, const char* who, double tol = 1e-12) {
  if (!is_simplex(x, tol)) throw std::invalid_argument(std::string(who) + ": point not on the simplex");
}

inline RatVec rat_unit(int n, int i) {
  RatVec e(n, Rat(0));
  e[i] = 1;
  return e;
}

inline Vec unit(int n, int i) {
  Vec e(n, 0.0);
  e[i] = 1.0;
  return e;
}

inline RatVec rat_barycenter(int n) { return RatVec(n, Rat(1, n)); }

// Exact rationalization of a float point: coordinates are converted to their
// exact dyadic values and the last positive one absorbs the rounding defect,
// so the result sums to 1 exactly.
inline RatVec rationalize_simplex(const Vec& x) {
  require_simplex(x, "rationalize_simplex", 1e-9);
  RatVec r(x.size());
  Rat s = 0;
  size_t last = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    r[i] = rat_from_double(x[i]);
    s += r[i];
    if (x[i] > 0) last = i;
  }
  r[last] += Rat(1) - s;
  if (sgn(r[last]) < 0) throw std::invalid_argument("rationalize_simplex: defect exceeds last coordinate");
  return r;
}

// Deterministic RNG wrapper. We map raw 64-bit outputs to doubles ourselves
// so that sampled batches are reproducible across standard libraries.
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(uint64_t seed) : gen(seed) {}
  double uniform01() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  int64_t uniform_int(int64_t lo, int64_t hi) {  // inclusive bounds
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(gen() % span);
  }
};

inline uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform sample on S_n via exponential spacings. Coordinates below
// min_coord are rejected and the draw repeated, so interior starts stay
// representable in log coordinates.
inline Vec sample_simplex(Rng& rng, int n, double min_coord = 1e-12) {
  while (true) {
    Vec e(n);
    double s = 0;
    for (int i = 0; i < n; ++i) {
      double u = rng.uniform01();
      e[i] = -std::log1p(-u);
      s += e[i];
    }
    if (s <= 0) continue;
    bool ok = true;
    for (int i = 0; i < n; ++i) {
      e[i] /= s;
      if (e[i] < min_coord) ok = false;
    }
    if (ok) return e;
  }
}

inline double linf_dist(const Vec& a, const Vec& b) {
  double d = 0;
  for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double linf_dist(const RatVec& a, const RatVec& b) {
  Rat d = 0;
  for (size_t i = 0; i < a.size(); ++i) d = std::max(d, Rat(abs(a[i] - b[i])));
  return to_double(d);
}

}  // namespace gamedyn
