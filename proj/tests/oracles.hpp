// Independent re-implementations used as test oracles.
//
// Written with plain arrays and literal loops so they share no code path with
// the library (no Eigen, no sliding-window helpers).
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle
{

using V3 = std::array<double, 3>;

struct Sample
{
  V3 a;
  V3 w;
};

inline double sq(double x) { return x * x; }
inline double norm2(const V3 & v) { return sq(v[0]) + sq(v[1]) + sq(v[2]); }
inline double dist(const V3 & a, const V3 & b) { return std::sqrt(sq(a[0] - b[0]) + sq(a[1] - b[1]) + sq(a[2] - b[2])); }

inline V3 mean_a(const std::vector<Sample> & s, std::size_t k, std::size_t w)
{
  V3 m{0, 0, 0};
  for (std::size_t n = k; n < k + w; ++n) {
    for (int c = 0; c < 3; ++c) {m[c] += s[n].a[c];}
  }
  for (int c = 0; c < 3; ++c) {m[c] /= static_cast<double>(w);}
  return m;
}

inline double shoe(const std::vector<Sample> & s, std::size_t k, std::size_t w, double sa, double sw, double g)
{
  const V3 m = mean_a(s, k, w);
  const double mn = std::sqrt(norm2(m));
  double t = 0;
  for (std::size_t n = k; n < k + w; ++n) {
    V3 d;
    for (int c = 0; c < 3; ++c) {d[c] = s[n].a[c] - (mn > 0 ? g * m[c] / mn : 0.0);}
    t += norm2(d) / (sa * sa) + norm2(s[n].w) / (sw * sw);
  }
  return t / static_cast<double>(w);
}

inline double ared(const std::vector<Sample> & s, std::size_t k, std::size_t w)
{
  double t = 0;
  for (std::size_t n = k; n < k + w; ++n) {t += norm2(s[n].w);}
  return t / static_cast<double>(w);
}

inline double amvd(const std::vector<Sample> & s, std::size_t k, std::size_t w)
{
  const V3 m = mean_a(s, k, w);
  double t = 0;
  for (std::size_t n = k; n < k + w; ++n) {
    t += sq(s[n].a[0] - m[0]) + sq(s[n].a[1] - m[1]) + sq(s[n].a[2] - m[2]);
  }
  return t / static_cast<double>(w);
}

/// Every split k <= i < j <= e of the window [k, e], e = k + w - 1.
inline double mbgtd(const std::vector<Sample> & s, std::size_t k, std::size_t w)
{
  const std::size_t e = k + w - 1;
  double best = 0;
  for (std::size_t i = k; i <= e; ++i) {
    for (std::size_t j = i + 1; j <= e; ++j) {
      double sum = 0;
      for (std::size_t a = i; a <= j - 1; ++a) {
        for (std::size_t b = j; b <= e; ++b) {sum += dist(s[a].a, s[b].a);}
      }
      const double c = sum / (static_cast<double>(j - i) * static_cast<double>(e - j + 1));
      best = std::max(best, c);
    }
  }
  return best;
}

/// Random window with rest-like accel plus perturbations of mixed scale.
template<typename Rng>
std::vector<Sample> random_window(Rng & rng, std::size_t w)
{
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> scale(-3.0, 1.0);
  const double sa = std::pow(10.0, scale(rng));
  const double sw = std::pow(10.0, scale(rng));
  std::vector<Sample> out(w);
  for (auto & s : out) {
    s.a = {sa * n(rng), sa * n(rng), 9.80665 + sa * n(rng)};
    s.w = {sw * n(rng), sw * n(rng), sw * n(rng)};
  }
  return out;
}

// --- LSTM cell with scalar loops ---------------------------------------------

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Row-major 4H x D input weights, 4H x H hidden weights, 4H bias, gates i, f, g, o.
struct Cell
{
  std::size_t d{0};
  std::size_t h{0};
  std::vector<double> wx;
  std::vector<double> wh;
  std::vector<double> b;
};

inline void cell_step(
  const Cell & c, const std::vector<double> & x, std::vector<double> & h, std::vector<double> & s)
{
  const std::size_t n = c.h;
  std::vector<double> z(4 * n);
  for (std::size_t r = 0; r < 4 * n; ++r) {
    double acc = c.b[r];
    for (std::size_t q = 0; q < c.d; ++q) {acc += c.wx[r * c.d + q] * x[q];}
    for (std::size_t q = 0; q < n; ++q) {acc += c.wh[r * n + q] * h[q];}
    z[r] = acc;
  }
  std::vector<double> h_new(n);
  std::vector<double> s_new(n);
  for (std::size_t u = 0; u < n; ++u) {
    const double ig = logistic(z[u]);
    const double fg = logistic(z[n + u]);
    const double gg = std::tanh(z[2 * n + u]);
    const double og = logistic(z[3 * n + u]);
    s_new[u] = gg * ig + s[u] * fg;
    h_new[u] = std::tanh(s_new[u]) * og;
  }
  h = h_new;
  s = s_new;
}

}  // namespace oracle
