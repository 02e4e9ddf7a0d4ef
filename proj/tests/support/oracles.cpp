#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

namespace {

struct Deriv {
  Complex a, g, e;
  double leak, spont;
};

Deriv rhs(const Rates& r, const Trajectory& s) {
  const Complex i{0.0, 1.0};
  Deriv d;
  d.a = -r.gamma / 2.0 * s.c_alpha - i * r.h / 2.0 * (s.c_g + s.c_e);
  d.g = -r.kappa * s.c_g - i * r.h / 2.0 * s.c_alpha;
  d.e = -r.kappa * s.c_e - i * r.h / 2.0 * s.c_alpha;
  d.leak = 2.0 * r.kappa * (std::norm(s.c_g) + std::norm(s.c_e));
  d.spont = r.gamma * std::norm(s.c_alpha);
  return d;
}

Trajectory step(const Trajectory& s, const Deriv& d, double dt) {
  Trajectory out = s;
  out.c_alpha += dt * d.a;
  out.c_g += dt * d.g;
  out.c_e += dt * d.e;
  out.leaked += dt * d.leak;
  out.spont += dt * d.spont;
  return out;
}

}  // namespace

Trajectory rk4(const Rates& r, double t, double max_phase) {
  Trajectory s;
  if (t <= 0.0) return s;
  const double fastest = std::max({r.h, r.kappa, r.gamma, 1e-12});
  const auto n = static_cast<std::size_t>(std::ceil(t * fastest / max_phase));
  const double dt = t / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Deriv k1 = rhs(r, s);
    const Deriv k2 = rhs(r, step(s, k1, dt / 2.0));
    const Deriv k3 = rhs(r, step(s, k2, dt / 2.0));
    const Deriv k4 = rhs(r, step(s, k3, dt));
    s.c_alpha += dt / 6.0 * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a);
    s.c_g += dt / 6.0 * (k1.g + 2.0 * k2.g + 2.0 * k3.g + k4.g);
    s.c_e += dt / 6.0 * (k1.e + 2.0 * k2.e + 2.0 * k3.e + k4.e);
    s.leaked += dt / 6.0 * (k1.leak + 2.0 * k2.leak + 2.0 * k3.leak + k4.leak);
    s.spont += dt / 6.0 * (k1.spont + 2.0 * k2.spont + 2.0 * k3.spont + k4.spont);
  }
  return s;
}

double simpson(const std::function<double(double)>& f, double a, double b, std::size_t panels) {
  if (panels % 2) ++panels;
  const double h = (b - a) / static_cast<double>(panels);
  double sum = f(a) + f(b);
  for (std::size_t i = 1; i < panels; ++i) {
    sum += (i % 2 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
  }
  return sum * h / 3.0;
}

Dense briegel(std::size_t n) {
  Dense v(std::size_t{1} << n);
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    int parity = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const auto bk = (idx >> (n - 1 - k)) & 1U;
      const auto bk1 = (idx >> (n - 2 - k)) & 1U;
      parity += static_cast<int>(bk & bk1);
    }
    v[idx] = parity % 2 ? -1.0 : 1.0;
  }
  return normalized(v);
}

Dense paired(std::size_t n) {
  Dense v(std::size_t{1} << n);
  const std::size_t m = n / 2;
  for (std::size_t y = 0; y < (std::size_t{1} << m); ++y) {
    std::size_t idx = 0;
    int parity = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const auto yk = (y >> (m - 1 - k)) & 1U;
      idx = (idx << 2) | (yk ? 3U : 0U);
      if (k + 1 < m) parity += static_cast<int>(yk & ((y >> (m - 2 - k)) & 1U));
    }
    v[idx] = parity % 2 ? -1.0 : 1.0;
  }
  return normalized(v);
}

Dense apply_1q(const Dense& v, std::size_t n, std::size_t qubit, const std::array<Complex, 4>& m) {
  Dense out(v.size());
  const std::size_t bit = std::size_t{1} << (n - 1 - qubit);
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    if (idx & bit) continue;
    const Complex a0 = v[idx];
    const Complex a1 = v[idx | bit];
    out[idx] = m[0] * a0 + m[1] * a1;
    out[idx | bit] = m[2] * a0 + m[3] * a1;
  }
  return out;
}

Dense hadamard_on(const Dense& v, std::size_t n, std::size_t qubit) {
  const double s = 1.0 / std::sqrt(2.0);
  return apply_1q(v, n, qubit, {s, s, s, -s});
}

double overlap_abs(const Dense& a, const Dense& b) {
  Complex sum{};
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) sum += std::conj(a[i]) * b[i];
  return std::abs(sum);
}

Dense normalized(Dense v) {
  double norm = 0.0;
  for (const auto& c : v) norm += std::norm(c);
  norm = std::sqrt(norm);
  for (auto& c : v) c /= norm;
  return v;
}

double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace oracle
