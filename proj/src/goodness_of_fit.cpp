// Copyright 2026 The cascade-hawkes Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cascade_hawkes/goodness_of_fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cascade_hawkes/model.hpp"

namespace cascade_hawkes {

std::vector<double> rescaled_interarrivals(const ModelParams& params, const Cascade& cascade,
                                           RetweetAttribution attribution) {
  std::vector<double> lambda = compensator_at_events(params, cascade, attribution);
  std::vector<double> out(lambda.size());
  double prev = 0.0;
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    out[j] = lambda[j] - prev;
    prev = lambda[j];
  }
  return out;
}

namespace {

// Square matrix with a separate base-10 exponent to dodge overflow when
// raised to large powers.
struct ScaledMatrix {
  std::size_t m;
  std::vector<double> a;
  int exponent = 0;
};

ScaledMatrix multiply(const ScaledMatrix& x, const ScaledMatrix& y) {
  const std::size_t m = x.m;
  ScaledMatrix out{m, std::vector<double>(m * m, 0.0), x.exponent + y.exponent};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const double xik = x.a[i * m + k];
      if (xik == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) out.a[i * m + j] += xik * y.a[k * m + j];
    }
  }
  return out;
}

void rescale(ScaledMatrix& x) {
  const std::size_t c = (x.m / 2) * x.m + x.m / 2;
  if (x.a[c] > 1e140) {
    for (double& v : x.a) v *= 1e-140;
    x.exponent += 140;
  }
}

ScaledMatrix power(const ScaledMatrix& h, std::size_t n) {
  if (n == 1) return h;
  ScaledMatrix half = power(h, n / 2);
  ScaledMatrix out = multiply(half, half);
  if (n % 2 == 1) out = multiply(h, out);
  rescale(out);
  return out;
}

}  // namespace

double kolmogorov_cdf(std::size_t n, double d) {
  if (n == 0) throw std::invalid_argument("kolmogorov_cdf needs n >= 1");
  if (d <= 0.0) return 0.0;
  if (d >= 1.0) return 1.0;
  const double nd = static_cast<double>(n);
  const double s = d * d * nd;
  if (s > 7.24 || (s > 3.76 && n > 99)) {
    return 1.0 - 2.0 * std::exp(-(2.000071 + 0.331 / std::sqrt(nd) + 1.409 / nd) * s);
  }
  const std::size_t k = static_cast<std::size_t>(nd * d) + 1;
  const std::size_t m = 2 * k - 1;
  const double h = static_cast<double>(k) - nd * d;
  ScaledMatrix H{m, std::vector<double>(m * m, 0.0), 0};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) H.a[i * m + j] = (i + 1 >= j) ? 1.0 : 0.0;
  }
  for (std::size_t i = 0; i < m; ++i) {
    H.a[i * m] -= std::pow(h, static_cast<double>(i + 1));
    H.a[(m - 1) * m + i] -= std::pow(h, static_cast<double>(m - i));
  }
  H.a[(m - 1) * m] += (2.0 * h - 1.0 > 0.0) ? std::pow(2.0 * h - 1.0, static_cast<double>(m)) : 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i + 1 > j) {
        for (std::size_t g = 1; g <= i + 1 - j; ++g) H.a[i * m + j] /= static_cast<double>(g);
      }
    }
  }
  ScaledMatrix Q = power(H, n);
  double v = Q.a[(k - 1) * m + (k - 1)];
  int e = Q.exponent;
  for (std::size_t i = 1; i <= n; ++i) {
    v = v * static_cast<double>(i) / nd;
    if (v < 1e-140) {
      v *= 1e140;
      e -= 140;
    }
  }
  return std::clamp(v * std::pow(10.0, e), 0.0, 1.0);
}

KsResult ks_test_exponential(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("KS test needs at least one sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = x[i] > 0.0 ? -std::expm1(-x[i]) : 0.0;
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  KsResult out;
  out.n = x.size();
  out.statistic = d;
  out.p_value = std::clamp(1.0 - kolmogorov_cdf(x.size(), d), 0.0, 1.0);
  return out;
}

}  // namespace cascade_hawkes
