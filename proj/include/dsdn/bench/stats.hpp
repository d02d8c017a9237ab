// Copyright 2026 The dsdn Authors.
//
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

// Sample summaries and the paired block-median sign test.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dsdn::bench {

struct Summary {
  std::size_t n = 0;  // samples that were not lost
  double mean = 0;
  double median = 0;
  double p95 = 0;
  double p99 = 0;
  double min = 0;
  double max = 0;
  double stddev = 0;  // sample standard deviation (n - 1)
  std::size_t lost = 0;
};

/// Nearest-rank percentile of sorted data, p in (0, 100].
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty sample");
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

inline double median_sorted(const std::vector<double>& sorted) {
  if (sorted.empty()) throw std::invalid_argument("median of empty sample");
  auto n = sorted.size();
  return n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return median_sorted(xs);
}

/// `values` holds the surviving samples; `lost` counts the others.
inline Summary summarize(std::vector<double> values, std::size_t lost = 0) {
  Summary s;
  s.lost = lost;
  s.n = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  s.median = median_sorted(values);
  s.p95 = percentile_sorted(values, 95);
  s.p99 = percentile_sorted(values, 99);
  s.min = values.front();
  s.max = values.back();
  if (s.n > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

/// P(X >= k) for X ~ Binomial(n, 1/2).
inline double binomial_upper_tail(std::size_t n, std::size_t k) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  double total = 0;
  for (std::size_t i = k; i <= n; ++i) {
    double log_c = std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(i) + 1) -
                   std::lgamma(static_cast<double>(n - i) + 1);
    total += std::exp(log_c - static_cast<double>(n) * std::log(2.0));
  }
  return std::min(total, 1.0);
}

struct SignTest {
  std::size_t blocks = 0;
  std::size_t a_lower = 0;  // blocks where median(a) < median(b)
  std::size_t ties = 0;
  double p_value = 1.0;  // one-sided, for "a is lower"
};

/// Splits paired samples into consecutive blocks, takes each block's median
/// per side and runs a one-sided sign test on the block medians. A short
/// trailing block is ignored.
inline SignTest paired_block_sign_test(const std::vector<double>& a, const std::vector<double>& b,
                                       std::size_t block) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples differ in length");
  if (block == 0) throw std::invalid_argument("block size must be positive");
  SignTest t;
  for (std::size_t start = 0; start + block <= a.size(); start += block) {
    std::vector<double> xa(a.begin() + static_cast<std::ptrdiff_t>(start),
                           a.begin() + static_cast<std::ptrdiff_t>(start + block));
    std::vector<double> xb(b.begin() + static_cast<std::ptrdiff_t>(start),
                           b.begin() + static_cast<std::ptrdiff_t>(start + block));
    double ma = median(std::move(xa)), mb = median(std::move(xb));
    ++t.blocks;
    if (ma < mb) {
      ++t.a_lower;
    } else if (ma == mb) {
      ++t.ties;
    }
  }
  t.p_value = binomial_upper_tail(t.blocks - t.ties, t.a_lower);
  return t;
}

}  // namespace dsdn::bench
