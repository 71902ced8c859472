// Copyright 2026 The convbeam Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "convbeam/error.hpp"

namespace convbeam {

inline constexpr double kSiSdrClampDb = 100.0;

/// Scale-invariant SDR in dB, clamped to +-100 dB.
inline double si_sdr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size() || estimate.empty())
    throw Error(ErrorCode::kLengthMismatch, "si_sdr needs equal, nonzero lengths");
  double er = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    er += estimate[i] * reference[i];
    rr += reference[i] * reference[i];
  }
  if (rr == 0.0) throw Error(ErrorCode::kZeroReference, "reference has no energy");
  const double alpha = er / rr;
  double target = 0.0, distortion = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double s = alpha * reference[i];
    const double d = estimate[i] - s;
    target += s * s;
    distortion += d * d;
  }
  if (distortion == 0.0) return target == 0.0 ? -kSiSdrClampDb : kSiSdrClampDb;
  if (target == 0.0) return -kSiSdrClampDb;
  return std::clamp(10.0 * std::log10(target / distortion), -kSiSdrClampDb, kSiSdrClampDb);
}

struct SourceScore {
  double si_sdr = 0.0;
  double improvement = 0.0;  // si_sdr minus the unprocessed score, 0 without one
};

struct MetricReport {
  std::vector<SourceScore> per_source;  // indexed by reference
  std::vector<std::size_t> permutation; // permutation[ref] = estimate index

  double mean_si_sdr() const {
    double acc = 0.0;
    for (const auto& s : per_source) acc += s.si_sdr;
    return per_source.empty() ? 0.0 : acc / static_cast<double>(per_source.size());
  }
};

/// Exhaustive search over estimate-to-reference pairings (J <= 4) for the
/// largest mean SI-SDR. When `unprocessed` is given, each improvement is
/// measured against si_sdr(unprocessed, reference).
inline MetricReport best_permutation_si_sdr(const std::vector<std::vector<double>>& estimates,
                                            const std::vector<std::vector<double>>& references,
                                            std::optional<std::span<const double>> unprocessed = {}) {
  const std::size_t n = references.size();
  if (n == 0 || estimates.size() != n)
    throw Error(ErrorCode::kLengthMismatch, "need one estimate per reference");
  if (n > 4) throw Error(ErrorCode::kTooManySources, "exhaustive search limited to 4 sources");

  std::vector<std::vector<double>> score(n, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t e = 0; e < n; ++e) score[r][e] = si_sdr(estimates[e], references[r]);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_total = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) total += score[r][perm[r]];
    if (total > best_total) {
      best_total = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  MetricReport report;
  report.permutation = best;
  for (std::size_t r = 0; r < n; ++r) {
    SourceScore s;
    s.si_sdr = score[r][best[r]];
    if (unprocessed) s.improvement = s.si_sdr - si_sdr(*unprocessed, references[r]);
    report.per_source.push_back(s);
  }
  return report;
}

}  // namespace convbeam
