/*
 *   Copyright 2026 The adjnorm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "adjnorm/common.hpp"

namespace adjnorm {

/// NS reweights negatives by d^alpha, DEGDROP drops edges by alpha/d_i, PC re-scores at ranking time.
enum class BaselineKind { none, ns, degdrop, pc };

inline std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::ns: return "NS";
    case BaselineKind::degdrop: return "DEGDROP";
    case BaselineKind::pc: return "PC";
    default: return "NONE";
  }
}

inline BaselineKind parse_baseline_kind(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s == "NONE" || s.empty()) return BaselineKind::none;
  if (s == "NS") return BaselineKind::ns;
  if (s == "DEGDROP") return BaselineKind::degdrop;
  if (s == "PC") return BaselineKind::pc;
  throw ConfigError("unknown baseline kind '" + s + "' (expected NONE, NS, DEGDROP or PC)");
}

struct BaselineConfig {
  BaselineKind kind = BaselineKind::none;
  double alpha = 0.0;

  void validate() const {
    switch (kind) {
      case BaselineKind::ns:
      case BaselineKind::degdrop:
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError(to_string(kind) + " alpha must lie in [0, 1]");
        break;
      case BaselineKind::pc:
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("PC alpha must be >= 0");
        break;
      default:
        break;
    }
  }
};

/**
 * Popularity compensation over one user's candidate scores, in place:
 * standardize to zero mean / unit variance (skipped when the variance is 0),
 * then add alpha * (1 - d_i / d_max). alpha = 0 is the identity.
 *
 * This is an adapted form: it is monotone in the raw score for a fixed item
 * and the compensation is bounded in [0, alpha].
 */
inline void pc_adjust(std::span<double> scores, std::span<const std::uint32_t> degrees, double d_max, double alpha) {
  if (scores.size() != degrees.size()) throw ArgumentError("pc_adjust: scores and degrees differ in length");
  if (alpha < 0.0) throw ArgumentError("pc_adjust: alpha must be >= 0");
  if (d_max <= 0.0) throw ArgumentError("pc_adjust: d_max must be positive");
  const std::size_t n = scores.size();
  // z-scoring can merge nearly equal scores, so alpha = 0 leaves them untouched
  if (n == 0 || alpha == 0.0) return;
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= double(n);
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= double(n);
  if (var > 0.0) {
    const double inv_sd = 1.0 / std::sqrt(var);
    for (double& s : scores) s = (s - mean) * inv_sd;
  }
  for (std::size_t k = 0; k < n; ++k) scores[k] += alpha * (1.0 - double(degrees[k]) / d_max);
}

}  // namespace adjnorm
