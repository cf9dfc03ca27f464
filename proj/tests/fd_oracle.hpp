// Copyright 2026 The DONUT Authors.
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

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "donut/neural.hpp"

namespace donut::test {

// Central-difference reference kept separate from the library's checker.
// Relative error is |a - n| / max(|a|, |n|, 1e-6).
inline double fd_max_rel_error(const std::function<double()>& loss, const nn::ParamList& params,
                               double step = 1e-5) {
  double worst = 0.0;
  for (auto* p : params) {
    for (Eigen::Index r = 0; r < p->value.rows(); ++r)
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        const double saved = p->value(r, c);
        p->value(r, c) = saved + step;
        const double up = loss();
        p->value(r, c) = saved - step;
        const double down = loss();
        p->value(r, c) = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double analytic = p->grad(r, c);
        const double den = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic - numeric) / den);
      }
  }
  return worst;
}

}  // namespace donut::test
