// Copyright 2026 The Middleway Authors
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

#ifndef MIDDLEWAY_REPLAY_HPP
#define MIDDLEWAY_REPLAY_HPP

#include <span>
#include <vector>

#include "middleway/run_log.hpp"

namespace middleway {

struct ReplayPoint {
  double t = 0.0;
  int vehicle_id = 0;
  double v_pr = 0.0;
  double v_gr = 0.0;
  double v_des = 0.0;
};

/// Open-loop middleway setpoints recomputed from logged (v_pr, v_gr) pairs.
/// Rows missing either input are skipped.
std::vector<ReplayPoint> replay_middleway(std::span<const LogRow> rows, double v_offset,
                                          double v_des_max);

}  // namespace middleway

#endif  // MIDDLEWAY_REPLAY_HPP
