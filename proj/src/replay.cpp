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

#include "middleway/replay.hpp"

#include "middleway/controller.hpp"

namespace middleway {

std::vector<ReplayPoint> replay_middleway(std::span<const LogRow> rows, double v_offset,
                                          double v_des_max) {
  std::vector<ReplayPoint> out;
  for (const LogRow& r : rows) {
    if (!r.v_pr || !r.v_gr) continue;
    out.push_back({r.t, r.vehicle_id, *r.v_pr, *r.v_gr, middleway(*r.v_pr, *r.v_gr, v_offset, v_des_max)});
  }
  return out;
}

}  // namespace middleway
