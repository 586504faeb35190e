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

#ifndef MIDDLEWAY_TOOLS_CLI_HPP
#define MIDDLEWAY_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace middleway {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCollision = 1;
inline constexpr int kExitUsage = 2;

/// Entry point behind the `middleway` binary. `args` excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace middleway

#endif  // MIDDLEWAY_TOOLS_CLI_HPP
