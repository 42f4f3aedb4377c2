// Copyright 2026 The RALF Authors
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

#ifndef RALF__CLI_HPP_
#define RALF__CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace ralf::cli
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Entry point of the `ralf` tool: synth | run | eval | sweep | serve | export.
int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

}  // namespace ralf::cli

#endif  // RALF__CLI_HPP_
