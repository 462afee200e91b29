// Copyright 2026 The chunkval Authors
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

#ifndef CHUNKVAL_TOOLS_SELFTEST_H_
#define CHUNKVAL_TOOLS_SELFTEST_H_

#include <cstdint>
#include <ostream>

namespace chunkval::cli {

struct SelftestOptions {
  std::uint64_t seed = 0;
  int threads = 2;
};

// Prints one PASS/FAIL line per check; true when all pass.
bool run_selftest(const SelftestOptions& opts, std::ostream& out);

}  // namespace chunkval::cli

#endif  // CHUNKVAL_TOOLS_SELFTEST_H_
