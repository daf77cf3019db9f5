//
// Copyright 2026 The dpacct Authors.
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
//

// Command-line front end. Lives in the library so that tests can drive it
// without spawning processes.

#ifndef DPACCT_CLI_H_
#define DPACCT_CLI_H_

#include <ostream>
#include <string>
#include <vector>

#include "absl/status/status.h"

namespace dpacct {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitCacheIo = 4;

// Exit code for a library error: cache I/O problems map to kExitCacheIo,
// everything numeric to kExitNumeric.
int ExitCodeFor(const absl::Status& status);

// Relative cache paths are taken relative to $ACCT_CACHE_DIR when it is set.
std::string ResolveCachePath(const std::string& path);

// `args` excludes the program name. Results go to `out`, diagnostics to
// `err`.
int Dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace dpacct

#endif  // DPACCT_CLI_H_
