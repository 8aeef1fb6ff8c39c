// Copyright (c) 2026 The leakmeter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEAKMETER_LOG_H_
#define LEAKMETER_LOG_H_

#include <string_view>

namespace leakmeter {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// "error", "warn", "info", "debug" or a digit 0-3; anything else -> kWarn.
LogLevel ParseLogLevel(std::string_view s);
void SetLogLevel(LogLevel level);
LogLevel GetLogLevel();
// Reads LEAKMETER_LOG.
void InitLogFromEnv();

// Writes "[level] msg" to stderr when level is enabled.
void Log(LogLevel level, std::string_view msg);

}  // namespace leakmeter

#endif  // LEAKMETER_LOG_H_
