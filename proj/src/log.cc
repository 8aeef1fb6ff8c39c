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

#include "leakmeter/log.h"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace leakmeter {
namespace {

std::atomic<int> g_level{static_cast<int>(LogLevel::kWarn)};
std::mutex g_mutex;

constexpr std::string_view kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

LogLevel ParseLogLevel(std::string_view s) {
  for (int i = 0; i < 4; ++i)
    if (s == kNames[i]) return static_cast<LogLevel>(i);
  if (s.size() == 1 && s[0] >= '0' && s[0] <= '3')
    return static_cast<LogLevel>(s[0] - '0');
  return LogLevel::kWarn;
}

void SetLogLevel(LogLevel level) { g_level = static_cast<int>(level); }

LogLevel GetLogLevel() { return static_cast<LogLevel>(g_level.load()); }

void InitLogFromEnv() {
  if (const char* env = std::getenv("LEAKMETER_LOG")) SetLogLevel(ParseLogLevel(env));
}

void Log(LogLevel level, std::string_view msg) {
  if (static_cast<int>(level) > g_level.load()) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << msg << "\n";
}

}  // namespace leakmeter
