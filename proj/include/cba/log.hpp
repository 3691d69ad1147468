// cba/log.hpp

// Copyright 2026 The CBA Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CBA_LOG_HPP_
#define CBA_LOG_HPP_

#include <cstdlib>
#include <iostream>
#include <string>

namespace cba {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// Level comes from CBA_LOG_LEVEL (error, info, debug); default info.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("CBA_LOG_LEVEL");
    if (env == nullptr) return LogLevel::kInfo;
    const std::string v(env);
    if (v == "error") return LogLevel::kError;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

}  // namespace cba

#define CBA_LOG_AT(level, tag, expr)                               \
  do {                                                             \
    if (::cba::log_level() >= (level))                             \
      std::cerr << "[" tag "] " << expr << std::endl;              \
  } while (0)

#define CBA_LOG_ERROR(expr) CBA_LOG_AT(::cba::LogLevel::kError, "error", expr)
#define CBA_LOG_INFO(expr) CBA_LOG_AT(::cba::LogLevel::kInfo, "info", expr)
#define CBA_LOG_DEBUG(expr) CBA_LOG_AT(::cba::LogLevel::kDebug, "debug", expr)

#endif  // CBA_LOG_HPP_
