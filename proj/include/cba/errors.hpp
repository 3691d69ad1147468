// cba/errors.hpp

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

#ifndef CBA_ERRORS_HPP_
#define CBA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace cba {

// Malformed on-disk artifact (bad magic, unsupported version, inconsistent
// counts).
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// File ended before the advertised payload was fully read.
struct TruncationError : FormatError {
  explicit TruncationError(const std::string& msg) : FormatError(msg) {}
};

// A label sequence that no length-T alignment can produce. In training this
// indicates a data-generation bug, so it is an error rather than an infinite
// loss.
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible artifacts (e.g. a checkpoint evaluated against a dataset with
// a different vocabulary).
struct MismatchError : std::runtime_error {
  explicit MismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration input: unknown key, unparseable value, invalid range.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite batch loss during training.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cba

#endif  // CBA_ERRORS_HPP_
