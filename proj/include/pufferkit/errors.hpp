// Copyright 2026 The Pufferkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PUFFERKIT_ERRORS_HPP
#define PUFFERKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pufferkit {

// Invalid inputs: bad ranges, malformed configs, dimension mismatches.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what)
      : std::invalid_argument(what) {}
};

// The request is well-formed but outside what this implementation can
// compute exactly (e.g. a non-enumerable distribution family handed to an
// exact oracle). Distinct from ValidationError so callers can branch.
class CapabilityError : public std::runtime_error {
 public:
  explicit CapabilityError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace pufferkit

#endif  // PUFFERKIT_ERRORS_HPP
