// Copyright 2026 The S5 Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace s5 {

// Every failure raised by the library carries a category; the CLI maps
// categories onto process exit codes.
enum class ErrorKind {
  Dimension,
  Index,
  State,
  Validation,
  Config,
  Io,
  Routing,
  Model,
  Numeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define S5_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(Kind, what) {}    \
  };

S5_DEFINE_ERROR(DimensionError, ErrorKind::Dimension)
S5_DEFINE_ERROR(IndexError, ErrorKind::Index)
S5_DEFINE_ERROR(StateError, ErrorKind::State)
S5_DEFINE_ERROR(ValidationError, ErrorKind::Validation)
S5_DEFINE_ERROR(ConfigError, ErrorKind::Config)
S5_DEFINE_ERROR(IoError, ErrorKind::Io)
S5_DEFINE_ERROR(RoutingError, ErrorKind::Routing)
S5_DEFINE_ERROR(ModelError, ErrorKind::Model)
S5_DEFINE_ERROR(NumericError, ErrorKind::Numeric)

#undef S5_DEFINE_ERROR

/// Process exit code for an error category: 2 config, 3 IO, 4 model,
/// 5 numeric abort. Anything else is an internal failure (1).
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace s5
