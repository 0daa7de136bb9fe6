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

#include "s5/util/error.hpp"

namespace s5 {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Validation:
      return 2;
    case ErrorKind::Io:
      return 3;
    case ErrorKind::Model:
    case ErrorKind::Routing:
    case ErrorKind::Dimension:
      return 4;
    case ErrorKind::Numeric:
      return 5;
    case ErrorKind::Index:
    case ErrorKind::State:
      return 1;
  }
  return 1;
}

}  // namespace s5
