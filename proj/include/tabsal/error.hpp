// Copyright 2026 The Tabsal Authors
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

#ifndef TABSAL_ERROR_HPP_
#define TABSAL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tabsal {

// Base for all tabsal errors. `category()` is a stable machine-readable tag
// that the CLI prints next to the message and maps to an exit status.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

#define TABSAL_DEFINE_ERROR(NAME)                             \
  class NAME : public Error {                                 \
   public:                                                    \
    explicit NAME(const std::string& message)                 \
        : Error(#NAME, message) {}                            \
  }

TABSAL_DEFINE_ERROR(ParseError);
TABSAL_DEFINE_ERROR(IntegrityError);
TABSAL_DEFINE_ERROR(IoError);
TABSAL_DEFINE_ERROR(AggregationTypeError);
TABSAL_DEFINE_ERROR(CorruptionImpossible);
TABSAL_DEFINE_ERROR(StatementTooLong);
TABSAL_DEFINE_ERROR(DimensionError);
TABSAL_DEFINE_ERROR(NonFiniteError);
TABSAL_DEFINE_ERROR(EmptyProfile);
TABSAL_DEFINE_ERROR(IndexError);
TABSAL_DEFINE_ERROR(MissingProfile);
TABSAL_DEFINE_ERROR(RefutedInstanceError);
TABSAL_DEFINE_ERROR(MissingCheckpoint);
TABSAL_DEFINE_ERROR(UsageError);

#undef TABSAL_DEFINE_ERROR

}  // namespace tabsal

#endif  // TABSAL_ERROR_HPP_
