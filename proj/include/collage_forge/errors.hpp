/* Copyright 2026 The collage_forge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace cforge {

enum class ErrorKind {
  kEmptyCombo,
  kParse,
  kOverlap,
  kMissingFrameImage,
  kIo,
  kDimensionMismatch,
  kNoBackgrounds,
  kUnsatisfiable,
  kDuplicatePlanId,
  kSpeciesMismatch,
  kVocabulary,
  kInvalidArgument,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kEmptyCombo: return "EmptyCombo";
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kOverlap: return "OverlapError";
    case ErrorKind::kMissingFrameImage: return "MissingFrameImage";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kNoBackgrounds: return "NoBackgrounds";
    case ErrorKind::kUnsatisfiable: return "Unsatisfiable";
    case ErrorKind::kDuplicatePlanId: return "DuplicatePlanId";
    case ErrorKind::kSpeciesMismatch: return "SpeciesMismatch";
    case ErrorKind::kVocabulary: return "VocabularyMismatch";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// Every failure raised by the library carries a kind so the CLI can map it
// onto its exit-code taxonomy.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Exit codes: 2 parse, 3 I/O, 4 unsatisfiable, 5 vocabulary, 1 anything else.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse:
    case ErrorKind::kOverlap:
    case ErrorKind::kEmptyCombo:
      return 2;
    case ErrorKind::kIo:
    case ErrorKind::kMissingFrameImage:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kDuplicatePlanId:
      return 3;
    case ErrorKind::kUnsatisfiable:
    case ErrorKind::kNoBackgrounds:
      return 4;
    case ErrorKind::kVocabulary:
    case ErrorKind::kSpeciesMismatch:
      return 5;
    case ErrorKind::kInvalidArgument:
      return 1;
  }
  return 1;
}

}  // namespace cforge
