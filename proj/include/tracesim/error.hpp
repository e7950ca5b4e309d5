// Copyright 2026 The tracesim Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tracesim {

enum class ErrorCode {
    // Circuit construction / parsing.
    ParseError,
    UnknownMode,
    UnknownSegment,
    OverlappingSegments,
    DanglingMode,
    DuplicateDetectorLabel,
    DuplicateTap,
    InvalidCircuit,
    // Engines.
    TooManyTaps,
    UnknownOutcome,
    ZeroProbabilityOutcome,
    UnreachableOutcome,
    ZeroOverlap,
    MixedPostselection,
    // Protocols and analysis.
    InvalidParameter,
    TuningFailed,
    KeyMismatch,
    DegenerateRange,
    NoCompleteCut,
    // Everything the CLI does with files.
    Io,
};

/// Coarse grouping used by the command-line front end to pick an exit status.
enum class ErrorCategory { Config, Physics, Cap };

inline std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnknownMode: return "UnknownMode";
        case ErrorCode::UnknownSegment: return "UnknownSegment";
        case ErrorCode::OverlappingSegments: return "OverlappingSegments";
        case ErrorCode::DanglingMode: return "DanglingMode";
        case ErrorCode::DuplicateDetectorLabel: return "DuplicateDetectorLabel";
        case ErrorCode::DuplicateTap: return "DuplicateTap";
        case ErrorCode::InvalidCircuit: return "InvalidCircuit";
        case ErrorCode::TooManyTaps: return "TooManyTaps";
        case ErrorCode::UnknownOutcome: return "UnknownOutcome";
        case ErrorCode::ZeroProbabilityOutcome: return "ZeroProbabilityOutcome";
        case ErrorCode::UnreachableOutcome: return "UnreachableOutcome";
        case ErrorCode::ZeroOverlap: return "ZeroOverlap";
        case ErrorCode::MixedPostselection: return "MixedPostselection";
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::TuningFailed: return "TuningFailed";
        case ErrorCode::KeyMismatch: return "KeyMismatch";
        case ErrorCode::DegenerateRange: return "DegenerateRange";
        case ErrorCode::NoCompleteCut: return "NoCompleteCut";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

inline ErrorCategory error_category(ErrorCode code) {
    switch (code) {
        case ErrorCode::TooManyTaps:
            return ErrorCategory::Cap;
        case ErrorCode::ZeroProbabilityOutcome:
        case ErrorCode::UnreachableOutcome:
        case ErrorCode::ZeroOverlap:
        case ErrorCode::MixedPostselection:
        case ErrorCode::TuningFailed:
        case ErrorCode::KeyMismatch:
        case ErrorCode::DegenerateRange:
        case ErrorCode::NoCompleteCut:
            return ErrorCategory::Physics;
        default:
            return ErrorCategory::Config;
    }
}

class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return error_category(code_); }

   private:
    ErrorCode code_;
};

}  // namespace tracesim
