// Copyright 2026 The chordrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include "chordrec/chords.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace chordrec {

struct AnnotatedSegment {
    double start = 0.0;
    double end = 0.0;
    std::string raw_label;

    bool operator==(const AnnotatedSegment&) const = default;
};

/// Sorted, non-overlapping chord segments with labels kept verbatim.
struct AnnotationTrack {
    std::vector<AnnotatedSegment> segments;

    double end_time() const { return segments.empty() ? 0.0 : segments.back().end; }
};

/// Parses "start end label" lines (whitespace separated). Blank lines and lines
/// starting with '#' are skipped. Segments are sorted by start time.
/// Throws DataError naming the line for malformed rows, end <= start, or overlaps.
AnnotationTrack parse_lab(std::istream& in, const std::string& source = "<stream>");
AnnotationTrack parse_lab(const std::filesystem::path& path);
AnnotationTrack parse_lab_string(const std::string& text);

void write_lab(std::ostream& out, const AnnotationTrack& track);
void write_lab(const std::filesystem::path& path, const AnnotationTrack& track);

/// Frame i covers [(i - 0.5) / frame_rate, (i + 0.5) / frame_rate] and takes the
/// label of the segment overlapping it most (earlier segment on ties). Frames
/// without any overlapping segment are no-chord.
std::vector<ChordLabel> frames_from_annotations(const AnnotationTrack& track, double frame_rate,
                                                std::size_t num_frames);

}  // namespace chordrec
