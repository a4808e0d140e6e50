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

#include "chordrec/annotations.hpp"
#include "chordrec/chords.hpp"

#include <optional>
#include <string>
#include <vector>

namespace chordrec {

struct LabelSegment {
    double start = 0.0;
    double end = 0.0;
    ChordLabel label;
};

/// Sorted, non-overlapping segments with start < end.
struct LabelSegments {
    std::vector<LabelSegment> segments;

    double end_time() const { return segments.empty() ? 0.0 : segments.back().end; }
    /// Throws DataError if segments are unsorted, overlapping or empty.
    void validate() const;
};

/// Merges runs of equal frame labels. Frame i is centred at i/fr, so inner
/// boundaries fall half a frame before the first frame of a run; the timeline
/// runs from 0 to N/fr.
LabelSegments segments_from_frames(const std::vector<ChordLabel>& labels, double frame_rate);

/// Reduces every annotation label to the 25-class vocabulary. `mapped` records
/// whether the raw label was a major or minor chord that counts towards t_a.
struct ReducedSegment {
    double start = 0.0;
    double end = 0.0;
    ChordLabel label;
    bool counted = false;
};
std::vector<ReducedSegment> reduce_annotations(const AnnotationTrack& track);

AnnotationTrack to_annotation_track(const LabelSegments& segments);

struct WcsrResult {
    double t_c = 0.0;  ///< seconds predicted correctly within t_a
    double t_a = 0.0;  ///< seconds annotated with a major or minor chord
    /// t_c / t_a, or nothing when t_a is zero.
    std::optional<double> score() const;
};

/// Exact interval overlap of predictions against annotations; annotations
/// that are not major/minor chords are outside t_a. Predictions beyond the
/// annotation extent are ignored.
WcsrResult wcsr(const LabelSegments& predictions, const std::vector<ReducedSegment>& annotations);
WcsrResult wcsr(const LabelSegments& predictions, const LabelSegments& annotations);

/// Sum of t_c over sum of t_a. Throws DataError when the total t_a is zero.
double corpus_wcsr(const std::vector<WcsrResult>& songs);

/// Number of positions where consecutive labels differ.
std::size_t count_transitions(const std::vector<int>& labels);

}  // namespace chordrec
