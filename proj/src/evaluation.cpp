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


#include "chordrec/evaluation.hpp"

#include "chordrec/errors.hpp"

#include <algorithm>

namespace chordrec {

void LabelSegments::validate() const {
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (!(segments[i].end > segments[i].start)) throw DataError("segment with end <= start");
        if (i > 0 && segments[i].start < segments[i - 1].end - 1e-9) throw DataError("overlapping segments");
    }
}

LabelSegments segments_from_frames(const std::vector<ChordLabel>& labels, double frame_rate) {
    if (!(frame_rate > 0.0)) throw DataError("frame_rate must be positive");
    const std::size_t n = labels.size();
    const auto edge = [&](std::size_t i) {
        if (i == 0) return 0.0;
        if (i == n) return static_cast<double>(n) / frame_rate;
        return (static_cast<double>(i) - 0.5) / frame_rate;
    };
    LabelSegments out;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        if (i == n || labels[i] != labels[begin]) {
            out.segments.push_back({edge(begin), edge(i), labels[begin]});
            begin = i;
        }
    }
    return out;
}

std::vector<ReducedSegment> reduce_annotations(const AnnotationTrack& track) {
    std::vector<ReducedSegment> out;
    out.reserve(track.segments.size());
    for (const auto& s : track.segments) {
        const ReducedLabel r = reduce_label_detailed(s.raw_label);
        out.push_back({s.start, s.end, r.label, r.mapped && !r.label.is_no_chord()});
    }
    return out;
}

AnnotationTrack to_annotation_track(const LabelSegments& segments) {
    AnnotationTrack t;
    for (const auto& s : segments.segments) t.segments.push_back({s.start, s.end, s.label.name()});
    return t;
}

std::optional<double> WcsrResult::score() const {
    if (t_a <= 0.0) return std::nullopt;
    return t_c / t_a;
}

WcsrResult wcsr(const LabelSegments& predictions, const std::vector<ReducedSegment>& annotations) {
    predictions.validate();
    WcsrResult r;
    // Both lists are sorted, so a merged sweep visits every pair of overlapping segments once.
    std::size_t p = 0;
    const auto& pred = predictions.segments;
    for (const auto& a : annotations) {
        if (!a.counted) continue;
        r.t_a += a.end - a.start;
        while (p < pred.size() && pred[p].end <= a.start) ++p;
        for (std::size_t q = p; q < pred.size() && pred[q].start < a.end; ++q) {
            if (pred[q].label != a.label) continue;
            const double overlap = std::min(a.end, pred[q].end) - std::max(a.start, pred[q].start);
            if (overlap > 0.0) r.t_c += overlap;
        }
    }
    return r;
}

WcsrResult wcsr(const LabelSegments& predictions, const LabelSegments& annotations) {
    annotations.validate();
    std::vector<ReducedSegment> reduced;
    for (const auto& s : annotations.segments)
        reduced.push_back({s.start, s.end, s.label, !s.label.is_no_chord()});
    return wcsr(predictions, reduced);
}

double corpus_wcsr(const std::vector<WcsrResult>& songs) {
    double tc = 0.0, ta = 0.0;
    for (const auto& s : songs) {
        tc += s.t_c;
        ta += s.t_a;
    }
    if (ta <= 0.0) throw DataError("corpus WCSR undefined: no major/minor annotated time");
    return tc / ta;
}

std::size_t count_transitions(const std::vector<int>& labels) {
    std::size_t n = 0;
    for (std::size_t i = 1; i < labels.size(); ++i) n += labels[i] != labels[i - 1];
    return n;
}

}  // namespace chordrec
