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


#include "chordrec/annotations.hpp"

#include "chordrec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace chordrec {

AnnotationTrack parse_lab(std::istream& in, const std::string& source) {
    AnnotationTrack track;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first) || first.front() == '#') continue;

        auto fail = [&](const std::string& why) {
            throw DataError(source + ":" + std::to_string(lineno) + ": " + why);
        };
        AnnotatedSegment seg;
        try {
            std::size_t used = 0;
            seg.start = std::stod(first, &used);
            if (used != first.size()) fail("malformed start time '" + first + "'");
        } catch (const std::logic_error&) {
            fail("malformed start time '" + first + "'");
        }
        std::string end_tok;
        if (!(ls >> end_tok)) fail("expected 'start end label'");
        try {
            std::size_t used = 0;
            seg.end = std::stod(end_tok, &used);
            if (used != end_tok.size()) fail("malformed end time '" + end_tok + "'");
        } catch (const std::logic_error&) {
            fail("malformed end time '" + end_tok + "'");
        }
        if (!(ls >> seg.raw_label)) fail("missing chord label");
        std::string rest;
        if (ls >> rest) fail("unexpected trailing text '" + rest + "'");
        if (!std::isfinite(seg.start) || !std::isfinite(seg.end)) fail("non-finite time");
        if (seg.start < 0.0) fail("negative start time");
        if (!(seg.end > seg.start)) fail("end before start");
        track.segments.push_back(std::move(seg));
    }

    std::stable_sort(track.segments.begin(), track.segments.end(),
                     [](const auto& a, const auto& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < track.segments.size(); ++i) {
        if (track.segments[i].start < track.segments[i - 1].end - 1e-9) {
            std::ostringstream msg;
            msg << source << ": overlapping segments at " << track.segments[i - 1].start << "-"
                << track.segments[i - 1].end << " and " << track.segments[i].start << "-" << track.segments[i].end;
            throw DataError(msg.str());
        }
    }
    return track;
}

AnnotationTrack parse_lab(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open annotation file: " + path.string());
    return parse_lab(f, path.string());
}

AnnotationTrack parse_lab_string(const std::string& text) {
    std::istringstream in(text);
    return parse_lab(in);
}

void write_lab(std::ostream& out, const AnnotationTrack& track) {
    out << std::setprecision(6) << std::fixed;
    for (const auto& s : track.segments) out << s.start << '\t' << s.end << '\t' << s.raw_label << '\n';
}

void write_lab(const std::filesystem::path& path, const AnnotationTrack& track) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path.string());
    write_lab(f, track);
}

std::vector<ChordLabel> frames_from_annotations(const AnnotationTrack& track, double frame_rate,
                                                std::size_t num_frames) {
    if (!(frame_rate > 0.0)) throw DataError("frame_rate must be positive");
    std::vector<ChordLabel> reduced;
    reduced.reserve(track.segments.size());
    for (const auto& s : track.segments) reduced.push_back(reduce_label(s.raw_label));

    std::vector<ChordLabel> out(num_frames, ChordLabel::no_chord());
    std::size_t first = 0;  // first segment that may still overlap the current frame
    const auto& segs = track.segments;
    for (std::size_t i = 0; i < num_frames; ++i) {
        const double lo = (static_cast<double>(i) - 0.5) / frame_rate;
        const double hi = (static_cast<double>(i) + 0.5) / frame_rate;
        while (first < segs.size() && segs[first].end <= lo) ++first;
        double best = 0.0;
        for (std::size_t s = first; s < segs.size() && segs[s].start < hi; ++s) {
            const double overlap = std::min(hi, segs[s].end) - std::max(lo, segs[s].start);
            if (overlap > best) {
                best = overlap;
                out[i] = reduced[s];
            }
        }
    }
    return out;
}

}  // namespace chordrec
