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

#include <compare>
#include <set>
#include <string>
#include <string_view>

namespace chordrec {

/// One of the 25 target classes: indices 0..11 are the major chords C..B,
/// 12..23 the minor chords c..b (chromatic from C), 24 is no-chord.
class ChordLabel {
public:
    static constexpr int kNumClasses = 25;
    static constexpr int kNoChordIndex = 24;

    constexpr ChordLabel() = default;
    /// Throws DataError if index is outside 0..24.
    explicit ChordLabel(int index);

    static ChordLabel major(int root);
    static ChordLabel minor(int root);
    static constexpr ChordLabel no_chord() { return ChordLabel(); }

    constexpr int index() const { return index_; }
    constexpr bool is_no_chord() const { return index_ == kNoChordIndex; }
    constexpr bool is_major() const { return index_ < 12; }
    constexpr bool is_minor() const { return index_ >= 12 && index_ < 24; }
    /// Pitch class of the root, -1 for no-chord.
    constexpr int root() const { return is_no_chord() ? -1 : index_ % 12; }

    /// Root moved by `semitones` (mod 12); no-chord is unchanged.
    ChordLabel transposed(int semitones) const;

    /// "C:maj", "F#:min", "N".
    std::string name() const;

    constexpr auto operator<=>(const ChordLabel&) const = default;

private:
    int index_ = kNoChordIndex;
};

/// Sharp-spelled pitch class names, C = 0.
std::string_view pitch_class_name(int pitch_class);

/// Pitch class of a root such as "C", "Eb", "F##", "Cb". Throws DataError on
/// anything else.
int parse_root(std::string_view root);

/// Semitone offsets (from the root, not reduced mod 12) of a chord quality in
/// the common chord syntax, e.g. "maj7", "min(9)", "(1,b3,5)", "7(*5)". Throws
/// DataError for unknown shorthands or malformed interval lists.
std::set<int> quality_intervals(std::string_view quality);

struct ReducedLabel {
    ChordLabel label;
    bool mapped = true;  ///< false if the quality has no third (sus, power chord, ...)
};

/// Reduces a chord symbol root[:quality][/bass] (or "N"/"X") to the 25-class
/// alphabet: a major third in the quality selects major, otherwise a minor third
/// selects minor, otherwise no-chord. Throws DataError for an unparseable root.
ReducedLabel reduce_label_detailed(std::string_view raw);

inline ChordLabel reduce_label(std::string_view raw) { return reduce_label_detailed(raw).label; }

}  // namespace chordrec
