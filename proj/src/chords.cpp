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


#include "chordrec/chords.hpp"

#include "chordrec/errors.hpp"

#include <array>
#include <map>
#include <string>

namespace chordrec {

namespace {

constexpr std::array<std::string_view, 12> kPitchNames = {"C",  "C#", "D",  "D#", "E",  "F",
                                                          "F#", "G",  "G#", "A",  "A#", "B"};

int mod12(int x) { return ((x % 12) + 12) % 12; }

// Degree (1..13) -> semitones above the root.
int degree_semitones(int degree) {
    static constexpr std::array<int, 14> table = {0, 0, 2, 4, 5, 7, 9, 11, 12, 14, 16, 17, 19, 21};
    if (degree < 1 || degree > 13) throw DataError("interval degree out of range: " + std::to_string(degree));
    return table[static_cast<std::size_t>(degree)];
}

const std::map<std::string, std::string, std::less<>>& shorthands() {
    static const std::map<std::string, std::string, std::less<>> table = {
        {"maj", "1,3,5"},          {"min", "1,b3,5"},          {"dim", "1,b3,b5"},
        {"aug", "1,3,#5"},         {"maj7", "1,3,5,7"},        {"min7", "1,b3,5,b7"},
        {"7", "1,3,5,b7"},         {"dim7", "1,b3,b5,bb7"},    {"hdim7", "1,b3,b5,b7"},
        {"minmaj7", "1,b3,5,7"},   {"maj6", "1,3,5,6"},        {"min6", "1,b3,5,6"},
        {"9", "1,3,5,b7,9"},       {"maj9", "1,3,5,7,9"},      {"min9", "1,b3,5,b7,9"},
        {"11", "1,3,5,b7,9,11"},   {"min11", "1,b3,5,b7,9,11"}, {"13", "1,3,5,b7,9,11,13"},
        {"maj13", "1,3,5,7,9,11,13"}, {"min13", "1,b3,5,b7,9,11,13"},
        {"sus2", "1,2,5"},         {"sus4", "1,4,5"},          {"5", "1,5"},
        {"1", "1"},
    };
    return table;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Applies one interval token ("b3", "#5", "*3", "9") to the set.
void apply_interval(std::set<int>& out, std::string_view tok) {
    tok = trim(tok);
    if (tok.empty()) throw DataError("empty interval in chord quality");
    bool omit = false;
    if (tok.front() == '*') {
        omit = true;
        tok.remove_prefix(1);
    }
    int shift = 0;
    while (!tok.empty() && (tok.front() == 'b' || tok.front() == '#')) {
        shift += tok.front() == 'b' ? -1 : 1;
        tok.remove_prefix(1);
    }
    if (tok.empty() || tok.size() > 2) throw DataError("malformed interval in chord quality");
    int degree = 0;
    for (char c : tok) {
        if (c < '0' || c > '9') throw DataError("malformed interval in chord quality");
        degree = degree * 10 + (c - '0');
    }
    const int semis = degree_semitones(degree) + shift;
    if (omit) out.erase(semis);
    else out.insert(semis);
}

void apply_interval_list(std::set<int>& out, std::string_view list) {
    while (true) {
        auto comma = list.find(',');
        apply_interval(out, list.substr(0, comma));
        if (comma == std::string_view::npos) break;
        list.remove_prefix(comma + 1);
    }
}

}  // namespace

ChordLabel::ChordLabel(int index) : index_(index) {
    if (index < 0 || index >= kNumClasses) throw DataError("chord class index out of range: " + std::to_string(index));
}

ChordLabel ChordLabel::major(int root) { return ChordLabel(mod12(root)); }
ChordLabel ChordLabel::minor(int root) { return ChordLabel(12 + mod12(root)); }

ChordLabel ChordLabel::transposed(int semitones) const {
    if (is_no_chord()) return *this;
    return is_major() ? major(root() + semitones) : minor(root() + semitones);
}

std::string ChordLabel::name() const {
    if (is_no_chord()) return "N";
    return std::string(pitch_class_name(root())) + (is_major() ? ":maj" : ":min");
}

std::string_view pitch_class_name(int pitch_class) { return kPitchNames[static_cast<std::size_t>(mod12(pitch_class))]; }

int parse_root(std::string_view root) {
    root = trim(root);
    if (root.empty()) throw DataError("empty chord root");
    static constexpr std::array<int, 7> naturals = {9, 11, 0, 2, 4, 5, 7};  // A..G
    const char letter = root.front();
    if (letter < 'A' || letter > 'G') throw DataError("unparseable chord root '" + std::string(root) + "'");
    int pc = naturals[static_cast<std::size_t>(letter - 'A')];
    for (char c : root.substr(1)) {
        if (c == '#') ++pc;
        else if (c == 'b') --pc;
        else throw DataError("unparseable chord root '" + std::string(root) + "'");
    }
    return mod12(pc);
}

std::set<int> quality_intervals(std::string_view quality) {
    quality = trim(quality);
    std::string_view shorthand = quality;
    std::string_view extra;
    if (auto paren = quality.find('('); paren != std::string_view::npos) {
        if (quality.back() != ')') throw DataError("unbalanced interval list in '" + std::string(quality) + "'");
        shorthand = quality.substr(0, paren);
        extra = quality.substr(paren + 1, quality.size() - paren - 2);
    }

    std::set<int> out;
    if (!shorthand.empty()) {
        auto it = shorthands().find(shorthand);
        if (it == shorthands().end()) throw DataError("unknown chord quality '" + std::string(shorthand) + "'");
        apply_interval_list(out, it->second);
    } else if (extra.empty()) {
        apply_interval_list(out, "1,3,5");  // bare root means a major triad
    } else {
        out.insert(0);  // a bare interval list always contains the root
    }
    if (!extra.empty()) apply_interval_list(out, extra);
    return out;
}

ReducedLabel reduce_label_detailed(std::string_view raw) {
    raw = trim(raw);
    if (raw == "N") return {ChordLabel::no_chord(), true};
    if (raw == "X") return {ChordLabel::no_chord(), false};

    std::string_view body = raw;
    if (auto slash = body.find('/'); slash != std::string_view::npos) body = body.substr(0, slash);

    std::string_view root = body;
    std::string_view quality;
    if (auto colon = body.find(':'); colon != std::string_view::npos) {
        root = body.substr(0, colon);
        quality = body.substr(colon + 1);
    } else if (auto paren = body.find('('); paren != std::string_view::npos) {
        root = body.substr(0, paren);
        quality = body.substr(paren);
    }
    const int pc = parse_root(root);

    std::set<int> intervals;
    try {
        intervals = quality_intervals(quality);
    } catch (const DataError&) {
        return {ChordLabel::no_chord(), false};
    }
    if (intervals.count(4)) return {ChordLabel::major(pc), true};
    if (intervals.count(3)) return {ChordLabel::minor(pc), true};
    return {ChordLabel::no_chord(), false};
}

}  // namespace chordrec
