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


#include "chordrec/synth.hpp"

#include "chordrec/audio.hpp"
#include "chordrec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace chordrec {

namespace {

constexpr int kHarmonics = 8;

void add_tone(std::vector<float>& out, double freq, double amp, double rolloff, double sample_rate, double phase) {
    const double nyquist = sample_rate / 2;
    for (int h = 1; h <= kHarmonics && h * freq < nyquist; ++h) {
        const double a = amp * std::pow(rolloff, h - 1);
        const double w = 2.0 * std::numbers::pi * h * freq / sample_rate;
        for (std::size_t n = 0; n < out.size(); ++n)
            out[n] += static_cast<float>(a * std::sin(w * static_cast<double>(n) + phase * h));
    }
}

double midi_to_hz(double midi) { return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0); }

}  // namespace

std::vector<float> render_chord(ChordLabel chord, double seconds, double sample_rate, std::mt19937_64& rng) {
    const auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
    std::vector<float> out(n, 0.0f);
    if (chord.is_no_chord()) return out;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double rolloff = 0.5 + 0.25 * unit(rng);
    // Root between C3 and B3; inversions move the third and fifth up an octave at random.
    const int root = 48 + chord.root();
    const int third = root + (chord.is_major() ? 4 : 3) + (unit(rng) < 0.3 ? 12 : 0);
    const int fifth = root + 7 + (unit(rng) < 0.3 ? 12 : 0);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    add_tone(out, midi_to_hz(root - 12), 0.10, rolloff, sample_rate, phase);
    add_tone(out, midi_to_hz(root), 0.10, rolloff, sample_rate, phase * 0.7);
    add_tone(out, midi_to_hz(third), 0.08, rolloff, sample_rate, phase * 1.3);
    add_tone(out, midi_to_hz(fifth), 0.08, rolloff, sample_rate, phase * 0.4);

    const std::size_t fade = std::min<std::size_t>(n / 4, static_cast<std::size_t>(0.01 * sample_rate));
    for (std::size_t i = 0; i < fade; ++i) {
        const auto g = static_cast<float>(static_cast<double>(i) / static_cast<double>(fade));
        out[i] *= g;
        out[n - 1 - i] *= g;
    }
    return out;
}

SynthSong synth_song(const SynthConfig& config, std::size_t index, std::mt19937_64& rng) {
    if (!(config.song_seconds > 0.0) || !(config.min_segment_seconds > 0.0) ||
        config.max_segment_seconds < config.min_segment_seconds)
        throw UsageError("invalid synthetic corpus durations");
    SynthSong song;
    char id[32];
    std::snprintf(id, sizeof id, "synth_%03zu", index);
    song.id = id;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> seg_len(config.min_segment_seconds, config.max_segment_seconds);
    std::uniform_int_distribution<int> cls(0, 23);
    const auto total = static_cast<std::size_t>(std::llround(config.song_seconds * config.sample_rate));
    song.samples.reserve(total);

    std::size_t pos = 0;
    int previous = -1;
    while (pos < total) {
        std::size_t len = static_cast<std::size_t>(std::llround(seg_len(rng) * config.sample_rate));
        if (total - pos < len + static_cast<std::size_t>(config.min_segment_seconds * config.sample_rate / 2))
            len = total - pos;
        int k = unit(rng) < config.no_chord_probability ? ChordLabel::kNoChordIndex : cls(rng);
        while (k == previous) k = cls(rng);
        previous = k;
        const ChordLabel label(k);
        const auto part = render_chord(label, static_cast<double>(len) / config.sample_rate, config.sample_rate, rng);
        song.samples.insert(song.samples.end(), part.begin(), part.end());
        song.annotation.segments.push_back({static_cast<double>(pos) / config.sample_rate,
                                            static_cast<double>(pos + len) / config.sample_rate, label.name()});
        pos += len;
    }

    std::normal_distribution<double> noise(0.0, config.noise_level);
    for (auto& s : song.samples) s = std::clamp(s + static_cast<float>(noise(rng)), -1.0f, 1.0f);
    return song;
}

std::vector<ManifestEntry> write_synthetic_corpus(const SynthConfig& config, const std::filesystem::path& out_dir) {
    if (config.num_folds < 1) throw UsageError("num_folds must be positive");
    std::filesystem::create_directories(out_dir);
    std::mt19937_64 rng(config.seed);
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < config.num_songs; ++i) {
        const SynthSong song = synth_song(config, i, rng);
        const auto wav = song.id + ".wav";
        const auto lab = song.id + ".lab";
        write_wav(out_dir / wav, song.samples, 1, static_cast<int>(config.sample_rate), SampleFormat::Int16);
        write_lab(out_dir / lab, song.annotation);
        entries.push_back({song.id, out_dir / wav, out_dir / lab, static_cast<int>(i % static_cast<std::size_t>(config.num_folds))});
    }
    write_manifest(out_dir / "manifest.json", entries);
    return entries;
}

}  // namespace chordrec
