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
#include "chordrec/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace chordrec {

/// Synthetic songs: random major/minor triad progressions rendered as
/// harmonic tones plus white noise, with exact annotations.
struct SynthConfig {
    std::size_t num_songs = 40;
    double song_seconds = 8.0;
    double min_segment_seconds = 0.8;
    double max_segment_seconds = 2.4;
    double no_chord_probability = 0.1;
    double noise_level = 0.02;  ///< noise standard deviation relative to full scale
    double sample_rate = 44100.0;
    int num_folds = 8;
    std::uint64_t seed = 0;
};

struct SynthSong {
    std::string id;
    std::vector<float> samples;
    AnnotationTrack annotation;
};

/// One chord as a sum of harmonic tones (bass note, root, third, fifth) with a
/// short fade in and out; N renders as silence. Noise is added separately.
std::vector<float> render_chord(ChordLabel chord, double seconds, double sample_rate, std::mt19937_64& rng);

SynthSong synth_song(const SynthConfig& config, std::size_t index, std::mt19937_64& rng);

/// Writes <id>.wav, <id>.lab and manifest.json into `out_dir`; fold = index % num_folds.
std::vector<ManifestEntry> write_synthetic_corpus(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace chordrec
