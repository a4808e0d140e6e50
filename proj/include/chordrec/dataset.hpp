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
#include "chordrec/frontend.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace chordrec {

struct SongData {
    std::string id;
    Spectrogram spectrogram;
    std::vector<ChordLabel> labels;  ///< one per spectrogram frame
    int fold = 0;
};

/// Labelled spectrograms for a set of songs.
struct FrameDataset {
    std::vector<SongData> songs;

    std::size_t num_songs() const { return songs.size(); }
    std::size_t num_frames() const;
    /// Throws DataError if any song's label count differs from its frame count.
    void validate() const;
    /// Subset by song index.
    FrameDataset subset(const std::vector<std::size_t>& indices) const;
};

struct ManifestEntry {
    std::string id;
    std::filesystem::path audio;
    std::filesystem::path annotation;
    int fold = 0;
};

/// JSON manifest: {"songs": [{"id", "audio", "annotation", "fold"}, ...]}.
/// Relative paths are resolved against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

/// Splits song indices into (train, validation) by song, never by frame.
/// At least one song goes to validation when there are two or more songs.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_song(std::size_t num_songs,
                                                                            double validation_fraction,
                                                                            std::uint64_t seed);

}  // namespace chordrec
