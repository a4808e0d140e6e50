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


#include "chordrec/dataset.hpp"

#include "chordrec/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace chordrec {

std::size_t FrameDataset::num_frames() const {
    std::size_t n = 0;
    for (const auto& s : songs) n += s.labels.size();
    return n;
}

void FrameDataset::validate() const {
    for (const auto& s : songs) {
        if (s.labels.size() != s.spectrogram.num_frames())
            throw DataError("song '" + s.id + "': " + std::to_string(s.labels.size()) + " labels for " +
                            std::to_string(s.spectrogram.num_frames()) + " frames");
    }
}

FrameDataset FrameDataset::subset(const std::vector<std::size_t>& indices) const {
    FrameDataset out;
    for (std::size_t i : indices) out.songs.push_back(songs.at(i));
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open manifest " + path.string());
    std::vector<ManifestEntry> out;
    try {
        const auto doc = nlohmann::json::parse(f);
        const auto base = path.parent_path();
        for (const auto& rec : doc.at("songs")) {
            ManifestEntry e;
            e.id = rec.at("id").get<std::string>();
            e.audio = rec.at("audio").get<std::string>();
            e.annotation = rec.value("annotation", std::string());
            e.fold = rec.value("fold", 0);
            if (e.audio.is_relative()) e.audio = base / e.audio;
            if (!e.annotation.empty() && e.annotation.is_relative()) e.annotation = base / e.annotation;
            out.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest " + path.string() + ": " + e.what());
    }
    return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    nlohmann::json songs = nlohmann::json::array();
    const auto base = path.parent_path();
    for (const auto& e : entries) {
        songs.push_back({{"id", e.id},
                         {"audio", std::filesystem::relative(e.audio, base).generic_string()},
                         {"annotation", std::filesystem::relative(e.annotation, base).generic_string()},
                         {"fold", e.fold}});
    }
    std::ofstream f(path);
    if (!f) throw DataError("cannot write manifest " + path.string());
    f << nlohmann::json{{"songs", songs}}.dump(2) << '\n';
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_song(std::size_t num_songs,
                                                                            double validation_fraction,
                                                                            std::uint64_t seed) {
    std::vector<std::size_t> order(num_songs);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(std::lround(validation_fraction * static_cast<double>(num_songs)));
    if (num_songs >= 2) n_val = std::clamp<std::size_t>(n_val, 1, num_songs - 1);
    else n_val = 0;
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    return {train, val};
}

}  // namespace chordrec
