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
#include "chordrec/dataset.hpp"
#include "chordrec/frontend.hpp"
#include "chordrec/tensor.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace chordrec {

/// The log-frequency axis is treated as a uniform grid with this many bands per semitone.
inline constexpr double kBandsPerSemitone = 2.0;

/// Moves every row of the window up by `bands` rows (fractional shifts use linear
/// interpolation); rows shifted in from outside are zero.
RowMatrixF shift_bands(const RowMatrixF& window, double bands);

/// Pitch-shifts by k semitones (|k| <= 4) and transposes the label accordingly.
std::pair<ContextWindow, ChordLabel> semitone_shift(const ContextWindow& x, ChordLabel label, int semitones);

/// Detunes by a fraction of a semitone (|delta| <= 0.4); the label is unaffected.
ContextWindow detune_shift(const ContextWindow& x, double delta_semitones);

struct AugmentationPolicy {
    bool semitone_shift = true;
    bool detune = true;
    int max_semitones = 4;
    double max_detune = 0.4;

    static AugmentationPolicy disabled() { return {false, false, 4, 0.4}; }
};

struct Minibatch {
    Tensor<float> inputs;   ///< [B, 1, bands, 2C+1]
    Tensor<float> targets;  ///< [B, 25] one-hot
    std::vector<int> labels;
    std::vector<int> semitone_shifts;  ///< per sample, for inspection
};

/// Shuffled, optionally augmented mini-batches over every frame of the
/// selected songs. Each sample independently draws an integer semitone shift in
/// [-max, max] and a detune in [-max_detune, max_detune]. Deterministic for a
/// given seed.
class MinibatchStream {
public:
    MinibatchStream(const FrameDataset& data, std::size_t batch_size, AugmentationPolicy policy, std::uint64_t seed,
                    std::size_t context = 7);

    /// Reshuffles; call before each epoch.
    void start_epoch();
    /// Fills `out` with the next batch; false at the end of the epoch.
    bool next(Minibatch& out);

    std::size_t num_frames() const { return index_.size(); }
    std::size_t batches_per_epoch() const { return (index_.size() + batch_size_ - 1) / batch_size_; }

private:
    const FrameDataset& data_;
    std::size_t batch_size_;
    AugmentationPolicy policy_;
    std::size_t context_;
    std::mt19937_64 rng_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> index_;  // (song, frame)
    std::size_t cursor_ = 0;
};

}  // namespace chordrec
