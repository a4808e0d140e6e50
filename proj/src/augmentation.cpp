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


#include "chordrec/augmentation.hpp"

#include "chordrec/errors.hpp"
#include "chordrec/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <tuple>

namespace chordrec {

RowMatrixF shift_bands(const RowMatrixF& window, double bands) {
    const Eigen::Index rows = window.rows();
    RowMatrixF out = RowMatrixF::Zero(rows, window.cols());
    if (bands == 0.0) return window;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double src = static_cast<double>(r) - bands;
        const double lo = std::floor(src);
        const auto i0 = static_cast<Eigen::Index>(lo);
        const auto frac = static_cast<float>(src - lo);
        if (i0 >= 0 && i0 < rows && frac < 1.0f) out.row(r) += (1.0f - frac) * window.row(i0);
        if (i0 + 1 >= 0 && i0 + 1 < rows && frac > 0.0f) out.row(r) += frac * window.row(i0 + 1);
    }
    return out;
}

std::pair<ContextWindow, ChordLabel> semitone_shift(const ContextWindow& x, ChordLabel label, int semitones) {
    if (std::abs(semitones) > 4) throw DataError("semitone_shift: |k| must be at most 4");
    ContextWindow out;
    out.target_index = x.target_index;
    out.values = shift_bands(x.values, kBandsPerSemitone * semitones);
    return {std::move(out), label.transposed(semitones)};
}

ContextWindow detune_shift(const ContextWindow& x, double delta_semitones) {
    if (std::abs(delta_semitones) > 0.4 + 1e-12) throw DataError("detune_shift: |delta| must be at most 0.4");
    ContextWindow out;
    out.target_index = x.target_index;
    out.values = shift_bands(x.values, kBandsPerSemitone * delta_semitones);
    return out;
}

MinibatchStream::MinibatchStream(const FrameDataset& data, std::size_t batch_size, AugmentationPolicy policy,
                                 std::uint64_t seed, std::size_t context)
    : data_(data), batch_size_(batch_size), policy_(policy), context_(context), rng_(seed) {
    if (batch_size == 0) throw UsageError("batch size must be positive");
    for (std::size_t s = 0; s < data.songs.size(); ++s)
        for (std::size_t f = 0; f < data.songs[s].labels.size(); ++f)
            index_.emplace_back(static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(f));
    cursor_ = index_.size();
}

void MinibatchStream::start_epoch() {
    std::shuffle(index_.begin(), index_.end(), rng_);
    cursor_ = 0;
}

bool MinibatchStream::next(Minibatch& out) {
    if (cursor_ >= index_.size()) return false;
    const std::size_t n = std::min(batch_size_, index_.size() - cursor_);
    const std::size_t bands = data_.songs[index_[cursor_].first].spectrogram.num_bands();
    const std::size_t width = 2 * context_ + 1;

    out.inputs = Tensor<float>(Shape{n, 1, bands, width});
    out.labels.assign(n, 0);
    out.semitone_shifts.assign(n, 0);
    std::uniform_int_distribution<int> semis(-policy_.max_semitones, policy_.max_semitones);
    std::uniform_real_distribution<double> detune(-policy_.max_detune, policy_.max_detune);

    for (std::size_t b = 0; b < n; ++b) {
        const auto [song, frame] = index_[cursor_ + b];
        const auto& sd = data_.songs[song];
        if (sd.spectrogram.num_bands() != bands) throw DataError("songs disagree on the number of bands");
        ContextWindow win = context_window(sd.spectrogram, frame, context_);
        ChordLabel label = sd.labels[frame];
        // Both values are drawn even when the policy disables them.
        const int k = semis(rng_);
        const double d = detune(rng_);
        if (policy_.semitone_shift && k != 0) std::tie(win, label) = semitone_shift(win, label, k);
        if (policy_.detune && d != 0.0) win = detune_shift(win, d);
        std::memcpy(out.inputs.item(b).data(), win.values.data(), bands * width * sizeof(float));
        out.labels[b] = label.index();
        out.semitone_shifts[b] = policy_.semitone_shift ? k : 0;
    }
    out.targets = one_hot<float>(out.labels, ChordLabel::kNumClasses);
    cursor_ += n;
    return true;
}

}  // namespace chordrec
