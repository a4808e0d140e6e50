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

#include "chordrec/audio.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace chordrec {

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class WindowKind { Hann, Rectangular };

struct FrameParams {
    std::size_t frame_size = 8192;
    std::size_t hop_size = 4410;
    double sample_rate = 44100.0;
    WindowKind window = WindowKind::Hann;

    double frame_rate() const { return sample_rate / static_cast<double>(hop_size); }
    /// Throws UsageError unless frame_size > hop_size > 0 and sample_rate > 0.
    void validate() const;
};

struct FilterbankParams {
    double bands_per_octave = 24.0;
    double fmin = 65.0;
    double fmax = 2100.0;
    /// Tuning reference the geometric grid is anchored to.
    double reference_hz = 440.0;
};

/// Triangular log-frequency filterbank over the non-negative FFT bins.
struct Filterbank {
    RowMatrixD weights;                          ///< num_bands x (frame_size/2 + 1), rows sum to 1
    std::vector<double> band_center_frequencies;  ///< Hz, strictly increasing
    std::vector<std::size_t> band_center_bins;
    std::size_t frame_size = 0;
    double sample_rate = 0.0;

    std::size_t num_bands() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Log-filtered magnitude spectrogram, one row per frame.
struct Spectrogram {
    RowMatrixF values;  ///< num_frames x num_bands
    double frame_rate = 10.0;

    std::size_t num_frames() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t num_bands() const { return static_cast<std::size_t>(values.cols()); }
};

/// One CNN input: bands x (2C+1) frames, centered on `target_index`.
struct ContextWindow {
    RowMatrixF values;
    std::size_t target_index = 0;
};

/// Magnitude STFT with frames centered at n * hop_size (zero padded on both
/// sides). Returns ceil(len / hop) x (frame_size/2 + 1).
RowMatrixD stft_magnitude(const AudioBuffer& audio, const FrameParams& params);

/// Filter centers are the pitches reference_hz * 2^(k / bands_per_octave) inside
/// [fmin, fmax], snapped to the nearest FFT bin with duplicates merged. The
/// lowest and highest snapped bins only serve as the outer triangle edges, so
/// the default configuration yields 105 bands.
Filterbank build_log_filterbank(double sample_rate, std::size_t frame_size,
                                const FilterbankParams& params = {});

/// log(1 + fb * |S|) per frame.
Spectrogram log_filtered_spectrogram(const AudioBuffer& audio, const FrameParams& params,
                                     const Filterbank& fb);

/// Same as log_filtered_spectrogram, starting from a precomputed magnitude STFT.
Spectrogram log_filtered_spectrogram(const RowMatrixD& magnitudes, double frame_rate,
                                     const Filterbank& fb);

/// Window around frame `index`; out-of-range frames replicate the first/last frame.
ContextWindow context_window(const Spectrogram& spec, std::size_t index, std::size_t context = 7);

std::vector<ContextWindow> context_windows(const Spectrogram& spec, std::size_t context = 7);

}  // namespace chordrec
