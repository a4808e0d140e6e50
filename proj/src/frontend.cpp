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


#include "chordrec/frontend.hpp"

#include "chordrec/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

namespace chordrec {

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        in_ = fftw_alloc_real(n);
        out_ = fftw_alloc_complex(n / 2 + 1);
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    double* input() { return in_; }
    void execute() { fftw_execute(plan_); }
    double magnitude(std::size_t k) const { return std::hypot(out_[k][0], out_[k][1]); }

private:
    std::size_t n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

std::vector<double> make_window(std::size_t n, WindowKind kind) {
    std::vector<double> w(n, 1.0);
    if (kind == WindowKind::Hann && n > 1) {
        for (std::size_t i = 0; i < n; ++i)
            w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / static_cast<double>(n - 1));
    }
    return w;
}

}  // namespace

void FrameParams::validate() const {
    if (!(hop_size > 0 && frame_size > hop_size))
        throw UsageError("frame parameters require frame_size > hop_size > 0");
    if (!(sample_rate > 0.0)) throw UsageError("sample_rate must be positive");
}

RowMatrixD stft_magnitude(const AudioBuffer& audio, const FrameParams& params) {
    params.validate();
    if (audio.samples.empty()) throw DataError("stft_magnitude: empty audio");

    const std::size_t n = params.frame_size;
    const std::size_t bins = n / 2 + 1;
    const std::size_t len = audio.samples.size();
    const std::size_t frames = (len + params.hop_size - 1) / params.hop_size;
    const auto window = make_window(n, params.window);
    const auto half = static_cast<std::ptrdiff_t>(n / 2);

    RowMatrixD mag(frames, bins);
    RealFft fft(n);
    double* buf = fft.input();
    for (std::size_t f = 0; f < frames; ++f) {
        const auto start = static_cast<std::ptrdiff_t>(f * params.hop_size) - half;
        for (std::size_t i = 0; i < n; ++i) {
            const std::ptrdiff_t s = start + static_cast<std::ptrdiff_t>(i);
            const double x = (s >= 0 && s < static_cast<std::ptrdiff_t>(len)) ? audio.samples[static_cast<std::size_t>(s)] : 0.0;
            buf[i] = x * window[i];
        }
        fft.execute();
        for (std::size_t k = 0; k < bins; ++k) mag(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) = fft.magnitude(k);
    }
    return mag;
}

Filterbank build_log_filterbank(double sample_rate, std::size_t frame_size, const FilterbankParams& params) {
    if (!(params.fmin > 0.0 && params.fmin < params.fmax && params.fmax < sample_rate / 2.0))
        throw UsageError("filterbank requires 0 < fmin < fmax < sample_rate / 2");
    if (!(params.bands_per_octave > 0.0 && params.reference_hz > 0.0))
        throw UsageError("filterbank requires positive bands_per_octave and reference_hz");
    if (frame_size < 2) throw UsageError("filterbank requires frame_size >= 2");

    const double bin_hz = sample_rate / static_cast<double>(frame_size);
    const std::size_t num_fft_bins = frame_size / 2 + 1;

    // Pitch grid anchored at the reference, restricted to [fmin, fmax].
    const auto k_lo = static_cast<long>(std::floor(std::log2(params.fmin / params.reference_hz) * params.bands_per_octave));
    const auto k_hi = static_cast<long>(std::ceil(std::log2(params.fmax / params.reference_hz) * params.bands_per_octave));
    std::vector<std::size_t> bins;
    for (long k = k_lo; k <= k_hi; ++k) {
        const double f = params.reference_hz * std::pow(2.0, static_cast<double>(k) / params.bands_per_octave);
        if (f < params.fmin || f > params.fmax) continue;
        const auto b = static_cast<std::size_t>(std::lround(f / bin_hz));
        if (bins.empty() || bins.back() != b) bins.push_back(b);
    }
    if (bins.size() < 3)
        throw UsageError("degenerate filterbank: fewer than 3 distinct FFT bins in [fmin, fmax]");

    const std::size_t num_bands = bins.size() - 2;
    Filterbank fb;
    fb.frame_size = frame_size;
    fb.sample_rate = sample_rate;
    fb.weights = RowMatrixD::Zero(static_cast<Eigen::Index>(num_bands), static_cast<Eigen::Index>(num_fft_bins));
    for (std::size_t band = 0; band < num_bands; ++band) {
        const std::size_t lo = bins[band], center = bins[band + 1], hi = bins[band + 2];
        auto row = fb.weights.row(static_cast<Eigen::Index>(band));
        for (std::size_t b = lo; b <= center; ++b)
            row(static_cast<Eigen::Index>(b)) = static_cast<double>(b - lo) / static_cast<double>(center - lo);
        for (std::size_t b = center; b <= hi; ++b)
            row(static_cast<Eigen::Index>(b)) = static_cast<double>(hi - b) / static_cast<double>(hi - center);
        row /= row.sum();
        fb.band_center_bins.push_back(center);
        fb.band_center_frequencies.push_back(static_cast<double>(center) * bin_hz);
    }
    return fb;
}

Spectrogram log_filtered_spectrogram(const RowMatrixD& magnitudes, double frame_rate, const Filterbank& fb) {
    if (magnitudes.cols() != fb.weights.cols()) {
        throw DataError("filterbank expects " + std::to_string(fb.weights.cols()) + " FFT bins, got " +
                        std::to_string(magnitudes.cols()));
    }
    RowMatrixD filtered = magnitudes * fb.weights.transpose();
    Spectrogram spec;
    spec.frame_rate = frame_rate;
    spec.values = filtered.array().log1p().cast<float>().matrix();
    return spec;
}

Spectrogram log_filtered_spectrogram(const AudioBuffer& audio, const FrameParams& params, const Filterbank& fb) {
    if (fb.frame_size != params.frame_size || fb.sample_rate != params.sample_rate)
        throw DataError("filterbank was built for a different frame size or sample rate");
    if (audio.sample_rate != params.sample_rate)
        throw DataError("audio sample rate does not match frame parameters");
    return log_filtered_spectrogram(stft_magnitude(audio, params), params.frame_rate(), fb);
}

ContextWindow context_window(const Spectrogram& spec, std::size_t index, std::size_t context) {
    if (spec.num_frames() == 0) throw DataError("context_window: empty spectrogram");
    if (index >= spec.num_frames()) throw DataError("context_window: frame index out of range");
    const auto last = static_cast<std::ptrdiff_t>(spec.num_frames()) - 1;
    const auto width = static_cast<Eigen::Index>(2 * context + 1);
    ContextWindow win;
    win.target_index = index;
    win.values.resize(static_cast<Eigen::Index>(spec.num_bands()), width);
    for (Eigen::Index c = 0; c < width; ++c) {
        std::ptrdiff_t src = static_cast<std::ptrdiff_t>(index) + c - static_cast<std::ptrdiff_t>(context);
        src = std::clamp<std::ptrdiff_t>(src, 0, last);
        win.values.col(c) = spec.values.row(src).transpose();
    }
    return win;
}

std::vector<ContextWindow> context_windows(const Spectrogram& spec, std::size_t context) {
    if (spec.num_frames() == 0) throw DataError("context_windows: empty spectrogram");
    std::vector<ContextWindow> out;
    out.reserve(spec.num_frames());
    for (std::size_t i = 0; i < spec.num_frames(); ++i) out.push_back(context_window(spec, i, context));
    return out;
}

}  // namespace chordrec
