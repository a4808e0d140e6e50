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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace chordrec {

/// Mono audio with samples in [-1, 1].
struct AudioBuffer {
    std::vector<float> samples;
    double sample_rate = 44100.0;

    double duration() const { return samples.size() / sample_rate; }
};

enum class SampleFormat { Int16, Int24, Float32 };

/// Reads a RIFF/WAVE file (PCM 16/24-bit or IEEE float 32-bit). Multi-channel
/// input is downmixed by channel mean. If `target_rate` is positive and differs
/// from the file rate, the signal is resampled to it.
///
/// Throws DataError for unreadable files or unsupported encodings.
AudioBuffer decode_audio(const std::filesystem::path& path, double target_rate = 44100.0);

/// Decodes a WAV image held in memory; same contract as decode_audio.
AudioBuffer decode_wav_bytes(std::span<const std::uint8_t> bytes, double target_rate = 44100.0);

/// Writes interleaved frames of `channels` channels. Samples are clipped to [-1, 1]
/// for integer formats.
void write_wav(const std::filesystem::path& path, std::span<const float> interleaved,
               int channels, int sample_rate, SampleFormat format = SampleFormat::Int16);

/// Band-limited resampling with a Blackman-windowed sinc kernel. The output has
/// round(len * dst_rate / src_rate) samples.
std::vector<float> resample(std::span<const float> samples, double src_rate, double dst_rate);

}  // namespace chordrec
