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


#include "chordrec/audio.hpp"

#include "chordrec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

namespace chordrec {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

struct WavFormat {
    std::uint16_t tag = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
};

float decode_sample(const std::uint8_t* p, const WavFormat& fmt) {
    if (fmt.tag == kFormatFloat) {
        float v;
        std::uint32_t bits = read_u32(p);
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    if (fmt.bits == 16) {
        auto v = static_cast<std::int16_t>(read_u16(p));
        return static_cast<float>(v) / 32768.0f;
    }
    // 24-bit, sign-extended from the top byte
    std::int32_t v = std::int32_t(p[0]) | (std::int32_t(p[1]) << 8) | (std::int32_t(p[2]) << 16);
    if (v & 0x800000) v -= 0x1000000;
    return static_cast<float>(v) / 8388608.0f;
}

}  // namespace

AudioBuffer decode_wav_bytes(std::span<const std::uint8_t> bytes, double target_rate) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw DataError("not a RIFF/WAVE stream");
    }

    WavFormat fmt;
    bool have_fmt = false;
    std::span<const std::uint8_t> data;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* chunk = bytes.data() + pos;
        std::uint32_t size = read_u32(chunk + 4);
        std::size_t body = pos + 8;
        std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (avail < 16) throw DataError("truncated fmt chunk");
            const std::uint8_t* f = bytes.data() + body;
            fmt.tag = read_u16(f);
            fmt.channels = read_u16(f + 2);
            fmt.sample_rate = read_u32(f + 4);
            fmt.bits = read_u16(f + 14);
            if (fmt.tag == kFormatExtensible) {
                if (avail < 26) throw DataError("truncated WAVE_FORMAT_EXTENSIBLE chunk");
                fmt.tag = read_u16(f + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes.subspan(body, avail);
        }
        pos = body + size + (size & 1u);
    }

    if (!have_fmt) throw DataError("missing fmt chunk");
    if (data.data() == nullptr) throw DataError("missing data chunk");
    if (fmt.channels == 0 || fmt.sample_rate == 0) throw DataError("invalid channel count or sample rate");
    bool supported = (fmt.tag == kFormatPcm && (fmt.bits == 16 || fmt.bits == 24)) ||
                     (fmt.tag == kFormatFloat && fmt.bits == 32);
    if (!supported) {
        throw DataError("unsupported WAV encoding (format tag " + std::to_string(fmt.tag) + ", " +
                        std::to_string(fmt.bits) + " bits)");
    }

    const std::size_t sample_bytes = fmt.bits / 8;
    const std::size_t frame_bytes = sample_bytes * fmt.channels;
    const std::size_t num_frames = data.size() / frame_bytes;

    AudioBuffer out;
    out.sample_rate = fmt.sample_rate;
    out.samples.resize(num_frames);
    for (std::size_t i = 0; i < num_frames; ++i) {
        const std::uint8_t* frame = data.data() + i * frame_bytes;
        float acc = 0.0f;
        for (std::size_t c = 0; c < fmt.channels; ++c) acc += decode_sample(frame + c * sample_bytes, fmt);
        out.samples[i] = acc / static_cast<float>(fmt.channels);
    }

    if (target_rate > 0.0 && target_rate != out.sample_rate) {
        out.samples = resample(out.samples, out.sample_rate, target_rate);
        out.sample_rate = target_rate;
    }
    return out;
}

AudioBuffer decode_audio(const std::filesystem::path& path, double target_rate) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open audio file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_wav_bytes(bytes, target_rate);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_wav(const std::filesystem::path& path, std::span<const float> interleaved, int channels,
               int sample_rate, SampleFormat format) {
    if (channels <= 0 || sample_rate <= 0) throw DataError("write_wav: invalid channels or rate");
    const std::uint16_t bits = format == SampleFormat::Int16 ? 16 : format == SampleFormat::Int24 ? 24 : 32;
    const std::uint16_t tag = format == SampleFormat::Float32 ? kFormatFloat : kFormatPcm;
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(interleaved.size() * (bits / 8));

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, tag);
    put_u16(out, static_cast<std::uint16_t>(channels));
    put_u32(out, static_cast<std::uint32_t>(sample_rate));
    put_u32(out, static_cast<std::uint32_t>(sample_rate * channels * (bits / 8)));
    put_u16(out, static_cast<std::uint16_t>(channels * (bits / 8)));
    put_u16(out, bits);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_bytes);

    for (float s : interleaved) {
        if (format == SampleFormat::Float32) {
            std::uint32_t b;
            std::memcpy(&b, &s, sizeof b);
            put_u32(out, b);
            continue;
        }
        double c = std::clamp(static_cast<double>(s), -1.0, 1.0);
        if (format == SampleFormat::Int16) {
            auto v = static_cast<std::int32_t>(std::lround(c * 32767.0));
            put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
        } else {
            auto v = static_cast<std::int32_t>(std::lround(c * 8388607.0));
            auto u = static_cast<std::uint32_t>(v);
            out.push_back(static_cast<std::uint8_t>(u & 0xFF));
            out.push_back(static_cast<std::uint8_t>((u >> 8) & 0xFF));
            out.push_back(static_cast<std::uint8_t>((u >> 16) & 0xFF));
        }
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

std::vector<float> resample(std::span<const float> samples, double src_rate, double dst_rate) {
    if (src_rate <= 0.0 || dst_rate <= 0.0) throw DataError("resample: rates must be positive");
    if (src_rate == dst_rate) return {samples.begin(), samples.end()};

    constexpr double kZeroCrossings = 32.0;
    const double step = src_rate / dst_rate;
    const double cutoff = std::min(1.0, dst_rate / src_rate);
    const double half_width = kZeroCrossings / cutoff;
    const auto n_out = static_cast<std::size_t>(std::llround(samples.size() * dst_rate / src_rate));
    const auto n_in = static_cast<std::ptrdiff_t>(samples.size());

    std::vector<float> out(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        const double t = i * step;
        auto lo = static_cast<std::ptrdiff_t>(std::ceil(t - half_width));
        auto hi = static_cast<std::ptrdiff_t>(std::floor(t + half_width));
        lo = std::max<std::ptrdiff_t>(lo, 0);
        hi = std::min<std::ptrdiff_t>(hi, n_in - 1);
        double acc = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
            const double d = t - static_cast<double>(j);
            const double x = cutoff * d;
            const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
            const double u = d / half_width;  // in [-1, 1]
            const double w = 0.42 + 0.5 * std::cos(std::numbers::pi * u) + 0.08 * std::cos(2.0 * std::numbers::pi * u);
            acc += samples[static_cast<std::size_t>(j)] * cutoff * sinc * w;
        }
        out[i] = static_cast<float>(acc);
    }
    return out;
}

}  // namespace chordrec
