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


#include "chordrec/serialization.hpp"

#include "chordrec/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace chordrec {

namespace {

constexpr char kMagic[8] = {'C', 'H', 'R', 'D', 'R', 'E', 'C', '\0'};

template <typename T>
const char* dtype_name();
template <>
const char* dtype_name<float>() { return "f32"; }
template <>
const char* dtype_name<double>() { return "f64"; }
template <>
const char* dtype_name<std::int32_t>() { return "i32"; }

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T read_le(const std::uint8_t* p) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
}

template <typename T>
const Tensor<T>& get_typed(const std::map<std::string, std::variant<Tensor<float>, Tensor<double>, Tensor<std::int32_t>>>& m,
                           const std::string& name) {
    auto it = m.find(name);
    if (it == m.end()) throw DataError("container has no tensor '" + name + "'");
    if (const auto* t = std::get_if<Tensor<T>>(&it->second)) return *t;
    throw DataError("tensor '" + name + "' is not of type " + dtype_name<T>());
}

template <typename T>
Tensor<T> decode_tensor(const std::uint8_t* blob, std::size_t blob_size, const nlohmann::json& rec) {
    const Shape shape = rec.at("shape").get<Shape>();
    const std::size_t offset = rec.at("offset").get<std::size_t>();
    const std::size_t nbytes = rec.at("nbytes").get<std::size_t>();
    if (nbytes != shape_size(shape) * sizeof(T)) throw DataError("tensor byte count does not match its shape");
    if (offset > blob_size || nbytes > blob_size - offset) throw DataError("tensor data out of bounds");
    std::vector<T> data(shape_size(shape));
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = read_le<T>(blob + offset + i * sizeof(T));
    return Tensor<T>(shape, std::move(data));
}

}  // namespace

void Container::put(const std::string& name, Tensor<float> t) { entries_[name] = std::move(t); }
void Container::put(const std::string& name, Tensor<double> t) { entries_[name] = std::move(t); }
void Container::put(const std::string& name, Tensor<std::int32_t> t) { entries_[name] = std::move(t); }

std::vector<std::string> Container::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

const Tensor<float>& Container::get_f32(const std::string& name) const { return get_typed<float>(entries_, name); }
const Tensor<double>& Container::get_f64(const std::string& name) const { return get_typed<double>(entries_, name); }
const Tensor<std::int32_t>& Container::get_i32(const std::string& name) const {
    return get_typed<std::int32_t>(entries_, name);
}

std::vector<std::uint8_t> Container::serialize() const {
    std::vector<std::uint8_t> blob;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& [name, entry] : entries_) {
        std::visit(
            [&](const auto& t) {
                using Elem = std::remove_cvref_t<decltype(t[0])>;
                const std::size_t offset = blob.size();
                for (Elem v : t.values()) append_le(blob, v);
                tensors.push_back({{"name", name},
                                   {"dtype", dtype_name<Elem>()},
                                   {"shape", t.shape()},
                                   {"offset", offset},
                                   {"nbytes", t.size() * sizeof(Elem)}});
                while (blob.size() % 8) blob.push_back(0);
            },
            entry);
    }
    nlohmann::json manifest = {{"version", kContainerVersion}, {"meta", meta}, {"tensors", tensors}};
    const std::string text = manifest.dump();

    std::vector<std::uint8_t> out(kMagic, kMagic + 8);
    append_le<std::uint32_t>(out, kContainerVersion);
    append_le<std::uint64_t>(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    while (out.size() % 8) out.push_back(0);
    out.insert(out.end(), blob.begin(), blob.end());
    return out;
}

Container Container::deserialize(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw DataError("not a chordrec container");
    const auto version = read_le<std::uint32_t>(bytes.data() + 8);
    if (version != kContainerVersion) throw DataError("unsupported container version " + std::to_string(version));
    const auto mlen = read_le<std::uint64_t>(bytes.data() + 12);
    if (mlen > bytes.size() - 20) throw DataError("truncated container manifest");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(bytes.begin() + 20, bytes.begin() + 20 + static_cast<std::ptrdiff_t>(mlen));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed container manifest: ") + e.what());
    }
    std::size_t blob_start = 20 + mlen;
    blob_start += (8 - blob_start % 8) % 8;
    if (blob_start > bytes.size()) throw DataError("truncated container");
    const std::uint8_t* blob = bytes.data() + blob_start;
    const std::size_t blob_size = bytes.size() - blob_start;

    Container c;
    try {
        c.meta = manifest.value("meta", nlohmann::json::object());
        for (const auto& rec : manifest.at("tensors")) {
            const auto name = rec.at("name").get<std::string>();
            const auto dtype = rec.at("dtype").get<std::string>();
            if (dtype == "f32") c.put(name, decode_tensor<float>(blob, blob_size, rec));
            else if (dtype == "f64") c.put(name, decode_tensor<double>(blob, blob_size, rec));
            else if (dtype == "i32") c.put(name, decode_tensor<std::int32_t>(blob, blob_size, rec));
            else throw DataError("unknown dtype '" + dtype + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed container manifest: ") + e.what());
    }
    return c;
}

void Container::save(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw DataError("cannot write " + tmp.string());
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw DataError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Container Container::load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    try {
        return deserialize(bytes);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace chordrec
