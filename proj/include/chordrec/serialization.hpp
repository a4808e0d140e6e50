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

// Tensor container shared by CNN checkpoints, CRF parameters and cached
// spectrograms.
//
// Layout (all integers little-endian):
//   bytes 0..7    magic "CHRDREC\0"
//   bytes 8..11   u32 format version (currently 1)
//   bytes 12..19  u64 manifest length M
//   bytes 20..    M bytes of UTF-8 JSON manifest
//   padding       zero bytes up to the next multiple of 8
//   data blob     raw little-endian tensor data
//
// Manifest: {"version":1, "meta":{...}, "tensors":[{"name", "dtype", "shape",
// "offset", "nbytes"}...]} where offset is relative to the data blob and
// dtype is one of "f32", "f64", "i32".

#include "chordrec/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace chordrec {

inline constexpr std::uint32_t kContainerVersion = 1;

class Container {
public:
    nlohmann::json meta = nlohmann::json::object();

    void put(const std::string& name, Tensor<float> t);
    void put(const std::string& name, Tensor<double> t);
    void put(const std::string& name, Tensor<std::int32_t> t);

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    std::vector<std::string> names() const;

    const Tensor<float>& get_f32(const std::string& name) const;
    const Tensor<double>& get_f64(const std::string& name) const;
    const Tensor<std::int32_t>& get_i32(const std::string& name) const;

    std::vector<std::uint8_t> serialize() const;
    static Container deserialize(const std::vector<std::uint8_t>& bytes);

    void save(const std::filesystem::path& path) const;
    /// Throws DataError for unreadable or malformed files.
    static Container load(const std::filesystem::path& path);

private:
    using Entry = std::variant<Tensor<float>, Tensor<double>, Tensor<std::int32_t>>;
    std::map<std::string, Entry> entries_;
};

}  // namespace chordrec
