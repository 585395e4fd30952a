// Licensed to the Apache Software Foundation (ASF) under one
// or more contributor license agreements.  See the NOTICE file
// distributed with this work for additional information
// regarding copyright ownership.  The ASF licenses this file
// to you under the Apache License, Version 2.0 (the
// "License"); you may not use this file except in compliance
// with the License.  You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing,
// software distributed under the License is distributed on an
// "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, either express or implied.  See the License for the
// specific language governing permissions and limitations
// under the License.

#include "skewjoin/common.hpp"

#include "skewjoin/hashing.hpp"

namespace skewjoin {

std::array<std::byte, Key::kEncodedBytes> Key::bytes() const {
    std::array<std::byte, kEncodedBytes> out{};
    for (std::size_t i = 0; i < kEncodedBytes; ++i) {
        out[i] = static_cast<std::byte>((value_ >> (8 * (kEncodedBytes - 1 - i))) & 0xff);
    }
    return out;
}

Key Key::from_bytes(const std::array<std::byte, kEncodedBytes>& bytes) {
    std::uint64_t v = 0;
    for (std::byte b : bytes) v = (v << 8) | std::to_integer<std::uint64_t>(b);
    return Key(v);
}

std::string_view to_string(JoinMode mode) {
    switch (mode) {
        case JoinMode::kInner:
            return "inner";
        case JoinMode::kLeftOuter:
            return "left";
        case JoinMode::kRightOuter:
            return "right";
        case JoinMode::kFullOuter:
            return "full";
        case JoinMode::kSelfSameAttribute:
            return "self";
    }
    return "unknown";
}

std::optional<JoinMode> parse_join_mode(std::string_view text) {
    if (text == "inner") return JoinMode::kInner;
    if (text == "left" || text == "left-outer") return JoinMode::kLeftOuter;
    if (text == "right" || text == "right-outer") return JoinMode::kRightOuter;
    if (text == "full" || text == "full-outer") return JoinMode::kFullOuter;
    if (text == "self") return JoinMode::kSelfSameAttribute;
    return std::nullopt;
}

BroadcastCapacityError::BroadcastCapacityError(std::uint64_t bytes, std::uint64_t capacity)
    : Error("broadcast of " + std::to_string(bytes) + " bytes exceeds executor memory of " +
            std::to_string(capacity) + " bytes"),
      bytes_(bytes),
      capacity_(capacity) {}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace skewjoin

std::size_t std::hash<skewjoin::Key>::operator()(const skewjoin::Key& key) const noexcept {
    return static_cast<std::size_t>(skewjoin::mix64(key.value()));
}
