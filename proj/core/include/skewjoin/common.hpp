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

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skewjoin {

/// Join key. Keys are opaque 8-byte strings; the canonical encoding of a
/// non-negative integer is its big-endian representation, so byte equality
/// and value equality coincide and the key is stored as the integer.
class Key {
public:
    static constexpr std::uint64_t kEncodedBytes = 8;

    constexpr Key() = default;
    constexpr explicit Key(std::uint64_t value) : value_(value) {}

    constexpr std::uint64_t value() const { return value_; }
    std::array<std::byte, kEncodedBytes> bytes() const;
    static Key from_bytes(const std::array<std::byte, kEncodedBytes>& bytes);

    constexpr std::uint64_t byte_size() const { return kEncodedBytes; }
    constexpr std::uint64_t fingerprint() const { return value_; }

    friend constexpr auto operator<=>(const Key&, const Key&) = default;

private:
    std::uint64_t value_ = 0;
};

/// Non-join attributes of a record, as raw bytes.
using Payload = std::string;

/// One input tuple. `id` is a load-assigned sequence number; only the DER
/// baseline ships it over the network, so it is not part of the byte size.
struct Record {
    Key key;
    Payload payload;
    std::uint64_t id = 0;

    /// Payload length plus the fixed 8-byte key overhead.
    std::uint64_t byte_size() const { return Key::kEncodedBytes + payload.size(); }

    friend bool operator==(const Record&, const Record&) = default;
};

/// One output tuple of a join. A missing side is NULL.
struct JoinRow {
    Key key;
    std::optional<Payload> left;
    std::optional<Payload> right;

    std::uint64_t byte_size() const {
        return Key::kEncodedBytes + (left ? left->size() : 0) + (right ? right->size() : 0);
    }

    friend bool operator==(const JoinRow&, const JoinRow&) = default;
    friend auto operator<=>(const JoinRow&, const JoinRow&) = default;
};

enum class JoinMode { kInner, kLeftOuter, kRightOuter, kFullOuter, kSelfSameAttribute };

std::string_view to_string(JoinMode mode);
std::optional<JoinMode> parse_join_mode(std::string_view text);

/// True for the modes that keep dangling records of the left input.
constexpr bool keeps_left(JoinMode mode) {
    return mode == JoinMode::kLeftOuter || mode == JoinMode::kFullOuter;
}
constexpr bool keeps_right(JoinMode mode) {
    return mode == JoinMode::kRightOuter || mode == JoinMode::kFullOuter;
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid cluster or algorithm configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A broadcast value does not fit in one executor's memory.
class BroadcastCapacityError : public Error {
public:
    BroadcastCapacityError(std::uint64_t bytes, std::uint64_t capacity);

    std::uint64_t bytes() const { return bytes_; }
    std::uint64_t capacity() const { return capacity_; }

private:
    std::uint64_t bytes_;
    std::uint64_t capacity_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what);

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ModeError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace skewjoin

template <>
struct std::hash<skewjoin::Key> {
    std::size_t operator()(const skewjoin::Key& key) const noexcept;
};
