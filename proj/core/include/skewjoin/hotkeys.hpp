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

// Heavy-hitter collection with mergeable Space-Saving summaries.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "skewjoin/common.hpp"
#include "skewjoin/engine.hpp"
#include "skewjoin/model.hpp"

namespace skewjoin {

/// Key -> estimated frequency.
using HotKeyMap = std::map<Key, std::uint64_t>;
/// Key -> (frequency in R, frequency in S).
using JoinedHotKeyMap = std::map<Key, std::pair<std::uint64_t, std::uint64_t>>;

/// Space-Saving counters. For every tracked key,
/// count - error <= true frequency <= count. When the summary is full, any
/// untracked key has true frequency <= min_count().
class SpaceSavingSummary {
public:
    struct Counter {
        std::uint64_t count = 0;
        std::uint64_t error = 0;
        friend bool operator==(const Counter&, const Counter&) = default;
    };

    static constexpr std::uint64_t kEntryBytes = 24;

    explicit SpaceSavingSummary(std::size_t capacity = 1);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return counters_.size(); }
    bool full() const { return counters_.size() >= capacity_; }
    std::uint64_t min_count() const;

    void offer(const Key& key);

    /// Mergeable-summaries combination: shared keys add counts and errors; a
    /// key missing from one side is charged that side's bound (min_count()
    /// if full, else 0) on both count and error. Keeps the top `capacity`
    /// by count (ties by smaller key).
    static SpaceSavingSummary merge(const SpaceSavingSummary& a, const SpaceSavingSummary& b,
                                    std::size_t capacity);

    std::optional<Counter> find(const Key& key) const;
    /// Counters ordered by count descending, then key ascending.
    std::vector<std::pair<Key, Counter>> entries() const;

    std::uint64_t byte_size() const { return counters_.size() * kEntryBytes; }

private:
    void put(const Key& key, Counter c);

    std::size_t capacity_;
    std::unordered_map<Key, Counter> counters_;
    std::set<std::pair<std::uint64_t, Key>> by_count_;
};

/// Per-partition summaries of capacity k_max, merged up an aggregation tree.
SpaceSavingSummary summarize_keys(Cluster& cluster, const Relation& relation, std::size_t k_max);

/// Per-partition summaries of capacity k_max, tree-merged; keeps keys with
/// estimated count >= min_freq, at most k_max of them (highest counts).
HotKeyMap get_hot_keys(Cluster& cluster, const Relation& relation, std::size_t k_max, double min_freq);

JoinedHotKeyMap join_hot_keys(const HotKeyMap& r, const HotKeyMap& s);

/// (1 + lambda)^{3/2}: the smallest effective list length worth splitting.
double hot_frequency_threshold(double lambda);

/// min(min(|R|, M / m_S) / (1+lambda)^{3/2}, M / m_b), floored, at least 1.
std::size_t max_hot_keys(double cardinality_r, double memory, double m_s, double m_b, double lambda);

/// |R| m_R / n + k_max m_b lambda log2(n).
double estimate_hot_key_cost(double cardinality_r, double m_r, double k_max, double m_b, double lambda,
                             std::size_t n);

/// Serialized size of a hot-key map: 16 bytes per entry (key, frequency).
std::uint64_t hot_key_map_bytes(const HotKeyMap& map);
/// 24 bytes per entry (key, two frequencies).
std::uint64_t joined_hot_key_map_bytes(const JoinedHotKeyMap& map);

}  // namespace skewjoin
