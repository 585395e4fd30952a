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

#include "skewjoin/hotkeys.hpp"

#include <algorithm>
#include <cmath>

namespace skewjoin {

SpaceSavingSummary::SpaceSavingSummary(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("space-saving capacity must be at least 1");
}

std::uint64_t SpaceSavingSummary::min_count() const {
    return by_count_.empty() ? 0 : by_count_.begin()->first;
}

void SpaceSavingSummary::put(const Key& key, Counter c) {
    auto it = counters_.find(key);
    if (it != counters_.end()) {
        by_count_.erase({it->second.count, key});
        it->second = c;
    } else {
        counters_.emplace(key, c);
    }
    by_count_.insert({c.count, key});
}

void SpaceSavingSummary::offer(const Key& key) {
    auto it = counters_.find(key);
    if (it != counters_.end()) {
        put(key, Counter{it->second.count + 1, it->second.error});
        return;
    }
    if (!full()) {
        put(key, Counter{1, 0});
        return;
    }
    const auto [min, victim] = *by_count_.begin();
    by_count_.erase(by_count_.begin());
    counters_.erase(victim);
    put(key, Counter{min + 1, min});
}

SpaceSavingSummary SpaceSavingSummary::merge(const SpaceSavingSummary& a, const SpaceSavingSummary& b,
                                             std::size_t capacity) {
    const std::uint64_t bound_a = a.full() ? a.min_count() : 0;
    const std::uint64_t bound_b = b.full() ? b.min_count() : 0;
    std::vector<std::pair<Key, Counter>> merged;
    merged.reserve(a.size() + b.size());
    for (const auto& [key, ca] : a.counters_) {
        const auto cb = b.find(key);
        const Counter other = cb ? *cb : Counter{bound_b, bound_b};
        merged.emplace_back(key, Counter{ca.count + other.count, ca.error + other.error});
    }
    for (const auto& [key, cb] : b.counters_) {
        if (a.counters_.contains(key)) continue;
        merged.emplace_back(key, Counter{cb.count + bound_a, cb.error + bound_a});
    }
    std::sort(merged.begin(), merged.end(), [](const auto& x, const auto& y) {
        return x.second.count != y.second.count ? x.second.count > y.second.count : x.first < y.first;
    });
    if (merged.size() > capacity) merged.resize(capacity);
    SpaceSavingSummary out(capacity);
    for (const auto& [key, c] : merged) out.put(key, c);
    return out;
}

std::optional<SpaceSavingSummary::Counter> SpaceSavingSummary::find(const Key& key) const {
    auto it = counters_.find(key);
    if (it == counters_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::pair<Key, SpaceSavingSummary::Counter>> SpaceSavingSummary::entries() const {
    std::vector<std::pair<Key, Counter>> out;
    out.reserve(counters_.size());
    for (const auto& entry : counters_) out.push_back(entry);
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        return x.second.count != y.second.count ? x.second.count > y.second.count : x.first < y.first;
    });
    return out;
}

SpaceSavingSummary summarize_keys(Cluster& cluster, const Relation& relation, std::size_t k_max) {
    if (k_max == 0) throw ConfigError("k_max must be at least 1");
    return cluster.tree_aggregate(
        relation.data(), SpaceSavingSummary(k_max),
        [](SpaceSavingSummary& acc, const Record& rec) { acc.offer(rec.key); },
        [k_max](SpaceSavingSummary a, SpaceSavingSummary b) { return SpaceSavingSummary::merge(a, b, k_max); },
        "hot-keys");
}

HotKeyMap get_hot_keys(Cluster& cluster, const Relation& relation, std::size_t k_max, double min_freq) {
    const auto summary = summarize_keys(cluster, relation, k_max);
    HotKeyMap out;
    for (const auto& [key, c] : summary.entries()) {
        if (out.size() >= k_max) break;
        if (static_cast<double>(c.count) >= min_freq) out.emplace(key, c.count);
    }
    return out;
}

JoinedHotKeyMap join_hot_keys(const HotKeyMap& r, const HotKeyMap& s) {
    JoinedHotKeyMap out;
    for (const auto& [key, fr] : r) {
        auto it = s.find(key);
        if (it != s.end()) out.emplace(key, std::make_pair(fr, it->second));
    }
    return out;
}

double hot_frequency_threshold(double lambda) {
    return std::pow(1.0 + lambda, 1.5);
}

std::size_t max_hot_keys(double cardinality_r, double memory, double m_s, double m_b, double lambda) {
    const double by_side = std::min(cardinality_r, memory / m_s) / hot_frequency_threshold(lambda);
    const double value = std::floor(std::min(by_side, memory / m_b));
    return value < 1.0 ? 1 : static_cast<std::size_t>(value);
}

double estimate_hot_key_cost(double cardinality_r, double m_r, double k_max, double m_b, double lambda,
                             std::size_t n) {
    return cardinality_r * m_r / static_cast<double>(n) +
           k_max * m_b * lambda * std::log2(static_cast<double>(n));
}

std::uint64_t hot_key_map_bytes(const HotKeyMap& map) {
    return map.size() * 16;
}

std::uint64_t joined_hot_key_map_bytes(const JoinedHotKeyMap& map) {
    return map.size() * 24;
}

}  // namespace skewjoin
