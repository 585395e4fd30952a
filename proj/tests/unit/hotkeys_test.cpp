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

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "skewjoin/hotkeys.hpp"
#include "test_support.hpp"

namespace skewjoin {
namespace {

using Counter = SpaceSavingSummary::Counter;
using testing::config;

const Key a(1), b(2), c(3);

SpaceSavingSummary summary_of(const std::vector<Key>& stream, std::size_t capacity) {
    SpaceSavingSummary s(capacity);
    for (const auto& k : stream) s.offer(k);
    return s;
}

std::map<Key, std::uint64_t> exact_counts(const std::vector<Key>& stream) {
    std::map<Key, std::uint64_t> counts;
    for (const auto& k : stream) ++counts[k];
    return counts;
}

std::vector<Key> random_stream(SplitMix64& rng, std::size_t size, std::uint64_t domain) {
    std::vector<Key> out;
    for (std::size_t i = 0; i < size; ++i) {
        const double u = uniform_unit(rng);
        out.emplace_back(1 + static_cast<std::uint64_t>(u * u * u * static_cast<double>(domain)));
    }
    return out;
}

TEST(SpaceSaving, CapacityTwo) {
    const auto s = summary_of({a, a, b}, 2);
    EXPECT_EQ(s.find(a), (Counter{2, 0}));
    EXPECT_EQ(s.find(b), (Counter{1, 0}));
    EXPECT_EQ(s.size(), 2u);
}

TEST(SpaceSaving, EvictionTakesOverMinimum) {
    const auto s = summary_of({a, b}, 1);
    EXPECT_FALSE(s.find(a).has_value());
    EXPECT_EQ(s.find(b), (Counter{2, 1}));
}

TEST(SpaceSaving, ZeroCapacityRejected) {
    EXPECT_THROW(SpaceSavingSummary(0), ConfigError);
}

TEST(SpaceSaving, ExactWithoutEviction) {
    SplitMix64 rng(5);
    const auto stream = random_stream(rng, 2000, 40);
    const auto s = summary_of(stream, 40);
    for (const auto& [key, count] : exact_counts(stream)) {
        EXPECT_EQ(s.find(key), (Counter{count, 0}));
    }
}

TEST(SpaceSaving, EntriesOrderedByCountThenKey) {
    const auto s = summary_of({c, b, b, a, c}, 5);
    const auto e = s.entries();
    ASSERT_EQ(e.size(), 3u);
    EXPECT_EQ(e[0].first, b);
    EXPECT_EQ(e[1].first, c);
    EXPECT_EQ(e[2].first, a);
}

TEST(SpaceSaving, MergeWithEmptyIsIdentity) {
    const auto x = summary_of({a, a, b, c, c, c}, 2);
    const auto merged = SpaceSavingSummary::merge(x, SpaceSavingSummary(2), 2);
    EXPECT_EQ(merged.entries(), x.entries());
    EXPECT_EQ(SpaceSavingSummary::merge(SpaceSavingSummary(2), x, 2).entries(), x.entries());
}

TEST(SpaceSaving, MergeExactSummariesAddsCounts) {
    const auto x = summary_of({a, a, b}, 10);
    const auto y = summary_of({b, c}, 10);
    const auto m = SpaceSavingSummary::merge(x, y, 10);
    EXPECT_EQ(m.find(a), (Counter{2, 0}));
    EXPECT_EQ(m.find(b), (Counter{2, 0}));
    EXPECT_EQ(m.find(c), (Counter{1, 0}));
}

TEST(SpaceSaving, MergeOfSplitStreamEqualsGlobalCounts) {
    SplitMix64 rng(21);
    const auto stream = random_stream(rng, 4000, 60);
    std::vector<SpaceSavingSummary> parts(4, SpaceSavingSummary(60));
    for (std::size_t i = 0; i < stream.size(); ++i) parts[uniform_below(rng, 4)].offer(stream[i]);
    auto merged = SpaceSavingSummary::merge(SpaceSavingSummary::merge(parts[0], parts[1], 60),
                                            SpaceSavingSummary::merge(parts[2], parts[3], 60), 60);
    for (const auto& [key, count] : exact_counts(stream)) EXPECT_EQ(merged.find(key), (Counter{count, 0}));
}

TEST(SpaceSaving, BoundsHoldUnderEvictionAndMerge) {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const auto stream = random_stream(rng, 3000, 300);
        const std::size_t cap = 5 + uniform_below(rng, 30);
        std::vector<SpaceSavingSummary> parts(1 + uniform_below(rng, 6), SpaceSavingSummary(cap));
        for (const auto& k : stream) parts[uniform_below(rng, parts.size())].offer(k);
        SpaceSavingSummary merged = parts[0];
        for (std::size_t i = 1; i < parts.size(); ++i) merged = SpaceSavingSummary::merge(merged, parts[i], cap);
        const auto truth = exact_counts(stream);
        EXPECT_LE(merged.size(), cap);
        for (const auto& [key, counter] : merged.entries()) {
            const auto f = truth.at(key);
            EXPECT_LE(counter.count - counter.error, f);
            EXPECT_GE(counter.count, f);
        }
        if (merged.full()) {
            for (const auto& [key, f] : truth) {
                if (!merged.find(key)) {
                    EXPECT_LE(f, merged.min_count());
                }
            }
        }
    }
}

Relation key_partitioned(const std::vector<std::pair<std::uint64_t, std::size_t>>& freqs, std::size_t n) {
    Dataset<Record> ds(n);
    std::size_t p = 0;
    for (const auto& [k, f] : freqs) {
        for (std::size_t i = 0; i < f; ++i) ds.partition(p % n).push_back(Record{Key(k), "", i});
        ++p;
    }
    return Relation(std::move(ds));
}

TEST(HotKeys, KeyPartitionedIsExact) {
    Cluster cluster(config(3));
    const Relation r = key_partitioned({{1, 150}, {2, 90}}, 3);
    EXPECT_EQ(get_hot_keys(cluster, r, 10, 100), (HotKeyMap{{Key(1), 150}}));
    EXPECT_GT(cluster.metrics().aggregated_bytes, 0u);
}

TEST(HotKeys, UniformBelowThresholdIsEmpty) {
    Cluster cluster(config(4));
    std::vector<Record> recs;
    for (std::uint64_t k = 0; k < 500; ++k) recs.push_back(Record{Key(k), "", 0});
    EXPECT_TRUE(get_hot_keys(cluster, testing::relation(recs, 4), 1000, 2).empty());
}

TEST(HotKeys, KeepsAtMostKMax) {
    Cluster cluster(config(2));
    const Relation r = key_partitioned({{1, 50}, {2, 40}, {3, 30}, {4, 20}}, 2);
    // capacity 2 per partition: merged counts are upper bounds, the keys are right
    const auto hot = get_hot_keys(cluster, r, 2, 1);
    ASSERT_EQ(hot.size(), 2u);
    EXPECT_GE(hot.at(Key(1)), 50u);
    EXPECT_GE(hot.at(Key(2)), 40u);
    EXPECT_EQ(get_hot_keys(cluster, r, 4, 1), (HotKeyMap{{Key(1), 50}, {Key(2), 40}, {Key(3), 30}, {Key(4), 20}}));
    EXPECT_THROW(get_hot_keys(cluster, r, 0, 1), ConfigError);
}

TEST(HotKeys, Threshold) {
    EXPECT_DOUBLE_EQ(hot_frequency_threshold(3), 8.0);
    EXPECT_DOUBLE_EQ(hot_frequency_threshold(0), 1.0);
    EXPECT_NEAR(hot_frequency_threshold(1), 2.8284271, 1e-6);
}

TEST(HotKeys, MaxHotKeys) {
    EXPECT_EQ(max_hot_keys(1e9, 1e6, 100, 10, 3), 1250u);
    EXPECT_EQ(max_hot_keys(10, 80, 1, 8, 0), 10u);
    EXPECT_EQ(max_hot_keys(1, 1e6, 100, 10, 3), 1u);
}

TEST(HotKeys, JoinHotKeys) {
    const HotKeyMap r{{Key(1), 2}, {Key(2), 2}, {Key(3), 2}, {Key(4), 2}};
    const HotKeyMap s{{Key(1), 2}, {Key(6), 2}, {Key(11), 2}, {Key(12), 2}};
    EXPECT_EQ(join_hot_keys(r, s), (JoinedHotKeyMap{{Key(1), {2, 2}}}));
    EXPECT_TRUE(join_hot_keys(HotKeyMap{{Key(2), 1}}, HotKeyMap{{Key(3), 1}}).empty());
    const HotKeyMap x{{Key(5), 7}, {Key(9), 3}};
    EXPECT_EQ(join_hot_keys(x, x), (JoinedHotKeyMap{{Key(5), {7, 7}}, {Key(9), {3, 3}}}));
}

TEST(HotKeys, EstimateCost) {
    EXPECT_DOUBLE_EQ(estimate_hot_key_cost(1e6, 100, 1e3, 8, 1, 1), 1e8);
    EXPECT_NEAR(estimate_hot_key_cost(1e6, 100, 1e3, 8, 1, 100), 1e6 + 53151.0, 1.0);
    EXPECT_DOUBLE_EQ(estimate_hot_key_cost(1e6, 100, 0, 8, 1, 100), 1e6);
}

TEST(HotKeys, MapBytes) {
    EXPECT_EQ(hot_key_map_bytes({{Key(1), 1}, {Key(2), 1}}), 32u);
    EXPECT_EQ(joined_hot_key_map_bytes({{Key(1), {1, 1}}}), 24u);
}

}  // namespace
}  // namespace skewjoin
