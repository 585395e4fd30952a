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
#include <numeric>
#include <set>

#include "skewjoin/engine.hpp"
#include "test_support.hpp"

namespace skewjoin {
namespace {

using testing::config;

Dataset<int> sized(const std::vector<std::size_t>& sizes) {
    std::vector<std::vector<int>> parts;
    int next = 0;
    for (const auto s : sizes) {
        std::vector<int> p;
        for (std::size_t i = 0; i < s; ++i) p.push_back(next++);
        parts.push_back(std::move(p));
    }
    return Dataset<int>(std::move(parts));
}

TEST(Engine, ConfigValidation) {
    EXPECT_THROW(Cluster(config(0)), ConfigError);
    auto c = config(2);
    c.lambda = -1;
    EXPECT_THROW(Cluster{c}, ConfigError);
    c = config(2);
    c.memory_per_executor = 0;
    EXPECT_THROW(Cluster{c}, ConfigError);
}

TEST(Engine, MapIdentityKeepsPartitions) {
    Cluster cluster(config(3));
    const auto ds = sized({2, 0, 5});
    const auto out = cluster.map<int>(ds, [](int v, Emitter<int>& e) { e.emit(v); });
    EXPECT_EQ(out, ds);
    EXPECT_EQ(cluster.metrics().stages, 1u);
    EXPECT_EQ(cluster.metrics().shuffled_bytes, 0u);
}

TEST(Engine, MapDropAll) {
    Cluster cluster(config(3));
    const auto out = cluster.map<int>(sized({2, 1, 0}), [](int, Emitter<int>&) {});
    EXPECT_EQ(out.partition_sizes(), (std::vector<std::size_t>{0, 0, 0}));
}

TEST(Engine, MapDuplicateCountsEmitted) {
    Cluster cluster(config(2));
    const auto out = cluster.map<int>(sized({2, 1}), [](int v, Emitter<int>& e) {
        e.emit(v);
        e.emit(v);
    });
    EXPECT_EQ(out.partition_sizes(), (std::vector<std::size_t>{4, 2}));
    EXPECT_EQ(cluster.metrics().emitted_records_per_executor, (std::vector<std::uint64_t>{4, 2}));
    EXPECT_EQ(cluster.metrics().emitted_bytes_per_executor, (std::vector<std::uint64_t>{16, 8}));
    EXPECT_EQ(cluster.metrics().max_task_records, 2u);
}

TEST(Engine, MapRejectsWrongPartitionCount) {
    Cluster cluster(config(3));
    EXPECT_THROW(cluster.map<int>(sized({1, 1}), [](int, Emitter<int>&) {}), ConfigError);
}

TEST(Engine, GroupByKeySingleKey) {
    Cluster cluster(config(3));
    Dataset<std::pair<Key, int>> ds(std::vector<std::vector<std::pair<Key, int>>>{
        {{Key(9), 1}}, {{Key(9), 2}, {Key(9), 3}}, {{Key(9), 4}}});
    const auto grouped = cluster.group_by_key(ds);
    EXPECT_EQ(grouped.size(), 1u);
    const auto& part = grouped.partition(cluster.partition_of(Key(9)));
    ASSERT_EQ(part.size(), 1u);
    EXPECT_EQ(part[0].second, (std::vector<int>{1, 2, 3, 4}));
}

TEST(Engine, GroupByKeyModuloPartitioner) {
    auto c = config(3);
    c.partitioner = Partitioner::kModulo;
    Cluster cluster(c);
    std::vector<std::pair<Key, int>> items;
    for (int k = 1; k <= 6; ++k) items.emplace_back(Key(k), k);
    const auto ds = cluster.scatter(items);  // key k sits in partition (k-1) % 3
    const auto grouped = cluster.group_by_key(ds);
    EXPECT_EQ(grouped.partition_sizes(), (std::vector<std::size_t>{2, 2, 2}));
    for (std::size_t p = 0; p < 3; ++p) {
        for (const auto& [key, values] : grouped.partition(p)) EXPECT_EQ(key.value() % 3, p);
    }
    // every element changed partition: 6 x (8 + 4) bytes
    EXPECT_EQ(cluster.metrics().shuffled_bytes, 72u);
}

TEST(Engine, GroupByKeyChargesOnlyMovedElements) {
    auto c = config(4);
    c.partitioner = Partitioner::kModulo;
    Cluster cluster(c);
    Dataset<std::pair<Key, int>> ds(4);
    ds.partition(1).emplace_back(Key(5), 0);  // already home
    ds.partition(0).emplace_back(Key(6), 0);  // moves to 2
    cluster.group_by_key(ds);
    EXPECT_EQ(cluster.metrics().shuffled_bytes, 12u);
}

TEST(Engine, GroupByKeyEmpty) {
    Cluster cluster(config(3));
    const auto grouped = cluster.group_by_key(cluster.empty_dataset<std::pair<Key, int>>());
    EXPECT_TRUE(grouped.empty());
    EXPECT_EQ(cluster.metrics().shuffled_bytes, 0u);
}

TEST(Engine, UnionAll) {
    Cluster cluster(config(2));
    const auto a = sized({1, 2});
    const auto b = sized({3, 0});
    EXPECT_EQ(cluster.union_all(a, b).partition_sizes(), (std::vector<std::size_t>{4, 2}));
    EXPECT_EQ(cluster.union_all(a, cluster.empty_dataset<int>()), a);
    EXPECT_EQ(cluster.metrics().network_bytes(), 0u);
    EXPECT_THROW(cluster.union_all(a, sized({1, 1, 1})), ConfigError);
}

TEST(Engine, BroadcastAccounting) {
    auto c = config(4);
    c.memory_per_executor = 1000;
    Cluster cluster(c);
    cluster.broadcast(1, 0);
    EXPECT_EQ(cluster.metrics().broadcast_bytes, 0u);
    EXPECT_EQ(cluster.metrics().stages, 0u);
    const auto handle = cluster.broadcast(std::string("abc"), 100);
    EXPECT_EQ(*handle, "abc");
    EXPECT_EQ(cluster.metrics().broadcast_bytes, 400u);
    EXPECT_NO_THROW(cluster.broadcast(0, 1000));
    EXPECT_THROW(cluster.broadcast(0, 1001), BroadcastCapacityError);
}

TEST(Engine, BroadcastTimeTreeModel) {
    auto c = config(8, 1.0);
    Cluster cluster(c);
    // b (1 + lambda log_{lambda+1} n) = 10 (1 + log2 8) = 40
    EXPECT_DOUBLE_EQ(cluster.broadcast_time(10), 40.0);
}

TEST(Engine, TreeAggregateSum) {
    for (std::size_t n : {1u, 2u, 3u, 7u}) {
        Cluster cluster(config(n));
        std::vector<int> values(10);
        std::iota(values.begin(), values.end(), 1);
        const auto ds = cluster.scatter(values);
        const int sum = cluster.tree_aggregate(
            ds, 0, [](int& acc, int v) { acc += v; }, [](int a, int b) { return a + b; });
        EXPECT_EQ(sum, 55) << "n=" << n;
    }
}

TEST(Engine, TreeAggregateEmptyIsZero) {
    Cluster cluster(config(3));
    const int v = cluster.tree_aggregate(
        cluster.empty_dataset<int>(), 42, [](int& acc, int x) { acc += x; }, [](int a, int b) { return a + b - 42; });
    EXPECT_EQ(v, 42);
}

TEST(Engine, TreeAggregateSetUnion) {
    Cluster cluster(config(3));
    const auto ds = cluster.scatter(std::vector<std::string>{"a", "b", "a"});
    using Set = std::set<std::string>;
    const Set out = cluster.tree_aggregate(
        ds, Set{}, [](Set& s, const std::string& v) { s.insert(v); },
        [](Set a, Set b) {
            a.insert(b.begin(), b.end());
            return a;
        });
    EXPECT_EQ(out, (Set{"a", "b"}));
    EXPECT_GT(cluster.metrics().aggregated_bytes, 0u);
}

TEST(Engine, RandomShuffleSingleElement) {
    Cluster cluster(config(5));
    const auto out = cluster.random_shuffle(cluster.scatter(std::vector<int>{3}));
    EXPECT_EQ(out.size(), 1u);
    EXPECT_EQ(out.flatten(), std::vector<int>{3});
}

TEST(Engine, RandomShuffleBinomialSpread) {
    Cluster cluster(config(10));
    std::vector<int> items(10000);
    std::iota(items.begin(), items.end(), 0);
    const auto out = cluster.random_shuffle(cluster.scatter(items));
    const double sigma = std::sqrt(10000 * 0.1 * 0.9);
    for (const auto s : out.partition_sizes()) {
        EXPECT_LE(std::abs(static_cast<double>(s) - 1000.0), 3 * sigma);
    }
}

TEST(Engine, RandomShuffleDeterministic) {
    std::vector<int> items(500);
    std::iota(items.begin(), items.end(), 0);
    Cluster a(config(6, 1.0, 11));
    Cluster b(config(6, 1.0, 11));
    Cluster c(config(6, 1.0, 12));
    const auto x = a.random_shuffle(a.scatter(items));
    EXPECT_EQ(x, b.random_shuffle(b.scatter(items)));
    EXPECT_NE(x, c.random_shuffle(c.scatter(items)));
    EXPECT_EQ(a.metrics().shuffled_bytes, b.metrics().shuffled_bytes);
}

TEST(Engine, SplitLocally) {
    Cluster cluster(config(2));
    const auto ds = sized({2, 1});  // elements 0,1 | 2
    const auto [all, none] = cluster.split_locally(ds, [](int) { return true; });
    EXPECT_EQ(all, ds);
    EXPECT_TRUE(none.empty());
    const auto [one, rest] = cluster.split_locally(ds, [](int v) { return v == 1; });
    EXPECT_EQ(one.size(), 1u);
    EXPECT_EQ(rest.size(), 2u);
    EXPECT_EQ(one.partition(0), std::vector<int>{1});
    EXPECT_EQ(cluster.metrics().network_bytes(), 0u);
}

TEST(Engine, CollectChargesAggregated) {
    Cluster cluster(config(2));
    const auto out = cluster.collect(sized({2, 1}));
    EXPECT_EQ(out.size(), 3u);
    EXPECT_EQ(cluster.metrics().aggregated_bytes, 12u);
}

TEST(Engine, RowSinkCountModesAgreeWithMaterialized) {
    const std::vector<Payload> left{"a", "bb", "ccc"};
    const std::vector<Payload> right{"x", "yy"};
    std::uint64_t counts[3];
    std::uint64_t bytes[3];
    int i = 0;
    for (auto mode : {OutputMode::kMaterialize, OutputMode::kCount, OutputMode::kCountByKey}) {
        std::vector<JoinRow> rows;
        std::unordered_map<Key, std::uint64_t> tally;
        RowSink sink(mode, &rows, &tally);
        sink.cross(Key(1), left, right);
        sink.triangle(Key(2), left);
        sink.row(Key(3), &left[0], nullptr);
        counts[i] = sink.rows();
        bytes[i] = sink.bytes();
        if (mode == OutputMode::kMaterialize) {
            EXPECT_EQ(rows.size(), sink.rows());
            std::uint64_t b = 0;
            for (const auto& r : rows) b += r.byte_size();
            EXPECT_EQ(b, sink.bytes());
        }
        if (mode == OutputMode::kCountByKey) {
            EXPECT_EQ(tally[Key(1)], 6u);
            EXPECT_EQ(tally[Key(2)], 6u);
            EXPECT_EQ(tally[Key(3)], 1u);
        }
        ++i;
    }
    EXPECT_EQ(counts[0], 13u);
    EXPECT_EQ(counts[1], counts[0]);
    EXPECT_EQ(counts[2], counts[0]);
    EXPECT_EQ(bytes[1], bytes[0]);
    EXPECT_EQ(bytes[2], bytes[0]);
}

TEST(Engine, ThreadedRunMatchesSequential) {
    std::vector<int> items(2000);
    std::iota(items.begin(), items.end(), 0);
    auto c1 = config(8);
    auto c4 = config(8);
    c4.threads = 4;
    Cluster a(c1), b(c4);
    auto f = [](int v, Emitter<int>& e) {
        for (int k = 0; k < v % 5; ++k) e.emit(v);
    };
    EXPECT_EQ(a.map<int>(a.scatter(items), f), b.map<int>(b.scatter(items), f));
    EXPECT_EQ(a.metrics().emitted_records_per_executor, b.metrics().emitted_records_per_executor);
}

TEST(Engine, SimulatedCost) {
    RunMetrics m(2);
    m.shuffled_bytes = 10;
    m.aggregated_bytes = 5;
    m.broadcast_time_cost = 7;
    m.emitted_bytes_per_executor = {3, 4};
    EXPECT_EQ(m.local_bytes(), 7u);
    EXPECT_DOUBLE_EQ(m.simulated_cost(2.0), 7 + 2.0 * 15 + 7);
}

}  // namespace
}  // namespace skewjoin
