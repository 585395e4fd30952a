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

// Wall-clock cost of the join algorithms on generated data.
// Arguments: Zipf alpha x100.

#include <benchmark/benchmark.h>

#include "skewjoin/amjoin.hpp"
#include "skewjoin/datagen.hpp"
#include "skewjoin/sljoin.hpp"
#include "skewjoin/treejoin.hpp"

namespace {

using namespace skewjoin;

constexpr std::size_t kExecutors = 16;

Relation make_relation(double alpha, std::uint64_t seed, std::uint64_t n_uniform = 20000) {
    DatasetSpec spec;
    spec.alpha = alpha;
    spec.record_bytes = 16;
    spec.n_uniform = n_uniform;
    spec.n_zipf = 5000;
    spec.zipf_domain = 1000;
    spec.seed = seed;
    return generate(spec, kExecutors);
}

ClusterConfig counting_cluster() {
    ClusterConfig c;
    c.executors = kExecutors;
    c.lambda = 1.0;
    c.seed = 42;
    c.output = OutputMode::kCount;
    return c;
}

template <class Join>
void run(benchmark::State& state, Join&& join) {
    const double alpha = static_cast<double>(state.range(0)) / 100.0;
    const Relation r = make_relation(alpha, 1);
    const Relation s = make_relation(alpha, 2);
    std::uint64_t rows = 0;
    for (auto _ : state) {
        Cluster cluster(counting_cluster());
        rows = join(cluster, r, s).row_count();
        benchmark::DoNotOptimize(rows);
    }
    state.counters["rows"] = static_cast<double>(rows);
    state.counters["rows/s"] = benchmark::Counter(static_cast<double>(rows), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_ShuffleJoin(benchmark::State& state) {
    run(state, [](Cluster& c, const Relation& r, const Relation& s) { return shuffle_join(c, r, s, JoinMode::kInner); });
}

void BM_TreeJoinBasic(benchmark::State& state) {
    run(state, [](Cluster& c, const Relation& r, const Relation& s) { return tree_join_basic(c, r, s); });
}

void BM_TreeJoin(benchmark::State& state) {
    run(state, [](Cluster& c, const Relation& r, const Relation& s) { return tree_join(c, r, s); });
}

void BM_AmJoinInner(benchmark::State& state) {
    run(state, [](Cluster& c, const Relation& r, const Relation& s) { return am_join(c, r, s, JoinMode::kInner); });
}

void BM_AmJoinFullOuter(benchmark::State& state) {
    run(state, [](Cluster& c, const Relation& r, const Relation& s) { return am_join(c, r, s, JoinMode::kFullOuter); });
}

void BM_IndexBroadcastFullOuter(benchmark::State& state) {
    const Relation r = make_relation(0.5, 1);
    const Relation s = make_relation(0.5, 2, static_cast<std::uint64_t>(state.range(0)));
    for (auto _ : state) {
        Cluster cluster(counting_cluster());
        benchmark::DoNotOptimize(index_broadcast_full_outer_join(cluster, r, s).row_count());
    }
}

void BM_GetHotKeys(benchmark::State& state) {
    const Relation r = make_relation(static_cast<double>(state.range(0)) / 100.0, 1);
    for (auto _ : state) {
        Cluster cluster(counting_cluster());
        benchmark::DoNotOptimize(get_hot_keys(cluster, r, 1000, 4.0).size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.cardinality()));
}

}  // namespace

BENCHMARK(BM_ShuffleJoin)->Arg(0)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TreeJoinBasic)->Arg(0)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TreeJoin)->Arg(0)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AmJoinInner)->Arg(0)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AmJoinFullOuter)->Arg(0)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);
// small side size in uniform records
BENCHMARK(BM_IndexBroadcastFullOuter)->Arg(0)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GetHotKeys)->Arg(0)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
