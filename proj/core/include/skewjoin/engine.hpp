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

// Deterministic in-process simulation of a shared-nothing cluster.
//
// A Cluster owns n simulated executors. Data lives in Dataset<T>, one
// partition per executor. Algorithms are written exclusively against the
// Cluster primitives (map, group_by_key, union_all, broadcast,
// tree_aggregate, random_shuffle, split_locally, collect); each primitive
// invocation is one stage and updates RunMetrics:
//
//  * shuffled_bytes    bytes of elements whose destination partition differs
//                      from their source partition
//  * broadcast_bytes   value size x n per broadcast (volume)
//  * aggregated_bytes  partial aggregates and collected elements sent up the
//                      aggregation tree or to the driver
//  * emitted_*         per-executor output of map-like stages
//
// Element sizes come from element_bytes(): a type's byte_size() member,
// sizeof for arithmetic types, length for strings, and sums for pairs and
// ranges. element_records() counts records the same way (record_count()
// member, otherwise 1 per element).
//
// Simulated runtime is never wall-clock: simulated_cost() =
// local bytes + lambda x (shuffled + aggregated bytes) + broadcast time cost,
// where a broadcast of b bytes costs b x (1 + lambda x log_{lambda+1}(n)).
// Lambda is treated as a pure per-byte multiplier.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "skewjoin/common.hpp"
#include "skewjoin/hashing.hpp"

namespace skewjoin {

enum class Partitioner {
    kMix64,   // mix64(fingerprint ^ mix64(seed)) mod n
    kModulo,  // fingerprint mod n; for hand-checkable tests
};

enum class OutputMode {
    kMaterialize,  // keep every JoinRow
    kCount,        // keep per-partition row and byte counts only
    kCountByKey,   // counts plus a per-key row tally
};

struct ClusterConfig {
    std::size_t executors = 4;
    double lambda = 1.0;
    std::uint64_t memory_per_executor = std::uint64_t{1} << 30;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    Partitioner partitioner = Partitioner::kMix64;
    OutputMode output = OutputMode::kMaterialize;

    /// Throws ConfigError unless n >= 1, lambda >= 0 and M > 0.
    void validate() const;
};

struct StageInfo {
    std::string label;
    std::uint64_t emitted_records = 0;
    std::uint64_t max_executor_records = 0;
    std::uint64_t max_task_records = 0;
    std::uint64_t max_partition_records = 0;
    std::uint64_t network_bytes = 0;
};

struct RunMetrics {
    std::uint64_t stages = 0;
    std::uint64_t shuffled_bytes = 0;
    std::uint64_t broadcast_bytes = 0;
    std::uint64_t aggregated_bytes = 0;
    double broadcast_time_cost = 0.0;
    std::vector<std::uint64_t> emitted_records_per_executor;
    std::vector<std::uint64_t> emitted_bytes_per_executor;
    // Largest output of a single map invocation (one task) in any stage.
    std::uint64_t max_task_records = 0;
    // Largest per-executor output within a single stage.
    std::uint64_t max_stage_executor_records = 0;
    std::vector<StageInfo> stage_log;
    // Algorithm-level events, e.g. which join ran for which sub-join.
    std::vector<std::string> trace;

    RunMetrics() = default;
    explicit RunMetrics(std::size_t executors)
        : emitted_records_per_executor(executors, 0), emitted_bytes_per_executor(executors, 0) {}

    std::uint64_t network_bytes() const { return shuffled_bytes + broadcast_bytes + aggregated_bytes; }
    std::uint64_t local_bytes() const;
    std::uint64_t max_executor_records() const;
    double simulated_cost(double lambda) const;
};

// ---------------------------------------------------------------------------
// Element sizing

namespace detail {

template <class T>
struct is_pair : std::false_type {};
template <class A, class B>
struct is_pair<std::pair<A, B>> : std::true_type {};

template <class T>
struct is_optional : std::false_type {};
template <class T>
struct is_optional<std::optional<T>> : std::true_type {};

}  // namespace detail

template <class T>
std::uint64_t element_bytes(const T& value) {
    if constexpr (requires { value.byte_size(); }) {
        return value.byte_size();
    } else if constexpr (std::is_arithmetic_v<T>) {
        return sizeof(T);
    } else if constexpr (std::is_convertible_v<const T&, std::string_view>) {
        return std::string_view(value).size();
    } else if constexpr (detail::is_pair<T>::value) {
        return element_bytes(value.first) + element_bytes(value.second);
    } else if constexpr (detail::is_optional<T>::value) {
        return value ? element_bytes(*value) : 0;
    } else if constexpr (std::ranges::range<T>) {
        std::uint64_t total = 0;
        for (const auto& item : value) total += element_bytes(item);
        return total;
    } else {
        static_assert(sizeof(T) == 0, "element_bytes: no size for this type");
    }
}

template <class T>
std::uint64_t element_records(const T& value) {
    if constexpr (requires { value.record_count(); }) {
        return value.record_count();
    } else if constexpr (detail::is_pair<T>::value) {
        return element_records(value.second);
    } else if constexpr (std::ranges::range<T> && !std::is_convertible_v<const T&, std::string_view>) {
        std::uint64_t total = 0;
        for (const auto& item : value) total += element_records(item);
        return total;
    } else {
        return 1;
    }
}

template <class K>
std::uint64_t key_fingerprint(const K& key) {
    if constexpr (std::is_integral_v<K>) {
        return static_cast<std::uint64_t>(key);
    } else {
        return key.fingerprint();
    }
}

// ---------------------------------------------------------------------------
// Dataset

template <class T>
class Dataset {
public:
    using value_type = T;

    Dataset() = default;
    explicit Dataset(std::size_t partitions) : partitions_(partitions) {}
    explicit Dataset(std::vector<std::vector<T>> partitions) : partitions_(std::move(partitions)) {}

    std::size_t num_partitions() const { return partitions_.size(); }

    std::vector<T>& partition(std::size_t i) { return partitions_.at(i); }
    const std::vector<T>& partition(std::size_t i) const { return partitions_.at(i); }

    std::size_t size() const {
        std::size_t total = 0;
        for (const auto& p : partitions_) total += p.size();
        return total;
    }
    bool empty() const { return size() == 0; }

    std::vector<std::size_t> partition_sizes() const {
        std::vector<std::size_t> sizes;
        sizes.reserve(partitions_.size());
        for (const auto& p : partitions_) sizes.push_back(p.size());
        return sizes;
    }

    /// Concatenation of all partitions in partition order. Test/driver use;
    /// no cost is charged.
    std::vector<T> flatten() const {
        std::vector<T> all;
        all.reserve(size());
        for (const auto& p : partitions_) all.insert(all.end(), p.begin(), p.end());
        return all;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<std::vector<T>> partitions_;
};

/// Output channel handed to map functions.
template <class U>
class Emitter {
public:
    explicit Emitter(std::vector<U>& out) : out_(&out) {}

    void emit(U value) {
        records_ += element_records(value);
        bytes_ += element_bytes(value);
        out_->push_back(std::move(value));
    }

    std::uint64_t records() const { return records_; }
    std::uint64_t bytes() const { return bytes_; }

private:
    std::vector<U>* out_;
    std::uint64_t records_ = 0;
    std::uint64_t bytes_ = 0;
};

/// Output channel for join rows. In counting modes rows are tallied
/// analytically, so a cross product of two lists costs O(|l1| + |l2|).
class RowSink {
public:
    RowSink(OutputMode mode, std::vector<JoinRow>* rows, std::unordered_map<Key, std::uint64_t>* tally)
        : mode_(mode), rows_(rows), tally_(tally) {}

    /// A single row; nullptr means NULL.
    void row(const Key& key, const Payload* left, const Payload* right);
    void row(JoinRow row);
    /// Every pair from left x right.
    void cross(const Key& key, std::span<const Payload> left, std::span<const Payload> right);
    /// Every unordered pair (i <= j) of list, diagonal included.
    void triangle(const Key& key, std::span<const Payload> list);

    std::uint64_t rows() const { return count_; }
    std::uint64_t bytes() const { return bytes_; }

private:
    void tally(const Key& key, std::uint64_t rows);

    OutputMode mode_;
    std::vector<JoinRow>* rows_;
    std::unordered_map<Key, std::uint64_t>* tally_;
    std::uint64_t count_ = 0;
    std::uint64_t bytes_ = 0;
};

/// Partitioned join output. Holds rows or only counts, per OutputMode.
class JoinResult {
public:
    JoinResult() = default;
    JoinResult(std::size_t partitions, OutputMode mode);

    OutputMode mode() const { return mode_; }
    bool materialized() const { return mode_ == OutputMode::kMaterialize; }
    std::size_t num_partitions() const { return counts_.size(); }

    std::uint64_t row_count() const;
    std::uint64_t row_count(std::size_t partition) const { return counts_.at(partition); }
    std::uint64_t byte_count() const;

    /// Rows of one partition; empty unless materialized.
    const std::vector<JoinRow>& rows(std::size_t partition) const { return rows_.at(partition); }
    /// All rows; throws Error unless materialized.
    std::vector<JoinRow> collect() const;
    /// Row count per key; throws Error in kCount mode.
    std::map<Key, std::uint64_t> rows_by_key() const;

    /// Union without a stage; partition counts must match.
    void absorb(JoinResult&& other);

    /// Direct writer for partition p, for operators that fuse several
    /// stages. Rows written are counted only once passed to commit().
    RowSink writer(std::size_t partition) { return sink(partition); }
    void commit(std::size_t partition, const RowSink& written) {
        counts_.at(partition) += written.rows();
        bytes_.at(partition) += written.bytes();
    }

private:
    friend class Cluster;

    RowSink sink(std::size_t partition) {
        return RowSink(mode_, &rows_[partition],
                       mode_ == OutputMode::kCountByKey ? &tallies_[partition] : nullptr);
    }

    OutputMode mode_ = OutputMode::kMaterialize;
    std::vector<std::vector<JoinRow>> rows_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> bytes_;
    std::vector<std::unordered_map<Key, std::uint64_t>> tallies_;
};

template <class T>
using Broadcast = std::shared_ptr<const T>;

// ---------------------------------------------------------------------------
// Cluster

class Cluster {
public:
    explicit Cluster(ClusterConfig config);

    const ClusterConfig& config() const { return config_; }
    std::size_t executors() const { return config_.executors; }
    double lambda() const { return config_.lambda; }

    const RunMetrics& metrics() const { return metrics_; }
    void reset_metrics() { metrics_ = RunMetrics(config_.executors); }
    void note(std::string event) { metrics_.trace.push_back(std::move(event)); }

    template <class T>
    Dataset<T> empty_dataset() const {
        return Dataset<T>(executors());
    }

    /// Loads items round-robin (item i -> partition i mod n). Loading is
    /// not a stage and costs nothing.
    template <class T>
    Dataset<T> scatter(std::vector<T> items) const {
        Dataset<T> ds(executors());
        for (std::size_t i = 0; i < items.size(); ++i) {
            ds.partition(i % executors()).push_back(std::move(items[i]));
        }
        return ds;
    }

    /// Partition that owns `key` in every group_by_key of this cluster.
    template <class K>
    std::size_t partition_of(const K& key) const {
        const std::uint64_t fp = key_fingerprint(key);
        if (config_.partitioner == Partitioner::kModulo) return fp % executors();
        return mix64(fp ^ mix64(config_.seed)) % executors();
    }

    /// Applies f(const T&, Emitter<U>&) to every element; outputs stay in the
    /// input element's partition.
    template <class U, class T, class F>
    Dataset<U> map(const Dataset<T>& ds, F&& f, std::string_view label = "map") {
        require_partitions(ds.num_partitions());
        const std::size_t n = executors();
        Dataset<U> out(n);
        std::vector<std::uint64_t> records(n, 0), bytes(n, 0), max_task(n, 0);
        for_each_partition([&](std::size_t p) {
            Emitter<U> emitter(out.partition(p));
            for (const T& item : ds.partition(p)) {
                const std::uint64_t before = emitter.records();
                f(item, emitter);
                max_task[p] = std::max(max_task[p], emitter.records() - before);
            }
            records[p] = emitter.records();
            bytes[p] = emitter.bytes();
        });
        finish_map_stage(label, records, bytes, max_task);
        return out;
    }

    /// Applies f(const T&, RowSink&) to every element, producing join rows.
    template <class T, class F>
    JoinResult map_rows(const Dataset<T>& ds, F&& f, std::string_view label = "map-rows") {
        auto [result, locals] = map_rows_with_local<std::monostate>(
            ds, std::monostate{}, [&](const T& item, RowSink& sink, std::monostate&) { f(item, sink); }, label);
        return std::move(result);
    }

    /// Like map_rows, but f(const T&, RowSink&, A&) also folds into a
    /// per-partition accumulator initialised to `zero`. Returns the rows and
    /// one accumulator per partition.
    template <class A, class T, class F>
    std::pair<JoinResult, Dataset<A>> map_rows_with_local(const Dataset<T>& ds, A zero, F&& f,
                                                           std::string_view label = "map-rows") {
        require_partitions(ds.num_partitions());
        const std::size_t n = executors();
        JoinResult result(n, config_.output);
        Dataset<A> locals(n);
        std::vector<std::uint64_t> records(n, 0), bytes(n, 0), max_task(n, 0);
        for_each_partition([&](std::size_t p) {
            RowSink sink = result.sink(p);
            A local = zero;
            for (const T& item : ds.partition(p)) {
                const std::uint64_t before = sink.rows();
                f(item, sink, local);
                max_task[p] = std::max(max_task[p], sink.rows() - before);
            }
            locals.partition(p).push_back(std::move(local));
            result.counts_[p] = sink.rows();
            result.bytes_[p] = sink.bytes();
            records[p] = sink.rows();
            bytes[p] = sink.bytes();
        });
        finish_map_stage(label, records, bytes, max_task);
        return {std::move(result), std::move(locals)};
    }

    /// Row-wise transform of a join result. f must preserve the key and the
    /// row's byte size (counting modes only carry counts forward).
    template <class F>
    JoinResult remap_rows(const JoinResult& in, F&& f, std::string_view label = "map-rows") {
        require_partitions(in.num_partitions());
        const std::size_t n = executors();
        JoinResult out = in;
        if (out.materialized()) {
            for_each_partition([&](std::size_t p) {
                for (auto& row : out.rows_[p]) row = f(row);
            });
        }
        std::vector<std::uint64_t> max_task(n, out.row_count() ? 1 : 0);
        finish_map_stage(label, out.counts_, out.bytes_, max_task);
        return out;
    }

    /// Groups values by key. All values of a key end up in the single
    /// partition partition_of(key); value lists keep source order (partition
    /// 0 first). Only elements that change partition are charged.
    template <class K, class V>
    Dataset<std::pair<K, std::vector<V>>> group_by_key(const Dataset<std::pair<K, V>>& ds,
                                                       std::string_view label = "group-by-key") {
        require_partitions(ds.num_partitions());
        const std::size_t n = executors();
        Dataset<std::pair<K, std::vector<V>>> out(n);
        std::vector<std::unordered_map<K, std::size_t, FingerprintHash>> slots(n);
        std::uint64_t moved = 0;
        for (std::size_t src = 0; src < n; ++src) {
            for (const auto& [key, value] : ds.partition(src)) {
                const std::size_t dst = partition_of(key);
                if (dst != src) moved += element_bytes(key) + element_bytes(value);
                auto& groups = out.partition(dst);
                auto [it, inserted] = slots[dst].try_emplace(key, groups.size());
                if (inserted) groups.emplace_back(key, std::vector<V>{});
                groups[it->second].second.push_back(value);
            }
        }
        metrics_.shuffled_bytes += moved;
        finish_shuffle_stage(label, out, moved);
        return out;
    }

    /// Partition-wise concatenation; no data moves.
    template <class T>
    Dataset<T> union_all(const Dataset<T>& a, const Dataset<T>& b, std::string_view label = "union") {
        if (a.num_partitions() != b.num_partitions()) {
            throw ConfigError("union of datasets with " + std::to_string(a.num_partitions()) + " and " +
                              std::to_string(b.num_partitions()) + " partitions");
        }
        require_partitions(a.num_partitions());
        Dataset<T> out = a;
        for (std::size_t p = 0; p < a.num_partitions(); ++p) {
            auto& dst = out.partition(p);
            dst.insert(dst.end(), b.partition(p).begin(), b.partition(p).end());
        }
        finish_plain_stage(label, 0);
        return out;
    }

    JoinResult union_results(JoinResult a, JoinResult b, std::string_view label = "union");

    /// Replicates a value on every executor. Charges size x n bytes of
    /// volume. Throws BroadcastCapacityError when size exceeds M.
    template <class T>
    Broadcast<T> broadcast(T value, std::uint64_t size_bytes, std::string_view label = "broadcast") {
        if (size_bytes > config_.memory_per_executor) {
            throw BroadcastCapacityError(size_bytes, config_.memory_per_executor);
        }
        auto handle = std::make_shared<const T>(std::move(value));
        if (size_bytes == 0) return handle;
        const std::uint64_t volume = size_bytes * executors();
        metrics_.broadcast_bytes += volume;
        metrics_.broadcast_time_cost += broadcast_time(size_bytes);
        finish_plain_stage(label, volume);
        return handle;
    }

    /// Folds every element with seq, then combines per-partition partials
    /// pairwise up a binary tree and sends the root to the driver. Each
    /// transferred partial is charged to aggregated_bytes.
    template <class A, class T, class Seq, class Comb>
    A tree_aggregate(const Dataset<T>& ds, A zero, Seq&& seq, Comb&& comb,
                     std::string_view label = "tree-aggregate") {
        require_partitions(ds.num_partitions());
        const std::size_t n = executors();
        std::vector<A> partials(n, zero);
        for_each_partition([&](std::size_t p) {
            for (const T& item : ds.partition(p)) seq(partials[p], item);
        });
        std::uint64_t sent = 0;
        for (std::size_t step = 1; step < n; step *= 2) {
            for (std::size_t i = 0; i + step < n; i += 2 * step) {
                sent += element_bytes(partials[i + step]);
                partials[i] = comb(std::move(partials[i]), std::move(partials[i + step]));
            }
        }
        sent += element_bytes(partials[0]);
        metrics_.aggregated_bytes += sent;
        finish_plain_stage(label, sent);
        return std::move(partials[0]);
    }

    /// Sends every element to a uniformly random partition drawn from a
    /// generator keyed by (seed, stage, source partition, position), or by
    /// (seed, stage, token) for elements with a shuffle_token().
    template <class T>
    Dataset<T> random_shuffle(const Dataset<T>& ds, std::string_view label = "random-shuffle") {
        require_partitions(ds.num_partitions());
        const std::size_t n = executors();
        const std::uint64_t stage_seed = hash_combine(config_.seed, metrics_.stages);
        Dataset<T> out(n);
        std::uint64_t moved = 0;
        for (std::size_t src = 0; src < n; ++src) {
            const auto& part = ds.partition(src);
            for (std::size_t i = 0; i < part.size(); ++i) {
                std::size_t dst;
                if constexpr (requires { part[i].shuffle_token(); }) {
                    dst = shuffle_destination(metrics_.stages, part[i].shuffle_token());
                } else {
                    SplitMix64 rng(hash_combine(hash_combine(stage_seed, src), i));
                    dst = uniform_below(rng, n);
                }
                if (dst != src) moved += element_bytes(part[i]);
                out.partition(dst).push_back(part[i]);
            }
        }
        metrics_.shuffled_bytes += moved;
        finish_shuffle_stage(label, out, moved);
        return out;
    }

    /// Splits each partition in place by a predicate: (true side, false side).
    template <class T, class P>
    std::pair<Dataset<T>, Dataset<T>> split_locally(const Dataset<T>& ds, P&& pred,
                                                    std::string_view label = "split") {
        require_partitions(ds.num_partitions());
        const std::size_t n = executors();
        Dataset<T> yes(n), no(n);
        for_each_partition([&](std::size_t p) {
            for (const T& item : ds.partition(p)) {
                (pred(item) ? yes : no).partition(p).push_back(item);
            }
        });
        finish_plain_stage(label, 0);
        return {std::move(yes), std::move(no)};
    }

    /// Brings every element to the driver; charged to aggregated_bytes.
    template <class T>
    std::vector<T> collect(const Dataset<T>& ds, std::string_view label = "collect") {
        require_partitions(ds.num_partitions());
        std::uint64_t sent = 0;
        for (std::size_t p = 0; p < ds.num_partitions(); ++p) {
            for (const T& item : ds.partition(p)) sent += element_bytes(item);
        }
        metrics_.aggregated_bytes += sent;
        finish_plain_stage(label, sent);
        return ds.flatten();
    }

    /// Simulated time of broadcasting size_bytes to all executors.
    double broadcast_time(std::uint64_t size_bytes) const;

    /// Destination random_shuffle picks for a token in the given stage.
    std::size_t shuffle_destination(std::uint64_t stage, std::uint64_t token) const {
        SplitMix64 rng(hash_combine(hash_combine(config_.seed, stage), token));
        return static_cast<std::size_t>(uniform_below(rng, executors()));
    }

    // Accounting for operators that simulate several stages in one pass.
    // Each call records exactly what the matching primitive would have.
    void record_map_stage(std::string_view label, const std::vector<std::uint64_t>& records,
                          const std::vector<std::uint64_t>& bytes, const std::vector<std::uint64_t>& max_task) {
        finish_map_stage(label, records, bytes, max_task);
    }
    void record_plain_stage(std::string_view label) { finish_plain_stage(label, 0); }
    void record_shuffle_stage(std::string_view label, std::uint64_t moved, std::uint64_t max_partition_records) {
        metrics_.shuffled_bytes += moved;
        finish_plain_stage(label, moved);
        metrics_.stage_log.back().max_partition_records = max_partition_records;
    }

private:
    struct FingerprintHash {
        template <class K>
        std::size_t operator()(const K& key) const {
            return static_cast<std::size_t>(mix64(key_fingerprint(key)));
        }
    };

    void require_partitions(std::size_t partitions) const;
    void for_each_partition(const std::function<void(std::size_t)>& fn) const;
    void finish_map_stage(std::string_view label, const std::vector<std::uint64_t>& records,
                          const std::vector<std::uint64_t>& bytes, const std::vector<std::uint64_t>& max_task);
    void finish_plain_stage(std::string_view label, std::uint64_t network_bytes);

    template <class T>
    void finish_shuffle_stage(std::string_view label, const Dataset<T>& out, std::uint64_t moved) {
        std::uint64_t biggest = 0;
        for (std::size_t p = 0; p < out.num_partitions(); ++p) {
            std::uint64_t records = 0;
            for (const auto& item : out.partition(p)) records += element_records(item);
            biggest = std::max(biggest, records);
        }
        finish_plain_stage(label, moved);
        metrics_.stage_log.back().max_partition_records = biggest;
    }

    ClusterConfig config_;
    RunMetrics metrics_;
};

}  // namespace skewjoin
