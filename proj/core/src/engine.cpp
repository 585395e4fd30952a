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

#include "skewjoin/engine.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace skewjoin {

void ClusterConfig::validate() const {
    if (executors == 0) throw ConfigError("executor count must be at least 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a finite value >= 0");
    if (memory_per_executor == 0) throw ConfigError("executor memory must be positive");
}

std::uint64_t RunMetrics::local_bytes() const {
    std::uint64_t total = 0;
    for (auto b : emitted_bytes_per_executor) total += b;
    return total;
}

std::uint64_t RunMetrics::max_executor_records() const {
    std::uint64_t best = 0;
    for (auto r : emitted_records_per_executor) best = std::max(best, r);
    return best;
}

double RunMetrics::simulated_cost(double lambda) const {
    return static_cast<double>(local_bytes()) +
           lambda * static_cast<double>(shuffled_bytes + aggregated_bytes) + broadcast_time_cost;
}

// ---------------------------------------------------------------------------

void RowSink::tally(const Key& key, std::uint64_t rows) {
    if (tally_ != nullptr && rows > 0) (*tally_)[key] += rows;
}

void RowSink::row(const Key& key, const Payload* left, const Payload* right) {
    const std::uint64_t size =
        Key::kEncodedBytes + (left ? left->size() : 0) + (right ? right->size() : 0);
    ++count_;
    bytes_ += size;
    if (mode_ == OutputMode::kMaterialize) {
        JoinRow r{key, std::nullopt, std::nullopt};
        if (left) r.left = *left;
        if (right) r.right = *right;
        rows_->push_back(std::move(r));
    } else {
        tally(key, 1);
    }
}

void RowSink::row(JoinRow r) {
    ++count_;
    bytes_ += r.byte_size();
    if (mode_ == OutputMode::kMaterialize) {
        rows_->push_back(std::move(r));
    } else {
        tally(r.key, 1);
    }
}

void RowSink::cross(const Key& key, std::span<const Payload> left, std::span<const Payload> right) {
    if (left.empty() || right.empty()) return;
    if (mode_ == OutputMode::kMaterialize) {
        for (const auto& l : left) {
            for (const auto& r : right) rows_->push_back(JoinRow{key, l, r});
        }
    }
    std::uint64_t left_sum = 0, right_sum = 0;
    for (const auto& l : left) left_sum += l.size();
    for (const auto& r : right) right_sum += r.size();
    const std::uint64_t n1 = left.size(), n2 = right.size();
    count_ += n1 * n2;
    bytes_ += n1 * n2 * Key::kEncodedBytes + n2 * left_sum + n1 * right_sum;
    if (mode_ != OutputMode::kMaterialize) tally(key, n1 * n2);
}

void RowSink::triangle(const Key& key, std::span<const Payload> list) {
    if (list.empty()) return;
    if (mode_ == OutputMode::kMaterialize) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            for (std::size_t j = i; j < list.size(); ++j) rows_->push_back(JoinRow{key, list[i], list[j]});
        }
    }
    // Element i appears in (f + 1) rows: f - i as left, i + 1 as right.
    std::uint64_t sum = 0;
    for (const auto& p : list) sum += p.size();
    const std::uint64_t f = list.size();
    const std::uint64_t rows = f * (f + 1) / 2;
    count_ += rows;
    bytes_ += rows * Key::kEncodedBytes + (f + 1) * sum;
    if (mode_ != OutputMode::kMaterialize) tally(key, rows);
}

// ---------------------------------------------------------------------------

JoinResult::JoinResult(std::size_t partitions, OutputMode mode)
    : mode_(mode), rows_(partitions), counts_(partitions, 0), bytes_(partitions, 0), tallies_(partitions) {}

std::uint64_t JoinResult::row_count() const {
    std::uint64_t total = 0;
    for (auto c : counts_) total += c;
    return total;
}

std::uint64_t JoinResult::byte_count() const {
    std::uint64_t total = 0;
    for (auto b : bytes_) total += b;
    return total;
}

std::vector<JoinRow> JoinResult::collect() const {
    if (!materialized()) throw Error("join rows were counted, not materialized");
    std::vector<JoinRow> all;
    all.reserve(row_count());
    for (const auto& part : rows_) all.insert(all.end(), part.begin(), part.end());
    return all;
}

std::map<Key, std::uint64_t> JoinResult::rows_by_key() const {
    std::map<Key, std::uint64_t> out;
    if (mode_ == OutputMode::kCount) throw Error("per-key counts were not kept");
    if (mode_ == OutputMode::kMaterialize) {
        for (const auto& part : rows_) {
            for (const auto& r : part) ++out[r.key];
        }
    } else {
        for (const auto& tally : tallies_) {
            for (const auto& [key, rows] : tally) out[key] += rows;
        }
    }
    return out;
}

void JoinResult::absorb(JoinResult&& other) {
    if (other.num_partitions() == 0) return;
    if (num_partitions() == 0) {
        *this = std::move(other);
        return;
    }
    if (other.num_partitions() != num_partitions()) {
        throw ConfigError("union of join results with different partition counts");
    }
    if (other.mode_ != mode_) throw ConfigError("union of join results with different output modes");
    for (std::size_t p = 0; p < num_partitions(); ++p) {
        auto& dst = rows_[p];
        dst.insert(dst.end(), std::make_move_iterator(other.rows_[p].begin()),
                   std::make_move_iterator(other.rows_[p].end()));
        counts_[p] += other.counts_[p];
        bytes_[p] += other.bytes_[p];
        for (const auto& [key, rows] : other.tallies_[p]) tallies_[p][key] += rows;
    }
}

// ---------------------------------------------------------------------------

Cluster::Cluster(ClusterConfig config) : config_(config), metrics_(config.executors) {
    config_.validate();
    if (config_.threads == 0) config_.threads = 1;
}

JoinResult Cluster::union_results(JoinResult a, JoinResult b, std::string_view label) {
    require_partitions(a.num_partitions());
    require_partitions(b.num_partitions());
    a.absorb(std::move(b));
    finish_plain_stage(label, 0);
    return a;
}

double Cluster::broadcast_time(std::uint64_t size_bytes) const {
    const double lambda = config_.lambda;
    const double n = static_cast<double>(executors());
    const double hops = lambda > 0.0 ? std::log(n) / std::log1p(lambda) : 0.0;
    return static_cast<double>(size_bytes) * (1.0 + lambda * hops);
}

void Cluster::require_partitions(std::size_t partitions) const {
    if (partitions != executors()) {
        throw ConfigError("dataset has " + std::to_string(partitions) + " partitions, cluster has " +
                          std::to_string(executors()) + " executors");
    }
}

void Cluster::for_each_partition(const std::function<void(std::size_t)>& fn) const {
    const std::size_t n = executors();
    const std::size_t workers = std::min(config_.threads, n);
    if (workers <= 1) {
        for (std::size_t p = 0; p < n; ++p) fn(p);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t p = next++; p < n; p = next++) {
                    try {
                        fn(p);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

void Cluster::finish_map_stage(std::string_view label, const std::vector<std::uint64_t>& records,
                               const std::vector<std::uint64_t>& bytes,
                               const std::vector<std::uint64_t>& max_task) {
    StageInfo info;
    info.label = std::string(label);
    for (std::size_t p = 0; p < records.size(); ++p) {
        metrics_.emitted_records_per_executor[p] += records[p];
        metrics_.emitted_bytes_per_executor[p] += bytes[p];
        info.emitted_records += records[p];
        info.max_executor_records = std::max(info.max_executor_records, records[p]);
        info.max_task_records = std::max(info.max_task_records, max_task[p]);
    }
    metrics_.max_task_records = std::max(metrics_.max_task_records, info.max_task_records);
    metrics_.max_stage_executor_records =
        std::max(metrics_.max_stage_executor_records, info.max_executor_records);
    ++metrics_.stages;
    metrics_.stage_log.push_back(std::move(info));
}

void Cluster::finish_plain_stage(std::string_view label, std::uint64_t network_bytes) {
    StageInfo info;
    info.label = std::string(label);
    info.network_bytes = network_bytes;
    ++metrics_.stages;
    metrics_.stage_log.push_back(std::move(info));
}

}  // namespace skewjoin
