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

#include "skewjoin/treejoin.hpp"

#include <algorithm>
#include <cmath>

namespace skewjoin {

namespace {

using Keyed = std::pair<Key, Tagged>;
using AugmentedKeyed = std::pair<AugmentedKey, Tagged>;

template <class K>
Dataset<IndexEntry<K>> group_into_index(Cluster& cluster, const Dataset<std::pair<K, Tagged>>& keyed,
                                        std::string_view label) {
    auto grouped = cluster.group_by_key(keyed, label);
    return cluster.template map<IndexEntry<K>>(
        grouped,
        [](const std::pair<K, std::vector<Tagged>>& group, Emitter<IndexEntry<K>>& out) {
            IndexEntry<K> entry;
            entry.key = group.first;
            entry.token = mix64(key_fingerprint(group.first));
            for (const auto& t : group.second) (t.side == 0 ? entry.left : entry.right).push_back(t.payload);
            out.emit(std::move(entry));
        },
        "reduce-index");
}

Dataset<Keyed> tag_records(Cluster& cluster, const Dataset<Record>& records, std::uint8_t side) {
    return cluster.map<Keyed>(
        records, [side](const Record& rec, Emitter<Keyed>& out) { out.emit({rec.key, Tagged{side, rec.payload}}); },
        "tag-records");
}

Dataset<JoinedIndexEntry> build_index_from(Cluster& cluster, const Dataset<Record>& r, const Dataset<Record>& s) {
    auto keyed = cluster.union_all(tag_records(cluster, r, 0), tag_records(cluster, s, 1));
    return group_into_index(cluster, keyed, "build-joined-index");
}

JoinResult finish_hot_path(Cluster& cluster, const Dataset<IndexEntry<AugmentedKey>>& augmented,
                           Dataset<JoinedIndexEntry> cold, std::uint64_t unraveled, TreeJoinStats* stats) {
    auto hot = cluster.map<JoinedIndexEntry>(
        augmented,
        [](const IndexEntry<AugmentedKey>& e, Emitter<JoinedIndexEntry>& out) { out.emit(strip_key_padding(e)); },
        "strip-key-padding");
    auto index = cluster.union_all(hot, cold);
    TreeJoinStats local;
    TreeJoinStats& st = stats ? *stats : local;
    if (unraveled > 0) {
        st.iterations += 1;
        st.first_split_records = unraveled;
        st.split_records_per_round.push_back(unraveled);
    }
    return run_tree_rounds(cluster, std::move(index), &st);
}

}  // namespace

std::size_t chunk_count(std::size_t length) {
    if (length <= 1) return 1;
    auto d = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(length))));
    auto cube = [](std::size_t x) { return static_cast<unsigned __int128>(x) * x * x; };
    while (cube(d) < length) ++d;
    while (d > 1 && cube(d - 1) >= length) --d;
    return d;
}

std::size_t chunk_length(std::size_t length) {
    const std::size_t d = chunk_count(length);
    return (length + d - 1) / d;
}

bool is_hot_key(std::uint64_t l1, std::uint64_t l2, double lambda) {
    const double product = static_cast<double>(l1) * static_cast<double>(l2);
    return product > std::pow(1.0 + lambda, 3.0);
}

bool is_hot_key(const JoinedIndexEntry& entry, double lambda) {
    if (entry.shape == EntryShape::kTriangle) {
        return !entry.left.empty() && is_hot_key(entry.left.size(), entry.left.size(), lambda);
    }
    if (entry.left.empty() || entry.right.empty()) return false;
    return is_hot_key(entry.left.size(), entry.right.size(), lambda);
}

void get_all_value_pairs(const JoinedIndexEntry& entry, RowSink& sink) {
    if (entry.shape == EntryShape::kTriangle) {
        sink.triangle(entry.key, entry.left);
    } else {
        sink.cross(entry.key, entry.left, entry.right);
    }
}

std::vector<JoinRow> get_all_value_pairs(const JoinedIndexEntry& entry) {
    std::vector<JoinRow> rows;
    RowSink sink(OutputMode::kMaterialize, &rows, nullptr);
    get_all_value_pairs(entry, sink);
    return rows;
}

ChunkedEntry chunk_pair_of_lists(const JoinedIndexEntry& entry) {
    return ChunkedEntry{entry.key, chunk_list(entry.left), chunk_list(entry.right)};
}

std::vector<JoinedIndexEntry> split_hot_entry(const JoinedIndexEntry& entry) {
    std::vector<JoinedIndexEntry> out;
    auto child_token = [&entry, &out] { return hash_combine(entry.token, out.size()); };
    if (entry.shape == EntryShape::kTriangle) {
        auto chunks = chunk_list(entry.left);
        for (std::size_t a = 0; a < chunks.size(); ++a) {
            out.push_back(JoinedIndexEntry{entry.key, chunks[a], {}, EntryShape::kTriangle, child_token()});
            for (std::size_t b = a + 1; b < chunks.size(); ++b) {
                out.push_back(JoinedIndexEntry{entry.key, chunks[a], chunks[b], EntryShape::kPair, child_token()});
            }
        }
        return out;
    }
    auto chunked = chunk_pair_of_lists(entry);
    out.reserve(chunked.left.size() * chunked.right.size());
    for (const auto& l : chunked.left) {
        for (const auto& r : chunked.right) {
            out.push_back(JoinedIndexEntry{entry.key, l, r, EntryShape::kPair, child_token()});
        }
    }
    return out;
}

Dataset<JoinedIndexEntry> build_joined_index(Cluster& cluster, const Relation& r, const Relation& s) {
    return build_index_from(cluster, r.data(), s.data());
}

IterationOutput tree_join_iteration(Cluster& cluster, const Dataset<JoinedIndexEntry>& index) {
    const double lambda = cluster.lambda();
    auto [hot, cold] = cluster.split_locally(
        index, [lambda](const JoinedIndexEntry& e) { return is_hot_key(e, lambda); }, "split-hot-entries");
    IterationOutput out;
    out.partial = cluster.map_rows(
        cold, [](const JoinedIndexEntry& e, RowSink& sink) { get_all_value_pairs(e, sink); }, "cold-pairs");
    out.next = cluster.map<JoinedIndexEntry>(
        hot,
        [](const JoinedIndexEntry& e, Emitter<JoinedIndexEntry>& emit) {
            for (auto& sub : split_hot_entry(e)) emit.emit(std::move(sub));
        },
        "chunk-hot-entries");
    out.splitter_records = cluster.metrics().stage_log.back().emitted_records;
    return out;
}

std::uint64_t TreeJoinStats::splitter_records() const {
    std::uint64_t total = 0;
    for (auto r : split_records_per_round) total += r;
    return total;
}

namespace {

// Per-round totals of the depth-first walk, indexed like the stages of
// tree_join_iteration plus the shuffle that follows it.
struct RoundTally {
    explicit RoundTally(std::size_t n)
        : cold_records(n), cold_bytes(n), cold_task(n), split_records(n), split_bytes(n), split_task(n),
          arrived(n) {}

    std::vector<std::uint64_t> cold_records, cold_bytes, cold_task;
    std::vector<std::uint64_t> split_records, split_bytes, split_task;
    std::vector<std::uint64_t> arrived;  // records landing per partition for the next round
    std::uint64_t moved = 0;
    bool has_next = false;
};

// Stages per round: split-hot-entries, cold-pairs, chunk-hot-entries,
// union, shuffle-sub-lists.
constexpr std::uint64_t kStagesPerRound = 5;
constexpr std::uint64_t kShuffleOffset = 4;

class TreeWalk {
public:
    TreeWalk(Cluster& cluster, JoinResult& result)
        : cluster_(cluster), n_(cluster.executors()), lambda_(cluster.lambda()),
          first_stage_(cluster.metrics().stages) {
        for (std::size_t p = 0; p < n_; ++p) sinks_.push_back(result.writer(p));
    }

    void visit(const JoinedIndexEntry& entry, std::size_t p, std::size_t round) {
        tally(round);
        if (!is_hot_key(entry, lambda_)) {
            RowSink& sink = sinks_[p];
            const std::uint64_t rows = sink.rows(), bytes = sink.bytes();
            get_all_value_pairs(entry, sink);
            auto& t = rounds_[round];
            t.cold_records[p] += sink.rows() - rows;
            t.cold_bytes[p] += sink.bytes() - bytes;
            t.cold_task[p] = std::max(t.cold_task[p], sink.rows() - rows);
            return;
        }
        const auto children = split_hot_entry(entry);
        std::uint64_t records = 0;
        for (const auto& c : children) {
            records += c.record_count();
            rounds_[round].split_bytes[p] += c.byte_size();
        }
        {
            auto& t = rounds_[round];
            t.split_records[p] += records;
            t.split_task[p] = std::max(t.split_task[p], records);
            t.has_next = true;
        }
        const std::uint64_t stage = first_stage_ + kStagesPerRound * round + kShuffleOffset;
        tally(round + 1);
        for (const auto& c : children) {
            const std::size_t dst = cluster_.shuffle_destination(stage, c.token);
            if (dst != p) rounds_[round].moved += c.byte_size();
            rounds_[round + 1].arrived[dst] += c.record_count();
            visit(c, dst, round + 1);
        }
    }

    void finish(JoinResult& result, TreeJoinStats* stats) {
        for (std::size_t p = 0; p < n_; ++p) result.commit(p, sinks_[p]);
        for (std::size_t r = 0; r < rounds_.size(); ++r) {
            const auto& t = rounds_[r];
            cluster_.record_plain_stage("split-hot-entries");
            cluster_.record_map_stage("cold-pairs", t.cold_records, t.cold_bytes, t.cold_task);
            cluster_.record_map_stage("chunk-hot-entries", t.split_records, t.split_bytes, t.split_task);
            cluster_.record_plain_stage("union");
            if (!t.has_next) break;
            std::uint64_t splitter = 0;
            for (auto v : t.split_records) splitter += v;
            if (stats) {
                stats->iterations += 1;
                if (stats->split_records_per_round.empty()) stats->first_split_records = splitter;
                stats->split_records_per_round.push_back(splitter);
            }
            const auto& arrived = rounds_[r + 1].arrived;
            cluster_.record_shuffle_stage("shuffle-sub-lists", t.moved,
                                          *std::max_element(arrived.begin(), arrived.end()));
        }
    }

private:
    void tally(std::size_t round) {
        while (rounds_.size() <= round) rounds_.emplace_back(n_);
    }

    Cluster& cluster_;
    std::size_t n_;
    double lambda_;
    std::uint64_t first_stage_;
    std::vector<RowSink> sinks_;
    std::vector<RoundTally> rounds_;
};

}  // namespace

JoinResult run_tree_rounds(Cluster& cluster, Dataset<JoinedIndexEntry> index, TreeJoinStats* stats) {
    JoinResult result(cluster.executors(), cluster.config().output);
    if (index.num_partitions() != cluster.executors()) throw ConfigError("index does not match the cluster");
    TreeWalk walk(cluster, result);
    for (std::size_t p = 0; p < index.num_partitions(); ++p) {
        for (const auto& entry : index.partition(p)) walk.visit(entry, p, 0);
    }
    walk.finish(result, stats);
    return result;
}

JoinResult tree_join_basic(Cluster& cluster, const Relation& r, const Relation& s, TreeJoinStats* stats) {
    return run_tree_rounds(cluster, build_joined_index(cluster, r, s), stats);
}

SplitMix64 unravel_rng(std::uint64_t seed, const Record& rec, bool swap) {
    std::uint64_t h = hash_combine(seed, rec.key.value());
    h = hash_combine(h, rec.id);
    h = hash_combine(h, hash_bytes(rec.payload));
    return SplitMix64(hash_combine(h, swap ? 1 : 0));
}

std::vector<std::pair<AugmentedKey, Tagged>> unravel_record(const Record& rec, bool swap, const JoinedHotKeyMap& hot,
                                                           SplitMix64& rng) {
    auto it = hot.find(rec.key);
    if (it == hot.end()) throw PreconditionError("unraveled record's key is not a shared hot key");
    auto [l1, l2] = it->second;
    if (swap) std::swap(l1, l2);
    const std::size_t d1 = chunk_count(l1);
    const std::size_t d2 = chunk_count(l2);
    const auto own = static_cast<std::uint32_t>(uniform_below(rng, d1));
    std::vector<std::pair<AugmentedKey, Tagged>> out;
    out.reserve(d2);
    for (std::uint32_t other = 0; other < d2; ++other) {
        AugmentedKey key = swap ? AugmentedKey{rec.key, other, own} : AugmentedKey{rec.key, own, other};
        out.emplace_back(key, Tagged{static_cast<std::uint8_t>(swap ? 1 : 0), rec.payload});
    }
    return out;
}

JoinedIndexEntry strip_key_padding(const IndexEntry<AugmentedKey>& entry) {
    return JoinedIndexEntry{entry.key.base, entry.left, entry.right, entry.shape, mix64(entry.key.fingerprint())};
}

JoinResult tree_join(Cluster& cluster, const Relation& r, const Relation& s, const TreeJoinOptions& options,
                     TreeJoinStats* stats) {
    const double min_freq = options.min_freq.value_or(hot_frequency_threshold(cluster.lambda()));
    const auto hot_r = get_hot_keys(cluster, r, options.k_max_r, min_freq);
    const auto hot_s = get_hot_keys(cluster, s, options.k_max_s, min_freq);
    return tree_join_with_hot_keys(cluster, r, s, join_hot_keys(hot_r, hot_s), stats);
}

JoinResult tree_join_with_hot_keys(Cluster& cluster, const Relation& r, const Relation& s,
                                   const JoinedHotKeyMap& hot, TreeJoinStats* stats) {
    auto shared = cluster.broadcast(hot, joined_hot_key_map_bytes(hot), "broadcast-hot-keys");
    auto is_hot = [shared](const Record& rec) { return shared->contains(rec.key); };
    auto [r_hot, r_cold] = cluster.split_locally(r.data(), is_hot, "split-hot-r");
    auto [s_hot, s_cold] = cluster.split_locally(s.data(), is_hot, "split-hot-s");
    auto cold = build_index_from(cluster, r_cold, s_cold);

    const std::uint64_t seed = cluster.config().seed;
    auto unravel = [&](const Dataset<Record>& records, bool swap) {
        return cluster.map<AugmentedKeyed>(
            records,
            [shared, seed, swap](const Record& rec, Emitter<AugmentedKeyed>& out) {
                auto rng = unravel_rng(seed, rec, swap);
                for (auto& copy : unravel_record(rec, swap, *shared, rng)) out.emit(std::move(copy));
            },
            swap ? "unravel-s" : "unravel-r");
    };
    auto r_unraveled = unravel(r_hot, false);
    const std::uint64_t r_copies = cluster.metrics().stage_log.back().emitted_records;
    auto s_unraveled = unravel(s_hot, true);
    const std::uint64_t s_copies = cluster.metrics().stage_log.back().emitted_records;
    auto augmented =
        group_into_index(cluster, cluster.union_all(r_unraveled, s_unraveled), "build-augmented-index");
    if (stats) stats->hot_keys = hot.size();
    const std::uint64_t unraveled = (r_copies > 0 && s_copies > 0) ? r_copies + s_copies : 0;
    return finish_hot_path(cluster, augmented, std::move(cold), unraveled, stats);
}

JoinResult self_tree_join(Cluster& cluster, const Relation& r, std::size_t k_max, std::optional<double> min_freq,
                          TreeJoinStats* stats) {
    const double threshold = min_freq.value_or(hot_frequency_threshold(cluster.lambda()));
    return self_tree_join_with_hot_keys(cluster, r, get_hot_keys(cluster, r, k_max, threshold), stats);
}

JoinResult self_tree_join_with_hot_keys(Cluster& cluster, const Relation& r, const HotKeyMap& hot,
                                        TreeJoinStats* stats) {
    auto shared = cluster.broadcast(hot, hot_key_map_bytes(hot), "broadcast-hot-keys");
    auto [r_hot, r_cold] = cluster.split_locally(
        r.data(), [shared](const Record& rec) { return shared->contains(rec.key); }, "split-hot");

    auto grouped = cluster.group_by_key(tag_records(cluster, r_cold, 0), "build-self-index");
    auto cold = cluster.map<JoinedIndexEntry>(
        grouped,
        [](const std::pair<Key, std::vector<Tagged>>& group, Emitter<JoinedIndexEntry>& out) {
            JoinedIndexEntry entry{group.first, {}, {}, EntryShape::kTriangle, mix64(group.first.value())};
            for (const auto& t : group.second) entry.left.push_back(t.payload);
            out.emit(std::move(entry));
        },
        "reduce-self-index");

    // A record in sub-list c meets sub-list j under (min(c, j), max(c, j));
    // it is the left list there when c is the smaller id.
    const std::uint64_t seed = cluster.config().seed;
    auto unraveled = cluster.map<AugmentedKeyed>(
        r_hot,
        [shared, seed](const Record& rec, Emitter<AugmentedKeyed>& out) {
            const std::size_t d = chunk_count(shared->at(rec.key));
            auto rng = unravel_rng(seed, rec, false);
            const auto own = static_cast<std::uint32_t>(uniform_below(rng, d));
            for (std::uint32_t other = 0; other < d; ++other) {
                const std::uint32_t lo = std::min(own, other), hi = std::max(own, other);
                out.emit({AugmentedKey{rec.key, lo, hi}, Tagged{static_cast<std::uint8_t>(own == lo ? 0 : 1), rec.payload}});
            }
        },
        "unravel-self");
    const std::uint64_t copies = cluster.metrics().stage_log.back().emitted_records;
    auto augmented = group_into_index(cluster, unraveled, "build-augmented-index");
    augmented = cluster.map<IndexEntry<AugmentedKey>>(
        augmented,
        [](const IndexEntry<AugmentedKey>& e, Emitter<IndexEntry<AugmentedKey>>& out) {
            auto entry = e;
            if (entry.key.r_chunk == entry.key.s_chunk) entry.shape = EntryShape::kTriangle;
            out.emit(std::move(entry));
        },
        "mark-diagonal");
    if (stats) stats->hot_keys = hot.size();
    return finish_hot_path(cluster, augmented, std::move(cold), copies, stats);
}

std::size_t iteration_bound(std::uint64_t l_max, double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("the iteration bound needs lambda > 0");
    if (l_max < 2) throw PreconditionError("the iteration bound needs l_max >= 2");
    const double inner = std::log(static_cast<double>(l_max)) / std::log1p(lambda);
    const double t = std::log(inner) / std::log(1.5) - 1.0;
    const double bound = std::ceil(t - 1e-9);
    return bound <= 0.0 ? 0 : static_cast<std::size_t>(bound);
}

}  // namespace skewjoin
