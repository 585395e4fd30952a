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

// Multistage joins that split the lists of hot keys into sub-list pairs and
// spread them over executors, round after round, until every pair is cheap.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "skewjoin/common.hpp"
#include "skewjoin/engine.hpp"
#include "skewjoin/hashing.hpp"
#include "skewjoin/hotkeys.hpp"
#include "skewjoin/model.hpp"

namespace skewjoin {

/// Original key plus the ids of the R-side and S-side sub-lists.
struct AugmentedKey {
    Key base;
    std::uint32_t r_chunk = 0;
    std::uint32_t s_chunk = 0;

    static constexpr std::uint64_t kEncodedBytes = 16;
    std::uint64_t byte_size() const { return kEncodedBytes; }
    std::uint64_t fingerprint() const { return hash_combine(hash_combine(base.value(), r_chunk), s_chunk); }

    friend auto operator<=>(const AugmentedKey&, const AugmentedKey&) = default;
};

/// A payload tagged with the side it came from (0 = left, 1 = right).
struct Tagged {
    std::uint8_t side = 0;
    Payload payload;

    std::uint64_t byte_size() const { return payload.size(); }
    friend bool operator==(const Tagged&, const Tagged&) = default;
};

enum class EntryShape : std::uint8_t {
    kPair,      // cross product of left x right
    kTriangle,  // unordered pairs (i <= j) of left; right unused
};

/// A key with its joined lists.
template <class K>
struct IndexEntry {
    K key{};
    std::vector<Payload> left;
    std::vector<Payload> right;
    EntryShape shape = EntryShape::kPair;
    /// Identity used for random placement; sub-entries derive theirs from
    /// the parent. Not shipped, so not part of the byte size.
    std::uint64_t token = 0;

    std::uint64_t shuffle_token() const { return token; }
    std::uint64_t byte_size() const {
        std::uint64_t total = element_bytes(key);
        for (const auto& p : left) total += p.size();
        for (const auto& p : right) total += p.size();
        return total;
    }
    std::uint64_t record_count() const { return left.size() + right.size(); }

    friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

using JoinedIndexEntry = IndexEntry<Key>;

/// ceil(l^{1/3}), computed exactly on integers.
std::size_t chunk_count(std::size_t length);
/// ceil(l / chunk_count(l)).
std::size_t chunk_length(std::size_t length);

/// Consecutive sub-lists of chunk_length(l) elements; the last may be
/// shorter. Throws PreconditionError on an empty list.
template <class T>
std::vector<std::vector<T>> chunk_list(std::span<const T> list) {
    if (list.empty()) throw PreconditionError("cannot chunk an empty list");
    const std::size_t width = chunk_length(list.size());
    std::vector<std::vector<T>> out;
    out.reserve(chunk_count(list.size()));
    for (std::size_t i = 0; i < list.size(); i += width) {
        const std::size_t end = std::min(list.size(), i + width);
        out.emplace_back(list.begin() + static_cast<std::ptrdiff_t>(i), list.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

template <class T>
std::vector<std::vector<T>> chunk_list(const std::vector<T>& list) {
    return chunk_list(std::span<const T>(list));
}

/// sqrt(l1 * l2) > (1 + lambda)^{3/2}, evaluated as l1 * l2 > (1 + lambda)^3.
bool is_hot_key(std::uint64_t l1, std::uint64_t l2, double lambda);
/// Triangle entries use l1 = l2 = |left|. Entries with an empty side are cold.
bool is_hot_key(const JoinedIndexEntry& entry, double lambda);

/// Rows of one entry: the cross product, or the upper triangle for
/// triangle entries.
std::vector<JoinRow> get_all_value_pairs(const JoinedIndexEntry& entry);
void get_all_value_pairs(const JoinedIndexEntry& entry, RowSink& sink);

struct ChunkedEntry {
    Key key;
    std::vector<std::vector<Payload>> left;
    std::vector<std::vector<Payload>> right;
};

ChunkedEntry chunk_pair_of_lists(const JoinedIndexEntry& entry);

/// Next-round entries of a hot entry: all sub-list pairs, or for a triangle
/// entry the pairs a < b plus one triangle per sub-list.
std::vector<JoinedIndexEntry> split_hot_entry(const JoinedIndexEntry& entry);

/// R and S tagged and grouped by key; one entry per key.
Dataset<JoinedIndexEntry> build_joined_index(Cluster& cluster, const Relation& r, const Relation& s);

struct IterationOutput {
    JoinResult partial;
    Dataset<JoinedIndexEntry> next;
    std::uint64_t splitter_records = 0;
};

/// One round: cold entries produce their rows, hot entries are split into
/// the next index. No data moves.
IterationOutput tree_join_iteration(Cluster& cluster, const Dataset<JoinedIndexEntry>& index);

struct TreeJoinStats {
    /// Chunking rounds, the unraveling of hot keys included.
    std::size_t iterations = 0;
    /// Records emitted by the first-round split of original lists.
    std::uint64_t first_split_records = 0;
    /// Records emitted by every split round, in order.
    std::vector<std::uint64_t> split_records_per_round;
    std::uint64_t hot_keys = 0;
    std::uint64_t splitter_records() const;
};

/// Iterates rounds over the given index (random shuffle between rounds)
/// and unions all partial results. Each index entry is followed through
/// all rounds before the next one starts, so memory stays proportional to
/// one entry's subtree; metrics and placements are those of running
/// tree_join_iteration round by round.
JoinResult run_tree_rounds(Cluster& cluster, Dataset<JoinedIndexEntry> index, TreeJoinStats* stats);

JoinResult tree_join_basic(Cluster& cluster, const Relation& r, const Relation& s, TreeJoinStats* stats = nullptr);

/// Copies of a hot record under augmented keys. With swap = false (an R
/// record) the record takes a random R sub-list id in [0, d(l_R)) and is
/// emitted under every S sub-list id; with swap = true (an S record) the
/// roles flip. Keys are always (base, R id, S id). Throws
/// PreconditionError when the key is not in `hot`.
std::vector<std::pair<AugmentedKey, Tagged>> unravel_record(const Record& rec, bool swap,
                                                           const JoinedHotKeyMap& hot, SplitMix64& rng);

/// Generator used for a record's random sub-list id.
SplitMix64 unravel_rng(std::uint64_t seed, const Record& rec, bool swap);

JoinedIndexEntry strip_key_padding(const IndexEntry<AugmentedKey>& entry);

struct TreeJoinOptions {
    std::size_t k_max_r = 1000;
    std::size_t k_max_s = 1000;
    /// Defaults to hot_frequency_threshold(lambda) when unset.
    std::optional<double> min_freq;
};

/// Hot keys of both sides are unraveled instead of being collected on one
/// executor; everything else follows tree_join_basic.
JoinResult tree_join(Cluster& cluster, const Relation& r, const Relation& s, const TreeJoinOptions& options = {},
                     TreeJoinStats* stats = nullptr);
/// Same, with the shared hot keys already known.
JoinResult tree_join_with_hot_keys(Cluster& cluster, const Relation& r, const Relation& s,
                                   const JoinedHotKeyMap& hot, TreeJoinStats* stats = nullptr);

/// Same-attribute self join: per key of frequency f, the f(f+1)/2
/// unordered pairs, diagonal included.
JoinResult self_tree_join(Cluster& cluster, const Relation& r, std::size_t k_max,
                          std::optional<double> min_freq = std::nullopt, TreeJoinStats* stats = nullptr);
JoinResult self_tree_join_with_hot_keys(Cluster& cluster, const Relation& r, const HotKeyMap& hot,
                                        TreeJoinStats* stats = nullptr);

/// ceil(log_{3/2}(log_{1+lambda}(l_max)) - 1), clamped at 0. Throws
/// ConfigError for lambda <= 0 and PreconditionError for l_max < 2.
std::size_t iteration_bound(std::uint64_t l_max, double lambda);

}  // namespace skewjoin
