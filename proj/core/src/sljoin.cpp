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

#include "skewjoin/sljoin.hpp"

#include <algorithm>
#include <set>

namespace skewjoin {

namespace {

using KeySet = std::set<Key>;

/// Vote for an unjoined id; the id itself is the group key.
struct IdVote {
    std::uint64_t byte_size() const { return 0; }
};

/// Either an unjoinable-id marker or an S record, keyed by id.
struct IdJoinItem {
    bool is_record = false;
    Key key;
    Payload payload;

    std::uint64_t byte_size() const { return is_record ? Key::kEncodedBytes + payload.size() : 0; }
};

/// Content hash of a record; used as a group key and never shipped.
struct RecordHash {
    std::uint64_t value = 0;

    std::uint64_t byte_size() const { return 0; }
    std::uint64_t fingerprint() const { return value; }
    friend bool operator==(const RecordHash&, const RecordHash&) = default;
};

struct ProbePass {
    JoinResult rows;
    Dataset<KeySet> joined_keys;
};

/// One scan of R: joined rows, optional NULL-padded R rows, and the set of
/// index keys matched on each executor.
ProbePass probe(Cluster& cluster, const Relation& r, const Broadcast<BroadcastIndex>& index, bool keep_left,
                std::string_view label) {
    auto [rows, keys] = cluster.map_rows_with_local<KeySet>(
        r.data(), KeySet{},
        [&index, keep_left](const Record& rec, RowSink& sink, KeySet& joined) {
            if (const auto* matches = index->find(rec.key)) {
                for (const auto& m : *matches) sink.row(rec.key, &rec.payload, &m.payload);
                joined.insert(rec.key);
            } else if (keep_left) {
                sink.row(rec.key, &rec.payload, nullptr);
            }
        },
        label);
    return {std::move(rows), std::move(keys)};
}

void mark_broadcast(Cluster& cluster, const Broadcast<BroadcastIndex>& index, SmallLargeTrace* trace) {
    if (!trace) return;
    trace->index_bytes = index->total_bytes();
    trace->network_after_broadcast = cluster.metrics().network_bytes();
}

void mark_end(Cluster& cluster, SmallLargeTrace* trace) {
    if (trace) trace->network_at_end = cluster.metrics().network_bytes();
}

/// Union of the per-executor key sets, then the S records whose keys no
/// executor matched, NULL padded on the left.
JoinResult right_anti(Cluster& cluster, const Relation& s, const BroadcastIndex& index,
                      const Dataset<KeySet>& joined_per_executor, SmallLargeTrace* trace) {
    auto joined = cluster.tree_aggregate(
        joined_per_executor, KeySet{}, [](KeySet& acc, const KeySet& local) { acc.insert(local.begin(), local.end()); },
        [](KeySet a, KeySet b) {
            a.merge(b);
            return a;
        },
        "union-joined-keys");
    KeySet unjoinable;
    for (const auto& key : index.keys()) {
        if (!joined.contains(key)) unjoinable.insert(key);
    }
    const bool send_joinable = joined.size() < unjoinable.size();
    KeySet& chosen = send_joinable ? joined : unjoinable;
    const std::uint64_t bytes = chosen.size() * Key::kEncodedBytes;
    if (trace) {
        trace->key_set_bytes = bytes;
        trace->sent_joinable_keys = send_joinable;
    }
    auto keys = cluster.broadcast(std::move(chosen), bytes, "broadcast-key-set");
    return cluster.map_rows(
        s.data(),
        [keys, send_joinable](const Record& rec, RowSink& sink) {
            if (keys->contains(rec.key) != send_joinable) sink.row(rec.key, nullptr, &rec.payload);
        },
        "right-anti");
}

/// Locally unjoined S records of each executor: index keys absent from the
/// executor's joined-key set.
template <class F>
void for_each_unjoined(const BroadcastIndex& index, const std::vector<Key>& keys, const KeySet& joined, F&& f) {
    for (const auto& key : keys) {
        if (joined.contains(key)) continue;
        for (const auto& rec : *index.find(key)) f(key, rec);
    }
}

}  // namespace

BroadcastIndex::BroadcastIndex(std::vector<std::pair<Key, std::vector<IndexedRecord>>> groups) {
    for (auto& [key, records] : groups) {
        if (records.empty()) continue;
        auto& slot = entries_[key];
        if (slot.empty()) total_bytes_ += Key::kEncodedBytes;
        for (auto& rec : records) {
            total_bytes_ += rec.payload.size();
            slot.push_back(std::move(rec));
        }
    }
}

const std::vector<IndexedRecord>* BroadcastIndex::find(const Key& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<Key> BroadcastIndex::keys() const {
    std::vector<Key> out;
    out.reserve(entries_.size());
    for (const auto& [key, _] : entries_) out.push_back(key);
    std::sort(out.begin(), out.end());
    return out;
}

Broadcast<BroadcastIndex> build_broadcast_index(Cluster& cluster, const Relation& s) {
    using Item = std::pair<Key, IndexedRecord>;
    auto keyed = cluster.map<Item>(
        s.data(), [](const Record& rec, Emitter<Item>& out) { out.emit({rec.key, IndexedRecord{rec.payload, rec.id}}); },
        "index-records");
    auto groups = cluster.collect(cluster.group_by_key(keyed, "group-index"), "collect-index");
    BroadcastIndex index(std::move(groups));
    const std::uint64_t bytes = index.total_bytes();
    return cluster.broadcast(std::move(index), bytes, "broadcast-index");
}

JoinResult index_broadcast_join(Cluster& cluster, const Relation& r, const Relation& s, SmallLargeTrace* trace) {
    auto index = build_broadcast_index(cluster, s);
    mark_broadcast(cluster, index, trace);
    auto pass = probe(cluster, r, index, false, "probe-inner");
    mark_end(cluster, trace);
    return std::move(pass.rows);
}

JoinResult index_broadcast_left_outer_join(Cluster& cluster, const Relation& r, const Relation& s,
                                           SmallLargeTrace* trace) {
    auto index = build_broadcast_index(cluster, s);
    mark_broadcast(cluster, index, trace);
    auto pass = probe(cluster, r, index, true, "probe-left-outer");
    mark_end(cluster, trace);
    return std::move(pass.rows);
}

JoinResult index_broadcast_right_outer_join(Cluster& cluster, const Relation& r, const Relation& s,
                                            SmallLargeTrace* trace) {
    auto index = build_broadcast_index(cluster, s);
    mark_broadcast(cluster, index, trace);
    auto pass = probe(cluster, r, index, false, "probe-inner");
    auto anti = right_anti(cluster, s, *index, pass.joined_keys, trace);
    auto result = cluster.union_results(std::move(pass.rows), std::move(anti));
    mark_end(cluster, trace);
    return result;
}

JoinResult index_broadcast_full_outer_join(Cluster& cluster, const Relation& r, const Relation& s,
                                           SmallLargeTrace* trace) {
    auto index = build_broadcast_index(cluster, s);
    mark_broadcast(cluster, index, trace);
    auto pass = probe(cluster, r, index, true, "probe-left-outer");
    auto anti = right_anti(cluster, s, *index, pass.joined_keys, trace);
    auto result = cluster.union_results(std::move(pass.rows), std::move(anti));
    mark_end(cluster, trace);
    return result;
}

JoinResult index_broadcast_join(Cluster& cluster, const Relation& r, const Relation& s, JoinMode mode,
                                SmallLargeTrace* trace) {
    switch (mode) {
        case JoinMode::kInner:
            return index_broadcast_join(cluster, r, s, trace);
        case JoinMode::kLeftOuter:
            return index_broadcast_left_outer_join(cluster, r, s, trace);
        case JoinMode::kRightOuter:
            return index_broadcast_right_outer_join(cluster, r, s, trace);
        case JoinMode::kFullOuter:
            return index_broadcast_full_outer_join(cluster, r, s, trace);
        case JoinMode::kSelfSameAttribute:
            break;
    }
    throw ModeError("index broadcast joins support inner, left, right and full modes");
}

JoinResult der_full_outer_join(Cluster& cluster, const Relation& r, const Relation& s, SmallLargeTrace* trace) {
    auto index = build_broadcast_index(cluster, s);
    mark_broadcast(cluster, index, trace);
    auto pass = probe(cluster, r, index, true, "probe-left-outer");

    using Vote = std::pair<std::uint64_t, IdVote>;
    const auto keys = index->keys();
    auto votes = cluster.map<Vote>(
        pass.joined_keys,
        [&index, &keys](const KeySet& joined, Emitter<Vote>& out) {
            for_each_unjoined(*index, keys, joined,
                              [&out](const Key&, const IndexedRecord& rec) { out.emit({rec.id, IdVote{}}); });
        },
        "unjoined-ids");
    auto tallies = cluster.group_by_key(votes, "hash-unjoined-ids");

    using Item = std::pair<std::uint64_t, IdJoinItem>;
    const std::size_t n = cluster.executors();
    auto unjoinable = cluster.map<Item>(
        tallies,
        [n](const std::pair<std::uint64_t, std::vector<IdVote>>& group, Emitter<Item>& out) {
            if (group.second.size() == n) out.emit({group.first, IdJoinItem{}});
        },
        "unjoinable-ids");
    auto s_by_id = cluster.map<Item>(
        s.data(),
        [](const Record& rec, Emitter<Item>& out) { out.emit({rec.id, IdJoinItem{true, rec.key, rec.payload}}); },
        "key-s-by-id");
    auto grouped = cluster.group_by_key(cluster.union_all(unjoinable, s_by_id), "hash-join-ids");
    auto anti = cluster.map_rows(
        grouped,
        [](const std::pair<std::uint64_t, std::vector<IdJoinItem>>& group, RowSink& sink) {
            const bool marked = std::any_of(group.second.begin(), group.second.end(),
                                            [](const IdJoinItem& item) { return !item.is_record; });
            if (!marked) return;
            for (const auto& item : group.second) {
                if (item.is_record) sink.row(item.key, nullptr, &item.payload);
            }
        },
        "pad-unjoinable");
    auto result = cluster.union_results(std::move(pass.rows), std::move(anti));
    mark_end(cluster, trace);
    return result;
}

JoinResult ddr_full_outer_join(Cluster& cluster, const Relation& r, const Relation& s, SmallLargeTrace* trace) {
    auto index = build_broadcast_index(cluster, s);
    mark_broadcast(cluster, index, trace);
    auto pass = probe(cluster, r, index, true, "probe-left-outer");

    using Item = std::pair<RecordHash, Record>;
    const auto keys = index->keys();
    auto unjoined = cluster.map<Item>(
        pass.joined_keys,
        [&index, &keys](const KeySet& joined, Emitter<Item>& out) {
            for_each_unjoined(*index, keys, joined, [&out](const Key& key, const IndexedRecord& rec) {
                const std::uint64_t h =
                    hash_combine(hash_combine(key.value(), hash_bytes(rec.payload)), rec.id);
                out.emit({RecordHash{h}, Record{key, rec.payload, rec.id}});
            });
        },
        "unjoined-records");
    auto grouped = cluster.group_by_key(unjoined, "hash-unjoined-records");
    const std::size_t n = cluster.executors();
    auto anti = cluster.map_rows(
        grouped,
        [n](const std::pair<RecordHash, std::vector<Record>>& group, RowSink& sink) {
            // Hash collisions put distinct records in one group; count each.
            std::map<std::pair<std::uint64_t, Key>, std::pair<const Record*, std::size_t>> copies;
            for (const auto& rec : group.second) {
                auto& slot = copies[{rec.id, rec.key}];
                slot.first = &rec;
                ++slot.second;
            }
            for (const auto& [_, slot] : copies) {
                if (slot.second == n) sink.row(slot.first->key, nullptr, &slot.first->payload);
            }
        },
        "pad-unjoinable");
    auto result = cluster.union_results(std::move(pass.rows), std::move(anti));
    mark_end(cluster, trace);
    return result;
}

}  // namespace skewjoin
