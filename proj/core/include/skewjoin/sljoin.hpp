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

// Joins of a large relation R with a small relation S that fits in every
// executor's memory. S is indexed, collected at the driver and broadcast;
// R never moves.

#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "skewjoin/common.hpp"
#include "skewjoin/engine.hpp"
#include "skewjoin/model.hpp"

namespace skewjoin {

struct IndexedRecord {
    Payload payload;
    std::uint64_t id = 0;

    std::uint64_t byte_size() const { return payload.size(); }
};

/// Key -> records of the small relation.
class BroadcastIndex {
public:
    BroadcastIndex() = default;
    explicit BroadcastIndex(std::vector<std::pair<Key, std::vector<IndexedRecord>>> groups);

    const std::vector<IndexedRecord>* find(const Key& key) const;
    bool contains(const Key& key) const { return entries_.contains(key); }
    std::size_t key_count() const { return entries_.size(); }
    /// Keys in ascending order.
    std::vector<Key> keys() const;
    /// 8 bytes per key plus all payload bytes.
    std::uint64_t total_bytes() const { return total_bytes_; }

private:
    std::unordered_map<Key, std::vector<IndexedRecord>> entries_;
    std::uint64_t total_bytes_ = 0;
};

/// Network totals observed around a small-large join.
struct SmallLargeTrace {
    std::uint64_t index_bytes = 0;
    std::uint64_t network_after_broadcast = 0;
    std::uint64_t network_at_end = 0;
    /// Size of the key set sent back to executors (full and right outer).
    std::uint64_t key_set_bytes = 0;
    bool sent_joinable_keys = false;

    std::uint64_t post_broadcast_bytes() const { return network_at_end - network_after_broadcast; }
};

/// Groups S by key, collects the groups at the driver and broadcasts the
/// index. Throws BroadcastCapacityError when it exceeds executor memory.
Broadcast<BroadcastIndex> build_broadcast_index(Cluster& cluster, const Relation& s);

JoinResult index_broadcast_join(Cluster& cluster, const Relation& r, const Relation& s,
                                SmallLargeTrace* trace = nullptr);
JoinResult index_broadcast_left_outer_join(Cluster& cluster, const Relation& r, const Relation& s,
                                           SmallLargeTrace* trace = nullptr);
JoinResult index_broadcast_right_outer_join(Cluster& cluster, const Relation& r, const Relation& s,
                                            SmallLargeTrace* trace = nullptr);
JoinResult index_broadcast_full_outer_join(Cluster& cluster, const Relation& r, const Relation& s,
                                           SmallLargeTrace* trace = nullptr);
/// Dispatches on mode (inner, left, right or full; left/right refer to R/S).
JoinResult index_broadcast_join(Cluster& cluster, const Relation& r, const Relation& s, JoinMode mode,
                                SmallLargeTrace* trace = nullptr);

/// Baseline: unjoined S record ids are hashed from every executor; ids seen
/// n times are joined back to S by id and NULL padded.
JoinResult der_full_outer_join(Cluster& cluster, const Relation& r, const Relation& s,
                               SmallLargeTrace* trace = nullptr);
/// Baseline: whole unjoined S records are hashed from every executor;
/// records seen n times are output NULL padded.
JoinResult ddr_full_outer_join(Cluster& cluster, const Relation& r, const Relation& s,
                               SmallLargeTrace* trace = nullptr);

}  // namespace skewjoin
