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

// Adaptive multistage join: each relation is split four ways by whether a
// key is hot in it and/or in the other relation, and every pairing is
// joined with the algorithm suited to it (tree join for keys hot on both
// sides, broadcast joins for keys hot on one side, shuffle join for the
// rest).

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "skewjoin/common.hpp"
#include "skewjoin/engine.hpp"
#include "skewjoin/hotkeys.hpp"
#include "skewjoin/model.hpp"
#include "skewjoin/treejoin.hpp"

namespace skewjoin {

struct RelationSplit {
    Relation hh;  // hot here and in the other relation
    Relation hc;  // hot here only
    Relation ch;  // hot in the other relation only
    Relation cc;  // hot in neither
};

/// Two local split rounds (hot in self, then hot in other); no data moves.
RelationSplit split_relation(Cluster& cluster, const Relation& relation, const HotKeyMap& self,
                             const HotKeyMap& other);

enum class SmallLargeStrategy { kBroadcast, kShuffle };

/// Broadcast iff large * m_large * (1 + lambda) >=
/// small * m_small * (1 + lambda * log_{lambda+1}(n)). Lambda = 0 always
/// shuffles.
SmallLargeStrategy choose_small_large_strategy(double small_count, double m_small, double large_count,
                                               double m_large, double lambda, std::size_t n);

/// Both relations grouped by key; each key's rows come from one executor.
JoinResult shuffle_join(Cluster& cluster, const Relation& r, const Relation& s, JoinMode mode);

JoinRow swap_joined_records(JoinRow row);

struct AmJoinOptions {
    std::size_t k_max_r = 1000;
    std::size_t k_max_s = 1000;
    /// Defaults to hot_frequency_threshold(lambda) when unset.
    std::optional<double> min_freq;
};

/// Which algorithm ran for one of the four sub-joins.
struct SubJoinRecord {
    std::string sub_join;   // "R_HH*S_HH", "R_HC*S_CH", "S_HC*R_CH", "R_CC*S_CC"
    std::string algorithm;  // e.g. "tree", "ib", "ib-left-outer", "shuffle-inner"
    std::string reason;     // empty, "shuffle-cheaper" or "index-over-memory"
};

struct AmJoinStats {
    std::vector<SubJoinRecord> sub_joins;
    TreeJoinStats tree;
    std::size_t hot_keys_r = 0;
    std::size_t hot_keys_s = 0;
};

/// Modes inner, left, right and full. Hot keys are collected once and
/// reused by the tree join.
JoinResult am_join(Cluster& cluster, const Relation& r, const Relation& s, JoinMode mode,
                   const AmJoinOptions& options = {}, AmJoinStats* stats = nullptr);

/// Same with caller-supplied hot-key maps. The maps may contain arbitrary
/// keys; each is first restricted to the keys present in its relation.
JoinResult am_join_with_hot_keys(Cluster& cluster, const Relation& r, const Relation& s, JoinMode mode,
                                 const HotKeyMap& hot_r, const HotKeyMap& hot_s, AmJoinStats* stats = nullptr);

/// Same-attribute self join; with identical hot keys on both sides only the
/// tree join leg has work, so this is the self tree join.
JoinResult am_self_join(Cluster& cluster, const Relation& r, const AmJoinOptions& options = {},
                        AmJoinStats* stats = nullptr);

}  // namespace skewjoin
