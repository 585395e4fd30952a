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

#include "skewjoin/amjoin.hpp"

#include <cmath>
#include <set>

#include "skewjoin/sljoin.hpp"

namespace skewjoin {

namespace {

using Keyed = std::pair<Key, Tagged>;

Dataset<Keyed> tag_records(Cluster& cluster, const Relation& rel, std::uint8_t side) {
    return cluster.map<Keyed>(
        rel.data(), [side](const Record& rec, Emitter<Keyed>& out) { out.emit({rec.key, Tagged{side, rec.payload}}); },
        "tag-records");
}

/// Keys of `hot` that occur in `relation`, with their frequencies.
HotKeyMap restrict_to_present(Cluster& cluster, const Relation& relation, const HotKeyMap& hot) {
    using KeySet = std::set<Key>;
    auto present = cluster.tree_aggregate(
        relation.data(), KeySet{},
        [&hot](KeySet& acc, const Record& rec) {
            if (hot.contains(rec.key)) acc.insert(rec.key);
        },
        [](KeySet a, KeySet b) {
            a.merge(b);
            return a;
        },
        "present-hot-keys");
    HotKeyMap out;
    for (const auto& [key, freq] : hot) {
        if (present.contains(key)) out.emplace(key, freq);
    }
    return out;
}

std::string_view shuffle_name(JoinMode mode) {
    switch (mode) {
        case JoinMode::kInner:
            return "shuffle-inner";
        case JoinMode::kLeftOuter:
            return "shuffle-left-outer";
        case JoinMode::kRightOuter:
            return "shuffle-right-outer";
        case JoinMode::kFullOuter:
            return "shuffle-full-outer";
        case JoinMode::kSelfSameAttribute:
            break;
    }
    return "shuffle-self";
}

/// One broadcast leg: large joined with a small relation, inner or outer on
/// the large side. Falls back to a shuffle join with the same semantics.
JoinResult small_large_leg(Cluster& cluster, const Relation& large, const Relation& small, bool outer,
                           std::string sub_join, AmJoinStats& stats) {
    const JoinMode shuffle_mode = outer ? JoinMode::kLeftOuter : JoinMode::kInner;
    const auto strategy = choose_small_large_strategy(
        static_cast<double>(small.cardinality()), small.avg_record_bytes(), static_cast<double>(large.cardinality()),
        large.avg_record_bytes(), cluster.lambda(), cluster.executors());
    std::string reason;
    if (strategy == SmallLargeStrategy::kBroadcast) {
        try {
            auto result = outer ? index_broadcast_left_outer_join(cluster, large, small)
                                : index_broadcast_join(cluster, large, small);
            std::string algorithm = outer ? "ib-left-outer" : "ib";
            cluster.note(sub_join + " " + algorithm);
            stats.sub_joins.push_back({std::move(sub_join), std::move(algorithm), ""});
            return result;
        } catch (const BroadcastCapacityError&) {
            reason = "index-over-memory";
        }
    } else {
        reason = "shuffle-cheaper";
    }
    std::string algorithm(shuffle_name(shuffle_mode));
    cluster.note(sub_join + " " + algorithm + " (" + reason + ")");
    stats.sub_joins.push_back({std::move(sub_join), std::move(algorithm), std::move(reason)});
    return shuffle_join(cluster, large, small, shuffle_mode);
}

JoinResult run_am_join(Cluster& cluster, const Relation& r, const Relation& s, JoinMode mode,
                       const HotKeyMap& hot_r, const HotKeyMap& hot_s, AmJoinStats* stats) {
    if (mode == JoinMode::kSelfSameAttribute) throw ModeError("use am_self_join for same-attribute self joins");
    AmJoinStats local;
    AmJoinStats& st = stats ? *stats : local;
    st.hot_keys_r = hot_r.size();
    st.hot_keys_s = hot_s.size();

    auto shared_r = cluster.broadcast(hot_r, hot_key_map_bytes(hot_r), "broadcast-hot-keys-r");
    auto shared_s = cluster.broadcast(hot_s, hot_key_map_bytes(hot_s), "broadcast-hot-keys-s");
    const auto r_split = split_relation(cluster, r, *shared_r, *shared_s);
    const auto s_split = split_relation(cluster, s, *shared_s, *shared_r);

    // Keys hot on both sides occur on both sides, so an inner join suffices.
    auto hot_rs = join_hot_keys(hot_r, hot_s);
    cluster.note("R_HH*S_HH tree");
    st.sub_joins.push_back({"R_HH*S_HH", "tree", ""});
    auto result = tree_join_with_hot_keys(cluster, r_split.hh, s_split.hh, hot_rs, &st.tree);

    auto rhc_sch = small_large_leg(cluster, r_split.hc, s_split.ch, keeps_left(mode), "R_HC*S_CH", st);
    auto shc_rch = small_large_leg(cluster, s_split.hc, r_split.ch, keeps_right(mode), "S_HC*R_CH", st);
    shc_rch = cluster.remap_rows(shc_rch, swap_joined_records, "swap-joined-records");

    std::string cc_algorithm(shuffle_name(mode));
    cluster.note("R_CC*S_CC " + cc_algorithm);
    st.sub_joins.push_back({"R_CC*S_CC", std::move(cc_algorithm), ""});
    auto cc = shuffle_join(cluster, r_split.cc, s_split.cc, mode);

    result = cluster.union_results(std::move(result), std::move(rhc_sch));
    result = cluster.union_results(std::move(result), std::move(shc_rch));
    return cluster.union_results(std::move(result), std::move(cc));
}

}  // namespace

RelationSplit split_relation(Cluster& cluster, const Relation& relation, const HotKeyMap& self,
                             const HotKeyMap& other) {
    auto in_self = [&self](const Record& rec) { return self.contains(rec.key); };
    auto in_other = [&other](const Record& rec) { return other.contains(rec.key); };
    auto [hot, cold] = cluster.split_locally(relation.data(), in_self, "split-hot-self");
    auto [hh, hc] = cluster.split_locally(hot, in_other, "split-hot-other");
    auto [ch, cc] = cluster.split_locally(cold, in_other, "split-cold-other");
    return RelationSplit{Relation(std::move(hh)), Relation(std::move(hc)), Relation(std::move(ch)),
                         Relation(std::move(cc))};
}

SmallLargeStrategy choose_small_large_strategy(double small_count, double m_small, double large_count,
                                               double m_large, double lambda, std::size_t n) {
    if (!(lambda > 0.0)) return SmallLargeStrategy::kShuffle;
    const double hops = std::log(static_cast<double>(n)) / std::log1p(lambda);
    const double split_cost = large_count * m_large * (1.0 + lambda);
    const double broadcast_cost = small_count * m_small * (1.0 + lambda * hops);
    return split_cost >= broadcast_cost ? SmallLargeStrategy::kBroadcast : SmallLargeStrategy::kShuffle;
}

JoinResult shuffle_join(Cluster& cluster, const Relation& r, const Relation& s, JoinMode mode) {
    if (mode == JoinMode::kSelfSameAttribute) throw ModeError("shuffle join supports inner, left, right and full");
    auto grouped = cluster.group_by_key(cluster.union_all(tag_records(cluster, r, 0), tag_records(cluster, s, 1)),
                                        "shuffle-by-key");
    return cluster.map_rows(
        grouped,
        [mode](const std::pair<Key, std::vector<Tagged>>& group, RowSink& sink) {
            std::vector<Payload> left, right;
            for (const auto& t : group.second) (t.side == 0 ? left : right).push_back(t.payload);
            if (!left.empty() && !right.empty()) {
                sink.cross(group.first, left, right);
            } else if (right.empty() && keeps_left(mode)) {
                for (const auto& p : left) sink.row(group.first, &p, nullptr);
            } else if (left.empty() && keeps_right(mode)) {
                for (const auto& p : right) sink.row(group.first, nullptr, &p);
            }
        },
        "shuffle-join");
}

JoinRow swap_joined_records(JoinRow row) {
    std::swap(row.left, row.right);
    return row;
}

JoinResult am_join(Cluster& cluster, const Relation& r, const Relation& s, JoinMode mode,
                   const AmJoinOptions& options, AmJoinStats* stats) {
    const double min_freq = options.min_freq.value_or(hot_frequency_threshold(cluster.lambda()));
    const auto hot_r = get_hot_keys(cluster, r, options.k_max_r, min_freq);
    const auto hot_s = get_hot_keys(cluster, s, options.k_max_s, min_freq);
    return run_am_join(cluster, r, s, mode, hot_r, hot_s, stats);
}

JoinResult am_join_with_hot_keys(Cluster& cluster, const Relation& r, const Relation& s, JoinMode mode,
                                 const HotKeyMap& hot_r, const HotKeyMap& hot_s, AmJoinStats* stats) {
    return run_am_join(cluster, r, s, mode, restrict_to_present(cluster, r, hot_r),
                       restrict_to_present(cluster, s, hot_s), stats);
}

JoinResult am_self_join(Cluster& cluster, const Relation& r, const AmJoinOptions& options, AmJoinStats* stats) {
    const double min_freq = options.min_freq.value_or(hot_frequency_threshold(cluster.lambda()));
    const auto hot = get_hot_keys(cluster, r, options.k_max_r, min_freq);
    AmJoinStats local;
    AmJoinStats& st = stats ? *stats : local;
    st.hot_keys_r = st.hot_keys_s = hot.size();
    cluster.note("R_HH*R_HH self-tree");
    st.sub_joins.push_back({"R_HH*R_HH", "self-tree", ""});
    return self_tree_join_with_hot_keys(cluster, r, hot, &st.tree);
}

}  // namespace skewjoin
