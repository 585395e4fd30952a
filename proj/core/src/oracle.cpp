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

#include "skewjoin/oracle.hpp"

#include <algorithm>

namespace skewjoin {

std::vector<JoinRow> oracle_join(const Relation& r, const Relation& s, JoinMode mode) {
    if (mode == JoinMode::kSelfSameAttribute) {
        if (&r != &s) throw ModeError("self join requires both inputs to be the same relation");
        return oracle_self_join(r);
    }
    const auto left = r.records();
    const auto right = s.records();
    std::vector<JoinRow> out;
    std::vector<bool> right_matched(right.size(), false);
    for (const auto& a : left) {
        bool matched = false;
        for (std::size_t j = 0; j < right.size(); ++j) {
            if (a.key == right[j].key) {
                out.push_back(JoinRow{a.key, a.payload, right[j].payload});
                matched = true;
                right_matched[j] = true;
            }
        }
        if (!matched && keeps_left(mode)) out.push_back(JoinRow{a.key, a.payload, std::nullopt});
    }
    if (keeps_right(mode)) {
        for (std::size_t j = 0; j < right.size(); ++j) {
            if (!right_matched[j]) out.push_back(JoinRow{right[j].key, std::nullopt, right[j].payload});
        }
    }
    return out;
}

std::vector<JoinRow> oracle_self_join(const Relation& r) {
    const auto recs = r.records();
    std::vector<JoinRow> out;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        for (std::size_t j = i; j < recs.size(); ++j) {
            if (recs[i].key == recs[j].key) out.push_back(JoinRow{recs[i].key, recs[i].payload, recs[j].payload});
        }
    }
    return out;
}

std::vector<JoinRow> canonicalize(std::vector<JoinRow> rows, bool unordered_pairs) {
    if (unordered_pairs) {
        for (auto& row : rows) {
            if (row.right < row.left) std::swap(row.left, row.right);
        }
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

bool multiset_equal(std::vector<JoinRow> a, std::vector<JoinRow> b, bool unordered_pairs) {
    if (a.size() != b.size()) return false;
    return canonicalize(std::move(a), unordered_pairs) == canonicalize(std::move(b), unordered_pairs);
}

}  // namespace skewjoin
