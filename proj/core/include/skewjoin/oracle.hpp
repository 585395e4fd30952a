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

// Reference join semantics, computed by nested loops over whole relations.

#pragma once

#include <vector>

#include "skewjoin/common.hpp"
#include "skewjoin/model.hpp"

namespace skewjoin {

/// All result rows of R mode S. kSelfSameAttribute requires &r == &s and
/// yields, per key of frequency f, the f(f+1)/2 pairs (i <= j) in load order.
/// Throws ModeError for a self join over two distinct relations.
std::vector<JoinRow> oracle_join(const Relation& r, const Relation& s, JoinMode mode);
std::vector<JoinRow> oracle_self_join(const Relation& r);

/// Sorted copy; with unordered_pairs each row is first normalized so that
/// left <= right (self-join pairs have no side).
std::vector<JoinRow> canonicalize(std::vector<JoinRow> rows, bool unordered_pairs = false);
bool multiset_equal(std::vector<JoinRow> a, std::vector<JoinRow> b, bool unordered_pairs = false);

}  // namespace skewjoin
