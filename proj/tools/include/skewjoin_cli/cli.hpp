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

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skewjoin/amjoin.hpp"
#include "skewjoin/common.hpp"
#include "skewjoin/engine.hpp"
#include "skewjoin/model.hpp"

namespace skewjoin::cli {

enum ExitCode : int {
    kOk = 0,
    kVerifyMismatch = 1,
    kUsage = 2,
    kCapacity = 3,
    kInputOutput = 4,
    kFailure = 5,
};

enum class Algorithm {
    kTreeBasic,
    kTree,
    kSelfTree,
    kAm,
    kShuffle,
    kIb,
    kIbLeft,
    kIbRight,
    kIbFull,
    kDer,
    kDdr,
};

std::optional<Algorithm> parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algorithm);
/// Whether the algorithm implements the mode.
bool supports(Algorithm algorithm, JoinMode mode);

struct HotKeyParams {
    std::size_t k_max = 1000;
    /// Defaults to the hot-frequency threshold of the cluster's lambda.
    std::optional<double> min_freq;
};

/// Runs one algorithm. For kSelfSameAttribute, `s` must be `r`.
JoinResult run_algorithm(Cluster& cluster, Algorithm algorithm, JoinMode mode, const Relation& r, const Relation& s,
                         const HotKeyParams& params);

/// Entry point of the skewjoin tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// CSV header of `skewjoin bench`.
extern const std::string_view kBenchHeader;

}  // namespace skewjoin::cli
