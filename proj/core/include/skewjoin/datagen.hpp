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

// Synthetic relations: a uniform-key part plus a Zipf-key part, with
// pseudo-random payloads of fixed size. Output depends only on the spec.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "skewjoin/hashing.hpp"
#include "skewjoin/model.hpp"

namespace skewjoin {

struct DatasetSpec {
    double alpha = 0.5;
    std::size_t record_bytes = 100;
    std::uint64_t n_uniform = 1'000'000;
    std::uint64_t n_zipf = 100'000;
    std::uint64_t zipf_domain = 1'000;
    std::uint64_t uniform_key_space = 2'147'483'647;
    std::uint64_t key_multiplier = 1;
    std::uint64_t seed = 0;

    /// Throws ConfigError on alpha < 0, zipf_domain == 0,
    /// uniform_key_space == 0 or key_multiplier == 0.
    void validate() const;
};

/// Inverse-CDF sampler over ranks 1..domain with P(k) proportional to
/// k^{-alpha}; the CDF table is built once.
class ZipfSampler {
public:
    ZipfSampler(double alpha, std::uint64_t domain);

    std::uint64_t domain() const { return cdf_.size(); }
    double probability(std::uint64_t rank) const;

    template <class Rng>
    std::uint64_t operator()(Rng& rng) const {
        return rank_for(uniform_unit(rng));
    }

    /// Smallest rank whose CDF exceeds u, u in [0, 1).
    std::uint64_t rank_for(double u) const;

private:
    std::vector<double> cdf_;
};

/// One draw; builds a sampler per call, so prefer ZipfSampler for streams.
std::uint64_t zipf_sample(double alpha, std::uint64_t domain, SplitMix64& rng);

/// Record i (uniform part first, then Zipf part) is drawn from a generator
/// seeded by (seed, i) and placed in partition i mod partitions.
Relation generate(const DatasetSpec& spec, std::size_t partitions);

}  // namespace skewjoin
