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

#include "skewjoin/datagen.hpp"

#include <algorithm>
#include <cmath>

namespace skewjoin {

void DatasetSpec::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be a finite value >= 0");
    if (zipf_domain == 0) throw ConfigError("zipf domain must be at least 1");
    if (uniform_key_space == 0) throw ConfigError("uniform key space must be at least 1");
    if (key_multiplier == 0) throw ConfigError("key multiplier must be at least 1");
}

ZipfSampler::ZipfSampler(double alpha, std::uint64_t domain) {
    if (domain == 0) throw ConfigError("zipf domain must be at least 1");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    cdf_.resize(domain);
    long double running = 0.0L;
    for (std::uint64_t k = 1; k <= domain; ++k) {
        running += std::pow(static_cast<long double>(k), -static_cast<long double>(alpha));
        cdf_[k - 1] = static_cast<double>(running);
    }
    const double total = cdf_.back();
    for (auto& c : cdf_) c /= total;
    cdf_.back() = 1.0;
}

double ZipfSampler::probability(std::uint64_t rank) const {
    if (rank == 0 || rank > cdf_.size()) return 0.0;
    return rank == 1 ? cdf_[0] : cdf_[rank - 1] - cdf_[rank - 2];
}

std::uint64_t ZipfSampler::rank_for(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto index = static_cast<std::uint64_t>(it - cdf_.begin());
    return std::min<std::uint64_t>(index, cdf_.size() - 1) + 1;
}

std::uint64_t zipf_sample(double alpha, std::uint64_t domain, SplitMix64& rng) {
    return ZipfSampler(alpha, domain)(rng);
}

Relation generate(const DatasetSpec& spec, std::size_t partitions) {
    spec.validate();
    if (partitions == 0) throw ConfigError("a relation needs at least one partition");
    const ZipfSampler zipf(spec.alpha, spec.zipf_domain);
    const std::uint64_t total = spec.n_uniform + spec.n_zipf;
    Dataset<Record> ds(partitions);
    for (std::size_t p = 0; p < partitions; ++p) ds.partition(p).reserve(total / partitions + 1);
    for (std::uint64_t i = 0; i < total; ++i) {
        SplitMix64 rng(hash_combine(spec.seed, i));
        const std::uint64_t rank =
            i < spec.n_uniform ? uniform_below(rng, spec.uniform_key_space) + 1 : zipf(rng);
        Record rec;
        rec.key = Key(rank * spec.key_multiplier);
        rec.id = i;
        rec.payload.resize(spec.record_bytes);
        for (std::size_t b = 0; b < spec.record_bytes; b += 8) {
            std::uint64_t word = rng();
            for (std::size_t j = b; j < std::min(spec.record_bytes, b + 8); ++j) {
                rec.payload[j] = static_cast<char>(word & 0xff);
                word >>= 8;
            }
        }
        ds.partition(i % partitions).push_back(std::move(rec));
    }
    return Relation(std::move(ds));
}

}  // namespace skewjoin
