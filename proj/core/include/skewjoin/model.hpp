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

// Relations, record/row file formats and metrics serialization.
//
// Relation TSV: one record per line, "<key>\t<payload>", key an unsigned
// decimal integer, payload lowercase or uppercase hex (possibly empty).
// Join-row TSV: "<key>\t<left>\t<right>" with payloads in lowercase hex and
// NULL written as the glyph U+2205 (bytes E2 88 85).

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skewjoin/common.hpp"
#include "skewjoin/engine.hpp"

namespace skewjoin {

/// A partitioned multiset of records.
class Relation {
public:
    Relation() = default;
    explicit Relation(Dataset<Record> data);

    /// Round-robin placement; record i gets id i unless keep_ids is set.
    static Relation from_records(std::vector<Record> records, std::size_t partitions, bool keep_ids = false);

    const Dataset<Record>& data() const { return data_; }
    std::size_t num_partitions() const { return data_.num_partitions(); }
    std::uint64_t cardinality() const { return cardinality_; }
    std::uint64_t total_bytes() const { return total_bytes_; }
    /// Mean Record::byte_size(); 0 for an empty relation.
    double avg_record_bytes() const;

    std::vector<Record> records() const { return data_.flatten(); }

private:
    Dataset<Record> data_;
    std::uint64_t cardinality_ = 0;
    std::uint64_t total_bytes_ = 0;
};

extern const std::string_view kNullGlyph;

std::string to_hex(std::string_view bytes);
/// Throws std::invalid_argument on odd length or non-hex digits.
std::string from_hex(std::string_view hex);

Relation read_relation_tsv(std::istream& in, std::size_t partitions);
Relation read_relation_tsv(const std::string& path, std::size_t partitions);
void write_relation_tsv(const Relation& relation, std::ostream& out);
void write_relation_tsv(const Relation& relation, const std::string& path);

void write_join_rows(const std::vector<JoinRow>& rows, std::ostream& out);
void write_join_rows(const std::vector<JoinRow>& rows, const std::string& path);

/// Run identification stamped into the metrics object.
struct MetricsStamp {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> algorithm;
    std::optional<std::string> mode;
    std::optional<std::size_t> executors;
    std::optional<double> lambda;
    std::optional<std::uint64_t> total_rows;
};

/// One JSON object: stages, shuffledBytes, broadcastBytes, aggregatedBytes,
/// emittedRecordsPerExecutor, emittedBytesPerExecutor, maxTaskRecords,
/// simulatedCost (when lambda is stamped), trace, plus stamp fields.
std::string metrics_to_json(const RunMetrics& metrics, const MetricsStamp& stamp = {});
void write_metrics(const RunMetrics& metrics, const std::string& path, const MetricsStamp& stamp = {});

}  // namespace skewjoin
