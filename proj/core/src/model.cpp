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

#include "skewjoin/model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace skewjoin {

const std::string_view kNullGlyph = "\xE2\x88\x85";

Relation::Relation(Dataset<Record> data) : data_(std::move(data)) {
    for (std::size_t p = 0; p < data_.num_partitions(); ++p) {
        for (const auto& rec : data_.partition(p)) {
            ++cardinality_;
            total_bytes_ += rec.byte_size();
        }
    }
}

Relation Relation::from_records(std::vector<Record> records, std::size_t partitions, bool keep_ids) {
    if (partitions == 0) throw ConfigError("a relation needs at least one partition");
    Dataset<Record> ds(partitions);
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!keep_ids) records[i].id = i;
        ds.partition(i % partitions).push_back(std::move(records[i]));
    }
    return Relation(std::move(ds));
}

double Relation::avg_record_bytes() const {
    if (cardinality_ == 0) return 0.0;
    return static_cast<double>(total_bytes_) / static_cast<double>(cardinality_);
}

std::string to_hex(std::string_view bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (char c : bytes) {
        const auto b = static_cast<unsigned char>(c);
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xf]);
    }
    return out;
}

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error("write to " + path + " failed");
}

}  // namespace

std::string from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex payload");
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = hex_value(hex[i]);
        const int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("non-hex character in payload");
        out.push_back(static_cast<char>((hi << 4) | lo));
    }
    return out;
}

Relation read_relation_tsv(std::istream& in, std::size_t partitions) {
    std::vector<Record> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(line_no, "expected <key>\\t<hex payload>");
        const std::string_view key_text(line.data(), tab);
        std::uint64_t key = 0;
        const auto [end, ec] = std::from_chars(key_text.data(), key_text.data() + key_text.size(), key);
        if (key_text.empty() || ec != std::errc{} || end != key_text.data() + key_text.size()) {
            throw ParseError(line_no, "key is not an unsigned 64-bit decimal integer");
        }
        Record rec;
        rec.key = Key(key);
        try {
            rec.payload = from_hex(std::string_view(line).substr(tab + 1));
        } catch (const std::invalid_argument& e) {
            throw ParseError(line_no, e.what());
        }
        records.push_back(std::move(rec));
    }
    if (in.bad()) throw Error("read failure");
    return Relation::from_records(std::move(records), partitions);
}

Relation read_relation_tsv(const std::string& path, std::size_t partitions) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return read_relation_tsv(in, partitions);
}

void write_relation_tsv(const Relation& relation, std::ostream& out) {
    const auto& ds = relation.data();
    std::vector<const Record*> ordered;
    ordered.reserve(relation.cardinality());
    for (std::size_t p = 0; p < ds.num_partitions(); ++p) {
        for (const auto& rec : ds.partition(p)) ordered.push_back(&rec);
    }
    // Load order (by id) so that reading the file back reproduces placement.
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Record* a, const Record* b) { return a->id < b->id; });
    for (const Record* rec : ordered) out << rec->key.value() << '\t' << to_hex(rec->payload) << '\n';
}

void write_relation_tsv(const Relation& relation, const std::string& path) {
    auto out = open_for_write(path);
    write_relation_tsv(relation, out);
    finish_write(out, path);
}

void write_join_rows(const std::vector<JoinRow>& rows, std::ostream& out) {
    for (const auto& row : rows) {
        out << row.key.value() << '\t';
        if (row.left) {
            out << to_hex(*row.left);
        } else {
            out << kNullGlyph;
        }
        out << '\t';
        if (row.right) {
            out << to_hex(*row.right);
        } else {
            out << kNullGlyph;
        }
        out << '\n';
    }
}

void write_join_rows(const std::vector<JoinRow>& rows, const std::string& path) {
    auto out = open_for_write(path);
    write_join_rows(rows, out);
    finish_write(out, path);
}

std::string metrics_to_json(const RunMetrics& metrics, const MetricsStamp& stamp) {
    nlohmann::ordered_json j;
    j["stages"] = metrics.stages;
    j["shuffledBytes"] = metrics.shuffled_bytes;
    j["broadcastBytes"] = metrics.broadcast_bytes;
    j["aggregatedBytes"] = metrics.aggregated_bytes;
    j["emittedRecordsPerExecutor"] = metrics.emitted_records_per_executor;
    j["emittedBytesPerExecutor"] = metrics.emitted_bytes_per_executor;
    j["maxTaskRecords"] = metrics.max_task_records;
    j["maxStageExecutorRecords"] = metrics.max_stage_executor_records;
    if (stamp.lambda) {
        j["lambda"] = *stamp.lambda;
        j["simulatedCost"] = metrics.simulated_cost(*stamp.lambda);
    }
    if (stamp.seed) j["seed"] = *stamp.seed;
    if (stamp.algorithm) j["algorithm"] = *stamp.algorithm;
    if (stamp.mode) j["mode"] = *stamp.mode;
    if (stamp.executors) j["executors"] = *stamp.executors;
    if (stamp.total_rows) j["totalRows"] = *stamp.total_rows;
    j["trace"] = metrics.trace;
    return j.dump();
}

void write_metrics(const RunMetrics& metrics, const std::string& path, const MetricsStamp& stamp) {
    auto out = open_for_write(path);
    out << metrics_to_json(metrics, stamp) << '\n';
    finish_write(out, path);
}

}  // namespace skewjoin
