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

#include "skewjoin_cli/cli.hpp"

#include <array>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "skewjoin/datagen.hpp"
#include "skewjoin/hotkeys.hpp"
#include "skewjoin/oracle.hpp"
#include "skewjoin/sljoin.hpp"
#include "skewjoin/treejoin.hpp"

namespace skewjoin::cli {

const std::string_view kBenchHeader =
    "algorithm,mode,alpha,n,lambda,stages,shuffled_bytes,broadcast_bytes,max_executor_records,total_rows,status";

namespace {

constexpr std::array<std::pair<std::string_view, Algorithm>, 11> kAlgorithms{{
    {"tree-basic", Algorithm::kTreeBasic},
    {"tree", Algorithm::kTree},
    {"self-tree", Algorithm::kSelfTree},
    {"am", Algorithm::kAm},
    {"shuffle", Algorithm::kShuffle},
    {"ib", Algorithm::kIb},
    {"ib-left", Algorithm::kIbLeft},
    {"ib-right", Algorithm::kIbRight},
    {"ib-full", Algorithm::kIbFull},
    {"der", Algorithm::kDer},
    {"ddr", Algorithm::kDdr},
}};

// thrown for problems with the input or output files
struct IoFailure : Error {
    using Error::Error;
};

template <class F>
auto io(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ParseError& e) {
        throw IoFailure(std::string("parse error: ") + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw IoFailure(e.what());
    }
}

std::optional<std::uint64_t> seed_from_env() {
    const char* text = std::getenv("SKEWJOIN_SEED");
    if (text == nullptr || *text == '\0') return std::nullopt;
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(text, &used);
        if (text[used] != '\0') throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw CLI::ValidationError("SKEWJOIN_SEED", std::string("not an unsigned integer: ") + text);
    }
}

JoinMode mode_or_throw(const std::string& text) {
    auto mode = parse_join_mode(text);
    if (!mode) throw CLI::ValidationError("--mode", "unknown mode " + text);
    return *mode;
}

Algorithm algorithm_or_throw(const std::string& text) {
    auto algorithm = parse_algorithm(text);
    if (!algorithm) throw CLI::ValidationError("--algo", "unknown algorithm " + text);
    return *algorithm;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

struct GenFlags {
    DatasetSpec spec;
    std::optional<std::uint64_t> seed;
    std::size_t partitions = 1;
    std::string out;
};

struct JoinFlags {
    std::string r_path;
    std::string s_path;
    std::string algo = "am";
    std::string mode = "inner";
    ClusterConfig cluster;
    std::optional<std::uint64_t> seed;
    std::size_t k_max = 1000;
    std::optional<double> min_freq;
    std::string out;
    std::string metrics;
    bool verify = false;
};

struct BenchFlags {
    std::string algos = "am,shuffle";
    std::string modes = "inner";
    std::string alphas = "0,0.25,0.5,0.75,1";
    std::string executors = "16";
    double lambda = 1.0;
    std::uint64_t memory = std::uint64_t{1} << 30;
    std::optional<std::uint64_t> seed;
    std::size_t k_max = 1000;
    std::optional<double> min_freq;
    std::uint64_t n_uniform = 10000;
    std::uint64_t n_zipf = 1000;
    std::uint64_t zipf_domain = 1000;
    std::uint64_t record_bytes = 16;
    std::string out;
};

void add_spec_flags(CLI::App* cmd, DatasetSpec& spec) {
    cmd->add_option("--alpha", spec.alpha, "Zipf skew exponent")->check(CLI::NonNegativeNumber);
    cmd->add_option("--record-bytes", spec.record_bytes, "payload bytes per record");
    cmd->add_option("--n-uniform", spec.n_uniform, "records with uniform keys");
    cmd->add_option("--n-zipf", spec.n_zipf, "records with Zipf keys");
    cmd->add_option("--zipf-domain", spec.zipf_domain, "distinct Zipf keys")->check(CLI::PositiveNumber);
    cmd->add_option("--uniform-key-space", spec.uniform_key_space, "uniform keys are drawn from [1, space]")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--key-multiplier", spec.key_multiplier, "every key is multiplied by this")
        ->check(CLI::PositiveNumber);
}

int cmd_gen(GenFlags& flags, std::ostream& out) {
    const auto env_seed = seed_from_env();
    flags.spec.seed = flags.seed.value_or(env_seed.value_or(0));
    flags.spec.validate();
    const Relation relation = generate(flags.spec, flags.partitions);
    io([&] { write_relation_tsv(relation, flags.out); });
    out << "wrote " << relation.cardinality() << " records (" << relation.total_bytes() << " bytes) to "
        << flags.out << "\n";
    return kOk;
}

int cmd_join(JoinFlags& flags, std::ostream& out, std::ostream& err) {
    const Algorithm algorithm = algorithm_or_throw(flags.algo);
    const JoinMode mode = mode_or_throw(flags.mode);
    if (!supports(algorithm, mode)) {
        throw CLI::ValidationError("--algo", "algorithm " + flags.algo + " does not implement mode " + flags.mode);
    }
    const bool self = mode == JoinMode::kSelfSameAttribute;
    if (!self && flags.s_path.empty()) throw CLI::RequiredError("--s");
    if (self && !flags.s_path.empty() && flags.s_path != flags.r_path) {
        throw CLI::ValidationError("--s", "a self join reads a single relation; drop --s or repeat --r");
    }

    const auto env_seed = seed_from_env();
    flags.cluster.seed = flags.seed.value_or(env_seed.value_or(0));
    flags.cluster.output = OutputMode::kMaterialize;
    flags.cluster.validate();

    const std::size_t n = flags.cluster.executors;
    const Relation r = io([&] { return read_relation_tsv(flags.r_path, n); });
    std::unique_ptr<Relation> s_owned;
    if (!self) s_owned = std::make_unique<Relation>(io([&] { return read_relation_tsv(flags.s_path, n); }));
    const Relation& s = self ? r : *s_owned;

    Cluster cluster(flags.cluster);
    const JoinResult result = run_algorithm(cluster, algorithm, mode, r, s, {flags.k_max, flags.min_freq});
    std::vector<JoinRow> rows = result.collect();

    if (!flags.out.empty()) io([&] { write_join_rows(rows, flags.out); });
    if (!flags.metrics.empty()) {
        MetricsStamp stamp;
        stamp.seed = flags.cluster.seed;
        stamp.algorithm = std::string(to_string(algorithm));
        stamp.mode = std::string(to_string(mode));
        stamp.executors = n;
        stamp.lambda = flags.cluster.lambda;
        stamp.total_rows = rows.size();
        io([&] { write_metrics(cluster.metrics(), flags.metrics, stamp); });
    }
    out << "rows " << rows.size() << "\n";

    if (flags.verify) {
        std::vector<JoinRow> expected = self ? oracle_self_join(r) : oracle_join(r, s, mode);
        if (!multiset_equal(std::move(rows), std::move(expected), self)) {
            err << "verify: result differs from the nested-loop oracle\n";
            return kVerifyMismatch;
        }
        out << "verify: ok\n";
    }
    return kOk;
}

std::string status_of(const std::exception_ptr& error) {
    try {
        std::rethrow_exception(error);
    } catch (const BroadcastCapacityError&) {
        return "capacity-error";
    } catch (const ModeError&) {
        return "mode-error";
    } catch (const ConfigError&) {
        return "config-error";
    } catch (const std::exception&) {
        return "error";
    }
}

int cmd_bench(BenchFlags& flags, std::ostream& out) {
    std::vector<std::pair<Algorithm, std::string>> algos;
    for (const auto& a : split_list(flags.algos)) algos.emplace_back(algorithm_or_throw(a), a);
    std::vector<JoinMode> modes;
    for (const auto& m : split_list(flags.modes)) modes.push_back(mode_or_throw(m));
    std::vector<double> alphas;
    std::vector<std::size_t> executors;
    try {
        for (const auto& a : split_list(flags.alphas)) alphas.push_back(std::stod(a));
        for (const auto& e : split_list(flags.executors)) executors.push_back(std::stoul(e));
    } catch (const std::exception&) {
        throw CLI::ValidationError("--alphas/--executors", "expected comma-separated numbers");
    }
    if (algos.empty() || modes.empty() || alphas.empty() || executors.empty()) {
        throw CLI::ValidationError("bench", "every sweep list needs at least one value");
    }
    const std::uint64_t seed = flags.seed.value_or(seed_from_env().value_or(0));

    std::ofstream file;
    std::ostream* csv = &out;
    if (!flags.out.empty()) {
        file.open(flags.out);
        if (!file) throw IoFailure("cannot open " + flags.out + " for writing");
        csv = &file;
    }
    *csv << kBenchHeader << "\n";

    for (const double alpha : alphas) {
        for (const std::size_t n : executors) {
            DatasetSpec spec;
            spec.alpha = alpha;
            spec.record_bytes = flags.record_bytes;
            spec.n_uniform = flags.n_uniform;
            spec.n_zipf = flags.n_zipf;
            spec.zipf_domain = flags.zipf_domain;
            spec.seed = seed;
            std::optional<Relation> r;
            std::optional<Relation> s;
            std::exception_ptr gen_error;
            try {
                spec.validate();
                r.emplace(generate(spec, n));
                spec.seed = hash_combine(seed, 1);
                s.emplace(generate(spec, n));
            } catch (const std::exception&) {
                gen_error = std::current_exception();
            }
            for (const auto& [algorithm, name] : algos) {
                for (const JoinMode mode : modes) {
                    ClusterConfig config;
                    config.executors = n;
                    config.lambda = flags.lambda;
                    config.memory_per_executor = flags.memory;
                    config.seed = seed;
                    config.output = OutputMode::kCount;
                    std::string status = "ok";
                    std::uint64_t rows = 0;
                    RunMetrics metrics;
                    if (gen_error) {
                        status = status_of(gen_error);
                    } else if (!supports(algorithm, mode)) {
                        status = "unsupported";
                    } else {
                        try {
                            Cluster cluster(config);
                            const Relation& right = mode == JoinMode::kSelfSameAttribute ? *r : *s;
                            rows = run_algorithm(cluster, algorithm, mode, *r, right, {flags.k_max, flags.min_freq})
                                       .row_count();
                            metrics = cluster.metrics();
                        } catch (const std::exception&) {
                            status = status_of(std::current_exception());
                        }
                    }
                    *csv << name << ',' << to_string(mode) << ',' << format_double(alpha) << ',' << n << ','
                         << format_double(flags.lambda) << ',' << metrics.stages << ',' << metrics.shuffled_bytes
                         << ',' << metrics.broadcast_bytes << ',' << metrics.max_executor_records() << ','
                         << rows << ',' << status << "\n";
                }
            }
        }
    }
    csv->flush();
    if (!*csv) throw IoFailure("write failed");
    return kOk;
}

}  // namespace

std::optional<Algorithm> parse_algorithm(std::string_view name) {
    for (const auto& [text, algorithm] : kAlgorithms) {
        if (text == name) return algorithm;
    }
    return std::nullopt;
}

std::string_view to_string(Algorithm algorithm) {
    for (const auto& [text, a] : kAlgorithms) {
        if (a == algorithm) return text;
    }
    return "?";
}

bool supports(Algorithm algorithm, JoinMode mode) {
    switch (algorithm) {
        case Algorithm::kTreeBasic:
        case Algorithm::kTree:
        case Algorithm::kIb:
            return mode == JoinMode::kInner;
        case Algorithm::kSelfTree:
            return mode == JoinMode::kSelfSameAttribute;
        case Algorithm::kAm:
            return true;
        case Algorithm::kShuffle:
            return mode != JoinMode::kSelfSameAttribute;
        case Algorithm::kIbLeft:
            return mode == JoinMode::kLeftOuter;
        case Algorithm::kIbRight:
            return mode == JoinMode::kRightOuter;
        case Algorithm::kIbFull:
        case Algorithm::kDer:
        case Algorithm::kDdr:
            return mode == JoinMode::kFullOuter;
    }
    return false;
}

JoinResult run_algorithm(Cluster& cluster, Algorithm algorithm, JoinMode mode, const Relation& r, const Relation& s,
                         const HotKeyParams& params) {
    if (!supports(algorithm, mode)) {
        throw ModeError(std::string(to_string(algorithm)) + " does not implement mode " + std::string(to_string(mode)));
    }
    if (mode == JoinMode::kSelfSameAttribute && &r != &s) throw ModeError("a self join takes one relation");
    switch (algorithm) {
        case Algorithm::kTreeBasic:
            return tree_join_basic(cluster, r, s);
        case Algorithm::kTree:
            return tree_join(cluster, r, s, TreeJoinOptions{params.k_max, params.k_max, params.min_freq});
        case Algorithm::kSelfTree:
            return self_tree_join(cluster, r, params.k_max, params.min_freq);
        case Algorithm::kAm: {
            const AmJoinOptions options{params.k_max, params.k_max, params.min_freq};
            if (mode == JoinMode::kSelfSameAttribute) return am_self_join(cluster, r, options);
            return am_join(cluster, r, s, mode, options);
        }
        case Algorithm::kShuffle:
            return shuffle_join(cluster, r, s, mode);
        case Algorithm::kIb:
        case Algorithm::kIbLeft:
        case Algorithm::kIbRight:
        case Algorithm::kIbFull:
            return index_broadcast_join(cluster, r, s, mode);
        case Algorithm::kDer:
            return der_full_outer_join(cluster, r, s);
        case Algorithm::kDdr:
            return ddr_full_outer_join(cluster, r, s);
    }
    throw ModeError("unknown algorithm");
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Skew-resilient distributed join simulator", "skewjoin"};
    app.require_subcommand(1);

    GenFlags gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a relation (uniform plus Zipf keys) as TSV");
    add_spec_flags(gen_cmd, gen.spec);
    gen_cmd->add_option("--seed", gen.seed, "RNG seed (default: $SKEWJOIN_SEED or 0)");
    gen_cmd->add_option("--executors", gen.partitions, "partitions used while generating")
        ->check(CLI::PositiveNumber);
    gen_cmd->add_option("--out", gen.out, "output TSV path")->required();

    JoinFlags join;
    auto* join_cmd = app.add_subcommand("join", "run one join on the simulated cluster");
    join_cmd->add_option("--r", join.r_path, "left relation (TSV)")->required();
    join_cmd->add_option("--s", join.s_path, "right relation (TSV); omitted for --mode self");
    join_cmd->add_option("--algo", join.algo,
                         "tree-basic, tree, self-tree, am, shuffle, ib, ib-left, ib-right, ib-full, der, ddr");
    join_cmd->add_option("--mode", join.mode, "inner, left, right, full or self");
    join_cmd->add_option("--lambda", join.cluster.lambda, "network-to-local cost ratio")
        ->check(CLI::NonNegativeNumber);
    join_cmd->add_option("--executors", join.cluster.executors, "number of executors")->check(CLI::PositiveNumber);
    join_cmd->add_option("--memory", join.cluster.memory_per_executor, "bytes of memory per executor")
        ->check(CLI::PositiveNumber);
    join_cmd->add_option("--threads", join.cluster.threads, "worker threads")->check(CLI::PositiveNumber);
    join_cmd->add_option("--seed", join.seed, "RNG seed (default: $SKEWJOIN_SEED or 0)");
    join_cmd->add_option("--kmax", join.k_max, "hot-key summary capacity per relation");
    join_cmd->add_option("--min-freq", join.min_freq, "minimum frequency of a hot key (default: (1+lambda)^(3/2))");
    join_cmd->add_option("--out", join.out, "output rows (TSV)");
    join_cmd->add_option("--metrics", join.metrics, "metrics JSON path");
    join_cmd->add_flag("--verify", join.verify, "compare against the nested-loop oracle");

    BenchFlags bench;
    auto* bench_cmd = app.add_subcommand("bench", "sweep algorithms x alpha x executors, CSV to stdout or --out");
    bench_cmd->add_option("--algos", bench.algos, "comma-separated algorithms");
    bench_cmd->add_option("--modes", bench.modes, "comma-separated modes");
    bench_cmd->add_option("--alphas", bench.alphas, "comma-separated Zipf exponents");
    bench_cmd->add_option("--executors", bench.executors, "comma-separated executor counts");
    bench_cmd->add_option("--lambda", bench.lambda, "network-to-local cost ratio")->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--memory", bench.memory, "bytes of memory per executor")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--seed", bench.seed, "RNG seed (default: $SKEWJOIN_SEED or 0)");
    bench_cmd->add_option("--kmax", bench.k_max, "hot-key summary capacity per relation");
    bench_cmd->add_option("--min-freq", bench.min_freq, "minimum frequency of a hot key");
    bench_cmd->add_option("--n-uniform", bench.n_uniform, "uniform-key records per relation");
    bench_cmd->add_option("--n-zipf", bench.n_zipf, "Zipf-key records per relation");
    bench_cmd->add_option("--zipf-domain", bench.zipf_domain, "distinct Zipf keys")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--record-bytes", bench.record_bytes, "payload bytes per record");
    bench_cmd->add_option("--out", bench.out, "CSV path");

    try {
        app.parse(argc, argv);
        if (*gen_cmd) return cmd_gen(gen, out);
        if (*join_cmd) return cmd_join(join, out, err);
        return cmd_bench(bench, out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    } catch (const BroadcastCapacityError& e) {
        err << "error: capacity: " << e.what() << "\n";
        return kCapacity;
    } catch (const IoFailure& e) {
        err << "error: io: " << e.what() << "\n";
        return kInputOutput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace skewjoin::cli
