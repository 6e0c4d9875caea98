// extsort: generate, sort, benchmark and inspect record tables with the
// external merge sort engine. Exit codes: 0 ok, 1 usage, 2 I/O, 3 corruption.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "extsort/datagen.hpp"
#include "extsort/errors.hpp"
#include "extsort/sort_operator.hpp"
#include "extsort/table_file.hpp"
#include "extsort/tape.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace extsort;

namespace {

fs::path resolve_spill_dir(const std::string& flag_value) {
    if (!flag_value.empty()) {
        return flag_value;
    }
    if (const char* env = std::getenv("EXTSORT_SPILL_DIR"); env && *env) {
        return env;
    }
    return fs::temp_directory_path();
}

std::vector<SortKey> parse_key_spec(const Schema& schema, const std::string& spec) {
    std::vector<SortKey> keys;
    std::size_t start = 0;
    while (start <= spec.size()) {
        std::size_t end = spec.find(',', start);
        if (end == std::string::npos) end = spec.size();
        std::string part = spec.substr(start, end - start);
        if (!part.empty()) {
            bool desc = false;
            if (const std::size_t colon = part.rfind(':'); colon != std::string::npos) {
                const std::string dir = part.substr(colon + 1);
                if (dir == "desc") {
                    desc = true;
                } else if (dir != "asc") {
                    throw UsageError("bad key direction '" + dir + "' (use asc or desc)");
                }
                part.resize(colon);
            }
            keys.push_back(SortKey{schema.column_index(part), desc});
        }
        start = end + 1;
    }
    if (keys.empty()) {
        throw UsageError("empty sort key spec");
    }
    return keys;
}

Schema parse_csv_schema(const std::string& spec, const std::string& key_spec) {
    std::vector<Column> cols;
    std::size_t start = 0;
    while (start <= spec.size()) {
        std::size_t end = spec.find(',', start);
        if (end == std::string::npos) end = spec.size();
        const std::string part = spec.substr(start, end - start);
        if (!part.empty()) {
            const std::size_t colon = part.find(':');
            if (colon == std::string::npos) {
                throw UsageError("csv schema entries are name:type, got '" + part + "'");
            }
            const std::string name = part.substr(0, colon);
            const std::string type = part.substr(colon + 1);
            const std::optional<ColumnType> t = parse_column_type(type);
            if (!t) {
                throw UsageError("unknown column type '" + type + "'");
            }
            cols.push_back(Column{name, *t});
        }
        start = end + 1;
    }
    Schema tmp(cols, {{0, false}});
    std::vector<SortKey> keys = parse_key_spec(tmp, key_spec);
    return Schema(std::move(cols), std::move(keys));
}

// Re-stamps blocks with a schema whose sort key differs from the file's.
class RekeyStream final : public RecordBlockStream {
public:
    RekeyStream(std::unique_ptr<RecordBlockStream> inner, const Schema* schema)
        : inner_(std::move(inner)), schema_(schema) {}
    std::optional<RecordBlock> next() override {
        std::optional<RecordBlock> b = inner_->next();
        if (b) {
            b->schema = schema_;
        }
        return b;
    }

private:
    std::unique_ptr<RecordBlockStream> inner_;
    const Schema* schema_;
};

struct InputSpec {
    fs::path path;
    bool is_csv = false;
    std::string csv_schema;
    bool csv_lenient = false;
    std::string key_override; // empty = native file's embedded key
};

struct OpenedInput {
    std::unique_ptr<Schema> schema; // effective schema (keys applied)
    std::unique_ptr<RecordBlockStream> stream;
};

OpenedInput open_input(const InputSpec& in) {
    OpenedInput out;
    if (in.is_csv) {
        if (in.csv_schema.empty()) {
            throw UsageError("CSV input needs --csv-schema");
        }
        if (in.key_override.empty()) {
            throw UsageError("CSV input needs --key");
        }
        out.schema =
            std::make_unique<Schema>(parse_csv_schema(in.csv_schema, in.key_override));
        CsvOptions opt;
        opt.strict = !in.csv_lenient;
        auto csv = std::make_unique<CsvRecordStream>(in.path, *out.schema, opt);
        out.stream = std::make_unique<RekeyStream>(std::move(csv), out.schema.get());
    } else {
        auto file = std::make_unique<TableFileStream>(in.path);
        if (in.key_override.empty()) {
            out.schema = std::make_unique<Schema>(file->schema());
            out.stream = std::make_unique<RekeyStream>(std::move(file), out.schema.get());
        } else {
            const Schema& base = file->schema();
            std::vector<SortKey> keys = parse_key_spec(base, in.key_override);
            out.schema = std::make_unique<Schema>(
                std::vector<Column>(base.columns()), std::move(keys));
            out.stream = std::make_unique<RekeyStream>(std::move(file), out.schema.get());
        }
    }
    return out;
}

// --target-runs N: budget = ceil(total accounted bytes / N) + 1% slack.
std::size_t budget_for_target_runs(const InputSpec& in, std::uint64_t target_runs) {
    std::uint64_t total_accounted = 0;
    if (in.is_csv) {
        OpenedInput opened = open_input(in);
        BlockRecordStream records(*opened.stream);
        while (std::optional<Record> r = records.next()) {
            total_accounted += accounted_record_size(*r);
        }
    } else {
        const TableFileInfo info = read_table_info(in.path);
        total_accounted =
            info.data_bytes + info.records * (kRecordBookkeepingBytes + kRunRefBytes);
    }
    if (total_accounted == 0) {
        return 1 << 20;
    }
    const std::uint64_t base = (total_accounted + target_runs - 1) / target_runs;
    return static_cast<std::size_t>(base + base / 100 + 1);
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
    std::string preset;
    std::uint64_t rows = 0;
    std::uint64_t seed = 42;
    std::string output;
};

int cmd_gen(const GenArgs& a) {
    std::optional<TableSpec> spec = preset_by_name(a.preset, a.rows, a.seed);
    if (!spec) {
        throw UsageError("unknown preset '" + a.preset +
                         "' (available: lineorder-like, tripdata-like)");
    }
    GeneratorStream gen(*spec);
    TableFileWriter writer(a.output, spec->schema);
    while (std::optional<RecordBlock> b = gen.next()) {
        for (const Record& r : b->records) {
            writer.append(r);
        }
    }
    writer.finish();
    std::cout << "wrote " << writer.records_written() << " records to " << a.output
              << " (seed " << a.seed << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sort

struct SortArgs {
    InputSpec input;
    std::string output;
    std::uint64_t budget_bytes = 0;
    std::uint64_t target_runs = 0;
    std::size_t tapes = kDefaultTapeCount;
    std::string selector = "loser-tree";
    std::string mode = "quicksort";
    std::size_t block_size = kDefaultBlockSizeRecords;
    std::size_t read_buffer = kDefaultIoBufferBytes;
    std::size_t write_buffer = kDefaultIoBufferBytes;
    std::string spill_dir;
    std::string metrics_path;
};

SortConfig make_sort_config(const SortArgs& a) {
    SortConfig cfg;
    if (a.budget_bytes == 0 && a.target_runs == 0) {
        throw UsageError("one of --budget-bytes or --target-runs is required");
    }
    if (a.budget_bytes != 0 && a.target_runs != 0) {
        throw UsageError("--budget-bytes and --target-runs are mutually exclusive");
    }
    cfg.memory_budget_bytes = a.budget_bytes != 0
                                  ? a.budget_bytes
                                  : budget_for_target_runs(a.input, a.target_runs);
    if (a.target_runs != 0) {
        cfg.expected_runs_hint = a.target_runs;
    }
    cfg.tape_count = a.tapes;
    const std::optional<SelectorKind> sel = parse_selector_kind(a.selector);
    if (!sel) {
        throw UsageError("unknown selector '" + a.selector + "'");
    }
    cfg.selector = *sel;
    const std::optional<RunGenMode> mode = parse_run_gen_mode(a.mode);
    if (!mode) {
        throw UsageError("unknown run generation mode '" + a.mode + "'");
    }
    cfg.run_gen_mode = *mode;
    cfg.block_size_records = a.block_size;
    cfg.io.read_buffer_bytes = a.read_buffer;
    cfg.io.write_buffer_bytes = a.write_buffer;
    cfg.io.spill_directory = resolve_spill_dir(a.spill_dir);
    return cfg;
}

int cmd_sort(const SortArgs& a) {
    const SortConfig cfg = make_sort_config(a);
    OpenedInput in = open_input(a.input);
    SortOperator op(cfg, std::move(in.stream));

    std::unique_ptr<TableFileWriter> writer;
    while (std::optional<RecordBlock> b = op.next()) {
        if (!writer) {
            writer = std::make_unique<TableFileWriter>(a.output, *b->schema);
        }
        for (const Record& r : b->records) {
            writer->append(r);
        }
    }
    if (!writer) {
        // Empty input still yields a valid (empty) output table.
        writer = std::make_unique<TableFileWriter>(a.output, *in.schema);
    }
    writer->finish();

    const MetricsReport m = op.metrics();
    if (!a.metrics_path.empty()) {
        if (a.metrics_path == "-") {
            std::cout << m.to_json() << "\n";
        } else {
            std::FILE* f = std::fopen(a.metrics_path.c_str(), "wb");
            if (!f) {
                throw IoError("cannot write metrics to " + a.metrics_path);
            }
            const std::string doc = m.to_json();
            std::fwrite(doc.data(), 1, doc.size(), f);
            std::fwrite("\n", 1, 1, f);
            std::fclose(f);
        }
    }
    std::cout << "sorted " << writer->records_written() << " records -> " << a.output << " ("
              << m.run_generation.runs << " runs, " << m.merge.passes << " merge passes, "
              << m.merge.comparisons << " merge comparisons)\n";
    op.close();
    return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
    std::string preset;
    std::uint64_t rows = 0;
    std::uint64_t seed = 42;
    std::string input; // alternative to preset
    std::string key_override;
    std::uint64_t target_runs = 84;
    std::uint64_t budget_bytes = 0;
    std::size_t tapes = 0; // 0 = auto
    std::string selectors = "naive,heap,loser-tree";
    int reps = 5;
    std::string mode = "quicksort";
    std::string spill_dir;
    std::string out_path;
};

double student_t95(int df) {
    static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                   2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                   2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                   2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
    if (df < 1) return 0.0;
    if (df <= 30) return table[df - 1];
    return 1.960;
}

struct BenchRow {
    std::string selector;
    std::vector<double> wall_ms;
    MetricsReport metrics; // from the first repetition
};

int cmd_bench(const BenchArgs& a) {
    if (a.reps < 1) {
        throw UsageError("--reps must be at least 1");
    }
    const fs::path spill = resolve_spill_dir(a.spill_dir);

    // Materialize the input once; every repetition streams the same file.
    fs::path data_path;
    bool temp_data = false;
    if (!a.input.empty()) {
        data_path = a.input;
    } else {
        if (a.preset.empty()) {
            throw UsageError("bench needs either -i FILE or --preset");
        }
        std::uint64_t rows = a.rows;
        if (rows == 0) {
            // Desk-scale default: about 1 GiB of preset data.
            std::optional<TableSpec> probe = preset_by_name(a.preset, 1, a.seed);
            if (!probe) {
                throw UsageError("unknown preset '" + a.preset + "'");
            }
            rows = static_cast<std::uint64_t>((1ull << 30) /
                                              expected_record_bytes(*probe));
        }
        std::optional<TableSpec> spec = preset_by_name(a.preset, rows, a.seed);
        if (!spec) {
            throw UsageError("unknown preset '" + a.preset + "'");
        }
        data_path = spill / ("extsort-bench-" + std::to_string(::getpid()) + ".xsrt");
        temp_data = true;
        GeneratorStream gen(*spec);
        TableFileWriter writer(data_path, spec->schema);
        while (std::optional<RecordBlock> b = gen.next()) {
            for (const Record& r : b->records) {
                writer.append(r);
            }
        }
        writer.finish();
    }

    std::vector<SelectorKind> kinds;
    {
        std::size_t start = 0;
        while (start <= a.selectors.size()) {
            std::size_t end = a.selectors.find(',', start);
            if (end == std::string::npos) end = a.selectors.size();
            const std::string name = a.selectors.substr(start, end - start);
            if (!name.empty()) {
                const std::optional<SelectorKind> k = parse_selector_kind(name);
                if (!k) {
                    throw UsageError("unknown selector '" + name + "'");
                }
                kinds.push_back(*k);
            }
            start = end + 1;
        }
        if (kinds.empty()) {
            throw UsageError("selector list is empty");
        }
    }

    InputSpec in;
    in.path = data_path;
    in.key_override = a.key_override;

    SortArgs sort_args;
    sort_args.input = in;
    sort_args.budget_bytes = a.budget_bytes;
    sort_args.target_runs = a.budget_bytes != 0 ? 0 : a.target_runs;
    sort_args.tapes = a.tapes;
    sort_args.mode = a.mode;
    sort_args.spill_dir = spill.string();
    if (a.tapes == 0) {
        // Auto: comfortably more tapes than the expected run count, so the
        // merge is a single multiway pass.
        sort_args.tapes = sort_args.target_runs != 0
                              ? static_cast<std::size_t>(sort_args.target_runs +
                                                         sort_args.target_runs / 4 + 2)
                              : kDefaultTapeCount;
    }

    std::cout << "bench: input " << data_path.string() << ", reps " << a.reps << ", tapes "
              << sort_args.tapes << "\n";
    std::cout << "note: desk-scale defaults (about 1 GiB of preset data, 5 repetitions); "
                 "repetitions run sequentially on one thread\n";

    std::vector<BenchRow> rows;
    for (const SelectorKind kind : kinds) {
        BenchRow row;
        row.selector = selector_kind_name(kind);
        for (int rep = 0; rep < a.reps; ++rep) {
            sort_args.selector = row.selector;
            const SortConfig cfg = make_sort_config(sort_args);
            OpenedInput opened = open_input(in);
            const auto t0 = std::chrono::steady_clock::now();
            SortOperator op(cfg, std::move(opened.stream));
            std::uint64_t records = 0;
            while (std::optional<RecordBlock> b = op.next()) {
                records += b->records.size(); // drained and discarded
            }
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            row.wall_ms.push_back(ms);
            if (rep == 0) {
                row.metrics = op.metrics();
            }
            op.close();
        }
        rows.push_back(std::move(row));
    }
    if (temp_data) {
        std::error_code ec;
        fs::remove(data_path, ec);
    }

    json doc;
    doc["input"] = data_path.string();
    doc["repetitions"] = a.reps;
    doc["tape_count"] = sort_args.tapes;
    doc["results"] = json::array();

    std::printf("%-12s %10s %12s %12s %12s %14s %6s\n", "selector", "runs", "mean_ms",
                "stddev_ms", "ci95_ms", "merge_cmps", "passes");
    for (const BenchRow& row : rows) {
        const int n = static_cast<int>(row.wall_ms.size());
        double mean = 0;
        for (double v : row.wall_ms) mean += v;
        mean /= n;
        double var = 0;
        for (double v : row.wall_ms) var += (v - mean) * (v - mean);
        const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        const std::optional<double> ci =
            n > 1 ? std::optional<double>(student_t95(n - 1) * sd / std::sqrt(n))
                  : std::nullopt;

        json r;
        r["selector"] = row.selector;
        r["reps"] = n;
        r["mean_ms"] = mean;
        r["stddev_ms"] = sd;
        if (ci) {
            r["ci95_half_width_ms"] = *ci;
        } else {
            r["ci95_half_width_ms"] = nullptr;
        }
        r["runs"] = row.metrics.run_generation.runs;
        r["merge_passes"] = row.metrics.merge.passes;
        r["merge_comparisons"] = row.metrics.merge.comparisons;
        r["run_generation_comparisons"] = row.metrics.run_generation.comparisons;
        r["wall_ms"] = row.wall_ms;
        doc["results"].push_back(r);

        std::printf("%-12s %10llu %12.1f %12.1f %12s %14llu %6llu\n", row.selector.c_str(),
                    static_cast<unsigned long long>(row.metrics.run_generation.runs), mean,
                    sd, ci ? std::to_string(*ci).c_str() : "n/a",
                    static_cast<unsigned long long>(row.metrics.merge.comparisons),
                    static_cast<unsigned long long>(row.metrics.merge.passes));
    }

    if (!a.out_path.empty()) {
        std::FILE* f = std::fopen(a.out_path.c_str(), "wb");
        if (!f) {
            throw IoError("cannot write report to " + a.out_path);
        }
        const std::string s = doc.dump(2);
        std::fwrite(s.data(), 1, s.size(), f);
        std::fwrite("\n", 1, 1, f);
        std::fclose(f);
        std::cout << "report written to " << a.out_path << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// inspect

struct RunWalkInfo {
    std::uint64_t records = 0;
    std::uint64_t bytes = 0;
};

std::vector<RunWalkInfo> walk_runs(const fs::path& path, std::uint64_t start_offset) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) {
        throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    }
    std::vector<RunWalkInfo> runs;
    std::uint64_t offset = start_offset;
    if (fseeko(f, static_cast<off_t>(offset), SEEK_SET) != 0) {
        std::fclose(f);
        throw IoError("seek failed on " + path.string());
    }
    RunWalkInfo cur;
    bool in_run = false;
    try {
        while (true) {
            char hdr[4];
            const std::size_t got = std::fread(hdr, 1, 4, f);
            if (got == 0 && !in_run) {
                break; // clean EOF at a run boundary
            }
            if (got != 4) {
                throw CorruptionError(path.string() + " at offset " + std::to_string(offset) +
                                      ": truncated record header");
            }
            const std::uint32_t len = get_u32_le(hdr);
            if (len == kRunTrailerSentinel) {
                char cnt[8];
                if (std::fread(cnt, 1, 8, f) != 8) {
                    throw CorruptionError(path.string() + ": truncated run trailer");
                }
                if (get_u64_le(cnt) != cur.records) {
                    throw CorruptionError(path.string() + " at offset " +
                                          std::to_string(offset) +
                                          ": run trailer count mismatch");
                }
                offset += 12;
                cur.bytes += 12;
                runs.push_back(cur);
                cur = RunWalkInfo{};
                in_run = false;
                continue;
            }
            in_run = true;
            if (fseeko(f, static_cast<off_t>(len), SEEK_CUR) != 0) {
                throw CorruptionError(path.string() + " at offset " + std::to_string(offset) +
                                      ": truncated record payload");
            }
            offset += 4 + len;
            cur.bytes += 4 + len;
            ++cur.records;
        }
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
    return runs;
}

struct InspectArgs {
    std::string input;
    bool as_json = false;
};

int cmd_inspect(const InspectArgs& a) {
    const fs::path path = a.input;
    const bool native = file_has_table_magic(path);
    std::uint64_t start = 0;
    std::optional<TableFileInfo> info;
    if (native) {
        info = read_table_info(path);
        start = info->header_bytes;
    }
    const std::vector<RunWalkInfo> runs = walk_runs(path, start);

    if (a.as_json) {
        json doc;
        doc["file"] = path.string();
        doc["format"] = native ? "native-table" : "raw-runs";
        if (info) {
            json schema = json::array();
            for (const Column& c : info->schema.columns()) {
                schema.push_back({{"name", c.name}, {"type", column_type_name(c.type)}});
            }
            doc["schema"] = schema;
            json keys = json::array();
            for (const SortKey& k : info->schema.sort_keys()) {
                keys.push_back({{"column", info->schema.columns()[k.column].name},
                                {"descending", k.descending}});
            }
            doc["sort_keys"] = keys;
        }
        doc["runs"] = json::array();
        for (const RunWalkInfo& r : runs) {
            doc["runs"].push_back({{"records", r.records}, {"bytes", r.bytes}});
        }
        std::cout << doc.dump(2) << "\n";
        return 0;
    }

    std::cout << path.string() << ": " << (native ? "native table" : "raw runs") << "\n";
    if (info) {
        std::cout << "schema:";
        for (const Column& c : info->schema.columns()) {
            std::cout << " " << c.name << ":" << column_type_name(c.type);
        }
        std::cout << "\nsort key:";
        for (const SortKey& k : info->schema.sort_keys()) {
            std::cout << " " << info->schema.columns()[k.column].name
                      << (k.descending ? ":desc" : "");
        }
        std::cout << "\n";
    }
    std::uint64_t total_records = 0, total_bytes = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::cout << "run " << i << ": " << runs[i].records << " records, " << runs[i].bytes
                  << " bytes\n";
        total_records += runs[i].records;
        total_bytes += runs[i].bytes;
    }
    std::cout << "total: " << runs.size() << " runs, " << total_records << " records, "
              << total_bytes << " bytes\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"external merge sort engine"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic table");
    gen_cmd->add_option("--preset", gen.preset, "lineorder-like | tripdata-like")->required();
    gen_cmd->add_option("--rows", gen.rows, "row count")->required();
    gen_cmd->add_option("--seed", gen.seed, "RNG seed (default 42)");
    gen_cmd->add_option("-o,--output", gen.output, "output table file")->required();

    SortArgs sort;
    CLI::App* sort_cmd = app.add_subcommand("sort", "sort a table or CSV file");
    sort_cmd->add_option("-i,--input", sort.input.path, "input file")->required();
    sort_cmd->add_flag("--csv", sort.input.is_csv, "input is CSV");
    sort_cmd->add_option("--csv-schema", sort.input.csv_schema,
                         "CSV schema: name:type,... (types: int64,float64,string,date32)");
    sort_cmd->add_flag("--csv-lenient", sort.input.csv_lenient,
                       "skip malformed CSV rows instead of failing");
    sort_cmd->add_option("--key", sort.input.key_override,
                         "sort key columns: col[:desc],col2,...");
    sort_cmd->add_option("-o,--output", sort.output, "output table file")->required();
    sort_cmd->add_option("--budget-bytes", sort.budget_bytes, "sort memory budget in bytes");
    sort_cmd->add_option("--target-runs", sort.target_runs,
                         "solve the budget so run generation yields about this many runs");
    sort_cmd->add_option("--tapes", sort.tapes, "tape count (default 8)");
    sort_cmd->add_option("--selector", sort.selector, "naive | heap | loser-tree");
    sort_cmd->add_option("--mode", sort.mode, "quicksort | replacement");
    sort_cmd->add_option("--block-size", sort.block_size, "output block size in records");
    sort_cmd->add_option("--read-buffer", sort.read_buffer, "tape read buffer bytes");
    sort_cmd->add_option("--write-buffer", sort.write_buffer, "tape write buffer bytes");
    sort_cmd->add_option("--spill-dir", sort.spill_dir,
                         "spill directory (default $EXTSORT_SPILL_DIR or system temp)");
    sort_cmd->add_option("--metrics", sort.metrics_path, "metrics JSON path ('-' = stdout)");

    BenchArgs bench;
    CLI::App* bench_cmd = app.add_subcommand("bench", "selector comparison benchmark");
    bench_cmd->add_option("--preset", bench.preset, "lineorder-like | tripdata-like");
    bench_cmd->add_option("--rows", bench.rows, "rows to generate");
    bench_cmd->add_option("--seed", bench.seed, "RNG seed");
    bench_cmd->add_option("-i,--input", bench.input, "use an existing table file instead");
    bench_cmd->add_option("--key", bench.key_override, "sort key override");
    bench_cmd->add_option("--target-runs", bench.target_runs,
                          "target run count (default 84)");
    bench_cmd->add_option("--budget-bytes", bench.budget_bytes,
                          "fixed memory budget instead of --target-runs");
    bench_cmd->add_option("--tapes", bench.tapes, "tape count (default: auto, > run count)");
    bench_cmd->add_option("--selectors", bench.selectors,
                          "comma list (default naive,heap,loser-tree)");
    bench_cmd->add_option("--reps", bench.reps, "repetitions per selector (default 5)");
    bench_cmd->add_option("--mode", bench.mode, "quicksort | replacement");
    bench_cmd->add_option("--spill-dir", bench.spill_dir, "spill directory");
    bench_cmd->add_option("-o,--out", bench.out_path, "JSON report path");

    InspectArgs inspect;
    CLI::App* inspect_cmd =
        app.add_subcommand("inspect", "dump run boundaries of a table or spill file");
    inspect_cmd->add_option("-i,--input", inspect.input, "file to inspect")->required();
    inspect_cmd->add_flag("--json", inspect.as_json, "JSON output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*gen_cmd) return cmd_gen(gen);
        if (*sort_cmd) return cmd_sort(sort);
        if (*bench_cmd) return cmd_bench(bench);
        if (*inspect_cmd) return cmd_inspect(inspect);
    } catch (const CorruptionError& e) {
        std::cerr << "error (corruption): " << e.what() << "\n";
        return 3;
    } catch (const UsageError& e) {
        std::cerr << "error (usage): " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error (io): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
