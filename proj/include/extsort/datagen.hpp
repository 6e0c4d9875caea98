#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "extsort/record.hpp"
#include "extsort/streams.hpp"

namespace extsort {

// Per-column value distribution for synthetic tables. Sampling uses explicit
// arithmetic on a seeded mt19937_64, so the same spec + seed is byte-identical
// everywhere.
struct ColumnDistribution {
    enum class Kind { UniformInt, DateRange, Zipf, FixedString, FloatRange };

    Kind kind = Kind::UniformInt;
    std::int64_t lo = 0, hi = 0;        // UniformInt / DateRange (days)
    double zipf_s = 1.0;                // Zipf exponent
    std::uint64_t zipf_n = 1;           // Zipf universe 1..n
    std::string alphabet;               // FixedString
    std::size_t length = 0;             // FixedString
    double flo = 0.0, fhi = 1.0;        // FloatRange

    static ColumnDistribution uniform_int(std::int64_t lo, std::int64_t hi);
    static ColumnDistribution date_range(std::int32_t lo_days, std::int32_t hi_days);
    static ColumnDistribution zipf(double s, std::uint64_t n);
    static ColumnDistribution fixed_string(std::string alphabet, std::size_t length);
    static ColumnDistribution float_range(double lo, double hi);
};

struct TableSpec {
    Schema schema;
    std::vector<ColumnDistribution> columns; // one per schema column
    std::uint64_t rows = 0;
    std::uint64_t seed = 0;
};

// Benchmark presets. lineorder_like mirrors an 11-column order-fact
// projection sorted by its date column; tripdata_like mirrors a 14-column
// taxi-trip table sorted by the integer trip duration.
TableSpec lineorder_like(std::uint64_t rows, std::uint64_t seed);
TableSpec tripdata_like(std::uint64_t rows, std::uint64_t seed);
std::optional<TableSpec> preset_by_name(std::string_view name, std::uint64_t rows,
                                        std::uint64_t seed);

// Exact mean serialized record size for specs whose strings are fixed-length
// (both presets qualify).
double expected_record_bytes(const TableSpec& spec);

class GeneratorStream final : public RecordBlockStream {
public:
    explicit GeneratorStream(TableSpec spec, std::size_t block_size = 4096);
    std::optional<RecordBlock> next() override;

private:
    Record make_record();

    TableSpec spec_;
    std::size_t block_size_;
    std::uint64_t produced_ = 0;
    std::mt19937_64 rng_;
    std::vector<std::vector<double>> zipf_cdf_; // per column, lazily built
};

// CSV ingestion: comma-separated, no quoting (v1 limitation), one record per
// line. date32 columns accept either an integer day count or YYYY-MM-DD.
struct CsvOptions {
    bool strict = true; // strict: malformed row -> error with line number
};

class CsvRecordStream final : public RecordBlockStream {
public:
    CsvRecordStream(const std::filesystem::path& path, const Schema& schema,
                    CsvOptions options = {}, std::size_t block_size = 4096);
    ~CsvRecordStream() override;

    std::optional<RecordBlock> next() override;

    std::uint64_t rows_skipped() const { return skipped_; }

private:
    bool parse_line(const std::string& line, Record& out, std::string& error);

    std::filesystem::path path_;
    const Schema* schema_;
    CsvOptions options_;
    std::size_t block_size_;
    std::FILE* file_ = nullptr;
    std::uint64_t line_no_ = 0;
    std::uint64_t skipped_ = 0;
};

// Days since 1970-01-01 for an ISO date, or nullopt if not parseable.
std::optional<std::int32_t> parse_iso_date_days(std::string_view s);

} // namespace extsort
