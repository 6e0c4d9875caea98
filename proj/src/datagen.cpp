#include "extsort/datagen.hpp"

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>

#include "extsort/errors.hpp"

namespace extsort {

ColumnDistribution ColumnDistribution::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw UsageError("uniform-int range is empty");
    ColumnDistribution d;
    d.kind = Kind::UniformInt;
    d.lo = lo;
    d.hi = hi;
    return d;
}

ColumnDistribution ColumnDistribution::date_range(std::int32_t lo_days, std::int32_t hi_days) {
    if (hi_days < lo_days) throw UsageError("date range is empty");
    ColumnDistribution d;
    d.kind = Kind::DateRange;
    d.lo = lo_days;
    d.hi = hi_days;
    return d;
}

ColumnDistribution ColumnDistribution::zipf(double s, std::uint64_t n) {
    if (n == 0) throw UsageError("zipf universe must be non-empty");
    ColumnDistribution d;
    d.kind = Kind::Zipf;
    d.zipf_s = s;
    d.zipf_n = n;
    return d;
}

ColumnDistribution ColumnDistribution::fixed_string(std::string alphabet, std::size_t length) {
    if (alphabet.empty()) throw UsageError("fixed-string alphabet is empty");
    ColumnDistribution d;
    d.kind = Kind::FixedString;
    d.alphabet = std::move(alphabet);
    d.length = length;
    return d;
}

ColumnDistribution ColumnDistribution::float_range(double lo, double hi) {
    ColumnDistribution d;
    d.kind = Kind::FloatRange;
    d.flo = lo;
    d.fhi = hi;
    return d;
}

namespace {

std::int32_t days_from_ymd(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    const sys_days sd = year{y} / month{m} / day{d};
    return static_cast<std::int32_t>(sd.time_since_epoch().count());
}

} // namespace

std::optional<std::int32_t> parse_iso_date_days(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        return std::nullopt;
    }
    int y = 0;
    unsigned m = 0, d = 0;
    auto num = [](std::string_view t, auto& out) {
        const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
        return r.ec == std::errc() && r.ptr == t.data() + t.size();
    };
    if (!num(s.substr(0, 4), y) || !num(s.substr(5, 2), m) || !num(s.substr(8, 2), d)) {
        return std::nullopt;
    }
    using namespace std::chrono;
    if (!(year{y} / month{m} / day{d}).ok()) {
        return std::nullopt;
    }
    return days_from_ymd(y, m, d);
}

TableSpec lineorder_like(std::uint64_t rows, std::uint64_t seed) {
    const std::int32_t date_lo = days_from_ymd(1992, 1, 1);
    const std::int32_t date_hi = days_from_ymd(1998, 8, 2);
    std::vector<Column> cols = {
        {"lo_custkey", ColumnType::Int64},      {"lo_discount", ColumnType::Int64},
        {"lo_extendedprice", ColumnType::Int64}, {"lo_orderdate", ColumnType::Date32},
        {"lo_orderpriority", ColumnType::String}, {"lo_ordtotalprice", ColumnType::Int64},
        {"lo_partkey", ColumnType::Int64},      {"lo_quantity", ColumnType::Int64},
        {"lo_revenue", ColumnType::Int64},      {"lo_suppkey", ColumnType::Int64},
        {"lo_supplycost", ColumnType::Int64},
    };
    Schema schema(std::move(cols), {{3, false}}); // ORDER BY lo_orderdate
    std::vector<ColumnDistribution> dists = {
        ColumnDistribution::uniform_int(1, 600000),
        ColumnDistribution::uniform_int(0, 10),
        ColumnDistribution::uniform_int(90000, 10000000),
        ColumnDistribution::date_range(date_lo, date_hi),
        ColumnDistribution::fixed_string("ABCDEFGHIJKLMNOPQRSTUVWXYZ", 8),
        ColumnDistribution::uniform_int(100000, 40000000),
        ColumnDistribution::uniform_int(1, 800000),
        ColumnDistribution::uniform_int(1, 50),
        ColumnDistribution::uniform_int(80000, 9000000),
        ColumnDistribution::uniform_int(1, 40000),
        ColumnDistribution::uniform_int(50000, 120000),
    };
    return TableSpec{std::move(schema), std::move(dists), rows, seed};
}

TableSpec tripdata_like(std::uint64_t rows, std::uint64_t seed) {
    const std::int32_t date_lo = days_from_ymd(2013, 1, 1);
    const std::int32_t date_hi = days_from_ymd(2013, 12, 31);
    std::vector<Column> cols = {
        {"medallion", ColumnType::String},
        {"hack_license", ColumnType::String},
        {"vendor_id", ColumnType::String},
        {"rate_code", ColumnType::Int64},
        {"store_and_fwd_flag", ColumnType::String},
        {"pickup_datetime", ColumnType::Date32},
        {"dropoff_datetime", ColumnType::Date32},
        {"passenger_count", ColumnType::Int64},
        {"trip_time_in_secs", ColumnType::Int64},
        {"trip_distance", ColumnType::Float64},
        {"pickup_longitude", ColumnType::Float64},
        {"pickup_latitude", ColumnType::Float64},
        {"dropoff_longitude", ColumnType::Float64},
        {"dropoff_latitude", ColumnType::Float64},
    };
    Schema schema(std::move(cols), {{8, false}}); // ORDER BY trip_time_in_secs
    std::vector<ColumnDistribution> dists = {
        ColumnDistribution::fixed_string("0123456789ABCDEF", 32),
        ColumnDistribution::fixed_string("0123456789ABCDEF", 32),
        ColumnDistribution::fixed_string("CV", 3),
        ColumnDistribution::uniform_int(1, 6),
        ColumnDistribution::fixed_string("NY", 1),
        ColumnDistribution::date_range(date_lo, date_hi),
        ColumnDistribution::date_range(date_lo, date_hi),
        ColumnDistribution::zipf(1.2, 6),
        ColumnDistribution::uniform_int(60, 7200),
        ColumnDistribution::float_range(0.1, 60.0),
        ColumnDistribution::float_range(-74.3, -73.7),
        ColumnDistribution::float_range(40.5, 41.0),
        ColumnDistribution::float_range(-74.3, -73.7),
        ColumnDistribution::float_range(40.5, 41.0),
    };
    return TableSpec{std::move(schema), std::move(dists), rows, seed};
}

std::optional<TableSpec> preset_by_name(std::string_view name, std::uint64_t rows,
                                        std::uint64_t seed) {
    if (name == "lineorder-like") return lineorder_like(rows, seed);
    if (name == "tripdata-like") return tripdata_like(rows, seed);
    return std::nullopt;
}

double expected_record_bytes(const TableSpec& spec) {
    double payload = 0;
    for (std::size_t i = 0; i < spec.columns.size(); ++i) {
        switch (spec.schema.columns()[i].type) {
        case ColumnType::Int64:
        case ColumnType::Float64:
            payload += 8;
            break;
        case ColumnType::Date32:
            payload += 4;
            break;
        case ColumnType::String:
            payload += 4 + static_cast<double>(spec.columns[i].length);
            break;
        }
    }
    return 4 + payload;
}

GeneratorStream::GeneratorStream(TableSpec spec, std::size_t block_size)
    : spec_(std::move(spec)), block_size_(block_size), rng_(spec_.seed) {
    if (spec_.columns.size() != spec_.schema.column_count()) {
        throw UsageError("table spec needs one distribution per column");
    }
    zipf_cdf_.resize(spec_.columns.size());
}

Record GeneratorStream::make_record() {
    Record r;
    r.values.reserve(spec_.columns.size());
    for (std::size_t i = 0; i < spec_.columns.size(); ++i) {
        const ColumnDistribution& d = spec_.columns[i];
        switch (d.kind) {
        case ColumnDistribution::Kind::UniformInt: {
            const std::uint64_t span = static_cast<std::uint64_t>(d.hi - d.lo) + 1;
            r.values.emplace_back(
                static_cast<std::int64_t>(d.lo + static_cast<std::int64_t>(rng_() % span)));
            break;
        }
        case ColumnDistribution::Kind::DateRange: {
            const std::uint64_t span = static_cast<std::uint64_t>(d.hi - d.lo) + 1;
            r.values.emplace_back(
                static_cast<std::int32_t>(d.lo + static_cast<std::int64_t>(rng_() % span)));
            break;
        }
        case ColumnDistribution::Kind::Zipf: {
            std::vector<double>& cdf = zipf_cdf_[i];
            if (cdf.empty()) {
                cdf.resize(d.zipf_n);
                double sum = 0;
                for (std::uint64_t k = 1; k <= d.zipf_n; ++k) {
                    sum += 1.0 / std::pow(static_cast<double>(k), d.zipf_s);
                    cdf[k - 1] = sum;
                }
                for (double& c : cdf) c /= sum;
            }
            const double u =
                static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0); // [0,1)
            const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
            const std::uint64_t k =
                static_cast<std::uint64_t>(it - cdf.begin()) + 1;
            r.values.emplace_back(static_cast<std::int64_t>(std::min(k, d.zipf_n)));
            break;
        }
        case ColumnDistribution::Kind::FixedString: {
            std::string s(d.length, '\0');
            for (char& c : s) {
                c = d.alphabet[rng_() % d.alphabet.size()];
            }
            r.values.emplace_back(std::move(s));
            break;
        }
        case ColumnDistribution::Kind::FloatRange: {
            const double u =
                static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);
            r.values.emplace_back(d.flo + u * (d.fhi - d.flo));
            break;
        }
        }
    }
    return r;
}

std::optional<RecordBlock> GeneratorStream::next() {
    if (produced_ >= spec_.rows) {
        return std::nullopt;
    }
    RecordBlock b;
    b.schema = &spec_.schema;
    const std::uint64_t n =
        std::min<std::uint64_t>(block_size_, spec_.rows - produced_);
    b.records.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        b.records.push_back(make_record());
    }
    produced_ += n;
    return b;
}

// ---------------------------------------------------------------------------
// CSV

CsvRecordStream::CsvRecordStream(const std::filesystem::path& path, const Schema& schema,
                                 CsvOptions options, std::size_t block_size)
    : path_(path), schema_(&schema), options_(options), block_size_(block_size) {
    file_ = std::fopen(path.c_str(), "rb");
    if (!file_) {
        throw IoError("cannot open CSV file " + path.string() + ": " + std::strerror(errno));
    }
}

CsvRecordStream::~CsvRecordStream() {
    if (file_) {
        std::fclose(file_);
    }
}

bool CsvRecordStream::parse_line(const std::string& line, Record& out, std::string& error) {
    out.values.clear();
    std::size_t start = 0;
    std::size_t col = 0;
    const std::size_t ncols = schema_->column_count();
    while (col < ncols) {
        std::size_t end = line.find(',', start);
        const bool last_field = end == std::string::npos;
        std::string_view field(line.data() + start,
                               (last_field ? line.size() : end) - start);
        switch (schema_->columns()[col].type) {
        case ColumnType::Int64: {
            std::int64_t v = 0;
            const auto r = std::from_chars(field.data(), field.data() + field.size(), v);
            if (r.ec != std::errc() || r.ptr != field.data() + field.size()) {
                error = "bad int64 value '" + std::string(field) + "' in column " +
                        schema_->columns()[col].name;
                return false;
            }
            out.values.emplace_back(v);
            break;
        }
        case ColumnType::Float64: {
            errno = 0;
            char* endp = nullptr;
            std::string tmp(field);
            const double v = std::strtod(tmp.c_str(), &endp);
            if (tmp.empty() || endp != tmp.c_str() + tmp.size() || errno == ERANGE) {
                error = "bad float64 value '" + tmp + "' in column " +
                        schema_->columns()[col].name;
                return false;
            }
            out.values.emplace_back(v);
            break;
        }
        case ColumnType::String:
            out.values.emplace_back(std::string(field));
            break;
        case ColumnType::Date32: {
            std::optional<std::int32_t> days = parse_iso_date_days(field);
            if (!days) {
                std::int32_t v = 0;
                const auto r = std::from_chars(field.data(), field.data() + field.size(), v);
                if (r.ec != std::errc() || r.ptr != field.data() + field.size()) {
                    error = "bad date value '" + std::string(field) + "' in column " +
                            schema_->columns()[col].name;
                    return false;
                }
                days = v;
            }
            out.values.emplace_back(*days);
            break;
        }
        }
        ++col;
        if (last_field) {
            start = line.size() + 1; // consumed everything
            break;
        }
        start = end + 1;
    }
    if (col != ncols) {
        error = "expected " + std::to_string(ncols) + " fields, found " + std::to_string(col);
        return false;
    }
    if (start <= line.size()) {
        error = "more fields than schema columns";
        return false;
    }
    return true;
}

std::optional<RecordBlock> CsvRecordStream::next() {
    if (!file_) {
        return std::nullopt;
    }
    RecordBlock b;
    b.schema = schema_;
    std::string line;
    char chunk[4096];
    while (b.records.size() < block_size_) {
        line.clear();
        bool got = false;
        while (std::fgets(chunk, sizeof chunk, file_)) {
            got = true;
            line += chunk;
            if (!line.empty() && line.back() == '\n') {
                line.pop_back();
                if (!line.empty() && line.back() == '\r') line.pop_back();
                break;
            }
        }
        if (!got) {
            std::fclose(file_);
            file_ = nullptr;
            break;
        }
        ++line_no_;
        if (line.empty()) {
            continue;
        }
        Record r;
        std::string error;
        if (parse_line(line, r, error)) {
            b.records.push_back(std::move(r));
        } else if (options_.strict) {
            throw CorruptionError(path_.string() + ":" + std::to_string(line_no_) + ": " +
                                  error);
        } else {
            ++skipped_;
        }
    }
    if (b.records.empty()) {
        return std::nullopt;
    }
    return b;
}

} // namespace extsort
