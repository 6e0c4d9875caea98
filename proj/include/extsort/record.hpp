#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "extsort/config.hpp"
#include "extsort/errors.hpp"

namespace extsort {

enum class ColumnType : std::uint8_t {
    Int64 = 0,
    Float64 = 1,
    String = 2,
    Date32 = 3, // days since 1970-01-01, stored as int32
};

const char* column_type_name(ColumnType t);
std::optional<ColumnType> parse_column_type(std::string_view name);

struct Column {
    std::string name;
    ColumnType type;
};

struct SortKey {
    std::size_t column = 0;
    bool descending = false;
};

// Column layout plus the designated sort key. Validated on construction:
// unique column names, at least one key, key indices in range.
class Schema {
public:
    Schema(std::vector<Column> columns, std::vector<SortKey> keys);

    const std::vector<Column>& columns() const { return columns_; }
    const std::vector<SortKey>& sort_keys() const { return keys_; }
    std::size_t column_count() const { return columns_.size(); }

    // Index of a named column; throws UsageError if absent.
    std::size_t column_index(std::string_view name) const;

    bool operator==(const Schema& other) const;

private:
    std::vector<Column> columns_;
    std::vector<SortKey> keys_;
};

// Variant alternatives line up with ColumnType: Int64, Float64, String, Date32.
using Value = std::variant<std::int64_t, double, std::string, std::int32_t>;

struct Record {
    std::vector<Value> values;
};

bool record_matches_schema(const Record& r, const Schema& schema);

// Serialized length: u32 payload-length prefix plus the payload (fixed-width
// numerics, u32-length-prefixed strings). See tape.hpp for the exact layout.
std::size_t serialized_record_size(const Record& r);

// Serialized length plus the fixed bookkeeping constants from config.hpp.
// This is the unit the memory budget accounts in.
std::size_t accounted_record_size(const Record& r);

enum class Ordering : int { Less = -1, Equal = 0, Greater = 1 };

// Key comparison without counting; SortKeyComparator and debug sortedness
// checks share this. Strings compare bytewise (unsigned); floats use a total
// order with all NaNs equal to each other and greater than everything else.
Ordering compare_records(const Schema& schema, const Record& a, const Record& b);

// The comparison primitive the whole engine counts. One counter increment per
// record comparison (not per key column).
class SortKeyComparator {
public:
    explicit SortKeyComparator(const Schema& schema) : schema_(&schema) {}

    Ordering compare(const Record& a, const Record& b) {
        ++count_;
        try {
            return compare_records(*schema_, a, b);
        } catch (const std::bad_variant_access&) {
            throw UsageError("record does not match comparator schema");
        }
    }

    bool less(const Record& a, const Record& b) { return compare(a, b) == Ordering::Less; }

    // Tournament structures model exhausted inputs as records with an
    // infinity key; matches against that bound are key comparisons too and
    // are charged here.
    void count_bound_comparison() { ++count_; }

    std::uint64_t comparisons() const { return count_; }
    const Schema& schema() const { return *schema_; }

private:
    const Schema* schema_;
    std::uint64_t count_ = 0;
};

// Inter-operator exchange unit. End-of-stream is signaled by the stream, not
// by an empty block.
struct RecordBlock {
    const Schema* schema = nullptr;
    std::vector<Record> records;
};

} // namespace extsort
