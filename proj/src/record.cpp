#include "extsort/record.hpp"

#include <cmath>
#include <cstring>
#include <unordered_set>

#include "extsort/errors.hpp"

namespace extsort {

const char* column_type_name(ColumnType t) {
    switch (t) {
    case ColumnType::Int64: return "int64";
    case ColumnType::Float64: return "float64";
    case ColumnType::String: return "string";
    case ColumnType::Date32: return "date32";
    }
    return "?";
}

std::optional<ColumnType> parse_column_type(std::string_view name) {
    if (name == "int64") return ColumnType::Int64;
    if (name == "float64") return ColumnType::Float64;
    if (name == "string") return ColumnType::String;
    if (name == "date32" || name == "date") return ColumnType::Date32;
    return std::nullopt;
}

Schema::Schema(std::vector<Column> columns, std::vector<SortKey> keys)
    : columns_(std::move(columns)), keys_(std::move(keys)) {
    if (columns_.empty()) {
        throw UsageError("schema needs at least one column");
    }
    std::unordered_set<std::string_view> names;
    for (const Column& c : columns_) {
        if (!names.insert(c.name).second) {
            throw UsageError("duplicate column name: " + c.name);
        }
    }
    if (keys_.empty()) {
        throw UsageError("schema needs at least one sort key column");
    }
    for (const SortKey& k : keys_) {
        if (k.column >= columns_.size()) {
            throw UsageError("sort key column index out of range");
        }
    }
}

std::size_t Schema::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == name) return i;
    }
    throw UsageError("no such column: " + std::string(name));
}

bool Schema::operator==(const Schema& other) const {
    if (columns_.size() != other.columns_.size() || keys_.size() != other.keys_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name != other.columns_[i].name ||
            columns_[i].type != other.columns_[i].type) {
            return false;
        }
    }
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        if (keys_[i].column != other.keys_[i].column ||
            keys_[i].descending != other.keys_[i].descending) {
            return false;
        }
    }
    return true;
}

bool record_matches_schema(const Record& r, const Schema& schema) {
    if (r.values.size() != schema.column_count()) return false;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        if (static_cast<std::size_t>(r.values[i].index()) !=
            static_cast<std::size_t>(schema.columns()[i].type)) {
            return false;
        }
    }
    return true;
}

std::size_t serialized_record_size(const Record& r) {
    std::size_t payload = 0;
    for (const Value& v : r.values) {
        switch (static_cast<ColumnType>(v.index())) {
        case ColumnType::Int64:
        case ColumnType::Float64:
            payload += 8;
            break;
        case ColumnType::String:
            payload += 4 + std::get<std::string>(v).size();
            break;
        case ColumnType::Date32:
            payload += 4;
            break;
        }
    }
    return 4 + payload;
}

std::size_t accounted_record_size(const Record& r) {
    return serialized_record_size(r) + kRecordBookkeepingBytes + kRunRefBytes;
}

namespace {

template <typename T>
Ordering three_way(T a, T b) {
    if (a < b) return Ordering::Less;
    if (b < a) return Ordering::Greater;
    return Ordering::Equal;
}

// Total order over doubles: -inf < finite < +inf < NaN, all NaNs equal.
Ordering compare_doubles(double a, double b) {
    const bool na = std::isnan(a);
    const bool nb = std::isnan(b);
    if (na || nb) {
        if (na && nb) return Ordering::Equal;
        return na ? Ordering::Greater : Ordering::Less;
    }
    return three_way(a, b);
}

Ordering compare_strings(const std::string& a, const std::string& b) {
    const int c = a.compare(b); // char_traits<char> compares as unsigned
    if (c < 0) return Ordering::Less;
    if (c > 0) return Ordering::Greater;
    return Ordering::Equal;
}

Ordering flip(Ordering o) {
    return static_cast<Ordering>(-static_cast<int>(o));
}

} // namespace

Ordering compare_records(const Schema& schema, const Record& a, const Record& b) {
    for (const SortKey& key : schema.sort_keys()) {
        if (key.column >= a.values.size() || key.column >= b.values.size()) {
            throw UsageError("record does not match comparator schema");
        }
        const Value& va = a.values[key.column];
        const Value& vb = b.values[key.column];
        Ordering o = Ordering::Equal;
        switch (schema.columns()[key.column].type) {
        case ColumnType::Int64:
            o = three_way(std::get<std::int64_t>(va), std::get<std::int64_t>(vb));
            break;
        case ColumnType::Float64:
            o = compare_doubles(std::get<double>(va), std::get<double>(vb));
            break;
        case ColumnType::String:
            o = compare_strings(std::get<std::string>(va), std::get<std::string>(vb));
            break;
        case ColumnType::Date32:
            o = three_way(std::get<std::int32_t>(va), std::get<std::int32_t>(vb));
            break;
        }
        if (o != Ordering::Equal) {
            return key.descending ? flip(o) : o;
        }
    }
    return Ordering::Equal;
}

} // namespace extsort
