#include "extsort/table_file.hpp"

#include <cerrno>
#include <cstring>

#include "extsort/errors.hpp"
#include "extsort/tape.hpp"

namespace extsort {

const char kTableMagic[kTableMagicLen] = {'X', 'S', 'R', 'T', 'B', 'L', '0', '1'};

namespace {

std::vector<char> encode_header(const Schema& schema) {
    std::vector<char> out;
    out.insert(out.end(), kTableMagic, kTableMagic + kTableMagicLen);
    put_u32_le(out, static_cast<std::uint32_t>(schema.column_count()));
    for (const Column& c : schema.columns()) {
        put_u32_le(out, static_cast<std::uint32_t>(c.name.size()));
        out.insert(out.end(), c.name.begin(), c.name.end());
        out.push_back(static_cast<char>(c.type));
    }
    put_u32_le(out, static_cast<std::uint32_t>(schema.sort_keys().size()));
    for (const SortKey& k : schema.sort_keys()) {
        put_u32_le(out, static_cast<std::uint32_t>(k.column));
        out.push_back(k.descending ? 1 : 0);
    }
    return out;
}

struct HeaderResult {
    Schema schema;
    std::uint64_t header_bytes;
};

HeaderResult decode_header(std::FILE* f, const std::filesystem::path& path) {
    auto fail = [&](const std::string& what) -> void {
        throw CorruptionError(path.string() + ": " + what);
    };
    auto read_exact = [&](void* p, std::size_t n) {
        if (std::fread(p, 1, n, f) != n) {
            fail("truncated table header");
        }
    };
    char magic[kTableMagicLen];
    read_exact(magic, kTableMagicLen);
    if (std::memcmp(magic, kTableMagic, kTableMagicLen) != 0) {
        fail("not a native table file (bad magic)");
    }
    char u32buf[4];
    auto read_u32 = [&]() {
        read_exact(u32buf, 4);
        return get_u32_le(u32buf);
    };
    std::uint64_t header_bytes = kTableMagicLen + 4;
    const std::uint32_t ncols = read_u32();
    if (ncols == 0 || ncols > 4096) {
        fail("implausible column count");
    }
    std::vector<Column> cols;
    cols.reserve(ncols);
    for (std::uint32_t i = 0; i < ncols; ++i) {
        const std::uint32_t len = read_u32();
        if (len > 4096) {
            fail("implausible column name length");
        }
        std::string name(len, '\0');
        read_exact(name.data(), len);
        char type;
        read_exact(&type, 1);
        if (static_cast<unsigned char>(type) > 3) {
            fail("unknown column type");
        }
        cols.push_back(Column{std::move(name), static_cast<ColumnType>(type)});
        header_bytes += 4 + len + 1;
    }
    const std::uint32_t nkeys = read_u32();
    header_bytes += 4;
    if (nkeys == 0 || nkeys > ncols) {
        fail("implausible sort key count");
    }
    std::vector<SortKey> keys;
    keys.reserve(nkeys);
    for (std::uint32_t i = 0; i < nkeys; ++i) {
        const std::uint32_t col = read_u32();
        char desc;
        read_exact(&desc, 1);
        keys.push_back(SortKey{col, desc != 0});
        header_bytes += 5;
    }
    try {
        return HeaderResult{Schema(std::move(cols), std::move(keys)), header_bytes};
    } catch (const UsageError& e) {
        throw CorruptionError(path.string() + ": invalid schema header: " + e.what());
    }
}

} // namespace

bool file_has_table_magic(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) {
        throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    }
    char magic[kTableMagicLen];
    const bool ok = std::fread(magic, 1, kTableMagicLen, f) == kTableMagicLen &&
                    std::memcmp(magic, kTableMagic, kTableMagicLen) == 0;
    std::fclose(f);
    return ok;
}

TableFileInfo read_table_info(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) {
        throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    }
    TableFileInfo info{Schema({{"_", ColumnType::Int64}}, {{0, false}}), 0, 0, 0};
    try {
        HeaderResult h = decode_header(f, path);
        info.schema = std::move(h.schema);
        info.header_bytes = h.header_bytes;
        if (fseeko(f, 0, SEEK_END) != 0) {
            throw IoError("seek failed on " + path.string());
        }
        const off_t size = ftello(f);
        if (size < 0 ||
            static_cast<std::uint64_t>(size) < info.header_bytes + 12) {
            throw CorruptionError(path.string() + ": missing table trailer");
        }
        if (fseeko(f, size - 12, SEEK_SET) != 0) {
            throw IoError("seek failed on " + path.string());
        }
        char trailer[12];
        if (std::fread(trailer, 1, 12, f) != 12) {
            throw CorruptionError(path.string() + ": truncated table trailer");
        }
        if (get_u32_le(trailer) != kRunTrailerSentinel) {
            throw CorruptionError(path.string() + ": bad table trailer sentinel");
        }
        info.records = get_u64_le(trailer + 4);
        info.data_bytes = static_cast<std::uint64_t>(size) - info.header_bytes - 12;
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
    return info;
}

// ---------------------------------------------------------------------------
// TableFileWriter

TableFileWriter::TableFileWriter(const std::filesystem::path& path, const Schema& schema,
                                 std::size_t buffer_bytes)
    : path_(path) {
    file_ = std::fopen(path.c_str(), "wb");
    if (!file_) {
        throw IoError("cannot create " + path.string() + ": " + std::strerror(errno));
    }
    io_buffer_.resize(std::max(buffer_bytes, kMinIoBufferBytes));
    std::setvbuf(file_, io_buffer_.data(), _IOFBF, io_buffer_.size());
    const std::vector<char> header = encode_header(schema);
    write_bytes(header.data(), header.size());
}

TableFileWriter::~TableFileWriter() {
    if (file_) {
        std::fclose(file_);
    }
}

void TableFileWriter::write_bytes(const void* p, std::size_t n) {
    if (std::fwrite(p, 1, n, file_) != n) {
        throw IoError("write failed on " + path_.string() + ": " + std::strerror(errno));
    }
}

void TableFileWriter::append(const Record& r) {
    if (finished_) {
        throw UsageError("append to a finished table file");
    }
    encode_buffer_.clear();
    encode_record(r, encode_buffer_);
    write_bytes(encode_buffer_.data(), encode_buffer_.size());
    ++records_;
}

void TableFileWriter::finish() {
    if (finished_) {
        return;
    }
    encode_buffer_.clear();
    put_u32_le(encode_buffer_, kRunTrailerSentinel);
    put_u64_le(encode_buffer_, records_);
    write_bytes(encode_buffer_.data(), encode_buffer_.size());
    if (std::fflush(file_) != 0) {
        throw IoError("flush failed on " + path_.string() + ": " + std::strerror(errno));
    }
    std::fclose(file_);
    file_ = nullptr;
    finished_ = true;
}

// ---------------------------------------------------------------------------
// TableFileStream

TableFileStream::TableFileStream(const std::filesystem::path& path, std::size_t buffer_bytes,
                                 std::size_t block_size)
    : path_(path), block_size_(block_size) {
    file_ = std::fopen(path.c_str(), "rb");
    if (!file_) {
        throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    }
    io_buffer_.resize(std::max(buffer_bytes, kMinIoBufferBytes));
    std::setvbuf(file_, io_buffer_.data(), _IOFBF, io_buffer_.size());
    try {
        HeaderResult h = decode_header(file_, path_);
        schema_ = std::make_unique<Schema>(std::move(h.schema));
        offset_ = h.header_bytes;
    } catch (...) {
        std::fclose(file_);
        file_ = nullptr;
        throw;
    }
}

TableFileStream::~TableFileStream() {
    if (file_) {
        std::fclose(file_);
    }
}

void TableFileStream::corrupt(const std::string& what) const {
    throw CorruptionError(path_.string() + " at offset " + std::to_string(offset_) + ": " +
                          what);
}

std::optional<RecordBlock> TableFileStream::next() {
    if (done_) {
        return std::nullopt;
    }
    RecordBlock b;
    b.schema = schema_.get();
    while (b.records.size() < block_size_) {
        char hdr[4];
        if (std::fread(hdr, 1, 4, file_) != 4) {
            corrupt("truncated record header");
        }
        const std::uint32_t len = get_u32_le(hdr);
        if (len == kRunTrailerSentinel) {
            char cnt[8];
            if (std::fread(cnt, 1, 8, file_) != 8) {
                corrupt("truncated trailer");
            }
            if (get_u64_le(cnt) != records_seen_) {
                corrupt("trailer count mismatch");
            }
            done_ = true;
            break;
        }
        payload_.resize(len);
        if (len > 0 && std::fread(payload_.data(), 1, len, file_) != len) {
            corrupt("truncated record payload");
        }
        Record r;
        std::size_t used = 0;
        try {
            used = decode_record(payload_.data(), len, *schema_, r);
        } catch (const CorruptionError& e) {
            corrupt(e.what());
        }
        if (used != len) {
            corrupt("record payload longer than its schema");
        }
        offset_ += 4 + len;
        ++records_seen_;
        b.records.push_back(std::move(r));
    }
    if (b.records.empty()) {
        return std::nullopt;
    }
    return b;
}

} // namespace extsort
