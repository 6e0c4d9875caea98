#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "extsort/record.hpp"
#include "extsort/streams.hpp"

namespace extsort {

// Native table files: a self-describing header followed by records in the
// run serialization (tape.hpp) and the standard run trailer.
//
//   file   := magic "XSRTBL01", header, record*, trailer
//   header := u32 ncols, ncols * (u32 name_len, name, u8 type),
//             u32 nkeys, nkeys * (u32 column, u8 descending)
//
// The record region of a native file is exactly one run, so structural
// tools can walk it with the same logic as spill files.
inline constexpr std::size_t kTableMagicLen = 8;
extern const char kTableMagic[kTableMagicLen];

struct TableFileInfo {
    Schema schema;
    std::uint64_t records = 0;
    std::uint64_t header_bytes = 0; // magic + schema header
    std::uint64_t data_bytes = 0;   // record region, trailer excluded
};

// Reads magic + header + trailer (seeks to the end); corruption errors name
// the file.
TableFileInfo read_table_info(const std::filesystem::path& path);

bool file_has_table_magic(const std::filesystem::path& path);

class TableFileWriter {
public:
    TableFileWriter(const std::filesystem::path& path, const Schema& schema,
                    std::size_t buffer_bytes = kDefaultIoBufferBytes);
    ~TableFileWriter();
    TableFileWriter(const TableFileWriter&) = delete;

    void append(const Record& r);
    void finish(); // writes the trailer and closes

    std::uint64_t records_written() const { return records_; }

private:
    void write_bytes(const void* p, std::size_t n);

    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
    std::vector<char> io_buffer_;
    std::vector<char> encode_buffer_;
    std::uint64_t records_ = 0;
    bool finished_ = false;
};

class TableFileStream final : public RecordBlockStream {
public:
    explicit TableFileStream(const std::filesystem::path& path,
                             std::size_t buffer_bytes = kDefaultIoBufferBytes,
                             std::size_t block_size = 4096);
    ~TableFileStream() override;

    std::optional<RecordBlock> next() override;

    const Schema& schema() const { return *schema_; }

private:
    [[noreturn]] void corrupt(const std::string& what) const;

    std::filesystem::path path_;
    std::unique_ptr<Schema> schema_;
    std::FILE* file_ = nullptr;
    std::vector<char> io_buffer_;
    std::vector<char> payload_;
    std::size_t block_size_;
    std::uint64_t offset_ = 0;
    std::uint64_t records_seen_ = 0;
    bool done_ = false;
};

} // namespace extsort
