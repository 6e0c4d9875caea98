#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "extsort/config.hpp"
#include "extsort/record.hpp"

namespace extsort {

struct IoConfig {
    std::size_t read_buffer_bytes = kDefaultIoBufferBytes;
    std::size_t write_buffer_bytes = kDefaultIoBufferBytes;
    std::filesystem::path spill_directory;

    void validate() const; // buffers >= 4096, directory set
};

class Tape;

// Appends one sorted run to a tape. Obtain via Tape::begin_run(); call
// finish() when the run is complete. A writer destroyed without finish()
// aborts the run: its partial file is deleted and the run is not recorded.
class RunWriter {
public:
    RunWriter(RunWriter&&) noexcept;
    RunWriter& operator=(RunWriter&&) = delete;
    RunWriter(const RunWriter&) = delete;
    ~RunWriter();

    void append(const Record& r);
    void finish();

    std::uint64_t records_written() const { return records_; }

private:
    friend class Tape;
    RunWriter(Tape& tape, const Schema& schema, bool verify_sorted);

    Tape* tape_;
    const Schema* schema_;
    std::uint64_t records_ = 0;
    bool verify_sorted_;
    bool finished_ = false;
    Record last_; // only kept when verify_sorted_
};

// Streams a tape's runs in order. Each reader owns its own file handle and
// buffer, so several readers may walk different runs of one tape at once.
//
// head() returns the current record of the current run, or nullptr once the
// run is exhausted. The pointer returned by head() before an advance() call
// stays valid until the advance() after that one (two decode slots), which
// lets a merge serialize the previous winner after fetching its replacement.
class RunReader {
public:
    // Positions before run `first_run`; call next_run() to enter it.
    RunReader(Tape& tape, const Schema& schema, std::size_t first_run,
              std::size_t buffer_bytes);
    RunReader(RunReader&&) noexcept;
    RunReader(const RunReader&) = delete;
    ~RunReader();

    // Advances to the next run of this reader's tape. Returns false when no
    // run is left. Usage error if the current run is not yet exhausted.
    bool next_run();

    const Record* head() const { return head_; }
    void advance();

    bool run_exhausted() const { return head_ == nullptr; }
    std::size_t current_run() const { return run_; } // valid after next_run()

private:
    void fill_head();
    [[noreturn]] void corrupt(const std::string& what) const;

    Tape* tape_;
    const Schema* schema_;
    std::FILE* file_ = nullptr;
    std::vector<char> io_buffer_;
    std::vector<char> payload_;
    std::size_t run_ = 0;
    bool entered_ = false;
    std::uint64_t offset_ = 0;        // logical tape offset of the next read
    std::uint64_t run_records_ = 0;   // decoded so far in the current run
    Record slots_[2];
    int cur_slot_ = 0;
    const Record* head_ = nullptr;
};

// An append-then-rewind stream of sorted runs. Each run is backed by its own
// file (tape<id>.run<j>) so consumed runs can be reclaimed individually; a
// zero-byte marker file (tape<id>.tape) is created eagerly and exclusively,
// surfacing disk trouble and id collisions at open time.
//
// Lifecycle: Writing -> (rewind) -> Reading -> (release_consumed once all
// runs are consumed) -> Released; reset_for_writing() starts the tape fresh.
// bytes_written / bytes_read accumulate across reuses.
class Tape {
public:
    Tape(int id, const IoConfig& cfg);
    Tape(Tape&&) noexcept;
    Tape(const Tape&) = delete;
    ~Tape();

    enum class Mode { Writing, Reading, Released };

    int id() const { return id_; }
    // Marker file path; the tape's run files live beside it.
    const std::filesystem::path& path() const { return marker_path_; }
    std::filesystem::path run_path(std::size_t run) const;
    Mode mode() const { return mode_; }

    std::size_t run_count() const { return runs_.size(); }
    // Logical run start offsets: cumulative byte positions, starting at 0.
    const std::vector<std::uint64_t>& run_boundaries() const { return boundaries_; }
    std::uint64_t run_records(std::size_t run) const { return runs_.at(run).records; }
    std::uint64_t run_bytes(std::size_t run) const { return runs_.at(run).bytes; }
    std::uint64_t total_records() const;

    std::uint64_t bytes_written() const { return bytes_written_; }
    std::uint64_t bytes_read() const { return bytes_read_; }

    // Writing side. verify_sorted defaults on in debug builds; appending a
    // record that sorts below its predecessor then throws.
    RunWriter begin_run(const Schema& schema,
#ifdef NDEBUG
                        bool verify_sorted = false
#else
                        bool verify_sorted = true
#endif
    );

    // Flushes and switches to Reading mode. Runs read back in written order.
    void rewind();

    RunReader open_reader(const Schema& schema, std::size_t first_run,
                          std::size_t buffer_bytes);

    std::size_t runs_consumed() const { return runs_consumed_; }
    bool fully_consumed() const {
        return mode_ != Mode::Writing && runs_consumed_ >= run_count();
    }

    // Reclaims the files of consumed runs (best effort; failure is logged,
    // not thrown). Once every run is reclaimed the tape becomes Released.
    // Usage error in Writing mode; unconsumed runs keep their files.
    void release_consumed();

    // After release (or full consumption): fresh empty tape, Writing mode.
    void reset_for_writing();

    // Bytes still on disk for this tape (unreclaimed run files).
    std::uint64_t file_bytes() const;

private:
    friend class RunWriter;
    friend class RunReader;
    friend class TapeSet;

    struct RunMeta {
        std::uint64_t bytes = 0;
        std::uint64_t records = 0;
        bool consumed = false;
        bool reclaimed = false;
    };

    void write_bytes(const void* data, std::size_t n);
    void close_file() noexcept;
    void mark_run_consumed(std::size_t run);
    void remove_run_files() noexcept;

    int id_;
    std::filesystem::path dir_;
    std::filesystem::path marker_path_;
    std::size_t write_buffer_bytes_;
    Mode mode_ = Mode::Writing;
    std::FILE* file_ = nullptr; // active run's write handle
    std::vector<char> write_buffer_;
    std::vector<char> encode_buffer_;
    std::vector<RunMeta> runs_;
    std::vector<std::uint64_t> boundaries_;
    std::uint64_t active_run_bytes_ = 0;
    std::uint64_t bytes_written_ = 0;
    std::uint64_t bytes_read_ = 0;
    std::size_t runs_consumed_ = 0;
    bool run_active_ = false;
};

// Run serialization, shared by tapes and the native table-file format.
//
//   file    := run*
//   run     := record* trailer
//   record  := u32 total_payload_len, payload
//   payload := per column in schema order:
//              int64 / float64 little-endian 8 bytes,
//              date32 little-endian 4 bytes,
//              string := u32 len, bytes
//   trailer := u32 0xFFFFFFFF, u64 record_count
//
// All integers little-endian. A payload length of 0xFFFFFFFF is reserved for
// the trailer sentinel, so payloads are capped just below 4 GiB.
inline constexpr std::uint32_t kRunTrailerSentinel = 0xFFFFFFFFu;

void encode_record(const Record& r, std::vector<char>& out); // appends
std::size_t decode_record(const char* payload, std::size_t payload_len,
                          const Schema& schema, Record& out); // returns bytes used

void put_u32_le(std::vector<char>& out, std::uint32_t v);
void put_u64_le(std::vector<char>& out, std::uint64_t v);
std::uint32_t get_u32_le(const char* p);
std::uint64_t get_u64_le(const char* p);

// Owns `count` tapes in a unique subdirectory of cfg.spill_directory.
// remove_all_files() (also run by the destructor) deletes every tape file
// and the subdirectory.
class TapeSet {
public:
    TapeSet(std::size_t count, const IoConfig& cfg);
    TapeSet(const TapeSet&) = delete;
    ~TapeSet();

    std::size_t size() const { return tapes_.size(); }
    Tape& tape(std::size_t i) { return tapes_.at(i); }
    const Tape& tape(std::size_t i) const { return tapes_.at(i); }

    std::uint64_t total_bytes_written() const;
    std::uint64_t total_bytes_read() const;
    // Sum of live backing-file sizes; the merge's spill high-water mark.
    std::uint64_t live_disk_bytes() const;

    const std::filesystem::path& directory() const { return dir_; }

    void remove_all_files() noexcept;

private:
    std::filesystem::path dir_;
    std::vector<Tape> tapes_;
    bool removed_ = false;
};

} // namespace extsort
