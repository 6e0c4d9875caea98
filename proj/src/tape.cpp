#include "extsort/tape.hpp"

#include <atomic>
#include <cerrno>
#include <cstring>
#include <iostream>

#include <unistd.h>

#include "extsort/errors.hpp"

namespace extsort {

namespace fs = std::filesystem;

void IoConfig::validate() const {
    if (read_buffer_bytes < kMinIoBufferBytes || write_buffer_bytes < kMinIoBufferBytes) {
        throw UsageError("I/O buffers must be at least 4096 bytes");
    }
    if (spill_directory.empty()) {
        throw UsageError("spill directory not set");
    }
}

void put_u32_le(std::vector<char>& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u64_le(std::vector<char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

std::uint32_t get_u32_le(const char* p) {
    const auto* u = reinterpret_cast<const unsigned char*>(p);
    return static_cast<std::uint32_t>(u[0]) | (static_cast<std::uint32_t>(u[1]) << 8) |
           (static_cast<std::uint32_t>(u[2]) << 16) | (static_cast<std::uint32_t>(u[3]) << 24);
}

std::uint64_t get_u64_le(const char* p) {
    const auto* u = reinterpret_cast<const unsigned char*>(p);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | u[i];
    }
    return v;
}

void encode_record(const Record& r, std::vector<char>& out) {
    const std::size_t start = out.size();
    put_u32_le(out, 0); // length patched below
    for (const Value& v : r.values) {
        switch (static_cast<ColumnType>(v.index())) {
        case ColumnType::Int64:
            put_u64_le(out, static_cast<std::uint64_t>(std::get<std::int64_t>(v)));
            break;
        case ColumnType::Float64: {
            std::uint64_t bits;
            const double d = std::get<double>(v);
            std::memcpy(&bits, &d, sizeof bits);
            put_u64_le(out, bits);
            break;
        }
        case ColumnType::String: {
            const std::string& s = std::get<std::string>(v);
            if (s.size() >= kRunTrailerSentinel) {
                throw UsageError("string value too large to serialize");
            }
            put_u32_le(out, static_cast<std::uint32_t>(s.size()));
            out.insert(out.end(), s.begin(), s.end());
            break;
        }
        case ColumnType::Date32:
            put_u32_le(out, static_cast<std::uint32_t>(std::get<std::int32_t>(v)));
            break;
        }
    }
    const std::size_t payload = out.size() - start - 4;
    if (payload >= kRunTrailerSentinel) {
        throw UsageError("record payload too large to serialize");
    }
    const std::uint32_t len = static_cast<std::uint32_t>(payload);
    out[start] = static_cast<char>(len & 0xFF);
    out[start + 1] = static_cast<char>((len >> 8) & 0xFF);
    out[start + 2] = static_cast<char>((len >> 16) & 0xFF);
    out[start + 3] = static_cast<char>((len >> 24) & 0xFF);
}

std::size_t decode_record(const char* payload, std::size_t payload_len,
                          const Schema& schema, Record& out) {
    const std::size_t ncols = schema.column_count();
    out.values.resize(ncols);
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (pos + n > payload_len) {
            throw CorruptionError("record payload shorter than its schema");
        }
    };
    for (std::size_t i = 0; i < ncols; ++i) {
        Value& v = out.values[i];
        switch (schema.columns()[i].type) {
        case ColumnType::Int64:
            need(8);
            v.emplace<std::int64_t>(static_cast<std::int64_t>(get_u64_le(payload + pos)));
            pos += 8;
            break;
        case ColumnType::Float64: {
            need(8);
            const std::uint64_t bits = get_u64_le(payload + pos);
            double d;
            std::memcpy(&d, &bits, sizeof d);
            v.emplace<double>(d);
            pos += 8;
            break;
        }
        case ColumnType::String: {
            need(4);
            const std::uint32_t len = get_u32_le(payload + pos);
            pos += 4;
            need(len);
            if (auto* s = std::get_if<std::string>(&v)) {
                s->assign(payload + pos, len);
            } else {
                v.emplace<std::string>(payload + pos, len);
            }
            pos += len;
            break;
        }
        case ColumnType::Date32:
            need(4);
            v.emplace<std::int32_t>(static_cast<std::int32_t>(get_u32_le(payload + pos)));
            pos += 4;
            break;
        }
    }
    return pos;
}

// ---------------------------------------------------------------------------
// Tape

Tape::Tape(int id, const IoConfig& cfg)
    : id_(id),
      dir_(cfg.spill_directory),
      marker_path_(cfg.spill_directory / ("tape" + std::to_string(id) + ".tape")),
      write_buffer_bytes_(cfg.write_buffer_bytes) {
    cfg.validate();
    // Exclusive marker: catches id collisions and bad spill directories at
    // open time, before any data is at risk.
    std::FILE* marker = std::fopen(marker_path_.c_str(), "wbx");
    if (!marker) {
        if (errno == EEXIST) {
            throw UsageError("tape file already exists (tape id collision): " +
                             marker_path_.string());
        }
        throw IoError("cannot create tape marker " + marker_path_.string() + ": " +
                      std::strerror(errno));
    }
    std::fclose(marker);
    write_buffer_.resize(write_buffer_bytes_);
}

Tape::Tape(Tape&& other) noexcept
    : id_(other.id_),
      dir_(std::move(other.dir_)),
      marker_path_(std::move(other.marker_path_)),
      write_buffer_bytes_(other.write_buffer_bytes_),
      mode_(other.mode_),
      file_(other.file_),
      write_buffer_(std::move(other.write_buffer_)),
      encode_buffer_(std::move(other.encode_buffer_)),
      runs_(std::move(other.runs_)),
      boundaries_(std::move(other.boundaries_)),
      active_run_bytes_(other.active_run_bytes_),
      bytes_written_(other.bytes_written_),
      bytes_read_(other.bytes_read_),
      runs_consumed_(other.runs_consumed_),
      run_active_(other.run_active_) {
    other.file_ = nullptr;
    other.mode_ = Mode::Released;
    other.run_active_ = false;
    other.marker_path_.clear();
}

Tape::~Tape() {
    close_file();
}

fs::path Tape::run_path(std::size_t run) const {
    return dir_ / ("tape" + std::to_string(id_) + ".run" + std::to_string(run));
}

void Tape::close_file() noexcept {
    if (file_) {
        std::fclose(file_);
        file_ = nullptr;
    }
}

void Tape::write_bytes(const void* data, std::size_t n) {
    if (std::fwrite(data, 1, n, file_) != n) {
        throw IoError("spill write failed on tape " + std::to_string(id_) + " (" +
                      run_path(runs_.size()).string() + "): " + std::strerror(errno));
    }
    active_run_bytes_ += n;
    bytes_written_ += n;
}

std::uint64_t Tape::total_records() const {
    std::uint64_t n = 0;
    for (const RunMeta& r : runs_) n += r.records;
    return n;
}

RunWriter Tape::begin_run(const Schema& schema, bool verify_sorted) {
    if (mode_ != Mode::Writing) {
        throw UsageError("begin_run on a tape that is not in writing mode");
    }
    if (run_active_) {
        throw UsageError("begin_run while another run is active on tape " + std::to_string(id_));
    }
    const fs::path path = run_path(runs_.size());
    file_ = std::fopen(path.c_str(), "wbx");
    if (!file_) {
        throw IoError("cannot create run file " + path.string() + ": " + std::strerror(errno));
    }
    std::setvbuf(file_, write_buffer_.data(), _IOFBF, write_buffer_.size());
    run_active_ = true;
    active_run_bytes_ = 0;
    return RunWriter(*this, schema, verify_sorted);
}

void Tape::rewind() {
    if (mode_ != Mode::Writing) {
        throw UsageError("rewind on a tape that is not in writing mode");
    }
    if (run_active_) {
        throw UsageError("rewind with an unfinished run on tape " + std::to_string(id_));
    }
    mode_ = Mode::Reading;
    runs_consumed_ = 0;
    for (RunMeta& r : runs_) r.consumed = false;
}

RunReader Tape::open_reader(const Schema& schema, std::size_t first_run,
                            std::size_t buffer_bytes) {
    if (mode_ != Mode::Reading) {
        throw UsageError("open_reader on a tape that is not rewound for reading");
    }
    return RunReader(*this, schema, first_run, buffer_bytes);
}

void Tape::mark_run_consumed(std::size_t run) {
    if (run < runs_.size() && !runs_[run].consumed) {
        runs_[run].consumed = true;
        ++runs_consumed_;
    }
}

void Tape::release_consumed() {
    if (mode_ == Mode::Writing) {
        throw UsageError("release_consumed on a tape in writing mode");
    }
    if (mode_ == Mode::Released) {
        return;
    }
    for (std::size_t i = 0; i < runs_.size(); ++i) {
        RunMeta& r = runs_[i];
        if (r.consumed && !r.reclaimed) {
            std::error_code ec;
            fs::remove(run_path(i), ec);
            if (ec) {
                std::cerr << "extsort: could not reclaim " << run_path(i) << ": "
                          << ec.message() << "\n";
            }
            r.reclaimed = true;
        }
    }
    if (fully_consumed()) {
        mode_ = Mode::Released;
    }
}

void Tape::remove_run_files() noexcept {
    for (std::size_t i = 0; i < runs_.size(); ++i) {
        if (!runs_[i].reclaimed) {
            std::error_code ec;
            fs::remove(run_path(i), ec);
        }
    }
}

void Tape::reset_for_writing() {
    if (mode_ == Mode::Writing) {
        throw UsageError("reset_for_writing on a tape already in writing mode");
    }
    if (mode_ == Mode::Reading && !fully_consumed()) {
        throw UsageError("reset_for_writing with unconsumed runs on tape " + std::to_string(id_));
    }
    remove_run_files();
    runs_.clear();
    boundaries_.clear();
    runs_consumed_ = 0;
    active_run_bytes_ = 0;
    mode_ = Mode::Writing;
}

std::uint64_t Tape::file_bytes() const {
    std::uint64_t n = run_active_ ? active_run_bytes_ : 0;
    for (const RunMeta& r : runs_) {
        if (!r.reclaimed) n += r.bytes;
    }
    return n;
}

// ---------------------------------------------------------------------------
// RunWriter

RunWriter::RunWriter(Tape& tape, const Schema& schema, bool verify_sorted)
    : tape_(&tape), schema_(&schema), verify_sorted_(verify_sorted) {}

RunWriter::RunWriter(RunWriter&& other) noexcept
    : tape_(other.tape_),
      schema_(other.schema_),
      records_(other.records_),
      verify_sorted_(other.verify_sorted_),
      finished_(other.finished_),
      last_(std::move(other.last_)) {
    other.finished_ = true;
    other.tape_ = nullptr;
}

RunWriter::~RunWriter() {
    if (!finished_ && tape_) {
        // Aborted run: close and drop the partial file; nothing is recorded.
        tape_->close_file();
        std::error_code ec;
        fs::remove(tape_->run_path(tape_->runs_.size()), ec);
        tape_->run_active_ = false;
    }
}

void RunWriter::append(const Record& r) {
    if (finished_) {
        throw UsageError("append to a finished run");
    }
    if (verify_sorted_ && records_ > 0 &&
        compare_records(*schema_, r, last_) == Ordering::Less) {
        throw UsageError("run sortedness violated on tape " + std::to_string(tape_->id()));
    }
    std::vector<char>& buf = tape_->encode_buffer_;
    buf.clear();
    encode_record(r, buf);
    tape_->write_bytes(buf.data(), buf.size());
    ++records_;
    if (verify_sorted_) {
        last_ = r;
    }
}

void RunWriter::finish() {
    if (finished_) {
        return;
    }
    std::vector<char>& buf = tape_->encode_buffer_;
    buf.clear();
    put_u32_le(buf, kRunTrailerSentinel);
    put_u64_le(buf, records_);
    tape_->write_bytes(buf.data(), buf.size());
    if (std::fflush(tape_->file_) != 0) {
        throw IoError("flush failed on tape " + std::to_string(tape_->id()) + ": " +
                      std::strerror(errno));
    }
    tape_->close_file();
    const std::uint64_t start =
        tape_->boundaries_.empty()
            ? 0
            : tape_->boundaries_.back() + tape_->runs_.back().bytes;
    tape_->boundaries_.push_back(start);
    Tape::RunMeta meta;
    meta.bytes = tape_->active_run_bytes_;
    meta.records = records_;
    tape_->runs_.push_back(meta);
    tape_->active_run_bytes_ = 0;
    tape_->run_active_ = false;
    finished_ = true;
}

// ---------------------------------------------------------------------------
// RunReader

RunReader::RunReader(Tape& tape, const Schema& schema, std::size_t first_run,
                     std::size_t buffer_bytes)
    : tape_(&tape), schema_(&schema), run_(first_run) {
    io_buffer_.resize(std::max(buffer_bytes, kMinIoBufferBytes));
}

RunReader::RunReader(RunReader&& other) noexcept
    : tape_(other.tape_),
      schema_(other.schema_),
      file_(other.file_),
      io_buffer_(std::move(other.io_buffer_)),
      payload_(std::move(other.payload_)),
      run_(other.run_),
      entered_(other.entered_),
      offset_(other.offset_),
      run_records_(other.run_records_),
      cur_slot_(other.cur_slot_) {
    slots_[0] = std::move(other.slots_[0]);
    slots_[1] = std::move(other.slots_[1]);
    head_ = other.head_ ? &slots_[cur_slot_] : nullptr;
    other.file_ = nullptr;
    other.head_ = nullptr;
}

RunReader::~RunReader() {
    if (file_) {
        std::fclose(file_);
    }
}

void RunReader::corrupt(const std::string& what) const {
    throw CorruptionError("tape " + std::to_string(tape_->id()) + " at offset " +
                          std::to_string(offset_) + ": " + what);
}

bool RunReader::next_run() {
    if (entered_ && head_ != nullptr) {
        throw UsageError("next_run before the current run is exhausted");
    }
    const std::size_t next = entered_ ? run_ + 1 : run_;
    if (next >= tape_->run_count()) {
        head_ = nullptr;
        return false;
    }
    run_ = next;
    entered_ = true;
    if (file_) {
        std::fclose(file_);
        file_ = nullptr;
    }
    const fs::path path = tape_->run_path(run_);
    file_ = std::fopen(path.c_str(), "rb");
    if (!file_) {
        throw IoError("cannot open run " + std::to_string(run_) + " of tape " +
                      std::to_string(tape_->id()) + ": " + std::strerror(errno));
    }
    std::setvbuf(file_, io_buffer_.data(), _IOFBF, io_buffer_.size());
    offset_ = tape_->run_boundaries()[run_];
    run_records_ = 0;
    fill_head();
    return true;
}

void RunReader::advance() {
    if (!entered_) {
        throw UsageError("advance before next_run");
    }
    if (head_ == nullptr) {
        throw UsageError("advance past the end of a run");
    }
    fill_head();
}

void RunReader::fill_head() {
    char hdr[4];
    if (std::fread(hdr, 1, 4, file_) != 4) {
        corrupt("truncated run (missing record header)");
    }
    const std::uint32_t len = get_u32_le(hdr);
    if (len == kRunTrailerSentinel) {
        char cnt[8];
        if (std::fread(cnt, 1, 8, file_) != 8) {
            corrupt("truncated run trailer");
        }
        const std::uint64_t expected = get_u64_le(cnt);
        if (expected != run_records_) {
            corrupt("run trailer count mismatch (decoded " + std::to_string(run_records_) +
                    ", trailer says " + std::to_string(expected) + ")");
        }
        offset_ += 12;
        tape_->bytes_read_ += 12;
        head_ = nullptr;
        tape_->mark_run_consumed(run_);
        return;
    }
    payload_.resize(len);
    if (len > 0 && std::fread(payload_.data(), 1, len, file_) != len) {
        corrupt("truncated record payload");
    }
    Record& slot = slots_[1 - cur_slot_];
    std::size_t used = 0;
    try {
        used = decode_record(payload_.data(), len, *schema_, slot);
    } catch (const CorruptionError& e) {
        corrupt(e.what());
    }
    if (used != len) {
        corrupt("record payload longer than its schema");
    }
    cur_slot_ = 1 - cur_slot_;
    head_ = &slots_[cur_slot_];
    offset_ += 4 + len;
    tape_->bytes_read_ += 4 + len;
    ++run_records_;
}

// ---------------------------------------------------------------------------
// TapeSet

namespace {
std::atomic<std::uint64_t> g_tape_set_seq{0};
}

TapeSet::TapeSet(std::size_t count, const IoConfig& cfg) {
    cfg.validate();
    const std::uint64_t seq = g_tape_set_seq.fetch_add(1);
    dir_ = cfg.spill_directory /
           ("xsort-" + std::to_string(::getpid()) + "-" + std::to_string(seq));
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) {
        throw IoError("cannot create spill directory " + dir_.string() + ": " + ec.message());
    }
    IoConfig local = cfg;
    local.spill_directory = dir_;
    tapes_.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        tapes_.emplace_back(static_cast<int>(i), local);
    }
}

TapeSet::~TapeSet() {
    remove_all_files();
}

std::uint64_t TapeSet::total_bytes_written() const {
    std::uint64_t n = 0;
    for (const Tape& t : tapes_) n += t.bytes_written();
    return n;
}

std::uint64_t TapeSet::total_bytes_read() const {
    std::uint64_t n = 0;
    for (const Tape& t : tapes_) n += t.bytes_read();
    return n;
}

std::uint64_t TapeSet::live_disk_bytes() const {
    std::uint64_t n = 0;
    for (const Tape& t : tapes_) n += t.file_bytes();
    return n;
}

void TapeSet::remove_all_files() noexcept {
    if (removed_) {
        return;
    }
    removed_ = true;
    for (Tape& t : tapes_) {
        t.close_file();
    }
    std::error_code ec;
    fs::remove_all(dir_, ec);
    if (ec) {
        std::cerr << "extsort: could not remove spill directory " << dir_ << ": " << ec.message()
                  << "\n";
    }
}

} // namespace extsort
