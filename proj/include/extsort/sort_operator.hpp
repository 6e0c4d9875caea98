#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "extsort/merge.hpp"
#include "extsort/run_generation.hpp"
#include "extsort/selectors.hpp"
#include "extsort/streams.hpp"
#include "extsort/tape.hpp"

namespace extsort {

struct SortConfig {
    std::size_t memory_budget_bytes = 0;
    std::size_t tape_count = kDefaultTapeCount;
    SelectorKind selector = SelectorKind::LoserTree;
    RunGenMode run_gen_mode = RunGenMode::QuicksortFill;
    std::size_t block_size_records = kDefaultBlockSizeRecords;
    IoConfig io;
    std::optional<std::uint64_t> expected_runs_hint;

    void validate() const; // budget > 0, block >= 1, tapes >= 2, io valid
};

// Everything the bench protocol measures, reconciled with the module
// counters. Field names are the stable metrics-document schema. Tape I/O
// buffers are not part of memory_budget_bytes; the config echo carries both
// numbers.
struct MetricsReport {
    bool complete = false;
    std::string selector;
    std::string run_gen_mode;

    struct RunGeneration {
        std::uint64_t runs = 0;
        std::uint64_t records = 0;
        std::uint64_t comparisons = 0;
        std::uint64_t spill_bytes = 0;
        double wall_ms = 0.0;
    } run_generation;

    struct Merge {
        std::uint64_t passes = 0;
        std::uint64_t comparisons = 0;
        std::uint64_t bytes_read = 0;
        std::uint64_t bytes_written = 0;
        double wall_ms = 0.0;
    } merge;

    struct Emit {
        std::uint64_t blocks = 0;
        double wall_ms = 0.0;
    } emit;

    struct ConfigEcho {
        std::uint64_t memory_budget_bytes = 0;
        std::uint64_t tape_count = 0;
        std::uint64_t block_size_records = 0;
        std::uint64_t read_buffer_bytes = 0;
        std::uint64_t write_buffer_bytes = 0;
        std::optional<std::uint64_t> expected_runs_hint;
    } config;

    std::string to_json() const; // stable field names, 2-space indent
};

// Volcano-style blocking sort operator. Pulls the child to exhaustion on the
// first next() call (run generation + merge), then streams the final run as
// blocks of block_size_records. Output is globally non-decreasing on the
// schema's sort key and is a permutation of the input. Equal-key order is
// unspecified (the in-memory sort is not stable).
class SortOperator {
public:
    enum class Phase { Consuming, Generating, Merging, Emitting, Done };

    SortOperator(SortConfig cfg, std::unique_ptr<RecordBlockStream> child);
    ~SortOperator();
    SortOperator(const SortOperator&) = delete;

    std::optional<RecordBlock> next();

    // Complete once the merge has finished; earlier calls yield a report
    // with complete=false.
    MetricsReport metrics() const;

    // Deletes every spill file; idempotent; never throws.
    void close() noexcept;

    Phase phase() const { return phase_; }
    const Schema* schema() const { return schema_.get(); }

private:
    void run_pipeline(); // consume + generate + merge

    SortConfig cfg_;
    std::unique_ptr<RecordBlockStream> child_;
    std::unique_ptr<Schema> schema_;
    std::unique_ptr<SortKeyComparator> comparator_;
    std::unique_ptr<TapeSet> tapes_;
    std::optional<RunReader> final_reader_;
    Phase phase_ = Phase::Consuming;

    RunGenStats gen_stats_;
    MergeResult merge_result_;
    double merge_wall_ms_ = 0.0;
    std::uint64_t emit_blocks_ = 0;
    double emit_wall_ms_ = 0.0;
    bool merge_done_ = false;
    bool input_empty_ = false;
};

} // namespace extsort
