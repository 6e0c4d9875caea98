#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "extsort/selectors.hpp"
#include "extsort/tape.hpp"

namespace extsort {

enum class MergePatternKind { Polyphase, SinglePassMultiway };

// Resolved merge pattern for a known run total.
//
// Polyphase targets follow the generalized Fibonacci recurrence for
// (T-1)-way merging: level 1 is one run per input tape, and level n+1
// assigns tape i the level-n maximum plus the level-n count of tape i+1.
// tape_targets[tape_count-1] is the initial output tape and always 0.
struct MergePlan {
    MergePatternKind kind = MergePatternKind::SinglePassMultiway;
    std::size_t tape_count = 0;
    std::uint64_t total_runs = 0;
    std::vector<std::uint64_t> tape_targets; // per tape, polyphase only
    std::vector<std::uint64_t> dummy_runs;   // per tape, polyphase only
    int predicted_passes = 0;

    std::uint64_t total_dummies() const {
        std::uint64_t n = 0;
        for (std::uint64_t d : dummy_runs) n += d;
        return n;
    }
};

// Smallest perfect distribution covering total_runs, or single-pass multiway
// when tapes outnumber runs (and for T=2, where polyphase cannot make
// progress). Config error for tape_count < 2.
MergePlan plan_distribution(std::uint64_t total_runs, std::size_t tape_count);

// Perfect-distribution targets (per input tape, descending) for a level.
// Level 0 is the finished state {1, 0, ...}; level 1 is one run everywhere.
std::vector<std::uint64_t> polyphase_targets(int level, std::size_t input_tapes);

// Assigns each generated run to a tape while the total is still unknown.
// Runs go to the input tape with the largest deficit against the current
// level's targets; when the level fills up, the next level is adopted. An
// expected-run-count hint pre-advances the level (a hint overshoot can
// therefore cost one extra level; the tail is never redistributed).
class OnlineRunDistributor {
public:
    OnlineRunDistributor(std::size_t tape_count,
                         std::optional<std::uint64_t> expected_runs_hint = std::nullopt);

    std::size_t select_tape_for_next_run();

    std::uint64_t runs_assigned() const { return total_; }
    const std::vector<std::uint64_t>& per_tape_counts() const { return counts_; }

    // Resolves the pattern for the actual total: multiway needs no dummies;
    // polyphase takes the smallest level whose targets dominate the actual
    // per-tape placement.
    MergePlan finalize() const;

private:
    void adopt_level(int level);

    std::size_t tape_count_;
    std::size_t input_tapes_;
    int level_ = 0;
    std::vector<std::uint64_t> targets_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

// One polyphase phase (or the single multiway pass): k-way merges repeated
// until one input tape runs dry.
struct MergePassStats {
    int pass_index = 0;
    std::uint64_t runs_consumed = 0;
    std::uint64_t records_moved = 0;
    std::uint64_t comparisons = 0;
    std::uint64_t bytes_read = 0;
    std::uint64_t bytes_written = 0;
    double wall_ms = 0.0;
};

struct MergeResult {
    std::size_t final_tape = 0;     // tape holding the single remaining run
    std::size_t final_run = 0;      // its run index on that tape
    std::vector<MergePassStats> passes;

    std::uint64_t total_comparisons() const;
    std::uint64_t total_bytes_read() const;
    std::uint64_t total_bytes_written() const;
};

// Called after each pass completes, before the emptied tapes' files are
// released: the per-pass spill high-water mark under per-file reclamation.
using MergePassObserver = std::function<void(const MergePassStats&, std::uint64_t disk_bytes)>;

// Merges the distributed runs down to a single run. Tapes must hold the
// plan's runs (dummies included) and still be in writing mode; merge_all
// rewinds them. Emptied tape files are released after every pass.
MergeResult merge_all(TapeSet& tapes, const MergePlan& plan, SelectorKind selector,
                      const Schema& schema, SortKeyComparator& cmp, const IoConfig& io,
                      const MergePassObserver& observer = {});

} // namespace extsort
