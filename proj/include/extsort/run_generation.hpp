#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "extsort/merge.hpp"
#include "extsort/record.hpp"
#include "extsort/streams.hpp"
#include "extsort/tape.hpp"

namespace extsort {

enum class RunGenMode { QuicksortFill, ReplacementSelection };

const char* run_gen_mode_name(RunGenMode m);
std::optional<RunGenMode> parse_run_gen_mode(std::string_view name);

// Byte accounting for buffered records: serialized size plus the constants
// in config.hpp. used_bytes never exceeds limit_bytes at an admission point.
struct MemoryBudget {
    std::size_t limit_bytes = 0;
    std::size_t used_bytes = 0;

    bool fits(std::size_t more) const { return used_bytes + more <= limit_bytes; }
    void admit(std::size_t more);
    void reset() { used_bytes = 0; }
};

// In-memory pointer sort: introsort-style hybrid (median-of-three quicksort,
// heapsort below a depth limit, insertion sort on small ranges; cutoffs in
// config.hpp). Permutes the references only; records are not moved.
void introsort_pointers(std::span<Record*> refs, SortKeyComparator& cmp);

// Replacement selection over a budget-bound tournament. Emits a stream of
// records grouped into maximal sorted runs: a record smaller than the last
// output is deferred to the next run; when every buffered entry is deferred,
// the current run closes. Mean run length on random input approaches twice
// the buffered capacity.
class ReplacementSelector {
public:
    ReplacementSelector(RecordStream& input, std::size_t limit_bytes, const Schema& schema,
                        SortKeyComparator& cmp);

    struct Output {
        Record record;
        bool starts_new_run = false; // true on the first record of runs 2..n
    };

    std::optional<Output> next();

private:
    struct Slot {
        Record rec;
        std::uint64_t epoch = 0;
        std::size_t bytes = 0;
        bool occupied = false;
    };

    bool slot_less(std::size_t a, std::size_t b);
    std::size_t build_match(std::size_t node);
    void replay(std::size_t slot);

    RecordStream* input_;
    const Schema* schema_;
    SortKeyComparator* cmp_;
    MemoryBudget budget_;
    std::vector<Slot> slots_;
    std::vector<std::size_t> nodes_; // loser tree over slots; [0] = winner
    std::size_t padded_ = 1;
    std::uint64_t cur_epoch_ = 0;
    Record last_output_;
    bool have_last_output_ = false;
    std::optional<Record> pending_; // input record waiting for budget space
    bool input_done_ = false;
    std::size_t occupied_count_ = 0;
};

struct RunGenStats {
    std::uint64_t runs = 0;
    std::uint64_t records = 0;
    std::uint64_t comparisons = 0;
    std::uint64_t spill_bytes = 0;
    double wall_ms = 0.0;
};

using InMemorySort = std::function<void(std::span<Record*>, SortKeyComparator&)>;

// Drains the input into sorted runs on the tapes, placing each run on the
// tape chosen by the distributor. Throws UnsortableRecordError when a single
// record exceeds the whole budget.
RunGenStats generate_runs(RecordStream& input, RunGenMode mode, MemoryBudget budget,
                          const Schema& schema, SortKeyComparator& cmp, TapeSet& tapes,
                          OnlineRunDistributor& dist, const InMemorySort& sorter = {});

} // namespace extsort
