#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "extsort/record.hpp"

namespace extsort {

enum class SelectorKind { Naive, Heap, LoserTree };

const char* selector_kind_name(SelectorKind k);
std::optional<SelectorKind> parse_selector_kind(std::string_view name);

// Yields the minimum among the current heads of k runs. Heads are records
// owned by the callers' RunReaders; selectors never copy them. An exhausted
// run is represented by a null head and never wins again.
//
// Ties on the full sort key break toward the lowest run index, so all three
// implementations emit bit-identical sequences for the same inputs.
//
// Tournament implementations treat a null head as a record with an infinity
// key; matches against that bound are charged on the comparator counter like
// any other key comparison, keeping the per-operation cost of the loser tree
// exactly one comparison per node on the leaf-to-root path.
class RunSelector {
public:
    virtual ~RunSelector() = default;

    std::size_t k() const { return k_; }
    std::size_t live_count() const { return live_; }

    // Run index holding the current minimum. Usage error when no run is live.
    virtual std::size_t min_run() = 0;

    // Pops the current minimum and installs `next` (nullptr = that run is
    // exhausted) as the new head of the winning run. Returns the popped
    // record, which the caller must consume before its run's reader reuses
    // the slot (see RunReader's two-slot guarantee).
    virtual const Record* pop_and_replace(const Record* next) = 0;

    // Comparator invocations attributable to this selector since build.
    std::uint64_t comparisons_used() const { return cmp_->comparisons() - start_count_; }

protected:
    RunSelector(std::vector<const Record*> heads, SortKeyComparator& cmp);

    // (key, run index) order; null heads are greater than everything. Every
    // call charges exactly one comparison.
    bool entry_less(const Record* a, std::size_t run_a, const Record* b, std::size_t run_b);

    void require_live() const;

    std::vector<const Record*> heads_;
    SortKeyComparator* cmp_;
    std::size_t k_;
    std::size_t live_;
    std::uint64_t start_count_;
};

std::unique_ptr<RunSelector> build_selector(SelectorKind kind,
                                            std::vector<const Record*> heads,
                                            SortKeyComparator& cmp);

// Linear scan over the k heads: live_count-1 comparisons per pop.
class NaiveSelector final : public RunSelector {
public:
    NaiveSelector(std::vector<const Record*> heads, SortKeyComparator& cmp);
    std::size_t min_run() override;
    const Record* pop_and_replace(const Record* next) override;

private:
    std::size_t scan_min();
    std::size_t cached_min_ = 0;
    bool cache_valid_ = false;
};

// Binary min-heap of (head, run). Replacement pops the root (sift-down) and
// inserts the run's next record (sift-up); an exhausted run's entry is
// simply removed.
class HeapSelector final : public RunSelector {
public:
    HeapSelector(std::vector<const Record*> heads, SortKeyComparator& cmp);
    std::size_t min_run() override;
    const Record* pop_and_replace(const Record* next) override;

private:
    struct Entry {
        const Record* rec;
        std::size_t run;
    };
    bool entry_less(const Entry& a, const Entry& b) {
        return RunSelector::entry_less(a.rec, a.run, b.rec, b.run);
    }
    void sift_down(std::size_t i);
    void sift_up(std::size_t i);
    std::vector<Entry> entries_;
};

// Tournament tree whose internal nodes store match losers; a separate slot
// holds the overall winner. k is padded to a power of two with infinity
// leaves. Replacement walks one leaf-to-root path: exactly log2(k_padded)
// comparisons.
class LoserTreeSelector final : public RunSelector {
public:
    LoserTreeSelector(std::vector<const Record*> heads, SortKeyComparator& cmp);
    std::size_t min_run() override;
    const Record* pop_and_replace(const Record* next) override;

    std::size_t padded_k() const { return padded_; }
    // Node array (index 0 = winner slot, 1..padded-1 = losers), as run
    // indices. Exposed for tests.
    std::vector<std::size_t> node_runs() const { return nodes_; }

private:
    const Record* head_of(std::size_t slot) const {
        return slot < k_ ? heads_[slot] : nullptr;
    }
    std::size_t play_match(std::size_t node); // build recursion, returns winner slot

    std::size_t padded_;
    std::vector<std::size_t> nodes_;
};

} // namespace extsort
