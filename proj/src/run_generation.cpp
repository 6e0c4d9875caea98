#include "extsort/run_generation.hpp"

#include <bit>
#include <cassert>
#include <chrono>

#include "extsort/errors.hpp"

namespace extsort {

const char* run_gen_mode_name(RunGenMode m) {
    switch (m) {
    case RunGenMode::QuicksortFill: return "quicksort";
    case RunGenMode::ReplacementSelection: return "replacement";
    }
    return "?";
}

std::optional<RunGenMode> parse_run_gen_mode(std::string_view name) {
    if (name == "quicksort" || name == "quicksort-fill") return RunGenMode::QuicksortFill;
    if (name == "replacement" || name == "replacement-selection") {
        return RunGenMode::ReplacementSelection;
    }
    return std::nullopt;
}

void MemoryBudget::admit(std::size_t more) {
    if (!fits(more)) {
        throw UsageError("memory budget exceeded at admission");
    }
    used_bytes += more;
}

// ---------------------------------------------------------------------------
// Introsort over record pointers

namespace {

using Ref = Record*;

void insertion_sort(Ref* lo, Ref* hi, SortKeyComparator& cmp) {
    for (Ref* i = lo + 1; i < hi; ++i) {
        Ref v = *i;
        Ref* j = i;
        while (j > lo && cmp.less(*v, **(j - 1))) {
            *j = *(j - 1);
            --j;
        }
        *j = v;
    }
}

void sift_down_refs(Ref* lo, std::size_t i, std::size_t n, SortKeyComparator& cmp) {
    while (true) {
        const std::size_t l = 2 * i + 1;
        if (l >= n) return;
        std::size_t child = l;
        if (l + 1 < n && cmp.less(*lo[l], *lo[l + 1])) {
            child = l + 1;
        }
        if (!cmp.less(*lo[i], *lo[child])) {
            return;
        }
        std::swap(lo[i], lo[child]);
        i = child;
    }
}

void heapsort_refs(Ref* lo, Ref* hi, SortKeyComparator& cmp) {
    const std::size_t n = static_cast<std::size_t>(hi - lo);
    if (n < 2) return;
    for (std::size_t i = n / 2; i-- > 0;) {
        sift_down_refs(lo, i, n, cmp);
    }
    for (std::size_t end = n - 1; end > 0; --end) {
        std::swap(lo[0], lo[end]);
        sift_down_refs(lo, 0, end, cmp);
    }
}

// Sorts {*a, *b, *c} in place and returns the median element.
Ref median_of_three(Ref* a, Ref* b, Ref* c, SortKeyComparator& cmp) {
    if (cmp.less(**b, **a)) std::swap(*a, *b);
    if (cmp.less(**c, **b)) {
        std::swap(*b, *c);
        if (cmp.less(**b, **a)) std::swap(*a, *b);
    }
    return *b;
}

void intro_loop(Ref* lo, Ref* hi, int depth, SortKeyComparator& cmp) {
    while (static_cast<std::size_t>(hi - lo) > kInsertionSortThreshold) {
        if (depth == 0) {
            heapsort_refs(lo, hi, cmp);
            return;
        }
        --depth;
        Ref pivot = median_of_three(lo, lo + (hi - lo) / 2, hi - 1, cmp);
        // Hoare partition; the pivot value is one of the range's elements,
        // so both inner scans are guarded.
        Ref* i = lo - 1;
        Ref* j = hi;
        while (true) {
            do {
                ++i;
            } while (cmp.less(**i, *pivot));
            do {
                --j;
            } while (cmp.less(*pivot, **j));
            if (i >= j) break;
            std::swap(*i, *j);
        }
        Ref* split = j + 1;
        // Recurse into the smaller side, iterate on the larger.
        if (split - lo < hi - split) {
            intro_loop(lo, split, depth, cmp);
            lo = split;
        } else {
            intro_loop(split, hi, depth, cmp);
            hi = split;
        }
    }
    insertion_sort(lo, hi, cmp);
}

} // namespace

void introsort_pointers(std::span<Record*> refs, SortKeyComparator& cmp) {
    if (refs.size() < 2) return;
    const int depth = kQuicksortDepthFactor *
                      (std::bit_width(refs.size()) - 1); // factor * floor(log2 n)
    intro_loop(refs.data(), refs.data() + refs.size(), depth, cmp);
}

// ---------------------------------------------------------------------------
// Replacement selection

ReplacementSelector::ReplacementSelector(RecordStream& input, std::size_t limit_bytes,
                                         const Schema& schema, SortKeyComparator& cmp)
    : input_(&input), schema_(&schema), cmp_(&cmp) {
    budget_.limit_bytes = limit_bytes;

    // Initial fill: admit records until the budget is full; the number of
    // records that fit fixes the tournament's slot count.
    std::vector<Slot> filled;
    while (true) {
        std::optional<Record> r = input_->next();
        if (!r) {
            input_done_ = true;
            break;
        }
        const std::size_t bytes = accounted_record_size(*r);
        if (bytes > budget_.limit_bytes) {
            throw UnsortableRecordError("record of " + std::to_string(bytes) +
                                        " accounted bytes exceeds the memory budget");
        }
        if (!budget_.fits(bytes)) {
            pending_ = std::move(*r);
            break;
        }
        budget_.admit(bytes);
        Slot s;
        s.rec = std::move(*r);
        s.bytes = bytes;
        s.epoch = 0;
        s.occupied = true;
        filled.push_back(std::move(s));
    }
    if (filled.size() < 2 && pending_) {
        throw UsageError("replacement selection needs a budget that fits at least 2 records");
    }
    slots_ = std::move(filled);
    occupied_count_ = slots_.size();
    padded_ = std::bit_ceil(std::max<std::size_t>(slots_.size(), 1));
    nodes_.assign(padded_, 0);
    if (padded_ > 1) {
        nodes_[0] = build_match(1);
    }
}

std::size_t ReplacementSelector::build_match(std::size_t node) {
    if (node >= padded_) {
        return node - padded_;
    }
    const std::size_t left = build_match(2 * node);
    const std::size_t right = build_match(2 * node + 1);
    if (slot_less(left, right)) {
        nodes_[node] = right;
        return left;
    }
    nodes_[node] = left;
    return right;
}

bool ReplacementSelector::slot_less(std::size_t a, std::size_t b) {
    const bool oa = a < slots_.size() && slots_[a].occupied;
    const bool ob = b < slots_.size() && slots_[b].occupied;
    if (oa && ob) {
        const Slot& sa = slots_[a];
        const Slot& sb = slots_[b];
        if (sa.epoch != sb.epoch) {
            return sa.epoch < sb.epoch;
        }
        const Ordering o = cmp_->compare(sa.rec, sb.rec);
        if (o != Ordering::Equal) {
            return o == Ordering::Less;
        }
        return a < b;
    }
    if (oa) return true;
    if (ob) return false;
    return a < b;
}

void ReplacementSelector::replay(std::size_t slot) {
    std::size_t winner = slot;
    for (std::size_t node = (slot + padded_) / 2; node >= 1; node /= 2) {
        const std::size_t other = nodes_[node];
        if (slot_less(other, winner)) {
            nodes_[node] = winner;
            winner = other;
        }
    }
    nodes_[0] = winner;
}

std::optional<ReplacementSelector::Output> ReplacementSelector::next() {
    if (occupied_count_ == 0) {
        return std::nullopt;
    }
    const std::size_t w = nodes_[0]; // winner leaf is occupied by invariant
    Slot& s = slots_[w];
    Output out;
    out.starts_new_run = s.epoch > cur_epoch_;
    if (out.starts_new_run) {
        cur_epoch_ = s.epoch;
    }
    last_output_ = s.rec;
    have_last_output_ = true;
    out.record = std::move(s.rec);
    s.occupied = false;
    budget_.used_bytes -= s.bytes;
    --occupied_count_;

    // Replacement discipline: the next input record takes the winner's slot
    // if it fits the freed budget, tagged for the next run when it sorts
    // below the record just output. A path replay is only sound at the
    // winner leaf, so the slot update and the replay stay one operation.
    if (!pending_ && !input_done_) {
        pending_ = input_->next();
        if (!pending_) {
            input_done_ = true;
        }
    }
    if (pending_) {
        const std::size_t bytes = accounted_record_size(*pending_);
        if (bytes > budget_.limit_bytes) {
            throw UnsortableRecordError("record of " + std::to_string(bytes) +
                                        " accounted bytes exceeds the memory budget");
        }
        if (budget_.fits(bytes)) {
            s.rec = std::move(*pending_);
            pending_.reset();
            s.bytes = bytes;
            s.occupied = true;
            s.epoch = cmp_->compare(s.rec, last_output_) == Ordering::Less ? cur_epoch_ + 1
                                                                           : cur_epoch_;
            budget_.admit(bytes);
            ++occupied_count_;
        }
    }
    replay(w);
    return out;
}

// ---------------------------------------------------------------------------
// generate_runs

RunGenStats generate_runs(RecordStream& input, RunGenMode mode, MemoryBudget budget,
                          const Schema& schema, SortKeyComparator& cmp, TapeSet& tapes,
                          OnlineRunDistributor& dist, const InMemorySort& sorter) {
    const auto t0 = std::chrono::steady_clock::now();
    RunGenStats stats;
    const std::uint64_t cmp0 = cmp.comparisons();
    const std::uint64_t bytes0 = tapes.total_bytes_written();
    const InMemorySort& sort_fn =
        sorter ? sorter : [](std::span<Record*> refs, SortKeyComparator& c) {
            introsort_pointers(refs, c);
        };

    if (mode == RunGenMode::QuicksortFill) {
        std::vector<Record> buffer;
        auto flush = [&]() {
            if (buffer.empty()) return;
            std::vector<Record*> refs;
            refs.reserve(buffer.size());
            for (Record& r : buffer) refs.push_back(&r);
            sort_fn(refs, cmp);
            Tape& tape = tapes.tape(dist.select_tape_for_next_run());
            RunWriter w = tape.begin_run(schema);
            for (Record* r : refs) {
                w.append(*r);
            }
            w.finish();
            ++stats.runs;
            stats.records += buffer.size();
            buffer.clear();
            budget.reset();
        };
        while (std::optional<Record> r = input.next()) {
            const std::size_t bytes = accounted_record_size(*r);
            if (bytes > budget.limit_bytes) {
                throw UnsortableRecordError("record of " + std::to_string(bytes) +
                                            " accounted bytes exceeds the memory budget of " +
                                            std::to_string(budget.limit_bytes));
            }
            if (!budget.fits(bytes)) {
                flush();
            }
            budget.admit(bytes);
            buffer.push_back(std::move(*r));
        }
        flush();
    } else {
        ReplacementSelector rs(input, budget.limit_bytes, schema, cmp);
        std::optional<RunWriter> writer;
        while (std::optional<ReplacementSelector::Output> out = rs.next()) {
            if (!writer || out->starts_new_run) {
                if (writer) writer->finish();
                Tape& tape = tapes.tape(dist.select_tape_for_next_run());
                writer.emplace(tape.begin_run(schema));
                ++stats.runs;
            }
            writer->append(out->record);
            ++stats.records;
        }
        if (writer) {
            writer->finish();
        }
    }

    stats.comparisons = cmp.comparisons() - cmp0;
    stats.spill_bytes = tapes.total_bytes_written() - bytes0;
    stats.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    return stats;
}

} // namespace extsort
