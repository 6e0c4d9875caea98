#include "extsort/merge.hpp"

#include <algorithm>
#include <chrono>

#include "extsort/errors.hpp"

namespace extsort {

std::vector<std::uint64_t> polyphase_targets(int level, std::size_t input_tapes) {
    std::vector<std::uint64_t> t(input_tapes, 0);
    if (input_tapes == 0) {
        return t;
    }
    if (level <= 0) {
        t[0] = 1;
        return t;
    }
    t.assign(input_tapes, 1);
    std::vector<std::uint64_t> next(input_tapes);
    for (int l = 1; l < level; ++l) {
        for (std::size_t i = 0; i + 1 < input_tapes; ++i) {
            next[i] = t[0] + t[i + 1];
        }
        next[input_tapes - 1] = t[0];
        t = next;
    }
    return t;
}

MergePlan plan_distribution(std::uint64_t total_runs, std::size_t tape_count) {
    if (tape_count < 2) {
        throw UsageError("merging needs at least 2 tapes");
    }
    OnlineRunDistributor dist(tape_count);
    for (std::uint64_t i = 0; i < total_runs; ++i) {
        dist.select_tape_for_next_run();
    }
    return dist.finalize();
}

OnlineRunDistributor::OnlineRunDistributor(std::size_t tape_count,
                                           std::optional<std::uint64_t> expected_runs_hint)
    : tape_count_(tape_count), input_tapes_(tape_count > 1 ? tape_count - 1 : 1) {
    if (tape_count < 2) {
        throw UsageError("merging needs at least 2 tapes");
    }
    counts_.assign(tape_count_, 0);
    adopt_level(1);
    if (expected_runs_hint && tape_count_ >= 3) {
        std::uint64_t sum = input_tapes_;
        while (sum < *expected_runs_hint) {
            adopt_level(level_ + 1);
            sum = 0;
            for (std::uint64_t t : targets_) sum += t;
        }
    }
}

void OnlineRunDistributor::adopt_level(int level) {
    level_ = level;
    targets_ = polyphase_targets(level, input_tapes_);
}

std::size_t OnlineRunDistributor::select_tape_for_next_run() {
    if (tape_count_ == 2) {
        // Polyphase cannot progress with a single input tape; everything
        // lands on tape 0 and the merge is a single multiway pass.
        ++counts_[0];
        ++total_;
        return 0;
    }
    std::uint64_t sum = 0;
    for (std::uint64_t t : targets_) sum += t;
    if (total_ >= sum) {
        adopt_level(level_ + 1);
    }
    std::size_t best = 0;
    std::int64_t best_deficit = -1;
    for (std::size_t i = 0; i < input_tapes_; ++i) {
        const std::int64_t deficit =
            static_cast<std::int64_t>(targets_[i]) - static_cast<std::int64_t>(counts_[i]);
        if (deficit > best_deficit) {
            best_deficit = deficit;
            best = i;
        }
    }
    ++counts_[best];
    ++total_;
    return best;
}

MergePlan OnlineRunDistributor::finalize() const {
    MergePlan plan;
    plan.tape_count = tape_count_;
    plan.total_runs = total_;
    if (tape_count_ == 2 || total_ < tape_count_) {
        plan.kind = MergePatternKind::SinglePassMultiway;
        plan.predicted_passes = total_ > 1 ? 1 : 0;
        return plan;
    }
    plan.kind = MergePatternKind::Polyphase;
    // Smallest level whose targets dominate the actual per-tape placement.
    int level = 1;
    std::vector<std::uint64_t> targets;
    while (true) {
        targets = polyphase_targets(level, input_tapes_);
        bool dominates = true;
        for (std::size_t i = 0; i < input_tapes_; ++i) {
            if (counts_[i] > targets[i]) {
                dominates = false;
                break;
            }
        }
        if (dominates) break;
        ++level;
    }
    plan.predicted_passes = level;
    plan.tape_targets.assign(tape_count_, 0);
    plan.dummy_runs.assign(tape_count_, 0);
    for (std::size_t i = 0; i < input_tapes_; ++i) {
        plan.tape_targets[i] = targets[i];
        plan.dummy_runs[i] = targets[i] - counts_[i];
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Merge execution

std::uint64_t MergeResult::total_comparisons() const {
    std::uint64_t n = 0;
    for (const MergePassStats& p : passes) n += p.comparisons;
    return n;
}

std::uint64_t MergeResult::total_bytes_read() const {
    std::uint64_t n = 0;
    for (const MergePassStats& p : passes) n += p.bytes_read;
    return n;
}

std::uint64_t MergeResult::total_bytes_written() const {
    std::uint64_t n = 0;
    for (const MergePassStats& p : passes) n += p.bytes_written;
    return n;
}

namespace {

// Merges the readers' current runs into one output run. Readers must be
// positioned via next_run(); exhausted (dummy) runs enter as null heads.
void merge_run_group(std::vector<RunReader*>& readers, RunWriter& writer,
                     SelectorKind kind, SortKeyComparator& cmp) {
    std::vector<const Record*> heads;
    heads.reserve(readers.size());
    for (RunReader* r : readers) {
        heads.push_back(r->head());
    }
    std::unique_ptr<RunSelector> sel = build_selector(kind, std::move(heads), cmp);
    while (sel->live_count() > 0) {
        const std::size_t win = sel->min_run();
        RunReader& rd = *readers[win];
        rd.advance();
        // The previous head stays valid until the reader's next advance
        // (two-slot guarantee), so it can be serialized after replacement.
        const Record* popped = sel->pop_and_replace(rd.head());
        writer.append(*popped);
    }
}

struct PassTimer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start)
            .count();
    }
};

} // namespace

MergeResult merge_all(TapeSet& tapes, const MergePlan& plan, SelectorKind selector,
                      const Schema& schema, SortKeyComparator& cmp, const IoConfig& io,
                      const MergePassObserver& observer) {
    MergeResult result;
    const std::size_t T = tapes.size();

    std::uint64_t total_runs = 0;
    for (std::size_t i = 0; i < T; ++i) {
        total_runs += tapes.tape(i).run_count();
    }
    if (total_runs == 0) {
        throw UsageError("merge_all with no runs");
    }

    // Reading side for every tape that holds runs; empty tapes stay writable
    // as output candidates.
    for (std::size_t i = 0; i < T; ++i) {
        if (tapes.tape(i).run_count() > 0 && tapes.tape(i).mode() == Tape::Mode::Writing) {
            tapes.tape(i).rewind();
        }
    }

    if (total_runs == 1) {
        for (std::size_t i = 0; i < T; ++i) {
            if (tapes.tape(i).run_count() == 1) {
                result.final_tape = i;
                result.final_run = 0;
                return result;
            }
        }
    }

    std::vector<std::size_t> next_run(T, 0);
    auto remaining = [&](std::size_t i) {
        return tapes.tape(i).run_count() - next_run[i];
    };
    auto find_output = [&]() -> std::size_t {
        for (std::size_t i = 0; i < T; ++i) {
            if (tapes.tape(i).mode() == Tape::Mode::Writing &&
                tapes.tape(i).run_count() == 0) {
                return i;
            }
        }
        throw UsageError("no empty tape available as merge output");
    };

    if (plan.kind == MergePatternKind::SinglePassMultiway) {
        PassTimer timer;
        const std::uint64_t cmp0 = cmp.comparisons();
        const std::uint64_t rd0 = tapes.total_bytes_read();
        const std::uint64_t wr0 = tapes.total_bytes_written();
        const std::size_t out = find_output();

        std::vector<RunReader> readers;
        readers.reserve(total_runs);
        const std::size_t buf =
            std::max(kMinIoBufferBytes, io.read_buffer_bytes / total_runs);
        for (std::size_t i = 0; i < T; ++i) {
            Tape& t = tapes.tape(i);
            for (std::size_t r = 0; r < t.run_count(); ++r) {
                readers.push_back(t.open_reader(schema, r, buf));
                readers.back().next_run();
            }
        }
        std::vector<RunReader*> group;
        group.reserve(readers.size());
        for (RunReader& r : readers) group.push_back(&r);

        RunWriter writer = tapes.tape(out).begin_run(schema);
        merge_run_group(group, writer, selector, cmp);
        const std::uint64_t moved = writer.records_written();
        writer.finish();

        MergePassStats stats;
        stats.pass_index = 0;
        stats.runs_consumed = total_runs;
        stats.records_moved = moved;
        stats.comparisons = cmp.comparisons() - cmp0;
        stats.bytes_read = tapes.total_bytes_read() - rd0;
        stats.bytes_written = tapes.total_bytes_written() - wr0;
        stats.wall_ms = timer.elapsed_ms();
        result.passes.push_back(stats);
        if (observer) {
            observer(stats, tapes.live_disk_bytes());
        }
        readers.clear(); // close handles before releasing files
        for (std::size_t i = 0; i < T; ++i) {
            if (i != out && tapes.tape(i).mode() == Tape::Mode::Reading) {
                tapes.tape(i).release_consumed();
            }
        }
        tapes.tape(out).rewind();
        result.final_tape = out;
        result.final_run = 0;
        return result;
    }

    // Polyphase: each pass merges run groups until at least one input tape
    // runs dry; the emptied tape's file is reclaimed and the tape becomes
    // the next output.
    int pass_index = 0;
    std::uint64_t live_total = total_runs;
    while (live_total > 1) {
        PassTimer timer;
        const std::uint64_t cmp0 = cmp.comparisons();
        const std::uint64_t rd0 = tapes.total_bytes_read();
        const std::uint64_t wr0 = tapes.total_bytes_written();

        const std::size_t out = find_output();
        std::vector<std::size_t> inputs;
        std::uint64_t group_count = UINT64_MAX;
        for (std::size_t i = 0; i < T; ++i) {
            if (i != out && remaining(i) > 0) {
                inputs.push_back(i);
                group_count = std::min<std::uint64_t>(group_count, remaining(i));
            }
        }

        std::vector<RunReader> readers;
        readers.reserve(inputs.size());
        const std::size_t buf =
            std::max(kMinIoBufferBytes, io.read_buffer_bytes / inputs.size());
        for (std::size_t i : inputs) {
            readers.push_back(tapes.tape(i).open_reader(schema, next_run[i], buf));
        }

        std::uint64_t moved = 0;
        for (std::uint64_t g = 0; g < group_count; ++g) {
            std::vector<RunReader*> group;
            group.reserve(readers.size());
            for (RunReader& r : readers) {
                r.next_run();
                group.push_back(&r);
            }
            RunWriter writer = tapes.tape(out).begin_run(schema);
            merge_run_group(group, writer, selector, cmp);
            moved += writer.records_written();
            writer.finish();
        }
        readers.clear();
        for (std::size_t i : inputs) {
            next_run[i] += group_count;
        }
        live_total = live_total - group_count * inputs.size() + group_count;

        MergePassStats stats;
        stats.pass_index = pass_index++;
        stats.runs_consumed = group_count * inputs.size();
        stats.records_moved = moved;
        stats.comparisons = cmp.comparisons() - cmp0;
        stats.bytes_read = tapes.total_bytes_read() - rd0;
        stats.bytes_written = tapes.total_bytes_written() - wr0;
        stats.wall_ms = timer.elapsed_ms();
        result.passes.push_back(stats);
        if (observer) {
            observer(stats, tapes.live_disk_bytes());
        }

        // Reclaim the runs this pass consumed; emptied tapes are reused as
        // future outputs.
        for (std::size_t i : inputs) {
            tapes.tape(i).release_consumed();
            if (remaining(i) == 0 && live_total > 1) {
                tapes.tape(i).reset_for_writing();
                next_run[i] = 0;
            }
        }
        if (live_total > 1) {
            tapes.tape(out).rewind();
        }
    }

    for (std::size_t i = 0; i < T; ++i) {
        if (remaining(i) > 0) {
            result.final_tape = i;
            result.final_run = next_run[i];
            if (tapes.tape(i).mode() == Tape::Mode::Writing) {
                tapes.tape(i).rewind();
            }
            return result;
        }
    }
    throw UsageError("merge finished without a final run");
}

} // namespace extsort
