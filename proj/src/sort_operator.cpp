#include "extsort/sort_operator.hpp"

#include <chrono>

#include <nlohmann/json.hpp>

#include "extsort/errors.hpp"

namespace extsort {

void SortConfig::validate() const {
    if (memory_budget_bytes == 0) {
        throw UsageError("memory budget must be positive");
    }
    if (block_size_records == 0) {
        throw UsageError("block size must be at least 1 record");
    }
    if (tape_count < 2) {
        throw UsageError("tape count must be at least 2");
    }
    io.validate();
}

namespace {

const char* phase_name(SortOperator::Phase p) {
    switch (p) {
    case SortOperator::Phase::Consuming: return "consuming";
    case SortOperator::Phase::Generating: return "generating";
    case SortOperator::Phase::Merging: return "merging";
    case SortOperator::Phase::Emitting: return "emitting";
    case SortOperator::Phase::Done: return "done";
    }
    return "?";
}

} // namespace

SortOperator::SortOperator(SortConfig cfg, std::unique_ptr<RecordBlockStream> child)
    : cfg_(std::move(cfg)), child_(std::move(child)) {
    cfg_.validate();
    if (!child_) {
        throw UsageError("sort operator needs a child stream");
    }
    // Lazy: no I/O until the first next().
}

SortOperator::~SortOperator() {
    close();
}

void SortOperator::close() noexcept {
    if (tapes_) {
        tapes_->remove_all_files();
    }
    final_reader_.reset();
    tapes_.reset();
    phase_ = Phase::Done;
}

void SortOperator::run_pipeline() {
    // Phase tags mark forward progress for error context: consuming covers
    // the run-generation loop (child reads interleave with spills),
    // generating the final flush + plan finalization, merging the passes.
    phase_ = Phase::Consuming;
    BlockRecordStream records(*child_);

    // The schema travels with the first block; peek it before budget checks.
    std::optional<Record> first = records.next();
    if (!first) {
        input_empty_ = true;
        merge_done_ = true;
        phase_ = Phase::Emitting;
        return;
    }
    schema_ = std::make_unique<Schema>(*records.schema());
    comparator_ = std::make_unique<SortKeyComparator>(*schema_);
    tapes_ = std::make_unique<TapeSet>(cfg_.tape_count, cfg_.io);

    // Re-chain the peeked record in front of the stream.
    struct Chained final : RecordStream {
        std::optional<Record> head;
        RecordStream* rest;
        std::optional<Record> next() override {
            if (head) {
                std::optional<Record> r = std::move(head);
                head.reset();
                return r;
            }
            return rest->next();
        }
    } chained;
    chained.head = std::move(first);
    chained.rest = &records;

    OnlineRunDistributor dist(cfg_.tape_count, cfg_.expected_runs_hint);
    MemoryBudget budget{cfg_.memory_budget_bytes, 0};
    gen_stats_ = generate_runs(chained, cfg_.run_gen_mode, budget, *schema_, *comparator_,
                               *tapes_, dist);

    phase_ = Phase::Generating;
    MergePlan plan = dist.finalize();
    if (plan.kind == MergePatternKind::Polyphase) {
        for (std::size_t i = 0; i < tapes_->size(); ++i) {
            for (std::uint64_t d = 0; d < plan.dummy_runs[i]; ++d) {
                tapes_->tape(i).begin_run(*schema_).finish();
            }
        }
    }

    phase_ = Phase::Merging;
    const auto t0 = std::chrono::steady_clock::now();
    merge_result_ = merge_all(*tapes_, plan, cfg_.selector, *schema_, *comparator_, cfg_.io);
    merge_wall_ms_ =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    merge_done_ = true;

    phase_ = Phase::Emitting;
    Tape& final_tape = tapes_->tape(merge_result_.final_tape);
    final_reader_.emplace(
        final_tape.open_reader(*schema_, merge_result_.final_run, cfg_.io.read_buffer_bytes));
    final_reader_->next_run();
}

std::optional<RecordBlock> SortOperator::next() {
    if (phase_ == Phase::Done) {
        return std::nullopt;
    }
    try {
        if (phase_ == Phase::Consuming) {
            run_pipeline();
        }
        if (input_empty_) {
            phase_ = Phase::Done;
            return std::nullopt;
        }
        const auto t0 = std::chrono::steady_clock::now();
        RecordBlock block;
        block.schema = schema_.get();
        block.records.reserve(cfg_.block_size_records);
        while (block.records.size() < cfg_.block_size_records && final_reader_->head()) {
            block.records.push_back(*final_reader_->head());
            final_reader_->advance();
        }
        emit_wall_ms_ += std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        if (block.records.empty()) {
            phase_ = Phase::Done;
            close();
            return std::nullopt;
        }
        ++emit_blocks_;
        return block;
    } catch (const UnsortableRecordError&) {
        throw;
    } catch (const UsageError& e) {
        throw UsageError(std::string("[") + phase_name(phase_) + "] " + e.what());
    } catch (const IoError& e) {
        throw IoError(std::string("[") + phase_name(phase_) + "] " + e.what());
    } catch (const CorruptionError& e) {
        throw CorruptionError(std::string("[") + phase_name(phase_) + "] " + e.what());
    }
}

MetricsReport SortOperator::metrics() const {
    MetricsReport m;
    m.complete = merge_done_;
    m.selector = selector_kind_name(cfg_.selector);
    m.run_gen_mode = run_gen_mode_name(cfg_.run_gen_mode);
    m.run_generation.runs = gen_stats_.runs;
    m.run_generation.records = gen_stats_.records;
    m.run_generation.comparisons = gen_stats_.comparisons;
    m.run_generation.spill_bytes = gen_stats_.spill_bytes;
    m.run_generation.wall_ms = gen_stats_.wall_ms;
    m.merge.passes = merge_result_.passes.size();
    m.merge.comparisons = merge_result_.total_comparisons();
    m.merge.bytes_read = merge_result_.total_bytes_read();
    m.merge.bytes_written = merge_result_.total_bytes_written();
    m.merge.wall_ms = merge_wall_ms_;
    m.emit.blocks = emit_blocks_;
    m.emit.wall_ms = emit_wall_ms_;
    m.config.memory_budget_bytes = cfg_.memory_budget_bytes;
    m.config.tape_count = cfg_.tape_count;
    m.config.block_size_records = cfg_.block_size_records;
    m.config.read_buffer_bytes = cfg_.io.read_buffer_bytes;
    m.config.write_buffer_bytes = cfg_.io.write_buffer_bytes;
    m.config.expected_runs_hint = cfg_.expected_runs_hint;
    return m;
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["complete"] = complete;
    j["selector"] = selector;
    j["run_gen_mode"] = run_gen_mode;
    j["run_generation"] = {{"runs", run_generation.runs},
                           {"records", run_generation.records},
                           {"comparisons", run_generation.comparisons},
                           {"spill_bytes", run_generation.spill_bytes},
                           {"wall_ms", run_generation.wall_ms}};
    j["merge"] = {{"passes", merge.passes},
                  {"comparisons", merge.comparisons},
                  {"bytes_read", merge.bytes_read},
                  {"bytes_written", merge.bytes_written},
                  {"wall_ms", merge.wall_ms}};
    j["emit"] = {{"blocks", emit.blocks}, {"wall_ms", emit.wall_ms}};
    j["config"] = {{"memory_budget_bytes", config.memory_budget_bytes},
                   {"tape_count", config.tape_count},
                   {"block_size_records", config.block_size_records},
                   {"read_buffer_bytes", config.read_buffer_bytes},
                   {"write_buffer_bytes", config.write_buffer_bytes}};
    if (config.expected_runs_hint) {
        j["config"]["expected_runs_hint"] = *config.expected_runs_hint;
    } else {
        j["config"]["expected_runs_hint"] = nullptr;
    }
    return j.dump(2);
}

} // namespace extsort
