#include <doctest.h>

#include <random>

#include "extsort/sort_operator.hpp"
#include "test_support.hpp"

using namespace extsort;
using namespace testsupport;

namespace {

SortConfig test_config(const ScratchDir& d, std::size_t budget,
                       SelectorKind kind = SelectorKind::LoserTree,
                       RunGenMode mode = RunGenMode::QuicksortFill) {
    SortConfig cfg;
    cfg.memory_budget_bytes = budget;
    cfg.tape_count = 5;
    cfg.selector = kind;
    cfg.run_gen_mode = mode;
    cfg.block_size_records = 1000;
    cfg.io = test_io(d);
    return cfg;
}

std::vector<Record> drain_all(SortOperator& op) {
    std::vector<Record> out;
    while (std::optional<RecordBlock> b = op.next()) {
        for (Record& r : b->records) out.push_back(std::move(r));
    }
    return out;
}

// Child stream that reports when it has been fully consumed and can fail on
// demand partway through.
class SpyStream final : public RecordBlockStream {
public:
    SpyStream(const Schema& schema, std::vector<Record> records, std::size_t fail_after_blocks,
              bool* drained_flag)
        : inner_(schema, std::move(records), 64), fail_after_(fail_after_blocks),
          drained_(drained_flag) {}
    std::optional<RecordBlock> next() override {
        if (fail_after_ != SIZE_MAX && blocks_ >= fail_after_) {
            throw IoError("child stream failed");
        }
        std::optional<RecordBlock> b = inner_.next();
        if (!b && drained_) {
            *drained_ = true;
        }
        ++blocks_;
        return b;
    }

private:
    VectorBlockStream inner_;
    std::size_t fail_after_;
    bool* drained_;
    std::size_t blocks_ = 0;
};

} // namespace

TEST_CASE("open then immediate close leaves no spill files") {
    ScratchDir d("op-close");
    static Schema s = int_schema();
    auto child = std::make_unique<VectorBlockStream>(s, int_records({3, 1, 2}));
    {
        SortOperator op(test_config(d, 1 << 20), std::move(child));
        op.close();
    }
    CHECK(file_count(d.path()) == 0);
}

TEST_CASE("invalid configs are rejected before any I/O") {
    ScratchDir d("op-cfg");
    static Schema s = int_schema();
    SortConfig cfg = test_config(d, 0);
    CHECK_THROWS_AS(SortOperator(cfg, std::make_unique<VectorBlockStream>(s, int_records({1}))),
                    UsageError);
    cfg = test_config(d, 1000);
    cfg.tape_count = 1;
    CHECK_THROWS_AS(SortOperator(cfg, std::make_unique<VectorBlockStream>(s, int_records({1}))),
                    UsageError);
    cfg = test_config(d, 1000);
    cfg.block_size_records = 0;
    CHECK_THROWS_AS(SortOperator(cfg, std::make_unique<VectorBlockStream>(s, int_records({1}))),
                    UsageError);
}

TEST_CASE("empty child: end-of-stream, zero runs, zero passes") {
    ScratchDir d("op-empty");
    static Schema s = int_schema();
    SortOperator op(test_config(d, 1 << 20),
                    std::make_unique<VectorBlockStream>(s, std::vector<Record>{}));
    CHECK_FALSE(op.next().has_value());
    const MetricsReport m = op.metrics();
    CHECK(m.complete);
    CHECK(m.run_generation.runs == 0);
    CHECK(m.merge.passes == 0);
    CHECK(file_count(d.path()) == 0);
}

TEST_CASE("a record bigger than the budget fails at the first next()") {
    ScratchDir d("op-unsortable");
    static Schema s = int_schema();
    SortConfig cfg = test_config(d, 16); // positive but below one record
    SortOperator op(cfg, std::make_unique<VectorBlockStream>(s, int_records({1, 2})));
    CHECK_THROWS_AS(op.next(), UnsortableRecordError);
    op.close();
    CHECK(file_count(d.path()) == 0);
}

TEST_CASE("input blocks [[3,1],[2]] with block size 2 come out as [1,2],[3]") {
    ScratchDir d("op-blocks");
    static Schema s = int_schema();
    SortConfig cfg = test_config(d, 1 << 20);
    cfg.block_size_records = 2;
    SortOperator op(cfg, std::make_unique<VectorBlockStream>(s, int_records({3, 1, 2}), 2));
    std::optional<RecordBlock> b1 = op.next();
    REQUIRE(b1.has_value());
    CHECK(encode_all(b1->records) == encode_all(int_records({1, 2})));
    std::optional<RecordBlock> b2 = op.next();
    REQUIRE(b2.has_value());
    CHECK(encode_all(b2->records) == encode_all(int_records({3})));
    CHECK_FALSE(op.next().has_value());
}

TEST_CASE("no output before the child is fully consumed (blocking operator)") {
    ScratchDir d("op-blocking");
    static Schema s = int_schema();
    std::mt19937_64 rng(131);
    bool drained = false;
    auto child = std::make_unique<SpyStream>(s, random_int_records(rng, 5000, 0, 1000),
                                             SIZE_MAX, &drained);
    SortConfig cfg = test_config(d, 3000);
    SortOperator op(cfg, std::move(child));
    CHECK_FALSE(drained);
    std::optional<RecordBlock> first = op.next();
    REQUIRE(first.has_value());
    CHECK(drained); // the whole input was consumed before the first block
}

TEST_CASE("end-to-end sort for every selector and mode combination") {
    static Schema s = mixed_schema();
    std::mt19937_64 rng(137);
    std::vector<Record> input = random_mixed_records(rng, 30000);
    const std::uint64_t fp = multiset_fingerprint(input);
    const std::vector<Record> want = reference_sorted(s, input);

    for (const SelectorKind kind :
         {SelectorKind::Naive, SelectorKind::Heap, SelectorKind::LoserTree}) {
        for (const RunGenMode mode :
             {RunGenMode::QuicksortFill, RunGenMode::ReplacementSelection}) {
            ScratchDir d("op-e2e");
            SortConfig cfg = test_config(d, 200 * 1000, kind, mode);
            SortOperator op(cfg, std::make_unique<VectorBlockStream>(s, input));
            std::vector<Record> out = drain_all(op);
            REQUIRE(out.size() == input.size());
            CHECK(multiset_fingerprint(out) == fp);
            for (std::size_t i = 0; i < out.size(); ++i) {
                CHECK(reference_compare(s, out[i], want[i]) == 0);
            }
            const MetricsReport m = op.metrics();
            CHECK(m.complete);
            CHECK(m.run_generation.records == input.size());
            CHECK(m.run_generation.runs > 1);
            op.close();
            CHECK(file_count(d.path()) == 0);
        }
    }
}

TEST_CASE("determinism: same input and config give byte-identical output") {
    static Schema s = mixed_schema();
    std::mt19937_64 rng(139);
    std::vector<Record> input = random_mixed_records(rng, 8000);
    std::vector<std::vector<char>> outs;
    for (int i = 0; i < 2; ++i) {
        ScratchDir d("op-det");
        SortConfig cfg = test_config(d, 60 * 1000);
        SortOperator op(cfg, std::make_unique<VectorBlockStream>(s, input));
        outs.push_back(encode_all(drain_all(op)));
    }
    CHECK(outs[0] == outs[1]);
}

TEST_CASE("selector cross-equivalence at the operator level") {
    static Schema s = mixed_schema();
    std::mt19937_64 rng(149);
    std::vector<Record> input = random_mixed_records(rng, 12000);
    std::vector<std::vector<char>> outs;
    for (const SelectorKind kind :
         {SelectorKind::Naive, SelectorKind::Heap, SelectorKind::LoserTree}) {
        ScratchDir d("op-cross");
        SortConfig cfg = test_config(d, 80 * 1000, kind);
        SortOperator op(cfg, std::make_unique<VectorBlockStream>(s, input));
        outs.push_back(encode_all(drain_all(op)));
    }
    CHECK(outs[0] == outs[1]);
    CHECK(outs[1] == outs[2]);
}

TEST_CASE("equal keys: output keys non-decreasing, payload order unspecified") {
    static Schema s = pair_schema();
    std::mt19937_64 rng(151);
    std::vector<Record> input;
    for (int i = 0; i < 5000; ++i) {
        input.push_back(rec_is(static_cast<std::int64_t>(rng() % 5),
                               std::to_string(rng() % 100000)));
    }
    ScratchDir d("op-ties");
    SortConfig cfg = test_config(d, 40 * 1000);
    SortOperator op(cfg, std::make_unique<VectorBlockStream>(s, input));
    std::vector<Record> out = drain_all(op);
    REQUIRE(out.size() == input.size());
    CHECK(multiset_fingerprint(out) == multiset_fingerprint(input));
    for (std::size_t i = 1; i < out.size(); ++i) {
        CHECK(std::get<std::int64_t>(out[i - 1].values[0]) <=
              std::get<std::int64_t>(out[i].values[0]));
    }
}

TEST_CASE("metrics for a single-run sort show zero merge work") {
    ScratchDir d("op-onerun");
    static Schema s = int_schema();
    std::mt19937_64 rng(157);
    SortOperator op(test_config(d, 1 << 22),
                    std::make_unique<VectorBlockStream>(s, random_int_records(rng, 1000, 0, 99)));
    drain_all(op);
    const MetricsReport m = op.metrics();
    CHECK(m.run_generation.runs == 1);
    CHECK(m.merge.passes == 0);
    CHECK(m.merge.comparisons == 0);
    CHECK(m.merge.bytes_read == 0);
}

TEST_CASE("metrics reconcile: spill bytes, emit blocks, incomplete flag") {
    ScratchDir d("op-metrics");
    static Schema s = int_schema();
    std::mt19937_64 rng(163);
    std::vector<Record> input = random_int_records(rng, 9000, 0, 1 << 20);
    SortConfig cfg = test_config(d, 30 * 1000);
    cfg.block_size_records = 1000;
    SortOperator op(cfg, std::make_unique<VectorBlockStream>(s, input));
    const MetricsReport before = op.metrics();
    CHECK_FALSE(before.complete); // nothing has run yet
    std::vector<Record> out = drain_all(op);
    const MetricsReport m = op.metrics();
    CHECK(m.complete);
    CHECK(m.run_generation.records == 9000);
    CHECK(m.run_generation.spill_bytes == 9000 * 12 + m.run_generation.runs * 12);
    CHECK(m.emit.blocks == 9); // 9000 records / 1000 per block
    CHECK(m.config.memory_budget_bytes == cfg.memory_budget_bytes);
    const std::string doc = m.to_json();
    for (const char* field : {"run_generation", "merge", "emit", "selector", "complete",
                              "comparisons", "spill_bytes", "bytes_read", "bytes_written",
                              "passes", "blocks", "wall_ms", "config"}) {
        CHECK(doc.find(field) != std::string::npos);
    }
}

TEST_CASE("close mid-emit removes every spill file") {
    ScratchDir d("op-midclose");
    static Schema s = int_schema();
    std::mt19937_64 rng(167);
    SortConfig cfg = test_config(d, 20 * 1000);
    cfg.block_size_records = 100;
    SortOperator op(cfg, std::make_unique<VectorBlockStream>(
                             s, random_int_records(rng, 5000, 0, 1 << 20)));
    REQUIRE(op.next().has_value()); // pipeline ran; final run is on disk
    CHECK(file_count(d.path()) > 0);
    op.close();
    CHECK(file_count(d.path()) == 0);
    CHECK_FALSE(op.next().has_value()); // closed operator is drained
    op.close();                         // idempotent
}

TEST_CASE("a child failure mid-consumption still cleans up on close") {
    ScratchDir d("op-abort");
    static Schema s = int_schema();
    std::mt19937_64 rng(173);
    auto child = std::make_unique<SpyStream>(s, random_int_records(rng, 20000, 0, 1 << 20),
                                             /*fail_after_blocks=*/10, nullptr);
    SortConfig cfg = test_config(d, 30 * 1000);
    SortOperator op(cfg, std::move(child));
    CHECK_THROWS_AS(op.next(), IoError);
    op.close();
    CHECK(file_count(d.path()) == 0);
}

TEST_CASE("errors surface tagged with the failing phase") {
    ScratchDir d("op-phase");
    static Schema s = int_schema();
    std::mt19937_64 rng(179);
    auto child = std::make_unique<SpyStream>(s, random_int_records(rng, 20000, 0, 1 << 20),
                                             10, nullptr);
    SortConfig cfg = test_config(d, 30 * 1000);
    SortOperator op(cfg, std::move(child));
    try {
        op.next();
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("[consuming]") != std::string::npos);
    }
}

TEST_CASE("after merging, only the final run remains on disk") {
    ScratchDir d("op-peak");
    static Schema s = int_schema();
    std::mt19937_64 rng(181);
    std::vector<Record> input = random_int_records(rng, 20000, 0, 1 << 30);
    const std::uint64_t input_bytes = 20000 * 12;
    SortConfig cfg = test_config(d, 20 * 1000);
    cfg.tape_count = 4; // forces a multi-pass polyphase merge
    SortOperator op(cfg, std::make_unique<VectorBlockStream>(s, input));
    REQUIRE(op.next().has_value());
    // Consumed tapes were reclaimed pass by pass; what is left is the final
    // run plus empty reset tape files.
    CHECK(dir_bytes(d.path()) <= input_bytes + 4 * 12 + 1024);
    drain_all(op);
    op.close();
    CHECK(file_count(d.path()) == 0);
}
