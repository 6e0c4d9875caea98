#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "extsort/record.hpp"

namespace extsort {

// Pull interface between operators: blocks of records, nullopt at end.
class RecordBlockStream {
public:
    virtual ~RecordBlockStream() = default;
    virtual std::optional<RecordBlock> next() = 0;
};

// Flat record pull used inside run generation.
class RecordStream {
public:
    virtual ~RecordStream() = default;
    virtual std::optional<Record> next() = 0;
};

// Flattens a block stream and enforces one schema for the whole input.
class BlockRecordStream final : public RecordStream {
public:
    explicit BlockRecordStream(RecordBlockStream& blocks) : blocks_(&blocks) {}

    std::optional<Record> next() override;

    // Schema of the first block; nullptr until one arrives.
    const Schema* schema() const { return schema_; }

private:
    RecordBlockStream* blocks_;
    const Schema* schema_ = nullptr;
    std::vector<Record> pending_;
    std::size_t pos_ = 0;
    bool done_ = false;
};

// Test/tooling source backed by a vector of records.
class VectorBlockStream final : public RecordBlockStream {
public:
    VectorBlockStream(const Schema& schema, std::vector<Record> records,
                      std::size_t block_size = 1024)
        : schema_(&schema), records_(std::move(records)), block_size_(block_size) {}

    std::optional<RecordBlock> next() override {
        if (pos_ >= records_.size()) {
            return std::nullopt;
        }
        RecordBlock b;
        b.schema = schema_;
        const std::size_t end = std::min(records_.size(), pos_ + block_size_);
        b.records.reserve(end - pos_);
        for (; pos_ < end; ++pos_) {
            b.records.push_back(std::move(records_[pos_]));
        }
        return b;
    }

private:
    const Schema* schema_;
    std::vector<Record> records_;
    std::size_t block_size_;
    std::size_t pos_ = 0;
};

} // namespace extsort
