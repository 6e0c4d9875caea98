#include "extsort/streams.hpp"

#include "extsort/errors.hpp"

namespace extsort {

std::optional<Record> BlockRecordStream::next() {
    while (pos_ >= pending_.size()) {
        if (done_) {
            return std::nullopt;
        }
        std::optional<RecordBlock> b = blocks_->next();
        if (!b) {
            done_ = true;
            return std::nullopt;
        }
        if (!b->schema) {
            throw UsageError("record block without a schema");
        }
        if (!schema_) {
            schema_ = b->schema;
        } else if (!(*schema_ == *b->schema)) {
            throw UsageError("schema changed mid-stream");
        }
        pending_ = std::move(b->records);
        pos_ = 0;
    }
    return std::move(pending_[pos_++]);
}

} // namespace extsort
