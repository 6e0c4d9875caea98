#include "extsort/selectors.hpp"

#include <bit>

#include "extsort/errors.hpp"

namespace extsort {

const char* selector_kind_name(SelectorKind k) {
    switch (k) {
    case SelectorKind::Naive: return "naive";
    case SelectorKind::Heap: return "heap";
    case SelectorKind::LoserTree: return "loser-tree";
    }
    return "?";
}

std::optional<SelectorKind> parse_selector_kind(std::string_view name) {
    if (name == "naive") return SelectorKind::Naive;
    if (name == "heap") return SelectorKind::Heap;
    if (name == "loser-tree" || name == "loser_tree" || name == "losertree") {
        return SelectorKind::LoserTree;
    }
    return std::nullopt;
}

RunSelector::RunSelector(std::vector<const Record*> heads, SortKeyComparator& cmp)
    : heads_(std::move(heads)), cmp_(&cmp), k_(heads_.size()), live_(0),
      start_count_(cmp.comparisons()) {
    if (k_ == 0) {
        throw UsageError("selector needs at least one run");
    }
    for (const Record* h : heads_) {
        if (h) ++live_;
    }
}

bool RunSelector::entry_less(const Record* a, std::size_t run_a, const Record* b,
                             std::size_t run_b) {
    if (a && b) {
        const Ordering o = cmp_->compare(*a, *b);
        if (o != Ordering::Equal) {
            return o == Ordering::Less;
        }
        return run_a < run_b;
    }
    cmp_->count_bound_comparison();
    if (a) return true;   // b is the infinity bound
    if (b) return false;
    return run_a < run_b; // two bounds: arbitrary but consistent
}

void RunSelector::require_live() const {
    if (live_ == 0) {
        throw UsageError("selector is fully exhausted");
    }
}

std::unique_ptr<RunSelector> build_selector(SelectorKind kind,
                                            std::vector<const Record*> heads,
                                            SortKeyComparator& cmp) {
    switch (kind) {
    case SelectorKind::Naive:
        return std::make_unique<NaiveSelector>(std::move(heads), cmp);
    case SelectorKind::Heap:
        return std::make_unique<HeapSelector>(std::move(heads), cmp);
    case SelectorKind::LoserTree:
        return std::make_unique<LoserTreeSelector>(std::move(heads), cmp);
    }
    throw UsageError("unknown selector kind");
}

// ---------------------------------------------------------------------------
// NaiveSelector

NaiveSelector::NaiveSelector(std::vector<const Record*> heads, SortKeyComparator& cmp)
    : RunSelector(std::move(heads), cmp) {}

std::size_t NaiveSelector::scan_min() {
    std::size_t best = k_;
    for (std::size_t i = 0; i < k_; ++i) {
        if (!heads_[i]) continue;
        if (best == k_) {
            best = i;
        } else if (cmp_->compare(*heads_[i], *heads_[best]) == Ordering::Less) {
            best = i; // strict less keeps the lowest run index on ties
        }
    }
    return best;
}

std::size_t NaiveSelector::min_run() {
    require_live();
    if (!cache_valid_) {
        cached_min_ = scan_min();
        cache_valid_ = true;
    }
    return cached_min_;
}

const Record* NaiveSelector::pop_and_replace(const Record* next) {
    const std::size_t win = min_run();
    const Record* popped = heads_[win];
    heads_[win] = next;
    if (!next) {
        --live_;
    }
    cache_valid_ = false;
    return popped;
}

// ---------------------------------------------------------------------------
// HeapSelector

HeapSelector::HeapSelector(std::vector<const Record*> heads, SortKeyComparator& cmp)
    : RunSelector(std::move(heads), cmp) {
    entries_.reserve(live_);
    for (std::size_t i = 0; i < k_; ++i) {
        if (heads_[i]) {
            entries_.push_back(Entry{heads_[i], i});
        }
    }
    if (entries_.size() > 1) {
        for (std::size_t i = entries_.size() / 2; i-- > 0;) {
            sift_down(i);
        }
    }
}

void HeapSelector::sift_down(std::size_t i) {
    const std::size_t n = entries_.size();
    while (true) {
        const std::size_t l = 2 * i + 1;
        if (l >= n) {
            return;
        }
        std::size_t child = l;
        const std::size_t r = l + 1;
        if (r < n && entry_less(entries_[r], entries_[l])) {
            child = r;
        }
        if (!entry_less(entries_[child], entries_[i])) {
            return;
        }
        std::swap(entries_[child], entries_[i]);
        i = child;
    }
}

void HeapSelector::sift_up(std::size_t i) {
    while (i > 0) {
        const std::size_t parent = (i - 1) / 2;
        if (!entry_less(entries_[i], entries_[parent])) {
            return;
        }
        std::swap(entries_[i], entries_[parent]);
        i = parent;
    }
}

std::size_t HeapSelector::min_run() {
    require_live();
    return entries_.front().run;
}

// Pop the root, then insert the replacement from the winner's run. The
// two-sift form keeps the heap honest on duplicate-heavy keys, where a
// replace-top shortcut would exit after a single tie comparison.
const Record* HeapSelector::pop_and_replace(const Record* next) {
    require_live();
    const Record* popped = entries_.front().rec;
    const std::size_t run = entries_.front().run;
    heads_[run] = next;
    entries_.front() = entries_.back();
    entries_.pop_back();
    if (!entries_.empty()) {
        sift_down(0);
    }
    if (next) {
        entries_.push_back(Entry{next, run});
        sift_up(entries_.size() - 1);
    } else {
        --live_;
    }
    return popped;
}

// ---------------------------------------------------------------------------
// LoserTreeSelector

LoserTreeSelector::LoserTreeSelector(std::vector<const Record*> heads, SortKeyComparator& cmp)
    : RunSelector(std::move(heads), cmp), padded_(std::bit_ceil(k_ == 0 ? 1 : k_)) {
    nodes_.assign(padded_, 0);
    if (padded_ == 1) {
        nodes_[0] = 0;
        return;
    }
    nodes_[0] = play_match(1);
}

// Internal node layout: node i has children 2i and 2i+1; nodes padded_..
// 2*padded_-1 are the leaves (slot = node - padded_). Each internal node
// keeps the loser of its match; the winner moves up.
std::size_t LoserTreeSelector::play_match(std::size_t node) {
    if (node >= padded_) {
        return node - padded_;
    }
    const std::size_t left = play_match(2 * node);
    const std::size_t right = play_match(2 * node + 1);
    if (entry_less(head_of(left), left, head_of(right), right)) {
        nodes_[node] = right;
        return left;
    }
    nodes_[node] = left;
    return right;
}

std::size_t LoserTreeSelector::min_run() {
    require_live();
    return nodes_[0];
}

const Record* LoserTreeSelector::pop_and_replace(const Record* next) {
    require_live();
    const std::size_t win = nodes_[0];
    const Record* popped = heads_[win];
    heads_[win] = next;
    if (!next) {
        --live_;
    }
    // Replay the leaf-to-root path: exactly log2(padded_) matches.
    std::size_t winner = win;
    for (std::size_t node = (win + padded_) / 2; node >= 1; node /= 2) {
        const std::size_t other = nodes_[node];
        if (entry_less(head_of(other), other, head_of(winner), winner)) {
            nodes_[node] = winner;
            winner = other;
        }
    }
    nodes_[0] = winner;
    return popped;
}

} // namespace extsort
