#include "phri/control/voting.hpp"

#include "phri/core/errors.hpp"

namespace phri::control {

VotingBuffer::VotingBuffer(std::size_t capacity, Subtask fill) : ring_(capacity, fill) {
    if (capacity == 0) throw ConfigError("voting buffer capacity must be positive");
    reset(fill);
}

void VotingBuffer::reset(Subtask fill) {
    std::fill(ring_.begin(), ring_.end(), fill);
    counts_.fill(0);
    counts_[static_cast<std::size_t>(index_of(fill))] = static_cast<int>(ring_.size());
    head_ = 0;
}

Subtask VotingBuffer::vote(Subtask prediction) {
    --counts_[static_cast<std::size_t>(index_of(ring_[head_]))];
    ring_[head_] = prediction;
    ++counts_[static_cast<std::size_t>(index_of(prediction))];
    head_ = (head_ + 1) % ring_.size();
    return modal();
}

Subtask VotingBuffer::modal() const {
    int best = 0;
    for (int i = 1; i < kSubtaskCount; ++i)
        if (counts_[static_cast<std::size_t>(i)] >= counts_[static_cast<std::size_t>(best)]) best = i;
    return static_cast<Subtask>(best);
}

}  // namespace phri::control
