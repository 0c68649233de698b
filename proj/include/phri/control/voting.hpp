#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "phri/core/subtask.hpp"

namespace phri::control {

/// Majority filter over the most recent per-tick subtask predictions.
/// Ties resolve to the later task phase.
class VotingBuffer {
public:
    explicit VotingBuffer(std::size_t capacity = 100, Subtask fill = Subtask::Idle);

    /// Pushes a prediction (evicting the oldest) and returns the modal subtask.
    Subtask vote(Subtask prediction);
    Subtask modal() const;
    void reset(Subtask fill = Subtask::Idle);

    std::size_t capacity() const { return ring_.size(); }
    int count(Subtask s) const { return counts_[static_cast<std::size_t>(index_of(s))]; }

private:
    std::vector<Subtask> ring_;
    std::size_t head_ = 0;
    std::array<int, kSubtaskCount> counts_{};
};

}  // namespace phri::control
