#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace phri {

/// Task phases in their natural order. The numeric value is the class index
/// used by the detector and the integer written to trial logs.
enum class Subtask : std::uint8_t { Idle = 0, ToolAttachment = 1, Driving = 2, Contact = 3 };

inline constexpr int kSubtaskCount = 4;

inline constexpr std::array<Subtask, kSubtaskCount> kAllSubtasks = {
    Subtask::Idle, Subtask::ToolAttachment, Subtask::Driving, Subtask::Contact};

constexpr int index_of(Subtask s) { return static_cast<int>(s); }

Subtask subtask_from_index(int i);
std::string_view to_string(Subtask s);
Subtask parse_subtask(std::string_view name);

}  // namespace phri
