#include "phri/core/subtask.hpp"

#include <string>

#include "phri/core/errors.hpp"

namespace phri {

Subtask subtask_from_index(int i) {
    if (i < 0 || i >= kSubtaskCount) throw FormatError("subtask index out of range: " + std::to_string(i));
    return static_cast<Subtask>(i);
}

std::string_view to_string(Subtask s) {
    switch (s) {
        case Subtask::Idle: return "Idle";
        case Subtask::ToolAttachment: return "ToolAttachment";
        case Subtask::Driving: return "Driving";
        case Subtask::Contact: return "Contact";
    }
    return "?";
}

Subtask parse_subtask(std::string_view name) {
    for (auto s : kAllSubtasks)
        if (to_string(s) == name) return s;
    throw FormatError("unknown subtask: " + std::string(name));
}

}  // namespace phri
