#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace pilotstack {

enum class DriveMode { manual, autopilot, manual_record };

inline std::string_view to_string(DriveMode mode) {
    switch (mode) {
        case DriveMode::manual: return "manual";
        case DriveMode::autopilot: return "autopilot";
        case DriveMode::manual_record: return "manual_record";
    }
    return "manual";
}

inline std::optional<DriveMode> parse_drive_mode(std::string_view text) {
    if (text == "manual") return DriveMode::manual;
    if (text == "autopilot") return DriveMode::autopilot;
    if (text == "manual_record") return DriveMode::manual_record;
    return std::nullopt;
}

// Records are only written while recording a human or while the autopilot drives.
inline bool records_in(DriveMode mode) { return mode != DriveMode::manual; }

}  // namespace pilotstack
