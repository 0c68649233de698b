#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "phri/core/subtask.hpp"
#include "phri/core/vec3.hpp"

namespace phri {

enum class ControllerId : std::uint8_t { C1 = 1, C2 = 2, C3 = 3 };

std::string_view to_string(ControllerId c);
ControllerId parse_controller(std::string_view s);

inline constexpr double kNoEvent = std::numeric_limits<double>::quiet_NaN();

/// Condition metadata and event times of one trial. Event times are NaN when
/// the event never happened (e.g. t_a under C1/C2).
struct TrialMeta {
    std::string subject;
    double lp = 0.0;  // perpendicular distance [m]
    int corner = 0;
    double iod = 0.0;
    ControllerId controller = ControllerId::C2;
    int repetition = 0;
    std::uint64_t seed = 0;
    double rate = 500.0;

    double t_grab = kNoEvent;
    double t_d = kNoEvent;
    double t_c = kNoEvent;
    double t_a = kNoEvent;
    double t_f = kNoEvent;

    bool valid = true;
    std::vector<std::string> flags;
    /// Free-form extra header entries, preserved on round trip.
    std::map<std::string, std::string> extra;

    bool has_flag(std::string_view f) const;
    void add_flag(std::string f);
};

/// One control-loop tick.
struct TickRecord {
    double t = 0.0;
    Vec3 position;
    Vec3 velocity;
    Vec3 f_h;
    Vec3 f_env;
    Vec3 f_int;
    double damping = 0.0;
    Subtask subtask_true = Subtask::Idle;
    Subtask subtask_pred = Subtask::Idle;
    double tau_true = 0.0;
    double lambda_true = 0.0;
    double progress_pred = 0.0;
};

struct TrialLog {
    TrialMeta meta;
    std::vector<TickRecord> ticks;

    double dt() const { return 1.0 / meta.rate; }
    /// Tick index of an event time (rounded to the nearest tick).
    std::size_t tick_of(double t) const;
};

struct Magnitudes {
    double speed = 0.0;
    double f_int = 0.0;
    double f_h = 0.0;
};

/// (|V|, |F_int|, |F_h|) at one tick.
Magnitudes magnitude_channels(const TrialLog& log, std::size_t tick);

/// Column names in file order.
const std::vector<std::string>& trial_log_columns();

/// CSV with a `# key = value` metadata header. Doubles use shortest
/// round-trip formatting, so write/read reproduces every column bit-exactly.
void write_trial_log(const TrialLog& log, std::ostream& out);
TrialLog read_trial_log(std::istream& in);
void save_trial_log(const TrialLog& log, const std::filesystem::path& path);
TrialLog load_trial_log(const std::filesystem::path& path);

/// Checks the per-log invariants (exact force sum, event ordering, monotone
/// ground-truth labels). Returns human-readable violations; empty when clean.
std::vector<std::string> check_log_invariants(const TrialLog& log);

struct ManifestEntry {
    std::string path;  // relative to the dataset directory
    std::string subject;
    double lp = 0.0;
    int corner = 0;
    double iod = 0.0;
    ControllerId controller = ControllerId::C2;
    int repetition = 0;
    std::uint64_t seed = 0;
    bool valid = true;
};

ManifestEntry manifest_entry_for(const TrialMeta& meta, std::string path);

/// Dataset index: one CSV row per trial file.
struct Manifest {
    std::vector<ManifestEntry> entries;

    void save(const std::filesystem::path& file) const;
    static Manifest load(const std::filesystem::path& file);
    /// Fingerprint of the manifest content (FNV-1a over the serialized rows).
    std::uint64_t fingerprint() const;
    std::string serialize() const;
};

}  // namespace phri
