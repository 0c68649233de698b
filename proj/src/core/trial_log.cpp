#include "phri/core/trial_log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "phri/core/errors.hpp"
#include "phri/core/hash.hpp"
#include "phri/core/numfmt.hpp"

namespace phri {

std::string_view to_string(ControllerId c) {
    switch (c) {
        case ControllerId::C1: return "C1";
        case ControllerId::C2: return "C2";
        case ControllerId::C3: return "C3";
    }
    return "?";
}

ControllerId parse_controller(std::string_view s) {
    s = trim(s);
    if (s == "C1" || s == "c1") return ControllerId::C1;
    if (s == "C2" || s == "c2") return ControllerId::C2;
    if (s == "C3" || s == "c3") return ControllerId::C3;
    throw FormatError("unknown controller id: " + std::string(s));
}

bool TrialMeta::has_flag(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

void TrialMeta::add_flag(std::string f) {
    if (!has_flag(f)) flags.push_back(std::move(f));
}

std::size_t TrialLog::tick_of(double t) const {
    if (!std::isfinite(t)) throw FormatError("event time is not set");
    const long long k = std::llround(t * meta.rate);
    return static_cast<std::size_t>(std::max(0LL, k));
}

Magnitudes magnitude_channels(const TrialLog& log, std::size_t tick) {
    const auto& r = log.ticks.at(tick);
    return {r.velocity.norm(), r.f_int.norm(), r.f_h.norm()};
}

const std::vector<std::string>& trial_log_columns() {
    static const std::vector<std::string> cols = {
        "t",       "pos_x",   "pos_y",   "pos_z",   "v_x",          "v_y",          "v_z",
        "fh_x",    "fh_y",    "fh_z",    "fenv_x",  "fenv_y",       "fenv_z",       "fint_x",
        "fint_y",  "fint_z",  "b",       "subtask_true", "subtask_pred", "tau_true", "lambda_true",
        "progress_pred"};
    return cols;
}

namespace {

std::string join_flags(const std::vector<std::string>& flags) {
    std::string s;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (i) s += ',';
        s += flags[i];
    }
    return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

void append_vec(std::string& line, const Vec3& v) {
    line += ',';
    append_double(line, v.x);
    line += ',';
    append_double(line, v.y);
    line += ',';
    append_double(line, v.z);
}

void set_meta(TrialMeta& m, const std::string& key, const std::string& value) {
    if (key == "subject") m.subject = value;
    else if (key == "lp") m.lp = parse_double(value);
    else if (key == "corner") m.corner = static_cast<int>(parse_int(value));
    else if (key == "iod") m.iod = parse_double(value);
    else if (key == "controller") m.controller = parse_controller(value);
    else if (key == "repetition") m.repetition = static_cast<int>(parse_int(value));
    else if (key == "seed") m.seed = std::stoull(value);
    else if (key == "rate") m.rate = parse_double(value);
    else if (key == "t_grab") m.t_grab = parse_double(value);
    else if (key == "t_d") m.t_d = parse_double(value);
    else if (key == "t_c") m.t_c = parse_double(value);
    else if (key == "t_a") m.t_a = parse_double(value);
    else if (key == "t_f") m.t_f = parse_double(value);
    else if (key == "valid") m.valid = (value == "1" || value == "true");
    else if (key == "flags") {
        m.flags.clear();
        if (!value.empty())
            for (auto& f : split(value, ',')) m.flags.push_back(f);
    } else
        m.extra[key] = value;
}

}  // namespace

void write_trial_log(const TrialLog& log, std::ostream& out) {
    const auto& m = log.meta;
    auto kv = [&](std::string_view k, const std::string& v) { out << "# " << k << " = " << v << '\n'; };
    kv("subject", m.subject);
    kv("lp", format_double(m.lp));
    kv("corner", std::to_string(m.corner));
    kv("iod", format_double(m.iod));
    kv("controller", std::string(to_string(m.controller)));
    kv("repetition", std::to_string(m.repetition));
    kv("seed", std::to_string(m.seed));
    kv("rate", format_double(m.rate));
    kv("t_grab", format_double(m.t_grab));
    kv("t_d", format_double(m.t_d));
    kv("t_c", format_double(m.t_c));
    kv("t_a", format_double(m.t_a));
    kv("t_f", format_double(m.t_f));
    kv("valid", m.valid ? "1" : "0");
    kv("flags", join_flags(m.flags));
    for (const auto& [k, v] : m.extra) kv(k, v);

    const auto& cols = trial_log_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';

    std::string line;
    for (const auto& r : log.ticks) {
        line.clear();
        append_double(line, r.t);
        append_vec(line, r.position);
        append_vec(line, r.velocity);
        append_vec(line, r.f_h);
        append_vec(line, r.f_env);
        append_vec(line, r.f_int);
        line += ',';
        append_double(line, r.damping);
        line += ',';
        line += std::to_string(index_of(r.subtask_true));
        line += ',';
        line += std::to_string(index_of(r.subtask_pred));
        line += ',';
        append_double(line, r.tau_true);
        line += ',';
        append_double(line, r.lambda_true);
        line += ',';
        append_double(line, r.progress_pred);
        line += '\n';
        out << line;
    }
}

TrialLog read_trial_log(std::istream& in) {
    TrialLog log;
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto body = trim(std::string_view(line).substr(1));
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) throw FormatError("malformed metadata line: " + line);
            set_meta(log.meta, std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
            continue;
        }
        header = split(line, ',');
        break;
    }
    if (header.empty()) throw FormatError("trial log has no column header");

    const auto& cols = trial_log_columns();
    std::vector<int> pos(cols.size(), -1);
    std::string missing;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), cols[c]);
        if (it == header.end()) {
            missing += (missing.empty() ? "" : ", ") + cols[c];
        } else {
            pos[c] = static_cast<int>(it - header.begin());
        }
    }
    if (!missing.empty()) throw FormatError("trial log is missing columns: " + missing);

    std::vector<double> v(cols.size());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        const auto fields = split(line, ',');
        if (fields.size() != header.size())
            throw FormatError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(header.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) v[c] = parse_double(fields[static_cast<std::size_t>(pos[c])]);
        TickRecord r;
        r.t = v[0];
        r.position = {v[1], v[2], v[3]};
        r.velocity = {v[4], v[5], v[6]};
        r.f_h = {v[7], v[8], v[9]};
        r.f_env = {v[10], v[11], v[12]};
        r.f_int = {v[13], v[14], v[15]};
        r.damping = v[16];
        r.subtask_true = subtask_from_index(static_cast<int>(v[17]));
        r.subtask_pred = subtask_from_index(static_cast<int>(v[18]));
        r.tau_true = v[19];
        r.lambda_true = v[20];
        r.progress_pred = v[21];
        log.ticks.push_back(r);
    }
    return log;
}

void save_trial_log(const TrialLog& log, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    write_trial_log(log, out);
}

TrialLog load_trial_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return read_trial_log(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<std::string> check_log_invariants(const TrialLog& log) {
    std::vector<std::string> bad;
    for (std::size_t k = 0; k < log.ticks.size(); ++k) {
        const auto& r = log.ticks[k];
        if (!(r.f_int == r.f_h + r.f_env)) {
            bad.push_back("F_int != F_h + F_env at tick " + std::to_string(k));
            break;
        }
    }
    for (std::size_t k = 1; k < log.ticks.size(); ++k) {
        if (index_of(log.ticks[k].subtask_true) < index_of(log.ticks[k - 1].subtask_true)) {
            bad.push_back("ground-truth subtask moves backwards at tick " + std::to_string(k));
            break;
        }
    }
    const auto& m = log.meta;
    if (m.valid) {
        if (!(m.t_d < m.t_c)) bad.push_back("t_d < t_c violated");
        if (!(m.t_c <= m.t_f)) bad.push_back("t_c <= t_f violated");
    }
    return bad;
}

ManifestEntry manifest_entry_for(const TrialMeta& meta, std::string path) {
    return {std::move(path), meta.subject, meta.lp, meta.corner, meta.iod, meta.controller,
            meta.repetition, meta.seed, meta.valid};
}

std::string Manifest::serialize() const {
    std::string s = "path,subject,lp,corner,iod,controller,repetition,seed,valid\n";
    for (const auto& e : entries) {
        s += e.path + ',' + e.subject + ',';
        append_double(s, e.lp);
        s += ',' + std::to_string(e.corner) + ',';
        append_double(s, e.iod);
        s += ',' + std::string(to_string(e.controller)) + ',' + std::to_string(e.repetition) + ',' +
             std::to_string(e.seed) + ',' + (e.valid ? "1" : "0") + '\n';
    }
    return s;
}

void Manifest::save(const std::filesystem::path& file) const {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw FormatError("cannot write " + file.string());
    out << serialize();
}

Manifest Manifest::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw FormatError("cannot open manifest " + file.string());
    Manifest m;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty manifest " + file.string());
    const auto header = split(line, ',');
    static const std::vector<std::string> expected = {"path", "subject", "lp", "corner", "iod",
                                                      "controller", "repetition", "seed", "valid"};
    if (header != expected) throw FormatError("unexpected manifest header in " + file.string());
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != expected.size()) throw FormatError("malformed manifest row: " + line);
        ManifestEntry e;
        e.path = f[0];
        e.subject = f[1];
        e.lp = parse_double(f[2]);
        e.corner = static_cast<int>(parse_int(f[3]));
        e.iod = parse_double(f[4]);
        e.controller = parse_controller(f[5]);
        e.repetition = static_cast<int>(parse_int(f[6]));
        e.seed = std::stoull(f[7]);
        e.valid = f[8] == "1";
        m.entries.push_back(std::move(e));
    }
    return m;
}

std::uint64_t Manifest::fingerprint() const { return fnv1a(serialize()); }

}  // namespace phri
