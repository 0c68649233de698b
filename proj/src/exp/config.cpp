#include "phri/exp/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "phri/core/errors.hpp"
#include "phri/core/numfmt.hpp"
#include "phri/eval/folds.hpp"

namespace phri::exp {

namespace {

constexpr int kMaxIncludeDepth = 16;

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(',', start);
        const auto item = trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
        if (!item.empty()) out.emplace_back(item);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<double> parse_doubles(std::string_view s) {
    std::vector<double> out;
    for (const auto& t : split_list(s)) out.push_back(parse_double(t));
    return out;
}

std::vector<int> parse_ints(std::string_view s) {
    std::vector<int> out;
    for (const auto& t : split_list(s)) out.push_back(static_cast<int>(parse_int(t)));
    return out;
}

bool parse_bool(std::string_view s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("expected a boolean, got '" + std::string(s) + "'");
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        append_double(s, v[i]);
    }
    return s;
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s;
}

std::string fmt(double v) { return format_double(v); }

struct Field {
    std::string key;
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define PHRI_DOUBLE(key, member) \
    Field { key, [](ExperimentConfig& c, std::string_view v) { c.member = parse_double(v); }, \
            [](const ExperimentConfig& c) { return fmt(c.member); } }
#define PHRI_INT(key, member) \
    Field { key, [](ExperimentConfig& c, std::string_view v) { c.member = static_cast<decltype(c.member)>(parse_int(v)); }, \
            [](const ExperimentConfig& c) { return std::to_string(c.member); } }
#define PHRI_BOOL(key, member) \
    Field { key, [](ExperimentConfig& c, std::string_view v) { c.member = parse_bool(v); }, \
            [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); } }
#define PHRI_STRING(key, member) \
    Field { key, [](ExperimentConfig& c, std::string_view v) { c.member = std::string(v); }, \
            [](const ExperimentConfig& c) { return std::string(c.member); } }

std::vector<Field> grid_fields(const std::string& prefix, ConditionGrid ExperimentConfig::*g) {
    return {
        {prefix + ".profiles", [g](ExperimentConfig& c, std::string_view v) { (c.*g).profiles = static_cast<int>(parse_int(v)); },
         [g](const ExperimentConfig& c) { return std::to_string((c.*g).profiles); }},
        {prefix + ".lp", [g](ExperimentConfig& c, std::string_view v) { (c.*g).lp = parse_doubles(v); },
         [g](const ExperimentConfig& c) { return join((c.*g).lp); }},
        {prefix + ".corners", [g](ExperimentConfig& c, std::string_view v) { (c.*g).corners = parse_ints(v); },
         [g](const ExperimentConfig& c) { return join((c.*g).corners); }},
        {prefix + ".iod", [g](ExperimentConfig& c, std::string_view v) { (c.*g).iod = parse_doubles(v); },
         [g](const ExperimentConfig& c) { return join((c.*g).iod); }},
        {prefix + ".repetitions", [g](ExperimentConfig& c, std::string_view v) { (c.*g).repetitions = static_cast<int>(parse_int(v)); },
         [g](const ExperimentConfig& c) { return std::to_string((c.*g).repetitions); }},
    };
}

const std::vector<Field>& fields() {
    static const std::vector<Field> all = [] {
        std::vector<Field> f = {
            PHRI_STRING("kind", kind),
            {"seed", [](ExperimentConfig& c, std::string_view v) { c.seed = std::stoull(std::string(v)); },
             [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
            {"out", [](ExperimentConfig& c, std::string_view v) { c.out = std::string(v); },
             [](const ExperimentConfig& c) { return c.out.string(); }},
            {"dataset", [](ExperimentConfig& c, std::string_view v) { c.dataset = std::string(v); },
             [](const ExperimentConfig& c) { return c.dataset.string(); }},
            {"model.detector", [](ExperimentConfig& c, std::string_view v) { c.detector_model = std::string(v); },
             [](const ExperimentConfig& c) { return c.detector_model.string(); }},
            {"model.estimator", [](ExperimentConfig& c, std::string_view v) { c.estimator_model = std::string(v); },
             [](const ExperimentConfig& c) { return c.estimator_model.string(); }},
        };
        for (auto& x : grid_fields("generate", &ExperimentConfig::grid_a)) f.push_back(std::move(x));
        for (auto& x : grid_fields("run", &ExperimentConfig::grid_b)) f.push_back(std::move(x));
        std::vector<Field> rest = {
            PHRI_INT("generate.max_attempts", max_attempts),
            {"run.controllers",
             [](ExperimentConfig& c, std::string_view v) {
                 c.controllers.clear();
                 for (const auto& t : split_list(v)) c.controllers.push_back(parse_controller(t));
             },
             [](const ExperimentConfig& c) {
                 std::string s;
                 for (std::size_t i = 0; i < c.controllers.size(); ++i) s += (i ? ", " : "") + std::string(to_string(c.controllers[i]));
                 return s;
             }},
            PHRI_DOUBLE("run.stale_flag_fraction", sim.stale_flag_fraction),

            PHRI_DOUBLE("sim.rate", sim.rate),
            PHRI_DOUBLE("sim.mass", sim.mass),
            PHRI_DOUBLE("sim.stiffness", sim.stiffness),
            PHRI_DOUBLE("sim.hold_s", sim.hold_s),
            PHRI_DOUBLE("sim.depth_goal", sim.depth_goal),
            PHRI_DOUBLE("sim.max_wait_s", sim.max_wait_s),
            PHRI_DOUBLE("sim.max_driving_s", sim.max_driving_s),
            PHRI_DOUBLE("sim.max_contact_s", sim.max_contact_s),

            PHRI_DOUBLE("schedule.b_low", sim.schedule.b_low),
            PHRI_DOUBLE("schedule.b_med", sim.schedule.b_med),
            PHRI_DOUBLE("schedule.b_high", sim.schedule.b_high),
            PHRI_DOUBLE("schedule.blend_s", sim.schedule.blend_s),
            PHRI_DOUBLE("schedule.threshold", sim.schedule.threshold),

            PHRI_DOUBLE("features.detector_window_s", features.detector.length_s),
            PHRI_INT("features.detector_stride", features.detector.downsample),
            PHRI_DOUBLE("features.estimator_window_s", features.estimator.length_s),
            PHRI_INT("features.estimator_stride", features.estimator.downsample),
            PHRI_DOUBLE("features.accel_cutoff_hz", features.accel_cutoff_hz),

            PHRI_INT("pipeline.inference_every", pipeline.inference_every),
            PHRI_INT("pipeline.vote_capacity", pipeline.vote_capacity),
            PHRI_DOUBLE("pipeline.stale_after_s", pipeline.stale_after_s),

            PHRI_INT("detector.hidden", detector.hidden),
            PHRI_INT("detector.batch", detector.train.batch),
            PHRI_DOUBLE("detector.learning_rate", detector.train.learning_rate),
            PHRI_DOUBLE("detector.decay", detector.train.decay),
            PHRI_INT("detector.epochs", detector.train.epochs),
            PHRI_DOUBLE("detector.validation_fraction", detector.train.validation_fraction),
            PHRI_INT("detector.patience", detector.train.patience),
            {"detector.optimizer",
             [](ExperimentConfig& c, std::string_view v) { c.detector.train.optimizer = est::nn::parse_optimizer(v); },
             [](const ExperimentConfig& c) { return std::string(est::nn::to_string(c.detector.train.optimizer)); }},
            PHRI_DOUBLE("detector.l1", detector.l1),
            PHRI_DOUBLE("detector.l2", detector.l2),
            PHRI_INT("detector.max_windows", detector.max_windows),

            {"estimator.kind", [](ExperimentConfig& c, std::string_view v) { c.estimator.kind = est::parse_model_kind(v); },
             [](const ExperimentConfig& c) { return std::string(est::to_string(c.estimator.kind)); }},
            {"estimator.target", [](ExperimentConfig& c, std::string_view v) { c.estimator.target = est::parse_target(v); },
             [](const ExperimentConfig& c) { return std::string(est::to_string(c.estimator.target)); }},
            PHRI_INT("estimator.batch", estimator.train.batch),
            PHRI_DOUBLE("estimator.learning_rate", estimator.train.learning_rate),
            PHRI_DOUBLE("estimator.decay", estimator.train.decay),
            PHRI_INT("estimator.epochs", estimator.train.epochs),
            PHRI_DOUBLE("estimator.validation_fraction", estimator.train.validation_fraction),
            PHRI_INT("estimator.patience", estimator.train.patience),
            {"estimator.optimizer",
             [](ExperimentConfig& c, std::string_view v) { c.estimator.train.optimizer = est::nn::parse_optimizer(v); },
             [](const ExperimentConfig& c) { return std::string(est::nn::to_string(c.estimator.train.optimizer)); }},
            PHRI_DOUBLE("estimator.l1", estimator.l1),
            PHRI_DOUBLE("estimator.l2", estimator.l2),
            PHRI_INT("estimator.max_windows", estimator.max_windows),
            PHRI_DOUBLE("gpr.alpha", estimator.gpr.alpha),
            PHRI_DOUBLE("gpr.length_scale", estimator.gpr.length_init),
            PHRI_DOUBLE("gpr.length_scale_min", estimator.gpr.length_lo),
            PHRI_DOUBLE("gpr.length_scale_max", estimator.gpr.length_hi),
            PHRI_DOUBLE("gpr.variance", estimator.gpr.variance_init),
            PHRI_DOUBLE("gpr.variance_min", estimator.gpr.variance_lo),
            PHRI_DOUBLE("gpr.variance_max", estimator.gpr.variance_hi),
            PHRI_INT("gpr.restarts", estimator.gpr.restarts),
            PHRI_INT("gpr.max_iterations", estimator.gpr.max_iterations),
            PHRI_BOOL("gpr.optimize", estimator.gpr.optimize),
            PHRI_BOOL("gpr.center_targets", estimator.gpr.center_targets),
            PHRI_INT("gpr.max_windows", estimator.gpr_max_windows),
            PHRI_INT("gpr.optimize_windows", estimator.gpr_optimize_windows),
            PHRI_INT("dtw.length", estimator.dtw_length),
            PHRI_INT("dtw.query_stride", estimator.dtw_query_stride),
            PHRI_INT("mj.grid", estimator.mj.grid),
            PHRI_INT("mj.min_samples", estimator.mj.min_samples),

            PHRI_DOUBLE("eval.transition_window_s", transition_window_s),
            PHRI_INT("eval.highpass_order", oscillation.order),
            PHRI_DOUBLE("eval.highpass_hz", oscillation.cutoff_hz),
            PHRI_DOUBLE("eval.spectrogram_window_s", oscillation.window_s),
            PHRI_DOUBLE("eval.spectrogram_overlap", oscillation.overlap),
            PHRI_DOUBLE("eval.spectrogram_df", oscillation.df),
            PHRI_STRING("train.cv", cv),

            PHRI_STRING("serve.bind", serve.bind),
            PHRI_INT("serve.port", serve.port),
            PHRI_DOUBLE("serve.coupling_k", serve.coupling_k),
            PHRI_DOUBLE("serve.coupling_b", serve.coupling_b),
            PHRI_DOUBLE("serve.frame_hz", serve.frame_hz),
            PHRI_DOUBLE("serve.overrun_warn_fraction", serve.overrun_warn_fraction),
            PHRI_DOUBLE("serve.push_rate", serve.push_rate),
        };
        for (auto& x : rest) f.push_back(std::move(x));
        return f;
    }();
    return all;
}

}  // namespace

std::size_t ConditionGrid::size() const {
    return static_cast<std::size_t>(profiles) * lp.size() * corners.size() * iod.size() *
           static_cast<std::size_t>(repetitions);
}

void KeyValueDoc::parse_into(std::string_view text, const std::filesystem::path& base_dir, int depth) {
    std::size_t start = 0;
    int line_no = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + " is not key = value: " + std::string(line));
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + " has an empty key");
        if (key == "include") {
            std::filesystem::path p(value);
            if (p.is_relative()) p = base_dir / p;
            load_into(p, depth + 1);
        } else {
            values_[key] = value;
        }
    }
}

void KeyValueDoc::load_into(const std::filesystem::path& file, int depth) {
    if (depth > kMaxIncludeDepth) throw ConfigError("config includes nest too deeply at " + file.string());
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    parse_into(ss.str(), file.parent_path(), depth);
}

KeyValueDoc KeyValueDoc::load(const std::filesystem::path& file) {
    KeyValueDoc d;
    d.load_into(file, 0);
    return d;
}

KeyValueDoc KeyValueDoc::parse(std::string_view text, const std::filesystem::path& base_dir) {
    KeyValueDoc d;
    d.parse_into(text, base_dir, 0);
    return d;
}

void apply(ExperimentConfig& cfg, const KeyValueDoc& doc) {
    const auto& fs = fields();
    for (const auto& [key, value] : doc.values()) {
        auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return f.key == key; });
        if (it == fs.end()) throw ConfigError("unknown config key: " + key);
        try {
            it->set(cfg, value);
        } catch (const ConfigError& e) {
            throw ConfigError(key + ": " + e.what());
        } catch (const std::exception& e) {
            throw ConfigError(key + ": bad value '" + value + "' (" + e.what() + ")");
        }
    }
    cfg.features.rate = cfg.sim.rate;
    cfg.validate();
}

std::string dump(const ExperimentConfig& cfg) {
    std::string s;
    for (const auto& f : fields()) s += f.key + " = " + f.get(cfg) + '\n';
    return s;
}

void ExperimentConfig::validate() const {
    if (kind != "A" && kind != "B") throw ConfigError("kind must be A or B");
    for (const auto* g : {&grid_a, &grid_b}) {
        if (g->profiles < 1 || g->repetitions < 1 || g->lp.empty() || g->corners.empty() || g->iod.empty())
            throw ConfigError("condition grid must be non-empty");
        for (int c : g->corners)
            if (c < 0 || c > 3) throw ConfigError("corner index must be 0..3");
    }
    if (max_attempts < 1) throw ConfigError("generate.max_attempts must be >= 1");
    if (controllers.empty()) throw ConfigError("run.controllers must not be empty");
    if (!(sim.rate > 0.0 && sim.mass > 0.0 && sim.stiffness > 0.0))
        throw ConfigError("sim.rate, sim.mass and sim.stiffness must be positive");
    sim.schedule.validate();
    features.validate();
    if (std::abs(features.rate - sim.rate) > 1e-9) throw ConfigError("feature rate must equal sim.rate");
    if (pipeline.inference_every < 1 || pipeline.vote_capacity < 1) throw ConfigError("pipeline settings must be positive");
    if (cv != "none") eval::parse_fold_category(cv);
    if (!(serve.frame_hz > 0.0)) throw ConfigError("serve.frame_hz must be positive");
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& file) {
    ExperimentConfig cfg;
    std::optional<std::filesystem::path> src = file;
    if (!src) {
        if (const char* env = std::getenv("INTENT_ADMIT_CONFIG"); env && *env) src = env;
    }
    if (src) apply(cfg, KeyValueDoc::load(*src));
    cfg.features.rate = cfg.sim.rate;
    cfg.validate();
    return cfg;
}

}  // namespace phri::exp
