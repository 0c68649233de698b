#include "phri/exp/serve.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "phri/core/errors.hpp"
#include "phri/est/pipeline.hpp"
#include "phri/eval/metrics.hpp"
#include "phri/exp/experiment.hpp"
#include "phri/exp/simulator.hpp"

namespace phri::exp {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::size_t kOutboxLimit = 8;

struct InputState {
    double y = 0.0;
    double z = 0.0;
    bool grab = false;
    std::optional<double> depth;
    double last_ts = -std::numeric_limits<double>::infinity();
    bool ready = false;
};

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

struct TelemetryServer::Impl {
    class Session : public std::enable_shared_from_this<Session> {
    public:
        Session(tcp::socket socket, Impl& host) : ws_(std::move(socket)), host_(host) {}

        void start() {
            ws_.text(true);
            ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
                if (ec) return;
                self->host_.attach(self);
                self->read();
            });
        }

        void read() {
            ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
                if (ec) {
                    self->host_.detach(self.get());
                    return;
                }
                self->host_.on_message(beast::buffers_to_string(self->buffer_.data()));
                self->buffer_.consume(self->buffer_.size());
                self->read();
            });
        }

        void write_next() {
            if (writing_) return;
            auto msg = host_.take_frame(this);
            if (!msg) return;
            writing_ = true;
            auto payload = std::make_shared<std::string>(std::move(*msg));
            ws_.async_write(asio::buffer(*payload), [self = shared_from_this(), payload](beast::error_code ec, std::size_t) {
                self->writing_ = false;
                if (ec) {
                    self->host_.detach(self.get());
                    return;
                }
                self->host_.count_sent();
                self->write_next();
            });
        }

        void close() {
            beast::error_code ec;
            ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
            ws_.next_layer().close(ec);
        }

    private:
        websocket::stream<tcp::socket> ws_;
        beast::flat_buffer buffer_;
        Impl& host_;
        bool writing_ = false;
    };

    ExperimentConfig cfg;
    est::SubtaskDetector detector;
    std::unique_ptr<est::ProgressModel> estimator;
    std::filesystem::path out_dir;

    asio::io_context io;
    tcp::acceptor acceptor{io};
    std::thread io_thread;
    std::thread sim_thread;
    std::atomic<bool> stopping{false};
    bool started = false;

    mutable std::mutex mu;
    std::shared_ptr<Session> session;
    std::uint64_t connection = 0;
    InputState input;
    std::deque<std::string> outbox;
    ServeStats stats;

    Impl(ExperimentConfig c, const est::SubtaskDetector& d, const est::ProgressModel& e, std::filesystem::path out)
        : cfg(std::move(c)), detector(d), estimator(e.clone()), out_dir(std::move(out)) {}

    // ---- network side (io thread) ----

    void accept() {
        acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            bool busy;
            {
                std::lock_guard lk(mu);
                busy = session != nullptr;
            }
            if (busy) {
                beast::error_code ignored;
                socket.close(ignored);
            } else {
                std::make_shared<Session>(std::move(socket), *this)->start();
            }
            accept();
        });
    }

    void attach(const std::shared_ptr<Session>& s) {
        std::lock_guard lk(mu);
        if (session) {
            s->close();
            return;
        }
        session = s;
        ++connection;
        input = {};
        outbox.clear();
    }

    void detach(Session* s) {
        std::lock_guard lk(mu);
        if (session.get() == s) {
            session.reset();
            outbox.clear();
        }
    }

    void on_message(const std::string& text) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception&) {
            std::lock_guard lk(mu);
            ++stats.inputs_discarded;
            return;
        }
        std::lock_guard lk(mu);
        ++stats.inputs_received;
        const auto type = j.value("type", "");
        if (type == "ready") {
            input.ready = true;
            return;
        }
        if (type != "input") {
            ++stats.inputs_discarded;
            return;
        }
        try {
            if (j.contains("ts")) {
                const double ts = j.at("ts").get<double>();
                if (ts <= input.last_ts) {
                    ++stats.inputs_discarded;
                    return;
                }
                input.last_ts = ts;
            }
            if (j.contains("pointer")) {
                const auto& p = j.at("pointer");
                input.y = p.at(0).get<double>();
                input.z = p.at(1).get<double>();
            }
            if (j.contains("grab")) input.grab = j.at("grab").get<bool>();
            if (j.contains("depth") && !j.at("depth").is_null()) input.depth = j.at("depth").get<double>();
        } catch (const nlohmann::json::exception&) {
            ++stats.inputs_discarded;
        }
    }

    std::optional<std::string> take_frame(Session* s) {
        std::lock_guard lk(mu);
        if (session.get() != s || outbox.empty()) return std::nullopt;
        auto m = std::move(outbox.front());
        outbox.pop_front();
        return m;
    }

    void count_sent() {
        std::lock_guard lk(mu);
        ++stats.frames_sent;
    }

    // ---- simulation side ----

    /// Queues a frame without ever blocking on the network.
    void publish(std::string frame) {
        std::shared_ptr<Session> s;
        {
            std::lock_guard lk(mu);
            if (!session) return;
            if (outbox.size() >= kOutboxLimit) {
                outbox.pop_front();
                ++stats.frames_dropped;
            }
            outbox.push_back(std::move(frame));
            s = session;
        }
        asio::post(io, [s] { s->write_next(); });
    }

    std::optional<std::uint64_t> current_connection() const {
        std::lock_guard lk(mu);
        if (!session) return std::nullopt;
        return connection;
    }

    nlohmann::json state_frame(const TrialStepper& st, int trial, bool stale) const {
        const auto& g = st.geometry();
        nlohmann::json j = {{"type", "state"},
                            {"t", st.time()},
                            {"tool", vec_json(st.position())},
                            {"v", vec_json(st.velocity())},
                            {"depth_mm", std::max(0.0, st.depth() * 1000.0)},
                            {"phase", std::string(env::to_string(st.phase()))},
                            {"prompt", std::string(env::prompt_for(st.phase()))},
                            {"trial", trial},
                            {"target", vec_json(g.target_center)},
                            {"target_diameter", g.width},
                            {"home", vec_json(g.home)},
                            {"stale", stale}};
        if (st.ticks() > 0) {
            const auto& r = st.log().ticks.back();
            j["b"] = r.damping;
            j["subtask_pred"] = std::string(to_string(r.subtask_pred));
            j["subtask_true"] = std::string(to_string(r.subtask_true));
            j["progress_pred"] = number_or_null(r.progress_pred);
            j["f_h"] = vec_json(r.f_h);
        } else {
            j["b"] = cfg.sim.schedule.b_med;
            j["subtask_pred"] = "Idle";
            j["subtask_true"] = "Idle";
            j["progress_pred"] = nullptr;
        }
        {
            std::lock_guard lk(mu);
            j["degraded"] = stats.degraded;
        }
        return j;
    }

    nlohmann::json trial_report(const TrialLog& log, const std::string& file) const {
        nlohmann::json r = {{"file", file},
                            {"valid", log.meta.valid},
                            {"flags", log.meta.flags},
                            {"controller", std::string(to_string(log.meta.controller))},
                            {"t_d", number_or_null(log.meta.t_d)},
                            {"t_c", number_or_null(log.meta.t_c)},
                            {"t_a", number_or_null(log.meta.t_a)},
                            {"t_f", number_or_null(log.meta.t_f)}};
        if (log.meta.valid) {
            const auto task = eval::task_metrics(log, cfg.oscillation);
            r["f_h_ave"] = task.f_h_ave;
            r["v_ave"] = task.v_ave;
            r["effort"] = task.effort;
            r["oscillation"] = task.oscillation;
            std::vector<Subtask> truth, pred;
            for (const auto& row : log.ticks) {
                truth.push_back(row.subtask_true);
                pred.push_back(row.subtask_pred);
            }
            r["accuracy"] = eval::detection_metrics(truth, pred, log.meta.rate, cfg.transition_window_s).accuracy;
        }
        return r;
    }

    void simulate() {
        est::AsyncIntent intent(detector, estimator->clone(), cfg.pipeline, cfg.sim.rate);
        SimSettings s = cfg.sim;
        s.max_wait_s = 0.0;
        const double dt = 1.0 / s.rate;
        const auto tick = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(dt));
        const double frame_dt = 1.0 / cfg.serve.frame_hz;
        int trial = 0;

        while (!stopping) {
            const auto conn = current_connection();
            if (!conn) {
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
                continue;
            }
            {
                std::lock_guard lk(mu);
                input.ready = false;
            }
            const auto& grid = cfg.grid_b;
            const int corner = grid.corners[static_cast<std::size_t>(trial) % grid.corners.size()];
            const auto geo = env::TaskGeometry::make(grid.lp.front(), corner, grid.iod.front(), {}, s.depth_goal);
            TrialStepper stepper(geo, s, cfg.controllers.front(), intent);
            double pointer_depth = 0.0;
            double next_frame = 0.0;
            bool aborted = false;
            auto deadline = Clock::now();

            while (!stopping) {
                InputState in;
                bool connected;
                {
                    std::lock_guard lk(mu);
                    in = input;
                    connected = session && connection == *conn;
                }
                if (!connected) {
                    aborted = true;
                    break;
                }
                const bool pushing = stepper.phase() == env::TrialPhase::Go || stepper.phase() == env::TrialPhase::InContact;
                if (in.depth) pointer_depth = *in.depth;
                else if (in.grab && pushing) pointer_depth += cfg.serve.push_rate * dt;
                const Vec3 target = geo.home + geo.normal * pointer_depth + Vec3{0.0, in.y, in.z};
                const double k = cfg.serve.coupling_k, b = cfg.serve.coupling_b;
                const auto force = [&](const human::HumanContext& c) {
                    return in.grab ? (target - c.position) * k - c.velocity * b : Vec3{};
                };
                const bool more = stepper.step(in.grab, force);
                if (stepper.time() >= next_frame || !more) {
                    next_frame += frame_dt;
                    publish(state_frame(stepper, trial, stepper.last_intent().stale).dump());
                }
                if (!more) break;

                deadline += tick;
                const auto now = Clock::now();
                {
                    std::lock_guard lk(mu);
                    ++stats.ticks;
                    if (now > deadline) ++stats.overruns;
                    if (stats.ticks >= 500 &&
                        static_cast<double>(stats.overruns) > cfg.serve.overrun_warn_fraction * static_cast<double>(stats.ticks) &&
                        !stats.degraded) {
                        stats.degraded = true;
                        std::cerr << "serve: session degraded, " << stats.overruns << " of " << stats.ticks
                                  << " ticks overran\n";
                    }
                }
                if (now > deadline + std::chrono::milliseconds(50)) deadline = now;
                std::this_thread::sleep_until(deadline);
            }

            TrialMeta meta;
            meta.subject = "operator";
            meta.lp = grid.lp.front();
            meta.corner = corner;
            meta.iod = grid.iod.front();
            meta.repetition = trial;
            auto log = stepper.finish(std::move(meta), aborted || stopping ? "aborted" : "");
            const auto file = out_dir / ("trial_" + std::to_string(trial) + ".csv");
            save_trial_log(log, file);
            {
                std::lock_guard lk(mu);
                if (log.meta.has_flag("aborted")) ++stats.trials_aborted;
                else ++stats.trials_completed;
            }
            publish(nlohmann::json({{"type", "trial_end"}, {"trial", trial}, {"report", trial_report(log, file.string())}}).dump());
            ++trial;
            if (aborted || stopping) continue;

            // Hold the finished scene until the operator asks for the next trial.
            while (!stopping) {
                {
                    std::lock_guard lk(mu);
                    if (!session || connection != *conn || input.ready) break;
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
            }
        }
    }
};

TelemetryServer::TelemetryServer(ExperimentConfig cfg, const est::SubtaskDetector& detector,
                                 const est::ProgressModel& estimator, std::filesystem::path out_dir)
    : impl_(std::make_unique<Impl>(std::move(cfg), detector, estimator, std::move(out_dir))) {}

TelemetryServer::~TelemetryServer() { stop(); }

void TelemetryServer::start() {
    auto& m = *impl_;
    if (m.started) return;
    std::filesystem::create_directories(m.out_dir);
    const tcp::endpoint ep(asio::ip::make_address(m.cfg.serve.bind), static_cast<unsigned short>(m.cfg.serve.port));
    m.acceptor.open(ep.protocol());
    m.acceptor.set_option(asio::socket_base::reuse_address(true));
    m.acceptor.bind(ep);
    m.acceptor.listen();
    m.accept();
    m.started = true;
    m.io_thread = std::thread([&m] {
        auto guard = asio::make_work_guard(m.io);
        m.io.run();
    });
    m.sim_thread = std::thread([&m] { m.simulate(); });
}

void TelemetryServer::stop() {
    auto& m = *impl_;
    if (!m.started) return;
    m.stopping = true;
    if (m.sim_thread.joinable()) m.sim_thread.join();
    m.io.stop();
    if (m.io_thread.joinable()) m.io_thread.join();
    beast::error_code ec;
    m.acceptor.close(ec);
    std::lock_guard lk(m.mu);
    if (m.session) m.session->close();
    m.session.reset();
    m.started = false;
}

unsigned short TelemetryServer::port() const { return impl_->acceptor.local_endpoint().port(); }

ServeStats TelemetryServer::stats() const {
    std::lock_guard lk(impl_->mu);
    return impl_->stats;
}

}  // namespace phri::exp
