#include <doctest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <filesystem>
#include <set>
#include <thread>

#include <json.hpp>

#include "fixtures.hpp"
#include "phri/exp/serve.hpp"

using namespace phri;
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using nlohmann::json;

namespace {

class Client {
public:
    explicit Client(unsigned short port) {
        asio::ip::tcp::resolver r(io_);
        asio::connect(ws_.next_layer(), r.resolve("127.0.0.1", std::to_string(port)));
        ws_.handshake("127.0.0.1", "/");
        ws_.text(true);
    }
    json read() {
        beast::flat_buffer b;
        ws_.read(b);
        return json::parse(beast::buffers_to_string(b.data()));
    }
    /// Next state frame, skipping any other frame type.
    json state() {
        while (true) {
            auto j = read();
            if (j.at("type") == "state") return j;
        }
    }
    void send(const json& j) { ws_.write(asio::buffer(j.dump())); }
    void close() { ws_.close(websocket::close_code::normal); }

private:
    asio::io_context io_;
    websocket::stream<asio::ip::tcp::socket> ws_{io_};
};

template <class Pred>
bool wait_for(Pred p, double seconds) {
    const auto end = std::chrono::steady_clock::now() + std::chrono::duration<double>(seconds);
    while (std::chrono::steady_clock::now() < end) {
        if (p()) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return p();
}

}  // namespace

TEST_CASE("telemetry session: full trial, discard rules, disconnect and reconnect") {
    const auto out = std::filesystem::temp_directory_path() / "phri_unit_serve";
    std::filesystem::remove_all(out);
    exp::ExperimentConfig cfg;
    cfg.kind = "B";
    cfg.serve.port = 0;
    cfg.controllers = {ControllerId::C2};
    const auto det = test::random_detector(31);
    const auto est = test::random_cnn(31);
    exp::TelemetryServer server(cfg, det, *est, out);
    server.start();
    REQUIRE(server.port() != 0);

    Client c(server.port());

    // Without input the tool rests at home awaiting a grab.
    auto f = c.state();
    const auto t0 = std::chrono::steady_clock::now();
    int frames = 1;
    while (std::chrono::steady_clock::now() - t0 < std::chrono::seconds(1)) {
        f = c.state();
        ++frames;
    }
    CHECK(frames >= 30);
    CHECK(f.at("phase") == "AwaitGrab");
    CHECK(f.at("prompt") == "GRAB THE HANDLE");
    for (int i = 0; i < 3; ++i) CHECK(f.at("tool")[i].get<double>() == f.at("home")[i].get<double>());

    // Out-of-order client timestamps are dropped.
    const auto before = server.stats().inputs_discarded;
    c.send({{"type", "input"}, {"pointer", {0.0, 0.0}}, {"grab", false}, {"ts", 1000.0}});
    c.send({{"type", "input"}, {"pointer", {0.0, 0.0}}, {"grab", true}, {"ts", 999.0}});
    c.send({{"pointer", {0.0, 0.0}}, {"grab", true}});
    CHECK(wait_for([&] { return server.stats().inputs_discarded == before + 2; }, 2.0));
    CHECK(c.state().at("phase") == "AwaitGrab");

    // Grab and aim at the target centre; GO follows three seconds of holding.
    const double y = f.at("target")[1].get<double>() - f.at("home")[1].get<double>();
    const double z = f.at("target")[2].get<double>() - f.at("home")[2].get<double>();
    c.send({{"type", "input"}, {"pointer", {y, z}}, {"grab", true}, {"ts", 1001.0}});
    double t_hold = -1.0, t_go = -1.0;
    while (true) {
        f = c.state();
        const auto phase = f.at("phase").get<std::string>();
        if (phase == "Hold3s" && t_hold < 0.0) t_hold = f.at("t").get<double>();
        if (phase == "Go") {
            t_go = f.at("t").get<double>();
            CHECK(f.at("prompt") == "GO");
            break;
        }
        REQUIRE(f.at("t").get<double>() < 10.0);
    }
    REQUIRE(t_hold >= 0.0);
    CHECK(t_go - t_hold == doctest::Approx(3.0).epsilon(0.02));

    // The pointer advances while grabbed until the trial completes.
    std::set<std::string> phases;
    json last;
    while (true) {
        f = c.read();
        if (f.at("type") == "trial_end") break;
        last = f;
        phases.insert(f.at("phase").get<std::string>());
        REQUIRE(f.at("t").get<double>() < 40.0);
    }
    CHECK(phases.count("Go") == 1);
    CHECK(last.at("prompt") == "RETRACT");
    CHECK(last.at("depth_mm").get<double>() >= 4.0);
    const auto report = f.at("report");
    CHECK(report.at("t_c").get<double>() > report.at("t_d").get<double>());
    CHECK(report.at("valid").get<bool>());
    CHECK(report.at("controller") == "C2");
    const auto log = load_trial_log(report.at("file").get<std::string>());
    CHECK(check_log_invariants(log).empty());
    CHECK(log.meta.valid);
    CHECK(server.stats().trials_completed == 1);

    // Next trial: disconnect mid-trial aborts it and the server keeps serving.
    c.send({{"type", "ready"}});
    c.send({{"type", "input"}, {"pointer", {0.0, 0.0}}, {"grab", true}, {"ts", 2000.0}});
    do f = c.state();
    while (f.at("trial").get<int>() != 1 || f.at("phase") == "AwaitGrab");
    c.close();
    REQUIRE(wait_for([&] { return server.stats().trials_aborted == 1; }, 5.0));
    const auto aborted = load_trial_log(out / "trial_1.csv");
    CHECK(aborted.meta.has_flag("aborted"));
    CHECK_FALSE(aborted.meta.valid);
    CHECK(check_log_invariants(aborted).empty());

    Client c2(server.port());
    f = c2.state();
    CHECK(f.at("trial").get<int>() == 2);
    CHECK(f.at("phase") == "AwaitGrab");
    c2.close();
    server.stop();
    std::filesystem::remove_all(out);
}
