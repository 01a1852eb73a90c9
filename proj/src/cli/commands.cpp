#include "pilotstack/cli/commands.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pilotstack/cli/app_config.hpp"
#include "pilotstack/dataset/stats.hpp"
#include "pilotstack/dataset/tub.hpp"
#include "pilotstack/drive/control_loop.hpp"
#include "pilotstack/drive/datagen.hpp"
#include "pilotstack/drive/lap.hpp"
#include "pilotstack/errors.hpp"
#include "pilotstack/nn/weights_io.hpp"
#include "pilotstack/telemetry/messages.hpp"
#include "pilotstack/telemetry/server.hpp"

namespace pilotstack::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct SignalGuard {
    SignalGuard() {
        g_stop.store(false);
        prev_int_ = std::signal(SIGINT, on_signal);
        prev_term_ = std::signal(SIGTERM, on_signal);
    }
    ~SignalGuard() {
        std::signal(SIGINT, prev_int_);
        std::signal(SIGTERM, prev_term_);
    }
    void (*prev_int_)(int);
    void (*prev_term_)(int);
};

/// Flags shared by every subcommand; empty values leave the config untouched.
struct CommonFlags {
    std::string config;
    std::string track;
    std::string model;
    std::string tub;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config, "JSON config file");
    sub->add_option("--track", flags.track, "track JSON (default: built-in 13 m circuit)");
    sub->add_option("--model", flags.model, "model spec JSON (default: built-in five-conv model)");
    sub->add_option("--tub", flags.tub, "tub directory");
    sub->add_option("--seed", flags.seed, "random seed");
}

AppConfig build_config(const CommonFlags& flags) {
    AppConfig cfg = flags.config.empty() ? AppConfig{} : load_config(flags.config);
    if (!flags.track.empty()) cfg.track = flags.track;
    if (!flags.model.empty()) cfg.model = flags.model;
    if (!flags.tub.empty()) cfg.tub = flags.tub;
    if (flags.seed) cfg.seed = *flags.seed;
    cfg.trainer.seed = cfg.seed;
    cfg.telemetry.loop_hz = cfg.loop.rate_hz;
    return cfg;
}

void echo_config(const AppConfig& cfg, std::ostream& err) { err << "effective config: " << config_to_json(cfg).dump() << "\n"; }

const fs::path& require_tub(const AppConfig& cfg) {
    if (!cfg.tub) throw ConfigError("a tub directory is required (--tub)");
    return *cfg.tub;
}

dataset::Tub open_tub_for_reading(const fs::path& root) {
    if (!fs::is_directory(root)) throw ConfigError("tub not found: " + root.string());
    auto tub = dataset::Tub::open(root);
    if (tub.empty()) throw ConfigError("tub is empty: " + root.string());
    return tub;
}

dataset::Tub open_tub_for_writing(const fs::path& root, const sim::CameraModel& cam, const std::string& notes) {
    if (fs::exists(root / "manifest.json")) {
        auto tub = dataset::Tub::open_for_append(root);
        tub.repair();  // leftovers of an interrupted session
        if (tub.manifest().image_width != cam.image_width_px || tub.manifest().image_height != cam.image_height_px) {
            throw ConfigError("tub " + root.string() + " holds images of a different size than the camera");
        }
        return tub;
    }
    dataset::TubManifest manifest;
    manifest.image_width = cam.image_width_px;
    manifest.image_height = cam.image_height_px;
    manifest.created_utc = dataset::utc_now_iso8601();
    manifest.notes = notes;
    return dataset::Tub::create(root, manifest);
}

struct LoadedModel {
    std::shared_ptr<const nn::Network<float>> net;
    std::shared_ptr<const nn::ModelWeights<float>> weights;
};

LoadedModel load_model(const nn::ModelSpec& spec, const fs::path& weights_path) {
    if (!fs::exists(weights_path)) throw ConfigError("weight file not found: " + weights_path.string());
    auto net = std::make_shared<const nn::Network<float>>(spec);
    auto weights = std::make_shared<const nn::ModelWeights<float>>(nn::load_weights(weights_path, *net));
    return {net, weights};
}

void write_json_file(const fs::path& path, const nlohmann::json& doc) {
    std::ofstream out(path);
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

// ---------------------------------------------------------------- drive

struct DriveFlags {
    std::string mode = "manual_record";
    std::string weights;
    std::string pilot;  // "reference" enables the built-in pilot for autopilot mode
    double duration_s = 0.0;
    double speed_cap_mps = -1.0;
    std::string bind;
    bool no_server = false;
};

int cmd_drive(const AppConfig& base, const ResolvedInputs& inputs, const DriveFlags& flags, DriveMode mode,
              std::ostream& out, std::ostream& err) {
    AppConfig cfg = base;
    if (flags.speed_cap_mps >= 0.0) {
        cfg.loop.autopilot_throttle_cap = std::min(1.0, flags.speed_cap_mps / cfg.vehicle.max_speed_mps);
    }
    drive::World world(sim::Track(inputs.track), cfg.vehicle, cfg.camera);
    drive::ControlLoop loop(std::move(world), cfg.loop, mode);

    if (!flags.weights.empty()) {
        auto model = load_model(inputs.model, flags.weights);
        loop.set_autopilot(std::make_shared<drive::CnnPilot>(model.net, model.weights));
    } else if (flags.pilot == "reference") {
        const double speed = cfg.loop.autopilot_throttle_cap * cfg.vehicle.max_speed_mps;
        loop.set_autopilot(std::make_shared<drive::PurePursuitPilot>(speed));
    } else if (!flags.pilot.empty() && flags.pilot != "cnn") {
        throw ConfigError("unknown pilot '" + flags.pilot + "' (expected reference or cnn)");
    }
    if (mode == DriveMode::autopilot && flags.weights.empty() && flags.pilot != "reference") {
        throw ConfigError("autopilot needs --weights or --pilot reference");
    }

    std::optional<dataset::Tub> tub;
    if (records_in(mode) && !cfg.tub) throw ConfigError("recording mode " + std::string(to_string(mode)) + " needs --tub");
    if (cfg.tub) {
        tub.emplace(open_tub_for_writing(*cfg.tub, cfg.camera, "drive session"));
        loop.set_tub(&*tub);
    }

    telemetry::TelemetryHub hub(cfg.telemetry);
    loop.set_sink(&hub);
    std::unique_ptr<telemetry::TelemetryServer> server;
    if (!flags.no_server) {
        auto scfg = telemetry::server_config_from_env();
        if (!flags.bind.empty()) std::tie(scfg.host, scfg.port) = telemetry::parse_bind(flags.bind);
        server = std::make_unique<telemetry::TelemetryServer>(
            scfg, hub, [&loop](std::string_view text) { return telemetry::handle_control(text, loop.mailbox()); },
            [&loop, &hub] {
                const auto st = loop.status();
                return nlohmann::json{{"status", "ok"},
                                      {"tick", st.tick},
                                      {"mode", std::string(to_string(st.mode))},
                                      {"clients", hub.client_count()},
                                      {"last_error", st.last_error},
                                      {"session", drive::summary_to_json(st.summary)}};
            });
        server->start();
        err << "serving on " << server->url() << "\n";
    }

    SignalGuard signals;
    drive::SteadyClock clock;
    const double duration = flags.duration_s > 0.0 ? flags.duration_s : std::numeric_limits<double>::infinity();
    const drive::SessionSummary summary = loop.run(clock, g_stop, duration);
    if (server) server->stop();
    hub.flush();

    const auto doc = drive::summary_to_json(summary);
    out << "session summary: " << doc.dump() << "\n";
    if (tub) {
        auto session = doc;
        session["mode"] = std::string(to_string(mode));
        session["finished_utc"] = dataset::utc_now_iso8601();
        write_json_file(tub->root() / "session.json", session);
    }
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainFlags {
    std::vector<std::string> tubs;
    std::optional<int> epochs;
    std::string out;
    std::string history;
};

int cmd_train(const AppConfig& base, const ResolvedInputs& inputs, const TrainFlags& flags, std::ostream& out) {
    AppConfig cfg = base;
    if (flags.epochs) cfg.trainer.epochs = *flags.epochs;
    cfg.trainer.validate();
    std::vector<fs::path> tubs(flags.tubs.begin(), flags.tubs.end());
    if (tubs.empty()) tubs.push_back(require_tub(cfg));

    nn::TrainingSet data(inputs.model.input_height, inputs.model.input_width);
    if (inputs.model.input_channels != 3) throw ConfigError("tub images are RGB; the model must take 3 channels");
    for (const auto& root : tubs) {
        const auto tub = open_tub_for_reading(root);
        for (std::size_t i = 0; i < tub.size(); ++i) {
            const auto& r = tub.record(i);
            data.add(tub.load_image(i), r.steering_norm, r.throttle_norm);
        }
    }
    const fs::path weights_path = flags.out;
    const fs::path history_path =
        flags.history.empty() ? fs::path(weights_path).replace_extension(".history.csv") : fs::path(flags.history);

    const auto split = dataset::split_indices(data.size(), cfg.trainer.val_fraction, cfg.trainer.seed);
    out << "training on " << split.train.size() << " samples, validating on " << split.val.size() << "\n";
    const nn::Network<float> net(inputs.model);
    const auto result = nn::train(net, data, split, cfg.trainer, [&out](const nn::EpochStats& e) {
        out << "epoch " << e.epoch << " train_mse " << e.train_mse << " val_mse " << e.val_mse << " ("
            << std::fixed << std::setprecision(1) << e.seconds << " s)" << std::defaultfloat << std::setprecision(6)
            << "\n"
            << std::flush;
    });
    nn::save_weights(result.weights, weights_path);
    std::ofstream csv(history_path);
    result.history.write_csv(csv);
    if (!csv) throw std::runtime_error("cannot write " + history_path.string());

    const auto& last = result.history.epochs.back();
    out << "final train_mse " << last.train_mse << " val_mse " << last.val_mse << " val_steering_mse "
        << last.val_steering_mse << "\n";
    out << "weights: " << weights_path.string() << " (crc32 " << std::hex << nn::file_crc32(weights_path) << std::dec
        << ")\nhistory: " << history_path.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- eval-lap

struct LapFlags {
    std::string pilot;
    std::string weights;
    int laps = 1;
    double speed_cap_mps = 0.65;
    double timeout_s = 60.0;
    std::string report;
};

int cmd_eval_lap(const AppConfig& base, const ResolvedInputs& inputs, const LapFlags& flags, std::ostream& out) {
    AppConfig cfg = base;
    if (flags.laps < 1) throw ConfigError("--laps must be >= 1");
    if (!(flags.speed_cap_mps > 0.0)) throw ConfigError("--speed-cap must be positive");
    cfg.loop.autopilot_throttle_cap = std::min(1.0, flags.speed_cap_mps / cfg.vehicle.max_speed_mps);

    const std::string pilot_kind = !flags.pilot.empty() ? flags.pilot : (flags.weights.empty() ? "reference" : "cnn");
    std::shared_ptr<drive::Pilot> pilot;
    if (pilot_kind == "reference") {
        pilot = std::make_shared<drive::PurePursuitPilot>(flags.speed_cap_mps);
    } else if (pilot_kind == "cnn") {
        if (flags.weights.empty()) throw ConfigError("--pilot cnn needs --weights");
        auto model = load_model(inputs.model, flags.weights);
        pilot = std::make_shared<drive::CnnPilot>(model.net, model.weights);
    } else {
        throw ConfigError("unknown pilot '" + pilot_kind + "' (expected reference or cnn)");
    }

    drive::World world(sim::Track(inputs.track), cfg.vehicle, cfg.camera);
    const auto session = drive::eval_lap(std::move(world), pilot, cfg.loop, {flags.laps, flags.timeout_s, 0.0});

    out << "lap  completed  time_s   mean_mps  max_offset_m  result\n";
    for (const auto& r : session.laps) {
        out << std::setw(3) << r.lap << "  " << std::setw(9) << (r.completed ? "yes" : "no") << "  " << std::fixed
            << std::setprecision(2) << std::setw(7) << r.lap_time_s << "  " << std::setprecision(3) << std::setw(8)
            << r.mean_speed_mps << "  " << std::setw(12) << r.max_abs_lateral_offset_m << "  " << r.reason << "\n";
    }
    out << std::defaultfloat << std::setprecision(6);
    const auto doc = drive::lap_session_to_json(session, pilot_kind, cfg.loop.autopilot_throttle_cap);
    if (!flags.report.empty()) {
        write_json_file(flags.report, doc);
    } else {
        out << doc.dump() << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- analyze

int cmd_analyze(const AppConfig& cfg, const std::string& csv_flag, std::size_t bins, std::ostream& out) {
    const auto& root = require_tub(cfg);
    const auto tub = open_tub_for_reading(root);
    const auto stats = dataset::summarize(tub, bins);
    dataset::print_stats(out, stats);
    const fs::path csv_path = csv_flag.empty() ? root / "histogram.csv" : fs::path(csv_flag);
    std::ofstream csv(csv_path);
    dataset::write_histogram_csv(csv, stats);
    if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    out << "histogram: " << csv_path.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- replay

struct ReplayFlags {
    double speed = 1.0;
    std::string bind;
    bool no_server = false;
};

int cmd_replay(const AppConfig& cfg, const ReplayFlags& flags, std::ostream& out, std::ostream& err) {
    if (!(flags.speed > 0.0)) throw ConfigError("--speed must be positive");
    const auto tub = open_tub_for_reading(require_tub(cfg));
    telemetry::TelemetryHub hub(cfg.telemetry);
    std::unique_ptr<telemetry::TelemetryServer> server;
    drive::ControlMailbox ignored;  // replay has no car to control
    if (!flags.no_server) {
        auto scfg = telemetry::server_config_from_env();
        if (!flags.bind.empty()) std::tie(scfg.host, scfg.port) = telemetry::parse_bind(flags.bind);
        server = std::make_unique<telemetry::TelemetryServer>(
            scfg, hub, [](std::string_view) { return telemetry::error_reply("replay sessions accept no control"); },
            [&tub] { return nlohmann::json{{"status", "ok"}, {"replay", true}, {"records", tub.size()}}; });
        server->start();
        err << "serving on " << server->url() << "\n";
    }

    SignalGuard signals;
    drive::SteadyClock clock;
    const double t0 = clock.now_s();
    const std::int64_t first_ms = tub.record(0).timestamp_ms;
    std::size_t sent = 0;
    for (std::size_t i = 0; i < tub.size() && !g_stop.load(); ++i) {
        const auto& r = tub.record(i);
        clock.sleep_until(t0 + static_cast<double>(r.timestamp_ms - first_ms) / 1000.0 / flags.speed);
        drive::TelemetrySnapshot snap;
        snap.tick = r.index;
        snap.timestamp_ms = r.timestamp_ms;
        snap.mode = r.mode;
        snap.speed_mps = r.speed_mps;
        snap.steering_norm = r.steering_norm;
        snap.throttle_norm = r.throttle_norm;
        snap.motor_duty = drive::throttle_to_drive(r.throttle_norm, cfg.loop).duty;
        snap.frame = std::make_shared<const sim::ImageFrame>(tub.load_image(i));
        hub.publish(std::move(snap));
        ++sent;
    }
    hub.flush();
    if (server) server->stop();
    out << "replayed " << sent << " records in " << std::fixed << std::setprecision(2) << clock.now_s() - t0 << " s\n"
        << std::defaultfloat << std::setprecision(6);
    return kExitOk;
}

// ---------------------------------------------------------------- make-track / generate

int cmd_make_track(const AppConfig& cfg, const std::string& out_path, double lane_width, std::ostream& out) {
    auto spec = sim::make_default_track();
    if (lane_width > 0.0) spec.lane_width_m = lane_width;
    sim::validate_track(spec, cfg.vehicle.width_m);
    sim::save_track(spec, out_path);
    out << "track: " << out_path << " (" << spec.centerline.size() << " points, " << std::fixed << std::setprecision(3)
        << sim::Track(spec).perimeter() << " m)\n"
        << std::defaultfloat << std::setprecision(6);
    return kExitOk;
}

int cmd_generate(const AppConfig& cfg, const ResolvedInputs& inputs, std::size_t frames, double target_speed,
                 std::ostream& out) {
    const auto& root = require_tub(cfg);
    if (fs::exists(root / "manifest.json")) throw ConfigError("refusing to add generated data to existing tub " + root.string());
    dataset::TubManifest manifest;
    manifest.image_width = cfg.camera.image_width_px;
    manifest.image_height = cfg.camera.image_height_px;
    manifest.created_utc = dataset::utc_now_iso8601();
    manifest.notes = "generated by the pure-pursuit reference pilot, seed " + std::to_string(cfg.seed);
    auto tub = dataset::Tub::create(root, manifest);

    drive::DatagenOptions opts;
    opts.frames = frames;
    opts.seed = cfg.seed;
    opts.rate_hz = cfg.loop.rate_hz;
    opts.target_speed_mps = target_speed;
    const drive::World world(sim::Track(inputs.track), cfg.vehicle, cfg.camera);
    drive::generate_dataset(world, opts, [&tub](const drive::Sample& s) {
        dataset::DriveRecord rec;
        rec.steering_norm = s.steering;
        rec.throttle_norm = s.throttle;
        rec.timestamp_ms = s.timestamp_ms;
        rec.mode = DriveMode::autopilot;
        rec.speed_mps = s.state.speed_mps;
        tub.append(s.frame, rec);
    });
    out << "generated " << tub.size() << " records in " << root.string() << "\n";
    return kExitOk;
}

}  // namespace

void request_stop() { g_stop.store(true); }

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"pilotstack: simulated RC-car autopilot stack"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "pilotstack 0.1.0");

    CommonFlags common;
    DriveFlags drive_flags;
    TrainFlags train_flags;
    LapFlags lap_flags;
    ReplayFlags replay_flags;
    std::string analyze_csv;
    std::size_t analyze_bins = 20;
    std::string track_out;
    double track_lane_width = 0.0;
    std::size_t gen_frames = 2000;
    double gen_speed = 0.8;

    auto* drive_cmd = app.add_subcommand("drive", "simulate and teleoperate, recording to a tub");
    add_common(drive_cmd, common);
    drive_cmd->add_option("--mode", drive_flags.mode, "manual, manual_record or autopilot")
        ->check(CLI::IsMember({"manual", "manual_record", "autopilot"}));
    drive_cmd->add_option("--weights", drive_flags.weights, "weights that enable autopilot mode");
    drive_cmd->add_option("--pilot", drive_flags.pilot, "reference: use the built-in pilot for autopilot mode");
    drive_cmd->add_option("--duration", drive_flags.duration_s, "stop after this many seconds (default: until Ctrl-C)");
    drive_cmd->add_option("--speed-cap", drive_flags.speed_cap_mps, "autopilot speed cap in m/s");
    drive_cmd->add_option("--bind", drive_flags.bind, "host:port (default: PILOTSTACK_BIND or 127.0.0.1:8887)");
    drive_cmd->add_flag("--no-server", drive_flags.no_server, "run without the telemetry service");

    DriveFlags auto_flags;
    auto_flags.mode = "autopilot";
    auto* auto_cmd = app.add_subcommand("autopilot", "drive with a trained model (or the reference pilot)");
    add_common(auto_cmd, common);
    auto_cmd->add_option("--weights", auto_flags.weights, "weight file");
    auto_cmd->add_option("--pilot", auto_flags.pilot, "reference or cnn");
    auto_cmd->add_option("--duration", auto_flags.duration_s, "stop after this many seconds");
    auto_cmd->add_option("--speed-cap", auto_flags.speed_cap_mps, "speed cap in m/s");
    auto_cmd->add_option("--bind", auto_flags.bind, "host:port");
    auto_cmd->add_flag("--no-server", auto_flags.no_server, "run without the telemetry service");

    auto* train_cmd = app.add_subcommand("train", "train the CNN on one or more tubs");
    add_common(train_cmd, common);
    train_cmd->add_option("--tubs", train_flags.tubs, "additional tubs (in order)");
    train_cmd->add_option("--epochs", train_flags.epochs, "epochs (default 100)");
    train_cmd->add_option("--out", train_flags.out, "weight file to write")->required();
    train_cmd->add_option("--history", train_flags.history, "history CSV (default: <out>.history.csv)");

    auto* lap_cmd = app.add_subcommand("eval-lap", "time laps on the track");
    add_common(lap_cmd, common);
    lap_cmd->add_option("--pilot", lap_flags.pilot, "reference or cnn")->check(CLI::IsMember({"reference", "cnn"}));
    lap_cmd->add_option("--weights", lap_flags.weights, "weight file for the cnn pilot");
    lap_cmd->add_option("--laps", lap_flags.laps, "consecutive laps");
    lap_cmd->add_option("--speed-cap", lap_flags.speed_cap_mps, "speed cap in m/s");
    lap_cmd->add_option("--timeout", lap_flags.timeout_s, "per-lap timeout in seconds");
    lap_cmd->add_option("--report", lap_flags.report, "write the JSON report here instead of stdout");

    auto* analyze_cmd = app.add_subcommand("analyze", "summarize a tub");
    add_common(analyze_cmd, common);
    analyze_cmd->add_option("--csv", analyze_csv, "histogram CSV (default: <tub>/histogram.csv)");
    analyze_cmd->add_option("--bins", analyze_bins, "histogram bins")->check(CLI::PositiveNumber);

    auto* replay_cmd = app.add_subcommand("replay", "re-publish a recorded session as telemetry");
    add_common(replay_cmd, common);
    replay_cmd->add_option("--speed", replay_flags.speed, "playback speed factor");
    replay_cmd->add_option("--bind", replay_flags.bind, "host:port");
    replay_cmd->add_flag("--no-server", replay_flags.no_server, "publish without the network service");

    auto* track_cmd = app.add_subcommand("make-track", "write the default track as JSON");
    add_common(track_cmd, common);
    track_cmd->add_option("--out", track_out, "output file")->required();
    track_cmd->add_option("--lane-width", track_lane_width, "lane width in meters");

    auto* gen_cmd = app.add_subcommand("generate", "record a dataset with the reference pilot");
    add_common(gen_cmd, common);
    gen_cmd->add_option("--frames", gen_frames, "number of records")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--target-speed", gen_speed, "pilot speed in m/s");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const AppConfig cfg = build_config(common);
        echo_config(cfg, err);
        const ResolvedInputs inputs = validate_config(cfg);

        if (drive_cmd->parsed()) {
            return cmd_drive(cfg, inputs, drive_flags, *parse_drive_mode(drive_flags.mode), out, err);
        }
        if (auto_cmd->parsed()) return cmd_drive(cfg, inputs, auto_flags, DriveMode::autopilot, out, err);
        if (train_cmd->parsed()) return cmd_train(cfg, inputs, train_flags, out);
        if (lap_cmd->parsed()) return cmd_eval_lap(cfg, inputs, lap_flags, out);
        if (analyze_cmd->parsed()) return cmd_analyze(cfg, analyze_csv, analyze_bins, out);
        if (replay_cmd->parsed()) return cmd_replay(cfg, replay_flags, out, err);
        if (track_cmd->parsed()) return cmd_make_track(cfg, track_out, track_lane_width, out);
        if (gen_cmd->parsed()) return cmd_generate(cfg, inputs, gen_frames, gen_speed, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FingerprintMismatch& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CorruptDataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}

}  // namespace pilotstack::cli
