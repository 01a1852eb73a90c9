#include "pilotstack/cli/app_config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "pilotstack/errors.hpp"

namespace pilotstack::cli {

namespace {

using nlohmann::json;

/// Reads known keys of one JSON object and rejects the rest.
class Section {
public:
    Section(const json& doc, std::string name) : doc_(doc), name_(std::move(name)) {
        if (!doc_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        const auto it = doc_.find(key);
        if (it == doc_.end()) return;
        seen_.insert(key);
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config field " + name_ + "." + key + " has the wrong type");
        }
    }

    void read_path(const char* key, std::optional<std::filesystem::path>& out) {
        const auto it = doc_.find(key);
        if (it == doc_.end()) return;
        seen_.insert(key);
        if (it->is_null()) {
            out.reset();
        } else if (it->is_string()) {
            out = it->get<std::string>();
        } else {
            throw ConfigError("config field " + name_ + "." + key + " must be a path string or null");
        }
    }

    const json* sub(const char* key) {
        const auto it = doc_.find(key);
        if (it == doc_.end()) return nullptr;
        seen_.insert(key);
        return &*it;
    }

    void finish() const {
        for (const auto& [key, value] : doc_.items()) {
            if (!seen_.contains(key)) throw ConfigError("unknown config field " + name_ + "." + key);
        }
    }

private:
    const json& doc_;
    std::string name_;
    std::set<std::string> seen_;
};

json path_json(const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); }

}  // namespace

AppConfig config_from_json(const json& doc, AppConfig cfg) {
    Section root(doc, "config");
    if (const json* v = root.sub("vehicle")) {
        Section s(*v, "vehicle");
        auto& p = cfg.vehicle;
        s.read("wheelbase_m", p.wheelbase_m);
        s.read("track_width_m", p.track_width_m);
        s.read("length_m", p.length_m);
        s.read("width_m", p.width_m);
        s.read("mass_kg", p.mass_kg);
        s.read("max_steer_rad", p.max_steer_rad);
        s.read("max_speed_mps", p.max_speed_mps);
        s.read("speed_time_constant_s", p.speed_time_constant_s);
        s.finish();
    }
    if (const json* v = root.sub("camera")) {
        Section s(*v, "camera");
        auto& c = cfg.camera;
        s.read("height_m", c.height_m);
        s.read("pitch_rad", c.pitch_rad);
        s.read("horizontal_fov_rad", c.horizontal_fov_rad);
        s.read("forward_offset_m", c.forward_offset_m);
        s.read("image_width_px", c.image_width_px);
        s.read("image_height_px", c.image_height_px);
        s.finish();
    }
    if (const json* v = root.sub("loop")) {
        Section s(*v, "loop");
        auto& l = cfg.loop;
        s.read("rate_hz", l.rate_hz);
        s.read("servo_min_us", l.servo_min_us);
        s.read("servo_center_us", l.servo_center_us);
        s.read("servo_max_us", l.servo_max_us);
        s.read("pwm_frame_hz", l.pwm_frame_hz);
        s.read("throttle_deadband", l.throttle_deadband);
        s.read("autopilot_throttle_cap", l.autopilot_throttle_cap);
        s.read("teleop_hold_timeout_s", l.teleop_hold_timeout_s);
        s.finish();
    }
    if (const json* v = root.sub("trainer")) {
        Section s(*v, "trainer");
        auto& t = cfg.trainer;
        s.read("epochs", t.epochs);
        s.read("batch_size", t.batch_size);
        s.read("learning_rate", t.learning_rate);
        std::string optimizer = t.optimizer == nn::OptimizerKind::adam ? "adam" : "sgd";
        s.read("optimizer", optimizer);
        if (optimizer == "adam") {
            t.optimizer = nn::OptimizerKind::adam;
        } else if (optimizer == "sgd") {
            t.optimizer = nn::OptimizerKind::sgd;
        } else {
            throw ConfigError("trainer.optimizer must be 'adam' or 'sgd'");
        }
        s.read("beta1", t.beta1);
        s.read("beta2", t.beta2);
        s.read("epsilon", t.epsilon);
        s.read("val_fraction", t.val_fraction);
        s.read("augment_flip", t.augment_flip);
        s.finish();
    }
    if (const json* v = root.sub("telemetry")) {
        Section s(*v, "telemetry");
        auto& h = cfg.telemetry;
        s.read("stream_hz", h.stream_hz);
        s.read("jpeg_quality", h.jpeg_quality);
        s.read("client_queue", h.client_queue);
        s.read("max_consecutive_drops", h.max_consecutive_drops);
        s.finish();
    }
    root.read_path("model", cfg.model);
    root.read_path("track", cfg.track);
    root.read_path("tub", cfg.tub);
    root.read("seed", cfg.seed);
    root.finish();
    cfg.trainer.seed = cfg.seed;
    cfg.telemetry.loop_hz = cfg.loop.rate_hz;
    return cfg;
}

json config_to_json(const AppConfig& cfg) {
    const auto& p = cfg.vehicle;
    const auto& c = cfg.camera;
    const auto& l = cfg.loop;
    const auto& t = cfg.trainer;
    const auto& h = cfg.telemetry;
    return {
        {"vehicle",
         {{"wheelbase_m", p.wheelbase_m},
          {"track_width_m", p.track_width_m},
          {"length_m", p.length_m},
          {"width_m", p.width_m},
          {"mass_kg", p.mass_kg},
          {"max_steer_rad", p.max_steer_rad},
          {"max_speed_mps", p.max_speed_mps},
          {"speed_time_constant_s", p.speed_time_constant_s}}},
        {"camera",
         {{"height_m", c.height_m},
          {"pitch_rad", c.pitch_rad},
          {"horizontal_fov_rad", c.horizontal_fov_rad},
          {"forward_offset_m", c.forward_offset_m},
          {"image_width_px", c.image_width_px},
          {"image_height_px", c.image_height_px}}},
        {"loop",
         {{"rate_hz", l.rate_hz},
          {"servo_min_us", l.servo_min_us},
          {"servo_center_us", l.servo_center_us},
          {"servo_max_us", l.servo_max_us},
          {"pwm_frame_hz", l.pwm_frame_hz},
          {"throttle_deadband", l.throttle_deadband},
          {"autopilot_throttle_cap", l.autopilot_throttle_cap},
          {"teleop_hold_timeout_s", l.teleop_hold_timeout_s}}},
        {"trainer",
         {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"optimizer", t.optimizer == nn::OptimizerKind::adam ? "adam" : "sgd"},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"epsilon", t.epsilon},
          {"val_fraction", t.val_fraction},
          {"augment_flip", t.augment_flip}}},
        {"telemetry",
         {{"stream_hz", h.stream_hz},
          {"jpeg_quality", h.jpeg_quality},
          {"client_queue", h.client_queue},
          {"max_consecutive_drops", h.max_consecutive_drops}}},
        {"model", path_json(cfg.model)},
        {"track", path_json(cfg.track)},
        {"tub", path_json(cfg.tub)},
        {"seed", cfg.seed},
    };
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    const json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
    return config_from_json(doc);
}

ResolvedInputs validate_config(const AppConfig& cfg) {
    cfg.vehicle.validate();
    cfg.camera.validate();
    cfg.loop.validate();
    cfg.trainer.validate();
    cfg.telemetry.validate();

    ResolvedInputs out;
    if (cfg.track) {
        if (!std::filesystem::exists(*cfg.track)) throw ConfigError("track file not found: " + cfg.track->string());
        out.track = sim::load_track(*cfg.track);
    } else {
        out.track = sim::make_default_track();
    }
    sim::validate_track(out.track, cfg.vehicle.width_m);

    if (cfg.model) {
        if (!std::filesystem::exists(*cfg.model)) throw ConfigError("model spec not found: " + cfg.model->string());
        out.model = nn::load_model_spec(*cfg.model);
    } else {
        out.model = nn::default_model_spec();
    }
    nn::validate_model_spec(out.model);
    return out;
}

}  // namespace pilotstack::cli
