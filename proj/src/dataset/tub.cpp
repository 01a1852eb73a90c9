#include "pilotstack/dataset/tub.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <set>
#include <sstream>
#include <utility>

#include "pilotstack/dataset/image_ops.hpp"
#include "pilotstack/errors.hpp"

namespace pilotstack::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kCatalog = "catalog.jsonl";
constexpr const char* kImages = "images";
constexpr const char* kLock = "writer.lock";

void check_control(double v, const char* name) {
    if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
        throw RangeError(std::string(name) + " " + std::to_string(v) + " outside [-1, 1]");
    }
}

void acquire_lock(const fs::path& root) {
    // "x" makes creation exclusive.
    std::FILE* f = std::fopen((root / kLock).c_str(), "wx");
    if (f == nullptr) {
        throw ConfigError("tub " + root.string() + " is locked by another writer (remove " + kLock +
                          " if no writer is running)");
    }
    std::fclose(f);
}

}  // namespace

json manifest_to_json(const TubManifest& m) {
    return json{{"schema_version", m.schema_version},
                {"image_width", m.image_width},
                {"image_height", m.image_height},
                {"created_utc", m.created_utc},
                {"notes", m.notes}};
}

TubManifest manifest_from_json(const json& doc) {
    TubManifest m;
    try {
        m.schema_version = doc.at("schema_version").get<int>();
        m.image_width = doc.at("image_width").get<int>();
        m.image_height = doc.at("image_height").get<int>();
        m.created_utc = doc.at("created_utc").get<std::string>();
        m.notes = doc.value("notes", std::string{});
    } catch (const json::exception& e) {
        throw CorruptDataError(std::string("malformed tub manifest: ") + e.what());
    }
    if (m.schema_version != kTubSchemaVersion) {
        throw CorruptDataError("unsupported tub schema_version " + std::to_string(m.schema_version));
    }
    if (m.image_width < 1 || m.image_height < 1) throw CorruptDataError("tub manifest image size must be positive");
    return m;
}

std::string utc_now_iso8601() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json record_to_json(const DriveRecord& r) {
    return json{{"index", r.index},
                {"image", r.image_ref},
                {"steering", r.steering_norm},
                {"throttle", r.throttle_norm},
                {"timestamp_ms", r.timestamp_ms},
                {"mode", to_string(r.mode)},
                {"speed_mps", r.speed_mps}};
}

DriveRecord record_from_json(const json& doc) {
    DriveRecord r;
    r.index = doc.at("index").get<std::int64_t>();
    r.image_ref = doc.at("image").get<std::string>();
    r.steering_norm = doc.at("steering").get<double>();
    r.throttle_norm = doc.at("throttle").get<double>();
    r.timestamp_ms = doc.at("timestamp_ms").get<std::int64_t>();
    const auto mode = parse_drive_mode(doc.at("mode").get<std::string>());
    if (!mode) throw CorruptDataError("unknown record mode " + doc.at("mode").dump());
    r.mode = *mode;
    r.speed_mps = doc.at("speed_mps").get<double>();
    return r;
}

Tub Tub::create(const fs::path& root, TubManifest manifest) {
    if (fs::exists(root)) {
        if (!fs::is_directory(root) || !fs::is_empty(root)) {
            throw ConfigError("refusing to create tub: " + root.string() + " exists and is not an empty directory");
        }
    }
    if (manifest.image_width < 1 || manifest.image_height < 1) throw ConfigError("tub image size must be positive");
    if (manifest.created_utc.empty()) manifest.created_utc = utc_now_iso8601();
    manifest.schema_version = kTubSchemaVersion;

    fs::create_directories(root / kImages);
    {
        std::ofstream out(root / kManifest);
        out << manifest_to_json(manifest).dump(2) << '\n';
        if (!out) throw ConfigError("cannot write manifest in " + root.string());
    }
    { std::ofstream touch(root / kCatalog); }

    acquire_lock(root);
    Tub tub;
    tub.root_ = root;
    tub.manifest_ = std::move(manifest);
    tub.writable_ = true;
    tub.catalog_.open(root / kCatalog, std::ios::app | std::ios::binary);
    return tub;
}

Tub Tub::open(const fs::path& root) {
    if (!fs::is_directory(root)) throw ConfigError("tub not found: " + root.string());
    Tub tub;
    tub.root_ = root;
    std::ifstream in(root / kManifest);
    if (!in) throw CorruptDataError("tub " + root.string() + " has no manifest.json");
    try {
        tub.manifest_ = manifest_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw CorruptDataError("tub manifest is not valid JSON: " + std::string(e.what()));
    }
    tub.load_catalog();
    return tub;
}

Tub Tub::open_for_append(const fs::path& root) {
    Tub tub = open(root);
    acquire_lock(root);
    tub.writable_ = true;
    tub.catalog_.open(root / kCatalog, std::ios::app | std::ios::binary);
    return tub;
}

Tub::Tub(Tub&& other) noexcept
    : root_(std::move(other.root_)),
      manifest_(std::move(other.manifest_)),
      records_(std::move(other.records_)),
      catalog_(std::move(other.catalog_)),
      writable_(std::exchange(other.writable_, false)) {}

Tub& Tub::operator=(Tub&& other) noexcept {
    if (this != &other) {
        release_lock();
        root_ = std::move(other.root_);
        manifest_ = std::move(other.manifest_);
        records_ = std::move(other.records_);
        catalog_ = std::move(other.catalog_);
        writable_ = std::exchange(other.writable_, false);
    }
    return *this;
}

Tub::~Tub() { release_lock(); }

void Tub::release_lock() {
    if (!writable_) return;
    catalog_.close();
    std::error_code ec;
    fs::remove(root_ / kLock, ec);
    writable_ = false;
}

void Tub::load_catalog() {
    std::ifstream in(root_ / kCatalog, std::ios::binary);
    if (!in) throw CorruptDataError("tub " + root_.string() + " has no catalog.jsonl");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        const auto nl = content.find('\n', pos);
        // A final line without a newline is an interrupted append; it is not part of the tub.
        if (nl == std::string::npos) break;
        const std::string_view line(content.data() + pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        DriveRecord r;
        try {
            r = record_from_json(json::parse(line));
        } catch (const json::exception& e) {
            throw CorruptDataError("catalog line " + std::to_string(line_no) + ": " + e.what());
        }
        if (r.index != static_cast<std::int64_t>(records_.size())) {
            throw CorruptDataError("catalog line " + std::to_string(line_no) + ": expected index " +
                                   std::to_string(records_.size()) + ", found " + std::to_string(r.index));
        }
        try {
            check_control(r.steering_norm, "steering");
            check_control(r.throttle_norm, "throttle");
        } catch (const RangeError& e) {
            throw CorruptDataError("catalog line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!fs::exists(root_ / kImages / r.image_ref)) {
            throw CorruptDataError("record " + std::to_string(r.index) + " references missing image " + r.image_ref);
        }
        records_.push_back(std::move(r));
    }
}

fs::path Tub::image_path(std::size_t i) const { return root_ / kImages / records_.at(i).image_ref; }

std::int64_t Tub::append(const ImageFrame& frame, DriveRecord record) {
    if (!writable_) throw ConfigError("tub " + root_.string() + " is open read-only");
    if (frame.width_px != manifest_.image_width || frame.height_px != manifest_.image_height || !frame.valid()) {
        throw ShapeError("frame " + std::to_string(frame.width_px) + "x" + std::to_string(frame.height_px) +
                         " does not match tub size " + std::to_string(manifest_.image_width) + "x" +
                         std::to_string(manifest_.image_height));
    }
    check_control(record.steering_norm, "steering");
    check_control(record.throttle_norm, "throttle");

    record.index = static_cast<std::int64_t>(records_.size());
    record.image_ref = std::to_string(record.index) + ".png";

    const fs::path final_path = root_ / kImages / record.image_ref;
    const fs::path tmp_path = root_ / kImages / ("." + record.image_ref + ".tmp");
    write_png(frame, tmp_path);
    fs::rename(tmp_path, final_path);

    const std::string line = record_to_json(record).dump() + "\n";
    catalog_.write(line.data(), static_cast<std::streamsize>(line.size()));
    catalog_.flush();
    if (!catalog_) throw CorruptDataError("failed to append to catalog of " + root_.string());

    records_.push_back(std::move(record));
    return records_.back().index;
}

ImageFrame Tub::load_image(std::size_t i) const {
    ImageFrame frame = read_png(image_path(i));
    if (frame.width_px != manifest_.image_width || frame.height_px != manifest_.image_height) {
        throw CorruptDataError("image " + records_.at(i).image_ref + " does not match the manifest dimensions");
    }
    return frame;
}

std::vector<fs::path> Tub::orphans() const {
    std::set<std::string> referenced;
    for (const auto& r : records_) referenced.insert(r.image_ref);
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(root_ / kImages)) {
        if (!entry.is_regular_file()) continue;
        if (referenced.count(entry.path().filename().string()) == 0) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t Tub::repair() {
    if (!writable_) throw ConfigError("repair needs a writable tub");
    const auto stray = orphans();
    for (const auto& p : stray) fs::remove(p);

    // Drop an interrupted trailing catalog line.
    catalog_.close();
    std::ifstream in(root_ / kCatalog, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto last_nl = content.rfind('\n');
    const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (keep != content.size()) fs::resize_file(root_ / kCatalog, keep);
    catalog_.open(root_ / kCatalog, std::ios::app | std::ios::binary);
    return stray.size();
}

void Tub::append_tub(const Tub& other) {
    if (other.manifest().image_width != manifest_.image_width ||
        other.manifest().image_height != manifest_.image_height) {
        throw ShapeError("cannot merge tubs with different image sizes");
    }
    for (std::size_t i = 0; i < other.size(); ++i) append(other.load_image(i), other.record(i));
}

}  // namespace pilotstack::dataset
