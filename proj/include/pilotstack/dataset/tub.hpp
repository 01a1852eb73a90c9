#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pilotstack/drive_mode.hpp"
#include "pilotstack/sim/image.hpp"

namespace pilotstack::dataset {

using sim::ImageFrame;

inline constexpr int kTubSchemaVersion = 1;

struct TubManifest {
    int schema_version = kTubSchemaVersion;
    int image_width = 160;
    int image_height = 120;
    std::string created_utc;
    std::string notes;

    friend bool operator==(const TubManifest&, const TubManifest&) = default;
};

nlohmann::json manifest_to_json(const TubManifest& m);
TubManifest manifest_from_json(const nlohmann::json& doc);

/// Current UTC time as ISO-8601 (seconds resolution).
std::string utc_now_iso8601();

/// One logged sample. Controls are normalized to [-1, 1].
struct DriveRecord {
    std::int64_t index = 0;
    std::string image_ref;
    double steering_norm = 0.0;
    double throttle_norm = 0.0;
    std::int64_t timestamp_ms = 0;
    DriveMode mode = DriveMode::manual_record;
    double speed_mps = 0.0;

    friend bool operator==(const DriveRecord&, const DriveRecord&) = default;
};

nlohmann::json record_to_json(const DriveRecord& r);
DriveRecord record_from_json(const nlohmann::json& doc);

/// On-disk dataset: `manifest.json`, `catalog.jsonl` (one record per line)
/// and `images/{index}.png`.
///
/// Each append writes the image first (temp file + rename) and then appends the
/// catalog line, so an interrupted append leaves at most an orphan image that
/// `repair()` removes. A writable tub holds `writer.lock` for its lifetime.
class Tub {
public:
    static Tub create(const std::filesystem::path& root, TubManifest manifest);
    static Tub open(const std::filesystem::path& root);            // read-only
    static Tub open_for_append(const std::filesystem::path& root);  // takes the writer lock

    Tub(Tub&& other) noexcept;
    Tub& operator=(Tub&& other) noexcept;
    Tub(const Tub&) = delete;
    Tub& operator=(const Tub&) = delete;
    ~Tub();

    const std::filesystem::path& root() const { return root_; }
    const TubManifest& manifest() const { return manifest_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::vector<DriveRecord>& records() const { return records_; }
    const DriveRecord& record(std::size_t i) const { return records_.at(i); }
    bool writable() const { return writable_; }

    /// Persists the frame and appends the record; the index and image_ref are
    /// assigned here. Returns the new index.
    std::int64_t append(const ImageFrame& frame, DriveRecord record);

    ImageFrame load_image(std::size_t i) const;

    /// Image files present on disk with no catalog line.
    std::vector<std::filesystem::path> orphans() const;
    /// Deletes orphan images; returns how many were removed.
    std::size_t repair();

    /// Copies every record of `other` into this tub, re-indexing them.
    void append_tub(const Tub& other);

    std::filesystem::path image_path(std::size_t i) const;

private:
    Tub() = default;
    void load_catalog();
    void release_lock();

    std::filesystem::path root_;
    TubManifest manifest_;
    std::vector<DriveRecord> records_;
    std::ofstream catalog_;
    bool writable_ = false;
};

}  // namespace pilotstack::dataset
