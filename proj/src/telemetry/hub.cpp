#include "pilotstack/telemetry/hub.hpp"

#include <algorithm>
#include <cmath>

#include "pilotstack/dataset/image_ops.hpp"
#include "pilotstack/errors.hpp"
#include "pilotstack/telemetry/messages.hpp"

namespace pilotstack::telemetry {

void HubConfig::validate() const {
    if (!(loop_hz > 0.0)) throw ConfigError("telemetry loop_hz must be positive");
    if (!(stream_hz >= 0.0)) throw ConfigError("telemetry stream_hz must be non-negative");
    if (jpeg_quality < 1 || jpeg_quality > 100) throw ConfigError("telemetry jpeg_quality must lie in [1, 100]");
    if (ring_capacity == 0 || client_queue == 0) throw ConfigError("telemetry queue capacities must be positive");
    if (max_consecutive_drops == 0) throw ConfigError("telemetry max_consecutive_drops must be positive");
}

bool should_stream_frame(std::int64_t tick, double loop_hz, double stream_hz) {
    if (stream_hz <= 0.0 || tick < 0) return false;
    if (stream_hz >= loop_hz) return true;
    if (tick == 0) return true;
    const double ratio = stream_hz / loop_hz;
    return std::floor(static_cast<double>(tick) * ratio) != std::floor(static_cast<double>(tick - 1) * ratio);
}

void Subscription::push(Message msg) {
    {
        std::lock_guard lock(mu_);
        if (closed_) return;
        if (queue_.size() >= capacity_) {
            queue_.pop_front();
            ++dropped_;
            if (++consecutive_drops_ >= max_drops_) {
                closed_ = true;
                queue_.clear();
            }
        }
        if (!closed_) queue_.push_back(std::move(msg));
        // Under the lock so that clearing the callback is a hard barrier.
        if (notify_) notify_();
    }
    cv_.notify_one();
}

std::optional<Message> Subscription::try_pop() {
    std::lock_guard lock(mu_);
    if (queue_.empty()) return std::nullopt;
    Message m = std::move(queue_.front());
    queue_.pop_front();
    consecutive_drops_ = 0;
    return m;
}

std::optional<Message> Subscription::pop_wait(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    Message m = std::move(queue_.front());
    queue_.pop_front();
    consecutive_drops_ = 0;
    return m;
}

void Subscription::set_notify(std::function<void()> fn) {
    std::lock_guard lock(mu_);
    notify_ = std::move(fn);
}

void Subscription::close() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
        queue_.clear();
        if (notify_) notify_();
    }
    cv_.notify_all();
}

bool Subscription::closed() const {
    std::lock_guard lock(mu_);
    return closed_;
}

std::uint64_t Subscription::dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
}

std::size_t Subscription::pending() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

TelemetryHub::TelemetryHub(HubConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    thread_ = std::thread([this] { worker(); });
}

TelemetryHub::~TelemetryHub() {
    {
        std::lock_guard lock(ring_mu_);
        stopping_ = true;
    }
    ring_cv_.notify_all();
    thread_.join();
    std::lock_guard lock(subs_mu_);
    for (auto& s : subs_) s->close();
}

void TelemetryHub::publish(drive::TelemetrySnapshot snapshot) {
    {
        std::lock_guard lock(ring_mu_);
        if (ring_.size() >= cfg_.ring_capacity) {
            ring_.pop_front();
            ring_drops_.fetch_add(1);
        }
        ring_.push_back(std::move(snapshot));
    }
    published_.fetch_add(1);
    ring_cv_.notify_one();
}

std::shared_ptr<Subscription> TelemetryHub::subscribe() {
    auto sub = std::make_shared<Subscription>(cfg_.client_queue, cfg_.max_consecutive_drops);
    std::lock_guard lock(subs_mu_);
    subs_.push_back(sub);
    return sub;
}

void TelemetryHub::unsubscribe(const std::shared_ptr<Subscription>& sub) {
    std::lock_guard lock(subs_mu_);
    std::erase(subs_, sub);
}

std::size_t TelemetryHub::client_count() const {
    std::lock_guard lock(subs_mu_);
    return subs_.size();
}

void TelemetryHub::flush() {
    std::unique_lock lock(ring_mu_);
    idle_cv_.wait(lock, [&] { return (ring_.empty() && !busy_) || stopping_; });
}

std::string TelemetryHub::encode(const drive::TelemetrySnapshot& snap) const {
    std::optional<std::string> frame;
    if (snap.frame && should_stream_frame(snap.tick, cfg_.loop_hz, cfg_.stream_hz)) {
        frame = base64_encode(dataset::encode_jpeg(*snap.frame, cfg_.jpeg_quality));
    }
    return telemetry_to_json(snap, frame).dump();
}

void TelemetryHub::worker() {
    for (;;) {
        drive::TelemetrySnapshot snap;
        {
            std::unique_lock lock(ring_mu_);
            busy_ = false;
            idle_cv_.notify_all();
            ring_cv_.wait(lock, [&] { return !ring_.empty() || stopping_; });
            if (stopping_) return;
            snap = std::move(ring_.front());
            ring_.pop_front();
            busy_ = true;
        }
        std::vector<std::shared_ptr<Subscription>> targets;
        {
            std::lock_guard lock(subs_mu_);
            std::erase_if(subs_, [](const auto& s) { return s->closed(); });
            targets = subs_;
        }
        if (targets.empty()) continue;
        const auto msg = std::make_shared<const std::string>(encode(snap));
        for (auto& s : targets) s->push(msg);
    }
}

}  // namespace pilotstack::telemetry
