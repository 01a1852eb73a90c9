#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pilotstack/drive/control_loop.hpp"

namespace pilotstack::telemetry {

struct HubConfig {
    double loop_hz = 20.0;
    double stream_hz = 10.0;  // camera frames per second attached to telemetry
    int jpeg_quality = 70;
    std::size_t ring_capacity = 8;   // snapshots waiting for encoding
    std::size_t client_queue = 16;   // encoded messages per client
    std::size_t max_consecutive_drops = 64;  // a client this far behind is disconnected

    void validate() const;
};

/// True when the frame of `tick` should be streamed so that frames go out at
/// `stream_hz` on average from a loop running at `loop_hz`.
bool should_stream_frame(std::int64_t tick, double loop_hz, double stream_hz);

using Message = std::shared_ptr<const std::string>;

/// Bounded per-client outbox. Pushing never blocks: when full, the oldest
/// message is dropped. A client that keeps overflowing is closed.
class Subscription {
public:
    Subscription(std::size_t capacity, std::size_t max_consecutive_drops)
        : capacity_(capacity), max_drops_(max_consecutive_drops) {}

    void push(Message msg);
    std::optional<Message> try_pop();
    std::optional<Message> pop_wait(std::chrono::milliseconds timeout);

    /// Called after each push and on close, with the queue lock held; must
    /// not block or touch this subscription.
    void set_notify(std::function<void()> fn);

    void close();
    bool closed() const;
    std::uint64_t dropped() const;
    std::size_t pending() const;

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Message> queue_;
    std::size_t capacity_;
    std::size_t max_drops_;
    std::size_t consecutive_drops_ = 0;
    std::uint64_t dropped_ = 0;
    bool closed_ = false;
    std::function<void()> notify_;
};

/// Single producer (the control loop), many consumers. `publish` only moves
/// the snapshot into a small drop-oldest ring; JSON and JPEG encoding and the
/// fan-out to clients happen on the hub's own thread.
class TelemetryHub final : public drive::TelemetrySink {
public:
    explicit TelemetryHub(HubConfig cfg = {});
    ~TelemetryHub() override;
    TelemetryHub(const TelemetryHub&) = delete;
    TelemetryHub& operator=(const TelemetryHub&) = delete;

    void publish(drive::TelemetrySnapshot snapshot) override;

    std::shared_ptr<Subscription> subscribe();
    void unsubscribe(const std::shared_ptr<Subscription>& sub);
    std::size_t client_count() const;

    /// Blocks until every snapshot published so far has been fanned out.
    void flush();

    std::uint64_t published() const { return published_.load(); }
    std::uint64_t ring_drops() const { return ring_drops_.load(); }
    const HubConfig& config() const { return cfg_; }

private:
    void worker();
    std::string encode(const drive::TelemetrySnapshot& snap) const;

    HubConfig cfg_;
    std::mutex ring_mu_;
    std::condition_variable ring_cv_;
    std::condition_variable idle_cv_;
    std::deque<drive::TelemetrySnapshot> ring_;
    bool busy_ = false;
    bool stopping_ = false;

    mutable std::mutex subs_mu_;
    std::vector<std::shared_ptr<Subscription>> subs_;

    std::atomic<std::uint64_t> published_{0};
    std::atomic<std::uint64_t> ring_drops_{0};
    std::thread thread_;
};

}  // namespace pilotstack::telemetry
