// Copyright The molog Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <queue>
#include <string>
#include <vector>

namespace molog::sim {

/// Discrete-event core: a time-ordered queue of thunks with a byte meter and
/// a replayable trace. Ties break on insertion sequence, so identical
/// schedules replay identically.
class EventLoop {
  public:
    struct TraceRecord {
        double time_ms;
        std::string actor;
        std::string event;
    };

    void at(double time_ms, std::string actor, std::string event, std::function<void()> fn) {
        queue_.push(Item{time_ms, seq_++, std::move(actor), std::move(event), std::move(fn)});
    }

    /// Counts a message of `bytes` on the wire and schedules its delivery.
    void send(double now_ms, double latency_ms, size_t bytes, std::string actor, std::string event,
              std::function<void()> on_delivery) {
        bytes_on_wire_ += bytes;
        ++messages_;
        at(now_ms + latency_ms, std::move(actor), std::move(event), std::move(on_delivery));
    }

    void run() {
        while (!queue_.empty()) {
            Item it = queue_.top();
            queue_.pop();
            now_ = it.time_ms;
            trace_.push_back({it.time_ms, it.actor, it.event});
            it.fn();
        }
    }

    double now() const { return now_; }
    size_t bytes_on_wire() const { return bytes_on_wire_; }
    size_t messages() const { return messages_; }
    const std::vector<TraceRecord>& trace() const { return trace_; }

  private:
    struct Item {
        double time_ms;
        uint64_t seq;
        std::string actor;
        std::string event;
        std::function<void()> fn;

        bool operator>(const Item& o) const {
            if (time_ms != o.time_ms) return time_ms > o.time_ms;
            return seq > o.seq;
        }
    };

    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue_;
    uint64_t seq_ = 0;
    double now_ = 0;
    size_t bytes_on_wire_ = 0;
    size_t messages_ = 0;
    std::vector<TraceRecord> trace_;
};

}  // namespace molog::sim
