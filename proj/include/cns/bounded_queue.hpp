#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>

namespace cns {

/// What a producer does when the queue is at capacity.
enum class OverflowPolicy { Reject, Block };

enum class PushResult { Accepted, Full, Closed };

/// Mutex/cv bounded FIFO shared by the local context queues and the bridge
/// handoff. close() wakes all waiters; remaining items stay poppable so a
/// consumer can drain after close. Waiter counts gate the cv notifies, which
/// keeps the uncontended hot path free of futex wakes.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity, OverflowPolicy policy = OverflowPolicy::Reject)
        : capacity_(capacity), policy_(policy) {}

    PushResult push(T value) {
        std::unique_lock lock(mutex_);
        if (policy_ == OverflowPolicy::Block && items_.size() >= capacity_ && !closed_) {
            ++waiting_producers_;
            not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
            --waiting_producers_;
        }
        if (closed_) {
            return PushResult::Closed;
        }
        if (items_.size() >= capacity_) {
            return PushResult::Full;
        }
        items_.push_back(std::move(value));
        ++pushed_total_;
        const bool wake = waiting_consumers_ > 0;
        lock.unlock();
        if (wake) {
            not_empty_.notify_one();
        }
        return PushResult::Accepted;
    }

    std::optional<T> pop(std::chrono::nanoseconds timeout) {
        std::unique_lock lock(mutex_);
        if (items_.empty() && !closed_) {
            ++waiting_consumers_;
            not_empty_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); });
            --waiting_consumers_;
        }
        if (items_.empty()) {
            return std::nullopt; // timed out, or closed and drained
        }
        T out = std::move(items_.front());
        items_.pop_front();
        const bool wake = waiting_producers_ > 0;
        lock.unlock();
        if (wake) {
            not_full_.notify_one();
        }
        return out;
    }

    std::optional<T> try_pop() { return pop(std::chrono::nanoseconds(0)); }

    /// Reject all future pushes and wake blocked producers and consumers.
    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        not_full_.notify_all();
        not_empty_.notify_all();
    }

    bool closed() const {
        std::lock_guard lock(mutex_);
        return closed_;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return items_.size();
    }

    bool empty() const { return size() == 0; }

    std::size_t capacity() const { return capacity_; }

    /// Accepted pushes since construction. With the per-item disposal
    /// counters kept by consumers this makes backlog accounting exact even
    /// while an item is popped but still being processed.
    std::uint64_t pushed_total() const {
        std::lock_guard lock(mutex_);
        return pushed_total_;
    }

private:
    mutable std::mutex mutex_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
    std::deque<T> items_;
    std::size_t capacity_;
    OverflowPolicy policy_;
    bool closed_ = false;
    std::uint64_t pushed_total_ = 0;
    std::size_t waiting_consumers_ = 0;
    std::size_t waiting_producers_ = 0;
};

} // namespace cns
