#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>

// Per-thread instrumentation used by the cost-contract and memory-ceiling
// checks. Counters are thread_local so that concurrent trials never observe
// each other's work.

namespace tccs::instrument {

struct Counters {
    std::uint64_t multiply_adds = 0;
    std::size_t live_entries = 0;
    std::size_t peak_entries = 0;
};

inline Counters& counters() noexcept {
    thread_local Counters c;
    return c;
}

inline void count_madds(std::uint64_t n) noexcept { counters().multiply_adds += n; }

inline std::uint64_t madds() noexcept { return counters().multiply_adds; }

inline void reset_madds() noexcept { counters().multiply_adds = 0; }

/// Restart peak tracking from the current live level.
inline void reset_peak() noexcept { counters().peak_entries = counters().live_entries; }

inline std::size_t live_entries() noexcept { return counters().live_entries; }

inline std::size_t peak_entries() noexcept { return counters().peak_entries; }

/// RAII registration of `n` tensor entries in the live-entry ledger.
/// Copies register again, moves transfer ownership.
class EntryMeter {
public:
    EntryMeter() = default;
    explicit EntryMeter(std::size_t n) noexcept : n_(n) { add(n_); }
    EntryMeter(const EntryMeter& other) noexcept : n_(other.n_) { add(n_); }
    EntryMeter(EntryMeter&& other) noexcept : n_(other.n_) { other.n_ = 0; }
    EntryMeter& operator=(const EntryMeter& other) noexcept {
        if (this != &other) {
            sub(n_);
            n_ = other.n_;
            add(n_);
        }
        return *this;
    }
    EntryMeter& operator=(EntryMeter&& other) noexcept {
        if (this != &other) {
            sub(n_);
            n_ = other.n_;
            other.n_ = 0;
        }
        return *this;
    }
    ~EntryMeter() { sub(n_); }

private:
    static void add(std::size_t n) noexcept {
        auto& c = counters();
        c.live_entries += n;
        c.peak_entries = std::max(c.peak_entries, c.live_entries);
    }
    static void sub(std::size_t n) noexcept {
        auto& c = counters();
        c.live_entries -= std::min(n, c.live_entries);
    }

    std::size_t n_ = 0;
};

}  // namespace tccs::instrument
