#pragma once

#include <cstdint>

namespace pimhe {

// Counts of device instruction classes issued by the arithmetic layer.
// The simulator weights each class with a configurable cycle cost; a
// 32x32->64 multiply is one mul32 event (modelled as a 32-step
// shift-and-add sequence, so its default weight is 96 cycles, not 1).
struct InstrCounter {
    std::uint64_t adds = 0;
    std::uint64_t addcs = 0;
    std::uint64_t muls32 = 0;
    std::uint64_t loads = 0;
    std::uint64_t stores = 0;
    std::uint64_t loop_overhead = 0;

    InstrCounter& operator+=(const InstrCounter& o) {
        adds += o.adds;
        addcs += o.addcs;
        muls32 += o.muls32;
        loads += o.loads;
        stores += o.stores;
        loop_overhead += o.loop_overhead;
        return *this;
    }

    // *this += o * reps
    void add_scaled(const InstrCounter& o, std::uint64_t reps) {
        adds += o.adds * reps;
        addcs += o.addcs * reps;
        muls32 += o.muls32 * reps;
        loads += o.loads * reps;
        stores += o.stores * reps;
        loop_overhead += o.loop_overhead * reps;
    }

    friend InstrCounter operator+(InstrCounter a, const InstrCounter& b) {
        a += b;
        return a;
    }

    bool operator==(const InstrCounter&) const = default;

    std::uint64_t total_events() const {
        return adds + addcs + muls32 + loads + stores + loop_overhead;
    }
};

namespace detail {
inline thread_local InstrCounter* g_counter = nullptr;
}

// Routes instruction charges to a per-context counter while alive.
// Each simulated core (or test) installs its own counter, so counts are
// never shared between execution contexts.  Nesting restores the previous
// counter on destruction.
class CountScope {
public:
    explicit CountScope(InstrCounter& c) : prev_(detail::g_counter) {
        detail::g_counter = &c;
    }
    ~CountScope() { detail::g_counter = prev_; }
    CountScope(const CountScope&) = delete;
    CountScope& operator=(const CountScope&) = delete;

private:
    InstrCounter* prev_;
};

inline InstrCounter* active_counter() { return detail::g_counter; }

} // namespace pimhe
