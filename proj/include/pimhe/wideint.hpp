#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include "pimhe/instr.hpp"

namespace pimhe {

using Limb = std::uint32_t;

// Fixed-width unsigned integer, little-endian 32-bit limbs.  The target
// device natively supports 32-bit add/addc only, so all arithmetic is
// modelled (and costed) in terms of those plus a software 32x32 multiply.
// Coefficient widths in use are 1, 2 and 4 limbs; intermediates (double
// products, scaled accumulators, reciprocals) go up to kMaxLimbs.
struct WideInt {
    static constexpr int kMaxLimbs = 12;

    std::array<Limb, kMaxLimbs> limb{};
    int width = 1;

    WideInt() = default;
    explicit WideInt(int w) : width(w) {
        if (w < 1 || w > kMaxLimbs) throw std::invalid_argument("WideInt: bad width " + std::to_string(w));
    }

    static WideInt from_u64(std::uint64_t v, int w) {
        WideInt r(w);
        r.limb[0] = static_cast<Limb>(v);
        if (w > 1) r.limb[1] = static_cast<Limb>(v >> 32);
        else if (v >> 32) throw std::invalid_argument("WideInt::from_u64: value does not fit width 1");
        return r;
    }

    std::uint64_t to_u64() const {
        for (int i = 2; i < width; ++i)
            if (limb[i]) throw std::invalid_argument("WideInt::to_u64: value exceeds 64 bits");
        std::uint64_t v = limb[0];
        if (width > 1) v |= static_cast<std::uint64_t>(limb[1]) << 32;
        return v;
    }

    bool is_zero() const {
        for (int i = 0; i < width; ++i)
            if (limb[i]) return false;
        return true;
    }

    int bit_length() const {
        for (int i = width - 1; i >= 0; --i)
            if (limb[i]) return 32 * i + (32 - __builtin_clz(limb[i]));
        return 0;
    }

    // Zero-extend or truncate (truncation requires the dropped limbs to be zero).
    WideInt resized(int w) const {
        WideInt r(w);
        for (int i = 0; i < width; ++i) {
            if (i < w) r.limb[i] = limb[i];
            else if (limb[i]) throw std::invalid_argument("WideInt::resized: truncation loses bits");
        }
        return r;
    }

    // Minimal width holding the value (at least 1).
    WideInt trimmed() const {
        int w = width;
        while (w > 1 && limb[w - 1] == 0) --w;
        return resized(w);
    }

    bool operator==(const WideInt& o) const {
        if (width != o.width) return false;
        for (int i = 0; i < width; ++i)
            if (limb[i] != o.limb[i]) return false;
        return true;
    }
};

// -1 / 0 / +1 for a < b / a == b / a > b.  Widths must match.
int wide_cmp(const WideInt& a, const WideInt& b);

// ---- native instruction layer ----------------------------------------------

// One 32-bit add with carry-in and carry-out.  carry_in must be 0 or 1;
// charged as `add` when carry_in is 0, `addc` otherwise.
std::pair<Limb, Limb> add_carry(Limb a, Limb b, Limb carry_in);

// Exact 32x32 -> 64-bit product as (lo, hi).  The device has no multiply
// unit; this models the 32-iteration shift-and-add routine, charged as one
// mul32 event (weighted to 96 cycles by the default cost table).
struct Mul32 {
    Limb lo;
    Limb hi;
};
Mul32 mul32_shift_add(Limb a, Limb b);

// ---- wide arithmetic --------------------------------------------------------

// Carry-chain add/sub of equal-width operands: 1 add + (width-1) addc.
std::pair<WideInt, Limb> wide_add(const WideInt& a, const WideInt& b);
std::pair<WideInt, Limb> wide_sub(const WideInt& a, const WideInt& b); // returns borrow

// Full double-width products of equal-width operands.
WideInt schoolbook_mul(const WideInt& a, const WideInt& b);

// Recursive 3-multiplication Karatsuba over 32-bit chunks, recursing to
// single limbs.  Width must be a power of two.  The middle term is handled
// in sign-and-magnitude form via wide_sub borrow flags, so no signed
// representation is needed.  Bit-identical to schoolbook_mul.
WideInt karatsuba_mul(const WideInt& a, const WideInt& b);

// ---- modular arithmetic -----------------------------------------------------

// Precomputed Barrett reciprocal mu = floor(2^(64w) / q) for a fixed odd
// modulus; reduction then needs no data-dependent trial division.
struct Barrett {
    WideInt q;      // w limbs
    WideInt mu;     // w + 1 limbs
    int w = 1;

    static Barrett make(const WideInt& q);
};

// Reduce a (2w limbs) modulo q (w limbs).  Result < q.
WideInt mod_reduce(const WideInt& a, const Barrett& br);
WideInt mod_reduce(const WideInt& a, const WideInt& q);

// (a + b) mod q and (a * b) mod q for a, b already reduced (< q, w limbs).
// mod_mul routes the product through karatsuba_mul, then Barrett-reduces.
WideInt mod_add(const WideInt& a, const WideInt& b, const WideInt& q);
WideInt mod_sub(const WideInt& a, const WideInt& b, const WideInt& q);
WideInt mod_mul(const WideInt& a, const WideInt& b, const Barrett& br);

// ---- helpers (host-side plumbing, also used by the scale-and-round step) ----

// Knuth long division: a = quot * b + rem, 0 <= rem < b.  Arbitrary widths;
// quot has width(a) - width(b) + 1 limbs, rem has width(b).
std::pair<WideInt, WideInt> div_mod(const WideInt& a, const WideInt& b);

// a * small, widened by one limb.
WideInt mul_small(const WideInt& a, std::uint64_t small);

// a << (32 * limbs), widened.
WideInt shift_limbs(const WideInt& a, int limbs);

// ---- cost formulas ----------------------------------------------------------
//
// Every public operation charges its formula here exactly once per call.
// The formulas are data-independent, which keeps simulated reports
// reproducible and lets closed-form estimates match measured counters
// exactly.  Conditional work (carry corrections, sign fixups) is charged
// unconditionally, i.e. the model assumes straight-line device code.
namespace cost {

void charge(const InstrCounter& c);

InstrCounter wide_add_cost(int w);
InstrCounter wide_sub_cost(int w);
InstrCounter mul32_cost();
InstrCounter schoolbook_cost(int w);
InstrCounter karatsuba_cost(int w);
// Barrett reduction by a fixed modulus: the two reciprocal products are
// constant multiplications, modelled as unrolled add/shift chains.
InstrCounter mod_reduce_cost(int w);
InstrCounter mod_add_cost(int w);
InstrCounter mod_mul_cost(int w);
InstrCounter div_mod_cost(int wa, int wb);
InstrCounter mul_small_cost(int w);

} // namespace cost

} // namespace pimhe
