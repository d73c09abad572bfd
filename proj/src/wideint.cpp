#include "pimhe/wideint.hpp"

#include <cstring>

namespace pimhe {

namespace {

// ---- raw limb kernels (no charging; callers charge composed formulas) ------

Limb raw_add(const Limb* a, const Limb* b, Limb* out, int w) {
    std::uint64_t carry = 0;
    for (int i = 0; i < w; ++i) {
        std::uint64_t s = static_cast<std::uint64_t>(a[i]) + b[i] + carry;
        out[i] = static_cast<Limb>(s);
        carry = s >> 32;
    }
    return static_cast<Limb>(carry);
}

Limb raw_sub(const Limb* a, const Limb* b, Limb* out, int w) {
    std::uint64_t borrow = 0;
    for (int i = 0; i < w; ++i) {
        std::uint64_t d = static_cast<std::uint64_t>(a[i]) - b[i] - borrow;
        out[i] = static_cast<Limb>(d);
        borrow = (d >> 32) & 1;
    }
    return static_cast<Limb>(borrow);
}

int raw_cmp(const Limb* a, const Limb* b, int w) {
    for (int i = w - 1; i >= 0; --i) {
        if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
    }
    return 0;
}

// out[0..wa+wb) = a * b, any widths.
void raw_mul(const Limb* a, int wa, const Limb* b, int wb, Limb* out) {
    std::memset(out, 0, sizeof(Limb) * (wa + wb));
    for (int i = 0; i < wa; ++i) {
        std::uint64_t carry = 0;
        std::uint64_t ai = a[i];
        for (int j = 0; j < wb; ++j) {
            std::uint64_t cur = out[i + j] + ai * b[j] + carry;
            out[i + j] = static_cast<Limb>(cur);
            carry = cur >> 32;
        }
        out[i + wb] = static_cast<Limb>(carry);
    }
}

// out[0..2w) = a * b by recursive Karatsuba; w a power of two.
void raw_karatsuba(const Limb* a, const Limb* b, Limb* out, int w) {
    if (w == 1) {
        std::uint64_t p = static_cast<std::uint64_t>(a[0]) * b[0];
        out[0] = static_cast<Limb>(p);
        out[1] = static_cast<Limb>(p >> 32);
        return;
    }
    const int h = w / 2;
    raw_karatsuba(a, b, out, h);          // z0 = aL*bL
    raw_karatsuba(a + h, b + h, out + w, h); // z2 = aH*bH

    // Middle term in sign-and-magnitude: z1 = z0 + z2 - sign*(|aL-aH|*|bL-bH|)
    Limb da[WideInt::kMaxLimbs / 2], db[WideInt::kMaxLimbs / 2];
    bool neg_a = raw_cmp(a, a + h, h) < 0;
    bool neg_b = raw_cmp(b, b + h, h) < 0;
    if (neg_a) raw_sub(a + h, a, da, h); else raw_sub(a, a + h, da, h);
    if (neg_b) raw_sub(b + h, b, db, h); else raw_sub(b, b + h, db, h);

    Limb m[WideInt::kMaxLimbs];
    raw_karatsuba(da, db, m, h);

    Limb t[WideInt::kMaxLimbs + 1];
    Limb carry = raw_add(out, out + w, t, w); // z0 + z2
    if (neg_a == neg_b) {
        Limb borrow = raw_sub(t, m, t, w);    // z1 >= 0, so the final borrow
        carry -= borrow;                      // cancels against the carry
    } else {
        carry += raw_add(t, m, t, w);
    }
    t[w] = carry;

    // out += t << (32*h)
    std::uint64_t c = 0;
    for (int i = 0; i <= w; ++i) {
        std::uint64_t s = static_cast<std::uint64_t>(out[h + i]) + t[i] + c;
        out[h + i] = static_cast<Limb>(s);
        c = s >> 32;
    }
    for (int i = h + w + 1; c && i < 2 * w; ++i) {
        std::uint64_t s = static_cast<std::uint64_t>(out[i]) + c;
        out[i] = static_cast<Limb>(s);
        c = s >> 32;
    }
}

int effective_len(const Limb* a, int w) {
    while (w > 0 && a[w - 1] == 0) --w;
    return w;
}

// Knuth algorithm D.  q gets m-n+1 limbs, r gets n limbs (lengths, not widths).
void raw_div_mod(const Limb* a, int m, const Limb* b, int n, Limb* quot, Limb* rem) {
    if (n == 1) {
        std::uint64_t d = b[0], r = 0;
        for (int i = m - 1; i >= 0; --i) {
            std::uint64_t cur = (r << 32) | a[i];
            quot[i] = static_cast<Limb>(cur / d);
            r = cur % d;
        }
        rem[0] = static_cast<Limb>(r);
        return;
    }

    // Normalize so the divisor's top limb has its high bit set.
    int s = __builtin_clz(b[n - 1]);
    Limb un[2 * WideInt::kMaxLimbs + 1];
    Limb vn[WideInt::kMaxLimbs];
    if (s > 0) {
        for (int i = n - 1; i > 0; --i)
            vn[i] = (b[i] << s) | (b[i - 1] >> (32 - s));
        vn[0] = b[0] << s;
        un[m] = a[m - 1] >> (32 - s);
        for (int i = m - 1; i > 0; --i)
            un[i] = (a[i] << s) | (a[i - 1] >> (32 - s));
        un[0] = a[0] << s;
    } else {
        for (int i = 0; i < n; ++i) vn[i] = b[i];
        for (int i = 0; i < m; ++i) un[i] = a[i];
        un[m] = 0;
    }

    for (int j = m - n; j >= 0; --j) {
        std::uint64_t num = (static_cast<std::uint64_t>(un[j + n]) << 32) | un[j + n - 1];
        std::uint64_t qhat = num / vn[n - 1];
        std::uint64_t rhat = num % vn[n - 1];
        while (qhat >= (1ull << 32) ||
               qhat * vn[n - 2] > ((rhat << 32) | un[j + n - 2])) {
            --qhat;
            rhat += vn[n - 1];
            if (rhat >= (1ull << 32)) break;
        }

        std::int64_t borrow = 0;
        std::uint64_t carry = 0;
        for (int i = 0; i < n; ++i) {
            std::uint64_t p = qhat * vn[i] + carry;
            carry = p >> 32;
            std::int64_t t = static_cast<std::int64_t>(un[i + j]) - borrow -
                             static_cast<std::int64_t>(p & 0xFFFFFFFFull);
            un[i + j] = static_cast<Limb>(t);
            borrow = (t < 0) ? 1 : 0;
        }
        std::int64_t t = static_cast<std::int64_t>(un[j + n]) - borrow -
                         static_cast<std::int64_t>(carry);
        un[j + n] = static_cast<Limb>(t);

        if (t < 0) { // add back
            --qhat;
            std::uint64_t c = 0;
            for (int i = 0; i < n; ++i) {
                std::uint64_t sum = static_cast<std::uint64_t>(un[i + j]) + vn[i] + c;
                un[i + j] = static_cast<Limb>(sum);
                c = sum >> 32;
            }
            un[j + n] = static_cast<Limb>(un[j + n] + c);
        }
        quot[j] = static_cast<Limb>(qhat);
    }

    if (s > 0) {
        for (int i = 0; i < n - 1; ++i)
            rem[i] = (un[i] >> s) | (un[i + 1] << (32 - s));
        rem[n - 1] = un[n - 1] >> s;
    } else {
        for (int i = 0; i < n; ++i) rem[i] = un[i];
    }
}

void require_same_width(const WideInt& a, const WideInt& b, const char* op) {
    if (a.width != b.width)
        throw std::invalid_argument(std::string(op) + ": width mismatch (" +
                                    std::to_string(a.width) + " vs " + std::to_string(b.width) + ")");
}

} // namespace

int wide_cmp(const WideInt& a, const WideInt& b) {
    require_same_width(a, b, "wide_cmp");
    return raw_cmp(a.limb.data(), b.limb.data(), a.width);
}

std::pair<Limb, Limb> add_carry(Limb a, Limb b, Limb carry_in) {
    if (carry_in > 1) throw std::invalid_argument("add_carry: carry_in must be 0 or 1");
    if (auto* c = active_counter()) {
        if (carry_in) c->addcs += 1; else c->adds += 1;
    }
    std::uint64_t s = static_cast<std::uint64_t>(a) + b + carry_in;
    return {static_cast<Limb>(s), static_cast<Limb>(s >> 32)};
}

Mul32 mul32_shift_add(Limb a, Limb b) {
    cost::charge(cost::mul32_cost());
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    return {static_cast<Limb>(p), static_cast<Limb>(p >> 32)};
}

std::pair<WideInt, Limb> wide_add(const WideInt& a, const WideInt& b) {
    require_same_width(a, b, "wide_add");
    cost::charge(cost::wide_add_cost(a.width));
    WideInt out(a.width);
    Limb carry = raw_add(a.limb.data(), b.limb.data(), out.limb.data(), a.width);
    return {out, carry};
}

std::pair<WideInt, Limb> wide_sub(const WideInt& a, const WideInt& b) {
    require_same_width(a, b, "wide_sub");
    cost::charge(cost::wide_sub_cost(a.width));
    WideInt out(a.width);
    Limb borrow = raw_sub(a.limb.data(), b.limb.data(), out.limb.data(), a.width);
    return {out, borrow};
}

WideInt schoolbook_mul(const WideInt& a, const WideInt& b) {
    require_same_width(a, b, "schoolbook_mul");
    if (2 * a.width > WideInt::kMaxLimbs)
        throw std::invalid_argument("schoolbook_mul: product exceeds kMaxLimbs");
    cost::charge(cost::schoolbook_cost(a.width));
    WideInt out(2 * a.width);
    raw_mul(a.limb.data(), a.width, b.limb.data(), b.width, out.limb.data());
    return out;
}

WideInt karatsuba_mul(const WideInt& a, const WideInt& b) {
    require_same_width(a, b, "karatsuba_mul");
    int w = a.width;
    if (w & (w - 1))
        throw std::invalid_argument("karatsuba_mul: width must be a power of two");
    if (2 * w > WideInt::kMaxLimbs)
        throw std::invalid_argument("karatsuba_mul: product exceeds kMaxLimbs");
    cost::charge(cost::karatsuba_cost(w));
    WideInt out(2 * w);
    raw_karatsuba(a.limb.data(), b.limb.data(), out.limb.data(), w);
    return out;
}

Barrett Barrett::make(const WideInt& q) {
    int len = effective_len(q.limb.data(), q.width);
    if (len == 0) throw std::invalid_argument("Barrett: q must be nonzero");
    if (!(q.limb[0] & 1) || (len == 1 && q.limb[0] < 3))
        throw std::invalid_argument("Barrett: q must be odd and >= 3");
    if (len != q.width)
        throw std::invalid_argument("Barrett: q must be normalized (top limb nonzero)");

    Barrett br;
    br.w = q.width;
    br.q = q;

    // mu = floor(2^(64w) / q)
    Limb num[2 * WideInt::kMaxLimbs + 1] = {0};
    num[2 * br.w] = 1;
    Limb quot[2 * WideInt::kMaxLimbs + 1] = {0};
    Limb rem[WideInt::kMaxLimbs] = {0};
    raw_div_mod(num, 2 * br.w + 1, q.limb.data(), br.w, quot, rem);
    br.mu = WideInt(br.w + 1);
    for (int i = 0; i <= br.w; ++i) br.mu.limb[i] = quot[i];
    if (effective_len(quot, 2 * br.w + 2 - br.w) > br.w + 1)
        throw std::invalid_argument("Barrett: reciprocal out of range");
    return br;
}

WideInt mod_reduce(const WideInt& a, const Barrett& br) {
    const int w = br.w;
    if (a.width != 2 * w)
        throw std::invalid_argument("mod_reduce: operand must be twice the modulus width");
    cost::charge(cost::mod_reduce_cost(w));

    // q1 = a >> 32(w-1); q2 = q1 * mu; q3 = q2 >> 32(w+1)
    Limb q2[3 * WideInt::kMaxLimbs] = {0};
    raw_mul(a.limb.data() + (w - 1), w + 1, br.mu.limb.data(), w + 1, q2);
    const Limb* q3 = q2 + (w + 1);

    // r = (a - q3 * q) mod 2^(32(w+1)), then at most two corrective subtractions
    Limb r2[3 * WideInt::kMaxLimbs] = {0};
    raw_mul(q3, w + 1, br.q.limb.data(), w, r2);
    Limb r[WideInt::kMaxLimbs + 1];
    raw_sub(a.limb.data(), r2, r, w + 1);

    Limb qpad[WideInt::kMaxLimbs + 1];
    for (int i = 0; i < w; ++i) qpad[i] = br.q.limb[i];
    qpad[w] = 0;
    while (raw_cmp(r, qpad, w + 1) >= 0)
        raw_sub(r, qpad, r, w + 1);

    WideInt out(w);
    for (int i = 0; i < w; ++i) out.limb[i] = r[i];
    return out;
}

WideInt mod_reduce(const WideInt& a, const WideInt& q) {
    return mod_reduce(a, Barrett::make(q));
}

WideInt mod_add(const WideInt& a, const WideInt& b, const WideInt& q) {
    require_same_width(a, b, "mod_add");
    require_same_width(a, q, "mod_add");
    if (raw_cmp(a.limb.data(), q.limb.data(), a.width) >= 0 ||
        raw_cmp(b.limb.data(), q.limb.data(), b.width) >= 0)
        throw std::invalid_argument("mod_add: operands must be reduced (< q)");
    cost::charge(cost::mod_add_cost(a.width));

    WideInt sum(a.width);
    Limb carry = raw_add(a.limb.data(), b.limb.data(), sum.limb.data(), a.width);
    WideInt corr(a.width);
    Limb borrow = raw_sub(sum.limb.data(), q.limb.data(), corr.limb.data(), a.width);
    return (carry || !borrow) ? corr : sum;
}

WideInt mod_sub(const WideInt& a, const WideInt& b, const WideInt& q) {
    require_same_width(a, b, "mod_sub");
    require_same_width(a, q, "mod_sub");
    if (raw_cmp(a.limb.data(), q.limb.data(), a.width) >= 0 ||
        raw_cmp(b.limb.data(), q.limb.data(), b.width) >= 0)
        throw std::invalid_argument("mod_sub: operands must be reduced (< q)");
    cost::charge(cost::mod_add_cost(a.width));

    WideInt diff(a.width);
    Limb borrow = raw_sub(a.limb.data(), b.limb.data(), diff.limb.data(), a.width);
    WideInt corr(a.width);
    raw_add(diff.limb.data(), q.limb.data(), corr.limb.data(), a.width);
    return borrow ? corr : diff;
}

WideInt mod_mul(const WideInt& a, const WideInt& b, const Barrett& br) {
    require_same_width(a, b, "mod_mul");
    if (a.width != br.w) throw std::invalid_argument("mod_mul: width mismatch with modulus");
    if (raw_cmp(a.limb.data(), br.q.limb.data(), a.width) >= 0 ||
        raw_cmp(b.limb.data(), br.q.limb.data(), b.width) >= 0)
        throw std::invalid_argument("mod_mul: operands must be reduced (< q)");
    cost::charge(cost::mod_mul_cost(a.width));

    // Same structure the standalone multiply + mod_reduce would use;
    // charged as such.  Karatsuba needs a power-of-two width.
    WideInt prod(2 * a.width);
    if ((a.width & (a.width - 1)) == 0)
        raw_karatsuba(a.limb.data(), b.limb.data(), prod.limb.data(), a.width);
    else
        raw_mul(a.limb.data(), a.width, b.limb.data(), b.width, prod.limb.data());

    Limb q2[3 * WideInt::kMaxLimbs] = {0};
    const int w = br.w;
    raw_mul(prod.limb.data() + (w - 1), w + 1, br.mu.limb.data(), w + 1, q2);
    Limb r2[3 * WideInt::kMaxLimbs] = {0};
    raw_mul(q2 + (w + 1), w + 1, br.q.limb.data(), w, r2);
    Limb r[WideInt::kMaxLimbs + 1];
    raw_sub(prod.limb.data(), r2, r, w + 1);
    Limb qpad[WideInt::kMaxLimbs + 1];
    for (int i = 0; i < w; ++i) qpad[i] = br.q.limb[i];
    qpad[w] = 0;
    while (raw_cmp(r, qpad, w + 1) >= 0)
        raw_sub(r, qpad, r, w + 1);

    WideInt out(w);
    for (int i = 0; i < w; ++i) out.limb[i] = r[i];
    return out;
}

std::pair<WideInt, WideInt> div_mod(const WideInt& a, const WideInt& b) {
    int n = effective_len(b.limb.data(), b.width);
    if (n == 0) throw std::invalid_argument("div_mod: division by zero");
    cost::charge(cost::div_mod_cost(a.width, b.width));

    WideInt quot(a.width >= b.width ? a.width - b.width + 1 : 1);
    WideInt rem(b.width);
    int m = effective_len(a.limb.data(), a.width);
    if (m < n) {
        for (int i = 0; i < m; ++i) rem.limb[i] = a.limb[i];
        return {quot, rem};
    }
    Limb q[2 * WideInt::kMaxLimbs + 1] = {0};
    Limb r[WideInt::kMaxLimbs] = {0};
    raw_div_mod(a.limb.data(), m, b.limb.data(), n, q, r);
    for (int i = 0; i < m - n + 1; ++i) {
        if (i < quot.width) quot.limb[i] = q[i];
        else if (q[i]) throw std::invalid_argument("div_mod: quotient overflow");
    }
    for (int i = 0; i < n; ++i) rem.limb[i] = r[i];
    return {quot, rem};
}

WideInt mul_small(const WideInt& a, std::uint64_t small) {
    if (small >> 32) throw std::invalid_argument("mul_small: multiplier must fit 32 bits");
    if (a.width + 1 > WideInt::kMaxLimbs)
        throw std::invalid_argument("mul_small: result exceeds kMaxLimbs");
    cost::charge(cost::mul_small_cost(a.width));
    WideInt out(a.width + 1);
    std::uint64_t carry = 0;
    for (int i = 0; i < a.width; ++i) {
        std::uint64_t cur = a.limb[i] * small + carry;
        out.limb[i] = static_cast<Limb>(cur);
        carry = cur >> 32;
    }
    out.limb[a.width] = static_cast<Limb>(carry);
    return out;
}

WideInt shift_limbs(const WideInt& a, int limbs) {
    if (a.width + limbs > WideInt::kMaxLimbs)
        throw std::invalid_argument("shift_limbs: result exceeds kMaxLimbs");
    WideInt out(a.width + limbs);
    for (int i = 0; i < a.width; ++i) out.limb[i + limbs] = a.limb[i];
    return out;
}

namespace cost {

void charge(const InstrCounter& c) {
    if (auto* ctr = active_counter()) *ctr += c;
}

InstrCounter wide_add_cost(int w) {
    InstrCounter c;
    c.adds = 1;
    c.addcs = static_cast<std::uint64_t>(w - 1);
    return c;
}

InstrCounter wide_sub_cost(int w) { return wide_add_cost(w); }

InstrCounter mul32_cost() {
    InstrCounter c;
    c.muls32 = 1;
    return c;
}

InstrCounter schoolbook_cost(int w) {
    // Per partial product: one mul32 plus an add/addc pair folding lo and
    // carry into the accumulator; one row-initialising add per row.
    InstrCounter c;
    c.muls32 = static_cast<std::uint64_t>(w) * w;
    c.adds = static_cast<std::uint64_t>(w);
    c.addcs = 2ull * w * w - w;
    return c;
}

InstrCounter karatsuba_cost(int w) {
    if (w == 1) return mul32_cost();
    const int h = w / 2;
    InstrCounter c;
    c.add_scaled(karatsuba_cost(h), 3);
    c.add_scaled(wide_sub_cost(h), 4); // two |lo-hi| magnitudes, negate charged unconditionally
    c.add_scaled(wide_add_cost(w), 2); // z0+z2, +-middle
    c.adds += 1;                       // ripple of the shifted middle term
    c.addcs += static_cast<std::uint64_t>(h);
    return c;
}

InstrCounter mod_reduce_cost(int w) {
    // Two reciprocal products by fixed constants, unrolled as add/shift
    // chains of (w+1)^2 limb steps each, one wide subtraction and two
    // unconditional corrective subtractions at width w+1.
    InstrCounter c;
    std::uint64_t steps = static_cast<std::uint64_t>(w + 1) * (w + 1);
    c.adds = 2 * steps;
    c.addcs = 2 * steps;
    c.add_scaled(wide_sub_cost(w + 1), 3);
    return c;
}

InstrCounter mod_add_cost(int w) {
    InstrCounter c;
    c.add_scaled(wide_add_cost(w), 1);
    c.add_scaled(wide_sub_cost(w), 1); // correction charged unconditionally
    return c;
}

InstrCounter mod_mul_cost(int w) {
    InstrCounter mul = ((w & (w - 1)) == 0) ? karatsuba_cost(w) : schoolbook_cost(w);
    return mul + mod_reduce_cost(w);
}

InstrCounter div_mod_cost(int wa, int wb) {
    InstrCounter c;
    std::uint64_t digits = (wa >= wb) ? static_cast<std::uint64_t>(wa - wb + 1) : 1;
    c.adds = static_cast<std::uint64_t>(wa + wb); // normalisation shifts
    // Per quotient digit: 2-limb estimate, multiply-subtract across the
    // divisor, and an unconditional add-back correction.
    c.muls32 += digits * (static_cast<std::uint64_t>(wb) + 2);
    c.adds += digits * 3;
    c.addcs += digits * (3ull * wb - 1);
    c.loop_overhead += digits;
    return c;
}

InstrCounter mul_small_cost(int w) {
    InstrCounter c;
    c.muls32 = static_cast<std::uint64_t>(w);
    c.addcs = static_cast<std::uint64_t>(w);
    return c;
}

} // namespace cost

} // namespace pimhe
