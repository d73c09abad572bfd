#include "pimhe/polyring.hpp"

#include <cstring>
#include <stdexcept>
#include <string>

namespace pimhe {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

u64 to64(const WideInt& a) {
    u64 v = 0;
    for (int i = a.width - 1; i >= 0; --i) v = (v << 32) | a.limb[i];
    return v;
}

u128 to128(const WideInt& a) {
    u128 v = 0;
    for (int i = a.width - 1; i >= 0; --i) v = (v << 32) | a.limb[i];
    return v;
}

WideInt from128(u128 v, int w) {
    WideInt out(w);
    for (int i = 0; i < w; ++i) {
        out.limb[i] = static_cast<Limb>(v & 0xFFFFFFFFu);
        v >>= 32;
    }
    return out;
}

int log2_exact(int n) {
    int lg = 0;
    while ((1 << lg) < n) ++lg;
    return lg;
}

void require_same_ring(const Polynomial& a, const Polynomial& b, const char* op) {
    if (!a.ring || !b.ring || !same_ring(*a.ring, *b.ring))
        throw std::invalid_argument(std::string(op) + ": ring mismatch");
}

void require_shape(const Polynomial& a, const char* op) {
    if (!a.ring || static_cast<int>(a.coeffs.size()) != a.ring->n)
        throw std::invalid_argument(std::string(op) + ": malformed polynomial");
}

// Accumulation strategy for exact integer convolutions, chosen from the
// worst-case magnitude n * ((q-1)/2)^2 * 2 (the cross tensor sums two
// convolutions).
enum class AccClass { U64, U128, U256, Generic };

AccClass tensor_class(const RingParams& r) {
    int qb = r.q.bit_length();
    int lg = log2_exact(r.n);
    if (qb <= 64) {
        u128 h = (to128(r.q) - 1) >> 1;
        u128 cap = ~static_cast<u128>(0);
        if (h == 0) return AccClass::U64;
        if (h <= cap / h) {
            u128 sq = h * h;
            if (sq <= (cap >> (lg + 1)) &&
                2 * static_cast<u128>(r.n) * sq <= static_cast<u128>(~0ull))
                return AccClass::U64;
        }
    }
    int hb = qb - 1; // magnitude bits
    if (hb <= 64 && 2 * hb + lg + 1 <= 127) return AccClass::U128;
    if (hb <= 128 && 2 * hb + lg + 1 <= 255) return AccClass::U256;
    return AccClass::Generic;
}

AccClass residue_class(const RingParams& r) {
    int qb = r.q.bit_length();
    if (qb <= 63) return AccClass::U64;
    if (qb <= 127) return AccClass::U128;
    return AccClass::Generic;
}

// ---- centered representatives ----------------------------------------------

template <typename T>
void center_into(const Polynomial& p, T q, std::vector<T>& mag, std::vector<unsigned char>& neg) {
    const int n = p.ring->n;
    T half = (q >> 1) + 1; // (q+1)/2, q odd
    mag.resize(n);
    neg.resize(n);
    for (int i = 0; i < n; ++i) {
        T c = static_cast<T>(to128(p.coeffs[i]));
        if (c >= half) {
            mag[i] = q - c;
            neg[i] = 1;
        } else {
            mag[i] = c;
            neg[i] = 0;
        }
    }
}

// ---- 256-bit accumulator (pair of u128 with manual carry) ------------------

struct Acc256 {
    u128 lo = 0, hi = 0;
};

inline void mul_128_full(u128 a, u128 b, u128& lo, u128& hi) {
    u64 a0 = static_cast<u64>(a), a1 = static_cast<u64>(a >> 64);
    u64 b0 = static_cast<u64>(b), b1 = static_cast<u64>(b >> 64);
    u128 p00 = static_cast<u128>(a0) * b0;
    u128 p01 = static_cast<u128>(a0) * b1;
    u128 p10 = static_cast<u128>(a1) * b0;
    u128 p11 = static_cast<u128>(a1) * b1;
    u128 mid = p01 + p10;
    u128 mid_carry = (mid < p01) ? (static_cast<u128>(1) << 64) : 0;
    lo = p00 + (mid << 64);
    hi = p11 + (mid >> 64) + mid_carry + ((lo < p00) ? 1 : 0);
}

inline void acc256_add(Acc256& acc, u128 lo, u128 hi) {
    acc.lo += lo;
    acc.hi += hi + ((acc.lo < lo) ? 1 : 0);
}

inline int acc256_cmp(const Acc256& a, const Acc256& b) {
    if (a.hi != b.hi) return a.hi < b.hi ? -1 : 1;
    if (a.lo != b.lo) return a.lo < b.lo ? -1 : 1;
    return 0;
}

inline Acc256 acc256_sub(const Acc256& a, const Acc256& b) {
    Acc256 d;
    d.lo = a.lo - b.lo;
    d.hi = a.hi - b.hi - ((a.lo < b.lo) ? 1 : 0);
    return d;
}

SignedWide acc256_signed(const Acc256& pos, const Acc256& neg, int mag_width) {
    SignedWide out;
    Acc256 d;
    if (acc256_cmp(pos, neg) >= 0) {
        d = acc256_sub(pos, neg);
        out.neg = false;
    } else {
        d = acc256_sub(neg, pos);
        out.neg = true;
    }
    out.mag = WideInt(mag_width);
    u128 v = d.lo;
    for (int i = 0; i < mag_width && i < 4; ++i) {
        out.mag.limb[i] = static_cast<Limb>(v & 0xFFFFFFFFu);
        v >>= 32;
    }
    v = d.hi;
    for (int i = 4; i < mag_width && i < 8; ++i) {
        out.mag.limb[i] = static_cast<Limb>(v & 0xFFFFFFFFu);
        v >>= 32;
    }
    return out;
}

// ---- scalar-accumulator tensor cores ----------------------------------------

template <typename T>
void tensor_accumulate(const std::vector<T>& amag, const std::vector<unsigned char>& aneg,
                       const std::vector<T>& bmag, const std::vector<unsigned char>& bneg,
                       std::vector<T>& pos, std::vector<T>& neg, int n) {
    for (int j = 0; j < n; ++j) {
        T bm = bmag[j];
        if (bm == 0) continue;
        unsigned char bn = bneg[j];
        int split = n - j;
        for (int i = 0; i < split; ++i) {
            T p = amag[i] * bm;
            if (aneg[i] ^ bn) neg[i + j] += p; else pos[i + j] += p;
        }
        for (int i = split; i < n; ++i) {
            T p = amag[i] * bm;
            if (aneg[i] ^ bn) pos[i + j - n] += p; else neg[i + j - n] += p;
        }
    }
}

void tensor_accumulate_256(const std::vector<u128>& amag, const std::vector<unsigned char>& aneg,
                           const std::vector<u128>& bmag, const std::vector<unsigned char>& bneg,
                           std::vector<Acc256>& pos, std::vector<Acc256>& neg, int n) {
    for (int j = 0; j < n; ++j) {
        u128 bm = bmag[j];
        if (bm == 0) continue;
        unsigned char bn = bneg[j];
        int split = n - j;
        for (int i = 0; i < split; ++i) {
            u128 lo, hi;
            mul_128_full(amag[i], bm, lo, hi);
            if (aneg[i] ^ bn) acc256_add(neg[i + j], lo, hi);
            else acc256_add(pos[i + j], lo, hi);
        }
        for (int i = split; i < n; ++i) {
            u128 lo, hi;
            mul_128_full(amag[i], bm, lo, hi);
            if (aneg[i] ^ bn) acc256_add(pos[i + j - n], lo, hi);
            else acc256_add(neg[i + j - n], lo, hi);
        }
    }
}

template <typename T>
std::vector<SignedWide> tensor_finish(const std::vector<T>& pos, const std::vector<T>& neg,
                                      int n, int mag_width) {
    std::vector<SignedWide> out(n);
    for (int k = 0; k < n; ++k) {
        SignedWide s;
        T d;
        if (pos[k] >= neg[k]) {
            d = pos[k] - neg[k];
            s.neg = false;
        } else {
            d = neg[k] - pos[k];
            s.neg = true;
        }
        s.mag = from128(static_cast<u128>(d), mag_width);
        out[k] = s;
    }
    return out;
}

// Generic WideInt accumulation for rings too large for the scalar cores.
void tensor_accumulate_generic(const Polynomial& a, const Polynomial& b,
                               std::vector<WideInt>& pos, std::vector<WideInt>& neg) {
    const RingParams& r = *a.ring;
    const int n = r.n;
    const int mw = static_cast<int>(pos[0].width);

    WideInt one = WideInt::from_u64(1, r.coeff_width);
    WideInt half = wide_add(div_mod(r.q, WideInt::from_u64(2, 1)).first
                                .resized(r.coeff_width), one).first;

    std::vector<WideInt> amag(n, WideInt(r.coeff_width)), bmag(n, WideInt(r.coeff_width));
    std::vector<unsigned char> aneg(n), bneg(n);
    for (int i = 0; i < n; ++i) {
        if (wide_cmp(a.coeffs[i], half) >= 0) {
            amag[i] = wide_sub(r.q, a.coeffs[i]).first;
            aneg[i] = 1;
        } else {
            amag[i] = a.coeffs[i];
            aneg[i] = 0;
        }
        if (wide_cmp(b.coeffs[i], half) >= 0) {
            bmag[i] = wide_sub(r.q, b.coeffs[i]).first;
            bneg[i] = 1;
        } else {
            bmag[i] = b.coeffs[i];
            bneg[i] = 0;
        }
    }

    for (int j = 0; j < n; ++j) {
        if (bmag[j].is_zero()) continue;
        for (int i = 0; i < n; ++i) {
            WideInt p = schoolbook_mul(amag[i], bmag[j]).resized(mw);
            int k = i + j;
            bool flip = false;
            if (k >= n) { k -= n; flip = true; }
            bool into_neg = (aneg[i] ^ bneg[j]) ^ flip;
            if (into_neg) neg[k] = wide_add(neg[k], p).first;
            else pos[k] = wide_add(pos[k], p).first;
        }
    }
}

std::vector<SignedWide> tensor_finish_generic(std::vector<WideInt>& pos, std::vector<WideInt>& neg,
                                              int mag_width) {
    const int n = static_cast<int>(pos.size());
    std::vector<SignedWide> out(n);
    for (int k = 0; k < n; ++k) {
        SignedWide s;
        if (wide_cmp(pos[k], neg[k]) >= 0) {
            s.neg = false;
            s.mag = wide_sub(pos[k], neg[k]).first.resized(mag_width);
        } else {
            s.neg = true;
            s.mag = wide_sub(neg[k], pos[k]).first.resized(mag_width);
        }
        out[k] = s;
    }
    return out;
}

std::vector<SignedWide> tensor_run(const Polynomial& a0, const Polynomial& b0,
                                   const Polynomial* a1, const Polynomial* b1) {
    const RingParams& r = *a0.ring;
    const int n = r.n;
    const int mw = 2 * r.coeff_width + 1;
    AccClass cls = tensor_class(r);

    if (cls == AccClass::U64) {
        u64 q = to64(r.q);
        std::vector<u64> am, bm, pos(n, 0), neg(n, 0);
        std::vector<unsigned char> an, bn;
        center_into<u64>(a0, q, am, an);
        center_into<u64>(b0, q, bm, bn);
        tensor_accumulate<u64>(am, an, bm, bn, pos, neg, n);
        if (a1) {
            center_into<u64>(*a1, q, am, an);
            center_into<u64>(*b1, q, bm, bn);
            tensor_accumulate<u64>(am, an, bm, bn, pos, neg, n);
        }
        return tensor_finish<u64>(pos, neg, n, mw);
    }
    if (cls == AccClass::U128) {
        u128 q = to128(r.q);
        std::vector<u128> am, bm, pos(n, 0), neg(n, 0);
        std::vector<unsigned char> an, bn;
        center_into<u128>(a0, q, am, an);
        center_into<u128>(b0, q, bm, bn);
        tensor_accumulate<u128>(am, an, bm, bn, pos, neg, n);
        if (a1) {
            center_into<u128>(*a1, q, am, an);
            center_into<u128>(*b1, q, bm, bn);
            tensor_accumulate<u128>(am, an, bm, bn, pos, neg, n);
        }
        return tensor_finish<u128>(pos, neg, n, mw);
    }
    if (cls == AccClass::U256) {
        u128 q = to128(r.q);
        std::vector<u128> am, bm;
        std::vector<unsigned char> an, bn;
        std::vector<Acc256> pos(n), neg(n);
        center_into<u128>(a0, q, am, an);
        center_into<u128>(b0, q, bm, bn);
        tensor_accumulate_256(am, an, bm, bn, pos, neg, n);
        if (a1) {
            center_into<u128>(*a1, q, am, an);
            center_into<u128>(*b1, q, bm, bn);
            tensor_accumulate_256(am, an, bm, bn, pos, neg, n);
        }
        std::vector<SignedWide> out(n);
        for (int k = 0; k < n; ++k) out[k] = acc256_signed(pos[k], neg[k], mw);
        return out;
    }

    InstrCounter sink;
    CountScope swallow(sink);
    std::vector<WideInt> pos(n, WideInt(mw + 1)), neg(n, WideInt(mw + 1));
    tensor_accumulate_generic(a0, b0, pos, neg);
    if (a1) tensor_accumulate_generic(*a1, *b1, pos, neg);
    return tensor_finish_generic(pos, neg, mw);
}

} // namespace

RingPtr make_ring(int n, const WideInt& q) {
    if (n < 1 || (n & (n - 1)) != 0)
        throw std::invalid_argument("make_ring: n must be a power of two");
    if (q.width != 1 && q.width != 2 && q.width != 4)
        throw std::invalid_argument("make_ring: coefficient width must be 1, 2 or 4 limbs");
    auto ring = std::make_shared<RingParams>();
    ring->n = n;
    ring->coeff_width = q.width;
    ring->q = q;
    ring->barrett = Barrett::make(q);
    return ring;
}

bool same_ring(const RingParams& a, const RingParams& b) {
    return a.n == b.n && a.coeff_width == b.coeff_width && a.q == b.q;
}

Polynomial zero_poly(const RingPtr& ring) {
    if (!ring) throw std::invalid_argument("zero_poly: null ring");
    Polynomial p;
    p.ring = ring;
    p.coeffs.assign(ring->n, WideInt(ring->coeff_width));
    return p;
}

Polynomial poly_add(const Polynomial& a, const Polynomial& b) {
    require_same_ring(a, b, "poly_add");
    require_shape(a, "poly_add");
    require_shape(b, "poly_add");
    const RingParams& r = *a.ring;
    cost::charge(cost::poly_add_cost(r.n, r.coeff_width));
    InstrCounter sink;
    CountScope swallow(sink);

    Polynomial out = zero_poly(a.ring);
    for (int i = 0; i < r.n; ++i)
        out.coeffs[i] = mod_add(a.coeffs[i], b.coeffs[i], r.q);
    return out;
}

Polynomial poly_sub(const Polynomial& a, const Polynomial& b) {
    require_same_ring(a, b, "poly_sub");
    require_shape(a, "poly_sub");
    require_shape(b, "poly_sub");
    const RingParams& r = *a.ring;
    cost::charge(cost::poly_add_cost(r.n, r.coeff_width));
    InstrCounter sink;
    CountScope swallow(sink);

    Polynomial out = zero_poly(a.ring);
    for (int i = 0; i < r.n; ++i)
        out.coeffs[i] = mod_sub(a.coeffs[i], b.coeffs[i], r.q);
    return out;
}

Polynomial poly_negate(const Polynomial& a) {
    require_shape(a, "poly_negate");
    const RingParams& r = *a.ring;
    cost::charge(cost::poly_negate_cost(r.n, r.coeff_width));
    InstrCounter sink;
    CountScope swallow(sink);

    Polynomial out = zero_poly(a.ring);
    WideInt zero(r.coeff_width);
    for (int i = 0; i < r.n; ++i)
        out.coeffs[i] = mod_sub(zero, a.coeffs[i], r.q);
    return out;
}

Polynomial poly_scalar_mul(const Polynomial& a, const WideInt& s) {
    require_shape(a, "poly_scalar_mul");
    const RingParams& r = *a.ring;
    if (s.width != r.coeff_width || wide_cmp(s, r.q) >= 0)
        throw std::invalid_argument("poly_scalar_mul: scalar must be a reduced residue");
    cost::charge(cost::poly_scalar_mul_cost(r.n, r.coeff_width));
    InstrCounter sink;
    CountScope swallow(sink);

    Polynomial out = zero_poly(a.ring);
    for (int i = 0; i < r.n; ++i)
        out.coeffs[i] = mod_mul(a.coeffs[i], s, r.barrett);
    return out;
}

Polynomial poly_negacyclic_mul(const Polynomial& a, const Polynomial& b) {
    require_same_ring(a, b, "poly_negacyclic_mul");
    require_shape(a, "poly_negacyclic_mul");
    require_shape(b, "poly_negacyclic_mul");
    const RingParams& r = *a.ring;
    cost::charge(cost::poly_negacyclic_mul_cost(r.n, r.coeff_width));
    InstrCounter sink;
    CountScope swallow(sink);

    Polynomial out = zero_poly(a.ring);
    for (int i = 0; i < r.n; ++i) {
        for (int j = 0; j < r.n; ++j) {
            WideInt p = mod_mul(a.coeffs[i], b.coeffs[j], r.barrett);
            int k = i + j;
            if (k < r.n) out.coeffs[k] = mod_add(out.coeffs[k], p, r.q);
            else out.coeffs[k - r.n] = mod_sub(out.coeffs[k - r.n], p, r.q);
        }
    }
    return out;
}

Polynomial poly_negacyclic_mul_reference(const Polynomial& a, const Polynomial& b) {
    require_same_ring(a, b, "poly_negacyclic_mul_reference");
    require_shape(a, "poly_negacyclic_mul_reference");
    require_shape(b, "poly_negacyclic_mul_reference");
    const RingParams& r = *a.ring;
    InstrCounter sink;
    CountScope swallow(sink);

    const int aw = 2 * r.coeff_width + 2;
    std::vector<WideInt> pos(r.n, WideInt(aw)), neg(r.n, WideInt(aw));
    for (int i = 0; i < r.n; ++i) {
        if (a.coeffs[i].is_zero()) continue;
        for (int j = 0; j < r.n; ++j) {
            WideInt p = schoolbook_mul(a.coeffs[i], b.coeffs[j]).resized(aw);
            int k = i + j;
            if (k < r.n) pos[k] = wide_add(pos[k], p).first;
            else neg[k - r.n] = wide_add(neg[k - r.n], p).first;
        }
    }

    Polynomial out = zero_poly(a.ring);
    for (int k = 0; k < r.n; ++k) {
        WideInt rp = div_mod(pos[k], r.q).second;
        WideInt rn = div_mod(neg[k], r.q).second;
        out.coeffs[k] = mod_sub(rp, rn, r.q);
    }
    return out;
}

Polynomial poly_negacyclic_mul_ternary(const Polynomial& a, const Polynomial& t) {
    require_same_ring(a, t, "poly_negacyclic_mul_ternary");
    require_shape(a, "poly_negacyclic_mul_ternary");
    require_shape(t, "poly_negacyclic_mul_ternary");
    const RingParams& r = *a.ring;

    WideInt one = WideInt::from_u64(1, r.coeff_width);
    WideInt qm1(r.coeff_width);
    {
        InstrCounter presink;
        CountScope preswallow(presink);
        qm1 = wide_sub(r.q, one).first;
    }
    for (const WideInt& c : t.coeffs)
        if (!c.is_zero() && !(c == one) && !(c == qm1))
            throw std::invalid_argument("poly_negacyclic_mul_ternary: operand not ternary");

    cost::charge(cost::poly_negacyclic_mul_cost(r.n, r.coeff_width));
    InstrCounter sink;
    CountScope swallow(sink);
    const int n = r.n;

    AccClass cls = residue_class(r);
    Polynomial out = zero_poly(a.ring);
    if (cls == AccClass::U64 || cls == AccClass::U128) {
        auto run = [&](auto q) {
            using T = decltype(q);
            std::vector<T> av(n), acc(n, 0);
            for (int i = 0; i < n; ++i) av[i] = static_cast<T>(to128(a.coeffs[i]));
            std::vector<signed char> tv(n, 0);
            for (int j = 0; j < n; ++j) {
                if (t.coeffs[j].is_zero()) continue;
                tv[j] = (t.coeffs[j] == one) ? 1 : -1;
            }
            auto mod_acc = [&](T& slot, T v, bool subtract) {
                if (subtract) {
                    slot = (slot >= v) ? slot - v : slot + (q - v);
                } else {
                    slot += v;
                    if (slot >= q) slot -= q;
                }
            };
            for (int j = 0; j < n; ++j) {
                if (!tv[j]) continue;
                bool minus = tv[j] < 0;
                int split = n - j;
                for (int i = 0; i < split; ++i) mod_acc(acc[i + j], av[i], minus);
                for (int i = split; i < n; ++i) mod_acc(acc[i + j - n], av[i], !minus);
            }
            for (int k = 0; k < n; ++k) out.coeffs[k] = from128(acc[k], r.coeff_width);
        };
        if (cls == AccClass::U64) run(to64(r.q)); else run(to128(r.q));
        return out;
    }

    for (int j = 0; j < n; ++j) {
        if (t.coeffs[j].is_zero()) continue;
        bool minus = (t.coeffs[j] == qm1);
        for (int i = 0; i < n; ++i) {
            int k = i + j;
            bool sub = minus;
            if (k >= n) { k -= n; sub = !sub; }
            out.coeffs[k] = sub ? mod_sub(out.coeffs[k], a.coeffs[i], r.q)
                                : mod_add(out.coeffs[k], a.coeffs[i], r.q);
        }
    }
    return out;
}

namespace detail {

std::vector<SignedWide> negacyclic_tensor(const Polynomial& a, const Polynomial& b) {
    require_same_ring(a, b, "negacyclic_tensor");
    require_shape(a, "negacyclic_tensor");
    require_shape(b, "negacyclic_tensor");
    return tensor_run(a, b, nullptr, nullptr);
}

std::vector<SignedWide> negacyclic_tensor_cross(const Polynomial& a0, const Polynomial& b1,
                                                const Polynomial& a1, const Polynomial& b0) {
    require_same_ring(a0, b1, "negacyclic_tensor_cross");
    require_same_ring(a1, b0, "negacyclic_tensor_cross");
    require_same_ring(a0, a1, "negacyclic_tensor_cross");
    require_shape(a0, "negacyclic_tensor_cross");
    require_shape(b1, "negacyclic_tensor_cross");
    require_shape(a1, "negacyclic_tensor_cross");
    require_shape(b0, "negacyclic_tensor_cross");
    return tensor_run(a0, b1, &a1, &b0);
}

} // namespace detail

namespace cost {

InstrCounter poly_add_cost(int n, int w) {
    InstrCounter c;
    c.add_scaled(mod_add_cost(w), static_cast<std::uint64_t>(n));
    c.loads = 2ull * n * w;
    c.stores = static_cast<std::uint64_t>(n) * w;
    c.loop_overhead = static_cast<std::uint64_t>(n);
    return c;
}

InstrCounter poly_negate_cost(int n, int w) {
    InstrCounter c;
    c.add_scaled(mod_add_cost(w), static_cast<std::uint64_t>(n));
    c.loads = static_cast<std::uint64_t>(n) * w;
    c.stores = static_cast<std::uint64_t>(n) * w;
    c.loop_overhead = static_cast<std::uint64_t>(n);
    return c;
}

InstrCounter poly_scalar_mul_cost(int n, int w) {
    InstrCounter c;
    c.add_scaled(mod_mul_cost(w), static_cast<std::uint64_t>(n));
    c.loads = static_cast<std::uint64_t>(n) * w + w;
    c.stores = static_cast<std::uint64_t>(n) * w;
    c.loop_overhead = static_cast<std::uint64_t>(n);
    return c;
}

InstrCounter poly_negacyclic_mul_cost(int n, int w) {
    InstrCounter c;
    std::uint64_t nn = static_cast<std::uint64_t>(n) * n;
    c.add_scaled(mod_mul_cost(w), nn);
    c.add_scaled(mod_add_cost(w), nn);
    c.loads = 2ull * nn * w;
    c.stores = nn * static_cast<std::uint64_t>(w);
    c.loop_overhead = nn + static_cast<std::uint64_t>(n);
    return c;
}

} // namespace cost

} // namespace pimhe
