#include "pimhe/bfv.hpp"

#include <algorithm>
#include <string>

#include "pimhe/prng.hpp"

namespace pimhe {

namespace {

WideInt q_for(int security_bits) {
    switch (security_bits) {
        case 27:
            return WideInt::from_u64(134215681ull, 1);
        case 54:
            return WideInt::from_u64(18014398509404161ull, 2);
        case 109: {
            WideInt q(4);
            q.limb[0] = 4294737921u;
            q.limb[1] = 4294967295u;
            q.limb[2] = 4294967295u;
            q.limb[3] = 8191u;
            return q;
        }
        default:
            throw std::invalid_argument("make_params: security must be 27, 54 or 109");
    }
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFF;
        h *= 0x100000001B3ull;
    }
    return h;
}

void require_params(const HeParams& params) {
    if (!params.ring || params.t < 2)
        throw std::invalid_argument("invalid scheme parameters");
}

void require_ciphertext(const HeParams& params, const Ciphertext& ct, const char* op) {
    if (ct.comps.size() < 2 || ct.comps.size() > 3)
        throw std::invalid_argument(std::string(op) + ": ciphertext must have 2 or 3 components");
    for (const Polynomial& p : ct.comps) {
        if (!p.ring || !same_ring(*p.ring, *params.ring))
            throw std::invalid_argument(std::string(op) + ": ciphertext ring mismatch");
        if (static_cast<int>(p.coeffs.size()) != params.ring->n)
            throw std::invalid_argument(std::string(op) + ": malformed ciphertext component");
    }
}

Polynomial ternary_poly(const RingPtr& ring, Prng rng) {
    Polynomial p = zero_poly(ring);
    WideInt one = WideInt::from_u64(1, ring->coeff_width);
    InstrCounter sink;
    CountScope swallow(sink);
    WideInt qm1 = wide_sub(ring->q, one).first;
    for (int i = 0; i < ring->n; ++i) {
        switch (rng.below(3)) {
            case 0: break;
            case 1: p.coeffs[i] = one; break;
            default: p.coeffs[i] = qm1; break;
        }
    }
    return p;
}

Polynomial uniform_poly(const RingPtr& ring, Prng rng) {
    Polynomial p = zero_poly(ring);
    int bits = ring->q.bit_length();
    int top = (bits - 1) / 32;
    int topbits = bits - 32 * top;
    Limb mask = topbits >= 32 ? 0xFFFFFFFFu : ((Limb{1} << topbits) - 1);
    for (int i = 0; i < ring->n; ++i) {
        for (;;) {
            WideInt c(ring->coeff_width);
            for (int k = 0; k <= top; ++k) c.limb[k] = static_cast<Limb>(rng.next());
            c.limb[top] &= mask;
            if (wide_cmp(c, ring->q) < 0) {
                p.coeffs[i] = c;
                break;
            }
        }
    }
    return p;
}

// Coefficients uniform in [-noise_bound, noise_bound], lifted mod q.
Polynomial noise_poly(const RingPtr& ring, Prng rng, int noise_bound) {
    Polynomial p = zero_poly(ring);
    InstrCounter sink;
    CountScope swallow(sink);
    for (int i = 0; i < ring->n; ++i) {
        std::int64_t k = static_cast<std::int64_t>(rng.below(2 * noise_bound + 1)) - noise_bound;
        if (k > 0) {
            p.coeffs[i] = WideInt::from_u64(static_cast<std::uint64_t>(k), ring->coeff_width);
        } else if (k < 0) {
            WideInt mag = WideInt::from_u64(static_cast<std::uint64_t>(-k), ring->coeff_width);
            p.coeffs[i] = wide_sub(ring->q, mag).first;
        }
    }
    return p;
}

Polynomial lift_plaintext(const HeParams& params, const Plaintext& m) {
    if (static_cast<int>(m.size()) != params.ring->n)
        throw std::invalid_argument("plaintext must have exactly n coefficients");
    Polynomial p = zero_poly(params.ring);
    for (int i = 0; i < params.ring->n; ++i) {
        if (m[i] >= params.t)
            throw std::invalid_argument("plaintext coefficient " + std::to_string(i) +
                                        " not reduced mod t");
        p.coeffs[i] = WideInt::from_u64(m[i], params.ring->coeff_width);
    }
    return p;
}

// Sigma c_i s^i by Horner over the ternary secret.
Polynomial phase(const HeParams& params, const SecretKey& sk, const Ciphertext& ct) {
    Polynomial acc = ct.comps.back();
    for (int i = static_cast<int>(ct.comps.size()) - 2; i >= 0; --i)
        acc = poly_add(poly_negacyclic_mul_ternary(acc, sk.s), ct.comps[i]);
    return acc;
}

// round(t*v/q) mod t for one coefficient, exact: (2t*v + q) div 2q.  Ties
// are impossible because q is odd.
std::uint64_t round_coeff(const HeParams& params, const WideInt& v) {
    const RingParams& r = *params.ring;
    const int w = r.coeff_width;
    WideInt num = wide_add(mul_small(v, 2 * params.t), r.q.resized(w + 1)).first;
    WideInt den = mul_small(r.q, 2).trimmed();
    WideInt quot = div_mod(num, den).first;
    return quot.to_u64() % params.t;
}

// round(t*x/q) for a signed extended-width tensor coefficient, then mod q.
WideInt scale_round(const HeParams& params, const SignedWide& x) {
    const RingParams& r = *params.ring;
    const int w = r.coeff_width;
    WideInt num = wide_add(mul_small(x.mag, 2 * params.t), r.q.resized(2 * w + 2)).first;
    WideInt den = mul_small(r.q, 2).trimmed();
    WideInt scaled = div_mod(num, den).first.resized(2 * w);
    WideInt rem = mod_reduce(scaled, r.barrett);
    if (x.neg) rem = mod_sub(WideInt(w), rem, r.q);
    return rem;
}

} // namespace

HeParams make_params(int security_bits, std::uint64_t t_override) {
    HeParams params;
    WideInt q = q_for(security_bits);
    int n = security_bits == 27 ? 1024 : security_bits == 54 ? 2048 : 4096;
    params.ring = make_ring(n, q);
    // Defaults keep a positive post-multiplication noise budget at every set;
    // n=1024 needs a small t (measured: t=13 and above exhausts the budget).
    params.t = t_override ? t_override : (security_bits == 27 ? 5ull : 257ull);
    if (params.t < 2 || params.t > 65536)
        throw std::invalid_argument("make_params: t must lie in [2, 65536]");
    params.noise_bound = 6;
    params.security_bits = security_bits;

    InstrCounter sink;
    CountScope swallow(sink);
    params.delta = div_mod(q, WideInt::from_u64(params.t, 1)).first.resized(q.width);
    if (params.delta.is_zero())
        throw std::invalid_argument("make_params: t too large for q");
    WideInt dt = mul_small(params.delta, params.t);
    if (wide_cmp(dt.resized(q.width + 1), q.resized(q.width + 1)) > 0)
        throw std::logic_error("make_params: delta invariant violated");
    WideInt dt1 = wide_add(dt, WideInt::from_u64(params.t, q.width + 1)).first;
    if (wide_cmp(dt1, q.resized(q.width + 1)) <= 0)
        throw std::logic_error("make_params: delta invariant violated");

    std::uint64_t h = 0xCBF29CE484222325ull;
    h = fnv1a(h, static_cast<std::uint64_t>(n));
    h = fnv1a(h, static_cast<std::uint64_t>(q.width));
    for (int i = 0; i < q.width; ++i) h = fnv1a(h, q.limb[i]);
    h = fnv1a(h, params.t);
    h = fnv1a(h, static_cast<std::uint64_t>(params.noise_bound));
    params.params_hash = h;
    return params;
}

KeyPair keygen(const HeParams& params, std::uint64_t seed) {
    require_params(params);
    Prng root(seed);
    KeyPair kp;
    kp.sk.s = ternary_poly(params.ring, root.child(0));
    Polynomial a = uniform_poly(params.ring, root.child(1));
    Polynomial e = noise_poly(params.ring, root.child(2), params.noise_bound);
    kp.pk.p1 = a;
    kp.pk.p0 = poly_negate(poly_add(poly_negacyclic_mul_ternary(a, kp.sk.s), e));
    return kp;
}

Ciphertext encrypt(const HeParams& params, const PublicKey& pk, const Plaintext& m,
                   std::uint64_t seed) {
    require_params(params);
    Polynomial mp = lift_plaintext(params, m);
    Prng root(seed);
    Polynomial u = ternary_poly(params.ring, root.child(0));
    Polynomial e1 = noise_poly(params.ring, root.child(1), params.noise_bound);
    Polynomial e2 = noise_poly(params.ring, root.child(2), params.noise_bound);

    Ciphertext ct;
    ct.comps.push_back(poly_add(poly_add(poly_negacyclic_mul_ternary(pk.p0, u), e1),
                                poly_scalar_mul(mp, params.delta)));
    ct.comps.push_back(poly_add(poly_negacyclic_mul_ternary(pk.p1, u), e2));
    ct.mul_count = 0;
    return ct;
}

Plaintext decrypt(const HeParams& params, const SecretKey& sk, const Ciphertext& ct) {
    require_params(params);
    require_ciphertext(params, ct, "decrypt");
    Polynomial v = phase(params, sk, ct);
    InstrCounter sink;
    CountScope swallow(sink);
    Plaintext out(params.ring->n);
    for (int i = 0; i < params.ring->n; ++i)
        out[i] = round_coeff(params, v.coeffs[i]);
    return out;
}

Ciphertext he_add(const HeParams& params, const Ciphertext& a, const Ciphertext& b) {
    require_params(params);
    require_ciphertext(params, a, "he_add");
    require_ciphertext(params, b, "he_add");

    const std::size_t len = std::max(a.comps.size(), b.comps.size());
    Ciphertext out;
    out.mul_count = std::max(a.mul_count, b.mul_count);
    Polynomial zero = zero_poly(params.ring);
    for (std::size_t i = 0; i < len; ++i) {
        const Polynomial& pa = i < a.comps.size() ? a.comps[i] : zero;
        const Polynomial& pb = i < b.comps.size() ? b.comps[i] : zero;
        out.comps.push_back(poly_add(pa, pb));
    }
    return out;
}

Ciphertext he_mul(const HeParams& params, const Ciphertext& a, const Ciphertext& b) {
    require_params(params);
    require_ciphertext(params, a, "he_mul");
    require_ciphertext(params, b, "he_mul");
    if (a.comps.size() != 2 || b.comps.size() != 2 || a.mul_count + b.mul_count >= 1)
        throw DepthError("he_mul: depth-1 limit reached (operands must be fresh "
                         "2-component ciphertexts)");

    const RingParams& r = *params.ring;
    cost::charge(cost::he_mul_item(r.n, r.coeff_width));
    InstrCounter sink;
    CountScope swallow(sink);

    auto d0 = detail::negacyclic_tensor(a.comps[0], b.comps[0]);
    auto d1 = detail::negacyclic_tensor_cross(a.comps[0], b.comps[1],
                                              a.comps[1], b.comps[0]);
    auto d2 = detail::negacyclic_tensor(a.comps[1], b.comps[1]);

    Ciphertext out;
    out.mul_count = 1;
    for (const auto* d : {&d0, &d1, &d2}) {
        Polynomial p = zero_poly(params.ring);
        for (int i = 0; i < r.n; ++i) p.coeffs[i] = scale_round(params, (*d)[i]);
        out.comps.push_back(std::move(p));
    }
    return out;
}

int noise_budget(const HeParams& params, const SecretKey& sk, const Ciphertext& ct) {
    require_params(params);
    require_ciphertext(params, ct, "noise_budget");
    const RingParams& r = *params.ring;
    const int w = r.coeff_width;
    Polynomial v = phase(params, sk, ct);

    InstrCounter sink;
    CountScope swallow(sink);
    WideInt one = WideInt::from_u64(1, w);
    WideInt half = wide_add(div_mod(r.q, WideInt::from_u64(2, 1)).first.resized(w), one).first;
    WideInt max_r(w);
    for (int i = 0; i < r.n; ++i) {
        std::uint64_t m = round_coeff(params, v.coeffs[i]);
        WideInt dm = mod_mul(params.delta, WideInt::from_u64(m % params.t, w), r.barrett);
        WideInt diff = mod_sub(v.coeffs[i], dm, r.q);
        if (wide_cmp(diff, half) >= 0) diff = wide_sub(r.q, diff).first;
        if (wide_cmp(diff, max_r) > 0) max_r = diff;
    }
    if (max_r.is_zero()) max_r = one;

    WideInt denom = mul_small(max_r, 2 * params.t).trimmed();
    if (denom.width > w || wide_cmp(denom.resized(w), r.q) >= 0) return 0;
    WideInt quot = div_mod(r.q, denom).first;
    int bits = quot.bit_length();
    return bits > 0 ? bits - 1 : 0;
}

Plaintext encode_scalar(const HeParams& params, std::uint64_t v) {
    require_params(params);
    if (v >= params.t) throw std::invalid_argument("encode_scalar: value not reduced mod t");
    Plaintext pt(params.ring->n, 0);
    pt[0] = v;
    return pt;
}

std::uint64_t decode_scalar(const HeParams& params, const Plaintext& pt) {
    require_params(params);
    if (pt.empty()) throw std::invalid_argument("decode_scalar: empty plaintext");
    return pt[0];
}

Plaintext encode_vector(const HeParams& params, const std::vector<std::uint64_t>& vs) {
    require_params(params);
    if (vs.size() > static_cast<std::size_t>(params.ring->n))
        throw std::invalid_argument("encode_vector: too many values for the ring dimension");
    Plaintext pt(params.ring->n, 0);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (vs[i] >= params.t)
            throw std::invalid_argument("encode_vector: value not reduced mod t");
        pt[i] = vs[i];
    }
    return pt;
}

std::vector<std::uint64_t> decode_vector(const HeParams& params, const Plaintext& pt,
                                         std::size_t count) {
    require_params(params);
    if (count > pt.size()) throw std::invalid_argument("decode_vector: count exceeds length");
    return std::vector<std::uint64_t>(pt.begin(), pt.begin() + count);
}

namespace cost {

InstrCounter he_add_item(int n, int w, int comps_a, int comps_b) {
    InstrCounter c;
    c.add_scaled(poly_add_cost(n, w), static_cast<std::uint64_t>(std::max(comps_a, comps_b)));
    return c;
}

InstrCounter he_mul_item(int n, int w) {
    InstrCounter c;
    const std::uint64_t nn = static_cast<std::uint64_t>(n) * n;

    // Tensor: d0 and d2 take n^2 extended products each, d1 takes 2n^2.
    InstrCounter prod = karatsuba_cost(w) + wide_add_cost(2 * w + 1);
    c.add_scaled(prod, 4 * nn);

    // Centering the four input polynomials (compare + unconditional negate).
    InstrCounter centering = wide_sub_cost(w);
    centering.adds += 1;
    c.add_scaled(centering, 4ull * n);

    // Scale-and-round plus reduction for the 3n output coefficients.
    InstrCounter scale = mul_small_cost(2 * w + 1);
    scale += wide_add_cost(2 * w + 2);
    scale += div_mod_cost(2 * w + 2, w + 1);
    scale += mod_reduce_cost(w);
    scale += mod_add_cost(w);
    c.add_scaled(scale, 3ull * n);

    c.loads = 8 * nn * static_cast<std::uint64_t>(w) + 4ull * n * w;
    c.stores = 4 * nn * static_cast<std::uint64_t>(2 * w + 1) + 3ull * n * w;
    c.loop_overhead = 4 * nn + 7ull * n;
    return c;
}

InstrCounter raw_mul_item(int n, int w, int comps) {
    InstrCounter c;
    c.add_scaled(poly_negacyclic_mul_cost(n, w), static_cast<std::uint64_t>(comps));
    return c;
}

} // namespace cost

} // namespace pimhe
