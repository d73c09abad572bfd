#include <doctest.h>

#include <cstdint>
#include <vector>

#include "pimhe/bfv.hpp"
#include "test_util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace pimhe;
using namespace pimhe::test;

namespace {

const HeParams& params27() {
    static HeParams p = make_params(27);
    return p;
}
const HeParams& params54() {
    static HeParams p = make_params(54);
    return p;
}
const HeParams& params109() {
    static HeParams p = make_params(109);
    return p;
}

std::vector<const HeParams*> all_params() {
    return {&params27(), &params54(), &params109()};
}

Plaintext random_plaintext(const HeParams& p, Prng& rng) {
    Plaintext m(p.ring->n);
    for (auto& v : m) v = rng.below(p.t);
    return m;
}

// Negacyclic product of two plaintext vectors mod t, computed over the
// integers (values are small enough for int64 accumulation).
Plaintext plain_negacyclic_mod_t(const HeParams& p, const Plaintext& a, const Plaintext& b) {
    const int n = p.ring->n;
    const std::int64_t t = static_cast<std::int64_t>(p.t);
    std::vector<std::int64_t> acc(n, 0);
    for (int i = 0; i < n; ++i) {
        if (!a[i]) continue;
        std::int64_t ai = static_cast<std::int64_t>(a[i] % p.t);
        for (int j = 0; j < n; ++j) {
            if (!b[j]) continue;
            std::int64_t prod = (ai * static_cast<std::int64_t>(b[j] % p.t)) % t;
            int k = i + j;
            if (k >= n) {
                acc[k - n] -= prod;
            } else {
                acc[k] += prod;
            }
        }
    }
    Plaintext out(n);
    for (int i = 0; i < n; ++i) out[i] = static_cast<std::uint64_t>(((acc[i] % t) + t) % t);
    return out;
}

// Centered absolute value of one coefficient, as a BigInt.
BigInt centered_mag(const WideInt& c, const BigInt& q) {
    BigInt v = to_big(c);
    return v > q / 2 ? q - v : v;
}

Ciphertext noiseless_ct(const HeParams& p, const Plaintext& m) {
    Polynomial mp = zero_poly(p.ring);
    for (int i = 0; i < p.ring->n; ++i)
        mp.coeffs[i] = WideInt::from_u64(m[i], p.ring->coeff_width);
    Ciphertext ct;
    ct.comps.push_back(poly_scalar_mul(mp, p.delta));
    ct.comps.push_back(zero_poly(p.ring));
    ct.mul_count = 0;
    return ct;
}

bool same_ciphertext(const Ciphertext& a, const Ciphertext& b) {
    if (a.comps.size() != b.comps.size() || a.mul_count != b.mul_count) return false;
    for (std::size_t i = 0; i < a.comps.size(); ++i)
        if (!(a.comps[i] == b.comps[i])) return false;
    return true;
}

} // namespace

TEST_CASE("scheme parameters: standard sets and delta invariant") {
    struct Expect {
        int sec;
        int n;
        std::uint64_t t;
        int qbits;
    };
    const Expect table[] = {{27, 1024, 5, 27}, {54, 2048, 257, 54}, {109, 4096, 257, 109}};
    for (const auto& e : table) {
        HeParams p = make_params(e.sec);
        CHECK(p.ring->n == e.n);
        CHECK(p.t == e.t);
        CHECK(p.ring->q.bit_length() == e.qbits);
        CHECK(p.security_bits == e.sec);
        BigInt q = to_big(p.ring->q);
        BigInt d = to_big(p.delta);
        BigInt t = e.t;
        CHECK(d == q / t);
        CHECK(d * t <= q);
        CHECK(q < (d + 1) * t);
    }
    CHECK(to_big(params27().ring->q) == BigInt("134215681"));
    CHECK(to_big(params54().ring->q) == BigInt("18014398509404161"));
    CHECK(params109().ring->q.limb[0] == 4294737921u);
    CHECK(params109().ring->q.limb[3] == 8191u);
}

TEST_CASE("scheme parameters: overrides and validation") {
    for (std::uint64_t t : {2ull, 5ull, 257ull, 65536ull}) {
        HeParams p = make_params(27, t);
        CHECK(p.t == t);
        BigInt q = to_big(p.ring->q);
        CHECK(to_big(p.delta) == q / t);
    }
    CHECK_THROWS_AS(make_params(27, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_params(27, 65537), std::invalid_argument);
    CHECK_THROWS_AS(make_params(42), std::invalid_argument);

    CHECK(params27().params_hash != params54().params_hash);
    CHECK(params54().params_hash != params109().params_hash);
    CHECK(make_params(27, 257).params_hash != params27().params_hash);
    CHECK(make_params(27).params_hash == params27().params_hash);
}

TEST_CASE("keygen: determinism and key relation") {
    for (const HeParams* pp : all_params()) {
        const HeParams& p = *pp;
        KeyPair k1 = keygen(p, 41);
        KeyPair k2 = keygen(p, 41);
        CHECK(k1.sk.s == k2.sk.s);
        CHECK(k1.pk.p0 == k2.pk.p0);
        CHECK(k1.pk.p1 == k2.pk.p1);

        KeyPair k3 = keygen(p, 42);
        CHECK(!(k3.pk.p1 == k1.pk.p1));

        for (const WideInt& c : k1.sk.s.coeffs) {
            BigInt v = to_big(c);
            BigInt q = to_big(p.ring->q);
            CHECK((v == 0 || v == 1 || v == q - 1));
        }

        // p0 + p1*s must equal -e, so every coefficient is within the noise
        // half-width of 0 once centered.
        Polynomial res = poly_add(k1.pk.p0, poly_negacyclic_mul_ternary(k1.pk.p1, k1.sk.s));
        BigInt q = to_big(p.ring->q);
        for (const WideInt& c : res.coeffs) CHECK(centered_mag(c, q) <= p.noise_bound);
    }
}

TEST_CASE("encrypt/decrypt: roundtrip on 100 random plaintexts per set") {
    for (const HeParams* pp : all_params()) {
        const HeParams& p = *pp;
        KeyPair kp = keygen(p, 7);
        int failures = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : failures)
#endif
        for (int trial = 0; trial < 100; ++trial) {
            Prng rng(1000 + trial);
            Plaintext m = random_plaintext(p, rng);
            Ciphertext ct = encrypt(p, kp.pk, m, 5000 + trial);
            if (decrypt(p, kp.sk, ct) != m) ++failures;
        }
        CHECK(failures == 0);
    }
}

TEST_CASE("encrypt: zero plaintext, determinism, input validation") {
    for (const HeParams* pp : all_params()) {
        const HeParams& p = *pp;
        KeyPair kp = keygen(p, 11);
        Plaintext zero(p.ring->n, 0);
        Ciphertext ct = encrypt(p, kp.pk, zero, 3);
        CHECK(decrypt(p, kp.sk, ct) == zero);

        Prng rng(17);
        Plaintext m = random_plaintext(p, rng);
        CHECK(same_ciphertext(encrypt(p, kp.pk, m, 9), encrypt(p, kp.pk, m, 9)));
        CHECK(!same_ciphertext(encrypt(p, kp.pk, m, 9), encrypt(p, kp.pk, m, 10)));

        Plaintext bad(p.ring->n, 0);
        bad[0] = p.t;
        CHECK_THROWS_AS(encrypt(p, kp.pk, bad, 1), std::invalid_argument);
        Plaintext shorter(p.ring->n - 1, 0);
        CHECK_THROWS_AS(encrypt(p, kp.pk, shorter, 1), std::invalid_argument);
    }
}

TEST_CASE("decrypt: noiseless ciphertext recovers the message exactly") {
    for (const HeParams* pp : all_params()) {
        const HeParams& p = *pp;
        KeyPair kp = keygen(p, 23);
        Prng rng(29);
        Plaintext m = random_plaintext(p, rng);
        Ciphertext ct = noiseless_ct(p, m);
        CHECK(decrypt(p, kp.sk, ct) == m);
    }
}

TEST_CASE("he_add: scalar examples and zero identity") {
    for (const HeParams* pp : all_params()) {
        const HeParams& p = *pp;
        KeyPair kp = keygen(p, 31);
        Ciphertext e3 = encrypt(p, kp.pk, encode_scalar(p, 3 % p.t), 1);
        Ciphertext e4 = encrypt(p, kp.pk, encode_scalar(p, 4 % p.t), 2);
        CHECK(decode_scalar(p, decrypt(p, kp.sk, he_add(p, e3, e4))) == 7 % p.t);

        Prng rng(37);
        Plaintext m = random_plaintext(p, rng);
        Ciphertext em = encrypt(p, kp.pk, m, 3);
        Ciphertext e0 = encrypt(p, kp.pk, Plaintext(p.ring->n, 0), 4);
        CHECK(decrypt(p, kp.sk, he_add(p, em, e0)) == m);
    }

    // The sum 3 + 4 = 7 survives unreduced when t >= 8.
    HeParams p13 = make_params(27, 13);
    KeyPair kp = keygen(p13, 31);
    Ciphertext e3 = encrypt(p13, kp.pk, encode_scalar(p13, 3), 1);
    Ciphertext e4 = encrypt(p13, kp.pk, encode_scalar(p13, 4), 2);
    CHECK(decode_scalar(p13, decrypt(p13, kp.sk, he_add(p13, e3, e4))) == 7);
}

TEST_CASE("he_add: slot-wise sum mod t on 100 random pairs per set") {
    for (const HeParams* pp : all_params()) {
        const HeParams& p = *pp;
        KeyPair kp = keygen(p, 43);
        int failures = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : failures)
#endif
        for (int trial = 0; trial < 100; ++trial) {
            Prng rng(7700 + trial);
            Plaintext a = random_plaintext(p, rng);
            Plaintext b = random_plaintext(p, rng);
            Ciphertext ca = encrypt(p, kp.pk, a, 100 + 2 * trial);
            Ciphertext cb = encrypt(p, kp.pk, b, 101 + 2 * trial);
            Plaintext got = decrypt(p, kp.sk, he_add(p, ca, cb));
            for (int i = 0; i < p.ring->n; ++i)
                if (got[i] != (a[i] + b[i]) % p.t) {
                    ++failures;
                    break;
                }
        }
        CHECK(failures == 0);
    }
}

TEST_CASE("he_add: commutative, associative, mixed sizes, ring mismatch") {
    const HeParams& p = params27();
    KeyPair kp = keygen(p, 47);
    Prng rng(53);
    Ciphertext a = encrypt(p, kp.pk, random_plaintext(p, rng), 1);
    Ciphertext b = encrypt(p, kp.pk, random_plaintext(p, rng), 2);
    Ciphertext c = encrypt(p, kp.pk, random_plaintext(p, rng), 3);

    CHECK(same_ciphertext(he_add(p, a, b), he_add(p, b, a)));
    CHECK(same_ciphertext(he_add(p, he_add(p, a, b), c), he_add(p, a, he_add(p, b, c))));

    // A 3-component product plus a fresh 2-component ciphertext exercises the
    // zero-padding path and keeps the mul counter.
    Plaintext m1 = encode_scalar(p, 2);
    Plaintext m2 = encode_scalar(p, 3);
    Plaintext m3 = encode_scalar(p, 4);
    Ciphertext prod = he_mul(p, encrypt(p, kp.pk, m1, 4), encrypt(p, kp.pk, m2, 5));
    Ciphertext mixed = he_add(p, prod, encrypt(p, kp.pk, m3, 6));
    CHECK(mixed.comps.size() == 3);
    CHECK(mixed.mul_count == 1);
    CHECK(decode_scalar(p, decrypt(p, kp.sk, mixed)) == (2 * 3 + 4) % p.t);

    const HeParams& other = params54();
    KeyPair kp2 = keygen(other, 1);
    Ciphertext foreign = encrypt(other, kp2.pk, Plaintext(other.ring->n, 0), 1);
    CHECK_THROWS_AS(he_add(p, a, foreign), std::invalid_argument);
}

TEST_CASE("he_mul: scalar examples at every set") {
    for (const HeParams* pp : all_params()) {
        const HeParams& p = *pp;
        KeyPair kp = keygen(p, 59);
        Ciphertext e3 = encrypt(p, kp.pk, encode_scalar(p, 3 % p.t), 1);
        Ciphertext e4 = encrypt(p, kp.pk, encode_scalar(p, 4 % p.t), 2);
        Ciphertext prod = he_mul(p, e3, e4);
        CHECK(prod.comps.size() == 3);
        CHECK(prod.mul_count == 1);
        CHECK(decode_scalar(p, decrypt(p, kp.sk, prod)) == 12 % p.t);

        std::uint64_t m = 2 + Prng(61).below(p.t - 2);
        Ciphertext em = encrypt(p, kp.pk, encode_scalar(p, m), 3);
        Ciphertext e1 = encrypt(p, kp.pk, encode_scalar(p, 1), 4);
        CHECK(decode_scalar(p, decrypt(p, kp.sk, he_mul(p, em, e1))) == m);
    }

    // 3 * 4 = 12 undisturbed by the modulus needs t >= 13; at n=1024 that
    // means an override (the default there keeps t small for noise headroom).
    HeParams p13 = make_params(27, 13);
    KeyPair kp = keygen(p13, 59);
    Ciphertext e3 = encrypt(p13, kp.pk, encode_scalar(p13, 3), 1);
    Ciphertext e4 = encrypt(p13, kp.pk, encode_scalar(p13, 4), 2);
    CHECK(decode_scalar(p13, decrypt(p13, kp.sk, he_mul(p13, e3, e4))) == 12);
}

TEST_CASE("he_mul: 100 random constant-coefficient pairs at n=2048") {
    const HeParams& p = params54();
    KeyPair kp = keygen(p, 67);
    int failures = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : failures)
#endif
    for (int trial = 0; trial < 100; ++trial) {
        Prng rng(9100 + trial);
        std::uint64_t a = rng.below(p.t);
        std::uint64_t b = rng.below(p.t);
        Ciphertext ca = encrypt(p, kp.pk, encode_scalar(p, a), 400 + 2 * trial);
        Ciphertext cb = encrypt(p, kp.pk, encode_scalar(p, b), 401 + 2 * trial);
        Ciphertext prod = he_mul(p, ca, cb);
        Plaintext got = decrypt(p, kp.sk, prod);
        if (got[0] != (a * b) % p.t) ++failures;
        for (int i = 1; i < p.ring->n; ++i)
            if (got[i] != 0) {
                ++failures;
                break;
            }
    }
    CHECK(failures == 0);
}

TEST_CASE("he_mul: general plaintext products match the negacyclic oracle") {
    struct Run {
        const HeParams* p;
        int trials;
    };
    const Run runs[] = {{&params27(), 10}, {&params54(), 6}, {&params109(), 2}};
    for (const Run& r : runs) {
        const HeParams& p = *r.p;
        KeyPair kp = keygen(p, 71);
        for (int trial = 0; trial < r.trials; ++trial) {
            Prng rng(8800 + trial);
            Plaintext a = random_plaintext(p, rng);
            Plaintext b = random_plaintext(p, rng);
            Ciphertext prod =
                he_mul(p, encrypt(p, kp.pk, a, 600 + 2 * trial), encrypt(p, kp.pk, b, 601 + 2 * trial));
            REQUIRE(noise_budget(p, kp.sk, prod) > 0);
            CHECK(decrypt(p, kp.sk, prod) == plain_negacyclic_mod_t(p, a, b));
        }
    }
}

TEST_CASE("noise_budget: depth-1 products per parameter set") {
    // Constant-coefficient products (the statistic pipelines' shape) retain a
    // positive budget everywhere, including n=1024 with its default t.
    for (const HeParams* pp : all_params()) {
        const HeParams& p = *pp;
        KeyPair kp = keygen(p, 137);
        Ciphertext ca = encrypt(p, kp.pk, encode_scalar(p, p.t - 1), 1);
        Ciphertext cb = encrypt(p, kp.pk, encode_scalar(p, p.t - 2), 2);
        CHECK(noise_budget(p, kp.sk, he_mul(p, ca, cb)) > 0);
    }

    // At n=1024 the budget is the binding constraint on t: raising t to 17
    // exhausts it after a single product (decryption still succeeds there,
    // but no headroom remains for further additions).
    {
        HeParams p = make_params(27, 17);
        KeyPair kp = keygen(p, 139);
        Prng rng(149);
        Plaintext a = random_plaintext(p, rng);
        Plaintext b = random_plaintext(p, rng);
        Ciphertext prod = he_mul(p, encrypt(p, kp.pk, a, 3), encrypt(p, kp.pk, b, 4));
        CHECK(noise_budget(p, kp.sk, prod) == 0);
        CHECK(decrypt(p, kp.sk, prod) == plain_negacyclic_mod_t(p, a, b));
    }
}

TEST_CASE("he_mul: depth limit raises DepthError") {
    const HeParams& p = params27();
    KeyPair kp = keygen(p, 73);
    Ciphertext a = encrypt(p, kp.pk, encode_scalar(p, 2), 1);
    Ciphertext b = encrypt(p, kp.pk, encode_scalar(p, 3), 2);
    Ciphertext prod = he_mul(p, a, b);

    CHECK_THROWS_AS(he_mul(p, prod, a), DepthError);
    CHECK_THROWS_AS(he_mul(p, a, prod), DepthError);

    // A 2-component ciphertext that already consumed the multiplicative depth
    // must be rejected as well.
    Ciphertext spent = a;
    spent.mul_count = 1;
    CHECK_THROWS_AS(he_mul(p, spent, b), DepthError);
}

TEST_CASE("noise_budget: noiseless value matches the analytic bound") {
    for (const HeParams* pp : all_params()) {
        const HeParams& p = *pp;
        KeyPair kp = keygen(p, 79);
        Prng rng(83);
        Plaintext m = random_plaintext(p, rng);
        int budget = noise_budget(p, kp.sk, noiseless_ct(p, m));

        BigInt ratio = to_big(p.ring->q) / (2 * BigInt(p.t));
        int expect = static_cast<int>(boost::multiprecision::msb(ratio));
        CHECK(budget >= expect - 1);
        CHECK(budget <= expect + 1);
    }
}

TEST_CASE("noise_budget: fresh encryptions keep a positive budget") {
    for (const HeParams* pp : all_params()) {
        const HeParams& p = *pp;
        KeyPair kp = keygen(p, 89);
        Prng rng(97);
        Plaintext m = random_plaintext(p, rng);
        Ciphertext ct = encrypt(p, kp.pk, m, 12);
        CHECK(noise_budget(p, kp.sk, ct) > 0);
    }
}

TEST_CASE("noise_budget: non-increasing under he_add") {
    const HeParams& p = params27();
    KeyPair kp = keygen(p, 101);
    const int pool = 21;
    std::vector<Ciphertext> cts;
    std::vector<int> budgets;
    for (int i = 0; i < pool; ++i) {
        Prng rng(4400 + i);
        cts.push_back(encrypt(p, kp.pk, random_plaintext(p, rng), 700 + i));
        budgets.push_back(noise_budget(p, kp.sk, cts.back()));
    }
    int trials = 0;
    int violations = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : violations)
#endif
    for (int i = 0; i < pool; ++i)
        for (int j = i + 1; j < pool; ++j) {
            int after = noise_budget(p, kp.sk, he_add(p, cts[i], cts[j]));
            if (after > budgets[i] || after > budgets[j]) ++violations;
        }
    trials = pool * (pool - 1) / 2;
    CHECK(trials >= 200);
    CHECK(violations == 0);
}

TEST_CASE("noise_budget: strictly decreasing under he_mul") {
    const HeParams& p = params27();
    KeyPair kp = keygen(p, 103);
    const int pool = 21;
    std::vector<Ciphertext> cts;
    std::vector<int> budgets;
    for (int i = 0; i < pool; ++i) {
        Prng rng(5500 + i);
        cts.push_back(encrypt(p, kp.pk, random_plaintext(p, rng), 800 + i));
        budgets.push_back(noise_budget(p, kp.sk, cts.back()));
    }
    int violations = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : violations)
#endif
    for (int i = 0; i < pool; ++i)
        for (int j = i + 1; j < pool; ++j) {
            int after = noise_budget(p, kp.sk, he_mul(p, cts[i], cts[j]));
            if (after >= budgets[i] || after >= budgets[j]) ++violations;
        }
    CHECK(pool * (pool - 1) / 2 >= 200);
    CHECK(violations == 0);
}

TEST_CASE("encoders: scalar and vector are inverse pairs") {
    const HeParams& p = params27();
    for (std::uint64_t v = 0; v < p.t; ++v)
        CHECK(decode_scalar(p, encode_scalar(p, v)) == v);
    Plaintext z = encode_scalar(p, 0);
    CHECK(z == Plaintext(p.ring->n, 0));
    CHECK_THROWS_AS(encode_scalar(p, p.t), std::invalid_argument);

    std::vector<std::uint64_t> vs = {1, 4, 0, 2, 3};
    Plaintext pt = encode_vector(p, vs);
    CHECK(decode_vector(p, pt, vs.size()) == vs);
    CHECK(encode_vector(p, {}) == Plaintext(p.ring->n, 0));
    CHECK_THROWS_AS(encode_vector(p, {p.t}), std::invalid_argument);
    std::vector<std::uint64_t> toomany(p.ring->n + 1, 1);
    CHECK_THROWS_AS(encode_vector(p, toomany), std::invalid_argument);

    // Packed addition is slot-wise.
    KeyPair kp = keygen(p, 107);
    std::vector<std::uint64_t> a = {3, 1, 4, 0, 2};
    std::vector<std::uint64_t> b = {4, 3, 2, 1, 0};
    Ciphertext ca = encrypt(p, kp.pk, encode_vector(p, a), 1);
    Ciphertext cb = encrypt(p, kp.pk, encode_vector(p, b), 2);
    auto got = decode_vector(p, decrypt(p, kp.sk, he_add(p, ca, cb)), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(got[i] == (a[i] + b[i]) % p.t);
}

TEST_CASE("instruction charges: scheme ops compose the kernel formulas") {
    const HeParams& p = params54();
    const int n = p.ring->n;
    const int w = p.ring->coeff_width;
    KeyPair kp = keygen(p, 109);
    Prng rng(113);
    Plaintext m = random_plaintext(p, rng);

    InstrCounter ckeygen;
    {
        CountScope scope(ckeygen);
        keygen(p, 1);
    }
    InstrCounter kg = cost::poly_negacyclic_mul_cost(n, w);
    kg += cost::poly_add_cost(n, w);
    kg += cost::poly_negate_cost(n, w);
    CHECK(ckeygen == kg);

    InstrCounter cenc;
    {
        CountScope scope(cenc);
        encrypt(p, kp.pk, m, 2);
    }
    InstrCounter en;
    en.add_scaled(cost::poly_negacyclic_mul_cost(n, w), 2);
    en.add_scaled(cost::poly_add_cost(n, w), 3);
    en += cost::poly_scalar_mul_cost(n, w);
    CHECK(cenc == en);

    Ciphertext ct = encrypt(p, kp.pk, m, 3);
    InstrCounter cdec;
    {
        CountScope scope(cdec);
        decrypt(p, kp.sk, ct);
    }
    InstrCounter de = cost::poly_negacyclic_mul_cost(n, w);
    de += cost::poly_add_cost(n, w);
    CHECK(cdec == de);
}

TEST_CASE("instruction charges: he_add and he_mul match their closed forms") {
    const HeParams& p = params27();
    const int n = p.ring->n;
    const int w = p.ring->coeff_width;
    KeyPair kp = keygen(p, 127);
    Prng rng(131);
    Ciphertext a = encrypt(p, kp.pk, random_plaintext(p, rng), 1);
    Ciphertext b = encrypt(p, kp.pk, random_plaintext(p, rng), 2);
    Ciphertext c = encrypt(p, kp.pk, random_plaintext(p, rng), 3);

    InstrCounter cadd;
    {
        CountScope scope(cadd);
        he_add(p, a, b);
    }
    CHECK(cadd == cost::he_add_item(n, w, 2, 2));

    Ciphertext prod = he_mul(p, a, b);
    InstrCounter cmixed;
    {
        CountScope scope(cmixed);
        he_add(p, prod, c);
    }
    CHECK(cmixed == cost::he_add_item(n, w, 3, 2));

    InstrCounter cmul1, cmul2;
    {
        CountScope scope(cmul1);
        he_mul(p, a, b);
    }
    {
        CountScope scope(cmul2);
        he_mul(p, a, c);
    }
    CHECK(cmul1 == cost::he_mul_item(n, w));
    CHECK(cmul1 == cmul2);
    CHECK(cmul1.muls32 > 0);
}
