#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pimhe/polyring.hpp"

namespace pimhe {

// Raised when a homomorphic multiplication would exceed the supported
// circuit depth (one multiplication; ciphertexts never grow past three
// components because there is no relinearization).
class DepthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One scheme instance.  The three standard sets pair the ring dimension
// with the coefficient-modulus budget: (1024, 27-bit), (2048, 54-bit),
// (4096, 109-bit).  t is the plaintext modulus; delta = floor(q/t) scales
// messages into the high bits of the coefficient range.
struct HeParams {
    RingPtr ring;
    std::uint64_t t = 0;
    WideInt delta{1};
    int noise_bound = 6;
    int security_bits = 0;
    std::uint64_t params_hash = 0;
};

// security_bits in {27, 54, 109}.  t_override replaces the default
// plaintext modulus (5 for the 27-bit set, 257 otherwise); it must lie in
// [2, 65536].  Defaults keep one depth-1 multiplication decryptable.
HeParams make_params(int security_bits, std::uint64_t t_override = 0);

// Coefficients of the plaintext polynomial, each in [0, t).
using Plaintext = std::vector<std::uint64_t>;

struct SecretKey {
    Polynomial s; // ternary: every coefficient in {0, 1, q-1}
};

struct PublicKey {
    Polynomial p0; // -(p1*s + e)
    Polynomial p1; // uniform
};

struct KeyPair {
    SecretKey sk;
    PublicKey pk;
};

struct Ciphertext {
    std::vector<Polynomial> comps; // 2 fresh, 3 after multiplication
    int mul_count = 0;
};

// Deterministic in (params, seed).  Child streams: 0 = secret key,
// 1 = uniform p1, 2 = key noise.
KeyPair keygen(const HeParams& params, std::uint64_t seed);

// Deterministic in (pk, m, seed).  Child streams: 0 = ephemeral ternary u,
// 1 and 2 = the two noise polynomials.
Ciphertext encrypt(const HeParams& params, const PublicKey& pk, const Plaintext& m,
                   std::uint64_t seed);

Plaintext decrypt(const HeParams& params, const SecretKey& sk, const Ciphertext& ct);

// Component-wise sum; the shorter ciphertext is zero-padded.
Ciphertext he_add(const HeParams& params, const Ciphertext& a, const Ciphertext& b);

// Depth-1 tensor multiplication with exact scale-and-round; inputs must be
// fresh two-component ciphertexts, output has three components.
Ciphertext he_mul(const HeParams& params, const Ciphertext& a, const Ciphertext& b);

// Bits of noise headroom: floor(log2(q / (2 * max_residual * t))), clamped
// at zero.  Positive budget guarantees correct decryption.
int noise_budget(const HeParams& params, const SecretKey& sk, const Ciphertext& ct);

// Constant-coefficient encoding: the value sits in the degree-0 slot.
Plaintext encode_scalar(const HeParams& params, std::uint64_t v);
std::uint64_t decode_scalar(const HeParams& params, const Plaintext& pt);

// Coefficient packing: value i in coefficient i.  Addition is slot-wise;
// multiplication is NOT (negacyclic convolution mixes slots).
Plaintext encode_vector(const HeParams& params, const std::vector<std::uint64_t>& vs);
std::vector<std::uint64_t> decode_vector(const HeParams& params, const Plaintext& pt,
                                         std::size_t count);

namespace cost {

// Closed-form device charge for one ciphertext addition with the given
// component counts (the result has max(comps_a, comps_b) components).
InstrCounter he_add_item(int n, int w, int comps_a, int comps_b);

// Closed-form device charge for one depth-1 ciphertext multiplication.
InstrCounter he_mul_item(int n, int w);

// Raw negacyclic multiplication of each pair of matching components
// (cost-profiling mode; comps per input item).
InstrCounter raw_mul_item(int n, int w, int comps);

} // namespace cost

} // namespace pimhe
