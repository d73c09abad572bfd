#pragma once

#include <memory>
#include <vector>

#include "pimhe/wideint.hpp"

namespace pimhe {

// Z_q[x]/(x^n + 1) with n a power of two.  Coefficients are WideInt residues
// of a fixed limb width.  Multiplication is schoolbook (quadratic) by design:
// the modeled device has no wide multiplier, so the cost of the double loop
// is the quantity under study.
struct RingParams {
    int n = 0;
    int coeff_width = 0;
    WideInt q{1};
    Barrett barrett;
};

using RingPtr = std::shared_ptr<const RingParams>;

// Validates n (power of two) and q (odd, >= 3, top limb nonzero) and
// precomputes the Barrett reciprocal.
RingPtr make_ring(int n, const WideInt& q);

bool same_ring(const RingParams& a, const RingParams& b);

struct Polynomial {
    RingPtr ring;
    std::vector<WideInt> coeffs;

    bool operator==(const Polynomial& o) const { return coeffs == o.coeffs; }
};

Polynomial zero_poly(const RingPtr& ring);

// Coefficient-wise operations, all eager mod-q.
Polynomial poly_add(const Polynomial& a, const Polynomial& b);
Polynomial poly_sub(const Polynomial& a, const Polynomial& b);
Polynomial poly_negate(const Polynomial& a);
Polynomial poly_scalar_mul(const Polynomial& a, const WideInt& s);

// Schoolbook negacyclic product: out[i+j mod n] +-= a_i * b_j, the sign
// flipping when i+j wraps past n.  Charges the full device formula
// (n^2 modular multiplications plus accumulation).
Polynomial poly_negacyclic_mul(const Polynomial& a, const Polynomial& b);

// Serial reference kept for testing and benchmarking: integer convolution
// with lazy reduction (positive and negative accumulators reduced once at
// the end).  Algorithmically independent of the eager path; never counted.
Polynomial poly_negacyclic_mul_reference(const Polynomial& a, const Polynomial& b);

// Negacyclic product where every coefficient of t is in {0, 1, q-1}.
// Same result and same charge as poly_negacyclic_mul; the host shortcut
// (additions only) just makes simulation tractable.  Throws if t is not
// ternary.
Polynomial poly_negacyclic_mul_ternary(const Polynomial& a, const Polynomial& t);

// One signed integer: magnitude with a sign flag (zero is non-negative).
struct SignedWide {
    bool neg = false;
    WideInt mag{1};
};

namespace detail {

// Negacyclic convolution over the integers of centered representatives
// (coefficients mapped to (-q/2, q/2]).  Output magnitudes are
// 2*coeff_width+1 limbs.  Internal plumbing for ciphertext multiplication;
// charges nothing (the caller charges its own closed form).
std::vector<SignedWide> negacyclic_tensor(const Polynomial& a, const Polynomial& b);

// As above for the sum a0*b1 + a1*b0 computed jointly.
std::vector<SignedWide> negacyclic_tensor_cross(const Polynomial& a0, const Polynomial& b1,
                                                const Polynomial& a1, const Polynomial& b0);

} // namespace detail

namespace cost {

InstrCounter poly_add_cost(int n, int w);
InstrCounter poly_negate_cost(int n, int w);
InstrCounter poly_scalar_mul_cost(int n, int w);
InstrCounter poly_negacyclic_mul_cost(int n, int w);

} // namespace cost

} // namespace pimhe
