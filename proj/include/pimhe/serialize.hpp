#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pimhe/bfv.hpp"

namespace pimhe {

// Wire format, bit-exact across platforms.  A 16-byte header:
//   bytes 0..5   magic "PIMHE1"
//   bytes 6..13  parameter-set hash, little-endian u64
//   bytes 14..15 component count, little-endian u16
// followed by that many polynomials, each a little-endian u32 limb count and
// the coefficients' limbs (coeff_width limbs per coefficient, little-endian).

class SerializeError : public std::runtime_error {
  public:
    SerializeError(const std::string& what, std::size_t offset);
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

std::size_t ciphertext_byte_size(const HeParams& params, int comps);

std::vector<std::uint8_t> serialize_ciphertext(const HeParams& params, const Ciphertext& ct);
Ciphertext deserialize_ciphertext(const HeParams& params, const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> serialize_secret_key(const HeParams& params, const SecretKey& sk);
SecretKey deserialize_secret_key(const HeParams& params, const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> serialize_public_key(const HeParams& params, const PublicKey& pk);
PublicKey deserialize_public_key(const HeParams& params, const std::vector<std::uint8_t>& bytes);

} // namespace pimhe
