#include "pimhe/serialize.hpp"

#include <cstring>
#include <string>

namespace pimhe {

namespace {

constexpr char kMagic[6] = {'P', 'I', 'M', 'H', 'E', '1'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
  public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }

    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8, "u64");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
        pos_ += 8;
        return v;
    }

    std::uint16_t u16() {
        need(2, "u16");
        std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    void raw(void* dst, std::size_t len, const char* what) {
        need(len, what);
        std::memcpy(dst, bytes_.data() + pos_, len);
        pos_ += len;
    }

    void finish() const {
        if (pos_ != bytes_.size())
            throw SerializeError("trailing bytes after the last component", pos_);
    }

  private:
    void need(std::size_t len, const char* what) const {
        if (bytes_.size() - pos_ < len)
            throw SerializeError(std::string("input truncated while reading ") + what, pos_);
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

void write_header(std::vector<std::uint8_t>& out, const HeParams& params, int comps) {
    out.insert(out.end(), kMagic, kMagic + sizeof(kMagic));
    put_u64(out, params.params_hash);
    out.push_back(static_cast<std::uint8_t>(comps & 0xFF));
    out.push_back(static_cast<std::uint8_t>((comps >> 8) & 0xFF));
}

int read_header(Reader& in, const HeParams& params) {
    char magic[6];
    in.raw(magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw SerializeError("bad magic (not a PIMHE1 blob)", 0);
    std::uint64_t hash = in.u64();
    if (hash != params.params_hash)
        throw SerializeError("parameter-set hash mismatch", 6);
    return in.u16();
}

void write_poly(std::vector<std::uint8_t>& out, const Polynomial& p) {
    const RingParams& r = *p.ring;
    put_u32(out, static_cast<std::uint32_t>(r.n) * static_cast<std::uint32_t>(r.coeff_width));
    for (const WideInt& c : p.coeffs)
        for (int i = 0; i < r.coeff_width; ++i) put_u32(out, c.limb[i]);
}

Polynomial read_poly(Reader& in, const HeParams& params) {
    const RingParams& r = *params.ring;
    const std::uint32_t want = static_cast<std::uint32_t>(r.n) * static_cast<std::uint32_t>(r.coeff_width);
    std::size_t at = in.pos();
    std::uint32_t limbs = in.u32();
    if (limbs != want)
        throw SerializeError("component limb count " + std::to_string(limbs) +
                                 " does not match the parameter set (expected " +
                                 std::to_string(want) + ")",
                             at);
    Polynomial p = zero_poly(params.ring);
    for (int k = 0; k < r.n; ++k) {
        at = in.pos();
        WideInt c(r.coeff_width);
        for (int i = 0; i < r.coeff_width; ++i) c.limb[i] = in.u32();
        if (wide_cmp(c, r.q) >= 0)
            throw SerializeError("coefficient " + std::to_string(k) + " not reduced mod q", at);
        p.coeffs[k] = c;
    }
    return p;
}

} // namespace

SerializeError::SerializeError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

std::size_t ciphertext_byte_size(const HeParams& params, int comps) {
    const RingParams& r = *params.ring;
    return kHeaderBytes +
           static_cast<std::size_t>(comps) *
               (4 + static_cast<std::size_t>(r.n) * r.coeff_width * 4);
}

std::vector<std::uint8_t> serialize_ciphertext(const HeParams& params, const Ciphertext& ct) {
    if (ct.comps.size() < 2 || ct.comps.size() > 3)
        throw std::invalid_argument("serialize_ciphertext: ciphertext must have 2 or 3 components");
    std::vector<std::uint8_t> out;
    out.reserve(ciphertext_byte_size(params, static_cast<int>(ct.comps.size())));
    write_header(out, params, static_cast<int>(ct.comps.size()));
    for (const Polynomial& p : ct.comps) write_poly(out, p);
    return out;
}

Ciphertext deserialize_ciphertext(const HeParams& params, const std::vector<std::uint8_t>& bytes) {
    Reader in(bytes);
    int comps = read_header(in, params);
    if (comps < 2 || comps > 3)
        throw SerializeError("ciphertext component count must be 2 or 3, got " +
                                 std::to_string(comps),
                             14);
    Ciphertext ct;
    for (int i = 0; i < comps; ++i) ct.comps.push_back(read_poly(in, params));
    ct.mul_count = comps == 3 ? 1 : 0;
    in.finish();
    return ct;
}

std::vector<std::uint8_t> serialize_secret_key(const HeParams& params, const SecretKey& sk) {
    std::vector<std::uint8_t> out;
    write_header(out, params, 1);
    write_poly(out, sk.s);
    return out;
}

SecretKey deserialize_secret_key(const HeParams& params, const std::vector<std::uint8_t>& bytes) {
    Reader in(bytes);
    int comps = read_header(in, params);
    if (comps != 1)
        throw SerializeError("secret key must have exactly 1 component, got " +
                                 std::to_string(comps),
                             14);
    SecretKey sk;
    sk.s = read_poly(in, params);
    in.finish();

    const RingParams& r = *params.ring;
    WideInt one = WideInt::from_u64(1, r.coeff_width);
    InstrCounter sink;
    CountScope swallow(sink);
    WideInt qm1 = wide_sub(r.q, one).first;
    for (int k = 0; k < r.n; ++k) {
        const WideInt& c = sk.s.coeffs[k];
        if (!c.is_zero() && !(c == one) && !(c == qm1))
            throw SerializeError("secret key coefficient " + std::to_string(k) + " not ternary",
                                 kHeaderBytes + 4 + static_cast<std::size_t>(k) * r.coeff_width * 4);
    }
    return sk;
}

std::vector<std::uint8_t> serialize_public_key(const HeParams& params, const PublicKey& pk) {
    std::vector<std::uint8_t> out;
    write_header(out, params, 2);
    write_poly(out, pk.p0);
    write_poly(out, pk.p1);
    return out;
}

PublicKey deserialize_public_key(const HeParams& params, const std::vector<std::uint8_t>& bytes) {
    Reader in(bytes);
    int comps = read_header(in, params);
    if (comps != 2)
        throw SerializeError("public key must have exactly 2 components, got " +
                                 std::to_string(comps),
                             14);
    PublicKey pk;
    pk.p0 = read_poly(in, params);
    pk.p1 = read_poly(in, params);
    in.finish();
    return pk;
}

} // namespace pimhe
