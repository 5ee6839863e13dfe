#pragma once
#include <array>
#include <cstdint>
#include <stdexcept>

namespace qdes {

/*
 Exact arithmetic in GF(2^m) for 1 <= m <= 64.

 Elements are m-bit words (coefficient i of the polynomial is bit i).
 Products are reduced with Barrett's method: with h = x^(2m-2) and the
 precomputed constant mu = floor(h / p), the quotient of any c' with
 deg c' <= 2m-2 is floor(c' * mu / h), so the remainder costs two
 carryless multiplications instead of a long division.
*/

// Polynomial over GF(2) with up to 256 coefficient bits, little-endian words.
struct Poly256 {
    std::array<uint64_t, 4> w{0, 0, 0, 0};

    static Poly256 from_u64(uint64_t v) {
        Poly256 p;
        p.w[0] = v;
        return p;
    }
    bool is_zero() const { return (w[0] | w[1] | w[2] | w[3]) == 0; }
    bool bit(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }
    void set_bit(int i) { w[i >> 6] |= uint64_t(1) << (i & 63); }
    Poly256 operator^(const Poly256& o) const {
        Poly256 r;
        for (int i = 0; i < 4; ++i) r.w[i] = w[i] ^ o.w[i];
        return r;
    }
    Poly256& operator^=(const Poly256& o) {
        for (int i = 0; i < 4; ++i) w[i] ^= o.w[i];
        return *this;
    }
    int degree() const {  // -1 for the zero polynomial
        for (int i = 3; i >= 0; --i)
            if (w[i]) return 64 * i + 63 - __builtin_clzll(w[i]);
        return -1;
    }
    Poly256 shl(int s) const {
        Poly256 r;
        int ws = s >> 6, bs = s & 63;
        for (int i = 3; i >= ws; --i) {
            r.w[i] = w[i - ws] << bs;
            if (bs && i - ws - 1 >= 0) r.w[i] |= w[i - ws - 1] >> (64 - bs);
        }
        return r;
    }
    Poly256 shr(int s) const {
        Poly256 r;
        int ws = s >> 6, bs = s & 63;
        for (int i = 0; i + ws < 4; ++i) {
            r.w[i] = w[i + ws] >> bs;
            if (bs && i + ws + 1 < 4) r.w[i] |= w[i + ws + 1] << (64 - bs);
        }
        return r;
    }
};

// Carryless (polynomial) multiplication; inputs must keep the result below 256 bits.
inline Poly256 poly_mul(const Poly256& a, const Poly256& b) {
    Poly256 r;
    int db = b.degree();
    for (int i = 0; i <= db; ++i)
        if (b.bit(i)) r ^= a.shl(i);
    return r;
}

// Long division: returns quotient, leaves the remainder in a.
inline Poly256 poly_divmod(Poly256& a, const Poly256& b) {
    if (b.is_zero()) throw std::domain_error("poly_divmod: division by zero");
    Poly256 q;
    int db = b.degree();
    for (int da = a.degree(); da >= db; da = a.degree()) {
        q.set_bit(da - db);
        a ^= b.shl(da - db);
    }
    return q;
}

namespace detail {
// Lowest-weight irreducible polynomial of each degree m = 1..64
// (fewest terms, ties broken by smallest value). The x^m term is implicit;
// entries hold the lower-order terms so that m = 64 fits in one word.
inline constexpr uint64_t kIrreducibleLow[65] = {
    0,
    0x1ull,        0x3ull,        0x3ull,        0x3ull,        0x5ull,
    0x3ull,        0x3ull,        0x1bull,       0x3ull,        0x9ull,
    0x5ull,        0x9ull,        0x1bull,       0x21ull,       0x3ull,
    0x2bull,       0x9ull,        0x9ull,        0x27ull,       0x9ull,
    0x5ull,        0x3ull,        0x21ull,       0x1bull,       0x9ull,
    0x1bull,       0x27ull,       0x3ull,        0x5ull,        0x3ull,
    0x9ull,        0x8dull,       0x401ull,      0x81ull,       0x5ull,
    0x201ull,      0x53ull,       0x63ull,       0x11ull,       0x39ull,
    0x9ull,        0x81ull,       0x59ull,       0x21ull,       0x1bull,
    0x3ull,        0x21ull,       0x2dull,       0x201ull,      0x1dull,
    0x4bull,       0x9ull,        0x47ull,       0x201ull,      0x81ull,
    0x95ull,       0x11ull,       0x80001ull,    0x95ull,       0x3ull,
    0x27ull,       0x20000001ull, 0x3ull,        0x1bull,
};
}  // namespace detail

struct FieldSpec {
    int m = 0;
    uint64_t p_low = 0;   // irreducible p minus its leading x^m term
    uint64_t mu_bits = 0; // floor(x^(2m-2) / p), degree <= m-2

    Poly256 p_poly() const {
        Poly256 p = Poly256::from_u64(p_low);
        p.set_bit(m);
        return p;
    }
};

struct FieldElem {
    uint64_t bits = 0;
    int spec_m = 0;

    bool operator==(const FieldElem&) const = default;
};

inline uint64_t mask_m(int m) {
    return m == 64 ? ~uint64_t(0) : (uint64_t(1) << m) - 1;
}

inline FieldSpec field_spec(int m) {
    if (m < 1 || m > 64) throw std::domain_error("field_spec: need 1 <= m <= 64");
    FieldSpec s;
    s.m = m;
    s.p_low = detail::kIrreducibleLow[m];
    Poly256 h;
    h.set_bit(2 * m - 2);
    Poly256 q = poly_divmod(h, s.p_poly());
    s.mu_bits = q.w[0]; // degree <= m-2 < 64
    return s;
}

inline FieldElem make_elem(uint64_t bits, const FieldSpec& s) {
    if (bits & ~mask_m(s.m)) throw std::invalid_argument("make_elem: bits exceed field width");
    return FieldElem{bits, s.m};
}

inline void check_same_m(const FieldElem& a, const FieldElem& b) {
    if (a.spec_m != b.spec_m) throw std::invalid_argument("field width mismatch");
}

inline FieldElem gf_add(const FieldElem& a, const FieldElem& b) {
    check_same_m(a, b);
    return FieldElem{a.bits ^ b.bits, a.spec_m};
}

// a(x)*b(x) without reduction; result width <= 2m-1 bits.
inline Poly256 clmul(const FieldElem& a, const FieldElem& b) {
    check_same_m(a, b);
    return poly_mul(Poly256::from_u64(a.bits), Poly256::from_u64(b.bits));
}

// Barrett reduction of c' with deg c' <= 2m-2.
inline FieldElem barrett_reduce(const Poly256& cprime, const FieldSpec& s) {
    if (cprime.degree() > 2 * s.m - 2)
        throw std::invalid_argument("barrett_reduce: degree exceeds 2m-2");
    Poly256 q = poly_mul(cprime, Poly256::from_u64(s.mu_bits)).shr(2 * s.m - 2);
    Poly256 r = cprime ^ poly_mul(q, s.p_poly());
    return FieldElem{r.w[0] & mask_m(s.m), s.m};
}

inline FieldElem gf_mul(const FieldElem& a, const FieldElem& b, const FieldSpec& s) {
    if (a.spec_m != s.m || b.spec_m != s.m)
        throw std::invalid_argument("gf_mul: spec mismatch");
    return barrett_reduce(clmul(a, b), s);
}

inline FieldElem gf_one(const FieldSpec& s) { return FieldElem{1, s.m}; }

inline FieldElem gf_pow(FieldElem a, uint64_t e, const FieldSpec& s) {
    FieldElem r = gf_one(s);
    while (e) {
        if (e & 1) r = gf_mul(r, a, s);
        a = gf_mul(a, a, s);
        e >>= 1;
    }
    return r;
}

}  // namespace qdes
