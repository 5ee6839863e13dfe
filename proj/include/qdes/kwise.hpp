#pragma once
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qdes/gf2.hpp"
#include "qdes/rng.hpp"

namespace qdes {

/*
 k-wise independent function family f_a(x) = sum_{i<k} a_i x^i over GF(2^m).
 A uniformly random degree-(k-1) polynomial hits any k distinct
 (point, target) pairs with probability exactly 2^(-m k) (Vandermonde).
 Single-bit outputs are taken as the least-significant bit of the field
 value; the LSB of a k-wise independent field function is k-wise
 independent as a bit function.
*/

struct KWiseSeed {
    FieldSpec spec;
    int k = 0;
    std::vector<FieldElem> coeffs;  // a_0 .. a_{k-1}
};

// Draws k coefficients i.i.d. uniform; consumes exactly k*m bits.
inline KWiseSeed sample_seed(const FieldSpec& spec, int k, RngStream& rng) {
    if (k < 1) throw std::invalid_argument("sample_seed: k >= 1 required");
    KWiseSeed seed{spec, k, {}};
    seed.coeffs.reserve(k);
    for (int i = 0; i < k; ++i)
        seed.coeffs.push_back(FieldElem{rng.take_bits(spec.m), spec.m});
    return seed;
}

inline KWiseSeed make_seed(const FieldSpec& spec, const std::vector<uint64_t>& coeffs) {
    KWiseSeed seed{spec, int(coeffs.size()), {}};
    for (uint64_t c : coeffs) seed.coeffs.push_back(make_elem(c, spec));
    return seed;
}

// Evaluation with explicit repeated-squaring powers, coefficient products,
// then a binary-tree sum (mirrors the low-depth circuit schedule).
inline FieldElem eval_tree(const KWiseSeed& seed, const FieldElem& x) {
    const FieldSpec& s = seed.spec;
    int k = seed.k;
    std::vector<FieldElem> pw(k);  // pw[i] = x^i
    pw[0] = gf_one(s);
    if (k > 1) pw[1] = x;
    for (int i = 2; i < k; ++i) {
        if (i % 2 == 0) {
            FieldElem h = pw[i / 2];
            pw[i] = gf_mul(h, h, s);
        } else {
            pw[i] = gf_mul(pw[i - 1], x, s);
        }
    }
    std::vector<FieldElem> terms(k);
    for (int i = 0; i < k; ++i) terms[i] = gf_mul(seed.coeffs[i], pw[i], s);
    while (terms.size() > 1) {
        std::vector<FieldElem> next;
        for (size_t i = 0; i + 1 < terms.size(); i += 2)
            next.push_back(gf_add(terms[i], terms[i + 1]));
        if (terms.size() % 2) next.push_back(terms.back());
        terms = std::move(next);
    }
    return terms[0];
}

// Same value, computed by the sequential Horner loop.
inline FieldElem eval_horner(const KWiseSeed& seed, const FieldElem& x) {
    const FieldSpec& s = seed.spec;
    FieldElem result{0, s.m};
    FieldElem current_power = gf_one(s);
    for (int i = 0; i < seed.k; ++i) {
        result = gf_add(result, gf_mul(seed.coeffs[i], current_power, s));
        if (i + 1 < seed.k) current_power = gf_mul(current_power, x, s);
    }
    return result;
}

inline int phase_bit(const KWiseSeed& seed, const FieldElem& x) {
    return int(eval_tree(seed, x).bits & 1);
}

struct ExactProbability {
    uint64_t hits = 0;
    uint64_t total = 0;

    double value() const { return double(hits) / double(total); }
};

// Exhaustively counts seeds mapping points[i] -> targets[i] for all i.
// For |points| = t <= k distinct points the fraction is exactly 2^(-m t).
inline ExactProbability verify_kwise(const FieldSpec& spec, int k,
                                     const std::vector<uint64_t>& points,
                                     const std::vector<uint64_t>& targets) {
    if (points.size() != targets.size() || points.size() > size_t(k))
        throw std::invalid_argument("verify_kwise: need |points| = |targets| <= k");
    for (size_t i = 0; i < points.size(); ++i)
        for (size_t j = i + 1; j < points.size(); ++j)
            if (points[i] == points[j])
                throw std::invalid_argument("verify_kwise: points must be distinct");
    if (uint64_t(k) * spec.m > 24)
        throw std::invalid_argument("verify_kwise: seed space too large (k*m > 24)");

    uint64_t seeds = uint64_t(1) << (uint64_t(k) * spec.m);
    uint64_t q = uint64_t(1) << spec.m;
    ExactProbability out{0, seeds};
    KWiseSeed seed{spec, k, std::vector<FieldElem>(k, FieldElem{0, spec.m})};
    for (uint64_t enc = 0; enc < seeds; ++enc) {
        uint64_t e = enc;
        for (int i = 0; i < k; ++i) {
            seed.coeffs[i] = FieldElem{e % q, spec.m};
            e /= q;
        }
        bool ok = true;
        for (size_t i = 0; i < points.size() && ok; ++i)
            ok = eval_horner(seed, make_elem(points[i], spec)).bits == targets[i];
        if (ok) ++out.hits;
    }
    return out;
}

}  // namespace qdes
