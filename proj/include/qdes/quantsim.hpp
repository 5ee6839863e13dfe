#pragma once
#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "qdes/kwise.hpp"
#include "qdes/rng.hpp"

namespace qdes {

/*
 Dense statevector / operator engine on few qubits.

 Bit convention: qubit 0 is the most significant bit of a basis index, so a
 register of k n-qubit copies indexes as x_1 * 2^(n(k-1)) + ... + x_k and a
 contiguous patch a of size xi holds bits [a*xi, (a+1)*xi).
*/

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

struct StateVec {
    int n = 0;
    Vec amps;

    static StateVec zero_state(int n) {
        StateVec s{n, Vec::Zero(int64_t(1) << n)};
        s.amps(0) = 1.0;
        return s;
    }
    static StateVec plus_state(int n) {
        int64_t d = int64_t(1) << n;
        StateVec s{n, Vec::Constant(d, cplx(1.0 / std::sqrt(double(d)), 0.0))};
        return s;
    }
};

struct DenseOp {
    int dim = 0;
    Mat m;
};

struct PatchLayout {
    int n = 0;
    int xi = 0;

    PatchLayout(int n_, int xi_) : n(n_), xi(xi_) {
        if (xi < 1 || n % xi != 0) throw std::invalid_argument("PatchLayout: xi must divide n");
    }
    int patch_count() const { return n / xi; }
    // qubit indices of patch a, in MSB-first order
    std::vector<int> patch(int a) const {
        std::vector<int> q(xi);
        for (int i = 0; i < xi; ++i) q[i] = a * xi + i;
        return q;
    }
};

inline int bit_of(uint64_t index, int qubit, int n) { return int((index >> (n - 1 - qubit)) & 1); }

// value of the listed qubits (MSB-first) inside the index
inline uint64_t extract_bits(uint64_t index, const std::vector<int>& qubits, int n) {
    uint64_t v = 0;
    for (int q : qubits) v = (v << 1) | bit_of(index, q, n);
    return v;
}

inline uint64_t deposit_bits(uint64_t index, const std::vector<int>& qubits, int n, uint64_t v) {
    int w = int(qubits.size());
    for (int i = 0; i < w; ++i) {
        uint64_t mask = uint64_t(1) << (n - 1 - qubits[i]);
        if ((v >> (w - 1 - i)) & 1) index |= mask;
        else index &= ~mask;
    }
    return index;
}

// amp(x) *= (-1)^phase_bit(seed, x restricted to `qubits`)
inline void apply_phase_oracle(StateVec& s, const std::vector<int>& qubits, const KWiseSeed& seed) {
    if (int(qubits.size()) != seed.spec.m)
        throw std::invalid_argument("apply_phase_oracle: width mismatch");
    int64_t d = s.amps.size();
    // the oracle value depends only on the extracted bits; precompute the table
    std::vector<int> tab(size_t(1) << qubits.size());
    for (uint64_t v = 0; v < tab.size(); ++v)
        tab[v] = phase_bit(seed, FieldElem{v, seed.spec.m});
    for (int64_t x = 0; x < d; ++x)
        if (tab[extract_bits(uint64_t(x), qubits, s.n)]) s.amps(x) = -s.amps(x);
}

// |x_c, x_t> -> |x_c, x_t ^ h(x_c)> with h = eval_tree(seed, .)
inline void apply_shuffle(StateVec& s, const std::vector<int>& control,
                          const std::vector<int>& target, const KWiseSeed& seed) {
    if (control.size() != target.size() || int(control.size()) != seed.spec.m)
        throw std::invalid_argument("apply_shuffle: width mismatch");
    for (int c : control)
        for (int t : target)
            if (c == t) throw std::invalid_argument("apply_shuffle: overlapping patches");
    std::vector<uint64_t> h(size_t(1) << control.size());
    for (uint64_t v = 0; v < h.size(); ++v)
        h[v] = eval_tree(seed, FieldElem{v, seed.spec.m}).bits;
    int64_t d = s.amps.size();
    Vec out(d);
    for (int64_t x = 0; x < d; ++x) {
        uint64_t xc = extract_bits(uint64_t(x), control, s.n);
        uint64_t xt = extract_bits(uint64_t(x), target, s.n);
        out(deposit_bits(uint64_t(x), target, s.n, xt ^ h[xc])) = s.amps(x);
    }
    s.amps = std::move(out);
}

// exact evaluation of a truth-table phase circuit: amp(x) *= (-1)^f(bits)
inline void apply_phase_table(StateVec& s, const std::vector<int>& qubits,
                              const std::vector<int>& table) {
    for (int64_t x = 0; x < s.amps.size(); ++x)
        if (table[extract_bits(uint64_t(x), qubits, s.n)]) s.amps(x) = -s.amps(x);
}

inline void apply_shuffle_table(StateVec& s, const std::vector<int>& control,
                                const std::vector<int>& target,
                                const std::vector<uint64_t>& h) {
    int64_t d = s.amps.size();
    Vec out(d);
    for (int64_t x = 0; x < d; ++x) {
        uint64_t xc = extract_bits(uint64_t(x), control, s.n);
        uint64_t xt = extract_bits(uint64_t(x), target, s.n);
        out(deposit_bits(uint64_t(x), target, s.n, xt ^ h[xc])) = s.amps(x);
    }
    s.amps = std::move(out);
}

// apply a dense operator on the listed qubits (MSB-first block) of the state
inline void apply_op_on(StateVec& s, const std::vector<int>& qubits, const Mat& u) {
    int w = int(qubits.size());
    int64_t sub = int64_t(1) << w;
    if (u.rows() != sub) throw std::invalid_argument("apply_op_on: dimension mismatch");
    int64_t d = s.amps.size();
    Vec out = Vec::Zero(d);
    // group indices by the value of the complementary bits
    std::vector<int64_t> members(sub);
    std::vector<bool> seen(d, false);
    for (int64_t x = 0; x < d; ++x) {
        if (seen[x]) continue;
        uint64_t base = deposit_bits(uint64_t(x), qubits, s.n, 0);
        for (int64_t v = 0; v < sub; ++v) {
            members[v] = int64_t(deposit_bits(base, qubits, s.n, uint64_t(v)));
            seen[members[v]] = true;
        }
        for (int64_t r = 0; r < sub; ++r) {
            cplx acc = 0.0;
            for (int64_t c = 0; c < sub; ++c) acc += u(r, c) * s.amps(members[c]);
            out(members[r]) = acc;
        }
    }
    s.amps = std::move(out);
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat r(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

inline Mat kron_pow(const Mat& a, int k) {
    Mat r = Mat::Identity(1, 1);
    for (int i = 0; i < k; ++i) r = kron(r, a);
    return r;
}

inline DenseOp sample_haar_unitary(int dim, RngStream& rng) {
    if (dim < 1 || dim > 256) throw std::length_error("sample_haar_unitary: dim <= 256");
    Mat g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = cplx(rng.gaussian(), rng.gaussian());
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j) {
        cplx ph = r(j, j) / std::abs(r(j, j));
        q.col(j) *= ph;
    }
    return DenseOp{dim, std::move(q)};
}

inline Vec sample_haar_state(int dim, RngStream& rng) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = cplx(rng.gaussian(), rng.gaussian());
    v.normalize();
    return v;
}

// ---- Clifford sampling --------------------------------------------------

namespace detail {

// Symplectic vectors over GF(2)^(2w): bits 0..w-1 = X part, w..2w-1 = Z part.
inline int symp_form(uint32_t u, uint32_t v, int w) {
    uint32_t ux = u & ((1u << w) - 1), uz = u >> w;
    uint32_t vx = v & ((1u << w) - 1), vz = v >> w;
    return (__builtin_popcount(ux & vz) + __builtin_popcount(uz & vx)) & 1;
}

// Hermitian Pauli for (a|b): tensor of i^(a_j b_j) X^(a_j) Z^(b_j).
// Qubit j is bit (w-1-j)... we only need consistency, so use bit j of a,b
// for qubit (w-1-j), matching the MSB-first index convention.
inline Mat pauli_matrix(uint32_t v, int w) {
    uint32_t a = v & ((1u << w) - 1), b = v >> w;
    int64_t d = int64_t(1) << w;
    Mat p = Mat::Zero(d, d);
    cplx phase = std::pow(cplx(0, 1), __builtin_popcount(a & b) % 4);
    for (int64_t x = 0; x < d; ++x) {
        int sign = __builtin_popcountll(uint64_t(b) & uint64_t(x)) & 1;
        p(x ^ a, x) = phase * (sign ? -1.0 : 1.0);
    }
    return p;
}

}  // namespace detail

// Uniformly random Clifford on w qubits as a dense matrix (fixed global
// phase). A uniformly random symplectic matrix is drawn pair by pair:
// the image of X_i is uniform over the nonzero part of the symplectic
// complement of the pairs fixed so far, and the image of Z_i is uniform
// over the vectors of that complement pairing to 1 with it. Together with
// uniform sign bits this is exactly uniform over the Clifford group mod
// phase. The matrix is reconstructed column by column from the stabilizer
// state U|0..0> and the images of the X generators.
inline DenseOp sample_clifford(int w, RngStream& rng) {
    if (w < 1 || w > 5) throw std::length_error("sample_clifford: w <= 5");
    using detail::symp_form;
    int nb = 2 * w;
    std::vector<uint32_t> xs, zs;  // images of X_i, Z_i
    auto project = [&](uint32_t v) {
        // project onto the symplectic complement of the chosen pairs
        for (size_t j = 0; j < xs.size(); ++j) {
            if (symp_form(v, zs[j], w)) v ^= xs[j];
            if (symp_form(v, xs[j], w)) v ^= zs[j];
        }
        return v;
    };
    for (int i = 0; i < w; ++i) {
        uint32_t f;
        do {
            f = project(uint32_t(rng.bits(nb)));
        } while (f == 0);
        // a fixed complement vector pairing to 1 with f, for the coset trick
        uint32_t fix = 0;
        for (int b = 0; b < nb && !fix; ++b) {
            uint32_t cand = project(1u << b);
            if (symp_form(f, cand, w)) fix = cand;
        }
        uint32_t g = project(uint32_t(rng.bits(nb)));
        if (!symp_form(f, g, w)) g ^= fix;
        xs.push_back(f);
        zs.push_back(g);
    }
    std::vector<int> sign_x(w), sign_z(w);
    for (int i = 0; i < w; ++i) sign_x[i] = int(rng.bits(1));
    for (int i = 0; i < w; ++i) sign_z[i] = int(rng.bits(1));

    int64_t d = int64_t(1) << w;
    // |psi0> = U|0>: the state stabilized by the signed images of Z_i
    Vec psi = Vec::Zero(d);
    std::vector<Mat> stab(w), gx(w);
    for (int i = 0; i < w; ++i) {
        stab[i] = detail::pauli_matrix(zs[i], w) * (sign_z[i] ? -1.0 : 1.0);
        gx[i] = detail::pauli_matrix(xs[i], w) * (sign_x[i] ? -1.0 : 1.0);
    }
    for (int64_t e = 0; e < d; ++e) {
        Vec v = Vec::Zero(d);
        v(e) = 1.0;
        for (int i = 0; i < w; ++i) v = 0.5 * (v + stab[i] * v);
        if (v.norm() > 1e-8) {
            psi = v.normalized();
            break;
        }
    }
    Mat u(d, d);
    for (int64_t x = 0; x < d; ++x) {
        Vec col = psi;
        // generator X_i flips index bit i, so read x with the same labeling
        for (int i = 0; i < w; ++i)
            if ((x >> i) & 1) col = gx[i] * col;
        u.col(x) = col;
    }
    return DenseOp{int(d), std::move(u)};
}

// ---- permutation operators and distinct projectors ----------------------

// Operator permuting k n-qubit registers: register i moves to slot pi[i].
inline DenseOp permutation_op(const std::vector<int>& pi, int n, int k) {
    if (int(pi.size()) != k) throw std::invalid_argument("permutation_op: |pi| != k");
    if (n * k > 12) throw std::length_error("permutation_op: nk <= 12");
    int64_t d = int64_t(1) << (n * k);
    uint64_t mask = (uint64_t(1) << n) - 1;
    Mat p = Mat::Zero(d, d);
    for (int64_t x = 0; x < d; ++x) {
        uint64_t y = 0;
        for (int i = 0; i < k; ++i) {
            uint64_t xi = (uint64_t(x) >> (n * (k - 1 - i))) & mask;
            y |= xi << (n * (k - 1 - pi[i]));
        }
        p(y, x) = 1.0;
    }
    return p.rows() ? DenseOp{int(d), std::move(p)} : DenseOp{};
}

struct ProjectorResult {
    DenseOp op;
    bool empty_warning = false;  // k exceeded the number of distinct values
};

inline ProjectorResult distinct_projector(int n, int k) {
    if (n * k > 12) throw std::length_error("distinct_projector: nk <= 12");
    int64_t d = int64_t(1) << (n * k);
    uint64_t mask = (uint64_t(1) << n) - 1;
    ProjectorResult res;
    res.empty_warning = uint64_t(k) > (uint64_t(1) << n);
    res.op = DenseOp{int(d), Mat::Zero(d, d)};
    for (int64_t x = 0; x < d; ++x) {
        bool distinct = true;
        for (int i = 0; i < k && distinct; ++i)
            for (int j = i + 1; j < k && distinct; ++j)
                if (((uint64_t(x) >> (n * (k - 1 - i))) & mask) ==
                    ((uint64_t(x) >> (n * (k - 1 - j))) & mask))
                    distinct = false;
        if (distinct) res.op.m(x, x) = 1.0;
    }
    return res;
}

// distinctness within every patch across the k copies
inline ProjectorResult local_distinct_projector(const PatchLayout& layout, int k) {
    int n = layout.n;
    if (n * k > 12) throw std::length_error("local_distinct_projector: nk <= 12");
    int64_t d = int64_t(1) << (n * k);
    uint64_t rmask = (uint64_t(1) << n) - 1;
    uint64_t pmask = (uint64_t(1) << layout.xi) - 1;
    ProjectorResult res;
    res.empty_warning = uint64_t(k) > (uint64_t(1) << layout.xi);
    res.op = DenseOp{int(d), Mat::Zero(d, d)};
    int m = layout.patch_count();
    for (int64_t x = 0; x < d; ++x) {
        bool ok = true;
        for (int a = 0; a < m && ok; ++a) {
            for (int i = 0; i < k && ok; ++i)
                for (int j = i + 1; j < k && ok; ++j) {
                    uint64_t xi = (uint64_t(x) >> (n * (k - 1 - i))) & rmask;
                    uint64_t xj = (uint64_t(x) >> (n * (k - 1 - j))) & rmask;
                    if (((xi >> (n - (a + 1) * layout.xi)) & pmask) ==
                        ((xj >> (n - (a + 1) * layout.xi)) & pmask))
                        ok = false;
                }
        }
        if (ok) res.op.m(x, x) = 1.0;
    }
    return res;
}

// trace norm of a Hermitian operator (sum of |eigenvalues|)
inline double trace_norm_hermitian(const Mat& h) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

inline double trace_distance(const Mat& a, const Mat& b) { return trace_norm_hermitian(a - b); }

}  // namespace qdes
