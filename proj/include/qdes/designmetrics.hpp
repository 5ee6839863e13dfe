#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "qdes/ensembles.hpp"

namespace qdes {

/*
 Moment operators, design-error metrics, and exact verification of the
 operator identities behind the ensemble constructions.

 Haar k-fold twirls are computed without Weingarten tables: on span of the
 k! permutation operators, E_U[W X W^dag] (W = U^{tensor k}) is the oblique
 projection with Gram matrix G[s][t] = 2^(n * cycles(s^-1 t)), so
   Phi_H(X) = sum_{s,t} (G^-1)[t][s] tr(s^T X) t.
 G is invertible when 2^n >= k.
*/

inline constexpr uint64_t kDefaultMasterSeed = 0xC0FFEE;

enum class MomentMode { exact_enum, monte_carlo };

struct MomentEstimate {
    DenseOp op;
    MomentMode mode = MomentMode::exact_enum;
    uint64_t samples = 0;
    double std_error = 0.0;  // max per-entry standard error (monte_carlo only)
};

struct ErrorEstimate {
    double value = 0.0;
    double ci_low = 0.0, ci_high = 0.0;  // bootstrap 2.5%/97.5% (monte_carlo only)
    MomentMode mode = MomentMode::exact_enum;
    uint64_t samples = 0;
};

// ---- permutation bookkeeping ---------------------------------------------

namespace detail {

inline std::vector<std::vector<int>> all_perms(int k) {
    std::vector<int> p(k);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<int>> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

inline int perm_cycles(const std::vector<int>& p) {
    int k = int(p.size()), cycles = 0;
    std::vector<bool> seen(k, false);
    for (int i = 0; i < k; ++i) {
        if (seen[i]) continue;
        ++cycles;
        for (int j = i; !seen[j]; j = p[j]) seen[j] = true;
    }
    return cycles;
}

// coefficients (G^-1)[t][s] of the k-fold Haar twirl over permutation pairs
inline Mat twirl_gram_inverse(int n, int k, const std::vector<std::vector<int>>& perms) {
    if ((1 << n) < k) throw std::domain_error("haar twirl: need 2^n >= k");
    int f = int(perms.size());
    Mat g(f, f);
    for (int s = 0; s < f; ++s)
        for (int t = 0; t < f; ++t) {
            std::vector<int> inv(k), comp(k);
            for (int i = 0; i < k; ++i) inv[perms[s][i]] = i;
            for (int i = 0; i < k; ++i) comp[i] = inv[perms[t][i]];
            g(s, t) = std::pow(2.0, double(n) * perm_cycles(comp));
        }
    return g.inverse();
}

// registers are MSB-first n-bit digits; digit i of `a` moves to slot pi[i]
inline uint64_t digit_permute(uint64_t a, const std::vector<int>& pi, int n) {
    int k = int(pi.size());
    uint64_t mask = (uint64_t(1) << n) - 1, y = 0;
    for (int i = 0; i < k; ++i) {
        uint64_t digit = (a >> (uint64_t(k - 1 - i) * n)) & mask;
        y |= digit << (uint64_t(k - 1 - pi[i]) * n);
    }
    return y;
}

inline double falling_factorial(int d, int k) {
    double v = 1.0;
    for (int j = 0; j < k; ++j) v *= double(d - j);
    return v;
}

}  // namespace detail

// ---- state moments -------------------------------------------------------

// (2^n - 1)!/(2^n + k - 1)! * sum over permutation operators
inline DenseOp haar_state_moment(int n, int k) {
    if (n * k > 12 || k > 6) throw std::length_error("haar_state_moment: nk <= 12, k <= 6");
    int64_t dim = int64_t(1) << (n * k);
    Mat acc = Mat::Zero(dim, dim);
    for (auto& p : detail::all_perms(k)) acc += permutation_op(p, n, k).m;
    double norm = 1.0;
    for (int j = 0; j < k; ++j) norm /= double((int64_t(1) << n) + j);
    return DenseOp{int(dim), norm * acc};
}

namespace detail {

// k-fold tensor power of a vector
template <typename V>
V tensor_power(const V& v, int k) {
    V out = v;
    for (int j = 1; j < k; ++j) {
        V next(out.size() * v.size());
        for (int64_t a = 0; a < out.size(); ++a)
            for (int64_t b = 0; b < v.size(); ++b) next(a * v.size() + b) = out(a) * v(b);
        out = std::move(next);
    }
    return out;
}

// exact moment over an enumerable phase-variant randomness space; all
// states are real, so accumulate with chunked real rank-updates
inline Mat exact_phase_moment(const EnsembleSpec& spec, int k) {
    int bits = draw_space_bits(spec);
    if (bits > 26) throw std::length_error("state_moment: randomness space too large");
    uint64_t count = uint64_t(1) << bits;
    int64_t dim = int64_t(1) << spec.n;
    int64_t dimk = int64_t(1) << (spec.n * k);
    double amp = std::pow(2.0, -0.5 * spec.n);
    const int64_t chunk = 4096;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dimk, dimk);
    Eigen::MatrixXd cols(dimk, std::min<int64_t>(chunk, int64_t(count)));
    int64_t filled = 0;
    Eigen::VectorXd psi(dim);
    for (uint64_t idx = 0; idx < count; ++idx) {
        auto draw = draw_at(spec, idx);
        for (int64_t x = 0; x < dim; ++x) {
            int sign = 0;
            for (auto& op : draw.ops)
                sign ^= op.phase.eval(extract_bits(uint64_t(x), op.qubits, spec.n));
            psi(x) = sign ? -amp : amp;
        }
        cols.col(filled++) = tensor_power(psi, k);
        if (filled == cols.cols() || idx + 1 == count) {
            acc.noalias() += cols.leftCols(filled) * cols.leftCols(filled).transpose();
            filled = 0;
        }
    }
    return (acc / double(count)).cast<cplx>();
}

}  // namespace detail

inline MomentEstimate state_moment(const EnsembleSpec& spec, int k, MomentMode mode,
                                   uint64_t budget, uint64_t master_seed = kDefaultMasterSeed) {
    if (spec.n * k > 12) throw std::length_error("state_moment: (2^n)^k <= 4096");
    if (!is_state_variant(spec.variant))
        throw std::invalid_argument("state_moment: not a state-producing variant");
    if (mode == MomentMode::exact_enum) {
        if (spec.variant == Variant::Haar)
            return MomentEstimate{haar_state_moment(spec.n, k), MomentMode::exact_enum, 0, 0.0};
        return MomentEstimate{DenseOp{1 << (spec.n * k), detail::exact_phase_moment(spec, k)},
                              MomentMode::exact_enum, uint64_t(1) << draw_space_bits(spec), 0.0};
    }
    int64_t dimk = int64_t(1) << (spec.n * k);
    Mat acc = Mat::Zero(dimk, dimk);
    Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(dimk, dimk);
    for (uint64_t t = 0; t < budget; ++t) {
        auto psi = sample_state(spec, {master_seed, t});
        Vec v = detail::tensor_power(psi.amps, k);
        Mat outer = v * v.adjoint();
        acc += outer;
        sumsq += outer.cwiseAbs2();
    }
    acc /= double(budget);
    double max_se = 0.0;
    for (int64_t i = 0; i < dimk; ++i)
        for (int64_t j = 0; j < dimk; ++j) {
            double var = sumsq(i, j) / double(budget) - std::norm(acc(i, j));
            max_se = std::max(max_se, std::sqrt(std::max(0.0, var) / double(budget)));
        }
    return MomentEstimate{DenseOp{int(dimk), std::move(acc)}, MomentMode::monte_carlo, budget,
                          max_se};
}

namespace detail {

// bootstrap a trace-distance statistic from per-batch mean operators
inline ErrorEstimate bootstrap_trace_distance(const std::vector<Mat>& batches, const Mat& ref,
                                              uint64_t samples, RngStream rng,
                                              int resamples = 2000) {
    int nb = int(batches.size());
    Mat mean = Mat::Zero(ref.rows(), ref.cols());
    for (auto& b : batches) mean += b;
    mean /= double(nb);
    ErrorEstimate est;
    est.mode = MomentMode::monte_carlo;
    est.samples = samples;
    est.value = trace_distance(mean, ref);
    std::vector<double> stats(resamples);
    for (int r = 0; r < resamples; ++r) {
        Mat m = Mat::Zero(ref.rows(), ref.cols());
        for (int b = 0; b < nb; ++b) m += batches[rng.below(nb)];
        stats[r] = trace_distance(m / double(nb), ref);
    }
    std::sort(stats.begin(), stats.end());
    est.ci_low = stats[size_t(0.025 * resamples)];
    est.ci_high = stats[size_t(std::min(resamples - 1, int(0.975 * resamples)))];
    return est;
}

}  // namespace detail

inline ErrorEstimate state_design_error(const EnsembleSpec& spec, int k, MomentMode mode,
                                        uint64_t budget,
                                        uint64_t master_seed = kDefaultMasterSeed,
                                        int resamples = 2000) {
    Mat ref = haar_state_moment(spec.n, k).m;
    if (mode == MomentMode::exact_enum) {
        auto m = state_moment(spec, k, mode, budget, master_seed);
        return ErrorEstimate{trace_distance(m.op.m, ref), 0, 0, MomentMode::exact_enum,
                             m.samples};
    }
    int nb = int(std::min<uint64_t>(100, budget));
    std::vector<Mat> batches(nb, Mat::Zero(ref.rows(), ref.cols()));
    std::vector<uint64_t> counts(nb, 0);
    for (uint64_t t = 0; t < budget; ++t) {
        auto psi = sample_state(spec, {master_seed, t});
        Vec v = detail::tensor_power(psi.amps, k);
        batches[t % nb] += v * v.adjoint();
        ++counts[t % nb];
    }
    for (int b = 0; b < nb; ++b) batches[b] /= double(counts[b]);
    return detail::bootstrap_trace_distance(batches, ref, budget,
                                            RngStream(master_seed, "bootstrap"), resamples);
}

// ---- Choi-state surrogate for the diamond norm ---------------------------

// Choi state of the k-fold Haar twirl: (1/2^nk) sum (G^-1)[t][s] t (x) s
inline Mat haar_choi(int n, int k) {
    if (n * k > 6) throw std::length_error("haar_choi: nk <= 6");
    int64_t dim = int64_t(1) << (n * k);
    auto perms = detail::all_perms(k);
    Mat w = detail::twirl_gram_inverse(n, k, perms);
    Mat acc = Mat::Zero(dim * dim, dim * dim);
    for (size_t s = 0; s < perms.size(); ++s)
        for (size_t t = 0; t < perms.size(); ++t)
            acc += w(t, s) * kron(permutation_op(perms[t], n, k).m,
                                  permutation_op(perms[s], n, k).m);
    return acc / double(dim);
}

// Choi state of conjugation by a fixed k-copy operator a
inline Mat choi_state_for(const Mat& a) {
    int64_t dim = a.rows();
    Vec v(dim * dim);
    for (int64_t x = 0; x < dim; ++x)
        for (int64_t y = 0; y < dim; ++y) v(x * dim + y) = a(x, y) / std::sqrt(double(dim));
    return v * v.adjoint();
}

inline MomentEstimate unitary_moment_choi(const EnsembleSpec& spec, int k, MomentMode mode,
                                          uint64_t budget,
                                          uint64_t master_seed = kDefaultMasterSeed) {
    if (spec.n * k > 6) throw std::length_error("unitary_moment_choi: nk <= 6");
    int64_t dim = int64_t(1) << (spec.n * k);
    if (spec.variant == Variant::Haar && mode == MomentMode::exact_enum)
        return MomentEstimate{DenseOp{int(dim * dim), haar_choi(spec.n, k)},
                              MomentMode::exact_enum, 0, 0.0};
    Mat acc = Mat::Zero(dim * dim, dim * dim);
    uint64_t count;
    if (mode == MomentMode::exact_enum) {
        count = uint64_t(1) << draw_space_bits(spec);
        if (draw_space_bits(spec) > 20) throw std::length_error("choi: space too large");
        for (uint64_t idx = 0; idx < count; ++idx) {
            Mat u = unitary_from_draw(spec, draw_at(spec, idx)).m;
            acc += choi_state_for(kron_pow(u, k));
        }
    } else {
        count = budget;
        for (uint64_t t = 0; t < budget; ++t) {
            Mat u = sample_unitary(spec, {master_seed, t}).m;
            acc += choi_state_for(kron_pow(u, k));
        }
    }
    return MomentEstimate{DenseOp{int(dim * dim), acc / double(count)}, mode, count, 0.0};
}

inline ErrorEstimate choi_error(const EnsembleSpec& spec, int k, MomentMode mode,
                                uint64_t budget, uint64_t master_seed = kDefaultMasterSeed,
                                int resamples = 2000) {
    Mat ref = haar_choi(spec.n, k);
    if (mode == MomentMode::exact_enum) {
        auto m = unitary_moment_choi(spec, k, mode, budget, master_seed);
        return ErrorEstimate{trace_distance(m.op.m, ref), 0, 0, MomentMode::exact_enum,
                             m.samples};
    }
    int64_t dim = int64_t(1) << (spec.n * k);
    int nb = int(std::min<uint64_t>(100, budget));
    std::vector<Mat> batches(nb, Mat::Zero(dim * dim, dim * dim));
    std::vector<uint64_t> counts(nb, 0);
    for (uint64_t t = 0; t < budget; ++t) {
        Mat u = sample_unitary(spec, {master_seed, t}).m;
        batches[t % nb] += choi_state_for(kron_pow(u, k));
        ++counts[t % nb];
    }
    for (int b = 0; b < nb; ++b) batches[b] /= double(counts[b]);
    return detail::bootstrap_trace_distance(batches, ref, budget,
                                            RngStream(master_seed, "bootstrap"), resamples);
}

// ---- moment superoperators (column-major vec convention) -----------------

inline Mat haar_superop(int n, int k) {
    if (n * k > 6) throw std::length_error("haar_superop: nk <= 6");
    auto perms = detail::all_perms(k);
    Mat w = detail::twirl_gram_inverse(n, k, perms);
    int64_t dim = int64_t(1) << (n * k);
    Mat acc = Mat::Zero(dim * dim, dim * dim);
    for (size_t s = 0; s < perms.size(); ++s) {
        Vec vs = permutation_op(perms[s], n, k).m.reshaped();
        for (size_t t = 0; t < perms.size(); ++t) {
            Vec vt = permutation_op(perms[t], n, k).m.reshaped();
            acc += w(t, s) * (vt * vs.transpose());
        }
    }
    return acc;
}

// superoperator of conjugation by a fixed k-copy operator
inline Mat superop_for(const Mat& a) { return kron(a.conjugate(), a); }

inline Mat moment_superop(const EnsembleSpec& spec, int k, MomentMode mode, uint64_t budget,
                          uint64_t master_seed = kDefaultMasterSeed) {
    if (spec.n * k > 6) throw std::length_error("moment_superop: nk <= 6");
    if (mode == MomentMode::exact_enum) {
        if (spec.variant == Variant::Haar) return haar_superop(spec.n, k);
        if (spec.variant == Variant::Composed) {
            Mat acc;  // Composed multiplies factors left-to-right
            for (size_t i = 0; i < spec.factors.size(); ++i) {
                Mat s = moment_superop(spec.factors[i], k, mode, budget, master_seed);
                acc = i == 0 ? s : Mat(acc * s);
            }
            return acc;
        }
        uint64_t count = uint64_t(1) << draw_space_bits(spec);
        if (draw_space_bits(spec) > 20) throw std::length_error("superop: space too large");
        int64_t dim = int64_t(1) << (spec.n * k);
        Mat acc = Mat::Zero(dim * dim, dim * dim);
        for (uint64_t idx = 0; idx < count; ++idx)
            acc += superop_for(kron_pow(unitary_from_draw(spec, draw_at(spec, idx)).m, k));
        return acc / double(count);
    }
    int64_t dim = int64_t(1) << (spec.n * k);
    Mat acc = Mat::Zero(dim * dim, dim * dim);
    for (uint64_t t = 0; t < budget; ++t)
        acc += superop_for(kron_pow(sample_unitary(spec, {master_seed, t}).m, k));
    return acc / double(budget);
}

// ---- sequential-query experiments ----------------------------------------

struct ExperimentPlan {
    int k = 1;
    int m_anc = 0;
    std::vector<Mat> interleavers;  // k+1 unitaries on n + m_anc qubits
};

inline ExperimentPlan random_plan(int n, int k, int m_anc, RngStream& rng) {
    ExperimentPlan plan{k, m_anc, {}};
    for (int j = 0; j <= k; ++j)
        plan.interleavers.push_back(sample_haar_unitary(1 << (n + m_anc), rng).m);
    return plan;
}

inline ExperimentPlan identity_plan(int n, int k, int m_anc = 0) {
    int64_t d = int64_t(1) << (n + m_anc);
    return ExperimentPlan{k, m_anc, std::vector<Mat>(k + 1, Mat::Identity(d, d))};
}

inline void check_plan(const ExperimentPlan& plan, int n) {
    if (n + plan.m_anc > 10) throw std::length_error("experiment: n + m_anc <= 10");
    if (int(plan.interleavers.size()) != plan.k + 1)
        throw std::invalid_argument("experiment: need k+1 interleavers");
    for (auto& w : plan.interleavers) {
        if (w.rows() != int64_t(1) << (n + plan.m_anc))
            throw std::invalid_argument("experiment: interleaver dimension mismatch");
        if ((w.adjoint() * w - Mat::Identity(w.rows(), w.cols())).norm() > 1e-8)
            throw std::invalid_argument("experiment: interleaver not unitary");
    }
}

// W_{k+1} (Q_k (x) I) W_k ... (Q_1 (x) I) W_1 |0>; queries act on the n
// leading qubits and need not be unitary
inline Vec sequential_query_vector(const ExperimentPlan& plan, int n,
                                   const std::vector<Mat>& queries) {
    int total = n + plan.m_anc;
    StateVec s = StateVec::zero_state(total);
    std::vector<int> sys(n);
    std::iota(sys.begin(), sys.end(), 0);
    for (int j = 0; j < plan.k; ++j) {
        s.amps = plan.interleavers[j] * s.amps;
        apply_op_on(s, sys, queries[j]);
    }
    s.amps = plan.interleavers[plan.k] * s.amps;
    return s.amps;
}

// exact Haar-averaged output state: substitute matrix units for the joint
// k-copy query operator and contract against the twirl's Gram inverse
inline Mat haar_experiment_state(const ExperimentPlan& plan, int n) {
    check_plan(plan, n);
    int k = plan.k;
    if (n * k > 6) throw std::length_error("haar_experiment_state: nk <= 6");
    int64_t d = int64_t(1) << n, dk = int64_t(1) << (n * k);
    int64_t dout = int64_t(1) << (n + plan.m_anc);
    uint64_t mask = uint64_t(d) - 1;
    auto digit = [&](uint64_t a, int j) { return (a >> (uint64_t(k - 1 - j) * n)) & mask; };
    // T[a*dk+b] = experiment vector with query j replaced by |a_j><b_j|
    Mat tu(dout, dk * dk);
    std::vector<Mat> queries(k);
    for (int64_t a = 0; a < dk; ++a)
        for (int64_t b = 0; b < dk; ++b) {
            for (int j = 0; j < k; ++j) {
                queries[j] = Mat::Zero(d, d);
                queries[j](digit(a, j), digit(b, j)) = 1.0;
            }
            tu.col(a * dk + b) = sequential_query_vector(plan, n, queries);
        }
    auto perms = detail::all_perms(k);
    Mat w = detail::twirl_gram_inverse(n, k, perms);
    Mat rho = Mat::Zero(dout, dout);
    for (size_t si = 0; si < perms.size(); ++si)
        for (size_t ti = 0; ti < perms.size(); ++ti) {
            Mat r = Mat::Zero(dout, dout);
            for (int64_t a = 0; a < dk; ++a)
                for (int64_t b = 0; b < dk; ++b) {
                    int64_t ap = detail::digit_permute(a, perms[ti], n);
                    int64_t bp = detail::digit_permute(b, perms[si], n);
                    r.noalias() += tu.col(ap * dk + bp) * tu.col(a * dk + b).adjoint();
                }
            rho += w(ti, si) * r;
        }
    return rho;
}

struct MeasurableResult {
    double value = 0.0;
    double ci_low = 0.0, ci_high = 0.0;
    uint64_t samples = 0;
};

// exact average over an explicit unitary list (e.g. the identity-only ensemble)
inline MeasurableResult measurable_experiment_unitaries(const std::vector<Mat>& us,
                                                        const ExperimentPlan& plan, int n) {
    check_plan(plan, n);
    int64_t dout = int64_t(1) << (n + plan.m_anc);
    Mat rho = Mat::Zero(dout, dout);
    for (auto& u : us) {
        Vec phi = sequential_query_vector(plan, n, std::vector<Mat>(plan.k, u));
        rho += phi * phi.adjoint();
    }
    rho /= double(us.size());
    double v = trace_distance(rho, haar_experiment_state(plan, n));
    return MeasurableResult{v, v, v, us.size()};
}

inline MeasurableResult measurable_experiment(const EnsembleSpec& spec,
                                              const ExperimentPlan& plan, uint64_t trials,
                                              uint64_t master_seed = kDefaultMasterSeed,
                                              int resamples = 2000) {
    int n = spec.n;
    check_plan(plan, n);
    Mat ref = haar_experiment_state(plan, n);
    int nb = int(std::min<uint64_t>(100, trials));
    std::vector<Mat> batches(nb, Mat::Zero(ref.rows(), ref.cols()));
    std::vector<uint64_t> counts(nb, 0);
    for (uint64_t t = 0; t < trials; ++t) {
        Mat u = sample_unitary(spec, {master_seed, t}).m;
        Vec phi = sequential_query_vector(plan, n, std::vector<Mat>(plan.k, u));
        batches[t % nb] += phi * phi.adjoint();
        ++counts[t % nb];
    }
    for (int b = 0; b < nb; ++b) batches[b] /= double(counts[b]);
    auto est = detail::bootstrap_trace_distance(batches, ref, trials,
                                                RngStream(master_seed, "bootstrap"), resamples);
    return MeasurableResult{est.value, est.ci_low, est.ci_high, trials};
}

// ---- verification of the proof identities --------------------------------

// number of distinct k-tuples: 2^n (2^n - 1) ... (2^n - k + 1)
inline double distinct_tuple_count(int n, int k) {
    return detail::falling_factorial(1 << n, k);
}

// B'(P_dist (x) P_dist) = (2^{nk}/D) B (P_dist (x) P_dist), exhaustively
// over all binary phase functions and all basis permutations
inline double verify_pfc_fact1(int n, int k) {
    if (n > 2 || k > 2) throw std::length_error("verify_pfc_fact1: n <= 2, k <= 2");
    int64_t d = int64_t(1) << n, dk = int64_t(1) << (n * k);
    Mat bprime = Mat::Zero(dk * dk, dk * dk);
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    uint64_t fcount = uint64_t(1) << d;
    uint64_t total = 0;
    do {
        for (uint64_t f = 0; f < fcount; ++f) {
            Mat m1 = Mat::Zero(d, d);  // PF: |b> -> (-1)^f(b) |p(b)>
            for (int64_t b = 0; b < d; ++b) m1(perm[b], b) = ((f >> b) & 1) ? -1.0 : 1.0;
            Mat mk = kron_pow(m1, k);
            Vec w(dk * dk);
            double amp = std::pow(2.0, -0.5 * n * k);
            for (int64_t x = 0; x < dk; ++x)
                for (int64_t y = 0; y < dk; ++y)
                    w(x * dk + y) = amp * std::conj(mk(y, x));  // (M^dag)_{xy}
            bprime.noalias() += w * w.adjoint();
            ++total;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    bprime *= std::pow(4.0, double(n) * k) / double(total);
    Mat b = Mat::Zero(dk * dk, dk * dk);
    for (auto& p : detail::all_perms(k)) {
        Mat pm = permutation_op(p, n, k).m;
        b += kron(pm, pm);
    }
    Mat proj = kron(distinct_projector(n, k).op.m, distinct_projector(n, k).op.m);
    double dd = distinct_tuple_count(n, k);
    Mat resid = (bprime - (double(dk) / dd) * b) * proj;
    return resid.cwiseAbs().maxCoeff();
}

enum class Fact2Source { clifford, haar };

struct Fact2Result {
    double value = 0.0;  // sup-norm estimate of I - E[C^dag(x)k P_dist C(x)k]
    double sigma = 0.0;  // bootstrap std error
    double bound = 0.0;  // k^2/2^n
    uint64_t samples = 0;
};

inline Fact2Result verify_fact2(int n, int k, Fact2Source source, uint64_t trials,
                                uint64_t master_seed = kDefaultMasterSeed) {
    if (n * k > 8) throw std::length_error("verify_fact2: nk <= 8");
    int64_t dk = int64_t(1) << (n * k);
    Mat proj = distinct_projector(n, k).op.m;
    RngStream rng(master_seed, source == Fact2Source::clifford ? "fact2/clifford"
                                                               : "fact2/haar");
    int nb = int(std::min<uint64_t>(50, trials));
    std::vector<Mat> batches(nb, Mat::Zero(dk, dk));
    std::vector<uint64_t> counts(nb, 0);
    for (uint64_t t = 0; t < trials; ++t) {
        Mat c = source == Fact2Source::clifford ? sample_clifford(n, rng).m
                                                : sample_haar_unitary(1 << n, rng).m;
        Mat ck = kron_pow(c, k);
        batches[t % nb] += ck.adjoint() * proj * ck;
        ++counts[t % nb];
    }
    for (int b = 0; b < nb; ++b) batches[b] /= double(counts[b]);
    Mat id = Mat::Identity(dk, dk);
    auto supnorm = [&](const Mat& mean) {
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * ((id - mean) + (id - mean).adjoint()));
        return es.eigenvalues().cwiseAbs().maxCoeff();
    };
    Mat mean = Mat::Zero(dk, dk);
    for (auto& b : batches) mean += b;
    mean /= double(nb);
    Fact2Result res;
    res.value = supnorm(mean);
    res.bound = double(k) * k / double(int64_t(1) << n);
    res.samples = trials;
    auto brng = RngStream(master_seed, "fact2/bootstrap");
    int resamples = 2000;
    double s1 = 0, s2 = 0;
    for (int r = 0; r < resamples; ++r) {
        Mat m = Mat::Zero(dk, dk);
        for (int b = 0; b < nb; ++b) m += batches[brng.below(nb)];
        double v = supnorm(m / double(nb));
        s1 += v;
        s2 += v * v;
    }
    res.sigma = std::sqrt(std::max(0.0, s2 / resamples - (s1 / resamples) * (s1 / resamples)));
    return res;
}

namespace detail {

// parallelized experiment state: X_j holds the j-th query input, Y_j the
// EPR half deferring that query, S the live system register
struct ParallelExperiment {
    int n = 0, k = 0, m_anc = 0;
    StateVec psi;  // on X (nk) + Y (nk) + S (n + m_anc), qubit 0 leading

    std::vector<int> x_qubits() const {
        std::vector<int> q(n * k);
        std::iota(q.begin(), q.end(), 0);
        return q;
    }
    std::vector<int> y_qubits() const {
        std::vector<int> q(n * k);
        std::iota(q.begin(), q.end(), n * k);
        return q;
    }
};

inline void swap_qubit_pair(StateVec& s, int q1, int q2) {
    int64_t b1 = int64_t(1) << (s.n - 1 - q1), b2 = int64_t(1) << (s.n - 1 - q2);
    for (int64_t x = 0; x < s.amps.size(); ++x)
        if ((x & b1) && !(x & b2)) std::swap(s.amps(x), s.amps((x & ~b1) | b2));
}

inline ParallelExperiment build_parallel_experiment(const ExperimentPlan& plan, int n) {
    check_plan(plan, n);
    int k = plan.k, total = 2 * n * k + n + plan.m_anc;
    if (total > 14) throw std::length_error("parallel experiment: register too large");
    ParallelExperiment pe{n, k, plan.m_anc, StateVec::zero_state(total)};
    int s0 = 2 * n * k;  // system main block starts here
    std::vector<int> sys(n + plan.m_anc);
    std::iota(sys.begin(), sys.end(), s0);
    Mat h2(2, 2), cx(4, 4);
    h2 << 1, 1, 1, -1;
    h2 /= std::sqrt(2.0);
    cx << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0;
    for (int j = 0; j < k; ++j) {
        apply_op_on(pe.psi, sys, plan.interleavers[j]);
        for (int q = 0; q < n; ++q) swap_qubit_pair(pe.psi, s0 + q, j * n + q);
        for (int q = 0; q < n; ++q) {
            int yq = n * k + j * n + q;
            apply_op_on(pe.psi, {yq}, h2);
            apply_op_on(pe.psi, {yq, s0 + q}, cx);
        }
    }
    apply_op_on(pe.psi, sys, plan.interleavers[k]);
    return pe;
}

// 2^{nk} (<Bell pairs|_{XY} (x) I)(A_X (x) I)|psi>; equals the sequential
// experiment vector when A = U^{(x)k}
inline Vec bell_contract(const ParallelExperiment& pe, const Mat& a) {
    StateVec s = pe.psi;
    apply_op_on(s, pe.x_qubits(), a);
    int64_t dk = int64_t(1) << (pe.n * pe.k);
    int64_t dout = int64_t(1) << (pe.n + pe.m_anc);
    double factor = std::pow(2.0, 0.5 * pe.n * pe.k);
    Vec out = Vec::Zero(dout);
    for (int64_t x = 0; x < dk; ++x) {
        int64_t base = (x * dk + x) * dout;
        for (int64_t sidx = 0; sidx < dout; ++sidx) out(sidx) += s.amps(base + sidx);
    }
    return factor * out;
}

}  // namespace detail

// tr(B (1 (x) P_dist) |Psi><Psi|) over the parallelized experiment state;
// plan-independent and equal to D/2^{nk}
inline double verify_fact5(int n, int k, const ExperimentPlan& plan) {
    if (n * k > 6) throw std::length_error("verify_fact5: nk <= 6");
    auto pe = detail::build_parallel_experiment(plan, n);
    Mat proj = distinct_projector(n, k).op.m;
    cplx acc = 0.0;
    for (auto& p : detail::all_perms(k)) {
        Mat pm = permutation_op(p, n, k).m;
        StateVec v = pe.psi;
        apply_op_on(v, pe.y_qubits(), Mat(pm * proj));
        apply_op_on(v, pe.x_qubits(), pm);
        acc += pe.psi.amps.dot(v.amps);
    }
    return acc.real();
}

// P_loc chi_blocked P_loc = P_loc chi_global P_loc, by exact enumeration
inline double verify_blocked_phase_identity(int n, int xi, int k) {
    EnsembleSpec blocked;
    blocked.variant = Variant::BlockedPhase;
    blocked.n = n;
    blocked.xi = xi;
    EnsembleSpec global;
    global.variant = Variant::RandomPhase;
    global.n = n;
    Mat chi_b = state_moment(blocked, k, MomentMode::exact_enum, 0).op.m;
    Mat chi_f = state_moment(global, k, MomentMode::exact_enum, 0).op.m;
    Mat proj = local_distinct_projector(PatchLayout(n, xi), k).op.m;
    Mat resid = proj * (chi_b - chi_f) * proj;
    return resid.cwiseAbs().maxCoeff();
}

// additive-to-relative conversion factor 2^{nk} C(2^n + k - 1, k)
inline double relative_error_factor(int n, int k) {
    // C(2^n + k - 1, k) as an ascending product, which stays integral
    __int128 binom = 1;
    const __int128 limit = __int128(1) << 100;
    for (int j = 1; j <= k; ++j) {
        binom = binom * ((int64_t(1) << n) - 1 + j) / j;
        if (binom > limit) throw std::overflow_error("relative_error_factor: binomial overflow");
    }
    if (n * k >= 62) throw std::overflow_error("relative_error_factor: 2^{nk} overflows");
    __int128 factor = binom * (__int128(1) << (n * k));
    if (factor > (__int128(1) << 120)) throw std::overflow_error("relative_error_factor overflow");
    return std::ldexp(double(binom), n * k);
}

inline double relative_error_bound(double eps_add, int n, int k) {
    if (eps_add < 0) throw std::invalid_argument("relative_error_bound: eps >= 0");
    return relative_error_factor(n, k) * eps_add;
}

}  // namespace qdes
