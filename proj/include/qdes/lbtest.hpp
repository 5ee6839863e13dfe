#pragma once
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "qdes/ensembles.hpp"

namespace qdes {

/*
 Two-copy collision distinguisher: measure two independent outcomes of the
 same sampled state in a fresh random product basis, set z_a = 1 when the
 outcomes agree on every bit of patch a, and accept when the collision
 count exceeds a likelihood-ratio threshold.

 Thresholds: between Bernoulli(q_high)^M and Bernoulli(q_low)^M collision
 vectors the likelihood ratio is monotone in the collision count, and the
 two crossing points
   threshold_star   = M ln(q_high/q_low) / Dnm        (in the disagreement count)
   collision cut    = M ln((1-q_low)/(1-q_high)) / Dnm (in the collision count)
 with Dnm = ln(q_high/q_low) + ln((1-q_low)/(1-q_high)) sum to M. The accept
 rule uses the collision-count cut, which follows from the generic
 likelihood ratio regardless of which exponent convention labels z_a = 1.
*/

struct CollisionSource {
    enum class Kind { ensemble, haar, product_state, basis_state, synthetic };
    Kind kind = Kind::haar;
    EnsembleSpec spec;            // ensemble
    uint64_t basis_index = 0;     // basis_state
    std::vector<double> q;        // synthetic: per-patch collision probabilities

    static CollisionSource haar() { return {}; }
    static CollisionSource ensemble(const EnsembleSpec& s) {
        CollisionSource c;
        c.kind = Kind::ensemble;
        c.spec = s;
        return c;
    }
    static CollisionSource product_state() {
        CollisionSource c;
        c.kind = Kind::product_state;
        return c;
    }
    static CollisionSource basis_state(uint64_t index) {
        CollisionSource c;
        c.kind = Kind::basis_state;
        c.basis_index = index;
        return c;
    }
    static CollisionSource synthetic(std::vector<double> probs) {
        CollisionSource c;
        c.kind = Kind::synthetic;
        c.q = std::move(probs);
        return c;
    }
};

struct CollisionConfig {
    PatchLayout layout{1, 1};
    uint64_t trials = 1;
    std::optional<double> s_star;  // collision-count cut; auto-derived when absent
    bool fixed_computational_basis = false;
};

struct CollisionReport {
    int n = 0, L = 0, M = 0;
    uint64_t trials = 0;
    std::vector<double> per_patch_rates, per_patch_stderr;
    Eigen::MatrixXd pair_rates;  // empirical E[z_a z_b]
    double mean_collisions = 0.0;
    double s_star = 0.0;
    double accept_rate = 0.0;
    std::vector<uint64_t> collision_histogram;  // counts of per-trial collision totals
};

inline double threshold_star(int L, int M, double q_low, double q_high) {
    (void)L;
    if (!(0.0 < q_low && q_low < q_high && q_high < 1.0))
        throw std::invalid_argument("threshold_star: need 0 < q_low < q_high < 1");
    double num = std::log(q_high / q_low);
    double den = num + std::log((1.0 - q_low) / (1.0 - q_high));
    return double(M) * num / den;
}

inline double collision_accept_cut(int M, double q_low, double q_high) {
    return double(M) - threshold_star(1, M, q_low, q_high);
}

// per-patch collision probability references at patch size L
inline double haar_patch_rate(int L) { return std::pow(0.5, L); }
inline double product_patch_rate(int L) {
    return std::pow(0.5, L) * (1.0 + std::pow(3.0, -L));
}

// P(sum of independent Bernoulli(q_a) > cut), by exact convolution
inline double exact_accept_rate(const std::vector<double>& q, double cut) {
    std::vector<double> dist{1.0};
    for (double p : q) {
        std::vector<double> next(dist.size() + 1, 0.0);
        for (size_t c = 0; c < dist.size(); ++c) {
            next[c] += dist[c] * (1.0 - p);
            next[c + 1] += dist[c] * p;
        }
        dist = std::move(next);
    }
    double acc = 0.0;
    for (size_t c = 0; c < dist.size(); ++c)
        if (double(c) > cut) acc += dist[c];
    return acc;
}

// Eq. (EH inequality) lower bound with M = n/L^4 patches
inline double predicted_advantage(int n, int L) {
    if (L < 1) throw std::invalid_argument("predicted_advantage: L >= 1");
    double m = double(n) / std::pow(double(L), 4);
    return m / std::pow(36.0, L) / std::log(2.0) - 2.0 * std::pow(0.5, n);
}

namespace detail {

inline uint64_t sample_outcome(const Vec& amps, RngStream& rng) {
    double u = rng.uniform(), c = 0.0;
    for (int64_t i = 0; i < amps.size(); ++i) {
        c += std::norm(amps(i));
        if (u < c) return uint64_t(i);
    }
    return uint64_t(amps.size() - 1);
}

}  // namespace detail

inline CollisionReport run_collision_test(const CollisionSource& source,
                                          const CollisionConfig& cfg,
                                          const SampleHandle& handle) {
    int n = cfg.layout.n, L = cfg.layout.xi, M = cfg.layout.patch_count();
    if (n > 16) throw std::length_error("run_collision_test: n <= 16");
    if (cfg.trials < 1) throw std::invalid_argument("run_collision_test: trials >= 1");
    if (source.kind == CollisionSource::Kind::synthetic && int(source.q.size()) != M)
        throw std::invalid_argument("run_collision_test: synthetic q must have M entries");
    double cut = cfg.s_star ? *cfg.s_star
                            : collision_accept_cut(M, haar_patch_rate(L), product_patch_rate(L));
    if (cut < 0.0 || cut > double(M))
        throw std::invalid_argument("run_collision_test: s_star in [0, M]");

    CollisionReport rep;
    rep.n = n;
    rep.L = L;
    rep.M = M;
    rep.trials = cfg.trials;
    rep.s_star = cut;
    rep.per_patch_rates.assign(M, 0.0);
    rep.per_patch_stderr.assign(M, 0.0);
    rep.pair_rates = Eigen::MatrixXd::Zero(M, M);
    rep.collision_histogram.assign(M + 1, 0);

    std::vector<uint64_t> patch_mask(M, 0);
    for (int a = 0; a < M; ++a)
        for (int qb : cfg.layout.patch(a)) patch_mask[a] |= uint64_t(1) << (n - 1 - qb);

    RngStream root = RngStream(handle.master_seed, "lbtest").child("draw", handle.draw_index);
    uint64_t accepted = 0;
    std::vector<int> z(M);
    for (uint64_t t = 0; t < cfg.trials; ++t) {
        RngStream trial = root.child("trial", t);
        if (source.kind == CollisionSource::Kind::synthetic) {
            for (int a = 0; a < M; ++a) z[a] = trial.uniform() < source.q[a] ? 1 : 0;
        } else {
            StateVec psi = StateVec::zero_state(n);
            switch (source.kind) {
                case CollisionSource::Kind::ensemble:
                    psi = sample_state(source.spec,
                                       {handle.master_seed, (handle.draw_index << 24) | t});
                    break;
                case CollisionSource::Kind::haar:
                    psi.amps = sample_haar_state(int64_t(1) << n, trial);
                    break;
                case CollisionSource::Kind::product_state: {
                    Vec v(1);
                    v(0) = 1.0;
                    for (int i = 0; i < n; ++i) {
                        Vec q1 = sample_haar_state(2, trial);
                        Vec next(v.size() * 2);
                        for (int64_t a = 0; a < v.size(); ++a) {
                            next(2 * a) = v(a) * q1(0);
                            next(2 * a + 1) = v(a) * q1(1);
                        }
                        v = std::move(next);
                    }
                    psi.amps = std::move(v);
                    break;
                }
                case CollisionSource::Kind::basis_state:
                    psi.amps(0) = 0.0;
                    psi.amps(source.basis_index) = 1.0;
                    break;
                default: break;
            }
            if (!cfg.fixed_computational_basis)
                for (int i = 0; i < n; ++i) {
                    auto u = sample_haar_unitary(2, trial);
                    apply_op_on(psi, {i}, Mat(u.m.adjoint()));
                }
            uint64_t x = detail::sample_outcome(psi.amps, trial);
            uint64_t y = detail::sample_outcome(psi.amps, trial);
            for (int a = 0; a < M; ++a)
                z[a] = ((x ^ y) & patch_mask[a]) == 0 ? 1 : 0;
        }
        int total = 0;
        for (int a = 0; a < M; ++a) {
            total += z[a];
            rep.per_patch_rates[a] += z[a];
            for (int b = 0; b < M; ++b) rep.pair_rates(a, b) += z[a] * z[b];
        }
        ++rep.collision_histogram[total];
        rep.mean_collisions += total;
        if (double(total) > cut) ++accepted;
    }
    double nt = double(cfg.trials);
    for (int a = 0; a < M; ++a) {
        rep.per_patch_rates[a] /= nt;
        rep.per_patch_stderr[a] =
            std::sqrt(rep.per_patch_rates[a] * (1.0 - rep.per_patch_rates[a]) / nt);
    }
    rep.pair_rates /= nt;
    rep.mean_collisions /= nt;
    rep.accept_rate = double(accepted) / nt;
    return rep;
}

struct AdvantageReport {
    CollisionReport source, haar;
    double advantage = 0.0;
    double std_error = 0.0;  // binomial propagation over both accept rates
};

inline AdvantageReport run_distinguisher(const CollisionSource& source,
                                         const CollisionConfig& cfg,
                                         const SampleHandle& handle) {
    AdvantageReport adv;
    adv.source = run_collision_test(source, cfg, handle);
    adv.haar = run_collision_test(CollisionSource::haar(), cfg,
                                  {handle.master_seed, handle.draw_index + 1});
    adv.advantage = adv.source.accept_rate - adv.haar.accept_rate;
    auto var = [&](const CollisionReport& r) {
        return r.accept_rate * (1.0 - r.accept_rate) / double(r.trials);
    };
    adv.std_error = std::sqrt(var(adv.source) + var(adv.haar));
    return adv;
}

inline nlohmann::json collision_report_json(const CollisionReport& r) {
    return nlohmann::json{{"n", r.n},
                          {"L", r.L},
                          {"M", r.M},
                          {"trials", r.trials},
                          {"per_patch_rates", r.per_patch_rates},
                          {"per_patch_stderr", r.per_patch_stderr},
                          {"mean_collisions", r.mean_collisions},
                          {"s_star", r.s_star},
                          {"accept_rate", r.accept_rate},
                          {"collision_histogram", r.collision_histogram}};
}

inline std::string collision_report_csv(const CollisionReport& r) {
    std::ostringstream out;
    out << "patch_index,rate,stderr\r\n";
    for (int a = 0; a < r.M; ++a)
        out << a << "," << r.per_patch_rates[a] << "," << r.per_patch_stderr[a] << "\r\n";
    return out.str();
}

}  // namespace qdes
