// Acceptance gate: one line per criterion, nonzero exit if any fail.
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "qdes/designmetrics.hpp"
#include "qdes/lbtest.hpp"
#include "qdes/revcircuit.hpp"

using namespace qdes;

namespace {

int g_failures = 0;

void run(int index, const std::string& name, const std::function<bool(std::string&)>& fn) {
    std::string detail;
    auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d. %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", index, name.c_str(), secs,
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

// independent field oracle: schoolbook carryless multiply + long division
uint64_t oracle_mul(uint64_t a, uint64_t b, int m, uint64_t p_low) {
    unsigned __int128 prod = 0;
    for (int i = 0; i < m; ++i)
        if ((b >> i) & 1) prod ^= (unsigned __int128)a << i;
    unsigned __int128 poly = ((unsigned __int128)1 << m) | p_low;
    for (int s = m - 2; s >= 0; --s)
        if ((prod >> (m + s)) & 1) prod ^= poly << s;
    return uint64_t(prod) & ((m == 64) ? ~uint64_t(0) : ((uint64_t(1) << m) - 1));
}

bool crit1(std::string& detail) {
    uint64_t mismatches = 0;
    for (int m = 1; m <= 4; ++m) {
        auto s = field_spec(m);
        for (uint64_t a = 0; a < (uint64_t(1) << m); ++a)
            for (uint64_t b = 0; b < (uint64_t(1) << m); ++b)
                if (gf_mul(make_elem(a, s), make_elem(b, s), s).bits !=
                    oracle_mul(a, b, m, s.p_low))
                    ++mismatches;
    }
    RngStream rng(1, "crit1");
    for (int m : {8, 16, 32}) {
        auto s = field_spec(m);
        for (int t = 0; t < 100000; ++t) {
            uint64_t a = rng.bits(m), b = rng.bits(m);
            if (gf_mul(make_elem(a, s), make_elem(b, s), s).bits !=
                oracle_mul(a, b, m, s.p_low))
                ++mismatches;
        }
    }
    detail = "mismatches=" + std::to_string(mismatches);
    return mismatches == 0;
}

bool crit2(std::string& detail) {
    uint64_t checks = 0, failures = 0;
    for (int m = 1; m <= 3; ++m) {
        auto s = field_spec(m);
        uint64_t d = uint64_t(1) << m;
        for (int k = 1; k <= 2; ++k) {
            for (int t = 1; t <= k; ++t) {
                // every distinct point set of size t, every target tuple
                std::vector<uint64_t> pts(t), tgt(t);
                std::function<void(int, uint64_t)> loop_pts = [&](int i, uint64_t start) {
                    if (i == t) {
                        std::function<void(int)> loop_tgt = [&](int j) {
                            if (j == t) {
                                auto prob = verify_kwise(s, k, pts, tgt);
                                uint64_t scale = 1;
                                for (int q = 0; q < t; ++q) scale *= d;
                                ++checks;
                                if (prob.hits * scale != prob.total) ++failures;
                                return;
                            }
                            for (tgt[j] = 0; tgt[j] < d; ++tgt[j]) loop_tgt(j + 1);
                        };
                        loop_tgt(0);
                        return;
                    }
                    for (pts[i] = start; pts[i] < d; ++pts[i]) loop_pts(i + 1, pts[i] + 1);
                };
                loop_pts(0, 0);
            }
        }
    }
    detail = "checks=" + std::to_string(checks) + " failures=" + std::to_string(failures);
    return checks > 0 && failures == 0;
}

bool crit3(std::string& detail) {
    uint64_t mismatches = 0;
    struct Case { int m, k; };
    for (auto [m, k] : {Case{3, 2}, Case{4, 3}}) {
        auto s = field_spec(m);
        for (auto mode : {KWiseCircuitMode::low_depth, KWiseCircuitMode::low_ancilla}) {
            auto c = build_kwise_circuit(s, k, mode);
            RngStream rng(2, "crit3/" + std::to_string(m) + "/" + std::to_string(int(mode)));
            for (int t = 0; t < 1000; ++t) {
                std::vector<uint64_t> coeffs(k);
                for (auto& cf : coeffs) cf = rng.bits(m);
                uint64_t x = rng.bits(m);
                if (run_circuit_outputs(c, x, coeffs, m) !=
                    eval_tree(make_seed(s, coeffs), make_elem(x, s)).bits)
                    ++mismatches;
            }
        }
    }
    detail = "mismatches=" + std::to_string(mismatches);
    return mismatches == 0;
}

bool crit4(std::string& detail) {
    EnsembleSpec spec;
    spec.variant = Variant::RandomPhase;
    spec.n = 4;
    auto a = state_design_error(spec, 2, MomentMode::exact_enum, 0);
    auto b = state_design_error(spec, 2, MomentMode::exact_enum, 0);
    std::ostringstream os;
    os.precision(17);
    os << "value=" << a.value << " bound=1.0 reproducible=" << (a.value == b.value);
    detail = os.str();
    return a.value <= 1.0 && a.value == b.value;
}

bool crit5(std::string& detail) {
    int k = 2;
    EnsembleSpec exact, kwise;
    exact.variant = kwise.variant = Variant::BlockedPhase;
    exact.n = kwise.n = 2;
    exact.xi = kwise.xi = 1;
    kwise.independence = {IndependenceMode::kwise, 2 * k};
    Mat a = state_moment(exact, k, MomentMode::exact_enum, 0).op.m;
    Mat b = state_moment(kwise, k, MomentMode::exact_enum, 0).op.m;
    double resid = (a - b).cwiseAbs().maxCoeff();
    std::ostringstream os;
    os << "residual=" << resid;
    detail = os.str();
    return resid < 1e-10;
}

bool crit6(std::string& detail) {
    double r1 = verify_blocked_phase_identity(2, 1, 2);
    double r2 = verify_blocked_phase_identity(4, 1, 2);
    std::ostringstream os;
    os << "residual(2,1,2)=" << r1 << " residual(4,1,2)=" << r2;
    detail = os.str();
    return r1 < 1e-10 && r2 < 1e-10;
}

bool crit7(std::string& detail) {
    double r1 = verify_pfc_fact1(1, 2);
    double r2 = verify_pfc_fact1(2, 2);
    std::ostringstream os;
    os << "residual(1,2)=" << r1 << " residual(2,2)=" << r2;
    detail = os.str();
    return r1 < 1e-10 && r2 < 1e-10;
}

bool crit8(std::string& detail) {
    auto res = verify_fact2(2, 2, Fact2Source::clifford, 10000, 8);
    std::ostringstream os;
    os << "value=" << res.value << " bound=" << res.bound << " sigma=" << res.sigma;
    detail = os.str();
    return res.value <= res.bound + 3 * res.sigma;
}

bool crit9(std::string& detail) {
    RngStream rng(9, "crit9");
    double worst = 0.0;
    struct Case { int n, k; };
    for (auto [n, k] : {Case{1, 2}, Case{2, 2}}) {
        double want = distinct_tuple_count(n, k) / std::pow(2.0, n * k);
        for (int t = 0; t < 20; ++t) {
            auto plan = random_plan(n, k, t % 2, rng);
            worst = std::max(worst, std::abs(verify_fact5(n, k, plan) - want));
        }
    }
    std::ostringstream os;
    os << "max_deviation=" << worst;
    detail = os.str();
    return worst < 1e-10;
}

bool crit10(std::string& detail) {
    RngStream rng(10, "crit10");
    auto plan1 = random_plan(2, 1, 0, rng);
    auto ident = measurable_experiment_unitaries({Mat::Identity(4, 4)}, plan1, 2);
    EnsembleSpec lrfc;
    lrfc.variant = Variant::LRFC;
    lrfc.n = 2;
    auto plan2 = random_plan(2, 2, 0, rng);
    auto res = measurable_experiment(lrfc, plan2, 10000, 10, 200);
    std::ostringstream os;
    os << "identity=" << ident.value << " lrfc=" << res.value;
    detail = os.str();
    return ident.value >= 1.0 && res.value <= 0.3;
}

bool crit11(std::string& detail) {
    CollisionConfig cfg{PatchLayout(8, 1), 100000, std::nullopt, false};
    auto haar = run_collision_test(CollisionSource::haar(), cfg, {11, 0});
    auto prod = run_collision_test(CollisionSource::product_state(), cfg, {11, 1});
    bool rates_ok = true;
    double corr = 4.0 / 256.0;
    for (int a = 0; a < haar.M; ++a) {
        rates_ok = rates_ok && haar.per_patch_rates[a] >= 0.5 - 3 * haar.per_patch_stderr[a] &&
                   haar.per_patch_rates[a] <= 0.5 + corr + 3 * haar.per_patch_stderr[a];
        rates_ok = rates_ok &&
                   std::abs(prod.per_patch_rates[a] - 2.0 / 3.0) <= 3 * prod.per_patch_stderr[a];
    }
    double advantage = prod.accept_rate - haar.accept_rate;
    std::ostringstream os;
    os << "haar_rate~" << haar.per_patch_rates[0] << " prod_rate~" << prod.per_patch_rates[0]
       << " advantage=" << advantage;
    detail = os.str();
    return rates_ok && advantage >= 0.3;
}

bool crit12(std::string& detail) {
    RngStream rng(12, "crit12");
    int checked = 0, failures = 0;
    while (checked < 10) {
        int n = 6 + int(rng.below(30));
        int k = 1 + int(rng.below(4));
        double eps = 0.05 + rng.uniform() * 0.3;
        if (double(k) * k / eps > std::pow(2.0, n) / 3.0) continue;
        ++checked;
        int xi_want = std::max(int(std::ceil(std::log2(3.0 * n * k * k / eps) - 1e-12)), 3);
        auto bp = design_resource_calculator(n, k, eps, DesignFamily::blocked_phase,
                                             KWiseCircuitMode::low_depth);
        auto bl = design_resource_calculator(n, k, eps, DesignFamily::blocked_lrfc,
                                             KWiseCircuitMode::low_depth);
        if (bp.xi != xi_want || bl.xi != xi_want) ++failures;
        if (bp.randomness_bits != 2 * n * k) ++failures;
        if (bl.randomness_bits != 3 * n * k + (5 * n + 1) / 2) ++failures;
    }
    detail = "checked=10 failures=" + std::to_string(failures);
    return failures == 0;
}

bool crit13(std::string& detail) {
    EnsembleSpec a, b;
    a.variant = Variant::RandomPhase;
    a.n = 1;
    b.variant = Variant::Haar;
    b.n = 1;
    auto ab = compose({a, b});
    Mat sa = moment_superop(a, 2, MomentMode::exact_enum, 0);
    Mat sb = moment_superop(b, 2, MomentMode::exact_enum, 0);
    Mat sab = moment_superop(ab, 2, MomentMode::exact_enum, 0);
    Mat sh = haar_superop(1, 2);
    double r1 = (sab - sa * sb).cwiseAbs().maxCoeff();
    double r2 = (sh * sa - sh).cwiseAbs().maxCoeff();
    double r3 = (sh * sb - sh).cwiseAbs().maxCoeff();
    std::ostringstream os;
    os << "product_residual=" << r1 << " absorption_residuals=" << std::max(r2, r3);
    detail = os.str();
    return r1 < 1e-10 && r2 < 1e-10 && r3 < 1e-10;
}

}  // namespace

int main() {
    run(1, "field multiplication vs long-division oracle", crit1);
    run(2, "exact k-wise independence probabilities", crit2);
    run(3, "reversible circuit matches polynomial evaluation", crit3);
    run(4, "global phase-state design error bound, n=4 k=2", crit4);
    run(5, "derandomized moment equals exact-function moment", crit5);
    run(6, "projected blocked-phase moment identity", crit6);
    run(7, "projected permuted-phase moment identity", crit7);
    run(8, "twirled distinctness projector bound", crit8);
    run(9, "post-selected overlap plan independence", crit9);
    run(10, "measurable error separates identity from LRFC", crit10);
    run(11, "two-copy collision distinguisher", crit11);
    run(12, "resource calculator formulas", crit12);
    run(13, "composition algebra of moment superoperators", crit13);
    if (g_failures) std::printf("%d criteria FAILED\n", g_failures);
    else std::printf("all 13 criteria passed\n");
    return g_failures == 0 ? 0 : 1;
}
