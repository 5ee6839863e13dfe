// qdes: command-line frontend for the design-construction library.
// Every run resolves one subcommand, derives all randomness from a single
// master seed through named child streams, and writes one JSON/CSV report
// embedding the resolved configuration. Exit codes: 0 success, 2 precondition
// violation (including bad flags), 3 resource-limit violation.
#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "qdes/designmetrics.hpp"
#include "qdes/lbtest.hpp"
#include "qdes/revcircuit.hpp"

using nlohmann::json;
using namespace qdes;

namespace {

struct Options {
    int n = 2, k = 2, xi = 1, p = 1;
    double eps = 0.1;
    std::string family = "randomphase", mode = "exact";
    uint64_t trials = 1000;
    uint64_t seed = kDefaultMasterSeed;
    std::string out, format = "json";
};

EnsembleSpec spec_from_family(const Options& o) {
    EnsembleSpec s;
    s.n = o.n;
    s.xi = o.xi;
    s.p = o.p;
    if (o.family == "randomphase") s.variant = Variant::RandomPhase;
    else if (o.family == "blockedphase") s.variant = Variant::BlockedPhase;
    else if (o.family == "pfc") s.variant = Variant::PFC;
    else if (o.family == "lrfc") s.variant = Variant::LRFC;
    else if (o.family == "blockedlrfc") s.variant = Variant::BlockedLRFC;
    else if (o.family == "amplified") s.variant = Variant::AmplifiedBlockedLRFC;
    else if (o.family == "haar") s.variant = Variant::Haar;
    else throw std::invalid_argument("unknown ensemble family: " + o.family);
    if (s.variant == Variant::RandomPhase || s.variant == Variant::PFC ||
        s.variant == Variant::LRFC || s.variant == Variant::Haar)
        s.xi = 0;
    return s;
}

MomentMode moment_mode(const Options& o) {
    if (o.mode == "exact") return MomentMode::exact_enum;
    if (o.mode == "mc") return MomentMode::monte_carlo;
    throw std::invalid_argument("mode must be exact or mc");
}

json make_report(const std::string& subcommand, const json& params, const Options& o,
                 json results) {
    return json{{"config",
                 {{"subcommand", subcommand},
                  {"params", params},
                  {"master_seed", o.seed},
                  {"out", o.out},
                  {"format", o.format}}},
                {"results", std::move(results)}};
}

json run_field_selftest(const Options& o) {
    uint64_t checks = 0, failures = 0;
    RngStream rng(o.seed, "field/selftest");
    for (int m : {2, 3, 4, 8, 16, 32, 64}) {
        auto s = field_spec(m);
        for (uint64_t t = 0; t < o.trials; ++t) {
            auto a = make_elem(rng.bits(m), s), b = make_elem(rng.bits(m), s),
                 c = make_elem(rng.bits(m), s);
            if (gf_mul(gf_mul(a, b, s), c, s) != gf_mul(a, gf_mul(b, c, s), s)) ++failures;
            if (gf_mul(a, b, s) != gf_mul(b, a, s)) ++failures;
            if (gf_mul(a, gf_one(s), s) != a) ++failures;
            if (gf_mul(a, gf_add(b, c), s) !=
                gf_add(gf_mul(a, b, s), gf_mul(a, c, s)))
                ++failures;
            if (a.bits != 0) {
                auto inv = gf_pow(a, (~uint64_t(0) >> (64 - m)) - 1, s);
                if (gf_mul(a, inv, s) != gf_one(s)) ++failures;
            }
            checks += 5;
        }
    }
    return json{{"checks", checks}, {"failures", failures}};
}

json run_kwise_verify(const Options& o) {
    int m = o.n, k = o.k;
    auto s = field_spec(m);
    if (m * k > 20) throw std::length_error("kwise verify: m*k <= 20");
    RngStream rng(o.seed, "kwise/verify");
    uint64_t checks = 0, failures = 0;
    uint64_t dim = uint64_t(1) << m;
    for (uint64_t t = 0; t < std::min<uint64_t>(o.trials, 200); ++t) {
        std::vector<uint64_t> pts, targets;
        while (int(pts.size()) < k) {
            uint64_t x = rng.bits(m);
            bool dup = false;
            for (auto p : pts) dup = dup || p == x;
            if (!dup) pts.push_back(x);
        }
        for (int i = 0; i < k; ++i) targets.push_back(rng.bits(m));
        auto prob = verify_kwise(s, k, pts, targets);
        ++checks;
        // exact equality hits / total == 2^{-m k}
        uint64_t scale = 1;
        for (int i = 0; i < k; ++i) scale *= dim;
        if (prob.hits * scale != prob.total) ++failures;
    }
    return json{{"checks", checks}, {"failures", failures}, {"field_bits", m}, {"k", k}};
}

json run_circuit_build(const Options& o) {
    auto mode = o.mode == "low_ancilla" ? KWiseCircuitMode::low_ancilla
                                        : KWiseCircuitMode::low_depth;
    if (o.mode != "low_ancilla" && o.mode != "low_depth")
        throw std::invalid_argument("circuit build: mode must be low_depth or low_ancilla");
    auto c = build_kwise_circuit(field_spec(o.n), o.k, mode);
    return json{{"depth", c.depth()},
                {"width", c.wire_count()},
                {"ancilla", c.count_role(WireRole::ancilla)},
                {"gate_count", c.gate_count()},
                {"circuit_text", serialize_circuit(c)}};
}

json run_resources_table(const Options& o) {
    json rows = json::array();
    struct Row {
        DesignFamily family;
        KWiseCircuitMode mode;
        const char* name;
        const char* mode_name;
    };
    for (auto& r : {Row{DesignFamily::blocked_phase, KWiseCircuitMode::low_depth,
                        "blocked_phase", "low_depth"},
                    Row{DesignFamily::blocked_phase, KWiseCircuitMode::low_ancilla,
                        "blocked_phase", "low_ancilla"},
                    Row{DesignFamily::blocked_lrfc, KWiseCircuitMode::low_depth,
                        "blocked_lrfc", "low_depth"},
                    Row{DesignFamily::blocked_lrfc, KWiseCircuitMode::low_ancilla,
                        "blocked_lrfc", "low_ancilla"}}) {
        auto rep = design_resource_calculator(o.n, o.k, o.eps, r.family, r.mode);
        rows.push_back(json{{"family", r.name},
                            {"mode", r.mode_name},
                            {"xi", rep.xi},
                            {"depth", rep.depth},
                            {"width", rep.width},
                            {"ancilla", rep.ancilla},
                            {"gate_count", rep.gate_count},
                            {"randomness_bits", rep.randomness_bits}});
    }
    return json{{"rows", rows}};
}

json run_state_error(const Options& o) {
    auto est = state_design_error(spec_from_family(o), o.k, moment_mode(o), o.trials, o.seed);
    return json{{"value", est.value},
                {"ci_low", est.ci_low},
                {"ci_high", est.ci_high},
                {"mode", o.mode},
                {"samples", est.samples}};
}

json run_choi_error(const Options& o) {
    auto est = choi_error(spec_from_family(o), o.k, moment_mode(o), o.trials, o.seed);
    return json{{"value", est.value},
                {"ci_low", est.ci_low},
                {"ci_high", est.ci_high},
                {"mode", o.mode},
                {"samples", est.samples}};
}

json run_measurable(const Options& o) {
    RngStream prng(o.seed, "measurable/plan");
    auto plan = random_plan(o.n, o.k, 0, prng);
    if (o.family == "identity") {
        int64_t d = int64_t(1) << o.n;
        auto res = measurable_experiment_unitaries({Mat::Identity(d, d)}, plan, o.n);
        return json{{"value", res.value}, {"samples", res.samples}, {"exact", true}};
    }
    auto res = measurable_experiment(spec_from_family(o), plan, o.trials, o.seed);
    return json{{"value", res.value},
                {"ci_low", res.ci_low},
                {"ci_high", res.ci_high},
                {"samples", res.samples},
                {"exact", false}};
}

json run_verify_fact1(const Options& o) {
    return json{{"residual", verify_pfc_fact1(o.n, o.k)}};
}

json run_verify_fact2(const Options& o) {
    auto src = o.mode == "haar" ? Fact2Source::haar : Fact2Source::clifford;
    auto res = verify_fact2(o.n, o.k, src, o.trials, o.seed);
    return json{{"value", res.value},
                {"sigma", res.sigma},
                {"bound", res.bound},
                {"samples", res.samples},
                {"within_bound", res.value <= res.bound + 3 * res.sigma}};
}

json run_verify_fact5(const Options& o) {
    RngStream rng(o.seed, "fact5/plans");
    double want = distinct_tuple_count(o.n, o.k) / std::pow(2.0, o.n * o.k);
    double worst = 0.0;
    uint64_t plans = std::max<uint64_t>(1, std::min<uint64_t>(o.trials, 100));
    for (uint64_t t = 0; t < plans; ++t) {
        auto plan = random_plan(o.n, o.k, int(t % 2), rng);
        worst = std::max(worst, std::abs(verify_fact5(o.n, o.k, plan) - want));
    }
    return json{{"expected", want}, {"max_deviation", worst}, {"plans", plans}};
}

json run_verify_blocked_identity(const Options& o) {
    return json{{"residual", verify_blocked_phase_identity(o.n, o.xi, o.k)}};
}

json run_distinguish(const Options& o, std::string* csv_out) {
    CollisionSource src;
    if (o.family == "product") src = CollisionSource::product_state();
    else if (o.family == "haar") src = CollisionSource::haar();
    else if (o.family == "basis") src = CollisionSource::basis_state(0);
    else src = CollisionSource::ensemble(spec_from_family(o));
    CollisionConfig cfg{PatchLayout(o.n, o.xi), o.trials, std::nullopt, false};
    auto adv = run_distinguisher(src, cfg, {o.seed, 0});
    if (csv_out) *csv_out = collision_report_csv(adv.source);
    return json{{"source", collision_report_json(adv.source)},
                {"haar", collision_report_json(adv.haar)},
                {"advantage", adv.advantage},
                {"std_error", adv.std_error},
                {"predicted_advantage", predicted_advantage(o.n, o.xi)}};
}

void emit(const std::string& text, const Options& o) {
    if (o.out.empty()) {
        std::cout << text << "\n";
    } else {
        std::ofstream f(o.out);
        if (!f) throw std::invalid_argument("cannot open output file: " + o.out);
        f << text << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"low-depth design ensemble toolkit"};
    app.require_subcommand(1);
    Options o;
    std::string subname;
    std::function<json()> runner;
    std::string csv_payload;
    bool csv_capable = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", o.seed, "master seed (all randomness derives from it)");
        cmd->add_option("--out", o.out, "output file (default: stdout)");
        cmd->add_option("--format", o.format, "json or csv")
            ->check(CLI::IsMember({"json", "csv"}));
    };
    auto arm = [&](CLI::App* cmd, const std::string& name, std::function<json()> fn) {
        add_common(cmd);
        cmd->callback([&, name, fn] {
            subname = name;
            runner = fn;
        });
    };

    auto* field = app.add_subcommand("field", "finite-field operations");
    auto* selftest = field->add_subcommand("selftest", "check field laws on random inputs");
    selftest->add_option("--trials", o.trials, "trials per field size");
    arm(selftest, "field selftest", [&] { return run_field_selftest(o); });

    auto* kw = app.add_subcommand("kwise", "hash-family operations");
    auto* kv = kw->add_subcommand("verify", "exact k-wise independence probabilities");
    kv->add_option("--n", o.n, "field size in bits");
    kv->add_option("--k", o.k, "independence parameter");
    kv->add_option("--trials", o.trials, "number of point sets");
    arm(kv, "kwise verify", [&] { return run_kwise_verify(o); });

    auto* circuit = app.add_subcommand("circuit", "reversible-circuit operations");
    auto* cb = circuit->add_subcommand("build", "build a seeded-evaluation circuit");
    cb->add_option("--n", o.n, "field size in bits");
    cb->add_option("--k", o.k, "coefficient count");
    cb->add_option("--mode", o.mode, "low_depth or low_ancilla");
    arm(cb, "circuit build", [&] {
        if (o.mode == "exact") o.mode = "low_depth";
        return run_circuit_build(o);
    });

    auto* resources = app.add_subcommand("resources", "resource accounting");
    auto* rt = resources->add_subcommand("table", "family comparison table");
    rt->add_option("--n", o.n, "qubit count");
    rt->add_option("--k", o.k, "design order");
    rt->add_option("--eps", o.eps, "target error");
    arm(rt, "resources table", [&] { return run_resources_table(o); });

    auto* se = app.add_subcommand("state-error", "trace distance of a state moment to Haar");
    se->add_option("--family", o.family, "ensemble family");
    se->add_option("--n", o.n, "qubit count");
    se->add_option("--k", o.k, "moment order");
    se->add_option("--xi", o.xi, "patch size");
    se->add_option("--mode", o.mode, "exact or mc");
    se->add_option("--trials", o.trials, "Monte-Carlo draws");
    arm(se, "state-error", [&] { return run_state_error(o); });

    auto* ce = app.add_subcommand("choi-error", "Choi-state distance to the Haar twirl");
    ce->add_option("--family", o.family, "ensemble family");
    ce->add_option("--n", o.n, "qubit count");
    ce->add_option("--k", o.k, "moment order");
    ce->add_option("--xi", o.xi, "patch size");
    ce->add_option("--p", o.p, "amplification rounds");
    ce->add_option("--mode", o.mode, "exact or mc");
    ce->add_option("--trials", o.trials, "Monte-Carlo draws");
    arm(ce, "choi-error", [&] { return run_choi_error(o); });

    auto* me = app.add_subcommand("measurable", "sequential-query distinguishing advantage");
    me->add_option("--family", o.family, "ensemble family or 'identity'");
    me->add_option("--n", o.n, "qubit count");
    me->add_option("--k", o.k, "query count");
    me->add_option("--xi", o.xi, "patch size");
    me->add_option("--trials", o.trials, "Monte-Carlo draws");
    arm(me, "measurable", [&] { return run_measurable(o); });

    auto* verify = app.add_subcommand("verify", "exact identities behind the constructions");
    auto* f1 = verify->add_subcommand("fact1", "projected permuted-phase moment identity");
    f1->add_option("--n", o.n, "qubit count");
    f1->add_option("--k", o.k, "copy count");
    arm(f1, "verify fact1", [&] { return run_verify_fact1(o); });
    auto* f2 = verify->add_subcommand("fact2", "twirled distinctness projector bound");
    f2->add_option("--n", o.n, "qubit count");
    f2->add_option("--k", o.k, "copy count");
    f2->add_option("--mode", o.mode, "clifford or haar");
    f2->add_option("--trials", o.trials, "Monte-Carlo draws");
    arm(f2, "verify fact2", [&] {
        if (o.mode == "exact") o.mode = "clifford";
        return run_verify_fact2(o);
    });
    auto* f5 = verify->add_subcommand("fact5", "post-selected overlap plan independence");
    f5->add_option("--n", o.n, "qubit count");
    f5->add_option("--k", o.k, "query count");
    f5->add_option("--trials", o.trials, "number of random plans");
    arm(f5, "verify fact5", [&] { return run_verify_fact5(o); });
    auto* bi = verify->add_subcommand("blocked-identity", "projected blocked-phase moment");
    bi->add_option("--n", o.n, "qubit count");
    bi->add_option("--xi", o.xi, "patch size");
    bi->add_option("--k", o.k, "copy count");
    arm(bi, "verify blocked-identity", [&] { return run_verify_blocked_identity(o); });

    auto* di = app.add_subcommand("distinguish", "two-copy collision distinguisher");
    di->add_option("--family", o.family, "state source: product, haar, basis, or ensemble");
    di->add_option("--n", o.n, "qubit count");
    di->add_option("--xi", o.xi, "patch size L");
    di->add_option("--trials", o.trials, "measurement trials");
    add_common(di);
    di->callback([&] {
        subname = "distinguish";
        csv_capable = true;
        runner = [&] { return run_distinguish(o, &csv_payload); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        auto t0 = std::chrono::steady_clock::now();
        json results = runner();
        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
        json params{{"n", o.n},      {"k", o.k},         {"xi", o.xi},
                    {"p", o.p},      {"eps", o.eps},     {"family", o.family},
                    {"mode", o.mode}, {"trials", o.trials}};
        json report = make_report(subname, params, o, std::move(results));
        report["elapsed_ms"] = elapsed;
        if (o.format == "csv") {
            if (!csv_capable)
                throw std::invalid_argument("csv format is only available for: distinguish");
            emit(csv_payload, o);
        } else {
            emit(report.dump(2), o);
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "precondition violated: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "precondition violated: " << e.what() << "\n";
        return 2;
    } catch (const std::length_error& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return 3;
    } catch (const std::overflow_error& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return 3;
    } catch (const std::bad_alloc&) {
        std::cerr << "resource limit: allocation failed\n";
        return 3;
    }
}
