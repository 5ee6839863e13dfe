#include <catch2/catch_amalgamated.hpp>

#include "qdes/lbtest.hpp"

using namespace qdes;

TEST_CASE("threshold crossing points") {
    CHECK(threshold_star(1, 16, 0.5, 2.0 / 3.0) ==
          Catch::Approx(16.0 * std::log(4.0 / 3.0) / std::log(2.0)).epsilon(1e-12));
    CHECK(threshold_star(1, 16, 0.5, 2.0 / 3.0) == Catch::Approx(6.64).margin(0.01));
    // symmetric case q_low = 1 - q_high
    CHECK(threshold_star(1, 10, 0.3, 0.7) == Catch::Approx(5.0));
    CHECK(collision_accept_cut(8, 0.5, 2.0 / 3.0) == Catch::Approx(8.0 * std::log(1.5) / std::log(2.0)));
    CHECK(threshold_star(1, 8, 0.5, 2.0 / 3.0) + collision_accept_cut(8, 0.5, 2.0 / 3.0) ==
          Catch::Approx(8.0));
    CHECK_THROWS_AS(threshold_star(1, 8, 0.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(threshold_star(1, 8, 0.7, 0.5), std::invalid_argument);
}

TEST_CASE("predicted advantage formula") {
    CHECK(predicted_advantage(16, 1) ==
          Catch::Approx(16.0 / 36.0 / std::log(2.0) - 2.0 / 65536.0).epsilon(1e-12));
    CHECK(predicted_advantage(16, 1) == Catch::Approx(0.641).margin(0.001));
    CHECK(predicted_advantage(16, 2) == Catch::Approx(1.11e-3).margin(5e-5));
    CHECK(predicted_advantage(16, 6) <= 0.0);
}

TEST_CASE("basis state in a fixed computational basis always collides") {
    CollisionConfig cfg{PatchLayout(4, 1), 200, std::nullopt, true};
    auto rep = run_collision_test(CollisionSource::basis_state(5), cfg, {1, 0});
    for (auto r : rep.per_patch_rates) CHECK(r == 1.0);
    CHECK(rep.mean_collisions == 4.0);
    CHECK(rep.accept_rate == 1.0);
}

TEST_CASE("haar source collision rates") {
    CollisionConfig cfg{PatchLayout(6, 1), 20000, std::nullopt, false};
    auto rep = run_collision_test(CollisionSource::haar(), cfg, {2, 0});
    double corr = 4.0 / 64.0;
    for (int a = 0; a < rep.M; ++a) {
        INFO("patch " << a << " rate " << rep.per_patch_rates[a]);
        CHECK(rep.per_patch_rates[a] >= 0.5 - 3 * rep.per_patch_stderr[a]);
        CHECK(rep.per_patch_rates[a] <= 0.5 + corr + 3 * rep.per_patch_stderr[a]);
    }
    // L = 2 patches
    CollisionConfig cfg2{PatchLayout(6, 2), 20000, std::nullopt, false};
    auto rep2 = run_collision_test(CollisionSource::haar(), cfg2, {2, 1});
    for (int a = 0; a < rep2.M; ++a) {
        CHECK(rep2.per_patch_rates[a] >= 0.25 - 3 * rep2.per_patch_stderr[a]);
        CHECK(rep2.per_patch_rates[a] <= 0.25 + corr + 3 * rep2.per_patch_stderr[a]);
    }
}

TEST_CASE("product state source rates and patch independence") {
    CollisionConfig cfg{PatchLayout(6, 1), 20000, std::nullopt, false};
    auto rep = run_collision_test(CollisionSource::product_state(), cfg, {3, 0});
    for (int a = 0; a < rep.M; ++a)
        CHECK(rep.per_patch_rates[a] == Catch::Approx(2.0 / 3.0).margin(3 * rep.per_patch_stderr[a]));
    // depth-0 source: patch collisions are independent across patches
    for (int a = 0; a < rep.M; ++a)
        for (int b = a + 1; b < rep.M; ++b) {
            double cov = rep.pair_rates(a, b) - rep.per_patch_rates[a] * rep.per_patch_rates[b];
            double sigma = 1.0 / std::sqrt(double(rep.trials));
            CHECK(std::abs(cov) <= 3 * sigma);
        }
    // L = 2 lower bound (1/2^L)(1 + 1/3^L)
    CollisionConfig cfg2{PatchLayout(6, 2), 20000, std::nullopt, false};
    auto rep2 = run_collision_test(CollisionSource::product_state(), cfg2, {3, 1});
    for (int a = 0; a < rep2.M; ++a)
        CHECK(rep2.per_patch_rates[a] >= 0.25 * (1.0 + 1.0 / 9.0) - 3 * rep2.per_patch_stderr[a]);
}

TEST_CASE("synthetic sources match the exact convolution and are monotone") {
    std::vector<double> q{0.3, 0.6, 0.5, 0.7};
    double cut = 2.0;
    CollisionConfig cfg{PatchLayout(4, 1), 30000, cut, false};
    auto rep = run_collision_test(CollisionSource::synthetic(q), cfg, {4, 0});
    double want = exact_accept_rate(q, cut);
    CHECK(rep.accept_rate == Catch::Approx(want).margin(3.0 / std::sqrt(30000.0)));
    for (int a = 0; a < 4; ++a)
        CHECK(rep.per_patch_rates[a] == Catch::Approx(q[a]).margin(4 * rep.per_patch_stderr[a]));

    // raising any per-patch probability never decreases the accept rate
    RngStream rng(17, "mono");
    for (int t = 0; t < 200; ++t) {
        int m = 2 + int(rng.below(6));
        std::vector<double> probs(m);
        for (auto& p : probs) p = rng.uniform();
        double c = rng.uniform() * m;
        double base = exact_accept_rate(probs, c);
        int idx = int(rng.below(m));
        auto bumped = probs;
        bumped[idx] = std::min(1.0, bumped[idx] + rng.uniform() * (1.0 - bumped[idx]));
        CHECK(exact_accept_rate(bumped, c) >= base - 1e-12);
    }
}

TEST_CASE("exact accept rate sanity") {
    CHECK(exact_accept_rate({1.0, 1.0}, 1.5) == Catch::Approx(1.0));
    CHECK(exact_accept_rate({0.0, 0.0}, 0.5) == Catch::Approx(0.0));
    CHECK(exact_accept_rate({0.5}, 0.5) == Catch::Approx(0.5));
    // default cut at n=8, L=1 accepts at >= 5 of 8 collisions
    double cut = collision_accept_cut(8, haar_patch_rate(1), product_patch_rate(1));
    CHECK(cut == Catch::Approx(4.68).margin(0.01));
    CHECK(exact_accept_rate(std::vector<double>(8, 0.5), cut) == Catch::Approx(93.0 / 256.0));
    CHECK(exact_accept_rate(std::vector<double>(8, 2.0 / 3.0), cut) ==
          Catch::Approx(4864.0 / 6561.0));
}

TEST_CASE("distinguisher advantage for depth-0 states") {
    CollisionConfig cfg{PatchLayout(8, 1), 20000, std::nullopt, false};
    auto adv = run_distinguisher(CollisionSource::product_state(), cfg, {6, 0});
    INFO("advantage " << adv.advantage << " +- " << adv.std_error);
    CHECK(adv.advantage >= 0.3);
    CHECK(adv.advantage <= 0.45);
    CHECK(adv.std_error < 0.01);
}

TEST_CASE("ensemble sources run deterministically") {
    EnsembleSpec spec;
    spec.variant = Variant::BlockedPhase;
    spec.n = 4;
    spec.xi = 1;
    CollisionConfig cfg{PatchLayout(4, 1), 500, std::nullopt, false};
    auto a = run_collision_test(CollisionSource::ensemble(spec), cfg, {8, 0});
    auto b = run_collision_test(CollisionSource::ensemble(spec), cfg, {8, 0});
    for (int i = 0; i < a.M; ++i) CHECK(a.per_patch_rates[i] == b.per_patch_rates[i]);
    CHECK(a.accept_rate == b.accept_rate);
    for (auto r : a.per_patch_rates) {
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("report serialization") {
    CollisionConfig cfg{PatchLayout(4, 2), 100, std::nullopt, false};
    auto rep = run_collision_test(CollisionSource::haar(), cfg, {9, 0});
    auto j = collision_report_json(rep);
    CHECK(j["n"] == 4);
    CHECK(j["M"] == 2);
    CHECK(j["per_patch_rates"].size() == 2);
    CHECK(j["collision_histogram"].size() == 3);
    auto csv = collision_report_csv(rep);
    CHECK(csv.rfind("patch_index,rate,stderr\r\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("collision test preconditions") {
    CollisionConfig bad{PatchLayout(4, 1), 0, std::nullopt, false};
    CHECK_THROWS_AS(run_collision_test(CollisionSource::haar(), bad, {0, 0}),
                    std::invalid_argument);
    CollisionConfig badcut{PatchLayout(4, 1), 10, 9.0, false};
    CHECK_THROWS_AS(run_collision_test(CollisionSource::haar(), badcut, {0, 0}),
                    std::invalid_argument);
    CollisionConfig cfg{PatchLayout(4, 2), 10, std::nullopt, false};
    CHECK_THROWS_AS(
        run_collision_test(CollisionSource::synthetic({0.5, 0.5, 0.5}), cfg, {0, 0}),
        std::invalid_argument);
}
