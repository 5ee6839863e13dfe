#include <catch2/catch_amalgamated.hpp>

#include "qdes/revcircuit.hpp"

using namespace qdes;

TEST_CASE("mul circuit computes gf_mul, exhaustive m = 3") {
    auto s = field_spec(3);
    auto c = build_mul_circuit(s);
    CHECK(layers_disjoint(c));
    for (uint64_t a = 0; a < 8; ++a)
        for (uint64_t b = 0; b < 8; ++b) {
            uint64_t got = run_circuit_outputs(c, a | (b << 3), {}, 3);
            uint64_t want = gf_mul(FieldElem{a, 3}, FieldElem{b, 3}, s).bits;
            CHECK(got == want);
        }
}

TEST_CASE("mul circuit fixed example and zero input") {
    auto s = field_spec(3);
    auto c = build_mul_circuit(s);
    CHECK(run_circuit_outputs(c, 0b010 | (0b110 << 3), {}, 3) == 0b111);
    for (uint64_t a = 0; a < 8; ++a)
        CHECK(run_circuit_outputs(c, a, {}, 3) == 0);  // b = 0
}

TEST_CASE("mul circuit depth scaling") {
    auto d4 = build_mul_circuit(field_spec(4)).depth();
    auto d8 = build_mul_circuit(field_spec(8)).depth();
    INFO("depth(4)=" << d4 << " depth(8)=" << d8);
    CHECK(double(d8) <= 2.5 * double(d4));
    CHECK_THROWS_AS(build_mul_circuit(field_spec(17)), std::length_error);
}

TEST_CASE("kwise circuit matches eval_tree") {
    struct Case { int m, k; };
    for (auto [m, k] : {Case{3, 2}, Case{4, 3}}) {
        auto s = field_spec(m);
        for (auto mode : {KWiseCircuitMode::low_depth, KWiseCircuitMode::low_ancilla}) {
            auto c = build_kwise_circuit(s, k, mode);
            CHECK(layers_disjoint(c));
            RngStream rng(0x51, "kwc/" + std::to_string(m) + "/" + std::to_string(int(mode)));
            for (int t = 0; t < 1000; ++t) {
                std::vector<uint64_t> coeffs(k);
                for (auto& cf : coeffs) cf = rng.bits(m);
                uint64_t x = rng.bits(m);
                uint64_t got = run_circuit_outputs(c, x, coeffs, m);
                uint64_t want = eval_tree(make_seed(s, coeffs), make_elem(x, s)).bits;
                CHECK(got == want);
            }
        }
    }
}

TEST_CASE("kwise circuit k=1 is a CNOT copy") {
    auto s = field_spec(4);
    for (auto mode : {KWiseCircuitMode::low_depth, KWiseCircuitMode::low_ancilla}) {
        auto c = build_kwise_circuit(s, 1, mode);
        CHECK(c.depth() == 1);
        CHECK(c.count_role(WireRole::ancilla) == 0);
        CHECK(run_circuit_outputs(c, 0b0110, {0b1011}, 4) == 0b1011);
    }
}

TEST_CASE("kwise circuit exhaustive ancilla restoration, m = 3") {
    auto s = field_spec(3);
    auto c = build_kwise_circuit(s, 2, KWiseCircuitMode::low_depth);
    // simulate_reversible throws if any ancilla ends nonzero
    for (uint64_t x = 0; x < 8; ++x)
        for (uint64_t a0 = 0; a0 < 8; ++a0)
            for (uint64_t a1 = 0; a1 < 8; ++a1)
                CHECK(run_circuit_outputs(c, x, {a0, a1}, 3) ==
                      eval_tree(make_seed(s, {a0, a1}), make_elem(x, s)).bits);
}

TEST_CASE("low_depth depth scaling in k") {
    auto s = field_spec(3);
    int d2 = build_kwise_circuit(s, 2, KWiseCircuitMode::low_depth).depth();
    int d8 = build_kwise_circuit(s, 8, KWiseCircuitMode::low_depth).depth();
    INFO("depth(k=2)=" << d2 << " depth(k=8)=" << d8);
    CHECK(double(d8) <= 3.0 * double(d2));
}

TEST_CASE("low_ancilla ancilla count is k-independent") {
    for (int m : {3, 8}) {
        auto s = field_spec(m);
        int a2 = build_kwise_circuit(s, 2, KWiseCircuitMode::low_ancilla).count_role(WireRole::ancilla);
        int a8 = build_kwise_circuit(s, 8, KWiseCircuitMode::low_ancilla).count_role(WireRole::ancilla);
        INFO("m=" << m << " ancilla(k=2)=" << a2 << " ancilla(k=8)=" << a8);
        CHECK(double(a8) <= 1.2 * double(a2));
    }
}

TEST_CASE("simulate_reversible basics") {
    CircuitBuilder bld;
    int w0 = bld.add_wire(WireRole::input);
    int w1 = bld.add_wire(WireRole::input);
    auto empty = CircuitBuilder{}.take();
    CHECK(simulate_reversible(empty, {}).empty());

    bld.emit_cnot(w0, w1);
    bld.emit_cnot(w0, w1);  // self-inverse pair
    auto c = bld.take();
    auto bits = simulate_reversible(c, {1, 1});
    CHECK(bits[0] == 1);
    CHECK(bits[1] == 1);
    CHECK_THROWS(simulate_reversible(c, {1, -1}));
}

TEST_CASE("serialization round trip") {
    auto s = field_spec(3);
    for (auto mode : {KWiseCircuitMode::low_depth, KWiseCircuitMode::low_ancilla}) {
        auto c = build_kwise_circuit(s, 3, mode);
        auto text = serialize_circuit(c);
        auto c2 = parse_circuit(text);
        REQUIRE(c2.wire_count() == c.wire_count());
        REQUIRE(c2.depth() == c.depth());
        CHECK(serialize_circuit(c2) == text);
        // behavioral equality on a few inputs
        RngStream rng(9, "ser");
        for (int t = 0; t < 50; ++t) {
            std::vector<uint64_t> coeffs{rng.bits(3), rng.bits(3), rng.bits(3)};
            uint64_t x = rng.bits(3);
            CHECK(run_circuit_outputs(c2, x, coeffs, 3) == run_circuit_outputs(c, x, coeffs, 3));
        }
    }
}

TEST_CASE("design_resource_calculator randomness and patch size") {
    CHECK(design_patch_size(16, 2, 0.1) == 11);
    auto rp = design_resource_calculator(16, 2, 0.1, DesignFamily::blocked_phase,
                                         KWiseCircuitMode::low_depth);
    CHECK(rp.randomness_bits == 2 * 16 * 2);
    CHECK(rp.xi == 11);
    CHECK(rp.depth > 0);
    CHECK(rp.ancilla > 0);
    auto rl = design_resource_calculator(16, 2, 0.1, DesignFamily::blocked_lrfc,
                                         KWiseCircuitMode::low_ancilla);
    CHECK(rl.randomness_bits == 3 * 16 * 2 + 40);
    CHECK_THROWS_AS(design_resource_calculator(4, 4, 0.01, DesignFamily::blocked_phase,
                                               KWiseCircuitMode::low_depth),
                    std::domain_error);
}
