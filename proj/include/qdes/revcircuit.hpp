#pragma once
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdes/gf2.hpp"
#include "qdes/kwise.hpp"

namespace qdes {

/*
 Reversible circuits over {NOT, CNOT, TOFFOLI} for field multiplication and
 k-wise polynomial evaluation, with exact depth / ancilla / randomness
 accounting.

 Gates are emitted in sequential order and packed into layers greedily: a
 gate lands in the earliest layer strictly after every earlier gate that
 shares one of its wires. Layer disjointness therefore holds by
 construction and the layer count equals the dependency depth of the
 schedule. Ancilla restoration is by uncomputation: every scratch value is
 cleared by re-emitting the gates that produced it.
*/

enum class WireRole { input, seed, ancilla, output };
enum class GateType { NOT, CNOT, TOF };

struct Gate {
    GateType type;
    int c1 = -1, c2 = -1, t = -1;  // controls (unused = -1) and target
};

struct ReversibleCircuit {
    std::vector<WireRole> roles;
    std::vector<std::vector<Gate>> layers;

    int wire_count() const { return int(roles.size()); }
    int depth() const { return int(layers.size()); }
    int gate_count() const {
        int n = 0;
        for (auto& l : layers) n += int(l.size());
        return n;
    }
    int count_role(WireRole r) const {
        int n = 0;
        for (auto x : roles)
            if (x == r) ++n;
        return n;
    }
    std::vector<int> wires_of(WireRole r) const {
        std::vector<int> v;
        for (int i = 0; i < wire_count(); ++i)
            if (roles[i] == r) v.push_back(i);
        return v;
    }
};

struct ResourceReport {
    int depth = 0;
    int width = 0;
    int ancilla = 0;
    int gate_count = 0;
    long long randomness_bits = 0;
    int xi = 0;  // patch size chosen by the design-resource calculator
};

class CircuitBuilder {
public:
    int add_wire(WireRole role) {
        circuit_.roles.push_back(role);
        last_layer_.push_back(-1);
        return int(circuit_.roles.size()) - 1;
    }
    std::vector<int> add_register(int width, WireRole role) {
        std::vector<int> v(width);
        for (int& w : v) w = add_wire(role);
        return v;
    }

    void emit(const Gate& g) {
        int at = -1;
        for (int w : {g.c1, g.c2, g.t})
            if (w >= 0) at = std::max(at, last_layer_[w]);
        ++at;
        if (at == int(circuit_.layers.size())) circuit_.layers.emplace_back();
        circuit_.layers[at].push_back(g);
        for (int w : {g.c1, g.c2, g.t})
            if (w >= 0) last_layer_[w] = at;
        trace_.push_back(g);
    }
    void emit_not(int t) { emit({GateType::NOT, -1, -1, t}); }
    void emit_cnot(int c, int t) { emit({GateType::CNOT, c, -1, t}); }
    void emit_tof(int c1, int c2, int t) {
        // x AND x = x: a degenerate Toffoli is a CNOT
        if (c1 == c2) emit_cnot(c1, t);
        else emit({GateType::TOF, c1, c2, t});
    }

    // register-wide copy: dst ^= src
    void emit_xor_reg(const std::vector<int>& src, const std::vector<int>& dst) {
        for (size_t i = 0; i < src.size(); ++i) emit_cnot(src[i], dst[i]);
    }

    size_t mark() const { return trace_.size(); }
    // Re-emit gates [from, to) in reverse order; each gate is self-inverse,
    // so this uncomputes everything they wrote.
    void emit_reverse(size_t from, size_t to) {
        std::vector<Gate> span(trace_.begin() + from, trace_.begin() + to);
        for (auto it = span.rbegin(); it != span.rend(); ++it) emit(*it);
    }

    ReversibleCircuit take() { return std::move(circuit_); }

private:
    ReversibleCircuit circuit_;
    std::vector<int> last_layer_;
    std::vector<Gate> trace_;
};

namespace detail {

// Bit j of (x^s mod p): reduction of a product is GF(2)-linear in the
// unreduced coefficients, realized below as a pure CNOT network.
inline std::vector<uint64_t> reduction_rows(const FieldSpec& s) {
    std::vector<uint64_t> xs_mod_p(2 * s.m - 1);
    FieldElem xs{1, s.m};
    FieldElem x{s.m == 1 ? uint64_t(1) : uint64_t(2), s.m};
    for (int col = 0; col < 2 * s.m - 1; ++col) {
        xs_mod_p[col] = xs.bits;
        xs = gf_mul(xs, x, s);
    }
    std::vector<uint64_t> rows(s.m, 0);
    for (int col = 0; col < 2 * s.m - 1; ++col)
        for (int j = 0; j < s.m; ++j)
            if ((xs_mod_p[col] >> j) & 1) rows[j] |= uint64_t(1) << col;
    return rows;
}

// out ^= a*b in GF(2^m). scratch must hold m*m zeroed wires and is
// restored to zero before returning.
inline void emit_mul(CircuitBuilder& bld, const FieldSpec& spec, const std::vector<int>& a,
                     const std::vector<int>& b, const std::vector<int>& out,
                     const std::vector<int>& scratch) {
    int m = spec.m;
    size_t start = bld.mark();
    // partial products pp[i][j] = a_i & b_j
    auto pp = [&](int i, int j) { return scratch[i * m + j]; };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) bld.emit_tof(a[i], b[j], pp(i, j));
    // fold each anti-diagonal (column s of the unreduced product) into one wire
    std::vector<int> col(2 * m - 1, -1);
    for (int s = 0; s < 2 * m - 1; ++s) {
        std::vector<int> wires;
        for (int i = 0; i < m; ++i) {
            int j = s - i;
            if (j >= 0 && j < m) wires.push_back(pp(i, j));
        }
        while (wires.size() > 1) {
            std::vector<int> next;
            for (size_t t = 0; t + 1 < wires.size(); t += 2) {
                bld.emit_cnot(wires[t + 1], wires[t]);
                next.push_back(wires[t]);
            }
            if (wires.size() % 2) next.push_back(wires.back());
            wires = std::move(next);
        }
        col[s] = wires[0];
    }
    size_t fold_end = bld.mark();
    // modular reduction: out_j ^= xor of selected columns
    auto rows = reduction_rows(spec);
    for (int j = 0; j < m; ++j)
        for (int s = 0; s < 2 * m - 1; ++s)
            if ((rows[j] >> s) & 1) bld.emit_cnot(col[s], out[j]);
    // restore scratch
    bld.emit_reverse(start, fold_end);
}

inline void check_mul_size(int m, int cap) {
    if (m > cap) throw std::length_error("circuit builder: m exceeds resource cap");
}

inline ReversibleCircuit build_mul_circuit_impl(const FieldSpec& spec) {
    CircuitBuilder bld;
    int m = spec.m;
    auto a = bld.add_register(m, WireRole::input);
    auto b = bld.add_register(m, WireRole::input);
    auto out = bld.add_register(m, WireRole::output);
    auto scratch = bld.add_register(m * m, WireRole::ancilla);
    emit_mul(bld, spec, a, b, out, scratch);
    return bld.take();
}

enum class KWiseMode { low_depth, low_ancilla };

// Low-depth schedule: a split (Estrin) evaluation tree. The repeated-squaring
// chain x, x^2, x^4, ... is computed alongside; level j of the tree combines
// half-results with x^(2^j). Multiplication depth is ceil(log2 k) blocks.
inline ReversibleCircuit build_kwise_low_depth(const FieldSpec& spec, int k) {
    CircuitBuilder bld;
    int m = spec.m;
    auto x = bld.add_register(m, WireRole::input);
    std::vector<std::vector<int>> coeff(k);
    for (int i = 0; i < k; ++i) coeff[i] = bld.add_register(m, WireRole::seed);
    auto out = bld.add_register(m, WireRole::output);
    if (k == 1) {
        bld.emit_xor_reg(coeff[0], out);
        return bld.take();
    }

    int levels = 0;  // pow2 registers x^(2^0) .. x^(2^levels)
    for (int span = 2; span < k; span *= 2) ++levels;

    // Count how many multiplications read each x^(2^j): one per tree node at
    // level j plus two per squaring that consumes it. Each consumer gets its
    // own register copy, otherwise parallel multiplications would serialize
    // on the shared operand wires.
    std::vector<int> uses(levels + 1, 0);
    auto count_nodes = [&](auto&& self, int count) -> void {
        if (count == 1) return;
        int half = 1, level = 0;
        while (half * 2 < count) half *= 2, ++level;
        ++uses[level];
        self(self, half);
        self(self, count - half);
    };
    count_nodes(count_nodes, k);
    for (int j = 0; j + 1 <= levels; ++j) uses[j] += 2;

    size_t forward_start = bld.mark();
    auto fresh_mul = [&](const std::vector<int>& a, const std::vector<int>& b,
                         const std::vector<int>& dst) {
        auto scratch = bld.add_register(m * m, WireRole::ancilla);
        emit_mul(bld, spec, a, b, dst, scratch);
    };
    // copy pools: copies fan out by a doubling tree (copy i sourced from
    // copy i - 2^floor(log2 i)) so producing c copies costs depth O(log c)
    struct CopyPool {
        std::vector<std::vector<int>> copies;
        int next = 0;
    };
    auto fill_pool = [&](CopyPool& pool, const std::vector<int>& orig, int n) {
        pool.copies = {orig};
        for (int i = 1; i < n; ++i) {
            int src = i - (1 << (31 - __builtin_clz(i)));
            auto cp = bld.add_register(m, WireRole::ancilla);
            bld.emit_xor_reg(pool.copies[src], cp);
            pool.copies.push_back(cp);
        }
    };
    auto take = [](CopyPool& pool) -> const std::vector<int>& {
        return pool.copies[pool.next++ % pool.copies.size()];
    };

    std::vector<CopyPool> pools(levels + 1);
    std::vector<std::vector<int>> pow2{x};
    fill_pool(pools[0], x, uses[0]);
    for (int j = 1; j <= levels; ++j) {
        auto sq = bld.add_register(m, WireRole::ancilla);
        fresh_mul(take(pools[j - 1]), take(pools[j - 1]), sq);
        pow2.push_back(sq);
        fill_pool(pools[j], sq, uses[j]);
    }
    // returns a register holding sum_{i<count} coeff[lo+i] x^i
    auto estrin = [&](auto&& self, int lo, int count) -> std::vector<int> {
        if (count == 1) return coeff[lo];
        int half = 1, level = 0;
        while (half * 2 < count) half *= 2, ++level;
        auto res = bld.add_register(m, WireRole::ancilla);
        auto hi = self(self, lo + half, count - half);
        fresh_mul(take(pools[level]), hi, res);
        auto lo_reg = self(self, lo, half);
        bld.emit_xor_reg(lo_reg, res);
        return res;
    };
    auto result = estrin(estrin, 0, k);
    size_t forward_end = bld.mark();
    bld.emit_xor_reg(result, out);
    bld.emit_reverse(forward_start, forward_end);
    return bld.take();
}

// Low-ancilla schedule: a sequential accumulation loop, result += a_i * x^i,
// over a fixed workspace (power, term, carry registers plus one multiplier
// scratch block) sized for the supported cap k <= 8, so the ancilla count
// does not grow with k. Each iteration restores its own scratch.
inline ReversibleCircuit build_kwise_low_ancilla(const FieldSpec& spec, int k) {
    CircuitBuilder bld;
    int m = spec.m;
    auto x = bld.add_register(m, WireRole::input);
    std::vector<std::vector<int>> coeff(k);
    for (int i = 0; i < k; ++i) coeff[i] = bld.add_register(m, WireRole::seed);
    auto out = bld.add_register(m, WireRole::output);
    if (k == 1) {
        bld.emit_xor_reg(coeff[0], out);
        return bld.take();
    }
    auto scratch = bld.add_register(m * m, WireRole::ancilla);
    auto s1 = bld.add_register(m, WireRole::ancilla);  // x^2
    auto s2 = bld.add_register(m, WireRole::ancilla);  // x^4
    auto p = bld.add_register(m, WireRole::ancilla);   // current power product
    auto w = bld.add_register(m, WireRole::ancilla);   // spare factor
    auto t = bld.add_register(m, WireRole::ancilla);   // term a_i * x^i

    auto mul = [&](const std::vector<int>& a, const std::vector<int>& b,
                   const std::vector<int>& dst) { emit_mul(bld, spec, a, b, dst, scratch); };
    size_t sq_start = bld.mark();
    if (k >= 3) mul(x, x, s1);
    if (k >= 5) mul(s1, s1, s2);
    size_t sq_end = bld.mark();

    for (int i = 0; i < k; ++i) {
        if (i == 0) {
            bld.emit_xor_reg(coeff[0], out);
            continue;
        }
        std::vector<std::vector<int>> factors;
        if (i & 1) factors.push_back(x);
        if (i & 2) factors.push_back(s1);
        if (i & 4) factors.push_back(s2);
        size_t it_start = bld.mark();
        const std::vector<int>* power = nullptr;
        size_t power_end = 0;
        if (factors.size() == 1) {
            power = &factors[0];
            power_end = bld.mark();
        } else if (factors.size() == 2) {
            mul(factors[0], factors[1], p);
            power = &p;
            power_end = bld.mark();
        } else {
            mul(factors[0], factors[1], w);
            mul(w, factors[2], p);
            power = &p;
            power_end = bld.mark();
        }
        size_t term_start = bld.mark();
        mul(coeff[i], *power, t);
        size_t term_end = bld.mark();
        bld.emit_xor_reg(t, out);
        bld.emit_reverse(term_start, term_end);  // clear t
        bld.emit_reverse(it_start, power_end);   // clear p, w
    }
    bld.emit_reverse(sq_start, sq_end);  // clear s1, s2
    return bld.take();
}

}  // namespace detail

inline ReversibleCircuit build_mul_circuit(const FieldSpec& spec) {
    detail::check_mul_size(spec.m, 16);
    return detail::build_mul_circuit_impl(spec);
}

enum class KWiseCircuitMode { low_depth, low_ancilla };

inline ReversibleCircuit build_kwise_circuit(const FieldSpec& spec, int k, KWiseCircuitMode mode,
                                             int m_cap = 16) {
    detail::check_mul_size(spec.m, m_cap);
    if (k < 1 || k > 8) throw std::length_error("build_kwise_circuit: need 1 <= k <= 8");
    return mode == KWiseCircuitMode::low_depth ? detail::build_kwise_low_depth(spec, k)
                                               : detail::build_kwise_low_ancilla(spec, k);
}

// Deterministic classical simulation. `assigned` must cover every input and
// seed wire (other positions must be absent, i.e. -1). Verifies that every
// ancilla wire is restored to 0.
inline std::vector<int> simulate_reversible(const ReversibleCircuit& c,
                                            const std::vector<int>& assigned) {
    if (assigned.size() != size_t(c.wire_count()))
        throw std::invalid_argument("simulate_reversible: assignment size mismatch");
    std::vector<int> bits(c.wire_count(), 0);
    for (int i = 0; i < c.wire_count(); ++i) {
        bool need = c.roles[i] == WireRole::input || c.roles[i] == WireRole::seed;
        if (need && assigned[i] < 0)
            throw std::invalid_argument("simulate_reversible: uncovered input/seed wire");
        if (!need && assigned[i] > 0)
            throw std::invalid_argument("simulate_reversible: ancilla/output preset nonzero");
        if (need) bits[i] = assigned[i] & 1;
    }
    for (auto& layer : c.layers)
        for (auto& g : layer) {
            switch (g.type) {
                case GateType::NOT: bits[g.t] ^= 1; break;
                case GateType::CNOT: bits[g.t] ^= bits[g.c1]; break;
                case GateType::TOF: bits[g.t] ^= bits[g.c1] & bits[g.c2]; break;
            }
        }
    for (int i = 0; i < c.wire_count(); ++i)
        if (c.roles[i] == WireRole::ancilla && bits[i] != 0)
            throw std::logic_error("simulate_reversible: ancilla not restored");
    return bits;
}

// Convenience: run a built kwise (or mul) circuit on packed field values.
inline uint64_t run_circuit_outputs(const ReversibleCircuit& c, uint64_t input_bits,
                                    const std::vector<uint64_t>& seed_values, int m) {
    std::vector<int> assigned(c.wire_count(), -1);
    auto inputs = c.wires_of(WireRole::input);
    for (size_t i = 0; i < inputs.size(); ++i) assigned[inputs[i]] = int((input_bits >> i) & 1);
    auto seeds = c.wires_of(WireRole::seed);
    for (size_t v = 0; v < seed_values.size(); ++v)
        for (int j = 0; j < m; ++j) assigned[seeds[v * m + j]] = int((seed_values[v] >> j) & 1);
    auto bits = simulate_reversible(c, assigned);
    auto outs = c.wires_of(WireRole::output);
    uint64_t r = 0;
    for (size_t i = 0; i < outs.size(); ++i) r |= uint64_t(bits[outs[i]]) << i;
    return r;
}

enum class DesignFamily { blocked_phase, blocked_lrfc };

// Patch size from the state-design corollary: xi = max(ceil(log2(3nk^2/eps)), 3).
inline int design_patch_size(int n, int k, double eps) {
    double v = 3.0 * n * double(k) * double(k) / eps;
    int xi = int(std::ceil(std::log2(v) - 1e-12));
    return std::max(xi, 3);
}

inline ResourceReport design_resource_calculator(int n, int k, double eps, DesignFamily family,
                                                 KWiseCircuitMode mode) {
    if (n < 1 || k < 1 || eps <= 0) throw std::domain_error("design_resource_calculator: bad parameters");
    if (double(k) * k / eps > std::ldexp(1.0, n) / 3.0)
        throw std::domain_error("design_resource_calculator: requires k^2/eps <= 2^n/3");
    ResourceReport r;
    r.xi = design_patch_size(n, k, eps);
    int m = 2 * r.xi;  // functions act on overlapping 2*xi-qubit blocks
    if (m > 64) throw std::length_error("design_resource_calculator: 2*xi exceeds 64-bit elements");
    // the compiled phase-function subroutine dominates the resources
    int kk = std::min(2 * k, 8);
    auto c = build_kwise_circuit(field_spec(m), kk, mode, 64);
    r.depth = c.depth();
    r.width = c.wire_count();
    r.ancilla = c.count_role(WireRole::ancilla);
    r.gate_count = c.gate_count();
    r.randomness_bits = family == DesignFamily::blocked_phase
                            ? 2LL * n * k
                            : 3LL * n * k + (5LL * n + 1) / 2;
    return r;
}

// ---- text serialization -------------------------------------------------

inline std::string serialize_circuit(const ReversibleCircuit& c) {
    std::ostringstream os;
    os << "wires " << c.wire_count();
    const char* names[] = {"inputs", "seeds", "ancilla", "outputs"};
    for (int r = 0; r < 4; ++r) {
        os << " " << names[r];
        for (int i = 0; i < c.wire_count(); ++i)
            if (int(c.roles[i]) == r) os << " " << i;
    }
    os << "\n";
    for (auto& layer : c.layers) {
        bool first = true;
        for (auto& g : layer) {
            if (!first) os << " ";
            first = false;
            switch (g.type) {
                case GateType::NOT: os << "NOT " << g.t; break;
                case GateType::CNOT: os << "CNOT " << g.c1 << " " << g.t; break;
                case GateType::TOF: os << "TOF " << g.c1 << " " << g.c2 << " " << g.t; break;
            }
        }
        os << "\n";
    }
    return os.str();
}

inline ReversibleCircuit parse_circuit(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("parse_circuit: empty input");
    std::istringstream hs(line);
    std::string tok;
    int nwires = 0;
    hs >> tok >> nwires;
    if (tok != "wires") throw std::invalid_argument("parse_circuit: bad header");
    ReversibleCircuit c;
    c.roles.assign(nwires, WireRole::ancilla);
    WireRole cur = WireRole::input;
    while (hs >> tok) {
        if (tok == "inputs") cur = WireRole::input;
        else if (tok == "seeds") cur = WireRole::seed;
        else if (tok == "ancilla") cur = WireRole::ancilla;
        else if (tok == "outputs") cur = WireRole::output;
        else c.roles.at(std::stoi(tok)) = cur;
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<Gate> layer;
        while (ls >> tok) {
            Gate g;
            if (tok == "NOT") {
                g.type = GateType::NOT;
                ls >> g.t;
            } else if (tok == "CNOT") {
                g.type = GateType::CNOT;
                ls >> g.c1 >> g.t;
            } else if (tok == "TOF") {
                g.type = GateType::TOF;
                ls >> g.c1 >> g.c2 >> g.t;
            } else {
                throw std::invalid_argument("parse_circuit: unknown gate " + tok);
            }
            layer.push_back(g);
        }
        if (!layer.empty()) c.layers.push_back(std::move(layer));
    }
    return c;
}

// Structural check: no two gates in one layer may share a wire.
inline bool layers_disjoint(const ReversibleCircuit& c) {
    for (auto& layer : c.layers) {
        std::vector<int> used;
        for (auto& g : layer)
            for (int w : {g.c1, g.c2, g.t})
                if (w >= 0) {
                    for (int u : used)
                        if (u == w) return false;
                    used.push_back(w);
                }
    }
    return true;
}

}  // namespace qdes
