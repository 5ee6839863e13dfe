#pragma once
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdes/quantsim.hpp"

namespace qdes {

/*
 Declarative ensemble specifications and deterministic samplers.

 A sampled draw is a sequence of primitive operations (phase oracle,
 conditional shuffle, dense operator, basis permutation) in application
 order, each tagged with the layer it came from. Unitaries compose
 right-to-left, so e.g. LRFC's U = S_L S_R F C applies C first.

 Patch conventions (m = n/xi patches, m even, open boundaries): "even
 pairs" are (a, a+1) for even a and tile the line exactly; "odd pairs" are
 (a, a+1) for odd a and leave the two boundary patches uncovered.
*/

enum class Variant {
    RandomPhase,
    BlockedPhase,
    PFC,
    LRFC,
    BlockedLRFC,
    AmplifiedBlockedLRFC,
    Haar,
    Composed,
};

enum class IndependenceMode { exact_function, kwise };

struct Independence {
    IndependenceMode mode = IndependenceMode::exact_function;
    int k = 0;  // polynomial coefficient count; callers pass 2k for a k-design
};

struct EnsembleSpec {
    Variant variant = Variant::Haar;
    int n = 0;
    int xi = 0;
    int p = 1;
    Independence independence;
    std::vector<EnsembleSpec> factors;  // Composed only
};

struct SampleHandle {
    uint64_t master_seed = 0;
    uint64_t draw_index = 0;

    RngStream stream() const {
        return RngStream(master_seed, "ensemble").child("draw", draw_index);
    }
};

// ---- random function draws ----------------------------------------------

struct PhaseFn {
    int w = 0;
    bool exact = true;
    std::vector<int> table;  // exact mode: 2^w bits
    KWiseSeed seed;          // kwise mode

    int eval(uint64_t x) const {
        return exact ? table[x] : phase_bit(seed, FieldElem{x, w});
    }
    static PhaseFn zero(int w) { return PhaseFn{w, true, std::vector<int>(size_t(1) << w, 0), {}}; }
};

struct ShuffleFn {
    int w = 0;
    bool exact = true;
    std::vector<uint64_t> table;  // exact mode: 2^w values of w bits
    KWiseSeed seed;

    uint64_t eval(uint64_t x) const {
        return exact ? table[x] : eval_tree(seed, FieldElem{x, w}).bits;
    }
    std::vector<uint64_t> as_table() const {
        std::vector<uint64_t> t(size_t(1) << w);
        for (uint64_t x = 0; x < t.size(); ++x) t[x] = eval(x);
        return t;
    }
    static ShuffleFn zero(int w) {
        return ShuffleFn{w, true, std::vector<uint64_t>(size_t(1) << w, 0), {}};
    }
};

inline PhaseFn sample_phase_fn(int w, const Independence& ind, RngStream rng) {
    PhaseFn f;
    f.w = w;
    if (ind.mode == IndependenceMode::exact_function) {
        if (w > 16) throw std::length_error("exact_function table too large");
        f.table.resize(size_t(1) << w);
        for (auto& b : f.table) b = int(rng.bits(1));
    } else {
        f.exact = false;
        f.seed = sample_seed(field_spec(w), ind.k, rng);
    }
    return f;
}

inline ShuffleFn sample_shuffle_fn(int w, const Independence& ind, RngStream rng) {
    ShuffleFn f;
    f.w = w;
    if (ind.mode == IndependenceMode::exact_function) {
        if (w > 16) throw std::length_error("exact_function table too large");
        f.table.resize(size_t(1) << w);
        for (auto& v : f.table) v = rng.bits(w);
    } else {
        f.exact = false;
        f.seed = sample_seed(field_spec(w), ind.k, rng);
    }
    return f;
}

// ---- draws as primitive-operation sequences ------------------------------

struct DrawOp {
    enum class Kind { phase, shuffle, dense, perm };
    Kind kind = Kind::phase;
    std::string layer;                // e.g. "S_o", "F_e", "C_o"
    std::vector<int> qubits;          // phase / dense
    std::vector<int> control, target; // shuffle
    PhaseFn phase;
    ShuffleFn shuffle;
    Mat dense;
    std::vector<uint64_t> perm;       // basis permutation: x -> perm[x]
};

struct EnsembleDraw {
    std::vector<DrawOp> ops;  // application order (first op acts first)
};

inline void apply_draw(const EnsembleDraw& draw, StateVec& s) {
    for (const auto& op : draw.ops) {
        switch (op.kind) {
            case DrawOp::Kind::phase: {
                std::vector<int> tab(size_t(1) << op.qubits.size());
                for (uint64_t v = 0; v < tab.size(); ++v) tab[v] = op.phase.eval(v);
                apply_phase_table(s, op.qubits, tab);
                break;
            }
            case DrawOp::Kind::shuffle:
                apply_shuffle_table(s, op.control, op.target, op.shuffle.as_table());
                break;
            case DrawOp::Kind::dense:
                apply_op_on(s, op.qubits, op.dense);
                break;
            case DrawOp::Kind::perm: {
                Vec out(s.amps.size());
                for (int64_t x = 0; x < s.amps.size(); ++x) out(op.perm[x]) = s.amps(x);
                s.amps = std::move(out);
                break;
            }
        }
    }
}

// ---- variant samplers ----------------------------------------------------

namespace detail {

inline std::vector<int> block_qubits(int a, int xi) {
    std::vector<int> q;
    for (int i = a * xi; i < (a + 2) * xi; ++i) q.push_back(i);
    return q;
}
inline std::vector<int> patch_qubits(int a, int xi) {
    std::vector<int> q;
    for (int i = a * xi; i < (a + 1) * xi; ++i) q.push_back(i);
    return q;
}
inline std::vector<int> all_qubits(int n) {
    std::vector<int> q(n);
    for (int i = 0; i < n; ++i) q[i] = i;
    return q;
}

inline void check_blocked(const EnsembleSpec& spec) {
    if (spec.xi < 1 || spec.n % spec.xi != 0)
        throw std::invalid_argument("ensemble: xi must divide n");
    int m = spec.n / spec.xi;
    if (m < 2 || m % 2 != 0)
        throw std::invalid_argument("ensemble: need an even number (>= 2) of patches");
}

// left patch indices: even pairs (a even) tile the line, odd pairs are interior
inline std::vector<int> even_pair_starts(int m) {
    std::vector<int> v;
    for (int a = 0; a + 1 < m; a += 2) v.push_back(a);
    return v;
}
inline std::vector<int> odd_pair_starts(int m) {
    std::vector<int> v;
    for (int a = 1; a + 1 < m; a += 2) v.push_back(a);
    return v;
}

// one LRFC block on the 2*xi qubits of patches (a, a+1)
inline void emit_lrfc_block(EnsembleDraw& draw, const std::string& tag, int a, int xi,
                            const Independence& ind, RngStream rng) {
    auto left = patch_qubits(a, xi), right = patch_qubits(a + 1, xi);
    DrawOp c;
    c.kind = DrawOp::Kind::dense;
    c.layer = tag + ":C";
    c.qubits = block_qubits(a, xi);
    auto crng = rng.child("C");
    c.dense = sample_clifford(2 * xi, crng).m;
    DrawOp f;
    f.kind = DrawOp::Kind::phase;
    f.layer = tag + ":F";
    f.qubits = block_qubits(a, xi);
    f.phase = sample_phase_fn(2 * xi, ind, rng.child("F"));
    DrawOp sr;
    sr.kind = DrawOp::Kind::shuffle;
    sr.layer = tag + ":S_R";
    sr.control = left;
    sr.target = right;
    sr.shuffle = sample_shuffle_fn(xi, ind, rng.child("hR"));
    DrawOp sl;
    sl.kind = DrawOp::Kind::shuffle;
    sl.layer = tag + ":S_L";
    sl.control = right;
    sl.target = left;
    sl.shuffle = sample_shuffle_fn(xi, ind, rng.child("hL"));
    draw.ops.push_back(std::move(c));
    draw.ops.push_back(std::move(f));
    draw.ops.push_back(std::move(sr));
    draw.ops.push_back(std::move(sl));
}

}  // namespace detail

inline EnsembleDraw sample_draw(const EnsembleSpec& spec, const SampleHandle& handle);

namespace detail {

inline EnsembleDraw sample_draw_stream(const EnsembleSpec& spec, RngStream rng) {
    using detail::all_qubits;
    using detail::block_qubits;
    using detail::patch_qubits;
    EnsembleDraw draw;
    switch (spec.variant) {
        case Variant::RandomPhase: {
            DrawOp op;
            op.kind = DrawOp::Kind::phase;
            op.layer = "F";
            op.qubits = all_qubits(spec.n);
            op.phase = sample_phase_fn(spec.n, spec.independence, rng.child("F"));
            draw.ops.push_back(std::move(op));
            break;
        }
        case Variant::BlockedPhase: {
            check_blocked(spec);
            int m = spec.n / spec.xi;
            // odd-pair oracles, then even-pair oracles (diagonal layers commute)
            for (int a : odd_pair_starts(m)) {
                DrawOp op;
                op.kind = DrawOp::Kind::phase;
                op.layer = "F_o";
                op.qubits = block_qubits(a, spec.xi);
                op.phase = sample_phase_fn(2 * spec.xi, spec.independence, rng.child("F", a));
                draw.ops.push_back(std::move(op));
            }
            for (int a : even_pair_starts(m)) {
                DrawOp op;
                op.kind = DrawOp::Kind::phase;
                op.layer = "F_e";
                op.qubits = block_qubits(a, spec.xi);
                op.phase = sample_phase_fn(2 * spec.xi, spec.independence, rng.child("F", a));
                draw.ops.push_back(std::move(op));
            }
            break;
        }
        case Variant::PFC: {
            DrawOp c;
            c.kind = DrawOp::Kind::dense;
            c.layer = "C";
            c.qubits = all_qubits(spec.n);
            auto crng = rng.child("C");
            c.dense = sample_clifford(spec.n, crng).m;
            DrawOp f;
            f.kind = DrawOp::Kind::phase;
            f.layer = "F";
            f.qubits = all_qubits(spec.n);
            f.phase = sample_phase_fn(spec.n, spec.independence, rng.child("F"));
            DrawOp p;
            p.kind = DrawOp::Kind::perm;
            p.layer = "P";
            if (spec.n > 3)
                throw std::length_error("PFC: exact permutation sampling limited to n <= 3");
            uint64_t d = uint64_t(1) << spec.n;
            p.perm.resize(d);
            for (uint64_t i = 0; i < d; ++i) p.perm[i] = i;
            auto prng = rng.child("P");
            for (uint64_t i = d - 1; i > 0; --i)
                std::swap(p.perm[i], p.perm[prng.below(i + 1)]);
            draw.ops.push_back(std::move(c));
            draw.ops.push_back(std::move(f));
            draw.ops.push_back(std::move(p));
            break;
        }
        case Variant::LRFC: {
            if (spec.n % 2 != 0) throw std::invalid_argument("LRFC: n must be even");
            int h = spec.n / 2;
            auto left = patch_qubits(0, h), right = patch_qubits(1, h);
            DrawOp c;
            c.kind = DrawOp::Kind::dense;
            c.layer = "C";
            c.qubits = all_qubits(spec.n);
            auto crng = rng.child("C");
            c.dense = sample_clifford(spec.n, crng).m;
            DrawOp f;
            f.kind = DrawOp::Kind::phase;
            f.layer = "F";
            f.qubits = all_qubits(spec.n);
            f.phase = sample_phase_fn(spec.n, spec.independence, rng.child("F"));
            DrawOp sr;
            sr.kind = DrawOp::Kind::shuffle;
            sr.layer = "S_R";
            sr.control = left;
            sr.target = right;
            sr.shuffle = sample_shuffle_fn(h, spec.independence, rng.child("hR"));
            DrawOp sl;
            sl.kind = DrawOp::Kind::shuffle;
            sl.layer = "S_L";
            sl.control = right;
            sl.target = left;
            sl.shuffle = sample_shuffle_fn(h, spec.independence, rng.child("hL"));
            draw.ops.push_back(std::move(c));
            draw.ops.push_back(std::move(f));
            draw.ops.push_back(std::move(sr));
            draw.ops.push_back(std::move(sl));
            break;
        }
        case Variant::BlockedLRFC: {
            check_blocked(spec);
            int m = spec.n / spec.xi;
            // U = S_o F_e F_o S_e C_o, applied right to left
            for (int a = 1; a < m; a += 2) {
                DrawOp c;
                c.kind = DrawOp::Kind::dense;
                c.layer = "C_o";
                c.qubits = patch_qubits(a, spec.xi);
                auto crng = rng.child("C", a);
                c.dense = sample_clifford(spec.xi, crng).m;
                draw.ops.push_back(std::move(c));
            }
            for (int a : odd_pair_starts(m)) {
                DrawOp op;
                op.kind = DrawOp::Kind::shuffle;
                op.layer = "S_e";
                op.control = patch_qubits(a, spec.xi);
                op.target = patch_qubits(a + 1, spec.xi);
                op.shuffle = sample_shuffle_fn(spec.xi, spec.independence, rng.child("Se", a));
                draw.ops.push_back(std::move(op));
            }
            for (int a : odd_pair_starts(m)) {
                DrawOp op;
                op.kind = DrawOp::Kind::phase;
                op.layer = "F_o";
                op.qubits = block_qubits(a, spec.xi);
                op.phase = sample_phase_fn(2 * spec.xi, spec.independence, rng.child("Fo", a));
                draw.ops.push_back(std::move(op));
            }
            for (int a : even_pair_starts(m)) {
                DrawOp op;
                op.kind = DrawOp::Kind::phase;
                op.layer = "F_e";
                op.qubits = block_qubits(a, spec.xi);
                op.phase = sample_phase_fn(2 * spec.xi, spec.independence, rng.child("Fe", a));
                draw.ops.push_back(std::move(op));
            }
            for (int a : even_pair_starts(m)) {
                DrawOp op;
                op.kind = DrawOp::Kind::shuffle;
                op.layer = "S_o";
                op.control = patch_qubits(a, spec.xi);
                op.target = patch_qubits(a + 1, spec.xi);
                op.shuffle = sample_shuffle_fn(spec.xi, spec.independence, rng.child("So", a));
                draw.ops.push_back(std::move(op));
            }
            break;
        }
        case Variant::AmplifiedBlockedLRFC: {
            check_blocked(spec);
            if (spec.p < 1) throw std::invalid_argument("AmplifiedBlockedLRFC: p >= 1");
            int m = spec.n / spec.xi;
            // U = (LRFC)^p_e (LRFC)^p_o: odd-pair blocks first
            for (int a : odd_pair_starts(m))
                for (int r = 0; r < spec.p; ++r)
                    emit_lrfc_block(draw, "odd", a, spec.xi, spec.independence,
                                    rng.child("blk_o/" + std::to_string(a), r));
            for (int a : even_pair_starts(m))
                for (int r = 0; r < spec.p; ++r)
                    emit_lrfc_block(draw, "even", a, spec.xi, spec.independence,
                                    rng.child("blk_e/" + std::to_string(a), r));
            break;
        }
        case Variant::Haar: {
            DrawOp op;
            op.kind = DrawOp::Kind::dense;
            op.layer = "Haar";
            op.qubits = all_qubits(spec.n);
            auto hrng = rng.child("haar");
            op.dense = sample_haar_unitary(1 << spec.n, hrng).m;
            draw.ops.push_back(std::move(op));
            break;
        }
        case Variant::Composed: {
            if (spec.factors.empty())
                throw std::invalid_argument("Composed: needs at least one factor");
            for (auto& f : spec.factors)
                if (f.n != spec.factors[0].n)
                    throw std::invalid_argument("Composed: mismatched n");
            // U = U_1 U_2 ... U_t applies the last factor first
            for (int i = int(spec.factors.size()) - 1; i >= 0; --i) {
                auto sub = sample_draw_stream(spec.factors[i], rng.child("factor", i));
                for (auto& op : sub.ops) draw.ops.push_back(std::move(op));
            }
            break;
        }
    }
    return draw;
}

}  // namespace detail

inline EnsembleDraw sample_draw(const EnsembleSpec& spec, const SampleHandle& handle) {
    return detail::sample_draw_stream(spec, handle.stream());
}

inline bool is_state_variant(Variant v) {
    return v == Variant::RandomPhase || v == Variant::BlockedPhase || v == Variant::Haar;
}

inline StateVec initial_state(const EnsembleSpec& spec) {
    return spec.variant == Variant::Haar ? StateVec::zero_state(spec.n)
                                         : StateVec::plus_state(spec.n);
}

inline StateVec state_from_draw(const EnsembleSpec& spec, const EnsembleDraw& draw) {
    StateVec s = initial_state(spec);
    apply_draw(draw, s);
    return s;
}

inline StateVec sample_state(const EnsembleSpec& spec, const SampleHandle& handle) {
    if (!is_state_variant(spec.variant))
        throw std::invalid_argument("sample_state: not a state-producing variant");
    if (spec.n > 12) throw std::length_error("sample_state: n <= 12");
    return state_from_draw(spec, sample_draw(spec, handle));
}

inline DenseOp unitary_from_draw(const EnsembleSpec& spec, const EnsembleDraw& draw) {
    if (spec.n > 6) throw std::length_error("dense unitary output limited to n <= 6");
    int64_t d = int64_t(1) << spec.n;
    Mat u(d, d);
    for (int64_t x = 0; x < d; ++x) {
        StateVec s{spec.n, Vec::Zero(d)};
        s.amps(x) = 1.0;
        apply_draw(draw, s);
        u.col(x) = s.amps;
    }
    return DenseOp{int(d), std::move(u)};
}

inline DenseOp sample_unitary(const EnsembleSpec& spec, const SampleHandle& handle) {
    return unitary_from_draw(spec, sample_draw(spec, handle));
}

inline EnsembleSpec compose(const std::vector<EnsembleSpec>& specs) {
    if (specs.empty()) throw std::invalid_argument("compose: empty factor list");
    EnsembleSpec s;
    s.variant = Variant::Composed;
    s.n = specs[0].n;
    s.factors = specs;
    for (auto& f : specs)
        if (f.n != s.n) throw std::invalid_argument("compose: mismatched n");
    return s;
}

// ---- exhaustive enumeration of phase-variant randomness ------------------

// number of random bits behind one draw of a phase-state spec
inline int draw_space_bits(const EnsembleSpec& spec) {
    auto fn_bits = [&](int w) {
        return spec.independence.mode == IndependenceMode::exact_function
                   ? (1 << w)
                   : w * spec.independence.k;
    };
    if (spec.variant == Variant::RandomPhase) return fn_bits(spec.n);
    if (spec.variant == Variant::BlockedPhase) {
        detail::check_blocked(spec);
        int m = spec.n / spec.xi;
        int pairs = int(detail::even_pair_starts(m).size() + detail::odd_pair_starts(m).size());
        return pairs * fn_bits(2 * spec.xi);
    }
    throw std::invalid_argument("draw_space_bits: not an enumerable phase variant");
}

// the draw obtained by substituting the bits of `index` for the random stream
inline EnsembleDraw draw_at(const EnsembleSpec& spec, uint64_t index) {
    int bits = draw_space_bits(spec);
    if (bits > 40) throw std::length_error("draw_at: randomness space too large");
    auto take_fn = [&](int w) {
        PhaseFn f;
        f.w = w;
        if (spec.independence.mode == IndependenceMode::exact_function) {
            f.table.resize(size_t(1) << w);
            for (auto& b : f.table) {
                b = int(index & 1);
                index >>= 1;
            }
        } else {
            f.exact = false;
            std::vector<uint64_t> coeffs(spec.independence.k);
            for (auto& c : coeffs) {
                c = index & ((uint64_t(1) << w) - 1);
                index >>= w;
            }
            f.seed = make_seed(field_spec(w), coeffs);
        }
        return f;
    };
    EnsembleDraw draw;
    if (spec.variant == Variant::RandomPhase) {
        DrawOp op;
        op.kind = DrawOp::Kind::phase;
        op.layer = "F";
        op.qubits = detail::all_qubits(spec.n);
        op.phase = take_fn(spec.n);
        draw.ops.push_back(std::move(op));
        return draw;
    }
    int m = spec.n / spec.xi;
    for (int a : detail::odd_pair_starts(m)) {
        DrawOp op;
        op.kind = DrawOp::Kind::phase;
        op.layer = "F_o";
        op.qubits = detail::block_qubits(a, spec.xi);
        op.phase = take_fn(2 * spec.xi);
        draw.ops.push_back(std::move(op));
    }
    for (int a : detail::even_pair_starts(m)) {
        DrawOp op;
        op.kind = DrawOp::Kind::phase;
        op.layer = "F_e";
        op.qubits = detail::block_qubits(a, spec.xi);
        op.phase = take_fn(2 * spec.xi);
        draw.ops.push_back(std::move(op));
    }
    return draw;
}

// ---- JSON serialization --------------------------------------------------

inline std::string variant_name(Variant v) {
    switch (v) {
        case Variant::RandomPhase: return "RandomPhase";
        case Variant::BlockedPhase: return "BlockedPhase";
        case Variant::PFC: return "PFC";
        case Variant::LRFC: return "LRFC";
        case Variant::BlockedLRFC: return "BlockedLRFC";
        case Variant::AmplifiedBlockedLRFC: return "AmplifiedBlockedLRFC";
        case Variant::Haar: return "Haar";
        case Variant::Composed: return "Composed";
    }
    return "?";
}

inline nlohmann::json to_json(const EnsembleSpec& spec) {
    nlohmann::json j;
    j["variant"] = variant_name(spec.variant);
    j["n"] = spec.n;
    if (spec.xi) j["xi"] = spec.xi;
    if (spec.variant == Variant::AmplifiedBlockedLRFC) j["p"] = spec.p;
    j["independence"] =
        spec.independence.mode == IndependenceMode::exact_function
            ? nlohmann::json{{"mode", "exact_function"}}
            : nlohmann::json{{"mode", "kwise"}, {"k", spec.independence.k}};
    if (spec.variant == Variant::Composed) {
        j["factors"] = nlohmann::json::array();
        for (auto& f : spec.factors) j["factors"].push_back(to_json(f));
    }
    return j;
}

inline EnsembleSpec spec_from_json(const nlohmann::json& j) {
    EnsembleSpec s;
    std::string v = j.at("variant");
    if (v == "RandomPhase") s.variant = Variant::RandomPhase;
    else if (v == "BlockedPhase") s.variant = Variant::BlockedPhase;
    else if (v == "PFC") s.variant = Variant::PFC;
    else if (v == "LRFC") s.variant = Variant::LRFC;
    else if (v == "BlockedLRFC") s.variant = Variant::BlockedLRFC;
    else if (v == "AmplifiedBlockedLRFC") s.variant = Variant::AmplifiedBlockedLRFC;
    else if (v == "Haar") s.variant = Variant::Haar;
    else if (v == "Composed") s.variant = Variant::Composed;
    else throw std::invalid_argument("unknown ensemble variant: " + v);
    s.n = j.at("n");
    s.xi = j.value("xi", 0);
    s.p = j.value("p", 1);
    if (j.contains("independence")) {
        std::string mode = j["independence"].at("mode");
        if (mode == "kwise") {
            s.independence.mode = IndependenceMode::kwise;
            s.independence.k = j["independence"].at("k");
        } else if (mode != "exact_function") {
            throw std::invalid_argument("unknown independence mode: " + mode);
        }
    }
    if (j.contains("factors"))
        for (auto& f : j["factors"]) s.factors.push_back(spec_from_json(f));
    return s;
}

}  // namespace qdes
