#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "dnlslab/grid.hpp"
#include "dnlslab/symbol.hpp"

namespace dnlslab {

// ---------------------------------------------------------------------------
// Numerical evaluation of Lambda_n(M_n; f_1,...,f_n): the discrete constrained
// sum (1/L)^(n-1) * sum_{k_1+...+k_n=0} M_n(xi) * prod_j c_j(xi_{k_j}), where
// c_j is fhat_j for plain slots and conj(fhat_j(-xi)) for conjugated slots.
// With the transform scaling of grid.hpp this reproduces Lambda_2(1;f) =
// ||f||_2^2 and Lambda_n(1;f) = int |f|^n exactly (alias-free).
// ---------------------------------------------------------------------------

// "f, fbar, f, fbar, ...": odd slots plain, even slots conjugated.
struct ConjugationPattern {
    int order = 2;
    bool conjugated(int slot_1based) const { return slot_1based % 2 == 0; }
};

inline ConjugationPattern alternating_pattern(int order) { return ConjugationPattern{order}; }

struct LambdaContext {
    Multiplier m = identity_multiplier();   // binds the opaque m(.) factors
    double support_threshold = 1e-14;       // relative cutoff for active modes in direct sums
    double term_budget = 2.5e9;             // max lattice points per direct term
};

namespace lambda_detail {

// dense per-slot coefficients indexed by k + M/2, k in [-M/2, M/2); the
// Nyquist entry (k = -M/2) has no mirror partner and is excluded.
inline std::vector<cplx> slot_coefficients(const Field& f, bool conj) {
    const Field g = to_fourier(f);
    const int M = g.grid.modes;
    std::vector<cplx> c(M, cplx(0.0, 0.0));
    for (int k = -M / 2 + 1; k < M / 2; ++k) {
        cplx v = conj ? std::conj(g.values[g.grid.index_of_mode(-k)]) : g.values[g.grid.index_of_mode(k)];
        c[k + M / 2] = v;
    }
    return c;
}

struct ActiveSlot {
    std::vector<int> modes;
    std::vector<cplx> coeffs;
};

inline ActiveSlot active_modes(const std::vector<cplx>& dense, int M, double rel_threshold) {
    double peak = 0.0;
    for (const cplx& z : dense) peak = std::max(peak, std::abs(z));
    ActiveSlot out;
    const double cut = rel_threshold * peak;
    for (int k = -M / 2 + 1; k < M / 2; ++k) {
        const cplx& z = dense[k + M / 2];
        if (std::abs(z) > cut) {
            out.modes.push_back(k);
            out.coeffs.push_back(z);
        }
    }
    return out;
}

// tabulated m(c * xi_d) over the integer sum lattice d in [-range, range]
struct MTable {
    std::vector<int> coeffs;
    int power = 1;
    int range = 0;
    std::vector<cplx> values;

    cplx value(long long d) const {
        cplx v = values[static_cast<size_t>(d + range)];
        cplx out = v;
        for (int q = 1; q < power; ++q) out *= v;
        return out;
    }
};

struct PolyEval {
    std::vector<int> coeffs;  // reduced against nothing; dot with xi directly
};

// per-term machinery for the direct sum: single-variable factors folded into
// slot coefficient copies, multi-variable factors evaluated on the lattice
struct DirectTerm {
    cplx coeff;
    std::vector<std::vector<cplx>> slot_dense;  // decorated copies
    std::vector<PolyEval> multi_polys;
    std::vector<MTable> multi_ms;
};

inline bool single_variable(const std::vector<int>& c, int& var) {
    int found = -1;
    for (size_t i = 0; i < c.size(); ++i) {
        if (c[i] != 0) {
            if (found >= 0) return false;
            found = static_cast<int>(i);
        }
    }
    if (found < 0) return false;
    var = found;
    return true;
}

}  // namespace lambda_detail

// Exact discrete constrained sum; the reference evaluator ("oracle") for the
// planned path. Cost is (active modes)^(n-1) per term and guarded by
// ctx.term_budget.
inline cplx direct_lambda(const SymbolExpr& e, const std::vector<Field>& fields, const ConjugationPattern& pattern,
                          const LambdaContext& ctx = {}) {
    using namespace lambda_detail;
    const int n = e.order;
    if (n < 2 || n > 8 || n % 2 != 0) throw std::invalid_argument("direct_lambda: order must be 2, 4, 6 or 8");
    if (static_cast<int>(fields.size()) != n) throw std::invalid_argument("direct_lambda: field count mismatch");
    if (pattern.order != n) throw std::invalid_argument("direct_lambda: pattern order mismatch");
    const SpectralGrid& grid = fields.front().grid;
    for (const Field& f : fields)
        if (f.grid != grid) throw std::invalid_argument("direct_lambda: mismatched grids");

    const int M = grid.modes;
    const double dxi = 2.0 * kPi / grid.length;
    std::vector<std::vector<cplx>> base(n);
    for (int s = 0; s < n; ++s) base[s] = slot_coefficients(fields[s], pattern.conjugated(s + 1));

    cplx total(0.0, 0.0);
    for (const SymbolTerm& term : e.terms) {
        DirectTerm dt;
        dt.coeff = cplx(term.coeff.re().to_double(), term.coeff.im().to_double());
        dt.slot_dense = base;

        for (const LinearForm& p : term.polys) {
            LinearForm r = p.reduced();  // canonical within the constrained sum
            int var = -1;
            if (r.is_zero()) {
                dt.coeff = 0.0;
            } else if (single_variable(r.c, var)) {
                for (int k = -M / 2 + 1; k < M / 2; ++k)
                    dt.slot_dense[var][k + M / 2] *= r.c[var] * dxi * k;
            } else {
                dt.multi_polys.push_back(PolyEval{r.c});
            }
        }
        for (const MFactor& mf : term.mfactors) {
            LinearForm r = mf.arg.reduced();
            if (r.is_zero()) continue;  // m(0) = 1
            int var = -1;
            if (single_variable(r.c, var)) {
                for (int k = -M / 2 + 1; k < M / 2; ++k) {
                    cplx mv = ctx.m.symbol(r.c[var] * dxi * k);
                    cplx acc = mv;
                    for (int q = 1; q < mf.power; ++q) acc *= mv;
                    dt.slot_dense[var][k + M / 2] *= acc;
                }
            } else {
                MTable tab;
                tab.coeffs = r.c;
                tab.power = mf.power;
                long long range = 0;
                for (int c : r.c) range += std::abs(c);
                tab.range = static_cast<int>(range * (M / 2));
                tab.values.resize(2 * tab.range + 1);
                for (long long d = -tab.range; d <= tab.range; ++d)
                    tab.values[static_cast<size_t>(d + tab.range)] = ctx.m.symbol(dxi * d);
                dt.multi_ms.push_back(std::move(tab));
            }
        }
        if (dt.coeff == cplx(0.0, 0.0)) continue;

        std::vector<ActiveSlot> act(n);
        double cost = 1.0;
        for (int s = 0; s < n; ++s) {
            act[s] = active_modes(dt.slot_dense[s], M, ctx.support_threshold);
            if (s + 1 < n) cost *= std::max<size_t>(1, act[s].modes.size());
        }
        if (cost > ctx.term_budget) throw std::runtime_error("direct_lambda: cost bound exceeded");

        std::vector<int> k(n, 0);
        cplx term_sum(0.0, 0.0);
        const auto& last_dense = dt.slot_dense[n - 1];
        // recursive sweep over slots 0..n-2, last slot forced by the constraint
        auto rec = [&](auto&& self, int depth, long long ksum, cplx prod) -> void {
            if (depth == n - 1) {
                long long kn = -ksum;
                if (kn <= -M / 2 || kn >= M / 2) return;
                cplx v = prod * last_dense[static_cast<size_t>(kn + M / 2)];
                if (v == cplx(0.0, 0.0)) return;
                k[n - 1] = static_cast<int>(kn);
                for (const PolyEval& p : dt.multi_polys) {
                    long long d = 0;
                    for (int i = 0; i < n; ++i) d += static_cast<long long>(p.coeffs[i]) * k[i];
                    v *= dxi * d;
                }
                for (const MTable& t : dt.multi_ms) {
                    long long d = 0;
                    for (int i = 0; i < n; ++i) d += static_cast<long long>(t.coeffs[i]) * k[i];
                    v *= t.value(d);
                }
                term_sum += v;
                return;
            }
            const ActiveSlot& a = act[depth];
            for (size_t i = 0; i < a.modes.size(); ++i) {
                k[depth] = a.modes[i];
                self(self, depth + 1, ksum + a.modes[i], prod * a.coeffs[i]);
            }
        };
        rec(rec, 0, 0, cplx(1.0, 0.0));
        total += dt.coeff * term_sum;
    }

    const double inv_l = 1.0 / grid.length;
    double scale = 1.0;
    for (int i = 0; i + 1 < n; ++i) scale *= inv_l;
    return total * scale;
}

// ---------------------------------------------------------------------------
// EvalPlan: tree-structured FFT evaluation of one separable term. Leaves are
// input slots with their pointwise multipliers; an internal node applies a
// multiplier to the Fourier transform of the product of its children; the
// root-level products are integrated over the box.
// ---------------------------------------------------------------------------

struct PlanNode {
    std::vector<int> slots;                       // 0-based leaf set of this node
    int eta_power = 0;                            // polynomial factor eta^p at the node
    long long eta_scale = 1;                      // accumulated integer scale c per poly factor
    std::vector<std::pair<int, int>> m_entries;   // (c, power): m(c*eta)^power
    std::vector<int> child_nodes;                 // indices into EvalPlan::nodes
    std::vector<int> child_leaves;                // leaf slots attached directly
};

struct LeafSpec {
    int eta_power = 0;
    long long eta_scale = 1;
    std::vector<std::pair<int, int>> m_entries;
};

struct EvalPlan {
    int order = 0;
    std::vector<LeafSpec> leaves;       // size n
    std::vector<PlanNode> nodes;        // children precede parents
    std::vector<int> root_nodes;        // top-level node indices
    std::vector<int> root_leaves;       // top-level bare leaves
};

namespace lambda_detail {

// All rewritings of a linear form as c * xi_S modulo the hyperplane relation
// (adding t * (1,...,1) is free on Gamma_n). Complete: the coefficient vector
// must be two-valued {t, t+c}.
struct Rewrite {
    long long scale = 1;
    std::vector<int> slots;  // 0-based
};

inline std::vector<Rewrite> subset_rewrites(const LinearForm& f) {
    std::vector<Rewrite> out;
    std::set<int> values(f.c.begin(), f.c.end());
    for (int v : values) {
        std::vector<int> slots;
        int c0 = 0;
        bool ok = true;
        for (size_t i = 0; i < f.c.size(); ++i) {
            int b = f.c[i] - v;
            if (b == 0) continue;
            if (c0 == 0) c0 = b;
            if (b != c0) {
                ok = false;
                break;
            }
            slots.push_back(static_cast<int>(i));
        }
        if (!ok || slots.empty()) continue;
        if (slots.size() == f.c.size()) continue;  // multiple of the full sum: zero on Gamma_n
        out.push_back(Rewrite{c0, slots});
    }
    std::sort(out.begin(), out.end(), [](const Rewrite& a, const Rewrite& b) {
        if (a.slots.size() != b.slots.size()) return a.slots.size() < b.slots.size();
        return a.slots < b.slots;
    });
    return out;
}

inline bool laminar_pair(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    if (inter.empty()) return true;
    return inter.size() == a.size() || inter.size() == b.size();
}

inline bool laminar_family(const std::vector<std::vector<int>>& sets) {
    for (size_t i = 0; i < sets.size(); ++i)
        for (size_t j = i + 1; j < sets.size(); ++j)
            if (!laminar_pair(sets[i], sets[j])) return false;
    return true;
}

}  // namespace lambda_detail

// Search complement rewritings of every multi-index factor for a laminar
// family; returns the nested-FFT plan, or nullopt when no rewriting works
// (e.g. the xi_{12} xi_{13} xi_{14} term of M4).
inline std::optional<EvalPlan> compile_plan(const SymbolTerm& term, int order) {
    using namespace lambda_detail;
    const int n = order;

    struct Need {
        bool is_m = false;
        int power = 1;  // m-factor power
        std::vector<Rewrite> options;
    };
    std::vector<Need> needs;
    EvalPlan plan;
    plan.order = n;
    plan.leaves.resize(n);

    for (const LinearForm& p : term.polys) {
        LinearForm r = p.reduced();
        if (r.is_zero()) return std::nullopt;  // zero term; caller should have canonicalized
        std::vector<Rewrite> opts = subset_rewrites(p);
        if (opts.empty()) return std::nullopt;  // not expressible as c*xi_S (e.g. 2*xi1+xi2)
        if (opts.front().slots.size() == 1) {
            const Rewrite& w = opts.front();
            plan.leaves[w.slots[0]].eta_power += 1;
            plan.leaves[w.slots[0]].eta_scale *= w.scale;
        } else {
            needs.push_back(Need{false, 1, std::move(opts)});
        }
    }
    for (const MFactor& mf : term.mfactors) {
        LinearForm r = mf.arg.reduced();
        if (r.is_zero()) continue;  // m(0) = 1
        std::vector<Rewrite> opts = subset_rewrites(mf.arg);
        if (opts.empty()) return std::nullopt;
        if (opts.front().slots.size() == 1) {
            const Rewrite& w = opts.front();
            plan.leaves[w.slots[0]].m_entries.emplace_back(static_cast<int>(w.scale), mf.power);
        } else {
            needs.push_back(Need{true, mf.power, std::move(opts)});
        }
    }

    // exhaustive search over the (small) product of candidate rewritings
    std::vector<int> choice(needs.size(), 0);
    bool found = needs.empty();
    while (!found) {
        std::vector<std::vector<int>> sets;
        for (size_t i = 0; i < needs.size(); ++i) sets.push_back(needs[i].options[choice[i]].slots);
        if (laminar_family(sets)) {
            found = true;
            break;
        }
        size_t pos = 0;
        while (pos < needs.size()) {
            if (++choice[pos] < static_cast<int>(needs[pos].options.size())) break;
            choice[pos] = 0;
            ++pos;
        }
        if (pos == needs.size()) return std::nullopt;  // exhausted: not separable
    }

    // merge factors that picked the same set into single nodes
    std::map<std::vector<int>, PlanNode> by_set;
    for (size_t i = 0; i < needs.size(); ++i) {
        const Rewrite& w = needs[i].options[choice[i]];
        PlanNode& node = by_set[w.slots];
        node.slots = w.slots;
        if (needs[i].is_m)
            node.m_entries.emplace_back(static_cast<int>(w.scale), needs[i].power);
        else {
            node.eta_power += 1;
            node.eta_scale *= w.scale;
        }
    }

    // assemble the forest: parents are the smallest strict supersets
    std::vector<PlanNode> nodes;
    for (auto& [s, node] : by_set) nodes.push_back(std::move(node));
    std::sort(nodes.begin(), nodes.end(),
              [](const PlanNode& a, const PlanNode& b) { return a.slots.size() < b.slots.size(); });
    std::vector<int> parent(nodes.size(), -1);
    for (size_t i = 0; i < nodes.size(); ++i) {
        for (size_t j = i + 1; j < nodes.size(); ++j) {
            if (nodes[j].slots.size() <= nodes[i].slots.size()) continue;
            if (std::includes(nodes[j].slots.begin(), nodes[j].slots.end(), nodes[i].slots.begin(),
                              nodes[i].slots.end())) {
                parent[i] = static_cast<int>(j);
                break;
            }
        }
    }
    std::vector<std::vector<bool>> leaf_covered(nodes.size(), std::vector<bool>(n, false));
    for (size_t i = 0; i < nodes.size(); ++i) {
        if (parent[i] >= 0) {
            nodes[parent[i]].child_nodes.push_back(static_cast<int>(i));
            for (int s : nodes[i].slots) leaf_covered[parent[i]][s] = true;
        }
    }
    std::vector<bool> covered_at_root(n, false);
    for (size_t i = 0; i < nodes.size(); ++i) {
        for (int s : nodes[i].slots)
            if (!leaf_covered[i][s]) {
                bool inside_child = false;
                for (int cn : nodes[i].child_nodes)
                    inside_child = inside_child ||
                                   std::binary_search(nodes[cn].slots.begin(), nodes[cn].slots.end(), s);
                if (!inside_child) nodes[i].child_leaves.push_back(s);
            }
        if (parent[i] < 0) {
            plan.root_nodes.push_back(static_cast<int>(i));
            for (int s : nodes[i].slots) covered_at_root[s] = true;
        }
    }
    for (int s = 0; s < n; ++s)
        if (!covered_at_root[s]) plan.root_leaves.push_back(s);
    plan.nodes = std::move(nodes);
    return plan;
}

namespace lambda_detail {

struct PlannedWorkspace {
    SpectralGrid big;
    std::vector<Field> plain_leaves;  // upsampled physical base fields per slot
};

inline PlannedWorkspace make_workspace(const std::vector<Field>& fields, const ConjugationPattern& pattern) {
    const SpectralGrid& g = fields.front().grid;
    const int n = static_cast<int>(fields.size());
    PlannedWorkspace ws;
    ws.big = SpectralGrid{fft::good_size(n * g.modes + 2), g.length};
    ws.plain_leaves.reserve(n);
    for (int s = 0; s < n; ++s) {
        std::vector<cplx> dense = slot_coefficients(fields[s], pattern.conjugated(s + 1));
        // dense holds hat values indexed by k + M/2; rebuild a small Field
        std::vector<cplx> hat(g.modes, cplx(0.0, 0.0));
        for (int k = -g.modes / 2 + 1; k < g.modes / 2; ++k) hat[g.index_of_mode(k)] = dense[k + g.modes / 2];
        Field f(g, std::move(hat), Rep::fourier);
        ws.plain_leaves.push_back(to_physical(upsample(f, ws.big.modes)));
    }
    return ws;
}

// The factor value is eta_scale * eta^eta_power: eta_scale is already the
// product of the individual rewriting scales c, applied once.
inline void apply_spec_decorations(std::vector<cplx>& hat, const SpectralGrid& g, const LeafSpec& spec,
                                   const Multiplier& m) {
    for (int k = -g.modes / 2 + 1; k < g.modes / 2; ++k) {
        double xi_k = g.freq_of_mode(k);
        cplx v = hat[g.index_of_mode(k)];
        if (spec.eta_power > 0) {
            v *= static_cast<double>(spec.eta_scale);
            for (int p = 0; p < spec.eta_power; ++p) v *= xi_k;
        }
        for (auto [c, pw] : spec.m_entries) {
            cplx mv = m.symbol(c * xi_k);
            for (int q = 0; q < pw; ++q) v *= mv;
        }
        hat[g.index_of_mode(k)] = v;
    }
}

inline cplx planned_term_value(const EvalPlan& plan, const SymbolTerm& term, const std::vector<Field>& fields,
                               const ConjugationPattern& pattern, const PlannedWorkspace& ws, const Multiplier& m) {
    const SpectralGrid& g = fields.front().grid;
    const int n = plan.order;

    auto leaf_field = [&](int slot) -> Field {
        const LeafSpec& spec = plan.leaves[slot];
        if (spec.eta_power == 0 && spec.m_entries.empty()) return ws.plain_leaves[slot];
        std::vector<cplx> dense = slot_coefficients(fields[slot], pattern.conjugated(slot + 1));
        std::vector<cplx> hat(g.modes, cplx(0.0, 0.0));
        for (int k = -g.modes / 2 + 1; k < g.modes / 2; ++k) hat[g.index_of_mode(k)] = dense[k + g.modes / 2];
        apply_spec_decorations(hat, g, spec, m);
        return to_physical(upsample(Field(g, std::move(hat), Rep::fourier), ws.big.modes));
    };

    std::vector<Field> node_out(plan.nodes.size());
    for (size_t i = 0; i < plan.nodes.size(); ++i) {
        const PlanNode& node = plan.nodes[i];
        Field prod = Field::zero(ws.big);
        std::fill(prod.values.begin(), prod.values.end(), cplx(1.0, 0.0));
        for (int cn : node.child_nodes)
            for (int j = 0; j < ws.big.modes; ++j) prod.values[j] *= node_out[cn].values[j];
        for (int s : node.child_leaves) {
            Field lf_ = leaf_field(s);
            for (int j = 0; j < ws.big.modes; ++j) prod.values[j] *= lf_.values[j];
        }
        Multiplier node_mult{[&node, &m](double eta) {
                                 cplx v(1.0, 0.0);
                                 if (node.eta_power > 0) {
                                     v *= static_cast<double>(node.eta_scale);
                                     for (int p = 0; p < node.eta_power; ++p) v *= eta;
                                 }
                                 for (auto [c, pw] : node.m_entries) {
                                     cplx mv = m.symbol(c * eta);
                                     for (int q = 0; q < pw; ++q) v *= mv;
                                 }
                                 return v;
                             },
                             "plan-node"};
        node_out[i] = apply_multiplier(node_mult, prod);
    }

    std::vector<cplx> acc(ws.big.modes, cplx(1.0, 0.0));
    for (int r : plan.root_nodes)
        for (int j = 0; j < ws.big.modes; ++j) acc[j] *= node_out[r].values[j];
    for (int s : plan.root_leaves) {
        Field lf_ = leaf_field(s);
        for (int j = 0; j < ws.big.modes; ++j) acc[j] *= lf_.values[j];
    }
    cplx integral(0.0, 0.0);
    for (const cplx& z : acc) integral += z;
    integral *= ws.big.spacing();
    (void)n;
    return cplx(term.coeff.re().to_double(), term.coeff.im().to_double()) * integral;
}

}  // namespace lambda_detail

// FFT evaluation through compiled plans, with direct constrained summation as
// the fallback for non-separable terms. Terms are evaluated independently and
// summed in a fixed order.
inline cplx planned_lambda(const SymbolExpr& e, const std::vector<Field>& fields, const ConjugationPattern& pattern,
                           const LambdaContext& ctx = {}) {
    using namespace lambda_detail;
    const int n = e.order;
    if (static_cast<int>(fields.size()) != n) throw std::invalid_argument("planned_lambda: field count mismatch");
    const SpectralGrid& grid = fields.front().grid;
    for (const Field& f : fields)
        if (f.grid != grid) throw std::invalid_argument("planned_lambda: mismatched grids");
    if (e.terms.empty()) return cplx(0.0, 0.0);

    PlannedWorkspace ws = make_workspace(fields, pattern);
    cplx total(0.0, 0.0);
    for (const SymbolTerm& t : e.terms) {
        auto plan = compile_plan(t, n);
        if (plan) {
            total += planned_term_value(*plan, t, fields, pattern, ws, ctx.m);
        } else {
            SymbolExpr single = SymbolExpr::zero(n);
            single.terms.push_back(t);
            total += direct_lambda(single, fields, pattern, ctx);
        }
    }
    return total;
}

// Lambda_n(M_n; w) with the single-field conjugation pattern.
inline cplx lambda_on_solution(const SymbolExpr& e, const Field& w, const LambdaContext& ctx = {}) {
    return planned_lambda(e, std::vector<Field>(e.order, w), alternating_pattern(e.order), ctx);
}

struct TimeIntegral {
    cplx value{0.0, 0.0};
    double error_estimate = 0.0;   // |Simpson(h) - Simpson(2h)| / 15 when available
    bool has_estimate = false;
    std::vector<cplx> integrand;   // per-snapshot values, for reporting
};

// Composite Simpson over equally spaced snapshot values.
inline TimeIntegral simpson_integrate(const std::vector<cplx>& values, double dt) {
    const size_t count = values.size();
    if (count < 3 || count % 2 == 0)
        throw std::invalid_argument("simpson_integrate: need an odd number (>= 3) of snapshots");
    auto simpson = [&](size_t stride) {
        cplx acc = values.front() + values[count - 1];
        for (size_t i = stride; i + stride < count; i += stride)
            acc += values[i] * ((i / stride) % 2 == 1 ? 4.0 : 2.0);
        return acc * (dt * static_cast<double>(stride) / 3.0);
    };
    TimeIntegral out;
    out.integrand = values;
    out.value = simpson(1);
    if ((count - 1) % 4 == 0 && count >= 5) {
        cplx coarse = simpson(2);
        out.error_estimate = std::abs(out.value - coarse) / 15.0;
        out.has_estimate = true;
    }
    return out;
}

}  // namespace dnlslab
