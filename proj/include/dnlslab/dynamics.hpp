#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dnlslab/conserved.hpp"
#include "dnlslab/grid.hpp"
#include "dnlslab/lambda.hpp"
#include "dnlslab/rng.hpp"

namespace dnlslab {

// ---------------------------------------------------------------------------
// Time evolution of the three IVPs, the gauge transform and the scaling map.
// ---------------------------------------------------------------------------

enum class EquationVariant { dnls_raw, dnls_gauged, quintic };

struct EquationKind {
    EquationVariant variant = EquationVariant::dnls_gauged;
    double lambda = 1.0;

    static EquationKind raw(double lambda) { return EquationKind{EquationVariant::dnls_raw, lambda}; }
    // the gauged equation has no free coupling (lambda scaled to 1)
    static EquationKind gauged() { return EquationKind{EquationVariant::dnls_gauged, 1.0}; }
    static EquationKind quintic_nls(double lambda) { return EquationKind{EquationVariant::quintic, lambda}; }
};

inline const char* variant_name(EquationVariant v) {
    switch (v) {
        case EquationVariant::dnls_raw: return "dnls_raw";
        case EquationVariant::dnls_gauged: return "dnls_gauged";
        default: return "quintic";
    }
}

struct SolverConfig {
    int modes = 256;
    double length = 100.0;
    double dt = 2.5e-4;
    double t_end = 1.0;
    int snapshot_stride = 10;
    EquationKind equation = EquationKind::gauged();
    double i_param_n = 16.0;  // N of the I-operator (for E_N diagnostics)
    double i_param_s = 0.75;
    double mu = 1.0;  // rescaling parameter, recorded

    SpectralGrid grid() const { return make_grid(modes, length); }
    // recorded stability margin c in dt <= c (L/M)^2
    double stability_margin() const {
        double h = length / modes;
        return dt / (h * h);
    }
    void validate() const {
        (void)grid();
        if (!(dt > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("SolverConfig: dt and t_end must be positive");
        if (snapshot_stride < 1) throw std::invalid_argument("SolverConfig: snapshot stride must be >= 1");
        if (!(i_param_n >= 1.0)) throw std::invalid_argument("SolverConfig: N >= 1 required");
        if (!(i_param_s > 2.0 / 3.0 && i_param_s < 1.0)) throw std::invalid_argument("SolverConfig: s in (2/3,1) required");
        if (!(mu > 0.0)) throw std::invalid_argument("SolverConfig: mu > 0 required");
        if (equation.variant == EquationVariant::dnls_gauged && equation.lambda != 1.0)
            throw std::invalid_argument("SolverConfig: the gauged equation has lambda = 1");
        if (stability_margin() > 50.0) throw std::invalid_argument("SolverConfig: dt violates the stability margin");
    }
};

// Nonlinear part of d/dt(state), dispersion excluded:
//   dnls_raw:    lambda * d_x(|u|^2 u)
//   dnls_gauged: -w^2 d_x(wbar) + (i/2)|w|^4 w
//   quintic:     i*lambda |v|^4 v
// Products are formed pointwise on a 3x zero-padded grid (full dealiasing for
// degree 5) and truncated back.
inline Field nonlinearity(const EquationKind& kind, const Field& f) {
    const SpectralGrid g = f.grid;
    const int big = fft::good_size(3 * g.modes);
    Field fhat = to_fourier(f);
    if (!fhat.finite()) throw std::runtime_error("nonlinearity: non-finite state");
    Field u = to_physical(upsample(fhat, big));
    Field out_big = Field::zero(u.grid);

    switch (kind.variant) {
        case EquationVariant::dnls_raw: {
            for (int j = 0; j < big; ++j) {
                cplx v = u.values[j];
                out_big.values[j] = kind.lambda * std::norm(v) * v;
            }
            Field down = downsample(out_big, g);
            return apply_multiplier(derivative_multiplier(), down);
        }
        case EquationVariant::dnls_gauged: {
            Field ux = to_physical(upsample(apply_multiplier(derivative_multiplier(), fhat), big));
            for (int j = 0; j < big; ++j) {
                cplx w = u.values[j];
                cplx wxbar = std::conj(ux.values[j]);
                double a2 = std::norm(w);
                out_big.values[j] = -w * w * wxbar + cplx(0.0, 0.5) * a2 * a2 * w;
            }
            return downsample(out_big, g);
        }
        default: {
            for (int j = 0; j < big; ++j) {
                cplx v = u.values[j];
                double a2 = std::norm(v);
                out_big.values[j] = cplx(0.0, kind.lambda) * a2 * a2 * v;
            }
            return downsample(out_big, g);
        }
    }
}

namespace dyn_detail {

struct Stepper {
    SpectralGrid grid;
    EquationKind kind;
    double dt;
    std::vector<cplx> e_half, e_full;  // exact dispersion factors e^{-i xi^2 dt/2}, e^{-i xi^2 dt}

    Stepper(const SpectralGrid& g, const EquationKind& k, double dt_) : grid(g), kind(k), dt(dt_) {
        e_half.resize(g.modes);
        e_full.resize(g.modes);
        for (int j = 0; j < g.modes; ++j) {
            double xi2 = g.freq(j) * g.freq(j);
            e_half[j] = std::exp(cplx(0.0, -xi2 * dt / 2.0));
            e_full[j] = std::exp(cplx(0.0, -xi2 * dt));
        }
    }

    std::vector<cplx> nl(const std::vector<cplx>& hat) const {
        Field f(grid, hat, Rep::fourier);
        return to_fourier(nonlinearity(kind, f)).values;
    }

    // integrating-factor RK4: exact e^{-i xi^2 t} dispersion, classical RK4 on
    // the transformed nonlinearity
    std::vector<cplx> step(const std::vector<cplx>& v) const {
        const int M = grid.modes;
        std::vector<cplx> n1 = nl(v);
        std::vector<cplx> tmp(M);

        for (int j = 0; j < M; ++j) tmp[j] = e_half[j] * (v[j] + 0.5 * dt * n1[j]);
        std::vector<cplx> n2 = nl(tmp);

        for (int j = 0; j < M; ++j) tmp[j] = e_half[j] * v[j] + 0.5 * dt * n2[j];
        std::vector<cplx> n3 = nl(tmp);

        for (int j = 0; j < M; ++j) tmp[j] = e_full[j] * v[j] + dt * e_half[j] * n3[j];
        std::vector<cplx> n4 = nl(tmp);

        std::vector<cplx> out(M);
        for (int j = 0; j < M; ++j)
            out[j] = e_full[j] * v[j] +
                     dt / 6.0 * (e_full[j] * n1[j] + 2.0 * e_half[j] * (n2[j] + n3[j]) + n4[j]);
        return out;
    }
};

}  // namespace dyn_detail

// One integrating-factor RK4 step; for lambda = 0 data paths (zero
// nonlinearity) the step reduces to the exact free propagator.
inline Field step(const Field& f, double dt, const EquationKind& kind) {
    dyn_detail::Stepper st(f.grid, kind, dt);
    Field fhat = to_fourier(f);
    Field out(f.grid, st.step(fhat.values), Rep::fourier);
    double before = linf_norm(fhat);
    double after = linf_norm(out);
    if (after > 10.0 * std::max(before, 1e-300)) throw std::runtime_error("step: blow-up guard tripped");
    return f.rep == Rep::physical ? to_physical(out) : out;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<Field> snapshots;  // fourier representation
    SolverConfig config;
    std::vector<double> mass_series, energy_series, energy_n_series;
    int tail_warnings = 0;

    double snapshot_dt() const { return config.dt * config.snapshot_stride; }
};

inline constexpr double kTailTolerance = 1e-10;

// Deterministic evolution with per-snapshot diagnostics (mass, E, E_N).
// The blow-up guard aborts; a violated tail condition at a snapshot is
// recorded (warn), only the initial data must satisfy it.
inline Trajectory evolve(const SolverConfig& config, const Field& f0) {
    config.validate();
    if (f0.grid != config.grid()) throw std::invalid_argument("evolve: initial data grid mismatch");
    if (relative_tail_mass(f0) >= kTailTolerance)
        throw std::invalid_argument("evolve: initial data violates the boundary-tail condition");

    dyn_detail::Stepper st(f0.grid, config.equation, config.dt);
    Trajectory traj;
    traj.config = config;

    const long long steps = std::llround(config.t_end / config.dt);
    if (steps < 1 || steps % config.snapshot_stride != 0)
        throw std::invalid_argument("evolve: t_end must be a whole (positive) number of snapshot strides");
    Field cur = to_fourier(f0);
    double linf_prev = linf_norm(cur);

    auto record = [&](long long step_idx) {
        traj.times.push_back(step_idx * config.dt);
        traj.snapshots.push_back(cur);
        traj.mass_series.push_back(mass(cur));
        EnergyBreakdown eb = energy_E(cur);
        traj.energy_series.push_back(eb.total);
        traj.energy_n_series.push_back(energy_EN(cur, config.i_param_n, config.i_param_s).total);
        if (relative_tail_mass(cur) >= kTailTolerance) ++traj.tail_warnings;
    };
    record(0);

    for (long long i = 1; i <= steps; ++i) {
        cur = Field(f0.grid, st.step(cur.values), Rep::fourier);
        double linf_cur = linf_norm(cur);
        if (!std::isfinite(linf_cur) || linf_cur > 10.0 * std::max(linf_prev, 1e-300))
            throw std::runtime_error("evolve: blow-up guard tripped at t=" + std::to_string(i * config.dt));
        linf_prev = linf_cur;
        if (i % config.snapshot_stride == 0) record(i);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Gauge transform G f = e^{-i int_{-inf}^x |f|^2} f and its inverse, with the
// cumulative integral taken from the left box edge.
// ---------------------------------------------------------------------------

inline Field gauge_forward(const Field& f) {
    if (relative_tail_mass(f) >= kTailTolerance)
        throw std::invalid_argument("gauge_forward: tail condition violated (phase wrap would contaminate periodicity)");
    return phase_twist(f, -1.0);
}

inline Field gauge_inverse(const Field& f) {
    if (relative_tail_mass(f) >= kTailTolerance)
        throw std::invalid_argument("gauge_inverse: tail condition violated (phase wrap would contaminate periodicity)");
    return phase_twist(f, 1.0);
}

// w^mu(x) = mu^{-1/2} w(x/mu) on a box of length mu*L with the same mode
// count; preserves the L^2 norm exactly.
inline Field rescale(const Field& f, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("rescale: mu must be positive");
    const Field g = to_physical(f);
    SpectralGrid big{g.grid.modes, g.grid.length * mu};
    std::vector<cplx> v(g.grid.modes);
    const double amp = 1.0 / std::sqrt(mu);
    for (int j = 0; j < g.grid.modes; ++j) v[j] = amp * g.values[j];
    return Field(big, std::move(v), Rep::physical);
}

// ---------------------------------------------------------------------------
// Initial data: sums of modulated Gaussians a e^{-((x-c)/sigma)^2} e^{i k0 x},
// and spectrally rough synthetic H^s data for the sweeps.
// ---------------------------------------------------------------------------

struct GaussianComponent {
    cplx amplitude{1.0, 0.0};
    double sigma = 2.0;
    double center = 0.0;
    double wavenumber = 0.0;
};

struct InitialDataSpec {
    std::vector<GaussianComponent> components{GaussianComponent{}};
    std::optional<double> target_l2;
};

inline Field initial_data(const SpectralGrid& grid, const InitialDataSpec& spec) {
    for (const GaussianComponent& c : spec.components)
        if (!(c.sigma > 0.0) || !std::isfinite(std::abs(c.amplitude)) || !std::isfinite(c.center) ||
            !std::isfinite(c.wavenumber))
            throw std::invalid_argument("initial_data: bad component");
    Field f = Field::from_function(grid, [&spec](double x) {
        cplx acc(0.0, 0.0);
        for (const GaussianComponent& c : spec.components) {
            double u = (x - c.center) / c.sigma;
            acc += c.amplitude * std::exp(-u * u) * std::exp(cplx(0.0, c.wavenumber * x));
        }
        return acc;
    });
    if (spec.target_l2) {
        double n2 = lebesgue_norm(f, 2);
        if (n2 == 0.0) throw std::invalid_argument("initial_data: cannot normalize the zero field");
        f = cplx(*spec.target_l2 / n2, 0.0) * f;
    }
    if (relative_tail_mass(f) >= kTailTolerance)
        throw std::invalid_argument("initial_data: boundary-tail condition violated");
    return f;
}

// Synthetic H^s data: random-phase spectrum |fhat| ~ <xi>^{-(s+1/2+eps)} under
// a Gaussian envelope (keeps the tail condition), normalized in L^2, with an
// optional spectral cutoff at cutoff_frac of the grid band. Deterministic in
// the seed.
inline Field synthetic_hs_field(const SpectralGrid& grid, double s, double target_l2, std::uint64_t seed,
                                double envelope_sigma_fraction = 0.08, double eps = 0.01,
                                double cutoff_frac = 1.0) {
    Rng rng(seed);
    std::vector<cplx> hat(grid.modes, cplx(0.0, 0.0));
    const int kmax = static_cast<int>(cutoff_frac * (grid.modes / 2 - 1));
    for (int k = -grid.modes / 2 + 1; k < grid.modes / 2; ++k) {
        double xi_k = grid.freq_of_mode(k);
        double amp = std::abs(k) <= kmax ? std::pow(1.0 + std::abs(xi_k), -(s + 0.5 + eps)) : 0.0;
        double phase = 2.0 * kPi * rng.uniform();
        hat[grid.index_of_mode(k)] = amp * std::exp(cplx(0.0, phase));
    }
    Field f = to_physical(Field(grid, std::move(hat), Rep::fourier));
    const double sigma = envelope_sigma_fraction * grid.length;
    for (int j = 0; j < grid.modes; ++j) {
        double u = grid.node(j) / sigma;
        f.values[j] *= std::exp(-u * u);
    }
    double n2 = lebesgue_norm(f, 2);
    return cplx(target_l2 / n2, 0.0) * f;
}

// ---------------------------------------------------------------------------
// Trajectory export: text header (config as key = value) plus per-snapshot
// rows "time re(u_0) im(u_0) re(u_1) im(u_1) ...".
// ---------------------------------------------------------------------------

inline void save_trajectory(const Trajectory& traj, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_trajectory: cannot open " + path);
    char buf[64];
    os << "# dnlslab trajectory v1\n";
    os << "modes = " << traj.config.modes << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", traj.config.length);
    os << "length = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", traj.config.dt);
    os << "dt = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", traj.config.t_end);
    os << "t_end = " << buf << "\n";
    os << "snapshot_stride = " << traj.config.snapshot_stride << "\n";
    os << "equation = " << variant_name(traj.config.equation.variant) << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", traj.config.equation.lambda);
    os << "lambda = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", traj.config.i_param_n);
    os << "i_n = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", traj.config.i_param_s);
    os << "i_s = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", traj.config.mu);
    os << "mu = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", traj.config.stability_margin());
    os << "stability_margin = " << buf << "\n";
    os << "snapshots = " << traj.snapshots.size() << "\n";
    os << "# columns: time re(u_j) im(u_j) for j = 0..modes-1, physical representation\n";
    for (size_t i = 0; i < traj.snapshots.size(); ++i) {
        Field ph = to_physical(traj.snapshots[i]);
        std::snprintf(buf, sizeof buf, "%.17g", traj.times[i]);
        os << buf;
        for (const cplx& z : ph.values) {
            std::snprintf(buf, sizeof buf, " %.17g %.17g", z.real(), z.imag());
            os << buf;
        }
        os << "\n";
    }
}

inline Trajectory load_trajectory(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_trajectory: cannot open " + path);
    Trajectory traj;
    std::string line;
    size_t snapshot_count = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {  // first data row
            break;
        }
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t");
            size_t b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        key = trim(key);
        val = trim(val);
        if (key == "modes") traj.config.modes = std::stoi(val);
        else if (key == "length") traj.config.length = std::stod(val);
        else if (key == "dt") traj.config.dt = std::stod(val);
        else if (key == "t_end") traj.config.t_end = std::stod(val);
        else if (key == "snapshot_stride") traj.config.snapshot_stride = std::stoi(val);
        else if (key == "lambda") traj.config.equation.lambda = std::stod(val);
        else if (key == "i_n") traj.config.i_param_n = std::stod(val);
        else if (key == "i_s") traj.config.i_param_s = std::stod(val);
        else if (key == "mu") traj.config.mu = std::stod(val);
        else if (key == "snapshots") snapshot_count = std::stoul(val);
        else if (key == "equation") {
            for (EquationVariant v : {EquationVariant::dnls_raw, EquationVariant::dnls_gauged, EquationVariant::quintic})
                if (val == variant_name(v)) traj.config.equation.variant = v;
        }
    }
    SpectralGrid g = traj.config.grid();
    do {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        double t;
        row >> t;
        std::vector<cplx> v(g.modes);
        for (int j = 0; j < g.modes; ++j) {
            double re, im;
            row >> re >> im;
            v[j] = cplx(re, im);
        }
        if (!row) throw std::runtime_error("load_trajectory: short row");
        traj.times.push_back(t);
        traj.snapshots.push_back(to_fourier(Field(g, std::move(v), Rep::physical)));
    } while (std::getline(is, line));
    if (traj.snapshots.size() != snapshot_count) throw std::runtime_error("load_trajectory: snapshot count mismatch");
    return traj;
}

// ---------------------------------------------------------------------------
// Drift series and windowed time integration of Lambda forms over a trajectory.
// ---------------------------------------------------------------------------

enum class TrackedQuantity { mass, energy, energy_n, quintic_h };

inline const char* quantity_name(TrackedQuantity q) {
    switch (q) {
        case TrackedQuantity::mass: return "mass";
        case TrackedQuantity::energy: return "E";
        case TrackedQuantity::energy_n: return "E_N";
        default: return "H";
    }
}

struct DriftSeries {
    std::string label;
    std::vector<double> times;
    std::vector<double> values;
    double max_abs_drift = 0.0;  // relative to t = 0

    std::vector<double> relative_drifts() const {
        std::vector<double> out(values.size(), 0.0);
        double ref = std::max(std::abs(values.empty() ? 0.0 : values.front()), 1e-300);
        for (size_t i = 0; i < values.size(); ++i) out[i] = std::abs(values[i] - values.front()) / ref;
        return out;
    }
};

inline DriftSeries drift_series(const Trajectory& traj, TrackedQuantity q) {
    DriftSeries out;
    out.label = quantity_name(q);
    out.times = traj.times;
    for (const Field& f : traj.snapshots) {
        switch (q) {
            case TrackedQuantity::mass: out.values.push_back(mass(f)); break;
            case TrackedQuantity::energy: out.values.push_back(energy_E(f).total); break;
            case TrackedQuantity::energy_n:
                out.values.push_back(energy_EN(f, traj.config.i_param_n, traj.config.i_param_s).total);
                break;
            case TrackedQuantity::quintic_h:
                // the conserved quintic functional ||v_x||^2 - (lambda/3) int |v|^6
                out.values.push_back(quintic_invariant(f, traj.config.equation.lambda));
                break;
        }
    }
    for (double d : out.relative_drifts()) out.max_abs_drift = std::max(out.max_abs_drift, d);
    return out;
}

// Composite-Simpson integral of t -> Lambda_n(e; w(t)) over [t0, t1], with a
// quadrature error estimate from stride doubling.
inline TimeIntegral time_integrated_lambda(const SymbolExpr& e, const Trajectory& traj, double t0, double t1,
                                           const LambdaContext& ctx = {}) {
    const double sdt = traj.snapshot_dt();
    auto locate = [&](double t) {
        double rel = (t - traj.times.front()) / sdt;
        long long i = std::llround(rel);
        if (i < 0 || i >= static_cast<long long>(traj.times.size()) || std::abs(rel - i) > 1e-6)
            throw std::invalid_argument("time_integrated_lambda: window endpoint not on the snapshot lattice");
        return static_cast<size_t>(i);
    };
    size_t i0 = locate(t0), i1 = locate(t1);
    if (i1 <= i0) throw std::invalid_argument("time_integrated_lambda: empty window");
    size_t count = i1 - i0 + 1;
    if (count < 3 || count % 2 == 0)
        throw std::invalid_argument("time_integrated_lambda: need an odd number (>=3) of snapshots in the window");
    std::vector<cplx> vals(count);
    for (size_t i = 0; i < count; ++i) vals[i] = lambda_on_solution(e, traj.snapshots[i0 + i], ctx);
    return simpson_integrate(vals, sdt);
}

// Smallness conditions guaranteeing energy positivity:
//   raw DNLS:  ||f||_2 < sqrt(2 pi / lambda)   (vacuous for lambda <= 0)
//   gauged:    ||f||_2 < sqrt(2 pi)
//   quintic:   lambda < 0 (defocusing), else the GN-based bound
//              (lambda/6)(4/pi^2) ||f||_2^4 < 1.
inline bool smallness_check(const Field& f, const EquationKind& kind) {
    double n2 = lebesgue_norm(f, 2);
    switch (kind.variant) {
        case EquationVariant::dnls_raw:
            return kind.lambda <= 0.0 || n2 < std::sqrt(2.0 * kPi / kind.lambda);
        case EquationVariant::dnls_gauged: return n2 < kSqrt2Pi;
        default:
            return kind.lambda < 0.0 || kind.lambda / 6.0 * kGnSharpConstant * std::pow(n2, 4) < 1.0;
    }
}

}  // namespace dnlslab
