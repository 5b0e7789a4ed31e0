#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "dnlslab/config.hpp"
#include "dnlslab/conserved.hpp"
#include "dnlslab/derive.hpp"
#include "dnlslab/dynamics.hpp"
#include "dnlslab/lambda.hpp"
#include "dnlslab/rng.hpp"

namespace dnlslab {

// ---------------------------------------------------------------------------
// Experiment orchestration: frequency roles, audit samplers, the six runnable
// experiments, and machine-readable reporting.
// ---------------------------------------------------------------------------

// soprano/alto/tenor/baritone: indices of the four largest |xi_j|, ties broken
// by lowest index. On Gamma_n, N_soprano <= (n-1) N_alto.
struct FrequencyRoles {
    int soprano = 0, alto = 0, tenor = 0, baritone = 0;  // 0-based indices
    double n_soprano = 0.0, n_alto = 0.0, n_tenor = 0.0, n_baritone = 0.0;
};

inline FrequencyRoles frequency_roles(const std::vector<double>& xi) {
    if (xi.size() < 4) throw std::invalid_argument("frequency_roles: need at least 4 frequencies");
    std::vector<int> idx(xi.size());
    for (size_t i = 0; i < xi.size(); ++i) idx[i] = static_cast<int>(i);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        double ma = std::abs(xi[a]), mb = std::abs(xi[b]);
        if (ma != mb) return ma > mb;
        return a < b;
    });
    FrequencyRoles r;
    r.soprano = idx[0];
    r.alto = idx[1];
    r.tenor = idx[2];
    r.baritone = idx[3];
    r.n_soprano = std::abs(xi[idx[0]]);
    r.n_alto = std::abs(xi[idx[1]]);
    r.n_tenor = std::abs(xi[idx[2]]);
    r.n_baritone = std::abs(xi[idx[3]]);
    return r;
}

// Deterministic worker pool: fn(i) runs for i in [0, total); results must go
// into preallocated slots so the outcome does not depend on the thread count.
inline void parallel_for(std::size_t total, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || total < 2) {
        for (std::size_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= total) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    int n = std::min<int>(threads, static_cast<int>(total));
    pool.reserve(n);
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

struct CheckRecord {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string note;
};

struct ExperimentResult {
    std::string name;
    std::vector<CheckRecord> checks;
    Manifest manifest;

    bool all_pass() const {
        for (const CheckRecord& c : checks)
            if (!c.pass) return false;
        return true;
    }
    void record(const std::string& check, bool pass, double measured, double tolerance,
                const std::string& note = "") {
        checks.push_back({check, pass, measured, tolerance, note});
        manifest.set("checks." + check, "pass", std::string(pass ? "true" : "false"));
        manifest.set("checks." + check, "measured", measured);
        manifest.set("checks." + check, "tolerance", tolerance);
        if (!note.empty()) manifest.set("checks." + check, "note", note);
    }
};

namespace exp_detail {

inline void echo_config(ExperimentResult& res, const KvConfig& cfg) {
    for (const auto& [k, v] : cfg.entries()) res.manifest.set("config", k, v);
}

inline std::filesystem::path ensure_outdir(const std::string& out) {
    std::filesystem::path p(out);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_drift_csv(const std::filesystem::path& dir, const std::string& name, const DriftSeries& ds) {
    CsvWriter csv((dir / (name + ".csv")).string(), {"time", "value", "relative_drift"});
    auto rel = ds.relative_drifts();
    for (size_t i = 0; i < ds.times.size(); ++i) csv.row({ds.times[i], ds.values[i], rel[i]});
}

}  // namespace exp_detail

// ---------------------------------------------------------------------------
// derive: mechanical re-derivation of M4/M6/M8 and the conservation transcript
// ---------------------------------------------------------------------------

inline ExperimentResult run_derive_symbols(const std::string& outdir) {
    ExperimentResult res;
    res.name = "derive";
    auto dir = exp_detail::ensure_outdir(outdir);

    IncrementDerivation with_m = derive_energy_increment(DeriveMode::with_m);
    IncrementDerivation m1 = derive_energy_increment(DeriveMode::m_equals_one);
    ConservationReport cons = conservation_identities();

    res.record("m_equals_one_M4_vanishes", m1.M4.terms.empty(), static_cast<double>(m1.M4.terms.size()), 0.0);
    res.record("m_equals_one_M6_vanishes", m1.M6.terms.empty(), static_cast<double>(m1.M6.terms.size()), 0.0);
    res.record("m_equals_one_M8_vanishes", m1.M8.terms.empty(), static_cast<double>(m1.M8.terms.size()), 0.0);
    res.record("restrict_m_to_one_gives_zero",
               restrict_m_to_one(with_m.M4).terms.empty() && restrict_m_to_one(with_m.M6).terms.empty() &&
                   restrict_m_to_one(with_m.M8).terms.empty(),
               0.0, 0.0);
    for (const CheckResult& c : cons.checks) res.record("conservation: " + c.label, c.pass, c.pass ? 0.0 : 1.0, 0.0);

    const char* names[5] = {"C1", "C2", "C3", "C4", "C5"};
    for (size_t i = 0; i < with_m.constants.size(); ++i)
        res.manifest.set("constants", names[i], with_m.constants[i].str());
    res.manifest.set("constants", "quintic_sextic_coefficient", cons.quintic_energy_coeff.str());

    {
        std::ofstream os(dir / "derive_transcript.txt");
        for (const std::string& line : with_m.transcript) os << line << "\n";
    }
    {
        std::ofstream os(dir / "conservation_transcript.txt");
        for (const std::string& line : cons.transcript) os << line << "\n";
    }
    res.manifest.set("outputs", "derive_transcript", "derive_transcript.txt");
    res.manifest.set("outputs", "conservation_transcript", "conservation_transcript.txt");
    return res;
}

// ---------------------------------------------------------------------------
// conserve: drift of mass/E on the gauged flow, H on the quintic flow, with a
// refinement study and a linear control
// ---------------------------------------------------------------------------

inline ExperimentResult run_conservation(const KvConfig& cfg, const std::string& outdir) {
    ExperimentResult res;
    res.name = "conserve";
    exp_detail::echo_config(res, cfg);
    auto dir = exp_detail::ensure_outdir(outdir);

    SolverConfig sc;
    sc.modes = static_cast<int>(cfg.get_int("modes", 256));
    sc.length = cfg.get_double("length", 100.0);
    sc.dt = cfg.get_double("dt", 2.5e-4);
    sc.t_end = cfg.get_double("t_end", 1.0);
    sc.snapshot_stride = static_cast<int>(cfg.get_int("stride", 40));
    sc.equation = EquationKind::gauged();
    sc.i_param_n = cfg.get_double("i_n", 16.0);
    sc.i_param_s = cfg.get_double("i_s", 0.75);

    InitialDataSpec data;
    data.components = {GaussianComponent{cplx(1.0, 0.0), cfg.get_double("sigma", 2.0), 0.0, cfg.get_double("k0", 3.0)}};
    data.target_l2 = cfg.get_double("mass", 1.0);
    Field w0 = initial_data(sc.grid(), data);

    const double mass_tol = cfg.get_double("mass_tol", 1e-9);
    const double energy_tol = cfg.get_double("energy_tol", 1e-7);

    Trajectory traj = evolve(sc, w0);
    DriftSeries dm = drift_series(traj, TrackedQuantity::mass);
    DriftSeries de = drift_series(traj, TrackedQuantity::energy);
    exp_detail::write_drift_csv(dir, "gauged_mass", dm);
    exp_detail::write_drift_csv(dir, "gauged_E", de);
    res.record("gauged_mass_drift", dm.max_abs_drift <= mass_tol, dm.max_abs_drift, mass_tol);
    res.record("gauged_E_drift", de.max_abs_drift <= energy_tol, de.max_abs_drift, energy_tol);

    if (cfg.get_int("check_refinement", 1)) {
        SolverConfig half = sc;
        half.dt = sc.dt / 2.0;
        half.snapshot_stride = sc.snapshot_stride * 2;
        Trajectory traj2 = evolve(half, w0);
        DriftSeries dm2 = drift_series(traj2, TrackedQuantity::mass);
        DriftSeries de2 = drift_series(traj2, TrackedQuantity::energy);
        // With the exact-dispersion integrator the drifts of the conserved
        // functionals sit on dt-independent floors (spectral-truncation flux
        // for E, rounding for mass) far below the ceilings; the ~16x shrink is
        // then exhibited by the state self-convergence instead, and the branch
        // taken is recorded.
        auto ratio_check = [&](const std::string& label, double coarse, double fine, double bound) {
            bool dt_indep = std::abs(coarse - fine) <= 0.3 * std::max(coarse, fine) || fine < 1e-12;
            if (dt_indep) {
                res.record(label, coarse <= bound, coarse, bound,
                           "drift dt-independent (flux/rounding floor), strictly below the bound");
            } else {
                double ratio = coarse / fine;
                res.record(label, ratio >= 8.0 && ratio <= 40.0, ratio, 16.0, "coarse/fine drift ratio");
            }
        };
        ratio_check("E_drift_refinement", de.max_abs_drift, de2.max_abs_drift, energy_tol);
        ratio_check("mass_drift_refinement", dm.max_abs_drift, dm2.max_abs_drift, mass_tol);

        // State self-convergence on the same data over a short window. Run at
        // a deliberately coarse base step: at the reference dt the dt^4 state
        // error is already below the rounding floor for this data.
        SolverConfig conv = sc;
        conv.t_end = cfg.get_double("convergence_t", 0.1);
        const double dtc = cfg.get_double("convergence_dt", 1e-2);
        auto run_to = [&](double dt) {
            SolverConfig c = conv;
            c.dt = dt;
            c.snapshot_stride = std::max(1, static_cast<int>(std::lround(conv.t_end / dt)));
            return to_physical(evolve(c, w0).snapshots.back());
        };
        Field ref = run_to(dtc / 16.0);
        auto err = [&](double dt) {
            Field u = run_to(dt);
            double acc = 0.0;
            for (int j = 0; j < sc.modes; ++j) acc += std::norm(u.values[j] - ref.values[j]);
            return std::sqrt(acc * sc.grid().spacing());
        };
        double order = std::log2(err(dtc) / err(dtc / 2.0));
        res.record("state_self_convergence_order", order >= 3.7 && order <= 4.3, order, 4.0,
                   "error shrink factor " + format_double(std::exp2(order)) + " under dt halving");
    }

    // quintic flow: the derived invariant ||v_x||^2 - (lambda/3) int|v|^6
    {
        SolverConfig qc = sc;
        qc.equation = EquationKind::quintic_nls(cfg.get_double("quintic_lambda", -1.0));
        qc.t_end = cfg.get_double("quintic_t_end", 0.5);
        Trajectory qt = evolve(qc, w0);
        DriftSeries dh = drift_series(qt, TrackedQuantity::quintic_h);
        DriftSeries dqm = drift_series(qt, TrackedQuantity::mass);
        exp_detail::write_drift_csv(dir, "quintic_H", dh);
        exp_detail::write_drift_csv(dir, "quintic_mass", dqm);
        res.record("quintic_H_drift", dh.max_abs_drift <= energy_tol, dh.max_abs_drift, energy_tol);
        res.record("quintic_mass_drift", dqm.max_abs_drift <= mass_tol, dqm.max_abs_drift, mass_tol);
    }

    // linear control: lambda = 0 flow is exactly unitary up to roundoff
    {
        SolverConfig lc = sc;
        lc.equation = EquationKind::raw(0.0);
        lc.t_end = std::min(sc.t_end, 1.0);
        Trajectory lt = evolve(lc, w0);
        DriftSeries lm = drift_series(lt, TrackedQuantity::mass);
        exp_detail::write_drift_csv(dir, "linear_mass", lm);
        res.record("linear_control_mass_drift", lm.max_abs_drift <= 1e-12, lm.max_abs_drift, 1e-12);
    }

    res.manifest.set("run", "stability_margin", sc.stability_margin());
    return res;
}

// ---------------------------------------------------------------------------
// increment: E_N(w(T+delta)) - E_N(w(T)) against the time-integrated
// Lambda_4(M4) + Lambda_6(M6) + Lambda_8(M8)
// ---------------------------------------------------------------------------

struct IncrementReport {
    double delta_en = 0.0;
    double integral = 0.0;
    double integral_l4 = 0.0, integral_l6 = 0.0, integral_l8 = 0.0;
    double quadrature_error = 0.0;
    double mismatch = 0.0;
    double tolerance = 0.0;
    double en_start = 0.0;
};

inline ExperimentResult run_increment_identity(const KvConfig& cfg, const std::string& outdir) {
    ExperimentResult res;
    res.name = "increment";
    exp_detail::echo_config(res, cfg);
    auto dir = exp_detail::ensure_outdir(outdir);

    SolverConfig sc;
    sc.modes = static_cast<int>(cfg.get_int("modes", 128));
    sc.length = cfg.get_double("length", 10.0);
    sc.dt = cfg.get_double("dt", 1e-4);
    const double delta = cfg.get_double("delta", 0.1);
    sc.t_end = delta;
    // the Lambda integrands oscillate at dispersive frequencies ~ xi^2, so the
    // Simpson stride must resolve them; stride 2 at dt = 1e-4 does
    sc.snapshot_stride = static_cast<int>(cfg.get_int("stride", 2));
    sc.equation = EquationKind::gauged();
    sc.i_param_n = cfg.get_double("i_n", 8.0);
    sc.i_param_s = cfg.get_double("i_s", 0.75);
    if (sc.modes > 256) throw std::invalid_argument("increment: M <= 256 required (direct M4 term cost)");

    InitialDataSpec data;
    data.components = {
        GaussianComponent{cplx(1.0, 0.0), cfg.get_double("sigma", 1.25), 0.0, cfg.get_double("k0", 9.0)},
        GaussianComponent{cplx(0.5, 0.3), cfg.get_double("sigma2", 1.1), cfg.get_double("center2", 0.4),
                          cfg.get_double("k02", -5.0)}};
    data.target_l2 = cfg.get_double("mass", 1.0);
    Field w0 = initial_data(sc.grid(), data);

    Trajectory traj = evolve(sc, w0);
    IncrementDerivation d = derive_energy_increment(DeriveMode::with_m);
    LambdaContext ctx;
    ctx.m = i_multiplier(sc.i_param_n, sc.i_param_s);

    IncrementReport rep;
    rep.en_start = traj.energy_n_series.front();
    rep.delta_en = traj.energy_n_series.back() - traj.energy_n_series.front();

    TimeIntegral i4 = time_integrated_lambda(d.M4_template, traj, 0.0, delta, ctx);
    TimeIntegral i6 = time_integrated_lambda(d.M6_template, traj, 0.0, delta, ctx);
    TimeIntegral i8 = time_integrated_lambda(d.M8_template, traj, 0.0, delta, ctx);
    rep.integral_l4 = i4.value.real();
    rep.integral_l6 = i6.value.real();
    rep.integral_l8 = i8.value.real();
    rep.integral = rep.integral_l4 + rep.integral_l6 + rep.integral_l8;
    rep.quadrature_error = i4.error_estimate + i6.error_estimate + i8.error_estimate;
    rep.mismatch = std::abs(rep.delta_en - rep.integral);
    rep.tolerance = 1e-3 * std::max(std::abs(rep.delta_en), std::abs(rep.en_start) * 1e-6);

    {
        CsvWriter csv((dir / "increment_integrand.csv").string(),
                      {"time", "lambda4", "lambda6", "lambda8", "total"});
        for (size_t i = 0; i < i4.integrand.size(); ++i) {
            double a = i4.integrand[i].real(), b = i6.integrand[i].real(), c = i8.integrand[i].real();
            csv.row({traj.times[i], a, b, c, a + b + c});
        }
    }

    res.record("increment_identity_mismatch", rep.mismatch <= rep.tolerance, rep.mismatch, rep.tolerance);
    res.record("quadrature_error_below_mismatch_budget",
               rep.quadrature_error <= std::max(rep.tolerance, 1e-12), rep.quadrature_error,
               std::max(rep.tolerance, 1e-12), "composite Simpson stride-doubling estimate");
    bool imag_ok = std::abs(i4.value.imag()) + std::abs(i6.value.imag()) + std::abs(i8.value.imag()) <=
                   1e-10 * (1.0 + std::abs(rep.integral));
    res.record("integrals_real", imag_ok, std::abs(i4.value.imag()) + std::abs(i6.value.imag()) + std::abs(i8.value.imag()),
               1e-10 * (1.0 + std::abs(rep.integral)));

    res.manifest.set("results", "delta_E_N", rep.delta_en);
    res.manifest.set("results", "time_integral_total", rep.integral);
    res.manifest.set("results", "time_integral_lambda4", rep.integral_l4);
    res.manifest.set("results", "time_integral_lambda6", rep.integral_l6);
    res.manifest.set("results", "time_integral_lambda8", rep.integral_l8);
    res.manifest.set("results", "quadrature_error_bar", rep.quadrature_error);
    res.manifest.set("results", "E_N_start", rep.en_start);
    res.manifest.set("results", "support_threshold", LambdaContext{}.support_threshold);

    // degenerate control: N far above the band makes both sides vanish
    if (cfg.get_int("run_band_control", 1)) {
        SolverConfig bc = sc;
        bc.i_param_n = 8.0 * bc.grid().max_freq();
        bc.t_end = delta / 2.0;
        InitialDataSpec gentle;
        gentle.components = {GaussianComponent{cplx(1.0, 0.0), 1.1, 0.0, 2.0}};
        gentle.target_l2 = 0.7;
        Field g0 = initial_data(bc.grid(), gentle);
        Trajectory bt = evolve(bc, g0);
        LambdaContext bctx;
        bctx.m = i_multiplier(bc.i_param_n, bc.i_param_s);
        TimeIntegral b4 = time_integrated_lambda(d.M4_template, bt, 0.0, bc.t_end, bctx);
        TimeIntegral b6 = time_integrated_lambda(d.M6_template, bt, 0.0, bc.t_end, bctx);
        TimeIntegral b8 = time_integrated_lambda(d.M8_template, bt, 0.0, bc.t_end, bctx);
        double rhs = std::abs(b4.value + b6.value + b8.value);
        double lhs = std::abs(bt.energy_n_series.back() - bt.energy_n_series.front());
        res.record("band_control_integral_vanishes", rhs <= 1e-11, rhs, 1e-11);
        res.record("band_control_increment_vanishes", lhs <= 1e-9, lhs, 1e-9,
                   "E_N = E on the band; residual is integrator and truncation noise");
    }
    return res;
}

// ---------------------------------------------------------------------------
// sweep: almost-conservation decay over N with mu = N^{(1-s)/s} rescaling,
// plus the rescaling bound ratios
// ---------------------------------------------------------------------------

struct SweepRow {
    double N = 0.0, mu = 0.0;
    double en0 = 0.0, den = 0.0;
    double iw_h1 = 0.0;         // ||I w_0^mu||_{H^1}
    double rescale_ratio = 0.0;  // ||I dx w_0^mu||_2 / (N^{1-s} mu^{-s} ||w_0||_{H^s})
};

inline ExperimentResult run_almost_conservation_sweep(const KvConfig& cfg, const std::string& outdir,
                                                      std::uint64_t seed, int threads) {
    ExperimentResult res;
    res.name = "sweep";
    exp_detail::echo_config(res, cfg);
    auto dir = exp_detail::ensure_outdir(outdir);

    // Sized so the populated band is integrated accurately: nonlinear phase
    // rotation runs at ~2 xi_content^2 and needs omega*dt <= 0.2, otherwise
    // the measured increments are integrator noise instead of the
    // almost-conservation signal.
    const int base_modes = static_cast<int>(cfg.get_int("base_modes", 512));
    const double base_length = cfg.get_double("base_length", 4.0 * kPi);
    const double s = cfg.get_double("i_s", 0.75);
    const double mass_target = cfg.get_double("mass", 1.5);
    const double window = cfg.get_double("window", 1.0);
    const double dt = cfg.get_double("dt", 1e-5);
    const double cutoff_frac = cfg.get_double("data_cutoff_frac", 0.75);
    std::vector<double> n_values = cfg.get_list("n_values", {8.0, 16.0, 32.0, 64.0});
    const double slope_tol = cfg.get_double("slope_tol", -0.8);

    SpectralGrid base = make_grid(base_modes, base_length);
    Field w0 = synthetic_hs_field(base, s, mass_target, seed, 0.08, 0.01, cutoff_frac);
    const double w0_hs = sobolev_norm(w0, s);

    auto run_point = [&](double N, double amp_factor) {
        double mu = std::pow(N, (1.0 - s) / s);
        Field scaled = rescale(amp_factor == 1.0 ? w0 : cplx(amp_factor, 0.0) * w0, mu);
        SolverConfig sc;
        sc.modes = base_modes;
        sc.length = base_length * mu;
        sc.dt = dt;
        sc.t_end = window;
        sc.snapshot_stride = static_cast<int>(cfg.get_int("stride", 5000));
        sc.equation = EquationKind::gauged();
        sc.i_param_n = N;
        sc.i_param_s = s;

        SweepRow row;
        row.N = N;
        row.mu = mu;
        Multiplier iop = i_multiplier(N, s);
        Field iw = apply_multiplier(iop, scaled);
        row.iw_h1 = sobolev_norm(iw, 1.0);
        double idx = lebesgue_norm(apply_multiplier(iop * derivative_multiplier(), scaled), 2);
        row.rescale_ratio = idx / (std::pow(N, 1.0 - s) * std::pow(mu, -s) * w0_hs * amp_factor);

        Trajectory traj = evolve(sc, scaled);
        row.en0 = traj.energy_n_series.front();
        row.den = std::abs(traj.energy_n_series.back() - traj.energy_n_series.front());
        return row;
    };

    std::vector<SweepRow> rows(n_values.size());
    parallel_for(n_values.size(), threads, [&](std::size_t i) { rows[i] = run_point(n_values[i], 1.0); });

    // least-squares slope of log|dE_N| vs log N with a 2-sigma band
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(rows.size());
    for (const SweepRow& r : rows) {
        double x = std::log(r.N), y = std::log(std::max(r.den, 1e-300));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - slope * sx) / n;
    double ss = 0;
    for (const SweepRow& r : rows) {
        double pred = intercept + slope * std::log(r.N);
        double y = std::log(std::max(r.den, 1e-300));
        ss += (y - pred) * (y - pred);
    }
    double slope_stderr = n > 2 ? std::sqrt(ss / (n - 2) / (sxx - sx * sx / n)) : 0.0;

    {
        CsvWriter csv((dir / "sweep.csv").string(),
                      {"N", "mu", "E_N_initial", "abs_delta_E_N", "Iw0_H1", "rescale_ratio"});
        for (const SweepRow& r : rows) csv.row({r.N, r.mu, r.en0, r.den, r.iw_h1, r.rescale_ratio});
    }

    res.record("almost_conservation_slope", slope <= slope_tol, slope, slope_tol,
               "2-sigma band +/- " + format_double(2.0 * slope_stderr));
    res.manifest.set("results", "slope", slope);
    res.manifest.set("results", "slope_stderr", slope_stderr);

    double h1min = 1e300, h1max = 0.0, rmin = 1e300, rmax = 0.0;
    for (const SweepRow& r : rows) {
        h1min = std::min(h1min, r.iw_h1);
        h1max = std::max(h1max, r.iw_h1);
        rmin = std::min(rmin, r.rescale_ratio);
        rmax = std::max(rmax, r.rescale_ratio);
    }
    res.record("Iw0_H1_uniformly_bounded", h1max / h1min <= 2.0 && h1max < 10.0 * mass_target, h1max / h1min, 2.0,
               "max " + format_double(h1max));
    res.record("rescaling_bound_ratio_stable", rmax / rmin <= 4.0, rmax / rmin, 4.0,
               "||I dx w0^mu|| / (N^{1-s} mu^{-s} ||w0||_{H^s})");

    if (cfg.get_int("check_monotonicity", 1)) {
        std::vector<SweepRow> rows2(n_values.size());
        parallel_for(n_values.size(), threads, [&](std::size_t i) { rows2[i] = run_point(n_values[i], 1.4); });
        bool mono = true;
        for (size_t i = 0; i < rows.size(); ++i) mono = mono && rows2[i].den > rows[i].den;
        res.record("amplitude_monotonicity", mono, mono ? 1.0 : 0.0, 1.0,
                   "larger data increases every |dE_N|");
        CsvWriter csv((dir / "sweep_amplified.csv").string(), {"N", "abs_delta_E_N"});
        for (const SweepRow& r : rows2) csv.row({r.N, r.den});
    }
    return res;
}

// ---------------------------------------------------------------------------
// audit: sampled pointwise bounds on |M4|, |M6|, |M8|
// ---------------------------------------------------------------------------

struct AuditCase {
    std::string name;
    int order = 4;
    // regime filter on (N_tenor, N_soprano); "sim" means ratio in [1/4, 1],
    // "ll" means ratio <= 1/16
    enum class Regime { sim, ll, any } regime = Regime::any;
    // bound right-hand side given the tuple, roles and the audit N
    std::function<double(const std::vector<double>&, const FrequencyRoles&, double, double)> rhs;
};

struct AuditOutcome {
    std::string name;
    std::vector<double> n_values;
    std::vector<double> max_ratio;
    bool stable = false;
};

inline ExperimentResult run_symbol_audit(const KvConfig& cfg, const std::string& outdir, std::uint64_t seed,
                                         int threads) {
    ExperimentResult res;
    res.name = "audit";
    exp_detail::echo_config(res, cfg);
    auto dir = exp_detail::ensure_outdir(outdir);

    const double s = cfg.get_double("i_s", 0.75);
    const double eps = cfg.get_double("epsilon", 0.1);
    const long long samples = cfg.get_int("samples", 10000);
    std::vector<double> n_values = cfg.get_list("n_values", {16.0, 64.0, 256.0, 1024.0});
    const double sim_lo = cfg.get_double("sim_lo", 0.25);
    const double ll_hi = cfg.get_double("ll_hi", 1.0 / 16.0);

    IncrementDerivation d = derive_energy_increment(DeriveMode::with_m);

    auto angle = [](double x) { return 1.0 + std::abs(x); };

    std::vector<AuditCase> cases;
    cases.push_back({"m4_high_tenor", 4, AuditCase::Regime::sim,
                     [&angle](const std::vector<double>& xi, const FrequencyRoles& r, double N, double s_) {
                         double prod = 1.0;
                         for (double x : xi) prod *= angle(x) * i_multiplier_value(x, N, s_);
                         double x12 = xi[0] + xi[1], x14 = xi[0] + xi[3];
                         return std::pow(N / r.n_soprano, 0.1) / N * std::sqrt(1.0 + std::abs(x12 * x14)) * prod;
                     }});
    cases.push_back({"m4_low_tenor", 4, AuditCase::Regime::ll,
                     [&angle](const std::vector<double>& xi, const FrequencyRoles& r, double N, double s_) {
                         double prod = 1.0;
                         for (double x : xi) prod *= angle(x) * i_multiplier_value(x, N, s_);
                         return std::pow(N / r.n_soprano, 0.1) / N * r.n_soprano * prod;
                     }});
    cases.push_back({"m6_high_tenor", 6, AuditCase::Regime::sim,
                     [&angle](const std::vector<double>&, const FrequencyRoles& r, double N, double s_) {
                         return 1.0 / N * angle(r.n_soprano) * i_multiplier_value(r.n_soprano, N, s_) *
                                angle(r.n_alto) * i_multiplier_value(r.n_alto, N, s_) * angle(r.n_tenor) *
                                i_multiplier_value(r.n_tenor, N, s_);
                     }});
    cases.push_back({"m6_low_tenor", 6, AuditCase::Regime::ll,
                     [&angle, eps](const std::vector<double>&, const FrequencyRoles& r, double N, double s_) {
                         return std::pow(N, -1.0 + eps) * std::pow(angle(r.n_soprano), 1.0 - eps) *
                                angle(r.n_soprano) * i_multiplier_value(r.n_soprano, N, s_) * angle(r.n_alto) *
                                i_multiplier_value(r.n_alto, N, s_);
                     }});
    cases.push_back({"m8_all", 8, AuditCase::Regime::any,
                     [&angle](const std::vector<double>&, const FrequencyRoles& r, double N, double s_) {
                         return 1.0 / N * angle(r.n_soprano) * i_multiplier_value(r.n_soprano, N, s_) *
                                angle(r.n_alto) * i_multiplier_value(r.n_alto, N, s_);
                     }});
    // constructed false bound: the sqrt factor of the high-tenor M4 estimate
    // dropped; the audit must flag its growth in N
    cases.push_back({"m4_high_tenor_false_bound", 4, AuditCase::Regime::sim,
                     [&angle](const std::vector<double>& xi, const FrequencyRoles& r, double N, double s_) {
                         double prod = 1.0;
                         for (double x : xi) prod *= angle(x) * i_multiplier_value(x, N, s_);
                         return std::pow(N / r.n_soprano, 0.1) / N * prod;
                     }});

    auto symbol_for_order = [&](int order) -> const SymbolExpr& {
        if (order == 4) return d.M4_template;
        if (order == 6) return d.M6_template;
        return d.M8_template;
    };

    Rng base_rng(seed);
    std::vector<AuditOutcome> outcomes;
    for (const AuditCase& ac : cases) {
        AuditOutcome out;
        out.name = ac.name;
        out.n_values = n_values;
        out.max_ratio.assign(n_values.size(), 0.0);
        for (size_t ni = 0; ni < n_values.size(); ++ni) {
            const double N = n_values[ni];
            Multiplier m = i_multiplier(N, s);
            // fixed chunk count so results are independent of the thread count
            const int chunks = 16;
            std::vector<double> chunk_max(chunks, 0.0);
            long long per_chunk = (samples + chunks - 1) / chunks;
            parallel_for(chunks, threads, [&](std::size_t c) {
                Rng rng = base_rng.fork((ni + 1) * 1000 + c);
                double local = 0.0;
                long long accepted = 0, attempts = 0;
                while (accepted < per_chunk && attempts < 400 * per_chunk) {
                    ++attempts;
                    std::vector<double> xi(ac.order);
                    double sum = 0.0;
                    for (int j = 0; j + 1 < ac.order; ++j) {
                        xi[j] = rng.sign() * rng.log_uniform(1.0, 4.0 * N);
                        sum += xi[j];
                    }
                    xi[ac.order - 1] = -sum;
                    FrequencyRoles r = frequency_roles(xi);
                    if (ac.regime == AuditCase::Regime::sim && r.n_tenor < sim_lo * r.n_soprano) continue;
                    if (ac.regime == AuditCase::Regime::ll && r.n_tenor > ll_hi * r.n_soprano) continue;
                    ++accepted;
                    double num = std::abs(eval_symbol(symbol_for_order(ac.order), xi, m));
                    double den = ac.rhs(xi, r, N, s);
                    if (den > 0.0) local = std::max(local, num / den);
                }
                chunk_max[c] = local;
            });
            for (double v : chunk_max) out.max_ratio[ni] = std::max(out.max_ratio[ni], v);
        }
        out.stable = out.max_ratio.back() <= 2.0 * out.max_ratio.front() && std::isfinite(out.max_ratio.back());
        outcomes.push_back(out);
    }

    {
        CsvWriter csv((dir / "audit.csv").string(), {"case", "N", "max_ratio"});
        for (const AuditOutcome& out : outcomes)
            for (size_t i = 0; i < out.n_values.size(); ++i)
                csv.row_strings({out.name, format_double(out.n_values[i]), format_double(out.max_ratio[i])});
    }

    for (const AuditOutcome& out : outcomes) {
        bool expect_stable = out.name.find("false_bound") == std::string::npos;
        double growth = out.max_ratio.back() / std::max(out.max_ratio.front(), 1e-300);
        if (expect_stable)
            res.record("audit_" + out.name + "_stable", out.stable, growth, 2.0,
                       "max ratio largest-N / smallest-N");
        else
            res.record("audit_" + out.name + "_flagged", !out.stable, growth, 2.0,
                       "constructed counter-bound must show growth");
    }

    // vanishing region: all |xi_j| << N (<= N/16) makes the symbols vanish
    {
        Rng rng = base_rng.fork(777);
        double worst = 0.0;
        for (int order : {4, 6, 8}) {
            const SymbolExpr& sym = symbol_for_order(order);
            for (double N : n_values) {
                Multiplier m = i_multiplier(N, s);
                for (int t = 0; t < 200; ++t) {
                    std::vector<double> xi(order);
                    double sum = 0.0;
                    for (int j = 0; j + 2 < order; ++j) {
                        xi[j] = rng.sign() * rng.log_uniform(0.25, N / 16.0 / (order - 1.0));
                        sum += xi[j];
                    }
                    // close the tuple with two entries so every |xi_j| stays small
                    xi[order - 2] = rng.sign() * rng.log_uniform(0.25, N / 16.0 / (order - 1.0));
                    sum += xi[order - 2];
                    xi[order - 1] = -sum;
                    double scale = 1.0;
                    for (double x : xi) scale = std::max(scale, std::abs(x));
                    double v = std::abs(eval_symbol(sym, xi, m));
                    worst = std::max(worst, v / (1.0 + scale * scale * scale));
                }
            }
        }
        res.record("vanishing_region", worst <= 1e-12, worst, 1e-12,
                   "|M_n| relative to the cubic monomial scale");
    }

    res.manifest.set("parameters", "sim_threshold", "[1/4, 4]");
    res.manifest.set("parameters", "ll_threshold", "1/16");
    res.manifest.set("parameters", "epsilon", eps);
    res.manifest.set("parameters", "samples_per_case", samples);
    return res;
}

// ---------------------------------------------------------------------------
// gauge: equivariance of the raw and gauged flows under G
// ---------------------------------------------------------------------------

inline ExperimentResult run_gauge_equivalence(const KvConfig& cfg, const std::string& outdir) {
    ExperimentResult res;
    res.name = "gauge";
    exp_detail::echo_config(res, cfg);
    auto dir = exp_detail::ensure_outdir(outdir);

    SolverConfig sc;
    // the band must hold the cubic and quintic harmonics of the carrier
    // (k0 = 3 reaches 15), otherwise truncation ringing contaminates the tails
    sc.modes = static_cast<int>(cfg.get_int("modes", 512));
    sc.length = cfg.get_double("length", 100.0);
    sc.dt = cfg.get_double("dt", 2e-4);
    sc.t_end = cfg.get_double("t_end", 0.5);
    sc.snapshot_stride = static_cast<int>(cfg.get_int("stride", 250));

    InitialDataSpec data;
    data.components = {GaussianComponent{cplx(1.0, 0.0), cfg.get_double("sigma", 2.0), 0.0, cfg.get_double("k0", 3.0)}};
    data.target_l2 = cfg.get_double("mass", 1.0);
    Field u0 = initial_data(sc.grid(), data);
    Field w0 = gauge_forward(u0);

    const double tol = cfg.get_double("tol", 1e-6);

    // The equivariance defect of the two semi-discrete flows is set by the
    // band truncation (the gauge does not commute with it), so it refines
    // superexponentially in the resolution and sits on a dt-independent floor
    // for any stable dt; both trends are measured. phase_twist is used
    // directly for the coarse-resolution probes, whose whole point is the
    // contaminated tail that gauge_forward would refuse.
    auto mismatch_at = [&](int modes, double dt) {
        SolverConfig rc = sc;
        rc.modes = modes;
        rc.dt = dt;
        rc.equation = EquationKind::raw(1.0);
        Field u0c = initial_data(rc.grid(), data);
        Field w0c = phase_twist(u0c, -1.0);
        Trajectory ut = evolve(rc, u0c);
        SolverConfig wc = rc;
        wc.equation = EquationKind::gauged();
        Trajectory wt = evolve(wc, w0c);
        Field gu = phase_twist(to_physical(ut.snapshots.back()), -1.0);
        Field w = to_physical(wt.snapshots.back());
        double acc = 0.0;
        for (int j = 0; j < rc.modes; ++j) acc += std::norm(gu.values[j] - w.values[j]);
        return std::sqrt(acc * rc.grid().spacing());
    };

    double m1 = mismatch_at(sc.modes, sc.dt);
    double m2 = mismatch_at(sc.modes, sc.dt / 2.0);
    double m_coarse = mismatch_at(sc.modes / 2, sc.dt);
    res.record("gauge_equivariance_mismatch", m1 <= tol, m1, tol, "||G u(T) - w(T)||_2 at reference resolution");
    res.record("gauge_mismatch_refines_in_resolution", m1 < 0.25 * m_coarse, m1 / std::max(m_coarse, 1e-300), 0.25,
               "reference vs half-resolution mismatch (spectral truncation sets the defect)");
    if (std::abs(m1 - m2) <= 0.3 * std::max(m1, m2))
        res.record("gauge_dt_refinement", m1 <= tol && m2 <= tol, m2, tol,
                   "dt-independent: integrator error below the truncation floor at every stable dt");
    else
        res.record("gauge_dt_refinement", m2 < m1, m2, m1, "mismatch decreases under dt halving");

    // T = 0 consistency
    {
        Field gu0 = gauge_forward(u0);
        double acc = 0.0;
        for (int j = 0; j < sc.modes; ++j) acc += std::norm(gu0.values[j] - w0.values[j]);
        double m0 = std::sqrt(acc * sc.grid().spacing());
        res.record("gauge_t0_identity", m0 <= 1e-12, m0, 1e-12);
    }

    // negative control: G does not commute with the free flow
    {
        SolverConfig fc = sc;
        fc.equation = EquationKind::raw(0.0);
        Trajectory ut = evolve(fc, u0);
        Trajectory wt = evolve(fc, w0);
        Field gu = gauge_forward(to_physical(ut.snapshots.back()));
        Field w = to_physical(wt.snapshots.back());
        double acc = 0.0;
        for (int j = 0; j < sc.modes; ++j) acc += std::norm(gu.values[j] - w.values[j]);
        double mfree = std::sqrt(acc * sc.grid().spacing());
        res.record("gauge_free_flow_control", mfree > 1e-3, mfree, 1e-3,
                   "free flow does not commute with the nonlinear gauge");
    }

    CsvWriter csv((dir / "gauge_mismatch.csv").string(), {"dt", "mismatch"});
    csv.row({sc.dt, m1});
    csv.row({sc.dt / 2.0, m2});
    return res;
}

}  // namespace dnlslab
