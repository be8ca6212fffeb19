//! End-to-end acceptance checks. Runs as a plain binary (`harness = false`)
//! so every criterion prints one PASS/FAIL line under `cargo test`.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use memwave::{
    build_elastic_moment_matrix, build_undamped_moment_matrix, build_viscoelastic_moment_matrix,
    check_product_identity, elastic_solution, inverse_inequality_constant, maccamy_constants,
    maccamy_equivalence_residual, min_norm_control, picard_series, reachability_gap,
    resolvent_kernel, resolvent_on_grid, solve_modal_damped, solve_modal_maccamy,
    solve_modal_memory, solve_modal_volterra, steer_and_verify, CoeffState, EigenBasis, Endpoint,
    MacCamyData, MemoryKernel, Scale, SimulationForm, TimeGrid,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn left() -> Vec<Vec<f64>> {
    vec![vec![1.0]]
}

fn kernel() -> MemoryKernel {
    MemoryKernel::exponential(0.5, 1.0).unwrap()
}

fn e1(n: usize) -> (CoeffState, CoeffState) {
    (CoeffState::unit(n, 0, Scale::L2), CoeffState::zeros(n, Scale::HM1))
}

// 1. Marched resolvent of 0.5 e^{-t} against 0.5 e^{-1.5 t} on [0, 5].
fn resolvent_oracle() -> Outcome {
    let start = Instant::now();
    let m = kernel();
    let steps = [0.01, 0.005, 0.0025];
    let errs: Vec<f64> = steps
        .iter()
        .map(|&h| {
            let r = resolvent_kernel(&m, h, 5.0).unwrap();
            r.grid()
                .nodes()
                .zip(r.marched())
                .map(|(t, v)| (v - 0.5 * (-1.5 * t).exp()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let bound_ok = errs.iter().zip(&steps).all(|(e, h)| *e <= 5.0 * h * h);
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let ratio_ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    (
        bound_ok && ratio_ok && secs < 1.0,
        format!(
            "max err {:.3e} (<= 5h^2 = {:.1e}), halving ratios {:.3}, {:.3} in [3.5, 4.5], {secs:.2}s < 1s",
            errs[0],
            5.0 * steps[0] * steps[0],
            ratios[0],
            ratios[1]
        ),
    )
}

/// Regression bound on `residual / h^2`, frozen from the first build
/// (largest observed value 35.5 at lambda = 10).
const EQUIVALENCE_C: f64 = 40.0;

// 2. Memory form vs rescaled transformed form.
fn maccamy_equivalence() -> Outcome {
    let start = Instant::now();
    let h = 1e-3;
    let g = TimeGrid::with_step(5.0, h).unwrap();
    let m = kernel();
    let mut worst: f64 = 0.0;
    for lambda in [1.0, 5.0, 10.0] {
        for (z0, z1) in [(1.0, 0.0), (0.0, 1.0)] {
            let r = maccamy_equivalence_residual(lambda, &m, z0, z1, &g).unwrap();
            worst = worst.max(r / (h * h));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst <= EQUIVALENCE_C && secs < 10.0,
        format!("max residual / h^2 = {worst:.2} <= C = {EQUIVALENCE_C}, {secs:.2}s < 10s"),
    )
}

// 3. Zero kernel: every modal path equals the cosine-operator solution, and
// the modal energy is conserved.
fn elastic_limit() -> Outcome {
    let basis = EigenBasis::interval(6, PI, Endpoint::Left).unwrap();
    let g = TimeGrid::from_horizon(10.0, 2000).unwrap();
    let u0 = CoeffState::from_real(&[1.0, -0.5, 0.25, 0.0, 0.1, 0.3], Scale::H10);
    let u1 = CoeffState::from_real(&[0.0, 1.0, 0.0, -0.2, 0.4, 0.0], Scale::L2);
    let zero_k = vec![0.0; g.len()];
    let zero_data = MacCamyData::zero(g);
    let exact: Vec<_> = g
        .nodes()
        .map(|t| elastic_solution(&u0, &u1, None, None, t, &basis).unwrap())
        .collect();
    let mut path_err: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for n in 0..basis.len() {
        let l = basis.lambda(n);
        let (x, y) = (u0.coeffs()[n].re, u1.coeffs()[n].re);
        let paths = [
            solve_modal_memory(l, &MemoryKernel::zero(), x, y, None, &g).unwrap(),
            solve_modal_maccamy(l, 0.0, &zero_k, x, y, None, &g).unwrap(),
            solve_modal_damped(l, &zero_data, x, y, None, &g).unwrap(),
            solve_modal_volterra(l, 0.0, &zero_k, x, y, None, &g).unwrap(),
        ];
        for p in &paths {
            for (j, (u, up)) in exact.iter().enumerate() {
                path_err = path_err
                    .max((p.z()[j] - u.coeffs()[n].re).abs())
                    .max((p.zp()[j] - up.coeffs()[n].re).abs() / l);
            }
        }
        let e0 = (l * x).powi(2) + y * y;
        if e0 > 0.0 {
            let p = &paths[0];
            for j in 0..g.len() {
                let e = (l * p.z()[j]).powi(2) + p.zp()[j].powi(2);
                drift = drift.max((e - e0).abs() / e0);
            }
        }
    }
    (
        path_err <= 1e-10 && drift <= 1e-12,
        format!("path error {path_err:.2e} <= 1e-10, relative energy drift {drift:.2e} <= 1e-12 on [0, 10]"),
    )
}

// 4. Product identity of the cosine family on random data.
fn cosine_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let basis = EigenBasis::interval(50, PI, Endpoint::Left).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s = rng.gen_range(-10.0..10.0);
        let r = rng.gen_range(-10.0..10.0);
        let coeffs = (0..50)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let state = CoeffState::new(coeffs, Scale::L2);
        worst = worst.max(check_product_identity(s, r, &state, &basis).unwrap());
    }
    (worst <= 1e-12, format!("max residual {worst:.2e} <= 1e-12 over 100 triples"))
}

// 5. Elastic Gramian at T = 2 pi against 4 I.
fn gramian_oracle() -> Outcome {
    let start = Instant::now();
    let basis = EigenBasis::interval(20, PI, Endpoint::Left).unwrap();
    let t = 2.0 * PI;
    let mut msgs = Vec::new();
    let mut ok = true;
    for steps in [250usize, 500, 1000] {
        let g = TimeGrid::from_horizon(t, steps).unwrap();
        let gram = build_elastic_moment_matrix(&basis, t, &g, &left()).unwrap().gramian();
        let mut err: f64 = 0.0;
        for i in 0..40 {
            for j in 0..40 {
                let target = if i == j { 4.0 } else { 0.0 };
                err = err.max((gram[(i, j)] - target).abs());
            }
        }
        let h2 = g.step().powi(2);
        ok &= err <= h2;
        msgs.push(format!("{err:.1e} (h^2 {h2:.1e})"));
    }
    let secs = start.elapsed().as_secs_f64();
    (
        ok && secs < 5.0,
        format!("entrywise error vs 4I: {} all <= h^2, {secs:.2}s < 5s", msgs.join(", ")),
    )
}

// 6. Elastic steering to (e1, 0) past the critical time.
fn elastic_closed_loop() -> Outcome {
    let basis = EigenBasis::interval(20, PI, Endpoint::Left).unwrap();
    let t = 2.0 * PI + 0.3;
    let g = TimeGrid::from_horizon(t, 2000).unwrap();
    let (xi, eta) = e1(20);
    let mm = build_elastic_moment_matrix(&basis, t, &g, &left()).unwrap();
    let sol = min_norm_control(&xi, &eta, &mm, 1e-10).unwrap();
    let rep = steer_and_verify(&sol.control, &MemoryKernel::zero(), &basis, &xi, &eta, t, SimulationForm::Memory)
        .unwrap();
    (
        rep.terminal_error_hm1_l2 <= 1e-6,
        format!(
            "terminal error {:.2e} <= 1e-6, control norm {:.4}",
            rep.terminal_error_hm1_l2, rep.control_norm
        ),
    )
}

/// Regression floor for the inverse constant of the viscoelastic map at
/// `T1 = 2 pi + 0.3`, `N <= 40` (observed minimum 4.98 at N = 40).
const INVERSE_FLOOR: f64 = 4.9;

// 7. Viscoelastic steering with T1 = 2 pi + 0.3 and the inverse constant.
fn viscoelastic_closed_loop() -> Outcome {
    let t = 2.0 * PI + 0.3;
    let g = TimeGrid::from_horizon(t, 2000).unwrap();
    let basis = EigenBasis::interval(40, PI, Endpoint::Left).unwrap();
    let b20 = basis.truncated(20).unwrap();
    let (xi, eta) = e1(20);
    let mm = build_viscoelastic_moment_matrix(&b20, &kernel(), t, &g, &left()).unwrap();
    let sol = min_norm_control(&xi, &eta, &mm, 1e-10).unwrap();
    let rep = steer_and_verify(&sol.control, &kernel(), &b20, &xi, &eta, t, SimulationForm::Memory).unwrap();
    let mut m_hat = Vec::new();
    for n in [10, 20, 30, 40] {
        let b = basis.truncated(n).unwrap();
        let mm = build_viscoelastic_moment_matrix(&b, &kernel(), t, &g, &left()).unwrap();
        m_hat.push(inverse_inequality_constant(&mm));
    }
    let floor = m_hat.iter().copied().fold(f64::INFINITY, f64::min);
    (
        rep.terminal_error_hm1_l2 <= 1e-4 && floor > 0.0 && floor >= INVERSE_FLOOR,
        format!(
            "terminal error {:.2e} <= 1e-4; m_hat(N = 10, 20, 30, 40) = {:.3}, {:.3}, {:.3}, {:.3}, floor {floor:.3} >= {INVERSE_FLOOR}",
            rep.terminal_error_hm1_l2, m_hat[0], m_hat[1], m_hat[2], m_hat[3]
        ),
    )
}

// 8. Below the critical time: m_hat collapses with N and steering fails.
fn subcritical_contrast() -> Outcome {
    let t = PI;
    let g = TimeGrid::from_horizon(t, 2000).unwrap();
    let basis = EigenBasis::interval(40, PI, Endpoint::Left).unwrap();
    let m_hat: Vec<f64> = (1..=10)
        .map(|n| {
            let b = basis.truncated(n).unwrap();
            inverse_inequality_constant(&build_elastic_moment_matrix(&b, t, &g, &left()).unwrap())
        })
        .collect();
    let worst_ratio = m_hat.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let residuals: Vec<f64> = [20usize, 40]
        .iter()
        .map(|&n| {
            let b = basis.truncated(n).unwrap();
            let (xi, eta) = e1(n);
            let mm = build_elastic_moment_matrix(&b, t, &g, &left()).unwrap();
            min_norm_control(&xi, &eta, &mm, 1e-10).unwrap().residual
        })
        .collect();
    let floor = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    (
        worst_ratio <= 0.5 && floor >= 0.05,
        format!(
            "m_hat(N+1)/m_hat(N) <= {worst_ratio:.3} <= 0.5 for N = 1..10 (m_hat(10) = {:.1e}); residual N = 20, 40: {:.3}, {:.3} >= 0.05",
            m_hat[9], residuals[0], residuals[1]
        ),
    )
}

// 9. Spectrum of (memory - elastic) map: negative, grid-stable decay exponent.
fn compact_perturbation() -> Outcome {
    let basis = EigenBasis::interval(20, PI, Endpoint::Left).unwrap();
    let t = 2.0 * PI + 0.3;
    let exps: Vec<f64> = [2000usize, 4000, 8000]
        .iter()
        .map(|&steps| {
            let g = TimeGrid::from_horizon(t, steps).unwrap();
            let e = build_elastic_moment_matrix(&basis, t, &g, &left()).unwrap();
            let v = build_undamped_moment_matrix(&basis, &kernel(), t, &g, &left()).unwrap();
            reachability_gap(&e, &v).unwrap().decay_exponent().unwrap_or(f64::NAN)
        })
        .collect();
    let spread = exps.iter().map(|e| (e / exps[0] - 1.0).abs()).fold(0.0, f64::max);
    (
        exps.iter().all(|e| *e < 0.0) && spread <= 0.2,
        format!(
            "decay exponents {:.4}, {:.4}, {:.4} (2000/4000/8000 steps) < 0, spread {:.1e} <= 20%",
            exps[0], exps[1], exps[2], spread
        ),
    )
}

// 10. Picard series against the time-stepped solution on [0, 2 pi].
fn picard() -> Outcome {
    let basis = EigenBasis::interval(5, PI, Endpoint::Left).unwrap();
    let g = TimeGrid::from_horizon(2.0 * PI, 2000).unwrap();
    let d = maccamy_constants(&resolvent_on_grid(&kernel(), &g).unwrap()).unwrap().without_damping();
    let xi = CoeffState::from_real(&[1.0, 0.5, 0.0, 0.0, 0.2], Scale::H10);
    let eta = CoeffState::from_real(&[0.0, 1.0, 0.0, 0.3, 0.0], Scale::L2);
    let p = picard_series(&xi, &eta, &d, g.horizon(), &basis, 8).unwrap();
    let ratios: Vec<f64> = p.term_norms.windows(2).map(|w| w[1] / w[0]).collect();
    let q = ratios.iter().copied().fold(0.0, f64::max);
    let stepped: Vec<_> = (0..5)
        .map(|n| {
            solve_modal_maccamy(basis.lambda(n), d.b, &d.k, xi.coeffs()[n].re, eta.coeffs()[n].re, None, &g)
                .unwrap()
        })
        .collect();
    let mut gap: f64 = 0.0;
    for j in 0..g.len() {
        let s: f64 = (0..5)
            .map(|n| (basis.lambda(n) * (p.trajectories[n][j] - stepped[n].z()[j])).powi(2))
            .sum();
        gap = gap.max(s.sqrt());
    }
    (
        q <= 0.75 && gap <= p.tail_bound,
        format!(
            "term ratios <= {q:.3} <= 0.75; sup gap to stepper {gap:.2e} <= tail bound {:.2e}",
            p.tail_bound
        ),
    )
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_cli(verb: &str, config: &Path, out: &Path, seed: &str) -> bool {
    Command::new(env!("CARGO_BIN_EXE_memwave"))
        .args([verb, "--seed", seed, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

// 11. Byte-identical CLI output for repeated runs.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs = [
        ("resolvent", "resolvent.toml"),
        ("simulate", "verify.toml"),
        ("control", "elastic_control.toml"),
        ("control", "memory_control.toml"),
        ("verify", "verify.toml"),
        ("sweep", "horizon_sweep.toml"),
    ];
    let mut files = 0;
    for (k, (verb, cfg)) in runs.iter().enumerate() {
        let cfg = configs_dir().join(cfg);
        let a = dir.path().join(format!("{k}a"));
        let b = dir.path().join(format!("{k}b"));
        if !(run_cli(verb, &cfg, &a, "17") && run_cli(verb, &cfg, &b, "17")) {
            return (false, format!("`memwave {verb}` on {} failed", cfg.display()));
        }
        for entry in fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            if fs::read(a.join(&name)).unwrap() != fs::read(b.join(&name)).unwrap() {
                return (false, format!("{} differs between runs of `{verb}`", name.to_string_lossy()));
            }
            files += 1;
        }
    }
    (files >= 12, format!("{files} output files byte-identical across repeated runs of all 5 verbs"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("resolvent oracle", resolvent_oracle),
        ("transformed-form equivalence", maccamy_equivalence),
        ("elastic limit", elastic_limit),
        ("cosine product identity", cosine_identity),
        ("moment Gramian oracle", gramian_oracle),
        ("elastic closed loop", elastic_closed_loop),
        ("viscoelastic closed loop", viscoelastic_closed_loop),
        ("sub-critical horizon", subcritical_contrast),
        ("compact perturbation", compact_perturbation),
        ("Picard series", picard),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!("[{}] {:>2}. {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
