//! Acceptance suite. Each test pins one criterion at its stated tolerance
//! and prints a `ACCEPTANCE <k> ...: PASS` line (visible with
//! `cargo test --test acceptance -- --nocapture`). Criterion 10
//! (byte-determinism of the command-line tool) lives in the cli crate's
//! acceptance test.

mod common;

use std::time::Instant;

use common::{build_operator, newton_stationary, random_kernel, random_state, TestRng};
use padr_core::approx::{self, Profile};
use padr_core::dynamics::{self, IntegratorConfig, Method};
use padr_core::energy;
use padr_core::grid::{GridIndex, GridParams};
use padr_core::kernel::RadialKernel;
use padr_core::operator::UltradiffOperator;
use padr_core::reaction::Reaction;
use padr_core::state::State;
use padr_core::stationary::{self, PatternSet};

fn params(p: u32, n: u32, nn: u32) -> GridParams {
    GridParams::new(p, n, nn).unwrap()
}

fn canonical_operator() -> UltradiffOperator {
    let g = params(2, 1, 1);
    let kernel = RadialKernel::table([(0, 1.0), (1, 0.5)].into_iter().collect())
        .unwrap()
        .normalize(&g)
        .unwrap();
    build_operator(g, &kernel)
}

/// Grid cycle for the random-kernel criteria; spans M = 4 .. 4096.
fn grid_cycle() -> Vec<GridParams> {
    vec![
        params(2, 1, 1), // 4
        params(3, 1, 1), // 9
        params(2, 1, 2), // 16
        params(5, 1, 1), // 25
        params(2, 2, 1), // 16
        params(7, 1, 1), // 49
        params(3, 1, 2), // 81
        params(2, 1, 3), // 64
        params(2, 2, 2), // 256
        params(3, 2, 1), // 81
        params(2, 1, 5), // 1024
        params(2, 1, 6), // 4096
    ]
}

/// Criterion 1: -A is a Q-matrix and e^{-tA} is a stochastic semigroup,
/// over 50 random normalized kernels on grids up to M = 4096. The dense
/// exponential entries are realized column by column where the dense
/// realization is tractable (M <= 243); on the larger grids positivity and
/// unit row sums are checked through the action on indicator data and the
/// ones vector at the same tolerances.
#[test]
fn acceptance_01_qmatrix_and_stochastic_semigroup() {
    let started = Instant::now();
    let mut rng = TestRng::new(0xACCE01);
    let grids = grid_cycle();
    let times = [0.1, 1.0, 10.0];
    for trial in 0..50 {
        let g = grids[trial % grids.len()];
        let kernel = random_kernel(&mut rng, &g, g.resolution as i32 + 1);
        let op = build_operator(g, &kernel);
        let m = op.dim();

        // off-diagonals of -A are the interaction coefficients: >= 0 exactly
        let report = op.validate_qmatrix();
        assert!(
            report.negative_levels.is_empty(),
            "trial {trial}: {report:?}"
        );
        // row sums of A vanish within 1e-12 j_N
        assert!(
            report.max_rowsum_residual <= 1e-12 * op.j_n().max(f64::MIN_POSITIVE),
            "trial {trial}: residual {}",
            report.max_rowsum_residual
        );

        for &t in &times {
            let ones = State::constant(m, 1.0);
            let pt_ones = op.semigroup_apply(&ones, t, 1e-13).unwrap();
            assert!(
                pt_ones.sup_distance(&ones).unwrap() <= 1e-10,
                "trial {trial}: semigroup row sums off at t = {t}"
            );
            if m <= 243 {
                // dense exponential, one column per basis vector
                let mut row_sums = vec![0.0f64; m];
                for j in 0..m {
                    let mut e = State::zeros(m);
                    e[j] = 1.0;
                    let col = op.semigroup_apply(&e, t, 1e-13).unwrap();
                    for i in 0..m {
                        assert!(
                            col[i] >= -1e-12,
                            "trial {trial}: negative entry {} at ({i},{j}), t = {t}",
                            col[i]
                        );
                        row_sums[i] += col[i];
                    }
                }
                for (i, s) in row_sums.iter().enumerate() {
                    assert!(
                        (s - 1.0).abs() <= 1e-10,
                        "trial {trial}: row {i} sums to {s} at t = {t}"
                    );
                }
            } else {
                // large grid: positivity spot-check on nonnegative data
                let u = State::new((0..m).map(|_| rng.unit()).collect());
                let pu = op.semigroup_apply(&u, t, 1e-13).unwrap();
                assert!(pu.min() >= -1e-12 * u.max(), "trial {trial}, t = {t}");
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "criterion 1 overran: {elapsed:?}");
    println!("ACCEPTANCE 1 (Q-matrix and stochastic semigroup): PASS [{elapsed:?}]");
}

/// Criterion 2: spectrum inside [0, 2 j_N] (within 1e-10) for random
/// kernels, and the two worked 4x4 operators resolve their exact spectra
/// to 1e-12.
#[test]
fn acceptance_02_spectrum_bounds() {
    let started = Instant::now();

    let g = params(2, 1, 1);
    let uniform = RadialKernel::uniform_ball(1).normalize(&g).unwrap();
    let eigs = build_operator(g, &uniform).spectrum().unwrap();
    for (got, want) in eigs.iter().zip([0.0, 1.0, 1.0, 1.0]) {
        assert!((got - want).abs() <= 1e-12, "uniform spectrum {eigs:?}");
    }
    let eigs = canonical_operator().spectrum().unwrap();
    for (got, want) in eigs.iter().zip([0.0, 1.0, 1.5, 1.5]) {
        assert!((got - want).abs() <= 1e-12, "table spectrum {eigs:?}");
    }

    let mut rng = TestRng::new(0xACCE02);
    for trial in 0..20 {
        let g = [
            params(2, 1, 2),
            params(3, 1, 1),
            params(2, 2, 1),
            params(3, 1, 2),
            params(2, 1, 3),
        ][trial % 5];
        let kernel = random_kernel(&mut rng, &g, g.resolution as i32 + 1);
        let op = build_operator(g, &kernel);
        let spectrum = op.spectrum().unwrap();
        assert!(spectrum[0] >= -1e-10, "trial {trial}: {}", spectrum[0]);
        assert!(
            *spectrum.last().unwrap() <= 2.0 * op.j_n() + 1e-10,
            "trial {trial}: max {} vs 2 j_N = {}",
            spectrum.last().unwrap(),
            2.0 * op.j_n()
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 5, "criterion 2 overran: {elapsed:?}");
    println!("ACCEPTANCE 2 (spectrum bounds and worked spectra): PASS [{elapsed:?}]");
}

/// Criterion 3: the hierarchical apply equals the dense one to 1e-12
/// relative up to M = 4096, and its measured cost scales like M·N — the
/// 4096/1024 timing ratio stays at most 6 (a dense apply would be 16).
#[test]
fn acceptance_03_fast_operator_correctness_and_scaling() {
    let started = Instant::now();
    let mut rng = TestRng::new(0xACCE03);

    for g in grid_cycle() {
        let kernel = random_kernel(&mut rng, &g, g.resolution as i32 + 1);
        let op = build_operator(g, &kernel);
        let u = random_state(&mut rng, op.dim());
        let fast = op.matvec_fast(&u).unwrap();
        let dense = op.matvec_dense(&u).unwrap();
        let scale = dense.sup_norm().max(1e-30);
        assert!(
            fast.sup_distance(&dense).unwrap() <= 1e-12 * scale,
            "fast/dense mismatch on {g:?}"
        );
    }

    // timing: cost floor (min over trials) of a fixed batch of fast applies
    let time_batch = |g: GridParams, rng: &mut TestRng| -> f64 {
        let kernel = random_kernel(rng, &g, g.resolution as i32 + 1);
        let op = build_operator(g, &kernel);
        let u = random_state(rng, op.dim());
        // warm up
        let mut sink = op.matvec_fast(&u).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..15 {
            let t0 = Instant::now();
            for _ in 0..200 {
                sink = op.matvec_fast(&sink).unwrap();
                // rescale to keep values finite across iterations
                let norm = sink.sup_norm();
                if norm > 1.0 {
                    sink.scale(1.0 / norm);
                }
            }
            best = best.min(t0.elapsed().as_secs_f64());
        }
        best
    };
    let small = time_batch(params(2, 1, 5), &mut rng);
    let large = time_batch(params(2, 1, 6), &mut rng);
    let ratio = large / small;
    assert!(
        ratio <= 6.0,
        "timing ratio M=4096 vs M=1024 is {ratio:.2} (> 6)"
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "criterion 3 overran: {elapsed:?}");
    println!(
        "ACCEPTANCE 3 (fast operator correctness, scaling ratio {ratio:.2}): PASS [{elapsed:?}]"
    );
}

/// Criterion 4: the gradient matches central finite differences of the
/// energy at 1e-6 relative on 20 random states, and the energy trace is
/// nonincreasing (per-step slack 1e-10) along recorded trajectories.
#[test]
fn acceptance_04_gradient_energy_consistency() {
    let started = Instant::now();
    let mut rng = TestRng::new(0xACCE04);
    let rx = Reaction::canonical();

    let op4 = canonical_operator();
    let g16 = params(2, 1, 2);
    let kernel16 = RadialKernel::exp_landscape(1.0).normalize(&g16).unwrap();
    let op16 = build_operator(g16, &kernel16);

    let eps = 1e-6;
    for trial in 0..20 {
        let op = if trial % 2 == 0 { &op4 } else { &op16 };
        let u = random_state(&mut rng, op.dim());
        let grad = energy::gradient(&u, op, &rx).unwrap();
        for k in 0..u.len() {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[k] += eps;
            dn[k] -= eps;
            let fd = (energy::energy(&up, op, &rx).unwrap().total
                - energy::energy(&dn, op, &rx).unwrap().total)
                / (2.0 * eps);
            let denom = grad[k].abs().max(1e-9);
            assert!(
                (grad[k] - fd).abs() / denom <= 1e-6,
                "trial {trial}, component {k}: {} vs {fd}",
                grad[k]
            );
        }
    }

    // descent along trajectories, dt at h_max / 2
    let dt = rx.bands().unwrap().h_max / 2.0;
    for trial in 0..10 {
        let op = if trial % 2 == 0 { &op4 } else { &op16 };
        let u0 = random_state(&mut rng, op.dim());
        let cfg = IntegratorConfig::new(Method::Rk4, dt, 5.0);
        let traj = dynamics::integrate(&u0, op, &rx, &cfg).unwrap();
        let mut prev = f64::INFINITY;
        for e in &traj.energy_trace {
            assert!(
                e.total <= prev + 1e-10 * (1.0 + prev.abs()),
                "trial {trial}: energy rose from {prev} to {}",
                e.total
            );
            prev = e.total;
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "criterion 4 overran: {elapsed:?}");
    println!("ACCEPTANCE 4 (gradient/energy consistency and descent): PASS [{elapsed:?}]");
}

/// Criterion 5: all 16 patterns on the canonical 4-point grid converge with
/// residual <= 1e-10, land in their bands, and agree with a dense Newton
/// solve to 1e-8.
#[test]
fn acceptance_05_stationary_patterns() {
    let started = Instant::now();
    let op = canonical_operator();
    let rx = Reaction::canonical();
    let g = op.params();
    for mask in 0u64..16 {
        let members: Vec<u64> = (0..4).filter(|k| mask & (1 << k) != 0).collect();
        let pattern = PatternSet::new(g, members).unwrap();
        let sol = stationary::solve(&pattern, &op, &rx, 0.0625, 1e-12, 1_000_000)
            .unwrap_or_else(|e| panic!("pattern {mask:04b}: {e}"));
        assert!(
            sol.residual <= 1e-10,
            "pattern {mask:04b}: residual {}",
            sol.residual
        );
        let bands = stationary::verify_bands(&sol.u_tilde, &pattern, &rx).unwrap();
        assert!(bands.passed, "pattern {mask:04b}: {bands:?}");
        let start = stationary::two_level_profile(&pattern, &rx).unwrap();
        let oracle = newton_stationary(&op, &rx, &start, 1e-13);
        let gap = sol.u_tilde.sup_distance(&oracle).unwrap();
        assert!(gap <= 1e-8, "pattern {mask:04b}: newton gap {gap}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "criterion 5 overran: {elapsed:?}");
    println!("ACCEPTANCE 5 (stationary patterns, 16/16 with Newton oracle): PASS [{elapsed:?}]");
}

/// Criterion 6: ordering of 100 random ordered initial pairs is preserved
/// (margin >= -1e-9 at every recorded time) on p=2, n=1, N=3 over T = 10.
#[test]
fn acceptance_06_comparison_principle() {
    let started = Instant::now();
    let g = params(2, 1, 3);
    let kernel = RadialKernel::exp_landscape(1.0).normalize(&g).unwrap();
    let op = build_operator(g, &kernel);
    let rx = Reaction::canonical();
    let cfg = IntegratorConfig::new(Method::Rk4, 0.0625, 10.0).with_record_every(4);
    let mut rng = TestRng::new(0xACCE06);
    let m = op.dim();
    for trial in 0..100 {
        let lower: Vec<f64> = (0..m).map(|_| rng.symmetric()).collect();
        let upper: Vec<f64> = lower
            .iter()
            .map(|&v| (v + rng.unit() * (1.0 - v)).min(1.0))
            .collect();
        let report =
            dynamics::comparison_check(&State::new(upper), &State::new(lower), &op, &rx, &cfg)
                .unwrap();
        assert!(
            report.min_margin >= -1e-9,
            "trial {trial}: margin {} at t = {}",
            report.min_margin,
            report.worst_time
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "criterion 6 overran: {elapsed:?}");
    println!("ACCEPTANCE 6 (comparison principle, 100 ordered pairs): PASS [{elapsed:?}]");
}

/// Criterion 7: trajectories from u0 = ũ ± 0.05 stay inside the certified
/// envelopes and reach ũ to 1e-6 by t = 50.
#[test]
fn acceptance_07_envelope_convergence() {
    let started = Instant::now();
    let op = canonical_operator();
    let rx = Reaction::canonical();
    let g = op.params();
    let pattern = PatternSet::ball(g, &GridIndex::zero(g), 0).unwrap();
    let sol = stationary::solve(&pattern, &op, &rx, 0.0625, 1e-12, 1_000_000).unwrap();
    let u_tilde = &sol.u_tilde;

    let eps = 0.05;
    let beta = 0.1 * rx.lambda() * rx.bands().unwrap().delta; // 0.3
    let samples: Vec<f64> = (0..=50).map(|k| k as f64).collect();
    let cert = dynamics::envelope_certificate(u_tilde, &op, &rx, eps, beta, &samples)
        .expect("certificate must hold for the canonical parameters");
    assert!(cert.worst_super_defect >= -1e-9);
    assert!(cert.worst_sub_defect <= 1e-9);

    let cfg = IntegratorConfig::new(Method::Rk4, 0.0625, 50.0).with_record_every(8);
    for sign in [1.0, -1.0] {
        let u0 = u_tilde.map(|v| v + sign * eps);
        let traj = dynamics::integrate_tracked(&u0, &op, &rx, &cfg, Some(u_tilde)).unwrap();
        for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
            let (upper, lower) = dynamics::envelope_bounds(u_tilde, eps, beta, *t);
            for k in 0..snap.len() {
                assert!(
                    snap[k] <= upper[k] + 1e-9 && snap[k] >= lower[k] - 1e-9,
                    "sign {sign}: escape at t = {t}, index {k}"
                );
            }
        }
        let final_dist = traj
            .sup_dist_to_target
            .as_ref()
            .unwrap()
            .last()
            .copied()
            .unwrap();
        assert!(
            final_dist <= 1e-6,
            "sign {sign}: distance {final_dist} at t = 50"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "criterion 7 overran: {elapsed:?}");
    println!("ACCEPTANCE 7 (envelope containment and convergence to ũ): PASS [{elapsed:?}]");
}

/// Criterion 8: the convergence study produces strictly decreasing gaps for
/// the spread exponential-landscape kernel, and rounding-level gaps for the
/// compact-support case.
#[test]
fn acceptance_08_finite_approximation() {
    let started = Instant::now();
    let base = params(2, 1, 1);
    let rx = Reaction::canonical();
    let cfg = IntegratorConfig::new(Method::Rk4, 0.05, 5.0).with_record_every(10);

    let kernel = RadialKernel::exp_landscape(1.0).normalize(&base).unwrap();
    let phi = Profile::NormRule {
        center: GridIndex::zero(base),
        thresholds: vec![(0, 0.9), (1, -0.5), (2, 0.3)],
        far_value: 0.0,
    };
    let rows = approx::convergence_study(&phi, &kernel, &rx, &cfg, base, &[2, 3, 4]).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(
        rows[0].sup_gap > rows[1].sup_gap && rows[1].sup_gap > 0.0,
        "gaps not strictly decreasing: {rows:?}"
    );
    assert!(
        rows[0].semigroup_gap > rows[1].semigroup_gap,
        "semigroup gaps not decreasing: {rows:?}"
    );

    let compact_kernel = RadialKernel::table([(0, 1.0), (1, 0.5)].into_iter().collect())
        .unwrap()
        .normalize(&base)
        .unwrap();
    let compact_phi = Profile::DigitRule {
        scale: 1,
        values: vec![0.9, -0.4, 0.3, -0.8],
    };
    let rows =
        approx::convergence_study(&compact_phi, &compact_kernel, &rx, &cfg, base, &[2, 3, 4])
            .unwrap();
    for row in &rows {
        assert!(row.sup_gap <= 1e-12, "compact case leaked: {row:?}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 300, "criterion 8 overran: {elapsed:?}");
    println!("ACCEPTANCE 8 (finite approximation, Cauchy gaps): PASS [{elapsed:?}]");
}

/// Criterion 9: 50 random initial states in [-1, 1]^M stay inside
/// [-1 - 1e-9, 1 + 1e-9] along their trajectories.
#[test]
fn acceptance_09_invariant_interval() {
    let started = Instant::now();
    let mut rng = TestRng::new(0xACCE09);
    let rx = Reaction::canonical();
    let g16 = params(2, 1, 2);
    let op16 = build_operator(
        g16,
        &RadialKernel::exp_landscape(1.0).normalize(&g16).unwrap(),
    );
    let g64 = params(2, 1, 3);
    let op64 = build_operator(
        g64,
        &RadialKernel::table([(0, 1.0), (1, 0.5), (2, 0.25)].into_iter().collect())
            .unwrap()
            .normalize(&g64)
            .unwrap(),
    );
    let cfg = IntegratorConfig::new(Method::Rk4, 0.0625, 5.0).with_record_every(4);
    for trial in 0..50 {
        let op = if trial % 2 == 0 { &op16 } else { &op64 };
        let u0 = random_state(&mut rng, op.dim());
        let traj = dynamics::integrate(&u0, op, &rx, &cfg).unwrap();
        for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
            assert!(
                snap.min() >= -1.0 - 1e-9 && snap.max() <= 1.0 + 1e-9,
                "trial {trial}: interval left at t = {t} ({} .. {})",
                snap.min(),
                snap.max()
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "criterion 9 overran: {elapsed:?}");
    println!("ACCEPTANCE 9 (invariant interval [-1, 1]): PASS [{elapsed:?}]");
}
