//! The five run commands: validate, simulate, stationary, spectrum, converge.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use padr_core::dynamics::{self, Trajectory};
use padr_core::energy::EnergyBreakdown;
use padr_core::io as snapshot_io;
use padr_core::operator::{UltradiffOperator, DENSE_GUARD};
use padr_core::reaction;
use padr_core::stationary;
use padr_core::Error as CoreError;

use crate::config::RunConfig;

/// Eigensolves inside `validate` are a convenience; keep them snappy.
const VALIDATE_SPECTRUM_GUARD: u64 = 512;

/// Round an eigenvalue for display: 12 significant digits, snapping values
/// below `1e-12 * scale` to zero (dense-solver noise sits at machine
/// precision of the spectral radius).
fn round_display(v: f64, scale: f64) -> f64 {
    if v.abs() <= 1e-12 * scale {
        0.0
    } else {
        format!("{v:.11e}").parse().expect("formatted float")
    }
}

/// Aggregate validation: hypotheses, band conditions, derived constants,
/// Q-matrix report. Returns whether everything passed.
pub fn cmd_validate(cfg: &RunConfig) -> anyhow::Result<bool> {
    let params = cfg.grid_params()?;
    println!(
        "grid: p = {}, n = {}, N = {} (M = {})",
        params.p,
        params.n,
        params.resolution,
        params.num_points()
    );

    let kernel = cfg.kernel(&params)?;
    let tk = kernel.truncate(&params)?;
    println!(
        "kernel: total mass = {}, j_N = {}, diag_mass = {}",
        kernel.total_mass(&params)?,
        tk.j_n(),
        tk.diag_mass()
    );

    let f = cfg.polynomial()?;
    let r = &cfg.reaction;
    println!("reaction: lambda = {}", r.lambda);
    let report = reaction::admissibility_report(&f, r.lambda, r.alpha_minus, r.alpha_plus, r.delta);
    let mut all_ok = true;
    for check in &report.checks {
        let status = if check.passed { "pass" } else { "FAIL" };
        println!("  [{status}] {} ({})", check.name, check.detail);
        all_ok &= check.passed;
    }
    if let Ok((u_minus, u_plus)) = reaction::extreme_roots(&f, r.lambda) {
        println!("  u_- = {u_minus}, u_+ = {u_plus}");
    }
    if let Ok(lm) = reaction::lambda_min(&f, r.alpha_minus, r.alpha_plus) {
        println!("  lambda_min = {lm}");
    }
    let h_max = reaction::step_bound(&f, r.lambda, r.alpha_minus, r.alpha_plus);
    println!("  h_max = {h_max}");

    let op = UltradiffOperator::build(params, &tk)?;
    let qreport = op.validate_qmatrix();
    let status = if qreport.passed() { "pass" } else { "FAIL" };
    println!(
        "  [{status}] Q-matrix (max row-sum residual = {}, tolerance = {})",
        qreport.max_rowsum_residual, qreport.rowsum_tolerance
    );
    all_ok &= qreport.passed();

    println!("spectrum: coefficient bound [0, {}]", 2.0 * op.j_n());
    if params.num_points() <= VALIDATE_SPECTRUM_GUARD {
        let spectrum = op.spectrum()?;
        let top = spectrum.last().copied().unwrap();
        println!(
            "  computed range [{}, {}]",
            round_display(*spectrum.first().unwrap(), top.abs().max(1.0)),
            round_display(top, top.abs().max(1.0))
        );
    }

    if let Some(integrator) = cfg.integrator.as_ref() {
        let _ = integrator; // presence only; the guard needs the built reaction
        match cfg.reaction().and_then(|rx| {
            cfg.integrator()?.validate(&op, &rx)?;
            Ok(())
        }) {
            Ok(()) => println!("  [pass] integrator step guards"),
            Err(e) => {
                println!("  [FAIL] integrator step guards ({e})");
                all_ok = false;
            }
        }
    }

    println!("RESULT: {}", if all_ok { "PASS" } else { "FAIL" });
    Ok(all_ok)
}

#[derive(Serialize)]
struct EnergyJson {
    interaction: f64,
    potential: f64,
    total: f64,
}

impl From<&EnergyBreakdown> for EnergyJson {
    fn from(e: &EnergyBreakdown) -> Self {
        EnergyJson {
            interaction: e.interaction,
            potential: e.potential,
            total: e.total,
        }
    }
}

#[derive(Serialize)]
struct TrajectoryRecord {
    t: f64,
    min: f64,
    max: f64,
    energy: EnergyJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    sup_dist_to_target: Option<f64>,
}

fn write_trajectory_files(dir: &Path, traj: &Trajectory) -> anyhow::Result<()> {
    let mut ndjson = fs::File::create(dir.join("trajectory.ndjson"))?;
    for (k, t) in traj.times.iter().enumerate() {
        let record = TrajectoryRecord {
            t: *t,
            min: traj.snapshots[k].min(),
            max: traj.snapshots[k].max(),
            energy: EnergyJson::from(&traj.energy_trace[k]),
            sup_dist_to_target: traj.sup_dist_to_target.as_ref().map(|d| d[k]),
        };
        writeln!(ndjson, "{}", serde_json::to_string(&record)?)?;
    }

    let mut csv = fs::File::create(dir.join("energy.csv"))?;
    writeln!(csv, "t,interaction,potential,total")?;
    for (t, e) in traj.times.iter().zip(&traj.energy_trace) {
        writeln!(csv, "{t},{},{},{}", e.interaction, e.potential, e.total)?;
    }
    Ok(())
}

/// Integrate the configured run and write trajectory, energy trace and the
/// final snapshot. Integration aborts leave a diagnostic JSON next to the
/// outputs.
pub fn cmd_simulate(cfg: &RunConfig) -> anyhow::Result<()> {
    let params = cfg.grid_params()?;
    let kernel = cfg.kernel(&params)?;
    let op = UltradiffOperator::build(params, &kernel.truncate(&params)?)?;
    let rx = cfg.reaction()?;
    let integrator = cfg.integrator()?;
    let u0 = cfg.initial_state(params, &rx)?;

    let dir = &cfg.outputs.directory;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let traj = match dynamics::integrate(&u0, &op, &rx, &integrator) {
        Ok(traj) => traj,
        Err(err @ CoreError::Integration { .. }) => {
            let diag = serde_json::json!({
                "aborted": true,
                "error": err.to_string(),
            });
            fs::write(dir.join("abort.json"), serde_json::to_string_pretty(&diag)?)?;
            return Err(err.into());
        }
        Err(other) => return Err(other.into()),
    };

    write_trajectory_files(dir, &traj)?;
    snapshot_io::write_snapshot(dir.join("final.snapshot"), params, traj.final_state())?;
    println!(
        "simulate (seed {}): {} records to {}, final range [{}, {}]",
        cfg.seed,
        traj.times.len(),
        dir.display(),
        traj.final_state().min(),
        traj.final_state().max()
    );
    Ok(())
}

#[derive(Serialize)]
struct BandJson {
    passed: bool,
    inner_margin: f64,
    outer_margin: f64,
}

#[derive(Serialize)]
struct StationaryJson {
    residual: f64,
    iterations: usize,
    contraction_rate: f64,
    bands: BandJson,
}

/// Solve the configured pattern and write the state plus a JSON report.
pub fn cmd_stationary(cfg: &RunConfig) -> anyhow::Result<()> {
    let params = cfg.grid_params()?;
    let kernel = cfg.kernel(&params)?;
    let op = UltradiffOperator::build(params, &kernel.truncate(&params)?)?;
    let rx = cfg.reaction()?;
    let pattern = cfg.pattern(params)?;
    let section = &cfg.stationary;

    let sol = stationary::solve(&pattern, &op, &rx, section.h, section.tol, section.max_iter)?;
    let bands = stationary::verify_bands(&sol.u_tilde, &pattern, &rx)?;

    let dir = &cfg.outputs.directory;
    fs::create_dir_all(dir)?;
    snapshot_io::write_snapshot(dir.join("stationary.snapshot"), params, &sol.u_tilde)?;
    let json = StationaryJson {
        residual: sol.residual,
        iterations: sol.iterations,
        contraction_rate: sol.contraction_rate,
        bands: BandJson {
            passed: bands.passed,
            inner_margin: bands.inner_margin,
            outer_margin: bands.outer_margin,
        },
    };
    fs::write(
        dir.join("stationary.json"),
        serde_json::to_string_pretty(&json)?,
    )?;
    println!(
        "stationary: residual {} after {} iterations, bands {}",
        sol.residual,
        sol.iterations,
        if bands.passed { "pass" } else { "FAIL" }
    );
    Ok(())
}

/// Dense symmetric eigensolve (guarded to M <= 4096), written as one CSV
/// line of ascending eigenvalues. Values are rounded to 12 significant
/// digits for display (solver noise sits at 1e-16 of the spectral radius).
pub fn cmd_spectrum(cfg: &RunConfig) -> anyhow::Result<()> {
    let params = cfg.grid_params()?;
    if params.num_points() > DENSE_GUARD {
        return Err(CoreError::Guard(format!(
            "spectrum limited to M <= {DENSE_GUARD}, grid has {}",
            params.num_points()
        ))
        .into());
    }
    let kernel = cfg.kernel(&params)?;
    let op = UltradiffOperator::build(params, &kernel.truncate(&params)?)?;
    let spectrum = op.spectrum()?;

    let scale = spectrum.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let dir = &cfg.outputs.directory;
    fs::create_dir_all(dir)?;
    let line: Vec<String> = spectrum
        .iter()
        .map(|&v| format!("{}", round_display(v, scale)))
        .collect();
    fs::write(dir.join("spectrum.csv"), format!("{}\n", line.join(",")))?;

    // dense realization for external verification, canonical row order
    let mut dense = std::io::BufWriter::new(fs::File::create(dir.join("operator.csv"))?);
    op.export_dense_csv(&mut dense)?;
    dense.flush()?;

    println!("spectrum: {}", line.join(","));
    Ok(())
}

/// Multi-resolution convergence study over the configured ladder.
pub fn cmd_converge(cfg: &RunConfig) -> anyhow::Result<()> {
    let params = cfg.grid_params()?;
    let kernel = cfg.kernel(&params)?;
    let rx = cfg.reaction()?;
    let integrator = cfg.integrator()?;
    let profile = cfg.profile(params)?;
    let section = cfg
        .converge
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config is missing the \"converge\" section"))?;

    let rows = padr_core::approx::convergence_study(
        &profile,
        &kernel,
        &rx,
        &integrator,
        params,
        &section.n_list,
    )?;

    let dir = &cfg.outputs.directory;
    fs::create_dir_all(dir)?;
    let mut csv = fs::File::create(dir.join("converge.csv"))?;
    writeln!(csv, "n_coarse,n_fine,sup_gap,semigroup_gap,runtime_ms")?;
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            row.n_coarse, row.n_fine, row.sup_gap, row.semigroup_gap, row.runtime_ms
        )?;
        println!(
            "converge: N {} -> {}: sup gap {}, semigroup gap {}",
            row.n_coarse, row.n_fine, row.sup_gap, row.semigroup_gap
        );
    }
    Ok(())
}
