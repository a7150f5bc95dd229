//! Time integration of `du/dt = -(A u + lambda f(u))`, comparison-principle
//! and sub/super-solution harnesses.
//!
//! The flow is integrated in the `X_N` normalization (no `p^-Nn` prefactor on
//! the right-hand side); the functional-gradient form differs from it by the
//! uniform time rescaling `t -> p^-Nn t`, so trajectories here use the same
//! time units at every resolution.
//!
//! Three integrators: explicit Euler, classical RK4, and a Picard iteration
//! on the mild-solution (variation of constants) form
//! `u(t) = e^{-tA} u0 - lambda ∫_0^t e^{-(t-s)A} f(u(s)) ds`,
//! with the semigroup factors evaluated by uniformization.

use crate::energy::{energy, EnergyBreakdown};
use crate::error::Error;
use crate::operator::UltradiffOperator;
use crate::reaction::Reaction;
use crate::state::State;
use crate::Result;

/// Absolute slack the comparison harness allows on ordering margins.
pub const ORDERING_TOL: f64 = 1e-9;

/// Any entry beyond this magnitude aborts a run as blow-up.
const BLOWUP_LIMIT: f64 = 10.0;

/// One-step method selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExplicitEuler,
    Rk4,
    PicardMild,
}

/// Integration run configuration.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    /// Record every this many steps (the initial and final states are always
    /// recorded).
    pub record_every: usize,
    /// Sup-norm tolerance of the Picard sweeps per subinterval.
    pub picard_tol: f64,
    /// When set, `dt` must stay below the contraction step bound `h_max`.
    pub contractive: bool,
}

impl IntegratorConfig {
    pub fn new(method: Method, dt: f64, t_end: f64) -> Self {
        IntegratorConfig {
            method,
            dt,
            t_end,
            record_every: 1,
            picard_tol: 1e-12,
            contractive: false,
        }
    }

    pub fn with_record_every(mut self, record_every: usize) -> Self {
        self.record_every = record_every;
        self
    }

    pub fn with_picard_tol(mut self, tol: f64) -> Self {
        self.picard_tol = tol;
        self
    }

    pub fn contractive(mut self) -> Self {
        self.contractive = true;
        self
    }

    /// Explicit stability guard `dt (2 j_N + lambda max|f'|) < 2` (Euler;
    /// the RK4 budget is wider by 1.4) plus the contraction bound when
    /// flagged.
    pub fn validate(&self, op: &UltradiffOperator, rx: &Reaction) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "t_end must be > 0, got {}",
                self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be >= 1".into()));
        }
        let stiffness = 2.0 * op.j_n() + rx.lambda() * rx.max_abs_f_prime_unit();
        let budget = match self.method {
            Method::ExplicitEuler => 2.0,
            Method::Rk4 => 2.0 * 1.4,
            Method::PicardMild => f64::INFINITY,
        };
        if self.dt * stiffness >= budget {
            return Err(Error::InvalidConfig(format!(
                "explicit step too large: dt * (2 j_N + lambda max|f'|) = {} >= {budget}",
                self.dt * stiffness
            )));
        }
        if self.contractive {
            let bands = rx.require_bands()?;
            if self.dt >= bands.h_max {
                return Err(Error::InvalidConfig(format!(
                    "contractive run requires dt < h_max = {}, got {}",
                    bands.h_max, self.dt
                )));
            }
        }
        if self.method == Method::PicardMild
            && (!self.picard_tol.is_finite() || self.picard_tol <= 0.0)
        {
            return Err(Error::InvalidConfig("picard_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Recorded run: times, snapshots, energy trace, and (when a target state was
/// supplied) the sup-norm distance to it at each recorded time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<State>,
    pub energy_trace: Vec<EnergyBreakdown>,
    pub sup_dist_to_target: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.snapshots.last().expect("trajectory records t = 0")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory records t = 0")
    }
}

struct Recorder<'a> {
    op: &'a UltradiffOperator,
    rx: &'a Reaction,
    target: Option<&'a State>,
    traj: Trajectory,
}

impl<'a> Recorder<'a> {
    fn new(op: &'a UltradiffOperator, rx: &'a Reaction, target: Option<&'a State>) -> Self {
        Recorder {
            op,
            rx,
            target,
            traj: Trajectory {
                times: Vec::new(),
                snapshots: Vec::new(),
                energy_trace: Vec::new(),
                sup_dist_to_target: target.map(|_| Vec::new()),
            },
        }
    }

    fn record(&mut self, t: f64, u: &State) -> Result<()> {
        self.traj.times.push(t);
        self.traj.energy_trace.push(energy(u, self.op, self.rx)?);
        if let (Some(target), Some(dists)) = (self.target, self.traj.sup_dist_to_target.as_mut()) {
            dists.push(u.sup_distance(target)?);
        }
        self.traj.snapshots.push(u.clone());
        Ok(())
    }
}

fn check_state(u: &State, step: usize) -> Result<()> {
    if !u.all_finite() {
        return Err(Error::Integration {
            step,
            reason: "state contains NaN or infinity".into(),
        });
    }
    let mag = u.sup_norm();
    if mag > BLOWUP_LIMIT {
        return Err(Error::Integration {
            step,
            reason: format!("blow-up: |u| reached {mag}"),
        });
    }
    Ok(())
}

/// `-(A u + lambda f(u))`.
fn rhs(op: &UltradiffOperator, rx: &Reaction, u: &State) -> Result<State> {
    let mut r = op.matvec_fast(u)?;
    let lambda = rx.lambda();
    for (ri, &ui) in r.as_mut_slice().iter_mut().zip(u.iter()) {
        *ri = -(*ri + lambda * rx.eval_f(ui));
    }
    Ok(r)
}

fn step_euler(op: &UltradiffOperator, rx: &Reaction, u: &State, dt: f64) -> Result<State> {
    let k1 = rhs(op, rx, u)?;
    let mut out = u.clone();
    out.axpy(dt, &k1)?;
    Ok(out)
}

fn step_rk4(op: &UltradiffOperator, rx: &Reaction, u: &State, dt: f64) -> Result<State> {
    let k1 = rhs(op, rx, u)?;
    let mut stage = u.clone();
    stage.axpy(0.5 * dt, &k1)?;
    let k2 = rhs(op, rx, &stage)?;
    let mut stage = u.clone();
    stage.axpy(0.5 * dt, &k2)?;
    let k3 = rhs(op, rx, &stage)?;
    let mut stage = u.clone();
    stage.axpy(dt, &k3)?;
    let k4 = rhs(op, rx, &stage)?;
    let mut out = u.clone();
    out.axpy(dt / 6.0, &k1)?;
    out.axpy(dt / 3.0, &k2)?;
    out.axpy(dt / 3.0, &k3)?;
    out.axpy(dt / 6.0, &k4)?;
    Ok(out)
}

/// Integrate with the configured one-step method, recording snapshots and the
/// energy trace.
pub fn integrate(
    u0: &State,
    op: &UltradiffOperator,
    rx: &Reaction,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_tracked(u0, op, rx, cfg, None)
}

/// [`integrate`] with an optional target state whose sup-norm distance is
/// recorded alongside the trajectory.
pub fn integrate_tracked(
    u0: &State,
    op: &UltradiffOperator,
    rx: &Reaction,
    cfg: &IntegratorConfig,
    target: Option<&State>,
) -> Result<Trajectory> {
    cfg.validate(op, rx)?;
    if u0.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: u0.len(),
        });
    }
    if !u0.all_finite() {
        return Err(Error::Integration {
            step: 0,
            reason: "initial state contains NaN or infinity".into(),
        });
    }
    if cfg.method == Method::PicardMild {
        return picard_mild_tracked(u0, op, rx, cfg, target);
    }

    let mut recorder = Recorder::new(op, rx, target);
    let mut u = u0.clone();
    let mut t = 0.0;
    recorder.record(t, &u)?;
    let mut step = 0usize;
    while t < cfg.t_end - 1e-12 * cfg.t_end {
        let dt = cfg.dt.min(cfg.t_end - t);
        u = match cfg.method {
            Method::ExplicitEuler => step_euler(op, rx, &u, dt)?,
            Method::Rk4 => step_rk4(op, rx, &u, dt)?,
            Method::PicardMild => unreachable!("dispatched above"),
        };
        step += 1;
        t += dt;
        check_state(&u, step)?;
        if step.is_multiple_of(cfg.record_every) || t >= cfg.t_end - 1e-12 * cfg.t_end {
            recorder.record(t, &u)?;
        }
    }
    Ok(recorder.traj)
}

/// Number of internal quadrature panels per Picard subinterval.
const PICARD_PANELS: usize = 4;
const PICARD_MAX_SWEEPS: usize = 100;

/// Mild-solution integrator: on each subinterval of length `dt` the integral
/// map is iterated on `PICARD_PANELS + 1` uniform nodes (trapezoid rule for
/// the running integrals, composite Simpson for the final value). One sweep
/// suffices when `lambda = 0`.
pub fn picard_mild(
    u0: &State,
    op: &UltradiffOperator,
    rx: &Reaction,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    picard_mild_tracked(u0, op, rx, cfg, None)
}

fn picard_mild_tracked(
    u0: &State,
    op: &UltradiffOperator,
    rx: &Reaction,
    cfg: &IntegratorConfig,
    target: Option<&State>,
) -> Result<Trajectory> {
    let mut recorder = Recorder::new(op, rx, target);
    let mut u = u0.clone();
    let mut t = 0.0;
    recorder.record(t, &u)?;
    let mut step = 0usize;
    while t < cfg.t_end - 1e-12 * cfg.t_end {
        let dt = cfg.dt.min(cfg.t_end - t);
        u = picard_step(op, rx, &u, dt, cfg.picard_tol)?;
        step += 1;
        t += dt;
        check_state(&u, step)?;
        if step.is_multiple_of(cfg.record_every) || t >= cfg.t_end - 1e-12 * cfg.t_end {
            recorder.record(t, &u)?;
        }
    }
    Ok(recorder.traj)
}

fn picard_step(
    op: &UltradiffOperator,
    rx: &Reaction,
    u: &State,
    dt: f64,
    tol: f64,
) -> Result<State> {
    let lambda = rx.lambda();
    let h = dt / PICARD_PANELS as f64;
    let prop_tol = (tol * 1e-2).max(1e-15);
    let prop = |v: &State| op.semigroup_apply(v, h, prop_tol);

    // e^{-s_j A} u at the nodes
    let mut base = Vec::with_capacity(PICARD_PANELS + 1);
    base.push(u.clone());
    for j in 1..=PICARD_PANELS {
        base.push(prop(&base[j - 1])?);
    }

    let mut nodes: Vec<State> = base.clone();
    let mut prev_delta = f64::INFINITY;
    let mut delta = f64::INFINITY;
    let mut converged = false;
    for _sweep in 0..PICARD_MAX_SWEEPS {
        let f_nodes: Vec<State> = nodes.iter().map(|v| v.map(|x| rx.eval_f(x))).collect();
        // running trapezoid integrals T_j over [0, s_j] with the semigroup
        // weight, via T_j = P T_{j-1} + (h/2)(P f_{j-1} + f_j)
        let mut new_delta = 0.0f64;
        let mut integral = State::zeros(u.len());
        for j in 1..=PICARD_PANELS {
            let mut carried = prop(&integral)?;
            let pf = prop(&f_nodes[j - 1])?;
            carried.axpy(0.5 * h, &pf)?;
            carried.axpy(0.5 * h, &f_nodes[j])?;
            integral = carried;
            let mut v = base[j].clone();
            v.axpy(-lambda, &integral)?;
            new_delta = new_delta.max(v.sup_distance(&nodes[j])?);
            nodes[j] = v;
        }
        prev_delta = delta;
        delta = new_delta;
        if delta <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        let rate = if prev_delta > 0.0 && prev_delta.is_finite() {
            delta / prev_delta
        } else {
            f64::NAN
        };
        return Err(Error::Solver(format!(
            "picard iteration did not reach {tol} within {PICARD_MAX_SWEEPS} sweeps \
             (last delta {delta}, contraction estimate {rate})"
        )));
    }

    // final value by composite Simpson: u(dt) = e^{-dt A} u
    //   - lambda sum_m w_m e^{-(dt - s_m) A} f(v_m)
    let weights = [1.0, 4.0, 2.0, 4.0, 1.0].map(|w| w * dt / 12.0);
    let f_nodes: Vec<State> = nodes.iter().map(|v| v.map(|x| rx.eval_f(x))).collect();
    let mut quad = f_nodes[0].clone();
    quad.scale(weights[0]);
    for j in 1..=PICARD_PANELS {
        quad = prop(&quad)?;
        quad.axpy(weights[j], &f_nodes[j])?;
    }
    let mut out = base[PICARD_PANELS].clone();
    out.axpy(-lambda, &quad)?;
    Ok(out)
}

/// Comparison-principle harness: both initial states evolve under the same
/// configuration and the ordering margin `min_k (u_k - v_k)` is tracked over
/// every recorded time.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub min_margin: f64,
    pub worst_time: f64,
    pub passed: bool,
    /// Ordering preservation needs enough volume; low resolutions are
    /// flagged, not rejected.
    pub small_grid_advisory: bool,
}

pub fn comparison_check(
    u0: &State,
    v0: &State,
    op: &UltradiffOperator,
    rx: &Reaction,
    cfg: &IntegratorConfig,
) -> Result<ComparisonReport> {
    u0.check_len(v0)?;
    let initial_margin = u0
        .iter()
        .zip(v0.iter())
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min);
    if initial_margin < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "comparison_check requires u0 >= v0 entrywise; min(u0 - v0) = {initial_margin}"
        )));
    }
    let upper = integrate(u0, op, rx, cfg)?;
    let lower = integrate(v0, op, rx, cfg)?;
    let mut min_margin = f64::INFINITY;
    let mut worst_time = 0.0;
    for ((t, us), vs) in upper
        .times
        .iter()
        .zip(&upper.snapshots)
        .zip(&lower.snapshots)
    {
        let margin = us
            .iter()
            .zip(vs.iter())
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min);
        if margin < min_margin {
            min_margin = margin;
            worst_time = *t;
        }
    }
    Ok(ComparisonReport {
        min_margin,
        worst_time,
        passed: min_margin >= -ORDERING_TOL,
        small_grid_advisory: op.params().resolution < 2,
    })
}

/// Exponentially shrinking envelopes `u_tilde ± eps e^{-beta t}` around a
/// stationary state.
pub fn envelope_bounds(u_tilde: &State, eps: f64, beta: f64, t: f64) -> (State, State) {
    let shift = eps * (-beta * t).exp();
    let upper = u_tilde.map(|v| v + shift);
    let lower = u_tilde.map(|v| v - shift);
    (upper, lower)
}

/// Numerical super/sub-solution certificate for the envelopes.
#[derive(Debug, Clone)]
pub struct EnvelopeCertificate {
    pub eps: f64,
    pub beta: f64,
    /// Worst (most negative) super-solution defect across samples.
    pub worst_super_defect: f64,
    /// Worst (most positive) sub-solution defect across samples.
    pub worst_sub_defect: f64,
}

/// Check on the grid, across the sample times, that the upper envelope is a
/// super-solution and the lower one a sub-solution:
/// `∂_t ū + A ū + lambda f(ū) >= -tol` and the mirrored inequality below.
/// Rejects the pair `(eps, beta)` with the failing sample on violation.
pub fn envelope_certificate(
    u_tilde: &State,
    op: &UltradiffOperator,
    rx: &Reaction,
    eps: f64,
    beta: f64,
    t_samples: &[f64],
) -> Result<EnvelopeCertificate> {
    if !eps.is_finite() || eps <= 0.0 || !beta.is_finite() || beta <= 0.0 {
        return Err(Error::InvalidConfig("eps and beta must be > 0".into()));
    }
    let au = op.matvec_fast(u_tilde)?;
    let lambda = rx.lambda();
    let mut worst_super = f64::INFINITY;
    let mut worst_sub = f64::NEG_INFINITY;
    for &t in t_samples {
        let shift = eps * (-beta * t).exp();
        for k in 0..u_tilde.len() {
            // d/dt (±eps e^{-beta t}) = ∓ beta shift; A is linear and kills
            // the constant shift
            let super_defect = -beta * shift + au[k] + lambda * rx.eval_f(u_tilde[k] + shift);
            let sub_defect = beta * shift + au[k] + lambda * rx.eval_f(u_tilde[k] - shift);
            if super_defect < worst_super {
                worst_super = super_defect;
            }
            if sub_defect > worst_sub {
                worst_sub = sub_defect;
            }
            if super_defect < -ORDERING_TOL {
                return Err(Error::Solver(format!(
                    "(eps, beta) = ({eps}, {beta}) rejected: upper envelope fails the \
                     super-solution inequality at t = {t}, index {k} (defect {super_defect})"
                )));
            }
            if sub_defect > ORDERING_TOL {
                return Err(Error::Solver(format!(
                    "(eps, beta) = ({eps}, {beta}) rejected: lower envelope fails the \
                     sub-solution inequality at t = {t}, index {k} (defect {sub_defect})"
                )));
            }
        }
    }
    Ok(EnvelopeCertificate {
        eps,
        beta,
        worst_super_defect: worst_super,
        worst_sub_defect: worst_sub,
    })
}
