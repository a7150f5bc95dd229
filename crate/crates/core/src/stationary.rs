//! Patterned stationary states of `A u + lambda f(u) = 0`.
//!
//! A pattern is a union of minimal balls (an index set `I_M`); the damped
//! fixed-point map `T u = u - h (A u + lambda f(u))` started from the
//! two-level profile `u+ on I_M, u- off I_M` contracts, for `h < h_max`, to
//! the unique stationary state that sits in `[alpha+, 1]` on the pattern and
//! in `[-1, alpha-]` off it.

use std::collections::BTreeSet;

use crate::error::Error;
use crate::grid::{GridIndex, GridParams};
use crate::operator::UltradiffOperator;
use crate::reaction::Reaction;
use crate::state::State;
use crate::Result;

/// Slack allowed on band membership of the iterates (floating-point noise
/// only; the exact map never leaves the bands).
const BAND_SLACK: f64 = 1e-12;

/// An open-compact pattern: the set of minimal-ball indices it covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet {
    params: GridParams,
    members: BTreeSet<u64>,
}

impl PatternSet {
    pub fn new(params: GridParams, ordinals: impl IntoIterator<Item = u64>) -> Result<Self> {
        let m = params.num_points();
        let members: BTreeSet<u64> = ordinals.into_iter().collect();
        if let Some(&bad) = members.iter().find(|&&o| o >= m) {
            return Err(Error::InvalidConfig(format!(
                "pattern ordinal {bad} out of range [0, {m})"
            )));
        }
        Ok(PatternSet { params, members })
    }

    pub fn empty(params: GridParams) -> Self {
        PatternSet {
            params,
            members: BTreeSet::new(),
        }
    }

    pub fn full(params: GridParams) -> Self {
        PatternSet {
            params,
            members: (0..params.num_points()).collect(),
        }
    }

    /// All indices within distance `p^radius_exp` of a center point.
    pub fn ball(params: GridParams, center: &GridIndex, radius_exp: i32) -> Result<Self> {
        let radius = f64::from(params.p).powi(radius_exp);
        let mut members = BTreeSet::new();
        for idx in params.enumerate() {
            if idx.distance(center)? <= radius {
                members.insert(idx.ordinal());
            }
        }
        Ok(PatternSet { params, members })
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    pub fn members(&self) -> &BTreeSet<u64> {
        &self.members
    }

    pub fn contains(&self, ordinal: u64) -> bool {
        self.members.contains(&ordinal)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Converged stationary state with solver diagnostics.
#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub u_tilde: State,
    pub iterations: usize,
    /// `||A u + lambda f(u)||_inf` at the returned state.
    pub residual: f64,
    /// Last observed ratio of consecutive sup-norm steps (0 when the solve
    /// finished in a single application).
    pub contraction_rate: f64,
}

/// The two-level profile `u+` on the pattern, `u-` off it — the canonical
/// starting iterate, sitting in the deepest interior of the band set.
pub fn two_level_profile(pattern: &PatternSet, rx: &Reaction) -> Result<State> {
    let bands = rx.require_bands()?;
    let m = pattern.params().num_points() as usize;
    let mut u = State::constant(m, bands.u_minus);
    for &o in pattern.members() {
        u[o as usize] = bands.u_plus;
    }
    Ok(u)
}

/// Sup norm of the stationarity defect `A u + lambda f(u)`.
pub fn residual(u: &State, op: &UltradiffOperator, rx: &Reaction) -> Result<f64> {
    let mut r = op.matvec_fast(u)?;
    let lambda = rx.lambda();
    for (ri, &ui) in r.as_mut_slice().iter_mut().zip(u.iter()) {
        *ri += lambda * rx.eval_f(ui);
    }
    Ok(r.sup_norm())
}

/// Damped fixed-point solve of `A u + lambda f(u) = 0` over a pattern.
///
/// Preconditions: the reaction carries band constants (which already encode
/// `lambda >= lambda_min`) and `0 < h < h_max`. Iterates must stay in the
/// band set; leaving it signals violated preconditions and aborts.
pub fn solve(
    pattern: &PatternSet,
    op: &UltradiffOperator,
    rx: &Reaction,
    h: f64,
    tol: f64,
    max_iter: usize,
) -> Result<StationaryResult> {
    let bands = *rx.require_bands()?;
    if pattern.params() != op.params() {
        return Err(Error::ParamMismatch(format!(
            "pattern on {:?}, operator on {:?}",
            pattern.params(),
            op.params()
        )));
    }
    if !(h > 0.0 && h < bands.h_max) {
        return Err(Error::InvalidConfig(format!(
            "step h = {h} outside (0, h_max = {})",
            bands.h_max
        )));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidConfig("tol must be > 0".into()));
    }

    let lambda = rx.lambda();
    let mut u = two_level_profile(pattern, rx)?;
    let mut prev_step = f64::INFINITY;
    let mut rate = 0.0;
    for iter in 0..max_iter {
        let mut defect = op.matvec_fast(&u)?;
        for (di, &ui) in defect.as_mut_slice().iter_mut().zip(u.iter()) {
            *di += lambda * rx.eval_f(ui);
        }
        let res = defect.sup_norm();
        if res <= tol {
            return Ok(StationaryResult {
                u_tilde: u,
                iterations: iter,
                residual: res,
                contraction_rate: rate,
            });
        }
        u.axpy(-h, &defect)?;

        // iterates must remain in the band set
        for (o, &v) in u.iter().enumerate() {
            let ok = if pattern.contains(o as u64) {
                (bands.alpha_plus - BAND_SLACK..=1.0 + BAND_SLACK).contains(&v)
            } else {
                (-1.0 - BAND_SLACK..=bands.alpha_minus + BAND_SLACK).contains(&v)
            };
            if !ok {
                return Err(Error::Solver(format!(
                    "iterate left the band set at index {o} (value {v}) on iteration {iter}; \
                     preconditions violated"
                )));
            }
        }

        let step = h * res;
        if prev_step.is_finite() && prev_step > 0.0 {
            rate = step / prev_step;
        }
        prev_step = step;
        // alternative stop: contraction-scaled step criterion
        if rate > 0.0 && rate < 1.0 && step <= tol * (1.0 - rate) {
            let res = residual(&u, op, rx)?;
            return Ok(StationaryResult {
                u_tilde: u,
                iterations: iter + 1,
                residual: res,
                contraction_rate: rate,
            });
        }
    }
    Err(Error::Solver(format!(
        "fixed-point iteration did not reach {tol} within {max_iter} iterations \
         (last contraction rate {rate})"
    )))
}

/// Band-membership report for a state against a pattern.
#[derive(Debug, Clone)]
pub struct BandReport {
    pub passed: bool,
    /// Min over the pattern of `u - alpha+` and over its complement of
    /// `alpha- - u`.
    pub inner_margin: f64,
    /// Min over the pattern of `1 - u` and over its complement of `u + 1`.
    pub outer_margin: f64,
    pub worst_index: usize,
}

/// Check `u in [alpha+, 1]` on the pattern and `u in [-1, alpha-]` off it.
pub fn verify_bands(u: &State, pattern: &PatternSet, rx: &Reaction) -> Result<BandReport> {
    let bands = rx.require_bands()?;
    let m = pattern.params().num_points() as usize;
    if u.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: u.len(),
        });
    }
    let mut inner_margin = f64::INFINITY;
    let mut outer_margin = f64::INFINITY;
    let mut worst_index = 0usize;
    for (o, &v) in u.iter().enumerate() {
        let (inner, outer) = if pattern.contains(o as u64) {
            (v - bands.alpha_plus, 1.0 - v)
        } else {
            (bands.alpha_minus - v, v + 1.0)
        };
        if inner.min(outer) < inner_margin.min(outer_margin) {
            worst_index = o;
        }
        inner_margin = inner_margin.min(inner);
        outer_margin = outer_margin.min(outer);
    }
    Ok(BandReport {
        passed: inner_margin >= -BAND_SLACK && outer_margin >= -BAND_SLACK,
        inner_margin,
        outer_margin,
        worst_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::RadialKernel;

    fn table_op() -> UltradiffOperator {
        let g = GridParams::new(2, 1, 1).unwrap();
        let k = RadialKernel::table([(0, 1.0), (1, 0.5)].into_iter().collect()).unwrap();
        UltradiffOperator::build(g, &k.truncate(&g).unwrap()).unwrap()
    }

    #[test]
    fn full_and_empty_patterns_reach_pure_phases() {
        let op = table_op();
        let rx = Reaction::canonical();
        let g = op.params();

        let full = solve(&PatternSet::full(g), &op, &rx, 0.0625, 1e-12, 1_000_000).unwrap();
        assert!(full.u_tilde.sup_distance(&State::constant(4, 1.0)).unwrap() < 1e-11);
        assert!(full.residual <= 1e-11);

        let empty = solve(&PatternSet::empty(g), &op, &rx, 0.0625, 1e-12, 1_000_000).unwrap();
        assert!(
            empty
                .u_tilde
                .sup_distance(&State::constant(4, -1.0))
                .unwrap()
                < 1e-11
        );
    }

    #[test]
    fn ball_pattern_solution_and_bands() {
        // I_M = ball of radius 1 about 0 = representatives {0, 1}
        let op = table_op();
        let rx = Reaction::canonical();
        let g = op.params();
        let zero = GridIndex::zero(g);
        let pattern = PatternSet::ball(g, &zero, 0).unwrap();
        assert_eq!(pattern.len(), 2);
        // canonical order (0, 1/2, 1, 3/2): members are ordinals {0, 2}
        assert!(pattern.contains(0) && pattern.contains(2));

        let sol = solve(&pattern, &op, &rx, 0.0625, 1e-12, 1_000_000).unwrap();
        assert!(sol.residual <= 1e-11);
        let report = verify_bands(&sol.u_tilde, &pattern, &rx).unwrap();
        assert!(report.passed, "{report:?}");
        // for this symmetric pattern the two-level profile is already the
        // fixed point: ũ = ±sqrt(5/6)
        let want = (5.0f64 / 6.0).sqrt();
        for (o, &v) in sol.u_tilde.iter().enumerate() {
            if pattern.contains(o as u64) {
                assert!((v - want).abs() < 1e-10);
            } else {
                assert!((v + want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn residual_examples() {
        let op = table_op();
        let rx = Reaction::canonical();
        assert_eq!(residual(&State::constant(4, 1.0), &op, &rx).unwrap(), 0.0);
        // u = 0 is stationary too, but sits outside the band set
        assert_eq!(residual(&State::zeros(4), &op, &rx).unwrap(), 0.0);
        let report = verify_bands(&State::zeros(4), &PatternSet::full(op.params()), &rx).unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn band_report_margins() {
        let op = table_op();
        let rx = Reaction::canonical();
        let full = PatternSet::full(op.params());
        let report = verify_bands(&State::constant(4, 1.0), &full, &rx).unwrap();
        assert!(report.passed);
        assert!((report.inner_margin - 0.25).abs() < 1e-15);
        assert!(report.outer_margin.abs() < 1e-15);
    }

    #[test]
    fn invalid_step_rejected() {
        let op = table_op();
        let rx = Reaction::canonical();
        let pattern = PatternSet::full(op.params());
        // h_max = 1/13
        assert!(solve(&pattern, &op, &rx, 0.08, 1e-12, 1000).is_err());
        assert!(solve(&pattern, &op, &rx, 0.0, 1e-12, 1000).is_err());
    }

    #[test]
    fn max_iter_exhaustion_reports_rate() {
        let op = table_op();
        let rx = Reaction::canonical();
        // the singleton pattern needs ~100 iterations; two are not enough
        let pattern = PatternSet::new(op.params(), [0]).unwrap();
        match solve(&pattern, &op, &rx, 0.0625, 1e-12, 2) {
            Err(Error::Solver(msg)) => assert!(msg.contains("contraction rate"), "{msg}"),
            other => panic!("expected iteration-budget failure, got {other:?}"),
        }
    }

    #[test]
    fn pattern_ordinal_bounds_checked() {
        let g = GridParams::new(2, 1, 1).unwrap();
        assert!(PatternSet::new(g, [4]).is_err());
        assert!(PatternSet::new(g, [0, 3]).is_ok());
    }
}
