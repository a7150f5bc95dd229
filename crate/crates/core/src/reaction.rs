//! Bistable reaction terms `f` and the double-well potential `W`.
//!
//! The solver pipeline needs more than `f` itself: the extreme roots of
//! `g(u) = u + lambda f(u)`, band endpoints `alpha±` with `f' >= delta` on
//! `[-1, alpha-] ∪ [alpha+, 1]`, the lower bound on `lambda` that makes the
//! band conditions hold, and the damping-step bound `h_max` under which the
//! fixed-point map of the stationary solver is a contraction. Everything here
//! works on real polynomials; that covers the blessed cubic `u^3 - u` and
//! keeps every evaluation exact up to rounding.

use crate::error::Error;
use crate::Result;

/// Real polynomial in ascending coefficient order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    /// The bistable cubic `u^3 - u`.
    pub fn cubic() -> Self {
        Polynomial::new(vec![0.0, -1.0, 0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Polynomial {
        let mut coeffs = vec![0.0];
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Polynomial::new(coeffs)
    }

    /// `self + lambda * other`.
    pub fn add_scaled(&self, lambda: f64, other: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![0.0; len];
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = self.coeffs.get(k).copied().unwrap_or(0.0)
                + lambda * other.coeffs.get(k).copied().unwrap_or(0.0);
        }
        Polynomial::new(coeffs)
    }

    /// Minimum over `[lo, hi]`: endpoint values and interior critical points.
    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        let mut best = self.eval(lo).min(self.eval(hi));
        for root in self.derivative().roots_in(lo, hi) {
            best = best.min(self.eval(root));
        }
        best
    }

    /// Maximum over `[lo, hi]`.
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        let mut best = self.eval(lo).max(self.eval(hi));
        for root in self.derivative().roots_in(lo, hi) {
            best = best.max(self.eval(root));
        }
        best
    }

    /// Real roots inside `[lo, hi]` by sign-change scanning plus bisection.
    /// Resolution is fine enough for the low-degree polynomials used here.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        const SAMPLES: usize = 4096;
        let mut roots = Vec::new();
        if hi <= lo || !hi.is_finite() || !lo.is_finite() {
            return roots;
        }
        let step = (hi - lo) / SAMPLES as f64;
        let mut prev_u = lo;
        let mut prev_v = self.eval(lo);
        for k in 1..=SAMPLES {
            let u = lo + step * k as f64;
            let v = self.eval(u);
            if prev_v == 0.0 {
                roots.push(prev_u);
            } else if prev_v * v < 0.0 {
                roots.push(self.bisect(prev_u, u));
            }
            prev_u = u;
            prev_v = v;
        }
        if prev_v == 0.0 {
            roots.push(prev_u);
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        roots
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> f64 {
        let flo = self.eval(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = self.eval(mid);
            if fm == 0.0 {
                return mid;
            }
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Result of one named hypothesis or admissibility check.
#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Full report over H2, H3, H4 and the band conditions.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

const ROOT_TOL: f64 = 1e-9;

/// Verify the structural hypotheses on `f` for a given `lambda`:
/// zeros exactly at -1, 0, 1; slope signs there; and `g = u + lambda f`
/// with three zeros and three monotonicity intervals.
pub fn check_hypotheses(f: &Polynomial, lambda: f64) -> HypothesisReport {
    let mut checks = Vec::new();
    let fp = f.derivative();

    let zeros = f.roots_in(-8.0, 8.0);
    let want = [-1.0, 0.0, 1.0];
    let zeros_ok = zeros.len() == 3
        && zeros
            .iter()
            .zip(want.iter())
            .all(|(z, w)| (z - w).abs() < ROOT_TOL);
    checks.push(HypothesisCheck {
        name: "H2: zeros exactly at -1, 0, 1",
        passed: zeros_ok,
        detail: format!("zeros in [-8, 8]: {zeros:?}"),
    });

    let s = (fp.eval(-1.0), fp.eval(0.0), fp.eval(1.0));
    checks.push(HypothesisCheck {
        name: "H3: f'(-1) > 0, f'(0) < 0, f'(1) > 0",
        passed: s.0 > 0.0 && s.1 < 0.0 && s.2 > 0.0,
        detail: format!("f'(-1) = {}, f'(0) = {}, f'(1) = {}", s.0, s.1, s.2),
    });

    let g = Polynomial::new(vec![0.0, 1.0]).add_scaled(lambda, f);
    let g_roots = g.roots_in(-8.0, 8.0);
    let gp_roots = g.derivative().roots_in(-8.0, 8.0);
    // three monotonicity intervals = exactly two sign changes of g'
    checks.push(HypothesisCheck {
        name: "H4: g = u + lambda f has three zeros and three monotonicity intervals",
        passed: g_roots.len() == 3 && gp_roots.len() == 2,
        detail: format!("lambda = {lambda}: g roots {g_roots:?}, g' roots {gp_roots:?}"),
    });

    HypothesisReport { checks }
}

/// Report over the structural hypotheses and the band conditions for a full
/// parameter set. Checks that depend on a failed prerequisite are reported
/// as failed with the prerequisite named.
pub fn admissibility_report(
    f: &Polynomial,
    lambda: f64,
    alpha_minus: f64,
    alpha_plus: f64,
    delta: f64,
) -> HypothesisReport {
    let mut report = check_hypotheses(f, lambda);
    let h4_ok = report.checks.iter().all(|c| c.passed);

    let ordering = if h4_ok {
        let g = Polynomial::new(vec![0.0, 1.0]).add_scaled(lambda, f);
        let roots = g.roots_in(-8.0, 8.0);
        let (um, up) = (roots[0], roots[2]);
        HypothesisCheck {
            name: "C5: u- < alpha- < 0 < alpha+ < u+",
            passed: um < alpha_minus && alpha_minus < 0.0 && 0.0 < alpha_plus && alpha_plus < up,
            detail: format!("u- = {um}, alpha- = {alpha_minus}, alpha+ = {alpha_plus}, u+ = {up}"),
        }
    } else {
        HypothesisCheck {
            name: "C5: u- < alpha- < 0 < alpha+ < u+",
            passed: false,
            detail: "not evaluated: H2-H4 failed".into(),
        }
    };
    report.checks.push(ordering);

    let fp = f.derivative();
    let slope_floor = fp.min_on(-1.0, alpha_minus).min(fp.min_on(alpha_plus, 1.0));
    report.checks.push(HypothesisCheck {
        name: "C5: f' >= delta on [-1, alpha-] and [alpha+, 1]",
        passed: slope_floor >= delta,
        detail: format!("min f' on the bands = {slope_floor}, delta = {delta}"),
    });

    let c6 = (1.0 + alpha_plus) + lambda * f.eval(alpha_plus);
    report.checks.push(HypothesisCheck {
        name: "C6: (1 + alpha+) + lambda f(alpha+) <= 0",
        passed: c6 <= 0.0,
        detail: format!("value = {c6}"),
    });
    let c7 = alpha_minus + lambda * f.eval(alpha_minus);
    report.checks.push(HypothesisCheck {
        name: "C7: alpha- + lambda f(alpha-) >= 0",
        passed: c7 >= 0.0,
        detail: format!("value = {c7}"),
    });

    report
}

/// Extreme roots `u^-_lambda < 0 < u^+_lambda` of `g(u) = u + lambda f(u)`.
pub fn extreme_roots(f: &Polynomial, lambda: f64) -> Result<(f64, f64)> {
    let report = check_hypotheses(f, lambda);
    if !report.passed() {
        let failure = report.first_failure().expect("not passed");
        return Err(Error::Hypothesis(format!(
            "{}: {}",
            failure.name, failure.detail
        )));
    }
    let g = Polynomial::new(vec![0.0, 1.0]).add_scaled(lambda, f);
    let roots = g.roots_in(-8.0, 8.0);
    let u_minus = roots[0];
    let u_plus = roots[2];
    if !(-1.0 < u_minus && u_minus < 0.0 && 0.0 < u_plus && u_plus < 1.0) {
        return Err(Error::Hypothesis(format!(
            "extreme roots {u_minus}, {u_plus} not inside (-1, 0) and (0, 1)"
        )));
    }
    Ok((u_minus, u_plus))
}

/// Innermost band endpoints with `f' >= delta` on `[-1, alpha-]` and
/// `[alpha+, 1]`, found by bisection on the band minimum of `f'`.
pub fn choose_constants(f: &Polynomial, delta: f64) -> Result<(f64, f64)> {
    if delta <= 0.0 {
        return Err(Error::Hypothesis("delta must be > 0".into()));
    }
    let fp = f.derivative();
    let feasible_plus = |alpha: f64| fp.min_on(alpha, 1.0) >= delta;
    let feasible_minus = |alpha: f64| fp.min_on(-1.0, alpha) >= delta;

    // the band must have interior width; reject when even alpha -> 1 fails
    let eps = 1e-7;
    if !feasible_plus(1.0 - eps) || !feasible_minus(-1.0 + eps) {
        return Err(Error::Hypothesis(format!(
            "no alpha in (0,1) gives f' >= {delta} on the outer bands"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1.0 - eps;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible_plus(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha_plus = hi;
    let mut lo = -1.0 + eps;
    let mut hi = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible_minus(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha_minus = lo;
    Ok((alpha_minus, alpha_plus))
}

/// Smallest `lambda` for which the band conditions hold at these endpoints:
/// `lambda >= max{-alpha- / f(alpha-), (1 + alpha+) / (-f(alpha+))}`.
pub fn lambda_min(f: &Polynomial, alpha_minus: f64, alpha_plus: f64) -> Result<f64> {
    let f_minus = f.eval(alpha_minus);
    let f_plus = f.eval(alpha_plus);
    if f_plus >= 0.0 || f_minus <= 0.0 {
        return Err(Error::Hypothesis(format!(
            "need f(alpha+) < 0 < f(alpha-); got f({alpha_plus}) = {f_plus}, f({alpha_minus}) = {f_minus}"
        )));
    }
    Ok(((-alpha_minus) / f_minus).max((1.0 + alpha_plus) / (-f_plus)))
}

/// Contraction step bound `h_max = 1 / (1 + lambda max f')`, maximum over
/// the outer bands. Any damping step of the fixed-point map must stay below.
pub fn step_bound(f: &Polynomial, lambda: f64, alpha_minus: f64, alpha_plus: f64) -> f64 {
    let fp = f.derivative();
    let max_fp = fp.max_on(-1.0, alpha_minus).max(fp.max_on(alpha_plus, 1.0));
    1.0 / (1.0 + lambda * max_fp)
}

/// Admissibility constants for the banded (contraction) regime.
#[derive(Debug, Clone, Copy)]
pub struct BandConstants {
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub delta: f64,
    /// Extreme roots of `u + lambda f(u)`.
    pub u_minus: f64,
    pub u_plus: f64,
    /// Contraction step bound for the stationary fixed-point map.
    pub h_max: f64,
}

/// A validated reaction term: `f`, its potential `W` (normalized to vanish at
/// the pure phases), and — when built for the banded regime — the derived
/// admissibility constants.
#[derive(Debug, Clone)]
pub struct Reaction {
    f: Polynomial,
    f_prime: Polynomial,
    w: Polynomial,
    lambda: f64,
    bands: Option<BandConstants>,
}

impl Reaction {
    /// Validate and build for the banded regime. Checks H2-H4 for this
    /// `lambda`, the band conditions at `alpha±` with slope floor `delta`,
    /// and the two inequalities `(1 + alpha+) + lambda f(alpha+) <= 0`,
    /// `alpha- + lambda f(alpha-) >= 0`.
    pub fn new(
        f: Polynomial,
        lambda: f64,
        alpha_minus: f64,
        alpha_plus: f64,
        delta: f64,
    ) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::Hypothesis("lambda must be > 0".into()));
        }
        if delta <= 0.0 {
            return Err(Error::Hypothesis("delta must be > 0".into()));
        }
        let report = admissibility_report(&f, lambda, alpha_minus, alpha_plus, delta);
        if !report.passed() {
            let failure = report.first_failure().expect("not passed");
            return Err(Error::Hypothesis(format!(
                "{}: {}",
                failure.name, failure.detail
            )));
        }
        let (u_minus, u_plus) = extreme_roots(&f, lambda)?;
        let h_max = step_bound(&f, lambda, alpha_minus, alpha_plus);
        let bands = BandConstants {
            alpha_minus,
            alpha_plus,
            delta,
            u_minus,
            u_plus,
            h_max,
        };
        let mut rx = Self::assemble(f, lambda);
        rx.bands = Some(bands);
        Ok(rx)
    }

    /// Build without the band machinery: only the structural zeros/slopes
    /// (H2, H3) are required, and `lambda = 0` is allowed. Used for the
    /// linear limit and for plain integration runs.
    pub fn unbanded(f: Polynomial, lambda: f64) -> Result<Self> {
        if lambda < 0.0 {
            return Err(Error::Hypothesis("lambda must be >= 0".into()));
        }
        let report = check_hypotheses(&f, lambda.max(1.0));
        for check in &report.checks[..2] {
            if !check.passed {
                return Err(Error::Hypothesis(format!(
                    "{}: {}",
                    check.name, check.detail
                )));
            }
        }
        Ok(Self::assemble(f, lambda))
    }

    fn assemble(f: Polynomial, lambda: f64) -> Self {
        // W' = f with W(1) = 0; for the equal-well potentials in scope
        // W(-1) = 0 follows
        let w0 = f.antiderivative();
        let w = w0.add_scaled(-w0.eval(1.0), &Polynomial::new(vec![1.0]));
        Reaction {
            f_prime: f.derivative(),
            f,
            w,
            lambda,
            bands: None,
        }
    }

    /// The canonical parameter set: cubic `u^3 - u`, `lambda = 6`,
    /// `alpha± = ±3/4`, `delta = 1/2`.
    pub fn canonical() -> Reaction {
        Reaction::new(Polynomial::cubic(), 6.0, -0.75, 0.75, 0.5)
            .expect("canonical parameters are admissible")
    }

    /// Canonical constants at a different coupling.
    pub fn cubic_with_lambda(lambda: f64) -> Result<Reaction> {
        Reaction::new(Polynomial::cubic(), lambda, -0.75, 0.75, 0.5)
    }

    /// The pure ultradiffusion limit: cubic nonlinearity with zero coupling.
    pub fn linear_limit() -> Reaction {
        Reaction::unbanded(Polynomial::cubic(), 0.0).expect("cubic satisfies H2-H3")
    }

    pub fn f(&self) -> &Polynomial {
        &self.f
    }

    pub fn w(&self) -> &Polynomial {
        &self.w
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Band constants, present when built through [`Reaction::new`].
    pub fn bands(&self) -> Option<&BandConstants> {
        self.bands.as_ref()
    }

    /// Band constants or an error naming the missing regime.
    pub fn require_bands(&self) -> Result<&BandConstants> {
        self.bands.as_ref().ok_or_else(|| {
            Error::Hypothesis(
                "this operation needs the banded regime (alpha±, delta, h_max); \
                 build the reaction with Reaction::new"
                    .into(),
            )
        })
    }

    pub fn eval_f(&self, u: f64) -> f64 {
        self.f.eval(u)
    }

    pub fn eval_f_prime(&self, u: f64) -> f64 {
        self.f_prime.eval(u)
    }

    pub fn eval_w(&self, u: f64) -> f64 {
        self.w.eval(u)
    }

    /// `max |f'|` over `[-1, 1]`, used by the explicit stability guards.
    pub fn max_abs_f_prime_unit(&self) -> f64 {
        self.f_prime
            .max_on(-1.0, 1.0)
            .abs()
            .max(self.f_prime.min_on(-1.0, 1.0).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_passes_hypotheses() {
        let f = Polynomial::cubic();
        let report = check_hypotheses(&f, 6.0);
        assert!(report.passed(), "{report:?}");
        let fp = f.derivative();
        assert_eq!(fp.eval(1.0), 2.0);
        assert_eq!(fp.eval(-1.0), 2.0);
        assert_eq!(fp.eval(0.0), -1.0);
    }

    #[test]
    fn pure_cubic_fails_h2() {
        let f = Polynomial::new(vec![0.0, 0.0, 0.0, 1.0]); // u^3
        let report = check_hypotheses(&f, 6.0);
        assert!(!report.passed());
        assert!(report.first_failure().unwrap().name.starts_with("H2"));
    }

    #[test]
    fn g_roots_for_cubic_lambda6() {
        // u + 6(u^3 - u) = 0 has roots 0, ±sqrt(5/6)
        let (um, up) = extreme_roots(&Polynomial::cubic(), 6.0).unwrap();
        let want = (5.0f64 / 6.0).sqrt();
        assert!((up - want).abs() < 1e-12);
        assert!((um + want).abs() < 1e-12);
    }

    #[test]
    fn extreme_roots_closed_form_and_ladder() {
        // u+ = sqrt(1 - 1/lambda) for the cubic
        let f = Polynomial::cubic();
        let (_, up2) = extreme_roots(&f, 2.0).unwrap();
        assert!((up2 - 0.5f64.sqrt()).abs() < 1e-12);
        let mut prev = 0.0;
        for lambda in [10.0, 100.0, 1000.0] {
            let (um, up) = extreme_roots(&f, lambda).unwrap();
            let want = (1.0 - 1.0 / lambda).sqrt();
            assert!((up - want).abs() < 1e-12);
            assert!((um + want).abs() < 1e-12);
            assert!(up > prev);
            prev = up;
        }
        assert!(prev < 1.0 && prev > 0.999);
    }

    #[test]
    fn choose_constants_cubic() {
        // 3u^2 - 1 = delta at |u| = sqrt((1 + delta)/3)
        let f = Polynomial::cubic();
        let (am, ap) = choose_constants(&f, 0.5).unwrap();
        let want = 0.5f64.sqrt();
        assert!((ap - want).abs() < 1e-6);
        assert!((am + want).abs() < 1e-6);
        // delta -> 0+: |alpha| -> 1/sqrt(3)
        let (_, ap0) = choose_constants(&f, 1e-9).unwrap();
        assert!((ap0 - 1.0 / 3.0f64.sqrt()).abs() < 1e-4);
        // delta = 2 is attained only at the endpoints: no admissible alpha
        assert!(choose_constants(&f, 2.0).is_err());
    }

    #[test]
    fn lambda_min_examples() {
        let f = Polynomial::cubic();
        let lm = lambda_min(&f, -0.75, 0.75).unwrap();
        assert!((lm - 16.0 / 3.0).abs() < 1e-12);
        let lm8 = lambda_min(&f, -0.8, 0.8).unwrap();
        assert!((lm8 - 6.25).abs() < 1e-12);
        // C6 at lambda = 6, alpha+ = 0.75
        assert!((1.75 + 6.0 * f.eval(0.75) - (-0.21875)).abs() < 1e-15);
    }

    #[test]
    fn step_bound_examples() {
        let f = Polynomial::cubic();
        let h = step_bound(&f, 6.0, -0.75, 0.75);
        assert!((h - 1.0 / 13.0).abs() < 1e-15);
        let h2 = step_bound(&f, 16.0 / 3.0, -0.75, 0.75);
        assert!((h2 - 3.0 / 35.0).abs() < 1e-15);
        assert!(step_bound(&f, 1e9, -0.75, 0.75) < 1e-8);
    }

    #[test]
    fn canonical_reaction() {
        let rx = Reaction::canonical();
        assert_eq!(rx.lambda(), 6.0);
        let bands = rx.bands().unwrap();
        assert!((bands.h_max - 1.0 / 13.0).abs() < 1e-15);
        assert!((bands.u_plus - (5.0f64 / 6.0).sqrt()).abs() < 1e-12);
        assert!((bands.u_minus + bands.u_plus).abs() < 1e-12);
        // canonical step 0.0625 is below the bound 1/13 ~ 0.0769; 0.08 is not
        assert!(0.0625 < bands.h_max);
        assert!(0.08 > bands.h_max);
        // small lambda violates C6 with these alphas
        assert!(Reaction::cubic_with_lambda(2.0).is_err());
    }

    #[test]
    fn unbanded_reactions() {
        let lin = Reaction::linear_limit();
        assert_eq!(lin.lambda(), 0.0);
        assert!(lin.bands().is_none());
        assert!(lin.require_bands().is_err());
        // still rejects a non-bistable f
        assert!(Reaction::unbanded(Polynomial::new(vec![0.0, 0.0, 0.0, 1.0]), 1.0).is_err());
    }

    #[test]
    fn potential_is_the_quartic_double_well() {
        let rx = Reaction::canonical();
        // W = (1 - u^2)^2 / 4
        for u in [-1.0, -0.5, 0.0, 0.3, 1.0] {
            let want = (1.0 - u * u) * (1.0 - u * u) / 4.0;
            assert!((rx.eval_w(u) - want).abs() < 1e-15);
        }
        assert_eq!(rx.eval_w(1.0), 0.0);
        assert_eq!(rx.eval_w(-1.0), 0.0);
        // W' = f as polynomials
        let wp = rx.w().derivative();
        for (a, b) in wp.coeffs().iter().zip(rx.f().coeffs()) {
            assert!((a - b).abs() < 1e-15);
        }
        // W > 0 strictly inside
        for k in 1..100 {
            let u = -1.0 + 0.02 * k as f64;
            if u.abs() < 1.0 - 1e-9 {
                assert!(rx.eval_w(u) > 0.0);
            }
        }
    }

    #[test]
    fn g_has_three_roots_above_lambda_min() {
        let f = Polynomial::cubic();
        for lambda in [16.0 / 3.0, 6.0, 10.0, 50.0] {
            let g = Polynomial::new(vec![0.0, 1.0]).add_scaled(lambda, &f);
            assert_eq!(g.roots_in(-8.0, 8.0).len(), 3, "lambda = {lambda}");
        }
    }

    #[test]
    fn damped_update_monotone_on_bands() {
        // u - h (u + lambda f(u)) increases on the outer bands when h < h_max
        let rx = Reaction::canonical();
        let bands = *rx.bands().unwrap();
        let h = bands.h_max * 0.99;
        let step = |u: f64| u - h * (u + rx.lambda() * rx.eval_f(u));
        for band in [(-1.0, bands.alpha_minus), (bands.alpha_plus, 1.0)] {
            let mut prev = step(band.0);
            for k in 1..=100 {
                let u = band.0 + (band.1 - band.0) * k as f64 / 100.0;
                let cur = step(u);
                assert!(cur > prev, "not increasing at u = {u}");
                prev = cur;
            }
        }
    }
}
