//! Radial transition kernels `J(||x||_p)` and their exact level-sum integrals.
//!
//! A radial function is constant on every sphere `S_r^n`, so its integral over
//! any ball or sphere is a sum of terms `J(p^r) * p^{rn} (1 - p^{-n})`. All
//! integration here is by such level sums: exact for kernels with finite level
//! support, tail-truncated at a relative tolerance otherwise.

use std::collections::BTreeMap;

use crate::error::Error;
use crate::grid::GridParams;
use crate::Result;

/// Default relative tolerance for infinite level sums.
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;

/// Window bound for tail summation; a sum that has not settled after this
/// many levels is reported as divergent.
const MAX_TAIL_LEVELS: i32 = 4096;

/// Consecutive negligible (or rising) terms required to stop (or reject).
const RUN_LENGTH: usize = 8;

/// Kernel profile as a function of the radius exponent `r` (radius `p^r`).
#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// Explicit values on radii `p^r`; zero off the listed levels.
    Table(BTreeMap<i32, f64>),
    /// Indicator of the ball of radius `p^radius_exp`.
    UniformBall { radius_exp: i32 },
    /// `J(||x||) = ||x||^gamma exp(-||x||)`; integrable for `gamma > -n`.
    ExpLandscape { gamma: f64 },
}

impl KernelFamily {
    /// Raw (unscaled) profile value at radius `p^r`.
    fn raw_value(&self, r: i32, p: u32) -> f64 {
        match self {
            KernelFamily::Table(map) => map.get(&r).copied().unwrap_or(0.0),
            KernelFamily::UniformBall { radius_exp } => {
                if r <= *radius_exp {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::ExpLandscape { gamma } => {
                let radius = f64::from(p).powi(r);
                radius.powf(*gamma) * (-radius).exp()
            }
        }
    }

    /// Largest level with a nonzero value, when the support is bounded above.
    fn max_level(&self) -> Option<i32> {
        match self {
            KernelFamily::Table(map) => map
                .iter()
                .filter(|(_, &v)| v != 0.0)
                .map(|(&r, _)| r)
                .max()
                .or(Some(i32::MIN)),
            KernelFamily::UniformBall { radius_exp } => Some(*radius_exp),
            KernelFamily::ExpLandscape { .. } => None,
        }
    }

    /// Smallest level with a nonzero value, when the support is bounded below.
    fn min_level(&self) -> Option<i32> {
        match self {
            KernelFamily::Table(map) => map
                .iter()
                .filter(|(_, &v)| v != 0.0)
                .map(|(&r, _)| r)
                .min()
                .or(Some(i32::MAX)),
            _ => None,
        }
    }
}

/// A nonnegative radial kernel `c * family(r)` together with the tolerance
/// used for its infinite level sums.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialKernel {
    family: KernelFamily,
    scale: f64,
    tail_tol: f64,
}

impl RadialKernel {
    /// Kernel from explicit level values `r -> J(p^r)`.
    pub fn table(levels: BTreeMap<i32, f64>) -> Result<Self> {
        if levels.values().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::KernelMass(
                "table kernel values must be finite and >= 0".into(),
            ));
        }
        Ok(RadialKernel {
            family: KernelFamily::Table(levels),
            scale: 1.0,
            tail_tol: DEFAULT_TAIL_TOL,
        })
    }

    /// Indicator kernel of the ball of radius `p^radius_exp`.
    pub fn uniform_ball(radius_exp: i32) -> Self {
        RadialKernel {
            family: KernelFamily::UniformBall { radius_exp },
            scale: 1.0,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }

    /// Exponential-landscape kernel `||x||^gamma exp(-||x||)`.
    pub fn exp_landscape(gamma: f64) -> Self {
        RadialKernel {
            family: KernelFamily::ExpLandscape { gamma },
            scale: 1.0,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }

    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Kernel value at radius `p^r`.
    pub fn value(&self, r: i32, p: u32) -> f64 {
        self.scale * self.family.raw_value(r, p)
    }

    /// `∫_{S_r} J = J(p^r) p^{rn} (1 - p^{-n})`, exact.
    pub fn sphere_integral(&self, r: i32, params: &GridParams) -> f64 {
        self.value(r, params.p) * params.sphere_volume(r)
    }

    /// `∫_{B_rmax} J` by level sums from `r_max` downward.
    pub fn ball_integral(&self, r_max: i32, params: &GridParams) -> Result<f64> {
        if let KernelFamily::ExpLandscape { gamma } = self.family {
            if gamma <= -f64::from(params.n) {
                return Err(Error::KernelMass(format!(
                    "exp-landscape gamma = {gamma} <= -n = {}: downward level sum diverges",
                    -f64::from(params.n)
                )));
            }
        }
        let start = match self.family.max_level() {
            Some(top) => top.min(r_max),
            None => r_max,
        };
        let floor = self.family.min_level();
        let mut total = 0.0f64;
        let mut prev_term: Option<f64> = None;
        let mut rising = 0usize;
        let mut negligible = 0usize;
        let mut r = start;
        loop {
            if let Some(fl) = floor {
                if r < fl {
                    break;
                }
            }
            let term = self.sphere_integral(r, params);
            total += term;
            if term > 0.0 {
                if let Some(prev) = prev_term {
                    if term >= prev {
                        rising += 1;
                        if rising >= RUN_LENGTH {
                            return Err(Error::KernelMass(format!(
                                "downward tail not decreasing near level {r}: level sum diverges"
                            )));
                        }
                    } else {
                        rising = 0;
                    }
                }
                prev_term = Some(term);
            }
            if total > 0.0 && term <= self.tail_tol * total {
                negligible += 1;
                if negligible >= RUN_LENGTH {
                    break;
                }
            } else {
                negligible = 0;
            }
            if start - r > MAX_TAIL_LEVELS {
                return Err(Error::KernelMass(format!(
                    "downward tail below level {r} did not settle within {MAX_TAIL_LEVELS} levels"
                )));
            }
            r -= 1;
        }
        Ok(total)
    }

    /// `∫_{Q_p^n} J` by symmetric level sums.
    pub fn total_mass(&self, params: &GridParams) -> Result<f64> {
        let mut total = self.ball_integral(0, params)?;
        // upward tail
        let top = self.family.max_level();
        let mut negligible = 0usize;
        let mut r = 1;
        loop {
            if let Some(t) = top {
                if r > t {
                    break;
                }
            }
            let term = self.sphere_integral(r, params);
            total += term;
            if total > 0.0 && term <= self.tail_tol * total {
                negligible += 1;
                if negligible >= RUN_LENGTH {
                    break;
                }
            } else {
                negligible = 0;
            }
            if r > MAX_TAIL_LEVELS {
                return Err(Error::KernelMass(format!(
                    "upward tail above level {r} did not settle within {MAX_TAIL_LEVELS} levels"
                )));
            }
            r += 1;
        }
        Ok(total)
    }

    /// Rescale so the total mass is 1 (within the tail tolerance).
    pub fn normalize(&self, params: &GridParams) -> Result<RadialKernel> {
        let mass = self.total_mass(params)?;
        if mass <= 0.0 {
            return Err(Error::KernelMass("kernel has zero total mass".into()));
        }
        let mut out = self.clone();
        out.scale = self.scale / mass;
        Ok(out)
    }

    /// Truncate a normalized kernel at a grid resolution: records
    /// `j_N = ∫_{B_N} J` and the diagonal tail `∫_{B_-N} J`.
    pub fn truncate(&self, params: &GridParams) -> Result<TruncatedKernel> {
        let mass = self.total_mass(params)?;
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::KernelMass(format!(
                "truncate requires a normalized kernel; total mass = {mass}"
            )));
        }
        let nn = params.resolution as i32;
        let j_n = self.ball_integral(nn, params)?;
        let diag_mass = self.ball_integral(-nn, params)?;
        Ok(TruncatedKernel {
            kernel: self.clone(),
            params: *params,
            j_n,
            diag_mass,
        })
    }
}

/// A normalized kernel truncated to `B_N^n`, with the captured mass `j_N` and
/// the inner-ball mass that lands on the matrix diagonal.
#[derive(Debug, Clone)]
pub struct TruncatedKernel {
    kernel: RadialKernel,
    params: GridParams,
    j_n: f64,
    diag_mass: f64,
}

impl TruncatedKernel {
    pub fn kernel(&self) -> &RadialKernel {
        &self.kernel
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    /// Captured mass `j_N = ∫_{B_N} J`, in `[0, 1]`.
    pub fn j_n(&self) -> f64 {
        self.j_n
    }

    /// Inner tail `∫_{B_-N} J`, the diagonal entry of the interaction matrix.
    pub fn diag_mass(&self) -> f64 {
        self.diag_mass
    }
}
