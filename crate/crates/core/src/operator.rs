//! The finite ultradiffusion operator `A = j_N I - a`.
//!
//! `a` is the Parisi-type interaction matrix: `a_ki = p^{-Nn} J(||k - i||_p)`
//! off the diagonal and `a_ii = ∫_{B_-N} J`. Since entries depend only on the
//! valuation of `k - i`, the whole matrix is `2N + 1` level coefficients, and
//! a matrix-vector product reduces to per-level subtree sums over the ball
//! tree: `(a u)_k = a_inf u_k + sum_r a_r * sphereSum_r(k)` in `O(M (2N+1))`
//! instead of `O(M^2)`. The dense realization exists only as a verification
//! oracle and for small-grid exports.

use rayon::prelude::*;

use crate::error::Error;
use crate::grid::{coords_valuation, GridParams, LevelTree};
use crate::kernel::TruncatedKernel;
use crate::state::State;
use crate::Result;

/// Grid size above which the fast apply parallelizes its per-level passes.
const PAR_THRESHOLD: usize = 1 << 13;

/// Dense realizations (matrix export, spectrum) are only allowed up to here.
pub const DENSE_GUARD: u64 = 4096;

/// The operator `A^(N) = j_N I - a` stored as level coefficients.
#[derive(Debug, Clone)]
pub struct UltradiffOperator {
    params: GridParams,
    tree: LevelTree,
    /// `a_r = p^{-Nn} J(p^r)` for radius exponents `r = l - N`, `l = 1..=2N`.
    level_coeffs: Vec<f64>,
    /// Diagonal coefficient `a_inf = ∫_{B_-N} J`.
    diag_coeff: f64,
    j_n: f64,
}

impl UltradiffOperator {
    /// Assemble the operator from a truncated kernel on its own grid.
    pub fn build(params: GridParams, tk: &TruncatedKernel) -> Result<Self> {
        if tk.params() != params {
            return Err(Error::ParamMismatch(format!(
                "kernel truncated for {:?}, operator requested for {:?}",
                tk.params(),
                params
            )));
        }
        let tree = LevelTree::new(params);
        let nn = params.resolution as i32;
        let weight = params.ball_volume(-nn); // p^{-Nn}
        let mut level_coeffs = Vec::with_capacity(2 * params.resolution as usize);
        for level in 1..=(2 * nn) {
            let r = level - nn;
            let a_r = weight * tk.kernel().value(r, params.p);
            if !a_r.is_finite() || a_r < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "kernel value at radius exponent {r} is negative or not finite"
                )));
            }
            level_coeffs.push(a_r);
        }
        Ok(UltradiffOperator {
            params,
            tree,
            level_coeffs,
            diag_coeff: tk.diag_mass(),
            j_n: tk.j_n(),
        })
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    pub fn tree(&self) -> &LevelTree {
        &self.tree
    }

    pub fn j_n(&self) -> f64 {
        self.j_n
    }

    pub fn diag_coeff(&self) -> f64 {
        self.diag_coeff
    }

    /// Level coefficient `a_{l-N}` for tree level `l` in `1..=2N`.
    pub fn level_coeff(&self, level: u32) -> f64 {
        self.level_coeffs[(level - 1) as usize]
    }

    pub fn dim(&self) -> usize {
        self.params.num_points() as usize
    }

    fn check_dim(&self, u: &State) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Interaction entry `a_ki` from the valuation of `k - i`.
    fn interaction_entry(&self, coords: &[u64], k: usize, i: usize, diff: &mut [u64]) -> f64 {
        if k == i {
            return self.diag_coeff;
        }
        let n = self.params.n as usize;
        let modulus = self.params.coord_modulus();
        let nn = self.params.resolution as i32;
        for j in 0..n {
            let (a, b) = (coords[k * n + j], coords[i * n + j]);
            diff[j] = (a + modulus - b) % modulus;
        }
        match coords_valuation(&self.params, diff) {
            crate::grid::ExtendedValuation::Finite(ord) => {
                self.level_coeffs[(-ord + nn - 1) as usize]
            }
            crate::grid::ExtendedValuation::Infinite => self.diag_coeff,
        }
    }

    /// Dense `O(M^2)` apply; verification oracle for [`Self::matvec_fast`].
    pub fn matvec_dense(&self, u: &State) -> Result<State> {
        self.check_dim(u)?;
        let m = self.dim();
        let n = self.params.n as usize;
        // per-ordinal coordinate decomposition, computed once
        let coords = self.all_coords();
        let mut out = vec![0.0f64; m];
        let mut diff = vec![0u64; n];
        for k in 0..m {
            let mut acc = 0.0;
            for i in 0..m {
                acc += self.interaction_entry(&coords, k, i, &mut diff) * u[i];
            }
            out[k] = self.j_n * u[k] - acc;
        }
        Ok(State::new(out))
    }

    fn all_coords(&self) -> Vec<u64> {
        let m = self.dim();
        let n = self.params.n as usize;
        let modulus = self.params.coord_modulus();
        let mut coords = vec![0u64; m * n];
        for o in 0..m {
            let mut rest = o as u64;
            for j in (0..n).rev() {
                coords[o * n + j] = rest % modulus;
                rest /= modulus;
            }
        }
        coords
    }

    /// Per-level subtree sums of `u` in tree layout. `sums[l][b]` is the sum
    /// of `u` over the ball at node `b` of level `l`.
    fn level_sums(&self, u: &State) -> Vec<Vec<f64>> {
        let m = self.dim();
        let depth = self.tree.depth() as usize;
        let q = self.tree.children_per_node() as usize;
        let canonical_of_tree = self.tree.canonical_of_tree();

        let mut sums: Vec<Vec<f64>> = Vec::with_capacity(depth + 1);
        let mut leaves = vec![0.0f64; m];
        if m >= PAR_THRESHOLD {
            leaves
                .par_iter_mut()
                .enumerate()
                .for_each(|(t, v)| *v = u[canonical_of_tree[t] as usize]);
        } else {
            for (t, v) in leaves.iter_mut().enumerate() {
                *v = u[canonical_of_tree[t] as usize];
            }
        }
        sums.push(leaves);
        for level in 1..=depth {
            let child = &sums[level - 1];
            let count = child.len() / q;
            let mut cur = vec![0.0f64; count];
            let fill = |(b, v): (usize, &mut f64)| {
                let mut acc = 0.0;
                for t in 0..q {
                    acc += child[b * q + t];
                }
                *v = acc;
            };
            if count >= PAR_THRESHOLD {
                cur.par_iter_mut().enumerate().for_each(fill);
            } else {
                cur.iter_mut().enumerate().for_each(fill);
            }
            sums.push(cur);
        }
        sums
    }

    /// Hierarchical `O(M (2N+1))` apply; equals [`Self::matvec_dense`] to
    /// rounding.
    pub fn matvec_fast(&self, u: &State) -> Result<State> {
        self.check_dim(u)?;
        let m = self.dim();
        let depth = self.tree.depth() as usize;
        let q = self.tree.children_per_node();
        let sums = self.level_sums(u);

        let tree_of_canonical = self.tree.tree_of_canonical();
        let mut out = vec![0.0f64; m];
        let gather = |(o, v): (usize, &mut f64)| {
            let uo = u[o];
            let mut t = tree_of_canonical[o] as u64;
            // spheres: ball(level) minus ball(level - 1), innermost first
            let mut inner = uo;
            let mut acc = self.diag_coeff * uo;
            #[allow(clippy::needless_range_loop)] // sliding ball/sphere window
            for level in 1..=depth {
                t /= q;
                let ball = sums[level][t as usize];
                acc += self.level_coeffs[level - 1] * (ball - inner);
                inner = ball;
            }
            *v = self.j_n * uo - acc;
        };
        if m >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(gather);
        } else {
            out.iter_mut().enumerate().for_each(gather);
        }
        Ok(State::new(out))
    }

    /// Row sum of `a` implied by the level coefficients; equals `j_N` exactly
    /// in exact arithmetic (every row of `A` then sums to zero).
    pub fn coefficient_row_sum(&self) -> f64 {
        let nn = self.params.resolution as i32;
        let mut acc = self.diag_coeff;
        for level in 1..=(2 * nn) {
            let r = level - nn;
            acc += self.level_coeffs[(level - 1) as usize] * self.params.sphere_count(r) as f64;
        }
        acc
    }

    /// Verify that `-A` is a Q-matrix: nonnegative off-diagonals and zero row
    /// sums (within `1e-12 j_N`).
    pub fn validate_qmatrix(&self) -> QMatrixReport {
        let nn = self.params.resolution as i32;
        let mut negative_levels = Vec::new();
        for level in 1..=(2 * nn) {
            let a_r = self.level_coeffs[(level - 1) as usize];
            if a_r < 0.0 {
                let r = level - nn;
                // witness pair (0, j) at this distance: j has a single digit 1
                // at position -r of its last coordinate, so its ordinal is
                // p^(N - r)
                negative_levels.push(NegativeEntry {
                    radius_exp: r,
                    coeff: a_r,
                    row: 0,
                    col: (self.params.p as u64).pow((nn - r) as u32),
                });
            }
        }
        if self.diag_coeff < 0.0 || self.j_n - self.diag_coeff < -1e-12 * self.j_n.max(1.0) {
            // diagonal of A must be j_N - diag >= 0
            negative_levels.push(NegativeEntry {
                radius_exp: i32::MIN,
                coeff: self.j_n - self.diag_coeff,
                row: 0,
                col: 0,
            });
        }

        // realized row sums: A 1 should vanish
        let ones = State::constant(self.dim(), 1.0);
        let residual = self
            .matvec_fast(&ones)
            .expect("dimension is consistent by construction");
        let max_rowsum_residual = residual.sup_norm();
        let coeff_residual = (self.coefficient_row_sum() - self.j_n).abs();

        QMatrixReport {
            max_rowsum_residual: max_rowsum_residual.max(coeff_residual),
            rowsum_tolerance: 1e-12 * self.j_n.max(f64::MIN_POSITIVE),
            negative_levels,
        }
    }

    /// `e^{-tA} u` by uniformization: `e^{-tA} = e^{-t j_N} e^{t a}`, the
    /// series summed with [`Self::matvec_fast`]. All series terms are
    /// nonnegative for nonnegative input, so positivity survives rounding.
    pub fn semigroup_apply(&self, u: &State, t: f64, tol: f64) -> Result<State> {
        self.check_dim(u)?;
        if t < 0.0 || !t.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "semigroup time must be finite and >= 0, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(u.clone());
        }
        // substep so the Poisson-like series stays short and well-scaled
        let max_chunk = 32.0;
        let steps = (t / max_chunk).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let step_tol = (tol / steps as f64).max(f64::MIN_POSITIVE);
        let mut cur = u.clone();
        for _ in 0..steps {
            cur = self.semigroup_step(&cur, dt, step_tol)?;
        }
        Ok(cur)
    }

    fn semigroup_step(&self, u: &State, t: f64, tol: f64) -> Result<State> {
        let damp = (-t * self.j_n).exp();
        let floor = tol * u.sup_norm();
        // term_0 = e^{-t j_N} u; term_{m+1} = (t / (m+1)) a term_m
        let mut term = u.clone();
        term.scale(damp);
        let mut acc = term.clone();
        let mut m = 0usize;
        loop {
            m += 1;
            term = self.apply_a(&term)?;
            term.scale(t / m as f64);
            acc.axpy(1.0, &term)?;
            // ||a v|| <= j_N ||v||, so the tail beyond term m is geometric
            // with ratio rho = t j_N / (m + 1)
            let rho = t * self.j_n / (m as f64 + 1.0);
            if rho < 1.0 && term.sup_norm() * rho / (1.0 - rho) <= floor {
                break;
            }
            if m > 10_000 {
                return Err(Error::Solver(
                    "uniformization series did not converge within 10000 terms".into(),
                ));
            }
        }
        Ok(acc)
    }

    /// `a u` (the nonnegative part of the operator).
    fn apply_a(&self, u: &State) -> Result<State> {
        // a u = j_N u - A u
        let mut au = self.matvec_fast(u)?;
        au.scale(-1.0);
        au.axpy(self.j_n, u)?;
        Ok(au)
    }

    /// Dense realization row by row in canonical order. Guarded to small grids.
    pub fn dense_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.params.num_points();
        if m > DENSE_GUARD {
            return Err(Error::Guard(format!(
                "dense realization limited to M <= {DENSE_GUARD}, grid has {m}"
            )));
        }
        let m = m as usize;
        let n = self.params.n as usize;
        let coords = self.all_coords();
        let mut diff = vec![0u64; n];
        let mut rows = Vec::with_capacity(m);
        for k in 0..m {
            let mut row = Vec::with_capacity(m);
            for i in 0..m {
                let delta = if i == k { self.j_n } else { 0.0 };
                row.push(delta - self.interaction_entry(&coords, k, i, &mut diff));
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Interaction matrix `a` (dense), for oracles and energy double sums.
    pub fn dense_interaction(&self) -> Result<Vec<Vec<f64>>> {
        let a = self.dense_matrix()?;
        let m = a.len();
        let mut out = vec![vec![0.0; m]; m];
        for k in 0..m {
            for i in 0..m {
                let delta = if i == k { self.j_n } else { 0.0 };
                out[k][i] = delta - a[k][i];
            }
        }
        Ok(out)
    }

    /// Eigenvalues of the symmetric operator, ascending. Dense solve; guarded.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let dense = self.dense_matrix()?;
        let m = dense.len();
        let mat = nalgebra::DMatrix::from_fn(m, m, |i, j| dense[i][j]);
        let eig = nalgebra::SymmetricEigen::new(mat);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
        Ok(vals)
    }

    /// Write the dense matrix as CSV, rows in canonical ordinal order.
    pub fn export_dense_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let dense = self.dense_matrix()?;
        for row in dense {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Outcome of the Q-matrix validation.
#[derive(Debug, Clone)]
pub struct QMatrixReport {
    /// Largest deviation of a realized row sum of `A` from zero.
    pub max_rowsum_residual: f64,
    /// Tolerance the row sums are held to, `1e-12 j_N`.
    pub rowsum_tolerance: f64,
    /// Levels carrying a negative interaction coefficient, with one witness
    /// matrix entry each.
    pub negative_levels: Vec<NegativeEntry>,
}

/// A located negative off-diagonal (or negative diagonal of `A`).
#[derive(Debug, Clone)]
pub struct NegativeEntry {
    /// Radius exponent of the offending level; `i32::MIN` marks the diagonal.
    pub radius_exp: i32,
    pub coeff: f64,
    pub row: u64,
    pub col: u64,
}

impl QMatrixReport {
    pub fn passed(&self) -> bool {
        self.negative_levels.is_empty() && self.max_rowsum_residual <= self.rowsum_tolerance
    }
}
