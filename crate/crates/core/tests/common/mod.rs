//! Shared helpers for integration tests: deterministic RNG, random kernel
//! generation, and independent dense oracles (Newton solve, matrix
//! exponential, Gaussian elimination).

#![allow(dead_code)]

use std::collections::BTreeMap;

use padr_core::grid::GridParams;
use padr_core::kernel::RadialKernel;
use padr_core::operator::UltradiffOperator;
use padr_core::reaction::Reaction;
use padr_core::state::State;

/// Small deterministic xorshift generator; enough for test data.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut s = self.0;
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        self.0 = s;
        s
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [-1, 1].
    pub fn symmetric(&mut self) -> f64 {
        self.unit() * 2.0 - 1.0
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

/// Random normalized table kernel with levels in `[-2, max_level]`.
pub fn random_kernel(rng: &mut TestRng, params: &GridParams, max_level: i32) -> RadialKernel {
    loop {
        let mut levels = BTreeMap::new();
        for r in -2..=max_level {
            if rng.unit() < 0.7 {
                levels.insert(r, rng.unit());
            }
        }
        let kernel = RadialKernel::table(levels).unwrap();
        if let Ok(normalized) = kernel.normalize(params) {
            return normalized;
        }
        // all-zero draw; retry
    }
}

pub fn random_state(rng: &mut TestRng, len: usize) -> State {
    State::new((0..len).map(|_| rng.symmetric()).collect())
}

pub fn build_operator(params: GridParams, kernel: &RadialKernel) -> UltradiffOperator {
    UltradiffOperator::build(params, &kernel.truncate(&params).unwrap()).unwrap()
}

/// Solve `M x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        b.swap(col, pivot);
        let diag = m[col][col];
        assert!(diag.abs() > 1e-300, "singular system");
        #[allow(clippy::needless_range_loop)]
        for row in (col + 1)..n {
            let factor = m[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x
}

/// Dense Newton solve of `A u + lambda f(u) = 0` from a given start;
/// independent of the fixed-point path.
pub fn newton_stationary(op: &UltradiffOperator, rx: &Reaction, start: &State, tol: f64) -> State {
    let a = op.dense_matrix().unwrap();
    let m = start.len();
    let lambda = rx.lambda();
    let mut u: Vec<f64> = start.as_slice().to_vec();
    for _ in 0..100 {
        let mut residual = vec![0.0; m];
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                acc += a[i][j] * u[j];
            }
            residual[i] = acc + lambda * rx.eval_f(u[i]);
        }
        let res_norm = residual.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if res_norm <= tol {
            return State::new(u);
        }
        let mut jac = a.clone();
        for (i, row) in jac.iter_mut().enumerate() {
            row[i] += lambda * rx.eval_f_prime(u[i]);
        }
        let rhs: Vec<f64> = residual.iter().map(|v| -v).collect();
        let step = gauss_solve(jac, rhs);
        for i in 0..m {
            u[i] += step[i];
        }
    }
    panic!("newton iteration did not converge to {tol}");
}

/// Dense `e^{t M}` by scaling and squaring with a Taylor series at the base
/// scale; verification oracle for the uniformized semigroup.
pub fn expm_dense(m: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    let n = m.len();
    let norm: f64 = m
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = t;
    while norm * scale.abs() > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }

    let mut result = identity(n);
    let mut term = identity(n);
    let mut k = 1.0;
    loop {
        term = mat_mul(&term, m);
        mat_scale(&mut term, scale / k);
        mat_add(&mut result, &term);
        let term_norm: f64 = term
            .iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        if term_norm < 1e-18 {
            break;
        }
        k += 1.0;
        assert!(k < 60.0, "taylor series failed to settle");
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn mat_scale(m: &mut [Vec<f64>], s: f64) {
    for row in m {
        for v in row {
            *v *= s;
        }
    }
}

fn mat_add(a: &mut [Vec<f64>], b: &[Vec<f64>]) {
    for (ra, rb) in a.iter_mut().zip(b) {
        for (va, vb) in ra.iter_mut().zip(rb) {
            *va += vb;
        }
    }
}
