//! The discrete non-local Helmholtz free energy and its gradient.
//!
//! On the grid the functional reads
//!
//! ```text
//! E[u] = (p^-Nn / 2) <u, A u>  +  lambda p^-Nn sum_i W(u_i)
//! ```
//!
//! the first term being algebraically equal to the double sum
//! `(j_N p^-Nn / 2) sum u_i^2 - (p^-Nn / 2) sum a_ij u_i u_j`. The gradient of
//! `E` in `R^M` is `p^-Nn (A u + lambda f(u))`, so the reaction-ultradiffusion
//! flow is the gradient flow of `E` up to the uniform time rescaling absorbed
//! by the dynamics module.

use crate::operator::UltradiffOperator;
use crate::reaction::Reaction;
use crate::state::State;
use crate::Result;

/// Interaction, potential and total energy of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `(p^-Nn / 2) <u, A u>` — nonnegative, since `A` is positive
    /// semidefinite.
    pub interaction: f64,
    /// `lambda p^-Nn sum_i W(u_i)` — nonnegative for the double-well `W`.
    pub potential: f64,
    pub total: f64,
}

/// Evaluate the energy through the operator quadratic form.
pub fn energy(u: &State, op: &UltradiffOperator, rx: &Reaction) -> Result<EnergyBreakdown> {
    let au = op.matvec_fast(u)?;
    let weight = op.params().ball_volume(-(op.params().resolution as i32));
    let interaction = 0.5 * weight * u.dot(&au)?;
    let potential: f64 = rx.lambda() * weight * u.iter().map(|&v| rx.eval_w(v)).sum::<f64>();
    Ok(EnergyBreakdown {
        interaction,
        potential,
        total: interaction + potential,
    })
}

/// Energy by the literal double sum over pairs; `O(M^2)` oracle for
/// [`energy`], available on dense-guard-sized grids only.
pub fn energy_double_sum(
    u: &State,
    op: &UltradiffOperator,
    rx: &Reaction,
) -> Result<EnergyBreakdown> {
    let a = op.dense_interaction()?;
    let m = u.len();
    let weight = op.params().ball_volume(-(op.params().resolution as i32));
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += a[i][j] * u[i] * u[j];
        }
    }
    let sq: f64 = u.iter().map(|&v| v * v).sum();
    let interaction = 0.5 * op.j_n() * weight * sq - 0.5 * weight * quad;
    let potential: f64 = rx.lambda() * weight * u.iter().map(|&v| rx.eval_w(v)).sum::<f64>();
    Ok(EnergyBreakdown {
        interaction,
        potential,
        total: interaction + potential,
    })
}

/// `grad E = p^-Nn (A u + lambda f(u))`, entrywise.
pub fn gradient(u: &State, op: &UltradiffOperator, rx: &Reaction) -> Result<State> {
    let mut g = op.matvec_fast(u)?;
    let weight = op.params().ball_volume(-(op.params().resolution as i32));
    for (gi, &ui) in g.as_mut_slice().iter_mut().zip(u.iter()) {
        *gi = weight * (*gi + rx.lambda() * rx.eval_f(ui));
    }
    Ok(g)
}
