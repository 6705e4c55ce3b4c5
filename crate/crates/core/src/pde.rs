//! Operators encoding a 1D second-order (optionally nonlinear) differential
//! equation on a periodic grid of `2^N` points, `x_g = g / 2^N`.
//!
//! The grid translation `Â†` maps `|g⟩ ↦ |g+1 mod 2^N⟩`. With `C_g = f(x_g)`
//! this sends the samples of `f(x)` to the samples of `f(x − δL)`, which fixes
//! the sign of the one-sided first-derivative stencil `(𝟙 − Â†)/δL`.

use serde::{Deserialize, Serialize};

use crate::error::{argument, validation, QuvaError, Result};
use crate::operator::{DenseOperator, LinearOperator, PermutationOp};
use crate::state::{DiagonalMixedState, Statevector, MAX_QUBITS};

/// Coefficients of `κ₂ f'' + κ₁ f' + (κ₀ + V(x) + κ_n |f|²) f = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DEProblem {
    pub kappa2: f64,
    pub kappa1: f64,
    pub kappa0: f64,
    #[serde(default)]
    pub v_max: f64,
    #[serde(default)]
    pub kappa_n: f64,
    pub n_qubits: usize,
    #[serde(default)]
    pub depth: usize,
}

impl DEProblem {
    /// Linear equation with `κ₂ = 1`, no potential and no nonlinearity.
    pub fn linear(kappa1: f64, kappa0: f64, n_qubits: usize) -> Self {
        Self { kappa2: 1.0, kappa1, kappa0, v_max: 0.0, kappa_n: 0.0, n_qubits, depth: 0 }
    }

    pub fn helmholtz(kappa0: f64, n_qubits: usize) -> Self {
        Self::linear(0.0, kappa0, n_qubits)
    }

    pub fn with_potential(mut self, v_max: f64) -> Self {
        self.v_max = v_max;
        self
    }

    pub fn with_nonlinearity(mut self, kappa_n: f64) -> Self {
        self.kappa_n = kappa_n;
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    /// Grid spacing `2^{-N}`.
    pub fn delta_l(&self) -> f64 {
        grid_spacing(self.n_qubits)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(QuvaError::Size { n_qubits: self.n_qubits, max: MAX_QUBITS });
        }
        let coeffs = [self.kappa2, self.kappa1, self.kappa0, self.v_max, self.kappa_n];
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(validation("equation coefficients must be finite"));
        }
        if self.v_max < 0.0 {
            return Err(validation("v_max must be non-negative"));
        }
        Ok(())
    }
}

pub fn grid_spacing(n_qubits: usize) -> f64 {
    (-(n_qubits as f64)).exp2()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    /// Trace-normalized harmonic well `∝ (1 − 2x)²`.
    Harmonic,
    /// Raw diagonal values `V_g`.
    Custom(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    #[serde(default)]
    pub v_max: f64,
}

impl PotentialSpec {
    pub fn harmonic(v_max: f64) -> Self {
        Self { kind: PotentialKind::Harmonic, v_max }
    }

    pub fn none() -> Self {
        Self::harmonic(0.0)
    }

    pub fn custom(values: Vec<f64>) -> Self {
        Self { kind: PotentialKind::Custom(values), v_max: 0.0 }
    }

    /// Diagonal entries `V_g` on an `n_qubits` grid.
    pub fn diag(&self, n_qubits: usize) -> Result<Vec<f64>> {
        match &self.kind {
            PotentialKind::Harmonic => harmonic_potential_diag(n_qubits, self.v_max),
            PotentialKind::Custom(values) => {
                let dim = 1usize << n_qubits;
                if values.len() != dim {
                    return Err(argument(format!(
                        "custom potential has {} entries, grid has {dim}",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(validation("custom potential values must be finite"));
                }
                Ok(values.clone())
            }
        }
    }

    pub fn is_zero(&self, n_qubits: usize) -> Result<bool> {
        Ok(self.diag(n_qubits)?.iter().all(|v| *v == 0.0))
    }

    /// Splits `V = s₊ ρ₊ − s₋ ρ₋` into non-negative scales and unit-trace
    /// diagonal states, the form a SWAP-test measurement consumes. Parts with
    /// zero weight are omitted.
    pub fn mixed_decomposition(&self, n_qubits: usize) -> Result<Vec<(f64, DiagonalMixedState)>> {
        let diag = self.diag(n_qubits)?;
        let mut parts = Vec::new();
        for sign in [1.0, -1.0] {
            let part: Vec<f64> = diag.iter().map(|v| (sign * v).max(0.0)).collect();
            let scale: f64 = part.iter().sum();
            if scale > 0.0 {
                let weights: Vec<f64> = part.iter().map(|v| v / scale).collect();
                parts.push((sign * scale, renormalized(weights)?));
            }
        }
        Ok(parts)
    }
}

/// Builds a mixed state after removing rounding drift in the weight sum.
pub(crate) fn renormalized(mut weights: Vec<f64>) -> Result<DiagonalMixedState> {
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    DiagonalMixedState::new(weights)
}

/// `V_g = V_max (1 − 2x_g)² / Σ_h (1 − 2x_h)²`, so `Σ_g V_g = V_max`.
/// On three qubits this is `(4 V_max / 11)(1 − g/4)²`.
pub fn harmonic_potential_diag(n_qubits: usize, v_max: f64) -> Result<Vec<f64>> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(QuvaError::Size { n_qubits, max: MAX_QUBITS });
    }
    let dim = 1usize << n_qubits;
    let shape: Vec<f64> = (0..dim)
        .map(|g| {
            let x = g as f64 / dim as f64;
            (1.0 - 2.0 * x).powi(2)
        })
        .collect();
    let trace: f64 = shape.iter().sum();
    Ok(shape.into_iter().map(|s| v_max * s / trace).collect())
}

/// `ρ^χ = V / V_max` for the harmonic well.
pub fn harmonic_mixed_state(n_qubits: usize) -> Result<DiagonalMixedState> {
    renormalized(harmonic_potential_diag(n_qubits, 1.0)?)
}

/// Direction of the grid translation used by [`subtractor_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ShiftConvention {
    /// `|g⟩ ↦ |g + 1⟩`: translates samples of `f(x)` to `f(x − δL)`.
    #[default]
    Forward,
    /// Reversed direction; only useful as a negative control.
    Backward,
}

/// `Â†`, the cyclic grid translation `|g⟩ ↦ |g + 1 mod 2^N⟩`.
pub fn subtractor(n_qubits: usize) -> PermutationOp {
    subtractor_with(n_qubits, ShiftConvention::Forward)
}

pub fn subtractor_with(n_qubits: usize, convention: ShiftConvention) -> PermutationOp {
    let dim = 1usize << n_qubits;
    let image = (0..dim)
        .map(|g| match convention {
            ShiftConvention::Forward => (g + 1) % dim,
            ShiftConvention::Backward => (g + dim - 1) % dim,
        })
        .collect();
    PermutationOp::new(image).expect("cyclic shift is a bijection")
}

/// `Â = (Â†)†`.
pub fn adder(n_qubits: usize) -> PermutationOp {
    subtractor(n_qubits).inverse()
}

/// `(Â + Â† − 2𝟙) / δL²`.
pub fn second_derivative_op(n_qubits: usize) -> DenseOperator {
    let dim = 1usize << n_qubits;
    let shift = subtractor(n_qubits).to_dense();
    let back = shift.adjoint();
    let two = DenseOperator::identity(dim).scale(2.0);
    (&(&shift + &back) - &two).scale(grid_spacing(n_qubits).powi(-2))
}

/// Eigenvalues of [`second_derivative_op`] from a dense symmetric solve,
/// ascending.
pub fn second_derivative_spectrum(n_qubits: usize) -> Vec<f64> {
    let op = second_derivative_op(n_qubits);
    let real = op.entries().map(|z| z.re);
    let mut values: Vec<f64> = nalgebra::SymmetricEigen::new(real).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Closed-form circulant eigenvalues `(2/δL²)(cos(2πk/2^N) − 1)`, ascending.
pub fn circulant_second_derivative_eigenvalues(n_qubits: usize) -> Vec<f64> {
    let dim = 1usize << n_qubits;
    let dl = grid_spacing(n_qubits);
    let mut values: Vec<f64> = (0..dim)
        .map(|k| 2.0 / (dl * dl) * ((2.0 * std::f64::consts::PI * k as f64 / dim as f64).cos() - 1.0))
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `(𝟙 − Â†) / δL`.
pub fn first_derivative_op(n_qubits: usize) -> DenseOperator {
    let dim = 1usize << n_qubits;
    let shift = subtractor(n_qubits).to_dense();
    (&DenseOperator::identity(dim) - &shift).scale(1.0 / grid_spacing(n_qubits))
}

/// `(Ô_∂¹)^order` for `1 ≤ order ≤ 4`.
pub fn derivative_power(n_qubits: usize, order: u32) -> Result<DenseOperator> {
    if order == 0 {
        return Err(argument("derivative order must be at least 1; use the identity for order 0"));
    }
    if order > 4 {
        return Err(argument(format!("derivative order {order} exceeds the supported maximum of 4")));
    }
    first_derivative_op(n_qubits).pow(order)
}

/// `ρ_D = Σ_g |C_g|² |g⟩⟨g|`.
pub fn nonlinear_density_op(system: &Statevector) -> DiagonalMixedState {
    system.decohere_to_diagonal()
}

/// Dense `κ₂Ô_∂² + κ₁Ô_∂¹ + κ₀𝟙 + V + κ_n ρ_D`. The last term depends on the
/// state, so `system` is required whenever `κ_n ≠ 0`.
pub fn total_operator(
    problem: &DEProblem,
    potential: &PotentialSpec,
    system: Option<&Statevector>,
) -> Result<DenseOperator> {
    problem.validate()?;
    let n = problem.n_qubits;
    let dim = 1usize << n;
    let mut total = &second_derivative_op(n).scale(problem.kappa2) + &first_derivative_op(n).scale(problem.kappa1);
    total = &total + &DenseOperator::identity(dim).scale(problem.kappa0);
    total = &total + &DenseOperator::diagonal(&potential.diag(n)?);
    if problem.kappa_n != 0.0 {
        let system = system.ok_or_else(|| argument("a nonlinear operator needs the system state"))?;
        if system.n_qubits() != n {
            return Err(argument(format!(
                "system has {} qubits, problem has {n}",
                system.n_qubits()
            )));
        }
        let density = nonlinear_density_op(system);
        total = &total + &density.to_dense().scale(problem.kappa_n);
    }
    Ok(total)
}

/// Kronecker sums `(Ô_∂²(x)⊗𝟙 + 𝟙⊗Ô_∂²(y), Ô_∂¹(x)⊗𝟙 + 𝟙⊗Ô_∂¹(y))`.
/// Both axes must share the grid spacing.
pub fn separable_2d_ops(n_qubits_x: usize, n_qubits_y: usize) -> Result<(DenseOperator, DenseOperator)> {
    if n_qubits_x != n_qubits_y {
        return Err(argument("separable operators need equal spacing on both axes"));
    }
    if n_qubits_x + n_qubits_y > MAX_QUBITS {
        return Err(QuvaError::Size { n_qubits: n_qubits_x + n_qubits_y, max: MAX_QUBITS });
    }
    let id_x = DenseOperator::identity(1 << n_qubits_x);
    let id_y = DenseOperator::identity(1 << n_qubits_y);
    let kron_sum = |ox: DenseOperator, oy: DenseOperator| &ox.kron(&id_y) + &id_x.kron(&oy);
    Ok((
        kron_sum(second_derivative_op(n_qubits_x), second_derivative_op(n_qubits_y)),
        kron_sum(first_derivative_op(n_qubits_x), first_derivative_op(n_qubits_y)),
    ))
}
