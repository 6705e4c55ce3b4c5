//! Dense statevectors for small registers.
//!
//! Basis index convention: qubit 0 is the most significant bit of the basis
//! index `g`, so for three qubits `|j k l⟩` has `g = 4j + 2k + l`. Every other
//! module inherits this convention.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Range;

use rand::distributions::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{argument, validation, QuvaError, Result};
use crate::operator::{DenseOperator, LinearOperator, C64, ONE, ZERO};

/// Largest register the simulator will allocate (joint registers included).
pub const MAX_QUBITS: usize = 12;

/// Tolerance used when a caller hands over amplitudes that must be normalized.
pub const NORM_TOL: f64 = 1e-10;

/// Tolerance for the unitarity check on controlled operators.
pub const UNITARY_TOL: f64 = 1e-10;

/// Single-qubit gates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rx(f64),
    Ry(f64),
    Rz(f64),
    H,
    X,
}

impl Gate {
    /// Row-major 2×2 matrix. Rotations follow `cos(λ/2) I − i sin(λ/2) σ`.
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let re = |x: f64| C64::new(x, 0.0);
        match *self {
            Gate::Rx(l) => {
                let (s, c) = (l / 2.0).sin_cos();
                [[re(c), C64::new(0.0, -s)], [C64::new(0.0, -s), re(c)]]
            }
            Gate::Ry(l) => {
                let (s, c) = (l / 2.0).sin_cos();
                [[re(c), re(-s)], [re(s), re(c)]]
            }
            Gate::Rz(l) => {
                let (s, c) = (l / 2.0).sin_cos();
                [[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]]
            }
            Gate::H => [
                [re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)],
                [re(FRAC_1_SQRT_2), re(-FRAC_1_SQRT_2)],
            ],
            Gate::X => [[ZERO, ONE], [ONE, ZERO]],
        }
    }
}

fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(QuvaError::Size { n_qubits, max: MAX_QUBITS });
    }
    Ok(())
}

/// Normalized amplitude vector over `2^n_qubits` basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(argument(format!("basis index {index} out of range for dimension {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Equal superposition, the discretization of a constant function.
    pub fn uniform(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let a = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self { n_qubits, amps: vec![a; dim] })
    }

    /// `2^{-N/2} Σ_g exp(2πi k g / 2^N) |g⟩`.
    pub fn fourier_mode(n_qubits: usize, k: i64) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let norm = 1.0 / (dim as f64).sqrt();
        let amps = (0..dim)
            .map(|g| {
                let phase = 2.0 * std::f64::consts::PI * (k as f64) * (g as f64) / dim as f64;
                C64::from_polar(norm, phase)
            })
            .collect();
        Ok(Self { n_qubits, amps })
    }

    /// Takes ownership of amplitudes that must already be normalized (within
    /// [`NORM_TOL`]) and have power-of-two length.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n_qubits = register_size(amps.len())?;
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(validation(format!("amplitudes have squared norm {norm_sq}, expected 1")));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(validation("cannot normalize a zero or non-finite vector"));
        }
        Self::from_amplitudes(amps.into_iter().map(|a| a / norm).collect())
    }

    /// Haar-like random state (normalized complex Gaussian amplitudes).
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let amps = (0..dim)
            .map(|_| C64::new(gaussian(rng), gaussian(rng)))
            .collect();
        Self::normalized(amps)
    }

    /// Random state with real amplitudes.
    pub fn random_real<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        Self::normalized((0..dim).map(|_| C64::new(gaussian(rng), 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// Real parts of the amplitudes.
    pub fn real_parts(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.re).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(argument(format!(
                "inner product of {}- and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `self ⊗ other`, with `self` on the more significant qubits.
    pub fn tensor(&self, other: &Statevector) -> Result<Statevector> {
        check_size(self.n_qubits + other.n_qubits)?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { n_qubits: self.n_qubits + other.n_qubits, amps })
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(QuvaError::Index { index: q, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    /// Bit mask selecting qubit `q` inside a basis index.
    pub(crate) fn mask(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    /// Applies a single-qubit gate in place.
    pub fn apply_gate(&mut self, gate: Gate, target: usize) -> Result<()> {
        self.check_qubit(target)?;
        let m = gate.matrix();
        let mask = self.mask(target);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
        Ok(())
    }

    /// Applies `gate` on `target` when every qubit in `controls` is `|1⟩`.
    pub fn apply_controlled_gate(&mut self, controls: &[usize], target: usize, gate: Gate) -> Result<()> {
        self.check_qubit(target)?;
        let mut control_mask = 0;
        for &c in controls {
            self.check_qubit(c)?;
            if c == target {
                return Err(argument("control qubit equals target qubit"));
            }
            control_mask |= self.mask(c);
        }
        let m = gate.matrix();
        let mask = self.mask(target);
        for i in 0..self.amps.len() {
            if i & mask == 0 && i & control_mask == control_mask {
                let j = i | mask;
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(argument("CNOT control and target must differ"));
        }
        let (cm, tm) = (self.mask(control), self.mask(target));
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
        Ok(())
    }

    /// Applies `op` to the contiguous qubit block `system` (no control).
    pub fn apply_block(&mut self, op: &dyn LinearOperator, system: Range<usize>) -> Result<()> {
        self.apply_block_where(op, system, 0)
    }

    /// `|0⟩⟨0|_c ⊗ 𝟙 + |1⟩⟨1|_c ⊗ op` with `op` acting on the contiguous block
    /// `system`. The operator must be unitary within [`UNITARY_TOL`].
    pub fn apply_controlled(
        &mut self,
        op: &dyn LinearOperator,
        control: usize,
        system: Range<usize>,
    ) -> Result<()> {
        self.check_qubit(control)?;
        if system.contains(&control) {
            return Err(argument("control qubit lies inside the system block"));
        }
        if !op.is_unitary(UNITARY_TOL) {
            return Err(validation("controlled operator is not unitary"));
        }
        let cm = self.mask(control);
        self.apply_block_where(op, system, cm)
    }

    fn apply_block_where(&mut self, op: &dyn LinearOperator, system: Range<usize>, control_mask: usize) -> Result<()> {
        if system.is_empty() || system.end > self.n_qubits {
            return Err(argument(format!(
                "system block {:?} invalid for a {}-qubit register",
                system, self.n_qubits
            )));
        }
        let width = system.end - system.start;
        let sub_dim = 1usize << width;
        if op.dim() != sub_dim {
            return Err(argument(format!(
                "operator dimension {} does not match a {width}-qubit block",
                op.dim()
            )));
        }
        let shift = self.n_qubits - system.end;
        let block_mask = (sub_dim - 1) << shift;
        let mut gathered = vec![ZERO; sub_dim];
        let mut result = vec![ZERO; sub_dim];
        for outer in 0..self.amps.len() {
            if outer & block_mask != 0 || outer & control_mask != control_mask {
                continue;
            }
            for (s, slot) in gathered.iter_mut().enumerate() {
                *slot = self.amps[outer | (s << shift)];
            }
            op.apply_to(&gathered, &mut result);
            for (s, value) in result.iter().enumerate() {
                self.amps[outer | (s << shift)] = *value;
            }
        }
        Ok(())
    }

    /// Exact `⟨Z⟩` on one qubit.
    pub fn z_expectation(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// Mean of `shots` simulated ±1 outcomes of a Z measurement on `qubit`.
    pub fn sample_z(&self, qubit: usize, shots: u64, seed: u64) -> Result<f64> {
        let z = self.z_expectation(qubit)?;
        sample_pm_one_mean(z, shots, seed)
    }

    /// Production path of the artificial-decoherence channel: `diag_g = |C_g|²`.
    pub fn decohere_to_diagonal(&self) -> DiagonalMixedState {
        DiagonalMixedState {
            n_qubits: self.n_qubits,
            diag: self.probabilities(),
        }
    }

    /// Literal decoherence circuit: fan each register qubit out to a fresh
    /// ancilla with a CNOT, then trace the ancillas away. Returns the full
    /// reduced density matrix of the register.
    pub fn decoherence_circuit_density(&self) -> Result<DenseOperator> {
        let n = self.n_qubits;
        let ancillas = Statevector::zero(n)?;
        let mut joint = self.tensor(&ancillas)?;
        for q in 0..n {
            joint.apply_cnot(q, n + q)?;
        }
        Ok(reduced_density_of_leading_block(&joint, n))
    }

    /// Decoherence through the literal circuit, checked to leave no coherences.
    pub fn decohere_via_circuit(&self) -> Result<DiagonalMixedState> {
        let rho = self.decoherence_circuit_density()?;
        DiagonalMixedState::from_density(&rho, self.n_qubits, 1e-12)
    }
}

/// Reduced density matrix of the leading `keep` qubits of `joint`.
pub fn reduced_density_of_leading_block(joint: &Statevector, keep: usize) -> DenseOperator {
    let traced = joint.n_qubits() - keep;
    let inner = 1usize << traced;
    let dim = 1usize << keep;
    let amps = joint.amplitudes();
    DenseOperator::from_fn(dim, |r, c| {
        (0..inner)
            .map(|q| amps[(r << traced) | q] * amps[(c << traced) | q].conj())
            .sum()
    })
}

fn register_size(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(argument(format!("amplitude vector length {len} is not a power of two ≥ 2")));
    }
    let n = len.trailing_zeros() as usize;
    check_size(n)?;
    Ok(n)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Empirical mean of `shots` i.i.d. ±1 draws with `P(+1) = (1 + z)/2`.
pub fn sample_pm_one_mean(z: f64, shots: u64, seed: u64) -> Result<f64> {
    if shots == 0 {
        return Err(argument("shots must be at least 1"));
    }
    let p = ((1.0 + z) / 2.0).clamp(0.0, 1.0);
    let dist = Bernoulli::new(p).map_err(|e| argument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plus = (0..shots).filter(|_| dist.sample(&mut rng)).count() as f64;
    Ok((2.0 * plus - shots as f64) / shots as f64)
}

/// Diagonal density matrix `Σ_g p_g |g⟩⟨g|`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMixedState {
    n_qubits: usize,
    diag: Vec<f64>,
}

impl DiagonalMixedState {
    /// Entries must be non-negative and sum to one within `1e-12`.
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        let n_qubits = register_size(diag.len())?;
        if diag.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(validation("mixed-state weights must be finite and non-negative"));
        }
        let total: f64 = diag.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(validation(format!("mixed-state weights sum to {total}, expected 1")));
        }
        Ok(Self { n_qubits, diag })
    }

    /// Uniform weights `1/2^N`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        Ok(Self { n_qubits, diag: vec![1.0 / dim as f64; dim] })
    }

    /// Reads the diagonal of `rho`, rejecting any coherence above `tol`.
    pub fn from_density(rho: &DenseOperator, n_qubits: usize, tol: f64) -> Result<Self> {
        let dim = rho.dim();
        for r in 0..dim {
            for c in 0..dim {
                if r != c && rho.get(r, c).norm() > tol {
                    return Err(validation(format!(
                        "density matrix has coherence {} at ({r}, {c})",
                        rho.get(r, c).norm()
                    )));
                }
            }
        }
        let diag: Vec<f64> = (0..dim).map(|g| rho.get(g, g).re).collect();
        let state = Self::new(diag)?;
        debug_assert_eq!(state.n_qubits, n_qubits);
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.diag
    }

    /// Pure state `Σ_g √p_g |g⟩` whose decoherence yields `self`.
    pub fn purification(&self) -> Statevector {
        let amps = self.diag.iter().map(|p| C64::new(p.sqrt(), 0.0)).collect();
        Statevector { n_qubits: self.n_qubits, amps }
    }

    pub fn to_dense(&self) -> DenseOperator {
        DenseOperator::diagonal(&self.diag)
    }
}

/// `|0…0⟩` on `n_qubits` qubits.
pub fn zero_state(n_qubits: usize) -> Result<Statevector> {
    Statevector::zero(n_qubits)
}

/// Returns `gate` applied to `target` of a copy of `state`.
pub fn apply_1q_gate(state: &Statevector, gate: Gate, target: usize) -> Result<Statevector> {
    let mut out = state.clone();
    out.apply_gate(gate, target)?;
    Ok(out)
}

pub fn apply_cnot(state: &Statevector, control: usize, target: usize) -> Result<Statevector> {
    let mut out = state.clone();
    out.apply_cnot(control, target)?;
    Ok(out)
}

pub fn apply_controlled_unitary(
    state: &Statevector,
    op: &dyn LinearOperator,
    control: usize,
    system: Range<usize>,
) -> Result<Statevector> {
    let mut out = state.clone();
    out.apply_controlled(op, control, system)?;
    Ok(out)
}
