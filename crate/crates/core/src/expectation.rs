//! Control-qubit measurement protocols and assembly of `⟨Ô^tot⟩`.
//!
//! Every quantity is obtained the way the hardware protocol would obtain it:
//! a control qubit in `|+φ⟩`, a controlled unitary on the system block, a
//! Hadamard on the control and a Z measurement of the control alone. The
//! joint register is simulated gate by gate; nothing here reads amplitudes of
//! the system register directly except the final control-qubit `⟨Z⟩`.

use std::f64::consts::FRAC_PI_2;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, AnsatzSpec, ParameterVector};
use crate::error::{argument, validation, QuvaError, Result};
use crate::operator::{LinearOperator, PermutationOp};
use crate::pde::{grid_spacing, subtractor, DEProblem, PotentialKind, PotentialSpec};
use crate::state::{sample_pm_one_mean, DiagonalMixedState, Gate, Statevector, NORM_TOL, UNITARY_TOL};

/// Phase for the real-part Hadamard test.
pub const PHASE_REAL: f64 = 0.0;
/// Phase for the imaginary-part Hadamard test.
pub const PHASE_IMAG: f64 = -FRAC_PI_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementMode {
    #[default]
    Exact,
    Shots { count: u64, seed: u64 },
}

/// How a diagonal mixed state reaches the SWAP-test register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MixedInjection {
    /// The mixed state is loaded directly (simulated as its basis-state ensemble).
    #[default]
    Direct,
    /// A purification is prepared and decohered by CNOT fan-out to ancillas.
    Purified,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    #[serde(default)]
    pub mode: MeasurementMode,
    #[serde(default)]
    pub phase_phi: f64,
    #[serde(default)]
    pub injection: MixedInjection,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self::exact()
    }
}

impl MeasurementConfig {
    pub fn exact() -> Self {
        Self { mode: MeasurementMode::Exact, phase_phi: PHASE_REAL, injection: MixedInjection::Direct }
    }

    pub fn shots(count: u64, seed: u64) -> Self {
        Self { mode: MeasurementMode::Shots { count, seed }, ..Self::exact() }
    }

    pub fn with_phase(mut self, phase_phi: f64) -> Self {
        self.phase_phi = phase_phi;
        self
    }

    pub fn with_injection(mut self, injection: MixedInjection) -> Self {
        self.injection = injection;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let MeasurementMode::Shots { count: 0, .. } = self.mode {
            return Err(argument("shot count must be at least 1"));
        }
        if !self.phase_phi.is_finite() {
            return Err(argument("phase must be finite"));
        }
        Ok(())
    }

    /// Same settings with the shot seed mixed with `stream`, so separate
    /// sub-protocols draw independent samples.
    pub fn substream(&self, stream: u64) -> Self {
        let mode = match self.mode {
            MeasurementMode::Exact => MeasurementMode::Exact,
            MeasurementMode::Shots { count, seed } => MeasurementMode::Shots { count, seed: mix_seed(seed, stream) },
        };
        Self { mode, ..*self }
    }

    /// Turns an exact control-qubit `⟨Z⟩` into this configuration's estimate.
    fn finish(&self, z: f64) -> Result<f64> {
        match self.mode {
            MeasurementMode::Exact => Ok(z),
            MeasurementMode::Shots { count, seed } => sample_pm_one_mean(z, count, seed),
        }
    }
}

/// SplitMix64 finalizer over `seed ⊕ stream`.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Exact control `⟨Z⟩` of one Hadamard-test run. The control qubit is
/// prepended to `register`, prepared in `|+φ⟩ ∝ R_Z(φ) H |0⟩`, used to
/// control `op` on `block` (indices relative to `register`), and rotated back
/// with a Hadamard before the Z readout.
fn control_z(register: &Statevector, op: &dyn LinearOperator, block: Range<usize>, phase_phi: f64) -> Result<f64> {
    let mut joint = Statevector::zero(1)?.tensor(register)?;
    joint.apply_gate(Gate::H, 0)?;
    joint.apply_gate(Gate::Rz(phase_phi), 0)?;
    joint.apply_controlled(op, 0, block.start + 1..block.end + 1)?;
    joint.apply_gate(Gate::H, 0)?;
    joint.z_expectation(0)
}

/// `Re⟨ψ|U|ψ⟩` (φ = 0) or `Im⟨ψ|U|ψ⟩` (φ = −π/2) from the control-qubit protocol.
pub fn hadamard_test(system: &Statevector, op: &dyn LinearOperator, cfg: &MeasurementConfig) -> Result<f64> {
    cfg.validate()?;
    if !op.is_unitary(UNITARY_TOL) {
        return Err(validation("Hadamard test needs a unitary operator"));
    }
    let z = control_z(system, op, 0..system.n_qubits(), cfg.phase_phi)?;
    cfg.finish(z)
}

/// Block SWAP exchanging two adjacent `width`-qubit registers.
pub fn block_swap(width: usize) -> PermutationOp {
    let dim = 1usize << width;
    let image = (0..dim * dim)
        .map(|i| {
            let (a, b) = (i >> width, i & (dim - 1));
            (b << width) | a
        })
        .collect();
    PermutationOp::new(image).expect("block swap is a bijection")
}

fn check_same_size(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(argument(format!("registers differ in size: {a} vs {b} qubits")));
    }
    Ok(())
}

/// `|⟨a|b⟩|²` from a controlled block-SWAP test.
pub fn swap_overlap(a: &Statevector, b: &Statevector, cfg: &MeasurementConfig) -> Result<f64> {
    cfg.validate()?;
    check_same_size(a.n_qubits(), b.n_qubits())?;
    let n = a.n_qubits();
    let z = control_z(&a.tensor(b)?, &block_swap(n), 0..2 * n, PHASE_REAL)?;
    cfg.finish(z)
}

/// `⟨ψ|ρ|ψ⟩` for a diagonal mixed state `ρ`, by a block-SWAP test.
pub fn swap_mixed(pure: &Statevector, mixed: &DiagonalMixedState, cfg: &MeasurementConfig) -> Result<f64> {
    cfg.validate()?;
    check_same_size(pure.n_qubits(), mixed.n_qubits())?;
    let z = match cfg.injection {
        MixedInjection::Direct => swap_mixed_direct_z(pure, mixed)?,
        MixedInjection::Purified => swap_decohered_copy_z(pure, &mixed.purification())?,
    };
    cfg.finish(z)
}

/// Mixed input loaded directly: the control statistics are the ensemble
/// average over basis states `|g⟩` drawn with weight `ρ_g`.
fn swap_mixed_direct_z(pure: &Statevector, mixed: &DiagonalMixedState) -> Result<f64> {
    let n = pure.n_qubits();
    let swap = block_swap(n);
    let mut z = 0.0;
    for (g, &weight) in mixed.weights().iter().enumerate() {
        if weight > 0.0 {
            let register = pure.tensor(&Statevector::basis(n, g)?)?;
            z += weight * control_z(&register, &swap, 0..2 * n, PHASE_REAL)?;
        }
    }
    Ok(z)
}

/// `source` is loaded next to `pure`, decohered by CNOTs onto fresh ancillas,
/// and then SWAP-tested against `pure`. Register order: S, B, ancillas.
fn swap_decohered_copy_z(pure: &Statevector, source: &Statevector) -> Result<f64> {
    let n = pure.n_qubits();
    let mut register = pure.tensor(source)?.tensor(&Statevector::zero(n)?)?;
    for q in 0..n {
        register.apply_cnot(n + q, 2 * n + q)?;
    }
    control_z(&register, &block_swap(n), 0..2 * n, PHASE_REAL)
}

/// `⟨ψ|ρ_D(source)|ψ⟩` with `ρ_D(source) = Σ|s_g|²|g⟩⟨g|`, prepared by
/// decohering a copy of `source` inside the circuit.
pub fn swap_with_decohered_copy(pure: &Statevector, source: &Statevector, cfg: &MeasurementConfig) -> Result<f64> {
    cfg.validate()?;
    check_same_size(pure.n_qubits(), source.n_qubits())?;
    cfg.finish(swap_decohered_copy_z(pure, source)?)
}

/// Gates of the state-preparation cascade: one RY on the first qubit, then
/// for every further qubit a family of multi-controlled RYs, one per basis
/// pattern of the preceding qubits, with X conjugation for zero-valued controls.
#[derive(Clone, Debug, PartialEq)]
pub enum PrepGate {
    Ry { target: usize, angle: f64 },
    X { target: usize },
    ControlledRy { controls: Vec<usize>, target: usize, angle: f64 },
}

impl PrepGate {
    pub fn apply(&self, state: &mut Statevector) -> Result<()> {
        match self {
            PrepGate::Ry { target, angle } => state.apply_gate(Gate::Ry(*angle), *target),
            PrepGate::X { target } => state.apply_gate(Gate::X, *target),
            PrepGate::ControlledRy { controls, target, angle } => {
                state.apply_controlled_gate(controls, *target, Gate::Ry(*angle))
            }
        }
    }
}

/// Builds the RY cascade preparing a real normalized target from `|0…0⟩` and
/// the resulting state. Amplitude signs are reproduced exactly.
pub fn prepare_target_state(amplitudes: &[f64]) -> Result<(Vec<PrepGate>, Statevector)> {
    let len = amplitudes.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(argument(format!("target length {len} is not a power of two ≥ 2")));
    }
    let norm_sq: f64 = amplitudes.iter().map(|a| a * a).sum();
    if (norm_sq - 1.0).abs() > NORM_TOL {
        return Err(validation(format!("target has squared norm {norm_sq}, expected 1")));
    }
    let n = len.trailing_zeros() as usize;
    let mut gates = Vec::new();
    for level in 0..n {
        let remaining = n - level - 1;
        let block = 1usize << remaining;
        for prefix in (0..1usize << level).rev() {
            let angle = if remaining == 0 {
                let base = prefix << 1;
                2.0 * amplitudes[base + 1].atan2(amplitudes[base])
            } else {
                let base = prefix << (remaining + 1);
                let norm = |start: usize| amplitudes[start..start + block].iter().map(|a| a * a).sum::<f64>().sqrt();
                2.0 * norm(base + block).atan2(norm(base))
            };
            if level == 0 {
                gates.push(PrepGate::Ry { target: 0, angle });
                continue;
            }
            let zeros: Vec<usize> = (0..level).filter(|&q| (prefix >> (level - 1 - q)) & 1 == 0).collect();
            gates.extend(zeros.iter().map(|&q| PrepGate::X { target: q }));
            gates.push(PrepGate::ControlledRy { controls: (0..level).collect(), target: level, angle });
            gates.extend(zeros.iter().map(|&q| PrepGate::X { target: q }));
        }
    }
    let mut state = Statevector::zero(n)?;
    for gate in &gates {
        gate.apply(&mut state)?;
    }
    let worst = state
        .amplitudes()
        .iter()
        .zip(amplitudes)
        .map(|(a, t)| (a.re - t).abs().max(a.im.abs()))
        .fold(0.0, f64::max);
    if worst > NORM_TOL {
        return Err(QuvaError::Consistency(format!("prepared state deviates from target by {worst}")));
    }
    Ok((gates, state))
}

/// `⟨Â†⟩` parts and the derivative expectations built from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeExpectations {
    pub re_a_dagger: f64,
    pub im_a_dagger: f64,
    /// `(1 − Re⟨Â†⟩ − Im⟨Â†⟩)/δL`, taken as written. For states with
    /// `Im⟨Â†⟩ ≠ 0` this differs from `Re⟨(𝟙 − Â†)/δL⟩`, which has no
    /// imaginary-part term; the two agree for real-amplitude states.
    pub first: f64,
    /// `2(Re⟨Â†⟩ − 1)/δL²`.
    pub second: f64,
}

pub fn derivative_expectations(system: &Statevector, cfg: &MeasurementConfig) -> Result<DerivativeExpectations> {
    let shift = subtractor(system.n_qubits());
    let re = hadamard_test(system, &shift, &cfg.substream(1).with_phase(PHASE_REAL))?;
    let im = hadamard_test(system, &shift, &cfg.substream(2).with_phase(PHASE_IMAG))?;
    let dl = grid_spacing(system.n_qubits());
    Ok(DerivativeExpectations {
        re_a_dagger: re,
        im_a_dagger: im,
        first: (1.0 - re - im) / dl,
        second: 2.0 * (re - 1.0) / (dl * dl),
    })
}

/// Per-term protocol outcomes and the assembled total.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectationBreakdown {
    pub re_a_dagger: f64,
    pub im_a_dagger: f64,
    /// Overlap with the normalized potential state (`⟨ρ^χ⟩` for the harmonic well).
    pub pot_overlap: f64,
    /// `⟨V⟩`.
    pub potential: f64,
    /// `⟨ρ_D⟩ = Σ_g |C_g|⁴`.
    pub nl_overlap: f64,
    pub total: f64,
}

/// Scalar assembly for a real-amplitude system state:
/// `(2κ₂/δL² − κ₁/δL) Re⟨Â†⟩ + κ₀ + κ₁/δL − 2κ₂/δL² + ⟨V⟩ + κ_n⟨ρ_D⟩`.
pub fn assemble_total(problem: &DEProblem, re_a_dagger: f64, potential: f64, nl_overlap: f64) -> f64 {
    let dl = problem.delta_l();
    let (k2, k1, k0) = (problem.kappa2, problem.kappa1, problem.kappa0);
    (2.0 * k2 / (dl * dl) - k1 / dl) * re_a_dagger + k0 + k1 / dl - 2.0 * k2 / (dl * dl)
        + potential
        + problem.kappa_n * nl_overlap
}

fn check_consistent(problem: &DEProblem, potential: &PotentialSpec, spec: &AnsatzSpec) -> Result<()> {
    problem.validate()?;
    if spec.n_qubits != problem.n_qubits {
        return Err(argument(format!(
            "ansatz has {} qubits but the problem grid has {}",
            spec.n_qubits, problem.n_qubits
        )));
    }
    if potential.kind == PotentialKind::Harmonic && potential.v_max != problem.v_max {
        return Err(argument(format!(
            "potential v_max {} disagrees with problem v_max {}",
            potential.v_max, problem.v_max
        )));
    }
    Ok(())
}

/// Prepares the ansatz and runs the shift, potential and nonlinear protocols.
pub fn total_expectation(
    problem: &DEProblem,
    potential: &PotentialSpec,
    spec: &AnsatzSpec,
    params: &ParameterVector,
    cfg: &MeasurementConfig,
) -> Result<ExpectationBreakdown> {
    check_consistent(problem, potential, spec)?;
    cfg.validate()?;
    let psi = build_ansatz(spec, params)?;
    expectation_for_state(problem, potential, &psi, cfg)
}

/// [`total_expectation`] for an already prepared real-amplitude system state.
pub fn expectation_for_state(
    problem: &DEProblem,
    potential: &PotentialSpec,
    psi: &Statevector,
    cfg: &MeasurementConfig,
) -> Result<ExpectationBreakdown> {
    let n = problem.n_qubits;
    if psi.n_qubits() != n {
        return Err(argument(format!("state has {} qubits, problem has {n}", psi.n_qubits())));
    }
    let derivs = derivative_expectations(psi, cfg)?;

    let (pot_overlap, potential_value) = match &potential.kind {
        PotentialKind::Harmonic => {
            let rho = crate::pde::harmonic_mixed_state(n)?;
            let overlap = swap_mixed(psi, &rho, &cfg.substream(3))?;
            (overlap, potential.v_max * overlap)
        }
        PotentialKind::Custom(_) => {
            let mut value = 0.0;
            for (i, (scale, rho)) in potential.mixed_decomposition(n)?.iter().enumerate() {
                value += scale * swap_mixed(psi, rho, &cfg.substream(3 + i as u64))?;
            }
            let weight: f64 = potential.diag(n)?.iter().map(|v| v.abs()).sum();
            (if weight > 0.0 { value / weight } else { 0.0 }, value)
        }
    };

    let nl_cfg = cfg.substream(5);
    let nl_overlap = match cfg.injection {
        MixedInjection::Direct => swap_mixed(psi, &psi.decohere_to_diagonal(), &nl_cfg)?,
        MixedInjection::Purified => swap_with_decohered_copy(psi, psi, &nl_cfg)?,
    };

    Ok(ExpectationBreakdown {
        re_a_dagger: derivs.re_a_dagger,
        im_a_dagger: derivs.im_a_dagger,
        pot_overlap,
        potential: potential_value,
        nl_overlap,
        total: assemble_total(problem, derivs.re_a_dagger, potential_value, nl_overlap),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DenseOperator, C64};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn identity_hadamard_test() {
        let psi = Statevector::random(3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let id = DenseOperator::identity(8);
        assert!((hadamard_test(&psi, &id, &MeasurementConfig::exact()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_on_uniform_and_fourier_mode() {
        let shift = subtractor(3);
        let exact = MeasurementConfig::exact();
        let u = Statevector::uniform(3).unwrap();
        assert!((hadamard_test(&u, &shift, &exact).unwrap() - 1.0).abs() < 1e-12);

        let mode = Statevector::fourier_mode(3, 1).unwrap();
        let re = hadamard_test(&mode, &shift, &exact).unwrap();
        let im = hadamard_test(&mode, &shift, &exact.with_phase(PHASE_IMAG)).unwrap();
        assert!((re - (PI / 4.0).cos()).abs() < 1e-12);
        assert!((im + (PI / 4.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn hadamard_test_rejects_non_unitary() {
        let psi = Statevector::uniform(2).unwrap();
        let op = DenseOperator::diagonal(&[1.0, 2.0, 1.0, 1.0]);
        assert!(matches!(
            hadamard_test(&psi, &op, &MeasurementConfig::exact()),
            Err(QuvaError::Validation(_))
        ));
    }

    #[test]
    fn swap_overlap_examples() {
        let exact = MeasurementConfig::exact();
        let a = Statevector::random(2, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!((swap_overlap(&a, &a, &exact).unwrap() - 1.0).abs() < 1e-12);
        let b0 = Statevector::basis(2, 0).unwrap();
        let b3 = Statevector::basis(2, 3).unwrap();
        assert!(swap_overlap(&b0, &b3, &exact).unwrap().abs() < 1e-12);
        let zero = Statevector::zero(1).unwrap();
        let plus = Statevector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!((swap_overlap(&zero, &plus, &exact).unwrap() - 0.5).abs() < 1e-12);
        assert!(swap_overlap(&zero, &b0, &exact).is_err());
    }

    #[test]
    fn swap_mixed_examples() {
        let exact = MeasurementConfig::exact();
        let purified = exact.with_injection(MixedInjection::Purified);
        let psi = Statevector::random(3, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let mm = DiagonalMixedState::maximally_mixed(3).unwrap();
        for cfg in [exact, purified] {
            assert!((swap_mixed(&psi, &mm, &cfg).unwrap() - 0.125).abs() < 1e-12);
            let rho = crate::pde::harmonic_mixed_state(3).unwrap();
            let g5 = Statevector::basis(3, 5).unwrap();
            assert!((swap_mixed(&g5, &rho, &cfg).unwrap() - rho.weights()[5]).abs() < 1e-12);
            let u = Statevector::uniform(3).unwrap();
            assert!((swap_mixed(&u, &rho, &cfg).unwrap() - 0.125).abs() < 1e-12);
        }
        assert!(swap_mixed(&Statevector::uniform(2).unwrap(), &mm, &exact).is_err());
    }

    #[test]
    fn single_qubit_preparation() {
        let (a0, a1) = (0.6, -0.8);
        let (gates, state) = prepare_target_state(&[a0, a1]).unwrap();
        assert_eq!(gates, vec![PrepGate::Ry { target: 0, angle: 2.0 * f64::atan2(a1, a0) }]);
        assert!((state.amplitudes()[1] - C64::new(a1, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn potential_state_preparation() {
        let raw = [4.0, 3.0, 2.0, 1.0, 0.0, 1.0, 2.0, 3.0];
        let scale = 2.0 * 11f64.sqrt();
        let target: Vec<f64> = raw.iter().map(|v| v / scale).collect();
        let (gates, state) = prepare_target_state(&target).unwrap();
        assert!((state.amplitudes()[0].re - 0.603_022_689_155_527).abs() < 1e-12);
        assert!(state.amplitudes()[4].norm() < 1e-12);
        // one RY, two controlled RYs with one X pair, four doubly-controlled RYs with X gates
        let controlled = gates.iter().filter(|g| matches!(g, PrepGate::ControlledRy { .. })).count();
        assert_eq!(controlled, 6);
        assert!(prepare_target_state(&[0.5, 0.5]).is_err());
        assert!(prepare_target_state(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn derivative_expectations_examples() {
        let exact = MeasurementConfig::exact();
        let u = derivative_expectations(&Statevector::uniform(3).unwrap(), &exact).unwrap();
        assert!(u.first.abs() < 1e-12 && u.second.abs() < 1e-9);
        let m = derivative_expectations(&Statevector::fourier_mode(3, 1).unwrap(), &exact).unwrap();
        assert!((m.second - 128.0 * ((PI / 4.0).cos() - 1.0)).abs() < 1e-9);
        let psi = build_ansatz(&AnsatzSpec::six_param(2), &ParameterVector::new(vec![0.3, 1.1, 2.0, 4.0, 5.5, 0.2]).unwrap()).unwrap();
        let d = derivative_expectations(&psi, &exact).unwrap();
        assert!(d.im_a_dagger.abs() < 1e-12);
    }

    #[test]
    fn degenerate_first_order_coefficient() {
        // 8(16 − κ₁) vanishes at κ₁ = 16, leaving κ₀.
        let problem = DEProblem::linear(16.0, 3.5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let p = ParameterVector::random(6, &mut rng);
            let b = total_expectation(&problem, &PotentialSpec::none(), &AnsatzSpec::six_param(1), &p, &MeasurementConfig::exact()).unwrap();
            assert!((b.total - 3.5).abs() < 1e-9);
        }
    }

    #[test]
    fn three_qubit_specializations() {
        // Helmholtz: 128 Re⟨Â†⟩ + (κ₀ − 128); general: 8(16 − κ₁) Re + (κ₀ + 8κ₁ − 128)
        let re = 0.37;
        let helm = DEProblem::helmholtz(8.0, 3);
        assert!((assemble_total(&helm, re, 0.0, 0.0) - (128.0 * re + 8.0 - 128.0)).abs() < 1e-12);
        let general = DEProblem::linear(3.0, 25.0, 3);
        let expected = 8.0 * (16.0 - 3.0) * re + (25.0 + 24.0 - 128.0);
        assert!((assemble_total(&general, re, 0.0, 0.0) - expected).abs() < 1e-12);
        assert_eq!(assemble_total(&helm, 1.0, 0.0, 0.0), 8.0);
    }

    #[test]
    fn inconsistent_potential_rejected() {
        let problem = DEProblem::linear(3.0, 25.0, 3).with_potential(32.0);
        let p = ParameterVector::new(vec![0.0; 6]).unwrap();
        let err = total_expectation(&problem, &PotentialSpec::harmonic(10.0), &AnsatzSpec::six_param(1), &p, &MeasurementConfig::exact());
        assert!(err.is_err());
    }

    #[test]
    fn shot_substreams_differ() {
        let cfg = MeasurementConfig::shots(100, 7);
        assert_ne!(cfg.substream(1), cfg.substream(2));
        assert_eq!(MeasurementConfig::exact().substream(3), MeasurementConfig::exact());
    }
}
