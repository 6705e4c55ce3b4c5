//! Real-amplitude variational ansatz built from RY layers and a CNOT ring.
//!
//! `|ψ_d(λ)⟩ = [U_unit(λ)]^d · U_p(λ₁, λ₂, λ₃) |000⟩`, with the unit block
//! either the three-angle form `U_p(λ₁..₃) · R` or the six-angle form
//! `R · U_p(λ₁..₃) · R · U_p(λ₄..₆)`, where `R = CX₁₃ CX₃₂ CX₂₁` and `CX_kl`
//! has control `k` and target `l` (one-based). The same angles are reused in
//! every repetition of the unit block.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::state::{Gate, Statevector};

/// Built-in unit-block layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzLayout {
    ThreeParam,
    SixParam,
}

impl AnsatzLayout {
    pub fn parameter_count(self) -> usize {
        match self {
            AnsatzLayout::ThreeParam => 3,
            AnsatzLayout::SixParam => 6,
        }
    }
}

impl FromStr for AnsatzLayout {
    type Err = crate::error::QuvaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "threeparam" | "three" | "3" => Ok(AnsatzLayout::ThreeParam),
            "sixparam" | "six" | "6" => Ok(AnsatzLayout::SixParam),
            other => Err(argument(format!("unknown ansatz layout '{other}'"))),
        }
    }
}

impl fmt::Display for AnsatzLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnsatzLayout::ThreeParam => f.write_str("three_param"),
            AnsatzLayout::SixParam => f.write_str("six_param"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub depth: usize,
    pub layout: AnsatzLayout,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, depth: usize, layout: AnsatzLayout) -> Result<Self> {
        if n_qubits != 3 {
            return Err(argument(format!(
                "built-in ansatz layouts are defined for 3 qubits, got {n_qubits}"
            )));
        }
        Ok(Self { n_qubits, depth, layout })
    }

    pub fn six_param(depth: usize) -> Self {
        Self { n_qubits: 3, depth, layout: AnsatzLayout::SixParam }
    }

    pub fn three_param(depth: usize) -> Self {
        Self { n_qubits: 3, depth, layout: AnsatzLayout::ThreeParam }
    }

    pub fn parameter_count(&self) -> usize {
        self.layout.parameter_count()
    }
}

/// Variational angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(argument("variational angles must be finite"));
        }
        Ok(Self(values))
    }

    /// Uniform draw from `[0, 2π)^len`.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.gen_range(0.0..TAU)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Each angle reduced into `[0, 2π)`.
    pub fn wrapped(&self) -> Self {
        Self(self.0.iter().map(|v| v.rem_euclid(TAU)).collect())
    }
}

impl From<ParameterVector> for Vec<f64> {
    fn from(p: ParameterVector) -> Self {
        p.0
    }
}

pub fn parameter_count(spec: &AnsatzSpec) -> usize {
    spec.parameter_count()
}

fn ry_layer(state: &mut Statevector, angles: &[f64]) -> Result<()> {
    for (q, &angle) in angles.iter().enumerate() {
        state.apply_gate(Gate::Ry(angle), q)?;
    }
    Ok(())
}

/// `CX₁₃ CX₃₂ CX₂₁` as an operator product, so `CX₂₁` acts first.
fn cnot_ring(state: &mut Statevector) -> Result<()> {
    state.apply_cnot(1, 0)?;
    state.apply_cnot(2, 1)?;
    state.apply_cnot(0, 2)
}

fn apply_unit(state: &mut Statevector, layout: AnsatzLayout, angles: &[f64]) -> Result<()> {
    match layout {
        AnsatzLayout::ThreeParam => {
            cnot_ring(state)?;
            ry_layer(state, &angles[0..3])
        }
        AnsatzLayout::SixParam => {
            ry_layer(state, &angles[3..6])?;
            cnot_ring(state)?;
            ry_layer(state, &angles[0..3])?;
            cnot_ring(state)
        }
    }
}

/// Prepares `|ψ_d(λ)⟩` from `|000⟩`.
pub fn build_ansatz(spec: &AnsatzSpec, params: &ParameterVector) -> Result<Statevector> {
    if spec.n_qubits != 3 {
        return Err(argument(format!(
            "built-in ansatz layouts are defined for 3 qubits, got {}",
            spec.n_qubits
        )));
    }
    let expected = spec.parameter_count();
    if params.len() != expected {
        return Err(argument(format!(
            "{} layout takes {expected} angles, got {}",
            spec.layout,
            params.len()
        )));
    }
    let angles = params.values();
    let mut state = Statevector::zero(spec.n_qubits)?;
    ry_layer(&mut state, &angles[0..3])?;
    for _ in 0..spec.depth {
        apply_unit(&mut state, spec.layout, angles)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DenseOperator, C64};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    // Independent oracle: each gate as an explicit 8×8 matrix, multiplied out.
    fn kron3(a: &DenseOperator, b: &DenseOperator, c: &DenseOperator) -> DenseOperator {
        a.kron(b).kron(c)
    }

    fn ry_matrix(l: f64) -> DenseOperator {
        let (s, c) = (l / 2.0).sin_cos();
        DenseOperator::from_real_fn(2, |r, col| match (r, col) {
            (0, 0) | (1, 1) => c,
            (0, 1) => -s,
            _ => s,
        })
    }

    fn cx_matrix(control: usize, target: usize) -> DenseOperator {
        DenseOperator::from_real_fn(8, |r, c| {
            let mut bits = [(c >> 2) & 1, (c >> 1) & 1, c & 1];
            if bits[control] == 1 {
                bits[target] ^= 1;
            }
            let image = bits[0] * 4 + bits[1] * 2 + bits[2];
            if image == r { 1.0 } else { 0.0 }
        })
    }

    fn up_matrix(a: f64, b: f64, c: f64) -> DenseOperator {
        kron3(&ry_matrix(a), &ry_matrix(b), &ry_matrix(c))
    }

    fn oracle_six(l: &[f64], depth: usize) -> Vec<C64> {
        let ring = &(&cx_matrix(0, 2) * &cx_matrix(2, 1)) * &cx_matrix(1, 0);
        let unit = &(&(&ring * &up_matrix(l[0], l[1], l[2])) * &ring) * &up_matrix(l[3], l[4], l[5]);
        let mut total = up_matrix(l[0], l[1], l[2]);
        for _ in 0..depth {
            total = &unit * &total;
        }
        (0..8).map(|r| total.get(r, 0)).collect()
    }

    #[test]
    fn depth_zero_all_zero_angles() {
        let psi = build_ansatz(&AnsatzSpec::six_param(0), &ParameterVector::new(vec![0.0; 6]).unwrap()).unwrap();
        assert_eq!(psi, Statevector::zero(3).unwrap());
    }

    #[test]
    fn three_param_pi_gives_all_ones() {
        let psi = build_ansatz(&AnsatzSpec::three_param(0), &ParameterVector::new(vec![PI; 3]).unwrap()).unwrap();
        let amps = psi.amplitudes();
        assert!((amps[7].norm() - 1.0).abs() < 1e-12);
        assert!(amps[..7].iter().all(|a| a.norm() < 1e-12));
    }

    #[test]
    fn six_param_depth_two_matches_matrix_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = ParameterVector::random(6, &mut rng);
            let psi = build_ansatz(&AnsatzSpec::six_param(2), &p).unwrap();
            let expected = oracle_six(p.values(), 2);
            for (a, b) in psi.amplitudes().iter().zip(&expected) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(parameter_count(&AnsatzSpec::six_param(1)), 6);
        assert_eq!(parameter_count(&AnsatzSpec::three_param(1)), 3);
        assert!("seven_param".parse::<AnsatzLayout>().is_err());
        assert_eq!("six_param".parse::<AnsatzLayout>().unwrap(), AnsatzLayout::SixParam);
    }

    #[test]
    fn rejects_wrong_length_and_register() {
        let p = ParameterVector::new(vec![0.1; 5]).unwrap();
        assert!(build_ansatz(&AnsatzSpec::six_param(1), &p).is_err());
        assert!(AnsatzSpec::new(4, 1, AnsatzLayout::SixParam).is_err());
        assert!(ParameterVector::new(vec![f64::NAN]).is_err());
    }
}
