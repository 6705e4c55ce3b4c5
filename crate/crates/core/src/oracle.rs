//! Classical ground truth: dense expectations, the quantum residual, periodic
//! solutions of the underlying ODE, and fidelities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, AnsatzSpec, ParameterVector};
use crate::error::{argument, validation, QuvaError, Result};
use crate::expectation::{total_expectation, MeasurementConfig};
use crate::operator::{DenseOperator, C64};
use crate::pde::{total_operator, DEProblem, PotentialKind, PotentialSpec};
use crate::state::{Statevector, NORM_TOL};

/// `⟨ψ|O|ψ⟩` by a plain matrix-vector product.
pub fn direct_expectation(system: &Statevector, op: &DenseOperator) -> Result<C64> {
    let image = op.apply(system.amplitudes())?;
    Ok(system.amplitudes().iter().zip(&image).map(|(a, b)| a.conj() * b).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `⟨δ|δ⟩` with `|δ⟩ = O|ψ⟩`.
    pub res_q: f64,
    /// `Re⟨ψ|O|ψ⟩`.
    pub total_expectation: f64,
    /// `Re⟨δ|ψ⟩`.
    pub delta_overlap_re: f64,
}

/// Residual `‖O|ψ⟩‖²`, checking `Re⟨ψ|O|ψ⟩ = Re⟨δ|ψ⟩` on every call.
pub fn quantum_residual(system: &Statevector, op: &DenseOperator) -> Result<ResidualReport> {
    let delta = op.apply(system.amplitudes())?;
    let psi = system.amplitudes();
    let res_q: f64 = delta.iter().map(|d| d.norm_sqr()).sum();
    let forward: C64 = psi.iter().zip(&delta).map(|(p, d)| p.conj() * d).sum();
    let backward: C64 = delta.iter().zip(psi).map(|(d, p)| d.conj() * p).sum();
    let gap = (forward.re - backward.re).abs();
    if gap > 1e-12 * forward.re.abs().max(1.0) {
        return Err(QuvaError::Consistency(format!(
            "Re⟨ψ|O|ψ⟩ = {} but Re⟨δ|ψ⟩ = {}",
            forward.re, backward.re
        )));
    }
    Ok(ResidualReport { res_q, total_expectation: forward.re, delta_overlap_re: backward.re })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(argument("spearman needs two equal-length samples of at least 2 points"));
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mean) * (b - mean);
        vx += (a - mean).powi(2);
        vy += (b - mean).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (vx * vy).sqrt())
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub kappa1: f64,
    pub kappa0: f64,
    pub lambda: Vec<f64>,
    pub total: f64,
    pub res_q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationDataset {
    pub depth: usize,
    pub points: Vec<CorrelationPoint>,
    /// Spearman correlation of `|⟨O⟩|` against `Res_Q`.
    pub spearman: f64,
    /// Points with `|⟨O⟩|² > Res_Q` beyond rounding.
    pub cauchy_schwarz_violations: usize,
}

/// Samples `κ₂ = 1`, `κ₀, κ₁ ~ U[−50, 50]` and random angles, pairing the
/// protocol expectation with the residual of the same state.
pub fn correlation_study(n_qubits: usize, spec: &AnsatzSpec, n_samples: usize, seed: u64) -> Result<CorrelationDataset> {
    if n_samples < 100 {
        return Err(argument(format!("correlation study needs at least 100 samples, got {n_samples}")));
    }
    if spec.n_qubits != n_qubits {
        return Err(argument("ansatz and grid qubit counts differ"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let potential = PotentialSpec::none();
    let cfg = MeasurementConfig::exact();
    let mut points = Vec::with_capacity(n_samples);
    let mut violations = 0;
    for _ in 0..n_samples {
        let kappa1 = rng.gen_range(-50.0..=50.0);
        let kappa0 = rng.gen_range(-50.0..=50.0);
        let params = ParameterVector::random(spec.parameter_count(), &mut rng);
        let problem = DEProblem::linear(kappa1, kappa0, n_qubits).with_depth(spec.depth);
        let total = total_expectation(&problem, &potential, spec, &params, &cfg)?.total;
        let psi = build_ansatz(spec, &params)?;
        let report = quantum_residual(&psi, &total_operator(&problem, &potential, None)?)?;
        if total * total > report.res_q * (1.0 + 1e-9) + 1e-9 {
            violations += 1;
        }
        points.push(CorrelationPoint { kappa1, kappa0, lambda: params.into(), total, res_q: report.res_q });
    }
    let abs_totals: Vec<f64> = points.iter().map(|p| p.total.abs()).collect();
    let residuals: Vec<f64> = points.iter().map(|p| p.res_q).collect();
    Ok(CorrelationDataset {
        depth: spec.depth,
        spearman: spearman(&abs_totals, &residuals)?,
        cauchy_schwarz_violations: violations,
        points,
    })
}

/// Samples of a classical solution at `x_g = g / 2^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSolution {
    pub f0: f64,
    /// `f′(0)` of this member of the solution family.
    pub fp0: f64,
    pub samples: Vec<f64>,
    pub normalized: bool,
    /// `f(1) − f(0)` of the underlying continuous solution.
    pub periodicity_residue: f64,
}

impl ClassicalSolution {
    pub fn normalize(mut self) -> Result<Self> {
        let norm = self.samples.iter().map(|s| s * s).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QuvaError::Numerical("cannot normalize a zero or non-finite solution".into()));
        }
        for s in &mut self.samples {
            *s /= norm;
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn to_statevector(&self) -> Result<Statevector> {
        if !self.normalized {
            return Err(validation("solution is not normalized"));
        }
        Statevector::from_real(&self.samples)
    }
}

/// `u` and `w` with `u(0) = 1, u′(0) = 0` and `w(0) = 0, w′(0) = 1` for
/// `f″ + κ₁f′ + κ₀f = 0`.
fn fundamental_pair(kappa1: f64, kappa0: f64) -> impl Fn(f64) -> (f64, f64) {
    let disc = kappa1 * kappa1 / 4.0 - kappa0;
    let alpha = -kappa1 / 2.0;
    move |x: f64| {
        if disc.abs() < 1e-12 {
            let e = (alpha * x).exp();
            ((1.0 - alpha * x) * e, x * e)
        } else if disc < 0.0 {
            let beta = (-disc).sqrt();
            let e = (alpha * x).exp();
            let (s, c) = (beta * x).sin_cos();
            (e * (c - alpha / beta * s), e * s / beta)
        } else {
            let root = disc.sqrt();
            let (r1, r2) = (alpha + root, alpha - root);
            let (e1, e2) = ((r1 * x).exp(), (r2 * x).exp());
            ((r2 * e1 - r1 * e2) / (r2 - r1), (e1 - e2) / (r1 - r2))
        }
    }
}

/// Closed-form solution of `f″ + κ₁f′ + κ₀f = 0` with `f(0) = f(1) = f0`,
/// sampled on `2^N` points and normalized. `f′(0)` is fixed by periodicity;
/// when every `f′(0)` is periodic the `f′(0) = 0` member is returned.
pub fn analytic_2o_solution(kappa1: f64, kappa0: f64, f0: f64, n_qubits: usize) -> Result<ClassicalSolution> {
    if ![kappa1, kappa0, f0].iter().all(|v| v.is_finite()) {
        return Err(argument("coefficients and f0 must be finite"));
    }
    if n_qubits == 0 || n_qubits > crate::state::MAX_QUBITS {
        return Err(QuvaError::Size { n_qubits, max: crate::state::MAX_QUBITS });
    }
    if f0 == 0.0 {
        return Err(QuvaError::Infeasible("f0 = 0 only admits the zero solution".into()));
    }
    let pair = fundamental_pair(kappa1, kappa0);
    let (u1, w1) = pair(1.0);
    let scale = u1.abs().max(w1.abs()).max(1.0);
    let fp0 = if w1.abs() <= 1e-12 * scale {
        if (u1 - 1.0).abs() > 1e-9 * scale {
            return Err(QuvaError::Infeasible(format!(
                "no periodic solution for kappa1={kappa1}, kappa0={kappa0}: f(1) = {u1}·f0 for every f'(0)"
            )));
        }
        0.0
    } else {
        f0 * (1.0 - u1) / w1
    };
    let dim = 1usize << n_qubits;
    let samples = (0..dim)
        .map(|g| {
            let (u, w) = pair(g as f64 / dim as f64);
            f0 * u + fp0 * w
        })
        .collect();
    let residue = f0 * u1 + fp0 * w1 - f0;
    ClassicalSolution { f0, fp0, samples, normalized: false, periodicity_residue: residue }.normalize()
}

/// Continuous stand-in for the sampled harmonic potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PotentialScaling {
    /// `V(x) = V_max(1 − 2x)² / Σ_g(1 − 2x_g)²`, agreeing with the grid values
    /// at every sample point (the `4/11` factor on three qubits).
    #[default]
    GridConsistent,
    /// `V(x) = V_max(1 − 2x)²`.
    Unscaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeSettings {
    /// RK4 steps on `[0, 1]`; rounded up to a multiple of the grid size.
    pub steps: usize,
    pub scaling: PotentialScaling,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self { steps: 4096, scaling: PotentialScaling::GridConsistent }
    }
}

const DIVERGENCE_LIMIT: f64 = 1e6;

fn continuous_potential(problem: &DEProblem, potential: &PotentialSpec, scaling: PotentialScaling) -> Result<Box<dyn Fn(f64) -> f64>> {
    let n = problem.n_qubits;
    let dim = 1usize << n;
    match &potential.kind {
        PotentialKind::Harmonic => {
            let v_max = potential.v_max;
            let factor = match scaling {
                PotentialScaling::Unscaled => 1.0,
                PotentialScaling::GridConsistent => {
                    let trace: f64 = (0..dim).map(|g| (1.0 - 2.0 * g as f64 / dim as f64).powi(2)).sum();
                    1.0 / trace
                }
            };
            Ok(Box::new(move |x| v_max * factor * (1.0 - 2.0 * x).powi(2)))
        }
        PotentialKind::Custom(_) => {
            let values = potential.diag(n)?;
            Ok(Box::new(move |x| values[((x * dim as f64).floor() as usize).min(dim - 1)]))
        }
    }
}

/// Integrates `κ₂f″ + κ₁f′ + (κ₀ + V(x) + κ_n f²) f = 0` from `(f0, fp0)` with
/// fixed-step RK4 and samples `f` on the grid (unnormalized).
pub fn classical_ode_solve(problem: &DEProblem, potential: &PotentialSpec, f0: f64, fp0: f64) -> Result<ClassicalSolution> {
    classical_ode_solve_with(problem, potential, f0, fp0, &OdeSettings::default())
}

pub fn classical_ode_solve_with(
    problem: &DEProblem,
    potential: &PotentialSpec,
    f0: f64,
    fp0: f64,
    settings: &OdeSettings,
) -> Result<ClassicalSolution> {
    problem.validate()?;
    if problem.kappa2 == 0.0 {
        return Err(argument("kappa2 must be nonzero for a second-order equation"));
    }
    if !f0.is_finite() || !fp0.is_finite() {
        return Err(argument("initial values must be finite"));
    }
    let dim = 1usize << problem.n_qubits;
    let steps = settings.steps.max(dim).div_ceil(dim) * dim;
    let per_sample = steps / dim;
    let h = 1.0 / steps as f64;
    let v = continuous_potential(problem, potential, settings.scaling)?;
    let (k2, k1, k0, kn) = (problem.kappa2, problem.kappa1, problem.kappa0, problem.kappa_n);
    let rhs = |x: f64, f: f64, fp: f64| -> (f64, f64) { (fp, -(k1 * fp + (k0 + v(x) + kn * f * f) * f) / k2) };

    let (mut f, mut fp) = (f0, fp0);
    let mut samples = Vec::with_capacity(dim);
    for step in 0..steps {
        if step % per_sample == 0 {
            samples.push(f);
        }
        let x = step as f64 * h;
        let (a1, b1) = rhs(x, f, fp);
        let (a2, b2) = rhs(x + h / 2.0, f + h / 2.0 * a1, fp + h / 2.0 * b1);
        let (a3, b3) = rhs(x + h / 2.0, f + h / 2.0 * a2, fp + h / 2.0 * b2);
        let (a4, b4) = rhs(x + h, f + h * a3, fp + h * b3);
        f += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        fp += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if !f.is_finite() || f.abs() > DIVERGENCE_LIMIT {
            return Err(QuvaError::Unstable(format!(
                "|f| exceeded {DIVERGENCE_LIMIT} at x = {:.6} (f0 = {f0}, f'(0) = {fp0})",
                x + h
            )));
        }
    }
    Ok(ClassicalSolution { f0, fp0, samples, normalized: false, periodicity_residue: f - f0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingSettings {
    pub fp_min: f64,
    pub fp_max: f64,
    /// Bracket-scan points over `[fp_min, fp_max]`.
    pub scan_points: usize,
    pub tolerance: f64,
    pub ode: OdeSettings,
}

impl Default for ShootingSettings {
    fn default() -> Self {
        Self { fp_min: -60.0, fp_max: 60.0, scan_points: 481, tolerance: 1e-10, ode: OdeSettings::default() }
    }
}

/// Outcome of the periodicity shooting on `f′(0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingReport {
    /// Every periodic member found, ordered by `f′(0)`, unnormalized.
    pub roots: Vec<ClassicalSolution>,
    /// Scan point with the smallest `|f(1) − f(0)|`; only set when `roots` is empty.
    pub closest: Option<ClassicalSolution>,
}

/// Finds all `f′(0)` in the scan window with `f(1) = f(0) = f0` by a sign-change
/// scan followed by bisection.
pub fn periodic_solutions(
    problem: &DEProblem,
    potential: &PotentialSpec,
    f0: f64,
    settings: &ShootingSettings,
) -> Result<ShootingReport> {
    if settings.scan_points < 2 || !(settings.fp_min < settings.fp_max) || !(settings.tolerance > 0.0) {
        return Err(argument("shooting needs fp_min < fp_max, at least 2 scan points and a positive tolerance"));
    }
    let solve = |fp: f64| match classical_ode_solve_with(problem, potential, f0, fp, &settings.ode) {
        Ok(s) => Ok(Some(s)),
        Err(QuvaError::Unstable(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let step = (settings.fp_max - settings.fp_min) / (settings.scan_points - 1) as f64;
    let mut scan = Vec::with_capacity(settings.scan_points);
    for i in 0..settings.scan_points {
        let fp = settings.fp_min + step * i as f64;
        scan.push((fp, solve(fp)?));
    }

    let mut roots = Vec::new();
    for pair in scan.windows(2) {
        let (Some(lo_sol), Some(hi_sol)) = (&pair[0].1, &pair[1].1) else { continue };
        let (mut lo, mut hi) = (pair[0].0, pair[1].0);
        let (mut r_lo, r_hi) = (lo_sol.periodicity_residue, hi_sol.periodicity_residue);
        if r_lo == 0.0 {
            roots.push(lo_sol.clone());
            continue;
        }
        if r_lo * r_hi > 0.0 {
            continue;
        }
        let mut stable = true;
        while hi - lo > settings.tolerance {
            let mid = 0.5 * (lo + hi);
            match solve(mid)? {
                Some(s) if s.periodicity_residue * r_lo > 0.0 => {
                    lo = mid;
                    r_lo = s.periodicity_residue;
                }
                Some(_) => hi = mid,
                None => {
                    stable = false;
                    break;
                }
            }
        }
        if stable {
            if let Some(root) = solve(0.5 * (lo + hi))? {
                roots.push(root);
            }
        }
    }

    let closest = if roots.is_empty() {
        scan.into_iter()
            .filter_map(|(_, s)| s)
            .min_by(|a, b| a.periodicity_residue.abs().total_cmp(&b.periodicity_residue.abs()))
    } else {
        None
    };
    Ok(ShootingReport { roots, closest })
}

/// Normalized reference solutions for a problem: the closed form when the
/// equation is linear and potential-free, otherwise every periodic shooting
/// root (or the closest approach when there is none).
pub fn oracle_solutions(problem: &DEProblem, potential: &PotentialSpec, f0: f64) -> Result<Vec<ClassicalSolution>> {
    oracle_solutions_with(problem, potential, f0, &ShootingSettings::default())
}

pub fn oracle_solutions_with(
    problem: &DEProblem,
    potential: &PotentialSpec,
    f0: f64,
    settings: &ShootingSettings,
) -> Result<Vec<ClassicalSolution>> {
    let linear_free = problem.kappa_n == 0.0 && potential.is_zero(problem.n_qubits)?;
    if linear_free && problem.kappa2 != 0.0 {
        let (k1, k0) = (problem.kappa1 / problem.kappa2, problem.kappa0 / problem.kappa2);
        return Ok(vec![analytic_2o_solution(k1, k0, f0, problem.n_qubits)?]);
    }
    let report = periodic_solutions(problem, potential, f0, settings)?;
    let members = if report.roots.is_empty() { report.closest.into_iter().collect() } else { report.roots };
    if members.is_empty() {
        return Err(QuvaError::Unstable("every shooting trajectory diverged".into()));
    }
    members.into_iter().map(ClassicalSolution::normalize).collect()
}

/// `|⟨a|b⟩|²` against a normalized reference.
pub fn fidelity(a: &Statevector, b: &ClassicalSolution) -> Result<f64> {
    if !b.normalized {
        return Err(validation("reference solution is not normalized"));
    }
    fidelity_states(a, &b.to_statevector()?)
}

pub fn fidelity_states(a: &Statevector, b: &Statevector) -> Result<f64> {
    if (b.norm_sqr() - 1.0).abs() > NORM_TOL {
        return Err(validation("reference state is not normalized"));
    }
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Best fidelity against a set of references, with the index achieving it.
pub fn best_fidelity(a: &Statevector, references: &[ClassicalSolution]) -> Result<Option<(usize, f64)>> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in references.iter().enumerate() {
        let f = fidelity(a, r)?;
        if best.is_none_or(|(_, b)| f > b) {
            best = Some((i, f));
        }
    }
    Ok(best)
}

#[cfg(test)]
pub(crate) fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseOperator {
    let raw = DenseOperator::from_fn(dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&raw + &raw.adjoint()).scale(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::second_derivative_op;
    use std::f64::consts::PI;

    #[test]
    fn direct_expectation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = Statevector::random(3, &mut rng).unwrap();
        let one = direct_expectation(&psi, &DenseOperator::identity(8)).unwrap();
        assert!((one - C64::new(1.0, 0.0)).norm() < 1e-12);
        let u = Statevector::uniform(3).unwrap();
        assert!(direct_expectation(&u, &second_derivative_op(3)).unwrap().norm() < 1e-9);
        let h = random_hermitian(8, &mut rng);
        assert!(direct_expectation(&psi, &h).unwrap().im.abs() < 1e-12);
        assert!(direct_expectation(&psi, &DenseOperator::identity(4)).is_err());
    }

    #[test]
    fn residual_examples() {
        let u = Statevector::uniform(3).unwrap();
        let report = quantum_residual(&u, &second_derivative_op(3)).unwrap();
        assert!(report.res_q < 1e-18);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = ParameterVector::random(6, &mut rng);
        let psi = build_ansatz(&AnsatzSpec::six_param(2), &params).unwrap();
        let op = total_operator(&DEProblem::linear(3.0, 25.0, 3), &PotentialSpec::none(), None).unwrap();
        let report = quantum_residual(&psi, &op).unwrap();
        // independent norm: explicit row-by-row sum
        let mut norm = 0.0;
        for r in 0..8 {
            let row: C64 = (0..8).map(|c| op.get(r, c) * psi.amplitudes()[c]).sum();
            norm += row.norm_sqr();
        }
        assert!((report.res_q - norm).abs() < 1e-12 * norm.max(1.0));
        assert!((report.total_expectation - report.delta_overlap_re).abs() < 1e-12);
    }

    #[test]
    fn spearman_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&xs, &[10.0, 20.0, 30.0, 40.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn correlation_contract() {
        for depth in [0, 3] {
            let data = correlation_study(3, &AnsatzSpec::six_param(depth), 100, 9).unwrap();
            assert_eq!(data.points.len(), 100);
            assert_eq!(data.cauchy_schwarz_violations, 0);
            for p in data.points.iter().filter(|p| p.res_q < 0.1) {
                assert!(p.total.abs() < 1.0);
            }
        }
        assert!(correlation_study(3, &AnsatzSpec::six_param(0), 99, 1).is_err());
    }

    #[test]
    fn helmholtz_eigenmode_is_cosine() {
        let k0 = (2.0 * PI).powi(2);
        let sol = analytic_2o_solution(0.0, k0, 0.7, 3).unwrap();
        let raw: Vec<f64> = (0..8).map(|g| (2.0 * PI * g as f64 / 8.0).cos()).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (s, r) in sol.samples.iter().zip(&raw) {
            assert!((s - r / norm).abs() < 1e-9);
        }
        assert_eq!(sol.fp0, 0.0);
    }

    #[test]
    fn first_order_example_is_periodic() {
        let sol = analytic_2o_solution(-1.0, 8.0, -1.0, 3).unwrap();
        assert!(sol.periodicity_residue.abs() < 1e-12);
        assert!((sol.fp0 + 12.7702).abs() < 1e-3);
        assert!((sol.samples.iter().map(|s| s * s).sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(sol.samples.iter().all(|s| *s < 0.0));
    }

    #[test]
    fn infeasible_periodicity() {
        // κ₀ = (2π)², κ₁ = 0 with u(1) = 1 is fine; damping breaks it: u(1) ≠ 1 while w(1) = 0
        let beta = 2.0 * PI;
        let kappa1 = 0.5;
        let kappa0 = beta * beta + kappa1 * kappa1 / 4.0;
        assert!(matches!(analytic_2o_solution(kappa1, kappa0, 1.0, 3), Err(QuvaError::Infeasible(_))));
        assert!(matches!(analytic_2o_solution(1.0, 2.0, 0.0, 3), Err(QuvaError::Infeasible(_))));
    }

    #[test]
    fn stencil_residual_is_second_order() {
        // Helmholtz eigenmode: 3-point stencil error is κ₀·O(δL²)
        let k0 = (2.0 * PI).powi(2);
        let mut errors = Vec::new();
        for n in [5, 6, 7] {
            let sol = analytic_2o_solution(0.0, k0, 1.0, n).unwrap();
            let op = total_operator(&DEProblem::helmholtz(k0, n), &PotentialSpec::none(), None).unwrap();
            let amps: Vec<C64> = sol.samples.iter().map(|s| C64::new(*s, 0.0)).collect();
            let r = op.apply(&amps).unwrap();
            errors.push(r.iter().map(|c| c.norm()).fold(0.0, f64::max) / sol.samples.iter().fold(0.0f64, |m, s| m.max(s.abs())));
        }
        for w in errors.windows(2) {
            assert!((w[0] / w[1] - 4.0).abs() < 0.1, "{errors:?}");
        }
    }

    #[test]
    fn rk4_matches_closed_form() {
        let problem = DEProblem::linear(-1.0, 8.0, 3);
        let analytic = analytic_2o_solution(-1.0, 8.0, -1.0, 3).unwrap();
        let raw = classical_ode_solve(&problem, &PotentialSpec::none(), -1.0, analytic.fp0).unwrap();
        let numeric = raw.normalize().unwrap();
        for (a, b) in analytic.samples.iter().zip(&numeric.samples) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn rk4_fourth_order() {
        let problem = DEProblem::linear(3.0, 25.0, 3).with_potential(32.0);
        let pot = PotentialSpec::harmonic(32.0);
        let run = |steps| {
            classical_ode_solve_with(&problem, &pot, -0.19, 5.0, &OdeSettings { steps, ..OdeSettings::default() })
                .unwrap()
                .samples
        };
        let (a, b, c) = (run(64), run(128), run(256));
        let d1 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let d2 = b.iter().zip(&c).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let ratio = d1 / d2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn potential_case_single_periodic_root() {
        let problem = DEProblem::linear(3.0, 25.0, 3).with_potential(32.0);
        let report = periodic_solutions(&problem, &PotentialSpec::harmonic(32.0), -0.19, &ShootingSettings::default()).unwrap();
        assert_eq!(report.roots.len(), 1);
        let root = report.roots[0].clone();
        assert!(root.periodicity_residue.abs() < 1e-8);
        assert!((root.fp0 - 5.170).abs() < 1e-2);
        let sol = root.normalize().unwrap();
        let expected = [-0.194, 0.353, 0.594, 0.551, 0.342, 0.09, -0.112, -0.21];
        for (s, e) in sol.samples.iter().zip(expected) {
            assert!((s - e).abs() < 2e-3);
        }
    }

    #[test]
    fn divergence_reported() {
        let problem = DEProblem::linear(0.0, 1.0, 3).with_nonlinearity(-1e4);
        let err = classical_ode_solve(&problem, &PotentialSpec::none(), 5.0, 0.0);
        assert!(matches!(err, Err(QuvaError::Unstable(_))));
    }

    #[test]
    fn fidelity_examples() {
        let sol = analytic_2o_solution(-1.0, 8.0, -1.0, 3).unwrap();
        let s = sol.to_statevector().unwrap();
        assert!((fidelity(&s, &sol).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = sol.samples.iter().map(|v| -v).collect();
        assert!((fidelity(&Statevector::from_real(&neg).unwrap(), &sol).unwrap() - 1.0).abs() < 1e-12);
        let a = Statevector::basis(3, 0).unwrap();
        let b = Statevector::basis(3, 1).unwrap();
        assert!(fidelity_states(&a, &b).unwrap() < 1e-15);
        let raw = ClassicalSolution { normalized: false, ..sol };
        assert!(fidelity(&s, &raw).is_err());
    }
}
