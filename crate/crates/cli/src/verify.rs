//! Seeded self-check suite behind `quva verify`.

use std::f64::consts::PI;

use quva_core::ansatz::{build_ansatz, AnsatzSpec, ParameterVector};
use quva_core::expectation::{prepare_target_state, swap_mixed, total_expectation, MeasurementConfig, MixedInjection};
use quva_core::gpr::{acquisition, fit, posterior, zero_set_search, HyperparameterMode, Kernel, SearchConfig};
use quva_core::operator::{LinearOperator, C64};
use quva_core::oracle::{direct_expectation, quantum_residual};
use quva_core::pde::{
    circulant_second_derivative_eigenvalues, grid_spacing, harmonic_mixed_state, second_derivative_spectrum, subtractor_with,
    total_operator, DEProblem, PotentialSpec, ShiftConvention,
};
use quva_core::state::{DiagonalMixedState, Statevector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    pub shift_convention: ShiftConvention,
}

type Check = fn(&VerifyOptions) -> Result<String, String>;

pub const CHECKS: [(&str, Check); 10] = [
    ("grid_translation", grid_translation),
    ("circulant_spectrum", circulant_spectrum),
    ("protocol_oracle_equivalence", protocol_oracle_equivalence),
    ("potential_state_preparation", potential_state_preparation),
    ("mixed_swap_direct_sum", mixed_swap_direct_sum),
    ("residual_identity", residual_identity),
    ("degenerate_first_derivative", degenerate_first_derivative),
    ("shots_statistics", shots_statistics),
    ("gpr_interpolation", gpr_interpolation),
    ("gpr_zero_set_search", gpr_zero_set_search),
];

pub fn run_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|(name, check)| match check(opts) {
            Ok(detail) => CheckOutcome { name, passed: true, detail },
            Err(detail) => CheckOutcome { name, passed: false, detail },
        })
        .collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Samples of a random real trigonometric polynomial and its translate by `shift`.
pub fn trig_samples<R: Rng>(rng: &mut R, n_qubits: usize) -> (Vec<f64>, Vec<f64>) {
    let dim = 1usize << n_qubits;
    let terms: Vec<(f64, f64, f64)> =
        (0..4).map(|k| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), k as f64)).collect();
    let f = |x: f64| terms.iter().map(|&(a, b, k)| a * (2.0 * PI * k * x).cos() + b * (2.0 * PI * k * x).sin()).sum::<f64>();
    let dl = grid_spacing(n_qubits);
    let samples = (0..dim).map(|g| f(g as f64 * dl)).collect();
    let shifted = (0..dim).map(|g| f(g as f64 * dl - dl)).collect();
    (samples, shifted)
}

/// `Â†` acting on samples of `f(x)` gives samples of `f(x − δL)`.
pub fn grid_translation(opts: &VerifyOptions) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for n in 3..=5 {
        let shift = subtractor_with(n, opts.shift_convention);
        for _ in 0..20 {
            let (samples, expected) = trig_samples(&mut rng, n);
            let input: Vec<C64> = samples.iter().map(|&v| C64::new(v, 0.0)).collect();
            let mut out = vec![C64::new(0.0, 0.0); input.len()];
            shift.apply_to(&input, &mut out);
            for (o, e) in out.iter().zip(&expected) {
                worst = worst.max((o.re - e).abs() + o.im.abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("translation mismatch {worst:.3e}"))?;
    Ok(format!("60 polynomials, max error {worst:.1e}"))
}

pub fn circulant_spectrum(_: &VerifyOptions) -> Result<String, String> {
    let mut worst = 0.0f64;
    for n in 1..=5 {
        for (a, b) in second_derivative_spectrum(n).iter().zip(circulant_second_derivative_eigenvalues(n)) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("eigenvalue mismatch {worst:.3e}"))?;
    Ok(format!("N = 1..5, max error {worst:.1e}"))
}

/// Random problem from one of the three equation families.
pub fn random_family_problem<R: Rng>(rng: &mut R, family: usize, depth: usize) -> (DEProblem, PotentialSpec) {
    let k0 = rng.gen_range(-50.0..50.0);
    match family {
        0 => (DEProblem::helmholtz(k0, 3).with_depth(depth), PotentialSpec::none()),
        1 => (DEProblem::linear(rng.gen_range(-50.0..50.0), k0, 3).with_depth(depth), PotentialSpec::none()),
        _ => {
            let v_max = rng.gen_range(0.0..50.0);
            let problem = DEProblem::linear(rng.gen_range(-50.0..50.0), k0, 3)
                .with_potential(v_max)
                .with_nonlinearity(rng.gen_range(-500.0..500.0))
                .with_depth(depth);
            (problem, PotentialSpec::harmonic(v_max))
        }
    }
}

pub fn protocol_oracle_equivalence(_: &VerifyOptions) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for family in 0..3 {
        for _ in 0..200 {
            let depth = rng.gen_range(0..=3);
            let (problem, potential) = random_family_problem(&mut rng, family, depth);
            let spec = AnsatzSpec::six_param(depth);
            let params = ParameterVector::random(6, &mut rng);
            let engine = total_expectation(&problem, &potential, &spec, &params, &MeasurementConfig::exact()).map_err(err)?.total;
            let psi = build_ansatz(&spec, &params).map_err(err)?;
            let op = total_operator(&problem, &potential, Some(&psi)).map_err(err)?;
            let direct = direct_expectation(&psi, &op).map_err(err)?.re;
            worst = worst.max((engine - direct).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("protocol vs direct mismatch {worst:.3e}"))?;
    Ok(format!("600 samples over 3 families, max error {worst:.1e}"))
}

/// Preparing the square-root amplitudes of the harmonic potential state and
/// decohering them reproduces `V / V_max`.
pub fn potential_state_preparation(_: &VerifyOptions) -> Result<String, String> {
    let chi = harmonic_mixed_state(3).map_err(err)?;
    let amps: Vec<f64> = chi.weights().iter().map(|w| w.sqrt()).collect();
    let (_, prepared) = prepare_target_state(&amps).map_err(err)?;
    let decohered = prepared.decohere_via_circuit().map_err(err)?;
    let worst = decohered.weights().iter().zip(chi.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-10, || format!("decohered state differs by {worst:.3e}"))?;
    Ok(format!("max entry error {worst:.1e}"))
}

pub fn mixed_swap_direct_sum(_: &VerifyOptions) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let psi = Statevector::random(3, &mut rng).map_err(err)?;
        let weights: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let rho = DiagonalMixedState::new(weights.iter().map(|w| w / total).collect()).map_err(err)?;
        let direct: f64 = rho.weights().iter().zip(psi.probabilities()).map(|(w, p)| w * p).sum();
        for injection in [MixedInjection::Direct, MixedInjection::Purified] {
            let cfg = MeasurementConfig::exact().with_injection(injection);
            let swapped = swap_mixed(&psi, &rho, &cfg).map_err(err)?;
            worst = worst.max((swapped - direct).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("mixed SWAP vs direct sum {worst:.3e}"))?;
    Ok(format!("50 pairs, both injections, max error {worst:.1e}"))
}

pub fn residual_identity(_: &VerifyOptions) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut violations = 0;
    for i in 0..500 {
        let psi = Statevector::random(3, &mut rng).map_err(err)?;
        let (problem, potential) = random_family_problem(&mut rng, i % 3, 0);
        let op = total_operator(&problem, &potential, Some(&psi)).map_err(err)?;
        let report = quantum_residual(&psi, &op).map_err(err)?;
        let expectation = direct_expectation(&psi, &op).map_err(err)?;
        if expectation.norm_sqr() > report.res_q * (1.0 + 1e-12) + 1e-12 {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} Cauchy-Schwarz violations"))?;
    Ok("500 pairs, identity held, no Cauchy-Schwarz violations".into())
}

pub fn degenerate_first_derivative(_: &VerifyOptions) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let problem = DEProblem::linear(16.0, 7.25, 3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let depth = rng.gen_range(0..=3);
        let spec = AnsatzSpec::six_param(depth);
        let params = ParameterVector::random(6, &mut rng);
        let total = total_expectation(&problem.clone().with_depth(depth), &PotentialSpec::none(), &spec, &params, &MeasurementConfig::exact())
            .map_err(err)?
            .total;
        worst = worst.max((total - problem.kappa0).abs());
    }
    ensure(worst <= 1e-9, || format!("total departs from kappa0 by {worst:.3e}"))?;
    Ok(format!("100 angle sets, max deviation {worst:.1e}"))
}

/// Shots-mode estimates of every protocol output (`Re⟨Â†⟩`, potential and
/// nonlinear overlaps) at `10⁴` shots stay within 0.05 of the exact values in
/// at least 95% of trials.
pub fn shots_statistics(_: &VerifyOptions) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let problem = DEProblem::helmholtz(0.0, 3).with_potential(10.0).with_nonlinearity(1.0).with_depth(2);
    let potential = PotentialSpec::harmonic(10.0);
    let (mut within, mut trials) = (0, 0);
    for state in 0..20 {
        let spec = AnsatzSpec::six_param(2);
        let params = ParameterVector::random(6, &mut rng);
        let exact = total_expectation(&problem, &potential, &spec, &params, &MeasurementConfig::exact()).map_err(err)?;
        for trial in 0..5u64 {
            let cfg = MeasurementConfig::shots(10_000, 1000 * state + trial);
            let est = total_expectation(&problem, &potential, &spec, &params, &cfg).map_err(err)?;
            for (a, b) in [(est.re_a_dagger, exact.re_a_dagger), (est.pot_overlap, exact.pot_overlap), (est.nl_overlap, exact.nl_overlap)] {
                trials += 1;
                if (a - b).abs() < 0.05 {
                    within += 1;
                }
            }
        }
    }
    let rate = within as f64 / trials as f64;
    ensure(rate >= 0.95, || format!("only {within}/{trials} estimates within 0.05"))?;
    Ok(format!("{within}/{trials} estimates within 0.05"))
}

pub fn gpr_interpolation(_: &VerifyOptions) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let inputs: Vec<ParameterVector> = (0..30).map(|_| ParameterVector::random(6, &mut rng)).collect();
    let values: Vec<f64> = inputs.iter().map(|p| p.values().iter().map(|x| x.sin()).sum()).collect();
    let kernel = Kernel { signal_variance: 1.0, length_scale: 1.0, noise_variance: 1e-14 };
    let model = fit(&inputs, &values, HyperparameterMode::Fixed(kernel)).map_err(err)?;
    let worst = inputs.iter().zip(&values).map(|(p, v)| (posterior(&model, p).0 - v).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-8, || format!("interpolation error {worst:.3e}"))?;

    let mut last = 0.0;
    for k in 1..=40 {
        let std = 0.25 * k as f64;
        let a = quva_core::gpr::expected_feasibility(0.0, std);
        ensure(a >= last, || format!("acquisition not monotone in std at {std}"))?;
        last = a;
    }
    let far = acquisition(&model, &ParameterVector::new(vec![0.0; 6]).map_err(err)?);
    ensure(far.is_finite() && far >= 0.0, || "acquisition not finite".into())?;
    Ok(format!("30 points, max interpolation error {worst:.1e}; acquisition monotone"))
}

/// `2 − cos(x₀ − 4) − cos(x₁ − 1.5) − 0.1`: negative only in a small disc.
pub fn bowl(x: &[f64]) -> f64 {
    2.0 - (x[0] - 4.0).cos() - (x[1] - 1.5).cos() - 0.1
}

/// Whether a short guided search lands inside the bowl's negative basin.
pub fn bowl_search_hits(seed: u64) -> Result<bool, String> {
    let cfg = SearchConfig { n_random_init: 20, n_guided: 40, candidate_pool_size: 200, refit_every: 10, ..SearchConfig::new(0.05, seed) };
    let evals = zero_set_search(2, &cfg, 0.0, |_, p| (Some(bowl(p.values())), ())).map_err(err)?;
    Ok(evals.iter().any(|e| e.value.is_some_and(|v| v <= 0.0)))
}

pub fn gpr_zero_set_search(_: &VerifyOptions) -> Result<String, String> {
    let mut hits = 0;
    for seed in 1..=20 {
        if bowl_search_hits(seed)? {
            hits += 1;
        }
    }
    ensure(hits >= 18, || format!("basin found for {hits}/20 seeds"))?;
    Ok(format!("basin found for {hits}/20 seeds"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_shift_breaks_translation() {
        let opts = VerifyOptions { shift_convention: ShiftConvention::Backward };
        assert!(grid_translation(&opts).is_err());
        assert!(grid_translation(&VerifyOptions::default()).is_ok());
    }

    #[test]
    fn outcome_lines() {
        let ok = CheckOutcome { name: "a", passed: true, detail: "fine".into() };
        assert_eq!(ok.line(), "PASS a: fine");
    }
}
