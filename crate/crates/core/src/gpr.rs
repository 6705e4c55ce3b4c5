//! Gaussian-process surrogate of `λ̄ ↦ ⟨Ô^tot⟩` and the root-finding search loop.
//!
//! Angles enter the kernel through the lift `λ_j ↦ (cos λ_j, sin λ_j)`, so the
//! squared-exponential kernel respects the `2π` periodicity of every angle.
//! New points are proposed by maximizing the expected feasibility of the zero
//! level, `EFF = E[max(0, ε − |Y|)]` with `ε = 2σ(λ̄)`.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, AnsatzSpec, ParameterVector};
use crate::error::{argument, QuvaError, Result};
use crate::expectation::{mix_seed, total_expectation, ExpectationBreakdown, MeasurementConfig, MeasurementMode};
use crate::oracle::{best_fidelity, quantum_residual, ClassicalSolution};
use crate::pde::{total_operator, DEProblem, PotentialSpec};

/// Inputs closer than this (in lifted coordinates) are treated as one point.
pub const DEDUP_TOL: f64 = 1e-9;
const MAX_JITTER_STEPS: usize = 10;

/// Squared-exponential kernel hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub signal_variance: f64,
    pub length_scale: f64,
    pub noise_variance: f64,
}

impl Kernel {
    /// `σ_f` = sample std of `values`, `ℓ = 1`, `σ_n = 10⁻⁶ σ_f`.
    pub fn default_for(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sf2 = if var > 0.0 { var } else { mean.powi(2).max(1.0) };
        Self { signal_variance: sf2, length_scale: 1.0, noise_variance: sf2 * 1e-12 }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.signal_variance > 0.0
            && self.length_scale > 0.0
            && self.noise_variance >= 0.0
            && [self.signal_variance, self.length_scale, self.noise_variance].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(argument(format!("invalid kernel hyperparameters {self:?}")))
        }
    }

    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        self.signal_variance * (-d2 / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HyperparameterMode {
    Fixed(Kernel),
    /// [`Kernel::default_for`] the training values.
    #[default]
    Default,
    /// Multistart pattern search over `(log σ_f, log ℓ)` on the log marginal likelihood.
    MaximizeEvidence,
}

/// Constant prior mean of the process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorMean {
    #[default]
    Zero,
    /// Average of the (deduplicated) training values.
    SampleMean,
    Value(f64),
}

/// Lifted coordinates `(cos λ₁, sin λ₁, cos λ₂, …)`.
pub fn lift(params: &[f64]) -> Vec<f64> {
    params.iter().flat_map(|l| [l.cos(), l.sin()]).collect()
}

#[derive(Clone, Debug)]
pub struct GPRModel {
    training_inputs: Vec<ParameterVector>,
    training_values: Vec<f64>,
    features: Vec<Vec<f64>>,
    kernel: Kernel,
    prior_mean: f64,
    jitter: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

fn kernel_matrix(features: &[Vec<f64>], kernel: &Kernel) -> DMatrix<f64> {
    let n = features.len();
    DMatrix::from_fn(n, n, |i, j| kernel.eval(&features[i], &features[j]))
}

/// Cholesky of `K + (σ_n² + jitter)·I`, escalating the jitter until the
/// factorization succeeds and its smallest pivot exceeds `10⁻¹⁰·σ_f²`.
fn factorize(k: &DMatrix<f64>, kernel: &Kernel) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    let floor = 1e-10 * kernel.signal_variance;
    let mut jitter = 0.0;
    for step in 0..=MAX_JITTER_STEPS {
        let mut m = k.clone();
        for i in 0..n {
            m[(i, i)] += kernel.noise_variance + jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b * b));
            if min_pivot >= floor || step == MAX_JITTER_STEPS {
                return Ok((chol, jitter));
            }
        }
        jitter = if jitter == 0.0 { floor } else { jitter * 10.0 };
    }
    Err(QuvaError::Numerical(format!(
        "kernel matrix of {n} points is not positive definite after jitter {jitter:e} (σ_f² = {}, ℓ = {})",
        kernel.signal_variance, kernel.length_scale
    )))
}

/// Drops earlier inputs that repeat a later one within [`DEDUP_TOL`].
fn deduplicate(inputs: &[ParameterVector], values: &[f64]) -> (Vec<ParameterVector>, Vec<f64>, Vec<Vec<f64>>) {
    let lifted: Vec<Vec<f64>> = inputs.iter().map(|p| lift(p.values())).collect();
    let mut keep = Vec::new();
    for i in 0..inputs.len() {
        let repeated = (i + 1..inputs.len()).any(|j| {
            lifted[i].iter().zip(&lifted[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= DEDUP_TOL
        });
        if !repeated {
            keep.push(i);
        }
    }
    (
        keep.iter().map(|&i| inputs[i].clone()).collect(),
        keep.iter().map(|&i| values[i]).collect(),
        keep.iter().map(|&i| lifted[i].clone()).collect(),
    )
}

fn log_evidence(features: &[Vec<f64>], values: &DVector<f64>, kernel: &Kernel) -> f64 {
    let Ok((chol, _)) = factorize(&kernel_matrix(features, kernel), kernel) else {
        return f64::NEG_INFINITY;
    };
    let alpha = chol.solve(values);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    let n = values.len() as f64;
    -0.5 * values.dot(&alpha) - 0.5 * log_det - 0.5 * n * TAU.ln()
}

/// Maximizes `objective` by compass search from `start`, halving the step
/// until it drops below `min_step`. Returns the best point and value.
pub fn coordinate_search(
    start: Vec<f64>,
    initial_step: f64,
    min_step: f64,
    max_evals: usize,
    objective: impl Fn(&[f64]) -> f64,
) -> (Vec<f64>, f64) {
    let mut best = start;
    let mut best_val = objective(&best);
    let mut step = initial_step;
    let mut evals = 1;
    while step >= min_step && evals < max_evals {
        let mut improved = false;
        for d in 0..best.len() {
            for dir in [1.0, -1.0] {
                let mut trial = best.clone();
                trial[d] += dir * step;
                let v = objective(&trial);
                evals += 1;
                if v > best_val {
                    best = trial;
                    best_val = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    (best, best_val)
}

fn maximize_evidence(features: &[Vec<f64>], values: &[f64]) -> Kernel {
    let y = DVector::from_column_slice(values);
    let base = Kernel::default_for(values);
    let noise_ratio = base.noise_variance / base.signal_variance;
    let to_kernel = |p: &[f64]| {
        let sf2 = (2.0 * p[0]).exp();
        Kernel { signal_variance: sf2, length_scale: p[1].exp(), noise_variance: sf2 * noise_ratio }
    };
    let objective = |p: &[f64]| {
        if p[1] < 0.05f64.ln() || p[1] > 10f64.ln() {
            return f64::NEG_INFINITY;
        }
        log_evidence(features, &y, &to_kernel(p))
    };
    let log_sf = 0.5 * base.signal_variance.ln();
    let mut best = (vec![log_sf, 0.0], objective(&[log_sf, 0.0]));
    for log_l in [0.3f64.ln(), 1.0f64.ln(), 2.5f64.ln()] {
        let (p, v) = coordinate_search(vec![log_sf, log_l], 0.5, 0.02, 200, objective);
        if v > best.1 {
            best = (p, v);
        }
    }
    if best.1.is_finite() { to_kernel(&best.0) } else { base }
}

/// Fits a zero-mean GP to the observations.
pub fn fit(inputs: &[ParameterVector], values: &[f64], mode: HyperparameterMode) -> Result<GPRModel> {
    fit_with_mean(inputs, values, mode, PriorMean::Zero)
}

pub fn fit_with_mean(
    inputs: &[ParameterVector],
    values: &[f64],
    mode: HyperparameterMode,
    prior: PriorMean,
) -> Result<GPRModel> {
    if inputs.len() != values.len() {
        return Err(argument(format!("{} inputs but {} values", inputs.len(), values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(argument("training values must be finite"));
    }
    let (training_inputs, training_values, features) = deduplicate(inputs, values);
    if training_inputs.len() < 2 {
        return Err(argument("a GP fit needs at least 2 distinct points"));
    }
    if let Some(bad) = features.iter().find(|f| f.len() != features[0].len()) {
        return Err(argument(format!("inconsistent input lengths {} and {}", bad.len(), features[0].len())));
    }
    let prior_mean = match prior {
        PriorMean::Zero => 0.0,
        PriorMean::SampleMean => training_values.iter().sum::<f64>() / training_values.len() as f64,
        PriorMean::Value(m) => m,
    };
    let centered: Vec<f64> = training_values.iter().map(|v| v - prior_mean).collect();
    let kernel = match mode {
        HyperparameterMode::Fixed(k) => k,
        HyperparameterMode::Default => Kernel::default_for(&centered),
        HyperparameterMode::MaximizeEvidence => maximize_evidence(&features, &centered),
    };
    kernel.validate()?;
    let (chol, jitter) = factorize(&kernel_matrix(&features, &kernel), &kernel)?;
    let alpha = chol.solve(&DVector::from_column_slice(&centered));
    Ok(GPRModel { training_inputs, training_values, features, kernel, prior_mean, jitter, chol, alpha })
}

impl GPRModel {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.training_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.training_values.is_empty()
    }

    pub fn training_inputs(&self) -> &[ParameterVector] {
        &self.training_inputs
    }

    pub fn training_values(&self) -> &[f64] {
        &self.training_values
    }

    pub fn dimension(&self) -> usize {
        self.training_inputs[0].len()
    }

    /// Refit with one extra observation and the same hyperparameters.
    pub fn with_observation(&self, input: ParameterVector, value: f64) -> Result<GPRModel> {
        let mut inputs = self.training_inputs.clone();
        let mut values = self.training_values.clone();
        inputs.push(input);
        values.push(value);
        fit_with_mean(&inputs, &values, HyperparameterMode::Fixed(self.kernel), PriorMean::Value(self.prior_mean))
    }

    fn posterior_lifted(&self, feature: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(self.features.len(), self.features.iter().map(|f| self.kernel.eval(f, feature)));
        let mean = self.prior_mean + k.dot(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&k).unwrap_or_else(|| DVector::zeros(k.len()));
        let var = (self.kernel.signal_variance - v.norm_squared()).max(0.0);
        (mean, var.sqrt())
    }
}

/// Predictive mean and standard deviation at `query`.
pub fn posterior(model: &GPRModel, query: &ParameterVector) -> (f64, f64) {
    model.posterior_lifted(&lift(query.values()))
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / TAU.sqrt()
}

/// Expected feasibility of the zero level with band `ε = 2·std`.
pub fn expected_feasibility(mean: f64, std: f64) -> f64 {
    if !(std > 0.0) {
        return 0.0;
    }
    let t = mean.abs() / std;
    let (lo, hi) = (-2.0 - t, 2.0 - t);
    let h = t * (2.0 * std_normal_cdf(-t) - std_normal_cdf(lo) - std_normal_cdf(hi))
        - (2.0 * std_normal_pdf(t) - std_normal_pdf(lo) - std_normal_pdf(hi))
        + 2.0 * (std_normal_cdf(hi) - std_normal_cdf(lo));
    (std * h).max(0.0)
}

pub fn acquisition(model: &GPRModel, query: &ParameterVector) -> f64 {
    let (mean, std) = posterior(model, query);
    expected_feasibility(mean, std)
}

/// Training points, closest to the zero level, that anchor the local part of
/// the proposal pool.
const POOL_ANCHORS: usize = 16;
/// Half-widths of the uniform perturbations around each anchor.
const POOL_SPREADS: [f64; 3] = [0.03, 0.1, 0.3];
/// Initial compass step when refining the best pool points.
const REFINE_STEP: f64 = 0.02;
/// Share of the training cap reserved for the most recent evaluations.
const RECENT_FRACTION: f64 = 0.5;

/// Seeded candidate pool in `[0, 2π)^k`: uniform perturbations, at several
/// spreads, of the training inputs whose values are closest to zero.
fn candidate_pool(model: &GPRModel, pool_size: usize, seed: u64) -> Vec<ParameterVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut anchors: Vec<usize> = (0..model.len()).collect();
    anchors.sort_by(|&a, &b| model.training_values[a].abs().total_cmp(&model.training_values[b].abs()).then(a.cmp(&b)));
    anchors.truncate(POOL_ANCHORS);
    (0..pool_size.max(1))
        .map(|j| {
            let anchor = model.training_inputs[anchors[j % anchors.len()]].values();
            let spread = POOL_SPREADS[(j / anchors.len()) % POOL_SPREADS.len()];
            let moved: Vec<f64> = anchor.iter().map(|a| a + rng.gen_range(-spread..spread)).collect();
            ParameterVector::new(moved).expect("finite angles").wrapped()
        })
        .collect()
}

/// Acquisition argmax over [`candidate_pool`], refined by compass search from
/// the best few pool points.
pub fn propose_with(model: &GPRModel, pool_size: usize, seed: u64) -> ParameterVector {
    let pool = candidate_pool(model, pool_size, seed);
    let scores: Vec<f64> = pool.par_iter().map(|p| acquisition(model, p)).collect();
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let objective = |x: &[f64]| {
        let (mean, std) = model.posterior_lifted(&lift(x));
        expected_feasibility(mean, std)
    };
    let refined: Vec<(Vec<f64>, f64)> = order
        .iter()
        .take(3)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&i| coordinate_search(pool[i].values().to_vec(), REFINE_STEP, 1e-3, 600, objective))
        .collect();
    let mut best = (pool[order[0]].values().to_vec(), scores[order[0]]);
    for (x, v) in refined {
        if v > best.1 {
            best = (x, v);
        }
    }
    ParameterVector::new(best.0).expect("finite proposal").wrapped()
}

pub fn propose_next(model: &GPRModel, cfg: &SearchConfig) -> ParameterVector {
    propose_with(model, cfg.candidate_pool_size, cfg.seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    #[serde(default = "default_random")]
    pub n_random_init: usize,
    #[serde(default = "default_guided")]
    pub n_guided: usize,
    pub p_c: f64,
    #[serde(default = "default_pool")]
    pub candidate_pool_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_refit")]
    pub refit_every: usize,
    /// Largest training set handed to the GP; older points with the largest
    /// `|⟨Ô^tot⟩|` are left out first.
    #[serde(default = "default_max_training")]
    pub max_training_points: usize,
    #[serde(default = "default_hyper")]
    pub hyperparameters: HyperparameterMode,
}

fn default_random() -> usize {
    600
}
fn default_guided() -> usize {
    600
}
fn default_pool() -> usize {
    500
}
fn default_refit() -> usize {
    25
}
fn default_max_training() -> usize {
    256
}
fn default_hyper() -> HyperparameterMode {
    HyperparameterMode::MaximizeEvidence
}

impl SearchConfig {
    pub fn new(p_c: f64, seed: u64) -> Self {
        Self {
            n_random_init: default_random(),
            n_guided: default_guided(),
            p_c,
            candidate_pool_size: default_pool(),
            seed,
            refit_every: default_refit(),
            max_training_points: default_max_training(),
            hyperparameters: default_hyper(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_random_init < 1 || self.n_guided < 1 || self.candidate_pool_size < 1 || self.refit_every < 1 {
            return Err(argument("search counts must all be at least 1"));
        }
        if self.max_training_points < 2 {
            return Err(argument("max_training_points must be at least 2"));
        }
        if !(self.p_c > 0.0) {
            return Err(argument(format!("p_c must be positive, got {}", self.p_c)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchPhase {
    Random,
    Guided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub eval_index: usize,
    pub lambda: Vec<f64>,
    pub breakdown: Option<ExpectationBreakdown>,
    pub res_q: Option<f64>,
    pub fidelity_vs_oracle: Option<f64>,
    /// `|⟨Ô^tot⟩| ≤ p_c`; never set for a failed evaluation.
    pub flagged: bool,
    pub phase: SearchPhase,
    pub error: Option<String>,
}

impl CandidateRecord {
    pub fn total(&self) -> Option<f64> {
        self.breakdown.map(|b| b.total)
    }
}

struct Evaluator<'a> {
    problem: &'a DEProblem,
    potential: &'a PotentialSpec,
    spec: &'a AnsatzSpec,
    measurement: &'a MeasurementConfig,
    references: &'a [ClassicalSolution],
    p_c: f64,
}

impl Evaluator<'_> {
    fn evaluate(&self, eval_index: usize, params: ParameterVector, phase: SearchPhase) -> CandidateRecord {
        let cfg = self.measurement.substream(eval_index as u64 + 1);
        let lambda: Vec<f64> = params.values().to_vec();
        let outcome = (|| -> Result<_> {
            let breakdown = total_expectation(self.problem, self.potential, self.spec, &params, &cfg)?;
            if !breakdown.total.is_finite() {
                return Err(QuvaError::Numerical(format!("non-finite total {}", breakdown.total)));
            }
            let psi = build_ansatz(self.spec, &params)?;
            let op = total_operator(self.problem, self.potential, Some(&psi))?;
            let res_q = quantum_residual(&psi, &op)?.res_q;
            let fidelity = best_fidelity(&psi, self.references)?.map(|(_, f)| f);
            Ok((breakdown, res_q, fidelity))
        })();
        match outcome {
            Ok((breakdown, res_q, fidelity)) => CandidateRecord {
                eval_index,
                lambda,
                flagged: breakdown.total.abs() <= self.p_c,
                breakdown: Some(breakdown),
                res_q: Some(res_q),
                fidelity_vs_oracle: fidelity,
                phase,
                error: None,
            },
            Err(e) => CandidateRecord {
                eval_index,
                lambda,
                breakdown: None,
                res_q: None,
                fidelity_vs_oracle: None,
                flagged: false,
                phase,
                error: Some(e.to_string()),
            },
        }
    }
}

/// Indices of the evaluations used as GP training data: the most recent half
/// of the cap, topped up with the smallest `|value|` among the rest. Failed
/// evaluations (`None`) are skipped.
fn training_subset(values: &[Option<f64>], cap: usize) -> Vec<usize> {
    let ok: Vec<usize> = values.iter().enumerate().filter(|(_, v)| v.is_some()).map(|(i, _)| i).collect();
    if ok.len() <= cap {
        return ok;
    }
    let recent = (cap as f64 * RECENT_FRACTION) as usize;
    let (older, newer) = ok.split_at(ok.len() - recent);
    let mut older = older.to_vec();
    older.sort_by(|&a, &b| values[a].unwrap().abs().total_cmp(&values[b].unwrap().abs()).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = older.into_iter().take(cap - recent).chain(newer.iter().copied()).collect();
    chosen.sort_unstable();
    chosen
}

fn shot_noise_variance(problem: &DEProblem, measurement: &MeasurementConfig) -> f64 {
    match measurement.mode {
        MeasurementMode::Exact => 0.0,
        MeasurementMode::Shots { count, .. } => {
            let dl = problem.delta_l();
            let coeff = 2.0 * problem.kappa2 / (dl * dl) - problem.kappa1 / dl;
            (coeff * coeff + problem.v_max.powi(2) + problem.kappa_n.powi(2)) / count as f64
        }
    }
}

/// One evaluation of a [`zero_set_search`] objective.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation<T> {
    pub eval_index: usize,
    pub lambda: ParameterVector,
    pub phase: SearchPhase,
    /// Objective value, `None` when the evaluation failed.
    pub value: Option<f64>,
    pub payload: T,
}

/// GP-guided search for the zero set of `objective` over `[0, 2π)^dim`:
/// `cfg.n_random_init` uniform draws, then `cfg.n_guided` proposals in batches
/// of `cfg.refit_every`. Within a batch later proposals condition on earlier
/// ones through their predicted means. `noise_variance` is a floor on the
/// kernel noise for noisy objectives. The objective receives the evaluation
/// index and returns the value plus an arbitrary payload.
pub fn zero_set_search<T, F>(dim: usize, cfg: &SearchConfig, noise_variance: f64, objective: F) -> Result<Vec<Evaluation<T>>>
where
    T: Send,
    F: Fn(usize, &ParameterVector) -> (Option<f64>, T) + Sync,
{
    cfg.validate()?;
    if dim == 0 {
        return Err(argument("search dimension must be at least 1"));
    }
    let run = |start: usize, points: Vec<ParameterVector>, phase: SearchPhase| -> Vec<Evaluation<T>> {
        points
            .into_par_iter()
            .enumerate()
            .map(|(j, lambda)| {
                let (value, payload) = objective(start + j, &lambda);
                Evaluation { eval_index: start + j, lambda, phase, value: value.filter(|v| v.is_finite()), payload }
            })
            .collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial: Vec<ParameterVector> = (0..cfg.n_random_init).map(|_| ParameterVector::random(dim, &mut rng)).collect();
    let mut evals = run(0, initial, SearchPhase::Random);

    let total = cfg.n_random_init + cfg.n_guided;
    let mut batch_index = 0u64;
    while evals.len() < total {
        let batch = cfg.refit_every.min(total - evals.len());
        let values: Vec<Option<f64>> = evals.iter().map(|e| e.value).collect();
        let subset = training_subset(&values, cfg.max_training_points);
        let inputs: Vec<ParameterVector> = subset.iter().map(|&i| evals[i].lambda.clone()).collect();
        let targets: Vec<f64> = subset.iter().map(|&i| values[i].unwrap()).collect();
        let prior = PriorMean::SampleMean;

        let proposals = if inputs.len() < 2 {
            (0..batch).map(|_| ParameterVector::random(dim, &mut rng)).collect::<Vec<_>>()
        } else {
            let mut model = fit_with_mean(&inputs, &targets, cfg.hyperparameters, prior)?;
            if noise_variance > model.kernel().noise_variance {
                let kernel = Kernel { noise_variance, ..*model.kernel() };
                model = fit_with_mean(&inputs, &targets, HyperparameterMode::Fixed(kernel), prior)?;
            }
            let mut out = Vec::with_capacity(batch);
            for j in 0..batch {
                let seed = mix_seed(cfg.seed, (batch_index << 16) | j as u64);
                let proposal = propose_with(&model, cfg.candidate_pool_size, seed);
                if j + 1 < batch {
                    let (believed, _) = posterior(&model, &proposal);
                    model = model.with_observation(proposal.clone(), believed)?;
                }
                out.push(proposal);
            }
            out
        };
        let start = evals.len();
        evals.extend(run(start, proposals, SearchPhase::Guided));
        batch_index += 1;
    }
    Ok(evals)
}

/// [`zero_set_search`] over the total expectation of `problem`, returning one
/// record per evaluation in order. `references`, when non-empty, are used to
/// fill `fidelity_vs_oracle`.
pub fn run_search(
    problem: &DEProblem,
    potential: &PotentialSpec,
    spec: &AnsatzSpec,
    cfg: &SearchConfig,
    measurement: &MeasurementConfig,
    references: &[ClassicalSolution],
) -> Result<Vec<CandidateRecord>> {
    measurement.validate()?;
    problem.validate()?;
    let eval = Evaluator { problem, potential, spec, measurement, references, p_c: cfg.p_c };
    let noise = shot_noise_variance(problem, measurement);
    let evals = zero_set_search(spec.parameter_count(), cfg, noise, |i, params| {
        let record = eval.evaluate(i, params.clone(), SearchPhase::Random);
        (record.total(), record)
    })?;
    Ok(evals
        .into_iter()
        .map(|e| CandidateRecord { phase: e.phase, ..e.payload })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pv(v: &[f64]) -> ParameterVector {
        ParameterVector::new(v.to_vec()).unwrap()
    }

    fn tight(sf2: f64) -> Kernel {
        Kernel { signal_variance: sf2, length_scale: 1.0, noise_variance: 1e-14 }
    }

    #[test]
    fn two_point_interpolation() {
        let inputs = [pv(&[0.3]), pv(&[2.0])];
        let model = fit(&inputs, &[1.5, -0.7], HyperparameterMode::Fixed(tight(1.0))).unwrap();
        for (x, y) in inputs.iter().zip([1.5, -0.7]) {
            let (m, s) = posterior(&model, x);
            assert!((m - y).abs() < 1e-8);
            assert!(s < 1e-5);
        }
    }

    #[test]
    fn duplicates_dropped_keeping_latest() {
        let inputs = [pv(&[0.3, 1.0]), pv(&[1.0, 1.0]), pv(&[0.3, 1.0])];
        let model = fit(&inputs, &[5.0, 1.0, 2.0], HyperparameterMode::Default).unwrap();
        assert_eq!(model.len(), 2);
        assert_eq!(model.training_values(), &[1.0, 2.0]);
        // 2π apart is the same point on the torus
        let wrapped = [pv(&[0.3]), pv(&[0.3 + TAU])];
        assert!(fit(&wrapped, &[1.0, 1.0], HyperparameterMode::Default).is_err());
    }

    #[test]
    fn sine_regression() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let train: Vec<ParameterVector> = (0..50).map(|i| pv(&[TAU * (i as f64 + rng.gen::<f64>()) / 50.0])).collect();
        let values: Vec<f64> = train.iter().map(|p| p.values()[0].sin()).collect();
        let model = fit(&train, &values, HyperparameterMode::Default).unwrap();
        let mut se = 0.0;
        for i in 0..200 {
            let x = TAU * (i as f64 + 0.5) / 200.0;
            se += (posterior(&model, &pv(&[x])).0 - x.sin()).powi(2);
        }
        assert!((se / 200.0).sqrt() < 0.05);
    }

    #[test]
    fn far_query_reverts_to_prior() {
        // antipodal on every angle is the farthest point on the torus; a short ℓ makes it "far"
        let k = Kernel { signal_variance: 4.0, length_scale: 0.1, noise_variance: 1e-12 };
        let model = fit(&[pv(&[0.0, 0.0]), pv(&[0.1, 0.0])], &[3.0, 2.5], HyperparameterMode::Fixed(k)).unwrap();
        let (m, s) = posterior(&model, &pv(&[PI, PI]));
        assert!(m.abs() < 1e-12);
        assert!((s - 2.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_two_point_midpoint() {
        let model = fit(&[pv(&[0.0]), pv(&[1.0])], &[2.0, 4.0], HyperparameterMode::Fixed(tight(1.0))).unwrap();
        // closed form: m(mid) = k*(y1 + y2)/(1 + k01) with k* = k(mid, ends)
        let d2_end = {
            let (a, b) = (lift(&[0.5]), lift(&[0.0]));
            a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
        };
        let d2_pair = 2.0 - 2.0 * 1f64.cos();
        let ks = (-d2_end / 2.0).exp();
        let k01 = (-d2_pair / 2.0).exp();
        let expected = ks * 6.0 / (1.0 + k01 + 1e-14);
        let (m, _) = posterior(&model, &pv(&[0.5]));
        assert!((m - expected).abs() < 1e-9);
        // equal weights: the midpoint mean is proportional to the average of the two values
        assert!((m / (ks * 2.0 / (1.0 + k01)) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn acquisition_examples() {
        assert!(expected_feasibility(0.0, 1.0) > expected_feasibility(5.0, 1.0));
        assert!(expected_feasibility(3.0, 2.0) > expected_feasibility(3.0, 0.1));
        assert_eq!(expected_feasibility(1.0, 0.0), 0.0);
        assert!(expected_feasibility(1e6, 1e-3) < 1e-300);
    }

    #[test]
    fn acquisition_monotone_on_grid() {
        let axis: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        for &s in axis.iter().skip(1) {
            for w in axis.windows(2) {
                assert!(expected_feasibility(w[0], s) > expected_feasibility(w[1], s), "mean {w:?} std {s}");
            }
        }
        for &m in &axis {
            for w in axis.windows(2).skip(1) {
                assert!(expected_feasibility(m, w[1]) > expected_feasibility(m, w[0]), "mean {m} std {w:?}");
            }
        }
    }

    #[test]
    fn proposal_determinism() {
        let model = fit(&[pv(&[0.0, 1.0]), pv(&[2.0, 3.0])], &[1.0, -1.0], HyperparameterMode::Default).unwrap();
        let cfg = SearchConfig { candidate_pool_size: 100, ..SearchConfig::new(1.0, 42) };
        assert_eq!(propose_next(&model, &cfg), propose_next(&model, &cfg));
    }

    #[test]
    fn training_subset_keeps_recent_and_small() {
        let values: Vec<Option<f64>> = (0..10).map(|i| Some(10.0 - i as f64)).collect();
        assert_eq!(training_subset(&values, 4), vec![6, 7, 8, 9]);
        assert_eq!(training_subset(&values, 20).len(), 10);
        let mut gaps = values.clone();
        gaps[9] = None;
        assert_eq!(training_subset(&gaps, 20).len(), 9);
    }

    #[test]
    fn search_counts_and_flags() {
        let problem = DEProblem::helmholtz(8.0, 3);
        let cfg = SearchConfig { n_random_init: 30, n_guided: 20, candidate_pool_size: 50, refit_every: 10, ..SearchConfig::new(f64::INFINITY, 1) };
        let records = run_search(&problem, &PotentialSpec::none(), &AnsatzSpec::six_param(1), &cfg, &MeasurementConfig::exact(), &[]).unwrap();
        assert_eq!(records.len(), 50);
        assert!(records.iter().all(|r| r.flagged));
        assert!(records.iter().enumerate().all(|(i, r)| r.eval_index == i));
    }

    fn bowl(x: &[f64]) -> f64 {
        2.0 - (x[0] - 4.0).cos() - (x[1] - 1.5).cos() - 0.1
    }

    #[test]
    fn synthetic_zero_set_is_localized() {
        let hits = (1..=20u64)
            .filter(|&seed| {
                let cfg = SearchConfig { n_random_init: 20, n_guided: 40, candidate_pool_size: 200, refit_every: 10, ..SearchConfig::new(0.05, seed) };
                let evals = zero_set_search(2, &cfg, 0.0, |_, p| (Some(bowl(p.values())), ())).unwrap();
                evals.iter().any(|e| e.value.unwrap() <= 0.0)
            })
            .count();
        assert!(hits >= 18, "basin reached for {hits}/20 seeds");
    }
}
