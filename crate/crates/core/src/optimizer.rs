//! Stochastic reconfiguration in real time under `L`, optionally mixed with
//! `i beta L` to single out the decay mode with the most negative imaginary
//! part among degenerate ones.
//!
//! Each iteration samples the trial state, builds
//! `S = 2 Re(<O^* O^T> - <O>^* <O>^T)`, `F = 2 Re A`, `F' = -2 Im A` with
//! `A = <O^* L> - <O>^* <L>` over real coordinates, solves
//! `(S + lambda I) d = eps (F + beta F')` and adds `d` to the parameters.

use ndarray::{Array1, Array2};
use ndarray_linalg::{LeastSquaresSvd, SolveC};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::VectorizedLiouvillian;
use crate::rbm::TrialState;
use crate::sampler::{self, ChainConfig, EstimatorBundle};
use crate::{Error, Result};

/// Imaginary residue above which assembly logs a warning.
pub const RESIDUE_WARN: f64 = 1e-10;
/// Imaginary residue above which the bundle is rejected.
pub const RESIDUE_FAIL: f64 = 1e-6;
/// Default `beta` when the imaginary-evolution term is enabled.
pub const DEFAULT_BETA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SrSystem {
    pub s: Array2<f64>,
    pub f: Array1<f64>,
    pub f_prime: Array1<f64>,
    pub lambda: f64,
    pub epsilon: f64,
    pub beta: f64,
}

impl SrSystem {
    /// Builds `S`, `F` and `F'` from a bundle, with `eps = lambda = 1`, `beta = 0`.
    pub fn assemble(bundle: &EstimatorBundle) -> Result<Self> {
        let p = bundle.params;
        let g = &bundle.gram;
        let m = &bundle.mean_o;

        let mut residue: f64 = 0.0;
        for a in 0..p {
            residue = residue.max(g[[a, a]].im.abs());
            for b in a + 1..p {
                residue = residue.max((g[[a, b]] - g[[b, a]].conj()).norm());
            }
        }
        if residue > RESIDUE_FAIL {
            return Err(Error::EstimatorInconsistency(residue));
        }
        if residue > RESIDUE_WARN {
            log::warn!("second moments deviate from Hermitian by {residue:.3e}; truncated");
        }

        let mut s = Array2::<f64>::zeros((2 * p, 2 * p));
        for a in 0..p {
            for b in 0..p {
                // Hermitian part of the covariance, so S is symmetric exactly.
                let c = 0.5
                    * ((g[[a, b]] + g[[b, a]].conj()) - 2.0 * m[a].conj() * m[b]);
                s[[a, b]] = 2.0 * c.re;
                s[[p + a, p + b]] = 2.0 * c.re;
                s[[a, p + b]] = -2.0 * c.im;
                s[[p + a, b]] = 2.0 * c.im;
            }
        }
        let mut f = Array1::<f64>::zeros(2 * p);
        let mut f_prime = Array1::<f64>::zeros(2 * p);
        for a in 0..p {
            let force = bundle.cross[a] - m[a].conj() * bundle.mean_local;
            f[a] = 2.0 * force.re;
            f[p + a] = 2.0 * force.im;
            f_prime[a] = -2.0 * force.im;
            f_prime[p + a] = 2.0 * force.re;
        }
        Ok(Self {
            s,
            f,
            f_prime,
            lambda: 1.0,
            epsilon: 1.0,
            beta: 0.0,
        })
    }

    pub fn with_schedule(mut self, epsilon: f64, lambda: f64, beta: f64) -> Self {
        self.epsilon = epsilon;
        self.lambda = lambda;
        self.beta = beta;
        self
    }

    /// `eps * (S + lambda I)^-1 (F + beta F')`.
    ///
    /// A failed Cholesky factorization is retried with `lambda` doubled, up to
    /// three times, before falling back to an SVD least-squares solve.
    pub fn solve_update(&self) -> Result<Array1<f64>> {
        let rhs = &self.f + &(self.beta * &self.f_prime);
        let n = rhs.len();
        let mut lambda = self.lambda;
        for attempt in 0..4 {
            let mut a = self.s.clone();
            for i in 0..n {
                a[[i, i]] += lambda;
            }
            if let Ok(x) = a.solvec(&rhs) {
                if x.iter().all(|v| v.is_finite()) {
                    if attempt > 0 {
                        log::warn!("SR matrix needed shift {lambda:.3e} to factorize");
                    }
                    return Ok(self.epsilon * x);
                }
            }
            lambda *= 2.0;
        }
        log::warn!("Cholesky failed; falling back to least squares");
        let mut a = self.s.clone();
        for i in 0..n {
            a[[i, i]] += self.lambda;
        }
        match a.least_squares(&rhs) {
            Ok(r) if r.solution.iter().all(|v| v.is_finite()) => Ok(self.epsilon * r.solution),
            Ok(_) => Err(Error::SingularSystem("non-finite least-squares solution".into())),
            Err(e) => Err(Error::SingularSystem(e.to_string())),
        }
    }
}

/// Learning rate and regularization at iteration `p`.
pub fn schedules(p: usize) -> (f64, f64) {
    let p = p.min(i32::MAX as usize) as i32;
    let epsilon = (0.1 * 0.96f64.powi(p)).max(0.01);
    let lambda = 0.9f64.powi(p).max(1e-4);
    (epsilon, lambda)
}

/// How the imaginary-evolution term is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaMode {
    /// Converge with `beta = 0` first, then continue with `beta > 0`.
    #[default]
    TwoPhase,
    /// Use `beta` from the first iteration.
    Joint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Window of the moving average of `Re <L>` used for convergence and the gap.
    pub window: usize,
    /// Convergence threshold on the change of the moving average.
    pub tolerance: f64,
    /// No convergence is declared before this many iterations (per phase).
    pub min_iters: usize,
    /// Weight of the `i L` term; zero disables it.
    pub beta: f64,
    pub beta_mode: BetaMode,
    pub chain: ChainConfig,
    /// Uniform draws for the RBM trace; at least `2^N` switches to an exhaustive sum.
    pub trace_samples: usize,
    /// Master seed for per-iteration chain seeds and trace draws.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            window: 20,
            tolerance: 1e-3,
            min_iters: 40,
            beta: 0.0,
            beta_mode: BetaMode::TwoPhase,
            chain: ChainConfig::default(),
            trace_samples: 4096,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidConfig("window must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.trace_samples == 0 {
            return Err(Error::InvalidConfig("trace_samples must be positive".into()));
        }
        self.chain.validate()
    }
}

/// One optimizer iteration. `re_l`/`im_l` are measured before the update of this step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub re_l: f64,
    pub im_l: f64,
    pub std_error_re: f64,
    pub local_variance: f64,
    pub acceptance: f64,
    pub discard_rate: f64,
    pub step_norm: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub trace_re: f64,
    pub trace_im: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    /// Step at which the `beta` phase started, if any.
    pub beta_start: Option<usize>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn re_l(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.re_l).collect()
    }
}

/// `-Re <L>` averaged over the final window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEstimate {
    pub gap: f64,
    pub std_error: f64,
    /// `Im <L>` averaged over the same window.
    pub im: f64,
}

pub fn gap_estimate(trace: &RunTrace, window: usize) -> Option<GapEstimate> {
    let n = trace.records.len();
    if n == 0 || window == 0 {
        return None;
    }
    let tail = &trace.records[n - window.min(n)..];
    let k = tail.len() as f64;
    let mean = tail.iter().map(|r| r.re_l).sum::<f64>() / k;
    let im = tail.iter().map(|r| r.im_l).sum::<f64>() / k;
    let std_error = if tail.len() > 1 {
        let var = tail.iter().map(|r| (r.re_l - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    Some(GapEstimate {
        gap: -mean,
        std_error,
        im,
    })
}

/// `-Re <L>` of a single bundle.
pub fn gap_from_bundle(bundle: &EstimatorBundle) -> f64 {
    -bundle.mean_local.re
}

/// A failed run: the error together with everything computed up to that point.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub trial: TrialState,
    pub trace: RunTrace,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} iterations)", self.error, self.trace.len())
    }
}

impl std::error::Error for RunFailure {}

/// Re-estimates `Tr(rho_RBM)` and resets `alpha`.
pub fn refresh_trace<R: rand::Rng + ?Sized>(
    trial: &mut TrialState,
    trace_samples: usize,
    rng: &mut R,
) -> Result<()> {
    let n = trial.sites();
    let estimate = if n < usize::BITS as usize && trace_samples >= 1usize << n {
        sampler::exact_trace(trial.rbm())
    } else {
        sampler::estimate_trace(trial.rbm(), trace_samples, rng)?
    };
    trial.refresh_alpha_log(estimate.log_value)
}

fn moving_average(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Whether the last two disjoint windows of `re_l` agree to within `tolerance`.
pub fn has_converged(re_l: &[f64], window: usize, tolerance: f64) -> bool {
    let n = re_l.len();
    if n < 2 * window {
        return false;
    }
    let last = moving_average(&re_l[n - window..]);
    let prev = moving_average(&re_l[n - 2 * window..n - window]);
    (last - prev).abs() < tolerance
}

/// Per-iteration hook; receives each record as soon as it is complete.
pub type Observer<'a> = dyn FnMut(&TraceRecord, &TrialState) + 'a;

/// Runs SR until convergence or `max_iters`.
pub fn run(
    trial: TrialState,
    liouvillian: &VectorizedLiouvillian,
    cfg: &OptimizerConfig,
) -> std::result::Result<(TrialState, RunTrace), Box<RunFailure>> {
    run_with_observer(trial, liouvillian, cfg, &mut |_, _| {})
}

pub fn run_with_observer(
    mut trial: TrialState,
    liouvillian: &VectorizedLiouvillian,
    cfg: &OptimizerConfig,
    observer: &mut Observer<'_>,
) -> std::result::Result<(TrialState, RunTrace), Box<RunFailure>> {
    let mut trace = RunTrace::default();
    macro_rules! bail {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => {
                    return Err(Box::new(RunFailure {
                        error,
                        trial,
                        trace,
                    }))
                }
            }
        };
    }
    bail!(cfg.validate());
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    bail!(refresh_trace(&mut trial, cfg.trace_samples, &mut master));

    let two_phase = cfg.beta > 0.0 && cfg.beta_mode == BetaMode::TwoPhase;
    let mut beta = if two_phase { 0.0 } else { cfg.beta };
    if beta > 0.0 {
        trace.beta_start = Some(0);
    }
    let mut phase_start = 0;

    for p in 0..cfg.max_iters {
        let (epsilon, lambda) = schedules(p);
        let mut chain = cfg.chain.clone();
        chain.seed = master.next_u64();
        let bundle = bail!(sampler::run_estimation(&trial, liouvillian, &chain));
        let system = bail!(SrSystem::assemble(&bundle)).with_schedule(epsilon, lambda, beta);
        let delta = bail!(system.solve_update());
        let alpha = trial.alpha();
        let tr = trial.trace_estimate();
        trial
            .rbm_mut()
            .apply_update(delta.as_slice().expect("contiguous"));
        bail!(refresh_trace(&mut trial, cfg.trace_samples, &mut master));

        let record = TraceRecord {
            step: p,
            re_l: bundle.mean_local.re,
            im_l: bundle.mean_local.im,
            std_error_re: bundle.local_std_error.re,
            local_variance: bundle.local_variance(),
            acceptance: bundle.acceptance,
            discard_rate: bundle.discard_rate(),
            step_norm: delta.dot(&delta).sqrt(),
            alpha_re: alpha.re,
            alpha_im: alpha.im,
            trace_re: tr.re,
            trace_im: tr.im,
            epsilon,
            lambda,
            beta,
        };
        log::debug!(
            "step {p}: <L> = {:.6} {:+.6}i, |d| = {:.3e}",
            record.re_l,
            record.im_l,
            record.step_norm
        );
        observer(&record, &trial);
        trace.records.push(record);

        let phase = &trace.records[phase_start..];
        let series: Vec<f64> = if beta > 0.0 {
            phase.iter().map(|r| r.im_l).collect()
        } else {
            phase.iter().map(|r| r.re_l).collect()
        };
        if phase.len() >= cfg.min_iters && has_converged(&series, cfg.window, cfg.tolerance) {
            if two_phase && beta == 0.0 {
                beta = cfg.beta;
                phase_start = trace.records.len();
                trace.beta_start = Some(phase_start);
                log::info!("real-time phase converged at step {p}; enabling beta = {beta}");
            } else {
                trace.converged = true;
                break;
            }
        }
    }
    Ok((trial, trace))
}
