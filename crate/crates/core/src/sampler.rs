//! Metropolis sampling of `|rho'(x)|^2` over bi-base configurations and the
//! Monte Carlo estimators consumed by the optimizer.
//!
//! A chain records one sample every `sweep` Metropolis steps; the first
//! `ceil(burn_in * samples)` records are dropped. Chain `c` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `c`, so results depend
//! only on the seed and the chain count. Chains run on the rayon pool and are
//! merged in chain order.
//!
//! All five estimator families (`<L>`, `<O>`, `<O^* O>`, `<O^* L>` and the RBM
//! trace) are stored in complex-parameter form; the real-coordinate versions
//! used by the optimizer follow from `O_{Im p} = i O_{Re p}`.

use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{BiBaseConfig, Connection, VectorizedLiouvillian};
use crate::rbm::{log_sum_exp, LookupTable, RbmParameters, TrialState};
use crate::{Error, Result, C64};

/// Samples whose `|rho'(x)|` falls below this are discarded.
pub const UNDERFLOW_FLOOR: f64 = 1e-150;

/// Largest system accepted by exact summation (`4^N` terms).
pub const MAX_EXACT_SITES: usize = 6;

const STAGNATION_RATE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    /// Recorded samples per chain, burn-in included.
    pub samples: usize,
    /// Fraction of each chain's records dropped as burn-in.
    pub burn_in: f64,
    pub chains: usize,
    pub seed: u64,
    /// Largest number of sites flipped by one proposal.
    pub max_flips: usize,
    /// Metropolis steps between consecutive records.
    pub sweep: usize,
    /// Replace sampling by a weighted sum over all `4^N` configurations.
    pub exact: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            burn_in: 0.05,
            chains: 1,
            seed: 0,
            max_flips: 4,
            sweep: 1,
            exact: false,
        }
    }
}

impl ChainConfig {
    pub fn burn_in_count(&self) -> usize {
        (self.burn_in * self.samples as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidConfig(format!(
                "burn-in fraction must lie in [0, 1), got {}",
                self.burn_in
            )));
        }
        if self.chains == 0 || self.sweep == 0 || self.max_flips == 0 {
            return Err(Error::InvalidConfig(
                "chains, sweep and max_flips must be positive".into(),
            ));
        }
        if !self.exact && self.samples <= self.burn_in_count() {
            return Err(Error::EmptyChain {
                samples: self.samples,
                burn_in: self.burn_in_count(),
            });
        }
        Ok(())
    }
}

/// Draws a proposal: a flip count uniform on `1..=min(max_flips, len)` and that
/// many distinct sites uniform over the `len` bi-base sites.
pub fn propose<R: Rng + ?Sized>(len: usize, max_flips: usize, rng: &mut R, out: &mut Vec<usize>) {
    let k = rng.random_range(1..=max_flips.min(len));
    out.clear();
    out.extend(index::sample(rng, len, k));
}

/// Probability that [`propose`] moves between two configurations at Hamming distance `distance`.
pub fn proposal_probability(len: usize, max_flips: usize, distance: usize) -> f64 {
    let kmax = max_flips.min(len);
    if distance == 0 || distance > kmax {
        return 0.0;
    }
    let mut binom = 1.0;
    for i in 0..distance {
        binom = binom * (len - i) as f64 / (i + 1) as f64;
    }
    1.0 / (kmax as f64 * binom)
}

/// `min(1, |rho'(to) / rho'(from)|^2)` from the two log amplitudes.
pub fn acceptance_probability(log_from: C64, log_to: C64) -> f64 {
    if log_from.re == f64::NEG_INFINITY {
        return 1.0;
    }
    let a = (2.0 * (log_to.re - log_from.re)).exp();
    if a.is_nan() {
        1.0
    } else {
        a.min(1.0)
    }
}

/// `ln rho'` after flipping `flips` in `spins`, using the table of the unflipped state.
/// `scratch` is left equal to `spins`.
fn log_after_flips(
    trial: &TrialState,
    table: &LookupTable,
    spins: &[i8],
    flips: &[usize],
    scratch: &mut Vec<i8>,
) -> C64 {
    let log_psi = table.log_psi() + table.log_ratio(trial.rbm(), spins, flips);
    if trial.log_alpha().is_none() {
        return log_psi;
    }
    scratch.clear();
    scratch.extend_from_slice(spins);
    for &s in flips {
        scratch[s] = -scratch[s];
    }
    trial.combine_log(scratch, log_psi)
}

/// One Metropolis-Hastings step. Returns whether the proposal was accepted;
/// `x` and `table` are updated in place on acceptance.
pub fn metropolis_step<R: Rng + ?Sized>(
    trial: &TrialState,
    table: &mut LookupTable,
    x: &mut BiBaseConfig,
    max_flips: usize,
    rng: &mut R,
) -> bool {
    let mut flips = Vec::with_capacity(max_flips);
    let mut scratch = Vec::new();
    step(trial, table, x, max_flips, rng, &mut flips, &mut scratch)
}

fn step<R: Rng + ?Sized>(
    trial: &TrialState,
    table: &mut LookupTable,
    x: &mut BiBaseConfig,
    max_flips: usize,
    rng: &mut R,
    flips: &mut Vec<usize>,
    scratch: &mut Vec<i8>,
) -> bool {
    propose(x.spins().len(), max_flips, rng, flips);
    let log_from = trial.combine_log(x.spins(), table.log_psi());
    let log_to = log_after_flips(trial, table, x.spins(), flips, scratch);
    let a = acceptance_probability(log_from, log_to);
    let accept = a >= 1.0 || rng.random::<f64>() < a;
    if accept {
        table.apply(trial.rbm(), x.spins_mut(), flips);
    }
    accept
}

/// Dense Metropolis transition matrix over all `4^N` configurations
/// (`P[x][x']`, rows sum to one), using the same proposal and acceptance rules
/// as the sampler.
pub fn transition_matrix(trial: &TrialState, max_flips: usize) -> Vec<Vec<f64>> {
    let n = trial.sites();
    let dim = 1usize << (2 * n);
    let logs: Vec<C64> = (0..dim)
        .map(|i| trial.log_amplitude(&BiBaseConfig::from_index(n, i)))
        .collect();
    let mut p = vec![vec![0.0; dim]; dim];
    for x in 0..dim {
        let mut off = 0.0;
        for y in 0..dim {
            if y == x {
                continue;
            }
            let q = proposal_probability(2 * n, max_flips, (x ^ y).count_ones() as usize);
            if q > 0.0 {
                let v = q * acceptance_probability(logs[x], logs[y]);
                p[x][y] = v;
                off += v;
            }
        }
        p[x][x] = 1.0 - off;
    }
    p
}

fn local_value(
    trial: &TrialState,
    liouvillian: &VectorizedLiouvillian,
    table: &LookupTable,
    spins: &[i8],
    log_rho: C64,
    elems: &mut Vec<Connection>,
    scratch: &mut Vec<i8>,
) -> C64 {
    liouvillian.row_elements(spins, elems);
    let mut total = C64::new(0.0, 0.0);
    for c in elems.iter() {
        match c.flips {
            None => total += c.amplitude,
            Some((i, j)) => {
                let log_to = log_after_flips(trial, table, spins, &[i, j], scratch);
                total += c.amplitude * (log_to - log_rho).exp();
            }
        }
    }
    total
}

/// `L_loc(x) = sum_x' <x|L|x'> rho'(x') / rho'(x)`.
pub fn local_liouvillian(
    trial: &TrialState,
    liouvillian: &VectorizedLiouvillian,
    x: &BiBaseConfig,
) -> Result<C64> {
    let table = LookupTable::new(trial.rbm(), x.spins());
    let log_rho = trial.combine_log(x.spins(), table.log_psi());
    if !(log_rho.re >= UNDERFLOW_FLOOR.ln()) {
        return Err(Error::AllSamplesDiscarded);
    }
    Ok(local_value(
        trial,
        liouvillian,
        &table,
        x.spins(),
        log_rho,
        &mut Vec::new(),
        &mut Vec::new(),
    ))
}

/// Retained records of one chain, or of an exact enumeration.
#[derive(Debug, Clone, Default)]
pub struct ChainSamples {
    /// Number of complex parameters per `o` row.
    pub params: usize,
    /// Bi-base configurations, `2N` spins per record.
    pub spins: Vec<i8>,
    /// Complex-parameter log-derivatives, `params` per record.
    pub o: Vec<C64>,
    /// Local Liouvillian per record.
    pub local: Vec<C64>,
    /// Unnormalized record weights; `None` means uniform.
    pub weights: Option<Vec<f64>>,
    pub accepted: usize,
    pub proposed: usize,
    pub discarded: usize,
}

impl ChainSamples {
    pub fn len(&self) -> usize {
        self.local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Records `range` of this chain as a new sample set (weights kept).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let two_n = if self.is_empty() {
            0
        } else {
            self.spins.len() / self.len()
        };
        Self {
            params: self.params,
            spins: self.spins[range.start * two_n..range.end * two_n].to_vec(),
            o: self.o[range.start * self.params..range.end * self.params].to_vec(),
            local: self.local[range.clone()].to_vec(),
            weights: self.weights.as_ref().map(|w| w[range].to_vec()),
            accepted: 0,
            proposed: 0,
            discarded: 0,
        }
    }

    fn record(
        &mut self,
        trial: &TrialState,
        liouvillian: &VectorizedLiouvillian,
        table: &LookupTable,
        spins: &[i8],
        log_rho: C64,
        elems: &mut Vec<Connection>,
        scratch: &mut Vec<i8>,
    ) {
        let l = local_value(trial, liouvillian, table, spins, log_rho, elems, scratch);
        let start = self.o.len();
        self.o.resize(start + self.params, C64::new(0.0, 0.0));
        let row = &mut self.o[start..];
        trial
            .rbm()
            .complex_log_derivatives(spins, table.theta(), row);
        let factor = trial.derivative_factor(table.log_psi(), log_rho);
        if factor != C64::new(1.0, 0.0) {
            for v in row.iter_mut() {
                *v *= factor;
            }
        }
        self.spins.extend_from_slice(spins);
        self.local.push(l);
    }
}

fn random_spins<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<i8> {
    (0..len)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect()
}

/// Per-chain random stream.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

fn run_chain(
    trial: &TrialState,
    liouvillian: &VectorizedLiouvillian,
    cfg: &ChainConfig,
    chain: usize,
) -> ChainSamples {
    let mut rng = chain_rng(cfg.seed, chain);
    let len = 2 * trial.sites();
    let mut x = BiBaseConfig::new(random_spins(len, &mut rng)).expect("valid spins");
    let mut table = LookupTable::new(trial.rbm(), x.spins());
    let burn = cfg.burn_in_count();
    let floor = UNDERFLOW_FLOOR.ln();
    let mut out = ChainSamples {
        params: trial.rbm().complex_len(),
        ..Default::default()
    };
    let mut flips = Vec::with_capacity(cfg.max_flips);
    let mut scratch = Vec::with_capacity(len);
    let mut elems = Vec::new();
    for s in 0..cfg.samples {
        for _ in 0..cfg.sweep {
            out.proposed += 1;
            if step(
                trial,
                &mut table,
                &mut x,
                cfg.max_flips,
                &mut rng,
                &mut flips,
                &mut scratch,
            ) {
                out.accepted += 1;
            }
        }
        if s < burn {
            continue;
        }
        let log_rho = trial.combine_log(x.spins(), table.log_psi());
        if !(log_rho.re >= floor) {
            out.discarded += 1;
            continue;
        }
        out.record(
            trial,
            liouvillian,
            &table,
            x.spins(),
            log_rho,
            &mut elems,
            &mut scratch,
        );
    }
    out
}

/// Every configuration with weight `|rho'(x)|^2`.
pub fn exact_samples(
    trial: &TrialState,
    liouvillian: &VectorizedLiouvillian,
) -> Result<ChainSamples> {
    let n = trial.sites();
    if n > MAX_EXACT_SITES {
        return Err(Error::Capacity {
            sites: n,
            max: MAX_EXACT_SITES,
        });
    }
    let dim = 1usize << (2 * n);
    let mut tables = Vec::with_capacity(dim);
    let mut logs = Vec::with_capacity(dim);
    for i in 0..dim {
        let x = BiBaseConfig::from_index(n, i);
        let table = LookupTable::new(trial.rbm(), x.spins());
        logs.push(trial.combine_log(x.spins(), table.log_psi()));
        tables.push((x, table));
    }
    let top = logs
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::AllSamplesDiscarded);
    }
    let mut out = ChainSamples {
        params: trial.rbm().complex_len(),
        weights: Some(Vec::new()),
        ..Default::default()
    };
    let floor = UNDERFLOW_FLOOR.ln();
    let mut elems = Vec::new();
    let mut scratch = Vec::new();
    for ((x, table), log_rho) in tables.iter().zip(&logs) {
        if !(log_rho.re >= floor) {
            out.discarded += 1;
            continue;
        }
        let w = (2.0 * (log_rho.re - top)).exp();
        if w == 0.0 {
            continue;
        }
        out.record(
            trial,
            liouvillian,
            table,
            x.spins(),
            *log_rho,
            &mut elems,
            &mut scratch,
        );
        out.weights.as_mut().expect("weights").push(w);
    }
    Ok(out)
}

/// Runs every chain (or the exact enumeration) and returns the raw records.
pub fn collect_samples(
    trial: &TrialState,
    liouvillian: &VectorizedLiouvillian,
    cfg: &ChainConfig,
) -> Result<Vec<ChainSamples>> {
    cfg.validate()?;
    if liouvillian.sites() != trial.sites() {
        return Err(Error::InvalidParameters(format!(
            "Liouvillian has {} sites, trial state {}",
            liouvillian.sites(),
            trial.sites()
        )));
    }
    if cfg.exact {
        return Ok(vec![exact_samples(trial, liouvillian)?]);
    }
    let budget = cfg.chains * (cfg.samples - cfg.burn_in_count());
    if budget < 10 * trial.rbm().real_len() {
        log::debug!(
            "{budget} retained samples for {} real parameters",
            trial.rbm().real_len()
        );
    }
    Ok((0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(trial, liouvillian, cfg, c))
        .collect())
}

/// Sampling and estimation in one call.
pub fn run_estimation(
    trial: &TrialState,
    liouvillian: &VectorizedLiouvillian,
    cfg: &ChainConfig,
) -> Result<EstimatorBundle> {
    let chains = collect_samples(trial, liouvillian, cfg)?;
    let bundle = EstimatorBundle::from_chains(&chains)?;
    if bundle.stagnant {
        log::warn!(
            "Metropolis acceptance below {STAGNATION_RATE} (rate {:.4})",
            bundle.acceptance
        );
    }
    Ok(bundle)
}

/// Monte Carlo (or exact) averages over `|rho'|^2`.
#[derive(Debug, Clone)]
pub struct EstimatorBundle {
    /// Number of complex parameters `P`.
    pub params: usize,
    /// `<L_loc>`.
    pub mean_local: C64,
    /// `<|L_loc|^2>`.
    pub mean_local_sq: f64,
    /// `<o_p>` for every complex parameter.
    pub mean_o: Vec<C64>,
    /// `<o_p^* o_q>`, Hermitian.
    pub gram: Array2<C64>,
    /// `<o_p^* L_loc>`.
    pub cross: Vec<C64>,
    /// Retained records.
    pub samples: usize,
    pub discarded: usize,
    pub acceptance: f64,
    /// Some chain accepted fewer than 1% of its proposals.
    pub stagnant: bool,
    /// Batch-means standard error of the real and imaginary parts of `<L_loc>`.
    pub local_std_error: C64,
}

impl EstimatorBundle {
    pub fn from_chains(chains: &[ChainSamples]) -> Result<Self> {
        let params = chains.first().map_or(0, |c| c.params);
        let n: usize = chains.iter().map(ChainSamples::len).sum();
        let discarded: usize = chains.iter().map(|c| c.discarded).sum();
        if n == 0 {
            return Err(Error::AllSamplesDiscarded);
        }
        let mut weights = Vec::with_capacity(n);
        for c in chains {
            match &c.weights {
                Some(w) => weights.extend_from_slice(w),
                None => weights.extend(std::iter::repeat_n(1.0, c.len())),
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }

        let mut x = Array2::<f64>::zeros((n, 2 * params));
        let mut mean_o = vec![C64::new(0.0, 0.0); params];
        let mut cross = vec![C64::new(0.0, 0.0); params];
        let mut mean_local = C64::new(0.0, 0.0);
        let mut mean_local_sq = 0.0;
        let mut row_index = 0;
        for c in chains {
            for (i, &l) in c.local.iter().enumerate() {
                let w = weights[row_index];
                let sw = w.sqrt();
                let o = &c.o[i * params..(i + 1) * params];
                let mut row = x.row_mut(row_index);
                for (p, &v) in o.iter().enumerate() {
                    row[p] = sw * v.re;
                    row[params + p] = sw * v.im;
                    mean_o[p] += w * v;
                    cross[p] += w * v.conj() * l;
                }
                mean_local += w * l;
                mean_local_sq += w * l.norm_sqr();
                row_index += 1;
            }
        }
        let xtx = x.t().dot(&x);
        let mut gram = Array2::<C64>::zeros((params, params));
        for p in 0..params {
            for q in 0..params {
                let re = xtx[[p, q]] + xtx[[params + p, params + q]];
                let im = xtx[[p, params + q]] - xtx[[params + p, q]];
                gram[[p, q]] = C64::new(re, im);
            }
        }
        for p in 0..params {
            gram[[p, p]].im = 0.0;
            for q in p + 1..params {
                let v = 0.5 * (gram[[p, q]] + gram[[q, p]].conj());
                gram[[p, q]] = v;
                gram[[q, p]] = v.conj();
            }
        }

        let accepted: usize = chains.iter().map(|c| c.accepted).sum();
        let proposed: usize = chains.iter().map(|c| c.proposed).sum();
        let acceptance = if proposed == 0 {
            1.0
        } else {
            accepted as f64 / proposed as f64
        };
        let stagnant = chains
            .iter()
            .any(|c| c.proposed > 0 && c.acceptance_rate() < STAGNATION_RATE);
        Ok(Self {
            params,
            mean_local,
            mean_local_sq,
            mean_o,
            gram,
            cross,
            samples: n,
            discarded,
            acceptance,
            stagnant,
            local_std_error: batch_std_error(chains),
        })
    }

    /// Number of real coordinates `2P`.
    pub fn real_len(&self) -> usize {
        2 * self.params
    }

    pub fn discard_rate(&self) -> f64 {
        let total = self.samples + self.discarded;
        if total == 0 {
            0.0
        } else {
            self.discarded as f64 / total as f64
        }
    }

    /// Sample variance of `L_loc`; zero when the trial is an exact eigenvector.
    pub fn local_variance(&self) -> f64 {
        (self.mean_local_sq - self.mean_local.norm_sqr()).max(0.0)
    }

    fn unit(&self, k: usize) -> (usize, C64) {
        if k < self.params {
            (k, C64::new(1.0, 0.0))
        } else {
            (k - self.params, C64::i())
        }
    }

    /// `<O_k>` over real coordinates.
    pub fn mean_o_real(&self) -> Vec<C64> {
        (0..self.real_len())
            .map(|k| {
                let (p, u) = self.unit(k);
                u * self.mean_o[p]
            })
            .collect()
    }

    /// `<O_k^* O_k'>` over real coordinates.
    pub fn second_moments_real(&self) -> Array2<C64> {
        let r = self.real_len();
        Array2::from_shape_fn((r, r), |(k, l)| {
            let (p, u) = self.unit(k);
            let (q, v) = self.unit(l);
            u.conj() * v * self.gram[[p, q]]
        })
    }

    /// `<O_k^* L_loc>` over real coordinates.
    pub fn cross_real(&self) -> Vec<C64> {
        (0..self.real_len())
            .map(|k| {
                let (p, u) = self.unit(k);
                u.conj() * self.cross[p]
            })
            .collect()
    }

    /// `<L_loc^* O_k>` over real coordinates.
    pub fn cross_dagger_real(&self) -> Vec<C64> {
        self.cross_real().iter().map(|c| c.conj()).collect()
    }
}

fn batch_std_error(chains: &[ChainSamples]) -> C64 {
    const BATCHES: usize = 10;
    let mut means = Vec::new();
    for c in chains {
        if c.weights.is_some() {
            return C64::new(0.0, 0.0);
        }
        let n = c.len();
        let b = BATCHES.min(n);
        if b == 0 {
            continue;
        }
        for i in 0..b {
            let part = &c.local[i * n / b..(i + 1) * n / b];
            if !part.is_empty() {
                means.push(part.iter().sum::<C64>() / part.len() as f64);
            }
        }
    }
    let k = means.len();
    if k < 2 {
        return C64::new(f64::NAN, f64::NAN);
    }
    let mean: C64 = means.iter().sum::<C64>() / k as f64;
    let (vr, vi) = means.iter().fold((0.0, 0.0), |(r, i), m| {
        (r + (m.re - mean.re).powi(2), i + (m.im - mean.im).powi(2))
    });
    let scale = 1.0 / ((k - 1) as f64 * k as f64);
    C64::new((vr * scale).sqrt(), (vi * scale).sqrt())
}

/// Estimate of `Tr(rho_RBM)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEstimate {
    /// Complex logarithm of the trace; `None` if it vanishes.
    pub log_value: Option<C64>,
    /// Standard error of the trace itself (zero for exhaustive sums).
    pub std_error: f64,
}

impl TraceEstimate {
    pub fn value(&self) -> C64 {
        self.log_value.map_or(C64::new(0.0, 0.0), |l| l.exp())
    }
}

/// `2^N` times the mean diagonal amplitude over `samples` uniform draws.
pub fn estimate_trace<R: Rng + ?Sized>(
    rbm: &RbmParameters,
    samples: usize,
    rng: &mut R,
) -> Result<TraceEstimate> {
    if samples == 0 {
        return Err(Error::InvalidConfig("trace sample count must be positive".into()));
    }
    let n = rbm.visible();
    let logs: Vec<C64> = (0..samples)
        .map(|_| {
            let l = rng.random_range(0..1usize << n);
            rbm.log_amplitude(&BiBaseConfig::diagonal(n, l))
        })
        .collect();
    let scale = (n as f64) * std::f64::consts::LN_2 - (samples as f64).ln();
    let log_value = log_sum_exp(&logs).map(|l| l + scale);
    let std_error = match log_value {
        Some(lv) if samples > 1 => {
            // Spread of the scaled draws about their mean, in a frame shifted by the mean.
            let shift = lv.re;
            let mean = (lv - shift).exp();
            let per = (n as f64) * std::f64::consts::LN_2 - shift;
            let var: f64 = logs
                .iter()
                .map(|&l| ((l + per).exp() - mean).norm_sqr())
                .sum::<f64>()
                / (samples - 1) as f64;
            (var / samples as f64).sqrt() * shift.exp()
        }
        _ => 0.0,
    };
    Ok(TraceEstimate {
        log_value,
        std_error,
    })
}

/// Exhaustive sum over all `2^N` diagonal configurations.
pub fn exact_trace(rbm: &RbmParameters) -> TraceEstimate {
    let n = rbm.visible();
    let logs: Vec<C64> = (0..1usize << n)
        .map(|l| rbm.log_amplitude(&BiBaseConfig::diagonal(n, l)))
        .collect();
    TraceEstimate {
        log_value: log_sum_exp(&logs),
        std_error: 0.0,
    }
}
