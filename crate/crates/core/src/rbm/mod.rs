//! Restricted Boltzmann machine amplitudes over bi-base configurations and the
//! traceless trial state built from them.
//!
//! The RBM amplitude is
//! `rho(x) = exp(sum_j a_j s_{j,R} + b_j s_{j,L}) * prod_k cosh(theta_k(x))` with
//! `theta_k = c_k + sum_j W^R_{k,j} s_{j,R} + W^L_{k,j} s_{j,L}`. The trial state
//! adds `alpha * rho0` for a fixed ancillary `rho0` so that its trace vanishes.
//!
//! Complex parameters are stored flat as `[v | c | W]`: `v` holds the `2N`
//! visible biases (`a` then `b`), `c` the `M` hidden biases and `W` the couplings
//! in site-major order (`W[s * M + k]`, right sites first). The optimizer sees
//! real and imaginary parts as separate coordinates: the real vector is all real
//! parts followed by all imaginary parts.

pub mod checkpoint;

use rand::Rng;

use crate::model::BiBaseConfig;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `ln cosh z`, evaluated without overflow for large `|Re z|`.
///
/// The imaginary part is only defined modulo `2 pi`.
pub fn ln_cosh(z: C64) -> C64 {
    let z = if z.re < 0.0 { -z } else { z };
    z + (ONE + (-2.0 * z).exp()).ln() - std::f64::consts::LN_2
}

/// `tanh z` without intermediate overflow.
pub fn tanh(z: C64) -> C64 {
    if z.re < 0.0 {
        return -tanh(-z);
    }
    let t = (-2.0 * z).exp();
    (ONE - t) / (ONE + t)
}

/// `ln(e^a + e^b)` for complex logarithms.
pub(crate) fn log_add_exp(a: C64, b: C64) -> C64 {
    if a.re == f64::NEG_INFINITY {
        return b;
    }
    if b.re == f64::NEG_INFINITY {
        return a;
    }
    let m = a.re.max(b.re);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParameters {
    visible: usize,
    hidden: usize,
    params: Vec<C64>,
}

impl RbmParameters {
    pub fn zeros(visible: usize, hidden: usize) -> Result<Self> {
        if visible == 0 || hidden == 0 {
            return Err(Error::InvalidParameters(format!(
                "need at least one visible and one hidden unit, got N={visible}, M={hidden}"
            )));
        }
        let len = Self::complex_len_for(visible, hidden);
        Ok(Self {
            visible,
            hidden,
            params: vec![ZERO; len],
        })
    }

    /// Every complex entry gets real and imaginary parts uniform in `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(
        visible: usize,
        hidden: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "initialization scale must be positive, got {scale}"
            )));
        }
        let mut out = Self::zeros(visible, hidden)?;
        for p in &mut out.params {
            *p = C64::new(
                rng.random_range(-scale..=scale),
                rng.random_range(-scale..=scale),
            );
        }
        Ok(out)
    }

    fn complex_len_for(visible: usize, hidden: usize) -> usize {
        2 * visible + hidden + 2 * visible * hidden
    }

    /// Physical sites `N` (the bi-base configuration has `2N` spins).
    pub fn visible(&self) -> usize {
        self.visible
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Number of complex parameters `2N + M + 2MN`.
    pub fn complex_len(&self) -> usize {
        self.params.len()
    }

    /// Number of real optimizer coordinates, twice [`complex_len`](Self::complex_len).
    pub fn real_len(&self) -> usize {
        2 * self.params.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.params
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.params
    }

    fn w_offset(&self) -> usize {
        2 * self.visible + self.hidden
    }

    /// Visible bias of bi-base site `s` (`a_s` for `s < N`, `b_{s-N}` otherwise).
    pub fn visible_bias(&self, s: usize) -> C64 {
        self.params[s]
    }

    pub fn hidden_bias(&self, k: usize) -> C64 {
        self.params[2 * self.visible + k]
    }

    /// Coupling between bi-base site `s` and hidden unit `k`.
    pub fn weight(&self, s: usize, k: usize) -> C64 {
        self.params[self.w_offset() + s * self.hidden + k]
    }

    pub fn set_visible_bias(&mut self, s: usize, value: C64) {
        self.params[s] = value;
    }

    pub fn set_hidden_bias(&mut self, k: usize, value: C64) {
        let off = 2 * self.visible;
        self.params[off + k] = value;
    }

    pub fn set_weight(&mut self, s: usize, k: usize, value: C64) {
        let off = self.w_offset() + s * self.hidden + k;
        self.params[off] = value;
    }

    fn weights_of(&self, s: usize) -> &[C64] {
        let off = self.w_offset() + s * self.hidden;
        &self.params[off..off + self.hidden]
    }

    pub fn to_real(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.params.iter().map(|p| p.re).collect();
        out.extend(self.params.iter().map(|p| p.im));
        out
    }

    pub fn from_real(visible: usize, hidden: usize, values: &[f64]) -> Result<Self> {
        let mut out = Self::zeros(visible, hidden)?;
        let n = out.params.len();
        if values.len() != 2 * n {
            return Err(Error::InvalidParameters(format!(
                "expected {} real values for N={visible}, M={hidden}, got {}",
                2 * n,
                values.len()
            )));
        }
        for (i, p) in out.params.iter_mut().enumerate() {
            *p = C64::new(values[i], values[n + i]);
        }
        Ok(out)
    }

    /// Adds a step given in real coordinates.
    pub fn apply_update(&mut self, delta: &[f64]) {
        let n = self.params.len();
        assert_eq!(delta.len(), 2 * n, "update length mismatch");
        for (i, p) in self.params.iter_mut().enumerate() {
            *p += C64::new(delta[i], delta[n + i]);
        }
    }

    fn check_len(&self, spins: &[i8]) {
        assert_eq!(spins.len(), 2 * self.visible, "configuration size mismatch");
    }

    /// Hidden-unit arguments `theta_k(x)`.
    pub fn theta(&self, spins: &[i8]) -> Vec<C64> {
        self.check_len(spins);
        let mut theta: Vec<C64> = (0..self.hidden).map(|k| self.hidden_bias(k)).collect();
        for (s, &spin) in spins.iter().enumerate() {
            let sign = f64::from(spin);
            for (t, w) in theta.iter_mut().zip(self.weights_of(s)) {
                *t += w * sign;
            }
        }
        theta
    }

    fn visible_term(&self, spins: &[i8]) -> C64 {
        spins
            .iter()
            .enumerate()
            .map(|(s, &spin)| self.params[s] * f64::from(spin))
            .sum()
    }

    /// `ln rho_RBM(x)`.
    pub fn log_amplitude(&self, x: &BiBaseConfig) -> C64 {
        let theta = self.theta(x.spins());
        self.visible_term(x.spins()) + theta.iter().map(|&t| ln_cosh(t)).sum::<C64>()
    }

    /// Holomorphic derivatives `d ln rho_RBM / d p` for every complex parameter,
    /// written into `out` (length [`complex_len`](Self::complex_len)).
    pub fn complex_log_derivatives(&self, spins: &[i8], theta: &[C64], out: &mut [C64]) {
        let two_n = 2 * self.visible;
        let m = self.hidden;
        for (s, &spin) in spins.iter().enumerate() {
            out[s] = C64::new(f64::from(spin), 0.0);
        }
        let (c_part, w_part) = out[two_n..].split_at_mut(m);
        for (o, &t) in c_part.iter_mut().zip(theta) {
            *o = tanh(t);
        }
        for (s, &spin) in spins.iter().enumerate() {
            let sign = f64::from(spin);
            for k in 0..m {
                w_part[s * m + k] = c_part[k] * sign;
            }
        }
    }
}

/// Cached hidden arguments for one configuration, enabling `O(M * flips)`
/// amplitude ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    theta: Vec<C64>,
    ln_cosh: Vec<C64>,
    visible: C64,
    log_psi: C64,
}

impl LookupTable {
    pub fn new(rbm: &RbmParameters, spins: &[i8]) -> Self {
        let theta = rbm.theta(spins);
        let ln_cosh: Vec<C64> = theta.iter().map(|&t| ln_cosh(t)).collect();
        let visible = rbm.visible_term(spins);
        let log_psi = visible + ln_cosh.iter().sum::<C64>();
        Self {
            theta,
            ln_cosh,
            visible,
            log_psi,
        }
    }

    pub fn theta(&self) -> &[C64] {
        &self.theta
    }

    /// `ln rho_RBM` of the configuration the table was built for.
    pub fn log_psi(&self) -> C64 {
        self.log_psi
    }

    /// `ln(rho_RBM(x') / rho_RBM(x))` where `x'` flips the distinct sites `flips` of `x`.
    pub fn log_ratio(&self, rbm: &RbmParameters, spins: &[i8], flips: &[usize]) -> C64 {
        let mut delta = ZERO;
        for &s in flips {
            delta -= 2.0 * f64::from(spins[s]) * rbm.visible_bias(s);
        }
        for k in 0..self.theta.len() {
            let mut t = self.theta[k];
            for &s in flips {
                t -= 2.0 * f64::from(spins[s]) * rbm.weight(s, k);
            }
            delta += ln_cosh(t) - self.ln_cosh[k];
        }
        delta
    }

    /// Flips the distinct sites `flips` of `spins` and updates the cache in place.
    pub fn apply(&mut self, rbm: &RbmParameters, spins: &mut [i8], flips: &[usize]) {
        let mut delta_visible = ZERO;
        for &s in flips {
            let shift = -2.0 * f64::from(spins[s]);
            delta_visible += shift * rbm.visible_bias(s);
            for (t, w) in self.theta.iter_mut().zip(rbm.weights_of(s)) {
                *t += w * shift;
            }
            spins[s] = -spins[s];
        }
        for (l, &t) in self.ln_cosh.iter_mut().zip(&self.theta) {
            *l = ln_cosh(t);
        }
        self.visible += delta_visible;
        self.log_psi = self.visible + self.ln_cosh.iter().sum::<C64>();
    }
}

/// Sites flipped an odd number of times, in first-occurrence order.
pub(crate) fn odd_flips(flips: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(flips.len());
    for &s in flips {
        match out.iter().position(|&o| o == s) {
            Some(i) => {
                out.remove(i);
            }
            None => out.push(s),
        }
    }
    out
}

/// `rho_RBM(x') / rho_RBM(x)` for `x'` obtained by flipping `flips` in order.
/// Repeated sites cancel in pairs.
pub fn amplitude_ratio(
    rbm: &RbmParameters,
    table: &LookupTable,
    x: &BiBaseConfig,
    flips: &[usize],
) -> C64 {
    let flips = odd_flips(flips);
    if flips.is_empty() {
        return ONE;
    }
    table.log_ratio(rbm, x.spins(), &flips).exp()
}

/// The fixed nonzero-trace matrix subtracted from the RBM state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AncillaryState {
    /// The identity matrix: amplitude 1 on every diagonal configuration.
    Identity,
    /// A single bi-base basis vector.
    Product(BiBaseConfig),
}

impl AncillaryState {
    pub fn all_down(sites: usize) -> Self {
        Self::Product(BiBaseConfig::all_down(sites))
    }

    pub fn contains(&self, spins: &[i8]) -> bool {
        match self {
            Self::Identity => {
                let n = spins.len() / 2;
                spins[..n] == spins[n..]
            }
            Self::Product(x) => x.spins() == spins,
        }
    }

    pub fn amplitude(&self, x: &BiBaseConfig) -> f64 {
        if self.contains(x.spins()) {
            1.0
        } else {
            0.0
        }
    }

    /// Trace of the ancillary matrix on `sites` physical sites.
    pub fn trace(&self, sites: usize) -> f64 {
        match self {
            Self::Identity => 2f64.powi(sites as i32),
            Self::Product(x) => {
                if x.is_diagonal() {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Which log-derivative the optimizer uses for the composite trial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogDerivativeVariant {
    /// `d ln rho'(x)` with `alpha` frozen: the RBM derivative scaled by `rho_RBM / rho'`.
    #[default]
    ChainRule,
    /// The bare RBM derivative, ignoring the ancillary term.
    RbmOnly,
}

/// Traceless trial state `rho' = alpha * rho0 + rho_RBM`.
///
/// `alpha` and the cached trace of `rho_RBM` are kept as complex logarithms so
/// that large RBM amplitudes do not overflow.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialState {
    rbm: RbmParameters,
    ancillary: AncillaryState,
    log_alpha: Option<C64>,
    log_trace: Option<C64>,
    variant: LogDerivativeVariant,
}

impl TrialState {
    /// Starts with `alpha = 0`; call [`refresh_alpha`](Self::refresh_alpha) before use.
    pub fn new(rbm: RbmParameters, ancillary: AncillaryState) -> Result<Self> {
        if let AncillaryState::Product(x) = &ancillary {
            if x.sites() != rbm.visible() {
                return Err(Error::InvalidAncillary(format!(
                    "ancillary has {} sites, RBM has {}",
                    x.sites(),
                    rbm.visible()
                )));
            }
        }
        Ok(Self {
            rbm,
            ancillary,
            log_alpha: None,
            log_trace: None,
            variant: LogDerivativeVariant::default(),
        })
    }

    pub fn with_variant(mut self, variant: LogDerivativeVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn rbm(&self) -> &RbmParameters {
        &self.rbm
    }

    pub fn rbm_mut(&mut self) -> &mut RbmParameters {
        &mut self.rbm
    }

    pub fn ancillary(&self) -> &AncillaryState {
        &self.ancillary
    }

    pub fn variant(&self) -> LogDerivativeVariant {
        self.variant
    }

    pub fn sites(&self) -> usize {
        self.rbm.visible()
    }

    pub fn alpha(&self) -> C64 {
        self.log_alpha.map_or(ZERO, |l| l.exp())
    }

    pub fn log_alpha(&self) -> Option<C64> {
        self.log_alpha
    }

    /// Trace of `rho_RBM` used at the last refresh.
    pub fn trace_estimate(&self) -> C64 {
        self.log_trace.map_or(ZERO, |l| l.exp())
    }

    /// Sets `alpha = -trace / Tr(rho0)`.
    pub fn refresh_alpha(&mut self, trace: C64) -> Result<()> {
        let log = (trace != ZERO).then(|| trace.ln());
        self.refresh_alpha_log(log)
    }

    /// Same as [`refresh_alpha`](Self::refresh_alpha) with the trace given as a
    /// complex logarithm (`None` for a zero trace).
    pub fn refresh_alpha_log(&mut self, log_trace: Option<C64>) -> Result<()> {
        let tr0 = self.ancillary.trace(self.sites());
        if tr0 == 0.0 {
            return Err(Error::InvalidAncillary(
                "ancillary state has zero trace".into(),
            ));
        }
        self.log_trace = log_trace;
        self.log_alpha =
            log_trace.map(|l| l + C64::new(-tr0.ln(), std::f64::consts::PI));
        Ok(())
    }

    /// `ln rho'(x)` given `ln rho_RBM(x)`.
    pub fn combine_log(&self, spins: &[i8], log_psi: C64) -> C64 {
        match self.log_alpha {
            Some(la) if self.ancillary.contains(spins) => log_add_exp(log_psi, la),
            _ => log_psi,
        }
    }

    /// `ln rho'(x)`; the real part is `-inf` where the amplitude vanishes.
    pub fn log_amplitude(&self, x: &BiBaseConfig) -> C64 {
        self.combine_log(x.spins(), self.rbm.log_amplitude(x))
    }

    /// `rho'(x) = alpha * rho0(x) + rho_RBM(x)`.
    pub fn trial_amplitude(&self, x: &BiBaseConfig) -> C64 {
        let l = self.log_amplitude(x);
        if l.re == f64::NEG_INFINITY {
            ZERO
        } else {
            l.exp()
        }
    }

    /// Factor multiplying the RBM log-derivatives at a configuration with the
    /// given `ln rho_RBM` and `ln rho'`.
    pub fn derivative_factor(&self, log_psi: C64, log_rho: C64) -> C64 {
        match self.variant {
            LogDerivativeVariant::RbmOnly => ONE,
            LogDerivativeVariant::ChainRule => (log_psi - log_rho).exp(),
        }
    }

    /// `O_k(x)` for every real coordinate `k` (real parts first, then imaginary).
    pub fn log_derivatives(&self, x: &BiBaseConfig) -> Vec<C64> {
        let theta = self.rbm.theta(x.spins());
        let p = self.rbm.complex_len();
        let mut complex = vec![ZERO; p];
        self.rbm
            .complex_log_derivatives(x.spins(), &theta, &mut complex);
        let log_psi = self.rbm.log_amplitude(x);
        let factor = self.derivative_factor(log_psi, self.combine_log(x.spins(), log_psi));
        let mut out = Vec::with_capacity(2 * p);
        out.extend(complex.iter().map(|&o| o * factor));
        out.extend(complex.iter().map(|&o| C64::i() * o * factor));
        out
    }

    /// Exact trace of `rho_RBM` by summing all `2^N` diagonal amplitudes, as a log.
    pub fn exact_log_trace(&self) -> Option<C64> {
        let n = self.sites();
        let logs: Vec<C64> = (0..1usize << n)
            .map(|l| self.rbm.log_amplitude(&BiBaseConfig::diagonal(n, l)))
            .collect();
        log_sum_exp(&logs)
    }

    /// Dense vector of `rho'` over all `4^N` configurations.
    pub fn densify(&self) -> Vec<C64> {
        let n = self.sites();
        (0..1usize << (2 * n))
            .map(|i| self.trial_amplitude(&BiBaseConfig::from_index(n, i)))
            .collect()
    }
}

/// `ln sum_i exp(l_i)`, or `None` when the sum vanishes.
pub(crate) fn log_sum_exp(logs: &[C64]) -> Option<C64> {
    let m = logs
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return None;
    }
    let sum: C64 = logs.iter().map(|&l| (l - m).exp()).sum();
    (sum != ZERO).then(|| m + sum.ln())
}
