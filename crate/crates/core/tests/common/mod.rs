//! Reference implementations used only by tests. None of these call into the
//! library's own matrix builders or RBM evaluators.

#![allow(dead_code)]

use lgap::sampler::{collect_samples, ChainConfig, ChainSamples};
use lgap::{
    AncillaryState, BiBaseConfig, EstimatorBundle, RbmParameters, TrialState,
    VectorizedLiouvillian, C64,
};
use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| {
        a[[i / br, j / bc]] * b[[i % br, j % bc]]
    })
}

fn identity(d: usize) -> Array2<C64> {
    Array2::from_shape_fn((d, d), |(i, j)| if i == j { ONE } else { ZERO })
}

/// Single-site operator `op` on `site` of `n`, site 0 most significant.
fn embed(op: &Array2<C64>, site: usize, n: usize) -> Array2<C64> {
    let mut out = identity(1);
    for s in 0..n {
        out = if s == site { kron(&out, op) } else { kron(&out, &identity(2)) };
    }
    out
}

/// Local basis: index 0 = down, 1 = up.
pub fn spin_ops() -> [Array2<C64>; 5] {
    let h = 0.5;
    let sx = Array2::from_shape_vec((2, 2), vec![ZERO, C64::new(h, 0.0), C64::new(h, 0.0), ZERO]).unwrap();
    let sy = Array2::from_shape_vec((2, 2), vec![ZERO, C64::new(0.0, h), C64::new(0.0, -h), ZERO]).unwrap();
    let sz = Array2::from_shape_vec((2, 2), vec![C64::new(-h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]).unwrap();
    let sp = Array2::from_shape_vec((2, 2), vec![ZERO, ZERO, ONE, ZERO]).unwrap();
    let sm = Array2::from_shape_vec((2, 2), vec![ZERO, ONE, ZERO, ZERO]).unwrap();
    [sx, sy, sz, sp, sm]
}

/// `H = sum_bonds Jx SxSx + Jy SySy + Jz SzSz` built from Kronecker products.
pub fn kron_hamiltonian(n: usize, bonds: &[(usize, usize)], j: [f64; 3]) -> Array2<C64> {
    let [sx, sy, sz, _, _] = spin_ops();
    let d = 1 << n;
    let mut h = Array2::<C64>::zeros((d, d));
    for &(a, b) in bonds {
        for (op, coupling) in [(&sx, j[0]), (&sy, j[1]), (&sz, j[2])] {
            h = h + embed(op, a, n).dot(&embed(op, b, n)) * coupling;
        }
    }
    h
}

/// Row-major vectorized Lindbladian: `vec(A rho B) = (A (x) B^T) vec(rho)`.
pub fn kron_liouvillian(n: usize, bonds: &[(usize, usize)], j: [f64; 3], gamma: f64) -> Array2<C64> {
    let [_, _, _, sp, sm] = spin_ops();
    let d = 1 << n;
    let h = kron_hamiltonian(n, bonds, j);
    let id = identity(d);
    let mi = C64::new(0.0, -1.0);
    let mut l = (kron(&h, &id) - kron(&id, &h.t().to_owned())) * mi;
    for site in 0..n {
        let lo = embed(&sm, site, n);
        let up = embed(&sp, site, n);
        let n_up = up.dot(&lo);
        let jump = kron(&lo, &up.t().to_owned()) * C64::new(gamma, 0.0);
        let anti = (kron(&n_up, &id) + kron(&id, &n_up.t().to_owned())) * C64::new(-gamma / 2.0, 0.0);
        l = l + jump + anti;
    }
    l
}

/// `rho_RBM(x)` evaluated directly as a product, without logarithms.
pub fn rbm_direct(rbm: &RbmParameters, spins: &[i8]) -> C64 {
    let mut visible = ZERO;
    for (s, &x) in spins.iter().enumerate() {
        visible += rbm.visible_bias(s) * f64::from(x);
    }
    let mut out = visible.exp();
    for k in 0..rbm.hidden() {
        let mut theta = rbm.hidden_bias(k);
        for (s, &x) in spins.iter().enumerate() {
            theta += rbm.weight(s, k) * f64::from(x);
        }
        out *= theta.cosh();
    }
    out
}

/// `rho'(x) = alpha rho0(x) + rho_RBM(x)` with a given `alpha`.
pub fn trial_direct(rbm: &RbmParameters, ancillary: &AncillaryState, alpha: C64, spins: &[i8]) -> C64 {
    let x = BiBaseConfig::new(spins.to_vec()).unwrap();
    rbm_direct(rbm, spins) + alpha * ancillary.amplitude(&x)
}

/// Central finite differences of `ln rho'` along every real coordinate, with `alpha`
/// frozen. Returned in the library's real ordering (real parts, then imaginary).
pub fn finite_difference_log_derivatives(trial: &TrialState, spins: &[i8], h: f64) -> Vec<C64> {
    let rbm = trial.rbm();
    let alpha = trial.alpha();
    let anc = trial.ancillary();
    let base = trial_direct(rbm, anc, alpha, spins);
    let real = rbm.to_real();
    (0..real.len())
        .map(|k| {
            let mut plus = real.clone();
            let mut minus = real.clone();
            plus[k] += h;
            minus[k] -= h;
            let rp = RbmParameters::from_real(rbm.visible(), rbm.hidden(), &plus).unwrap();
            let rm = RbmParameters::from_real(rbm.visible(), rbm.hidden(), &minus).unwrap();
            (trial_direct(&rp, anc, alpha, spins) - trial_direct(&rm, anc, alpha, spins)) / (2.0 * h * base)
        })
        .collect()
}

/// Exact trace of `rho_RBM` by direct summation over diagonal configurations.
pub fn direct_trace(rbm: &RbmParameters) -> C64 {
    let n = rbm.visible();
    (0..1usize << n)
        .map(|l| rbm_direct(rbm, BiBaseConfig::diagonal(n, l).spins()))
        .sum()
}

/// Random trial state with `alpha` set from the directly summed trace.
pub fn random_trial(sites: usize, hidden: usize, scale: f64, ancillary: AncillaryState, seed: u64) -> TrialState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rbm = RbmParameters::random(sites, hidden, scale, &mut rng).unwrap();
    let trace = direct_trace(&rbm);
    let mut trial = TrialState::new(rbm, ancillary).unwrap();
    trial.refresh_alpha(trace).unwrap();
    trial
}

/// Largest elementwise difference of two matrices.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Greedy matching distance between two eigenvalue lists.
pub fn multiset_match(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// Deterministic unit-modulus weights for projecting a vector estimator to a scalar.
pub fn projection(len: usize, salt: u64) -> Vec<C64> {
    (0..len)
        .map(|i| {
            let t = 0.7 * (i as f64 + 1.0) + 1.3 * salt as f64;
            C64::from_polar(1.0 / (len as f64).sqrt(), t)
        })
        .collect()
}

/// One scalar summary per estimator family:
/// `<L>`, `<O>`, `<O^dag O>`, `<O^dag L>`, `<L^dag O>`.
pub fn family_scalars(b: &EstimatorBundle) -> [C64; 5] {
    let o = b.mean_o_real();
    let s = b.second_moments_real();
    let c = b.cross_real();
    let cd = b.cross_dagger_real();
    let n = o.len();
    let u = projection(n, 1);
    let v = projection(n, 2);
    let p_o: C64 = o.iter().zip(&u).map(|(a, w)| a * w).sum();
    let p_s: C64 = s
        .indexed_iter()
        .map(|((i, j), x)| u[i].conj() * x * v[j])
        .sum();
    let p_c: C64 = c.iter().zip(&v).map(|(a, w)| a * w).sum();
    let p_cd: C64 = cd.iter().zip(&u).map(|(a, w)| a * w).sum();
    [b.mean_local, p_o, p_s, p_c, p_cd]
}

pub const FAMILY_NAMES: [&str; 5] = ["<L>", "<O>", "<O^dag O>", "<O^dag L>", "<L^dag O>"];

/// Per-family z-scores of one Monte Carlo run against exact summation, with the
/// standard error taken from batch means over consecutive slices.
pub fn unbiasedness_zscores(
    trial: &TrialState,
    liouv: &VectorizedLiouvillian,
    exact: &[C64; 5],
    cfg: &ChainConfig,
    batches: usize,
) -> [f64; 5] {
    let chains = collect_samples(trial, liouv, cfg).unwrap();
    let all = EstimatorBundle::from_chains(&chains).unwrap();
    let mean = family_scalars(&all);
    let mut batch_values: Vec<[C64; 5]> = Vec::new();
    for c in &chains {
        let len = c.len() / batches;
        for b in 0..batches {
            let part: ChainSamples = c.slice(b * len..(b + 1) * len);
            batch_values.push(family_scalars(&EstimatorBundle::from_chains(&[part]).unwrap()));
        }
    }
    let nb = batch_values.len() as f64;
    let mut z = [0.0; 5];
    for f in 0..5 {
        let avg: C64 = batch_values.iter().map(|v| v[f]).sum::<C64>() / nb;
        let var_re = batch_values.iter().map(|v| (v[f].re - avg.re).powi(2)).sum::<f64>() / (nb - 1.0);
        let var_im = batch_values.iter().map(|v| (v[f].im - avg.im).powi(2)).sum::<f64>() / (nb - 1.0);
        let se = ((var_re + var_im) / nb).sqrt();
        let dev = (mean[f] - exact[f]).norm();
        z[f] = if se > 0.0 { dev / se } else if dev < 1e-12 { 0.0 } else { f64::INFINITY };
    }
    z
}

/// Exact family scalars by summing over every configuration.
pub fn exact_family_scalars(trial: &TrialState, liouv: &VectorizedLiouvillian) -> [C64; 5] {
    let cfg = ChainConfig {
        exact: true,
        ..Default::default()
    };
    let chains = collect_samples(trial, liouv, &cfg).unwrap();
    family_scalars(&EstimatorBundle::from_chains(&chains).unwrap())
}

/// Stationarity residual `max |pi P - pi|` and detailed-balance residual
/// `max |pi_i P_ij - pi_j P_ji|` of a row-stochastic transition matrix.
pub fn balance_residuals(p: &[Vec<f64>], pi: &[f64]) -> (f64, f64) {
    let d = pi.len();
    let mut stat = 0.0f64;
    let mut detailed = 0.0f64;
    for j in 0..d {
        let flow: f64 = (0..d).map(|i| pi[i] * p[i][j]).sum();
        stat = stat.max((flow - pi[j]).abs());
        for i in 0..d {
            detailed = detailed.max((pi[i] * p[i][j] - pi[j] * p[j][i]).abs());
        }
    }
    (stat, detailed)
}

/// `|rho'(x)|^2` over all configurations, normalized.
pub fn stationary_weights(trial: &TrialState) -> Vec<f64> {
    let n = trial.sites();
    let alpha = trial.alpha();
    let w: Vec<f64> = (0..1usize << (2 * n))
        .map(|i| {
            let x = BiBaseConfig::from_index(n, i);
            trial_direct(trial.rbm(), trial.ancillary(), alpha, x.spins()).norm_sqr()
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Row sums of a matrix, used to check stochasticity.
pub fn row_sums(p: &[Vec<f64>]) -> Vec<f64> {
    p.iter().map(|r| r.iter().sum()).collect()
}

/// Column `k` of a dense matrix as a vector.
pub fn column(m: &Array2<C64>, k: usize) -> Vec<C64> {
    m.index_axis(Axis(1), k).to_vec()
}
