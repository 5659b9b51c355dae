//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use common::{
    balance_residuals, exact_family_scalars, finite_difference_log_derivatives, kron_hamiltonian,
    kron_liouvillian, multiset_match, random_trial, stationary_weights, unbiasedness_zscores,
    FAMILY_NAMES,
};
use lgap::analytic::{
    bethe_energy, meanfield_steady_state, reference_energy, solve_bethe_m1, solve_bethe_m2,
    Branch, MeanFieldPhase,
};
use lgap::exact::{coincidence_check, dense_liouvillian, eigenvalues, full_spectrum, subspace_fidelity};
use lgap::optimizer::{gap_estimate, run, BetaMode, OptimizerConfig};
use lgap::sampler::{transition_matrix, ChainConfig};
use lgap::{
    AncillaryState, BiBaseConfig, Boundary, Lattice, LindbladModel, RbmParameters, TrialState, C64,
};
use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = fn() -> Result<String, String>;

fn check(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn chain(n: usize) -> Lattice {
    Lattice::chain(n, Boundary::Periodic).unwrap()
}

fn ed_gap(model: &LindbladModel) -> f64 {
    full_spectrum(&dense_liouvillian(&model.vectorize()).unwrap()).unwrap().gap
}

fn xxz_analytic_gap() -> Result<String, String> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in [2, 3, 4] {
        for jz in [0.5, 2.0] {
            for gamma in [1.0, 3.0] {
                let model = LindbladModel::xxz(chain(n), 1.0, jz, gamma).unwrap();
                worst = worst.max((ed_gap(&model) - gamma / 2.0).abs());
                cases += 1;
            }
        }
    }
    let square = LindbladModel::xxz(Lattice::square(2, 2, Boundary::Periodic).unwrap(), 1.0, 2.0, 3.0).unwrap();
    let square_dev = (ed_gap(&square) - 1.5).abs();
    worst = worst.max(square_dev);
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-8 && secs < 60.0,
        format!("{cases} chains + 2x2 square, max |gap - gamma/2| = {worst:.2e}, {secs:.1}s"),
    )
}

fn xxz_real_part_quantization() -> Result<String, String> {
    let mut worst = 0.0f64;
    for (j, jz, gamma) in [(1.0, 2.0, 3.0), (0.7, -1.3, 1.0)] {
        let model = LindbladModel::xxz(chain(3), j, jz, gamma).unwrap();
        for v in eigenvalues(&dense_liouvillian(&model.vectorize()).unwrap()).unwrap() {
            let d = (0..=6)
                .map(|m| (v.re + gamma / 2.0 * m as f64).abs())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    check(worst < 1e-8, format!("max distance to -(gamma/2)m = {worst:.2e}"))
}

/// `H_NH = -i H - (gamma/2) sum_j n_j` from Kronecker products.
fn kron_effective_hamiltonian(n: usize, bonds: &[(usize, usize)], j: [f64; 3], gamma: f64) -> Array2<C64> {
    let h = kron_hamiltonian(n, bonds, j);
    let d = 1usize << n;
    Array2::from_shape_fn((d, d), |(a, b)| {
        let mut v = C64::new(0.0, -1.0) * h[[a, b]];
        if a == b {
            v -= gamma / 2.0 * a.count_ones() as f64;
        }
        v
    })
}

fn spectral_coincidence() -> Result<String, String> {
    let mut worst_lib = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (j, jz, gamma) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.1..3.0));
        let lattice = chain(3);
        let model = LindbladModel::xxz(lattice.clone(), j, jz, gamma).unwrap();
        worst_lib = worst_lib.max(coincidence_check(&model).unwrap().max_deviation);

        let l = kron_liouvillian(3, lattice.bonds(), [j, j, jz], gamma);
        let hnh = kron_effective_hamiltonian(3, lattice.bonds(), [j, j, jz], gamma);
        let e = eigenvalues(&hnh).unwrap();
        let coherent: Vec<C64> = e.iter().flat_map(|a| e.iter().map(move |b| a + b.conj())).collect();
        worst_oracle = worst_oracle.max(multiset_match(&eigenvalues(&l).unwrap(), &coherent));
    }
    check(
        worst_lib < 1e-8 && worst_oracle < 1e-8,
        format!("5 seeds, max deviation {worst_lib:.2e} (library), {worst_oracle:.2e} (oracle)"),
    )
}

/// Eigenvalues of `H_NH` restricted to `m` up spins, from a dense Kronecker `H`.
fn sector_energies(n: usize, bonds: &[(usize, usize)], j: [f64; 3], gamma: f64, m: usize) -> Vec<C64> {
    let h = kron_hamiltonian(n, bonds, j);
    let states: Vec<usize> = (0..1usize << n).filter(|s| s.count_ones() as usize == m).collect();
    let block = Array2::from_shape_fn((states.len(), states.len()), |(a, b)| h[[states[a], states[b]]]);
    block
        .eigvalsh(UPLO::Lower)
        .unwrap()
        .iter()
        .map(|&e| C64::new(-gamma / 2.0 * m as f64, -e))
        .collect()
}

fn bethe_ed_agreement() -> Result<String, String> {
    let (n, j, jz, gamma) = (4, 1.0, 2.0, 1.0);
    let lattice = chain(n);
    let couplings = [2.0 * j, 2.0 * j, jz];
    let e_g = reference_energy(n, jz, Branch::Minus);
    let nearest = |e: C64, pool: &[C64]| pool.iter().map(|p| (p - e).norm()).fold(f64::INFINITY, f64::min);
    let s1 = sector_energies(n, lattice.bonds(), couplings, gamma, 1);
    let mut worst = 0.0f64;
    for k in solve_bethe_m1(n).unwrap() {
        let e = bethe_energy(&[C64::new(k, 0.0)], j, jz, gamma, Branch::Minus) + e_g;
        worst = worst.max(nearest(e, &s1));
    }
    let s2 = sector_energies(n, lattice.bonds(), couplings, gamma, 2);
    let report = solve_bethe_m2(n, j, jz, gamma, Branch::Minus).unwrap();
    for s in &report.solutions {
        worst = worst.max(nearest(s.energy + e_g, &s2));
    }
    check(
        worst < 1e-6 && !report.solutions.is_empty(),
        format!(
            "4 single-magnon + {} converged two-magnon energies ({} of C(4,2)=6 not reached by the root search), max deviation {worst:.2e}",
            report.solutions.len(),
            report.missing()
        ),
    )
}

struct RbmRun {
    gap: f64,
    std_error: f64,
    im: f64,
    iterations: usize,
    trial: TrialState,
}

struct RbmSetup<'a> {
    model: &'a LindbladModel,
    hidden_ratio: usize,
    ancillary: AncillaryState,
    seed: u64,
    opt: OptimizerConfig,
}

fn optimize(s: RbmSetup<'_>) -> RbmRun {
    let n = s.model.sites();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let rbm = RbmParameters::random(n, s.hidden_ratio * n, 0.01, &mut rng).unwrap();
    let trial = TrialState::new(rbm, s.ancillary).unwrap();
    let (trial, trace) = run(trial, &s.model.vectorize(), &s.opt).map_err(|f| f.to_string()).unwrap();
    let g = gap_estimate(&trace, s.opt.window).unwrap();
    RbmRun {
        gap: g.gap,
        std_error: g.std_error,
        im: g.im,
        iterations: trace.len(),
        trial,
    }
}

/// N=6 XXZ chain, all-down ancillary, hidden ratio 3, Monte Carlo sampling.
fn xxz_rbm_gap(gamma: f64) -> (f64, f64, usize) {
    static CACHE: OnceLock<std::sync::Mutex<Vec<(u64, (f64, f64, usize))>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&(_, r)) = cache.lock().unwrap().iter().find(|(g, _)| *g == gamma.to_bits()) {
        return r;
    }
    let model = LindbladModel::xxz(chain(6), 1.0, 2.0, gamma).unwrap();
    let r = optimize(RbmSetup {
        model: &model,
        hidden_ratio: 3,
        ancillary: AncillaryState::all_down(6),
        seed: 1,
        opt: OptimizerConfig {
            max_iters: 200,
            min_iters: 200,
            chain: ChainConfig {
                samples: 2000,
                sweep: 12,
                ..Default::default()
            },
            seed: 1,
            ..Default::default()
        },
    });
    let out = (r.gap, r.std_error, r.iterations);
    cache.lock().unwrap().push((gamma.to_bits(), out));
    out
}

fn rbm_gap_xxz() -> Result<String, String> {
    let start = Instant::now();
    let (gap, se, iters) = xxz_rbm_gap(3.0);
    let rel = (gap - 1.5).abs() / 1.5;
    check(
        rel <= 2e-2 && iters <= 200,
        format!(
            "N=6, gap {gap:.5} +- {se:.5} vs 1.5, eps_rel {rel:.2e}, {iters} iterations, {:.0}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn rbm_gamma_linearity() -> Result<String, String> {
    let gammas = [1.0, 2.0, 3.0];
    let gaps: Vec<f64> = gammas.iter().map(|&g| xxz_rbm_gap(g).0).collect();
    let c = gammas.iter().zip(&gaps).map(|(g, d)| g * d).sum::<f64>() / gammas.iter().map(|g| g * g).sum::<f64>();
    check(
        (0.45..=0.55).contains(&c),
        format!("gaps {:.4} {:.4} {:.4} at gamma 1 2 3, slope c = {c:.4}", gaps[0], gaps[1], gaps[2]),
    )
}

fn xyz_model(jy: f64) -> LindbladModel {
    LindbladModel::xyz(chain(4), 4.0, jy, 2.0, 1.0).unwrap()
}

fn rbm_xyz_single_mode() -> Result<String, String> {
    let model = xyz_model(0.5);
    let spec = full_spectrum(&dense_liouvillian(&model.vectorize()).unwrap()).unwrap();
    let r = optimize(RbmSetup {
        model: &model,
        hidden_ratio: 6,
        ancillary: AncillaryState::Identity,
        seed: 1,
        opt: OptimizerConfig {
            max_iters: 1000,
            min_iters: 1000,
            chain: ChainConfig {
                exact: true,
                ..Default::default()
            },
            seed: 1,
            ..Default::default()
        },
    });
    let rel = (r.gap - spec.gap).abs() / spec.gap;
    let modes: Vec<_> = spec.first_decay.iter().map(|&k| spec.vectors.column(k).to_owned()).collect();
    let fid = subspace_fidelity(&r.trial, &modes).unwrap();
    check(
        rel <= 2e-2 && fid >= 0.98 && r.iterations <= 1000 && modes.len() == 1,
        format!(
            "gap {:.5} vs ED {:.5}, eps_rel {rel:.2e}, fidelity {fid:.5}, {} iterations",
            r.gap, spec.gap, r.iterations
        ),
    )
}

fn case_iii_joint_evolution() -> Result<String, String> {
    let model = xyz_model(3.0);
    let spec = full_spectrum(&dense_liouvillian(&model.vectorize()).unwrap()).unwrap();
    // Minimal |Im| among the first decay modes; the conjugate pair ties and the
    // beta term selects the negative imaginary part.
    let target = spec
        .first_decay
        .iter()
        .map(|&k| spec.eigenvalues[k])
        .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()).then(a.im.total_cmp(&b.im)))
        .unwrap();
    let r = optimize(RbmSetup {
        model: &model,
        hidden_ratio: 6,
        ancillary: AncillaryState::all_down(4),
        seed: 3,
        opt: OptimizerConfig {
            max_iters: 5000,
            min_iters: 5000,
            beta: 0.04,
            beta_mode: BetaMode::Joint,
            chain: ChainConfig {
                exact: true,
                ..Default::default()
            },
            seed: 3,
            ..Default::default()
        },
    });
    let dev = (r.im - target.im).abs();
    check(
        dev <= 5e-2,
        format!(
            "beta 0.04, Im<L> {:.4} vs {:.4} (first decay {:.4}), |dev| {dev:.3e}, {} iterations",
            r.im,
            target.im,
            target,
            r.iterations
        ),
    )
}

fn estimator_checks() -> Result<String, String> {
    // Unbiasedness on N=2.
    let n = 2;
    let trial = random_trial(n, 4, 0.4, AncillaryState::all_down(n), 11);
    let liouv = LindbladModel::xyz(chain(n), 1.3, 0.7, 2.0, 1.1).unwrap().vectorize();
    let exact = exact_family_scalars(&trial, &liouv);
    let mut outliers = [0usize; 5];
    for seed in 0..20 {
        let cfg = ChainConfig {
            samples: 4000,
            sweep: 2,
            seed,
            ..Default::default()
        };
        let z = unbiasedness_zscores(&trial, &liouv, &exact, &cfg, 20);
        for f in 0..5 {
            outliers[f] += usize::from(z[f] > 3.0);
        }
    }
    let unbiased = outliers.iter().all(|&o| o <= 1);

    // Gradient check against central differences.
    let mut worst_grad = 0.0f64;
    for (seed, identity) in [(1u64, true), (2, false), (3, true)] {
        let anc = if identity { AncillaryState::Identity } else { AncillaryState::all_down(2) };
        let trial = random_trial(2, 4, 0.4, anc, seed);
        for idx in [0usize, 5, 9, 15] {
            let x = BiBaseConfig::from_index(2, idx);
            let fd = finite_difference_log_derivatives(&trial, x.spins(), 1e-5);
            for (a, f) in trial.log_derivatives(&x).iter().zip(&fd) {
                worst_grad = worst_grad.max((a - f).norm() / a.norm().max(1.0));
            }
        }
    }

    // Detailed balance on the full transition matrices.
    let mut worst_balance = 0.0f64;
    for (n, seed) in [(1usize, 5u64), (2, 6)] {
        for identity in [true, false] {
            let anc = if identity { AncillaryState::Identity } else { AncillaryState::all_down(n) };
            let trial = random_trial(n, 3, 0.6, anc, seed);
            let p = transition_matrix(&trial, 4);
            let (stat, detailed) = balance_residuals(&p, &stationary_weights(&trial));
            worst_balance = worst_balance.max(stat).max(detailed);
        }
    }

    let names: Vec<String> = FAMILY_NAMES.iter().zip(&outliers).map(|(n, o)| format!("{n}:{o}")).collect();
    check(
        unbiased && worst_grad < 1e-5 && worst_balance < 1e-12,
        format!(
            "outliers per family over 20 seeds [{}], gradient rel. error {worst_grad:.2e}, balance residual {worst_balance:.2e}",
            names.join(" ")
        ),
    )
}

fn meanfield_fixed_point() -> Result<String, String> {
    let (jx, jz) = (0.0, 2.0);
    let mut worst = 0.0f64;
    let mut mismatched = 0;
    let mut degenerate = 0;
    for jy in [2.5, 3.0, 4.0, 5.0, 6.0] {
        for gamma in [0.5, 1.0, 2.0, 3.0, 4.0] {
            let r = meanfield_steady_state(jx, jy, jz, gamma).unwrap();
            let (x, y, z) = (r.sx, r.sy, r.sz);
            let f = [
                2.0 * (jy - jz) * y * z - gamma * x / 2.0,
                2.0 * (jz - jx) * z * x - gamma * y / 2.0,
                2.0 * (jx - jy) * x * y - gamma * (z + 0.5),
            ];
            worst = f.iter().fold(worst, |m, v| m.max(v.abs()));
            let expect = gamma * gamma < 4.0 * (jy - jz) * (jz - jx);
            mismatched += usize::from((r.phase == MeanFieldPhase::Degenerate) != expect);
            degenerate += usize::from(expect);
        }
    }
    // The label flips exactly at the boundary.
    let jy = 4.0;
    let g0 = (4.0 * (jy - jz) * (jz - jx)).sqrt();
    let at = meanfield_steady_state(jx, jy, jz, g0).unwrap();
    let below = meanfield_steady_state(jx, jy, jz, g0 * (1.0 - 1e-12)).unwrap();
    let above = meanfield_steady_state(jx, jy, jz, g0 * (1.0 + 1e-12)).unwrap();
    let flips = at.phase == MeanFieldPhase::UniqueGapped
        && below.phase == MeanFieldPhase::Degenerate
        && above.phase == MeanFieldPhase::UniqueGapped
        && (at.sz + 0.5).abs() < 1e-12;
    check(
        worst < 1e-10 && mismatched == 0 && flips,
        format!("25 grid points ({degenerate} degenerate), max residual {worst:.2e}, boundary flip {flips}"),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("xxz-analytic-gap", xxz_analytic_gap),
        ("xxz-real-part-quantization", xxz_real_part_quantization),
        ("spectral-coincidence", spectral_coincidence),
        ("bethe-ed-agreement", bethe_ed_agreement),
        ("rbm-gap-xxz", rbm_gap_xxz),
        ("rbm-gap-gamma-linearity", rbm_gamma_linearity),
        ("rbm-gap-xyz-single-mode", rbm_xyz_single_mode),
        ("case-iii-joint-evolution", case_iii_joint_evolution),
        ("estimator-unbiasedness", estimator_checks),
        ("meanfield-fixed-point", meanfield_fixed_point),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
