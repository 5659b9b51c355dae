//! Closed-form and semi-analytic references.
//!
//! Magnon energies use the coupling `J` of the effective right Hamiltonian
//! `H_R = sum_i -i J (S+_i S-_{i+1} + h.c.) - i J_z S^z_i S^z_{i+1} - (gamma/2)(S^z_i + 1/2)`
//! on a periodic chain. The lattice model's flip-flop amplitude is
//! `(J_x + J_y) / 4`, so a model built with `J_x = J_y = 2J` has exactly this `H_R`.
//!
//! [`bethe_energy`] omits the reference energy `E_g = -i J_z N / 4` of the
//! all-down state; add [`reference_energy`] to compare with eigenvalues of `H_R`.

use crate::{Error, Result, C64};

use std::f64::consts::PI;

/// The XXZ Liouvillian gap `gamma / 2`, independent of couplings, size and geometry.
pub fn xxz_gap(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidModel(format!("gamma must be >= 0, got {gamma}")));
    }
    Ok(gamma / 2.0)
}

/// Real part `-gamma m / 2` shared by every eigenvalue with `m` magnons in total.
pub fn magnon_real_part(m: usize, sites: usize, gamma: f64) -> Result<f64> {
    if m > 2 * sites {
        return Err(Error::InvalidParameters(format!(
            "at most {} magnons on {sites} sites, got {m}",
            2 * sites
        )));
    }
    Ok(-0.5 * gamma * m as f64)
}

/// Which half of the doubled lattice an energy belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `-i` sign: the right (ket) system, eigenvalues of `H_R`.
    Minus,
    /// `+i` sign: the left (bra) system, eigenvalues of `H_L = H_R^*`.
    Plus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Self::Minus => -1.0,
            Self::Plus => 1.0,
        }
    }
}

/// `-(gamma/2) m +/- i sum_j (2 J cos k_j - J_z)` with `m = roots.len()`.
pub fn bethe_energy(roots: &[C64], j: f64, jz: f64, gamma: f64, branch: Branch) -> C64 {
    let m = roots.len() as f64;
    let s: C64 = roots.iter().map(|k| 2.0 * j * k.cos() - jz).sum();
    C64::new(-0.5 * gamma * m, 0.0) + C64::new(0.0, branch.sign()) * s
}

/// `E_g = -i J_z N / 4` on the minus branch (its conjugate on the plus branch).
pub fn reference_energy(sites: usize, jz: f64, branch: Branch) -> C64 {
    C64::new(0.0, branch.sign() * jz * sites as f64 / 4.0)
}

/// Single-magnon momenta `2 pi n / N`.
pub fn solve_bethe_m1(sites: usize) -> Result<Vec<f64>> {
    if sites < 2 {
        return Err(Error::InvalidLattice(format!(
            "need at least 2 sites, got {sites}"
        )));
    }
    Ok((0..sites).map(|n| 2.0 * PI * n as f64 / sites as f64).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetheSolution {
    pub magnons: usize,
    /// Quasi-momenta, real part in `[0, 2 pi)`, ordered canonically.
    pub momenta: Vec<C64>,
    /// Energy without the reference offset.
    pub energy: C64,
    pub branch: Branch,
    /// Largest `|e^{i k_j N} - RHS_j|`.
    pub residual: f64,
}

/// Two-magnon roots together with an account of what was not found.
#[derive(Debug, Clone)]
pub struct BetheM2Report {
    pub solutions: Vec<BetheSolution>,
    /// Dimension of the two-magnon sector, `C(N, 2)`.
    pub expected: usize,
}

impl BetheM2Report {
    pub fn missing(&self) -> usize {
        self.expected.saturating_sub(self.solutions.len())
    }
}

const NEWTON_TOL: f64 = 1e-13;
const RESIDUAL_TOL: f64 = 1e-10;
const DEDUP_TOL: f64 = 1e-7;

struct TwoMagnon {
    n: i32,
    j: f64,
    jz: f64,
}

impl TwoMagnon {
    fn ab(&self, z1: C64, z2: C64) -> (C64, C64) {
        let common = self.j * (z1 * z2 + 1.0);
        (common - self.jz * z1, common - self.jz * z2)
    }

    /// `z1^N B + A` and `z2^N A + B`, the cleared form of the Bethe equations.
    fn residual(&self, z1: C64, z2: C64) -> [C64; 2] {
        let (a, b) = self.ab(z1, z2);
        [z1.powi(self.n) * b + a, z2.powi(self.n) * a + b]
    }

    fn jacobian(&self, z1: C64, z2: C64) -> [[C64; 2]; 2] {
        let (a, b) = self.ab(z1, z2);
        let (j, jz, n) = (self.j, self.jz, self.n);
        let (a1, a2) = (j * z2 - jz, C64::new(j, 0.0) * z1);
        let (b1, b2) = (C64::new(j, 0.0) * z2, j * z1 - jz);
        let p1 = z1.powi(n);
        let p2 = z2.powi(n);
        [
            [f64::from(n) * z1.powi(n - 1) * b + p1 * b1 + a1, p1 * b2 + a2],
            [p2 * a1 + b1, f64::from(n) * z2.powi(n - 1) * a + p2 * a2 + b2],
        ]
    }

    /// Damped Newton from `(z1, z2)`; `None` if it stalls.
    fn newton(&self, mut z1: C64, mut z2: C64) -> Option<(C64, C64)> {
        let norm = |f: [C64; 2]| (f[0].norm_sqr() + f[1].norm_sqr()).sqrt();
        let mut f = self.residual(z1, z2);
        for _ in 0..200 {
            let r = norm(f);
            if r < NEWTON_TOL {
                return Some((z1, z2));
            }
            let jac = self.jacobian(z1, z2);
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det.norm() < 1e-300 {
                return None;
            }
            let d1 = (jac[1][1] * f[0] - jac[0][1] * f[1]) / det;
            let d2 = (jac[0][0] * f[1] - jac[1][0] * f[0]) / det;
            let mut t = 1.0;
            loop {
                let (c1, c2) = (z1 - t * d1, z2 - t * d2);
                let fc = self.residual(c1, c2);
                if norm(fc) < r || t < 1e-6 {
                    z1 = c1;
                    z2 = c2;
                    f = fc;
                    break;
                }
                t *= 0.5;
            }
            if !(z1.is_finite() && z2.is_finite()) || z1.norm() > 1e8 || z2.norm() > 1e8 {
                return None;
            }
        }
        (norm(f) < NEWTON_TOL * 1e3).then_some((z1, z2))
    }

    /// Residual of the ratio form `e^{i k N} = RHS`.
    fn ratio_residual(&self, z1: C64, z2: C64) -> f64 {
        let (a, b) = self.ab(z1, z2);
        let r1 = (z1.powi(self.n) + a / b).norm();
        let r2 = (z2.powi(self.n) + b / a).norm();
        r1.max(r2)
    }
}

fn canonical_momentum(z: C64) -> C64 {
    let k = -C64::i() * z.ln();
    let re = k.re.rem_euclid(2.0 * PI);
    let re = if (re - 2.0 * PI).abs() < 1e-12 { 0.0 } else { re };
    C64::new(re, k.im)
}

fn momentum_distance(a: C64, b: C64) -> f64 {
    let d = (a.re - b.re).rem_euclid(2.0 * PI);
    let d = d.min(2.0 * PI - d);
    d.hypot(a.im - b.im)
}

/// Two-magnon Bethe roots on an `N`-site ring from a grid of free-magnon and
/// string starts, refined by damped Newton and deduplicated modulo `2 pi` and exchange.
pub fn solve_bethe_m2(sites: usize, j: f64, jz: f64, gamma: f64, branch: Branch) -> Result<BetheM2Report> {
    if sites < 3 {
        return Err(Error::InvalidLattice(format!(
            "two-magnon roots need at least 3 sites, got {sites}"
        )));
    }
    let sys = TwoMagnon {
        n: sites as i32,
        j,
        jz,
    };
    let step = 2.0 * PI / sites as f64;
    let mut starts: Vec<(C64, C64)> = Vec::new();
    for n1 in 0..sites {
        for n2 in n1..sites {
            // Small offsets keep the start away from the trivial z1 = z2 manifold.
            starts.push((
                C64::new(step * n1 as f64 + 0.031, 0.017),
                C64::new(step * n2 as f64 - 0.029, -0.013),
            ));
        }
    }
    for n in 0..2 * sites {
        let total = PI * n as f64 / sites as f64 * 2.0;
        for v in [0.2, 0.5, 1.0] {
            starts.push((C64::new(total / 2.0, v), C64::new(total / 2.0, -v)));
        }
    }
    let mut found: Vec<BetheSolution> = Vec::new();
    for (k1, k2) in starts {
        let Some((z1, z2)) = sys.newton((C64::i() * k1).exp(), (C64::i() * k2).exp()) else {
            continue;
        };
        if (z1 - z2).norm() < 1e-6 || z1.norm() < 1e-8 || z2.norm() < 1e-8 {
            continue;
        }
        let (a, b) = sys.ab(z1, z2);
        if a.norm() < 1e-10 || b.norm() < 1e-10 {
            continue;
        }
        let residual = sys.ratio_residual(z1, z2);
        if !(residual < RESIDUAL_TOL) {
            continue;
        }
        let mut momenta = vec![canonical_momentum(z1), canonical_momentum(z2)];
        momenta.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let duplicate = found.iter().any(|s| {
            momentum_distance(s.momenta[0], momenta[0]) < DEDUP_TOL
                && momentum_distance(s.momenta[1], momenta[1]) < DEDUP_TOL
        });
        if duplicate {
            continue;
        }
        found.push(BetheSolution {
            magnons: 2,
            energy: bethe_energy(&momenta, j, jz, gamma, branch),
            momenta,
            branch,
            residual,
        });
    }
    found.sort_by(|a, b| {
        a.momenta[0]
            .re
            .total_cmp(&b.momenta[0].re)
            .then(a.momenta[1].re.total_cmp(&b.momenta[1].re))
            .then(a.momenta[0].im.total_cmp(&b.momenta[0].im))
    });
    let expected = sites * (sites - 1) / 2;
    if found.len() < expected {
        log::info!(
            "two-magnon Bethe roots: found {} of {expected} sector states",
            found.len()
        );
    }
    Ok(BetheM2Report {
        solutions: found,
        expected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanFieldPhase {
    /// Fully polarized down, unique steady state.
    UniqueGapped,
    /// Finite in-plane magnetization, two symmetry-related solutions.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldResult {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub phase: MeanFieldPhase,
    /// `4 (J_y - J_z)(J_z - J_x) - gamma^2`; positive in the degenerate phase.
    pub discriminant: f64,
}

/// Time derivatives of the site-averaged spin components under the
/// product-state equations of motion of the dissipative XYZ chain.
pub fn meanfield_derivatives(jx: f64, jy: f64, jz: f64, gamma: f64, s: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = s;
    [
        2.0 * (jy - jz) * y * z - 0.5 * gamma * x,
        2.0 * (jz - jx) * z * x - 0.5 * gamma * y,
        2.0 * (jx - jy) * x * y - gamma * (z + 0.5),
    ]
}

/// Largest absolute time derivative at `r`.
pub fn meanfield_residual(jx: f64, jy: f64, jz: f64, gamma: f64, r: &MeanFieldResult) -> f64 {
    meanfield_derivatives(jx, jy, jz, gamma, [r.sx, r.sy, r.sz])
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Mean-field steady state. In the degenerate phase the solution with
/// `<S^x> >= 0` is returned; its mirror `(-x, -y, z)` is equally valid.
pub fn meanfield_steady_state(jx: f64, jy: f64, jz: f64, gamma: f64) -> Result<MeanFieldResult> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidModel(format!("gamma must be > 0, got {gamma}")));
    }
    let p = (jy - jz) * (jz - jx);
    let discriminant = 4.0 * p - gamma * gamma;
    if discriminant <= 0.0 {
        return Ok(MeanFieldResult {
            sx: 0.0,
            sy: 0.0,
            sz: -0.5,
            phase: MeanFieldPhase::UniqueGapped,
            discriminant,
        });
    }
    let sz = -gamma / (4.0 * p.sqrt());
    let x2 = gamma * gamma * (sz + 0.5) / (8.0 * (jx - jy) * (jz - jx) * sz);
    let sx = x2.max(0.0).sqrt();
    let sy = 4.0 / gamma * (jz - jx) * sz * sx;
    Ok(MeanFieldResult {
        sx,
        sy,
        sz,
        phase: MeanFieldPhase::Degenerate,
        discriminant,
    })
}
