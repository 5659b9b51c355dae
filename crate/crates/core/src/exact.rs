//! Dense exact diagonalization for small systems.
//!
//! Vectors over the bi-base space use the index `m * 2^N + n` for the density
//! matrix element `rho_{mn}`; physical basis states put site 0 in the most
//! significant bit, with a set bit for spin up.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigVals, Eigh, UPLO};

use crate::model::{BiBaseConfig, LindbladModel, VectorizedLiouvillian};
use crate::rbm::TrialState;
use crate::{Error, Result, C64};

/// Largest `N` accepted by the dense builders (`4^N = 4096`).
pub const MAX_DENSE_SITES: usize = 6;
/// Tolerance for grouping eigenvalues with equal real part.
pub const DEGENERACY_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);

fn check_capacity(sites: usize) -> Result<()> {
    if sites > MAX_DENSE_SITES {
        return Err(Error::Capacity {
            sites,
            max: MAX_DENSE_SITES,
        });
    }
    Ok(())
}

/// Dense `L` assembled column by column from the local terms.
pub fn dense_liouvillian(liouvillian: &VectorizedLiouvillian) -> Result<Array2<C64>> {
    let n = liouvillian.sites();
    check_capacity(n)?;
    let dim = 1usize << (2 * n);
    let mut out = Array2::<C64>::zeros((dim, dim));
    let mut elems = Vec::new();
    for col in 0..dim {
        let x = BiBaseConfig::from_index(n, col);
        liouvillian.column_elements(x.spins(), &mut elems);
        for c in &elems {
            let row = match c.flips {
                None => col,
                Some((i, j)) => x.flipped(&[i, j]).to_index(),
            };
            out[[row, col]] += c.amplitude;
        }
    }
    Ok(out)
}

/// `L` applied to a dense vector through the sparse terms.
pub fn apply_liouvillian(liouvillian: &VectorizedLiouvillian, v: &[C64]) -> Vec<C64> {
    let n = liouvillian.sites();
    let mut out = vec![ZERO; v.len()];
    let mut elems = Vec::new();
    for (col, &value) in v.iter().enumerate() {
        if value == ZERO {
            continue;
        }
        let x = BiBaseConfig::from_index(n, col);
        liouvillian.column_elements(x.spins(), &mut elems);
        for c in &elems {
            let row = match c.flips {
                None => col,
                Some((i, j)) => x.flipped(&[i, j]).to_index(),
            };
            out[row] += c.amplitude * value;
        }
    }
    out
}

fn spin_up(state: usize, site: usize, sites: usize) -> bool {
    (state >> (sites - 1 - site)) & 1 == 1
}

fn site_bit(site: usize, sites: usize) -> usize {
    1 << (sites - 1 - site)
}

/// Dense `2^N` Hamiltonian. It is real because every `XYZ` term has real
/// matrix elements in the `S^z` basis.
pub fn hamiltonian_matrix(model: &LindbladModel) -> Result<Array2<f64>> {
    let n = model.sites();
    check_capacity(n)?;
    let dim = 1usize << n;
    let flip_flop = (model.jx() + model.jy()) / 4.0;
    let pair = (model.jx() - model.jy()) / 4.0;
    let mut h = Array2::<f64>::zeros((dim, dim));
    for state in 0..dim {
        for &(i, j) in model.lattice().bonds() {
            let (ui, uj) = (spin_up(state, i, n), spin_up(state, j, n));
            let zz = if ui == uj { 0.25 } else { -0.25 };
            h[[state, state]] += model.jz() * zz;
            let target = state ^ site_bit(i, n) ^ site_bit(j, n);
            let amp = if ui == uj { pair } else { flip_flop };
            h[[target, state]] += amp;
        }
    }
    Ok(h)
}

/// `H_NH = -iH - (gamma/2) sum_j (S^z_j + 1/2)`: the right-half block of `L`.
pub fn effective_hamiltonian(model: &LindbladModel) -> Result<Array2<C64>> {
    let h = hamiltonian_matrix(model)?;
    let n = model.sites();
    let mut out = h.mapv(|v| C64::new(0.0, -v));
    for state in 0..1usize << n {
        let ups = state.count_ones() as f64;
        out[[state, state]] -= C64::new(0.5 * model.gamma() * ups, 0.0);
    }
    Ok(out)
}

/// Full spectrum of a Liouvillian, sorted by decreasing real part.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<C64>,
    /// Column `k` is the unit-norm right eigenvector of `eigenvalues[k]`, with its
    /// largest-magnitude component real and positive.
    pub vectors: Array2<C64>,
    pub steady_index: usize,
    pub gap: f64,
    /// Indices of every eigenvalue whose real part matches the first decay mode.
    pub first_decay: Vec<usize>,
    /// `|<v_i|v_j>|` among the first decay modes.
    pub overlaps: Array2<f64>,
}

fn order_by_real_part(values: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .re
            .total_cmp(&values[a].re)
            .then(values[a].im.total_cmp(&values[b].im))
    });
    idx
}

/// Eigenvalues only, sorted by decreasing real part.
pub fn eigenvalues(matrix: &Array2<C64>) -> Result<Vec<C64>> {
    let vals = matrix
        .eigvals()
        .map_err(|e| Error::Eigensolver(e.to_string()))?;
    let vals = vals.to_vec();
    Ok(order_by_real_part(&vals).into_iter().map(|i| vals[i]).collect())
}

fn first_decay_indices(values: &[C64], steady: usize) -> (f64, Vec<usize>) {
    let lead = values
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != steady)
        .map(|(_, v)| v.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let idx = (0..values.len())
        .filter(|&k| k != steady && (values[k].re - lead).abs() < DEGENERACY_TOL)
        .collect();
    (-lead, idx)
}

/// Diagonalizes `matrix` and extracts the steady state, gap and first decay modes.
pub fn full_spectrum(matrix: &Array2<C64>) -> Result<SpectrumResult> {
    let (vals, vecs) = matrix.eig().map_err(|e| Error::Eigensolver(e.to_string()))?;
    let order = order_by_real_part(vals.as_slice().expect("contiguous"));
    let dim = vals.len();
    let eigenvalues: Vec<C64> = order.iter().map(|&i| vals[i]).collect();
    let mut vectors = Array2::<C64>::zeros((dim, dim));
    for (k, &i) in order.iter().enumerate() {
        let mut col = vecs.column(i).to_owned();
        normalize_phase(&mut col);
        vectors.column_mut(k).assign(&col);
    }
    let steady_index = 0;
    let (gap, first_decay) = first_decay_indices(&eigenvalues, steady_index);
    let f = first_decay.len();
    let mut overlaps = Array2::<f64>::zeros((f, f));
    for a in 0..f {
        for b in 0..f {
            let va = vectors.column(first_decay[a]);
            let vb = vectors.column(first_decay[b]);
            overlaps[[a, b]] = va.iter().zip(vb.iter()).map(|(x, y)| x.conj() * y).sum::<C64>().norm();
        }
    }
    Ok(SpectrumResult {
        eigenvalues,
        vectors,
        steady_index,
        gap,
        first_decay,
        overlaps,
    })
}

/// Scales `v` to unit norm with its largest-magnitude entry real and positive.
pub fn normalize_phase(v: &mut Array1<C64>) {
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("nonempty");
    let phase = pivot.conj() / pivot.norm();
    v.mapv_inplace(|x| x * phase / norm);
}

/// Trace of the density matrix encoded by a bi-base vector.
pub fn matrix_trace(v: &[C64], sites: usize) -> C64 {
    let d = 1usize << sites;
    (0..d).map(|m| v[m * d + m]).sum()
}

/// The three kinds of first-decay-mode structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayCase {
    /// One first decay mode.
    Single,
    /// Several first decay modes spanning mutually orthogonal eigenspaces.
    DegenerateOrthogonal,
    /// Several first decay modes, some eigenspaces not orthogonal to each other.
    DegenerateNonorthogonal,
}

impl DecayCase {
    pub fn label(self) -> &'static str {
        match self {
            Self::Single => "single",
            Self::DegenerateOrthogonal => "degenerate-orthogonal",
            Self::DegenerateNonorthogonal => "degenerate-nonorthogonal",
        }
    }
}

/// Orthonormal basis of the span of `cols` (modified Gram-Schmidt, rank-revealing).
pub fn orthonormal_basis(cols: &[Array1<C64>]) -> Vec<Array1<C64>> {
    let mut basis: Vec<Array1<C64>> = Vec::new();
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for b in &basis {
                let proj: C64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                v.zip_mut_with(b, |x, y| *x -= proj * y);
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.mapv_inplace(|x| x / norm);
            basis.push(v);
        }
    }
    basis
}

/// Groups of first-decay indices sharing one complex eigenvalue.
pub fn eigenvalue_groups(spec: &SpectrumResult, tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &k in &spec.first_decay {
        let lam = spec.eigenvalues[k];
        match groups
            .iter_mut()
            .find(|g| (spec.eigenvalues[g[0]] - lam).norm() < tol)
        {
            Some(g) => g.push(k),
            None => groups.push(vec![k]),
        }
    }
    groups
}

/// Largest overlap between orthonormalized eigenspaces of distinct first-decay eigenvalues.
pub fn cross_overlap(spec: &SpectrumResult) -> f64 {
    let groups = eigenvalue_groups(spec, 1e-6);
    let bases: Vec<Vec<Array1<C64>>> = groups
        .iter()
        .map(|g| {
            let cols: Vec<Array1<C64>> = g.iter().map(|&k| spec.vectors.column(k).to_owned()).collect();
            orthonormal_basis(&cols)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for a in 0..bases.len() {
        for b in a + 1..bases.len() {
            for u in &bases[a] {
                for v in &bases[b] {
                    let o: C64 = u.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                    worst = worst.max(o.norm());
                }
            }
        }
    }
    worst
}

pub fn classify_decay_modes(spec: &SpectrumResult) -> DecayCase {
    if spec.first_decay.len() <= 1 {
        return DecayCase::Single;
    }
    if cross_overlap(spec) < DEGENERACY_TOL {
        DecayCase::DegenerateOrthogonal
    } else {
        DecayCase::DegenerateNonorthogonal
    }
}

/// `|<rho'|v>|` with both vectors normalized.
pub fn fidelity(trial: &TrialState, mode: &[C64]) -> Result<f64> {
    check_capacity(trial.sites())?;
    let t = trial.densify();
    vector_fidelity(&t, mode)
}

pub fn vector_fidelity(a: &[C64], b: &[C64]) -> Result<f64> {
    let na = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let o: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    Ok(o.norm() / (na * nb))
}

/// Norm of the projection of the normalized trial onto the span of `modes`.
pub fn subspace_fidelity(trial: &TrialState, modes: &[Array1<C64>]) -> Result<f64> {
    check_capacity(trial.sites())?;
    let t = trial.densify();
    let nt = t.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if nt == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let basis = orthonormal_basis(modes);
    let weight: f64 = basis
        .iter()
        .map(|b| b.iter().zip(&t).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr())
        .sum();
    Ok(weight.sqrt() / nt)
}

/// Outcome of comparing `spec(L)` with `{E_i + E_j^*}` for `E` the spectrum of `H_NH`.
#[derive(Debug, Clone)]
pub struct CoincidenceReport {
    pub liouvillian: Vec<C64>,
    pub coherent: Vec<C64>,
    /// Largest distance between matched eigenvalues.
    pub max_deviation: f64,
}

/// Pairs every element of `a` with its nearest unused element of `b` (greedy)
/// and returns the largest pairing distance; infinite on a length mismatch.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < best_d {
                    best_d = d;
                    best = Some(j);
                }
            }
        }
        if let Some(j) = best {
            used[j] = true;
        }
        worst = worst.max(best_d);
    }
    worst
}

/// Compares the Liouvillian spectrum with that of `H_NH (x) I + I (x) H_NH^*`.
pub fn coincidence_check(model: &LindbladModel) -> Result<CoincidenceReport> {
    if !model.is_isotropic() {
        return Err(Error::NotApplicable(
            "spectral coincidence needs J_x = J_y".into(),
        ));
    }
    let l = dense_liouvillian(&model.vectorize())?;
    let liouvillian = eigenvalues(&l)?;
    let e = effective_hamiltonian(model)?
        .eigvals()
        .map_err(|e| Error::Eigensolver(e.to_string()))?;
    let mut coherent = Vec::with_capacity(e.len() * e.len());
    for a in &e {
        for b in &e {
            coherent.push(a + b.conj());
        }
    }
    let order = order_by_real_part(&coherent);
    let coherent: Vec<C64> = order.into_iter().map(|i| coherent[i]).collect();
    let max_deviation = multiset_distance(&liouvillian, &coherent);
    Ok(CoincidenceReport {
        liouvillian,
        coherent,
        max_deviation,
    })
}

/// Eigen-decomposition of `H_NH` resolved by the number of up spins.
#[derive(Debug, Clone)]
pub struct SectorSpectra {
    sites: usize,
    gamma: f64,
    /// Per sector: eigenvalues of `H_NH` and orthonormal real eigenvectors embedded in `2^N`.
    sectors: Vec<(Vec<C64>, Vec<Array1<f64>>)>,
    liouvillian: VectorizedLiouvillian,
}

impl SectorSpectra {
    /// Requires `J_x = J_y`, so that `H` conserves the magnetization.
    pub fn new(model: &LindbladModel) -> Result<Self> {
        if !model.is_isotropic() {
            return Err(Error::NotApplicable(
                "magnetization sectors need J_x = J_y".into(),
            ));
        }
        let n = model.sites();
        let h = hamiltonian_matrix(model)?;
        let mut sectors = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let states: Vec<usize> = (0..1usize << n)
                .filter(|s| s.count_ones() as usize == m)
                .collect();
            let d = states.len();
            let block = Array2::from_shape_fn((d, d), |(a, b)| h[[states[a], states[b]]]);
            let (vals, vecs) = block
                .eigh(UPLO::Lower)
                .map_err(|e| Error::Eigensolver(e.to_string()))?;
            let energies = vals
                .iter()
                .map(|&v| C64::new(-0.5 * model.gamma() * m as f64, -v))
                .collect();
            let vectors = (0..d)
                .map(|j| {
                    let mut full = Array1::<f64>::zeros(1 << n);
                    for (a, &s) in states.iter().enumerate() {
                        full[s] = vecs[[a, j]];
                    }
                    full
                })
                .collect();
            sectors.push((energies, vectors));
        }
        Ok(Self {
            sites: n,
            gamma: model.gamma(),
            sectors,
            liouvillian: model.vectorize(),
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Eigenvalues of `H_NH` with `m` up spins, ordered by increasing energy of `H`.
    pub fn energies(&self, m: usize) -> &[C64] {
        &self.sectors[m].0
    }

    pub fn vector(&self, m: usize, j: usize) -> &Array1<f64> {
        &self.sectors[m].1[j]
    }

    /// `l_{jk} = sum over channels of <m-1,k| L_mu |m,j>`, returned per channel.
    fn lowering(&self, m: usize) -> Vec<Array2<f64>> {
        let n = self.sites;
        let amp = (self.gamma / 2.0).sqrt();
        let (_, upper) = &self.sectors[m];
        let (_, lower) = &self.sectors[m - 1];
        (0..n)
            .map(|mu| {
                let mut l = Array2::<f64>::zeros((upper.len(), lower.len()));
                for (j, u) in upper.iter().enumerate() {
                    let mut lu = Array1::<f64>::zeros(1 << n);
                    for (s, &v) in u.iter().enumerate() {
                        if v != 0.0 && spin_up(s, mu, n) {
                            lu[s ^ site_bit(mu, n)] += amp * v;
                        }
                    }
                    for (k, w) in lower.iter().enumerate() {
                        l[[j, k]] = w.dot(&lu);
                    }
                }
                l
            })
            .collect()
    }

    /// Builds the Liouvillian eigenvector seeded by `|m,j> (x) |n,k>^*` by adding
    /// the lower-sector corrections generated by the jump terms.
    pub fn construct_eigenstate(&self, m: usize, j: usize, n: usize, k: usize) -> Result<Eigenstate> {
        if m > self.sites || n > self.sites || j >= self.energies(m).len() || k >= self.energies(n).len() {
            return Err(Error::InvalidParameters(format!(
                "no sector state ({m},{j};{n},{k})"
            )));
        }
        let lambda = self.energies(m)[j] + self.energies(n)[k].conj();
        let mut coeff = Array2::<C64>::zeros((self.energies(m).len(), self.energies(n).len()));
        coeff[[j, k]] = C64::new(1.0, 0.0);
        let mut levels = vec![coeff];
        for r in 1..=m.min(n) {
            let (mr, nr) = (m - r, n - r);
            let lm = self.lowering(mr + 1);
            let ln = self.lowering(nr + 1);
            let prev = &levels[r - 1];
            let mut next = Array2::<C64>::zeros((self.energies(mr).len(), self.energies(nr).len()));
            for a in 0..next.nrows() {
                for b in 0..next.ncols() {
                    let mut sum = ZERO;
                    for (lmu, lnu) in lm.iter().zip(&ln) {
                        for a2 in 0..prev.nrows() {
                            for b2 in 0..prev.ncols() {
                                sum += prev[[a2, b2]] * 2.0 * lmu[[a2, a]] * lnu[[b2, b]];
                            }
                        }
                    }
                    let denom = lambda - (self.energies(mr)[a] + self.energies(nr)[b].conj());
                    if denom.norm() < 1e-12 {
                        if sum.norm() < 1e-14 {
                            continue;
                        }
                        return Err(Error::ExceptionalPoint(denom.norm()));
                    }
                    next[[a, b]] = sum / denom;
                }
            }
            levels.push(next);
        }
        let d = 1usize << self.sites;
        let mut v = vec![ZERO; d * d];
        for (r, c) in levels.iter().enumerate() {
            let (mr, nr) = (m - r, n - r);
            for ((a, b), &coef) in c.indexed_iter() {
                if coef == ZERO {
                    continue;
                }
                let u = self.vector(mr, a);
                let w = self.vector(nr, b);
                for (p, &up) in u.iter().enumerate() {
                    if up == 0.0 {
                        continue;
                    }
                    for (q, &wq) in w.iter().enumerate() {
                        v[p * d + q] += coef * up * wq;
                    }
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        let lv = apply_liouvillian(&self.liouvillian, &v);
        let residual = lv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        Ok(Eigenstate {
            eigenvalue: lambda,
            vector: v,
            residual,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Eigenstate {
    pub eigenvalue: C64,
    /// Unit-norm bi-base vector.
    pub vector: Vec<C64>,
    /// `||L v - lambda v||`.
    pub residual: f64,
}

/// One row of a spectrum export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRecord {
    pub re: f64,
    pub im: f64,
    pub degeneracy: usize,
}

/// Collapses eigenvalues equal within `tol` into records with multiplicities.
pub fn spectrum_records(values: &[C64], tol: f64) -> Vec<SpectrumRecord> {
    let mut out: Vec<(C64, usize)> = Vec::new();
    for &v in values {
        match out.iter_mut().find(|(c, _)| (c - v).norm() < tol) {
            Some(entry) => entry.1 += 1,
            None => out.push((v, 1)),
        }
    }
    out.into_iter()
        .map(|(v, d)| SpectrumRecord {
            re: v.re,
            im: v.im,
            degeneracy: d,
        })
        .collect()
}
