//! Lattices, the dissipative XYZ Lindblad model, and its vectorization onto the
//! doubled (right/left) spin lattice.
//!
//! Spin operators follow `S = sigma / 2`. The jump operator on every site is
//! `sqrt(gamma / 2) S^-`, so the dissipator reads
//! `gamma / 2 * sum_j (2 S^-_j rho S^+_j - {S^+_j S^-_j, rho})`.
//!
//! A density matrix `rho = sum rho_mn |m><n|` becomes the vector
//! `sum rho_mn |m> (x) |n>`. On the doubled lattice the right (ket) half occupies
//! sites `0..N` and the left (bra) half sites `N..2N`.

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Chain,
    /// Row-major square lattice: site `(x, y)` has index `y * lx + x`.
    Square { lx: usize, ly: usize },
}

/// A set of sites and ordered nearest-neighbour bonds.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    sites: usize,
    bonds: Vec<(usize, usize)>,
    geometry: Geometry,
    boundary: Boundary,
}

impl Lattice {
    /// Chain with bonds `(j, j + 1)` and, when periodic, the closing bond `(N - 1, 0)`.
    ///
    /// On a periodic two-site chain this keeps both `(0, 1)` and `(1, 0)`, so the
    /// pair interacts twice, exactly as the ordered nearest-neighbour sum does.
    pub fn chain(sites: usize, boundary: Boundary) -> Result<Self> {
        if sites < 2 {
            return Err(Error::InvalidLattice(format!(
                "a chain needs at least 2 sites, got {sites}"
            )));
        }
        let mut bonds: Vec<_> = (0..sites - 1).map(|j| (j, j + 1)).collect();
        if boundary == Boundary::Periodic {
            bonds.push((sites - 1, 0));
        }
        Self::from_bonds(sites, bonds, Geometry::Chain, boundary)
    }

    /// Square lattice with horizontal and vertical bonds; wrap-around bonds are
    /// added in both directions when periodic, giving `2 * lx * ly` bonds.
    pub fn square(lx: usize, ly: usize, boundary: Boundary) -> Result<Self> {
        if lx < 2 || ly < 2 {
            return Err(Error::InvalidLattice(format!(
                "square lattice extents must be at least 2, got {lx}x{ly}"
            )));
        }
        let site = |x: usize, y: usize| y * lx + x;
        let mut bonds = Vec::new();
        for y in 0..ly {
            for x in 0..lx - 1 {
                bonds.push((site(x, y), site(x + 1, y)));
            }
            if boundary == Boundary::Periodic {
                bonds.push((site(lx - 1, y), site(0, y)));
            }
        }
        for x in 0..lx {
            for y in 0..ly - 1 {
                bonds.push((site(x, y), site(x, y + 1)));
            }
            if boundary == Boundary::Periodic {
                bonds.push((site(x, ly - 1), site(x, 0)));
            }
        }
        Self::from_bonds(lx * ly, bonds, Geometry::Square { lx, ly }, boundary)
    }

    /// Builds a lattice from an explicit bond list, checking indices and duplicates.
    pub fn from_bonds(
        sites: usize,
        bonds: Vec<(usize, usize)>,
        geometry: Geometry,
        boundary: Boundary,
    ) -> Result<Self> {
        for (n, &(a, b)) in bonds.iter().enumerate() {
            if a >= sites || b >= sites || a == b {
                return Err(Error::InvalidLattice(format!(
                    "bond ({a}, {b}) is invalid for {sites} sites"
                )));
            }
            if bonds[..n].contains(&(a, b)) {
                return Err(Error::InvalidLattice(format!("duplicate bond ({a}, {b})")));
            }
        }
        Ok(Self {
            sites,
            bonds,
            geometry,
            boundary,
        })
    }

    /// The same lattice with site `j` renamed to `perm[j]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.sites];
        if perm.len() != self.sites || perm.iter().any(|&p| p >= self.sites || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidLattice("relabeling is not a permutation".into()));
        }
        let bonds = self.bonds.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        Self::from_bonds(self.sites, bonds, self.geometry, self.boundary)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
}

/// Dissipative XYZ model: Heisenberg couplings on every bond, one `S^-` jump
/// channel per site with rate `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    lattice: Lattice,
    jx: f64,
    jy: f64,
    jz: f64,
    gamma: f64,
}

impl LindbladModel {
    pub fn xyz(lattice: Lattice, jx: f64, jy: f64, jz: f64, gamma: f64) -> Result<Self> {
        if !(jx.is_finite() && jy.is_finite() && jz.is_finite()) {
            return Err(Error::InvalidModel("couplings must be finite".into()));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "dissipation rate must be finite and non-negative, got {gamma}"
            )));
        }
        Ok(Self {
            lattice,
            jx,
            jy,
            jz,
            gamma,
        })
    }

    /// Isotropic in-plane coupling `jx = jy = j`.
    pub fn xxz(lattice: Lattice, j: f64, jz: f64, gamma: f64) -> Result<Self> {
        Self::xyz(lattice, j, j, jz, gamma)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn sites(&self) -> usize {
        self.lattice.sites
    }

    pub fn jx(&self) -> f64 {
        self.jx
    }

    pub fn jy(&self) -> f64 {
        self.jy
    }

    pub fn jz(&self) -> f64 {
        self.jz
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_isotropic(&self) -> bool {
        self.jx == self.jy
    }

    /// Same couplings on a relabeled lattice.
    pub fn with_lattice(&self, lattice: Lattice) -> Self {
        Self {
            lattice,
            ..self.clone()
        }
    }

    /// Local-term form of the vectorized generator
    /// `-i H (x) 1 + i 1 (x) H^T + sum_mu (2 L (x) L* - L^dag L (x) 1 - 1 (x) L^T L*)`.
    ///
    /// `H` is real in the `S^z` basis, so the left half carries `+i` times the same
    /// bond operators as the right half carries with `-i`.
    pub fn vectorize(&self) -> VectorizedLiouvillian {
        let n = self.sites();
        let mut terms = Vec::new();
        let mut push = |coeff: C64, op: LocalOp| {
            if coeff != C64::new(0.0, 0.0) {
                terms.push(LocalTerm { coeff, op });
            }
        };
        let flip_flop = (self.jx + self.jy) / 4.0;
        let pair = (self.jx - self.jy) / 4.0;
        for &(a, b) in self.lattice.bonds() {
            for (offset, sign) in [(0, -1.0), (n, 1.0)] {
                let (i, j) = (a + offset, b + offset);
                let unit = C64::new(0.0, sign);
                push(unit * self.jz, LocalOp::ZZ(i, j));
                push(unit * flip_flop, LocalOp::FlipFlop(i, j));
                push(unit * pair, LocalOp::PairRaise(i, j));
                push(unit * pair, LocalOp::PairLower(i, j));
            }
        }
        let g = self.gamma;
        for j in 0..n {
            push(C64::new(g, 0.0), LocalOp::PairLower(j, n + j));
            push(C64::new(-g / 2.0, 0.0), LocalOp::Z(j));
            push(C64::new(-g / 2.0, 0.0), LocalOp::Z(n + j));
        }
        push(C64::new(-g * n as f64 / 2.0, 0.0), LocalOp::Identity);
        VectorizedLiouvillian { sites: n, terms }
    }
}

/// A configuration of the `2N` bi-base spins, each `+1` (up) or `-1` (down).
///
/// Entries `0..N` are the right (ket) half, `N..2N` the left (bra) half.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BiBaseConfig {
    spins: Vec<i8>,
}

impl BiBaseConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() || spins.len() % 2 != 0 {
            return Err(Error::InvalidParameters(format!(
                "bi-base configuration needs an even, nonzero length, got {}",
                spins.len()
            )));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameters("spins must be +1 or -1".into()));
        }
        Ok(Self { spins })
    }

    pub fn all_down(sites: usize) -> Self {
        Self {
            spins: vec![-1; 2 * sites],
        }
    }

    /// Diagonal configuration `|l, l>` where both halves encode the basis index `l`.
    pub fn diagonal(sites: usize, l: usize) -> Self {
        let half = Self::from_index(sites, l);
        let mut spins = half.spins[sites..].to_vec();
        spins.extend_from_within(..);
        Self { spins }
    }

    /// Inverse of [`to_index`](Self::to_index).
    pub fn from_index(sites: usize, index: usize) -> Self {
        let len = 2 * sites;
        let spins = (0..len)
            .map(|i| if (index >> (len - 1 - i)) & 1 == 1 { 1 } else { -1 })
            .collect();
        Self { spins }
    }

    /// Dense vector index: site 0 of the right half is the most significant bit and
    /// an up spin is a set bit, so the index equals `m * 2^N + n` for `|m> (x) |n>`.
    pub fn to_index(&self) -> usize {
        self.spins
            .iter()
            .fold(0usize, |acc, &s| (acc << 1) | usize::from(s == 1))
    }

    /// Number of physical sites `N`.
    pub fn sites(&self) -> usize {
        self.spins.len() / 2
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub(crate) fn spins_mut(&mut self) -> &mut [i8] {
        &mut self.spins
    }

    pub fn right(&self) -> &[i8] {
        &self.spins[..self.sites()]
    }

    pub fn left(&self) -> &[i8] {
        &self.spins[self.sites()..]
    }

    pub fn is_diagonal(&self) -> bool {
        self.right() == self.left()
    }

    pub fn flip(&mut self, site: usize) {
        self.spins[site] = -self.spins[site];
    }

    pub fn flipped(&self, sites: &[usize]) -> Self {
        let mut out = self.clone();
        for &s in sites {
            out.flip(s);
        }
        out
    }
}

/// Operator content of one local term on the doubled lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalOp {
    Identity,
    /// `S^z_i`
    Z(usize),
    /// `S^z_i S^z_j`
    ZZ(usize, usize),
    /// `S^+_i S^-_j + S^-_i S^+_j`
    FlipFlop(usize, usize),
    /// `S^+_i S^+_j`
    PairRaise(usize, usize),
    /// `S^-_i S^-_j`
    PairLower(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTerm {
    pub coeff: C64,
    pub op: LocalOp,
}

/// One nonzero matrix element reachable from a configuration: `flips` is `None`
/// for the diagonal, otherwise the two sites whose spins differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Connection {
    pub flips: Option<(usize, usize)>,
    pub amplitude: C64,
}

/// The vectorized Liouvillian as a sum of local terms on `2N` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedLiouvillian {
    sites: usize,
    terms: Vec<LocalTerm>,
}

impl VectorizedLiouvillian {
    pub fn from_terms(sites: usize, terms: Vec<LocalTerm>) -> Self {
        Self { sites, terms }
    }

    /// Physical sites `N`; the operator acts on `2N` spins.
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    /// Row elements `<x|L|x'>` written into `out` (cleared first). The diagonal,
    /// if present, comes first; off-diagonal partners are merged.
    pub fn row_elements(&self, spins: &[i8], out: &mut Vec<Connection>) {
        self.elements(spins, false, out)
    }

    /// Column elements `<x'|L|x>`, i.e. the expansion of `L|x>`.
    pub fn column_elements(&self, spins: &[i8], out: &mut Vec<Connection>) {
        self.elements(spins, true, out)
    }

    fn elements(&self, s: &[i8], column: bool, out: &mut Vec<Connection>) {
        out.clear();
        let mut diag = C64::new(0.0, 0.0);
        let off = |pair: (usize, usize), amp: C64, out: &mut Vec<Connection>| {
            let key = Some(if pair.0 < pair.1 { pair } else { (pair.1, pair.0) });
            match out.iter_mut().find(|c| c.flips == key) {
                Some(c) => c.amplitude += amp,
                None => out.push(Connection {
                    flips: key,
                    amplitude: amp,
                }),
            }
        };
        for term in &self.terms {
            match term.op {
                LocalOp::Identity => diag += term.coeff,
                LocalOp::Z(i) => diag += term.coeff * 0.5 * f64::from(s[i]),
                LocalOp::ZZ(i, j) => diag += term.coeff * 0.25 * f64::from(s[i] * s[j]),
                LocalOp::FlipFlop(i, j) => {
                    if s[i] != s[j] {
                        off((i, j), term.coeff, out);
                    }
                }
                LocalOp::PairRaise(i, j) | LocalOp::PairLower(i, j) => {
                    // A row of S+S+ needs both spins up; its column needs both down.
                    let raise = matches!(term.op, LocalOp::PairRaise(..));
                    let need = if raise != column { 1 } else { -1 };
                    if s[i] == need && s[j] == need {
                        off((i, j), term.coeff, out);
                    }
                }
            }
        }
        out.retain(|c| c.amplitude != C64::new(0.0, 0.0));
        if diag != C64::new(0.0, 0.0) {
            out.insert(
                0,
                Connection {
                    flips: None,
                    amplitude: diag,
                },
            );
        }
    }

    /// All `x'` with `<x|L|x'> != 0`, together with the matrix element.
    pub fn connections(&self, x: &BiBaseConfig) -> Vec<(BiBaseConfig, C64)> {
        let mut buf = Vec::new();
        self.row_elements(x.spins(), &mut buf);
        Self::expand(x, &buf)
    }

    /// All `x'` with `<x'|L|x> != 0`: the nonzero entries of column `x`.
    pub fn column(&self, x: &BiBaseConfig) -> Vec<(BiBaseConfig, C64)> {
        let mut buf = Vec::new();
        self.column_elements(x.spins(), &mut buf);
        Self::expand(x, &buf)
    }

    fn expand(x: &BiBaseConfig, elems: &[Connection]) -> Vec<(BiBaseConfig, C64)> {
        elems
            .iter()
            .map(|c| {
                let partner = match c.flips {
                    None => x.clone(),
                    Some((i, j)) => x.flipped(&[i, j]),
                };
                (partner, c.amplitude)
            })
            .collect()
    }
}
