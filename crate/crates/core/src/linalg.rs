//! Dense complex operators on multi-party Hilbert spaces.
//!
//! Basis convention used throughout the crate: computational basis with
//! `|0> = (1, 0)^T`, `sigma_z = diag(1, -1)`, so `sigma_z |1> = -|1>`. Site 0 is
//! the leftmost (most significant) tensor factor. Parties and sites are
//! 0-indexed.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Entrywise tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// A dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator(DMatrix<C64>);

impl DenseOperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, entries)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    /// Projector onto a pure state `|psi><psi|`.
    pub fn projector(ket: &[C64]) -> Self {
        let n = ket.len();
        Self(DMatrix::from_fn(n, n, |i, j| ket[i] * ket[j].conj()))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    /// Dimension of a square operator.
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.map(|z| z * c))
    }

    pub fn scale_complex(&self, c: C64) -> Self {
        Self(&self.0 * c)
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &DenseOperator) -> C64 {
        let (n, m) = self.0.shape();
        assert_eq!((m, n), other.0.shape(), "trace_product shape mismatch");
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..m {
                acc += self.0[(i, k)] * other.0[(k, i)];
            }
        }
        acc
    }

    /// Expectation `tr(rho * self)`, real part.
    pub fn expectation(&self, rho: &DenseOperator) -> f64 {
        rho.trace_product(self).re
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        assert_eq!(self.0.shape(), other.0.shape());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() < HERMITIAN_TOL
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        let deviation = self.hermitian_deviation();
        if deviation < HERMITIAN_TOL {
            Ok(())
        } else {
            Err(Error::NotHermitian { deviation })
        }
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        self.ensure_hermitian()?;
        let eig = SymmetricEigen::new(self.0.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        Ok(vals)
    }

    /// `self * other`, the commutator helpers build on this.
    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        Self(&self.0 * &other.0)
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &DenseOperator) -> DenseOperator {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// `U * self * U^dagger`.
    pub fn conjugate_by(&self, u: &DenseOperator) -> DenseOperator {
        Self(&u.0 * &self.0 * u.0.adjoint())
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, o: &DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 + &o.0)
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, o: &DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 - &o.0)
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, o: &DenseOperator) -> DenseOperator {
        self.matmul(o)
    }
}

/// Pauli axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

pub fn pauli(axis: Axis) -> DenseOperator {
    let m = match axis {
        Axis::X => [ZERO, ONE, ONE, ZERO],
        Axis::Y => [ZERO, -I, I, ZERO],
        Axis::Z => [ONE, ZERO, ZERO, -ONE],
    };
    DenseOperator(DMatrix::from_row_slice(2, 2, &m))
}

/// Party layout of a (possibly multi-copy) register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartyStructure {
    pub n_parties: usize,
    pub local_dim: usize,
    pub n_copies: usize,
}

impl PartyStructure {
    pub fn new(n_parties: usize, local_dim: usize, n_copies: usize) -> Result<Self> {
        if n_parties == 0 || n_copies == 0 {
            return Err(Error::InvalidParameter(
                "party and copy counts must be positive".into(),
            ));
        }
        if local_dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "local dimension must be at least 2, got {local_dim}"
            )));
        }
        Ok(Self {
            n_parties,
            local_dim,
            n_copies,
        })
    }

    pub fn single(n_parties: usize, local_dim: usize) -> Result<Self> {
        Self::new(n_parties, local_dim, 1)
    }

    /// Number of tensor factors, `N * k`.
    pub fn sites(&self) -> usize {
        self.n_parties * self.n_copies
    }

    pub fn total_dim(&self) -> usize {
        self.local_dim.pow(self.sites() as u32)
    }

    /// Site index of `party` in copy `copy`; copies are laid out one after another.
    pub fn site(&self, copy: usize, party: usize) -> usize {
        copy * self.n_parties + party
    }

    fn check(&self, op: &DenseOperator) -> Result<()> {
        if !op.is_square() {
            return Err(Error::NotSquare {
                rows: op.rows(),
                cols: op.cols(),
            });
        }
        if op.dim() != self.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim(),
                found: op.dim(),
            });
        }
        Ok(())
    }
}

pub fn kron(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    DenseOperator(a.0.kronecker(&b.0))
}

/// Kronecker product of a sequence, left to right.
pub fn kron_all<'a>(ops: impl IntoIterator<Item = &'a DenseOperator>) -> DenseOperator {
    ops.into_iter()
        .fold(DenseOperator::identity(1), |acc, op| kron(&acc, op))
}

/// `op^{⊗k}`.
pub fn kron_power(op: &DenseOperator, k: usize) -> DenseOperator {
    (0..k).fold(DenseOperator::identity(1), |acc, _| kron(&acc, op))
}

// Offsets contributed by every digit assignment of the listed sites, enumerated
// with the first listed site as the most significant digit.
fn site_offsets(sites: &[usize], n_sites: usize, d: usize) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &s in sites {
        let stride = d.pow((n_sites - 1 - s) as u32);
        let mut next = Vec::with_capacity(offsets.len() * d);
        for &o in &offsets {
            for x in 0..d {
                next.push(o + x * stride);
            }
        }
        offsets = next;
    }
    offsets
}

fn complement(sites: &[usize], n_sites: usize) -> Vec<usize> {
    (0..n_sites).filter(|s| !sites.contains(s)).collect()
}

fn validate_sites(sites: &[usize], n_sites: usize) -> Result<()> {
    for (k, &s) in sites.iter().enumerate() {
        if s >= n_sites {
            return Err(Error::InvalidParameter(format!(
                "site {s} out of range for {n_sites} sites"
            )));
        }
        if sites[..k].contains(&s) {
            return Err(Error::InvalidParameter(format!("site {s} listed twice")));
        }
    }
    Ok(())
}

/// Reduced operator on the kept sites (ascending order), tracing out the rest.
pub fn partial_trace(
    op: &DenseOperator,
    structure: &PartyStructure,
    keep: &[usize],
) -> Result<DenseOperator> {
    structure.check(op)?;
    let n_sites = structure.sites();
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    validate_sites(&keep, n_sites)?;
    let d = structure.local_dim;
    let kept = site_offsets(&keep, n_sites, d);
    let rest = site_offsets(&complement(&keep, n_sites), n_sites, d);
    let m = &op.0;
    let out = DMatrix::from_fn(kept.len(), kept.len(), |a, b| {
        let (ra, rb) = (kept[a], kept[b]);
        rest.iter().map(|&r| m[(ra + r, rb + r)]).sum()
    });
    Ok(DenseOperator(out))
}

/// Places `op` (acting on `sites.len()` factors, in the listed order) into the
/// full `n_sites`-factor space, identity elsewhere.
pub fn embed(op: &DenseOperator, sites: &[usize], n_sites: usize, d: usize) -> Result<DenseOperator> {
    validate_sites(sites, n_sites)?;
    let local = d.pow(sites.len() as u32);
    if !op.is_square() || op.dim() != local {
        return Err(Error::DimensionMismatch {
            expected: local,
            found: op.rows(),
        });
    }
    let inner = site_offsets(sites, n_sites, d);
    let rest = site_offsets(&complement(sites, n_sites), n_sites, d);
    let dim = d.pow(n_sites as u32);
    let mut out = DMatrix::zeros(dim, dim);
    for a in 0..local {
        for b in 0..local {
            let v = op.0[(a, b)];
            if v == ZERO {
                continue;
            }
            for &r in &rest {
                out[(inner[a] + r, inner[b] + r)] = v;
            }
        }
    }
    Ok(DenseOperator(out))
}

/// SWAP on two `d`-level systems: `S|x>|y> = |y>|x>`.
pub fn swap_operator(d: usize) -> DenseOperator {
    let mut m = DMatrix::zeros(d * d, d * d);
    for x in 0..d {
        for y in 0..d {
            m[(y * d + x, x * d + y)] = ONE;
        }
    }
    DenseOperator(m)
}

/// Spectral decomposition of a Hermitian generator, reusable across θ.
#[derive(Clone, Debug)]
pub struct Propagator {
    generator: DenseOperator,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
}

impl Propagator {
    pub fn new(generator: &DenseOperator) -> Result<Self> {
        generator.ensure_hermitian()?;
        let eig = SymmetricEigen::new(generator.0.clone());
        Ok(Self {
            generator: generator.clone(),
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn generator(&self) -> &DenseOperator {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `exp(-i θ H)`.
    pub fn unitary(&self, theta: f64) -> DenseOperator {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let phase = C64::from_polar(1.0, -theta * lam);
            for i in 0..q.nrows() {
                scaled[(i, j)] *= phase;
            }
        }
        DenseOperator(scaled * q.adjoint())
    }

    /// `V ρ V^dagger` with `V = exp(-i θ H)`.
    pub fn evolve(&self, state: &DenseOperator, theta: f64) -> Result<DenseOperator> {
        if state.dim() != self.dim() || !state.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.rows(),
            });
        }
        Ok(state.conjugate_by(&self.unitary(theta)))
    }

    /// `d/dθ (V ρ V^dagger) = -i [H, ρ_θ]` given the evolved `ρ_θ`.
    pub fn tangent(&self, evolved: &DenseOperator) -> DenseOperator {
        self.generator.commutator(evolved).scale_complex(-I)
    }
}

/// `exp(-iθH) ρ exp(iθH)` via the eigendecomposition of `H`.
pub fn hermitian_evolve(
    state: &DenseOperator,
    hamiltonian: &DenseOperator,
    theta: f64,
) -> Result<DenseOperator> {
    Propagator::new(hamiltonian)?.evolve(state, theta)
}

/// Collective spin component `J_mu = 1/2 sum_i sigma_mu^(i)` on `n` qubits.
pub fn collective_operator(axis: Axis, n: usize) -> DenseOperator {
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for site in 0..n {
        let bit = 1usize << (n - 1 - site);
        for col in 0..dim {
            let up = col & bit == 0;
            match axis {
                Axis::Z => m[(col, col)] += C64::new(if up { 0.5 } else { -0.5 }, 0.0),
                Axis::X => m[(col ^ bit, col)] += C64::new(0.5, 0.0),
                // sigma_y|0> = i|1>, sigma_y|1> = -i|0>
                Axis::Y => m[(col ^ bit, col)] += if up { I * 0.5 } else { -I * 0.5 },
            }
        }
    }
    DenseOperator(m)
}

/// Pauli string on `n` qubits, `None` meaning identity at that site.
pub fn pauli_string(axes: &[Option<Axis>]) -> DenseOperator {
    let ops: Vec<DenseOperator> = axes
        .iter()
        .map(|a| a.map(pauli).unwrap_or_else(|| DenseOperator::identity(2)))
        .collect();
    kron_all(ops.iter())
}

/// Computational basis ket `|b_1 ... b_n>` of `n` qudits.
pub fn basis_ket(digits: &[usize], d: usize) -> Vec<C64> {
    let dim = d.pow(digits.len() as u32);
    let idx = digits.iter().fold(0, |acc, &x| acc * d + x);
    let mut v = vec![ZERO; dim];
    v[idx] = ONE;
    v
}
