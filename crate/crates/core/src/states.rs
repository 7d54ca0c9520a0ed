//! Probe states, encoding dynamics and depolarizing noise.
//!
//! Every model here has two execution paths. The dense path builds the full
//! `2^N`-dimensional density matrix and evolves it exactly; it is the oracle and
//! is limited to [`DENSE_LIMIT`]. The closed-form path produces [`ReducedData`]
//! (Bloch vectors and two-body correlation matrices) directly from analytic
//! expressions and works for any `N`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::jet::Real;
use crate::linalg::{
    basis_ket, collective_operator, embed, kron_all, partial_trace, pauli, pauli_string, Axis,
    DenseOperator, PartyStructure, Propagator, C64, ZERO,
};

/// Largest Hilbert-space dimension the dense oracle will build.
pub const DENSE_LIMIT: usize = 1 << 12;

const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const BOUND_TOL: f64 = 1e-10;

pub type Bloch = [f64; 3];
pub type Correlation = [[f64; 3]; 3];

/// Normalized density matrix of `N` qudits.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeState {
    structure: PartyStructure,
    matrix: DenseOperator,
}

impl ProbeState {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(n_parties: usize, local_dim: usize, matrix: DenseOperator) -> Result<Self> {
        let structure = PartyStructure::single(n_parties, local_dim)?;
        if !matrix.is_square() || matrix.dim() != structure.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: structure.total_dim(),
                found: matrix.rows(),
            });
        }
        matrix.ensure_hermitian()?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = matrix.hermitian_eigenvalues()?[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(Self { structure, matrix })
    }

    // Used where the construction itself preserves validity (unitary
    // conjugation, CPTP maps).
    pub(crate) fn trusted(structure: PartyStructure, matrix: DenseOperator) -> Self {
        Self { structure, matrix }
    }

    /// `|psi><psi|` for a normalized ket.
    pub fn pure(n_parties: usize, local_dim: usize, ket: &[C64]) -> Result<Self> {
        let structure = PartyStructure::single(n_parties, local_dim)?;
        if ket.len() != structure.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: structure.total_dim(),
                found: ket.len(),
            });
        }
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("ket has norm^2 {norm}")));
        }
        Ok(Self::trusted(structure, DenseOperator::projector(ket)))
    }

    pub fn structure(&self) -> &PartyStructure {
        &self.structure
    }

    pub fn n_parties(&self) -> usize {
        self.structure.n_parties
    }

    pub fn local_dim(&self) -> usize {
        self.structure.local_dim
    }

    pub fn matrix(&self) -> &DenseOperator {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    /// Reduced density matrix on the given parties.
    pub fn reduced(&self, keep: &[usize]) -> Result<DenseOperator> {
        partial_trace(&self.matrix, &self.structure, keep)
    }

    pub fn expectation(&self, observable: &DenseOperator) -> f64 {
        observable.expectation(&self.matrix)
    }

    /// `U ρ U^dagger` for a unitary on the full register.
    pub fn transformed(&self, unitary: &DenseOperator) -> Result<Self> {
        if unitary.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: unitary.dim(),
            });
        }
        Ok(Self::trusted(self.structure, self.matrix.conjugate_by(unitary)))
    }
}

/// Single- and two-particle Pauli data of an `N`-qubit state.
///
/// `bloch(i)[mu] = tr(ρ_i σ_mu)`, `corr(i, j)[mu][nu] = tr(ρ_ij σ_mu ⊗ σ_nu)`,
/// with `corr(j, i) = corr(i, j)^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedData {
    n: usize,
    layout: Layout,
}

#[derive(Clone, Debug, PartialEq)]
enum Layout {
    // Permutationally invariant: one Bloch vector, one symmetric T.
    Symmetric { bloch: Bloch, corr: Correlation },
    // Per particle; pair (i, j), i < j, stored at `pair_index`.
    PerParty { bloch: Vec<Bloch>, corr: Vec<Correlation> },
}

fn check_bloch(r: &Bloch) -> Result<()> {
    let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm <= 1.0 + BOUND_TOL) {
        return Err(Error::InvalidState(format!("Bloch vector norm {norm} > 1")));
    }
    Ok(())
}

fn check_corr(t: &Correlation) -> Result<()> {
    if t.iter().flatten().any(|x| !(x.abs() <= 1.0 + BOUND_TOL)) {
        return Err(Error::InvalidState(
            "correlation entry outside [-1, 1]".into(),
        ));
    }
    Ok(())
}

pub(crate) fn transpose(t: &Correlation) -> Correlation {
    let mut out = [[0.0; 3]; 3];
    for (mu, row) in t.iter().enumerate() {
        for (nu, &x) in row.iter().enumerate() {
            out[nu][mu] = x;
        }
    }
    out
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl ReducedData {
    /// Permutationally invariant data: every particle has Bloch vector `bloch`
    /// and every pair the symmetric correlation matrix `corr`.
    pub fn symmetric(n: usize, bloch: Bloch, corr: Correlation) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one party".into()));
        }
        check_bloch(&bloch)?;
        check_corr(&corr)?;
        for mu in 0..3 {
            for nu in 0..mu {
                if (corr[mu][nu] - corr[nu][mu]).abs() > BOUND_TOL {
                    return Err(Error::NotPermutationInvariant(
                        "correlation matrix is not symmetric".into(),
                    ));
                }
            }
        }
        Ok(Self {
            n,
            layout: Layout::Symmetric { bloch, corr },
        })
    }

    /// General data. `corr` lists `T_ij` for `i < j` in lexicographic order.
    pub fn per_party(bloch: Vec<Bloch>, corr: Vec<Correlation>) -> Result<Self> {
        let n = bloch.len();
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one party".into()));
        }
        if corr.len() != n * (n - 1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: n * (n - 1) / 2,
                found: corr.len(),
            });
        }
        bloch.iter().try_for_each(check_bloch)?;
        corr.iter().try_for_each(check_corr)?;
        Ok(Self {
            n,
            layout: Layout::PerParty { bloch, corr },
        })
    }

    /// Extracts Pauli data from a full qubit state.
    pub fn from_state(state: &ProbeState) -> Result<Self> {
        if state.local_dim() != 2 {
            return Err(Error::UnsupportedDimension(state.local_dim()));
        }
        let n = state.n_parties();
        let paulis: Vec<DenseOperator> = Axis::ALL.iter().map(|&a| pauli(a)).collect();
        let mut bloch = Vec::with_capacity(n);
        for i in 0..n {
            let rho = state.reduced(&[i])?;
            let mut r = [0.0; 3];
            for (mu, p) in paulis.iter().enumerate() {
                r[mu] = p.expectation(&rho);
            }
            bloch.push(r);
        }
        let mut corr = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let rho = state.reduced(&[i, j])?;
                let mut t = [[0.0; 3]; 3];
                for (mu, a) in paulis.iter().enumerate() {
                    for (nu, b) in paulis.iter().enumerate() {
                        t[mu][nu] = crate::linalg::kron(a, b).expectation(&rho);
                    }
                }
                corr.push(t);
            }
        }
        Self::per_party(bloch, corr)
    }

    pub fn n_parties(&self) -> usize {
        self.n
    }

    pub fn bloch(&self, i: usize) -> Bloch {
        assert!(i < self.n, "party {i} out of range");
        match &self.layout {
            Layout::Symmetric { bloch, .. } => *bloch,
            Layout::PerParty { bloch, .. } => bloch[i],
        }
    }

    /// `T_ij`; `i != j`.
    pub fn corr(&self, i: usize, j: usize) -> Correlation {
        assert!(i != j && i < self.n && j < self.n, "invalid pair ({i}, {j})");
        match &self.layout {
            Layout::Symmetric { corr, .. } => *corr,
            Layout::PerParty { corr, .. } => {
                if i < j {
                    corr[pair_index(self.n, i, j)]
                } else {
                    transpose(&corr[pair_index(self.n, j, i)])
                }
            }
        }
    }

    /// The shared Bloch vector and correlation matrix, when stored in
    /// permutationally invariant form.
    pub fn symmetric_parts(&self) -> Option<(Bloch, Correlation)> {
        match &self.layout {
            Layout::Symmetric { bloch, corr } => Some((*bloch, *corr)),
            Layout::PerParty { .. } => None,
        }
    }

    /// Expands to the per-particle layout.
    pub fn to_per_party(&self) -> Self {
        let n = self.n;
        let bloch = (0..n).map(|i| self.bloch(i)).collect();
        let mut corr = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                corr.push(self.corr(i, j));
            }
        }
        Self {
            n,
            layout: Layout::PerParty { bloch, corr },
        }
    }

    /// Data after local depolarizing noise: `r -> p r`, `T -> p^2 T`.
    pub fn depolarized(&self, noise: NoiseModel) -> Self {
        let p = noise.p();
        let sr = |r: &Bloch| r.map(|x| p * x);
        let st = |t: &Correlation| t.map(|row| row.map(|x| p * p * x));
        let layout = match &self.layout {
            Layout::Symmetric { bloch, corr } => Layout::Symmetric {
                bloch: sr(bloch),
                corr: st(corr),
            },
            Layout::PerParty { bloch, corr } => Layout::PerParty {
                bloch: bloch.iter().map(sr).collect(),
                corr: corr.iter().map(st).collect(),
            },
        };
        Self { n: self.n, layout }
    }

    /// Largest entrywise difference of the Bloch and correlation data.
    pub fn max_abs_diff(&self, other: &ReducedData) -> f64 {
        assert_eq!(self.n, other.n);
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for (a, b) in self.bloch(i).iter().zip(other.bloch(i)) {
                m = m.max((a - b).abs());
            }
            for j in (i + 1)..self.n {
                for (ra, rb) in self.corr(i, j).iter().zip(other.corr(i, j)) {
                    for (a, b) in ra.iter().zip(rb) {
                        m = m.max((a - b).abs());
                    }
                }
            }
        }
        m
    }
}

/// `α|0...0> + β|1...1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymmetricGHZ {
    alpha: C64,
    beta: C64,
    n: usize,
}

impl AsymmetricGHZ {
    pub fn new(alpha: C64, beta: C64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("GHZ needs at least one party".into()));
        }
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "|alpha|^2 + |beta|^2 = {norm}, expected 1"
            )));
        }
        Ok(Self { alpha, beta, n })
    }

    /// Real amplitudes with `β = sqrt(1 - α²)`.
    pub fn from_real_alpha(alpha: f64, n: usize) -> Result<Self> {
        if !(-1.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [-1, 1], got {alpha}"
            )));
        }
        let beta = (1.0 - alpha * alpha).max(0.0).sqrt();
        Self::new(C64::new(alpha, 0.0), C64::new(beta, 0.0), n)
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    pub fn n_parties(&self) -> usize {
        self.n
    }

    /// `Δ = |α|² - |β|²`.
    pub fn delta(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr()
    }

    pub fn ket(&self) -> Vec<C64> {
        let mut ket = vec![ZERO; 1 << self.n];
        ket[0] = self.alpha;
        ket[(1 << self.n) - 1] = self.beta;
        ket
    }

    pub fn state(&self) -> Result<ProbeState> {
        guard(2, self.n)?;
        ProbeState::pure(self.n, 2, &self.ket())
    }
}

/// Local depolarizing channel `σ -> pσ + (1-p) 1/d` on every particle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    p: f64,
}

impl NoiseModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "depolarizing parameter must lie in [0, 1], got {p}"
            )));
        }
        Ok(Self { p })
    }

    pub const fn noiseless() -> Self {
        Self { p: 1.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_noiseless(&self) -> bool {
        self.p == 1.0
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

/// Which Mermin operator generates the dynamics:
/// `Q_1 + i Q_2 = (σ_x + i σ_y)^{⊗N}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MerminKind {
    Q1,
    Q2,
}

/// Parameter-encoding generator.
#[derive(Clone, Debug, PartialEq)]
pub enum DynamicsModel {
    /// One-axis twisting, `H = J_x²`.
    OneAxisTwisting,
    /// `H = Q_1` or `H = Q_2`.
    Mermin(MerminKind),
    /// `H = Σ_i H_i`, one `d×d` generator per particle.
    LocalHamiltonian(Vec<DenseOperator>),
    /// Arbitrary Hermitian generator on the full register.
    Custom(DenseOperator),
}

impl DynamicsModel {
    /// Dense generator on `n` particles of dimension `d`.
    pub fn generator(&self, n: usize, d: usize) -> Result<DenseOperator> {
        guard(d, n)?;
        match self {
            DynamicsModel::OneAxisTwisting => {
                qubits_only(d)?;
                let jx = collective_operator(Axis::X, n);
                Ok(&jx * &jx)
            }
            DynamicsModel::Mermin(kind) => {
                qubits_only(d)?;
                Ok(mermin_generator(n, *kind))
            }
            DynamicsModel::LocalHamiltonian(fields) => {
                if fields.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: fields.len(),
                    });
                }
                let mut h = DenseOperator::zeros(d.pow(n as u32));
                for (i, hi) in fields.iter().enumerate() {
                    hi.ensure_hermitian()?;
                    h = &h + &embed(hi, &[i], n, d)?;
                }
                Ok(h)
            }
            DynamicsModel::Custom(h) => {
                if h.dim() != d.pow(n as u32) {
                    return Err(Error::DimensionMismatch {
                        expected: d.pow(n as u32),
                        found: h.dim(),
                    });
                }
                h.ensure_hermitian()?;
                Ok(h.clone())
            }
        }
    }
}

fn qubits_only(d: usize) -> Result<()> {
    if d == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

fn guard(d: usize, n: usize) -> Result<()> {
    let dim = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > DENSE_LIMIT as u128 {
        return Err(Error::Capacity {
            dim: dim.min(usize::MAX as u128) as usize,
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

/// `Q_1 = Re[(σ_x + iσ_y)^{⊗N}]`, `Q_2 = Im[...]`, expanded into Pauli strings:
/// a string with `m` factors of `σ_y` carries the coefficient `i^m`.
pub fn mermin_generator(n: usize, kind: MerminKind) -> DenseOperator {
    let dim = 1usize << n;
    let mut h = DenseOperator::zeros(dim);
    for mask in 0..(1usize << n) {
        let ys = mask.count_ones() as usize;
        // i^m: real for even m, imaginary for odd m
        let coeff = match (kind, ys % 4) {
            (MerminKind::Q1, 0) => 1.0,
            (MerminKind::Q1, 2) => -1.0,
            (MerminKind::Q2, 1) => 1.0,
            (MerminKind::Q2, 3) => -1.0,
            _ => continue,
        };
        let axes: Vec<Option<Axis>> = (0..n)
            .map(|s| Some(if mask >> s & 1 == 1 { Axis::Y } else { Axis::X }))
            .collect();
        h = &h + &pauli_string(&axes).scale(coeff);
    }
    h
}

fn ginibre<R: rand::Rng + ?Sized>(rng: &mut R, d: usize) -> nalgebra::DMatrix<C64> {
    use rand_distr::{Distribution, StandardNormal};
    nalgebra::DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// Full-rank random state `G G† / tr(G G†)` with `G` complex Gaussian.
pub fn random_state<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Result<ProbeState> {
    let structure = PartyStructure::single(n, d)?;
    guard(d, n)?;
    let g = ginibre(rng, structure.total_dim());
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    Ok(ProbeState::trusted(structure, DenseOperator::from_matrix(rho.unscale(tr))))
}

/// Random Hermitian `d×d` matrix `(G + G†)/2`.
pub fn random_hermitian<R: rand::Rng + ?Sized>(rng: &mut R, d: usize) -> DenseOperator {
    let g = ginibre(rng, d);
    DenseOperator::from_matrix((&g + g.adjoint()).scale(0.5))
}

/// `|b>^{⊗n}` for `b ∈ {0, 1}`.
pub fn product_state(n: usize, b: usize) -> Result<ProbeState> {
    if b > 1 {
        return Err(Error::InvalidParameter(format!("basis label must be 0 or 1, got {b}")));
    }
    guard(2, n)?;
    ProbeState::pure(n, 2, &basis_ket(&vec![b; n], 2))
}

/// Exact `V_θ ρ V_θ^dagger` on the full register.
pub fn evolve_full(state: &ProbeState, model: &DynamicsModel, theta: f64) -> Result<ProbeState> {
    let h = model.generator(state.n_parties(), state.local_dim())?;
    let prop = Propagator::new(&h)?;
    Ok(ProbeState::trusted(
        *state.structure(),
        prop.evolve(state.matrix(), theta)?,
    ))
}

fn depolarize_site(op: &DenseOperator, site: usize, n_sites: usize, d: usize, p: f64) -> DenseOperator {
    let m = op.matrix();
    let dim = m.nrows();
    let stride = d.pow((n_sites - 1 - site) as u32);
    let digit = |idx: usize| (idx / stride) % d;
    let mix = (1.0 - p) / d as f64;
    let out = nalgebra::DMatrix::from_fn(dim, dim, |r, c| {
        let (x, y) = (digit(r), digit(c));
        let mut v = m[(r, c)] * p;
        if x == y {
            let (r0, c0) = (r - x * stride, c - y * stride);
            let traced: C64 = (0..d).map(|z| m[(r0 + z * stride, c0 + z * stride)]).sum();
            v += traced * mix;
        }
        v
    });
    DenseOperator::from_matrix(out)
}

/// `E_p^{⊗N}` applied to any operator on the register (states and tangents).
pub fn depolarize_operator(op: &DenseOperator, structure: &PartyStructure, noise: NoiseModel) -> DenseOperator {
    if noise.is_noiseless() {
        return op.clone();
    }
    let n_sites = structure.sites();
    (0..n_sites).fold(op.clone(), |acc, s| {
        depolarize_site(&acc, s, n_sites, structure.local_dim, noise.p())
    })
}

/// Local depolarizing noise on every particle of the state.
pub fn apply_depolarizing_full(state: &ProbeState, noise: NoiseModel) -> ProbeState {
    ProbeState::trusted(
        *state.structure(),
        depolarize_operator(state.matrix(), state.structure(), noise),
    )
}

/// `⊗_i exp(-iθH_i)` applied to the state.
pub fn local_encoding(state: &ProbeState, local_fields: &[DenseOperator], theta: f64) -> Result<ProbeState> {
    let d = state.local_dim();
    if local_fields.len() != state.n_parties() {
        return Err(Error::DimensionMismatch {
            expected: state.n_parties(),
            found: local_fields.len(),
        });
    }
    let mut us = Vec::with_capacity(local_fields.len());
    for h in local_fields {
        if h.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: h.dim() });
        }
        us.push(Propagator::new(h)?.unitary(theta));
    }
    state.transformed(&kron_all(us.iter()))
}

/// Bloch vector and pair correlation of the OAT state
/// `exp(-iθJ_x²)|1>^{⊗N}`, identical for every particle and pair.
pub fn oat_pair_data<S: Real>(n: usize, theta: S) -> ([S; 3], [[S; 3]; 3]) {
    let ni = n as i32;
    let zero = S::constant(0.0);
    let (c, s) = theta.cos_sin();
    let c2 = (c * c - s * s).powi(ni - 2);
    let rz = -c.powi(ni - 1);
    let tyy = (S::constant(1.0) - c2).scale(0.5);
    let tzz = (c2 + S::constant(1.0)).scale(0.5);
    let txy = s * c.powi(ni - 2);
    (
        [zero, zero, rz],
        [[zero, txy, zero], [txy, tyy, zero], [zero, zero, tzz]],
    )
}

/// Closed-form reduced data of the OAT state.
pub fn oat_reduced_closed_form(n: usize, theta: f64) -> Result<ReducedData> {
    if n < 2 {
        return Err(Error::InvalidParameter("OAT closed form needs N >= 2".into()));
    }
    let (r, t) = oat_pair_data(n, theta);
    ReducedData::symmetric(n, r, t)
}

fn ghz_pair_data<S: Real>(n: usize, delta: S, coherence_re: S, coherence_im: S) -> ([S; 3], [[S; 3]; 3]) {
    let zero = S::constant(0.0);
    let one = S::constant(1.0);
    let r = [zero, zero, delta];
    let t = if n == 2 {
        // For two qubits the "marginal" is the full state and keeps its
        // |00><11| coherence: T_xx = -T_yy = 2 Re(ᾱβ), T_xy = T_yx = 2 Im(ᾱβ).
        let re = coherence_re.scale(2.0);
        let im = coherence_im.scale(2.0);
        [[re, im, zero], [im, -re, zero], [zero, zero, one]]
    } else {
        [[zero; 3], [zero; 3], [zero, zero, one]]
    };
    (r, t)
}

/// Reduced data of an asymmetric GHZ state.
pub fn ghz_reduced(ghz: &AsymmetricGHZ) -> ReducedData {
    let z = ghz.alpha.conj() * ghz.beta;
    let (r, t) = ghz_pair_data(ghz.n, ghz.delta(), z.re, z.im);
    ReducedData::symmetric(ghz.n, r, t).expect("GHZ data is permutationally invariant")
}

/// Reduced data of `exp(-iθQ_n)|0>^{⊗N}`, i.e. `cos θ'|0..0> - i sin θ'|1..1>`
/// for `Q_1` and `cos θ'|0..0> + sin θ'|1..1>` for `Q_2`, with `θ' = 2^{N-1} θ`.
pub fn mermin_pair_data<S: Real>(n: usize, kind: MerminKind, theta: S) -> ([S; 3], [[S; 3]; 3]) {
    let (delta, sin) = theta.scale(2f64.powi(n as i32)).cos_sin();
    let half_sin = sin.scale(0.5);
    let zero = S::constant(0.0);
    // ᾱβ = -i cos θ' sin θ' for Q_1, cos θ' sin θ' for Q_2
    let (re, im) = match kind {
        MerminKind::Q1 => (zero, -half_sin),
        MerminKind::Q2 => (half_sin, zero),
    };
    ghz_pair_data(n, delta, re, im)
}

/// Probe/encoding combinations addressable from the command line:
/// `oat:N=<int>`, `mermin1:N=<int>`, `mermin2:N=<int>`,
/// `ghz:N=<int>,alpha=<float>`, `product:N=<int>,b=<0|1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbeSpec {
    Oat { n: usize },
    Mermin { kind: MerminKind, n: usize },
    Ghz { n: usize, alpha: f64 },
    Product { n: usize, b: usize },
}

impl ProbeSpec {
    pub fn n_parties(&self) -> usize {
        match *self {
            ProbeSpec::Oat { n }
            | ProbeSpec::Mermin { n, .. }
            | ProbeSpec::Ghz { n, .. }
            | ProbeSpec::Product { n, .. } => n,
        }
    }

    pub fn with_n(self, n: usize) -> Self {
        match self {
            ProbeSpec::Oat { .. } => ProbeSpec::Oat { n },
            ProbeSpec::Mermin { kind, .. } => ProbeSpec::Mermin { kind, n },
            ProbeSpec::Ghz { alpha, .. } => ProbeSpec::Ghz { n, alpha },
            ProbeSpec::Product { b, .. } => ProbeSpec::Product { n, b },
        }
    }

    /// Encoding dynamics; `None` for static states.
    pub fn dynamics(&self) -> Option<DynamicsModel> {
        match *self {
            ProbeSpec::Oat { .. } => Some(DynamicsModel::OneAxisTwisting),
            ProbeSpec::Mermin { kind, .. } => Some(DynamicsModel::Mermin(kind)),
            ProbeSpec::Ghz { .. } | ProbeSpec::Product { .. } => None,
        }
    }

    /// Closed-form Bloch vector and correlation matrix at `θ`, noiseless.
    pub fn pair_data<S: Real>(&self, theta: S) -> ([S; 3], [[S; 3]; 3]) {
        match *self {
            ProbeSpec::Oat { n } => oat_pair_data(n, theta),
            ProbeSpec::Mermin { kind, n } => mermin_pair_data(n, kind, theta),
            ProbeSpec::Ghz { n, alpha } => {
                let beta = (1.0 - alpha * alpha).max(0.0).sqrt();
                let (r, t) = ghz_pair_data(
                    n,
                    alpha * alpha - beta * beta,
                    alpha * beta,
                    0.0,
                );
                (r.map(S::constant), t.map(|row| row.map(S::constant)))
            }
            ProbeSpec::Product { b, .. } => {
                let z = S::constant(0.0);
                let s = S::constant(if b == 0 { 1.0 } else { -1.0 });
                ([z, z, s], [[z; 3], [z; 3], [z, z, S::constant(1.0)]])
            }
        }
    }

    /// Closed-form reduced data including local depolarizing noise.
    pub fn reduced(&self, theta: f64, noise: NoiseModel) -> Result<ReducedData> {
        let (r, t) = self.pair_data(theta);
        Ok(ReducedData::symmetric(self.n_parties(), r, t)?.depolarized(noise))
    }

    /// Initial (pre-encoding) state on the dense path.
    pub fn initial_state(&self) -> Result<ProbeState> {
        match *self {
            ProbeSpec::Oat { n } => product_state(n, 1),
            ProbeSpec::Mermin { n, .. } => product_state(n, 0),
            ProbeSpec::Ghz { n, alpha } => AsymmetricGHZ::from_real_alpha(alpha, n)?.state(),
            ProbeSpec::Product { n, b } => product_state(n, b),
        }
    }

    /// Dense `ρ_θ = E_p^{⊗N}(V_θ ρ V_θ^dagger)` together with `∂_θ ρ_θ`.
    pub fn full_state_with_tangent(&self, theta: f64, noise: NoiseModel) -> Result<(ProbeState, DenseOperator)> {
        let init = self.initial_state()?;
        let structure = *init.structure();
        let (evolved, tangent) = match self.dynamics() {
            Some(model) => {
                let prop = Propagator::new(&model.generator(init.n_parties(), 2)?)?;
                let evolved = prop.evolve(init.matrix(), theta)?;
                let tangent = prop.tangent(&evolved);
                (evolved, tangent)
            }
            None => (init.matrix().clone(), DenseOperator::zeros(init.dim())),
        };
        Ok((
            ProbeState::trusted(structure, depolarize_operator(&evolved, &structure, noise)),
            depolarize_operator(&tangent, &structure, noise),
        ))
    }

    pub fn full_state(&self, theta: f64, noise: NoiseModel) -> Result<ProbeState> {
        Ok(self.full_state_with_tangent(theta, noise)?.0)
    }
}

impl fmt::Display for ProbeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ProbeSpec::Oat { n } => write!(f, "oat:N={n}"),
            ProbeSpec::Mermin { kind: MerminKind::Q1, n } => write!(f, "mermin1:N={n}"),
            ProbeSpec::Mermin { kind: MerminKind::Q2, n } => write!(f, "mermin2:N={n}"),
            ProbeSpec::Ghz { n, alpha } => write!(f, "ghz:N={n},alpha={alpha}"),
            ProbeSpec::Product { n, b } => write!(f, "product:N={n},b={b}"),
        }
    }
}

impl FromStr for ProbeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fail = |reason: &str| Error::StateSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let (kind, params) = s.split_once(':').ok_or_else(|| fail("missing `:`"))?;
        let mut n = None;
        let mut alpha = None;
        let mut b = None;
        for kv in params.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (key, value) = kv.split_once('=').ok_or_else(|| fail("expected key=value"))?;
            match key.trim() {
                "N" | "n" => {
                    n = Some(value.trim().parse::<usize>().map_err(|_| fail("N must be a positive integer"))?)
                }
                "alpha" => {
                    alpha = Some(value.trim().parse::<f64>().map_err(|_| fail("alpha must be a number"))?)
                }
                "b" => b = Some(value.trim().parse::<usize>().map_err(|_| fail("b must be 0 or 1"))?),
                other => return Err(fail(&format!("unknown key `{other}`"))),
            }
        }
        let n = n.ok_or_else(|| fail("missing N"))?;
        if n == 0 {
            return Err(fail("N must be positive"));
        }
        let spec = match kind.trim() {
            "oat" => {
                if n < 2 {
                    return Err(fail("oat needs N >= 2"));
                }
                ProbeSpec::Oat { n }
            }
            "mermin1" => ProbeSpec::Mermin { kind: MerminKind::Q1, n },
            "mermin2" => ProbeSpec::Mermin { kind: MerminKind::Q2, n },
            "ghz" => {
                let alpha = alpha.ok_or_else(|| fail("ghz needs alpha"))?;
                if !(-1.0..=1.0).contains(&alpha) {
                    return Err(fail("alpha must lie in [-1, 1]"));
                }
                ProbeSpec::Ghz { n, alpha }
            }
            "product" => {
                let b = b.unwrap_or(1);
                if b > 1 {
                    return Err(fail("b must be 0 or 1"));
                }
                ProbeSpec::Product { n, b }
            }
            other => return Err(fail(&format!("unknown state kind `{other}`"))),
        };
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oat_dense(n: usize, theta: f64) -> ReducedData {
        let s = evolve_full(&product_state(n, 1).unwrap(), &DynamicsModel::OneAxisTwisting, theta).unwrap();
        ReducedData::from_state(&s).unwrap()
    }

    #[test]
    fn product_state_examples() {
        let s = product_state(1, 1).unwrap();
        assert_eq!(s.matrix(), &DenseOperator::from_real_diagonal(&[0.0, 1.0]));
        let red = ReducedData::from_state(&product_state(2, 1).unwrap()).unwrap();
        assert_eq!(red.corr(0, 1), [[0.0; 3], [0.0; 3], [0.0, 0.0, 1.0]]);
        assert_eq!(red.bloch(0), [0.0, 0.0, -1.0]);
    }

    #[test]
    fn oat_identity_at_zero() {
        let init = product_state(3, 1).unwrap();
        let out = evolve_full(&init, &DynamicsModel::OneAxisTwisting, 0.0).unwrap();
        assert!(out.matrix().max_abs_diff(init.matrix()) < 1e-14);
    }

    #[test]
    fn oat_closed_form_matches_dense() {
        for n in 2..=6 {
            for &theta in &[0.0, 0.1, 0.3, 0.7, 1.3, std::f64::consts::PI] {
                let closed = oat_reduced_closed_form(n, theta).unwrap();
                let dense = oat_dense(n, theta);
                let diff = closed.max_abs_diff(&dense);
                assert!(diff < 1e-10, "N={n} θ={theta}: {diff:e}");
            }
        }
    }

    #[test]
    fn oat_closed_form_special_values() {
        let red = oat_reduced_closed_form(5, 0.0).unwrap();
        assert_eq!(red.bloch(0), [0.0, 0.0, -1.0]);
        assert_eq!(red.corr(0, 1), [[0.0; 3], [0.0; 3], [0.0, 0.0, 1.0]]);
        let red = oat_reduced_closed_form(4, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(red.bloch(2)[2].abs() < 1e-15);
        assert!(oat_reduced_closed_form(1, 0.3).is_err());
    }

    #[test]
    fn mermin_generator_matches_projector_form() {
        for n in 1..=5 {
            let scale = 2f64.powi(n as i32 - 1);
            let last = (1usize << n) - 1;
            let mut q1 = DenseOperator::zeros(1 << n).into_matrix();
            let mut q2 = q1.clone();
            q1[(0, last)] += C64::new(scale, 0.0);
            q1[(last, 0)] += C64::new(scale, 0.0);
            q2[(0, last)] += C64::new(0.0, -scale);
            q2[(last, 0)] += C64::new(0.0, scale);
            // n = 1 collapses both entries onto the same off-diagonal pair
            let g1 = mermin_generator(n, MerminKind::Q1);
            let g2 = mermin_generator(n, MerminKind::Q2);
            assert!(g1.max_abs_diff(&DenseOperator::from_matrix(q1)) < 1e-12, "Q1 N={n}");
            assert!(g2.max_abs_diff(&DenseOperator::from_matrix(q2)) < 1e-12, "Q2 N={n}");
        }
    }

    #[test]
    fn mermin_two_state_is_rotated_ghz() {
        let theta = 0.05;
        let s = evolve_full(&product_state(3, 0).unwrap(), &DynamicsModel::Mermin(MerminKind::Q2), theta).unwrap();
        let tp = 4.0 * theta;
        let mut ket = vec![ZERO; 8];
        ket[0] = C64::new(tp.cos(), 0.0);
        ket[7] = C64::new(tp.sin(), 0.0);
        assert!(s.matrix().max_abs_diff(&DenseOperator::projector(&ket)) < 1e-12);
    }

    #[test]
    fn mermin_closed_form_matches_dense() {
        for n in 2..=6 {
            for kind in [MerminKind::Q1, MerminKind::Q2] {
                for &theta in &[0.0, 0.01, 0.07, 0.3] {
                    let spec = ProbeSpec::Mermin { kind, n };
                    let closed = spec.reduced(theta, NoiseModel::noiseless()).unwrap();
                    let dense = ReducedData::from_state(&spec.full_state(theta, NoiseModel::noiseless()).unwrap()).unwrap();
                    let diff = closed.max_abs_diff(&dense);
                    assert!(diff < 1e-10, "{kind:?} N={n} θ={theta}: {diff:e}");
                }
            }
        }
    }

    #[test]
    fn ghz_reduced_matches_dense() {
        for n in 2..=5 {
            for &(a, b) in &[(0.8, 0.6), (0.6, -0.8), (1.0, 0.0)] {
                let ghz = AsymmetricGHZ::new(C64::new(a, 0.0), C64::from_polar(b, 0.4), n).unwrap();
                let closed = ghz_reduced(&ghz);
                let dense = ReducedData::from_state(&ghz.state().unwrap()).unwrap();
                assert!(closed.max_abs_diff(&dense) < 1e-12, "N={n}");
            }
        }
        let ghz = AsymmetricGHZ::from_real_alpha(1.0, 4).unwrap();
        assert_eq!(ghz_reduced(&ghz).bloch(0), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn ghz_rejects_unnormalized() {
        assert!(AsymmetricGHZ::new(C64::new(1.0, 0.0), C64::new(1.0, 0.0), 3).is_err());
    }

    #[test]
    fn depolarizing_limits() {
        let s = oat_dense_state(3, 0.4);
        let same = apply_depolarizing_full(&s, NoiseModel::new(1.0).unwrap());
        assert!(same.matrix().max_abs_diff(s.matrix()) < 1e-15);
        let mixed = apply_depolarizing_full(&s, NoiseModel::new(0.0).unwrap());
        assert!(mixed.matrix().max_abs_diff(&DenseOperator::identity(8).scale(0.125)) < 1e-15);
        assert!(NoiseModel::new(1.2).is_err());
        assert!(NoiseModel::new(-0.1).is_err());
    }

    fn oat_dense_state(n: usize, theta: f64) -> ProbeState {
        evolve_full(&product_state(n, 1).unwrap(), &DynamicsModel::OneAxisTwisting, theta).unwrap()
    }

    #[test]
    fn depolarizing_scales_bloch_and_correlations() {
        let s = oat_dense_state(3, 0.35);
        let noise = NoiseModel::new(0.9).unwrap();
        let noisy = ReducedData::from_state(&apply_depolarizing_full(&s, noise)).unwrap();
        let expect = ReducedData::from_state(&s).unwrap().depolarized(noise);
        assert!(noisy.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn depolarized_state_stays_valid() {
        let s = oat_dense_state(3, 0.9);
        let noisy = apply_depolarizing_full(&s, NoiseModel::new(0.37).unwrap());
        let checked = ProbeState::new(3, 2, noisy.matrix().clone());
        assert!(checked.is_ok());
    }

    #[test]
    fn local_encoding_zero_field_is_identity() {
        let s = oat_dense_state(3, 0.2);
        let zero = vec![DenseOperator::zeros(2); 3];
        let out = local_encoding(&s, &zero, 0.7).unwrap();
        assert!(out.matrix().max_abs_diff(s.matrix()) < 1e-15);
    }

    #[test]
    fn evolve_full_capacity_guard() {
        let big = ProbeSpec::Oat { n: 13 };
        assert!(matches!(big.initial_state(), Err(Error::Capacity { .. })));
    }

    #[test]
    fn spec_grammar_round_trip() {
        for s in ["oat:N=4", "mermin1:N=3", "mermin2:N=5", "ghz:N=4,alpha=0.6", "product:N=3,b=0"] {
            let spec: ProbeSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        for bad in ["oat", "oat:N=x", "foo:N=3", "ghz:N=3", "product:N=3,b=2", "oat:N=1", "ghz:N=2,alpha=2"] {
            assert!(bad.parse::<ProbeSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn random_states_are_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for (n, d) in [(1, 2), (2, 3), (3, 2)] {
            let s = random_state(&mut rng, n, d).unwrap();
            assert!(ProbeState::new(n, d, s.matrix().clone()).is_ok());
        }
        assert!(random_hermitian(&mut rng, 3).is_hermitian());
    }

    #[test]
    fn state_validation() {
        assert!(ProbeState::new(1, 2, DenseOperator::identity(2)).is_err());
        assert!(ProbeState::new(1, 2, DenseOperator::from_real_diagonal(&[1.5, -0.5])).is_err());
        assert!(ProbeState::new(1, 2, DenseOperator::identity(2).scale(0.5)).is_ok());
    }
}
