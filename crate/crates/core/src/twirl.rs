//! Twirled observables, the Haar sampler and the dense multi-copy oracle.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::{collective_terms, invariant_set};
use crate::linalg::{
    collective_operator, embed, kron, kron_all, kron_power, pauli, swap_operator, Axis,
    DenseOperator, C64, ZERO,
};
use crate::states::{NoiseModel, ProbeSpec, ProbeState, ReducedData, DENSE_LIMIT};

/// Twirl results below this many samples are flagged.
pub const LOW_SAMPLE_WARNING: usize = 100;
/// Largest `N` for which the dense collective observable is built.
pub const COLLECTIVE_DENSE_MAX_N: usize = 6;

const BATCH: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwirlScheme {
    TwoCopyLocal,
    FourCopyLocal,
    CollectiveTwoCopy,
}

impl TwirlScheme {
    pub fn copies(self) -> usize {
        match self {
            TwirlScheme::FourCopyLocal => 4,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Provenance {
    Analytic,
    MonteCarlo { samples: usize, seed: u64, stream: u64 },
}

/// Entrywise standard errors of a Monte Carlo mean, real and imaginary parts
/// kept apart.
#[derive(Clone, Debug, PartialEq)]
pub struct StdErrors {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwirledObservable {
    pub operator: DenseOperator,
    pub scheme: TwirlScheme,
    pub provenance: Provenance,
    pub std_errors: Option<StdErrors>,
    /// Set when fewer than [`LOW_SAMPLE_WARNING`] samples were drawn.
    pub low_samples: bool,
}

impl TwirledObservable {
    fn analytic(operator: DenseOperator, scheme: TwirlScheme) -> Self {
        Self {
            operator,
            scheme,
            provenance: Provenance::Analytic,
            std_errors: None,
            low_samples: false,
        }
    }

    /// Largest `|estimate - reference|` measured in standard errors, per real
    /// and imaginary part. `floor` is added to every standard error so that
    /// entries which are exactly zero in every sample do not divide by zero.
    pub fn max_sigma_deviation(&self, reference: &DenseOperator, floor: f64) -> Option<f64> {
        let se = self.std_errors.as_ref()?;
        let est = self.operator.matrix();
        let refm = reference.matrix();
        let mut worst: f64 = 0.0;
        for r in 0..est.nrows() {
            for c in 0..est.ncols() {
                let d = est[(r, c)] - refm[(r, c)];
                worst = worst.max(d.re.abs() / (se.re[(r, c)] + floor));
                worst = worst.max(d.im.abs() / (se.im[(r, c)] + floor));
            }
        }
        Some(worst)
    }

    /// Whether every entry lies within `sigmas` standard errors (plus `floor`).
    pub fn within(&self, reference: &DenseOperator, sigmas: f64, floor: f64) -> bool {
        let Some(se) = self.std_errors.as_ref() else {
            return self.operator.max_abs_diff(reference) <= floor;
        };
        let est = self.operator.matrix();
        let refm = reference.matrix();
        (0..est.nrows()).all(|r| {
            (0..est.ncols()).all(|c| {
                let d = est[(r, c)] - refm[(r, c)];
                d.re.abs() <= sigmas * se.re[(r, c)] + floor
                    && d.im.abs() <= sigmas * se.im[(r, c)] + floor
            })
        })
    }
}

/// Seeded source of Haar-random unitaries. Draws are organized in fixed
/// batches; batch `b` uses ChaCha8 seeded by `seed` on stream
/// `(stream << 32) | b`, so results do not depend on the thread count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HaarSampler {
    pub seed: u64,
    pub stream: u64,
}

impl HaarSampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn substream(&self, stream: u64) -> Self {
        Self { seed: self.seed, stream }
    }

    fn batch_rng(&self, batch: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((self.stream << 32) | batch);
        rng
    }

    /// The first `count` unitaries of dimension `d`, in sample order.
    pub fn unitaries(&self, d: usize, count: usize) -> Vec<DenseOperator> {
        let mut out = Vec::with_capacity(count);
        for (b, size) in batches(count).enumerate() {
            let mut rng = self.batch_rng(b as u64);
            out.extend((0..size).map(|_| haar_unitary(&mut rng, d)));
        }
        out
    }
}

fn batches(samples: usize) -> impl Iterator<Item = usize> {
    let full = samples / BATCH;
    let rest = samples % BATCH;
    std::iter::repeat_n(BATCH, full).chain((rest > 0).then_some(rest))
}

/// Haar-random `d×d` unitary: QR of a complex Ginibre matrix by modified
/// Gram-Schmidt. Gram-Schmidt leaves `R` with a positive real diagonal, which
/// is the phase fix that makes `Q` exactly Haar distributed.
pub fn haar_unitary<R: rand::Rng + ?Sized>(rng: &mut R, d: usize) -> DenseOperator {
    let mut m = DMatrix::<C64>::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    for j in 0..d {
        for i in 0..j {
            let proj: C64 = m.column(i).dotc(&m.column(j));
            let qi = m.column(i).into_owned();
            m.column_mut(j).axpy(-proj, &qi, C64::new(1.0, 0.0));
        }
        let norm = m.column(j).norm();
        m.column_mut(j).unscale_mut(norm);
    }
    DenseOperator::from_matrix(m)
}

struct Moments {
    sum: DMatrix<C64>,
    sq_re: DMatrix<f64>,
    sq_im: DMatrix<f64>,
}

impl Moments {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            sum: DMatrix::from_element(rows, cols, ZERO),
            sq_re: DMatrix::zeros(rows, cols),
            sq_im: DMatrix::zeros(rows, cols),
        }
    }

    fn push(&mut self, x: &DMatrix<C64>) {
        self.sum += x;
        self.sq_re.zip_apply(x, |s, z| *s += z.re * z.re);
        self.sq_im.zip_apply(x, |s, z| *s += z.im * z.im);
    }

    fn merge(&mut self, other: Moments) {
        self.sum += other.sum;
        self.sq_re += other.sq_re;
        self.sq_im += other.sq_im;
    }

    fn finish(self, samples: usize) -> (DenseOperator, StdErrors) {
        let s = samples as f64;
        let mean = self.sum.unscale(s);
        let se = |sq: &DMatrix<f64>, part: fn(&C64) -> f64| {
            DMatrix::from_fn(mean.nrows(), mean.ncols(), |r, c| {
                let m = part(&mean[(r, c)]);
                if samples < 2 {
                    return f64::INFINITY;
                }
                let var = ((sq[(r, c)] / s - m * m) * s / (s - 1.0)).max(0.0);
                (var / s).sqrt()
            })
        };
        let re = se(&self.sq_re, |z| z.re);
        let im = se(&self.sq_im, |z| z.im);
        (DenseOperator::from_matrix(mean), StdErrors { re, im })
    }
}

/// Sample mean and standard errors of `f(rng)` over `samples` draws, evaluated
/// batch-parallel and merged in batch order.
fn mc_mean<F>(sampler: &HaarSampler, samples: usize, shape: (usize, usize), f: F) -> (DenseOperator, StdErrors)
where
    F: Fn(&mut ChaCha8Rng) -> DMatrix<C64> + Sync,
{
    let sizes: Vec<usize> = batches(samples).collect();
    let parts: Vec<Moments> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &size)| {
            let mut rng = sampler.batch_rng(b as u64);
            let mut acc = Moments::zeros(shape.0, shape.1);
            for _ in 0..size {
                acc.push(&f(&mut rng));
            }
            acc
        })
        .collect();
    let mut total = Moments::zeros(shape.0, shape.1);
    for p in parts {
        total.merge(p);
    }
    total.finish(samples)
}

fn dense_guard(dim: usize) -> Result<()> {
    if dim > DENSE_LIMIT {
        return Err(Error::Capacity { dim, limit: DENSE_LIMIT });
    }
    Ok(())
}

/// `Φ₂ = (d𝕊 - 𝟙)/(d² - 1)`, the two-copy twirl of a traceless observable
/// normalized to `tr 𝒪² = d`.
pub fn phi2_analytic(d: usize) -> Result<TwirledObservable> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let df = d as f64;
    let op = &swap_operator(d).scale(df) - &DenseOperator::identity(d * d);
    Ok(TwirledObservable::analytic(
        op.scale(1.0 / (df * df - 1.0)),
        TwirlScheme::TwoCopyLocal,
    ))
}

/// `ℐ(a,b,c,d) = (16/15)(δ_ab δ_cd + δ_ac δ_bd + δ_ad δ_bc)`.
pub fn phi4_moment_tensor(a: Axis, b: Axis, c: Axis, d: Axis) -> f64 {
    let k = |x: Axis, y: Axis| if x == y { 1.0 } else { 0.0 };
    16.0 / 15.0 * (k(a, b) * k(c, d) + k(a, c) * k(b, d) + k(a, d) * k(b, c))
}

/// Dense four-copy qubit twirl `Φ₄(σ_z) = (1/16) Σ ℐ(a,b,c,d) σ_a⊗σ_b⊗σ_c⊗σ_d`.
pub fn phi4_analytic() -> TwirledObservable {
    let mut op = DenseOperator::zeros(16);
    for &a in &Axis::ALL {
        for &b in &Axis::ALL {
            for &c in &Axis::ALL {
                for &d in &Axis::ALL {
                    let w = phi4_moment_tensor(a, b, c, d);
                    if w != 0.0 {
                        let term = kron_all([pauli(a), pauli(b), pauli(c), pauli(d)].iter());
                        op = &op + &term.scale(w / 16.0);
                    }
                }
            }
        }
    }
    TwirledObservable::analytic(op, TwirlScheme::FourCopyLocal)
}

/// `𝒳₂ = (1/4) Σ_ij Φ_ij` with `Φ_ij = (1/3) Σ_μ σ_μ^(i) ⊗ σ_μ^(j)` across the
/// two copies, i.e. `(1/3) Σ_μ J_μ ⊗ J_μ`. Copy-major on `2n` qubits.
pub fn collective_x2(n: usize) -> Result<TwirledObservable> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one party".into()));
    }
    if n > COLLECTIVE_DENSE_MAX_N {
        return Err(Error::Capacity {
            dim: 1usize.checked_shl(2 * n as u32).unwrap_or(usize::MAX),
            limit: 1 << (2 * COLLECTIVE_DENSE_MAX_N),
        });
    }
    let mut op = DenseOperator::zeros(1 << (2 * n));
    for &mu in &Axis::ALL {
        let j = collective_operator(mu, n);
        op = &op + &kron(&j, &j);
    }
    Ok(TwirledObservable::analytic(
        op.scale(1.0 / 3.0),
        TwirlScheme::CollectiveTwoCopy,
    ))
}

/// `⟨𝒳₂⟩ = (S₁ + K₁)/12` and the exact `⟨𝒳₂²⟩` from reduced data, for any `N`.
///
/// With `Q = S₁ + K₁` and `W = Σ_{i≠j} T_ij`,
/// `144⟨𝒳₂²⟩ = 3N² - 2Q + 2N tr W + tr(W Wᵀ)`.
pub fn collective_moments(reduced: &ReducedData) -> Result<(f64, f64)> {
    let inv = invariant_set(reduced);
    let coll = collective_terms(reduced, None)?;
    let n = reduced.n_parties() as f64;
    let q = inv.s1 + coll.k1;
    let second = 3.0 * n * n - 2.0 * q + 2.0 * n * coll.w_trace + coll.w_norm_sq;
    Ok((q / 12.0, second / 144.0))
}

/// Monte Carlo estimate of `∫ dU (U† 𝒪 U)^{⊗k}` (local, `U` acting on the
/// whole of `𝒪`) or of `∫ dV ((V^{⊗n})† 𝒪 V^{⊗n})^{⊗k}` (collective, `V` a
/// single-qubit unitary and `𝒪` an `n`-qubit operator).
pub fn haar_mc_twirl(
    obs: &DenseOperator,
    k: usize,
    sampler: &HaarSampler,
    samples: usize,
    collective: bool,
    n: usize,
) -> Result<TwirledObservable> {
    if !obs.is_square() {
        return Err(Error::NotSquare { rows: obs.rows(), cols: obs.cols() });
    }
    if k == 0 || samples == 0 {
        return Err(Error::InvalidParameter("need k >= 1 and at least one sample".into()));
    }
    let dim = obs.dim();
    let out_dim = dim.checked_pow(k as u32).unwrap_or(usize::MAX);
    dense_guard(out_dim)?;
    let local_dim = if collective {
        if dim != 1usize << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: dim });
        }
        2
    } else {
        dim
    };
    let scheme = match (collective, k) {
        (true, _) => TwirlScheme::CollectiveTwoCopy,
        (false, 4) => TwirlScheme::FourCopyLocal,
        _ => TwirlScheme::TwoCopyLocal,
    };
    let (mean, se) = mc_mean(sampler, samples, (out_dim, out_dim), |rng| {
        let u = haar_unitary(rng, local_dim);
        let u = if collective { kron_power(&u, n) } else { u };
        let rotated = obs.conjugate_by(&u.adjoint());
        kron_power(&rotated, k).into_matrix()
    });
    Ok(TwirledObservable {
        operator: mean,
        scheme,
        provenance: Provenance::MonteCarlo {
            samples,
            seed: sampler.seed,
            stream: sampler.stream,
        },
        std_errors: Some(se),
        low_samples: samples < LOW_SAMPLE_WARNING,
    })
}

/// Monte Carlo estimate of the moment tensor `ℐ(a,b,c,d)` from rotated
/// `σ_z`, with standard errors. Indexed `[a][b][c][d]` by axis index.
pub struct MomentEstimate {
    pub mean: [[[[f64; 3]; 3]; 3]; 3],
    pub std_err: [[[[f64; 3]; 3]; 3]; 3],
    pub samples: usize,
}

pub fn mc_moment_tensor(sampler: &HaarSampler, samples: usize) -> Result<MomentEstimate> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let sz = pauli(Axis::Z);
    let paulis: Vec<DenseOperator> = Axis::ALL.iter().map(|&a| pauli(a)).collect();
    let (mean, se) = mc_mean(sampler, samples, (81, 1), |rng| {
        let u = haar_unitary(rng, 2);
        let rotated = sz.conjugate_by(&u.adjoint());
        let z: Vec<f64> = paulis.iter().map(|p| rotated.trace_product(p).re).collect();
        let mut m = DMatrix::from_element(81, 1, ZERO);
        for idx in 0..81 {
            let (a, b, c, d) = (idx / 27, idx / 9 % 3, idx / 3 % 3, idx % 3);
            m[(idx, 0)] = C64::new(z[a] * z[b] * z[c] * z[d], 0.0);
        }
        m
    });
    let mut out = MomentEstimate {
        mean: [[[[0.0; 3]; 3]; 3]; 3],
        std_err: [[[[0.0; 3]; 3]; 3]; 3],
        samples,
    };
    for idx in 0..81 {
        let (a, b, c, d) = (idx / 27, idx / 9 % 3, idx / 3 % 3, idx % 3);
        out.mean[a][b][c][d] = mean.get(idx, 0).re;
        out.std_err[a][b][c][d] = se.re[(idx, 0)];
    }
    Ok(out)
}

/// Monte Carlo estimate of `𝒢_k(ρ) = ∫ dU_L (U_L ρ U_L†)^{⊗k}` with
/// `U_L = U_1 ⊗ ... ⊗ U_N` independent Haar unitaries.
pub fn nogo_state_twirl(state: &ProbeState, k: usize, sampler: &HaarSampler, samples: usize) -> Result<DenseOperator> {
    if k == 0 || samples == 0 {
        return Err(Error::InvalidParameter("need k >= 1 and at least one sample".into()));
    }
    let out_dim = state.dim().checked_pow(k as u32).unwrap_or(usize::MAX);
    dense_guard(out_dim)?;
    let (n, d) = (state.n_parties(), state.local_dim());
    let (mean, _) = mc_mean(sampler, samples, (out_dim, out_dim), |rng| {
        let us: Vec<DenseOperator> = (0..n).map(|_| haar_unitary(rng, d)).collect();
        let rotated = state.matrix().conjugate_by(&kron_all(us.iter()));
        kron_power(&rotated, k).into_matrix()
    });
    Ok(mean)
}

/// Dense multi-copy observable `M` for `N` qubits with `M²` cached:
/// `M₂ = Σ_i Φ₂^{(i)}`, `M₄ = Σ_i Φ₄^{(i)}` on sites `(i, N+i, ...)`, or `𝒳₂`.
#[derive(Clone, Debug)]
pub struct MultiCopyObservable {
    pub scheme: TwirlScheme,
    pub n_parties: usize,
    m: DenseOperator,
    m_sq: DenseOperator,
}

/// `⟨M⟩`, `⟨M²⟩` and `∂_θ⟨M⟩` on `ρ_θ^{⊗k}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleExpectations {
    pub mean: f64,
    pub second: f64,
    pub d_mean: f64,
}

impl OracleExpectations {
    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }

    /// Error-propagated `Var(M)/|∂_θ⟨M⟩|²`.
    pub fn theta_variance(&self) -> f64 {
        crate::precision::error_propagation(self.variance(), self.d_mean)
    }
}

impl MultiCopyObservable {
    /// Guards: `N ≤ 4` for two copies and the collective scheme, `N ≤ 2` for
    /// four copies.
    pub fn new(scheme: TwirlScheme, n: usize) -> Result<Self> {
        let k = scheme.copies();
        let limit = if k == 4 { 2 } else { 4 };
        if n == 0 || n > limit {
            return Err(Error::Capacity {
                dim: 1usize.checked_shl((k * n) as u32).unwrap_or(usize::MAX),
                limit: 1 << (k * limit),
            });
        }
        let sites = k * n;
        let m = match scheme {
            TwirlScheme::TwoCopyLocal | TwirlScheme::FourCopyLocal => {
                let phi = if k == 2 { phi2_analytic(2)?.operator } else { phi4_analytic().operator };
                let mut m = DenseOperator::zeros(1 << sites);
                for i in 0..n {
                    let where_: Vec<usize> = (0..k).map(|c| c * n + i).collect();
                    m = &m + &embed(&phi, &where_, sites, 2)?;
                }
                m
            }
            TwirlScheme::CollectiveTwoCopy => collective_x2(n)?.operator,
        };
        let m_sq = &m * &m;
        Ok(Self { scheme, n_parties: n, m, m_sq })
    }

    pub fn operator(&self) -> &DenseOperator {
        &self.m
    }

    /// Evaluates on a state and its θ-derivative. Uses the copy-permutation
    /// symmetry of `M`: `∂⟨M⟩ = k tr((ρ' ⊗ ρ^{⊗(k-1)}) M)`.
    pub fn evaluate(&self, rho: &ProbeState, tangent: &DenseOperator) -> Result<OracleExpectations> {
        if rho.n_parties() != self.n_parties || rho.local_dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: self.n_parties,
                found: rho.n_parties(),
            });
        }
        let k = self.scheme.copies();
        let full = kron_power(rho.matrix(), k);
        let rest = kron_power(rho.matrix(), k - 1);
        let d_full = kron(tangent, &rest);
        Ok(OracleExpectations {
            mean: full.trace_product(&self.m).re,
            second: full.trace_product(&self.m_sq).re,
            d_mean: k as f64 * d_full.trace_product(&self.m).re,
        })
    }
}

/// Dense oracle: `tr(ρ_θ^{⊗k} M)`, `tr(ρ_θ^{⊗k} M²)` and the exact derivative,
/// with `ρ_θ` built by full evolution and depolarizing noise.
pub fn mc_expectations(spec: &ProbeSpec, scheme: TwirlScheme, theta: f64, noise: NoiseModel) -> Result<OracleExpectations> {
    let obs = MultiCopyObservable::new(scheme, spec.n_parties())?;
    let (rho, tangent) = spec.full_state_with_tangent(theta, noise)?;
    obs.evaluate(&rho, &tangent)
}
