//! Local-unitary invariants built from Bloch vectors and correlation matrices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Real;
use crate::linalg::{collective_operator, partial_trace, Axis, DenseOperator};
use crate::states::{transpose, Correlation, NoiseModel, ProbeState, ReducedData};

const PI_TOL: f64 = 1e-10;

/// Sector lengths and fourth-order invariants of an `N`-particle state.
///
/// `f1`, `f2` are only defined for qubits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvariantSet {
    pub s1: f64,
    pub s2: f64,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    pub n_parties: usize,
    pub local_dim: usize,
}

/// Terms entering the collective two-copy variance.
///
/// `w_trace = Σ_{i≠j} tr T_ij` and `w_norm_sq = |Σ_{i≠j} T_ij|_F²` are kept
/// alongside the K-terms; the exact variance needs them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CollectiveTerms {
    pub k1: f64,
    pub k2: f64,
    pub k2_prime: f64,
    pub sum_j_sq: f64,
    pub b_theta: f64,
    pub f_n: f64,
    pub w_trace: f64,
    pub w_norm_sq: f64,
}

/// `r² = |r|²`, `t1 = tr T`, `t2 = tr T²` of a permutationally invariant state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PIReduction {
    pub n_parties: usize,
    pub r_sq: f64,
    pub t1: f64,
    pub t2: f64,
}

impl PIReduction {
    /// `S₁ + K₁ = N² r²`.
    pub fn s1_plus_k1(&self) -> f64 {
        let n = self.n_parties as f64;
        n * n * self.r_sq
    }

    /// `B = N{r²(2 - 4N) + (N-1)[(3 + N(N-3)) t2 + 4(N-1) t1 + 12]}`.
    pub fn b_theta(&self) -> f64 {
        let n = self.n_parties as f64;
        n * (self.r_sq * (2.0 - 4.0 * n)
            + (n - 1.0) * ((3.0 + n * (n - 3.0)) * self.t2 + 4.0 * (n - 1.0) * self.t1 + 12.0))
    }
}

/// `f(N) = 3N(3 - 2N)`.
pub fn f_of_n(n: usize) -> f64 {
    let n = n as f64;
    3.0 * n * (3.0 - 2.0 * n)
}

fn b_of(n: usize, s1: f64, s2: f64, k1: f64, k2: f64, k2_prime: f64, sum_j_sq: f64) -> f64 {
    2.0 * (-s1 - 2.0 * k1 + s2 + k2) + k2_prime + 16.0 * (n as f64 - 1.0) * sum_j_sq
}

impl CollectiveTerms {
    fn assemble(n: usize, s1: f64, s2: f64, k1: f64, k2: f64, k2_prime: f64, w_trace: f64, w_norm_sq: f64) -> Self {
        let sum_j_sq = 0.25 * (3.0 * n as f64 + w_trace);
        Self {
            k1,
            k2,
            k2_prime,
            sum_j_sq,
            b_theta: b_of(n, s1, s2, k1, k2, k2_prime, sum_j_sq),
            f_n: f_of_n(n),
            w_trace,
            w_norm_sq,
        }
    }
}

// Small 3x3 helpers, generic so jets can pass through.

fn dot<S: Real>(a: &[S; 3], b: &[S; 3]) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `tr(A Bᵀ)`.
fn frob<S: Real>(a: &[[S; 3]; 3], b: &[[S; 3]; 3]) -> S {
    let mut acc = S::constant(0.0);
    for mu in 0..3 {
        acc = acc + dot(&a[mu], &b[mu]);
    }
    acc
}

/// `A Bᵀ`.
fn mul_t<S: Real>(a: &[[S; 3]; 3], b: &[[S; 3]; 3]) -> [[S; 3]; 3] {
    let mut out = [[S::constant(0.0); 3]; 3];
    for mu in 0..3 {
        for nu in 0..3 {
            out[mu][nu] = dot(&a[mu], &b[nu]);
        }
    }
    out
}

fn trace<S: Real>(a: &[[S; 3]; 3]) -> S {
    a[0][0] + a[1][1] + a[2][2]
}

fn add_assign(acc: &mut Correlation, t: &Correlation) {
    for mu in 0..3 {
        for nu in 0..3 {
            acc[mu][nu] += t[mu][nu];
        }
    }
}

/// `[tr(TTᵀ)]² + 2 tr(TTᵀTTᵀ)`.
fn f2_pair<S: Real>(t: &[[S; 3]; 3]) -> S {
    let g = mul_t(t, t);
    let n2 = trace(&g);
    n2 * n2 + frob(&g, &g).scale(2.0)
}

/// Every invariant of a permutationally invariant qubit state, written over
/// [`Real`] so that analytic θ-derivatives come for free.
#[derive(Clone, Copy, Debug)]
pub struct UniformInvariants<S> {
    pub n: usize,
    pub s1: S,
    pub s2: S,
    pub f1: S,
    pub f2: S,
    pub k1: S,
    pub k2: S,
    pub k2_prime: S,
    pub w_trace: S,
    pub w_norm_sq: S,
}

impl<S: Real> UniformInvariants<S> {
    pub fn new(n: usize, r: &[S; 3], t: &[[S; 3]; 3]) -> Self {
        let nf = n as f64;
        let pairs = nf * (nf - 1.0);
        let r2 = dot(r, r);
        let tt = frob(t, t);
        Self {
            n,
            s1: r2.scale(nf),
            s2: tt.scale(pairs / 2.0),
            f1: (r2 * r2).scale(nf),
            f2: f2_pair(t).scale(pairs / 2.0),
            k1: r2.scale(pairs),
            k2: tt.scale(pairs * (nf - 2.0)),
            k2_prime: tt.scale(pairs * (nf - 2.0) * (nf - 3.0)),
            w_trace: trace(t).scale(pairs),
            w_norm_sq: tt.scale(pairs * pairs),
        }
    }

    /// `S₁ + K₁ = |Σ r_i|²`.
    pub fn s1_plus_k1(&self) -> S {
        self.s1 + self.k1
    }

    /// `Σ_μ ⟨J_μ²⟩ = (3N + Σ_{i≠j} tr T_ij) / 4`.
    pub fn sum_j_sq(&self) -> S {
        (self.w_trace + S::constant(3.0 * self.n as f64)).scale(0.25)
    }

    /// `B(θ) = 2[-S₁ - 2K₁ + S₂ + K₂] + K₂′ + 16(N-1) Σ⟨J_μ²⟩`.
    pub fn b_theta(&self) -> S {
        (self.s2 + self.k2 - self.s1 - self.k1.scale(2.0)).scale(2.0)
            + self.k2_prime
            + self.sum_j_sq().scale(16.0 * (self.n as f64 - 1.0))
    }

    /// Under local depolarizing noise `r -> p r`, `T -> p² T`.
    pub fn depolarized(&self, p: f64) -> Self {
        let (p2, p4) = (p * p, p.powi(4));
        Self {
            n: self.n,
            s1: self.s1.scale(p2),
            s2: self.s2.scale(p4),
            f1: self.f1.scale(p4),
            f2: self.f2.scale(p4 * p4),
            k1: self.k1.scale(p2),
            k2: self.k2.scale(p4),
            k2_prime: self.k2_prime.scale(p4),
            w_trace: self.w_trace.scale(p2),
            w_norm_sq: self.w_norm_sq.scale(p4),
        }
    }
}

impl UniformInvariants<f64> {
    pub fn invariant_set(&self) -> InvariantSet {
        InvariantSet {
            s1: self.s1,
            s2: self.s2,
            f1: Some(self.f1),
            f2: Some(self.f2),
            n_parties: self.n,
            local_dim: 2,
        }
    }

    pub fn collective_terms(&self) -> CollectiveTerms {
        CollectiveTerms::assemble(
            self.n,
            self.s1,
            self.s2,
            self.k1,
            self.k2,
            self.k2_prime,
            self.w_trace,
            self.w_norm_sq,
        )
    }
}

/// `(S₁, S₂)` with `S₁ = Σ|r_i|²` and `S₂ = Σ_{i<j} tr(T_ij T_ijᵀ)`.
pub fn sector_lengths(reduced: &ReducedData, d: usize) -> Result<(f64, f64)> {
    if d != 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if let Some((r, t)) = reduced.symmetric_parts() {
        let u = UniformInvariants::new(reduced.n_parties(), &r, &t);
        return Ok((u.s1, u.s2));
    }
    let n = reduced.n_parties();
    let s1 = (0..n).map(|i| { let r = reduced.bloch(i); dot(&r, &r) }).sum();
    let mut s2 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let t = reduced.corr(i, j);
            s2 += frob(&t, &t);
        }
    }
    Ok((s1, s2))
}

/// Sector lengths from reduced-state purities, valid for any local dimension:
/// `S₁ = Σ[d tr ρ_i² - 1]`, `S₂ = Σ_{i<j}[d² tr ρ_ij² - 1] - (N-1) S₁`.
pub fn sector_lengths_from_state(state: &ProbeState) -> Result<(f64, f64)> {
    let n = state.n_parties();
    let d = state.local_dim() as f64;
    let purity = |keep: &[usize]| -> Result<f64> {
        let rho = state.reduced(keep)?;
        Ok(rho.trace_product(&rho).re)
    };
    let mut single = Vec::with_capacity(n);
    for i in 0..n {
        single.push(d * purity(&[i])? - 1.0);
    }
    let s1 = single.iter().sum();
    let mut s2 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s2 += d * d * purity(&[i, j])? - 1.0 - single[i] - single[j];
        }
    }
    Ok((s1, s2))
}

/// `(F₁, F₂)`: `F₁ = Σ|r_i|⁴`, `F₂ = Σ_{i<j}{[tr(TTᵀ)]² + 2 tr(TTᵀTTᵀ)}`.
pub fn fourth_order(reduced: &ReducedData) -> (f64, f64) {
    if let Some((r, t)) = reduced.symmetric_parts() {
        let u = UniformInvariants::new(reduced.n_parties(), &r, &t);
        return (u.f1, u.f2);
    }
    let n = reduced.n_parties();
    let f1 = (0..n)
        .map(|i| {
            let r = reduced.bloch(i);
            dot(&r, &r).powi(2)
        })
        .sum();
    let mut f2 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            f2 += f2_pair(&reduced.corr(i, j));
        }
    }
    (f1, f2)
}

/// Qubit invariant set from reduced data.
pub fn invariant_set(reduced: &ReducedData) -> InvariantSet {
    let (s1, s2) = sector_lengths(reduced, 2).expect("qubit data");
    let (f1, f2) = fourth_order(reduced);
    InvariantSet {
        s1,
        s2,
        f1: Some(f1),
        f2: Some(f2),
        n_parties: reduced.n_parties(),
        local_dim: 2,
    }
}

/// Invariant set of a dense state of any local dimension. The fourth-order
/// terms are filled in for qubits only.
pub fn invariant_set_from_state(state: &ProbeState) -> Result<InvariantSet> {
    let (s1, s2) = sector_lengths_from_state(state)?;
    let (f1, f2) = if state.local_dim() == 2 {
        let (f1, f2) = fourth_order(&ReducedData::from_state(state)?);
        (Some(f1), Some(f2))
    } else {
        (None, None)
    };
    Ok(InvariantSet {
        s1,
        s2,
        f1,
        f2,
        n_parties: state.n_parties(),
        local_dim: state.local_dim(),
    })
}

/// `∂_θ S₁ = 2d Σ_i Re tr(ρ_i ρ_i')` for a dense state and its θ-derivative.
pub fn s1_slope(state: &ProbeState, tangent: &DenseOperator) -> Result<f64> {
    if tangent.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: tangent.dim() });
    }
    let d = state.local_dim() as f64;
    let mut acc = 0.0;
    for i in 0..state.n_parties() {
        let rho = state.reduced(&[i])?;
        let drho = partial_trace(tangent, state.structure(), &[i])?;
        acc += 2.0 * d * rho.trace_product(&drho).re;
    }
    Ok(acc)
}

/// `Σ_μ tr(ρ J_μ²)` evaluated on the dense state.
pub fn sum_j_sq_from_state(state: &ProbeState) -> Result<f64> {
    if state.local_dim() != 2 {
        return Err(Error::UnsupportedDimension(state.local_dim()));
    }
    Ok(Axis::ALL
        .iter()
        .map(|&a| {
            let j = collective_operator(a, state.n_parties());
            state.expectation(&(&j * &j))
        })
        .sum())
}

/// K₁, K₂, K₂′, Σ⟨J_μ²⟩, B(θ) and f(N).
///
/// The general layout costs O(N²) matrix products: `K₂` and `K₂′` are obtained
/// from row sums `A_i = Σ_{j≠i} T_ij` and `W = Σ_i A_i` by removing the terms
/// with repeated indices. Σ⟨J_μ²⟩ is read from `state` when one is supplied,
/// otherwise from `(3N + Σ_{i≠j} tr T_ij)/4`, which holds for every state.
pub fn collective_terms(reduced: &ReducedData, state: Option<&ProbeState>) -> Result<CollectiveTerms> {
    let n = reduced.n_parties();
    let mut terms = if let Some((r, t)) = reduced.symmetric_parts() {
        UniformInvariants::new(n, &r, &t).collective_terms()
    } else {
        let (s1, s2) = sector_lengths(reduced, 2)?;
        let mut rsum = [0.0; 3];
        let mut w = [[0.0; 3]; 3];
        let (mut k2, mut k2x, mut pairs_sq) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let r = reduced.bloch(i);
            for mu in 0..3 {
                rsum[mu] += r[mu];
            }
            let mut a = [[0.0; 3]; 3];
            let (mut own_frob, mut own_sq) = (0.0, 0.0);
            for j in (0..n).filter(|&j| j != i) {
                let t = reduced.corr(i, j);
                add_assign(&mut a, &t);
                own_frob += frob(&t, &t);
                own_sq += frob(&t, &transpose(&t));
            }
            add_assign(&mut w, &a);
            k2 += frob(&a, &a) - own_frob;
            k2x += frob(&a, &transpose(&a)) - own_sq;
            pairs_sq += own_sq;
        }
        let k1 = dot(&rsum, &rsum) - s1;
        let w_norm_sq = frob(&w, &w);
        let k2_prime = w_norm_sq - 2.0 * k2 - 2.0 * k2x - 2.0 * s2 - pairs_sq;
        CollectiveTerms::assemble(n, s1, s2, k1, k2, k2_prime, trace(&w), w_norm_sq)
    };
    if let Some(state) = state {
        if state.n_parties() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: state.n_parties(),
            });
        }
        let (s1, s2) = sector_lengths(reduced, 2)?;
        terms.sum_j_sq = sum_j_sq_from_state(state)?;
        terms.b_theta = b_of(n, s1, s2, terms.k1, terms.k2, terms.k2_prime, terms.sum_j_sq);
    }
    Ok(terms)
}

/// Checks permutational invariance (all `r_i` equal, all `T_ij` equal and
/// symmetric, to 1e-10) and returns `r²`, `tr T`, `tr T²`.
pub fn pi_reduction(reduced: &ReducedData) -> Result<PIReduction> {
    let n = reduced.n_parties();
    let (r, t) = match reduced.symmetric_parts() {
        Some(parts) => parts,
        None => {
            let r = reduced.bloch(0);
            for i in 1..n {
                let ri = reduced.bloch(i);
                if (0..3).any(|mu| (ri[mu] - r[mu]).abs() > PI_TOL) {
                    return Err(Error::NotPermutationInvariant(format!(
                        "Bloch vector of party {i} differs from party 0"
                    )));
                }
            }
            let t = if n > 1 { reduced.corr(0, 1) } else { [[0.0; 3]; 3] };
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    let tij = reduced.corr(i, j);
                    let off = (0..3)
                        .flat_map(|mu| (0..3).map(move |nu| (mu, nu)))
                        .map(|(mu, nu)| (tij[mu][nu] - t[mu][nu]).abs())
                        .fold(0.0, f64::max);
                    if off > PI_TOL {
                        return Err(Error::NotPermutationInvariant(format!(
                            "correlation of pair ({i}, {j}) differs from (0, 1)"
                        )));
                    }
                }
            }
            (r, t)
        }
    };
    Ok(PIReduction {
        n_parties: n,
        r_sq: dot(&r, &r),
        t1: trace(&t),
        t2: frob(&t, &transpose(&t)),
    })
}

/// Invariants after local depolarizing noise, without touching the state:
/// `S_l -> p^{2l} S_l`, `F_l -> p^{4l} F_l`, `K₁ -> p² K₁`, `K₂, K₂′ -> p⁴`,
/// `Σ⟨J²⟩ -> (3N/4)(1 - p²) + p² Σ⟨J²⟩`.
pub fn apply_noise_scaling(
    inv: &InvariantSet,
    coll: Option<&CollectiveTerms>,
    noise: NoiseModel,
) -> (InvariantSet, Option<CollectiveTerms>) {
    let p = noise.p();
    let (p2, p4) = (p * p, p.powi(4));
    let scaled = InvariantSet {
        s1: p2 * inv.s1,
        s2: p4 * inv.s2,
        f1: inv.f1.map(|f| p4 * f),
        f2: inv.f2.map(|f| p4 * p4 * f),
        ..*inv
    };
    let coll = coll.map(|c| {
        let n = inv.n_parties;
        let mut out = CollectiveTerms {
            k1: p2 * c.k1,
            k2: p4 * c.k2,
            k2_prime: p4 * c.k2_prime,
            sum_j_sq: 0.75 * n as f64 * (1.0 - p2) + p2 * c.sum_j_sq,
            w_trace: p2 * c.w_trace,
            w_norm_sq: p4 * c.w_norm_sq,
            ..*c
        };
        out.b_theta = b_of(n, scaled.s1, scaled.s2, out.k1, out.k2, out.k2_prime, out.sum_j_sq);
        out
    });
    (scaled, coll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{oat_reduced_closed_form, product_state};

    fn brute_k(reduced: &ReducedData) -> (f64, f64, f64) {
        let n = reduced.n_parties();
        let (mut k1, mut k2, mut k2p) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                k1 += dot(&reduced.bloch(i), &reduced.bloch(j));
                for k in (0..n).filter(|&k| k != i && k != j) {
                    k2 += frob(&reduced.corr(i, j), &reduced.corr(i, k));
                    for l in (0..n).filter(|&l| l != i && l != j && l != k) {
                        k2p += frob(&reduced.corr(i, j), &reduced.corr(k, l));
                    }
                }
            }
        }
        (k1, k2, k2p)
    }

    #[test]
    fn product_state_values() {
        let n = 5;
        let red = ReducedData::from_state(&product_state(n, 1).unwrap()).unwrap();
        let inv = invariant_set(&red);
        assert!((inv.s1 - 5.0).abs() < 1e-14);
        assert_eq!(inv.f1, Some(5.0));
        assert!((inv.f2.unwrap() - 3.0 * 10.0).abs() < 1e-12);
        let coll = collective_terms(&red, None).unwrap();
        assert!((coll.k1 - 20.0).abs() < 1e-12);
        let pi = pi_reduction(&red).unwrap();
        assert!((pi.r_sq - 1.0).abs() < 1e-14 && (pi.t1 - 1.0).abs() < 1e-14 && (pi.t2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn oat_sector_lengths_closed_form() {
        let (n, theta) = (7usize, 0.37f64);
        let red = oat_reduced_closed_form(n, theta).unwrap();
        let (s1, s2) = sector_lengths(&red, 2).unwrap();
        let c = theta.cos();
        let nf = n as f64;
        let s1_ref = nf * c.powi(2 * n as i32 - 2);
        let s2_ref = nf * (nf - 1.0) / 4.0
            * ((2.0 * theta).cos().powi(2 * (n as i32 - 2))
                + 4.0 * theta.sin().powi(2) * c.powi(2 * n as i32 - 4)
                + 1.0);
        assert!((s1 - s1_ref).abs() < 1e-13);
        assert!((s2 - s2_ref).abs() < 1e-12);
    }

    #[test]
    fn general_layout_matches_symmetric_and_brute_force() {
        for n in [2usize, 3, 4, 6] {
            let sym = oat_reduced_closed_form(n, 0.41).unwrap();
            let gen = sym.to_per_party();
            let a = collective_terms(&sym, None).unwrap();
            let b = collective_terms(&gen, None).unwrap();
            let (k1, k2, k2p) = brute_k(&gen);
            for (x, y) in [(a.k1, k1), (b.k1, k1), (a.k2, k2), (b.k2, k2), (a.k2_prime, k2p), (b.k2_prime, k2p)] {
                assert!((x - y).abs() < 1e-11, "N={n}: {x} vs {y}");
            }
            assert!((a.b_theta - b.b_theta).abs() < 1e-10);
            assert!((a.w_norm_sq - b.w_norm_sq).abs() < 1e-10);
        }
    }

    #[test]
    fn k2_prime_vanishes_for_three() {
        let red = oat_reduced_closed_form(3, 0.8).unwrap();
        assert_eq!(collective_terms(&red, None).unwrap().k2_prime, 0.0);
        let (_, _, brute) = brute_k(&red.to_per_party());
        assert_eq!(brute, 0.0);
    }

    #[test]
    fn pi_b_matches_general_b() {
        for n in 2..=6 {
            let red = oat_reduced_closed_form(n, 0.23).unwrap();
            let pi = pi_reduction(&red.to_per_party()).unwrap();
            let coll = collective_terms(&red.to_per_party(), None).unwrap();
            assert!((pi.b_theta() - coll.b_theta).abs() < 1e-9 * coll.b_theta.abs().max(1.0));
            let inv = invariant_set(&red);
            assert!((pi.s1_plus_k1() - inv.s1 - coll.k1).abs() < 1e-11);
        }
    }

    #[test]
    fn pi_check_rejects_asymmetric() {
        let red = ReducedData::per_party(
            vec![[0.0, 0.0, 1.0], [0.0, 0.0, 0.5]],
            vec![[[0.0; 3], [0.0; 3], [0.0, 0.0, 0.5]]],
        )
        .unwrap();
        assert!(matches!(pi_reduction(&red), Err(Error::NotPermutationInvariant(_))));
    }

    #[test]
    fn noise_scaling_limits() {
        let red = oat_reduced_closed_form(4, 0.3).unwrap();
        let inv = invariant_set(&red);
        let coll = collective_terms(&red, None).unwrap();
        let (same, same_c) = apply_noise_scaling(&inv, Some(&coll), NoiseModel::noiseless());
        assert_eq!(same, inv);
        assert!((same_c.unwrap().b_theta - coll.b_theta).abs() < 1e-12);
        let (zero, _) = apply_noise_scaling(&inv, None, NoiseModel::new(0.0).unwrap());
        assert_eq!((zero.s1, zero.s2, zero.f1, zero.f2), (0.0, 0.0, Some(0.0), Some(0.0)));
    }

    #[test]
    fn sum_j_sq_identity_matches_state() {
        let spec = crate::states::ProbeSpec::Oat { n: 4 };
        let state = spec.full_state(0.45, NoiseModel::noiseless()).unwrap();
        let red = ReducedData::from_state(&state).unwrap();
        let from_data = collective_terms(&red, None).unwrap();
        let from_state = collective_terms(&red, Some(&state)).unwrap();
        assert!((from_data.sum_j_sq - from_state.sum_j_sq).abs() < 1e-12);
    }

    #[test]
    fn uniform_jet_derivative_of_s1() {
        use crate::jet::Jet;
        let (n, theta) = (6usize, 0.2);
        let (r, t) = crate::states::oat_pair_data(n, Jet::variable(theta));
        let u = UniformInvariants::new(n, &r, &t);
        let exact = -(2.0 * n as f64 - 2.0) * n as f64 * theta.cos().powi(2 * n as i32 - 3) * theta.sin();
        assert!((u.s1.d1 - exact).abs() < 1e-12);
    }
}
