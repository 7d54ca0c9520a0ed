//! Error propagation, the precision formulas of the three schemes and the
//! metrological gain.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::{CollectiveTerms, InvariantSet, UniformInvariants};
use crate::dd::Dd;
use crate::jet::{Jet, Real};
use crate::states::{NoiseModel, ProbeSpec};
use crate::twirl::{mc_expectations, TwirlScheme};

/// Measurement scheme.
///
/// `Collective` evaluates the closed-form collective variance exactly as it is
/// usually quoted, `f(N) + B(θ) - (S₁+K₁)²` over `|∂(S₁+K₁)|²`.
/// `CollectiveExact` uses the full second moment of `𝒳₂`,
/// `3N² - 2Q + 2N tr W + tr(WWᵀ) - Q²` with `Q = S₁+K₁`, `W = Σ_{i≠j} T_ij`.
/// The two agree for `N = 2` and differ from `N = 3` on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TwoCopy,
    FourCopy,
    Collective,
    CollectiveExact,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::TwoCopy,
        Scheme::FourCopy,
        Scheme::Collective,
        Scheme::CollectiveExact,
    ];

    /// Copies consumed per measurement; enters the gain.
    pub fn copies(self) -> usize {
        match self {
            Scheme::FourCopy => 4,
            _ => 2,
        }
    }

    pub fn twirl(self) -> TwirlScheme {
        match self {
            Scheme::TwoCopy => TwirlScheme::TwoCopyLocal,
            Scheme::FourCopy => TwirlScheme::FourCopyLocal,
            Scheme::Collective | Scheme::CollectiveExact => TwirlScheme::CollectiveTwoCopy,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::TwoCopy => "two-copy",
            Scheme::FourCopy => "four-copy",
            Scheme::Collective => "collective",
            Scheme::CollectiveExact => "collective-exact",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-copy" | "2" | "g2" => Ok(Scheme::TwoCopy),
            "four-copy" | "4" | "g4" => Ok(Scheme::FourCopy),
            "collective" | "c2" => Ok(Scheme::Collective),
            "collective-exact" => Ok(Scheme::CollectiveExact),
            _ => Err(Error::InvalidParameter(format!(
                "unknown scheme `{s}` (two-copy, four-copy, collective, collective-exact)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrecisionResult {
    pub scheme: Scheme,
    pub theta: f64,
    pub n_parties: usize,
    pub noise_p: f64,
    pub variance_theta: f64,
    pub gain: f64,
    /// Zero signal slope (`0/0` or `x/0`); the variance is reported as `+inf`.
    pub degenerate: bool,
}

/// How `∂_θ` is taken.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum ThetaDerivativeSpec {
    #[default]
    Analytic,
    /// Symmetric difference quotient; `None` picks `1e-5 · max(1, |θ|)`.
    CentralDifference { h: Option<f64> },
}

impl ThetaDerivativeSpec {
    pub fn step(&self, theta: f64) -> Option<f64> {
        match *self {
            ThetaDerivativeSpec::Analytic => None,
            ThetaDerivativeSpec::CentralDifference { h } => Some(h.unwrap_or(1e-5 * theta.abs().max(1.0))),
        }
    }
}

/// `var_m / |∂⟨M⟩|²` together with the degeneracy flag. A zero slope gives
/// `+inf`; negative round-off in `var_m` is clamped to zero.
pub fn error_propagation_flagged(var_m: f64, d_mean_d_theta: f64) -> (f64, bool) {
    if var_m.is_nan() || d_mean_d_theta.is_nan() || d_mean_d_theta == 0.0 {
        return (f64::INFINITY, true);
    }
    let v = var_m.max(0.0) / (d_mean_d_theta * d_mean_d_theta);
    if v.is_nan() {
        (f64::INFINITY, true)
    } else {
        (v, false)
    }
}

pub fn error_propagation(var_m: f64, d_mean_d_theta: f64) -> f64 {
    error_propagation_flagged(var_m, d_mean_d_theta).0
}

/// Relative size below which a numerically evaluated slope is round-off of an
/// identically flat signal.
pub const FLAT_SLOPE_TOL: f64 = 1e-12;

/// `slope`, or exactly zero when `|slope| <= FLAT_SLOPE_TOL · max(1, |scale|)`.
/// `scale` is the magnitude of the signal itself.
pub fn flatten_slope(slope: f64, scale: f64) -> f64 {
    if slope.abs() <= FLAT_SLOPE_TOL * scale.abs().max(1.0) {
        0.0
    } else {
        slope
    }
}

/// `Var θ₂ = [(d²-1)N - 2S₁ + 2S₂ - S₁²] / |∂S₁|²`.
pub fn variance_two_copy(inv: &InvariantSet, ds1: f64) -> f64 {
    let d2 = (inv.local_dim * inv.local_dim) as f64;
    let num = (d2 - 1.0) * inv.n_parties as f64 - 2.0 * inv.s1 + 2.0 * inv.s2 - inv.s1 * inv.s1;
    error_propagation(num, ds1)
}

/// `Var θ₄ = [15N - 20S₁ + 8F₁ + 2F₂ - 3F₁²] / (3|∂F₁|²)`. Qubits only.
pub fn variance_four_copy(inv: &InvariantSet, df1: f64) -> Result<f64> {
    let (Some(f1), Some(f2)) = (inv.f1, inv.f2) else {
        return Err(Error::UnsupportedDimension(inv.local_dim));
    };
    let num = 15.0 * inv.n_parties as f64 - 20.0 * inv.s1 + 8.0 * f1 + 2.0 * f2 - 3.0 * f1 * f1;
    Ok(error_propagation(num / 3.0, df1))
}

/// `Var θ_C = [f(N) + B(θ) - (S₁+K₁)²] / |∂(S₁+K₁)|²`.
pub fn variance_collective(inv: &InvariantSet, coll: &CollectiveTerms, d_s1_plus_k1: f64) -> f64 {
    let q = inv.s1 + coll.k1;
    error_propagation(coll.f_n + coll.b_theta - q * q, d_s1_plus_k1)
}

/// `144 Var(𝒳₂) / |∂(S₁+K₁)|²` from the full second moment of `𝒳₂`.
pub fn variance_collective_exact(inv: &InvariantSet, coll: &CollectiveTerms, d_s1_plus_k1: f64) -> f64 {
    let n = inv.n_parties as f64;
    let q = inv.s1 + coll.k1;
    let num = 3.0 * n * n - 2.0 * q + 2.0 * n * coll.w_trace + coll.w_norm_sq - q * q;
    error_propagation(num, d_s1_plus_k1)
}

/// `G = 1/(k N Var θ)`; zero for infinite variance.
pub fn gain(scheme: Scheme, n: usize, variance_theta: f64) -> f64 {
    if variance_theta.is_infinite() || variance_theta.is_nan() {
        return 0.0;
    }
    1.0 / (scheme.copies() as f64 * n as f64 * variance_theta)
}

/// Error-propagation numerator `num` and signal `s` with `Var θ = num / |∂s|²`,
/// for a permutationally invariant state.
pub fn scheme_terms<S: Real>(scheme: Scheme, u: &UniformInvariants<S>) -> (S, S) {
    let n = u.n as f64;
    match scheme {
        Scheme::TwoCopy => {
            let num = S::constant(3.0 * n) - u.s1.scale(2.0) + u.s2.scale(2.0) - u.s1 * u.s1;
            (num, u.s1)
        }
        Scheme::FourCopy => {
            let num = S::constant(15.0 * n) - u.s1.scale(20.0) + u.f1.scale(8.0) + u.f2.scale(2.0)
                - (u.f1 * u.f1).scale(3.0);
            (num.scale(1.0 / 3.0), u.f1)
        }
        Scheme::Collective => {
            let q = u.s1_plus_k1();
            let f_n = crate::invariants::f_of_n(u.n);
            (S::constant(f_n) + u.b_theta() - q * q, q)
        }
        Scheme::CollectiveExact => {
            let q = u.s1_plus_k1();
            let num = S::constant(3.0 * n * n) - q.scale(2.0) + u.w_trace.scale(2.0 * n) + u.w_norm_sq - q * q;
            (num, q)
        }
    }
}

fn uniform<S: Real>(spec: &ProbeSpec, theta: S, noise: NoiseModel) -> UniformInvariants<S> {
    let (r, t) = spec.pair_data(theta);
    UniformInvariants::new(spec.n_parties(), &r, &t).depolarized(noise.p())
}

/// Closed-form precision at `θ` for any `N`, using the analytic θ-derivative
/// (or a difference quotient, if requested). The numerator is evaluated in
/// double-double arithmetic.
pub fn closed_form_precision(
    spec: &ProbeSpec,
    scheme: Scheme,
    theta: f64,
    noise: NoiseModel,
    derivative_spec: ThetaDerivativeSpec,
) -> PrecisionResult {
    let signal = scheme_terms(scheme, &uniform(spec, Jet::variable(theta), noise)).1;
    let num = scheme_terms(scheme, &uniform(spec, Dd::from_f64(theta), noise)).0.value();
    let slope = match derivative_spec.step(theta) {
        None => signal.d1,
        Some(h) => derivative(
            |x| scheme_terms(scheme, &uniform(spec, x, noise)).1,
            theta,
            ThetaDerivativeSpec::CentralDifference { h: Some(h) },
        ),
    };
    let (variance_theta, degenerate) = error_propagation_flagged(num, slope);
    PrecisionResult {
        scheme,
        theta,
        n_parties: spec.n_parties(),
        noise_p: noise.p(),
        variance_theta,
        gain: gain(scheme, spec.n_parties(), variance_theta),
        degenerate,
    }
}

/// Precision from the dense oracle: the variance and slope of the
/// multi-copy observable on `ρ_θ^{⊗k}`. Both collective schemes map to the
/// same dense `𝒳₂`.
pub fn oracle_precision(spec: &ProbeSpec, scheme: Scheme, theta: f64, noise: NoiseModel) -> Result<PrecisionResult> {
    let e = mc_expectations(spec, scheme.twirl(), theta, noise)?;
    // Normalization of M cancels in the ratio.
    let (variance_theta, degenerate) = error_propagation_flagged(e.variance(), e.d_mean);
    Ok(PrecisionResult {
        scheme,
        theta,
        n_parties: spec.n_parties(),
        noise_p: noise.p(),
        variance_theta,
        gain: gain(scheme, spec.n_parties(), variance_theta),
        degenerate,
    })
}

/// `lim_{θ→0}` of the gain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitGain {
    pub gain: f64,
    pub variance_theta: f64,
    /// The limit is not the supremum over θ: the numerator keeps a constant
    /// term at θ = 0 (noise), so the gain vanishes there and peaks at θ > 0.
    pub interior_supremum: bool,
}

/// θ → 0 limit of the gain from second-order jets of the closed forms.
///
/// When numerator and slope both vanish at 0 (both even in θ), the variance
/// tends to `num''(0) / (2 s''(0)²)`.
pub fn theta_limit_gain(spec: &ProbeSpec, scheme: Scheme, noise: NoiseModel) -> LimitGain {
    let n = spec.n_parties();
    let (num, signal) = scheme_terms(scheme, &uniform(spec, Jet::variable(0.0), noise));
    let tol = 1e-10 * (signal.v * signal.v).max(1.0);
    let variance_theta = if signal.d1.abs() > 1e-12 * signal.v.abs().max(1.0) {
        error_propagation(num.v, signal.d1)
    } else if num.v.abs() <= tol {
        if signal.d2 == 0.0 {
            f64::INFINITY
        } else {
            num.d2.max(0.0) / (2.0 * signal.d2 * signal.d2)
        }
    } else {
        f64::INFINITY
    };
    LimitGain {
        gain: gain(scheme, n, variance_theta),
        variance_theta,
        interior_supremum: num.v > tol,
    }
}

/// `∂_θ f` at `θ`, exact (forward-mode jets) or by symmetric difference.
pub fn derivative<F>(f: F, theta: f64, spec: ThetaDerivativeSpec) -> f64
where
    F: Fn(Jet) -> Jet,
{
    match spec.step(theta) {
        None => f(Jet::variable(theta)).d1,
        Some(h) => (f(Jet::constant(theta + h)).v - f(Jet::constant(theta - h)).v) / (2.0 * h),
    }
}
