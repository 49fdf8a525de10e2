//! Audits of the Cauchy-type estimates behind the convergence proof.
//!
//! Every check brackets its left side between a torus-sampled lower bound
//! and a coefficient-sum upper bound, and evaluates the right side at both
//! brackets of `‖E‖_r`; see [`InequalityCheck`].

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{format_rational, rational_to_f64, BiPolynomial, GaussianRational, Matrix, TransformPolynomial};
use crate::fischer::fischer_norm_sq;
use crate::manifold::ManifoldSpec;
use crate::normalform::{normalize, transform_manifold, Transformation};

use super::iteration::{in_polydisc, FloatMap};
use super::norms::{
    bidisc_radii, gradient_bounds, matrix_sup_bounds, sup_bounds_many, transform_radii, FloatPoly, SupBounds, TorusSampler,
};
use super::sequence::{radius_discrepancy, PolydiscParams, RadiusDiscrepancy};
use super::{homogeneous_degree, truncate_degree, EstimateConstants, EstimatesError, InequalityCheck, Verdict};

fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |a, i| a * BigInt::from(i))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseOutcome {
    /// Exponent of `Σ|z|²` on the right side.
    pub exponent: u32,
    pub points: usize,
    pub violations: usize,
    /// Largest `|S|² / bound` seen, in floats.
    pub max_ratio: f64,
    /// Coordinates of the first violating point, as `re/im` rationals.
    pub first_violation: Option<Vec<[String; 2]>>,
}

/// The two inequalities for one homogeneous `S` of degree `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub k: u32,
    pub r: f64,
    pub samples: usize,
    pub seed: u64,
    pub sup_lower: f64,
    pub sup_upper: f64,
    /// `‖S‖²` in the Fischer norm, exact.
    pub fischer_sq: String,
    /// `k!(k+1)^{2N} r^{−2k} (sup_lower)²`.
    pub bound_rhs: f64,
    pub bound_rhs_upper: f64,
    pub verdict: Verdict,
    pub passed: bool,
    /// `|S(Z, Z̄)|² ≤ (‖S‖²/k!)(Σ|z|²)^e` for `e = 2k` and `e = k`.
    pub pointwise: Vec<PointwiseOutcome>,
}

/// A rational point with `Σ|z|² ≤ 1`.
fn rational_point<R: Rng>(nvars: usize, rng: &mut R) -> Vec<GaussianRational> {
    let nums: Vec<(i64, i64)> = (0..nvars).map(|_| (rng.gen_range(-9..=9), rng.gen_range(-9..=9))).collect();
    let sq: i64 = nums.iter().map(|(a, b)| a * a + b * b).sum();
    // den ≥ √Σ keeps the point in the closed unit ball; the extra factor
    // moves some points inward
    let den = ((sq as f64).sqrt().ceil() as i64).max(1) * rng.gen_range(1..=3);
    nums.into_iter().map(|(a, b)| GaussianRational::new(q(a, den), q(b, den))).collect()
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn pointwise(s: &BiPolynomial, k: u32, norm_sq: &BigRational, points: usize, seed: u64) -> Vec<PointwiseOutcome> {
    let nvars = 2 * s.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let pts: Vec<Vec<GaussianRational>> = (0..points).map(|_| rational_point(nvars, &mut rng)).collect();
    let scale = norm_sq / BigRational::from_integer(factorial(k));
    [2 * k, k]
        .into_iter()
        .map(|e| {
            let mut out = PointwiseOutcome { exponent: e, points, violations: 0, max_ratio: 0.0, first_violation: None };
            for z in &pts {
                let zbar: Vec<GaussianRational> = z.iter().map(GaussianRational::conj).collect();
                let lhs = s.eval_exact(z, &zbar).norm_sqr();
                let ssum: BigRational = z.iter().map(GaussianRational::norm_sqr).fold(BigRational::zero(), |a, b| a + b);
                let rhs = &scale * num::pow(ssum, e as usize);
                if lhs > rhs {
                    out.violations += 1;
                    if out.first_violation.is_none() {
                        out.first_violation = Some(z.iter().map(|c| [format_rational(c.re()), format_rational(c.im())]).collect());
                    }
                }
                let ratio = if rhs.is_zero() {
                    if lhs.is_zero() { 0.0 } else { f64::MAX }
                } else {
                    rational_to_f64(&(&lhs / &rhs))
                };
                out.max_ratio = out.max_ratio.max(ratio);
            }
            out
        })
        .collect()
}

/// Checks the Cauchy estimate `‖S‖² ≤ k!(k+1)^{2N} r^{−2k} ‖S‖²_r`, doubling
/// the sample count from 256 up to `max_samples` while the verdict is
/// inconclusive, and the pointwise bound at `points` rational points.
pub fn audit_remark43(
    s: &BiPolynomial,
    r: f64,
    max_samples: usize,
    points: usize,
    seed: u64,
) -> Result<NormReport, EstimatesError> {
    if !(r > 0.5 && r <= 1.0) {
        return Err(EstimatesError::Domain(format!("need 1/2 < r <= 1, got {r}")));
    }
    let n = s.n();
    let fischer = fischer_norm_sq(s);
    let Some(k) = homogeneous_degree(s)? else {
        return Ok(NormReport {
            k: 0,
            r,
            samples: 0,
            seed,
            sup_lower: 0.0,
            sup_upper: 0.0,
            fischer_sq: format_rational(&fischer),
            bound_rhs: 0.0,
            bound_rhs_upper: 0.0,
            verdict: Verdict::Pass,
            passed: true,
            pointwise: pointwise(s, 0, &fischer, points, seed),
        });
    };
    let c = rational_to_f64(&BigRational::from_integer(factorial(k))) * ((k + 1) as f64).powi(2 * n as i32) / r.powi(2 * k as i32);
    let lhs = rational_to_f64(&fischer);
    let f = FloatPoly::from_poly(s);
    let radii = bidisc_radii(n, r);
    let mut samples = 256.min(max_samples.max(1));
    loop {
        let b = sup_bounds_many(std::slice::from_ref(&f), &radii, samples, seed)[0];
        let check = InequalityCheck::new("homogeneous_norm", SupBounds { lower: lhs, upper: lhs }, c * b.lower * b.lower, c * b.upper * b.upper);
        if check.verdict != Verdict::Inconclusive || samples >= max_samples {
            return Ok(NormReport {
                k,
                r,
                samples,
                seed,
                sup_lower: b.lower,
                sup_upper: b.upper,
                fischer_sq: format_rational(&fischer),
                bound_rhs: check.rhs_lower,
                bound_rhs_upper: check.rhs,
                verdict: check.verdict,
                passed: check.verdict == Verdict::Pass,
                pointwise: pointwise(s, k, &fischer, points, seed),
            });
        }
        samples = (samples * 2).min(max_samples);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiiJson {
    pub r: String,
    pub rho: String,
    pub sigma: String,
    pub r_prime: String,
}

impl From<&PolydiscParams> for RadiiJson {
    fn from(p: &PolydiscParams) -> Self {
        RadiiJson {
            r: format_rational(&p.r),
            rho: format_rational(&p.rho),
            sigma: format_rational(&p.sigma),
            r_prime: format_rational(&p.r_prime),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma42Report {
    pub n: usize,
    pub d: u32,
    pub radii: RadiiJson,
    pub samples: usize,
    pub seed: u64,
    /// `‖E‖_r` on `D_r`.
    pub e_norm: SupBounds,
    pub checks: Vec<InequalityCheck>,
    pub violations: usize,
}

fn check_preconditions(m: &ManifoldSpec, d: u32) -> Result<(), EstimatesError> {
    if d < 3 {
        return Err(EstimatesError::Domain(format!("d = {d} must be at least 3")));
    }
    if let Some(o) = m.order() {
        if o < d {
            return Err(EstimatesError::Domain(format!("perturbation has order {o} < d = {d}")));
        }
    }
    if m.d_max() < 2 * d - 2 {
        return Err(EstimatesError::Domain(format!("E is given through degree {}, below 2d - 2 = {}", m.d_max(), 2 * d - 2)));
    }
    Ok(())
}

/// The normalizing map of weight `2d − 3` used by a doubling step.
fn doubling_map(m: &ManifoldSpec, d: u32) -> Result<Transformation, EstimatesError> {
    Ok(normalize(m, 2 * d - 3)?.transform.truncated(2 * d - 3))
}

fn entry_max(polys: &[FloatPoly], radii: &[f64], samples: usize, seed: u64) -> SupBounds {
    sup_bounds_many(polys, radii, samples, seed).into_iter().fold(SupBounds::ZERO, SupBounds::max)
}

fn gradient_max(polys: &[FloatPoly], radii: &[f64], samples: usize, seed: u64) -> SupBounds {
    polys.iter().map(|p| gradient_bounds(p, radii, samples, seed)).fold(SupBounds::ZERO, SupBounds::max)
}

fn floats(m: &Matrix<TransformPolynomial>) -> Vec<FloatPoly> {
    m.iter().map(|(_, p)| FloatPoly::from_poly(p)).collect()
}

/// The five estimates on the normalizing map and the Taylor tail of `E`.
pub fn audit_lemma42(
    m: &ManifoldSpec,
    params: &PolydiscParams,
    d: u32,
    samples: usize,
    seed: u64,
) -> Result<Lemma42Report, EstimatesError> {
    check_preconditions(m, d)?;
    let n = m.n();
    let (r, rho, _, _) = params.floats();
    let e_norm = matrix_sup_bounds(m.e(), r, samples, seed);
    let h = doubling_map(m, d)?;
    let fhat = floats(&h.f_correction());
    let ghat = floats(&h.g_correction());
    let tail: Vec<FloatPoly> =
        m.e().iter().map(|(_, p)| FloatPoly::from_poly(&(p - &truncate_degree(p, 2 * d - 3)))).collect();

    let (nf, df) = (n as f64, d as f64);
    let p2 = (2.0 * df).powf(2.0 * nf);
    let p4 = p2 * p2;
    let gap = r - rho;
    let ratio = rho / r;
    type Rhs = Box<dyn Fn(f64) -> f64>;
    let rows: Vec<(&str, SupBounds, Rhs)> = vec![
        (
            "tail",
            entry_max(&tail, &bidisc_radii(n, rho), samples, seed),
            Box::new(move |e| p4 * e / gap.powf(2.0 * nf) * ratio.powf(2.0 * df - 2.0)),
        ),
        (
            "f",
            entry_max(&fhat, &transform_radii(n, rho), samples, seed),
            Box::new(move |e| 4.0 / nf * p4 * e * ratio.powf(2.0 * df - 3.0)),
        ),
        (
            "grad_f",
            gradient_max(&fhat, &transform_radii(n, rho), samples, seed),
            Box::new(move |e| (36.0 / gap + 2.0 * nf) * p4 * e / (nf * gap) * ratio.powf((2.0 * df - 3.0) / 2.0)),
        ),
        (
            "g",
            entry_max(&ghat, &transform_radii(n, rho), samples, seed),
            Box::new(move |e| (p4 + p4 * p2) * e * ratio.powf(2.0 * df - 2.0)),
        ),
        (
            "grad_g",
            gradient_max(&ghat, &transform_radii(n, rho), samples, seed),
            Box::new(move |e| (36.0 * (1.0 + p2) / gap + 6.0 * nf * (1.0 + p2)) * p4 * e / (nf * gap) * ratio.powf(df - 1.0)),
        ),
    ];
    let checks: Vec<InequalityCheck> =
        rows.into_iter().map(|(name, lhs, rhs)| InequalityCheck::new(name, lhs, rhs(e_norm.lower), rhs(e_norm.upper))).collect();
    let violations = checks.iter().filter(|c| c.violated()).count();
    Ok(Lemma42Report { n, d, radii: params.into(), samples, seed, e_norm, checks, violations })
}

/// Left side of the smallness condition on `‖E‖_r`, and the gradient sum it
/// stands for. The gate value `δ₀ = X / (2·gradient)` makes `X < δ₀` the
/// same statement as `gradient < ½`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub grad_f: f64,
    pub grad_g: f64,
    pub gradient_sum: f64,
    pub x00: f64,
    /// `None` when the gradient vanishes and any `δ₀` works.
    pub delta0: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub points: usize,
    /// Preimages of points of `Δ_{r'}` that landed in the closure of `Δ_σ`.
    pub contained: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop44Report {
    pub n: usize,
    pub d: u32,
    pub radii: RadiiJson,
    pub samples: usize,
    pub seed: u64,
    pub e_norm: SupBounds,
    pub gate: GateReport,
    /// `‖E'‖_{r'}` for the image under the doubling map.
    pub e_prime_norm: SupBounds,
    pub e_prime_order: Option<u32>,
    pub check: InequalityCheck,
    pub containment: ContainmentReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Prop44Outcome {
    Audited(Box<Prop44Report>),
    Refused { gate: GateReport },
}

fn gate_report(map: &FloatMap, params: &PolydiscParams, d: u32, e_upper: f64) -> GateReport {
    let n = map.n();
    let (r, rho, _, _) = params.floats();
    let (grad_f, grad_g) = map.gradient_upper(rho);
    let (nf, df) = (n as f64, d as f64);
    let p2 = (2.0 * df).powf(2.0 * nf);
    let gap = r - rho;
    let x00 = (36.0 * (1.0 + p2) / gap + 6.0 * nf * (1.0 + p2)) * p2 * p2 * e_upper / (nf * gap) * (rho / r).powf(df - 1.0);
    let gradient_sum = grad_f + grad_g;
    GateReport {
        grad_f,
        grad_g,
        gradient_sum,
        x00,
        delta0: (gradient_sum > 0.0).then(|| x00 / (2.0 * gradient_sum)),
        passed: gradient_sum < 0.5,
    }
}

fn containment(map: &FloatMap, params: &PolydiscParams, points: usize, seed: u64) -> ContainmentReport {
    let n = map.n();
    let (_, rho, sigma, rp) = params.floats();
    let mut sampler = TorusSampler::new(transform_radii(n, rp * (1.0 - 1e-9)), seed);
    let mut out = ContainmentReport { points, contained: 0, failures: Vec::new() };
    for i in 0..points {
        let x = sampler.next_point();
        match map.invert(&x, rho) {
            Ok(p) if in_polydisc(&p.point, n, sigma * (1.0 + 1e-12)) => out.contained += 1,
            Ok(_) => out.failures.push(format!("point {i}: preimage outside the closure of the sigma polydisc")),
            Err(e) => out.failures.push(format!("point {i}: {e}")),
        }
    }
    out
}

/// Bound on `‖E'‖_{r'}` after one doubling step, behind the contraction gate.
pub fn audit_prop44(
    m: &ManifoldSpec,
    params: &PolydiscParams,
    d: u32,
    samples: usize,
    seed: u64,
) -> Result<Prop44Outcome, EstimatesError> {
    check_preconditions(m, d)?;
    let n = m.n();
    let (r, _, _, rp) = params.floats();
    let e_norm = matrix_sup_bounds(m.e(), r, samples, seed);
    let h = doubling_map(m, d)?;
    let map = FloatMap::from_transformation(&h);
    let gate = gate_report(&map, params, d, e_norm.upper);
    if !gate.passed {
        return Ok(Prop44Outcome::Refused { gate });
    }
    let image = transform_manifold(m, &h, m.d_max())?;
    let e_prime_norm = matrix_sup_bounds(image.e(), rp, samples, seed);

    let c = EstimateConstants::new(d, n);
    let (nf, df) = (n as f64, d as f64);
    let p4 = (2.0 * df).powf(4.0 * nf);
    let gap = r - rp;
    let ratio = rp / r;
    let rhs = |e: f64| {
        e * 3f64.powf(2.0 * nf) * p4 / gap.powf(2.0 * nf) * ratio.powf(df - 1.0)
            + e * e
                * (p4 / (nf * gap)
                    * ((c.a / gap + c.b) * ratio.powf((df - 1.0) / 2.0)
                        + (108.0 / gap + c.d) * ratio.powf((2.0 * df - 3.0) / 4.0))
                    + c.e * ratio.powf(2.0 * df - 3.0))
    };
    let check = InequalityCheck::new("ert", e_prime_norm, rhs(e_norm.lower), rhs(e_norm.upper));
    let order = image.order();
    Ok(Prop44Outcome::Audited(Box::new(Prop44Report {
        n,
        d,
        radii: params.into(),
        samples,
        seed,
        e_norm,
        gate,
        e_prime_norm,
        e_prime_order: order,
        check,
        containment: containment(&map, params, 16, seed),
    })))
}

/// Everything the `audit` command reports for one manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    #[serde(rename = "map_bounds")]
    pub lemma42: Lemma42Report,
    #[serde(rename = "contraction")]
    pub prop44: Prop44Outcome,
    /// One entry per nonzero homogeneous part of each `E^{ab}`.
    #[serde(rename = "homogeneous_norms")]
    pub remark43: Vec<Remark43Entry>,
    pub radii: RadiusDiscrepancy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Remark43Entry {
    pub entry: [usize; 2],
    pub report: NormReport,
}

impl AuditReport {
    pub fn violations(&self) -> usize {
        let p = match &self.prop44 {
            Prop44Outcome::Audited(r) => r.check.violated() as usize,
            Prop44Outcome::Refused { .. } => 0,
        };
        self.lemma42.violations + p + self.remark43.iter().filter(|e| e.report.verdict == Verdict::Violation).count()
    }
}

pub fn audit_all(
    m: &ManifoldSpec,
    params: &PolydiscParams,
    d: u32,
    samples: usize,
    points: usize,
    seed: u64,
) -> Result<AuditReport, EstimatesError> {
    let lemma42 = audit_lemma42(m, params, d, samples, seed)?;
    let prop44 = audit_prop44(m, params, d, samples, seed)?;
    let r = rational_to_f64(&params.r);
    let mut remark43 = Vec::new();
    for ((a, b), p) in m.e().iter() {
        let (Some(lo), Some(hi)) = (p.order(), p.max_degree()) else { continue };
        for k in lo..=hi {
            let s = p.homogeneous_part(k);
            if !s.is_zero() {
                remark43.push(Remark43Entry { entry: [a + 1, b + 1], report: audit_remark43(&s, r, samples, points, seed)? });
            }
        }
    }
    Ok(AuditReport { lemma42, prop44, remark43, radii: radius_discrepancy(10) })
}
