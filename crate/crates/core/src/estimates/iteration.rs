//! Picard inversion of normalizing maps and the staged iteration
//! `M_{n+1} = Ψ_n⁻¹(M_n)`.

use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{format_rational, rational_to_f64};
use crate::manifold::ManifoldSpec;
use crate::normalform::{theta_step, Transformation};

use super::norms::{matrix_sup_bounds, transform_radii, FloatPoly, SupBounds};
use super::sequence::{pol_decay_stage, pol_expressions, r_n, radius_sequence};
use super::{EstimateConstants, EstimatesError};

/// `ĥ = (F − Z, G − W)` in floats, components ordered `F̂_{aj}` row-major
/// then `Ĝ_{ab}`; points are `(z_{11}, …, z_{2N}, w_{11}, w_{12}, w_{21}, w_{22})`.
#[derive(Clone, Debug)]
pub struct FloatMap {
    n: usize,
    corr: Vec<FloatPoly>,
}

impl FloatMap {
    pub fn from_transformation(h: &Transformation) -> Self {
        let f = h.f_correction();
        let g = h.g_correction();
        let corr = f.iter().chain(g.iter()).map(|(_, p)| FloatPoly::from_poly(p)).collect();
        FloatMap { n: h.n(), corr }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 4
    }

    pub fn correction(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.corr.iter().map(|p| p.eval(x)).collect()
    }

    /// `H(x) = x + ĥ(x)`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        x.iter().zip(self.correction(x)).map(|(a, b)| a + b).collect()
    }

    /// Coefficient-sum bounds of `|∇F̂|_ρ` and `|∇Ĝ|_ρ` on `Δ_ρ`, each summed
    /// over components with the ℓ¹ gradient per component.
    pub fn gradient_upper(&self, rho: f64) -> (f64, f64) {
        let radii = transform_radii(self.n, rho);
        let per: Vec<f64> = self
            .corr
            .iter()
            .map(|p| (0..p.nvars).map(|v| p.diff(v).coefficient_bound(&radii)).fold(0.0, |a, b| a + b))
            .collect();
        let (f, g) = per.split_at(2 * self.n);
        (f.iter().fold(0.0, |a, b| a + b), g.iter().fold(0.0, |a, b| a + b))
    }

    /// Solves `H(x) = target` by `x_{j+1} = target − ĥ(x_j)` once the
    /// contraction gate `|∇F̂|_ρ + |∇Ĝ|_ρ < ½` holds.
    pub fn invert(&self, target: &[Complex64], rho: f64) -> Result<PicardResult, EstimatesError> {
        const CAP: usize = 500;
        const TOL: f64 = 1e-13;
        if target.len() != self.dim() {
            return Err(EstimatesError::Domain(format!("point has {} coordinates, expected {}", target.len(), self.dim())));
        }
        let (gf, gg) = self.gradient_upper(rho);
        let gate = gf + gg;
        if gate >= 0.5 || gate.is_nan() {
            return Err(EstimatesError::Gate { gradient: gate });
        }
        let mut x = target.to_vec();
        let mut residual = f64::INFINITY;
        for it in 0..=CAP {
            residual = max_dist(&self.apply(&x), target);
            if residual < TOL {
                if !in_polydisc(&x, self.n, rho) {
                    return Err(EstimatesError::Containment { rho });
                }
                return Ok(PicardResult { point: x, iterations: it, residual, gate });
            }
            x = target.iter().zip(self.correction(&x)).map(|(t, c)| t - c).collect();
        }
        Err(EstimatesError::Picard { iterations: CAP, residual })
    }
}

fn max_dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `x ∈ Δ_ρ`: `|z_{ij}| < ρ`, `|w_{αβ}| < √N ρ`.
pub fn in_polydisc(x: &[Complex64], n: usize, rho: f64) -> bool {
    let (z, w) = x.split_at(2 * n);
    z.iter().all(|c| c.norm() < rho) && w.iter().all(|c| c.norm() < (n as f64).sqrt() * rho)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardResult {
    #[serde(with = "complex_vec")]
    pub point: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
    /// Upper bound of `|∇F̂|_ρ + |∇Ĝ|_ρ`.
    pub gate: f64,
}

/// Preimage of `point` under `h` inside `Δ_ρ`.
pub fn picard_invert(h: &Transformation, point: &[Complex64], rho: f64) -> Result<PicardResult, EstimatesError> {
    FloatMap::from_transformation(h).invert(point, rho)
}

pub(crate) mod complex_vec {
    use num::complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub n: u32,
    pub r_n: String,
    pub rho_n: String,
    pub sigma_n: String,
    /// `Ord(E_n)`; `None` when `E_n` vanishes through the truncation.
    pub d_n: Option<u32>,
    /// `2ⁿ + 2`.
    pub d_n_required: u32,
    pub sup_lower: f64,
    pub sup_upper: f64,
    /// `‖E_n‖_{r_n} / (r_n − r_{n+1})²` at both brackets.
    pub eps_lower: f64,
    pub eps_upper: f64,
    /// `ln` of the recursion's bound on `ε_{n+1}`, fed with `ε_n` (upper).
    pub ertq_log_bound: Option<f64>,
    /// `ln` of the four limit expressions at `(n, d_n)`.
    pub pol_log: Option<[f64; 4]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub n: usize,
    pub stages: u32,
    pub trunc: u32,
    pub samples: usize,
    pub seed: u64,
    pub records: Vec<StageRecord>,
    /// `d_n ≥ 2ⁿ + 2` at every recorded stage.
    pub order_chain_holds: bool,
    /// `ε_{n+1} < ε_n` for `n ≥ 2`, at both brackets.
    pub eps_decreasing: bool,
    /// Stage from which the limit expressions along `d_n = 2ⁿ + 2` stay
    /// below `1e-6` and decrease.
    pub pol_decay_from: Option<u32>,
}

impl IterationTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,r_n,rho_n,sigma_n,d_n,d_n_required,sup_lower,sup_upper,eps_lower,eps_upper,ertq_log_bound\n");
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{:e},{:e},{:e},{:e},{}\n",
                r.n,
                r.r_n,
                r.rho_n,
                r.sigma_n,
                r.d_n.map(|d| d.to_string()).unwrap_or_default(),
                r.d_n_required,
                r.sup_lower,
                r.sup_upper,
                r.eps_lower,
                r.eps_upper,
                opt(r.ertq_log_bound)
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IterateOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions { samples: 4096, seed: super::DEFAULT_SEED }
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln` of the right side of the ε-recursion at stage `n`.
fn ertq_log(n: u32, d: u32, nn: usize, eps: f64) -> Option<f64> {
    if eps <= 0.0 {
        return None;
    }
    let c = EstimateConstants::new(d, nn);
    let g0 = rational_to_f64(&(r_n(n) - r_n(n + 1))).ln();
    let g1 = rational_to_f64(&(r_n(n + 1) - r_n(n + 2))).ln();
    let lr = rational_to_f64(&(r_n(n + 1) / r_n(n))).ln();
    let (df, nf) = (d as f64, nn as f64);
    let le = eps.ln();
    let l2d = 4.0 * nf * (2.0 * df).ln();
    let t1 = le + 2.0 * g0 - 2.0 * g1 + 2.0 * nf * 3f64.ln() + l2d - 2.0 * nf * g0 + (df - 1.0) * lr;
    let quad = 2.0 * le + 4.0 * g0 - 2.0 * g1;
    let t2 = quad + c.e.ln() + (2.0 * df - 3.0) * lr;
    let inner = log_sum_exp(&[
        (c.a / g0.exp() + c.b).ln() + (df - 1.0) / 2.0 * lr,
        (108.0 / g0.exp() + c.d).ln() + (2.0 * df - 3.0) / 4.0 * lr,
    ]);
    let t3 = quad + l2d - nf.ln() - g0 + inner;
    Some(log_sum_exp(&[t1, t2, t3]))
}

/// Runs `stages` degree-doubling steps on `M` truncated at `trunc`,
/// recording orders exactly and sizes in floats.
pub fn moser_iterate(m: &ManifoldSpec, stages: u32, trunc: u32, opts: IterateOptions) -> Result<IterationTrace, EstimatesError> {
    let required = |n: u32| (1u32 << n) + 2;
    if stages > 20 || trunc < required(stages) {
        return Err(EstimatesError::Domain(format!(
            "trunc = {trunc} cannot certify {stages} stages (needs at least {})",
            required(stages.min(20))
        )));
    }
    if m.d_max() < trunc {
        return Err(EstimatesError::Domain(format!("manifold is given through degree {}, below trunc = {trunc}", m.d_max())));
    }
    if m.order().is_some_and(|o| o < 3) {
        return Err(EstimatesError::Domain("perturbation must have order at least 3".into()));
    }
    let nn = m.n();
    let mut current = m.truncated(trunc);
    let mut records = Vec::new();
    for n in 0..=stages {
        let d_n = current.order();
        if d_n.is_some_and(|d| d < required(n)) {
            return Err(EstimatesError::Stage { stage: n, reason: format!("order {} below {}", d_n.unwrap(), required(n)) });
        }
        let p = radius_sequence(n);
        let gap = rational_to_f64(&(&p.r - &p.r_prime));
        let sup = if d_n.is_some() {
            matrix_sup_bounds(current.e(), rational_to_f64(&p.r), opts.samples, opts.seed)
        } else {
            SupBounds::ZERO
        };
        let (eps_lower, eps_upper) = (sup.lower / (gap * gap), sup.upper / (gap * gap));
        records.push(StageRecord {
            n,
            r_n: format_rational(&p.r),
            rho_n: format_rational(&p.rho),
            sigma_n: format_rational(&p.sigma),
            d_n,
            d_n_required: required(n),
            sup_lower: sup.lower,
            sup_upper: sup.upper,
            eps_lower,
            eps_upper,
            ertq_log_bound: d_n.and_then(|d| ertq_log(n, d, nn, eps_upper)),
            pol_log: d_n.map(|d| pol_expressions(n, d as f64, nn)),
        });
        if n == stages {
            break;
        }
        let Some(d) = d_n else {
            continue;
        };
        let step = theta_step(&current, d).map_err(|e| EstimatesError::Stage { stage: n, reason: e.to_string() })?;
        if step.order.is_some_and(|o| o < required(n + 1)) {
            return Err(EstimatesError::Stage { stage: n + 1, reason: "order chain broken".into() });
        }
        current = step.manifold;
    }
    let order_chain_holds = records.iter().all(|r| r.d_n.is_none_or(|d| d >= r.d_n_required));
    let dec = |a: f64, b: f64| b < a || (a == 0.0 && b == 0.0);
    let eps_decreasing = records
        .windows(2)
        .filter(|w| w[0].n >= 2)
        .all(|w| dec(w[0].eps_lower, w[1].eps_lower) && dec(w[0].eps_upper, w[1].eps_upper));
    Ok(IterationTrace {
        n: nn,
        stages,
        trunc,
        samples: opts.samples,
        seed: opts.seed,
        records,
        order_chain_holds,
        eps_decreasing,
        pol_decay_from: pol_decay_stage(nn, 1e-6).ok(),
    })
}
