//! Radii, the shrinking-domain schedule and the limit of n^{m3} d_n^{m1} (1 − n^{−m2})^{d_n}.

use num::rational::BigRational;
use num::{BigInt, One};
use serde::{Deserialize, Serialize};

use crate::algebra::{format_rational, rational_to_f64};

use super::EstimatesError;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `r > ρ > σ > r' > ½` with `ρ = (2r' + r)/3`, `σ = (2r' + ρ)/3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolydiscParams {
    pub r: BigRational,
    pub rho: BigRational,
    pub sigma: BigRational,
    pub r_prime: BigRational,
}

impl PolydiscParams {
    pub fn from_radii(r: BigRational, r_prime: BigRational) -> Result<Self, EstimatesError> {
        let three = q(3, 1);
        let two = q(2, 1);
        let rho = (&two * &r_prime + &r) / &three;
        let sigma = (&two * &r_prime + &rho) / &three;
        let p = PolydiscParams { r, rho, sigma, r_prime };
        if !p.ordered() {
            return Err(EstimatesError::Radii(format!(
                "need 1/2 < r' < r <= 1, got r = {}, r' = {}",
                format_rational(&p.r),
                format_rational(&p.r_prime)
            )));
        }
        Ok(p)
    }

    pub fn ordered(&self) -> bool {
        q(1, 2) < self.r_prime
            && self.r_prime < self.sigma
            && self.sigma < self.rho
            && self.rho < self.r
            && self.r <= BigRational::one()
    }

    pub fn floats(&self) -> (f64, f64, f64, f64) {
        (rational_to_f64(&self.r), rational_to_f64(&self.rho), rational_to_f64(&self.sigma), rational_to_f64(&self.r_prime))
    }
}

/// `r_n = ½(1 + 1/(n+1))`.
pub fn r_n(n: u32) -> BigRational {
    q(1, 2) * (BigRational::one() + q(1, n as i64 + 1))
}

/// Radii of stage `n`: `r = r_n`, `r' = r_{n+1}` and `ρ_n, σ_n` from the
/// two-thirds chain, which keeps `r' < σ < ρ < r`.
pub fn radius_sequence(n: u32) -> PolydiscParams {
    PolydiscParams::from_radii(r_n(n), r_n(n + 1)).expect("r_n is decreasing in (1/2, 1]")
}

/// `ρ_n = (r_{n+1} + 2r_n)/3`, `σ_n = (ρ_n + 2r_n)/3` read literally; this
/// puts `σ_n` above `ρ_n`.
pub fn radius_sequence_literal(n: u32) -> (BigRational, BigRational, BigRational) {
    let r = r_n(n);
    let rho = (r_n(n + 1) + q(2, 1) * &r) / q(3, 1);
    let sigma = (&rho + q(2, 1) * &r) / q(3, 1);
    (r, rho, sigma)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadiusRow {
    pub n: u32,
    pub r_n: String,
    /// `1/(r_n − r_{n+1})` evaluated from the definition.
    pub inv_gap: String,
    /// The displayed value `(n+1)(n+2)`.
    pub inv_gap_stated: String,
    pub ratio: String,
    /// The displayed value `1 − 1/(n+1)²`.
    pub ratio_stated: String,
    pub inv_gap_matches: bool,
    pub ratio_matches: bool,
    /// Whether the literal `ρ_n, σ_n` satisfy `σ_n < ρ_n`.
    pub literal_order_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadiusDiscrepancy {
    pub summary: String,
    pub rows: Vec<RadiusRow>,
}

/// Compares the stated gap and ratio identities with the defining formula.
pub fn radius_discrepancy(n_max: u32) -> RadiusDiscrepancy {
    let rows = (0..=n_max)
        .map(|n| {
            let (a, b) = (r_n(n), r_n(n + 1));
            let inv_gap = BigRational::one() / (&a - &b);
            let stated_gap = q((n as i64 + 1) * (n as i64 + 2), 1);
            let ratio = &b / &a;
            let stated_ratio = BigRational::one() - q(1, (n as i64 + 1).pow(2));
            let (_, rho, sigma) = radius_sequence_literal(n);
            RadiusRow {
                n,
                r_n: format_rational(&a),
                inv_gap: format_rational(&inv_gap),
                inv_gap_stated: format_rational(&stated_gap),
                ratio: format_rational(&ratio),
                ratio_stated: format_rational(&stated_ratio),
                inv_gap_matches: inv_gap == stated_gap,
                ratio_matches: ratio == stated_ratio,
                literal_order_holds: sigma < rho,
            }
        })
        .collect();
    RadiusDiscrepancy {
        summary: "r_n = (1 + 1/(n+1))/2 gives 1/(r_n - r_{n+1}) = 2(n+1)(n+2) and r_{n+1}/r_n = 1 - 1/(n+2)^2, \
                  while the stated identities are (n+1)(n+2) and 1 - 1/(n+1)^2; the defining formula is used"
            .into(),
        rows,
    }
}

/// `ln t_n` for `t_n = n^{m3} d_n^{m1} (1 − n^{−m2})^{d_n}`, given `ln d_n`.
fn log_term(n: u32, m: (u32, u32, u32), ln_d: f64) -> f64 {
    let nf = n as f64;
    let x = nf.powi(-(m.1 as i32));
    // d_n·ln(1 − x), with d_n possibly far beyond f64 range
    let decay = -(ln_d + (-(-x).ln_1p()).ln()).exp();
    m.2 as f64 * nf.ln() + m.0 as f64 * ln_d + decay
}

/// `ln(⌈C aⁿ⌉ + offset)`, exact while the value fits an `f64` mantissa.
fn ln_dn(n: u32, c: f64, a: f64, offset: f64) -> f64 {
    let ln_base = c.ln() + n as f64 * a.ln();
    if ln_base < 52.0 * std::f64::consts::LN_2 {
        ((c * a.powi(n as i32)).ceil() + offset).ln()
    } else {
        ln_base
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub m: [u32; 3],
    pub c: f64,
    pub a: f64,
    pub offset: f64,
    pub tol: f64,
    /// First `n` with `t_n < tol`, monotone or not.
    pub first_below: u32,
    pub n_star: u32,
    pub log_t_star: f64,
    /// `ln t_n` for `n_star ..= n_star + 20`.
    pub tail: Vec<f64>,
}

/// First `n ≥ 2` with `t_n < tol` followed by 20 strictly decreasing
/// terms, for `d_n = ⌈C aⁿ⌉ + offset`. Computed in log space.
pub fn limit_check_lemma31(
    m: (u32, u32, u32),
    c: f64,
    a: f64,
    offset: f64,
    tol: f64,
) -> Result<LimitCheck, EstimatesError> {
    const CAP: u32 = 4000;
    const RUN: u32 = 20;
    if m.0 == 0 || m.1 == 0 || m.2 == 0 || c <= 0.0 || a <= 1.0 || tol <= 0.0 {
        return Err(EstimatesError::Domain("need m1, m2, m3 >= 1, C > 0, a > 1, tol > 0".into()));
    }
    let ln_tol = tol.ln();
    let lt = |n: u32| log_term(n, m, ln_dn(n, c, a, offset));
    // (1 − 1/n^{m2}) vanishes at n = 1, so the sequence starts at 2
    let mut first_below = None;
    for n in 2..CAP {
        let t = lt(n);
        if t >= ln_tol {
            continue;
        }
        let first_below = *first_below.get_or_insert(n);
        let tail: Vec<f64> = (n..=n + RUN).map(lt).collect();
        if tail.windows(2).all(|w| w[1] < w[0]) {
            return Ok(LimitCheck { m: [m.0, m.1, m.2], c, a, offset, tol, first_below, n_star: n, log_t_star: t, tail });
        }
    }
    Err(EstimatesError::NoConvergence { cap: CAP })
}

/// `(pol)` expressions at stage `n` with order `d_n`, using the stated gap
/// `(n+1)(n+2)`. The inputs grow fast, so values come back as logarithms.
pub fn pol_expressions(n: u32, d_n: f64, nn: usize) -> [f64; 4] {
    let c = super::EstimateConstants::from_float(d_n, nn);
    let nf = n as f64;
    let g = (nf + 1.0) * (nf + 2.0);
    let ln_ratio = (-(1.0 / (nf + 1.0).powi(2))).ln_1p();
    let d = d_n;
    let nn_f = nn as f64;
    let ln_2d4 = 4.0 * nn_f * (2.0 * d).ln();
    [
        (c.a * g + c.b).ln() + ln_2d4 + (d - 1.0) / 2.0 * ln_ratio,
        c.e.ln() + ln_2d4 - g.ln() + (2.0 * d - 3.0) * ln_ratio,
        (108.0 * g + c.d).ln() + ln_2d4 + (2.0 * d - 3.0) / 4.0 * ln_ratio,
        2.0 * nn_f * 3f64.ln() + ln_2d4 + 2.0 * nn_f * g.ln() + (d - 1.0) * ln_ratio,
    ]
}

/// First stage from which all four `(pol)` expressions, along `d_n =
/// 2ⁿ + 2`, stay below `tol` and decrease for 20 more stages.
pub fn pol_decay_stage(nn: usize, tol: f64) -> Result<u32, EstimatesError> {
    const CAP: u32 = 60;
    let ln_tol = tol.ln();
    let at = |n: u32| pol_expressions(n, 2f64.powi(n as i32) + 2.0, nn);
    for n in 0..CAP {
        if at(n).iter().any(|&v| v >= ln_tol) {
            continue;
        }
        let run: Vec<[f64; 4]> = (n..=n + 20).map(at).collect();
        if run.windows(2).all(|w| (0..4).all(|i| w[1][i] < w[0][i])) {
            return Ok(n);
        }
    }
    Err(EstimatesError::NoConvergence { cap: CAP })
}
