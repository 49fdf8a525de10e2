use serde::{Deserialize, Serialize};

use crate::algebra::{conj_transpose, BiPolynomial};
use crate::fischer::{adjoint_apply, DivisorFamily};

use super::equation::substituted_equation;
use super::NormalFormResult;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bidegree: Option<[u32; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    pub passed: bool,
    /// Recorded but not part of the verdict.
    pub informational: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalFormReport {
    pub checks: Vec<CheckRecord>,
}

impl NormalFormReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.informational || c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.informational && !c.passed)
    }
}

fn record(name: &str, bidegree: Option<(u32, u32)>, slot: Option<String>, passed: bool, informational: bool) -> CheckRecord {
    CheckRecord { name: name.into(), bidegree: bidegree.map(|(m, n)| [m, n]), slot, passed, informational, detail: None }
}

/// First divisor whose adjoint does not annihilate `p`.
fn kernel_violation(p: &BiPolynomial, fam: &DivisorFamily) -> Option<String> {
    fam.divisors().into_iter().find(|(_, d)| !adjoint_apply(d, p).is_zero()).map(|(l, _)| l.to_string())
}

/// Re-checks every exact property of a normal form: map normalization,
/// the Fischer kernel conditions on `φ'`, reality of the pure terms, and
/// soundness of the substituted equation through `t_max`.
pub fn verify_normal_form(r: &NormalFormResult) -> NormalFormReport {
    let mut checks = Vec::new();
    let h = &r.transform;
    let n = h.n();
    checks.push(record("map-normalization", None, None, h.satisfies_map_normalization(), false));

    let phi = r.normalized.e();
    for t in 3..=r.t_max {
        for m in 0..=t {
            let nn = t - m;
            let part = phi.map(|p| p.bidegree_part(m, nn));
            // column-sum conditions: required off the diagonal, recorded at the overlap
            if m >= 1 && m <= nn + 1 {
                let fam = DivisorFamily::type2(n, m - 1);
                for b in 0..2 {
                    let s = part.get(0, b) + part.get(1, b);
                    let bad = kernel_violation(&s, &fam);
                    let mut c = record("column-kernel", Some((m, nn)), Some(format!("column {}", b + 1)), bad.is_none(), m >= nn);
                    c.detail = bad.map(|l| format!("adjoint of {l} is nonzero"));
                    checks.push(c);
                }
            }
            if m >= nn && nn >= 1 {
                let fam = DivisorFamily::type1(n, nn);
                for ((a, b), p) in part.iter() {
                    let bad = kernel_violation(p, &fam);
                    let mut c = record("entry-kernel", Some((m, nn)), Some(format!("entry ({},{})", a + 1, b + 1)), bad.is_none(), false);
                    c.detail = bad.map(|l| format!("adjoint of {l} is nonzero"));
                    checks.push(c);
                }
            }
        }
        let holo = phi.map(|p| p.bidegree_part(t, 0));
        let anti = phi.map(|p| p.bidegree_part(0, t));
        checks.push(record("pure-reality", Some((t, 0)), None, conj_transpose(&holo) == anti, false));
    }

    match substituted_equation(&r.source, h, phi, r.t_max) {
        Ok(s) => {
            for t in 0..=r.t_max {
                let ok = s.iter().all(|(_, p)| p.homogeneous_part(t).is_zero());
                checks.push(record("soundness", None, Some(format!("degree {t}")), ok, false));
            }
        }
        Err(e) => {
            let mut c = record("soundness", None, None, false, false);
            c.detail = Some(e.to_string());
            checks.push(c);
        }
    }
    NormalFormReport { checks }
}
