//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any fails. Optional positional arguments filter
//! criteria by substring.

use std::time::{Duration, Instant};

use num::{BigInt, BigRational, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fischer_nf::algebra::{compositions, BiPolynomial, GaussianRational, MultiIndex};
use fischer_nf::estimates::{audit_all, limit_check_lemma31, moser_iterate, radius_discrepancy, IterateOptions, Prop44Outcome};
use fischer_nf::fischer::{adjoint_apply, decompose_type1, decompose_type2, fischer_inner, fischer_norm_sq, verify_pythagoras};
use fischer_nf::manifold::bidegree_census;
use fischer_nf::normalform::instances::{phi21_family, random_bihomogeneous, random_model_equivalent, random_real_manifold};
use fischer_nf::normalform::{normalize, theta_step, verify_normal_form};
use fischer_nf::{DivisorFamily, FischerCertificate, ManifoldSpec, PolydiscParams};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Duration, limit_s: u64, what: &str) -> Result<(), String> {
    ensure(t.as_secs() < limit_s, || format!("{what} took {:.1}s, limit {limit_s}s", t.as_secs_f64()))
}

fn q(n: i64, d: i64) -> GaussianRational {
    GaussianRational::from_ratio(n, d)
}

// ---------------------------------------------------------------------------
// Oracles written from the definitions, sharing no code with the library.

fn factorial(e: &MultiIndex) -> BigInt {
    let mut f = BigInt::one();
    for k in e.iter() {
        for i in 2..=k {
            f *= BigInt::from(i);
        }
    }
    f
}

/// `Σ_{α,β} p_{αβ} conj(q_{αβ}) α! β!`.
fn oracle_inner(p: &BiPolynomial, q: &BiPolynomial) -> GaussianRational {
    let mut re = BigRational::zero();
    let mut im = BigRational::zero();
    for ((a, b), c) in p.terms() {
        let d = q.coeff(a, b);
        let w = BigRational::from_integer(factorial(a) * factorial(b));
        // c · conj(d)
        re += (c.re() * d.re() + c.im() * d.im()) * &w;
        im += (c.im() * d.re() - c.re() * d.im()) * &w;
    }
    GaussianRational::new(re, im)
}

fn all_monomials(n: usize, deg_z: u32, deg_zbar: u32) -> Vec<BiPolynomial> {
    let mut out = Vec::new();
    for a in compositions(2 * n, deg_z) {
        for b in compositions(2 * n, deg_zbar) {
            out.push(BiPolynomial::monomial(n, a.clone(), b, GaussianRational::one()));
        }
    }
    out
}

/// Exact solve of a consistent, possibly singular Hermitian system by
/// Gauss-Jordan elimination; free variables are set to zero.
fn solve_consistent(mut a: Vec<Vec<GaussianRational>>, mut b: Vec<GaussianRational>) -> Option<Vec<GaussianRational>> {
    let (rows, cols) = (a.len(), a.first().map_or(0, Vec::len));
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        b.swap(r, p);
        let inv = a[r][c].inv().unwrap();
        for k in 0..cols {
            a[r][k] = &a[r][k] * &inv;
        }
        b[r] = &b[r] * &inv;
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for k in 0..cols {
                    let t = &f * &a[r][k];
                    a[i][k] = &a[i][k] - &t;
                }
                let t = &f * &b[r];
                b[i] = &b[i] - &t;
            }
        }
        pivots.push(c);
        r += 1;
    }
    if b[r..].iter().any(|x| !x.is_zero()) {
        return None;
    }
    let mut x = vec![GaussianRational::zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = b[i].clone();
    }
    Some(x)
}

/// Orthogonal projection of `p` onto the span of `basis` through the dense
/// Gram system `Σ_k ⟨v_k, v_i⟩ x_k = ⟨p, v_i⟩`.
fn gram_projection(p: &BiPolynomial, basis: &[BiPolynomial]) -> BiPolynomial {
    let gram: Vec<Vec<GaussianRational>> =
        basis.iter().map(|vi| basis.iter().map(|vk| oracle_inner(vk, vi)).collect()).collect();
    let rhs: Vec<GaussianRational> = basis.iter().map(|vi| oracle_inner(p, vi)).collect();
    let x = solve_consistent(gram, rhs).expect("Gram systems are consistent");
    let mut out = BiPolynomial::zero(p.n());
    for (v, c) in basis.iter().zip(&x) {
        out.add_assign_ref(&v.scale(c));
    }
    out
}

fn lin(n: usize, j: usize) -> BiPolynomial {
    &BiPolynomial::z(n, 1, j) + &BiPolynomial::z(n, 2, j)
}

/// `⟨l_a, l_b⟩ = Σ_j z_{aj} z̄_{bj}`.
fn oracle_form(n: usize, a: usize, b: usize) -> BiPolynomial {
    let mut h = BiPolynomial::zero(n);
    for j in 1..=n {
        h.add_assign_ref(&(&BiPolynomial::z(n, a, j) * &BiPolynomial::zbar(n, b, j)));
    }
    h
}

/// Products of `k` forms, with repetition.
fn oracle_form_products(n: usize, k: u32) -> Vec<BiPolynomial> {
    let forms: Vec<BiPolynomial> = [(1, 1), (1, 2), (2, 1), (2, 2)].iter().map(|&(a, b)| oracle_form(n, a, b)).collect();
    let mut out = vec![BiPolynomial::one(n)];
    for _ in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for f in &forms {
                next.push(p * f);
            }
        }
        out = next;
    }
    out
}

/// Spanning set of the divisor ideal in bidegree `(m, n)`: type 1 spans
/// `Z^α · Π forms` with `|α| = m − n`; type 2 spans
/// `(z_{1j}+z_{2j}) · Z̄^β · Π forms` with `m − 1` forms.
fn oracle_span(n: usize, m: u32, nn: u32, type2: bool) -> Vec<BiPolynomial> {
    let mut out = Vec::new();
    if !type2 {
        for f in oracle_form_products(n, nn) {
            for mono in all_monomials(n, m - nn, 0) {
                out.push(&f * &mono);
            }
        }
    } else {
        for f in oracle_form_products(n, m - 1) {
            for j in 1..=n {
                let d = &lin(n, j) * &f;
                for mono in all_monomials(n, 0, nn - m + 1) {
                    out.push(&d * &mono);
                }
            }
        }
    }
    out
}

fn decompose(p: &BiPolynomial) -> FischerCertificate {
    let (m, n) = p.bidegree().expect("bihomogeneous input");
    if m >= n {
        decompose_type1(p, &DivisorFamily::type1(p.n(), n), None).unwrap()
    } else {
        decompose_type2(p, &DivisorFamily::type2(p.n(), m - 1), None).unwrap()
    }
}

// ---------------------------------------------------------------------------

fn fischer_axioms() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF15C);
    let mut monomial_pairs = 0usize;
    // Exhaustive on small degrees: ⟨Z^α Z̄^γ, Z^β Z̄^δ⟩ = δ α! γ!.
    for n in 1..=2usize {
        let max = if n == 1 { 4 } else { 2 };
        let mut monos = Vec::new();
        for t in 0..=max {
            for m in 0..=t {
                monos.extend(all_monomials(n, m, t - m));
            }
        }
        for p in &monos {
            for r in &monos {
                let got = fischer_inner(p, r).map_err(|e| e.to_string())?;
                let ((a, b), _) = p.terms().next().unwrap();
                let want = if p == r { GaussianRational::real(BigRational::from_integer(factorial(a) * factorial(b))) } else { GaussianRational::zero() };
                ensure(got == want, || format!("monomial inner product wrong for {p:?}, {r:?}"))?;
                monomial_pairs += 1;
            }
        }
    }
    // Random monomials up to total degree 8 for N ∈ {1,2,3}.
    for _ in 0..2000 {
        let n = rng.gen_range(1..=3usize);
        let t = rng.gen_range(0..=8u32);
        let m = rng.gen_range(0..=t);
        let pick = |rng: &mut ChaCha8Rng, d: u32| {
            let mut e = vec![0u32; 2 * n];
            for _ in 0..d {
                e[rng.gen_range(0..2 * n)] += 1;
            }
            MultiIndex::from_slice(&e)
        };
        let (a, b) = (pick(&mut rng, m), pick(&mut rng, t - m));
        let (c, d) = if rng.gen_bool(0.5) { (a.clone(), b.clone()) } else { (pick(&mut rng, m), pick(&mut rng, t - m)) };
        let p = BiPolynomial::monomial(n, a.clone(), b.clone(), GaussianRational::one());
        let r = BiPolynomial::monomial(n, c.clone(), d.clone(), GaussianRational::one());
        let want = if a == c && b == d { GaussianRational::real(BigRational::from_integer(factorial(&a) * factorial(&b))) } else { GaussianRational::zero() };
        ensure(fischer_inner(&p, &r).unwrap() == want, || format!("monomial inner product wrong for {p:?}, {r:?}"))?;
        monomial_pairs += 1;
    }
    // Adjointness ⟨q·h, t⟩ = ⟨q, h*(D) t⟩ and Hermitian symmetry.
    let mut triples = 0usize;
    while triples < 600 {
        let n = rng.gen_range(1..=3usize);
        let (qa, qb) = (rng.gen_range(0..=3u32), rng.gen_range(0..=3u32));
        let (ha, hb) = (rng.gen_range(0..=2u32), rng.gen_range(0..=2u32));
        if qa + qb + ha + hb > 8 {
            continue;
        }
        let density = if n == 3 { 0.15 } else { 0.5 };
        let qq = random_bihomogeneous(n, qa, qb, density, &mut rng);
        let h = random_bihomogeneous(n, ha, hb, density, &mut rng);
        let t = random_bihomogeneous(n, qa + ha, qb + hb, density / 2.0, &mut rng);
        let lhs = fischer_inner(&(&qq * &h), &t).unwrap();
        let rhs = fischer_inner(&qq, &adjoint_apply(&h, &t)).unwrap();
        ensure(lhs == rhs, || format!("adjointness fails: {lhs:?} vs {rhs:?}"))?;
        ensure(lhs == oracle_inner(&(&qq * &h), &t), || "inner product disagrees with the oracle".into())?;
        ensure(fischer_inner(&t, &(&qq * &h)).unwrap() == lhs.conj(), || "Hermitian symmetry fails".into())?;
        ensure(fischer_norm_sq(&t) == *oracle_inner(&t, &t).re(), || "norm disagrees with the oracle".into())?;
        triples += 1;
    }
    let t = start.elapsed();
    within(t, 60, "Fischer axioms")?;
    Ok(format!("{monomial_pairs} monomial pairs, {triples} adjoint triples, {:.1}s", t.as_secs_f64()))
}

fn decomposition_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xDEC0);
    let (mut type1, mut type2, mut oracle_checked) = (0usize, 0usize, 0usize);
    while type1 < 200 || type2 < 200 {
        let n = rng.gen_range(1..=2usize);
        let total = rng.gen_range(2..=if n == 1 { 6 } else { 5 });
        let m = rng.gen_range(0..=total);
        let nn = total - m;
        let is_type2 = m < nn;
        if (is_type2 && (m == 0 || type2 >= 200)) || (!is_type2 && type1 >= 200) {
            continue;
        }
        let p = random_bihomogeneous(n, m, nn, 0.6, &mut rng);
        if p.is_zero() {
            continue;
        }
        let cert = decompose(&p);
        ensure(cert.reconstruction_holds(), || format!("reconstruction fails for {p:?}"))?;
        ensure(cert.kernel_holds(), || format!("kernel evidence nonzero for {p:?}"))?;
        ensure(cert.kernel_evidence.iter().all(|k| k.result.is_zero()), || "kernel evidence nonzero".into())?;
        ensure(verify_pythagoras(&p, &cert.span_part(), &cert.remainder), || format!("Pythagoras fails for {p:?}"))?;
        if !cert.remainder.is_zero() {
            let again = decompose(&cert.remainder);
            ensure(again.quotients.values().all(BiPolynomial::is_zero), || "remainder re-decomposes with nonzero quotients".into())?;
            ensure(again.remainder == cert.remainder, || "remainder is not fixed by re-decomposition".into())?;
        }
        // Independent check on the smaller spaces: the span part is the
        // Gram-system projection.
        if total <= 4 {
            let proj = gram_projection(&p, &oracle_span(n, m, nn, is_type2));
            ensure(proj == cert.span_part(), || format!("span part disagrees with the Gram oracle for {p:?}"))?;
            oracle_checked += 1;
        }
        if is_type2 {
            type2 += 1;
        } else {
            type1 += 1;
        }
    }
    let t = start.elapsed();
    within(t, 300, "decomposition")?;
    Ok(format!("{type1} type1, {type2} type2, {oracle_checked} against the Gram oracle, {:.1}s", t.as_secs_f64()))
}

fn worked_values() -> Outcome {
    // N = 2: z11 z̄11 = ½⟨l1,l1⟩ + ½(z11 z̄11 − z12 z̄12).
    let n = 2;
    let p = &BiPolynomial::z(n, 1, 1) * &BiPolynomial::zbar(n, 1, 1);
    let cert = decompose(&p);
    let want_r = (&(&BiPolynomial::z(n, 1, 1) * &BiPolynomial::zbar(n, 1, 1)) - &(&BiPolynomial::z(n, 1, 2) * &BiPolynomial::zbar(n, 1, 2))).scale(&q(1, 2));
    let oracle_r = &p - &gram_projection(&p, &oracle_span(n, 1, 1, false));
    ensure(oracle_r == want_r, || format!("Gram oracle remainder {oracle_r:?}"))?;
    ensure(cert.remainder == want_r, || format!("remainder {:?}", cert.remainder))?;
    for (label, quot) in &cert.quotients {
        let want = if label.form == MultiIndex::unit(4, 0) { BiPolynomial::constant(n, q(1, 2)) } else { BiPolynomial::zero(n) };
        ensure(*quot == want, || format!("quotient on {label}: {quot:?}"))?;
    }
    ensure(cert.span_part() == oracle_form(n, 1, 1).scale(&q(1, 2)), || "span part is not ½⟨l1,l1⟩".into())?;

    // N = 1: z11 z̄11 z̄21 = (z11 + z21)·½ z̄11 z̄21 + ½(z11 − z21) z̄11 z̄21.
    let n = 1;
    let zb = &BiPolynomial::zbar(n, 1, 1) * &BiPolynomial::zbar(n, 2, 1);
    let p = &BiPolynomial::z(n, 1, 1) * &zb;
    let cert = decompose(&p);
    let want_q = zb.scale(&q(1, 2));
    let want_r = (&(&BiPolynomial::z(n, 1, 1) - &BiPolynomial::z(n, 2, 1)) * &zb).scale(&q(1, 2));
    let oracle_r = &p - &gram_projection(&p, &oracle_span(n, 1, 2, true));
    ensure(oracle_r == want_r, || format!("Gram oracle remainder {oracle_r:?}"))?;
    ensure(cert.remainder == want_r, || format!("remainder {:?}", cert.remainder))?;
    ensure(cert.quotients.len() == 1, || format!("{} quotients", cert.quotients.len()))?;
    let (label, quot) = cert.quotients.iter().next().unwrap();
    ensure(label.j == Some(1) && *quot == want_q, || format!("quotient on {label}: {quot:?}"))?;
    Ok("both worked decompositions match the Gram oracle exactly".into())
}

fn normal_form() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4E46);
    let t_max = 6;
    let mut instances = 0;
    for k in 0..50 {
        let n = 1 + k % 2;
        let (hi, density) = if n == 1 { (6, 0.4) } else { (5, 0.15) };
        let m = random_real_manifold(n, 3, hi, t_max, density, &q(1, 4), &mut rng);
        let r = normalize(&m, t_max).map_err(|e| format!("instance {k}: {e}"))?;
        let report = verify_normal_form(&r);
        ensure(report.passed(), || {
            let f: Vec<String> = report.failures().map(|c| format!("{} {:?} {:?}", c.name, c.bidegree, c.detail)).collect();
            format!("instance {k}: {}", f.join("; "))
        })?;
        let reality = report.checks.iter().filter(|c| c.name == "pure-reality").count();
        ensure(reality > 0, || format!("instance {k}: no pure-term reality checks ran"))?;
        let again = normalize(&m, t_max).map_err(|e| e.to_string())?;
        let (a, b) = (serde_json::to_string(&r.to_json()).unwrap(), serde_json::to_string(&again.to_json()).unwrap());
        ensure(a == b, || format!("instance {k}: two runs differ"))?;
        instances += 1;
    }
    for n in 1..=2 {
        let r = normalize(&ManifoldSpec::model(n, t_max), t_max).map_err(|e| e.to_string())?;
        ensure(r.transform.is_identity(), || format!("model N={n} does not map by the identity"))?;
        ensure(r.normalized.order().is_none(), || format!("model N={n} acquires a perturbation"))?;
        ensure(verify_normal_form(&r).passed(), || "model normal form fails verification".into())?;
    }
    let t = start.elapsed();
    within(t, 600, "normal form")?;
    Ok(format!("{instances} instances verified, model fixed, reruns identical, {:.1}s", t.as_secs_f64()))
}

fn degree_doubling() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0B1);
    let mut count = 0;
    for d in 3..=5u32 {
        let d_max = 2 * d - 2;
        for k in 0..20 {
            let n = if d == 3 && k % 2 == 1 { 2 } else { 1 };
            let (m, _) = random_model_equivalent(n, d, 2 * d - 3, d_max, 0.4, &q(1, 8), &mut rng).map_err(|e| e.to_string())?;
            ensure(m.order().map_or(true, |o| o >= d), || format!("d={d}: generated order {:?}", m.order()))?;
            let step = theta_step(&m, d).map_err(|e| format!("d={d} instance {k}: {e}"))?;
            // Independent scan of every entry and bidegree.
            for (entry, bidegrees) in bidegree_census(step.manifold.e()) {
                for (a, b) in bidegrees {
                    ensure(a + b >= 2 * d - 2, || format!("d={d} instance {k}: entry {entry:?} has bidegree ({a},{b})"))?;
                }
            }
            ensure(step.order.map_or(true, |o| o >= 2 * d - 2), || format!("d={d}: order {:?}", step.order))?;
            count += 1;
        }
    }
    Ok(format!("{count} instances, zero exceptions, {:.1}s", start.elapsed().as_secs_f64()))
}

fn iteration() -> Outcome {
    let start = Instant::now();
    let (stages, trunc) = (3, 18);
    let mut lines = Vec::new();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, _) = random_model_equivalent(1, 3, 3, trunc, 0.5, &q(1, 10), &mut rng).map_err(|e| e.to_string())?;
        let trace = moser_iterate(&m, stages, trunc, IterateOptions::default()).map_err(|e| format!("seed {seed}: {e}"))?;
        for r in &trace.records {
            ensure(r.d_n.map_or(true, |d| d >= (1 << r.n) + 2), || format!("seed {seed}: stage {} has order {:?}", r.n, r.d_n))?;
        }
        let late: Vec<_> = trace.records.iter().filter(|r| r.n >= 2).collect();
        for w in late.windows(2) {
            ensure(w[1].eps_upper < w[0].eps_upper && w[1].eps_lower < w[0].eps_lower, || {
                format!("seed {seed}: ε not decreasing from stage {} to {}", w[0].n, w[1].n)
            })?;
        }
        ensure(trace.order_chain_holds && trace.eps_decreasing, || format!("seed {seed}: trace flags disagree"))?;
        lines.push(format!("{:.1e}", trace.records.last().map_or(0.0, |r| r.eps_upper)));
    }
    let t = start.elapsed();
    within(t, 900, "iteration")?;
    Ok(format!("10 instances; final ε upper brackets [{}], {:.1}s", lines.join(", "), t.as_secs_f64()))
}

/// `ln(n^{m3} d^{m1} (1 − n^{−m2})^d)` by direct evaluation.
fn oracle_log_term(n: u32, d: f64, (m1, m2, m3): (u32, u32, u32)) -> f64 {
    let nf = n as f64;
    m3 as f64 * nf.ln() + m1 as f64 * d.ln() + d * (-(nf.powi(-(m2 as i32)))).ln_1p()
}

fn oracle_n_star(m: (u32, u32, u32), tol: f64) -> u32 {
    let d = |n: u32| 2f64.powi(n as i32) + 2.0;
    let t = |n: u32| oracle_log_term(n, d(n), m);
    (2..).find(|&n| t(n) < tol.ln() && (n..n + 20).all(|k| t(k + 1) < t(k))).unwrap()
}

fn limit() -> Outcome {
    let tol = 1e-6;
    let mut found = Vec::new();
    for m1 in 1..=2 {
        for m2 in 1..=2 {
            for m3 in 1..=2 {
                let m = (m1, m2, m3);
                let l = limit_check_lemma31(m, 1.0, 2.0, 2.0, tol).map_err(|e| e.to_string())?;
                let want = oracle_n_star(m, tol);
                ensure(l.n_star == want, || format!("{m:?}: n_star {} but direct evaluation gives {want}", l.n_star))?;
                ensure(l.log_t_star < tol.ln(), || format!("{m:?}: term at n_star is not below tol"))?;
                ensure(l.tail.len() == 21 && l.tail.windows(2).all(|w| w[1] < w[0]), || format!("{m:?}: tail not decreasing"))?;
                found.push((m, l.n_star));
            }
        }
    }
    // Larger m2 slows the decay.
    for &((m1, m2, m3), n) in &found {
        if m2 == 1 {
            let slower = found.iter().find(|(k, _)| *k == (m1, 2, m3)).unwrap().1;
            ensure(slower >= n, || format!("n_star decreases with m2 at {:?}", (m1, m3)))?;
        }
    }
    let list: Vec<String> = found.iter().map(|((a, b, c), n)| format!("{a}{b}{c}:{n}")).collect();
    Ok(format!("n_star {}", list.join(" ")))
}

fn audits() -> Outcome {
    let params = PolydiscParams::from_radii(BigRational::one(), BigRational::new(11.into(), 20.into())).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (num, den) in [(1, 10_000), (1, 1_000)] {
        let t = q(num, den);
        let m = phi21_family(1, &t, 8);
        let rep = audit_all(&m, &params, 3, 20_000, 128, 0x5EED).map_err(|e| e.to_string())?;
        ensure(rep.violations() == 0, || format!("t={num}/{den}: {} violations", rep.violations()))?;
        ensure(rep.lemma42.checks.len() == 5, || "expected five map bounds".into())?;
        let Prop44Outcome::Audited(p) = &rep.prop44 else {
            return Err(format!("t={num}/{den}: contraction gate refused"));
        };
        ensure(p.containment.contained == p.containment.points, || "preimages leave the polydisc".into())?;
        ensure(!rep.remark43.is_empty(), || "no homogeneous parts audited".into())?;
        let mut pointwise = Vec::new();
        for e in &rep.remark43 {
            for o in &e.report.pointwise {
                ensure(o.points >= 100, || format!("pointwise check ran at {} points", o.points))?;
                pointwise.push(format!("k^{}:{}/{}", o.exponent, o.violations, o.points));
            }
        }
        lines.push(format!("t={num}/{den} gate {:.2e}, pointwise violations [{}]", p.gate.gradient_sum, pointwise.join(" ")));
    }
    // The gap identity against the radii r_n = (1 + 1/(n+1))/2.
    let rr = radius_discrepancy(10);
    ensure(rr.rows.len() == 11, || "expected rows n = 0..=10".into())?;
    for row in &rr.rows {
        let n = BigInt::from(row.n);
        let r = |k: &BigInt| (BigRational::one() + BigRational::new(BigInt::one(), k + 1)) / BigRational::from_integer(2.into());
        let gap_inv = BigRational::one() / (r(&n) - r(&(&n + 1)));
        let want: BigInt = (&n + 1) * (&n + 2) * 2;
        ensure(gap_inv == BigRational::from_integer(want.clone()), || "oracle gap is off".into())?;
        ensure(row.inv_gap == format!("{want}/1") && !row.inv_gap_matches, || format!("row {}: {}", row.n, row.inv_gap))?;
    }
    lines.push(format!("gap identity off by a factor 2 on all {} rows", rr.rows.len()));
    Ok(lines.join("; "))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC11);
    let phi = phi21_family(1, &q(1, 10_000), 8);
    std::fs::write(path("phi.json"), phi.to_json_string()).unwrap();
    let (eq, _) = random_model_equivalent(1, 3, 3, 6, 0.5, &q(1, 10), &mut rng).map_err(|e| e.to_string())?;
    std::fs::write(path("eq.json"), eq.to_json_string()).unwrap();
    let poly = random_bihomogeneous(2, 3, 2, 0.5, &mut rng);
    std::fs::write(path("poly.json"), serde_json::to_string(&poly.to_json()).unwrap()).unwrap();
    let poly2 = random_bihomogeneous(2, 1, 3, 0.5, &mut rng);
    std::fs::write(path("poly2.json"), serde_json::to_string(&poly2.to_json()).unwrap()).unwrap();

    let (phi_p, eq_p, poly_p, poly2_p, nf_p) = (path("phi.json"), path("eq.json"), path("poly.json"), path("poly2.json"), path("nf.json"));
    let commands: Vec<Vec<&str>> = vec![
        vec!["ingest", "--manifold", &phi_p],
        vec!["decompose", "--poly", &poly_p, "--mode", "type1"],
        vec!["decompose", "--poly", &poly2_p, "--mode", "type2"],
        vec!["normalize", "--manifold", &phi_p, "--tmax", "6", "--out", &nf_p],
        vec!["verify", "--normal-form", &nf_p],
        vec!["theta-step", "--manifold", &eq_p, "--d", "3"],
        vec!["audit", "--manifold", &phi_p, "--d", "3", "--samples", "4000", "--points", "100", "--seed", "7"],
        vec!["iterate", "--manifold", &eq_p, "--stages", "1", "--trunc", "6", "--samples", "512", "--seed", "7"],
        vec!["limit-check", "--m1", "2", "--m2", "2", "--m3", "1"],
    ];
    let run = |args: &[&str]| {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = fischer_nf_cli::run(std::iter::once("fischer-nf").chain(args.iter().copied()), &mut out, &mut err);
        (code, out)
    };
    for args in &commands {
        let (c1, o1) = run(args);
        let (c2, o2) = run(args);
        ensure(c1 == 0 && c2 == 0, || format!("{}: exit codes {c1}, {c2}", args[0]))?;
        ensure(o1 == o2, || format!("{}: reports differ between runs", args[0]))?;
    }
    Ok(format!("{} invocations byte-identical across two runs", commands.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("fischer_axioms", fischer_axioms),
        ("decomposition_soundness", decomposition_soundness),
        ("worked_decomposition_values", worked_values),
        ("normal_form", normal_form),
        ("degree_doubling", degree_doubling),
        ("iteration_mechanism", iteration),
        ("limit_sequence", limit),
        ("estimate_audits", audits),
        ("cli_determinism", cli_determinism),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        match std::panic::catch_unwind(f) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
