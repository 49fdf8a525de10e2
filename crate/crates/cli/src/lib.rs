//! The `fischer-nf` command line, as a library so tests can drive it
//! in-process.
//!
//! Every subcommand prints one JSON report on stdout. The report carries
//! the tool version, an echo of the configuration and, where sampling is
//! involved, the seed. Nothing in a report depends on time or on the
//! output location, so identical inputs give byte-identical reports.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use fischer_nf::algebra::{parse_rational, BiPolynomial, PolynomialJson};
use fischer_nf::estimates::{
    audit_all, limit_check_lemma31, moser_iterate, EstimatesError, IterateOptions, PolydiscParams, Prop44Outcome, DEFAULT_SEED,
};
use fischer_nf::fischer::{decompose_type1, decompose_type2, verify_pythagoras, FischerError};
use fischer_nf::manifold::{bidegree_census, ManifoldError};
use fischer_nf::normalform::{normalize, theta_step, verify_normal_form, NormalFormError, NormalFormJson, NormalFormResult};
use fischer_nf::{DivisorFamily, ManifoldSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    /// An exact check failed.
    CheckFailed = 1,
    Usage = 2,
    /// The instance is outside the scope of the command.
    Refused = 3,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::CheckFailed => "check_failed",
            Status::Usage => "usage_error",
            Status::Refused => "refused",
        }
    }
}

#[derive(Debug)]
struct Failure {
    status: Status,
    message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { status: Status::Usage, message: message.into() }
}

fn refused(message: impl Into<String>) -> Failure {
    Failure { status: Status::Refused, message: message.into() }
}

fn check_failed(message: impl Into<String>) -> Failure {
    Failure { status: Status::CheckFailed, message: message.into() }
}

impl From<ManifoldError> for Failure {
    fn from(e: ManifoldError) -> Self {
        usage(e.to_string())
    }
}

impl From<NormalFormError> for Failure {
    fn from(e: NormalFormError) -> Self {
        match e {
            NormalFormError::Truncation { .. } | NormalFormError::Order { .. } => refused(e.to_string()),
            NormalFormError::Manifold(_) | NormalFormError::Json(_) | NormalFormError::Malformed(_) | NormalFormError::Algebra(_) => {
                usage(e.to_string())
            }
            _ => check_failed(e.to_string()),
        }
    }
}

impl From<EstimatesError> for Failure {
    fn from(e: EstimatesError) -> Self {
        match e {
            EstimatesError::NormalForm(inner) => inner.into(),
            EstimatesError::Radii(_) | EstimatesError::NotHomogeneous => usage(e.to_string()),
            EstimatesError::Domain(_) | EstimatesError::Gate { .. } => refused(e.to_string()),
            _ => check_failed(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "fischer-nf", version, about = "Fischer decompositions and Moser-type normal forms for codimension-four submanifolds W = Z Z̄ᵗ + E(Z, Z̄) of C^{2N+4}")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Type1,
    Type2,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a manifold file and emit its canonical form.
    ///
    /// Reads W = Z Z̄ᵗ + E(Z, Z̄) with E of order at least 3, checks every
    /// entry against its declared bidegree and, for real inputs, the
    /// Hermitian symmetry E^{ab}(Z, Z̄) = conj(E^{ba}(Z, Z̄)).
    Ingest {
        #[arg(long)]
        manifold: PathBuf,
        /// Complete a real input by Hermitian symmetry instead of rejecting gaps.
        #[arg(long)]
        complete_reality: bool,
        /// Write the canonical manifold here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fischer decomposition of one bihomogeneous polynomial.
    ///
    /// type1 (bidegree (m, n), m ≥ n): p = Σ_{|I|=n} Q_I(Z) ⟨l,l⟩^I + R with
    /// every adjoint ⟨l,l⟩^I(D) R = 0. type2 (m < n): p = Σ_j (z_{1j}+z_{2j})
    /// Σ_{|I|=m−1} Q^j_I(Z̄) ⟨l,l⟩^I + R. Quotients have minimum Fischer norm.
    Decompose {
        /// Polynomial JSON in the Z, Z̄ block.
        #[arg(long)]
        poly: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Write the certificate here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partial normal form through weighted degree T.
    ///
    /// Solves F F̄ᵗ + φ'(F, F̄) = G(Z, Z Z̄ᵗ + E) degree by degree with the map
    /// normalized (F = Z + higher z-order terms) and φ' in the Fischer kernel
    /// of the model's forms.
    Normalize {
        #[arg(long)]
        manifold: PathBuf,
        #[arg(long = "tmax")]
        t_max: u32,
        /// Write the normal form (source, transformation, φ') here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One degree-doubling step: order(E) ≥ d implies order(E') ≥ 2d − 2.
    ///
    /// Normalizes through weight 2d − 3, maps M by the truncated
    /// transformation and scans every bidegree of the new perturbation.
    ThetaStep {
        #[arg(long)]
        manifold: PathBuf,
        #[arg(long)]
        d: u32,
        /// Write the transformed manifold here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a normal-form file exactly.
    ///
    /// Checks the map normalization, the column-sum and entrywise Fischer
    /// kernel conditions on φ', reality of the pure terms, and that the
    /// substituted equation vanishes through T.
    Verify {
        #[arg(long = "normal-form")]
        normal_form: PathBuf,
    },
    /// Audit the Cauchy-type estimates on the polydiscs D_r and Δ_r.
    ///
    /// Checks the five bounds on the normalizing map (sup and gradient of F̂
    /// and Ĝ, and the tail E − J^{2d−3}E), the bound on ‖E'‖_{r'} behind the
    /// contraction gate |∇F̂|_ρ + |∇Ĝ|_ρ < ½, the norm bound
    /// ‖S‖² ≤ k!(k+1)^{2N} r^{−2k} ‖S‖²_r on homogeneous parts with its
    /// pointwise companion, and the radius identities.
    Audit {
        #[arg(long)]
        manifold: PathBuf,
        #[arg(long)]
        d: u32,
        /// Outer radius, a rational in (1/2, 1].
        #[arg(long, default_value = "1")]
        r: String,
        /// Inner radius, a rational in (1/2, r).
        #[arg(long, default_value = "11/20")]
        rprime: String,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        /// Rational points for the pointwise check.
        #[arg(long, default_value_t = 128)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Staged iteration M_{n+1} = Ψ_n⁻¹(M_n).
    ///
    /// Certifies d_n = Ord(E_n) ≥ 2ⁿ + 2 exactly at each stage and records
    /// ε_n = ‖E_n‖_{r_n} / (r_n − r_{n+1})² with r_n = (1 + 1/(n+1))/2.
    Iterate {
        #[arg(long)]
        manifold: PathBuf,
        #[arg(long)]
        stages: u32,
        #[arg(long)]
        trunc: u32,
        #[arg(long, default_value_t = 4096)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-stage rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// First n with n^{m3} d_n^{m1} (1 − n^{−m2})^{d_n} below tol, d_n = ⌈C aⁿ⌉ + offset.
    ///
    /// The term must then decrease strictly for 20 more steps.
    LimitCheck {
        #[arg(long, default_value_t = 1)]
        m1: u32,
        #[arg(long, default_value_t = 1)]
        m2: u32,
        #[arg(long, default_value_t = 1)]
        m3: u32,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 2.0)]
        offset: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Outcome {
    status: Status,
    result: Value,
    message: Option<String>,
}

impl Outcome {
    fn new(status: Status, result: impl Serialize) -> Self {
        Outcome { status, result: serde_json::to_value(result).expect("reports serialize"), message: None }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

fn load_manifold(path: &Path) -> Result<ManifoldSpec, Failure> {
    Ok(ManifoldSpec::from_json_str(&read(path)?)?)
}

fn rational(name: &str, s: &str) -> Result<num::BigRational, Failure> {
    parse_rational(s).map_err(|e| usage(format!("--{name}: {e}")))
}

fn ingest(manifold: &Path, complete: bool, out: Option<&Path>) -> Result<Outcome, Failure> {
    let mut m = load_manifold(manifold)?;
    if complete {
        m = m.enforce_reality()?;
    }
    let text = m.to_json_string() + "\n";
    if let Some(p) = out {
        write(p, &text)?;
    }
    let census: Vec<Value> =
        bidegree_census(m.e()).into_iter().map(|((a, b), bd)| json!({ "entry": [a, b], "bidegrees": bd })).collect();
    Ok(Outcome::new(
        Status::Ok,
        json!({
            "n": m.n(),
            "d_max": m.d_max(),
            "real": m.is_real_flagged(),
            "satisfies_reality": m.satisfies_reality(),
            "order": m.order(),
            "census": census,
            "manifold": m.to_json(),
        }),
    ))
}

fn decompose(poly: &Path, mode: ModeArg, out: Option<&Path>) -> Result<Outcome, Failure> {
    let j: PolynomialJson = serde_json::from_str(&read(poly)?).map_err(|e| usage(format!("invalid polynomial JSON: {e}")))?;
    let p = BiPolynomial::from_json(&j).map_err(|e| usage(e.to_string()))?;
    let Some((m, n)) = p.bidegree() else {
        return Err(if p.is_zero() { usage("the zero polynomial has no bidegree") } else { usage("input is not bihomogeneous") });
    };
    let cert = match mode {
        ModeArg::Type1 => decompose_type1(&p, &DivisorFamily::type1(p.n(), n), None),
        ModeArg::Type2 => decompose_type2(&p, &DivisorFamily::type2(p.n(), m.saturating_sub(1)), None),
    }
    .map_err(|e| match e {
        FischerError::BidegreeOutOfRange { .. } => refused(e.to_string()),
        _ => usage(e.to_string()),
    })?;
    let cj = cert.to_json();
    if let Some(path) = out {
        write(path, &pretty(&cj))?;
    }
    let reconstruction = cert.reconstruction_holds();
    let kernel = cert.kernel_holds();
    let pythagoras = verify_pythagoras(&p, &cert.span_part(), &cert.remainder);
    let ok = reconstruction && kernel && pythagoras;
    let mut o = Outcome::new(
        if ok { Status::Ok } else { Status::CheckFailed },
        json!({
            "mode": mode,
            "bidegree": [m, n],
            "reconstruction": reconstruction,
            "kernel": kernel,
            "pythagoras": pythagoras,
            "certificate": cj,
        }),
    );
    if !ok {
        o.message = Some("decomposition certificate failed to verify".into());
    }
    Ok(o)
}

fn verification(r: &NormalFormResult) -> (bool, Value, Option<String>) {
    let report = verify_normal_form(r);
    let failures: Vec<String> = report
        .failures()
        .map(|c| {
            let mut s = c.name.clone();
            if let Some([m, n]) = c.bidegree {
                s += &format!(" at bidegree ({m},{n})");
            }
            if let Some(slot) = &c.slot {
                s += &format!(", {slot}");
            }
            if let Some(d) = &c.detail {
                s += &format!(": {d}");
            }
            s
        })
        .collect();
    let passed = report.passed();
    let message = (!passed).then(|| format!("failed checks: {}", failures.join("; ")));
    (passed, json!({ "passed": passed, "failures": failures, "checks": report.checks }), message)
}

fn normalize_cmd(manifold: &Path, t_max: u32, out: Option<&Path>) -> Result<Outcome, Failure> {
    let m = load_manifold(manifold)?;
    let r = normalize(&m, t_max)?;
    let nf: NormalFormJson = r.to_json();
    if let Some(p) = out {
        write(p, &pretty(&nf))?;
    }
    let (passed, verify, message) = verification(&r);
    let mut o = Outcome::new(
        if passed { Status::Ok } else { Status::CheckFailed },
        json!({
            "t_max": t_max,
            "identity": r.transform.is_identity(),
            "certificates": r.certificates.len(),
            "verification": verify,
            "normal_form": nf,
        }),
    );
    o.message = message;
    Ok(o)
}

fn theta(manifold: &Path, d: u32, out: Option<&Path>) -> Result<Outcome, Failure> {
    if d < 3 {
        return Err(usage("--d must be at least 3"));
    }
    let m = load_manifold(manifold)?;
    let step = theta_step(&m, d)?;
    if let Some(p) = out {
        write(p, &(step.manifold.to_json_string() + "\n"))?;
    }
    Ok(Outcome::new(
        Status::Ok,
        json!({
            "d": d,
            "required_order": 2 * d - 2,
            "order": step.order,
            "transform": step.transform.to_json(),
            "manifold": step.manifold.to_json(),
        }),
    ))
}

fn verify(path: &Path) -> Result<Outcome, Failure> {
    let j: NormalFormJson = serde_json::from_str(&read(path)?).map_err(|e| usage(format!("invalid normal-form JSON: {e}")))?;
    let r = NormalFormResult::from_json(&j)?;
    let (passed, report, message) = verification(&r);
    let mut o = Outcome::new(if passed { Status::Ok } else { Status::CheckFailed }, report);
    o.message = message;
    Ok(o)
}

#[allow(clippy::too_many_arguments)]
fn audit(manifold: &Path, d: u32, r: &str, rprime: &str, samples: usize, points: usize, seed: u64) -> Result<Outcome, Failure> {
    if samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let params = PolydiscParams::from_radii(rational("r", r)?, rational("rprime", rprime)?)?;
    let m = load_manifold(manifold)?;
    let rep = audit_all(&m, &params, d, samples, points, seed)?;
    let status = if rep.violations() > 0 {
        Status::CheckFailed
    } else if matches!(rep.prop44, Prop44Outcome::Refused { .. }) {
        Status::Refused
    } else {
        Status::Ok
    };
    let mut o = Outcome::new(status, &rep);
    o.message = match status {
        Status::CheckFailed => Some(format!("{} sampled violation(s)", rep.violations())),
        Status::Refused => Some("contraction gate fails; the bound on E' was not audited".into()),
        _ => None,
    };
    Ok(o)
}

fn iterate(manifold: &Path, stages: u32, trunc: u32, samples: usize, seed: u64, csv: Option<&Path>) -> Result<Outcome, Failure> {
    let m = load_manifold(manifold)?;
    let trace = moser_iterate(&m, stages, trunc, IterateOptions { samples: samples.max(1), seed })?;
    if let Some(p) = csv {
        write(p, &trace.to_csv())?;
    }
    let mut o = Outcome::new(if trace.order_chain_holds { Status::Ok } else { Status::CheckFailed }, &trace);
    if !trace.order_chain_holds {
        o.message = Some("order chain d_n >= 2^n + 2 broken".into());
    }
    Ok(o)
}

fn limit(m: (u32, u32, u32), c: f64, a: f64, offset: f64, tol: f64) -> Result<Outcome, Failure> {
    match limit_check_lemma31(m, c, a, offset, tol) {
        Ok(l) => Ok(Outcome::new(Status::Ok, l)),
        Err(EstimatesError::Domain(s)) => Err(usage(s)),
        Err(e) => Err(e.into()),
    }
}

/// Runs one command line; returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { Status::Usage as i32 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (name, config, seed, out) = describe(&cli.command);
    let outcome = match &cli.command {
        Command::Ingest { manifold, complete_reality, out } => ingest(manifold, *complete_reality, out.as_deref()),
        Command::Decompose { poly, mode, out } => decompose(poly, *mode, out.as_deref()),
        Command::Normalize { manifold, t_max, out } => normalize_cmd(manifold, *t_max, out.as_deref()),
        Command::ThetaStep { manifold, d, out } => theta(manifold, *d, out.as_deref()),
        Command::Verify { normal_form } => verify(normal_form),
        Command::Audit { manifold, d, r, rprime, samples, points, seed, .. } => audit(manifold, *d, r, rprime, *samples, *points, *seed),
        Command::Iterate { manifold, stages, trunc, samples, seed, csv, .. } => {
            iterate(manifold, *stages, *trunc, *samples, *seed, csv.as_deref())
        }
        Command::LimitCheck { m1, m2, m3, c, a, offset, tol, .. } => limit((*m1, *m2, *m3), *c, *a, *offset, *tol),
    };
    let (status, result, message) = match outcome {
        Ok(o) => (o.status, o.result, o.message),
        Err(f) if f.status == Status::Usage => {
            let _ = writeln!(stderr, "error: {f}");
            return Status::Usage as i32;
        }
        Err(f) => (f.status, Value::Null, Some(f.message)),
    };
    let mut report = json!({
        "tool": "fischer-nf",
        "version": VERSION,
        "command": name,
        "config": config,
        "status": status.label(),
    });
    if let Some(s) = seed {
        report["seed"] = json!(s);
    }
    if let Some(m) = &message {
        report["message"] = json!(m);
    }
    report["result"] = result;
    let text = pretty(&report);
    if let Some(p) = out {
        if let Err(f) = write(&p, &text) {
            let _ = writeln!(stderr, "error: {f}");
            return Status::Usage as i32;
        }
    }
    let _ = stdout.write_all(text.as_bytes());
    if let Some(m) = message {
        let _ = writeln!(stderr, "{}: {m}", status.label());
    }
    status as i32
}

/// Command name, config echo, seed, and the report path for commands whose
/// `--out` is the report itself. Output paths stay out of the echo so the
/// report does not depend on where it is written.
fn describe(c: &Command) -> (&'static str, Value, Option<u64>, Option<PathBuf>) {
    let p = |x: &Path| x.display().to_string();
    match c {
        Command::Ingest { manifold, complete_reality, .. } => {
            ("ingest", json!({ "manifold": p(manifold), "complete_reality": complete_reality }), None, None)
        }
        Command::Decompose { poly, mode, .. } => ("decompose", json!({ "poly": p(poly), "mode": mode }), None, None),
        Command::Normalize { manifold, t_max, .. } => ("normalize", json!({ "manifold": p(manifold), "t_max": t_max }), None, None),
        Command::ThetaStep { manifold, d, .. } => ("theta-step", json!({ "manifold": p(manifold), "d": d }), None, None),
        Command::Verify { normal_form } => ("verify", json!({ "normal_form": p(normal_form) }), None, None),
        Command::Audit { manifold, d, r, rprime, samples, points, seed, out } => (
            "audit",
            json!({ "manifold": p(manifold), "d": d, "r": r, "rprime": rprime, "samples": samples, "points": points }),
            Some(*seed),
            out.clone(),
        ),
        Command::Iterate { manifold, stages, trunc, samples, seed, out, .. } => (
            "iterate",
            json!({ "manifold": p(manifold), "stages": stages, "trunc": trunc, "samples": samples }),
            Some(*seed),
            out.clone(),
        ),
        Command::LimitCheck { m1, m2, m3, c, a, offset, tol, out } => (
            "limit-check",
            json!({ "m1": m1, "m2": m2, "m3": m3, "C": c, "a": a, "offset": offset, "tol": tol }),
            None,
            out.clone(),
        ),
    }
}
