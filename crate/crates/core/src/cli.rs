//! Command-line pipeline: `check | kolmogorov | representation |
//! counterexample | sharp`.
//!
//! Exit codes: 0 all checks pass, 1 a verification failed, 2 usage or
//! config error, 3 numerical non-convergence.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::OperatorConfig;
use crate::dilation::{automorphism_check, homogeneity_degree, sharp_exponent};
use crate::error::{Error, Result};
use crate::expr::{rat, to_f64};
use crate::fields::{hormander_check, sample_points, DEFAULT_DEPTH};
use crate::group::{invariance_residual, monomial_basis, unimodularity_check, verify_axioms};
use crate::kolmogorov::{classify, gram, GRAM_TIMES};
use crate::lens::{
    default_regularization, extract_measures, representation_check, LensDomain, DEFAULT_H_2D, DEFAULT_H_3D,
    REPRESENTATION_TOL, ROUNDOFF_FLOOR,
};
use crate::liouville::{counterexample_scan, AnnulusConfig, Bump, Verdict};

/// Default tolerance on `|measured − theoretical|` annulus ratios.
pub const RATIO_TOL: f64 = 0.05;
/// Allowed deviation of the total harmonic mass from one.
pub const MASS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "hypoliouville", version, about = "Verify Liouville-type hypotheses for hypoelliptic operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Pass tolerance: representation residual, or annulus-ratio deviation.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Grid resolution N for the lens solver (h = 1/N).
    #[arg(long, global = true)]
    pub grid: Option<u32>,
    #[arg(long, default_value_t = 1, global = true)]
    pub seed: u64,
    /// Bracket nesting depth for the Hörmander test.
    #[arg(long, default_value_t = DEFAULT_DEPTH, global = true)]
    pub depth: usize,
    /// Number of dyadic annuli K.
    #[arg(long, default_value_t = 8, global = true)]
    pub annuli: usize,
    /// Ratio M between consecutive annulus radii.
    #[arg(long, default_value_t = 2.0, global = true)]
    pub ratio: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural checks: A, Hörmander rank, group law, invariance, dilations.
    Check {
        config: PathBuf,
        /// Random sample points for pointwise tests.
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Classify a constant-coefficient Kolmogorov operator.
    Kolmogorov { config: PathBuf },
    /// Discrete representation measures on the lens domain.
    Representation {
        config: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        /// Elliptic regularization ε′ (default: 0 for elliptic A, 0.05 otherwise).
        #[arg(long)]
        reg: Option<f64>,
        /// Write the measures as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Annulus-ratio test of the sharpness counterexample `u = −Γ∗f`.
    Counterexample {
        config: PathBuf,
        /// Exponents to test (default: p* − 1/2, p*, p* + 1/2).
        #[arg(long = "p", num_args = 1..)]
        p: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Radius of the bump source.
        #[arg(long, default_value_t = 0.5)]
        support: f64,
    },
    /// Homogeneous dimension Q and critical exponent p*.
    Sharp { config: PathBuf },
}

/// Result of one command.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub passed: bool,
    pub json: Value,
    pub text: String,
}

#[derive(Clone, Debug, Serialize)]
struct Line {
    name: String,
    passed: bool,
    /// Whether the outcome enters the exit code.
    counted: bool,
    detail: String,
}

impl Line {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Line { name: name.into(), passed, counted: true, detail: detail.into() }
    }

    fn info(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Line { counted: false, ..Line::new(name, passed, detail) }
    }

    fn render(&self) -> String {
        let tag = match (self.passed, self.counted) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FLAG",
        };
        format!("{tag}  {:<28} {}", self.name, self.detail)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence(_) => 3,
        Error::NotMMatrix(_) => 1,
        _ => 2,
    }
}

/// Parses `args`, runs the command and writes the report. Returns the exit code.
pub fn main_with(args: impl IntoIterator<Item = impl Into<OsString> + Clone>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match run(&cli) {
        Ok(o) => {
            let body = match cli.format {
                Format::Json => serde_json::to_string_pretty(&o.json).expect("reports serialize"),
                Format::Text => o.text.trim_end().to_string(),
            };
            let _ = writeln!(out, "{body}");
            i32::from(!o.passed)
        }
        Err(e) => {
            let code = exit_code(&e);
            if cli.format == Format::Json {
                let _ = writeln!(out, "{}", json!({ "error": e.to_string(), "exit_code": code }));
            }
            let _ = writeln!(err, "error: {e}");
            code
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Check { config, points } => cmd_check(&OperatorConfig::load(config)?, cli, *points),
        Command::Kolmogorov { config } => cmd_kolmogorov(&OperatorConfig::load(config)?),
        Command::Representation { config, radius, eps, reg, csv } => {
            cmd_representation(&OperatorConfig::load(config)?, cli, *radius, *eps, *reg, csv.as_ref())
        }
        Command::Counterexample { config, p, samples, support } => {
            cmd_counterexample(&OperatorConfig::load(config)?, cli, p, *samples, *support)
        }
        Command::Sharp { config } => cmd_sharp(&OperatorConfig::load(config)?),
    }
}

fn finish(name: &str, lines: Vec<Line>, mut json: Value, notes: Vec<String>) -> Outcome {
    let passed = lines.iter().all(|l| l.passed || !l.counted);
    let mut text = format!("{name}\n");
    for l in &lines {
        text.push_str(&l.render());
        text.push('\n');
    }
    for n in &notes {
        text.push_str(&format!("note: {n}\n"));
    }
    text.push_str(if passed { "result: pass\n" } else { "result: FAIL\n" });
    json["checks"] = serde_json::to_value(&lines).expect("serializable");
    json["notes"] = json!(notes);
    json["passed"] = json!(passed);
    Outcome { passed, json, text }
}

pub fn cmd_check(c: &OperatorConfig, cli: &Cli, points: usize) -> Result<Outcome> {
    let l = &c.operator;
    let n = l.dim();
    let pts = sample_points(n, points, 2.0, cli.seed);
    let mut lines = vec![Line::new("A symmetric", true, "exact at parse time")];
    let mut notes = Vec::new();
    let mut json = json!({ "name": c.name, "dimension": n });

    let psd = l.check_psd(&pts);
    lines.push(Line::new("A positive semidefinite", psd.passed, format!("min eigenvalue {:.3e}", psd.min_eigenvalue)));
    let horm = hormander_check(&l.hormander_fields(), &pts, cli.depth)?;
    let min_rank = horm.ranks.iter().copied().min().unwrap_or(0);
    lines.push(Line::new(
        "Hormander rank",
        horm.full_rank,
        format!("min rank {min_rank} of {n} at {} points, depth {}", pts.len(), horm.depth_used),
    ));
    notes.push(horm.note.clone());
    json["psd"] = serde_json::to_value(&psd).expect("serializable");
    json["hormander"] = serde_json::to_value(&horm).expect("serializable");

    match &c.group {
        Some(g) => {
            let axioms = verify_axioms(g)?;
            let worst = axioms.checks.iter().map(|k| k.residual).fold(0.0, f64::max);
            lines.push(Line::new("group axioms", axioms.passed, format!("{} checks, residual {worst:.1e}", axioms.checks.len())));
            let inv = invariance_residual(l, g, &monomial_basis(n, 3))?;
            lines.push(Line::new(
                "left invariance",
                inv.passed,
                format!("{:?} residual {:.1e} on {} monomials", inv.method, inv.residual, inv.basis.len()),
            ));
            let uni = unimodularity_check(g)?;
            lines.push(Line::new(
                "unimodular",
                uni.passed,
                format!("left {:.1e}, right {:.1e}", uni.left.residual, uni.right.residual),
            ));
            notes.push(axioms.assumption.clone());
            json["axioms"] = serde_json::to_value(&axioms).expect("serializable");
            json["invariance"] = serde_json::to_value(&inv).expect("serializable");
            json["unimodular"] = serde_json::to_value(&uni).expect("serializable");
        }
        None => notes.push("group checks skipped: no group law supplied".into()),
    }

    match &c.dilation {
        Some(d) => {
            if let Some(g) = &c.group {
                let auto = automorphism_check(d, g)?;
                lines.push(Line::new("dilation automorphism", auto.passed, format!("{:?} residual {:.1e}", auto.method, auto.residual)));
                json["automorphism"] = serde_json::to_value(&auto).expect("serializable");
            }
            let hom = homogeneity_degree(l, d)?;
            let two = rat(2, 1);
            let degree = hom.degree.as_ref().map_or("none".to_string(), |r| r.to_string());
            lines.push(Line::new("homogeneous of degree 2", hom.degree.as_ref() == Some(&two), format!("degree {degree}")));
            json["homogeneity"] = serde_json::to_value(&hom).expect("serializable");
            json["Q"] = json!(d.q().to_string());
            json["p_star"] = json!(sharp_exponent(d.q()).ok().map(|p| p.to_string()));
        }
        None => notes.push("dilation checks skipped: no dilation supplied".into()),
    }

    if let Some(spec) = &c.kolmogorov {
        let k = classify(spec)?;
        lines.push(Line::new("hypoelliptic (Kalman, C(t))", k.hypoelliptic, format!("Kalman rank {}", k.kalman_rank)));
        lines.push(Line::new("unimodular (trace B = 0)", k.unimodular, format!("trace B = {}", k.trace_b)));
        lines.push(Line::info(
            "Linf_liouville",
            k.linf_liouville,
            format!("max Re eig(B) = {:.6}", k.eigenvalues.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max)),
        ));
        notes.extend(k.notes.iter().cloned());
        json["classification"] = serde_json::to_value(&k).expect("serializable");
    }
    let title = format!("check {}", c.name);
    Ok(finish(&title, lines, json, notes))
}

pub fn cmd_kolmogorov(c: &OperatorConfig) -> Result<Outcome> {
    let spec = c.kolmogorov.as_ref().ok_or_else(|| Error::Config("config has no [kolmogorov] block".into()))?;
    let k = classify(spec)?;
    let grams: Vec<Value> = GRAM_TIMES
        .iter()
        .map(|&t| -> Result<Value> {
            let m = gram(spec, t)?;
            let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
            Ok(json!({ "t": t, "C": rows }))
        })
        .collect::<Result<_>>()?;
    let mut json = serde_json::to_value(&k).expect("serializable");
    json["gram"] = json!(grams);
    json["name"] = json!(c.name);
    let eig: Vec<String> = k.eigenvalues.iter().map(|(re, im)| format!("{re:.6}{im:+.6}i")).collect();
    let lines = vec![
        Line::new("hypoelliptic", k.hypoelliptic, format!("Kalman rank {} of {}", k.kalman_rank, spec.n())),
        Line::info("unimodular", k.unimodular, format!("trace B = {}", k.trace_b)),
        Line::info("Linf_liouville", k.linf_liouville, format!("eigenvalues of B: {}", eig.join(", "))),
    ];
    Ok(finish(&format!("kolmogorov {}", c.name), lines, json, k.notes.clone()))
}

pub fn cmd_representation(
    c: &OperatorConfig,
    cli: &Cli,
    radius: f64,
    eps: f64,
    reg: Option<f64>,
    csv: Option<&PathBuf>,
) -> Result<Outcome> {
    let l = &c.operator;
    let n = l.dim();
    let dom = LensDomain::new(n, radius, eps)?;
    let h = match cli.grid {
        Some(0) => return Err(Error::Config("--grid must be positive".into())),
        Some(g) => 1.0 / g as f64,
        None if n <= 2 => DEFAULT_H_2D,
        None => DEFAULT_H_3D,
    };
    let reg = reg.unwrap_or_else(|| default_regularization(l));
    let tol = cli.tol.unwrap_or(REPRESENTATION_TOL);
    let m = extract_measures(l, &dom, h, reg)?;
    if let Some(path) = csv {
        m.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))?;
    }
    let names = c.var_names();
    let mut table = Vec::new();
    let mut worst: f64 = 0.0;
    for u in monomial_basis(n, 3) {
        let r = representation_check(l, &m, &u)?;
        worst = worst.max(r.abs());
        table.push(json!({ "u": u.render(&names), "residual": r }));
    }
    let s = m.summary();
    let lines = vec![
        Line::new("total mass of mu", (s.mu_total - 1.0).abs() <= MASS_TOL, format!("{:.12}", s.mu_total)),
        Line::new("measures nonnegative", s.nonnegative, format!("min mu {:.2e}, min nu {:.2e}", s.min_mu, s.min_nu)),
        Line::new("representation residual", worst < tol, format!("worst {worst:.3e} < {tol:.1e} (floor {ROUNDOFF_FLOOR:.0e})")),
    ];
    let json = json!({
        "name": c.name,
        "h": h,
        "reg": reg,
        "radius": radius,
        "eps": eps,
        "summary": s,
        "upwinded": m.upwinded,
        "solver_relative_residual": m.relative_residual,
        "residuals": table,
    });
    let mut text_lines = lines;
    for row in &table {
        text_lines.push(Line::info(
            &format!("  u = {}", row["u"].as_str().unwrap_or("")),
            row["residual"].as_f64().is_some_and(|r| r.abs() < tol),
            format!("{:+.3e}", row["residual"].as_f64().unwrap_or(f64::NAN)),
        ));
    }
    let label = format!("representation {} (h = {h}, reg = {reg}, {} interior nodes)", c.name, s.interior_nodes);
    Ok(finish(&label, text_lines, json, vec![m.note.clone()]))
}

pub fn cmd_counterexample(c: &OperatorConfig, cli: &Cli, p: &[f64], samples: usize, support: f64) -> Result<Outcome> {
    let gamma = c.fundamental_solution()?;
    let ps = if p.is_empty() {
        let s = to_f64(&gamma.p_star());
        vec![s - 0.5, s, s + 0.5]
    } else {
        p.to_vec()
    };
    let cfg = AnnulusConfig { annuli: cli.annuli, ratio: cli.ratio, samples, seed: cli.seed };
    let f = Bump::unit_mass(gamma.dim(), support);
    let reports = counterexample_scan(&gamma, &f, &ps, &cfg)?;
    let tol = cli.tol.unwrap_or(RATIO_TOL);
    let mut lines = Vec::new();
    for r in &reports {
        let expected = Verdict::from_ratio(r.theoretical_ratio);
        lines.push(Line::new(
            &format!("p = {}", r.p),
            (r.measured_ratio - r.theoretical_ratio).abs() <= tol && r.verdict == expected,
            format!("ratio {:.4} vs {:.4}, verdict {:?}", r.measured_ratio, r.theoretical_ratio, r.verdict),
        ));
    }
    let signs = &reports[0].signs;
    lines.push(Line::new("u <= 0 at sampled points", signs.u_nonpositive, format!("max u {:.3e}", signs.max_u)));
    lines.push(Line::new("L u = f >= 0", signs.lu_passed, format!("relative defect {:.2e}", signs.lu_defect)));
    let passed = lines.iter().all(|l| l.passed);
    let json = if reports.len() == 1 {
        serde_json::to_value(&reports[0]).expect("serializable")
    } else {
        serde_json::to_value(&reports).expect("serializable")
    };
    let mut text = format!("counterexample {} (Q = {}, p* = {}, M = {}, K = {})\n", c.name, reports[0].q, reports[0].p_star, cfg.ratio, cfg.annuli);
    for l in &lines {
        text.push_str(&l.render());
        text.push('\n');
    }
    text.push_str(if passed { "result: pass\n" } else { "result: FAIL\n" });
    Ok(Outcome { passed, json, text })
}

pub fn cmd_sharp(c: &OperatorConfig) -> Result<Outcome> {
    let d = c.dilation.as_ref().ok_or_else(|| Error::Config("config has no [dilation] block".into()))?;
    let q = d.q();
    let p = sharp_exponent(q).ok();
    let sigma: Vec<String> = d.sigma().iter().map(|s| s.to_string()).collect();
    let json = json!({
        "name": c.name,
        "sigma": sigma,
        "Q": q.to_string(),
        "p_star": p.as_ref().map(|p| p.to_string()),
        "passed": p.is_some(),
    });
    let text = match &p {
        Some(p) => format!("{}: sigma = ({}), Q = {q}, p* = {p}\n", c.name, sigma.join(", ")),
        None => format!("{}: sigma = ({}), Q = {q}; no critical exponent for Q <= 2\n", c.name, sigma.join(", ")),
    };
    Ok(Outcome { passed: p.is_some(), json, text })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kinds() {
        assert_eq!(exit_code(&Error::NonConvergence("x".into())), 3);
        assert_eq!(exit_code(&Error::NotMMatrix("x".into())), 1);
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Parse { pos: 0, msg: "x".into() }), 2);
    }

    #[test]
    fn informational_lines_do_not_fail() {
        let lines = vec![Line::new("a", true, ""), Line::info("b", false, "")];
        let o = finish("t", lines, json!({}), vec![]);
        assert!(o.passed);
        assert!(o.text.contains("FLAG  b"));
        let o = finish("t", vec![Line::new("c", false, "")], json!({}), vec![]);
        assert!(!o.passed);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["hl", "--format", "json", "--annuli", "6", "counterexample", "f.toml", "--p", "2", "3"]).unwrap();
        assert_eq!(cli.format, Format::Json);
        assert_eq!(cli.annuli, 6);
        match cli.command {
            Command::Counterexample { p, .. } => assert_eq!(p, vec![2.0, 3.0]),
            _ => panic!(),
        }
        assert!(Cli::try_parse_from(["hl", "--format", "yaml", "sharp", "f.toml"]).is_err());
    }
}
