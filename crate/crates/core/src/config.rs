//! TOML operator descriptions.
//!
//! ```toml
//! name = "heisenberg"
//! dimension = 3
//! kernel = "heisenberg"
//!
//! [operator]
//! A = [["1", "0", "-x2/2"], ["0", "1", "x1/2"], ["-x2/2", "x1/2", "(x1^2 + x2^2)/4"]]
//! b = [0, 0, 0]
//!
//! [group]
//! compose = ["x1 + y1", "x2 + y2", "x3 + y3 + (x1*y2 - x2*y1)/2"]
//! inverse = ["-x1", "-x2", "-x3"]
//!
//! [dilation]
//! sigma = [1, 1, 2]
//! ```
//!
//! With `time_variable = true` the entries above describe the spatial part
//! on `R^n`; the operator becomes `L − ∂_t` on `R^{n+1}` (variable `t`), the
//! law gains an additive last coordinate and the dilation gains exponent 2.
//! A `[kolmogorov]` block with constant matrices `A`, `B` replaces
//! `[operator]` and `[group]`; its `[dilation]` lists all `n + 1` exponents.

use std::path::Path;

use serde::Deserialize;

use crate::dilation::Dilation;
use crate::error::{Error, Result};
use crate::expr::{equivalent, parse_rational, parse_with, Expr, Rational, VarNames};
use crate::fields::Operator;
use crate::group::GroupLaw;
use crate::kolmogorov::{build_group, build_operator, KolmogorovSpec, LawKind};
use crate::liouville::{gamma_euclidean, gamma_heisenberg, FundamentalSolution};

/// A number or an expression string.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Entry {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Entry {
    fn text(&self) -> String {
        match self {
            Entry::Int(i) => i.to_string(),
            Entry::Float(f) => format!("{f:?}"),
            Entry::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    name: Option<String>,
    dimension: usize,
    #[serde(default)]
    time_variable: bool,
    kernel: Option<String>,
    operator: Option<RawOperator>,
    group: Option<RawGroup>,
    dilation: Option<RawDilation>,
    kolmogorov: Option<RawKolmogorov>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    #[serde(rename = "A")]
    a: Vec<Vec<Entry>>,
    b: Option<Vec<Entry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    compose: Vec<Entry>,
    inverse: Option<Vec<Entry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDilation {
    sigma: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKolmogorov {
    #[serde(rename = "A")]
    a: Vec<Vec<Entry>>,
    #[serde(rename = "B")]
    b: Vec<Vec<Entry>>,
}

/// Built-in fundamental solutions available for convolution experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelChoice {
    Euclidean,
    Heisenberg,
}

/// A parsed and validated configuration.
#[derive(Debug)]
pub struct OperatorConfig {
    pub name: String,
    /// Spatial dimension `n`.
    pub dimension: usize,
    pub time_variable: bool,
    pub operator: Operator,
    pub group: Option<GroupLaw>,
    /// Representation of a Kolmogorov law; `None` for user-supplied laws.
    pub law_kind: Option<LawKind>,
    pub dilation: Option<Dilation>,
    pub kolmogorov: Option<KolmogorovSpec>,
    pub kernel: Option<KernelChoice>,
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn exprs(entries: &[Entry], names: &VarNames, what: &str) -> Result<Vec<Expr>> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| parse_with(&e.text(), names).map_err(|err| cfg(format!("{what}[{}]: {err}", i + 1))))
        .collect()
}

fn rationals(entries: &[Entry], what: &str) -> Result<Vec<Rational>> {
    entries
        .iter()
        .map(|e| parse_rational(&e.text()).ok_or_else(|| cfg(format!("{what}: `{}` is not a rational number", e.text()))))
        .collect()
}

fn matrix(rows: &[Vec<Entry>], n: usize, what: &str) -> Result<Vec<Vec<Rational>>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(cfg(format!("{what} must be {n}x{n}")));
    }
    rows.iter().map(|r| rationals(r, what)).collect()
}

impl OperatorConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: Raw = toml::from_str(text).map_err(|e| cfg(e.to_string()))?;
        let n = raw.dimension;
        if n == 0 {
            return Err(cfg("dimension must be positive"));
        }
        let kernel = match raw.kernel.as_deref() {
            None => None,
            Some("euclidean") => Some(KernelChoice::Euclidean),
            Some("heisenberg") => Some(KernelChoice::Heisenberg),
            Some(other) => return Err(cfg(format!("unknown kernel `{other}` (expected euclidean or heisenberg)"))),
        };
        let name = raw.name.clone().unwrap_or_else(|| "operator".into());
        let config = match (&raw.operator, &raw.kolmogorov) {
            (Some(_), Some(_)) => return Err(cfg("give either [operator] or [kolmogorov], not both")),
            (None, None) => return Err(cfg("missing [operator] or [kolmogorov] section")),
            (None, Some(k)) => Self::kolmogorov(&raw, k, name, kernel)?,
            (Some(op), None) => Self::explicit(&raw, op, name, kernel)?,
        };
        config.check_kernel()?;
        Ok(config)
    }

    fn explicit(raw: &Raw, op: &RawOperator, name: String, kernel: Option<KernelChoice>) -> Result<Self> {
        let n = raw.dimension;
        let time = raw.time_variable;
        let names = if time { VarNames::with_time(n) } else { VarNames::default_for(n) };
        if op.a.len() != n || op.a.iter().any(|r| r.len() != n) {
            return Err(cfg(format!("operator.A must be {n}x{n}")));
        }
        let mut a: Vec<Vec<Expr>> = op.a.iter().map(|r| exprs(r, &names, "operator.A")).collect::<Result<_>>()?;
        let mut b = match &op.b {
            Some(b) if b.len() != n => return Err(cfg(format!("operator.b must have {n} entries"))),
            Some(b) => exprs(b, &names, "operator.b")?,
            None => vec![Expr::zero(); n],
        };
        if time {
            a.iter_mut().for_each(|r| r.push(Expr::zero()));
            a.push(vec![Expr::zero(); n + 1]);
            b.push(Expr::zero());
        }
        let operator = Operator::new(a, b, time.then_some(n)).map_err(|e| cfg(format!("operator: {e}")))?;
        let group = match &raw.group {
            Some(g) => {
                let pair = VarNames::pair(n, false);
                let compose = exprs(&g.compose, &pair, "group.compose")?;
                let inverse = match &g.inverse {
                    Some(inv) => Some(exprs(inv, &VarNames::default_for(n), "group.inverse")?),
                    None => None,
                };
                let law = GroupLaw::symbolic(n, compose, inverse).map_err(|e| cfg(format!("group: {e}")))?;
                Some(if time { law.with_time()? } else { law })
            }
            None => None,
        };
        let dilation = match &raw.dilation {
            Some(d) => {
                let sigma = rationals(&d.sigma, "dilation.sigma")?;
                if sigma.len() != n {
                    return Err(cfg(format!("dilation.sigma must have {n} entries")));
                }
                let d = Dilation::from_coordinates(sigma).map_err(|e| cfg(format!("dilation: {e}")))?;
                Some(if time { d.heat_lift() } else { d })
            }
            None => None,
        };
        Ok(OperatorConfig {
            name,
            dimension: n,
            time_variable: time,
            operator,
            group,
            law_kind: None,
            dilation,
            kolmogorov: None,
            kernel,
        })
    }

    fn kolmogorov(raw: &Raw, k: &RawKolmogorov, name: String, kernel: Option<KernelChoice>) -> Result<Self> {
        let n = raw.dimension;
        if raw.group.is_some() {
            return Err(cfg("[group] is derived from [kolmogorov] and must not be given"));
        }
        let spec = KolmogorovSpec::new(matrix(&k.a, n, "kolmogorov.A")?, matrix(&k.b, n, "kolmogorov.B")?)
            .map_err(|e| cfg(format!("kolmogorov: {e}")))?;
        let built = build_group(&spec);
        let dilation = match &raw.dilation {
            Some(d) => {
                let sigma = rationals(&d.sigma, "dilation.sigma")?;
                if sigma.len() != n + 1 {
                    return Err(cfg(format!("dilation.sigma must list all {} coordinates, time last", n + 1)));
                }
                Some(Dilation::from_coordinates(sigma).map_err(|e| cfg(format!("dilation: {e}")))?)
            }
            None => None,
        };
        Ok(OperatorConfig {
            name,
            dimension: n,
            time_variable: true,
            operator: build_operator(&spec),
            group: Some(built.law),
            law_kind: Some(built.kind),
            dilation,
            kolmogorov: Some(spec),
            kernel,
        })
    }

    /// Variable names of the operator's coordinates.
    pub fn var_names(&self) -> VarNames {
        if self.time_variable {
            VarNames::with_time(self.dimension)
        } else {
            VarNames::default_for(self.dimension)
        }
    }

    fn builtin_operator(&self) -> Option<Operator> {
        match self.kernel? {
            KernelChoice::Euclidean => Some(Operator::laplacian(self.dimension)),
            KernelChoice::Heisenberg => Some(crate::fields::heisenberg_sublaplacian()),
        }
    }

    fn check_kernel(&self) -> Result<()> {
        let Some(reference) = self.builtin_operator() else { return Ok(()) };
        let same = !self.time_variable
            && reference.dim() == self.operator.dim()
            && reference
                .a()
                .iter()
                .flatten()
                .zip(self.operator.a().iter().flatten())
                .chain(reference.b().iter().zip(self.operator.b()))
                .all(|(x, y)| equivalent(x, y, reference.dim()));
        if same {
            Ok(())
        } else {
            Err(cfg("the built-in kernel belongs to a different operator than [operator]"))
        }
    }

    /// The calibrated fundamental solution named by `kernel`.
    pub fn fundamental_solution(&self) -> Result<FundamentalSolution> {
        match self.kernel {
            Some(KernelChoice::Euclidean) => gamma_euclidean(self.dimension),
            Some(KernelChoice::Heisenberg) => gamma_heisenberg(),
            None => Err(cfg("no `kernel` given; only the euclidean and heisenberg kernels are built in")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAT: &str = r#"
        dimension = 1
        time_variable = true
        [operator]
        A = [[1]]
        [group]
        compose = ["x1 + y1"]
        [dilation]
        sigma = [1]
    "#;

    #[test]
    fn heat_lift_adds_time() {
        let c = OperatorConfig::from_toml(HEAT).unwrap();
        assert_eq!(c.operator.dim(), 2);
        assert_eq!(c.operator.time(), Some(1));
        assert_eq!(c.group.as_ref().unwrap().dim(), 2);
        assert_eq!(c.dilation.unwrap().q(), &crate::expr::rat(3, 1));
        let u = crate::expr::parse("x1^2 + 3*x2", 2).unwrap();
        let lu = c.operator.apply(&u).unwrap();
        assert!((lu.eval(&[0.4, 0.1]) - (2.0 - 3.0)).abs() < 1e-14);
    }

    #[test]
    fn entries_may_be_numbers_or_text() {
        let c = OperatorConfig::from_toml(
            "dimension = 2\n[operator]\nA = [[1, 0.5], [\"1/2\", \"1 + x1^2\"]]\nb = [\"x2\", 0]\n",
        )
        .unwrap();
        assert_eq!(c.operator.a()[0][1].eval(&[0.0, 0.0]), 0.5);
        assert_eq!(c.operator.a()[1][0].as_rational(), Some(crate::expr::rat(1, 2)));
    }

    #[test]
    fn rejects_malformed_configs() {
        let bad = [
            "dimension = 2",
            "dimension = 2\n[operator]\nA = [[1]]",
            "dimension = 2\n[operator]\nA = [[1, 0], [1, 1]]",
            "dimension = 1\n[operator]\nA = [[\"x2\"]]",
            "dimension = 1\nextra = 3\n[operator]\nA = [[1]]",
            "dimension = 1\nkernel = \"torus\"\n[operator]\nA = [[1]]",
            "dimension = 1\n[operator]\nA = [[\"1 +\"]]",
            "dimension = 3\nkernel = \"heisenberg\"\n[operator]\nA = [[1,0,0],[0,1,0],[0,0,1]]",
            "dimension = 2\n[kolmogorov]\nA = [[1, 0], [0, 0]]\nB = [[0, 0], [\"x\", 0]]",
            "dimension = 2\n[kolmogorov]\nA = [[1, 0], [0, 0]]\nB = [[0, 0], [1, 0]]\n[dilation]\nsigma = [1, 3]",
        ];
        for text in bad {
            assert!(matches!(OperatorConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn kolmogorov_block_builds_the_lifted_operator() {
        let c = OperatorConfig::from_toml(
            "dimension = 2\n[kolmogorov]\nA = [[1, 0], [0, 0]]\nB = [[0, 0], [1, 0]]\n[dilation]\nsigma = [1, 3, 2]",
        )
        .unwrap();
        assert_eq!(c.operator.dim(), 3);
        assert_eq!(c.law_kind, Some(LawKind::Polynomial));
        assert_eq!(c.dilation.unwrap().q(), &crate::expr::rat(6, 1));
    }
}
