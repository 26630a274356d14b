//! JSON scenario files and deterministic verification reports.
//!
//! Every numeric field that is not a count is a string: rationals as `p/q`,
//! generalized numbers in the expression syntax, norms as `0` or `e^-ρ`.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::algebra::{NormalForm, Representative, ValueNorm};
use crate::dsl::{parse_cnet, parse_expression, parse_rational_field};
use crate::error::{Error, Result};
use crate::fixed_point::{
    affine_fixed_point, banach_iterate, trace_distances, AffineMap, PolynomialMap, SelfMap,
};
use crate::geometry::{check_condition_e, DressedBall, EuclideanModel};
use crate::hahn_banach::{hb_extend, GenFrac, LFunctional, LVector, TestVector};
use crate::rational::{fmt_rational, Rational};
use crate::solver::{
    check_nested, intersect_diagonal, intersect_prefix, AlignCase, IndexFormula,
    NestedBallSequence,
};

pub const DEFAULT_CHECK_K: u32 = 256;
pub const DEFAULT_DEPTH: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    Intersect(IntersectSpec),
    Hb(HbSpec),
    Fixpoint(FixpointSpec),
    Check(CheckSpec),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntersectSpec {
    /// The scenario kind tag.
    pub kind: String,
    pub sequence: SequenceSpec,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub check_k: Option<u32>,
    /// Certify the diagonal witness for balls `1..=certify`.
    #[serde(default)]
    pub certify: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SequenceSpec {
    Preset {
        preset: String,
    },
    Explicit {
        balls: Vec<BallSpec>,
    },
    Rule {
        coeff: String,
        exponent: FormulaSpec,
        rho: FormulaSpec,
    },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: String,
    pub rho: String,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum FormulaSpec {
    Affine { offset: String, slope: String },
    Harmonic { limit: String, scale: String },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HbSpec {
    /// The scenario kind tag.
    pub kind: String,
    pub a: Vec<String>,
    pub norm_bound: String,
    pub phi: Vec<String>,
    pub samples: Vec<Vec<String>>,
    #[serde(default)]
    pub tests: Vec<TestSpec>,
    /// Appends this many test vectors `(λ·x, λ)` and `(μ·x, 0)` over the
    /// samples `x`, enumerated deterministically.
    #[serde(default)]
    pub generated_tests: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSpec {
    pub lambda: String,
    pub z: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixpointSpec {
    /// The scenario kind tag.
    pub kind: String,
    pub map: MapSpec,
    pub seed: String,
    pub steps: usize,
    #[serde(default)]
    pub second_seed: Option<String>,
    /// Truncation order of the Neumann series (affine maps only).
    #[serde(default)]
    pub order: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MapSpec {
    Affine { a: String, b: String },
    Polynomial { coeffs: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    /// The scenario kind tag.
    pub kind: String,
    pub cnet: String,
    #[serde(default)]
    pub center: Option<String>,
    #[serde(default)]
    pub rho: Option<String>,
    #[serde(default)]
    pub window: Option<u32>,
}

/// Command-line overrides; unset fields fall back to the scenario, then to
/// the defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Flags {
    pub check_k: Option<u32>,
    pub depth: Option<usize>,
    pub certify: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    Violated,
}

/// Ordered `key: value` lines and a verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub lines: Vec<(String, String)>,
    pub verdict: Verdict,
}

impl Report {
    fn new() -> Self {
        Report {
            lines: Vec::new(),
            verdict: Verdict::Verified,
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Records a mathematical failure, with its index data when present.
    fn fail(&mut self, e: &Error) {
        self.verdict = Verdict::Violated;
        match e {
            Error::Verification { ball, k, .. } => {
                if let Some(i) = ball {
                    self.push("failing_index", i);
                }
                self.push("failing_k", k);
            }
            Error::NotNested { index, .. } => self.push("failing_index", index),
            Error::Contraction { step, .. } => self.push("failing_step", step),
            Error::Extension { index, .. } => self.push("failing_index", index),
            _ => {}
        }
        self.push("failure", e);
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Verified => 0,
            Verdict::Violated => 1,
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.lines {
            writeln!(f, "{}: {}", k, v)?;
        }
        writeln!(
            f,
            "verdict: {}",
            match self.verdict {
                Verdict::Verified => "VERIFIED",
                Verdict::Violated => "VIOLATED",
            }
        )
    }
}

/// Parses a scenario; errors carry the byte offset in `text`.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let located = |e: serde_json::Error| Error::Parse {
        pos: offset_of(text, e.line(), e.column()),
        msg: e.to_string(),
    };
    #[derive(Deserialize)]
    struct Kind {
        kind: String,
    }
    let value: serde_json::Value = serde_json::from_str(text).map_err(located)?;
    let kind = serde_json::from_value::<Kind>(value)
        .map_err(|e| Error::Parse {
            pos: 0,
            msg: e.to_string(),
        })?
        .kind;
    Ok(match kind.as_str() {
        "intersect" => Scenario::Intersect(serde_json::from_str(text).map_err(located)?),
        "hb" => Scenario::Hb(serde_json::from_str(text).map_err(located)?),
        "fixpoint" => Scenario::Fixpoint(serde_json::from_str(text).map_err(located)?),
        "check" => Scenario::Check(serde_json::from_str(text).map_err(located)?),
        other => {
            return Err(Error::Parse {
                pos: text.find(&format!("\"{}\"", other)).unwrap_or(0),
                msg: format!("unknown scenario kind `{}`", other),
            })
        }
    })
}

fn offset_of(text: &str, line: usize, column: usize) -> usize {
    let before: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    before + column.saturating_sub(1)
}

fn field<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { pos, msg } => Error::Parse {
            pos,
            msg: format!("in field `{}`: {}", name, msg),
        },
        other => Error::Parse {
            pos: 0,
            msg: format!("in field `{}`: {}", name, other),
        },
    })
}

fn expr(name: &str, text: &str) -> Result<NormalForm> {
    field(name, parse_expression(text))
}

fn rational(name: &str, text: &str) -> Result<Rational> {
    field(name, parse_rational_field(text))
}

fn frac(name: &str, text: &str) -> Result<GenFrac> {
    field(name, GenFrac::parse(text))
}

fn vector(name: &str, coords: &[String]) -> Result<LVector> {
    coords
        .iter()
        .enumerate()
        .map(|(i, c)| frac(&format!("{}[{}]", name, i), c))
        .collect::<Result<Vec<_>>>()
        .map(LVector::new)
}

fn formula(name: &str, f: &FormulaSpec) -> Result<IndexFormula> {
    Ok(match f {
        FormulaSpec::Affine { slope, offset } => IndexFormula::Affine {
            slope: rational(&format!("{}.slope", name), slope)?,
            offset: rational(&format!("{}.offset", name), offset)?,
        },
        FormulaSpec::Harmonic { limit, scale } => IndexFormula::Harmonic {
            limit: rational(&format!("{}.limit", name), limit)?,
            scale: rational(&format!("{}.scale", name), scale)?,
        },
    })
}

impl SequenceSpec {
    pub fn build(&self) -> Result<NestedBallSequence> {
        Ok(match self {
            SequenceSpec::Preset { preset } => match preset.as_str() {
                "geometric" => NestedBallSequence::geometric(),
                "dense" => NestedBallSequence::dense(),
                other => {
                    return Err(Error::Parse {
                        pos: 0,
                        msg: format!("unknown preset `{}`", other),
                    })
                }
            },
            SequenceSpec::Explicit { balls } => NestedBallSequence::Explicit(
                balls
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        Ok(DressedBall::new(
                            expr(&format!("balls[{}].center", i), &b.center)?,
                            rational(&format!("balls[{}].rho", i), &b.rho)?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            SequenceSpec::Rule {
                coeff,
                exponent,
                rho,
            } => NestedBallSequence::Rule {
                coeff: rational("coeff", coeff)?,
                exponent: formula("exponent", exponent)?,
                rho: formula("rho", rho)?,
            },
        })
    }

    fn describe(&self) -> String {
        match self {
            SequenceSpec::Preset { preset } => format!("preset {}", preset),
            SequenceSpec::Explicit { balls } => format!("explicit, {} balls", balls.len()),
            SequenceSpec::Rule { .. } => "rule".into(),
        }
    }
}

/// Runs a scenario. Input errors are returned as `Err`; mathematical
/// failures produce a report with verdict `VIOLATED`.
pub fn run_scenario(s: &Scenario, flags: &Flags) -> Result<Report> {
    match s {
        Scenario::Intersect(spec) => run_intersect(spec, flags),
        Scenario::Hb(spec) => run_hb(spec),
        Scenario::Fixpoint(spec) => run_fixpoint(spec),
        Scenario::Check(spec) => run_check(spec, flags),
    }
}

/// Reads, parses and runs a scenario file: the report text and exit code
/// (`2` for unreadable or malformed input).
pub fn run_file(path: &Path, flags: &Flags) -> (String, i32) {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return (format!("error: cannot read {}: {}\n", path.display(), e), 2),
    };
    match parse_scenario(&text).and_then(|s| run_scenario(&s, flags)) {
        Ok(r) => (r.to_string(), r.exit_code()),
        Err(e) => (format!("error: {}\n", e), 2),
    }
}

fn run_intersect(spec: &IntersectSpec, flags: &Flags) -> Result<Report> {
    let seq = spec.sequence.build()?;
    let n = flags
        .depth
        .or(spec.depth)
        .unwrap_or_else(|| seq.len().unwrap_or(DEFAULT_DEPTH));
    if let Some(len) = seq.len() {
        if n > len {
            return Err(Error::Parse {
                pos: 0,
                msg: format!("depth {} exceeds the {} listed balls", n, len),
            });
        }
    }
    let window = flags.check_k.or(spec.check_k).unwrap_or(DEFAULT_CHECK_K);
    let certify = flags.certify.or(spec.certify);
    let mut r = Report::new();
    r.push("kind", "intersect");
    r.push("sequence", spec.sequence.describe());
    if let NestedBallSequence::Rule { coeff, exponent, rho } = &seq {
        r.push(
            "rule",
            format!(
                "x_i = sum_(j<=i) {}*e^({}), rho_i = {}",
                fmt_rational(coeff),
                exponent,
                rho
            ),
        );
    }
    r.push("depth", n);
    r.push("check_k", window);
    if let Err(e) = check_nested(&seq, n) {
        r.fail(&e);
        return Ok(r);
    }
    r.push("nesting", format!("verified for i <= {}", n));
    let w = match intersect_prefix(&seq, n, window) {
        Ok(w) => w,
        Err(e) => {
            r.fail(&e);
            return Ok(r);
        }
    };
    r.push("chain_stages", w.chain.len());
    for (j, st) in w.chain.stages.iter().enumerate() {
        r.push(
            format!("stage.{}", j + 1),
            format!(
                "ball {}, case {}, k0 {} ({}), E: {}",
                st.ball,
                match st.case {
                    Some(AlignCase::Sphere) => "sphere",
                    Some(AlignCase::Interior) => "interior",
                    None => "last",
                },
                st.k0,
                if st.structural_threshold { "structural" } else { "window" },
                st.certificate
            ),
        );
    }
    let pointwise = 2 * window as usize * w.chain.len().saturating_sub(1);
    r.push("chain_inequalities_verified", pointwise);
    r.push("witness", &w.witness);
    let balls = seq.balls(n)?;
    for (i, (d, b)) in w.distances.iter().zip(&balls).enumerate() {
        r.push(format!("distance.{}", i + 1), format!("{} <= {}", d, b.radius()));
    }
    r.push("ball_inequalities_verified", w.distances.len());
    if let Some(m) = certify {
        let diag = intersect_diagonal(seq.clone(), window);
        let mut total = 0;
        for i in 1..=m {
            match diag.certify(i, window) {
                Ok(c) => {
                    total += c.checked;
                    r.push(
                        format!("certify.{}", i),
                        format!("stage {}, k in {}..={}", c.stage, c.from, c.window),
                    );
                }
                Err(e) => {
                    r.fail(&e);
                    return Ok(r);
                }
            }
        }
        r.push("diagonal_inequalities_verified", total);
    }
    Ok(r)
}

/// Deterministic test vectors: for each multiplier `λ` and sample `x`, the
/// pair `(λ·x, λ)` and then `(λ·x, 0)`.
fn generated_tests(samples: &[LVector], count: usize) -> Vec<TestVector> {
    let multipliers = [
        "1", "e^(1)", "-2*e^(-1)", "3/2 + e^(1/2)", "e^(2) - 5*e^(3)", "(1)/(1 - e^(1))",
        "7*e^(-2)", "(e^(1))/(2 + e^(1/3))", "-1/3", "e^(3/4)",
    ];
    let lambdas: Vec<GenFrac> = multipliers
        .iter()
        .map(|m| GenFrac::parse(m).expect("fixed multipliers parse"))
        .collect();
    let mut out = Vec::with_capacity(count);
    'outer: for l in &lambdas {
        for x in samples {
            for scaled in [true, false] {
                if out.len() == count {
                    break 'outer;
                }
                out.push(TestVector {
                    z: x.scale(l),
                    lambda: if scaled { l.clone() } else { GenFrac::zero() },
                });
            }
        }
    }
    let mut round = 0;
    while out.len() < count && !samples.is_empty() {
        // further multipliers `l·α^round` keep the enumeration going
        let shift = GenFrac::parse(&format!("e^({})", round + 1)).expect("monomial parses");
        for l in &lambdas {
            let l = l * &shift;
            for x in samples {
                if out.len() == count {
                    break;
                }
                out.push(TestVector {
                    z: x.scale(&l),
                    lambda: l.clone(),
                });
            }
        }
        round += 1;
    }
    out
}

fn run_hb(spec: &HbSpec) -> Result<Report> {
    let phi = LFunctional::new(
        spec.phi
            .iter()
            .enumerate()
            .map(|(i, c)| frac(&format!("phi[{}]", i), c))
            .collect::<Result<Vec<_>>>()?,
    );
    let bound = ValueNorm::parse(&spec.norm_bound).ok_or_else(|| Error::Parse {
        pos: 0,
        msg: format!("in field `norm_bound`: `{}` is not `0` or `e^-r`", spec.norm_bound),
    })?;
    let a = vector("a", &spec.a)?;
    let samples = spec
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| vector(&format!("samples[{}]", i), s))
        .collect::<Result<Vec<_>>>()?;
    let mut tests = spec
        .tests
        .iter()
        .enumerate()
        .map(|(i, t)| {
            Ok(TestVector {
                z: vector(&format!("tests[{}].z", i), &t.z)?,
                lambda: frac(&format!("tests[{}].lambda", i), &t.lambda)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(n) = spec.generated_tests {
        tests.extend(generated_tests(&samples, n));
    }
    let mut r = Report::new();
    r.push("kind", "hb");
    r.push("dimension", a.dim());
    r.push("phi", LVector::new(phi.coeffs.clone()));
    r.push("norm_bound", &bound);
    r.push("a", &a);
    r.push("samples", samples.len());
    r.push("tests", tests.len());
    match hb_extend(&phi, &bound, &a, &samples, &tests) {
        Ok(ext) => {
            for (i, b) in ext.family.balls.iter().enumerate() {
                r.push(format!("ball.{}", i), b);
            }
            let order: Vec<String> = ext.family.order.iter().map(|i| i.to_string()).collect();
            r.push("containment_order", order.join(" ⊇ "));
            r.push("pairs_comparable", ext.family.pairs_checked);
            r.push("minimal_ball", ext.minimal);
            r.push("alpha", &ext.alpha);
            r.push("alpha_in_every_ball", ext.family.balls.len());
            r.push("extension_inequalities_verified", ext.tests_passed);
        }
        Err(e) => r.fail(&e),
    }
    Ok(r)
}

fn run_fixpoint(spec: &FixpointSpec) -> Result<Report> {
    let map = match &spec.map {
        MapSpec::Affine { a, b } => SelfMap::Affine(AffineMap::new(expr("map.a", a)?, expr("map.b", b)?)),
        MapSpec::Polynomial { coeffs } => SelfMap::Polynomial(PolynomialMap::new(
            coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| expr(&format!("map.coeffs[{}]", i), c))
                .collect::<Result<Vec<_>>>()?,
        )),
    };
    let seed = expr("seed", &spec.seed)?;
    let second = spec
        .second_seed
        .as_ref()
        .map(|s| expr("second_seed", s))
        .transpose()?;
    let mut r = Report::new();
    r.push("kind", "fixpoint");
    r.push("map", &map);
    r.push(
        "contraction",
        match &map {
            SelfMap::Affine(m) => format!("|a|_e = {} < 1 required", crate::algebra::sharp_norm(&m.a)),
            SelfMap::Polynomial(_) => "strict residual decrease over the run".into(),
        },
    );
    r.push("seed", &seed);
    r.push("steps", spec.steps);
    let trace = match banach_iterate(&map, &seed, spec.steps) {
        Ok(t) => t,
        Err(e) => {
            r.fail(&e);
            return Ok(r);
        }
    };
    for (n, res) in trace.residuals.iter().enumerate() {
        r.push(format!("residual.{}", n), res);
    }
    r.push("last_iterate", trace.last());
    r.push("residual_decreases_verified", trace.residuals.len().saturating_sub(1));
    if let Some(y0) = second {
        r.push("second_seed", &y0);
        match banach_iterate(&map, &y0, spec.steps) {
            Ok(t2) => {
                for (n, d) in trace_distances(&trace, &t2).iter().enumerate() {
                    r.push(format!("trace_distance.{}", n), d);
                }
            }
            Err(e) => {
                r.fail(&e);
                return Ok(r);
            }
        }
    }
    if let Some(order) = spec.order {
        match &map {
            SelfMap::Affine(m) => match affine_fixed_point(m, order) {
                Ok(p) => {
                    r.push("order", order);
                    r.push("xstar", &p.xstar);
                    r.push("xstar_residual", &p.residual);
                    r.push("xstar_bound", &p.bound);
                }
                Err(e) => r.fail(&e),
            },
            SelfMap::Polynomial(_) => {
                r.fail(&Error::Unsupported(
                    "Neumann series needs an affine map".into(),
                ));
            }
        }
    }
    Ok(r)
}

fn run_check(spec: &CheckSpec, flags: &Flags) -> Result<Report> {
    let cnet = field("cnet", parse_cnet(&spec.cnet))?;
    let window = flags.check_k.or(spec.window).unwrap_or(DEFAULT_CHECK_K);
    let ball = match (&spec.center, &spec.rho) {
        (Some(c), Some(rho)) => Some(DressedBall::new(expr("center", c)?, rational("rho", rho)?)),
        (None, None) => None,
        _ => {
            return Err(Error::Parse {
                pos: 0,
                msg: "`center` and `rho` go together".into(),
            })
        }
    };
    let mut r = Report::new();
    r.push("kind", "check");
    r.push("cnet", &cnet);
    r.push("window", window);
    match &ball {
        None => match check_condition_e(&cnet, window) {
            Ok(cert) => r.push("condition_e", format!("PASS: {}", cert)),
            Err(e) => r.fail(&e),
        },
        Some(b) => {
            r.push("ball", b);
            match EuclideanModel::new(Representative::canonical(b.center.clone()), b.rho.clone(), cnet, window) {
                Ok((_, cert)) => {
                    r.push("condition_e", format!("PASS: {}", cert));
                    r.push("model", format!("B_k(<= C_k 2^(-k*{}); x_k)", fmt_rational(&b.rho)));
                }
                Err(e) => r.fail(&e),
            }
        }
    }
    Ok(r)
}
