//! Problem documents: a TOML schema with named sections and explicit lattice
//! integers. Frequencies are never written as floating-point exponent values;
//! every term references integer coordinates over the declared generators.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use oscex_core::expansion::{MultiIndex, PolyNonlinearity, Problem};
use oscex_core::osc::{
    separation_check_lattice, spectrum, spectrum_differences, Basis, FreqVector, Generator,
    GeneratorBasis, OscFn, OscVector, SeparationReport,
};
use oscex_core::powerlog::PowerLogMonomial;
use oscex_core::ranks::{EpsSet, EpsSpec};
use serde::{Deserialize, Serialize};

/// A diagnostic tied to a document location (section path).
#[derive(Debug)]
pub struct DocError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for DocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for DocError {}

fn err<T>(path: impl Into<String>, message: impl fmt::Display) -> Result<T, DocError> {
    Err(DocError {
        path: path.into(),
        message: message.to_string(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub dimension: usize,
    pub t0: f64,
    pub domain_radius: f64,
    pub generators: Vec<GeneratorEntry>,
    pub matrix: MatrixSection,
    #[serde(default)]
    pub forcing: Vec<TermEntry>,
    pub eps: Vec<EpsEntry>,
    #[serde(default)]
    pub nonlinearities: Vec<NonlinearityEntry>,
    #[serde(default)]
    pub options: RunOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub re: f64,
    pub im: f64,
    /// `"signed"` (oscillation) or `"nonneg"` (decay).
    pub lattice: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixSection {
    pub rows: Vec<Vec<f64>>,
}

/// One term `coeff·e^{μt}` of a vector component: integer lattice point plus
/// a complex coefficient.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    pub component: usize,
    pub freq: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EpsEntry {
    /// Exponent `a₀ > 0` of `1/t^{a₀}`, as an exact rational string.
    pub power: String,
    /// Exponents on `ln t, ln ln t, …`, rational strings.
    #[serde(default)]
    pub logs: Vec<String>,
    /// Rank override; defaults to `power`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<String>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub coeff: f64,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityEntry {
    /// 1-based index `l` of the multiplying `ε_l`.
    pub eps_index: usize,
    #[serde(default)]
    pub terms: Vec<NonlinearTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NonlinearTerm {
    /// Multi-index `℘` over the state components.
    pub powers: Vec<u32>,
    #[serde(default)]
    pub coeffs: Vec<TermEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// Exact rational string, e.g. `"11/10"` or `"1.1"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varpi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_min: Option<f64>,
}

/// Parse a rational from `"p/q"`, `"1.25"`, or `"3"` forms, exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|e| format!("bad numerator {num:?}: {e}"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|e| format!("bad denominator {den:?}: {e}"))?;
        if d == BigInt::from(0) {
            return Err("zero denominator".into());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = frac.len() as u32;
        let joined = format!("{int}{frac}");
        let n: BigInt = joined
            .parse()
            .map_err(|e| format!("bad decimal {s:?}: {e}"))?;
        return Ok(BigRational::new(n, BigInt::from(10u32).pow(digits)));
    }
    let n: BigInt = s.parse().map_err(|e| format!("bad integer {s:?}: {e}"))?;
    Ok(BigRational::from_integer(n))
}

fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// A validated problem plus run options and the parse-time separation scan.
#[derive(Debug)]
pub struct ParsedProblem {
    pub problem: Problem<f64>,
    pub options: RunOptions,
    /// Margin of the lattice scan against Λ(A).
    pub separation: SeparationReport<f64>,
    /// Margin against Λ(A) ∪ Δ(A) (the simple-mode requirement).
    pub separation_full: SeparationReport<f64>,
}

pub fn parse_str(text: &str) -> Result<ParsedProblem, DocError> {
    let doc: ProblemDocument =
        toml::from_str(text).map_err(|e| DocError {
            path: "document".into(),
            message: e.to_string(),
        })?;
    validate(&doc)
}

pub fn parse_file(path: &std::path::Path) -> Result<ParsedProblem, DocError> {
    let text = std::fs::read_to_string(path).map_err(|e| DocError {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_str(&text)
}

pub fn validate(doc: &ProblemDocument) -> Result<ParsedProblem, DocError> {
    let n = doc.dimension;
    if n < 2 {
        return err("dimension", "must be at least 2");
    }

    // Generators.
    let mut gens = Vec::with_capacity(doc.generators.len());
    for (i, g) in doc.generators.iter().enumerate() {
        let path = format!("generators[{i}]");
        match g.lattice.as_str() {
            "signed" => {
                if g.re != 0.0 || g.im == 0.0 {
                    return err(path, "signed lattice requires re = 0 and im != 0");
                }
                gens.push(Generator::Oscillation(g.im));
            }
            "nonneg" => {
                if g.im != 0.0 || g.re >= 0.0 {
                    return err(path, "nonneg lattice requires im = 0 and re < 0");
                }
                gens.push(Generator::Decay(g.re));
            }
            other => return err(path, format!("unknown lattice kind {other:?}")),
        }
    }
    let basis = GeneratorBasis::new(gens)
        .map_err(|e| DocError {
            path: "generators".into(),
            message: e.to_string(),
        })?;

    // Matrix.
    if doc.matrix.rows.len() != n || doc.matrix.rows.iter().any(|r| r.len() != n) {
        return err("matrix.rows", format!("must be {n}x{n} row-major"));
    }

    // Forcing.
    let forcing = assemble_vector(&basis, n, &doc.forcing, "forcing")?;

    // Eps family.
    if doc.eps.is_empty() {
        return err("eps", "at least one vanishing parameter required");
    }
    let mut specs = Vec::with_capacity(doc.eps.len());
    for (i, entry) in doc.eps.iter().enumerate() {
        let path = format!("eps[{i}]");
        let power = parse_rational(&entry.power)
            .map_err(|m| DocError {
                path: format!("{path}.power"),
                message: m,
            })?;
        let mut logs = Vec::with_capacity(entry.logs.len());
        for (j, l) in entry.logs.iter().enumerate() {
            logs.push(parse_rational(l).map_err(|m| DocError {
                path: format!("{path}.logs[{j}]"),
                message: m,
            })?);
        }
        if entry.coeff == 0.0 || (i == 0 && entry.coeff < 0.0) {
            return err(
                format!("{path}.coeff"),
                "must be nonzero (positive for eps[0])",
            );
        }
        let coeff = BigRational::from_float(entry.coeff).ok_or_else(|| DocError {
            path: format!("{path}.coeff"),
            message: "not finite".into(),
        })?;
        let base = PowerLogMonomial::eps_style(power.clone(), logs)
            .map_err(|e| DocError {
                path: format!("{path}.power"),
                message: e.to_string(),
            })?
            .scale(&coeff);
        let spec = match &entry.rank {
            Some(r) => {
                let rank = parse_rational(r).map_err(|m| DocError {
                    path: format!("{path}.rank"),
                    message: m,
                })?;
                EpsSpec::with_rank(i + 1, base, rank)
            }
            None => EpsSpec::new(i + 1, base),
        }
        .map_err(|e| DocError {
            path: path.clone(),
            message: e.to_string(),
        })?;
        specs.push(spec);
    }
    let eps = EpsSet::new(specs).map_err(|e| DocError {
        path: "eps".into(),
        message: e.to_string(),
    })?;

    // Nonlinearities: one entry per eps index, in order.
    if doc.nonlinearities.len() != doc.eps.len() {
        return err(
            "nonlinearities",
            format!(
                "need exactly {} entries (one per eps), got {}",
                doc.eps.len(),
                doc.nonlinearities.len()
            ),
        );
    }
    let mut nls = Vec::with_capacity(doc.nonlinearities.len());
    for (i, entry) in doc.nonlinearities.iter().enumerate() {
        let path = format!("nonlinearities[{i}]");
        if entry.eps_index != i + 1 {
            return err(
                format!("{path}.eps_index"),
                format!("expected {} (entries are ordered by eps index)", i + 1),
            );
        }
        let mut terms = BTreeMap::new();
        for (j, term) in entry.terms.iter().enumerate() {
            let tpath = format!("{path}.terms[{j}]");
            if term.powers.len() != n {
                return err(
                    format!("{tpath}.powers"),
                    format!("multi-index must have {n} entries"),
                );
            }
            let idx = MultiIndex::new(term.powers.clone());
            let coeff = assemble_vector(&basis, n, &term.coeffs, &format!("{tpath}.coeffs"))?;
            if terms.insert(idx, coeff).is_some() {
                return err(format!("{tpath}.powers"), "duplicate multi-index");
            }
        }
        nls.push(
            PolyNonlinearity::new(n, terms).map_err(|e| DocError {
                path: path.clone(),
                message: e.to_string(),
            })?,
        );
    }

    let delta_min = doc.options.delta_min.unwrap_or(oscex_core::consts::DELTA_MIN);
    let problem = Problem::new(
        doc.matrix.rows.clone(),
        forcing,
        eps,
        nls,
        doc.t0,
        doc.domain_radius,
        delta_min,
    )
    .map_err(|e| DocError {
        path: "problem".into(),
        message: e.to_string(),
    })?;

    if let Some(mode) = &doc.options.mode {
        if mode != "npi" && mode != "simple" {
            return err("options.mode", format!("unknown mode {mode:?}"));
        }
    }
    if let Some(v) = &doc.options.varpi {
        parse_rational(v).map_err(|m| DocError {
            path: "options.varpi".into(),
            message: m,
        })?;
    }

    // Separation scan of the truncated lattice against the spectrum.
    let lambdas = spectrum(&problem.a).map_err(|e| DocError {
        path: "matrix".into(),
        message: e.to_string(),
    })?;
    let mut lambdas_full = lambdas.clone();
    lambdas_full.extend(spectrum_differences(&problem.a).map_err(|e| DocError {
        path: "matrix".into(),
        message: e.to_string(),
    })?);
    let separation = separation_check_lattice(problem.basis(), 3, &lambdas, delta_min);
    let separation_full =
        separation_check_lattice(problem.basis(), 3, &lambdas_full, delta_min);
    if !separation.pass {
        return err(
            "generators",
            format!(
                "separation failure: lattice point {:?} is within {} of eigenvalue {:?}",
                separation.worst_exponent, separation.min_distance, separation.worst_lambda
            ),
        );
    }

    Ok(ParsedProblem {
        problem,
        options: doc.options.clone(),
        separation,
        separation_full,
    })
}

fn assemble_vector(
    basis: &Basis<f64>,
    n: usize,
    entries: &[TermEntry],
    path: &str,
) -> Result<OscVector<f64>, DocError> {
    let mut per_component: Vec<Vec<(FreqVector, Complex<f64>)>> = vec![Vec::new(); n];
    for (i, term) in entries.iter().enumerate() {
        let tpath = format!("{path}[{i}]");
        if term.component == 0 || term.component > n {
            return err(
                format!("{tpath}.component"),
                format!("must be 1..={n}, got {}", term.component),
            );
        }
        if term.freq.len() != basis.len() {
            return err(
                format!("{tpath}.freq"),
                format!(
                    "lattice point must have {} entries, got {}",
                    basis.len(),
                    term.freq.len()
                ),
            );
        }
        per_component[term.component - 1].push((
            FreqVector::new(term.freq.clone()),
            Complex::new(term.re, term.im),
        ));
    }
    let mut components = Vec::with_capacity(n);
    for (c, terms) in per_component.into_iter().enumerate() {
        let f = OscFn::from_terms(basis, terms).map_err(|e| DocError {
            path: format!("{path} (component {})", c + 1),
            message: e.to_string(),
        })?;
        if !f.is_real() {
            return err(
                format!("{path} (component {})", c + 1),
                "terms are not conjugate-closed; the system must be real",
            );
        }
        components.push(f);
    }
    OscVector::new(components).map_err(|e| DocError {
        path: path.to_string(),
        message: e.to_string(),
    })
}

/// Serialize a document in canonical form: terms sorted by component and
/// lattice point, nonlinear terms by multi-index.
pub fn canonicalize(doc: &ProblemDocument) -> ProblemDocument {
    let mut out = doc.clone();
    let term_key = |t: &TermEntry| (t.component, t.freq.clone());
    out.forcing.sort_by_key(term_key);
    for nl in &mut out.nonlinearities {
        nl.terms.sort_by_key(|t| t.powers.clone());
        for t in &mut nl.terms {
            t.coeffs.sort_by_key(term_key);
        }
    }
    out
}

pub fn serialize(doc: &ProblemDocument) -> String {
    toml::to_string_pretty(&canonicalize(doc)).expect("document serializes")
}

/// Parse the raw document without validation (round-trip support).
pub fn parse_document(text: &str) -> Result<ProblemDocument, DocError> {
    toml::from_str(text).map_err(|e| DocError {
        path: "document".into(),
        message: e.to_string(),
    })
}

/// The varpi option as an exact rational, when present.
pub fn varpi_of(options: &RunOptions) -> Option<BigRational> {
    options.varpi.as_deref().map(|s| {
        parse_rational(s).expect("varpi validated at parse time")
    })
}

/// Canonical rational formatting for reports.
pub fn rational_str(q: &BigRational) -> String {
    format_rational(q)
}
