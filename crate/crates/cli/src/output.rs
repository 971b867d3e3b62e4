//! Deterministic writers for expansion dumps, CSV sample tables, and
//! verification summaries. All floating-point output carries 17 significant
//! digits so downstream slope fits lose nothing.

use std::fmt::Write as _;

use oscex_core::expansion::ExpansionResult;
use oscex_core::osc::{OscFn, OscVector};
use oscex_core::verify::{DecayReport, ErrorCheck, GammaDiagnostics, ParameterCount, ResidualCheck};

pub fn fnum(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_vector_terms(out: &mut String, label: &str, v: &OscVector<f64>) {
    for (c, f) in v.components().iter().enumerate() {
        push_fn_terms(out, label, c + 1, f);
    }
}

fn push_fn_terms(out: &mut String, label: &str, component: usize, f: &OscFn<f64>) {
    for (k, coeff) in f.terms() {
        let lattice: Vec<String> = k.coeffs().iter().map(|x| x.to_string()).collect();
        writeln!(
            out,
            "{label} {component} [{}] {} {}",
            lattice.join(","),
            fnum(coeff.re),
            fnum(coeff.im)
        )
        .unwrap();
    }
}

/// Structured expansion listing: rank list, monomial descriptors, and the
/// coefficient vectors as (component, lattice point, re, im) quadruples.
pub fn render_expansion(e: &ExpansionResult<f64>, stamp: bool) -> String {
    let mut out = String::new();
    writeln!(out, "# oscex expansion").unwrap();
    if stamp {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(out, "# generated-unix {now}").unwrap();
    }
    writeln!(out, "depth {}", e.depth).unwrap();
    let ranks: Vec<String> = e.ranks.iter().map(|r| r.to_string()).collect();
    writeln!(out, "ranks {}", ranks.join(" ")).unwrap();
    writeln!(
        out,
        "phi0 residual-norm {} min-separation {}",
        fnum(e.phi0_residual),
        fnum(e.phi0_min_separation)
    )
    .unwrap();
    push_vector_terms(&mut out, "phi0-term", &e.phi0);
    for rec in &e.records {
        writeln!(
            out,
            "coefficient s {} p {} rank {} monomial {}",
            rec.s,
            rec.p,
            rec.monomial.rank(),
            rec.monomial
        )
        .unwrap();
        writeln!(
            out,
            "  residual-norm {} min-separation {}",
            fnum(rec.residual_norm),
            fnum(rec.min_separation)
        )
        .unwrap();
        push_vector_terms(&mut out, "  rhs-term", &rec.rhs);
        push_vector_terms(&mut out, "  phi-term", &rec.phi);
    }
    out
}

/// Residual samples as CSV: t, per-component values, norm, normalized norm.
pub fn residual_csv(check: &ResidualCheck<f64>) -> String {
    let dim = check.samples.first().map_or(0, |(_, g, _)| g.len());
    let mut out = String::new();
    let comps: Vec<String> = (1..=dim).map(|i| format!("g{i}")).collect();
    writeln!(out, "t,{},norm,normalized", comps.join(",")).unwrap();
    for (t, g, norm) in &check.samples {
        let vals: Vec<String> = g.iter().map(|v| fnum(*v)).collect();
        let normalized = norm / t.powf(-check.claimed_q);
        writeln!(
            out,
            "{},{},{},{}",
            fnum(*t),
            vals.join(","),
            fnum(*norm),
            fnum(normalized)
        )
        .unwrap();
    }
    out
}

/// Error samples as CSV: t, error norm, normalized norm.
pub fn error_csv(check: &ErrorCheck<f64>) -> String {
    let mut out = String::new();
    writeln!(out, "launch,t,norm,normalized").unwrap();
    for launch in &check.launches {
        for (t, norm) in &launch.samples {
            let normalized = norm / t.powf(-check.claimed_q);
            writeln!(
                out,
                "{},{},{},{}",
                fnum(launch.launch_time),
                fnum(*t),
                fnum(*norm),
                fnum(normalized)
            )
            .unwrap();
        }
    }
    out
}

/// Structured (non-CSV) sample listing.
pub fn residual_structured(check: &ResidualCheck<f64>) -> String {
    let mut out = String::new();
    writeln!(out, "# oscex residual samples").unwrap();
    writeln!(out, "claimed-q {}", fnum(check.claimed_q)).unwrap();
    for (t, g, norm) in &check.samples {
        let vals: Vec<String> = g.iter().map(|v| fnum(*v)).collect();
        writeln!(out, "sample {} [{}] norm {}", fnum(*t), vals.join(" "), fnum(*norm)).unwrap();
    }
    out
}

pub fn decay_summary(label: &str, rep: &DecayReport<f64>) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{label} claimed-q {} slope {} sup {} slope-pass {} ratio-pass {} pass {}",
        fnum(rep.claimed_q),
        fnum(rep.fitted_slope),
        fnum(rep.sup_overall),
        rep.slope_pass,
        rep.ratio_pass,
        rep.pass
    )
    .unwrap();
    for w in &rep.window_sups {
        writeln!(
            out,
            "{label}-window {} {} sup {}",
            fnum(w.t_lo),
            fnum(w.t_hi),
            fnum(w.sup)
        )
        .unwrap();
    }
    out
}

pub fn gamma_summary(diag: &GammaDiagnostics<f64>) -> String {
    let mut out = String::new();
    writeln!(out, "eigenvector-cond {}", fnum(diag.cond_p0)).unwrap();
    for (j, lambda) in diag.eigenvalues.iter().enumerate() {
        writeln!(
            out,
            "eigenvalue j {} {} {}",
            j + 1,
            fnum(lambda.re),
            fnum(lambda.im)
        )
        .unwrap();
    }
    for (l, per_j) in &diag.gammas {
        for (j, g) in per_j.iter().enumerate() {
            writeln!(out, "gamma l {} j {} {} {}", l, j + 1, fnum(g.re), fnum(g.im)).unwrap();
        }
    }
    out
}

pub fn count_summary(count: &ParameterCount<f64>) -> String {
    let mut out = String::new();
    writeln!(out, "parameter-count {}", count.count).unwrap();
    for v in &count.verdicts {
        let integral = v
            .final_integral
            .map(|x| format!(" integral {}", fnum(x)))
            .unwrap_or_default();
        let coherent = v
            .sign_coherent
            .map(|s| format!(" sign-coherent {s}"))
            .unwrap_or_default();
        writeln!(
            out,
            "index j {} lambda {} {} counts {}{}{}",
            v.j,
            fnum(v.lambda.re),
            fnum(v.lambda.im),
            v.counts,
            integral,
            coherent
        )
        .unwrap();
    }
    out
}
