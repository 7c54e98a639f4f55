use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::fis::{FisDefinition, LinguisticVariable, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

/// What a diagnostic is about; a document maps this to a source location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subject {
    Variable(String),
    /// 1-based rule index.
    Rule(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub subject: Subject,
    pub message: String,
}

// Beyond this many input-term combinations the coverage scan is skipped.
const MAX_COMBINATIONS: usize = 4096;

/// Midpoint of the region where the term reaches its peak degree,
/// clipped to the universe.
fn core_point(var: &LinguisticVariable, term: &Term) -> f64 {
    let pts = term.mf().breakpoints();
    let h = term.mf().height();
    let first = pts.iter().position(|p| p.1 == h).unwrap_or(0);
    let last = pts.iter().rposition(|p| p.1 == h).unwrap_or(0);
    let u = var.universe();
    let lo = if first == 0 { u.lo() } else { pts[first].0 };
    let hi = if last + 1 == pts.len() { u.hi() } else { pts[last].0 };
    (lo + hi) / 2.0
}

/// Static checks over a definition. Never fails; problems come back as
/// diagnostics:
///
/// - output variables no rule targets (an error when the rule bank is empty),
/// - coverage holes: combinations of input term cores where no rule for a
///   given output fires,
/// - term sets that are not a partition of unity (informational).
pub fn validate(def: &FisDefinition) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for v in def.outputs() {
        if def.rules().is_empty() {
            out.push(Diagnostic {
                severity: Severity::Error,
                subject: Subject::Variable(String::from(v.name())),
                message: format!("rule bank is empty; output `{}` can never be produced", v.name()),
            });
        } else if !def.rules().iter().any(|r| r.targets(v.name())) {
            out.push(Diagnostic {
                severity: Severity::Warning,
                subject: Subject::Variable(String::from(v.name())),
                message: format!("output `{}` is never targeted by any rule", v.name()),
            });
        }
    }

    if !def.rules().is_empty() {
        coverage_holes(def, &mut out);
    }

    for v in def.variables() {
        let u = v.universe();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..u.sample_count() {
            let s: f64 = v.terms().iter().map(|t| t.mf().evaluate(u.sample(i))).sum();
            lo = lo.min(s);
            hi = hi.max(s);
        }
        if (lo - 1.0).abs() > 1e-9 || (hi - 1.0).abs() > 1e-9 {
            out.push(Diagnostic {
                severity: Severity::Info,
                subject: Subject::Variable(String::from(v.name())),
                message: format!("terms of `{}` are not a partition of unity (degree sum spans {lo}..{hi})", v.name()),
            });
        }
    }
    out
}

fn coverage_holes(def: &FisDefinition, out: &mut Vec<Diagnostic>) {
    let inputs = def.inputs();
    let total = inputs.iter().try_fold(1usize, |acc, v| acc.checked_mul(v.terms().len()));
    match total {
        Some(n) if n <= MAX_COMBINATIONS => {}
        _ => {
            if let Some(v) = inputs.first() {
                out.push(Diagnostic {
                    severity: Severity::Info,
                    subject: Subject::Variable(String::from(v.name())),
                    message: String::from("too many input term combinations; coverage scan skipped"),
                });
            }
            return;
        }
    }
    let points: Vec<Vec<f64>> = inputs.iter().map(|v| v.terms().iter().map(|t| core_point(v, t)).collect()).collect();
    let targeted: Vec<usize> = (0..def.outputs().len())
        .filter(|&oi| def.rules().iter().any(|r| r.targets(def.outputs()[oi].name())))
        .collect();

    let mut idx = alloc::vec![0usize; inputs.len()];
    loop {
        let crisp: Vec<f64> = idx.iter().enumerate().map(|(vi, &ti)| points[vi][ti]).collect();
        if let Ok(strengths) = def.rule_strengths(&crisp) {
            for &oi in &targeted {
                let name = def.outputs()[oi].name();
                let fires = def.rules().iter().zip(&strengths).any(|(r, &s)| s > 0.0 && r.targets(name));
                if !fires {
                    let ctx: Vec<String> = idx
                        .iter()
                        .enumerate()
                        .map(|(vi, &ti)| format!("{} is `{}`", inputs[vi].name(), inputs[vi].terms()[ti].name()))
                        .collect();
                    out.push(Diagnostic {
                        severity: Severity::Warning,
                        subject: Subject::Variable(String::from(name)),
                        message: format!("no rule for `{name}` fires when {}", ctx.join(" and ")),
                    });
                }
            }
        }
        // odometer increment
        let mut k = inputs.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < inputs[k].terms().len() {
                break;
            }
            idx[k] = 0;
        }
    }
}
