use alloc::string::String;
use core::fmt::Write;

use super::lexer::is_identifier;
use super::DslError;
use crate::fis::{FisDefinition, LinguisticVariable};

const INDENT: &str = "    ";

fn check_name(name: &str) -> Result<(), DslError> {
    if is_identifier(name) {
        Ok(())
    } else {
        Err(DslError::Unrepresentable(alloc::format!("`{name}` is not a valid rulebank identifier")))
    }
}

fn write_var(out: &mut String, v: &LinguisticVariable) -> Result<(), DslError> {
    check_name(v.name())?;
    let u = v.universe();
    let _ = writeln!(
        out,
        "var {} : {} range {} {} resolution {} {{",
        v.name(),
        v.kind().as_str(),
        u.lo(),
        u.hi(),
        u.resolution()
    );
    for t in v.terms() {
        check_name(t.name())?;
        let shape = t.shape().ok_or_else(|| {
            DslError::Unrepresentable(alloc::format!(
                "term `{}` of `{}` uses raw breakpoints, which the rulebank format cannot express",
                t.name(),
                v.name()
            ))
        })?;
        let _ = writeln!(out, "{INDENT}{} = {shape}", t.name());
    }
    out.push_str("}\n");
    Ok(())
}

/// Canonical text: inputs, then outputs (declaration order), then rules,
/// with fixed indentation and every number written in shortest
/// round-tripping decimal form.
pub fn serialize_rulebank(def: &FisDefinition) -> Result<String, DslError> {
    let mut out = String::new();
    for (i, v) in def.variables().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write_var(&mut out, v)?;
    }
    if !def.rules().is_empty() {
        out.push('\n');
    }
    for rule in def.rules() {
        let _ = writeln!(out, "rule: {rule}");
    }
    Ok(out)
}
