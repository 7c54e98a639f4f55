//! The `.fzb` rulebank format.
//!
//! ```text
//! # comments run to end of line
//! var ph : input range 0 14 resolution 0.01 {
//!     weak_acid = triangle(1, 4, 5.5)
//!     normal = trapezoid(4, 5.5, 6.5, 8)
//! }
//! var ph_up : output range 0 3000 resolution 1 {
//!     fast = shoulder_down(300, 1800)
//! }
//! rule: IF ph IS weak_acid THEN ph_up IS fast
//! ```
//!
//! Identifiers match `[a-z_][a-z0-9_]*`; `IF IS AND THEN` are upper-case
//! keywords. Numbers are plain decimals (optional sign and fraction, no
//! exponent). Only the four shape constructors are accepted. When
//! `resolution` is omitted it defaults to 1 for ranges at least ten units
//! wide and to a hundredth of the range otherwise.

mod lexer;
mod parser;
mod serialize;
mod validate;

use alloc::string::String;
use alloc::vec::Vec;

pub use lexer::{is_identifier, Span};
pub use parser::default_resolution;
pub use serialize::serialize_rulebank;
pub use validate::{validate, Diagnostic, Severity, Subject};

use crate::fis::FisDefinition;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DslError {
    #[error("{line}:{column}: expected {}, found {found}", expected.join(" or "))]
    Syntax { line: usize, column: usize, expected: Vec<&'static str>, found: String },
    #[error("{line}:{column}: {message}")]
    Semantic { line: usize, column: usize, message: String },
    #[error("cannot serialize: {0}")]
    Unrepresentable(String),
}

impl DslError {
    pub fn location(&self) -> Option<(usize, usize)> {
        match self {
            DslError::Syntax { line, column, .. } | DslError::Semantic { line, column, .. } => Some((*line, *column)),
            DslError::Unrepresentable(_) => None,
        }
    }
}

/// Declaration sites recorded while parsing.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct SourceMap {
    variables: Vec<(String, Span)>,
    rules: Vec<Span>,
}

impl SourceMap {
    fn locate(&self, subject: &Subject) -> Span {
        let fallback = Span { line: 1, column: 1, len: 0 };
        match subject {
            Subject::Variable(name) => {
                self.variables.iter().find(|(n, _)| n == name).map(|(_, s)| *s).unwrap_or(fallback)
            }
            Subject::Rule(i) => self.rules.get(i.wrapping_sub(1)).copied().unwrap_or(fallback),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocatedDiagnostic {
    pub line: usize,
    pub column: usize,
    pub diagnostic: Diagnostic,
}

/// Parse text into a validated definition.
pub fn parse_rulebank(text: &str) -> Result<FisDefinition, DslError> {
    parser::parse(text).map(|(def, _)| def)
}

/// Source text, the definition it encodes and located diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RulebankDocument {
    source: String,
    definition: FisDefinition,
    diagnostics: Vec<LocatedDiagnostic>,
}

impl RulebankDocument {
    pub fn parse(text: &str) -> Result<Self, DslError> {
        let (definition, map) = parser::parse(text)?;
        let diagnostics = validate(&definition)
            .into_iter()
            .map(|d| {
                let span = map.locate(&d.subject);
                LocatedDiagnostic { line: span.line, column: span.column, diagnostic: d }
            })
            .collect();
        Ok(Self { source: String::from(text), definition, diagnostics })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn definition(&self) -> &FisDefinition {
        &self.definition
    }

    pub fn into_definition(self) -> FisDefinition {
        self.definition
    }

    pub fn diagnostics(&self) -> &[LocatedDiagnostic] {
        &self.diagnostics
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fis::{Clause, LinguisticVariable, Rule, Shape, Term, Universe, VarKind};
    use alloc::vec;

    const MINIMAL: &str = "\
var x : input range 0 10 {
    low = shoulder_down(2, 5)
}
var y : output range 0 100 resolution 1 {
    small = triangle(0, 10, 20)
}
rule: IF x IS low THEN y IS small
";

    #[test]
    fn minimal_document() {
        let def = parse_rulebank(MINIMAL).unwrap();
        assert_eq!(def.variables().len(), 2);
        assert_eq!(def.rules().len(), 1);
        assert_eq!(def.inputs()[0].universe().resolution(), 1.0);
    }

    #[test]
    fn small_range_default_resolution() {
        let def = parse_rulebank("var x : input range 0 5 {\n a = shoulder_up(1, 2)\n}\n").unwrap();
        assert_eq!(def.inputs()[0].universe().resolution(), 0.05);
    }

    #[test]
    fn unknown_term_names_term_and_rule() {
        let text = MINIMAL.replace("rule: IF x IS low", "rule: IF x IS low THEN y IS small\nrule: IF x IS medium");
        let err = parse_rulebank(&text).unwrap_err();
        let msg = alloc::format!("{err}");
        assert!(msg.contains("medium") && msg.contains("rule 2"), "{msg}");
        assert_eq!(err.location(), Some((8, 15)));
    }

    #[test]
    fn syntax_error_reports_expected() {
        let err = parse_rulebank("var x input range 0 10 {}").unwrap_err();
        match err {
            DslError::Syntax { line, column, expected, .. } => {
                assert_eq!((line, column), (1, 7));
                assert_eq!(expected, vec!["`:`"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors() {
        let dup = "var x : input range 0 10 {\n a = shoulder_up(1, 2)\n}\nvar x : input range 0 10 {\n b = shoulder_up(1, 2)\n}\n";
        assert!(matches!(parse_rulebank(dup), Err(DslError::Semantic { line: 4, column: 5, .. })));
        let outside = "var x : input range 0 10 {\n a = triangle(5, 9, 12)\n}\n";
        assert!(matches!(parse_rulebank(outside), Err(DslError::Semantic { line: 2, column: 2, .. })));
        let bad_shape = "var x : input range 0 10 {\n a = bell(1, 2, 3)\n}\n";
        assert!(matches!(parse_rulebank(bad_shape), Err(DslError::Semantic { line: 2, column: 6, .. })));
        let decreasing = "var x : input range 0 10 {\n a = triangle(3, 2, 4)\n}\n";
        assert!(parse_rulebank(decreasing).is_err());
        let wrong_side = MINIMAL.replace("THEN y IS small", "THEN x IS low");
        assert!(parse_rulebank(&wrong_side).is_err());
    }

    #[test]
    fn no_scientific_notation() {
        assert!(parse_rulebank("var x : input range 0 1e3 {\n a = shoulder_up(1, 2)\n}\n").is_err());
    }

    #[test]
    fn round_trip_minimal() {
        let def = parse_rulebank(MINIMAL).unwrap();
        let text = serialize_rulebank(&def).unwrap();
        assert_eq!(parse_rulebank(&text).unwrap(), def);
        assert_eq!(serialize_rulebank(&parse_rulebank(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn built_definition_serializes_canonically() {
        let x = LinguisticVariable::new(
            "x",
            VarKind::Input,
            Universe::new(-5.0, 5.0, 0.1).unwrap(),
            vec![Term::new("neg", Shape::shoulder_down(-3.0, 0.0)).unwrap(), Term::new("pos", Shape::shoulder_up(0.0, 3.0)).unwrap()],
        )
        .unwrap();
        let y = LinguisticVariable::new(
            "y",
            VarKind::Output,
            Universe::new(0.0, 10.0, 0.5).unwrap(),
            vec![Term::new("mid", Shape::trapezoid(2.0, 4.0, 6.0, 8.0)).unwrap()],
        )
        .unwrap();
        // outputs declared first still serialize after inputs
        let def = crate::fis::FisDefinition::new(
            vec![y, x],
            vec![Rule::new(vec![Clause::new("x", "neg")], vec![Clause::new("y", "mid")]).unwrap()],
        )
        .unwrap();
        let text = serialize_rulebank(&def).unwrap();
        let re = parse_rulebank(&text).unwrap();
        assert_eq!(re, def);
        assert_eq!(serialize_rulebank(&re).unwrap(), text);
        assert!(text.starts_with("var x : input range -5 5 resolution 0.1 {\n    neg = shoulder_down(-3, 0)\n"));
    }

    #[test]
    fn raw_breakpoints_not_serializable() {
        let mf = crate::fis::PiecewiseLinearMF::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)]).unwrap();
        let x = LinguisticVariable::new("x", VarKind::Input, Universe::new(0.0, 10.0, 0.1).unwrap(), vec![Term::from_mf("t", mf)])
            .unwrap();
        let def = crate::fis::FisDefinition::new(vec![x], vec![]).unwrap();
        assert!(matches!(serialize_rulebank(&def), Err(DslError::Unrepresentable(_))));
    }

    #[test]
    fn empty_rule_bank_is_an_error_per_output() {
        let text = "var x : input range 0 10 {\n a = shoulder_up(1, 2)\n}\nvar y : output range 0 10 {\n b = shoulder_up(1, 2)\n}\nvar z : output range 0 10 {\n b = shoulder_up(1, 2)\n}\n";
        let doc = RulebankDocument::parse(text).unwrap();
        let errors: Vec<_> = doc.diagnostics().iter().filter(|d| d.diagnostic.severity == Severity::Error).collect();
        assert_eq!(errors.len(), 2);
        assert_eq!((errors[0].line, errors[0].column), (4, 5));
        assert_eq!((errors[1].line, errors[1].column), (7, 5));
    }

    #[test]
    fn unused_output_single_warning() {
        let text = alloc::format!("{MINIMAL}var z : output range 0 10 {{\n b = shoulder_up(1, 2)\n}}\n");
        let doc = RulebankDocument::parse(&text).unwrap();
        let z: Vec<_> = doc
            .diagnostics()
            .iter()
            .filter(|d| d.diagnostic.severity == Severity::Warning && d.diagnostic.subject == Subject::Variable("z".into()))
            .collect();
        assert_eq!(z.len(), 1);
        assert!(z[0].diagnostic.message.contains("`z`"));
        assert_eq!(z[0].line, 8);
    }

    #[test]
    fn parsing_is_deterministic() {
        assert_eq!(parse_rulebank(MINIMAL).unwrap(), parse_rulebank(MINIMAL).unwrap());
    }
}
