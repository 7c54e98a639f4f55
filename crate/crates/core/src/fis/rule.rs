use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::variable::Fuzzified;
use super::FisError;

/// `<variable> IS <term>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    pub variable: String,
    pub term: String,
}

impl Clause {
    pub fn new(variable: impl Into<String>, term: impl Into<String>) -> Self {
        Self { variable: variable.into(), term: term.into() }
    }
}

/// `IF a AND b ... THEN x, y ...`. Antecedent clauses are conjoined.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    antecedent: Vec<Clause>,
    consequent: Vec<Clause>,
}

impl Rule {
    pub fn new(antecedent: Vec<Clause>, consequent: Vec<Clause>) -> Result<Self, FisError> {
        if antecedent.is_empty() {
            return Err(FisError::EmptyAntecedent);
        }
        if consequent.is_empty() {
            return Err(FisError::EmptyConsequent);
        }
        for side in [&antecedent, &consequent] {
            for (i, c) in side.iter().enumerate() {
                if side[..i].iter().any(|o| o.variable == c.variable) {
                    return Err(FisError::RepeatedVariable(c.variable.clone()));
                }
            }
        }
        Ok(Self { antecedent, consequent })
    }

    pub fn antecedent(&self) -> &[Clause] {
        &self.antecedent
    }

    pub fn consequent(&self) -> &[Clause] {
        &self.consequent
    }

    pub fn targets(&self, output: &str) -> bool {
        self.consequent.iter().any(|c| c.variable == output)
    }
}

impl core::fmt::Display for Clause {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} IS {}", self.variable, self.term)
    }
}

/// Rulebank syntax without the `rule:` prefix.
impl core::fmt::Display for Rule {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("IF ")?;
        for (i, c) in self.antecedent.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(" THEN ")?;
        for (i, c) in self.consequent.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Firing strength: the minimum clause degree.
pub fn fire_rule(rule: &Rule, fuzzified: &[Fuzzified<'_>]) -> Result<f64, FisError> {
    let mut strength = 1.0_f64;
    for clause in &rule.antecedent {
        let f = fuzzified
            .iter()
            .find(|f| f.variable_name() == clause.variable)
            .ok_or_else(|| FisError::UnknownVariable(clause.variable.clone()))?;
        let d = f.degree(&clause.term).ok_or_else(|| FisError::UnknownTerm {
            variable: clause.variable.clone(),
            term: clause.term.clone(),
        })?;
        strength = strength.min(d);
    }
    Ok(strength)
}
