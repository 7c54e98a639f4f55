use alloc::string::String;
use alloc::vec::Vec;

use super::rule::Rule;
use super::variable::{LinguisticVariable, Universe, VarKind};
use super::FisError;

/// Operator choices for the inference pipeline.
///
/// Only the min / min / max / centroid combination is implemented; the
/// enums mark where alternatives would plug in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InferenceSettings {
    pub conjunction: TNorm,
    pub implication: TNorm,
    pub aggregation: SNorm,
    pub defuzzifier: Defuzzifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[non_exhaustive]
pub enum TNorm {
    #[default]
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[non_exhaustive]
pub enum SNorm {
    #[default]
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[non_exhaustive]
pub enum Defuzzifier {
    #[default]
    Centroid,
}

/// Rule with clause names resolved to `(variable index, term index)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct CompiledRule {
    pub antecedent: Vec<(usize, usize)>,
    pub consequent: Vec<(usize, usize)>,
}

/// A complete Mamdani system: variables, rule bank and settings.
///
/// Variables are stored inputs first, then outputs, each group in
/// declaration order. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct FisDefinition {
    variables: Vec<LinguisticVariable>,
    rules: Vec<Rule>,
    settings: InferenceSettings,
    n_inputs: usize,
    compiled: Vec<CompiledRule>,
}

impl FisDefinition {
    pub fn new(variables: Vec<LinguisticVariable>, rules: Vec<Rule>) -> Result<Self, FisError> {
        Self::with_settings(variables, rules, InferenceSettings::default())
    }

    pub fn with_settings(
        variables: Vec<LinguisticVariable>,
        rules: Vec<Rule>,
        settings: InferenceSettings,
    ) -> Result<Self, FisError> {
        let (mut ordered, outputs): (Vec<_>, Vec<_>) = variables.into_iter().partition(|v| v.kind() == VarKind::Input);
        let n_inputs = ordered.len();
        ordered.extend(outputs);
        if n_inputs == 0 {
            return Err(FisError::NoInputs);
        }
        for (i, v) in ordered.iter().enumerate() {
            if ordered[..i].iter().any(|o| o.name() == v.name()) {
                return Err(FisError::DuplicateVariable(String::from(v.name())));
            }
        }

        let mut compiled = Vec::with_capacity(rules.len());
        for (ri, rule) in rules.iter().enumerate() {
            let index = ri + 1;
            let resolve = |clauses: &[super::Clause], kind: VarKind| -> Result<Vec<(usize, usize)>, FisError> {
                clauses
                    .iter()
                    .map(|c| {
                        let vi = ordered
                            .iter()
                            .position(|v| v.name() == c.variable)
                            .ok_or_else(|| FisError::RuleUnknownVariable { rule: index, variable: c.variable.clone() })?;
                        let var = &ordered[vi];
                        if var.kind() != kind {
                            return Err(FisError::RuleWrongKind { rule: index, variable: c.variable.clone(), expected: kind });
                        }
                        let ti = var.term_index(&c.term).ok_or_else(|| FisError::RuleUnknownTerm {
                            rule: index,
                            variable: c.variable.clone(),
                            term: c.term.clone(),
                        })?;
                        Ok((vi, ti))
                    })
                    .collect()
            };
            compiled.push(CompiledRule {
                antecedent: resolve(rule.antecedent(), VarKind::Input)?,
                consequent: resolve(rule.consequent(), VarKind::Output)?,
            });
        }

        Ok(Self { variables: ordered, rules, settings, n_inputs, compiled })
    }

    pub fn variables(&self) -> &[LinguisticVariable] {
        &self.variables
    }

    pub fn inputs(&self) -> &[LinguisticVariable] {
        &self.variables[..self.n_inputs]
    }

    pub fn outputs(&self) -> &[LinguisticVariable] {
        &self.variables[self.n_inputs..]
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn settings(&self) -> InferenceSettings {
        self.settings
    }

    pub fn variable(&self, name: &str) -> Option<&LinguisticVariable> {
        self.variables.iter().find(|v| v.name() == name)
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name() == name)
    }

    /// Index into [`outputs`](Self::outputs) for an output variable.
    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.outputs().iter().position(|v| v.name() == name)
    }

    pub(crate) fn compiled(&self) -> &[CompiledRule] {
        &self.compiled
    }

    pub(crate) fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Copy of this definition with one variable moved to a new universe.
    pub fn with_universe(&self, variable: &str, universe: Universe) -> Result<Self, FisError> {
        let vi = self.variable_index(variable).ok_or_else(|| FisError::UnknownVariable(String::from(variable)))?;
        let mut vars = self.variables.clone();
        vars[vi] = vars[vi].with_universe(universe)?;
        Self::with_settings(vars, self.rules.clone(), self.settings)
    }
}
