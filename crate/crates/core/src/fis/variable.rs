use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::mf::{PiecewiseLinearMF, Shape};
use super::FisError;
use crate::math::floor;

/// Closed interval a variable ranges over, plus the sampling step used when
/// an output set is discretised for defuzzification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Universe {
    lo: f64,
    hi: f64,
    resolution: f64,
}

impl Universe {
    /// Requires `lo < hi`, `resolution > 0` and at least ten steps across.
    pub fn new(lo: f64, hi: f64, resolution: f64) -> Result<Self, FisError> {
        let ok = lo.is_finite()
            && hi.is_finite()
            && resolution.is_finite()
            && lo < hi
            && resolution > 0.0
            && (hi - lo) / resolution >= 10.0;
        if ok {
            Ok(Self { lo, hi, resolution })
        } else {
            Err(FisError::InvalidUniverse { lo, hi, resolution })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    /// `floor((hi - lo) / resolution) + 1`. The small slack absorbs
    /// representation error when the span is an exact multiple.
    pub fn sample_count(&self) -> usize {
        floor((self.hi - self.lo) / self.resolution + 1e-9) as usize + 1
    }

    #[inline]
    pub fn sample(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.resolution
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Input,
    Output,
}

impl VarKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VarKind::Input => "input",
            VarKind::Output => "output",
        }
    }
}

/// A named term. `shape` is kept when the term was built from one of the
/// standard constructors so it can be written back out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    name: String,
    shape: Option<Shape>,
    mf: PiecewiseLinearMF,
}

impl Term {
    pub fn new(name: impl Into<String>, shape: Shape) -> Result<Self, FisError> {
        Ok(Self { name: name.into(), shape: Some(shape), mf: shape.to_mf()? })
    }

    pub fn from_mf(name: impl Into<String>, mf: PiecewiseLinearMF) -> Self {
        Self { name: name.into(), shape: None, mf }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> Option<&Shape> {
        self.shape.as_ref()
    }

    pub fn mf(&self) -> &PiecewiseLinearMF {
        &self.mf
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticVariable {
    name: String,
    kind: VarKind,
    universe: Universe,
    terms: Vec<Term>,
}

impl LinguisticVariable {
    pub fn new(name: impl Into<String>, kind: VarKind, universe: Universe, terms: Vec<Term>) -> Result<Self, FisError> {
        let name = name.into();
        if terms.is_empty() {
            return Err(FisError::EmptyTermSet(name));
        }
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].iter().any(|o| o.name == t.name) {
                return Err(FisError::DuplicateTerm { variable: name, term: t.name.clone() });
            }
            let (first, last) = t.mf.span();
            if !universe.contains(first) || !universe.contains(last) {
                return Err(FisError::TermOutsideUniverse { variable: name, term: t.name.clone() });
            }
        }
        Ok(Self { name, kind, universe, terms })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> VarKind {
        self.kind
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term_index(&self, name: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.name == name)
    }

    /// Same variable on a different universe. Terms must still fit.
    pub fn with_universe(&self, universe: Universe) -> Result<Self, FisError> {
        Self::new(self.name.clone(), self.kind, universe, self.terms.clone())
    }

    /// Degree of every term at `crisp`, in term order.
    pub fn fuzzify(&self, crisp: f64) -> Result<Fuzzified<'_>, FisError> {
        if self.kind != VarKind::Input {
            return Err(FisError::NotAnInput(self.name.clone()));
        }
        if !crisp.is_finite() {
            return Err(FisError::NonFiniteInput { variable: self.name.clone(), value: crisp });
        }
        Ok(Fuzzified { var: self, degrees: self.degrees_at(crisp) })
    }

    pub(crate) fn degrees_at(&self, x: f64) -> Vec<f64> {
        self.terms.iter().map(|t| t.mf.evaluate(x)).collect()
    }
}

/// Result of fuzzifying one crisp value.
#[derive(Debug, Clone, PartialEq)]
pub struct Fuzzified<'a> {
    var: &'a LinguisticVariable,
    degrees: Vec<f64>,
}

impl<'a> Fuzzified<'a> {
    pub fn variable_name(&self) -> &'a str {
        &self.var.name
    }

    pub fn degree(&self, term: &str) -> Option<f64> {
        self.var.term_index(term).map(|i| self.degrees[i])
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a str, f64)> + '_ {
        self.var.terms.iter().map(|t| t.name.as_str()).zip(self.degrees.iter().copied())
    }
}
