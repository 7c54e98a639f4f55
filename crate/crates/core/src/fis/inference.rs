use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::definition::FisDefinition;
use super::rule::Rule;
use super::variable::{LinguisticVariable, Universe, VarKind};
use super::FisError;
use crate::math::ceil;

/// Below this area a set counts as empty and defuzzifies to 0.
pub const EMPTY_AREA: f64 = 1e-12;

/// Implication results of all rules for one output, merged by max and
/// sampled on the output universe grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedSet {
    variable: String,
    universe: Universe,
    degrees: Vec<f64>,
}

impl AggregatedSet {
    /// Wrap pre-sampled degrees. Length must match the universe grid and
    /// every degree must lie in [0, 1].
    pub fn from_samples(variable: impl Into<String>, universe: Universe, degrees: Vec<f64>) -> Result<Self, FisError> {
        if degrees.len() != universe.sample_count() {
            return Err(FisError::SampleCount { expected: universe.sample_count(), got: degrees.len() });
        }
        if degrees.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(FisError::InvalidBreakpoints("degrees must lie in [0, 1]"));
        }
        Ok(Self { variable: variable.into(), universe, degrees })
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.iter().all(|&d| d == 0.0)
    }

    /// `[x_first, x_last]` of the samples with nonzero degree.
    pub fn support(&self) -> Option<(f64, f64)> {
        let first = self.degrees.iter().position(|&d| d > 0.0)?;
        let last = self.degrees.iter().rposition(|&d| d > 0.0)?;
        Some((self.universe.sample(first), self.universe.sample(last)))
    }
}

/// Clip each fired rule's consequent term at its strength (min) and merge
/// the clipped sets by max. Rules not targeting `output` are ignored.
pub fn aggregate(fired: &[(&Rule, f64)], output: &LinguisticVariable) -> Result<AggregatedSet, FisError> {
    let mut clip = vec![0.0_f64; output.terms().len()];
    for (rule, strength) in fired {
        for c in rule.consequent().iter().filter(|c| c.variable == output.name()) {
            let ti = output.term_index(&c.term).ok_or_else(|| FisError::UnknownTerm {
                variable: c.variable.clone(),
                term: c.term.clone(),
            })?;
            clip[ti] = clip[ti].max(strength.clamp(0.0, 1.0));
        }
    }
    Ok(sample_clipped(output, &clip))
}

// max_r min(s_r, mu_t(x)) == min(max_r s_r, mu_t(x)) for rules sharing a
// term, so one clip level per term is enough.
fn sample_clipped(output: &LinguisticVariable, clip: &[f64]) -> AggregatedSet {
    let u = *output.universe();
    let active: Vec<_> = output.terms().iter().zip(clip).filter(|(_, &s)| s > 0.0).map(|(t, &s)| (t.mf(), s)).collect();
    let n = u.sample_count();
    let degrees = if active.is_empty() {
        vec![0.0; n]
    } else {
        (0..n)
            .map(|i| {
                let x = u.sample(i);
                active.iter().fold(0.0_f64, |acc, (mf, s)| acc.max(mf.evaluate(x).min(*s)))
            })
            .collect()
    };
    AggregatedSet { variable: String::from(output.name()), universe: u, degrees }
}

// Same value as sample_clipped followed by defuzzify_centroid, to rounding,
// without touching every sample. The aggregated degree is piecewise linear
// with kinks only at term breakpoints, clip crossings and crossings between
// clipped terms; between kinks the grid sums of d and x*d are arithmetic
// series.
fn clipped_centroid(output: &LinguisticVariable, clip: &[f64]) -> f64 {
    let active: Vec<_> = output.terms().iter().zip(clip).filter(|(_, &s)| s > 0.0).map(|(t, &s)| (t.mf(), s)).collect();
    if active.is_empty() {
        return 0.0;
    }
    let term = |k: usize, x: f64| active[k].0.evaluate(x).min(active[k].1);
    let degree = |x: f64| (0..active.len()).fold(0.0_f64, |acc, k| acc.max(term(k, x)));
    let u = output.universe();
    let (lo, h, n) = (u.lo(), u.resolution(), u.sample_count());
    let x_end = u.sample(n - 1);
    if n == 1 {
        return if 0.5 * degree(lo) < EMPTY_AREA { 0.0 } else { lo };
    }

    let mut kinks = vec![lo, x_end];
    for (mf, s) in &active {
        for w in mf.breakpoints().windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            kinks.push(x0);
            if (y0 - s) * (y1 - s) < 0.0 {
                kinks.push(x0 + (s - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        kinks.push(mf.span().1);
    }
    kinks.retain(|&x| x >= lo && x <= x_end);
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    let mut crossings = Vec::new();
    for w in kinks.windows(2) {
        let (p, q) = (w[0], w[1]);
        for j in 0..active.len() {
            for k in j + 1..active.len() {
                let (dp, dq) = (term(j, p) - term(k, p), term(j, q) - term(k, q));
                if dp * dq < 0.0 {
                    crossings.push(p + (q - p) * dp / (dp - dq));
                }
            }
        }
    }
    kinks.extend(crossings);
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();

    // interval [p, q) owns the samples at or after p and before q; the
    // last one also owns x_end
    let first_index = |x: f64| ceil((x - lo) / h).clamp(0.0, (n - 1) as f64) as usize;
    let (mut area, mut moment) = (0.0, 0.0);
    for (w, last) in kinks.windows(2).zip((0..kinks.len() - 1).map(|i| i + 2 == kinks.len())) {
        let a = first_index(w[0]);
        let b = if last { n - 1 } else { first_index(w[1]) };
        let b = if last || b == 0 { b } else if u.sample(b) >= w[1] { b - 1 } else { b };
        if b < a || (!last && u.sample(a) >= w[1]) {
            continue;
        }
        let (xa, da, db) = (u.sample(a), degree(u.sample(a)), degree(u.sample(b)));
        let m = (b - a) as f64;
        let slope = if b > a { (db - da) / m } else { 0.0 };
        let s1 = m * (m + 1.0) / 2.0;
        let s2 = s1 * (2.0 * m + 1.0) / 3.0;
        area += (m + 1.0) * (da + db) / 2.0;
        moment += (m + 1.0) * xa * da + (xa * slope + h * da) * s1 + h * slope * s2;
    }
    let (d_first, d_last) = (degree(lo), degree(x_end));
    area -= 0.5 * (d_first + d_last);
    moment -= 0.5 * (d_first * lo + d_last * x_end);
    if area < EMPTY_AREA {
        0.0
    } else {
        moment / area
    }
}

/// Centre of gravity over the sample grid with trapezoidal end weights.
/// Returns exactly 0 for an empty set.
pub fn defuzzify_centroid(set: &AggregatedSet) -> f64 {
    let u = &set.universe;
    let n = set.degrees.len();
    let mut area = 0.0;
    let mut moment = 0.0;
    for (i, &d) in set.degrees.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        area += w * d;
        moment += w * d * u.sample(i);
    }
    if area < EMPTY_AREA {
        0.0
    } else {
        moment / area
    }
}

/// Full pipeline result: per-rule strengths and one crisp value per
/// evaluated output.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    strengths: Vec<f64>,
    outputs: Vec<Option<f64>>,
}

impl Inference {
    /// Firing strength of each rule, in rule-bank order.
    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// Crisp value of output `i` (index into `FisDefinition::outputs`),
    /// `None` when that output was not requested.
    pub fn output(&self, i: usize) -> Option<f64> {
        self.outputs.get(i).copied().flatten()
    }
}

impl FisDefinition {
    /// Fuzzify, fire, aggregate and defuzzify every output. `inputs` must
    /// name each input variable exactly once.
    pub fn infer(&self, inputs: &[(&str, f64)]) -> Result<BTreeMap<String, f64>, FisError> {
        let crisp = self.crisp_inputs(inputs)?;
        let inf = self.evaluate(&crisp)?;
        Ok(self
            .outputs()
            .iter()
            .enumerate()
            .map(|(i, v)| (String::from(v.name()), inf.output(i).unwrap_or(0.0)))
            .collect())
    }

    /// Order named inputs by input-variable position.
    pub fn crisp_inputs(&self, inputs: &[(&str, f64)]) -> Result<Vec<f64>, FisError> {
        for (name, _) in inputs {
            match self.variable(name) {
                Some(v) if v.kind() == VarKind::Input => {}
                Some(_) => return Err(FisError::NotAnInput(String::from(*name))),
                None => return Err(FisError::UnknownVariable(String::from(*name))),
            }
        }
        self.inputs()
            .iter()
            .map(|v| {
                let mut it = inputs.iter().filter(|(n, _)| *n == v.name());
                let (_, x) = it.next().ok_or_else(|| FisError::MissingInput(String::from(v.name())))?;
                if it.next().is_some() {
                    return Err(FisError::DuplicateInput(String::from(v.name())));
                }
                Ok(*x)
            })
            .collect()
    }

    /// Evaluate all outputs from crisp inputs given in input order.
    pub fn evaluate(&self, crisp: &[f64]) -> Result<Inference, FisError> {
        let all: Vec<usize> = (0..self.outputs().len()).collect();
        self.evaluate_outputs(crisp, &all)
    }

    /// Like [`evaluate`](Self::evaluate) but only defuzzifies the listed
    /// outputs.
    pub fn evaluate_outputs(&self, crisp: &[f64], outputs: &[usize]) -> Result<Inference, FisError> {
        let strengths = self.rule_strengths(crisp)?;
        let mut values = vec![None; self.outputs().len()];
        for &oi in outputs {
            let clip = self.clip_levels(oi, &strengths);
            values[oi] = Some(clipped_centroid(&self.variables()[self.n_inputs() + oi], &clip));
        }
        Ok(Inference { strengths, outputs: values })
    }

    /// Firing strength of every rule.
    pub fn rule_strengths(&self, crisp: &[f64]) -> Result<Vec<f64>, FisError> {
        let inputs = self.inputs();
        if crisp.len() != inputs.len() {
            return Err(FisError::InputArity { expected: inputs.len(), got: crisp.len() });
        }
        let mut degrees = Vec::with_capacity(inputs.len());
        for (v, &x) in inputs.iter().zip(crisp) {
            if !x.is_finite() {
                return Err(FisError::NonFiniteInput { variable: String::from(v.name()), value: x });
            }
            degrees.push(v.degrees_at(x));
        }
        Ok(self
            .compiled()
            .iter()
            .map(|r| r.antecedent.iter().fold(1.0_f64, |s, &(vi, ti)| s.min(degrees[vi][ti])))
            .collect())
    }

    /// Aggregated set for output `oi` given rule strengths.
    pub fn aggregate_output(&self, oi: usize, strengths: &[f64]) -> AggregatedSet {
        let clip = self.clip_levels(oi, strengths);
        sample_clipped(&self.variables()[self.n_inputs() + oi], &clip)
    }

    fn clip_levels(&self, oi: usize, strengths: &[f64]) -> Vec<f64> {
        let var_index = self.n_inputs() + oi;
        let mut clip = vec![0.0_f64; self.variables()[var_index].terms().len()];
        for (rule, &s) in self.compiled().iter().zip(strengths) {
            for &(vi, ti) in &rule.consequent {
                if vi == var_index {
                    clip[ti] = clip[ti].max(s);
                }
            }
        }
        clip
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fis::{Clause, Shape, Term};
    use proptest::prelude::*;

    fn time_output(hi: f64) -> LinguisticVariable {
        LinguisticVariable::new(
            "ph_up",
            VarKind::Output,
            Universe::new(0.0, hi, 1.0).unwrap(),
            vec![
                Term::new("fast", Shape::shoulder_down(300.0, 1800.0)).unwrap(),
                Term::new("slow", Shape::shoulder_up(300.0, 1800.0)).unwrap(),
            ],
        )
        .unwrap()
    }

    fn then(term: &str) -> Rule {
        Rule::new(vec![Clause::new("x", "t")], vec![Clause::new("ph_up", term)]).unwrap()
    }

    #[test]
    fn nothing_targets_output() {
        let out = time_output(3000.0);
        let other = Rule::new(vec![Clause::new("x", "t")], vec![Clause::new("ab_mix", "fast")]).unwrap();
        let set = aggregate(&[(&other, 1.0)], &out).unwrap();
        assert!(set.is_empty());
        assert_eq!(defuzzify_centroid(&set), 0.0);
    }

    #[test]
    fn full_strength_reproduces_term() {
        let out = time_output(3000.0);
        let r = then("slow");
        let set = aggregate(&[(&r, 1.0)], &out).unwrap();
        let mf = out.terms()[1].mf();
        for (i, d) in set.degrees().iter().enumerate() {
            assert_eq!(*d, mf.evaluate(i as f64));
        }
    }

    #[test]
    fn clipped_fast_shoulder_centroid() {
        // plateau 0.64 on [0, 840] and a ramp down to 1800:
        // (0.64*840^2/2 + 0.64*960/2 * 1160) / (0.64*840 + 0.64*960/2)
        let exact = (0.64 * 840.0 * 420.0 + 0.64 * 480.0 * 1160.0) / (0.64 * 840.0 + 0.64 * 480.0);
        let out = time_output(3000.0);
        let r = then("fast");
        let got = defuzzify_centroid(&aggregate(&[(&r, 0.64)], &out).unwrap());
        assert!((got - 689.09).abs() < 1.0, "{got}");
        assert!((got - exact).abs() < 0.01, "{got} vs {exact}");
    }

    #[test]
    fn ph_down_two_term_mix() {
        let out = time_output(3000.0);
        let (f, s) = (then("fast"), then("slow"));
        let got = defuzzify_centroid(&aggregate(&[(&f, 0.15), (&s, 0.63368)], &out).unwrap());
        assert!((got - 1800.89).abs() < 2.0, "{got}");
    }

    #[test]
    fn zero_strength_contributes_nothing() {
        let out = time_output(3000.0);
        let (f, s) = (then("fast"), then("slow"));
        let a = aggregate(&[(&f, 0.0), (&s, 0.5)], &out).unwrap();
        let b = aggregate(&[(&s, 0.5)], &out).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_triangle_centroid() {
        let u = Universe::new(0.0, 100.0, 1.0).unwrap();
        let mf = Shape::triangle(20.0, 45.0, 70.0).to_mf().unwrap();
        let degrees: Vec<f64> = (0..u.sample_count()).map(|i| mf.evaluate(u.sample(i)).min(0.7)).collect();
        let set = AggregatedSet::from_samples("y", u, degrees).unwrap();
        assert!((defuzzify_centroid(&set) - 45.0).abs() <= 0.5);
    }

    #[test]
    fn from_samples_checks_length() {
        let u = Universe::new(0.0, 100.0, 1.0).unwrap();
        assert!(AggregatedSet::from_samples("y", u, vec![0.0; 100]).is_err());
        assert!(AggregatedSet::from_samples("y", u, vec![2.0; 101]).is_err());
    }

    fn random_set() -> impl Strategy<Value = AggregatedSet> {
        (prop::collection::vec(0.0f64..1.0, 12..400), -1e3f64..1e3, 0.01f64..10.0).prop_filter_map("universe", |(d, lo, res)| {
            let n = d.len();
            let u = Universe::new(lo, lo + (n - 1) as f64 * res, res).ok()?;
            // guard float drift in sample_count
            let mut d = d;
            d.resize(u.sample_count(), 0.0);
            AggregatedSet::from_samples("y", u, d).ok()
        })
    }

    proptest! {
        #[test]
        fn centroid_within_support(set in random_set()) {
            if let Some((a, b)) = set.support() {
                let c = defuzzify_centroid(&set);
                prop_assert!(c >= a - 1e-9 && c <= b + 1e-9);
            }
        }

        #[test]
        fn centroid_scale_equivariance(set in random_set(), a in 0.1f64..10.0, b in -1e3f64..1e3) {
            let u = set.universe();
            let v = Universe::new(a * u.lo() + b, a * u.hi() + b, a * u.resolution());
            prop_assume!(v.is_ok());
            let v = v.unwrap();
            let mut d = set.degrees().to_vec();
            d.resize(v.sample_count(), 0.0);
            prop_assume!(v.sample_count() == u.sample_count());
            let scaled = AggregatedSet::from_samples("y", v, d).unwrap();
            let c0 = defuzzify_centroid(&set);
            let c1 = defuzzify_centroid(&scaled);
            if set.is_empty() {
                prop_assert_eq!(c1, 0.0);
            } else {
                prop_assert!((c1 - (a * c0 + b)).abs() <= 1e-6 * (1.0 + c1.abs()));
            }
        }

        #[test]
        fn symmetric_sets_centre(half in prop::collection::vec(0.0f64..1.0, 6..200), res in 0.1f64..5.0) {
            let mut d = half.clone();
            d.extend(half.iter().rev().skip(1));
            let n = d.len();
            let u = Universe::new(0.0, (n - 1) as f64 * res, res);
            prop_assume!(u.is_ok());
            let u = u.unwrap();
            prop_assume!(u.sample_count() == n);
            let set = AggregatedSet::from_samples("y", u, d).unwrap();
            prop_assume!(!set.is_empty());
            let c = u.sample(half.len() - 1);
            prop_assert!((defuzzify_centroid(&set) - c).abs() <= res / 2.0);
        }

        #[test]
        fn segment_sums_match_sampling(
            shapes in prop::collection::vec((0u8..4, prop::collection::vec(0.0f64..1.0, 4)), 1..4),
            clips in prop::collection::vec(0.0f64..1.0, 4),
            lo in -50.0f64..50.0,
            span in 1.0f64..150.0,
            samples in 10.0f64..2000.0,
        ) {
            let u = Universe::new(lo, lo + span, span / samples);
            prop_assume!(u.is_ok());
            let mut terms = Vec::new();
            for (i, (kind, f)) in shapes.into_iter().enumerate() {
                let mut p: Vec<f64> = f.iter().map(|f| lo + f * span).collect();
                p.sort_by(f64::total_cmp);
                let shape = match kind {
                    0 => Shape::shoulder_down(p[0], p[1]),
                    1 => Shape::shoulder_up(p[2], p[3]),
                    2 => Shape::triangle(p[0], p[1], p[3]),
                    _ => Shape::trapezoid(p[0], p[1], p[2], p[3]),
                };
                let t = Term::new(alloc::format!("t{i}"), shape);
                prop_assume!(t.is_ok());
                terms.push(t.unwrap());
            }
            let var = LinguisticVariable::new("y", VarKind::Output, u.unwrap(), terms);
            prop_assume!(var.is_ok());
            let var = var.unwrap();
            let clip = &clips[..var.terms().len()];
            let want = defuzzify_centroid(&sample_clipped(&var, clip));
            let got = clipped_centroid(&var, clip);
            prop_assert!((got - want).abs() <= 1e-7 * (1.0 + want.abs()), "{got} vs {want}");
        }

        #[test]
        fn raising_strength_never_lowers_aggregate(s1 in 0.0f64..1.0, s2 in 0.0f64..1.0, bump in 0.0f64..1.0) {
            let out = time_output(3000.0);
            let (f, s) = (then("fast"), then("slow"));
            let lo = aggregate(&[(&f, s1), (&s, s2)], &out).unwrap();
            let hi = aggregate(&[(&f, (s1 + bump).min(1.0)), (&s, s2)], &out).unwrap();
            for (a, b) in lo.degrees().iter().zip(hi.degrees()) {
                prop_assert!(b >= a);
            }
        }
    }
}
