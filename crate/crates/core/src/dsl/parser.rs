use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::lexer::{tokenize, Keyword, Span, Tok, Token};
use super::{DslError, SourceMap};
use crate::fis::{Clause, FisDefinition, LinguisticVariable, Rule, Shape, Term, Universe, VarKind};

struct TermDecl {
    name: String,
    name_span: Span,
    shape: String,
    shape_span: Span,
    args: Vec<f64>,
}

struct VarDecl {
    name: String,
    name_span: Span,
    kind: VarKind,
    range_span: Span,
    lo: f64,
    hi: f64,
    resolution: Option<f64>,
    terms: Vec<TermDecl>,
}

struct ClauseDecl {
    var: String,
    var_span: Span,
    term: String,
    term_span: Span,
}

struct RuleDecl {
    span: Span,
    antecedent: Vec<ClauseDecl>,
    consequent: Vec<ClauseDecl>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: Vec<&'static str>) -> Result<T, DslError> {
        let t = self.peek();
        Err(DslError::Syntax { line: t.span.line, column: t.span.column, expected, found: format!("{}", t.tok) })
    }

    fn expect(&mut self, want: Tok, what: &'static str) -> Result<Span, DslError> {
        if self.peek().tok == want {
            Ok(self.bump().span)
        } else {
            self.fail(vec![what])
        }
    }

    fn keyword(&mut self, kw: Keyword, what: &'static str) -> Result<Span, DslError> {
        self.expect(Tok::Kw(kw), what)
    }

    fn ident(&mut self, what: &'static str) -> Result<(String, Span), DslError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump().span))
            }
            _ => self.fail(vec![what]),
        }
    }

    fn number(&mut self, what: &'static str) -> Result<f64, DslError> {
        match self.peek().tok {
            Tok::Number(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.fail(vec![what]),
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.bump();
        }
    }

    fn end_of_line(&mut self, also: &'static str) -> Result<(), DslError> {
        match self.peek().tok {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => self.fail(vec![also, "end of line"]),
        }
    }

    fn document(&mut self) -> Result<(Vec<VarDecl>, Vec<RuleDecl>), DslError> {
        let (mut vars, mut rules) = (Vec::new(), Vec::new());
        loop {
            self.skip_newlines();
            match self.peek().tok {
                Tok::Eof => break,
                Tok::Kw(Keyword::Var) => vars.push(self.var_decl()?),
                Tok::Kw(Keyword::Rule) => rules.push(self.rule_decl()?),
                _ => return self.fail(vec!["`var`", "`rule`"]),
            }
        }
        Ok((vars, rules))
    }

    fn var_decl(&mut self) -> Result<VarDecl, DslError> {
        self.keyword(Keyword::Var, "`var`")?;
        let (name, name_span) = self.ident("variable name")?;
        self.expect(Tok::Colon, "`:`")?;
        let kind = match self.peek().tok {
            Tok::Kw(Keyword::Input) => VarKind::Input,
            Tok::Kw(Keyword::Output) => VarKind::Output,
            _ => return self.fail(vec!["`input`", "`output`"]),
        };
        self.bump();
        let range_span = self.keyword(Keyword::Range, "`range`")?;
        let lo = self.number("lower bound")?;
        let hi = self.number("upper bound")?;
        let resolution = if self.peek().tok == Tok::Kw(Keyword::Resolution) {
            self.bump();
            Some(self.number("resolution")?)
        } else {
            None
        };
        self.expect(Tok::LBrace, "`{`")?;
        let mut terms = Vec::new();
        loop {
            self.skip_newlines();
            if self.peek().tok == Tok::RBrace {
                self.bump();
                break;
            }
            let (tname, tspan) = match &self.peek().tok {
                Tok::Ident(_) => self.ident("term name")?,
                _ => return self.fail(vec!["term name", "`}`"]),
            };
            self.expect(Tok::Equals, "`=`")?;
            let (shape, shape_span) = self.ident("shape constructor")?;
            self.expect(Tok::LParen, "`(`")?;
            let mut args = vec![self.number("number")?];
            while self.peek().tok == Tok::Comma {
                self.bump();
                args.push(self.number("number")?);
            }
            self.expect(Tok::RParen, "`)`")?;
            terms.push(TermDecl { name: tname, name_span: tspan, shape, shape_span, args });
        }
        self.end_of_line("`var`")?;
        Ok(VarDecl { name, name_span, kind, range_span, lo, hi, resolution, terms })
    }

    fn clause(&mut self) -> Result<ClauseDecl, DslError> {
        let (var, var_span) = self.ident("variable name")?;
        self.keyword(Keyword::Is, "`IS`")?;
        let (term, term_span) = self.ident("term name")?;
        Ok(ClauseDecl { var, var_span, term, term_span })
    }

    fn rule_decl(&mut self) -> Result<RuleDecl, DslError> {
        let span = self.keyword(Keyword::Rule, "`rule`")?;
        self.expect(Tok::Colon, "`:`")?;
        self.keyword(Keyword::If, "`IF`")?;
        let mut antecedent = vec![self.clause()?];
        loop {
            match self.peek().tok {
                Tok::Kw(Keyword::And) => {
                    self.bump();
                    antecedent.push(self.clause()?);
                }
                Tok::Kw(Keyword::Then) => {
                    self.bump();
                    break;
                }
                _ => return self.fail(vec!["`AND`", "`THEN`"]),
            }
        }
        let mut consequent = vec![self.clause()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            consequent.push(self.clause()?);
        }
        self.end_of_line("`,`")?;
        Ok(RuleDecl { span, antecedent, consequent })
    }
}

fn semantic(span: Span, message: String) -> DslError {
    DslError::Semantic { line: span.line, column: span.column, message }
}

/// Resolution used when a declaration omits it: 1 unit for spans of at
/// least ten units, otherwise a hundredth of the span.
pub fn default_resolution(lo: f64, hi: f64) -> f64 {
    if hi - lo >= 10.0 {
        1.0
    } else {
        (hi - lo) / 100.0
    }
}

pub(super) fn parse(text: &str) -> Result<(FisDefinition, SourceMap), DslError> {
    let toks = tokenize(text)?;
    let (var_decls, rule_decls) = Parser { toks, pos: 0 }.document()?;

    let mut map = SourceMap::default();
    let mut vars: Vec<LinguisticVariable> = Vec::new();
    for vd in &var_decls {
        if vars.iter().any(|v| v.name() == vd.name) {
            return Err(semantic(vd.name_span, format!("duplicate variable `{}`", vd.name)));
        }
        let res = vd.resolution.unwrap_or_else(|| default_resolution(vd.lo, vd.hi));
        let universe = Universe::new(vd.lo, vd.hi, res).map_err(|e| semantic(vd.range_span, format!("{e}")))?;
        let mut terms: Vec<Term> = Vec::new();
        for td in &vd.terms {
            if terms.iter().any(|t| t.name() == td.name) {
                return Err(semantic(td.name_span, format!("duplicate term `{}` in variable `{}`", td.name, vd.name)));
            }
            let shape = Shape::from_parts(&td.shape, &td.args)
                .map_err(|e| semantic(td.shape_span, format!("`{}`: {e}", td.shape)))?;
            let term = Term::new(td.name.clone(), shape)
                .map_err(|e| semantic(td.shape_span, format!("term `{}`: {e}", td.name)))?;
            let (a, b) = term.mf().span();
            if !universe.contains(a) || !universe.contains(b) {
                return Err(semantic(
                    td.name_span,
                    format!("term `{}` of `{}` extends outside the range [{}, {}]", td.name, vd.name, vd.lo, vd.hi),
                ));
            }
            terms.push(term);
        }
        let var = LinguisticVariable::new(vd.name.clone(), vd.kind, universe, terms)
            .map_err(|e| semantic(vd.name_span, format!("{e}")))?;
        map.variables.push((vd.name.clone(), vd.name_span));
        vars.push(var);
    }

    let mut rules = Vec::new();
    for (ri, rd) in rule_decls.iter().enumerate() {
        let index = ri + 1;
        let resolve = |clauses: &[ClauseDecl], kind: VarKind| -> Result<Vec<Clause>, DslError> {
            let mut out: Vec<Clause> = Vec::new();
            for c in clauses {
                let var = vars.iter().find(|v| v.name() == c.var).ok_or_else(|| {
                    semantic(c.var_span, format!("rule {index}: unknown variable `{}`", c.var))
                })?;
                if var.kind() != kind {
                    return Err(semantic(
                        c.var_span,
                        format!("rule {index}: `{}` is an {} variable", c.var, var.kind().as_str()),
                    ));
                }
                if var.term_index(&c.term).is_none() {
                    return Err(semantic(
                        c.term_span,
                        format!("rule {index}: unknown term `{}` for variable `{}`", c.term, c.var),
                    ));
                }
                if out.iter().any(|o| o.variable == c.var) {
                    return Err(semantic(c.var_span, format!("rule {index}: variable `{}` used twice", c.var)));
                }
                out.push(Clause::new(c.var.clone(), c.term.clone()));
            }
            Ok(out)
        };
        let antecedent = resolve(&rd.antecedent, VarKind::Input)?;
        let consequent = resolve(&rd.consequent, VarKind::Output)?;
        rules.push(Rule::new(antecedent, consequent).map_err(|e| semantic(rd.span, format!("rule {index}: {e}")))?);
        map.rules.push(rd.span);
    }

    let first = var_decls.first().map(|v| v.name_span).unwrap_or(Span { line: 1, column: 1, len: 0 });
    let def = FisDefinition::new(vars, rules).map_err(|e| semantic(first, format!("{e}")))?;
    Ok((def, map))
}
