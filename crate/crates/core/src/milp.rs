//! Backend-neutral mixed-integer linear model.
//!
//! Rows are stored in range form `lo <= a.x <= hi`; equality rows have
//! `lo == hi` and one-sided rows use an infinite bound. Every row carries a
//! [`RowLabel`] (constraint family plus indices) so callers can locate rows
//! after the fact.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

/// Affine expression `sum c_k x_k + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn term(v: VarId, c: f64) -> Self {
        LinExpr { terms: vec![(v, c)], constant: 0.0 }
    }

    pub fn add_term(&mut self, v: VarId, c: f64) -> &mut Self {
        if c != 0.0 {
            self.terms.push((v, c));
        }
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= s;
        }
        self.constant *= s;
        self
    }

    /// True when no variable appears after merging duplicates.
    pub fn is_constant(&self) -> bool {
        self.clone().normalized().terms.is_empty()
    }

    /// Merges duplicate variables, drops zero coefficients, sorts by variable.
    pub fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
        self
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * values[v.0]).sum::<f64>()
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl<R: Into<LinExpr>> Add<R> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: R) -> LinExpr {
        self += rhs;
        self
    }
}

impl<R: Into<LinExpr>> AddAssign<R> for LinExpr {
    fn add_assign(&mut self, rhs: R) {
        let rhs = rhs.into();
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
    }
}

impl<R: Into<LinExpr>> Sub<R> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: R) -> LinExpr {
        self -= rhs;
        self
    }
}

impl<R: Into<LinExpr>> SubAssign<R> for LinExpr {
    fn sub_assign(&mut self, rhs: R) {
        let rhs = rhs.into();
        self.terms.extend(rhs.terms.into_iter().map(|(v, c)| (v, -c)));
        self.constant -= rhs.constant;
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, s: f64) -> LinExpr {
        self.scaled(s)
    }
}

impl Mul<f64> for VarId {
    type Output = LinExpr;
    fn mul(self, s: f64) -> LinExpr {
        LinExpr::term(self, s)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

/// Constraint family plus integer indices, e.g. `balance_p[s, i, g]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowLabel {
    pub family: &'static str,
    pub index: Vec<usize>,
}

impl RowLabel {
    pub fn new(family: &'static str, index: &[usize]) -> Self {
        RowLabel { family, index: index.to_vec() }
    }
}

impl fmt::Display for RowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.family)?;
        for i in &self.index {
            write!(f, "_{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(VarId, f64)>,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpInstance {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    pub labels: Vec<RowLabel>,
    pub objective: LinExpr,
    pub sense: Sense,
}

impl Default for MilpInstance {
    fn default() -> Self {
        MilpInstance {
            vars: Vec::new(),
            rows: Vec::new(),
            labels: Vec::new(),
            objective: LinExpr::new(),
            sense: Sense::Minimize,
        }
    }
}

impl MilpInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lo: f64, hi: f64) -> VarId {
        let (lo, hi) = match kind {
            VarKind::Binary => (lo.max(0.0), hi.min(1.0)),
            _ => (lo, hi),
        };
        self.vars.push(Variable { name: name.into(), kind, lo, hi });
        VarId(self.vars.len() - 1)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> VarId {
        self.add_var(name, VarKind::Continuous, lo, hi)
    }

    /// Adds `lo <= expr <= hi`; the expression constant is moved into the bounds.
    pub fn add_row(&mut self, label: RowLabel, expr: LinExpr, lo: f64, hi: f64) -> RowId {
        let expr = expr.normalized();
        self.rows.push(Row { coeffs: expr.terms, lo: lo - expr.constant, hi: hi - expr.constant });
        self.labels.push(label);
        RowId(self.rows.len() - 1)
    }

    /// `lhs <= rhs`
    pub fn leq(&mut self, label: RowLabel, lhs: impl Into<LinExpr>, rhs: impl Into<LinExpr>) -> RowId {
        self.add_row(label, lhs.into() - rhs.into(), f64::NEG_INFINITY, 0.0)
    }

    /// `lhs >= rhs`
    pub fn geq(&mut self, label: RowLabel, lhs: impl Into<LinExpr>, rhs: impl Into<LinExpr>) -> RowId {
        self.add_row(label, lhs.into() - rhs.into(), 0.0, f64::INFINITY)
    }

    /// `lhs == rhs`
    pub fn equal(&mut self, label: RowLabel, lhs: impl Into<LinExpr>, rhs: impl Into<LinExpr>) -> RowId {
        self.add_row(label, lhs.into() - rhs.into(), 0.0, 0.0)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_mip(&self) -> bool {
        self.vars.iter().any(|v| v.kind != VarKind::Continuous)
    }

    /// Map from label to row; labels are unique by construction of the builders.
    pub fn row_index(&self) -> HashMap<&RowLabel, RowId> {
        self.labels.iter().enumerate().map(|(k, l)| (l, RowId(k))).collect()
    }

    pub fn rows_in_family<'a>(&'a self, family: &'a str) -> impl Iterator<Item = (RowId, &'a RowLabel)> + 'a {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.family == family)
            .map(|(k, l)| (RowId(k), l))
    }

    pub fn row_activity(&self, row: RowId, values: &[f64]) -> f64 {
        self.rows[row.0].coeffs.iter().map(|(v, c)| c * values[v.0]).sum()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.eval(values)
    }

    /// Every row and the objective reference declared variables; labels total.
    pub fn check_well_formed(&self) -> Result<(), String> {
        let n = self.vars.len();
        if self.labels.len() != self.rows.len() {
            return Err("row label map is not total".into());
        }
        for (k, r) in self.rows.iter().enumerate() {
            if let Some((v, _)) = r.coeffs.iter().find(|(v, _)| v.0 >= n) {
                return Err(format!("row {} references undeclared variable {}", self.labels[k], v.0));
            }
            if r.lo.is_nan() || r.hi.is_nan() || r.coeffs.iter().any(|(_, c)| !c.is_finite()) {
                return Err(format!("row {} has non-finite data", self.labels[k]));
            }
        }
        if self.objective.terms.iter().any(|(v, _)| v.0 >= n) {
            return Err("objective references undeclared variable".into());
        }
        for v in &self.vars {
            if v.lo.is_nan() || v.hi.is_nan() || v.lo > v.hi {
                return Err(format!("variable {} has invalid bounds [{}, {}]", v.name, v.lo, v.hi));
            }
        }
        Ok(())
    }

    /// Largest violation of rows, bounds and integrality at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, r) in self.rows.iter().enumerate() {
            let a = self.row_activity(RowId(k), values);
            worst = worst.max(r.lo - a).max(a - r.hi);
        }
        for (v, x) in self.vars.iter().zip(values) {
            worst = worst.max(v.lo - x).max(x - v.hi);
            if v.kind != VarKind::Continuous {
                worst = worst.max((x - x.round()).abs());
            }
        }
        worst
    }

    /// Writes the model in CPLEX LP text format. Row and variable order follow
    /// creation order, so identical builds produce identical files.
    pub fn write_lp<W: Write>(&self, mut w: W) -> io::Result<()> {
        let name = |v: VarId| sanitize(&self.vars[v.0].name, v.0);
        let write_terms = |w: &mut W, terms: &[(VarId, f64)]| -> io::Result<()> {
            for (v, c) in terms {
                let sign = if *c < 0.0 { '-' } else { '+' };
                write!(w, " {sign} {} {}", fmt_num(c.abs()), name(*v))?;
            }
            Ok(())
        };
        writeln!(w, "\\ mgplan model: {} variables, {} rows", self.vars.len(), self.rows.len())?;
        writeln!(w, "{}", if self.sense == Sense::Minimize { "Minimize" } else { "Maximize" })?;
        write!(w, " obj:")?;
        let obj = self.objective.clone().normalized();
        if obj.terms.is_empty() && !self.vars.is_empty() {
            write!(w, " 0 {}", name(VarId(0)))?;
        } else {
            write_terms(&mut w, &obj.terms)?;
        }
        if obj.constant != 0.0 {
            write!(w, " {} {}", if obj.constant < 0.0 { '-' } else { '+' }, fmt_num(obj.constant.abs()))?;
        }
        writeln!(w)?;
        writeln!(w, "Subject To")?;
        for (k, r) in self.rows.iter().enumerate() {
            let label = format!("r{k}_{}", self.labels[k]);
            let bounds: Vec<(&str, f64)> = match (r.lo.is_finite(), r.hi.is_finite()) {
                (true, true) if r.lo == r.hi => vec![("=", r.lo)],
                (true, true) => vec![(">=", r.lo), ("<=", r.hi)],
                (true, false) => vec![(">=", r.lo)],
                (false, true) => vec![("<=", r.hi)],
                (false, false) => vec![],
            };
            for (part, (op, rhs)) in bounds.iter().enumerate() {
                let suffix = if bounds.len() > 1 { if part == 0 { "_lo" } else { "_hi" } } else { "" };
                write!(w, " {label}{suffix}:")?;
                if r.coeffs.is_empty() {
                    write!(w, " 0 {}", name(VarId(0)))?;
                } else {
                    write_terms(&mut w, &r.coeffs)?;
                }
                writeln!(w, " {op} {}", fmt_num(*rhs))?;
            }
        }
        writeln!(w, "Bounds")?;
        for (k, v) in self.vars.iter().enumerate() {
            let nm = name(VarId(k));
            match (v.lo.is_finite(), v.hi.is_finite()) {
                (false, false) => writeln!(w, " {nm} free")?,
                (true, true) if v.lo == v.hi => writeln!(w, " {nm} = {}", fmt_num(v.lo))?,
                (true, true) => writeln!(w, " {} <= {nm} <= {}", fmt_num(v.lo), fmt_num(v.hi))?,
                (true, false) => writeln!(w, " {nm} >= {}", fmt_num(v.lo))?,
                (false, true) => writeln!(w, " -inf <= {nm} <= {}", fmt_num(v.hi))?,
            }
        }
        let ints: Vec<_> = (0..self.vars.len()).filter(|&k| self.vars[k].kind == VarKind::Integer).collect();
        if !ints.is_empty() {
            writeln!(w, "Generals")?;
            for k in ints {
                writeln!(w, " {}", name(VarId(k)))?;
            }
        }
        let bins: Vec<_> = (0..self.vars.len()).filter(|&k| self.vars[k].kind == VarKind::Binary).collect();
        if !bins.is_empty() {
            writeln!(w, "Binaries")?;
            for k in bins {
                writeln!(w, " {}", name(VarId(k)))?;
            }
        }
        writeln!(w, "End")
    }
}

fn sanitize(name: &str, k: usize) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if cleaned.is_empty() || cleaned.starts_with(|c: char| c.is_ascii_digit()) {
        format!("v{k}_{cleaned}")
    } else {
        cleaned
    }
}

fn fmt_num(x: f64) -> String {
    // shortest round-trip representation
    format!("{x:?}")
}
