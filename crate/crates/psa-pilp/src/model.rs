//! Problem data model: exact rational constraint storage, integer objective
//! arithmetic, partial candidates, reduced problems, and the instance file
//! format.
//!
//! Constraint rows are kept as integer numerators over a per-row positive
//! denominator, so feasibility is decided by exact integer comparisons and
//! never by floating-point tolerance.

use num_bigint::BigInt;
use std::fmt;

/// Errors produced by model construction, evaluation and parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    DimensionMismatch { expected: usize, got: usize },
    Syntax { line: usize, col: usize, msg: String },
    NonIntegerObjective { line: usize, col: usize },
    Inconsistent { line: usize, msg: String },
    Overflow(String),
    NegativeFixedValue { var: usize, value: i64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            ModelError::Syntax { line, col, msg } => {
                write!(f, "syntax error at line {line}, column {col}: {msg}")
            }
            ModelError::NonIntegerObjective { line, col } => {
                write!(
                    f,
                    "non-integer objective coefficient at line {line}, column {col}"
                )
            }
            ModelError::Inconsistent { line, msg } => {
                write!(f, "dimension inconsistency at line {line}: {msg}")
            }
            ModelError::Overflow(what) => write!(f, "integer overflow in {what}"),
            ModelError::NegativeFixedValue { var, value } => {
                write!(f, "negative fixed value {value} for variable {var}")
            }
        }
    }
}

impl std::error::Error for ModelError {}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// One `a_i x <= b_i` row with all entries over a common positive denominator.
///
/// The stored relation is `sum_j coeffs[j] * x_j <= rhs` after multiplying
/// through by `den`, so exact feasibility checks never touch the denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    /// Common positive denominator of the coefficients and the right-hand side.
    pub den: i64,
    /// Numerators of the row coefficients.
    pub coeffs: Vec<i64>,
    /// Numerator of the right-hand side.
    pub rhs: i64,
}

impl Row {
    /// Builds a row from integer coefficients (denominator 1).
    pub fn from_ints(coeffs: Vec<i64>, rhs: i64) -> Row {
        Row::from_rationals(
            &coeffs.iter().map(|&c| (c, 1)).collect::<Vec<_>>(),
            (rhs, 1),
        )
        .expect("integer row is always valid")
    }

    /// Builds a row from per-entry rationals, normalizing to a common
    /// denominator in lowest terms.
    pub fn from_rationals(coeffs: &[(i64, i64)], rhs: (i64, i64)) -> Result<Row, ModelError> {
        for &(_, d) in coeffs.iter().chain(std::iter::once(&rhs)) {
            if d <= 0 {
                return Err(ModelError::Overflow(format!(
                    "row denominator must be positive, got {d}"
                )));
            }
        }
        let mut lcm: i128 = 1;
        for &(_, d) in coeffs.iter().chain(std::iter::once(&rhs)) {
            let d = d as i128;
            lcm = lcm / gcd_i128(lcm, d) * d;
            if lcm > i64::MAX as i128 {
                return Err(ModelError::Overflow("row denominator lcm".into()));
            }
        }
        let scale = |num: i64, den: i64| -> Result<i64, ModelError> {
            let v = num as i128 * (lcm / den as i128);
            i64::try_from(v).map_err(|_| ModelError::Overflow("row numerator".into()))
        };
        let mut num_coeffs = Vec::with_capacity(coeffs.len());
        for &(n, d) in coeffs {
            num_coeffs.push(scale(n, d)?);
        }
        let num_rhs = scale(rhs.0, rhs.1)?;

        // reduce to lowest terms
        let mut g = lcm as i64;
        for &c in num_coeffs.iter().chain(std::iter::once(&num_rhs)) {
            g = gcd(g, c);
            if g == 1 {
                break;
            }
        }
        if g > 1 {
            for c in &mut num_coeffs {
                *c /= g;
            }
            return Ok(Row {
                den: lcm as i64 / g,
                coeffs: num_coeffs,
                rhs: num_rhs / g,
            });
        }
        Ok(Row {
            den: lcm as i64,
            coeffs: num_coeffs,
            rhs: num_rhs,
        })
    }

    /// Row coefficient as `f64`, for LP mirrors.
    pub fn coeff_f64(&self, j: usize) -> f64 {
        self.coeffs[j] as f64 / self.den as f64
    }

    /// Right-hand side as `f64`, for LP mirrors.
    pub fn rhs_f64(&self) -> f64 {
        self.rhs as f64 / self.den as f64
    }
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// An immutable pure integer linear program: maximize `c^T x + h` subject to
/// `A x <= b`, `x >= 0` integer, and optional per-variable upper bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    /// Number of variables.
    pub n: usize,
    /// Integer objective coefficients, length `n`.
    pub c: Vec<i64>,
    /// Integer objective constant.
    pub h: i64,
    /// Constraint rows, length `m`.
    pub rows: Vec<Row>,
    /// Explicit upper bounds; `None` means no `upper` line, inner `None`
    /// means that variable is unbounded above (bounded only through the rows).
    pub var_upper: Option<Vec<Option<i64>>>,
}

impl Problem {
    pub fn new(
        c: Vec<i64>,
        h: i64,
        rows: Vec<Row>,
        var_upper: Option<Vec<Option<i64>>>,
    ) -> Result<Problem, ModelError> {
        let n = c.len();
        if n == 0 {
            return Err(ModelError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for row in &rows {
            if row.coeffs.len() != n {
                return Err(ModelError::DimensionMismatch {
                    expected: n,
                    got: row.coeffs.len(),
                });
            }
        }
        if let Some(u) = &var_upper {
            if u.len() != n {
                return Err(ModelError::DimensionMismatch {
                    expected: n,
                    got: u.len(),
                });
            }
        }
        Ok(Problem {
            n,
            c,
            h,
            rows,
            var_upper,
        })
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// True when every variable carries an explicit `0..=1` bound.
    pub fn is_binary(&self) -> bool {
        match &self.var_upper {
            Some(u) => u.iter().all(|b| *b == Some(1)),
            None => false,
        }
    }

    /// Explicit upper bound of variable `j`, if any.
    pub fn upper_of(&self, j: usize) -> Option<i64> {
        self.var_upper.as_ref().and_then(|u| u[j])
    }
}

/// A nonnegative integer assignment of all variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntegerPoint {
    pub coords: Vec<i64>,
}

impl IntegerPoint {
    pub fn new(coords: Vec<i64>) -> IntegerPoint {
        IntegerPoint { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

impl From<Vec<i64>> for IntegerPoint {
    fn from(coords: Vec<i64>) -> Self {
        IntegerPoint { coords }
    }
}

/// Per-coordinate state of a partial candidate solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateEntry {
    Fixed(i64),
    Unfixed,
}

/// A point with some coordinates fixed and the rest undetermined; the unfixed
/// indices form the active-variable set of the branch that owns it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialCandidate {
    pub entries: Vec<CandidateEntry>,
    /// Level that spawned this candidate.
    pub origin_level: i64,
}

impl PartialCandidate {
    pub fn all_unfixed(n: usize, origin_level: i64) -> PartialCandidate {
        PartialCandidate {
            entries: vec![CandidateEntry::Unfixed; n],
            origin_level,
        }
    }

    pub fn fix(&mut self, var: usize, value: i64) {
        self.entries[var] = CandidateEntry::Fixed(value);
    }

    pub fn is_fixed(&self, var: usize) -> bool {
        matches!(self.entries[var], CandidateEntry::Fixed(_))
    }

    /// Indices still unfixed, ascending.
    pub fn unfixed_indices(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| matches!(e, CandidateEntry::Unfixed))
            .map(|(j, _)| j)
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.entries
            .iter()
            .all(|e| matches!(e, CandidateEntry::Fixed(_)))
    }

    /// Converts a fully fixed candidate into a point.
    pub fn to_point(&self) -> Option<IntegerPoint> {
        let mut coords = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            match e {
                CandidateEntry::Fixed(v) => coords.push(*v),
                CandidateEntry::Unfixed => return None,
            }
        }
        Some(IntegerPoint::new(coords))
    }

    /// Per-entry memory footprint proxy used by the list-size accounting.
    pub fn approx_bytes(&self) -> usize {
        std::mem::size_of::<PartialCandidate>()
            + self.entries.len() * std::mem::size_of::<CandidateEntry>()
    }
}

/// The instance obtained from `base` by substituting the fixed coordinates of
/// `fixing`: only the unfixed columns remain, the right-hand side absorbs the
/// fixed columns and the objective constant absorbs their objective share.
#[derive(Debug, Clone)]
pub struct ReducedProblem<'a> {
    pub base: &'a Problem,
    pub fixing: PartialCandidate,
    /// Numerators of the reduced right-hand side, over the base row
    /// denominators (widened: fixed-column sums can exceed `i64`).
    pub derived_b: Vec<i128>,
    /// `h + sum over fixed j of c_j * x_j`, exact.
    pub derived_h: i64,
    /// Reduced position -> original variable index.
    pub active_index_map: Vec<usize>,
}

impl<'a> ReducedProblem<'a> {
    /// Number of remaining (active) variables.
    pub fn active_count(&self) -> usize {
        self.active_index_map.len()
    }

    /// Objective coefficient of the reduced variable at position `k`.
    pub fn active_c(&self, k: usize) -> i64 {
        self.base.c[self.active_index_map[k]]
    }

    /// Explicit upper bound of the reduced variable at position `k`.
    pub fn active_upper(&self, k: usize) -> Option<i64> {
        self.base.upper_of(self.active_index_map[k])
    }

    /// Merges a completion of the active variables (in reduced order) with the
    /// fixing into a full point of the base problem.
    pub fn merge_completion(&self, completion: &[i64]) -> Result<IntegerPoint, ModelError> {
        if completion.len() != self.active_count() {
            return Err(ModelError::DimensionMismatch {
                expected: self.active_count(),
                got: completion.len(),
            });
        }
        let mut coords = vec![0i64; self.base.n];
        for (j, e) in self.fixing.entries.iter().enumerate() {
            if let CandidateEntry::Fixed(v) = e {
                coords[j] = *v;
            }
        }
        for (k, &v) in completion.iter().enumerate() {
            coords[self.active_index_map[k]] = v;
        }
        Ok(IntegerPoint::new(coords))
    }

    /// Exact feasibility of a completion in the reduced system.
    pub fn completion_feasible(&self, completion: &[i64]) -> Result<bool, ModelError> {
        if completion.len() != self.active_count() {
            return Err(ModelError::DimensionMismatch {
                expected: self.active_count(),
                got: completion.len(),
            });
        }
        for (k, &v) in completion.iter().enumerate() {
            if v < 0 {
                return Ok(false);
            }
            if let Some(u) = self.active_upper(k) {
                if v > u {
                    return Ok(false);
                }
            }
        }
        for (i, row) in self.base.rows.iter().enumerate() {
            let mut lhs: i128 = 0;
            let mut wide: Option<BigInt> = None;
            for (k, &v) in completion.iter().enumerate() {
                let a = row.coeffs[self.active_index_map[k]];
                match wide {
                    None => match (a as i128)
                        .checked_mul(v as i128)
                        .and_then(|p| lhs.checked_add(p))
                    {
                        Some(s) => lhs = s,
                        None => {
                            wide = Some(BigInt::from(lhs) + BigInt::from(a) * BigInt::from(v));
                        }
                    },
                    Some(ref mut w) => *w += BigInt::from(a) * BigInt::from(v),
                }
            }
            let ok = match wide {
                None => lhs <= self.derived_b[i],
                Some(w) => w <= BigInt::from(self.derived_b[i]),
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Further reduces by fixing some of the active variables. `sub` is
    /// indexed by reduced position.
    pub fn extend(&self, sub: &PartialCandidate) -> Result<ReducedProblem<'a>, ModelError> {
        if sub.entries.len() != self.active_count() {
            return Err(ModelError::DimensionMismatch {
                expected: self.active_count(),
                got: sub.entries.len(),
            });
        }
        let mut merged = self.fixing.clone();
        for (k, e) in sub.entries.iter().enumerate() {
            if let CandidateEntry::Fixed(v) = e {
                merged.fix(self.active_index_map[k], *v);
            }
        }
        reduce(self.base, &merged)
    }
}

/// Exact objective value `c . x + h`.
///
/// Runs on checked `i128` and widens to big integers if a product or sum
/// overflows; a final value outside `i64` is reported as overflow rather than
/// wrapped.
pub fn evaluate(p: &Problem, x: &IntegerPoint) -> Result<i64, ModelError> {
    if x.len() != p.n {
        return Err(ModelError::DimensionMismatch {
            expected: p.n,
            got: x.len(),
        });
    }
    let mut acc: i128 = p.h as i128;
    let mut wide: Option<BigInt> = None;
    for (j, &v) in x.coords.iter().enumerate() {
        match wide {
            None => match (p.c[j] as i128)
                .checked_mul(v as i128)
                .and_then(|prod| acc.checked_add(prod))
            {
                Some(s) => acc = s,
                None => {
                    wide = Some(BigInt::from(acc) + BigInt::from(p.c[j]) * BigInt::from(v));
                }
            },
            Some(ref mut w) => *w += BigInt::from(p.c[j]) * BigInt::from(v),
        }
    }
    match wide {
        None => i64::try_from(acc).map_err(|_| ModelError::Overflow("objective value".into())),
        Some(w) => i64::try_from(&w).map_err(|_| ModelError::Overflow("objective value".into())),
    }
}

/// Exact feasibility: `A x <= b` by integer comparison per row, `x >= 0`, and
/// `x_j <= var_upper_j` where present.
pub fn is_feasible(p: &Problem, x: &IntegerPoint) -> Result<bool, ModelError> {
    if x.len() != p.n {
        return Err(ModelError::DimensionMismatch {
            expected: p.n,
            got: x.len(),
        });
    }
    for (j, &v) in x.coords.iter().enumerate() {
        if v < 0 {
            return Ok(false);
        }
        if let Some(u) = p.upper_of(j) {
            if v > u {
                return Ok(false);
            }
        }
    }
    for row in &p.rows {
        let mut lhs: i128 = 0;
        let mut wide: Option<BigInt> = None;
        for (j, &v) in x.coords.iter().enumerate() {
            match wide {
                None => match (row.coeffs[j] as i128)
                    .checked_mul(v as i128)
                    .and_then(|prod| lhs.checked_add(prod))
                {
                    Some(s) => lhs = s,
                    None => {
                        wide =
                            Some(BigInt::from(lhs) + BigInt::from(row.coeffs[j]) * BigInt::from(v));
                    }
                },
                Some(ref mut w) => *w += BigInt::from(row.coeffs[j]) * BigInt::from(v),
            }
        }
        let ok = match wide {
            None => lhs <= row.rhs as i128,
            Some(w) => w <= BigInt::from(row.rhs),
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Builds the reduced problem for a partial candidate: subtracts the fixed
/// columns from the right-hand side and folds their objective share into the
/// constant, both exactly.
pub fn reduce<'a>(p: &'a Problem, pc: &PartialCandidate) -> Result<ReducedProblem<'a>, ModelError> {
    if pc.entries.len() != p.n {
        return Err(ModelError::DimensionMismatch {
            expected: p.n,
            got: pc.entries.len(),
        });
    }
    for (j, e) in pc.entries.iter().enumerate() {
        if let CandidateEntry::Fixed(v) = e {
            if *v < 0 {
                return Err(ModelError::NegativeFixedValue { var: j, value: *v });
            }
        }
    }
    let mut derived_b = Vec::with_capacity(p.rows.len());
    for row in &p.rows {
        let mut b = row.rhs as i128;
        for (j, e) in pc.entries.iter().enumerate() {
            if let CandidateEntry::Fixed(v) = e {
                b = b
                    .checked_sub(
                        (row.coeffs[j] as i128)
                            .checked_mul(*v as i128)
                            .ok_or_else(|| ModelError::Overflow("reduced rhs".into()))?,
                    )
                    .ok_or_else(|| ModelError::Overflow("reduced rhs".into()))?;
            }
        }
        derived_b.push(b);
    }
    let mut dh: i128 = p.h as i128;
    for (j, e) in pc.entries.iter().enumerate() {
        if let CandidateEntry::Fixed(v) = e {
            dh = dh
                .checked_add(
                    (p.c[j] as i128)
                        .checked_mul(*v as i128)
                        .ok_or_else(|| ModelError::Overflow("reduced objective constant".into()))?,
                )
                .ok_or_else(|| ModelError::Overflow("reduced objective constant".into()))?;
        }
    }
    let derived_h = i64::try_from(dh)
        .map_err(|_| ModelError::Overflow("reduced objective constant".into()))?;
    let active_index_map = pc.unfixed_indices();
    Ok(ReducedProblem {
        base: p,
        fixing: pc.clone(),
        derived_b,
        derived_h,
        active_index_map,
    })
}

// ---------------------------------------------------------------------------
// Instance file format
// ---------------------------------------------------------------------------

struct TokenStream<'a> {
    line_no: usize,
    line: &'a str,
    pos: usize,
}

impl<'a> TokenStream<'a> {
    fn new(line_no: usize, line: &'a str) -> Self {
        TokenStream {
            line_no,
            line,
            pos: 0,
        }
    }

    /// Next whitespace-delimited token with its 1-based column.
    fn next(&mut self) -> Option<(&'a str, usize)> {
        let bytes = self.line.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < bytes.len() && !bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Some((&self.line[start..self.pos], start + 1))
    }

    fn expect_end(&mut self) -> Result<(), ModelError> {
        if let Some((tok, col)) = self.next() {
            return Err(ModelError::Syntax {
                line: self.line_no,
                col,
                msg: format!("unexpected trailing token `{tok}`"),
            });
        }
        Ok(())
    }
}

fn parse_i64(tok: &str, line: usize, col: usize) -> Result<i64, ModelError> {
    tok.parse::<i64>().map_err(|_| ModelError::Syntax {
        line,
        col,
        msg: format!("expected integer, got `{tok}`"),
    })
}

fn parse_usize(tok: &str, line: usize, col: usize) -> Result<usize, ModelError> {
    tok.parse::<usize>().map_err(|_| ModelError::Syntax {
        line,
        col,
        msg: format!("expected nonnegative integer, got `{tok}`"),
    })
}

fn parse_rational(tok: &str, line: usize, col: usize) -> Result<(i64, i64), ModelError> {
    match tok.split_once('/') {
        None => Ok((parse_i64(tok, line, col)?, 1)),
        Some((num, den)) => {
            let n = parse_i64(num, line, col)?;
            let d = parse_i64(den, line, col)?;
            if d <= 0 {
                return Err(ModelError::Syntax {
                    line,
                    col,
                    msg: format!("denominator must be positive, got `{den}`"),
                });
            }
            Ok((n, d))
        }
    }
}

/// Parses the line-oriented instance format.
///
/// ```text
/// # comment
/// pilp <n> <m>
/// obj <h> <c_1> ... <c_n>
/// row <b_num>/<b_den> <a_1_num>/<a_1_den> ...   (m lines, denominator optional)
/// upper <u_1> ... <u_n>                          (optional, `*` = unbounded)
/// ```
pub fn parse_instance(text: &str) -> Result<Problem, ModelError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let content = match l.find('#') {
                Some(p) => &l[..p],
                None => l,
            };
            (i + 1, content)
        })
        .filter(|(_, l)| !l.trim().is_empty());

    let (line_no, header) = lines.next().ok_or(ModelError::Syntax {
        line: 1,
        col: 1,
        msg: "empty instance".into(),
    })?;
    let mut ts = TokenStream::new(line_no, header);
    match ts.next() {
        Some(("pilp", _)) => {}
        Some((tok, col)) => {
            return Err(ModelError::Syntax {
                line: line_no,
                col,
                msg: format!("expected `pilp` header, got `{tok}`"),
            })
        }
        None => unreachable!("blank lines are filtered"),
    }
    let (ntok, ncol) = ts.next().ok_or(ModelError::Syntax {
        line: line_no,
        col: header.len() + 1,
        msg: "expected variable count".into(),
    })?;
    let n = parse_usize(ntok, line_no, ncol)?;
    let (mtok, mcol) = ts.next().ok_or(ModelError::Syntax {
        line: line_no,
        col: header.len() + 1,
        msg: "expected constraint count".into(),
    })?;
    let m = parse_usize(mtok, line_no, mcol)?;
    ts.expect_end()?;
    if n == 0 {
        return Err(ModelError::Inconsistent {
            line: line_no,
            msg: "instance must have at least one variable".into(),
        });
    }

    let (obj_line_no, obj_line) = lines.next().ok_or(ModelError::Syntax {
        line: line_no + 1,
        col: 1,
        msg: "expected `obj` line".into(),
    })?;
    let mut ts = TokenStream::new(obj_line_no, obj_line);
    match ts.next() {
        Some(("obj", _)) => {}
        Some((tok, col)) => {
            return Err(ModelError::Syntax {
                line: obj_line_no,
                col,
                msg: format!("expected `obj`, got `{tok}`"),
            })
        }
        None => unreachable!(),
    }
    let parse_obj_int = |tok: &str, col: usize| -> Result<i64, ModelError> {
        tok.parse::<i64>().map_err(|_| {
            if tok.parse::<f64>().is_ok() || tok.contains('/') {
                ModelError::NonIntegerObjective {
                    line: obj_line_no,
                    col,
                }
            } else {
                ModelError::Syntax {
                    line: obj_line_no,
                    col,
                    msg: format!("expected integer, got `{tok}`"),
                }
            }
        })
    };
    let (htok, hcol) = ts.next().ok_or(ModelError::Syntax {
        line: obj_line_no,
        col: obj_line.len() + 1,
        msg: "expected objective constant".into(),
    })?;
    let h = parse_obj_int(htok, hcol)?;
    let mut c = Vec::with_capacity(n);
    while let Some((tok, col)) = ts.next() {
        c.push(parse_obj_int(tok, col)?);
    }
    if c.len() != n {
        return Err(ModelError::Inconsistent {
            line: obj_line_no,
            msg: format!("expected {n} objective coefficients, got {}", c.len()),
        });
    }

    let mut rows = Vec::with_capacity(m);
    for _ in 0..m {
        let (row_line_no, row_line) = lines.next().ok_or(ModelError::Inconsistent {
            line: obj_line_no,
            msg: format!("expected {m} row lines, file ended early"),
        })?;
        let mut ts = TokenStream::new(row_line_no, row_line);
        match ts.next() {
            Some(("row", _)) => {}
            Some((tok, col)) => {
                return Err(ModelError::Syntax {
                    line: row_line_no,
                    col,
                    msg: format!("expected `row`, got `{tok}`"),
                })
            }
            None => unreachable!(),
        }
        let (btok, bcol) = ts.next().ok_or(ModelError::Syntax {
            line: row_line_no,
            col: row_line.len() + 1,
            msg: "expected right-hand side".into(),
        })?;
        let b = parse_rational(btok, row_line_no, bcol)?;
        let mut coeffs = Vec::with_capacity(n);
        while let Some((tok, col)) = ts.next() {
            coeffs.push(parse_rational(tok, row_line_no, col)?);
        }
        if coeffs.len() != n {
            return Err(ModelError::Inconsistent {
                line: row_line_no,
                msg: format!("expected {n} row coefficients, got {}", coeffs.len()),
            });
        }
        rows.push(Row::from_rationals(&coeffs, b)?);
    }

    let mut var_upper = None;
    if let Some((up_line_no, up_line)) = lines.next() {
        let mut ts = TokenStream::new(up_line_no, up_line);
        match ts.next() {
            Some(("upper", _)) => {}
            Some((tok, col)) => {
                return Err(ModelError::Syntax {
                    line: up_line_no,
                    col,
                    msg: format!("expected `upper` or end of file, got `{tok}`"),
                })
            }
            None => unreachable!(),
        }
        let mut bounds = Vec::with_capacity(n);
        while let Some((tok, col)) = ts.next() {
            if tok == "*" {
                bounds.push(None);
            } else {
                bounds.push(Some(parse_i64(tok, up_line_no, col)?));
            }
        }
        if bounds.len() != n {
            return Err(ModelError::Inconsistent {
                line: up_line_no,
                msg: format!("expected {n} upper bounds, got {}", bounds.len()),
            });
        }
        var_upper = Some(bounds);
    }
    if let Some((extra_line_no, _)) = lines.next() {
        return Err(ModelError::Syntax {
            line: extra_line_no,
            col: 1,
            msg: "unexpected content after instance".into(),
        });
    }

    Problem::new(c, h, rows, var_upper)
}

/// Canonical text form; `parse_instance(serialize_instance(p)) == p`.
pub fn serialize_instance(p: &Problem) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "pilp {} {}", p.n, p.m()).unwrap();
    let mut obj = format!("obj {}", p.h);
    for &cj in &p.c {
        write!(obj, " {cj}").unwrap();
    }
    out.push_str(&obj);
    out.push('\n');
    for row in &p.rows {
        let frac = |num: i64| {
            if row.den == 1 {
                format!("{num}")
            } else {
                format!("{num}/{}", row.den)
            }
        };
        let mut line = format!("row {}", frac(row.rhs));
        for &a in &row.coeffs {
            write!(line, " {}", frac(a)).unwrap();
        }
        out.push_str(&line);
        out.push('\n');
    }
    if let Some(upper) = &p.var_upper {
        let mut line = String::from("upper");
        for u in upper {
            match u {
                Some(v) => write!(line, " {v}").unwrap(),
                None => line.push_str(" *"),
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The worked three-variable knapsack used throughout the test suites:
    /// maximize 9x1 + 3x2 + 8x3 subject to 10x1 + 5x2 + 7x3 <= 12.
    pub(crate) fn ukp() -> Problem {
        Problem::new(
            vec![9, 3, 8],
            0,
            vec![Row::from_ints(vec![10, 5, 7], 12)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let p = ukp();
        assert_eq!(evaluate(&p, &vec![0, 1, 1].into()).unwrap(), 11);
        assert_eq!(evaluate(&p, &vec![0, 0, 1].into()).unwrap(), 8);
        assert_eq!(evaluate(&p, &vec![0, 0, 0].into()).unwrap(), 0);
        let with_h = Problem::new(vec![1], 7, vec![], Some(vec![Some(3)])).unwrap();
        assert_eq!(evaluate(&with_h, &vec![0].into()).unwrap(), 7);
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let p = ukp();
        assert!(matches!(
            evaluate(&p, &vec![1, 2].into()),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn evaluate_widens_before_reporting_overflow() {
        let p = Problem::new(vec![i64::MAX, i64::MAX], 0, vec![], None).unwrap();
        // i128 intermediate handles this fine
        assert_eq!(
            evaluate(&p, &vec![1, 0].into()).unwrap(),
            i64::MAX,
            "single max product fits"
        );
        // sum exceeds i64: structured overflow, not a wrap or panic
        assert!(matches!(
            evaluate(&p, &vec![1, 1].into()),
            Err(ModelError::Overflow(_))
        ));
    }

    #[test]
    fn feasibility_examples() {
        let p = ukp();
        assert!(is_feasible(&p, &vec![0, 1, 1].into()).unwrap());
        assert!(!is_feasible(&p, &vec![1, 1, 1].into()).unwrap());
        assert!(!is_feasible(&p, &vec![0, -1, 0].into()).unwrap());
    }

    #[test]
    fn feasibility_respects_var_upper() {
        let p = Problem::new(
            vec![1, 1],
            0,
            vec![Row::from_ints(vec![1, 1], 10)],
            Some(vec![Some(1), None]),
        )
        .unwrap();
        assert!(is_feasible(&p, &vec![1, 9].into()).unwrap());
        assert!(!is_feasible(&p, &vec![2, 0].into()).unwrap());
    }

    #[test]
    fn feasibility_exact_on_rational_rows() {
        // x1/3 + x2/2 <= 5/6  ->  2x1 + 3x2 <= 5 over den 6
        let row = Row::from_rationals(&[(1, 3), (1, 2)], (5, 6)).unwrap();
        assert_eq!(row.den, 6);
        assert_eq!(row.coeffs, vec![2, 3]);
        assert_eq!(row.rhs, 5);
        let p = Problem::new(vec![1, 1], 0, vec![row], None).unwrap();
        assert!(is_feasible(&p, &vec![1, 1].into()).unwrap());
        assert!(!is_feasible(&p, &vec![1, 2].into()).unwrap());
    }

    #[test]
    fn row_normalization_reduces_terms() {
        let row = Row::from_rationals(&[(6, 2), (2, 2)], (10, 2)).unwrap();
        assert_eq!(row.den, 1);
        assert_eq!(row.coeffs, vec![3, 1]);
        assert_eq!(row.rhs, 5);
    }

    #[test]
    fn reduce_ukp_fix_x3() {
        let p = ukp();
        let mut pc = PartialCandidate::all_unfixed(3, 11);
        pc.fix(2, 1);
        let r = reduce(&p, &pc).unwrap();
        assert_eq!(r.derived_h, 8);
        assert_eq!(r.derived_b, vec![5]);
        assert_eq!(r.active_index_map, vec![0, 1]);
        assert_eq!(r.active_c(0), 9);
        assert_eq!(r.active_c(1), 3);
    }

    #[test]
    fn reduce_ukp_fix_x1_x3() {
        let p = ukp();
        let mut pc = PartialCandidate::all_unfixed(3, 11);
        pc.fix(0, 0);
        pc.fix(2, 1);
        let r = reduce(&p, &pc).unwrap();
        assert_eq!(r.derived_h, 8);
        assert_eq!(r.derived_b, vec![5]);
        assert_eq!(r.active_index_map, vec![1]);
        assert_eq!(r.active_c(0), 3);
    }

    #[test]
    fn reduce_all_unfixed_is_identity() {
        let p = ukp();
        let pc = PartialCandidate::all_unfixed(3, 13);
        let r = reduce(&p, &pc).unwrap();
        assert_eq!(r.derived_h, p.h);
        assert_eq!(r.derived_b, vec![12]);
        assert_eq!(r.active_index_map, vec![0, 1, 2]);
    }

    #[test]
    fn reduce_fully_fixed_decided_by_rhs_sign() {
        let p = ukp();
        let mut pc = PartialCandidate::all_unfixed(3, 11);
        pc.fix(0, 0);
        pc.fix(1, 1);
        pc.fix(2, 1);
        let r = reduce(&p, &pc).unwrap();
        assert_eq!(r.active_count(), 0);
        assert!(r.derived_b.iter().all(|&b| b >= 0));
        assert!(r.completion_feasible(&[]).unwrap());

        let mut over = PartialCandidate::all_unfixed(3, 11);
        over.fix(0, 2);
        over.fix(1, 0);
        over.fix(2, 0);
        let r = reduce(&p, &over).unwrap();
        assert!(!r.completion_feasible(&[]).unwrap());
    }

    #[test]
    fn reduce_rejects_negative_fixed() {
        let p = ukp();
        let mut pc = PartialCandidate::all_unfixed(3, 5);
        pc.entries[1] = CandidateEntry::Fixed(-2);
        assert!(matches!(
            reduce(&p, &pc),
            Err(ModelError::NegativeFixedValue { var: 1, value: -2 })
        ));
    }

    #[test]
    fn merged_feasibility_matches_reduced() {
        let p = ukp();
        let mut pc = PartialCandidate::all_unfixed(3, 11);
        pc.fix(2, 1);
        let r = reduce(&p, &pc).unwrap();
        for x1 in 0..3 {
            for x2 in 0..4 {
                let merged = r.merge_completion(&[x1, x2]).unwrap();
                assert_eq!(
                    is_feasible(&p, &merged).unwrap(),
                    r.completion_feasible(&[x1, x2]).unwrap(),
                    "mismatch at ({x1},{x2})"
                );
            }
        }
    }

    #[test]
    fn parse_ukp_text() {
        let text = "# unbounded knapsack\npilp 3 1\nobj 0 9 3 8\nrow 12 10 5 7\n";
        let p = parse_instance(text).unwrap();
        assert_eq!(p.n, 3);
        assert_eq!(p.m(), 1);
        assert_eq!(p, ukp());
    }

    #[test]
    fn parse_empty_constraints_with_upper() {
        let text = "pilp 2 0\nobj 5 1 -1\nupper 4 *\n";
        let p = parse_instance(text).unwrap();
        assert_eq!(p.m(), 0);
        assert_eq!(p.var_upper, Some(vec![Some(4), None]));
    }

    #[test]
    fn parse_rejects_fractional_objective() {
        let text = "pilp 2 0\nobj 0 2.5 1\nupper 1 1\n";
        match parse_instance(text) {
            Err(ModelError::NonIntegerObjective { line: 2, .. }) => {}
            other => panic!("expected non-integer objective error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_rational_objective() {
        let text = "pilp 1 0\nobj 0 1/2\nupper 1\n";
        assert!(matches!(
            parse_instance(text),
            Err(ModelError::NonIntegerObjective { .. })
        ));
    }

    #[test]
    fn parse_reports_position() {
        let text = "pilp 3 1\nobj 0 9 3 8\nrow 12 10 x 7\n";
        match parse_instance(text) {
            Err(ModelError::Syntax { line: 3, col, .. }) => assert_eq!(col, 11),
            other => panic!("expected syntax error with position, got {other:?}"),
        }
    }

    #[test]
    fn parse_detects_dimension_inconsistency() {
        let text = "pilp 3 1\nobj 0 9 3\nrow 12 10 5 7\n";
        assert!(matches!(
            parse_instance(text),
            Err(ModelError::Inconsistent { line: 2, .. })
        ));
    }

    #[test]
    fn serialize_round_trip_canonical() {
        let p = ukp();
        let text = serialize_instance(&p);
        assert_eq!(parse_instance(&text).unwrap(), p);
        assert_eq!(serialize_instance(&parse_instance(&text).unwrap()), text);
    }

    #[test]
    fn serialize_rational_rows() {
        let p = Problem::new(
            vec![1, 2],
            -3,
            vec![Row::from_rationals(&[(1, 2), (3, 4)], (7, 4)).unwrap()],
            Some(vec![Some(2), None]),
        )
        .unwrap();
        let text = serialize_instance(&p);
        assert_eq!(text, "pilp 2 1\nobj -3 1 2\nrow 7/4 2/4 3/4\nupper 2 *\n");
        assert_eq!(parse_instance(&text).unwrap(), p);
    }
}
