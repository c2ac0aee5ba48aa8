//! Locally constant linear cocycles over a subshift of finite type.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{invert, op_norm};
use crate::sft::{format_word, parse_word, Symbol, SymbolicPoint, TransitionMatrix};
use crate::Matrix;

/// Largest table (in windows, admissible or not) a cocycle may allocate.
pub const MAX_TABLE_WINDOWS: u128 = 1 << 22;

/// A matrix-valued function `x ↦ A(x)` depending only on `x_{−k} … x_k`.
///
/// The same type carries generators of cocycles and locally constant
/// transfer functions; only the former are iterated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CocycleRepr", into = "CocycleRepr")]
pub struct LocallyConstantCocycle {
    shift: TransitionMatrix,
    radius: usize,
    dim: usize,
    table: Vec<Option<Matrix>>,
    inverses: Vec<Option<Matrix>>,
    eta: f64,
}

/// Serialized form: admissible windows keyed by their symbol strings.
#[derive(Serialize, Deserialize)]
struct CocycleRepr {
    shift: TransitionMatrix,
    radius: usize,
    dim: usize,
    table: BTreeMap<String, Matrix>,
}

impl From<LocallyConstantCocycle> for CocycleRepr {
    fn from(a: LocallyConstantCocycle) -> Self {
        let table = a.entries().map(|(w, m)| (format_word(&w), m.clone())).collect();
        CocycleRepr { shift: a.shift, radius: a.radius, dim: a.dim, table }
    }
}

impl TryFrom<CocycleRepr> for LocallyConstantCocycle {
    type Error = Error;
    fn try_from(r: CocycleRepr) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (w, m) in r.table {
            entries.insert(parse_word(&w)?, m);
        }
        Self::from_table(&r.shift, r.radius, r.dim, &entries)
    }
}

fn window_code(window: &[Symbol], l: usize) -> usize {
    window.iter().fold(0usize, |acc, &s| acc * l + s as usize)
}

fn decode(mut code: usize, l: usize, len: usize) -> Vec<Symbol> {
    let mut w = vec![0; len];
    for i in (0..len).rev() {
        w[i] = (code % l) as Symbol;
        code /= l;
    }
    w
}

impl LocallyConstantCocycle {
    fn table_len(shift: &TransitionMatrix, radius: usize) -> Result<usize> {
        let width = 2 * radius + 1;
        let needed = (shift.size() as u128).checked_pow(width as u32).unwrap_or(u128::MAX);
        if needed > MAX_TABLE_WINDOWS {
            return Err(Error::BudgetExceeded { what: "cocycle table windows", needed, budget: MAX_TABLE_WINDOWS });
        }
        Ok(needed as usize)
    }

    fn assemble(shift: TransitionMatrix, radius: usize, dim: usize, table: Vec<Option<Matrix>>) -> Result<Self> {
        let mut inverses = Vec::with_capacity(table.len());
        let mut eta = 0.0f64;
        for (code, entry) in table.iter().enumerate() {
            match entry {
                None => inverses.push(None),
                Some(m) => {
                    if m.nrows() != dim || m.ncols() != dim {
                        return Err(Error::DimensionMismatch(format!(
                            "window {} holds a {}x{} matrix, expected {dim}x{dim}",
                            format_word(&decode(code, shift.size(), 2 * radius + 1)),
                            m.nrows(),
                            m.ncols()
                        )));
                    }
                    let inv = invert(m)?;
                    eta = eta.max(op_norm(m).ln()).max(op_norm(&inv).ln());
                    inverses.push(Some(inv));
                }
            }
        }
        Ok(LocallyConstantCocycle { shift, radius, dim, table, inverses, eta: eta.max(0.0) })
    }

    /// Tabulates `f` over every admissible window of length `2·radius + 1`.
    pub fn from_fn<F>(shift: &TransitionMatrix, radius: usize, dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[Symbol]) -> Result<Matrix>,
    {
        let len = Self::table_len(shift, radius)?;
        let width = 2 * radius + 1;
        let l = shift.size();
        let mut table = Vec::with_capacity(len);
        for code in 0..len {
            let w = decode(code, l, width);
            if shift.is_admissible(&w)? {
                table.push(Some(f(&w)?));
            } else {
                table.push(None);
            }
        }
        Self::assemble(shift.clone(), radius, dim, table)
    }

    /// Builds a cocycle from explicit window entries; every admissible window
    /// must be present and no inadmissible one may appear.
    pub fn from_table(
        shift: &TransitionMatrix,
        radius: usize,
        dim: usize,
        entries: &BTreeMap<Vec<Symbol>, Matrix>,
    ) -> Result<Self> {
        let width = 2 * radius + 1;
        for w in entries.keys() {
            if w.len() != width {
                return Err(Error::InvalidParameter(format!(
                    "window {} has length {}, expected {width}",
                    format_word(w),
                    w.len()
                )));
            }
            if !shift.is_admissible(w)? {
                return Err(Error::InvalidParameter(format!("window {} is inadmissible", format_word(w))));
            }
        }
        Self::from_fn(shift, radius, dim, |w| {
            entries.get(w).cloned().ok_or_else(|| Error::IncompleteTable(format_word(w)))
        })
    }

    /// The constant cocycle `A(x) = m`.
    pub fn constant(shift: &TransitionMatrix, m: &Matrix) -> Result<Self> {
        Self::from_fn(shift, 0, m.nrows(), |_| Ok(m.clone()))
    }

    pub fn identity(shift: &TransitionMatrix, dim: usize) -> Self {
        Self::constant(shift, &DMatrix::identity(dim, dim)).expect("identity is invertible")
    }

    pub fn shift(&self) -> &TransitionMatrix {
        &self.shift
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `η = max log max(‖A‖, ‖A⁻¹‖)` over the table.
    pub fn log_bound(&self) -> f64 {
        self.eta
    }

    /// Admissible windows and their values, in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<Symbol>, &Matrix)> + '_ {
        let (l, width) = (self.shift.size(), 2 * self.radius + 1);
        self.table
            .iter()
            .enumerate()
            .filter_map(move |(code, m)| m.as_ref().map(|m| (decode(code, l, width), m)))
    }

    /// Value at a window `x_{−k} … x_k`.
    pub fn evaluate_window(&self, window: &[Symbol]) -> Result<&Matrix> {
        if window.len() != 2 * self.radius + 1 {
            return Err(Error::InvalidParameter(format!(
                "window has length {}, expected {}",
                window.len(),
                2 * self.radius + 1
            )));
        }
        for &s in window {
            if s as usize >= self.shift.size() {
                return Err(Error::SymbolOutOfRange { symbol: s as usize, size: self.shift.size() });
            }
        }
        self.table[window_code(window, self.shift.size())]
            .as_ref()
            .ok_or_else(|| Error::IncompleteTable(format_word(window)))
    }

    pub(crate) fn code_at(&self, x: &SymbolicPoint, n: i64) -> usize {
        let k = self.radius as i64;
        let l = self.shift.size();
        (n - k..=n + k).fold(0usize, |acc, j| acc * l + x.coord(j) as usize)
    }

    /// Table codes of the windows centered at `lo, lo+1, …, lo+count−1`.
    fn codes_along(&self, x: &SymbolicPoint, lo: i64, count: usize) -> Vec<usize> {
        let mut codes = Vec::with_capacity(count);
        if count == 0 {
            return codes;
        }
        let l = self.shift.size();
        let modulus = l.pow(2 * self.radius as u32 + 1);
        let k = self.radius as i64;
        let mut code = self.code_at(x, lo);
        codes.push(code);
        for j in 1..count as i64 {
            code = (code * l) % modulus + x.coord(lo + j + k) as usize;
            codes.push(code);
        }
        codes
    }

    pub(crate) fn entry(&self, code: usize) -> &Matrix {
        self.table[code].as_ref().expect("points of the shift only visit admissible windows")
    }

    pub(crate) fn inverse_entry(&self, code: usize) -> &Matrix {
        self.inverses[code].as_ref().expect("points of the shift only visit admissible windows")
    }

    /// `A(x)`.
    pub fn evaluate(&self, x: &SymbolicPoint) -> &Matrix {
        self.entry(self.code_at(x, 0))
    }

    /// `A(x)⁻¹`.
    pub fn evaluate_inverse(&self, x: &SymbolicPoint) -> &Matrix {
        self.inverse_entry(self.code_at(x, 0))
    }

    /// `Aⁿ(x)`: `A(σⁿ⁻¹x)⋯A(x)` for `n > 0`, the identity for `n = 0` and
    /// `A(σⁿx)⁻¹⋯A(σ⁻¹x)⁻¹` for `n < 0`.
    pub fn iterate(&self, x: &SymbolicPoint, n: i64) -> Result<Matrix> {
        let mut acc = DMatrix::identity(self.dim, self.dim);
        if n > 0 {
            for code in self.codes_along(x, 0, n as usize) {
                acc = self.entry(code) * acc;
            }
        } else if n < 0 {
            let codes = self.codes_along(x, n, n.unsigned_abs() as usize);
            for &code in codes.iter().rev() {
                acc = self.inverse_entry(code) * acc;
            }
        }
        if acc.iter().all(|v| v.is_finite()) {
            Ok(acc)
        } else {
            Err(Error::Overflow)
        }
    }

    /// Product `A(w_{n−1}) ⋯ A(w_0)` over the `n = len − 2k` full windows of
    /// a finite word, i.e. `Aⁿ` on the cylinder where `w` starts at `−k`.
    pub fn iterate_word(&self, word: &[Symbol]) -> Result<Matrix> {
        let width = 2 * self.radius + 1;
        let mut acc = DMatrix::identity(self.dim, self.dim);
        if word.len() < width {
            return Ok(acc);
        }
        for w in word.windows(width) {
            acc = self.evaluate_window(w)? * acc;
        }
        if acc.iter().all(|v| v.is_finite()) {
            Ok(acc)
        } else {
            Err(Error::Overflow)
        }
    }

    /// Replaces every table value by `f(value)`.
    pub fn map_values<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&Matrix) -> Matrix,
    {
        let table = self.table.iter().map(|m| m.as_ref().map(&mut f)).collect();
        let dim = self.table.iter().flatten().next().map_or(self.dim, |m| f(m).nrows());
        Self::assemble(self.shift.clone(), self.radius, dim, table)
    }

    /// The cocycle generated by `x ↦ A(x)⁻¹`.
    pub fn inverse_cocycle(&self) -> Self {
        LocallyConstantCocycle {
            table: self.inverses.clone(),
            inverses: self.table.clone(),
            ..self.clone()
        }
    }

    /// `x ↦ c·A(x)`.
    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map_values(|m| m * c)
    }

    /// Re-tabulates at a larger radius without changing the function.
    pub fn with_radius(&self, radius: usize) -> Result<Self> {
        if radius < self.radius {
            return Err(Error::InvalidParameter("radius can only grow".into()));
        }
        let off = radius - self.radius;
        Self::from_fn(&self.shift, radius, self.dim, |w| Ok(self.evaluate_window(&w[off..w.len() - off])?.clone()))
    }

    /// Smallest radius at which the values agree within `tol` on all
    /// windows sharing the same central block, re-tabulated there.
    pub fn reduce_radius(&self, tol: f64) -> Result<Self> {
        let width = 2 * self.radius + 1;
        for r in 0..self.radius {
            let off = self.radius - r;
            let mut reps: BTreeMap<Vec<Symbol>, &Matrix> = BTreeMap::new();
            let mut ok = true;
            for (w, m) in self.entries() {
                let center = w[off..width - off].to_vec();
                match reps.get(&center) {
                    None => {
                        reps.insert(center, m);
                    }
                    Some(rep) => {
                        if (*rep - m).abs().max() > tol {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            if ok {
                return Self::from_fn(&self.shift, r, self.dim, |w| {
                    reps.get(w).map(|m| (*m).clone()).ok_or_else(|| Error::IncompleteTable(format_word(w)))
                });
            }
        }
        Ok(self.clone())
    }

    /// `x ↦ u(σx)·A(x)·u(x)⁻¹`, tabulated at radius `max(k_A, k_u + 1)`.
    pub fn coboundary_conjugate(&self, u: &LocallyConstantCocycle) -> Result<Self> {
        if u.shift != self.shift {
            return Err(Error::InvalidParameter("transfer function lives over a different shift".into()));
        }
        if u.dim != self.dim {
            return Err(Error::DimensionMismatch(format!("cocycle dimension {} vs transfer {}", self.dim, u.dim)));
        }
        let r = self.radius.max(u.radius + 1);
        let (ka, ku) = (self.radius, u.radius);
        Self::from_fn(&self.shift, r, self.dim, |w| {
            let c = r;
            let a = self.evaluate_window(&w[c - ka..=c + ka])?;
            let u_here = u.evaluate_window(&w[c - ku..=c + ku])?;
            let u_next = u.evaluate_window(&w[c + 1 - ku..=c + 1 + ku])?;
            Ok(u_next * a * invert(u_here)?)
        })
    }

    /// `‖Aⁿ(x)‖·‖Aⁿ(x)⁻¹‖`.
    pub fn qc_distortion(&self, x: &SymbolicPoint, n: i64) -> Result<f64> {
        let m = self.iterate(x, n)?;
        let s = m.singular_values();
        Ok(s.max() / s.min())
    }

    /// Largest entrywise difference of the tables (infinite if the
    /// shapes or shifts differ).
    pub fn max_table_difference(&self, other: &Self) -> f64 {
        if self.shift != other.shift || self.dim != other.dim {
            return f64::INFINITY;
        }
        let r = self.radius.max(other.radius);
        let (a, b) = match (self.with_radius(r), other.with_radius(r)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return f64::INFINITY,
        };
        a.table
            .iter()
            .zip(&b.table)
            .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).abs().max()))
            .fold(0.0, f64::max)
    }
}
