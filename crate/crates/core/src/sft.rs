//! Two-sided subshifts of finite type and their computable points.
//!
//! Points are eventually periodic bi-infinite sequences
//! `(left)^∞ · core · (right)^∞`, which is enough to host every periodic
//! orbit, bracket and shadowing construction used elsewhere in the crate
//! while keeping equality and the agreement radius decidable.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u8;
pub type Word = Vec<Symbol>;

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Largest alphabet representable by the textual word format.
pub const MAX_TEXT_ALPHABET: usize = DIGITS.len();

/// Parses a word written with one base-36 digit per symbol (`"0110"`).
pub fn parse_word(text: &str) -> Result<Word> {
    text.bytes()
        .map(|c| {
            DIGITS
                .iter()
                .position(|&d| d == c.to_ascii_lowercase())
                .map(|p| p as Symbol)
                .ok_or_else(|| Error::InvalidParameter(format!("invalid symbol character {:?}", c as char)))
        })
        .collect()
}

/// Inverse of [`parse_word`].
pub fn format_word(word: &[Symbol]) -> String {
    word.iter().map(|&s| DIGITS[s as usize] as char).collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// The 0/1 transition matrix `Q` of the shift.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct TransitionMatrix {
    size: usize,
    allowed: Vec<bool>,
    mixing: Option<usize>,
}

impl TryFrom<Vec<Vec<u8>>> for TransitionMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self> {
        TransitionMatrix::new(&rows)
    }
}

impl From<TransitionMatrix> for Vec<Vec<u8>> {
    fn from(q: TransitionMatrix) -> Self {
        q.rows()
    }
}

impl TransitionMatrix {
    /// Builds a mixing (irreducible and aperiodic) transition matrix.
    ///
    /// Irreducible but periodic matrices are rejected with [`Error::NotMixing`].
    pub fn new<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let q = Self::irreducible(rows)?;
        match q.mixing {
            Some(_) => Ok(q),
            None => Err(Error::NotMixing { period: q.period() }),
        }
    }

    /// Builds an irreducible transition matrix without requiring aperiodicity.
    ///
    /// Used for the support of Markov chains such as the deterministic flip,
    /// which are irreducible but periodic.
    pub fn irreducible<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let size = rows.len();
        if size == 0 || size > u8::MAX as usize + 1 {
            return Err(Error::MalformedTransitions);
        }
        let mut allowed = Vec::with_capacity(size * size);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != size {
                return Err(Error::MalformedTransitions);
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => allowed.push(false),
                    1 => allowed.push(true),
                    other => return Err(Error::NonBinaryTransition(other as f64, i, j)),
                }
            }
        }
        let mut q = TransitionMatrix { size, allowed, mixing: None };
        q.check_irreducible()?;
        q.mixing = q.compute_mixing_constant();
        Ok(q)
    }

    /// The full shift on `size` symbols.
    pub fn full_shift(size: usize) -> Self {
        let rows = vec![vec![1u8; size]; size];
        Self::new(&rows).expect("full shift is mixing")
    }

    /// The golden-mean shift `[[1,1],[1,0]]` (no two consecutive 1s).
    pub fn golden_mean() -> Self {
        Self::new(&[[1u8, 1], [1, 0]]).expect("golden mean shift is mixing")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn allows(&self, from: Symbol, to: Symbol) -> bool {
        self.allowed[from as usize * self.size + to as usize]
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.allowed[i * self.size + j] as u8).collect())
            .collect()
    }

    /// Least `m` with `Q^m` entrywise positive, or `None` for periodic matrices.
    pub fn mixing_constant(&self) -> Option<usize> {
        self.mixing
    }

    fn successors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&t| self.allowed[s * self.size + t])
    }

    fn check_irreducible(&self) -> Result<()> {
        for from in 0..self.size {
            let mut seen = vec![false; self.size];
            let mut stack = vec![from];
            while let Some(s) = stack.pop() {
                for t in self.successors(s) {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
            if let Some(to) = seen.iter().position(|&r| !r) {
                return Err(Error::Reducible { from, to });
            }
        }
        Ok(())
    }

    /// Period of the irreducible matrix (gcd of cycle lengths).
    pub fn period(&self) -> usize {
        let mut level = vec![usize::MAX; self.size];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            for t in self.successors(s) {
                if level[t] == usize::MAX {
                    level[t] = level[s] + 1;
                    queue.push_back(t);
                }
            }
        }
        let mut p = 0usize;
        for s in 0..self.size {
            for t in self.successors(s) {
                let diff = (level[s] + 1).abs_diff(level[t]);
                p = gcd(p, diff);
            }
        }
        p.max(1)
    }

    fn compute_mixing_constant(&self) -> Option<usize> {
        let l = self.size;
        let mut power = self.allowed.clone();
        for m in 1..=l * l {
            if power.iter().all(|&v| v) {
                return Some(m);
            }
            let mut next = vec![false; l * l];
            for i in 0..l {
                for k in 0..l {
                    if power[i * l + k] {
                        for j in 0..l {
                            if self.allowed[k * l + j] {
                                next[i * l + j] = true;
                            }
                        }
                    }
                }
            }
            power = next;
        }
        None
    }

    fn check_symbol(&self, s: Symbol) -> Result<()> {
        if (s as usize) < self.size {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange { symbol: s as usize, size: self.size })
        }
    }

    /// True iff every adjacent pair of `word` is an allowed transition.
    pub fn is_admissible(&self, word: &[Symbol]) -> Result<bool> {
        for &s in word {
            self.check_symbol(s)?;
        }
        Ok(word.windows(2).all(|w| self.allows(w[0], w[1])))
    }

    /// Like [`is_admissible`](Self::is_admissible) but also checks the wrap pair.
    pub fn is_cyclically_admissible(&self, word: &[Symbol]) -> Result<bool> {
        if word.is_empty() {
            return Err(Error::EmptyPeriod);
        }
        Ok(self.is_admissible(word)? && self.allows(word[word.len() - 1], word[0]))
    }

    fn require_admissible(&self, word: &[Symbol], offset: usize) -> Result<()> {
        for &s in word {
            self.check_symbol(s)?;
        }
        for (i, w) in word.windows(2).enumerate() {
            if !self.allows(w[0], w[1]) {
                return Err(Error::Inadmissible { from: w[0] as usize, to: w[1] as usize, position: offset + i });
            }
        }
        Ok(())
    }

    fn int_power_trace(&self, n: usize) -> u128 {
        let l = self.size;
        let base: Vec<u128> = self.allowed.iter().map(|&b| b as u128).collect();
        let mut acc: Vec<u128> = (0..l * l).map(|i| (i / l == i % l) as u128).collect();
        for _ in 0..n {
            let mut next = vec![0u128; l * l];
            for i in 0..l {
                for k in 0..l {
                    let a = acc[i * l + k];
                    if a == 0 {
                        continue;
                    }
                    for j in 0..l {
                        next[i * l + j] = next[i * l + j].saturating_add(a * base[k * l + j]);
                    }
                }
            }
            acc = next;
        }
        (0..l).map(|i| acc[i * l + i]).fold(0u128, |a, b| a.saturating_add(b))
    }

    /// Number of points fixed by `σ^n`, i.e. `trace(Q^n)`.
    pub fn periodic_count(&self, n: usize) -> u128 {
        self.int_power_trace(n)
    }

    /// Number of admissible words of length `len`.
    pub fn word_count(&self, len: usize) -> u128 {
        if len == 0 {
            return 1;
        }
        let l = self.size;
        let mut counts = vec![1u128; l];
        for _ in 1..len {
            let mut next = vec![0u128; l];
            for (s, &c) in counts.iter().enumerate() {
                for t in self.successors(s) {
                    next[t] = next[t].saturating_add(c);
                }
            }
            counts = next;
        }
        counts.iter().fold(0u128, |a, &b| a.saturating_add(b))
    }

    /// All admissible words of length `len` in lexicographic order.
    pub fn admissible_words(&self, len: usize, budget: u128) -> Result<Vec<Word>> {
        let needed = self.word_count(len);
        if needed > budget {
            return Err(Error::BudgetExceeded { what: "admissible words", needed, budget });
        }
        let mut out = Vec::with_capacity(needed as usize);
        if len == 0 {
            out.push(Vec::new());
            return Ok(out);
        }
        let mut word = Vec::with_capacity(len);
        self.extend_words(&mut word, len, &mut out, None);
        Ok(out)
    }

    fn extend_words(&self, word: &mut Word, len: usize, out: &mut Vec<Word>, cyclic: Option<()>) {
        if word.len() == len {
            if cyclic.is_none() || self.allows(word[len - 1], word[0]) {
                out.push(word.clone());
            }
            return;
        }
        let candidates: Vec<usize> = match word.last() {
            None => (0..self.size).collect(),
            Some(&last) => self.successors(last as usize).collect(),
        };
        for s in candidates {
            word.push(s as Symbol);
            self.extend_words(word, len, out, cyclic);
            word.pop();
        }
    }

    /// All periodic points of period dividing `n` (fixed points of `σ^n`),
    /// as cyclic words of length `n` in lexicographic order.
    pub fn enumerate_periodic(&self, n: usize, budget: u128) -> Result<Vec<PeriodicPoint>> {
        if n == 0 {
            return Err(Error::InvalidParameter("period must be at least 1".into()));
        }
        let needed = self.periodic_count(n);
        if needed > budget {
            return Err(Error::BudgetExceeded { what: "periodic points", needed, budget });
        }
        let mut words = Vec::with_capacity(needed as usize);
        let mut word = Vec::with_capacity(n);
        self.extend_words(&mut word, n, &mut words, Some(()));
        Ok(words.into_iter().map(|word| PeriodicPoint { word }).collect())
    }

    /// Lexicographically smallest word `w` of length `len` with `a·w·b` admissible.
    pub fn connecting_word(&self, a: Symbol, b: Symbol, len: usize) -> Result<Word> {
        self.check_symbol(a)?;
        self.check_symbol(b)?;
        // reach[k][s]: b is reachable from s in exactly k transitions
        let mut reach = vec![vec![false; self.size]; len + 2];
        reach[0][b as usize] = true;
        for k in 1..len + 2 {
            for s in 0..self.size {
                reach[k][s] = self.successors(s).any(|t| reach[k - 1][t]);
            }
        }
        if !reach[len + 1][a as usize] {
            return Err(Error::NoConnectingWord { from: a as usize, to: b as usize, len });
        }
        let mut word = Vec::with_capacity(len);
        let mut cur = a as usize;
        for i in 0..len {
            let next = self
                .successors(cur)
                .find(|&s| reach[len - i][s])
                .expect("reachability table guarantees a successor");
            word.push(next as Symbol);
            cur = next;
        }
        Ok(word)
    }

    /// Shortest (then lexicographically smallest) word `w` with `s·w·s` admissible.
    pub fn shortest_return(&self, s: Symbol) -> Result<Word> {
        for len in 0..=self.size {
            if let Ok(w) = self.connecting_word(s, s, len) {
                return Ok(w);
            }
        }
        Err(Error::NoConnectingWord { from: s as usize, to: s as usize, len: self.size })
    }

    /// Closes `window`, which occupies coordinates `lo..lo+len`, into an
    /// eventually periodic point with shortest-return periodic tails.
    pub fn close_window(&self, window: Word, lo: i64) -> Result<SymbolicPoint> {
        let (Some(&first), Some(&last)) = (window.first(), window.last()) else {
            return Err(Error::InvalidParameter("cannot close an empty window".into()));
        };
        let mut right = self.shortest_return(last)?;
        right.push(last);
        let mut left = vec![first];
        left.extend(self.shortest_return(first)?);
        let x = SymbolicPoint::from_coordinates(left, window, lo, right);
        self.check_point(&x)?;
        Ok(x)
    }

    /// Validates every adjacent pair of an eventually periodic point.
    pub fn check_point(&self, x: &SymbolicPoint) -> Result<()> {
        let mut seq = Vec::with_capacity(x.left.len() * 2 + x.core.len() + x.right.len() * 2);
        seq.extend_from_slice(&x.left);
        seq.extend_from_slice(&x.left);
        seq.extend_from_slice(&x.core);
        seq.extend_from_slice(&x.right);
        seq.extend_from_slice(&x.right);
        self.require_admissible(&seq, 0)
    }
}

/// `N(x, y)`: the largest `N` with `x_n = y_n` for all `|n| < N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgreementRadius {
    Finite(u64),
    Infinite,
}

/// Parameters of the metric `ρ_τ(x, y) = exp(-τ N(x, y))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub tau: f64,
}

impl MetricParams {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau.is_finite() {
            Ok(MetricParams { tau })
        } else {
            Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")))
        }
    }

    pub fn distance(&self, x: &SymbolicPoint, y: &SymbolicPoint) -> f64 {
        self.distance_from_radius(x.agreement_radius(y))
    }

    pub fn distance_from_radius(&self, n: AgreementRadius) -> f64 {
        match n {
            AgreementRadius::Finite(n) => (-self.tau * n as f64).exp(),
            AgreementRadius::Infinite => 0.0,
        }
    }
}

/// An eventually periodic point `(left)^∞ · core · (right)^∞`.
///
/// Coordinate `n` of the point is entry `n + origin` of the concatenation,
/// where index 0 is the first symbol of `core` (negative indices run into
/// the left period).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolicPoint {
    left: Word,
    core: Word,
    right: Word,
    origin: i64,
}

impl SymbolicPoint {
    pub fn new(q: &TransitionMatrix, left: Word, core: Word, right: Word, origin: i64) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::EmptyPeriod);
        }
        let x = SymbolicPoint { left, core, right, origin };
        q.check_point(&x)?;
        Ok(x)
    }

    /// Builds a point from explicit coordinates `lo..lo+window.len()` and the
    /// periodic tails before and after them.  `left` is the block that
    /// immediately precedes coordinate `lo`; `right` the block starting right
    /// after the window.
    pub(crate) fn from_coordinates(left: Word, window: Word, lo: i64, right: Word) -> Self {
        debug_assert!(!left.is_empty() && !right.is_empty());
        SymbolicPoint { left, core: window, right, origin: -lo }
    }

    pub fn left_period(&self) -> &[Symbol] {
        &self.left
    }

    pub fn core(&self) -> &[Symbol] {
        &self.core
    }

    pub fn right_period(&self) -> &[Symbol] {
        &self.right
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    /// The symbol at coordinate `n`.
    pub fn coord(&self, n: i64) -> Symbol {
        let i = n + self.origin;
        if i < 0 {
            self.left[i.rem_euclid(self.left.len() as i64) as usize]
        } else if (i as usize) < self.core.len() {
            self.core[i as usize]
        } else {
            let j = i as usize - self.core.len();
            self.right[j % self.right.len()]
        }
    }

    /// Coordinates `center - radius ..= center + radius`.
    pub fn window(&self, center: i64, radius: usize) -> Word {
        let r = radius as i64;
        (center - r..=center + r).map(|n| self.coord(n)).collect()
    }

    /// Coordinates `lo .. lo + len`.
    pub fn segment(&self, lo: i64, len: usize) -> Word {
        (lo..lo + len as i64).map(|n| self.coord(n)).collect()
    }

    /// `σ^k(x)`.
    pub fn shift(&self, k: i64) -> Self {
        SymbolicPoint { origin: self.origin + k, ..self.clone() }
    }

    /// First coordinate of the left periodic region boundary: every `n` below
    /// this lies in the left tail.
    fn left_boundary(&self) -> i64 {
        -self.origin
    }

    /// Every coordinate `n >= right_boundary` lies in the right tail.
    fn right_boundary(&self) -> i64 {
        self.core.len() as i64 - self.origin
    }

    /// First `n >= from` with `x_n != y_n`, if any.
    fn first_forward_mismatch(&self, other: &Self, from: i64) -> Option<i64> {
        let end = from.max(self.right_boundary()).max(other.right_boundary())
            + lcm(self.right.len(), other.right.len()) as i64;
        (from..end).find(|&n| self.coord(n) != other.coord(n))
    }

    /// Largest `n <= from` with `x_n != y_n`, if any.
    fn first_backward_mismatch(&self, other: &Self, from: i64) -> Option<i64> {
        let end = from.min(self.left_boundary()).min(other.left_boundary())
            - lcm(self.left.len(), other.left.len()) as i64;
        (end + 1..=from).rev().find(|&n| self.coord(n) != other.coord(n))
    }

    /// True iff `x_n = y_n` for all `n >= 0` (`y ∈ W^s_loc(x)`).
    pub fn same_future(&self, other: &Self) -> bool {
        self.first_forward_mismatch(other, 0).is_none()
    }

    /// True iff `x_n = y_n` for all `n <= 0` (`y ∈ W^u_loc(x)`).
    pub fn same_past(&self, other: &Self) -> bool {
        self.first_backward_mismatch(other, 0).is_none()
    }

    /// Exact `N(x, y)`.
    pub fn agreement_radius(&self, other: &Self) -> AgreementRadius {
        let fwd = self.first_forward_mismatch(other, 0).map(|n| n as u64);
        let bwd = self.first_backward_mismatch(other, 0).map(|n| n.unsigned_abs());
        match (fwd, bwd) {
            (None, None) => AgreementRadius::Infinite,
            (Some(a), None) | (None, Some(a)) => AgreementRadius::Finite(a),
            (Some(a), Some(b)) => AgreementRadius::Finite(a.min(b)),
        }
    }

    /// `[x, y]`: coordinates of `x` for `n <= 0` and of `y` for `n >= 0`.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        let (a, b) = (self.coord(0), other.coord(0));
        if a != b {
            return Err(Error::BracketUndefined(a, b));
        }
        let lo = self.left_boundary().min(0);
        let hi = other.right_boundary().max(1);
        let left = self.segment(lo - self.left.len() as i64, self.left.len());
        let right = other.segment(hi, other.right.len());
        let mut window = self.segment(lo, (1 - lo) as usize);
        window.extend(other.segment(1, (hi - 1) as usize));
        Ok(SymbolicPoint::from_coordinates(left, window, lo, right))
    }
}

impl SymbolicPoint {
    /// Coordinates of `self` for `m <= n` and of `other` for `m >= n`.
    pub fn bracket_at(&self, other: &Self, n: i64) -> Result<Self> {
        Ok(self.shift(n).bracket(&other.shift(n))?.shift(-n))
    }
}

impl PartialEq for SymbolicPoint {
    fn eq(&self, other: &Self) -> bool {
        self.agreement_radius(other) == AgreementRadius::Infinite
    }
}

impl Eq for SymbolicPoint {}

impl fmt::Display for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = 4.max(self.core.len() as i64);
        let past: String = (-r..0).map(|n| DIGITS[self.coord(n) as usize] as char).collect();
        let future: String = (0..=r).map(|n| DIGITS[self.coord(n) as usize] as char).collect();
        write!(f, "({})^∞…{}|{}…({})^∞", format_word(&self.left), past, future, format_word(&self.right))
    }
}

/// A periodic point given by its cyclic word; coordinate `n` is `word[n mod q]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodicPoint {
    word: Word,
}

impl PeriodicPoint {
    pub fn new(q: &TransitionMatrix, word: Word) -> Result<Self> {
        if !q.is_cyclically_admissible(&word)? {
            let n = word.len();
            let pos = (0..n).find(|&i| !q.allows(word[i], word[(i + 1) % n])).unwrap_or(0);
            return Err(Error::Inadmissible {
                from: word[pos] as usize,
                to: word[(pos + 1) % n] as usize,
                position: pos,
            });
        }
        Ok(PeriodicPoint { word })
    }

    pub fn word(&self) -> &[Symbol] {
        &self.word
    }

    pub fn period(&self) -> usize {
        self.word.len()
    }

    pub fn point(&self) -> SymbolicPoint {
        SymbolicPoint { left: self.word.clone(), core: Vec::new(), right: self.word.clone(), origin: 0 }
    }

    /// `σ^k(p)` as a periodic point.
    pub fn rotate(&self, k: i64) -> Self {
        let q = self.word.len() as i64;
        let s = k.rem_euclid(q) as usize;
        let mut word = self.word[s..].to_vec();
        word.extend_from_slice(&self.word[..s]);
        PeriodicPoint { word }
    }
}
