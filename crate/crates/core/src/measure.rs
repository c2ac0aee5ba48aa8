//! Stationary Markov measures on a subshift and sampling of typical points.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sft::{Symbol, SymbolicPoint, TransitionMatrix, Word};
use crate::Matrix;

const STOCHASTIC_TOL: f64 = 1e-12;

fn support_of(p: &Matrix) -> Result<TransitionMatrix> {
    if p.nrows() != p.ncols() || p.nrows() == 0 {
        return Err(Error::NotStochastic("matrix must be square and nonempty".into()));
    }
    for i in 0..p.nrows() {
        let mut sum = 0.0;
        for j in 0..p.ncols() {
            let v = p[(i, j)];
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::NotStochastic(format!("entry ({i}, {j}) = {v} is not a probability")));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::NotStochastic(format!("row {i} sums to {sum}")));
        }
    }
    let rows: Vec<Vec<u8>> = (0..p.nrows())
        .map(|i| (0..p.ncols()).map(|j| (p[(i, j)] > 0.0) as u8).collect())
        .collect();
    TransitionMatrix::irreducible(&rows)
}

fn stationary_residual(p: &Matrix, pi: &[f64]) -> f64 {
    let l = pi.len();
    (0..l)
        .map(|j| ((0..l).map(|i| pi[i] * p[(i, j)]).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max)
}

/// The unique stationary vector `π P = π` of an irreducible stochastic matrix.
pub fn stationary(p: &Matrix) -> Result<Vec<f64>> {
    support_of(p)?;
    let l = p.nrows();
    // (Pᵀ - I) π = 0 with one equation swapped for Σ π_i = 1
    let mut system = p.transpose() - DMatrix::identity(l, l);
    let mut rhs = nalgebra::DVector::zeros(l);
    for j in 0..l {
        system[(l - 1, j)] = 1.0;
    }
    rhs[l - 1] = 1.0;
    let lu = system.clone().lu();
    let mut pi = lu.solve(&rhs).ok_or(Error::Singular(f64::INFINITY))?;
    // one step of iterative refinement
    let r = &rhs - &system * &pi;
    if let Some(d) = lu.solve(&r) {
        pi += d;
    }
    let total: f64 = pi.iter().sum();
    Ok(pi.iter().map(|v| v / total).collect())
}

/// A stationary Markov measure: transition probabilities `P` and stationary `π`.
#[derive(Clone, Debug)]
pub struct MarkovMeasure {
    support: TransitionMatrix,
    p: Matrix,
    pi: Vec<f64>,
    rows: Vec<WeightedIndex<f64>>,
    reversed: Vec<WeightedIndex<f64>>,
    initial: WeightedIndex<f64>,
}

impl MarkovMeasure {
    /// Builds the measure, computing `π` when it is not supplied and validating it otherwise.
    pub fn new(p: Matrix, pi: Option<Vec<f64>>) -> Result<Self> {
        let support = support_of(&p)?;
        let pi = match pi {
            None => stationary(&p)?,
            Some(pi) => {
                if pi.len() != p.nrows() {
                    return Err(Error::DimensionMismatch(format!(
                        "stationary vector has length {}, expected {}",
                        pi.len(),
                        p.nrows()
                    )));
                }
                let total: f64 = pi.iter().sum();
                let residual = stationary_residual(&p, &pi);
                if (total - 1.0).abs() > STOCHASTIC_TOL || residual > STOCHASTIC_TOL {
                    return Err(Error::NotStochastic(format!(
                        "supplied vector is not stationary (sum {total}, residual {residual:e})"
                    )));
                }
                pi
            }
        };
        if let Some(i) = pi.iter().position(|&v| v <= 0.0) {
            return Err(Error::NotStochastic(format!("stationary weight of symbol {i} is not positive")));
        }
        let l = p.nrows();
        let rows = (0..l)
            .map(|i| WeightedIndex::new(p.row(i).iter().copied()).expect("stochastic row"))
            .collect();
        let reversed = (0..l)
            .map(|i| {
                WeightedIndex::new((0..l).map(|j| pi[j] * p[(j, i)] / pi[i])).expect("reversed chain row")
            })
            .collect();
        let initial = WeightedIndex::new(pi.iter().copied()).expect("stationary vector");
        Ok(MarkovMeasure { support, p, pi, rows, reversed, initial })
    }

    /// Uniform measure of maximal entropy on the full shift over `size` symbols.
    pub fn uniform(size: usize) -> Self {
        let p = DMatrix::from_element(size, size, 1.0 / size as f64);
        Self::new(p, Some(vec![1.0 / size as f64; size])).expect("uniform chain is valid")
    }

    /// The chain that moves to each allowed successor with equal probability.
    pub fn uniform_successors(q: &TransitionMatrix) -> Self {
        let l = q.size();
        let p = DMatrix::from_fn(l, l, |i, j| {
            let out = (0..l).filter(|&k| q.allows(i as Symbol, k as Symbol)).count();
            if q.allows(i as Symbol, j as Symbol) {
                1.0 / out as f64
            } else {
                0.0
            }
        });
        Self::new(p, None).expect("a mixing shift supports its successor chain")
    }

    /// The support shift `Q` of the chain (irreducible, possibly periodic).
    pub fn support(&self) -> &TransitionMatrix {
        &self.support
    }

    pub fn transition_probabilities(&self) -> &Matrix {
        &self.p
    }

    pub fn stationary_distribution(&self) -> &[f64] {
        &self.pi
    }

    /// Density of µ on `[0; i]` with respect to the product of its marginals.
    pub fn product_density(&self, i: Symbol) -> f64 {
        1.0 / self.pi[i as usize]
    }

    /// µ of the cylinder fixing `word` at consecutive coordinates.  The
    /// value does not depend on where the cylinder is placed.  Words that
    /// are inadmissible (or use unknown symbols) have measure 0.
    pub fn cylinder_measure(&self, word: &[Symbol]) -> f64 {
        let l = self.pi.len();
        if word.iter().any(|&s| s as usize >= l) {
            return 0.0;
        }
        let Some(&first) = word.first() else {
            return 1.0;
        };
        word.windows(2).fold(self.pi[first as usize], |acc, w| acc * self.p[(w[0] as usize, w[1] as usize)])
    }

    fn step<R: Rng + ?Sized>(&self, rng: &mut R, from: Symbol) -> Symbol {
        self.rows[from as usize].sample(rng) as Symbol
    }

    fn step_back<R: Rng + ?Sized>(&self, rng: &mut R, to: Symbol) -> Symbol {
        self.reversed[to as usize].sample(rng) as Symbol
    }

    fn forward_from<R: Rng + ?Sized>(&self, rng: &mut R, first: Symbol, len: usize) -> Word {
        let mut word = Vec::with_capacity(len);
        if len == 0 {
            return word;
        }
        word.push(first);
        for _ in 1..len {
            let next = self.step(rng, *word.last().unwrap());
            word.push(next);
        }
        word
    }

    /// A stationary word of length `len`.
    pub fn sample_word<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Word {
        if len == 0 {
            return Vec::new();
        }
        let first = self.initial.sample(rng) as Symbol;
        self.forward_from(rng, first, len)
    }

    /// Closes `window`, which occupies coordinates `lo..lo+len`, into an
    /// eventually periodic point with shortest-return periodic tails.
    pub fn close_window(&self, window: Word, lo: i64) -> Result<SymbolicPoint> {
        self.support.close_window(window, lo)
    }

    /// A point whose coordinates `0..core_length` are a stationary sample.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, core_length: usize) -> Result<SymbolicPoint> {
        self.sample_point_on(rng, 0, core_length)
    }

    /// A point whose coordinates `lo..lo+len` are a stationary sample.
    pub fn sample_point_on<R: Rng + ?Sized>(&self, rng: &mut R, lo: i64, len: usize) -> Result<SymbolicPoint> {
        if len == 0 {
            return Err(Error::InvalidParameter("core length must be at least 1".into()));
        }
        let window = self.sample_word(rng, len);
        self.close_window(window, lo)
    }

    /// A point sampled from µ conditioned on `x_0 = symbol`, with coordinates
    /// `-past..=future` drawn from the two-sided chain.
    pub fn sample_point_with_zero<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        symbol: Symbol,
        past: usize,
        future: usize,
    ) -> Result<SymbolicPoint> {
        if symbol as usize >= self.pi.len() {
            return Err(Error::SymbolOutOfRange { symbol: symbol as usize, size: self.pi.len() });
        }
        let mut back = Vec::with_capacity(past);
        let mut cur = symbol;
        for _ in 0..past {
            cur = self.step_back(rng, cur);
            back.push(cur);
        }
        back.reverse();
        back.extend(self.forward_from(rng, symbol, future + 1));
        self.close_window(back, -(past as i64))
    }
}

impl MarkovMeasure {
    /// Keeps the coordinates `n >= -keep` of `x` and redraws the `depth`
    /// coordinates before them from the reversed chain.
    pub fn resample_past<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        x: &SymbolicPoint,
        keep: usize,
        depth: usize,
    ) -> Result<SymbolicPoint> {
        let at = -(keep as i64);
        let donor = self.sample_point_with_zero(rng, x.coord(at), depth, 0)?.shift(-at);
        donor.bracket_at(x, at)
    }

    /// Keeps the coordinates `n <= keep` of `x` and redraws the `depth`
    /// coordinates after them from the chain.
    pub fn resample_future<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        x: &SymbolicPoint,
        keep: usize,
        depth: usize,
    ) -> Result<SymbolicPoint> {
        let at = keep as i64;
        let donor = self.sample_point_with_zero(rng, x.coord(at), 0, depth)?.shift(-at);
        x.bracket_at(&donor, at)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: &[&[f64]]) -> Matrix {
        DMatrix::from_row_slice(rows.len(), rows.len(), &rows.concat())
    }

    fn golden() -> MarkovMeasure {
        MarkovMeasure::new(mat(&[&[0.5, 0.5], &[1.0, 0.0]]), None).unwrap()
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary(&mat(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);
        let pi = stationary(&mat(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);
        // π_0 = π_0/2 + π_1 and π_0 + π_1 = 1 give (2/3, 1/3)
        let pi = stationary(&mat(&[&[0.5, 0.5], &[1.0, 0.0]])).unwrap();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-15 && (pi[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn stationary_rejects_bad_input() {
        assert!(matches!(stationary(&mat(&[&[0.5, 0.6], &[1.0, 0.0]])), Err(Error::NotStochastic(_))));
        assert!(matches!(stationary(&mat(&[&[1.0, 0.0], &[0.5, 0.5]])), Err(Error::Reducible { .. })));
        assert!(MarkovMeasure::new(mat(&[&[0.5, 0.5], &[1.0, 0.0]]), Some(vec![0.5, 0.5])).is_err());
    }

    #[test]
    fn stationary_residual_is_tiny() {
        let p = mat(&[&[0.2, 0.3, 0.5], &[0.6, 0.0, 0.4], &[0.1, 0.8, 0.1]]);
        let pi = stationary(&p).unwrap();
        assert!(stationary_residual(&p, &pi) <= 1e-12);
    }

    #[test]
    fn cylinder_examples() {
        let uniform = MarkovMeasure::uniform(2);
        assert_eq!(uniform.cylinder_measure(&[0, 1]), 0.25);
        let g = golden();
        assert_eq!(g.cylinder_measure(&[0]), g.stationary_distribution()[0]);
        assert_eq!(g.cylinder_measure(&[1]), g.stationary_distribution()[1]);
        assert_eq!(g.cylinder_measure(&[1, 1]), 0.0);
        assert_eq!(g.cylinder_measure(&[]), 1.0);
    }

    #[test]
    fn single_symbol_frequencies_match_stationary() {
        let g = golden();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 10_000;
        let ones = (0..draws)
            .filter(|_| g.sample_point(&mut rng, 1).unwrap().coord(0) == 1)
            .count() as f64;
        let p = g.stationary_distribution()[1];
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!((ones - draws as f64 * p).abs() <= 3.0 * sigma, "ones = {ones}");
    }

    #[test]
    fn deterministic_chain_alternates() {
        let flip = MarkovMeasure::new(mat(&[&[0.0, 1.0], &[1.0, 0.0]]), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = flip.sample_point(&mut rng, 9).unwrap();
        for n in -20..20 {
            assert_ne!(x.coord(n), x.coord(n + 1));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = golden();
        let a = g.sample_point(&mut ChaCha8Rng::seed_from_u64(42), 12).unwrap();
        let b = g.sample_point(&mut ChaCha8Rng::seed_from_u64(42), 12).unwrap();
        assert_eq!(a.core(), b.core());
        assert_eq!(a.left_period(), b.left_period());
        assert_eq!(a.right_period(), b.right_period());
    }

    #[test]
    fn conditioned_sample_has_requested_zero() {
        let g = golden();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = g.sample_point_with_zero(&mut rng, 1, 5, 5).unwrap();
            assert_eq!(x.coord(0), 1);
            g.support().check_point(&x).unwrap();
        }
    }

    #[test]
    fn resampling_keeps_the_requested_half() {
        let g = golden();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let x = g.sample_point_on(&mut rng, -10, 21).unwrap();
            let keep = rng.random_range(0..4usize);
            let z = g.resample_past(&mut rng, &x, keep, 6).unwrap();
            let w = g.resample_future(&mut rng, &x, keep, 6).unwrap();
            g.support().check_point(&z).unwrap();
            g.support().check_point(&w).unwrap();
            for n in -(keep as i64)..30 {
                assert_eq!(z.coord(n), x.coord(n));
            }
            for n in -30..=keep as i64 {
                assert_eq!(w.coord(n), x.coord(n));
            }
        }
    }

    #[test]
    fn product_structure_on_cylinders() {
        let measures = [
            golden(),
            MarkovMeasure::new(mat(&[&[0.2, 0.3, 0.5], &[0.6, 0.0, 0.4], &[0.1, 0.8, 0.1]]), None).unwrap(),
        ];
        for mu in &measures {
            let q = mu.support();
            for total in 1..=6 {
                for word in q.admissible_words(total, 1 << 16).unwrap() {
                    for split in 0..total {
                        let i = word[split];
                        let past = &word[..=split];
                        let future = &word[split..];
                        let lhs = mu.cylinder_measure(&word) * mu.stationary_distribution()[i as usize];
                        let rhs = mu.cylinder_measure(past) * mu.cylinder_measure(future);
                        assert!((lhs - rhs).abs() <= 1e-15 * rhs.abs().max(1e-300), "{word:?} split {split}");
                    }
                }
            }
        }
    }

    #[test]
    fn kolmogorov_consistency() {
        let mu = golden();
        for len in 1..=6 {
            for word in mu.support().admissible_words(len, 1 << 16).unwrap() {
                let extended: f64 = (0..2)
                    .map(|s| {
                        let mut w = word.clone();
                        w.push(s);
                        mu.cylinder_measure(&w)
                    })
                    .sum();
                assert!((extended - mu.cylinder_measure(&word)).abs() <= 1e-15);
            }
        }
    }
}
