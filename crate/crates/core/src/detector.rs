//! Click statistics of an array of ON-OFF detectors fed by a passive splitter.
//!
//! The array is summarized by its click matrix `c[k][m] = P(k clicks | m photons)`,
//! which is the Fock-diagonal form of the array's POVM. Losses are applied by
//! binomial thinning, photon placement by an occupancy recurrence (balanced
//! arms) or an exact multinomial recurrence (unbalanced arms), and dark
//! counts as independent Bernoulli clicks on the detectors left empty.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::math::{binomial, binomial_pmf, binomial_row};

/// Physical description of a multiplexed detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    /// Fraction of the input intensity routed to each ON-OFF detector.
    pub weights: Vec<f64>,
    /// Efficiency of each ON-OFF detector.
    pub kappas: Vec<f64>,
    /// Per-detector dark-click probability.
    pub dark_eps: f64,
    /// Probability that a lone click in an adjacent pair is reported as two.
    pub corr_p: f64,
}

impl DetectorSpec {
    /// `n` lossless detectors behind a balanced splitter.
    pub fn balanced(n: usize) -> Self {
        DetectorSpec {
            weights: vec![1.0 / n as f64; n],
            kappas: vec![1.0; n],
            dark_eps: 0.0,
            corr_p: 0.0,
        }
    }

    /// Weights produced by a chain of taps, see [`sequential_weights`].
    pub fn from_taps(taps: &[f64]) -> Result<Self> {
        let weights = sequential_weights(taps)?;
        Ok(DetectorSpec {
            kappas: vec![1.0; weights.len()],
            weights,
            dark_eps: 0.0,
            corr_p: 0.0,
        })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = weights;
        self
    }

    /// Same efficiency on every detector.
    pub fn with_efficiency(mut self, kappa: f64) -> Self {
        self.kappas = vec![kappa; self.weights.len()];
        self
    }

    pub fn with_kappas(mut self, kappas: Vec<f64>) -> Self {
        self.kappas = kappas;
        self
    }

    pub fn with_dark_eps(mut self, eps: f64) -> Self {
        self.dark_eps = eps;
        self
    }

    pub fn with_corr_p(mut self, p: f64) -> Self {
        self.corr_p = p;
        self
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidSpec("at least one detector is required".into()));
        }
        if self.kappas.len() != n {
            return Err(Error::InvalidSpec(format!(
                "{} efficiencies for {} detectors",
                self.kappas.len(),
                n
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidSpec(format!("splitting weight {w} is negative")));
        }
        let total: f64 = self.weights.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidSpec(format!("splitting weights sum to {total} > 1")));
        }
        if let Some(k) = self.kappas.iter().find(|k| !(0.0..=1.0).contains(*k)) {
            return Err(Error::InvalidSpec(format!("efficiency {k} outside [0, 1]")));
        }
        if !(0.0..1.0).contains(&self.dark_eps) {
            return Err(Error::InvalidSpec(format!(
                "dark-count probability {} outside [0, 1)",
                self.dark_eps
            )));
        }
        if !(0.0..=1.0).contains(&self.corr_p) {
            return Err(Error::InvalidSpec(format!(
                "pair-correlation probability {} outside [0, 1]",
                self.corr_p
            )));
        }
        if self.corr_p > 0.0 && n % 2 == 1 {
            return Err(Error::OddDetectorCount(n));
        }
        Ok(())
    }

    /// Per-arm detection probabilities `eta_j * kappa_j`.
    fn arm_probabilities(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.kappas)
            .map(|(w, k)| w * k)
            .collect()
    }

    fn is_balanced(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|w| (w - w0).abs() <= 1e-15 * w0.max(1.0))
    }
}

/// `kappa_bar = sum_j kappa_j eta_j`.
pub fn effective_efficiency(spec: &DetectorSpec) -> f64 {
    spec.weights.iter().zip(&spec.kappas).map(|(w, k)| w * k).sum()
}

/// Splitting weights of a sequential tap chain: `eta_j = t_j prod_{i<j} (1 - t_i)`.
pub fn sequential_weights(taps: &[f64]) -> Result<Vec<f64>> {
    let mut remaining = 1.0;
    let mut out = Vec::with_capacity(taps.len());
    for &t in taps {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("tap ratio {t} outside [0, 1]")));
        }
        out.push(t * remaining);
        remaining *= 1.0 - t;
    }
    Ok(out)
}

/// `P(exactly k of n equal bins occupied | m balls)` for `k = 0..=n`.
pub fn occupancy_dp(n: usize, m: usize) -> Vec<f64> {
    occupancy_table(n, m + 1).pop().expect("table has m + 1 rows")
}

/// Rows `0..len` of the occupancy distribution, one per ball count.
pub fn occupancy_table(n: usize, len: usize) -> Vec<Vec<f64>> {
    let nf = n as f64;
    let mut rows = Vec::with_capacity(len);
    let mut cur = vec![0.0; n + 1];
    cur[0] = 1.0;
    for _ in 0..len {
        rows.push(cur.clone());
        let mut next = vec![0.0; n + 1];
        for k in 0..=n {
            let p = cur[k];
            if p == 0.0 {
                continue;
            }
            // next ball lands in an occupied bin or opens a new one
            next[k] += p * k as f64 / nf;
            if k < n {
                next[k + 1] += p * (n - k) as f64 / nf;
            }
        }
        cur = next;
    }
    rows
}

/// Conditional click distribution `c[k][m]` of an array, `(n+1) x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickMatrix {
    c: DMatrix<f64>,
}

impl ClickMatrix {
    pub fn from_matrix(c: DMatrix<f64>) -> Self {
        ClickMatrix { c }
    }

    /// Photon-number-resolving detector of efficiency `kappa` with unlimited
    /// resolution up to the truncation: `c[k][m] = Binomial(m, kappa)(k)`.
    pub fn ideal_pnr(kappa: f64, dim: usize) -> Self {
        ClickMatrix {
            c: DMatrix::from_fn(dim, dim, |k, m| binomial_pmf(m, k, kappa)),
        }
    }

    /// Largest click count the matrix can report.
    pub fn n(&self) -> usize {
        self.c.nrows() - 1
    }

    pub fn dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.c[(k, m)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn column(&self, m: usize) -> Vec<f64> {
        self.c.column(m).iter().copied().collect()
    }

    /// Largest `|sum_k c[k][m] - 1|` over columns.
    pub fn stochasticity_error(&self) -> f64 {
        (0..self.dim())
            .map(|m| (self.c.column(m).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Click distribution for a photon-number distribution.
    pub fn apply(&self, dist: &[f64]) -> Result<Vec<f64>> {
        if dist.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dist.len(),
            });
        }
        Ok((0..=self.n())
            .map(|k| (0..self.dim()).map(|m| self.c[(k, m)] * dist[m]).sum())
            .collect())
    }

    /// Mean reported clicks for `m` photons.
    pub fn mean_clicks(&self, m: usize) -> f64 {
        self.c
            .column(m)
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }
}

/// Click matrix of `spec` for inputs with fewer than `dim` photons.
pub fn click_matrix(spec: &DetectorSpec, dim: usize) -> Result<ClickMatrix> {
    spec.validate()?;
    if dim == 0 {
        return Err(Error::InvalidParameter("truncation must be >= 1".into()));
    }
    let n = spec.n();
    let arms = spec.arm_probabilities();
    let uniform = arms.iter().all(|a| (a - arms[0]).abs() <= 1e-15);
    // noiseless[j][m]: exactly j detectors hold a surviving photon
    let noiseless = if uniform {
        uniform_occupancy(n, effective_efficiency(spec), dim)
    } else {
        multinomial_occupancy(&arms, dim)
    };
    Ok(ClickMatrix {
        c: add_dark_counts(&noiseless, n, spec.dark_eps),
    })
}

fn uniform_occupancy(n: usize, kappa_bar: f64, dim: usize) -> DMatrix<f64> {
    let occ = occupancy_table(n, dim);
    let mut out = DMatrix::zeros(n + 1, dim);
    for m in 0..dim {
        let thin = binomial_row(m, kappa_bar);
        for (survivors, w) in thin.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for j in 0..=n {
                out[(j, m)] += w * occ[survivors][j];
            }
        }
    }
    out
}

fn multinomial_occupancy(arms: &[f64], dim: usize) -> DMatrix<f64> {
    let n = arms.len();
    let loss = (1.0 - arms.iter().sum::<f64>()).max(0.0);
    // g[t][k]: sum over assignments of t labelled photons to the arms
    // processed so far, k arms hit, of the product of arm probabilities
    let mut g = DMatrix::zeros(dim, n + 1);
    g[(0, 0)] = 1.0;
    for &w in arms {
        let mut next = DMatrix::zeros(dim, n + 1);
        let powers: Vec<f64> = (0..dim).map(|c| crate::math::powi0(w, c)).collect();
        for t in 0..dim {
            for k in 0..=n {
                let mut acc = g[(t, k)];
                if k > 0 {
                    for c in 1..=t {
                        acc += binomial(t, c) * powers[c] * g[(t - c, k - 1)];
                    }
                }
                next[(t, k)] = acc;
            }
        }
        g = next;
    }
    let mut out = DMatrix::zeros(n + 1, dim);
    for m in 0..dim {
        for t in 0..=m {
            let w = binomial(m, t) * crate::math::powi0(loss, m - t);
            if w == 0.0 {
                continue;
            }
            for k in 0..=n {
                out[(k, m)] += w * g[(t, k)];
            }
        }
    }
    out
}

fn add_dark_counts(noiseless: &DMatrix<f64>, n: usize, eps: f64) -> DMatrix<f64> {
    if eps == 0.0 {
        return noiseless.clone();
    }
    let dark: Vec<Vec<f64>> = (0..=n).map(|free| binomial_row(free, eps)).collect();
    let mut out = DMatrix::zeros(n + 1, noiseless.ncols());
    for m in 0..noiseless.ncols() {
        for j in 0..=n {
            let p = noiseless[(j, m)];
            if p == 0.0 {
                continue;
            }
            for (d, q) in dark[n - j].iter().enumerate() {
                out[(j + d, m)] += p * q;
            }
        }
    }
    out
}

const ENUMERATION_BOUND: f64 = 1e6;

/// Click distribution for `m` photons by exhaustive enumeration of every
/// photon's arm and survival and every dark-click pattern.
pub fn brute_force_click_oracle(spec: &DetectorSpec, m: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.n();
    let cases = (n as f64).powi(m as i32);
    if cases > ENUMERATION_BOUND || n > 20 {
        return Err(Error::EnumerationBound { cases });
    }
    // per-photon outcomes: (arm, survived) pairs plus loss in the splitter
    let mut outcomes: Vec<(Option<usize>, f64)> = Vec::new();
    for j in 0..n {
        let w = spec.weights[j];
        outcomes.push((Some(j), w * spec.kappas[j]));
        outcomes.push((None, w * (1.0 - spec.kappas[j])));
    }
    let leak = 1.0 - spec.weights.iter().sum::<f64>();
    if leak > 0.0 {
        outcomes.push((None, leak));
    }
    outcomes.retain(|(_, p)| *p > 0.0);

    let mut by_mask = vec![0.0; 1 << n];
    let base = outcomes.len();
    let mut digits = vec![0usize; m];
    loop {
        let mut mask = 0usize;
        let mut prob = 1.0;
        for &d in &digits {
            let (arm, p) = outcomes[d];
            prob *= p;
            if let Some(j) = arm {
                mask |= 1 << j;
            }
        }
        by_mask[mask] += prob;
        // mixed-radix increment
        let mut i = 0;
        while i < m {
            digits[i] += 1;
            if digits[i] < base {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
    }

    let eps = spec.dark_eps;
    let mut out = vec![0.0; n + 1];
    for (mask, &p) in by_mask.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let lit = mask.count_ones() as usize;
        let empty: Vec<usize> = (0..n).filter(|j| mask & (1 << j) == 0).collect();
        // every subset of the empty detectors may fire in the dark
        for sub in 0usize..(1 << empty.len()) {
            let d = sub.count_ones() as usize;
            let q = eps.powi(d as i32) * (1.0 - eps).powi((empty.len() - d) as i32);
            out[lit + d] += p * q;
        }
    }
    Ok(out)
}

/// Click matrix of an array whose adjacent detector pairs `(1,2), (3,4), ...`
/// report a lone click as two clicks with probability `spec.corr_p`.
///
/// The base matrix must be the uncorrelated matrix of the same spec; with
/// `corr_p = 0` it is returned unchanged. Otherwise the pair statistics are
/// recomputed exactly from the joint distribution of fully and half occupied
/// pairs. Restricted to balanced weights and uniform efficiency.
pub fn correlated_click_transform(base: &ClickMatrix, spec: &DetectorSpec) -> Result<ClickMatrix> {
    spec.validate()?;
    let n = spec.n();
    if n % 2 == 1 {
        return Err(Error::OddDetectorCount(n));
    }
    if base.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            found: base.n() + 1,
        });
    }
    if !spec.is_balanced() {
        return Err(Error::InvalidSpec(
            "pair correlation is defined for balanced splitting only".into(),
        ));
    }
    if spec.kappas.iter().any(|k| *k != spec.kappas[0]) {
        return Err(Error::InvalidSpec(
            "pair correlation needs a uniform detector efficiency".into(),
        ));
    }
    let p = spec.corr_p;
    if p == 0.0 {
        return Ok(base.clone());
    }
    let dim = base.dim();
    let pairs = n / 2;
    let eps = spec.dark_eps;

    let pair_occ = pair_occupancy_table(n, dim);

    // reported clicks from h half-occupied pairs beyond their h sure clicks
    let half_extra: Vec<Vec<f64>> = (0..=pairs)
        .map(|h| binomial_row(h, eps + (1.0 - eps) * p))
        .collect();
    // reported clicks from e empty pairs
    let single = [
        (1.0 - eps) * (1.0 - eps),
        2.0 * eps * (1.0 - eps) * (1.0 - p),
        eps * eps + 2.0 * eps * (1.0 - eps) * p,
    ];
    let mut empty_clicks: Vec<Vec<f64>> = vec![vec![1.0]];
    for e in 1..=pairs {
        let prev = &empty_clicks[e - 1];
        let mut next = vec![0.0; 2 * e + 1];
        for (i, a) in prev.iter().enumerate() {
            for (s, b) in single.iter().enumerate() {
                next[i + s] += a * b;
            }
        }
        empty_clicks.push(next);
    }

    // reported click distribution for exactly `s` surviving photons
    let survivor_dist: Vec<Vec<f64>> = pair_occ
        .iter()
        .map(|state| {
            let mut out = vec![0.0; n + 1];
            for f in 0..=pairs {
                for h in 0..=(pairs - f) {
                    let w = state[f][h];
                    if w == 0.0 {
                        continue;
                    }
                    let e = pairs - f - h;
                    let sure = 2 * f + h;
                    for (x, px) in half_extra[h].iter().enumerate() {
                        for (y, py) in empty_clicks[e].iter().enumerate() {
                            out[sure + x + y] += w * px * py;
                        }
                    }
                }
            }
            out
        })
        .collect();

    let kappa_bar = effective_efficiency(spec);
    let mut c = DMatrix::zeros(n + 1, dim);
    for m in 0..dim {
        for (s, w) in binomial_row(m, kappa_bar).iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for k in 0..=n {
                c[(k, m)] += w * survivor_dist[s][k];
            }
        }
    }
    Ok(ClickMatrix { c })
}

/// For `s = 0..len` balls in `n` balanced bins grouped in adjacent pairs,
/// the joint probability `[f][h]` of `f` fully and `h` half occupied pairs.
fn pair_occupancy_table(n: usize, len: usize) -> Vec<Vec<Vec<f64>>> {
    let pairs = n / 2;
    let nf = n as f64;
    let mut cur = vec![vec![0.0; pairs + 1]; pairs + 1];
    cur[0][0] = 1.0;
    let mut rows = Vec::with_capacity(len);
    for _ in 0..len {
        rows.push(cur.clone());
        let mut next = vec![vec![0.0; pairs + 1]; pairs + 1];
        for f in 0..=pairs {
            for h in 0..=(pairs - f) {
                let p = cur[f][h];
                if p == 0.0 {
                    continue;
                }
                let e = pairs - f - h;
                // into a full pair, or the occupied half of a half pair
                next[f][h] += p * (2 * f + h) as f64 / nf;
                if e > 0 {
                    next[f][h + 1] += p * (2 * e) as f64 / nf;
                }
                if h > 0 {
                    next[f + 1][h - 1] += p * h as f64 / nf;
                }
            }
        }
        cur = next;
    }
    rows
}

/// `P(exactly one detector of a fixed adjacent pair is hit | m photons)` for a
/// balanced lossless array: `2[(1 - 1/n)^m - (1 - 2/n)^m]`.
pub fn lone_pair_probability(n: usize, m: usize) -> f64 {
    let nf = n as f64;
    2.0 * ((1.0 - 1.0 / nf).powi(m as i32) - (1.0 - 2.0 / nf).powi(m as i32))
}
