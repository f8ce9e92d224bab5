//! Single- and two-mode bosonic states in a truncated number basis.
//!
//! Series coefficients are assembled in the log domain with explicit sign or
//! phase tracking, so constructors stay finite for any truncation the
//! log-factorial table covers. Every constructor checks the truncated norm
//! against a tail tolerance and renormalizes; the pre-normalization mass is
//! kept in [`FockVector::truncated_norm`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::math::{golden_max, ln_binomial, ln_factorial, powi0};

/// Tail mass tolerated when a constructor does not say otherwise.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Basis cutoff plus the tail mass a construction may discard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub dim: usize,
    pub tail_tol: f64,
}

impl Truncation {
    pub fn new(dim: usize) -> Self {
        Truncation {
            dim,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }

    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }
}

impl From<usize> for Truncation {
    fn from(dim: usize) -> Self {
        Truncation::new(dim)
    }
}

/// Squeezing amplitude `r`, with `r = dB * ln(10) / 20`.
///
/// The sign is kept: `SqueezeParam::from_r(-r)` is the orthogonally squeezed
/// vacuum whose number-basis coefficients carry `(+tanh r)^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParam {
    r: f64,
}

impl SqueezeParam {
    pub fn from_r(r: f64) -> Self {
        SqueezeParam { r }
    }

    pub fn from_db(db: f64) -> Self {
        SqueezeParam {
            r: db * std::f64::consts::LN_10 / 20.0,
        }
    }

    pub fn vacuum() -> Self {
        SqueezeParam { r: 0.0 }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn db(&self) -> f64 {
        self.r * 20.0 / std::f64::consts::LN_10
    }

    pub fn negated(&self) -> Self {
        SqueezeParam { r: -self.r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Parity of `(-1)^k`.
    pub fn of(k: usize) -> Self {
        if k % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn admits(&self, j: usize) -> bool {
        (j % 2 == 0) == (*self == Parity::Even)
    }
}

/// Single-mode pure state `sum_j a_j |j>`, `j < dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amps: DVector<C64>,
    truncated_norm: f64,
}

impl FockVector {
    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidParameter("state dimension must be >= 1".into()));
        }
        let amps = DVector::from_vec(amps);
        let truncated_norm = amps.norm_squared();
        Ok(FockVector {
            amps,
            truncated_norm,
        })
    }

    /// Fock state `|n>` in a `dim`-level space.
    pub fn number_state(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                found: dim,
            });
        }
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[n] = C64::new(1.0, 0.0);
        FockVector::from_amplitudes(v)
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        FockVector::number_state(0, dim)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitude(&self, j: usize) -> C64 {
        self.amps[j]
    }

    /// Squared norm of the series before renormalization.
    pub fn truncated_norm(&self) -> f64 {
        self.truncated_norm
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn normalized(&self) -> Self {
        let n = self.amps.norm();
        FockVector {
            amps: if n > 0.0 {
                self.amps.unscale(n)
            } else {
                self.amps.clone()
            },
            truncated_norm: self.truncated_norm,
        }
    }

    /// `<self|other>`
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            elements: &self.amps * self.amps.adjoint(),
        }
    }

    /// Zero-pads or crops to `dim` levels.
    pub fn resized(&self, dim: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        for (j, slot) in v.iter_mut().enumerate().take(self.dim()) {
            *slot = self.amps[j];
        }
        let amps = DVector::from_vec(v);
        FockVector {
            truncated_norm: amps.norm_squared(),
            amps,
        }
    }

    /// Applies the phase-space rotation `exp(i theta N)`.
    pub fn rotated(&self, theta: f64) -> Self {
        let amps = DVector::from_iterator(
            self.dim(),
            self.amps
                .iter()
                .enumerate()
                .map(|(j, a)| a * C64::from_polar(1.0, theta * j as f64)),
        );
        FockVector {
            amps,
            truncated_norm: self.truncated_norm,
        }
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

fn finish(op: &'static str, amps: Vec<C64>, tail_tol: f64) -> Result<FockVector> {
    let v = FockVector::from_amplitudes(amps)?;
    let norm = v.norm_squared();
    if norm < 1.0 - tail_tol {
        return Err(Error::TruncationOverflow { op, norm, tail_tol });
    }
    let mut out = v.normalized();
    out.truncated_norm = norm;
    Ok(out)
}

/// Smallest dimension (from 1 up) for which `build` succeeds.
pub fn adaptive<F>(build: F) -> Result<FockVector>
where
    F: Fn(Truncation) -> Result<FockVector>,
{
    let mut last = None;
    for dim in 1..=2048 {
        match build(Truncation::new(dim)) {
            Ok(v) => return Ok(v),
            Err(e @ Error::TruncationOverflow { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("loop ran at least once"))
}

/// Coherent state `e^{-|alpha|^2/2} sum alpha^j / sqrt(j!) |j>`.
pub fn coherent_state(alpha: C64, trunc: impl Into<Truncation>) -> Result<FockVector> {
    let t = trunc.into();
    let mag = alpha.norm();
    let phase = alpha.arg();
    let amps = (0..t.dim)
        .map(|j| {
            if mag == 0.0 {
                return C64::new(if j == 0 { 1.0 } else { 0.0 }, 0.0);
            }
            let ln = -0.5 * mag * mag + j as f64 * mag.ln() - 0.5 * ln_factorial(j);
            C64::from_polar(ln.exp(), phase * j as f64)
        })
        .collect();
    finish("coherent_state", amps, t.tail_tol)
}

/// Amplitude of `|2n>` in the squeezed vacuum, `(cosh r)^{-1/2} (-tanh r)^n sqrt((2n)!) / (2^n n!)`.
pub(crate) fn squeezed_coefficient(r: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0 / r.cosh().sqrt();
    }
    if r == 0.0 {
        return 0.0;
    }
    let t = r.tanh();
    let ln = -0.5 * r.cosh().ln() + n as f64 * t.abs().ln() + 0.5 * ln_factorial(2 * n)
        - n as f64 * std::f64::consts::LN_2
        - ln_factorial(n);
    // sign of (-tanh r)^n
    let neg = t > 0.0 && n % 2 == 1;
    if neg {
        -ln.exp()
    } else {
        ln.exp()
    }
}

/// Single-mode squeezed vacuum; only even levels are populated.
pub fn squeezed_vacuum(r: SqueezeParam, trunc: impl Into<Truncation>) -> Result<FockVector> {
    let t = trunc.into();
    let amps = (0..t.dim)
        .map(|j| {
            if j % 2 == 1 {
                C64::new(0.0, 0.0)
            } else {
                C64::new(squeezed_coefficient(r.r(), j / 2), 0.0)
            }
        })
        .collect();
    finish("squeezed_vacuum", amps, t.tail_tol)
}

/// Cat state `(|alpha> +/- |-alpha>) / sqrt(2 +/- 2 e^{-2|alpha|^2})`.
pub fn cat_state(alpha: C64, parity: Parity, trunc: impl Into<Truncation>) -> Result<FockVector> {
    let t = trunc.into();
    let mag = alpha.norm();
    if mag == 0.0 && parity == Parity::Odd {
        return Err(Error::DegenerateInput(
            "odd cat with alpha = 0 is the zero vector".into(),
        ));
    }
    let sign = if parity == Parity::Even { 1.0 } else { -1.0 };
    let ln_norm = 0.5 * (2.0 + sign * 2.0 * (-2.0 * mag * mag).exp()).ln();
    let phase = alpha.arg();
    let amps = (0..t.dim)
        .map(|j| {
            if !parity.admits(j) {
                return C64::new(0.0, 0.0);
            }
            if mag == 0.0 {
                return C64::new(if j == 0 { 1.0 } else { 0.0 }, 0.0);
            }
            let ln = -ln_norm - 0.5 * mag * mag + std::f64::consts::LN_2 + j as f64 * mag.ln()
                - 0.5 * ln_factorial(j);
            C64::from_polar(ln.exp(), phase * j as f64)
        })
        .collect();
    finish("cat_state", amps, t.tail_tol)
}

/// Beamsplitter phase convention used when splitting squeezed light.
///
/// Mode `a` carries the first input and is the one sent to the detector;
/// mode `b` carries the second input and is kept. `eta` is the fraction of
/// the first input's intensity that ends up in the kept mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitConvention {
    /// `a -> sqrt(1-eta) a - i sqrt(eta) b`, `b -> -i sqrt(eta) a + sqrt(1-eta) b`.
    Subtraction,
    /// `a -> sqrt(1-eta) a + sqrt(eta) b`, `b -> -sqrt(eta) a + sqrt(1-eta) b`.
    Generalized,
}

impl SplitConvention {
    /// Images of the input creation operators as `(coef of a†, coef of b†)`.
    fn creation_images(&self, eta: f64) -> ([C64; 2], [C64; 2]) {
        let t = (1.0 - eta).sqrt();
        let e = eta.sqrt();
        match self {
            SplitConvention::Subtraction => (
                [C64::new(t, 0.0), C64::new(0.0, e)],
                [C64::new(0.0, e), C64::new(t, 0.0)],
            ),
            SplitConvention::Generalized => (
                [C64::new(t, 0.0), C64::new(e, 0.0)],
                [C64::new(-e, 0.0), C64::new(t, 0.0)],
            ),
        }
    }
}

/// Two-mode pure state `Psi[m][j]` (m = measured mode, j = kept mode).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    amps: DMatrix<C64>,
}

impl TwoModeState {
    pub fn from_matrix(amps: DMatrix<C64>) -> Self {
        TwoModeState { amps }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.amps.nrows(), self.amps.ncols())
    }

    pub fn amplitudes(&self) -> &DMatrix<C64> {
        &self.amps
    }

    pub fn get(&self, m: usize, j: usize) -> C64 {
        self.amps[(m, j)]
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// `(<m| (x) I)|Psi>` as an unnormalized kept-mode vector.
    pub fn project_measured(&self, m: usize) -> DVector<C64> {
        self.amps.row(m).transpose()
    }

    /// Photon-number distribution of the measured mode.
    pub fn measured_marginal(&self) -> Vec<f64> {
        (0..self.amps.nrows())
            .map(|m| self.amps.row(m).norm_squared())
            .collect()
    }
}

/// Polynomial `sum_N c_N (u_a a† + u_b b†)^N / sqrt(N!) |00>` in the number
/// basis, restricted to `m, j < dim`.
fn expand_input(coeffs: &[f64], image: [C64; 2], dim: usize) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for p in 0..dim {
        for s in 0..dim {
            let n = p + s;
            let c = coeffs.get(n).copied().unwrap_or(0.0);
            if c == 0.0 {
                continue;
            }
            // c_N sqrt(N! / (p! s!)) u_a^p u_b^s
            let mag = (c.abs().ln() + 0.5 * ln_binomial(n, p)).exp();
            let phase = powc(image[0], p) * powc(image[1], s);
            out[(p, s)] = phase * (mag * c.signum());
        }
    }
    out
}

fn powc(z: C64, k: usize) -> C64 {
    if k == 0 {
        C64::new(1.0, 0.0)
    } else {
        z.powi(k as i32)
    }
}

fn squeezed_series(r: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| {
            if n % 2 == 1 {
                0.0
            } else {
                squeezed_coefficient(r, n / 2)
            }
        })
        .collect()
}

/// Interferes one or two squeezed vacua on a beamsplitter.
///
/// Each input is expanded as a polynomial in its creation operator, the
/// Bogoliubov images of the chosen convention are substituted, and the two
/// polynomials are multiplied. Fails if the `dim x dim` box holds less than
/// `1 - tail_tol` of the joint norm.
pub fn split_squeezed_pair(
    r1: SqueezeParam,
    r2: Option<SqueezeParam>,
    eta: f64,
    convention: SplitConvention,
    trunc: impl Into<Truncation>,
) -> Result<TwoModeState> {
    let t = trunc.into();
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta = {eta} outside [0, 1]")));
    }
    if t.dim == 0 {
        return Err(Error::InvalidParameter("truncation must be >= 1".into()));
    }
    let dim = t.dim;
    let len = 2 * dim - 1;
    let (img_a, img_b) = convention.creation_images(eta);
    let first = expand_input(&squeezed_series(r1.r(), len), img_a, dim);

    let amps = match r2 {
        None => first,
        Some(r2) => {
            let second = expand_input(&squeezed_series(r2.r(), len), img_b, dim);
            // sqrt(C(m, p) C(j, s)) weights of the product in the number basis
            let sqrt_binom = DMatrix::from_fn(dim, dim, |n, k| {
                if k <= n {
                    (0.5 * ln_binomial(n, k)).exp()
                } else {
                    0.0
                }
            });
            let mut out = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
            for p in 0..dim {
                for s in 0..dim {
                    let x = first[(p, s)];
                    if x.norm_sqr() == 0.0 {
                        continue;
                    }
                    for q in 0..dim - p {
                        for u in 0..dim - s {
                            let y = second[(q, u)];
                            if y.norm_sqr() == 0.0 {
                                continue;
                            }
                            let (m, j) = (p + q, s + u);
                            out[(m, j)] += x * y * (sqrt_binom[(m, p)] * sqrt_binom[(j, s)]);
                        }
                    }
                }
            }
            out
        }
    };
    let state = TwoModeState { amps };
    let norm = state.norm_squared();
    if norm < 1.0 - t.tail_tol {
        return Err(Error::TruncationOverflow {
            op: "split_squeezed_pair",
            norm,
            tail_tol: t.tail_tol,
        });
    }
    Ok(state)
}

/// Padded dimension used for squeezing a `dim`-level state: `dim + max(16, dim)`.
pub fn default_padded_dim(dim: usize) -> usize {
    dim + dim.max(16)
}

/// Matrix of the squeeze operator on the first `padded_dim` levels, generated
/// by `(r/2)(a^2 - a†^2)`, so that it maps `|0>` to `squeezed_vacuum(r)`.
pub fn squeeze_matrix(r: f64, padded_dim: usize) -> DMatrix<f64> {
    let mut gen = DMatrix::zeros(padded_dim, padded_dim);
    // a^2 |j> = sqrt(j (j-1)) |j-2>
    for j in 2..padded_dim {
        let v = 0.5 * r * ((j * (j - 1)) as f64).sqrt();
        gen[(j - 2, j)] += v;
        gen[(j, j - 2)] -= v;
    }
    gen.exp()
}

/// Applies the squeeze operator on a padded space and crops back.
pub fn squeeze_operator_apply(
    state: &FockVector,
    r: f64,
    padded_dim: usize,
    tail_tol: f64,
) -> Result<FockVector> {
    let dim = state.dim();
    if padded_dim < dim {
        return Err(Error::InvalidParameter(format!(
            "padded dimension {padded_dim} smaller than state dimension {dim}"
        )));
    }
    if r == 0.0 {
        return Ok(state.clone());
    }
    let s = squeeze_matrix(r, padded_dim).map(|x| C64::new(x, 0.0));
    let padded = state.resized(padded_dim);
    let out = s * padded.amplitudes();
    let cropped: Vec<C64> = out.iter().take(dim).copied().collect();
    let before = state.norm_squared();
    let after: f64 = cropped.iter().map(|a| a.norm_sqr()).sum();
    if after < before * (1.0 - tail_tol) {
        return Err(Error::PadInsufficient {
            op: "squeeze_operator_apply",
            norm: after / before,
        });
    }
    FockVector::from_amplitudes(cropped)
}

/// Mixed single-mode state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(elements: DMatrix<C64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch {
                expected: elements.nrows(),
                found: elements.ncols(),
            });
        }
        Ok(DensityMatrix { elements })
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<C64> {
        &self.elements
    }

    pub fn trace(&self) -> f64 {
        self.elements.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn normalized(&self) -> Self {
        let tr = self.trace();
        DensityMatrix {
            elements: self.elements.unscale(tr),
        }
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.elements - self.elements.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.elements + self.elements.adjoint()).unscale(2.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// `U rho U^dagger` for a real matrix `U` of matching size.
    pub fn conjugated_by(&self, u: &DMatrix<f64>) -> Result<Self> {
        check_dim(self.dim(), u.nrows())?;
        let uc = u.map(|x| C64::new(x, 0.0));
        Ok(DensityMatrix {
            elements: &uc * &self.elements * uc.adjoint(),
        })
    }

    /// Mass on levels whose parity differs from `parity`.
    pub fn off_parity_mass(&self, parity: Parity) -> f64 {
        (0..self.dim())
            .filter(|&j| !parity.admits(j))
            .map(|j| self.elements[(j, j)].re)
            .sum::<f64>()
            / self.trace()
    }

    /// Largest `|rho_ij|` between levels of opposite parity.
    pub fn parity_coherence(&self) -> f64 {
        let d = self.dim();
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|(i, j)| (i + j) % 2 == 1)
            .map(|(i, j)| self.elements[(i, j)].norm())
            .fold(0.0, f64::max)
    }
}

/// Anything with a number-basis population.
pub trait PhotonStatistics {
    fn photon_distribution(&self) -> Vec<f64>;
}

impl PhotonStatistics for FockVector {
    fn photon_distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl PhotonStatistics for DensityMatrix {
    fn photon_distribution(&self) -> Vec<f64> {
        let tr = self.trace();
        (0..self.dim()).map(|j| self.elements[(j, j)].re / tr).collect()
    }
}

pub fn photon_distribution<S: PhotonStatistics + ?Sized>(state: &S) -> Vec<f64> {
    state.photon_distribution()
}

/// `sum_m m^h p_m`.
pub fn moment_true<S: PhotonStatistics + ?Sized>(state: &S, h: u32) -> f64 {
    moment_of_distribution(&state.photon_distribution(), h)
}

pub fn moment_of_distribution(dist: &[f64], h: u32) -> f64 {
    dist.iter()
        .enumerate()
        .map(|(m, p)| powi0(m as f64, h as usize) * p)
        .sum()
}

/// `<target|rho|target> / tr(rho)`.
pub fn fidelity(target: &FockVector, state: &DensityMatrix) -> Result<f64> {
    check_dim(target.dim(), state.dim())?;
    let t = target.amplitudes();
    let v = t.dotc(&(state.elements() * t));
    Ok((v.re / state.trace()).clamp(0.0, 1.0))
}

/// Fidelity maximized over a phase-space rotation `exp(i theta N)` of the
/// target. Returns `(fidelity, theta)`.
pub fn fidelity_phase_optimized(target: &FockVector, state: &DensityMatrix) -> Result<(f64, f64)> {
    check_dim(target.dim(), state.dim())?;
    let d = target.dim();
    let t = target.amplitudes();
    let rho = state.elements();
    // f(theta) = sum_delta e^{i theta delta} M_delta, delta = j - i
    let mut moments = vec![C64::new(0.0, 0.0); 2 * d - 1];
    for i in 0..d {
        for j in 0..d {
            moments[j + d - 1 - i] += t[i].conj() * rho[(i, j)] * t[j];
        }
    }
    let tr = state.trace();
    let f = |theta: f64| -> f64 {
        let mut acc = 0.0;
        for (idx, m) in moments.iter().enumerate() {
            let delta = idx as f64 - (d as f64 - 1.0);
            acc += (m * C64::from_polar(1.0, theta * delta)).re;
        }
        acc / tr
    };
    const GRID: usize = 1440;
    let step = std::f64::consts::TAU / GRID as f64;
    let (mut best_theta, mut best) = (0.0, f(0.0));
    for i in 1..GRID {
        let th = i as f64 * step;
        let v = f(th);
        if v > best {
            best = v;
            best_theta = th;
        }
    }
    let (th, v) = golden_max(f, best_theta - step, best_theta + step, 1e-10);
    if v > best {
        best = v;
        best_theta = th;
    }
    Ok((best.clamp(0.0, 1.0), best_theta.rem_euclid(std::f64::consts::TAU)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn coherent_vacuum_and_mean() {
        let v = coherent_state(c(0.0), 5).unwrap();
        assert_eq!(v.amplitude(0), c(1.0));
        assert!(v.amplitudes().iter().skip(1).all(|a| a.norm() == 0.0));

        let a = coherent_state(c(std::f64::consts::FRAC_1_SQRT_2), 30).unwrap();
        assert!((moment_true(&a, 1) - 0.5).abs() < 1e-10);
        assert!((moment_true(&a, 2) - 0.75).abs() < 1e-9);
    }

    #[test]
    fn coherent_overflow_when_too_small() {
        let err = coherent_state(c(1.0), 2).unwrap_err();
        match err {
            Error::TruncationOverflow { norm, .. } => {
                // e^{-1} (1 + 1)
                assert!((norm - 2.0 * (-1.0f64).exp()).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn squeezed_vacuum_structure() {
        let r = SqueezeParam::from_db(7.0);
        assert!((r.r() - 0.7 * std::f64::consts::LN_10 / 2.0).abs() < 1e-15);
        let v = squeezed_vacuum(r, 120).unwrap();
        assert!((v.amplitude(0).norm_sqr() - 1.0 / r.r().cosh()).abs() < 1e-10);
        let odd: f64 = (1..120).step_by(2).map(|j| v.amplitude(j).norm_sqr()).sum();
        assert_eq!(odd, 0.0);
        // alternating signs for r > 0
        for n in 0..10 {
            let a = v.amplitude(2 * n).re;
            assert_eq!(a > 0.0, n % 2 == 0);
        }
        let flipped = squeezed_vacuum(r.negated(), 120).unwrap();
        assert!((0..10).all(|n| flipped.amplitude(2 * n).re > 0.0));
        assert_eq!(squeezed_vacuum(SqueezeParam::vacuum(), 4).unwrap().amplitude(0), c(1.0));
    }

    #[test]
    fn cat_state_values() {
        let s2 = 2f64.sqrt();
        let cat = cat_state(c(s2), Parity::Even, 40).unwrap();
        let expect = 2.0 * (-1.0f64).exp() / (2.0 + 2.0 * (-4.0f64).exp()).sqrt();
        assert!((cat.amplitude(0).re - expect).abs() < 1e-12);
        assert!((1..40).step_by(2).all(|j| cat.amplitude(j).norm() == 0.0));

        let odd = cat_state(c(s2), Parity::Odd, 40).unwrap();
        assert!((0..40).step_by(2).all(|j| odd.amplitude(j).norm() == 0.0));
        assert!((odd.norm_squared() - 1.0).abs() < 1e-12);

        assert_eq!(cat_state(c(0.0), Parity::Even, 3).unwrap().amplitude(0), c(1.0));
        assert!(matches!(
            cat_state(c(0.0), Parity::Odd, 3),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn fock_moments() {
        let three = FockVector::number_state(3, 6).unwrap();
        assert_eq!(moment_true(&three, 2), 9.0);
        let vac = FockVector::vacuum(6).unwrap();
        assert_eq!(moment_true(&vac, 3), 0.0);
    }

    #[test]
    fn fidelity_basics() {
        let psi = coherent_state(C64::new(0.3, -0.4), 20).unwrap();
        assert!((fidelity(&psi, &psi.to_density()).unwrap() - 1.0).abs() < 1e-12);
        let zero = FockVector::vacuum(4).unwrap();
        let one = FockVector::number_state(1, 4).unwrap();
        assert_eq!(fidelity(&zero, &one.to_density()).unwrap(), 0.0);
        assert!(matches!(
            fidelity(&zero, &FockVector::vacuum(5).unwrap().to_density()),
            Err(Error::DimensionMismatch { .. })
        ));

        // 1/2 |cat><cat| + 1/2 |0><0|
        let cat = cat_state(c(2f64.sqrt()), Parity::Even, 32).unwrap();
        let vac = FockVector::vacuum(32).unwrap();
        let rho = DensityMatrix::from_matrix(
            cat.to_density().elements().scale(0.5) + vac.to_density().elements().scale(0.5),
        )
        .unwrap();
        let overlap = cat.amplitude(0).norm_sqr();
        assert!((fidelity(&cat, &rho).unwrap() - 0.5 * (1.0 + overlap)).abs() < 1e-12);
    }

    #[test]
    fn phase_optimized_fidelity_recovers_rotation() {
        let cat = cat_state(c(2f64.sqrt()), Parity::Even, 32).unwrap();
        let turned = cat.rotated(0.7).to_density();
        let raw = fidelity(&cat, &turned).unwrap();
        let (best, theta) = fidelity_phase_optimized(&cat, &turned).unwrap();
        assert!(raw < 0.9);
        assert!((best - 1.0).abs() < 1e-10);
        // even cat has period pi under rotation
        let d = (theta - 0.7).rem_euclid(std::f64::consts::PI);
        assert!(d < 1e-5 || (std::f64::consts::PI - d) < 1e-5);
    }

    #[test]
    fn squeezing_vacuum_matches_series() {
        for &db in &[3.0, 7.0] {
            let r = SqueezeParam::from_db(db);
            let out = squeeze_operator_apply(
                &FockVector::vacuum(32).unwrap(),
                r.r(),
                default_padded_dim(32),
                1e-5,
            )
            .unwrap();
            let series = squeezed_vacuum(r, Truncation::new(32).with_tail_tol(1e-5)).unwrap();
            let scale = series.truncated_norm().sqrt();
            for j in 0..32 {
                assert!((out.amplitude(j) - series.amplitude(j) * scale).norm() < 1e-8, "j={j}");
            }
        }
        let psi = coherent_state(c(0.5), 10).unwrap();
        assert_eq!(squeeze_operator_apply(&psi, 0.0, 26, 1e-10).unwrap(), psi);
    }

    #[test]
    fn squeeze_pad_too_small_is_reported() {
        let vac = FockVector::vacuum(8).unwrap();
        assert!(matches!(
            squeeze_operator_apply(&vac, 1.5, 24, 1e-10),
            Err(Error::PadInsufficient { .. })
        ));
        assert!(matches!(
            squeeze_operator_apply(&vac, 0.5, 4, 1e-10),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn split_trivial_cases() {
        let psi = split_squeezed_pair(
            SqueezeParam::vacuum(),
            None,
            0.4,
            SplitConvention::Subtraction,
            6,
        )
        .unwrap();
        assert_eq!(psi.get(0, 0), c(1.0));
        assert_eq!(psi.norm_squared(), 1.0);

        let r = SqueezeParam::from_db(7.0);
        let t = Truncation::new(40).with_tail_tol(1e-6);
        let all_kept = split_squeezed_pair(r, None, 1.0, SplitConvention::Subtraction, t).unwrap();
        for m in 1..40 {
            assert!(all_kept.project_measured(m).norm() == 0.0);
        }
        assert!(split_squeezed_pair(r, None, 1.2, SplitConvention::Subtraction, t).is_err());
    }

    #[test]
    fn split_marginal_is_thinned_squeezed_light() {
        let r = SqueezeParam::from_db(7.0);
        let dim = 48;
        let eta = 0.7;
        let psi = split_squeezed_pair(
            r,
            None,
            eta,
            SplitConvention::Subtraction,
            Truncation::new(dim).with_tail_tol(1e-6),
        )
        .unwrap();
        // Independent route: thin the squeezed-vacuum distribution directly.
        let src = squeezed_vacuum(r, Truncation::new(2 * dim)).unwrap();
        let p = src.photon_distribution();
        let marg = psi.measured_marginal();
        for m in 0..12 {
            let mut expect = 0.0;
            for (n, pn) in p.iter().enumerate().skip(m) {
                expect += pn * crate::math::binomial_pmf(n, m, 1.0 - eta);
            }
            // rows m < 12 need kept-mode levels beyond dim only at ~1e-9
            assert!((marg[m] - expect).abs() < 1e-8, "m={m} {} {}", marg[m], expect);
        }
    }

    #[test]
    fn generalized_split_keeps_norm() {
        let r = SqueezeParam::from_db(5.0);
        let psi = split_squeezed_pair(
            r,
            Some(r.negated()),
            0.7815,
            SplitConvention::Generalized,
            Truncation::new(32).with_tail_tol(1e-5),
        )
        .unwrap();
        assert!(psi.norm_squared() <= 1.0 + 1e-12);
        assert!(psi.norm_squared() > 1.0 - 1e-5);
        for m in 0..32 {
            for j in 0..32 {
                if (m + j) % 2 == 1 {
                    assert_eq!(psi.get(m, j).norm(), 0.0);
                }
            }
        }
    }
}
