//! Heralded cat states from squeezed light: photon subtraction and its
//! two-input generalization, conditioned on a click count.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::detector::{click_matrix, correlated_click_transform, ClickMatrix, DetectorSpec};
use crate::error::{Error, Result};
use crate::fock::{
    cat_state, default_padded_dim, fidelity, fidelity_phase_optimized, split_squeezed_pair,
    squeeze_operator_apply, DensityMatrix, FockVector, Parity, SplitConvention, SqueezeParam,
    TwoModeState, Truncation,
};
use crate::math::{golden_max, ln_factorial};

/// Truncation used for breeding unless configured otherwise.
///
/// Thirty-two levels keep about `1 - 4e-7` of a 7 dB squeezed pair, so the
/// tail tolerance is relaxed from the library default.
pub fn default_breeding_truncation() -> Truncation {
    Truncation::new(32).with_tail_tol(1e-5)
}

/// Heralding detector.
#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    /// Multiplexed array of ON-OFF detectors.
    Mpnr(DetectorSpec),
    /// Number-resolving detector with efficiency `kappa` and no pixel limit.
    IdealPnr { kappa: f64 },
}

impl Detector {
    pub fn click_matrix(&self, dim: usize) -> Result<ClickMatrix> {
        match self {
            Detector::Mpnr(spec) => {
                let base = click_matrix(&spec.clone().with_corr_p(0.0), dim)?;
                if spec.corr_p > 0.0 {
                    correlated_click_transform(&base, spec)
                } else {
                    Ok(base)
                }
            }
            Detector::IdealPnr { kappa } => {
                if !(0.0..=1.0).contains(kappa) {
                    return Err(Error::InvalidSpec(format!("efficiency {kappa} outside [0, 1]")));
                }
                Ok(ClickMatrix::ideal_pnr(*kappa, dim))
            }
        }
    }

    /// Largest click count the detector can report at truncation `dim`.
    pub fn max_clicks(&self, dim: usize) -> usize {
        match self {
            Detector::Mpnr(spec) => spec.n(),
            Detector::IdealPnr { .. } => dim.saturating_sub(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// One squeezed vacuum, a fraction `1 - eta` tapped to the detector.
    Subtraction,
    /// Squeezed vacua `|r>` and `|-r>` interfered; the kept mode is anti-squeezed.
    Generalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreedingConfig {
    pub r: SqueezeParam,
    pub eta: f64,
    pub k: usize,
    pub detector: Detector,
    pub scheme: Scheme,
    pub trunc: Truncation,
    pub count_rate_hz: Option<f64>,
}

impl BreedingConfig {
    pub fn new(r: SqueezeParam, eta: f64, k: usize, detector: Detector, scheme: Scheme) -> Self {
        BreedingConfig {
            r,
            eta,
            k,
            detector,
            scheme,
            trunc: default_breeding_truncation(),
            count_rate_hz: None,
        }
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        BreedingConfig { eta, ..self.clone() }
    }

    pub fn with_truncation(mut self, trunc: Truncation) -> Self {
        self.trunc = trunc;
        self
    }

    pub fn with_count_rate(mut self, hz: f64) -> Self {
        self.count_rate_hz = Some(hz);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter(format!("eta = {} outside [0, 1]", self.eta)));
        }
        let top = self.detector.max_clicks(self.trunc.dim);
        if self.k > top {
            return Err(Error::InvalidParameter(format!(
                "click condition k = {} exceeds the detector's {} clicks",
                self.k, top
            )));
        }
        if let Some(hz) = self.count_rate_hz {
            if !(hz >= 0.0 && hz.is_finite()) {
                return Err(Error::InvalidParameter(format!("count rate {hz} Hz")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreedingResult {
    /// Heralded state of the kept mode, before any anti-squeezing.
    pub rho: DensityMatrix,
    pub p_succ: f64,
    pub fidelity: f64,
    pub fidelity_phase_opt: f64,
    /// Rotation of the target that attains `fidelity_phase_opt`.
    pub phase: f64,
    pub rate_hz: Option<f64>,
}

/// Heralded kept-mode state `rho ∝ sum_m c[k][m] phi_m phi_m†` and its
/// probability, with `phi_m = (<m| (x) I)|Psi>`.
///
/// The probability is taken relative to the norm held by the truncated
/// two-mode state so that it sums to one over `k`.
pub fn condition_on_clicks(
    psi: &TwoModeState,
    cm: &ClickMatrix,
    k: usize,
) -> Result<(DensityMatrix, f64)> {
    let (rows, cols) = psi.dims();
    if cm.dim() != rows {
        return Err(Error::DimensionMismatch {
            expected: rows,
            found: cm.dim(),
        });
    }
    if k > cm.n() {
        return Err(Error::InvalidParameter(format!(
            "click condition k = {k} exceeds the detector's {} clicks",
            cm.n()
        )));
    }
    let mut rho = DMatrix::from_element(cols, cols, C64::new(0.0, 0.0));
    for m in 0..rows {
        let w = cm.get(k, m);
        if w == 0.0 {
            continue;
        }
        let phi = psi.project_measured(m);
        rho += &phi * phi.adjoint() * C64::new(w, 0.0);
    }
    let mass: f64 = (0..cols).map(|j| rho[(j, j)].re).sum();
    let p_succ = mass / psi.norm_squared();
    if !(p_succ >= 1e-300) {
        return Err(Error::DegenerateCondition { k, p_succ });
    }
    let rho = DensityMatrix::from_matrix(rho / C64::new(mass, 0.0))?;
    Ok((rho, p_succ))
}

/// Kept-mode state heralded by exactly `k` photons on a perfect number
/// resolving detector in the subtraction scheme, from the closed form
///
/// `phi_j = c_{k+j} sqrt(C(k+j, k)) (1-eta)^{k/2} eta^{j/2} i^j`
///
/// with `c_N` the squeezed-vacuum amplitudes. Only `k + j` even survives.
/// The probability sums `|phi_j|^2` over `j < dim`.
pub fn ideal_pnr_conditional(
    r: SqueezeParam,
    eta: f64,
    k: usize,
    dim: usize,
) -> Result<(FockVector, f64)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta = {eta} outside [0, 1]")));
    }
    let r = r.r();
    let t = r.tanh();
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    for (j, slot) in amps.iter_mut().enumerate() {
        let total = k + j;
        if total % 2 == 1 {
            continue;
        }
        let half = total / 2;
        let ln_mag = -0.5 * r.cosh().ln() + n_ln(half, t.abs()) + ln_factorial(total)
            - half as f64 * std::f64::consts::LN_2
            - ln_factorial(half)
            - 0.5 * ln_factorial(k)
            - 0.5 * ln_factorial(j)
            + 0.5 * n_ln(k, 1.0 - eta)
            + 0.5 * n_ln(j, eta);
        let mag = ln_mag.exp();
        if !mag.is_finite() || mag == 0.0 {
            continue;
        }
        let sign = if t > 0.0 && half % 2 == 1 { -1.0 } else { 1.0 };
        let phase = match j % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        *slot = phase * (sign * mag);
    }
    let state = FockVector::from_amplitudes(amps)?;
    let p_succ = state.norm_squared();
    if !(p_succ >= 1e-300) {
        return Err(Error::DegenerateCondition { k, p_succ });
    }
    Ok((state.normalized(), p_succ))
}

/// `n ln x` with `0 ln 0 = 0`.
fn n_ln(n: usize, x: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * x.ln()
    }
}

/// Target of the breeding: the cat of amplitude `sqrt(k)` with parity `(-1)^k`,
/// squeezed by `r` for the generalized scheme so that it can be compared
/// with the state before anti-squeezing.
pub fn breeding_target(config: &BreedingConfig) -> Result<FockVector> {
    let dim = config.trunc.dim;
    let cat = cat_state(
        C64::new((config.k as f64).sqrt(), 0.0),
        Parity::of(config.k),
        Truncation::new(dim).with_tail_tol(config.trunc.tail_tol),
    )?;
    match config.scheme {
        Scheme::Subtraction => Ok(cat),
        Scheme::Generalized => Ok(squeeze_operator_apply(
            &cat,
            config.r.r(),
            default_padded_dim(dim),
            config.trunc.tail_tol,
        )?
        .normalized()),
    }
}

/// Two-mode state entering the detector for a configuration.
pub fn breeding_input(config: &BreedingConfig) -> Result<TwoModeState> {
    match config.scheme {
        Scheme::Subtraction => split_squeezed_pair(
            config.r,
            None,
            config.eta,
            SplitConvention::Subtraction,
            config.trunc,
        ),
        Scheme::Generalized => split_squeezed_pair(
            config.r,
            Some(config.r.negated()),
            config.eta,
            SplitConvention::Generalized,
            config.trunc,
        ),
    }
}

pub fn breed(config: &BreedingConfig) -> Result<BreedingResult> {
    config.validate()?;
    let psi = breeding_input(config)?;
    let cm = config.detector.click_matrix(config.trunc.dim)?;
    let (rho, p_succ) = condition_on_clicks(&psi, &cm, config.k)?;
    let target = breeding_target(config)?;
    let raw = fidelity(&target, &rho)?;
    let (best, phase) = fidelity_phase_optimized(&target, &rho)?;
    Ok(BreedingResult {
        rho,
        p_succ,
        fidelity: raw,
        fidelity_phase_opt: best,
        phase,
        rate_hz: config.count_rate_hz.map(|hz| hz * p_succ),
    })
}

/// Closed form of the generalized scheme's kept mode, before anti-squeezing,
/// for two clicks on a lossless number-resolving detector:
///
/// `sum_j [4 eta (1-eta) j / (1 - 2 eta) - (1 - 2 eta)/2] (tanh r (1 - 2 eta))^j sqrt((2j)!) / (2^j j!) |2j>`,
/// normalized. Undefined at `eta = 1/2`.
pub fn gps_ideal_k2_oracle(r: SqueezeParam, eta: f64, dim: usize) -> Result<FockVector> {
    let d = 1.0 - 2.0 * eta;
    if d.abs() < 1e-12 {
        return Err(Error::OracleDomain("eta = 1/2 is a removable singularity".into()));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta = {eta} outside [0, 1]")));
    }
    let t = r.r().tanh();
    let amps: Vec<C64> = (0..dim)
        .map(|n| {
            if n % 2 == 1 {
                return C64::new(0.0, 0.0);
            }
            let j = n / 2;
            let lead = 4.0 * eta * (1.0 - eta) * j as f64 / d - d / 2.0;
            let ln_rest = 0.5 * ln_factorial(2 * j)
                - j as f64 * std::f64::consts::LN_2
                - ln_factorial(j);
            let geo = if j == 0 { 1.0 } else { (t * d).powi(j as i32) };
            C64::new(lead * geo * ln_rest.exp(), 0.0)
        })
        .collect();
    let state = FockVector::from_amplitudes(amps)?;
    if state.norm_squared() == 0.0 {
        return Err(Error::DegenerateInput("oracle state vanishes".into()));
    }
    Ok(state.normalized())
}

/// One point of an eta scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub eta: f64,
    pub fidelity: f64,
    pub fidelity_phase_opt: f64,
    pub p_succ: f64,
    pub rate_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaScan {
    pub points: Vec<ScanPoint>,
    pub frontier: Vec<ScanPoint>,
}

/// `0, step, 2 step, ..., 1` (the last point clamped to 1).
pub fn eta_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi || !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta grid [{lo}, {hi}] with step {step}"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|i| lo + i as f64 * step).collect();
    if let Some(last) = grid.last_mut() {
        *last = last.min(hi);
    }
    Ok(grid)
}

/// Default scan: the whole unit interval in steps of 0.005.
pub fn default_eta_grid() -> Vec<f64> {
    eta_grid(0.0, 1.0, 0.005).expect("valid constant grid")
}

/// Evaluates one eta; a heralding event that never occurs yields a point
/// with zero probability and zero fidelity rather than an error.
pub fn scan_point(template: &BreedingConfig, eta: f64) -> Result<ScanPoint> {
    match breed(&template.with_eta(eta)) {
        Ok(res) => Ok(ScanPoint {
            eta,
            fidelity: res.fidelity,
            fidelity_phase_opt: res.fidelity_phase_opt,
            p_succ: res.p_succ,
            rate_hz: res.rate_hz,
        }),
        Err(Error::DegenerateCondition { .. }) => Ok(ScanPoint {
            eta,
            fidelity: 0.0,
            fidelity_phase_opt: 0.0,
            p_succ: 0.0,
            rate_hz: template.count_rate_hz.map(|_| 0.0),
        }),
        Err(e) => Err(e),
    }
}

/// Upper envelope of success probability against phase-optimized fidelity.
///
/// A point survives when no other point has at least its fidelity and a
/// larger success probability. Ties in fidelity go to the larger eta.
/// Points with zero probability or below `fidelity_floor` are dropped. The
/// result is ordered by increasing fidelity.
pub fn frontier(points: &[ScanPoint], fidelity_floor: Option<f64>) -> Vec<ScanPoint> {
    let floor = fidelity_floor.unwrap_or(f64::NEG_INFINITY);
    let mut live: Vec<ScanPoint> = points
        .iter()
        .copied()
        .filter(|p| p.p_succ > 0.0 && p.fidelity_phase_opt >= floor)
        .collect();
    live.sort_by(|a, b| {
        b.fidelity_phase_opt
            .total_cmp(&a.fidelity_phase_opt)
            .then(b.eta.total_cmp(&a.eta))
    });
    let mut out: Vec<ScanPoint> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for p in live {
        if p.p_succ > best {
            best = p.p_succ;
            out.push(p);
        }
    }
    out.reverse();
    out
}

pub fn eta_scan(
    template: &BreedingConfig,
    grid: &[f64],
    fidelity_floor: Option<f64>,
) -> Result<EtaScan> {
    let points = grid
        .iter()
        .map(|&eta| scan_point(template, eta))
        .collect::<Result<Vec<_>>>()?;
    let frontier = frontier(&points, fidelity_floor);
    Ok(EtaScan { points, frontier })
}

/// Eta of maximal phase-optimized fidelity: a coarse scan of `grid`, then a
/// golden-section search to `1e-4` around the best grid point.
pub fn optimize_eta(template: &BreedingConfig, grid: &[f64]) -> Result<(f64, BreedingResult)> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty eta grid".into()));
    }
    let scan = grid
        .iter()
        .map(|&eta| scan_point(template, eta))
        .collect::<Result<Vec<_>>>()?;
    let (idx, _) = scan
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.fidelity_phase_opt.total_cmp(&b.1.fidelity_phase_opt))
        .expect("non-empty grid");
    let lo = if idx == 0 { grid[0] } else { grid[idx - 1] };
    let hi = if idx + 1 == grid.len() { grid[idx] } else { grid[idx + 1] };
    let mut failure = None;
    let (eta, _) = golden_max(
        |eta| match scan_point(template, eta) {
            Ok(p) => p.fidelity_phase_opt,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        1e-4,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    // keep the grid point if refinement did not improve on it
    let eta = if scan_point(template, eta)?.fidelity_phase_opt >= scan[idx].fidelity_phase_opt {
        eta
    } else {
        grid[idx]
    };
    Ok((eta, breed(&template.with_eta(eta))?))
}
