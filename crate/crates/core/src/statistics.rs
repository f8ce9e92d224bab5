//! Moments through the MPNR observable, squeezed-vacuum click statistics and
//! the power-law fits used for the scaling studies.

use crate::detector::{
    click_matrix, correlated_click_transform, lone_pair_probability, ClickMatrix, DetectorSpec,
};
use crate::error::{Error, Result};
use crate::fock::{moment_of_distribution, photon_distribution, squeezed_vacuum, FockVector, SqueezeParam, Truncation};
use crate::math::{ln_binomial, ln_factorial, log_sum_exp};

/// One point of a moment-estimation study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub h: u32,
    pub n: usize,
    pub estimate: f64,
    pub truth: f64,
    pub rel_error: f64,
}

/// Least-squares line through `(ln n, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    pub n_range: (usize, usize),
}

/// Reports for every `n` plus the fit of their relative errors.
///
/// `fit` is `None` when the errors vanish identically (for example a Fock
/// state with one photon), since there is nothing to fit on a log scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentStudy {
    pub reports: Vec<MomentReport>,
    pub fit: Option<ScalingFit>,
}

/// Unweighted least squares of `ln y` against `ln n` on at least five points.
pub fn fit_power_law(points: &[(usize, f64)]) -> Result<ScalingFit> {
    if points.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "a scaling fit needs at least 5 points, got {}",
            points.len()
        )));
    }
    if let Some((n, y)) = points.iter().find(|(n, y)| *n == 0 || !(*y > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "cannot fit a power law through ({n}, {y})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| y.ln()).collect();
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("scaling fit needs distinct n".into()));
    }
    let exponent = sxy / sxx;
    let n_min = points.iter().map(|p| p.0).min().unwrap_or(0);
    let n_max = points.iter().map(|p| p.0).max().unwrap_or(0);
    Ok(ScalingFit {
        exponent,
        intercept: my - exponent * mx,
        n_range: (n_min, n_max),
    })
}

/// `sum_k k^h P(k clicks)` for a photon-number distribution.
pub fn mpnr_moment(dist: &[f64], cm: &ClickMatrix, h: u32) -> Result<f64> {
    let clicks = cm.apply(dist)?;
    Ok(moment_of_distribution(&clicks, h))
}

/// `h`-th moment estimated by balanced lossless arrays of each size in `n_list`.
///
/// The power-law fit is left out when the error vanishes or fewer than five
/// distinct sizes are given.
pub fn moment_scaling_study(state: &FockVector, h: u32, n_list: &[usize]) -> Result<MomentStudy> {
    if h == 0 {
        return Err(Error::InvalidParameter("moment order must be >= 1".into()));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let dist = photon_distribution(state);
    let truth = moment_of_distribution(&dist, h);
    let reports = ns
        .iter()
        .map(|&n| {
            let cm = click_matrix(&DetectorSpec::balanced(n), dist.len())?;
            let estimate = mpnr_moment(&dist, &cm, h)?;
            let rel_error = if truth == 0.0 {
                estimate.abs()
            } else {
                (estimate - truth).abs() / truth
            };
            Ok(MomentReport {
                h,
                n,
                estimate,
                truth,
                rel_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = if reports.len() < 5 || reports.iter().all(|r| r.rel_error <= 1e-14 * truth.max(1.0)) {
        None
    } else {
        let pts: Vec<(usize, f64)> = reports.iter().map(|r| (r.n, r.rel_error)).collect();
        Some(fit_power_law(&pts)?)
    };
    Ok(MomentStudy { reports, fit })
}

/// Tail of the squeezed-vacuum series beyond which terms are dropped.
const SERIES_TOL: f64 = 1e-12;

/// ln p_{2l} of the squeezed vacuum.
fn ln_squeezed_even(r: f64, l: usize) -> f64 {
    let t = r.tanh();
    -r.cosh().ln() + 2.0 * l as f64 * t.ln() - 2.0 * l as f64 * std::f64::consts::LN_2
        - 2.0 * ln_factorial(l)
        + ln_factorial(2 * l)
}

/// Upper bound on `sum_{l > l_max} p_{2l}`: the ratio of successive terms is below `tanh^2 r`.
fn squeezed_tail_bound(r: f64, l_max: usize) -> f64 {
    let q = r.tanh().powi(2);
    ln_squeezed_even(r, l_max).exp() * q / (1.0 - q)
}

/// Smallest cut-off whose series tail is below `1e-13`.
pub fn default_l_max(r: SqueezeParam) -> usize {
    let r = r.r().abs();
    if r == 0.0 {
        return 0;
    }
    (1..).find(|&l| squeezed_tail_bound(r, l) < 1e-13).expect("tail decays geometrically")
}

/// Probability of `k` clicks from `n` balanced lossless detectors on a
/// squeezed vacuum, summed over even photon numbers `2l <= 2 l_max`:
///
/// `p_k = C(n,k) sum_l p_{2l} (2l)! [x^{2l}](e^x - 1)^k / n^{2l}`.
///
/// The coefficient of `(e^x - 1)^k` is the sum over compositions of `2l`
/// into `k` positive parts of `prod 1/j_i!`, built by repeated convolution.
pub fn squeezed_click_formula(r: SqueezeParam, n: usize, k: usize, l_max: usize) -> Result<f64> {
    if n == 0 || k > n {
        return Err(Error::InvalidParameter(format!("need 0 <= k <= n with n >= 1, got k={k}, n={n}")));
    }
    let r = r.r().abs();
    if r == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let tail = squeezed_tail_bound(r, l_max);
    if !(tail < SERIES_TOL) {
        return Err(Error::SeriesNotConverged { tail });
    }
    let top = 2 * l_max;
    // log composition sums, comp[N] for the current number of parts
    let ln_inv_fact: Vec<f64> = (0..=top).map(|j| -ln_factorial(j)).collect();
    let mut comp = vec![f64::NEG_INFINITY; top + 1];
    comp[0] = 0.0;
    for _ in 0..k {
        let mut next = vec![f64::NEG_INFINITY; top + 1];
        for (total, slot) in next.iter_mut().enumerate() {
            let terms: Vec<f64> = (1..=total)
                .filter(|&j| comp[total - j] > f64::NEG_INFINITY)
                .map(|j| comp[total - j] + ln_inv_fact[j])
                .collect();
            *slot = log_sum_exp(&terms);
        }
        comp = next;
    }
    let ln_n = (n as f64).ln();
    let terms: Vec<f64> = (0..=l_max)
        .filter(|&l| comp[2 * l] > f64::NEG_INFINITY)
        .map(|l| {
            ln_binomial(n, k) + ln_squeezed_even(r, l) + ln_factorial(2 * l)
                - 2.0 * l as f64 * ln_n
                + comp[2 * l]
        })
        .collect();
    Ok(log_sum_exp(&terms).exp())
}

/// Click distribution of `spec` on a squeezed vacuum truncated at `trunc`.
pub fn squeezed_click_pipeline(
    r: SqueezeParam,
    spec: &DetectorSpec,
    trunc: impl Into<Truncation>,
) -> Result<Vec<f64>> {
    let state = squeezed_vacuum(r, trunc)?;
    let dist = photon_distribution(&state);
    click_matrix(spec, dist.len())?.apply(&dist)
}

/// Total probability of an odd number of clicks.
pub fn odd_photon_error(dist: &[f64]) -> f64 {
    dist.iter().skip(1).step_by(2).sum()
}

/// Odd-click probability of balanced lossless arrays on a squeezed vacuum,
/// one point per `n`, with its power-law fit.
pub fn odd_error_scaling(
    r: SqueezeParam,
    n_list: &[usize],
    trunc: impl Into<Truncation>,
) -> Result<(Vec<(usize, f64)>, ScalingFit)> {
    let trunc = trunc.into();
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let points = ns
        .iter()
        .map(|&n| {
            let dist = squeezed_click_pipeline(r, &DetectorSpec::balanced(n), trunc)?;
            Ok((n, odd_photon_error(&dist)))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_power_law(&points)?;
    Ok((points, fit))
}

/// First click moment with and without pair correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedMoment {
    pub p: f64,
    pub n: usize,
    pub biased_moment: f64,
    pub unbiased_moment: f64,
    pub bias: f64,
}

/// Mean clicks of `spec` on `dist` with its pair correlation switched on and off.
pub fn correlated_moment(dist: &[f64], spec: &DetectorSpec) -> Result<CorrelatedMoment> {
    let plain_spec = spec.clone().with_corr_p(0.0);
    let base = click_matrix(&plain_spec, dist.len())?;
    let corr = correlated_click_transform(&base, spec)?;
    let unbiased_moment = mpnr_moment(dist, &base, 1)?;
    let biased_moment = mpnr_moment(dist, &corr, 1)?;
    Ok(CorrelatedMoment {
        p: spec.corr_p,
        n: spec.n(),
        biased_moment,
        unbiased_moment,
        bias: biased_moment - unbiased_moment,
    })
}

/// Mean-click bias from the pair observable: `p sum_m p_m (n/2) q1(m)`, where
/// `q1(m)` is the chance that exactly one detector of a given pair fires.
/// Valid for balanced lossless arrays without dark counts.
pub fn pair_bias_formula(dist: &[f64], n: usize, p: f64) -> f64 {
    let pairs = (n / 2) as f64;
    p * dist
        .iter()
        .enumerate()
        .map(|(m, pm)| pm * pairs * lone_pair_probability(n, m))
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{cat_state, coherent_state, Parity};
    use num_complex::Complex64 as C64;

    #[test]
    fn vacuum_has_no_clicks() {
        let cm = click_matrix(&DetectorSpec::balanced(4), 5).unwrap();
        let dist = [1.0, 0.0, 0.0, 0.0, 0.0];
        for h in 1..4 {
            assert_eq!(mpnr_moment(&dist, &cm, h).unwrap(), 0.0);
        }
        assert!(matches!(
            mpnr_moment(&dist[..3], &cm, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_detector_click_probability_on_coherent_light() {
        let psi = coherent_state(C64::new(0.5f64.sqrt(), 0.0), 30).unwrap();
        let dist = photon_distribution(&psi);
        let cm = click_matrix(&DetectorSpec::balanced(1), dist.len()).unwrap();
        let est = mpnr_moment(&dist, &cm, 1).unwrap();
        assert!((est - (1.0 - (-0.5f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn single_photon_is_counted_exactly() {
        let one = FockVector::number_state(1, 4).unwrap();
        let study = moment_scaling_study(&one, 1, &[1, 2, 4, 8, 16]).unwrap();
        assert!(study.reports.iter().all(|r| r.rel_error == 0.0));
        assert!(study.fit.is_none());
    }

    #[test]
    fn coherent_and_cat_errors_fall_like_one_over_n() {
        let a = C64::new(0.5f64.sqrt(), 0.0);
        let ns: Vec<usize> = (3..=9).map(|e| 1 << e).collect();
        for state in [
            coherent_state(a, 30).unwrap(),
            cat_state(a, Parity::Even, 30).unwrap(),
        ] {
            let fit = moment_scaling_study(&state, 2, &ns).unwrap().fit.unwrap();
            assert!((fit.exponent + 1.0).abs() < 0.15, "{}", fit.exponent);
        }
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let pts: Vec<(usize, f64)> = [2usize, 4, 8, 16, 32]
            .iter()
            .map(|&n| (n, 3.0 * (n as f64).powf(-0.7)))
            .collect();
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.exponent + 0.7).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert_eq!(fit.n_range, (2, 32));
        assert!(fit_power_law(&pts[..4]).is_err());
    }

    #[test]
    fn formula_single_detector_closed_form() {
        let r = SqueezeParam::from_db(7.0);
        let l = default_l_max(r);
        let p0 = squeezed_click_formula(r, 1, 0, l).unwrap();
        let p1 = squeezed_click_formula(r, 1, 1, l).unwrap();
        assert!((p0 - 1.0 / r.r().cosh()).abs() < 1e-13);
        assert!((p1 - (1.0 - 1.0 / r.r().cosh())).abs() < 1e-12);
        assert_eq!(squeezed_click_formula(SqueezeParam::vacuum(), 5, 0, 0).unwrap(), 1.0);
        assert_eq!(squeezed_click_formula(SqueezeParam::vacuum(), 5, 3, 0).unwrap(), 0.0);
        assert!(matches!(
            squeezed_click_formula(r, 4, 2, 3),
            Err(Error::SeriesNotConverged { .. })
        ));
    }

    #[test]
    fn composition_sums_match_enumeration() {
        // [x^N](e^x - 1)^k by brute-force listing of compositions, N <= 8
        fn brute(total: usize, parts: usize) -> f64 {
            if parts == 0 {
                return if total == 0 { 1.0 } else { 0.0 };
            }
            (1..=total)
                .map(|j| brute(total - j, parts - 1) / (1..=j).product::<usize>() as f64)
                .sum()
        }
        // p_k for n detectors built directly from brute-force compositions
        let r = SqueezeParam::from_db(3.0);
        let t = r.r().tanh();
        for n in 1..=4usize {
            for k in 0..=n {
                let mut direct = 0.0;
                for l in 0..=4usize {
                    let p2l = ln_squeezed_even(r.r(), l).exp();
                    let f2l: f64 = (1..=2 * l).product::<usize>() as f64;
                    direct += p2l * f2l * brute(2 * l, k) / (n as f64).powi(2 * l as i32);
                }
                let binom = crate::math::binomial(n, k);
                let formula = squeezed_click_formula(r, n, k, default_l_max(r)).unwrap();
                // the direct sum stops at 2l = 8; its tail is below p_10 / (1 - t^2)
                let tail = ln_squeezed_even(r.r(), 5).exp() / (1.0 - t * t);
                assert!((formula - binom * direct).abs() <= tail, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn formula_matches_pipeline() {
        let r = SqueezeParam::from_db(7.0);
        let l = default_l_max(r);
        for n in [3usize, 10] {
            let pipe = squeezed_click_pipeline(r, &DetectorSpec::balanced(n), 120).unwrap();
            for (k, pk) in pipe.iter().enumerate() {
                let f = squeezed_click_formula(r, n, k, l).unwrap();
                assert!((f - pk).abs() < 1e-10, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn pipeline_edge_cases() {
        let r = SqueezeParam::from_db(7.0);
        let d = squeezed_click_pipeline(r, &DetectorSpec::balanced(6), 60).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let blind = DetectorSpec::balanced(6).with_efficiency(0.0);
        let d = squeezed_click_pipeline(r, &blind, 60).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-14);
        assert_eq!(odd_photon_error(&squeezed_click_pipeline(SqueezeParam::vacuum(), &DetectorSpec::balanced(6), 4).unwrap()), 0.0);
    }

    #[test]
    fn odd_error_falls_with_more_detectors() {
        let r = SqueezeParam::from_db(7.0);
        let d1 = squeezed_click_pipeline(r, &DetectorSpec::balanced(1), 120).unwrap();
        assert!((odd_photon_error(&d1) - (1.0 - 1.0 / r.r().cosh())).abs() < 1e-12);
        let d10 = squeezed_click_pipeline(r, &DetectorSpec::balanced(10), 120).unwrap();
        let d50 = squeezed_click_pipeline(r, &DetectorSpec::balanced(50), 120).unwrap();
        assert!(odd_photon_error(&d50) < odd_photon_error(&d10));
    }

    /// `<psi| (sum_j (1 - |0><0|_j))^h |psi>` after a balanced split, by
    /// explicit enumeration of the n-mode number basis.
    fn tensor_observable(psi: &FockVector, n: usize, h: u32) -> f64 {
        let dim = psi.dim();
        let mut total = C64::new(0.0, 0.0);
        // all occupation tuples with fewer than dim photons in total
        let mut occ = vec![0usize; n];
        loop {
            let m: usize = occ.iter().sum();
            if m < dim {
                // amplitude of the tuple: psi_m sqrt(m! / prod m_i!) n^{-m/2}
                let ln_w = 0.5 * (ln_factorial(m) - occ.iter().map(|&x| ln_factorial(x)).sum::<f64>())
                    - 0.5 * m as f64 * (n as f64).ln();
                let amp = psi.amplitude(m) * ln_w.exp();
                let lit = occ.iter().filter(|&&x| x > 0).count() as f64;
                total += amp.conj() * amp * lit.powi(h as i32);
            }
            let mut i = 0;
            while i < n {
                occ[i] += 1;
                if occ[i] < dim {
                    break;
                }
                occ[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        total.re
    }

    #[test]
    fn projector_identity_by_tensor_enumeration() {
        let psi = coherent_state(C64::new(0.6, 0.3), Truncation::new(6).with_tail_tol(1e-2)).unwrap();
        let dist = photon_distribution(&psi);
        for n in 1..=3 {
            let cm = click_matrix(&DetectorSpec::balanced(n), 6).unwrap();
            for h in 1..=3 {
                let via_matrix = mpnr_moment(&dist, &cm, h).unwrap();
                let via_tensor = tensor_observable(&psi, n, h);
                assert!((via_matrix - via_tensor).abs() < 1e-13, "n={n} h={h}");
            }
        }
    }

    #[test]
    fn correlated_bias_is_linear_and_matches_pair_formula() {
        let r = SqueezeParam::from_db(7.0);
        let dist = photon_distribution(&squeezed_vacuum(r, 60).unwrap());
        for n in [8usize, 16] {
            let at = |p: f64| correlated_moment(&dist, &DetectorSpec::balanced(n).with_corr_p(p)).unwrap();
            assert!(at(0.0).bias.abs() < 1e-12);
            let slope = at(0.05).bias / 0.05;
            for p in [0.01, 0.02, 0.03, 0.04] {
                let b = at(p).bias;
                assert!((b - slope * p).abs() < 0.02 * b.abs());
                assert!((b - pair_bias_formula(&dist, n, p)).abs() < 1e-10);
            }
        }
    }
}
