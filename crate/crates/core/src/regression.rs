//! Reference scenarios with their tolerances. Each check recomputes its
//! numbers from scratch and reports PASS or FAIL with the values it saw.

use num_complex::Complex64 as C64;

use crate::breeding::{
    breed, breeding_input, breeding_target, condition_on_clicks, eta_grid, gps_ideal_k2_oracle,
    ideal_pnr_conditional, optimize_eta, BreedingConfig, Detector, Scheme,
};
use crate::detector::{brute_force_click_oracle, click_matrix, sequential_weights, DetectorSpec};
use crate::error::Result;
use crate::fock::{
    cat_state, coherent_state, fidelity, fidelity_phase_optimized, photon_distribution,
    split_squeezed_pair, squeezed_vacuum, Parity, SplitConvention, SqueezeParam, Truncation,
};
use crate::statistics::{
    correlated_moment, default_l_max, moment_scaling_study, odd_error_scaling, pair_bias_formula,
    squeezed_click_formula, squeezed_click_pipeline,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{:>2}] {}: {}", self.id, self.name, self.detail)
    }
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: [(&str, Check); 13] = [
    ("moment scaling", moment_scaling),
    ("click-matrix oracle", click_oracle),
    ("squeezed click formula", squeezed_formula),
    ("odd-click scaling", odd_scaling),
    ("headline subtraction point", headline_point),
    ("resolving detector at TES settings", tes_point),
    ("ten-pixel optimum", ten_pixel_point),
    ("generalized subtraction", generalized_points),
    ("generalized closed form", gps_oracle),
    ("four-photon subtraction", four_photon),
    ("fidelity gap law", gap_law),
    ("correlated-pair bias", correlated_bias),
    ("property suite", property_suite),
];

pub fn count() -> usize {
    CHECKS.len()
}

/// Runs check `id` (1-based).
pub fn run(id: usize) -> Outcome {
    let (name, check) = CHECKS[id - 1];
    match check() {
        Ok((pass, detail)) => Outcome { id, name, pass, detail },
        Err(e) => Outcome {
            id,
            name,
            pass: false,
            detail: format!("error in {}: {e}", e.operation()),
        },
    }
}

pub fn run_all() -> Vec<Outcome> {
    (1..=count()).map(run).collect()
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

fn rel_close(x: f64, reference: f64, rel: f64) -> bool {
    (x - reference).abs() <= rel * reference.abs()
}

fn subtraction(db: f64, eta: f64, k: usize, detector: Detector) -> BreedingConfig {
    BreedingConfig::new(SqueezeParam::from_db(db), eta, k, detector, Scheme::Subtraction)
}

fn array(n: usize, kappa: f64) -> Detector {
    Detector::Mpnr(DetectorSpec::balanced(n).with_efficiency(kappa))
}

fn moment_scaling() -> Result<(bool, String)> {
    let a = C64::new(0.5f64.sqrt(), 0.0);
    let ns: Vec<usize> = (3..=9).map(|e| 1usize << e).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, state) in [
        ("coherent", coherent_state(a, 40)?),
        ("even cat", cat_state(a, Parity::Even, 40)?),
    ] {
        let exponent = moment_scaling_study(&state, 2, &ns)?
            .fit
            .map_or(f64::NAN, |f| f.exponent);
        ok &= within(exponent, -1.15, -0.85);
        parts.push(format!("{label} exponent {exponent:.4}"));
    }
    Ok((ok, parts.join(", ")))
}

fn click_oracle() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 1..=4 {
        for &kappa in &[1.0, 0.7] {
            for &eps in &[0.0, 0.01] {
                let spec = DetectorSpec::balanced(n).with_efficiency(kappa).with_dark_eps(eps);
                let cm = click_matrix(&spec, 7)?;
                for m in 0..=6 {
                    let bf = brute_force_click_oracle(&spec, m)?;
                    for (k, p) in bf.iter().enumerate() {
                        worst = worst.max((cm.get(k, m) - p).abs());
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok((worst <= 1e-12, format!("{cases} columns, max deviation {worst:.2e}")))
}

fn squeezed_formula() -> Result<(bool, String)> {
    let r = SqueezeParam::from_db(7.0);
    let l = default_l_max(r);
    let mut worst = 0.0f64;
    for n in [10usize, 20, 50] {
        let pipe = squeezed_click_pipeline(r, &DetectorSpec::balanced(n), 120)?;
        for (k, pk) in pipe.iter().enumerate() {
            worst = worst.max((squeezed_click_formula(r, n, k, l)? - pk).abs());
        }
    }
    Ok((worst <= 1e-10, format!("max deviation {worst:.2e} (series cut at l = {l})")))
}

fn odd_scaling() -> Result<(bool, String)> {
    let ns: Vec<usize> = (3..=8).map(|e| 1usize << e).collect();
    let (_, fit) = odd_error_scaling(SqueezeParam::from_db(7.0), &ns, 120)?;
    let e = fit.exponent;
    Ok((e > -1.0 && e < -0.5, format!("exponent {e:.4}")))
}

fn headline_point() -> Result<(bool, String)> {
    let cfg = subtraction(7.0, 0.7, 2, array(20, 0.95));
    let (eta, res) = optimize_eta(&cfg, &eta_grid(0.0, 1.0, 0.005)?)?;
    let ok = within(res.fidelity_phase_opt, 0.86, 0.90) && within(res.p_succ, 0.033, 0.043);
    Ok((
        ok,
        format!(
            "eta {eta:.4}, F {:.4}, p {:.3}%",
            res.fidelity_phase_opt,
            100.0 * res.p_succ
        ),
    ))
}

fn tes_point() -> Result<(bool, String)> {
    // resolving detector with the TES efficiency
    let res = breed(&subtraction(2.9, 0.924, 2, Detector::IdealPnr { kappa: 0.7 }))?;
    let ok = within(res.fidelity_phase_opt, 0.79, 0.83) && within(res.p_succ, 1.5e-4, 2.5e-4);
    Ok((
        ok,
        format!("F {:.4}, p {:.4}%", res.fidelity_phase_opt, 100.0 * res.p_succ),
    ))
}

fn ten_pixel_point() -> Result<(bool, String)> {
    let cfg = subtraction(7.0, 0.7, 2, array(10, 0.95));
    let (eta, res) = optimize_eta(&cfg, &eta_grid(0.0, 1.0, 0.005)?)?;
    let ok = within(eta, 0.65, 0.75)
        && within(res.fidelity_phase_opt, 0.82, 0.86)
        && within(res.p_succ, 0.030, 0.042);
    Ok((
        ok,
        format!(
            "eta {eta:.4}, F {:.4}, p {:.3}%",
            res.fidelity_phase_opt,
            100.0 * res.p_succ
        ),
    ))
}

fn generalized_points() -> Result<(bool, String)> {
    let gps = |db: f64, eta: f64| {
        breed(&BreedingConfig::new(
            SqueezeParam::from_db(db),
            eta,
            2,
            array(20, 0.95),
            Scheme::Generalized,
        ))
    };
    let a = gps(7.0, 0.856)?;
    let b = gps(2.9, 0.803)?;
    let ok = within(a.fidelity_phase_opt, 0.84, 0.88)
        && within(a.p_succ, 0.075, 0.099)
        && within(b.p_succ, 0.014, 0.020);
    Ok((
        ok,
        format!(
            "7 dB: F {:.4}, p {:.3}%; 2.9 dB: p {:.3}%",
            a.fidelity_phase_opt,
            100.0 * a.p_succ,
            100.0 * b.p_succ
        ),
    ))
}

fn gps_oracle() -> Result<(bool, String)> {
    let r = SqueezeParam::from_db(5.0);
    let eta = 0.7815;
    let cfg = BreedingConfig::new(r, eta, 2, Detector::IdealPnr { kappa: 1.0 }, Scheme::Generalized)
        .with_truncation(Truncation::new(16).with_tail_tol(1e-3));
    let res = breed(&cfg)?;
    let oracle = gps_ideal_k2_oracle(r, eta, 16)?;
    let (f_oracle, _) = fidelity_phase_optimized(&breeding_target(&cfg)?, &oracle.to_density())?;
    let gap = (f_oracle - res.fidelity_phase_opt).abs();
    let ok = within(res.fidelity_phase_opt, 0.985, 0.991)
        && within(res.p_succ, 0.049, 0.055)
        && gap <= 1e-6;
    Ok((
        ok,
        format!(
            "F {:.5}, p {:.3}%, closed form differs by {gap:.1e}",
            res.fidelity_phase_opt,
            100.0 * res.p_succ
        ),
    ))
}

fn four_photon() -> Result<(bool, String)> {
    // (detector, reference F, reference p)
    let cases = [
        ("resolving, kappa 0.95", Detector::IdealPnr { kappa: 0.95 }, 0.88, 7e-4),
        ("10 pixels, kappa 0.95", array(10, 0.95), 0.73, 4e-4),
        ("resolving, kappa 0.4", Detector::IdealPnr { kappa: 0.4 }, 0.58, 4e-5),
        ("10 pixels, kappa 0.4", array(10, 0.4), 0.55, 2e-5),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, det, f_ref, p_ref) in cases {
        let res = breed(&subtraction(6.5, 0.81, 4, det))?;
        ok &= (res.fidelity_phase_opt - f_ref).abs() <= 0.03 && rel_close(res.p_succ, p_ref, 0.3);
        parts.push(format!(
            "{label}: F {:.4}, p {:.5}%",
            res.fidelity_phase_opt,
            100.0 * res.p_succ
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn gap_law() -> Result<(bool, String)> {
    let f_pnr = breed(&subtraction(7.0, 0.7, 2, Detector::IdealPnr { kappa: 1.0 }))?.fidelity_phase_opt;
    let gaps = [8usize, 16, 32, 64]
        .iter()
        .map(|&n| Ok(f_pnr - breed(&subtraction(7.0, 0.7, 2, array(n, 1.0)))?.fidelity_phase_opt))
        .collect::<Result<Vec<f64>>>()?;
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = gaps.iter().all(|g| *g > 0.0) && ratios.iter().all(|r| within(*r, 1.5, 2.6));
    Ok((
        ok,
        format!(
            "gaps {:.4} {:.4} {:.4} {:.4}, ratios {:.3} {:.3} {:.3}",
            gaps[0], gaps[1], gaps[2], gaps[3], ratios[0], ratios[1], ratios[2]
        ),
    ))
}

fn correlated_bias() -> Result<(bool, String)> {
    let dist = photon_distribution(&squeezed_vacuum(SqueezeParam::from_db(7.0), 120)?);
    let ps = [0.0, 0.01, 0.02, 0.03, 0.04, 0.05];
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [8usize, 16] {
        let bias = ps
            .iter()
            .map(|&p| Ok(correlated_moment(&dist, &DetectorSpec::balanced(n).with_corr_p(p))?.bias))
            .collect::<Result<Vec<f64>>>()?;
        // least-squares slope through the origin
        let slope = ps.iter().zip(&bias).map(|(p, b)| p * b).sum::<f64>()
            / ps.iter().map(|p| p * p).sum::<f64>();
        let linear = ps
            .iter()
            .zip(&bias)
            .skip(1)
            .map(|(p, b)| (b - slope * p).abs() / b.abs())
            .fold(0.0, f64::max);
        let formula = ps
            .iter()
            .zip(&bias)
            .map(|(p, b)| (b - pair_bias_formula(&dist, n, *p)).abs())
            .fold(0.0, f64::max);
        ok &= bias[0].abs() < 1e-12 && linear <= 0.02 && formula <= 1e-10;
        parts.push(format!(
            "n={n}: slope {slope:.5}, intercept {:.1e}, nonlinearity {linear:.1e}, formula gap {formula:.1e}",
            bias[0]
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn property_suite() -> Result<(bool, String)> {
    let mut failures = Vec::new();

    // completeness of the heralding probabilities
    let configs = [
        subtraction(7.0, 0.7, 0, array(8, 0.9)),
        subtraction(4.0, 0.5, 0, Detector::Mpnr(DetectorSpec::balanced(6).with_dark_eps(0.01))),
        BreedingConfig::new(SqueezeParam::from_db(5.0), 0.8, 0, array(10, 0.95), Scheme::Generalized),
    ];
    let mut worst_total = 0.0f64;
    for cfg in &configs {
        let psi = breeding_input(cfg)?;
        let cm = cfg.detector.click_matrix(cfg.trunc.dim)?;
        let total: f64 = (0..=cm.n())
            .map(|k| condition_on_clicks(&psi, &cm, k).map_or(0.0, |x| x.1))
            .sum();
        worst_total = worst_total.max((total - 1.0).abs());
    }
    if worst_total > 1e-10 {
        failures.push(format!("completeness off by {worst_total:.1e}"));
    }

    // every click matrix is column-stochastic
    let specs = [
        DetectorSpec::balanced(1),
        DetectorSpec::balanced(20).with_efficiency(0.95),
        DetectorSpec::balanced(7).with_efficiency(0.7).with_dark_eps(0.01),
        DetectorSpec::from_taps(&[0.3, 0.5, 0.2, 1.0])?.with_dark_eps(0.02),
        DetectorSpec::balanced(3)
            .with_weights(vec![0.5, 0.3, 0.1])
            .with_kappas(vec![0.9, 0.8, 1.0]),
    ];
    let mut worst_col = 0.0f64;
    for spec in &specs {
        worst_col = worst_col.max(click_matrix(spec, 32)?.stochasticity_error());
    }
    for n in [2usize, 8, 16] {
        let det = Detector::Mpnr(DetectorSpec::balanced(n).with_efficiency(0.9).with_dark_eps(0.01).with_corr_p(0.3));
        worst_col = worst_col.max(det.click_matrix(32)?.stochasticity_error());
    }
    if worst_col > 1e-12 {
        failures.push(format!("column sums off by {worst_col:.1e}"));
    }

    // split states never pair levels of opposite parity
    let mut parity_leak = 0.0f64;
    for (r2, conv) in [
        (None, SplitConvention::Subtraction),
        (Some(SqueezeParam::from_db(-7.0)), SplitConvention::Generalized),
    ] {
        let psi = split_squeezed_pair(SqueezeParam::from_db(7.0), r2, 0.7, conv, Truncation::new(32).with_tail_tol(1e-5))?;
        for m in 0..32 {
            for j in 0..32 {
                if (m + j) % 2 == 1 {
                    parity_leak = parity_leak.max(psi.get(m, j).norm());
                }
            }
        }
    }
    for k in 1..=3 {
        let res = breed(&subtraction(7.0, 0.7, k, Detector::IdealPnr { kappa: 1.0 }))?;
        parity_leak = parity_leak.max(res.rho.off_parity_mass(Parity::of(k)));
    }
    if parity_leak > 1e-10 {
        failures.push(format!("parity leak {parity_leak:.1e}"));
    }

    // tap chains and explicit weights give the same matrix
    let taps = [0.2, 0.25, 1.0 / 3.0, 0.5, 1.0];
    let chain = DetectorSpec::from_taps(&taps)?.with_efficiency(0.9).with_dark_eps(0.01);
    let direct = DetectorSpec::balanced(5)
        .with_weights(sequential_weights(&taps)?)
        .with_efficiency(0.9)
        .with_dark_eps(0.01);
    if click_matrix(&chain, 24)? != click_matrix(&direct, 24)? {
        failures.push("tap chain and weights disagree".into());
    }

    // a resolving herald reproduces the closed form
    let mut worst_limit = 0.0f64;
    for (db, eta, k) in [(7.0, 0.7, 2usize), (5.0, 0.6, 1), (6.5, 0.81, 4)] {
        let r = SqueezeParam::from_db(db);
        let cfg = BreedingConfig::new(r, eta, k, Detector::IdealPnr { kappa: 1.0 }, Scheme::Subtraction)
            .with_truncation(Truncation::new(64).with_tail_tol(1e-10));
        let res = breed(&cfg)?;
        let (state, p) = ideal_pnr_conditional(r, eta, k, 64)?;
        let f = fidelity(&breeding_target(&cfg)?, &state.to_density())?;
        worst_limit = worst_limit.max((f - res.fidelity).abs()).max((p - res.p_succ).abs());
    }
    if worst_limit > 1e-9 {
        failures.push(format!("resolving limit off by {worst_limit:.1e}"));
    }

    let summary = format!(
        "completeness {worst_total:.1e}, column sums {worst_col:.1e}, parity {parity_leak:.1e}, resolving limit {worst_limit:.1e}"
    );
    if failures.is_empty() {
        Ok((true, summary))
    } else {
        Ok((false, failures.join("; ")))
    }
}
