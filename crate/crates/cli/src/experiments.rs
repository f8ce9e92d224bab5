//! Turns a checked plan into a table of results.

use mpnr_core::breeding::{breed, frontier, optimize_eta, scan_point, BreedingConfig, ScanPoint};
use mpnr_core::fock::{cat_state, coherent_state, squeezed_vacuum, FockVector, Parity, Truncation};
use mpnr_core::statistics::{correlated_moment, moment_scaling_study, odd_photon_error, squeezed_click_pipeline};
use mpnr_core::{Complex64 as C64, DetectorSpec, Error, Result};
use rayon::prelude::*;

use crate::config::{BreedPlan, CalibPlan, CorrelatedPlan, DetectorSetting, EtaPlan, MomentsPlan, Plan, StateKind};
use crate::table::{Cell, Table};

const BREED_COLUMNS: &[&str] = &[
    "eta",
    "n",
    "kappa",
    "k",
    "fidelity",
    "fidelity_phase_opt",
    "p_succ",
    "rate_hz",
];

pub fn run(plan: &Plan) -> Result<Table> {
    match plan {
        Plan::Moments(p) => moments(p),
        Plan::SqueezedCalib(p) => calib(p),
        Plan::Breed(p) => breed_table(p),
        Plan::Frontier(p) => frontier_table(p),
        Plan::Correlated(p) => correlated(p),
        Plan::Regression(ids) => Ok(regression(ids)),
    }
}

fn moment_state(p: &MomentsPlan) -> Result<FockVector> {
    let alpha = C64::new(p.alpha, 0.0);
    let build = |t: Truncation| match p.state {
        StateKind::Coherent => coherent_state(alpha, t),
        StateKind::EvenCat => cat_state(alpha, Parity::Even, t),
        StateKind::OddCat => cat_state(alpha, Parity::Odd, t),
        StateKind::Squeezed => squeezed_vacuum(p.squeezing, t),
        StateKind::Fock => FockVector::number_state(p.photons, t.dim),
    };
    match p.truncation {
        Some(dim) => build(Truncation::new(dim)),
        None if p.state == StateKind::Fock => FockVector::number_state(p.photons, p.photons + 1),
        None => mpnr_core::fock::adaptive(build),
    }
}

fn moments(p: &MomentsPlan) -> Result<Table> {
    let study = moment_scaling_study(&moment_state(p)?, p.h, &p.ns)?;
    let exponent = study.fit.map(|f| f.exponent);
    let mut t = Table::new(&["n", "h", "estimate", "truth", "rel_error", "fit_exponent"]);
    for r in study.reports {
        t.push(vec![
            r.n.into(),
            r.h.into(),
            r.estimate.into(),
            r.truth.into(),
            r.rel_error.into(),
            exponent.into(),
        ]);
    }
    Ok(t)
}

fn calib(p: &CalibPlan) -> Result<Table> {
    let dists = p
        .ns
        .par_iter()
        .map(|&n| {
            let spec = DetectorSpec::balanced(n)
                .with_efficiency(p.kappa)
                .with_dark_eps(p.dark_eps);
            squeezed_click_pipeline(p.r, &spec, p.trunc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["n", "k", "p_k", "p_odd_err"]);
    for (&n, dist) in p.ns.iter().zip(&dists) {
        let odd = odd_photon_error(dist);
        for (k, pk) in dist.iter().enumerate() {
            t.push(vec![n.into(), k.into(), (*pk).into(), odd.into()]);
        }
    }
    Ok(t)
}

fn template(p: &BreedPlan, s: &DetectorSetting, eta: f64) -> BreedingConfig {
    let mut cfg = BreedingConfig::new(p.r, eta, p.k, s.detector.clone(), p.scheme).with_truncation(p.trunc);
    cfg.count_rate_hz = p.count_rate_hz;
    cfg
}

fn breed_row(p: &BreedPlan, s: &DetectorSetting, pt: &ScanPoint) -> Vec<Cell> {
    vec![
        pt.eta.into(),
        s.n.map_or(Cell::Text("inf".into()), Cell::from),
        s.kappa.into(),
        p.k.into(),
        pt.fidelity.into(),
        pt.fidelity_phase_opt.into(),
        pt.p_succ.into(),
        pt.rate_hz.into(),
    ]
}

/// Every (setting, eta) job in output order, evaluated on the pool.
fn scan_all(p: &BreedPlan, grid: &[f64]) -> Result<Vec<Vec<ScanPoint>>> {
    let jobs: Vec<(usize, f64)> = (0..p.settings.len())
        .flat_map(|i| grid.iter().map(move |&e| (i, e)))
        .collect();
    let points = jobs
        .par_iter()
        .map(|&(i, eta)| scan_point(&template(p, &p.settings[i], eta), eta))
        .collect::<Result<Vec<_>>>()?;
    Ok(points.chunks(grid.len()).map(|c| c.to_vec()).collect())
}

fn breed_table(p: &BreedPlan) -> Result<Table> {
    let mut t = Table::new(BREED_COLUMNS);
    match &p.eta {
        EtaPlan::Single(eta) => {
            let rows = p
                .settings
                .par_iter()
                .map(|s| {
                    let res = breed(&template(p, s, *eta))?;
                    Ok(ScanPoint {
                        eta: *eta,
                        fidelity: res.fidelity,
                        fidelity_phase_opt: res.fidelity_phase_opt,
                        p_succ: res.p_succ,
                        rate_hz: res.rate_hz,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            for (s, pt) in p.settings.iter().zip(&rows) {
                t.push(breed_row(p, s, pt));
            }
        }
        EtaPlan::Scan(grid) => {
            for (s, pts) in p.settings.iter().zip(scan_all(p, grid)?) {
                for pt in &pts {
                    t.push(breed_row(p, s, pt));
                }
            }
        }
        EtaPlan::Optimize(grid) => {
            let best = p
                .settings
                .par_iter()
                .map(|s| {
                    let (eta, res) = optimize_eta(&template(p, s, grid[0]), grid)?;
                    Ok(ScanPoint {
                        eta,
                        fidelity: res.fidelity,
                        fidelity_phase_opt: res.fidelity_phase_opt,
                        p_succ: res.p_succ,
                        rate_hz: res.rate_hz,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            for (s, pt) in p.settings.iter().zip(&best) {
                t.push(breed_row(p, s, pt));
            }
        }
    }
    Ok(t)
}

fn frontier_table(p: &BreedPlan) -> Result<Table> {
    let EtaPlan::Scan(grid) = &p.eta else {
        return Err(Error::InvalidParameter("a frontier needs an eta grid".into()));
    };
    let mut t = Table::new(BREED_COLUMNS);
    for (s, pts) in p.settings.iter().zip(scan_all(p, grid)?) {
        for pt in frontier(&pts, p.fidelity_floor) {
            t.push(breed_row(p, s, &pt));
        }
    }
    Ok(t)
}

fn correlated(p: &CorrelatedPlan) -> Result<Table> {
    let dist = mpnr_core::fock::photon_distribution(&squeezed_vacuum(p.r, p.trunc)?);
    let jobs: Vec<(usize, f64)> = p
        .ns
        .iter()
        .flat_map(|&n| p.ps.iter().map(move |&q| (n, q)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, q)| {
            let spec = DetectorSpec::balanced(n)
                .with_efficiency(p.kappa)
                .with_dark_eps(p.dark_eps)
                .with_corr_p(q);
            correlated_moment(&dist, &spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["p", "n", "biased_moment", "unbiased_moment", "bias"]);
    for m in rows {
        t.push(vec![
            m.p.into(),
            m.n.into(),
            m.biased_moment.into(),
            m.unbiased_moment.into(),
            m.bias.into(),
        ]);
    }
    Ok(t)
}

fn regression(ids: &[usize]) -> Table {
    let outcomes: Vec<_> = ids.par_iter().map(|&id| mpnr_core::regression::run(id)).collect();
    let mut t = Table::new(&["criterion", "name", "result", "detail"]);
    for o in outcomes {
        t.push(vec![
            o.id.into(),
            Cell::Text(o.name.into()),
            Cell::Text(if o.pass { "PASS" } else { "FAIL" }.into()),
            Cell::Text(o.detail),
        ]);
    }
    t
}

