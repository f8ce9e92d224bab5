//! Experiment configuration: TOML text checked into typed plans.

use std::path::PathBuf;

use mpnr_core::breeding::{eta_grid, Detector, Scheme};
use mpnr_core::{DetectorSpec, SqueezeParam, Truncation};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("{}key `{key}`: {msg}", line.map(|l| format!("line {l}, ")).unwrap_or_default())]
    Key {
        key: &'static str,
        line: Option<usize>,
        msg: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Moments,
    SqueezedCalib,
    CatBreed,
    GpsBreed,
    Correlated,
    Frontier,
    Regression,
}

impl ExperimentKind {
    fn default_output(self) -> &'static str {
        match self {
            ExperimentKind::Moments => "moments.csv",
            ExperimentKind::SqueezedCalib => "squeezed_calib.csv",
            ExperimentKind::CatBreed => "cat_breed.csv",
            ExperimentKind::GpsBreed => "gps_breed.csv",
            ExperimentKind::Correlated => "correlated.csv",
            ExperimentKind::Frontier => "frontier.csv",
            ExperimentKind::Regression => "regression.csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SchemeKind {
    Subtraction,
    Generalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum DetectorKind {
    Mpnr,
    IdealPnr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Coherent,
    EvenCat,
    OddCat,
    Fock,
    Squeezed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentKind,
    squeezing_db: Option<f64>,
    n_detectors: Option<OneOrMany<usize>>,
    kappa: Option<OneOrMany<f64>>,
    dark_eps: Option<f64>,
    corr_p: Option<OneOrMany<f64>>,
    k_clicks: Option<usize>,
    eta: Option<f64>,
    eta_grid: Option<[f64; 3]>,
    optimize_eta: Option<bool>,
    fidelity_floor: Option<f64>,
    truncation: Option<usize>,
    tail_tol: Option<f64>,
    count_rate_hz: Option<f64>,
    scheme: Option<SchemeKind>,
    detector: Option<DetectorKind>,
    state: Option<StateKind>,
    alpha: Option<f64>,
    photons: Option<usize>,
    moment_order: Option<u32>,
    criteria: Option<Vec<usize>>,
    output: Option<String>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentsPlan {
    pub state: StateKind,
    pub alpha: f64,
    pub photons: usize,
    pub squeezing: SqueezeParam,
    pub h: u32,
    pub ns: Vec<usize>,
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibPlan {
    pub r: SqueezeParam,
    pub ns: Vec<usize>,
    pub kappa: f64,
    pub dark_eps: f64,
    pub trunc: Truncation,
}

/// How eta is chosen for each detector setting.
#[derive(Debug, Clone, PartialEq)]
pub enum EtaPlan {
    Single(f64),
    Scan(Vec<f64>),
    Optimize(Vec<f64>),
}

/// One detector column of a breeding table.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSetting {
    /// `None` for a number-resolving detector without pixel limit.
    pub n: Option<usize>,
    pub kappa: f64,
    pub detector: Detector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreedPlan {
    pub r: SqueezeParam,
    pub k: usize,
    pub scheme: Scheme,
    pub settings: Vec<DetectorSetting>,
    pub eta: EtaPlan,
    pub trunc: Truncation,
    pub count_rate_hz: Option<f64>,
    pub fidelity_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedPlan {
    pub r: SqueezeParam,
    pub ns: Vec<usize>,
    pub ps: Vec<f64>,
    pub kappa: f64,
    pub dark_eps: f64,
    pub trunc: Truncation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Moments(MomentsPlan),
    SqueezedCalib(CalibPlan),
    Breed(BreedPlan),
    Frontier(BreedPlan),
    Correlated(CorrelatedPlan),
    Regression(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub plan: Plan,
    pub output: PathBuf,
    pub seed: u64,
}

struct Checker<'a> {
    src: &'a str,
}

impl Checker<'_> {
    fn line_of(&self, key: &str) -> Option<usize> {
        self.src.lines().position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
    }

    fn err(&self, key: &'static str, msg: impl Into<String>) -> ConfigError {
        ConfigError::Key {
            key,
            line: self.line_of(key),
            msg: msg.into(),
        }
    }

    fn require<T: Clone>(&self, key: &'static str, v: &Option<T>) -> Result<T, ConfigError> {
        v.clone().ok_or_else(|| self.err(key, "required by this experiment"))
    }

    fn unit(&self, key: &'static str, v: f64) -> Result<f64, ConfigError> {
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(self.err(key, format!("must lie in [0, 1], got {v}")))
        }
    }

    fn forbid<T>(&self, key: &'static str, v: &Option<T>, why: &str) -> Result<(), ConfigError> {
        match v {
            Some(_) => Err(self.err(key, format!("not used {why}"))),
            None => Ok(()),
        }
    }
}

pub fn parse(src: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let c = Checker { src };
    let kind = raw.experiment;

    let squeezing = |c: &Checker| -> Result<SqueezeParam, ConfigError> {
        let db = c.require("squeezing_db", &raw.squeezing_db)?;
        if !(0.0..=20.0).contains(&db) {
            return Err(c.err("squeezing_db", format!("must lie in [0, 20] dB, got {db}")));
        }
        Ok(SqueezeParam::from_db(db))
    };
    let detector_counts = |c: &Checker, even: bool| -> Result<Vec<usize>, ConfigError> {
        let ns = c.require("n_detectors", &raw.n_detectors)?.to_vec();
        if ns.is_empty() {
            return Err(c.err("n_detectors", "needs at least one value"));
        }
        if let Some(n) = ns.iter().find(|n| **n == 0 || **n > 4096) {
            return Err(c.err("n_detectors", format!("must lie in 1..=4096, got {n}")));
        }
        if even {
            if let Some(n) = ns.iter().find(|n| **n % 2 == 1) {
                return Err(c.err("n_detectors", format!("pair correlation needs even counts, got {n}")));
            }
        }
        Ok(ns)
    };
    let single_kappa = |c: &Checker| -> Result<f64, ConfigError> {
        match &raw.kappa {
            None => Ok(1.0),
            Some(OneOrMany::One(k)) => c.unit("kappa", *k),
            Some(OneOrMany::Many(_)) => Err(c.err("kappa", "takes a single value here")),
        }
    };
    let dark = |c: &Checker| -> Result<f64, ConfigError> {
        let e = raw.dark_eps.unwrap_or(0.0);
        if (0.0..1.0).contains(&e) {
            Ok(e)
        } else {
            Err(c.err("dark_eps", format!("must lie in [0, 1), got {e}")))
        }
    };
    let trunc = |c: &Checker, default_dim: usize, default_tol: f64| -> Result<Truncation, ConfigError> {
        let dim = raw.truncation.unwrap_or(default_dim);
        if !(2..=512).contains(&dim) {
            return Err(c.err("truncation", format!("must lie in 2..=512, got {dim}")));
        }
        let tol = raw.tail_tol.unwrap_or(default_tol);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(c.err("tail_tol", format!("must lie in (0, 1), got {tol}")));
        }
        Ok(Truncation::new(dim).with_tail_tol(tol))
    };

    let plan = match kind {
        ExperimentKind::Moments => {
            let state = raw.state.unwrap_or(StateKind::Coherent);
            let alpha = raw.alpha.unwrap_or(0.5f64.sqrt());
            if !(alpha.is_finite() && alpha.abs() <= 6.0) {
                return Err(c.err("alpha", format!("must satisfy |alpha| <= 6, got {alpha}")));
            }
            if matches!(state, StateKind::OddCat) && alpha == 0.0 {
                return Err(c.err("alpha", "an odd cat needs alpha != 0"));
            }
            let photons = raw.photons.unwrap_or(1);
            let h = raw.moment_order.unwrap_or(2);
            if !(1..=8).contains(&h) {
                return Err(c.err("moment_order", format!("must lie in 1..=8, got {h}")));
            }
            let squeezing = if state == StateKind::Squeezed {
                squeezing(&c)?
            } else {
                SqueezeParam::vacuum()
            };
            if let Some(d) = raw.truncation {
                if !(2..=512).contains(&d) {
                    return Err(c.err("truncation", format!("must lie in 2..=512, got {d}")));
                }
                if state == StateKind::Fock && photons >= d {
                    return Err(c.err("photons", format!("must be below the truncation {d}")));
                }
            }
            Plan::Moments(MomentsPlan {
                state,
                alpha,
                photons,
                squeezing,
                h,
                ns: detector_counts(&c, false)?,
                truncation: raw.truncation,
            })
        }
        ExperimentKind::SqueezedCalib => Plan::SqueezedCalib(CalibPlan {
            r: squeezing(&c)?,
            ns: detector_counts(&c, false)?,
            kappa: single_kappa(&c)?,
            dark_eps: dark(&c)?,
            trunc: trunc(&c, 120, 1e-12)?,
        }),
        ExperimentKind::Correlated => {
            let ps = c.require("corr_p", &raw.corr_p)?.to_vec();
            if ps.is_empty() {
                return Err(c.err("corr_p", "needs at least one value"));
            }
            for p in &ps {
                c.unit("corr_p", *p)?;
            }
            Plan::Correlated(CorrelatedPlan {
                r: squeezing(&c)?,
                ns: detector_counts(&c, true)?,
                ps,
                kappa: single_kappa(&c)?,
                dark_eps: dark(&c)?,
                trunc: trunc(&c, 120, 1e-12)?,
            })
        }
        ExperimentKind::CatBreed | ExperimentKind::GpsBreed | ExperimentKind::Frontier => {
            let scheme = match (kind, raw.scheme) {
                (ExperimentKind::GpsBreed, Some(SchemeKind::Subtraction)) => {
                    return Err(c.err("scheme", "gps-breed always uses the generalized scheme"))
                }
                (ExperimentKind::GpsBreed, _) => Scheme::Generalized,
                (_, Some(SchemeKind::Generalized)) => Scheme::Generalized,
                _ => Scheme::Subtraction,
            };
            let k = raw.k_clicks.unwrap_or(2);
            let kappas = raw.kappa.as_ref().map_or(vec![1.0], |k| k.to_vec());
            if kappas.is_empty() {
                return Err(c.err("kappa", "needs at least one value"));
            }
            for kp in &kappas {
                c.unit("kappa", *kp)?;
            }
            let dark_eps = dark(&c)?;
            let corr = match &raw.corr_p {
                None => 0.0,
                Some(OneOrMany::One(p)) => c.unit("corr_p", *p)?,
                Some(OneOrMany::Many(_)) => return Err(c.err("corr_p", "takes a single value here")),
            };
            let trunc = trunc(&c, 32, 1e-5)?;
            let mut settings = Vec::new();
            match raw.detector.unwrap_or(DetectorKind::Mpnr) {
                DetectorKind::Mpnr => {
                    let ns = detector_counts(&c, corr > 0.0)?;
                    for &n in &ns {
                        if k > n {
                            return Err(c.err("k_clicks", format!("{k} clicks exceed {n} detectors")));
                        }
                        for &kappa in &kappas {
                            let spec = DetectorSpec::balanced(n)
                                .with_efficiency(kappa)
                                .with_dark_eps(dark_eps)
                                .with_corr_p(corr);
                            settings.push(DetectorSetting {
                                n: Some(n),
                                kappa,
                                detector: Detector::Mpnr(spec),
                            });
                        }
                    }
                }
                DetectorKind::IdealPnr => {
                    c.forbid("n_detectors", &raw.n_detectors, "with an ideal-pnr detector")?;
                    c.forbid("dark_eps", &raw.dark_eps, "with an ideal-pnr detector")?;
                    c.forbid("corr_p", &raw.corr_p, "with an ideal-pnr detector")?;
                    if k >= trunc.dim {
                        return Err(c.err("k_clicks", format!("must be below the truncation {}", trunc.dim)));
                    }
                    for &kappa in &kappas {
                        settings.push(DetectorSetting {
                            n: None,
                            kappa,
                            detector: Detector::IdealPnr { kappa },
                        });
                    }
                }
            }
            let grid = match raw.eta_grid {
                Some([lo, hi, step]) => Some(
                    eta_grid(lo, hi, step)
                        .map_err(|_| c.err("eta_grid", format!("[{lo}, {hi}, {step}] is not a grid inside [0, 1]")))?,
                ),
                None => None,
            };
            let optimize = raw.optimize_eta.unwrap_or(false);
            let eta = match (raw.eta, grid) {
                (Some(_), Some(_)) => return Err(c.err("eta_grid", "give either `eta` or `eta_grid`, not both")),
                (Some(e), None) => {
                    if kind == ExperimentKind::Frontier {
                        return Err(c.err("eta", "a frontier needs `eta_grid`"));
                    }
                    if optimize {
                        return Err(c.err("optimize_eta", "needs `eta_grid`"));
                    }
                    EtaPlan::Single(c.unit("eta", e)?)
                }
                (None, Some(g)) if optimize => {
                    if kind == ExperimentKind::Frontier {
                        return Err(c.err("optimize_eta", "not used by a frontier"));
                    }
                    EtaPlan::Optimize(g)
                }
                (None, Some(g)) => EtaPlan::Scan(g),
                (None, None) => return Err(c.err("eta", "give `eta` or `eta_grid`")),
            };
            if kind != ExperimentKind::Frontier {
                c.forbid("fidelity_floor", &raw.fidelity_floor, "outside a frontier")?;
            }
            let count_rate_hz = match raw.count_rate_hz {
                Some(hz) if !(hz >= 0.0 && hz.is_finite()) => {
                    return Err(c.err("count_rate_hz", format!("must be a non-negative rate, got {hz}")))
                }
                other => other,
            };
            let plan = BreedPlan {
                r: squeezing(&c)?,
                k,
                scheme,
                settings,
                eta,
                trunc,
                count_rate_hz,
                fidelity_floor: raw.fidelity_floor,
            };
            if kind == ExperimentKind::Frontier {
                Plan::Frontier(plan)
            } else {
                Plan::Breed(plan)
            }
        }
        ExperimentKind::Regression => {
            let total = mpnr_core::regression::count();
            let ids = raw.criteria.clone().unwrap_or_else(|| (1..=total).collect());
            if let Some(id) = ids.iter().find(|i| **i == 0 || **i > total) {
                return Err(c.err("criteria", format!("criteria are numbered 1..={total}, got {id}")));
            }
            Plan::Regression(ids)
        }
    };

    let output = PathBuf::from(raw.output.as_deref().unwrap_or(kind.default_output()));
    if output.as_os_str().is_empty() {
        return Err(c.err("output", "must name a file"));
    }
    Ok(ExperimentConfig {
        kind,
        plan,
        output,
        seed: raw.seed.unwrap_or(0),
    })
}
