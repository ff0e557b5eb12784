use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use adoption_core::curves::ThetaTwoComp;
use adoption_core::data::{self, CsvSchema};
use adoption_core::econ::{
    preference_probability, threshold_uncertainty, CfDistribution, HoeffdingBound, TaskEconomy, ThresholdInputs,
};
use adoption_core::estimate::{
    allow_singular, delta_ci_tstar, embedding_gradient, fit_nls, prepost_delta_beta, profile_ci_tstar, BootstrapOptions,
    WindowSpec,
};
use adoption_core::fisher::{ar1_variants, crlb_check, design_compare, info_matrix};
use adoption_core::infer::{compare_families, constrained_lr_from, diagnostics, shape_test, vuong, TestResult};
use adoption_core::simgen::{self, PilotConfig, ScenarioGrid};
use adoption_core::{Error, ErrorModel, Family, FitOptions, Result, TimeSeries};

use crate::output::{emit, plot_csv, to_json};
use crate::{
    BenchmarkArgs, CompareArgs, CrlbArgs, DataArgs, ErrorKind, FitArgs, GradientArgs, NoiseArgs, PhaseArgs, PilotArgs,
    SimulateArgs, TestArgs, ThetaArgs, ThresholdArgs,
};

fn load_series(args: &DataArgs) -> Result<TimeSeries> {
    match args.data.strip_prefix("builtin:") {
        Some(name) => Ok(data::builtin(name)?.series),
        None => {
            let schema = CsvSchema { t_col: args.t_col.clone(), y_col: args.y_col.clone(), dow_col: args.dow_col.clone() };
            data::load_csv(&args.data, &schema)
        }
    }
}

fn theta(a: ThetaArgs) -> Result<ThetaTwoComp<f64>> {
    ThetaTwoComp::new(a.n0, a.alpha, a.umax, a.beta)
}

fn error_model(a: &NoiseArgs, n: usize) -> Result<ErrorModel<f64>> {
    let em = match a.error_model {
        ErrorKind::Gaussian => ErrorModel::GaussianIid { sigma: a.sigma },
        ErrorKind::Ar1 => ErrorModel::GaussianAr1 { sigma: a.sigma, rho: a.rho },
        ErrorKind::Poisson => ErrorModel::Poisson { kappa: a.kappa },
        ErrorKind::Binomial => {
            let trials = match a.trials.as_slice() {
                [one] => vec![*one; n],
                many => many.to_vec(),
            };
            ErrorModel::Binomial { m: a.m, trials }
        }
    };
    Ok(em)
}

fn write<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    emit(&to_json(value)?, out)
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain("level must lie in (0, 1)".into()))
    }
}

/// Observed points plus the fitted curve on a 201-point grid.
fn fitted_curves(series: &TimeSeries, fits: &[(&str, &adoption_core::FitReport)]) -> String {
    let (t0, t1) = (series.times[0], series.times[series.len() - 1]);
    let grid: Vec<f64> = (0..=200).map(|i| t0 + (t1 - t0) * i as f64 / 200.0).collect();
    let mut rows = vec![("observed", series.times.iter().copied().zip(series.values.iter().copied()).collect())];
    for (name, f) in fits {
        rows.push((*name, grid.iter().map(|&t| (t, f.predict(t))).collect()));
    }
    plot_csv(&rows)
}

pub fn fit(a: FitArgs) -> Result<()> {
    check_level(a.level)?;
    let series = load_series(&a.data)?;
    let family: Family = a.family.parse()?;
    let report = allow_singular(fit_nls(&series, family, None, &FitOptions::default()))?;
    let mut out = BTreeMap::new();
    out.insert("fit", serde_json::to_value(&report).map_err(json_err)?);
    out.insert("standard_errors", serde_json::to_value(report.standard_errors()).map_err(json_err)?);
    if let Some(th) = report.theta_two_comp() {
        out.insert("phase", serde_json::to_value(th.classify_phase()).map_err(json_err)?);
        match delta_ci_tstar(&report, a.level) {
            Ok(ci) => out.insert("tstar_delta", serde_json::to_value(ci).map_err(json_err)?),
            Err(e) => out.insert("tstar_delta", serde_json::Value::String(e.to_string())),
        };
        if a.profile {
            match profile_ci_tstar(&series, a.level) {
                Ok(ci) => out.insert("tstar_profile", serde_json::to_value(ci).map_err(json_err)?),
                Err(e) => out.insert("tstar_profile", serde_json::Value::String(e.to_string())),
            };
        }
    }
    if let Some(p) = &a.plot {
        std::fs::write(p, fitted_curves(&series, &[(family.name(), &report)]))?;
    }
    write(&out, a.out.as_deref())
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Serialize)]
struct PhaseOut {
    theta: ThetaTwoComp<f64>,
    phase: adoption_core::PhaseReport<f64>,
    monotone_condition: bool,
    /// `(dt*/dalpha, dt*/dbeta, dt*/dN0, dt*/dU_max)`.
    sensitivities: Option<[f64; 4]>,
}

pub fn phase(a: PhaseArgs) -> Result<()> {
    let th = theta(a.theta)?;
    let out = PhaseOut {
        theta: th,
        phase: th.classify_phase(),
        monotone_condition: th.monotone_condition(),
        sensitivities: th.tstar_sensitivities().ok(),
    };
    if let Some(p) = &a.plot {
        if !(a.horizon > 0.0) {
            return Err(Error::Domain("horizon must be positive".into()));
        }
        let grid: Vec<f64> = (0..=200).map(|i| a.horizon * i as f64 / 200.0).collect();
        let n = grid.iter().map(|&t| (t, th.n0 * (-th.alpha * t).exp())).collect();
        let u = grid.iter().map(|&t| (t, th.umax * (1.0 - (-th.beta * t).exp()))).collect();
        let total = grid.iter().map(|&t| (t, th.value(t))).collect();
        std::fs::write(p, plot_csv(&[("N", n), ("U", u), ("A", total)]))?;
    }
    write(&out, a.out.as_deref())
}

pub fn crlb(a: CrlbArgs) -> Result<()> {
    let th = theta(a.theta)?;
    let times = match &a.design.times {
        Some(t) => t.clone(),
        None => simgen::design(a.design.n_points, a.design.horizon),
    };
    let em = error_model(&a.noise, times.len())?;
    let mut out = BTreeMap::new();
    out.insert("info", serde_json::to_value(info_matrix(&th, &times, &em)?).map_err(json_err)?);
    if let ErrorModel::GaussianAr1 { sigma, rho } = em {
        out.insert("ar1_variants", serde_json::to_value(ar1_variants(&th, &times, sigma, rho)?).map_err(json_err)?);
    }
    if let Some(other) = &a.compare_times {
        if matches!(em, ErrorModel::Binomial { .. }) {
            return Err(Error::Domain("design comparison is not available for the binomial model".into()));
        }
        out.insert("design_compare", serde_json::to_value(design_compare(&th, &times, other, &em)?).map_err(json_err)?);
    }
    if let Some(reps) = a.replicates {
        let check = crlb_check(&th, &times, &em, reps, a.seed)?;
        out.insert("ratio_alpha", serde_json::to_value(check.ratio_alpha()).map_err(json_err)?);
        out.insert("ratio_beta", serde_json::to_value(check.ratio_beta()).map_err(json_err)?);
        out.insert("check", serde_json::to_value(check).map_err(json_err)?);
    }
    write(&out, a.out.as_deref())
}

pub fn test(a: TestArgs) -> Result<()> {
    check_level(a.level)?;
    let series = load_series(&a.data)?;
    let opts = FitOptions::default();
    let fit = allow_singular(fit_nls(&series, Family::TwoComp, None, &opts))?;
    let (dw, bp) = diagnostics(&fit, &series.times)?;
    let mut out = BTreeMap::new();
    out.insert("durbin_watson", serde_json::to_value(dw).map_err(json_err)?);
    out.insert("breusch_pagan", serde_json::to_value(bp).map_err(json_err)?);
    out.insert("constrained_lr", serde_json::to_value(constrained_lr_from(&series, &fit)?).map_err(json_err)?);
    out.insert("shape_test", serde_json::to_value(shape_test(&series, a.n_boot, a.seed)?).map_err(json_err)?);
    let mut vuongs: BTreeMap<&str, serde_json::Value> = BTreeMap::new();
    for fam in Family::ALL.into_iter().filter(|f| *f != Family::TwoComp) {
        let v = allow_singular(fit_nls(&series, fam, None, &opts))
            .and_then(|other| vuong(&fit.pointwise_loglik(), &other.pointwise_loglik(), fit.k(), other.k()));
        let val = match v {
            Ok(t) => serde_json::to_value::<TestResult>(t).map_err(json_err)?,
            Err(e) => serde_json::Value::String(e.to_string()),
        };
        vuongs.insert(fam.name(), val);
    }
    out.insert("vuong_twocomp_vs", serde_json::to_value(vuongs).map_err(json_err)?);
    if let Some(t0) = a.intervention {
        let spec = WindowSpec { window_length_days: a.window, ..WindowSpec::new(t0) };
        let boot = BootstrapOptions { resamples: a.resamples, block_len: a.block_len, seed: a.seed, level: a.level };
        out.insert("prepost", serde_json::to_value(prepost_delta_beta(&series, &spec, &boot)?).map_err(json_err)?);
    }
    write(&out, a.out.as_deref())
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let series = load_series(&a.data)?;
    let cmp = compare_families(&series)?;
    if let Some(p) = &a.csv {
        let mut s = String::from("family,aic,rmse,dw,bp_p,vuong_twocomp,error\n");
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &cmp.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.family,
                cell(r.aic),
                cell(r.rmse),
                cell(r.dw),
                cell(r.bp_p),
                cell(r.vuong_twocomp.as_ref().map(|v| v.statistic)),
                r.error.as_deref().unwrap_or("").replace(',', ";")
            ));
        }
        std::fs::write(p, s)?;
    }
    if let Some(p) = &a.plot {
        let fits: Vec<(&str, &adoption_core::FitReport)> =
            cmp.rows.iter().filter_map(|r| r.fit.as_ref().map(|f| (r.family.name(), f))).collect();
        std::fs::write(p, fitted_curves(&series, &fits))?;
    }
    write(&cmp, a.out.as_deref())
}

#[derive(Serialize)]
struct ThresholdOut {
    inputs: ThresholdInputs,
    report: adoption_core::econ::ThresholdReport,
}

pub fn threshold(a: ThresholdArgs) -> Result<()> {
    let mu_c = match (a.mu_c, &a.tasks) {
        (Some(m), None) => m,
        (None, Some(path)) => TaskEconomy::from_csv(path, a.c_time, a.c_fric)?.mean_failure_cost(),
        (Some(_), Some(_)) => return Err(Error::Domain("give either --mu-c or --tasks, not both".into())),
        (None, None) => return Err(Error::Domain("one of --mu-c or --tasks is required".into())),
    };
    let inputs = ThresholdInputs {
        r_chat: a.r_chat,
        delta_tau: a.delta_tau,
        delta_phi: a.delta_phi,
        c_time: a.c_time,
        c_fric: a.c_fric,
        mu_c,
    };
    let hoeffding = match (a.c_max, a.n_samples) {
        (Some(c_max), Some(n)) => Some(HoeffdingBound { c_max, n }),
        (None, None) => None,
        _ => return Err(Error::Domain("--c-max and --n-samples go together".into())),
    };
    let mut report = threshold_uncertainty(&inputs, a.sigma_mu, a.level, hoeffding)?;
    let pair = |v: &[f64], flag: &str| match v {
        [x, y] => Ok((*x, *y)),
        _ => Err(Error::Domain(format!("{flag} takes two comma-separated numbers"))),
    };
    let dist = match (&a.cf_uniform, &a.cf_lognormal) {
        (Some(u), None) => pair(u, "--cf-uniform").map(|(low, high)| Some(CfDistribution::Uniform { low, high }))?,
        (None, Some(l)) => pair(l, "--cf-lognormal").map(|(mu, sigma)| Some(CfDistribution::LogNormal { mu, sigma }))?,
        (None, None) => None,
        _ => return Err(Error::Domain("give at most one C_f law".into())),
    };
    match (dist, a.gap) {
        (Some(d), Some(gap)) => report.preference_probability = Some(preference_probability(&d, report.k, gap)?),
        (None, None) => {}
        _ => return Err(Error::Domain("a C_f law and --gap go together".into())),
    }
    write(&ThresholdOut { inputs, report }, a.out.as_deref())
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let th = theta(a.theta)?;
    let em = error_model(&a.noise, a.n_points)?;
    let series = simgen::gen_series(&th, &em, a.n_points, a.horizon, a.seed)?;
    let mut buf = Vec::new();
    data::write_csv(&series, &mut buf)?;
    emit(&String::from_utf8_lossy(&buf), a.out.as_deref())
}

pub fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let mut grid = match &a.config {
        Some(p) => ScenarioGrid::parse(&std::fs::read_to_string(p)?)?,
        None => ScenarioGrid::default(),
    };
    if let Some(r) = a.replicates {
        grid.replicates = r;
    }
    if let Some(s) = a.seed {
        grid.seed = s;
    }
    let report = simgen::run_benchmark(&grid)?;
    if let Some(p) = &a.csv {
        let mut s = String::from(
            "scenario,depth,sigma,rho,n_points,t_star,replicates,failures,degraded,near_degenerate,coverage_tstar,coverage_lo,coverage_hi,reject_lr,reject_lr_lo,reject_lr_hi,reject_shape,mean_crlb_ratio\n",
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &report.scenarios {
            let sc = &r.scenario;
            let cov = r.coverage_tstar;
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                sc.index,
                sc.depth,
                sc.sigma,
                sc.rho,
                sc.n_points,
                opt(r.t_star),
                r.replicates,
                r.failures,
                r.degraded,
                r.near_degenerate,
                opt(cov.map(|c| c.estimate)),
                opt(cov.map(|c| c.ci.0)),
                opt(cov.map(|c| c.ci.1)),
                r.reject_lr.estimate,
                r.reject_lr.ci.0,
                r.reject_lr.ci.1,
                r.reject_shape.estimate,
                r.mean_crlb_ratio
            ));
        }
        std::fs::write(p, s)?;
    }
    write(&report, a.out.as_deref())
}

pub fn pilot(a: PilotArgs) -> Result<()> {
    let pair = |v: &[f64], flag: &str| match v {
        [x, y] => Ok((*x, *y)),
        _ => Err(Error::Domain(format!("{flag} takes two comma-separated numbers"))),
    };
    let (cf_low, cf_high) = pair(&a.cf, "--cf")?;
    let cfg = PilotConfig {
        seed: a.seed,
        n_tasks: a.n_tasks,
        beta_chat: pair(&a.beta_chat, "--beta-chat")?,
        beta_agent: pair(&a.beta_agent, "--beta-agent")?,
        c_time: a.c_time,
        c_fric: a.c_fric,
        delta_tau: a.delta_tau,
        delta_phi: a.delta_phi,
        cf_low,
        cf_high,
    };
    let res = simgen::pilot_sim(&cfg)?;
    let mut out = BTreeMap::new();
    out.insert("config", serde_json::to_value(cfg).map_err(json_err)?);
    out.insert("result", serde_json::to_value(res).map_err(json_err)?);
    write(&out, a.out.as_deref())
}

pub fn gradient(a: GradientArgs) -> Result<()> {
    check_level(a.level)?;
    let cohorts = match a.data.as_str() {
        "builtin:cohorts" => data::cohorts(),
        other if other.starts_with("builtin:") => return Err(Error::UnknownDataset(other[8..].to_string())),
        path => data::load_cohorts(path)?,
    };
    write(&embedding_gradient(&cohorts, a.weighted, a.level)?, a.out.as_deref())
}
