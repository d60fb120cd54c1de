use crate::args::{AcceptArgs, AsymptArgs, Common, ConvergeArgs, CounterexampleArgs, KernelArgs, MassArgs, RouteArg, Side};
use crate::manifest::{floats, Recorder};
use fpl_core::acceptance::{golden_constants, Acceptance, Golden, CRITERIA};
use fpl_core::convergence::{
    boundary_functional, dirac_distance_x, dirac_gap_reflected, dirac_gap_x, run_experiment, ExperimentRow, ExperimentSpec,
};
use fpl_core::distinguished::{
    q0_asymptotic_ratio, q0_closed_form, q0_spectral, q0_subordination, qtilde_bounds_ratio, qtilde_critical_mass, qtilde_mass,
};
use fpl_core::kernels::{
    critical_region_mass, heat_mass, q_asymptotic_ratio, q_bounds_ratio, q_closed_form, q_mass, q_spectral, q_subordination,
};
use fpl_core::spectral::calibrated;
use fpl_core::{KernelQuery, LogValue, QuadratureConfig, SpaceDescriptor};
use rayon::prelude::*;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fpl_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid FPL_THREADS value {0:?}: expected a positive integer")]
    Threads(String),
    #[error("failing criteria: {0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Failed(_) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Text produced by a command and where it should go.
pub struct Output {
    pub text: String,
    pub out: Option<PathBuf>,
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn setup(common: &Common, rec: &mut Recorder) -> CliResult<(SpaceDescriptor, QuadratureConfig)> {
    let cfg = QuadratureConfig::default().with_rel_tol(common.rel_tol);
    cfg.validate().map_err(fpl_core::Error::from)?;
    rec.set("space", common.space);
    rec.set("rel_tol", format!("{:?}", common.rel_tol));
    rec.set("out", common.out.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "-".into()));
    Ok((calibrated(common.space)?, cfg))
}

fn csv(header: &str, lines: Vec<String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

fn log_fields(v: &LogValue) -> String {
    format!("{:?},{:?}", v.to_f64(), v.log_mag())
}

fn kernel_value(
    d: &SpaceDescriptor,
    q: &KernelQuery,
    route: RouteArg,
    side: Side,
    cfg: &QuadratureConfig,
) -> fpl_core::Result<LogValue> {
    match (side, route) {
        (Side::X, RouteArg::Closed) => q_closed_form(d, q, cfg),
        (Side::X, RouteArg::Spectral) => q_spectral(d, q, cfg),
        (Side::X, _) => q_subordination(d, q, cfg),
        (Side::S, RouteArg::Closed) => q0_closed_form(d, q),
        (Side::S, RouteArg::Spectral) => q0_spectral(d, q, cfg),
        (Side::S, _) => q0_subordination(d, q, cfg),
    }
}

fn route_name(route: RouteArg) -> &'static str {
    match route {
        RouteArg::Closed => "closed",
        RouteArg::Spectral => "spectral",
        RouteArg::Subordination => "subordination",
        RouteArg::Both => "both",
    }
}

pub fn kernel(a: &KernelArgs, rec: &mut Recorder) -> CliResult<Output> {
    let (d, cfg) = setup(&a.common, rec)?;
    rec.set("t", floats(&a.t));
    rec.set("sigma", format!("{:?}", a.sigma));
    rec.set("r", floats(&a.r));
    rec.set("route", route_name(a.route));
    rec.set("side", format!("{:?}", a.side).to_lowercase());
    let cells: Vec<KernelQuery> =
        a.t.iter()
            .flat_map(|&t| a.r.iter().map(move |&r| (t, r)))
            .map(|(t, r)| KernelQuery::new(t, a.sigma, r))
            .collect::<fpl_core::Result<_>>()?;
    let rows = cells
        .par_iter()
        .map(|q| -> fpl_core::Result<Vec<String>> {
            let line = |route: RouteArg, v: &LogValue, rel: &str| {
                format!("{:?},{:?},{:?},{},{},{rel}", q.t, q.sigma, q.r, route_name(route), log_fields(v))
            };
            if a.route == RouteArg::Both {
                let sub = kernel_value(&d, q, RouteArg::Subordination, a.side, &cfg)?;
                let spec = kernel_value(&d, q, RouteArg::Spectral, a.side, &cfg)?;
                let rel = format!("{:?}", sub.rel_diff(&spec));
                Ok(vec![line(RouteArg::Subordination, &sub, &rel), line(RouteArg::Spectral, &spec, &rel)])
            } else {
                Ok(vec![line(a.route, &kernel_value(&d, q, a.route, a.side, &cfg)?, "")])
            }
        })
        .collect::<fpl_core::Result<Vec<_>>>()?;
    let text = csv("t,sigma,r,route,value,ln_value,rel_diff", rows.into_iter().flatten().collect());
    Ok(Output { text, out: a.common.out.clone() })
}

pub fn asympt(a: &AsymptArgs, rec: &mut Recorder) -> CliResult<Output> {
    let (d, cfg) = setup(&a.common, rec)?;
    rec.set("t", floats(&a.t));
    rec.set("sigma", format!("{:?}", a.sigma));
    rec.set("path", format!("{:?}", a.path).to_lowercase());
    rec.set("side", format!("{:?}", a.side).to_lowercase());
    let rows =
        a.t.par_iter()
            .map(|&t| -> fpl_core::Result<String> {
                let q = KernelQuery::new(t, a.sigma, a.path.at(t))?;
                let (ratio, bounds) = match a.side {
                    Side::X => (q_asymptotic_ratio(&d, &q, &cfg)?, q_bounds_ratio(&d, &q, &cfg)?),
                    Side::S => (q0_asymptotic_ratio(&d, &q, &cfg)?, qtilde_bounds_ratio(&d, &q, &cfg)?),
                };
                Ok(format!("{:?},{:?},{:?},{ratio:?},{bounds:?}", q.t, q.sigma, q.r))
            })
            .collect::<fpl_core::Result<Vec<_>>>()?;
    Ok(Output { text: csv("t,sigma,r,asymptotic_ratio,bounds_ratio", rows), out: a.common.out.clone() })
}

pub fn mass(a: &MassArgs, rec: &mut Recorder) -> CliResult<Output> {
    let (d, cfg) = setup(&a.common, rec)?;
    rec.set("t", floats(&a.t));
    rec.set("sigma", format!("{:?}", a.sigma));
    rec.set("eps", a.eps.map(|e| format!("{e:?}")).unwrap_or_else(|| "-".into()));
    let rows =
        a.t.par_iter()
            .map(|&t| -> fpl_core::Result<Vec<String>> {
                let s = a.sigma;
                let (px, ps) = match a.eps {
                    Some(eps) => {
                        let x = critical_region_mass(&d, t, s, eps, &cfg)?;
                        let y = qtilde_critical_mass(&d, t, s, eps, &cfg)?;
                        (format!("{:?},{:?}", x.inside, x.outside), format!("{:?},{:?}", y.inside, y.outside))
                    }
                    None => (",".into(), ",".into()),
                };
                Ok(vec![
                    format!("{t:?},{s:?},heat,{:?},,", heat_mass(&d, t, &cfg)?),
                    format!("{t:?},{s:?},poisson,{:?},{px}", q_mass(&d, t, s, &cfg)?),
                    format!("{t:?},{s:?},distinguished,{:?},{ps}", qtilde_mass(&d, t, s, &cfg)?),
                ])
            })
            .collect::<fpl_core::Result<Vec<_>>>()?;
    let text = csv("t,sigma,kernel,mass,inside,outside", rows.into_iter().flatten().collect());
    Ok(Output { text, out: a.common.out.clone() })
}

pub fn counterexample(a: &CounterexampleArgs, rec: &mut Recorder) -> CliResult<Output> {
    let (d, cfg) = setup(&a.common, rec)?;
    rec.set("t", floats(&a.t));
    rec.set("sigma", format!("{:?}", a.sigma));
    rec.set("s", format!("{:?}", a.s));
    let bf = boundary_functional(&d, a.s, &cfg)?;
    let rows =
        a.t.par_iter()
            .map(|&t| -> fpl_core::Result<String> {
                let dist = dirac_distance_x(&d, a.s, t, a.sigma, &cfg)?;
                let gap = dirac_gap_x(&d, a.s, t, a.sigma, &cfg)?;
                let reflected = dirac_gap_reflected(&d, a.s, t, a.sigma, &cfg)?;
                Ok(format!(
                    "{t:?},{:?},{:?},{:?},{:?},{reflected:?},{bf:?},{:?}",
                    a.sigma, a.s, dist.value, gap.value, gap.tail_bound
                ))
            })
            .collect::<fpl_core::Result<Vec<_>>>()?;
    let header = "t,sigma,s,distance,gap,gap_reflected,boundary_functional,tail_bound";
    Ok(Output { text: csv(header, rows), out: a.common.out.clone() })
}

pub fn converge(a: &ConvergeArgs, rec: &mut Recorder) -> CliResult<Output> {
    let text = std::fs::read_to_string(&a.config).map_err(|source| CliError::Io { path: a.config.clone(), source })?;
    let spec = ExperimentSpec::parse(&text)?;
    let cfg = QuadratureConfig::default().with_rel_tol(a.rel_tol);
    cfg.validate().map_err(fpl_core::Error::from)?;
    rec.set("config", a.config.display());
    rec.set("rel_tol", format!("{:?}", a.rel_tol));
    for line in spec.to_key_value().lines() {
        if let Some((k, v)) = line.split_once('=') {
            rec.set(k, v);
        }
    }
    let out = a.out.clone().or_else(|| spec.out.clone());
    rec.set("out", out.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "-".into()));
    let d = calibrated(spec.space)?;
    let rows = run_experiment(&d, &spec, &cfg)?;
    Ok(Output { text: csv(ExperimentRow::CSV_HEADER, rows.iter().map(ExperimentRow::csv_line).collect()), out })
}

pub fn accept(a: &AcceptArgs, rec: &mut Recorder) -> CliResult<Option<Output>> {
    rec.set("suite", a.suite);
    if let Some(path) = &a.write_golden {
        rec.set("write_golden", path.display());
        let g = golden_constants(&QuadratureConfig::default())?;
        let header = "# Recorded constants; accept fails if a recomputed value leaves [0.5x, 2x].\n\
                      # Regenerate with: fpl accept --write-golden crates/core/golden/constants.txt\n";
        write_file(path, &format!("{header}{}", g.to_text()))?;
        rec.output(path);
        return Ok(None);
    }
    let mut acc = Acceptance::new(a.suite)?;
    if let Some(path) = &a.golden {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        acc.golden = Golden::parse(&text)?;
        rec.set("golden", path.display());
    }
    let ids: Vec<String> = if a.only.is_empty() {
        CRITERIA.iter().map(|s| s.to_string()).chain(std::iter::once("golden".to_string())).collect()
    } else {
        a.only.clone()
    };
    rec.set("criteria", ids.join(","));
    let mut failed = vec![];
    let stdout = std::io::stdout();
    for id in &ids {
        let r = acc.run(id)?;
        let mut lock = stdout.lock();
        // a closed pipe must not abort the suite
        let _ = writeln!(lock, "{r}");
        let _ = lock.flush();
        if !r.passed {
            failed.push(r.id);
        }
    }
    if failed.is_empty() {
        println!("all {} criteria passed", ids.len());
        Ok(None)
    } else {
        Err(CliError::Failed(failed.join(", ")))
    }
}
