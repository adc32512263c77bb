use std::fs;
use std::path::Path;

use serde::Serialize;

use rqdiff::bvp::{picard_solve, SolveStatus};
use rqdiff::identities::{lemma22_identity_residual, pohozaev_residual, pohozaev_sign_certificate, sigma_window};
use rqdiff::ivp::{
    decay_check, integrate_broken, integrate_pure_power, lemma21_diagnostics, lemma22_bound_check, PurePowerParams,
    Trajectory,
};
use rqdiff::scan::{emit_phase_diagram, monotonicity_warnings, scan_phase_diagram, ExecMode};
use rqdiff::transforms::{blowup_rescale, broken_to_plain, diffusion_to_plain};
use rqdiff::{check_hypotheses, classify_regime, compute_exponents, RadialProfile};

use crate::config::{IdentityKind, RunConfig, TransformKind};
use crate::error::{io_error, CliError};

pub type CmdResult = Result<(), CliError>;

fn write(dir: &Path, name: &str, body: &str) -> CmdResult {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| io_error(&path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CmdResult {
    let mut body = serde_json::to_string_pretty(value).expect("report serializes");
    body.push('\n');
    write(dir, name, &body)
}

pub fn exponents(cfg: &RunConfig, dir: &Path) -> CmdResult {
    #[derive(Serialize)]
    struct Out<'a> {
        problem: &'a rqdiff::ProblemParams,
        exponents: rqdiff::ExponentSet,
    }
    let ex = compute_exponents(&cfg.problem)?;
    write_json(dir, "exponents.json", &Out { problem: &cfg.problem, exponents: ex })
}

pub fn classify(cfg: &RunConfig, dir: &Path) -> CmdResult {
    #[derive(Serialize)]
    struct Out {
        classification: rqdiff::RegimeClassification,
        hypotheses: rqdiff::HypothesisReport,
    }
    let out = Out {
        classification: classify_regime(&cfg.problem),
        hypotheses: check_hypotheses(&cfg.problem, &cfg.coefficients),
    };
    write_json(dir, "classification.json", &out)
}

pub fn solve(cfg: &RunConfig, dir: &Path) -> CmdResult {
    let rep = picard_solve(&cfg.problem, &cfg.coefficients, &cfg.solver)?;
    log::info!("status {} after {} iterations", rep.status.as_str(), rep.iterations);
    if let Some(v) = &rep.solution {
        write(dir, "solution.csv", &v.to_csv())?;
    }
    write_json(dir, "report.json", &rep)
}

fn converged_solution(cfg: &RunConfig) -> Result<RadialProfile, CliError> {
    let rep = picard_solve(&cfg.problem, &cfg.coefficients, &cfg.solver)?;
    match (rep.status, rep.solution) {
        (SolveStatus::Converged, Some(v)) => Ok(v),
        (status, _) => Err(CliError::NotConverged(
            rep.reason.map_or(status.as_str().to_string(), |r| format!("{}: {r}", status.as_str())),
        )),
    }
}

fn trajectory_outputs(traj: &Trajectory, dir: &Path) -> CmdResult {
    #[derive(Serialize)]
    struct Events {
        first_zero: Option<f64>,
        switch_radius: Option<f64>,
        r_max: f64,
        nodes: usize,
        monotonicity: rqdiff::ivp::MonotonicityReport,
        decay: Option<rqdiff::ivp::DecayReport>,
        bound: rqdiff::ivp::BoundReport,
    }
    let pp = &traj.params;
    let events = Events {
        first_zero: traj.first_zero,
        switch_radius: traj.switch_radius,
        r_max: traj.r_max,
        nodes: traj.r.len(),
        monotonicity: lemma21_diagnostics(traj, pp.rho()),
        decay: decay_check(traj, pp).ok(),
        bound: lemma22_bound_check(traj, pp),
    };
    write(dir, "trajectory.csv", &traj.to_csv())?;
    write_json(dir, "events.json", &events)
}

fn pure_power(cfg: &RunConfig) -> PurePowerParams {
    let pp = &cfg.problem;
    PurePowerParams::from_origin(pp.n_dim, pp.m, pp.alpha, pp.beta, cfg.ivp.lambda, cfg.ivp.wp.unwrap_or(pp.p))
}

pub fn ivp(cfg: &RunConfig, dir: &Path) -> CmdResult {
    let traj = integrate_pure_power(&pure_power(cfg), cfg.ivp.r_max, cfg.ivp.rtol)?;
    trajectory_outputs(&traj, dir)
}

fn broken_trajectory(cfg: &RunConfig) -> Result<(Trajectory, f64), CliError> {
    let d = cfg.ivp.d.ok_or(CliError::MissingSection("ivp.d"))?;
    Ok((integrate_broken(&cfg.problem, d, cfg.ivp.r_max, cfg.ivp.rtol)?, d))
}

pub fn broken(cfg: &RunConfig, dir: &Path) -> CmdResult {
    let (traj, _) = broken_trajectory(cfg)?;
    trajectory_outputs(&traj, dir)
}

pub fn identity(cfg: &RunConfig, dir: &Path) -> CmdResult {
    match cfg.identity.kind {
        IdentityKind::Pohozaev => {
            #[derive(Serialize)]
            struct Out {
                sigma: f64,
                residual: rqdiff::identities::ResidualReport,
                certificate: rqdiff::identities::SignReport,
            }
            let sigma = match cfg.identity.sigma {
                Some(s) => s,
                None => compute_exponents(&cfg.problem)?.sigma_star,
            };
            sigma_window(&cfg.problem, sigma)?;
            let v = converged_solution(cfg)?;
            let residual = pohozaev_residual(&cfg.problem, &cfg.coefficients, &v, sigma)?;
            let certificate = pohozaev_sign_certificate(&cfg.problem, &cfg.coefficients, &v, Some(sigma))?;
            write_json(dir, "identity.json", &Out { sigma, residual, certificate })
        }
        IdentityKind::Variational => {
            #[derive(Serialize)]
            struct Out {
                r: f64,
                residual: rqdiff::identities::ResidualReport,
            }
            let r = cfg.identity.r.ok_or(CliError::MissingSection("identity.r"))?;
            let pp = pure_power(cfg);
            let traj = integrate_pure_power(&pp, cfg.ivp.r_max.min(2.0 * r), cfg.ivp.rtol)?;
            let residual = lemma22_identity_residual(&traj, &pp, r)?;
            write_json(dir, "identity.json", &Out { r, residual })
        }
    }
}

pub fn transform(cfg: &RunConfig, dir: &Path) -> CmdResult {
    let t = &cfg.transform;
    let rep = match t.kind {
        TransformKind::DiffusionToPlain => diffusion_to_plain(&converged_solution(cfg)?, &cfg.problem)?,
        TransformKind::BrokenToPlain => {
            let (traj, d) = broken_trajectory(cfg)?;
            broken_to_plain(&traj.broken_segment(t.segment_nodes)?, &cfg.problem, d)?
        }
        TransformKind::BlowupRescale => {
            let v = converged_solution(cfg)?;
            let k = t.k.unwrap_or_else(|| v.sup_norm());
            blowup_rescale(&v, k, &cfg.coefficients, &cfg.problem)?
        }
    };
    write(dir, "transform_profile.csv", &rep.output.to_csv())?;
    write_json(dir, "transform.json", &rep)
}

pub fn scan(cfg: &RunConfig, dir: &Path) -> CmdResult {
    let s = cfg.scan.ok_or(CliError::MissingSection("scan"))?;
    let mode = s.mode.unwrap_or_else(ExecMode::default);
    let diagram = scan_phase_diagram(&cfg.problem, &cfg.coefficients, &cfg.solver, s.axis1, s.axis2, mode)?;
    for w in monotonicity_warnings(&diagram) {
        log::warn!("{w}");
    }
    write(dir, "scan.csv", &emit_phase_diagram(&diagram)?)
}
