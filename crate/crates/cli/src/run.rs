//! Mode pipelines: audit, barrier scan, continuation and export.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use kcurv::geometry::InducedGeometry;
use kcurv::grid::{ScalarField, SphereGrid, SpherePoint};
use kcurv::monitor::{identity_residuals, BoundReport, IdentityResiduals};
use kcurv::prescription::{
    audit_structural, xi_lattice, AuditBox, BarrierScanFailure, Barriers, HomotopyPrescription, Prescription,
    StructuralAudit,
};
use kcurv::solver::{run_homotopy, DiscreteProblem, SolveError, StepRecord};

use crate::config::{ConfigError, Mode, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Config = 2,
    Audit = 3,
    Barrier = 4,
    Continuation = 5,
}

impl Exit {
    fn status(self) -> &'static str {
        match self {
            Exit::Success => "success",
            Exit::Config => "config-error",
            Exit::Audit => "audit-failed",
            Exit::Barrier => "barrier-failed",
            Exit::Continuation => "continuation-failed",
        }
    }
}

#[derive(Debug, Serialize)]
struct GridSummary {
    dim: usize,
    resolution: Vec<usize>,
    nodes: usize,
    spacing: f64,
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    t: f64,
    /// Sup-norm of the residual of the exported field at `t`.
    final_residual: f64,
    newton_iters: usize,
    accepted_steps: usize,
    rejected_steps: usize,
    lambda: f64,
    start_coefficient: f64,
    jacobian_checks: Vec<(f64, f64)>,
    min_u: f64,
    max_u: f64,
    monitor: Option<BoundReport>,
}

#[derive(Debug, Serialize)]
struct IdentitySummary {
    profile: String,
    levels: Vec<IdentityResiduals>,
    /// Successive ratios of `[r_eta, r_tau1, r_tau2, codazzi]`.
    ratios: Vec<[f64; 4]>,
}

#[derive(Debug, Serialize)]
struct Summary {
    version: &'static str,
    mode: Mode,
    status: &'static str,
    exit_code: i32,
    message: Option<String>,
    prescription: String,
    params: Vec<(&'static str, f64)>,
    grid: GridSummary,
    audit: Option<StructuralAudit>,
    barriers: Option<Barriers>,
    barrier_failure: Option<BarrierScanFailure>,
    solve: Option<SolveSummary>,
    identity: Option<IdentitySummary>,
    config: String,
}

pub struct Outcome {
    pub exit: Exit,
    pub message: Option<String>,
}

fn write_fields(path: &Path, grid: &SphereGrid, u: &ScalarField, residual: Option<&ScalarField>) -> io::Result<()> {
    let n = grid.dim();
    let geo = InducedGeometry::compute(u, grid).ok();
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    let coords = if n == 1 { "theta" } else { "colat,lon" };
    let lambdas: Vec<String> = (1..=n).map(|i| format!("lambda_{i}")).collect();
    writeln!(out, "node,{coords},u,tau,eta,{},residual", lambdas.join(","))?;
    let num = |x: f64| format!("{x:.16e}");
    for (node, p) in grid.points().iter().enumerate() {
        let mut row = vec![node.to_string()];
        match *p {
            SpherePoint::Circle { theta } => row.push(num(theta)),
            SpherePoint::Sphere { colat, lon } => {
                row.push(num(colat));
                row.push(num(lon));
            }
        }
        let uv = u.values()[node];
        row.push(num(uv));
        match &geo {
            Some(g) => {
                row.push(num(g.tau[node]));
                row.push(num(g.eta[node]));
                row.extend(g.shape_eigs[node].values().iter().map(|&l| num(l)));
            }
            None => {
                row.push("nan".into());
                row.push(num(uv.sinh()));
                row.extend((0..n).map(|_| "nan".to_string()));
            }
        }
        row.push(residual.map_or("nan".into(), |r| num(r.values()[node])));
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}

fn write_trace(path: &Path, trace: &[StepRecord]) -> io::Result<()> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "t,iters,residual,min_u,max_u,max_tau,max_curvature")?;
    for r in trace {
        writeln!(
            out,
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.iters, r.residual, r.min_u, r.max_u, r.max_tau, r.max_curvature
        )?;
    }
    out.flush()
}

fn audit_box(cfg: &RunConfig, dim: usize) -> AuditBox {
    let a = &cfg.audit;
    AuditBox::new(a.r_lo, a.r_hi, a.tau_max, a.n_r, a.n_tau, xi_lattice(dim, a.n_xi)).expect("validated audit box")
}

fn audit_exit(audit: &StructuralAudit) -> Exit {
    if !audit.structural_ok() {
        Exit::Audit
    } else if !audit.pass_a {
        Exit::Barrier
    } else {
        Exit::Success
    }
}

/// Executes the configured mode, writing artifacts under `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome, ConfigError> {
    let res = cfg.grid.resolution()?;
    let grid = SphereGrid::new(res).map_err(|e| ConfigError::Invalid { key: "grid".into(), msg: e.to_string() })?;
    let psi = cfg.prescription.build()?;
    fs::create_dir_all(out).map_err(|source| ConfigError::Read { path: out.to_path_buf(), source })?;
    let mut summary = Summary {
        version: env!("CARGO_PKG_VERSION"),
        mode: cfg.mode,
        status: "",
        exit_code: 0,
        message: None,
        prescription: psi.name().to_string(),
        params: psi.params(),
        grid: GridSummary {
            dim: grid.dim(),
            resolution: cfg.grid.resolution.clone(),
            nodes: grid.len(),
            spacing: grid.spacing(),
        },
        audit: None,
        barriers: None,
        barrier_failure: None,
        solve: None,
        identity: None,
        config: cfg.to_toml(),
    };
    let io_err = |e: io::Error| ConfigError::Read { path: out.to_path_buf(), source: e };
    let exit = match cfg.mode {
        Mode::AuditOnly => {
            let audit = audit_structural(psi.as_ref(), &audit_box(cfg, grid.dim()), cfg.solver.scan);
            let exit = audit_exit(&audit);
            summary.barriers = audit.barriers;
            summary.barrier_failure = audit.barrier_failure.clone();
            summary.audit = Some(audit);
            exit
        }
        Mode::Solve => {
            let audit = audit_structural(psi.as_ref(), &audit_box(cfg, grid.dim()), cfg.solver.scan);
            let exit = audit_exit(&audit);
            summary.audit = Some(audit);
            if exit != Exit::Success {
                exit
            } else {
                solve(cfg, &grid, psi.as_ref(), out, &mut summary).map_err(io_err)?
            }
        }
        Mode::IdentityCheck => identity(cfg, &grid, &mut summary),
    };
    summary.status = exit.status();
    summary.exit_code = exit as i32;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(out.join("summary.json"), json + "\n").map_err(io_err)?;
    Ok(Outcome { exit, message: summary.message })
}

fn solve(
    cfg: &RunConfig,
    grid: &SphereGrid,
    psi: &dyn Prescription,
    out: &Path,
    summary: &mut Summary,
) -> io::Result<Exit> {
    let residual_at = |u: &ScalarField, t: f64| {
        HomotopyPrescription::new(psi, cfg.solver.p, t)
            .and_then(|h| DiscreteProblem::new(grid, h, cfg.k))
            .and_then(|p| p.residual(u))
            .ok()
    };
    let sup = |r: &Option<ScalarField>| r.as_ref().map_or(f64::NAN, |r| r.sup_norm());
    match run_homotopy(psi, grid, &cfg.solver) {
        Ok(st) => {
            let r = residual_at(&st.u, st.t);
            write_fields(&out.join("fields.csv"), grid, &st.u, r.as_ref())?;
            write_trace(&out.join("trace.csv"), &st.step_history)?;
            summary.barriers = Some(st.barriers);
            summary.solve = Some(SolveSummary {
                t: st.t,
                final_residual: sup(&r),
                newton_iters: st.newton_iters,
                accepted_steps: st.step_history.len() - 1,
                rejected_steps: st.rejected_steps,
                lambda: st.lambda,
                start_coefficient: st.start_coefficient,
                jacobian_checks: st.jacobian_checks,
                min_u: st.u.min(),
                max_u: st.u.max(),
                monitor: Some(st.monitor),
            });
            Ok(Exit::Success)
        }
        Err(SolveError::Barrier(f)) => {
            summary.message = Some(f.to_string());
            summary.barrier_failure = Some(f);
            Ok(Exit::Barrier)
        }
        Err(SolveError::Continuation(f)) => {
            summary.message = Some(format!("continuation stopped ({:?}) at t = {}", f.reason, f.t));
            let r = residual_at(&f.last_u, f.t);
            write_fields(&out.join("fields.csv"), grid, &f.last_u, r.as_ref())?;
            write_trace(&out.join("trace.csv"), &f.trace)?;
            summary.barriers = Some(f.barriers);
            summary.solve = Some(SolveSummary {
                t: f.t,
                final_residual: sup(&r),
                newton_iters: 0,
                accepted_steps: f.trace.len().saturating_sub(1),
                rejected_steps: 0,
                lambda: f64::NAN,
                start_coefficient: f64::NAN,
                jacobian_checks: vec![],
                min_u: f.last_u.min(),
                max_u: f.last_u.max(),
                monitor: f.monitor,
            });
            Ok(Exit::Continuation)
        }
        Err(SolveError::Newton(f)) => {
            summary.message = Some(format!("Newton failed at the start ({:?})", f.reason));
            write_fields(&out.join("fields.csv"), grid, &f.best, None)?;
            Ok(Exit::Continuation)
        }
        Err(e) => {
            summary.message = Some(e.to_string());
            Ok(Exit::Continuation)
        }
    }
}

fn identity(cfg: &RunConfig, grid: &SphereGrid, summary: &mut Summary) -> Exit {
    let (b, a) = (cfg.identity.base, cfg.identity.amplitude);
    let (profile, f): (String, Box<dyn Fn(&SpherePoint) -> f64>) = if grid.dim() == 1 {
        (format!("{b} + {a} cos θ"), Box::new(move |p| b + a * p.coords()[0].cos()))
    } else {
        (
            format!("{b} + {a} (3 cos²φ − 1)/2"),
            Box::new(move |p| {
                let z = p.embedding()[2];
                b + a * (1.5 * z * z - 0.5)
            }),
        )
    };
    let grids = [grid.clone(), grid.refine(), grid.refine().refine()];
    let mut levels = Vec::new();
    for g in &grids {
        match identity_residuals(&ScalarField::from_fn(g, &f), g) {
            Ok(r) => levels.push(r),
            Err(e) => {
                summary.message = Some(format!("identity profile rejected: {e}"));
                return Exit::Config;
            }
        }
    }
    let ratios = levels
        .windows(2)
        .map(|w| {
            [
                w[0].r_eta / w[1].r_eta,
                w[0].r_tau1 / w[1].r_tau1,
                w[0].r_tau2 / w[1].r_tau2,
                w[0].codazzi / w[1].codazzi,
            ]
        })
        .collect();
    summary.identity = Some(IdentitySummary { profile, levels, ratios });
    Exit::Success
}
