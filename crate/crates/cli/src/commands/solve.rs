use super::rows::{append_csv, format_runtime, write_cert, CertFile, RunRow};
use anyhow::Context;
use clap::{Args, ValueEnum};
use minmax_core::aipp_s::{solve_directional, solve_primal_dual, Engine, SchemeConfig};
use minmax_core::problems::container::read_instance;
use minmax_core::problems::{trr, Instance};
use minmax_core::qp_aipp::{qp_aipp_s_solve, QpConfig};
use minmax_core::verify::CertContext;
use minmax_core::Termination;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    /// Fixed-step smoothing scheme.
    AippS,
    /// Adaptive-step smoothing scheme.
    RaippS,
    /// Quadratic-penalty smoothing scheme for constrained instances.
    QpAippS,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::AippS => "aipp_s",
            Method::RaippS => "raipp_s",
            Method::QpAippS => "qp_aipp_s",
        }
    }
}

#[derive(Args)]
pub struct SolveArgs {
    /// Instance container (.mmx) or a LIBSVM text file (treated as TRR).
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long = "rho-x", default_value_t = 1e-2)]
    pub rho_x: f64,
    #[arg(long = "rho-y", default_value_t = 1e-1)]
    pub rho_y: f64,
    /// Feasibility tolerance (required for qp-aipp-s).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Directional mode: target δ; overrides rho-x/rho-y via (δ/2, τ(δ)).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Wall-clock limit in seconds.
    #[arg(long = "time-limit", default_value_t = 4000.0)]
    pub time_limit: f64,
    /// Use absolute residual tolerances instead of scaling by ‖∇p_ξ(x₀)‖+1.
    #[arg(long)]
    pub absolute: bool,
    #[arg(long = "out-csv")]
    pub out_csv: Option<PathBuf>,
    #[arg(long = "cert-out")]
    pub cert_out: Option<PathBuf>,
}

pub fn load_instance(path: &PathBuf) -> anyhow::Result<(Arc<Instance>, Option<minmax_core::problems::container::DenseConstraint>)> {
    let is_text = path
        .extension()
        .map(|e| e == "libsvm" || e == "txt")
        .unwrap_or(false);
    if is_text {
        let inst = trr::trr_load(path)
            .with_context(|| format!("failed to parse {}", path.display()))?;
        Ok((Arc::new(Instance::Trr(inst)), None))
    } else {
        let stored = read_instance(path)
            .with_context(|| format!("failed to load {}", path.display()))?;
        Ok((Arc::new(stored.instance), stored.constraint))
    }
}

pub fn run(args: SolveArgs) -> anyhow::Result<u8> {
    anyhow::ensure!(args.rho_x > 0.0 && args.rho_y > 0.0, "tolerances must be positive");
    let (instance, constraint) = load_instance(&args.instance)?;
    let problem = instance.problem();
    let x0 = instance.default_x0();
    let y0 = vec![0.0; problem.n_y];
    let limit = Duration::from_secs_f64(args.time_limit);

    let mut row = RunRow {
        family: instance.family_tag().to_string(),
        dims: instance.dims_label(),
        method: args.method.label().to_string(),
        ..Default::default()
    };

    let cert_file: CertFile;
    let termination: Termination;
    match args.method {
        Method::AippS | Method::RaippS => {
            let engine = if matches!(args.method, Method::AippS) {
                Engine::Aipp
            } else {
                Engine::Raipp
            };
            let config = SchemeConfig {
                engine,
                relative: !args.absolute,
                time_limit: Some(limit),
                ..Default::default()
            };
            if let Some(delta) = args.delta {
                let (_x, dcert, report) =
                    solve_directional(&problem, delta, &x0, &y0, &config)?;
                termination = report.termination;
                row.iterations = report.outer_iterations;
                row.acg_iterations = report.acg_iterations;
                row.runtime = format_runtime(report.wall_time_s, termination, args.time_limit);
                row.p_hat_xi = report.terminal_value;
                row.norm_u_rel = dcert.primal_dual.norm_u;
                row.norm_v = dcert.primal_dual.norm_v;
                row.termination = termination.to_string();
                row.delta = Some(delta);
                row.tau = Some(dcert.tau);
                row.dd_lower_bound = Some(dcert.dd_lower_bound);
                row.distance_bound = Some(dcert.distance_bound);
                let consts = instance.constants();
                cert_file = CertFile {
                    family: row.family.clone(),
                    method: row.method.clone(),
                    context: CertContext {
                        xi: consts.d_y / dcert.tau,
                        rho_x: delta / 2.0,
                        rho_y: dcert.tau,
                        eta: None,
                        scale: 1.0,
                        relative: false,
                        penalty_c_final: None,
                    },
                    certificate: dcert.primal_dual.clone(),
                    directional: Some(dcert),
                };
            } else {
                let out = solve_primal_dual(&problem, args.rho_x, args.rho_y, &x0, &y0, &config)?;
                termination = out.report.termination;
                row.iterations = out.report.outer_iterations;
                row.acg_iterations = out.report.acg_iterations;
                row.runtime =
                    format_runtime(out.report.wall_time_s, termination, args.time_limit);
                row.p_hat_xi = out.report.terminal_value;
                row.norm_u_rel = out.certificate.norm_u / out.scale;
                row.norm_v = out.certificate.norm_v;
                row.termination = termination.to_string();
                cert_file = CertFile {
                    family: row.family.clone(),
                    method: row.method.clone(),
                    context: CertContext {
                        xi: out.xi,
                        rho_x: args.rho_x,
                        rho_y: args.rho_y,
                        eta: None,
                        scale: out.scale,
                        relative: !args.absolute,
                        penalty_c_final: None,
                    },
                    certificate: out.certificate,
                    directional: None,
                };
            }
        }
        Method::QpAippS => {
            let eta = args
                .eta
                .context("qp-aipp-s requires --eta (feasibility tolerance)")?;
            let dense = constraint
                .context("instance has no constraint block; regenerate with --constraints")?;
            let lc = dense.to_linear()?;
            let config = QpConfig {
                time_limit: Some(limit),
                ..Default::default()
            };
            let out = qp_aipp_s_solve(
                &problem, &lc, args.rho_x, args.rho_y, eta, &config, &x0, &y0,
            )?;
            termination = out.report.termination;
            row.iterations = out.report.outer_iterations;
            row.acg_iterations = out.report.acg_iterations;
            row.runtime = format_runtime(out.report.wall_time_s, termination, args.time_limit);
            row.p_hat_xi = out.report.terminal_value;
            row.norm_u_rel = out.certificate.norm_u;
            row.norm_v = out.certificate.norm_v;
            row.termination = termination.to_string();
            row.eta = Some(eta);
            row.feas = out.certificate.feas_violation;
            row.c_final = out.report.penalty_c_final;
            cert_file = CertFile {
                family: row.family.clone(),
                method: row.method.clone(),
                context: CertContext {
                    xi: out.xi,
                    rho_x: args.rho_x,
                    rho_y: args.rho_y,
                    eta: Some(eta),
                    scale: 1.0,
                    relative: false,
                    penalty_c_final: out.report.penalty_c_final,
                },
                certificate: out.certificate,
                directional: None,
            };
        }
    }

    if let Some(path) = &args.out_csv {
        append_csv(path, &row)?;
    }
    if let Some(path) = &args.cert_out {
        write_cert(path, &cert_file)?;
    }
    println!(
        "{} {} {} iterations={} acg={} runtime={} norm_u_rel={:.3e} norm_v={:.3e} {}",
        row.family,
        row.dims,
        row.method,
        row.iterations,
        row.acg_iterations,
        row.runtime,
        row.norm_u_rel,
        row.norm_v,
        row.termination
    );

    Ok(if termination == Termination::Converged {
        0
    } else {
        3
    })
}
