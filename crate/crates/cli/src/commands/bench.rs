use super::rows::{format_runtime, write_csv, RunRow};
use crate::config::{BenchConfig, PcRow, QvmRow, TrrRow};
use anyhow::Context;
use clap::Args;
use minmax_core::aipp_s::{solve_primal_dual, Engine, SchemeConfig};
use minmax_core::problems::{pc, qvm, trr, Instance};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::sync::Mutex;
use std::time::Duration;

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Clone)]
enum CellSpec {
    Qvm(QvmRow),
    Trr(TrrRow, PathBuf),
    Pc(PcRow),
}

#[derive(Clone)]
struct Cell {
    family: &'static str,
    row_idx: usize,
    method: String,
    spec: CellSpec,
    time_limit: f64,
}

struct CellResult {
    row: RunRow,
    log: serde_json::Value,
}

pub fn run(args: BenchArgs) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("failed to read {}", args.config.display()))?;
    let config: BenchConfig = toml::from_str(&text).context("bad bench config")?;
    anyhow::ensure!(
        !config.bench.methods.is_empty(),
        "bench config lists no methods"
    );
    for m in &config.bench.methods {
        anyhow::ensure!(
            m == "aipp_s" || m == "raipp_s",
            "unknown bench method '{m}' (expected aipp_s or raipp_s)"
        );
    }
    std::fs::create_dir_all(&args.out_dir)?;

    // Synthetic TRR data is materialized as LIBSVM text and re-ingested
    // through the parser, exercising the same path as user-supplied files.
    let mut cells = Vec::new();
    for (i, row) in config.qvm.iter().enumerate() {
        for m in &config.bench.methods {
            cells.push(Cell {
                family: "qvm",
                row_idx: i,
                method: m.clone(),
                spec: CellSpec::Qvm(row.clone()),
                time_limit: config.bench.time_limit,
            });
        }
    }
    for (i, row) in config.trr.iter().enumerate() {
        let path = args.out_dir.join(format!(
            "trr_{}x{}_seed{}.libsvm",
            row.points, row.features, row.seed
        ));
        let inst = trr::trr_generate_synthetic(row.points, row.features, row.density, row.seed)?;
        std::fs::write(&path, trr::emit_libsvm(&inst.features, &inst.labels))?;
        for m in &config.bench.methods {
            cells.push(Cell {
                family: "trr",
                row_idx: i,
                method: m.clone(),
                spec: CellSpec::Trr(row.clone(), path.clone()),
                time_limit: config.bench.time_limit,
            });
        }
    }
    for (i, row) in config.pc.iter().enumerate() {
        for m in &config.bench.methods {
            cells.push(Cell {
                family: "pc",
                row_idx: i,
                method: m.clone(),
                spec: CellSpec::Pc(row.clone()),
                time_limit: config.bench.time_limit,
            });
        }
    }
    anyhow::ensure!(!cells.is_empty(), "bench config lists no problem rows");

    let threads: usize = std::env::var("MINMAX_BENCH_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1);

    let results: Mutex<Vec<Option<CellResult>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(cells.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= cells.len() {
                    break;
                }
                let result = run_cell(&cells[idx]);
                results.lock().unwrap()[idx] = Some(result);
            });
        }
    });
    let results: Vec<CellResult> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("worker filled every cell"))
        .collect();

    // JSON-lines log of every run.
    let mut log = std::fs::File::create(args.out_dir.join("runs.jsonl"))?;
    for r in &results {
        writeln!(log, "{}", r.log)?;
    }

    // Per-family tables.
    let methods = &config.bench.methods;
    for (family, n_rows, params) in [
        ("qvm", config.qvm.len(), qvm_param_cols(&config)),
        ("trr", config.trr.len(), trr_param_cols(&config)),
        ("pc", config.pc.len(), pc_param_cols(&config)),
    ] {
        if n_rows == 0 {
            continue;
        }
        let fam_rows: Vec<&CellResult> = results
            .iter()
            .zip(&cells)
            .filter(|(_, c)| c.family == family)
            .map(|(r, _)| r)
            .collect();
        let fam_cells: Vec<&Cell> = cells.iter().filter(|c| c.family == family).collect();
        write_family_outputs(
            &args.out_dir,
            family,
            n_rows,
            methods,
            &params,
            &fam_cells,
            &fam_rows,
        )?;
    }

    println!("bench complete: {} cells -> {}", cells.len(), args.out_dir.display());
    Ok(0)
}

fn qvm_param_cols(config: &BenchConfig) -> (Vec<&'static str>, Vec<Vec<String>>) {
    (
        vec!["M", "m"],
        config
            .qvm
            .iter()
            .map(|r| vec![format!("{:.0e}", r.big_m), format!("{:.0e}", r.m)])
            .collect(),
    )
}

fn trr_param_cols(config: &BenchConfig) -> (Vec<&'static str>, Vec<Vec<String>>) {
    (
        vec!["data"],
        config
            .trr
            .iter()
            .map(|r| vec![format!("synthetic-{}x{}-s{}", r.points, r.features, r.seed)])
            .collect(),
    )
}

fn pc_param_cols(config: &BenchConfig) -> (Vec<&'static str>, Vec<Vec<String>>) {
    (
        vec!["N", "K"],
        config
            .pc
            .iter()
            .map(|r| vec![r.n.to_string(), r.k.to_string()])
            .collect(),
    )
}

fn engine_for(method: &str) -> Engine {
    if method == "raipp_s" {
        Engine::Raipp
    } else {
        Engine::Aipp
    }
}

fn run_cell(cell: &Cell) -> CellResult {
    let built = match &cell.spec {
        CellSpec::Qvm(r) => {
            qvm::qvm_generate(r.n, r.l, r.k, r.big_m, r.m, r.density, r.seed)
                .map(|i| (Arc::new(Instance::Qvm(i)), r.rho_x, r.rho_y, r.seed))
        }
        CellSpec::Trr(r, path) => trr::trr_load(path)
            .map(|i| (Arc::new(Instance::Trr(i)), r.rho_x, r.rho_y, r.seed)),
        CellSpec::Pc(r) => {
            pc::pc_generate(r.n, r.k, r.seed).map(|i| (Arc::new(Instance::Pc(i)), r.rho_x, r.rho_y, r.seed))
        }
    };
    let (instance, rho_x, rho_y, seed) = match built {
        Ok(v) => v,
        Err(e) => return error_result(cell, &format!("generation failed: {e}")),
    };
    let problem = instance.problem();
    let x0 = instance.default_x0();
    let y0 = vec![0.0; problem.n_y];
    let scheme = SchemeConfig {
        engine: engine_for(&cell.method),
        relative: true,
        time_limit: Some(Duration::from_secs_f64(cell.time_limit)),
        ..Default::default()
    };
    match solve_primal_dual(&problem, rho_x, rho_y, &x0, &y0, &scheme) {
        Ok(out) => {
            let row = RunRow {
                family: cell.family.to_string(),
                dims: instance.dims_label(),
                method: cell.method.clone(),
                iterations: out.report.outer_iterations,
                acg_iterations: out.report.acg_iterations,
                runtime: format_runtime(
                    out.report.wall_time_s,
                    out.report.termination,
                    cell.time_limit,
                ),
                p_hat_xi: out.report.terminal_value,
                norm_u_rel: out.certificate.norm_u / out.scale,
                norm_v: out.certificate.norm_v,
                termination: out.report.termination.to_string(),
                ..Default::default()
            };
            let log = serde_json::json!({
                "family": cell.family,
                "dims": instance.dims_label(),
                "method": cell.method,
                "seed": seed,
                "rho_x": rho_x,
                "rho_y": rho_y,
                "xi": out.xi,
                "scale": out.scale,
                "report": out.report,
            });
            CellResult { row, log }
        }
        Err(e) => error_result(cell, &format!("solver failed: {e}")),
    }
}

fn error_result(cell: &Cell, msg: &str) -> CellResult {
    let row = RunRow {
        family: cell.family.to_string(),
        method: cell.method.clone(),
        termination: format!("Error({msg})"),
        runtime: String::from(""),
        ..Default::default()
    };
    let log = serde_json::json!({
        "family": cell.family,
        "method": cell.method,
        "error": msg,
    });
    CellResult { row, log }
}

fn runtime_seconds(rt: &str) -> f64 {
    rt.trim_end_matches('*').parse().unwrap_or(f64::INFINITY)
}

#[allow(clippy::too_many_arguments)]
fn write_family_outputs(
    out_dir: &Path,
    family: &str,
    n_rows: usize,
    methods: &[String],
    params: &(Vec<&'static str>, Vec<Vec<String>>),
    fam_cells: &[&Cell],
    fam_results: &[&CellResult],
) -> anyhow::Result<()> {
    let find = |row_idx: usize, method: &str| -> Option<&CellResult> {
        fam_cells
            .iter()
            .position(|c| c.row_idx == row_idx && c.method == method)
            .map(|i| fam_results[i])
    };

    // CSV with every run row.
    let mut csv_rows = Vec::new();
    for row_idx in 0..n_rows {
        for m in methods {
            if let Some(r) = find(row_idx, m) {
                csv_rows.push(r.row.clone());
            }
        }
    }
    write_csv(&out_dir.join(format!("{family}.csv")), &csv_rows)?;

    // Markdown table, bolding the best iteration count and runtime per row.
    let (param_names, param_vals) = params;
    let mut md = String::new();
    md.push_str(&format!("# {family} results\n\n"));
    md.push('|');
    for p in param_names {
        md.push_str(&format!(" {p} |"));
    }
    md.push_str(" p_hat_xi |");
    for m in methods {
        md.push_str(&format!(" iterations ({m}) |"));
    }
    for m in methods {
        md.push_str(&format!(" runtime ({m}) |"));
    }
    md.push('\n');
    md.push('|');
    for _ in 0..param_names.len() + 1 + 2 * methods.len() {
        md.push_str("---|");
    }
    md.push('\n');

    for row_idx in 0..n_rows {
        let cells: Vec<Option<&CellResult>> =
            methods.iter().map(|m| find(row_idx, m)).collect();
        let best_iters = cells
            .iter()
            .flatten()
            .filter(|r| r.row.termination == "Converged")
            .map(|r| r.row.acg_iterations)
            .min();
        let best_runtime = cells
            .iter()
            .flatten()
            .filter(|r| r.row.termination == "Converged")
            .map(|r| runtime_seconds(&r.row.runtime))
            .fold(f64::INFINITY, f64::min);
        let p_best = cells
            .iter()
            .flatten()
            .filter(|r| r.row.termination == "Converged")
            .map(|r| r.row.p_hat_xi)
            .fold(f64::INFINITY, f64::min);

        md.push('|');
        for v in &param_vals[row_idx] {
            md.push_str(&format!(" {v} |"));
        }
        if p_best.is_finite() {
            md.push_str(&format!(" {p_best:.2e} |"));
        } else {
            md.push_str(" - |");
        }
        for c in &cells {
            match c {
                Some(r) if r.row.termination == "Converged" => {
                    let it = r.row.acg_iterations;
                    if Some(it) == best_iters && methods.len() > 1 {
                        md.push_str(&format!(" **{it}** |"));
                    } else {
                        md.push_str(&format!(" {it} |"));
                    }
                }
                _ => md.push_str(" - |"),
            }
        }
        for c in &cells {
            match c {
                Some(r) => {
                    let rt = &r.row.runtime;
                    if r.row.termination == "Converged"
                        && (runtime_seconds(rt) - best_runtime).abs() < 1e-12
                        && methods.len() > 1
                    {
                        md.push_str(&format!(" **{rt}** |"));
                    } else if rt.is_empty() {
                        md.push_str(" - |");
                    } else {
                        md.push_str(&format!(" {rt} |"));
                    }
                }
                None => md.push_str(" - |"),
            }
        }
        md.push('\n');
    }
    std::fs::write(out_dir.join(format!("{family}.md")), md)?;
    Ok(())
}
