//! Command-line driver: model validation, well data, single-h runs per
//! route, cross-route comparison, full h-sweeps, and matrix export.

use clap::{Args, Parser, Subcommand};
use magspec::config::{parse_config, parse_h_list, RouteSel, RunConfig};
use magspec::direct2d::{assemble_l, spectral_window, DirectOpts};
use magspec::effective::{assemble_peff, dump_meff, eff_spectrum, EffOpts, EffectiveSymbol};
use magspec::quadratic::ComplexQuadratic;
use magspec::sweep::{prepare, quadratic_cell, run_sweep};
use magspec::{Error, Result};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "magspec",
    about = "Low-lying complex spectra of planar magnetic Schrödinger operators: \
             direct 2D, effective 1D, and quadratic-model routes"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (sections [model], [sweep], [numerics], [output]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in model key (overrides the config).
    #[arg(long, global = true)]
    model: Option<String>,
    /// Comma-separated h list (overrides the config).
    #[arg(long, global = true)]
    h: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated routes: direct, effective, quadratic.
    #[arg(long, global = true)]
    routes: Option<String>,
    /// RNG seed (Arnoldi start vector, validation sampling).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Field-model checks: positivity, derivative agreement, symbol bounds.
    Validate,
    /// Locate the well and print its data (q0, mu0, c0, Hessians).
    Well,
    /// Direct 2D route at the largest configured h.
    Direct,
    /// Effective 1D route at the largest configured h.
    Effective,
    /// Quadratic-model eigenvalue ladder at the largest configured h.
    Quadratic,
    /// All selected routes at one h, with the matching report.
    Compare,
    /// Full h-sweep with order and fine-structure fits.
    Sweep,
    /// Export the assembled matrices (direct: triplet text; effective: MEFF).
    ExportMatrix,
}

fn build_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &common.model {
        cfg.model = m.clone();
        cfg.b_expr = None;
        cfg.v_expr = None;
    }
    if let Some(h) = &common.h {
        cfg.h_list = parse_h_list(h)?;
    }
    if let Some(routes) = &common.routes {
        cfg.routes = routes
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<Vec<RouteSel>>>()?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = common.threads {
        cfg.threads = threads;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = Some(out.display().to_string());
    }
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = build_config(&cli.common)?;
    match cli.command {
        Command::Validate => {
            cfg.validate(false)?;
            let model = cfg.build_model()?;
            let report = model.validate(cfg.search_half_width, 41, cfg.seed)?;
            println!("model: {}", model.name);
            println!("min B on box        : {:.6}  (b0 = {})", report.min_b, model.b0);
            println!("sup |derivatives|   : {:.6}", report.sup_derivs);
            println!("sup |alpha| (heuristic growth check): {:.6}", report.sup_alpha);
            println!("analytic-vs-FD mismatch: {:.3e}", report.fd_mismatch);
            println!("ok");
        }
        Command::Well => {
            cfg.validate(false)?;
            let model = cfg.build_model()?;
            for uv in cfg.charts(&model) {
                let setup = prepare(&cfg, uv)?;
                let w = &setup.well;
                println!("chart (u, v) = ({}, {})", uv.0, uv.1);
                println!("  q0    = ({:.12}, {:.12})", w.q0[0], w.q0[1]);
                println!("  X0    = (xi {:.12}, x {:.12})", w.x0.xi, w.x0.x);
                println!("  mu0   = {:.12} + {:.12}i", w.mu0.re, w.mu0.im);
                println!("  c0    = {:.12} + {:.12}i", w.c0.re, w.c0.im);
                println!("  |grad p| = {:.3e}, min F = {:.12}", w.grad_p_norm, w.min_f);
            }
        }
        Command::Direct => {
            cfg.validate(false)?;
            let setup = prepare(&cfg, first_chart(&cfg)?)?;
            let h = cfg.h_list[0];
            let cell = magspec::sweep::direct_cell(&cfg, &setup, 0)?;
            println!("direct route, h = {h}, grids {:?}", cell.grids);
            print_spectrum(&cell.eigenvalues, "lambda");
            if let Some(d) = cell.disc_estimate {
                println!("discretization estimate: {d:.3e}");
            }
            println!(
                "numerical-range guard: worst slack {:.3e} ({})",
                cell.guard_worst,
                if cell.guard_ok { "ok" } else { "violated" }
            );
        }
        Command::Effective => {
            cfg.validate(false)?;
            let setup = prepare(&cfg, first_chart(&cfg)?)?;
            let h = cfg.h_list[0];
            let cell = magspec::sweep::effective_cell(&cfg, &setup, h)?;
            println!(
                "effective route, h = {h}, M = {}, box = {:.3}",
                cell.m, cell.box_l
            );
            print_spectrum(&cell.eigenvalues, "nu");
            println!("gap/h = {:.4}", cell.gap_over_h);
            if let Some(c0) = cell.c0_empirical {
                println!("empirical C0 = {c0:.4}");
            }
        }
        Command::Quadratic => {
            cfg.validate(false)?;
            let setup = prepare(&cfg, first_chart(&cfg)?)?;
            let h = cfg.h_list[0];
            let nus = quadratic_cell(&setup, h, cfg.big_c)?;
            let q = ComplexQuadratic::from_half_hessian_xi_x(setup.well.hess_p_x)?;
            let (s, alpha) = q.normal_form()?;
            println!("quadratic model, h = {h}");
            println!(
                "normal form: scale = {:.8} + {:.8}i, alpha = {:.8}",
                s.re, s.im, alpha
            );
            print_spectrum(&nus, "nu");
        }
        Command::Compare => {
            cfg.validate(false)?;
            let setup = prepare(&cfg, first_chart(&cfg)?)?;
            let h = cfg.h_list[0];
            println!("model {}, h = {h}", setup.model.name);
            let mut direct = None;
            if cfg.routes.contains(&RouteSel::Direct) {
                let cell = magspec::sweep::direct_cell(&cfg, &setup, 0)?;
                print_spectrum(&cell.eigenvalues, "lambda (direct)");
                direct = Some(cell);
            }
            if cfg.routes.contains(&RouteSel::Effective) {
                let cell = magspec::sweep::effective_cell(&cfg, &setup, h)?;
                let scaled: Vec<magspec::C64> = cell.eigenvalues.iter().map(|nu| nu * h).collect();
                print_spectrum(&scaled, "h*nu (effective)");
                if let Some(d) = &direct {
                    let m = magspec::eigensolve::match_spectra(&d.eigenvalues, &scaled);
                    println!(
                        "matching: max |lambda - h nu| = {:.6e}, mean = {:.6e}{}",
                        m.max_err,
                        m.mean_err,
                        if m.ambiguous { " (ambiguous)" } else { "" }
                    );
                }
            }
            if cfg.routes.contains(&RouteSel::Quadratic) {
                let nus = quadratic_cell(&setup, h, cfg.big_c)?;
                let scaled: Vec<magspec::C64> = nus.iter().map(|nu| nu * h).collect();
                print_spectrum(&scaled, "h*nu (quadratic)");
            }
        }
        Command::Sweep => {
            cfg.validate(true)?;
            let model = cfg.build_model()?;
            for uv in cfg.charts(&model) {
                let report = run_sweep(&cfg, uv)?;
                println!(
                    "sweep: model {}, chart (u, v) = ({}, {}), {} h values{}",
                    report.model,
                    uv.0,
                    uv.1,
                    report.cells.len(),
                    if report.incomplete { " [incomplete]" } else { "" }
                );
                if let Some(f) = &report.order_direct_vs_effective {
                    println!(
                        "  order fit |lambda - h nu|: slope {:.3} (r² {:.4})",
                        f.slope, f.r2
                    );
                }
                if let Some(f) = &report.fine_direct {
                    if let Some(c0) = f.c0 {
                        println!(
                            "  fine structure (direct): c0 = {:.6} + {:.6}i",
                            c0.re, c0.im
                        );
                    }
                    println!(
                        "  fine structure (direct): c1 = {:.6} + {:.6}i",
                        f.c1.re, f.c1.im
                    );
                }
                println!("  gap/h min = {:.4}", report.gap_over_h_min);
                if let Some(dir) = &cfg.out_dir {
                    report.write_outputs(std::path::Path::new(dir), cfg.write_csv, cfg.write_json)?;
                    println!("  outputs in {dir}");
                }
            }
        }
        Command::ExportMatrix => {
            cfg.validate(false)?;
            let setup = prepare(&cfg, first_chart(&cfg)?)?;
            let h = cfg.h_list[0];
            let dir = PathBuf::from(cfg.out_dir.clone().unwrap_or_else(|| ".".into()));
            std::fs::create_dir_all(&dir)?;
            if cfg.routes.contains(&RouteSel::Direct) {
                let n = cfg.n_for(0);
                let (_, csr) = assemble_l(
                    &setup.model,
                    &setup.chart,
                    Some(&setup.well),
                    h,
                    cfg.box_l,
                    n,
                    DirectOpts {
                        boundary_margin: cfg.boundary_margin,
                        strict_resolution: false,
                    },
                )?;
                let path = dir.join("direct_matrix.txt");
                csr.export_triplets(std::fs::File::create(&path)?)?;
                println!("wrote {} ({} nnz)", path.display(), csr.nnz());
                let (shift, radius, _) =
                    spectral_window(&setup.well, h, cfg.big_c, cfg.big_c_prime);
                println!("window: shift = {shift}, radius = {radius:.6e}");
            }
            if cfg.routes.contains(&RouteSel::Effective) {
                let sym = EffectiveSymbol::build(
                    setup.chart.clone(),
                    &setup.well,
                    h,
                    EffOpts {
                        big_c: cfg.big_c,
                        n_fiber: cfg.n_fiber,
                        ..Default::default()
                    },
                )?;
                let op = assemble_peff(&sym, cfg.m_grid, sym.suggested_box())?;
                let path = dir.join("peff_matrix.meff");
                dump_meff(&op, std::fs::File::create(&path)?)?;
                println!("wrote {} (M = {})", path.display(), op.m);
                let spec = eff_spectrum(&op, &setup.well, cfg.big_c)?;
                println!("{} eigenvalues in the disc", spec.result.eigenvalues.len());
            }
        }
    }
    Ok(())
}

fn first_chart(cfg: &RunConfig) -> Result<(f64, f64)> {
    let model = cfg.build_model()?;
    Ok(cfg.charts(&model)[0])
}

fn print_spectrum(eigs: &[magspec::C64], label: &str) {
    for (i, l) in eigs.iter().enumerate() {
        println!("  {label}[{}] = {:.12e} {:+.12e}i", i + 1, l.re, l.im);
    }
}
