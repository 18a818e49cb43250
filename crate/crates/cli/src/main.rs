use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use wsld::bench::{self, Check, ConvergenceReport, ProblemConfig, ProblemKind};
use wsld::lubich::{lubich_coeffs, lubich_coeffs_oracle};
use wsld::solver::{cn_solve, solve_steady, Grid1D, SteadyBoundary};
use wsld::spectral;
use wsld::wsld::{assemble, parse_shift_list, Side, WsldScheme};
use wsld::WsldError;

// stdout writes that end the process quietly when the reader hangs up
macro_rules! out {
    ($($arg:tt)*) => {
        if let Err(e) = write!(std::io::stdout(), $($arg)*) {
            if e.kind() == ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
        }
    };
}

macro_rules! outln {
    ($($arg:tt)*) => {
        out!("{}\n", format_args!($($arg)*))
    };
}

#[derive(Parser)]
#[command(
    name = "wsld",
    version,
    about = "Weighted and shifted Lubich difference operators"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lubich coefficients l_0..l_K as `k,l_k` CSV.
    Coeffs {
        #[arg(long)]
        nu: u32,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        count: usize,
        /// Use the root-factorization path instead of the recurrence.
        #[arg(long)]
        oracle: bool,
    },
    /// Operator matrix (or its combined coefficients with --phi) as CSV.
    Operator {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        nu: u32,
        /// 1, 2, 4 or 8 comma-separated shifts.
        #[arg(long, allow_hyphen_values = true, default_value = "1,-1,1,2,1,-1,1,3")]
        shifts: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "left")]
        side: Side,
        #[arg(long)]
        phi: bool,
    },
    /// Samples of W(-it) as `t,re,im,abs_w_minus_1` and the fitted slope on stderr.
    Symbol {
        #[arg(long)]
        nu: u32,
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        p: i32,
        /// `tmin,tmax` for log-spaced samples.
        #[arg(long, default_value = "1e-3,1e-1")]
        z_range: String,
        #[arg(long, default_value_t = 9)]
        points: usize,
    },
    /// Generating-function scan or eigenvalue probe of a scheme.
    Spectra {
        #[arg(long)]
        nu: u32,
        #[arg(long, allow_hyphen_values = true, default_value = "1,-1,1,2,1,-1,1,3")]
        shifts: String,
        #[arg(long)]
        scan: bool,
        #[arg(long)]
        eigen: bool,
        #[arg(long, default_value_t = 128)]
        n: usize,
        /// Alpha for --eigen; --scan uses 1.01..1.99.
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long, default_value_t = 2048)]
        x_points: usize,
        /// Write the (alpha, x, f) triples of the scan here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a problem described by a JSON config.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        nu: u32,
        #[arg(long, allow_hyphen_values = true, default_value = "1,-1,1,2,1,-1,1,3")]
        shifts: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Convergence study with observed orders.
    Convergence {
        #[arg(long)]
        suite: Suite,
        /// CSV file, or a directory when the suite produces several reports.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Table1,
    Table2,
    Consistency,
}

enum Failure {
    Numeric(String),
    Config(String),
}

impl From<WsldError> for Failure {
    fn from(e: WsldError) -> Self {
        match e {
            WsldError::Instability { .. }
            | WsldError::Singular(_)
            | WsldError::EigenNoConvergence
            | WsldError::ImaginaryResidue { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Coeffs {
            nu,
            alpha,
            count,
            oracle,
        } => coeffs(nu, alpha, count, oracle),
        Cmd::Operator {
            alpha,
            nu,
            shifts,
            n,
            side,
            phi,
        } => operator(alpha, nu, &shifts, n, side, phi),
        Cmd::Symbol {
            nu,
            alpha,
            p,
            z_range,
            points,
        } => symbol(nu, alpha, p, &z_range, points),
        Cmd::Spectra {
            nu,
            shifts,
            scan,
            eigen,
            n,
            alpha,
            x_points,
            out,
        } => spectra(nu, &shifts, scan, eigen, n, alpha, x_points, out.as_deref()),
        Cmd::Solve {
            config,
            nu,
            shifts,
            csv,
        } => solve(&config, nu, &shifts, csv.as_deref()),
        Cmd::Convergence { suite, out, json } => convergence(suite, out.as_deref(), json),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn coeffs(nu: u32, alpha: f64, count: usize, oracle: bool) -> Outcome {
    let series = if oracle {
        lubich_coeffs_oracle(nu, alpha, count)?
    } else {
        lubich_coeffs(nu, alpha, count)?
    };
    outln!("k,l_k");
    for (k, v) in series.values.iter().enumerate() {
        outln!("{k},{v:e}");
    }
    Ok(())
}

fn operator(alpha: f64, nu: u32, shifts: &str, n: usize, side: Side, phi: bool) -> Outcome {
    let scheme = WsldScheme::from_shifts(nu, alpha, &parse_shift_list(shifts)?)?;
    if !scheme.stability_verified() {
        eprintln!("note: stability of this shift set is unverified");
    }
    if phi {
        outln!("k,phi_k");
        for (k, v) in scheme.phi(n)?.iter().enumerate() {
            outln!("{k},{v:e}");
        }
        return Ok(());
    }
    let m = assemble(&scheme, n, side)?;
    for row in m.entries.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        outln!("{}", cells.join(","));
    }
    Ok(())
}

fn symbol(nu: u32, alpha: f64, p: i32, z_range: &str, points: usize) -> Outcome {
    let bad = || Failure::Config(format!("bad --z-range '{z_range}', expected tmin,tmax"));
    let (lo, hi) = z_range.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return Err(bad());
    }
    let ts: Vec<f64> = (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect();
    outln!("t,re,im,abs_w_minus_1");
    for &t in &ts {
        let z = Complex64::new(0.0, -t);
        let w = spectral::symbol_w(nu, alpha, p, z)?;
        let d = spectral::symbol_w_minus_one(nu, alpha, p, z)?;
        outln!("{t:e},{:e},{:e},{:e}", w.re, w.im, d.norm());
    }
    eprintln!("slope {:.4}", spectral::symbol_slope(nu, alpha, p, &ts)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn spectra(
    nu: u32,
    shifts: &str,
    scan: bool,
    eigen: bool,
    n: usize,
    alpha: f64,
    x_points: usize,
    out: Option<&Path>,
) -> Outcome {
    let shifts = parse_shift_list(shifts)?;
    if !scan && !eigen {
        return Err(Failure::Config("pass --scan and/or --eigen".into()));
    }
    let mut ok = true;
    if scan {
        let alphas = spectral::default_alpha_grid();
        let xs = spectral::default_x_grid(x_points);
        if let Some(path) = out {
            let mut csv = String::from("alpha,x,f\n");
            for &a in &alphas {
                let scheme = WsldScheme::from_shifts(nu, a, &shifts)?;
                for &x in &xs {
                    csv.push_str(&format!(
                        "{a},{x:e},{:e}\n",
                        spectral::gen_fn_scheme(&scheme, x)
                    ));
                }
            }
            fs::write(path, csv)?;
        }
        let r = spectral::definiteness_scan(nu, &shifts, &alphas, &xs)?;
        outln!("{}", serde_json::to_string(&r).expect("serializable"));
        ok &= r.pass;
    }
    if eigen {
        let scheme = WsldScheme::from_shifts(nu, alpha, &shifts)?;
        let probe = spectral::eigen_probe(&assemble(&scheme, n, Side::Left)?)?;
        outln!("{}", serde_json::to_string(&probe).expect("serializable"));
        ok &= probe.lambda_max_sym < 0.0;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Numeric("scheme is not negative definite".into()))
    }
}

fn solve(config: &Path, nu: u32, shifts: &str, csv: Option<&Path>) -> Outcome {
    let text = fs::read_to_string(config)?;
    let cfg = ProblemConfig::from_json(&text)?;
    let mut table = String::from("x,u\n");
    match cfg.problem {
        ProblemKind::Table1 => {
            let grid = Grid1D::new(cfg.x_l, cfg.x_r, cfg.n_x)?;
            let scheme = WsldScheme::single(5, cfg.alpha, 0)?;
            let f: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|&x| wsld::solver::power_derivative(8, cfg.alpha, x))
                .collect();
            let bc = SteadyBoundary {
                left: (cfg.alpha > 0.0).then_some(0.0),
                right: (cfg.alpha > 1.0).then_some(cfg.x_r.powi(8)),
            };
            let u = solve_steady(&scheme, &grid, &f, bc)?;
            let err = grid
                .nodes()
                .iter()
                .zip(&u)
                .map(|(x, v)| (x.powi(8) - v).abs())
                .fold(0.0, f64::max);
            for (x, v) in grid.nodes().iter().zip(&u) {
                table.push_str(&format!("{x:e},{v:e}\n"));
            }
            eprintln!("max error {}", bench::fmt_sci(err));
        }
        ProblemKind::Table2 | ProblemKind::Custom => {
            let problem = cfg.diffusion_problem()?;
            let scheme = WsldScheme::from_shifts(nu, cfg.alpha, &parse_shift_list(shifts)?)?;
            if !scheme.stability_verified() {
                eprintln!("note: stability of this shift set is unverified");
            }
            let state = cn_solve(&problem, &scheme)?;
            for (x, v) in problem.grid.nodes().iter().zip(&state.u) {
                table.push_str(&format!("{x:e},{v:e}\n"));
            }
            if let Some(err) = state.max_error {
                eprintln!("max error at t={} {}", state.t, bench::fmt_sci(err));
            }
        }
    }
    match csv {
        Some(path) => fs::write(path, table)?,
        None => out!("{table}"),
    }
    Ok(())
}

fn convergence(suite: Suite, out: Option<&Path>, json: bool) -> Outcome {
    let (name, reports, checks): (
        &str,
        Vec<ConvergenceReport>,
        fn(&[ConvergenceReport]) -> Vec<Check>,
    ) = match suite {
        Suite::Table1 => (
            "table1",
            bench::run_table1(&[-0.5, 0.5, 1.8], &bench::TABLE1_HINV)?,
            bench::table1_checks,
        ),
        Suite::Table2 => (
            "table2",
            bench::run_table2(&[3, 4], &[1.1, 1.5, 1.8], &bench::TABLE2_HINV)?,
            bench::table2_checks,
        ),
        Suite::Consistency => (
            "consistency",
            bench::run_consistency(&[3, 4], 1.5, &[1, 2, 3, 4], &bench::CONSISTENCY_HINV)?,
            bench::consistency_checks,
        ),
    };
    let results = checks(&reports);
    if json {
        let doc = serde_json::json!({ "reports": reports, "checks": results });
        outln!(
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializable")
        );
    } else {
        for r in &reports {
            outln!(
                "# nu={} alpha={} shifts={:?}",
                r.meta.nu,
                r.meta.alpha,
                r.meta.shifts
            );
            out!("{}", r.to_csv());
        }
    }
    if let Some(path) = out {
        write_reports(name, &reports, path)?;
    }
    for c in &results {
        eprintln!(
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if results.iter().all(|c| c.pass) {
        Ok(())
    } else {
        Err(Failure::Numeric("convergence checks failed".into()))
    }
}

fn write_reports(suite: &str, reports: &[ConvergenceReport], path: &Path) -> Outcome {
    if let [only] = reports {
        fs::write(path, only.to_csv())?;
        return Ok(());
    }
    fs::create_dir_all(path)?;
    for r in reports {
        let shifts: Vec<String> = r.meta.shifts.iter().map(|s| s.to_string()).collect();
        let file = format!(
            "{suite}_nu{}_alpha{}_s{}.csv",
            r.meta.nu,
            r.meta.alpha,
            shifts.join("_")
        );
        fs::write(path.join(file), r.to_csv())?;
    }
    Ok(())
}
