//! patchflow: contour dynamics runs, symbol classification, kernel tables,
//! envelope curves and snapshot diagnostics from the command line.
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 solver halt
//! (contact or self-intersection; partial artifacts are kept).

use clap::{Parser, Subcommand};
use patchflow::config::RunConfig;
use patchflow::contour::{run, RunHalt, SimulationState};
use patchflow::diagnostics::{self, DiagnosticsParams};
use patchflow::kernel::{build_table, HankelQuadratureConfig, RhoRange};
use patchflow::multiplier::{classify, MultiplierSymbol, ProbeGrid, SymbolSpec};
use patchflow::osgood::{envelope_flow_bound, envelope_separation, EnvelopeBound, OsgoodProfile};
use patchflow::output::{self, CsvStream};
use patchflow::Vec2;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "patchflow", version, about = "2D active scalar patch dynamics under a radial Fourier multiplier")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a contour dynamics simulation from a JSON config
    Simulate {
        /// path to the run configuration (JSON)
        #[arg(long)]
        config: PathBuf,
    },
    /// Classify a multiplier symbol against the growth hypotheses
    Classify {
        /// symbol: a name (euler, triple_log), name=param
        /// (alpha_sqg=0.5, loglog_euler=1.0, log_euler=1.0,
        /// qg_shallow_water=1.0, euler_lambda=1.0) or a JSON descriptor
        symbol: String,
    },
    /// Emit the tabulated kernel (rho, G, G1, G2, Rtilde) as CSV
    KernelTable {
        symbol: String,
        #[arg(long, default_value_t = 1e-8)]
        rho_min: f64,
        #[arg(long, default_value_t = 1e3)]
        rho_max: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// write table.csv and meta.json here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print profile tables (H, H~, script H, script M) and envelope curves
    Envelope {
        symbol: String,
        /// initial pair separation for the two-sided flow envelope
        #[arg(long)]
        sep0: Option<f64>,
        /// initial patch distance for the separation lower bound
        #[arg(long)]
        d0: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 2.0)]
        t_end: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Recompute the diagnostics row(s) of a snapshot
    Diagnose {
        snapshot: PathBuf,
        /// Hölder exponents (comma separated)
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5])]
        gamma: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        max_k: usize,
    },
}

fn parse_symbol(text: &str) -> Result<MultiplierSymbol, patchflow::Error> {
    let spec: SymbolSpec = if text.trim_start().starts_with('{') {
        serde_json::from_str(text)
            .map_err(|e| patchflow::Error::Config(format!("bad symbol descriptor: {e}")))?
    } else {
        let (name, param) = match text.split_once('=') {
            Some((n, p)) => (
                n,
                Some(p.parse::<f64>().map_err(|e| {
                    patchflow::Error::Config(format!("bad symbol parameter '{p}': {e}"))
                })?),
            ),
            None => (text, None),
        };
        match (name, param) {
            ("euler", None) => SymbolSpec::Euler,
            ("triple_log", None) => SymbolSpec::TripleLog,
            ("alpha_sqg", Some(alpha)) => SymbolSpec::AlphaSqg { alpha },
            ("loglog_euler", Some(beta)) => SymbolSpec::LoglogEuler { beta },
            ("log_euler", Some(beta1)) => SymbolSpec::LogEuler { beta1 },
            ("qg_shallow_water", Some(lambda)) => SymbolSpec::QgShallowWater { lambda },
            ("euler_lambda", Some(lambda)) => SymbolSpec::EulerLambda { lambda },
            _ => {
                return Err(patchflow::Error::Config(format!(
                    "unrecognized symbol '{text}'"
                )))
            }
        }
    };
    MultiplierSymbol::new(spec)
}

fn cmd_simulate(config_path: &Path) -> Result<i32, patchflow::Error> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| patchflow::Error::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = RunConfig::from_json(&text)?;
    let out_dir = PathBuf::from(&cfg.output.directory);
    std::fs::create_dir_all(out_dir.join("snapshots"))?;

    let mut state = cfg.build_state()?;
    output::atomic_write(
        &out_dir.join("run_meta.json"),
        serde_json::to_string_pretty(&output::run_meta_json(&cfg, &state.table))
            .expect("meta serialization")
            .as_bytes(),
    )?;

    let params = DiagnosticsParams {
        gamma_list: cfg.diagnostics.gamma_list.clone(),
        max_k: cfg.diagnostics.max_k,
    };
    let n_pairs = cfg.diagnostics.tracers.len() / 2;
    let mut csv = CsvStream::create(
        &out_dir.join("diagnostics.csv"),
        &output::diagnostics_csv_header(&params.gamma_list, params.max_k, n_pairs),
    );

    // fixed viewport from the initial configuration
    let viewport = {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in &state.curves {
            for p in &c.nodes {
                lo.x = lo.x.min(p.x);
                lo.y = lo.y.min(p.y);
                hi.x = hi.x.max(p.x);
                hi.y = hi.y.max(p.y);
            }
        }
        let mid = (lo + hi) * 0.5;
        let half = (hi - lo) * 0.75 + Vec2::new(0.2, 0.2);
        (mid - half, mid + half)
    };

    let formats = cfg.output.formats.clone();
    let step_cfg = cfg.step_config();
    let mut io_err: Option<patchflow::Error> = None;
    let summary = {
        let csv_ref = &mut csv;
        let io_ref = &mut io_err;
        run(
            &mut state,
            &step_cfg,
            |st: &SimulationState, idx: usize| {
                if formats.iter().any(|f| f == "json") {
                    output::write_snapshot(
                        &out_dir.join(format!("snapshots/{idx:04}.json")),
                        st,
                    )?;
                }
                if formats.iter().any(|f| f == "svg") {
                    output::atomic_write(
                        &out_dir.join(format!("snapshots/{idx:04}.svg")),
                        output::render_svg(st, viewport).as_bytes(),
                    )?;
                }
                Ok(())
            },
            |st: &SimulationState| {
                let rec = diagnostics::compute_record(st, &params)?;
                csv_ref.push(&output::diagnostics_csv_rows(&rec));
                if let Err(e) = csv_ref.flush() {
                    *io_ref = Some(e);
                }
                Ok(())
            },
        )?
    };
    csv.flush()?;
    if let Some(e) = io_err {
        return Err(e);
    }

    match summary.halt {
        RunHalt::Finished => {
            println!(
                "finished: {} steps to t = {}, artifacts in {}",
                summary.steps,
                summary.final_t,
                out_dir.display()
            );
            Ok(0)
        }
        RunHalt::Halted(e) => {
            eprintln!(
                "solver halted after {} steps at t = {}: {e}",
                summary.steps, summary.final_t
            );
            Ok(2)
        }
    }
}

fn cmd_classify(symbol: &str) -> Result<i32, patchflow::Error> {
    let sym = parse_symbol(symbol)?;
    let report = classify(&sym, &ProbeGrid::default())?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serialization")
    );
    Ok(0)
}

fn cmd_kernel_table(
    symbol: &str,
    rho_min: f64,
    rho_max: f64,
    tol: f64,
    out: Option<&Path>,
) -> Result<i32, patchflow::Error> {
    let sym = parse_symbol(symbol)?;
    let table = build_table(
        &sym,
        RhoRange {
            min: rho_min,
            max: rho_max,
        },
        tol,
        &HankelQuadratureConfig::default(),
    )?;
    let meta = serde_json::to_string(&table.metadata_json()).expect("meta serialization");
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            output::atomic_write(&dir.join("table.csv"), &buf)?;
            output::atomic_write(&dir.join("meta.json"), meta.as_bytes())?;
            println!("wrote {}", dir.display());
        }
        None => {
            println!("# {meta}");
            let mut stdout = std::io::stdout().lock();
            table.write_csv(&mut stdout)?;
        }
    }
    Ok(0)
}

fn cmd_envelope(
    symbol: &str,
    sep0: Option<f64>,
    d0: Option<f64>,
    c: f64,
    t_end: f64,
    points: usize,
) -> Result<i32, patchflow::Error> {
    let sym = parse_symbol(symbol)?;
    let profile = OsgoodProfile::new(&sym)?;
    let rs: Vec<f64> = (0..points)
        .map(|i| 10f64.powf(0.5 + 11.5 * i as f64 / (points.max(2) - 1) as f64))
        .collect();
    let mut stdout = std::io::stdout().lock();
    output::write_profile_csv(&mut stdout, &profile, &rs)?;
    use std::io::Write;
    let fmt_bound = |b: EnvelopeBound| match b {
        EnvelopeBound::Value(v) => format!("{v}"),
        EnvelopeBound::BeyondHorizon { horizon } => format!("beyond_horizon({horizon})"),
    };
    if let Some(s0) = sep0 {
        writeln!(stdout, "\nt,pair_lower,pair_upper")?;
        for i in 0..points {
            let t = t_end * i as f64 / (points.max(2) - 1) as f64;
            let (lo, hi) = envelope_flow_bound(&profile, s0, t, c)?;
            writeln!(stdout, "{t},{},{}", fmt_bound(lo), fmt_bound(hi))?;
        }
    }
    if let Some(d) = d0 {
        writeln!(stdout, "\nt,separation_lower")?;
        for i in 0..points {
            let t = t_end * i as f64 / (points.max(2) - 1) as f64;
            writeln!(
                stdout,
                "{t},{}",
                fmt_bound(envelope_separation(&profile, d, t, c)?)
            )?;
        }
    }
    Ok(0)
}

fn cmd_diagnose(snapshot: &Path, gamma: Vec<f64>, max_k: usize) -> Result<i32, patchflow::Error> {
    let snap = output::read_snapshot(snapshot)?;
    let curves = snap.to_curves()?;
    let tracers = snap.tracer_points();
    let params = DiagnosticsParams {
        gamma_list: gamma,
        max_k,
    };
    let rec = diagnostics::compute_record_parts(&curves, &tracers, snap.t, &params)?;
    print!(
        "{}\n{}",
        output::diagnostics_csv_header(&params.gamma_list, params.max_k, rec.tracer_pairs.len()),
        output::diagnostics_csv_rows(&rec)
    );
    Ok(0)
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("PATCHFLOW_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Simulate { config } => cmd_simulate(&config),
        Cmd::Classify { symbol } => cmd_classify(&symbol),
        Cmd::KernelTable {
            symbol,
            rho_min,
            rho_max,
            tol,
            out,
        } => cmd_kernel_table(&symbol, rho_min, rho_max, tol, out.as_deref()),
        Cmd::Envelope {
            symbol,
            sep0,
            d0,
            c,
            t_end,
            points,
        } => cmd_envelope(&symbol, sep0, d0, c, t_end, points),
        Cmd::Diagnose {
            snapshot,
            gamma,
            max_k,
        } => cmd_diagnose(&snapshot, gamma, max_k),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
