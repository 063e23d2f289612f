use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::bail;
use clap::{Args, Parser, Subcommand, ValueEnum};

use quantum_basis::eigen::{eig_full_with, eig_partial_with};
use quantum_basis::experiment::{
    emit_plotdata, score, write_outcome, ExperimentSpec, NoiseSection,
};
use quantum_basis::synth::{make_image, make_signal};
use quantum_basis::*;

#[derive(Parser)]
#[command(
    name = "qbasis",
    version,
    about = "Adaptive Hamiltonian transforms and denoising"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise a field with one pipeline configuration.
    Denoise(DenoiseArgs),
    /// Run an experiment descriptor (grid search against a clean reference).
    Experiment {
        descriptor: PathBuf,
        /// Output directory for reports, grids and plot data.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Generate a synthetic signal or image.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Corrupt a field with signal-dependent noise.
    Corrupt {
        input: PathBuf,
        #[arg(long, default_value = "poisson")]
        model: NoiseModel,
        #[arg(long, default_value_t = 15.0)]
        snr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Redraw until the realized SNR is this close to the target.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// PSNR, SNR and SSIM of a test field against a clean one.
    Metrics {
        clean: PathBuf,
        test: PathBuf,
        /// Dynamic range; defaults to the clean maximum.
        #[arg(long)]
        peak: Option<f64>,
    },
    /// Write eigenpairs of the Hamiltonian of a field.
    DumpEigs {
        input: PathBuf,
        #[command(flatten)]
        operator: OperatorArgs,
        /// Number of pairs; all of them by default.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value = "lowest")]
        which: Which,
        /// CSV of `index,eigenvalue,c1,c2,...`, eigenvalues descending.
        #[arg(long, short)]
        output: PathBuf,
        /// Also write the Hamiltonian as 1-based `row col value` lines.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Signal,
    Image,
}

#[derive(Args)]
struct OperatorArgs {
    /// ħ²/2m.
    #[arg(long)]
    ratio: Option<f64>,
    /// Gaussian pre-smoothing width (0 disables).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    boundary: Option<BoundaryMode>,
}

#[derive(Args)]
struct DenoiseArgs {
    input: PathBuf,
    /// TOML pipeline configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    operator: OperatorArgs,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    order: Option<CoefficientOrder>,
    #[arg(long)]
    project_smoothed: bool,
    /// Compute only this many eigenpairs.
    #[arg(long, conflicts_with = "full")]
    partial: Option<usize>,
    /// Always compute the full eigendecomposition.
    #[arg(long)]
    full: bool,
    #[arg(long, short)]
    output: PathBuf,
    /// Clean reference; enables the metrics report.
    #[arg(long)]
    clean: Option<PathBuf>,
    /// JSON report path (needs --clean).
    #[arg(long, requires = "clean")]
    report: Option<PathBuf>,
    /// Directory for spectrum, eigenvector and coefficient CSVs.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
}

fn format_of(path: &Path) -> Result<FieldFormat, PipelineError> {
    FieldFormat::from_path(path)
        .ok_or_else(|| {
            Error::InvalidParameter(format!("{}: use a .csv or .pgm extension", path.display()))
        })
        .at(Stage::Config)
}

fn load(path: &Path) -> Result<Field, PipelineError> {
    load_field(path, format_of(path)?).at(Stage::Io)
}

fn save(field: &Field, path: &Path) -> Result<(), PipelineError> {
    save_field(field, path, format_of(path)?).at(Stage::Io)
}

fn pipeline_config(args: &DenoiseArgs, dim: usize) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::io(path, e))
                .at(Stage::Io)?;
            toml::from_str(&text)
                .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
                .at(Stage::Config)?
        }
        None => {
            let (Some(ratio), Some(s), Some(rho)) = (args.operator.ratio, args.s, args.rho) else {
                bail!("[config] without --config, --ratio, --s and --rho are required");
            };
            PipelineConfig {
                ratio: PlanckMassRatio::new(ratio).at(Stage::Config)?,
                s,
                rho,
                ..PipelineConfig::identity(dim)
            }
        }
    };
    if let Some(r) = args.operator.ratio {
        cfg.ratio = PlanckMassRatio::new(r).at(Stage::Config)?;
    }
    if let Some(sigma) = args.operator.sigma {
        cfg.sigma = sigma;
    }
    if let Some(b) = args.operator.boundary {
        cfg.boundary = b;
    }
    if let Some(s) = args.s {
        cfg.s = s;
    }
    if let Some(rho) = args.rho {
        cfg.rho = rho;
    }
    if let Some(order) = args.order {
        cfg.order = order;
    }
    if args.project_smoothed {
        cfg.project_smoothed = true;
    }
    if let Some(m) = args.partial {
        cfg.eigen_mode = EigenMode::Partial(m);
    }
    if args.full {
        cfg.eigen_mode = EigenMode::Full;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn denoise(args: &DenoiseArgs) -> anyhow::Result<()> {
    let noisy = load(&args.input)?;
    let cfg = pipeline_config(args, noisy.len())?;
    let run = run_pipeline(&noisy, &cfg, &EigenConfig::default())?;
    save(&run.denoised, &args.output)?;
    let clean = args.clean.as_deref().map(load).transpose()?;
    if let Some(clean) = &clean {
        let before = score(clean, &noisy, Peak::Auto)?;
        let after = score(clean, &run.denoised, Peak::Auto)?;
        println!(
            "noisy    psnr {:.2} dB  snr {:.2} dB",
            before.psnr_db, before.snr_db
        );
        println!(
            "denoised psnr {:.2} dB  snr {:.2} dB",
            after.psnr_db, after.snr_db
        );
        if let Some(path) = &args.report {
            let report = serde_json::json!({
                "config": cfg,
                "noisy": before,
                "denoised": after,
            });
            let text = serde_json::to_string_pretty(&report)? + "\n";
            fs::write(path, text)
                .map_err(|e| Error::io(path, e))
                .at(Stage::Io)?;
        }
    }
    if let Some(dir) = &args.plot_dir {
        emit_plotdata(&run, clean.as_ref(), &noisy, dir)?;
    }
    let t = run.timings;
    eprintln!(
        "timings: smooth {:.3?}, hamiltonian {:.3?}, eigen {:.3?}, project {:.3?}, reconstruct {:.3?}",
        t.smooth, t.hamiltonian, t.eigen, t.project, t.reconstruct
    );
    Ok(())
}

fn dump_eigs(
    input: &Path,
    op: &OperatorArgs,
    count: Option<usize>,
    which: Which,
    output: &Path,
    matrix_out: Option<&Path>,
) -> anyhow::Result<()> {
    let field = load(input)?;
    let ratio = PlanckMassRatio::new(op.ratio.unwrap_or(1.0)).at(Stage::Config)?;
    let sigma = op.sigma.unwrap_or(0.0);
    let potential = if sigma > 0.0 {
        gaussian_smooth(&field, sigma).at(Stage::Smooth)?
    } else {
        field
    };
    let h = build_hamiltonian(&potential, ratio, op.boundary.unwrap_or_default())
        .at(Stage::Hamiltonian)?;
    if let Some(path) = matrix_out {
        let file = fs::File::create(path)
            .map_err(|e| Error::io(path, e))
            .at(Stage::Io)?;
        let mut out = BufWriter::new(file);
        h.write_coordinates(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
            .at(Stage::Io)?;
    }
    let cfg = EigenConfig::default();
    let basis = match count {
        Some(m) if m < h.dim() => eig_partial_with(&h, m, which, &cfg),
        _ => eig_full_with(&h, &cfg),
    }
    .at(Stage::Eigen)?;
    let file = fs::File::create(output)
        .map_err(|e| Error::io(output, e))
        .at(Stage::Io)?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        write!(out, "index,eigenvalue")?;
        for k in 1..=basis.dim() {
            write!(out, ",c{k}")?;
        }
        writeln!(out)?;
        for (i, (l, v)) in basis.eigenvalues().iter().zip(basis.vectors()).enumerate() {
            write!(out, "{},{l}", i + 1)?;
            for c in v {
                write!(out, ",{c}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    };
    write(&mut out)
        .map_err(|e| Error::io(output, e))
        .at(Stage::Io)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Denoise(args) => denoise(&args),
        Command::Experiment { descriptor, out } => {
            let spec = ExperimentSpec::load(&descriptor)?;
            let outcome = experiment::run_experiment(&spec)?;
            write_outcome(&outcome, &out)?;
            print!("{}", experiment::table_csv(&outcome));
            Ok(())
        }
        Command::Synth {
            kind,
            size,
            seed,
            output,
        } => {
            let field = match kind {
                SynthKind::Signal => make_signal(size.unwrap_or(256), seed),
                SynthKind::Image => make_image(size.unwrap_or(64), seed),
            }
            .at(Stage::Config)?;
            save(&field, &output)?;
            Ok(())
        }
        Command::Corrupt {
            input,
            model,
            snr,
            seed,
            tolerance,
            output,
        } => {
            let clean = load(&input)?;
            let section = NoiseSection {
                model,
                target_snr_db: snr,
                seed,
                tolerance_db: tolerance,
            };
            let c = section.apply(&clean)?;
            save(&c.noisy, &output)?;
            println!("achieved snr {:.3} dB", c.achieved_snr_db);
            Ok(())
        }
        Command::Metrics { clean, test, peak } => {
            let (clean, test) = (load(&clean)?, load(&test)?);
            let peak = peak.map_or(Peak::Auto, Peak::Value);
            let s = score(&clean, &test, peak)?;
            println!("psnr_db,snr_db,ssim");
            let ssim = s.ssim.map_or_else(|| "NA".to_string(), |v| v.to_string());
            println!("{},{},{ssim}", s.psnr_db, s.snr_db);
            Ok(())
        }
        Command::DumpEigs {
            input,
            operator,
            count,
            which,
            output,
            matrix_out,
        } => dump_eigs(
            &input,
            &operator,
            count,
            which,
            &output,
            matrix_out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
