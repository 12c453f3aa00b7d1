//! `nn2logic`: train a network, compile it to an AIG and inspect the result.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nn2logic::aig::{read_aiger_file, write_aiger_file, AigGraph};
use nn2logic::analysis::{emit_equations, evaluate, sweep_table};
use nn2logic::dataset::{GaussianBlobs, LabeledDataset, SplitManifest};
use nn2logic::mlp::{train, Mlp, TrainConfig};
use nn2logic::pipeline::{
    circuit_metadata, compile, sweep_experiments, CompileOptions, LgnParams, PipelineKind, PipelineSettings, RfParams,
    LGN_DEPTHS, LGN_LUT_SIZES, LGN_WIDTHS, RF_DEPTHS, RF_ESTIMATORS,
};
use nn2logic::sat::{check_equivalence, find_onset_vector, Equivalence};

use crate::config::Config;

#[derive(Parser)]
#[command(name = "nn2logic", version, about = "Compile trained MLPs into And-Inverter-Graph logic")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// key = value configuration file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Total bits m of the fixed-point format
    #[arg(long, global = true)]
    bits: Option<u32>,
    /// Fractional bits i of the fixed-point format
    #[arg(long, global = true)]
    frac: Option<u32>,
    /// direct, rf or logicnet
    #[arg(long, global = true)]
    pipeline: Option<String>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic two-class Gaussian dataset as CSV
    Synth {
        #[arg(long, default_value_t = 3000)]
        samples: usize,
        #[arg(long, default_value_t = 27)]
        features: usize,
        #[arg(long, default_value_t = 8)]
        informative: usize,
        #[arg(long, default_value_t = 2.3)]
        separation: f64,
    },
    /// Train the MLP; writes weights.txt and split.txt
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Compile trained weights into circuit.aag
    Compile {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
    },
    /// Accuracy and size of a compiled circuit
    Evaluate {
        aig: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Evaluate on the test part of this split only
        #[arg(long)]
        split: Option<PathBuf>,
    },
    /// Write the equation report of a circuit
    Report {
        aig: PathBuf,
        #[arg(long, default_value = "circuit")]
        name: String,
        /// Number of the first internal net
        #[arg(long)]
        first_net: Option<usize>,
        /// Print to standard output instead of writing a file
        #[arg(long)]
        print: bool,
    },
    /// Find an input vector that sets an output to 1
    Sat {
        aig: PathBuf,
        /// Output to satisfy (default: the last one)
        #[arg(long)]
        output: Option<usize>,
    },
    /// Check two circuits for functional equivalence
    Equiv { first: PathBuf, second: PathBuf },
    /// Compile and evaluate a grid of pipeline settings
    Sweep {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("NN2LOGIC_THREADS") {
        let n: usize = n.parse().map_err(|_| anyhow!("NN2LOGIC_THREADS must be a positive integer"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut cfg = match &cli.global.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let g = &cli.global;
    let overrides = [
        ("seed", g.seed.map(|v| v.to_string())),
        ("bits", g.bits.map(|v| v.to_string())),
        ("frac", g.frac.map(|v| v.to_string())),
        ("pipeline", g.pipeline.clone()),
        ("out", g.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    let set_path = |cfg: &mut Config, key: &str, p: &Option<PathBuf>| -> Result<()> {
        if let Some(p) = p {
            cfg.set(key, p.display().to_string())?;
        }
        Ok(())
    };

    match &cli.command {
        Command::Synth {
            samples,
            features,
            informative,
            separation,
        } => {
            let data = GaussianBlobs {
                samples: *samples,
                features: *features,
                informative: *informative,
                separation: *separation,
            }
            .generate(cfg.seed()?)?;
            let path = out_file(&cfg, "data.csv")?;
            data.write_csv(&path)?;
            println!("wrote {} samples to {}", data.len(), path.display());
        }
        Command::Train { data } => {
            set_path(&mut cfg, "data", data)?;
            cmd_train(&cfg)?;
        }
        Command::Compile { data, weights, split } => {
            set_path(&mut cfg, "data", data)?;
            set_path(&mut cfg, "weights", weights)?;
            set_path(&mut cfg, "split", split)?;
            cmd_compile(&cfg)?;
        }
        Command::Evaluate { aig, data, split } => {
            set_path(&mut cfg, "data", data)?;
            set_path(&mut cfg, "split", split)?;
            cmd_evaluate(&cfg, aig)?;
        }
        Command::Report {
            aig,
            name,
            first_net,
            print,
        } => {
            let g = read_aiger_file(aig)?;
            let text = emit_equations(&g, name, *first_net).to_string();
            if *print {
                let mut stdout = std::io::stdout().lock();
                match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                    _ => {}
                }
            } else {
                let path = out_file(&cfg, &format!("{name}.report.txt"))?;
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
        }
        Command::Sat { aig, output } => {
            let g = read_aiger_file(aig)?;
            let idx = match output {
                Some(k) => *k,
                None => g.outputs().len().checked_sub(1).ok_or_else(|| anyhow!("circuit has no outputs"))?,
            };
            match find_onset_vector(&g, idx)? {
                Some(v) => println!("{}", bit_string(&v)),
                None => println!("unsatisfiable"),
            }
        }
        Command::Equiv { first, second } => {
            let a = read_aiger_file(first)?;
            let b = read_aiger_file(second)?;
            match check_equivalence(&a, &b)? {
                Equivalence::Equivalent => println!("EQUIVALENT"),
                Equivalence::Counterexample(v) => {
                    println!("NOT EQUIVALENT");
                    println!("counterexample: {}", bit_string(&v));
                    return Ok(ExitCode::from(1));
                }
            }
        }
        Command::Sweep { data, weights } => {
            set_path(&mut cfg, "data", data)?;
            set_path(&mut cfg, "weights", weights)?;
            cmd_sweep(&cfg)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Error chain on one line, skipping causes the outer message already
/// spells out.
fn one_line(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out.replace('\n', " ")
}

/// Input bits in order, input 0 first.
fn bit_string(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn out_file(cfg: &Config, name: &str) -> Result<PathBuf> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

/// Weights and split default to the files `train` writes.
fn default_path(cfg: &Config, key: &str, file: &str) -> PathBuf {
    cfg.get(key).map_or_else(|| cfg.out_dir().join(file), PathBuf::from)
}

fn load_split(cfg: &Config, data: &LabeledDataset) -> Result<Option<SplitManifest>> {
    let path = default_path(cfg, "split", "split.txt");
    if cfg.get("split").is_none() && !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let split = SplitManifest::from_text(&text)?;
    if let Some(&bad) = split.train.iter().chain(&split.test).find(|&&k| k >= data.len()) {
        bail!("split index {bad} is out of range for {} samples", data.len());
    }
    Ok(Some(split))
}

fn train_config(cfg: &Config) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    Ok(TrainConfig {
        hidden_nodes: cfg.or("hidden", d.hidden_nodes)?,
        epochs: cfg.or("epochs", d.epochs)?,
        learning_rate: cfg.or("learning_rate", d.learning_rate)?,
        batch_size: cfg.or("batch_size", d.batch_size)?,
        seed: cfg.seed()?,
    })
}

fn cmd_train(cfg: &Config) -> Result<()> {
    let data = LabeledDataset::read_csv(cfg.path("data")?)?;
    let split = SplitManifest::stratified(data.labels(), cfg.or("test_fraction", 0.2)?, cfg.or("split_seed", cfg.seed()?)?)?;
    let tr = data.subset(&split.train)?;
    let te = data.subset(&split.test)?;
    let net = train(&tr, &train_config(cfg)?)?;
    let weights = out_file(cfg, "weights.txt")?;
    net.save(&weights)?;
    let split_path = out_file(cfg, "split.txt")?;
    fs::write(&split_path, split.to_text()).with_context(|| format!("writing {}", split_path.display()))?;
    println!("train accuracy {:.4}", net.accuracy(&tr)?);
    if !te.is_empty() {
        println!("test accuracy {:.4}", net.accuracy(&te)?);
    }
    println!("wrote {} and {}", weights.display(), split_path.display());
    Ok(())
}

/// Training part of the dataset (all of it without a split).
fn training_data(cfg: &Config) -> Result<(LabeledDataset, Option<LabeledDataset>)> {
    let data = LabeledDataset::read_csv(cfg.path("data")?)?;
    Ok(match load_split(cfg, &data)? {
        Some(s) => (data.subset(&s.train)?, Some(data.subset(&s.test)?)),
        None => (data, None),
    })
}

fn cmd_compile(cfg: &Config) -> Result<()> {
    let (tr, _) = training_data(cfg)?;
    let net = Mlp::load(default_path(cfg, "weights", "weights.txt"))?;
    let opts = CompileOptions {
        fmt: cfg.format()?,
        settings: cfg.settings()?,
        seed: cfg.seed()?,
    };
    let c = compile(&net, &tr, &opts)?;
    let path = out_file(cfg, "circuit.aag")?;
    write_aiger_file(&c.aig, &path)?;
    if let Some(d) = &c.distilled {
        let models = out_file(cfg, "models.txt")?;
        fs::write(&models, d.to_text()).with_context(|| format!("writing {}", models.display()))?;
    }
    let s = c.aig.stats();
    println!(
        "{} {} at {}: {} AND nodes, {} levels",
        opts.settings.kind(),
        opts.settings.label(),
        opts.fmt,
        s.ands,
        s.levels
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_evaluate(cfg: &Config, aig: &Path) -> Result<()> {
    let g: AigGraph = read_aiger_file(aig)?;
    let (fmt, scaler, pipeline) = circuit_metadata(&g)?;
    let fmt = match cfg.explicit_format()? {
        Some(f) => f,
        None => fmt.ok_or_else(|| anyhow!("circuit carries no format; pass --bits and --frac"))?,
    };
    let data = LabeledDataset::read_csv(cfg.path("data")?)?;
    let data = match load_split(cfg, &data)? {
        Some(s) if cfg.get("split").is_some() => data.subset(&s.test)?,
        _ => data,
    };
    let mut r = evaluate(&g, &data, fmt, scaler.as_ref())?;
    if let Some(p) = pipeline {
        let (kind, settings) = p.split_once(' ').unwrap_or((p.as_str(), ""));
        r.pipeline = kind.to_string();
        r.settings = settings.to_string();
    }
    println!("{r}");
    Ok(())
}

fn cmd_sweep(cfg: &Config) -> Result<()> {
    let (tr, te) = training_data(cfg)?;
    let te = te.ok_or_else(|| anyhow!("sweep needs a split; run train first or pass one"))?;
    let net = Mlp::load(default_path(cfg, "weights", "weights.txt"))?;
    let fmt = cfg.format()?;
    let mut grid = Vec::new();
    for kind in cfg.list::<PipelineKind>("sweep.pipelines", &[PipelineKind::Direct, PipelineKind::RandomForest, PipelineKind::LogicNet])? {
        match kind {
            PipelineKind::Direct => grid.push(cfg.settings_for(kind)?),
            PipelineKind::RandomForest => {
                for max_depth in cfg.list("sweep.rf.depths", &RF_DEPTHS)? {
                    for n_estimators in cfg.list("sweep.rf.estimators", &RF_ESTIMATORS)? {
                        grid.push(PipelineSettings::RandomForest(RfParams {
                            max_depth,
                            n_estimators,
                            ..RfParams::default()
                        }));
                    }
                }
            }
            PipelineKind::LogicNet => {
                for depth in cfg.list("sweep.lgn.depths", &LGN_DEPTHS)? {
                    for width in cfg.list("sweep.lgn.widths", &LGN_WIDTHS)? {
                        for lut_size in cfg.list("sweep.lgn.luts", &LGN_LUT_SIZES)? {
                            grid.push(PipelineSettings::LogicNet(LgnParams {
                                depth,
                                width,
                                lut_size,
                                ..LgnParams::default()
                            }));
                        }
                    }
                }
            }
        }
    }
    let reports = sweep_experiments(&net, &tr, &te, fmt, &grid, cfg.seed()?)?;
    let table = sweep_table(&reports);
    print!("{table}");
    let path = out_file(cfg, "sweep.csv")?;
    fs::write(&path, &table).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("float MLP test accuracy {:.4}; wrote {}", net.accuracy(&te)?, path.display());
    Ok(())
}
