//! The `whitebox-ca` command line.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::analysis::PopulationSeries;
use crate::config::RunConfig;
use crate::engine::{default_workers, Simulation};
use crate::error::{Error, Result};
use crate::experiments::{run_experiment, Overrides};
use crate::lattice::{Boundary, Coord, GridKind, Lattice, Neighborhood};
use crate::models::{ecosystem_text, game_of_life_text, EcosystemParams};
use crate::rules::{parse_ruleset, validate, RuleSet, Severity};
use crate::trace::{explain, import_trace_for, replay, TraceMode, DEFAULT_DEPTH};

#[derive(Debug, Parser)]
#[command(name = "whitebox-ca", about = "Deterministic rule-based cellular automata with causal traces", disable_version_flag = true)]
pub struct Cli {
    /// Print the version; with --config-hash, the resolved-config digest too.
    #[arg(long)]
    version: bool,
    /// Config file whose resolved parameters are hashed (use with --version).
    #[arg(long, value_name = "CONFIG", requires = "version")]
    config_hash: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation described by an INI config file.
    Run {
        config: PathBuf,
        /// Write text and PGM snapshots every k iterations (0 = off).
        #[arg(long, value_name = "K")]
        snapshot_every: Option<u32>,
        /// Worker threads (default: available cores, capped by WHITEBOX_CA_THREADS).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory, replacing [output] dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the canonical rule text and exit without running.
        #[arg(long)]
        dump_rules: bool,
    },
    /// Print the causal chain behind one cell's state.
    Explain {
        /// Run directory holding trace.txt, initial.txt and rules.car.
        dir: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Initial snapshot (text format).
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// `periodic` or `fixed:<STATE>`.
        #[arg(long, default_value = "periodic")]
        boundary: String,
        /// Cell as `row,col`.
        #[arg(long)]
        cell: String,
        #[arg(long)]
        iteration: u32,
        #[arg(long, default_value_t = DEFAULT_DEPTH, conflicts_with = "full")]
        depth: u32,
        /// Follow causes all the way back to the initial pattern.
        #[arg(long)]
        full: bool,
        /// Emit JSON instead of the indented tree.
        #[arg(long)]
        json: bool,
    },
    /// Rebuild a run from its trace and check it against the recorded digests.
    Replay {
        dir: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, default_value = "periodic")]
        boundary: String,
        /// Digest file to compare against (default: digests.txt in DIR, if present).
        #[arg(long)]
        digests: Option<PathBuf>,
    },
    /// Run one of the shipped experiments.
    Experiment {
        name: String,
        /// Output directory (default: results/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a setting, `key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Parse and lint `.car` rule files.
    ValidateRules {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Print a ruleset in canonical `.car` form: `life`, `ecosystem`, or a file path.
    DumpRules {
        model: String,
        #[arg(long, default_value_t = 1)]
        species: usize,
        #[arg(long, default_value_t = 1)]
        regeneration: u32,
        #[arg(long, default_value = "von_neumann(1)")]
        neighborhood: String,
        /// Comma-separated species order, e.g. `2,1`.
        #[arg(long)]
        priority: Option<String>,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    if cli.version {
        println!("whitebox-ca {}", env!("CARGO_PKG_VERSION"));
        if let Some(path) = cli.config_hash {
            let config = RunConfig::load(&path).map_err(|e| in_file(&path, e))?;
            println!("config-hash {:016x}", config.config_hash());
        }
        return Ok(0);
    }
    let Some(command) = cli.command else {
        return Err(Error::Config("no command given (try --help)".into()));
    };
    match command {
        Command::Run {
            config,
            snapshot_every,
            workers,
            out,
            dump_rules,
        } => cmd_run(&config, snapshot_every, workers, out, dump_rules),
        Command::Explain {
            dir,
            trace,
            snapshot,
            rules,
            boundary,
            cell,
            iteration,
            depth,
            full,
            json,
        } => {
            let inputs = RunInputs::resolve(dir, trace, snapshot, rules, &boundary)?;
            let cell: Coord = cell.parse()?;
            let depth = if full { iteration } else { depth };
            let chain = explain(&inputs.initial, &inputs.trace()?, cell, iteration, depth)?;
            if json {
                let text = serde_json::to_string_pretty(&chain.to_json())
                    .map_err(|e| Error::Runtime(e.to_string()))?;
                println!("{text}");
            } else {
                print!("{}", chain.render_text());
            }
            Ok(0)
        }
        Command::Replay {
            dir,
            trace,
            snapshot,
            rules,
            boundary,
            digests,
        } => {
            let digests = digests.or_else(|| {
                dir.as_ref().map(|d| d.join("digests.txt")).filter(|p| p.exists())
            });
            let inputs = RunInputs::resolve(dir, trace, snapshot, rules, &boundary)?;
            let result = replay(&inputs.initial, &inputs.trace()?)?;
            if let Some(path) = digests {
                let expected = read_digests(&path)?;
                if expected != result.digests {
                    let t = expected
                        .iter()
                        .zip(&result.digests)
                        .position(|(a, b)| a != b)
                        .unwrap_or(expected.len().min(result.digests.len()));
                    return Err(Error::Runtime(format!(
                        "replay diverges from {} at iteration {t}",
                        path.display()
                    )));
                }
                println!(
                    "replay OK: {} iterations, digests match {}",
                    result.digests.len() - 1,
                    path.display()
                );
            } else {
                println!("replay OK: {} iterations", result.digests.len() - 1);
            }
            println!("final digest {:016x}", result.digests.last().expect("initial digest"));
            Ok(0)
        }
        Command::Experiment {
            name,
            out,
            set,
            workers,
        } => {
            let overrides = Overrides::parse(&set)?;
            let output = run_experiment(&name, &overrides, workers.unwrap_or(0))?;
            let dir = out.unwrap_or_else(|| Path::new("results").join(&name));
            output.write_to(&dir)?;
            print!("{}", output.report);
            println!("wrote {} files to {}", output.files.len(), dir.display());
            Ok(if output.ok { 0 } else { 3 })
        }
        Command::ValidateRules { files } => {
            let mut code = 0;
            for path in &files {
                let set = match read(path).and_then(|t| parse_ruleset(&t)) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("{}: {}", path.display(), e);
                        code = code.max(e.exit_code());
                        continue;
                    }
                };
                let diags = validate(&set);
                for d in &diags {
                    let level = match d.severity {
                        Severity::Error => "error",
                        Severity::Warning => "warning",
                    };
                    let rule = d.rule.as_deref().map(|r| format!(" rule '{r}'")).unwrap_or_default();
                    println!("{}:{rule} {level}: {}", path.display(), d.message);
                }
                if diags.iter().any(|d| d.severity == Severity::Error) {
                    code = code.max(2);
                } else {
                    println!("{}: ok ({} rules)", path.display(), set.rules().len());
                }
            }
            Ok(code)
        }
        Command::DumpRules {
            model,
            species,
            regeneration,
            neighborhood,
            priority,
            out,
        } => {
            let text = match model.as_str() {
                "life" => parse_ruleset(&game_of_life_text())?.to_text(),
                "ecosystem" => {
                    let nb: Neighborhood = neighborhood.parse()?;
                    let mut params = EcosystemParams::new(species, regeneration, nb);
                    if let Some(p) = priority {
                        params = params.with_priority(
                            p.split(',')
                                .map(|s| {
                                    s.trim().parse().map_err(|_| {
                                        Error::Config(format!("invalid priority entry '{s}'"))
                                    })
                                })
                                .collect::<Result<_>>()?,
                        );
                    }
                    parse_ruleset(&ecosystem_text(&params)?)?.to_text()
                }
                path => {
                    let path = Path::new(path);
                    read(path)
                        .and_then(|t| parse_ruleset(&t))
                        .map_err(|e| in_file(path, e))?
                        .to_text()
                }
            };
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

/// Prefixes a parse error's message with the file it came from.
fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { position, message } if !message.starts_with(&path.display().to_string()) => {
            Error::Parse {
                position,
                message: format!("{}: {message}", path.display()),
            }
        }
        e => e,
    }
}

fn read_digests(path: &Path) -> Result<Vec<u64>> {
    read(path)?
        .lines()
        .enumerate()
        .map(|(i, line)| {
            let hex = line.split_whitespace().last().unwrap_or("");
            u64::from_str_radix(hex, 16).map_err(|_| {
                Error::Config(format!("{}:{}: invalid digest line '{line}'", path.display(), i + 1))
            })
        })
        .collect()
}

/// Rules, initial lattice and trace text of a finished run.
struct RunInputs {
    rules: RuleSet,
    initial: Lattice,
    trace_text: String,
    trace_path: PathBuf,
}

impl RunInputs {
    fn resolve(
        dir: Option<PathBuf>,
        trace: Option<PathBuf>,
        snapshot: Option<PathBuf>,
        rules: Option<PathBuf>,
        boundary: &str,
    ) -> Result<Self> {
        let pick = |given: Option<PathBuf>, name: &str, flag: &str| -> Result<PathBuf> {
            given
                .or_else(|| dir.as_ref().map(|d| d.join(name)))
                .ok_or_else(|| Error::Config(format!("--{flag} is required without a run directory")))
        };
        let trace_path = pick(trace, "trace.txt", "trace")?;
        let snapshot_path = pick(snapshot, "initial.txt", "snapshot")?;
        let rules_path = pick(rules, "rules.car", "rules")?;
        let rules = parse_ruleset(&read(&rules_path)?).map_err(|e| in_file(&rules_path, e))?;
        let boundary = match boundary.strip_prefix("fixed:") {
            None if boundary == "periodic" => Boundary::Periodic,
            None => return Err(Error::Config(format!("boundary '{boundary}' is not periodic or fixed:<STATE>"))),
            Some(name) => Boundary::Fixed(
                rules
                    .states()
                    .id(name)
                    .ok_or_else(|| Error::Config(format!("boundary state '{name}' is not declared")))?,
            ),
        };
        let kind = match rules.neighborhood() {
            Neighborhood::Hex(_) => GridKind::Hex,
            _ => GridKind::Square,
        };
        let initial = Lattice::from_snapshot_text(
            &read(&snapshot_path)?,
            kind,
            boundary,
            Arc::clone(rules.states()),
        )
        .map_err(|e| in_file(&snapshot_path, e))?;
        Ok(Self {
            rules,
            initial,
            trace_text: read(&trace_path)?,
            trace_path,
        })
    }

    fn trace(&self) -> Result<crate::trace::Trace> {
        import_trace_for(&self.trace_text, &self.rules).map_err(|e| in_file(&self.trace_path, e))
    }
}

fn cmd_run(
    config_path: &Path,
    snapshot_every: Option<u32>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    dump_rules: bool,
) -> Result<i32> {
    let config = RunConfig::load(config_path).map_err(|e| in_file(config_path, e))?;
    let (rules, initial) = config.build().map_err(|e| in_file(config_path, e))?;
    if dump_rules {
        print!("{}", rules.to_text());
        return Ok(0);
    }
    let dir = out.unwrap_or_else(|| config.output_dir.clone());
    let every = snapshot_every.unwrap_or(config.snapshot_every);
    let workers = match workers.unwrap_or(config.workers) {
        0 => default_workers(),
        n => n,
    };
    std::fs::create_dir_all(&dir)?;
    let snap_dir = dir.join("snapshots");
    if every > 0 {
        std::fs::create_dir_all(&snap_dir)?;
    }
    let write_snapshot = |t: u32, l: &Lattice| -> Result<()> {
        std::fs::write(snap_dir.join(format!("t{t:06}.txt")), l.to_snapshot_text())?;
        std::fs::write(snap_dir.join(format!("t{t:06}.pgm")), l.to_pgm())?;
        Ok(())
    };

    let mut sim = Simulation::new(Arc::clone(&rules), initial.clone(), config.trace_mode, workers)?;
    let mut series = PopulationSeries::new(rules.states());
    let mut digests = vec![initial.digest()];
    series.push(&initial);
    if every > 0 {
        write_snapshot(0, &initial)?;
    }
    for _ in 0..config.iterations {
        let l = sim.step();
        series.push(l);
        digests.push(l.digest());
        let t = sim.iteration();
        if every > 0 && t % every == 0 {
            write_snapshot(t, sim.lattice())?;
        }
    }

    std::fs::write(dir.join("series.csv"), series.to_csv())?;
    std::fs::write(dir.join("initial.txt"), initial.to_snapshot_text())?;
    std::fs::write(dir.join("final.txt"), sim.lattice().to_snapshot_text())?;
    std::fs::write(dir.join("rules.car"), rules.to_text())?;
    std::fs::write(dir.join("config.resolved.ini"), config.resolved_text())?;
    let mut d = String::new();
    for (t, x) in digests.iter().enumerate() {
        d.push_str(&format!("{t} {x:016x}\n"));
    }
    std::fs::write(dir.join("digests.txt"), d)?;
    if config.trace_mode != TraceMode::Off {
        let trace = sim.trace();
        let file = std::fs::File::create(dir.join("trace.txt"))?;
        let mut w = std::io::BufWriter::new(file);
        crate::trace::export_trace(trace, &mut w)?;
        w.flush()?;
    }
    println!(
        "ran {} iterations on {}x{}; final digest {:016x}; outputs in {}",
        config.iterations,
        initial.width(),
        initial.height(),
        digests.last().expect("initial digest"),
        dir.display()
    );
    Ok(0)
}
