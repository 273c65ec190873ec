//! Command-line front end. Exit codes: 0 all PASS (SKIPs allowed), 1 any
//! FAIL, 2 usage error, 3 internal error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::baselines::Baselines;
use crate::config::{Format, Settings};
use crate::corpus::{gen_corpus, write_corpus, CorpusSpec, Family};
use crate::norms::{evaluator_by_name, Input};
use crate::report::{Status, VerificationReport};
use crate::suites::{names, registry, run_suite};
use crate::{usage, HarnessError, Result};

#[derive(Parser, Debug)]
#[command(name = "realinterp", version, about = "Numerical checks for limiting real interpolation and extrapolation")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON file with any of the settings below; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// grid points per octave
    #[arg(long, global = true)]
    grid_ppo: Option<u32>,
    /// smallest grid node
    #[arg(long, global = true)]
    tmin: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// worker threads (0 = all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// leave runtime and wall-clock time out of reports
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// corpus size override for the suites
    #[arg(long, global = true)]
    cases: Option<usize>,
    /// write output here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a verification suite (or `all`)
    Suite {
        name: String,
        /// baseq lattices: F11, FK, L1, Linf, Linf(1/t) or a lattice spec
        #[arg(long = "lattice")]
        lattices: Vec<String>,
        /// baseline file (default: the checked-in one)
        #[arg(long)]
        baselines: Option<PathBuf>,
        /// record the observed windows into this baseline file
        #[arg(long)]
        record_baselines: Option<PathBuf>,
    },
    /// List the registered suites
    List,
    /// Corpus generation
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Evaluate one norm of an input file or spec string
    Norm {
        /// one of: lattice:<L>, knorm:<theta>,<q>, extrap:<q>:<L>, grand:<p>, fk:<p>,
        /// llogl:<alpha>, lp:<p>, schatten:<p>, matsaev:<alpha>
        which: String,
        #[arg(long)]
        input: String,
    },
}

#[derive(Subcommand, Debug)]
enum CorpusAction {
    /// Write corpus files and a manifest into a directory
    Gen {
        #[arg(long)]
        out: PathBuf,
        /// comma-separated families (default: all)
        #[arg(long, value_delimiter = ',')]
        families: Vec<String>,
        /// per-family count, as family=n
        #[arg(long = "count")]
        counts: Vec<String>,
    },
}

impl Flags {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        if let Some(v) = self.grid_ppo {
            s.grid_ppo = v;
        }
        if let Some(v) = self.tmin {
            s.tmin = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.format {
            s.format = v;
        }
        if let Some(v) = self.workers {
            s.workers = v;
        }
        if self.no_timestamp {
            s.no_timestamp = true;
        }
        if self.cases.is_some() {
            s.cases = self.cases;
        }
        Ok(s)
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("realinterp: {e}");
            e.exit_code()
        }
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn dispatch(cli: Cli) -> Result<i32> {
    let mut settings = cli.flags.settings()?;
    match cli.command {
        Command::List => {
            let mut out = sink(&cli.flags.output)?;
            for s in registry() {
                writeln!(out, "{:<10} {}", s.name(), s.summary())?;
            }
            Ok(0)
        }
        Command::Suite { name, lattices, baselines, record_baselines } => {
            if !lattices.is_empty() {
                settings.lattices = lattices;
            }
            let base = match &baselines {
                Some(p) => Baselines::load(p)?,
                None => Baselines::checked_in(),
            };
            let todo: Vec<String> = if name == "all" {
                names().into_iter().map(String::from).collect()
            } else {
                vec![name]
            };
            let mut reports: Vec<VerificationReport> = Vec::new();
            for n in &todo {
                reports.push(run_suite(n, &settings, &base)?);
            }
            if let Some(path) = record_baselines {
                let mut b = if path.exists() { Baselines::load(&path)? } else { Baselines::default() };
                for r in &reports {
                    b.record(r);
                }
                b.save(&path)?;
            }
            let mut out = sink(&cli.flags.output)?;
            emit_all(&reports, settings.format, &mut *out)?;
            let failed = reports.iter().any(|r| r.status == Status::Fail);
            Ok(if failed { 1 } else { 0 })
        }
        Command::Corpus { action: CorpusAction::Gen { out, families, counts } } => {
            let fams = families.iter().map(|f| Family::parse(f)).collect::<Result<Vec<_>>>()?;
            let counts = counts
                .iter()
                .map(|c| {
                    let (f, n) = c.split_once('=').ok_or_else(|| usage(format!("expected family=n, got {c:?}")))?;
                    let n = n.parse::<usize>().map_err(|e| usage(format!("bad count {n:?}: {e}")))?;
                    Ok((Family::parse(f)?, n))
                })
                .collect::<Result<Vec<_>>>()?;
            let spec = CorpusSpec::new(&settings, &fams, &counts);
            let entries = gen_corpus(&spec)?;
            write_corpus(&spec, &entries, &out)?;
            eprintln!("wrote {} files to {}", entries.len(), out.display());
            Ok(0)
        }
        Command::Norm { which, input } => {
            let ev = evaluator_by_name(&which)?;
            let input = Input::load(&input)?;
            let grid = settings.grid()?;
            let v = ev.eval(&input, &grid)?;
            let mut out = sink(&cli.flags.output)?;
            match settings.format {
                Format::Json => {
                    serde_json::to_writer_pretty(&mut out, &v).map_err(|e| HarnessError::Internal(e.to_string()))?;
                    writeln!(out)?;
                }
                Format::Csv => {
                    writeln!(out, "norm,value,divergent")?;
                    writeln!(out, "\"{}\",{},{}", v.which.replace('"', "\"\""), v.value, v.divergent)?;
                }
                Format::Text => {
                    write!(out, "{} = {}", v.which, v.value)?;
                    if let Some(t) = v.truncated {
                        write!(out, " (divergent; {t} over the grid)")?;
                    }
                    writeln!(out)?;
                }
            }
            Ok(0)
        }
    }
}

fn emit_all(reports: &[VerificationReport], format: Format, out: &mut dyn Write) -> Result<()> {
    match (format, reports) {
        (_, [one]) => one.emit(format, out),
        (Format::Json, many) => {
            serde_json::to_writer_pretty(&mut *out, many).map_err(|e| HarnessError::Internal(e.to_string()))?;
            writeln!(out)?;
            Ok(())
        }
        (Format::Csv, many) => {
            // one header for the concatenation
            for (i, r) in many.iter().enumerate() {
                let mut buf = Vec::new();
                r.emit(Format::Csv, &mut buf)?;
                let text = String::from_utf8(buf).map_err(|e| HarnessError::Internal(e.to_string()))?;
                let body = if i == 0 { text.as_str() } else { text.split_once('\n').map_or("", |x| x.1) };
                out.write_all(body.as_bytes())?;
            }
            Ok(())
        }
        (Format::Text, many) => {
            for r in many {
                r.emit(Format::Text, out)?;
                writeln!(out)?;
            }
            Ok(())
        }
    }
}
