use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use i3kit::corpus::{load_corpus, GroupingConfig, InputFormat};
use i3kit::report::{build_report, compare, validate, GroupBy, ReportError, ReportOptions};

#[derive(Parser)]
#[command(name = "i3kit", version, about = "Integrated citation impact (I3) with significance tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: InputFormat,
    /// GroupingConfig JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `min_share_percent` from the config.
    #[arg(long)]
    min_share: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check the input without computing indicators.
    Validate {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Write journal/country tables, pairwise tests and graph files.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "both", value_parser = parse_group_by)]
        group_by: GroupBy,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "I3KIT_THREADS", default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 300)]
        layout_iterations: usize,
        /// Record a timestamp in summary.json (breaks byte-identical reruns).
        #[arg(long)]
        stamp: bool,
    },
    /// Test citation distributions of journals against each other.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        /// Journal names; all journals when omitted.
        #[arg(long = "unit", value_delimiter = ',')]
        units: Vec<String>,
    },
}

fn parse_format(s: &str) -> Result<InputFormat, String> {
    s.parse()
}

fn parse_group_by(s: &str) -> Result<GroupBy, String> {
    s.parse()
}

fn read(path: &Path) -> Result<Vec<u8>, ReportError> {
    std::fs::read(path).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

fn load_config(args: &InputArgs) -> Result<(GroupingConfig, Vec<u8>), ReportError> {
    let bytes = match &args.config {
        Some(p) => read(p)?,
        None => Vec::new(),
    };
    let mut config = if bytes.is_empty() {
        GroupingConfig::default()
    } else {
        let text = String::from_utf8_lossy(&bytes);
        GroupingConfig::from_json(&text)?
    };
    if let Some(m) = &args.min_share {
        config.min_share_percent = i3kit::exact::parse_decimal(m).ok_or_else(|| {
            i3kit::corpus::CorpusError::Config(format!("--min-share `{m}` is not a decimal"))
        })?;
        config.validate()?;
    }
    Ok((config, bytes))
}

fn run(cli: Cli) -> Result<i32, ReportError> {
    match cli.command {
        Command::Validate { input } => {
            let bytes = read(&input.input)?;
            let config_text = match &input.config {
                Some(p) => Some(String::from_utf8_lossy(&read(p)?).into_owned()),
                None => None,
            };
            let outcome = validate(&bytes, input.format, config_text.as_deref());
            print!("{}", outcome.render());
            Ok(outcome.exit_code())
        }
        Command::Report { input, group_by, out, seed, threads, layout_iterations, stamp } => {
            let bytes = read(&input.input)?;
            let (config, config_bytes) = load_config(&input)?;
            let corpus = load_corpus(&bytes, input.format)?;
            let options = ReportOptions { group_by, seed, threads, stamp, layout_iterations };
            let bundle = build_report(&corpus, &config, &bytes, &config_bytes, &options)?;
            for w in &bundle.warnings {
                eprintln!("warning: {w}");
            }
            let written = bundle.write_to(&out)?;
            println!("wrote {} files to {}", written.len(), out.display());
            Ok(0)
        }
        Command::Compare { input, units } => {
            let bytes = read(&input.input)?;
            let (config, _) = load_config(&input)?;
            let corpus = load_corpus(&bytes, input.format)?;
            print!("{}", compare(&corpus, &config, &units)?.render());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
