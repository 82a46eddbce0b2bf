use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use jqml_cli::{
    exit_code, generate_lines, json_lines_to_frame, parse_var, run, text_to_frame, write_libsvm, write_lines, GenConfig,
    OutputFormat, RunConfig,
};
use jqml_core::{Error, ModePolicy, DEFAULT_CAP};

#[derive(Parser)]
#[command(name = "jqml", version, about = "Run JSONiq queries with ML pipelines over columnar frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a query file and print one result item per line.
    Run {
        #[arg(long)]
        query: PathBuf,
        /// External variable binding; JSON values are bound as items, anything else as a string.
        #[arg(long = "var", value_name = "NAME=VALUE", value_parser = parse_var)]
        vars: Vec<(String, String)>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "json-lines")]
        format: OutputFormat,
        #[arg(long, default_value = "auto")]
        mode: ModePolicy,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Write a synthetic two-class dataset in the raw tagged-text format.
    GenData {
        #[arg(long, default_value_t = 1000)]
        rows: usize,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        margin: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Lines after the first `rows` go to this file.
        #[arg(long, requires = "test_output")]
        test_rows: Option<usize>,
        #[arg(long)]
        test_output: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Convert raw text or JSON-lines data to LibSVM.
    ToLibsvm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        from: InputFormat,
        #[arg(long, default_value = "label")]
        label_col: String,
        #[arg(long, default_value = "features")]
        features_col: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Text,
    JsonLines,
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { query, vars, output, format, mode, cap } => run(&RunConfig {
            query,
            vars,
            output,
            format,
            mode,
            cap,
        }),
        Command::GenData { rows, dim, margin, seed, test_rows, test_output, output } => {
            let total = rows + test_rows.unwrap_or(0);
            let lines = generate_lines(GenConfig { rows: total, dim, margin, seed });
            write_lines(&lines[..rows], &output)?;
            if let Some(path) = test_output {
                write_lines(&lines[rows..], &path)?;
            }
            Ok(())
        }
        Command::ToLibsvm { input, from, label_col, features_col, output } => {
            let text = fs::read_to_string(&input).map_err(|e| Error::io(input.display(), e))?;
            let frame = match from {
                InputFormat::Text => text_to_frame(&text)?,
                InputFormat::JsonLines => json_lines_to_frame(&text)?,
            };
            let mut out: Box<dyn Write> = match output {
                Some(path) => Box::new(BufWriter::new(fs::File::create(&path).map_err(|e| Error::io(path.display(), e))?)),
                None => Box::new(BufWriter::new(io::stdout().lock())),
            };
            write_libsvm(&frame, &label_col, &features_col, &mut out)?;
            out.flush().map_err(|e| Error::io("cannot write output", e))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
