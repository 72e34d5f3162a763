use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nlstrain_cli::{run_file, Command};

#[derive(Parser)]
#[command(name = "nlstrain", version, about = "Soliton-train experiments for nonlinear Schrödinger equations")]
struct Args {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (code, written) = run_file(args.command, &args.config, args.out.as_deref(), &mut |line| println!("{line}"));
    match written {
        Some(w) => println!("wrote {} and {}", w.csv.display(), w.json.display()),
        None => eprintln!("{} failed with exit code {code}; see error.json", args.command.name()),
    }
    ExitCode::from(code as u8)
}
