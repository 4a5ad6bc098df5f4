mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};

fn kind(e: &anyhow::Error) -> &'static str {
    e.chain()
        .find_map(|c| c.downcast_ref::<xppg_core::Error>())
        .map(xppg_core::Error::kind)
        .unwrap_or_else(|| {
            if e.chain().any(|c| c.is::<std::io::Error>()) {
                "io"
            } else {
                "error"
            }
        })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            anyhow::bail!(xppg_core::Error::InvalidInput("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Fuse(a) => commands::fuse(a),
        Command::Fit(a) => commands::fit(a),
        Command::Score(a) => commands::score(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Refmetric(a) => commands::refmetric(a),
        Command::NoiseMix(a) => commands::noise_mix(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Subsample(a) => commands::subsample(a),
        Command::CrossMatrix(a) => commands::cross_matrix(a),
        Command::SynthCorpus(a) => commands::synth_corpus(a),
        Command::NoiseSweep(a) => commands::noise_sweep(a),
    }
}

fn main() -> ExitCode {
    let cmd = Cli::command();
    let argv = match config::args_from_env().and_then(|a| config::apply(&cmd, a)) {
        Ok(a) => a,
        Err(config::ConfigError(msg)) => {
            eprintln!("error: usage: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = match cmd.try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {}: {msg}", kind(&e));
            ExitCode::from(1)
        }
    }
}
