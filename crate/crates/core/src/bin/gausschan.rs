use clap::Parser;
use gausschan::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
