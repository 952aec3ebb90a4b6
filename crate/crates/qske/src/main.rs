use clap::Parser;

use qske::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    let code = run(&cli, &mut stdout, &mut stderr);
    std::process::exit(code);
}
