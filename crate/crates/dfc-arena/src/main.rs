use clap::Parser;

fn main() {
    let cli = dfc_arena::cli::Cli::parse();
    if let Err(err) = dfc_arena::cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
