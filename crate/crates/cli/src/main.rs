use clap::Parser;

fn main() {
    let cli = match fairdiv_cli::Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits 0 for --help/--version and 2 for usage errors.
        Err(err) => err.exit(),
    };
    std::process::exit(fairdiv_cli::run(cli));
}
