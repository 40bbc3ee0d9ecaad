use clap::Parser;

fn main() {
    let cli = ciupath::cli::Cli::parse();
    if let Err(e) = ciupath::cli::run(cli) {
        eprintln!("ciupath: {}", e.to_string().replace('\n', " "));
        std::process::exit(e.exit_code());
    }
}
