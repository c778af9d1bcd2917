use clap::Parser;

fn main() {
    let cli = gpvortex::cli::Cli::parse();
    std::process::exit(gpvortex::cli::run(cli));
}
