use clap::Parser;

fn main() {
    let cli = weylap_cli::Cli::parse();
    match weylap_cli::run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
