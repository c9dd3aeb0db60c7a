use clap::Parser;

fn main() {
    let cli = asrel_cli::args::Cli::parse();
    match asrel_cli::run(cli) {
        Ok(Some(line)) => println!("{line}"),
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
