use clap::Parser;
use gradflow_cli::{report, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("GRADFLOW_LOG")).init();
    let cli = Cli::parse();
    match gradflow_cli::run(&cli) {
        Ok(rep) => println!("{}", report::to_json(&rep)),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
