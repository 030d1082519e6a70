use clap::Parser;

fn main() {
    let args = funnel_dae::cli::Args::parse();
    let code = funnel_dae::cli::dispatch(args, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
