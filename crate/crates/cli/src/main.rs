fn main() {
    std::process::exit(curve_impact_cli::run(std::env::args_os()));
}
