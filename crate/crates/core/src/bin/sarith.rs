fn main() {
    std::process::exit(stochastic_arith::cli::run(std::env::args_os()));
}
