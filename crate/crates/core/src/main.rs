fn main() {
    copula_bounds::cli::configure_threads();
    let code = copula_bounds::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
