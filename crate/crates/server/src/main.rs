fn main() {
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    let code = inoculate_server::cli::run(std::env::args_os(), &mut out, &mut err);
    std::process::exit(code);
}
