use std::io;

fn main() {
    env_logger::init();
    let stdin = io::stdin();
    let code = wrangle::cli::run(
        std::env::args_os(),
        &mut stdin.lock(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}
