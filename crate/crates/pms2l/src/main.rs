use pms2l::cli;

fn main() {
    std::process::exit(cli::run());
}
