fn main() -> std::process::ExitCode {
    softgrip::cli::run(std::env::args_os())
}
