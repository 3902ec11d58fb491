fn main() {
    std::process::exit(stagebot_sim::cli::main_with(std::env::args_os()));
}
