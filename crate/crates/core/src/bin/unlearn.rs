fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("UNLEARN_LOG", "error")).init();
    std::process::exit(graph_unlearn::cli::run(std::env::args_os()));
}
