use std::io::Write;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    if let Some(threads) = std::env::var("HYPERGCN_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if threads > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
                log::warn!("could not cap worker threads: {e}");
            }
        }
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = hypergcn::cli::run(std::env::args_os(), &mut out);
    let _ = out.flush();
    std::process::exit(code);
}
