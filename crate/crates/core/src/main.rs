use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    if let Some(workers) = workers_flag(&args) {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: cannot start {workers} workers: {e}");
            return ExitCode::from(2);
        }
    }
    let code = harmarea::cli::run(args, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}

/// Reads `--workers` ahead of full parsing so the thread pool exists before any work starts.
fn workers_flag(args: &[String]) -> Option<usize> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if let Some(v) = a.strip_prefix("--workers=") {
            return v.parse().ok();
        }
        if a == "--workers" {
            return it.next().and_then(|v| v.parse().ok());
        }
    }
    None
}
