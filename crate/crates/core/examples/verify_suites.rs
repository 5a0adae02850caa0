//! Runs every bundled verification suite and prints one line per check.

use std::time::Instant;

use sntp::verify::run_suites;

pub fn run() -> sntp::Result<bool> {
    let start = Instant::now();
    let reports = run_suites(None, 7, None)?;
    for r in &reports {
        println!("{r}");
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(reports.iter().all(|r| r.pass))
}

#[allow(dead_code)]
fn main() -> sntp::Result<()> {
    if !run()? {
        std::process::exit(1);
    }
    Ok(())
}
