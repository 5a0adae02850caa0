//! The coin-toss ladder: a process whose outcome distribution is known in
//! closed form.

use sntp::engine::example3_process;

pub fn run(runs: usize) -> sntp::Result<()> {
    let d = example3_process(1, runs)?;
    for o in d.outcomes.iter().take(6) {
        println!(
            "j={:<2} mass {:.4} (exact {:.4})  value {:.10} (exact {:.10})",
            o.j, o.mass, o.exact_mass, o.value, o.exact_value
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sntp::Result<()> {
    run(10_000)
}
