//! Loading a bundled scenario, overriding it, and writing the output files
//! the command line produces.

use sntp::cli::{cmd_simulate, Overrides, ScenarioFile};

pub fn run(runs: usize) -> sntp::Result<()> {
    let s = ScenarioFile::bundled("example5_maxspeed")?;
    let out = std::env::temp_dir().join("sntp-scenario-example");
    let ov = Overrides {
        runs: Some(runs),
        seed: Some(7),
        trace: true,
        out: Some(out.clone()),
        ..Overrides::default()
    };
    let r = cmd_simulate(&s, &ov)?;
    println!("{}", serde_json::to_string_pretty(&r.summary.bands).map_err(sntp::Error::from)?);
    for f in ["outcomes.csv", "summary.json", "trajectories.csv"] {
        let text = std::fs::read_to_string(out.join(f))?;
        println!("{f}: {} lines, starts {:?}", text.lines().count(), text.lines().next().unwrap_or(""));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sntp::Result<()> {
    run(200)
}
