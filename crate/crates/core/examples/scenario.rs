//! Runs a verification scenario programmatically and lists the CSV output.

use surfstokes::harness::{parse_config_str, run_scenario};

fn main() -> surfstokes::Result<()> {
    let cfg = parse_config_str("surface = flat_torus\nn_theta = 16\nn_phi = 16\nseed = 7")?;
    let out = std::env::temp_dir().join("surfstokes-example");
    let report = run_scenario("spectrum", &cfg.sim, &out)?;
    print!("{report}");
    for entry in std::fs::read_dir(&out)? {
        println!("wrote {}", entry?.path().display());
    }
    Ok(())
}
