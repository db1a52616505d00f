//! Single-beam sweep from -50 to 60 degrees with three seeds.

use ris_thz::scenario::{run_single_sweep, ScenarioSpec};

fn main() -> ris_thz::Result<()> {
    let spec = ScenarioSpec {
        seed_count: 3,
        ..ScenarioSpec::default()
    };
    let result = run_single_sweep(&spec)?;
    println!("angle_deg,gain_db,ber_biased,ber_unbiased");
    for r in &result.records {
        println!(
            "{},{:.2},{:.2e},{:.3}",
            r.angle_deg, r.gain_db, r.ber_biased, r.ber_unbiased
        );
    }
    Ok(())
}
