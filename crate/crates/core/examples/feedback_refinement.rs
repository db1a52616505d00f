//! Weight feedback on the -20/0/20 degree users: the weakest direction gets
//! a larger weight each round and the pattern is re-optimized.

use ris_thz::scenario::{run_feedback_demo, ScenarioSpec};

fn main() -> ris_thz::Result<()> {
    let spec = ScenarioSpec {
        seed_count: 1,
        ..ScenarioSpec::default()
    };
    let result = run_feedback_demo(&spec)?;
    let cell = &result.cells[0];
    for h in &cell.history {
        let rrp: Vec<String> = h.last_measured_rrp.iter().map(|x| format!("{x:.2}")).collect();
        println!("round {} weights {:?} rrp [{}]", h.round, h.weights, rrp.join(", "));
    }
    for (k, a) in cell.directions.iter().enumerate() {
        println!(
            "{a:>5} deg: before {:.2} dBm, after {:.2} dBm",
            cell.rrp_before_feedback_dbm[k], cell.rrp_dbm[k]
        );
    }
    Ok(())
}
