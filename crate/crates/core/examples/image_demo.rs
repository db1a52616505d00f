//! Send the letters A, B and C to users at -20, 0 and 20 degrees and write
//! the recovered bitmaps for every phase.

use ris_thz::scenario::image::default_sources;
use ris_thz::scenario::{emit_results, run_image_demo, Results, ScenarioSpec};

fn main() -> ris_thz::Result<()> {
    let spec = ScenarioSpec {
        seed_count: 1,
        ..ScenarioSpec::default()
    };
    let result = run_image_demo(&spec, &default_sources())?;
    for p in &result.jobs[0].phases {
        let ber: Vec<String> = p.ber().iter().map(|b| format!("{b:.2e}")).collect();
        println!("{:<9} ber [{}]", p.phase.name(), ber.join(", "));
    }
    let dir = std::env::temp_dir().join("ris_thz_image_demo");
    emit_results(&Results::Image(result), &dir)?;
    println!("bitmaps in {}", dir.display());
    Ok(())
}
