//! Three simultaneous beams with one pattern, one user per direction.

use ris_thz::cli::beamform;
use ris_thz::config::RunConfig;

fn main() -> ris_thz::Result<()> {
    let cfg = RunConfig::default();
    let cell = beamform(&cfg, &[-50.0, -20.0, 50.0])?;
    println!("angle_deg,rrp_dbm,gain_db,ber");
    for (k, a) in cell.directions.iter().enumerate() {
        println!(
            "{a},{:.2},{:.2},{:.2e}",
            cell.rrp_dbm[k],
            cell.rrp_dbm[k] - cell.rrp_unbiased_dbm[k],
            cell.ber[k]
        );
    }
    Ok(())
}
