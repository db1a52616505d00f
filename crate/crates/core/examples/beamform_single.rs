//! Steer one beam to -20 degrees and report the gain over the unbiased surface.

use ris_thz::cli::beamform;
use ris_thz::config::RunConfig;

fn main() -> ris_thz::Result<()> {
    let cfg = RunConfig::default();
    let cell = beamform(&cfg, &[-20.0])?;
    let gain = cell.rrp_dbm[0] - cell.rrp_unbiased_dbm[0];
    println!(
        "rrp {:.2} dBm, unbiased {:.2} dBm, gain {gain:.2} dB",
        cell.rrp_dbm[0], cell.rrp_unbiased_dbm[0]
    );
    println!(
        "spgd: {} steps, {} measurements, ber {:.2e}",
        cell.trace.records.len(),
        cell.trace.measurements,
        cell.ber[0]
    );
    Ok(())
}
