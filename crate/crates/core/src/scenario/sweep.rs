use rayon::prelude::*;

use super::link::{random_bits, simulate_users};
use super::objective::RrpObjective;
use super::{cell_rng, median, ScenarioSpec, Stream};
use crate::channel::LinkModel;
use crate::error::Result;
use crate::phy::{compute_ber, FrameLayout};
use crate::ris::{initial_voltage_pattern, ReflectionState, VoltagePattern};
use crate::spgd::{run_spgd, ObjectiveSpec, SpgdConfig, SpgdTrace};

pub(crate) const SWEEP_TAG: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub angle_deg: f64,
    pub rrp_biased_dbm: f64,
    pub rrp_unbiased_dbm: f64,
    pub gain_db: f64,
    pub ber_biased: f64,
    pub ber_unbiased: f64,
}

/// One (angle, seed) run.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub seed_index: usize,
    pub record: SweepRecord,
    pub pattern: VoltagePattern,
    pub trace: SpgdTrace,
    pub snr_biased_db: f64,
    pub snr_unbiased_db: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Per-angle medians over seeds.
    pub records: Vec<SweepRecord>,
    /// Angle-major, seed-minor.
    pub cells: Vec<SweepCell>,
}

/// Seeded SPGD settings with the relative gain scaled by the objective of
/// the starting pattern.
pub(crate) fn scaled_config(
    base: &SpgdConfig,
    objective: &ObjectiveSpec,
    readings: &[f64],
    master: u64,
    cell: u64,
) -> Result<SpgdConfig> {
    use rand::Rng;
    let y0 = objective.combine(readings)?;
    Ok(SpgdConfig {
        gain: base.gain / y0.max(f64::MIN_POSITIVE),
        seed: cell_rng(master, cell, Stream::Spgd).random(),
        ..base.clone()
    })
}

pub(crate) fn zero_state(spec: &ScenarioSpec, model: &LinkModel) -> Result<ReflectionState> {
    crate::ris::realize(
        &model.ris,
        &spec.response,
        &VoltagePattern::zeros(model.ris.element_count),
        spec.coupling,
    )
}

/// Optimize a single beam at `angle` and measure it against the zero-bias
/// surface, both in received power and in decoded BER.
pub fn run_single_beam(spec: &ScenarioSpec, angle: f64, cell: u64, seed_index: usize) -> Result<SweepCell> {
    let model = spec.link_model()?;
    let dirs = [angle];
    let objective = ObjectiveSpec::uniform(dirs.to_vec())?;
    let mut meter = RrpObjective::new(
        &model,
        &spec.response,
        spec.coupling,
        &dirs,
        cell_rng(spec.master_seed, cell, Stream::Jitter),
    );
    let v0 = initial_voltage_pattern(&model.ris, &spec.response, &dirs)?;
    let start = crate::spgd::Objective::reference(&mut meter, &v0)?;
    let cfg = scaled_config(&spec.spgd, &objective, &start, spec.master_seed, cell)?;
    let trace = run_spgd(&objective, &mut meter, &v0, &cfg)?;

    let biased = meter.state(&trace.best)?;
    let unbiased = zero_state(spec, &model)?;
    let rrp_biased = model.components(&biased, angle).total_dbm();
    let rrp_unbiased = model.components(&unbiased, angle).total_dbm();

    let layout = FrameLayout::single_user(&spec.phy)?;
    let bw = spec.phy.occupied_bandwidth();
    let mut payload_rng = cell_rng(spec.master_seed, cell, Stream::Payload);
    let mut awgn = cell_rng(spec.master_seed, cell, Stream::Awgn);
    let bits = random_bits(spec.frames_per_point * layout.payload_capacity(0), &mut payload_rng);
    let link_b = model.phy_link(&biased, angle, bw);
    let link_u = model.phy_link(&unbiased, angle, bw);
    let rx_b = simulate_users(&layout, std::slice::from_ref(&bits), &[link_b], &mut awgn)?;
    let rx_u = simulate_users(&layout, std::slice::from_ref(&bits), &[link_u], &mut awgn)?;

    Ok(SweepCell {
        seed_index,
        record: SweepRecord {
            angle_deg: angle,
            rrp_biased_dbm: rrp_biased,
            rrp_unbiased_dbm: rrp_unbiased,
            gain_db: rrp_biased - rrp_unbiased,
            ber_biased: compute_ber(&bits, &rx_b[0])?,
            ber_unbiased: compute_ber(&bits, &rx_u[0])?,
        },
        pattern: trace.best.clone(),
        trace,
        snr_biased_db: link_b.snr_db(),
        snr_unbiased_db: link_u.snr_db(),
    })
}

pub(crate) fn sweep_cell_id(angle_index: usize, seed_index: usize, seeds: usize) -> u64 {
    (SWEEP_TAG << 32) | (angle_index * seeds + seed_index) as u64
}

/// Every sweep angle under every seed; records hold per-angle medians.
pub fn run_single_sweep(spec: &ScenarioSpec) -> Result<SweepResult> {
    spec.validate()?;
    let n = spec.seed_count;
    let jobs: Vec<(usize, usize)> = (0..spec.sweep_angles.len())
        .flat_map(|a| (0..n).map(move |s| (a, s)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(a, s)| run_single_beam(spec, spec.sweep_angles[a], sweep_cell_id(a, s, n), s))
        .collect::<Result<Vec<_>>>()?;
    let records = cells
        .chunks(n)
        .map(|group| {
            let col = |f: fn(&SweepRecord) -> f64| median(&group.iter().map(|c| f(&c.record)).collect::<Vec<_>>());
            let biased = col(|r| r.rrp_biased_dbm);
            let unbiased = col(|r| r.rrp_unbiased_dbm);
            SweepRecord {
                angle_deg: group[0].record.angle_deg,
                rrp_biased_dbm: biased,
                rrp_unbiased_dbm: unbiased,
                gain_db: biased - unbiased,
                ber_biased: col(|r| r.ber_biased),
                ber_unbiased: col(|r| r.ber_unbiased),
            }
        })
        .collect();
    Ok(SweepResult { records, cells })
}
