use rayon::prelude::*;

use super::link::{random_bits, simulate_users};
use super::objective::RrpObjective;
use super::sweep::{scaled_config, zero_state};
use super::{cell_rng, dedup_directions, median, ScenarioSpec, Stream};
use crate::channel::LinkModel;
use crate::error::Result;
use crate::phy::{ber_per_user, FrameLayout, UserAllocation};
use crate::ris::{initial_voltage_pattern, VoltagePattern};
use crate::spgd::{run_feedback_loop, run_spgd, FeedbackState, Objective, ObjectiveSpec, SpgdTrace};

pub(crate) const GROUP_TAG: u64 = 2;
pub(crate) const FEEDBACK_TAG: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRecord {
    pub group_id: usize,
    pub angle_deg: f64,
    pub rrp_dbm: f64,
    pub gain_db: f64,
    pub ber: f64,
    pub weight: f64,
}

/// One group under one seed. Per-direction vectors follow the printed
/// direction list, duplicates included.
#[derive(Debug, Clone)]
pub struct GroupCell {
    pub group_id: usize,
    pub seed_index: usize,
    pub directions: Vec<f64>,
    pub distinct: Vec<f64>,
    pub rrp_dbm: Vec<f64>,
    pub rrp_unbiased_dbm: Vec<f64>,
    /// Readings before any feedback round; equal to `rrp_dbm` without
    /// feedback.
    pub rrp_before_feedback_dbm: Vec<f64>,
    pub ber: Vec<f64>,
    pub weights: Vec<u32>,
    pub history: Vec<FeedbackState>,
    pub pattern: VoltagePattern,
    pub trace: SpgdTrace,
}

#[derive(Debug, Clone)]
pub struct GroupResult {
    /// Per-direction medians over seeds, group-major.
    pub records: Vec<GroupRecord>,
    pub cells: Vec<GroupCell>,
    /// Human-readable remarks, such as groups whose printed directions
    /// repeat.
    pub notes: Vec<String>,
}

/// Multi-beam SPGD on the distinct directions, then optional feedback.
pub(crate) struct Optimized {
    pub biased: VoltagePattern,
    pub trace: SpgdTrace,
    pub final_pattern: VoltagePattern,
    pub history: Vec<FeedbackState>,
}

pub(crate) fn optimize_directions(
    spec: &ScenarioSpec,
    model: &LinkModel,
    distinct: &[f64],
    cell: u64,
    rounds: usize,
) -> Result<Optimized> {
    let objective = ObjectiveSpec::uniform(distinct.to_vec())?;
    let mut meter = RrpObjective::new(
        model,
        &spec.response,
        spec.coupling,
        distinct,
        cell_rng(spec.master_seed, cell, Stream::Jitter),
    );
    let v0 = initial_voltage_pattern(&model.ris, &spec.response, distinct)?;
    let start = meter.reference(&v0)?;
    let cfg = scaled_config(&spec.spgd, &objective, &start, spec.master_seed, cell)?;
    let trace = run_spgd(&objective, &mut meter, &v0, &cfg)?;
    let biased = trace.best.clone();
    if rounds == 0 {
        return Ok(Optimized {
            final_pattern: biased.clone(),
            biased,
            trace,
            history: vec![FeedbackState::new(distinct.len())],
        });
    }
    let fb = run_feedback_loop(distinct, &mut meter, &biased, &cfg, rounds)?;
    Ok(Optimized {
        biased,
        trace,
        final_pattern: fb.pattern,
        history: fb.history,
    })
}

pub fn run_group(
    spec: &ScenarioSpec,
    group_id: usize,
    directions: &[f64],
    cell: u64,
    seed_index: usize,
    rounds: usize,
) -> Result<GroupCell> {
    let model = spec.link_model()?;
    let distinct = dedup_directions(directions);
    let opt = optimize_directions(spec, &model, &distinct, cell, rounds)?;
    let realize = |v: &VoltagePattern| crate::ris::realize(&model.ris, &spec.response, v, spec.coupling);
    let state = realize(&opt.final_pattern)?;
    let before = realize(&opt.biased)?;
    let zero = zero_state(spec, &model)?;
    let power = |s, a| model.components(s, a).total_dbm();

    let layout = FrameLayout::new(
        &spec.phy,
        UserAllocation::split_equal(spec.phy.rb_count, directions.len()),
    )?;
    let mut payload_rng = cell_rng(spec.master_seed, cell, Stream::Payload);
    let mut awgn = cell_rng(spec.master_seed, cell, Stream::Awgn);
    let streams: Vec<Vec<u8>> = (0..directions.len())
        .map(|u| random_bits(spec.frames_per_point * layout.payload_capacity(u), &mut payload_rng))
        .collect();
    let bw = spec.phy.occupied_bandwidth();
    let links: Vec<_> = directions.iter().map(|&a| model.phy_link(&state, a, bw)).collect();
    let rx = simulate_users(&layout, &streams, &links, &mut awgn)?;
    let final_weights = &opt.history.last().expect("history starts non-empty").weights;
    let weight_of = |a: f64| {
        let i = distinct
            .iter()
            .position(|&d| d == a)
            .expect("direction is in its own set");
        final_weights[i]
    };

    Ok(GroupCell {
        group_id,
        seed_index,
        directions: directions.to_vec(),
        rrp_dbm: directions.iter().map(|&a| power(&state, a)).collect(),
        rrp_unbiased_dbm: directions.iter().map(|&a| power(&zero, a)).collect(),
        rrp_before_feedback_dbm: directions.iter().map(|&a| power(&before, a)).collect(),
        ber: ber_per_user(&streams, &rx)?,
        weights: directions.iter().map(|&a| weight_of(a)).collect(),
        distinct,
        history: opt.history,
        pattern: opt.final_pattern,
        trace: opt.trace,
    })
}

fn summarize(cells: &[GroupCell], seeds: usize) -> Vec<GroupRecord> {
    let mut out = Vec::new();
    for group in cells.chunks(seeds) {
        let first = &group[0];
        for (k, &angle) in first.directions.iter().enumerate() {
            let col = |f: &dyn Fn(&GroupCell) -> f64| median(&group.iter().map(f).collect::<Vec<_>>());
            let rrp = col(&|c| c.rrp_dbm[k]);
            let unbiased = col(&|c| c.rrp_unbiased_dbm[k]);
            out.push(GroupRecord {
                group_id: first.group_id,
                angle_deg: angle,
                rrp_dbm: rrp,
                gain_db: rrp - unbiased,
                ber: col(&|c| c.ber[k]),
                weight: col(&|c| f64::from(c.weights[k])),
            });
        }
    }
    out
}

fn dedup_notes(groups: &[Vec<f64>]) -> Vec<String> {
    groups
        .iter()
        .enumerate()
        .filter_map(|(g, dirs)| {
            let distinct = dedup_directions(dirs);
            (distinct.len() != dirs.len()).then(|| {
                format!(
                    "group {}: directions {:?} repeat; optimized over distinct set {:?}",
                    g + 1,
                    dirs,
                    distinct
                )
            })
        })
        .collect()
}

fn run_groups(spec: &ScenarioSpec, groups: &[Vec<f64>], tag: u64, rounds: usize) -> Result<GroupResult> {
    spec.validate()?;
    let n = spec.seed_count;
    let jobs: Vec<(usize, usize)> = (0..groups.len()).flat_map(|g| (0..n).map(move |s| (g, s))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(g, s)| {
            let cell = (tag << 32) | (g * n + s) as u64;
            run_group(spec, g + 1, &groups[g], cell, s, rounds)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupResult {
        records: summarize(&cells, n),
        notes: dedup_notes(groups),
        cells,
    })
}

/// Every configured multi-beam group under every seed, without feedback.
pub fn run_multi_groups(spec: &ScenarioSpec) -> Result<GroupResult> {
    run_groups(spec, &spec.groups, GROUP_TAG, 0)
}

/// The three image-user directions with `feedback_rounds` weight-feedback
/// rounds after the initial optimization.
pub fn run_feedback_demo(spec: &ScenarioSpec) -> Result<GroupResult> {
    run_groups(
        spec,
        std::slice::from_ref(&spec.image_angles),
        FEEDBACK_TAG,
        spec.feedback_rounds,
    )
}
