use std::fs;
use std::path::{Path, PathBuf};

use super::groups::GroupResult;
use super::image::{ImageDemoResult, ImagePhase};
use super::sweep::{SweepRecord, SweepResult};
use super::GroupRecord;
use crate::error::{Error, Result};
use crate::phy::io::{write_ber_report, BerRecord};

pub const SWEEP_HEADER: [&str; 6] = [
    "angle_deg",
    "rrp_biased_dbm",
    "rrp_unbiased_dbm",
    "gain_db",
    "ber_biased",
    "ber_unbiased",
];

pub const GROUP_HEADER: [&str; 6] = ["group_id", "angle_deg", "rrp_dbm", "gain_db", "ber", "weight"];

pub enum Results {
    Sweep(SweepResult),
    Groups(GroupResult),
    Image(ImageDemoResult),
}

fn db(x: f64) -> String {
    format!("{x:.6}")
}

fn ratio(x: f64) -> String {
    format!("{x:.8}")
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid("csv", format!("{other:?}")),
    })?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_sweep_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    write_rows(
        path,
        &SWEEP_HEADER,
        records.iter().map(|r| {
            vec![
                db(r.angle_deg),
                db(r.rrp_biased_dbm),
                db(r.rrp_unbiased_dbm),
                db(r.gain_db),
                ratio(r.ber_biased),
                ratio(r.ber_unbiased),
            ]
        }),
    )
}

pub fn write_group_csv(path: &Path, records: &[GroupRecord]) -> Result<()> {
    write_rows(
        path,
        &GROUP_HEADER,
        records.iter().map(|r| {
            vec![
                r.group_id.to_string(),
                db(r.angle_deg),
                db(r.rrp_dbm),
                db(r.gain_db),
                ratio(r.ber),
                db(r.weight),
            ]
        }),
    )
}

fn emit_sweep(r: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let main = dir.join("sweep.csv");
    write_sweep_csv(&main, &r.records)?;
    let cells = dir.join("sweep_seeds.csv");
    write_rows(
        &cells,
        &[
            "angle_deg",
            "seed_index",
            "rrp_biased_dbm",
            "rrp_unbiased_dbm",
            "gain_db",
            "ber_biased",
            "ber_unbiased",
            "snr_biased_db",
            "snr_unbiased_db",
        ],
        r.cells.iter().map(|c| {
            vec![
                db(c.record.angle_deg),
                c.seed_index.to_string(),
                db(c.record.rrp_biased_dbm),
                db(c.record.rrp_unbiased_dbm),
                db(c.record.gain_db),
                ratio(c.record.ber_biased),
                ratio(c.record.ber_unbiased),
                db(c.snr_biased_db),
                db(c.snr_unbiased_db),
            ]
        }),
    )?;
    Ok(vec![main, cells])
}

fn emit_groups(r: &GroupResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let main = dir.join("groups.csv");
    write_group_csv(&main, &r.records)?;
    let cells = dir.join("groups_seeds.csv");
    let rows = r.cells.iter().flat_map(|c| {
        c.directions.iter().enumerate().map(move |(k, &a)| {
            vec![
                c.group_id.to_string(),
                c.seed_index.to_string(),
                db(a),
                db(c.rrp_dbm[k]),
                db(c.rrp_unbiased_dbm[k]),
                db(c.rrp_before_feedback_dbm[k]),
                ratio(c.ber[k]),
                c.weights[k].to_string(),
            ]
        })
    });
    write_rows(
        &cells,
        &[
            "group_id",
            "seed_index",
            "angle_deg",
            "rrp_dbm",
            "rrp_unbiased_dbm",
            "rrp_before_feedback_dbm",
            "ber",
            "weight",
        ],
        rows,
    )?;
    let notes = dir.join("groups_notes.txt");
    let mut text = String::new();
    for n in &r.notes {
        text.push_str(n);
        text.push('\n');
    }
    fs::write(&notes, text).map_err(|e| Error::io(&notes, e))?;
    Ok(vec![main, cells, notes])
}

fn emit_image(r: &ImageDemoResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let table = dir.join("image_seeds.csv");
    let rows = r.jobs.iter().flat_map(|job| {
        job.phases.iter().flat_map(move |p| {
            let ber = p.ber();
            (0..job.angles.len()).map(move |u| {
                vec![
                    job.seed_index.to_string(),
                    p.phase.name().to_string(),
                    (u + 1).to_string(),
                    db(job.angles[u]),
                    db(p.rrp_dbm[u]),
                    p.sent_bits[u].to_string(),
                    p.errors[u].to_string(),
                    ratio(ber[u]),
                ]
            })
        })
    });
    write_rows(
        &table,
        &[
            "seed_index",
            "phase",
            "user_id",
            "angle_deg",
            "rrp_dbm",
            "sent_bits",
            "errors",
            "ber",
        ],
        rows,
    )?;
    out.push(table);

    for phase in ImagePhase::ALL {
        let users = r.jobs.first().map_or(0, |j| j.angles.len());
        let records: Vec<BerRecord> = (0..users)
            .map(|u| {
                let (sent, errors) = r.jobs.iter().fold((0, 0), |(s, e), j| {
                    let p = j.phase(phase);
                    (s + p.sent_bits[u], e + p.errors[u])
                });
                BerRecord {
                    user_id: u as u32 + 1,
                    sent_bits: sent,
                    errors,
                }
            })
            .collect();
        let path = dir.join(format!("ber_{}.csv", phase.name()));
        write_ber_report(&path, &records)?;
        out.push(path);
    }

    if let Some(job) = r.jobs.first() {
        for (u, src) in job.sources.iter().enumerate() {
            let path = dir.join(format!("source_user{}.pbm", u + 1));
            src.write_pbm(&path)?;
            out.push(path);
        }
        for p in &job.phases {
            for (u, img) in p.recovered.iter().enumerate() {
                let path = dir.join(format!("recovered_{}_user{}.pbm", p.phase.name(), u + 1));
                img.write_pbm(&path)?;
                out.push(path);
            }
        }
    }
    Ok(out)
}

/// Write the tables (and images) for `results` into `dir`, creating it if
/// needed. Returns the files written.
pub fn emit_results(results: &Results, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    match results {
        Results::Sweep(r) => emit_sweep(r, dir),
        Results::Groups(r) => emit_groups(r, dir),
        Results::Image(r) => emit_image(r, dir),
    }
}
