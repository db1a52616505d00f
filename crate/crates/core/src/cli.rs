//! Command-line front end.
//!
//! Every run resolves a [`RunConfig`], applies the global overrides, runs
//! one scenario to completion and writes its outputs plus `manifest.cfg`
//! (the resolved config and command line) into the output directory.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::channel::{apply_channel, Awgn};
use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::phy::io::{write_ber_report, write_payload, write_waveform, BerRecord};
use crate::phy::{bit_errors, FrameLayout};
use crate::scenario::{
    emit_results, run_feedback_demo, run_group, run_image_demo, run_multi_groups, run_single_sweep, BitImage,
    GroupCell, GroupResult, Results,
};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");
pub(crate) const BEAMFORM_TAG: u64 = 5;
pub(crate) const LINK_TAG: u64 = 6;

#[derive(Debug, Parser)]
#[command(name = "ris-thz", version = VERSION, about = "Reflective-surface link simulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Config file; omitted keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent scenario cells.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: u32,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize one pattern for the given directions and scan its field.
    Beamform {
        #[arg(long = "angle", required = true, allow_negative_numbers = true, value_parser = parse_angle)]
        angles: Vec<f64>,
    },
    /// Single-beam sweep over the configured angles.
    Sweep,
    /// Multi-beam groups; each `--group` is a comma-separated angle list.
    Multi {
        #[arg(long = "group", allow_hyphen_values = true, value_parser = parse_group)]
        groups: Vec<Vec<f64>>,
    },
    /// Three-user image transfer in the unbiased, biased and feedback phases.
    Image {
        /// Three P4 PBM files, comma separated; built-in letters otherwise.
        #[arg(long, value_delimiter = ',')]
        images: Vec<PathBuf>,
    },
    /// Weight feedback on the image-user directions.
    Feedback {
        #[arg(long)]
        rounds: usize,
    },
    /// One single-user frame through an AWGN channel at a fixed SNR.
    Link {
        #[arg(long = "snr-db", allow_negative_numbers = true)]
        snr_db: f64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        frames: u32,
    },
}

fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let a: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if a.is_finite() && a.abs() < 90.0 {
        Ok(a)
    } else {
        Err(format!("angle {a} is outside (-90, 90) degrees"))
    }
}

fn parse_group(s: &str) -> std::result::Result<Vec<f64>, String> {
    let g: Vec<f64> = s.split(',').map(parse_angle).collect::<std::result::Result<_, _>>()?;
    if g.is_empty() {
        return Err("empty group".into());
    }
    Ok(g)
}

/// Parse, run, report. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let command_line = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    match execute(&cli, &command_line) {
        Ok(files) => {
            for f in files {
                let _ = writeln!(out, "{}", f.display());
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Load the config and apply the global overrides.
pub fn resolve_config(global: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = global.seed {
        cfg.spec.master_seed = s;
    }
    if let Some(o) = &global.out {
        cfg.out_dir = o.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli, command_line: &str) -> Result<Vec<PathBuf>> {
    let mut cfg = resolve_config(&cli.global)?;
    match &cli.command {
        Command::Multi { groups } if !groups.is_empty() => cfg.spec.groups = groups.clone(),
        Command::Feedback { rounds } => cfg.spec.feedback_rounds = *rounds,
        _ => {}
    }
    cfg.spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.jobs as usize)
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    let dir = cfg.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files = pool.install(|| run_command(&cli.command, &cfg, &dir))?;
    files.push(write_manifest(&cfg, command_line, &dir)?);
    Ok(files)
}

fn run_command(command: &Command, cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let spec = &cfg.spec;
    match command {
        Command::Beamform { angles } => run_beamform(cfg, angles, dir),
        Command::Sweep => emit_results(&Results::Sweep(run_single_sweep(spec)?), dir),
        Command::Multi { .. } => emit_results(&Results::Groups(run_multi_groups(spec)?), dir),
        Command::Image { images } => {
            let sources = if images.is_empty() {
                crate::scenario::image::default_sources()
            } else {
                images
                    .iter()
                    .map(|p| BitImage::read_pbm(p))
                    .collect::<Result<Vec<_>>>()?
            };
            emit_results(&Results::Image(run_image_demo(spec, &sources)?), dir)
        }
        Command::Feedback { .. } => {
            let r = run_feedback_demo(spec)?;
            let mut files = emit_results(&Results::Groups(r.clone()), dir)?;
            files.push(write_feedback_history(&r, &dir.join("feedback_history.csv"))?);
            Ok(files)
        }
        Command::Link { snr_db, frames } => run_link(cfg, *snr_db, *frames as usize, dir),
    }
}

fn write_manifest(cfg: &RunConfig, command_line: &str, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("manifest.cfg");
    let text = format!(
        "# command: {command_line}\n# version: {} schema {SCHEMA_VERSION}\n{}",
        env!("CARGO_PKG_VERSION"),
        cfg.to_text()
    );
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn csv_file(path: &Path) -> Result<csv::Writer<fs::File>> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<PathBuf> {
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn write_feedback_history(r: &GroupResult, path: &Path) -> Result<PathBuf> {
    let mut w = csv_file(path)?;
    w.write_record(["seed_index", "round", "angle_deg", "weight", "measured_rrp_dbm"])?;
    for c in &r.cells {
        for h in &c.history {
            for (k, &a) in c.distinct.iter().enumerate() {
                let rrp = h.last_measured_rrp.get(k).map_or(String::new(), |x| format!("{x:.6}"));
                w.write_record([
                    c.seed_index.to_string(),
                    h.round.to_string(),
                    format!("{a:.6}"),
                    h.weights[k].to_string(),
                    rrp,
                ])?;
            }
        }
    }
    finish(w, path)
}

/// Optimize a single pattern toward `angles` under the master seed and
/// return the resulting cell.
pub fn beamform(cfg: &RunConfig, angles: &[f64]) -> Result<GroupCell> {
    run_group(&cfg.spec, 1, angles, BEAMFORM_TAG << 32, 0, 0)
}

fn run_beamform(cfg: &RunConfig, angles: &[f64], dir: &Path) -> Result<Vec<PathBuf>> {
    let cell = beamform(cfg, angles)?;
    let model = cfg.spec.link_model()?;
    let state = crate::ris::realize(&model.ris, &cfg.spec.response, &cell.pattern, cfg.spec.coupling)?;

    let pattern = dir.join("pattern.csv");
    let mut w = csv_file(&pattern)?;
    w.write_record(["element_index", "voltage_v"])?;
    for (i, v) in cell.pattern.as_slice().iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    let pattern = finish(w, &pattern)?;

    let trace = dir.join("trace.csv");
    let f = fs::File::create(&trace).map_err(|e| Error::io(&trace, e))?;
    cell.trace.write_csv(f)?;

    let field = dir.join("field.csv");
    let mut w = csv_file(&field)?;
    w.write_record(["angle_deg", "power_dbm"])?;
    let scan: Vec<f64> = (-178..=178).map(|i| f64::from(i) * 0.5).collect();
    for s in model.field_scan(&state, &scan) {
        w.write_record([format!("{:.1}", s.angle), format!("{:.6}", s.power_dbm)])?;
    }
    let field = finish(w, &field)?;

    let summary = dir.join("beamform.csv");
    let mut w = csv_file(&summary)?;
    w.write_record(["angle_deg", "rrp_dbm", "rrp_unbiased_dbm", "gain_db", "ber"])?;
    for (k, &a) in cell.directions.iter().enumerate() {
        w.write_record([
            format!("{a:.6}"),
            format!("{:.6}", cell.rrp_dbm[k]),
            format!("{:.6}", cell.rrp_unbiased_dbm[k]),
            format!("{:.6}", cell.rrp_dbm[k] - cell.rrp_unbiased_dbm[k]),
            format!("{:.8}", cell.ber[k]),
        ])?;
    }
    let summary = finish(w, &summary)?;
    Ok(vec![pattern, trace, field, summary])
}

fn run_link(cfg: &RunConfig, snr_db: f64, frames: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    use crate::scenario::{cell_rng, Stream};
    let layout = FrameLayout::single_user(&cfg.spec.phy)?;
    let cell = LINK_TAG << 32;
    let mut payload_rng = cell_rng(cfg.spec.master_seed, cell, Stream::Payload);
    let mut awgn_rng = cell_rng(cfg.spec.master_seed, cell, Stream::Awgn);
    let cap = layout.payload_capacity(0);
    let sent = crate::scenario::link::random_bits(frames * cap, &mut payload_rng);
    let mut received = Vec::with_capacity(sent.len());
    let mut first_waveform = None;
    for chunk in sent.chunks(cap) {
        let (_, wave) = layout.transmit(&[chunk.to_vec()])?;
        let noise = Awgn::from_snr_db(snr_db, wave.mean_power());
        let rx = apply_channel(
            &wave.samples,
            num_complex::Complex64::new(1.0, 0.0),
            noise,
            &mut awgn_rng,
        );
        let frame = layout.receive(&rx, noise.variance)?;
        received.extend_from_slice(&frame.bits[0][..chunk.len()]);
        first_waveform.get_or_insert(wave);
    }
    let tx_payload = dir.join("tx_payload.bin");
    write_payload(&tx_payload, &sent)?;
    let rx_payload = dir.join("rx_payload.bin");
    write_payload(&rx_payload, &received)?;
    let waveform = dir.join("tx_waveform.iq");
    write_waveform(&waveform, first_waveform.as_ref().expect("at least one frame"))?;
    let ber = dir.join("ber.csv");
    write_ber_report(
        &ber,
        &[BerRecord {
            user_id: 1,
            sent_bits: sent.len(),
            errors: bit_errors(&sent, &received),
        }],
    )?;
    Ok(vec![tx_payload, rx_payload, waveform, ber])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("ris-thz").chain(args.iter().copied()))
    }

    #[test]
    fn sweep_with_seed() {
        let cli = parse(&["sweep", "--seed", "7"]).unwrap();
        assert!(matches!(cli.command, Command::Sweep));
        let cfg = resolve_config(&cli.global).unwrap();
        assert_eq!(cfg.spec.master_seed, 7);
    }

    #[test]
    fn group_with_negative_angles() {
        let cli = parse(&["multi", "--group", "-50,-20,50", "--group", "40,50,60"]).unwrap();
        match cli.command {
            Command::Multi { groups } => assert_eq!(groups, vec![vec![-50.0, -20.0, 50.0], vec![40.0, 50.0, 60.0]]),
            c => panic!("{c:?}"),
        }
    }

    #[test]
    fn angle_out_of_range_is_usage_error() {
        let e = parse(&["beamform", "--angle", "95"]).unwrap_err();
        assert!(e.to_string().contains("95"));
        assert!(parse(&["beamform", "--angle", "-30", "--angle", "20"]).is_ok());
    }

    #[test]
    fn exit_codes() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_with(["ris-thz", "sweep", "--bogus"], &mut o, &mut e), 2);
        assert!(String::from_utf8_lossy(&e).contains("--bogus"));
        assert_eq!(run_with(["ris-thz", "--version"], &mut o, &mut e), 0);
        assert!(String::from_utf8_lossy(&o).contains("0.1.0 (config schema 1)"));
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_with(["ris-thz", "sweep", "--config", "/nonexistent/x.cfg"], &mut o, &mut e);
        assert_eq!(code, 1);
        assert!(String::from_utf8_lossy(&e).contains("/nonexistent/x.cfg"));
    }
}
