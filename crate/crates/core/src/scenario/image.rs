use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::groups::optimize_directions;
use super::link::simulate_users;
use super::sweep::zero_state;
use super::{cell_rng, ScenarioSpec, Stream};
use crate::error::{Error, Result};
use crate::phy::{bit_errors, FrameLayout, UserAllocation};
use crate::ris::realize;
use crate::spgd::FeedbackState;

pub(crate) const IMAGE_TAG: u64 = 4;

/// 1-bit raster, row-major, 1 = black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

const GLYPHS: [(char, [&str; 7]); 3] = [
    ('A', [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('B', ["####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."]),
    ('C', [".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."]),
];

impl BitImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch {
                what: "image pixels",
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    /// 64×64 rendering of `A`, `B` or `C` from a 5×7 font scaled by 8.
    pub fn letter(ch: char) -> Result<Self> {
        let rows = GLYPHS
            .iter()
            .find(|(c, _)| *c == ch.to_ascii_uppercase())
            .map(|(_, r)| r)
            .ok_or_else(|| Error::invalid("glyph", format!("no glyph for {ch:?}")))?;
        let (size, scale, x0, y0) = (64, 8, 12, 4);
        let mut pixels = vec![0u8; size * size];
        for (r, row) in rows.iter().enumerate() {
            for (c, cell) in row.bytes().enumerate() {
                if cell != b'#' {
                    continue;
                }
                for y in 0..scale {
                    let base = (y0 + r * scale + y) * size + x0 + c * scale;
                    pixels[base..base + scale].fill(1);
                }
            }
        }
        Self::new(size, size, pixels)
    }

    pub fn to_pbm(&self) -> Vec<u8> {
        let mut out = format!("P4\n{} {}\n", self.width, self.height).into_bytes();
        for row in self.pixels.chunks(self.width.max(1)) {
            for chunk in row.chunks(8) {
                let mut byte = 0u8;
                for (i, &p) in chunk.iter().enumerate() {
                    byte |= (p & 1) << (7 - i);
                }
                out.push(byte);
            }
        }
        out
    }

    pub fn from_pbm(data: &[u8], source: &str) -> Result<Self> {
        let err = |m: String| Error::Parse {
            path: source.to_string(),
            line: 0,
            message: m,
        };
        if !data.starts_with(b"P4") {
            return Err(err("missing P4 magic".into()));
        }
        let mut pos = 2;
        let mut dims = [0usize; 2];
        for d in dims.iter_mut() {
            loop {
                match data.get(pos) {
                    Some(b'#') => {
                        while data.get(pos).is_some_and(|&b| b != b'\n') {
                            pos += 1;
                        }
                    }
                    Some(b) if b.is_ascii_whitespace() => pos += 1,
                    _ => break,
                }
            }
            let start = pos;
            while data.get(pos).is_some_and(u8::is_ascii_digit) {
                pos += 1;
            }
            *d = std::str::from_utf8(&data[start..pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err("bad width or height".into()))?;
        }
        if !data.get(pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(err("header not followed by whitespace".into()));
        }
        pos += 1;
        let [w, h] = dims;
        let stride = w.div_ceil(8);
        let raster = &data[pos..];
        if raster.len() < stride * h {
            return Err(err(format!("raster holds {} bytes, need {}", raster.len(), stride * h)));
        }
        let pixels = (0..h)
            .flat_map(|y| (0..w).map(move |x| (raster[y * stride + x / 8] >> (7 - x % 8)) & 1))
            .collect();
        Self::new(w, h, pixels)
    }

    pub fn read_pbm(path: &Path) -> Result<Self> {
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_pbm(&data, &path.display().to_string())
    }

    pub fn write_pbm(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_pbm()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImagePhase {
    Unbiased,
    Biased,
    Feedback,
}

impl ImagePhase {
    pub const ALL: [ImagePhase; 3] = [ImagePhase::Unbiased, ImagePhase::Biased, ImagePhase::Feedback];

    pub fn name(self) -> &'static str {
        match self {
            ImagePhase::Unbiased => "unbiased",
            ImagePhase::Biased => "biased",
            ImagePhase::Feedback => "feedback",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    pub phase: ImagePhase,
    pub rrp_dbm: Vec<f64>,
    pub sent_bits: Vec<usize>,
    pub errors: Vec<usize>,
    pub recovered: Vec<BitImage>,
}

impl PhaseOutcome {
    pub fn ber(&self) -> Vec<f64> {
        self.errors
            .iter()
            .zip(&self.sent_bits)
            .map(|(&e, &n)| e as f64 / n as f64)
            .collect()
    }
}

/// Image transfer to three users under one seed.
#[derive(Debug, Clone)]
pub struct ImageJob {
    pub seed_index: usize,
    pub angles: Vec<f64>,
    pub sources: Vec<BitImage>,
    pub phases: Vec<PhaseOutcome>,
    pub history: Vec<FeedbackState>,
}

impl ImageJob {
    pub fn phase(&self, p: ImagePhase) -> &PhaseOutcome {
        self.phases.iter().find(|o| o.phase == p).expect("every phase is run")
    }
}

#[derive(Debug, Clone)]
pub struct ImageDemoResult {
    pub jobs: Vec<ImageJob>,
}

/// Repeat `bits` until exactly `len` long.
pub(crate) fn tile(bits: &[u8], len: usize) -> Vec<u8> {
    bits.iter().copied().cycle().take(len).collect()
}

/// The default A, B, C sources.
pub fn default_sources() -> Vec<BitImage> {
    ['A', 'B', 'C']
        .into_iter()
        .map(|c| BitImage::letter(c).expect("built-in glyph"))
        .collect()
}

pub fn run_image_job(spec: &ScenarioSpec, sources: &[BitImage], seed_index: usize) -> Result<ImageJob> {
    if sources.len() != spec.image_angles.len() {
        return Err(Error::LengthMismatch {
            what: "source images",
            expected: spec.image_angles.len(),
            actual: sources.len(),
        });
    }
    let cell = (IMAGE_TAG << 32) | seed_index as u64;
    let model = spec.link_model()?;
    let angles = &spec.image_angles;
    let layout = FrameLayout::new(&spec.phy, UserAllocation::split_equal(spec.phy.rb_count, angles.len()))?;
    let min_cap = (0..angles.len()).map(|u| layout.payload_capacity(u)).min().unwrap_or(1);
    let frames = spec.image_min_bits.div_ceil(min_cap).max(1);
    let streams: Vec<Vec<u8>> = sources
        .iter()
        .enumerate()
        .map(|(u, img)| tile(&img.pixels, frames * layout.payload_capacity(u)))
        .collect();

    let opt = optimize_directions(
        spec,
        &model,
        &super::dedup_directions(angles),
        cell,
        spec.feedback_rounds,
    )?;
    let realize = |v| realize(&model.ris, &spec.response, v, spec.coupling);
    let states = [
        zero_state(spec, &model)?,
        realize(&opt.biased)?,
        realize(&opt.final_pattern)?,
    ];

    let bw = spec.phy.occupied_bandwidth();
    let mut awgn = cell_rng(spec.master_seed, cell, Stream::Awgn);
    let mut phases = Vec::with_capacity(3);
    for (phase, state) in ImagePhase::ALL.into_iter().zip(&states) {
        let links: Vec<_> = angles.iter().map(|&a| model.phy_link(state, a, bw)).collect();
        let rx = simulate_users(&layout, &streams, &links, &mut awgn)?;
        phases.push(PhaseOutcome {
            phase,
            rrp_dbm: angles.iter().map(|&a| model.components(state, a).total_dbm()).collect(),
            sent_bits: streams.iter().map(Vec::len).collect(),
            errors: streams.iter().zip(&rx).map(|(s, r)| bit_errors(s, r)).collect(),
            recovered: sources
                .iter()
                .zip(&rx)
                .map(|(src, r)| BitImage::new(src.width, src.height, r[..src.pixels.len()].to_vec()))
                .collect::<Result<_>>()?,
        });
    }
    Ok(ImageJob {
        seed_index,
        angles: angles.clone(),
        sources: sources.to_vec(),
        phases,
        history: opt.history,
    })
}

/// Image transfer in all three phases, once per seed.
pub fn run_image_demo(spec: &ScenarioSpec, sources: &[BitImage]) -> Result<ImageDemoResult> {
    spec.validate()?;
    if let Some(img) = sources.iter().find(|i| i.pixels.is_empty()) {
        return Err(Error::invalid(
            "image",
            format!("{}x{} image is empty", img.width, img.height),
        ));
    }
    let jobs = (0..spec.seed_count)
        .into_par_iter()
        .map(|s| run_image_job(spec, sources, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImageDemoResult { jobs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glyphs_differ_and_have_ink() {
        let imgs = default_sources();
        for i in &imgs {
            assert_eq!((i.width, i.height), (64, 64));
            let ink: usize = i.pixels.iter().map(|&p| p as usize).sum();
            assert!(ink > 500 && ink < 3000, "{ink}");
        }
        assert_ne!(imgs[0], imgs[1]);
        assert_ne!(imgs[1], imgs[2]);
    }

    #[test]
    fn pbm_round_trip() {
        let img = BitImage::letter('B').unwrap();
        let enc = img.to_pbm();
        assert!(enc.starts_with(b"P4\n64 64\n"));
        assert_eq!(enc.len(), 9 + 64 * 8);
        assert_eq!(BitImage::from_pbm(&enc, "b.pbm").unwrap(), img);
    }

    #[test]
    fn pbm_odd_width_and_comments() {
        let img = BitImage::new(10, 2, vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]).unwrap();
        let mut enc = b"P4\n# made by hand\n10 2\n".to_vec();
        enc.extend_from_slice(&img.to_pbm()[8..]);
        assert_eq!(BitImage::from_pbm(&enc, "x").unwrap(), img);
    }

    #[test]
    fn pbm_errors_name_source() {
        let e = BitImage::from_pbm(b"P1\n2 2\n", "bad.pbm").unwrap_err();
        assert!(e.to_string().contains("bad.pbm"));
        assert!(BitImage::from_pbm(b"P4\n64 64\n\x00", "short.pbm").is_err());
    }

    #[test]
    fn tiling() {
        assert_eq!(tile(&[1, 0, 1], 7), vec![1, 0, 1, 1, 0, 1, 1]);
    }
}
