//! Template matching as a search space.
//!
//! A position is the top-left anchor of a template window. The target
//! template scores a position as found when its mean absolute error (MAE)
//! against the image is below `tau_target`; each evidence template is scored
//! at the same anchor against `tau_evidence`.

mod pgm;
mod synth;

pub use pgm::{decode_pgm, encode_pgm, load_pgm, save_pgm, PgmError};
pub use synth::{generate_synthetic, SyntheticConfig, SyntheticImage};

use crate::grid::{Coord, Dims};
use crate::oracle::{SearchSpace, VisitOutcome};
use crate::search::{run_search, Algorithm, Params};
use crate::seed::pair_rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("pixel count {got} does not match {width}x{height}")]
    PixelCount { width: u32, height: u32, got: usize },
    #[error("template {tw}x{th} at {anchor} overflows the {iw}x{ih} image")]
    Overflow { tw: u32, th: u32, iw: u32, ih: u32, anchor: Coord },
    #[error("cannot average an empty patch list")]
    NoPatches,
    #[error("patch {index} is {got:?}, expected {expected:?}")]
    DimensionMismatch { index: usize, expected: (u32, u32), got: (u32, u32) },
    #[error("evidence offset ({dx},{dy}) lies beyond radius {delta}")]
    OffsetBeyondRadius { dx: i32, dy: i32, delta: u32 },
    #[error("templates do not fit in the {0}x{1} image")]
    ImageTooSmall(u32, u32),
    #[error("target template matches nowhere below tau_target")]
    NoTarget,
    #[error("ambiguous target: both {0} and {1} score below tau_target")]
    AmbiguousTarget(Coord, Coord),
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, TemplateError> {
        if pixels.len() != width as usize * height as usize {
            return Err(TemplateError::PixelCount { width, height, got: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        Self { width, height, pixels: vec![value; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.pixels[y as usize * self.width as usize + x as usize] = v;
    }

    fn row(&self, x: u32, y: u32, len: u32) -> &[u8] {
        let start = y as usize * self.width as usize + x as usize;
        &self.pixels[start..start + len as usize]
    }

    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Result<GrayImage, TemplateError> {
        self.check_fits(w, h, Coord::new(x, y))?;
        let pixels = (y..y + h).flat_map(|r| self.row(x, r, w).iter().copied()).collect();
        GrayImage::new(w, h, pixels)
    }

    /// Copies `patch` into this image with its top-left corner at `(x, y)`.
    pub fn paste(&mut self, patch: &GrayImage, x: u32, y: u32) -> Result<(), TemplateError> {
        self.check_fits(patch.width, patch.height, Coord::new(x, y))?;
        for r in 0..patch.height {
            let start = (y + r) as usize * self.width as usize + x as usize;
            self.pixels[start..start + patch.width as usize].copy_from_slice(patch.row(0, r, patch.width));
        }
        Ok(())
    }

    fn check_fits(&self, w: u32, h: u32, anchor: Coord) -> Result<(), TemplateError> {
        if anchor.x as u64 + w as u64 > self.width as u64 || anchor.y as u64 + h as u64 > self.height as u64 {
            return Err(TemplateError::Overflow { tw: w, th: h, iw: self.width, ih: self.height, anchor });
        }
        Ok(())
    }
}

fn abs_diff_sum(template: &GrayImage, image: &GrayImage, anchor: Coord, limit: u64) -> u64 {
    let mut sum = 0u64;
    for r in 0..template.height {
        let a = template.row(0, r, template.width);
        let b = image.row(anchor.x, anchor.y + r, template.width);
        sum += a.iter().zip(b).map(|(&p, &q)| p.abs_diff(q) as u64).sum::<u64>();
        if sum >= limit {
            break;
        }
    }
    sum
}

/// Mean absolute error between `template` and the image window at `anchor`.
pub fn mae(template: &GrayImage, image: &GrayImage, anchor: Coord) -> Result<f64, TemplateError> {
    image.check_fits(template.width, template.height, anchor)?;
    let sum = abs_diff_sum(template, image, anchor, u64::MAX);
    Ok(sum as f64 / (template.width as f64 * template.height as f64))
}

/// `mae(..) < tau`, stopping once the running sum rules it out.
fn mae_below(template: &GrayImage, image: &GrayImage, anchor: Coord, tau: f64) -> bool {
    if tau > 255.0 {
        return true;
    }
    if tau.is_nan() || tau <= 0.0 {
        return false;
    }
    let area = template.width as f64 * template.height as f64;
    // smallest integer sum whose mean is not below tau, using the same
    // division as `mae` so the two agree exactly
    let mut limit = (tau * area).max(0.0).min(u32::MAX as f64) as u64;
    while limit > 0 && (limit - 1) as f64 / area >= tau {
        limit -= 1;
    }
    while (limit as f64) / area < tau {
        limit += 1;
    }
    abs_diff_sum(template, image, anchor, limit) < limit
}

/// Pixelwise mean of equally sized patches, rounding halves up.
pub fn build_average_template(patches: &[GrayImage]) -> Result<GrayImage, TemplateError> {
    let first = patches.first().ok_or(TemplateError::NoPatches)?;
    let expected = (first.width, first.height);
    for (index, p) in patches.iter().enumerate() {
        if (p.width, p.height) != expected {
            return Err(TemplateError::DimensionMismatch { index, expected, got: (p.width, p.height) });
        }
    }
    let k = patches.len() as u32;
    let pixels = (0..first.pixels.len())
        .map(|i| {
            let sum: u32 = patches.iter().map(|p| p.pixels[i] as u32).sum();
            ((2 * sum + k) / (2 * k)) as u8
        })
        .collect();
    GrayImage::new(first.width, first.height, pixels)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvidenceTemplate {
    pub image: GrayImage,
    /// Where the evidence patch sits relative to the target anchor.
    pub dx: i32,
    pub dy: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemplateSet {
    pub target: GrayImage,
    pub evidence: Vec<EvidenceTemplate>,
    pub tau_target: f64,
    pub tau_evidence: f64,
    /// Declared Chebyshev radius that bounds the evidence offsets.
    pub delta: u32,
}

impl TemplateSet {
    pub fn validate(&self) -> Result<(), TemplateError> {
        for e in &self.evidence {
            if e.dx.unsigned_abs().max(e.dy.unsigned_abs()) > self.delta {
                return Err(TemplateError::OffsetBeyondRadius { dx: e.dx, dy: e.dy, delta: self.delta });
            }
        }
        Ok(())
    }

    /// Largest template extent; positions are anchors where all templates fit.
    fn extent(&self) -> (u32, u32) {
        self.evidence.iter().fold((self.target.width, self.target.height), |(w, h), e| {
            (w.max(e.image.width), h.max(e.image.height))
        })
    }

    /// Reads a key-value manifest; template paths are relative to `base`.
    pub fn parse_manifest(text: &str, base: &Path) -> Result<TemplateSet, TemplateError> {
        let mut target = None;
        let mut evidence = Vec::new();
        let (mut tau_target, mut tau_evidence, mut delta) = (None, None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| TemplateError::Manifest { line: i + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key=value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let number = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("bad number {v:?}")));
            match key {
                "target" => target = Some(load_pgm(&base.join(value))?),
                "tau_target" => tau_target = Some(number(value)?),
                "tau_evidence" => tau_evidence = Some(number(value)?),
                "delta" => delta = Some(value.parse::<u32>().map_err(|_| bad(format!("bad radius {value:?}")))?),
                k if k.starts_with("evidence") => {
                    let (path, off) = value.rsplit_once('@').ok_or_else(|| bad("expected path@dx,dy".into()))?;
                    let (dx, dy) = off
                        .split_once(',')
                        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                        .ok_or_else(|| bad(format!("bad offset {off:?}")))?;
                    evidence.push(EvidenceTemplate { image: load_pgm(&base.join(path.trim()))?, dx, dy });
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        let missing = |what: &str| TemplateError::Manifest { line: 0, msg: format!("missing {what}") };
        let set = TemplateSet {
            target: target.ok_or_else(|| missing("target"))?,
            tau_target: tau_target.ok_or_else(|| missing("tau_target"))?,
            tau_evidence: tau_evidence.unwrap_or(0.0),
            delta: delta.unwrap_or_else(|| {
                evidence.iter().map(|e: &EvidenceTemplate| e.dx.unsigned_abs().max(e.dy.unsigned_abs())).max().unwrap_or(0)
            }),
            evidence,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn load_manifest(path: &Path) -> Result<TemplateSet, TemplateError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Writes the templates as PGM files next to a manifest at `path`.
    pub fn save_manifest(&self, path: &Path) -> Result<(), TemplateError> {
        let dir = path.parent().unwrap_or(Path::new("."));
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("templates");
        let mut text = String::new();
        let name = format!("{stem}_target.pgm");
        save_pgm(&self.target, &dir.join(&name))?;
        let _ = writeln!(text, "target={name}");
        for (i, e) in self.evidence.iter().enumerate() {
            let name = format!("{stem}_evidence{}.pgm", i + 1);
            save_pgm(&e.image, &dir.join(&name))?;
            let _ = writeln!(text, "evidence{}={name}@{},{}", i + 1, e.dx, e.dy);
        }
        let _ = writeln!(text, "tau_target={}\ntau_evidence={}\ndelta={}", self.tau_target, self.tau_evidence, self.delta);
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// An image plus templates, viewed as a grid of template anchors.
#[derive(Clone, Debug)]
pub struct TemplateSpace {
    image: GrayImage,
    templates: TemplateSet,
    dims: Dims,
    target_at: Coord,
}

/// Every anchor whose target MAE is below `tau_target`, by a full scan.
pub fn scan_target_matches(image: &GrayImage, templates: &TemplateSet) -> Vec<Coord> {
    let (ew, eh) = templates.extent();
    if ew > image.width || eh > image.height {
        return Vec::new();
    }
    let dims = Dims::new(image.width - ew + 1, image.height - eh + 1);
    (0..dims.height)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..dims.width)
                .map(move |x| Coord::new(x, y))
                .filter(|&p| mae_below(&templates.target, image, p, templates.tau_target))
        })
        .collect()
}

/// Builds the search space, checking that exactly one anchor matches the target.
pub fn make_template_oracle(image: GrayImage, templates: TemplateSet) -> Result<TemplateSpace, TemplateError> {
    templates.validate()?;
    let (ew, eh) = templates.extent();
    if ew > image.width || eh > image.height {
        return Err(TemplateError::ImageTooSmall(image.width, image.height));
    }
    let dims = Dims::new(image.width - ew + 1, image.height - eh + 1);
    let matches = scan_target_matches(&image, &templates);
    let target_at = match matches.as_slice() {
        [] => return Err(TemplateError::NoTarget),
        [p] => *p,
        [a, b, ..] => return Err(TemplateError::AmbiguousTarget(*a, *b)),
    };
    Ok(TemplateSpace { image, templates, dims, target_at })
}

impl TemplateSpace {
    pub fn target_at(&self) -> Coord {
        self.target_at
    }

    pub fn image(&self) -> &GrayImage {
        &self.image
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }
}

impl SearchSpace for TemplateSpace {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn classify(&self, p: Coord) -> VisitOutcome {
        let t = &self.templates;
        if mae_below(&t.target, &self.image, p, t.tau_target) {
            VisitOutcome::Found
        } else if t.evidence.iter().any(|e| mae_below(&e.image, &self.image, p, t.tau_evidence)) {
            VisitOutcome::Evidence
        } else {
            VisitOutcome::Miss
        }
    }
}

/// Mean evaluated positions per repetition and algorithm, with the
/// percentage saved relative to exhaustive scanning.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedupReport {
    pub algorithms: Vec<Algorithm>,
    /// `rows[r][j]`: mean positions evaluated by algorithm `j` in repetition `r`.
    pub rows: Vec<Vec<f64>>,
    /// Mean positions of the exhaustive scan in each repetition.
    pub exhaustive: Vec<f64>,
}

impl SpeedupReport {
    /// Percent faster than exhaustive: `(E - A) / E * 100`.
    pub fn percent(&self, r: usize, j: usize) -> f64 {
        (self.exhaustive[r] - self.rows[r][j]) / self.exhaustive[r] * 100.0
    }

    pub fn mean_visits(&self, j: usize) -> f64 {
        self.rows.iter().map(|r| r[j]).sum::<f64>() / self.rows.len() as f64
    }

    pub fn mean_percent(&self, j: usize) -> f64 {
        (0..self.rows.len()).map(|r| self.percent(r, j)).sum::<f64>() / self.rows.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("repetition");
        for a in &self.algorithms {
            let _ = write!(out, ",{a}_visits,{a}_faster_pct");
        }
        out.push('\n');
        for r in 0..self.rows.len() {
            let _ = write!(out, "{}", r + 1);
            for j in 0..self.algorithms.len() {
                let _ = write!(out, ",{:.1},{:.2}", self.rows[r][j], self.percent(r, j));
            }
            out.push('\n');
        }
        out.push_str("mean");
        for j in 0..self.algorithms.len() {
            let _ = write!(out, ",{:.1},{:.2}", self.mean_visits(j), self.mean_percent(j));
        }
        out.push('\n');
        out
    }
}

/// Runs every searcher `runs` times on every space, `repetitions` times over.
/// Each run draws from its own stream of `seed`.
pub fn speedup_report(
    params: &[Params],
    spaces: &[TemplateSpace],
    runs: u32,
    repetitions: u32,
    seed: u64,
) -> SpeedupReport {
    let mean_steps = |p: &Params, rep: u32, j: u32| -> f64 {
        let total: u64 = spaces
            .par_iter()
            .enumerate()
            .map(|(i, space)| {
                (0..runs)
                    .map(|k| {
                        let major = (rep as u64) * spaces.len() as u64 + i as u64;
                        let mut rng = pair_rng(seed, major, j * runs + k);
                        let out = run_search(space, p, &mut rng, false);
                        debug_assert_eq!(out.found, space.target_at);
                        out.steps
                    })
                    .sum::<u64>()
            })
            .sum();
        total as f64 / (spaces.len() as f64 * runs as f64)
    };
    let mut rows = Vec::new();
    let mut exhaustive = Vec::new();
    for rep in 0..repetitions {
        rows.push(params.iter().enumerate().map(|(j, p)| mean_steps(p, rep, j as u32)).collect());
        exhaustive.push(mean_steps(&Params::Exhaustive, rep, params.len() as u32));
    }
    SpeedupReport { algorithms: params.iter().map(|p| p.algorithm()).collect(), rows, exhaustive }
}
