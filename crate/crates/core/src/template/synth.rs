//! Synthetic benchmark images standing in for real scans.
//!
//! Background is uniform noise. The target is a noise patch planted verbatim,
//! so its template is exact. Each evidence site is a flat block, slightly
//! noisy, larger than its template; the template is the average of ten noisy
//! crops of a flat patch, so every anchor well inside a block scores as
//! evidence.

use super::{build_average_template, EvidenceTemplate, GrayImage, TemplateSet};
use crate::grid::Coord;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub size: u32,
    pub target_side: u32,
    pub evidence_side: u32,
    pub block_side: u32,
    pub evidence_count: u32,
    /// Largest block offset from the target anchor on either axis.
    pub spread: u32,
    /// Half-width of the noise added to flat blocks.
    pub block_noise: u8,
    pub tau_target: f64,
    pub tau_evidence: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            size: 512,
            target_side: 12,
            evidence_side: 8,
            block_side: 40,
            evidence_count: 4,
            spread: 80,
            block_noise: 8,
            tau_target: 10.0,
            tau_evidence: 20.0,
        }
    }
}

impl SyntheticConfig {
    /// Smallest side [`SyntheticConfig::with_size`] accepts.
    pub const MIN_SIZE: u32 = 128;

    /// The default layout scaled to a `size x size` image.
    pub fn with_size(size: u32) -> Option<Self> {
        if size < Self::MIN_SIZE {
            return None;
        }
        let base = Self::default();
        Some(Self {
            size,
            spread: base.spread * size / base.size,
            block_side: base.block_side * size / base.size,
            ..base
        })
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticImage {
    pub image: GrayImage,
    pub templates: TemplateSet,
    pub target_at: Coord,
}

fn noisy_flat<R: Rng + ?Sized>(side: u32, level: u8, noise: u8, rng: &mut R) -> GrayImage {
    let n = noise as i32;
    let pixels = (0..side * side)
        .map(|_| (level as i32 + rng.gen_range(-n..=n)).clamp(0, 255) as u8)
        .collect();
    GrayImage::new(side, side, pixels).expect("square patch")
}

fn overlaps(a: (i64, i64, i64), b: (i64, i64, i64)) -> bool {
    // (x, y, side) squares, with a one pixel gap required
    a.0 < b.0 + b.2 + 1 && b.0 < a.0 + a.2 + 1 && a.1 < b.1 + b.2 + 1 && b.1 < a.1 + a.2 + 1
}

/// Draws one benchmark image and its template set. The declared radius covers
/// every anchor whose evidence window touches a block.
pub fn generate_synthetic<R: Rng + ?Sized>(config: &SyntheticConfig, rng: &mut R) -> SyntheticImage {
    let c = config;
    assert!(
        c.size > c.target_side + 2 * (c.spread + c.block_side),
        "image too small for the configured layout"
    );
    let mut image = GrayImage::new(c.size, c.size, (0..c.size * c.size).map(|_| rng.gen()).collect())
        .expect("square image");

    let margin = c.spread + c.block_side;
    let tx = rng.gen_range(margin..c.size - margin - c.target_side);
    let ty = rng.gen_range(margin..c.size - margin - c.target_side);
    let target = GrayImage::new(
        c.target_side,
        c.target_side,
        (0..c.target_side * c.target_side).map(|_| rng.gen()).collect(),
    )
    .expect("square patch");
    image.paste(&target, tx, ty).expect("target inside image");

    let mut placed = vec![(tx as i64, ty as i64, c.target_side as i64)];
    let mut evidence = Vec::new();
    let mut delta = 0u32;
    let spread = c.spread as i32;
    while evidence.len() < c.evidence_count as usize {
        let (dx, dy) = (rng.gen_range(-spread..=spread), rng.gen_range(-spread..=spread));
        let block = (tx as i64 + dx as i64, ty as i64 + dy as i64, c.block_side as i64);
        if placed.iter().any(|&p| overlaps(p, block)) {
            continue;
        }
        placed.push(block);
        let level = rng.gen_range(30..=225u8);
        let patch = noisy_flat(c.block_side, level, c.block_noise, rng);
        image.paste(&patch, block.0 as u32, block.1 as u32).expect("block inside image");

        let samples: Vec<GrayImage> =
            (0..10).map(|_| noisy_flat(c.evidence_side, level, c.block_noise * 2, rng)).collect();
        let template = build_average_template(&samples).expect("ten equal patches");
        evidence.push(EvidenceTemplate { image: template, dx, dy });

        // anchors whose evidence window intersects the block
        let lo_x = dx as i64 - c.evidence_side as i64 + 1;
        let hi_x = dx as i64 + c.block_side as i64 - 1;
        let lo_y = dy as i64 - c.evidence_side as i64 + 1;
        let hi_y = dy as i64 + c.block_side as i64 - 1;
        let reach = [lo_x, hi_x, lo_y, hi_y].iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
        delta = delta.max(reach as u32);
    }

    let templates = TemplateSet {
        target,
        evidence,
        tau_target: c.tau_target,
        tau_evidence: c.tau_evidence,
        delta,
    };
    SyntheticImage { image, templates, target_at: Coord::new(tx, ty) }
}
