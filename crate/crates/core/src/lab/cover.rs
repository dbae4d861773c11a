use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lab::report::Report;
use crate::noise::RandomSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverRow {
    pub vertices: usize,
    pub walks: u64,
    pub mean_steps: f64,
    pub std_error: f64,
    /// `2|E|(|V| − 1)`
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoverReport {
    pub rows: Vec<CoverRow>,
}

impl Report for CoverReport {
    type Row = CoverRow;
    const HEADER: &'static [&'static str] = &["vertices", "walks", "mean_steps", "std_error", "bound", "within_bound"];

    fn rows(&self) -> &[CoverRow] {
        &self.rows
    }

    fn from_rows(rows: Vec<CoverRow>) -> Self {
        Self { rows }
    }
}

/// Steps of a simple random walk on the path `0..vertices` until every vertex
/// has been visited.
fn cover_walk<R: Rng + ?Sized>(vertices: usize, start: usize, rng: &mut R) -> u64 {
    let (mut lo, mut hi, mut v) = (start, start, start);
    let mut steps = 0;
    while hi - lo + 1 < vertices {
        v = if v == 0 {
            1
        } else if v == vertices - 1 || rng.random_bool(0.5) {
            v - 1
        } else {
            v + 1
        };
        lo = lo.min(v);
        hi = hi.max(v);
        steps += 1;
    }
    steps
}

/// Mean cover time of the path graph from a uniformly random start.
pub fn cover_time_path(vertices: usize, walks: u64, seed: u64) -> Result<CoverRow> {
    cover_time_path_from(vertices, walks, seed, None)
}

/// As [`cover_time_path`], optionally from a fixed start vertex.
pub fn cover_time_path_from(vertices: usize, walks: u64, seed: u64, start: Option<usize>) -> Result<CoverRow> {
    if vertices < 2 {
        return Err(invalid("a path needs at least 2 vertices"));
    }
    if walks == 0 {
        return Err(invalid("walks must be at least 1"));
    }
    if start.is_some_and(|s| s >= vertices) {
        return Err(invalid("start vertex out of range"));
    }
    let steps: Vec<u64> = (0..walks)
        .into_par_iter()
        .map(|k| {
            let mut rng = RandomSource::for_run(seed, k);
            let s = start.unwrap_or_else(|| rng.random_range(0..vertices));
            cover_walk(vertices, s, &mut rng)
        })
        .collect();
    let k = walks as f64;
    let mean = steps.iter().map(|&s| s as f64).sum::<f64>() / k;
    let std_error = if walks < 2 {
        0.0
    } else {
        (steps.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() / k.sqrt()
    };
    let bound = 2.0 * ((vertices - 1) as f64).powi(2);
    Ok(CoverRow { vertices, walks, mean_steps: mean, std_error, bound, within_bound: mean <= bound })
}
