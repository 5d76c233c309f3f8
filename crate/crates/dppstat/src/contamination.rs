//! Outlier injection: extra points concentrated in sub-squares, wholesale
//! deletion of sub-squares, and the uniform add/delete variants.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pattern::{PointPattern, Window};
use crate::{Error, Result};

const PLACEMENT_ATTEMPTS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ContaminationKind {
    #[default]
    None,
    /// Add `round(rho m)` uniform points inside randomly placed sub-squares.
    AddSubsquare,
    /// Delete every point inside randomly placed sub-squares of total volume
    /// `rho |W|`.
    DeleteSubsquare,
    /// Add `round(rho m)` points uniformly over the whole window.
    AddUniform,
    /// Delete a uniformly chosen subset of `round(rho m)` points.
    DeleteUniform,
}

/// Contamination settings. `side_fraction` is the sub-square side relative
/// to the window side (only used when adding in sub-squares; deletion derives
/// its side from the volume constraint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub kind: ContaminationKind,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_squares")]
    pub squares: u32,
    #[serde(default = "default_side_fraction")]
    pub side_fraction: f64,
}

fn default_squares() -> u32 {
    1
}

fn default_side_fraction() -> f64 {
    0.1
}

impl Default for ContaminationSpec {
    fn default() -> Self {
        ContaminationSpec::none()
    }
}

/// The contaminated pattern plus the sub-squares that were used (empty for
/// the uniform and pure variants).
#[derive(Debug, Clone)]
pub struct Contaminated {
    pub pattern: PointPattern,
    pub regions: Vec<Window>,
}

impl ContaminationSpec {
    pub fn none() -> Self {
        ContaminationSpec {
            kind: ContaminationKind::None,
            rho: 0.0,
            squares: 1,
            side_fraction: default_side_fraction(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidContamination(format!(
                "rho = {} outside [0, 1)",
                self.rho
            )));
        }
        if self.squares == 0 {
            return Err(Error::InvalidContamination("squares must be >= 1".into()));
        }
        if !(self.side_fraction > 0.0 && self.side_fraction < 1.0) {
            return Err(Error::InvalidContamination(format!(
                "side_fraction = {} outside (0, 1)",
                self.side_fraction
            )));
        }
        Ok(())
    }

    /// Apply the contamination. The pure case consumes no randomness.
    pub fn apply(&self, pattern: &PointPattern, rng: &mut ChaCha8Rng) -> Result<Contaminated> {
        self.validate()?;
        match self.kind {
            ContaminationKind::None => Ok(Contaminated {
                pattern: pattern.clone(),
                regions: Vec::new(),
            }),
            ContaminationKind::AddSubsquare => self.add_subsquare(pattern, rng),
            ContaminationKind::DeleteSubsquare => self.delete_subsquare(pattern, rng),
            ContaminationKind::AddUniform => self.add_uniform(pattern, rng),
            ContaminationKind::DeleteUniform => self.delete_uniform(pattern, rng),
        }
    }

    fn add_subsquare(&self, pattern: &PointPattern, rng: &mut ChaCha8Rng) -> Result<Contaminated> {
        let window = &pattern.window;
        let side = self.side_fraction * window.side(0);
        let regions = place_disjoint_squares(window, side, self.squares, rng)?;
        let n_add = round_half_even(self.rho * pattern.len() as f64);
        let mut points = pattern.points.clone();
        // Split the additions as evenly as possible; earlier squares take
        // the remainder.
        let base = n_add / u64::from(self.squares);
        let rem = n_add % u64::from(self.squares);
        for (i, region) in regions.iter().enumerate() {
            let take = base + u64::from((i as u64) < rem);
            for _ in 0..take {
                let p: Vec<f64> = region
                    .bounds
                    .iter()
                    .map(|b| rng.random_range(b[0]..b[1]))
                    .collect();
                points.push(p);
            }
        }
        Ok(Contaminated {
            pattern: PointPattern::new(window.clone(), points)?,
            regions,
        })
    }

    fn delete_subsquare(
        &self,
        pattern: &PointPattern,
        rng: &mut ChaCha8Rng,
    ) -> Result<Contaminated> {
        let window = &pattern.window;
        if self.rho == 0.0 {
            return Ok(Contaminated {
                pattern: pattern.clone(),
                regions: Vec::new(),
            });
        }
        // Total deleted volume rho |W|, split equally across the squares.
        let d = window.dimension() as f64;
        let per_volume = self.rho * window.volume() / f64::from(self.squares);
        let side = per_volume.powf(1.0 / d);
        let regions = place_disjoint_squares(window, side, self.squares, rng)?;
        let points: Vec<Vec<f64>> = pattern
            .points
            .iter()
            .filter(|p| !regions.iter().any(|r| half_open_contains(r, p)))
            .cloned()
            .collect();
        Ok(Contaminated {
            pattern: PointPattern::new(window.clone(), points)?,
            regions,
        })
    }

    fn add_uniform(&self, pattern: &PointPattern, rng: &mut ChaCha8Rng) -> Result<Contaminated> {
        let window = &pattern.window;
        let n_add = round_half_even(self.rho * pattern.len() as f64);
        let mut points = pattern.points.clone();
        for _ in 0..n_add {
            let p: Vec<f64> = window
                .bounds
                .iter()
                .map(|b| rng.random_range(b[0]..b[1]))
                .collect();
            points.push(p);
        }
        Ok(Contaminated {
            pattern: PointPattern::new(window.clone(), points)?,
            regions: Vec::new(),
        })
    }

    fn delete_uniform(&self, pattern: &PointPattern, rng: &mut ChaCha8Rng) -> Result<Contaminated> {
        let m = pattern.len();
        let n_del = round_half_even(self.rho * m as f64) as usize;
        // Uniform subset via a partial Fisher–Yates over the indices.
        let mut indices: Vec<usize> = (0..m).collect();
        for i in 0..n_del.min(m) {
            let j = rng.random_range(i..m);
            indices.swap(i, j);
        }
        let mut deleted = vec![false; m];
        for &idx in indices.iter().take(n_del.min(m)) {
            deleted[idx] = true;
        }
        let points: Vec<Vec<f64>> = pattern
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| !deleted[*i])
            .map(|(_, p)| p.clone())
            .collect();
        Ok(Contaminated {
            pattern: PointPattern::new(pattern.window.clone(), points)?,
            regions: Vec::new(),
        })
    }
}

/// Round to nearest, ties to even (unbiased across replications).
fn round_half_even(x: f64) -> u64 {
    x.round_ties_even() as u64
}

fn half_open_contains(region: &Window, p: &[f64]) -> bool {
    p.iter()
        .zip(&region.bounds)
        .all(|(x, b)| *x >= b[0] && *x < b[1])
}

/// Place `count` pairwise disjoint axis-aligned squares of side `side`
/// uniformly inside the window (lower corner uniform over the admissible
/// region), retrying on overlap.
fn place_disjoint_squares(
    window: &Window,
    side: f64,
    count: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Window>> {
    let d = window.dimension();
    for axis in 0..d {
        if side > window.side(axis) {
            return Err(Error::SubSquareTooLarge { side });
        }
    }
    let mut regions: Vec<Window> = Vec::with_capacity(count as usize);
    let mut attempts = 0u64;
    while regions.len() < count as usize {
        attempts += 1;
        if attempts > PLACEMENT_ATTEMPTS {
            return Err(Error::PlacementFailed {
                squares: count,
                attempts,
            });
        }
        let mut bounds = Vec::with_capacity(d);
        for axis in 0..d {
            let a = window.bounds[axis][0];
            let b = window.bounds[axis][1] - side;
            let lo = if b > a { rng.random_range(a..b) } else { a };
            bounds.push([lo, lo + side]);
        }
        let candidate = Window { bounds };
        let overlaps = regions.iter().any(|r| windows_overlap(r, &candidate));
        if !overlaps {
            regions.push(candidate);
        }
    }
    Ok(regions)
}

fn windows_overlap(a: &Window, b: &Window) -> bool {
    a.bounds
        .iter()
        .zip(&b.bounds)
        .all(|(x, y)| x[0] < y[1] && y[0] < x[1])
}
