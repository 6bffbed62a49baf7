//! Experiment configuration: JSON file, then command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use ljchain::cell_formula::MAX_CELL;
use ljchain::chain::MAX_SITES;
use ljchain::potentials::MAX_RANGE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Audit,
    Density,
    Phi,
    Chain,
    Layer,
    Decay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub k1: f64,
    pub k2: f64,
    #[serde(rename = "K")]
    pub range: usize,
}

impl Default for Family {
    fn default() -> Self {
        Self { k1: 1.0, k2: 1.0, range: 2 }
    }
}

/// Grids for every experiment. Strains `z` are in units of `gamma`,
/// stretches `ell` in units of `ell* = sqrt(beta / alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    /// Strain range `[lo, hi]` and step (in units of gamma) for `density`.
    pub density_range: [f64; 2],
    pub density_step: f64,
    /// Boundary strains for `phi`.
    pub z: Vec<f64>,
    /// Cell sizes for `phi`.
    #[serde(rename = "N")]
    pub cell_sizes: Vec<usize>,
    /// Chain lengths for `chain`.
    pub n: Vec<usize>,
    pub ell: Vec<f64>,
    /// Number of strains in the audit grid on `[delta_1/4, 8 delta_1]`.
    pub audit_points: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            density_range: [0.8, 5.0],
            density_step: 1e-3,
            z: vec![0.95, 1.0, 1.5, 3.0],
            cell_sizes: vec![16, 32, 64, 128],
            n: vec![512, 2048],
            ell: vec![0.25, 0.5, 0.75, 0.9, 1.1, 1.25, 1.5, 2.0],
            audit_points: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Stop the layer truncation schedule once `|B_2N - B_N|` drops below this.
    pub layer: f64,
    /// Largest truncation visited by the layer schedule.
    pub layer_max_n: usize,
    /// Amplitude of the seeded jitter added to an extra affine chain start.
    pub jitter: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { layer: 1e-10, layer_max_n: 1024, jitter: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub family: Family,
    pub experiment: Option<Experiment>,
    pub grids: Grids,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: Family::default(),
            experiment: None,
            grids: Grids::default(),
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        // serde_json reports the line and column of the offending field
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.family;
        if !(f.k1 > 0.0 && f.k2 > 0.0 && f.k1.is_finite() && f.k2.is_finite()) {
            bail!("family: k1 and k2 must be positive, got k1 = {}, k2 = {}", f.k1, f.k2);
        }
        if f.range == 0 || f.range > MAX_RANGE {
            bail!("family.K: must be in 1..={MAX_RANGE}, got {}", f.range);
        }
        let g = &self.grids;
        let [lo, hi] = g.density_range;
        if !(lo > 0.0 && hi > lo) {
            bail!("grids.density_range: need 0 < lo < hi, got [{lo}, {hi}]");
        }
        if !(g.density_step > 0.0) || (hi - lo) / g.density_step < 2.0 {
            bail!("grids.density_step: must be positive and leave at least 3 samples, got {}", g.density_step);
        }
        if g.z.is_empty() || g.z.iter().any(|z| !(*z > 0.0)) {
            bail!("grids.z: need a non-empty list of positive strains");
        }
        if g.cell_sizes.is_empty() || g.cell_sizes.windows(2).any(|w| w[1] <= w[0]) {
            bail!("grids.N: need a non-empty strictly increasing list");
        }
        if let Some(&n) = g.cell_sizes.iter().find(|&&n| n < 2 * f.range + 2 || n > MAX_CELL) {
            bail!("grids.N: cell size {n} outside [2K + 2, {MAX_CELL}]");
        }
        if g.n.is_empty() {
            bail!("grids.n: need a non-empty list");
        }
        if let Some(&n) = g.n.iter().find(|&&n| n < 8 * f.range || n > MAX_SITES) {
            bail!("grids.n: chain length {n} outside [8K, {MAX_SITES}]");
        }
        if g.ell.is_empty() || g.ell.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            bail!("grids.ell: need a non-empty list of non-negative stretches");
        }
        if g.audit_points < ljchain::audit::MIN_GRID {
            bail!("grids.audit_points: need at least {}, got {}", ljchain::audit::MIN_GRID, g.audit_points);
        }
        let t = &self.tolerances;
        if !(t.layer > 0.0) || !(t.jitter >= 0.0) {
            bail!("tolerances: layer must be positive and jitter non-negative");
        }
        if t.layer_max_n < 4 * f.range {
            bail!("tolerances.layer_max_n: must be at least 4K = {}", 4 * f.range);
        }
        Ok(())
    }
}
