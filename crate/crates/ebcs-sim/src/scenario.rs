//! Random deployment generation: one broadcast (eBCS) AP pinned at the region
//! center, non-eBCS APs placed with the farthest forced to exactly the target
//! distance, and stations scattered around their AP as Gaussian daughter
//! points (Thomas-process style), resampled until inside the region.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario config: {field}: {message}")]
    InvalidConfig { field: &'static str, message: String },
    #[error("cannot sample {m} stations out of {n}")]
    SampleTooLarge { m: usize, n: usize },
    #[error("deployment has no non-eBCS APs")]
    NoAps,
    #[error("deployment file I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("deployment file format error: {0}")]
    Format(#[from] serde_json::Error),
}

/// How APs and stations are arranged. Only one scheme is implemented; the
/// enum keeps the file format open to alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PlacementScheme {
    /// eBCS AP at the region center; farthest non-eBCS AP pinned to exactly
    /// the configured distance, remaining APs uniform in angle and radius.
    #[default]
    #[serde(rename = "center-farthest-pinned")]
    CenterFarthestPinned,
}

/// Geometry and sampling parameters of one simulated world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Side of the square region in meters.
    pub region_side_m: f64,
    /// Number of non-eBCS APs (one BSS each).
    pub num_bss: usize,
    /// Total number of recipient stations.
    pub total_stas: usize,
    /// Stations per BSS; must sum to `total_stas`.
    pub stas_per_bss: Vec<usize>,
    /// Distance from the eBCS AP to the farthest non-eBCS AP, in meters.
    pub distance_b_m: f64,
    /// Per-axis standard deviation of station scatter around its AP, in meters.
    pub bss_radius_m: f64,
    /// Uplink frames overheard per step.
    pub frames_per_step: usize,
    /// Seed for standalone generation (e.g. exported deployment files).
    pub seed: u64,
    pub placement_scheme: PlacementScheme,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            region_side_m: 300.0,
            num_bss: 2,
            total_stas: 100,
            stas_per_bss: vec![50, 50],
            distance_b_m: 40.0,
            bss_radius_m: 10.0,
            frames_per_step: 5,
            seed: 0,
            placement_scheme: PlacementScheme::CenterFarthestPinned,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |field, message| Err(ScenarioError::InvalidConfig { field, message });
        if !(self.region_side_m > 0.0) {
            return err("region_side_m", format!("must be positive, got {}", self.region_side_m));
        }
        if self.num_bss == 0 {
            return err("num_bss", "must be at least 1".into());
        }
        if self.stas_per_bss.len() != self.num_bss {
            return err(
                "stas_per_bss",
                format!("expected {} entries, got {}", self.num_bss, self.stas_per_bss.len()),
            );
        }
        let sum: usize = self.stas_per_bss.iter().sum();
        if sum != self.total_stas {
            return err(
                "stas_per_bss",
                format!("entries sum to {sum}, expected total_stas = {}", self.total_stas),
            );
        }
        if self.frames_per_step == 0 || self.frames_per_step > self.total_stas {
            return err(
                "frames_per_step",
                format!(
                    "must be in 1..={}, got {}",
                    self.total_stas, self.frames_per_step
                ),
            );
        }
        if !(self.distance_b_m >= 0.0) {
            return err("distance_b_m", format!("must be non-negative, got {}", self.distance_b_m));
        }
        // The farthest AP sits at exactly distance_b_m from the center at an
        // arbitrary angle, so it stays inside the square only up to half the
        // side. Station scatter needs no bound: out-of-region daughters are
        // resampled.
        if self.distance_b_m > self.region_side_m / 2.0 {
            return err(
                "distance_b_m",
                format!(
                    "must not exceed half the region side ({} m), got {}",
                    self.region_side_m / 2.0,
                    self.distance_b_m
                ),
            );
        }
        if !(self.bss_radius_m >= 0.0) {
            return err("bss_radius_m", format!("must be non-negative, got {}", self.bss_radius_m));
        }
        Ok(())
    }
}

/// A position in the region, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance_to(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One recipient station: its position and the BSS it belongs to (1-based,
/// matching the identifier carried in its frame headers).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sta {
    pub position: Point,
    pub bss: u32,
}

/// One realized world: AP positions plus station positions with BSS
/// membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub ebcs_ap: Point,
    pub non_ebcs_aps: Vec<Point>,
    pub stas: Vec<Sta>,
}

impl Deployment {
    /// Distance from the eBCS AP to the farthest non-eBCS AP.
    pub fn distance_b_m(&self) -> Result<f64, ScenarioError> {
        self.non_ebcs_aps
            .iter()
            .map(|ap| self.ebcs_ap.distance_to(ap))
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |m| m.max(d))))
            .ok_or(ScenarioError::NoAps)
    }

    pub fn num_stas(&self) -> usize {
        self.stas.len()
    }
}

/// Generates one deployment. The draw order is fixed (farthest AP angle,
/// remaining APs, then stations BSS by BSS), so identical `(config, rng
/// state)` yields an identical deployment.
pub fn generate_deployment(
    config: &ScenarioConfig,
    rng: &mut impl Rng,
) -> Result<Deployment, ScenarioError> {
    config.validate()?;
    let half = config.region_side_m / 2.0;
    let center = Point { x: half, y: half };

    let mut non_ebcs_aps = Vec::with_capacity(config.num_bss);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    non_ebcs_aps.push(Point {
        x: center.x + config.distance_b_m * angle.cos(),
        y: center.y + config.distance_b_m * angle.sin(),
    });
    for _ in 1..config.num_bss {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        // radius uniform in (0, B]: 1 - u maps [0, 1) onto (0, 1]
        let radius = config.distance_b_m * (1.0 - rng.random::<f64>());
        non_ebcs_aps.push(Point {
            x: center.x + radius * angle.cos(),
            y: center.y + radius * angle.sin(),
        });
    }

    let inside = |p: &Point| {
        p.x >= 0.0 && p.x <= config.region_side_m && p.y >= 0.0 && p.y <= config.region_side_m
    };
    let mut stas = Vec::with_capacity(config.total_stas);
    for (i, (&count, ap)) in config.stas_per_bss.iter().zip(&non_ebcs_aps).enumerate() {
        for _ in 0..count {
            let position = loop {
                let gx: f64 = rng.sample(StandardNormal);
                let gy: f64 = rng.sample(StandardNormal);
                let candidate = Point {
                    x: ap.x + config.bss_radius_m * gx,
                    y: ap.y + config.bss_radius_m * gy,
                };
                if inside(&candidate) {
                    break candidate;
                }
            };
            stas.push(Sta { position, bss: (i + 1) as u32 });
        }
    }

    Ok(Deployment { ebcs_ap: center, non_ebcs_aps, stas })
}

/// Draws `m` distinct station indices uniformly without replacement; a fresh
/// draw every step.
pub fn sample_uplink_stas(
    deployment: &Deployment,
    m: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>, ScenarioError> {
    let n = deployment.num_stas();
    if m > n {
        return Err(ScenarioError::SampleTooLarge { m, n });
    }
    Ok(rand::seq::index::sample(rng, n, m).into_vec())
}

/// A reproducible batch of deployments, written to disk as JSON so the
/// learning and test phases can replay identical worlds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentSet {
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub deployments: Vec<Deployment>,
}

impl DeploymentSet {
    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
