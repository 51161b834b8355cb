//! Experiment configuration: one TOML file describing a code source, a
//! Holevo source, and a grid of operating points (noise entries crossed
//! with protocol entries and their `beta1` / `dbeta_rel` lists).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use recon_core::decoder::CheckRule;
use recon_core::metrics::HolevoProvider;
use recon_core::pcm::{
    generate_raptor_family, generate_raptor_family_with_degree, load_alist, SparsePcm,
};
use recon_core::protocol::{
    sweep_seed, CampaignConfig, Noise, ProtocolConfig, RateSchedule, Scheme, SeedMode,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_frames: u64,
    #[serde(default)]
    pub seed_mode: SeedMode,
    pub code: CodeSource,
    pub noise: Vec<Noise>,
    pub holevo: HolevoProvider,
    #[serde(default)]
    pub output: OutputPaths,
    pub protocol: Vec<ProtocolEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alist: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateParams {
    pub seed: u64,
    pub base_n: usize,
    pub base_m: usize,
    #[serde(default)]
    pub max_ext: usize,
    #[serde(default = "default_ext_degree")]
    pub ext_degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_col_degree: Option<usize>,
}

fn default_ext_degree() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jsonl: Option<PathBuf>,
}

impl OutputPaths {
    /// Relative paths resolve against `out_dir` when given, otherwise
    /// against the config file's directory.
    pub fn resolved(&self, out_dir: Option<&Path>, config_dir: &Path) -> (PathBuf, PathBuf) {
        let base = out_dir.unwrap_or(config_dir);
        let csv = self.csv.clone().unwrap_or_else(|| PathBuf::from("results.csv"));
        let jsonl = self.jsonl.clone().unwrap_or_else(|| csv.with_extension("jsonl"));
        let place = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        (place(csv), place(jsonl))
    }
}

/// A scalar or a list; lists expand into grid axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

impl Default for OneOrMany {
    fn default() -> Self {
        OneOrMany::One(0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolEntry {
    pub scheme: Scheme,
    pub beta1: OneOrMany,
    #[serde(default)]
    pub dbeta_rel: OneOrMany,
    #[serde(default = "default_attempts")]
    pub attempts: usize,
    pub l_max: usize,
    #[serde(default = "default_true")]
    pub inherit_llrs: bool,
    #[serde(default)]
    pub et_enabled: bool,
    #[serde(default = "default_et_window")]
    pub et_window: usize,
    #[serde(default = "default_llr_clamp")]
    pub llr_clamp: f64,
    #[serde(default)]
    pub check_rule: CheckRule,
}

fn default_attempts() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_et_window() -> usize {
    5
}

fn default_llr_clamp() -> f64 {
    30.0
}

/// One campaign of the expanded grid.
#[derive(Debug, Clone, Copy)]
pub struct GridPoint {
    pub grid_index: u64,
    pub noise_index: usize,
    pub protocol_index: usize,
    pub beta1: f64,
    pub dbeta_rel: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_frames == 0 {
            return Err("n_frames: must be at least 1".into());
        }
        match (&self.code.generate, &self.code.alist) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err("code: exactly one of `generate` or `alist` must be set".into()),
        }
        if self.noise.is_empty() {
            return Err("noise: at least one entry is required".into());
        }
        for (i, n) in self.noise.iter().enumerate() {
            match n {
                Noise::Sigma { sigma } if !(*sigma > 0.0 && sigma.is_finite()) => {
                    return Err(format!("noise[{i}].sigma: {sigma} must be positive"));
                }
                Noise::Snr { snr } if !(*snr > 0.0 && snr.is_finite()) => {
                    return Err(format!("noise[{i}].snr: {snr} must be positive"));
                }
                Noise::Physical { params } => {
                    params.validate().map_err(|e| format!("noise[{i}].params: {e}"))?;
                }
                _ => {}
            }
        }
        if self.protocol.is_empty() {
            return Err("protocol: at least one entry is required".into());
        }
        for (i, p) in self.protocol.iter().enumerate() {
            if p.attempts == 0 {
                return Err(format!("protocol[{i}].attempts: must be at least 1"));
            }
            if p.scheme == Scheme::Single && p.attempts != 1 {
                return Err(format!(
                    "protocol[{i}].attempts: the single scheme runs exactly 1 attempt, not {}",
                    p.attempts
                ));
            }
            if p.l_max == 0 {
                return Err(format!("protocol[{i}].l_max: must be at least 1"));
            }
            if p.et_enabled && p.et_window == 0 {
                return Err(format!("protocol[{i}].et_window: must be at least 1"));
            }
            if !(p.llr_clamp > 0.0 && p.llr_clamp.is_finite()) {
                return Err(format!("protocol[{i}].llr_clamp: must be positive"));
            }
            let beta1 = p.beta1.values();
            if beta1.is_empty() {
                return Err(format!("protocol[{i}].beta1: list must not be empty"));
            }
            for b in beta1 {
                if !(b > 0.0 && b.is_finite()) {
                    return Err(format!("protocol[{i}].beta1: {b} must be positive"));
                }
            }
            let dbeta = p.dbeta_rel.values();
            if dbeta.is_empty() {
                return Err(format!("protocol[{i}].dbeta_rel: list must not be empty"));
            }
            for d in dbeta {
                if !(0.0..1.0).contains(&d) {
                    return Err(format!("protocol[{i}].dbeta_rel: {d} must lie in [0, 1)"));
                }
            }
        }
        Ok(())
    }

    /// Row-major expansion: noise, then protocol entry, then `beta1`, then
    /// `dbeta_rel`.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        let mut grid_index = 0;
        for noise_index in 0..self.noise.len() {
            for (protocol_index, entry) in self.protocol.iter().enumerate() {
                for &beta1 in &entry.beta1.values() {
                    for &dbeta_rel in &entry.dbeta_rel.values() {
                        points.push(GridPoint {
                            grid_index,
                            noise_index,
                            protocol_index,
                            beta1,
                            dbeta_rel,
                        });
                        grid_index += 1;
                    }
                }
            }
        }
        points
    }

    pub fn campaign(&self, pt: &GridPoint) -> CampaignConfig {
        let entry = &self.protocol[pt.protocol_index];
        CampaignConfig {
            protocol: ProtocolConfig {
                scheme: entry.scheme,
                schedule: RateSchedule {
                    beta1: pt.beta1,
                    dbeta_rel: pt.dbeta_rel,
                    attempts: entry.attempts,
                },
                inherit_llrs: entry.inherit_llrs,
                l_max: entry.l_max,
                et_enabled: entry.et_enabled,
                et_window: entry.et_window,
                llr_clamp: entry.llr_clamp,
                check_rule: entry.check_rule,
            },
            noise: self.noise[pt.noise_index],
            holevo: self.holevo.clone(),
            n_frames: self.n_frames,
            seed: sweep_seed(self.seed, pt.grid_index, self.seed_mode),
        }
    }

    /// Modulation variance of the grid point, when the noise entry carries a
    /// physical model.
    pub fn v_a(&self, pt: &GridPoint) -> Option<f64> {
        match self.noise[pt.noise_index] {
            Noise::Physical { params } => Some(params.v_a),
            _ => None,
        }
    }
}

pub fn load_code(src: &CodeSource, config_dir: &Path) -> Result<SparsePcm, String> {
    match (&src.generate, &src.alist) {
        (Some(g), None) => {
            let made = match g.base_col_degree {
                None => generate_raptor_family(g.seed, g.base_n, g.base_m, g.max_ext, g.ext_degree),
                Some(deg) => generate_raptor_family_with_degree(
                    g.seed,
                    g.base_n,
                    g.base_m,
                    g.max_ext,
                    g.ext_degree,
                    deg,
                ),
            };
            made.map_err(|e| format!("code.generate: {e}"))
        }
        (None, Some(path)) => {
            let full = if path.is_absolute() { path.clone() } else { config_dir.join(path) };
            let text = std::fs::read_to_string(&full)
                .map_err(|e| format!("code.alist: reading {}: {e}", full.display()))?;
            load_alist(&text).map_err(|e| format!("code.alist: {}: {e}", full.display()))
        }
        _ => Err("code: exactly one of `generate` or `alist` must be set".into()),
    }
}
