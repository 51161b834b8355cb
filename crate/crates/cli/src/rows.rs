//! Result persistence: a fixed-schema CSV for tables and a JSON-lines
//! mirror carrying the full per-attempt detail.

use sha2::{Digest, Sha256};

use recon_core::protocol::CampaignSummary;

use crate::config::{ExperimentConfig, GridPoint};

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CSV_HEADER: &str = "scheme,k,snr,v_a,beta1,dbeta_rel,lmax,fer1,fer_overall,\
fer_ci_lo,fer_ci_hi,lbar,dbar,skf,beta_eff,gain_vs_baseline,bound_ok,\
leak_bits_per_symbol,n_frames,seed,config_hash,schema_version";

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn sha16(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the effective experiment config (after CLI overrides), via its
/// canonical JSON form. Identical configs hash identically across runs.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    sha16(json.as_bytes())
}

pub struct ResultRow {
    pub grid_index: u64,
    pub noise_index: usize,
    pub protocol_index: usize,
    pub beta1: f64,
    pub dbeta_rel: f64,
    pub l_max: usize,
    pub v_a: Option<f64>,
    pub seed: u64,
    pub gain_vs_baseline: f64,
    pub bound_ok: bool,
    pub summary: CampaignSummary,
    pub config_hash: String,
    pub code_hash: String,
}

impl ResultRow {
    pub fn new(
        cfg: &ExperimentConfig,
        pt: &GridPoint,
        seed: u64,
        summary: CampaignSummary,
        config_hash: &str,
        code_hash: &str,
    ) -> Self {
        let entry = &cfg.protocol[pt.protocol_index];
        ResultRow {
            grid_index: pt.grid_index,
            noise_index: pt.noise_index,
            protocol_index: pt.protocol_index,
            beta1: pt.beta1,
            dbeta_rel: pt.dbeta_rel,
            l_max: entry.l_max,
            v_a: cfg.v_a(pt),
            seed,
            gain_vs_baseline: summary.gain_vs_first_attempt(),
            bound_ok: summary.bound_ok(),
            summary,
            config_hash: config_hash.to_string(),
            code_hash: code_hash.to_string(),
        }
    }

    pub fn csv_line(&self) -> String {
        let s = &self.summary;
        let v_a = self.v_a.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.scheme.label(),
            s.per_attempt.len(),
            s.snr,
            v_a,
            self.beta1,
            self.dbeta_rel,
            self.l_max,
            s.fer1,
            s.fer_overall,
            s.fer_ci.0,
            s.fer_ci.1,
            s.lbar,
            s.dbar_model,
            s.skf,
            s.beta_eff,
            self.gain_vs_baseline,
            self.bound_ok,
            s.leak_bits_per_symbol,
            s.n_frames,
            self.seed,
            self.config_hash,
            SCHEMA_VERSION,
        )
    }

    pub fn json_line(&self) -> String {
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "artifact_version": ARTIFACT_VERSION,
            "config_hash": self.config_hash,
            "code_hash": self.code_hash,
            "grid_index": self.grid_index,
            "noise_index": self.noise_index,
            "protocol_index": self.protocol_index,
            "seed": self.seed,
            "beta1_target": self.beta1,
            "dbeta_rel": self.dbeta_rel,
            "l_max": self.l_max,
            "v_a": self.v_a,
            "gain_vs_baseline": self.gain_vs_baseline,
            "bound_ok": self.bound_ok,
            "result": self.summary,
        })
        .to_string()
    }
}
