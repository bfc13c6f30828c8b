//! Run configuration: a TOML file of optional keys over the default
//! scenario (100 nodes, 100x100 m field, 2 J nodes, 516-byte messages),
//! strictly validated. Unknown keys are rejected by name.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::cluster::ThresholdPolicy;
use crate::energy::{optimal_cluster_count, FieldParams, RadioParams};
use crate::sim::{Algorithm, RotationRule, SimParams};
use crate::traj::Point2D;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {field} {constraint}")]
    Invalid {
        field: &'static str,
        constraint: String,
    },
}

fn invalid(field: &'static str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        constraint: constraint.into(),
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    field: FieldSection,
    #[serde(default)]
    radio: RadioSection,
    #[serde(default)]
    node: NodeSection,
    #[serde(default)]
    message: MessageSection,
    #[serde(default)]
    routing: RoutingSection,
    #[serde(default)]
    clustering: ClusteringSection,
    #[serde(default)]
    rotation: RotationSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    leach: LeachSection,
    #[serde(default)]
    eecr: EecrSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldSection {
    #[serde(default = "default_n_nodes")]
    n_nodes: usize,
    #[serde(default = "default_side_m")]
    side_m: f64,
    /// Base station position; defaults to (side/2, side + 40).
    bs_x_m: Option<f64>,
    bs_y_m: Option<f64>,
    /// Head-to-base-station distance for the analytic cluster-count model;
    /// defaults to the base station's distance from the field centre.
    d1_m: Option<f64>,
}

fn default_n_nodes() -> usize {
    100
}

fn default_side_m() -> f64 {
    100.0
}

impl Default for FieldSection {
    fn default() -> Self {
        Self {
            n_nodes: default_n_nodes(),
            side_m: default_side_m(),
            bs_x_m: None,
            bs_y_m: None,
            d1_m: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RadioSection {
    e_tx_j_per_bit: f64,
    e_rx_j_per_bit: f64,
    e_da_j_per_bit: f64,
    eps1_j_per_bit_m2: f64,
    eps2_j_per_bit_m4: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        let p = RadioParams::default();
        Self {
            e_tx_j_per_bit: p.e_tx,
            e_rx_j_per_bit: p.e_rx,
            e_da_j_per_bit: p.e_da,
            eps1_j_per_bit_m2: p.eps1,
            eps2_j_per_bit_m4: p.eps2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NodeSection {
    initial_energy_j: f64,
}

impl Default for NodeSection {
    fn default() -> Self {
        Self { initial_energy_j: 2.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MessageSection {
    message_bytes: u64,
    control_bits: u64,
}

impl Default for MessageSection {
    fn default() -> Self {
        Self {
            message_bytes: 516,
            control_bits: 200,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RoutingSection {
    radio_range_m: f64,
}

impl Default for RoutingSection {
    fn default() -> Self {
        Self { radio_range_m: 30.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ClusteringSection {
    /// "fixed" uses threshold_m (or half the largest dissimilarity when
    /// unset); "sweep-to-m" picks the largest threshold that still yields
    /// the analytically optimal cluster count.
    threshold_mode: String,
    threshold_m: Option<f64>,
    reelect_period: u64,
}

impl Default for ClusteringSection {
    fn default() -> Self {
        Self {
            threshold_mode: "fixed".to_owned(),
            threshold_m: None,
            reelect_period: 20,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RotationSection {
    use_member_mean: bool,
    min_energy_fraction: f64,
}

impl Default for RotationSection {
    fn default() -> Self {
        let r = RotationRule::default();
        Self {
            use_member_mean: r.use_member_mean,
            min_energy_fraction: r.min_energy_fraction,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunSection {
    max_rounds: u64,
    seeds: Vec<u64>,
    /// "trajectory", "leach", or "both".
    algorithm: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            max_rounds: 20_000,
            seeds: vec![1],
            algorithm: "both".to_owned(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LeachSection {
    /// Per-node head probability; defaults to M/N with M from the analytic
    /// optimum.
    p_head: Option<f64>,
}

/// Weight coefficients of the comparison protocol some deployments document
/// alongside their runs. Accepted so existing configs parse; nothing here
/// reads them.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EecrSection {
    c1: f64,
    c2: f64,
    c3: f64,
}

impl Default for EecrSection {
    fn default() -> Self {
        Self { c1: 0.5, c2: 0.4, c3: 0.1 }
    }
}

/// A fully resolved, validated configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_nodes: usize,
    pub side_m: f64,
    pub base_station: Point2D,
    pub d1_m: f64,
    pub initial_energy_j: f64,
    pub message_bytes: u64,
    pub control_bits: u64,
    pub radio_range_m: f64,
    pub radio: RadioParams,
    pub threshold: ThresholdPolicy,
    pub reelect_period: u64,
    pub rotation: RotationRule,
    pub max_rounds: u64,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub leach_p_head: f64,
}

impl SimConfig {
    /// The per-run parameter block for one algorithm.
    pub fn sim_params(&self, algorithm: Algorithm) -> SimParams {
        SimParams {
            n_nodes: self.n_nodes,
            side_m: self.side_m,
            base_station: self.base_station,
            initial_energy_j: self.initial_energy_j,
            message_bits: self.message_bytes * 8,
            control_bits: self.control_bits,
            radio_range_m: self.radio_range_m,
            threshold: self.threshold,
            reelect_period: self.reelect_period,
            rotation: self.rotation,
            max_rounds: self.max_rounds,
            radio: self.radio,
            algorithm,
            leach_p_head: self.leach_p_head,
        }
    }
}

pub fn load_config<P: AsRef<Path>>(path: P) -> Result<SimConfig, ConfigError> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let file: FileConfig = toml::from_str(text)?;
    resolve(file)
}

fn resolve(file: FileConfig) -> Result<SimConfig, ConfigError> {
    let n_nodes = file.field.n_nodes;
    if n_nodes < 1 {
        return Err(invalid("field.n_nodes", "must be at least 1"));
    }
    let side_m = file.field.side_m;
    if !(side_m.is_finite() && side_m > 0.0) {
        return Err(invalid("field.side_m", "must be positive"));
    }
    let bs_x = file.field.bs_x_m.unwrap_or(side_m / 2.0);
    let bs_y = file.field.bs_y_m.unwrap_or(side_m + 40.0);
    if !(bs_x.is_finite() && bs_y.is_finite()) {
        return Err(invalid("field.bs_x_m/bs_y_m", "must be finite"));
    }
    let base_station = Point2D::new(bs_x, bs_y);
    let centre = Point2D::new(side_m / 2.0, side_m / 2.0);
    let d1_m = file.field.d1_m.unwrap_or_else(|| base_station.distance_to(centre));
    if !(d1_m.is_finite() && d1_m > 0.0) {
        return Err(invalid("field.d1_m", "must be positive"));
    }

    let radio = RadioParams::new(
        file.radio.e_tx_j_per_bit,
        file.radio.e_rx_j_per_bit,
        file.radio.e_da_j_per_bit,
        file.radio.eps1_j_per_bit_m2,
        file.radio.eps2_j_per_bit_m4,
    )
    .map_err(|e| invalid("radio", e.to_string()))?;

    let initial_energy_j = file.node.initial_energy_j;
    if !(initial_energy_j.is_finite() && initial_energy_j > 0.0) {
        return Err(invalid("node.initial_energy_j", "must be positive"));
    }
    if file.message.message_bytes < 1 {
        return Err(invalid("message.message_bytes", "must be at least 1"));
    }
    let radio_range_m = file.routing.radio_range_m;
    if !(radio_range_m.is_finite() && radio_range_m > 0.0) {
        return Err(invalid("routing.radio_range_m", "must be positive"));
    }
    if file.clustering.reelect_period < 1 {
        return Err(invalid("clustering.reelect_period", "must be at least 1"));
    }
    let min_fraction = file.rotation.min_energy_fraction;
    if !(min_fraction.is_finite() && (0.0..=1.0).contains(&min_fraction)) {
        return Err(invalid("rotation.min_energy_fraction", "must lie in [0, 1]"));
    }
    if file.run.seeds.is_empty() {
        return Err(invalid("run.seeds", "must contain at least one seed"));
    }

    // The analytic optimum is needed lazily: for the threshold sweep target
    // and for the default baseline head probability.
    let optimal_m = || -> Result<usize, ConfigError> {
        let field = FieldParams::new(n_nodes, side_m, d1_m)
            .map_err(|e| invalid("field", e.to_string()))?;
        let (_, m) = optimal_cluster_count(&field, &radio)
            .map_err(|e| invalid("field.d1_m", e.to_string()))?;
        Ok(m)
    };

    let threshold = match file.clustering.threshold_mode.as_str() {
        "fixed" => match file.clustering.threshold_m {
            Some(t) if t.is_finite() && t >= 0.0 => ThresholdPolicy::Fixed(t),
            Some(_) => {
                return Err(invalid("clustering.threshold_m", "must be non-negative"));
            }
            None => ThresholdPolicy::FractionOfMax(0.5),
        },
        "sweep-to-m" => ThresholdPolicy::SweepToTarget(optimal_m()?),
        other => {
            return Err(invalid(
                "clustering.threshold_mode",
                format!("must be \"fixed\" or \"sweep-to-m\", got \"{other}\""),
            ));
        }
    };

    let algorithms = match file.run.algorithm.as_str() {
        "trajectory" => vec![Algorithm::Trajectory],
        "leach" => vec![Algorithm::Leach],
        // ordered by name, matching the output ordering
        "both" => vec![Algorithm::Leach, Algorithm::Trajectory],
        other => {
            return Err(invalid(
                "run.algorithm",
                format!("must be \"trajectory\", \"leach\" or \"both\", got \"{other}\""),
            ));
        }
    };

    let leach_p_head = match file.leach.p_head {
        Some(p) if p.is_finite() && p > 0.0 && p <= 1.0 => p,
        Some(_) => return Err(invalid("leach.p_head", "must lie in (0, 1]")),
        None => {
            if algorithms.contains(&Algorithm::Leach) {
                optimal_m()? as f64 / n_nodes as f64
            } else {
                1.0 // unused placeholder
            }
        }
    };

    let _ = file.eecr; // parsed for compatibility, deliberately unused

    Ok(SimConfig {
        n_nodes,
        side_m,
        base_station,
        d1_m,
        initial_energy_j,
        message_bytes: file.message.message_bytes,
        control_bits: file.message.control_bits,
        radio_range_m,
        radio,
        threshold,
        reelect_period: file.clustering.reelect_period,
        rotation: RotationRule {
            use_member_mean: file.rotation.use_member_mean,
            min_energy_fraction: min_fraction,
        },
        max_rounds: file.run.max_rounds,
        seeds: file.run.seeds,
        algorithms,
        leach_p_head,
    })
}
