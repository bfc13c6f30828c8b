//! First-order radio energy model (free-space below the crossover distance,
//! two-ray above it) and the analytic cluster-count optimum derived from it.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("radio parameter {name} must be positive and finite")]
    NonPositiveParam { name: &'static str },
    #[error("transmission distance must be non-negative and finite, got {value}")]
    InvalidDistance { value: f64 },
    #[error("cluster count {m} outside [1, {n}]")]
    InvalidClusterCount { m: f64, n: usize },
    #[error("field parameter {name} must be positive")]
    InvalidField { name: &'static str },
    #[error("base station too close for this model (eps2*d1^4 <= e_tx)")]
    BaseStationTooClose,
}

/// Per-bit radio energy constants. The crossover distance between the
/// free-space and two-ray amplifier regimes is derived, not configured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Transmit electronics energy, J/bit.
    pub e_tx: f64,
    /// Receive electronics energy, J/bit.
    pub e_rx: f64,
    /// Data aggregation energy, J/bit.
    pub e_da: f64,
    /// Free-space amplifier energy, J/(bit·m²).
    pub eps1: f64,
    /// Two-ray amplifier energy, J/(bit·m⁴).
    pub eps2: f64,
}

impl Default for RadioParams {
    /// Standard first-order constants: 50 nJ/bit electronics, 5 nJ/bit
    /// aggregation, 10 pJ/(bit·m²) and 0.0013 pJ/(bit·m⁴) amplifiers.
    fn default() -> Self {
        Self {
            e_tx: 50e-9,
            e_rx: 50e-9,
            e_da: 5e-9,
            eps1: 10e-12,
            eps2: 0.0013e-12,
        }
    }
}

impl RadioParams {
    pub fn new(e_tx: f64, e_rx: f64, e_da: f64, eps1: f64, eps2: f64) -> Result<Self, EnergyError> {
        for (name, v) in [
            ("e_tx", e_tx),
            ("e_rx", e_rx),
            ("e_da", e_da),
            ("eps1", eps1),
            ("eps2", eps2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EnergyError::NonPositiveParam { name });
            }
        }
        Ok(Self { e_tx, e_rx, e_da, eps1, eps2 })
    }

    /// Distance at which the free-space and two-ray amplifier terms cross:
    /// sqrt(eps1/eps2).
    pub fn crossover_distance_m(&self) -> f64 {
        (self.eps1 / self.eps2).sqrt()
    }

    /// Energy to transmit `bits` over `distance_m`: electronics plus the
    /// d² amplifier below the crossover distance, the d⁴ amplifier at or
    /// above it.
    pub fn tx_energy(&self, bits: u64, distance_m: f64) -> Result<f64, EnergyError> {
        if !distance_m.is_finite() || distance_m < 0.0 {
            return Err(EnergyError::InvalidDistance { value: distance_m });
        }
        let b = bits as f64;
        let amp = if distance_m < self.crossover_distance_m() {
            self.eps1 * distance_m * distance_m
        } else {
            self.eps2 * distance_m.powi(4)
        };
        Ok(b * (self.e_tx + amp))
    }

    /// Energy to receive `bits`.
    pub fn rx_energy(&self, bits: u64) -> f64 {
        bits as f64 * self.e_rx
    }

    /// Energy to aggregate `messages` frames of `bits` bits each.
    pub fn aggregation_energy(&self, bits: u64, messages: u64) -> f64 {
        bits as f64 * messages as f64 * self.e_da
    }
}

/// Deployment geometry used by the analytic cluster-count model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    /// Number of deployed nodes.
    pub n_nodes: usize,
    /// Side of the square field, meters.
    pub side_m: f64,
    /// Head-to-base-station distance assumed by the analysis, meters.
    pub d1_m: f64,
}

impl FieldParams {
    pub fn new(n_nodes: usize, side_m: f64, d1_m: f64) -> Result<Self, EnergyError> {
        if n_nodes < 1 {
            return Err(EnergyError::InvalidField { name: "n_nodes" });
        }
        if !(side_m.is_finite() && side_m > 0.0) {
            return Err(EnergyError::InvalidField { name: "side_m" });
        }
        if !(d1_m.is_finite() && d1_m > 0.0) {
            return Err(EnergyError::InvalidField { name: "d1_m" });
        }
        Ok(Self { n_nodes, side_m, d1_m })
    }
}

/// Per-frame energy breakdown for a network of `m` equal clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterEnergies {
    /// Energy a cluster head spends per frame (receive-equivalent
    /// electronics for N/M frames, aggregation, two-ray uplink).
    pub head_j: f64,
    /// Energy a cluster member spends per frame, with the expected
    /// member-to-head distance d2² = A²/(2πM) folded in.
    pub member_j: f64,
    /// Energy one whole cluster dissipates per frame.
    pub per_cluster_j: f64,
    /// Energy all clusters dissipate per frame.
    pub total_j: f64,
}

/// Frame energy as a function of the (real-valued) cluster count.
///
/// The total is M times the per-cluster energy; its stationary point in M is
/// exactly the closed form returned by [`optimal_cluster_count`].
pub fn analytic_cluster_energy(
    bits: u64,
    m: f64,
    field: &FieldParams,
    radio: &RadioParams,
) -> Result<ClusterEnergies, EnergyError> {
    let n = field.n_nodes as f64;
    if !(m.is_finite() && m >= 1.0 && m <= n) {
        return Err(EnergyError::InvalidClusterCount { m, n: field.n_nodes });
    }
    let b = bits as f64;
    let nodes_per_cluster = n / m;
    let d1 = field.d1_m;

    let head_j = b * radio.e_tx * nodes_per_cluster
        + b * radio.e_da * nodes_per_cluster
        + b * radio.eps2 * d1.powi(4);
    let d2_sq = field.side_m * field.side_m / (2.0 * std::f64::consts::PI * m);
    let member_j = b * radio.e_tx + b * radio.eps1 * d2_sq;
    let per_cluster_j = head_j + (nodes_per_cluster - 1.0) * member_j;
    let total_j = m * per_cluster_j;

    Ok(ClusterEnergies { head_j, member_j, per_cluster_j, total_j })
}

/// Cluster count minimizing the per-frame total energy:
/// M = A · sqrt( N/(2π) · eps1 / (eps2·d1⁴ − e_tx) ).
///
/// Returns the real-valued optimum and its nearest integer (at least 1).
pub fn optimal_cluster_count(
    field: &FieldParams,
    radio: &RadioParams,
) -> Result<(f64, usize), EnergyError> {
    let denom = radio.eps2 * field.d1_m.powi(4) - radio.e_tx;
    if denom <= 0.0 {
        return Err(EnergyError::BaseStationTooClose);
    }
    let n = field.n_nodes as f64;
    let m_real =
        field.side_m * (n / (2.0 * std::f64::consts::PI) * radio.eps1 / denom).sqrt();
    let rounded = (m_real.round() as usize).max(1);
    Ok((m_real, rounded))
}
