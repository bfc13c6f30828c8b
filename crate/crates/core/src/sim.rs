//! Round-based network simulation: deployment, hello-path construction,
//! cluster-head election from clustered paths, data rounds, head rotation,
//! and a randomized-rotation baseline sharing the same round mechanics.
//!
//! The whole simulation is a pure function of its parameters and seed: the
//! only randomness is the deployment draw and the baseline's head election,
//! both from one seeded stream, and every iteration order is fixed.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cluster::{cluster_matrix, resolve_threshold, ClusterError, ThresholdPolicy};
use crate::energy::RadioParams;
use crate::traj::{build_dissimilarity_matrix, Point2D, TrajError, Trajectory};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Traj(#[from] TrajError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Head,
    Member,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub nid: usize,
    pub pos: Point2D,
    pub energy_j: f64,
    pub alive: bool,
    pub role: Role,
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub head: usize,
    /// Member node ids, head excluded. May contain nodes that have since
    /// died; every consumer checks liveness.
    pub members: Vec<usize>,
}

/// A node's multi-hop route to the base station, as both node ids and the
/// trajectory of their positions (the base station itself is not a vertex).
#[derive(Debug, Clone)]
pub struct HelloPath {
    pub nids: Vec<usize>,
    pub trajectory: Trajectory,
    /// True when forwarding got stuck and the last node fell back to a
    /// direct (possibly longer-than-range) hop to the base station.
    pub used_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct NetworkState {
    pub nodes: Vec<Node>,
    pub base_station: Point2D,
    pub round: u64,
    pub clusters: Vec<Cluster>,
    pub rng_seed: u64,
    rng: ChaCha8Rng,
    pub fallback_paths_last_election: usize,
}

/// Per-round ledger snapshot. Field order mirrors the rounds.csv schema.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: u64,
    pub alive_count: usize,
    pub packets_delivered_total: u64,
    pub energy_spent_this_round_j: f64,
    pub residual_energy_total_j: f64,
    pub head_rotations: u32,
    pub reclusterings: u32,
}

/// When a head hands its role to the strongest member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationRule {
    /// Rotate when the head's energy drops below the mean of its alive
    /// members' energies.
    pub use_member_mean: bool,
    /// Rotate when the head's energy drops below this fraction of the
    /// initial energy.
    pub min_energy_fraction: f64,
}

impl Default for RotationRule {
    fn default() -> Self {
        Self {
            use_member_mean: true,
            min_energy_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Cluster-head election by clustering hello paths.
    Trajectory,
    /// Randomized rotation baseline: every alive node heads with a fixed
    /// probability, re-drawn every round.
    Leach,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Trajectory => "trajectory",
            Algorithm::Leach => "leach",
        }
    }
}

/// Everything a single run needs besides the seed.
#[derive(Debug, Clone)]
pub struct SimParams {
    pub n_nodes: usize,
    pub side_m: f64,
    pub base_station: Point2D,
    pub initial_energy_j: f64,
    pub message_bits: u64,
    pub control_bits: u64,
    pub radio_range_m: f64,
    pub threshold: ThresholdPolicy,
    pub reelect_period: u64,
    pub rotation: RotationRule,
    pub max_rounds: u64,
    pub radio: RadioParams,
    pub algorithm: Algorithm,
    pub leach_p_head: f64,
}

impl NetworkState {
    /// Builds a state from explicit node positions; `deploy` is this plus a
    /// uniform draw.
    pub fn with_nodes(
        positions: Vec<Point2D>,
        base_station: Point2D,
        initial_energy_j: f64,
        seed: u64,
    ) -> Self {
        let nodes = positions
            .into_iter()
            .enumerate()
            .map(|(nid, pos)| Node {
                nid,
                pos,
                energy_j: initial_energy_j,
                alive: initial_energy_j > 0.0,
                role: Role::Member,
                cluster: None,
            })
            .collect();
        Self {
            nodes,
            base_station,
            round: 0,
            clusters: Vec::new(),
            rng_seed: seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            fallback_paths_last_election: 0,
        }
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn residual_energy_total_j(&self) -> f64 {
        self.nodes.iter().map(|n| n.energy_j).sum()
    }
}

/// Scatters `n` nodes i.i.d. uniformly over the `[0, side]²` field.
/// Identical seeds give bit-identical deployments.
pub fn deploy(n: usize, side_m: f64, base_station: Point2D, seed: u64) -> NetworkState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n)
        .map(|_| Point2D::new(rng.gen::<f64>() * side_m, rng.gen::<f64>() * side_m))
        .collect();
    let mut state = NetworkState::with_nodes(positions, base_station, 0.0, seed);
    state.rng = rng; // continue the same stream for later draws
    state
}

/// Debits `cost_j` from a node. The event completes only when the node is
/// alive and has the full amount; otherwise whatever remains is drained and
/// the node dies. Returns whether the event completed.
fn charge(nodes: &mut [Node], nid: usize, cost_j: f64, spent_j: &mut f64) -> bool {
    let node = &mut nodes[nid];
    if !node.alive {
        return false;
    }
    let debit = cost_j.min(node.energy_j);
    node.energy_j -= debit;
    *spent_j += debit;
    if node.energy_j <= 0.0 {
        node.energy_j = 0.0;
        node.alive = false;
    }
    debit == cost_j
}

/// Greedy geographic forwarding for every alive node, in nid order: each
/// relay hands the packet to the in-range neighbor strictly closest to the
/// base station (ties to the lowest nid) until the base station is in range.
/// A stuck relay transmits directly to the base station and the path is
/// flagged as a fallback.
///
/// Hello energy is charged hop by hop (tx at the sender, rx at the relay;
/// the base station is free). A death mid-path stops that path's charges.
pub fn build_trajectories(
    state: &mut NetworkState,
    radio_range_m: f64,
    control_bits: u64,
    radio: &RadioParams,
    spent_j: &mut f64,
) -> Vec<HelloPath> {
    let n = state.nodes.len();
    let bs = state.base_station;
    let mut paths = Vec::new();

    for origin in 0..n {
        if !state.nodes[origin].alive {
            continue;
        }

        let mut nids = vec![origin];
        let mut used_fallback = false;
        let mut cur = origin;
        loop {
            let cur_pos = state.nodes[cur].pos;
            let cur_to_bs = cur_pos.distance_to(bs);
            if cur_to_bs <= radio_range_m {
                break;
            }
            let mut next: Option<(usize, f64)> = None;
            for cand in 0..n {
                if cand == cur || !state.nodes[cand].alive {
                    continue;
                }
                let cand_pos = state.nodes[cand].pos;
                if cur_pos.distance_to(cand_pos) > radio_range_m {
                    continue;
                }
                let cand_to_bs = cand_pos.distance_to(bs);
                if cand_to_bs >= cur_to_bs {
                    continue;
                }
                if next.map_or(true, |(_, best)| cand_to_bs < best) {
                    next = Some((cand, cand_to_bs));
                }
            }
            match next {
                Some((nid, _)) => {
                    nids.push(nid);
                    cur = nid;
                }
                None => {
                    used_fallback = true;
                    break;
                }
            }
        }

        // Charge the hello along the planned route.
        let mut forwarding = true;
        for w in nids.windows(2) {
            let (a, b) = (w[0], w[1]);
            let hop = state.nodes[a].pos.distance_to(state.nodes[b].pos);
            let tx = radio
                .tx_energy(control_bits, hop)
                .expect("hop distance is non-negative");
            if !charge(&mut state.nodes, a, tx, spent_j) {
                forwarding = false;
                break;
            }
            if !charge(&mut state.nodes, b, radio.rx_energy(control_bits), spent_j) {
                forwarding = false;
                break;
            }
        }
        if forwarding {
            let last = *nids.last().expect("path has at least the origin");
            let final_hop = state.nodes[last].pos.distance_to(bs);
            let tx = radio
                .tx_energy(control_bits, final_hop)
                .expect("distance to base station is non-negative");
            charge(&mut state.nodes, last, tx, spent_j);
        }

        let points = nids.iter().map(|&nid| state.nodes[nid].pos).collect();
        let trajectory =
            Trajectory::new(origin, points).expect("path always contains the origin");
        paths.push(HelloPath {
            nids,
            trajectory,
            used_fallback,
        });
    }
    paths
}

/// Clusters the hello paths, takes the union of the nodes on every cluster's
/// representative path as the head set (alive nodes only), and assigns each
/// remaining alive node to its nearest head. Every alive node is then charged
/// the reception of the base station's broadcast.
pub fn elect_cluster_heads(
    state: &mut NetworkState,
    paths: &[HelloPath],
    policy: ThresholdPolicy,
    control_bits: u64,
    radio: &RadioParams,
    spent_j: &mut f64,
) -> Result<(), SimError> {
    state.fallback_paths_last_election = paths.iter().filter(|p| p.used_fallback).count();

    let mut head_set: BTreeSet<usize> = BTreeSet::new();
    if !paths.is_empty() {
        let ts: Vec<Trajectory> = paths.iter().map(|p| p.trajectory.clone()).collect();
        let matrix = build_dissimilarity_matrix(&ts)?;
        let threshold = resolve_threshold(&matrix, policy);
        let (_, reps) = cluster_matrix(&matrix, threshold)?;
        for &rep in reps.reps() {
            for &nid in &paths[rep].nids {
                if state.nodes[nid].alive {
                    head_set.insert(nid);
                }
            }
        }
    }
    if head_set.is_empty() {
        // Every representative-path node is dead: promote the strongest
        // alive node instead.
        let strongest = state
            .nodes
            .iter()
            .filter(|n| n.alive)
            .max_by(|a, b| {
                a.energy_j
                    .partial_cmp(&b.energy_j)
                    .expect("energies are finite")
                    .then(b.nid.cmp(&a.nid))
            })
            .map(|n| n.nid);
        match strongest {
            Some(nid) => {
                head_set.insert(nid);
            }
            None => {
                state.clusters.clear();
                return Ok(()); // nobody left to organize
            }
        }
    }

    let heads: Vec<usize> = head_set.into_iter().collect();
    state.clusters = heads
        .iter()
        .map(|&h| Cluster {
            head: h,
            members: Vec::new(),
        })
        .collect();
    for node in &mut state.nodes {
        node.cluster = None;
        node.role = Role::Member;
    }
    for (ci, &h) in heads.iter().enumerate() {
        state.nodes[h].role = Role::Head;
        state.nodes[h].cluster = Some(ci);
    }
    for nid in 0..state.nodes.len() {
        if !state.nodes[nid].alive || state.nodes[nid].role == Role::Head {
            continue;
        }
        let pos = state.nodes[nid].pos;
        let mut best = 0usize;
        let mut best_d = pos.distance_to(state.nodes[heads[0]].pos);
        for (ci, &h) in heads.iter().enumerate().skip(1) {
            let d = pos.distance_to(state.nodes[h].pos);
            if d < best_d {
                best = ci;
                best_d = d;
            }
        }
        state.nodes[nid].cluster = Some(best);
        state.clusters[best].members.push(nid);
    }

    // Everyone alive hears the cluster broadcast.
    let rx = radio.rx_energy(control_bits);
    for nid in 0..state.nodes.len() {
        if state.nodes[nid].alive {
            charge(&mut state.nodes, nid, rx, spent_j);
        }
    }
    Ok(())
}

/// One data round: members transmit to their heads in nid order, then each
/// head (in head-nid order) receives, aggregates its members' frames plus its
/// own, and uplinks one compressed frame. Returns packets delivered.
pub fn run_round(
    state: &mut NetworkState,
    message_bits: u64,
    radio: &RadioParams,
    spent_j: &mut f64,
) -> u64 {
    let mut sent = vec![0u64; state.clusters.len()];

    for nid in 0..state.nodes.len() {
        let node = &state.nodes[nid];
        if !node.alive || node.role != Role::Member {
            continue;
        }
        let Some(ci) = node.cluster else { continue };
        let head = state.clusters[ci].head;
        let d = node.pos.distance_to(state.nodes[head].pos);
        let tx = radio
            .tx_energy(message_bits, d)
            .expect("member-head distance is non-negative");
        if charge(&mut state.nodes, nid, tx, spent_j) {
            sent[ci] += 1;
        }
    }

    let mut delivered = 0u64;
    for ci in 0..state.clusters.len() {
        let head = state.clusters[ci].head;
        if !state.nodes[head].alive {
            continue; // incoming frames are lost
        }
        let mut received = 0u64;
        for _ in 0..sent[ci] {
            if charge(&mut state.nodes, head, radio.rx_energy(message_bits), spent_j) {
                received += 1;
            } else {
                break;
            }
        }
        if !state.nodes[head].alive {
            continue;
        }
        let agg = radio.aggregation_energy(message_bits, received + 1);
        if !charge(&mut state.nodes, head, agg, spent_j) {
            continue;
        }
        if !state.nodes[head].alive {
            continue;
        }
        let d = state.nodes[head].pos.distance_to(state.base_station);
        let tx = radio
            .tx_energy(message_bits, d)
            .expect("head-bs distance is non-negative");
        if charge(&mut state.nodes, head, tx, spent_j) {
            delivered += 1;
        }
    }
    delivered
}

/// Hands each triggered cluster's head role to the alive member with the
/// most residual energy (ties to the lowest nid). A cluster triggers when
/// its head is dead, below the configured fraction of initial energy, or
/// below its alive members' mean energy. Returns the number of rotations.
///
/// Clusters left with neither an alive head nor alive members are dissolved.
pub fn maybe_rotate_heads(
    state: &mut NetworkState,
    rule: &RotationRule,
    initial_energy_j: f64,
    control_bits: u64,
    radio: &RadioParams,
    spent_j: &mut f64,
) -> u32 {
    let mut rotations = 0u32;
    let mut any_dissolved = false;

    for ci in 0..state.clusters.len() {
        let head = state.clusters[ci].head;
        let head_alive = state.nodes[head].alive;
        let head_energy = state.nodes[head].energy_j;
        let alive_members: Vec<usize> = state.clusters[ci]
            .members
            .iter()
            .copied()
            .filter(|&m| state.nodes[m].alive)
            .collect();

        let below_fraction = head_energy < rule.min_energy_fraction * initial_energy_j;
        let below_member_mean = rule.use_member_mean
            && !alive_members.is_empty()
            && head_energy
                < alive_members
                    .iter()
                    .map(|&m| state.nodes[m].energy_j)
                    .sum::<f64>()
                    / alive_members.len() as f64;
        if !(below_fraction || below_member_mean || !head_alive) {
            continue;
        }

        if alive_members.is_empty() {
            if !head_alive {
                any_dissolved = true;
                state.clusters[ci].head = usize::MAX; // marked for removal
            }
            // An alive solo head just carries on.
            continue;
        }

        let mut new_head = alive_members[0];
        for &m in &alive_members[1..] {
            if state.nodes[m].energy_j > state.nodes[new_head].energy_j {
                new_head = m;
            }
        }

        // The outgoing head notifies its members and the base station; a
        // dead head cannot transmit, so the handover is then silent.
        if head_alive {
            let reach = alive_members
                .iter()
                .map(|&m| state.nodes[head].pos.distance_to(state.nodes[m].pos))
                .fold(0.0, f64::max);
            let tx_members = radio
                .tx_energy(control_bits, reach)
                .expect("member distance is non-negative");
            charge(&mut state.nodes, head, tx_members, spent_j);
            if state.nodes[head].alive {
                let d_bs = state.nodes[head].pos.distance_to(state.base_station);
                let tx_bs = radio
                    .tx_energy(control_bits, d_bs)
                    .expect("bs distance is non-negative");
                charge(&mut state.nodes, head, tx_bs, spent_j);
            }
            for &m in &alive_members {
                charge(&mut state.nodes, m, radio.rx_energy(control_bits), spent_j);
            }
        }

        let cluster = &mut state.clusters[ci];
        cluster.head = new_head;
        cluster.members.retain(|&m| m != new_head);
        cluster.members.push(head);
        state.nodes[new_head].role = Role::Head;
        state.nodes[head].role = Role::Member;
        rotations += 1;
    }

    if any_dissolved {
        state.clusters.retain(|c| c.head != usize::MAX);
        for node in &mut state.nodes {
            node.cluster = None;
        }
        for ci in 0..state.clusters.len() {
            let head = state.clusters[ci].head;
            state.nodes[head].cluster = Some(ci);
            for mi in 0..state.clusters[ci].members.len() {
                let m = state.clusters[ci].members[mi];
                state.nodes[m].cluster = Some(ci);
            }
        }
    }
    rotations
}

/// Randomized-rotation baseline election: every alive node heads with
/// probability `p_head`, members join their nearest head, and the draw
/// repeats every round from the state's seeded stream. If no head is drawn
/// the strongest alive node is promoted.
pub fn leach_baseline_elect(state: &mut NetworkState, p_head: f64) {
    let mut heads: Vec<usize> = Vec::new();
    for nid in 0..state.nodes.len() {
        if !state.nodes[nid].alive {
            continue;
        }
        if state.rng.gen::<f64>() < p_head {
            heads.push(nid);
        }
    }
    if heads.is_empty() {
        let strongest = state
            .nodes
            .iter()
            .filter(|n| n.alive)
            .max_by(|a, b| {
                a.energy_j
                    .partial_cmp(&b.energy_j)
                    .expect("energies are finite")
                    .then(b.nid.cmp(&a.nid))
            })
            .map(|n| n.nid);
        match strongest {
            Some(nid) => heads.push(nid),
            None => {
                state.clusters.clear();
                return;
            }
        }
    }

    state.clusters = heads
        .iter()
        .map(|&h| Cluster {
            head: h,
            members: Vec::new(),
        })
        .collect();
    for node in &mut state.nodes {
        node.cluster = None;
        node.role = Role::Member;
    }
    for (ci, &h) in heads.iter().enumerate() {
        state.nodes[h].role = Role::Head;
        state.nodes[h].cluster = Some(ci);
    }
    for nid in 0..state.nodes.len() {
        if !state.nodes[nid].alive || state.nodes[nid].role == Role::Head {
            continue;
        }
        let pos = state.nodes[nid].pos;
        let mut best = 0usize;
        let mut best_d = pos.distance_to(state.nodes[heads[0]].pos);
        for (ci, &h) in heads.iter().enumerate().skip(1) {
            let d = pos.distance_to(state.nodes[h].pos);
            if d < best_d {
                best = ci;
                best_d = d;
            }
        }
        state.nodes[nid].cluster = Some(best);
        state.clusters[best].members.push(nid);
    }
}

/// Runs a full simulation: deploy, elect, then rounds of data communication
/// with rotation-driven and periodic re-elections, until every node is dead
/// or `max_rounds` is reached. One metrics record per executed round.
pub fn run_simulation(params: &SimParams, seed: u64) -> Result<Vec<RoundMetrics>, SimError> {
    let mut state = deploy(params.n_nodes, params.side_m, params.base_station, seed);
    for node in &mut state.nodes {
        node.energy_j = params.initial_energy_j;
        node.alive = params.initial_energy_j > 0.0;
    }

    let mut metrics = Vec::new();
    let mut packets_total = 0u64;
    let mut reelect_due = true;
    let mut rounds_since_election = 0u64;

    for round in 1..=params.max_rounds {
        if state.alive_count() == 0 {
            break;
        }
        state.round = round;
        let mut spent = 0.0f64;
        let mut reclusterings = 0u32;

        match params.algorithm {
            Algorithm::Trajectory => {
                rounds_since_election += 1;
                if reelect_due || rounds_since_election >= params.reelect_period {
                    let paths = build_trajectories(
                        &mut state,
                        params.radio_range_m,
                        params.control_bits,
                        &params.radio,
                        &mut spent,
                    );
                    elect_cluster_heads(
                        &mut state,
                        &paths,
                        params.threshold,
                        params.control_bits,
                        &params.radio,
                        &mut spent,
                    )?;
                    reclusterings = 1;
                    reelect_due = false;
                    rounds_since_election = 0;
                }
            }
            Algorithm::Leach => {
                leach_baseline_elect(&mut state, params.leach_p_head);
                reclusterings = 1;
            }
        }

        packets_total += run_round(&mut state, params.message_bits, &params.radio, &mut spent);

        let rotations = match params.algorithm {
            Algorithm::Trajectory => {
                let r = maybe_rotate_heads(
                    &mut state,
                    &params.rotation,
                    params.initial_energy_j,
                    params.control_bits,
                    &params.radio,
                    &mut spent,
                );
                if r > 0 {
                    reelect_due = true;
                }
                r
            }
            Algorithm::Leach => 0,
        };

        metrics.push(RoundMetrics {
            round,
            alive_count: state.alive_count(),
            packets_delivered_total: packets_total,
            energy_spent_this_round_j: spent,
            residual_energy_total_j: state.residual_energy_total_j(),
            head_rotations: rotations,
            reclusterings,
        });
    }
    Ok(metrics)
}
