//! Runs every node of a protocol instance on its own thread.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::node::{run_client_node, run_compute_node, InputPlan, NodeOutcome, RunSpec, Transcript};
use super::schedule::Schedule;
use super::transport::{channel_mesh, tcp_localhost_mesh, Transport};
use super::triples::deal_triples;
use super::{MpcError, NodeId};
use crate::circuit::{BooleanCircuit, OwnerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportKind {
    #[default]
    Channels,
    Tcp,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Nodes `0..n_compute` evaluate the circuit.
    pub n_compute: usize,
    /// Total nodes; nodes past `n_compute` only supply inputs and receive results.
    pub n_nodes: usize,
    pub transport: TransportKind,
    pub seed: u64,
    pub epoch: u32,
    pub capture_view: bool,
}

impl RunOptions {
    pub fn new(n: usize, seed: u64) -> Self {
        RunOptions {
            n_compute: n,
            n_nodes: n,
            transport: TransportKind::Channels,
            seed,
            epoch: 0,
            capture_view: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalRun {
    pub outputs: Vec<bool>,
    /// Results as delivered to the non-computing nodes.
    pub client_outputs: BTreeMap<NodeId, Vec<bool>>,
    /// Indexed by node id.
    pub transcripts: Vec<Transcript>,
    /// Per compute node, its shares of every input group.
    pub input_shares: Vec<BTreeMap<OwnerId, Vec<bool>>>,
    pub and_layers: u32,
    pub and_count: u64,
    pub open_count: usize,
}

fn node_rng(seed: u64, node: NodeId) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(node as u64 + 1);
    rng
}

/// Runs a full instance locally.
///
/// `inputs[node]` holds the plaintext input groups that node supplies;
/// `preshared[c]` holds compute node `c`'s stored shares for the positions
/// listed in `plan.preshared`.
pub fn run_local(
    circuit: &BooleanCircuit,
    plan: &InputPlan,
    inputs: &BTreeMap<NodeId, BTreeMap<OwnerId, Vec<bool>>>,
    preshared: &[BTreeMap<OwnerId, Vec<bool>>],
    opts: &RunOptions,
) -> Result<LocalRun, MpcError> {
    assert!(opts.n_compute >= 1 && opts.n_nodes >= opts.n_compute);
    let schedule = Schedule::new(circuit);
    let spec = RunSpec {
        circuit,
        schedule: &schedule,
        plan,
        n_compute: opts.n_compute,
        result_nodes: (opts.n_compute..opts.n_nodes).collect(),
        epoch: opts.epoch,
        capture_view: opts.capture_view,
    };
    let mut endpoints: Vec<Box<dyn Transport>> = match opts.transport {
        TransportKind::Channels => channel_mesh(opts.n_nodes)
            .into_iter()
            .map(|e| Box::new(e) as Box<dyn Transport>)
            .collect(),
        TransportKind::Tcp => tcp_localhost_mesh(opts.n_nodes)
            .map_err(|e| MpcError::TransportFailure(e.to_string()))?
            .into_iter()
            .map(|e| Box::new(e) as Box<dyn Transport>)
            .collect(),
    };
    let mut pools = deal_triples(
        opts.n_compute,
        schedule.and_count() as usize,
        opts.seed ^ 0x7269_706c_6573,
    )
    .into_iter();
    let empty = BTreeMap::new();

    let results: Vec<Result<NodeOutcome, MpcError>> = std::thread::scope(|s| {
        let handles: Vec<_> = endpoints
            .drain(..)
            .enumerate()
            .map(|(id, mut ep)| {
                let spec = &spec;
                let own = inputs.get(&id).unwrap_or(&empty);
                let pre = preshared.get(id).unwrap_or(&empty);
                let pool = if id < opts.n_compute { pools.next() } else { None };
                let seed = opts.seed;
                s.spawn(move || {
                    let mut rng = node_rng(seed, id);
                    match pool {
                        Some(p) => run_compute_node(spec, ep.as_mut(), p, &mut rng, own, pre),
                        None => run_client_node(spec, ep.as_mut(), &mut rng, own),
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("node thread panicked"))
            .collect()
    });

    if let Some(Err(e)) = results
        .iter()
        .find(|r| matches!(r, Err(MpcError::AbortUnsorted(_))))
    {
        return Err(e.clone());
    }
    let outcomes: Vec<NodeOutcome> = results.into_iter().collect::<Result<_, _>>()?;
    let outputs = outcomes[0].outputs.clone();
    if outcomes[..opts.n_compute].iter().any(|o| o.outputs != outputs) {
        return Err(MpcError::InconsistentResult);
    }
    let client_outputs = outcomes[opts.n_compute..]
        .iter()
        .map(|o| (o.transcript.node, o.outputs.clone()))
        .collect();
    let mut transcripts = Vec::with_capacity(outcomes.len());
    let mut input_shares = Vec::with_capacity(opts.n_compute);
    for (i, o) in outcomes.into_iter().enumerate() {
        transcripts.push(o.transcript);
        if i < opts.n_compute {
            input_shares.push(o.input_shares);
        }
    }
    Ok(LocalRun {
        outputs,
        client_outputs,
        transcripts,
        input_shares,
        and_layers: schedule.and_layers(),
        and_count: schedule.and_count(),
        open_count: schedule.open_count(),
    })
}

/// Evaluates `circuit` among `n` compute nodes; owner `o` is supplied by node `o % n`.
pub fn eval_shared(
    circuit: &BooleanCircuit,
    inputs: &BTreeMap<OwnerId, Vec<bool>>,
    n: usize,
    seed: u64,
) -> Result<LocalRun, MpcError> {
    let mut plan = InputPlan::default();
    let mut by_node: BTreeMap<NodeId, BTreeMap<OwnerId, Vec<bool>>> = BTreeMap::new();
    for &owner in circuit.inputs().keys() {
        let node = owner as usize % n;
        plan.supplier.insert(owner, node);
        if let Some(bits) = inputs.get(&owner) {
            by_node.entry(node).or_default().insert(owner, bits.clone());
        }
    }
    run_local(circuit, &plan, &by_node, &[], &RunOptions::new(n, seed))
}
