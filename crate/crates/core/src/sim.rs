//! Stationary simulation of the dynamic graph.
//!
//! Each potential edge `j` carries an [`EdgeState`]. At time 1 the edge is on
//! with probability `ρ = E X / (E X + E Y)` and the remaining time in its
//! phase is drawn from the residual law of that phase. A duration `d` drawn
//! at time `k` covers observations `k, …, k + d - 1`; counts are recorded
//! before the step to `k + 1`.
//!
//! Randomness: edge `j` owns the ChaCha8 stream number `j` of the generator
//! seeded with the trace seed, so a trace depends only on the seed and the
//! model, never on evaluation order.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::dist::{OnOffLaw, ResidualLaw};
use crate::{Error, Result};

/// Which aggregate count is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Edges,
    Triangles,
    Wedges,
}

impl Observable {
    pub fn as_str(self) -> &'static str {
        match self {
            Observable::Edges => "edges",
            Observable::Triangles => "triangles",
            Observable::Wedges => "wedges",
        }
    }
}

/// On-time law `X`, off-time law `Y` and the number of edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    on: OnOffLaw,
    off: OnOffLaw,
    n: u64,
    vertices: Option<u64>,
}

impl ModelSpec {
    /// `n` independent edges.
    pub fn edges(on: OnOffLaw, off: OnOffLaw, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("edge count must be positive"));
        }
        Ok(ModelSpec {
            on,
            off,
            n,
            vertices: None,
        })
    }

    /// A graph on `vertices` vertices, so `n = N (N - 1) / 2`.
    pub fn graph(on: OnOffLaw, off: OnOffLaw, vertices: u64) -> Result<Self> {
        if vertices < 2 {
            return Err(Error::domain("a graph needs at least two vertices"));
        }
        Ok(ModelSpec {
            on,
            off,
            n: vertices * (vertices - 1) / 2,
            vertices: Some(vertices),
        })
    }

    pub fn on_law(&self) -> &OnOffLaw {
        &self.on
    }

    pub fn off_law(&self) -> &OnOffLaw {
        &self.off
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn vertices(&self) -> Option<u64> {
        self.vertices
    }

    /// Stationary on-probability `ρ = E X / (E X + E Y)`.
    pub fn rho(&self) -> Result<f64> {
        let (ex, ey) = self.means()?;
        Ok(ex / (ex + ey))
    }

    /// `(E X, E Y)`, or a stationarity error when either is infinite.
    pub fn means(&self) -> Result<(f64, f64)> {
        match (self.on.mean(), self.off.mean()) {
            (Ok(ex), Ok(ey)) => Ok((ex, ey)),
            (Err(e), _) | (_, Err(e)) => Err(Error::StationarityUndefined(alloc::format!("{e}"))),
        }
    }
}

/// One edge: its current phase and the number of observations left in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeState {
    pub on: bool,
    pub remaining: u64,
}

/// An observed count series `k = 1, …, K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTrace {
    pub kind: Observable,
    pub values: Vec<u64>,
    pub n: u64,
    pub vertices: Option<u64>,
    pub seed: u64,
}

impl CountTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Uniform draw on `(0, 1)`: 53 random bits, centred in their cell.
#[inline]
pub(crate) fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn edge_rng(seed: u64, edge: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(edge);
    rng
}

/// The state of all edges at time 1 for `seed`.
pub fn stationary_init(model: &ModelSpec, seed: u64) -> Result<Vec<EdgeState>> {
    Ok(EdgeEnsemble::new(model, seed)?.states)
}

/// All `n` edge processes of a model, advanced in lockstep.
#[derive(Debug, Clone)]
pub struct EdgeEnsemble {
    on: OnOffLaw,
    off: OnOffLaw,
    states: Vec<EdgeState>,
    rngs: Vec<ChaCha8Rng>,
    on_count: u64,
}

impl EdgeEnsemble {
    pub fn new(model: &ModelSpec, seed: u64) -> Result<Self> {
        let rho = model.rho()?;
        let on_res = ResidualLaw::new(model.on)?;
        let off_res = ResidualLaw::new(model.off)?;
        let n = model.n as usize;
        let mut states = Vec::with_capacity(n);
        let mut rngs = Vec::with_capacity(n);
        let mut on_count = 0;
        for j in 0..n {
            let mut rng = edge_rng(seed, j as u64);
            let on = uniform(&mut rng) < rho;
            let u = uniform(&mut rng);
            let remaining = if on {
                on_res.sample(u)
            } else {
                off_res.sample(u)
            };
            on_count += on as u64;
            states.push(EdgeState { on, remaining });
            rngs.push(rng);
        }
        Ok(EdgeEnsemble {
            on: model.on,
            off: model.off,
            states,
            rngs,
            on_count,
        })
    }

    /// Number of edges currently on.
    pub fn on_count(&self) -> u64 {
        self.on_count
    }

    pub fn states(&self) -> &[EdgeState] {
        &self.states
    }

    /// Moves every edge one time step ahead.
    pub fn advance(&mut self) {
        self.advance_with(|_, _| {});
    }

    /// Moves every edge one time step ahead, reporting each flip as
    /// `(edge index, new phase)`.
    pub fn advance_with(&mut self, mut on_flip: impl FnMut(usize, bool)) {
        for (j, st) in self.states.iter_mut().enumerate() {
            if st.remaining > 1 {
                st.remaining -= 1;
                continue;
            }
            st.on = !st.on;
            let u = uniform(&mut self.rngs[j]);
            st.remaining = if st.on {
                self.on_count += 1;
                self.on.sample(u)
            } else {
                self.on_count -= 1;
                self.off.sample(u)
            };
            on_flip(j, st.on);
        }
    }
}

/// Adjacency bitsets with running triangle and wedge counts.
#[derive(Debug, Clone)]
pub struct Snapshot {
    vertices: usize,
    words: usize,
    adj: Vec<u64>,
    degree: Vec<u64>,
    triangles: u64,
    wedges: u64,
}

impl Snapshot {
    pub fn empty(vertices: usize) -> Self {
        let words = vertices.div_ceil(64);
        Snapshot {
            vertices,
            words,
            adj: vec![0; vertices * words],
            degree: vec![0; vertices],
            triangles: 0,
            wedges: 0,
        }
    }

    /// A snapshot from per-edge flags, edges in [`edge_endpoints`] order.
    pub fn from_flags(vertices: usize, on: &[bool]) -> Self {
        let mut s = Snapshot::empty(vertices);
        for (e, &flag) in on.iter().enumerate() {
            if flag {
                let (a, b) = edge_endpoints(vertices, e);
                s.set(a, b, true);
            }
        }
        s
    }

    pub fn triangles(&self) -> u64 {
        self.triangles
    }

    pub fn wedges(&self) -> u64 {
        self.wedges
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.adj[v * self.words..(v + 1) * self.words]
    }

    fn common(&self, a: usize, b: usize) -> u64 {
        self.row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| (x & y).count_ones() as u64)
            .sum()
    }

    fn flip_bit(&mut self, a: usize, b: usize) {
        self.adj[a * self.words + b / 64] ^= 1u64 << (b % 64);
        self.adj[b * self.words + a / 64] ^= 1u64 << (a % 64);
    }

    /// Turns edge `{a, b}` on or off, updating the counts.
    pub fn set(&mut self, a: usize, b: usize, on: bool) {
        let present = self.adj[a * self.words + b / 64] >> (b % 64) & 1 == 1;
        if present == on {
            return;
        }
        let common = self.common(a, b);
        if on {
            self.wedges += self.degree[a] + self.degree[b];
            self.triangles += common;
            self.degree[a] += 1;
            self.degree[b] += 1;
        } else {
            self.degree[a] -= 1;
            self.degree[b] -= 1;
            self.wedges -= self.degree[a] + self.degree[b];
            self.triangles -= common;
        }
        self.flip_bit(a, b);
    }

    /// Triangle and wedge counts recomputed from scratch.
    pub fn recount(&self) -> (u64, u64) {
        let mut t = 0;
        for a in 0..self.vertices {
            for b in a + 1..self.vertices {
                if self.row(a)[b / 64] >> (b % 64) & 1 == 1 {
                    t += self.common(a, b);
                }
            }
        }
        let w = self
            .degree
            .iter()
            .map(|&d| d * d.saturating_sub(1) / 2)
            .sum();
        (t / 3, w)
    }
}

/// Endpoints `(a, b)`, `a < b`, of edge number `e` in the order
/// `(0,1), (0,2), …, (0,N-1), (1,2), …`.
pub fn edge_endpoints(vertices: usize, e: usize) -> (usize, usize) {
    let mut a = 0;
    let mut first = 0;
    loop {
        let row = vertices - a - 1;
        if e < first + row {
            return (a, a + 1 + (e - first));
        }
        first += row;
        a += 1;
    }
}

/// Edge processes of a graph model together with their subgraph counts.
#[derive(Debug, Clone)]
pub struct GraphSimulator {
    edges: EdgeEnsemble,
    endpoints: Vec<(usize, usize)>,
    snapshot: Snapshot,
}

impl GraphSimulator {
    pub fn new(model: &ModelSpec, seed: u64) -> Result<Self> {
        let vertices = model
            .vertices
            .ok_or_else(|| Error::domain("subgraph counts need a vertex count"))?;
        if vertices < 3 {
            return Err(Error::domain(
                "subgraph counts need at least three vertices",
            ));
        }
        let vertices = vertices as usize;
        let edges = EdgeEnsemble::new(model, seed)?;
        let endpoints: Vec<_> = (0..model.n as usize)
            .map(|e| edge_endpoints(vertices, e))
            .collect();
        let mut snapshot = Snapshot::empty(vertices);
        for (st, &(a, b)) in edges.states().iter().zip(&endpoints) {
            if st.on {
                snapshot.set(a, b, true);
            }
        }
        Ok(GraphSimulator {
            edges,
            endpoints,
            snapshot,
        })
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    pub fn edges(&self) -> &EdgeEnsemble {
        &self.edges
    }

    pub fn count(&self, kind: Observable) -> u64 {
        match kind {
            Observable::Edges => self.edges.on_count(),
            Observable::Triangles => self.snapshot.triangles(),
            Observable::Wedges => self.snapshot.wedges(),
        }
    }

    pub fn advance(&mut self) {
        let GraphSimulator {
            edges,
            endpoints,
            snapshot,
        } = self;
        edges.advance_with(|e, on| {
            let (a, b) = endpoints[e];
            snapshot.set(a, b, on);
        });
    }
}

/// Feeds the counts at `k = 1, …, K` to `sink` without storing them.
pub fn stream_counts(
    model: &ModelSpec,
    kind: Observable,
    k: usize,
    seed: u64,
    mut sink: impl FnMut(u64),
) -> Result<()> {
    match kind {
        Observable::Edges => {
            let mut ens = EdgeEnsemble::new(model, seed)?;
            for step in 0..k {
                sink(ens.on_count());
                if step + 1 < k {
                    ens.advance();
                }
            }
        }
        Observable::Triangles | Observable::Wedges => {
            let mut sim = GraphSimulator::new(model, seed)?;
            for step in 0..k {
                sink(sim.count(kind));
                if step + 1 < k {
                    sim.advance();
                }
            }
        }
    }
    Ok(())
}

fn collect_trace(model: &ModelSpec, kind: Observable, k: usize, seed: u64) -> Result<CountTrace> {
    if k == 0 {
        return Err(Error::domain("trace length must be at least 1"));
    }
    let mut values = Vec::with_capacity(k);
    stream_counts(model, kind, k, seed, |v| values.push(v))?;
    Ok(CountTrace {
        kind,
        values,
        n: model.n,
        vertices: model.vertices,
        seed,
    })
}

/// Edge-count trace `A_n(1), …, A_n(K)`.
pub fn simulate_edge_trace(model: &ModelSpec, k: usize, seed: u64) -> Result<CountTrace> {
    collect_trace(model, Observable::Edges, k, seed)
}

/// Triangle or wedge count trace of a graph model.
pub fn simulate_graph_trace(
    model: &ModelSpec,
    k: usize,
    seed: u64,
    kind: Observable,
) -> Result<CountTrace> {
    if kind == Observable::Edges {
        return simulate_edge_trace(model, k, seed);
    }
    if model.vertices.is_none() {
        return Err(Error::domain("subgraph counts need a vertex count"));
    }
    collect_trace(model, kind, k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gg(n: u64) -> ModelSpec {
        ModelSpec::edges(
            OnOffLaw::geometric(0.3).unwrap(),
            OnOffLaw::geometric(0.8).unwrap(),
            n,
        )
        .unwrap()
    }

    #[test]
    fn rho_examples() {
        assert!((gg(100).rho().unwrap() - 0.8 / 1.1).abs() < 1e-15);
        let d = OnOffLaw::deterministic(1).unwrap();
        let m = ModelSpec::edges(d, d, 4).unwrap();
        assert_eq!(m.rho().unwrap(), 0.5);
        for st in stationary_init(&m, 3).unwrap() {
            assert_eq!(st.remaining, 1);
        }
        let par = ModelSpec::edges(
            OnOffLaw::pareto(1.0, 3.0).unwrap(),
            OnOffLaw::pareto(1.0, 2.5).unwrap(),
            10,
        )
        .unwrap();
        let z3 = 1.202_056_903_159_594;
        let z25 = 1.341_487_257_250_917;
        assert!((par.rho().unwrap() - z3 / (z3 + z25)).abs() < 1e-12);
    }

    #[test]
    fn infinite_mean_has_no_stationary_start() {
        let m = ModelSpec::edges(
            OnOffLaw::pareto(1.0, 0.9).unwrap(),
            OnOffLaw::geometric(0.5).unwrap(),
            5,
        )
        .unwrap();
        assert!(matches!(
            stationary_init(&m, 1),
            Err(Error::StationarityUndefined(_))
        ));
    }

    #[test]
    fn deterministic_alternation() {
        let d = OnOffLaw::deterministic(1).unwrap();
        let m = ModelSpec::edges(d, d, 2).unwrap();
        // find a seed where both edges start on
        let seed = (0..1000)
            .find(|&s| stationary_init(&m, s).unwrap().iter().all(|e| e.on))
            .unwrap();
        let t = simulate_edge_trace(&m, 8, seed).unwrap();
        assert_eq!(t.values, [2, 0, 2, 0, 2, 0, 2, 0]);
    }

    #[test]
    fn single_step_trace_is_initial_count() {
        let m = gg(50);
        let t = simulate_edge_trace(&m, 1, 9).unwrap();
        let on = stationary_init(&m, 9)
            .unwrap()
            .iter()
            .filter(|e| e.on)
            .count();
        assert_eq!(t.values, [on as u64]);
    }

    #[test]
    fn traces_are_reproducible() {
        let m = gg(30);
        assert_eq!(
            simulate_edge_trace(&m, 500, 42).unwrap(),
            simulate_edge_trace(&m, 500, 42).unwrap()
        );
        assert_ne!(
            simulate_edge_trace(&m, 500, 42).unwrap().values,
            simulate_edge_trace(&m, 500, 43).unwrap().values
        );
    }

    #[test]
    fn durations_stay_positive() {
        let m = ModelSpec::edges(
            OnOffLaw::weibull(1.0, 0.5).unwrap(),
            OnOffLaw::pareto(1.0, 2.5).unwrap(),
            20,
        )
        .unwrap();
        let mut ens = EdgeEnsemble::new(&m, 5).unwrap();
        for _ in 0..2000 {
            assert!(ens.states().iter().all(|s| s.remaining >= 1));
            let on = ens.states().iter().filter(|s| s.on).count() as u64;
            assert_eq!(on, ens.on_count());
            ens.advance();
        }
    }

    #[test]
    fn edge_endpoints_enumerate_pairs() {
        let n = 7;
        let mut e = 0;
        for a in 0..n {
            for b in a + 1..n {
                assert_eq!(edge_endpoints(n, e), (a, b));
                e += 1;
            }
        }
    }

    #[test]
    fn complete_and_empty_snapshots() {
        let full = Snapshot::from_flags(4, &[true; 6]);
        assert_eq!((full.triangles(), full.wedges()), (4, 12));
        let empty = Snapshot::from_flags(4, &[false; 6]);
        assert_eq!((empty.triangles(), empty.wedges()), (0, 0));
    }

    #[test]
    fn incremental_counts_match_recount() {
        let m = ModelSpec::graph(
            OnOffLaw::geometric(0.3).unwrap(),
            OnOffLaw::geometric(0.4).unwrap(),
            70,
        )
        .unwrap();
        let mut sim = GraphSimulator::new(&m, 11).unwrap();
        for _ in 0..50 {
            let s = sim.snapshot();
            assert_eq!(s.recount(), (s.triangles(), s.wedges()));
            assert!(3 * s.triangles() <= s.wedges());
            sim.advance();
        }
    }

    #[test]
    fn graph_trace_needs_vertices() {
        assert!(simulate_graph_trace(&gg(10), 5, 1, Observable::Triangles).is_err());
    }

    proptest::proptest! {
        #[test]
        fn snapshot_counts_match_brute_force(flags in proptest::collection::vec(proptest::bool::ANY, 28)) {
            let n = 8;
            let s = Snapshot::from_flags(n, &flags);
            let mut adj = [[false; 8]; 8];
            for (e, &f) in flags.iter().enumerate() {
                let (a, b) = edge_endpoints(n, e);
                adj[a][b] = f;
                adj[b][a] = f;
            }
            let mut t = 0;
            let mut w = 0;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if a < b && b < c && adj[a][b] && adj[b][c] && adj[a][c] {
                            t += 1;
                        }
                        // center a, endpoints b < c
                        if b < c && b != a && c != a && adj[a][b] && adj[a][c] {
                            w += 1;
                        }
                    }
                }
            }
            proptest::prop_assert_eq!((s.triangles(), s.wedges()), (t, w));
        }
    }
}
