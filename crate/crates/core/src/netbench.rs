//! Synthetic network-reachability benchmarks.
//!
//! A source feeds a layered DAG of components into a destination. Simple
//! components relay packets whose address matches their CIDR prefix;
//! transformers relay everything but rewrite the address to their own. The
//! destination accepts an address interval in the upper half of the address
//! space. Every first-layer component either is a transformer or filters on
//! a prefix starting with 0, and every rewrite target starts with 0, so no
//! packet can ever be accepted.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cnf::{Clause, CnfFormula, Lit, Var, VarAllocator};
use crate::instance::{BindingDecl, EdgeDecl, GraphDecl, Instance, VectorDecl};
use crate::theory::bv::Relation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetParams {
    pub layers: usize,
    pub per_layer: usize,
    /// Address width in bits (at most 32).
    pub width: usize,
    /// Adds a disconnected reachability query that the refutation never
    /// needs.
    pub irrelevant: bool,
}

impl Default for NetParams {
    fn default() -> Self {
        NetParams {
            layers: 3,
            per_layer: 3,
            width: 8,
            irrelevant: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    Source,
    Destination,
    /// Relays packets whose top `len` address bits equal those of `prefix`.
    Simple { prefix: u32, len: usize },
    /// Relays every packet, rewriting its address to `target`.
    Transformer { target: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    pub seed: u64,
    pub params: NetParams,
    /// Node 0 is the source, the last node the destination.
    pub components: Vec<Component>,
    pub links: Vec<(usize, usize)>,
    /// Inclusive accepted address interval at the destination.
    pub accept: (u32, u32),
}

impl NetworkSpec {
    pub fn nodes(&self) -> usize {
        self.components.len()
    }

    pub fn destination(&self) -> usize {
        self.components.len() - 1
    }

    fn layer_nodes(&self, layer: usize) -> std::ops::Range<usize> {
        let k = self.params.per_layer;
        1 + layer * k..1 + (layer + 1) * k
    }

    /// Addresses that can arrive at the destination along some path, by
    /// simulating every source address.
    pub fn deliverable(&self) -> BTreeSet<u32> {
        let w = self.params.width;
        let mut at: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); self.nodes()];
        at[0] = (0..1u32 << w).collect();
        // Links only go forward in node order.
        for u in 0..self.nodes() {
            let out: BTreeSet<u32> = match self.components[u] {
                Component::Source | Component::Destination => at[u].clone(),
                Component::Simple { prefix, len } => at[u]
                    .iter()
                    .copied()
                    .filter(|&a| matches_prefix(a, prefix, len, w))
                    .collect(),
                Component::Transformer { target } => {
                    if at[u].is_empty() {
                        BTreeSet::new()
                    } else {
                        BTreeSet::from([target])
                    }
                }
            };
            for &(a, b) in &self.links {
                if a == u {
                    at[b].extend(out.iter().copied());
                }
            }
        }
        at[self.destination()].clone()
    }

    /// True when no deliverable address is accepted.
    pub fn is_blocked(&self) -> bool {
        let (lo, hi) = self.accept;
        self.deliverable().iter().all(|&a| a < lo || a > hi)
    }
}

pub fn matches_prefix(addr: u32, prefix: u32, len: usize, width: usize) -> bool {
    len == 0 || (addr >> (width - len)) == (prefix >> (width - len))
}

pub fn generate(seed: u64, params: NetParams) -> NetworkSpec {
    assert!(params.layers >= 1 && params.per_layer >= 1, "sizes must be positive");
    assert!((2..=32).contains(&params.width), "address width must be in 2..=32");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = params.width;
    let half = 1u32 << (w - 1);
    let low_half = |rng: &mut ChaCha8Rng| rng.gen_range(0..half);
    let mut components = vec![Component::Source];
    for layer in 0..params.layers {
        for _ in 0..params.per_layer {
            let c = if rng.gen_bool(0.3) {
                Component::Transformer {
                    target: low_half(&mut rng),
                }
            } else {
                let len = rng.gen_range(1..=w / 2);
                let mut prefix = rng.gen_range(0..1u32 << w) & !((1u32 << (w - len)) - 1);
                if layer == 0 {
                    prefix &= !half;
                }
                Component::Simple { prefix, len }
            };
            components.push(c);
        }
    }
    components.push(Component::Destination);
    let mut spec = NetworkSpec {
        seed,
        params,
        components,
        links: Vec::new(),
        accept: (0, 0),
    };
    let dest = spec.destination();
    let mut links: Vec<(usize, usize)> = spec.layer_nodes(0).map(|v| (0, v)).collect();
    for layer in 1..params.layers {
        let prev = spec.layer_nodes(layer - 1);
        for v in spec.layer_nodes(layer) {
            let first = rng.gen_range(prev.clone());
            let mut ins = BTreeSet::from([first]);
            for u in prev.clone() {
                if rng.gen_bool(0.4) {
                    ins.insert(u);
                }
            }
            links.extend(ins.into_iter().map(|u| (u, v)));
        }
    }
    links.extend(spec.layer_nodes(params.layers - 1).map(|u| (u, dest)));
    links.sort_unstable();
    spec.links = links;
    let lo = half + rng.gen_range(0..half / 2);
    let hi = rng.gen_range(lo..=(half - 1) | half);
    spec.accept = (lo, hi);
    spec
}

/// Variables of an encoded network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetVars {
    /// Address bits arriving at each node (the source's are the packet).
    pub packet: Vec<Vec<Var>>,
    pub links: Vec<Var>,
    pub reach: Var,
    pub accept_lo: Var,
    pub accept_hi: Var,
}

fn eq_under(f: &mut CnfFormula, guard: Var, a: &[Var], b: &[Var]) {
    for (&x, &y) in a.iter().zip(b) {
        f.add_clause(Clause::new([Lit::neg(guard), Lit::neg(x), Lit::pos(y)]));
        f.add_clause(Clause::new([Lit::neg(guard), Lit::pos(x), Lit::neg(y)]));
    }
}

/// Address bit `i` (0 = least significant) of `value`, as the literal that
/// makes `bits[i]` equal to it.
fn bit_lit(bits: &[Var], value: u32, i: usize) -> Lit {
    Lit::new(bits[i], (value >> i) & 1 == 1)
}

pub fn encode(spec: &NetworkSpec) -> (Instance, NetVars) {
    let w = spec.params.width;
    let mut alloc = VarAllocator::new(0);
    let packet: Vec<Vec<Var>> = (0..spec.nodes()).map(|_| alloc.fresh_vec(w)).collect();
    let links: Vec<Var> = spec.links.iter().map(|_| alloc.fresh()).collect();
    let reach = alloc.fresh();
    let accept_lo = alloc.fresh();
    let accept_hi = alloc.fresh();
    let mut f = CnfFormula::new(0);

    for (&(u, v), &e) in spec.links.iter().zip(&links) {
        match spec.components[u] {
            Component::Transformer { target } => {
                for i in 0..w {
                    f.add_clause(Clause::new([Lit::neg(e), bit_lit(&packet[v], target, i)]));
                }
            }
            Component::Simple { prefix, len } => {
                for i in w - len..w {
                    f.add_clause(Clause::new([Lit::neg(e), bit_lit(&packet[u], prefix, i)]));
                }
                eq_under(&mut f, e, &packet[u], &packet[v]);
            }
            Component::Source | Component::Destination => eq_under(&mut f, e, &packet[u], &packet[v]),
        }
    }
    for p in [reach, accept_lo, accept_hi] {
        f.add_clause(Clause::new([Lit::pos(p)]));
    }

    let dest = spec.destination();
    let mut graphs = std::collections::BTreeMap::new();
    graphs.insert(
        0,
        GraphDecl {
            nodes: spec.nodes() as u32,
            edges: spec
                .links
                .iter()
                .zip(&links)
                .map(|(&(u, v), &e)| EdgeDecl {
                    from: u as u32,
                    to: v as u32,
                    var: e,
                    capacity: None,
                    line: 0,
                })
                .collect(),
        },
    );
    let mut vectors = std::collections::BTreeMap::new();
    vectors.insert(0, VectorDecl::Bits(packet[dest].clone()));
    vectors.insert(1, VectorDecl::Const { width: w, value: spec.accept.0 as u128 });
    vectors.insert(2, VectorDecl::Const { width: w, value: spec.accept.1 as u128 });
    let mut bindings = vec![
        (
            BindingDecl::Reach {
                gid: 0,
                src: 0,
                dst: dest as u32,
                pred: reach,
            },
            0,
        ),
        (
            BindingDecl::Cmp {
                pred: accept_lo,
                relation: Relation::Ge,
                a: 0,
                b: 1,
            },
            0,
        ),
        (
            BindingDecl::Cmp {
                pred: accept_hi,
                relation: Relation::Ge,
                a: 2,
                b: 0,
            },
            0,
        ),
    ];

    if spec.params.irrelevant {
        // A two-edge chain whose edges are forced on: its query is decided
        // at the root and never takes part in the refutation.
        let chain: Vec<Var> = alloc.fresh_vec(2);
        let query = alloc.fresh();
        for &e in &chain {
            f.add_clause(Clause::new([Lit::pos(e)]));
        }
        graphs.insert(
            1,
            GraphDecl {
                nodes: 3,
                edges: chain
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| EdgeDecl {
                        from: i as u32,
                        to: i as u32 + 1,
                        var: e,
                        capacity: None,
                        line: 0,
                    })
                    .collect(),
            },
        );
        bindings.push((
            BindingDecl::Reach {
                gid: 1,
                src: 0,
                dst: 2,
                pred: query,
            },
            0,
        ));
    }

    f.set_num_vars(alloc.last());
    let inst = Instance {
        cnf: f,
        graphs,
        vectors,
        bindings,
    };
    (
        inst,
        NetVars {
            packet,
            links,
            reach,
            accept_lo,
            accept_hi,
        },
    )
}

/// One generated benchmark.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchEntry {
    pub name: String,
    pub seed: u64,
    pub params: NetParams,
}

/// The oracle tier: 24 instances, 8-bit addresses, 3–5 layers, the last
/// three with an irrelevant query.
pub fn oracle_suite() -> Vec<BenchEntry> {
    (0..24u64)
        .map(|i| {
            let params = NetParams {
                layers: 3 + (i % 3) as usize,
                per_layer: 2 + (i % 4) as usize,
                width: 8,
                irrelevant: i >= 21,
            };
            BenchEntry {
                name: format!("net_{i:02}"),
                seed: 1000 + i,
                params,
            }
        })
        .collect()
}

/// Larger networks that are only solved and checked, not simulated.
pub fn stress_suite() -> Vec<BenchEntry> {
    (0..6u64)
        .map(|i| BenchEntry {
            name: format!("stress_{i:02}"),
            seed: 5000 + i,
            params: NetParams {
                layers: 5 + (i % 3) as usize,
                per_layer: 6,
                width: 12,
                irrelevant: false,
            },
        })
        .collect()
}

pub fn manifest(entries: &[BenchEntry]) -> String {
    let mut s = String::from("name seed layers per_layer width irrelevant\n");
    for e in entries {
        let p = e.params;
        let _ = writeln!(
            s,
            "{} {} {} {} {} {}",
            e.name, e.seed, p.layers, p.per_layer, p.width, p.irrelevant as u8
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{parse_instance, write_instance};

    #[test]
    fn structure_and_determinism() {
        let p = NetParams {
            layers: 2,
            per_layer: 2,
            ..NetParams::default()
        };
        let a = generate(1, p);
        assert_eq!(a.nodes(), 6);
        assert_eq!(a, generate(1, p));
        assert_eq!(write_instance(&encode(&a).0), write_instance(&encode(&generate(1, p)).0));
    }

    #[test]
    fn generated_networks_block_every_packet() {
        for e in oracle_suite() {
            let spec = generate(e.seed, e.params);
            assert!(spec.is_blocked(), "{}", e.name);
            let text = write_instance(&encode(&spec).0);
            let parsed = parse_instance(&text).unwrap();
            assert_eq!(write_instance(&parsed), text);
        }
    }

    #[test]
    fn prefix_matching() {
        assert!(matches_prefix(0b1011_0000, 0b1000_0000, 1, 8));
        assert!(!matches_prefix(0b0011_0000, 0b1000_0000, 1, 8));
        assert!(matches_prefix(0b0011_0000, 0, 0, 8));
    }

    #[test]
    fn proofs_verify_and_drop_the_irrelevant_query() {
        use crate::drat::check_drat;
        use crate::pipeline::{prove, ProveConfig, ProveOutcome};
        for e in oracle_suite().iter().skip(18) {
            let (inst, _) = encode(&generate(e.seed, e.params));
            let ProveOutcome::Unsat(proof) = prove(&inst, &ProveConfig::default()).unwrap() else {
                panic!("{} should be unsatisfiable", e.name);
            };
            assert!(check_drat(&proof.final_cnf, &proof.drat).is_verified(), "{}", e.name);
            let r = &proof.report;
            if e.params.irrelevant {
                assert!(r.core_theory_lemmas < r.emitted_theory_lemmas, "{}: {r}", e.name);
            }
        }
    }
}
