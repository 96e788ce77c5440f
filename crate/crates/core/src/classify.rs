//! Recurrence structure of induced chains and the MDP classes built on it.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Dense;
use crate::model::{enumerate_policies, induced_chain, InducedChain, MdpModel, StationaryPolicy};
use crate::scalar::Real;

/// Absolute tolerance when comparing per-class gains.
pub const GAIN_TIE_TOL: f64 = 1e-9;

/// Partition of the states into closed communicating classes and transients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStructure {
    /// Each class sorted; classes ordered by their smallest state.
    pub recurrent_classes: Vec<Vec<usize>>,
    pub transient_states: Vec<usize>,
}

impl ChainStructure {
    pub fn is_unichain(&self) -> bool {
        self.recurrent_classes.len() == 1
    }

    pub fn is_irreducible(&self) -> bool {
        self.is_unichain() && self.transient_states.is_empty()
    }

    pub fn recurrent_states(&self) -> impl Iterator<Item = usize> + '_ {
        self.recurrent_classes.iter().flatten().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    True,
    False,
    /// Not decided because policy enumeration exceeded its cap.
    Unknown,
}

impl Flag {
    fn from_bool(b: bool) -> Self {
        if b {
            Flag::True
        } else {
            Flag::False
        }
    }

    pub fn is_true(self) -> bool {
        self == Flag::True
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdpClass {
    pub recurrent: Flag,
    pub unichain: Flag,
    pub communicating: Flag,
    pub weakly_communicating: Flag,
}

fn strongly_connected(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<(), ()>::with_capacity(succ.len(), 0);
    let nodes: Vec<NodeIndex> = (0..succ.len()).map(|_| g.add_node(())).collect();
    for (s, out) in succ.iter().enumerate() {
        for &t in out {
            g.add_edge(nodes[s], nodes[t], ());
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(NodeIndex::index).collect();
            c.sort_unstable();
            c
        })
        .collect()
}

/// Recurrent classes are exactly the closed strongly connected components
/// of the support digraph (`s -> s'` iff `P^π(s'|s) > support_tol`).
pub fn classify_chain<T: Real>(chain: &InducedChain<T>, support_tol: T) -> ChainStructure {
    let n = chain.n_states();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            chain
                .transition
                .row(s)
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > support_tol)
                .map(|(t, _)| t)
                .collect()
        })
        .collect();
    let mut component = vec![0usize; n];
    let comps = strongly_connected(&succ);
    for (ci, c) in comps.iter().enumerate() {
        for &s in c {
            component[s] = ci;
        }
    }
    let mut recurrent_classes = Vec::new();
    let mut transient_states = Vec::new();
    for (ci, c) in comps.into_iter().enumerate() {
        let closed = c.iter().all(|&s| succ[s].iter().all(|&t| component[t] == ci));
        if closed {
            recurrent_classes.push(c);
        } else {
            transient_states.extend(c);
        }
    }
    recurrent_classes.sort();
    transient_states.sort_unstable();
    ChainStructure {
        recurrent_classes,
        transient_states,
    }
}

fn reachable_from(succ: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(s) = stack.pop() {
        for &t in &succ[s] {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

/// Whether every state is reachable from every other in the union graph.
pub fn is_communicating<T: Real>(model: &MdpModel<T>) -> bool {
    let succ = model.union_successors(T::zero());
    strongly_connected(&succ).len() == 1
}

/// Brute-force classification over all stationary deterministic policies.
pub fn classify_model<T: Real>(model: &MdpModel<T>, cap: u128) -> MdpClass {
    let communicating = Flag::from_bool(is_communicating(model));
    let Ok(policies) = enumerate_policies(model, cap) else {
        return MdpClass {
            recurrent: Flag::Unknown,
            unichain: Flag::Unknown,
            communicating,
            // Communicating implies weakly communicating.
            weakly_communicating: if communicating.is_true() {
                Flag::True
            } else {
                Flag::Unknown
            },
        };
    };

    let n = model.n_states();
    let mut recurrent = true;
    let mut unichain = true;
    let mut in_some_class = vec![false; n];
    for pi in policies {
        let chain = induced_chain(model, &pi).expect("enumerated policy is valid");
        let structure = classify_chain(&chain, T::zero());
        recurrent &= structure.is_irreducible();
        unichain &= structure.is_unichain();
        for s in structure.recurrent_states() {
            in_some_class[s] = true;
        }
    }

    // States outside R are never recurrent, hence transient under every
    // policy; R itself must be mutually accessible and closable.
    let succ = model.union_successors(T::zero());
    let members: Vec<usize> = (0..n).filter(|&s| in_some_class[s]).collect();
    let mutually_reachable = members.first().is_some_and(|&root| {
        let fwd = reachable_from(&succ, root);
        let mut rev = vec![Vec::new(); n];
        for (s, out) in succ.iter().enumerate() {
            for &t in out {
                rev[t].push(s);
            }
        }
        let back = reachable_from(&rev, root);
        members.iter().all(|&s| fwd[s] && back[s])
    });
    let closable = members.iter().all(|&s| {
        (0..model.n_actions()).any(|a| {
            model
                .row(s, a)
                .iter()
                .enumerate()
                .all(|(t, &p)| p <= T::zero() || in_some_class[t])
        })
    });
    let weakly = mutually_reachable && closable;

    MdpClass {
        recurrent: Flag::from_bool(recurrent),
        unichain: Flag::from_bool(unichain),
        communicating,
        weakly_communicating: Flag::from_bool(weakly || unichain || communicating.is_true()),
    }
}

/// Stationary distribution of the closed class `class` (sorted state list),
/// indexed like `class`.
pub fn class_stationary_distribution<T: Real>(chain: &InducedChain<T>, class: &[usize]) -> Result<Vec<T>> {
    let k = class.len();
    // Solve μ (I - P_CC) = 0 with the last balance equation replaced by Σμ = 1.
    let mut a = Dense::zeros(k);
    for (i, &si) in class.iter().enumerate() {
        for (j, &sj) in class.iter().enumerate() {
            let delta = if i == j { T::one() } else { T::zero() };
            // Row j of the transposed system, column i.
            a[(j, i)] = delta - chain.transition[(si, sj)];
        }
    }
    for i in 0..k {
        a[(k - 1, i)] = T::one();
    }
    let mut b = vec![T::zero(); k];
    b[k - 1] = T::one();
    a.solve(b)
}

/// Long-run average reward of each recurrent class.
pub fn class_gains<T: Real>(chain: &InducedChain<T>, structure: &ChainStructure) -> Result<Vec<T>> {
    structure
        .recurrent_classes
        .iter()
        .map(|class| {
            let mu = class_stationary_distribution(chain, class)?;
            Ok(class.iter().zip(&mu).fold(T::zero(), |acc, (&s, &m)| acc + m * chain.reward[s]))
        })
        .collect()
}

/// Whether the policy has a unique gain: the induced chain is unichain, or
/// all of its recurrent classes earn the same gain within [`GAIN_TIE_TOL`].
pub fn in_pi_ar<T: Real>(model: &MdpModel<T>, policy: &StationaryPolicy) -> Result<bool> {
    let chain = induced_chain(model, policy)?;
    let structure = classify_chain(&chain, T::zero());
    if structure.is_unichain() {
        return Ok(true);
    }
    let gains = class_gains(&chain, &structure)?;
    let lo = gains.iter().copied().fold(T::infinity(), T::min);
    let hi = gains.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(hi - lo <= T::tol(GAIN_TIE_TOL))
}
