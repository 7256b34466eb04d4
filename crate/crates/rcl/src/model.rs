//! Explicit-state semantic core: configurations, composition, havoc closure
//! and open interaction steps.
//!
//! A configuration is a quadruple (C, I, rho, nu): the present components,
//! the interactions wiring their ports, a state map for the present
//! components and a store mapping variables to components. Components are
//! drawn from a countable universe; here they are plain numeric ids and a
//! [`ComponentPool`] supplies fresh ones per query.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Component identifier. The universe of components is `u32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompId(pub u32);

impl fmt::Display for CompId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// Index of a state in a [`Behavior`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u16);

/// Index of a port in a [`Behavior`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId(pub u16);

/// The finite-state machine executed by every present component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Behavior {
    states: Vec<String>,
    ports: Vec<String>,
    /// (pre-state, port, post-state) triples.
    transitions: BTreeSet<(StateId, PortId, StateId)>,
}

impl Behavior {
    pub fn new(
        states: Vec<String>,
        ports: Vec<String>,
        transitions: Vec<(String, String, String)>,
    ) -> Result<Self> {
        let mut b = Behavior {
            states: Vec::new(),
            ports: Vec::new(),
            transitions: BTreeSet::new(),
        };
        for s in states {
            if s.is_empty() || b.states.contains(&s) {
                return Err(Error::Validation(format!("bad state name `{s}`")));
            }
            b.states.push(s);
        }
        for p in ports {
            if p.is_empty() || b.ports.contains(&p) {
                return Err(Error::Validation(format!("bad port name `{p}`")));
            }
            b.ports.push(p);
        }
        for (pre, port, post) in transitions {
            let pre = b.state_id(&pre)?;
            let port = b.port_id(&port)?;
            let post = b.state_id(&post)?;
            b.transitions.insert((pre, port, post));
        }
        Ok(b)
    }

    pub fn state_id(&self, name: &str) -> Result<StateId> {
        self.states
            .iter()
            .position(|s| s == name)
            .map(|i| StateId(i as u16))
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn port_id(&self, name: &str) -> Result<PortId> {
        self.ports
            .iter()
            .position(|p| p == name)
            .map(|i| PortId(i as u16))
            .ok_or_else(|| Error::UnknownPort(name.to_string()))
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id.0 as usize]
    }

    pub fn port_name(&self, id: PortId) -> &str {
        &self.ports[id.0 as usize]
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).map(|i| StateId(i as u16))
    }

    pub fn ports(&self) -> impl Iterator<Item = PortId> + '_ {
        (0..self.ports.len()).map(|i| PortId(i as u16))
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Post-states of transitions from `q` labeled with `p`.
    pub fn successors(&self, q: StateId, p: PortId) -> Vec<StateId> {
        self.transitions
            .iter()
            .filter(|(pre, port, _)| *pre == q && *port == p)
            .map(|(_, _, post)| *post)
            .collect()
    }

    /// True iff `q` is the pre-state of some transition labeled `p`.
    pub fn enabled(&self, q: StateId, p: PortId) -> bool {
        self.transitions
            .iter()
            .any(|(pre, port, _)| *pre == q && *port == p)
    }
}

/// A connector between two component ports. Tight when both endpoints are
/// present, loose otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interaction {
    pub src: CompId,
    pub src_port: PortId,
    pub dst: CompId,
    pub dst_port: PortId,
}

impl Interaction {
    pub fn new(src: CompId, src_port: PortId, dst: CompId, dst_port: PortId) -> Self {
        Interaction {
            src,
            src_port,
            dst,
            dst_port,
        }
    }
}

/// Variable store: finite partial map from variable names to components.
pub type Store = BTreeMap<String, CompId>;

/// A configuration (C, I, rho, nu).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Configuration {
    pub present: BTreeSet<CompId>,
    pub interactions: BTreeSet<Interaction>,
    pub state_map: BTreeMap<CompId, StateId>,
    pub store: Store,
}

impl Configuration {
    pub fn new(
        present: BTreeSet<CompId>,
        interactions: BTreeSet<Interaction>,
        state_map: BTreeMap<CompId, StateId>,
        store: Store,
    ) -> Result<Self> {
        let cfg = Configuration {
            present,
            interactions,
            state_map,
            store,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn empty_with_store(store: Store) -> Self {
        Configuration {
            store,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.state_map.keys().cloned().collect::<BTreeSet<_>>() != self.present {
            return Err(Error::Validation(
                "state map domain differs from the present set".into(),
            ));
        }
        Ok(())
    }

    pub fn lookup(&self, var: &str) -> Result<CompId> {
        self.store
            .get(var)
            .copied()
            .ok_or_else(|| Error::UnboundVariable(var.to_string()))
    }

    /// True iff every interaction has both endpoints present.
    pub fn is_tight(&self) -> bool {
        self.interactions
            .iter()
            .all(|i| self.present.contains(&i.src) && self.present.contains(&i.dst))
    }

    /// Structural size |C| + |I|.
    pub fn size(&self) -> usize {
        self.present.len() + self.interactions.len()
    }

    /// Renames component ids densely from 1 upward, in the order they first
    /// occur in (store, interactions, present). Cheap and deterministic; it
    /// collapses most isomorphic duplicates but is not a full graph
    /// canonical form (see [`Configuration::iso_canonical`]).
    pub fn canonicalize(&self) -> Configuration {
        let mut order: Vec<CompId> = Vec::new();
        let note = |c: CompId, order: &mut Vec<CompId>| {
            if !order.contains(&c) {
                order.push(c);
            }
        };
        for c in self.store.values() {
            note(*c, &mut order);
        }
        for i in &self.interactions {
            note(i.src, &mut order);
            note(i.dst, &mut order);
        }
        for c in &self.present {
            note(*c, &mut order);
        }
        let map: BTreeMap<CompId, CompId> = order
            .iter()
            .enumerate()
            .map(|(k, c)| (*c, CompId(k as u32 + 1)))
            .collect();
        self.rename(&map)
    }

    fn rename(&self, map: &BTreeMap<CompId, CompId>) -> Configuration {
        let r = |c: &CompId| map.get(c).copied().unwrap_or(*c);
        Configuration {
            present: self.present.iter().map(r).collect(),
            interactions: self
                .interactions
                .iter()
                .map(|i| Interaction::new(r(&i.src), i.src_port, r(&i.dst), i.dst_port))
                .collect(),
            state_map: self.state_map.iter().map(|(c, q)| (r(c), *q)).collect(),
            store: self.store.iter().map(|(x, c)| (x.clone(), r(c))).collect(),
        }
    }

    /// Isomorphism-canonical form: the least configuration over all dense
    /// renamings of the occurring ids. Factorial in the number of distinct
    /// ids; suitable for desk-scale set comparisons only.
    pub fn iso_canonical(&self) -> Configuration {
        let mut ids: BTreeSet<CompId> = self.present.clone();
        for i in &self.interactions {
            ids.insert(i.src);
            ids.insert(i.dst);
        }
        ids.extend(self.store.values().copied());
        let ids: Vec<CompId> = ids.into_iter().collect();
        let mut best: Option<Configuration> = None;
        let mut perm: Vec<usize> = (0..ids.len()).collect();
        loop {
            let map: BTreeMap<CompId, CompId> = perm
                .iter()
                .enumerate()
                .map(|(k, p)| (ids[*p], CompId(k as u32 + 1)))
                .collect();
            let candidate = self.rename(&map);
            if best.as_ref().is_none_or(|b| candidate < *b) {
                best = Some(candidate);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        best.unwrap_or_else(|| self.clone())
    }
}

fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Finite supply of fresh component ids, disjoint from any configuration the
/// pool is used with.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComponentPool {
    pub fresh: Vec<CompId>,
}

impl ComponentPool {
    pub fn new(ids: Vec<CompId>) -> Self {
        ComponentPool { fresh: ids }
    }

    /// `n` ids starting after the largest id used by `g`.
    pub fn disjoint_from(g: &Configuration, n: usize) -> Self {
        let max = g
            .present
            .iter()
            .map(|c| c.0)
            .chain(g.interactions.iter().flat_map(|i| [i.src.0, i.dst.0]))
            .chain(g.store.values().map(|c| c.0))
            .max()
            .unwrap_or(0);
        ComponentPool {
            fresh: (1..=n as u32).map(|k| CompId(max + k)).collect(),
        }
    }
}

/// Composition of two configurations: disjoint union of components and
/// interactions, union of state maps, shared store. `Ok(None)` means the
/// composition is undefined because the unions are not disjoint.
pub fn compose(g1: &Configuration, g2: &Configuration) -> Result<Option<Configuration>> {
    for (x, c) in &g1.store {
        if let Some(d) = g2.store.get(x) {
            if c != d {
                return Err(Error::StoresDiffer(x.clone()));
            }
        }
    }
    if g1.store.len() != g2.store.len() || g1.store.keys().ne(g2.store.keys()) {
        // The paper requires identical stores; partial maps must agree on
        // their (common) domain, which we take to be equal here.
        for x in g1.store.keys().chain(g2.store.keys()) {
            if !(g1.store.contains_key(x) && g2.store.contains_key(x)) {
                return Err(Error::StoresDiffer(x.clone()));
            }
        }
    }
    if g1.present.intersection(&g2.present).next().is_some() {
        return Ok(None);
    }
    if g1
        .interactions
        .intersection(&g2.interactions)
        .next()
        .is_some()
    {
        return Ok(None);
    }
    let mut present = g1.present.clone();
    present.extend(g2.present.iter().copied());
    let mut interactions = g1.interactions.clone();
    interactions.extend(g2.interactions.iter().copied());
    let mut state_map = g1.state_map.clone();
    state_map.extend(g2.state_map.iter().map(|(c, q)| (*c, *q)));
    Ok(Some(Configuration {
        present,
        interactions,
        state_map,
        store: g1.store.clone(),
    }))
}

/// All subconfigurations of `g`: every subset of components paired with
/// every subset of interactions, with the state map restricted and the store
/// shared. There are `2^(|C|+|I|)` of them.
pub fn subconfigurations(g: &Configuration, cap: u32) -> Result<Vec<Configuration>> {
    let n = g.size();
    if n > cap as usize {
        return Err(Error::SizeGuard {
            actual: n as u64,
            cap: cap as u64,
        });
    }
    let comps: Vec<CompId> = g.present.iter().copied().collect();
    let inters: Vec<Interaction> = g.interactions.iter().copied().collect();
    let mut out = Vec::with_capacity(1usize << n);
    for cm in 0u64..(1u64 << comps.len()) {
        let mut present = BTreeSet::new();
        let mut state_map = BTreeMap::new();
        for (k, c) in comps.iter().enumerate() {
            if cm & (1 << k) != 0 {
                present.insert(*c);
                state_map.insert(*c, g.state_map[c]);
            }
        }
        for im in 0u64..(1u64 << inters.len()) {
            let mut interactions = BTreeSet::new();
            for (k, i) in inters.iter().enumerate() {
                if im & (1 << k) != 0 {
                    interactions.insert(*i);
                }
            }
            out.push(Configuration {
                present: present.clone(),
                interactions,
                state_map: state_map.clone(),
                store: g.store.clone(),
            });
        }
    }
    Ok(out)
}

/// One havoc step: fire a tight interaction between two distinct present
/// components whose states enable the respective port transitions.
pub fn havoc_successors(g: &Configuration, b: &Behavior) -> Vec<Configuration> {
    let mut out = Vec::new();
    for i in &g.interactions {
        if i.src == i.dst || !g.present.contains(&i.src) || !g.present.contains(&i.dst) {
            continue;
        }
        let q1 = g.state_map[&i.src];
        let q2 = g.state_map[&i.dst];
        for q1p in b.successors(q1, i.src_port) {
            for q2p in b.successors(q2, i.dst_port) {
                let mut g2 = g.clone();
                g2.state_map.insert(i.src, q1p);
                g2.state_map.insert(i.dst, q2p);
                out.push(g2);
            }
        }
    }
    out
}

/// Reflexive-transitive closure of the havoc step relation. Only the state
/// map varies, so the closure is finite.
pub fn havoc_closure(g: &Configuration, b: &Behavior) -> BTreeSet<Configuration> {
    let mut seen: BTreeSet<Configuration> = BTreeSet::new();
    let mut queue: VecDeque<Configuration> = VecDeque::new();
    seen.insert(g.clone());
    queue.push_back(g.clone());
    while let Some(cur) = queue.pop_front() {
        for next in havoc_successors(&cur, b) {
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    seen
}

/// Successors of `g` under one open step of interaction `i`: a tight step
/// updates both endpoints, a loose step updates the single present endpoint.
/// An interaction not in I, or with no enabled transition, has no successor.
pub fn open_step(g: &Configuration, b: &Behavior, i: &Interaction) -> Vec<Configuration> {
    if !g.interactions.contains(i) {
        return Vec::new();
    }
    let p1 = g.present.contains(&i.src);
    let p2 = g.present.contains(&i.dst);
    let mut out = Vec::new();
    if p1 && p2 && i.src != i.dst {
        let q1 = g.state_map[&i.src];
        let q2 = g.state_map[&i.dst];
        for q1p in b.successors(q1, i.src_port) {
            for q2p in b.successors(q2, i.dst_port) {
                let mut g2 = g.clone();
                g2.state_map.insert(i.src, q1p);
                g2.state_map.insert(i.dst, q2p);
                out.push(g2);
            }
        }
    } else if p1 && !p2 {
        let q1 = g.state_map[&i.src];
        for q1p in b.successors(q1, i.src_port) {
            let mut g2 = g.clone();
            g2.state_map.insert(i.src, q1p);
            out.push(g2);
        }
    } else if p2 && !p1 {
        let q2 = g.state_map[&i.dst];
        for q2p in b.successors(q2, i.dst_port) {
            let mut g2 = g.clone();
            g2.state_map.insert(i.dst, q2p);
            out.push(g2);
        }
    }
    out
}

/// Endpoints of running the word `w` of interactions via open steps.
pub fn open_run(g: &Configuration, b: &Behavior, w: &[Interaction]) -> BTreeSet<Configuration> {
    let mut cur: BTreeSet<Configuration> = BTreeSet::new();
    cur.insert(g.clone());
    for i in w {
        let mut next = BTreeSet::new();
        for g0 in &cur {
            next.extend(open_step(g0, b, i));
        }
        cur = next;
        if cur.is_empty() {
            break;
        }
    }
    cur
}

/// The lift operator S|X of the locality definition, bounded: freed
/// variables range over present and pool components, and the states of the
/// components they denote range over all behavior states.
pub fn lift_set(
    s: &BTreeSet<Configuration>,
    vars: &BTreeSet<String>,
    b: &Behavior,
    pool: &ComponentPool,
) -> BTreeSet<Configuration> {
    if vars.is_empty() {
        return s.clone();
    }
    let mut out = BTreeSet::new();
    for g in s {
        let mut candidates: Vec<CompId> = g.present.iter().copied().collect();
        for c in &pool.fresh {
            if !candidates.contains(c) {
                candidates.push(*c);
            }
        }
        // Components currently denoted by the freed variables may also change
        // state, so collect nu(X) first.
        let freed: Vec<String> = vars.iter().cloned().collect();
        let mut stores = vec![g.store.clone()];
        for x in &freed {
            let mut next = Vec::new();
            for st in &stores {
                for c in &candidates {
                    let mut st2 = st.clone();
                    st2.insert(x.clone(), *c);
                    next.push(st2);
                }
            }
            stores = next;
        }
        let mutable: BTreeSet<CompId> = freed
            .iter()
            .filter_map(|x| g.store.get(x))
            .copied()
            .filter(|c| g.present.contains(c))
            .collect();
        let mutable: Vec<CompId> = mutable.into_iter().collect();
        let mut maps = vec![g.state_map.clone()];
        for c in &mutable {
            let mut next = Vec::new();
            for m in &maps {
                for q in b.states() {
                    let mut m2 = m.clone();
                    m2.insert(*c, q);
                    next.push(m2);
                }
            }
            maps = next;
        }
        for st in &stores {
            for m in &maps {
                out.insert(Configuration {
                    present: g.present.clone(),
                    interactions: g.interactions.clone(),
                    state_map: m.clone(),
                    store: st.clone(),
                });
            }
        }
    }
    out
}
