//! Bounded model checking of configuration logic formulas.
//!
//! The workhorse is a directed matcher for symbolic configurations: spatial
//! atoms consume configuration resources (components and interactions) and
//! bind variables as they go, predicate atoms are matched by rule unfolding
//! with memoization. The progress condition on definitions (every rule body
//! contains a component atom) bounds the unfolding depth by the number of
//! present components.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::sid::Sid;
use super::{Formula, PureLit, SpatialAtom, StateSel, SymbolicConfig};
use crate::error::{Error, Result};
use crate::model::{Behavior, CompId, ComponentPool, Configuration, Interaction};

/// Resource view over a fixed configuration: a subset of its components and
/// interactions, as bitmasks. Configurations are desk-scale so 64 bits of
/// each suffice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mask {
    pub comps: u64,
    pub inters: u64,
}

impl Mask {
    pub const EMPTY: Mask = Mask { comps: 0, inters: 0 };

    pub fn is_empty(&self) -> bool {
        self.comps == 0 && self.inters == 0
    }

    pub fn contains(&self, other: &Mask) -> bool {
        other.comps & !self.comps == 0 && other.inters & !self.inters == 0
    }

    pub fn minus(&self, other: &Mask) -> Mask {
        Mask {
            comps: self.comps & !other.comps,
            inters: self.inters & !other.inters,
        }
    }

    pub fn union(&self, other: &Mask) -> Mask {
        Mask {
            comps: self.comps | other.comps,
            inters: self.inters | other.inters,
        }
    }

    pub fn disjoint(&self, other: &Mask) -> bool {
        self.comps & other.comps == 0 && self.inters & other.inters == 0
    }
}

/// Variable bindings accumulated during matching, layered over the store.
type Env = BTreeMap<String, CompId>;

/// Base for placeholder ids denoting "some absent component not occurring
/// in the configuration".
const FRESH_BASE: u32 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct PredKey {
    name: String,
    indices: Vec<u32>,
    args: Vec<Option<CompId>>,
    avail: Mask,
}

/// Matching context bound to one configuration.
pub struct MatchCtx<'a> {
    pub sid: &'a Sid,
    pub behavior: &'a Behavior,
    pub cfg: &'a Configuration,
    comps: Vec<CompId>,
    inters: Vec<Interaction>,
    pred_memo: RefCell<HashMap<PredKey, Vec<(Mask, Vec<Option<CompId>>)>>>,
    fresh_counter: RefCell<u32>,
}

impl<'a> MatchCtx<'a> {
    pub fn new(sid: &'a Sid, behavior: &'a Behavior, cfg: &'a Configuration) -> Self {
        MatchCtx {
            sid,
            behavior,
            cfg,
            comps: cfg.present.iter().copied().collect(),
            inters: cfg.interactions.iter().copied().collect(),
            pred_memo: RefCell::new(HashMap::new()),
            fresh_counter: RefCell::new(0),
        }
    }

    pub fn full_mask(&self) -> Mask {
        Mask {
            comps: if self.comps.is_empty() {
                0
            } else {
                (1u64 << self.comps.len()) - 1
            },
            inters: if self.inters.is_empty() {
                0
            } else {
                (1u64 << self.inters.len()) - 1
            },
        }
    }

    pub fn mask_interactions(&self, m: Mask) -> Vec<Interaction> {
        self.inters
            .iter()
            .enumerate()
            .filter(|(k, _)| m.inters & (1 << k) != 0)
            .map(|(_, i)| *i)
            .collect()
    }

    pub fn mask_components(&self, m: Mask) -> Vec<CompId> {
        self.comps
            .iter()
            .enumerate()
            .filter(|(k, _)| m.comps & (1 << k) != 0)
            .map(|(_, c)| *c)
            .collect()
    }

    pub fn subconfig(&self, m: Mask) -> Configuration {
        let present: BTreeSet<CompId> = self.mask_components(m).into_iter().collect();
        Configuration {
            state_map: present
                .iter()
                .map(|c| (*c, self.cfg.state_map[c]))
                .collect(),
            present,
            interactions: self.mask_interactions(m).into_iter().collect(),
            store: self.cfg.store.clone(),
        }
    }

    fn comp_index(&self, c: CompId) -> Option<usize> {
        self.comps.iter().position(|x| *x == c)
    }

    fn fresh_placeholder(&self) -> CompId {
        let mut n = self.fresh_counter.borrow_mut();
        *n += 1;
        CompId(FRESH_BASE + *n)
    }

    fn lookup(&self, env: &Env, x: &str) -> Option<CompId> {
        // Names starting with '?' are matcher-internal (opened existentials
        // and predicate formals); they never resolve through the store.
        let v = env.get(x).copied();
        if v.is_some() || x.starts_with('?') {
            v
        } else {
            self.cfg.store.get(x).copied()
        }
    }

    /// Propagates pure equalities into the environment; literals with both
    /// sides still unbound bind them together to a fresh placeholder.
    /// Returns None when a literal is violated.
    fn apply_pure(&self, mut env: Env, pure: &[PureLit], finalize: bool) -> Option<Env> {
        loop {
            let mut progress = false;
            for l in pure {
                if let PureLit::Eq(x, y) = l {
                    match (self.lookup(&env, x), self.lookup(&env, y)) {
                        (Some(a), Some(b)) => {
                            if a != b {
                                return None;
                            }
                        }
                        (Some(a), None) => {
                            env.insert(y.clone(), a);
                            progress = true;
                        }
                        (None, Some(b)) => {
                            env.insert(x.clone(), b);
                            progress = true;
                        }
                        (None, None) => {
                            if finalize {
                                let f = self.fresh_placeholder();
                                env.insert(x.clone(), f);
                                env.insert(y.clone(), f);
                                progress = true;
                            }
                        }
                    }
                }
            }
            if !progress {
                break;
            }
        }
        for l in pure {
            if let PureLit::Neq(x, y) = l {
                match (self.lookup(&env, x), self.lookup(&env, y)) {
                    (Some(a), Some(b)) => {
                        if a == b {
                            return None;
                        }
                    }
                    _ => {
                        if !finalize {
                            continue;
                        }
                        // Unbound side denotes a fresh absent component,
                        // distinct from everything else.
                        if self.lookup(&env, x).is_none() {
                            let f = self.fresh_placeholder();
                            env.insert(x.clone(), f);
                        }
                        if self.lookup(&env, y).is_none() {
                            let f = self.fresh_placeholder();
                            env.insert(y.clone(), f);
                        }
                        if self.lookup(&env, x) == self.lookup(&env, y) {
                            return None;
                        }
                    }
                }
            }
        }
        Some(env)
    }

    fn state_matches(&self, c: CompId, sel: &StateSel) -> bool {
        match (self.cfg.state_map.get(&c), sel) {
            (Some(_), StateSel::Any) => true,
            (Some(q), StateSel::State(name)) => self.behavior.state_name(*q) == name,
            (None, _) => false,
        }
    }

    /// All ways of matching the atoms within `avail`, returning consumed
    /// resources and extended bindings. Pure literals of `pure` are
    /// propagated between steps and finalized at the end.
    pub fn match_symbolic(
        &self,
        sc: &SymbolicConfig,
        env: Env,
        avail: Mask,
    ) -> Result<Vec<(Mask, Env)>> {
        let env = match self.apply_pure(env, &sc.pure, false) {
            Some(e) => e,
            None => return Ok(Vec::new()),
        };
        let mut results = Vec::new();
        self.match_atoms(&sc.spatial, &sc.pure, env, avail, Mask::EMPTY, &mut results)?;
        let mut out = Vec::new();
        for (consumed, env) in results {
            if let Some(env) = self.apply_pure(env, &sc.pure, true) {
                out.push((consumed, env));
            }
        }
        Ok(out)
    }

    fn match_atoms(
        &self,
        atoms: &[SpatialAtom],
        pure: &[PureLit],
        env: Env,
        avail: Mask,
        consumed: Mask,
        out: &mut Vec<(Mask, Env)>,
    ) -> Result<()> {
        if atoms.is_empty() {
            out.push((consumed, env));
            return Ok(());
        }
        // Pick the most-bound atom next so bindings flow into the rest.
        let pos = self.pick_atom(atoms, &env);
        let atom = &atoms[pos];
        let rest: Vec<SpatialAtom> = atoms
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != pos)
            .map(|(_, a)| a.clone())
            .collect();
        match atom {
            SpatialAtom::Comp(x, sel) => {
                let candidates: Vec<CompId> = match self.lookup(&env, x) {
                    Some(c) => vec![c],
                    None => self.mask_components(avail),
                };
                for c in candidates {
                    let Some(k) = self.comp_index(c) else { continue };
                    let bit = 1u64 << k;
                    if avail.comps & bit == 0 || !self.state_matches(c, sel) {
                        continue;
                    }
                    let mut env2 = env.clone();
                    env2.insert(x.clone(), c);
                    let Some(env2) = self.apply_pure(env2, pure, false) else {
                        continue;
                    };
                    let taken = Mask { comps: bit, inters: 0 };
                    self.match_atoms(
                        &rest,
                        pure,
                        env2,
                        avail.minus(&taken),
                        consumed.union(&taken),
                        out,
                    )?;
                }
            }
            SpatialAtom::Inter(x1, p1, x2, p2) => {
                let p1 = self.behavior.port_id(p1)?;
                let p2 = self.behavior.port_id(p2)?;
                let b1 = self.lookup(&env, x1);
                let b2 = self.lookup(&env, x2);
                for (k, i) in self.inters.iter().enumerate() {
                    let bit = 1u64 << k;
                    if avail.inters & bit == 0 || i.src_port != p1 || i.dst_port != p2 {
                        continue;
                    }
                    if b1.is_some_and(|c| c != i.src) || b2.is_some_and(|c| c != i.dst) {
                        continue;
                    }
                    let mut env2 = env.clone();
                    env2.insert(x1.clone(), i.src);
                    env2.insert(x2.clone(), i.dst);
                    let Some(env2) = self.apply_pure(env2, pure, false) else {
                        continue;
                    };
                    let taken = Mask { comps: 0, inters: bit };
                    self.match_atoms(
                        &rest,
                        pure,
                        env2,
                        avail.minus(&taken),
                        consumed.union(&taken),
                        out,
                    )?;
                }
            }
            SpatialAtom::Pred(name, idxs, args) => {
                let mut vals = Vec::with_capacity(idxs.len());
                for i in idxs {
                    vals.push(i.eval(&BTreeMap::new())?);
                }
                let bound: Vec<Option<CompId>> =
                    args.iter().map(|a| self.lookup(&env, a)).collect();
                for (taken, full) in self.match_pred(name, &vals, &bound, avail)? {
                    let mut env2 = env.clone();
                    for (a, c) in args.iter().zip(full.iter()) {
                        if self.lookup(&env, a).is_some() {
                            continue;
                        }
                        // An argument the rule bodies leave unpinned denotes
                        // an arbitrary absent component.
                        let id = c.unwrap_or_else(|| self.fresh_placeholder());
                        env2.insert(a.clone(), id);
                    }
                    let Some(env2) = self.apply_pure(env2, pure, false) else {
                        continue;
                    };
                    self.match_atoms(
                        &rest,
                        pure,
                        env2,
                        avail.minus(&taken),
                        consumed.union(&taken),
                        out,
                    )?;
                }
            }
        }
        Ok(())
    }

    fn pick_atom(&self, atoms: &[SpatialAtom], env: &Env) -> usize {
        let score = |a: &SpatialAtom| -> u32 {
            let bound = a
                .vars()
                .iter()
                .filter(|v| self.lookup(env, v).is_some())
                .count() as u32;
            match a {
                SpatialAtom::Comp(..) => 8 + bound,
                SpatialAtom::Inter(..) => 4 + bound,
                SpatialAtom::Pred(..) => bound,
            }
        };
        atoms
            .iter()
            .enumerate()
            .max_by_key(|(_, a)| score(a))
            .map(|(k, _)| k)
            .unwrap_or(0)
    }

    /// Matches a predicate atom by unfolding. Returns consumed resources and
    /// the argument bindings of each match (`None` when a rule body leaves
    /// the argument unpinned, i.e. it may denote any absent component).
    fn match_pred(
        &self,
        name: &str,
        indices: &[u32],
        args: &[Option<CompId>],
        avail: Mask,
    ) -> Result<Vec<(Mask, Vec<Option<CompId>>)>> {
        let key = PredKey {
            name: name.to_string(),
            indices: indices.to_vec(),
            args: args.to_vec(),
            avail,
        };
        if let Some(hit) = self.pred_memo.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let mut results: BTreeSet<(Mask, Vec<Option<CompId>>)> = BTreeSet::new();
        // Formal argument names; bound positions get their id injected via
        // the environment.
        let formal: Vec<String> = (0..args.len()).map(|k| format!("?a{k}")).collect();
        let avoid: BTreeSet<String> = formal.iter().cloned().collect();
        let names: Vec<String> = (0..8).map(|k| format!("?e{k}")).collect();
        let cases = self.sid.unfold(
            name,
            &indices.iter().map(|c| super::IndexExpr::Const(*c)).collect::<Vec<_>>(),
            &formal,
            &avoid,
            &names,
        )?;
        for case in cases {
            let mut env = Env::new();
            for (f, a) in formal.iter().zip(args.iter()) {
                if let Some(c) = a {
                    env.insert(f.clone(), *c);
                }
            }
            for (taken, env2) in self.match_symbolic(&case.body, env, avail)? {
                let full: Vec<Option<CompId>> = formal
                    .iter()
                    .map(|f| env2.get(f).copied().filter(|c| c.0 < FRESH_BASE))
                    .collect();
                results.insert((taken, full));
            }
        }
        let out: Vec<(Mask, Vec<Option<CompId>>)> = results.into_iter().collect();
        self.pred_memo.borrow_mut().insert(key, out.clone());
        Ok(out)
    }
}

/// Plan for deciding a formula with the directed matcher: an existential
/// closure of a symbolic configuration, optionally weakened by `* true`.
#[derive(Debug, Clone)]
pub struct SymbolicPlan {
    pub sc: SymbolicConfig,
    pub with_true: bool,
}

/// Recognizes `exists xs . (xi /\ pi [* true])`, renaming the bound
/// variables so they never collide with store variables.
pub fn symbolic_plan(f: &Formula) -> Option<SymbolicPlan> {
    let mut counter = 0usize;
    let mut cur = f.clone();
    loop {
        match cur {
            Formula::Exists(x, body) => {
                let fresh = format!("?x{counter}");
                counter += 1;
                let mut map = BTreeMap::new();
                map.insert(x, fresh);
                cur = body.subst_vars(&map);
            }
            other => {
                cur = other;
                break;
            }
        }
    }
    // Pull `* true` parts out of the spatial conjunct.
    let mut with_true = false;
    let stripped = strip_true(&cur, &mut with_true);
    let sc = SymbolicConfig::from_formula(&stripped)?;
    Some(SymbolicPlan { sc, with_true })
}

fn strip_true(f: &Formula, with_true: &mut bool) -> Formula {
    match f {
        Formula::Star(l, r) => {
            let l2 = strip_true(l, with_true);
            let r2 = strip_true(r, with_true);
            match (&l2, &r2) {
                (Formula::True, _) => {
                    *with_true = true;
                    r2
                }
                (_, Formula::True) => {
                    *with_true = true;
                    l2
                }
                _ => Formula::star(l2, r2),
            }
        }
        Formula::And(l, r) => Formula::and(strip_true(l, with_true), strip_true(r, with_true)),
        other => other.clone(),
    }
}

/// Bounded model checking: does `g` satisfy `phi` under `sid`?
///
/// Free variables of `phi` must be bound in the store. Existential
/// witnesses are drawn from the present components, interaction endpoints,
/// the store range and `quantifier_depth(phi)` pool ids.
pub fn satisfies(
    g: &Configuration,
    phi: &Formula,
    sid: &Sid,
    behavior: &Behavior,
    pool: &ComponentPool,
) -> Result<bool> {
    let ctx = MatchCtx::new(sid, behavior, g);
    let mut store = g.store.clone();
    let depth = phi.quantifier_depth();
    let mut fresh = pool.fresh.clone();
    let max_used = g
        .present
        .iter()
        .map(|c| c.0)
        .chain(g.interactions.iter().flat_map(|i| [i.src.0, i.dst.0]))
        .chain(g.store.values().map(|c| c.0))
        .max()
        .unwrap_or(0);
    while fresh.len() < depth {
        fresh.push(CompId(max_used + 1 + fresh.len() as u32));
    }
    fresh.truncate(depth);
    sat(&ctx, &mut store, ctx.full_mask(), phi, &fresh)
}

fn sat(
    ctx: &MatchCtx,
    store: &mut BTreeMap<String, CompId>,
    mask: Mask,
    phi: &Formula,
    witness_pool: &[CompId],
) -> Result<bool> {
    // Fast path: symbolic closures go to the matcher.
    if !matches!(
        phi,
        Formula::True | Formula::Emp | Formula::Eq(..)
    ) {
        if let Some(plan) = symbolic_plan(phi) {
            return sat_plan(ctx, store, mask, &plan);
        }
    }
    match phi {
        Formula::True => Ok(true),
        Formula::Emp => Ok(mask.is_empty()),
        Formula::Eq(x, y) => {
            let a = store
                .get(x)
                .copied()
                .ok_or_else(|| Error::UnboundVariable(x.clone()))?;
            let b = store
                .get(y)
                .copied()
                .ok_or_else(|| Error::UnboundVariable(y.clone()))?;
            Ok(a == b)
        }
        Formula::Comp(..) | Formula::Inter(..) | Formula::Pred(..) | Formula::Star(..) => {
            // Star of non-symbolic parts: enumerate binary splits.
            if let Formula::Star(l, r) = phi {
                let sub = submasks(mask);
                for m in sub {
                    if sat(ctx, store, m, l, witness_pool)?
                        && sat(ctx, store, mask.minus(&m), r, witness_pool)?
                    {
                        return Ok(true);
                    }
                }
                Ok(false)
            } else {
                unreachable!("atoms are symbolic plans")
            }
        }
        Formula::And(l, r) => {
            Ok(sat(ctx, store, mask, l, witness_pool)? && sat(ctx, store, mask, r, witness_pool)?)
        }
        Formula::Not(f) => Ok(!sat(ctx, store, mask, f, witness_pool)?),
        Formula::Exists(x, f) => {
            let mut witnesses: BTreeSet<CompId> = ctx.mask_components(mask).into_iter().collect();
            for i in ctx.mask_interactions(mask) {
                witnesses.insert(i.src);
                witnesses.insert(i.dst);
            }
            witnesses.extend(store.values().copied());
            witnesses.extend(witness_pool.iter().copied());
            let saved = store.get(x).copied();
            for w in witnesses {
                store.insert(x.clone(), w);
                let ok = sat(ctx, store, mask, f, witness_pool)?;
                match saved {
                    Some(c) => {
                        store.insert(x.clone(), c);
                    }
                    None => {
                        store.remove(x);
                    }
                }
                if ok {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

fn sat_plan(
    ctx: &MatchCtx,
    store: &BTreeMap<String, CompId>,
    mask: Mask,
    plan: &SymbolicPlan,
) -> Result<bool> {
    // Variables free in the plan must be bound in the store (the plan's
    // existentials were renamed to fresh `?x` names).
    for v in plan.sc.vars() {
        if !v.starts_with('?') && !store.contains_key(&v) {
            return Err(Error::UnboundVariable(v));
        }
    }
    let env: Env = store.clone();
    let matches = ctx.match_symbolic(&plan.sc, env, mask)?;
    if plan.with_true {
        Ok(!matches.is_empty())
    } else {
        Ok(matches.iter().any(|(consumed, _)| *consumed == mask))
    }
}

/// All submasks of `m` (components and interactions independently).
fn submasks(m: Mask) -> Vec<Mask> {
    let mut out = Vec::new();
    let mut cm = m.comps;
    loop {
        let mut im = m.inters;
        loop {
            out.push(Mask { comps: cm, inters: im });
            if im == 0 {
                break;
            }
            im = (im - 1) & m.inters;
        }
        if cm == 0 {
            break;
        }
        cm = (cm - 1) & m.comps;
    }
    out
}

/// The interpretation of an alphabet symbol: the union of the interaction
/// sets of all subconfigurations of `g` satisfying the atom.
pub fn atom_interactions(
    atom: &SpatialAtom,
    g: &Configuration,
    sid: &Sid,
    behavior: &Behavior,
) -> Result<BTreeSet<Interaction>> {
    let ctx = MatchCtx::new(sid, behavior, g);
    let sc = SymbolicConfig {
        spatial: vec![atom.clone()],
        pure: vec![],
    };
    for v in atom.vars() {
        if !g.store.contains_key(v) {
            return Err(Error::UnboundVariable(v.clone()));
        }
    }
    let env: Env = g.store.clone();
    let mut out = BTreeSet::new();
    for (consumed, _) in ctx.match_symbolic(&sc, env, ctx.full_mask())? {
        out.extend(ctx.mask_interactions(consumed));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::sid::chain_sid;
    use crate::logic::IndexExpr;
    use crate::model::Store;

    fn ring_behavior() -> Behavior {
        Behavior::new(
            vec!["H".into(), "T".into()],
            vec!["in".into(), "out".into()],
            vec![
                ("T".into(), "out".into(), "H".into()),
                ("H".into(), "in".into(), "T".into()),
            ],
        )
        .unwrap()
    }

    fn ring(b: &Behavior, n: u32, token_at: u32) -> Configuration {
        let t = b.state_id("T").unwrap();
        let h = b.state_id("H").unwrap();
        let out = b.port_id("out").unwrap();
        let inp = b.port_id("in").unwrap();
        Configuration {
            present: (1..=n).map(CompId).collect(),
            interactions: (1..=n)
                .map(|i| Interaction::new(CompId(i), out, CompId(i % n + 1), inp))
                .collect(),
            state_map: (1..=n)
                .map(|i| (CompId(i), if i == token_at { t } else { h }))
                .collect(),
            store: Store::new(),
        }
    }

    fn ring_formula() -> Formula {
        // exists x exists y . chain[0,0](x,y) * <y.out-x.in>
        Formula::exists(
            "x",
            Formula::exists(
                "y",
                Formula::star(
                    Formula::Pred(
                        "chain".into(),
                        vec![IndexExpr::Const(0), IndexExpr::Const(0)],
                        vec!["x".into(), "y".into()],
                    ),
                    Formula::Inter("y".into(), "out".into(), "x".into(), "in".into()),
                ),
            ),
        )
    }

    #[test]
    fn rings_model_the_closed_chain_formula() {
        let b = ring_behavior();
        let sid = chain_sid();
        let pool = ComponentPool::default();
        for n in 2..=6 {
            let g = ring(&b, n, 1);
            assert!(
                satisfies(&g, &ring_formula(), &sid, &b, &pool).unwrap(),
                "ring of size {n}"
            );
        }
    }

    #[test]
    fn open_path_does_not_model_the_closed_chain_formula() {
        let b = ring_behavior();
        let sid = chain_sid();
        let pool = ComponentPool::default();
        for n in 2..=5 {
            let mut g = ring(&b, n, 1);
            // Remove the closing edge n -> 1.
            let closing = *g
                .interactions
                .iter()
                .find(|i| i.src == CompId(n))
                .unwrap();
            g.interactions.remove(&closing);
            assert!(
                !satisfies(&g, &ring_formula(), &sid, &b, &pool).unwrap(),
                "path of size {n}"
            );
        }
    }

    #[test]
    fn emp_and_component_atoms() {
        let b = ring_behavior();
        let sid = chain_sid();
        let pool = ComponentPool::default();
        let empty = Configuration::default();
        assert!(satisfies(&empty, &Formula::Emp, &sid, &b, &pool).unwrap());

        let h = b.state_id("H").unwrap();
        let g = Configuration {
            present: [CompId(1)].into(),
            interactions: BTreeSet::new(),
            state_map: [(CompId(1), h)].into(),
            store: [("x".to_string(), CompId(1))].into(),
        };
        assert!(!satisfies(&g, &Formula::Emp, &sid, &b, &pool).unwrap());
        let comp_h = Formula::Comp("x".into(), StateSel::State("H".into()));
        let comp_t = Formula::Comp("x".into(), StateSel::State("T".into()));
        let active = Formula::Comp("x".into(), StateSel::Any);
        assert!(satisfies(&g, &comp_h, &sid, &b, &pool).unwrap());
        assert!(!satisfies(&g, &comp_t, &sid, &b, &pool).unwrap());
        assert!(satisfies(&g, &active, &sid, &b, &pool).unwrap());
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let b = ring_behavior();
        let sid = chain_sid();
        let pool = ComponentPool::default();
        let g = Configuration::default();
        let f = Formula::Comp("missing".into(), StateSel::Any);
        assert!(matches!(
            satisfies(&g, &f, &sid, &b, &pool),
            Err(Error::UnboundVariable(_))
        ));
    }

    #[test]
    fn star_clause_agrees_with_split_enumeration() {
        // Cross-check the matcher against explicit split enumeration on a
        // small instance: <x|T> * <y|H> over a 2-component configuration.
        let b = ring_behavior();
        let sid = chain_sid();
        let pool = ComponentPool::default();
        let t = b.state_id("T").unwrap();
        let h = b.state_id("H").unwrap();
        let g = Configuration {
            present: [CompId(1), CompId(2)].into(),
            interactions: BTreeSet::new(),
            state_map: [(CompId(1), t), (CompId(2), h)].into(),
            store: [
                ("x".to_string(), CompId(1)),
                ("y".to_string(), CompId(2)),
            ]
            .into(),
        };
        let f = Formula::star(
            Formula::Comp("x".into(), StateSel::State("T".into())),
            Formula::Comp("y".into(), StateSel::State("H".into())),
        );
        assert!(satisfies(&g, &f, &sid, &b, &pool).unwrap());
        let swapped = Formula::star(
            Formula::Comp("y".into(), StateSel::State("T".into())),
            Formula::Comp("x".into(), StateSel::State("H".into())),
        );
        assert!(!satisfies(&g, &swapped, &sid, &b, &pool).unwrap());
    }

    #[test]
    fn pure_constraints_bind_through_predicates() {
        // chain[0,1](x,y) on a single T component with only x stored: the
        // base rule forces y = x.
        let b = ring_behavior();
        let sid = chain_sid();
        let pool = ComponentPool::default();
        let t = b.state_id("T").unwrap();
        let g = Configuration {
            present: [CompId(1)].into(),
            interactions: BTreeSet::new(),
            state_map: [(CompId(1), t)].into(),
            store: [
                ("x".to_string(), CompId(1)),
                ("y".to_string(), CompId(1)),
            ]
            .into(),
        };
        let f = Formula::Pred(
            "chain".into(),
            vec![IndexExpr::Const(0), IndexExpr::Const(1)],
            vec!["x".into(), "y".into()],
        );
        assert!(satisfies(&g, &f, &sid, &b, &pool).unwrap());
        let mut g2 = g.clone();
        g2.store.insert("y".to_string(), CompId(9));
        assert!(!satisfies(&g2, &f, &sid, &b, &pool).unwrap());
    }

    #[test]
    fn chain_counts_tokens() {
        // 3-chain T-H-H (open, no closing edge): chain[2,1](x,y) holds,
        // chain[0,2](x,y) does not.
        let b = ring_behavior();
        let sid = chain_sid();
        let pool = ComponentPool::default();
        let mut g = ring(&b, 3, 1);
        let closing = *g
            .interactions
            .iter()
            .find(|i| i.src == CompId(3))
            .unwrap();
        g.interactions.remove(&closing);
        g.store.insert("x".to_string(), CompId(1));
        g.store.insert("y".to_string(), CompId(3));
        let chain = |h: u32, t: u32| {
            Formula::Pred(
                "chain".into(),
                vec![IndexExpr::Const(h), IndexExpr::Const(t)],
                vec!["x".into(), "y".into()],
            )
        };
        assert!(satisfies(&g, &chain(2, 1), &sid, &b, &pool).unwrap());
        assert!(satisfies(&g, &chain(2, 0), &sid, &b, &pool).unwrap());
        assert!(satisfies(&g, &chain(0, 1), &sid, &b, &pool).unwrap());
        assert!(!satisfies(&g, &chain(0, 2), &sid, &b, &pool).unwrap());
        assert!(!satisfies(&g, &chain(3, 0), &sid, &b, &pool).unwrap());
    }

    #[test]
    fn interpretation_of_alphabet_symbols() {
        // The 4-component out/in chain: I(<x.out-y.in>) is the first edge,
        // I(chain[0,0](x,z)) collects the first two edges.
        let b = ring_behavior();
        let sid = chain_sid();
        let out = b.port_id("out").unwrap();
        let inp = b.port_id("in").unwrap();
        let h = b.state_id("H").unwrap();
        let t = b.state_id("T").unwrap();
        let g = Configuration {
            present: (1..=4).map(CompId).collect(),
            interactions: (1..=3)
                .map(|i| Interaction::new(CompId(i), out, CompId(i + 1), inp))
                .collect(),
            state_map: [
                (CompId(1), t),
                (CompId(2), h),
                (CompId(3), h),
                (CompId(4), h),
            ]
            .into(),
            store: [
                ("x".to_string(), CompId(1)),
                ("y".to_string(), CompId(2)),
                ("z".to_string(), CompId(3)),
            ]
            .into(),
        };
        let edge = SpatialAtom::Inter("x".into(), "out".into(), "y".into(), "in".into());
        let got = atom_interactions(&edge, &g, &sid, &b).unwrap();
        assert_eq!(
            got,
            [Interaction::new(CompId(1), out, CompId(2), inp)].into()
        );
        let pred = SpatialAtom::Pred(
            "chain".into(),
            vec![IndexExpr::Const(0), IndexExpr::Const(0)],
            vec!["x".into(), "z".into()],
        );
        let got = atom_interactions(&pred, &g, &sid, &b).unwrap();
        assert_eq!(
            got,
            [
                Interaction::new(CompId(1), out, CompId(2), inp),
                Interaction::new(CompId(2), out, CompId(3), inp),
            ]
            .into()
        );
        // An atom whose interaction is absent interprets to the empty set.
        let missing = SpatialAtom::Inter("y".into(), "out".into(), "x".into(), "in".into());
        assert!(atom_interactions(&missing, &g, &sid, &b).unwrap().is_empty());
    }
}
