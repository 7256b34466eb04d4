//! Semantic side-condition oracles: pure relations of symbolic
//! configurations, bounded precision and tightness checks, and the
//! same-structure relation used by the concatenation rule.

use std::collections::{BTreeMap, BTreeSet};

use super::enumerate::{bounded_entails, enumerate_models, satisfiable, Bound, EnumOpts};
use super::semantics::{satisfies, MatchCtx};
use super::sid::Sid;
use super::{Formula, PureLit, SpatialAtom, SymbolicConfig};
use crate::error::{Error, Result};
use crate::model::{Behavior, ComponentPool, Configuration};

/// Equalities and disequalities asserted by a symbolic configuration:
/// `eq` is the reflexive-transitive-symmetric closure of the pure
/// equalities; `neq` contains the pure disequalities plus every pair of
/// variables rooted in two distinct component atoms, both closed under `eq`.
#[derive(Debug, Clone, Default)]
pub struct PureRelations {
    classes: Vec<BTreeSet<String>>,
    neq_pairs: BTreeSet<(usize, usize)>,
}

impl PureRelations {
    fn class_of(&self, v: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(v))
    }

    pub fn eq(&self, x: &str, y: &str) -> bool {
        if x == y {
            return true;
        }
        match (self.class_of(x), self.class_of(y)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    pub fn neq(&self, x: &str, y: &str) -> bool {
        match (self.class_of(x), self.class_of(y)) {
            (Some(a), Some(b)) => {
                let key = (a.min(b), a.max(b));
                self.neq_pairs.contains(&key)
            }
            _ => false,
        }
    }
}

/// Computes the pure relations of a symbolic configuration. Raises
/// [`Error::InconsistentPure`] when some pair is both equal and distinct.
pub fn pure_relations(sc: &SymbolicConfig) -> Result<PureRelations> {
    let classes = super::sid::pure_eq_classes(sc);
    let class_of = |v: &String| classes.iter().position(|c| c.contains(v)).unwrap();
    let mut neq_pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let add = |a: usize, b: usize| (a.min(b), a.max(b));
    for l in &sc.pure {
        if let PureLit::Neq(x, y) = l {
            neq_pairs.insert(add(class_of(x), class_of(y)));
        }
    }
    // Separation forces distinctness of component atom roots.
    let comp_vars: Vec<&String> = sc
        .spatial
        .iter()
        .filter_map(|a| match a {
            SpatialAtom::Comp(x, _) => Some(x),
            _ => None,
        })
        .collect();
    for i in 0..comp_vars.len() {
        for j in i + 1..comp_vars.len() {
            neq_pairs.insert(add(class_of(comp_vars[i]), class_of(comp_vars[j])));
        }
    }
    for (a, b) in &neq_pairs {
        if a == b {
            let v = classes[*a].iter().next().cloned().unwrap_or_default();
            let w = classes[*a].iter().last().cloned().unwrap_or_default();
            return Err(Error::InconsistentPure(v, w));
        }
    }
    Ok(PureRelations { classes, neq_pairs })
}

/// Outcome of the bounded precision check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrecisionVerdict {
    Holds,
    /// A model of the reference formula with two distinct subconfigurations
    /// satisfying the checked formula.
    CounterexampleTriple(Configuration, Configuration, Configuration),
}

/// Checks that `psi` is precise on the bounded models of `phi`: every model
/// has at most one subconfiguration satisfying `psi`.
pub fn precise_on_bounded(
    psi: &Formula,
    phi: &Formula,
    sid: &Sid,
    behavior: &Behavior,
    bound: Bound,
) -> Result<PrecisionVerdict> {
    let mut vars = psi.free_vars();
    vars.extend(phi.free_vars());
    let opts = EnumOpts::new(bound).with_vars(vars);
    let models = enumerate_models(phi, sid, behavior, &opts)?;
    let pool = ComponentPool::default();
    for g in models {
        let mut found: Vec<Configuration> = Vec::new();
        if let Some(sc) = SymbolicConfig::from_formula(psi) {
            let ctx = MatchCtx::new(sid, behavior, &g);
            let env: BTreeMap<String, crate::model::CompId> = g.store.clone();
            let mut masks = BTreeSet::new();
            for (consumed, _) in ctx.match_symbolic(&sc, env, ctx.full_mask())? {
                if masks.insert(consumed) {
                    found.push(ctx.subconfig(consumed));
                }
                if masks.len() > 1 {
                    break;
                }
            }
        } else {
            for sub in crate::model::subconfigurations(&g, 20)? {
                if satisfies(&sub, psi, sid, behavior, &pool)? {
                    found.push(sub);
                }
                if found.len() > 1 {
                    break;
                }
            }
        }
        if found.len() > 1 {
            return Ok(PrecisionVerdict::CounterexampleTriple(
                g,
                found[0].clone(),
                found[1].clone(),
            ));
        }
    }
    Ok(PrecisionVerdict::Holds)
}

/// Outcome of the bounded tightness check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TightVerdict {
    Holds,
    Counterexample(Configuration),
}

/// Checks that every bounded model of `phi` is tight (all interaction
/// endpoints present).
pub fn tight_formula_bounded(
    phi: &Formula,
    sid: &Sid,
    behavior: &Behavior,
    bound: Bound,
) -> Result<TightVerdict> {
    let opts = EnumOpts::new(bound);
    for g in enumerate_models(phi, sid, behavior, &opts)? {
        if !g.is_tight() {
            return Ok(TightVerdict::Counterexample(g));
        }
    }
    Ok(TightVerdict::Holds)
}

/// Same-structure relation: the formulas become equivalent once every
/// component atom state is abstracted to the any-state selector.
pub fn abstract_same_structure(
    phi: &Formula,
    psi: &Formula,
    sid: &Sid,
    behavior: &Behavior,
    bound: Bound,
) -> Result<bool> {
    let a = phi.abstract_states();
    let b = psi.abstract_states();
    // Syntactic fast path: identical up to AC laws.
    if a.equiv(&b) {
        return Ok(true);
    }
    Ok(bounded_entails(&a, &b, sid, behavior, bound)?.is_valid()
        && bounded_entails(&b, &a, sid, behavior, bound)?.is_valid())
}

/// The ordering used by the concatenation rule: `phi` is satisfiable and
/// `psi` is not, or they share the same structure.
pub fn succeq(
    phi: &Formula,
    psi: &Formula,
    sid: &Sid,
    behavior: &Behavior,
    bound: Bound,
) -> Result<bool> {
    if satisfiable(phi, sid, behavior, bound)? && !satisfiable(psi, sid, behavior, bound)? {
        return Ok(true);
    }
    abstract_same_structure(phi, psi, sid, behavior, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::sid::chain_sid;
    use crate::logic::{IndexExpr, StateSel};

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

    #[test]
    fn pure_relations_examples() {
        // emp * x=z /\ z=y: x =phi y.
        let sc = SymbolicConfig {
            spatial: vec![],
            pure: vec![
                PureLit::Eq("x".into(), "z".into()),
                PureLit::Eq("z".into(), "y".into()),
            ],
        };
        let rel = pure_relations(&sc).unwrap();
        assert!(rel.eq("x", "y"));
        assert!(!rel.neq("x", "y"));

        // <x active> * <y active>: x /= y from separation.
        let sc = SymbolicConfig {
            spatial: vec![
                SpatialAtom::Comp("x".into(), StateSel::Any),
                SpatialAtom::Comp("y".into(), StateSel::Any),
            ],
            pure: vec![],
        };
        let rel = pure_relations(&sc).unwrap();
        assert!(rel.neq("x", "y"));
        assert!(!rel.eq("x", "y"));

        // <x|H> alone: identity eq, empty neq.
        let sc = SymbolicConfig {
            spatial: vec![SpatialAtom::Comp("x".into(), StateSel::State("H".into()))],
            pure: vec![],
        };
        let rel = pure_relations(&sc).unwrap();
        assert!(rel.eq("x", "x"));
        assert!(!rel.neq("x", "x"));
    }

    #[test]
    fn inconsistent_pure_is_reported() {
        // Two separated component atoms whose roots are equated.
        let sc = SymbolicConfig {
            spatial: vec![
                SpatialAtom::Comp("x".into(), StateSel::Any),
                SpatialAtom::Comp("y".into(), StateSel::Any),
            ],
            pure: vec![PureLit::Eq("x".into(), "y".into())],
        };
        assert!(matches!(
            pure_relations(&sc),
            Err(Error::InconsistentPure(_, _))
        ));
    }

    #[test]
    fn interaction_atoms_are_precise() {
        let b = ring_behavior();
        let sid = chain_sid();
        let psi = Formula::Inter("x".into(), "out".into(), "y".into(), "in".into());
        // At a small bound over all configurations.
        let v = precise_on_bounded(&psi, &Formula::True, &sid, &b, Bound::new(2, 2)).unwrap();
        assert_eq!(v, PrecisionVerdict::Holds);
    }

    #[test]
    fn true_is_not_precise() {
        let b = ring_behavior();
        let sid = chain_sid();
        let phi = Formula::Comp("x".into(), StateSel::State("H".into()));
        match precise_on_bounded(&Formula::True, &phi, &sid, &b, Bound::new(1, 0)).unwrap() {
            PrecisionVerdict::CounterexampleTriple(_, s1, s2) => assert_ne!(s1, s2),
            v => panic!("expected counterexample, got {v:?}"),
        }
    }

    #[test]
    fn chain_atoms_are_precisely_closed_small() {
        let b = ring_behavior();
        let sid = chain_sid();
        let chain = |h: u32, t: u32, x: &str, y: &str| {
            Formula::Pred(
                "chain".into(),
                vec![IndexExpr::Const(h), IndexExpr::Const(t)],
                vec![x.into(), y.into()],
            )
        };
        // chain[1,1](x,y) precise on models of chain[0,0](u,v) at (4,4).
        let v = precise_on_bounded(
            &chain(1, 1, "x", "y"),
            &chain(0, 0, "u", "v"),
            &sid,
            &b,
            Bound::new(4, 4),
        )
        .unwrap();
        assert_eq!(v, PrecisionVerdict::Holds);
    }

    #[test]
    fn tightness_oracle() {
        let b = ring_behavior();
        let sid = chain_sid();
        let chain = Formula::Pred(
            "chain".into(),
            vec![IndexExpr::Const(1), IndexExpr::Const(1)],
            vec!["x".into(), "y".into()],
        );
        assert_eq!(
            tight_formula_bounded(&chain, &sid, &b, Bound::new(4, 4)).unwrap(),
            TightVerdict::Holds
        );
        let comp = Formula::Comp("x".into(), StateSel::State("H".into()));
        assert_eq!(
            tight_formula_bounded(&comp, &sid, &b, Bound::new(2, 2)).unwrap(),
            TightVerdict::Holds
        );
        // An interaction atom alone is loose: its models have no components.
        let edge = Formula::Inter("x".into(), "out".into(), "y".into(), "in".into());
        assert!(matches!(
            tight_formula_bounded(&edge, &sid, &b, Bound::new(2, 2)).unwrap(),
            TightVerdict::Counterexample(_)
        ));
    }

    #[test]
    fn same_structure_examples() {
        let b = ring_behavior();
        let sid = chain_sid();
        let bound = Bound::new(3, 3);
        let xh = Formula::Comp("x".into(), StateSel::State("H".into()));
        let xt = Formula::Comp("x".into(), StateSel::State("T".into()));
        assert!(abstract_same_structure(&xh, &xt, &sid, &b, bound).unwrap());
        let two = Formula::star(
            xh.clone(),
            Formula::Comp("y".into(), StateSel::State("T".into())),
        );
        assert!(!abstract_same_structure(&two, &xh, &sid, &b, bound).unwrap());
        // succeq: satisfiable vs unsatisfiable.
        assert!(succeq(&xh, &Formula::ffalse(), &sid, &b, bound).unwrap());
        assert!(!succeq(&Formula::ffalse(), &xh, &sid, &b, bound).unwrap());
        assert!(succeq(&xh, &xt, &sid, &b, bound).unwrap());
    }
}
