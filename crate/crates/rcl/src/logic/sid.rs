//! Systems of inductive definitions with index-parameterized rule schemas.

use std::collections::{BTreeMap, BTreeSet};

use super::{IndexExpr, SpatialAtom, SymbolicConfig};
#[cfg(test)]
use super::StateSel;
use crate::error::{Error, Result};

/// Tightness of a predicate: declared in the definition file and validated
/// against the bounded semantic oracle once per corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tightness {
    Declared,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredDecl {
    pub arity: usize,
    pub index_arity: usize,
    pub tight: Tightness,
}

/// Head index pattern of a rule schema: a literal natural or a binder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexPattern {
    Const(u32),
    Var(String),
}

/// One rule schema `A[patterns](params) <- exists zs . body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSchema {
    pub head: String,
    pub index_params: Vec<IndexPattern>,
    pub params: Vec<String>,
    pub existentials: Vec<String>,
    pub body: SymbolicConfig,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sid {
    decls: BTreeMap<String, PredDecl>,
    rules: Vec<RuleSchema>,
    /// For each predicate, which argument positions denote a component that
    /// is present in every model. Computed at construction.
    present_args: BTreeMap<String, Vec<bool>>,
}

/// One way of unfolding a predicate atom: the matched rule, the constraint
/// it puts on the atom's index parameters, and the instantiated body.
#[derive(Debug, Clone)]
pub struct UnfoldCase {
    pub rule_index: usize,
    /// Pins outer index parameters to constants (empty when the rule head
    /// binds every index position).
    pub param_constraint: BTreeMap<String, u32>,
    /// Fresh names chosen for the rule's existential variables.
    pub existentials: Vec<String>,
    pub body: SymbolicConfig,
}

impl Sid {
    pub fn new(decls: BTreeMap<String, PredDecl>, rules: Vec<RuleSchema>) -> Result<Self> {
        let mut sid = Sid {
            decls,
            rules,
            present_args: BTreeMap::new(),
        };
        sid.validate()?;
        sid.present_args = sid.compute_present_args();
        Ok(sid)
    }

    pub fn empty() -> Self {
        Sid::default()
    }

    pub fn decl(&self, name: &str) -> Result<&PredDecl> {
        self.decls
            .get(name)
            .ok_or_else(|| Error::UnknownPredicate(name.to_string()))
    }

    pub fn decls(&self) -> impl Iterator<Item = (&String, &PredDecl)> {
        self.decls.iter()
    }

    pub fn rules_of<'a>(
        &'a self,
        name: &'a str,
    ) -> impl Iterator<Item = (usize, &'a RuleSchema)> + 'a {
        self.rules
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.head == name)
    }

    pub fn rules(&self) -> &[RuleSchema] {
        &self.rules
    }

    pub fn is_tight(&self, name: &str) -> Result<bool> {
        Ok(matches!(self.decl(name)?.tight, Tightness::Declared))
    }

    /// Which argument positions of `name` are present in every model.
    pub fn present_arg_positions(&self, name: &str) -> &[bool] {
        self.present_args
            .get(name)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    fn validate(&self) -> Result<()> {
        for rule in &self.rules {
            let decl = self.decl(&rule.head)?;
            if rule.params.len() != decl.arity {
                return Err(Error::ArityMismatch {
                    name: rule.head.clone(),
                    expected: decl.arity,
                    got: rule.params.len(),
                });
            }
            if rule.index_params.len() != decl.index_arity {
                return Err(Error::ArityMismatch {
                    name: format!("{} (indices)", rule.head),
                    expected: decl.index_arity,
                    got: rule.index_params.len(),
                });
            }
            let mut seen = BTreeSet::new();
            for p in &rule.params {
                if !seen.insert(p) {
                    return Err(Error::Validation(format!(
                        "rule for `{}` repeats head argument `{p}`",
                        rule.head
                    )));
                }
            }
            // Progress: at least one component atom per body.
            if !rule
                .body
                .spatial
                .iter()
                .any(|a| matches!(a, SpatialAtom::Comp(..)))
            {
                return Err(Error::NonProgressingSid(rule.head.clone()));
            }
            // Well-formedness: fv(body) within params and existentials.
            let allowed: BTreeSet<&String> =
                rule.params.iter().chain(rule.existentials.iter()).collect();
            for v in rule.body.vars() {
                if !allowed.contains(&v) {
                    return Err(Error::Validation(format!(
                        "rule for `{}` uses undeclared variable `{v}`",
                        rule.head
                    )));
                }
            }
            // Index expressions restricted to the rule's index binders.
            let binders: BTreeSet<String> = rule
                .index_params
                .iter()
                .filter_map(|p| match p {
                    IndexPattern::Var(v) => Some(v.clone()),
                    IndexPattern::Const(_) => None,
                })
                .collect();
            for atom in &rule.body.spatial {
                if let SpatialAtom::Pred(n, idxs, args) = atom {
                    let d = self.decl(n)?;
                    if args.len() != d.arity || idxs.len() != d.index_arity {
                        return Err(Error::ArityMismatch {
                            name: n.clone(),
                            expected: d.arity,
                            got: args.len(),
                        });
                    }
                    let mut used = BTreeSet::new();
                    for i in idxs {
                        i.params(&mut used);
                    }
                    if !used.is_subset(&binders) {
                        return Err(Error::Validation(format!(
                            "rule for `{}` uses unbound index parameters",
                            rule.head
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Greatest fixpoint of "in every rule, the head argument is equal to a
    /// component atom variable or to a guaranteed-present argument of a body
    /// predicate atom".
    fn compute_present_args(&self) -> BTreeMap<String, Vec<bool>> {
        let mut present: BTreeMap<String, Vec<bool>> = self
            .decls
            .iter()
            .map(|(n, d)| (n.clone(), vec![true; d.arity]))
            .collect();
        loop {
            let mut changed = false;
            for (name, flags) in present.clone() {
                for (pos, flag) in flags.iter().enumerate() {
                    if !flag {
                        continue;
                    }
                    let ok = self.rules_of(&name).all(|(_, rule)| {
                        let eq = pure_eq_classes(&rule.body);
                        let arg = &rule.params[pos];
                        let cls = eq_class_of(&eq, arg);
                        // Equal to some component atom variable?
                        let by_comp = rule.body.spatial.iter().any(|a| {
                            matches!(a, SpatialAtom::Comp(v, _) if cls.contains(v))
                        });
                        let by_pred = rule.body.spatial.iter().any(|a| {
                            if let SpatialAtom::Pred(n2, _, args2) = a {
                                args2.iter().enumerate().any(|(j, v)| {
                                    cls.contains(v)
                                        && present
                                            .get(n2)
                                            .and_then(|f| f.get(j))
                                            .copied()
                                            .unwrap_or(false)
                                })
                            } else {
                                false
                            }
                        });
                        by_comp || by_pred
                    });
                    if !ok {
                        present.get_mut(&name).unwrap()[pos] = false;
                        changed = true;
                    }
                }
            }
            if !changed {
                return present;
            }
        }
    }

    /// Unfolds a predicate atom: one case per rule schema and per solution
    /// of the head index unification. Existential variables are renamed
    /// away from `avoid`, preferring the caller-supplied `names`.
    pub fn unfold(
        &self,
        name: &str,
        indices: &[IndexExpr],
        args: &[String],
        avoid: &BTreeSet<String>,
        names: &[String],
    ) -> Result<Vec<UnfoldCase>> {
        let decl = self.decl(name)?;
        if args.len() != decl.arity || indices.len() != decl.index_arity {
            return Err(Error::ArityMismatch {
                name: name.to_string(),
                expected: decl.arity,
                got: args.len(),
            });
        }
        let mut out = Vec::new();
        for (rule_index, rule) in self.rules_of(name) {
            for (constraint, ()) in unify_indices(&rule.index_params, indices)? {
                let mut var_map: BTreeMap<String, String> = rule
                    .params
                    .iter()
                    .cloned()
                    .zip(args.iter().cloned())
                    .collect();
                let mut fresh_names = Vec::new();
                let mut used: BTreeSet<String> = avoid.clone();
                used.extend(args.iter().cloned());
                let mut supply = names.iter();
                for z in &rule.existentials {
                    let mut candidate = supply
                        .next()
                        .cloned()
                        .unwrap_or_else(|| format!("{z}'"));
                    while used.contains(&candidate) {
                        candidate.push('\'');
                    }
                    used.insert(candidate.clone());
                    var_map.insert(z.clone(), candidate.clone());
                    fresh_names.push(candidate);
                }
                let body = rule.body.subst_vars(&var_map);
                // Index binders are replaced by the atom's expressions
                // (constrained parameters already pinned to constants).
                let mut idx_map: BTreeMap<String, IndexExpr> = BTreeMap::new();
                for (pat, expr) in rule.index_params.iter().zip(indices.iter()) {
                    if let IndexPattern::Var(v) = pat {
                        let pinned = apply_constraint(expr, &constraint);
                        idx_map.insert(v.clone(), pinned);
                    }
                }
                let body = SymbolicConfig {
                    spatial: body
                        .spatial
                        .iter()
                        .map(|a| match a {
                            SpatialAtom::Pred(n, idxs, ar) => SpatialAtom::Pred(
                                n.clone(),
                                idxs.iter().map(|i| i.subst(&idx_map)).collect(),
                                ar.clone(),
                            ),
                            other => other.clone(),
                        })
                        .collect(),
                    pure: body.pure,
                };
                out.push(UnfoldCase {
                    rule_index,
                    param_constraint: constraint,
                    existentials: fresh_names,
                    body,
                });
            }
        }
        Ok(out)
    }

    /// Unfolds an atom whose indices are concrete naturals. Guards are
    /// evaluated; the returned bodies carry constant indices.
    pub fn unfold_ground(
        &self,
        name: &str,
        indices: &[u32],
        args: &[String],
        avoid: &BTreeSet<String>,
    ) -> Result<Vec<UnfoldCase>> {
        let exprs: Vec<IndexExpr> = indices.iter().map(|c| IndexExpr::Const(*c)).collect();
        self.unfold(name, &exprs, args, avoid, &[])
    }
}

fn apply_constraint(expr: &IndexExpr, constraint: &BTreeMap<String, u32>) -> IndexExpr {
    let map: BTreeMap<String, IndexExpr> = constraint
        .iter()
        .map(|(p, c)| (p.clone(), IndexExpr::Const(*c)))
        .collect();
    let pinned = expr.subst(&map);
    // Fold constants.
    if let Ok(c) = pinned.eval(&BTreeMap::new()) {
        IndexExpr::Const(c)
    } else {
        pinned
    }
}

type Constraint = BTreeMap<String, u32>;

/// Unifies head index patterns against the atom's index expressions.
/// Returns every solution as a constraint pinning outer parameters to
/// constants (an empty constraint means the rule applies unconditionally).
fn unify_indices(
    patterns: &[IndexPattern],
    exprs: &[IndexExpr],
) -> Result<Vec<(Constraint, ())>> {
    let mut solutions: Vec<Constraint> = vec![BTreeMap::new()];
    for (pat, expr) in patterns.iter().zip(exprs.iter()) {
        match pat {
            IndexPattern::Var(_) => {}
            IndexPattern::Const(c) => {
                let mut next = Vec::new();
                for sol in &solutions {
                    let pinned = apply_constraint(expr, sol);
                    for extra in solve_eq(&pinned, *c)? {
                        let mut merged = sol.clone();
                        let mut ok = true;
                        for (p, v) in extra {
                            if let Some(old) = merged.get(&p) {
                                if *old != v {
                                    ok = false;
                                    break;
                                }
                            } else {
                                merged.insert(p, v);
                            }
                        }
                        if ok {
                            next.push(merged);
                        }
                    }
                }
                solutions = next;
                if solutions.is_empty() {
                    break;
                }
            }
        }
    }
    // Deduplicate solutions (two positions may pin the same parameter).
    solutions.sort();
    solutions.dedup();
    Ok(solutions.into_iter().map(|s| (s, ())).collect())
}

/// All parameter valuations making `expr = c`, for expressions built from
/// constants, parameters and monus by a constant.
fn solve_eq(expr: &IndexExpr, c: u32) -> Result<Vec<Constraint>> {
    match expr {
        IndexExpr::Const(d) => Ok(if *d == c { vec![BTreeMap::new()] } else { vec![] }),
        IndexExpr::Param(p) => {
            let mut m = BTreeMap::new();
            m.insert(p.clone(), c);
            Ok(vec![m])
        }
        IndexExpr::Monus(a, b) => {
            let k = match &**b {
                IndexExpr::Const(k) => *k,
                _ => {
                    return Err(Error::IndexGuardMismatch(format!(
                        "cannot solve `{expr}` = {c}"
                    )))
                }
            };
            if c > 0 {
                solve_eq(a, c + k)
            } else {
                let mut out = Vec::new();
                for j in 0..=k {
                    out.extend(solve_eq(a, j)?);
                }
                out.sort();
                out.dedup();
                Ok(out)
            }
        }
    }
}

/// Equivalence classes induced by the pure equalities of a symbolic
/// configuration.
pub fn pure_eq_classes(sc: &SymbolicConfig) -> Vec<BTreeSet<String>> {
    let mut classes: Vec<BTreeSet<String>> = Vec::new();
    let find = |classes: &mut Vec<BTreeSet<String>>, v: &String| -> usize {
        if let Some(i) = classes.iter().position(|c| c.contains(v)) {
            i
        } else {
            classes.push([v.clone()].into());
            classes.len() - 1
        }
    };
    for v in sc.vars() {
        find(&mut classes, &v);
    }
    for l in &sc.pure {
        if let super::PureLit::Eq(x, y) = l {
            let i = find(&mut classes, x);
            let j = find(&mut classes, y);
            if i != j {
                let (lo, hi) = (i.min(j), i.max(j));
                let moved = classes.remove(hi);
                classes[lo].extend(moved);
            }
        }
    }
    classes
}

pub fn eq_class_of<'a>(classes: &'a [BTreeSet<String>], v: &String) -> BTreeSet<String> {
    classes
        .iter()
        .find(|c| c.contains(v))
        .cloned()
        .unwrap_or_else(|| [v.clone()].into())
}

/// The token-ring chain definitions, used across the test suite.
#[cfg(test)]
pub fn chain_sid() -> Sid {
    use IndexPattern::*;
    let decls: BTreeMap<String, PredDecl> = [(
        "chain".to_string(),
        PredDecl {
            arity: 2,
            index_arity: 2,
            tight: Tightness::Declared,
        },
    )]
    .into();
    let comp = |x: &str, q: &str| SpatialAtom::Comp(x.into(), StateSel::State(q.into()));
    let edge = |x: &str, y: &str| {
        SpatialAtom::Inter(x.into(), "out".into(), y.into(), "in".into())
    };
    let pred = |i1: IndexExpr, i2: IndexExpr, a: &str, b: &str| {
        SpatialAtom::Pred("chain".into(), vec![i1, i2], vec![a.into(), b.into()])
    };
    let h = || IndexExpr::Param("h".into());
    let t = || IndexExpr::Param("t".into());
    let monus1 = |e: IndexExpr| IndexExpr::Monus(Box::new(e), Box::new(IndexExpr::Const(1)));
    let rules = vec![
        RuleSchema {
            head: "chain".into(),
            index_params: vec![Const(0), Const(1)],
            params: vec!["x".into(), "y".into()],
            existentials: vec![],
            body: SymbolicConfig {
                spatial: vec![comp("x", "T")],
                pure: vec![super::PureLit::Eq("x".into(), "y".into())],
            },
        },
        RuleSchema {
            head: "chain".into(),
            index_params: vec![Const(1), Const(0)],
            params: vec!["x".into(), "y".into()],
            existentials: vec![],
            body: SymbolicConfig {
                spatial: vec![comp("x", "H")],
                pure: vec![super::PureLit::Eq("x".into(), "y".into())],
            },
        },
        RuleSchema {
            head: "chain".into(),
            index_params: vec![Const(0), Const(0)],
            params: vec!["x".into(), "y".into()],
            existentials: vec![],
            body: SymbolicConfig {
                spatial: vec![SpatialAtom::Comp("x".into(), StateSel::Any)],
                pure: vec![super::PureLit::Eq("x".into(), "y".into())],
            },
        },
        RuleSchema {
            head: "chain".into(),
            index_params: vec![Var("h".into()), Var("t".into())],
            params: vec!["x".into(), "y".into()],
            existentials: vec!["z".into()],
            body: SymbolicConfig {
                spatial: vec![
                    comp("x", "T"),
                    edge("x", "z"),
                    pred(h(), monus1(t()), "z", "y"),
                ],
                pure: vec![],
            },
        },
        RuleSchema {
            head: "chain".into(),
            index_params: vec![Var("h".into()), Var("t".into())],
            params: vec!["x".into(), "y".into()],
            existentials: vec!["z".into()],
            body: SymbolicConfig {
                spatial: vec![
                    comp("x", "H"),
                    edge("x", "z"),
                    pred(monus1(h()), t(), "z", "y"),
                ],
                pure: vec![],
            },
        },
    ];
    Sid::new(decls, rules).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_sid_validates_and_args_are_present() {
        let sid = chain_sid();
        assert_eq!(sid.present_arg_positions("chain"), &[true, true]);
    }

    #[test]
    fn progress_condition_is_enforced() {
        let decls: BTreeMap<String, PredDecl> = [(
            "p".to_string(),
            PredDecl {
                arity: 1,
                index_arity: 0,
                tight: Tightness::Unknown,
            },
        )]
        .into();
        let rules = vec![RuleSchema {
            head: "p".into(),
            index_params: vec![],
            params: vec!["x".into()],
            existentials: vec![],
            body: SymbolicConfig {
                spatial: vec![SpatialAtom::Inter(
                    "x".into(),
                    "out".into(),
                    "x".into(),
                    "in".into(),
                )],
                pure: vec![],
            },
        }];
        assert!(matches!(
            Sid::new(decls, rules),
            Err(Error::NonProgressingSid(_))
        ));
    }

    #[test]
    fn unfold_chain_zero_zero() {
        // chain[0,0](x,y) has three applicable rules: the [0,0] base and the
        // two recursive schemas (their monus indices stay at zero).
        let sid = chain_sid();
        let cases = sid
            .unfold_ground("chain", &[0, 0], &["x".into(), "y".into()], &BTreeSet::new())
            .unwrap();
        assert_eq!(cases.len(), 3);
    }

    #[test]
    fn unfold_chain_two_one_skips_base_rules() {
        let sid = chain_sid();
        let cases = sid
            .unfold_ground("chain", &[2, 1], &["x".into(), "y".into()], &BTreeSet::new())
            .unwrap();
        // Only the two recursive rules apply; bodies carry chain[2,0] and
        // chain[1,1].
        assert_eq!(cases.len(), 2);
        let mut sub_indices: Vec<Vec<u32>> = cases
            .iter()
            .flat_map(|c| {
                c.body.spatial.iter().filter_map(|a| match a {
                    SpatialAtom::Pred(_, idxs, _) => Some(
                        idxs.iter()
                            .map(|i| i.eval(&BTreeMap::new()).unwrap())
                            .collect(),
                    ),
                    _ => None,
                })
            })
            .collect();
        sub_indices.sort();
        assert_eq!(sub_indices, vec![vec![1, 1], vec![2, 0]]);
    }

    #[test]
    fn unfold_symbolic_indices_at_root() {
        // chain[h,t](z,x) with free parameters: five premisses, matching the
        // three base guards plus the two recursive schemas.
        let sid = chain_sid();
        let idx = vec![IndexExpr::Param("h".into()), IndexExpr::Param("t".into())];
        let cases = sid
            .unfold(
                "chain",
                &idx,
                &["z".into(), "x".into()],
                &BTreeSet::new(),
                &["y".into()],
            )
            .unwrap();
        assert_eq!(cases.len(), 5);
        let constrained: Vec<_> = cases
            .iter()
            .filter(|c| !c.param_constraint.is_empty())
            .collect();
        assert_eq!(constrained.len(), 3);
    }

    #[test]
    fn unfold_monus_index_enumerates_solutions() {
        // chain[h, t-1](y,x): the [0,1] base forces t=2; the [1,0] and
        // [0,0] bases admit t in {0,1}.
        let sid = chain_sid();
        let idx = vec![
            IndexExpr::Param("h".into()),
            IndexExpr::Monus(
                Box::new(IndexExpr::Param("t".into())),
                Box::new(IndexExpr::Const(1)),
            ),
        ];
        let cases = sid
            .unfold(
                "chain",
                &idx,
                &["y".into(), "x".into()],
                &BTreeSet::new(),
                &["u".into()],
            )
            .unwrap();
        // [0,1]: 1 solution; [1,0]: 2; [0,0]: 2; recursive: 2 -> 7 cases.
        assert_eq!(cases.len(), 7);
        let c01: Vec<_> = cases.iter().filter(|c| c.rule_index == 0).collect();
        assert_eq!(c01.len(), 1);
        assert_eq!(c01[0].param_constraint["h"], 0);
        assert_eq!(c01[0].param_constraint["t"], 2);
    }
}
