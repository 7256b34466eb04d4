//! Configuration logic: formula syntax, symbolic configurations and
//! inductive definition systems.
//!
//! Formulas are interpreted over configurations relative to a system of
//! inductive definitions ([`sid::Sid`]). Derived forms (false, disequality,
//! disjunction, universal quantification) are encoded with negation; helper
//! constructors and recognizers below keep that encoding in one place.

pub mod enumerate;
pub mod oracles;
pub mod semantics;
pub mod sid;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// State selector of a component atom: a named state or any state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateSel {
    State(String),
    Any,
}

/// Arithmetic over predicate indices: naturals, parameters and monus
/// (truncated subtraction).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexExpr {
    Const(u32),
    Param(String),
    Monus(Box<IndexExpr>, Box<IndexExpr>),
}

impl IndexExpr {
    pub fn eval(&self, valuation: &BTreeMap<String, u32>) -> Result<u32> {
        match self {
            IndexExpr::Const(c) => Ok(*c),
            IndexExpr::Param(p) => valuation
                .get(p)
                .copied()
                .ok_or_else(|| Error::UnboundIndexParam(p.clone())),
            IndexExpr::Monus(a, b) => {
                Ok(a.eval(valuation)?.saturating_sub(b.eval(valuation)?))
            }
        }
    }

    pub fn params(&self, out: &mut BTreeSet<String>) {
        match self {
            IndexExpr::Const(_) => {}
            IndexExpr::Param(p) => {
                out.insert(p.clone());
            }
            IndexExpr::Monus(a, b) => {
                a.params(out);
                b.params(out);
            }
        }
    }

    pub fn subst(&self, map: &BTreeMap<String, IndexExpr>) -> IndexExpr {
        match self {
            IndexExpr::Const(c) => IndexExpr::Const(*c),
            IndexExpr::Param(p) => map.get(p).cloned().unwrap_or_else(|| self.clone()),
            IndexExpr::Monus(a, b) => {
                IndexExpr::Monus(Box::new(a.subst(map)), Box::new(b.subst(map)))
            }
        }
    }

    /// Rewrites the expression under a ground valuation into a constant.
    pub fn ground(&self, valuation: &BTreeMap<String, u32>) -> Result<IndexExpr> {
        Ok(IndexExpr::Const(self.eval(valuation)?))
    }
}

/// Symbolic comparison verdict between index expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdxRel {
    Lt,
    Eq,
    /// Less than or equal, possibly equal.
    Le,
    Unknown,
}

/// Sound symbolic comparison: `Lt`/`Le`/`Eq` verdicts hold for every
/// valuation of the parameters.
pub fn idx_rel(a: &IndexExpr, b: &IndexExpr) -> IdxRel {
    if a == b {
        return IdxRel::Eq;
    }
    match (a, b) {
        (IndexExpr::Const(x), IndexExpr::Const(y)) => {
            if x < y {
                IdxRel::Lt
            } else {
                IdxRel::Unknown
            }
        }
        (IndexExpr::Const(0), _) => IdxRel::Le,
        (IndexExpr::Monus(a1, _), _) => match idx_rel(a1, b) {
            IdxRel::Eq | IdxRel::Le => IdxRel::Le,
            IdxRel::Lt => IdxRel::Lt,
            IdxRel::Unknown => IdxRel::Unknown,
        },
        _ => IdxRel::Unknown,
    }
}

/// Lexicographic non-increase of index tuples, sound under every parameter
/// valuation.
pub fn idx_tuple_lex_le(a: &[IndexExpr], b: &[IndexExpr]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    for k in 0..a.len() {
        match idx_rel(&a[k], &b[k]) {
            IdxRel::Lt => return true,
            IdxRel::Eq => continue,
            IdxRel::Le => {
                // Possibly equal at k: the remainder must be componentwise
                // non-increasing for the tuple to be non-increasing.
                return a[k..]
                    .iter()
                    .zip(&b[k..])
                    .all(|(x, y)| matches!(idx_rel(x, y), IdxRel::Lt | IdxRel::Le | IdxRel::Eq));
            }
            IdxRel::Unknown => return false,
        }
    }
    true
}

/// Configuration logic formulas. False, disequality, disjunction and
/// universal quantification are derived forms over this kernel.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    Emp,
    Eq(String, String),
    Comp(String, StateSel),
    /// Interaction atom x1.p1 -- x2.p2 with port names.
    Inter(String, String, String, String),
    Pred(String, Vec<IndexExpr>, Vec<String>),
    Star(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    pub fn star(l: Formula, r: Formula) -> Formula {
        Formula::Star(Box::new(l), Box::new(r))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn exists(x: impl Into<String>, f: Formula) -> Formula {
        Formula::Exists(x.into(), Box::new(f))
    }

    pub fn ffalse() -> Formula {
        Formula::not(Formula::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::Not(f) if **f == Formula::True)
    }

    pub fn neq(x: impl Into<String>, y: impl Into<String>) -> Formula {
        Formula::not(Formula::Eq(x.into(), y.into()))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(l), Formula::not(r)))
    }

    pub fn as_or(&self) -> Option<(&Formula, &Formula)> {
        if let Formula::Not(f) = self {
            if let Formula::And(l, r) = &**f {
                if let (Formula::Not(a), Formula::Not(b)) = (&**l, &**r) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Right-folds a list into a disjunction; the empty disjunction is false.
    pub fn or_list(mut fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::ffalse(),
            1 => fs.pop().unwrap(),
            _ => {
                let rest = fs.split_off(1);
                Formula::or(fs.pop().unwrap(), Formula::or_list(rest))
            }
        }
    }

    /// Flattens nested derived disjunctions.
    pub fn disjuncts(&self) -> Vec<&Formula> {
        match self.as_or() {
            Some((l, r)) => {
                let mut out = l.disjuncts();
                out.extend(r.disjuncts());
                out
            }
            None => vec![self],
        }
    }

    pub fn star_list(mut fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::Emp,
            1 => fs.pop().unwrap(),
            _ => {
                let rest = fs.split_off(1);
                Formula::star(fs.pop().unwrap(), Formula::star_list(rest))
            }
        }
    }

    pub fn and_list(mut fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::True,
            1 => fs.pop().unwrap(),
            _ => {
                let rest = fs.split_off(1);
                Formula::and(fs.pop().unwrap(), Formula::and_list(rest))
            }
        }
    }

    pub fn forall(x: impl Into<String>, f: Formula) -> Formula {
        Formula::not(Formula::exists(x, Formula::not(f)))
    }

    pub fn exists_list(vars: &[String], f: Formula) -> Formula {
        vars.iter()
            .rev()
            .fold(f, |acc, x| Formula::exists(x.clone(), acc))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_fv(&mut BTreeSet::new(), &mut out);
        out
    }

    fn collect_fv(&self, bound: &mut BTreeSet<String>, out: &mut BTreeSet<String>) {
        let add = |x: &String, bound: &BTreeSet<String>, out: &mut BTreeSet<String>| {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        };
        match self {
            Formula::True | Formula::Emp => {}
            Formula::Eq(x, y) => {
                add(x, bound, out);
                add(y, bound, out);
            }
            Formula::Comp(x, _) => add(x, bound, out),
            Formula::Inter(x1, _, x2, _) => {
                add(x1, bound, out);
                add(x2, bound, out);
            }
            Formula::Pred(_, _, args) => {
                for a in args {
                    add(a, bound, out);
                }
            }
            Formula::Star(l, r) | Formula::And(l, r) => {
                l.collect_fv(bound, out);
                r.collect_fv(bound, out);
            }
            Formula::Not(f) => f.collect_fv(bound, out),
            Formula::Exists(x, f) => {
                let fresh = bound.insert(x.clone());
                f.collect_fv(bound, out);
                if fresh {
                    bound.remove(x);
                }
            }
        }
    }

    /// Index parameters occurring in predicate atoms.
    pub fn index_params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::Pred(_, idxs, _) = f {
                for i in idxs {
                    i.params(&mut out);
                }
            }
        });
        out
    }

    fn walk(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Star(l, r) | Formula::And(l, r) => {
                l.walk(f);
                r.walk(f);
            }
            Formula::Not(g) => g.walk(f),
            Formula::Exists(_, g) => g.walk(f),
            _ => {}
        }
    }

    /// Quantifier nesting depth.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Star(l, r) | Formula::And(l, r) => {
                l.quantifier_depth().max(r.quantifier_depth())
            }
            Formula::Not(f) => f.quantifier_depth(),
            Formula::Exists(_, f) => 1 + f.quantifier_depth(),
            _ => 0,
        }
    }

    /// Capture-avoiding substitution of free variables.
    pub fn subst_vars(&self, map: &BTreeMap<String, String>) -> Formula {
        let s = |x: &String| map.get(x).cloned().unwrap_or_else(|| x.clone());
        match self {
            Formula::True => Formula::True,
            Formula::Emp => Formula::Emp,
            Formula::Eq(x, y) => Formula::Eq(s(x), s(y)),
            Formula::Comp(x, sel) => Formula::Comp(s(x), sel.clone()),
            Formula::Inter(x1, p1, x2, p2) => {
                Formula::Inter(s(x1), p1.clone(), s(x2), p2.clone())
            }
            Formula::Pred(n, idxs, args) => {
                Formula::Pred(n.clone(), idxs.clone(), args.iter().map(s).collect())
            }
            Formula::Star(l, r) => Formula::star(l.subst_vars(map), r.subst_vars(map)),
            Formula::And(l, r) => Formula::and(l.subst_vars(map), r.subst_vars(map)),
            Formula::Not(f) => Formula::not(f.subst_vars(map)),
            Formula::Exists(x, f) => {
                let targets: BTreeSet<&String> = map.values().collect();
                if targets.contains(x) {
                    // Rename the binder away from the substitution range.
                    let mut fresh = format!("{x}'");
                    let avoid: BTreeSet<String> = f
                        .free_vars()
                        .into_iter()
                        .chain(map.values().cloned())
                        .chain(map.keys().cloned())
                        .collect();
                    while avoid.contains(&fresh) {
                        fresh.push('\'');
                    }
                    let mut inner = BTreeMap::new();
                    inner.insert(x.clone(), fresh.clone());
                    let renamed = f.subst_vars(&inner);
                    Formula::exists(fresh, renamed.subst_vars(map))
                } else {
                    let mut map2 = map.clone();
                    map2.remove(x);
                    Formula::exists(x.clone(), f.subst_vars(&map2))
                }
            }
        }
    }

    /// Substitutes index parameters in predicate atoms.
    pub fn subst_indices(&self, map: &BTreeMap<String, IndexExpr>) -> Formula {
        match self {
            Formula::Pred(n, idxs, args) => Formula::Pred(
                n.clone(),
                idxs.iter().map(|i| i.subst(map)).collect(),
                args.clone(),
            ),
            Formula::Star(l, r) => {
                Formula::star(l.subst_indices(map), r.subst_indices(map))
            }
            Formula::And(l, r) => Formula::and(l.subst_indices(map), r.subst_indices(map)),
            Formula::Not(f) => Formula::not(f.subst_indices(map)),
            Formula::Exists(x, f) => Formula::exists(x.clone(), f.subst_indices(map)),
            _ => self.clone(),
        }
    }

    /// Evaluates every index expression to a constant under `valuation`.
    pub fn ground_indices(&self, valuation: &BTreeMap<String, u32>) -> Result<Formula> {
        Ok(match self {
            Formula::Pred(n, idxs, args) => Formula::Pred(
                n.clone(),
                idxs.iter()
                    .map(|i| i.ground(valuation))
                    .collect::<Result<_>>()?,
                args.clone(),
            ),
            Formula::Star(l, r) => Formula::star(
                l.ground_indices(valuation)?,
                r.ground_indices(valuation)?,
            ),
            Formula::And(l, r) => Formula::and(
                l.ground_indices(valuation)?,
                r.ground_indices(valuation)?,
            ),
            Formula::Not(f) => Formula::not(f.ground_indices(valuation)?),
            Formula::Exists(x, f) => {
                Formula::exists(x.clone(), f.ground_indices(valuation)?)
            }
            _ => self.clone(),
        })
    }

    /// Replaces every component atom state with the any-state selector.
    pub fn abstract_states(&self) -> Formula {
        match self {
            Formula::Comp(x, _) => Formula::Comp(x.clone(), StateSel::Any),
            Formula::Star(l, r) => Formula::star(l.abstract_states(), r.abstract_states()),
            Formula::And(l, r) => Formula::and(l.abstract_states(), r.abstract_states()),
            Formula::Not(f) => Formula::not(f.abstract_states()),
            Formula::Exists(x, f) => Formula::exists(x.clone(), f.abstract_states()),
            _ => self.clone(),
        }
    }

    /// AC-normal form: stars and conjunctions are flattened and sorted,
    /// star units (emp) and conjunction units (true) dropped, bound
    /// variables renamed canonically. Two formulas with equal normal forms
    /// are equivalent up to these laws.
    pub fn normalize(&self) -> Formula {
        self.normalize_inner(&mut 0, &BTreeMap::new())
    }

    fn normalize_inner(&self, counter: &mut usize, renaming: &BTreeMap<String, String>) -> Formula {
        match self {
            Formula::Star(_, _) => {
                let mut parts = Vec::new();
                self.flatten_star(counter, renaming, &mut parts);
                parts.retain(|p| *p != Formula::Emp);
                parts.sort();
                Formula::star_list(parts)
            }
            Formula::And(_, _) => {
                let mut parts = Vec::new();
                self.flatten_and(counter, renaming, &mut parts);
                parts.retain(|p| *p != Formula::True);
                parts.sort();
                parts.dedup();
                Formula::and_list(parts)
            }
            Formula::Not(f) => Formula::not(f.normalize_inner(counter, renaming)),
            Formula::Exists(x, f) => {
                let fresh = format!("$b{}", *counter);
                *counter += 1;
                let mut renaming2 = renaming.clone();
                renaming2.insert(x.clone(), fresh.clone());
                Formula::exists(fresh, f.normalize_inner(counter, &renaming2))
            }
            Formula::Eq(x, y) => {
                let s = |v: &String| renaming.get(v).cloned().unwrap_or_else(|| v.clone());
                let (a, b) = (s(x), s(y));
                if a <= b {
                    Formula::Eq(a, b)
                } else {
                    Formula::Eq(b, a)
                }
            }
            other => {
                let map: BTreeMap<String, String> = renaming.clone();
                other.subst_vars(&map)
            }
        }
    }

    fn flatten_star(
        &self,
        counter: &mut usize,
        renaming: &BTreeMap<String, String>,
        out: &mut Vec<Formula>,
    ) {
        if let Formula::Star(l, r) = self {
            l.flatten_star(counter, renaming, out);
            r.flatten_star(counter, renaming, out);
        } else {
            out.push(self.normalize_inner(counter, renaming));
        }
    }

    fn flatten_and(
        &self,
        counter: &mut usize,
        renaming: &BTreeMap<String, String>,
        out: &mut Vec<Formula>,
    ) {
        if let Formula::And(l, r) = self {
            l.flatten_and(counter, renaming, out);
            r.flatten_and(counter, renaming, out);
        } else {
            out.push(self.normalize_inner(counter, renaming));
        }
    }

    /// Equality modulo associativity, commutativity, units and bound
    /// variable names.
    pub fn equiv(&self, other: &Formula) -> bool {
        self.normalize() == other.normalize()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Emp => write!(f, "emp"),
            Formula::Eq(x, y) => write!(f, "{x}={y}"),
            Formula::Comp(x, StateSel::State(q)) => write!(f, "<{x}|{q}>"),
            Formula::Comp(x, StateSel::Any) => write!(f, "<{x}|*>"),
            Formula::Inter(x1, p1, x2, p2) => write!(f, "<{x1}.{p1}-{x2}.{p2}>"),
            Formula::Pred(n, idxs, args) => {
                write!(f, "{n}")?;
                if !idxs.is_empty() {
                    write!(f, "[")?;
                    for (k, i) in idxs.iter().enumerate() {
                        if k > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{i}")?;
                    }
                    write!(f, "]")?;
                }
                write!(f, "(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Formula::Star(l, r) => write!(f, "({l} * {r})"),
            Formula::And(l, r) => write!(f, "({l} & {r})"),
            Formula::Not(g) => write!(f, "!{g}"),
            Formula::Exists(x, g) => write!(f, "(exists {x}. {g})"),
        }
    }
}

impl fmt::Display for IndexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexExpr::Const(c) => write!(f, "{c}"),
            IndexExpr::Param(p) => write!(f, "{p}"),
            IndexExpr::Monus(a, b) => write!(f, "({a}-{b})"),
        }
    }
}

/// Spatial atom of a symbolic configuration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpatialAtom {
    Comp(String, StateSel),
    Inter(String, String, String, String),
    Pred(String, Vec<IndexExpr>, Vec<String>),
}

impl SpatialAtom {
    pub fn to_formula(&self) -> Formula {
        match self {
            SpatialAtom::Comp(x, s) => Formula::Comp(x.clone(), s.clone()),
            SpatialAtom::Inter(x1, p1, x2, p2) => {
                Formula::Inter(x1.clone(), p1.clone(), x2.clone(), p2.clone())
            }
            SpatialAtom::Pred(n, i, a) => Formula::Pred(n.clone(), i.clone(), a.clone()),
        }
    }

    pub fn subst_vars(&self, map: &BTreeMap<String, String>) -> SpatialAtom {
        let s = |x: &String| map.get(x).cloned().unwrap_or_else(|| x.clone());
        match self {
            SpatialAtom::Comp(x, sel) => SpatialAtom::Comp(s(x), sel.clone()),
            SpatialAtom::Inter(x1, p1, x2, p2) => {
                SpatialAtom::Inter(s(x1), p1.clone(), s(x2), p2.clone())
            }
            SpatialAtom::Pred(n, i, a) => {
                SpatialAtom::Pred(n.clone(), i.clone(), a.iter().map(s).collect())
            }
        }
    }

    pub fn vars(&self) -> Vec<&String> {
        match self {
            SpatialAtom::Comp(x, _) => vec![x],
            SpatialAtom::Inter(x1, _, x2, _) => vec![x1, x2],
            SpatialAtom::Pred(_, _, a) => a.iter().collect(),
        }
    }
}

/// Pure literal: equality or disequality between variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PureLit {
    Eq(String, String),
    Neq(String, String),
}

/// A symbolic configuration: a separating conjunction of spatial atoms plus
/// a pure conjunction of (dis)equalities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SymbolicConfig {
    pub spatial: Vec<SpatialAtom>,
    pub pure: Vec<PureLit>,
}

impl SymbolicConfig {
    pub fn to_formula(&self) -> Formula {
        let spat = Formula::star_list(self.spatial.iter().map(|a| a.to_formula()).collect());
        if self.pure.is_empty() {
            return spat;
        }
        let mut parts = vec![spat];
        for l in &self.pure {
            parts.push(match l {
                PureLit::Eq(x, y) => Formula::Eq(x.clone(), y.clone()),
                PureLit::Neq(x, y) => Formula::neq(x.clone(), y.clone()),
            });
        }
        Formula::and_list(parts)
    }

    /// Recognizes the `xi /\ pi` fragment: one separated spatial conjunct
    /// plus pure literals, no quantifiers or other connectives.
    pub fn from_formula(f: &Formula) -> Option<SymbolicConfig> {
        let mut conjuncts = Vec::new();
        flatten_and_ref(f, &mut conjuncts);
        let mut sc = SymbolicConfig::default();
        let mut seen_spatial = false;
        for c in conjuncts {
            match c {
                Formula::Eq(x, y) => sc.pure.push(PureLit::Eq(x.clone(), y.clone())),
                Formula::Not(inner) => {
                    if let Formula::Eq(x, y) = &**inner {
                        sc.pure.push(PureLit::Neq(x.clone(), y.clone()));
                    } else {
                        return None;
                    }
                }
                spatial => {
                    if seen_spatial {
                        return None;
                    }
                    seen_spatial = true;
                    let mut atoms = Vec::new();
                    flatten_star_ref(spatial, &mut atoms);
                    for a in atoms {
                        match a {
                            Formula::Emp => {}
                            Formula::Comp(x, s) => {
                                sc.spatial.push(SpatialAtom::Comp(x.clone(), s.clone()))
                            }
                            Formula::Inter(x1, p1, x2, p2) => sc.spatial.push(SpatialAtom::Inter(
                                x1.clone(),
                                p1.clone(),
                                x2.clone(),
                                p2.clone(),
                            )),
                            Formula::Pred(n, i, ar) => sc.spatial.push(SpatialAtom::Pred(
                                n.clone(),
                                i.clone(),
                                ar.clone(),
                            )),
                            Formula::Eq(x, y) => sc.pure.push(PureLit::Eq(x.clone(), y.clone())),
                            Formula::Not(inner) => {
                                if let Formula::Eq(x, y) = &**inner {
                                    sc.pure.push(PureLit::Neq(x.clone(), y.clone()));
                                } else {
                                    return None;
                                }
                            }
                            _ => return None,
                        }
                    }
                }
            }
        }
        Some(sc)
    }

    /// Interaction atoms.
    pub fn iatoms(&self) -> Vec<&SpatialAtom> {
        self.spatial
            .iter()
            .filter(|a| matches!(a, SpatialAtom::Inter(..)))
            .collect()
    }

    /// Interaction and predicate atoms, in order of occurrence.
    pub fn alphabet_atoms(&self) -> Vec<&SpatialAtom> {
        self.spatial
            .iter()
            .filter(|a| !matches!(a, SpatialAtom::Comp(..)))
            .collect()
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in &self.spatial {
            out.extend(a.vars().into_iter().cloned());
        }
        for l in &self.pure {
            match l {
                PureLit::Eq(x, y) | PureLit::Neq(x, y) => {
                    out.insert(x.clone());
                    out.insert(y.clone());
                }
            }
        }
        out
    }

    pub fn subst_vars(&self, map: &BTreeMap<String, String>) -> SymbolicConfig {
        let s = |x: &String| map.get(x).cloned().unwrap_or_else(|| x.clone());
        SymbolicConfig {
            spatial: self.spatial.iter().map(|a| a.subst_vars(map)).collect(),
            pure: self
                .pure
                .iter()
                .map(|l| match l {
                    PureLit::Eq(x, y) => PureLit::Eq(s(x), s(y)),
                    PureLit::Neq(x, y) => PureLit::Neq(s(x), s(y)),
                })
                .collect(),
        }
    }
}

fn flatten_and_ref<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    if let Formula::And(l, r) = f {
        flatten_and_ref(l, out);
        flatten_and_ref(r, out);
    } else {
        out.push(f);
    }
}

fn flatten_star_ref<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    if let Formula::Star(l, r) = f {
        flatten_star_ref(l, out);
        flatten_star_ref(r, out);
    } else {
        out.push(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_forms_round_trip() {
        let f = Formula::or(Formula::True, Formula::Emp);
        let (l, r) = f.as_or().unwrap();
        assert_eq!(*l, Formula::True);
        assert_eq!(*r, Formula::Emp);
        assert!(Formula::ffalse().is_false());
    }

    #[test]
    fn normalization_is_ac_with_units() {
        let a = Formula::Comp("x".into(), StateSel::Any);
        let b = Formula::Comp("y".into(), StateSel::Any);
        let f1 = Formula::star(a.clone(), Formula::star(Formula::Emp, b.clone()));
        let f2 = Formula::star(b, a);
        assert!(f1.equiv(&f2));

        let g1 = Formula::exists("u", Formula::Comp("u".into(), StateSel::Any));
        let g2 = Formula::exists("v", Formula::Comp("v".into(), StateSel::Any));
        assert!(g1.equiv(&g2));
    }

    #[test]
    fn monus_evaluates_saturating() {
        let e = IndexExpr::Monus(
            Box::new(IndexExpr::Param("k".into())),
            Box::new(IndexExpr::Const(1)),
        );
        let mut v = BTreeMap::new();
        v.insert("k".to_string(), 0u32);
        assert_eq!(e.eval(&v).unwrap(), 0);
        v.insert("k".to_string(), 3u32);
        assert_eq!(e.eval(&v).unwrap(), 2);
    }

    #[test]
    fn index_tuple_comparison() {
        let h = IndexExpr::Param("h".into());
        let t = IndexExpr::Param("t".into());
        let h1 = IndexExpr::Monus(Box::new(h.clone()), Box::new(IndexExpr::Const(1)));
        assert!(idx_tuple_lex_le(
            &[h1.clone(), t.clone()],
            &[h.clone(), t.clone()]
        ));
        assert!(idx_tuple_lex_le(&[h.clone(), h1.clone()], &[h.clone(), t.clone()]) == false);
        assert!(idx_tuple_lex_le(
            &[IndexExpr::Const(0), IndexExpr::Const(5)],
            &[IndexExpr::Const(1), IndexExpr::Const(2)]
        ));
        assert!(!idx_tuple_lex_le(
            &[IndexExpr::Const(2)],
            &[IndexExpr::Const(1)]
        ));
    }

    #[test]
    fn symbolic_config_recognizer() {
        let f = Formula::and(
            Formula::star(
                Formula::Comp("x".into(), StateSel::State("H".into())),
                Formula::Inter("x".into(), "out".into(), "y".into(), "in".into()),
            ),
            Formula::Eq("x".into(), "y".into()),
        );
        let sc = SymbolicConfig::from_formula(&f).unwrap();
        assert_eq!(sc.spatial.len(), 2);
        assert_eq!(sc.pure.len(), 1);
        assert!(sc.to_formula().equiv(&f));

        let bad = Formula::and(
            Formula::Comp("x".into(), StateSel::Any),
            Formula::Comp("y".into(), StateSel::Any),
        );
        assert!(SymbolicConfig::from_formula(&bad).is_none());
    }
}
