//! Finite natural models. Level 0 holds `m` atoms; level `i+1` is the full
//! power set of level `i`. Elements are plain indices, and an element of level
//! `i+1` is read as a bit-vector over level `i`, so `x in y` is bit `x` of `y`.
//!
//! TSTU families keep levels abstract (only their sizes are stored) and use
//! the canonical injections: the subset with bit-vector `r` of level `i` is
//! element `r` of level `j`. Elements of level `j` at or above `2^{m_i}` lie
//! outside that injection's range and behave as atoms.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{translate_s, Formula, FormulaError, Mode, Sentence, Var};
use crate::stratify::check_typed;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("budget exceeded: {what} needs {needed} elements, budget is {budget}")]
    BudgetExceeded { what: String, needed: String, budget: u64 },
    #[error("type {ty} of `{var}` is out of range for {len} levels")]
    TypeOutOfRange { var: String, ty: i64, len: usize },
    #[error("formula is not well typed: {0}")]
    NotWellTyped(String),
    #[error("free variable `{0}` has no value")]
    FreeVariable(String),
    #[error("models differ: {0}")]
    SizeMismatch(String),
    #[error("sizes violate m_j >= 2^m_i at ({i}, {j})")]
    SizeConstraintViolated { i: usize, j: usize },
    #[error("bad interpretation: {0}")]
    BadInterpretation(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// `2^e`, or `None` when it does not fit in a `u64`.
pub fn pow2(e: u64) -> Option<u64> {
    if e < 64 {
        Some(1u64 << e)
    } else {
        None
    }
}

/// What an evaluator needs to know about a structure.
trait Structure {
    fn mode(&self) -> Mode;
    fn levels(&self) -> usize;
    fn level_size(&self, ty: i64) -> Result<u64, ModelError>;
    fn member(&self, tx: i64, x: u64, ty: i64, y: u64) -> bool;
    /// Value of `empty^ty`.
    fn empty(&self, ty: i64) -> u64 {
        let _ = ty;
        0
    }
}

type Env = Vec<(String, u64)>;

fn check_range<S: Structure>(s: &S, phi: &Formula) -> Result<(), ModelError> {
    for v in phi.occurrences() {
        let t = v.ty.ok_or_else(|| ModelError::Formula(FormulaError::MissingTypes(v.name.clone())))?;
        if t < 0 || t as usize >= s.levels() {
            return Err(ModelError::TypeOutOfRange { var: v.name.clone(), ty: t, len: s.levels() });
        }
    }
    if !check_typed(phi, s.mode()).unwrap_or(false) {
        return Err(ModelError::NotWellTyped(phi.to_string()));
    }
    Ok(())
}

fn lookup<S: Structure>(s: &S, v: &Var, env: &Env) -> Result<u64, ModelError> {
    if v.is_empty_const() {
        return Ok(s.empty(v.ty.unwrap_or(0)));
    }
    env.iter()
        .rev()
        .find(|(n, _)| n == &v.name)
        .map(|(_, x)| *x)
        .ok_or_else(|| ModelError::FreeVariable(v.name.clone()))
}

fn eval_rec<S: Structure>(s: &S, f: &Formula, env: &mut Env) -> Result<bool, ModelError> {
    Ok(match f {
        Formula::Equal(x, y) => lookup(s, x, env)? == lookup(s, y, env)?,
        Formula::Member(x, y) => {
            let (a, b) = (lookup(s, x, env)?, lookup(s, y, env)?);
            s.member(x.ty.unwrap_or(0), a, y.ty.unwrap_or(0), b)
        }
        Formula::Not(a) => !eval_rec(s, a, env)?,
        Formula::And(a, b) => eval_rec(s, a, env)? && eval_rec(s, b, env)?,
        Formula::Or(a, b) => eval_rec(s, a, env)? || eval_rec(s, b, env)?,
        Formula::Implies(a, b) => !eval_rec(s, a, env)? || eval_rec(s, b, env)?,
        Formula::Iff(a, b) => eval_rec(s, a, env)? == eval_rec(s, b, env)?,
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let universal = matches!(f, Formula::Forall(..));
            let size = s.level_size(v.ty.unwrap_or(0))?;
            env.push((v.name.clone(), 0));
            let mut result = universal;
            for e in 0..size {
                env.last_mut().expect("just pushed").1 = e;
                let r = eval_rec(s, body, env);
                let r = match r {
                    Ok(r) => r,
                    Err(err) => {
                        env.pop();
                        return Err(err);
                    }
                };
                if r != universal {
                    result = r;
                    break;
                }
            }
            env.pop();
            result
        }
    })
}

fn eval_with<S: Structure>(s: &S, phi: &Formula, assignment: &HashMap<String, u64>) -> Result<bool, ModelError> {
    check_range(s, phi)?;
    for v in phi.free_vars() {
        if v.is_empty_const() {
            continue;
        }
        match assignment.get(&v.name) {
            Some(&x) if x < s.level_size(v.ty.unwrap_or(0))? => {}
            Some(_) => return Err(ModelError::BadInterpretation(format!("value of `{}` outside its level", v.name))),
            None => return Err(ModelError::FreeVariable(v.name.clone())),
        }
    }
    let mut env: Env = assignment.iter().map(|(k, v)| (k.clone(), *v)).collect();
    eval_rec(s, phi, &mut env)
}

// ---------------------------------------------------------------------------
// Default natural models of TST_n

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NaturalModel {
    base_size: u64,
    depth: usize,
    sizes: Vec<u64>,
    tags: Vec<String>,
}

impl NaturalModel {
    /// Default model with base atoms tagged `a0, a1, ...`.
    pub fn build_default(m: u64, n: usize, budget: u64) -> Result<Self, ModelError> {
        let tags = (0..m).map(|i| format!("a{i}")).collect();
        Self::build_tagged(tags, n, budget)
    }

    /// Default model over the given atom tags, enumerated in the given order.
    pub fn build_tagged(tags: Vec<String>, n: usize, budget: u64) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::BadInterpretation("depth must be at least 1".into()));
        }
        let m = tags.len() as u64;
        let mut sizes = vec![m];
        let mut total = m;
        let over = |needed: String| ModelError::BudgetExceeded { what: format!("model ({m}, {n})"), needed, budget };
        for i in 1..n {
            let prev = sizes[i - 1];
            let next = pow2(prev).ok_or_else(|| over(format!("2^{prev}")))?;
            total = total.checked_add(next).ok_or_else(|| over("more than 2^64".into()))?;
            if total > budget {
                return Err(over(total.to_string()));
            }
            sizes.push(next);
        }
        if total > budget {
            return Err(over(total.to_string()));
        }
        Ok(NaturalModel { base_size: m, depth: n, sizes, tags })
    }

    pub fn base_size(&self) -> u64 {
        self.base_size
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level_sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    /// Literal membership of level-`i` element `x` in level-`i+1` element `y`.
    pub fn contains(&self, x: u64, y: u64) -> bool {
        x < 64 && (y >> x) & 1 == 1
    }

    pub fn eval(&self, phi: &Sentence) -> Result<bool, ModelError> {
        eval_with(self, phi.formula(), &HashMap::new())
    }

    /// Evaluates a formula whose free variables are given values.
    pub fn eval_formula(&self, phi: &Formula, assignment: &HashMap<String, u64>) -> Result<bool, ModelError> {
        eval_with(self, phi, assignment)
    }
}

impl Structure for NaturalModel {
    fn mode(&self) -> Mode {
        Mode::Tst
    }

    fn levels(&self) -> usize {
        self.depth
    }

    fn level_size(&self, ty: i64) -> Result<u64, ModelError> {
        Ok(self.sizes[ty as usize])
    }

    fn member(&self, tx: i64, x: u64, ty: i64, y: u64) -> bool {
        ty == tx + 1 && self.contains(x, y)
    }
}

/// Level-wise bijection between two models of equal base size and depth,
/// lifted from `base` (a permutation of level 0; `None` means identity).
/// Entry `[i][x]` is the image of level-`i` element `x`.
pub fn iso_models(a: &NaturalModel, b: &NaturalModel, base: Option<&[u64]>) -> Result<Vec<Vec<u64>>, ModelError> {
    if a.base_size != b.base_size || a.depth != b.depth {
        return Err(ModelError::SizeMismatch(format!(
            "({}, {}) vs ({}, {})",
            a.base_size, a.depth, b.base_size, b.depth
        )));
    }
    let m = a.base_size as usize;
    let level0: Vec<u64> = match base {
        Some(p) => {
            let mut seen = vec![false; m];
            if p.len() != m || p.iter().any(|&x| x as usize >= m || std::mem::replace(&mut seen[x as usize], true)) {
                return Err(ModelError::SizeMismatch("base map is not a permutation".into()));
            }
            p.to_vec()
        }
        None => (0..m as u64).collect(),
    };
    let mut maps = vec![level0];
    for i in 1..a.depth {
        let prev = &maps[i - 1];
        let lifted = (0..a.sizes[i])
            .map(|y| {
                let mut img = 0u64;
                for (x, &px) in prev.iter().enumerate() {
                    if (y >> x) & 1 == 1 {
                        img |= 1 << px;
                    }
                }
                img
            })
            .collect();
        maps.push(lifted);
    }
    Ok(maps)
}

// ---------------------------------------------------------------------------
// TSTU families

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TstuFamily {
    sizes: Vec<u64>,
    budget: u64,
}

impl TstuFamily {
    pub fn build(sizes: Vec<u64>, budget: u64) -> Result<Self, ModelError> {
        for i in 0..sizes.len() {
            for j in (i + 1)..sizes.len() {
                if pow2(sizes[i]).is_none_or(|p| sizes[j] < p) {
                    return Err(ModelError::SizeConstraintViolated { i, j });
                }
            }
        }
        Ok(TstuFamily { sizes, budget })
    }

    pub fn lambda_fin(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Image of subset `z` of level `i` in level `j`.
    pub fn inject(&self, i: usize, j: usize, z: u64) -> Option<u64> {
        debug_assert!(i < j);
        if pow2(self.sizes[i]).is_some_and(|p| z >= p) {
            return None;
        }
        Some(z)
    }

    /// `x` (level `i`) belongs to `y` (level `j`, `i < j`) through `f_{i,j}`.
    pub fn member(&self, i: usize, x: u64, j: usize, y: u64) -> bool {
        debug_assert!(i < j);
        let in_range = pow2(self.sizes[i]).is_none_or(|p| y < p);
        in_range && x < 64 && (y >> x) & 1 == 1
    }

    fn level(&self, idx: usize) -> Result<u64, ModelError> {
        let size = self.sizes[idx];
        if size > self.budget {
            return Err(ModelError::BudgetExceeded {
                what: format!("quantifier over level {idx}"),
                needed: size.to_string(),
                budget: self.budget,
            });
        }
        Ok(size)
    }
}

/// A family read along a strictly increasing index sequence.
#[derive(Clone, Debug, Serialize)]
pub struct Interpretation<'a> {
    pub family: &'a TstuFamily,
    pub s: Vec<usize>,
}

impl<'a> Interpretation<'a> {
    pub fn new(family: &'a TstuFamily, s: Vec<usize>) -> Result<Self, ModelError> {
        if s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::BadInterpretation("s is not strictly increasing".into()));
        }
        if s.last().is_some_and(|&l| l >= family.lambda_fin()) {
            return Err(ModelError::BadInterpretation("s leaves the family".into()));
        }
        Ok(Interpretation { family, s })
    }
}

impl Structure for Interpretation<'_> {
    fn mode(&self) -> Mode {
        Mode::Tstu
    }

    fn levels(&self) -> usize {
        self.s.len()
    }

    fn level_size(&self, ty: i64) -> Result<u64, ModelError> {
        self.family.level(self.s[ty as usize])
    }

    fn member(&self, tx: i64, x: u64, ty: i64, y: u64) -> bool {
        ty == tx + 1 && self.family.member(self.s[tx as usize], x, self.s[ty as usize], y)
    }
}

/// Evaluates a TSTU sentence: type `i` ranges over level `s_i`.
pub fn eval_tstu(interp: &Interpretation, phi: &Sentence) -> Result<bool, ModelError> {
    eval_with(interp, phi.formula(), &HashMap::new())
}

/// The family read directly as a tangled structure: type `t` is level `t`
/// and membership between any increasing pair of levels goes through the
/// canonical injection.
struct TangledView<'a>(&'a TstuFamily);

impl Structure for TangledView<'_> {
    fn mode(&self) -> Mode {
        Mode::Ttt
    }

    fn levels(&self) -> usize {
        self.0.lambda_fin()
    }

    fn level_size(&self, ty: i64) -> Result<u64, ModelError> {
        self.0.level(ty as usize)
    }

    fn member(&self, tx: i64, x: u64, ty: i64, y: u64) -> bool {
        tx < ty && self.0.member(tx as usize, x, ty as usize, y)
    }
}

/// Evaluates `phi^s` in the tangled view of the family.
pub fn eval_ttt(family: &TstuFamily, phi: &Sentence, s: &[usize]) -> Result<bool, ModelError> {
    let seq: Vec<i64> = s.iter().map(|&x| x as i64).collect();
    let translated = translate_s(phi.formula(), &seq)?;
    eval_with(&TangledView(family), &translated, &HashMap::new())
}

// ---------------------------------------------------------------------------
// Axioms

/// Extensionality at type `i + 1`.
pub fn extensionality(i: i64) -> Sentence {
    let x = Var::typed("x", i + 1);
    let y = Var::typed("y", i + 1);
    let z = Var::typed("z", i);
    let same = Formula::forall(
        z.clone(),
        Formula::iff(Formula::member(z.clone(), x.clone()), Formula::member(z, y.clone())),
    );
    let body = Formula::implies(same, Formula::eq(x.clone(), y.clone()));
    Sentence::new(Formula::forall(x, Formula::forall(y, body)), Mode::Tst).expect("closed")
}

/// Weak extensionality at type `i + 1`: objects with an element are equal
/// exactly when they have the same elements.
pub fn weak_extensionality(i: i64) -> Sentence {
    let x = Var::typed("x", i + 1);
    let y = Var::typed("y", i + 1);
    let z = Var::typed("z", i);
    let w = Var::typed("w", i);
    let same = Formula::forall(
        w.clone(),
        Formula::iff(Formula::member(w.clone(), x.clone()), Formula::member(w, y.clone())),
    );
    let body = Formula::implies(
        Formula::member(z.clone(), x.clone()),
        Formula::iff(Formula::eq(x.clone(), y.clone()), same),
    );
    let f = Formula::forall(x, Formula::forall(y, Formula::forall(z, body)));
    Sentence::new(f, Mode::Tstu).expect("closed")
}

/// `forall w^i. ~(w in empty^{i+1})`.
pub fn empty_axiom(i: i64) -> Sentence {
    let w = Var::typed("w", i);
    let f = Formula::forall(w.clone(), Formula::not(Formula::member(w, Var::typed(crate::formula::EMPTY, i + 1))));
    Sentence::new(f, Mode::Tstu).expect("closed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::gen::{comprehension_family, sentence_family};

    fn sentence(text: &str, mode: Mode) -> Sentence {
        Sentence::new(parse(text).unwrap(), mode).unwrap()
    }

    #[test]
    fn level_sizes() {
        assert_eq!(NaturalModel::build_default(1, 3, DEFAULT_BUDGET).unwrap().level_sizes(), &[1, 2, 4]);
        assert_eq!(NaturalModel::build_default(0, 2, DEFAULT_BUDGET).unwrap().level_sizes(), &[0, 1]);
        assert_eq!(NaturalModel::build_default(2, 4, DEFAULT_BUDGET).unwrap().level_sizes(), &[2, 4, 16, 65536]);
        assert!(matches!(
            NaturalModel::build_default(2, 5, DEFAULT_BUDGET),
            Err(ModelError::BudgetExceeded { .. })
        ));
        assert!(matches!(NaturalModel::build_default(3, 4, 100), Err(ModelError::BudgetExceeded { .. })));
    }

    #[test]
    fn evaluates_basic_sentences() {
        let m1 = NaturalModel::build_default(1, 2, DEFAULT_BUDGET).unwrap();
        assert!(m1.eval(&sentence("exists x^1 exists y^1. ~(x=y)", Mode::Tst)).unwrap());
        let m0 = NaturalModel::build_default(0, 1, DEFAULT_BUDGET).unwrap();
        assert!(!m0.eval(&sentence("exists x^0. x=x", Mode::Tst)).unwrap());
        let s = sentence("exists x^2 forall y^1. y in x", Mode::Tst);
        let m2 = NaturalModel::build_default(2, 3, DEFAULT_BUDGET).unwrap();
        assert!(m2.eval(&s).unwrap());
        let shallow = NaturalModel::build_default(2, 2, DEFAULT_BUDGET).unwrap();
        assert!(matches!(shallow.eval(&s), Err(ModelError::TypeOutOfRange { .. })));
        assert!(matches!(m2.eval(&sentence("exists x^0. x in x", Mode::Tst)), Err(ModelError::NotWellTyped(_))));
    }

    // Oracle: sets as explicit sorted vectors of sub-elements, built without
    // any bit tricks.
    fn explicit_levels(m: usize, depth: usize) -> Vec<Vec<Vec<usize>>> {
        let mut levels: Vec<Vec<Vec<usize>>> = vec![(0..m).map(|i| vec![i]).collect()];
        for _ in 1..depth {
            let prev = levels.last().unwrap().len();
            let mut subsets: Vec<Vec<usize>> = vec![vec![]];
            for e in 0..prev {
                let extended: Vec<Vec<usize>> = subsets
                    .iter()
                    .map(|s| {
                        let mut t = s.clone();
                        t.push(e);
                        t
                    })
                    .collect();
                subsets.extend(extended);
            }
            levels.push(subsets);
        }
        levels
    }

    #[test]
    fn membership_matches_explicit_power_sets() {
        let m = NaturalModel::build_default(2, 3, DEFAULT_BUDGET).unwrap();
        let ex = explicit_levels(2, 3);
        for lvl in 1..3 {
            assert_eq!(ex[lvl].len() as u64, m.level_sizes()[lvl]);
            for (y_idx, members) in ex[lvl].iter().enumerate() {
                // find the encoding of this subset
                let code: u64 = members.iter().map(|&x| 1u64 << x).sum();
                for x in 0..ex[lvl - 1].len() {
                    assert_eq!(m.contains(x as u64, code), members.contains(&x), "level {lvl} set {y_idx}");
                }
            }
        }
    }

    #[test]
    fn extensionality_and_comprehension_small() {
        for base in 0..=2 {
            for depth in 1..=3 {
                let m = NaturalModel::build_default(base, depth, DEFAULT_BUDGET).unwrap();
                for i in 0..depth as i64 - 1 {
                    assert!(m.eval(&extensionality(i)).unwrap(), "base {base} depth {depth} type {i}");
                }
            }
        }
        let m = NaturalModel::build_default(1, 3, DEFAULT_BUDGET).unwrap();
        for s in comprehension_family(3, 1) {
            assert!(m.eval(&s).unwrap(), "{s}");
        }
    }

    #[test]
    fn iso_preserves_membership() {
        let a = NaturalModel::build_tagged(vec!["p".into(), "q".into()], 3, DEFAULT_BUDGET).unwrap();
        let b = NaturalModel::build_tagged(vec!["u".into(), "v".into()], 3, DEFAULT_BUDGET).unwrap();
        let id = iso_models(&a, &b, None).unwrap();
        for (lvl, map) in id.iter().enumerate() {
            assert!(map.iter().enumerate().all(|(x, &y)| x as u64 == y), "level {lvl}");
        }
        let swap = iso_models(&a, &b, Some(&[1, 0])).unwrap();
        assert_eq!(swap.iter().map(Vec::len).sum::<usize>(), 2 + 4 + 16);
        for lvl in 1..3 {
            let mut image: Vec<u64> = swap[lvl].clone();
            image.sort();
            assert_eq!(image, (0..a.level_sizes()[lvl]).collect::<Vec<_>>());
            for x in 0..a.level_sizes()[lvl - 1] {
                for y in 0..a.level_sizes()[lvl] {
                    assert_eq!(a.contains(x, y), b.contains(swap[lvl - 1][x as usize], swap[lvl][y as usize]));
                }
            }
        }
        let c = NaturalModel::build_default(3, 2, DEFAULT_BUDGET).unwrap();
        assert!(matches!(iso_models(&a, &c, None), Err(ModelError::SizeMismatch(_))));
    }

    #[test]
    fn theory_depends_on_base_size_only() {
        let a = NaturalModel::build_tagged(vec!["p".into()], 3, DEFAULT_BUDGET).unwrap();
        let b = NaturalModel::build_tagged(vec!["z".into()], 3, DEFAULT_BUDGET).unwrap();
        for s in sentence_family(3) {
            assert_eq!(a.eval(&s).unwrap(), b.eval(&s).unwrap(), "{s}");
        }
    }

    #[test]
    fn tstu_family_constraints() {
        assert_eq!(TstuFamily::build(vec![1, 2, 4, 16, 65536], DEFAULT_BUDGET).unwrap().lambda_fin(), 5);
        assert_eq!(
            TstuFamily::build(vec![2, 3], DEFAULT_BUDGET),
            Err(ModelError::SizeConstraintViolated { i: 0, j: 1 })
        );
        assert!(TstuFamily::build(vec![0, 1, 2, 4, 16], DEFAULT_BUDGET).is_ok());
        assert!(TstuFamily::build(vec![64, 100], DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn tstu_atoms_and_empty() {
        let fam = TstuFamily::build(vec![1, 2, 4], DEFAULT_BUDGET).unwrap();
        // s = (0, 2): level 2 has 4 elements, only 0 and 1 are in the range of f_{0,2}
        let interp = Interpretation::new(&fam, vec![0, 2]).unwrap();
        let phi = parse("exists w^0. w in y^1").unwrap();
        let mut env = HashMap::new();
        env.insert("y".to_string(), 3u64);
        assert!(!eval_with(&interp, &phi, &env).unwrap());
        env.insert("y".to_string(), 1u64);
        assert!(eval_with(&interp, &phi, &env).unwrap());
        assert!(eval_tstu(&interp, &empty_axiom(0)).unwrap());
        assert!(eval_tstu(&interp, &sentence("exists y^1. forall w^0. ~(w in y) & ~(y = empty^1)", Mode::Tstu)).unwrap());
    }

    #[test]
    fn weak_extensionality_everywhere() {
        let fam = TstuFamily::build(vec![1, 2, 4], DEFAULT_BUDGET).unwrap();
        for a in 0..3 {
            for b in (a + 1)..3 {
                let interp = Interpretation::new(&fam, vec![a, b]).unwrap();
                assert!(eval_tstu(&interp, &weak_extensionality(0)).unwrap());
                assert!(eval_tstu(&interp, &empty_axiom(0)).unwrap());
            }
        }
        let interp = Interpretation::new(&fam, vec![0, 1, 2]).unwrap();
        assert!(eval_tstu(&interp, &weak_extensionality(1)).unwrap());
        // full extensionality fails once atoms are present
        let with_atoms = Interpretation::new(&fam, vec![0, 2]).unwrap();
        let ext = Sentence::new(extensionality(0).into_formula(), Mode::Tstu).unwrap();
        assert!(!eval_tstu(&with_atoms, &ext).unwrap());
    }

    #[test]
    fn budget_on_quantified_levels() {
        let fam = TstuFamily::build(vec![1, 2, 4, 16, 65536], 1000).unwrap();
        let interp = Interpretation::new(&fam, vec![4]).unwrap();
        let s = sentence("exists x^0. x = x", Mode::Tstu);
        assert!(matches!(eval_tstu(&interp, &s), Err(ModelError::BudgetExceeded { .. })));
        let ok = Interpretation::new(&fam, vec![3]).unwrap();
        assert!(eval_tstu(&ok, &s).unwrap());
    }

    #[test]
    fn tangled_view_matches_interpretation() {
        let fam = TstuFamily::build(vec![1, 2, 4, 16], DEFAULT_BUDGET).unwrap();
        let sigma = [
            sentence("exists x^0 exists y^0. ~(x=y)", Mode::Tst),
            sentence("forall x^1. exists y^0. y in x", Mode::Tst),
            sentence("exists x^1. forall y^0. y in x", Mode::Tst),
        ];
        for s in &sigma {
            for a in 0..4 {
                for b in (a + 1)..4 {
                    let interp = Interpretation::new(&fam, vec![a, b]).unwrap();
                    let tstu = Sentence::new(s.formula().clone(), Mode::Tstu).unwrap();
                    assert_eq!(eval_tstu(&interp, &tstu).unwrap(), eval_ttt(&fam, s, &[a, b]).unwrap());
                }
            }
        }
    }
}
