//! Formula generators: seeded random formulas and the fixed finite families
//! used by exhaustive semantic checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formula::{comprehension_instance, Formula, Mode, Sentence, Var};

/// Settings for [`random_formula`].
#[derive(Clone, Debug)]
pub struct RandomSpec {
    pub max_depth: usize,
    /// Names are drawn from `v0..v{names-1}`.
    pub names: usize,
    /// When set, each name gets one fixed type in `0..=max_type`.
    pub max_type: Option<i64>,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec { max_depth: 6, names: 6, max_type: None }
    }
}

/// `count` random normalized formulas from a ChaCha8 stream seeded by `seed`.
pub fn random_formulas(seed: u64, count: usize, spec: &RandomSpec) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_formula(&mut rng, spec)).collect()
}

pub fn random_formula<R: Rng>(rng: &mut R, spec: &RandomSpec) -> Formula {
    let types: Vec<Option<i64>> = (0..spec.names)
        .map(|_| spec.max_type.map(|m| rng.gen_range(0..=m)))
        .collect();
    let depth = rng.gen_range(0..=spec.max_depth);
    grow(rng, depth, spec.names.max(1), &types).normalize()
}

fn grow<R: Rng>(rng: &mut R, depth: usize, names: usize, types: &[Option<i64>]) -> Formula {
    let var = |rng: &mut R| {
        let i = rng.gen_range(0..names);
        Var { name: format!("v{i}"), ty: types.get(i).copied().flatten() }
    };
    if depth == 0 {
        let (x, y) = (var(rng), var(rng));
        return if rng.gen_bool(0.6) { Formula::member(x, y) } else { Formula::eq(x, y) };
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 => Formula::not(grow(rng, d, names, types)),
        1 => Formula::and(grow(rng, d, names, types), grow(rng, d, names, types)),
        2 => Formula::or(grow(rng, d, names, types), grow(rng, d, names, types)),
        3 => Formula::implies(grow(rng, d, names, types), grow(rng, d, names, types)),
        4 => Formula::iff(grow(rng, d, names, types), grow(rng, d, names, types)),
        5 => Formula::forall(var(rng), grow(rng, d, names, types)),
        _ => Formula::exists(var(rng), grow(rng, d, names, types)),
    }
}

/// Every conjunction-shaped formula over `x, y, z` with one to four atoms,
/// taken as a non-decreasing sequence of the 18 possible atoms. Connectives
/// and quantifiers are rotated through the family so each shape appears.
pub fn small_family() -> Vec<Formula> {
    let names = ["x", "y", "z"];
    let mut atoms = Vec::new();
    for a in names {
        for b in names {
            atoms.push(Formula::member(Var::new(a), Var::new(b)));
            atoms.push(Formula::eq(Var::new(a), Var::new(b)));
        }
    }
    let mut out = Vec::new();
    let mut idx = Vec::new();
    for len in 1..=4 {
        idx.clear();
        idx.resize(len, 0usize);
        loop {
            let n = out.len();
            let mut f = atoms[idx[0]].clone();
            for (j, &i) in idx.iter().enumerate().skip(1) {
                let g = atoms[i].clone();
                f = match (n + j) % 4 {
                    0 => Formula::and(f, g),
                    1 => Formula::or(f, Formula::not(g)),
                    2 => Formula::implies(f, g),
                    _ => Formula::iff(f, g),
                };
            }
            f = match n % 3 {
                0 => f,
                1 => Formula::forall(Var::new("x"), f),
                _ => Formula::exists(Var::new("y"), Formula::forall(Var::new("z"), f)),
            };
            out.push(f.normalize());
            // next non-decreasing index tuple
            let mut k = len;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                if idx[k] + 1 < atoms.len() {
                    idx[k] += 1;
                    let v = idx[k];
                    for slot in idx.iter_mut().skip(k + 1) {
                        *slot = v;
                    }
                    break;
                }
                if k == 0 {
                    idx.clear();
                }
            }
            if idx.is_empty() {
                break;
            }
        }
    }
    out
}

fn typed_var(ty: i64, slot: usize) -> Var {
    let base = ["a", "b"][slot];
    Var::typed(format!("{base}{ty}"), ty)
}

/// Well-typed atoms among the given variables.
fn atoms_over(vars: &[Var]) -> Vec<Formula> {
    let mut out = Vec::new();
    for (i, u) in vars.iter().enumerate() {
        for (j, v) in vars.iter().enumerate() {
            let (tu, tv) = (u.ty.unwrap_or(0), v.ty.unwrap_or(0));
            if i < j && tu == tv && !u.is_empty_const() {
                out.push(Formula::eq(u.clone(), v.clone()));
            }
            if tu + 1 == tv && !u.is_empty_const() {
                out.push(Formula::member(u.clone(), v.clone()));
            }
        }
    }
    out
}

/// Matrices: each atom and its negation, plus `&` and `|` of two distinct
/// literals.
fn matrices(atoms: &[Formula]) -> Vec<Formula> {
    let mut lits = Vec::new();
    for a in atoms {
        lits.push(a.clone());
        lits.push(Formula::not(a.clone()));
    }
    let mut out = lits.clone();
    for i in 0..lits.len() {
        for j in (i + 1)..lits.len() {
            if i / 2 == j / 2 {
                continue;
            }
            out.push(Formula::and(lits[i].clone(), lits[j].clone()));
            out.push(Formula::or(lits[i].clone(), lits[j].clone()));
        }
    }
    out
}

/// The fixed sentence family: one or two quantifiers over types `< max_types`
/// (at most two variables per type) in front of a matrix of one or two
/// literals. Deterministic, no duplicates.
pub fn sentence_family(max_types: i64) -> Vec<Sentence> {
    let mut out = Vec::new();
    let mut push = |f: Formula| {
        let s = Sentence::new(f, Mode::Tst).expect("family sentences are closed");
        out.push(s);
    };
    for t in 0..max_types {
        let u = typed_var(t, 0);
        for m in matrices(&atoms_over(std::slice::from_ref(&u))) {
            push(Formula::forall(u.clone(), m.clone()));
            push(Formula::exists(u.clone(), m));
        }
        // x = x is the only atom on one variable; include it directly
        let refl = Formula::eq(u.clone(), u.clone());
        push(Formula::exists(u.clone(), refl.clone()));
        push(Formula::forall(u.clone(), Formula::not(refl)));
    }
    for t1 in 0..max_types {
        for t2 in 0..max_types {
            let u = typed_var(t1, 0);
            let v = typed_var(t2, if t1 == t2 { 1 } else { 0 });
            let atoms = atoms_over(&[u.clone(), v.clone()]);
            if atoms.is_empty() {
                continue;
            }
            for m in matrices(&atoms) {
                for q in 0..4 {
                    let inner = if q & 1 == 0 {
                        Formula::forall(v.clone(), m.clone())
                    } else {
                        Formula::exists(v.clone(), m.clone())
                    };
                    push(if q & 2 == 0 { Formula::forall(u.clone(), inner) } else { Formula::exists(u.clone(), inner) });
                }
            }
        }
    }
    out
}

/// Closed comprehension instances `forall p. exists A. forall x. (x in A <-> phi)`
/// for every `phi` built from `x`, an optional parameter `p`, and up to
/// `max_inner` inner quantified variables, within a model of the given depth.
/// Matrices use at most two literals.
pub fn comprehension_family(depth: i64, max_inner: usize) -> Vec<Sentence> {
    let mut out = Vec::new();
    for tx in 0..depth - 1 {
        let x = Var::typed("x", tx);
        let a = Var::typed("A", tx + 1);
        let mut param_choices: Vec<Option<Var>> = vec![None];
        param_choices.extend((0..depth).map(|t| Some(Var::typed("p", t))));
        for p in &param_choices {
            let mut inner_choices: Vec<Vec<Var>> = vec![vec![]];
            if max_inner >= 1 {
                for t in 0..depth {
                    inner_choices.push(vec![Var::typed("w", t)]);
                }
            }
            if max_inner >= 2 {
                for t1 in 0..depth {
                    for t2 in 0..depth {
                        inner_choices.push(vec![Var::typed("w", t1), Var::typed("u", t2)]);
                    }
                }
            }
            for inner in &inner_choices {
                let mut vars = vec![x.clone()];
                vars.extend(p.iter().cloned());
                vars.extend(inner.iter().cloned());
                let atoms = atoms_over(&vars);
                for m in matrices(&atoms) {
                    // keep phi relevant to x and to every inner variable
                    let names = m.names();
                    if !names.contains("x") || inner.iter().any(|w| !names.contains(&w.name)) {
                        continue;
                    }
                    for qmask in 0..(1usize << inner.len()) {
                        let mut phi = m.clone();
                        for (i, w) in inner.iter().enumerate().rev() {
                            phi = if qmask >> i & 1 == 0 {
                                Formula::forall(w.clone(), phi)
                            } else {
                                Formula::exists(w.clone(), phi)
                            };
                        }
                        let mut inst = comprehension_instance(&phi, &x, &a).expect("A is fresh");
                        if let Some(p) = p {
                            if !inst.names().contains("p") {
                                continue;
                            }
                            inst = Formula::forall(p.clone(), inst);
                        }
                        out.push(Sentence::new(inst, Mode::Tst).expect("closed"));
                    }
                }
            }
        }
    }
    out
}
