//! Partition arguments at finite scale: color the `n`-element index sets by
//! the truth values of a finite set of sentences, look for a homogeneous
//! set, and read off interpretations in which each sentence agrees with its
//! raised copy.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::formula::{raise, translate_s, Mode, Sentence};
use crate::natmodel::{eval_tstu, eval_ttt, Interpretation, ModelError, TstuFamily};
use crate::stratify::check_typed;

#[derive(Debug, Error, Clone)]
pub enum AmbiguityError {
    #[error("no homogeneous set of size {k} among {lambda_fin} indices")]
    NoHomogeneousSet { k: usize, lambda_fin: usize, coloring: Box<Coloring> },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Formula(#[from] crate::formula::FormulaError),
    #[error("sentence `{sentence}` and its raised copy disagree under s = {s:?}")]
    AmbiguityFailed { sentence: String, s: Vec<usize> },
    #[error("truth values changed with the continuation of s beyond {0:?}")]
    ContinuationSensitive(Vec<usize>),
    #[error("{0}")]
    BadInput(String),
}

/// All `n`-element subsets of `0..lambda`, each ascending, in lexicographic order.
pub fn combinations(lambda: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n > lambda {
        return out;
    }
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < lambda - n + i {
                cur[i] += 1;
                for j in (i + 1)..n {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn mask(set: &[usize]) -> u64 {
    set.iter().fold(0u64, |m, &i| m | (1 << i))
}

/// A color for every `n`-subset of `0..lambda_fin`.
#[derive(Clone, Debug, Serialize)]
pub struct Coloring {
    pub lambda_fin: usize,
    pub n: usize,
    /// Number of meaningful bits per color.
    pub width: usize,
    pub subsets: Vec<Vec<usize>>,
    pub colors: Vec<u64>,
    #[serde(skip)]
    index: HashMap<u64, usize>,
}

impl Coloring {
    /// Builds a coloring from a table listed in lexicographic subset order.
    pub fn from_table(lambda_fin: usize, n: usize, width: usize, colors: Vec<u64>) -> Result<Self, AmbiguityError> {
        if lambda_fin > 64 {
            return Err(AmbiguityError::BadInput("at most 64 indices are supported".into()));
        }
        let subsets = combinations(lambda_fin, n);
        if subsets.len() != colors.len() {
            return Err(AmbiguityError::BadInput(format!(
                "expected {} colors for [{lambda_fin}]^{n}, got {}",
                subsets.len(),
                colors.len()
            )));
        }
        let index = subsets.iter().enumerate().map(|(i, s)| (mask(s), i)).collect();
        Ok(Coloring { lambda_fin, n, width, subsets, colors, index })
    }

    pub fn from_fn(lambda_fin: usize, n: usize, width: usize, f: impl Fn(&[usize]) -> u64) -> Result<Self, AmbiguityError> {
        let colors = combinations(lambda_fin, n).iter().map(|s| f(s)).collect();
        Self::from_table(lambda_fin, n, width, colors)
    }

    pub fn color_of(&self, subset: &[usize]) -> u64 {
        self.colors[self.index[&mask(subset)]]
    }

    /// Class sizes by color.
    pub fn classes(&self) -> BTreeMap<u64, usize> {
        let mut out = BTreeMap::new();
        for &c in &self.colors {
            *out.entry(c).or_insert(0) += 1;
        }
        out
    }

    /// True when every `n`-subset of `h` has the same color.
    pub fn is_homogeneous(&self, h: &[usize]) -> bool {
        let mut sorted = h.to_vec();
        sorted.sort_unstable();
        let mut color = None;
        for idx in combinations(sorted.len(), self.n) {
            let sub: Vec<usize> = idx.iter().map(|&i| sorted[i]).collect();
            let c = self.color_of(&sub);
            if *color.get_or_insert(c) != c {
                return false;
            }
        }
        true
    }
}

/// Searches for a `k`-element set all of whose `n`-subsets share one color.
/// Colors are tried by descending class size (ties by color value), and
/// candidate sets in lexicographic order, so the answer is deterministic.
/// The search is exhaustive: `None` means no such set exists.
pub fn find_homogeneous(coloring: &Coloring, k: usize) -> Option<Vec<usize>> {
    let lambda = coloring.lambda_fin;
    if k > lambda {
        return None;
    }
    if k <= coloring.n {
        return Some((0..k).collect());
    }
    let mut order: Vec<(u64, usize)> = coloring.classes().into_iter().collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut h = Vec::with_capacity(k);
    for (color, _) in order {
        if extend(coloring, color, k, 0, &mut h) {
            return Some(h);
        }
    }
    None
}

fn extend(c: &Coloring, color: u64, k: usize, from: usize, h: &mut Vec<usize>) -> bool {
    if h.len() == k {
        return true;
    }
    let need = k - h.len();
    for e in from..c.lambda_fin {
        if c.lambda_fin - e < need {
            break;
        }
        if fits(c, color, h, e) {
            h.push(e);
            if extend(c, color, k, e + 1, h) {
                return true;
            }
            h.pop();
        }
    }
    false
}

/// Every `n`-subset of `h + {e}` that contains `e` has `color`.
fn fits(c: &Coloring, color: u64, h: &[usize], e: usize) -> bool {
    if h.len() + 1 < c.n {
        return true;
    }
    let mut sub = Vec::with_capacity(c.n);
    for idx in combinations(h.len(), c.n - 1) {
        sub.clear();
        sub.extend(idx.iter().map(|&i| h[i]));
        sub.push(e);
        if c.color_of(&sub) != color {
            return false;
        }
    }
    true
}

fn max_type(sigma: &[Sentence]) -> Result<usize, AmbiguityError> {
    let mut m = 0i64;
    for s in sigma {
        match s.formula().max_type() {
            Some(t) if t >= 0 => m = m.max(t),
            Some(t) => return Err(AmbiguityError::BadInput(format!("negative type {t} in `{s}`"))),
            None => {}
        }
    }
    Ok(m as usize)
}

fn as_tstu(s: &Sentence) -> Sentence {
    Sentence::new(s.formula().clone(), Mode::Tstu).expect("already closed")
}

fn truth_vector(values: impl IntoIterator<Item = bool>) -> u64 {
    values.into_iter().enumerate().fold(0, |acc, (i, v)| acc | ((v as u64) << i))
}

fn vector_at(family: &TstuFamily, sigma: &[Sentence], s: Vec<usize>) -> Result<u64, AmbiguityError> {
    let interp = Interpretation::new(family, s)?;
    let mut vals = Vec::with_capacity(sigma.len());
    for phi in sigma {
        vals.push(eval_tstu(&interp, &as_tstu(phi))?);
    }
    Ok(truth_vector(vals))
}

/// Colors each `n`-subset `A` of the family's indices by the truth values of
/// `sigma` under `s = A` followed by the next index above `max(A)`. Sentences
/// of type `< n` never look past `A`; that is asserted on a sample by also
/// evaluating with the bare sequence `A`.
pub fn color_by_theory(family: &TstuFamily, sigma: &[Sentence], n: usize) -> Result<Coloring, AmbiguityError> {
    if sigma.len() > 64 {
        return Err(AmbiguityError::BadInput("at most 64 sentences per coloring".into()));
    }
    if n == 0 || max_type(sigma)? >= n {
        return Err(AmbiguityError::BadInput(format!("types in sigma must be below n = {n}")));
    }
    let lambda = family.lambda_fin();
    let subsets = combinations(lambda, n);
    let colors: Result<Vec<u64>, AmbiguityError> = subsets
        .par_iter()
        .map(|a| {
            let mut s = a.clone();
            let next = a[a.len() - 1] + 1;
            if next < lambda {
                s.push(next);
            }
            vector_at(family, sigma, s)
        })
        .collect();
    let colors = colors?;
    for (a, &c) in subsets.iter().zip(&colors).take(4) {
        if vector_at(family, sigma, a.clone())? != c {
            return Err(AmbiguityError::ContinuationSensitive(a.clone()));
        }
    }
    Coloring::from_table(lambda, n, sigma.len(), colors)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub sentence: String,
    pub value: bool,
    pub raised: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmbiguityWitness {
    pub h: Vec<usize>,
    pub s: Vec<usize>,
    pub verdicts: Vec<Verdict>,
    pub color_classes: BTreeMap<u64, usize>,
}

impl PartialEq for AmbiguityWitness {
    fn eq(&self, other: &Self) -> bool {
        self.h == other.h && self.s == other.s && self.verdicts == other.verdicts
    }
}

fn homogeneous(coloring: Coloring, k: usize) -> Result<Vec<usize>, AmbiguityError> {
    match find_homogeneous(&coloring, k) {
        Some(h) => {
            assert!(coloring.is_homogeneous(&h), "search returned a non-homogeneous set");
            Ok(h)
        }
        None => Err(AmbiguityError::NoHomogeneousSet { k, lambda_fin: coloring.lambda_fin, coloring: Box::new(coloring) }),
    }
}

/// Finds `H` of size `n + 1` (with `n` one more than the largest type in
/// `sigma`) and checks, by evaluating from scratch, that each sentence has
/// the same value under `s = H` as its raised copy.
pub fn jensen_witness(family: &TstuFamily, sigma: &[Sentence]) -> Result<AmbiguityWitness, AmbiguityError> {
    let n = max_type(sigma)? + 1;
    let coloring = color_by_theory(family, sigma, n)?;
    let classes = coloring.classes();
    let h = homogeneous(coloring, n + 1)?;
    let mut verdicts = Vec::new();
    for phi in sigma {
        let value = eval_tstu(&Interpretation::new(family, h.clone())?, &as_tstu(phi))?;
        let up = Sentence::new(raise(phi.formula())?, Mode::Tstu).expect("closed");
        let raised = eval_tstu(&Interpretation::new(family, h.clone())?, &up)?;
        if value != raised {
            return Err(AmbiguityError::AmbiguityFailed { sentence: phi.to_string(), s: h });
        }
        verdicts.push(Verdict { sentence: phi.to_string(), value, raised });
    }
    Ok(AmbiguityWitness { s: h.clone(), h, verdicts, color_classes: classes })
}

/// The same argument with the colored quantity being the value of `phi^s` in
/// the family read as a tangled structure.
pub fn ttt_transfer_demo(family: &TstuFamily, sigma: &[Sentence]) -> Result<AmbiguityWitness, AmbiguityError> {
    let n = max_type(sigma)? + 1;
    let lambda = family.lambda_fin();
    let subsets = combinations(lambda, n);
    let colors: Result<Vec<u64>, AmbiguityError> = subsets
        .par_iter()
        .map(|a| {
            let mut vals = Vec::with_capacity(sigma.len());
            for phi in sigma {
                vals.push(eval_ttt(family, phi, a)?);
            }
            Ok(truth_vector(vals))
        })
        .collect();
    let coloring = Coloring::from_table(lambda, n, sigma.len(), colors?)?;
    let classes = coloring.classes();
    let h = homogeneous(coloring, n + 1)?;
    for idx in combinations(h.len(), n) {
        let s: Vec<i64> = idx.iter().map(|&i| h[i] as i64).collect();
        for phi in sigma {
            let t = translate_s(phi.formula(), &s)?;
            assert!(check_typed(&t, Mode::Ttt).unwrap_or(false), "translation of `{phi}` is not tangled-typed");
        }
    }
    let mut verdicts = Vec::new();
    for phi in sigma {
        let value = eval_ttt(family, phi, &h[..n])?;
        let up = Sentence::new(raise(phi.formula())?, Mode::Tst).expect("closed");
        let raised = eval_ttt(family, &up, &h)?;
        if value != raised {
            return Err(AmbiguityError::AmbiguityFailed { sentence: phi.to_string(), s: h });
        }
        verdicts.push(Verdict { sentence: phi.to_string(), value, raised });
    }
    Ok(AmbiguityWitness { s: h.clone(), h, verdicts, color_classes: classes })
}

/// The pentagon coloring of pairs from `0..5`: sides get color 1, diagonals 0.
pub fn pentagon_coloring() -> Coloring {
    Coloring::from_fn(5, 2, 1, |p| {
        let d = (p[1] as i64 - p[0] as i64).rem_euclid(5);
        (d == 1 || d == 4) as u64
    })
    .expect("valid table")
}
