//! Finite fragments of tangled webs: maps from nonempty index sets to
//! natural-number cardinals, the naturality and elementarity conditions, the
//! partition argument run on a fragment, and the exhaustive sweep showing no
//! small fragment meets both conditions.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ambiguity::{combinations, find_homogeneous, AmbiguityError, AmbiguityWitness, Coloring, Verdict};
use crate::formula::{raise, Formula, Mode, Sentence, Var};
use crate::natmodel::{ModelError, NaturalModel, DEFAULT_BUDGET};

pub type Index = Vec<usize>;

#[derive(Debug, Error, Clone)]
pub enum WebError {
    #[error("index {0:?} is needed but has no value")]
    MissingIndex(Index),
    #[error("bad fragment: {0}")]
    BadFragment(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ambiguity(#[from] AmbiguityError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WebFragment {
    pub lambda_fin: usize,
    pub tau: BTreeMap<Index, u64>,
}

/// `A` without its smallest element.
pub fn drop_min(a: &[usize]) -> Index {
    a[1..].to_vec()
}

/// The `n` smallest elements of `a`.
pub fn head(a: &[usize], n: usize) -> Index {
    a[..n.min(a.len())].to_vec()
}

impl WebFragment {
    pub fn new(lambda_fin: usize, entries: impl IntoIterator<Item = (Index, u64)>) -> Result<Self, WebError> {
        let mut tau = BTreeMap::new();
        for (mut k, v) in entries {
            k.sort_unstable();
            k.dedup();
            if k.is_empty() {
                return Err(WebError::BadFragment("empty index".into()));
            }
            if k.iter().any(|&i| i >= lambda_fin) {
                return Err(WebError::BadFragment(format!("index {k:?} exceeds lambda {lambda_fin}")));
            }
            tau.insert(k, v);
        }
        Ok(WebFragment { lambda_fin, tau })
    }

    /// Parses `{"[1,2]": 2, ...}`. The index count is one more than the
    /// largest index mentioned unless `lambda_fin` is given.
    pub fn from_json(text: &str, lambda_fin: Option<usize>) -> Result<Self, WebError> {
        let raw: BTreeMap<String, u64> =
            serde_json::from_str(text).map_err(|e| WebError::BadFragment(e.to_string()))?;
        let mut entries = Vec::new();
        for (k, v) in raw {
            let idx: Index = serde_json::from_str(&k).map_err(|e| WebError::BadFragment(format!("key {k}: {e}")))?;
            entries.push((idx, v));
        }
        let lambda = lambda_fin.unwrap_or_else(|| entries.iter().flat_map(|(k, _)| k.iter().copied()).max().map_or(0, |m| m + 1));
        Self::new(lambda, entries)
    }

    pub fn get(&self, a: &[usize]) -> Result<u64, WebError> {
        self.tau.get(a).copied().ok_or_else(|| WebError::MissingIndex(a.to_vec()))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NaturalityReport {
    /// Pairs `(A, A_1)` with `2^tau(A) != tau(A_1)`.
    pub violations: Vec<(Index, Index)>,
    /// Pairs whose `A_1` has no value.
    pub missing: Vec<(Index, Index)>,
}

impl NaturalityReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

fn exp2_eq(a: u64, b: u64) -> bool {
    a < 64 && (1u64 << a) == b
}

pub fn check_naturality(w: &WebFragment) -> NaturalityReport {
    let mut r = NaturalityReport::default();
    for (a, &v) in &w.tau {
        if a.len() < 2 {
            continue;
        }
        let a1 = drop_min(a);
        match w.tau.get(&a1) {
            None => r.missing.push((a.clone(), a1)),
            Some(&u) if !exp2_eq(v, u) => r.violations.push((a.clone(), a1)),
            Some(_) => {}
        }
    }
    r
}

/// What distinguishes two base sizes.
#[derive(Clone, Debug)]
pub enum Fingerprint {
    /// Truth values of these sentences in the depth-`n` model.
    Sentences(Vec<Sentence>),
    /// Truth values of "there are at least `k` type-0 objects" for
    /// `k = 1..=cap`, computed as `m >= k`.
    Cardinality { cap: u64 },
}

impl Fingerprint {
    pub fn describe(&self) -> String {
        match self {
            Fingerprint::Sentences(s) => format!("{} sentences", s.len()),
            Fingerprint::Cardinality { cap } => format!("cardinality up to {cap}"),
        }
    }
}

/// "There are at least `k` distinct objects of type 0."
pub fn at_least(k: usize) -> Sentence {
    let vars: Vec<Var> = (0..k).map(|i| Var::typed(format!("x{i}"), 0)).collect();
    let mut body: Option<Formula> = None;
    for i in 0..k {
        for j in (i + 1)..k {
            let d = Formula::not(Formula::eq(vars[i].clone(), vars[j].clone()));
            body = Some(match body {
                None => d,
                Some(b) => Formula::and(b, d),
            });
        }
    }
    let mut f = body.unwrap_or_else(|| Formula::eq(Var::typed("x0", 0), Var::typed("x0", 0)));
    if k == 0 {
        f = Formula::forall(Var::typed("x0", 0), f);
    }
    for v in vars.into_iter().rev() {
        f = Formula::exists(v, f);
    }
    Sentence::new(f, Mode::Tst).expect("closed")
}

/// Memoized fingerprints of depth-`n` models by base size.
struct Printer<'a> {
    fp: &'a Fingerprint,
    n: usize,
    budget: u64,
    cache: HashMap<u64, Vec<bool>>,
}

impl<'a> Printer<'a> {
    fn new(fp: &'a Fingerprint, n: usize, budget: u64) -> Self {
        Printer { fp, n, budget, cache: HashMap::new() }
    }

    fn get(&mut self, m: u64) -> Result<Vec<bool>, WebError> {
        if let Some(v) = self.cache.get(&m) {
            return Ok(v.clone());
        }
        let v = fingerprint_of(self.fp, self.n, m, self.budget)?;
        self.cache.insert(m, v.clone());
        Ok(v)
    }
}

fn fingerprint_of(fp: &Fingerprint, n: usize, m: u64, budget: u64) -> Result<Vec<bool>, WebError> {
    Ok(match fp {
        Fingerprint::Cardinality { cap } => (1..=*cap).map(|k| m >= k).collect(),
        Fingerprint::Sentences(sigma) => {
            let model = NaturalModel::build_default(m, n, budget)?;
            sigma.iter().map(|s| model.eval(s)).collect::<Result<_, _>>()?
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ElementarityViolation {
    pub a: Index,
    pub b: Index,
    pub tau_a: u64,
    pub tau_b: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ElementarityReport {
    pub n: usize,
    pub fingerprint: String,
    pub violations: Vec<ElementarityViolation>,
}

/// Compares every pair `A < B` with `|A|, |B| > n` and the same `n` smallest
/// elements. Each violation is confirmed again on freshly built models.
pub fn check_elementarity(w: &WebFragment, n: usize, fp: &Fingerprint) -> Result<ElementarityReport, WebError> {
    check_elementarity_with_budget(w, n, fp, DEFAULT_BUDGET)
}

pub fn check_elementarity_with_budget(
    w: &WebFragment,
    n: usize,
    fp: &Fingerprint,
    budget: u64,
) -> Result<ElementarityReport, WebError> {
    let mut printer = Printer::new(fp, n, budget);
    let big: Vec<(&Index, u64)> = w.tau.iter().filter(|(a, _)| a.len() > n).map(|(a, &v)| (a, v)).collect();
    let mut violations = Vec::new();
    for (i, &(a, ta)) in big.iter().enumerate() {
        for &(b, tb) in &big[i + 1..] {
            if head(a, n) != head(b, n) || ta == tb {
                continue;
            }
            if printer.get(ta)? != printer.get(tb)? {
                let again_a = fingerprint_of(fp, n, ta, budget)?;
                let again_b = fingerprint_of(fp, n, tb, budget)?;
                assert_ne!(again_a, again_b, "elementarity violation did not reproduce");
                violations.push(ElementarityViolation { a: a.clone(), b: b.clone(), tau_a: ta, tau_b: tb });
            }
        }
    }
    Ok(ElementarityReport { n, fingerprint: fp.describe(), violations })
}

fn max_type(sigma: &[Sentence]) -> usize {
    sigma.iter().filter_map(|s| s.formula().max_type()).max().unwrap_or(0).max(0) as usize
}

/// Colors the `n`-subsets `A` of `0..lambda-1` by the truth values of `sigma`
/// in the depth-`n` model over `tau(A + {max(A)+1})`, takes a homogeneous set
/// `H` of size `n + 2`, and evaluates each sentence and its raised copy in
/// the depth-`n+1` model over `tau(H)`.
pub fn web_ambiguity(w: &WebFragment, sigma: &[Sentence]) -> Result<AmbiguityWitness, WebError> {
    let n = max_type(sigma) + 1;
    if w.lambda_fin < 1 {
        return Err(WebError::BadFragment("no indices".into()));
    }
    let usable = w.lambda_fin - 1;
    let subsets = combinations(usable, n);
    let sizes: Vec<u64> = subsets
        .iter()
        .map(|a| {
            let mut padded = a.clone();
            padded.push(a[n - 1] + 1);
            w.get(&padded)
        })
        .collect::<Result<_, _>>()?;
    let colors: Vec<u64> = sizes
        .par_iter()
        .map(|&m| {
            let model = NaturalModel::build_default(m, n, DEFAULT_BUDGET)?;
            let mut c = 0u64;
            for (i, s) in sigma.iter().enumerate() {
                c |= (model.eval(s)? as u64) << i;
            }
            Ok(c)
        })
        .collect::<Result<_, ModelError>>()?;
    let coloring = Coloring::from_table(usable, n, sigma.len(), colors)?;
    let classes = coloring.classes();
    let Some(h) = find_homogeneous(&coloring, n + 2) else {
        return Err(AmbiguityError::NoHomogeneousSet { k: n + 2, lambda_fin: usable, coloring: Box::new(coloring) }.into());
    };
    let base = w.get(&h)?;
    let model = NaturalModel::build_default(base, n + 1, DEFAULT_BUDGET)?;
    let mut verdicts = Vec::new();
    for phi in sigma {
        let value = model.eval(phi)?;
        let up = Sentence::new(raise(phi.formula()).map_err(AmbiguityError::from)?, Mode::Tst).expect("closed");
        let raised = model.eval(&up)?;
        if value != raised {
            return Err(AmbiguityError::AmbiguityFailed { sentence: phi.to_string(), s: h }.into());
        }
        verdicts.push(Verdict { sentence: phi.to_string(), value, raised });
    }
    Ok(AmbiguityWitness { s: h.clone(), h, verdicts, color_classes: classes })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub lambda_fin: usize,
    pub cap: u64,
    pub n: usize,
    pub fingerprint: String,
    pub pass_naturality: u64,
    pub pass_both: u64,
    /// First fragment (in enumeration order) passing naturality alone.
    pub example: Option<BTreeMap<String, u64>>,
}

/// Nonempty subsets of `0..lambda`, largest first, then lexicographic.
fn sweep_order(lambda: usize) -> Vec<Index> {
    let mut out = Vec::new();
    for size in (1..=lambda).rev() {
        out.extend(combinations(lambda, size));
    }
    out
}

/// Enumerates every total fragment on the nonempty subsets of `0..lambda`
/// with values in `0..=cap`. Sets are filled largest first so that
/// naturality forces `tau(A_1)` as soon as `tau(A)` is chosen.
pub fn impossibility_sweep(lambda: usize, cap: u64, n: usize, fp: &Fingerprint) -> Result<SweepReport, WebError> {
    sweep_impl(lambda, cap, n, fp, false)
}

/// The same sweep with candidate values tried in descending order.
pub fn impossibility_sweep_reversed(lambda: usize, cap: u64, n: usize, fp: &Fingerprint) -> Result<SweepReport, WebError> {
    sweep_impl(lambda, cap, n, fp, true)
}

struct SweepCtx<'a> {
    order: &'a [Index],
    // for each position, positions of sets B with B_1 = order[pos]
    parents: Vec<Vec<usize>>,
    cap: u64,
    n: usize,
    prints: &'a [Vec<bool>],
    reversed: bool,
}

#[derive(Default)]
struct Tally {
    natural: u64,
    both: u64,
    example: Option<Vec<u64>>,
}

fn sweep_impl(lambda: usize, cap: u64, n: usize, fp: &Fingerprint, reversed: bool) -> Result<SweepReport, WebError> {
    if lambda == 0 || lambda > 5 {
        return Err(WebError::BadFragment("sweep supports 1 to 5 indices".into()));
    }
    let order = sweep_order(lambda);
    let pos: HashMap<&Index, usize> = order.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let mut parents = vec![Vec::new(); order.len()];
    for (i, b) in order.iter().enumerate() {
        if b.len() >= 2 {
            parents[pos[&drop_min(b)]].push(i);
        }
    }
    let prints: Vec<Vec<bool>> =
        (0..=cap).map(|m| fingerprint_of(fp, n, m, DEFAULT_BUDGET)).collect::<Result<_, _>>()?;
    let ctx = SweepCtx { order: &order, parents, cap, n, prints: &prints, reversed };
    let mut firsts: Vec<u64> = (0..=cap).collect();
    if reversed {
        firsts.reverse();
    }
    let tallies: Vec<Tally> = firsts
        .par_iter()
        .map(|&v0| {
            let mut vals = vec![0u64; order.len()];
            vals[0] = v0;
            let mut t = Tally::default();
            descend(&ctx, 1, &mut vals, &mut t);
            t
        })
        .collect();
    let mut natural = 0;
    let mut both = 0;
    let mut example = None;
    for t in tallies {
        natural += t.natural;
        both += t.both;
        if example.is_none() {
            example = t.example;
        }
    }
    let example = example.map(|vals: Vec<u64>| {
        order.iter().zip(vals).map(|(a, v)| (serde_json::to_string(a).expect("index list"), v)).collect()
    });
    Ok(SweepReport { lambda_fin: lambda, cap, n, fingerprint: fp.describe(), pass_naturality: natural, pass_both: both, example })
}

fn descend(ctx: &SweepCtx, i: usize, vals: &mut Vec<u64>, t: &mut Tally) {
    if i == ctx.order.len() {
        t.natural += 1;
        if t.example.is_none() {
            t.example = Some(vals.clone());
        }
        if elementary(ctx, vals) {
            t.both += 1;
        }
        return;
    }
    // every B with B_1 = order[i] is earlier in the order and forces 2^tau(B)
    let mut forced: Option<u64> = None;
    for &b in &ctx.parents[i] {
        let need = if vals[b] < 64 { 1u64 << vals[b] } else { u64::MAX };
        if need > ctx.cap || forced.is_some_and(|f| f != need) {
            return;
        }
        forced = Some(need);
    }
    match forced {
        Some(v) => {
            vals[i] = v;
            descend(ctx, i + 1, vals, t);
        }
        None => {
            for k in 0..=ctx.cap {
                vals[i] = if ctx.reversed { ctx.cap - k } else { k };
                descend(ctx, i + 1, vals, t);
            }
        }
    }
}

fn elementary(ctx: &SweepCtx, vals: &[u64]) -> bool {
    let mut seen: HashMap<Index, &Vec<bool>> = HashMap::new();
    for (a, &v) in ctx.order.iter().zip(vals) {
        if a.len() <= ctx.n {
            continue;
        }
        let p = &ctx.prints[v as usize];
        match seen.get(&head(a, ctx.n)) {
            Some(q) if *q != p => return false,
            Some(_) => {}
            None => {
                seen.insert(head(a, ctx.n), p);
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn tst(text: &str) -> Sentence {
        Sentence::new(parse(text).unwrap(), Mode::Tst).unwrap()
    }

    pub(crate) fn seven_index_fragment() -> WebFragment {
        WebFragment::new(
            3,
            [
                (vec![0, 1, 2], 1),
                (vec![1, 2], 2),
                (vec![0, 1], 1),
                (vec![0, 2], 2),
                (vec![1], 2),
                (vec![2], 4),
                (vec![0], 1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn naturality_examples() {
        let w = seven_index_fragment();
        // arithmetic oracle
        for (a, &v) in &w.tau {
            if a.len() >= 2 {
                assert_eq!(2u64.pow(v as u32), w.tau[&a[1..].to_vec()]);
            }
        }
        assert!(check_naturality(&w).passes());
        let bad = WebFragment::new(2, [(vec![0, 1], 2), (vec![1], 3)]).unwrap();
        assert_eq!(check_naturality(&bad).violations, vec![(vec![0, 1], vec![1])]);
        let singles = WebFragment::new(3, [(vec![0], 5), (vec![2], 0)]).unwrap();
        assert_eq!(check_naturality(&singles), NaturalityReport::default());
        let partial = WebFragment::new(3, [(vec![0, 2], 1)]).unwrap();
        let r = check_naturality(&partial);
        assert!(r.passes());
        assert_eq!(r.missing, vec![(vec![0, 2], vec![2])]);
        let huge = WebFragment::new(2, [(vec![0, 1], 70), (vec![1], 0)]).unwrap();
        assert!(!check_naturality(&huge).passes());
    }

    #[test]
    fn json_round_trip() {
        let w = WebFragment::from_json(r#"{"[1,2]": 2, "[2]": 4, "[0]": 1}"#, None).unwrap();
        assert_eq!(w.lambda_fin, 3);
        assert_eq!(w.tau[&vec![1, 2]], 2);
        assert!(WebFragment::from_json(r#"{"[]": 2}"#, None).is_err());
        assert!(WebFragment::from_json(r#"{"x": 2}"#, None).is_err());
    }

    #[test]
    fn elementarity_examples() {
        let w = seven_index_fragment();
        let sigma = Fingerprint::Sentences(vec![tst("exists x^0 exists y^0. ~(x=y)")]);
        let r = check_elementarity(&w, 1, &sigma).unwrap();
        assert!(r.violations.iter().any(|v| v.a == vec![0, 1] && v.b == vec![0, 2]));
        for v in &r.violations {
            assert_eq!(v.a[0], v.b[0]);
        }
        let valid = Fingerprint::Sentences(vec![tst("forall x^0. x=x")]);
        assert!(check_elementarity(&w, 1, &valid).unwrap().violations.is_empty());
        let constant = WebFragment::new(3, [(vec![0, 1], 3), (vec![0, 2], 3), (vec![0, 1, 2], 3), (vec![1, 2], 7)]).unwrap();
        let card = Fingerprint::Cardinality { cap: 16 };
        assert!(check_elementarity(&constant, 1, &card).unwrap().violations.is_empty());
    }

    #[test]
    fn cardinality_fingerprint_matches_evaluation() {
        let sentences: Vec<Sentence> = (1..=5).map(at_least).collect();
        let by_eval = Fingerprint::Sentences(sentences);
        let closed = Fingerprint::Cardinality { cap: 5 };
        for m in 0..=6 {
            assert_eq!(
                fingerprint_of(&by_eval, 1, m, DEFAULT_BUDGET).unwrap(),
                fingerprint_of(&closed, 1, m, DEFAULT_BUDGET).unwrap(),
                "base {m}"
            );
        }
    }

    /// tau depends on (max A, |A|) only: the largest sets get `base`, and each
    /// removal of the minimum exponentiates.
    fn tower_fragment(lambda: usize, base: u64) -> WebFragment {
        let mut entries = Vec::new();
        for size in 1..=lambda {
            for a in combinations(lambda, size) {
                let max = a[a.len() - 1];
                let steps = max + 1 - a.len();
                let mut v = base;
                for _ in 0..steps {
                    v = 1u64 << v;
                }
                entries.push((a, v));
            }
        }
        WebFragment::new(lambda, entries).unwrap()
    }

    #[test]
    fn ambiguity_from_a_web() {
        let w = tower_fragment(4, 2);
        assert!(check_naturality(&w).passes());
        let sigma = [tst("exists x^0 exists y^0. ~(x=y)")];
        let wit = web_ambiguity(&w, &sigma).unwrap();
        assert_eq!(wit.h.len(), 3);
        assert!(wit.verdicts.iter().all(|v| v.value && v.raised));
        let insensitive = [tst("forall x^0. x = x")];
        assert!(web_ambiguity(&w, &insensitive).unwrap().verdicts.iter().all(|v| v.value && v.raised));
    }

    #[test]
    fn alternating_web_has_no_homogeneous_set() {
        let sigma = [tst("exists x^0 exists y^0. ~(x=y)")];
        // colors follow the parity of min(A)
        let mut entries = Vec::new();
        for a in 0..4 {
            entries.push((vec![a, a + 1], if a % 2 == 0 { 1 } else { 2 }));
        }
        let w = WebFragment::new(5, entries).unwrap();
        assert!(matches!(
            web_ambiguity(&w, &sigma),
            Err(WebError::Ambiguity(AmbiguityError::NoHomogeneousSet { .. }))
        ));
        let small = WebFragment::new(3, [(vec![0, 1], 1), (vec![1, 2], 2)]).unwrap();
        assert!(matches!(
            web_ambiguity(&small, &sigma),
            Err(WebError::Ambiguity(AmbiguityError::NoHomogeneousSet { .. }))
        ));
        let missing = WebFragment::new(3, [(vec![0, 1], 1)]).unwrap();
        assert!(matches!(web_ambiguity(&missing, &sigma), Err(WebError::MissingIndex(_))));
    }

    #[test]
    fn sweep_counts() {
        let card = Fingerprint::Cardinality { cap: 16 };
        let r = impossibility_sweep(3, 16, 1, &card).unwrap();
        // tau({0,1,2}) in 0..=2, tau({0,1}) in 0..=4, tau({0}) free
        assert_eq!(r.pass_naturality, 3 * 5 * 17);
        assert_eq!(r.pass_both, 0);
        let rev = impossibility_sweep_reversed(3, 16, 1, &card).unwrap();
        assert_eq!((rev.pass_naturality, rev.pass_both), (r.pass_naturality, r.pass_both));
        assert_eq!(impossibility_sweep(3, 1, 1, &Fingerprint::Cardinality { cap: 1 }).unwrap().pass_naturality, 0);
        let valid = Fingerprint::Sentences(vec![tst("forall x^0. x = x")]);
        let v = impossibility_sweep(3, 16, 1, &valid).unwrap();
        assert_eq!(v.pass_both, v.pass_naturality);
    }

    // Independent oracle: plain nested loops over all (cap+1)^7 fragments.
    #[test]
    fn sweep_matches_naive_enumeration() {
        let cap = 4u64;
        let sets = sweep_order(3);
        let mut natural = 0;
        let mut both = 0;
        let total = (cap + 1).pow(7);
        for code in 0..total {
            let mut c = code;
            let vals: Vec<u64> = (0..7)
                .map(|_| {
                    let v = c % (cap + 1);
                    c /= cap + 1;
                    v
                })
                .collect();
            let w = WebFragment::new(3, sets.iter().cloned().zip(vals.iter().copied())).unwrap();
            if check_naturality(&w).passes() {
                natural += 1;
                let fp = Fingerprint::Cardinality { cap };
                if check_elementarity(&w, 1, &fp).unwrap().violations.is_empty() {
                    both += 1;
                }
            }
        }
        let r = impossibility_sweep(3, cap, 1, &Fingerprint::Cardinality { cap }).unwrap();
        assert_eq!((r.pass_naturality, r.pass_both), (natural, both));
    }
}
