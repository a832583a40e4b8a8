//! Supports, the symmetric-subset census and the lemma checks built on it.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::search::{Constraints, Search};
use super::{apply_mask, bit, bits, substitution_extension, Clan, FmError, Perm, Universe};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SupportElem {
    Atom(usize),
    NearLitter(u64),
}

impl SupportElem {
    pub fn describe(&self, u: &Universe) -> String {
        match self {
            SupportElem::Atom(a) => u.name(*a).to_string(),
            SupportElem::NearLitter(m) => format!("{{{}}}", u.names_of(*m).join(",")),
        }
    }

    pub fn image(&self, rho: &[usize]) -> SupportElem {
        match self {
            SupportElem::Atom(a) => SupportElem::Atom(rho[*a]),
            SupportElem::NearLitter(m) => SupportElem::NearLitter(apply_mask(rho, *m)),
        }
    }

    fn fixed_by(&self, rho: &[usize]) -> bool {
        self.image(rho) == *self
    }
}

/// A small set of atoms and near-litters. The element order is kept, so the
/// same type carries strong supports.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SupportSet {
    pub elems: Vec<SupportElem>,
}

impl SupportSet {
    pub fn new(elems: Vec<SupportElem>) -> Self {
        SupportSet { elems }
    }

    pub fn atoms(&self) -> u64 {
        self.elems.iter().fold(0, |m, e| match e {
            SupportElem::Atom(a) => m | bit(*a),
            _ => m,
        })
    }

    pub fn near_litters(&self) -> Vec<u64> {
        self.elems
            .iter()
            .filter_map(|e| match e {
                SupportElem::NearLitter(m) => Some(*m),
                _ => None,
            })
            .collect()
    }

    /// Atoms plus the anomalies of every near-litter.
    pub fn cost(&self, u: &Universe) -> usize {
        self.elems
            .iter()
            .map(|e| match e {
                SupportElem::Atom(_) => 1,
                SupportElem::NearLitter(m) => match u.near_litter_core(*m) {
                    Some(l) => (u.litters[l].atoms ^ m).count_ones() as usize,
                    None => usize::MAX / 4,
                },
            })
            .sum()
    }

    pub fn validate(&self, u: &Universe) -> Result<(), FmError> {
        let s_max = u.params.s_max;
        if self.elems.len() >= s_max {
            return Err(FmError::InvalidSupport(format!("{} elements, need fewer than {s_max}", self.elems.len())));
        }
        let distinct: BTreeSet<&SupportElem> = self.elems.iter().collect();
        if distinct.len() != self.elems.len() {
            return Err(FmError::InvalidSupport("repeated element".into()));
        }
        for e in &self.elems {
            match e {
                SupportElem::Atom(a) if *a >= u.atom_count() => {
                    return Err(FmError::InvalidSupport(format!("atom {a} out of range")))
                }
                SupportElem::NearLitter(m) if u.near_litter_core(*m).is_none() => {
                    return Err(FmError::InvalidSupport(format!("{} is not a near-litter", e.describe(u))))
                }
                _ => {}
            }
        }
        let nls = self.near_litters();
        for (i, a) in nls.iter().enumerate() {
            if nls[i + 1..].iter().any(|b| a & b != 0) {
                return Err(FmError::InvalidSupport("near-litters overlap".into()));
            }
        }
        let cost = self.cost(u);
        if cost >= s_max {
            return Err(FmError::InvalidSupport(format!("atoms plus anomalies come to {cost}, need fewer than {s_max}")));
        }
        Ok(())
    }

    pub fn fixing(&self) -> Constraints {
        let mut c = Constraints::default();
        for e in &self.elems {
            match e {
                SupportElem::Atom(a) => c.pins.push((*a, *a)),
                SupportElem::NearLitter(m) => c.setwise.push((*m, *m)),
            }
        }
        c
    }

    /// Constraints sending each element to the element at the same position of `t`.
    pub fn mapping_to(&self, t: &SupportSet) -> Option<Constraints> {
        if self.elems.len() != t.elems.len() {
            return None;
        }
        let mut c = Constraints::default();
        for (a, b) in self.elems.iter().zip(&t.elems) {
            match (a, b) {
                (SupportElem::Atom(x), SupportElem::Atom(y)) => c.pins.push((*x, *y)),
                (SupportElem::NearLitter(n), SupportElem::NearLitter(m)) => c.setwise.push((*n, *m)),
                _ => return None,
            }
        }
        Some(c)
    }

    pub fn fixed_by(&self, rho: &[usize]) -> bool {
        self.elems.iter().all(|e| e.fixed_by(rho))
    }

    pub fn image(&self, rho: &[usize]) -> SupportSet {
        SupportSet { elems: self.elems.iter().map(|e| e.image(rho)).collect() }
    }

    pub fn describe(&self, u: &Universe) -> Vec<String> {
        self.elems.iter().map(|e| e.describe(u)).collect()
    }
}

/// Every valid support set built from first-clan atoms, parents and
/// first-clan near-litters, smallest first.
pub fn valid_support_sets(u: &Universe) -> Vec<SupportSet> {
    let s_max = u.params.s_max;
    let mut pool: Vec<SupportElem> = bits(u.core_mask()).map(SupportElem::Atom).collect();
    pool.extend(u.near_litters(Clan::Clan0).into_iter().map(SupportElem::NearLitter));
    let mut out = vec![SupportSet::default()];
    let mut frontier: Vec<(usize, SupportSet)> = vec![(0, SupportSet::default())];
    for _ in 1..s_max {
        let mut next = Vec::new();
        for (start, s) in &frontier {
            for (i, e) in pool.iter().enumerate().skip(*start) {
                let mut t = s.clone();
                t.elems.push(e.clone());
                if t.validate(u).is_ok() {
                    next.push((i + 1, t));
                }
            }
        }
        out.extend(next.iter().map(|(_, s)| s.clone()));
        frontier = next;
    }
    out
}

/// Target objects for supports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Obj {
    Atom(usize),
    AtomSet(u64),
    /// The union of the local cardinals of the listed litters.
    LocalCardinals(Vec<usize>),
    /// A set of atom sets.
    Family(Vec<u64>),
}

impl Obj {
    fn moved_by(&self, u: &Universe, rho: &[usize]) -> bool {
        match self {
            Obj::Atom(a) => rho[*a] != *a,
            Obj::AtomSet(x) => apply_mask(rho, *x) != *x,
            Obj::LocalCardinals(ls) => {
                let p = parents_of(u, ls);
                apply_mask(rho, p) != p
            }
            Obj::Family(f) => {
                let set: BTreeSet<u64> = f.iter().copied().collect();
                f.iter().any(|m| !set.contains(&apply_mask(rho, *m)))
            }
        }
    }
}

fn parents_of(u: &Universe, litters: &[usize]) -> u64 {
    litters.iter().fold(0, |m, &l| m | bit(u.litters[l].parent))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SupportVerdict {
    Supported,
    Refuted { witness: Perm, method: String },
}

impl SupportVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, SupportVerdict::Supported)
    }
}

/// Decides whether every allowable permutation fixing `s` elementwise also
/// fixes `x`. Swap extensions are tried first; the exact search then settles
/// the remaining cases.
pub fn is_support(u: &Universe, s: &SupportSet, x: &Obj, budget: u64) -> Result<SupportVerdict, FmError> {
    s.validate(u)?;
    let core = u.core_mask();
    for a in bits(core) {
        for b in bits(core & !((bit(a) << 1) - 1)) {
            if u.clan_of[a] != u.clan_of[b] {
                continue;
            }
            if let Ok(rho) = substitution_extension(u, &[(a, b), (b, a)]) {
                if s.fixed_by(&rho) && x.moved_by(u, &rho) {
                    return Ok(SupportVerdict::Refuted { witness: rho, method: "swap extension".into() });
                }
            }
        }
    }
    let mut search = Search::new(u, budget);
    let fixing = s.fixing();
    let Some(dom) = search.root_domains(&fixing)? else {
        return Ok(SupportVerdict::Supported);
    };
    let exact = |rho: Perm| SupportVerdict::Refuted { witness: rho, method: "exact search".into() };
    let pin_pairs = |search: &mut Search, set: u64| -> Result<Option<Perm>, FmError> {
        if set & !core != 0 {
            return Err(FmError::Unsupported("targets must lie in the first clan and its parents".into()));
        }
        for a in bits(set) {
            for b in bits(dom[a] & !set) {
                if let Some(rho) = search.find(&fixing.clone().pin(a, b))? {
                    return Ok(Some(rho));
                }
            }
        }
        Ok(None)
    };
    let found = match x {
        Obj::Atom(a) => pin_pairs(&mut search, bit(*a))?,
        Obj::AtomSet(m) => pin_pairs(&mut search, *m)?,
        Obj::LocalCardinals(ls) => pin_pairs(&mut search, parents_of(u, ls))?,
        Obj::Family(_) => {
            let mut hit = None;
            search.for_each(&fixing, &mut |rho| {
                if x.moved_by(u, rho) {
                    hit = Some(rho.clone());
                    false
                } else {
                    true
                }
            })?;
            hit
        }
    };
    Ok(found.map_or(SupportVerdict::Supported, exact))
}

fn find_root(uf: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while uf[r] != r {
        r = uf[r];
    }
    let mut y = x;
    while uf[y] != r {
        let next = uf[y];
        uf[y] = r;
        y = next;
    }
    r
}

/// Classes of the equivalence on the atoms of `clan_mask` generated by
/// `a ~ rho(a)` over allowable `rho` fixing `s`. A set of these atoms is
/// supported by `s` exactly when it is a union of classes.
pub fn blocks(search: &mut Search, u: &Universe, s: &SupportSet, clan_mask: u64) -> Result<Vec<u64>, FmError> {
    let fixing = s.fixing();
    let dom = search.root_domains(&fixing)?.expect("the identity fixes every support");
    let mut uf: Vec<usize> = (0..u.atom_count()).collect();
    let atoms: Vec<usize> = bits(clan_mask).collect();
    for (i, &a) in atoms.iter().enumerate() {
        for &b in &atoms[i + 1..] {
            if find_root(&mut uf, a) == find_root(&mut uf, b) || dom[a] & bit(b) == 0 {
                continue;
            }
            if let Some(rho) = search.find(&fixing.clone().pin(a, b))? {
                for &x in &atoms {
                    let (rx, ry) = (find_root(&mut uf, x), find_root(&mut uf, rho[x]));
                    uf[rx] = ry;
                }
            }
        }
    }
    let mut classes: BTreeMap<usize, u64> = BTreeMap::new();
    for &a in &atoms {
        let r = find_root(&mut uf, a);
        *classes.entry(r).or_default() |= bit(a);
    }
    let mut out: Vec<u64> = classes.into_values().collect();
    out.sort_unstable();
    Ok(out)
}

fn unions(blocks: &[u64]) -> impl Iterator<Item = u64> + '_ {
    (0u64..(1 << blocks.len())).map(move |sel| bits(sel).fold(0, |m, i| m | blocks[i]))
}

/// Blocks of every valid support set, in the order of `valid_support_sets`.
fn all_blocks(u: &Universe, clan_mask: u64, budget: u64) -> Result<Vec<(SupportSet, Vec<u64>)>, FmError> {
    valid_support_sets(u)
        .into_par_iter()
        .map_init(|| Search::new(u, budget), |search, s| {
            let b = blocks(search, u, &s, clan_mask)?;
            Ok((s, b))
        })
        .collect()
}

/// Whether `x` lies within `s_max - 1` of a union of litters of `clan`, or of
/// the complement of one.
pub fn near_union_of_litters(u: &Universe, clan: Clan, x: u64) -> bool {
    let cm = u.clan_mask(clan);
    let ls: Vec<u64> = u.litters_of(clan).map(|(_, l)| l.atoms).collect();
    let near = unions(&ls).any(|un| {
        ((x ^ un).count_ones() as usize) < u.params.s_max || ((x ^ (cm & !un)).count_ones() as usize) < u.params.s_max
    });
    near
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusReport {
    pub clan: Clan,
    pub subsets: usize,
    pub symmetric: usize,
    pub near_union: usize,
    pub support_sets_examined: usize,
    /// Subsets on which symmetry and nearness to a union of litters disagree.
    pub biconditional_failures: Vec<Vec<String>>,
    /// First support found for each symmetric subset.
    #[serde(skip)]
    pub supports: BTreeMap<u64, SupportSet>,
}

impl CensusReport {
    pub fn is_symmetric(&self, x: u64) -> bool {
        self.supports.contains_key(&x)
    }
}

pub fn symmetric_census(u: &Universe, clan: Clan, budget: u64) -> Result<CensusReport, FmError> {
    let cm = u.clan_mask(clan);
    if cm & !u.core_mask() != 0 {
        return Err(FmError::Unsupported("census runs on the first clan or its parents".into()));
    }
    if cm.count_ones() > 14 {
        return Err(FmError::Unsupported("census needs a clan of at most 14 atoms".into()));
    }
    let all = all_blocks(u, cm, budget)?;
    let mut supports: BTreeMap<u64, SupportSet> = BTreeMap::new();
    for (s, b) in &all {
        for x in unions(b) {
            supports.entry(x).or_insert_with(|| s.clone());
        }
    }
    let has_litters = u.litters_of(clan).next().is_some();
    let mut near = 0;
    let mut failures = Vec::new();
    let subsets = super::submasks_up_to(cm, 64);
    for &x in &subsets {
        if has_litters {
            let n = near_union_of_litters(u, clan, x);
            near += n as usize;
            if n != supports.contains_key(&x) {
                failures.push(u.names_of(x));
            }
        }
    }
    Ok(CensusReport {
        clan,
        subsets: subsets.len(),
        symmetric: supports.len(),
        near_union: near,
        support_sets_examined: all.len(),
        biconditional_failures: failures,
        supports,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaViolation {
    pub set: Vec<String>,
    pub support: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub pairs_checked: usize,
    pub violations: Vec<LemmaViolation>,
}

/// Writes `x` as `P Δ U` or `P Δ (clan minus U)` with `P` a set of atoms of
/// `s` and `U` a union of near-litters of `s`.
pub fn decompose(u: &Universe, clan: Clan, s: &SupportSet, x: u64) -> Option<(u64, Vec<u64>, bool)> {
    let cm = u.clan_mask(clan);
    let atoms = s.atoms() & cm;
    let nls: Vec<u64> = s.near_litters().into_iter().filter(|m| m & cm != 0).collect();
    for sel in 0u64..(1 << nls.len()) {
        let chosen: Vec<u64> = bits(sel).map(|i| nls[i]).collect();
        let un = chosen.iter().fold(0, |a, b| a | b);
        for (target, complement) in [(un, false), (cm & !un, true)] {
            let p = x ^ target;
            if p & !atoms == 0 {
                return Some((p, chosen, complement));
            }
        }
    }
    None
}

/// Checks the decomposition on every pair of a valid support set and a
/// subset it supports.
pub fn clan_subset_support_lemma_check(u: &Universe, clan: Clan, budget: u64) -> Result<LemmaReport, FmError> {
    let cm = u.clan_mask(clan);
    let all = all_blocks(u, cm, budget)?;
    let mut pairs = 0;
    let mut violations = Vec::new();
    for (s, b) in &all {
        for x in unions(b) {
            pairs += 1;
            if decompose(u, clan, s, x).is_none() {
                violations.push(LemmaViolation { set: u.names_of(x), support: s.describe(u) });
            }
        }
    }
    Ok(LemmaReport { pairs_checked: pairs, violations })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionFailure {
    pub input: Vec<(String, String)>,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionReport {
    pub inputs: usize,
    pub allowable: usize,
    pub exceptions_within_domain: usize,
    pub failures: Vec<ExtensionFailure>,
}

/// Runs the substitution extension on the empty map and on every swap of
/// two atoms of one clan, checking allowability and exceptions of each output.
pub fn extension_lemma_check(u: &Universe) -> ExtensionReport {
    let n = u.atom_count();
    let mut inputs: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for a in 0..n {
        for b in a + 1..n {
            if u.clan_of[a] == u.clan_of[b] {
                inputs.push(vec![(a, b), (b, a)]);
            }
        }
    }
    let results: Vec<(bool, bool, Option<String>)> = inputs
        .par_iter()
        .map(|rho0| match substitution_extension(u, rho0) {
            Ok(rho) => {
                let dom = rho0.iter().fold(0u64, |m, &(a, _)| m | bit(a));
                let extends = rho0.iter().all(|&(a, b)| rho[a] == b);
                match super::is_allowable(u, &rho) {
                    Ok(a) => {
                        let within = a.exceptions.iter().all(|&x| dom & bit(x) != 0);
                        let err = (!a.allowable || !within || !extends).then(|| "output check failed".to_string());
                        (a.allowable, within, err)
                    }
                    Err(e) => (false, false, Some(e.to_string())),
                }
            }
            Err(e) => (false, false, Some(e.to_string())),
        })
        .collect();
    let mut report = ExtensionReport { inputs: inputs.len(), allowable: 0, exceptions_within_domain: 0, failures: Vec::new() };
    for (rho0, (ok, within, err)) in inputs.iter().zip(results) {
        report.allowable += ok as usize;
        report.exceptions_within_domain += within as usize;
        if let Some(error) = err {
            report.failures.push(ExtensionFailure {
                input: rho0.iter().map(|&(a, b)| (u.name(a).to_string(), u.name(b).to_string())).collect(),
                error,
            });
        }
    }
    report
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectionFailure {
    pub input: Vec<String>,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectionReport {
    pub stage: usize,
    pub inputs: usize,
    pub symmetric_inputs: usize,
    pub distinct_images: usize,
    pub symmetric_images: usize,
    pub failures: Vec<InjectionFailure>,
}

/// Sends each symmetric set of parents to the union of the local cardinals
/// of the litters it parents, and checks that images are distinct and
/// supported by the support induced from the input's support.
pub fn parent_injection_check(u: &Universe, budget: u64) -> Result<InjectionReport, FmError> {
    let (parent_clan, litter_clan) = if u.stages == 1 { (Clan::Parents0, Clan::Clan0) } else { (Clan::Clan0, Clan::Clan1) };
    let census = symmetric_census(u, parent_clan, budget)?;
    let pm = u.clan_mask(parent_clan);
    let subsets = super::submasks_up_to(pm, 64);
    let checks: Vec<Result<Option<(u64, Vec<usize>, bool, SupportSet)>, FmError>> = subsets
        .par_iter()
        .map(|&x| {
            let Some(s) = census.supports.get(&x) else {
                return Ok(None);
            };
            let image: Vec<usize> = u
                .litters_of(litter_clan)
                .filter(|(_, l)| x & bit(l.parent) != 0)
                .map(|(i, _)| i)
                .collect();
            let induced = induced_support(u, s);
            let ok = is_support(u, &induced, &Obj::LocalCardinals(image.clone()), budget)?.holds();
            Ok(Some((x, image, ok, induced)))
        })
        .collect();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut report = InjectionReport {
        stage: u.stages,
        inputs: subsets.len(),
        symmetric_inputs: 0,
        distinct_images: 0,
        symmetric_images: 0,
        failures: Vec::new(),
    };
    for c in checks {
        let Some((x, image, ok, induced)) = c? else { continue };
        report.symmetric_inputs += 1;
        if !seen.insert(image) {
            report.failures.push(InjectionFailure { input: u.names_of(x), reason: "image repeated".into() });
        }
        if ok {
            report.symmetric_images += 1;
        } else {
            report.failures.push(InjectionFailure {
                input: u.names_of(x),
                reason: format!("image not supported by {:?}", induced.describe(u)),
            });
        }
    }
    report.distinct_images = seen.len();
    Ok(report)
}

/// Replaces each irregular parent in `s` by its litter, unless a near-litter
/// of that litter is already present.
fn induced_support(u: &Universe, s: &SupportSet) -> SupportSet {
    let nls = s.near_litters();
    let mut elems = Vec::new();
    for e in &s.elems {
        match e {
            SupportElem::Atom(p) if u.clan_of[*p] == Clan::Parents0 => {
                let l = u.parented[*p].expect("irregular atoms parent litters");
                if !nls.iter().any(|&m| u.near_litter_core(m) == Some(l)) {
                    elems.push(SupportElem::NearLitter(u.litters[l].atoms));
                }
            }
            other => elems.push(other.clone()),
        }
    }
    SupportSet::new(elems)
}

#[cfg(test)]
mod tests {
    use super::super::{is_allowable, search::DEFAULT_NODE_BUDGET, FmParams};
    use super::*;

    fn u1() -> Universe {
        Universe::build(FmParams::default(), 1).unwrap()
    }

    fn lit(u: &Universe, l: usize) -> u64 {
        u.litters[l].atoms
    }

    #[test]
    fn support_examples() {
        let u = u1();
        let s = SupportSet::new(vec![SupportElem::Atom(5)]);
        assert!(is_support(&u, &s, &Obj::Atom(5), DEFAULT_NODE_BUDGET).unwrap().holds());
        let s = SupportSet::new(vec![SupportElem::NearLitter(lit(&u, 1))]);
        assert!(is_support(&u, &s, &Obj::Atom(13), DEFAULT_NODE_BUDGET).unwrap().holds());
        // two atoms of the first litter and one of the second
        let x = 0b1_0011;
        match is_support(&u, &SupportSet::default(), &Obj::AtomSet(x), DEFAULT_NODE_BUDGET).unwrap() {
            SupportVerdict::Refuted { witness, method } => {
                assert_eq!(method, "swap extension");
                assert!(is_allowable(&u, &witness).unwrap().allowable);
                assert_ne!(apply_mask(&witness, x), x);
            }
            v => panic!("{v:?}"),
        }
        assert!(is_support(&u, &SupportSet::default(), &Obj::AtomSet(u.clan_mask(Clan::Clan0)), DEFAULT_NODE_BUDGET)
            .unwrap()
            .holds());
        let bad = SupportSet::new(vec![SupportElem::Atom(0), SupportElem::Atom(1), SupportElem::Atom(2)]);
        assert!(matches!(is_support(&u, &bad, &Obj::Atom(0), 10), Err(FmError::InvalidSupport(_))));
    }

    #[test]
    fn family_targets() {
        let u = u1();
        // images of litters need only be near-litters, so the set of litters moves
        let all: Vec<u64> = (0..3).map(|l| lit(&u, l)).collect();
        assert!(!is_support(&u, &SupportSet::default(), &Obj::Family(all), 100_000_000).unwrap().holds());
        let whole = vec![u.clan_mask(Clan::Clan0), 0];
        assert!(is_support(&u, &SupportSet::default(), &Obj::Family(whole), 100_000_000).unwrap().holds());
        let one = vec![lit(&u, 0)];
        assert!(!is_support(&u, &SupportSet::default(), &Obj::Family(one.clone()), DEFAULT_NODE_BUDGET).unwrap().holds());
        let s = SupportSet::new(vec![SupportElem::NearLitter(lit(&u, 0))]);
        assert!(is_support(&u, &s, &Obj::Family(one), 100_000_000).unwrap().holds());
    }

    #[test]
    fn valid_sets_respect_cost() {
        let u = u1();
        let all = valid_support_sets(&u);
        assert!(all.iter().all(|s| s.validate(&u).is_ok()));
        assert_eq!(all[0], SupportSet::default());
        // two near-litters with two anomalies each are too expensive together
        let n1 = (lit(&u, 0) & !1) | bit(8);
        let n2 = (lit(&u, 1) & !bit(4)) | bit(9);
        let s = SupportSet::new(vec![SupportElem::NearLitter(n1), SupportElem::NearLitter(n2)]);
        assert!(s.validate(&u).is_err());
        assert!(!all.contains(&s));
    }

    #[test]
    fn blocks_examples() {
        let u = u1();
        let mut search = Search::new(&u, DEFAULT_NODE_BUDGET);
        let cm = u.clan_mask(Clan::Clan0);
        assert_eq!(blocks(&mut search, &u, &SupportSet::default(), cm).unwrap(), vec![cm]);
        let s = SupportSet::new(vec![SupportElem::NearLitter(lit(&u, 0)), SupportElem::Atom(4)]);
        let mut b = blocks(&mut search, &u, &s, cm).unwrap();
        b.sort_unstable();
        assert_eq!(b, vec![lit(&u, 0), bit(4), cm & !lit(&u, 0) & !bit(4)]);
    }

    #[test]
    fn census_examples() {
        let u = u1();
        let c = symmetric_census(&u, Clan::Clan0, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(c.subsets, 4096);
        assert!(c.biconditional_failures.is_empty(), "{:?}", c.biconditional_failures);
        assert!(c.is_symmetric(lit(&u, 1)));
        assert!(!c.is_symmetric(0b11_0011));
        let x = lit(&u, 1) | bit(8);
        assert!(c.is_symmetric(x));
        let s = SupportSet::new(vec![SupportElem::NearLitter(lit(&u, 1)), SupportElem::Atom(8)]);
        assert!(is_support(&u, &s, &Obj::AtomSet(x), DEFAULT_NODE_BUDGET).unwrap().holds());
        assert_eq!(decompose(&u, Clan::Clan0, &s, x), Some((bit(8), vec![lit(&u, 1)], false)));
        assert_eq!(decompose(&u, Clan::Clan0, &SupportSet::default(), 0), Some((0, vec![], false)));
        assert_eq!(decompose(&u, Clan::Clan0, &SupportSet::default(), u.clan_mask(Clan::Clan0)), Some((0, vec![], true)));
        let p = symmetric_census(&u, Clan::Parents0, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(p.symmetric, 8);
    }

    #[test]
    fn census_agrees_with_is_support_on_samples() {
        let u = u1();
        let c = symmetric_census(&u, Clan::Clan0, DEFAULT_NODE_BUDGET).unwrap();
        let sets = valid_support_sets(&u);
        for (i, s) in sets.iter().enumerate().step_by(97) {
            for x in [lit(&u, 0), 0b1_0011, lit(&u, 2) | 1, (i as u64 * 2654435761) & 0xfff] {
                let v = is_support(&u, s, &Obj::AtomSet(x), DEFAULT_NODE_BUDGET).unwrap();
                if v.holds() {
                    assert!(c.is_symmetric(x));
                }
                if let SupportVerdict::Refuted { witness, .. } = v {
                    assert!(s.fixed_by(&witness) && is_allowable(&u, &witness).unwrap().allowable);
                }
            }
        }
    }

    #[test]
    fn lemma_and_extension_and_injection() {
        let u = u1();
        let l = clan_subset_support_lemma_check(&u, Clan::Clan0, DEFAULT_NODE_BUDGET).unwrap();
        assert!(l.violations.is_empty());
        let e = extension_lemma_check(&u);
        assert_eq!(e.inputs, 1 + 66 + 3);
        assert!(e.failures.is_empty(), "{:?}", e.failures);
        let i = parent_injection_check(&u, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!((i.inputs, i.symmetric_inputs, i.distinct_images, i.symmetric_images), (8, 8, 8, 8));
        assert!(i.failures.is_empty());
    }

    #[test]
    fn stage_two_checks() {
        let u = Universe::build(FmParams::default(), 2).unwrap();
        let e = extension_lemma_check(&u);
        assert!(e.failures.is_empty(), "{:?}", &e.failures[..e.failures.len().min(3)]);
        let i = parent_injection_check(&u, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(i.inputs, 4096);
        assert_eq!(i.distinct_images, i.symmetric_inputs);
        assert_eq!(i.symmetric_images, i.symmetric_inputs);
    }

    #[test]
    fn support_closure_sampled() {
        let u = u1();
        let sets = valid_support_sets(&u);
        let perms: Vec<Perm> = [(0usize, 5usize), (12, 13), (3, 7), (1, 2)]
            .iter()
            .filter_map(|&(a, b)| {
                let mut search = Search::new(&u, DEFAULT_NODE_BUDGET);
                search.find(&Constraints::default().pin(a, b)).unwrap()
            })
            .collect();
        let (mut checked, mut skipped) = (0, 0);
        for s in sets.iter().step_by(5) {
            for x in [0b1111u64, 0b1_0000, 0xf0f, 0, 0xfff, 0b1_1111, 0xef0] {
                if !is_support(&u, s, &Obj::AtomSet(x), DEFAULT_NODE_BUDGET).unwrap().holds() {
                    continue;
                }
                for rho in &perms {
                    let t = s.image(rho);
                    if t.validate(&u).is_err() {
                        // an image near-litter can pick up too many anomalies
                        skipped += 1;
                        continue;
                    }
                    let y = apply_mask(rho, x);
                    assert!(is_support(&u, &t, &Obj::AtomSet(y), DEFAULT_NODE_BUDGET).unwrap().holds());
                    checked += 1;
                }
            }
        }
        assert!(checked > 50, "{checked} {skipped}");
    }
}
