//! Strong supports, orbit specifications, mapping permutations between
//! supports, and coding functions.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::search::Search;
use super::support::{symmetric_census, valid_support_sets, SupportElem, SupportSet};
use super::{apply_mask, bit, bits, is_allowable, substitution_extension, Clan, FmError, Perm, Universe};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PositionKind {
    Atom,
    NearLitter,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PositionSpec {
    pub kind: PositionKind,
    pub clan: Clan,
    /// Position of the near-litter of the support containing this atom.
    pub containing: Option<usize>,
    /// Position of this near-litter's parent, when the parent is in the support.
    pub parent: Option<usize>,
    /// The parent is an irregular atom.
    pub irregular_parent: bool,
    /// Cardinality of the near-litter.
    pub size: Option<usize>,
}

fn position_of(s: &SupportSet, e: &SupportElem) -> Option<usize> {
    s.elems.iter().position(|x| x == e)
}

pub fn check_strong(u: &Universe, s: &SupportSet) -> Result<(), FmError> {
    s.validate(u)?;
    for (g, e) in s.elems.iter().enumerate() {
        match e {
            SupportElem::Atom(a) => {
                if let Some(pos) = s.elems.iter().position(|x| matches!(x, SupportElem::NearLitter(m) if m & bit(*a) != 0)) {
                    if pos > g {
                        return Err(FmError::NotStrong(format!("{} precedes its near-litter", u.name(*a))));
                    }
                }
            }
            SupportElem::NearLitter(m) => {
                let l = u.near_litter_core(*m).expect("validated");
                if let Some(pos) = position_of(s, &SupportElem::Atom(u.litters[l].parent)) {
                    if pos > g {
                        return Err(FmError::NotStrong(format!("{} precedes its parent", e.describe(u))));
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn orbit_spec(u: &Universe, s: &SupportSet) -> Result<Vec<PositionSpec>, FmError> {
    check_strong(u, s)?;
    Ok(s.elems
        .iter()
        .map(|e| match e {
            SupportElem::Atom(a) => PositionSpec {
                kind: PositionKind::Atom,
                clan: u.clan_of[*a],
                containing: s.elems.iter().position(|x| matches!(x, SupportElem::NearLitter(m) if m & bit(*a) != 0)),
                parent: None,
                irregular_parent: false,
                size: None,
            },
            SupportElem::NearLitter(m) => {
                let l = u.near_litter_core(*m).expect("validated");
                let p = u.litters[l].parent;
                PositionSpec {
                    kind: PositionKind::NearLitter,
                    clan: u.litters[l].clan,
                    containing: None,
                    parent: position_of(s, &SupportElem::Atom(p)),
                    irregular_parent: u.clan_of[p] == Clan::Parents0,
                    size: Some(m.count_ones() as usize),
                }
            }
        })
        .collect())
}

/// Every strong ordering of every valid support set with at most `max_len`
/// elements.
pub fn strong_sequences(u: &Universe, max_len: usize) -> Vec<SupportSet> {
    let mut out = Vec::new();
    for s in valid_support_sets(u) {
        if s.elems.len() > max_len {
            continue;
        }
        permutations(&s.elems, &mut |order| {
            let t = SupportSet::new(order.to_vec());
            if check_strong(u, &t).is_ok() {
                out.push(t);
            }
        });
    }
    out
}

fn permutations<T: Clone>(items: &[T], f: &mut dyn FnMut(&[T])) {
    fn go<T: Clone>(v: &mut Vec<T>, i: usize, f: &mut dyn FnMut(&[T])) {
        if i == v.len() {
            f(v);
            return;
        }
        for j in i..v.len() {
            v.swap(i, j);
            go(v, i + 1, f);
            v.swap(i, j);
        }
    }
    let mut v = items.to_vec();
    go(&mut v, 0, f);
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitMap {
    pub perm: Perm,
    /// "extension" when the accumulated bijection extended directly,
    /// "search" when the exact search supplied the permutation.
    pub method: String,
}

fn accumulate(u: &Universe, s: &SupportSet, t: &SupportSet) -> Option<Vec<(usize, usize)>> {
    let mut fwd: BTreeMap<usize, usize> = BTreeMap::new();
    let mut back: BTreeMap<usize, usize> = BTreeMap::new();
    let mut add = |a: usize, b: usize| -> bool {
        match (fwd.get(&a), back.get(&b)) {
            (Some(&x), _) if x != b => false,
            (_, Some(&y)) if y != a => false,
            _ => {
                fwd.insert(a, b);
                back.insert(b, a);
                true
            }
        }
    };
    for (x, y) in s.elems.iter().zip(&t.elems) {
        match (x, y) {
            (SupportElem::Atom(a), SupportElem::Atom(b)) => {
                if !add(*a, *b) {
                    return None;
                }
            }
            (SupportElem::NearLitter(n), SupportElem::NearLitter(m)) => {
                let ln = &u.litters[u.near_litter_core(*n)?];
                let lm = &u.litters[u.near_litter_core(*m)?];
                if !add(ln.parent, lm.parent) {
                    return None;
                }
                for (from, to) in [(n & !ln.atoms, m & !lm.atoms), (ln.atoms & !n, lm.atoms & !m)] {
                    if from.count_ones() != to.count_ones() {
                        return None;
                    }
                    for (a, b) in bits(from).zip(bits(to)) {
                        if !add(a, b) {
                            return None;
                        }
                    }
                }
            }
            _ => return None,
        }
    }
    // close the partial injection into a permutation of domain plus range
    let dom: u64 = fwd.keys().fold(0, |m, &a| m | bit(a));
    let ran: u64 = fwd.values().fold(0, |m, &b| m | bit(b));
    for clan in [Clan::Clan0, Clan::Parents0, Clan::Clan1] {
        let cm = u.clan_mask(clan);
        for (a, b) in bits(ran & !dom & cm).zip(bits(dom & !ran & cm)) {
            fwd.insert(a, b);
        }
    }
    Some(fwd.into_iter().collect())
}

/// A permutation sending each position of `s` to the same position of `t`,
/// or `None` when the orbit specifications differ.
pub fn same_orbit(u: &Universe, s: &SupportSet, t: &SupportSet, budget: u64) -> Result<Option<OrbitMap>, FmError> {
    if orbit_spec(u, s)? != orbit_spec(u, t)? {
        return Ok(None);
    }
    let verify = |rho: &Perm| s.image(rho) == *t && is_allowable(u, rho).map(|a| a.allowable).unwrap_or(false);
    if let Some(rho0) = accumulate(u, s, t) {
        if let Ok(rho) = substitution_extension(u, &rho0) {
            if verify(&rho) {
                return Ok(Some(OrbitMap { perm: rho, method: "extension".into() }));
            }
        }
    }
    let c = s.mapping_to(t).expect("equal specifications have matching kinds");
    match Search::new(u, budget).find(&c)? {
        Some(rho) if verify(&rho) => Ok(Some(OrbitMap { perm: rho, method: "search".into() })),
        Some(_) => Err(FmError::Unsupported("search returned an unverifiable permutation".into())),
        None => Ok(None),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitMismatch {
    pub s: Vec<String>,
    pub t: Vec<String>,
    pub specs_equal: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OrbitReport {
    pub sequences: usize,
    pub pairs: usize,
    pub equal_spec_pairs: usize,
    pub by_extension: usize,
    pub by_search: usize,
    pub mismatches: Vec<OrbitMismatch>,
}

/// Runs every unordered pair of strong sequences of equal length: equal
/// specifications must yield a verified permutation, and unequal ones must
/// admit no mapping permutation at all (exact search).
pub fn orbit_census(u: &Universe, max_len: usize, budget: u64) -> Result<OrbitReport, FmError> {
    let seqs = strong_sequences(u, max_len);
    let specs: Vec<Vec<PositionSpec>> = seqs.iter().map(|s| orbit_spec(u, s)).collect::<Result<_, _>>()?;
    let rows: Vec<Result<OrbitReport, FmError>> = (0..seqs.len())
        .into_par_iter()
        .map_init(
            || Search::new(u, budget),
            |search, i| {
                let mut r = OrbitReport::default();
                for j in i..seqs.len() {
                    if seqs[i].elems.len() != seqs[j].elems.len() {
                        continue;
                    }
                    r.pairs += 1;
                    let equal = specs[i] == specs[j];
                    let ok = if equal {
                        r.equal_spec_pairs += 1;
                        match same_orbit(u, &seqs[i], &seqs[j], budget)? {
                            Some(m) => {
                                if m.method == "extension" {
                                    r.by_extension += 1;
                                } else {
                                    r.by_search += 1;
                                }
                                true
                            }
                            None => false,
                        }
                    } else {
                        match seqs[i].mapping_to(&seqs[j]) {
                            None => true,
                            Some(c) => search.find(&c)?.is_none(),
                        }
                    };
                    if !ok {
                        r.mismatches.push(OrbitMismatch {
                            s: seqs[i].describe(u),
                            t: seqs[j].describe(u),
                            specs_equal: equal,
                        });
                    }
                }
                Ok(r)
            },
        )
        .collect();
    let mut total = OrbitReport { sequences: seqs.len(), ..OrbitReport::default() };
    for r in rows {
        let r = r?;
        total.pairs += r.pairs;
        total.equal_spec_pairs += r.equal_spec_pairs;
        total.by_extension += r.by_extension;
        total.by_search += r.by_search;
        total.mismatches.extend(r.mismatches);
    }
    Ok(total)
}

/// Orders a support strongly: parents, then near-litters, then atoms.
fn strong_order(u: &Universe, s: &SupportSet) -> SupportSet {
    let rank = |e: &SupportElem| match e {
        SupportElem::Atom(a) if u.clan_of[*a] == Clan::Parents0 => 0,
        SupportElem::NearLitter(_) => 1,
        SupportElem::Atom(_) => 2,
    };
    let mut elems = s.elems.clone();
    elems.sort_by_key(|e| (rank(e), e.clone()));
    SupportSet::new(elems)
}

#[derive(Clone, Debug, Serialize)]
pub struct CodingFailure {
    pub target: Vec<String>,
    pub support: Vec<String>,
    pub image_support: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CodingReport {
    pub level: usize,
    pub targets: usize,
    pub tabulated_entries: usize,
    pub distinct_functions: usize,
    pub single_valued_failures: Vec<CodingFailure>,
}

/// Tabulates the coding function of every symmetric target over the orbit of
/// its strongly ordered support and checks single-valuedness exhaustively.
/// Level 1 targets are symmetric subsets of the first clan; level 2 targets
/// are unions of local cardinals over symmetric sets of parents, encoded by
/// their parent sets.
pub fn coding_census(u: &Universe, level: usize, budget: u64) -> Result<CodingReport, FmError> {
    let (clan, parents_level) = match level {
        1 => (Clan::Clan0, false),
        2 => (Clan::Parents0, true),
        _ => return Err(FmError::InvalidParams("level must be 1 or 2".into())),
    };
    let census = symmetric_census(u, clan, budget)?;
    let max_len = u.params.s_max - 1;
    let seqs = strong_sequences(u, max_len);
    let mut by_spec: BTreeMap<Vec<PositionSpec>, Vec<usize>> = BTreeMap::new();
    for (i, s) in seqs.iter().enumerate() {
        by_spec.entry(orbit_spec(u, s)?).or_default().push(i);
    }
    let targets: Vec<(u64, SupportSet)> = census
        .supports
        .iter()
        .map(|(&x, s)| {
            let s = if parents_level { induced_litters(u, s) } else { s.clone() };
            (x, strong_order(u, &s))
        })
        .collect();
    let rows: Vec<Result<(Vec<(usize, u64)>, Option<CodingFailure>, Vec<PositionSpec>), FmError>> = targets
        .par_iter()
        .map_init(
            || Search::new(u, budget),
            |search, (x, s)| {
                let spec = orbit_spec(u, s)?;
                let mut table = Vec::new();
                let mut failure = None;
                for &j in &by_spec[&spec] {
                    let t = &seqs[j];
                    let Some(m) = same_orbit(u, s, t, budget)? else { continue };
                    let image = apply_mask(&m.perm, *x);
                    table.push((j, image));
                    let c = s.mapping_to(t).expect("same specification");
                    let Some(dom) = search.root_domains(&c)? else { continue };
                    'pairs: for a in bits(*x) {
                        for b in bits(dom[a] & !image) {
                            if search.find(&c.clone().pin(a, b))?.is_some() {
                                failure = Some(CodingFailure {
                                    target: u.names_of(*x),
                                    support: s.describe(u),
                                    image_support: t.describe(u),
                                });
                                break 'pairs;
                            }
                        }
                    }
                }
                Ok((table, failure, spec))
            },
        )
        .collect();
    let mut functions: BTreeSet<(Vec<PositionSpec>, Vec<(usize, u64)>)> = BTreeSet::new();
    let mut entries = 0;
    let mut failures = Vec::new();
    for r in rows {
        let (table, failure, spec) = r?;
        entries += table.len();
        failures.extend(failure);
        functions.insert((spec, table));
    }
    Ok(CodingReport {
        level,
        targets: targets.len(),
        tabulated_entries: entries,
        distinct_functions: functions.len(),
        single_valued_failures: failures,
    })
}

/// A support for a set of parents, rewritten with each irregular parent
/// replaced by the litter it parents.
fn induced_litters(u: &Universe, s: &SupportSet) -> SupportSet {
    let mut elems: Vec<SupportElem> = Vec::new();
    for e in &s.elems {
        let e = match e {
            SupportElem::Atom(p) if u.clan_of[*p] == Clan::Parents0 => {
                SupportElem::NearLitter(u.litters[u.parented[*p].expect("irregular atoms parent litters")].atoms)
            }
            other => other.clone(),
        };
        let l = match &e {
            SupportElem::NearLitter(m) => u.near_litter_core(*m),
            _ => None,
        };
        let clash = l.is_some()
            && elems.iter().any(|f| matches!(f, SupportElem::NearLitter(m) if u.near_litter_core(*m) == l));
        if !clash {
            elems.push(e);
        }
    }
    SupportSet::new(elems)
}

#[cfg(test)]
mod tests {
    use super::super::{search::DEFAULT_NODE_BUDGET, FmParams};
    use super::*;

    fn u1() -> Universe {
        Universe::build(FmParams::default(), 1).unwrap()
    }

    #[test]
    fn strong_order_conditions() {
        let u = u1();
        let l0 = u.litters[0].atoms;
        let ok = SupportSet::new(vec![SupportElem::NearLitter(l0), SupportElem::Atom(0)]);
        assert!(check_strong(&u, &ok).is_ok());
        let bad = SupportSet::new(vec![SupportElem::Atom(0), SupportElem::NearLitter(l0)]);
        assert!(matches!(check_strong(&u, &bad), Err(FmError::NotStrong(_))));
        let bad = SupportSet::new(vec![SupportElem::NearLitter(l0), SupportElem::Atom(12)]);
        assert!(matches!(check_strong(&u, &bad), Err(FmError::NotStrong(_))));
        let spec = orbit_spec(&u, &ok).unwrap();
        assert_eq!(spec[1].containing, Some(0));
        assert_eq!(spec[0].size, Some(4));
        assert!(spec[0].irregular_parent);
    }

    #[test]
    fn same_orbit_examples() {
        let u = u1();
        let s = SupportSet::new(vec![SupportElem::Atom(0)]);
        let m = same_orbit(&u, &s, &s, DEFAULT_NODE_BUDGET).unwrap().unwrap();
        assert_eq!(s.image(&m.perm), s);
        let t = SupportSet::new(vec![SupportElem::Atom(5)]);
        let m = same_orbit(&u, &s, &t, DEFAULT_NODE_BUDGET).unwrap().unwrap();
        assert_eq!(m.perm[0], 5);
        // (litter containing a, a) against (litter, b outside it)
        let l0 = u.litters[0].atoms;
        let s = SupportSet::new(vec![SupportElem::NearLitter(l0), SupportElem::Atom(0)]);
        let t = SupportSet::new(vec![SupportElem::NearLitter(l0), SupportElem::Atom(4)]);
        assert!(same_orbit(&u, &s, &t, DEFAULT_NODE_BUDGET).unwrap().is_none());
        assert!(Search::new(&u, DEFAULT_NODE_BUDGET).find(&s.mapping_to(&t).unwrap()).unwrap().is_none());
        // a litter and a near-litter with two anomalies share an orbit
        let n = (l0 & !1) | bit(4);
        let t = SupportSet::new(vec![SupportElem::NearLitter(n)]);
        let s = SupportSet::new(vec![SupportElem::NearLitter(l0)]);
        let m = same_orbit(&u, &s, &t, DEFAULT_NODE_BUDGET).unwrap().unwrap();
        assert_eq!(apply_mask(&m.perm, l0), n);
    }

    #[test]
    fn orbit_census_small_universe() {
        let u = Universe::build(FmParams { k: 3, s_max: 3, litters0: 2 }, 1).unwrap();
        let r = orbit_census(&u, 2, DEFAULT_NODE_BUDGET).unwrap();
        assert!(r.mismatches.is_empty(), "{:?}", &r.mismatches[..r.mismatches.len().min(5)]);
        assert!(r.equal_spec_pairs > 0 && r.pairs > r.equal_spec_pairs);
    }

    #[test]
    fn coding_census_small_universe() {
        let u = Universe::build(FmParams { k: 3, s_max: 3, litters0: 2 }, 1).unwrap();
        for level in [1, 2] {
            let r = coding_census(&u, level, DEFAULT_NODE_BUDGET).unwrap();
            assert!(r.single_valued_failures.is_empty());
            assert!(r.distinct_functions > 0);
        }
    }

    #[test]
    fn coding_orbit_of_a_litter() {
        let u = u1();
        let l0 = u.litters[0].atoms;
        let s = SupportSet::new(vec![SupportElem::NearLitter(l0)]);
        let spec = orbit_spec(&u, &s).unwrap();
        let orbit: Vec<SupportSet> = strong_sequences(&u, 1)
            .into_iter()
            .filter(|t| orbit_spec(&u, t).unwrap() == spec)
            .collect();
        // every four-element near-litter: three litters, each with 4 * 8 exchanges
        assert_eq!(orbit.len(), 3 * (1 + 32));
        for t in &orbit {
            assert!(same_orbit(&u, &s, t, DEFAULT_NODE_BUDGET).unwrap().is_some());
        }
    }
}
