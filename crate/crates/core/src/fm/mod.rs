//! A finite laboratory for permutation-model combinatorics: atoms grouped
//! into clans and litters, parents of litters, allowable permutations,
//! substitution extensions, supports and orbits.
//!
//! Stage 1 has one clan of `litters0` litters of `k` atoms and one irregular
//! parent atom per litter. Stage 2 adds a second clan with one litter per
//! atom of the first clan, parented by that atom. All atoms of a universe fit
//! in a `u64` mask.

mod orbit;
mod search;
mod support;

pub use orbit::{
    coding_census, orbit_census, orbit_spec, same_orbit, strong_sequences, CodingReport, OrbitMap, OrbitReport,
    PositionKind, PositionSpec,
};
pub use search::{Constraints, Search, DEFAULT_NODE_BUDGET};
pub use support::{
    clan_subset_support_lemma_check, extension_lemma_check, is_support, parent_injection_check, symmetric_census,
    valid_support_sets, CensusReport, ExtensionReport, InjectionReport, LemmaReport, Obj, SupportElem, SupportSet,
    SupportVerdict,
};

use serde::Serialize;
use thiserror::Error;

pub type Perm = Vec<usize>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FmError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("not a bijection: {0}")]
    NotABijection(String),
    #[error("not locally small: litter {litter} meets the domain in {count} atoms")]
    NotLocallySmall { litter: usize, count: usize },
    #[error("unbalanced litter {litter}: {free_source} free atoms against {free_target} in litter {target}")]
    UnbalancedLitter { litter: usize, target: usize, free_source: usize, free_target: usize },
    #[error("extension is not allowable: {0}")]
    ExtensionNotAllowable(String),
    #[error("search budget of {0} nodes exceeded")]
    SearchBudgetExceeded(u64),
    #[error("order is not strong: {0}")]
    NotStrong(String),
    #[error("invalid support set: {0}")]
    InvalidSupport(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Clan {
    /// Regular atoms of the first clan.
    Clan0,
    /// Irregular atoms parenting the first clan's litters.
    Parents0,
    /// Regular atoms of the second clan.
    Clan1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FmParams {
    pub k: usize,
    pub s_max: usize,
    pub litters0: usize,
}

impl Default for FmParams {
    fn default() -> Self {
        FmParams { k: 4, s_max: 3, litters0: 3 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Litter {
    pub clan: Clan,
    pub atoms: u64,
    pub parent: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Universe {
    pub params: FmParams,
    pub stages: usize,
    pub names: Vec<String>,
    pub clan_of: Vec<Clan>,
    pub litters: Vec<Litter>,
    /// Litter index of each regular atom.
    pub litter_of: Vec<Option<usize>>,
    /// Litter parented by each atom, if any.
    pub parented: Vec<Option<usize>>,
}

pub fn bit(i: usize) -> u64 {
    1u64 << i
}

pub fn bits(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

pub fn apply_mask(rho: &[usize], mask: u64) -> u64 {
    bits(mask).fold(0, |acc, i| acc | bit(rho[i]))
}

impl Universe {
    pub fn build(params: FmParams, stages: usize) -> Result<Self, FmError> {
        let FmParams { k, s_max, litters0 } = params;
        if !(2 <= s_max && s_max <= k) {
            return Err(FmError::InvalidParams(format!("need 2 <= s_max <= k, got s_max = {s_max}, k = {k}")));
        }
        if litters0 < 2 {
            return Err(FmError::InvalidParams("need at least 2 litters".into()));
        }
        if !(1..=2).contains(&stages) {
            return Err(FmError::InvalidParams("stages must be 1 or 2".into()));
        }
        let clan0 = litters0 * k;
        let total = clan0 + litters0 + if stages == 2 { clan0 * k } else { 0 };
        if total > 64 {
            return Err(FmError::InvalidParams(format!("{total} atoms do not fit in 64")));
        }
        let mut u = Universe {
            params,
            stages,
            names: Vec::with_capacity(total),
            clan_of: Vec::with_capacity(total),
            litters: Vec::new(),
            litter_of: Vec::with_capacity(total),
            parented: vec![None; total],
        };
        for l in 0..litters0 {
            for i in 0..k {
                u.names.push(format!("c0:L{l}:a{i}"));
                u.clan_of.push(Clan::Clan0);
                u.litter_of.push(Some(l));
            }
        }
        for l in 0..litters0 {
            u.names.push(format!("p0:{l}"));
            u.clan_of.push(Clan::Parents0);
            u.litter_of.push(None);
        }
        for l in 0..litters0 {
            let atoms = ((l * k)..(l * k + k)).fold(0, |m, i| m | bit(i));
            let parent = clan0 + l;
            u.parented[parent] = Some(l);
            u.litters.push(Litter { clan: Clan::Clan0, atoms, parent });
        }
        if stages == 2 {
            let base = clan0 + litters0;
            for l in 0..clan0 {
                let lit = u.litters.len();
                let mut atoms = 0;
                for i in 0..k {
                    let idx = base + l * k + i;
                    u.names.push(format!("c1:L{l}:a{i}"));
                    u.clan_of.push(Clan::Clan1);
                    u.litter_of.push(Some(lit));
                    atoms |= bit(idx);
                }
                u.parented[l] = Some(lit);
                u.litters.push(Litter { clan: Clan::Clan1, atoms, parent: l });
            }
        }
        u.check_near_litter_uniqueness()?;
        Ok(u)
    }

    /// No atom set may lie within `s_max - 1` of two litters. Two distinct
    /// litters are at distance `2k`, so a set near both exists exactly when
    /// `2k <= 2 (s_max - 1)`.
    fn check_near_litter_uniqueness(&self) -> Result<(), FmError> {
        let reach = 2 * (self.params.s_max - 1);
        for (i, a) in self.litters.iter().enumerate() {
            for b in &self.litters[i + 1..] {
                if a.clan == b.clan && ((a.atoms ^ b.atoms).count_ones() as usize) <= reach {
                    return Err(FmError::InvalidParams(format!("some atom set is near litters {} and more", i)));
                }
            }
        }
        Ok(())
    }

    pub fn atom_count(&self) -> usize {
        self.names.len()
    }

    pub fn clan_mask(&self, clan: Clan) -> u64 {
        self.clan_of.iter().enumerate().filter(|(_, &c)| c == clan).fold(0, |m, (i, _)| m | bit(i))
    }

    /// Atoms of the first clan together with its parents.
    pub fn core_mask(&self) -> u64 {
        self.clan_mask(Clan::Clan0) | self.clan_mask(Clan::Parents0)
    }

    pub fn litters_of(&self, clan: Clan) -> impl Iterator<Item = (usize, &Litter)> {
        self.litters.iter().enumerate().filter(move |(_, l)| l.clan == clan)
    }

    pub fn name(&self, atom: usize) -> &str {
        &self.names[atom]
    }

    pub fn names_of(&self, mask: u64) -> Vec<String> {
        bits(mask).map(|i| self.names[i].clone()).collect()
    }

    /// The unique litter within `s_max - 1` of `set`, if any.
    pub fn near_litter_core(&self, set: u64) -> Option<usize> {
        if set == 0 {
            return None;
        }
        let clan = self.clan_of[set.trailing_zeros() as usize];
        if bits(set).any(|i| self.clan_of[i] != clan) {
            return None;
        }
        self.litters
            .iter()
            .position(|l| l.clan == clan && ((l.atoms ^ set).count_ones() as usize) < self.params.s_max)
    }

    /// Every near-litter of the given clan, ascending by mask.
    pub fn near_litters(&self, clan: Clan) -> Vec<u64> {
        let clan_atoms = self.clan_mask(clan);
        let mut out = Vec::new();
        for (_, l) in self.litters_of(clan) {
            let outside = clan_atoms & !l.atoms;
            for removed in submasks_up_to(l.atoms, self.params.s_max - 1) {
                let left = self.params.s_max - 1 - removed.count_ones() as usize;
                for added in submasks_up_to(outside, left) {
                    out.push((l.atoms & !removed) | added);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn identity(&self) -> Perm {
        (0..self.atom_count()).collect()
    }

    /// Extends a permutation of the core atoms to the second clan by moving
    /// each litter wholesale to the litter parented by the image of its parent.
    pub fn lift_to_stage2(&self, rho: &mut Perm) {
        for l in &self.litters {
            if l.clan != Clan::Clan1 {
                continue;
            }
            let target = self.parented[rho[l.parent]].expect("first-clan atoms parent second-clan litters");
            for (a, b) in bits(l.atoms).zip(bits(self.litters[target].atoms)) {
                rho[a] = b;
            }
        }
    }
}

/// Submasks of `mask` with at most `limit` bits, in ascending order.
pub fn submasks_up_to(mask: u64, limit: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut sub = mask;
    loop {
        if sub.count_ones() as usize <= limit {
            out.push(sub);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & mask;
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Allowability {
    pub allowable: bool,
    /// First violated condition, if any.
    pub violation: Option<String>,
    /// Atoms sent outside the core litter of their litter's image.
    pub exceptions: Vec<usize>,
}

pub fn check_bijection(u: &Universe, rho: &[usize]) -> Result<(), FmError> {
    let n = u.atom_count();
    if rho.len() != n {
        return Err(FmError::NotABijection(format!("length {} for {} atoms", rho.len(), n)));
    }
    let mut seen = 0u64;
    for (i, &r) in rho.iter().enumerate() {
        if r >= n || seen & bit(r) != 0 {
            return Err(FmError::NotABijection(format!("{} has a bad or repeated image", u.name(i))));
        }
        seen |= bit(r);
    }
    Ok(())
}

pub fn is_allowable(u: &Universe, rho: &[usize]) -> Result<Allowability, FmError> {
    check_bijection(u, rho)?;
    let fail = |msg: String| Allowability { allowable: false, violation: Some(msg), exceptions: Vec::new() };
    for (i, &r) in rho.iter().enumerate() {
        if u.clan_of[i] != u.clan_of[r] {
            return Ok(fail(format!("{} leaves its clan", u.name(i))));
        }
    }
    let mut exceptions = Vec::new();
    for (li, l) in u.litters.iter().enumerate() {
        let image = apply_mask(rho, l.atoms);
        let Some(m) = u.near_litter_core(image) else {
            return Ok(fail(format!("image of litter {li} is not a near-litter")));
        };
        if u.litters[m].parent != rho[l.parent] {
            return Ok(fail(format!(
                "litter {li}: image is near litter {m} parented by {}, expected {}",
                u.name(u.litters[m].parent),
                u.name(rho[l.parent])
            )));
        }
        exceptions.extend(bits(l.atoms).filter(|&x| u.litters[m].atoms & bit(rho[x]) == 0));
    }
    exceptions.sort_unstable();
    Ok(Allowability { allowable: true, violation: None, exceptions })
}

pub fn compose(a: &[usize], b: &[usize]) -> Perm {
    // (a . b)(x) = a(b(x))
    b.iter().map(|&x| a[x]).collect()
}

pub fn inverse(a: &[usize]) -> Perm {
    let mut inv = vec![0; a.len()];
    for (i, &x) in a.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

/// Extends a locally small partial bijection (equal domain and range) to an
/// allowable permutation whose exceptions lie in the domain. Parents are
/// completed by the identity off the domain; each litter's free atoms are
/// then sent in ascending order onto the free atoms of the litter parented by
/// the image of its parent, first clan before second.
pub fn substitution_extension(u: &Universe, rho0: &[(usize, usize)]) -> Result<Perm, FmError> {
    let n = u.atom_count();
    let mut rho: Vec<Option<usize>> = vec![None; n];
    let mut dom = 0u64;
    let mut ran = 0u64;
    for &(a, b) in rho0 {
        if a >= n || b >= n {
            return Err(FmError::NotABijection("atom out of range".into()));
        }
        if dom & bit(a) != 0 || ran & bit(b) != 0 {
            return Err(FmError::NotABijection(format!("{} or {} repeated", u.name(a), u.name(b))));
        }
        if u.clan_of[a] != u.clan_of[b] {
            return Err(FmError::NotABijection(format!("{} and {} lie in different clans", u.name(a), u.name(b))));
        }
        rho[a] = Some(b);
        dom |= bit(a);
        ran |= bit(b);
    }
    if dom != ran {
        return Err(FmError::NotABijection("domain and range differ".into()));
    }
    for (li, l) in u.litters.iter().enumerate() {
        let count = (l.atoms & dom).count_ones() as usize;
        if count >= u.params.s_max {
            return Err(FmError::NotLocallySmall { litter: li, count });
        }
    }
    for p in bits(u.clan_mask(Clan::Parents0)) {
        rho[p].get_or_insert(p);
    }
    for clan in [Clan::Clan0, Clan::Clan1] {
        for (li, l) in u.litters_of(clan) {
            let image_parent = rho[l.parent].expect("parents are completed before their litters");
            let target = u.parented[image_parent].expect("every parent atom parents a litter");
            let free_src: Vec<usize> = bits(l.atoms & !dom).collect();
            let free_dst: Vec<usize> = bits(u.litters[target].atoms & !dom).collect();
            if free_src.len() != free_dst.len() {
                return Err(FmError::UnbalancedLitter {
                    litter: li,
                    target,
                    free_source: free_src.len(),
                    free_target: free_dst.len(),
                });
            }
            for (a, b) in free_src.into_iter().zip(free_dst) {
                rho[a] = Some(b);
            }
        }
    }
    let rho: Perm = rho.into_iter().collect::<Option<_>>().ok_or_else(|| FmError::NotABijection("incomplete".into()))?;
    check_bijection(u, &rho)?;
    let a = is_allowable(u, &rho)?;
    if !a.allowable {
        return Err(FmError::ExtensionNotAllowable(a.violation.unwrap_or_default()));
    }
    if let Some(&x) = a.exceptions.iter().find(|&&x| dom & bit(x) == 0) {
        return Err(FmError::ExtensionNotAllowable(format!("new exception at {}", u.name(x))));
    }
    Ok(rho)
}
