//! Exact backtracking search for allowable permutations under pin and
//! setwise constraints. Variables are the first clan and its parents; a
//! second clan, when present, follows its parents wholesale.

use super::{bit, bits, Clan, FmError, Perm, Universe};

pub const DEFAULT_NODE_BUDGET: u64 = 5_000_000;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Constraints {
    /// `rho(a) = b`
    pub pins: Vec<(usize, usize)>,
    /// `rho[N] = M`
    pub setwise: Vec<(u64, u64)>,
}

impl Constraints {
    pub fn pin(mut self, a: usize, b: usize) -> Self {
        self.pins.push((a, b));
        self
    }

    pub fn set(mut self, n: u64, m: u64) -> Self {
        self.setwise.push((n, m));
        self
    }
}

pub struct Search<'a> {
    u: &'a Universe,
    budget: u64,
    nodes: u64,
    vars: Vec<usize>,
}

struct State {
    dom: Vec<u64>,
    img: Vec<usize>,
    used: u64,
    target: Vec<Option<usize>>,
    out: Vec<usize>,
}

impl<'a> Search<'a> {
    pub fn new(u: &'a Universe, budget: u64) -> Self {
        let mut vars: Vec<usize> = bits(u.clan_mask(Clan::Parents0)).collect();
        vars.extend(bits(u.clan_mask(Clan::Clan0)));
        Search { u, budget, nodes: 0, vars }
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    /// Domains after constraint propagation, or `None` when the constraints
    /// are already contradictory.
    pub fn root_domains(&self, c: &Constraints) -> Result<Option<Vec<u64>>, FmError> {
        let u = self.u;
        let core = u.core_mask();
        let n = u.atom_count();
        let mut dom = vec![0u64; n];
        for x in bits(core) {
            dom[x] = u.clan_mask(u.clan_of[x]) & core;
        }
        for &(a, b) in &c.pins {
            if core & bit(a) == 0 || core & bit(b) == 0 {
                return Err(FmError::Unsupported("search constraints must stay in the first clan and its parents".into()));
            }
            dom[a] &= bit(b);
        }
        for &(nm, mm) in &c.setwise {
            if nm & !core != 0 || mm & !core != 0 {
                return Err(FmError::Unsupported("search constraints must stay in the first clan and its parents".into()));
            }
            for clan in [Clan::Clan0, Clan::Parents0] {
                let cm = u.clan_mask(clan);
                if (nm & cm).count_ones() != (mm & cm).count_ones() {
                    return Ok(None);
                }
            }
            for x in bits(core) {
                dom[x] &= if nm & bit(x) != 0 { mm } else { !mm };
            }
            match (u.near_litter_core(nm), u.near_litter_core(mm)) {
                (Some(ln), Some(lm)) => dom[u.litters[ln].parent] &= bit(u.litters[lm].parent),
                (None, None) => {}
                _ => return Ok(None),
            }
        }
        // singleton propagation
        let mut changed = true;
        while changed {
            changed = false;
            for x in bits(core) {
                if dom[x] == 0 {
                    return Ok(None);
                }
                if dom[x].count_ones() == 1 {
                    for y in bits(core) {
                        if y != x && dom[y] & dom[x] != 0 {
                            dom[y] &= !dom[x];
                            changed = true;
                        }
                    }
                }
            }
        }
        if bits(core).any(|x| dom[x] == 0) {
            return Ok(None);
        }
        Ok(Some(dom))
    }

    pub fn find(&mut self, c: &Constraints) -> Result<Option<Perm>, FmError> {
        let mut found = None;
        self.for_each(c, &mut |p| {
            found = Some(p.clone());
            false
        })?;
        Ok(found)
    }

    /// Calls `f` on every allowable permutation meeting `c` until it returns
    /// false. Returns whether the enumeration ran to completion.
    pub fn for_each(&mut self, c: &Constraints, f: &mut dyn FnMut(&Perm) -> bool) -> Result<bool, FmError> {
        let Some(dom) = self.root_domains(c)? else {
            return Ok(true);
        };
        let n = self.u.atom_count();
        let mut st = State {
            dom,
            img: self.u.identity(),
            used: 0,
            target: vec![None; self.u.litters.len()],
            out: vec![0; self.u.litters.len()],
        };
        debug_assert!(st.img.len() == n);
        self.go(0, &mut st, f)
    }

    fn go(&mut self, depth: usize, st: &mut State, f: &mut dyn FnMut(&Perm) -> bool) -> Result<bool, FmError> {
        let u = self.u;
        if depth == self.vars.len() {
            let mut rho = st.img.clone();
            if u.stages == 2 {
                u.lift_to_stage2(&mut rho);
            }
            return Ok(f(&rho));
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(FmError::SearchBudgetExceeded(self.budget));
        }
        let x = self.vars[depth];
        let avail = st.dom[x] & !st.used;
        // identity first, then ascending
        let order = if avail & bit(x) != 0 { bit(x) } else { 0 };
        let candidates = std::iter::once(order).filter(|&m| m != 0).map(|m| m.trailing_zeros() as usize).chain(bits(avail & !bit(x)));
        let candidates: Vec<usize> = candidates.collect();
        for y in candidates {
            let litter = u.litter_of[x];
            let mut counted = false;
            if let Some(l) = litter {
                let t = st.target[l].expect("parents are assigned before atoms");
                if u.litters[t].atoms & bit(y) == 0 {
                    if 2 * (st.out[l] + 1) >= u.params.s_max {
                        continue;
                    }
                    st.out[l] += 1;
                    counted = true;
                }
            }
            let parented = u.parented[x].filter(|&l| u.litters[l].clan == Clan::Clan0);
            if let Some(l) = parented {
                st.target[l] = u.parented[y];
            }
            st.img[x] = y;
            st.used |= bit(y);
            let dead = self.vars[depth + 1..].iter().any(|&z| st.dom[z] & !st.used == 0);
            let keep_going = if dead { true } else { self.go(depth + 1, st, f)? };
            st.used &= !bit(y);
            st.img[x] = x;
            if counted {
                st.out[litter.unwrap()] -= 1;
            }
            if let Some(l) = parented {
                st.target[l] = None;
            }
            if !keep_going {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{is_allowable, FmParams};
    use super::*;

    fn tiny() -> Universe {
        Universe::build(FmParams { k: 2, s_max: 2, litters0: 2 }, 1).unwrap()
    }

    /// Every permutation of the tiny universe, filtered by allowability.
    fn brute(u: &Universe, c: &Constraints) -> Vec<Perm> {
        let n = u.atom_count();
        let mut out = Vec::new();
        let mut p: Perm = (0..n).collect();
        permute(&mut p, 0, &mut |q| {
            let ok = is_allowable(u, q).unwrap().allowable
                && c.pins.iter().all(|&(a, b)| q[a] == b)
                && c.setwise.iter().all(|&(nm, mm)| super::super::apply_mask(q, nm) == mm);
            if ok {
                out.push(q.to_vec());
            }
        });
        out.sort();
        out
    }

    fn permute(p: &mut Vec<usize>, i: usize, f: &mut dyn FnMut(&[usize])) {
        if i == p.len() {
            f(p);
            return;
        }
        for j in i..p.len() {
            p.swap(i, j);
            permute(p, i + 1, f);
            p.swap(i, j);
        }
    }

    fn all(u: &Universe, c: &Constraints) -> Vec<Perm> {
        let mut out = Vec::new();
        Search::new(u, DEFAULT_NODE_BUDGET)
            .for_each(c, &mut |p| {
                out.push(p.clone());
                true
            })
            .unwrap();
        out.sort();
        out
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let u = tiny();
        for c in [
            Constraints::default(),
            Constraints::default().pin(0, 2),
            Constraints::default().pin(4, 5),
            Constraints::default().set(0b11, 0b11),
            Constraints::default().set(0b11, 0b1100),
            Constraints::default().set(0b1, 0b100).pin(4, 4),
        ] {
            assert_eq!(all(&u, &c), brute(&u, &c), "{c:?}");
        }
    }

    #[test]
    fn enumeration_matches_brute_force_k3() {
        let u = Universe::build(FmParams { k: 3, s_max: 3, litters0: 2 }, 1).unwrap();
        for c in [Constraints::default(), Constraints::default().pin(0, 3), Constraints::default().set(0b111, 0b111_000), Constraints::default().set(0b011, 0b101)] {
            assert_eq!(all(&u, &c), brute(&u, &c), "{c:?}");
        }
    }

    #[test]
    fn default_universe_count() {
        // 6 parent permutations; per parent permutation the cross-litter
        // exchange patterns contribute 13824 + 3 * 221184 + 2 * 884736
        let u = Universe::build(FmParams::default(), 1).unwrap();
        let mut count = 0u64;
        Search::new(&u, 100_000_000)
            .for_each(&Constraints::default().pin(12, 12).pin(13, 13), &mut |_| {
                count += 1;
                true
            })
            .unwrap();
        assert_eq!(count, 13824 + 3 * 221184 + 2 * 884736);
    }

    #[test]
    fn budget_and_scope() {
        let u = Universe::build(FmParams::default(), 2).unwrap();
        let mut s = Search::new(&u, 3);
        assert!(matches!(s.for_each(&Constraints::default(), &mut |_| true), Err(FmError::SearchBudgetExceeded(3))));
        let mut s = Search::new(&u, DEFAULT_NODE_BUDGET);
        assert!(matches!(s.find(&Constraints::default().pin(20, 21)), Err(FmError::Unsupported(_))));
        let p = s.find(&Constraints::default().pin(12, 13)).unwrap().unwrap();
        assert!(is_allowable(&u, &p).unwrap().allowable);
        assert_eq!(p[12], 13);
    }
}
