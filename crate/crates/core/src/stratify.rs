//! Stratification: inferring integer types for variables so that `=` relates
//! equal types and `in` relates a type to its successor, plus checking of
//! explicitly annotated formulas under each typing regime.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::formula::{Formula, Mode, Var};

/// A solution of the constraint system, keyed by variable name. Occurrences
/// of the reserved constant are keyed `empty^i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stratification {
    pub assignment: BTreeMap<String, i64>,
}

/// Atoms whose constraints cannot hold together.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NotStratified {
    #[serde(serialize_with = "ser_atoms")]
    pub cycle: Vec<Formula>,
    /// Sum of the offsets around the cycle; never zero.
    pub offset_sum: i64,
}

fn ser_atoms<S: serde::Serializer>(atoms: &[Formula], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(atoms.iter().map(|a| a.to_string()))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StratifyError {
    #[error("variable `{0}` has no declared type")]
    MissingTypes(String),
}

/// Graph node for a variable occurrence. Every `empty^i` shares one node at
/// offset `i`, so distinct annotations of the constant stay rigidly related.
fn node_of(v: &Var) -> (String, i64) {
    if v.is_empty_const() {
        ("empty".to_string(), v.ty.unwrap_or(0))
    } else {
        (v.name.clone(), 0)
    }
}

fn key_of(v: &Var) -> String {
    if v.is_empty_const() {
        format!("empty^{}", v.ty.unwrap_or(0))
    } else {
        v.name.clone()
    }
}

/// Constraint `type(v) - type(u) = offset` for one atom.
#[derive(Clone, Debug)]
struct Edge {
    u: usize,
    v: usize,
    offset: i64,
    atom: usize,
}

struct Graph {
    ids: HashMap<String, usize>,
    names: Vec<String>,
    edges: Vec<Edge>,
    atoms: Vec<Formula>,
    // reported keys and the node/offset they stand for
    keys: BTreeMap<String, (usize, i64)>,
}

impl Graph {
    fn build(phi: &Formula) -> Graph {
        let mut g = Graph { ids: HashMap::new(), names: Vec::new(), edges: Vec::new(), atoms: Vec::new(), keys: BTreeMap::new() };
        for atom in phi.atoms() {
            let (x, y, rel) = match atom {
                Formula::Equal(x, y) => (x, y, 0),
                Formula::Member(x, y) => (x, y, 1),
                _ => unreachable!("atoms() yields only atomic formulas"),
            };
            let (nx, ox) = node_of(x);
            let (ny, oy) = node_of(y);
            let u = g.intern(nx);
            let v = g.intern(ny);
            g.keys.insert(key_of(x), (u, ox));
            g.keys.insert(key_of(y), (v, oy));
            let idx = g.atoms.len();
            g.atoms.push(atom.clone());
            // type(y) - type(x) = rel, with type(x) = t(u) + ox
            g.edges.push(Edge { u, v, offset: rel + ox - oy, atom: idx });
        }
        g
    }

    fn intern(&mut self, name: String) -> usize {
        if let Some(&i) = self.ids.get(&name) {
            return i;
        }
        let i = self.names.len();
        self.ids.insert(name.clone(), i);
        self.names.push(name);
        i
    }
}

struct UnionFind {
    parent: Vec<usize>,
    // type(node) - type(parent)
    pot: Vec<i64>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), pot: vec![0; n] }
    }

    fn find(&mut self, x: usize) -> (usize, i64) {
        if self.parent[x] == x {
            return (x, 0);
        }
        let p = self.parent[x];
        let (root, pp) = self.find(p);
        self.pot[x] += pp;
        self.parent[x] = root;
        (root, self.pot[x])
    }
}

/// Infers the canonical stratification (each connected component has
/// minimum type 0), or returns a cycle of atoms with nonzero offset sum.
/// Declared types are ignored. In TTT mode `in` only requires a strictly
/// larger type, so the system is solved as difference constraints.
pub fn infer(phi: &Formula, mode: Mode) -> Result<Stratification, NotStratified> {
    let g = Graph::build(phi);
    if mode == Mode::Ttt {
        return infer_ttt(&g);
    }
    let n = g.names.len();
    let mut uf = UnionFind::new(n);
    let mut forest: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (neighbor, edge index)
    for (ei, e) in g.edges.iter().enumerate() {
        let (ru, pu) = uf.find(e.u);
        let (rv, pv) = uf.find(e.v);
        if ru == rv {
            if pv - pu != e.offset {
                return Err(conflict_cycle(&g, &forest, ei));
            }
            continue;
        }
        // attach rv under ru: type(rv) - type(ru) = pu + offset - pv
        uf.parent[rv] = ru;
        uf.pot[rv] = pu + e.offset - pv;
        forest[e.u].push((e.v, ei));
        forest[e.v].push((e.u, ei));
    }
    let mut raw = vec![0i64; n];
    let mut roots = vec![0usize; n];
    for i in 0..n {
        let (r, p) = uf.find(i);
        raw[i] = p;
        roots[i] = r;
    }
    Ok(canonical(&g, &raw, &roots))
}

fn canonical(g: &Graph, raw: &[i64], comp: &[usize]) -> Stratification {
    let mut min: HashMap<usize, i64> = HashMap::new();
    for &(node, off) in g.keys.values() {
        let t = raw[node] + off;
        let m = min.entry(comp[node]).or_insert(t);
        *m = (*m).min(t);
    }
    let assignment = g
        .keys
        .iter()
        .map(|(k, &(node, off))| (k.clone(), raw[node] + off - min[&comp[node]]))
        .collect();
    Stratification { assignment }
}

/// The conflicting edge closes a cycle with the forest path between its ends.
fn conflict_cycle(g: &Graph, forest: &[Vec<(usize, usize)>], ei: usize) -> NotStratified {
    let e = &g.edges[ei];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; g.names.len()];
    let mut seen = vec![false; g.names.len()];
    let mut q = VecDeque::from([e.u]);
    seen[e.u] = true;
    while let Some(x) = q.pop_front() {
        if x == e.v {
            break;
        }
        for &(y, ej) in &forest[x] {
            if !seen[y] {
                seen[y] = true;
                prev[y] = Some((x, ej));
                q.push_back(y);
            }
        }
    }
    // walk back from v to u summing type differences along the forest
    let mut path_edges = Vec::new();
    let mut diff = 0i64; // type(v) - type(u) along the path
    let mut cur = e.v;
    while cur != e.u {
        let (p, ej) = prev[cur].expect("conflicting ends share a component");
        let f = &g.edges[ej];
        diff += if f.u == p && f.v == cur { f.offset } else { -f.offset };
        path_edges.push(ej);
        cur = p;
    }
    path_edges.reverse();
    let mut cycle: Vec<Formula> = path_edges.iter().map(|&ej| g.atoms[g.edges[ej].atom].clone()).collect();
    cycle.push(g.atoms[e.atom].clone());
    NotStratified { cycle, offset_sum: e.offset - diff }
}

fn infer_ttt(g: &Graph) -> Result<Stratification, NotStratified> {
    // constraint type(v) >= type(u) + w; equality gives both directions
    let mut arcs: Vec<(usize, usize, i64, usize)> = Vec::new();
    for e in &g.edges {
        let member = matches!(g.atoms[e.atom], Formula::Member(..));
        if member {
            // offset folds in the empty-node shifts; strictness is offset >= 1
            arcs.push((e.u, e.v, e.offset, e.atom));
        } else {
            arcs.push((e.u, e.v, e.offset, e.atom));
            arcs.push((e.v, e.u, -e.offset, e.atom));
        }
    }
    let n = g.names.len();
    let mut dist = vec![0i64; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut last = None;
    for _ in 0..=n {
        last = None;
        for (ai, &(u, v, w, _)) in arcs.iter().enumerate() {
            if dist[u] + w > dist[v] {
                dist[v] = dist[u] + w;
                pred[v] = Some(ai);
                last = Some(v);
            }
        }
        if last.is_none() {
            break;
        }
    }
    if let Some(mut x) = last {
        for _ in 0..n {
            x = arcs[pred[x].expect("relaxed node has a predecessor")].0;
        }
        let start = x;
        let mut cycle_arcs = Vec::new();
        loop {
            let ai = pred[x].expect("cycle node has a predecessor");
            cycle_arcs.push(ai);
            x = arcs[ai].0;
            if x == start {
                break;
            }
        }
        cycle_arcs.reverse();
        let offset_sum = cycle_arcs.iter().map(|&ai| arcs[ai].2).sum();
        let cycle = cycle_arcs.iter().map(|&ai| g.atoms[arcs[ai].3].clone()).collect();
        return Err(NotStratified { cycle, offset_sum });
    }
    // components for canonical shifting
    let mut uf = UnionFind::new(n);
    for &(u, v, _, _) in &arcs {
        let (ru, _) = uf.find(u);
        let (rv, _) = uf.find(v);
        if ru != rv {
            uf.parent[rv] = ru;
        }
    }
    let comp: Vec<usize> = (0..n).map(|i| uf.find(i).0).collect();
    Ok(canonical(g, &dist, &comp))
}

fn type_ok(t: i64, mode: Mode) -> bool {
    match mode {
        Mode::Tnt => true,
        _ => t >= 0,
    }
}

/// Checks declared types against the regime of `mode`.
pub fn check_typed(phi: &Formula, mode: Mode) -> Result<bool, StratifyError> {
    if let Some(v) = phi.occurrences().into_iter().find(|v| v.ty.is_none()) {
        return Err(StratifyError::MissingTypes(v.name.clone()));
    }
    let mut free: HashMap<String, i64> = HashMap::new();
    let mut scope: Vec<(String, i64)> = Vec::new();
    Ok(typed_rec(phi, mode, &mut scope, &mut free))
}

fn typed_rec(f: &Formula, mode: Mode, scope: &mut Vec<(String, i64)>, free: &mut HashMap<String, i64>) -> bool {
    let mut consistent = |v: &Var, scope: &Vec<(String, i64)>| -> bool {
        let t = v.ty.expect("checked above");
        if v.is_empty_const() {
            return mode == Mode::Tstu && t >= 1;
        }
        if !type_ok(t, mode) {
            return false;
        }
        match scope.iter().rev().find(|(n, _)| n == &v.name) {
            Some(&(_, bt)) => bt == t,
            None => *free.entry(v.name.clone()).or_insert(t) == t,
        }
    };
    match f {
        Formula::Equal(x, y) => {
            consistent(x, scope) && consistent(y, scope) && x.ty == y.ty
        }
        Formula::Member(x, y) => {
            if !(consistent(x, scope) && consistent(y, scope)) || x.is_empty_const() {
                return false;
            }
            let (i, j) = (x.ty.unwrap(), y.ty.unwrap());
            match mode {
                Mode::Ttt => j > i,
                _ => j == i + 1,
            }
        }
        Formula::Not(a) => typed_rec(a, mode, scope, free),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            typed_rec(a, mode, scope, free) && typed_rec(b, mode, scope, free)
        }
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let t = v.ty.expect("checked above");
            if v.is_empty_const() || !type_ok(t, mode) {
                return false;
            }
            scope.push((v.name.clone(), t));
            let ok = typed_rec(body, mode, scope, free);
            scope.pop();
            ok
        }
    }
}

/// Replaces every declared type with the one assigned by `s`.
pub fn annotate(phi: &Formula, s: &Stratification) -> Formula {
    phi.map_vars(&mut |v| {
        if v.is_empty_const() {
            return v.clone();
        }
        // a binder whose variable occurs in no atom is unconstrained
        Var { name: v.name.clone(), ty: Some(s.assignment.get(&v.name).copied().unwrap_or(0)) }
    })
}

/// Runs [`infer`] in TST mode and, on success, confirms that the annotated
/// formula type-checks. Returns the verdict; panics if the two disagree.
pub fn stratified_equiv_check(phi: &Formula) -> bool {
    match infer(phi, Mode::Tst) {
        Ok(s) => {
            let annotated = annotate(phi, &s);
            let has_empty = phi.occurrences().iter().any(|v| v.is_empty_const());
            let mode = if has_empty { Mode::Tstu } else { Mode::Tst };
            let ok = check_typed(&annotated, mode).unwrap_or(false);
            assert!(has_empty || ok, "inferred stratification of `{phi}` does not type-check");
            true
        }
        Err(w) => {
            assert_ne!(w.offset_sum, 0, "witness cycle must be unbalanced");
            false
        }
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Brute-force search for a type assignment, independent of the solver.
    use super::*;

    pub fn brute_force(phi: &Formula, lo: i64, hi: i64, strict_ttt: bool) -> bool {
        let mut names: Vec<String> = Vec::new();
        let mut cons: Vec<(usize, usize, bool)> = Vec::new(); // (x, y, is_member)
        let idx = |n: &str, names: &mut Vec<String>| match names.iter().position(|m| m == n) {
            Some(i) => i,
            None => {
                names.push(n.to_string());
                names.len() - 1
            }
        };
        for a in phi.atoms() {
            match a {
                Formula::Equal(x, y) => {
                    let (i, j) = (idx(&x.name, &mut names), idx(&y.name, &mut names));
                    cons.push((i, j, false));
                }
                Formula::Member(x, y) => {
                    let (i, j) = (idx(&x.name, &mut names), idx(&y.name, &mut names));
                    cons.push((i, j, true));
                }
                _ => unreachable!(),
            }
        }
        let mut vals = vec![None; names.len()];
        search(0, &mut vals, &cons, lo, hi, strict_ttt)
    }

    fn search(k: usize, vals: &mut Vec<Option<i64>>, cons: &[(usize, usize, bool)], lo: i64, hi: i64, ttt: bool) -> bool {
        let ok = |vals: &Vec<Option<i64>>| {
            cons.iter().all(|&(i, j, m)| match (vals[i], vals[j]) {
                (Some(a), Some(b)) => {
                    if !m {
                        a == b
                    } else if ttt {
                        b > a
                    } else {
                        b == a + 1
                    }
                }
                _ => true,
            })
        };
        if !ok(vals) {
            return false;
        }
        if k == vals.len() {
            return true;
        }
        for t in lo..=hi {
            vals[k] = Some(t);
            if search(k + 1, vals, cons, lo, hi, ttt) {
                vals[k] = None;
                return true;
            }
        }
        vals[k] = None;
        false
    }
}
