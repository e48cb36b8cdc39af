//! Forced-structure saturation for semi-unification problems.
//!
//! Nodes form a term graph under a union-find (the unifier `φ`). Each matching
//! function `ψ_i` is a relation between classes that must become a function
//! which commutes with arrows: if `x ↦ y` and `x = l -> r` then `y = l' -> r'`
//! with `l ↦ l'` and `r ↦ r'`. Saturating these rules yields the most general
//! solution when one exists; every step is implied by the constraints, so any
//! solution's terms are at least as deep as the saturated ones.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::term::{Substitution, Term, Var};

const NODE_BUDGET: usize = 1 << 24;
const TOKEN_BUDGET: usize = 1 << 26;

enum Work {
    Union(u32, u32),
    Relate(u32, u32, u32),
    Expand(u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Failure {
    /// Some variable's forced term is deeper than the bound.
    TooDeep,
    /// A forced term would be infinite.
    Cyclic,
    /// Search budget exhausted (not a proof of anything).
    Budget,
}

pub(crate) struct Solved {
    pub phi: Substitution,
    pub psi: Vec<Substitution>,
}

pub(crate) struct Closure {
    parent: Vec<u32>,
    size: Vec<u32>,
    arrow: Vec<Option<(u32, u32)>>,
    psi: Vec<Vec<(u32, u32)>>,
    n_psi: usize,
    var_nodes: BTreeMap<Var, u32>,
    work: Vec<Work>,
    fresh_floor: u32,
    unbounded: BTreeSet<Var>,
}

impl Closure {
    pub fn new(n_psi: usize) -> Self {
        Closure {
            parent: Vec::new(),
            size: Vec::new(),
            arrow: Vec::new(),
            psi: Vec::new(),
            n_psi,
            var_nodes: BTreeMap::new(),
            work: Vec::new(),
            fresh_floor: 0,
            unbounded: BTreeSet::new(),
        }
    }

    fn node(&mut self, arrow: Option<(u32, u32)>) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.size.push(1);
        self.arrow.push(arrow);
        self.psi.push(Vec::new());
        id
    }

    /// Variables invented by the solution are numbered from at least `v`.
    pub fn fresh_floor(&mut self, v: u32) {
        self.fresh_floor = v;
    }

    /// Exempts `v` from the depth bound. Cycles through it still fail.
    pub fn unbounded(&mut self, v: Var) {
        self.unbounded.insert(v);
    }

    pub fn var_node(&mut self, v: Var) -> u32 {
        if let Some(&n) = self.var_nodes.get(&v) {
            return n;
        }
        let n = self.node(None);
        self.var_nodes.insert(v, n);
        n
    }

    pub fn add_term(&mut self, t: &Term) -> u32 {
        let mut stack: Vec<u32> = Vec::new();
        for &tok in t.tokens().iter().rev() {
            if tok == u32::MAX {
                let l = stack.pop().unwrap();
                let r = stack.pop().unwrap();
                let n = self.node(Some((l, r)));
                stack.push(n);
            } else {
                let n = self.var_node(Var(tok));
                stack.push(n);
            }
        }
        stack.pop().unwrap()
    }

    /// A fresh arrow node `l -> r` with fresh leaves; returns `(node, l, r)`.
    pub fn fresh_arrow(&mut self) -> (u32, u32, u32) {
        let l = self.node(None);
        let r = self.node(None);
        (self.node(Some((l, r))), l, r)
    }

    pub fn unify(&mut self, a: u32, b: u32) {
        self.work.push(Work::Union(a, b));
    }

    /// Requires `ψ_i(x) = y`.
    pub fn relate(&mut self, i: usize, x: u32, y: u32) {
        assert!(i < self.n_psi);
        self.work.push(Work::Relate(i as u32, x, y));
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn target(&self, root: u32, i: u32) -> Option<u32> {
        self.psi[root as usize].iter().find(|e| e.0 == i).map(|e| e.1)
    }

    fn saturate(&mut self, max_depth: usize) -> Result<(), Failure> {
        let mut next_check = (self.parent.len() * 2).max(1024);
        while let Some(w) = self.work.pop() {
            if self.parent.len() > next_check {
                if self.parent.len() > NODE_BUDGET {
                    return Err(Failure::Budget);
                }
                self.check_depth(max_depth)?;
                next_check *= 2;
            }
            match w {
                Work::Union(a, b) => {
                    let (mut ra, mut rb) = (self.find(a), self.find(b));
                    if ra == rb {
                        continue;
                    }
                    if self.size[ra as usize] < self.size[rb as usize] {
                        std::mem::swap(&mut ra, &mut rb);
                    }
                    self.parent[rb as usize] = ra;
                    self.size[ra as usize] += self.size[rb as usize];
                    match (self.arrow[ra as usize], self.arrow[rb as usize]) {
                        (Some((al, ar)), Some((bl, br))) => {
                            self.work.push(Work::Union(al, bl));
                            self.work.push(Work::Union(ar, br));
                        }
                        (None, Some(x)) => self.arrow[ra as usize] = Some(x),
                        _ => {}
                    }
                    for (i, t) in std::mem::take(&mut self.psi[rb as usize]) {
                        match self.target(ra, i) {
                            Some(t0) => self.work.push(Work::Union(t, t0)),
                            None => self.psi[ra as usize].push((i, t)),
                        }
                    }
                    if self.arrow[ra as usize].is_some() {
                        for k in 0..self.psi[ra as usize].len() {
                            let i = self.psi[ra as usize][k].0;
                            self.work.push(Work::Expand(i, ra));
                        }
                    }
                }
                Work::Relate(i, x, y) => {
                    let rx = self.find(x);
                    match self.target(rx, i) {
                        Some(t0) => {
                            if self.find(t0) != self.find(y) {
                                self.work.push(Work::Union(t0, y));
                            }
                        }
                        None => {
                            self.psi[rx as usize].push((i, y));
                            self.work.push(Work::Expand(i, rx));
                        }
                    }
                }
                Work::Expand(i, x) => {
                    let rx = self.find(x);
                    let Some((xl, xr)) = self.arrow[rx as usize] else { continue };
                    let t = self.target(rx, i).expect("expand without relation");
                    let rt = self.find(t);
                    let (tl, tr) = match self.arrow[rt as usize] {
                        Some(p) => p,
                        None => {
                            let l = self.node(None);
                            let r = self.node(None);
                            self.arrow[rt as usize] = Some((l, r));
                            for k in 0..self.psi[rt as usize].len() {
                                let j = self.psi[rt as usize][k].0;
                                self.work.push(Work::Expand(j, rt));
                            }
                            (l, r)
                        }
                    };
                    self.work.push(Work::Relate(i, xl, tl));
                    self.work.push(Work::Relate(i, xr, tr));
                }
            }
        }
        self.check_depth(max_depth)
    }

    /// Depth of every class reachable from an original variable; fails on
    /// cycles and on bounded variables deeper than `max_depth`.
    fn check_depth(&mut self, max_depth: usize) -> Result<(), Failure> {
        let mut depth: HashMap<u32, usize> = HashMap::new();
        let mut on_path: HashMap<u32, bool> = HashMap::new();
        let roots: Vec<(Var, u32)> = self.var_nodes.iter().map(|(v, n)| (*v, *n)).collect();
        for (var, start) in roots {
            let start = self.find(start);
            let mut stack = if depth.contains_key(&start) { vec![] } else { vec![(start, false)] };
            while let Some((n, children_done)) = stack.pop() {
                if children_done {
                    let d = match self.arrow[n as usize] {
                        None => 0,
                        Some((l, r)) => {
                            let (l, r) = (self.find(l), self.find(r));
                            1 + depth[&l].max(depth[&r])
                        }
                    };
                    on_path.insert(n, false);
                    depth.insert(n, d);
                    continue;
                }
                if depth.contains_key(&n) {
                    continue;
                }
                if on_path.get(&n) == Some(&true) {
                    return Err(Failure::Cyclic);
                }
                on_path.insert(n, true);
                stack.push((n, true));
                if let Some((l, r)) = self.arrow[n as usize] {
                    for c in [r, l] {
                        let c = self.find(c);
                        if !depth.contains_key(&c) {
                            if on_path.get(&c) == Some(&true) {
                                return Err(Failure::Cyclic);
                            }
                            stack.push((c, false));
                        }
                    }
                }
            }
            if depth[&start] > max_depth && !self.unbounded.contains(&var) {
                return Err(Failure::TooDeep);
            }
        }
        Ok(())
    }

    pub fn solve(self, max_depth: usize) -> Option<Solved> {
        self.solve_detailed(max_depth).ok()
    }

    pub fn solve_detailed(mut self, max_depth: usize) -> Result<Solved, Failure> {
        self.saturate(max_depth)?;
        let mut fresh_base = self.var_nodes.keys().next_back().map_or(0, |v| v.0 + 1).max(self.fresh_floor);
        // leaf classes keep the smallest original variable they contain
        let mut leaf_name: HashMap<u32, Var> = HashMap::new();
        let vars: Vec<(Var, u32)> = self.var_nodes.iter().map(|(v, n)| (*v, *n)).collect();
        for &(v, n) in &vars {
            let r = self.find(n);
            leaf_name.entry(r).or_insert(v);
        }
        let mut extract = |cl: &mut Closure, root: u32, budget: &mut usize| -> Result<Term, Failure> {
            let mut toks = Vec::new();
            let mut stack = vec![root];
            while let Some(n) = stack.pop() {
                let n = cl.find(n);
                if toks.len() >= *budget {
                    return Err(Failure::Budget);
                }
                match cl.arrow[n as usize] {
                    Some((l, r)) => {
                        toks.push(u32::MAX);
                        stack.push(r);
                        stack.push(l);
                    }
                    None => {
                        let v = *leaf_name.entry(n).or_insert_with(|| {
                            fresh_base += 1;
                            Var(fresh_base - 1)
                        });
                        toks.push(v.0);
                    }
                }
            }
            *budget -= toks.len();
            Ok(Term::from_tokens(toks))
        };
        let mut budget = TOKEN_BUDGET;
        let mut phi = Substitution::new();
        for &(v, n) in &vars {
            let r = self.find(n);
            let t = extract(&mut self, r, &mut budget)?;
            phi.insert(v, t);
        }
        let mut psi = vec![Substitution::new(); self.n_psi];
        // only leaf classes need explicit images; arrows follow structurally
        let mut leaves: Vec<u32> = Vec::new();
        for n in 0..self.parent.len() as u32 {
            if self.find(n) == n && self.arrow[n as usize].is_none() && !self.psi[n as usize].is_empty() {
                leaves.push(n);
            }
        }
        for n in leaves {
            for k in 0..self.psi[n as usize].len() {
                let (i, t) = self.psi[n as usize][k];
                let src = extract(&mut self, n, &mut budget)?.as_var().expect("leaf class");
                let rt = self.find(t);
                let img = extract(&mut self, rt, &mut budget)?;
                psi[i as usize].insert(src, img);
            }
        }
        Ok(Solved { phi, psi })
    }
}
