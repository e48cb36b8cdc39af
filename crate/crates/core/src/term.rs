//! First-order terms over a single binary arrow, substitutions, matching and
//! semi-unification solution checking.
//!
//! A term is stored as a flat token array in prefix order: `a -> b -> c` is
//! `[->, a, ->, b, c]`. Reduction outputs contain right-nested chains with tens
//! of thousands of arrows, so every operation here is a linear scan rather
//! than a recursive walk.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::ParseError;

const ARROW: u32 = u32::MAX;

/// Variable identifier. Names live in a separate [`Names`] table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Term {
    toks: Arc<[u32]>,
}

/// Length of the subterm starting at `start`.
fn span(toks: &[u32], start: usize) -> usize {
    let mut need = 1usize;
    let mut i = start;
    while need > 0 {
        if toks[i] == ARROW {
            need += 1;
        } else {
            need -= 1;
        }
        i += 1;
    }
    i - start
}

impl Term {
    pub fn var(v: Var) -> Term {
        assert!(v.0 != ARROW, "variable id reserved");
        Term { toks: Arc::from(vec![v.0]) }
    }

    pub fn arrow(left: &Term, right: &Term) -> Term {
        let mut toks = Vec::with_capacity(1 + left.toks.len() + right.toks.len());
        toks.push(ARROW);
        toks.extend_from_slice(&left.toks);
        toks.extend_from_slice(&right.toks);
        Term { toks: toks.into() }
    }

    /// Right-associated chain `t1 -> (t2 -> ... -> tn)`, built in linear time.
    /// A single item is returned unchanged.
    pub fn chain(items: &[Term]) -> Option<Term> {
        let (last, init) = items.split_last()?;
        let total: usize = items.iter().map(|t| t.toks.len()).sum::<usize>() + init.len();
        let mut toks = Vec::with_capacity(total);
        for t in init {
            toks.push(ARROW);
            toks.extend_from_slice(&t.toks);
        }
        toks.extend_from_slice(&last.toks);
        Some(Term { toks: toks.into() })
    }

    pub(crate) fn from_tokens(toks: Vec<u32>) -> Term {
        debug_assert!(!toks.is_empty() && span(&toks, 0) == toks.len());
        Term { toks: toks.into() }
    }

    pub(crate) fn tokens(&self) -> &[u32] {
        &self.toks
    }

    pub fn as_var(&self) -> Option<Var> {
        match self.toks[0] {
            ARROW => None,
            v => Some(Var(v)),
        }
    }

    pub fn is_arrow(&self) -> bool {
        self.toks[0] == ARROW
    }

    /// Children of an arrow node.
    pub fn split(&self) -> Option<(Term, Term)> {
        if !self.is_arrow() {
            return None;
        }
        let l = span(&self.toks, 1);
        Some((
            Term { toks: self.toks[1..1 + l].into() },
            Term { toks: self.toks[1 + l..].into() },
        ))
    }

    /// Left child (`b = 0`) or right child (`b = 1`) of an arrow node.
    pub fn child(&self, b: u8) -> Option<Term> {
        self.split().map(|(l, r)| if b == 0 { l } else { r })
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        self.toks.len()
    }

    pub fn depth(&self) -> usize {
        let mut stack: Vec<usize> = Vec::new();
        for &t in self.toks.iter().rev() {
            if t == ARROW {
                let a = stack.pop().unwrap();
                let b = stack.pop().unwrap();
                stack.push(1 + a.max(b));
            } else {
                stack.push(0);
            }
        }
        stack.pop().unwrap()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.toks.iter().filter(|&&t| t != ARROW).map(|&t| Var(t)).collect()
    }

    pub fn display<'a>(&'a self, names: &'a Names) -> TermDisplay<'a> {
        TermDisplay { term: self, names }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, &self.toks, &|v: Var| format!("v{}", v.0))
    }
}

pub struct TermDisplay<'a> {
    term: &'a Term,
    names: &'a Names,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, &self.term.toks, &|v: Var| self.names.name(v))
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, toks: &[u32], name: &dyn Fn(Var) -> String) -> fmt::Result {
    // subterm sizes, so printing stays linear on left-nested terms too
    let mut sizes = vec![0usize; toks.len()];
    let mut stack: Vec<usize> = Vec::new();
    for i in (0..toks.len()).rev() {
        if toks[i] == ARROW {
            let a = stack.pop().unwrap();
            let b = stack.pop().unwrap();
            sizes[i] = 1 + a + b;
        } else {
            sizes[i] = 1;
        }
        stack.push(sizes[i]);
    }
    enum Work {
        At(usize),
        Text(&'static str),
    }
    let mut work = vec![Work::At(0)];
    while let Some(w) = work.pop() {
        match w {
            Work::Text(s) => f.write_str(s)?,
            Work::At(i) if toks[i] != ARROW => f.write_str(&name(Var(toks[i])))?,
            Work::At(i) => {
                let l = i + 1;
                let r = l + sizes[l];
                work.push(Work::At(r));
                work.push(Work::Text(" -> "));
                if toks[l] == ARROW {
                    work.push(Work::Text(")"));
                    work.push(Work::At(l));
                    work.push(Work::Text("("));
                } else {
                    work.push(Work::At(l));
                }
            }
        }
    }
    Ok(())
}

/// Finite map from variables to terms; unmapped variables are fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a binding; identity bindings are dropped.
    pub fn insert(&mut self, v: Var, t: Term) {
        if t.as_var() == Some(v) {
            self.map.remove(&v);
        } else {
            self.map.insert(v, t);
        }
    }

    pub fn get(&self, v: Var) -> Option<&Term> {
        self.map.get(&v)
    }

    pub fn image(&self, v: Var) -> Term {
        self.map.get(&v).cloned().unwrap_or_else(|| Term::var(v))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &Term)> {
        self.map.iter().map(|(v, t)| (*v, t))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, t: &Term) -> Term {
        apply(self, t)
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &Substitution) -> Substitution {
        let mut out = Substitution::new();
        for (v, t) in &self.map {
            if !inner.map.contains_key(v) {
                out.insert(*v, t.clone());
            }
        }
        for (v, t) in &inner.map {
            out.insert(*v, apply(self, t));
        }
        out
    }

    /// Largest variable mentioned in the domain or any image.
    pub fn max_var(&self) -> Option<Var> {
        self.map
            .iter()
            .flat_map(|(v, t)| std::iter::once(*v).chain(t.vars().into_iter().next_back()))
            .max()
    }
}

impl FromIterator<(Var, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        let mut s = Substitution::new();
        for (v, t) in iter {
            s.insert(v, t);
        }
        s
    }
}

pub fn apply(s: &Substitution, t: &Term) -> Term {
    if s.is_empty() {
        return t.clone();
    }
    let mut out = Vec::with_capacity(t.toks.len());
    for &tok in t.toks.iter() {
        match s.map.get(&Var(tok)) {
            Some(img) if tok != ARROW => out.extend_from_slice(&img.toks),
            _ => out.push(tok),
        }
    }
    Term { toks: out.into() }
}

/// First-order matching: the minimal `s` with `apply(s, pattern) = target`.
pub fn match_terms(pattern: &Term, target: &Term) -> Option<Substitution> {
    let p = &pattern.toks;
    let t = &target.toks;
    let mut bound: HashMap<u32, (usize, usize)> = HashMap::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < p.len() {
        if p[i] == ARROW {
            if t[j] != ARROW {
                return None;
            }
            i += 1;
            j += 1;
        } else {
            let len = span(t, j);
            match bound.get(&p[i]) {
                Some(&(s0, l0)) => {
                    if l0 != len || t[s0..s0 + l0] != t[j..j + len] {
                        return None;
                    }
                }
                None => {
                    bound.insert(p[i], (j, len));
                }
            }
            i += 1;
            j += len;
        }
    }
    Some(
        bound
            .into_iter()
            .map(|(v, (s, l))| (Var(v), Term { toks: t[s..s + l].into() }))
            .collect(),
    )
}

/// Semi-unification instance: inequalities `lhs <= rhs`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SuInstance {
    pub inequalities: Vec<(Term, Term)>,
}

impl SuInstance {
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for (l, r) in &self.inequalities {
            out.extend(l.vars());
            out.extend(r.vars());
        }
        out
    }

    pub fn render(&self, names: &Names) -> String {
        let mut out = String::new();
        for (l, r) in &self.inequalities {
            out.push_str(&format!("{} <= {}\n", l.display(names), r.display(names)));
        }
        out
    }
}

pub fn check_su_solution(inst: &SuInstance, phi: &Substitution) -> bool {
    inst.inequalities
        .iter()
        .all(|(l, r)| match_terms(&apply(phi, l), &apply(phi, r)).is_some())
}

/// Searches for `φ` with every instance variable mapped to a term of depth at
/// most `depth`.
///
/// Rather than enumerating candidate maps, the search saturates the structure
/// that any solution is forced to have: each inequality owns a matching
/// function, matching an arrow forces an arrow, and a function maps each class
/// to one class. The saturated structure is the most general solution, so it
/// exists within the bound iff some solution does. Growth past the bound or a
/// cyclic (infinite) term ends the search with `None`.
///
/// Variables introduced by the solution are numbered from one past the largest
/// instance variable, in order of first appearance.
pub fn bounded_solve_su(inst: &SuInstance, depth: usize) -> Option<Substitution> {
    solve_su_from(inst, depth, 0)
}

/// [`bounded_solve_su`] with invented variables named in `names`, so they
/// cannot be confused with any name the table already holds.
pub fn bounded_solve_su_in(inst: &SuInstance, depth: usize, names: &mut Names) -> Option<Substitution> {
    let phi = solve_su_from(inst, depth, names.len() as u32)?;
    if let Some(v) = phi.max_var() {
        names.cover(v);
    }
    Some(phi)
}

fn solve_su_from(inst: &SuInstance, depth: usize, floor: u32) -> Option<Substitution> {
    let mut cl = crate::closure::Closure::new(inst.inequalities.len());
    cl.fresh_floor(floor);
    for (i, (l, r)) in inst.inequalities.iter().enumerate() {
        let a = cl.add_term(l);
        let b = cl.add_term(r);
        cl.relate(i, a, b);
    }
    let phi = cl.solve(depth)?.phi;
    assert!(check_su_solution(inst, &phi), "closure produced a non-solution");
    Some(phi)
}

/// Bidirectional name table for variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Names {
    by_id: Vec<String>,
    by_name: HashMap<String, Var>,
    fresh_counter: u64,
}

impl Names {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> Var {
        if let Some(&v) = self.by_name.get(name) {
            return v;
        }
        let v = Var(self.by_id.len() as u32);
        self.by_id.push(name.to_string());
        self.by_name.insert(name.to_string(), v);
        v
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.by_name.get(name).copied()
    }

    /// Name of `v`; ids past the table render as `_<id>`.
    pub fn name(&self, v: Var) -> String {
        match self.by_id.get(v.0 as usize) {
            Some(s) => s.clone(),
            None => format!("_{}", v.0),
        }
    }

    /// A new variable named `<prefix><n>` for the next unused `n`.
    pub fn fresh(&mut self, prefix: &str) -> Var {
        loop {
            let candidate = format!("{prefix}{}", self.fresh_counter);
            self.fresh_counter += 1;
            if !self.by_name.contains_key(&candidate) {
                return self.intern(&candidate);
            }
        }
    }

    /// Number of fresh names handed out so far.
    pub fn fresh_counter(&self) -> u64 {
        self.fresh_counter
    }

    /// Continues fresh numbering from at least `n`, as recorded in a file
    /// header.
    pub fn advance_fresh_counter(&mut self, n: u64) {
        self.fresh_counter = self.fresh_counter.max(n);
    }

    /// Gives every id up to and including `v` a name, so solver-generated
    /// variables print unambiguously.
    pub fn cover(&mut self, v: Var) {
        while self.by_id.len() <= v.0 as usize {
            let id = self.by_id.len();
            let mut name = format!("_{id}");
            while self.by_name.contains_key(&name) {
                name.push('_');
            }
            self.by_name.insert(name.clone(), Var(id as u32));
            self.by_id.push(name);
        }
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Ident(&'a str),
    Arrow,
    Open,
    Close,
}

fn lex(src: &str) -> Result<Vec<Tok<'_>>, String> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'(' {
            out.push(Tok::Open);
            i += 1;
        } else if c == b')' {
            out.push(Tok::Close);
            i += 1;
        } else if c == b'-' && bytes.get(i + 1) == Some(&b'>') {
            out.push(Tok::Arrow);
            i += 2;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Ident(&src[start..i]));
        } else {
            return Err(format!("unexpected character {:?}", c as char));
        }
    }
    Ok(out)
}

/// Parses a term; `->` associates to the right.
pub fn parse_term(src: &str, names: &mut Names) -> Result<Term, String> {
    let toks = lex(src)?;
    // one frame per open parenthesis: atoms of the current chain and whether
    // an atom is expected next
    let mut frames: Vec<(Vec<Term>, bool)> = vec![(Vec::new(), true)];
    for tok in toks {
        let nested = frames.len() > 1;
        let (atoms, expect_atom) = frames.last_mut().unwrap();
        match tok {
            Tok::Ident(name) if *expect_atom => {
                atoms.push(Term::var(names.intern(name)));
                *expect_atom = false;
            }
            Tok::Open if *expect_atom => frames.push((Vec::new(), true)),
            Tok::Arrow if !*expect_atom => *expect_atom = true,
            Tok::Close if !*expect_atom && nested => {
                let (atoms, _) = frames.pop().unwrap();
                let t = Term::chain(&atoms).unwrap();
                let (parent, expect) = frames.last_mut().unwrap();
                parent.push(t);
                *expect = false;
            }
            other => return Err(format!("unexpected token {other:?}")),
        }
    }
    if frames.len() != 1 {
        return Err("unbalanced parentheses".into());
    }
    let (atoms, expect_atom) = frames.pop().unwrap();
    if expect_atom {
        return Err(if atoms.is_empty() { "empty term".into() } else { "dangling arrow".into() });
    }
    Ok(Term::chain(&atoms).unwrap())
}

/// Parses `sigma <= tau` lines; blank lines and `#` comments are skipped.
pub fn parse_su_instance(src: &str, names: &mut Names) -> Result<SuInstance, ParseError> {
    let mut inst = SuInstance::default();
    for (n, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| ParseError::new(n + 1, m);
        let (l, r) = line.split_once("<=").ok_or_else(|| err("expected `<=`".into()))?;
        let l = parse_term(l, names).map_err(err)?;
        let r = parse_term(r, names).map_err(err)?;
        inst.inequalities.push((l, r));
    }
    Ok(inst)
}

/// Renders a substitution as `v = term` lines in variable order.
pub fn render_substitution(s: &Substitution, names: &Names) -> String {
    let mut out = String::new();
    for (v, t) in s.iter() {
        out.push_str(&format!("{} = {}\n", names.name(v), t.display(names)));
    }
    out
}

/// Parses `v = term` lines, the inverse of [`render_substitution`].
pub fn parse_substitution(src: &str, names: &mut Names) -> Result<Substitution, ParseError> {
    let mut s = Substitution::new();
    for (n, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (v, t) = parse_binding(line, names).map_err(|m| ParseError::new(n + 1, m))?;
        s.insert(v, t);
    }
    Ok(s)
}

pub(crate) fn parse_binding(line: &str, names: &mut Names) -> Result<(Var, Term), String> {
    let (v, t) = line.split_once('=').ok_or("expected `<variable> = <term>`")?;
    let v = v.trim();
    if !is_identifier(v) {
        return Err(format!("`{v}` is not a variable"));
    }
    Ok((names.intern(v), parse_term(t, names)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(src: &str, names: &mut Names) -> Term {
        parse_term(src, names).unwrap()
    }

    #[test]
    fn apply_examples() {
        let mut n = Names::new();
        let ab = t("a -> b", &mut n);
        assert_eq!(apply(&Substitution::new(), &ab), ab);
        let a = n.lookup("a").unwrap();
        let s: Substitution = [(a, t("a -> a", &mut n))].into_iter().collect();
        assert_eq!(apply(&s, &t("a", &mut n)), t("a -> a", &mut n));
        let s: Substitution = [(a, t("b -> b", &mut n))].into_iter().collect();
        assert_eq!(apply(&s, &t("a -> a", &mut n)), t("(b -> b) -> (b -> b)", &mut n));
    }

    #[test]
    fn match_examples() {
        let mut n = Names::new();
        let a = t("a", &mut n);
        let m = match_terms(&a, &t("a -> a", &mut n)).unwrap();
        assert_eq!(m.image(a.as_var().unwrap()), t("a -> a", &mut n));
        assert!(match_terms(&t("a -> a", &mut n), &a).is_none());
        assert!(match_terms(&t("a -> a", &mut n), &t("(b -> b) -> (b -> c)", &mut n)).is_none());
    }

    #[test]
    fn check_examples() {
        let mut n = Names::new();
        let inst = parse_su_instance("a <= a -> a\na <= a -> a -> a\n", &mut n).unwrap();
        assert!(check_su_solution(&inst, &Substitution::new()));
        let neg = parse_su_instance("a -> a <= a", &mut n).unwrap();
        assert!(!check_su_solution(&neg, &Substitution::new()));
        let a = n.lookup("a").unwrap();
        let s: Substitution = [(a, t("b -> c", &mut n))].into_iter().collect();
        assert!(!check_su_solution(&neg, &s));
        assert!(check_su_solution(&SuInstance::default(), &Substitution::new()));
    }

    #[test]
    fn solve_examples() {
        let mut n = Names::new();
        let pos = parse_su_instance("a <= a -> a", &mut n).unwrap();
        let phi = bounded_solve_su(&pos, 1).unwrap();
        assert!(check_su_solution(&pos, &phi));
        let neg = parse_su_instance("a -> a <= a", &mut n).unwrap();
        assert!(bounded_solve_su(&neg, 3).is_none());
        assert_eq!(bounded_solve_su(&SuInstance::default(), 0), Some(Substitution::new()));
    }

    #[test]
    fn printing_round_trips_and_brackets_left_arrows() {
        let mut n = Names::new();
        for src in ["a", "a -> b", "(a -> b) -> c", "a -> (b -> c) -> d", "((a -> a) -> a) -> a"] {
            let term = t(src, &mut n);
            let printed = term.display(&n).to_string();
            assert_eq!(printed, src);
            assert_eq!(t(&printed, &mut n), term);
        }
        assert_eq!(t("(a) -> ((b))", &mut n), t("a -> b", &mut n));
    }

    #[test]
    fn parse_rejects_garbage() {
        let mut n = Names::new();
        for bad in ["", "a ->", "-> a", "(a", "a)", "a b", "a -> $"] {
            assert!(parse_term(bad, &mut n).is_err(), "{bad}");
        }
    }

    #[test]
    fn long_chains_stay_iterative() {
        let mut n = Names::new();
        let items: Vec<Term> = (0..200_000).map(|i| Term::var(n.fresh(&format!("x{}_", i % 3)))).collect();
        let c = Term::chain(&items).unwrap();
        assert_eq!(c.depth(), 199_999);
        let printed = c.display(&n).to_string();
        assert_eq!(parse_term(&printed, &mut n).unwrap(), c);
        assert!(match_terms(&c, &c).is_some());
    }

    #[test]
    fn depth_and_children() {
        let mut n = Names::new();
        let x = t("(a -> b) -> c -> d", &mut n);
        assert_eq!(x.depth(), 2);
        assert_eq!(x.child(0).unwrap(), t("a -> b", &mut n));
        assert_eq!(x.child(1).unwrap(), t("c -> d", &mut n));
        assert!(t("a", &mut n).split().is_none());
    }

    #[test]
    fn fresh_names_skip_taken_ones() {
        let mut n = Names::new();
        n.intern("g0");
        let v = n.fresh("g");
        assert_eq!(n.name(v), "g1");
        n.cover(Var(5));
        assert_eq!(n.len(), 6);
    }
}
