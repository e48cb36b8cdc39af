//! Simple semi-unification and the two-inequality fragments of
//! semi-unification, with the reductions between them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::closure::Closure;
use crate::cssm::{CssmMachine, SimpleInstruction};
use crate::error::ParseError;
use crate::smn::State;
use crate::term::{
    apply, is_identifier, match_terms, parse_binding, Names, Substitution, SuInstance, Term, Var,
};

/// `⟨a|α|ε⟩ ≐ ⟨ε|β|b⟩`
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimpleConstraint {
    pub a: u8,
    pub alpha: Var,
    pub beta: Var,
    pub b: u8,
}

impl SimpleConstraint {
    pub fn new(a: u8, alpha: Var, beta: Var, b: u8) -> Self {
        assert!(a < 2 && b < 2, "symbols are binary");
        SimpleConstraint { a, alpha, beta, b }
    }

    pub fn display<'a>(&'a self, names: &'a Names) -> impl fmt::Display + 'a {
        ConstraintDisplay(self, names)
    }
}

struct ConstraintDisplay<'a>(&'a SimpleConstraint, &'a Names);

impl fmt::Display for ConstraintDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.0;
        write!(f, "⟨{}|{}|ε⟩ ≐ ⟨ε|{}|{}⟩", c.a, self.1.name(c.alpha), self.1.name(c.beta), c.b)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SsuInstance {
    pub constraints: BTreeSet<SimpleConstraint>,
}

impl SsuInstance {
    pub fn new(constraints: impl IntoIterator<Item = SimpleConstraint>) -> Self {
        SsuInstance { constraints: constraints.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.constraints.iter().flat_map(|c| [c.alpha, c.beta]).collect()
    }

    /// Constraints ordered by symbols and variable names, independent of
    /// how the names were numbered.
    pub fn ordered(&self, names: &Names) -> Vec<SimpleConstraint> {
        let mut out: Vec<_> = self.constraints.iter().copied().collect();
        out.sort_by_cached_key(|c| (c.a, names.name(c.alpha), names.name(c.beta), c.b));
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolutionTriple {
    pub phi: Substitution,
    pub psi0: Substitution,
    pub psi1: Substitution,
}

impl SolutionTriple {
    pub fn psi(&self, a: u8) -> &Substitution {
        if a == 0 {
            &self.psi0
        } else {
            &self.psi1
        }
    }

    fn max_var(&self) -> Option<Var> {
        [&self.phi, &self.psi0, &self.psi1].into_iter().filter_map(Substitution::max_var).max()
    }

    /// Renames variables by `rho` everywhere: in images of all three maps and
    /// in the domains of the matching maps.
    fn renamed(&self, rho: &Substitution) -> SolutionTriple {
        let rename_psi = |s: &Substitution| {
            s.iter()
                .map(|(v, t)| (rho.image(v).as_var().expect("renaming"), apply(rho, t)))
                .collect()
        };
        SolutionTriple {
            phi: self.phi.iter().map(|(v, t)| (v, apply(rho, t))).collect(),
            psi0: rename_psi(&self.psi0),
            psi1: rename_psi(&self.psi1),
        }
    }

    /// A copy in which no variable of `avoid` occurs; clashing variables are
    /// renamed to ones numbered from `floor` up.
    fn avoiding(&self, avoid: &BTreeSet<Var>, floor: u32) -> SolutionTriple {
        let mut next = floor.max(self.max_var().map_or(0, |v| v.0 + 1));
        let mut rho = Substitution::new();
        for v in avoid {
            rho.insert(*v, Term::var(Var(next)));
            next += 1;
        }
        self.renamed(&rho)
    }
}

/// `σ0 ≤ τ` and `σ1 ≤ τ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ru2Instance {
    pub sigma0: Term,
    pub sigma1: Term,
    pub tau: Term,
}

/// `σ ≤ τ0` and `σ ≤ τ1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lu2Instance {
    pub sigma: Term,
    pub tau0: Term,
    pub tau1: Term,
}

impl Ru2Instance {
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut v = self.sigma0.vars();
        v.extend(self.sigma1.vars());
        v.extend(self.tau.vars());
        v
    }
}

impl Lu2Instance {
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut v = self.sigma.vars();
        v.extend(self.tau0.vars());
        v.extend(self.tau1.vars());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemiuError {
    #[error("states `{0}` and `{1}` map to the same variable name")]
    NameClash(String, String),
    #[error("expected two inequalities with {0}")]
    NotUniform(&'static str),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub fn models(triple: &SolutionTriple, c: &SimpleConstraint) -> bool {
    let Some(child) = triple.phi.image(c.beta).child(c.b) else {
        return false;
    };
    apply(triple.psi(c.a), &triple.phi.image(c.alpha)) == child
}

pub fn check_ssu_solution(inst: &SsuInstance, triple: &SolutionTriple) -> bool {
    inst.constraints.iter().all(|c| models(triple, c))
}

/// Searches for a triple with `φ` of depth at most `depth` on the instance
/// variables.
///
/// Each constraint forces `φ(β)` to be an arrow and relates `ψ_a` from the
/// class of `α` to the `b`-side child. Saturating these requirements gives the
/// most general triple, so the answer is exact for the given bound. Invented
/// variables are numbered from one past the largest instance variable.
pub fn bounded_solve_ssu(inst: &SsuInstance, depth: usize) -> Option<SolutionTriple> {
    solve_ssu_from(inst, depth, 0)
}

/// [`bounded_solve_ssu`] with invented variables registered in `names`.
pub fn bounded_solve_ssu_in(inst: &SsuInstance, depth: usize, names: &mut Names) -> Option<SolutionTriple> {
    let t = solve_ssu_from(inst, depth, names.len() as u32)?;
    if let Some(v) = t.max_var() {
        names.cover(v);
    }
    Some(t)
}

fn solve_ssu_from(inst: &SsuInstance, depth: usize, floor: u32) -> Option<SolutionTriple> {
    let mut cl = Closure::new(2);
    cl.fresh_floor(floor);
    for c in &inst.constraints {
        let alpha = cl.var_node(c.alpha);
        let beta = cl.var_node(c.beta);
        let (arrow, l, r) = cl.fresh_arrow();
        cl.unify(beta, arrow);
        cl.relate(c.a as usize, alpha, if c.b == 0 { l } else { r });
    }
    let mut solved = cl.solve(depth)?;
    let psi1 = solved.psi.pop().unwrap();
    let psi0 = solved.psi.pop().unwrap();
    let triple = SolutionTriple { phi: solved.phi, psi0, psi1 };
    assert!(check_ssu_solution(inst, &triple), "closure produced a non-model");
    Some(triple)
}

/// Variable name for a machine state. Identifiers are kept; anything else
/// becomes `q_` followed by the hex bytes of the name.
pub fn state_var_name(s: &State) -> String {
    let name = s.as_str();
    if is_identifier(name) {
        name.to_string()
    } else {
        let hex: String = name.bytes().map(|b| format!("{b:02x}")).collect();
        format!("q_{hex}")
    }
}

/// One constraint per instruction; an instruction and its reverse give the
/// same constraint.
pub fn reduce_cssm_to_ssu(m: &CssmMachine, names: &mut Names) -> Result<SsuInstance, SemiuError> {
    let mut seen: BTreeMap<String, State> = BTreeMap::new();
    let mut var = |s: &State| -> Result<Var, SemiuError> {
        let name = state_var_name(s);
        match seen.get(&name) {
            Some(prev) if prev != s => return Err(SemiuError::NameClash(prev.as_str().into(), s.as_str().into())),
            Some(_) => {}
            None => {
                seen.insert(name.clone(), s.clone());
            }
        }
        Ok(names.intern(&name))
    };
    let mut out = BTreeSet::new();
    for ins in &m.instructions {
        let (a, p, q, b) = match ins {
            SimpleInstruction::Lr { a, p, q, b } => (*a, p, q, *b),
            SimpleInstruction::Rl { b, p, q, a } => (*a, q, p, *b),
        };
        out.insert(SimpleConstraint::new(a, var(p)?, var(q)?, b));
    }
    Ok(SsuInstance { constraints: out })
}

/// Prefix of the fresh variables introduced for each constraint.
pub const GAMMA_PREFIX: &str = "g_";
/// Prefix of the two fresh variables of the left-uniform encoding.
pub const ALPHA_PREFIX: &str = "a_";

/// Encodes all constraints into two inequalities sharing the right-hand side
/// `τ = β1 -> ... -> βn`. Constraints are taken in [`SsuInstance::ordered`]
/// order.
///
/// An empty instance becomes `x ≤ x, x ≤ x` for one fresh `x`.
pub fn reduce_ssu_to_ru2(inst: &SsuInstance, names: &mut Names) -> Ru2Instance {
    if inst.is_empty() {
        let x = Term::var(names.fresh(GAMMA_PREFIX));
        return Ru2Instance { sigma0: x.clone(), sigma1: x.clone(), tau: x };
    }
    let mut tau = Vec::new();
    let mut sigma = [Vec::new(), Vec::new()];
    for c in inst.ordered(names) {
        let gamma = Term::var(names.fresh(GAMMA_PREFIX));
        let alpha = Term::var(c.alpha);
        tau.push(Term::var(c.beta));
        for (j, side) in sigma.iter_mut().enumerate() {
            side.push(match (c.a as usize == j, c.b) {
                (true, 0) => Term::arrow(&alpha, &gamma),
                (true, _) => Term::arrow(&gamma, &alpha),
                (false, _) => gamma.clone(),
            });
        }
    }
    let [s0, s1] = sigma;
    Ru2Instance {
        sigma0: Term::chain(&s0).unwrap(),
        sigma1: Term::chain(&s1).unwrap(),
        tau: Term::chain(&tau).unwrap(),
    }
}

/// First `n - 1` heads of a right-nested chain, then the rest.
fn unchain(t: &Term, n: usize) -> Option<Vec<Term>> {
    let mut out = Vec::with_capacity(n);
    let mut cur = t.clone();
    for _ in 1..n {
        let (h, rest) = cur.split()?;
        out.push(h);
        cur = rest;
    }
    out.push(cur);
    Some(out)
}

/// Turns a model of `inst` into a solution of `reduce_ssu_to_ru2(inst)`.
///
/// `φ` is kept. Each matching map gains a binding for the fresh `γi`: the
/// other child of `φ(βi)` when the constraint uses this map, all of `φ(βi)`
/// otherwise.
pub fn transfer_ssu_to_ru2(
    inst: &SsuInstance,
    names: &Names,
    r: &Ru2Instance,
    triple: &SolutionTriple,
) -> Option<SolutionTriple> {
    if inst.is_empty() {
        return Some(triple.clone());
    }
    let order = inst.ordered(names);
    let n = order.len();
    let parts = [unchain(&r.sigma0, n)?, unchain(&r.sigma1, n)?];
    let mut gammas = Vec::with_capacity(n);
    for (i, c) in order.iter().enumerate() {
        gammas.push(parts[1 - c.a as usize][i].as_var()?);
    }
    let gamma_set: BTreeSet<Var> = gammas.iter().copied().collect();
    let floor = r.vars().last().map_or(0, |v| v.0 + 1);
    let mut out = triple.avoiding(&gamma_set, floor);
    for (c, &g) in order.iter().zip(&gammas) {
        let beta = out.phi.image(c.beta);
        let (l, rr) = beta.split()?;
        for j in 0..2u8 {
            let img = if c.a != j {
                beta.clone()
            } else if c.b == 0 {
                rr.clone()
            } else {
                l.clone()
            };
            if j == 0 { &mut out.psi0 } else { &mut out.psi1 }.insert(g, img);
        }
    }
    Some(out)
}

pub fn check_ru2_solution(r: &Ru2Instance, triple: &SolutionTriple) -> bool {
    let tau = apply(&triple.phi, &r.tau);
    apply(&triple.psi0, &apply(&triple.phi, &r.sigma0)) == tau
        && apply(&triple.psi1, &apply(&triple.phi, &r.sigma1)) == tau
}

pub fn check_lu2_solution(l: &Lu2Instance, triple: &SolutionTriple) -> bool {
    let sigma = apply(&triple.phi, &l.sigma);
    apply(&triple.psi0, &sigma) == apply(&triple.phi, &l.tau0)
        && apply(&triple.psi1, &sigma) == apply(&triple.phi, &l.tau1)
}

/// The two inequalities `σ0 ≤ τ, σ1 ≤ τ`.
pub fn reduce_ru2_to_semiu(r: &Ru2Instance) -> SuInstance {
    SuInstance { inequalities: vec![(r.sigma0.clone(), r.tau.clone()), (r.sigma1.clone(), r.tau.clone())] }
}

/// `σ' = σ0 -> σ1`, `τ0' = τ -> α1`, `τ1' = α0 -> τ` for fresh `α0, α1`.
pub fn reduce_ru2_to_lu2(r: &Ru2Instance, names: &mut Names) -> Lu2Instance {
    let a0 = Term::var(names.fresh(ALPHA_PREFIX));
    let a1 = Term::var(names.fresh(ALPHA_PREFIX));
    Lu2Instance {
        sigma: Term::arrow(&r.sigma0, &r.sigma1),
        tau0: Term::arrow(&r.tau, &a1),
        tau1: Term::arrow(&a0, &r.tau),
    }
}

pub fn lu2_to_semiu(l: &Lu2Instance) -> SuInstance {
    SuInstance { inequalities: vec![(l.sigma.clone(), l.tau0.clone()), (l.sigma.clone(), l.tau1.clone())] }
}

/// Reads the two inequalities back as a right-uniform pair.
pub fn ru2_from_semiu(inst: &SuInstance) -> Result<Ru2Instance, SemiuError> {
    match inst.inequalities.as_slice() {
        [(s0, t0), (s1, t1)] if t0 == t1 => Ok(Ru2Instance { sigma0: s0.clone(), sigma1: s1.clone(), tau: t0.clone() }),
        _ => Err(SemiuError::NotUniform("identical right-hand sides")),
    }
}

pub fn lu2_from_semiu(inst: &SuInstance) -> Result<Lu2Instance, SemiuError> {
    match inst.inequalities.as_slice() {
        [(s0, t0), (s1, t1)] if s0 == s1 => Ok(Lu2Instance { sigma: s0.clone(), tau0: t0.clone(), tau1: t1.clone() }),
        _ => Err(SemiuError::NotUniform("identical left-hand sides")),
    }
}

/// The fresh `α0, α1` of a reduced instance.
fn lu2_slots(l: &Lu2Instance) -> Option<(Var, Var)> {
    Some((l.tau1.child(0)?.as_var()?, l.tau0.child(1)?.as_var()?))
}

/// `φ'(α0) = ψ1(φ(σ0))`, `φ'(α1) = ψ0(φ(σ1))`, otherwise `φ' = φ`.
pub fn transfer_ru2_to_lu2(r: &Ru2Instance, l: &Lu2Instance, triple: &SolutionTriple) -> Option<SolutionTriple> {
    let (a0, a1) = lu2_slots(l)?;
    let floor = l.vars().last().map_or(0, |v| v.0 + 1);
    let mut out = triple.avoiding(&[a0, a1].into(), floor);
    let s0 = apply(&out.psi1, &apply(&out.phi, &r.sigma0));
    let s1 = apply(&out.psi0, &apply(&out.phi, &r.sigma1));
    out.phi.insert(a0, s0);
    out.phi.insert(a1, s1);
    Some(out)
}

/// A left-uniform solution solves the source pair unchanged.
pub fn transfer_lu2_to_ru2(triple: &SolutionTriple) -> SolutionTriple {
    triple.clone()
}

/// A right-uniform solution restricted to the constraint variables.
pub fn transfer_ru2_to_ssu(inst: &SsuInstance, triple: &SolutionTriple) -> SolutionTriple {
    let vars = inst.vars();
    SolutionTriple {
        phi: triple.phi.iter().filter(|(v, _)| vars.contains(v)).map(|(v, t)| (v, t.clone())).collect(),
        ..triple.clone()
    }
}

/// Matching maps for a two-inequality `φ`, or `None` if `φ` does not solve.
fn two_matchers(pairs: [(Term, Term); 2], phi: Substitution) -> Option<SolutionTriple> {
    let [(l0, r0), (l1, r1)] = pairs;
    let psi0 = match_terms(&apply(&phi, &l0), &apply(&phi, &r0))?;
    let psi1 = match_terms(&apply(&phi, &l1), &apply(&phi, &r1))?;
    Some(SolutionTriple { phi, psi0, psi1 })
}

/// Most general solution of two inequalities with the depth bound applied to
/// the variables of `bounded` only.
fn solve_pair(pairs: [(Term, Term); 2], bounded: &BTreeSet<Var>, depth: usize, floor: u32) -> Option<SolutionTriple> {
    let mut cl = Closure::new(2);
    cl.fresh_floor(floor);
    for (i, (l, r)) in pairs.iter().enumerate() {
        let a = cl.add_term(l);
        let b = cl.add_term(r);
        cl.relate(i, a, b);
        for v in l.vars().into_iter().chain(r.vars()) {
            if !bounded.contains(&v) {
                cl.unbounded(v);
            }
        }
    }
    let phi = cl.solve(depth)?.phi;
    let triple = two_matchers(pairs, phi);
    assert!(triple.is_some(), "closure produced a non-solution");
    triple
}

fn register(t: Option<SolutionTriple>, names: &mut Names) -> Option<SolutionTriple> {
    if let Some(v) = t.as_ref()?.max_var() {
        names.cover(v);
    }
    t
}

fn ru2_pairs(r: &Ru2Instance) -> [(Term, Term); 2] {
    [(r.sigma0.clone(), r.tau.clone()), (r.sigma1.clone(), r.tau.clone())]
}

fn lu2_pairs(l: &Lu2Instance) -> [(Term, Term); 2] {
    [(l.sigma.clone(), l.tau0.clone()), (l.sigma.clone(), l.tau1.clone())]
}

/// Bounded search with every instance variable of depth at most `depth`.
pub fn bounded_solve_ru2(r: &Ru2Instance, depth: usize) -> Option<SolutionTriple> {
    solve_pair(ru2_pairs(r), &r.vars(), depth, 0)
}

pub fn bounded_solve_ru2_in(r: &Ru2Instance, depth: usize, names: &mut Names) -> Option<SolutionTriple> {
    register(solve_pair(ru2_pairs(r), &r.vars(), depth, names.len() as u32), names)
}

/// Bounded search with every variable of depth at most `depth`, except
/// variables private to one of `τ0`, `τ1`.
///
/// A private variable is constrained by one inequality alone. In a reduced
/// instance these are the two slots that receive a whole matched copy of one
/// side, so their depth grows with the instance size rather than with the
/// solution.
pub fn bounded_solve_lu2(l: &Lu2Instance, depth: usize) -> Option<SolutionTriple> {
    solve_pair(lu2_pairs(l), &lu2_bounded(l), depth, 0)
}

pub fn bounded_solve_lu2_in(l: &Lu2Instance, depth: usize, names: &mut Names) -> Option<SolutionTriple> {
    register(solve_pair(lu2_pairs(l), &lu2_bounded(l), depth, names.len() as u32), names)
}

fn lu2_bounded(l: &Lu2Instance) -> BTreeSet<Var> {
    let shared = l.tau0.vars().intersection(&l.tau1.vars()).copied().collect::<BTreeSet<_>>();
    l.sigma.vars().union(&shared).copied().collect()
}

const FRESH_HEADER: &str = "# fresh-counter:";

fn header(names: &Names) -> String {
    format!("{FRESH_HEADER} {}\n", names.fresh_counter())
}

/// Restores the fresh counter recorded by [`header`].
fn read_header(src: &str, names: &mut Names) -> Result<(), ParseError> {
    for (n, line) in src.lines().enumerate() {
        if let Some(rest) = line.trim().strip_prefix(FRESH_HEADER) {
            let k = rest.trim().parse().map_err(|_| ParseError::new(n + 1, "bad fresh counter"))?;
            names.advance_fresh_counter(k);
        }
    }
    Ok(())
}

/// `a alpha beta b` per line, after a fresh-counter header.
pub fn render_ssu(inst: &SsuInstance, names: &Names) -> String {
    let mut out = header(names);
    for c in inst.ordered(names) {
        out.push_str(&format!("{} {} {} {}\n", c.a, names.name(c.alpha), names.name(c.beta), c.b));
    }
    out
}

pub fn parse_ssu(src: &str, names: &mut Names) -> Result<SsuInstance, ParseError> {
    read_header(src, names)?;
    let mut out = BTreeSet::new();
    for (n, line) in src.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| ParseError::new(n + 1, m);
        let w: Vec<&str> = line.split_whitespace().collect();
        let bit = |s: &str| match s {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            _ => Err(err("symbols must be 0 or 1")),
        };
        if w.len() != 4 {
            return Err(err("expected `a alpha beta b`"));
        }
        if !is_identifier(w[1]) || !is_identifier(w[2]) {
            return Err(err("variables must be identifiers"));
        }
        let (a, b) = (bit(w[0])?, bit(w[3])?);
        out.insert(SimpleConstraint::new(a, names.intern(w[1]), names.intern(w[2]), b));
    }
    Ok(SsuInstance { constraints: out })
}

pub fn render_ru2(r: &Ru2Instance, names: &Names) -> String {
    format!("{}{}", header(names), reduce_ru2_to_semiu(r).render(names))
}

pub fn render_lu2(l: &Lu2Instance, names: &Names) -> String {
    format!("{}{}", header(names), lu2_to_semiu(l).render(names))
}

pub fn render_su(inst: &SuInstance, names: &Names) -> String {
    format!("{}{}", header(names), inst.render(names))
}

pub fn parse_su(src: &str, names: &mut Names) -> Result<SuInstance, ParseError> {
    read_header(src, names)?;
    crate::term::parse_su_instance(src, names)
}

pub fn parse_ru2(src: &str, names: &mut Names) -> Result<Ru2Instance, SemiuError> {
    ru2_from_semiu(&parse_su(src, names)?)
}

pub fn parse_lu2(src: &str, names: &mut Names) -> Result<Lu2Instance, SemiuError> {
    lu2_from_semiu(&parse_su(src, names)?)
}

/// Lines `phi v = t`, `psi0 v = t`, `psi1 v = t`.
pub fn render_triple(t: &SolutionTriple, names: &Names) -> String {
    let mut out = String::new();
    for (tag, s) in [("phi", &t.phi), ("psi0", &t.psi0), ("psi1", &t.psi1)] {
        for (v, img) in s.iter() {
            out.push_str(&format!("{tag} {} = {}\n", names.name(v), img.display(names)));
        }
    }
    out
}

pub fn parse_triple(src: &str, names: &mut Names) -> Result<SolutionTriple, ParseError> {
    let mut t = SolutionTriple::default();
    for (n, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| ParseError::new(n + 1, m);
        let (tag, rest) = line.split_once(char::is_whitespace).ok_or_else(|| err("expected `phi|psi0|psi1 v = term`".into()))?;
        let target = match tag {
            "phi" => &mut t.phi,
            "psi0" => &mut t.psi0,
            "psi1" => &mut t.psi1,
            _ => return Err(err(format!("unknown map `{tag}`"))),
        };
        let (v, img) = parse_binding(rest, names).map_err(err)?;
        target.insert(v, img);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{bounded_solve_su, check_su_solution, parse_term};

    fn t(src: &str, n: &mut Names) -> Term {
        parse_term(src, n).unwrap()
    }

    fn yes(n: &mut Names) -> SsuInstance {
        let (a, b) = (n.intern("alpha"), n.intern("beta"));
        SsuInstance::new([SimpleConstraint::new(0, a, b, 1)])
    }

    fn no(n: &mut Names) -> SsuInstance {
        let a = n.intern("alpha");
        SsuInstance::new([SimpleConstraint::new(0, a, a, 1)])
    }

    #[test]
    fn known_triple_models() {
        let mut n = Names::new();
        let inst = yes(&mut n);
        let (a, b) = (n.lookup("alpha").unwrap(), n.lookup("beta").unwrap());
        let triple = SolutionTriple {
            phi: [(b, t("beta1 -> beta2", &mut n))].into_iter().collect(),
            psi0: [(a, t("beta2", &mut n))].into_iter().collect(),
            psi1: Substitution::new(),
        };
        assert!(check_ssu_solution(&inst, &triple));
        assert!(!check_ssu_solution(&no(&mut n), &SolutionTriple::default()));
        assert!(check_ssu_solution(&SsuInstance::default(), &SolutionTriple::default()));
        // bare variable on the right
        assert!(!models(&SolutionTriple::default(), inst.constraints.first().unwrap()));
    }

    #[test]
    fn solver_examples() {
        let mut n = Names::new();
        let triple = bounded_solve_ssu(&yes(&mut n), 1).unwrap();
        assert!(check_ssu_solution(&yes(&mut n), &triple));
        assert!(bounded_solve_ssu(&no(&mut n), 4).is_none());
        assert_eq!(bounded_solve_ssu(&SsuInstance::default(), 0), Some(SolutionTriple::default()));
    }

    #[test]
    fn cssm_reduction_examples() {
        let p = State::new("p");
        let q = State::new("q");
        let fwd = SimpleInstruction::Lr { a: 0, p: p.clone(), q: q.clone(), b: 1 };
        let m = CssmMachine { instructions: vec![fwd.clone(), fwd.reverse()], claimed_confluent: false };
        let mut n = Names::new();
        let inst = reduce_cssm_to_ssu(&m, &mut n).unwrap();
        let want = SimpleConstraint::new(0, n.lookup("p").unwrap(), n.lookup("q").unwrap(), 1);
        assert_eq!(inst, SsuInstance::new([want]));
        assert!(reduce_cssm_to_ssu(&CssmMachine::default(), &mut n).unwrap().is_empty());
        let loop_ = CssmMachine {
            instructions: vec![SimpleInstruction::Lr { a: 0, p: p.clone(), q: p.clone(), b: 1 }],
            claimed_confluent: false,
        };
        let inst = reduce_cssm_to_ssu(&loop_, &mut n).unwrap();
        let pv = n.lookup("p").unwrap();
        assert_eq!(inst, SsuInstance::new([SimpleConstraint::new(0, pv, pv, 1)]));
    }

    #[test]
    fn odd_state_names_are_mangled() {
        assert_eq!(state_var_name(&State::new("d3__m")), "d3__m");
        assert_eq!(state_var_name(&State::new("x'")), "q_7827");
    }

    #[test]
    fn ru2_formula_at_one_constraint() {
        let mut n = Names::new();
        let inst = yes(&mut n);
        let r = reduce_ssu_to_ru2(&inst, &mut n);
        let g = n.name(r.sigma1.as_var().unwrap());
        assert!(g.starts_with(GAMMA_PREFIX));
        assert_eq!(r.sigma0, t(&format!("{g} -> alpha"), &mut n));
        assert_eq!(r.tau, t("beta", &mut n));
    }

    #[test]
    fn ru2_chains_in_set_order() {
        let mut n = Names::new();
        let (x, y, z) = (n.intern("x"), n.intern("y"), n.intern("z"));
        let inst = SsuInstance::new([SimpleConstraint::new(1, x, y, 0), SimpleConstraint::new(0, y, z, 0)]);
        let r = reduce_ssu_to_ru2(&inst, &mut n);
        // a = 0 sorts first
        assert_eq!(r.tau, t("z -> y", &mut n));
        assert_eq!(r.sigma0, t("(y -> g_0) -> g_1", &mut n));
        assert_eq!(r.sigma1, t("g_0 -> x -> g_1", &mut n));
    }

    #[test]
    fn empty_ssu_is_trivial_ru2() {
        let mut n = Names::new();
        let r = reduce_ssu_to_ru2(&SsuInstance::default(), &mut n);
        assert!(r.tau.as_var().is_some() && r.sigma0 == r.tau && r.sigma1 == r.tau);
        assert!(check_ru2_solution(&r, &SolutionTriple::default()));
    }

    #[test]
    fn forward_transfers_validate() {
        let mut n = Names::new();
        let inst = yes(&mut n);
        let triple = bounded_solve_ssu_in(&inst, 1, &mut n).unwrap();
        let r = reduce_ssu_to_ru2(&inst, &mut n);
        let t2 = transfer_ssu_to_ru2(&inst, &n, &r, &triple).unwrap();
        assert!(check_ru2_solution(&r, &t2));
        assert!(check_su_solution(&reduce_ru2_to_semiu(&r), &t2.phi));
        let l = reduce_ru2_to_lu2(&r, &mut n);
        let t3 = transfer_ru2_to_lu2(&r, &l, &t2).unwrap();
        assert!(check_lu2_solution(&l, &t3));
        assert!(check_ru2_solution(&r, &transfer_lu2_to_ru2(&t3)));
        assert!(check_ssu_solution(&inst, &transfer_ru2_to_ssu(&inst, &t2)));
    }

    #[test]
    fn transfers_survive_name_collisions() {
        // the plain solver numbers its variables right after the instance,
        // which is exactly where the reductions allocate theirs
        let mut n = Names::new();
        let inst = yes(&mut n);
        let triple = bounded_solve_ssu(&inst, 1).unwrap();
        let r = reduce_ssu_to_ru2(&inst, &mut n);
        let t2 = transfer_ssu_to_ru2(&inst, &n, &r, &triple).unwrap();
        assert!(check_ru2_solution(&r, &t2));
        let sol = bounded_solve_ru2(&r, 2).unwrap();
        let l = reduce_ru2_to_lu2(&r, &mut n);
        let t3 = transfer_ru2_to_lu2(&r, &l, &sol).unwrap();
        assert!(check_lu2_solution(&l, &t3));
    }

    #[test]
    fn negative_stays_negative() {
        let mut n = Names::new();
        let inst = no(&mut n);
        let r = reduce_ssu_to_ru2(&inst, &mut n);
        assert!(bounded_solve_ru2(&r, 4).is_none());
        assert!(bounded_solve_su(&reduce_ru2_to_semiu(&r), 4).is_none());
        let l = reduce_ru2_to_lu2(&r, &mut n);
        assert!(bounded_solve_lu2(&l, 4).is_none());
    }

    #[test]
    fn lu2_formula() {
        let mut n = Names::new();
        let r = Ru2Instance { sigma0: t("a", &mut n), sigma1: t("b", &mut n), tau: t("b -> b", &mut n) };
        let l = reduce_ru2_to_lu2(&r, &mut n);
        assert_eq!(l.sigma, t("a -> b", &mut n));
        assert_eq!(l.tau0, t("(b -> b) -> a_1", &mut n));
        assert_eq!(l.tau1, t("a_0 -> b -> b", &mut n));
        let id = Lu2Instance { sigma: t("a", &mut n), tau0: t("a", &mut n), tau1: t("a", &mut n) };
        assert!(check_lu2_solution(&id, &SolutionTriple::default()));
        let id = Ru2Instance { sigma0: t("a", &mut n), sigma1: t("a", &mut n), tau: t("a", &mut n) };
        assert!(check_ru2_solution(&id, &SolutionTriple::default()));
        assert_eq!(reduce_ru2_to_semiu(&id).inequalities.len(), 2);
    }

    #[test]
    fn formats_round_trip() {
        let mut n = Names::new();
        let (x, y) = (n.intern("x"), n.intern("y"));
        let inst = SsuInstance::new([SimpleConstraint::new(1, x, y, 0), SimpleConstraint::new(0, y, y, 1)]);
        let r = reduce_ssu_to_ru2(&inst, &mut n);
        let l = reduce_ru2_to_lu2(&r, &mut n);
        let text = render_ssu(&inst, &n);
        assert_eq!(text, "# fresh-counter: 4\n0 y y 1\n1 x y 0\n");
        let mut m = Names::new();
        assert_eq!(render_ssu(&parse_ssu(&text, &mut m).unwrap(), &m), text);
        for src in [render_ru2(&r, &n), render_lu2(&l, &n), render_su(&reduce_ru2_to_semiu(&r), &n)] {
            let mut m = Names::new();
            assert_eq!(render_su(&parse_su(&src, &mut m).unwrap(), &m), src);
        }
        let mut m = Names::new();
        let r2 = parse_ru2(&render_ru2(&r, &n), &mut m).unwrap();
        assert_eq!(render_ru2(&r2, &m), render_ru2(&r, &n));
        let mut m = Names::new();
        let l2 = parse_lu2(&render_lu2(&l, &n), &mut m).unwrap();
        assert_eq!(render_lu2(&l2, &m), render_lu2(&l, &n));
        // the restored counter keeps later fresh names apart
        let g = m.fresh(GAMMA_PREFIX);
        assert_eq!(m.name(g), "g_4");
        assert!(parse_ssu("2 x y 0", &mut m).is_err());
        assert!(parse_ssu("0 x y", &mut m).is_err());
        assert!(parse_lu2("a <= b\nc <= b\n", &mut m).is_err());
        assert!(parse_ru2("a <= b\na <= c\n", &mut m).is_err());

        let triple = bounded_solve_ssu_in(&inst_yes_like(&mut n), 2, &mut n).unwrap();
        let text = render_triple(&triple, &n);
        let back = parse_triple(&text, &mut n).unwrap();
        assert_eq!(back, triple);
        assert!(parse_triple("chi a = b", &mut n).is_err());
    }

    fn inst_yes_like(n: &mut Names) -> SsuInstance {
        let (x, y) = (n.intern("x"), n.intern("y"));
        SsuInstance::new([SimpleConstraint::new(1, x, y, 0)])
    }
}
