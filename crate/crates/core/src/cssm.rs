//! Simple two-stack machines: one symbol moves from one stack to the other per
//! step. Shortening trades determinism for confluence by making every partial
//! look-ahead reversible.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::error::ParseError;
use crate::smn::{
    check_deterministic, check_length_preserving, parse_smn, render_smn, PCfg, Packed, SmnConfig, SmnInstruction,
    SmnMachine, State,
};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimpleInstruction {
    /// `⟨a|p|ε⟩ → ⟨ε|q|b⟩`
    Lr { a: u8, p: State, q: State, b: u8 },
    /// `⟨ε|p|b⟩ → ⟨a|q|ε⟩`
    Rl { b: u8, p: State, q: State, a: u8 },
}

impl SimpleInstruction {
    pub fn to_smn(&self) -> SmnInstruction {
        match self {
            SimpleInstruction::Lr { a, p, q, b } => SmnInstruction {
                lhs_left: vec![*a],
                from: p.clone(),
                lhs_right: vec![],
                rhs_left: vec![],
                to: q.clone(),
                rhs_right: vec![*b],
            },
            SimpleInstruction::Rl { b, p, q, a } => SmnInstruction {
                lhs_left: vec![],
                from: p.clone(),
                lhs_right: vec![*b],
                rhs_left: vec![*a],
                to: q.clone(),
                rhs_right: vec![],
            },
        }
    }

    pub fn from_smn(ins: &SmnInstruction) -> Option<Self> {
        let shape = (ins.lhs_left.as_slice(), ins.lhs_right.as_slice(), ins.rhs_left.as_slice(), ins.rhs_right.as_slice());
        match shape {
            (&[a], &[], &[], &[b]) => Some(SimpleInstruction::Lr { a, p: ins.from.clone(), q: ins.to.clone(), b }),
            (&[], &[b], &[a], &[]) => Some(SimpleInstruction::Rl { b, p: ins.from.clone(), q: ins.to.clone(), a }),
            _ => None,
        }
    }

    /// The instruction undoing this one.
    pub fn reverse(&self) -> Self {
        match self.clone() {
            SimpleInstruction::Lr { a, p, q, b } => SimpleInstruction::Rl { b, p: q, q: p, a },
            SimpleInstruction::Rl { b, p, q, a } => SimpleInstruction::Lr { a, p: q, q: p, b },
        }
    }

    pub fn source(&self) -> &State {
        match self {
            SimpleInstruction::Lr { p, .. } | SimpleInstruction::Rl { p, .. } => p,
        }
    }

    pub fn target(&self) -> &State {
        match self {
            SimpleInstruction::Lr { q, .. } | SimpleInstruction::Rl { q, .. } => q,
        }
    }
}

impl fmt::Display for SimpleInstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_smn())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CssmMachine {
    pub instructions: Vec<SimpleInstruction>,
    /// Set by [`shorten_to_simple`]. Provenance only, never checked.
    pub claimed_confluent: bool,
}

impl CssmMachine {
    pub fn to_smn(&self) -> SmnMachine {
        SmnMachine::new(self.instructions.iter().map(SimpleInstruction::to_smn).collect())
    }

    pub fn from_smn(m: &SmnMachine, claimed_confluent: bool) -> Result<Self, CssmError> {
        let instructions = m
            .instructions
            .iter()
            .map(|i| SimpleInstruction::from_smn(i).ok_or_else(|| CssmError::NotSimple(i.clone())))
            .collect::<Result<_, _>>()?;
        Ok(CssmMachine { instructions, claimed_confluent })
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CssmError {
    #[error("instruction `{0}` is not simple")]
    NotSimple(SmnInstruction),
    #[error("input is not length-preserving: `{0}`")]
    NotLengthPreserving(SmnInstruction),
    #[error("input is not deterministic, witness {0}")]
    NotDeterministic(SmnConfig),
    #[error("fresh state `{0}` already occurs in the input")]
    NameCollision(State),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub fn is_simple(ins: &SmnInstruction) -> bool {
    let (a, b, a2, b2) = (ins.lhs_left.len(), ins.lhs_right.len(), ins.rhs_left.len(), ins.rhs_right.len());
    a + b == 1 && a2 + b2 == 1 && a + a2 == 1 && b + b2 == 1
}

pub fn check_simple(instructions: &[SmnInstruction]) -> Result<(), SmnInstruction> {
    match instructions.iter().find(|i| !is_simple(i)) {
        Some(i) => Err(i.clone()),
        None => Ok(()),
    }
}

/// Name of the `t`-th intermediate state of the chain for instruction `k`.
pub fn fresh_state(k: usize, t: usize) -> State {
    State::from(format!("__c{k}_{t}"))
}

/// Replaces each non-simple instruction by a chain of simple ones through
/// fresh states and adds the reverse of every chain step that enters a fresh
/// state.
pub fn shorten_to_simple(m: &SmnMachine) -> Result<CssmMachine, CssmError> {
    check_length_preserving(m).map_err(CssmError::NotLengthPreserving)?;
    check_deterministic(m).map_err(CssmError::NotDeterministic)?;
    let states = m.states();
    let mut out = Vec::new();
    for (k, ins) in m.instructions.iter().enumerate() {
        if let Some(s) = SimpleInstruction::from_smn(ins) {
            out.push(s);
            continue;
        }
        // move A across, read A·B back while writing A'·B', move B' across
        let moved: Vec<u8> = ins.lhs_left.iter().rev().copied().collect();
        let reads: Vec<u8> = moved.iter().chain(&ins.lhs_right).copied().collect();
        let writes: Vec<u8> = ins.rhs_left.iter().rev().chain(&ins.rhs_right).copied().collect();
        let mut steps = Vec::new();
        for &a in &ins.lhs_left {
            steps.push((true, a, a));
        }
        for (&b, &a) in reads.iter().zip(&writes) {
            steps.push((false, b, a));
        }
        for &b in ins.rhs_right.iter().rev() {
            steps.push((true, b, b));
        }
        let len = steps.len();
        let state_at = |t: usize| match t {
            0 => ins.from.clone(),
            t if t == len => ins.to.clone(),
            t => fresh_state(k, t),
        };
        for t in 1..len {
            if states.contains(&fresh_state(k, t)) {
                return Err(CssmError::NameCollision(fresh_state(k, t)));
            }
        }
        let mut reverses = Vec::new();
        for (t, &(lr, x, y)) in steps.iter().enumerate() {
            let (p, q) = (state_at(t), state_at(t + 1));
            let step = if lr {
                SimpleInstruction::Lr { a: x, p, q, b: y }
            } else {
                SimpleInstruction::Rl { b: x, p, q, a: y }
            };
            if t + 1 < len {
                reverses.push(step.reverse());
            }
            out.push(step);
        }
        out.extend(reverses);
    }
    Ok(CssmMachine { instructions: out, claimed_confluent: true })
}

/// Every chain step entering a fresh state has its exact reverse. Returns the
/// first step lacking one.
pub fn check_reverse_closure(m: &CssmMachine) -> Result<(), SimpleInstruction> {
    let all: HashSet<&SimpleInstruction> = m.instructions.iter().collect();
    for ins in &m.instructions {
        if is_fresh(ins.target()) && !all.contains(&ins.reverse()) {
            return Err(ins.clone());
        }
    }
    Ok(())
}

pub fn is_fresh(s: &State) -> bool {
    s.as_str().starts_with("__c")
}

/// Two one-step successors of a configuration with no common descendant
/// found within the exploration cap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unjoined {
    pub source: SmnConfig,
    pub left: SmnConfig,
    pub right: SmnConfig,
}

/// Checks local confluence on every configuration of total length up to
/// `max_len`. A failure means no join was found within `join_cap` nodes,
/// which is evidence, not proof, of non-confluence.
pub fn check_local_confluence_bounded(m: &CssmMachine, max_len: usize, join_cap: usize) -> Result<(), Unjoined> {
    let packed = Packed::new(&m.to_smn());
    // a simple step depends on the two top symbols only, so each state has a
    // fixed set of top pairs at which it may branch
    let slot: HashMap<&State, usize> = packed.names().iter().enumerate().map(|(k, s)| (s, k)).collect();
    let mut applicable = vec![[[0u8; 3]; 3]; packed.names().len().max(1)];
    for ins in &m.instructions {
        let cells = &mut applicable[slot[ins.source()]];
        for (lt, row) in cells.iter_mut().enumerate() {
            for (rt, n) in row.iter_mut().enumerate() {
                match ins {
                    SimpleInstruction::Lr { a, .. } if *a as usize == lt => *n += 1,
                    SimpleInstruction::Rl { b, .. } if *b as usize == rt => *n += 1,
                    _ => {}
                }
            }
        }
    }
    let (mut scratch, mut succ) = (Vec::new(), Vec::new());
    let mut search = Search::default();
    for len in 0..=max_len {
        for idx in 0..packed.space(len) {
            let (lt, rt) = Packed::tops(len, idx);
            if applicable[packed.state_of(len, idx)][lt as usize][rt as usize] < 2 {
                continue;
            }
            packed.successors_of(len, idx, &mut scratch, &mut succ);
            for i in 0..succ.len() {
                for j in i + 1..succ.len() {
                    if !search.joinable(&packed, len, succ[i], succ[j], join_cap) {
                        return Err(Unjoined {
                            source: packed.config(len, idx),
                            left: packed.config(len, succ[i]),
                            right: packed.config(len, succ[j]),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Default)]
struct Search {
    seen: HashSet<u64>,
    other: HashSet<u64>,
    queue: Vec<u64>,
    scratch: Vec<PCfg>,
    succ: Vec<u64>,
}

impl Search {
    fn joinable(&mut self, p: &Packed, len: usize, x: u64, y: u64, cap: usize) -> bool {
        // most branches are a chain step against its own reverse, joined in
        // two steps from one side
        if self.near(p, len, x, y) || self.near(p, len, y, x) {
            return true;
        }
        let mut seen = std::mem::take(&mut self.seen);
        let found = self.bfs(p, len, x, cap, &mut seen, |c| c == y);
        if !found {
            // x's side is exhausted or capped; look for any of its nodes from y
            let mut other = std::mem::take(&mut self.other);
            let hit = self.bfs(p, len, y, cap, &mut other, |c| seen.contains(&c));
            self.other = other;
            self.seen = seen;
            return hit;
        }
        self.seen = seen;
        true
    }

    fn near(&mut self, p: &Packed, len: usize, from: u64, to: u64) -> bool {
        p.successors_of(len, from, &mut self.scratch, &mut self.succ);
        let first = std::mem::take(&mut self.succ);
        let mut hit = first.contains(&to);
        for &n in &first {
            if hit {
                break;
            }
            p.successors_of(len, n, &mut self.scratch, &mut self.succ);
            hit = self.succ.contains(&to);
        }
        self.succ = first;
        hit
    }

    fn bfs(&mut self, p: &Packed, len: usize, start: u64, cap: usize, seen: &mut HashSet<u64>, stop: impl Fn(u64) -> bool) -> bool {
        seen.clear();
        self.queue.clear();
        seen.insert(start);
        if stop(start) {
            return true;
        }
        self.queue.push(start);
        let mut head = 0;
        while head < self.queue.len() {
            let cur = self.queue[head];
            head += 1;
            p.successors_of(len, cur, &mut self.scratch, &mut self.succ);
            for &n in &self.succ {
                if seen.contains(&n) {
                    continue;
                }
                if stop(n) {
                    return true;
                }
                if seen.len() >= cap {
                    return false;
                }
                seen.insert(n);
                self.queue.push(n);
            }
        }
        false
    }
}

const CONFLUENT_HEADER: &str = "# claimed-confluent: true";

pub fn render_cssm(m: &CssmMachine) -> String {
    let body = render_smn(&m.to_smn());
    if m.claimed_confluent {
        format!("{CONFLUENT_HEADER}\n{body}")
    } else {
        body
    }
}

/// Parses the SMN format and rejects non-simple instructions.
pub fn parse_cssm(src: &str) -> Result<CssmMachine, CssmError> {
    let claimed = src.lines().any(|l| l.trim() == CONFLUENT_HEADER);
    CssmMachine::from_smn(&parse_smn(src)?, claimed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smn::{smn_reachable, smn_successors};

    fn ins(a: &str, p: &str, b: &str, a2: &str, q: &str, b2: &str) -> SmnInstruction {
        SmnInstruction::from_display(a, p, b, a2, q, b2)
    }

    #[test]
    fn example_chain() {
        let m = SmnMachine::new(vec![ins("00", "p", "", "11", "q", "")]);
        let c = shorten_to_simple(&m).unwrap();
        let (p1, p2, p3) = (fresh_state(0, 1), fresh_state(0, 2), fresh_state(0, 3));
        let (p, q) = (State::new("p"), State::new("q"));
        let want = vec![
            SimpleInstruction::Lr { a: 0, p: p.clone(), q: p1.clone(), b: 0 },
            SimpleInstruction::Lr { a: 0, p: p1.clone(), q: p2.clone(), b: 0 },
            SimpleInstruction::Rl { b: 0, p: p2.clone(), q: p3.clone(), a: 1 },
            SimpleInstruction::Rl { b: 0, p: p3.clone(), q: q.clone(), a: 1 },
            SimpleInstruction::Rl { b: 0, p: p1.clone(), q: p.clone(), a: 0 },
            SimpleInstruction::Rl { b: 0, p: p2.clone(), q: p1.clone(), a: 0 },
            SimpleInstruction::Lr { a: 1, p: p3.clone(), q: p2.clone(), b: 0 },
        ];
        assert_eq!(c.instructions, want);
        assert!(c.claimed_confluent);
        // the displayed chain
        let smn = c.to_smn();
        let mut cur = SmnConfig::from_display("00", "p", "");
        let mut seen = vec![cur.to_string()];
        for _ in 0..4 {
            let next: Vec<_> = smn_successors(&smn, &cur).into_iter().filter(|n| !seen.contains(&n.to_string())).collect();
            assert_eq!(next.len(), 1);
            cur = next[0].clone();
            seen.push(cur.to_string());
        }
        assert_eq!(seen.join(" "), "⟨00|p|ε⟩ ⟨0|__c0_1|0⟩ ⟨ε|__c0_2|00⟩ ⟨1|__c0_3|0⟩ ⟨11|q|ε⟩");
    }

    #[test]
    fn simple_instructions_are_kept() {
        let m = SmnMachine::new(vec![ins("0", "p", "", "", "q", "1")]);
        let c = shorten_to_simple(&m).unwrap();
        assert_eq!(c.to_smn(), m);
        assert!(shorten_to_simple(&SmnMachine::default()).unwrap().is_empty());
    }

    #[test]
    fn preconditions() {
        let branching = SmnMachine::new(vec![ins("0", "p", "", "", "p", "1"), ins("", "p", "1", "0", "p", "")]);
        assert!(matches!(shorten_to_simple(&branching), Err(CssmError::NotDeterministic(_))));
        let growing = SmnMachine::new(vec![ins("0", "p", "", "11", "q", "")]);
        assert!(matches!(shorten_to_simple(&growing), Err(CssmError::NotLengthPreserving(_))));
        let clash = SmnMachine::new(vec![ins("00", "p", "", "11", "__c0_1", "")]);
        assert!(matches!(shorten_to_simple(&clash), Err(CssmError::NameCollision(_))));
    }

    #[test]
    fn simplicity() {
        assert!(check_simple(&[ins("0", "p", "", "", "q", "1")]).is_ok());
        assert!(check_simple(&[ins("00", "p", "", "11", "q", "")]).is_err());
        assert!(check_simple(&[]).is_ok());
        assert!(check_simple(&[ins("0", "p", "", "1", "q", "")]).is_err());
    }

    #[test]
    fn right_word_chain() {
        // ⟨1|p|01⟩ → ⟨0|q|10⟩ reaches its image through the chain
        let m = SmnMachine::new(vec![ins("1", "p", "01", "0", "q", "10")]);
        let c = shorten_to_simple(&m).unwrap();
        assert!(check_simple(&c.to_smn().instructions).is_ok());
        assert!(check_reverse_closure(&c).is_ok());
        let r = smn_reachable(&c.to_smn(), &SmnConfig::from_display("01", "p", "011"), 1000);
        assert!(r.set().contains(&SmnConfig::from_display("00", "q", "101")));
        assert!(r.set().iter().filter(|x| !is_fresh(&x.state)).count() == 2);
    }

    #[test]
    fn confluence_examples() {
        let example = CssmMachine::from_smn(
            &SmnMachine::new(vec![ins("0", "p", "", "", "p", "1"), ins("", "p", "1", "0", "p", "")]),
            false,
        )
        .unwrap();
        assert!(check_local_confluence_bounded(&example, 4, 1000).is_ok());
        // two dead ends from one configuration
        let split = CssmMachine::from_smn(
            &SmnMachine::new(vec![ins("0", "p", "", "", "q", "1"), ins("0", "p", "", "", "r", "0")]),
            false,
        )
        .unwrap();
        let err = check_local_confluence_bounded(&split, 2, 100).unwrap_err();
        assert_eq!(err.source, SmnConfig::from_display("0", "p", ""));
    }

    #[test]
    fn reverse_closure_detects_missing_reverse() {
        let mut c = shorten_to_simple(&SmnMachine::new(vec![ins("00", "p", "", "11", "q", "")])).unwrap();
        c.instructions.pop();
        assert!(check_reverse_closure(&c).is_err());
    }

    #[test]
    fn file_round_trip() {
        let c = shorten_to_simple(&SmnMachine::new(vec![ins("00", "p", "1", "11", "q", "0")])).unwrap();
        let text = render_cssm(&c);
        assert!(text.starts_with(CONFLUENT_HEADER));
        assert_eq!(parse_cssm(&text).unwrap(), c);
        assert!(matches!(parse_cssm("00 p - => 11 q -"), Err(CssmError::NotSimple(_))));
    }
}
