//! Two-stack machines: prefix rewriting on a pair of binary stacks.
//!
//! Stacks are stored top-first. Text formats use display order, where the
//! left word ends at the top of the left stack: `⟨01|p|10⟩` has `1` on top of
//! the left stack and `1` on top of the right one.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::error::ParseError;

pub type Stack = Vec<u8>;

/// Interned state identifier.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Arc<str>);

impl State {
    pub fn new(name: &str) -> Self {
        State(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for State {
    fn from(s: &str) -> Self {
        State::new(s)
    }
}

impl From<String> for State {
    fn from(s: String) -> Self {
        State(Arc::from(s))
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmnConfig {
    pub left: Stack,
    pub state: State,
    pub right: Stack,
}

impl SmnConfig {
    pub fn new(left: Stack, state: impl Into<State>, right: Stack) -> Self {
        SmnConfig { left, state: state.into(), right }
    }

    /// Builds a configuration from words in display orientation.
    pub fn from_display(left: &str, state: &str, right: &str) -> Self {
        SmnConfig::new(left_word(left), state, right_word(right))
    }

    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `A p B` tokens with `-` for the empty word, as in the file format.
    pub fn to_tokens(&self) -> String {
        format!("{} {} {}", show_left(&self.left), self.state, show_right(&self.right))
    }
}

impl fmt::Display for SmnConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = |s: String| if s == "-" { "ε".to_string() } else { s };
        write!(f, "⟨{}|{}|{}⟩", w(show_left(&self.left)), self.state, w(show_right(&self.right)))
    }
}

impl fmt::Debug for SmnConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn bits(word: &str) -> Stack {
    word.bytes().map(|b| b - b'0').collect()
}

/// Top-first stack from a left word in display orientation.
pub fn left_word(word: &str) -> Stack {
    let mut s = bits(word);
    s.reverse();
    s
}

/// Top-first stack from a right word in display orientation.
pub fn right_word(word: &str) -> Stack {
    bits(word)
}

fn show(word: impl Iterator<Item = u8>) -> String {
    let s: String = word.map(|b| (b'0' + b) as char).collect();
    if s.is_empty() {
        "-".into()
    } else {
        s
    }
}

pub fn show_left(s: &[u8]) -> String {
    show(s.iter().rev().copied())
}

pub fn show_right(s: &[u8]) -> String {
    show(s.iter().copied())
}

/// `⟨A|p|B⟩ → ⟨A'|q|B'⟩`, all words top-first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmnInstruction {
    pub lhs_left: Stack,
    pub from: State,
    pub lhs_right: Stack,
    pub rhs_left: Stack,
    pub to: State,
    pub rhs_right: Stack,
}

impl SmnInstruction {
    /// Builds an instruction from words in display orientation.
    pub fn from_display(a: &str, p: &str, b: &str, a2: &str, q: &str, b2: &str) -> Self {
        SmnInstruction {
            lhs_left: left_word(a),
            from: State::new(p),
            lhs_right: right_word(b),
            rhs_left: left_word(a2),
            to: State::new(q),
            rhs_right: right_word(b2),
        }
    }

    pub fn applies(&self, cfg: &SmnConfig) -> bool {
        cfg.state == self.from && cfg.left.starts_with(&self.lhs_left) && cfg.right.starts_with(&self.lhs_right)
    }

    pub fn apply(&self, cfg: &SmnConfig) -> Option<SmnConfig> {
        if !self.applies(cfg) {
            return None;
        }
        let mut left = self.rhs_left.clone();
        left.extend_from_slice(&cfg.left[self.lhs_left.len()..]);
        let mut right = self.rhs_right.clone();
        right.extend_from_slice(&cfg.right[self.lhs_right.len()..]);
        Some(SmnConfig { left, state: self.to.clone(), right })
    }

    pub fn is_length_preserving(&self) -> bool {
        let l = self.lhs_left.len() + self.lhs_right.len();
        l > 0 && l == self.rhs_left.len() + self.rhs_right.len()
    }
}

impl fmt::Display for SmnInstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} => {} {} {}",
            show_left(&self.lhs_left),
            self.from,
            show_right(&self.lhs_right),
            show_left(&self.rhs_left),
            self.to,
            show_right(&self.rhs_right)
        )
    }
}

impl fmt::Debug for SmnInstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SmnMachine {
    pub instructions: Vec<SmnInstruction>,
}

impl SmnMachine {
    pub fn new(instructions: Vec<SmnInstruction>) -> Self {
        SmnMachine { instructions }
    }

    /// States occurring in some instruction.
    pub fn states(&self) -> BTreeSet<State> {
        self.instructions.iter().flat_map(|i| [i.from.clone(), i.to.clone()]).collect()
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    fn by_state(&self) -> HashMap<&State, Vec<&SmnInstruction>> {
        let mut map: HashMap<&State, Vec<&SmnInstruction>> = HashMap::new();
        for ins in &self.instructions {
            map.entry(&ins.from).or_default().push(ins);
        }
        map
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmnError {
    #[error("instruction `{0}` is not length-preserving")]
    NotLengthPreserving(SmnInstruction),
    #[error("length {len} needs {configs} configurations, above the probe limit of {limit}")]
    ProbeTooLarge { len: usize, configs: u128, limit: u64 },
}

pub fn smn_successors(m: &SmnMachine, cfg: &SmnConfig) -> BTreeSet<SmnConfig> {
    m.instructions.iter().filter_map(|ins| ins.apply(cfg)).collect()
}


#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reach {
    Complete(HashSet<SmnConfig>),
    Truncated(HashSet<SmnConfig>),
}

impl Reach {
    pub fn set(&self) -> &HashSet<SmnConfig> {
        match self {
            Reach::Complete(s) | Reach::Truncated(s) => s,
        }
    }

    pub fn is_complete(&self) -> bool {
        matches!(self, Reach::Complete(_))
    }

    pub fn len(&self) -> usize {
        self.set().len()
    }

    pub fn is_empty(&self) -> bool {
        self.set().is_empty()
    }
}

/// Instructions grouped by source state, for repeated stepping.
pub struct SmnIndex<'a> {
    by_state: HashMap<&'a State, Vec<&'a SmnInstruction>>,
    preserving: bool,
}

impl<'a> SmnIndex<'a> {
    pub fn new(m: &'a SmnMachine) -> Self {
        SmnIndex { by_state: m.by_state(), preserving: check_length_preserving(m).is_ok() }
    }

    pub fn successors(&self, cfg: &SmnConfig) -> BTreeSet<SmnConfig> {
        match self.by_state.get(&cfg.state) {
            Some(list) => list.iter().filter_map(|ins| ins.apply(cfg)).collect(),
            None => BTreeSet::new(),
        }
    }

    /// Whether configurations in `state` can have more than one successor.
    pub fn branches_at(&self, state: &State) -> bool {
        self.by_state.get(state).is_some_and(|l| l.len() > 1)
    }

    pub fn reachable(&self, cfg: &SmnConfig, node_cap: usize) -> Reach {
        self.explore(cfg, node_cap, |_| false).0
    }

    /// Breadth-first search that stops early once `stop` accepts a node.
    pub fn explore(&self, cfg: &SmnConfig, node_cap: usize, mut stop: impl FnMut(&SmnConfig) -> bool) -> (Reach, bool) {
        let mut seen: HashSet<SmnConfig> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(cfg.clone());
        if stop(cfg) {
            return (Reach::Truncated(seen), true);
        }
        queue.push_back(cfg.clone());
        while let Some(cur) = queue.pop_front() {
            let Some(list) = self.by_state.get(&cur.state) else { continue };
            for ins in list {
                let Some(next) = ins.apply(&cur) else { continue };
                if self.preserving {
                    assert_eq!(next.len(), cfg.len(), "length-preserving step changed the length");
                }
                if seen.contains(&next) {
                    continue;
                }
                if seen.len() >= node_cap {
                    return (Reach::Truncated(seen), false);
                }
                let hit = stop(&next);
                seen.insert(next.clone());
                if hit {
                    return (Reach::Truncated(seen), true);
                }
                queue.push_back(next);
            }
        }
        (Reach::Complete(seen), false)
    }
}

/// Breadth-first closure of the step relation, starting set included.
pub fn smn_reachable(m: &SmnMachine, cfg: &SmnConfig, node_cap: usize) -> Reach {
    SmnIndex::new(m).reachable(cfg, node_cap)
}

/// Runs a deterministic machine until it stops, repeats, or `fuel` runs out,
/// returning the visited configurations in order.
pub fn smn_trajectory(m: &SmnMachine, cfg: &SmnConfig, fuel: usize) -> Vec<SmnConfig> {
    let by_state = m.by_state();
    let mut seen = HashSet::new();
    let mut out = vec![cfg.clone()];
    seen.insert(cfg.clone());
    while out.len() <= fuel {
        let cur = out.last().unwrap();
        let next = by_state.get(&cur.state).and_then(|list| list.iter().find_map(|ins| ins.apply(cur)));
        match next {
            Some(n) if seen.insert(n.clone()) => out.push(n),
            _ => break,
        }
    }
    out
}

pub fn check_length_preserving(m: &SmnMachine) -> Result<(), SmnInstruction> {
    match m.instructions.iter().find(|i| !i.is_length_preserving()) {
        Some(i) => Err(i.clone()),
        None => Ok(()),
    }
}

fn comparable(a: &[u8], b: &[u8]) -> bool {
    a.starts_with(b) || b.starts_with(a)
}

fn longer<'a>(a: &'a [u8], b: &'a [u8]) -> &'a [u8] {
    if a.len() >= b.len() {
        a
    } else {
        b
    }
}

/// Structural determinism check; the witness is a minimal configuration with
/// two distinct successors.
pub fn check_deterministic(m: &SmnMachine) -> Result<(), SmnConfig> {
    let mut witnesses = Vec::new();
    for list in m.by_state().values() {
        for (k, x) in list.iter().enumerate() {
            for y in &list[k + 1..] {
                if !comparable(&x.lhs_left, &y.lhs_left) || !comparable(&x.lhs_right, &y.lhs_right) {
                    continue;
                }
                let cfg = SmnConfig {
                    left: longer(&x.lhs_left, &y.lhs_left).to_vec(),
                    state: x.from.clone(),
                    right: longer(&x.lhs_right, &y.lhs_right).to_vec(),
                };
                if x.apply(&cfg) != y.apply(&cfg) {
                    witnesses.push(cfg);
                }
            }
        }
    }
    // smallest witness, so the report does not depend on hash order
    match witnesses.into_iter().min_by(|a, b| (a.len(), a).cmp(&(b.len(), b))) {
        Some(w) => Err(w),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProfileCell {
    pub len: usize,
    pub max_reach: u64,
    pub truncated: bool,
}

/// Largest reachable-set size per total stack length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundProfile {
    pub cells: Vec<ProfileCell>,
}

impl BoundProfile {
    pub fn from_values(values: &[u64]) -> Self {
        BoundProfile {
            cells: values
                .iter()
                .enumerate()
                .map(|(len, &max_reach)| ProfileCell { len, max_reach, truncated: false })
                .collect(),
        }
    }

    pub fn values(&self) -> Vec<u64> {
        self.cells.iter().map(|c| c.max_reach).collect()
    }

    pub fn any_truncated(&self) -> bool {
        self.cells.iter().any(|c| c.truncated)
    }
}

/// Heuristic reading of a profile. Evidence only, never a proof.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The top two lengths share the value.
    Plateau(u64),
    /// Strictly increasing over the top three lengths.
    Growth,
    /// Neither pattern, too few cells, or truncated cells at the top.
    Inconclusive,
}

pub fn profile_verdict(p: &BoundProfile) -> Verdict {
    let n = p.cells.len();
    if n < 3 || p.cells[n - 3..].iter().any(|c| c.truncated) {
        return Verdict::Inconclusive;
    }
    let [x, y, z] = [p.cells[n - 3].max_reach, p.cells[n - 2].max_reach, p.cells[n - 1].max_reach];
    if y == z {
        Verdict::Plateau(z)
    } else if x < y && y < z {
        Verdict::Growth
    } else {
        Verdict::Inconclusive
    }
}

/// Largest configuration space a single probe length may enumerate.
pub const PROBE_LIMIT: u64 = 1 << 26;

/// Configurations with total stack length `len` over `states` states.
/// Saturates at `u128::MAX`.
pub fn probe_space(states: usize, len: usize) -> u128 {
    let words = 1u128.checked_shl(len as u32).filter(|_| len < 128).unwrap_or(u128::MAX);
    (states as u128).saturating_mul(len as u128 + 1).saturating_mul(words)
}

/// Exhaustive probe over all configurations of each total length `0..=max_len`.
pub fn probe_uniform_bound(m: &SmnMachine, max_len: usize, node_cap: usize) -> Result<BoundProfile, SmnError> {
    check_length_preserving(m).map_err(SmnError::NotLengthPreserving)?;
    let packed = Packed::new(m);
    let mut cells = Vec::new();
    for len in 0..=max_len {
        let configs = probe_space(packed.n_states, len);
        if configs > PROBE_LIMIT as u128 {
            return Err(SmnError::ProbeTooLarge { len, configs, limit: PROBE_LIMIT });
        }
        let (max_reach, truncated) = packed.probe_len(len, node_cap);
        cells.push(ProfileCell { len, max_reach, truncated });
    }
    Ok(BoundProfile { cells })
}

#[derive(Clone, Copy)]
struct Word {
    len: u8,
    bits: u64,
}

impl Word {
    fn new(w: &[u8]) -> Self {
        assert!(w.len() < 64);
        Word { len: w.len() as u8, bits: w.iter().enumerate().map(|(k, &b)| (b as u64) << k).sum() }
    }

    fn mask(&self) -> u64 {
        (1u64 << self.len) - 1
    }
}

#[derive(Clone, Copy)]
struct PackedIns {
    a: Word,
    b: Word,
    a2: Word,
    b2: Word,
    to: u32,
}

/// Configuration with both stacks as bit fields, top at bit 0.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct PCfg {
    state: u32,
    ll: u8,
    rl: u8,
    lb: u64,
    rb: u64,
}

/// Machine compiled to bit operations, for exhaustive enumeration at small
/// lengths.
pub(crate) struct Packed {
    n_states: usize,
    names: Vec<State>,
    by_state: Vec<Vec<PackedIns>>,
}

impl Packed {
    pub(crate) fn new(m: &SmnMachine) -> Self {
        let states: Vec<State> = m.states().into_iter().collect();
        let index: BTreeMap<&State, u32> = states.iter().enumerate().map(|(k, s)| (s, k as u32)).collect();
        let mut by_state = vec![Vec::new(); states.len()];
        for ins in &m.instructions {
            by_state[index[&ins.from] as usize].push(PackedIns {
                a: Word::new(&ins.lhs_left),
                b: Word::new(&ins.lhs_right),
                a2: Word::new(&ins.rhs_left),
                b2: Word::new(&ins.rhs_right),
                to: index[&ins.to],
            });
        }
        // a machine without states still has its single inert configuration per word
        by_state.resize(states.len().max(1), Vec::new());
        Packed { n_states: states.len().max(1), names: states, by_state }
    }

    fn step(ins: &PackedIns, c: &PCfg) -> Option<PCfg> {
        if c.ll < ins.a.len || c.rl < ins.b.len || c.lb & ins.a.mask() != ins.a.bits || c.rb & ins.b.mask() != ins.b.bits {
            return None;
        }
        Some(PCfg {
            state: ins.to,
            ll: c.ll - ins.a.len + ins.a2.len,
            rl: c.rl - ins.b.len + ins.b2.len,
            lb: (c.lb >> ins.a.len) << ins.a2.len | ins.a2.bits,
            rb: (c.rb >> ins.b.len) << ins.b2.len | ins.b2.bits,
        })
    }

    fn successors(&self, c: &PCfg, out: &mut Vec<PCfg>) {
        out.clear();
        for ins in &self.by_state[c.state as usize] {
            if let Some(n) = Self::step(ins, c) {
                if !out.contains(&n) {
                    out.push(n);
                }
            }
        }
    }

    /// Configurations of total length `len`, numbered `0..space`.
    pub(crate) fn space(&self, len: usize) -> u64 {
        (self.n_states as u64 * (len as u64 + 1)) << len
    }

    pub(crate) fn state_of(&self, len: usize, idx: u64) -> usize {
        ((idx >> len) / (len as u64 + 1)) as usize
    }

    pub(crate) fn names(&self) -> &[State] {
        &self.names
    }

    /// Top symbols of both stacks, `2` for an empty stack.
    pub(crate) fn tops(len: usize, idx: u64) -> (u8, u8) {
        let c = Self::decode(len, idx);
        let top = |l: u8, bits: u64| if l == 0 { 2 } else { (bits & 1) as u8 };
        (top(c.ll, c.lb), top(c.rl, c.rb))
    }

    /// Distinct successors of configuration `idx`, as indices.
    pub(crate) fn successors_of(&self, len: usize, idx: u64, scratch: &mut Vec<PCfg>, out: &mut Vec<u64>) {
        self.successors(&Self::decode(len, idx), scratch);
        out.clear();
        out.extend(scratch.iter().map(|c| Self::encode(len, c)));
    }

    pub(crate) fn config(&self, len: usize, idx: u64) -> SmnConfig {
        let c = Self::decode(len, idx);
        let bit = |w: u64, k: u8| (w >> k & 1) as u8;
        SmnConfig {
            left: (0..c.ll).map(|k| bit(c.lb, k)).collect(),
            state: self.names[c.state as usize].clone(),
            right: (0..c.rl).map(|k| bit(c.rb, k)).collect(),
        }
    }

    fn decode(len: usize, idx: u64) -> PCfg {
        let low = idx & ((1u64 << len) - 1);
        let hi = idx >> len;
        let ll = (hi % (len as u64 + 1)) as u8;
        let state = (hi / (len as u64 + 1)) as u32;
        let lmask = (1u64 << ll) - 1;
        PCfg { state, ll, rl: len as u8 - ll, lb: low & lmask, rb: low >> ll }
    }

    fn encode(len: usize, c: &PCfg) -> u64 {
        ((c.state as u64 * (len as u64 + 1) + c.ll as u64) << len) | c.lb | (c.rb << c.ll)
    }

    /// Maximum reachable-set size over all configurations of length `len`.
    fn probe_len(&self, len: usize, node_cap: usize) -> (u64, bool) {
        let total = self.space(len);
        // successor table; bail out to search at the first branching config
        const NONE: u32 = u32::MAX;
        let mut next = vec![NONE; total as usize];
        let mut buf = Vec::new();
        let mut deterministic = true;
        for idx in 0..total {
            self.successors(&Self::decode(len, idx), &mut buf);
            match buf.len() {
                0 => {}
                1 => next[idx as usize] = Self::encode(len, &buf[0]) as u32,
                _ => {
                    deterministic = false;
                    break;
                }
            }
        }
        if deterministic {
            return (orbit_sizes_max(&next), false);
        }
        drop(next);
        let mut best = 0u64;
        let mut truncated = false;
        let mut seen: HashSet<u64> = HashSet::new();
        let mut queue: Vec<PCfg> = Vec::new();
        for idx in 0..total {
            seen.clear();
            queue.clear();
            seen.insert(idx);
            queue.push(Self::decode(len, idx));
            let mut head = 0;
            'bfs: while head < queue.len() {
                let cur = queue[head];
                head += 1;
                self.successors(&cur, &mut buf);
                for n in &buf {
                    if seen.insert(Self::encode(len, n)) {
                        if seen.len() > node_cap {
                            truncated = true;
                            seen.remove(&Self::encode(len, n));
                            break 'bfs;
                        }
                        queue.push(*n);
                    }
                }
            }
            best = best.max(seen.len() as u64);
        }
        (best, truncated)
    }
}

/// Largest number of distinct nodes on any path of a functional graph.
fn orbit_sizes_max(next: &[u32]) -> u64 {
    const NONE: u32 = u32::MAX;
    let n = next.len();
    // 0 = unknown, otherwise the orbit size
    let mut size = vec![0u32; n];
    let mut pos_in_path: HashMap<u32, usize> = HashMap::new();
    let mut path: Vec<u32> = Vec::new();
    let mut best = 0u32;
    for start in 0..n as u32 {
        if size[start as usize] != 0 {
            continue;
        }
        path.clear();
        pos_in_path.clear();
        let mut cur = start;
        // walk until a known node, a node already on the path, or a dead end
        let tail_base = loop {
            if size[cur as usize] != 0 {
                break size[cur as usize];
            }
            if let Some(&p) = pos_in_path.get(&cur) {
                let cycle = (path.len() - p) as u32;
                for &c in &path[p..] {
                    size[c as usize] = cycle;
                }
                path.truncate(p);
                break cycle;
            }
            pos_in_path.insert(cur, path.len());
            path.push(cur);
            let nx = next[cur as usize];
            if nx == NONE {
                size[cur as usize] = 1;
                path.pop();
                break 1;
            }
            cur = nx;
        };
        let mut acc = tail_base;
        best = best.max(acc);
        for &c in path.iter().rev() {
            acc += 1;
            size[c as usize] = acc;
        }
        best = best.max(acc);
    }
    best as u64
}

fn parse_word(w: &str, line: usize) -> Result<&str, ParseError> {
    if w == "-" {
        return Ok("");
    }
    if w.bytes().all(|b| b == b'0' || b == b'1') {
        Ok(w)
    } else {
        Err(ParseError::new(line, format!("`{w}` is not a binary word or `-`")))
    }
}

fn valid_state(s: &str) -> bool {
    !s.is_empty() && s != "=>" && s != "swap" && !s.contains('#')
}

/// Parses `A p B` (display orientation, `-` for the empty word).
pub fn parse_config(src: &str) -> Result<SmnConfig, ParseError> {
    let words: Vec<&str> = src.split_whitespace().collect();
    if words.len() != 3 || !valid_state(words[1]) {
        return Err(ParseError::new(1, "expected `<left word> <state> <right word>`"));
    }
    Ok(SmnConfig::from_display(parse_word(words[0], 1)?, words[1], parse_word(words[2], 1)?))
}

/// Parses one instruction line, returning it with any trailing keyword.
pub(crate) fn parse_instruction_line(line: &str, n: usize) -> Result<(SmnInstruction, Option<&str>), ParseError> {
    let words: Vec<&str> = line.split_whitespace().collect();
    if !(words.len() == 7 || words.len() == 8) || words[3] != "=>" {
        return Err(ParseError::new(n, "expected `A p B => A' q B'`"));
    }
    for s in [words[1], words[5]] {
        if !valid_state(s) {
            return Err(ParseError::new(n, format!("invalid state name `{s}`")));
        }
    }
    let ins = SmnInstruction::from_display(
        parse_word(words[0], n)?,
        words[1],
        parse_word(words[2], n)?,
        parse_word(words[4], n)?,
        words[5],
        parse_word(words[6], n)?,
    );
    Ok((ins, words.get(7).copied()))
}

pub fn parse_smn(src: &str) -> Result<SmnMachine, ParseError> {
    let mut out = Vec::new();
    for (n, line) in src.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (ins, extra) = parse_instruction_line(line, n + 1)?;
        if let Some(w) = extra {
            return Err(ParseError::new(n + 1, format!("unexpected `{w}`")));
        }
        out.push(ins);
    }
    Ok(SmnMachine::new(out))
}

pub fn render_smn(m: &SmnMachine) -> String {
    m.instructions.iter().map(|i| format!("{i}\n")).collect()
}
