//! Nested simulation: compiles a one-counter machine into a deterministic,
//! length-preserving two-stack machine that is uniformly bounded exactly when
//! the counter machine halts from `(0, 1)`.
//!
//! A counter configuration `(i, c)` lives on the tape as `⟨A1|d_i|0^c 1 B⟩`.
//! Every walk across a run of zeros is chopped: a state that sees `T = k+3`
//! zeros ahead suspends itself by writing its `k`-bit code onto the left stack
//! and starts a fresh simulation from `(0, 1)` inside those zeros. The nested
//! run either gets stuck next to the next `1` (the search succeeded, so the
//! suspended state is restored one step further on), runs off the end of the
//! stack, or halts outright. Walks that see fewer than `T` zeros are handled
//! directly.
//!
//! Instructions are written relative to the current orientation; `swap`
//! mirrors the tape so that leftward searches reuse the rightward machinery.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::cm1::{Cm1Error, Cm1Machine};
use crate::error::ParseError;
use crate::smn::{
    check_deterministic, check_length_preserving, left_word, parse_instruction_line, SmnConfig,
    SmnInstruction, SmnMachine, State,
};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmxInstruction {
    pub rule: SmnInstruction,
    pub swap: bool,
}

impl fmt::Display for SmxInstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.rule, if self.swap { " swap" } else { "" })
    }
}

impl fmt::Debug for SmxInstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpGroup {
    Index,
    Increase,
    Goto,
    Bound,
}

impl OpGroup {
    pub const ALL: [OpGroup; 4] = [OpGroup::Index, OpGroup::Increase, OpGroup::Goto, OpGroup::Bound];

    pub fn name(self) -> &'static str {
        match self {
            OpGroup::Index => "index_ops",
            OpGroup::Increase => "increase_ops",
            OpGroup::Goto => "goto_ops",
            OpGroup::Bound => "bound_ops",
        }
    }
}

/// Where an emitted instruction comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub group: OpGroup,
    /// Source instruction index, absent for the shared return machinery.
    pub source: Option<usize>,
    pub kind: RuleKind,
}

/// Role of an instruction in the nested-simulation bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Plain,
    /// Suspends the current state and enters a nested simulation.
    Enter,
    /// Restores a suspended state.
    Resume,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SmxMachine {
    pub instructions: Vec<SmxInstruction>,
    /// Parallel to `instructions`; empty for machines read from a file.
    pub provenance: Vec<Provenance>,
}

impl SmxMachine {
    pub fn group(&self, g: OpGroup) -> Vec<&SmxInstruction> {
        self.instructions.iter().zip(&self.provenance).filter(|(_, p)| p.group == g).map(|(i, _)| i).collect()
    }

    pub fn states(&self) -> BTreeSet<State> {
        self.instructions.iter().flat_map(|i| [i.rule.from.clone(), i.rule.to.clone()]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmxConfig {
    pub config: SmnConfig,
    /// Parity of the swaps taken so far.
    pub flipped: bool,
}

pub fn smx_successors(m: &SmxMachine, cfg: &SmxConfig) -> BTreeSet<SmxConfig> {
    m.instructions
        .iter()
        .filter_map(|ins| {
            let mut next = ins.rule.apply(&cfg.config)?;
            if ins.swap {
                std::mem::swap(&mut next.left, &mut next.right);
            }
            Some(SmxConfig { config: next, flipped: cfg.flipped ^ ins.swap })
        })
        .collect()
}

/// Suffix marking the mirrored copy of a state after flattening.
pub const MIRROR_SUFFIX: &str = "__m";

pub fn oriented(s: &State, flipped: bool) -> State {
    if flipped {
        State::from(format!("{s}{MIRROR_SUFFIX}"))
    } else {
        s.clone()
    }
}

/// The flattened configuration standing for an SMX configuration.
pub fn flatten_config(c: &SmxConfig) -> SmnConfig {
    if c.flipped {
        SmnConfig { left: c.config.right.clone(), state: oriented(&c.config.state, true), right: c.config.left.clone() }
    } else {
        c.config.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HooperError {
    #[error(transparent)]
    Cm1(#[from] Cm1Error),
    #[error("state `{0}` collides with the mirrored copy of another state")]
    NameCollision(State),
    #[error("constructed machine is not deterministic, witness {0}")]
    NotDeterministic(SmnConfig),
    #[error("constructed machine is not length-preserving: `{0}`")]
    NotLengthPreserving(SmnInstruction),
}

/// Replaces swaps by an orientation bit kept in the state. Instruction `2k`
/// and `2k+1` of the result come from instruction `k` of the input.
pub fn flatten_smx_to_smn(m: &SmxMachine) -> Result<SmnMachine, HooperError> {
    let states = m.states();
    for s in &states {
        if let Some(base) = s.as_str().strip_suffix(MIRROR_SUFFIX) {
            if states.contains(&State::new(base)) {
                return Err(HooperError::NameCollision(s.clone()));
            }
        }
    }
    let mut out = Vec::with_capacity(2 * m.instructions.len());
    for ins in &m.instructions {
        let r = &ins.rule;
        out.push(SmnInstruction {
            lhs_left: r.lhs_left.clone(),
            from: r.from.clone(),
            lhs_right: r.lhs_right.clone(),
            rhs_left: r.rhs_left.clone(),
            to: oriented(&r.to, ins.swap),
            rhs_right: r.rhs_right.clone(),
        });
        out.push(SmnInstruction {
            lhs_left: r.lhs_right.clone(),
            from: oriented(&r.from, true),
            lhs_right: r.lhs_left.clone(),
            rhs_left: r.rhs_right.clone(),
            to: oriented(&r.to, !ins.swap),
            rhs_right: r.rhs_left.clone(),
        });
    }
    Ok(SmnMachine::new(out))
}

/// Naming and encoding parameters of the construction for one machine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HooperLayout {
    pub n: usize,
    /// Width of the state code.
    pub k: usize,
    /// States that may suspend themselves, in code order.
    pub guardable: Vec<State>,
}

fn st(prefix: &str, i: usize, suffix: &str) -> State {
    State::from(format!("{prefix}{i}{suffix}"))
}

impl HooperLayout {
    pub fn new(m: &Cm1Machine) -> Self {
        let n = m.instructions.len();
        let mut guardable = Vec::new();
        for i in 0..n {
            for p in ["d", "f", "b", "w"] {
                guardable.push(st(p, i, ""));
            }
        }
        if n > 0 {
            guardable.push(State::new("ret_a"));
            guardable.push(State::new("ret_b"));
        }
        let k = (usize::BITS - (guardable.len().max(2) - 1).leading_zeros()) as usize;
        HooperLayout { n, k, guardable }
    }

    /// Zeros a state must see before it suspends itself.
    pub fn trigger(&self) -> usize {
        self.k + 3
    }

    pub fn entry(&self, i: usize) -> State {
        if i < self.n {
            st("d", i, "")
        } else {
            State::new("halt")
        }
    }

    /// Binary code of guardable state `g`, most significant bit first.
    pub fn code(&self, g: usize) -> String {
        (0..self.k).rev().map(|b| if g >> b & 1 == 1 { '1' } else { '0' }).collect()
    }
}

struct Builder {
    instructions: Vec<SmxInstruction>,
    provenance: Vec<Provenance>,
}

impl Builder {
    #[allow(clippy::too_many_arguments)]
    fn rule(
        &mut self,
        prov: (OpGroup, Option<usize>),
        a: &str,
        p: &State,
        b: &str,
        a2: &str,
        q: &State,
        b2: &str,
        swap: bool,
    ) {
        self.kind(prov, RuleKind::Plain, a, p, b, a2, q, b2, swap);
    }

    #[allow(clippy::too_many_arguments)]
    fn kind(
        &mut self,
        (group, source): (OpGroup, Option<usize>),
        kind: RuleKind,
        a: &str,
        p: &State,
        b: &str,
        a2: &str,
        q: &State,
        b2: &str,
        swap: bool,
    ) {
        let rule = SmnInstruction::from_display(a, p.as_str(), b, a2, q.as_str(), b2);
        self.instructions.push(SmxInstruction { rule, swap });
        self.provenance.push(Provenance { group, source, kind });
    }
}

fn zeros(r: usize) -> String {
    "0".repeat(r)
}

/// Emits the four instruction groups for `m`.
pub fn compile_cm1_to_smx(m: &Cm1Machine) -> Result<SmxMachine, HooperError> {
    m.validate()?;
    let lay = HooperLayout::new(m);
    let t = lay.trigger();
    let mut out = Builder { instructions: Vec::new(), provenance: Vec::new() };
    use OpGroup::*;

    for (i, ins) in m.instructions.iter().enumerate() {
        let d = ins.d as usize;
        let src = Some(i);
        let (di, div) = (st("d", i, ""), st("d", i, "v"));
        let (fi, fiv) = (st("f", i, ""), st("f", i, "v"));
        let si = st("s", i, "");
        let (bi, biv) = (st("b", i, ""), st("b", i, "v"));
        let mi = st("m", i, "");
        let (wi, wiv) = (st("w", i, ""), st("w", i, "v"));

        // divisibility test: blocks of d zeros go left until fewer than T remain
        out.rule((Index, src), "", &div, &zeros(d), &zeros(d), &di, "", false);
        out.rule((Index, src), "0", &di, "1", "1", &si, "1", false);
        for r in 1..t {
            let run = format!("{}1", zeros(r));
            if r % d == 0 {
                // success, the last zero becomes the shift marker
                out.rule((Index, src), "", &di, &run, &format!("{}1", zeros(r - 1)), &si, "1", false);
            } else {
                out.rule((Index, src), "", &di, &run, "", &fi, &run, true);
            }
        }

        // failure: rewind over the tested zeros and continue with i+1
        for r in 0..t {
            let run = format!("{}1", zeros(r));
            out.rule((Goto, src), "", &fi, &run, &zeros(r), &lay.entry(i + 1), "1", true);
        }
        out.rule((Goto, src), "", &fiv, "0", "0", &fi, "", false);

        // one round per block: shift the separator, walk back to the marker,
        // move the marker down one block, walk forward again
        out.rule((Increase, src), "", &si, "10", "0", &bi, "1", true);
        for r in 0..t {
            let run = format!("{}1", zeros(r));
            out.rule((Increase, src), "", &bi, &run, &zeros(r), &mi, "1", true);
            out.rule((Increase, src), "", &wi, &run, &zeros(r), &si, "1", false);
        }
        out.rule((Goto, src), "", &biv, "0", "0", &bi, "", false);
        out.rule((Goto, src), "", &wiv, "0", "0", &wi, "", false);
        out.rule(
            (Increase, src),
            &format!("{}1", zeros(d)),
            &mi,
            "",
            &format!("1{}", zeros(d)),
            &wi,
            "",
            false,
        );
        out.rule(
            (Increase, src),
            &format!("1{}1", zeros(d - 1)),
            &mi,
            "",
            "1",
            &lay.entry(ins.j),
            &zeros(d),
            false,
        );

        // the separator cannot move: the search that started this level has
        // found its `1`, so unwind
        out.rule((Bound, src), "", &si, "11", "", &State::new("ret_a"), "01", true);
    }

    if lay.n > 0 {
        let (ra, rav) = (State::new("ret_a"), State::new("ret_av"));
        let (rb, rbv) = (State::new("ret_b"), State::new("ret_bv"));
        let rd = State::new("ret_rd");
        for r in 0..t {
            let run = format!("{}1", zeros(r));
            // erase the shift marker, if any, then find the suspended code
            out.rule((Bound, None), "", &ra, &run, "", &rb, &zeros(r + 1), false);
            out.rule((Bound, None), "", &rb, &run, &zeros(r), &rd, "1", true);
        }
        out.rule((Bound, None), "", &rav, "0", "0", &ra, "", false);
        out.rule((Bound, None), "", &rbv, "0", "0", &rb, "", false);

        for (g, w) in lay.guardable.iter().enumerate() {
            let source = w.as_str()[1..].parse::<usize>().ok();
            let code = format!("{}1", lay.code(g));
            out.kind((Bound, source), RuleKind::Enter, "", w, &zeros(t), &code, &lay.entry(0), "01", false);
            let resume = State::from(format!("{w}v"));
            out.kind((Bound, source), RuleKind::Resume, &code, &rd, "", "", &resume, &zeros(lay.k + 1), false);
        }
    }

    Ok(SmxMachine { instructions: out.instructions, provenance: out.provenance })
}

/// Compiles, flattens and validates. A validation failure is a bug in the
/// construction and is reported as an error rather than a machine.
pub fn reduce_cm1_to_smndl(m: &Cm1Machine) -> Result<SmnMachine, HooperError> {
    let smn = flatten_smx_to_smn(&compile_cm1_to_smx(m)?)?;
    check_length_preserving(&smn).map_err(HooperError::NotLengthPreserving)?;
    check_deterministic(&smn).map_err(HooperError::NotDeterministic)?;
    Ok(smn)
}

/// `⟨1|entry(i)|0^c 1 0^padding⟩`.
pub fn encode_cm1_config(m: &Cm1Machine, i: usize, c: u64, padding: usize) -> SmnConfig {
    assert!(c >= 1, "counter must be positive");
    let lay = HooperLayout::new(m);
    let mut right = vec![0u8; c as usize];
    right.push(1);
    right.extend(std::iter::repeat(0).take(padding));
    SmnConfig { left: left_word("1"), state: lay.entry(i), right }
}

/// What an instrumented run of the flattened machine saw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NestingRun {
    /// Deepest nesting level reached.
    pub max_depth: usize,
    /// Nesting level when the run ended.
    pub final_depth: usize,
    /// The run stopped on its own within the fuel.
    pub stopped: bool,
}

/// Runs the flattened machine from `start` for at most `fuel` steps,
/// tracking how deeply nested simulations are entered.
pub fn trace_nesting(m: &Cm1Machine, start: &SmnConfig, fuel: usize) -> Result<NestingRun, HooperError> {
    let smx = compile_cm1_to_smx(m)?;
    let flat = flatten_smx_to_smn(&smx)?;
    let mut by_state: HashMap<&State, Vec<usize>> = HashMap::new();
    for (k, ins) in flat.instructions.iter().enumerate() {
        by_state.entry(&ins.from).or_default().push(k);
    }
    let mut run = NestingRun { max_depth: 0, final_depth: 0, stopped: false };
    let mut cur = start.clone();
    for _ in 0..fuel {
        let Some((k, next)) = by_state
            .get(&cur.state)
            .and_then(|list| list.iter().find_map(|&k| flat.instructions[k].apply(&cur).map(|n| (k, n))))
        else {
            run.stopped = true;
            return Ok(run);
        };
        match smx.provenance[k / 2].kind {
            RuleKind::Enter => run.final_depth += 1,
            RuleKind::Resume => run.final_depth = run.final_depth.saturating_sub(1),
            RuleKind::Plain => {}
        }
        run.max_depth = run.max_depth.max(run.final_depth);
        cur = next;
    }
    Ok(run)
}

pub fn render_smx(m: &SmxMachine) -> String {
    m.instructions.iter().map(|i| format!("{i}\n")).collect()
}

pub fn parse_smx(src: &str) -> Result<SmxMachine, ParseError> {
    let mut instructions = Vec::new();
    for (n, line) in src.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (rule, extra) = parse_instruction_line(line, n + 1)?;
        let swap = match extra {
            None => false,
            Some("swap") => true,
            Some(w) => return Err(ParseError::new(n + 1, format!("unexpected `{w}`"))),
        };
        instructions.push(SmxInstruction { rule, swap });
    }
    Ok(SmxMachine { instructions, provenance: Vec::new() })
}

/// Sidecar listing `index group source` per instruction.
pub fn render_provenance(m: &SmxMachine) -> String {
    let mut out = String::from("# index group source\n");
    for (k, p) in m.provenance.iter().enumerate() {
        let src = p.source.map_or("-".to_string(), |s| s.to_string());
        out.push_str(&format!("{k} {} {src}\n", p.group.name()));
    }
    out
}

/// Instruction counts per group.
pub fn group_sizes(m: &SmxMachine) -> BTreeMap<OpGroup, usize> {
    let mut out = BTreeMap::new();
    for p in &m.provenance {
        *out.entry(p.group).or_default() += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smn::{smn_reachable, smn_successors};

    fn cm(pairs: &[(usize, u32)]) -> Cm1Machine {
        Cm1Machine::from_pairs(pairs).unwrap()
    }

    #[test]
    fn layout() {
        let lay = HooperLayout::new(&cm(&[(5, 1)]));
        assert_eq!(lay.guardable.len(), 6);
        assert_eq!(lay.k, 3);
        assert_eq!(lay.trigger(), 6);
        assert_eq!(lay.code(5), "101");
        assert_eq!(lay.entry(0), State::new("d0"));
        assert_eq!(lay.entry(1), State::new("halt"));
        assert_eq!(HooperLayout::new(&cm(&[])).k, 1);
    }

    #[test]
    fn empty_machine_compiles_to_nothing() {
        let m = compile_cm1_to_smx(&cm(&[])).unwrap();
        assert!(m.instructions.is_empty());
        assert!(reduce_cm1_to_smndl(&cm(&[])).unwrap().is_empty());
    }

    #[test]
    fn groups_partition() {
        let m = compile_cm1_to_smx(&cm(&[(1, 1), (0, 2), (3, 4)])).unwrap();
        assert_eq!(m.provenance.len(), m.instructions.len());
        let total: usize = OpGroup::ALL.iter().map(|&g| m.group(g).len()).sum();
        assert_eq!(total, m.instructions.len());
        assert!(OpGroup::ALL.iter().all(|&g| !m.group(g).is_empty()));
    }

    #[test]
    fn swap_semantics() {
        let ins = SmxInstruction { rule: SmnInstruction::from_display("0", "p", "", "", "q", "1"), swap: true };
        let m = SmxMachine { instructions: vec![ins], provenance: vec![] };
        let start = SmxConfig { config: SmnConfig::from_display("0", "p", ""), flipped: false };
        let next: Vec<_> = smx_successors(&m, &start).into_iter().collect();
        assert_eq!(next, vec![SmxConfig { config: SmnConfig::from_display("1", "q", ""), flipped: true }]);
        let stuck = SmxConfig { config: SmnConfig::from_display("1", "p", ""), flipped: false };
        assert!(smx_successors(&m, &stuck).is_empty());
    }

    #[test]
    fn flattening_tracks_orientation() {
        let m = compile_cm1_to_smx(&cm(&[(1, 1), (0, 2)])).unwrap();
        let flat = flatten_smx_to_smn(&m).unwrap();
        assert_eq!(flat.len(), 2 * m.instructions.len());
        let mut cur = SmxConfig { config: encode_cm1_config(&cm(&[(1, 1), (0, 2)]), 0, 1, 12), flipped: false };
        for _ in 0..400 {
            let next = smx_successors(&m, &cur);
            let flat_next = smn_successors(&flat, &flatten_config(&cur));
            assert_eq!(flat_next, next.iter().map(flatten_config).collect());
            let Some(n) = next.into_iter().next() else { break };
            cur = n;
        }
    }

    #[test]
    fn name_collisions_are_rejected() {
        let rule = SmnInstruction::from_display("0", "p", "", "", "p__m", "1");
        let m = SmxMachine { instructions: vec![SmxInstruction { rule, swap: false }], provenance: vec![] };
        assert!(matches!(flatten_smx_to_smn(&m), Err(HooperError::NameCollision(_))));
    }

    #[test]
    fn encoding() {
        let m = cm(&[(1, 1), (0, 2), (3, 4)]);
        assert_eq!(encode_cm1_config(&m, 0, 1, 0).to_string(), "⟨1|d0|01⟩");
        assert_eq!(encode_cm1_config(&m, 0, 1, 3).to_string(), "⟨1|d0|01000⟩");
        assert_eq!(encode_cm1_config(&m, 2, 4, 1).to_string(), "⟨1|d2|000010⟩");
        assert_eq!(encode_cm1_config(&m, 3, 1, 0).state, State::new("halt"));
    }

    #[test]
    fn single_steps_are_simulated() {
        // d = 1 success, d = 2 failure, d = 2 success, d = 3 with a long counter
        let m = cm(&[(1, 1), (0, 2)]);
        let smn = reduce_cm1_to_smndl(&m).unwrap();
        for (i, c, i2, c2) in [(0, 1, 1, 2), (1, 2, 0, 3), (0, 3, 1, 6), (1, 6, 0, 9), (1, 3, 2, 3)] {
            let pad = 12;
            let from = encode_cm1_config(&m, i, c, pad);
            let to = encode_cm1_config(&m, i2, c2, pad - (c2 - c) as usize);
            let r = smn_reachable(&smn, &from, 1_000_000);
            assert!(r.is_complete());
            assert!(r.set().contains(&to), "({i},{c}) -> ({i2},{c2})");
        }
    }

    #[test]
    fn smx_round_trip() {
        let m = compile_cm1_to_smx(&cm(&[(1, 3), (0, 4)])).unwrap();
        let back = parse_smx(&render_smx(&m)).unwrap();
        assert_eq!(back.instructions, m.instructions);
        assert!(render_provenance(&m).lines().count() == m.instructions.len() + 1);
        assert!(parse_smx("0 p - => - q 1 flip").is_err());
    }

    #[test]
    fn invalid_modifier_is_rejected() {
        let bad = Cm1Machine { instructions: vec![crate::cm1::Cm1Instruction { j: 0, d: 5 }] };
        assert!(compile_cm1_to_smx(&bad).is_err());
    }
}
