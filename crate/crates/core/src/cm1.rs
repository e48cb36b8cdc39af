//! One-counter machines and the reduction from two-counter machines.
//!
//! An instruction `(j, d)` at index `i` multiplies the counter by `(d+1)/d`
//! and jumps to `j` when `d` divides it, and otherwise falls through to
//! `i + 1`. Indices past the end are halting.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::error::ParseError;
use crate::mm2::{Mm2Instruction, Mm2Machine};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Cm1Error {
    #[error("counter modifier {0} is outside 1..4")]
    BadModifier(u32),
    #[error("counter value must be positive")]
    ZeroCounter,
    #[error("counter bound 1 + {c}·2^{n} does not fit in 64 bits")]
    BoundOverflow { c: u64, n: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cm1Instruction {
    pub j: usize,
    pub d: u8,
}

impl Cm1Instruction {
    pub fn new(j: usize, d: u32) -> Result<Self, Cm1Error> {
        if (1..=4).contains(&d) {
            Ok(Cm1Instruction { j, d: d as u8 })
        } else {
            Err(Cm1Error::BadModifier(d))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Cm1Machine {
    pub instructions: Vec<Cm1Instruction>,
}

impl Cm1Machine {
    pub fn new(instructions: Vec<Cm1Instruction>) -> Self {
        Cm1Machine { instructions }
    }

    /// Builds a machine from `(j, d)` pairs, validating every modifier.
    pub fn from_pairs(pairs: &[(usize, u32)]) -> Result<Self, Cm1Error> {
        pairs
            .iter()
            .map(|&(j, d)| Cm1Instruction::new(j, d))
            .collect::<Result<_, _>>()
            .map(Cm1Machine::new)
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn validate(&self) -> Result<(), Cm1Error> {
        match self.instructions.iter().find(|ins| !(1..=4).contains(&ins.d)) {
            Some(ins) => Err(Cm1Error::BadModifier(ins.d as u32)),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cm1Config {
    i: usize,
    c: BigUint,
}

impl Cm1Config {
    pub fn new(i: usize, c: impl Into<BigUint>) -> Result<Self, Cm1Error> {
        let c = c.into();
        if c.is_zero() {
            return Err(Cm1Error::ZeroCounter);
        }
        Ok(Cm1Config { i, c })
    }

    /// The start configuration `(0, 1)`.
    pub fn start() -> Self {
        Cm1Config { i: 0, c: BigUint::one() }
    }

    pub fn index(&self) -> usize {
        self.i
    }

    pub fn counter(&self) -> &BigUint {
        &self.c
    }

    /// Counter as `u64`, when it fits.
    pub fn counter_u64(&self) -> Option<u64> {
        self.c.to_u64()
    }
}

impl fmt::Display for Cm1Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.c)
    }
}

pub fn cm1_step(m: &Cm1Machine, cfg: &Cm1Config) -> Cm1Config {
    let Some(ins) = m.instructions.get(cfg.i) else {
        return cfg.clone();
    };
    let d = BigUint::from(ins.d);
    if (&cfg.c % &d).is_zero() {
        Cm1Config { i: ins.j, c: &cfg.c / &d * (ins.d as u32 + 1) }
    } else {
        Cm1Config { i: cfg.i + 1, c: cfg.c.clone() }
    }
}

pub fn cm1_halting(m: &Cm1Machine, cfg: &Cm1Config) -> bool {
    cfg.i >= m.len()
}

/// `|m|·c + i`, strictly increasing along non-halting steps.
pub fn cm1_measure(m: &Cm1Machine, cfg: &Cm1Config) -> BigUint {
    &cfg.c * m.len() + cfg.i
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cm1Outcome {
    Halted { config: Cm1Config, steps: u64 },
    OutOfFuel { config: Cm1Config },
}

pub fn cm1_run(m: &Cm1Machine, fuel: u64) -> Cm1Outcome {
    cm1_run_from(m, Cm1Config::start(), fuel)
}

pub fn cm1_run_from(m: &Cm1Machine, start: Cm1Config, fuel: u64) -> Cm1Outcome {
    let mut cur = start;
    for steps in 0..=fuel {
        if cm1_halting(m, &cur) {
            return Cm1Outcome::Halted { config: cur, steps };
        }
        if steps == fuel {
            break;
        }
        cur = cm1_step(m, &cur);
    }
    Cm1Outcome::OutOfFuel { config: cur }
}

/// The first `len` configurations of the run from `start`.
pub fn cm1_trace(m: &Cm1Machine, start: Cm1Config, len: usize) -> Vec<Cm1Config> {
    let mut out = Vec::with_capacity(len);
    let mut cur = start;
    for _ in 0..len {
        let next = cm1_step(m, &cur);
        out.push(cur);
        cur = next;
    }
    out
}

/// `1 + c·2^n`: every counter visited by a run halting within `n` steps is
/// below this bound.
pub fn cm1_counter_bound_after_halt(c: u64, n: u32) -> Result<u64, Cm1Error> {
    1u64.checked_shl(n)
        .filter(|_| n < 64)
        .and_then(|p| c.checked_mul(p))
        .and_then(|x| x.checked_add(1))
        .ok_or(Cm1Error::BoundOverflow { c, n })
}

/// Arbitrary-precision variant of [`cm1_counter_bound_after_halt`].
pub fn cm1_counter_bound_exact(c: &BigUint, n: u64) -> BigUint {
    c * (BigUint::one() << n) + 1u32
}

/// Where each two-counter instruction landed in the produced machine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cm1Layout {
    /// Length of the initialization prefix; also `entry(0)`.
    pub init_len: usize,
    /// `entry[i]` is the first index of the block for instruction `i`;
    /// `entry[len]` is the halting index.
    pub entry: Vec<usize>,
}

impl Cm1Layout {
    /// Entry index for a two-counter program index (past-the-end maps to halt).
    pub fn entry_of(&self, i: usize) -> usize {
        self.entry[i.min(self.entry.len() - 1)]
    }
}

fn block_len(ins: &Mm2Instruction) -> usize {
    match ins {
        Mm2Instruction::Inc0 => 1,
        Mm2Instruction::Inc1 => 2,
        Mm2Instruction::Dec0(_) => 6,
        Mm2Instruction::Dec1(_) => 5,
    }
}

/// Longest block; bounds the one-counter steps spent per two-counter step.
pub const MAX_BLOCK_LEN: u64 = 6;

/// Encodes `(i, (a, b))` as `(entry(i), 2^a·3^b·5^m)`.
///
/// Block layout, for instruction `i` starting at `e`:
///
/// ```text
/// inc0    e: (entry(i+1), 1)
/// inc1    e: (e+1, 1)  e+1: (entry(i+1), 2)
/// dec0 j  e: (e+4, 2)  e+1..e+3: jump gadget to entry(i+1)
///         e+4: (e+5, 3)  e+5: (entry(j), 4)
/// dec1 j  e: (e+4, 3)  e+1..e+3: jump gadget to entry(i+1)
///         e+4: (entry(j), 4)
/// ```
///
/// The jump gadget `(x+1, 1) (x+2, 1) (target, 4)` multiplies by 5 and always
/// jumps. A failed decrement falls into it, so only `5^m` records that the
/// path was taken.
pub fn reduce_mm2_to_cm1_with_layout(m: &Mm2Machine, a0: u64, b0: u64) -> (Cm1Machine, Cm1Layout) {
    let init_len = (a0 + b0 + b0) as usize;
    let mut entry = Vec::with_capacity(m.len() + 1);
    let mut at = init_len;
    for ins in &m.instructions {
        entry.push(at);
        at += block_len(ins);
    }
    entry.push(at);
    let layout = Cm1Layout { init_len, entry };
    let e = |i: usize| layout.entry_of(i);

    let mut out = Vec::with_capacity(at);
    let mut push = |j: usize, d: u32| out.push(Cm1Instruction::new(j, d).unwrap());
    for k in 0..(a0 + b0) as usize {
        push(k + 1, 1);
    }
    for k in (a0 + b0) as usize..init_len {
        push(k + 1, 2);
    }
    for (i, ins) in m.instructions.iter().enumerate() {
        let s = layout.entry[i];
        match *ins {
            Mm2Instruction::Inc0 => push(e(i + 1), 1),
            Mm2Instruction::Inc1 => {
                push(s + 1, 1);
                push(e(i + 1), 2);
            }
            Mm2Instruction::Dec0(j) => {
                push(s + 4, 2);
                push(s + 2, 1);
                push(s + 3, 1);
                push(e(i + 1), 4);
                push(s + 5, 3);
                push(e(j), 4);
            }
            Mm2Instruction::Dec1(j) => {
                push(s + 4, 3);
                push(s + 2, 1);
                push(s + 3, 1);
                push(e(i + 1), 4);
                push(e(j), 4);
            }
        }
    }
    (Cm1Machine::new(out), layout)
}

pub fn reduce_mm2_to_cm1(m: &Mm2Machine, a0: u64, b0: u64) -> Cm1Machine {
    reduce_mm2_to_cm1_with_layout(m, a0, b0).0
}

/// Counter value `2^a·3^b·5^m`.
pub fn encode_counters(a: u64, b: u64, m: u64) -> BigUint {
    BigUint::from(2u32).pow(a as u32) * BigUint::from(3u32).pow(b as u32) * BigUint::from(5u32).pow(m as u32)
}

/// Splits a counter into `(a, b, m)` when it has the form `2^a·3^b·5^m`.
pub fn decode_counters(c: &BigUint) -> Option<(u64, u64, u64)> {
    let mut c = c.clone();
    let mut exps = [0u64; 3];
    for (k, p) in [2u32, 3, 5].into_iter().enumerate() {
        while (&c % p).is_zero() {
            c /= p;
            exps[k] += 1;
        }
    }
    c.is_one().then_some((exps[0], exps[1], exps[2]))
}

pub fn parse_cm1(src: &str) -> Result<Cm1Machine, ParseError> {
    let mut out = Vec::new();
    for (n, line) in src.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| ParseError::new(n + 1, m);
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != 2 {
            return Err(err("expected `<j> <d>`".into()));
        }
        let j: usize = words[0].parse().map_err(|_| err("bad jump target".into()))?;
        let d: u32 = words[1].parse().map_err(|_| err("bad modifier".into()))?;
        out.push(Cm1Instruction::new(j, d).map_err(|e| err(e.to_string()))?);
    }
    Ok(Cm1Machine::new(out))
}

pub fn render_cm1(m: &Cm1Machine) -> String {
    m.instructions.iter().map(|ins| format!("{} {}\n", ins.j, ins.d)).collect()
}

/// Like [`render_cm1`], with comments marking the block of every source
/// instruction.
pub fn render_cm1_annotated(m: &Cm1Machine, source: &Mm2Machine, layout: &Cm1Layout) -> String {
    let mut out = String::new();
    if layout.init_len > 0 {
        out.push_str("# init\n");
    }
    for (k, ins) in m.instructions.iter().enumerate() {
        if let Some(i) = layout.entry[..source.len()].iter().position(|&e| e == k) {
            out.push_str(&format!("# block {i}: {}\n", source.instructions[i]));
        }
        out.push_str(&format!("{} {}\n", ins.j, ins.d));
    }
    out.push_str(&format!("# halt at {}\n", layout.entry[source.len()]));
    out
}
