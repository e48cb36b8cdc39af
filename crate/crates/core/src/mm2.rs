//! Two-counter machines. `dec` jumps when the counter is strictly positive.

use std::collections::HashMap;
use std::fmt;

use crate::error::ParseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mm2Instruction {
    Inc0,
    Inc1,
    Dec0(usize),
    Dec1(usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Mm2Machine {
    pub instructions: Vec<Mm2Instruction>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mm2Config {
    pub i: usize,
    pub a: u64,
    pub b: u64,
}

impl Mm2Config {
    pub fn new(i: usize, a: u64, b: u64) -> Self {
        Mm2Config { i, a, b }
    }
}

impl fmt::Display for Mm2Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, ({}, {}))", self.i, self.a, self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mm2Outcome {
    Halted { config: Mm2Config, steps: u64 },
    OutOfFuel { config: Mm2Config },
    CycleDetected { config: Mm2Config, period: u64 },
}

impl Mm2Machine {
    pub fn new(instructions: Vec<Mm2Instruction>) -> Self {
        Mm2Machine { instructions }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }
}

pub fn mm2_step(m: &Mm2Machine, c: Mm2Config) -> Option<Mm2Config> {
    let Mm2Config { i, a, b } = c;
    Some(match *m.instructions.get(i)? {
        Mm2Instruction::Inc0 => Mm2Config::new(i + 1, a + 1, b),
        Mm2Instruction::Inc1 => Mm2Config::new(i + 1, a, b + 1),
        Mm2Instruction::Dec0(j) if a > 0 => Mm2Config::new(j, a - 1, b),
        Mm2Instruction::Dec1(j) if b > 0 => Mm2Config::new(j, a, b - 1),
        Mm2Instruction::Dec0(_) | Mm2Instruction::Dec1(_) => Mm2Config::new(i + 1, a, b),
    })
}

/// Runs at most `fuel` steps; repeats are detected exactly.
pub fn mm2_run(m: &Mm2Machine, start: Mm2Config, fuel: u64) -> Mm2Outcome {
    let mut seen: HashMap<Mm2Config, u64> = HashMap::new();
    let mut cur = start;
    for step in 0..=fuel {
        if let Some(first) = seen.insert(cur, step) {
            return Mm2Outcome::CycleDetected { config: cur, period: step - first };
        }
        let Some(next) = mm2_step(m, cur) else {
            return Mm2Outcome::Halted { config: cur, steps: step };
        };
        if step == fuel {
            break;
        }
        cur = next;
    }
    Mm2Outcome::OutOfFuel { config: cur }
}

impl fmt::Display for Mm2Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mm2Instruction::Inc0 => write!(f, "inc0"),
            Mm2Instruction::Inc1 => write!(f, "inc1"),
            Mm2Instruction::Dec0(j) => write!(f, "dec0 {j}"),
            Mm2Instruction::Dec1(j) => write!(f, "dec1 {j}"),
        }
    }
}

pub fn parse_mm2(src: &str) -> Result<Mm2Machine, ParseError> {
    let mut out = Vec::new();
    for (n, line) in src.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| ParseError::new(n + 1, m);
        let words: Vec<&str> = line.split_whitespace().collect();
        let target = |w: Option<&&str>| -> Result<usize, ParseError> {
            w.ok_or_else(|| err("missing jump target"))?
                .parse()
                .map_err(|_| err("jump target is not a natural number"))
        };
        let ins = match words[0] {
            "inc0" if words.len() == 1 => Mm2Instruction::Inc0,
            "inc1" if words.len() == 1 => Mm2Instruction::Inc1,
            "dec0" if words.len() == 2 => Mm2Instruction::Dec0(target(words.get(1))?),
            "dec1" if words.len() == 2 => Mm2Instruction::Dec1(target(words.get(1))?),
            _ => return Err(err("expected `inc0`, `inc1`, `dec0 <j>` or `dec1 <j>`")),
        };
        out.push(ins);
    }
    Ok(Mm2Machine::new(out))
}

pub fn render_mm2(m: &Mm2Machine) -> String {
    m.instructions.iter().map(|i| format!("{i}\n")).collect()
}
