//! The whole chain from a two-counter machine to a semi-unification instance.
//!
//! Every stage is serialized, reparsed and checked to reproduce its own text
//! before the next reduction runs on the reparsed object, so the files on
//! disk are exactly what the chain computed.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cm1::{parse_cm1, reduce_mm2_to_cm1, render_cm1, Cm1Machine};
use crate::cssm::{
    check_local_confluence_bounded, check_reverse_closure, parse_cssm, render_cssm, shorten_to_simple, CssmMachine,
};
use crate::hooper::{compile_cm1_to_smx, encode_cm1_config, flatten_smx_to_smn, render_provenance, SmxMachine};
use crate::mm2::{parse_mm2, render_mm2, Mm2Machine};
use crate::semiu::{
    parse_lu2, parse_ru2, parse_ssu, parse_su, reduce_cssm_to_ssu, reduce_ru2_to_lu2, reduce_ru2_to_semiu,
    reduce_ssu_to_ru2, render_lu2, render_ru2, render_ssu, render_su, Lu2Instance, Ru2Instance, SsuInstance,
};
use crate::smn::{
    check_deterministic, check_length_preserving, parse_smn, profile_verdict, render_smn, smn_reachable,
    BoundProfile, SmnMachine, Verdict,
};
use crate::term::{Names, SuInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Su,
    Lu2,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Su => "su",
            Target::Lu2 => "lu2",
        }
    }
}

/// Paddings `1..=EVIDENCE_PADDINGS` for the start-configuration profile.
pub const EVIDENCE_PADDINGS: usize = 6;
/// Node cap per reachability query of the start-configuration profile.
pub const EVIDENCE_CAP: usize = 1 << 22;
/// Total length bound of the local confluence check run on the CSSM stage.
pub const CONFLUENCE_LEN: usize = 4;
const CONFLUENCE_CAP: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageRecord {
    pub name: &'static str,
    pub file: String,
    /// Digest of the previous stage's text (of its own text for the source).
    pub input_digest: String,
    pub output_digest: String,
    pub text: String,
    /// Validator name and outcome, in the order they ran.
    pub report: Vec<(String, String)>,
}

#[derive(Clone, Debug)]
pub enum FinalInstance {
    Su(SuInstance),
    Lu2(Lu2Instance),
}

#[derive(Clone, Debug)]
pub struct PipelineArtifacts {
    pub stages: Vec<StageRecord>,
    pub mm2: Mm2Machine,
    pub cm1: Cm1Machine,
    pub smx: SmxMachine,
    pub smndl: SmnMachine,
    pub cssm: CssmMachine,
    pub ssu: SsuInstance,
    pub ru2: Ru2Instance,
    pub target: FinalInstance,
    /// Names of every variable in the semi-unification stages.
    pub names: Names,
    /// Reachable-set sizes from the encoded start configuration in the CSSM,
    /// one per padding.
    pub cssm_evidence: BoundProfile,
    pub cssm_verdict: Verdict,
}

impl PipelineArtifacts {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// The final instance as plain semi-unification inequalities.
    pub fn final_su(&self) -> SuInstance {
        match &self.target {
            FinalInstance::Su(s) => s.clone(),
            FinalInstance::Lu2(l) => crate::semiu::lu2_to_semiu(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("stage {stage}: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

fn fail(stage: &'static str, message: impl fmt::Display) -> PipelineError {
    PipelineError { stage, message: message.to_string() }
}

pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

struct Recorder {
    stages: Vec<StageRecord>,
}

impl Recorder {
    /// Reparses `text`, checks the reparse renders identically, and records
    /// the stage. `reload` returns the parsed object with its rendering.
    fn push<T>(
        &mut self,
        name: &'static str,
        file: &str,
        text: String,
        report: Vec<(String, String)>,
        reload: impl FnOnce(&str) -> Result<(T, String), String>,
    ) -> Result<T, PipelineError> {
        let (back, again) = reload(&text).map_err(|e| fail(name, format!("reparse failed: {e}")))?;
        if again != text {
            return Err(fail(name, "serialization does not round-trip"));
        }
        let output_digest = digest(&text);
        let input_digest = self.stages.last().map_or_else(|| output_digest.clone(), |s| s.output_digest.clone());
        self.stages.push(StageRecord { name, file: file.into(), input_digest, output_digest, text, report });
        Ok(back)
    }
}

fn reload<T, E: fmt::Display>(parsed: Result<T, E>, render: impl Fn(&T) -> String) -> Result<(T, String), String> {
    let x = parsed.map_err(|e| e.to_string())?;
    let t = render(&x);
    Ok((x, t))
}

fn ok(name: &str) -> (String, String) {
    (name.to_string(), "ok".to_string())
}

pub fn reduce_all(m: &Mm2Machine, a0: u64, b0: u64, target: Target) -> Result<PipelineArtifacts, PipelineError> {
    let mut rec = Recorder { stages: Vec::new() };

    let mm2 = rec.push("mm2", "01-mm2.mm2", render_mm2(m), vec![], |s| reload(parse_mm2(s), render_mm2))?;

    let cm1 = reduce_mm2_to_cm1(&mm2, a0, b0);
    cm1.validate().map_err(|e| fail("cm1", e))?;
    let report = vec![ok("modifiers"), ("start".into(), format!("a0={a0} b0={b0}"))];
    let cm1 = rec.push("cm1", "02-cm1.cm1", render_cm1(&cm1), report, |s| reload(parse_cm1(s), render_cm1))?;

    let smx = compile_cm1_to_smx(&cm1).map_err(|e| fail("smndl", e))?;
    let smn = flatten_smx_to_smn(&smx).map_err(|e| fail("smndl", e))?;
    check_length_preserving(&smn).map_err(|i| fail("smndl", format!("not length-preserving: `{i}`")))?;
    check_deterministic(&smn).map_err(|c| fail("smndl", format!("not deterministic at {c}")))?;
    let report = vec![ok("length-preserving"), ok("deterministic")];
    let smndl = rec.push("smndl", "03-smndl.smn", render_smn(&smn), report, |s| reload(parse_smn(s), render_smn))?;

    let cssm = shorten_to_simple(&smndl).map_err(|e| fail("cssm", e))?;
    check_reverse_closure(&cssm).map_err(|i| fail("cssm", format!("missing reverse of `{i}`")))?;
    check_local_confluence_bounded(&cssm, CONFLUENCE_LEN, CONFLUENCE_CAP)
        .map_err(|u| fail("cssm", format!("no join found from {} to {} and {}", u.source, u.left, u.right)))?;
    let cssm_evidence = start_profile(&cm1, &cssm.to_smn());
    let cssm_verdict = profile_verdict(&cssm_evidence);
    let report = vec![
        ok("simple"),
        ok("reverse-closed"),
        (format!("locally-confluent<={CONFLUENCE_LEN}"), "ok".into()),
        ("start-profile".into(), format!("{:?}", cssm_evidence.values())),
        ("verdict".into(), verdict_name(cssm_verdict)),
    ];
    let cssm = rec.push("cssm", "04-cssm.cssm", render_cssm(&cssm), report, |s| reload(parse_cssm(s), render_cssm))?;

    let mut names = Names::new();
    let ssu = reduce_cssm_to_ssu(&cssm, &mut names).map_err(|e| fail("ssu", e))?;
    let report = vec![("constraints".into(), ssu.len().to_string())];
    let text = render_ssu(&ssu, &names);
    let ssu = rec.push("ssu", "05-ssu.ssu", text, report, |s| {
        let x = parse_ssu(s, &mut names).map_err(|e| e.to_string())?;
        let t = render_ssu(&x, &names);
        Ok((x, t))
    })?;

    let ru2 = reduce_ssu_to_ru2(&ssu, &mut names);
    let text = render_ru2(&ru2, &names);
    let ru2 = rec.push("ru2", "06-ru2.ru2", text, vec![ok("right-uniform")], |s| {
        let x = parse_ru2(s, &mut names).map_err(|e| e.to_string())?;
        let t = render_ru2(&x, &names);
        Ok((x, t))
    })?;

    let target = match target {
        Target::Su => {
            let su = reduce_ru2_to_semiu(&ru2);
            let text = render_su(&su, &names);
            let su = rec.push("su", "07-su.su", text, vec![], |s| {
        let x = parse_su(s, &mut names).map_err(|e| e.to_string())?;
        let t = render_su(&x, &names);
        Ok((x, t))
    })?;
            FinalInstance::Su(su)
        }
        Target::Lu2 => {
            let lu2 = reduce_ru2_to_lu2(&ru2, &mut names);
            let text = render_lu2(&lu2, &names);
            let lu2 = rec.push("lu2", "07-lu2.lu2", text, vec![ok("left-uniform")], |s| {
        let x = parse_lu2(s, &mut names).map_err(|e| e.to_string())?;
        let t = render_lu2(&x, &names);
        Ok((x, t))
    })?;
            FinalInstance::Lu2(lu2)
        }
    };

    Ok(PipelineArtifacts {
        stages: rec.stages,
        mm2,
        cm1,
        smx,
        smndl,
        cssm,
        ssu,
        ru2,
        target,
        names,
        cssm_evidence,
        cssm_verdict,
    })
}

/// Reachable-set sizes in `m` from `⟨1|entry(0)|0 1 0^p⟩` for each padding `p`.
pub fn start_profile(cm1: &Cm1Machine, m: &SmnMachine) -> BoundProfile {
    let mut p = BoundProfile { cells: Vec::new() };
    for pad in 1..=EVIDENCE_PADDINGS {
        let r = smn_reachable(m, &encode_cm1_config(cm1, 0, 1, pad), EVIDENCE_CAP);
        p.cells.push(crate::smn::ProfileCell { len: pad, max_reach: r.len() as u64, truncated: !r.is_complete() });
    }
    p
}

pub fn verdict_name(v: Verdict) -> String {
    match v {
        Verdict::Plateau(n) => format!("plateau({n})"),
        Verdict::Growth => "growth".into(),
        Verdict::Inconclusive => "inconclusive".into(),
    }
}

/// Writes every stage file into `dir`, plus the Hooper provenance table when
/// asked.
pub fn write_artifacts(a: &PipelineArtifacts, dir: &Path, provenance: bool) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for s in &a.stages {
        fs::write(dir.join(&s.file), &s.text)?;
    }
    if provenance {
        fs::write(dir.join("03-smndl.provenance"), render_provenance(&a.smx))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mm2::Mm2Instruction::*;

    #[test]
    fn empty_machine_completes() {
        let a = reduce_all(&Mm2Machine::default(), 0, 0, Target::Su).unwrap();
        let names: Vec<_> = a.stages.iter().map(|s| s.name).collect();
        assert_eq!(names, ["mm2", "cm1", "smndl", "cssm", "ssu", "ru2", "su"]);
        assert!(crate::term::bounded_solve_su(&a.final_su(), 0).is_some());
        assert_eq!(a.cssm_verdict, Verdict::Plateau(1));
        for w in a.stages.windows(2) {
            assert_eq!(w[1].input_digest, w[0].output_digest);
        }
    }

    #[test]
    fn deterministic_output() {
        let m = Mm2Machine::new(vec![Inc0, Dec0(0)]);
        let x = reduce_all(&m, 1, 1, Target::Lu2).unwrap();
        let y = reduce_all(&m, 1, 1, Target::Lu2).unwrap();
        assert_eq!(x.stages, y.stages);
        assert_eq!(x.stages.last().unwrap().file, "07-lu2.lu2");
        assert_eq!(x.cssm_verdict, Verdict::Growth);
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(digest(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
