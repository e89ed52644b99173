//! LOCC protocol scripts: ordered rounds of local instruments, optionally
//! conditioned on earlier classical outcomes.
//!
//! Script files are line based:
//!
//! ```text
//! # comment
//! name <identifier>                                  (optional)
//! round <A|B> <instrument> [when <k> <outcome>=<instrument> ...]
//! ```
//!
//! `<instrument>` is a stock name (see [`crate::instruments::BUILTIN_NAMES`])
//! or `file:<path>` pointing at an instrument definition. A `when` clause
//! switches to the listed instrument when round `k` (0-based, earlier than
//! the current round) produced the given outcome; otherwise the default
//! instrument applies.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instruments::{format::parse_instrument, resolve_builtin, QuantumInstrument};

/// Boundary qubit held by Alice.
pub const ALICE_QUBIT: &str = "q_A";
/// Boundary qubit held by Bob.
pub const BOB_QUBIT: &str = "q_B";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    /// Label of the boundary factor this party acts on.
    pub fn qubit(self) -> &'static str {
        match self {
            Party::A => ALICE_QUBIT,
            Party::B => BOB_QUBIT,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::A => "A",
            Party::B => "B",
        })
    }
}

/// Switches a round's instrument on an earlier round's classical outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub round: usize,
    pub variants: BTreeMap<String, QuantumInstrument>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub party: Party,
    pub instrument: QuantumInstrument,
    pub condition: Option<Condition>,
}

impl Round {
    pub fn new(party: Party, instrument: QuantumInstrument) -> Self {
        Self {
            party,
            instrument,
            condition: None,
        }
    }

    pub fn conditioned(
        party: Party,
        default: QuantumInstrument,
        round: usize,
        variants: BTreeMap<String, QuantumInstrument>,
    ) -> Self {
        Self {
            party,
            instrument: default,
            condition: Some(Condition { round, variants }),
        }
    }

    /// The instrument to apply given the outcomes of all earlier rounds.
    pub fn instrument_for(&self, transcript: &[String]) -> &QuantumInstrument {
        self.condition
            .as_ref()
            .and_then(|c| transcript.get(c.round).and_then(|o| c.variants.get(o)))
            .unwrap_or(&self.instrument)
    }

    /// Every instrument this round might apply.
    pub fn instruments(&self) -> impl Iterator<Item = &QuantumInstrument> {
        std::iter::once(&self.instrument)
            .chain(self.condition.iter().flat_map(|c| c.variants.values()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolScript {
    name: String,
    rounds: Vec<Round>,
}

impl ProtocolScript {
    /// Conditions may only look back at strictly earlier rounds.
    pub fn new(name: impl Into<String>, rounds: Vec<Round>) -> Result<Self> {
        for (i, r) in rounds.iter().enumerate() {
            if let Some(c) = &r.condition {
                if c.round >= i {
                    return Err(Error::arg(format!(
                        "round {i} is conditioned on round {}, which is not earlier",
                        c.round
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            rounds,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    /// True if some round adapts to an outcome obtained by the other party,
    /// i.e. the protocol needs the classical channel.
    pub fn uses_classical_channel(&self) -> bool {
        self.rounds.iter().any(|r| {
            r.condition
                .as_ref()
                .is_some_and(|c| self.rounds[c.round].party != r.party)
        })
    }
}

/// Number of one-way-local rounds: maximal runs of consecutive rounds by the
/// same party count once, since a party's back-to-back instruments compose
/// into a single local instrument.
pub fn classify_locc_depth(script: &ProtocolScript) -> Result<usize> {
    let rounds = script.rounds();
    if rounds.is_empty() {
        return Err(Error::arg("empty protocol has no LOCC depth"));
    }
    Ok(1 + rounds
        .windows(2)
        .filter(|w| w[0].party != w[1].party)
        .count())
}

/// Parses a script, resolving `file:` references through `load_file`.
pub fn parse_script(
    text: &str,
    default_name: &str,
    load_file: &dyn Fn(&str) -> Result<QuantumInstrument>,
) -> Result<ProtocolScript> {
    let resolve = |spec: &str, line: usize| -> Result<QuantumInstrument> {
        let inst = match spec.strip_prefix("file:") {
            Some(path) => load_file(path),
            None => resolve_builtin(spec),
        };
        inst.map_err(|e| match e {
            Error::Parse { .. } => e,
            other => Error::parse(line, other.to_string()),
        })
    };

    let mut name = default_name.to_string();
    let mut rounds = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let words: Vec<&str> = body.split_whitespace().collect();
        match words[..] {
            ["name", n] => name = n.to_string(),
            ["round", party, spec, ref rest @ ..] => {
                let party = match party {
                    "A" => Party::A,
                    "B" => Party::B,
                    other => return Err(Error::parse(line, format!("unknown party '{other}'"))),
                };
                let default = resolve(spec, line)?;
                let round = match rest {
                    [] => Round::new(party, default),
                    ["when", k, ref cases @ ..] if !cases.is_empty() => {
                        let k: usize = k.parse().map_err(|_| {
                            Error::parse(line, format!("invalid round index '{k}'"))
                        })?;
                        let mut variants = BTreeMap::new();
                        for case in cases {
                            let (outcome, spec) = case.split_once('=').ok_or_else(|| {
                                Error::parse(
                                    line,
                                    format!("expected <outcome>=<instrument>, got '{case}'"),
                                )
                            })?;
                            variants.insert(outcome.to_string(), resolve(spec, line)?);
                        }
                        Round::conditioned(party, default, k, variants)
                    }
                    _ => {
                        return Err(Error::parse(
                            line,
                            "expected 'when <round> <outcome>=<instrument> ...'",
                        ))
                    }
                };
                rounds.push(round);
            }
            _ => return Err(Error::parse(line, format!("unexpected '{body}'"))),
        }
    }
    ProtocolScript::new(name, rounds).map_err(|e| Error::parse(0, e.to_string()))
}

/// Reads a script from disk; `file:` paths resolve relative to its directory.
pub fn load_script(path: &Path) -> Result<ProtocolScript> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::arg(format!("cannot read {}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_script(&text, &stem, &|rel| {
        let p = dir.join(rel);
        let body = std::fs::read_to_string(&p)
            .map_err(|e| Error::arg(format!("cannot read {}: {e}", p.display())))?;
        parse_instrument(&body)
    })
}

const BUNDLED_SCRIPTS: &[(&str, &str)] = &[
    ("chsh", include_str!("../data/scripts/chsh.locc")),
    ("zz", include_str!("../data/scripts/zz.locc")),
    ("xx", include_str!("../data/scripts/xx.locc")),
    ("zx", include_str!("../data/scripts/zx.locc")),
    ("tilted", include_str!("../data/scripts/tilted.locc")),
    (
        "feed-forward",
        include_str!("../data/scripts/feed-forward.locc"),
    ),
    (
        "weak-then-sharp",
        include_str!("../data/scripts/weak-then-sharp.locc"),
    ),
    ("unsharp-x", include_str!("../data/scripts/unsharp-x.locc")),
    ("bob-first", include_str!("../data/scripts/bob-first.locc")),
    (
        "noisy-alice",
        include_str!("../data/scripts/noisy-alice.locc"),
    ),
    (
        "damped-bob",
        include_str!("../data/scripts/damped-bob.locc"),
    ),
    ("trine-z", include_str!("../data/scripts/trine-z.locc")),
    ("ping-pong", include_str!("../data/scripts/ping-pong.locc")),
];

const BUNDLED_INSTRUMENTS: &[(&str, &str)] = &[(
    "unsharp-x.inst",
    include_str!("../data/scripts/unsharp-x.inst"),
)];

fn bundled_instrument(path: &str) -> Result<QuantumInstrument> {
    BUNDLED_INSTRUMENTS
        .iter()
        .find(|(name, _)| *name == path)
        .ok_or_else(|| Error::arg(format!("no bundled instrument '{path}'")))
        .and_then(|(_, text)| parse_instrument(text))
}

/// Looks up a script shipped with the crate by name.
pub fn bundled_script(name: &str) -> Result<ProtocolScript> {
    let (stem, text) = BUNDLED_SCRIPTS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::arg(format!("no bundled script '{name}'")))?;
    parse_script(text, stem, &bundled_instrument)
}

/// Every script shipped with the crate, in a fixed order.
pub fn bundled_corpus() -> Vec<ProtocolScript> {
    BUNDLED_SCRIPTS
        .iter()
        .map(|(n, _)| bundled_script(n).expect("bundled scripts parse"))
        .collect()
}

/// The two-round CHSH protocol with free setting choice on both sides.
pub fn chsh_script() -> ProtocolScript {
    bundled_script("chsh").expect("bundled chsh script parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instruments::{identity, measure_x, measure_z, validate_instrument};

    fn alternating(k: usize) -> ProtocolScript {
        let rounds = (0..k)
            .map(|i| Round::new(if i % 2 == 0 { Party::A } else { Party::B }, measure_z()))
            .collect();
        ProtocolScript::new("alt", rounds).unwrap()
    }

    #[test]
    fn depth_of_single_round_is_one() {
        let s = ProtocolScript::new("one", vec![Round::new(Party::A, measure_z())]).unwrap();
        assert_eq!(classify_locc_depth(&s).unwrap(), 1);
    }

    #[test]
    fn chsh_is_two_rounds() {
        assert_eq!(classify_locc_depth(&chsh_script()).unwrap(), 2);
    }

    #[test]
    fn alternating_rounds_count() {
        for k in 1..7 {
            assert_eq!(classify_locc_depth(&alternating(k)).unwrap(), k);
        }
    }

    #[test]
    fn same_party_runs_merge() {
        let s = ProtocolScript::new(
            "runs",
            vec![
                Round::new(Party::A, measure_z()),
                Round::new(Party::A, measure_x()),
                Round::new(Party::B, identity(2)),
            ],
        )
        .unwrap();
        assert_eq!(classify_locc_depth(&s).unwrap(), 2);
    }

    #[test]
    fn empty_protocol_rejected() {
        let s = ProtocolScript::new("empty", vec![]).unwrap();
        assert!(matches!(classify_locc_depth(&s), Err(Error::Argument(_))));
    }

    #[test]
    fn conditions_must_look_back() {
        let mut variants = BTreeMap::new();
        variants.insert("0".to_string(), measure_x());
        let r = Round::conditioned(Party::B, measure_z(), 0, variants);
        assert!(ProtocolScript::new("bad", vec![r.clone()]).is_err());
        let ok = ProtocolScript::new("ok", vec![Round::new(Party::A, measure_z()), r]).unwrap();
        assert!(ok.uses_classical_channel());
        assert_eq!(ok.rounds()[1].instrument_for(&["0".into()]), &measure_x());
        assert_eq!(ok.rounds()[1].instrument_for(&["1".into()]), &measure_z());
    }

    #[test]
    fn corpus_parses_and_is_valid() {
        let corpus = bundled_corpus();
        assert!(corpus.len() >= 10);
        let mut depth_two = 0;
        for s in &corpus {
            assert!(
                !s.rounds().is_empty() && s.rounds().len() <= 3,
                "{}",
                s.name()
            );
            for r in s.rounds() {
                for inst in r.instruments() {
                    assert!(validate_instrument(inst).is_pass(), "{}", s.name());
                    assert_eq!(inst.dimension(), 2);
                }
            }
            if classify_locc_depth(s).unwrap() == 2 {
                depth_two += 1;
            }
        }
        assert!(depth_two >= 10);
        let names: Vec<&str> = corpus.iter().map(|s| s.name()).collect();
        assert!(names.contains(&"chsh") && names.contains(&"ping-pong"));
    }

    #[test]
    fn parse_errors_have_lines() {
        let none = |_: &str| -> Result<QuantumInstrument> { Err(Error::arg("no files")) };
        let err = parse_script("round A z\nround C z\n", "x", &none).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_script("round A nope\n", "x", &none).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_script("round A z\nround B z when 0 0\n", "x", &none).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_script("round A file:x.inst\n", "x", &none).is_err());
        assert!(parse_script("frobnicate\n", "x", &none).is_err());
    }

    #[test]
    fn script_from_disk_resolves_relative_files() {
        let dir = std::env::temp_dir().join(format!("erepr-script-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(
            dir.join("m.inst"),
            crate::instruments::format::write_instrument(&measure_x()),
        )
        .unwrap();
        std::fs::write(dir.join("s.locc"), "round A file:m.inst\nround B z\n").unwrap();
        let s = load_script(&dir.join("s.locc")).unwrap();
        assert_eq!(s.name(), "s");
        assert_eq!(s.rounds()[0].instrument, measure_x());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
