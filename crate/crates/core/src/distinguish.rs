//! Exact LOCC-accessible statistics and the comparisons built on them:
//! distinguishability sweeps, code-dimension checks, no-signaling and
//! reference-frame misalignment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{exact_chsh, CHSHConfig, CHSHResult};
use crate::error::{Error, Result};
use crate::instruments::{apply_instrument, one_way_local_instrument, QuantumInstrument};
use crate::linalg::{purity, DensityMatrix};
use crate::protocol::{Party, ProtocolScript, Round, ALICE_QUBIT, BOB_QUBIT};
use crate::worlds::{build_er_world, deliver_pair, pair_layout, EprParams, World};

/// Exact distribution over classical transcripts, one outcome label per round.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeDistribution {
    entries: BTreeMap<Vec<String>, f64>,
}

impl OutcomeDistribution {
    pub fn from_entries(entries: impl IntoIterator<Item = (Vec<String>, f64)>) -> Self {
        let mut out = Self::default();
        for (k, p) in entries {
            *out.entries.entry(k).or_insert(0.0) += p;
        }
        out
    }

    pub fn probability(&self, transcript: &[String]) -> f64 {
        self.entries.get(transcript).copied().unwrap_or(0.0)
    }

    /// Probability of the transcript whose outcome labels concatenate to `key`.
    pub fn probability_of(&self, key: &str) -> f64 {
        self.entries
            .iter()
            .filter(|(k, _)| k.concat() == key)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[String], f64)> {
        self.entries.iter().map(|(k, &p)| (k.as_slice(), p))
    }

    /// Concatenated outcome strings, in transcript order.
    pub fn support(&self) -> Vec<String> {
        self.entries.keys().map(|k| k.concat()).collect()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distribution of the outcomes of the given rounds only.
    pub fn marginal(&self, rounds: &[usize]) -> Self {
        Self::from_entries(self.entries.iter().map(|(k, &p)| {
            (
                rounds.iter().filter_map(|&r| k.get(r).cloned()).collect(),
                p,
            )
        }))
    }
}

impl fmt::Display for OutcomeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, p)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "\"{}\": {p}", k.concat())?;
        }
        f.write_str("}")
    }
}

#[derive(Serialize)]
struct EntryDoc<'a> {
    transcript: &'a [String],
    outcome: String,
    probability: f64,
}

impl Serialize for OutcomeDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.entries.iter().map(|(k, &p)| EntryDoc {
            transcript: k,
            outcome: k.concat(),
            probability: p,
        }))
    }
}

/// `½ Σ |p_i − q_i|` over the union of supports.
pub fn total_variation(p: &OutcomeDistribution, q: &OutcomeDistribution) -> f64 {
    let keys: BTreeSet<&Vec<String>> = p.entries.keys().chain(q.entries.keys()).collect();
    let sum: f64 = keys
        .into_iter()
        .map(|k| (p.probability(k) - q.probability(k)).abs())
        .sum();
    (0.5 * sum).clamp(0.0, 1.0)
}

fn check_local(round_index: usize, party: Party, inst: &QuantumInstrument) -> Result<()> {
    if inst.dimension() != 2 {
        return Err(Error::Locality(format!(
            "round {round_index}: instrument of dimension {} does not fit party {party}'s single qubit {}",
            inst.dimension(),
            party.qubit()
        )));
    }
    Ok(())
}

fn enumerate(
    rounds: &[Round],
    state: &DensityMatrix,
    transcript: &mut Vec<String>,
    weight: f64,
    out: &mut BTreeMap<Vec<String>, f64>,
) -> Result<()> {
    let index = transcript.len();
    let Some(round) = rounds.get(index) else {
        *out.entry(transcript.clone()).or_insert(0.0) += weight;
        return Ok(());
    };
    let local = round.instrument_for(transcript);
    check_local(index, round.party, local)?;
    let joint =
        one_way_local_instrument(state.layout(), round.party.qubit(), local, &BTreeMap::new())?;
    let records = apply_instrument(&joint, state, &[ALICE_QUBIT, BOB_QUBIT])?;
    for rec in records {
        transcript.push(rec.outcome);
        match &rec.post_state {
            Some(post) => enumerate(rounds, post, transcript, weight * rec.probability, out)?,
            // impossible branch: keep its transcripts in the support with weight 0
            None => enumerate(rounds, state, transcript, 0.0, out)?,
        }
        transcript.pop();
    }
    Ok(())
}

/// Exact transcript distribution of `script` on the pair `world` delivers,
/// by enumerating every branch of every round.
pub fn accessible_distribution(
    world: &World,
    script: &ProtocolScript,
) -> Result<OutcomeDistribution> {
    let pair = deliver_pair(world)?;
    distribution_on_pair(&pair.state, script)
}

/// As [`accessible_distribution`], starting from a given pair state.
pub fn distribution_on_pair(
    state: &DensityMatrix,
    script: &ProtocolScript,
) -> Result<OutcomeDistribution> {
    if state.layout() != &pair_layout() {
        return Err(Error::arg("protocol state must live on (q_A, q_B)"));
    }
    let mut out = BTreeMap::new();
    enumerate(script.rounds(), state, &mut Vec::new(), 1.0, &mut out)?;
    Ok(OutcomeDistribution { entries: out })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub tvd_vs_er: f64,
    pub s_abs: f64,
    pub pair_purity: f64,
}

/// Distinguishability from the ER world along a coupling grid that starts at
/// zero. Rows come back in grid order.
pub fn theorem1_sweep(
    grid: &[f64],
    script: &ProtocolScript,
    family: &EprParams,
) -> Result<Vec<SweepRow>> {
    match grid.first() {
        None => return Err(Error::arg("lambda grid is empty")),
        Some(&first) if first != 0.0 => {
            return Err(Error::arg(format!(
                "lambda grid must start at 0, got {first}"
            )))
        }
        _ => {}
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("lambda grid must be strictly ascending"));
    }
    let reference = accessible_distribution(&build_er_world(), script)?;
    let chsh = CHSHConfig::default();
    grid.par_iter()
        .map(|&lambda| {
            let world = family.with_lambda(lambda).build()?;
            let pair = deliver_pair(&world)?;
            let dist = distribution_on_pair(&pair.state, script)?;
            Ok(SweepRow {
                lambda,
                tvd_vs_er: total_variation(&dist, &reference),
                s_abs: exact_chsh(&pair, &chsh)?.s_abs,
                pair_purity: purity(&pair.state),
            })
        })
        .collect()
}

/// Header row of the columnar sweep export.
pub const SWEEP_HEADER: &str = "lambda tvd_vs_er s_abs pair_purity";

/// Schema tag and version of the structured sweep document.
pub const SWEEP_SCHEMA: &str = "erepr.sweep";
pub const SWEEP_SCHEMA_VERSION: u32 = 1;

/// One whitespace-separated row per grid point, shortest round-trip decimals.
pub fn write_sweep_columnar<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:e} {:e} {:e} {:e}",
            r.lambda, r.tvd_vs_er, r.s_abs, r.pair_purity
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepDocument<'a> {
    pub schema: &'static str,
    pub version: u32,
    pub script: &'a str,
    pub family: &'a EprParams,
    pub rows: &'a [SweepRow],
}

impl<'a> SweepDocument<'a> {
    pub fn new(script: &'a ProtocolScript, family: &'a EprParams, rows: &'a [SweepRow]) -> Self {
        Self {
            schema: SWEEP_SCHEMA,
            version: SWEEP_SCHEMA_VERSION,
            script: script.name(),
            family,
            rows,
        }
    }
}

/// Largest pairwise TVD between worlds that differ only in `q_dim`, with
/// every other parameter taken from `family`.
pub fn corollary2_check(
    q_dims: &[usize],
    script: &ProtocolScript,
    family: &EprParams,
) -> Result<f64> {
    if q_dims.is_empty() {
        return Err(Error::arg("no channel dimensions given"));
    }
    let dists = q_dims
        .par_iter()
        .map(|&q| accessible_distribution(&family.with_q_dim(q).build()?, script))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0_f64;
    for (i, p) in dists.iter().enumerate() {
        for q in &dists[i + 1..] {
            worst = worst.max(total_variation(p, q));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoSignalingReport {
    /// Largest TVD between Bob's marginals across Alice's choices.
    pub max_tvd: f64,
    /// Bob adapted to Alice's outcome, so marginal shifts are expected and do
    /// not indicate signaling.
    pub classical_channel_assisted: bool,
}

/// Bob's marginal for each of Alice's instrument choices, compared pairwise.
///
/// Alice acts first as round 0; `bob_rounds` follow as rounds 1, 2, ….
/// Conditions in `bob_rounds` use those script indices, so a condition on
/// round 0 hands Bob Alice's outcome and the report is flagged.
pub fn no_signaling_check(
    world: &World,
    alice_variants: &[QuantumInstrument],
    bob_rounds: &[Round],
) -> Result<NoSignalingReport> {
    if alice_variants.is_empty() {
        return Err(Error::arg("no Alice instrument variants given"));
    }
    if let Some(i) = bob_rounds.iter().position(|r| r.party != Party::B) {
        return Err(Error::Locality(format!(
            "round {} of Bob's script is not Bob's",
            i + 1
        )));
    }
    for v in alice_variants {
        check_local(0, Party::A, v)?;
    }
    let pair = deliver_pair(world)?;
    let bob_indices: Vec<usize> = (1..=bob_rounds.len()).collect();
    let mut assisted = false;
    let mut marginals = Vec::with_capacity(alice_variants.len());
    for (k, v) in alice_variants.iter().enumerate() {
        let mut rounds = vec![Round::new(Party::A, v.clone())];
        rounds.extend(bob_rounds.iter().cloned());
        let script = ProtocolScript::new(format!("no-signaling-{k}"), rounds)?;
        assisted |= script.uses_classical_channel();
        marginals.push(distribution_on_pair(&pair.state, &script)?.marginal(&bob_indices));
    }
    let mut max_tvd = 0.0_f64;
    for (i, p) in marginals.iter().enumerate() {
        for q in &marginals[i + 1..] {
            max_tvd = max_tvd.max(total_variation(p, q));
        }
    }
    Ok(NoSignalingReport {
        max_tvd,
        classical_channel_assisted: assisted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameDemo {
    pub offset: f64,
    /// Bob uses the nominal settings in his rotated frame.
    pub uncorrected: CHSHResult,
    /// Bob subtracts the offset Alice sent him before measuring.
    pub corrected: CHSHResult,
}

/// CHSH on the ER pair when Bob's z-axis is rotated by `offset` relative to
/// Alice's, so that his nominal angle `θ` is physically `θ + offset`.
pub fn frame_misalignment_demo(offset: f64) -> Result<FrameDemo> {
    if !offset.is_finite() {
        return Err(Error::arg("frame offset must be finite"));
    }
    let pair = deliver_pair(&build_er_world())?;
    let nominal = CHSHConfig::default();
    let physical = |b: f64| b + offset;
    let uncorrected = CHSHConfig {
        b: physical(nominal.b),
        b_prime: physical(nominal.b_prime),
        ..nominal
    };
    let corrected = CHSHConfig {
        b: physical(nominal.b - offset),
        b_prime: physical(nominal.b_prime - offset),
        ..nominal
    };
    Ok(FrameDemo {
        offset,
        uncorrected: exact_chsh(&pair, &uncorrected)?,
        corrected: exact_chsh(&pair, &corrected)?,
    })
}
