//! CHSH experiments on the boundary pair: exact correlations, seeded
//! sampling with free setting choice, and decoherence estimates.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instruments::{apply_instrument, measure_angle};
use crate::linalg::{pauli, HermitianOperator, SubsystemLayout};
use crate::protocol::{ALICE_QUBIT, BOB_QUBIT};
use crate::rng::trial_rng;
use crate::worlds::{deliver_pair, BoundaryPair, World};

/// `2√2`
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;

/// Single-qubit observable `cos θ Z + sin θ X`.
pub fn observable_at(angle: f64) -> HermitianOperator {
    let m = &pauli::z().scale_real(angle.cos()) + &pauli::x().scale_real(angle.sin());
    HermitianOperator::new(m, SubsystemLayout::qubits(&["q"]).expect("one label"))
        .expect("real combination of Paulis is Hermitian")
}

/// `Tr(ρ · O(θ_A) ⊗ O(θ_B))`.
pub fn exact_correlation(pair: &BoundaryPair, theta_a: f64, theta_b: f64) -> f64 {
    let joint = observable_at(theta_a)
        .matrix()
        .kron(observable_at(theta_b).matrix());
    let rho = pair.state.matrix();
    let layout = pair.state.layout();
    debug_assert_eq!(
        layout.labels().collect::<Vec<_>>(),
        [ALICE_QUBIT, BOB_QUBIT],
        "pair layout is (q_A, q_B)"
    );
    rho.trace_product(&joint).re.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CHSHConfig {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
    pub trials: u64,
    pub seed: u64,
}

impl Default for CHSHConfig {
    /// Settings 45° apart, which saturate the bound on the singlet.
    fn default() -> Self {
        Self {
            a: 0.0,
            a_prime: FRAC_PI_2,
            b: FRAC_PI_4,
            b_prime: -FRAC_PI_4,
            trials: 10_000,
            seed: 0,
        }
    }
}

impl CHSHConfig {
    pub fn alice_angles(&self) -> [f64; 2] {
        [self.a, self.a_prime]
    }

    pub fn bob_angles(&self) -> [f64; 2] {
        [self.b, self.b_prime]
    }

    fn check(&self) -> Result<()> {
        if [self.a, self.a_prime, self.b, self.b_prime]
            .iter()
            .any(|x| !x.is_finite())
        {
            return Err(Error::arg("CHSH angles must be finite"));
        }
        Ok(())
    }
}

/// Correlations are ordered `E(a,b), E(a,b′), E(a′,b), E(a′,b′)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CHSHResult {
    pub correlations: [f64; 4],
    pub s_value: f64,
    pub s_abs: f64,
    pub tsirelson_gap: f64,
    pub standard_error: f64,
    /// Trials per setting pair, in the same order; zero in exact mode.
    pub cell_counts: [u64; 4],
}

impl CHSHResult {
    fn from_correlations(
        correlations: [f64; 4],
        standard_error: f64,
        cell_counts: [u64; 4],
    ) -> Self {
        let [ab, abp, apb, apbp] = correlations;
        let s_value = ab + abp + apb - apbp;
        Self {
            correlations,
            s_value,
            s_abs: s_value.abs(),
            tsirelson_gap: TSIRELSON_BOUND - s_value.abs(),
            standard_error,
            cell_counts,
        }
    }
}

fn cell(alice: usize, bob: usize) -> usize {
    2 * alice + bob
}

pub fn exact_chsh(pair: &BoundaryPair, config: &CHSHConfig) -> Result<CHSHResult> {
    config.check()?;
    let mut correlations = [0.0; 4];
    for (x, &ta) in config.alice_angles().iter().enumerate() {
        for (y, &tb) in config.bob_angles().iter().enumerate() {
            correlations[cell(x, y)] = exact_correlation(pair, ta, tb);
        }
    }
    Ok(CHSHResult::from_correlations(correlations, 0.0, [0; 4]))
}

/// One sampled trial. Outcomes are ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub alice_setting: u8,
    pub bob_setting: u8,
    pub alice_outcome: i8,
    pub bob_outcome: i8,
}

/// Header row of the transcript export.
pub const TRANSCRIPT_HEADER: &str = "trial alice_setting bob_setting alice_outcome bob_outcome";

/// Writes one whitespace-separated row per trial under [`TRANSCRIPT_HEADER`].
pub fn write_transcript<W: Write>(records: &[TrialRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRANSCRIPT_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{} {} {} {} {}",
            r.trial, r.alice_setting, r.bob_setting, r.alice_outcome, r.bob_outcome
        )?;
    }
    Ok(())
}

/// Joint outcome probabilities `[++, +−, −+, −−]` for each setting pair,
/// obtained by measuring Alice first and Bob on her post-measurement state.
fn joint_tables(pair: &BoundaryPair, config: &CHSHConfig) -> Result<[[f64; 4]; 4]> {
    let mut tables = [[0.0; 4]; 4];
    for (x, &ta) in config.alice_angles().iter().enumerate() {
        let alice = apply_instrument(&measure_angle(ta), &pair.state, &[ALICE_QUBIT])?;
        for (y, &tb) in config.bob_angles().iter().enumerate() {
            let table = &mut tables[cell(x, y)];
            for (i, ra) in alice.iter().enumerate() {
                let Some(post) = &ra.post_state else { continue };
                let bob = apply_instrument(&measure_angle(tb), post, &[BOB_QUBIT])?;
                for (j, rb) in bob.iter().enumerate() {
                    table[2 * i + j] = ra.probability * rb.probability;
                }
            }
        }
    }
    Ok(tables)
}

fn sample_trial(tables: &[[f64; 4]; 4], seed: u64, trial: u64) -> TrialRecord {
    let mut rng = trial_rng(seed, trial);
    let x = u8::from(rng.random::<bool>());
    let y = u8::from(rng.random::<bool>());
    let u: f64 = rng.random();
    let table = &tables[cell(x.into(), y.into())];
    let mut acc = 0.0;
    let mut joint = 3;
    for (k, p) in table.iter().enumerate() {
        acc += p;
        if u < acc {
            joint = k;
            break;
        }
    }
    let sign = |bit: usize| if bit == 0 { 1 } else { -1 };
    TrialRecord {
        trial,
        alice_setting: x,
        bob_setting: y,
        alice_outcome: sign(joint / 2),
        bob_outcome: sign(joint % 2),
    }
}

/// Correlation estimates from integer tallies. Each correlation has
/// binomial variance `(1 − E²)/n`; the four cells are independent.
pub fn estimate_from_records(records: &[TrialRecord]) -> Result<CHSHResult> {
    let mut counts = [0u64; 4];
    let mut products = [0i64; 4];
    for r in records {
        let c = cell(r.alice_setting.into(), r.bob_setting.into());
        counts[c] += 1;
        products[c] += i64::from(r.alice_outcome * r.bob_outcome);
    }
    let mut correlations = [0.0; 4];
    let mut variance = 0.0;
    for c in 0..4 {
        if counts[c] == 0 {
            return Err(Error::EmptyCell {
                alice: (c / 2) as u8,
                bob: (c % 2) as u8,
            });
        }
        let e = products[c] as f64 / counts[c] as f64;
        correlations[c] = e;
        variance += (1.0 - e * e) / counts[c] as f64;
    }
    Ok(CHSHResult::from_correlations(
        correlations,
        variance.sqrt(),
        counts,
    ))
}

/// Sampled CHSH run together with its per-trial transcript.
///
/// Each trial draws both settings uniformly and independently, then a joint
/// outcome from the exact Born probabilities, using only its own counter
/// stream; the transcript is identical for any thread count.
pub fn sample_chsh_with_transcript(
    world: &World,
    config: &CHSHConfig,
) -> Result<(CHSHResult, Vec<TrialRecord>)> {
    config.check()?;
    if config.trials == 0 {
        return Err(Error::arg("trials must be at least 1"));
    }
    let pair = deliver_pair(world)?;
    let tables = joint_tables(&pair, config)?;
    let records: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|t| sample_trial(&tables, config.seed, t))
        .collect();
    Ok((estimate_from_records(&records)?, records))
}

pub fn sample_chsh(world: &World, config: &CHSHConfig) -> Result<CHSHResult> {
    sample_chsh_with_transcript(world, config).map(|(r, _)| r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Visibility {
    pub value: f64,
    /// Set when sampling noise pushed the estimate above 1.
    pub exceeds_unity: bool,
}

/// `s_abs / 2√2`, meaningful for results taken at the optimal settings.
pub fn estimate_decoherence(result: &CHSHResult) -> Visibility {
    let value = result.s_abs / TSIRELSON_BOUND;
    Visibility {
        value,
        exceeds_unity: value > 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DensityMatrix;
    use crate::worlds::{build_epr_world, build_er_world, pair_layout, singlet_pair};

    fn wrap(state: DensityMatrix) -> BoundaryPair {
        BoundaryPair {
            state,
            provenance: "test".into(),
        }
    }

    #[test]
    fn observable_examples() {
        assert!(observable_at(0.0).matrix().max_abs_diff(&pauli::z()) < 1e-15);
        assert!(observable_at(FRAC_PI_2).matrix().max_abs_diff(&pauli::x()) < 1e-15);
        // oracle: eigenvalues of [[a, b], [b, -a]] are ±√(a² + b²)
        let m = observable_at(FRAC_PI_4);
        let (a, b) = (m.matrix().get(0, 0).re, m.matrix().get(0, 1).re);
        let r = (a * a + b * b).sqrt();
        assert!((r - 1.0).abs() < 1e-12);
        let eig = m.matrix().hermitian_eigenvalues();
        assert!((eig[0] + 1.0).abs() < 1e-12 && (eig[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singlet_correlations() {
        let pair = wrap(singlet_pair());
        assert!((exact_correlation(&pair, 0.0, 0.0) + 1.0).abs() < 1e-12);
        assert!(exact_correlation(&pair, 0.0, FRAC_PI_2).abs() < 1e-12);
        for &(ta, tb) in &[(0.3, -1.1), (2.0, 0.5), (-0.7, 3.0)] {
            assert!((exact_correlation(&pair, ta, tb) + f64::cos(ta - tb)).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_chsh_examples() {
        let cfg = CHSHConfig::default();
        let r = exact_chsh(&wrap(singlet_pair()), &cfg).unwrap();
        assert!((r.s_abs - TSIRELSON_BOUND).abs() < 1e-10);
        assert!(r.tsirelson_gap.abs() < 1e-10);
        assert_eq!(r.standard_error, 0.0);

        let product = wrap(DensityMatrix::basis(pair_layout(), 0).unwrap());
        let r = exact_chsh(&product, &cfg).unwrap();
        // oracle: ⟨00|O(a)⊗O(b)|00⟩ = cos a · cos b
        let e = |ta: f64, tb: f64| ta.cos() * tb.cos();
        let s = e(cfg.a, cfg.b) + e(cfg.a, cfg.b_prime) + e(cfg.a_prime, cfg.b)
            - e(cfg.a_prime, cfg.b_prime);
        assert!((r.s_abs - s.abs()).abs() < 1e-12);
        assert!((r.s_abs - SQRT_2).abs() < 1e-10);

        let mixed = wrap(DensityMatrix::maximally_mixed(pair_layout()));
        let r = exact_chsh(&mixed, &cfg).unwrap();
        assert!(r.correlations.iter().all(|e| e.abs() < 1e-15));
        assert!(r.s_abs < 1e-15);
    }

    #[test]
    fn tables_reproduce_exact_correlations() {
        let pair = deliver_pair(&build_epr_world(2, 1, 0.5, 3).unwrap()).unwrap();
        let cfg = CHSHConfig::default();
        let tables = joint_tables(&pair, &cfg).unwrap();
        let exact = exact_chsh(&pair, &cfg).unwrap();
        for (t, e) in tables.iter().zip(exact.correlations) {
            assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((t[0] - t[1] - t[2] + t[3] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_er_is_near_tsirelson() {
        let cfg = CHSHConfig {
            trials: 100_000,
            seed: 7,
            ..CHSHConfig::default()
        };
        let r = sample_chsh(&build_er_world(), &cfg).unwrap();
        assert!((r.s_abs - TSIRELSON_BOUND).abs() <= 5.0 * r.standard_error);
        assert_eq!(r.cell_counts.iter().sum::<u64>(), cfg.trials);
    }

    #[test]
    fn single_trial_is_empty_cell() {
        let cfg = CHSHConfig {
            trials: 1,
            ..CHSHConfig::default()
        };
        assert!(matches!(
            sample_chsh(&build_er_world(), &cfg),
            Err(Error::EmptyCell { .. })
        ));
        assert!(sample_chsh(&build_er_world(), &CHSHConfig { trials: 0, ..cfg }).is_err());
    }

    #[test]
    fn zero_coupling_transcript_equals_er() {
        let cfg = CHSHConfig {
            trials: 20_000,
            seed: 11,
            ..CHSHConfig::default()
        };
        let (_, er) = sample_chsh_with_transcript(&build_er_world(), &cfg).unwrap();
        let (_, epr) =
            sample_chsh_with_transcript(&build_epr_world(3, 2, 0.0, 5).unwrap(), &cfg).unwrap();
        assert_eq!(er, epr);
    }

    #[test]
    fn settings_are_uniform() {
        let trials = 40_000u64;
        let cfg = CHSHConfig {
            trials,
            seed: 3,
            ..CHSHConfig::default()
        };
        let r = sample_chsh(&build_er_world(), &cfg).unwrap();
        let spread = 5.0 * (trials as f64 * 3.0 / 16.0).sqrt();
        for n in r.cell_counts {
            assert!((n as f64 - trials as f64 / 4.0).abs() <= spread);
        }
    }

    #[test]
    fn transcript_export() {
        let recs = [TrialRecord {
            trial: 0,
            alice_setting: 1,
            bob_setting: 0,
            alice_outcome: -1,
            bob_outcome: 1,
        }];
        let mut buf = Vec::new();
        write_transcript(&recs, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{TRANSCRIPT_HEADER}\n0 1 0 -1 1\n")
        );
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn visibility_examples() {
        let r = |s: f64| CHSHResult::from_correlations([s, 0.0, 0.0, 0.0], 0.0, [0; 4]);
        assert!((estimate_decoherence(&r(TSIRELSON_BOUND)).value - 1.0).abs() < 1e-15);
        assert_eq!(estimate_decoherence(&r(0.0)).value, 0.0);
        assert!((estimate_decoherence(&r(2.0)).value - 0.7071).abs() < 1e-4);
        assert!(estimate_decoherence(&r(2.9)).exceeds_unity);
    }

    #[test]
    fn s_decreases_with_coupling() {
        // holds for a single rest qubit; with more, partial revivals appear
        let cfg = CHSHConfig::default();
        let mut last = f64::INFINITY;
        for k in 0..=12 {
            let lambda = k as f64 * 0.1;
            let pair = deliver_pair(&build_epr_world(2, 1, lambda, 0).unwrap()).unwrap();
            let s = exact_chsh(&pair, &cfg).unwrap().s_abs;
            assert!(s <= last + 1e-12, "lambda {lambda}");
            last = s;
        }
    }

    #[test]
    fn nonfinite_angles_rejected() {
        let cfg = CHSHConfig {
            a: f64::NAN,
            ..CHSHConfig::default()
        };
        assert!(exact_chsh(&wrap(singlet_pair()), &cfg).is_err());
    }
}
