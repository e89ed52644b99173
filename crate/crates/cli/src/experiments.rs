//! Named experiments, each a boxed [`Experiment`] looked up in a registry.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::path::Path;

use erepr::bell::{
    estimate_decoherence, exact_chsh, sample_chsh_with_transcript, write_transcript, CHSHConfig,
    CHSHResult, TSIRELSON_BOUND,
};
use erepr::distinguish::{
    accessible_distribution, corollary2_check, frame_misalignment_demo, no_signaling_check,
    theorem1_sweep, total_variation, write_sweep_columnar, SweepDocument,
};
use erepr::instruments::{identity, measure_angle, measure_x, measure_z, trine};
use erepr::protocol::{bundled_script, load_script, Party, ProtocolScript, Round};
use erepr::worlds::{build_er_world, deliver_pair};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::report::{Check, RunError};

/// What an experiment hands back: a structured payload, its columnar
/// rendering, and the outcome of its built-in assertions.
pub struct Outcome {
    pub payload: Value,
    pub columnar: String,
    pub checks: Vec<Check>,
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    /// A complete command line that runs this experiment.
    fn example(&self) -> &'static str;
    fn run(&self, config: &RunConfig) -> Result<Outcome, RunError>;
}

pub struct Registry {
    experiments: Vec<Box<dyn Experiment>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            experiments: Vec::new(),
        }
    }

    pub fn register(&mut self, experiment: Box<dyn Experiment>) {
        assert!(
            self.get(experiment.name()).is_none(),
            "experiment '{}' registered twice",
            experiment.name()
        );
        self.experiments.push(experiment);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Experiment> {
        self.experiments
            .iter()
            .find(|e| e.name() == name)
            .map(|e| &**e)
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Experiment> {
        self.experiments.iter().map(|e| &**e)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.iter().map(|e| e.name()).collect()
    }
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Chsh));
        r.register(Box::new(Sweep));
        r.register(Box::new(Distinguish));
        r.register(Box::new(NoSignal));
        r.register(Box::new(Qecc));
        r.register(Box::new(Frames));
        r
    }
}

fn script_for(config: &RunConfig) -> Result<ProtocolScript, RunError> {
    let name = &config.script;
    let looks_like_path =
        name.contains('/') || name.ends_with(".locc") || Path::new(name).is_file();
    Ok(if looks_like_path {
        load_script(Path::new(name))?
    } else {
        bundled_script(name)?
    })
}

fn fmt_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(" "));
    out.push('\n');
}

fn chsh_rows(out: &mut String, r: &CHSHResult) {
    let names = ["E_ab", "E_ab'", "E_a'b", "E_a'b'"];
    for (n, e) in names.iter().zip(r.correlations) {
        fmt_row(out, &[n.to_string(), format!("{e:e}")]);
    }
    for (n, v) in [
        ("s_value", r.s_value),
        ("s_abs", r.s_abs),
        ("tsirelson_gap", r.tsirelson_gap),
        ("standard_error", r.standard_error),
    ] {
        fmt_row(out, &[n.to_string(), format!("{v:e}")]);
    }
}

struct Chsh;

impl Experiment for Chsh {
    fn name(&self) -> &'static str {
        "chsh"
    }
    fn about(&self) -> &'static str {
        "CHSH test at the optimal settings, sampled or exact"
    }
    fn example(&self) -> &'static str {
        "erepr chsh --mode ER --trials 100000 --seed 7"
    }

    fn run(&self, config: &RunConfig) -> Result<Outcome, RunError> {
        let world = config.world()?;
        let chsh = CHSHConfig {
            trials: config.trials,
            seed: config.seed,
            ..CHSHConfig::default()
        };
        let result = if config.exact {
            exact_chsh(&deliver_pair(&world)?, &chsh)?
        } else {
            let (result, records) = sample_chsh_with_transcript(&world, &chsh)?;
            if let Some(path) = &config.transcript {
                let file = std::fs::File::create(path).map_err(|e| RunError::io(path, e))?;
                write_transcript(&records, std::io::BufWriter::new(file))
                    .map_err(|e| RunError::io(path, e))?;
            }
            result
        };
        let visibility = estimate_decoherence(&result);
        let ceiling = TSIRELSON_BOUND + 5.0 * result.standard_error + 1e-9;
        let mut columnar = String::from("quantity value\n");
        chsh_rows(&mut columnar, &result);
        fmt_row(
            &mut columnar,
            &["visibility".into(), format!("{:e}", visibility.value)],
        );
        Ok(Outcome {
            payload: json!({
                "world": world.mode(),
                "exact": config.exact,
                "result": result,
                "visibility": visibility,
            }),
            columnar,
            checks: vec![Check::new(
                "tsirelson_ceiling",
                result.s_abs <= ceiling,
                format!("s_abs {} vs ceiling {ceiling}", result.s_abs),
            )],
        })
    }
}

struct Sweep;

impl Experiment for Sweep {
    fn name(&self) -> &'static str {
        "sweep"
    }
    fn about(&self) -> &'static str {
        "Distinguishability from the ER world along a coupling grid"
    }
    fn example(&self) -> &'static str {
        "erepr sweep --lambda-grid 0,0.3,0.6 --seed 1 --format columnar --out sweep.txt"
    }

    fn run(&self, config: &RunConfig) -> Result<Outcome, RunError> {
        let script = script_for(config)?;
        let family = config.epr_params();
        let rows = theorem1_sweep(&config.lambda_grid, &script, &family)?;
        let mut columnar = Vec::new();
        write_sweep_columnar(&rows, &mut columnar).expect("writing to memory");
        let first = rows[0].tvd_vs_er;
        Ok(Outcome {
            payload: serde_json::to_value(SweepDocument::new(&script, &family, &rows))
                .expect("serializable"),
            columnar: String::from_utf8(columnar).expect("ascii"),
            checks: vec![Check::new(
                "zero_coupling_indistinguishable",
                first <= 1e-10,
                format!("tvd at lambda=0 is {first:e}"),
            )],
        })
    }
}

struct Distinguish;

impl Experiment for Distinguish {
    fn name(&self) -> &'static str {
        "distinguish"
    }
    fn about(&self) -> &'static str {
        "Exact transcript distributions of one script in the configured world and the ER world"
    }
    fn example(&self) -> &'static str {
        "erepr distinguish --script feed-forward --lambda 0.6 --seed 3"
    }

    fn run(&self, config: &RunConfig) -> Result<Outcome, RunError> {
        let script = script_for(config)?;
        let world = config.world()?;
        let here = accessible_distribution(&world, &script)?;
        let er = accessible_distribution(&build_er_world(), &script)?;
        let tvd = total_variation(&here, &er);
        let mut columnar = String::from("outcome p_world p_er\n");
        let mut support = here.support();
        support.extend(er.support());
        support.sort();
        support.dedup();
        for key in &support {
            let _ = writeln!(
                columnar,
                "{key} {:e} {:e}",
                here.probability_of(key),
                er.probability_of(key)
            );
        }
        let mut checks = vec![Check::new(
            "normalized",
            (here.total() - 1.0).abs() <= 1e-10,
            format!("total probability {}", here.total()),
        )];
        if world.lambda() == 0.0 {
            checks.push(Check::new(
                "zero_coupling_indistinguishable",
                tvd <= 1e-10,
                format!("tvd {tvd:e}"),
            ));
        }
        Ok(Outcome {
            payload: json!({
                "script": script.name(),
                "world": world.mode(),
                "distribution": here,
                "er_distribution": er,
                "tvd_vs_er": tvd,
            }),
            columnar,
            checks,
        })
    }
}

#[derive(Serialize)]
struct NoSignalRow {
    bob: &'static str,
    max_tvd: f64,
    classical_channel_assisted: bool,
}

struct NoSignal;

impl Experiment for NoSignal {
    fn name(&self) -> &'static str {
        "nosignal"
    }
    fn about(&self) -> &'static str {
        "Bob's marginals under different Alice instruments, classical channel withheld"
    }
    fn example(&self) -> &'static str {
        "erepr nosignal --mode EPR --lambda 0.8 --seed 2"
    }

    fn run(&self, config: &RunConfig) -> Result<Outcome, RunError> {
        let world = config.world()?;
        let alice = [measure_z(), measure_x(), identity(2), trine()];
        let bobs = [
            ("z", measure_z()),
            ("x", measure_x()),
            ("pi/4", measure_angle(std::f64::consts::FRAC_PI_4)),
        ];
        let mut rows = Vec::new();
        for (name, inst) in bobs {
            let r = no_signaling_check(&world, &alice, &[Round::new(Party::B, inst)])?;
            rows.push(NoSignalRow {
                bob: name,
                max_tvd: r.max_tvd,
                classical_channel_assisted: r.classical_channel_assisted,
            });
        }
        let worst = rows.iter().map(|r| r.max_tvd).fold(0.0, f64::max);
        let mut columnar = String::from("bob_setting max_tvd\n");
        for r in &rows {
            let _ = writeln!(columnar, "{} {:e}", r.bob, r.max_tvd);
        }
        Ok(Outcome {
            payload: json!({
                "world": world.mode(),
                "alice_variants": ["z", "x", "id", "trine"],
                "rows": rows,
            }),
            columnar,
            checks: vec![Check::new(
                "no_signaling",
                worst <= 1e-10,
                format!("max tvd {worst:e}"),
            )],
        })
    }
}

struct Qecc;

impl Experiment for Qecc {
    fn name(&self) -> &'static str {
        "qecc"
    }
    fn about(&self) -> &'static str {
        "Largest distinguishability between worlds differing only in channel size"
    }
    fn example(&self) -> &'static str {
        "erepr qecc --q-dims 2,3 --script chsh --seed 5"
    }

    fn run(&self, config: &RunConfig) -> Result<Outcome, RunError> {
        let script = script_for(config)?;
        let max_tvd = corollary2_check(&config.q_dims, &script, &config.epr_params())?;
        let dims = config
            .q_dims
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let mut checks = Vec::new();
        if config.lambda == 0.0 {
            checks.push(Check::new(
                "channel_size_hidden",
                max_tvd <= 1e-10,
                format!("max tvd {max_tvd:e}"),
            ));
        }
        Ok(Outcome {
            payload: json!({
                "script": script.name(),
                "q_dims": config.q_dims,
                "lambda": config.lambda,
                "max_tvd": max_tvd,
            }),
            columnar: format!(
                "q_dims lambda max_tvd\n{dims} {:e} {max_tvd:e}\n",
                config.lambda
            ),
            checks,
        })
    }
}

struct Frames;

impl Experiment for Frames {
    fn name(&self) -> &'static str {
        "frames"
    }
    fn about(&self) -> &'static str {
        "CHSH with Bob's frame rotated, before and after Alice sends the offset"
    }
    fn example(&self) -> &'static str {
        "erepr frames --offset 0.785398 --seed 0"
    }

    fn run(&self, config: &RunConfig) -> Result<Outcome, RunError> {
        let demo = frame_misalignment_demo(config.offset)?;
        let mut columnar = String::from("frame s_abs\n");
        let _ = writeln!(columnar, "uncorrected {:e}", demo.uncorrected.s_abs);
        let _ = writeln!(columnar, "corrected {:e}", demo.corrected.s_abs);
        let gap = (demo.corrected.s_abs - 2.0 * SQRT_2).abs();
        Ok(Outcome {
            payload: serde_json::to_value(&demo).expect("serializable"),
            columnar,
            checks: vec![Check::new(
                "correction_restores_bound",
                gap <= 1e-10,
                format!("corrected s_abs off by {gap:e}"),
            )],
        })
    }
}
