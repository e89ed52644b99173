//! Stock single-qubit instruments, addressable by name from script files.

use std::f64::consts::FRAC_1_SQRT_2;

use super::{Branch, KrausSet, QuantumInstrument};
use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix, C64, ZERO};

/// Projective measurement onto the given orthonormal vectors.
pub fn projective(vectors: &[(&str, Vec<C64>)]) -> Result<QuantumInstrument> {
    let d = vectors.first().map_or(0, |(_, v)| v.len());
    QuantumInstrument::new(
        d,
        vectors
            .iter()
            .map(|(label, v)| Branch::new(*label, vec![ComplexMatrix::outer(v, v)]))
            .collect(),
    )
}

fn angle_eigenvectors(theta: f64) -> (Vec<C64>, Vec<C64>) {
    // eigenvectors of cos θ Z + sin θ X for eigenvalues +1 and −1
    let (s, c) = (theta / 2.0).sin_cos();
    (
        vec![C64::new(c, 0.0), C64::new(s, 0.0)],
        vec![C64::new(-s, 0.0), C64::new(c, 0.0)],
    )
}

/// Measurement of `cos θ Z + sin θ X`; outcome "0" is eigenvalue +1, "1" is −1.
pub fn measure_angle(theta: f64) -> QuantumInstrument {
    let (plus, minus) = angle_eigenvectors(theta);
    projective(&[("0", plus), ("1", minus)]).expect("angle measurement is well formed")
}

pub fn measure_z() -> QuantumInstrument {
    measure_angle(0.0)
}

pub fn measure_x() -> QuantumInstrument {
    measure_angle(std::f64::consts::FRAC_PI_2)
}

/// One-branch identity instrument with outcome "id".
pub fn identity(dim: usize) -> QuantumInstrument {
    QuantumInstrument::new(
        dim,
        vec![Branch::new("id", vec![ComplexMatrix::identity(dim)])],
    )
    .expect("identity is well formed")
}

/// Free choice between two measurement angles, each with probability ½.
///
/// Outcomes are `<setting bit><sign>`: "0+", "0-", "1+", "1-".
pub fn chsh_setting_instrument(angles: [f64; 2]) -> QuantumInstrument {
    let mut branches = Vec::with_capacity(4);
    for (bit, &theta) in angles.iter().enumerate() {
        let (plus, minus) = angle_eigenvectors(theta);
        for (sign, v) in [("+", plus), ("-", minus)] {
            let k = ComplexMatrix::outer(&v, &v).scale_real(FRAC_1_SQRT_2);
            branches.push(Branch::new(format!("{bit}{sign}"), vec![k]));
        }
    }
    QuantumInstrument::new(2, branches).expect("setting instrument is well formed")
}

/// Depolarizing channel `{√(1−3p/4) I, √(p/4) X, √(p/4) Y, √(p/4) Z}`.
pub fn depolarizing(p: f64) -> Result<KrausSet> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg(format!(
            "depolarizing probability {p} outside [0, 1]"
        )));
    }
    let a = (1.0 - 0.75 * p).sqrt();
    let b = (p / 4.0).sqrt();
    KrausSet::new(vec![
        ("I".into(), pauli::i().scale_real(a)),
        ("X".into(), pauli::x().scale_real(b)),
        ("Y".into(), pauli::y().scale_real(b)),
        ("Z".into(), pauli::z().scale_real(b)),
    ])
}

/// Complete dephasing in the Z basis.
pub fn dephasing() -> KrausSet {
    KrausSet::new(vec![
        (
            "P0".into(),
            ComplexMatrix::diagonal(&[C64::new(1.0, 0.0), ZERO]),
        ),
        (
            "P1".into(),
            ComplexMatrix::diagonal(&[ZERO, C64::new(1.0, 0.0)]),
        ),
    ])
    .expect("dephasing is trace preserving")
}

pub fn amplitude_damping(gamma: f64) -> Result<KrausSet> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::arg(format!("damping rate {gamma} outside [0, 1]")));
    }
    let k0 = ComplexMatrix::diagonal(&[C64::new(1.0, 0.0), C64::new((1.0 - gamma).sqrt(), 0.0)]);
    let k1 = ComplexMatrix::real_square(2, &[0.0, gamma.sqrt(), 0.0, 0.0])?;
    KrausSet::new(vec![("K0".into(), k0), ("K1".into(), k1)])
}

/// Unsharp Z measurement of the given strength in `[0, 1]` (1 is projective).
pub fn weak_z(strength: f64) -> Result<QuantumInstrument> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::arg(format!(
            "measurement strength {strength} outside [0, 1]"
        )));
    }
    let hi = C64::new(((1.0 + strength) / 2.0).sqrt(), 0.0);
    let lo = C64::new(((1.0 - strength) / 2.0).sqrt(), 0.0);
    QuantumInstrument::new(
        2,
        vec![
            Branch::new("0", vec![ComplexMatrix::diagonal(&[hi, lo])]),
            Branch::new("1", vec![ComplexMatrix::diagonal(&[lo, hi])]),
        ],
    )
}

/// Symmetric three-outcome POVM with Bloch vectors 120° apart in the Z–X plane.
pub fn trine() -> QuantumInstrument {
    let scale = (2.0_f64 / 3.0).sqrt();
    let branches = (0..3)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            let (plus, _) = angle_eigenvectors(theta);
            Branch::new(
                format!("t{k}"),
                vec![ComplexMatrix::outer(&plus, &plus).scale_real(scale)],
            )
        })
        .collect();
    QuantumInstrument::new(2, branches).expect("trine is well formed")
}

/// Names accepted by [`resolve_builtin`]; `name:arg` passes one parameter.
pub const BUILTIN_NAMES: &[&str] = &[
    "z",
    "x",
    "identity",
    "measure:<angle>",
    "chsh-a",
    "chsh-b",
    "chsh:<angle>,<angle>",
    "depolarize:<p>",
    "dephase",
    "damp:<gamma>",
    "weak-z:<strength>",
    "trine",
];

/// Parses an angle in radians; a `deg` suffix switches to degrees and
/// `pi` multiples such as `pi/4` or `-3pi/4` are understood.
pub(crate) fn parse_angle(text: &str) -> Result<f64> {
    let t = text.trim();
    if let Some(deg) = t.strip_suffix("deg") {
        return parse_number(deg).map(f64::to_radians);
    }
    if let Some(idx) = t.find("pi") {
        let (coef, rest) = t.split_at(idx);
        let coef = match coef.trim_end_matches('*') {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => parse_number(c)?,
        };
        let rest = &rest[2..];
        let div = match rest.strip_prefix('/') {
            Some(d) => parse_number(d)?,
            None if rest.is_empty() => 1.0,
            None => return Err(Error::arg(format!("cannot parse angle '{text}'"))),
        };
        return Ok(coef * std::f64::consts::PI / div);
    }
    parse_number(t)
}

fn parse_number(text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::arg(format!("cannot parse number '{text}'")))?;
    if !v.is_finite() {
        return Err(Error::arg(format!("number '{text}' is not finite")));
    }
    Ok(v)
}

/// Optimal CHSH angles for Alice (`0`, `π/2`) and Bob (`π/4`, `−π/4`).
pub const CHSH_ALICE: [f64; 2] = [0.0, std::f64::consts::FRAC_PI_2];
pub const CHSH_BOB: [f64; 2] = [std::f64::consts::FRAC_PI_4, -std::f64::consts::FRAC_PI_4];

/// Resolves a stock instrument by name.
pub fn resolve_builtin(spec: &str) -> Result<QuantumInstrument> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let need = |what: &str| {
        arg.ok_or_else(|| Error::arg(format!("instrument '{name}' needs a {what} argument")))
    };
    let inst = match (name, arg) {
        ("z", None) => measure_z(),
        ("x", None) => measure_x(),
        ("identity", None) => identity(2),
        ("measure", _) => measure_angle(parse_angle(need("angle")?)?),
        ("chsh-a", None) => chsh_setting_instrument(CHSH_ALICE),
        ("chsh-b", None) => chsh_setting_instrument(CHSH_BOB),
        ("chsh", _) => {
            let a = need("angle pair")?;
            let (x, y) = a
                .split_once(',')
                .ok_or_else(|| Error::arg("chsh needs two comma-separated angles"))?;
            chsh_setting_instrument([parse_angle(x)?, parse_angle(y)?])
        }
        ("depolarize", _) => {
            depolarizing(parse_number(need("probability")?)?)?.to_instrument("d")?
        }
        ("dephase", None) => dephasing().to_instrument("d")?,
        ("damp", _) => amplitude_damping(parse_number(need("rate")?)?)?.to_instrument("d")?,
        ("weak-z", _) => weak_z(parse_number(need("strength")?)?)?,
        ("trine", None) => trine(),
        _ => {
            return Err(Error::arg(format!(
                "unknown instrument '{spec}' (known: {})",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    Ok(inst)
}
