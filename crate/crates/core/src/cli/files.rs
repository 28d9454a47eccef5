//! JSON documents read and written by the command-line tool.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bcspec::{BoundaryCondition, Verdict, VerificationReport, Witness};
use crate::matnum::Mat;
use crate::phs::{split_q, build_q, HamiltonianDensity, MatPoly, PhsSystem, QSplit};

/// A parse or validation failure, located by JSON path (`.` is the root).
#[derive(Clone, Debug, PartialEq)]
pub struct FileError {
    pub path: String,
    pub message: String,
}

impl FileError {
    fn at(path: impl Into<String>, message: impl fmt::Display) -> Self {
        FileError {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: {}", self.path, self.message)
    }
}

impl std::error::Error for FileError {}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, FileError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        FileError::at(path, e.into_inner())
    })
}

/// Row-major matrix, either nested rows or one flat list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixSpec {
    pub fn from_mat(m: &Mat) -> Self {
        MatrixSpec::Nested(m.to_nested())
    }

    /// Nested input fixes its own shape; flat input needs `shape`.
    pub fn to_mat(&self, shape: (usize, usize), path: &str) -> Result<Mat, FileError> {
        let m = match self {
            MatrixSpec::Nested(rows) => Mat::try_from_nested(rows).map_err(|e| FileError::at(path, e))?,
            MatrixSpec::Flat(v) => {
                if v.len() != shape.0 * shape.1 {
                    return Err(FileError::at(
                        path,
                        format!("expected {} entries for a {}x{} matrix, got {}", shape.0 * shape.1, shape.0, shape.1, v.len()),
                    ));
                }
                Mat::new(shape.0, shape.1, v.clone()).map_err(|e| FileError::at(path, e))?
            }
        };
        if m.shape() != shape {
            return Err(FileError::at(
                path,
                format!("expected a {}x{} matrix, got {}x{}", shape.0, shape.1, m.rows(), m.cols()),
            ));
        }
        if m.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(FileError::at(path, "matrix entries must be finite"));
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum HamiltonianSpec {
    Constant(MatrixSpec),
    /// Coefficients of `Σⱼ Hⱼ tʲ`, lowest degree first.
    Polynomial(Vec<MatrixSpec>),
    Piecewise {
        breakpoints: Vec<f64>,
        pieces: Vec<Vec<MatrixSpec>>,
    },
}

/// Built-in boundary maps available from files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum GSpec {
    Linear {
        matrix: MatrixSpec,
    },
    Clamp {
        #[serde(default = "minus_one")]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    ScaledRotation {
        scale: f64,
        angle: f64,
    },
    /// `g(x) = scale·x + shift`; violates `g(0) = 0` whenever `shift ≠ 0`.
    Shifted {
        #[serde(default = "one")]
        scale: f64,
        shift: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn minus_one() -> f64 {
    -1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum BcSpec {
    #[serde(rename = "g")]
    G(GSpec),
    #[serde(rename = "M")]
    M(MatrixSpec),
    #[serde(rename = "W")]
    W(MatrixSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub d: usize,
    pub interval: [f64; 2],
    #[serde(rename = "P")]
    pub p: Vec<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianSpec>,
    pub bc: BcSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_claim: Option<f64>,
}

/// A validated system file.
#[derive(Clone, Debug)]
pub struct LoadedSystem {
    pub sys: PhsSystem,
    pub qs: QSplit,
    pub bc: BoundaryCondition,
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        parse_json(text)
    }

    pub fn load(&self) -> Result<LoadedSystem, FileError> {
        let (n, d) = (self.n, self.d);
        let interval = (self.interval[0], self.interval[1]);
        let p = self
            .p
            .iter()
            .enumerate()
            .map(|(k, m)| m.to_mat((d, d), &format!(".P[{k}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let ham = match &self.hamiltonian {
            None => HamiltonianDensity::identity(d),
            Some(HamiltonianSpec::Constant(m)) => {
                HamiltonianDensity::constant(m.to_mat((d, d), ".hamiltonian.constant")?)
                    .map_err(|e| FileError::at(".hamiltonian.constant", e))?
            }
            Some(HamiltonianSpec::Polynomial(coeffs)) => {
                let poly = mat_poly(coeffs, d, ".hamiltonian.polynomial")?;
                HamiltonianDensity::polynomial(poly, interval)
                    .map_err(|e| FileError::at(".hamiltonian.polynomial", e))?
            }
            Some(HamiltonianSpec::Piecewise { breakpoints, pieces }) => {
                let pieces = pieces
                    .iter()
                    .enumerate()
                    .map(|(i, c)| mat_poly(c, d, &format!(".hamiltonian.piecewise.pieces[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                HamiltonianDensity::piecewise(breakpoints.clone(), pieces, interval)
                    .map_err(|e| FileError::at(".hamiltonian.piecewise", e))?
            }
        };
        let sys = PhsSystem::new(n, d, p, interval, ham).map_err(|e| FileError::at(".", e))?;
        let qs = split_q(&build_q(&sys)).map_err(|e| FileError::at(".P", e))?;
        let nd = n * d;
        let bc = match &self.bc {
            BcSpec::M(m) => BoundaryCondition::LinearM {
                m: m.to_mat((nd, nd), ".bc.M")?,
            },
            BcSpec::W(w) => BoundaryCondition::KernelW {
                w: w.to_mat((nd, 2 * nd), ".bc.W")?,
            },
            BcSpec::G(g) => {
                let mut bc = builtin_g(g, nd)?;
                if let (Some(claim), BoundaryCondition::NonlinearG { claimed_lip, .. }) =
                    (self.lipschitz_claim, &mut bc)
                {
                    if !(claim >= 0.0 && claim.is_finite()) {
                        return Err(FileError::at(".lipschitz_claim", "must be finite and nonnegative"));
                    }
                    *claimed_lip = claim;
                }
                bc
            }
        };
        Ok(LoadedSystem { sys, qs, bc })
    }
}

fn mat_poly(coeffs: &[MatrixSpec], d: usize, path: &str) -> Result<MatPoly, FileError> {
    if coeffs.is_empty() {
        return Err(FileError::at(path, "need at least one coefficient"));
    }
    let coeffs = coeffs
        .iter()
        .enumerate()
        .map(|(j, m)| m.to_mat((d, d), &format!("{path}[{j}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MatPoly { coeffs })
}

fn builtin_g(g: &GSpec, nd: usize) -> Result<BoundaryCondition, FileError> {
    let finite = |v: f64, field: &str| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FileError::at(format!(".bc.g.params.{field}"), "must be finite"))
        }
    };
    Ok(match g {
        GSpec::Linear { matrix } => {
            let m = matrix.to_mat((nd, nd), ".bc.g.params.matrix")?;
            BoundaryCondition::linear_as_nonlinear(&m).map_err(|e| FileError::at(".bc.g.params.matrix", e))?
        }
        GSpec::Clamp { lo, hi } => {
            let (lo, hi) = (finite(*lo, "lo")?, finite(*hi, "hi")?);
            if lo > hi {
                return Err(FileError::at(".bc.g.params", "clamp needs lo <= hi"));
            }
            BoundaryCondition::clamp(lo, hi)
        }
        GSpec::ScaledRotation { scale, angle } => {
            BoundaryCondition::scaled_rotation(finite(*scale, "scale")?, finite(*angle, "angle")?)
        }
        GSpec::Shifted { scale, shift } => {
            BoundaryCondition::shifted(finite(*scale, "scale")?, finite(*shift, "shift")?)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesFile {
    pub lipschitz: f64,
    pub points: Vec<SamplePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QueriesFile {
    Wrapped { queries: Vec<Vec<f64>> },
    Bare(Vec<Vec<f64>>),
}

impl QueriesFile {
    pub fn into_queries(self) -> Vec<Vec<f64>> {
        match self {
            QueriesFile::Wrapped { queries } | QueriesFile::Bare(queries) => queries,
        }
    }
}

/// A [`VerificationReport`] plus run metadata.
///
/// Residuals must be finite to survive JSON; non-finite values are moved
/// to `nonfinite` by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub verdict: Verdict,
    pub criterion: String,
    pub residuals: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nonfinite: Vec<String>,
    /// Verdict of each component check, by criterion.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub checks: BTreeMap<String, Verdict>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub data: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

fn split_finite(r: &VerificationReport) -> (VerificationReport, Vec<String>) {
    let mut clean = r.clone();
    let mut bad = Vec::new();
    clean.residuals.retain(|k, v| {
        let keep = v.is_finite();
        if !keep {
            bad.push(k.clone());
        }
        keep
    });
    for w in &mut clean.witnesses {
        if w.values.iter().any(|v| !v.is_finite()) {
            bad.push(format!("witness:{}", w.label));
            w.values.retain(|v| v.is_finite());
        }
    }
    (clean, bad)
}

impl ReportFile {
    /// `checks` are the component reports; the verdict is their conjunction.
    pub fn aggregate(command: &str, seed: u64, criterion: &str, checks: Vec<VerificationReport>) -> Self {
        let mut residuals = BTreeMap::new();
        let mut witnesses = Vec::new();
        let mut nonfinite = Vec::new();
        let mut verdicts = BTreeMap::new();
        for c in &checks {
            let (clean, bad) = split_finite(c);
            for (k, v) in &clean.residuals {
                residuals.insert(format!("{}.{k}", clean.criterion), *v);
            }
            for w in &clean.witnesses {
                witnesses.push(Witness {
                    label: format!("{}.{}", clean.criterion, w.label),
                    values: w.values.clone(),
                });
            }
            nonfinite.extend(bad.into_iter().map(|b| format!("{}.{b}", c.criterion)));
            verdicts.insert(clean.criterion.clone(), clean.verdict);
        }
        let ok = checks.iter().all(VerificationReport::passed);
        ReportFile {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            verdict: Verdict::from_bool(ok),
            criterion: criterion.to_string(),
            residuals,
            witnesses,
            nonfinite,
            checks: verdicts,
            data: BTreeMap::new(),
            notes: Vec::new(),
            timestamp: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn with_data(mut self, key: &str, value: serde_json::Value) -> Self {
        self.data.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite") + "\n"
    }

    pub fn parse(text: &str) -> Result<Self, FileError> {
        parse_json(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRANSPORT: &str = r#"{
        "n": 1, "d": 1, "interval": [0, 1],
        "P": [[[0]], [[1]]],
        "bc": {"W": [[-0.5, 1]]}
    }"#;

    #[test]
    fn parses_transport() {
        let f = SystemFile::parse(TRANSPORT).unwrap();
        let l = f.load().unwrap();
        assert_eq!(l.sys.order(), 1);
        assert!(matches!(l.bc, BoundaryCondition::KernelW { .. }));
    }

    #[test]
    fn flat_and_nested_matrices_agree() {
        let nested = MatrixSpec::Nested(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let flat = MatrixSpec::Flat(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(nested.to_mat((2, 2), ".").unwrap(), flat.to_mat((2, 2), ".").unwrap());
        assert!(flat.to_mat((2, 3), ".x").unwrap_err().path == ".x");
    }

    #[test]
    fn errors_carry_json_paths() {
        let bad_type = TRANSPORT.replace("[-0.5, 1]", r#"[-0.5, "one"]"#);
        let e = SystemFile::parse(&bad_type).unwrap_err();
        assert!(e.path.starts_with("bc"), "{e}");

        let bad_shape = TRANSPORT.replace("[[1]]", "[[1, 0]]");
        let e = SystemFile::parse(&bad_shape).unwrap().load().unwrap_err();
        assert_eq!(e.path, ".P[1]");

        let bad_g = TRANSPORT.replace(r#"{"W": [[-0.5, 1]]}"#, r#"{"g": {"name": "clamp", "params": {"lo": "x"}}}"#);
        let e = SystemFile::parse(&bad_g).unwrap_err();
        assert!(e.path.contains("lo"), "{e}");

        let unknown = TRANSPORT.replace(r#"{"W": [[-0.5, 1]]}"#, r#"{"g": {"name": "cube"}}"#);
        assert!(SystemFile::parse(&unknown).is_err());
    }

    #[test]
    fn builtin_g_and_claim() {
        let text = TRANSPORT.replace(
            r#""bc": {"W": [[-0.5, 1]]}"#,
            r#""bc": {"g": {"name": "shifted", "params": {"shift": 0.25}}}, "lipschitz_claim": 0.5"#,
        );
        let l = SystemFile::parse(&text).unwrap().load().unwrap();
        match l.bc {
            BoundaryCondition::NonlinearG { g, claimed_lip, .. } => {
                assert_eq!(claimed_lip, 0.5);
                assert_eq!(g(&[1.0]), vec![1.25]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hamiltonian_variants() {
        for h in [
            r#"{"constant": [[2]]}"#,
            r#"{"polynomial": [[[1]], [[1]]]}"#,
            r#"{"piecewise": {"breakpoints": [0.5], "pieces": [[[[1]]], [[[2]]]]}}"#,
        ] {
            let text = TRANSPORT.replace(r#""bc""#, &format!(r#""hamiltonian": {h}, "bc""#));
            let l = SystemFile::parse(&text).unwrap().load().unwrap();
            assert!(!l.sys.hamiltonian().is_identity());
        }
        let neg = TRANSPORT.replace(r#""bc""#, r#""hamiltonian": {"constant": [[-1]]}, "bc""#);
        let e = SystemFile::parse(&neg).unwrap().load().unwrap_err();
        assert_eq!(e.path, ".hamiltonian.constant");
    }

    #[test]
    fn nonfinite_residuals_are_split_out() {
        let r = VerificationReport::new("x", Verdict::Fail)
            .with_residual("a", 1.0)
            .with_residual("b", f64::NAN);
        let f = ReportFile::aggregate("test", 0, "x", vec![r]);
        assert_eq!(f.nonfinite, vec!["x.b".to_string()]);
        assert_eq!(ReportFile::parse(&f.to_json()).unwrap(), f);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn report() -> impl Strategy<Value = VerificationReport> {
            (
                any::<bool>(),
                "[a-z_]{1,12}",
                proptest::collection::btree_map("[a-z_@=.0-9]{1,16}", -1e300f64..1e300, 0..6),
                proptest::collection::vec(
                    ("[a-z]{1,8}", proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..5)),
                    0..3,
                ),
            )
                .prop_map(|(ok, name, residuals, witnesses)| {
                    let mut r = VerificationReport::new(name, Verdict::from_bool(ok));
                    r.residuals = residuals;
                    for (label, values) in witnesses {
                        r = r.with_witness(&label, values);
                    }
                    r
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(128))]

            #[test]
            fn report_file_round_trips(
                checks in proptest::collection::vec(report(), 1..4),
                seed in any::<u64>(),
                stamp in proptest::option::of("[0-9]{1,10}"),
                value in -1e10f64..1e10,
            ) {
                let mut f = ReportFile::aggregate("verify", seed, "all", checks)
                    .with_data("values", serde_json::json!([[value, 0.5], [1e-300]]))
                    .with_note("note");
                f.timestamp = stamp;
                let text = f.to_json();
                let back = ReportFile::parse(&text).unwrap();
                prop_assert_eq!(&back, &f);
                prop_assert_eq!(back.to_json(), text);
            }
        }
    }
}
