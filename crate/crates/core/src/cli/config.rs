//! Run configuration: a JSON object validated key by key.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{Map, Value};

use crate::assembly::MaterialParams;
use crate::benchmarks::{check_reference_level, CaseName, CaseSpec, DEFAULT_REFERENCE_LEVEL};
use crate::error::{Error, Result};
use crate::geometry::GeometryMap;
use crate::solver::DEFAULT_TOLERANCE;
use crate::spaces::{BoundarySpec, SideKind};

use super::expr::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Convergence,
    Verify,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeometrySource {
    UnitSquare,
    /// Inner radius 1, outer radius 2.5.
    QuarterAnnulus,
    /// Control-net file.
    File(PathBuf),
}

impl GeometrySource {
    pub fn build(&self) -> Result<GeometryMap> {
        match self {
            GeometrySource::UnitSquare => Ok(GeometryMap::unit_square()),
            GeometrySource::QuarterAnnulus => GeometryMap::quarter_annulus(1.0, 2.5),
            GeometrySource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::GeometryFile(format!("cannot read {}: {e}", path.display()))
                })?;
                GeometryMap::from_control_net(&text)
            }
        }
    }
}

/// A user-defined plate.
#[derive(Clone, Debug, PartialEq)]
pub struct CustomProblem {
    pub name: String,
    pub geometry: GeometrySource,
    pub bc: BoundarySpec,
    pub load: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSource {
    Case(CaseName),
    Custom(CustomProblem),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub problem: ProblemSource,
    pub p: usize,
    pub alpha: usize,
    pub t: f64,
    /// Study levels (`convergence`).
    pub levels: Vec<usize>,
    /// Mesh level of a single solve (`solve`, `verify`).
    pub level: usize,
    pub q: usize,
    pub error_q: usize,
    pub tol: f64,
    pub material: MaterialParams,
    pub reference_level: usize,
    /// Field-dump lattice size.
    pub samples: (usize, usize),
    /// Output file names, relative to the output directory.
    pub csv: String,
    pub field: String,
}

impl RunConfig {
    /// The configured problem as a study case.
    pub fn case_spec(&self) -> Result<CaseSpec> {
        match &self.problem {
            ProblemSource::Case(name) => {
                Ok(CaseSpec::from_name(*name).with_reference_level(self.reference_level))
            }
            ProblemSource::Custom(c) => {
                let expr = c.load.clone();
                Ok(CaseSpec::custom(
                    c.name.clone(),
                    Arc::new(c.geometry.build()?),
                    c.bc,
                    Arc::new(move |x: [f64; 2]| expr.eval(x[0], x[1])),
                    self.reference_level,
                ))
            }
        }
    }
}

const TOP_KEYS: &[&str] = &[
    "command",
    "case",
    "problem",
    "p",
    "alpha",
    "t",
    "levels",
    "level",
    "q",
    "error_q",
    "tol",
    "E",
    "nu",
    "k_shear",
    "reference_level",
    "samples",
    "csv",
    "field",
];

const PROBLEM_KEYS: &[&str] = &["name", "geometry", "bc", "load"];
const BC_KEYS: &[&str] = &["u0", "u1", "v0", "v1"];

/// Common alternative spellings mapped to the key they most likely mean.
const ALIASES: &[(&str, &str)] = &[
    ("degree", "p"),
    ("degre", "p"),
    ("deg", "p"),
    ("order", "p"),
    ("regularity", "alpha"),
    ("continuity", "alpha"),
    ("smoothness", "alpha"),
    ("thickness", "t"),
    ("young", "E"),
    ("youngs_modulus", "E"),
    ("e", "E"),
    ("poisson", "nu"),
    ("poisson_ratio", "nu"),
    ("k", "k_shear"),
    ("shear_factor", "k_shear"),
    ("shear_correction", "k_shear"),
    ("quadrature", "q"),
    ("gauss", "q"),
    ("tolerance", "tol"),
    ("meshes", "levels"),
    ("refinements", "levels"),
    ("mesh", "level"),
    ("reference", "reference_level"),
    ("load", "problem"),
    ("geometry", "problem"),
];

fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != *cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Closest valid key to an unknown one, if any is plausible.
pub fn suggest_key(unknown: &str, valid: &[&str]) -> Option<String> {
    let lower = unknown.to_ascii_lowercase();
    if let Some((_, k)) = ALIASES.iter().find(|(a, _)| *a == lower || *a == unknown) {
        if valid.contains(k) {
            return Some((*k).to_string());
        }
    }
    valid
        .iter()
        .map(|k| (levenshtein(unknown, k), *k))
        .filter(|(d, k)| *d <= 2 && *d < k.len().max(unknown.len()))
        .min()
        .map(|(_, k)| k.to_string())
}

fn check_keys(obj: &Map<String, Value>, valid: &[&str], context: &str) -> Result<()> {
    for key in obj.keys() {
        if !valid.contains(&key.as_str()) {
            let hint = suggest_key(key, valid)
                .map(|s| format!("; did you mean \"{s}\"?"))
                .unwrap_or_default();
            return Err(Error::Config(format!("unknown key \"{key}\"{context}{hint}")));
        }
    }
    Ok(())
}

fn type_error(key: &str, expected: &str, got: &Value) -> Error {
    Error::Config(format!("key \"{key}\": expected {expected}, got {got}"))
}

fn get_usize(obj: &Map<String, Value>, key: &str) -> Result<Option<usize>> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| type_error(key, "a non-negative integer", v)),
    }
}

fn get_f64(obj: &Map<String, Value>, key: &str) -> Result<Option<f64>> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v.as_f64().map(Some).ok_or_else(|| type_error(key, "a number", v)),
    }
}

fn get_str<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<Option<&'a str>> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v.as_str().map(Some).ok_or_else(|| type_error(key, "a string", v)),
    }
}

fn get_usize_list(obj: &Map<String, Value>, key: &str) -> Result<Option<Vec<usize>>> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => {
            let err = || type_error(key, "an array of non-negative integers", v);
            let arr = v.as_array().ok_or_else(err)?;
            arr.iter()
                .map(|x| x.as_u64().map(|n| n as usize).ok_or_else(err))
                .collect::<Result<Vec<_>>>()
                .map(Some)
        }
    }
}

fn parse_command(s: &str) -> Result<Command> {
    match s {
        "solve" => Ok(Command::Solve),
        "convergence" => Ok(Command::Convergence),
        "verify" => Ok(Command::Verify),
        _ => Err(Error::Config(format!(
            "key \"command\": unknown command \"{s}\"; valid commands: solve, convergence, verify"
        ))),
    }
}

fn parse_problem(v: &Value, base_dir: Option<&Path>) -> Result<CustomProblem> {
    let obj = v
        .as_object()
        .ok_or_else(|| type_error("problem", "an object", v))?;
    check_keys(obj, PROBLEM_KEYS, " in \"problem\"")?;
    let name = get_str(obj, "name")?.unwrap_or("custom").to_string();
    let geometry = match get_str(obj, "geometry")? {
        None => return Err(Error::Config("key \"problem.geometry\" is required".into())),
        Some("unit_square") => GeometrySource::UnitSquare,
        Some("quarter_annulus") => GeometrySource::QuarterAnnulus,
        Some(path) => {
            let p = PathBuf::from(path);
            GeometrySource::File(match base_dir {
                Some(d) if p.is_relative() => d.join(p),
                _ => p,
            })
        }
    };
    let bc_val = obj
        .get("bc")
        .ok_or_else(|| Error::Config("key \"problem.bc\" is required".into()))?;
    let bc_obj = bc_val
        .as_object()
        .ok_or_else(|| type_error("problem.bc", "an object with keys u0, u1, v0, v1", bc_val))?;
    check_keys(bc_obj, BC_KEYS, " in \"problem.bc\"")?;
    let mut kinds = [SideKind::Free; 4];
    for (k, key) in BC_KEYS.iter().enumerate() {
        let s = get_str(bc_obj, key)?
            .ok_or_else(|| Error::Config(format!("key \"problem.bc.{key}\" is required")))?;
        kinds[k] = SideKind::parse(s).ok_or_else(|| {
            Error::Config(format!(
                "key \"problem.bc.{key}\": unknown boundary kind \"{s}\"; valid kinds: clamped, simply_supported_hard, simply_supported_soft, free"
            ))
        })?;
    }
    let bc = BoundarySpec::new(kinds[0], kinds[1], kinds[2], kinds[3])?;
    let load_text = get_str(obj, "load")?
        .ok_or_else(|| Error::Config("key \"problem.load\" is required".into()))?;
    let load = Expr::parse(load_text)?;
    Ok(CustomProblem {
        name,
        geometry,
        bc,
        load,
    })
}

/// Parses and validates a configuration. Relative geometry paths are
/// resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<RunConfig> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::Config("configuration must be a JSON object".into()))?;
    check_keys(obj, TOP_KEYS, "")?;

    let command = parse_command(
        get_str(obj, "command")?.ok_or_else(|| Error::Config("key \"command\" is required".into()))?,
    )?;
    let problem = match (get_str(obj, "case")?, obj.get("problem")) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "keys \"case\" and \"problem\" are mutually exclusive".into(),
            ))
        }
        (Some(name), None) => ProblemSource::Case(name.parse()?),
        (None, Some(v)) => ProblemSource::Custom(parse_problem(v, base_dir)?),
        (None, None) => ProblemSource::Case(CaseName::Case1),
    };

    let p = get_usize(obj, "p")?.unwrap_or(3);
    if p < 2 {
        return Err(Error::Config(format!("key \"p\": degree must be at least 2, got {p}")));
    }
    let alpha = get_usize(obj, "alpha")?.unwrap_or(p - 1);
    if alpha < 1 || alpha > p - 1 {
        return Err(Error::Config(format!(
            "key \"alpha\": regularity must satisfy 1 <= alpha <= p - 1 = {}, got {alpha}",
            p - 1
        )));
    }
    let t = get_f64(obj, "t")?.unwrap_or(1e-3);
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Config(format!("key \"t\": thickness must be positive, got {t}")));
    }
    let levels = get_usize_list(obj, "levels")?.unwrap_or_else(|| vec![4, 8, 16, 32]);
    if levels.is_empty() || levels.contains(&0) || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "key \"levels\": expected a non-empty strictly increasing list of positive integers, got {levels:?}"
        )));
    }
    let level = get_usize(obj, "level")?.unwrap_or(16);
    if level == 0 {
        return Err(Error::Config("key \"level\": must be positive".into()));
    }
    let q = get_usize(obj, "q")?.unwrap_or(p + 1);
    let error_q = get_usize(obj, "error_q")?.unwrap_or(p + 2);
    for (key, v) in [("q", q), ("error_q", error_q)] {
        if !(1..=30).contains(&v) {
            return Err(Error::Config(format!("key \"{key}\": must be in 1..=30, got {v}")));
        }
    }
    let tol = get_f64(obj, "tol")?.unwrap_or(DEFAULT_TOLERANCE);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config(format!("key \"tol\": must be in (0, 1), got {tol}")));
    }
    let defaults = MaterialParams::default();
    let material = MaterialParams::new(
        get_f64(obj, "E")?.unwrap_or(defaults.e),
        get_f64(obj, "nu")?.unwrap_or(defaults.nu),
        get_f64(obj, "k_shear")?.unwrap_or(defaults.k_shear),
    )
    .map_err(|e| Error::Config(format!("material: {e}")))?;
    let reference_level = get_usize(obj, "reference_level")?.unwrap_or(DEFAULT_REFERENCE_LEVEL);
    let samples = match get_usize_list(obj, "samples")? {
        None => (21, 21),
        Some(v) if v.len() == 2 && v[0] >= 2 && v[1] >= 2 => (v[0], v[1]),
        Some(v) => {
            return Err(Error::Config(format!(
                "key \"samples\": expected [nx, ny] with both at least 2, got {v:?}"
            )))
        }
    };
    let csv = get_str(obj, "csv")?.unwrap_or("convergence.csv").to_string();
    let field = get_str(obj, "field")?.unwrap_or("field.txt").to_string();

    let has_reference = !matches!(problem, ProblemSource::Case(CaseName::Case1));
    if command == Command::Convergence && has_reference {
        check_reference_level(reference_level, &levels)
            .map_err(|e| Error::Config(format!("key \"reference_level\": {e}")))?;
    }

    Ok(RunConfig {
        command,
        problem,
        p,
        alpha,
        t,
        levels,
        level,
        q,
        error_q,
        tol,
        material,
        reference_level,
        samples,
        csv,
        field,
    })
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, path.parent())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(
            r#"{"command":"convergence","case":"case1","p":3,"alpha":2,"t":1e-3,"levels":[4,8,16,32]}"#,
            None,
        )
        .unwrap();
        assert_eq!(c.command, Command::Convergence);
        assert_eq!(c.problem, ProblemSource::Case(CaseName::Case1));
        assert_eq!(c.q, 4);
        assert_eq!(c.tol, 1e-10);
        assert_eq!(c.material, MaterialParams::default());
        assert!((c.material.k_shear - 5.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn unknown_key_suggests_replacement() {
        let err = parse_config(r#"{"command":"solve","degre":3}"#, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("degre") && msg.contains("\"p\""), "{msg}");
        let msg = parse_config(r#"{"command":"solve","alpah":1}"#, None)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("\"alpha\""), "{msg}");
        let msg = parse_config(r#"{"command":"solve","zzzzzz":1}"#, None)
            .unwrap_err()
            .to_string();
        assert!(!msg.contains("did you mean"), "{msg}");
    }

    #[test]
    fn schema_errors_name_key_and_type() {
        let msg = parse_config(r#"{"command":"solve","p":"three"}"#, None)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("\"p\"") && msg.contains("integer"), "{msg}");
        let msg = parse_config(r#"{"command":"solve","case":"case9"}"#, None)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("case3-uniform"), "{msg}");
    }

    #[test]
    fn nonpositive_thickness_rejected() {
        for t in ["0", "-1e-3"] {
            let text = format!(r#"{{"command":"solve","t":{t}}}"#);
            assert!(matches!(parse_config(&text, None), Err(Error::Config(_))));
        }
    }

    #[test]
    fn reference_guard_at_validation() {
        let text = r#"{"command":"convergence","case":"case2","levels":[4,8,64]}"#;
        assert!(parse_config(text, None).is_err());
    }

    #[test]
    fn custom_problem() {
        let c = parse_config(
            r#"{"command":"solve","problem":{"geometry":"quarter_annulus",
                "bc":{"u0":"simply_supported_hard","u1":"simply_supported_hard",
                      "v0":"simply_supported_soft","v1":"free"},
                "load":"1e4*sin(2*atan2(y,x))"}}"#,
            Some(Path::new("/cfg")),
        )
        .unwrap();
        let ProblemSource::Custom(p) = &c.problem else {
            panic!("expected custom problem")
        };
        assert_eq!(p.geometry, GeometrySource::QuarterAnnulus);
        assert_eq!(p.bc.kind(crate::spaces::Side::V1), SideKind::Free);
        let file = parse_config(
            r#"{"command":"solve","problem":{"geometry":"net.txt",
                "bc":{"u0":"clamped","u1":"clamped","v0":"clamped","v1":"clamped"},"load":"1"}}"#,
            Some(Path::new("/cfg")),
        )
        .unwrap();
        let ProblemSource::Custom(p) = &file.problem else {
            panic!("expected custom problem")
        };
        assert_eq!(p.geometry, GeometrySource::File(PathBuf::from("/cfg/net.txt")));
        let bad = parse_config(
            r#"{"command":"solve","problem":{"geometry":"unit_square",
                "bc":{"u0":"clamped","u1":"clamped","v0":"clamped","v1":"glued"},"load":"1"}}"#,
            None,
        );
        assert!(bad.unwrap_err().to_string().contains("glued"));
    }
}
