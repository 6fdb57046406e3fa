//! Experiment configuration: a JSON document walked by hand so that every
//! schema error can name the offending path.

use std::fmt;

use num_complex::Complex64;
use ris_core::linop::{ensure_hermitian, ComplexMatrix};
use ris_core::spin::SpinParams;
use serde_json::{json, Map, Value};

/// Dimension cap on `n_S * n_E` when `RIS_MAX_DIM` is unset.
pub const DEFAULT_MAX_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Effective,
    ConvergeLambda,
    ConvergeTau,
    Asymptotic,
    Kato,
    DysonCheck,
    SpinOracle,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Effective,
        Experiment::ConvergeLambda,
        Experiment::ConvergeTau,
        Experiment::Asymptotic,
        Experiment::Kato,
        Experiment::DysonCheck,
        Experiment::SpinOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Effective => "effective",
            Experiment::ConvergeLambda => "converge-lambda",
            Experiment::ConvergeTau => "converge-tau",
            Experiment::Asymptotic => "asymptotic",
            Experiment::Kato => "kato",
            Experiment::DysonCheck => "dyson-check",
            Experiment::SpinOracle => "spin-oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Spin(SpinParams),
    Inline {
        h_s: ComplexMatrix,
        h_e: ComplexMatrix,
        v: ComplexMatrix,
        beta: f64,
        p0: Option<ComplexMatrix>,
    },
}

impl ModelSpec {
    pub fn full_dim(&self) -> usize {
        match self {
            ModelSpec::Spin(_) => 4,
            ModelSpec::Inline { h_s, h_e, .. } => h_s.nrows() * h_e.nrows(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Largest accepted deviation in oracle experiments.
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { oracle: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelSpec,
    /// Interaction time; defaults to the spin `tau`, else 1.
    pub tau: f64,
    /// Fixed coupling of `converge-tau`.
    pub lambda: f64,
    pub lambdas: Vec<f64>,
    pub taus: Vec<f64>,
    pub eps: Vec<f64>,
    pub s_max: f64,
    pub s_steps: usize,
    /// Sample the effective dynamics off the period lattice.
    pub interpolate: bool,
    /// Times within one period for `asymptotic`.
    pub t_samples: Vec<f64>,
    /// Dyson truncation orders for `dyson-check`.
    pub orders: Vec<usize>,
    /// Evolution time for `dyson-check`.
    pub time: f64,
    /// `None` selects the bisector of the largest spectral gap.
    pub branch_cut: Option<f64>,
    pub quadrature_nodes: usize,
    pub tolerances: Tolerances,
    pub output: Option<String>,
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

type Parsed<T> = Result<T, ConfigError>;

fn fail<T>(path: &str, message: impl Into<String>) -> Parsed<T> {
    Err(ConfigError {
        path: path.to_string(),
        message: message.into(),
    })
}

fn object<'a>(v: &'a Value, path: &str) -> Parsed<&'a Map<String, Value>> {
    v.as_object()
        .map_or_else(|| fail(path, "expected an object"), Ok)
}

fn number(v: &Value, path: &str) -> Parsed<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => fail(path, "expected a finite number"),
    }
}

fn positive(v: &Value, path: &str) -> Parsed<f64> {
    let x = number(v, path)?;
    if x > 0.0 {
        Ok(x)
    } else {
        fail(path, format!("expected a positive number, got {x}"))
    }
}

fn count(v: &Value, path: &str) -> Parsed<usize> {
    match v.as_u64() {
        Some(n) if n > 0 => Ok(n as usize),
        _ => fail(path, "expected a positive integer"),
    }
}

fn complex(v: &Value, path: &str) -> Parsed<Complex64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(Complex64::new(
            number(re, &format!("{path}[0]"))?,
            number(im, &format!("{path}[1]"))?,
        )),
        _ => fail(path, "expected a complex number [re, im]"),
    }
}

fn matrix(v: &Value, path: &str) -> Parsed<ComplexMatrix> {
    let rows = v
        .as_array()
        .map_or_else(|| fail(path, "expected an array of rows"), Ok)?;
    let n = rows.len();
    if n == 0 {
        return fail(path, "matrix is empty");
    }
    let mut m = ComplexMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let rpath = format!("{path}[{i}]");
        let row = row
            .as_array()
            .map_or_else(|| fail(&rpath, "expected a row array"), Ok)?;
        if row.len() != n {
            return fail(
                &rpath,
                format!("row has {} entries, expected {n}", row.len()),
            );
        }
        for (j, z) in row.iter().enumerate() {
            m[(i, j)] = complex(z, &format!("{rpath}[{j}]"))?;
        }
    }
    Ok(m)
}

fn hermitian(v: &Value, path: &str) -> Parsed<ComplexMatrix> {
    let m = matrix(v, path)?;
    ensure_hermitian(&m, "matrix").or_else(|e| fail(path, e.to_string()))?;
    Ok(m)
}

fn grid(v: &Value, path: &str) -> Parsed<Vec<f64>> {
    let items = v
        .as_array()
        .map_or_else(|| fail(path, "expected an array of numbers"), Ok)?;
    if items.is_empty() {
        return fail(path, "grid is empty");
    }
    items
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn reject_unknown(map: &Map<String, Value>, path: &str, known: &[&str]) -> Parsed<()> {
    match map.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => fail(&format!("{path}.{k}"), "unknown field"),
        None => Ok(()),
    }
}

fn parse_spin(v: &Value, path: &str) -> Parsed<SpinParams> {
    let map = object(v, path)?;
    reject_unknown(map, path, &["S", "E", "beta", "tau", "a", "b", "c", "d"])?;
    let req = |key: &str| {
        map.get(key)
            .map_or_else(|| fail(&format!("{path}.{key}"), "missing field"), Ok)
    };
    let opt_complex = |key: &str| -> Parsed<Complex64> {
        map.get(key).map_or(Ok(Complex64::new(0.0, 0.0)), |z| {
            complex(z, &format!("{path}.{key}"))
        })
    };
    let beta = number(req("beta")?, &format!("{path}.beta"))?;
    if beta < 0.0 {
        return fail(
            &format!("{path}.beta"),
            "inverse temperature must be nonnegative",
        );
    }
    let p = SpinParams::new(
        number(req("S")?, &format!("{path}.S"))?,
        number(req("E")?, &format!("{path}.E"))?,
        beta,
        positive(req("tau")?, &format!("{path}.tau"))?,
        complex(req("b")?, &format!("{path}.b"))?,
        complex(req("c")?, &format!("{path}.c"))?,
    );
    Ok(p.with_diagonal(opt_complex("a")?, opt_complex("d")?))
}

fn parse_inline(v: &Value, path: &str) -> Parsed<ModelSpec> {
    let map = object(v, path)?;
    reject_unknown(map, path, &["h_s", "h_e", "v", "beta", "p0"])?;
    let req = |key: &str| {
        map.get(key)
            .map_or_else(|| fail(&format!("{path}.{key}"), "missing field"), Ok)
    };
    let h_s = hermitian(req("h_s")?, &format!("{path}.h_s"))?;
    let h_e = hermitian(req("h_e")?, &format!("{path}.h_e"))?;
    let v = hermitian(req("v")?, &format!("{path}.v"))?;
    let n = h_s.nrows() * h_e.nrows();
    if v.nrows() != n {
        return fail(
            &format!("{path}.v"),
            format!("v is {0}x{0}, expected {n}x{n}", v.nrows()),
        );
    }
    let beta = number(req("beta")?, &format!("{path}.beta"))?;
    if beta < 0.0 {
        return fail(
            &format!("{path}.beta"),
            "inverse temperature must be nonnegative",
        );
    }
    let p0 = map
        .get("p0")
        .map(|m| hermitian(m, &format!("{path}.p0")))
        .transpose()?;
    Ok(ModelSpec::Inline {
        h_s,
        h_e,
        v,
        beta,
        p0,
    })
}

fn parse_model(v: &Value) -> Parsed<ModelSpec> {
    let map = object(v, "$.model")?;
    match (map.get("spin"), map.get("inline")) {
        (Some(s), None) if map.len() == 1 => Ok(ModelSpec::Spin(parse_spin(s, "$.model.spin")?)),
        (None, Some(m)) if map.len() == 1 => parse_inline(m, "$.model.inline"),
        _ => fail("$.model", "expected exactly one of \"spin\" or \"inline\""),
    }
}

const TOP_LEVEL: &[&str] = &[
    "experiment",
    "model",
    "tau",
    "lambda",
    "lambdas",
    "taus",
    "eps",
    "s_max",
    "s_steps",
    "interpolate",
    "t_samples",
    "orders",
    "time",
    "branch_cut",
    "quadrature_nodes",
    "tolerances",
    "output",
    "jobs",
];

/// Parses and validates a configuration, filling defaults.
pub fn parse_config(text: &str) -> Parsed<ExperimentConfig> {
    let root: Value = serde_json::from_str(text).or_else(|e| fail("$", e.to_string()))?;
    let map = object(&root, "$")?;
    reject_unknown(map, "$", TOP_LEVEL)?;

    let experiment = match map.get("experiment") {
        None => return fail("$.experiment", "missing field"),
        Some(Value::String(s)) => Experiment::from_name(s).map_or_else(
            || {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                fail(
                    "$.experiment",
                    format!(
                        "unknown experiment {s:?}, expected one of {}",
                        names.join(", ")
                    ),
                )
            },
            Ok,
        )?,
        Some(_) => return fail("$.experiment", "expected a string"),
    };
    let model = match map.get("model") {
        None => return fail("$.model", "missing field"),
        Some(m) => parse_model(m)?,
    };

    let get = |key: &str| map.get(key).filter(|v| !v.is_null());
    let path = |key: &str| format!("$.{key}");
    let default_tau = match &model {
        ModelSpec::Spin(p) => p.tau,
        ModelSpec::Inline { .. } => 1.0,
    };
    let tau = get("tau").map_or(Ok(default_tau), |v| positive(v, &path("tau")))?;
    let lambda = get("lambda").map_or(Ok(1.0), |v| number(v, &path("lambda")))?;
    let grid_or =
        |key: &str, default: &[f64]| get(key).map_or(Ok(default.to_vec()), |v| grid(v, &path(key)));
    let lambdas = grid_or("lambdas", &[0.2, 0.1, 0.05])?;
    let taus = grid_or("taus", &[0.2, 0.1, 0.05])?;
    let eps = grid_or("eps", &[0.2, 0.1, 0.05])?;
    let t_samples = grid_or("t_samples", &[0.0])?;
    for (key, values) in [("taus", &taus), ("eps", &eps)] {
        if let Some(i) = values.iter().position(|x| *x <= 0.0) {
            return fail(&format!("$.{key}[{i}]"), "expected a positive number");
        }
    }
    if let Some(i) = t_samples.iter().position(|t| *t < 0.0 || *t >= tau) {
        return fail(
            &format!("$.t_samples[{i}]"),
            format!("expected a time in [0, {tau})"),
        );
    }
    let orders = match get("orders") {
        None => vec![2, 3, 4],
        Some(v) => {
            let items = v
                .as_array()
                .map_or_else(|| fail("$.orders", "expected an array of integers"), Ok)?;
            if items.is_empty() {
                return fail("$.orders", "grid is empty");
            }
            items
                .iter()
                .enumerate()
                .map(|(i, x)| count(x, &format!("$.orders[{i}]")))
                .collect::<Parsed<Vec<_>>>()?
        }
    };

    let tolerances = match get("tolerances") {
        None => Tolerances::default(),
        Some(v) => {
            let t = object(v, "$.tolerances")?;
            reject_unknown(t, "$.tolerances", &["oracle"])?;
            Tolerances {
                oracle: t
                    .get("oracle")
                    .map_or(Ok(Tolerances::default().oracle), |v| {
                        positive(v, "$.tolerances.oracle")
                    })?,
            }
        }
    };

    Ok(ExperimentConfig {
        experiment,
        model,
        tau,
        lambda,
        lambdas,
        taus,
        eps,
        s_max: get("s_max").map_or(Ok(5.0), |v| positive(v, &path("s_max")))?,
        s_steps: get("s_steps").map_or(Ok(50), |v| count(v, &path("s_steps")))?,
        interpolate: match get("interpolate") {
            None => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => return fail("$.interpolate", "expected a boolean"),
        },
        t_samples,
        orders,
        time: get("time").map_or(Ok(1.0), |v| positive(v, &path("time")))?,
        branch_cut: get("branch_cut")
            .map(|v| number(v, &path("branch_cut")))
            .transpose()?,
        quadrature_nodes: get("quadrature_nodes")
            .map_or(Ok(16), |v| count(v, &path("quadrature_nodes")))?,
        tolerances,
        output: match get("output") {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return fail("$.output", "expected a string"),
        },
        jobs: get("jobs").map(|v| count(v, &path("jobs"))).transpose()?,
    })
}

/// Reads `RIS_MAX_DIM`, falling back to [`DEFAULT_MAX_DIM`].
pub fn max_dim_from_env() -> Result<usize, String> {
    match std::env::var("RIS_MAX_DIM") {
        Err(_) => Ok(DEFAULT_MAX_DIM),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("RIS_MAX_DIM={s:?} is not a positive integer")),
        },
    }
}

pub fn check_dimension(config: &ExperimentConfig, cap: usize) -> Parsed<()> {
    let n = config.model.full_dim();
    if n > cap {
        return fail(
            "$.model",
            format!("n_S * n_E = {n} exceeds the cap {cap} (raise it with RIS_MAX_DIM)"),
        );
    }
    Ok(())
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect()))
            .collect(),
    )
}

impl ExperimentConfig {
    /// The configuration with every default filled in, as JSON. Parsing the
    /// echo gives back the same configuration.
    pub fn echo(&self) -> Value {
        let model = match &self.model {
            ModelSpec::Spin(p) => json!({"spin": {
                "S": p.s,
                "E": p.e,
                "beta": p.beta,
                "tau": p.tau,
                "a": complex_json(p.a),
                "b": complex_json(p.b),
                "c": complex_json(p.c),
                "d": complex_json(p.d),
            }}),
            ModelSpec::Inline {
                h_s,
                h_e,
                v,
                beta,
                p0,
            } => {
                let mut m = json!({
                    "h_s": matrix_json(h_s),
                    "h_e": matrix_json(h_e),
                    "v": matrix_json(v),
                    "beta": beta,
                });
                if let Some(p0) = p0 {
                    m["p0"] = matrix_json(p0);
                }
                json!({ "inline": m })
            }
        };
        json!({
            "experiment": self.experiment.name(),
            "model": model,
            "tau": self.tau,
            "lambda": self.lambda,
            "lambdas": self.lambdas,
            "taus": self.taus,
            "eps": self.eps,
            "s_max": self.s_max,
            "s_steps": self.s_steps,
            "interpolate": self.interpolate,
            "t_samples": self.t_samples,
            "orders": self.orders,
            "time": self.time,
            "branch_cut": self.branch_cut,
            "quadrature_nodes": self.quadrature_nodes,
            "tolerances": { "oracle": self.tolerances.oracle },
            "output": self.output,
            "jobs": self.jobs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"model":{"spin":{"S":1,"E":2,"beta":1,"b":[1,0],"c":[1,0],"tau":1}},"experiment":"spin-oracle"}"#;

    #[test]
    fn minimal_spin_config() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.experiment, Experiment::SpinOracle);
        assert_eq!(cfg.tau, 1.0);
        assert_eq!(cfg.s_steps, 50);
        assert_eq!(cfg.tolerances, Tolerances::default());
        match cfg.model {
            ModelSpec::Spin(p) => {
                assert_eq!(p.b, Complex64::new(1.0, 0.0));
                assert!(p.is_off_diagonal());
            }
            _ => panic!("expected the spin shorthand"),
        }
    }

    #[test]
    fn missing_experiment_names_its_path() {
        let err = parse_config(
            r#"{"model":{"spin":{"S":1,"E":2,"beta":1,"b":[1,0],"c":[1,0],"tau":1}}}"#,
        )
        .unwrap_err();
        assert_eq!(err.path, "$.experiment");
    }

    #[test]
    fn nested_errors_carry_paths() {
        let bad_b = MINIMAL.replace("\"b\":[1,0]", "\"b\":[1]");
        assert_eq!(parse_config(&bad_b).unwrap_err().path, "$.model.spin.b");
        let empty = MINIMAL.replace("\"experiment\"", "\"lambdas\":[],\"experiment\"");
        assert_eq!(parse_config(&empty).unwrap_err().path, "$.lambdas");
        let extra = MINIMAL.replace("\"experiment\"", "\"lamdbas\":[1],\"experiment\"");
        assert_eq!(parse_config(&extra).unwrap_err().path, "$.lamdbas");
        let entry = MINIMAL.replace("\"experiment\"", "\"taus\":[0.1,\"x\"],\"experiment\"");
        assert_eq!(parse_config(&entry).unwrap_err().path, "$.taus[1]");
    }

    #[test]
    fn non_hermitian_inline_model_reports_asymmetry() {
        let text = r#"{"experiment":"effective","model":{"inline":{
            "h_s":[[[0,0],[1,0]],[[0,0],[1,0]]],
            "h_e":[[[0,0],[0,0]],[[0,0],[1,0]]],
            "v":[[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]]],
            "beta":1}}}"#;
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.path, "$.model.inline.h_s");
        assert!(err.message.contains("asymmetry"), "{err}");
    }

    #[test]
    fn echo_reparses_to_the_same_config() {
        let cfg = parse_config(MINIMAL).unwrap();
        let again = parse_config(&cfg.echo().to_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn dimension_cap() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert!(check_dimension(&cfg, 8).is_ok());
        assert_eq!(check_dimension(&cfg, 3).unwrap_err().path, "$.model");
    }
}
