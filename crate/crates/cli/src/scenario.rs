//! Scenario files: a space, named objects, and an ordered task list.

use std::collections::BTreeMap;

use serde::Deserialize;
use ssdkit::convexfun::{AffinePiece, GridAxis};
use ssdkit::{GraphSampling, SolverConfig, SsdSpace};

use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub space: SsdSpace,
    #[serde(default)]
    pub solver: SolverOverrides,
    #[serde(default)]
    pub sampling: GraphSampling,
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionDesc>,
    #[serde(default)]
    pub operators: BTreeMap<String, OperatorDesc>,
    #[serde(default)]
    pub sets: BTreeMap<String, SetDesc>,
    #[serde(default)]
    pub tasks: Vec<Task>,
}

/// Fields left out keep the library defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SolverOverrides {
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub restarts: Option<usize>,
    pub radius: Option<f64>,
    pub bundle: Option<usize>,
    pub polish: Option<f64>,
}

impl SolverOverrides {
    pub fn apply(&self, seed: u64) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            tol: self.tol.unwrap_or(d.tol),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            restarts: self.restarts.unwrap_or(d.restarts),
            seed,
            radius: self.radius.or(d.radius),
            bundle: self.bundle.unwrap_or(d.bundle),
            polish: self.polish.unwrap_or(d.polish),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum FunctionDesc {
    /// `½⟨b, Qb⟩ + ⟨p, b⟩ + r`, `Q` given row by row.
    Quadratic {
        q: Vec<Vec<f64>>,
        p: Vec<f64>,
        #[serde(default)]
        r: f64,
    },
    /// `½‖·‖²`; the dimension defaults to the scenario space.
    G0 {
        #[serde(default)]
        dim: Option<usize>,
    },
    /// `|·|` on `R`.
    Abs {},
    MaxAffine { pieces: Vec<AffinePiece> },
    /// Values on a tensor grid, row-major (last axis fastest).
    Grid { axes: Vec<GridAxis>, values: Vec<f64> },
    /// Fitzpatrick function of the polygonal chain through the vertices.
    Chain { vertices: Vec<Vec<f64>> },
    Translated { base: String, shift: Vec<f64> },
    /// `base∘(±ρ2)` on a product space.
    Reflected { base: String, sign: i32 },
    IntrinsicConjugate { base: String },
    Conjugate { base: String },
    Sum { parts: Vec<String> },
    /// The same one-dimensional function on every coordinate.
    Componentwise { base: String, dim: usize },
    Separable { blocks: Vec<Block> },
    /// Fitzpatrick function of a set or of an operator's graph.
    Fitzpatrick {
        #[serde(default)]
        set: Option<String>,
        #[serde(default)]
        operator: Option<String>,
    },
    PartialEpisum {
        f: String,
        g: String,
        #[serde(default = "default_resolution")]
        resolution: usize,
        #[serde(default = "default_episum_radius")]
        radius: f64,
    },
}

fn default_resolution() -> usize {
    201
}

fn default_episum_radius() -> f64 {
    10.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub coords: Vec<usize>,
    pub function: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum OperatorDesc {
    Subdiff { function: String },
    /// `x ↦ Mx + b`, `M` given row by row.
    Affine { m: Vec<Vec<f64>>, b: Vec<f64> },
    Identity { n: usize },
    /// Finite graph; each point is `[x..., x*...]`.
    Graph { points: Vec<Vec<f64>> },
    /// `{(t, slope·t + shift)}` for `t` on a range (one-dimensional).
    LineGraph { slope: f64, shift: f64, t: Range },
    Sum { ops: Vec<String> },
    Inverse { op: String },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum SetDesc {
    /// Explicit points of the scenario space.
    Points { points: Vec<Vec<f64>> },
    /// `{(cos θ, sin θ, λθ)}` in the triple space.
    Helix { lambda: f64, theta: Range },
    /// `{t·direction}` in the scenario space.
    Line { direction: Vec<f64>, t: Range },
    /// Sampled graph of an operator.
    Graph { operator: String },
    /// Image of another set under `ρ1` or `ρ2` (product spaces).
    Reflected { set: String, map: Reflection },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reflection {
    Rho1,
    Rho2,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Task {
    pub id: String,
    #[serde(flatten)]
    pub kind: TaskKind,
}

/// Expected verdict of a maximality probe.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectVerdict {
    #[default]
    ConsistentWithMaximal,
    Refuted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchChoice {
    #[default]
    Primary,
    Dual,
    /// Runs both and checks that they agree.
    Both,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecomposeExpect {
    #[default]
    Split,
    /// The BC/TBC hypothesis should be refuted at this point.
    Refuted,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "verb", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskKind {
    #[serde(rename_all = "kebab-case")]
    CheckQpositive {
        set: String,
        #[serde(default = "yes")]
        expect: bool,
        #[serde(default)]
        tol: Option<f64>,
    },
    #[serde(rename_all = "kebab-case")]
    FitzpatrickEval {
        #[serde(default)]
        set: Option<String>,
        #[serde(default)]
        operator: Option<String>,
        at: Vec<Vec<f64>>,
        #[serde(default)]
        expect: Option<Vec<f64>>,
        #[serde(default = "value_tol")]
        tol: f64,
    },
    #[serde(rename_all = "kebab-case")]
    ConjugateEval {
        function: String,
        at: Vec<Vec<f64>>,
        /// `f^@` when true (default), the Fenchel conjugate `f*` otherwise.
        #[serde(default = "yes")]
        intrinsic: bool,
        #[serde(default)]
        expect: Option<Vec<f64>>,
        #[serde(default = "value_tol")]
        tol: f64,
    },
    #[serde(rename_all = "kebab-case")]
    CertifyBc {
        function: String,
        #[serde(default = "cert_samples")]
        samples: usize,
        #[serde(default = "cert_radius")]
        radius: f64,
        #[serde(default = "cert_tol")]
        tol: f64,
        #[serde(default = "yes")]
        expect: bool,
    },
    #[serde(rename_all = "kebab-case")]
    CertifyTbc {
        function: String,
        #[serde(default = "cert_samples")]
        samples: usize,
        #[serde(default = "cert_radius")]
        radius: f64,
        #[serde(default = "cert_tol")]
        tol: f64,
        #[serde(default = "yes")]
        expect: bool,
    },
    #[serde(rename_all = "kebab-case")]
    Decompose {
        f: String,
        g: String,
        c: Vec<f64>,
        #[serde(default)]
        expect: DecomposeExpect,
        #[serde(default)]
        expect_p: Option<Vec<f64>>,
        #[serde(default)]
        expect_n: Option<Vec<f64>>,
        #[serde(default = "point_tol")]
        tol: f64,
    },
    #[serde(rename_all = "kebab-case")]
    CheckMaximal {
        function: String,
        #[serde(default)]
        g: Option<String>,
        #[serde(default = "probe_count")]
        probes: usize,
        #[serde(default = "probe_radius")]
        radius: f64,
        #[serde(default)]
        expect: ExpectVerdict,
    },
    #[serde(rename_all = "kebab-case")]
    Surjectivity {
        operator: String,
        y_star: Vec<f64>,
        #[serde(default)]
        expect_x: Option<Vec<f64>>,
        #[serde(default = "point_tol")]
        tol: f64,
    },
    #[serde(rename_all = "kebab-case")]
    Minnorm {
        operator: String,
        #[serde(default = "minnorm_radius")]
        radius: f64,
        #[serde(default = "minnorm_points")]
        points: usize,
        #[serde(default)]
        expect_lhs: Option<f64>,
        #[serde(default = "lhs_tol")]
        lhs_tol: f64,
        /// Radicand and graph-scan tolerance.
        #[serde(default = "radicand_tol")]
        radicand_tol: f64,
        /// Allowed `|lhs − rhs|`.
        #[serde(default = "minnorm_tol")]
        tol: f64,
    },
    #[serde(rename_all = "kebab-case")]
    SumCheck {
        s: String,
        t: String,
        #[serde(default = "probe_count")]
        probes: usize,
        #[serde(default = "probe_radius")]
        radius: f64,
        #[serde(default)]
        expect: ExpectVerdict,
    },
    #[serde(rename_all = "kebab-case")]
    SumSurjectivity {
        s: String,
        t: String,
        y_star: Vec<f64>,
        #[serde(default)]
        expect_x: Option<Vec<f64>>,
        #[serde(default = "point_tol")]
        tol: f64,
    },
    #[serde(rename_all = "kebab-case")]
    Hammerstein {
        s: String,
        t: String,
        x: Vec<f64>,
        #[serde(default)]
        branch: BranchChoice,
        #[serde(default)]
        expect_y: Option<Vec<f64>>,
        #[serde(default = "point_tol")]
        tol: f64,
    },
    #[serde(rename_all = "kebab-case")]
    EpisumEval {
        f: String,
        g: String,
        at: Vec<Vec<f64>>,
        #[serde(default = "default_resolution")]
        resolution: usize,
        #[serde(default = "default_episum_radius")]
        radius: f64,
        #[serde(default)]
        expect: Option<Vec<f64>>,
        #[serde(default = "value_tol")]
        tol: f64,
    },
}

/// Every verb, in schema order.
pub const VERBS: [&str; 13] = [
    "check-qpositive",
    "fitzpatrick-eval",
    "conjugate-eval",
    "certify-bc",
    "certify-tbc",
    "decompose",
    "check-maximal",
    "surjectivity",
    "minnorm",
    "sum-check",
    "sum-surjectivity",
    "hammerstein",
    "episum-eval",
];

impl TaskKind {
    pub fn verb(&self) -> &'static str {
        let i = match self {
            TaskKind::CheckQpositive { .. } => 0,
            TaskKind::FitzpatrickEval { .. } => 1,
            TaskKind::ConjugateEval { .. } => 2,
            TaskKind::CertifyBc { .. } => 3,
            TaskKind::CertifyTbc { .. } => 4,
            TaskKind::Decompose { .. } => 5,
            TaskKind::CheckMaximal { .. } => 6,
            TaskKind::Surjectivity { .. } => 7,
            TaskKind::Minnorm { .. } => 8,
            TaskKind::SumCheck { .. } => 9,
            TaskKind::SumSurjectivity { .. } => 10,
            TaskKind::Hammerstein { .. } => 11,
            TaskKind::EpisumEval { .. } => 12,
        };
        VERBS[i]
    }
}

fn yes() -> bool {
    true
}
fn value_tol() -> f64 {
    1e-8
}
fn point_tol() -> f64 {
    1e-6
}
fn cert_samples() -> usize {
    ssdkit::convexfun::DEFAULT_CERT_SAMPLES
}
fn cert_radius() -> f64 {
    4.0
}
fn cert_tol() -> f64 {
    1e-9
}
fn probe_count() -> usize {
    50
}
fn probe_radius() -> f64 {
    3.0
}
fn minnorm_radius() -> f64 {
    6.0
}
fn minnorm_points() -> usize {
    2001
}
fn lhs_tol() -> f64 {
    1e-12
}
fn radicand_tol() -> f64 {
    1e-9
}
fn minnorm_tol() -> f64 {
    5e-3
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let sc = Scenario::parse("space = { kind = \"product\", n = 2 }\n[solver]\ntol = 1e-8\n").unwrap();
        assert_eq!(sc.space, SsdSpace::product(2));
        let cfg = sc.solver.apply(5);
        assert_eq!(cfg.tol, 1e-8);
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.max_iters, SolverConfig::default().max_iters);
        assert_eq!(sc.sampling, GraphSampling::default());
    }

    #[test]
    fn verb_names_match_the_schema() {
        let bodies = [
            "set = \"s\"",
            "set = \"s\"\nat = []",
            "function = \"f\"\nat = []",
            "function = \"f\"",
            "function = \"f\"",
            "f = \"f\"\ng = \"g\"\nc = []",
            "function = \"f\"",
            "operator = \"o\"\ny-star = []",
            "operator = \"o\"",
            "s = \"a\"\nt = \"b\"",
            "s = \"a\"\nt = \"b\"\ny-star = []",
            "s = \"a\"\nt = \"b\"\nx = []",
            "f = \"f\"\ng = \"g\"\nat = []",
        ];
        for (verb, body) in VERBS.iter().zip(bodies) {
            let text = format!("space = {{ kind = \"triple\" }}\n[[tasks]]\nid = \"t\"\nverb = \"{verb}\"\n{body}\n");
            let sc = Scenario::parse(&text).unwrap_or_else(|e| panic!("{verb}: {e}"));
            assert_eq!(sc.tasks[0].kind.verb(), *verb);
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(Scenario::parse("space = { kind = \"triple\" }\nsolver = { tolerance = 1.0 }\n").is_err());
        assert!(Scenario::parse("space = { kind = \"triple\" }\n[functions.f]\ng0 = { size = 2 }\n").is_err());
        assert!(Scenario::parse("space = { kind = \"cube\" }\n").is_err());
    }
}
