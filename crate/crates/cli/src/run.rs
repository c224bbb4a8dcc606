//! Dispatch of a validated scenario to the library and collection of its report.

use std::collections::BTreeMap;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use qpool_core::classical::{pool_classical, ProbDist};
use qpool_core::estimation::{
    polynomial_population, polynomial_predictive, pooled_population, pooled_predictive, posterior_update,
    predictive_state, qubit_diagonal_posterior, reproduce_paper_example, DiagonalEffect, PolynomialDensity,
    WeightedStateEnsemble,
};
use qpool_core::fusion::{
    averaged_fusion, check_consistency, demonstrate_ambiguity, realize_with_weights, HistoryMeasureConfig,
};
use qpool_core::linalg::{support, tol, vector_literal, ComplexMatrix, DensityMatrix};
use qpool_core::measurement::{
    conditional, conditional_state_with_initial, flatten_history, KrausPovm, MeasurementHistory, MeasurementStep, Povm,
};
use qpool_core::montecarlo::derive_seed;
use qpool_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, Param, Scenario, ScenarioConfig, StepConfig};

/// Sub-seed counters: `derive_seed(seed, k)` feeds the consumer listed here.
pub const SEED_AVERAGED_FUSION: u64 = 0;
pub const SEED_ESTIMATION_ENSEMBLE: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A flat numeric table for CSV output.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    fn matrix(m: &ComplexMatrix) -> Self {
        let mut t = Self::new(&["row", "col", "re", "im"]);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m.get(i, j);
                t.row(vec![i.into(), j.into(), z.re.into(), z.im.into()]);
            }
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub name: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub kind: String,
    pub seed: u64,
    pub inputs: Value,
    pub status: String,
    pub outputs: Value,
    pub error: Option<ErrorInfo>,
    pub provenance: Vec<String>,
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub tables: BTreeMap<String, Table>,
    /// Preformatted blocks appended to the text form.
    #[serde(skip)]
    pub sections: Vec<String>,
}

impl RunReport {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// 0 on success, 2 on a numerical failure.
    pub fn exit_code(&self) -> i32 {
        if self.is_ok() {
            0
        } else {
            2
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

#[derive(Default)]
struct Outcome {
    outputs: Value,
    tables: BTreeMap<String, Table>,
    sections: Vec<String>,
    provenance: Vec<String>,
}

impl Outcome {
    fn new(outputs: Value) -> Self {
        Self { outputs, ..Self::default() }
    }

    fn table(mut self, name: &str, t: Table) -> Self {
        self.tables.insert(name.to_string(), t);
        self
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.provenance.push(s.into());
        self
    }
}

type Run = Result<Outcome, Error>;

pub fn run_scenario(cfg: &ScenarioConfig) -> RunReport {
    let seed = cfg.seed.unwrap_or(0);
    let start = Instant::now();
    let result = dispatch(&cfg.scenario, seed);
    let wall_clock_seconds = start.elapsed().as_secs_f64();
    let mut report = RunReport {
        tool: format!("qpool {}", env!("CARGO_PKG_VERSION")),
        kind: cfg.scenario.kind().to_string(),
        seed,
        inputs: cfg.to_value(),
        status: "ok".into(),
        outputs: Value::Null,
        error: None,
        provenance: Vec::new(),
        wall_clock_seconds,
        tables: BTreeMap::new(),
        sections: Vec::new(),
    };
    match result {
        Ok(o) => {
            report.outputs = o.outputs;
            report.tables = o.tables;
            report.sections = o.sections;
            report.provenance = o.provenance;
        }
        Err(e) => {
            report.status = "error".into();
            report.error = Some(ErrorInfo { name: e.name().into(), message: e.to_string() });
            let mut t = Table::new(&["name", "message"]);
            t.row(vec![e.name().into(), e.to_string().into()]);
            report.tables.insert("error".into(), t);
        }
    }
    report
}

fn dispatch(s: &Scenario, seed: u64) -> Run {
    match s {
        Scenario::PoolClassical(c) => run_pool(&c.p, &c.q),
        Scenario::History(c) => run_history(&c.steps, &c.known, c.initial.as_ref()),
        Scenario::Consistency(c) => run_consistency(&c.rho_a, &c.rho_b, c.tolerance.unwrap_or(tol::RANK)),
        Scenario::Realize(c) => run_realize(&c.rho_a, &c.rho_b, &c.sigma, c.alpha, c.beta),
        Scenario::Ambiguity(c) => run_ambiguity(&c.rho_a, &c.rho_b, &c.sigma1, &c.sigma2),
        Scenario::Fuse(c) => {
            let cfg = HistoryMeasureConfig {
                family: c.family,
                n_samples: c.n_samples,
                seed: derive_seed(seed, SEED_AVERAGED_FUSION),
                weight_exponent: c.weight_exponent.unwrap_or(1.0),
            };
            run_fuse(&c.rho_a, &c.rho_b, &cfg)
        }
        Scenario::Estimate(c) => {
            run_estimate(&c.alice, &c.bob, c.n_samples.map(|n| (n, derive_seed(seed, SEED_ESTIMATION_ENSEMBLE))))
        }
        Scenario::ReproducePaper(_) => run_reproduce(),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable output")
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Distribution from parameters; the error names the offending field.
pub(crate) fn prob_dist(name: &str, ps: &[Param]) -> Result<ProbDist, ConfigError> {
    let field = |m: String| ConfigError::Field { path: name.into(), message: m };
    let values = ps.iter().map(Param::value).collect::<Result<Vec<_>, _>>().map_err(field)?;
    ProbDist::new(values).map_err(|e| field(e.to_string()))
}

pub(crate) fn diagonal_effects(name: &str, ps: &[Param]) -> Result<Vec<DiagonalEffect>, ConfigError> {
    ps.iter()
        .enumerate()
        .map(|(i, p)| {
            let field = |m: String| ConfigError::Field { path: format!("{name}[{i}]"), message: m };
            DiagonalEffect::new(p.rational().map_err(field)?).map_err(|e| field(e.to_string()))
        })
        .collect()
}

/// Kraus form of each step: explicit operators when given, `√E` otherwise.
pub(crate) fn build_history(steps: &[StepConfig]) -> Result<MeasurementHistory, ConfigError> {
    let mut out = Vec::with_capacity(steps.len());
    for (i, s) in steps.iter().enumerate() {
        let field = |sub: &str, m: String| ConfigError::Field { path: format!("steps[{i}].{sub}"), message: m };
        let povm = Povm::from_matrices(s.povm.clone()).map_err(|e| field("povm", e.to_string()))?;
        let kraus = match &s.kraus {
            None => KrausPovm::from_povm(&povm).map_err(|e| field("povm", e.to_string()))?,
            Some(ops) => {
                let k = KrausPovm::new(ops.clone()).map_err(|e| field("kraus", e.to_string()))?;
                for (n, e) in povm.effects().iter().enumerate() {
                    let kk = k.effect(n).map_err(|e| field("kraus", e.to_string()))?;
                    if kk.max_abs_diff(e.matrix()) > 1e-9 {
                        return Err(field("kraus", format!("operator {n} does not reproduce effect {n}")));
                    }
                }
                k
            }
        };
        out.push(MeasurementStep { owner: s.owner, kraus });
    }
    MeasurementHistory::new(out).map_err(|e| ConfigError::Field { path: "steps".into(), message: e.to_string() })
}

fn config_bug(e: ConfigError) -> Error {
    Error::InvalidValue(e.to_string())
}

fn run_pool(p: &[Param], q: &[Param]) -> Run {
    let p = prob_dist("p", p).map_err(config_bug)?;
    let q = prob_dist("q", q).map_err(config_bug)?;
    let pooled = pool_classical(&p, &q)?;
    let mut t = Table::new(&["n", "p", "q", "pooled"]);
    for n in 0..pooled.len() {
        t.row(vec![n.into(), p.probs()[n].into(), q.probs()[n].into(), pooled.probs()[n].into()]);
    }
    Ok(Outcome::new(json!({ "result": pooled.probs(), "argmax": pooled.argmax() }))
        .table("distribution", t)
        .note("result is the normalized product p_n q_n / sum_k p_k q_k"))
}

fn run_history(
    steps: &[StepConfig],
    known: &qpool_core::measurement::KnownOutcomes,
    initial: Option<&DensityMatrix>,
) -> Run {
    let h = build_history(steps).map_err(config_bug)?;
    let flat = flatten_history(&h)?;
    let (state, probability) = match initial {
        None => {
            let c = conditional(&flat, known)?;
            (c.state, c.probability)
        }
        Some(rho0) => {
            let c = conditional_state_with_initial(&flat, rho0, known)?;
            (c.state, c.probability)
        }
    };
    let mut o = Outcome::new(json!({
        "outcome_counts": { "alice": flat.i_max(), "bob": flat.j_max(), "eve": flat.e_max() },
        "completeness_residual": flat.completeness_residual(),
        "known": known,
        "probability": probability,
        "purity": state.purity(),
        "state": to_value(&state),
    }))
    .table("state", Table::matrix(state.matrix()))
    .note("outcomes are packed mixed-radix with the earliest step most significant");
    if initial.is_some() {
        o = o.note("initial state supplied in the config instead of the maximally mixed state");
    }
    Ok(o)
}

fn run_consistency(rho_a: &DensityMatrix, rho_b: &DensityMatrix, tolerance: f64) -> Run {
    let (consistent, inter) = check_consistency(rho_a, rho_b, tolerance)?;
    let basis: Vec<Value> =
        (0..inter.dim()).map(|k| to_value(&vector_literal(&inter.basis_matrix().column(k)))).collect();
    let (sa, sb) = (support(rho_a, tolerance).dim(), support(rho_b, tolerance).dim());
    let mut t = Table::new(&["quantity", "value"]);
    t.row(vec!["consistent".into(), (consistent as usize).into()]);
    t.row(vec!["intersection_dim".into(), inter.dim().into()]);
    t.row(vec!["support_dim_a".into(), sa.into()]);
    t.row(vec!["support_dim_b".into(), sb.into()]);
    Ok(Outcome::new(json!({
        "consistent": consistent,
        "intersection_dim": inter.dim(),
        "intersection_basis": basis,
        "support_dim_a": sa,
        "support_dim_b": sb,
        "tolerance": tolerance,
    }))
    .table("summary", t))
}

fn run_realize(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    sigma: &DensityMatrix,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> Run {
    let r = realize_with_weights(rho_a, rho_b, sigma, alpha, beta)?;
    let rep = &r.report;
    let mut t = Table::new(&["n", "p_n", "p_n_formula", "p_m", "p_m_formula"]);
    for n in 0..rep.p_n.len() {
        t.row(vec![
            (n + 1).into(),
            rep.p_n[n].into(),
            rep.p_n_formula[n].into(),
            rep.p_m[n].into(),
            rep.p_m_formula[n].into(),
        ]);
    }
    let mut o = Outcome::new(to_value(&r))
        .table("p_n", t)
        .table("charlie_state", Table::matrix(rep.charlie_state.matrix()))
        .note("outcome probabilities are read off the projected tripartite state and compared with the closed form");
    if alpha.is_none() || beta.is_none() {
        o = o.note("unspecified common weights default to half their maximum");
    }
    Ok(o)
}

fn run_ambiguity(rho_a: &DensityMatrix, rho_b: &DensityMatrix, s1: &DensityMatrix, s2: &DensityMatrix) -> Run {
    let rep = demonstrate_ambiguity(rho_a, rho_b, s1, s2)?;
    let mut t = Table::new(&["quantity", "value"]);
    t.row(vec!["trace_distance".into(), rep.trace_distance.into()]);
    t.row(vec!["intersection_dim".into(), rep.intersection_dim.into()]);
    for (k, r) in rep.realizations.iter().enumerate() {
        t.row(vec![format!("verified_{}", k + 1).into(), (r.verified as usize).into()]);
        t.row(vec![format!("charlie_error_{}", k + 1).into(), r.report.charlie_error.into()]);
    }
    Ok(Outcome::new(to_value(&rep))
        .table("summary", t)
        .note("both constructions reproduce the same two observer states and different third-observer states"))
}

fn run_fuse(rho_a: &DensityMatrix, rho_b: &DensityMatrix, cfg: &HistoryMeasureConfig) -> Run {
    let f = averaged_fusion(rho_a, rho_b, cfg)?;
    Ok(Outcome::new(to_value(&f))
        .table("state", Table::matrix(f.state.matrix()))
        .note("EXPLORATORY: the measure over histories is a modelling choice with no canonical form"))
}

fn observer(q: &PolynomialDensity, pop: BigRational, state: DensityMatrix, mc: Option<&DensityMatrix>) -> Value {
    let mut v = json!({
        "posterior": q.to_string(),
        "rho_11": pop.to_string(),
        "rho_11_value": to_f64(&pop),
        "state": to_value(&state),
    });
    if let Some(m) = mc {
        v["rho_11_monte_carlo"] = json!(m.matrix().get(0, 0).re);
        v["monte_carlo_state"] = to_value(m);
    }
    v
}

fn run_estimate(alice: &[Param], bob: &[Param], mc: Option<(usize, u64)>) -> Run {
    let ea = diagonal_effects("alice", alice).map_err(config_bug)?;
    let eb = diagonal_effects("bob", bob).map_err(config_bug)?;
    let (qa, qb) = (qubit_diagonal_posterior(&ea), qubit_diagonal_posterior(&eb));
    let (pa, pb, pc) = (polynomial_population(&qa)?, polynomial_population(&qb)?, pooled_population(&qa, &qb)?);
    let (sa, sb, sc) = (polynomial_predictive(&qa)?, polynomial_predictive(&qb)?, pooled_predictive(&qa, &qb)?);
    let mc_states = match mc {
        None => None,
        Some((n, seed)) => {
            let flat = WeightedStateEnsemble::flat(2, n, seed)?;
            let update = |ens: &WeightedStateEnsemble, es: &[DiagonalEffect]| -> Result<WeightedStateEnsemble, Error> {
                es.iter().try_fold(ens.clone(), |acc, e| posterior_update(&acc, &e.effect()))
            };
            let a = update(&flat, &ea)?;
            let c = update(&a, &eb)?;
            let b = update(&flat, &eb)?;
            Some([predictive_state(&a)?, predictive_state(&b)?, predictive_state(&c)?])
        }
    };
    let m = |k: usize| mc_states.as_ref().map(|s| &s[k]);
    let mut t = Table::new(&["observer", "rho_11", "rho_11_value", "rho_11_monte_carlo"]);
    for (k, (name, pop)) in [("alice", &pa), ("bob", &pb), ("pooled", &pc)].into_iter().enumerate() {
        let mcv = m(k).map_or(Cell::Text(String::new()), |s| s.matrix().get(0, 0).re.into());
        t.row(vec![name.into(), pop.to_string().into(), to_f64(pop).into(), mcv]);
    }
    let mut outputs = json!({
        "alice": observer(&qa, pa.clone(), sa, m(0)),
        "bob": observer(&qb, pb.clone(), sb, m(1)),
        "pooled": observer(&qa.mul(&qb), pc.clone(), sc, m(2)),
    });
    let mut o = Outcome::new(Value::Null)
        .note("exact values integrate the posterior polynomial over the qubit population with rational arithmetic");
    if let (Some(s), Some((n, seed))) = (&mc_states, mc) {
        let exact = [to_f64(&pa), to_f64(&pb), to_f64(&pc)];
        let dev = exact.iter().zip(s.iter()).map(|(x, st)| (x - st.matrix().get(0, 0).re).abs()).fold(0.0, f64::max);
        outputs["monte_carlo"] = json!({ "n_samples": n, "seed": seed, "max_abs_deviation": dev });
        o = o.note("monte_carlo entries reweight invariant pure-state samples and carry sampling error");
    }
    o.outputs = outputs;
    Ok(o.table("predictive", t))
}

fn run_reproduce() -> Run {
    let audit = reproduce_paper_example();
    let mut t = Table::new(&["quantity", "parameters", "printed", "printed_value", "computed", "computed_value", "status"]);
    for e in &audit.entries {
        t.row(vec![
            e.quantity.as_str().into(),
            e.parameters.as_str().into(),
            e.printed.clone().unwrap_or_default().into(),
            e.printed_value.map_or(Cell::Text(String::new()), Cell::Num),
            e.computed.as_str().into(),
            e.computed_value.into(),
            e.status.to_string().into(),
        ]);
    }
    let mut o = Outcome::new(to_value(&audit))
        .table("audit", t)
        .note("printed values are copied from the published two-strategy example")
        .note("computed values come from exact rational integration over the qubit population")
        .note(format!("{} discrepancy entries", audit.discrepancies().count()));
    o.sections.push(audit.to_table());
    Ok(o)
}
