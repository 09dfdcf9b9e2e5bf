//! Subcommand implementations. Every command resolves its flags (seed
//! included) into a config that is echoed in the JSON output, so a run is
//! reproducible from its own output. Exit codes: 0 success / affirmative,
//! 1 negative result (not injective, not free, inconclusive separation,
//! failed verification), 2 usage or input errors.

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use torsep::dynamics::{period_tower, search_periodic, DynamicsError, SearchStrategy};
use torsep::lifting::{stable_exponent, stable_exponent_on_image, verify_recurrence, LiftError};
use torsep::localring::make_ring;
use torsep::matgroup::freeness_check;
use torsep::wreath::{separate, Certificate, SepLevel, CERTIFICATE_VERSION};
use torsep::{Mat2, MatTuple, RingElem};

use crate::parse::{parse_endo, parse_hnn_word, parse_tuple, tuple_json, NamedEndo, ParseError};

pub const DEFAULT_ENDO: &str = "a->ab, b->ba";
pub const DEFAULT_TUPLE: &str = r#"[[["5","2"],["2","1"]],[["1","2"],["2","5"]]]"#;

#[derive(Parser, Debug)]
#[command(
    name = "torsep",
    version,
    about = "Periodic points of free-group word maps over Z/p^k and separation certificates for mapping tori"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Minimal periods of a matrix tuple under the word map, mod p^1..p^K.
    Periods(PeriodsArgs),
    /// Check the recurrence Phi^(M p^(k-1))(X) = X mod p^k for k = 1..K.
    LiftVerify(LiftVerifyArgs),
    /// Produce a certificate that a mapping-torus element is nontrivial.
    Separate(SeparateArgs),
    /// Canonical t^-m u t^n form of a mapping-torus element.
    NormalForm(NormalFormArgs),
    /// Whether the endomorphism is injective (image rank equals rank).
    Injective(EndoOnlyArgs),
    /// Exponent-sum matrix of the endomorphism.
    Abelianization(EndoOnlyArgs),
    /// Exhaustive check that no short word in the matrices is the identity.
    Freeness(FreenessArgs),
    /// Find periodic tuples of the word map over a finite ring.
    SearchPeriodic(SearchArgs),
    /// Re-verify a separation certificate from its JSON.
    VerifyCert(VerifyCertArgs),
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Endomorphism, e.g. "a->ab, b->ba".
    #[arg(long, default_value = DEFAULT_ENDO)]
    pub endo: String,
    /// Seed echoed into outputs and certificates.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct PeriodsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Integer matrix tuple as JSON.
    #[arg(long, default_value = DEFAULT_TUPLE)]
    pub tuple: String,
    #[arg(long)]
    pub p: u64,
    /// Number of precision levels.
    #[arg(long = "K")]
    pub levels: u32,
    /// Iteration cap per cycle detection.
    #[arg(long, default_value_t = 10_000_000)]
    pub cap: u64,
}

#[derive(Args, Debug)]
pub struct LiftVerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = DEFAULT_TUPLE)]
    pub tuple: String,
    #[arg(long)]
    pub p: u64,
    /// Working precision: levels k = 1..K are checked.
    #[arg(long = "K", default_value_t = 6)]
    pub levels: u32,
    /// Recurrence exponent; computed from the Jacobian when omitted.
    #[arg(long = "M")]
    pub exponent: Option<u64>,
    #[arg(long, default_value_t = 10_000_000)]
    pub cap: u64,
    /// Cap for the Jacobian order search.
    #[arg(long, default_value_t = 10_000)]
    pub order_cap: u64,
}

#[derive(Args, Debug)]
pub struct SeparateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Mapping-torus element, e.g. "t a t^-1 b".
    #[arg(long)]
    pub element: String,
    #[arg(long = "g0", default_value = DEFAULT_TUPLE)]
    pub g0: String,
    #[arg(long, default_value_t = 5)]
    pub p: u64,
    #[arg(long, default_value_t = 1)]
    pub tau: u32,
    #[arg(long, default_value_t = 4)]
    pub max_level: u32,
    #[arg(long, default_value_t = 10_000_000)]
    pub cap: u64,
    /// Write the certificate JSON here as well as to stdout.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct NormalFormArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub element: String,
}

#[derive(Args, Debug)]
pub struct EndoOnlyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct FreenessArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = DEFAULT_TUPLE)]
    pub tuple: String,
    /// Maximum word length to exhaust.
    #[arg(long = "L", default_value_t = 10)]
    pub max_len: usize,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub p: u64,
    /// Precision k of the ring Z/p^k.
    #[arg(long, default_value_t = 1)]
    pub precision: u32,
    #[arg(long, default_value_t = 1)]
    pub tau: u32,
    /// Keep only tuples with all determinants invertible.
    #[arg(long)]
    pub nonsingular: bool,
    /// State-space budget for the exhaustive sweep.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
    /// Integer seed tuples (JSON list of matrix tuples) to advance to their
    /// cycles instead of sweeping the whole state space.
    #[arg(long)]
    pub seeds: Option<String>,
}

#[derive(Args, Debug)]
pub struct VerifyCertArgs {
    /// Path to a certificate JSON file.
    #[arg(long)]
    pub path: std::path::PathBuf,
    #[arg(long, default_value_t = 10_000_000)]
    pub cap: u64,
}

/// A finished command: the JSON to print and the process exit code.
pub struct Outcome {
    pub json: Value,
    pub exit: i32,
}

fn ok(json: Value) -> Result<Outcome, Failure> {
    Ok(Outcome { json, exit: 0 })
}

fn negative(json: Value) -> Result<Outcome, Failure> {
    Ok(Outcome { json, exit: 1 })
}

/// Usage / input errors; printed to stderr with exit code 2.
#[derive(Debug)]
pub struct Failure(pub String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn named_endo(text: &str) -> Result<NamedEndo, ParseError> {
    parse_endo(text)
}

pub fn run(cli: Cli) -> Result<Outcome, Failure> {
    match cli.command {
        Command::Periods(a) => periods(a),
        Command::LiftVerify(a) => lift_verify(a),
        Command::Separate(a) => separate_cmd(a),
        Command::NormalForm(a) => normal_form(a),
        Command::Injective(a) => injective(a),
        Command::Abelianization(a) => abelianization(a),
        Command::Freeness(a) => freeness(a),
        Command::SearchPeriodic(a) => search(a),
        Command::VerifyCert(a) => verify_cert(a),
    }
}

/// Computation outcomes that are negative results, not input errors: the
/// command reports them as data with exit code 1.
fn negative_dynamics(e: &DynamicsError) -> bool {
    matches!(
        e,
        DynamicsError::NotPeriodicModP { .. } | DynamicsError::CapExceeded { .. }
    )
}

fn periods(a: PeriodsArgs) -> Result<Outcome, Failure> {
    let named = named_endo(&a.common.endo)?;
    let tuple = parse_tuple(&a.tuple)?;
    if tuple.rank() != named.endo.rank() {
        return Err(Failure(format!(
            "tuple has {} matrices but the endomorphism has rank {}",
            tuple.rank(),
            named.endo.rank()
        )));
    }
    let config = json!({
        "p": a.p,
        "K": a.levels,
        "endo": named.endo_text(),
        "tuple": tuple_json(&tuple),
        "seed": a.common.seed,
    });
    match period_tower(&named.endo, &tuple, a.p, a.levels, a.cap) {
        Ok(tower) => {
            let mut out = config;
            out["periods"] = json!(tower.periods);
            ok(out)
        }
        Err(e) if negative_dynamics(&e) => {
            let mut out = config;
            out["periodic"] = json!(false);
            out["reason"] = json!(e.to_string());
            negative(out)
        }
        Err(e) => Err(e.into()),
    }
}

fn lift_verify(a: LiftVerifyArgs) -> Result<Outcome, Failure> {
    let named = named_endo(&a.common.endo)?;
    let tuple = parse_tuple(&a.tuple)?;
    let (m, m_source) = match a.exponent {
        Some(m) => (m, "given".to_string()),
        None => match stable_exponent(&named.endo, &tuple, a.p, a.cap, a.order_cap) {
            Ok(se) => (se.m, "jacobian_order".to_string()),
            // Word maps into proper subvarieties have singular full
            // Jacobians; fall back to the order on the eventual image.
            Err(LiftError::SingularJacobian) => {
                let se =
                    stable_exponent_on_image(&named.endo, &tuple, a.p, a.cap, a.order_cap)?;
                (se.m, "image_order".to_string())
            }
            Err(LiftError::Dynamics(e)) if negative_dynamics(&e) => {
                return negative(json!({
                    "p": a.p,
                    "K": a.levels,
                    "periodic": false,
                    "reason": e.to_string(),
                    "endo": named.endo_text(),
                    "tuple": tuple_json(&tuple),
                    "seed": a.common.seed,
                }))
            }
            Err(e) => return Err(e.into()),
        },
    };
    let report = verify_recurrence(&named.endo, &tuple, m, a.p, a.levels)?;
    let per_k: Vec<Value> = report
        .per_k
        .iter()
        .map(|c| json!({"k": c.k, "exponent": c.exponent, "pass": c.pass}))
        .collect();
    let out = json!({
        "p": a.p,
        "M": m,
        "K": a.levels,
        "per_k": per_k,
        "m_source": m_source,
        "endo": named.endo_text(),
        "tuple": tuple_json(&tuple),
        "seed": a.common.seed,
    });
    if report.all_pass() {
        ok(out)
    } else {
        negative(out)
    }
}

fn separate_cmd(a: SeparateArgs) -> Result<Outcome, Failure> {
    let named = named_endo(&a.common.endo)?;
    let element = parse_hnn_word(&a.element, &named)?;
    let g0 = parse_tuple(&a.g0)?;
    let schedule = [SepLevel {
        p: a.p,
        tau: a.tau,
        max_level: a.max_level,
    }];
    let found = separate(&element, &schedule, &g0, a.cap, a.common.seed)?;
    match found {
        Some(cert) => {
            let json = serde_json::to_value(&cert).expect("certificate serializes");
            if let Some(path) = &a.out {
                std::fs::write(path, serde_json::to_string_pretty(&cert).unwrap())?;
            }
            ok(json)
        }
        None => negative(json!({
            "separated": false,
            "element": a.element,
            "endo": named.endo_text(),
            "p": a.p,
            "tau": a.tau,
            "max_level": a.max_level,
            "seed": a.common.seed,
            "note": "schedule exhausted; inconclusive, not a disproof",
        })),
    }
}

fn normal_form(a: NormalFormArgs) -> Result<Outcome, Failure> {
    let named = named_endo(&a.common.endo)?;
    let element = parse_hnn_word(&a.element, &named)?;
    let nf = element.normal_form()?;
    ok(json!({
        "m": nf.m,
        "u": named.word_text(&nf.u),
        "n": nf.n,
        "is_identity": nf.is_identity(),
        "element": named.element_text(&element),
        "endo": named.endo_text(),
        "seed": a.common.seed,
    }))
}

fn injective(a: EndoOnlyArgs) -> Result<Outcome, Failure> {
    let named = named_endo(&a.common.endo)?;
    let rank = named.endo.image_rank();
    let inj = named.endo.is_injective();
    let out = json!({
        "injective": inj,
        "image_rank": rank,
        "rank": named.endo.rank(),
        "endo": named.endo_text(),
        "seed": a.common.seed,
    });
    if inj {
        ok(out)
    } else {
        negative(out)
    }
}

fn abelianization(a: EndoOnlyArgs) -> Result<Outcome, Failure> {
    let named = named_endo(&a.common.endo)?;
    let (matrix, all_zero) = named.endo.abelianization();
    ok(json!({
        "matrix": matrix,
        "all_zero": all_zero,
        "endo": named.endo_text(),
        "seed": a.common.seed,
    }))
}

fn freeness(a: FreenessArgs) -> Result<Outcome, Failure> {
    let named = named_endo(&a.common.endo)?;
    let tuple = parse_tuple(&a.tuple)?;
    let report = freeness_check(&tuple.mats, a.max_len)?;
    let witness = report
        .witness
        .as_ref()
        .map(|w| named.word_text(w))
        .unwrap_or_default();
    let out = json!({
        "free": report.free,
        "L": a.max_len,
        "witness": if report.free { Value::Null } else { Value::String(witness) },
        "tuple": tuple_json(&tuple),
        "seed": a.common.seed,
    });
    if report.free {
        ok(out)
    } else {
        negative(out)
    }
}

fn ring_elem_json(e: &RingElem) -> Value {
    Value::Array(
        e.coeffs()
            .iter()
            .map(|c| Value::String(c.to_string()))
            .collect(),
    )
}

fn modular_matrix_json(m: &Mat2<RingElem>) -> Value {
    json!([
        [ring_elem_json(&m.a), ring_elem_json(&m.b)],
        [ring_elem_json(&m.c), ring_elem_json(&m.d)]
    ])
}

fn modular_tuple_json(t: &MatTuple<RingElem>) -> Value {
    Value::Array(t.mats.iter().map(modular_matrix_json).collect())
}

fn search(a: SearchArgs) -> Result<Outcome, Failure> {
    let named = named_endo(&a.common.endo)?;
    let ring = make_ring(a.p, a.precision, a.tau, None)?;
    let strategy = match &a.seeds {
        None => SearchStrategy::Exhaustive,
        Some(text) => {
            let v: Value = serde_json::from_str(text)
                .map_err(|e| Failure(format!("invalid seeds JSON: {e}")))?;
            let list = v
                .as_array()
                .ok_or_else(|| Failure("seeds must be a list of matrix tuples".into()))?;
            let seeds = list
                .iter()
                .map(|t| Ok(parse_tuple(&t.to_string())?.reduce_to_ring(&ring)))
                .collect::<Result<Vec<_>, Failure>>()?;
            SearchStrategy::FromSeeds(seeds)
        }
    };
    let found = search_periodic(&named.endo, &ring, strategy, a.nonsingular, a.budget)?;
    let points: Vec<Value> = found
        .iter()
        .map(|(t, period)| json!({"tuple": modular_tuple_json(t), "period": period}))
        .collect();
    ok(json!({
        "p": a.p,
        "precision": a.precision,
        "tau": a.tau,
        "nonsingular_only": a.nonsingular,
        "count": points.len(),
        "points": points,
        "endo": named.endo_text(),
        "seed": a.common.seed,
    }))
}

fn verify_cert(a: VerifyCertArgs) -> Result<Outcome, Failure> {
    let text = std::fs::read_to_string(&a.path)?;
    verify_certificate_text(&text, a.cap)
}

/// Shared by the subcommand and tests: parse, check the schema version,
/// and re-run the evaluation the certificate claims.
pub fn verify_certificate_text(text: &str, cap: u64) -> Result<Outcome, Failure> {
    let cert: Certificate =
        serde_json::from_str(text).map_err(|e| Failure(format!("schema mismatch: {e}")))?;
    if cert.version != CERTIFICATE_VERSION {
        return Err(Failure(format!(
            "schema mismatch: version {} is not supported (expected {})",
            cert.version, CERTIFICATE_VERSION
        )));
    }
    let named = named_endo(&cert.endo)?;
    let element = parse_hnn_word(&cert.element, &named)?;
    match cert.check_against(&named.endo, &element, cap) {
        Ok(_) => ok(json!({
            "verified": true,
            "element": cert.element,
            "p": cert.p,
            "tau": cert.tau,
            "level": cert.level,
            "period": cert.period,
        })),
        Err(e) => negative(json!({
            "verified": false,
            "error": format!("verification failed: {e}"),
        })),
    }
}
