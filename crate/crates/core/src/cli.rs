//! File-based command line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dilation::{self, Dilation, DilationReport, R1Violation, VProperty};
use crate::error::Error;
use crate::funcrel::{
    self, CoexistenceWitness, FunctionSearchOutcome, Limits, OutcomeFunction, RelationReport,
};
use crate::linalg::{CMatrix, Tolerance, C64};
use crate::observable::{
    self, BooleanCertificate, BooleanViolation, Classification, DiscreteObservable,
    EffectBooleanness, ValidationIssue, ValidationReport,
};
use crate::subset::Subset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

/// On-disk observable: `effects[k][row][col] = [re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableFile {
    pub dim: usize,
    pub outcomes: Vec<String>,
    pub effects: Vec<Vec<Vec<[f64; 2]>>>,
}

impl ObservableFile {
    pub fn from_observable(obs: &DiscreteObservable) -> Self {
        ObservableFile {
            dim: obs.space_dim(),
            outcomes: obs.outcomes().to_vec(),
            effects: obs.effects().iter().map(matrix_pairs).collect(),
        }
    }

    /// Structural parse; positivity and normalization are checked separately.
    pub fn to_observable(&self) -> crate::Result<DiscreteObservable> {
        if self.dim == 0 {
            return Err(Error::Malformed("dim must be positive".into()));
        }
        let mut effects = Vec::with_capacity(self.effects.len());
        for (k, rows) in self.effects.iter().enumerate() {
            if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{0}x{0} matrix for effect {k}", self.dim),
                    found: format!(
                        "{} rows of lengths {:?}",
                        rows.len(),
                        rows.iter().map(Vec::len).collect::<Vec<_>>()
                    ),
                });
            }
            effects.push(CMatrix::from_fn(self.dim, self.dim, |i, j| {
                let [re, im] = rows[i][j];
                C64::new(re, im)
            }));
        }
        DiscreteObservable::new(self.outcomes.clone(), effects)
    }

    pub fn parse(text: &str) -> crate::Result<DiscreteObservable> {
        let file: ObservableFile =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        file.to_observable()
    }

    pub fn render(obs: &DiscreteObservable) -> String {
        let mut s = serde_json::to_string_pretty(&ObservableFile::from_observable(obs))
            .expect("plain data serializes");
        s.push('\n');
        s
    }
}

fn matrix_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Debug, Parser)]
#[command(
    name = "povm",
    version,
    about = "Analyze finite POVMs: ranges, dilations and functional relations"
)]
struct Cli {
    /// Equality tolerance; the PSD and rank tolerances scale with it.
    #[arg(long, global = true, value_name = "EQ")]
    tolerance: Option<f64>,
    /// Cap on outcomes for 2^n range enumeration.
    #[arg(long, global = true, value_name = "N")]
    max_outcomes: Option<usize>,
    /// Node budget for the function search.
    #[arg(long, global = true, value_name = "NODES")]
    budget: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate and classify an observable.
    Analyze { file: PathBuf },
    /// Build and verify the minimal Naimark dilation.
    Dilate { file: PathBuf },
    /// Relate E to E1: coarse graining, function search, R1 and V-property.
    Relate { file_e: PathBuf, file_e1: PathBuf },
    /// Reproduce a built-in worked example.
    Demo {
        example: DemoExample,
        /// Also write the example's observable files into this directory.
        #[arg(long, value_name = "DIR")]
        write_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DemoExample {
    Remark1,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Malformed(_) | Error::DimensionMismatch { .. } | Error::TooManyOutcomes { .. } => {
            EXIT_USAGE
        }
        Error::NonHermitianInput { .. } | Error::NotPositive { .. } => EXIT_INVALID,
        Error::SearchBudgetExceeded { .. } => EXIT_INCONCLUSIVE,
        _ => EXIT_NUMERIC,
    }
}

struct Settings {
    tol: Tolerance,
    limits: Limits,
    format: Format,
}

/// Runs one command line; `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn settings(cli: &Cli) -> Result<Settings, Failure> {
    let mut limits = Limits::default();
    let tol = match cli.tolerance {
        Some(eq) => Tolerance::from_eq(eq),
        None => Tolerance::default(),
    };
    if !tol.is_valid() {
        return Err(Failure::usage(
            "--tolerance must be a positive finite number",
        ));
    }
    if let Some(n) = cli.max_outcomes {
        if n == 0 || n > crate::subset::MAX_BITS {
            return Err(Failure::usage(format!(
                "--max-outcomes must lie in 1..={}",
                crate::subset::MAX_BITS
            )));
        }
        limits.max_outcomes = n;
    }
    if let Some(b) = cli.budget {
        limits.node_budget = b;
    }
    Ok(Settings {
        tol,
        limits,
        format: cli.format,
    })
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let s = settings(cli)?;
    let (report, code) = match &cli.command {
        Command::Analyze { file } => {
            let obs = load(file, &s)?;
            analyze(&obs, &s)?
        }
        Command::Dilate { file } => {
            let obs = load(file, &s)?;
            dilate(&obs, &s)?
        }
        Command::Relate { file_e, file_e1 } => {
            let e = load(file_e, &s)?;
            let e1 = load(file_e1, &s)?;
            relate(&e, &e1, &s)?
        }
        Command::Demo {
            example: DemoExample::Remark1,
            write_dir,
        } => demo_remark1(write_dir.as_deref(), &s)?,
    };
    out.write_all(report.as_bytes())
        .map_err(|e| Failure::usage(format!("cannot write output: {e}")))?;
    Ok(code)
}

fn load(path: &Path, s: &Settings) -> Result<DiscreteObservable, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let obs = ObservableFile::parse(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let report = observable::validate(&obs, &s.tol);
    if !report.is_valid() {
        let mut message = format!("{} is not a valid POVM:", path.display());
        for issue in &report.issues {
            let _ = write!(message, "\n  {}", issue_text(issue, obs.outcomes()));
        }
        return Err(Failure {
            code: EXIT_INVALID,
            message,
        });
    }
    Ok(obs)
}

fn write_file(dir: &Path, name: &str, obs: &DiscreteObservable) -> Result<(), Failure> {
    let path = dir.join(name);
    std::fs::write(&path, ObservableFile::render(obs))
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn issue_text(issue: &ValidationIssue, names: &[String]) -> String {
    match issue {
        ValidationIssue::NonHermitian { index, defect } => {
            format!(
                "effect {} is not Hermitian (defect {})",
                names[*index],
                sci(*defect)
            )
        }
        ValidationIssue::NotPositive {
            index,
            min_eigenvalue,
        } => format!(
            "effect {} is not positive (min eigenvalue {})",
            names[*index],
            sci(*min_eigenvalue)
        ),
        ValidationIssue::Normalization { defect } => {
            format!(
                "effects do not sum to the identity (defect {})",
                sci(*defect)
            )
        }
        ValidationIssue::Numeric { index, message } => {
            format!("effect {}: {message}", names[*index])
        }
    }
}

fn issue_json(issue: &ValidationIssue) -> Value {
    match issue {
        ValidationIssue::NonHermitian { index, defect } => {
            json!({"kind": "non_hermitian", "index": index, "defect": defect})
        }
        ValidationIssue::NotPositive {
            index,
            min_eigenvalue,
        } => {
            json!({"kind": "not_positive", "index": index, "min_eigenvalue": min_eigenvalue})
        }
        ValidationIssue::Normalization { defect } => {
            json!({"kind": "normalization", "defect": defect})
        }
        ValidationIssue::Numeric { index, message } => {
            json!({"kind": "numeric", "index": index, "message": message})
        }
    }
}

fn validation_json(v: &ValidationReport) -> Value {
    json!({"valid": v.is_valid(), "issues": v.issues.iter().map(issue_json).collect::<Vec<_>>()})
}

fn matrix_json(m: &CMatrix) -> Value {
    json!(matrix_pairs(m))
}

fn labels(subsets: &[Subset], names: &[String]) -> Vec<String> {
    subsets.iter().map(|s| s.label(names)).collect()
}

fn violation_text(v: &BooleanViolation, names: &[String]) -> String {
    let l = |s: &Subset| s.label(names);
    match v {
        BooleanViolation::MissingMeet(a, b) => format!("no meet of E{} and E{}", l(a), l(b)),
        BooleanViolation::MissingJoin(a, b) => format!("no join of E{} and E{}", l(a), l(b)),
        BooleanViolation::MissingComplement(a) => format!("complement of E{} missing", l(a)),
        BooleanViolation::Complement { element, meet } => {
            format!(
                "E{0} meet its complement is E{1}, not O",
                l(element),
                l(meet)
            )
        }
        BooleanViolation::CoComplement { element, join } => {
            format!(
                "E{0} join its complement is E{1}, not I",
                l(element),
                l(join)
            )
        }
        BooleanViolation::Distributivity(a, b, c) => {
            format!("distributivity fails for E{}, E{}, E{}", l(a), l(b), l(c))
        }
    }
}

fn violation_json(v: &BooleanViolation, names: &[String]) -> Value {
    let l = |s: &Subset| s.label(names);
    match v {
        BooleanViolation::MissingMeet(a, b) => {
            json!({"kind": "missing_meet", "subsets": [l(a), l(b)]})
        }
        BooleanViolation::MissingJoin(a, b) => {
            json!({"kind": "missing_join", "subsets": [l(a), l(b)]})
        }
        BooleanViolation::MissingComplement(a) => {
            json!({"kind": "missing_complement", "subsets": [l(a)]})
        }
        BooleanViolation::Complement { element, meet } => {
            json!({"kind": "complement", "subsets": [l(element)], "meet": l(meet)})
        }
        BooleanViolation::CoComplement { element, join } => {
            json!({"kind": "co_complement", "subsets": [l(element)], "join": l(join)})
        }
        BooleanViolation::Distributivity(a, b, c) => {
            json!({"kind": "distributivity", "subsets": [l(a), l(b), l(c)]})
        }
    }
}

fn classification_text(c: &Classification, names: &[String], out: &mut String) {
    let atoms = match &c.range_boolean.certificate {
        BooleanCertificate::Atoms(a) => a.len().to_string(),
        BooleanCertificate::Violation(_) => "none".to_string(),
    };
    let _ = writeln!(
        out,
        "projection-valued: {}; range Boolean: {}; atoms: {}",
        yes(c.projection_valued),
        yes(c.range_boolean.boolean),
        atoms
    );
    let _ = writeln!(out, "range size: {}", c.range_size);
    let _ = match c.regularity.witness {
        None => writeln!(out, "regular: yes"),
        Some(x) => writeln!(
            out,
            "regular: no (E{} comparable with its complement)",
            x.label(names)
        ),
    };
    let _ = match &c.delta_closure.witness {
        None => writeln!(out, "delta-closed (diagnostic): yes"),
        Some([a, b, d]) => writeln!(
            out,
            "delta-closed (diagnostic): no (E{} + E{} + E{} not in range)",
            a.label(names),
            b.label(names),
            d.label(names)
        ),
    };
    let _ = match &c.range_boolean.certificate {
        BooleanCertificate::Atoms(a) => {
            writeln!(out, "range atoms: {}", labels(a, names).join(" "))
        }
        BooleanCertificate::Violation(v) => writeln!(
            out,
            "range Boolean certificate: {}",
            violation_text(v, names)
        ),
    };
    let _ = match &c.effect_witness {
        EffectBooleanness::ProjectionValued => {
            writeln!(out, "effect-algebra witness: none (projection-valued)")
        }
        EffectBooleanness::Witness { subset, product } => writeln!(
            out,
            "effect-algebra witness: W = E{0}E{0}' with |W| = {1}",
            subset.label(names),
            sci(product.frob_norm())
        ),
    };
}

fn classification_json(c: &Classification, names: &[String]) -> Value {
    let certificate = match &c.range_boolean.certificate {
        BooleanCertificate::Atoms(a) => json!({"atoms": labels(a, names)}),
        BooleanCertificate::Violation(v) => json!({"violation": violation_json(v, names)}),
    };
    let effect_witness = match &c.effect_witness {
        EffectBooleanness::ProjectionValued => Value::Null,
        EffectBooleanness::Witness { subset, product } => json!({
            "subset": subset.label(names),
            "norm": product.frob_norm(),
            "product": matrix_json(product),
        }),
    };
    json!({
        "validation": validation_json(&c.validation),
        "projection_valued": c.projection_valued,
        "range_size": c.range_size,
        "regular": c.regularity.regular,
        "regularity_witness": c.regularity.witness.map(|x| x.label(names)),
        "delta_closed": c.delta_closure.closed,
        "delta_closure_witness": c.delta_closure.witness.map(|w| labels(&w, names)),
        "range_boolean": c.range_boolean.boolean,
        "range_boolean_certificate": certificate,
        "effect_witness": effect_witness,
    })
}

fn finish(value: Value) -> String {
    let mut s = serde_json::to_string_pretty(&value).expect("json values serialize");
    s.push('\n');
    s
}

fn analyze(obs: &DiscreteObservable, s: &Settings) -> Result<(String, i32), Failure> {
    let c = observable::classify(obs, &s.tol, s.limits.max_outcomes)?;
    let names = obs.outcomes();
    let report = match s.format {
        Format::Machine => finish(json!({
            "outcomes": names,
            "dim": obs.space_dim(),
            "classification": classification_json(&c, names),
        })),
        Format::Text => {
            let mut t = format!(
                "observable: {} outcomes on C^{}\n",
                obs.len(),
                obs.space_dim()
            );
            classification_text(&c, names, &mut t);
            t
        }
    };
    Ok((report, EXIT_OK))
}

fn dilation_json(d: &Dilation, r: &DilationReport, tol: &Tolerance) -> Value {
    json!({
        "dim_h": d.dim_h(),
        "dim_k": d.dim_k(),
        "blocks": d.blocks().iter().map(|b| json!({
            "outcome": d.outcomes()[b.outcome],
            "offset": b.offset,
            "width": b.width,
        })).collect::<Vec<_>>(),
        "isometry": matrix_json(d.isometry()),
        "isometry_defect": r.isometry_defect,
        "orthogonality_defect": r.orthogonality_defect,
        "completeness_defect": r.completeness_defect,
        "compression_defect": r.compression_defect,
        "expected_dim_k": r.expected_dim_k,
        "spanning_rank": r.spanning_rank,
        "minimal": r.is_minimal(),
        "passes": r.passes(tol),
    })
}

fn dilation_text(d: &Dilation, r: &DilationReport, tol: &Tolerance, out: &mut String) {
    let _ = writeln!(
        out,
        "dilation: dimK = {} (sum of ranks {}); minimal: {}; verified: {}",
        d.dim_k(),
        r.expected_dim_k,
        yes(r.is_minimal()),
        yes(r.passes(tol))
    );
    let _ = writeln!(out, "blocks:");
    for b in d.blocks() {
        let _ = writeln!(
            out,
            "  {}: offset {}, width {}",
            d.outcomes()[b.outcome],
            b.offset,
            b.width
        );
    }
    let _ = writeln!(
        out,
        "defects: isometry {}; orthogonality {}; completeness {}; compression {}",
        sci(r.isometry_defect),
        sci(r.orthogonality_defect),
        sci(r.completeness_defect),
        sci(r.compression_defect)
    );
}

fn dilate(obs: &DiscreteObservable, s: &Settings) -> Result<(String, i32), Failure> {
    let d = dilation::minimal_naimark(obs, &s.tol)?;
    let r = dilation::verify_dilation(&d, obs, &s.tol)?;
    let report = match s.format {
        Format::Machine => finish(json!({
            "outcomes": obs.outcomes(),
            "dilation": dilation_json(&d, &r, &s.tol),
        })),
        Format::Text => {
            let mut t = String::new();
            dilation_text(&d, &r, &s.tol, &mut t);
            t
        }
    };
    let code = if r.passes(&s.tol) {
        EXIT_OK
    } else {
        EXIT_NUMERIC
    };
    Ok((report, code))
}

fn function_text(f: &OutcomeFunction, from: &[String], to: &[String]) -> String {
    if f.is_identity() && from == to {
        return "identity".into();
    }
    let pairs: Vec<String> = f
        .table
        .iter()
        .enumerate()
        .map(|(x, &y)| format!("{}->{}", from[x], to[y]))
        .collect();
    pairs.join(", ")
}

fn function_json(f: &OutcomeFunction, from: &[String], to: &[String]) -> Value {
    json!(f
        .table
        .iter()
        .enumerate()
        .map(|(x, &y)| [&from[x], &to[y]])
        .collect::<Vec<_>>())
}

fn common_names(w: &CoexistenceWitness) -> &[String] {
    w.common.outcomes()
}

fn coexistence_summary(c: &Option<Result<CoexistenceWitness, Error>>) -> Option<String> {
    match c {
        None => None,
        Some(Err(e)) => Some(format!("coexistence undetermined ({e})")),
        Some(Ok(w)) if !w.is_valid() => Some("coexistence witness failed verification".into()),
        Some(Ok(w)) if w.uniform => Some(format!(
            "coexistent via uniform F on {} points",
            w.common.len()
        )),
        Some(Ok(w)) => Some(format!("coexistent via F with {} outcomes", w.common.len())),
    }
}

fn v_text(v: &VProperty, lower_names: &[String], c_labels: &[String]) -> String {
    match &v.witness {
        None => "holds".into(),
        Some(w) => format!(
            "fails: X = {}, Y = {}, C = {}",
            w.lower.label(lower_names),
            w.upper.label(lower_names),
            c_labels[w.target]
        ),
    }
}

fn v_json(v: &VProperty, lower_names: &[String], c_labels: &[String]) -> Value {
    json!({
        "holds": v.holds,
        "witness": v.witness.map(|w| json!({
            "lower": w.lower.label(lower_names),
            "upper": w.upper.label(lower_names),
            "target": c_labels[w.target],
        })),
    })
}

fn r1_violation_text(v: &R1Violation, names: &[String]) -> String {
    match v {
        R1Violation::Complement(a) => format!("complement of {} missing", a.label(names)),
        R1Violation::Union(a, b) => {
            format!("union {} u {} missing", a.label(names), b.label(names))
        }
        R1Violation::Intersection(a, b) => {
            format!(
                "intersection {} n {} missing",
                a.label(names),
                b.label(names)
            )
        }
    }
}

fn r1_violation_json(v: &R1Violation, names: &[String]) -> Value {
    match v {
        R1Violation::Complement(a) => json!({"kind": "complement", "subsets": [a.label(names)]}),
        R1Violation::Union(a, b) => {
            json!({"kind": "union", "subsets": [a.label(names), b.label(names)]})
        }
        R1Violation::Intersection(a, b) => {
            json!({"kind": "intersection", "subsets": [a.label(names), b.label(names)]})
        }
    }
}

/// Labels of the `E₁`-range elements in enumeration order, as used for the
/// direct V-property targets.
fn e1_range_labels(e1: &DiscreteObservable, s: &Settings) -> Result<Vec<String>, Failure> {
    let range = observable::enumerate_range(e1, &s.tol, s.limits.max_outcomes)?;
    Ok(range
        .elements()
        .iter()
        .map(|el| format!("E1{}", el.representative().label(e1.outcomes())))
        .collect())
}

fn relation_text(
    e: &DiscreteObservable,
    e1: &DiscreteObservable,
    r: &RelationReport,
    s: &Settings,
) -> Result<String, Failure> {
    let (n, n1) = (e.outcomes(), e1.outcomes());
    let mut t = String::new();
    let function = match &r.function {
        FunctionSearchOutcome::Found(f) => function_text(f, n, n1),
        FunctionSearchOutcome::NoneExists => "none".into(),
        FunctionSearchOutcome::Inconclusive { budget } => {
            format!("inconclusive after {budget} nodes")
        }
    };
    let mut summary = format!(
        "coarse graining: {}; function: {}",
        yes(r.coarse_graining.holds),
        function
    );
    if let Some(c) = coexistence_summary(&r.coexistence) {
        summary = format!("{summary}; {c}");
    }
    let _ = writeln!(t, "E: {} outcomes on C^{}", e.len(), e.space_dim());
    let _ = writeln!(t, "E1: {} outcomes on C^{}", e1.len(), e1.space_dim());
    let _ = writeln!(t, "{summary}");

    let _ = writeln!(t, "[E]");
    classification_text(&r.e, n, &mut t);
    let _ = writeln!(t, "[E1]");
    classification_text(&r.e1, n1, &mut t);

    let _ = writeln!(t, "[coarse graining]");
    for m in &r.coarse_graining.table {
        let _ = writeln!(t, "  E1{} = E{}", m.source.label(n1), m.target.label(n));
    }
    if let Some(u) = r.coarse_graining.unmatched {
        let _ = writeln!(t, "  E1{} is not in the range of E", u.label(n1));
    }

    let _ = writeln!(t, "[dilation]");
    dilation_text(&r.dilation, &r.dilation_report, &s.tol, &mut t);

    let _ = writeln!(t, "[R1]");
    let _ = writeln!(t, "members: {}", r.r1.len());
    for (x, y) in r.r1.members.iter().zip(&r.r1.targets) {
        let _ = writeln!(t, "  {} -> E1{}", x.label(n), y.label(n1));
    }
    let _ = match &r.r1_boolean.witness {
        None => writeln!(t, "R1 Boolean: yes"),
        Some(v) => writeln!(t, "R1 Boolean: no ({})", r1_violation_text(v, n)),
    };
    let _ = match r.r1_order_violation {
        None => writeln!(t, "R1 order preserved: yes"),
        Some((x, y)) => writeln!(
            t,
            "R1 order preserved: no ({} vs {})",
            x.label(n),
            y.label(n)
        ),
    };
    let r1_labels = labels(&r.r1.members, n);
    let _ = writeln!(
        t,
        "V-property of dilated range on R1: {}",
        v_text(&r.v_property_dilated, n, &r1_labels)
    );
    let e1_labels = e1_range_labels(e1, s)?;
    let _ = writeln!(
        t,
        "V-property of E range on E1 range: {}",
        v_text(&r.v_property_direct, n, &e1_labels)
    );

    if let Some(form) = &r.functional_form {
        let _ = writeln!(t, "[functional form]");
        let _ = writeln!(t, "R1 atoms: {}", labels(&form.r1_atoms, n).join(" "));
        let pairs: Vec<String> = form
            .f_table
            .iter()
            .map(|(a, b)| format!("{a}->{b}"))
            .collect();
        let _ = writeln!(t, "f: {}", pairs.join(", "));
        let _ = writeln!(
            t,
            "E_r equivalent to E: {}; E_r^f equivalent to E1: {}",
            yes(form.er_equivalent),
            yes(form.erf_equivalent)
        );
    }
    if let Some(Ok(w)) = &r.coexistence {
        let names = common_names(w);
        let weights: Vec<String> = w
            .common
            .weights()
            .unwrap_or_default()
            .iter()
            .map(|x| format!("{x}"))
            .collect();
        let _ = writeln!(t, "[coexistence]");
        let _ = writeln!(t, "F: {}", weights.join(" "));
        let _ = writeln!(t, "f: {}", function_text(&w.f, names, n1));
        let _ = writeln!(t, "g: {}", function_text(&w.g, names, n));
        let _ = writeln!(
            t,
            "E1 = F o f^-1: {} (defect {}); E = F o g^-1: {} (defect {})",
            yes(w.f_check.holds),
            sci(w.f_check.max_defect),
            yes(w.g_check.holds),
            sci(w.g_check.max_defect)
        );
    }
    Ok(t)
}

fn relation_json(
    e: &DiscreteObservable,
    e1: &DiscreteObservable,
    r: &RelationReport,
    s: &Settings,
) -> Result<Value, Failure> {
    let (n, n1) = (e.outcomes(), e1.outcomes());
    let function = match &r.function {
        FunctionSearchOutcome::Found(f) => {
            json!({"status": "found", "map": function_json(f, n, n1)})
        }
        FunctionSearchOutcome::NoneExists => json!({"status": "none"}),
        FunctionSearchOutcome::Inconclusive { budget } => {
            json!({"status": "inconclusive", "budget": budget})
        }
    };
    let r1_labels = labels(&r.r1.members, n);
    let e1_labels = e1_range_labels(e1, s)?;
    let functional_form = r.functional_form.as_ref().map(|form| {
        json!({
            "r1_atoms": labels(&form.r1_atoms, n),
            "f": form.f_table,
            "er_equivalent": form.er_equivalent,
            "erf_equivalent": form.erf_equivalent,
        })
    });
    let coexistence = match &r.coexistence {
        None => Value::Null,
        Some(Err(e)) => json!({"error": e.to_string()}),
        Some(Ok(w)) => {
            let names = common_names(w);
            json!({
                "uniform": w.uniform,
                "weights": w.common.weights(),
                "f": function_json(&w.f, names, n1),
                "g": function_json(&w.g, names, n),
                "f_holds": w.f_check.holds,
                "f_defect": w.f_check.max_defect,
                "g_holds": w.g_check.holds,
                "g_defect": w.g_check.max_defect,
            })
        }
    };
    Ok(json!({
        "e": {"outcomes": n, "classification": classification_json(&r.e, n)},
        "e1": {"outcomes": n1, "classification": classification_json(&r.e1, n1)},
        "coarse_graining": {
            "holds": r.coarse_graining.holds,
            "table": r.coarse_graining.table.iter()
                .map(|m| [m.source.label(n1), m.target.label(n)])
                .collect::<Vec<_>>(),
            "unmatched": r.coarse_graining.unmatched.map(|u| u.label(n1)),
        },
        "function": function,
        "dilation": dilation_json(&r.dilation, &r.dilation_report, &s.tol),
        "r1": {
            "members": r.r1.members.iter().zip(&r.r1.targets)
                .map(|(x, y)| [x.label(n), y.label(n1)])
                .collect::<Vec<_>>(),
            "boolean": r.r1_boolean.boolean,
            "violation": r.r1_boolean.witness.map(|v| r1_violation_json(&v, n)),
            "order_violation": r.r1_order_violation.map(|(x, y)| [x.label(n), y.label(n)]),
        },
        "v_property_dilated": v_json(&r.v_property_dilated, n, &r1_labels),
        "v_property_direct": v_json(&r.v_property_direct, n, &e1_labels),
        "functional_form": functional_form,
        "coexistence": coexistence,
    }))
}

fn relation_code(r: &RelationReport) -> i32 {
    match r.function {
        FunctionSearchOutcome::Inconclusive { .. } => EXIT_INCONCLUSIVE,
        _ => EXIT_OK,
    }
}

fn relate(
    e: &DiscreteObservable,
    e1: &DiscreteObservable,
    s: &Settings,
) -> Result<(String, i32), Failure> {
    let r = funcrel::relate(e, e1, &s.tol, &s.limits)?;
    let report = match s.format {
        Format::Machine => finish(relation_json(e, e1, &r, s)?),
        Format::Text => relation_text(e, e1, &r, s)?,
    };
    Ok((report, relation_code(&r)))
}

fn demo_remark1(write_dir: Option<&Path>, s: &Settings) -> Result<(String, i32), Failure> {
    let (e, e1) = funcrel::remark1_pair();
    let common = funcrel::remark1_common();
    if let Some(dir) = write_dir {
        write_file(dir, "remark1_e.json", &e)?;
        write_file(dir, "remark1_e1.json", &e1)?;
        write_file(dir, "remark1_f.json", &common)?;
    }
    let r = funcrel::relate(&e, &e1, &s.tol, &s.limits)?;
    let matches_common = matches!(&r.coexistence, Some(Ok(w)) if w.common == common);
    let report = match s.format {
        Format::Machine => {
            let mut v = relation_json(&e, &e1, &r, s)?;
            v["demo"] = json!({
                "example": "remark1",
                "f_observable": ObservableFile::from_observable(&common),
                "witness_matches_hardcoded_f": matches_common,
            });
            finish(v)
        }
        Format::Text => {
            let mut t = relation_text(&e, &e1, &r, s)?;
            let _ = writeln!(t, "[demo]");
            let _ = writeln!(
                t,
                "witness F equals the hard-coded uniform F: {}",
                yes(matches_common)
            );
            t
        }
    };
    Ok((report, relation_code(&r)))
}
