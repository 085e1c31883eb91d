use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use weightsteg::analyze::{byte_entropy, entropy_delta_report};
use weightsteg::container::ModelContainer;
use weightsteg::defend::{detect_overlap, sanitize, SanitizeMode, DEFAULT_QGRAM};
use weightsteg::embed::{
    build_plan, capacity, default_tensor_order, embed_payload, Manifest, Payload,
};
use weightsteg::error::Error;
use weightsteg::evaluate::{parse_cells_csv, penalty_for_method, quality_table, EvalParams};
use weightsteg::extract::extract_payload;
use weightsteg::floatcodec::EmbedMethod;
use weightsteg::mininet::data::{gen_dataset, Dataset, DatasetSpec, Split};
use weightsteg::mininet::{
    evaluate_container, freeze_retrain, neuron_plan, sweep, train, TrainConfig,
};
use weightsteg::trigger::{binarize, parse_vector_line, MatchCounter, TriggerSpec};

use crate::{EXIT_CAPACITY, EXIT_PARSE, EXIT_SHA_MISMATCH};

// ── errors ──────────────────────────────────────────────────────────────────

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: PathBuf, source: std::io::Error },
    ShaMismatch { expected: String, got: String },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::ShaMismatch { expected, got } => {
                write!(f, "payload digest mismatch: manifest {expected}, extracted {got}")
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::CapacityExceeded { .. }) => EXIT_CAPACITY,
            CliError::Core(Error::Divergence { .. }) => 1,
            CliError::Core(_) => EXIT_PARSE,
            CliError::Io { .. } => 1,
            CliError::ShaMismatch { .. } => EXIT_SHA_MISMATCH,
        }
    }
}

type CliResult = Result<(), CliError>;

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_model(path: &Path) -> Result<ModelContainer, CliError> {
    Ok(ModelContainer::parse(&read_file(path)?)?)
}

// ── shared flags ────────────────────────────────────────────────────────────

#[derive(Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Lsb,
    Msb,
    Fast,
    Half,
}

impl From<MethodArg> for EmbedMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Lsb => EmbedMethod::Lsb,
            MethodArg::Msb => EmbedMethod::MsbReservation,
            MethodArg::Fast => EmbedMethod::Fast,
            MethodArg::Half => EmbedMethod::Half,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Dataset flags shared by the training-related subcommands. Either a pair
/// of CSV files or the seeded synthetic generator.
#[derive(Args)]
pub struct DatasetArgs {
    /// Seed for the synthetic dataset
    #[arg(long, default_value_t = 1)]
    pub data_seed: u64,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n_train: usize,
    #[arg(long, default_value_t = 2_000)]
    pub n_test: usize,
    /// Train-split CSV (features then integer label per row); overrides the
    /// generator together with --test-csv
    #[arg(long, requires = "test_csv")]
    pub train_csv: Option<PathBuf>,
    #[arg(long, requires = "train_csv")]
    pub test_csv: Option<PathBuf>,
}

impl DatasetArgs {
    fn load(&self) -> Result<Dataset, CliError> {
        if let (Some(train), Some(test)) = (&self.train_csv, &self.test_csv) {
            let train = Split::from_csv(&read_text(train)?)?;
            let test = Split::from_csv(&read_text(test)?)?;
            Ok(Dataset::from_splits(train, test)?)
        } else {
            Ok(gen_dataset(&DatasetSpec {
                seed: self.data_seed,
                classes: self.classes,
                dim: self.dim,
                n_train: self.n_train,
                n_test: self.n_test,
            })?)
        }
    }
}

fn comma_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

// ── capacity ────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct CapacityArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Comma-separated tensor names; defaults to every tensor, closest to
    /// the output first
    #[arg(long)]
    tensors: Option<String>,
}

pub fn run_capacity(args: CapacityArgs) -> CliResult {
    let model = load_model(&args.model)?;
    let method: EmbedMethod = args.method.into();
    let tensors = match &args.tensors {
        Some(list) => comma_list(list),
        None => default_tensor_order(&model),
    };
    let bytes = capacity(&model, method, &tensors)?;
    println!(
        "{bytes} bytes ({:.2} KB) across {} tensors with {method}",
        bytes as f64 / 1024.0,
        tensors.len()
    );
    Ok(())
}

// ── embed ───────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct EmbedArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    payload: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Comma-separated fill order; defaults to every tensor, closest to the
    /// output first
    #[arg(long)]
    tensors: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
}

pub fn run_embed(args: EmbedArgs) -> CliResult {
    let model = load_model(&args.model)?;
    let payload = Payload::new(read_file(&args.payload)?)?;
    let method: EmbedMethod = args.method.into();
    let tensors = match &args.tensors {
        Some(list) => comma_list(list),
        None => default_tensor_order(&model),
    };
    let available = capacity(&model, method, &tensors)?;
    if payload.len() > available {
        eprintln!(
            "available {available} bytes vs required {} bytes",
            payload.len()
        );
    }
    let plan = build_plan(&model, method, payload.len(), &tensors)?;
    let (embedded, manifest) = embed_payload(&model, &payload, &plan)?;
    write_file(&args.out, &embedded.to_bytes())?;
    write_file(&args.manifest, manifest.to_json().as_bytes())?;
    println!(
        "embedded {} bytes with {method} across {} segments (sha256 {})",
        payload.len(),
        manifest.segments.len(),
        manifest.payload_sha256
    );
    Ok(())
}

// ── extract ─────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct ExtractArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

pub fn run_extract(args: ExtractArgs) -> CliResult {
    let model = load_model(&args.model)?;
    let manifest = Manifest::from_json(&read_text(&args.manifest)?)?;
    let extraction = extract_payload(&model, &manifest)?;
    write_file(&args.out, &extraction.bytes)?;
    if extraction.sha_matches() {
        println!(
            "recovered {} bytes, sha256 verified ({})",
            extraction.bytes.len(),
            extraction.sha256_hex
        );
        Ok(())
    } else {
        Err(CliError::ShaMismatch {
            expected: extraction.expected_sha256_hex,
            got: extraction.sha256_hex,
        })
    }
}

// ── entropy ─────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct EntropyArgs {
    /// Files to measure; labels default to file names
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Label of the baseline entry; enables normalized and scaled columns
    #[arg(long)]
    baseline: Option<String>,
    /// Gain of the logistic scaling curve
    #[arg(long, default_value_t = 1.0)]
    gain: f64,
    /// Also report entropy per tensor data range
    #[arg(long)]
    per_tensor: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

pub fn run_entropy(args: EntropyArgs) -> CliResult {
    let mut entries: Vec<(String, f64)> = Vec::new();
    for path in &args.files {
        let bytes = read_file(path)?;
        let label = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        entries.push((label.clone(), byte_entropy(&bytes)?));
        if args.per_tensor {
            let model = ModelContainer::parse(&bytes)?;
            for meta in model.tensors() {
                let h = byte_entropy(&model.data()[meta.begin..meta.end])?;
                entries.push((format!("{label}:{}", meta.name), h));
            }
        }
    }
    match &args.baseline {
        Some(baseline) => {
            let report = entropy_delta_report(&entries, baseline, args.gain)?;
            match args.format {
                Format::Csv => {
                    println!("label,raw_entropy,normalized,scaled");
                    for row in &report {
                        println!(
                            "{},{:.6},{:.6},{:.6}",
                            row.label, row.raw_entropy, row.normalized, row.scaled
                        );
                    }
                    println!("# logistic gain {}", args.gain);
                }
                Format::Json => {
                    let rows: Vec<serde_json::Value> = report
                        .iter()
                        .map(|r| {
                            serde_json::json!({
                                "label": r.label,
                                "raw_entropy": r.raw_entropy,
                                "normalized": r.normalized,
                                "scaled": r.scaled,
                            })
                        })
                        .collect();
                    println!(
                        "{}",
                        serde_json::json!({"gain": args.gain, "rows": rows})
                    );
                }
            }
        }
        None => match args.format {
            Format::Csv => {
                println!("label,raw_entropy");
                for (label, h) in &entries {
                    println!("{label},{h:.6}");
                }
            }
            Format::Json => {
                let rows: Vec<serde_json::Value> = entries
                    .iter()
                    .map(|(l, h)| serde_json::json!({"label": l, "raw_entropy": h}))
                    .collect();
                println!("{}", serde_json::Value::Array(rows));
            }
        },
    }
    Ok(())
}

// ── detect ──────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct DetectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    payload: PathBuf,
    #[arg(long, value_enum, default_value = "half")]
    method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_QGRAM)]
    q: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

pub fn run_detect(args: DetectArgs) -> CliResult {
    let model = load_model(&args.model)?;
    let payload = Payload::new(read_file(&args.payload)?)?;
    let report = detect_overlap(&model, &payload, args.method.into(), args.q)?;
    let argmax = report.argmax().map(|t| t.tensor.clone()).unwrap_or_default();
    match args.format {
        Format::Csv => {
            println!("tensor,candidate_stream_len,matched_qgrams,total_qgrams,overlap_rate");
            for t in &report.per_tensor {
                println!(
                    "{},{},{},{},{:.6}",
                    t.tensor, t.candidate_stream_len, t.matched_qgrams, t.total_qgrams, t.overlap_rate
                );
            }
            println!("# highest overlap: {argmax}");
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = report
                .per_tensor
                .iter()
                .map(|t| {
                    serde_json::json!({
                        "tensor": t.tensor,
                        "candidate_stream_len": t.candidate_stream_len,
                        "matched_qgrams": t.matched_qgrams,
                        "total_qgrams": t.total_qgrams,
                        "overlap_rate": t.overlap_rate,
                    })
                })
                .collect();
            println!(
                "{}",
                serde_json::json!({"q": report.q, "argmax": argmax, "tensors": rows})
            );
        }
    }
    Ok(())
}

// ── sanitize ────────────────────────────────────────────────────────────────

#[derive(Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Randomize,
    Truncate,
}

#[derive(Args)]
pub struct SanitizeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated tensors; defaults to all
    #[arg(long)]
    tensors: Option<String>,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Seed for randomize mode
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn run_sanitize(args: SanitizeArgs) -> CliResult {
    let model = load_model(&args.model)?;
    let tensors = match &args.tensors {
        Some(list) => comma_list(list),
        None => model.tensor_names().map(String::from).collect(),
    };
    let mode = match args.mode {
        ModeArg::Randomize => SanitizeMode::Randomize,
        ModeArg::Truncate => SanitizeMode::Truncate,
    };
    let cleaned = sanitize(&model, &tensors, mode, args.seed)?;
    write_file(&args.out, &cleaned.to_bytes())?;
    println!("sanitized {} tensors", tensors.len());
    Ok(())
}

// ── evaluate ────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct EvaluateArgs {
    /// CSV with header model,sample,base_acc,acc,payload_len,model_len,embeddable
    #[arg(long)]
    cells: PathBuf,
    /// Method label; sets the effort penalty (substitution 1.0, mapping 1.1,
    /// resilience training 1.2)
    #[arg(long, default_value = "half")]
    method: String,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Override the method-derived penalty
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

pub fn run_evaluate(args: EvaluateArgs) -> CliResult {
    let cells = parse_cells_csv(&read_text(&args.cells)?)?;
    let params = EvalParams {
        alpha: args.alpha,
        epsilon: args.epsilon,
        penalty: args.penalty.unwrap_or_else(|| penalty_for_method(&args.method)),
    };
    let table = quality_table(&cells, &params)?;
    match args.format {
        Format::Csv => {
            println!("model,avg_qm");
            for (model, avg) in &table.per_model {
                println!("{model},{avg:.4}");
            }
            println!("AVG,{:.4}", table.average);
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = table
                .per_model
                .iter()
                .map(|(m, q)| serde_json::json!({"model": m, "avg_qm": q}))
                .collect();
            println!(
                "{}",
                serde_json::json!({"method": args.method, "per_model": rows, "avg_q": table.average})
            );
        }
    }
    Ok(())
}

// ── train ───────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Layer widths, input first
    #[arg(long, default_value = "64,256,256,10", value_delimiter = ',')]
    arch: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Initialization and shuffle seed
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn run_train(args: TrainArgs) -> CliResult {
    let dataset = args.dataset.load()?;
    let cfg = TrainConfig {
        epochs: args.epochs,
        lr: args.lr,
        momentum: args.momentum,
        batch_size: args.batch_size,
    };
    let (net, base) = train(&dataset, &args.arch, &cfg, args.seed)?;
    write_file(&args.out, &net.to_container().to_bytes())?;
    println!("base_accuracy,{base:.4}");
    Ok(())
}

// ── sweep ───────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated layer names (fc0, fc1, ...)
    #[arg(long)]
    layers: String,
    /// Comma-separated neuron counts
    #[arg(long, value_delimiter = ',')]
    ks: Vec<usize>,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Payload bytes to substitute in; generated from --payload-seed if absent
    #[arg(long)]
    payload: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    payload_seed: u64,
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

pub fn run_sweep(args: SweepArgs) -> CliResult {
    let model = load_model(&args.model)?;
    let dataset = args.dataset.load()?;
    let method: EmbedMethod = args.method.into();
    let layers = comma_list(&args.layers);
    let payload_bytes = match &args.payload {
        Some(path) => read_file(path)?,
        None => {
            // enough bytes for the widest grid point of any listed layer
            let mut needed = 0usize;
            for layer in &layers {
                for &k in &args.ks {
                    needed =
                        needed.max(neuron_plan(&model, layer, k, method).map(|p| p.capacity())?);
                }
            }
            Payload::seeded(args.payload_seed, needed.max(1))?.bytes().to_vec()
        }
    };
    let points = sweep(&model, &layers, &args.ks, method, &payload_bytes, &dataset.test)?;
    match args.format {
        Format::Csv => {
            println!("layer,k,method,accuracy");
            for p in &points {
                println!("{},{},{},{:.4}", p.layer, p.neurons_replaced, p.method, p.accuracy);
            }
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = points
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "layer": p.layer,
                        "k": p.neurons_replaced,
                        "method": p.method.name(),
                        "accuracy": p.accuracy,
                    })
                })
                .collect();
            println!("{}", serde_json::Value::Array(rows));
        }
    }
    Ok(())
}

// ── retrain ─────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct RetrainArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated layers to freeze (may be empty for none)
    #[arg(long, default_value = "")]
    freeze: String,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Shuffle seed
    #[arg(long, default_value_t = 99)]
    seed: u64,
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long)]
    out: PathBuf,
}

pub fn run_retrain(args: RetrainArgs) -> CliResult {
    let model = load_model(&args.model)?;
    let dataset = args.dataset.load()?;
    let cfg = TrainConfig {
        epochs: args.epochs,
        lr: args.lr,
        momentum: args.momentum,
        batch_size: args.batch_size,
    };
    let frozen = comma_list(&args.freeze);
    let (retrained, accuracy) = freeze_retrain(&model, &frozen, &dataset, &cfg, args.seed)?;
    write_file(&args.out, &retrained.to_bytes())?;
    println!("accuracy,{accuracy:.4}");
    Ok(())
}

// ── trigger-sim ─────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct TriggerSimArgs {
    /// CSV of feature vectors, one per line
    #[arg(long)]
    vectors: PathBuf,
    /// Target feature vector as hex
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 5)]
    bound: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

pub fn run_trigger_sim(args: TriggerSimArgs) -> CliResult {
    let spec = TriggerSpec::new(&args.target, args.delta, args.bound)?;
    let text = read_text(&args.vectors)?;
    let mut counter = MatchCounter::default();
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vector = parse_vector_line(line, lineno + 1)?;
        if vector.len() != spec.expected_width() {
            return Err(Error::VectorLengthMismatch {
                expected: spec.expected_width(),
                got: vector.len(),
            }
            .into());
        }
        let matched = binarize(&vector, spec.threshold)? == spec.target_hex;
        let activated = counter.observe(matched, &spec);
        rows.push((rows.len() + 1, matched, counter.count, activated));
    }
    match args.format {
        Format::Csv => {
            println!("observation,match,counter,activated");
            for (i, matched, count, activated) in &rows {
                println!("{i},{matched},{count},{activated}");
            }
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|(i, m, c, a)| {
                    serde_json::json!({"observation": i, "match": m, "counter": c, "activated": a})
                })
                .collect();
            println!("{}", serde_json::Value::Array(rows));
        }
    }
    Ok(())
}

// ── demo ────────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct DemoArgs {
    /// Directory for the artifacts the stages produce
    #[arg(long, default_value = "demo-out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
    #[arg(long, default_value_t = 7)]
    train_seed: u64,
    #[arg(long, default_value_t = 42)]
    payload_seed: u64,
}

pub fn run_demo(args: DemoArgs) -> CliResult {
    fs::create_dir_all(&args.out_dir).map_err(|source| CliError::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    let path = |name: &str| args.out_dir.join(name);

    // stage 1: train a carrier with a 128-wide penultimate layer
    let dataset = gen_dataset(&DatasetSpec {
        seed: args.data_seed,
        classes: 10,
        dim: 64,
        n_train: 4_000,
        n_test: 1_000,
    })?;
    let cfg = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let (net, base) = train(&dataset, &[64, 256, 128, 10], &cfg, args.train_seed)?;
    let clean = net.to_container();
    write_file(&path("clean.st"), &clean.to_bytes())?;
    println!("[1/6] trained carrier: base accuracy {base:.4}");

    // stage 2: heavy embedding, full first hidden layer via fast substitution
    let plan = neuron_plan(&clean, "fc0", 256, EmbedMethod::Fast)?;
    let payload = Payload::seeded(args.payload_seed, plan.capacity())?;
    let (embedded, manifest) = embed_payload(&clean, &payload, &plan)?;
    let damaged_acc = evaluate_container(&embedded, &dataset.test)?;
    write_file(&path("embedded.st"), &embedded.to_bytes())?;
    write_file(&path("manifest.json"), manifest.to_json().as_bytes())?;
    println!(
        "[2/6] embedded {} bytes (fast, full fc0): accuracy {damaged_acc:.4}",
        payload.len()
    );

    // stage 3: sweep the damaged layer to map capacity against impact
    let points = sweep(
        &embedded,
        &["fc0".to_string()],
        &[0, 64, 128, 192, 255],
        EmbedMethod::Fast,
        payload.bytes(),
        &dataset.test,
    )?;
    let mut csv = String::from("layer,k,method,accuracy\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{},{},{:.4}\n",
            p.layer, p.neurons_replaced, p.method, p.accuracy
        ));
    }
    write_file(&path("sweep.csv"), csv.as_bytes())?;
    println!("[3/6] swept fc0 replacement counts -> sweep.csv");

    // stage 4: freeze the payload layer and retrain one epoch
    let (retrained, recovered_acc) = freeze_retrain(
        &embedded,
        &["fc0".to_string()],
        &dataset,
        &TrainConfig {
            epochs: 1,
            ..cfg
        },
        args.train_seed + 1,
    )?;
    write_file(&path("retrained.st"), &retrained.to_bytes())?;
    let extraction = extract_payload(&retrained, &manifest)?;
    println!(
        "[4/6] retrained around frozen fc0: accuracy {recovered_acc:.4}, payload sha {}",
        if extraction.sha_matches() { "intact" } else { "BROKEN" }
    );

    // stage 5: the defender's view — overlap detection, then sanitization
    let report = detect_overlap(&retrained, &payload, EmbedMethod::Fast, DEFAULT_QGRAM)?;
    let argmax = report.argmax().map(|t| t.tensor.clone()).unwrap_or_default();
    let cleaned = sanitize(
        &retrained,
        &retrained.tensor_names().map(String::from).collect::<Vec<_>>(),
        SanitizeMode::Randomize,
        args.payload_seed,
    )?;
    write_file(&path("sanitized.st"), &cleaned.to_bytes())?;
    let broken = extract_payload(&cleaned, &manifest)?;
    let sanitized_acc = evaluate_container(&cleaned, &dataset.test)?;
    println!(
        "[5/6] detection flags {argmax}; sanitize keeps accuracy {sanitized_acc:.4} and {} the payload",
        if broken.sha_matches() { "MISSES" } else { "destroys" }
    );

    // stage 6: trigger on the class-0 centroid signature
    let retrained_net = weightsteg::mininet::MiniNet::from_container(&retrained)?;
    let dim = dataset.dim();
    let mut centroid = vec![0.0f64; dim];
    let mut count = 0usize;
    for i in 0..dataset.train.len() {
        let (x, y) = dataset.train.sample(i);
        if y == 0 {
            count += 1;
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v;
            }
        }
    }
    for c in &mut centroid {
        *c /= count as f64;
    }
    let target = binarize(&retrained_net.penultimate(&centroid)?, 0.0)?;
    let spec = TriggerSpec::new(&target, 0.0, 5)?;
    let mut counter = MatchCounter::default();
    let mut activated_at = None;
    for observation in 1..=20 {
        // the victim-side loop would feed captured samples; the demo feeds
        // the centroid signature itself
        let matched = binarize(&retrained_net.penultimate(&centroid)?, 0.0)? == spec.target_hex;
        if counter.observe(matched, &spec) {
            activated_at = Some(observation);
            break;
        }
    }
    let verified = match activated_at {
        Some(_) => {
            let ex = extract_payload(&retrained, &manifest)?;
            write_file(&path("recovered.bin"), &ex.bytes)?;
            ex.sha_matches()
        }
        None => false,
    };
    println!(
        "[6/6] trigger target {target}; activated at observation {}, extraction {}",
        activated_at.map_or("never".to_string(), |o| o.to_string()),
        if verified { "verified" } else { "not verified" }
    );
    println!("artifacts in {}", args.out_dir.display());
    Ok(())
}
