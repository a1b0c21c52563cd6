use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rhognf::causal::{sweep_rho_curve, Bounds, RhoCurve, DEFAULT_GRID, DEFAULT_MC_SAMPLES};
use rhognf::codec::DequantSpec;
use rhognf::data::{Dataset, Schema, VarKind};
use rhognf::dgp::{
    af_bounds, categorical_af_bounds, BinaryDgpParams, BinaryObsStats, CategoricalDgpParams, DgpSpec, TABLE1,
};
use rhognf::train::{fit, FitReport, TrainConfig};
use serde::Serialize;

use crate::args::{BoundsArgs, Cli, Command, DataArgs, FitArgs, ReportArgs, SimulateArgs, SweepArgs, TrainArgs};
use crate::config::Layers;
use crate::output::{OutDir, Provenance};
use crate::{CliError, CliResult};

const DEFAULT_ROWS: usize = 20_000;

pub fn run(cli: Cli) -> CliResult<()> {
    let name = match &cli.command {
        Command::Simulate(_) => "simulate",
        Command::Fit(_) => "fit",
        Command::Sweep(_) => "sweep",
        Command::Bounds(_) => "bounds",
        Command::Report(_) => "report",
    };
    let layers = Layers::load(cli.config.as_deref(), name)?;
    let out = OutDir::create(layers.out_dir(cli.out_dir)?)?;
    match cli.command {
        Command::Simulate(a) => simulate(&layers, &out, a),
        Command::Fit(a) => fit_cmd(&layers, &out, a),
        Command::Sweep(a) => sweep(&layers, &out, a),
        Command::Bounds(a) => bounds(&layers, &out, a),
        Command::Report(a) => report(&layers, &out, a),
    }
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn bounds_of((lower, upper): (f64, f64)) -> Bounds {
    Bounds { lower, upper }
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimulateConfig {
    command: &'static str,
    dgp_source: String,
    dgp: DgpSpec,
    n: usize,
    seed: u64,
    name: String,
}

#[derive(Serialize)]
struct SimulateSidecar<'a> {
    provenance: Provenance,
    config: &'a SimulateConfig,
    dataset: String,
    rows: usize,
    true_ace: f64,
    /// Bounds from the exact marginal law of the DGP (binary outcomes only).
    af_bounds: Option<Bounds>,
    exact_stats: Vec<BinaryObsStats>,
    /// One binary `a,y` file per outcome dimension (categorical DGPs).
    dimension_files: Vec<String>,
}

/// Resolves the DGP; random families draw their tables from `rng`.
fn resolve_dgp(source: &str, rng: &mut ChaCha8Rng) -> CliResult<DgpSpec> {
    if let Some(row) = source.strip_prefix("table1:") {
        let row: usize = row
            .parse()
            .ok()
            .filter(|r| (1..=TABLE1.len()).contains(r))
            .ok_or_else(|| CliError::Usage(format!("table1 row must be 1-{}, got {row:?}", TABLE1.len())))?;
        return Ok(DgpSpec::Linear(TABLE1[row - 1]));
    }
    match source {
        "binary" => Ok(DgpSpec::Binary(BinaryDgpParams::random(rng))),
        "categorical" => Ok(DgpSpec::Categorical(CategoricalDgpParams::random(rng))),
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read DGP file {path}: {e}")))?;
            let spec = DgpSpec::from_config(&text).map_err(|e| CliError::Usage(format!("DGP file {path}: {e}")))?;
            spec.validate().map_err(|e| CliError::Usage(format!("DGP file {path}: {e}")))?;
            Ok(spec)
        }
    }
}

fn simulate(layers: &Layers, out: &OutDir, args: SimulateArgs) -> CliResult<()> {
    let dgp_source: String = layers.require(args.dgp, "dgp")?;
    let n: usize = layers.require(args.n, "n")?;
    if n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let seed = layers.pick_or(args.seed, "seed", 0)?;
    let name = layers.pick_or(args.name, "name", "data".to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dgp = resolve_dgp(&dgp_source, &mut rng)?;
    let config = SimulateConfig { command: "simulate", dgp_source, dgp, n, seed, name };

    let dataset_file = format!("{}.csv", config.name);
    let mut dimension_files = Vec::new();
    let (pairs, exact_stats, exact_af) = match &config.dgp {
        DgpSpec::Linear(p) => (p.sample(n, &mut rng)?, Vec::new(), None),
        DgpSpec::Binary(p) => {
            let stats = p.exact_stats();
            (p.sample(n, &mut rng), vec![stats], Some(af_bounds(&stats)))
        }
        DgpSpec::Categorical(p) => {
            let rows = p.sample_dimensions(n, &mut rng);
            for d in 0..p.dims.len() {
                let file = format!("{}.dim{d}.csv", config.name);
                let dim = Dataset::new(rows.iter().map(|(a, ys)| (*a as f64, ys[d] as f64)).collect());
                dim.save(&out.path(&file))?;
                dimension_files.push(file);
            }
            let stats = p.exact_stats();
            let af = categorical_af_bounds(&stats)?;
            let pairs = rows.iter().map(|(a, ys)| (*a as f64, ys.iter().sum::<usize>() as f64)).collect();
            (pairs, stats, Some(af))
        }
    };
    let path = out.path(&dataset_file);
    Dataset::new(pairs).save(&path)?;
    announce(&path);

    let sidecar = SimulateSidecar {
        provenance: Provenance::of(&config, Some(seed))?,
        config: &config,
        dataset: dataset_file,
        rows: n,
        true_ace: config.dgp.true_ace(),
        af_bounds: exact_af.map(bounds_of),
        exact_stats,
        dimension_files,
    };
    announce(&out.write_json(&format!("{}.json", config.name), &sidecar)?);
    Ok(())
}

// ---------------------------------------------------------------- fit and sweep

#[derive(Debug, Clone, Serialize)]
struct DataConfig {
    data: PathBuf,
    schema: Schema,
}

fn resolve_kind(layers: &Layers, flag: Option<String>, key: &str) -> CliResult<VarKind> {
    layers
        .pick(flag, key)?
        .map_or(Ok(VarKind::Continuous), |s: String| s.parse().map_err(|e: rhognf::Error| CliError::Usage(e.to_string())))
}

fn resolve_data(layers: &Layers, args: DataArgs) -> CliResult<DataConfig> {
    let data = layers
        .pick_path(args.data, "data")?
        .ok_or_else(|| CliError::Usage("missing required setting `--data`".into()))?;
    let schema = Schema { a: resolve_kind(layers, args.a_kind, "a_kind")?, y: resolve_kind(layers, args.y_kind, "y_kind")? };
    Ok(DataConfig { data, schema })
}

fn resolve_train(layers: &Layers, args: TrainArgs) -> CliResult<TrainConfig> {
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        rho: d.rho,
        seed: layers.pick_or(args.seed, "seed", d.seed)?,
        max_epochs: layers.pick_or(args.max_epochs, "max_epochs", d.max_epochs)?,
        patience: layers.pick_or(args.patience, "patience", d.patience)?,
        batch_size: layers.pick_or(args.batch_size, "batch_size", d.batch_size)?,
        learning_rate: layers.pick_or(args.learning_rate, "learning_rate", d.learning_rate)?,
        bins: layers.pick_or(args.bins, "bins", d.bins)?,
        hidden: layers.pick_or(args.hidden, "hidden", d.hidden)?,
        split: layers.pick_or(None, "split", d.split)?,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

#[derive(Serialize)]
struct FitConfig {
    command: &'static str,
    #[serde(flatten)]
    data: DataConfig,
    train: TrainConfig,
    name: String,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    provenance: Provenance,
    config: &'a FitConfig,
    params_file: String,
    treatment_codec: Option<DequantSpec>,
    outcome_codec: Option<DequantSpec>,
    report: &'a FitReport,
}

fn fit_cmd(layers: &Layers, out: &OutDir, args: FitArgs) -> CliResult<()> {
    let data = resolve_data(layers, args.data)?;
    let rho: f64 = layers.require(args.rho, "rho")?;
    let train = resolve_train(layers, args.train)?.with_rho(rho).map_err(|e| CliError::Usage(e.to_string()))?;
    train.rho.non_degenerate().map_err(|e| CliError::Usage(e.to_string()))?;
    let name = layers.pick_or(args.name, "name", "fit".to_string())?;
    let config = FitConfig { command: "fit", data, train, name };

    let ms = Dataset::load(&config.data.data)?.to_model_space(&config.data.schema, config.train.seed)?;
    let report = fit(&ms.pairs, &config.train)?;
    let params_file = format!("{}.params.json", config.name);
    let params_path = out.path(&params_file);
    report.final_params.save(&params_path)?;
    announce(&params_path);
    let output = FitOutput {
        provenance: Provenance::of(&config, Some(config.train.seed))?,
        config: &config,
        params_file,
        treatment_codec: ms.treatment,
        outcome_codec: ms.outcome,
        report: &report,
    };
    announce(&out.write_json(&format!("{}.json", config.name), &output)?);
    Ok(())
}

fn check_grid(grid: &[f64]) -> CliResult<()> {
    if grid.is_empty() || grid.iter().any(|r| r.is_nan() || r.abs() >= 1.0) {
        return Err(CliError::Usage("grid values must lie in (-1, 1)".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("grid must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepConfig {
    command: &'static str,
    #[serde(flatten)]
    data: Option<DataConfig>,
    train: TrainConfig,
    grid: Vec<f64>,
    n_samples: usize,
    binary_batch: Option<usize>,
    n: Option<usize>,
    name: String,
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    provenance: Provenance,
    config: &'a SweepConfig,
    curve: &'a RhoCurve,
}

#[derive(Serialize)]
struct BatchRun {
    seed: u64,
    dgp: BinaryDgpParams,
    true_ace: f64,
    af_bounds: Bounds,
    bounds: Bounds,
    width: f64,
    contains_truth: bool,
    within_af: bool,
    rho_value_closed: f64,
    rho_value_intercept: Option<f64>,
}

#[derive(Serialize)]
struct BatchSummary<'a> {
    provenance: Provenance,
    config: &'a SweepConfig,
    runs: Vec<BatchRun>,
    contained: usize,
    within_af: usize,
    mean_width: f64,
    mean_af_width: f64,
}

fn sweep(layers: &Layers, out: &OutDir, args: SweepArgs) -> CliResult<()> {
    let batch: Option<usize> = layers.pick(args.binary_batch, "binary_batch")?;
    let data = match batch {
        Some(_) => None,
        None => Some(resolve_data(layers, args.data)?),
    };
    let grid = layers.pick_or(args.grid, "grid", DEFAULT_GRID.to_vec())?;
    check_grid(&grid)?;
    let n_samples = layers.pick_or(args.n_samples, "n_samples", DEFAULT_MC_SAMPLES)?;
    if n_samples == 0 {
        return Err(CliError::Usage("--n-samples must be positive".into()));
    }
    let n = match batch {
        Some(_) => Some(layers.pick_or(args.n, "n", DEFAULT_ROWS)?),
        None => None,
    };
    let config = SweepConfig {
        command: "sweep",
        data,
        train: resolve_train(layers, args.train)?,
        grid,
        n_samples,
        binary_batch: batch,
        n,
        name: layers.pick_or(args.name, "name", "sweep".to_string())?,
    };
    match (&config.data, batch) {
        (Some(data), _) => single_sweep(out, &config, data),
        (None, Some(count)) => batch_sweep(out, &config, count),
        (None, None) => unreachable!("data is resolved when not in batch mode"),
    }
}

fn single_sweep(out: &OutDir, config: &SweepConfig, data: &DataConfig) -> CliResult<()> {
    let ms = Dataset::load(&data.data)?.to_model_space(&data.schema, config.train.seed)?;
    let curve = sweep_rho_curve(&ms, &config.grid, &config.train, config.n_samples)?;
    announce(&out.write_text(&format!("{}.csv", config.name), &curve.to_csv())?);
    let output = SweepOutput { provenance: Provenance::of(config, Some(config.train.seed))?, config, curve: &curve };
    announce(&out.write_json(&format!("{}.json", config.name), &output)?);
    Ok(())
}

/// Random binary DGP `seed`: tables then rows from one stream, dequantized
/// and fitted with the same seed.
fn batch_sweep(out: &OutDir, config: &SweepConfig, count: usize) -> CliResult<()> {
    if count == 0 {
        return Err(CliError::Usage("--binary-batch must be positive".into()));
    }
    let n = config.n.unwrap_or(DEFAULT_ROWS);
    let mut runs = Vec::with_capacity(count);
    let mut table = String::from("dgp_seed,rho,ace,ey1,ey0\n");
    for i in 0..count as u64 {
        let seed = config.train.seed.wrapping_add(i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dgp = BinaryDgpParams::random(&mut rng);
        let raw = dgp.sample(n, &mut rng);
        let stats = BinaryObsStats::from_pairs(&raw)?;
        let ms = Dataset::new(raw).to_model_space(&Schema::BINARY, seed)?;
        let train = TrainConfig { seed, ..config.train.clone() };
        let curve = sweep_rho_curve(&ms, &config.grid, &train, config.n_samples)?;
        for p in &curve.points {
            let _ = writeln!(table, "{seed},{},{},{},{}", p.rho, p.ace, p.ey1, p.ey0);
        }
        let af = bounds_of(af_bounds(&stats));
        let b = curve.bounds;
        let true_ace = dgp.true_ace();
        eprintln!("dgp {seed}: true {true_ace:+.3} bounds [{:+.3}, {:+.3}]", b.lower, b.upper);
        runs.push(BatchRun {
            seed,
            dgp,
            true_ace,
            af_bounds: af,
            bounds: b,
            width: b.width(),
            contains_truth: b.contains(true_ace),
            within_af: af.lower <= b.lower && b.upper <= af.upper,
            rho_value_closed: curve.rho_value_closed,
            rho_value_intercept: curve.rho_value_intercept,
        });
    }
    announce(&out.write_text(&format!("{}.csv", config.name), &table)?);
    let k = runs.len() as f64;
    let summary = BatchSummary {
        provenance: Provenance::of(config, Some(config.train.seed))?,
        config,
        contained: runs.iter().filter(|r| r.contains_truth).count(),
        within_af: runs.iter().filter(|r| r.within_af).count(),
        mean_width: runs.iter().map(|r| r.width).sum::<f64>() / k,
        mean_af_width: runs.iter().map(|r| r.af_bounds.width()).sum::<f64>() / k,
        runs,
    };
    announce(&out.write_json(&format!("{}.json", config.name), &summary)?);
    Ok(())
}

// ---------------------------------------------------------------- bounds

#[derive(Serialize)]
struct BoundsConfig {
    command: &'static str,
    data: Vec<PathBuf>,
    name: String,
}

#[derive(Serialize)]
struct DimensionBounds {
    data: PathBuf,
    stats: BinaryObsStats,
    af_bounds: Bounds,
}

#[derive(Serialize)]
struct BoundsOutput<'a> {
    provenance: Provenance,
    config: &'a BoundsConfig,
    dimensions: Vec<DimensionBounds>,
    /// Sum over dimensions; equals the single bound for one file.
    total: Bounds,
}

fn bounds(layers: &Layers, out: &OutDir, args: BoundsArgs) -> CliResult<()> {
    let data = if args.data.is_empty() { layers.pick(None, "data")?.unwrap_or_default() } else { args.data };
    if data.is_empty() {
        return Err(CliError::Usage("no dataset given".into()));
    }
    let config = BoundsConfig { command: "bounds", data, name: layers.pick_or(args.name, "name", "bounds".to_string())? };
    let mut dims = Vec::new();
    let mut all_stats = Vec::new();
    let mut rows = None;
    for path in &config.data {
        let ds = Dataset::load(path)?;
        ds.check_schema(&Schema::BINARY)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if *rows.get_or_insert(ds.len()) != ds.len() {
            return Err(CliError::Data("outcome dimension files differ in row count".into()));
        }
        let stats = BinaryObsStats::from_pairs(&ds.pairs)?;
        all_stats.push(stats);
        dims.push(DimensionBounds { data: path.clone(), stats, af_bounds: bounds_of(af_bounds(&stats)) });
    }
    let output = BoundsOutput {
        provenance: Provenance::of(&config, None)?,
        config: &config,
        dimensions: dims,
        total: bounds_of(categorical_af_bounds(&all_stats)?),
    };
    announce(&out.write_json(&format!("{}.json", config.name), &output)?);
    Ok(())
}

// ---------------------------------------------------------------- report

#[derive(Serialize)]
struct ReportConfig {
    command: &'static str,
    inputs: Vec<PathBuf>,
    name: String,
}

#[derive(Serialize)]
struct ReportSource {
    curve: String,
    path: PathBuf,
    provenance: serde_json::Value,
    rho_value_closed: serde_json::Value,
    rho_value_intercept: serde_json::Value,
    bounds: serde_json::Value,
}

#[derive(Serialize)]
struct ReportOutput<'a> {
    provenance: Provenance,
    config: &'a ReportConfig,
    table: String,
    sources: Vec<ReportSource>,
}

fn report(layers: &Layers, out: &OutDir, args: ReportArgs) -> CliResult<()> {
    let inputs = if args.inputs.is_empty() { layers.pick(None, "inputs")?.unwrap_or_default() } else { args.inputs };
    if inputs.is_empty() {
        return Err(CliError::Usage("no sweep outputs given".into()));
    }
    let config = ReportConfig { command: "report", inputs, name: layers.pick_or(args.name, "name", "report".to_string())? };
    let mut table = String::from("curve,rho,ace,ey1,ey0\n");
    let mut sources = Vec::new();
    for path in &config.inputs {
        let bad = |m: &str| CliError::Data(format!("{}: {m}", path.display()));
        let text = std::fs::read_to_string(path).map_err(|e| bad(&e.to_string()))?;
        let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&e.to_string()))?;
        let curve = doc.get("curve").ok_or_else(|| bad("not a sweep output (no `curve`)"))?;
        let points = curve.get("points").and_then(|p| p.as_array()).ok_or_else(|| bad("curve has no points"))?;
        let label = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        for p in points {
            let field = |k: &str| p.get(k).and_then(|v| v.as_f64()).ok_or_else(|| bad(&format!("point without `{k}`")));
            let _ = writeln!(table, "{label},{},{},{},{}", field("rho")?, field("ace")?, field("ey1")?, field("ey0")?);
        }
        sources.push(ReportSource {
            curve: label,
            path: path.clone(),
            provenance: doc.get("provenance").cloned().unwrap_or_default(),
            rho_value_closed: curve.get("rho_value_closed").cloned().unwrap_or_default(),
            rho_value_intercept: curve.get("rho_value_intercept").cloned().unwrap_or_default(),
            bounds: curve.get("bounds").cloned().unwrap_or_default(),
        });
    }
    let table_file = format!("{}.csv", config.name);
    announce(&out.write_text(&table_file, &table)?);
    let output = ReportOutput { provenance: Provenance::of(&config, None)?, config: &config, table: table_file, sources };
    announce(&out.write_json(&format!("{}.json", config.name), &output)?);
    Ok(())
}
