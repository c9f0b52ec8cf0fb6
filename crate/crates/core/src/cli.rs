//! Command-line front end: `analyze`, `simulate` and `score`.
//!
//! Exit codes: 0 ok, 1 usage or config error, 2 parse error, 3 a metric
//! outside its configured floor or ceiling.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::capture::{merge_sniffers, parse_capture_records, parse_pcap_radiotap, write_capture_records, CaptureSet, DEFAULT_MAX_SKEW_US};
use crate::identify::{load_oui_registry, OuiRegistry, SetupPatterns};
use crate::pipeline::{analyze, AnalysisConfig, Report, Stage};
use crate::report::write_outputs;
use crate::simulate::{self, generate, GroundTruth, Scenario, ScoreConfig, SimError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_GATE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "hearsay", version, about = "Passive wireless metadata analysis and household simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run identify → states → locate → har over capture files.
    Analyze(AnalyzeArgs),
    /// Generate three sniffer captures and ground truth from a scenario.
    Simulate(SimulateArgs),
    /// Compare a report.json with truth.json.
    Score(ScoreArgs),
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Capture file (.wwcap or .pcap); repeat once per sniffer.
    #[arg(long = "input", short = 'i')]
    pub inputs: Vec<PathBuf>,
    /// Analysis config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of identify,states,locate,har.
    #[arg(long)]
    pub stages: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario TOML, or one of the bundled names: household, guest_night, phone_day.
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed_override: Option<u64>,
    /// Override the scenario duration (seconds).
    #[arg(long)]
    pub duration: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// The report.json to score.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Floors and ceilings (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where to write the metrics JSON; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn config_err(m: impl Into<String>) -> Failure {
    Failure { code: EXIT_CONFIG, message: m.into() }
}

fn parse_err(m: impl Into<String>) -> Failure {
    Failure { code: EXIT_PARSE, message: m.into() }
}

fn io_err(p: &Path, e: std::io::Error) -> Failure {
    config_err(format!("{}: {e}", p.display()))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let res = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Score(a) => cmd_score(&a),
    };
    match res {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn parse_stages(s: &str) -> Result<Vec<Stage>, String> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let st = Stage::parse(part).ok_or_else(|| format!("unknown stage {part:?} (expected identify, states, locate, har)"))?;
        if !out.contains(&st) {
            out.push(st);
        }
    }
    out.sort();
    Ok(out)
}

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

/// Loads the config (if any) and applies command-line overrides. Relative
/// paths inside the config file are taken from the file's directory.
pub fn effective_config(a: &AnalyzeArgs) -> Result<AnalysisConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            let mut c = AnalysisConfig::from_toml(&text).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
            let base = p.parent();
            c.inputs = c.inputs.iter().map(|i| resolve(base, i)).collect();
            c.oui_registry = c.oui_registry.as_deref().map(|i| resolve(base, i));
            c.setup_patterns = c.setup_patterns.as_deref().map(|i| resolve(base, i));
            c.out_dir = c.out_dir.as_deref().map(|i| resolve(base, i));
            c
        }
        None => AnalysisConfig::default(),
    };
    if !a.inputs.is_empty() {
        cfg.inputs = a.inputs.clone();
    }
    if let Some(o) = &a.out {
        cfg.out_dir = Some(o.clone());
    }
    if let Some(s) = &a.stages {
        cfg.stages = parse_stages(s).map_err(config_err)?;
    }
    cfg.validate().map_err(config_err)?;
    if cfg.inputs.is_empty() {
        return Err(config_err("no input captures (use --input or `inputs` in the config)"));
    }
    if cfg.inputs.len() > 3 {
        return Err(config_err("at most three inputs (one per sniffer)"));
    }
    for p in cfg.inputs.iter().chain(&cfg.oui_registry).chain(&cfg.setup_patterns) {
        if !p.is_file() {
            return Err(config_err(format!("{}: no such file", p.display())));
        }
    }
    if cfg.out_dir.is_none() {
        return Err(config_err("no output directory (use --out)"));
    }
    Ok(cfg)
}

/// Reads one capture file; `.pcap` files are attributed to `sniffer_id`.
pub fn read_capture(p: &Path, sniffer_id: u8) -> Result<CaptureSet, Failure> {
    let is_pcap = p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pcap"));
    if is_pcap {
        let bytes = fs::read(p).map_err(|e| io_err(p, e))?;
        let (recs, _) = parse_pcap_radiotap(&bytes, sniffer_id).map_err(|e| parse_err(format!("{}: {e}", p.display())))?;
        CaptureSet::new(recs, None).map(|c| c.with_sniffer_count(sniffer_id + 1)).map_err(|e| parse_err(format!("{}: {e}", p.display())))
    } else {
        let f = File::open(p).map_err(|e| io_err(p, e))?;
        let (c, rep) = parse_capture_records(BufReader::new(f)).map_err(|e| parse_err(format!("{}: {e}", p.display())))?;
        for m in rep.malformed.iter().take(5) {
            eprintln!("warning: {}:{}: {}", p.display(), m.line, m.message);
        }
        Ok(c)
    }
}

pub fn load_inputs(paths: &[PathBuf]) -> Result<CaptureSet, Failure> {
    let caps: Vec<CaptureSet> = paths.iter().enumerate().map(|(i, p)| read_capture(p, i as u8)).collect::<Result<_, _>>()?;
    if caps.len() == 1 {
        return Ok(caps.into_iter().next().expect("one capture"));
    }
    merge_sniffers(caps, DEFAULT_MAX_SKEW_US).map(|(c, _)| c).map_err(|e| parse_err(e.to_string()))
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<i32, Failure> {
    let cfg = effective_config(a)?;
    let registry = match &cfg.oui_registry {
        Some(p) => {
            let f = File::open(p).map_err(|e| io_err(p, e))?;
            load_oui_registry(BufReader::new(f)).map_err(|e| parse_err(format!("{}: {e}", p.display())))?.0
        }
        None => OuiRegistry::builtin(),
    };
    let patterns = match &cfg.setup_patterns {
        Some(p) => {
            let f = File::open(p).map_err(|e| io_err(p, e))?;
            SetupPatterns::load(BufReader::new(f)).map_err(|e| parse_err(format!("{}: {e}", p.display())))?
        }
        None => SetupPatterns::builtin(),
    };
    let capture = load_inputs(&cfg.inputs)?;
    let report = analyze(&capture, &cfg, &registry, &patterns);
    let out = cfg.out_dir.clone().expect("checked");
    let files = write_outputs(&report, Some(&capture), &out).map_err(|e| io_err(&out, e))?;
    println!("{} records, {} devices", capture.len(), report.inventory.as_ref().map_or(0, |i| i.len()));
    for (name, st) in &report.stages {
        match &st.message {
            Some(m) => println!("  {name:<8} {} ({m})", st.status),
            None => println!("  {name:<8} {}", st.status),
        }
    }
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(EXIT_OK)
}

pub fn load_scenario(name: &str) -> Result<Scenario, Failure> {
    let text = match name {
        "household" => simulate::HOUSEHOLD_TOML.to_string(),
        "guest_night" => simulate::GUEST_NIGHT_TOML.to_string(),
        "phone_day" => simulate::PHONE_DAY_TOML.to_string(),
        path => fs::read_to_string(path).map_err(|e| io_err(Path::new(path), e))?,
    };
    Scenario::from_toml(&text).map_err(|e| match e {
        SimError::Parse(m) => parse_err(format!("{name}: {m}")),
        SimError::Invalid(m) => config_err(format!("{name}: {m}")),
    })
}

/// Capture file names written by `simulate`, one per sniffer.
pub fn sniffer_file(i: usize) -> String {
    format!("sniffer{i}.wwcap")
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32, Failure> {
    let mut sc = load_scenario(&a.scenario)?;
    if let Some(s) = a.seed_override {
        sc.seed = s;
    }
    if let Some(d) = a.duration {
        sc.duration_s = d;
    }
    sc.validate().map_err(|e| config_err(e.to_string()))?;
    let (captures, truth) = generate(&sc).map_err(|e| config_err(e.to_string()))?;
    fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    let mut inputs = Vec::new();
    for (i, c) in captures.iter().enumerate() {
        let name = sniffer_file(i);
        let p = a.out.join(&name);
        let mut w = BufWriter::new(File::create(&p).map_err(|e| io_err(&p, e))?);
        write_capture_records(c, &mut w).and_then(|_| w.flush()).map_err(|e| io_err(&p, e))?;
        inputs.push(PathBuf::from(name));
    }
    let p = a.out.join("truth.json");
    let json = serde_json::to_string_pretty(&truth).map_err(|e| config_err(e.to_string()))?;
    fs::write(&p, json + "\n").map_err(|e| io_err(&p, e))?;
    // an analysis config matching the scenario, inputs relative to it
    let mut cfg = sc.analysis_config();
    cfg.inputs = inputs;
    cfg.out_dir = Some(PathBuf::from("analysis"));
    let p = a.out.join("analysis.toml");
    let text = toml::to_string(&cfg).map_err(|e| config_err(e.to_string()))?;
    fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    let frames: usize = captures.iter().map(|c| c.len()).sum();
    println!("{}: {} records over {} s, seed {}, written to {}", sc.name, frames, sc.duration_s, sc.seed, a.out.display());
    Ok(EXIT_OK)
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T, Failure> {
    let f = File::open(p).map_err(|e| io_err(p, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| parse_err(format!("{}: {e}", p.display())))
}

pub fn cmd_score(a: &ScoreArgs) -> Result<i32, Failure> {
    let gates = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            toml::from_str::<ScoreConfig>(&text).map_err(|e| config_err(format!("{}: {e}", p.display())))?
        }
        None => ScoreConfig::default(),
    };
    let report: Report = read_json(&a.input)?;
    let truth: GroundTruth = read_json(&a.truth)?;
    let mut m = simulate::score(&report, &truth).map_err(|e| parse_err(e.to_string()))?;
    let failed = m.apply_gates(&gates).to_vec();
    let json = serde_json::to_string_pretty(&m).map_err(|e| config_err(e.to_string()))? + "\n";
    match &a.out {
        Some(p) => fs::write(p, &json).map_err(|e| io_err(p, e))?,
        None => print!("{json}"),
    }
    for f in &failed {
        eprintln!("gate failed: {f}");
    }
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_GATE })
}
