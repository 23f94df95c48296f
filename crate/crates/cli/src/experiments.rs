//! Experiment definitions. Each sweeps a sorted grid of parameter points
//! and fills one table row (or several) per point.

use std::fmt::Write as _;

use atma_core::alias::{aliased_coef, block_spectrum};
use atma_core::beam::{angle_grid, array_factor, beam_angle, AfForm};
use atma_core::link::{
    default_upsample, dft_oracle, line_from_dft, measure_spectrum, sideband_levels, simulate_link,
    spectrum_frequencies, transmit, waveform_dft, write_waveform, Impairment, LinkParams, ModulationModel,
};
use atma_core::metrics::{
    aclr_for, check_constraints, compensated_block_gains, evm, evm_from_gains, normalized_capacity,
    passband_ripple, system_report, AclrSide, Violation,
};
use atma_core::modwave::{delayed_coef, period_samples};
use atma_core::{ArrayConfig, ModConfig, Precoder};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::output::{db, num, Check, Golden, Table};

pub const EXPERIMENTS: &[&str] = &[
    "table2",
    "fig9-heatmap",
    "spectrum",
    "aclr-sweep",
    "ripple-sweep",
    "evm-sweep",
    "capacity-sweep",
    "beampattern",
    "link-sim",
    "oracle-check",
    "export-waveform",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("constraint violation: {0}")]
    Constraint(String),
    #[error(transparent)]
    Core(#[from] atma_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub struct Outcome {
    pub table: Table,
    pub checks: Vec<Check>,
    /// Additional CSV tables, written as `<experiment>_<suffix>.csv`.
    pub tables: Vec<(String, Table)>,
    /// Binary files, written as `<experiment>.<ext>`.
    pub blobs: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    fn new(table: Table) -> Self {
        Self { table, checks: Vec::new(), tables: Vec::new(), blobs: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Point {
    n: usize,
    a: usize,
    o: usize,
    d: usize,
    kb: usize,
    ncp: usize,
}

impl Point {
    fn key(&self) -> Vec<String> {
        [self.n, self.a, self.o, self.d, self.kb, self.ncp].iter().map(|x| x.to_string()).collect()
    }
}

fn default_block_size(n: usize) -> usize {
    n * (16 / n).max(1)
}

const POW2_256: &[usize] = &[2, 4, 8, 16, 32, 64, 128, 256];

struct Grid<'a> {
    cfg: &'a Config,
    n: &'a [usize],
    a: &'a [usize],
    d_all: bool,
}

impl Grid<'_> {
    fn points(&self) -> Result<Vec<(Point, String)>, CliError> {
        let c = self.cfg;
        let ns: Vec<usize> = c.list("n", self.n)?;
        let alias: Vec<usize> = c.list("a", self.a)?;
        let os: Vec<usize> = c.list("o_tau", &[1])?;
        let ds = c.strings("d", &[if self.d_all { "all" } else { "0" }]);
        let delays = |n: usize, o: usize| -> Result<Vec<usize>, ConfigError> {
            let mut out = Vec::new();
            for s in &ds {
                if s == "all" {
                    out.extend(0..n * o);
                } else {
                    out.push(s.parse().map_err(|e| c.error("d", format!("`{s}`: {e}")))?);
                }
            }
            Ok(out)
        };
        let ks: Option<Vec<usize>> = if c.has("k") { Some(c.list("k", &[])?) } else { None };
        let cp_fraction: Option<f64> = c.optional("cp_fraction")?;
        let mut pts = Vec::new();
        for &n in &ns {
            for &a in &alias {
                let blocks: Vec<(usize, String)> = match &ks {
                    Some(ks) => ks
                        .iter()
                        .map(|&k| {
                            if a == 0 || k % a != 0 {
                                (0, format!("K = {k} not divisible by A = {a}"))
                            } else {
                                (k / a, String::new())
                            }
                        })
                        .collect(),
                    None => c
                        .list("k_b", &[default_block_size(n)])?
                        .into_iter()
                        .map(|kb| (kb, String::new()))
                        .collect(),
                };
                for &o in &os {
                    for d in delays(n, o)? {
                        for (kb, note) in &blocks {
                            let cps: Vec<(usize, String)> = match cp_fraction {
                                Some(f) => {
                                    let x = f * (a * kb) as f64;
                                    if x.fract() != 0.0 || x < 0.0 {
                                        vec![(0, format!("N_cp = {x} is not an integer"))]
                                    } else {
                                        vec![(x as usize, String::new())]
                                    }
                                }
                                None => {
                                    c.list("n_cp", &[0])?.into_iter().map(|v| (v, String::new())).collect()
                                }
                            };
                            for (ncp, cp_note) in cps {
                                let note = [note.as_str(), cp_note.as_str()]
                                    .iter()
                                    .filter(|s| !s.is_empty())
                                    .cloned()
                                    .collect::<Vec<_>>()
                                    .join("; ");
                                pts.push((Point { n, a, o, d, kb: *kb, ncp }, note));
                            }
                        }
                    }
                }
            }
        }
        pts.sort();
        pts.dedup();
        Ok(pts)
    }
}

/// Configuration and design-rule annotation of one point.
fn validate(p: &Point) -> (Option<ModConfig>, String) {
    let cfg = match ModConfig::new(p.n, p.a, p.o) {
        Ok(c) => c,
        Err(e) => return (None, format!("invalid: {e}")),
    };
    if p.d >= cfg.delay_count() {
        return (None, format!("invalid: d = {} outside [0, {})", p.d, cfg.delay_count()));
    }
    let mut v = check_constraints(&cfg, p.kb);
    if !p.ncp.is_multiple_of(p.n) {
        v.push(Violation::CyclicPrefix { cp_length: p.ncp, n_states: p.n });
    }
    let note = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
    (Some(cfg), note)
}

/// Summary cells, raw periodogram and upsampling factor of one point.
type Measured = (Vec<String>, Vec<f64>, usize);

type RowFn<'a> = dyn Fn(&ModConfig, &Point) -> atma_core::Result<Vec<Vec<String>>> + Sync + 'a;

/// Evaluates `f` at every point in parallel; rows come out in point order.
/// With `needs_valid`, points breaking a design rule are annotated but not
/// evaluated.
fn sweep(points: &[(Point, String)], columns: &[&str], needs_valid: bool, f: &RowFn) -> Table {
    let mut table = Table::new(columns);
    let blank = vec![String::new(); columns.len()];
    let rows: Vec<Vec<Vec<String>>> = points
        .par_iter()
        .map(|(p, pre)| {
            let (cfg, rule_note) = validate(p);
            let note = [pre.as_str(), rule_note.as_str()]
                .iter()
                .filter(|s| !s.is_empty())
                .cloned()
                .collect::<Vec<_>>()
                .join("; ");
            let row = |cells: Vec<String>, note: &str| {
                let mut r = p.key();
                r.extend(cells);
                r.push(note.to_string());
                r
            };
            let Some(cfg) = cfg.filter(|_| pre.is_empty() && (!needs_valid || note.is_empty())) else {
                return vec![row(blank.clone(), &note)];
            };
            match f(&cfg, p) {
                Ok(rows) => rows.into_iter().map(|r| row(r, &note)).collect(),
                Err(e) => {
                    let note = if note.is_empty() { e.to_string() } else { format!("{note}; {e}") };
                    vec![row(blank.clone(), &note)]
                }
            }
        })
        .collect();
    table.rows = rows.into_iter().flatten().collect();
    table
}

fn spectrum_window(cfg: &ModConfig) -> i64 {
    2 * cfg.alias_factor() as i64
}

fn parse_bool(c: &Config, key: &str, default: bool) -> Result<bool, ConfigError> {
    match c.optional::<String>(key)?.as_deref() {
        None => Ok(default),
        Some("true" | "yes" | "1") => Ok(true),
        Some("false" | "no" | "0") => Ok(false),
        Some(other) => Err(c.error(key, format!("`{other}` is not a boolean"))),
    }
}

fn parse_model(c: &Config) -> Result<ModulationModel, ConfigError> {
    match c.optional::<String>("model")?.as_deref() {
        None | Some("continuous") => Ok(ModulationModel::Continuous),
        Some("sample-hold") => Ok(ModulationModel::SampleHold),
        Some(other) => Err(c.error("model", format!("`{other}`: expected continuous or sample-hold"))),
    }
}

fn parse_impairment(c: &Config) -> Result<Impairment, ConfigError> {
    Ok(Impairment::new(c.scalar("impairment_db", 0.0)?, c.scalar("impairment_deg", 0.0)?))
}

pub fn run(name: &str, c: &Config, seed: u64) -> Result<Outcome, CliError> {
    let mut out = match name {
        "table2" => table2(c)?,
        "fig9-heatmap" => heatmap(c)?,
        "spectrum" => spectrum(c, seed)?,
        "aclr-sweep" => aclr_sweep(c)?,
        "ripple-sweep" => ripple_sweep(c)?,
        "evm-sweep" => evm_sweep(c)?,
        "capacity-sweep" => capacity_sweep(c)?,
        "beampattern" => beampattern(c)?,
        "link-sim" => link_sim(c, seed)?,
        "oracle-check" => oracle_check(c)?,
        "export-waveform" => export_waveform(c, seed)?,
        other => {
            return Err(ConfigError::new(0, "experiment", format!("unknown experiment `{other}`")).into())
        }
    };
    for (text, line) in c.raw_items("golden") {
        out.checks.push(Golden::parse(&text, line)?.evaluate(&out.table));
    }
    let strict = name == "export-waveform" || parse_bool(c, "strict", false)?;
    if strict && out.table.notes() > 0 {
        let note = out.table.header.len() - 1;
        let mut msg = String::new();
        for r in out.table.rows.iter().filter(|r| !r[note].is_empty()) {
            let _ = write!(
                msg,
                "\n  N={} A={} O_tau={} d={} K_b={} N_cp={}: {}",
                r[0], r[1], r[2], r[3], r[4], r[5], r[note]
            );
        }
        return Err(CliError::Constraint(msg));
    }
    Ok(out)
}

const REFERENCE: &[(usize, usize, &str, &str, usize, f64)] = &[
    (4, 1, "1/5", "1/4", 4, 19.71),
    (8, 2, "1/10", "1/4", 8, 22.04),
    (16, 2, "1/20", "1/8", 8, 24.66),
    (64, 4, "1/80", "1/16", 16, 30.34),
];

fn table2(c: &Config) -> Result<Outcome, CliError> {
    let ns: Vec<usize> = c.list("n", &[4])?;
    let allocs = c.strings("alloc", &["4:1", "8:2", "16:2", "64:4"]);
    let kb: usize = c.scalar("k_b", 16)?;
    let frac: f64 = c.scalar("cp_fraction", 0.25)?;
    let mut pts = Vec::new();
    for &n in &ns {
        for s in &allocs {
            let (a, o) = s
                .split_once(':')
                .and_then(|(a, o)| Some((a.trim().parse().ok()?, o.trim().parse().ok()?)))
                .ok_or_else(|| c.error("alloc", format!("`{s}`: expected A:O_tau")))?;
            let ncp = frac * (a * kb) as f64;
            let note =
                if ncp.fract() == 0.0 { String::new() } else { format!("N_cp = {ncp} is not an integer") };
            pts.push((Point { n, a, o, d: 0, kb, ncp: ncp as usize }, note));
        }
    }
    pts.sort();
    pts.dedup();
    let table = sweep(
        &pts,
        &["K", "R", "R_value", "f_sw_over_B", "D", "aclr_db", "ripple_db", "evm"],
        true,
        &|cfg, p| {
            let r = system_report(cfg, p.a * p.kb, p.kb, p.ncp)?;
            let rv = *r.symbol_rate.numer() as f64 / *r.symbol_rate.denom() as f64;
            Ok(vec![vec![
                (p.a * p.kb).to_string(),
                r.symbol_rate.to_string(),
                num(rv),
                r.switch_freq.to_string(),
                r.delay_count.to_string(),
                db(r.aclr_db),
                db(r.ripple_db),
                num(r.evm),
            ]])
        },
    );
    let mut out = Outcome::new(table);
    let col = |name: &str| out.table.column(name).unwrap();
    let (cr, cf, cd, ca) = (col("R"), col("f_sw_over_B"), col("D"), col("aclr_db"));
    let mut checks = Vec::new();
    for &(a, o, rate, fsw, delays, aclr_ref) in REFERENCE {
        let row = out.table.rows.iter().find(|r| {
            r[0] == "4" && r[1] == a.to_string() && r[2] == o.to_string() && {
                let k = a * r[4].parse::<usize>().unwrap_or(0);
                r[5] == (k / 4).to_string() && k % 4 == 0
            }
        });
        let Some(r) = row else { continue };
        let aclr: f64 = r[ca].parse().unwrap_or(f64::NAN);
        let passed =
            r[cr] == rate && r[cf] == fsw && r[cd] == delays.to_string() && (aclr - aclr_ref).abs() <= 0.05;
        checks.push(Check {
            name: format!("reference allocation N=4 A={a} O_tau={o}"),
            passed,
            detail: format!(
                "R={} (want {rate}), f_sw={} (want {fsw}), D={} (want {delays}), ACLR={} (want {aclr_ref} +/- 0.05)",
                r[cr], r[cf], r[cd], r[ca]
            ),
        });
    }
    out.checks = checks;
    Ok(out)
}

fn aclr_cells(cfg: &ModConfig) -> atma_core::Result<Vec<f64>> {
    let p = Precoder::alternating(cfg.alias_factor());
    [AclrSide::Lower, AclrSide::Upper, AclrSide::Worst].iter().map(|s| aclr_for(cfg, &p, *s)).collect()
}

fn heatmap(c: &Config) -> Result<Outcome, CliError> {
    let pts = Grid { cfg: c, n: POW2_256, a: POW2_256, d_all: false }.points()?;
    let table = sweep(&pts, &["aclr_db", "meets_45_db"], false, &|cfg, _| {
        let v = aclr_cells(cfg)?[0];
        Ok(vec![vec![db(v), u8::from(v >= 45.0).to_string()]])
    });
    let mut out = Outcome::new(table);
    let ca = out.table.column("aclr_db").unwrap();
    let diag = |x: &str| {
        out.table
            .rows
            .iter()
            .find(|r| r[0] == x && r[1] == x && r[2] == "1")
            .and_then(|r| r[ca].parse::<f64>().ok())
    };
    if let (Some(lo), Some(hi)) = (diag("16"), diag("32")) {
        out.checks.push(Check {
            name: "45 dB contour crosses the diagonal at N = A = 32".into(),
            passed: lo < 45.0 && hi >= 45.0,
            detail: format!("ACLR(16,16) = {lo:.4} dB, ACLR(32,32) = {hi:.4} dB"),
        });
    }
    Ok(out)
}

fn aclr_sweep(c: &Config) -> Result<Outcome, CliError> {
    let pts = Grid { cfg: c, n: &[2, 4, 8, 16, 32, 64], a: &[1, 2, 4, 8, 16, 32, 64, 128], d_all: false }
        .points()?;
    let table = sweep(&pts, &["aclr_db", "aclr_upper_db", "aclr_worst_db"], false, &|cfg, _| {
        Ok(vec![aclr_cells(cfg)?.into_iter().map(db).collect()])
    });
    Ok(Outcome::new(table))
}

fn ripple_sweep(c: &Config) -> Result<Outcome, CliError> {
    let pts = Grid { cfg: c, n: &[2, 4, 8, 16, 32, 64], a: &[1, 2, 4, 8, 16, 32, 64, 128], d_all: false }
        .points()?;
    let table = sweep(&pts, &["ripple_db"], false, &|cfg, p| {
        let s = block_spectrum(cfg, p.d, &Precoder::alternating(p.a), spectrum_window(cfg))?;
        Ok(vec![vec![db(passband_ripple(&s)?)]])
    });
    Ok(Outcome::new(table))
}

fn evm_sweep(c: &Config) -> Result<Outcome, CliError> {
    let pts = Grid { cfg: c, n: &[2, 4, 8, 16, 32, 64], a: &[1, 2, 4, 8, 16, 32, 64, 128], d_all: false }
        .points()?;
    let table = sweep(&pts, &["evm", "evm_db"], false, &|cfg, p| {
        let s = block_spectrum(cfg, p.d, &Precoder::alternating(p.a), spectrum_window(cfg))?;
        let e = evm(&s, p.d)?;
        Ok(vec![vec![num(e), db(20.0 * e.log10())]])
    });
    Ok(Outcome::new(table))
}

fn capacity_sweep(c: &Config) -> Result<Outcome, CliError> {
    let pts = Grid { cfg: c, n: &[2, 4, 8, 16], a: &[1, 2, 4, 8, 16, 32, 64, 128], d_all: false }.points()?;
    let snrs: Vec<f64> = c.list("snr_db", &[10.0])?;
    let table = sweep(&pts, &["snr_db", "capacity"], false, &|cfg, _| {
        snrs.iter()
            .map(|&s| {
                let v = normalized_capacity(cfg.n_states(), cfg.alias_factor(), 10f64.powf(s / 10.0))?;
                Ok(vec![num(s), num(v)])
            })
            .collect()
    });
    Ok(Outcome::new(table))
}

fn beampattern(c: &Config) -> Result<Outcome, CliError> {
    let pts = Grid { cfg: c, n: &[4], a: &[1], d_all: true }.points()?;
    let harmonics: Vec<i64> = c.list("i", &[0])?;
    let m: usize = c.scalar("elements", 8)?;
    let spacing: f64 = c.scalar("spacing", 0.5)?;
    let carrier: f64 = c.scalar("carrier", 28e9)?;
    let fs: f64 = c.scalar("sample_rate", 1.0)?;
    let acfg = ArrayConfig::new(m, spacing, carrier)?;
    let form = match c.optional::<String>("form")?.as_deref() {
        None | Some("simplified") => AfForm::Simplified,
        Some("full") => AfForm::Full,
        Some(other) => return Err(c.error("form", format!("`{other}`: expected simplified or full")).into()),
    };
    let theta = angle_grid(c.scalar("angles", 1801)?);
    let table = sweep(&pts, &["i", "theta_deg", "af_abs", "af_db", "beam_deg"], false, &|cfg, p| {
        let cfg = cfg.with_sample_rate(fs)?;
        let mut rows = Vec::new();
        for &i in &harmonics {
            let beam = beam_angle(i, p.d, &cfg, spacing)
                .degrees()
                .map_or_else(|| "invisible".to_string(), |b| format!("{:.4}", b + 0.0));
            for (t, v) in theta.iter().zip(array_factor(&theta, i, p.d, &acfg, &cfg, form)) {
                rows.push(vec![
                    i.to_string(),
                    format!("{:.4}", t.to_degrees()),
                    num(v.norm()),
                    db(20.0 * v.norm().log10()),
                    beam.clone(),
                ]);
            }
        }
        Ok(rows)
    });
    Ok(Outcome::new(table))
}

fn link_params(c: &Config, cfg: &ModConfig, p: &Point, seed: u64) -> Result<LinkParams, ConfigError> {
    let mut lp = LinkParams::new(*cfg, p.kb);
    lp.delay = p.d;
    lp.cp_length = p.ncp;
    lp.upsample = c.scalar("upsample", default_upsample(cfg))?;
    lp.model = parse_model(c)?;
    lp.impairment = parse_impairment(c)?;
    lp.snr_db = c.optional("snr_db")?;
    lp.seed = seed;
    lp.receiver.equalize_amplitude = parse_bool(c, "equalize", false)?;
    lp.receiver.revert_precoder = parse_bool(c, "revert_precoder", true)?;
    Ok(lp)
}

/// Validates the keys `link_params` reads, so errors surface with their
/// line numbers before the sweep starts.
fn check_link_keys(c: &Config) -> Result<(), ConfigError> {
    let _: Option<usize> = c.optional("upsample")?;
    let _: Option<f64> = c.optional("snr_db")?;
    parse_model(c)?;
    parse_impairment(c)?;
    parse_bool(c, "equalize", false)?;
    parse_bool(c, "revert_precoder", true)?;
    Ok(())
}

fn link_sim(c: &Config, seed: u64) -> Result<Outcome, CliError> {
    check_link_keys(c)?;
    let pts = Grid { cfg: c, n: &[4], a: &[4], d_all: false }.points()?;
    let columns = [
        "block",
        "gain_re",
        "gain_im",
        "gain_db",
        "analytic_re",
        "analytic_im",
        "evm",
        "evm_analytic",
        "flipped_blocks",
    ];
    let table = sweep(&pts, &columns, true, &|cfg, p| {
        let lp = link_params(c, cfg, p, seed).map_err(|e| atma_core::Error::InvalidConfig(e.to_string()))?;
        let res = simulate_link(&lp)?;
        let analytic_evm = evm_from_gains(&compensated_block_gains(cfg, p.d, &lp.precoder)?);
        res.per_block_gain
            .iter()
            .enumerate()
            .map(|(b, g)| {
                let want = aliased_coef(b as i64 - cfg.center_offset(), p.d, cfg, &lp.precoder)?;
                Ok(vec![
                    b.to_string(),
                    num(g.re),
                    num(g.im),
                    db(20.0 * g.norm().log10()),
                    num(want.re),
                    num(want.im),
                    num(res.measured_evm),
                    num(analytic_evm),
                    res.flipped_blocks.to_string(),
                ])
            })
            .collect()
    });
    Ok(Outcome::new(table))
}

fn spectrum(c: &Config, seed: u64) -> Result<Outcome, CliError> {
    let source = c.scalar("source", "simulated".to_string())?;
    match source.as_str() {
        "analytic" => {
            let pts = Grid { cfg: c, n: &[2], a: &[2, 8, 32, 128], d_all: false }.points()?;
            let window: Option<i64> = c.optional("window")?;
            let table = sweep(&pts, &["index", "freq", "power_db"], false, &|cfg, p| {
                let w = window.unwrap_or(4 * p.a as i64);
                let s = block_spectrum(cfg, p.d, &Precoder::alternating(p.a), w)?;
                Ok(s.normalized_power_db()
                    .into_iter()
                    .map(|(i, v)| vec![i.to_string(), num(s.block_center(i) / cfg.sample_rate()), db(v)])
                    .collect())
            });
            Ok(Outcome::new(table))
        }
        "simulated" => {
            check_link_keys(c)?;
            let mut grid_cfg = c.clone();
            if !c.has("k") && !c.has("k_b") {
                grid_cfg.set("k", "16384".into());
            }
            let pts = Grid { cfg: &grid_cfg, n: &[2], a: &[2, 8, 32, 128], d_all: false }.points()?;
            let guard: f64 = c.scalar("guard", 0.1)?;
            let resolution: Option<usize> = c.optional("resolution")?;
            let mut upsample_cfg = c.clone();
            if !c.has("upsample") {
                upsample_cfg.set("upsample", "4".into());
            }
            let results: Vec<(Point, Option<Measured>)> = pts
                .par_iter()
                .map(|(p, pre)| {
                    let (cfg, note) = validate(p);
                    let run = || -> Option<Measured> {
                        let cfg = cfg?;
                        if !pre.is_empty() || !note.is_empty() {
                            return None;
                        }
                        let lp = link_params(&upsample_cfg, &cfg, p, seed).ok()?;
                        let (frame, tx) = transmit(&lp).ok()?;
                        let bins = resolution.unwrap_or(lp.upsample * frame.subcarrier_count());
                        let spec = measure_spectrum(&tx, bins).ok()?;
                        let lv = sideband_levels(&spec, &frame, lp.upsample, guard).ok()?;
                        let (lo, hi) = frame.modulated_band();
                        Some((vec![db(lv.worst_db), db(lv.shelf_db), num(lo), num(hi)], spec, lp.upsample))
                    };
                    (*p, run())
                })
                .collect();
            let summary = sweep(&pts, &["worst_db", "shelf_db", "band_lo", "band_hi"], true, &|_, p| {
                results
                    .iter()
                    .find(|(q, _)| q == p)
                    .and_then(|(_, r)| r.as_ref())
                    .map(|(cells, _, _)| vec![cells.clone()])
                    .ok_or_else(|| atma_core::Error::InvalidConfig("spectrum measurement failed".into()))
            });
            let mut bins = Table::new(&["freq", "power_db"]);
            for (p, r) in &results {
                let Some((_, spec, l)) = r else { continue };
                for (f, v) in spectrum_frequencies(spec.len()).iter().zip(spec) {
                    let mut row = p.key();
                    row.push(num(f * *l as f64));
                    row.push(db(10.0 * v.max(1e-300).log10()));
                    row.push(String::new());
                    bins.rows.push(row);
                }
            }
            let mut out = Outcome::new(summary);
            out.tables.push(("bins".into(), bins));
            Ok(out)
        }
        other => Err(c.error("source", format!("`{other}`: expected simulated or analytic")).into()),
    }
}

fn oracle_check(c: &Config) -> Result<Outcome, CliError> {
    let pts = Grid { cfg: c, n: &[2, 4, 8], a: &[1, 2, 4], d_all: true }.points()?;
    let window: Option<i64> = c.optional("window")?;
    let upsample: Option<usize> = c.optional("upsample")?;
    let table = sweep(&pts, &["max_rel_err", "max_disallowed", "pass"], false, &|cfg, p| {
        let l = upsample.unwrap_or_else(|| default_upsample(cfg));
        let w = window.unwrap_or_else(|| cfg.default_window());
        let mut rel = 0.0f64;
        for (i, v) in dft_oracle(cfg, p.d, l, w)?.iter() {
            let want = delayed_coef(i, p.d, cfg)?;
            rel = rel.max((v - want).norm() / want.norm());
        }
        let dft = waveform_dft(cfg, p.d, l)?;
        let period = period_samples(cfg, l) as i64;
        let mut zero = 0.0f64;
        for k in -period..period {
            if (k - 1).rem_euclid(p.n as i64) != 0 {
                zero = zero.max(line_from_dft(&dft, k).norm());
            }
        }
        let pass = rel <= 1e-10 && zero <= 1e-12;
        Ok(vec![vec![format!("{rel:.3e}"), format!("{zero:.3e}"), u8::from(pass).to_string()]])
    });
    let mut out = Outcome::new(table);
    let cp = out.table.column("pass").unwrap();
    let evaluated: Vec<_> = out.table.rows.iter().filter(|r| !r[cp].is_empty()).collect();
    let failed = evaluated.iter().filter(|r| r[cp] != "1").count();
    out.checks.push(Check {
        name: "oracle matches closed form (rel 1e-10, disallowed 1e-12)".into(),
        passed: failed == 0,
        detail: format!("{} points, {failed} failed", evaluated.len()),
    });
    Ok(out)
}

fn export_waveform(c: &Config, seed: u64) -> Result<Outcome, CliError> {
    check_link_keys(c)?;
    let pts = Grid { cfg: c, n: &[4], a: &[4], d_all: false }.points()?;
    if pts.len() != 1 {
        return Err(c
            .error("n", format!("export-waveform needs exactly one parameter point, got {}", pts.len()))
            .into());
    }
    let fs: f64 = c.scalar("sample_rate", 1.0)?;
    let mut blob = Vec::new();
    let table = sweep(&pts, &["upsample", "sample_rate", "samples", "mean_power"], true, &|cfg, p| {
        let cfg = cfg.with_sample_rate(fs)?;
        let lp = link_params(c, &cfg, p, seed).map_err(|e| atma_core::Error::InvalidConfig(e.to_string()))?;
        let (_, tx) = transmit(&lp)?;
        let rate = fs * lp.upsample as f64;
        let power = tx.iter().map(|s| s.norm_sqr()).sum::<f64>() / tx.len() as f64;
        Ok(vec![vec![lp.upsample.to_string(), num(rate), tx.len().to_string(), num(power)]])
    });
    if table.notes() == 0 {
        let (p, _) = &pts[0];
        let cfg = ModConfig::new(p.n, p.a, p.o)?.with_sample_rate(fs)?;
        let lp = link_params(c, &cfg, p, seed)?;
        let (_, tx) = transmit(&lp)?;
        write_waveform(&mut blob, fs * lp.upsample as f64, &tx)?;
    }
    let mut out = Outcome::new(table);
    out.blobs.push(("bin".into(), blob));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(text: &str) -> Vec<(Point, String)> {
        let c = Config::parse(text).unwrap();
        Grid { cfg: &c, n: &[4], a: &[4], d_all: false }.points().unwrap()
    }

    #[test]
    fn grid_is_sorted_and_deduplicated() {
        let p = points("n = 8, 4, 4\na = 2\nd = all\n");
        assert_eq!(p.len(), 12);
        assert!(p.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(p[0].0, Point { n: 4, a: 2, o: 1, d: 0, kb: 16, ncp: 0 });
    }

    #[test]
    fn total_size_and_cp_fraction_derive_block_and_prefix() {
        let p = points("k = 64, 66\ncp_fraction = 0.25\n");
        assert!(p.iter().any(|(q, note)| note.is_empty() && (q.kb, q.ncp) == (16, 16)));
        assert!(p.iter().any(|(_, note)| note.contains("not divisible")));
    }

    #[test]
    fn validation_reports_rule_breaks() {
        let (cfg, note) = validate(&Point { n: 4, a: 8, o: 2, d: 0, kb: 6, ncp: 2 });
        assert!(cfg.is_some());
        assert!(note.contains("6") && note.contains("2"), "{note}");
        let (cfg, note) = validate(&Point { n: 4, a: 2, o: 4, d: 0, kb: 16, ncp: 0 });
        assert!(cfg.is_none() && note.starts_with("invalid"));
    }

    #[test]
    fn unknown_experiment_is_a_config_error() {
        let c = Config::parse("").unwrap();
        assert!(matches!(run("nope", &c, 0), Err(CliError::Config(_))));
    }
}
