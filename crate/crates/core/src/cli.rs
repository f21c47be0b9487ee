//! Command-line front end.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bec::{bec_compress, bec_cost};
use crate::costmod::{
    analytic_costs, compare_schemes, ratio_surface, threshold_curve, write_csv, CompareOptions, Stats,
    DEFAULT_RJ,
};
use crate::error::{Error, Result};
use crate::gqir::text::to_text;
use crate::gqir::{evaluate, prepare_uncompressed, readback, Circuit, GqirLayout};
use crate::jpeg::{psnr, reconstruct, reconstruct_float, QuantMatrix};
use crate::pixmap::{load_pgm, write_pgm, PixelImage};
use crate::qjpeg::{run_pipeline, TraceDetail};
use crate::report::ReportBundle;

#[derive(Debug, Parser)]
#[command(
    name = "qimg",
    version,
    about = "GQIR image-preparation circuits: synthesis, costing and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Plain,
    Bec,
    Qjpeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Curve {
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Surface {
    R,
}

/// Inclusive integer range written `a..b`, `a..=b` or `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span(pub RangeInclusive<u32>);

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| format!("`{t}` is not an integer"))
        };
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
            None => {
                let v = num(s)?;
                (v, v)
            }
        };
        if a > b {
            return Err(format!("empty range {s}"));
        }
        Ok(Span(a..=b))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a preparation circuit for a PGM image and report its gate counts.
    Prepare {
        image: PathBuf,
        #[arg(long, value_enum, default_value = "plain")]
        scheme: Scheme,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Largest size exponent BEC runs on without --force.
        #[arg(long, default_value_t = 8)]
        max_n: u32,
        #[arg(long)]
        force: bool,
        /// Write the per-location pipeline trace as JSON lines.
        #[arg(long)]
        trace: bool,
        /// Skip writing the circuit text.
        #[arg(long)]
        no_circuit: bool,
    },
    /// Analytic costs, the size threshold curve or the ratio surface.
    Cost {
        #[arg(long)]
        n: Option<Span>,
        #[arg(long)]
        q: Option<Span>,
        #[arg(long, default_value_t = DEFAULT_RJ)]
        rj: f64,
        /// Emit (q, m, min_n) as CSV; q defaults to 4..40.
        #[arg(long, value_enum)]
        curve: Option<Curve>,
        /// Emit (n, q, r) as CSV; n defaults to 1..16 and q to 4..40.
        #[arg(long, value_enum)]
        surface: Option<Surface>,
    },
    /// Per-image ratios over a directory of PGM files, as CSV on stdout.
    Corpus {
        dir: PathBuf,
        /// Also run BEC on every image.
        #[arg(long)]
        bec: bool,
        #[arg(long, default_value_t = 8)]
        max_n: u32,
        #[arg(long)]
        force: bool,
        /// Write corpus.csv, corpus_stats.csv and corpus.json here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Randomized self-check of BEC equivalence and pipeline fidelity.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_circuit(path: &Path, c: &Circuit) -> Result<()> {
    write_text(path, &to_text(c))
}

pub fn cmd_prepare(
    image: &Path,
    scheme: Scheme,
    out_dir: &Path,
    max_n: u32,
    force: bool,
    trace: bool,
    circuit_out: bool,
) -> Result<ReportBundle> {
    let mut report = ReportBundle::new("prepare");
    let scheme_name = format!("{scheme:?}").to_lowercase();
    report.arg("scheme", &scheme_name);
    report.input(image)?;
    let source = image.display().to_string();
    let loaded = load_pgm(image)?;
    if let Some(w) = loaded.warning() {
        report.warn(&source, w);
    }
    let img = &loaded.image;
    report.value("n", img.n());
    report.value("q", img.q());
    fs::create_dir_all(out_dir)?;
    let base = out_dir.join(format!("{}.{scheme_name}", stem(image)));
    let start = Instant::now();

    match scheme {
        Scheme::Plain => {
            let c = prepare_uncompressed(img);
            report
                .timing_seconds
                .insert("synthesis".into(), start.elapsed().as_secs_f64());
            report.tallies.insert("plain".into(), c.tally());
            if circuit_out {
                write_circuit(&base.with_extension("plain.circuit"), &c)?;
            }
        }
        Scheme::Bec => {
            if img.n() > max_n && !force {
                return Err(Error::domain(format!(
                    "BEC on 2^{n}x2^{n} exceeds --max-n {max_n}; pass --force to run it anyway",
                    n = img.n()
                )));
            }
            let layout = GqirLayout::for_image(img);
            let plain = prepare_uncompressed(img);
            let (c, stats) = bec_compress(&plain, layout)?;
            report
                .timing_seconds
                .insert("preprocessing".into(), start.elapsed().as_secs_f64());
            report.tallies.insert("plain".into(), plain.tally());
            report.tallies.insert("bec".into(), c.tally());
            report.value("bec_stats", &stats);
            report.value("bec_cost", bec_cost(&stats, &c, layout));
            report.value(
                "ratio",
                1.0 - stats.gates_after as f64 / stats.gates_before.max(1) as f64,
            );
            if circuit_out {
                write_circuit(&base.with_extension("bec.circuit"), &c)?;
            }
        }
        Scheme::Qjpeg => {
            let qm = QuantMatrix::standard();
            let detail = if trace {
                TraceDetail::Products
            } else {
                TraceDetail::Summary
            };
            let out = run_pipeline(img, &qm, detail)?;
            report
                .timing_seconds
                .insert("pipeline".into(), start.elapsed().as_secs_f64());
            for (name, t) in ["step2", "step3", "step4", "step5"]
                .iter()
                .zip(out.stage_tallies())
            {
                report.tallies.insert((*name).into(), t);
            }
            report.tallies.insert("total".into(), out.tally());
            report
                .tallies
                .insert("plain".into(), prepare_uncompressed(img).tally());
            let plain_bits = crate::pixmap::count_one_bits(img);
            let step2 = out.coeffs.set_bits();
            report.value("r_j", (plain_bits > 0).then(|| step2 as f64 / plain_bits as f64));
            report.psnr.insert("recovered".into(), psnr(img, &out.recovered)?);
            report
                .psnr
                .insert("float_reference".into(), psnr(img, &reconstruct(img, &qm)?)?);
            for w in &out.warnings {
                report.warn(&source, w.clone());
            }
            write_pgm(&out.recovered, base.with_extension("qjpeg.recovered.pgm"))?;
            if trace {
                let f = File::create(base.with_extension("qjpeg.trace.jsonl"))?;
                out.trace.write_jsonl(BufWriter::new(f))?;
            }
            if circuit_out {
                write_circuit(&base.with_extension("qjpeg.circuit"), &out.circuits.full())?;
            }
        }
    }
    write_text(
        &base.with_extension(format!("{scheme_name}.json")),
        &report.to_json(),
    )?;
    Ok(report)
}

pub fn cmd_cost(
    n: Option<Span>,
    q: Option<Span>,
    rj: f64,
    curve: Option<Curve>,
    surface: Option<Surface>,
    out: &mut dyn Write,
) -> Result<ReportBundle> {
    let mut report = ReportBundle::new("cost");
    report.arg("rj", rj);
    let qs = q.map(|s| s.0).unwrap_or(4..=40);
    if curve.is_some() {
        report.arg("curve", "m");
        write_csv(&threshold_curve(qs.clone())?, &mut *out)?;
    }
    if surface.is_some() {
        report.arg("surface", "r");
        let ns = n.clone().map(|s| s.0).unwrap_or(1..=16);
        write_csv(&ratio_surface(ns, qs.clone(), rj)?, &mut *out)?;
    }
    if curve.is_none() && surface.is_none() {
        let n = n.ok_or_else(|| Error::domain("--n is required without --curve or --surface"))?;
        if n.0.start() != n.0.end() || qs.start() != qs.end() {
            return Err(Error::domain("a cost report takes a single --n and --q"));
        }
        let c = analytic_costs(*n.0.start(), *qs.start(), rj)?;
        report.costs.push(c);
        writeln!(out, "{}", report.to_json())?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusRow {
    pub image: String,
    pub n: u32,
    pub q: u32,
    pub plain_gates: u64,
    pub jpeg_gates: u64,
    pub r_j: Option<f64>,
    pub jpeg_ratio: Option<f64>,
    pub jpeg_full_ratio: Option<f64>,
    pub bec_gates: Option<u64>,
    pub bec_ratio: Option<f64>,
    pub bec_seconds: Option<f64>,
    pub jpeg_seconds: f64,
}

pub fn cmd_corpus(
    dir: &Path,
    bec: bool,
    max_n: u32,
    force: bool,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<ReportBundle> {
    let mut report = ReportBundle::new("corpus");
    report.arg("dir", dir.display());
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::domain(format!("no .pgm files in {}", dir.display())));
    }
    let qm = QuantMatrix::standard();
    let opts = CompareOptions {
        run_bec: bec,
        bec_max_n: max_n,
        force,
    };
    let results: Vec<Result<(CorpusRow, Option<crate::report::Warning>)>> = files
        .par_iter()
        .map(|path| {
            let loaded = load_pgm(path)?;
            let cmp = compare_schemes(&loaded.image, &qm, opts)?;
            let row = CorpusRow {
                image: path
                    .file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned(),
                n: cmp.n,
                q: cmp.q,
                plain_gates: cmp.plain_gates,
                jpeg_gates: cmp.jpeg_gates,
                r_j: cmp.r_j,
                jpeg_ratio: cmp.jpeg_ratio,
                jpeg_full_ratio: cmp.jpeg_full_ratio,
                bec_gates: cmp.bec.map(|b| b.gates),
                bec_ratio: cmp.bec.and_then(|b| b.ratio),
                bec_seconds: cmp.bec.map(|b| b.seconds),
                jpeg_seconds: cmp.jpeg_seconds,
            };
            Ok((row, loaded.warning()))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for (path, r) in files.iter().zip(results) {
        let (row, warning) = r?;
        report.input(path)?;
        if let Some(w) = warning {
            report.warn(path.display().to_string(), w);
        }
        rows.push(row);
    }
    write_csv(&rows, &mut *out)?;

    let rjs: Vec<f64> = rows.iter().filter_map(|r| r.r_j).collect();
    let stats: Vec<(&str, Stats)> = [
        ("r_j", Stats::of(&rjs)),
        (
            "jpeg_ratio",
            Stats::of(&rows.iter().filter_map(|r| r.jpeg_ratio).collect::<Vec<_>>()),
        ),
        (
            "bec_ratio",
            Stats::of(&rows.iter().filter_map(|r| r.bec_ratio).collect::<Vec<_>>()),
        ),
    ]
    .into_iter()
    .filter_map(|(k, s)| s.map(|s| (k, s)))
    .collect();
    #[derive(Serialize)]
    struct StatRow<'a> {
        metric: &'a str,
        count: usize,
        min: f64,
        max: f64,
        mean: f64,
        variance: f64,
    }
    let stat_rows: Vec<StatRow> = stats
        .iter()
        .map(|&(metric, s)| StatRow {
            metric,
            count: s.count,
            min: s.min,
            max: s.max,
            mean: s.mean,
            variance: s.variance,
        })
        .collect();
    for (k, s) in &stats {
        report.value(k, s);
        log::info!(
            "{k}: min {:.4} max {:.4} mean {:.4} variance {:.5}",
            s.min,
            s.max,
            s.mean,
            s.variance
        );
    }
    report.value("rows", &rows);
    if let Some(d) = out_dir {
        fs::create_dir_all(d)?;
        write_csv(&rows, File::create(d.join("corpus.csv"))?)?;
        write_csv(&stat_rows, File::create(d.join("corpus_stats.csv"))?)?;
        write_text(&d.join("corpus.json"), &report.to_json())?;
    }
    Ok(report)
}

fn random_image(rng: &mut ChaCha8Rng, n: u32, q: u32) -> PixelImage {
    let max = 1u32 << q;
    PixelImage::from_fn(n, q, |_, _| rng.gen_range(0..max)).expect("valid parameters")
}

/// Smooth random image: a few random gradients, so that the JPEG path sees
/// realistic coefficient magnitudes.
fn smooth_image(rng: &mut ChaCha8Rng, n: u32) -> PixelImage {
    let (a, b, c): (f64, f64, f64) = (
        rng.gen_range(0.0..4.0),
        rng.gen_range(0.0..4.0),
        rng.gen_range(40.0..200.0),
    );
    PixelImage::from_fn(n, 8, |y, x| {
        let v = c + 40.0 * ((a * y as f64 / 8.0).sin() + (b * x as f64 / 8.0).cos());
        v.round().clamp(0.0, 255.0) as u32
    })
    .expect("valid parameters")
}

pub fn cmd_check(seed: u64, cases: usize, out: &mut dyn Write) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    let mut bec_fail = 0;
    for _ in 0..cases {
        let img = random_image(&mut rng, 4, 8);
        let layout = GqirLayout::for_image(&img);
        let (c, _) = bec_compress(&prepare_uncompressed(&img), layout)?;
        if readback(&evaluate(&c, layout)?)? != img {
            bec_fail += 1;
        }
    }
    writeln!(
        out,
        "bec equivalence: {}/{cases} images identical",
        cases - bec_fail
    )?;
    ok &= bec_fail == 0;

    let qm = QuantMatrix::standard();
    let (mut worst, mut flagged, mut total) = (0.0f64, 0usize, 0usize);
    for _ in 0..cases {
        let img = smooth_image(&mut rng, 4);
        let out = run_pipeline(&img, &qm, TraceDetail::Summary)?;
        let float = reconstruct_float(&img, &qm)?;
        for (t, f) in out.trace.locations.iter().zip(&float) {
            total += 1;
            if t.wraparound {
                flagged += 1;
                continue;
            }
            let reference = f.round().clamp(0.0, 255.0);
            worst = worst.max((f64::from(t.pixel) - reference).abs());
        }
    }
    writeln!(
        out,
        "pipeline fidelity: max deviation {worst} gray levels over {} unflagged pixels ({flagged} flagged)",
        total - flagged
    )?;
    ok &= worst <= 2.0;
    writeln!(out, "{}", if ok { "check passed" } else { "check FAILED" })?;
    Ok(ok)
}

fn configure_threads() {
    if let Some(n) = std::env::var("QIMG_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
    }
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    configure_threads();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Prepare {
            image,
            scheme,
            out_dir,
            max_n,
            force,
            trace,
            no_circuit,
        } => cmd_prepare(&image, scheme, &out_dir, max_n, force, trace, !no_circuit).map(|r| {
            let _ = writeln!(out, "{}", r.to_json());
            true
        }),
        Command::Cost {
            n,
            q,
            rj,
            curve,
            surface,
        } => cmd_cost(n, q, rj, curve, surface, &mut out).map(|_| true),
        Command::Corpus {
            dir,
            bec,
            max_n,
            force,
            out_dir,
        } => cmd_corpus(&dir, bec, max_n, force, out_dir.as_deref(), &mut out).map(|_| true),
        Command::Check { seed, cases } => cmd_check(seed, cases, &mut out),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("qimg: {e}");
            match e {
                Error::Io(_) => 3,
                Error::Pgm(_) | Error::InvalidImage(_) => 4,
                Error::Domain(_) => 5,
                _ => 1,
            }
        }
    }
}

pub fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    std::process::exit(run(Cli::parse()));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_parse() {
        assert_eq!("4..40".parse::<Span>().unwrap(), Span(4..=40));
        assert_eq!("4..=40".parse::<Span>().unwrap(), Span(4..=40));
        assert_eq!("8".parse::<Span>().unwrap(), Span(8..=8));
        assert!("9..3".parse::<Span>().is_err());
        assert!("x".parse::<Span>().is_err());
    }
}
