use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use isophote::bench::run_bench;
use isophote::inpaint::ced_denoise_with;
use isophote::quality::{format_db, report_with, write_csv, write_json, MetricDomain, PeakConvention, QualityOptions};
use isophote::synth::{generate, SynthKind, SynthSpec};
use isophote::tensor::{eigen_decompose, structure_tensor};
use isophote::{
    load_image, mask_from_color, mask_from_file, report, run_method, save_image, Error, ImageBuffer, Mask, Method,
    QualityReport, Result, RunStats,
};

use crate::args::{BenchArgs, DenoiseArgs, InpaintArgs, MaskArgs, MetricsArgs, SynthArgs};
use crate::config::resolve;

const PROGRESS_EVERY: usize = 100;

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.into(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_error(path))
}

fn resolve_mask(args: &MaskArgs, img: &ImageBuffer) -> Result<Mask> {
    match (&args.mask, &args.mask_color) {
        (Some(path), _) => mask_from_file(path),
        (None, Some(rgb)) if rgb.len() != 3 => Err(Error::InvalidParameter(format!(
            "--mask-color needs 3 values, got {}",
            rgb.len()
        ))),
        (None, Some(rgb)) => mask_from_color(img, [rgb[0], rgb[1], rgb[2]], args.mask_tol),
        (None, None) => Err(Error::InvalidParameter("give --mask FILE or --mask-color R,G,B".into())),
    }
}

/// `out.png` -> `out.iter00100.png`
fn snapshot_path(out: &Path, iteration: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("png");
    out.with_file_name(format!("{stem}.iter{iteration:05}.{ext}"))
}

/// Runs a solver with the progress line and optional snapshots wired in.
fn run_observed(
    label: &str,
    total: usize,
    out: &Path,
    snapshot_every: Option<usize>,
    solve: impl FnOnce(&mut dyn FnMut(usize, f64, &ImageBuffer)) -> Result<(ImageBuffer, RunStats)>,
) -> Result<(ImageBuffer, RunStats)> {
    if snapshot_every == Some(0) {
        return Err(Error::InvalidParameter("--snapshot-every must be >= 1".into()));
    }
    let mut snapshot_err = None;
    let mut observer = |s: usize, max_update: f64, u: &ImageBuffer| {
        if s.is_multiple_of(PROGRESS_EVERY) {
            eprintln!("{label}: iteration {s}/{total}, max update {max_update:.6}");
        }
        if snapshot_err.is_none() && snapshot_every.is_some_and(|n| s.is_multiple_of(n)) {
            snapshot_err = save_image(u, snapshot_path(out, s)).err();
        }
    };
    let result = solve(&mut observer)?;
    match snapshot_err {
        Some(e) => Err(e),
        None => Ok(result),
    }
}

fn print_stats(method: Method, stats: &RunStats) {
    let last = stats.max_updates.last().copied().unwrap_or(0.0);
    println!(
        "method={method} iterations={} seconds={:.3} last_max_update={last}",
        stats.iterations, stats.seconds
    );
}

fn print_report(q: &QualityReport) {
    println!("mse={} psnr={} mssim={}", q.mse, format_db(q.psnr), q.mssim);
}

fn score_against(reference: &Option<PathBuf>, restored: &ImageBuffer) -> Result<()> {
    if let Some(path) = reference {
        print_report(&report(&load_image(path)?, restored)?);
    }
    Ok(())
}

/// Portable float map; rows are stored bottom to top, little endian.
fn write_pfm(path: &Path, width: usize, height: usize, channels: usize, data: &[f32]) -> Result<()> {
    let mut w = create(path)?;
    let tag = if channels == 1 { "Pf" } else { "PF" };
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        write!(w, "{tag}\n{width} {height}\n-1.0\n")?;
        for y in (0..height).rev() {
            for v in &data[y * width * channels..(y + 1) * width * channels] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    };
    write(&mut w).map_err(io_error(path))
}

fn dump_eigen(dir: &Path, img: &ImageBuffer, sigma: f64, rho: f64, eps: f64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    let ef = eigen_decompose(&structure_tensor(img, sigma, rho)?, eps);
    let (w, h) = (ef.width, ef.height);
    let to32 = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<_>>();
    write_pfm(&dir.join("lambda_plus.pfm"), w, h, 1, &to32(&ef.lam_plus))?;
    write_pfm(&dir.join("lambda_minus.pfm"), w, h, 1, &to32(&ef.lam_minus))?;
    let theta: Vec<f32> = ef
        .theta_minus
        .iter()
        .flat_map(|t| [t[0] as f32, t[1] as f32, 0.0])
        .collect();
    write_pfm(&dir.join("theta_minus.pfm"), w, h, 3, &theta)
}

pub fn inpaint(args: &InpaintArgs) -> Result<()> {
    let cfg = resolve(&args.params)?;
    let method: Method = args.method.parse()?;
    if method == Method::Ced {
        return Err(Error::InvalidParameter(
            "ced is not an inpainting method; use the denoise subcommand".into(),
        ));
    }
    let img = load_image(&args.input)?;
    let mask = resolve_mask(&args.mask, &img)?;
    img.check_mask(&mask)?;
    if mask.count() == 0 {
        log::warn!("mask is empty; output equals input");
    }
    let (restored, stats) = run_observed(
        method.name(),
        cfg.params.iterations,
        &args.out,
        args.snapshot_every,
        |obs| run_method(method, &img, &mask, &cfg, Some(obs)),
    )?;
    save_image(&restored, &args.out)?;
    print_stats(method, &stats);
    if let Some(dir) = &args.dump_eigen {
        dump_eigen(dir, &restored, cfg.params.sigma, cfg.params.rho, cfg.params.eps)?;
    }
    score_against(&args.reference, &restored)
}

pub fn denoise(args: &DenoiseArgs) -> Result<()> {
    let cfg = resolve(&args.params)?;
    let img = load_image(&args.input)?;
    let (out, stats) = run_observed("ced", cfg.params.iterations, &args.out, args.snapshot_every, |obs| {
        ced_denoise_with(&img, &cfg.params, cfg.ced, Some(obs))
    })?;
    save_image(&out, &args.out)?;
    print_stats(Method::Ced, &stats);
    score_against(&args.reference, &out)
}

pub fn metrics(args: &MetricsArgs) -> Result<()> {
    let original = load_image(&args.reference)?;
    let restored = load_image(&args.input)?;
    let opts = QualityOptions {
        peak: if args.unsquared_peak {
            PeakConvention::Unsquared
        } else {
            PeakConvention::Squared
        },
        domain: if args.luminance {
            MetricDomain::Luminance
        } else {
            MetricDomain::AllSamples
        },
        ..QualityOptions::standard()
    };
    let q = report_with(&original, &restored, &opts)?;
    print_report(&q);
    if let Some(path) = &args.json {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &q).map_err(|e| Error::Serialize(e.to_string()))?;
        writeln!(w).and_then(|()| w.flush()).map_err(io_error(path))?;
    }
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let cfg = resolve(&args.params)?;
    let (truth, mask, default_name) = match &args.synth {
        Some(kind) => {
            let kind: SynthKind = kind.parse()?;
            let case = generate(&SynthSpec::new(kind, args.size))?;
            (case.truth, case.mask, kind.to_string())
        }
        None => {
            let input = args.input.as_ref().expect("required by the parser");
            let truth = load_image(input)?;
            let mask = mask_from_file(args.mask.as_ref().expect("required by the parser"))?;
            let stem = input
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("image")
                .to_string();
            (truth, mask, stem)
        }
    };
    let name = args.name.clone().unwrap_or(default_name);
    let results = run_bench(&truth, &mask, &cfg, &name, !args.no_timing)?;
    let rows: Vec<_> = results.iter().map(|r| r.row.clone()).collect();
    for r in &rows {
        eprintln!(
            "{:<9} psnr {:>8} dB  mssim {:.4}",
            r.method,
            format_db(r.psnr_db),
            r.mssim
        );
    }
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(io_error(dir))?;
        for r in &results {
            save_image(&r.restored, dir.join(format!("{name}_{}.png", r.row.method)))?;
        }
    }
    if let Some(path) = &args.csv {
        write_csv(&rows, create(path)?)?;
    }
    if let Some(path) = &args.json {
        write_json(&rows, create(path)?)?;
    }
    if args.csv.is_none() && args.json.is_none() {
        write_csv(&rows, std::io::stdout().lock())?;
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let ext = match args.format.as_str() {
        "png" => "png",
        "pnm" if args.channels == 1 => "pgm",
        "pnm" => "ppm",
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown format {other:?} (expected png or pnm)"
            )))
        }
    };
    let spec = SynthSpec {
        channels: args.channels,
        tone_a: args.tone_a,
        tone_b: args.tone_b,
        hole: args.hole,
        period: args.period,
        alpha: args.alpha,
        ..SynthSpec::new(args.kind.parse()?, args.size)
    };
    let case = generate(&spec)?;
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    let mask_ext = if ext == "png" { "png" } else { "pgm" };
    save_image(&case.truth, dir.join(format!("truth.{ext}")))?;
    save_image(&case.damaged, dir.join(format!("damaged.{ext}")))?;
    save_image(&case.mask.to_image(), dir.join(format!("mask.{mask_ext}")))?;
    println!(
        "{} {}x{} hole={} masked={}",
        spec.kind,
        spec.size,
        spec.size,
        spec.hole,
        case.mask.count()
    );
    Ok(())
}
