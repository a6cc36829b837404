//! Subcommand bodies. Each one validates its inputs and builds every
//! output in memory before touching the output directory.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use elasto::init::{dp_initialize, ncc_track};
use elasto::io::{self, AnyField};
use elasto::metrics::{psnr_db, sweep, MetricsReport};
use elasto::phantom::{add_noise, analytic_displacement, generate_speckle, warp_frame, DEFAULT_WARP_ITERATIONS};
use elasto::render::{render_pnm, Colormap};
use elasto::solver::{run_tracking, update_epr};
use elasto::strain::compute_strains;
use elasto::{DisplacementField, EprField, Geometry, RfFrame};

use crate::config::{RunConfig, TrackMethod};
use crate::{CliError, Outcome};

/// Files to be written, in order.
#[derive(Default)]
struct Outputs(Vec<(PathBuf, Vec<u8>)>);

impl Outputs {
    fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.0.push((path, bytes));
    }

    fn encode<F>(&mut self, path: PathBuf, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> elasto::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf).map_err(CliError::core(format!("encoding {}", path.display())))?;
        self.add(path, buf);
        Ok(())
    }

    fn frame(&mut self, path: PathBuf, frame: &RfFrame) -> Result<(), CliError> {
        self.encode(sidecar(&path), |b| io::write_metadata(frame.geometry(), b))?;
        self.encode(path, |b| io::write_frame(frame, b))
    }

    fn flush(self, dir: &Path) -> Result<(), CliError> {
        let err = |path: &Path| {
            let path = path.display().to_string();
            move |source| CliError::Write { path, source }
        };
        std::fs::create_dir_all(dir).map_err(err(dir))?;
        for (path, bytes) in self.0 {
            std::fs::write(&path, bytes).map_err(err(&path))?;
        }
        Ok(())
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn required(arg: Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    arg.or_else(|| configured.clone())
        .ok_or_else(|| CliError::Usage(format!("missing {what} path (argument or [io] {what})")))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))
}

/// Geometry from `<path>.meta` when present, the configured one otherwise.
fn geometry_for(path: &Path, cfg: &RunConfig) -> Result<Geometry, CliError> {
    let meta = sidecar(path);
    if meta.exists() {
        io::read_metadata(open(&meta)?).map_err(CliError::core(meta.display().to_string()))
    } else {
        Ok(cfg.phantom.speckle.geometry)
    }
}

fn read_frame(path: &Path, cfg: &RunConfig) -> Result<RfFrame, CliError> {
    let geometry = geometry_for(path, cfg)?;
    io::read_frame(open(path)?)
        .and_then(|f| f.with_geometry(geometry))
        .map_err(CliError::core(path.display().to_string()))
}

fn read_field(path: &Path) -> Result<AnyField, CliError> {
    io::read_any(open(path)?).map_err(CliError::core(path.display().to_string()))
}

fn param_error(what: &str) -> impl FnOnce(elasto::Error) -> CliError + '_ {
    move |e| CliError::Usage(format!("invalid {what}: {e}"))
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let speckle = &cfg.phantom.speckle;
    let deformation = &cfg.phantom.deformation;
    speckle.validate().map_err(param_error("[phantom.speckle]"))?;
    deformation
        .validate((speckle.rows, speckle.cols))
        .map_err(param_error("[phantom.deformation]"))?;

    let clean_spec = elasto::phantom::PhantomSpec {
        noise_snr_db: None,
        ..speckle.clone()
    };
    let clean = generate_speckle(&clean_spec).map_err(CliError::core("phantom"))?;
    let truth = analytic_displacement(deformation, clean.dim()).map_err(CliError::core("ground truth"))?;
    let warped = warp_frame(&clean, &truth.displacement, DEFAULT_WARP_ITERATIONS)
        .map_err(CliError::core("warping"))?
        .frame;
    let (pre, post) = match speckle.noise_snr_db {
        Some(db) => (
            add_noise(&clean, db, speckle.seed).map_err(CliError::core("noise"))?,
            add_noise(&warped, db, speckle.seed.wrapping_add(1)).map_err(CliError::core("noise"))?,
        ),
        None => (clean, warped),
    };

    let dir = cfg.out_dir();
    let mut out = Outputs::default();
    out.frame(dir.join("pre.efr"), &pre)?;
    out.frame(dir.join("post.efr"), &post)?;
    out.encode(dir.join("truth_displacement.edf"), |b| {
        io::write_displacement(&truth.displacement, b)
    })?;
    out.encode(dir.join("truth_strain.esf"), |b| io::write_strain(&truth.strain, b))?;
    out.encode(dir.join("truth_epr.epf"), |b| io::write_epr(&truth.epr, b))?;
    out.flush(&dir)?;
    Ok(Outcome::Done)
}

fn cost_csv(trace: &[f64]) -> Vec<u8> {
    let mut s = String::from("iteration,cost\n");
    for (i, c) in trace.iter().enumerate() {
        let _ = writeln!(s, "{i},{c:?}");
    }
    s.into_bytes()
}

pub fn track(cfg: &RunConfig, pre: Option<PathBuf>, post: Option<PathBuf>) -> Result<Outcome, CliError> {
    let method = cfg.method()?;
    let params = &cfg.solver.params;
    params.validate().map_err(param_error("[solver.params]"))?;
    cfg.strain.validate().map_err(param_error("[strain]"))?;
    let pre_path = required(pre, &cfg.io.pre, "pre")?;
    let post_path = required(post, &cfg.io.post, "post")?;
    let pre = read_frame(&pre_path, cfg)?;
    let post = read_frame(&post_path, cfg)?;
    if pre.dim() != post.dim() {
        return Err(CliError::Usage(format!(
            "frame shapes differ: {} is {:?}, {} is {:?}",
            pre_path.display(),
            pre.dim(),
            post_path.display(),
            post.dim()
        )));
    }

    let dir = cfg.out_dir();
    let mut out = Outputs::default();
    let displacement_path = dir.join("displacement.edf");
    let baseline = |d: elasto::Result<DisplacementField>| d.map_err(CliError::core(format!("{method} tracking")));
    let outcome = match method {
        TrackMethod::Ncc => {
            let d = baseline(ncc_track(&pre, &post, &cfg.solver.ncc))?;
            out.encode(displacement_path, |b| io::write_displacement(&d, b))?;
            Outcome::Done
        }
        TrackMethod::Dp => {
            let d = baseline(dp_initialize(&pre, &post, &params.dp))?;
            out.encode(displacement_path, |b| io::write_displacement(&d, b))?;
            Outcome::Done
        }
        TrackMethod::Solver(m) => {
            let r = run_tracking(&pre, &post, m, params, None).map_err(CliError::core(format!("{method} tracking")))?;
            out.encode(displacement_path, |b| io::write_displacement(&r.displacement, b))?;
            out.encode(dir.join("strain.esf"), |b| io::write_strain(&r.strains, b))?;
            out.encode(dir.join("epr.epf"), |b| io::write_epr(&r.epr, b))?;
            out.add(dir.join("cost_trace.csv"), cost_csv(&r.cost_trace));
            if r.converged {
                Outcome::Done
            } else {
                Outcome::NotConverged
            }
        }
    };
    out.flush(&dir)?;
    Ok(outcome)
}

pub fn strain(cfg: &RunConfig, field: Option<PathBuf>) -> Result<Outcome, CliError> {
    let params = &cfg.solver.params;
    params.validate().map_err(param_error("[solver.params]"))?;
    cfg.strain.validate().map_err(param_error("[strain]"))?;
    let path = required(field, &cfg.io.field, "field")?;
    let d = match read_field(&path)? {
        AnyField::Displacement(d) => d,
        _ => return Err(CliError::Usage(format!("{} is not a displacement file", path.display()))),
    };
    let strains = compute_strains(&d, &cfg.strain);
    let start = EprField::constant(d.dim(), params.nu_init);
    let epr = update_epr(&strains, params, &start).map_err(CliError::core("EPR estimation"))?;

    let dir = cfg.out_dir();
    let mut out = Outputs::default();
    out.encode(dir.join("strain.esf"), |b| io::write_strain(&strains, b))?;
    out.encode(dir.join("epr.epf"), |b| io::write_epr(&epr, b))?;
    out.flush(&dir)?;
    Ok(Outcome::Done)
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.6e}")
    }
}

fn fmt_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.2}")
    }
}

fn metrics_csv(reports: &[(&str, MetricsReport)], with_truth: bool) -> (String, String) {
    let mut windows = String::from("component,metric,target,window,row,col,value\n");
    let mut summary = String::from("component,");
    if with_truth {
        summary.push_str("rmse,psnr_db,");
    }
    summary.push_str("snr_mean,snr_std,snr_count,snr_excluded,cnr_mean,cnr_std,cnr_count,cnr_excluded\n");
    for (name, r) in reports {
        for (b, (w, v)) in r.background_windows.iter().zip(&r.snr_values).enumerate() {
            let _ = writeln!(windows, "{name},snr,,{b},{},{},{}", w.row, w.col, fmt_value(*v));
        }
        let nb = r.background_windows.len();
        for (k, v) in r.cnr_values.iter().enumerate() {
            let (t, b) = (k / nb, k % nb);
            let w = &r.background_windows[b];
            let _ = writeln!(windows, "{name},cnr,{t},{b},{},{},{}", w.row, w.col, fmt_value(*v));
        }
        let _ = write!(summary, "{name},");
        if with_truth {
            let rmse = r.rmse.unwrap_or(f64::NAN);
            let _ = write!(summary, "{},{},", fmt_value(rmse), fmt_psnr(r.psnr_db.unwrap_or(psnr_db(rmse))));
        }
        let (s, c) = (&r.snr_summary, &r.cnr_summary);
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            fmt_value(s.mean),
            fmt_value(s.std),
            s.count,
            s.excluded,
            fmt_value(c.mean),
            fmt_value(c.std),
            c.count,
            c.excluded
        );
    }
    (windows, summary)
}

pub fn metrics(cfg: &RunConfig, estimate: Option<PathBuf>, truth: Option<PathBuf>) -> Result<Outcome, CliError> {
    let est_path = required(estimate, &cfg.io.estimate, "estimate")?;
    let truth_path = truth.or_else(|| cfg.io.truth.clone());
    let geometry = geometry_for(&est_path, cfg)?;
    let est = read_field(&est_path)?;
    let truth = truth_path.as_deref().map(read_field).transpose()?;
    let est_parts = est.components();
    let truth_parts = truth.as_ref().map(|t| t.components());
    if let Some(tp) = &truth_parts {
        if !tp.iter().map(|p| p.0).eq(est_parts.iter().map(|p| p.0)) {
            return Err(CliError::Usage("estimate and truth files hold different field kinds".into()));
        }
    }

    let mut reports = Vec::new();
    for (k, (name, field)) in est_parts.iter().enumerate() {
        let mut report = sweep(field, &cfg.metrics, &geometry).map_err(param_error("[metrics]"))?;
        if let Some(tp) = &truth_parts {
            report = report
                .with_truth(field, tp[k].1, None)
                .map_err(CliError::core(format!("comparing {name}")))?;
        }
        reports.push((*name, report));
    }
    let (windows, summary) = metrics_csv(&reports, truth_parts.is_some());
    print!("{summary}");

    let dir = cfg.out_dir();
    let mut out = Outputs::default();
    out.add(dir.join("windows.csv"), windows.into_bytes());
    out.add(dir.join("summary.csv"), summary.into_bytes());
    out.flush(&dir)?;
    Ok(Outcome::Done)
}

pub fn render(cfg: &RunConfig, field: Option<PathBuf>) -> Result<Outcome, CliError> {
    let path = required(field, &cfg.io.field, "field")?;
    let data = read_field(&path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("field").to_string();
    let ext = match cfg.render.colormap {
        Colormap::Gray => "pgm",
        Colormap::Jet => "ppm",
    };
    let parts = data.components();
    let dir = cfg.out_dir();
    let mut out = Outputs::default();
    for (name, grid) in &parts {
        let file = if parts.len() == 1 {
            format!("{stem}.{ext}")
        } else {
            format!("{stem}_{name}.{ext}")
        };
        let image = render_pnm(grid, &cfg.render).map_err(param_error("[render]"))?;
        out.add(dir.join(file), image);
    }
    out.flush(&dir)?;
    Ok(Outcome::Done)
}
