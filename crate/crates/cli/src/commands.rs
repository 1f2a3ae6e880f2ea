//! Command implementations.

use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::Path;
use std::time::Duration;

use retouch_core::a2l::{sha256_hex, translate_roc_to_script, Client, ClientError, JobStatus, Server};
use retouch_core::metrics::{self, MetricError};
use retouch_core::render::{self, BitDepth, ImageBuffer, RenderError, Segmentation};
use retouch_core::reward::{total_reward_with_segmentation, RewardConfig, RewardError};
use retouch_core::roc::{format_agent_response, validate_roc, RocDocument, ToolCatalog};

use crate::config::CliConfig;
use crate::grpo::{self, SimParams};
use crate::{CliError, Command, ExitKind};

/// Digits kept for the ×10² / ×10³ presentation columns.
const SCALED_DECIMALS: usize = 4;

const POLL_INTERVAL: Duration = Duration::from_millis(20);

pub fn dispatch(command: &Command, cfg: &CliConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Validate { roc } => validate(roc, cfg, out),
        Command::Reward {
            pred,
            tgt,
            src_image,
            tgt_image,
            segmentation,
        } => reward(pred, tgt, src_image, tgt_image, segmentation.as_deref(), cfg, out),
        Command::Render {
            roc,
            input,
            output,
            segmentation,
        } => render_cmd(roc, input, output, segmentation.as_deref(), cfg, out),
        Command::Metrics { a, b, region } => metrics_cmd(a, b, region.as_deref(), cfg, out),
        Command::Translate { roc } => translate(roc, cfg, out),
        Command::Serve => serve(cfg, out),
        Command::Submit {
            roc,
            image,
            output,
            segmentation,
            script,
            job,
        } => submit(roc, image, output, segmentation.as_deref(), script.as_deref(), job, cfg, out),
        Command::GrpoSim {
            src_image,
            tgt_roc,
            tgt_image,
            n,
            steps,
            sigma,
            eta,
            decay,
            init_offset,
            segmentation,
        } => {
            let params = SimParams {
                n: *n,
                steps: *steps,
                sigma: *sigma,
                eta: *eta,
                decay: *decay,
                init_offset: *init_offset,
                seed: cfg.seed,
                gamma: cfg.gamma,
            };
            grpo_sim(src_image, tgt_roc, tgt_image, segmentation.as_deref(), &params, cfg, out)
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::new(ExitKind::Io, "Io", format!("stdout: {e}")))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn render_code(e: &RenderError) -> &'static str {
    match e {
        RenderError::InvalidImage(_) => "InvalidImage",
        RenderError::DimensionMismatch { .. } => "DimensionMismatch",
        RenderError::MissingSegmentation => "MissingSegmentation",
        RenderError::UnsupportedTool(_) => "UnsupportedTool",
        RenderError::UnexpectedMask(_) => "UnexpectedMask",
        RenderError::InvalidDocument(_) => "InvalidDocument",
        RenderError::Png(_) => "Png",
        RenderError::Cancelled(_) => "Cancelled",
    }
}

fn render_error(context: &Path, e: RenderError) -> CliError {
    let kind = match e {
        RenderError::Png(_) => ExitKind::Io,
        _ => ExitKind::Validation,
    };
    CliError::new(kind, render_code(&e), format!("{}: {e}", context.display()))
}

fn metric_error(e: MetricError) -> CliError {
    let code = match e {
        MetricError::DimensionMismatch { .. } => "DimensionMismatch",
        MetricError::InvalidAlpha(_) => "InvalidAlpha",
    };
    CliError::new(ExitKind::Validation, code, e.to_string())
}

fn reward_error(e: RewardError) -> CliError {
    match e {
        RewardError::Metric(m) => metric_error(m),
        RewardError::Render(r) => {
            let code = render_code(&r);
            CliError::new(ExitKind::Validation, code, r.to_string())
        }
        other => CliError::new(ExitKind::Validation, "Reward", other.to_string()),
    }
}

fn read_image(path: &Path) -> Result<(ImageBuffer, BitDepth), CliError> {
    let bytes = read_bytes(path)?;
    render::read_png(&bytes).map_err(|e| render_error(path, e))
}

fn read_segmentation(path: Option<&Path>) -> Result<Option<Segmentation>, CliError> {
    path.map(|p| {
        let bytes = read_bytes(p)?;
        render::read_segmentation_png(&bytes).map_err(|e| render_error(p, e))
    })
    .transpose()
}

/// Parses a ROC file, reporting every violation in one message.
fn load_roc(path: &Path, catalog: &ToolCatalog) -> Result<RocDocument, CliError> {
    let text = read_text(path)?;
    validate_roc(&text, catalog).map_err(|errors| {
        let first = errors.first().map(|e| e.code()).unwrap_or("Invalid");
        let list: Vec<String> = errors.iter().map(ToString::to_string).collect();
        CliError::new(ExitKind::Validation, first, format!("{}: {}", path.display(), list.join("; ")))
    })
}

fn validate(path: &Path, cfg: &CliConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let catalog = cfg.load_catalog()?;
    let text = read_text(path)?;
    match validate_roc(&text, &catalog) {
        Ok(doc) => emit(
            out,
            &format!("status=ok\ntools={}\nkeys={}\n", doc.len(), doc.total_keys()),
        ),
        Err(errors) => {
            let mut report = format!("status=invalid\nerrors={}\n", errors.len());
            for (i, e) in errors.iter().enumerate() {
                report.push_str(&format!(
                    "error.{i}.code={}\nerror.{i}.position={}\nerror.{i}.message={}\n",
                    e.code(),
                    e.position(),
                    e.to_string().replace('\n', " ")
                ));
            }
            emit(out, &report)?;
            Err(CliError::new(
                ExitKind::Validation,
                errors[0].code(),
                format!("{}: {} violation(s)", path.display(), errors.len()),
            ))
        }
    }
}

/// A prediction file holding tagged agent text is scored as is; a bare ROC
/// is wrapped into a well-formed response first.
pub fn prediction_text(text: &str) -> String {
    if text.contains("<think>") || text.contains("<answer>") {
        text.to_owned()
    } else {
        format_agent_response("", text.trim())
    }
}

fn reward(
    pred: &Path,
    tgt: &Path,
    src_image: &Path,
    tgt_image: &Path,
    segmentation: Option<&Path>,
    cfg: &CliConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let catalog = cfg.load_catalog()?;
    let raw = prediction_text(&read_text(pred)?);
    let target = load_roc(tgt, &catalog)?;
    let (src, _) = read_image(src_image)?;
    let (tgt_img, depth) = read_image(tgt_image)?;
    let seg = read_segmentation(segmentation)?;
    let config = RewardConfig {
        gamma: cfg.gamma,
        edit_depth: Some(depth),
    };
    let breakdown =
        total_reward_with_segmentation(&raw, &target, &src, &tgt_img, seg.as_ref(), &catalog, &config)
            .map_err(reward_error)?;
    emit(out, &breakdown.report())
}

fn render_cmd(
    roc: &Path,
    input: &Path,
    output: &Path,
    segmentation: Option<&Path>,
    cfg: &CliConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let catalog = cfg.load_catalog()?;
    let doc = load_roc(roc, &catalog)?;
    let (img, depth) = read_image(input)?;
    let seg = read_segmentation(segmentation)?;
    let edited = render::apply_roc(&img, &doc, &catalog, seg.as_ref()).map_err(|e| render_error(roc, e))?;
    let bytes = render::write_png(&edited, depth).map_err(|e| render_error(output, e))?;
    write_file(output, &bytes)?;
    emit(
        out,
        &format!(
            "output={}\nwidth={}\nheight={}\nsha256={}\n",
            output.display(),
            edited.width(),
            edited.height(),
            sha256_hex(&bytes)
        ),
    )
}

fn scaled(v: f64, factor: f64) -> String {
    format!("{:.*}", SCALED_DECIMALS, v * factor)
}

fn metrics_cmd(a: &Path, b: &Path, region: Option<&Path>, cfg: &CliConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let (ia, _) = read_image(a)?;
    let (ib, _) = read_image(b)?;
    let l1 = metrics::l1_distance(&ia, &ib).map_err(metric_error)?;
    let l2 = metrics::l2_distance(&ia, &ib).map_err(metric_error)?;
    let mut report = format!(
        "l1={l1:?}\nl2={l2:?}\nl1_x100={}\nl2_x1000={}\n",
        scaled(l1, 1e2),
        scaled(l2, 1e3)
    );
    if let Some(path) = region {
        let bytes = read_bytes(path)?;
        let mask = render::read_mask_png(&bytes).map_err(|e| render_error(path, e))?;
        let rl1 = metrics::region_weighted_l1(&ia, &ib, &mask, cfg.alpha).map_err(metric_error)?;
        let rl2 = metrics::region_weighted_l2(&ia, &ib, &mask, cfg.alpha).map_err(metric_error)?;
        report.push_str(&format!(
            "alpha={:?}\nregion_l1={rl1:?}\nregion_l2={rl2:?}\nregion_l1_x100={}\nregion_l2_x1000={}\n",
            cfg.alpha,
            scaled(rl1, 1e2),
            scaled(rl2, 1e3)
        ));
    }
    emit(out, &report)
}

fn translate(roc: &Path, cfg: &CliConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let catalog = cfg.load_catalog()?;
    let doc = load_roc(roc, &catalog)?;
    let script = translate_roc_to_script(&doc, &catalog)
        .map_err(|e| CliError::new(ExitKind::Validation, "Translate", format!("{}: {e}", roc.display())))?;
    emit(out, &script)
}

fn serve(cfg: &CliConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let catalog = cfg.load_catalog()?;
    let listener = TcpListener::bind(&cfg.bind)
        .map_err(|e| CliError::new(ExitKind::Io, "Io", format!("bind {}: {e}", cfg.bind)))?;
    let addr = listener
        .local_addr()
        .map_err(|e| CliError::new(ExitKind::Io, "Io", e.to_string()))?;
    let server = Server::new(catalog, cfg.server_config());
    emit(
        out,
        &format!("listening={addr}\nworkers={}\ntimeout={:?}\n", cfg.workers, cfg.timeout.as_secs_f64()),
    )?;
    let _ = out.flush();
    server
        .serve_tcp(listener)
        .map_err(|e| CliError::new(ExitKind::Io, "Io", format!("serve: {e}")))
}

fn client_error(e: ClientError) -> CliError {
    match &e {
        ClientError::Wire(_) => CliError::new(ExitKind::Protocol, "Wire", e.to_string()),
        ClientError::Server { code, .. } => CliError::new(ExitKind::Protocol, code.clone(), e.to_string()),
        _ => CliError::new(ExitKind::Protocol, "Protocol", e.to_string()),
    }
}

#[allow(clippy::too_many_arguments)]
fn submit(
    roc: &Path,
    image: &Path,
    output: &Path,
    segmentation: Option<&Path>,
    script: Option<&Path>,
    job: &str,
    cfg: &CliConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let roc_bytes = read_bytes(roc)?;
    let image_bytes = read_bytes(image)?;
    let seg_bytes = segmentation.map(read_bytes).transpose()?;
    let mut client = Client::connect(&cfg.bind)
        .map_err(|e| CliError::new(ExitKind::Io, "Io", format!("connect {}: {e}", cfg.bind)))?;
    client.hello("retouch-cli").map_err(client_error)?;
    client.upload("edit.roc", &roc_bytes).map_err(client_error)?;
    client.upload("source.png", &image_bytes).map_err(client_error)?;
    if let Some(bytes) = &seg_bytes {
        client.upload("segmentation.png", bytes).map_err(client_error)?;
    }
    let seg_name = seg_bytes.as_ref().map(|_| "segmentation.png");
    client
        .exec(job, "edit.roc", "source.png", seg_name)
        .map_err(client_error)?;
    let limit = cfg.timeout * 2 + Duration::from_secs(5);
    let report = client.wait(job, POLL_INTERVAL, limit).map_err(client_error)?;
    if let Some(path) = script {
        if let Ok(dl) = client.script(job) {
            write_file(path, &dl.bytes)?;
        }
    }
    if report.status != JobStatus::Done {
        let (code, message) = report.error.unwrap_or_default();
        return Err(CliError::new(ExitKind::Protocol, code, format!("job {job}: {message}")));
    }
    let download = client.result(job).map_err(client_error)?;
    write_file(output, &download.bytes)?;
    client.bye().map_err(client_error)?;
    emit(
        out,
        &format!(
            "job={job}\nstatus={}\noutput={}\nsha256={}\nbytes={}\n",
            report.status.as_str(),
            output.display(),
            download.digest,
            download.bytes.len()
        ),
    )
}

fn grpo_sim(
    src_image: &Path,
    tgt_roc: &Path,
    tgt_image: &Path,
    segmentation: Option<&Path>,
    params: &SimParams,
    cfg: &CliConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let catalog = cfg.load_catalog()?;
    let target = load_roc(tgt_roc, &catalog)?;
    let (src, _) = read_image(src_image)?;
    let (tgt_img, depth) = read_image(tgt_image)?;
    let seg = read_segmentation(segmentation)?;
    let scene = grpo::Scene {
        src: &src,
        target: &target,
        tgt_img: &tgt_img,
        segmentation: seg.as_ref(),
        catalog: &catalog,
        depth,
    };
    let trace = grpo::simulate(&scene, params)?;
    emit(out, &grpo::format_trace(params, &trace))
}
