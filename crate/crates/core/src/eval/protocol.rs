//! File-based generator transport.
//!
//! Every chunk request is staged as files: the context frame as binary PPM
//! (3 channels) or PGM (1 channel), the actions as CSV with one 44-value row
//! per step, and an empty output directory. The request itself is a JSON
//! object:
//!
//! ```text
//! {"id":7,"episode_id":"ep","seed":0,"chunk_index":2,"start_frame":24,
//!  "frames":12,"context":"/stage/…/context.ppm","actions":"/stage/…/actions.csv",
//!  "output_dir":"/stage/…/out"}
//! ```
//!
//! and the generator answers `{"id":7,"frames":["/…/0.ppm", …]}` or
//! `{"id":7,"error":"message"}`. Two transports carry these objects: one line
//! each over a child process's stdin/stdout ([`SubprocessGenerator`]), or as
//! `requests/<key>.json` / `responses/<key>.json` files in a shared directory
//! ([`StagedDirGenerator`]).

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat};
use ndarray::{Array2, Array3, Array4, ArrayView2, ArrayView3, Axis};
use serde::{Deserialize, Serialize};

use super::{ChunkRequest, EvalError, FrameGenerator};
use crate::kinematics::ACTION_WIDTH;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub id: u64,
    pub episode_id: String,
    pub seed: u64,
    pub chunk_index: usize,
    pub start_frame: usize,
    pub frames: usize,
    pub context: PathBuf,
    pub actions: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frames: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn extension(channels: usize) -> Result<&'static str, EvalError> {
    match channels {
        1 => Ok("pgm"),
        3 => Ok("ppm"),
        c => Err(EvalError::Protocol(format!("{c}-channel frames cannot be staged as PNM"))),
    }
}

/// Writes an `H × W × C` frame in `[0, 1]` as 8-bit binary PNM.
pub fn write_frame(path: &Path, frame: ArrayView3<'_, f64>) -> Result<(), EvalError> {
    let (h, w, c) = frame.dim();
    let (subtype, color) = match c {
        1 => (PnmSubtype::Graymap(SampleEncoding::Binary), ExtendedColorType::L8),
        3 => (PnmSubtype::Pixmap(SampleEncoding::Binary), ExtendedColorType::Rgb8),
        _ => return Err(EvalError::Protocol(format!("{c}-channel frames cannot be staged as PNM"))),
    };
    let bytes: Vec<u8> = frame.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let mut out = Vec::with_capacity(bytes.len() + 32);
    PnmEncoder::new(&mut out)
        .with_subtype(subtype)
        .write_image(&bytes, w as u32, h as u32, color)
        .map_err(|e| EvalError::Protocol(format!("encoding {}: {e}", path.display())))?;
    fs::write(path, out).map_err(|e| EvalError::io(path, e))
}

/// Reads an 8-bit PNM frame into `[0, 1]`.
pub fn read_frame(path: &Path) -> Result<Array3<f64>, EvalError> {
    let bytes = fs::read(path).map_err(|e| EvalError::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, ImageFormat::Pnm)
        .map_err(|e| EvalError::Protocol(format!("decoding {}: {e}", path.display())))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (raw, c) = match img.color().channel_count() {
        1 | 2 => (img.into_luma8().into_raw(), 1),
        _ => (img.into_rgb8().into_raw(), 3),
    };
    Ok(Array3::from_shape_vec((h, w, c), raw.into_iter().map(|b| b as f64 / 255.0).collect())
        .expect("decoded buffer matches its dimensions"))
}

pub fn write_actions(path: &Path, actions: ArrayView2<'_, f64>) -> Result<(), EvalError> {
    let mut text = String::new();
    for row in actions.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| EvalError::io(path, e))
}

pub fn read_actions(path: &Path) -> Result<Array2<f64>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
    let mut values = Vec::new();
    let mut rows = 0;
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| EvalError::Protocol(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if row.len() != ACTION_WIDTH {
            return Err(EvalError::Protocol(format!(
                "{}:{}: {} values, expected {ACTION_WIDTH}",
                path.display(),
                n + 1,
                row.len()
            )));
        }
        values.extend(row);
        rows += 1;
    }
    Ok(Array2::from_shape_vec((rows, ACTION_WIDTH), values).expect("row widths checked"))
}

fn request_key(r: &ChunkRequest<'_>) -> String {
    let episode: String =
        r.episode_id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    format!("{episode}-s{}-c{}", r.seed, r.chunk_index)
}

/// Stages context, actions and output directory for one request.
fn stage_request(stage: &Path, id: u64, r: &ChunkRequest<'_>) -> Result<(String, WireRequest), EvalError> {
    let key = request_key(r);
    let dir = stage.join("chunks").join(&key);
    let out = dir.join("out");
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| EvalError::io(&dir, e))?;
    }
    fs::create_dir_all(&out).map_err(|e| EvalError::io(&out, e))?;
    let context = dir.join(format!("context.{}", extension(r.context.dim().2)?));
    write_frame(&context, r.context)?;
    let actions = dir.join("actions.csv");
    write_actions(&actions, r.actions)?;
    let request = WireRequest {
        id,
        episode_id: r.episode_id.to_string(),
        seed: r.seed,
        chunk_index: r.chunk_index,
        start_frame: r.start_frame,
        frames: r.actions.nrows(),
        context,
        actions,
        output_dir: out,
    };
    Ok((key, request))
}

fn collect_frames(
    request: &WireRequest,
    response: WireResponse,
    shape: (usize, usize, usize),
) -> Result<Array4<f64>, EvalError> {
    if let Some(err) = response.error {
        return Err(EvalError::Generator(err));
    }
    if response.frames.len() != request.frames {
        return Err(EvalError::Protocol(format!(
            "request {} asked for {} frames, got {}",
            request.id,
            request.frames,
            response.frames.len()
        )));
    }
    let mut out = Array4::zeros((request.frames, shape.0, shape.1, shape.2));
    for (i, path) in response.frames.iter().enumerate() {
        let frame = read_frame(path)?;
        if frame.dim() != shape {
            return Err(EvalError::Protocol(format!("{} is {:?}, expected {:?}", path.display(), frame.dim(), shape)));
        }
        out.index_axis_mut(Axis(0), i).assign(&frame);
    }
    Ok(out)
}

struct GeneratorProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

/// Generator driven through a child process speaking line-delimited JSON.
pub struct SubprocessGenerator {
    proc: Mutex<GeneratorProcess>,
    stage: PathBuf,
    timeout: Duration,
    next_id: AtomicU64,
}

impl SubprocessGenerator {
    /// Spawns `program args…`; chunk files are staged under `stage`.
    pub fn spawn(program: &str, args: &[String], stage: &Path, timeout: Duration) -> Result<Self, EvalError> {
        fs::create_dir_all(stage).map_err(|e| EvalError::io(stage, e))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| EvalError::io(program, e))?;
        let stdin = child.stdin.take().expect("stdin piped");
        let stdout = child.stdout.take().expect("stdout piped");
        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SubprocessGenerator {
            proc: Mutex::new(GeneratorProcess { child, stdin, lines }),
            stage: stage.to_path_buf(),
            timeout,
            next_id: AtomicU64::new(0),
        })
    }
}

impl FrameGenerator for SubprocessGenerator {
    fn generate(&self, r: &ChunkRequest<'_>) -> Result<Array4<f64>, EvalError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let (_, request) = stage_request(&self.stage, id, r)?;
        let mut proc = self.proc.lock().unwrap_or_else(|p| p.into_inner());
        let line = serde_json::to_string(&request).expect("request serializes");
        writeln!(proc.stdin, "{line}")
            .and_then(|_| proc.stdin.flush())
            .map_err(|e| EvalError::Protocol(format!("writing to generator: {e}")))?;
        let deadline = Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match proc.lines.recv_timeout(left) {
                Ok(line) => {
                    let response: WireResponse = match serde_json::from_str(&line) {
                        Ok(resp) => resp,
                        Err(e) => return Err(EvalError::Protocol(format!("bad response `{line}`: {e}"))),
                    };
                    if response.id != id {
                        log::debug!("discarding stale response {}", response.id);
                        continue;
                    }
                    return collect_frames(&request, response, r.context.dim());
                }
                Err(RecvTimeoutError::Timeout) => return Err(EvalError::Timeout(self.timeout)),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(EvalError::Protocol("generator closed its output".into()))
                }
            }
        }
    }
}

impl Drop for SubprocessGenerator {
    fn drop(&mut self) {
        let proc = self.proc.get_mut().unwrap_or_else(|p| p.into_inner());
        let _ = proc.child.kill();
        let _ = proc.child.wait();
    }
}

/// Generator reached through request/response files in a shared directory.
pub struct StagedDirGenerator {
    stage: PathBuf,
    timeout: Duration,
    poll: Duration,
    next_id: AtomicU64,
}

impl StagedDirGenerator {
    pub fn new(stage: &Path, timeout: Duration, poll: Duration) -> Result<Self, EvalError> {
        for sub in ["requests", "responses"] {
            let dir = stage.join(sub);
            fs::create_dir_all(&dir).map_err(|e| EvalError::io(&dir, e))?;
        }
        Ok(StagedDirGenerator { stage: stage.to_path_buf(), timeout, poll, next_id: AtomicU64::new(0) })
    }
}

/// Writes via a temporary sibling and rename so readers never see partial files.
fn write_atomic(path: &Path, text: &str) -> Result<(), EvalError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| EvalError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| EvalError::io(path, e))
}

impl FrameGenerator for StagedDirGenerator {
    fn generate(&self, r: &ChunkRequest<'_>) -> Result<Array4<f64>, EvalError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let (key, request) = stage_request(&self.stage, id, r)?;
        let response_path = self.stage.join("responses").join(format!("{key}.json"));
        if response_path.exists() {
            fs::remove_file(&response_path).map_err(|e| EvalError::io(&response_path, e))?;
        }
        let request_path = self.stage.join("requests").join(format!("{key}.json"));
        write_atomic(&request_path, &serde_json::to_string(&request).expect("request serializes"))?;
        let deadline = Instant::now() + self.timeout;
        loop {
            if let Ok(text) = fs::read_to_string(&response_path) {
                let response: WireResponse = serde_json::from_str(&text)
                    .map_err(|e| EvalError::Protocol(format!("{}: {e}", response_path.display())))?;
                if response.id == id {
                    let _ = fs::remove_file(&request_path);
                    let _ = fs::remove_file(&response_path);
                    return collect_frames(&request, response, r.context.dim());
                }
            }
            if Instant::now() >= deadline {
                let _ = fs::remove_file(&request_path);
                return Err(EvalError::Timeout(self.timeout));
            }
            std::thread::sleep(self.poll);
        }
    }
}

/// Answers one wire request with `generator`, writing frames into the
/// request's output directory.
pub fn answer(request: &WireRequest, generator: &dyn FrameGenerator) -> WireResponse {
    let result = (|| {
        let context = read_frame(&request.context)?;
        let actions = read_actions(&request.actions)?;
        let chunk = ChunkRequest {
            episode_id: &request.episode_id,
            seed: request.seed,
            chunk_index: request.chunk_index,
            start_frame: request.start_frame,
            context: context.view(),
            actions: actions.view(),
        };
        let frames = generator.generate(&chunk)?;
        let ext = extension(context.dim().2)?;
        let mut paths = Vec::new();
        for (i, frame) in frames.axis_iter(Axis(0)).enumerate() {
            let path = request.output_dir.join(format!("{i:03}.{ext}"));
            write_frame(&path, frame)?;
            paths.push(path);
        }
        Ok::<_, EvalError>(paths)
    })();
    match result {
        Ok(frames) => WireResponse { id: request.id, frames, error: None },
        Err(e) => WireResponse { id: request.id, frames: Vec::new(), error: Some(e.to_string()) },
    }
}

/// Serves line-delimited requests until end of input.
pub fn serve_lines(
    input: impl BufRead,
    mut output: impl Write,
    generator: &dyn FrameGenerator,
) -> Result<(), EvalError> {
    for line in input.lines() {
        let line = line.map_err(|e| EvalError::io("<stdin>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let request: WireRequest =
            serde_json::from_str(&line).map_err(|e| EvalError::Protocol(format!("bad request: {e}")))?;
        let response = answer(&request, generator);
        writeln!(output, "{}", serde_json::to_string(&response).expect("response serializes"))
            .and_then(|_| output.flush())
            .map_err(|e| EvalError::io("<stdout>", e))?;
    }
    Ok(())
}

/// Serves a staged directory until `stop` is raised.
pub fn serve_staged(
    stage: &Path,
    generator: &dyn FrameGenerator,
    poll: Duration,
    stop: &AtomicBool,
) -> Result<(), EvalError> {
    let requests = stage.join("requests");
    let responses = stage.join("responses");
    while !stop.load(Ordering::Relaxed) {
        let mut pending: Vec<PathBuf> = match fs::read_dir(&requests) {
            Ok(entries) => entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect(),
            Err(_) => Vec::new(),
        };
        pending.sort();
        for path in pending {
            let Ok(text) = fs::read_to_string(&path) else { continue };
            let Ok(request) = serde_json::from_str::<WireRequest>(&text) else { continue };
            let target = responses.join(path.file_name().expect("listed file has a name"));
            let answered = fs::read_to_string(&target)
                .ok()
                .and_then(|t| serde_json::from_str::<WireResponse>(&t).ok())
                .is_some_and(|r| r.id == request.id);
            if answered {
                continue;
            }
            let response = answer(&request, generator);
            write_atomic(&target, &serde_json::to_string(&response).expect("response serializes"))?;
        }
        std::thread::sleep(poll);
    }
    Ok(())
}
