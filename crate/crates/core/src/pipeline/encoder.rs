use std::borrow::Cow;
use std::path::Path;
use std::process::Command;

use rayon::prelude::*;
use thiserror::Error;

use super::GopDecision;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("unknown placeholder {{{0}}} in command template")]
    UnknownPlaceholder(String),
    #[error("command template has no {{qp}} placeholder")]
    MissingQp,
    #[error("unbalanced brace at byte {0} of command template")]
    UnbalancedBrace(usize),
    #[error("cannot shell-quote {0:?}")]
    Quote(String),
    #[error("GOP {gop}: failed to start encoder: {source}")]
    Spawn {
        gop: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("GOP {gop}: encoder exited with {status}")]
    Failed { gop: usize, status: String },
    #[error("invalid encoder settings: {0}")]
    Config(String),
}

/// Values substituted into the template besides the per-GOP QP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodeJob {
    pub input: String,
    /// Output path; GOP `g` writes `<stem>_gop<gggg>.<ext>` next to it.
    pub output: String,
    pub gop_length: usize,
    /// Frames in the input; without it every GOP is assumed full.
    pub frame_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedCommand {
    pub gop_index: usize,
    pub qp: i32,
    pub command: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Input,
    Output,
    Qp,
    GopStart,
    GopLen,
}

fn parse_template(template: &str) -> Result<Vec<Piece>, EncoderError> {
    let mut pieces = Vec::new();
    let mut text = String::new();
    let mut chars = template.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '{' if chars.peek().map(|p| p.1) == Some('{') => {
                chars.next();
                text.push('{');
            }
            '}' if chars.peek().map(|p| p.1) == Some('}') => {
                chars.next();
                text.push('}');
            }
            '{' => {
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some((_, '}')) => break,
                        Some((_, '{')) | None => return Err(EncoderError::UnbalancedBrace(i)),
                        Some((_, ch)) => name.push(ch),
                    }
                }
                let piece = match name.as_str() {
                    "input" => Piece::Input,
                    "output" => Piece::Output,
                    "qp" => Piece::Qp,
                    "gop_start" => Piece::GopStart,
                    "gop_len" => Piece::GopLen,
                    _ => return Err(EncoderError::UnknownPlaceholder(name)),
                };
                pieces.push(Piece::Text(std::mem::take(&mut text)));
                pieces.push(piece);
            }
            '}' => return Err(EncoderError::UnbalancedBrace(i)),
            _ => text.push(c),
        }
    }
    pieces.push(Piece::Text(text));
    if !pieces.contains(&Piece::Qp) {
        return Err(EncoderError::MissingQp);
    }
    Ok(pieces)
}

fn gop_output(output: &str, gop_index: usize) -> String {
    let path = Path::new(output);
    let stem = path.file_stem().map_or(Cow::Borrowed(""), |s| s.to_string_lossy());
    let name = match path.extension() {
        Some(ext) => format!("{stem}_gop{gop_index:04}.{}", ext.to_string_lossy()),
        None => format!("{stem}_gop{gop_index:04}"),
    };
    path.with_file_name(name).to_string_lossy().into_owned()
}

fn quote(s: &str) -> Result<String, EncoderError> {
    shlex::try_quote(s)
        .map(Cow::into_owned)
        .map_err(|_| EncoderError::Quote(s.to_owned()))
}

/// One shell command per decision, in order, with `effective_qp` substituted.
/// Nothing is executed.
pub fn encoder_invocation_plan(
    decisions: &[GopDecision],
    template: &str,
    job: &EncodeJob,
) -> Result<Vec<PlannedCommand>, EncoderError> {
    if job.gop_length == 0 {
        return Err(EncoderError::Config("GOP length must be at least 1".into()));
    }
    let pieces = parse_template(template)?;
    let input = quote(&job.input)?;
    decisions
        .iter()
        .map(|d| {
            let start = d.gop_index * job.gop_length;
            let len = job
                .frame_count
                .map_or(job.gop_length, |n| job.gop_length.min(n.saturating_sub(start)));
            let mut command = String::new();
            for p in &pieces {
                match p {
                    Piece::Text(t) => command.push_str(t),
                    Piece::Input => command.push_str(&input),
                    Piece::Output => command.push_str(&quote(&gop_output(&job.output, d.gop_index))?),
                    Piece::Qp => command.push_str(&d.effective_qp.to_string()),
                    Piece::GopStart => command.push_str(&start.to_string()),
                    Piece::GopLen => command.push_str(&len.to_string()),
                }
            }
            Ok(PlannedCommand {
                gop_index: d.gop_index,
                qp: d.effective_qp,
                command,
            })
        })
        .collect()
}

fn execute(cmd: &PlannedCommand) -> Result<(), EncoderError> {
    log::info!("GOP {}: {}", cmd.gop_index, cmd.command);
    let status = Command::new("sh")
        .arg("-c")
        .arg(&cmd.command)
        .status()
        .map_err(|source| EncoderError::Spawn {
            gop: cmd.gop_index,
            source,
        })?;
    if status.success() {
        Ok(())
    } else {
        Err(EncoderError::Failed {
            gop: cmd.gop_index,
            status: status.to_string(),
        })
    }
}

/// Runs the plan through `sh -c`. With `jobs <= 1` commands run one after
/// another and the first failure stops the run; otherwise up to `jobs` run
/// at once and the failure of the earliest GOP is reported.
pub fn run_plan(plan: &[PlannedCommand], jobs: usize) -> Result<(), EncoderError> {
    if jobs <= 1 {
        return plan.iter().try_for_each(execute);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| EncoderError::Config(e.to_string()))?;
    let results: Vec<Result<(), EncoderError>> = pool.install(|| plan.par_iter().map(execute).collect());
    results.into_iter().collect()
}
