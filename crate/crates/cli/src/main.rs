use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use vprecon::io::{self, IoError};
use vprecon::{
    estimate_vp, estimate_vp_pairwise, motion_lines, reconstruct_sequence, render_tracks, verify, Camera,
    MotionPair, SimError, Thresholds, Track, VpError,
};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_GEOMETRY: u8 = 3;

/// Vanishing-point reconstruction of translating objects from keypoint tracks.
#[derive(Parser)]
#[command(name = "vprecon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene file into keypoint tracks.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        tracks_out: PathBuf,
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
    /// Reconstruct 3D trajectories from tracks.
    Reconstruct {
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long)]
        focal: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write one PLY point cloud per frame into this directory.
        #[arg(long)]
        ply_dir: Option<PathBuf>,
    },
    /// Estimate one object's vanishing point between frames I and I+1.
    Vp {
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long)]
        object: u32,
        #[arg(long)]
        interval: u32,
    },
    /// Compare a reconstruction with ground truth.
    Verify {
        #[arg(long)]
        recon: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = Thresholds::default().scale_rel_tol)]
        scale_tol: f64,
        #[arg(long, default_value_t = Thresholds::default().rmse_tol)]
        rmse_tol: f64,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn input(msg: impl ToString) -> Self {
        Self {
            code: EXIT_INPUT,
            msg: msg.to_string(),
        }
    }

    fn geometry(msg: impl ToString) -> Self {
        Self {
            code: EXIT_GEOMETRY,
            msg: msg.to_string(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::input(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate {
            scene,
            tracks_out,
            truth_out,
        } => simulate(&scene, &tracks_out, truth_out.as_deref()),
        Command::Reconstruct {
            tracks,
            focal,
            out,
            ply_dir,
        } => reconstruct(&tracks, focal, &out, ply_dir.as_deref()),
        Command::Vp {
            tracks,
            object,
            interval,
        } => vp(&tracks, object, interval),
        Command::Verify {
            recon,
            truth,
            report,
            scale_tol,
            rmse_tol,
        } => verify_cmd(
            &recon,
            &truth,
            &report,
            Thresholds {
                scale_rel_tol: scale_tol,
                rmse_tol,
            },
        ),
    }
}

fn simulate(scene: &Path, tracks_out: &Path, truth_out: Option<&Path>) -> Result<(), Failure> {
    let spec = io::parse_scene(scene)?;
    let (tracks, truth) = render_tracks(&spec).map_err(|e| match e {
        SimError::Validation(_) => Failure::input(e),
        SimError::DepthViolation { .. } => Failure::geometry(e),
    })?;
    io::write_tracks(tracks_out, &tracks)?;
    if let Some(path) = truth_out {
        io::write_truth(path, &truth)?;
    }
    eprintln!("simulated {} tracks over {} frames", tracks.len(), spec.n_frames);
    Ok(())
}

fn load_tracks(path: &Path) -> Result<Vec<Track>, Failure> {
    let table = io::parse_tracks(path)?;
    if table.unsorted_rows > 0 {
        eprintln!(
            "warning: {} rows were out of (track_id, frame) order",
            table.unsorted_rows
        );
    }
    Ok(table.tracks)
}

fn reconstruct(tracks: &Path, focal: f64, out: &Path, ply_dir: Option<&Path>) -> Result<(), Failure> {
    let cam = Camera::new(focal).map_err(Failure::input)?;
    let tracks = load_tracks(tracks)?;
    let recon = reconstruct_sequence(&cam, &tracks).map_err(Failure::input)?;
    io::write_reconstruction(out, &recon)?;
    if let Some(dir) = ply_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
        io::write_ply(dir, &recon)?;
    }
    eprintln!(
        "reconstructed {} tracks, {} truncated, {} intervals",
        recon.tracks.len(),
        recon.truncated_count(),
        recon.intervals.len()
    );
    if recon.all_intervals_failed() {
        return Err(Failure::geometry("no interval yielded a vanishing point"));
    }
    Ok(())
}

fn vp(tracks: &Path, object: u32, interval: u32) -> Result<(), Failure> {
    let tracks = load_tracks(tracks)?;
    let next = interval
        .checked_add(1)
        .ok_or_else(|| Failure::input("interval out of range"))?;
    let pairs: Vec<MotionPair> = tracks
        .iter()
        .filter(|t| t.object_id == object)
        .filter_map(|t| {
            Some(MotionPair {
                track_id: t.id,
                p: t.at(interval)?,
                q: t.at(next)?,
            })
        })
        .collect();
    let lines = motion_lines(&pairs);
    let geometry = |e: VpError| Failure::geometry(format!("object {object} interval {interval}: {e}"));
    let estimate = estimate_vp(&lines.lines).map_err(geometry)?;
    let pairwise = estimate_vp_pairwise(&lines.lines).map_err(geometry)?;
    let doc = json!({
        "object_id": object,
        "interval": interval,
        "n_pairs": pairs.len(),
        "n_dropped": lines.dropped.len(),
        "estimate": estimate,
        "pairwise": pairwise,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).expect("json values serialize")
    );
    Ok(())
}

fn verify_cmd(recon: &Path, truth: &Path, report: &Path, thresholds: Thresholds) -> Result<(), Failure> {
    let recon = io::read_reconstruction(recon)?;
    let truth = io::parse_truth(truth)?;
    let result = verify(&recon, &truth, thresholds).map_err(Failure::input)?;
    let text = serde_json::to_string_pretty(&result).expect("report serializes");
    std::fs::write(report, text + "\n").map_err(|e| Failure::input(format!("{}: {e}", report.display())))?;
    eprintln!(
        "{}: worst rmse {:e}, worst scale error {:e}, {} truncated",
        if result.passed { "passed" } else { "failed" },
        result.worst_rmse,
        result.worst_scale_rel_error,
        result.truncated_tracks
    );
    Ok(())
}
