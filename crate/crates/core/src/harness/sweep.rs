use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{io_err, run_eval, train_agent, EvalReport, HarnessError, RunConfig};
use crate::agents::AgentKind;
use crate::pareto::{dominates, write_archive_csv, ArchiveRow, ObjectivePoint, ParetoArchive};
use crate::reward::{Weights, NUM_OBJECTIVES};

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub archive: ParetoArchive,
    /// One row per grid cell, in grid order.
    pub rows: Vec<ArchiveRow>,
    pub csv_path: PathBuf,
    /// Each cell's metrics file, in grid order (failed cells may lack one).
    pub metrics_paths: Vec<PathBuf>,
}

/// All vectors in {0, 0.5, 1}⁴ except the zero vector (80 cells).
pub fn default_weight_grid() -> Vec<[f64; NUM_OBJECTIVES]> {
    const LEVELS: [f64; 3] = [0.0, 0.5, 1.0];
    let mut grid = Vec::with_capacity(80);
    for a in LEVELS {
        for b in LEVELS {
            for c in LEVELS {
                for d in LEVELS {
                    if [a, b, c, d] != [0.0; 4] {
                        grid.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    grid
}

/// Reads one weight vector per line (comma or whitespace separated, `#`
/// comments allowed).
pub fn parse_weight_grid(path: &Path) -> Result<Vec<[f64; NUM_OBJECTIVES]>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut grid = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |message: String| HarnessError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let vals: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| perr(format!("bad weight `{s}`"))))
            .collect::<Result<_, _>>()?;
        let w: [f64; NUM_OBJECTIVES] = vals
            .try_into()
            .map_err(|v: Vec<f64>| perr(format!("expected {NUM_OBJECTIVES} weights, got {}", v.len())))?;
        grid.push(w);
    }
    if grid.is_empty() {
        return Err(HarnessError::Invalid(format!("{}: weight grid is empty", path.display())));
    }
    Ok(grid)
}

/// Seed of each cell: the base seed plus the index of the first cell with
/// the same weights, so repeated weight vectors reproduce the same run.
fn cell_seeds(base: u64, grid: &[[f64; NUM_OBJECTIVES]]) -> Vec<u64> {
    (0..grid.len())
        .map(|i| {
            let first = grid.iter().position(|w| w == &grid[i]).expect("present");
            base.wrapping_add(first as u64)
        })
        .collect()
}

struct CellResult {
    report: Result<EvalReport, HarnessError>,
    checkpoint: PathBuf,
    metrics: PathBuf,
}

fn run_cell(base: &RunConfig, index: usize, weights: [f64; NUM_OBJECTIVES], seed: u64) -> CellResult {
    let dir = base.output_dir.join(format!("cell_{index:03}"));
    let checkpoint = dir.join("final.ckpt");
    let metrics = dir.join("metrics.csv");
    let report = (|| {
        let cfg = RunConfig {
            algo: AgentKind::MoTd3,
            morl_weights: Some(Weights::new(weights)?),
            episodes: base.sweep_episodes,
            seed,
            output_dir: dir.clone(),
            ..base.clone()
        };
        let run = train_agent(&cfg)?;
        run_eval(&cfg, &run.final_checkpoint)
    })();
    if let Err(e) = &report {
        log::warn!("sweep cell {index} ({weights:?}) failed: {e}");
    } else {
        log::info!("sweep cell {index} ({weights:?}) done");
    }
    CellResult {
        report,
        checkpoint,
        metrics,
    }
}

/// Trains and evaluates one MO-TD3 agent per weight vector, archives the
/// nondominated evaluation vectors and writes `archive.csv` under
/// `base.output_dir`. The base config's `algo` and `morl_weights` are
/// ignored; cells train for `base.sweep_episodes` episodes. A failing cell
/// is recorded in the CSV and does not abort the sweep.
pub fn run_weight_sweep(base: &RunConfig, grid: &[[f64; NUM_OBJECTIVES]]) -> Result<SweepOutcome, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::Invalid("weight grid is empty".into()));
    }
    if base.sweep_episodes < 1 {
        return Err(HarnessError::Invalid("sweep.episodes must be >= 1".into()));
    }
    let out = &base.output_dir;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let seeds = cell_seeds(base.seed, grid);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(base.sweep_workers)
        .build()
        .map_err(|e| HarnessError::Invalid(format!("cannot start sweep workers: {e}")))?;
    let results: Vec<CellResult> = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, w)| run_cell(base, i, *w, seeds[i]))
            .collect()
    });

    let mut archive = ParetoArchive::new(NUM_OBJECTIVES);
    let points: Vec<Option<Vec<f64>>> = results
        .iter()
        .map(|r| r.report.as_ref().ok().map(|rep| rep.mean_objective_vector.to_vec()))
        .collect();
    for (r, p) in results.iter().zip(&points) {
        if let Some(v) = p {
            archive.insert(ObjectivePoint::new(v.clone(), r.checkpoint.display().to_string()))?;
        }
    }
    let rows: Vec<ArchiveRow> = results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let objectives = points[i].clone();
            let on_front = objectives.as_ref().is_some_and(|v| {
                let me = ObjectivePoint::untagged(v.clone());
                !points
                    .iter()
                    .flatten()
                    .any(|o| dominates(&ObjectivePoint::untagged(o.clone()), &me).unwrap_or(false))
            });
            ArchiveRow {
                weights: grid[i].to_vec(),
                seed: seeds[i],
                objectives,
                on_front,
                location: match &r.report {
                    Ok(_) => r.checkpoint.display().to_string(),
                    Err(e) => format!("failed: {e}"),
                },
            }
        })
        .collect();
    let csv_path = out.join("archive.csv");
    let file = File::create(&csv_path).map_err(io_err(&csv_path))?;
    write_archive_csv(file, &rows, NUM_OBJECTIVES).map_err(|e| HarnessError::Io {
        path: csv_path.clone(),
        source: std::io::Error::other(e),
    })?;
    Ok(SweepOutcome {
        archive,
        rows,
        csv_path,
        metrics_paths: results.into_iter().map(|r| r.metrics).collect(),
    })
}
