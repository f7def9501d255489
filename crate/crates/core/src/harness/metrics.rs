use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::{io_err, HarnessError};
use crate::reward::{EpisodeStatus, RewardVector};

pub const METRICS_HEADER: [&str; 11] = [
    "episode",
    "total_reward",
    "r_goal",
    "r_safety",
    "r_motion",
    "r_time",
    "steps",
    "status",
    "critic_loss",
    "actor_loss",
    "explore",
];

/// Per-episode training summary. Losses are episode means over the updates
/// performed, NaN when there were none.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub total_reward: f64,
    pub reward_vector: RewardVector,
    pub steps: u32,
    pub status: EpisodeStatus,
    pub critic_loss: f64,
    pub actor_loss: f64,
    /// Epsilon for DQN, Gaussian sigma otherwise.
    pub explore: f64,
}

impl EpisodeRecord {
    fn fields(&self) -> [String; 11] {
        let v = self.reward_vector.as_array();
        [
            self.episode.to_string(),
            self.total_reward.to_string(),
            v[0].to_string(),
            v[1].to_string(),
            v[2].to_string(),
            v[3].to_string(),
            self.steps.to_string(),
            self.status.to_string(),
            self.critic_loss.to_string(),
            self.actor_loss.to_string(),
            self.explore.to_string(),
        ]
    }
}

/// Appends one flushed row per episode so partial runs keep their log.
pub struct MetricsWriter {
    path: PathBuf,
    out: csv::Writer<BufWriter<File>>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self, HarnessError> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = Self {
            path: path.to_path_buf(),
            out: csv::Writer::from_writer(BufWriter::new(file)),
        };
        w.write(&METRICS_HEADER)?;
        Ok(w)
    }

    pub fn append(&mut self, r: &EpisodeRecord) -> Result<(), HarnessError> {
        self.write(&r.fields())
    }

    fn write<S: AsRef<[u8]>>(&mut self, rec: &[S]) -> Result<(), HarnessError> {
        let path = self.path.clone();
        self.out.write_record(rec).map_err(|e| csv_io(&path, e))?;
        self.out.flush().map_err(io_err(&path))
    }
}

fn csv_io(path: &Path, e: csv::Error) -> HarnessError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path)(source),
        other => HarnessError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<EpisodeRecord>, HarnessError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(file);
    let perr = |line: usize, message: String| HarnessError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut records = rd.records();
    match records.next() {
        Some(Ok(h)) if h.iter().eq(METRICS_HEADER) => {}
        Some(Ok(_)) => return Err(perr(1, format!("header must be `{}`", METRICS_HEADER.join(",")))),
        Some(Err(e)) => return Err(csv_io(path, e)),
        None => return Err(perr(1, "empty metrics file".into())),
    }
    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_io(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != METRICS_HEADER.len() {
            return Err(perr(line, format!("expected {} fields, got {}", METRICS_HEADER.len(), rec.len())));
        }
        let f = |i: usize| -> Result<f64, HarnessError> {
            rec[i]
                .parse()
                .map_err(|_| perr(line, format!("bad {} value `{}`", METRICS_HEADER[i], &rec[i])))
        };
        out.push(EpisodeRecord {
            episode: rec[0].parse().map_err(|_| perr(line, format!("bad episode `{}`", &rec[0])))?,
            total_reward: f(1)?,
            reward_vector: RewardVector::new(f(2)?, f(3)?, f(4)?, f(5)?),
            steps: rec[6].parse().map_err(|_| perr(line, format!("bad steps `{}`", &rec[6])))?,
            status: rec[7].parse().map_err(|_| perr(line, format!("bad status `{}`", &rec[7])))?,
            critic_loss: f(8)?,
            actor_loss: f(9)?,
            explore: f(10)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(i: usize) -> EpisodeRecord {
        EpisodeRecord {
            episode: i,
            total_reward: -12.5 + i as f64,
            reward_vector: RewardVector::new(0.1, -20.0, 7.4, -1.0 - i as f64),
            steps: 17,
            status: EpisodeStatus::CollisionObstacle,
            critic_loss: 0.25,
            actor_loss: f64::NAN,
            explore: 0.1,
        }
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        let mut w = MetricsWriter::create(&path).unwrap();
        for i in 0..3 {
            w.append(&record(i)).unwrap();
        }
        drop(w);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), METRICS_HEADER.join(","));
        assert_eq!(text.lines().nth(1).unwrap(), "0,-12.5,0.1,-20,7.4,-1,17,COLLISION_OBSTACLE,0.25,NaN,0.1");
        let back = read_metrics(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[2].total_reward, record(2).total_reward);
        assert!(back[2].actor_loss.is_nan());
        assert_eq!(back[1].status, EpisodeStatus::CollisionObstacle);
    }

    #[test]
    fn rows_are_flushed_immediately() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let mut w = MetricsWriter::create(&path).unwrap();
        w.append(&record(0)).unwrap();
        assert_eq!(read_metrics(&path).unwrap().len(), 1);
    }

    #[test]
    fn malformed_rows_report_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let good = record(0).fields().join(",");
        std::fs::write(&path, format!("{}\n{good}\n{good}\n0,x,0,0,0,0,1,SUCCESS,0,0,0\n", METRICS_HEADER.join(","))).unwrap();
        match read_metrics(&path).unwrap_err() {
            HarnessError::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e:?}"),
        }
        std::fs::write(&path, "a,b\n").unwrap();
        assert!(matches!(read_metrics(&path), Err(HarnessError::Parse { line: 1, .. })));
        assert!(matches!(read_metrics(&dir.path().join("none.csv")), Err(HarnessError::NotFound(_))));
    }
}
