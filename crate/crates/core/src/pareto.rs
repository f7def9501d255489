//! Pareto dominance, nondominated fronts, an insertion archive and the
//! hypervolume indicator. All objectives are maximized.

use std::cmp::Ordering;
use std::io::Write;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParetoError {
    #[error("objective count mismatch: {0} vs {1}")]
    Shape(usize, usize),
    #[error("empty point set")]
    EmptyInput,
    #[error("point {index} lies below the reference point in objective {objective}")]
    InvalidReference { index: usize, objective: usize },
    #[error("hypervolume supports 2 or 3 objectives, got {0}")]
    Unsupported(usize),
    #[error("non-finite objective value")]
    NonFinite,
}

/// Objective vector of one evaluated policy plus a free-form run tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectivePoint {
    pub values: Vec<f64>,
    pub tag: String,
}

impl ObjectivePoint {
    pub fn new(values: Vec<f64>, tag: impl Into<String>) -> Self {
        Self {
            values,
            tag: tag.into(),
        }
    }

    pub fn untagged(values: Vec<f64>) -> Self {
        Self::new(values, "")
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }
}

/// `a` weakly better everywhere and strictly better somewhere.
pub fn dominates(a: &ObjectivePoint, b: &ObjectivePoint) -> Result<bool, ParetoError> {
    if a.k() != b.k() {
        return Err(ParetoError::Shape(a.k(), b.k()));
    }
    Ok(dominates_values(&a.values, &b.values))
}

fn dominates_values(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Nondominated subset, in input order; equal nondominated values are all
/// kept.
pub fn pareto_front(points: &[ObjectivePoint]) -> Result<Vec<ObjectivePoint>, ParetoError> {
    let first = points.first().ok_or(ParetoError::EmptyInput)?;
    if let Some(p) = points.iter().find(|p| p.k() != first.k()) {
        return Err(ParetoError::Shape(first.k(), p.k()));
    }
    // Sort indices lexicographically descending; a point can only be
    // dominated by one that precedes it in this order.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| lex_desc(&points[i].values, &points[j].values));
    let mut front_idx: Vec<usize> = Vec::new();
    for &i in &order {
        let v = &points[i].values;
        if !front_idx.iter().any(|&j| dominates_values(&points[j].values, v)) {
            front_idx.push(i);
        }
    }
    front_idx.sort_unstable();
    Ok(front_idx.into_iter().map(|i| points[i].clone()).collect())
}

fn lex_desc(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.partial_cmp(x).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Set of mutually nondominated points.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoArchive {
    k: usize,
    points: Vec<ObjectivePoint>,
}

impl ParetoArchive {
    pub fn new(k: usize) -> Self {
        Self { k, points: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[ObjectivePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Adds `p` unless dominated, evicting members it dominates. Returns
    /// whether `p` was added.
    pub fn insert(&mut self, p: ObjectivePoint) -> Result<bool, ParetoError> {
        if p.k() != self.k {
            return Err(ParetoError::Shape(self.k, p.k()));
        }
        if p.values.iter().any(|v| !v.is_finite()) {
            return Err(ParetoError::NonFinite);
        }
        if self.points.iter().any(|q| dominates_values(&q.values, &p.values)) {
            return Ok(false);
        }
        self.points.retain(|q| !dominates_values(&p.values, &q.values));
        self.points.push(p);
        Ok(true)
    }

    /// True when no member dominates another.
    pub fn is_consistent(&self) -> bool {
        self.points.iter().enumerate().all(|(i, a)| {
            self.points
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !dominates_values(&a.values, &b.values))
        })
    }
}

/// Measure of the union of boxes `[reference, p]` for 2 or 3 objectives.
pub fn hypervolume(front: &[ObjectivePoint], reference: &ObjectivePoint) -> Result<f64, ParetoError> {
    let k = reference.k();
    if !(2..=3).contains(&k) {
        return Err(ParetoError::Unsupported(k));
    }
    for (index, p) in front.iter().enumerate() {
        if p.k() != k {
            return Err(ParetoError::Shape(k, p.k()));
        }
        if let Some(objective) = p.values.iter().zip(&reference.values).position(|(v, r)| v < r) {
            return Err(ParetoError::InvalidReference { index, objective });
        }
    }
    let pts: Vec<&[f64]> = front.iter().map(|p| p.values.as_slice()).collect();
    let r = &reference.values;
    Ok(match k {
        2 => hv2(pts.iter().map(|p| (p[0], p[1])).collect(), (r[0], r[1])),
        _ => hv3(&pts, r),
    })
}

/// Sort by the first objective descending and sweep the second.
fn hv2(mut pts: Vec<(f64, f64)>, r: (f64, f64)) -> f64 {
    pts.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut area = 0.0;
    let mut top = r.1;
    for (x, y) in pts {
        if y > top {
            area += (x - r.0) * (y - top);
            top = y;
        }
    }
    area
}

/// Slice along the third objective and sum 2D areas times slab heights.
fn hv3(pts: &[&[f64]], r: &[f64]) -> f64 {
    let mut levels: Vec<f64> = pts.iter().map(|p| p[2]).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let mut vol = 0.0;
    for (i, &z) in levels.iter().enumerate() {
        let below = levels.get(i + 1).copied().unwrap_or(r[2]);
        let slab = z - below;
        if slab <= 0.0 {
            continue;
        }
        let active: Vec<(f64, f64)> = pts.iter().filter(|p| p[2] >= z).map(|p| (p[0], p[1])).collect();
        vol += hv2(active, (r[0], r[1])) * slab;
    }
    vol
}

/// One row of the exported archive: a sweep cell and its evaluation.
/// `objectives` is `None` for a cell whose run failed, in which case
/// `location` carries the failure message.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveRow {
    pub weights: Vec<f64>,
    pub seed: u64,
    pub objectives: Option<Vec<f64>>,
    pub on_front: bool,
    pub location: String,
}

/// Writes `weight_1..weight_w,seed,obj_1..obj_k,on_front,checkpoint_path`.
/// Failed rows get NaN objectives and `on_front = 0`.
pub fn write_archive_csv<W: Write>(out: W, rows: &[ArchiveRow], k: usize) -> csv::Result<()> {
    let w = rows.first().map_or(k, |r| r.weights.len());
    let mut wr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=w).map(|i| format!("weight_{i}")).collect();
    header.push("seed".into());
    header.extend((1..=k).map(|i| format!("obj_{i}")));
    header.push("on_front".into());
    header.push("checkpoint_path".into());
    wr.write_record(&header)?;
    for r in rows {
        let mut rec: Vec<String> = r.weights.iter().map(|x| x.to_string()).collect();
        rec.push(r.seed.to_string());
        match &r.objectives {
            Some(o) => rec.extend(o.iter().map(|x| x.to_string())),
            None => rec.extend(std::iter::repeat_n("NaN".to_string(), k)),
        }
        rec.push(if r.on_front { "1" } else { "0" }.into());
        rec.push(r.location.clone());
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}
