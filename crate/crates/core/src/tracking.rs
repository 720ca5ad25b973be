//! Feature detection, pFGW matching with the mutual-argmax rule, and
//! trajectory extraction over a time series of fields.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::export::{summarize_field, FieldSummary};
use crate::field::{domain_diagonal, ScalarField};
use crate::mergetree::{build_merge_tree, simplify, Connectivity, Direction, NodeKind};
use crate::network::{array_to_rows, encode, MeasureNetwork, NodeMeta, StrategyConfig};
use crate::transport::{solve_pfgw, AttributeMode, SolverParams};
use crate::{Error, Result};

/// Which nodes take part in trajectories and in the N/L metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindFilter {
    All,
    #[default]
    Leaves,
}

impl KindFilter {
    pub fn accepts(self, kind: NodeKind) -> bool {
        match self {
            KindFilter::All => true,
            KindFilter::Leaves => kind == NodeKind::Leaf,
        }
    }
}

impl std::str::FromStr for KindFilter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(KindFilter::All),
            "leaves" | "leaf" => Ok(KindFilter::Leaves),
            other => Err(Error::InvalidParameter(format!("unknown kind filter {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub source: usize,
    pub target: usize,
    pub probability: f64,
}

/// Matching between steps `step` and `step + 1` of a sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatchSet {
    pub step: usize,
    pub m: f64,
    pub pairs: Vec<MatchedPair>,
    pub unmatched_source: Vec<usize>,
    pub unmatched_target: Vec<usize>,
    #[serde(with = "matrix_rows")]
    pub coupling: Array2<f64>,
    pub objective: f64,
    pub converged: bool,
}

mod matrix_rows {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &Array2<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        array_to_rows(a).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Array2<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        crate::network::rows_to_array(&rows, Some(ncols)).map_err(serde::de::Error::custom)
    }
}

/// Keeps `(i, j)` when `j` is the most probable partner of `i` and vice
/// versa. Ties go to the smaller index.
pub fn bijective_matches(c: &Array2<f64>) -> (Vec<MatchedPair>, Vec<usize>, Vec<usize>) {
    let (n1, n2) = c.dim();
    let argmax = |vals: &mut dyn Iterator<Item = f64>| {
        let mut best: Option<(usize, f64)> = None;
        for (k, x) in vals.enumerate() {
            if x > 0.0 && best.is_none_or(|(_, b)| x > b) {
                best = Some((k, x));
            }
        }
        best.map(|(k, _)| k)
    };
    let row_best: Vec<Option<usize>> = (0..n1).map(|i| argmax(&mut c.row(i).iter().copied())).collect();
    let col_best: Vec<Option<usize>> = (0..n2).map(|j| argmax(&mut c.column(j).iter().copied())).collect();
    let mut pairs = Vec::new();
    let mut row_used = vec![false; n1];
    let mut col_used = vec![false; n2];
    for i in 0..n1 {
        if let Some(j) = row_best[i] {
            if col_best[j] == Some(i) {
                pairs.push(MatchedPair {
                    source: i,
                    target: j,
                    probability: c[[i, j]],
                });
                row_used[i] = true;
                col_used[j] = true;
            }
        }
    }
    let unmatched_rows = (0..n1).filter(|&i| !row_used[i]).collect();
    let unmatched_cols = (0..n2).filter(|&j| !col_used[j]).collect();
    (pairs, unmatched_rows, unmatched_cols)
}

/// Solves pFGW between adjacent networks and applies the bijective rule.
pub fn match_features(
    a: &MeasureNetwork<f64>,
    b: &MeasureNetwork<f64>,
    params: &SolverParams<f64>,
) -> Result<MatchSet> {
    let report = solve_pfgw(a, b, params)?;
    if !report.converged {
        log::warn!("pFGW did not converge in {} iterations (m = {})", report.iterations, params.m);
    }
    let c = report.coupling.into_matrix();
    let (pairs, unmatched_source, unmatched_target) = bijective_matches(&c);
    Ok(MatchSet {
        step: 0,
        m: params.m,
        pairs,
        unmatched_source,
        unmatched_target,
        coupling: c,
        objective: report.objective,
        converged: report.converged,
    })
}

/// Nodes of one time step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Frame {
    pub t: i64,
    pub diagonal: f64,
    pub nodes: Vec<NodeMeta<f64>>,
    /// Node masses.
    #[serde(default)]
    pub p: Vec<f64>,
}

impl Frame {
    pub fn from_network(t: i64, diagonal: f64, net: &MeasureNetwork<f64>) -> Self {
        Self {
            t,
            diagonal,
            nodes: net.meta().to_vec(),
            p: net.p().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: i64,
    pub node: usize,
    pub vertex: usize,
    pub coords: Vec<f64>,
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: usize,
    /// Kind of the first node.
    pub kind: NodeKind,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Chains matched nodes across consecutive frames. `matches[k]` links
/// `frames[k]` to `frames[k + 1]`; links touching filtered-out nodes are
/// ignored.
pub fn extract_trajectories(frames: &[Frame], matches: &[MatchSet], filter: KindFilter) -> Result<Vec<Trajectory>> {
    if !frames.is_empty() && matches.len() + 1 != frames.len() {
        return Err(Error::Shape(format!(
            "{} frames need {} match sets, got {}",
            frames.len(),
            frames.len() - 1,
            matches.len()
        )));
    }
    let mut trajectories: Vec<Trajectory> = Vec::new();
    let mut prev_owner: Vec<Option<usize>> = Vec::new();
    for (k, frame) in frames.iter().enumerate() {
        let mut link = vec![None; frame.nodes.len()];
        if k > 0 {
            let prev = &frames[k - 1];
            for p in &matches[k - 1].pairs {
                let (Some(src), Some(dst)) = (prev.nodes.get(p.source), frame.nodes.get(p.target)) else {
                    return Err(Error::Shape(format!("match set {} refers to missing nodes", k - 1)));
                };
                if filter.accepts(src.kind) && filter.accepts(dst.kind) {
                    link[p.target] = prev_owner[p.source];
                }
            }
        }
        let mut owner = vec![None; frame.nodes.len()];
        for (i, node) in frame.nodes.iter().enumerate() {
            if !filter.accepts(node.kind) {
                continue;
            }
            let point = TrajectoryPoint {
                t: frame.t,
                node: i,
                vertex: node.vertex,
                coords: node.coords.clone(),
                f: node.f,
            };
            let id = match link[i] {
                Some(id) => id,
                None => {
                    trajectories.push(Trajectory {
                        id: trajectories.len(),
                        kind: node.kind,
                        points: Vec::new(),
                    });
                    trajectories.len() - 1
                }
            };
            trajectories[id].points.push(point);
            owner[i] = Some(id);
        }
        prev_owner = owner;
    }
    Ok(trajectories)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityMetrics {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

/// `N` = number of trajectories of the accepted kind; `L` = their largest
/// step length divided by `diagonal`.
pub fn quality_metrics(trajectories: &[Trajectory], filter: KindFilter, diagonal: f64) -> QualityMetrics {
    let kept: Vec<&Trajectory> = trajectories.iter().filter(|t| filter.accepts(t.kind)).collect();
    let l = kept
        .iter()
        .flat_map(|t| t.points.windows(2))
        .map(|w| euclid(&w[0].coords, &w[1].coords) / diagonal)
        .fold(0.0, f64::max);
    QualityMetrics { n: kept.len(), l }
}

/// Options shared by every matching solve in a run.
#[derive(Clone, Debug)]
pub struct MatchOptions {
    pub q: f64,
    pub diagonal: f64,
    pub filter: KindFilter,
    pub attribute_mode: AttributeMode,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            q: 2.0,
            diagonal: 1.0,
            filter: KindFilter::Leaves,
            attribute_mode: AttributeMode::Literal,
        }
    }
}

impl MatchOptions {
    pub fn params(&self, alpha: f64, m: f64) -> SolverParams<f64> {
        SolverParams::new(alpha, m)
            .with_q(self.q)
            .with_attribute_mode(self.attribute_mode)
    }
}

/// Largest normalized displacement among matched pairs of accepted kinds.
pub fn max_matched_distance(
    a: &MeasureNetwork<f64>,
    b: &MeasureNetwork<f64>,
    set: &MatchSet,
    filter: KindFilter,
    diagonal: f64,
) -> f64 {
    set.pairs
        .iter()
        .filter_map(|p| {
            let (x, y) = (a.meta().get(p.source)?, b.meta().get(p.target)?);
            (filter.accepts(x.kind) && filter.accepts(y.kind)).then(|| euclid(&x.coords, &y.coords) / diagonal)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdaptiveChoice {
    pub m: f64,
    pub distance: f64,
    /// No grid value met the bound; `m` is the smallest grid value.
    pub warning: bool,
    pub solves: usize,
}

/// Largest `m` in `m_grid` whose matched displacement stays within
/// `l_star`, scanning from the top.
pub fn adaptive_m(
    a: &MeasureNetwork<f64>,
    b: &MeasureNetwork<f64>,
    alpha: f64,
    l_star: f64,
    m_grid: &[f64],
    opts: &MatchOptions,
) -> Result<(AdaptiveChoice, MatchSet)> {
    if m_grid.is_empty() {
        return Err(Error::InvalidParameter("empty m grid".into()));
    }
    let mut grid = m_grid.to_vec();
    grid.sort_by(|x, y| y.total_cmp(x));
    grid.dedup();
    let chunk = rayon::current_num_threads().max(1);
    let mut solves = 0;
    let mut last = None;
    for block in grid.chunks(chunk) {
        let results: Vec<Result<(f64, MatchSet)>> = block
            .par_iter()
            .map(|&m| {
                let set = match_features(a, b, &opts.params(alpha, m))?;
                let d = max_matched_distance(a, b, &set, opts.filter, opts.diagonal);
                Ok((d, set))
            })
            .collect();
        for (k, r) in results.into_iter().enumerate() {
            let (d, set) = r?;
            solves += 1;
            if d <= l_star {
                let choice = AdaptiveChoice {
                    m: block[k],
                    distance: d,
                    warning: false,
                    solves,
                };
                return Ok((choice, set));
            }
            last = Some((block[k], d, set));
        }
    }
    let (m, d, set) = last.expect("grid is not empty");
    log::warn!("no m in the grid keeps the matched distance within {l_star}; using m = {m}");
    Ok((
        AdaptiveChoice {
            m,
            distance: d,
            warning: true,
            solves,
        },
        set,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Elbow {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    /// All points lie on the chord; `index` falls back to the largest `x`.
    pub degenerate: bool,
}

/// Point of maximum perpendicular distance to the chord joining the first
/// and last points.
pub fn elbow(xs: &[f64], ys: &[f64]) -> Result<Elbow> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::Shape("elbow needs equally long, nonempty curves".into()));
    }
    let n = xs.len();
    let (x0, y0, x1, y1) = (xs[0], ys[0], xs[n - 1], ys[n - 1]);
    let (dx, dy) = (x1 - x0, y1 - y0);
    let norm = (dx * dx + dy * dy).sqrt();
    let scale = ys.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    let mut best = (0usize, 0.0f64);
    if norm > 0.0 {
        for i in 0..n {
            let d = (dy * (xs[i] - x0) - dx * (ys[i] - y0)).abs() / norm;
            if d > best.1 {
                best = (i, d);
            }
        }
    }
    if best.1 <= 1e-12 * scale {
        let i = (0..n).max_by(|&a, &b| xs[a].total_cmp(&xs[b])).unwrap();
        return Ok(Elbow {
            index: i,
            x: xs[i],
            y: ys[i],
            degenerate: true,
        });
    }
    Ok(Elbow {
        index: best.0,
        x: xs[best.0],
        y: ys[best.0],
        degenerate: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MPolicy {
    Fixed { m: f64 },
    /// Per pair, the largest `m` of the grid meeting the displacement bound.
    Adaptive { l_star: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrackingConfig {
    pub epsilon: f64,
    pub strategy: StrategyConfig,
    pub alpha: f64,
    pub m_policy: MPolicy,
    pub q: f64,
    pub direction: Direction,
    /// Default for the field dimension when `None`.
    pub connectivity: Option<Connectivity>,
    pub filter: KindFilter,
    pub attribute_mode: AttributeMode,
    pub alpha_grid: Vec<f64>,
    pub m_grid: Vec<f64>,
}

/// `start, start + step, ..., end` rounded to the step's precision.
pub fn grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = ((end - start) / step).round() as usize;
    (0..=count).map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9).collect()
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.06,
            strategy: StrategyConfig::default(),
            alpha: 0.1,
            m_policy: MPolicy::Fixed { m: 0.9 },
            q: 2.0,
            direction: Direction::Split,
            connectivity: None,
            filter: KindFilter::Leaves,
            attribute_mode: AttributeMode::Literal,
            alpha_grid: grid(0.0, 1.0, 0.1),
            m_grid: grid(0.5, 1.0, 0.01),
        }
    }
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.epsilon) || !unit(self.alpha) {
            return Err(Error::InvalidParameter("epsilon and alpha must lie in [0, 1]".into()));
        }
        if self.alpha_grid.iter().any(|&x| !unit(x)) || self.m_grid.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(Error::InvalidParameter("grid values out of range".into()));
        }
        match self.m_policy {
            MPolicy::Fixed { m } if !(m > 0.0 && m <= 1.0) => Err(Error::InfeasibleMass(m)),
            MPolicy::Adaptive { .. } if self.m_grid.is_empty() => {
                Err(Error::InvalidParameter("adaptive policy needs an m grid".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn options(&self, diagonal: f64) -> MatchOptions {
        MatchOptions {
            q: self.q,
            diagonal,
            filter: self.filter,
            attribute_mode: self.attribute_mode,
        }
    }
}

/// Everything a run produces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub config: TrackingConfig,
    pub frames: Vec<Frame>,
    pub summaries: Vec<FieldSummary>,
    pub matches: Vec<MatchSet>,
    pub trajectories: Vec<Trajectory>,
    pub per_pair_m: Vec<f64>,
    pub metrics: QualityMetrics,
    pub warnings: Vec<String>,
}

/// Merge tree, simplification and encoding for one field.
pub fn detect(field: &ScalarField<f64>, config: &TrackingConfig) -> Result<MeasureNetwork<f64>> {
    let conn = config
        .connectivity
        .unwrap_or_else(|| Connectivity::default_for(field.dimension()));
    let tree = build_merge_tree(field, config.direction, conn)?;
    let tree = simplify(&tree, config.epsilon)?;
    encode(&tree, &config.strategy)
}

/// Detection, matching and trajectory extraction over an ordered series.
pub fn run_pipeline(fields: &[ScalarField<f64>], config: &TrackingConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let networks: Vec<MeasureNetwork<f64>> = fields
        .par_iter()
        .map(|f| detect(f, config))
        .collect::<Result<_>>()?;
    let diagonal = fields.first().map_or(1.0, domain_diagonal);
    if fields.iter().any(|f| f.dims() != fields[0].dims()) {
        return Err(Error::Shape("fields in a series must share their grid".into()));
    }
    let opts = config.options(diagonal);
    let pairs: Vec<(MatchSet, Option<AdaptiveChoice>)> = (0..networks.len().saturating_sub(1))
        .into_par_iter()
        .map(|k| {
            let (a, b) = (&networks[k], &networks[k + 1]);
            let (mut set, choice) = match config.m_policy {
                MPolicy::Fixed { m } => (match_features(a, b, &opts.params(config.alpha, m))?, None),
                MPolicy::Adaptive { l_star } => {
                    let (choice, set) = adaptive_m(a, b, config.alpha, l_star, &config.m_grid, &opts)?;
                    (set, Some(choice))
                }
            };
            set.step = k;
            Ok((set, choice))
        })
        .collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    for (set, choice) in &pairs {
        if !set.converged {
            warnings.push(format!("pair {}: solver hit the iteration limit", set.step));
        }
        if choice.as_ref().is_some_and(|c| c.warning) {
            warnings.push(format!("pair {}: no m met the displacement bound", set.step));
        }
    }
    let per_pair_m = pairs.iter().map(|(s, _)| s.m).collect();
    let matches: Vec<MatchSet> = pairs.into_iter().map(|(s, _)| s).collect();
    let frames: Vec<Frame> = fields
        .iter()
        .zip(&networks)
        .map(|(f, n)| Frame::from_network(f.time_index(), diagonal, n))
        .collect();
    let trajectories = extract_trajectories(&frames, &matches, config.filter)?;
    let metrics = quality_metrics(&trajectories, config.filter, diagonal);
    let summaries = fields.iter().map(|f| summarize_field(f, 128)).collect();
    Ok(PipelineOutput {
        config: config.clone(),
        frames,
        summaries,
        matches,
        trajectories,
        per_pair_m,
        metrics,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub alpha: f64,
    pub m: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TuneCurves {
    pub rows: Vec<CurveRow>,
    /// Elbow of the `L`-versus-`m` curve for each alpha.
    pub elbows: Vec<(f64, Elbow)>,
}

/// `N` and `L` for every `(alpha, m)` with fixed-`m` matching.
pub fn tune_curves(
    networks: &[MeasureNetwork<f64>],
    frames: &[Frame],
    alpha_grid: &[f64],
    m_grid: &[f64],
    opts: &MatchOptions,
) -> Result<TuneCurves> {
    let jobs: Vec<(f64, f64)> = alpha_grid
        .iter()
        .flat_map(|&a| m_grid.iter().map(move |&m| (a, m)))
        .collect();
    let rows: Vec<CurveRow> = jobs
        .par_iter()
        .map(|&(alpha, m)| {
            let matches = (0..networks.len().saturating_sub(1))
                .map(|k| {
                    let mut s = match_features(&networks[k], &networks[k + 1], &opts.params(alpha, m))?;
                    s.step = k;
                    Ok(s)
                })
                .collect::<Result<Vec<_>>>()?;
            let traj = extract_trajectories(frames, &matches, opts.filter)?;
            let q = quality_metrics(&traj, opts.filter, opts.diagonal);
            Ok(CurveRow { alpha, m, n: q.n, l: q.l })
        })
        .collect::<Result<_>>()?;
    let mut elbows = Vec::new();
    for &alpha in alpha_grid {
        let mut curve: Vec<&CurveRow> = rows.iter().filter(|r| r.alpha == alpha).collect();
        curve.sort_by(|a, b| a.m.total_cmp(&b.m));
        let xs: Vec<f64> = curve.iter().map(|r| r.m).collect();
        let ys: Vec<f64> = curve.iter().map(|r| r.l).collect();
        if !xs.is_empty() {
            elbows.push((alpha, elbow(&xs, &ys)?));
        }
    }
    Ok(TuneCurves { rows, elbows })
}

impl TuneCurves {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["alpha", "m", "N", "L"])?;
        for r in &self.rows {
            w.write_record([r.alpha.to_string(), r.m.to_string(), r.n.to_string(), r.l.to_string()])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| Error::InvalidDocument(e.to_string()))?)
            .expect("csv output is utf-8"))
    }
}

/// `traj_id,t,x,y[,z],f,vertex,kind`.
pub fn trajectories_csv(trajectories: &[Trajectory]) -> Result<String> {
    let dim = trajectories
        .iter()
        .flat_map(|t| t.points.first())
        .map(|p| p.coords.len())
        .next()
        .unwrap_or(2);
    let mut header = vec!["traj_id", "t", "x", "y"];
    if dim == 3 {
        header.push("z");
    }
    header.extend(["f", "vertex", "kind"]);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for t in trajectories {
        let kind = serde_json::to_value(t.kind)?;
        let kind = kind.as_str().unwrap_or_default().to_string();
        for p in &t.points {
            let mut rec = vec![t.id.to_string(), p.t.to_string()];
            rec.extend(p.coords.iter().map(|c| c.to_string()));
            rec.extend([p.f.to_string(), p.vertex.to_string(), kind.clone()]);
            w.write_record(&rec)?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::InvalidDocument(e.to_string()))?)
        .expect("csv output is utf-8"))
}

/// Reads `trajectories.csv` back; coordinates are the columns between `t`
/// and `f`.
pub fn read_trajectories_csv(text: &str) -> Result<Vec<Trajectory>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("trajectories.csv lacks column {name:?}")))
    };
    let (id_c, t_c, f_c, v_c, k_c) = (col("traj_id")?, col("t")?, col("f")?, col("vertex")?, col("kind")?);
    let coord_cols: Vec<usize> = ["x", "y", "z"].iter().filter_map(|n| col(n).ok()).collect();
    let mut out: Vec<Trajectory> = Vec::new();
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
    let int = |s: &str| s.parse::<i64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
    for rec in r.records() {
        let rec = rec?;
        let id = int(&rec[id_c])? as usize;
        let kind: NodeKind = serde_json::from_value(serde_json::Value::String(rec[k_c].to_string()))?;
        let point = TrajectoryPoint {
            t: int(&rec[t_c])?,
            node: 0,
            vertex: int(&rec[v_c])? as usize,
            coords: coord_cols.iter().map(|&c| num(&rec[c])).collect::<Result<_>>()?,
            f: num(&rec[f_c])?,
        };
        match out.iter_mut().find(|t| t.id == id) {
            Some(t) => t.points.push(point),
            None => out.push(Trajectory {
                id,
                kind,
                points: vec![point],
            }),
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct MetricsDoc<'a> {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "L")]
    l: f64,
    per_pair_m: &'a [f64],
    warnings: &'a [String],
}

impl PipelineOutput {
    /// Writes `trajectories.csv`, `metrics.json` and `run.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, body: &str| {
            let path = dir.join(name);
            std::fs::File::create(&path)
                .and_then(|mut f| f.write_all(body.as_bytes()))
                .map_err(|e| Error::io(&path, e))
        };
        put("trajectories.csv", &trajectories_csv(&self.trajectories)?)?;
        let metrics = MetricsDoc {
            n: self.metrics.n,
            l: self.metrics.l,
            per_pair_m: &self.per_pair_m,
            warnings: &self.warnings,
        };
        put("metrics.json", &serde_json::to_string_pretty(&metrics)?)?;
        put("run.json", &serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("run.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
