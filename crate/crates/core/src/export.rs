//! Probabilistic tracking-graph document and a read-only static server for
//! the browser explorer.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use crate::field::ScalarField;
use crate::mergetree::NodeKind;
use crate::network::StrategyConfig;
use crate::tracking::PipelineOutput;
use crate::{Error, Result};

/// Field values on a strided subgrid for the data view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub t: i64,
    /// Full grid extent.
    pub dims: Vec<usize>,
    /// Extent of `values`.
    pub sample_dims: Vec<usize>,
    /// Sampling step per axis.
    pub stride: Vec<usize>,
    /// First axis fastest.
    pub values: Vec<f64>,
}

/// Keeps every `ceil(d / max_per_axis)`-th sample along each axis.
pub fn summarize_field(field: &ScalarField<f64>, max_per_axis: usize) -> FieldSummary {
    let max = max_per_axis.max(1);
    let dims = field.dims().to_vec();
    let stride: Vec<usize> = dims.iter().map(|&d| d.div_ceil(max).max(1)).collect();
    let sample_dims: Vec<usize> = dims.iter().zip(&stride).map(|(&d, &s)| d.div_ceil(s)).collect();
    let total: usize = sample_dims.iter().product();
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims.len()];
    for mut k in 0..total {
        for (a, &sd) in sample_dims.iter().enumerate() {
            idx[a] = (k % sd) * stride[a];
            k /= sd;
        }
        values.push(field.values()[field.linear_index(&idx)]);
    }
    FieldSummary {
        t: field.time_index(),
        dims,
        sample_dims,
        stride,
        values,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocNode {
    /// Row of the node in its time step's coupling.
    pub id: usize,
    pub tree_node: usize,
    pub coords: Vec<f64>,
    pub f: f64,
    pub kind: NodeKind,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timestep {
    pub t: i64,
    pub summary: Option<FieldSummary>,
    pub nodes: Vec<DocNode>,
}

/// `probability = C(i, j)` between node `i` at `t` and node `j` at the next
/// time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub t: i64,
    pub i: usize,
    pub j: usize,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRef {
    pub t: i64,
    pub id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: usize,
    pub kind: NodeKind,
    pub nodes: Vec<NodeRef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub alpha: f64,
    pub per_pair_m: Vec<f64>,
    pub epsilon: f64,
    pub strategies: StrategyConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingGraphDoc {
    pub timesteps: Vec<Timestep>,
    pub edges: Vec<Edge>,
    pub trajectories: Vec<Track>,
    pub metadata: Metadata,
}

impl TrackingGraphDoc {
    /// Structural checks: edges reference existing nodes in consecutive
    /// time steps, probabilities lie in `(0, 1]`, and outgoing probability
    /// does not exceed node mass.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDocument(msg));
        let position: HashMap<i64, usize> = self.timesteps.iter().enumerate().map(|(k, s)| (s.t, k)).collect();
        if position.len() != self.timesteps.len() {
            return bad("duplicate time steps".into());
        }
        for w in self.timesteps.windows(2) {
            if w[0].t >= w[1].t {
                return bad("time steps are not increasing".into());
            }
        }
        for s in &self.timesteps {
            if s.nodes.iter().enumerate().any(|(k, n)| n.id != k) {
                return bad(format!("node ids at t = {} are not 0..n", s.t));
            }
        }
        let mut outgoing: HashMap<(i64, usize), f64> = HashMap::new();
        for e in &self.edges {
            let Some(&k) = position.get(&e.t) else {
                return bad(format!("edge at unknown time step {}", e.t));
            };
            let (Some(src), Some(dst)) = (self.timesteps.get(k), self.timesteps.get(k + 1)) else {
                return bad(format!("edge at t = {} has no next time step", e.t));
            };
            if e.i >= src.nodes.len() || e.j >= dst.nodes.len() {
                return bad(format!("edge ({}, {}) at t = {} is out of range", e.i, e.j, e.t));
            }
            if !(e.probability > 0.0 && e.probability <= 1.0) {
                return bad(format!("edge probability {} outside (0, 1]", e.probability));
            }
            *outgoing.entry((e.t, e.i)).or_default() += e.probability;
        }
        for ((t, i), total) in outgoing {
            let p = self.timesteps[position[&t]].nodes[i].p;
            if total > p + 1e-9 {
                return bad(format!("outgoing probability {total} of node {i} at t = {t} exceeds its mass {p}"));
            }
        }
        for track in &self.trajectories {
            for r in &track.nodes {
                let ok = position.get(&r.t).is_some_and(|&k| r.id < self.timesteps[k].nodes.len());
                if !ok {
                    return bad(format!("track {} refers to a missing node", track.id));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Edges with `probability >= theta`.
    pub fn edges_above(&self, theta: f64) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.probability >= theta)
    }
}

/// Builds the document; every positive coupling entry becomes an edge.
pub fn export_tracking_graph(run: &PipelineOutput) -> Result<TrackingGraphDoc> {
    if let Some(fr) = run.frames.iter().find(|fr| fr.p.len() != fr.nodes.len()) {
        return Err(Error::InvalidDocument(format!("frame at t = {} lacks node masses", fr.t)));
    }
    let timesteps: Vec<Timestep> = run
        .frames
        .iter()
        .map(|fr| Timestep {
            t: fr.t,
            summary: run.summaries.iter().find(|s| s.t == fr.t).cloned(),
            nodes: fr
                .nodes
                .iter()
                .enumerate()
                .map(|(k, n)| DocNode {
                    id: k,
                    tree_node: n.node_id,
                    coords: n.coords.clone(),
                    f: n.f,
                    kind: n.kind,
                    p: fr.p[k],
                })
                .collect(),
        })
        .collect();
    let mut edges = Vec::new();
    for (k, set) in run.matches.iter().enumerate() {
        let t = run
            .frames
            .get(k)
            .ok_or_else(|| Error::Shape("more match sets than frames".into()))?
            .t;
        for ((i, j), &c) in set.coupling.indexed_iter() {
            if c > 0.0 {
                edges.push(Edge {
                    t,
                    i,
                    j,
                    probability: c,
                });
            }
        }
    }
    let trajectories = run
        .trajectories
        .iter()
        .map(|tr| Track {
            id: tr.id,
            kind: tr.kind,
            nodes: tr.points.iter().map(|p| NodeRef { t: p.t, id: p.node }).collect(),
        })
        .collect();
    let doc = TrackingGraphDoc {
        timesteps,
        edges,
        trajectories,
        metadata: Metadata {
            alpha: run.config.alpha,
            per_pair_m: run.per_pair_m.clone(),
            epsilon: run.config.epsilon,
            strategies: run.config.strategy,
        },
    };
    doc.validate()?;
    Ok(doc)
}

/// Immutable file set served over HTTP: `/graph.json` plus an optional UI
/// bundle directory with `index.html` at `/`.
pub struct StaticSite {
    doc: Vec<u8>,
    ui: Option<PathBuf>,
}

impl StaticSite {
    pub fn new(doc_path: &Path, ui: Option<&Path>) -> Result<Self> {
        let doc = std::fs::read(doc_path).map_err(|e| Error::io(doc_path, e))?;
        if let Some(dir) = ui {
            if !dir.is_dir() {
                return Err(Error::Io {
                    path: dir.to_path_buf(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "UI bundle directory not found"),
                });
            }
        }
        Ok(Self {
            doc,
            ui: ui.map(Path::to_path_buf),
        })
    }

    /// `(status, content type, body)` for a request path.
    pub fn lookup(&self, url: &str) -> (u16, &'static str, Vec<u8>) {
        let path = url.split(['?', '#']).next().unwrap_or("");
        if path == "/graph.json" {
            return (200, "application/json", self.doc.clone());
        }
        let not_found = (404, "text/plain", b"not found".to_vec());
        let Some(root) = &self.ui else {
            return not_found;
        };
        let rel = if path == "/" { "index.html" } else { path.trim_start_matches('/') };
        if rel.split('/').any(|c| c == ".." || c.is_empty()) {
            return not_found;
        }
        let file = root.join(rel);
        match std::fs::read(&file) {
            Ok(body) if file.is_file() => (200, content_type(&file), body),
            _ => not_found,
        }
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

/// Running server; dropping it without [`Server::shutdown`] leaves the
/// workers running.
pub struct Server {
    http: Arc<tiny_http::Server>,
    addr: SocketAddr,
    workers: Vec<JoinHandle<()>>,
}

impl Server {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting requests and joins the workers.
    pub fn shutdown(self) {
        for _ in &self.workers {
            self.http.unblock();
        }
        for w in self.workers {
            let _ = w.join();
        }
    }
}

/// Serves `site` on `addr` (port 0 picks a free port) with a small worker
/// pool.
pub fn serve(site: StaticSite, addr: &str) -> Result<Server> {
    let http = tiny_http::Server::http(addr).map_err(|e| Error::Io {
        path: PathBuf::from(addr),
        source: std::io::Error::new(std::io::ErrorKind::AddrInUse, e.to_string()),
    })?;
    let bound = http
        .server_addr()
        .to_ip()
        .ok_or_else(|| Error::InvalidParameter("server is not bound to an IP address".into()))?;
    let http = Arc::new(http);
    let site = Arc::new(site);
    let workers = (0..4)
        .map(|_| {
            let (http, site) = (Arc::clone(&http), Arc::clone(&site));
            std::thread::spawn(move || {
                for request in http.incoming_requests() {
                    let (status, ctype, body) = if *request.method() == tiny_http::Method::Get {
                        site.lookup(request.url())
                    } else {
                        (405, "text/plain", b"method not allowed".to_vec())
                    };
                    let header = tiny_http::Header::from_bytes("Content-Type", ctype).expect("static header");
                    let response = tiny_http::Response::from_data(body).with_status_code(status).with_header(header);
                    if let Err(e) = request.respond(response) {
                        log::warn!("failed to answer request: {e}");
                    }
                }
            })
        })
        .collect();
    log::info!("serving on http://{bound}");
    Ok(Server {
        http,
        addr: bound,
        workers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> TrackingGraphDoc {
        let node = |id, p| DocNode {
            id,
            tree_node: id,
            coords: vec![0.0, 0.0],
            f: 1.0,
            kind: NodeKind::Leaf,
            p,
        };
        TrackingGraphDoc {
            timesteps: vec![
                Timestep {
                    t: 0,
                    summary: None,
                    nodes: vec![node(0, 0.5), node(1, 0.5)],
                },
                Timestep {
                    t: 1,
                    summary: None,
                    nodes: vec![node(0, 1.0)],
                },
            ],
            edges: vec![
                Edge {
                    t: 0,
                    i: 0,
                    j: 0,
                    probability: 0.1 + 0.2,
                },
                Edge {
                    t: 0,
                    i: 1,
                    j: 0,
                    probability: 0.5,
                },
            ],
            trajectories: vec![Track {
                id: 0,
                kind: NodeKind::Leaf,
                nodes: vec![NodeRef { t: 0, id: 1 }, NodeRef { t: 1, id: 0 }],
            }],
            metadata: Metadata {
                alpha: 0.5,
                per_pair_m: vec![0.8],
                epsilon: 0.06,
                strategies: StrategyConfig::default(),
            },
        }
    }

    #[test]
    fn round_trip_keeps_bits() {
        let d = doc();
        let back = TrackingGraphDoc::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.edges[0].probability.to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn validation_rejects_bad_edges() {
        let mut d = doc();
        d.edges[0].j = 3;
        assert!(d.validate().is_err());
        let mut d = doc();
        d.edges[0].t = 1;
        assert!(d.validate().is_err());
        let mut d = doc();
        d.edges[1].probability = 0.0;
        assert!(d.validate().is_err());
        let mut d = doc();
        d.edges[1].probability = 0.6;
        assert!(d.validate().is_err());
        let mut d = doc();
        d.trajectories[0].nodes[1].id = 5;
        assert!(d.validate().is_err());
    }

    #[test]
    fn threshold_is_monotone() {
        let d = doc();
        assert_eq!(d.edges_above(0.0).count(), 2);
        assert_eq!(d.edges_above(0.4).count(), 1);
        assert_eq!(d.edges_above(1.0 + 1e-12).count(), 0);
    }

    #[test]
    fn summaries_are_capped() {
        let f = ScalarField::from_values(vec![300, 5], (0..1500).map(f64::from).collect()).unwrap();
        let s = summarize_field(&f, 128);
        assert_eq!(s.sample_dims, vec![100, 5]);
        assert_eq!(s.stride, vec![3, 1]);
        assert_eq!(s.values[1], 3.0);
        assert_eq!(s.values[100], 300.0);
        let small = summarize_field(&f, 1000);
        assert_eq!(small.values, f.values());
    }

    #[test]
    fn site_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let doc_path = dir.path().join("graph.json");
        std::fs::write(&doc_path, b"{\"x\":1}").unwrap();
        let ui = dir.path().join("ui");
        std::fs::create_dir(&ui).unwrap();
        std::fs::write(ui.join("index.html"), b"<html></html>").unwrap();
        let site = StaticSite::new(&doc_path, Some(&ui)).unwrap();
        assert_eq!(site.lookup("/graph.json").2, b"{\"x\":1}");
        assert_eq!(site.lookup("/").0, 200);
        assert_eq!(site.lookup("/missing").0, 404);
        assert_eq!(site.lookup("/../graph.json").0, 404);
        assert!(StaticSite::new(&dir.path().join("nope.json"), None).is_err());
    }
}
