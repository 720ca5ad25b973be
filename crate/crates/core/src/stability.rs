//! Numerical checks of the GW stability bounds for merge trees over a
//! shared vertex set.
//!
//! Both fields live on the same grid `V`; each vertex is mapped to the arc
//! of the merge tree holding it, and `W_f(v, w)` is the height at which `v`
//! and `w` first share a sublevel-set component.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{add_noise, gaussian_mixture, GaussianSpec, ScalarField};
use crate::mergetree::{build_merge_tree, build_on_graph, Connectivity, Direction, LcaIndex, MergeTree};
use crate::network::{is_balanced, weighted_norm, MeasureNetwork};
use crate::transport::{solve_gw, SolverParams};
use crate::{Error, Result};

/// `(1/2 |V|^(2/q) ||f - g||, 1/2 |V|^(1/q) ||f - g||)`, the second only for
/// uniform `p`.
pub fn lca_bound(f: &[f64], g: &[f64], p: &[f64], q: f64, v_count: usize) -> Result<(f64, Option<f64>)> {
    if !is_balanced(p) {
        return Err(Error::NotBalanced);
    }
    let norm = weighted_norm(f, g, p, q)?;
    let v = v_count as f64;
    let loose = 0.5 * v.powf(2.0 / q) * norm;
    let uniform = p.iter().all(|&x| (x - p[0]).abs() <= 1e-15 * p[0]);
    Ok((loose, uniform.then(|| 0.5 * v.powf(1.0 / q) * norm)))
}

/// `(|V|^(2/q) + 2) ||f - g||`, the bound for path-length encodings.
pub fn sp_bound(f: &[f64], g: &[f64], p: &[f64], q: f64, v_count: usize) -> Result<f64> {
    if !is_balanced(p) {
        return Err(Error::NotBalanced);
    }
    let norm = weighted_norm(f, g, p, q)?;
    Ok(((v_count as f64).powf(2.0 / q) + 2.0) * norm)
}

/// `1/2 ||W_f - W_g||_{L^q(p x p)}`, the GW loss of the identity coupling.
pub fn identity_half_loss(a: &MeasureNetwork<f64>, b: &MeasureNetwork<f64>, q: f64) -> Result<f64> {
    if a.p() != b.p() {
        return Err(Error::Shape("networks must share their measure".into()));
    }
    half_loss(a.w(), b.w(), a.p().as_slice().unwrap(), q)
}

fn half_loss(wf: &Array2<f64>, wg: &Array2<f64>, p: &[f64], q: f64) -> Result<f64> {
    let n = p.len();
    if wf.dim() != (n, n) || wg.dim() != (n, n) {
        return Err(Error::Shape("matrices do not match the measure".into()));
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (wf[[i, j]] - wg[[i, j]]).abs().powf(q) * p[i] * p[j];
        }
    }
    Ok(0.5 * s.powf(1.0 / q))
}

/// Merge height of two vertices of the tree's originating field.
pub struct VertexHeights<'a> {
    tree: &'a MergeTree<f64>,
    index: LcaIndex<'a, f64>,
    labels: &'a [usize],
    values: &'a [f64],
}

impl<'a> VertexHeights<'a> {
    pub fn new(tree: &'a MergeTree<f64>, values: &'a [f64]) -> Result<Self> {
        let labels = tree
            .vertex_labels()
            .ok_or_else(|| Error::InvalidTree("tree has no vertex labels".into()))?;
        if labels.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            tree,
            index: LcaIndex::new(tree),
            labels,
            values,
        })
    }

    /// `W_f(v, w)`: for join trees the smallest `a` with `v`, `w` connected
    /// in `f <= a`; mirrored for split trees.
    pub fn get(&self, v: usize, w: usize) -> f64 {
        let c = self.index.lca(self.labels[v], self.labels[w]);
        let fc = self.tree.node(c).f;
        let (fv, fw) = (self.values[v], self.values[w]);
        match self.tree.direction() {
            Direction::Join => fv.max(fw).max(fc),
            Direction::Split => fv.min(fw).min(fc),
        }
    }

    pub fn matrix(&self) -> Array2<f64> {
        let n = self.values.len();
        let mut w = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let x = self.get(i, j);
                w[[i, j]] = x;
                w[[j, i]] = x;
            }
        }
        w
    }
}

/// `D(v, w) = 2 W(v, w) - f(v) - f(w)`.
pub fn path_matrix(w: &Array2<f64>, f: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn(w.dim(), |(i, j)| {
        let (a, b) = (i.min(j), i.max(j));
        2.0 * w[[a, b]] - f[a] - f[b]
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub dims: Vec<usize>,
    pub iotas: Vec<f64>,
    pub instances: usize,
    pub seed: u64,
    pub gaussians: usize,
    pub q: f64,
    /// Frank-Wolfe budget for the warm-started GW solves.
    pub max_iters: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            dims: vec![16, 16],
            iotas: (1..=10).map(|k| k as f64 / 100.0).collect(),
            instances: 20,
            seed: 42,
            gaussians: 4,
            q: 2.0,
            max_iters: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub iota: f64,
    pub instance_id: usize,
    pub norm: f64,
    pub gw_value: f64,
    pub identity_half_loss: f64,
    pub tight_bound: f64,
    pub loose_bound: f64,
    pub sp_gw_value: f64,
    pub sp_identity_half_loss: f64,
    pub sp_bound: f64,
}

impl BoundRecord {
    /// Every inequality the theorem chain promises, with `slack`.
    pub fn violations(&self, slack: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.gw_value > self.identity_half_loss + slack {
            out.push("gw_value > identity_half_loss");
        }
        if self.identity_half_loss > self.tight_bound + slack {
            out.push("identity_half_loss > tight_bound");
        }
        if self.tight_bound > self.loose_bound + slack {
            out.push("tight_bound > loose_bound");
        }
        if self.sp_gw_value > self.sp_identity_half_loss + slack {
            out.push("sp_gw_value > sp_identity_half_loss");
        }
        if self.sp_identity_half_loss > self.sp_bound + slack {
            out.push("sp_identity_half_loss > sp_bound");
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub q: f64,
    pub records: Vec<BoundRecord>,
}

/// Random mixture of `count` Gaussians with amplitudes of both signs.
pub fn random_mixture(dims: &[usize], count: usize, seed: u64) -> Result<ScalarField<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<GaussianSpec<f64>> = (0..count.max(1))
        .map(|_| {
            let center = dims.iter().map(|&d| rng.gen_range(0.0..(d - 1) as f64)).collect();
            let amplitude = rng.gen_range(-1.0..1.0);
            let sigma = dims.iter().map(|&d| rng.gen_range(0.08..0.25) * d as f64).collect();
            GaussianSpec {
                center,
                amplitude,
                sigma,
            }
        })
        .collect();
    let spacing = vec![1.0; dims.len()];
    let origin = vec![0.0; dims.len()];
    gaussian_mixture(&specs, dims, &origin, &spacing)
}

fn vertex_network(w: Array2<f64>, p: &Array1<f64>) -> Result<MeasureNetwork<f64>> {
    MeasureNetwork::new(p.clone(), w, None, vec![])
}

/// Bound record for a pair of fields on the same grid; `iota` and
/// `instance_id` are copied into the record.
pub fn bound_record(
    f: &ScalarField<f64>,
    g: &ScalarField<f64>,
    q: f64,
    max_iters: usize,
    iota: f64,
    instance_id: usize,
) -> Result<BoundRecord> {
    let conn = Connectivity::default_for(f.dimension());
    let tf = build_merge_tree(f, Direction::Join, conn)?;
    let tg = build_merge_tree(g, Direction::Join, conn)?;
    let wf = VertexHeights::new(&tf, f.values())?.matrix();
    let wg = VertexHeights::new(&tg, g.values())?.matrix();
    let n = f.vertex_count();
    let p = Array1::from_elem(n, 1.0 / n as f64);
    let ps = p.as_slice().unwrap();
    let (loose, tight) = lca_bound(f.values(), g.values(), ps, q, n)?;
    let tight = tight.expect("uniform measure");
    let spb = sp_bound(f.values(), g.values(), ps, q, n)?;
    let norm = weighted_norm(f.values(), g.values(), ps, q)?;
    let df = path_matrix(&wf, f.values());
    let dg = path_matrix(&wg, g.values());
    let id_lca = half_loss(&wf, &wg, ps, q)?;
    let id_sp = half_loss(&df, &dg, ps, q)?;

    let params = SolverParams::new(1.0, 1.0)
        .with_q(q)
        .with_max_iters(max_iters)
        .with_init(Array2::from_diag(&p));
    let gw = |a: Array2<f64>, b: Array2<f64>| -> Result<f64> {
        let (na, nb) = (vertex_network(a, &p)?, vertex_network(b, &p)?);
        Ok(solve_gw(&na, &nb, &params)?.distance)
    };
    Ok(BoundRecord {
        iota,
        instance_id,
        norm,
        gw_value: gw(wf, wg)?,
        identity_half_loss: id_lca,
        tight_bound: tight,
        loose_bound: loose,
        sp_gw_value: gw(df, dg)?,
        sp_identity_half_loss: id_sp,
        sp_bound: spb,
    })
}

/// Noise sweep over one random base field. Instance `k` (counted across
/// all noise levels) uses seed `seed + k`.
pub fn run_stability_experiment(config: &StabilityConfig) -> Result<BoundReport> {
    let base = random_mixture(&config.dims, config.gaussians, config.seed)?;
    let jobs: Vec<(f64, usize)> = config
        .iotas
        .iter()
        .enumerate()
        .flat_map(|(li, &iota)| (0..config.instances).map(move |k| (iota, li * config.instances + k)))
        .collect();
    let records: Vec<Option<BoundRecord>> = jobs
        .par_iter()
        .map(|&(iota, id)| {
            let g = add_noise(&base, iota, config.seed.wrapping_add(id as u64))?;
            match bound_record(&base, &g, config.q, config.max_iters, iota, id) {
                Ok(r) => Ok(Some(r)),
                Err(e @ (Error::InvalidTree(_) | Error::Disconnected { .. })) => {
                    log::warn!("skipping instance {id}: {e}");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(BoundReport {
        q: config.q,
        records: records.into_iter().flatten().collect(),
    })
}

fn quartiles(mut xs: Vec<f64>) -> (f64, f64, f64, f64) {
    xs.sort_by(f64::total_cmp);
    let at = |f: f64| {
        let pos = f * (xs.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        xs[lo] + (xs[hi] - xs[lo]) * (pos - lo as f64)
    };
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (mean, at(0.25), at(0.5), at(0.75))
}

impl BoundReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(Error::Csv)?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Mean and quartiles of every quantity per noise level.
    pub fn summary_csv(&self) -> Result<String> {
        let mut levels: Vec<f64> = self.records.iter().map(|r| r.iota).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["iota", "quantity", "mean", "q1", "median", "q3"])?;
        type Getter = fn(&BoundRecord) -> f64;
        let quantities: [(&str, Getter); 7] = [
            ("gw_value", |r| r.gw_value),
            ("identity_half_loss", |r| r.identity_half_loss),
            ("tight_bound", |r| r.tight_bound),
            ("loose_bound", |r| r.loose_bound),
            ("sp_gw_value", |r| r.sp_gw_value),
            ("sp_identity_half_loss", |r| r.sp_identity_half_loss),
            ("sp_bound", |r| r.sp_bound),
        ];
        for iota in levels {
            let rows: Vec<&BoundRecord> = self.records.iter().filter(|r| r.iota == iota).collect();
            for (name, get) in quantities {
                let (mean, q1, med, q3) = quartiles(rows.iter().map(|r| get(r)).collect());
                w.write_record([
                    iota.to_string(),
                    name.to_string(),
                    mean.to_string(),
                    q1.to_string(),
                    med.to_string(),
                    q3.to_string(),
                ])?;
            }
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| Error::InvalidDocument(e.to_string()))?)
            .expect("csv output is utf-8"))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TightnessReport {
    pub n: usize,
    pub p0: f64,
    pub p1: f64,
    /// `2 n p0 + p1 - 1`.
    pub constraint_residual: f64,
    pub balanced: bool,
    /// GW loss of the identity coupling, measured on the construction.
    pub distance: f64,
    /// `1/2 (2 p0^2 n^2 + p1^2 + 4 p0 p1 n)^(1/q)`.
    pub predicted_distance: f64,
    /// `(d / (1/2 ||f - g||))^q`.
    pub ratio_q: f64,
    /// `ratio_q / |V|^2`, tends to `1/4`.
    pub ratio_over_v2: f64,
}

/// Path on `2n + 1` vertices, `f` a unit spike at the middle, `g = 0`, and
/// `p` equal to `p0` off the spike and `p1 = 2 p0^2` on it, with
/// `2 n p0 + p1 = 1`.
pub fn tightness_example(n: usize, q: f64) -> Result<TightnessReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let nf = n as f64;
    // positive root of 2 p0^2 + 2 n p0 - 1 = 0
    let p0 = 1.0 / (nf + (nf * nf + 2.0).sqrt());
    let p1 = 2.0 * p0 * p0;
    let len = 2 * n + 1;
    let mut f = vec![0.0; len];
    f[n] = 1.0;
    let g = vec![0.0; len];
    let mut p = vec![p0; len];
    p[n] = p1;

    let path_neighbors = |v: usize, out: &mut Vec<usize>| {
        if v > 0 {
            out.push(v - 1);
        }
        if v + 1 < len {
            out.push(v + 1);
        }
    };
    let tf = build_on_graph(&f, |v| vec![v as f64], path_neighbors, Direction::Join)?;
    let tg = build_on_graph(&g, |v| vec![v as f64], path_neighbors, Direction::Join)?;
    let hf = VertexHeights::new(&tf, &f)?;
    let hg = VertexHeights::new(&tg, &g)?;
    let mut s = 0.0;
    for v in 0..len {
        for w in 0..len {
            s += (hf.get(v, w) - hg.get(v, w)).abs().powf(q) * p[v] * p[w];
        }
    }
    let distance = 0.5 * s.powf(1.0 / q);
    let predicted = 0.5 * (2.0 * p0 * p0 * nf * nf + p1 * p1 + 4.0 * p0 * p1 * nf).powf(1.0 / q);
    let norm = weighted_norm(&f, &g, &p, q)?;
    let ratio_q = (distance / (0.5 * norm)).powf(q);
    Ok(TightnessReport {
        n,
        p0,
        p1,
        constraint_residual: 2.0 * nf * p0 + p1 - 1.0,
        balanced: is_balanced(&p),
        distance,
        predicted_distance: predicted,
        ratio_q,
        ratio_over_v2: ratio_q / (len * len) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bound_examples() {
        let p = [0.25; 4];
        assert_eq!(lca_bound(&[1.0; 4], &[1.0; 4], &p, 2.0, 4).unwrap(), (0.0, Some(0.0)));
        let (loose, tight) = lca_bound(&[1.0; 4], &[0.0; 4], &p, 2.0, 4).unwrap();
        assert_relative_eq!(loose, 2.0);
        assert_relative_eq!(tight.unwrap(), 1.0);
        assert!(matches!(lca_bound(&[1.0, 0.0], &[0.0, 0.0], &[0.9, 0.1], 2.0, 2), Err(Error::NotBalanced)));
        assert_eq!(sp_bound(&[1.0; 4], &[1.0; 4], &p, 2.0, 4).unwrap(), 0.0);
        assert_relative_eq!(sp_bound(&[1.0; 4], &[0.0; 4], &p, 2.0, 4).unwrap(), 6.0);
        let p9 = [1.0 / 9.0; 9];
        assert_relative_eq!(sp_bound(&[1.0; 9], &[0.0; 9], &p9, 1.0, 9).unwrap(), 83.0, max_relative = 1e-14);
        let (_, tight) = lca_bound(&[1.0, 0.0, 0.0], &[0.0; 3], &[0.3, 0.35, 0.35], 2.0, 3).unwrap();
        assert!(tight.is_none());
    }

    #[test]
    fn half_loss_examples() {
        let p = Array1::from(vec![1.0]);
        let a = MeasureNetwork::new(p.clone(), ndarray::array![[3.0]], None, vec![]).unwrap();
        let b = MeasureNetwork::new(p, ndarray::array![[1.5]], None, vec![]).unwrap();
        assert_eq!(identity_half_loss(&a, &b, 2.0).unwrap(), 0.75);
        assert_eq!(identity_half_loss(&a, &a, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn vertex_heights_on_path() {
        let f = [3.0, 1.0, 4.0, 0.0, 2.0];
        let t = build_on_graph(
            &f,
            |v| vec![v as f64],
            |v, out| {
                if v > 0 {
                    out.push(v - 1)
                }
                if v < 4 {
                    out.push(v + 1)
                }
            },
            Direction::Join,
        )
        .unwrap();
        let h = VertexHeights::new(&t, &f).unwrap();
        // bottleneck along the unique path
        for v in 0..5 {
            for w in 0..5 {
                let (lo, hi) = (v.min(w), v.max(w));
                let expect = f[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(h.get(v, w), expect);
            }
        }
    }

    #[test]
    fn tightness_small_cases() {
        let r = tightness_example(2, 2.0).unwrap();
        assert!(r.balanced);
        assert!(r.p1 * r.p1 <= r.p0);
        for n in [1, 2, 5, 30] {
            let r = tightness_example(n, 2.0).unwrap();
            assert!(r.constraint_residual.abs() < 1e-12);
            assert_relative_eq!(r.distance, r.predicted_distance, max_relative = 1e-10);
        }
    }

    #[test]
    fn zero_noise_gives_zero() {
        let config = StabilityConfig {
            dims: vec![6, 6],
            iotas: vec![0.0],
            instances: 2,
            ..Default::default()
        };
        let rep = run_stability_experiment(&config).unwrap();
        assert_eq!(rep.records.len(), 2);
        for r in &rep.records {
            assert_eq!(r.identity_half_loss, 0.0);
            assert_eq!(r.loose_bound, 0.0);
            assert!(r.gw_value.abs() < 1e-7);
        }
    }

    #[test]
    fn small_sweep_respects_bounds() {
        let config = StabilityConfig {
            dims: vec![8, 8],
            iotas: vec![0.02, 0.08],
            instances: 3,
            ..Default::default()
        };
        let rep = run_stability_experiment(&config).unwrap();
        assert_eq!(rep.records.len(), 6);
        for r in &rep.records {
            assert!(r.violations(1e-9).is_empty(), "{r:?}");
        }
        assert!(rep.summary_csv().unwrap().lines().count() > 1);
    }
}
