//! Subsampling robustness: Jaccard overlap between trajectories and the
//! best-match similarities `S` and `S_W`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::field::ScalarField;
use crate::tracking::{Trajectory, TrajectoryPoint};

fn elements(t: &Trajectory) -> BTreeSet<(i64, usize)> {
    t.points.iter().map(|p| (p.t, p.vertex)).collect()
}

/// `|a ∩ b| / |a ∪ b|` over `(time, grid vertex)` elements.
pub fn jaccard(a: &Trajectory, b: &Trajectory) -> f64 {
    let (ea, eb) = (elements(a), elements(b));
    let union = ea.union(&eb).count();
    if union == 0 {
        return 0.0;
    }
    ea.intersection(&eb).count() as f64 / union as f64
}

/// Drops trajectories shorter than two points.
pub fn scoring_set(trajectories: &[Trajectory]) -> Vec<Trajectory> {
    trajectories.iter().filter(|t| t.len() >= 2).cloned().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S_W")]
    pub s_w: f64,
}

/// `S(A, B)` and its length-weighted form. Each `a` is scored against its
/// best partner `pi(a)` in `B` (ties to the smaller id). Trajectories of
/// length one are ignored; an empty `A` scores zero.
pub fn similarity(a: &[Trajectory], b: &[Trajectory]) -> Similarity {
    let a = scoring_set(a);
    let mut b = scoring_set(b);
    b.sort_by_key(|t| t.id);
    if a.is_empty() {
        return Similarity { s: 0.0, s_w: 0.0 };
    }
    let mut sum = 0.0;
    let mut weighted = 0.0;
    let mut length = 0usize;
    for x in &a {
        let best = b.iter().map(|y| jaccard(x, y)).fold(0.0, f64::max);
        sum += best;
        weighted += best * x.len() as f64;
        length += x.len();
    }
    Similarity {
        s: sum / a.len() as f64,
        s_w: weighted / length as f64,
    }
}

/// Restricts trajectories to time steps `t0, t0 + stride, ...`, splitting at
/// gaps and dropping pieces of length one.
pub fn restrict(trajectories: &[Trajectory], stride: usize, t0: i64) -> Vec<Trajectory> {
    let stride = stride.max(1) as i64;
    let mut out = Vec::new();
    for t in trajectories {
        let kept: Vec<&TrajectoryPoint> = t.points.iter().filter(|p| (p.t - t0).rem_euclid(stride) == 0).collect();
        let mut piece: Vec<TrajectoryPoint> = Vec::new();
        let mut flush = |piece: &mut Vec<TrajectoryPoint>| {
            if piece.len() >= 2 {
                out.push(Trajectory {
                    id: out.len(),
                    kind: t.kind,
                    points: std::mem::take(piece),
                });
            }
            piece.clear();
        };
        for p in kept {
            if piece.last().is_some_and(|q| p.t - q.t != stride) {
                flush(&mut piece);
            }
            piece.push(p.clone());
        }
        flush(&mut piece);
    }
    out
}

/// `A` for the subsampling protocol plus the strided fields used to
/// produce `B`. The stride starts at the first field's time index.
pub fn restrict_and_subsample(
    trajectories: &[Trajectory],
    fields: &[ScalarField<f64>],
    stride: usize,
) -> (Vec<Trajectory>, Vec<ScalarField<f64>>) {
    let t0 = fields.first().map_or(0, ScalarField::time_index);
    let strided = fields.iter().step_by(stride.max(1)).cloned().collect();
    (restrict(trajectories, stride, t0), strided)
}

/// `{S_AB, S_BA, SW_AB, SW_BA}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Scores {
    pub S_AB: f64,
    pub S_BA: f64,
    pub SW_AB: f64,
    pub SW_BA: f64,
}

pub fn scores(a: &[Trajectory], b: &[Trajectory]) -> Scores {
    let ab = similarity(a, b);
    let ba = similarity(b, a);
    Scores {
        S_AB: ab.s,
        S_BA: ba.s,
        SW_AB: ab.s_w,
        SW_BA: ba.s_w,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mergetree::NodeKind;

    pub(crate) fn traj(id: usize, elems: &[(i64, usize)]) -> Trajectory {
        Trajectory {
            id,
            kind: NodeKind::Leaf,
            points: elems
                .iter()
                .map(|&(t, v)| TrajectoryPoint {
                    t,
                    node: 0,
                    vertex: v,
                    coords: vec![0.0, 0.0],
                    f: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn jaccard_examples() {
        let a = traj(0, &[(0, 5), (1, 7)]);
        let b = traj(1, &[(1, 7), (2, 9)]);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &traj(2, &[(3, 1), (4, 1)])), 0.0);
        assert_eq!(jaccard(&a, &b), 1.0 / 3.0);
    }

    #[test]
    fn similarity_hand_fixture() {
        let a = vec![traj(0, &[(0, 1), (1, 1), (2, 1), (3, 1)]), traj(1, &[(0, 5), (1, 7)])];
        let b = vec![traj(0, &[(0, 1), (1, 1), (2, 1), (3, 1)]), traj(1, &[(1, 7), (2, 9)])];
        let s = similarity(&a, &b);
        assert_eq!(s.s, 2.0 / 3.0);
        assert_eq!(s.s_w, 7.0 / 9.0);
        assert_eq!(similarity(&a, &a), Similarity { s: 1.0, s_w: 1.0 });
        let far = vec![traj(0, &[(0, 100), (1, 100)])];
        assert_eq!(similarity(&a, &far), Similarity { s: 0.0, s_w: 0.0 });
    }

    #[test]
    fn not_symmetric() {
        let a = vec![traj(0, &[(0, 1), (1, 1)])];
        let b = vec![traj(0, &[(0, 1), (1, 1)]), traj(1, &[(0, 2), (1, 2)])];
        let s = scores(&a, &b);
        assert_eq!(s.S_AB, 1.0);
        assert_eq!(s.S_BA, 0.5);
    }

    #[test]
    fn restriction_examples() {
        let six = traj(0, &(0..6).map(|t| (t, 3)).collect::<Vec<_>>());
        let r = restrict(std::slice::from_ref(&six), 2, 0);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].len(), 3);
        assert_eq!(restrict(std::slice::from_ref(&six), 1, 0)[0], six);
        assert!(restrict(std::slice::from_ref(&six), 7, 0).is_empty());
        let short = traj(1, &[(4, 0)]);
        assert_eq!(restrict(&[six, short], 1, 0).len(), 1);
    }
}
