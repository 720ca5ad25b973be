//! Synthetic Gaussian-mixture scenes used by the examples, the tests and the
//! `gen` subcommand.

use crate::field::{gaussian_mixture, GaussianSpec, ScalarField};
use crate::Result;

/// Grid extent shared by the 2D scenes.
pub const SCENE_DIMS: [usize; 2] = [64, 64];

fn g(x: f64, y: f64, amplitude: f64, sigma: f64) -> GaussianSpec<f64> {
    GaussianSpec::isotropic(vec![x, y], amplitude, sigma)
}

fn sample(specs: &[GaussianSpec<f64>], t: i64) -> Result<ScalarField<f64>> {
    Ok(gaussian_mixture(specs, &SCENE_DIMS, &[0.0, 0.0], &[1.0, 1.0])?.with_time_index(t))
}

/// Five bumps; the split tree has 10 nodes.
pub fn peaks_five() -> Vec<GaussianSpec<f64>> {
    let mut specs = peaks_four();
    specs.push(removed_peak());
    specs
}

/// [`peaks_five`] without the small bump; the split tree has 8 nodes.
pub fn peaks_four() -> Vec<GaussianSpec<f64>> {
    vec![
        g(16.0, 16.0, 1.0, 6.0),
        g(47.0, 14.0, 0.9, 6.0),
        g(48.0, 47.0, 0.8, 6.0),
        g(15.0, 48.0, 0.7, 6.0),
    ]
}

/// The bump present in [`peaks_five`] only.
pub fn removed_peak() -> GaussianSpec<f64> {
    g(32.0, 31.0, 0.45, 4.0)
}

/// Pair of fields whose split trees differ by one extremum-saddle pair.
pub fn removal_pair() -> Result<(ScalarField<f64>, ScalarField<f64>)> {
    Ok((sample(&peaks_five(), 0)?, sample(&peaks_four(), 1)?))
}

/// Four positive bumps and one negative one; in the second field the top
/// bump splits into two.
pub fn split_pair() -> Result<(ScalarField<f64>, ScalarField<f64>)> {
    let common = [
        g(14.0, 18.0, 0.9, 6.0),
        g(50.0, 16.0, 0.8, 6.0),
        g(32.0, 30.0, -0.6, 7.0),
        g(18.0, 50.0, 0.7, 6.0),
    ];
    let mut a = common.to_vec();
    a.push(g(46.0, 48.0, 1.0, 6.0));
    let mut b = common.to_vec();
    b.push(g(42.0, 50.0, 0.75, 4.5));
    b.push(g(53.0, 45.0, 0.7, 4.5));
    Ok((sample(&a, 0)?, sample(&b, 1)?))
}

/// Three steps: bumps `A` and `B`, then `A`, `B` and a new `C`, then `A`
/// and `C`. Leaf trajectories have lengths 3 (`A`), 2 (`B`) and 2 (`C`).
pub fn appearance_sequence() -> Result<Vec<ScalarField<f64>>> {
    let a = g(16.0, 16.0, 1.0, 6.0);
    let b = g(48.0, 18.0, 0.8, 6.0);
    let c = g(30.0, 48.0, 0.9, 6.0);
    Ok(vec![
        sample(&[a.clone(), b.clone()], 0)?,
        sample(&[a.clone(), b, c.clone()], 1)?,
        sample(&[a, c], 2)?,
    ])
}

/// Eight bumps on a circle around a central dip, drifting towards the
/// merge position `merge_step` of `steps`. Pairs of neighbors approach and
/// fuse at the merge step, so every merged bump receives two symmetric
/// predecessors.
pub fn rotating_cycle(steps: usize, merge_step: usize) -> Result<Vec<ScalarField<f64>>> {
    let (cx, cy, radius) = (31.5, 31.5, 20.0);
    let mut fields = Vec::with_capacity(steps);
    for t in 0..steps {
        // half-angle between paired bumps shrinks linearly to zero
        let progress = (t as f64 / merge_step.max(1) as f64).min(1.0);
        let spread = std::f64::consts::PI / 8.0 * (1.0 - progress);
        let mut specs = vec![g(cx, cy, -1.0, 6.0)];
        for k in 0..4 {
            let base = std::f64::consts::FRAC_PI_2 * k as f64 + std::f64::consts::FRAC_PI_4;
            for sign in [-1.0, 1.0] {
                let a = base + sign * spread;
                specs.push(g(cx + radius * a.cos(), cy + radius * a.sin(), 1.0, 3.0));
            }
        }
        fields.push(sample(&specs, t as i64)?);
    }
    Ok(fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mergetree::{build_merge_tree, Connectivity, Direction, NodeKind};

    #[test]
    fn removal_pair_tree_sizes() {
        let (a, b) = removal_pair().unwrap();
        let ta = build_merge_tree(&a, Direction::Split, Connectivity::default()).unwrap();
        let tb = build_merge_tree(&b, Direction::Split, Connectivity::default()).unwrap();
        assert_eq!(ta.len(), 10);
        assert_eq!(ta.count_kind(NodeKind::Leaf), 5);
        assert_eq!(tb.len(), 8);
    }
}
