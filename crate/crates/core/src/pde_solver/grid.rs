use crate::error::{Result, TfcError};
use crate::poly_basis::{cgl_nodes, make_map, DomainMap};

/// Tensor product of mapped CGL nodes.
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    /// Node coordinates per axis in the problem domain.
    pub nodes: Vec<Vec<f64>>,
    pub maps: Vec<DomainMap>,
}

/// `n[k]` is the CGL order `N` on axis `k`; the axis gets `N + 1` nodes.
pub fn make_grid(domains: &[(f64, f64)], n: &[usize]) -> Result<CollocationGrid> {
    if domains.len() != n.len() || domains.is_empty() {
        return Err(TfcError::InvalidArgument(
            "one node count per domain axis is required".into(),
        ));
    }
    let mut nodes = Vec::with_capacity(n.len());
    let mut maps = Vec::with_capacity(n.len());
    for (&(lo, hi), &nk) in domains.iter().zip(n) {
        let map = make_map(lo, hi)?;
        nodes.push(cgl_nodes(nk)?.into_iter().map(|z| map.to_x(z)).collect());
        maps.push(map);
    }
    Ok(CollocationGrid { nodes, maps })
}

impl CollocationGrid {
    pub fn dims(&self) -> usize {
        self.nodes.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn c(&self, axis: usize) -> f64 {
        self.maps[axis].c
    }

    /// All grid points, first axis varying slowest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        tensor_points(&self.nodes)
    }
}

pub(crate) fn tensor_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(axes.len())];
    for nodes in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                nodes.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// `per_axis` equally spaced points per axis, endpoints included.
pub fn uniform_grid(domains: &[(f64, f64)], per_axis: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = domains
        .iter()
        .map(|&(lo, hi)| {
            (0..per_axis)
                .map(|i| {
                    if i + 1 == per_axis {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (per_axis - 1).max(1) as f64
                    }
                })
                .collect()
        })
        .collect();
    tensor_points(&axes)
}
