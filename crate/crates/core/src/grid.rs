//! Uniform tensor grid on the box [−1,1]^d with boundary quadrature.

use nalgebra::DVector;

use crate::error::{MaslovError, Result};

/// One face contribution of a boundary node: outward face normal and the
/// share of the node's boundary weight lying on that face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacePart {
    pub normal: [f64; 2],
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct GridDomain {
    pub d: usize,
    pub n: usize,
    pub h: f64,
    pub coords: Vec<[f64; 2]>,
    pub interior_nodes: Vec<usize>,
    pub boundary_nodes: Vec<usize>,
    pub volume_weights: DVector<f64>,
    pub boundary_weights: DVector<f64>,
    pub normals: Vec<[f64; 2]>,
    pub nu_dot_x: Vec<f64>,
    pub face_parts: Vec<Vec<FacePart>>,
    boundary_index: Vec<Option<usize>>,
}

impl GridDomain {
    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    /// Position of a node in the boundary ordering, if it is a boundary node.
    pub fn boundary_position(&self, node: usize) -> Option<usize> {
        self.boundary_index[node]
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        if self.d == 1 {
            i
        } else {
            i + self.n * j
        }
    }

    /// Grid indices (i, j) of a node; j = 0 in one dimension.
    pub fn ij(&self, node: usize) -> (usize, usize) {
        if self.d == 1 {
            (node, 0)
        } else {
            (node % self.n, node / self.n)
        }
    }

    pub fn center_node(&self) -> usize {
        let c = self.n / 2;
        self.node(c, if self.d == 1 { 0 } else { c })
    }

    pub fn volume(&self) -> f64 {
        self.volume_weights.sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_weights.sum()
    }

    /// Grid edges (a, b, axis) with the stiffness coefficient c_e / h².
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        let h = self.h;
        let mut out = Vec::new();
        if self.d == 1 {
            for i in 0..n - 1 {
                out.push((i, i + 1, 1.0 / h));
            }
            return out;
        }
        let on_edge = |k: usize| k == 0 || k == n - 1;
        for j in 0..n {
            let c = if on_edge(j) { 0.5 } else { 1.0 };
            for i in 0..n - 1 {
                out.push((self.node(i, j), self.node(i + 1, j), c));
            }
        }
        for i in 0..n {
            let c = if on_edge(i) { 0.5 } else { 1.0 };
            for j in 0..n - 1 {
                out.push((self.node(i, j), self.node(i, j + 1), c));
            }
        }
        out
    }
}

/// Builds the grid on [−1,1]^d with n nodes per side.
pub fn build_square_grid(d: usize, n: usize) -> Result<GridDomain> {
    if d != 1 && d != 2 {
        return Err(MaslovError::Input(format!("dimension must be 1 or 2, got {d}")));
    }
    if n < 5 || n.is_multiple_of(2) {
        return Err(MaslovError::Input(format!("n must be odd and at least 5, got {n}")));
    }
    let h = 2.0 / (n - 1) as f64;
    let x = |i: usize| -1.0 + i as f64 * h;
    let last = n - 1;

    if d == 1 {
        let coords: Vec<[f64; 2]> = (0..n).map(|i| [x(i), 0.0]).collect();
        let mut vol = DVector::from_element(n, h);
        vol[0] = h / 2.0;
        vol[last] = h / 2.0;
        let mut boundary_index = vec![None; n];
        boundary_index[0] = Some(0);
        boundary_index[last] = Some(1);
        let face_parts = vec![vec![FacePart { normal: [-1.0, 0.0], weight: 1.0 }], vec![FacePart { normal: [1.0, 0.0], weight: 1.0 }]];
        return Ok(GridDomain {
            d,
            n,
            h,
            coords,
            interior_nodes: (1..last).collect(),
            boundary_nodes: vec![0, last],
            volume_weights: vol,
            boundary_weights: DVector::from_element(2, 1.0),
            normals: vec![[-1.0, 0.0], [1.0, 0.0]],
            nu_dot_x: vec![1.0, 1.0],
            face_parts,
            boundary_index,
        });
    }

    let count = n * n;
    let mut coords = Vec::with_capacity(count);
    let mut vol = DVector::zeros(count);
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let mut boundary_index = vec![None; count];
    let mut normals = Vec::new();
    let mut nu_dot_x = Vec::new();
    let mut face_parts = Vec::new();
    let mut bweights = Vec::new();
    let edge_factor = |k: usize| if k == 0 || k == last { 0.5 } else { 1.0 };

    for j in 0..n {
        for i in 0..n {
            let node = i + n * j;
            let p = [x(i), x(j)];
            coords.push(p);
            vol[node] = h * h * edge_factor(i) * edge_factor(j);
            let mut faces = Vec::new();
            if i == 0 {
                faces.push([-1.0, 0.0]);
            }
            if i == last {
                faces.push([1.0, 0.0]);
            }
            if j == 0 {
                faces.push([0.0, -1.0]);
            }
            if j == last {
                faces.push([0.0, 1.0]);
            }
            if faces.is_empty() {
                interior.push(node);
                continue;
            }
            boundary_index[node] = Some(boundary.len());
            boundary.push(node);
            // every boundary node carries weight h; corners split it over two faces
            let share = h / faces.len() as f64;
            let parts: Vec<FacePart> = faces.iter().map(|&f| FacePart { normal: f, weight: share }).collect();
            let mut nrm = [0.0, 0.0];
            for f in &faces {
                nrm[0] += f[0];
                nrm[1] += f[1];
            }
            let len = (nrm[0] * nrm[0] + nrm[1] * nrm[1]).sqrt();
            normals.push([nrm[0] / len, nrm[1] / len]);
            let ndx: f64 = parts.iter().map(|fp| fp.weight * (fp.normal[0] * p[0] + fp.normal[1] * p[1])).sum::<f64>() / h;
            nu_dot_x.push(ndx);
            face_parts.push(parts);
            bweights.push(h);
        }
    }

    Ok(GridDomain {
        d,
        n,
        h,
        coords,
        interior_nodes: interior,
        boundary_nodes: boundary,
        volume_weights: vol,
        boundary_weights: DVector::from_vec(bweights),
        normals,
        nu_dot_x,
        face_parts,
        boundary_index,
    })
}

/// Closed-form Dirichlet eigenvalues of the grid Laplacian on [−1,1]^d, ascending with
/// multiplicity: (4/h²)·Σ_i sin²(k_i π h/4), k_i = 1..n−2.
pub fn dirichlet_box_spectrum(d: usize, n: usize) -> Result<Vec<f64>> {
    if d != 1 && d != 2 {
        return Err(MaslovError::Input(format!("dimension must be 1 or 2, got {d}")));
    }
    let h = 2.0 / (n - 1) as f64;
    let one: Vec<f64> = (1..n - 1).map(|k| 4.0 / (h * h) * (k as f64 * std::f64::consts::PI * h / 4.0).sin().powi(2)).collect();
    let mut out = if d == 1 { one.clone() } else { one.iter().flat_map(|a| one.iter().map(move |b| a + b)).collect() };
    out.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_grid() {
        let g = build_square_grid(1, 5).unwrap();
        assert_eq!(g.boundary_nodes, vec![0, 4]);
        assert_eq!(g.nu_dot_x, vec![1.0, 1.0]);
        assert!((g.volume() - 2.0).abs() < 1e-12);
        assert!((g.perimeter() - 2.0).abs() < 1e-12);
        assert_eq!(g.coords[g.center_node()], [0.0, 0.0]);
    }

    #[test]
    fn perimeter_and_area_2d() {
        let g = build_square_grid(2, 17).unwrap();
        assert!((g.perimeter() - 8.0).abs() < 1e-12);
        assert!((g.volume() - 4.0).abs() < 1e-12);
        assert_eq!(g.boundary_nodes.len(), 4 * 16);
        assert_eq!(g.interior_nodes.len(), 15 * 15);
    }

    #[test]
    fn corner_geometry() {
        let g = build_square_grid(2, 9).unwrap();
        let corner = g.node(8, 8);
        let b = g.boundary_position(corner).unwrap();
        assert!((g.nu_dot_x[b] - 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((g.normals[b][0] - s).abs() < 1e-15 && (g.normals[b][1] - s).abs() < 1e-15);
        assert_eq!(g.face_parts[b].len(), 2);
        assert!((g.face_parts[b][0].weight - g.h / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(build_square_grid(2, 8).is_err());
        assert!(build_square_grid(2, 3).is_err());
        assert!(build_square_grid(3, 9).is_err());
    }

    #[test]
    fn star_shaped_everywhere() {
        for n in [5, 9, 17] {
            let g = build_square_grid(2, n).unwrap();
            assert!(g.nu_dot_x.iter().all(|&v| v > 0.0 && v <= 2f64.sqrt()));
        }
    }
}
