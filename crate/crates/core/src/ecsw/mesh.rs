//! Reduced meshes and their text format:
//!
//! ```text
//! QMOR-MESH v1 Ne=<N_e> ne=<n_e> tau=<τ> n=<n> ratio=<achieved> manifold=<checksum|none>
//! <entity_id> <weight>
//! ...
//! augmented <id> <id> ...
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hdm::SemiDiscreteModel;
use crate::manifold::{manifold_checksum, Manifold};

const MAGIC: &str = "QMOR-MESH";

/// Cubature weights `ξ` on the selected entities `Ẽ`, and the augmented
/// set `Ẽ+` of dofs their residuals read.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMesh {
    entity_count: usize,
    weights: Vec<(usize, f64)>,
    augmented: Vec<usize>,
    tau: f64,
    achieved_ratio: f64,
    reduced_dim: usize,
    manifold: Option<String>,
}

fn augment(model: &SemiDiscreteModel, weights: &[(usize, f64)]) -> Vec<usize> {
    let set: BTreeSet<usize> = weights
        .iter()
        .flat_map(|&(e, _)| model.entities()[e].stencil.iter().copied())
        .collect();
    set.into_iter().collect()
}

impl ReducedMesh {
    /// Every entity with unit weight: hyperreduction that changes nothing.
    pub fn full(model: &SemiDiscreteModel, reduced_dim: usize) -> Self {
        let weights: Vec<_> = (0..model.entities().len()).map(|e| (e, 1.0)).collect();
        Self {
            entity_count: weights.len(),
            augmented: augment(model, &weights),
            weights,
            tau: 0.0,
            achieved_ratio: 0.0,
            reduced_dim,
            manifold: None,
        }
    }

    /// Weights must be positive, finite and name distinct entities.
    pub fn from_weights(
        model: &SemiDiscreteModel,
        mut weights: Vec<(usize, f64)>,
        tau: f64,
        reduced_dim: usize,
    ) -> Result<Self> {
        let ne = model.entities().len();
        weights.sort_by_key(|&(e, _)| e);
        for w in weights.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "entity {} listed twice",
                    w[0].0
                )));
            }
        }
        for &(e, xi) in &weights {
            if e >= ne {
                return Err(Error::InvalidArgument(format!(
                    "entity {e} outside a mesh of {ne}"
                )));
            }
            if !(xi > 0.0) || !xi.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "entity {e} has weight {xi}"
                )));
            }
        }
        Ok(Self {
            entity_count: ne,
            augmented: augment(model, &weights),
            weights,
            tau,
            achieved_ratio: f64::NAN,
            reduced_dim,
            manifold: None,
        })
    }

    pub(crate) fn with_ratio(mut self, ratio: f64) -> Self {
        self.achieved_ratio = ratio;
        self
    }

    /// Ties the mesh to `manifold`, so that loading it against another
    /// manifold is refused.
    pub fn bind_to(mut self, manifold: &Manifold) -> Self {
        self.manifold = Some(manifold_checksum(manifold));
        self
    }

    /// `(entity, ξ_e)` sorted by entity.
    pub fn weights(&self) -> &[(usize, f64)] {
        &self.weights
    }

    /// `Ẽ`
    pub fn selected(&self) -> Vec<usize> {
        self.weights.iter().map(|&(e, _)| e).collect()
    }

    /// `Ẽ+` as sorted dof indices.
    pub fn augmented(&self) -> &[usize] {
        &self.augmented
    }

    /// `n_e`
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `N_e`
    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `‖Cξ − d‖ / ‖d‖` on the training system (`NaN` when unknown).
    pub fn achieved_ratio(&self) -> f64 {
        self.achieved_ratio
    }

    pub fn reduced_dimension(&self) -> usize {
        self.reduced_dim
    }

    pub fn manifold_checksum(&self) -> Option<&str> {
        self.manifold.as_deref()
    }

    pub fn check_compatible(&self, manifold: &Manifold, model: &SemiDiscreteModel) -> Result<()> {
        if self.entity_count != model.entities().len() {
            return Err(Error::InvalidArgument(format!(
                "mesh/manifold mismatch: mesh has {} entities, model has {}",
                self.entity_count,
                model.entities().len()
            )));
        }
        if self.reduced_dim != manifold.dimension() {
            return Err(Error::InvalidArgument(format!(
                "mesh/manifold mismatch: mesh trained for n = {}, manifold has n = {}",
                self.reduced_dim,
                manifold.dimension()
            )));
        }
        if let Some(sum) = &self.manifold {
            let actual = manifold_checksum(manifold);
            if *sum != actual {
                return Err(Error::InvalidArgument(format!(
                    "mesh/manifold mismatch: mesh trained on manifold {sum}, got {actual}"
                )));
            }
        }
        Ok(())
    }
}

pub fn write_mesh(mesh: &ReducedMesh) -> String {
    let mut out = format!(
        "{MAGIC} v1 Ne={} ne={} tau={} n={} ratio={} manifold={}\n",
        mesh.entity_count,
        mesh.len(),
        mesh.tau,
        mesh.reduced_dim,
        mesh.achieved_ratio,
        mesh.manifold.as_deref().unwrap_or("none")
    );
    for &(e, xi) in &mesh.weights {
        out.push_str(&format!("{e} {xi}\n"));
    }
    out.push_str("augmented");
    for i in &mesh.augmented {
        out.push_str(&format!(" {i}"));
    }
    out.push('\n');
    out
}

fn field<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    header
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
        .ok_or_else(|| Error::Format(format!("mesh header is missing '{key}'")))
}

fn parsed<T: std::str::FromStr>(header: &str, key: &str) -> Result<T> {
    let raw = field(header, key)?;
    raw.parse()
        .map_err(|_| Error::Format(format!("mesh header field {key}={raw} is not valid")))
}

/// Parses a mesh file and checks it against `model`; the augmented list must
/// equal the one implied by the weights.
pub fn read_mesh(text: &str, model: &SemiDiscreteModel) -> Result<ReducedMesh> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty mesh file".into()))?;
    if !header.starts_with(&format!("{MAGIC} v1")) {
        return Err(Error::Format(format!("expected a '{MAGIC} v1' header")));
    }
    let ne_total: usize = parsed(header, "Ne")?;
    let ne: usize = parsed(header, "ne")?;
    let tau: f64 = parsed(header, "tau")?;
    let n: usize = parsed(header, "n")?;
    let ratio: f64 = parsed(header, "ratio")?;
    let manifold = match field(header, "manifold")? {
        "none" => None,
        sum => Some(sum.to_string()),
    };
    if ne_total != model.entities().len() {
        return Err(Error::InvalidArgument(format!(
            "mesh/manifold mismatch: mesh has {ne_total} entities, model has {}",
            model.entities().len()
        )));
    }
    let mut weights = Vec::with_capacity(ne);
    let mut augmented = None;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        if let Some(rest) = line.strip_prefix("augmented") {
            let ids = rest
                .split_whitespace()
                .map(|v| v.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Format("bad augmented id list".into()))?;
            augmented = Some(ids);
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(e), Some(w), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Format(format!("bad mesh line '{line}'")));
        };
        let e = e
            .parse()
            .map_err(|_| Error::Format(format!("bad entity id '{e}'")))?;
        let w = w
            .parse()
            .map_err(|_| Error::Format(format!("bad weight '{w}'")))?;
        weights.push((e, w));
    }
    if weights.len() != ne {
        return Err(Error::Format(format!(
            "header declares {ne} entities, file lists {}",
            weights.len()
        )));
    }
    let mut mesh = ReducedMesh::from_weights(model, weights, tau, n)?.with_ratio(ratio);
    mesh.manifold = manifold;
    match augmented {
        Some(ids) if ids == mesh.augmented => Ok(mesh),
        Some(_) => Err(Error::Format(
            "augmented set does not match the selected entities".into(),
        )),
        None => Err(Error::Format("missing augmented set".into())),
    }
}

pub fn save_mesh(mesh: &ReducedMesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>, model: &SemiDiscreteModel) -> Result<ReducedMesh> {
    read_mesh(&fs::read_to_string(path)?, model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdm::BurgersParams;

    fn model() -> SemiDiscreteModel {
        SemiDiscreteModel::burgers(&BurgersParams {
            cells: 10,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn augmented_set_adds_upwind_neighbours() {
        let m = model();
        let mesh =
            ReducedMesh::from_weights(&m, vec![(7, 2.0), (0, 0.5), (3, 1.0)], 1e-2, 4).unwrap();
        assert_eq!(mesh.selected(), vec![0, 3, 7]);
        assert_eq!(mesh.augmented(), &[0, 2, 3, 6, 7]);
        assert!(ReducedMesh::from_weights(&m, vec![(10, 1.0)], 1e-2, 4).is_err());
        assert!(ReducedMesh::from_weights(&m, vec![(1, 0.0)], 1e-2, 4).is_err());
        assert!(ReducedMesh::from_weights(&m, vec![(1, 1.0), (1, 2.0)], 1e-2, 4).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = model();
        let mesh = ReducedMesh::from_weights(&m, vec![(2, 1.25), (9, 0.1 + 0.2)], 1e-2, 3)
            .unwrap()
            .with_ratio(0.009);
        let text = write_mesh(&mesh);
        assert!(text.starts_with("QMOR-MESH v1 Ne=10 ne=2 tau=0.01 n=3"));
        assert!(text.ends_with("augmented 1 2 8 9\n"));
        assert_eq!(read_mesh(&text, &m).unwrap(), mesh);
    }

    #[test]
    fn malformed_files() {
        let m = model();
        let good = write_mesh(&ReducedMesh::full(&m, 2));
        assert!(read_mesh(&good.replace("ne=10", "ne=9"), &m).is_err());
        assert!(read_mesh(&good.replace("augmented 0 1", "augmented 1"), &m).is_err());
        assert!(read_mesh(&good.replace("Ne=10", "Ne=11"), &m).is_err());
        assert!(read_mesh("QMOR-MESH v2\n", &m).is_err());
        assert_eq!(read_mesh(&good, &m).unwrap().len(), 10);
    }
}
