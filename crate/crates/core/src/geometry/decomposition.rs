use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::cube::Aabb;
use crate::error::GeometryError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionMode {
    /// `Ω₁ = Ω`; every level gets its own coefficient field.
    Single,
    /// Dyadic slabs in `x₁`; one coefficient field hosts every level.
    Slabs,
}

/// Disjoint open boxes `Ω₁, …, Ω_N` filling a box `Ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainDecomposition {
    region: Aabb,
    mode: DecompositionMode,
    parts: Vec<Aabb>,
}

impl DomainDecomposition {
    pub fn single(region: Aabb) -> Self {
        Self {
            region,
            mode: DecompositionMode::Single,
            parts: vec![region],
        }
    }

    /// `Ωₙ = {x ∈ Ω : lo₁ + s·2⁻ⁿ < x₁ < lo₁ + s·2⁻ⁿ⁺¹}` for `n < count`; the
    /// last slab also takes the remainder `(lo₁, lo₁ + s·2⁻⁽ᶜᵒᵘⁿᵗ⁻¹⁾)` so the
    /// parts fill `Ω` exactly.
    pub fn slabs(region: Aabb, count: usize) -> Result<Self, GeometryError> {
        if count == 0 {
            return Err(GeometryError::InvalidParameter {
                name: "count",
                reason: "at least one slab is required".into(),
            });
        }
        let lo = *region.lo();
        let hi = *region.hi();
        let s = region.sides()[0];
        let parts = (1..=count)
            .map(|n| {
                let top = lo.x + s * 0.5f64.powi(n as i32 - 1);
                let bottom = if n == count { lo.x } else { lo.x + s * 0.5f64.powi(n as i32) };
                let top = if n == 1 { hi.x } else { top };
                Aabb::new(Point3::new(bottom, lo.y, lo.z), Point3::new(top, hi.y, hi.z))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            region,
            mode: DecompositionMode::Slabs,
            parts,
        })
    }

    pub fn region(&self) -> &Aabb {
        &self.region
    }

    pub fn mode(&self) -> DecompositionMode {
        self.mode
    }

    pub fn parts(&self) -> &[Aabb] {
        &self.parts
    }

    /// Index of the part containing `x`; on shared faces the lowest index wins.
    pub fn part_of(&self, x: &Point3<f64>) -> Option<usize> {
        let tol = 1e-12 * self.region.scale();
        self.parts.iter().position(|p| p.contains(x, tol))
    }

    /// `|Ω| − Σ|Ωₙ|` and whether the parts are pairwise disjoint.
    pub fn check(&self) -> (f64, bool) {
        let tol = 1e-12 * self.region.scale();
        let sum: f64 = self.parts.iter().map(Aabb::volume).sum();
        let disjoint = self
            .parts
            .iter()
            .enumerate()
            .all(|(i, a)| self.parts[i + 1..].iter().all(|b| a.interiors_disjoint(b, tol)));
        (self.region.volume() - sum, disjoint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slabs_fill_the_box() {
        let d = DomainDecomposition::slabs(Aabb::unit(), 4).unwrap();
        assert_eq!(d.parts().len(), 4);
        let (gap, disjoint) = d.check();
        assert!(gap.abs() < 1e-15);
        assert!(disjoint);
        assert_eq!(d.parts()[0].lo().x, 0.5);
        assert_eq!(d.parts()[3].lo().x, 0.0);
        assert_eq!(d.part_of(&Point3::new(0.3, 0.5, 0.5)), Some(1));
        assert_eq!(d.part_of(&Point3::new(0.5, 0.5, 0.5)), Some(0));
        assert!(DomainDecomposition::slabs(Aabb::unit(), 0).is_err());
    }

    #[test]
    fn single_part_is_the_region() {
        let d = DomainDecomposition::single(Aabb::unit());
        assert_eq!(d.parts(), &[Aabb::unit()]);
        assert_eq!(d.check(), (0.0, true));
    }
}
