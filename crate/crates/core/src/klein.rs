//! Klein pairs, model geometries and reductive splittings.

use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::error::{Error, Result};
use crate::liegroups::{GroupRef, SubgroupInclusion};
use crate::numkit::{self, Mat, Subspace, Tolerances, Vector};
use crate::verify::{mat_json, CheckReport, Sampler, Tracker};

/// A Lie algebra `𝔤` with a distinguished subspace `𝔥`, given by the
/// `𝔤`-coordinates of a basis of `𝔥` as columns.
#[derive(Debug, Clone)]
pub struct KleinPair {
    pub g: GroupRef,
    pub h_coords: Mat,
}

impl KleinPair {
    pub fn new(g: &GroupRef, h_coords: Mat) -> Result<Self> {
        if h_coords.nrows() != g.dim() {
            return Err(Error::InvalidInput(format!(
                "𝔥 coordinates need {} rows, got {}",
                g.dim(),
                h_coords.nrows()
            )));
        }
        Ok(Self { g: g.clone(), h_coords })
    }

    pub fn from_inclusion(inc: &SubgroupInclusion) -> Self {
        Self {
            g: inc.ambient.clone(),
            h_coords: inc.algebra_injection.clone(),
        }
    }

    pub fn dim_g(&self) -> usize {
        self.g.dim()
    }

    pub fn dim_h(&self) -> usize {
        self.h_coords.ncols()
    }
}

/// Representation `H → GL(𝔤)` acting on `𝔤`-coordinates, evaluated on the
/// matrix of an element of `H`.
pub type RhoFn = Arc<dyn Fn(&Mat) -> Result<Mat> + Send + Sync>;

/// A Klein pair with a group `H` integrating `𝔥` and a representation of
/// `H` on `𝔤` extending the adjoint representation.
#[derive(Clone)]
pub struct ModelGeometry {
    pub pair: KleinPair,
    pub inclusion: SubgroupInclusion,
    pub rho: RhoFn,
}

impl fmt::Debug for ModelGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelGeometry")
            .field("g", &self.pair.g.name())
            .field("h", &self.inclusion.sub.name())
            .finish()
    }
}

impl ModelGeometry {
    /// Model with `ρ = Ad_G` restricted to the embedded `H`.
    pub fn adjoint(inclusion: SubgroupInclusion) -> Self {
        let inc = inclusion.clone();
        let rho: RhoFn = Arc::new(move |h: &Mat| inc.ambient.adjoint_matrix(&inc.embed_group(h)));
        Self::with_rho(inclusion, rho)
    }

    pub fn with_rho(inclusion: SubgroupInclusion, rho: RhoFn) -> Self {
        Self {
            pair: KleinPair::from_inclusion(&inclusion),
            inclusion,
            rho,
        }
    }

    pub fn h(&self) -> &GroupRef {
        &self.inclusion.sub
    }

    pub fn g(&self) -> &GroupRef {
        &self.pair.g
    }

    pub fn rho(&self, h: &Mat) -> Result<Mat> {
        (self.rho)(h)
    }

    /// Model dimension `dim 𝔤 − dim 𝔥`.
    pub fn base_dim(&self) -> usize {
        self.pair.dim_g() - self.pair.dim_h()
    }
}

/// Verifies that `𝔥` is a subalgebra of `𝔤`.
pub fn check_klein_pair(p: &KleinPair, tol: &Tolerances) -> CheckReport {
    let mut t = Tracker::new("klein_pair", "[𝔥, 𝔥] ⊆ 𝔥", tol.exact_tol);
    let span = match Subspace::span(&p.h_coords, tol) {
        Ok(s) => s,
        Err(e) => {
            t.record_error(&e, || json!({}));
            return t.finish();
        }
    };
    if span.dim() != p.dim_h() {
        t.record(f64::INFINITY, || json!({"reason": "𝔥 basis is dependent"}));
    }
    for i in 0..p.dim_h() {
        for j in (i + 1)..p.dim_h() {
            let a = p.h_coords.column(i).into_owned();
            let b = p.h_coords.column(j).into_owned();
            let r = span.distance(&p.g.bracket_coords(&a, &b));
            t.record(r, || json!({"i": i, "j": j}));
        }
    }
    t.finish()
}

/// Samples `ρ(e) = id`, `ρ(h₁h₂) = ρ(h₁)ρ(h₂)` and `ρ(h)|𝔥 = Ad_h`.
pub fn check_model_geometry(m: &ModelGeometry, sampler: &Sampler, tol: &Tolerances) -> Vec<CheckReport> {
    let h = m.h();
    let inj = &m.pair.h_coords;
    let mut identity = Tracker::new("rho_identity", "ρ(e) = id", tol.exact_tol);
    let k = m.pair.dim_g();
    identity.record_result(
        m.rho(&h.identity()).map(|r| (r - Mat::identity(k, k)).norm()),
        || json!({}),
    );

    let mut hom = Tracker::new("rho_homomorphism", "ρ(h₁h₂) = ρ(h₁)ρ(h₂)", tol.exact_tol);
    let mut ext = Tracker::new("rho_extends_adjoint", "ρ(h)|𝔥 = Ad_h", tol.exact_tol);
    let mut s = sampler.stream("model_geometry");
    for _ in 0..sampler.group_elements {
        let pair = s.group_element(h).and_then(|a| Ok((a, s.group_element(h)?)));
        let (h1, h2) = match pair {
            Ok(p) => p,
            Err(e) => {
                hom.record_error(&e, || json!({}));
                continue;
            }
        };
        hom.record_result(
            (|| Ok((m.rho(&(&h1 * &h2))? - m.rho(&h1)? * m.rho(&h2)?).norm()))(),
            || json!({"h1": mat_json(&h1), "h2": mat_json(&h2)}),
        );
        ext.record_result(
            (|| Ok((m.rho(&h1)? * inj - inj * h.adjoint_matrix(&h1)?).norm()))(),
            || json!({"h": mat_json(&h1)}),
        );
    }
    vec![identity.finish(), hom.finish(), ext.finish()]
}

/// A decomposition `𝔤 = 𝔥 ⊕ 𝔩` with the associated projections.
#[derive(Debug, Clone)]
pub struct ReductiveSplitting {
    /// `𝔤`-coordinates of a basis of `𝔩`, as columns.
    pub l_coords: Mat,
    pub h_coords: Mat,
    pub l_basis: Subspace,
    pub pr_h: Mat,
    pub pr_l: Mat,
    /// Maps a `𝔤`-vector to its `𝔩`-coordinates in the basis `l_coords`.
    pub l_coord_map: Mat,
    /// Maps a `𝔤`-vector to its `𝔥`-coordinates in the basis `h_coords`.
    pub h_coord_map: Mat,
}

impl ReductiveSplitting {
    fn from_bases(h_coords: &Mat, l_coords: Mat, tol: &Tolerances) -> Result<Self> {
        let n = h_coords.nrows();
        let (dh, dl) = (h_coords.ncols(), l_coords.ncols());
        if dh + dl != n || l_coords.nrows() != n {
            return Err(Error::NotReductive(format!(
                "dim 𝔥 + dim 𝔩 = {} but dim 𝔤 = {n}",
                dh + dl
            )));
        }
        let mut q = Mat::zeros(n, n);
        q.columns_mut(0, dh).copy_from(h_coords);
        q.columns_mut(dh, dl).copy_from(&l_coords);
        let (rank, _) = numkit::rank_nullspace(&q, tol)?;
        if rank != n {
            return Err(Error::NotReductive("candidate meets 𝔥 nontrivially".into()));
        }
        let q_inv = q.clone().try_inverse().ok_or_else(|| Error::NotReductive("singular splitting".into()))?;
        let h_coord_map = q_inv.rows(0, dh).into_owned();
        let l_coord_map = q_inv.rows(dh, dl).into_owned();
        let pr_h = h_coords * &h_coord_map;
        let pr_l = &l_coords * &l_coord_map;
        Ok(Self {
            l_basis: Subspace::span(&l_coords, tol)?,
            h_coords: h_coords.clone(),
            l_coords,
            pr_h,
            pr_l,
            l_coord_map,
            h_coord_map,
        })
    }

    pub fn dim_l(&self) -> usize {
        self.l_coords.ncols()
    }

    /// `𝔩`-coordinates of a `𝔤`-vector.
    pub fn l_part(&self, v: &Vector) -> Vector {
        &self.l_coord_map * v
    }

    /// `𝔥`-coordinates of a `𝔤`-vector.
    pub fn h_part(&self, v: &Vector) -> Vector {
        &self.h_coord_map * v
    }

    /// Largest distance of `ρ(h)𝔩` from `𝔩` over sampled `h`.
    fn invariance_residual(&self, m: &ModelGeometry, sampler: &Sampler) -> Result<f64> {
        let mut s = sampler.stream("reductive_split");
        let mut worst: f64 = 0.0;
        for _ in 0..sampler.group_elements {
            let r = m.rho(&s.group_element(m.h())?)?;
            for j in 0..self.dim_l() {
                let v = &r * self.l_coords.column(j);
                worst = worst.max(self.l_basis.distance(&v) / v.norm().max(1.0));
            }
        }
        Ok(worst)
    }
}

/// Finds or validates an `H`-invariant complement of `𝔥`.
///
/// Without a candidate, the complement is sought as the graph of a map
/// `T: 𝔠 → 𝔥` over the orthogonal complement `𝔠` of `𝔥`, and
/// `[𝔥, 𝔩] ⊆ 𝔩` becomes the linear system `T·D_a − A_a·T = B_a` where
/// `ad(h_a)` has blocks `A_a` on `𝔥`, `B_a: 𝔠 → 𝔥` and `D_a` on `𝔠`.
/// Finite invariance under `ρ(H)` is then checked by sampling.
pub fn reductive_split(
    m: &ModelGeometry,
    candidate: Option<&Mat>,
    sampler: &Sampler,
    tol: &Tolerances,
) -> Result<ReductiveSplitting> {
    let hc = &m.pair.h_coords;
    let split = match candidate {
        Some(l) => ReductiveSplitting::from_bases(hc, l.clone(), tol)?,
        None => ReductiveSplitting::from_bases(hc, solve_complement(m, tol)?, tol)?,
    };
    let worst = split.invariance_residual(m, sampler)?;
    if worst > tol.exact_tol {
        return Err(Error::NotReductive(format!(
            "ρ(h)𝔩 leaves 𝔩 by {worst:e}"
        )));
    }
    Ok(split)
}

fn solve_complement(m: &ModelGeometry, tol: &Tolerances) -> Result<Mat> {
    let g = m.g();
    let hc = &m.pair.h_coords;
    let n = g.dim();
    let dh = hc.ncols();
    let dc = n - dh;
    if dc == 0 {
        return Ok(Mat::zeros(n, 0));
    }
    let h_span = Subspace::span(hc, tol)?;
    let c = numkit::column_space(&(Mat::identity(n, n) - h_span.projector()), tol)?.basis;
    let mut q = Mat::zeros(n, n);
    q.columns_mut(0, dh).copy_from(hc);
    q.columns_mut(dh, dc).copy_from(&c);
    let q_inv = q.clone().try_inverse().ok_or_else(|| Error::NotReductive("𝔥 basis is degenerate".into()))?;

    // Unknown T (dh × dc) in column-major vec form; one block of equations per
    // basis element of 𝔥.
    let unknowns = dh * dc;
    let mut lhs = Mat::zeros(dh * dc * dh, unknowns);
    let mut rhs = Vector::zeros(dh * dc * dh);
    for a in 0..dh {
        let ad = q_inv.clone() * g.ad_matrix(&hc.column(a).into_owned()) * &q;
        let a_blk = ad.view((0, 0), (dh, dh));
        let b_blk = ad.view((0, dh), (dh, dc));
        let d_blk = ad.view((dh, dh), (dc, dc));
        let row0 = a * dh * dc;
        for r in 0..dh {
            for s in 0..dc {
                let row = row0 + s * dh + r;
                rhs[row] = b_blk[(r, s)];
                // (T·D)[r,s] = Σ_k T[r,k] D[k,s]
                for k in 0..dc {
                    lhs[(row, k * dh + r)] += d_blk[(k, s)];
                }
                // (A·T)[r,s] = Σ_k A[r,k] T[k,s]
                for k in 0..dh {
                    lhs[(row, s * dh + k)] -= a_blk[(r, k)];
                }
            }
        }
    }
    let t_vec = numkit::pseudo_inverse(&lhs, tol.rank_rel_tol) * &rhs;
    let residual = (&lhs * &t_vec - &rhs).norm();
    if residual > tol.exact_tol * rhs.norm().max(1.0) {
        return Err(Error::NotReductive(format!(
            "no complement with [𝔥, 𝔩] ⊆ 𝔩 (residual {residual:e})"
        )));
    }
    let t = Mat::from_column_slice(dh, dc, t_vec.as_slice());
    Ok(hc * t + c)
}

/// Convenience: `ρ` that acts as `Ad` on `𝔥` and as `χ(h)·Ad_h` on `𝔩`, for
/// a character `χ`. Requires `𝔩` to be `Ad`-invariant.
pub fn twisted_rho(
    inclusion: &SubgroupInclusion,
    split: &ReductiveSplitting,
    character: Arc<dyn Fn(&Mat) -> f64 + Send + Sync>,
) -> RhoFn {
    let inc = inclusion.clone();
    let (pr_h, pr_l) = (split.pr_h.clone(), split.pr_l.clone());
    Arc::new(move |h: &Mat| {
        let ad = inc.ambient.adjoint_matrix(&inc.embed_group(h))?;
        Ok(&ad * &pr_h + &ad * &pr_l * character(h))
    })
}

/// Identity on `𝔥` placed into `𝔤`-coordinates; used as the `λ` of a
/// Cartan geometry.
pub fn inclusion_lambda(m: &ModelGeometry) -> Mat {
    m.pair.h_coords.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroups::{affine, special_euclidean};

    fn se2_model() -> ModelGeometry {
        ModelGeometry::adjoint(special_euclidean(2).unwrap().1)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn klein_pairs() {
        let m = se2_model();
        assert!(check_klein_pair(&m.pair, &tol()).passed());
        let aff = ModelGeometry::adjoint(affine(2).unwrap().1);
        assert!(check_klein_pair(&aff.pair, &tol()).passed());
        // span{e1, J} is not a subalgebra since [J, e1] = e2
        let bad = KleinPair::new(m.g(), Mat::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0])).unwrap();
        let r = check_klein_pair(&bad, &tol());
        assert!(!r.passed());
        assert!((r.max_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adjoint_models_pass() {
        let s = Sampler::new(1);
        for r in check_model_geometry(&se2_model(), &s, &tol()) {
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn twisted_rho_still_extends_adjoint() {
        let (_, inc) = affine(2).unwrap();
        let m = ModelGeometry::adjoint(inc.clone());
        let split = reductive_split(&m, None, &Sampler::new(3), &tol()).unwrap();
        let twisted = ModelGeometry::with_rho(inc.clone(), twisted_rho(&inc, &split, Arc::new(|h: &Mat| h.determinant())));
        for r in check_model_geometry(&twisted, &Sampler::new(3), &tol()) {
            assert!(r.passed(), "{r:?}");
        }
        // a constant scaling on 𝔩 is not a homomorphism
        let scaled = ModelGeometry::with_rho(inc.clone(), twisted_rho(&inc, &split, Arc::new(|_: &Mat| 2.0)));
        let reports = check_model_geometry(&scaled, &Sampler::new(3), &tol());
        assert!(!reports[1].passed());
        assert!(reports[2].passed());
    }

    #[test]
    fn se2_translations_split_off() {
        let m = se2_model();
        let s = reductive_split(&m, None, &Sampler::new(5), &tol()).unwrap();
        let expected = Subspace::span(&Mat::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]), &tol()).unwrap();
        assert!(s.l_basis.compare(&expected).unwrap().0);
        let j = Vector::from_vec(vec![1.0, 0.0, 0.0]);
        let e1 = Vector::from_vec(vec![0.0, 1.0, 0.0]);
        assert!((&s.pr_h * &j - &j).norm() < 1e-12);
        assert!((&s.pr_l * &e1 - &e1).norm() < 1e-12);
    }

    #[test]
    fn affine_translations_split_off() {
        let (g, inc) = affine(2).unwrap();
        let m = ModelGeometry::adjoint(inc);
        let s = reductive_split(&m, None, &Sampler::new(5), &tol()).unwrap();
        assert_eq!(s.dim_l(), 2);
        let mut translations = Mat::zeros(g.dim(), 2);
        translations[(4, 0)] = 1.0;
        translations[(5, 1)] = 1.0;
        assert!(s.l_basis.compare(&Subspace::span(&translations, &tol()).unwrap()).unwrap().0);
    }

    #[test]
    fn non_invariant_candidate_rejected() {
        let m = se2_model();
        let cand = Mat::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            reductive_split(&m, Some(&cand), &Sampler::new(5), &tol()),
            Err(Error::NotReductive(_))
        ));
    }

    #[test]
    fn projections_are_complementary() {
        let s = reductive_split(&se2_model(), None, &Sampler::new(5), &tol()).unwrap();
        let id = Mat::identity(3, 3);
        assert!((&s.pr_h * &s.pr_h - &s.pr_h).norm() < 1e-12);
        assert!((&s.pr_l * &s.pr_l - &s.pr_l).norm() < 1e-12);
        assert!((&s.pr_h * &s.pr_l).norm() < 1e-12);
        assert!((&s.pr_h + &s.pr_l - id).norm() < 1e-12);
    }
}
