//! Second-order expansion blocks of the game's dynamic-programming
//! recursion, their regularization, and the coupled saddle-point gains.

use nalgebra::{DMatrix, DVector};

use crate::cost::RunningDerivs;
use crate::dynamics::StepDerivatives;
use crate::error::{Error, Result};
use crate::types::RegularizationScheme;

/// Gradient and Hessian blocks of the per-step variation function.
///
/// The transposed blocks (`H_ux`, `H_vx`, `H_vu`) are derived from the
/// stored ones by transposition, which keeps them transpose-consistent by
/// construction.
#[derive(Debug, Clone)]
pub struct HamiltonianBlocks {
    pub hx: DVector<f64>,
    pub hu: DVector<f64>,
    pub hv: DVector<f64>,
    pub hxx: DMatrix<f64>,
    pub huu: DMatrix<f64>,
    pub hvv: DMatrix<f64>,
    pub hxu: DMatrix<f64>,
    pub hxv: DMatrix<f64>,
    pub huv: DMatrix<f64>,
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Assemble all blocks from the dynamics derivatives, the running-cost
/// derivatives, and the next value expansion. Missing second-order
/// dynamics tensors (Gauss-Newton mode) simply drop the tensor terms.
pub fn compute_hamiltonian(
    d: &StepDerivatives,
    l: &RunningDerivs,
    vx: &DVector<f64>,
    vxx: &DMatrix<f64>,
) -> Result<HamiltonianBlocks> {
    let fxt_vxx = d.fx.transpose() * vxx;
    let mut hxx = &l.lxx + &fxt_vxx * &d.fx;
    let mut huu = &l.luu + d.fu.transpose() * vxx * &d.fu;
    let mut hvv = &l.lvv + d.fv.transpose() * vxx * &d.fv;
    let mut hxu = &l.lxu + &fxt_vxx * &d.fu;
    let mut hxv = &l.lxv + &fxt_vxx * &d.fv;
    let mut huv = &l.luv + d.fu.transpose() * vxx * &d.fv;

    if let Some(s) = &d.second {
        hxx += s.fxx.contract(vx);
        huu += s.fuu.contract(vx);
        hvv += s.fvv.contract(vx);
        hxu += s.fxu.contract(vx);
        hxv += s.fxv.contract(vx);
        huv += s.fuv.contract(vx);
    }
    symmetrize(&mut hxx);
    symmetrize(&mut huu);
    symmetrize(&mut hvv);

    let blocks = HamiltonianBlocks {
        hx: &l.lx + d.fx.transpose() * vx,
        hu: &l.lu + d.fu.transpose() * vx,
        hv: &l.lv + d.fv.transpose() * vx,
        hxx,
        huu,
        hvv,
        hxu,
        hxv,
        huv,
    };
    for (name, ok) in [
        ("H_x", blocks.hx.iter().all(|c| c.is_finite())),
        ("H_u", blocks.hu.iter().all(|c| c.is_finite())),
        ("H_v", blocks.hv.iter().all(|c| c.is_finite())),
        ("H_xx", blocks.hxx.iter().all(|c| c.is_finite())),
        ("H_uu", blocks.huu.iter().all(|c| c.is_finite())),
        ("H_vv", blocks.hvv.iter().all(|c| c.is_finite())),
        ("H_xu", blocks.hxu.iter().all(|c| c.is_finite())),
        ("H_xv", blocks.hxv.iter().all(|c| c.is_finite())),
        ("H_uv", blocks.huv.iter().all(|c| c.is_finite())),
    ] {
        if !ok {
            return Err(Error::BackwardPass {
                step: 0,
                reason: format!("non-finite block {name}"),
            });
        }
    }
    Ok(blocks)
}

/// Clamp the eigenvalues of a symmetric matrix from below. Returns the
/// input untouched when no eigenvalue is below the floor.
fn clamp_eigenvalues_min(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&e| e >= floor) {
        return m.clone();
    }
    let clamped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| e.max(floor)),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose()
}

/// Enforce `H_uu >= strength * I` and `H_vv <= -strength * I` under the
/// chosen scheme; all other blocks are left untouched.
pub fn regularize(
    mut blocks: HamiltonianBlocks,
    scheme: RegularizationScheme,
    strength: f64,
) -> HamiltonianBlocks {
    match scheme {
        RegularizationScheme::EigenClamp => {
            blocks.huu = clamp_eigenvalues_min(&blocks.huu, strength);
            // mirror the clamp for the concave player
            blocks.hvv = -clamp_eigenvalues_min(&(-&blocks.hvv), strength);
        }
        RegularizationScheme::Additive => {
            let mu = blocks.huu.nrows();
            let mv = blocks.hvv.nrows();
            blocks.huu += DMatrix::<f64>::identity(mu, mu) * strength;
            blocks.hvv -= DMatrix::<f64>::identity(mv, mv) * strength;
        }
    }
    blocks
}

/// Per-step feedforward/feedback gains for both players.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Gains {
    pub k_u: DVector<f64>,
    pub ck_u: DMatrix<f64>,
    pub k_v: DVector<f64>,
    pub ck_v: DMatrix<f64>,
}

fn solve_spd(m: &DMatrix<f64>, rhs_v: &DVector<f64>, rhs_m: &DMatrix<f64>, block: &'static str, step: usize)
    -> Result<(DVector<f64>, DMatrix<f64>)>
{
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::SingularBlock { block, step })?;
    Ok((chol.solve(rhs_v), chol.solve(rhs_m)))
}

/// Saddle-point gains from the regularized blocks.
///
/// With the max player disabled (or absent) the formulas reduce to the
/// single-player DDP gains `-H_uu^{-1} H_u`, `-H_uu^{-1} H_ux`.
pub fn compute_gains(blocks: &HamiltonianBlocks, max_enabled: bool, step: usize) -> Result<Gains> {
    let n = blocks.hx.len();
    let mv = blocks.hv.len();
    let hux = blocks.hxu.transpose();
    let hvx = blocks.hxv.transpose();

    if !max_enabled || mv == 0 {
        let (k, ck) = solve_spd(&blocks.huu, &blocks.hu, &hux, "H_uu", step)?;
        return Ok(Gains {
            k_u: -k,
            ck_u: -ck,
            k_v: DVector::zeros(mv),
            ck_v: DMatrix::zeros(mv, n),
        });
    }

    let hvu = blocks.huv.transpose();
    // -H_vv is positive definite after regularization
    let neg_hvv = -&blocks.hvv;
    let chol_neg_hvv = neg_hvv
        .clone()
        .cholesky()
        .ok_or(Error::SingularBlock { block: "H_vv", step })?;
    let hvv_inv_hv = -chol_neg_hvv.solve(&blocks.hv);
    let hvv_inv_hvu = -chol_neg_hvv.solve(&hvu);
    let hvv_inv_hvx = -chol_neg_hvv.solve(&hvx);

    let ht_uu = &blocks.huu - &blocks.huv * &hvv_inv_hvu;
    let rhs_u = &blocks.hu - &blocks.huv * &hvv_inv_hv;
    let rhs_ux = &hux - &blocks.huv * &hvv_inv_hvx;
    let (k_u, ck_u) = solve_spd(&ht_uu, &rhs_u, &rhs_ux, "schur H_uu", step)?;

    let chol_huu = blocks
        .huu
        .clone()
        .cholesky()
        .ok_or(Error::SingularBlock { block: "H_uu", step })?;
    let huu_inv_hu = chol_huu.solve(&blocks.hu);
    let huu_inv_huv = chol_huu.solve(&blocks.huv);
    let huu_inv_hux = chol_huu.solve(&hux);

    // tilde H_vv is negative definite; solve through its negation
    let ht_vv_neg = -(&blocks.hvv - &hvu * &huu_inv_huv);
    let rhs_v = &blocks.hv - &hvu * &huu_inv_hu;
    let rhs_vx = &hvx - &hvu * &huu_inv_hux;
    let (k_v_neg, ck_v_neg) = solve_spd(&ht_vv_neg, &rhs_v, &rhs_vx, "schur H_vv", step)?;

    Ok(Gains {
        k_u: -k_u,
        ck_u: -ck_u,
        k_v: k_v_neg,
        ck_v: ck_v_neg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn blocks_from(
        huu: DMatrix<f64>,
        hvv: DMatrix<f64>,
        huv: DMatrix<f64>,
        hu: DVector<f64>,
        hv: DVector<f64>,
    ) -> HamiltonianBlocks {
        let n = 1;
        HamiltonianBlocks {
            hx: DVector::zeros(n),
            hu,
            hv,
            hxx: DMatrix::zeros(n, n),
            huu,
            hvv,
            hxu: DMatrix::zeros(n, 1),
            hxv: DMatrix::zeros(n, 1),
            huv,
        }
    }

    #[test]
    fn eigen_clamp_is_noop_on_definite_blocks() {
        let b = blocks_from(
            DMatrix::from_vec(1, 1, vec![2.0]),
            DMatrix::from_vec(1, 1, vec![-3.0]),
            DMatrix::zeros(1, 1),
            DVector::zeros(1),
            DVector::zeros(1),
        );
        let r = regularize(b, RegularizationScheme::EigenClamp, 1e-6);
        assert_eq!(r.huu[(0, 0)], 2.0);
        assert_eq!(r.hvv[(0, 0)], -3.0);
    }

    #[test]
    fn eigen_clamp_fixes_indefinite_blocks() {
        let mut b = blocks_from(
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DVector::zeros(1),
            DVector::zeros(1),
        );
        b.huu = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0]));
        b.hvv = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.5]));
        let r = regularize(b, RegularizationScheme::EigenClamp, 1e-6);
        assert_relative_eq!(r.huu[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.huu[(1, 1)], 1e-6, epsilon = 1e-12);
        assert_relative_eq!(r.hvv[(0, 0)], -1.0, epsilon = 1e-12);
        assert_relative_eq!(r.hvv[(1, 1)], -1e-6, epsilon = 1e-12);
    }

    #[test]
    fn additive_scheme_shifts_both_blocks() {
        let b = blocks_from(
            DMatrix::from_vec(1, 1, vec![2.0]),
            DMatrix::from_vec(1, 1, vec![-3.0]),
            DMatrix::zeros(1, 1),
            DVector::zeros(1),
            DVector::zeros(1),
        );
        let r = regularize(b, RegularizationScheme::Additive, 0.5);
        assert_eq!(r.huu[(0, 0)], 2.5);
        assert_eq!(r.hvv[(0, 0)], -3.5);
    }

    #[test]
    fn decoupled_players_reduce_to_plain_gains() {
        let b = blocks_from(
            DMatrix::from_vec(1, 1, vec![2.0]),
            DMatrix::from_vec(1, 1, vec![-3.0]),
            DMatrix::zeros(1, 1),
            DVector::from_vec(vec![4.0]),
            DVector::from_vec(vec![6.0]),
        );
        let g = compute_gains(&b, true, 0).unwrap();
        assert_relative_eq!(g.k_u[0], -2.0, epsilon = 1e-12);
        assert_relative_eq!(g.k_v[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn scalar_schur_gains_by_hand() {
        // H_uu=2, H_vv=-3, H_uv=1, H_u=4, H_v=6:
        // tilde H_uu = 2 + 1/3, k_u = -(4 + 2) / (7/3) = -18/7
        let b = blocks_from(
            DMatrix::from_vec(1, 1, vec![2.0]),
            DMatrix::from_vec(1, 1, vec![-3.0]),
            DMatrix::from_vec(1, 1, vec![1.0]),
            DVector::from_vec(vec![4.0]),
            DVector::from_vec(vec![6.0]),
        );
        let g = compute_gains(&b, true, 0).unwrap();
        assert_relative_eq!(g.k_u[0], -18.0 / 7.0, epsilon = 1e-12);
        // tilde H_vv = -3 - 1/2 = -7/2, k_v = -(6 - 4/2)/(-7/2) = 8/7
        assert_relative_eq!(g.k_v[0], 8.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn min_only_matches_textbook_ddp_gains() {
        let mut b = blocks_from(
            DMatrix::from_vec(1, 1, vec![2.5]),
            DMatrix::from_vec(1, 1, vec![-1.0]),
            DMatrix::zeros(1, 1),
            DVector::from_vec(vec![1.5]),
            DVector::zeros(1),
        );
        b.hxu = DMatrix::from_vec(1, 1, vec![0.7]);
        let g = compute_gains(&b, false, 0).unwrap();
        assert_relative_eq!(g.k_u[0], -1.5 / 2.5, epsilon = 1e-12);
        assert_relative_eq!(g.ck_u[(0, 0)], -0.7 / 2.5, epsilon = 1e-12);
        assert_eq!(g.k_v.len(), 1);
        assert_eq!(g.k_v[0], 0.0);
    }

    #[test]
    fn zero_value_function_gives_pure_cost_blocks() {
        use crate::cost::{Cost, QuadraticCost};
        use crate::dynamics::LinearPlant;

        let plant = LinearPlant {
            a: DMatrix::from_vec(1, 1, vec![0.9]),
            b: DMatrix::from_vec(1, 1, vec![0.2]),
            c: DMatrix::from_vec(1, 1, vec![0.1]),
            dt: 1.0,
        };
        let cost = QuadraticCost::new(
            DMatrix::from_vec(1, 1, vec![1.0]),
            DMatrix::from_vec(1, 1, vec![0.5]),
            DMatrix::from_vec(1, 1, vec![2.0]),
            DMatrix::from_vec(1, 1, vec![1.0]),
            DVector::zeros(1),
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.0]);
        let u = DVector::from_vec(vec![0.3]);
        let v = DVector::from_vec(vec![-0.2]);
        let d = crate::dynamics::quadratize(&plant, &x, &u, &v, true).unwrap();
        let l = cost.running(&x, &u, &v).unwrap();
        let b = compute_hamiltonian(&d, &l, &DVector::zeros(1), &DMatrix::zeros(1, 1)).unwrap();
        assert_relative_eq!(b.hu[0], l.lu[0], epsilon = 1e-14);
        assert_relative_eq!(b.huu[(0, 0)], l.luu[(0, 0)], epsilon = 1e-14);
        assert_relative_eq!(b.hvv[(0, 0)], l.lvv[(0, 0)], epsilon = 1e-14);
    }

    #[test]
    fn lq_one_step_huu_closed_form() {
        // Terminal-quadratic continuation: H_uu = 2 R_u + B^T (2 S) B
        use crate::cost::{Cost, QuadraticCost};
        use crate::dynamics::Plant;

        let plant = crate::dynamics::LinearPlant {
            a: DMatrix::from_vec(1, 1, vec![1.1]),
            b: DMatrix::from_vec(1, 1, vec![0.4]),
            c: DMatrix::from_vec(1, 1, vec![0.2]),
            dt: 1.0,
        };
        let s = 3.0;
        let r_u = 0.5;
        let cost = QuadraticCost::new(
            DMatrix::from_vec(1, 1, vec![1.0]),
            DMatrix::from_vec(1, 1, vec![r_u]),
            DMatrix::from_vec(1, 1, vec![2.0]),
            DMatrix::from_vec(1, 1, vec![s]),
            DVector::zeros(1),
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.7]);
        let u = DVector::zeros(1);
        let v = DVector::zeros(1);
        let d = crate::dynamics::quadratize(&plant, &x, &u, &v, true).unwrap();
        let l = cost.running(&x, &u, &v).unwrap();
        let term = cost.terminal(&plant.step(&x, &u, &v)).unwrap();
        let b = compute_hamiltonian(&d, &l, &term.phix, &term.phixx).unwrap();
        assert_relative_eq!(b.huu[(0, 0)], 2.0 * r_u + 0.4 * 2.0 * s * 0.4, epsilon = 1e-12);
    }
}
