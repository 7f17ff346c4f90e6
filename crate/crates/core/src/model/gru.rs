//! GRU with `h' = (1 − z)⊙h + z⊙h̃`, where
//! `z = σ(xW_z + hU_z + b_z)`, `r = σ(xW_r + hU_r + b_r)`,
//! `h̃ = tanh(xW_h + (r⊙h)U_h + b_h)`.

use crate::error::{Error, Result};
use crate::numerics::{kernels, sigmoid, Matrix, Scalar};

use super::params::GruParams;

/// Activations of one step over `n` rows, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StepCache<T> {
    pub x: Matrix<T>,
    pub h_prev: Matrix<T>,
    pub z: Matrix<T>,
    pub r: Matrix<T>,
    pub candidate: Matrix<T>,
    /// `r ⊙ h_prev`
    pub gated: Matrix<T>,
}

fn affine<T: Scalar>(x: &Matrix<T>, w: &Matrix<T>, bias: &Matrix<T>) -> Matrix<T> {
    let (n, d_in) = x.shape();
    let d_out = w.cols();
    let mut out = Matrix::zeros(n, d_out);
    let b = bias.as_slice();
    for i in 0..n {
        out.row_mut(i).copy_from_slice(b);
    }
    kernels::gemm_nn_acc(
        n,
        d_in,
        d_out,
        x.as_slice(),
        w.as_slice(),
        out.as_mut_slice(),
    );
    out
}

fn acc_matmul<T: Scalar>(out: &mut Matrix<T>, x: &Matrix<T>, w: &Matrix<T>) {
    kernels::gemm_nn_acc(
        x.rows(),
        x.cols(),
        w.cols(),
        x.as_slice(),
        w.as_slice(),
        out.as_mut_slice(),
    );
}

/// One step for a batch of rows. Returns the new hidden state and the cache.
pub fn gru_step_forward<T: Scalar>(
    params: &GruParams<T>,
    x: Matrix<T>,
    h_prev: Matrix<T>,
) -> Result<(Matrix<T>, StepCache<T>)> {
    let (d_in, d_hid) = (params.d_in(), params.d_hid());
    if x.cols() != d_in || h_prev.cols() != d_hid || x.rows() != h_prev.rows() {
        return Err(Error::Dimension {
            op: "gru_step",
            left: x.shape(),
            right: h_prev.shape(),
        });
    }
    let n = x.rows();

    let mut z = affine(&x, &params.w_z.value, &params.b_z.value);
    acc_matmul(&mut z, &h_prev, &params.u_z.value);
    z.as_mut_slice().iter_mut().for_each(|v| *v = sigmoid(*v));

    let mut r = affine(&x, &params.w_r.value, &params.b_r.value);
    acc_matmul(&mut r, &h_prev, &params.u_r.value);
    r.as_mut_slice().iter_mut().for_each(|v| *v = sigmoid(*v));

    let mut gated = h_prev.clone();
    for (g, &rv) in gated.as_mut_slice().iter_mut().zip(r.as_slice()) {
        *g *= rv;
    }
    let mut candidate = affine(&x, &params.w_h.value, &params.b_h.value);
    acc_matmul(&mut candidate, &gated, &params.u_h.value);
    candidate
        .as_mut_slice()
        .iter_mut()
        .for_each(|v| *v = v.tanh());

    let mut h = Matrix::zeros(n, d_hid);
    for (((o, &zv), &hp), &c) in h
        .as_mut_slice()
        .iter_mut()
        .zip(z.as_slice())
        .zip(h_prev.as_slice())
        .zip(candidate.as_slice())
    {
        *o = (T::one() - zv) * hp + zv * c;
    }
    Ok((
        h,
        StepCache {
            x,
            h_prev,
            z,
            r,
            candidate,
            gated,
        },
    ))
}

/// Backward through one step. Accumulates parameter gradients into `params`
/// and returns `(dx, dh_prev)`.
pub fn gru_step_backward<T: Scalar>(
    params: &mut GruParams<T>,
    cache: &StepCache<T>,
    dh: &Matrix<T>,
) -> (Matrix<T>, Matrix<T>) {
    let n = dh.rows();
    let (d_in, d_hid) = (params.d_in(), params.d_hid());
    let one = T::one();

    let mut da_z = Matrix::zeros(n, d_hid);
    let mut da_h = Matrix::zeros(n, d_hid);
    let mut dh_prev = Matrix::zeros(n, d_hid);
    for i in 0..n * d_hid {
        let g = dh.as_slice()[i];
        let z = cache.z.as_slice()[i];
        let c = cache.candidate.as_slice()[i];
        let hp = cache.h_prev.as_slice()[i];
        da_z.as_mut_slice()[i] = g * (c - hp) * z * (one - z);
        da_h.as_mut_slice()[i] = g * z * (one - c * c);
        dh_prev.as_mut_slice()[i] = g * (one - z);
    }

    // through the candidate's recurrent product
    let mut d_gated = Matrix::zeros(n, d_hid);
    kernels::gemm_nt_acc(
        n,
        d_hid,
        d_hid,
        da_h.as_slice(),
        params.u_h.value.as_slice(),
        d_gated.as_mut_slice(),
    );
    let mut da_r = Matrix::zeros(n, d_hid);
    for i in 0..n * d_hid {
        let dg = d_gated.as_slice()[i];
        let r = cache.r.as_slice()[i];
        let hp = cache.h_prev.as_slice()[i];
        dh_prev.as_mut_slice()[i] += dg * r;
        da_r.as_mut_slice()[i] = dg * hp * r * (one - r);
    }

    let mut dx = Matrix::zeros(n, d_in);
    let gates = [
        (&da_z, &cache.h_prev, 0usize),
        (&da_r, &cache.h_prev, 1),
        (&da_h, &cache.gated, 2),
    ];
    for (da, rec_input, which) in gates {
        let (w, u, b) = match which {
            0 => (&mut params.w_z, &mut params.u_z, &mut params.b_z),
            1 => (&mut params.w_r, &mut params.u_r, &mut params.b_r),
            _ => (&mut params.w_h, &mut params.u_h, &mut params.b_h),
        };
        kernels::gemm_tn_acc(
            n,
            d_in,
            d_hid,
            cache.x.as_slice(),
            da.as_slice(),
            w.grad.as_mut_slice(),
        );
        kernels::gemm_tn_acc(
            n,
            d_hid,
            d_hid,
            rec_input.as_slice(),
            da.as_slice(),
            u.grad.as_mut_slice(),
        );
        let bg = b.grad.as_mut_slice();
        for i in 0..n {
            for (g, &d) in bg.iter_mut().zip(da.row(i)) {
                *g += d;
            }
        }
        kernels::gemm_nt_acc(
            n,
            d_hid,
            d_in,
            da.as_slice(),
            w.value.as_slice(),
            dx.as_mut_slice(),
        );
        if which != 2 {
            kernels::gemm_nt_acc(
                n,
                d_hid,
                d_hid,
                da.as_slice(),
                u.value.as_slice(),
                dh_prev.as_mut_slice(),
            );
        }
    }
    (dx, dh_prev)
}

/// Single-vector GRU cell.
pub fn gru_cell<T: Scalar>(x: &[T], h: &[T], params: &GruParams<T>) -> Result<Vec<T>> {
    let xm = Matrix::from_vec(1, x.len(), x.to_vec())?;
    let hm = Matrix::from_vec(1, h.len(), h.to_vec())?;
    let (out, _) = gru_step_forward(params, xm, hm)?;
    Ok(out.into_vec())
}
