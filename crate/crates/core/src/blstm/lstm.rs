use ndarray::linalg::{general_mat_mul, general_mat_vec_mul};
use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::weights::{LstmParams, Real};

/// Activations of one direction over a whole sequence, indexed by time.
pub(crate) struct DirectionCache<A> {
    /// T×4H post-activation gates [i, f, g, o]
    gates: Array2<A>,
    cells: Array2<A>,
    tanh_cells: Array2<A>,
    pub hidden: Array2<A>,
    reverse: bool,
}

fn sigmoid<A: Real>(v: A) -> A {
    A::one() / (A::one() + (-v).exp())
}

fn order(len: usize, reverse: bool) -> Box<dyn Iterator<Item = usize>> {
    if reverse {
        Box::new((0..len).rev())
    } else {
        Box::new(0..len)
    }
}

/// Time step whose state feeds step `t`, if any.
fn previous(t: usize, len: usize, reverse: bool) -> Option<usize> {
    if reverse {
        (t + 1 < len).then_some(t + 1)
    } else {
        t.checked_sub(1)
    }
}

pub(crate) fn run<A: Real>(p: &LstmParams<A>, x: ArrayView2<A>, reverse: bool) -> DirectionCache<A> {
    let steps = x.nrows();
    let h = p.hidden();
    let mut pre_all = Array2::<A>::zeros((steps, 4 * h));
    general_mat_mul(A::one(), &x, &p.w_input.t(), A::zero(), &mut pre_all);
    pre_all += &p.bias;

    let mut gates = Array2::<A>::zeros((steps, 4 * h));
    let mut cells = Array2::<A>::zeros((steps, h));
    let mut tanh_cells = Array2::<A>::zeros((steps, h));
    let mut hidden = Array2::<A>::zeros((steps, h));
    let zero_state = Array1::<A>::zeros(h);

    for t in order(steps, reverse) {
        let prev = previous(t, steps, reverse);
        let mut pre = pre_all.row(t).to_owned();
        if let Some(pt) = prev {
            general_mat_vec_mul(A::one(), &p.w_recurrent, &hidden.row(pt), A::one(), &mut pre);
        }
        let c_prev = match prev {
            Some(pt) => cells.row(pt).to_owned(),
            None => zero_state.clone(),
        };
        let mut g_row = gates.row_mut(t);
        for k in 0..h {
            let i = sigmoid(pre[k]);
            let f = sigmoid(pre[h + k]);
            let g = pre[2 * h + k].tanh();
            let o = sigmoid(pre[3 * h + k]);
            g_row[k] = i;
            g_row[h + k] = f;
            g_row[2 * h + k] = g;
            g_row[3 * h + k] = o;
            let c = f * c_prev[k] + i * g;
            let tc = c.tanh();
            cells[[t, k]] = c;
            tanh_cells[[t, k]] = tc;
            hidden[[t, k]] = o * tc;
        }
    }

    DirectionCache {
        gates,
        cells,
        tanh_cells,
        hidden,
        reverse,
    }
}

/// Backpropagation through time. Accumulates parameter gradients into
/// `grads` and returns the gradient with respect to `x` when asked.
pub(crate) fn backprop<A: Real>(
    p: &LstmParams<A>,
    x: ArrayView2<A>,
    cache: &DirectionCache<A>,
    d_hidden: ArrayView2<A>,
    grads: &mut LstmParams<A>,
    need_input_grad: bool,
) -> Option<Array2<A>> {
    let steps = x.nrows();
    let h = p.hidden();
    let reverse = cache.reverse;
    let mut d_pre = Array2::<A>::zeros((steps, 4 * h));
    let mut dh_next = Array1::<A>::zeros(h);
    let mut dc_next = Array1::<A>::zeros(h);
    let one = A::one();

    for t in order(steps, !reverse) {
        let prev = previous(t, steps, reverse);
        let gates = cache.gates.row(t);
        {
            let mut row = d_pre.row_mut(t);
            for k in 0..h {
                let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
                let tc = cache.tanh_cells[[t, k]];
                let c_prev = prev.map_or(A::zero(), |pt| cache.cells[[pt, k]]);
                let dh = d_hidden[[t, k]] + dh_next[k];
                let d_o = dh * tc;
                let dc = dh * o * (one - tc * tc) + dc_next[k];
                dc_next[k] = dc * f;
                row[k] = dc * g * i * (one - i);
                row[h + k] = dc * c_prev * f * (one - f);
                row[2 * h + k] = dc * i * (one - g * g);
                row[3 * h + k] = d_o * o * (one - o);
            }
        }
        general_mat_vec_mul(one, &p.w_recurrent.t(), &d_pre.row(t), A::zero(), &mut dh_next);
    }

    general_mat_mul(one, &d_pre.t(), &x, one, &mut grads.w_input);
    // hidden state that fed each step (zero at the sequence start)
    let mut h_prev = Array2::<A>::zeros((steps, h));
    if steps > 1 {
        if reverse {
            h_prev.slice_mut(s![..steps - 1, ..]).assign(&cache.hidden.slice(s![1.., ..]));
        } else {
            h_prev.slice_mut(s![1.., ..]).assign(&cache.hidden.slice(s![..steps - 1, ..]));
        }
    }
    general_mat_mul(one, &d_pre.t(), &h_prev, one, &mut grads.w_recurrent);
    grads.bias += &d_pre.sum_axis(Axis(0));

    need_input_grad.then(|| d_pre.dot(&p.w_input))
}
