use super::{ForwardTrace, Gradients, ModelConfig, ModelParams};
use crate::tensor::axpy;

/// Accumulate `scale ×` the gradient of the cross-entropy loss of `trace`
/// against `target` into `grads`.
pub fn backward(
    trace: &ForwardTrace,
    target: usize,
    params: &ModelParams,
    config: &ModelConfig,
    scale: f64,
    grads: &mut Gradients,
) {
    let w = &params.weights;

    let mut dlogits: Vec<f64> = trace.probs.iter().map(|p| p * scale).collect();
    dlogits[target] -= scale;

    grads.weights.output.weight.add_outer(1.0, &dlogits, &trace.penultimate_out);
    axpy(1.0, &dlogits, &mut grads.weights.output.bias);
    let mut dpen = vec![0.0; trace.penultimate_out.len()];
    w.output.weight.tmul_vec_acc(&dlogits, &mut dpen);
    if let Some(mask) = &trace.penultimate_mask {
        for (d, m) in dpen.iter_mut().zip(mask) {
            *d *= m;
        }
    }
    for (d, &z) in dpen.iter_mut().zip(&trace.penultimate) {
        if z <= 0.0 {
            *d = 0.0;
        }
    }

    grads.weights.hidden.weight.add_outer(1.0, &dpen, &trace.concat);
    axpy(1.0, &dpen, &mut grads.weights.hidden.bias);
    let mut dconcat = vec![0.0; trace.concat.len()];
    w.hidden.weight.tmul_vec_acc(&dpen, &mut dconcat);

    let mut offset = 0;
    for chain in &trace.chains {
        let dim = config.channel_dim(chain.channel);
        let steps = chain.ids.len();

        // dseq[l][t]: gradient w.r.t. the output of layer l at step t (l = 0 is the embedding layer)
        let mut dseq: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; dim]; steps]; config.depth + 1];
        for (l, pool) in chain.pools.iter().enumerate() {
            let dpool = &dconcat[offset..offset + dim];
            offset += dim;
            for (d, &t) in pool.argmax.iter().enumerate() {
                dseq[l][t][d] += dpool[d];
            }
        }
        if steps == 0 {
            continue;
        }

        for l in (1..=config.depth).rev() {
            let layer_idx = config.layer_index(chain.channel, chain.side, l - 1);
            let layer = &w.recurrent[layer_idx];
            let glayer = &mut grads.weights.recurrent[layer_idx];
            let h = &chain.hidden[l - 1];
            let below = chain.layer_output(l - 1);

            // gradients w.r.t. pre-activations, computed back to front
            let mut dpre = vec![vec![0.0; dim]; steps];
            for t in (0..steps).rev() {
                let mut dh = std::mem::take(&mut dseq[l][t]);
                if t + 1 < steps {
                    layer.w_rec.tmul_vec_acc(&dpre[t + 1], &mut dh);
                }
                for (d, &hv) in dh.iter_mut().zip(&h[t]) {
                    if hv <= 0.0 {
                        *d = 0.0;
                    }
                }
                dpre[t] = dh;
            }

            for t in 0..steps {
                let da = &dpre[t];
                glayer.w_in.add_outer(1.0, da, &below[t]);
                axpy(1.0, da, &mut glayer.bias);
                layer.w_in.tmul_vec_acc(da, &mut dseq[l - 1][t]);
                if t > 0 {
                    glayer.w_rec.add_outer(1.0, da, &h[t - 1]);
                    if let (Some(cross), Some(gcross)) = (&layer.w_cross, &mut glayer.w_cross) {
                        gcross.add_outer(1.0, da, &below[t - 1]);
                        cross.tmul_vec_acc(da, &mut dseq[l - 1][t - 1]);
                    }
                }
            }
        }

        let c = chain.channel.index();
        for (t, &id) in chain.ids.iter().enumerate() {
            let mut dx = std::mem::take(&mut dseq[0][t]);
            if let Some(masks) = &chain.input_masks {
                for (d, m) in dx.iter_mut().zip(&masks[t]) {
                    *d *= m;
                }
            }
            grads.add_embedding_row(c, id, &dx);
        }
    }
    debug_assert_eq!(offset, dconcat.len());
}
