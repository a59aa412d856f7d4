#include "sqz/nn/net.hpp"

#include <cmath>
#include <string>

#include "sqz/core/rng.hpp"
#include "sqz/nn/kernels.hpp"

namespace sqz::nn {

namespace {

Tensor promote(const Tensor& x) {
    if (x.rank() == 2) return x;
    if (x.rank() == 1) return Tensor({1, x.shape[0]}, x.data);
    throw ShapeError("network input must be rank 1 or 2, got " + x.shape_str());
}

void add_into(Tensor& acc, const Tensor& g) {
    if (acc.numel() == 0) {
        acc = g;
        return;
    }
    if (!acc.same_shape(g)) {
        throw ShapeError("gradient shape mismatch: " + acc.shape_str() + " vs " + g.shape_str());
    }
    for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += g.data[i];
}

} // namespace

Network::Network(std::vector<LayerSpec> specs) {
    layers_.reserve(specs.size());
    for (const auto& s : specs) layers_.push_back(Layer{s, Tensor{}, Tensor{}});
    validate_chain();
    // Parameter tensors exist (zeroed) even before init_params so that
    // deserialization can fill them in place.
    for (auto& l : layers_) {
        if (l.spec.kind == LayerKind::Linear) {
            l.w = Tensor::zeros({l.spec.out_dim, l.spec.in_dim});
            l.b = Tensor::zeros({l.spec.out_dim});
        } else if (l.spec.kind == LayerKind::LayerNorm) {
            l.w = Tensor::zeros({l.spec.out_dim});
            l.b = Tensor::zeros({l.spec.out_dim});
        }
    }
}

void Network::validate_chain() const {
    if (layers_.empty()) throw ShapeError("network needs at least one layer");
    for (size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& s = layers_[i].spec;
        const std::string where = "layer " + std::to_string(i) + " (" + layer_kind_name(s.kind) + ")";
        if (s.in_dim == 0 || s.out_dim == 0) throw ShapeError(where + ": zero dimension");
        if (s.kind != LayerKind::Linear && s.in_dim != s.out_dim) {
            throw ShapeError(where + ": dimension-preserving kind with in!=out");
        }
        if (i > 0 && s.in_dim != layers_[i - 1].spec.out_dim) {
            throw ShapeError(where + ": in_dim " + std::to_string(s.in_dim) + " does not chain from " +
                             std::to_string(layers_[i - 1].spec.out_dim));
        }
        if (s.kind == LayerKind::Dropout && (s.dropout_rate < 0.0 || s.dropout_rate >= 1.0)) {
            throw ShapeError(where + ": dropout rate must lie in [0,1)");
        }
        if (s.kind == LayerKind::ResidualAdd) {
            if (s.res_offset == 0 || s.res_offset > i + 1) {
                throw ShapeError(where + ": residual offset " + std::to_string(s.res_offset) +
                                 " out of range");
            }
            const size_t src_dim = (s.res_offset == i + 1)
                                       ? layers_.front().spec.in_dim
                                       : layers_[i - s.res_offset].spec.out_dim;
            if (src_dim != s.out_dim) {
                throw ShapeError(where + ": residual source width " + std::to_string(src_dim) +
                                 " != " + std::to_string(s.out_dim));
            }
        }
    }
}

void Network::init_params(uint64_t seed) {
    for (size_t i = 0; i < layers_.size(); ++i) {
        Layer& l = layers_[i];
        if (l.spec.kind == LayerKind::Linear) {
            Rng rng(derive_seed(seed, "init/" + std::to_string(i)));
            const double bound = std::sqrt(6.0 / static_cast<double>(l.spec.in_dim));
            for (double& v : l.w.data) v = rng.uniform(-bound, bound);
            for (double& v : l.b.data) v = 0.0;
        } else if (l.spec.kind == LayerKind::LayerNorm) {
            for (double& v : l.w.data) v = 1.0;
            for (double& v : l.b.data) v = 0.0;
        }
    }
    bump_revision();
}

size_t Network::param_count() const {
    size_t n = 0;
    for (const auto& l : layers_) {
        n += l.w.numel() + l.b.numel();
    }
    return n;
}

std::vector<Tensor*> Network::param_tensors() {
    std::vector<Tensor*> out;
    for (auto& l : layers_) {
        if (!l.has_params()) continue;
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
    return out;
}

std::vector<const Tensor*> Network::param_tensors() const {
    std::vector<const Tensor*> out;
    for (const auto& l : layers_) {
        if (!l.has_params()) continue;
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
    return out;
}

Tensor Network::forward(const Tensor& x, Mode mode, uint64_t seed, ForwardCache* cache) const {
    Tensor cur = promote(x);
    if (cur.cols() != in_dim()) {
        throw ShapeError("forward: input width " + std::to_string(cur.cols()) + " != network in_dim " +
                         std::to_string(in_dim()));
    }
    cur.require_finite("network input");
    const size_t batch = cur.rows();

    if (cache) {
        *cache = ForwardCache{};
        cache->net = this;
        cache->revision = revision_;
        cache->mode = mode;
        cache->input = cur;
        cache->activations.reserve(layers_.size());
    }
    const Tensor input = std::move(cur);
    bool any_residual = false;
    for (const auto& l : layers_) any_residual |= l.spec.kind == LayerKind::ResidualAdd;
    // Without a cache and without skip connections only the newest activation
    // is needed; per-point encoder passes push thousands of rows through here.
    const bool keep_all = cache != nullptr || any_residual;
    std::vector<Tensor> acts;
    acts.reserve(keep_all ? layers_.size() : 1);
    const Tensor* curp = &input;

    for (size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        const Tensor& curv = *curp;
        const size_t d_in = l.spec.in_dim;
        const size_t d_out = l.spec.out_dim;
        Tensor y;
        switch (l.spec.kind) {
        case LayerKind::Linear: {
            y = Tensor::zeros({batch, d_out});
            gemm_nt(curv.data.data(), l.w.data.data(), y.data.data(), batch, d_in, d_out);
            for (size_t r = 0; r < batch; ++r) {
                for (size_t c = 0; c < d_out; ++c) y.at(r, c) += l.b.data[c];
            }
            break;
        }
        case LayerKind::LayerNorm: {
            y = Tensor::zeros({batch, d_out});
            Tensor xhat = Tensor::zeros({batch, d_out});
            Tensor inv_std = Tensor::zeros({batch});
            const double inv_d = 1.0 / static_cast<double>(d_out);
            for (size_t r = 0; r < batch; ++r) {
                double mean = 0.0;
                for (size_t c = 0; c < d_out; ++c) mean += curv.at(r, c);
                mean *= inv_d;
                double var = 0.0;
                for (size_t c = 0; c < d_out; ++c) {
                    const double d = curv.at(r, c) - mean;
                    var += d * d;
                }
                var *= inv_d;
                const double is = 1.0 / std::sqrt(var + kLayerNormEps);
                inv_std.data[r] = is;
                for (size_t c = 0; c < d_out; ++c) {
                    const double xh = (curv.at(r, c) - mean) * is;
                    xhat.at(r, c) = xh;
                    y.at(r, c) = l.w.data[c] * xh + l.b.data[c];
                }
            }
            if (cache) {
                cache->ln_xhat.push_back(std::move(xhat));
                cache->ln_inv_std.push_back(std::move(inv_std));
            }
            break;
        }
        case LayerKind::Gelu: {
            y = curv;
            for (double& v : y.data) v = gelu_scalar(v);
            break;
        }
        case LayerKind::Dropout: {
            if (mode == Mode::Eval || l.spec.dropout_rate == 0.0) {
                y = curv;
                if (cache && mode == Mode::Train) {
                    Tensor mask(curv.shape, std::vector<double>(curv.numel(), 1.0));
                    cache->dropout_masks.push_back(std::move(mask));
                }
            } else {
                // The mask depends only on (seed, layer index, element order);
                // never on activation values, so a fixed seed gives the same
                // mask under finite-difference probing.
                Rng rng(derive_seed(seed, "dropout/" + std::to_string(i)));
                const double rate = l.spec.dropout_rate;
                const double keep_scale = 1.0 / (1.0 - rate);
                Tensor mask = Tensor::zeros(curv.shape);
                for (double& v : mask.data) v = (rng.uniform() < rate) ? 0.0 : keep_scale;
                y = curv;
                for (size_t j = 0; j < y.data.size(); ++j) y.data[j] *= mask.data[j];
                if (cache) cache->dropout_masks.push_back(std::move(mask));
            }
            break;
        }
        case LayerKind::ResidualAdd: {
            const Tensor& src = (l.spec.res_offset == i + 1) ? input : acts[i - l.spec.res_offset];
            y = curv + src;
            break;
        }
        }
        if (keep_all) {
            acts.push_back(std::move(y));
        } else {
            acts.assign(1, std::move(y));
        }
        curp = &acts.back();
    }

    Tensor out = std::move(acts.back());
    if (cache) {
        acts.back() = out; // cache keeps its own copy of the final activation
        cache->activations = std::move(acts);
    }
    if (x.rank() == 1) out.shape = {out.shape[1]};
    return out;
}

Grads Network::backward(const ForwardCache& cache, const Tensor& upstream) const {
    if (cache.net != this || cache.revision != revision_) {
        throw ShapeError("backward: cache is stale or belongs to a different network");
    }
    if (cache.mode != Mode::Train) {
        throw ShapeError("backward: requires a Train-mode forward cache");
    }
    if (cache.activations.size() != layers_.size()) {
        throw ShapeError("backward: incomplete forward cache");
    }
    Tensor up = promote(upstream);
    const size_t batch = cache.input.rows();
    if (up.rows() != batch || up.cols() != out_dim()) {
        throw ShapeError("backward: upstream shape " + up.shape_str() + " does not match output");
    }

    // Slot of each layernorm/dropout layer within the cache-side arrays.
    std::vector<size_t> aux_slot(layers_.size(), 0);
    size_t n_ln = 0, n_do = 0;
    for (size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].spec.kind == LayerKind::LayerNorm) aux_slot[i] = n_ln++;
        if (layers_[i].spec.kind == LayerKind::Dropout) aux_slot[i] = n_do++;
    }
    if (cache.ln_xhat.size() != n_ln || cache.dropout_masks.size() != n_do) {
        throw ShapeError("backward: forward cache is missing per-layer state");
    }

    Grads grads;
    grads.w.resize(layers_.size());
    grads.b.resize(layers_.size());

    // grad_a[i] accumulates dLoss/d(output of layer i). Residual connections
    // add extra contributions into earlier slots, so layers are processed in
    // decreasing order: by the time layer i runs, grad_a[i] is complete.
    std::vector<Tensor> grad_a(layers_.size());
    grad_a.back() = std::move(up);

    for (size_t ii = layers_.size(); ii-- > 0;) {
        const Layer& l = layers_[ii];
        const Tensor& g = grad_a[ii];
        const Tensor& x_in = (ii == 0) ? cache.input : cache.activations[ii - 1];
        Tensor gx; // gradient wrt this layer's input

        switch (l.spec.kind) {
        case LayerKind::Linear: {
            const size_t d_in = l.spec.in_dim;
            const size_t d_out = l.spec.out_dim;
            Tensor gw = Tensor::zeros({d_out, d_in});
            gemm_tn(g.data.data(), x_in.data.data(), gw.data.data(), batch, d_out, d_in);
            Tensor gb = Tensor::zeros({d_out});
            for (size_t r = 0; r < batch; ++r) {
                for (size_t c = 0; c < d_out; ++c) gb.data[c] += g.at(r, c);
            }
            gx = Tensor::zeros({batch, d_in});
            gemm_nn(g.data.data(), l.w.data.data(), gx.data.data(), batch, d_out, d_in);
            grads.w[ii] = std::move(gw);
            grads.b[ii] = std::move(gb);
            break;
        }
        case LayerKind::LayerNorm: {
            const size_t d = l.spec.out_dim;
            const Tensor& xhat = cache.ln_xhat[aux_slot[ii]];
            const Tensor& inv_std = cache.ln_inv_std[aux_slot[ii]];
            Tensor gw = Tensor::zeros({d});
            Tensor gb = Tensor::zeros({d});
            gx = Tensor::zeros({batch, d});
            const double dd = static_cast<double>(d);
            for (size_t r = 0; r < batch; ++r) {
                double sum_dxhat = 0.0;
                double sum_dxhat_xhat = 0.0;
                for (size_t c = 0; c < d; ++c) {
                    const double dxh = g.at(r, c) * l.w.data[c];
                    sum_dxhat += dxh;
                    sum_dxhat_xhat += dxh * xhat.at(r, c);
                    gw.data[c] += g.at(r, c) * xhat.at(r, c);
                    gb.data[c] += g.at(r, c);
                }
                const double scale = inv_std.data[r] / dd;
                for (size_t c = 0; c < d; ++c) {
                    const double dxh = g.at(r, c) * l.w.data[c];
                    gx.at(r, c) = scale * (dd * dxh - sum_dxhat - xhat.at(r, c) * sum_dxhat_xhat);
                }
            }
            grads.w[ii] = std::move(gw);
            grads.b[ii] = std::move(gb);
            break;
        }
        case LayerKind::Gelu: {
            gx = g;
            for (size_t j = 0; j < gx.data.size(); ++j) {
                gx.data[j] *= gelu_grad_scalar(x_in.data[j]);
            }
            break;
        }
        case LayerKind::Dropout: {
            const Tensor& mask = cache.dropout_masks[aux_slot[ii]];
            gx = g;
            for (size_t j = 0; j < gx.data.size(); ++j) gx.data[j] *= mask.data[j];
            break;
        }
        case LayerKind::ResidualAdd: {
            gx = g;
            if (l.spec.res_offset == ii + 1) {
                add_into(grads.input, g);
            } else {
                add_into(grad_a[ii - l.spec.res_offset], g);
            }
            break;
        }
        }

        if (ii == 0) {
            add_into(grads.input, gx);
        } else {
            add_into(grad_a[ii - 1], gx);
        }
    }
    return grads;
}

void accumulate_grads(Grads& acc, const Grads& g) {
    if (acc.w.empty()) {
        acc = g;
        return;
    }
    if (acc.w.size() != g.w.size()) throw ShapeError("accumulate_grads: layer count mismatch");
    for (size_t i = 0; i < g.w.size(); ++i) {
        if (g.w[i].numel()) add_into(acc.w[i], g.w[i]);
        if (g.b[i].numel()) add_into(acc.b[i], g.b[i]);
    }
    if (g.input.numel()) add_into(acc.input, g.input);
}

void scale_grads(Grads& g, double s) {
    for (auto& t : g.w) {
        for (double& v : t.data) v *= s;
    }
    for (auto& t : g.b) {
        for (double& v : t.data) v *= s;
    }
    for (double& v : g.input.data) v *= s;
}

} // namespace sqz::nn
