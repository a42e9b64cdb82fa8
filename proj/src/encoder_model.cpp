#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "inflacast/common.hpp"
#include "inflacast/encoder.hpp"
#include "inflacast/parallel.hpp"
#include "inflacast/random.hpp"

namespace inflacast::encoder {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2 = 0.70710678118654752440;

// ---- small dense kernels on row-major buffers --------------------------------

// C[n x m] = A[n x k] * B[k x m] (+ bias row if given)
void matmul(const double* A, const double* B, double* C, std::size_t n, std::size_t k, std::size_t m,
            const double* bias = nullptr) {
    for (std::size_t i = 0; i < n; ++i) {
        double* c = C + i * m;
        if (bias) {
            std::copy(bias, bias + m, c);
        } else {
            std::fill(c, c + m, 0.0);
        }
        const double* a = A + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[p];
            if (av == 0.0) {
                continue;
            }
            const double* b = B + p * m;
            for (std::size_t j = 0; j < m; ++j) {
                c[j] += av * b[j];
            }
        }
    }
}

// C[k x m] += A[n x k]^T * B[n x m]
void matmul_tn_acc(const double* A, const double* B, double* C, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* a = A + i * k;
        const double* b = B + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[p];
            if (av == 0.0) {
                continue;
            }
            double* c = C + p * m;
            for (std::size_t j = 0; j < m; ++j) {
                c[j] += av * b[j];
            }
        }
    }
}

// C[n x k] (+)= A[n x m] * B[k x m]^T
void matmul_nt(const double* A, const double* B, double* C, std::size_t n, std::size_t m, std::size_t k,
               bool accumulate) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* a = A + i * m;
        double* c = C + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* b = B + p * m;
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                s += a[j] * b[j];
            }
            c[p] = accumulate ? c[p] + s : s;
        }
    }
}

void colsum_acc(const double* A, double* out, std::size_t n, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            out[j] += A[i * m + j];
        }
    }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double pdf = std::exp(-0.5 * x * x) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    return cdf + x * pdf;
}

// y = gamma * (x - mean) * rstd + beta, row-wise; stores xhat and rstd for backward.
void layer_norm(const double* x, const double* gamma, const double* beta, double* y, double* xhat, double* rstd,
                std::size_t n, std::size_t d) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x + i * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            mean += xi[j];
        }
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            var += (xi[j] - mean) * (xi[j] - mean);
        }
        var /= static_cast<double>(d);
        const double r = 1.0 / std::sqrt(var + kLnEps);
        rstd[i] = r;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (xi[j] - mean) * r;
            xhat[i * d + j] = h;
            y[i * d + j] = gamma[j] * h + beta[j];
        }
    }
}

// Accumulates dgamma, dbeta and adds dx into dx_acc.
void layer_norm_backward(const double* dy, const double* xhat, const double* rstd, const double* gamma, double* dgamma,
                         double* dbeta, double* dx_acc, std::size_t n, std::size_t d) {
    std::vector<double> dxhat(d);
    for (std::size_t i = 0; i < n; ++i) {
        double mean_dxhat = 0.0;
        double mean_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double g = dy[i * d + j];
            const double h = xhat[i * d + j];
            dgamma[j] += g * h;
            dbeta[j] += g;
            dxhat[j] = g * gamma[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * h;
        }
        mean_dxhat /= static_cast<double>(d);
        mean_dxhat_xhat /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) {
            dx_acc[i * d + j] += rstd[i] * (dxhat[j] - mean_dxhat - xhat[i * d + j] * mean_dxhat_xhat);
        }
    }
}

// ---- parameter views -------------------------------------------------------

struct LayerOffsets {
    std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
};

struct Offsets {
    std::size_t tok, pos, lnf_g, lnf_b, head_w, head_b;
    std::vector<LayerOffsets> layers;
};

Offsets resolve(const EncoderModel& m) {
    Offsets o{};
    o.tok = m.block("tok_emb").offset;
    o.pos = m.block("pos_emb").offset;
    o.lnf_g = m.block("final_ln.gamma").offset;
    o.lnf_b = m.block("final_ln.beta").offset;
    o.head_w = m.block("head.w").offset;
    o.head_b = m.block("head.b").offset;
    for (std::size_t l = 0; l < m.config().n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        auto at = [&](const char* n) { return m.block(p + n).offset; };
        o.layers.push_back({at("ln1.gamma"), at("ln1.beta"), at("attn.wq"), at("attn.bq"), at("attn.wk"),
                            at("attn.bk"), at("attn.wv"), at("attn.bv"), at("attn.wo"), at("attn.bo"),
                            at("ln2.gamma"), at("ln2.beta"), at("ffn.w1"), at("ffn.b1"), at("ffn.w2"),
                            at("ffn.b2")});
    }
    return o;
}

struct LayerCache {
    std::vector<double> h1, xhat1, rstd1, q, k, v, attn, o, drop_attn, xhat2, rstd2, h2, u, g, drop_ffn;
};

struct SeqCache {
    std::vector<std::size_t> positions;  // active positions, ascending
    std::vector<double> drop_emb;
    std::vector<LayerCache> layers;
    std::vector<double> final_xhat, final_rstd, cls_out;
    Logits logits{};
};

std::vector<double> dropout_mask(Rng& rng, std::size_t count, double rate) {
    std::vector<double> mask(count);
    const double keep = 1.0 - rate;
    for (auto& v : mask) {
        v = rng.uniform() < keep ? 1.0 / keep : 0.0;
    }
    return mask;
}

void check_sequence(const EncoderModel& model, const Encoding& seq) {
    const auto& cfg = model.config();
    if (seq.ids.size() != cfg.max_len || seq.mask.size() != cfg.max_len) {
        throw Error("sequence length " + std::to_string(seq.ids.size()) + " does not match max_len " +
                    std::to_string(cfg.max_len));
    }
    for (int id : seq.ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
            throw Error("token id " + std::to_string(id) + " is outside the vocabulary of size " +
                        std::to_string(cfg.vocab_size));
        }
    }
    if (seq.mask[0] != 1) {
        throw Error("position 0 must hold the unmasked [CLS] token");
    }
}

Logits run_forward(const EncoderModel& model, const Offsets& off, const Encoding& seq, const ForwardOptions& opt,
                   std::size_t batch_index, SeqCache* cache, std::vector<std::vector<double>>* maps) {
    check_sequence(model, seq);
    const auto& cfg = model.config();
    const double* P = model.params().data();
    const std::size_t d = cfg.d_model;
    const std::size_t H = cfg.n_heads;
    const std::size_t dh = cfg.head_dim();
    const std::size_t dff = cfg.d_ff;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const bool drop = opt.training && cfg.dropout > 0.0;

    SeqCache local;
    SeqCache& c = cache ? *cache : local;
    c.positions.clear();
    for (std::size_t p = 0; p < cfg.max_len; ++p) {
        if (seq.mask[p] == 1) {
            c.positions.push_back(p);
        }
    }
    const std::size_t n = c.positions.size();
    Rng rng = Rng::derive(opt.dropout_seed, batch_index, 0xD50F);

    std::vector<double> x(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t p = c.positions[i];
        const double* te = P + off.tok + static_cast<std::size_t>(seq.ids[p]) * d;
        const double* pe = P + off.pos + p * d;
        for (std::size_t j = 0; j < d; ++j) {
            x[i * d + j] = te[j] + pe[j];
        }
    }
    if (drop) {
        c.drop_emb = dropout_mask(rng, n * d, cfg.dropout);
        for (std::size_t i = 0; i < n * d; ++i) {
            x[i] *= c.drop_emb[i];
        }
    }

    c.layers.assign(cfg.n_layers, {});
    if (maps) {
        maps->clear();
    }
    std::vector<double> proj(n * d);
    std::vector<double> ffn(n * d);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const auto& lo = off.layers[l];
        auto& lc = c.layers[l];
        lc.h1.resize(n * d);
        lc.xhat1.resize(n * d);
        lc.rstd1.resize(n);
        layer_norm(x.data(), P + lo.ln1_g, P + lo.ln1_b, lc.h1.data(), lc.xhat1.data(), lc.rstd1.data(), n, d);
        lc.q.resize(n * d);
        lc.k.resize(n * d);
        lc.v.resize(n * d);
        matmul(lc.h1.data(), P + lo.wq, lc.q.data(), n, d, d, P + lo.bq);
        matmul(lc.h1.data(), P + lo.wk, lc.k.data(), n, d, d, P + lo.bk);
        matmul(lc.h1.data(), P + lo.wv, lc.v.data(), n, d, d, P + lo.bv);

        lc.attn.assign(H * n * n, 0.0);
        lc.o.assign(n * d, 0.0);
        for (std::size_t h = 0; h < H; ++h) {
            double* A = lc.attn.data() + h * n * n;
            for (std::size_t i = 0; i < n; ++i) {
                const double* qi = lc.q.data() + i * d + h * dh;
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < n; ++j) {
                    const double* kj = lc.k.data() + j * d + h * dh;
                    double s = 0.0;
                    for (std::size_t t = 0; t < dh; ++t) {
                        s += qi[t] * kj[t];
                    }
                    A[i * n + j] = s * scale;
                    mx = std::max(mx, A[i * n + j]);
                }
                double z = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    A[i * n + j] = std::exp(A[i * n + j] - mx);
                    z += A[i * n + j];
                }
                for (std::size_t j = 0; j < n; ++j) {
                    A[i * n + j] /= z;
                }
                double* oi = lc.o.data() + i * d + h * dh;
                for (std::size_t j = 0; j < n; ++j) {
                    const double a = A[i * n + j];
                    const double* vj = lc.v.data() + j * d + h * dh;
                    for (std::size_t t = 0; t < dh; ++t) {
                        oi[t] += a * vj[t];
                    }
                }
            }
            if (maps) {
                std::vector<double> full(cfg.max_len * cfg.max_len, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        full[c.positions[i] * cfg.max_len + c.positions[j]] = A[i * n + j];
                    }
                }
                maps->push_back(std::move(full));
            }
        }
        matmul(lc.o.data(), P + lo.wo, proj.data(), n, d, d, P + lo.bo);
        if (drop) {
            lc.drop_attn = dropout_mask(rng, n * d, cfg.dropout);
            for (std::size_t i = 0; i < n * d; ++i) {
                proj[i] *= lc.drop_attn[i];
            }
        }
        for (std::size_t i = 0; i < n * d; ++i) {
            x[i] += proj[i];
        }

        lc.h2.resize(n * d);
        lc.xhat2.resize(n * d);
        lc.rstd2.resize(n);
        layer_norm(x.data(), P + lo.ln2_g, P + lo.ln2_b, lc.h2.data(), lc.xhat2.data(), lc.rstd2.data(), n, d);
        lc.u.resize(n * dff);
        lc.g.resize(n * dff);
        matmul(lc.h2.data(), P + lo.w1, lc.u.data(), n, d, dff, P + lo.b1);
        for (std::size_t i = 0; i < n * dff; ++i) {
            lc.g[i] = gelu(lc.u[i]);
        }
        matmul(lc.g.data(), P + lo.w2, ffn.data(), n, dff, d, P + lo.b2);
        if (drop) {
            lc.drop_ffn = dropout_mask(rng, n * d, cfg.dropout);
            for (std::size_t i = 0; i < n * d; ++i) {
                ffn[i] *= lc.drop_ffn[i];
            }
        }
        for (std::size_t i = 0; i < n * d; ++i) {
            x[i] += ffn[i];
        }
    }

    // [CLS] is the first active row.
    c.final_xhat.resize(d);
    c.final_rstd.resize(1);
    c.cls_out.resize(d);
    layer_norm(x.data(), P + off.lnf_g, P + off.lnf_b, c.cls_out.data(), c.final_xhat.data(), c.final_rstd.data(), 1,
               d);
    Logits logits{};
    matmul(c.cls_out.data(), P + off.head_w, logits.data(), 1, d, 2, P + off.head_b);
    c.logits = logits;
    return logits;
}

void run_backward(const EncoderModel& model, const Offsets& off, const Encoding& seq, const SeqCache& c,
                  const Logits& dlogits, double* G) {
    const auto& cfg = model.config();
    const double* P = model.params().data();
    const std::size_t d = cfg.d_model;
    const std::size_t H = cfg.n_heads;
    const std::size_t dh = cfg.head_dim();
    const std::size_t dff = cfg.d_ff;
    const std::size_t n = c.positions.size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // head
    matmul_tn_acc(c.cls_out.data(), dlogits.data(), G + off.head_w, 1, d, 2);
    G[off.head_b] += dlogits[0];
    G[off.head_b + 1] += dlogits[1];
    std::vector<double> dcls(d);
    matmul_nt(dlogits.data(), P + off.head_w, dcls.data(), 1, 2, d, false);

    std::vector<double> dx(n * d, 0.0);
    layer_norm_backward(dcls.data(), c.final_xhat.data(), c.final_rstd.data(), P + off.lnf_g, G + off.lnf_g,
                        G + off.lnf_b, dx.data(), 1, d);

    std::vector<double> dproj(n * d);
    std::vector<double> dh2(n * d);
    std::vector<double> du(n * dff);
    std::vector<double> dO(n * d);
    std::vector<double> dq(n * d);
    std::vector<double> dk(n * d);
    std::vector<double> dv(n * d);
    std::vector<double> dh1(n * d);
    std::vector<double> dA(n);
    for (std::size_t li = cfg.n_layers; li-- > 0;) {
        const auto& lo = off.layers[li];
        const auto& lc = c.layers[li];

        // x = x_mid + drop(ffn(LN2(x_mid)))
        for (std::size_t i = 0; i < n * d; ++i) {
            dproj[i] = lc.drop_ffn.empty() ? dx[i] : dx[i] * lc.drop_ffn[i];
        }
        matmul_tn_acc(lc.g.data(), dproj.data(), G + lo.w2, n, dff, d);
        colsum_acc(dproj.data(), G + lo.b2, n, d);
        matmul_nt(dproj.data(), P + lo.w2, du.data(), n, d, dff, false);
        for (std::size_t i = 0; i < n * dff; ++i) {
            du[i] *= gelu_grad(lc.u[i]);
        }
        matmul_tn_acc(lc.h2.data(), du.data(), G + lo.w1, n, d, dff);
        colsum_acc(du.data(), G + lo.b1, n, dff);
        matmul_nt(du.data(), P + lo.w1, dh2.data(), n, dff, d, false);
        layer_norm_backward(dh2.data(), lc.xhat2.data(), lc.rstd2.data(), P + lo.ln2_g, G + lo.ln2_g, G + lo.ln2_b,
                            dx.data(), n, d);

        // x_mid = x_in + drop(attn(LN1(x_in)))
        for (std::size_t i = 0; i < n * d; ++i) {
            dproj[i] = lc.drop_attn.empty() ? dx[i] : dx[i] * lc.drop_attn[i];
        }
        matmul_tn_acc(lc.o.data(), dproj.data(), G + lo.wo, n, d, d);
        colsum_acc(dproj.data(), G + lo.bo, n, d);
        matmul_nt(dproj.data(), P + lo.wo, dO.data(), n, d, d, false);

        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk.begin(), dk.end(), 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);
        for (std::size_t h = 0; h < H; ++h) {
            const double* A = lc.attn.data() + h * n * n;
            for (std::size_t i = 0; i < n; ++i) {
                const double* doi = dO.data() + i * d + h * dh;
                double row = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double* vj = lc.v.data() + j * d + h * dh;
                    double s = 0.0;
                    for (std::size_t t = 0; t < dh; ++t) {
                        s += doi[t] * vj[t];
                    }
                    dA[j] = s;
                    row += s * A[i * n + j];
                    double* dvj = dv.data() + j * d + h * dh;
                    const double a = A[i * n + j];
                    for (std::size_t t = 0; t < dh; ++t) {
                        dvj[t] += a * doi[t];
                    }
                }
                const double* qi = lc.q.data() + i * d + h * dh;
                double* dqi = dq.data() + i * d + h * dh;
                for (std::size_t j = 0; j < n; ++j) {
                    const double ds = A[i * n + j] * (dA[j] - row) * scale;
                    if (ds == 0.0) {
                        continue;
                    }
                    const double* kj = lc.k.data() + j * d + h * dh;
                    double* dkj = dk.data() + j * d + h * dh;
                    for (std::size_t t = 0; t < dh; ++t) {
                        dqi[t] += ds * kj[t];
                        dkj[t] += ds * qi[t];
                    }
                }
            }
        }
        matmul_tn_acc(lc.h1.data(), dq.data(), G + lo.wq, n, d, d);
        matmul_tn_acc(lc.h1.data(), dk.data(), G + lo.wk, n, d, d);
        matmul_tn_acc(lc.h1.data(), dv.data(), G + lo.wv, n, d, d);
        colsum_acc(dq.data(), G + lo.bq, n, d);
        colsum_acc(dk.data(), G + lo.bk, n, d);
        colsum_acc(dv.data(), G + lo.bv, n, d);
        matmul_nt(dq.data(), P + lo.wq, dh1.data(), n, d, d, false);
        matmul_nt(dk.data(), P + lo.wk, dh1.data(), n, d, d, true);
        matmul_nt(dv.data(), P + lo.wv, dh1.data(), n, d, d, true);
        layer_norm_backward(dh1.data(), lc.xhat1.data(), lc.rstd1.data(), P + lo.ln1_g, G + lo.ln1_g, G + lo.ln1_b,
                            dx.data(), n, d);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t p = c.positions[i];
        double* gt = G + off.tok + static_cast<std::size_t>(seq.ids[p]) * d;
        double* gp = G + off.pos + p * d;
        for (std::size_t j = 0; j < d; ++j) {
            const double g = c.drop_emb.empty() ? dx[i * d + j] : dx[i * d + j] * c.drop_emb[i * d + j];
            gt[j] += g;
            gp[j] += g;
        }
    }
}

double cross_entropy(const Logits& z, int label, Logits* dz, double weight) {
    const double mx = std::max(z[0], z[1]);
    const double lse = mx + std::log(std::exp(z[0] - mx) + std::exp(z[1] - mx));
    if (dz) {
        const double p1 = std::exp(z[1] - lse);
        (*dz)[0] = weight * ((1.0 - p1) - (label == 0 ? 1.0 : 0.0));
        (*dz)[1] = weight * (p1 - (label == 1 ? 1.0 : 0.0));
    }
    return lse - z[static_cast<std::size_t>(label)];
}

void check_labels(std::span<const Encoding> batch, std::span<const int> labels) {
    if (batch.size() != labels.size()) {
        throw Error("batch has " + std::to_string(batch.size()) + " sequences but " + std::to_string(labels.size()) +
                    " labels");
    }
    if (batch.empty()) {
        throw Error("empty batch");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw Error("labels must be 0 or 1");
        }
    }
}

constexpr std::size_t kGradChunks = 4;

}  // namespace

// ---- configuration and layout ------------------------------------------------

void EncoderConfig::validate() const {
    if (vocab_size < SubwordTokenizer::kSpecials) {
        throw UsageError("vocab_size must cover the special tokens");
    }
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
        throw UsageError("d_model must be a positive multiple of n_heads");
    }
    if (n_layers == 0 || d_ff == 0) {
        throw UsageError("n_layers and d_ff must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw UsageError("dropout must lie in [0, 1)");
    }
    const bool standard = max_len == 64 || max_len == 128 || max_len == 256 || max_len == 512;
    if (!standard && !any_max_len) {
        throw UsageError("max_len must be 64, 128, 256 or 512 (got " + std::to_string(max_len) + ")");
    }
    if (max_len < 2) {
        throw UsageError("max_len must be at least 2");
    }
}

EncoderModel::EncoderModel(const EncoderConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols, bool decay) {
        layout_.push_back({std::move(name), offset, rows, cols, decay});
        offset += rows * cols;
    };
    const std::size_t d = cfg_.d_model;
    add("tok_emb", cfg_.vocab_size, d, true);
    add("pos_emb", cfg_.max_len, d, true);
    for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        add(p + "ln1.gamma", 1, d, false);
        add(p + "ln1.beta", 1, d, false);
        add(p + "attn.wq", d, d, true);
        add(p + "attn.bq", 1, d, false);
        add(p + "attn.wk", d, d, true);
        add(p + "attn.bk", 1, d, false);
        add(p + "attn.wv", d, d, true);
        add(p + "attn.bv", 1, d, false);
        add(p + "attn.wo", d, d, true);
        add(p + "attn.bo", 1, d, false);
        add(p + "ln2.gamma", 1, d, false);
        add(p + "ln2.beta", 1, d, false);
        add(p + "ffn.w1", d, cfg_.d_ff, true);
        add(p + "ffn.b1", 1, cfg_.d_ff, false);
        add(p + "ffn.w2", cfg_.d_ff, d, true);
        add(p + "ffn.b2", 1, d, false);
    }
    add("final_ln.gamma", 1, d, false);
    add("final_ln.beta", 1, d, false);
    add("head.w", d, 2, true);
    add("head.b", 1, 2, false);
    params_.assign(offset, 0.0);
    for (const auto& b : layout_) {
        if (b.name.ends_with(".gamma")) {
            std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(b.offset), b.size(), 1.0);
        }
    }
}

EncoderModel EncoderModel::initialized(const EncoderConfig& cfg, std::uint64_t seed) {
    EncoderModel m(cfg);
    Rng rng = Rng::derive(seed, 0x1417);
    for (const auto& b : m.layout_) {
        if (!b.decay) {
            continue;  // layer norms and biases keep their defaults
        }
        for (std::size_t i = 0; i < b.size(); ++i) {
            m.params_[b.offset + i] = 0.02 * rng.normal();
        }
    }
    return m;
}

const ParamBlock& EncoderModel::block(const std::string& name) const {
    for (const auto& b : layout_) {
        if (b.name == name) {
            return b;
        }
    }
    throw Error("no parameter tensor named '" + name + "'");
}

std::span<double> EncoderModel::tensor(const std::string& name) {
    const auto& b = block(name);
    return {params_.data() + b.offset, b.size()};
}

std::span<const double> EncoderModel::tensor(const std::string& name) const {
    const auto& b = block(name);
    return {params_.data() + b.offset, b.size()};
}

// ---- public forward / backward -------------------------------------------------

Logits forward_one(const EncoderModel& model, const Encoding& seq, const ForwardOptions& opt,
                   std::size_t batch_index) {
    const auto off = resolve(model);
    return run_forward(model, off, seq, opt, batch_index, nullptr, nullptr);
}

std::vector<Logits> forward(const EncoderModel& model, std::span<const Encoding> batch, const ForwardOptions& opt) {
    const auto off = resolve(model);
    std::vector<Logits> out(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) { out[i] = run_forward(model, off, batch[i], opt, i, nullptr, nullptr); });
    return out;
}

std::vector<std::vector<double>> attention_maps(const EncoderModel& model, const Encoding& seq) {
    const auto off = resolve(model);
    std::vector<std::vector<double>> maps;
    run_forward(model, off, seq, {}, 0, nullptr, &maps);
    return maps;
}

double loss_and_gradient(const EncoderModel& model, std::span<const Encoding> batch, std::span<const int> labels,
                         std::vector<double>& grad, const ForwardOptions& opt) {
    check_labels(batch, labels);
    const auto off = resolve(model);
    const std::size_t n_params = model.params().size();
    const std::size_t B = batch.size();
    const std::size_t chunks = std::min(kGradChunks, B);
    std::vector<std::vector<double>> partial(chunks);
    std::vector<double> losses(B, 0.0);
    const double w = 1.0 / static_cast<double>(B);
    // Fixed chunking keeps the summation order independent of the worker count.
    parallel_for(chunks, [&](std::size_t ch) {
        auto& g = partial[ch];
        g.assign(n_params, 0.0);
        SeqCache cache;
        for (std::size_t i = ch; i < B; i += chunks) {
            const auto logits = run_forward(model, off, batch[i], opt, i, &cache, nullptr);
            Logits dz{};
            losses[i] = cross_entropy(logits, labels[i], &dz, w);
            run_backward(model, off, batch[i], cache, dz, g.data());
        }
    });
    grad = std::move(partial[0]);
    for (std::size_t ch = 1; ch < chunks; ++ch) {
        const auto& g = partial[ch];
        for (std::size_t j = 0; j < n_params; ++j) {
            grad[j] += g[j];
        }
    }
    double loss = 0.0;
    for (double l : losses) {
        loss += l;
    }
    return loss * w;
}

double mean_loss(const EncoderModel& model, std::span<const Encoding> batch, std::span<const int> labels,
                 const ForwardOptions& opt) {
    check_labels(batch, labels);
    const auto logits = forward(model, batch, opt);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        loss += cross_entropy(logits[i], labels[i], nullptr, 1.0);
    }
    return loss / static_cast<double>(batch.size());
}

double predict_proba(const EncoderModel& model, const Encoding& seq) {
    const auto z = forward_one(model, seq);
    return 1.0 / (1.0 + std::exp(z[0] - z[1]));
}

double class1_logit(const EncoderModel& model, const Encoding& seq) {
    const auto z = forward_one(model, seq);
    return z[1] - z[0];
}

}  // namespace inflacast::encoder
