// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense layers with hand-written backward passes. Tokens are rows of a row-major
// matrix; attention runs over contiguous runs of `seq_len` rows (one run per spatial position).
#pragma once

#include "spectral_bridge/error.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/SpecialFunctions>

#include <cmath>
#include <fmt/format.h>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace spectral_bridge::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Named 2-D parameter tensors. Gradients and optimizer moments use stores of identical layout.
template <typename T>
class ParamStore {
public:
    std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols) {
        names_.push_back(std::move(name));
        values_.push_back(Mat<T>::Zero(rows, cols));
        return values_.size() - 1;
    }

    std::size_t size() const { return values_.size(); }
    Mat<T>& operator[](std::size_t i) { return values_[i]; }
    const Mat<T>& operator[](std::size_t i) const { return values_[i]; }
    const std::string& name(std::size_t i) const { return names_[i]; }
    const std::vector<std::string>& names() const { return names_; }

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i] == name) return i;
        }
        return std::nullopt;
    }

    ParamStore zeros_like() const {
        ParamStore out;
        for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], values_[i].rows(), values_[i].cols());
        return out;
    }

    void set_zero() {
        for (auto& v : values_) v.setZero();
    }

    std::size_t total_elements() const {
        std::size_t n = 0;
        for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
        return n;
    }

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (std::size_t i = 0; i < size(); ++i) {
            out.add(names_[i], values_[i].rows(), values_[i].cols());
            out[i] = values_[i].template cast<U>();
        }
        return out;
    }

    bool operator==(const ParamStore& o) const {
        if (names_ != o.names_) return false;
        for (std::size_t i = 0; i < size(); ++i) {
            if (values_[i].rows() != o.values_[i].rows() || values_[i].cols() != o.values_[i].cols() ||
                values_[i] != o.values_[i]) {
                return false;
            }
        }
        return true;
    }

private:
    std::vector<std::string> names_;
    std::vector<Mat<T>> values_;
};

/// y = x W^T + b, with W of shape (out, in) and b of shape (1, out).
template <typename T>
struct Linear {
    std::size_t weight = 0;
    std::size_t bias = 0;
    int in = 0;
    int out = 0;

    static Linear create(ParamStore<T>& ps, const std::string& prefix, int in, int out) {
        Linear l;
        l.in = in;
        l.out = out;
        l.weight = ps.add(prefix + ".weight", out, in);
        l.bias = ps.add(prefix + ".bias", 1, out);
        return l;
    }

    /// Xavier-uniform weights, zero bias.
    void init(ParamStore<T>& ps, std::mt19937_64& rng) const {
        const double limit = std::sqrt(6.0 / (in + out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        auto& w = ps[weight];
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(dist(rng));
        ps[bias].setZero();
    }

    void forward(const ParamStore<T>& ps, const Mat<T>& x, Mat<T>& y) const {
        y.noalias() = x * ps[weight].transpose();
        y.rowwise() += ps[bias].row(0);
    }

    void backward(const ParamStore<T>& ps, const Mat<T>& x, const Mat<T>& dy, ParamStore<T>& grads,
                  Mat<T>* dx) const {
        grads[weight].noalias() += dy.transpose() * x;
        grads[bias].row(0) += dy.colwise().sum();
        if (dx != nullptr) dx->noalias() = dy * ps[weight];
    }
};

template <typename T>
struct LayerNorm {
    std::size_t gamma = 0;
    std::size_t beta = 0;
    int dim = 0;
    static constexpr double kEps = 1e-5;

    struct Cache {
        Mat<T> xhat;
        Vec<T> rstd;
    };

    static LayerNorm create(ParamStore<T>& ps, const std::string& prefix, int dim) {
        LayerNorm l;
        l.dim = dim;
        l.gamma = ps.add(prefix + ".gamma", 1, dim);
        l.beta = ps.add(prefix + ".beta", 1, dim);
        return l;
    }

    void init(ParamStore<T>& ps) const {
        ps[gamma].setOnes();
        ps[beta].setZero();
    }

    void forward(const ParamStore<T>& ps, const Mat<T>& x, Mat<T>& y, Cache& c) const {
        const auto n = x.rows();
        c.xhat.resize(n, x.cols());
        c.rstd.resize(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            const T mean = x.row(r).mean();
            const T var = (x.row(r).array() - mean).square().mean();
            const T rstd = T(1) / std::sqrt(var + static_cast<T>(kEps));
            c.rstd(r) = rstd;
            c.xhat.row(r) = (x.row(r).array() - mean) * rstd;
        }
        y = c.xhat.array().rowwise() * ps[gamma].row(0).array();
        y.rowwise() += ps[beta].row(0);
    }

    void backward(const ParamStore<T>& ps, const Cache& c, const Mat<T>& dy, ParamStore<T>& grads,
                  Mat<T>& dx) const {
        grads[gamma].row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
        grads[beta].row(0) += dy.colwise().sum();
        const Mat<T> dxhat = dy.array().rowwise() * ps[gamma].row(0).array();
        dx.resize(dy.rows(), dy.cols());
        const T inv_d = T(1) / static_cast<T>(dim);
        for (Eigen::Index r = 0; r < dy.rows(); ++r) {
            const T mean_d = dxhat.row(r).sum() * inv_d;
            const T mean_dx = (dxhat.row(r).array() * c.xhat.row(r).array()).sum() * inv_d;
            dx.row(r) = c.rstd(r) * (dxhat.row(r).array() - mean_d - c.xhat.row(r).array() * mean_dx);
        }
    }
};

/// Multi-head self-attention restricted to contiguous sequences of `seq_len` rows.
template <typename T>
struct SpectralAttention {
    Linear<T> qkv;
    Linear<T> proj;
    int heads = 1;
    int dim = 0;

    struct Cache {
        Mat<T> qkv;      // (N, 3d)
        Mat<T> probs;    // ((N / L) * heads * L, L)
        Mat<T> context;  // (N, d)
    };

    static SpectralAttention create(ParamStore<T>& ps, const std::string& prefix, int dim, int heads) {
        if (heads < 1 || dim % heads != 0) {
            throw ValidationError(fmt::format("embed dim {} not divisible by {} heads", dim, heads));
        }
        SpectralAttention a;
        a.dim = dim;
        a.heads = heads;
        a.qkv = Linear<T>::create(ps, prefix + ".qkv", dim, 3 * dim);
        a.proj = Linear<T>::create(ps, prefix + ".proj", dim, dim);
        return a;
    }

    void init(ParamStore<T>& ps, std::mt19937_64& rng) const {
        qkv.init(ps, rng);
        proj.init(ps, rng);
    }

    void forward(const ParamStore<T>& ps, const Mat<T>& x, int seq_len, Mat<T>& y, Cache& c) const {
        const auto n = x.rows();
        if (seq_len <= 0 || n % seq_len != 0) {
            throw ValidationError(fmt::format("attention: {} rows not divisible into sequences of {}", n, seq_len));
        }
        const int dh = dim / heads;
        const T scale = T(1) / std::sqrt(static_cast<T>(dh));
        const Eigen::Index seqs = n / seq_len;
        qkv.forward(ps, x, c.qkv);
        c.probs.resize(seqs * heads * seq_len, seq_len);
        c.context.resize(n, dim);
        Mat<T> scores(seq_len, seq_len);
        for (Eigen::Index s = 0; s < seqs; ++s) {
            const Eigen::Index r0 = s * seq_len;
            for (int h = 0; h < heads; ++h) {
                auto q = c.qkv.block(r0, h * dh, seq_len, dh);
                auto k = c.qkv.block(r0, dim + h * dh, seq_len, dh);
                auto v = c.qkv.block(r0, 2 * dim + h * dh, seq_len, dh);
                scores.noalias() = q * k.transpose();
                scores *= scale;
                auto p = c.probs.block((s * heads + h) * seq_len, 0, seq_len, seq_len);
                for (int i = 0; i < seq_len; ++i) {
                    const T mx = scores.row(i).maxCoeff();
                    p.row(i) = (scores.row(i).array() - mx).exp();
                    p.row(i) /= p.row(i).sum();
                }
                c.context.block(r0, h * dh, seq_len, dh).noalias() = p * v;
            }
        }
        proj.forward(ps, c.context, y);
    }

    void backward(const ParamStore<T>& ps, const Mat<T>& x, int seq_len, const Cache& c,
                  const Mat<T>& dy, ParamStore<T>& grads, Mat<T>& dx) const {
        const auto n = x.rows();
        const int dh = dim / heads;
        const T scale = T(1) / std::sqrt(static_cast<T>(dh));
        const Eigen::Index seqs = n / seq_len;
        Mat<T> dctx;
        proj.backward(ps, c.context, dy, grads, &dctx);
        Mat<T> dqkv(n, 3 * dim);
        Mat<T> dp(seq_len, seq_len);
        Mat<T> ds(seq_len, seq_len);
        for (Eigen::Index s = 0; s < seqs; ++s) {
            const Eigen::Index r0 = s * seq_len;
            for (int h = 0; h < heads; ++h) {
                auto q = c.qkv.block(r0, h * dh, seq_len, dh);
                auto k = c.qkv.block(r0, dim + h * dh, seq_len, dh);
                auto v = c.qkv.block(r0, 2 * dim + h * dh, seq_len, dh);
                auto p = c.probs.block((s * heads + h) * seq_len, 0, seq_len, seq_len);
                auto dc = dctx.block(r0, h * dh, seq_len, dh);
                dp.noalias() = dc * v.transpose();
                dqkv.block(r0, 2 * dim + h * dh, seq_len, dh).noalias() = p.transpose() * dc;
                for (int i = 0; i < seq_len; ++i) {
                    const T dot = (dp.row(i).array() * p.row(i).array()).sum();
                    ds.row(i) = p.row(i).array() * (dp.row(i).array() - dot);
                }
                ds *= scale;
                dqkv.block(r0, h * dh, seq_len, dh).noalias() = ds * k;
                dqkv.block(r0, dim + h * dh, seq_len, dh).noalias() = ds.transpose() * q;
            }
        }
        qkv.backward(ps, x, dqkv, grads, &dx);
    }
};

template <typename T>
struct Mlp {
    Linear<T> fc1;
    Linear<T> fc2;

    struct Cache {
        Mat<T> pre;
        Mat<T> cdf;  // standard normal CDF of pre
        Mat<T> act;
    };

    static Mlp create(ParamStore<T>& ps, const std::string& prefix, int dim, int hidden) {
        return {Linear<T>::create(ps, prefix + ".fc1", dim, hidden),
                Linear<T>::create(ps, prefix + ".fc2", hidden, dim)};
    }

    void init(ParamStore<T>& ps, std::mt19937_64& rng) const {
        fc1.init(ps, rng);
        fc2.init(ps, rng);
    }

    void forward(const ParamStore<T>& ps, const Mat<T>& x, Mat<T>& y, Cache& c) const {
        fc1.forward(ps, x, c.pre);
        c.cdf = (T(0.5) * (T(1) + (c.pre.array() * static_cast<T>(M_SQRT1_2)).erf())).matrix();
        c.act = (c.pre.array() * c.cdf.array()).matrix();
        fc2.forward(ps, c.act, y);
    }

    void backward(const ParamStore<T>& ps, const Mat<T>& x, const Cache& c, const Mat<T>& dy,
                  ParamStore<T>& grads, Mat<T>& dx) const {
        Mat<T> dact;
        fc2.backward(ps, c.act, dy, grads, &dact);
        const auto x2 = c.pre.array().square();
        const Mat<T> dpre =
            dact.array() *
            (c.cdf.array() + c.pre.array() * (T(-0.5) * x2).exp() * static_cast<T>(0.3989422804014327));
        fc1.backward(ps, x, dpre, grads, &dx);
    }
};

/// Pre-norm transformer block: x + Attn(LN(x)), then + MLP(LN(.)).
template <typename T>
struct TransformerBlock {
    LayerNorm<T> ln1;
    SpectralAttention<T> attn;
    LayerNorm<T> ln2;
    Mlp<T> mlp;

    struct Cache {
        typename LayerNorm<T>::Cache c1;
        Mat<T> n1;
        typename SpectralAttention<T>::Cache ca;
        typename LayerNorm<T>::Cache c2;
        Mat<T> n2;
        typename Mlp<T>::Cache cm;
    };

    static TransformerBlock create(ParamStore<T>& ps, const std::string& prefix, int dim, int heads,
                                   int mlp_hidden) {
        TransformerBlock b;
        b.ln1 = LayerNorm<T>::create(ps, prefix + ".ln1", dim);
        b.attn = SpectralAttention<T>::create(ps, prefix + ".attn", dim, heads);
        b.ln2 = LayerNorm<T>::create(ps, prefix + ".ln2", dim);
        b.mlp = Mlp<T>::create(ps, prefix + ".mlp", dim, mlp_hidden);
        return b;
    }

    void init(ParamStore<T>& ps, std::mt19937_64& rng) const {
        ln1.init(ps);
        attn.init(ps, rng);
        ln2.init(ps);
        mlp.init(ps, rng);
    }

    void forward(const ParamStore<T>& ps, const Mat<T>& x, int seq_len, Mat<T>& y, Cache& c) const {
        Mat<T> tmp;
        ln1.forward(ps, x, c.n1, c.c1);
        attn.forward(ps, c.n1, seq_len, tmp, c.ca);
        y = x + tmp;
        ln2.forward(ps, y, c.n2, c.c2);
        mlp.forward(ps, c.n2, tmp, c.cm);
        y += tmp;
    }

    void backward(const ParamStore<T>& ps, int seq_len, const Cache& c, const Mat<T>& dy,
                  ParamStore<T>& grads, Mat<T>& dx) const {
        Mat<T> dn, dtmp;
        mlp.backward(ps, c.n2, c.cm, dy, grads, dn);
        ln2.backward(ps, c.c2, dn, grads, dtmp);
        Mat<T> dx1 = dy + dtmp;
        attn.backward(ps, c.n1, seq_len, c.ca, dx1, grads, dn);
        ln1.backward(ps, c.c1, dn, grads, dtmp);
        dx = dx1 + dtmp;
    }
};

/// Adaptive-moment optimizer with bias correction.
template <typename T>
class Adam {
public:
    explicit Adam(const ParamStore<T>& like, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : m_(like.zeros_like()), v_(like.zeros_like()), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamStore<T>& params, const ParamStore<T>& grads, double lr) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, t_);
        const double c2 = 1.0 - std::pow(beta2_, t_);
        const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
        const T step = static_cast<T>(lr / c1);
        const T inv_c2 = static_cast<T>(1.0 / c2);
        const T eps = static_cast<T>(eps_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1 * m_[i] + (T(1) - b1) * grads[i];
            v_[i] = b2 * v_[i] + (T(1) - b2) * grads[i].cwiseAbs2();
            params[i].array() -= step * m_[i].array() / ((v_[i].array() * inv_c2).sqrt() + eps);
        }
    }

    int steps_taken() const { return t_; }

private:
    ParamStore<T> m_;
    ParamStore<T> v_;
    double beta1_;
    double beta2_;
    double eps_;
    int t_ = 0;
};

/// Scales all gradients so their global L2 norm is at most max_norm. Returns the pre-clip norm.
template <typename T>
double clip_grad_norm(ParamStore<T>& grads, double max_norm) {
    double sq = 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) sq += static_cast<double>(grads[i].squaredNorm());
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const T s = static_cast<T>(max_norm / (norm + 1e-12));
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] *= s;
    }
    return norm;
}

} // namespace spectral_bridge::nn
