#include "floodlab/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>

#include "floodlab/error.hpp"

namespace floodlab {

namespace {

thread_local std::size_t t_mem_current = 0;
thread_local std::size_t t_mem_peak = 0;

// Accounting assumes tensors are freed on the thread that allocated them,
// which holds for this library (each graph lives on one thread).
std::shared_ptr<std::vector<double>> alloc_data(std::size_t n) {
    t_mem_current += n * sizeof(double);
    if (t_mem_current > t_mem_peak) t_mem_peak = t_mem_current;
    return {new std::vector<double>(n),
            [n](std::vector<double>* p) {
                t_mem_current -= n * sizeof(double);
                delete p;
            }};
}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw ShapeError("zero dimension in tensor shape");
        n *= d;
    }
    return n;
}

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace

std::size_t MemoryTracker::current_bytes() { return t_mem_current; }
std::size_t MemoryTracker::peak_bytes() { return t_mem_peak; }
void MemoryTracker::reset_peak() { t_mem_peak = t_mem_current; }

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    data_ = alloc_data(shape_numel(shape_));
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)) {
    const std::size_t n = shape_numel(shape_);
    if (values.size() != n) throw ShapeError("value count does not match shape");
    data_ = alloc_data(n);
    std::copy(values.begin(), values.end(), data_->begin());
}

std::size_t Tensor::numel() const { return data_ ? data_->size() : 0; }

void Tensor::fill(double v) { std::fill(data_->begin(), data_->end(), v); }

Tensor Tensor::clone() const {
    Tensor out(shape_);
    std::copy(data_->begin(), data_->end(), out.data_->begin());
    return out;
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (shape_numel(new_shape) != numel()) throw ShapeError("reshape changes element count");
    Tensor out;
    out.shape_ = std::move(new_shape);
    out.data_ = data_;
    return out;
}

Tensor& Node::ensure_grad() {
    if (!grad.defined()) {
        grad = Tensor(value.shape());
        grad.fill(0.0);
    }
    return grad;
}

BatchNormParams BatchNormParams::make(std::size_t channels) {
    BatchNormParams p;
    p.gamma = Tensor({channels});
    p.gamma.fill(1.0);
    p.beta = Tensor({channels});
    p.beta.fill(0.0);
    p.running_mean = Tensor({channels});
    p.running_mean.fill(0.0);
    p.running_var = Tensor({channels});
    p.running_var.fill(1.0);
    return p;
}

// ---------------------------------------------------------------------------
// Graph

Var Graph::emplace(Tensor value, bool requires_grad, std::vector<Node*> parents,
                   std::function<void(Node&)> backward_fn) {
    auto node = std::make_unique<Node>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
    nodes_.push_back(std::move(node));
    return nodes_.back().get();
}

Var Graph::leaf(const Tensor& t, bool requires_grad) {
    if (!t.defined()) throw ShapeError("leaf from undefined tensor");
    return emplace(t, requires_grad, {}, nullptr);
}

namespace {

struct MatmulDims {
    std::size_t batch, m, k, n;
    bool shared_b;  // b is a plain matrix applied to every batch of a
};

MatmulDims matmul_dims(const Tensor& a, const Tensor& b) {
    if (a.rank() < 2 || b.rank() < 2) throw ShapeError("matmul operands need rank >= 2");
    MatmulDims d;
    d.m = a.dim(a.rank() - 2);
    d.k = a.dim(a.rank() - 1);
    d.n = b.dim(b.rank() - 1);
    if (b.dim(b.rank() - 2) != d.k) throw ShapeError("matmul inner dimensions disagree");
    d.batch = a.numel() / (d.m * d.k);
    const std::size_t batch_b = b.numel() / (d.k * d.n);
    if (b.rank() == 2) {
        d.shared_b = true;
    } else {
        if (batch_b != d.batch || a.rank() != b.rank()) {
            throw ShapeError("matmul batch dimensions disagree");
        }
        for (std::size_t i = 0; i + 2 < a.rank(); ++i) {
            if (a.dim(i) != b.dim(i)) throw ShapeError("matmul batch dimensions disagree");
        }
        d.shared_b = false;
    }
    return d;
}

}  // namespace

Var Graph::matmul(Var a, Var b) {
    const MatmulDims d = matmul_dims(a->value, b->value);
    std::vector<std::size_t> out_shape(a->value.shape().begin(), a->value.shape().end() - 1);
    out_shape.back() = d.m;
    out_shape.push_back(d.n);

    Tensor out(std::move(out_shape));
    const double* pa = a->value.data();
    const double* pb = b->value.data();
    double* pc = out.data();
    for (std::size_t i = 0; i < d.batch; ++i) {
        ConstMatMap ma(pa + i * d.m * d.k, d.m, d.k);
        ConstMatMap mb(pb + (d.shared_b ? 0 : i * d.k * d.n), d.k, d.n);
        MatMap mc(pc + i * d.m * d.n, d.m, d.n);
        mc.noalias() = ma * mb;
    }

    const bool rg = a->requires_grad || b->requires_grad;
    return emplace(std::move(out), rg, {a, b}, [a, b, d](Node& self) {
        const double* pg = self.grad.data();
        if (a->requires_grad) {
            double* pda = a->ensure_grad().data();
            const double* pb2 = b->value.data();
            for (std::size_t i = 0; i < d.batch; ++i) {
                ConstMatMap mg(pg + i * d.m * d.n, d.m, d.n);
                ConstMatMap mb(pb2 + (d.shared_b ? 0 : i * d.k * d.n), d.k, d.n);
                MatMap mda(pda + i * d.m * d.k, d.m, d.k);
                mda.noalias() += mg * mb.transpose();
            }
        }
        if (b->requires_grad) {
            double* pdb = b->ensure_grad().data();
            const double* pa2 = a->value.data();
            for (std::size_t i = 0; i < d.batch; ++i) {
                ConstMatMap mg(pg + i * d.m * d.n, d.m, d.n);
                ConstMatMap ma(pa2 + i * d.m * d.k, d.m, d.k);
                MatMap mdb(pdb + (d.shared_b ? 0 : i * d.k * d.n), d.k, d.n);
                mdb.noalias() += ma.transpose() * mg;
            }
        }
    });
}

Var Graph::add(Var a, Var b) {
    const std::size_t na = a->value.numel();
    const std::size_t nb = b->value.numel();
    // b must match a's trailing shape.
    if (b->value.rank() > a->value.rank() || na % nb != 0) {
        throw ShapeError("add: shapes incompatible");
    }
    for (std::size_t i = 0; i < b->value.rank(); ++i) {
        if (b->value.dim(b->value.rank() - 1 - i) != a->value.dim(a->value.rank() - 1 - i)) {
            throw ShapeError("add: rhs is not a trailing suffix of lhs");
        }
    }
    Tensor out(a->value.shape());
    const double* pa = a->value.data();
    const double* pb = b->value.data();
    double* po = out.data();
    for (std::size_t i = 0; i < na; ++i) po[i] = pa[i] + pb[i % nb];

    const bool rg = a->requires_grad || b->requires_grad;
    return emplace(std::move(out), rg, {a, b}, [a, b, na, nb](Node& self) {
        const double* pg = self.grad.data();
        if (a->requires_grad) {
            double* pda = a->ensure_grad().data();
            for (std::size_t i = 0; i < na; ++i) pda[i] += pg[i];
        }
        if (b->requires_grad) {
            double* pdb = b->ensure_grad().data();
            for (std::size_t i = 0; i < na; ++i) pdb[i % nb] += pg[i];
        }
    });
}

Var Graph::scale(Var a, double s) {
    Tensor out(a->value.shape());
    const double* pa = a->value.data();
    double* po = out.data();
    const std::size_t n = out.numel();
    for (std::size_t i = 0; i < n; ++i) po[i] = s * pa[i];
    return emplace(std::move(out), a->requires_grad, {a}, [a, s, n](Node& self) {
        if (!a->requires_grad) return;
        double* pda = a->ensure_grad().data();
        const double* pg = self.grad.data();
        for (std::size_t i = 0; i < n; ++i) pda[i] += s * pg[i];
    });
}

namespace {

using ArrMap = Eigen::Map<Eigen::ArrayXd>;
using ConstArrMap = Eigen::Map<const Eigen::ArrayXd>;

// Max-subtracted softmax of each `cols`-long row, vectorized.
void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        ConstArrMap in(x + r * cols, static_cast<Eigen::Index>(cols));
        ArrMap out(y + r * cols, static_cast<Eigen::Index>(cols));
        out = (in - in.maxCoeff()).exp();
        out /= out.sum();
    }
}

// dX = Y * (dY - sum(dY * Y)) per row, accumulated into dx.
void softmax_backward_rows(const double* y, const double* dy, double* dx, std::size_t rows,
                           std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        ConstArrMap ym(y + r * cols, static_cast<Eigen::Index>(cols));
        ConstArrMap gm(dy + r * cols, static_cast<Eigen::Index>(cols));
        ArrMap dm(dx + r * cols, static_cast<Eigen::Index>(cols));
        const double dot = (ym * gm).sum();
        dm += ym * (gm - dot);
    }
}

}  // namespace

Var Graph::softmax(Var a) {
    const std::size_t cols = a->value.dim(a->value.rank() - 1);
    const std::size_t rows = a->value.numel() / cols;
    Tensor out(a->value.shape());
    softmax_rows(a->value.data(), out.data(), rows, cols);
    return emplace(std::move(out), a->requires_grad, {a}, [a, rows, cols](Node& self) {
        if (!a->requires_grad) return;
        softmax_backward_rows(self.value.data(), self.grad.data(), a->ensure_grad().data(),
                              rows, cols);
    });
}

Var Graph::attention(Var q, Var k, Var v, double scale) {
    const Tensor& qv = q->value;
    const Tensor& kv = k->value;
    const Tensor& vv = v->value;
    if (qv.rank() != 4 || kv.rank() != 4 || vv.rank() != 4) {
        throw ShapeError("attention operands must be [b, h, s, d]");
    }
    const std::size_t b = qv.dim(0), h = qv.dim(1), s = qv.dim(2), dk = qv.dim(3);
    const std::size_t dv = vv.dim(3);
    if (kv.dim(0) != b || kv.dim(1) != h || kv.dim(2) != s || kv.dim(3) != dk ||
        vv.dim(0) != b || vv.dim(1) != h || vv.dim(2) != s) {
        throw ShapeError("attention operand shapes disagree");
    }

    const bool rg = q->requires_grad || k->requires_grad || v->requires_grad;
    Tensor ctx({b, h, s, dv});
    Tensor weights;  // [b, h, s, s], kept only when a gradient will flow
    if (rg) weights = Tensor({b, h, s, s});
    Tensor scratch = rg ? Tensor() : Tensor({s, s});

    for (std::size_t i = 0; i < b * h; ++i) {
        ConstMatMap mq(qv.data() + i * s * dk, s, dk);
        ConstMatMap mk(kv.data() + i * s * dk, s, dk);
        ConstMatMap mv(vv.data() + i * s * dv, s, dv);
        double* wblock = rg ? weights.data() + i * s * s : scratch.data();
        MatMap mw(wblock, s, s);
        mw.noalias() = (mq * mk.transpose()) * scale;
        softmax_rows(wblock, wblock, s, s);
        MatMap mc(ctx.data() + i * s * dv, s, dv);
        mc.noalias() = mw * mv;
    }

    return emplace(std::move(ctx), rg, {q, k, v},
                   [q, k, v, weights, scale, b, h, s, dk, dv](Node& self) mutable {
                       Tensor dblock({s, s});
                       for (std::size_t i = 0; i < b * h; ++i) {
                           ConstMatMap ma(weights.data() + i * s * s, s, s);
                           ConstMatMap mg(self.grad.data() + i * s * dv, s, dv);
                           ConstMatMap mq(q->value.data() + i * s * dk, s, dk);
                           ConstMatMap mk(k->value.data() + i * s * dk, s, dk);
                           ConstMatMap mv(v->value.data() + i * s * dv, s, dv);

                           if (v->requires_grad) {
                               MatMap mdv(v->ensure_grad().data() + i * s * dv, s, dv);
                               mdv.noalias() += ma.transpose() * mg;
                           }
                           if (!q->requires_grad && !k->requires_grad) continue;

                           MatMap md(dblock.data(), s, s);
                           md.noalias() = mg * mv.transpose();  // dA
                           // dS = A * (dA - rowsum(dA * A)), then scale.
                           for (std::size_t r = 0; r < s; ++r) {
                               ConstArrMap ya(weights.data() + i * s * s + r * s,
                                              static_cast<Eigen::Index>(s));
                               ArrMap da(dblock.data() + r * s, static_cast<Eigen::Index>(s));
                               const double dot = (ya * da).sum();
                               da = ya * (da - dot) * scale;
                           }
                           if (q->requires_grad) {
                               MatMap mdq(q->ensure_grad().data() + i * s * dk, s, dk);
                               mdq.noalias() += md * mk;
                           }
                           if (k->requires_grad) {
                               MatMap mdk(k->ensure_grad().data() + i * s * dk, s, dk);
                               mdk.noalias() += md.transpose() * mq;
                           }
                       }
                       weights = Tensor();  // release the big activation early
                   });
}

Var Graph::gelu(Var a) {
    static constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    const std::size_t n = a->value.numel();
    Tensor out(a->value.shape());
    const double* px = a->value.data();
    double* py = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        py[i] = px[i] * 0.5 * (1.0 + std::erf(px[i] * M_SQRT1_2));
    }
    return emplace(std::move(out), a->requires_grad, {a}, [a, n](Node& self) {
        if (!a->requires_grad) return;
        double* pda = a->ensure_grad().data();
        const double* pg = self.grad.data();
        const double* px2 = a->value.data();
        for (std::size_t i = 0; i < n; ++i) {
            const double x = px2[i];
            const double phi = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            pda[i] += pg[i] * (phi + x * pdf);
        }
    });
}

Var Graph::batch_norm(Var x, Var gamma, Var beta, BatchNormParams& state, Mode mode) {
    constexpr double kEps = 1e-5;
    constexpr double kMomentum = 0.1;
    const std::size_t c = x->value.dim(x->value.rank() - 1);
    if (gamma->value.numel() != c || beta->value.numel() != c) {
        throw ShapeError("batch_norm: parameter dimension does not match channels");
    }
    const std::size_t n = x->value.numel() / c;  // normalization set size per channel

    Tensor out(x->value.shape());
    Tensor xhat(x->value.shape());
    Tensor inv_std({c});
    const double* px = x->value.data();
    double* po = out.data();
    double* ph = xhat.data();
    const double* pgam = gamma->value.data();
    const double* pbet = beta->value.data();

    if (mode == Mode::TRAIN) {
        if (n <= 1) throw DegenerateData("batch_norm: normalization set has a single element");
        std::vector<double> mean(c, 0.0), var(c, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) mean[j] += px[i * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) mean[j] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const double d = px[i * c + j] - mean[j];
                var[j] += d * d;
            }
        }
        for (std::size_t j = 0; j < c; ++j) var[j] /= static_cast<double>(n);
        for (std::size_t j = 0; j < c; ++j) {
            inv_std[j] = 1.0 / std::sqrt(var[j] + kEps);
            state.running_mean[j] = (1.0 - kMomentum) * state.running_mean[j] + kMomentum * mean[j];
            state.running_var[j] = (1.0 - kMomentum) * state.running_var[j] + kMomentum * var[j];
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const double h = (px[i * c + j] - mean[j]) * inv_std[j];
                ph[i * c + j] = h;
                po[i * c + j] = pgam[j] * h + pbet[j];
            }
        }
    } else {
        for (std::size_t j = 0; j < c; ++j) {
            inv_std[j] = 1.0 / std::sqrt(state.running_var[j] + kEps);
        }
        const double* prm = state.running_mean.data();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const double h = (px[i * c + j] - prm[j]) * inv_std[j];
                ph[i * c + j] = h;
                po[i * c + j] = pgam[j] * h + pbet[j];
            }
        }
    }

    const bool rg = x->requires_grad || gamma->requires_grad || beta->requires_grad;
    return emplace(std::move(out), rg, {x, gamma, beta},
                   [x, gamma, beta, xhat, inv_std, n, c, mode](Node& self) {
                       const double* pg = self.grad.data();
                       const double* ph2 = xhat.data();
                       const double* pgam2 = gamma->value.data();
                       if (beta->requires_grad) {
                           double* pdb = beta->ensure_grad().data();
                           for (std::size_t i = 0; i < n; ++i)
                               for (std::size_t j = 0; j < c; ++j) pdb[j] += pg[i * c + j];
                       }
                       if (gamma->requires_grad) {
                           double* pdg = gamma->ensure_grad().data();
                           for (std::size_t i = 0; i < n; ++i)
                               for (std::size_t j = 0; j < c; ++j)
                                   pdg[j] += pg[i * c + j] * ph2[i * c + j];
                       }
                       if (!x->requires_grad) return;
                       double* pdx = x->ensure_grad().data();
                       if (mode == Mode::EVAL) {
                           for (std::size_t i = 0; i < n; ++i)
                               for (std::size_t j = 0; j < c; ++j)
                                   pdx[i * c + j] += pg[i * c + j] * pgam2[j] * inv_std[j];
                           return;
                       }
                       // Train mode: gradient through the batch statistics.
                       std::vector<double> sum_dh(c, 0.0), sum_dh_h(c, 0.0);
                       for (std::size_t i = 0; i < n; ++i) {
                           for (std::size_t j = 0; j < c; ++j) {
                               const double dh = pg[i * c + j] * pgam2[j];
                               sum_dh[j] += dh;
                               sum_dh_h[j] += dh * ph2[i * c + j];
                           }
                       }
                       const double inv_n = 1.0 / static_cast<double>(n);
                       for (std::size_t i = 0; i < n; ++i) {
                           for (std::size_t j = 0; j < c; ++j) {
                               const double dh = pg[i * c + j] * pgam2[j];
                               pdx[i * c + j] +=
                                   inv_std[j] *
                                   (dh - inv_n * (sum_dh[j] + ph2[i * c + j] * sum_dh_h[j]));
                           }
                       }
                   });
}

Var Graph::dropout(Var x, double p, Rng& rng, Mode mode) {
    if (p < 0.0 || p >= 1.0) throw InvalidArgument("dropout probability must be in [0, 1)");
    if (mode == Mode::EVAL || p == 0.0) return x;

    const std::size_t n = x->value.numel();
    const double keep_scale = 1.0 / (1.0 - p);
    Tensor mask(x->value.shape());
    Tensor out(x->value.shape());
    const double* px = x->value.data();
    double* pm = mask.data();
    double* po = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        pm[i] = rng.uniform() < p ? 0.0 : keep_scale;
        po[i] = px[i] * pm[i];
    }
    return emplace(std::move(out), x->requires_grad, {x}, [x, mask, n](Node& self) {
        if (!x->requires_grad) return;
        double* pdx = x->ensure_grad().data();
        const double* pg = self.grad.data();
        const double* pm2 = mask.data();
        for (std::size_t i = 0; i < n; ++i) pdx[i] += pg[i] * pm2[i];
    });
}

Var Graph::bce_with_logits(Var logits, const std::vector<double>& targets) {
    const std::size_t n = logits->value.numel();
    if (targets.size() != n) throw ShapeError("bce_with_logits: target count mismatch");
    const double* pz = logits->value.data();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = pz[i];
        loss += std::max(z, 0.0) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
    }
    loss /= static_cast<double>(n);

    Tensor out = Tensor::scalar(loss);
    auto targets_copy = targets;
    return emplace(std::move(out), logits->requires_grad, {logits},
                   [logits, targets_copy = std::move(targets_copy), n](Node& self) {
                       if (!logits->requires_grad) return;
                       double* pdz = logits->ensure_grad().data();
                       const double* pz2 = logits->value.data();
                       const double g = self.grad[0] / static_cast<double>(n);
                       for (std::size_t i = 0; i < n; ++i) {
                           const double sig = 1.0 / (1.0 + std::exp(-pz2[i]));
                           pdz[i] += g * (sig - targets_copy[i]);
                       }
                   });
}

Var Graph::reshape(Var a, std::vector<std::size_t> new_shape) {
    Tensor out = a->value.reshaped(std::move(new_shape));
    const std::size_t n = out.numel();
    return emplace(std::move(out), a->requires_grad, {a}, [a, n](Node& self) {
        if (!a->requires_grad) return;
        double* pda = a->ensure_grad().data();
        const double* pg = self.grad.data();
        for (std::size_t i = 0; i < n; ++i) pda[i] += pg[i];
    });
}

namespace {

Tensor permute4_values(const Tensor& in, const std::array<std::size_t, 4>& axes) {
    if (in.rank() != 4) throw ShapeError("permute4 needs a rank-4 tensor");
    const std::size_t s[4] = {in.dim(0), in.dim(1), in.dim(2), in.dim(3)};
    Tensor out({s[axes[0]], s[axes[1]], s[axes[2]], s[axes[3]]});
    const std::size_t in_stride[4] = {s[1] * s[2] * s[3], s[2] * s[3], s[3], 1};
    std::size_t ostride[4];
    ostride[3] = 1;
    ostride[2] = out.dim(3);
    ostride[1] = out.dim(2) * out.dim(3);
    ostride[0] = out.dim(1) * out.dim(2) * out.dim(3);
    const double* pi = in.data();
    double* po = out.data();
    std::size_t idx[4];
    for (idx[0] = 0; idx[0] < s[0]; ++idx[0])
        for (idx[1] = 0; idx[1] < s[1]; ++idx[1])
            for (idx[2] = 0; idx[2] < s[2]; ++idx[2])
                for (idx[3] = 0; idx[3] < s[3]; ++idx[3]) {
                    const std::size_t src = idx[0] * in_stride[0] + idx[1] * in_stride[1] +
                                            idx[2] * in_stride[2] + idx[3];
                    const std::size_t dst =
                        idx[axes[0]] * ostride[0] + idx[axes[1]] * ostride[1] +
                        idx[axes[2]] * ostride[2] + idx[axes[3]] * ostride[3];
                    po[dst] = pi[src];
                }
    return out;
}

}  // namespace

Var Graph::permute4(Var a, const std::array<std::size_t, 4>& axes) {
    Tensor out = permute4_values(a->value, axes);
    std::array<std::size_t, 4> inverse{};
    for (std::size_t i = 0; i < 4; ++i) inverse[axes[i]] = i;
    return emplace(std::move(out), a->requires_grad, {a}, [a, inverse](Node& self) {
        if (!a->requires_grad) return;
        Tensor gin = permute4_values(self.grad, inverse);
        double* pda = a->ensure_grad().data();
        const double* pg = gin.data();
        const std::size_t n = gin.numel();
        for (std::size_t i = 0; i < n; ++i) pda[i] += pg[i];
    });
}

void Graph::backward(Var loss) {
    if (loss->value.numel() != 1) throw ShapeError("backward needs a scalar loss");
    if (!loss->requires_grad) throw InvalidArgument("loss does not require gradients");
    loss->ensure_grad()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node& node = **it;
        if (node.backward_fn && node.grad.defined() && node.requires_grad) {
            node.backward_fn(node);
            // Reverse creation order means every consumer of this node has
            // already run, so its buffers (and the closure's captures) are
            // dead weight from here on. Leaves keep their gradients for the
            // optimizer; the loss keeps its value for the caller.
            node.backward_fn = nullptr;
            node.grad = Tensor();
            if (&node != loss) node.value = Tensor();
        }
    }
}

double grad_check(const std::function<Var(Graph&, Var)>& f, const Tensor& x, double eps) {
    Tensor xc = x.clone();
    Graph g;
    Var leaf = g.leaf(xc, true);
    Var loss = f(g, leaf);
    if (loss->value.numel() != 1) throw ShapeError("grad_check: function must return a scalar");
    g.backward(loss);
    const Tensor& analytic = leaf->ensure_grad();

    auto eval_at = [&f](const Tensor& point) {
        Graph fg;
        Var l = fg.leaf(point, false);
        return f(fg, l)->value[0];
    };

    double max_err = 0.0;
    const std::size_t n = x.numel();
    for (std::size_t i = 0; i < n; ++i) {
        Tensor plus = x.clone();
        plus[i] += eps;
        Tensor minus = x.clone();
        minus[i] -= eps;
        const double numeric = (eval_at(plus) - eval_at(minus)) / (2.0 * eps);
        const double err = std::abs(analytic[i] - numeric) / std::max(1e-12, std::abs(numeric));
        max_err = std::max(max_err, err);
    }
    return max_err;
}

}  // namespace floodlab
