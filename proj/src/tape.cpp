#include "cfsd/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace cfsd {

void Tape::track(const TensorPtr& t) {
    if (seen_.insert(t.get()).second) tracked_.push_back(t);
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0])
        throw std::invalid_argument("matmul shape mismatch: " + a->shape_str() + " * " +
                                    b->shape_str());
    const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
    auto out = make_tensor({m, n});
    const double* pa = a->value.data();
    const double* pb = b->value.data();
    double* pc = out->value.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = pa[i * k + kk];
            const double* brow = pb + kk * n;
            double* crow = pc + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    track(a); track(b); track(out);
    record([a, b, out, m, k, n] {
        const double* g = out->grad.data();
        // dA = G * B^T
        double* ga = a->grad.data();
        const double* pb2 = b->value.data();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t kk = 0; kk < k; ++kk) {
                const double* grow = g + i * n;
                const double* brow = pb2 + kk * n;
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                ga[i * k + kk] += acc;
            }
        }
        // dB = A^T * G
        double* gb = b->grad.data();
        const double* pa2 = a->value.data();
        for (std::size_t kk = 0; kk < k; ++kk) {
            for (std::size_t i = 0; i < m; ++i) {
                const double av = pa2[i * k + kk];
                const double* grow = g + i * n;
                double* brow = gb + kk * n;
                for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
            }
        }
    });
    return out;
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
    if (!a->same_shape(*b))
        throw std::invalid_argument("add shape mismatch: " + a->shape_str() + " vs " + b->shape_str());
    auto out = make_tensor(a->shape);
    for (std::size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] + b->value[i];
    track(a); track(b); track(out);
    record([a, b, out] {
        for (std::size_t i = 0; i < out->size(); ++i) {
            a->grad[i] += out->grad[i];
            b->grad[i] += out->grad[i];
        }
    });
    return out;
}

TensorPtr Tape::sub(const TensorPtr& a, const TensorPtr& b) {
    if (!a->same_shape(*b))
        throw std::invalid_argument("sub shape mismatch: " + a->shape_str() + " vs " + b->shape_str());
    auto out = make_tensor(a->shape);
    for (std::size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] - b->value[i];
    track(a); track(b); track(out);
    record([a, b, out] {
        for (std::size_t i = 0; i < out->size(); ++i) {
            a->grad[i] += out->grad[i];
            b->grad[i] -= out->grad[i];
        }
    });
    return out;
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
    if (!a->same_shape(*b))
        throw std::invalid_argument("mul shape mismatch: " + a->shape_str() + " vs " + b->shape_str());
    auto out = make_tensor(a->shape);
    for (std::size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] * b->value[i];
    track(a); track(b); track(out);
    record([a, b, out] {
        for (std::size_t i = 0; i < out->size(); ++i) {
            a->grad[i] += out->grad[i] * b->value[i];
            b->grad[i] += out->grad[i] * a->value[i];
        }
    });
    return out;
}

TensorPtr Tape::unary(const TensorPtr& x, const std::function<double(double)>& f,
                      const std::function<double(double, double)>& dfdx) {
    auto out = make_tensor(x->shape);
    for (std::size_t i = 0; i < x->size(); ++i) out->value[i] = f(x->value[i]);
    track(x); track(out);
    record([x, out, dfdx] {
        for (std::size_t i = 0; i < x->size(); ++i)
            x->grad[i] += out->grad[i] * dfdx(x->value[i], out->value[i]);
    });
    return out;
}

TensorPtr Tape::relu(const TensorPtr& x) {
    return unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

TensorPtr Tape::sigmoid(const TensorPtr& x) {
    return unary(
        x,
        [](double v) {
            // stable for both tails
            return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        },
        [](double, double y) { return y * (1.0 - y); });
}

TensorPtr Tape::log(const TensorPtr& x) {
    for (double v : x->value)
        if (v <= 0.0) throw std::domain_error("log of nonpositive input (callers must clamp)");
    return unary(
        x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

TensorPtr Tape::exp(const TensorPtr& x) {
    return unary(
        x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

TensorPtr Tape::scale(const TensorPtr& x, double c) {
    return unary(
        x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

TensorPtr Tape::add_rowvec(const TensorPtr& m, const TensorPtr& v) {
    if (m->shape.size() != 2 || v->size() != m->shape[1])
        throw std::invalid_argument("add_rowvec shape mismatch: " + m->shape_str() + " + " +
                                    v->shape_str());
    const std::size_t rows = m->shape[0], cols = m->shape[1];
    auto out = make_tensor(m->shape);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            out->value[i * cols + j] = m->value[i * cols + j] + v->value[j];
    track(m); track(v); track(out);
    record([m, v, out, rows, cols] {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                m->grad[i * cols + j] += out->grad[i * cols + j];
                v->grad[j] += out->grad[i * cols + j];
            }
    });
    return out;
}

TensorPtr Tape::l2_normalize(const TensorPtr& x) {
    const std::size_t rows = x->shape.size() == 2 ? x->shape[0] : 1;
    const std::size_t d = x->shape.size() == 2 ? x->shape[1] : x->size();
    auto out = make_tensor(x->shape);
    std::vector<double> norms(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += x->value[i * d + j] * x->value[i * d + j];
        const double nrm = std::sqrt(s);
        if (nrm == 0.0) throw std::domain_error("l2_normalize of zero vector");
        norms[i] = nrm;
        for (std::size_t j = 0; j < d; ++j) out->value[i * d + j] = x->value[i * d + j] / nrm;
    }
    track(x); track(out);
    record([x, out, rows, d, norms] {
        // projection Jacobian: (I - y y^T)/||x|| applied per row
        for (std::size_t i = 0; i < rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += out->grad[i * d + j] * out->value[i * d + j];
            for (std::size_t j = 0; j < d; ++j)
                x->grad[i * d + j] += (out->grad[i * d + j] - dot * out->value[i * d + j]) / norms[i];
        }
    });
    return out;
}

void Tape::backward(const TensorPtr& loss) {
    if (loss->size() != 1) throw std::invalid_argument("backward expects a scalar loss");
    for (auto& t : tracked_) t->zero_grad();
    loss->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

double grad_check(const std::function<TensorPtr(Tape&)>& f, std::span<const TensorPtr> params,
                  double h) {
    Tape tape;
    auto loss = f(tape);
    tape.backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->grad);

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + h;
            Tape tp;
            const double fp = f(tp)->value[0];
            p->value[i] = saved - h;
            Tape tm;
            const double fm = f(tm)->value[0];
            p->value[i] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double err = std::abs(analytic[pi][i] - fd) / std::max(1.0, std::abs(fd));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace cfsd
