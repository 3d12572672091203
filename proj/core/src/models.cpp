#include "mechanic/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mechanic {

long Objective::param_dim() const {
    switch (kind) {
        case Kind::quadratic:
            return static_cast<long>(quad_center.size());
        case Kind::linreg:
        case Kind::logreg:
            return feature_dim;
        case Kind::multilogreg:
            return feature_dim * classes;
        case Kind::mlp:
            return hidden * (feature_dim + 1) + outputs * (hidden + 1);
    }
    throw std::logic_error("objective: unknown kind");
}

Objective make_quadratic(ParamVector center) {
    if (center.empty()) throw std::invalid_argument("quadratic: empty center");
    Objective o;
    o.kind = Objective::Kind::quadratic;
    o.quad_center = std::move(center);
    return o;
}

Objective make_linreg(long feature_dim) {
    if (feature_dim < 1) throw std::invalid_argument("linreg: feature_dim must be >= 1");
    Objective o;
    o.kind = Objective::Kind::linreg;
    o.feature_dim = feature_dim;
    return o;
}

Objective make_logreg(long feature_dim) {
    if (feature_dim < 1) throw std::invalid_argument("logreg: feature_dim must be >= 1");
    Objective o;
    o.kind = Objective::Kind::logreg;
    o.feature_dim = feature_dim;
    return o;
}

Objective make_multilogreg(long feature_dim, long classes) {
    if (feature_dim < 1 || classes < 2)
        throw std::invalid_argument("multilogreg: need feature_dim >= 1 and classes >= 2");
    Objective o;
    o.kind = Objective::Kind::multilogreg;
    o.feature_dim = feature_dim;
    o.classes = classes;
    return o;
}

Objective make_mlp(long feature_dim, long hidden, long outputs, Objective::MlpHead head) {
    if (feature_dim < 1 || hidden < 1 || outputs < 1)
        throw std::invalid_argument("mlp: dimensions must be >= 1");
    if (hidden > 64) throw std::invalid_argument("mlp: hidden width capped at 64");
    if (head == Objective::MlpHead::mse && outputs != 1)
        throw std::invalid_argument("mlp: mse head expects a single output");
    Objective o;
    o.kind = Objective::Kind::mlp;
    o.feature_dim = feature_dim;
    o.hidden = hidden;
    o.outputs = outputs;
    o.head = head;
    return o;
}

namespace {

void check_inputs(const Objective& obj, const ParamVector& params,
                  const Dataset* data, const Batch& batch) {
    if (static_cast<long>(params.size()) != obj.param_dim())
        throw std::invalid_argument("objective: parameter vector has wrong size");
    if (obj.kind == Objective::Kind::quadratic) return;
    if (data == nullptr) throw std::invalid_argument("objective: dataset required");
    if (data->dim() != obj.feature_dim)
        throw std::invalid_argument("objective: dataset dim does not match");
    if (batch.empty()) throw std::invalid_argument("objective: empty batch");
    for (auto i : batch)
        if (static_cast<long>(i) >= data->size())
            throw std::invalid_argument("objective: batch index out of range");
}

LossGrad eval_quadratic(const Objective& obj, const ParamVector& params) {
    LossGrad out;
    out.grad.resize(params.size());
    for (std::size_t j = 0; j < params.size(); ++j) {
        const double d = params[j] - obj.quad_center[j];
        out.grad[j] = d;
        out.loss += 0.5 * d * d;
    }
    return out;
}

LossGrad eval_linreg(const ParamVector& w, const Dataset& data, const Batch& batch) {
    LossGrad out;
    out.grad.assign(w.size(), 0.0);
    for (auto i : batch) {
        const double err = data.row_dot(i, w) - data.label(i);
        out.loss += 0.5 * err * err;
        data.row_axpy(i, err, out.grad);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (auto& g : out.grad) g *= inv;
    return out;
}

LossGrad eval_logreg(const ParamVector& w, const Dataset& data, const Batch& batch) {
    LossGrad out;
    out.grad.assign(w.size(), 0.0);
    for (auto i : batch) {
        const double y = data.label(i);
        const double z = y * data.row_dot(i, w);
        // log(1 + exp(-z)) without overflow on either side
        double dz;
        if (z > 0.0) {
            const double e = std::exp(-z);
            out.loss += std::log1p(e);
            dz = -e / (1.0 + e);
        } else {
            const double e = std::exp(z);
            out.loss += -z + std::log1p(e);
            dz = -1.0 / (1.0 + e);
        }
        data.row_axpy(i, dz * y, out.grad);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (auto& g : out.grad) g *= inv;
    return out;
}

LossGrad eval_multilogreg(const Objective& obj, const ParamVector& w,
                          const Dataset& data, const Batch& batch) {
    const long k = obj.classes;
    const long d = obj.feature_dim;
    LossGrad out;
    out.grad.assign(w.size(), 0.0);
    std::vector<double> logits(static_cast<std::size_t>(k));
    for (auto i : batch) {
        const long target = static_cast<long>(data.label(i));
        if (target < 0 || target >= k)
            throw std::invalid_argument("multilogreg: label outside class range");
        for (long c = 0; c < k; ++c)
            logits[static_cast<std::size_t>(c)] = data.row_dot_ptr(i, w.data() + c * d);
        const double zmax = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (double z : logits) sum += std::exp(z - zmax);
        out.loss += std::log(sum) + zmax - logits[static_cast<std::size_t>(target)];
        for (long c = 0; c < k; ++c) {
            const double p = std::exp(logits[static_cast<std::size_t>(c)] - zmax) / sum;
            const double coef = p - (c == target ? 1.0 : 0.0);
            data.row_axpy_ptr(i, coef, out.grad.data() + c * d);
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (auto& g : out.grad) g *= inv;
    return out;
}

LossGrad eval_mlp(const Objective& obj, const ParamVector& params,
                  const Dataset& data, const Batch& batch) {
    const long in = obj.feature_dim;
    const long hid = obj.hidden;
    const long out_dim = obj.outputs;
    // Layout offsets: W1, b1, W2, b2.
    const long w1_off = 0;
    const long b1_off = hid * in;
    const long w2_off = b1_off + hid;
    const long b2_off = w2_off + out_dim * hid;

    LossGrad out;
    out.grad.assign(params.size(), 0.0);
    ParamVector x, act(static_cast<std::size_t>(hid)), o(static_cast<std::size_t>(out_dim));
    ParamVector d_out(static_cast<std::size_t>(out_dim)), d_act(static_cast<std::size_t>(hid));
    for (auto i : batch) {
        data.row_copy(i, x);
        for (long hgate = 0; hgate < hid; ++hgate) {
            double z = params[static_cast<std::size_t>(b1_off + hgate)];
            for (long j = 0; j < in; ++j)
                z += params[static_cast<std::size_t>(w1_off + hgate * in + j)] *
                     x[static_cast<std::size_t>(j)];
            act[static_cast<std::size_t>(hgate)] = std::tanh(z);
        }
        for (long c = 0; c < out_dim; ++c) {
            double z = params[static_cast<std::size_t>(b2_off + c)];
            for (long hgate = 0; hgate < hid; ++hgate)
                z += params[static_cast<std::size_t>(w2_off + c * hid + hgate)] *
                     act[static_cast<std::size_t>(hgate)];
            o[static_cast<std::size_t>(c)] = z;
        }

        if (obj.head == Objective::MlpHead::mse) {
            const double err = o[0] - data.label(i);
            out.loss += 0.5 * err * err;
            d_out[0] = err;
        } else {
            const long target = static_cast<long>(data.label(i));
            if (target < 0 || target >= out_dim)
                throw std::invalid_argument("mlp: label outside output range");
            const double zmax = *std::max_element(o.begin(), o.end());
            double sum = 0.0;
            for (double z : o) sum += std::exp(z - zmax);
            out.loss += std::log(sum) + zmax - o[static_cast<std::size_t>(target)];
            for (long c = 0; c < out_dim; ++c)
                d_out[static_cast<std::size_t>(c)] =
                    std::exp(o[static_cast<std::size_t>(c)] - zmax) / sum -
                    (c == target ? 1.0 : 0.0);
        }

        for (long hgate = 0; hgate < hid; ++hgate) {
            double da = 0.0;
            for (long c = 0; c < out_dim; ++c) {
                const double dc = d_out[static_cast<std::size_t>(c)];
                out.grad[static_cast<std::size_t>(w2_off + c * hid + hgate)] +=
                    dc * act[static_cast<std::size_t>(hgate)];
                da += dc * params[static_cast<std::size_t>(w2_off + c * hid + hgate)];
            }
            const double a = act[static_cast<std::size_t>(hgate)];
            d_act[static_cast<std::size_t>(hgate)] = da * (1.0 - a * a);
        }
        for (long c = 0; c < out_dim; ++c)
            out.grad[static_cast<std::size_t>(b2_off + c)] += d_out[static_cast<std::size_t>(c)];
        for (long hgate = 0; hgate < hid; ++hgate) {
            const double dz = d_act[static_cast<std::size_t>(hgate)];
            out.grad[static_cast<std::size_t>(b1_off + hgate)] += dz;
            for (long j = 0; j < in; ++j)
                out.grad[static_cast<std::size_t>(w1_off + hgate * in + j)] +=
                    dz * x[static_cast<std::size_t>(j)];
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (auto& g : out.grad) g *= inv;
    return out;
}

} // namespace

LossGrad loss_and_grad(const Objective& obj, const ParamVector& params,
                       const Dataset* data, const Batch& batch) {
    check_inputs(obj, params, data, batch);
    switch (obj.kind) {
        case Objective::Kind::quadratic:
            return eval_quadratic(obj, params);
        case Objective::Kind::linreg:
            return eval_linreg(params, *data, batch);
        case Objective::Kind::logreg:
            return eval_logreg(params, *data, batch);
        case Objective::Kind::multilogreg:
            return eval_multilogreg(obj, params, *data, batch);
        case Objective::Kind::mlp:
            return eval_mlp(obj, params, *data, batch);
    }
    throw std::logic_error("objective: unknown kind");
}

ParamVector finite_difference_grad(const Objective& obj, const ParamVector& params,
                                   const Dataset* data, const Batch& batch, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite differences: step must be positive");
    check_inputs(obj, params, data, batch);
    ParamVector probe = params;
    ParamVector grad(params.size());
    for (std::size_t j = 0; j < params.size(); ++j) {
        const double saved = probe[j];
        probe[j] = saved + step;
        const double up = loss_and_grad(obj, probe, data, batch).loss;
        probe[j] = saved - step;
        const double down = loss_and_grad(obj, probe, data, batch).loss;
        probe[j] = saved;
        grad[j] = (up - down) / (2.0 * step);
    }
    return grad;
}

} // namespace mechanic
