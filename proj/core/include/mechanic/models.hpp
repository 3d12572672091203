#pragma once

#include <utility>
#include <vector>

#include "mechanic/data.hpp"
#include "mechanic/vec.hpp"

namespace mechanic {

// Desk-scale differentiable objectives with analytic gradients. Parameters
// live in one flat vector; layouts are documented per factory.
struct Objective {
    enum class Kind { quadratic, linreg, logreg, multilogreg, mlp };
    enum class MlpHead { mse, cross_entropy };

    Kind kind = Kind::quadratic;
    long feature_dim = 0;
    long classes = 2;       // multilogreg only
    long hidden = 0;        // mlp only
    long outputs = 1;       // mlp only
    MlpHead head = MlpHead::mse;
    ParamVector quad_center;

    long param_dim() const;
};

// f(x) = 0.5 * ||x - center||^2.
Objective make_quadratic(ParamVector center);

// Least squares, 0.5 * (w.x - y)^2 per example, no bias term.
Objective make_linreg(long feature_dim);

// Binary logistic loss log(1 + exp(-y * w.x)) with labels in {-1, +1}.
Objective make_logreg(long feature_dim);

// Softmax cross entropy; labels are class indices 0..classes-1.
// Parameter layout: class-major, w[k*dim + j].
Objective make_multilogreg(long feature_dim, long classes);

// One hidden tanh layer. Layout: W1 (hidden x in), b1, W2 (outputs x hidden),
// b2. MSE head expects outputs == 1 and a real label; the cross-entropy head
// treats the label as a class index into the output vector.
Objective make_mlp(long feature_dim, long hidden, long outputs, Objective::MlpHead head);

struct LossGrad {
    double loss = 0.0;
    ParamVector grad;
};

// Mean loss and its analytic gradient over the batch. The quadratic kind
// ignores dataset and batch (pass nullptr / empty). Data-driven kinds
// require a dataset whose dim matches the objective.
LossGrad loss_and_grad(const Objective& obj, const ParamVector& params,
                       const Dataset* data, const Batch& batch);

// Central differences per coordinate, the verification oracle for the
// analytic gradients. step must be positive.
ParamVector finite_difference_grad(const Objective& obj, const ParamVector& params,
                                   const Dataset* data, const Batch& batch, double step);

} // namespace mechanic
