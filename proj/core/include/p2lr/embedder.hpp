#pragma once

#include <optional>
#include <span>
#include <string>

#include "p2lr/types.hpp"

namespace p2lr::embedder {

/// Linear embedding f = W x + b.
struct EmbeddingModel {
    Matrix W;
    Vector bias;

    static EmbeddingModel identity(Index d);
    [[nodiscard]] Index dim() const { return W.rows(); }
};

/// Mean-teacher copy tracked by exponential moving average.
struct TeacherState {
    EmbeddingModel model;
    double momentum = 0.9;
};

/// Rows are W * raw_i + bias.
Matrix embed(const EmbeddingModel& model, const Matrix& raw);

/// Inputs of the model-refinement objective: sum_i v_i * KL(Q_i || P_i(w))
/// with the classifier weights held fixed. `sample_weights` holds the binary
/// selection indicators, or soft weights for the reweighting ablation.
struct WStepProblem {
    const Matrix& raw;
    const Matrix& classifier;
    const Labels& pseudo_labels;
    std::span<const double> sample_weights;
    double alpha = 20.0;
    double epsilon = 0.99;
};

struct WStepLoss {
    double value = 0.0;
    /// True when every sample weight is zero; the loss is then 0.
    bool empty_selection = false;
};

struct WStepGradient {
    Matrix dW;
    Vector dbias;
    /// Gradient with respect to the classifier rows; filled only on request.
    std::optional<Matrix> dclassifier;
};

WStepLoss wstep_loss(const EmbeddingModel& model, const WStepProblem& problem);

/// Analytic gradient through the affine map, the L2 normalization and the
/// softmax. Throws singular_normalization naming the sample whose embedding
/// has zero norm.
WStepGradient wstep_grad(const EmbeddingModel& model, const WStepProblem& problem,
                         bool with_classifier = false);

struct OptimizeOptions {
    double lr = 0.05;
    int n_grad_steps = 25;
    /// Maximum lr halvings on a step that fails to decrease the loss.
    int max_halvings = 20;
};

struct OptimizeTrace {
    double loss_before = 0.0;
    double loss_after = 0.0;
    int accepted_steps = 0;
    double final_lr = 0.0;
};

/// Plain gradient descent on the student. A step that does not strictly
/// lower the loss is retried with half the learning rate; the reduced rate
/// carries over to later steps. The final loss never exceeds the initial one.
EmbeddingModel wstep_optimize(const EmbeddingModel& model, const WStepProblem& problem,
                              const OptimizeOptions& options, OptimizeTrace* trace = nullptr);

/// Joint descent on the model and a trainable classifier (the internal
/// classifier ablation). `classifier` is updated in place.
EmbeddingModel wstep_optimize_joint(const EmbeddingModel& model, Matrix& classifier,
                                    const WStepProblem& problem, const OptimizeOptions& options,
                                    OptimizeTrace* trace = nullptr);

/// p_teacher <- momentum * p_teacher + (1 - momentum) * p_student.
TeacherState ema_update(const TeacherState& teacher, const EmbeddingModel& student);

/// {"d", "W", "bias", "teacher_W", "teacher_bias", "momentum"}; W row-major.
std::string checkpoint_to_json(const EmbeddingModel& student, const TeacherState& teacher);

struct Checkpoint {
    EmbeddingModel student;
    TeacherState teacher;
};

Checkpoint checkpoint_from_json(const std::string& text);

} // namespace p2lr::embedder
