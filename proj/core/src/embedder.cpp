#include "p2lr/embedder.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "p2lr/error.hpp"
#include "p2lr/parallel.hpp"
#include "p2lr/uncertainty.hpp"

namespace p2lr::embedder {
namespace {

void check_problem(const EmbeddingModel& model, const WStepProblem& problem) {
    const Index d = model.dim();
    if (model.W.cols() != d || model.bias.size() != d) {
        fail(ErrorCode::input_error, "embedding model must be square with matching bias");
    }
    if (problem.raw.cols() != d || problem.classifier.cols() != d) {
        fail(ErrorCode::input_error, "raw features, model and classifier dimensions differ");
    }
    const auto n = static_cast<std::size_t>(problem.raw.rows());
    if (problem.pseudo_labels.size() != n || problem.sample_weights.size() != n) {
        fail(ErrorCode::input_error, "pseudo labels and sample weights must align with features");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(problem.sample_weights[i] >= 0.0) || !std::isfinite(problem.sample_weights[i])) {
            fail(ErrorCode::input_error, "sample weight " + std::to_string(i) +
                                             " must be finite and >= 0");
        }
    }
}

Vector embed_row(const EmbeddingModel& model, const Matrix& raw, Index row) {
    return model.W * raw.row(row).transpose() + model.bias;
}

bool all_zero(std::span<const double> weights) {
    for (const double w : weights) {
        if (w != 0.0) {
            return false;
        }
    }
    return true;
}

struct SampleTerm {
    double loss = 0.0;
    Vector grad_f;            // dL_i / df_i, weighted by v_i
    Vector logit_grad;        // dL_i / dz_i, weighted by v_i
    Vector f_hat;
};

SampleTerm sample_term(const EmbeddingModel& model, const WStepProblem& problem, Index row,
                       bool need_grad) {
    SampleTerm term;
    const double weight = problem.sample_weights[static_cast<std::size_t>(row)];
    const Vector f = embed_row(model, problem.raw, row);
    const double f_norm = f.norm();
    if (!(f_norm > 0.0) || !std::isfinite(f_norm)) {
        fail(ErrorCode::singular_normalization,
             "embedding of selected sample " + std::to_string(row) + " has zero or non-finite norm");
    }
    const Index c = problem.classifier.rows();
    const auto q = uncertainty::ideal_distribution(
        c, problem.pseudo_labels[static_cast<std::size_t>(row)], problem.epsilon);
    const auto p = uncertainty::centroid_classifier_probs(
        std::span<const double>(f.data(), static_cast<std::size_t>(f.size())), problem.classifier,
        problem.alpha);
    term.loss = weight * uncertainty::kl_uncertainty(q, p);
    if (!need_grad) {
        return term;
    }

    // d KL(q || softmax(z)) / dz = p - q, z_j = alpha * <w_j/|w_j|, f/|f|>.
    term.f_hat = f / f_norm;
    term.logit_grad.resize(c);
    Vector grad_fhat = Vector::Zero(f.size());
    for (Index j = 0; j < c; ++j) {
        const double g = weight * (p[static_cast<std::size_t>(j)] - q[static_cast<std::size_t>(j)]);
        term.logit_grad[j] = g;
        const auto w = problem.classifier.row(j);
        grad_fhat += (problem.alpha * g / w.norm()) * w.transpose();
    }
    // Project out the radial component: d(f/|f|)/df = (I - f_hat f_hat^T) / |f|.
    term.grad_f = (grad_fhat - term.f_hat.dot(grad_fhat) * term.f_hat) / f_norm;
    return term;
}

std::vector<SampleTerm> all_terms(const EmbeddingModel& model, const WStepProblem& problem,
                                  bool need_grad) {
    std::vector<SampleTerm> terms(static_cast<std::size_t>(problem.raw.rows()));
    parallel_for(terms.size(), [&](std::size_t i) {
        if (problem.sample_weights[i] != 0.0) {
            terms[i] = sample_term(model, problem, static_cast<Index>(i), need_grad);
        }
    });
    return terms;
}

// Trainable state of a descent run; the classifier is present only for the
// internal-classifier variant.
struct Params {
    EmbeddingModel model;
    std::optional<Matrix> classifier;
};

WStepProblem bind(const WStepProblem& problem, const Params& params) {
    return {problem.raw, params.classifier ? *params.classifier : problem.classifier,
            problem.pseudo_labels, problem.sample_weights, problem.alpha, problem.epsilon};
}

double loss_or_infinity(const Params& params, const WStepProblem& problem) {
    if (!params.model.W.allFinite() || !params.model.bias.allFinite() ||
        (params.classifier && !params.classifier->allFinite())) {
        return std::numeric_limits<double>::infinity();
    }
    try {
        return wstep_loss(params.model, bind(problem, params)).value;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::singular_normalization) {
            return std::numeric_limits<double>::infinity();
        }
        throw;
    }
}

Params descend(Params current, const WStepProblem& problem, const OptimizeOptions& options,
               OptimizeTrace* trace) {
    if (!(options.lr > 0.0) || !std::isfinite(options.lr)) {
        fail(ErrorCode::config_error, "lr must be finite and > 0");
    }
    if (options.n_grad_steps < 1) {
        fail(ErrorCode::config_error, "n_grad_steps must be >= 1");
    }
    double current_loss = wstep_loss(current.model, bind(problem, current)).value;
    double lr = options.lr;
    OptimizeTrace local{current_loss, current_loss, 0, lr};

    for (int s = 0; s < options.n_grad_steps; ++s) {
        const auto grad = wstep_grad(current.model, bind(problem, current),
                                     current.classifier.has_value());
        const bool flat = grad.dW.isZero(0.0) && grad.dbias.isZero(0.0) &&
                          (!grad.dclassifier || grad.dclassifier->isZero(0.0));
        if (flat) {
            break;
        }
        bool accepted = false;
        for (int halving = 0; halving <= options.max_halvings; ++halving) {
            Params candidate{{current.model.W - lr * grad.dW, current.model.bias - lr * grad.dbias},
                             std::nullopt};
            if (current.classifier) {
                candidate.classifier = *current.classifier - lr * *grad.dclassifier;
            }
            const double candidate_loss = loss_or_infinity(candidate, problem);
            if (candidate_loss < current_loss) {
                current = std::move(candidate);
                current_loss = candidate_loss;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if (!accepted) {
            break;
        }
        ++local.accepted_steps;
    }
    local.loss_after = current_loss;
    local.final_lr = lr;
    if (trace) {
        *trace = local;
    }
    return current;
}

} // namespace

EmbeddingModel EmbeddingModel::identity(Index d) {
    return {Matrix::Identity(d, d), Vector::Zero(d)};
}

Matrix embed(const EmbeddingModel& model, const Matrix& raw) {
    if (raw.cols() != model.W.cols() || model.bias.size() != model.W.rows()) {
        fail(ErrorCode::input_error, "raw feature dimension does not match the model");
    }
    if (!raw.allFinite()) {
        fail(ErrorCode::input_error, "non-finite raw features");
    }
    Matrix out(raw.rows(), model.W.rows());
    parallel_for(static_cast<std::size_t>(raw.rows()), [&](std::size_t i) {
        const auto row = static_cast<Index>(i);
        for (Index r = 0; r < model.W.rows(); ++r) {
            double sum = model.bias[r];
            for (Index c = 0; c < model.W.cols(); ++c) {
                sum += model.W(r, c) * raw(row, c);
            }
            out(row, r) = sum;
        }
    });
    return out;
}

WStepLoss wstep_loss(const EmbeddingModel& model, const WStepProblem& problem) {
    check_problem(model, problem);
    if (all_zero(problem.sample_weights)) {
        return {0.0, true};
    }
    const auto terms = all_terms(model, problem, false);
    double total = 0.0;
    for (const auto& t : terms) {
        total += t.loss;
    }
    return {total, false};
}

WStepGradient wstep_grad(const EmbeddingModel& model, const WStepProblem& problem,
                         bool with_classifier) {
    check_problem(model, problem);
    const Index d = model.dim();
    WStepGradient grad{Matrix::Zero(d, d), Vector::Zero(d), std::nullopt};
    if (with_classifier) {
        grad.dclassifier = Matrix::Zero(problem.classifier.rows(), d);
    }
    if (all_zero(problem.sample_weights)) {
        return grad;
    }
    const auto terms = all_terms(model, problem, true);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (problem.sample_weights[i] == 0.0) {
            continue;
        }
        const auto& t = terms[i];
        grad.dW.noalias() += t.grad_f * problem.raw.row(static_cast<Index>(i));
        grad.dbias += t.grad_f;
        if (with_classifier) {
            for (Index j = 0; j < problem.classifier.rows(); ++j) {
                const Vector w = problem.classifier.row(j).transpose();
                const double w_norm = w.norm();
                const Vector w_hat = w / w_norm;
                const Vector dz_dw = (t.f_hat - w_hat.dot(t.f_hat) * w_hat) * (problem.alpha / w_norm);
                grad.dclassifier->row(j) += t.logit_grad[j] * dz_dw.transpose();
            }
        }
    }
    return grad;
}

EmbeddingModel wstep_optimize(const EmbeddingModel& model, const WStepProblem& problem,
                              const OptimizeOptions& options, OptimizeTrace* trace) {
    return descend({model, std::nullopt}, problem, options, trace).model;
}

EmbeddingModel wstep_optimize_joint(const EmbeddingModel& model, Matrix& classifier,
                                    const WStepProblem& problem, const OptimizeOptions& options,
                                    OptimizeTrace* trace) {
    auto result = descend({model, classifier}, problem, options, trace);
    classifier = std::move(*result.classifier);
    return std::move(result.model);
}

TeacherState ema_update(const TeacherState& teacher, const EmbeddingModel& student) {
    const double m = teacher.momentum;
    if (!(m >= 0.0 && m < 1.0)) {
        fail(ErrorCode::config_error, "momentum must lie in [0, 1)");
    }
    if (teacher.model.W.rows() != student.W.rows() || teacher.model.W.cols() != student.W.cols() ||
        teacher.model.bias.size() != student.bias.size()) {
        fail(ErrorCode::input_error, "teacher and student shapes differ");
    }
    TeacherState next = teacher;
    next.model.W = m * teacher.model.W + (1.0 - m) * student.W;
    next.model.bias = m * teacher.model.bias + (1.0 - m) * student.bias;
    return next;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    std::vector<double> flat(m.data(), m.data() + m.size());
    return flat;
}

nlohmann::json vector_to_json(const Vector& v) {
    std::vector<double> flat(v.data(), v.data() + v.size());
    return flat;
}

Matrix matrix_from_json(const nlohmann::json& j, Index d, const char* key) {
    const auto flat = j.at(key).get<std::vector<double>>();
    if (static_cast<Index>(flat.size()) != d * d) {
        fail(ErrorCode::format_error, std::string("checkpoint field ") + key + " must hold d*d values");
    }
    Matrix m(d, d);
    std::copy(flat.begin(), flat.end(), m.data());
    return m;
}

Vector vector_from_json(const nlohmann::json& j, Index d, const char* key) {
    const auto flat = j.at(key).get<std::vector<double>>();
    if (static_cast<Index>(flat.size()) != d) {
        fail(ErrorCode::format_error, std::string("checkpoint field ") + key + " must hold d values");
    }
    return Eigen::Map<const Vector>(flat.data(), d);
}

} // namespace

std::string checkpoint_to_json(const EmbeddingModel& student, const TeacherState& teacher) {
    nlohmann::ordered_json j;
    j["d"] = student.dim();
    j["W"] = matrix_to_json(student.W);
    j["bias"] = vector_to_json(student.bias);
    j["teacher_W"] = matrix_to_json(teacher.model.W);
    j["teacher_bias"] = vector_to_json(teacher.model.bias);
    j["momentum"] = teacher.momentum;
    return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        const auto d = j.at("d").get<Index>();
        if (d < 1) {
            fail(ErrorCode::format_error, "checkpoint d must be >= 1");
        }
        Checkpoint cp;
        cp.student.W = matrix_from_json(j, d, "W");
        cp.student.bias = vector_from_json(j, d, "bias");
        cp.teacher.model.W = matrix_from_json(j, d, "teacher_W");
        cp.teacher.model.bias = vector_from_json(j, d, "teacher_bias");
        cp.teacher.momentum = j.at("momentum").get<double>();
        return cp;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format_error, std::string("bad checkpoint: ") + e.what());
    }
}

} // namespace p2lr::embedder
