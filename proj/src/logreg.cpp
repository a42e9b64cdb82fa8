#include <algorithm>
#include <cmath>

#include "inflacast/baselines.hpp"
#include "inflacast/common.hpp"

namespace inflacast::baselines {

namespace {

// log(1 + e^z) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Evaluation {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
};

Evaluation evaluate(const Dataset& data, const std::vector<double>& w, double b, double C, bool with_grad) {
    Evaluation ev;
    if (with_grad) {
        ev.grad_w.assign(w.size(), 0.0);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double z = data.rows[i].dot(w) + b;
        const double y = data.labels[i];
        ev.loss += softplus(z) - y * z;
        if (with_grad) {
            const double r = sigmoid(z) - y;
            for (const auto& e : data.rows[i].entries) {
                ev.grad_w[e.index] += r * e.weight;
            }
            ev.grad_b += r;
        }
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        sq += w[j] * w[j];
        if (with_grad) {
            ev.grad_w[j] += w[j] / C;
        }
    }
    ev.loss += sq / (2.0 * C);
    return ev;
}

double grad_inf_norm(const Evaluation& ev) {
    double m = std::abs(ev.grad_b);
    for (double g : ev.grad_w) {
        m = std::max(m, std::abs(g));
    }
    return m;
}

}  // namespace

double logreg_objective(const Dataset& data, const std::vector<double>& weights, double bias, double C) {
    return evaluate(data, weights, bias, C, false).loss;
}

LogRegModel train_logreg(const Dataset& data, const LogRegParams& params) {
    data.validate();
    if (!data.has_both_classes()) {
        throw Error("logistic regression needs both classes in the training data");
    }
    if (!(params.C > 0.0)) {
        throw UsageError("C must be positive");
    }
    if (params.max_iter < 0) {
        throw UsageError("max_iter must be non-negative");
    }

    LogRegModel m;
    m.C = params.C;
    m.max_iter = params.max_iter;
    m.weights.assign(data.n_features, 0.0);
    m.bias = 0.0;

    constexpr double armijo = 1e-4;
    Evaluation ev = evaluate(data, m.weights, m.bias, m.C, true);
    double step = 1.0 / static_cast<double>(data.size());  // conservative first trial
    std::vector<double> prev_w;
    double prev_b = 0.0;
    Evaluation prev_ev;

    int it = 0;
    for (; it < params.max_iter; ++it) {
        const double ginf = grad_inf_norm(ev);
        if (ginf <= params.tol) {
            break;
        }
        double gsq = ev.grad_b * ev.grad_b;
        for (double g : ev.grad_w) {
            gsq += g * g;
        }
        if (it > 0) {
            // Barzilai-Borwein trial step from the last displacement.
            double ss = (m.bias - prev_b) * (m.bias - prev_b);
            double sy = (m.bias - prev_b) * (ev.grad_b - prev_ev.grad_b);
            for (std::size_t j = 0; j < m.weights.size(); ++j) {
                const double s = m.weights[j] - prev_w[j];
                ss += s * s;
                sy += s * (ev.grad_w[j] - prev_ev.grad_w[j]);
            }
            if (sy > 0.0 && ss > 0.0) {
                step = ss / sy;
            }
        }
        std::vector<double> trial_w(m.weights.size());
        double trial_b = 0.0;
        Evaluation trial;
        bool accepted = false;
        for (int bt = 0; bt < 80; ++bt) {
            for (std::size_t j = 0; j < m.weights.size(); ++j) {
                trial_w[j] = m.weights[j] - step * ev.grad_w[j];
            }
            trial_b = m.bias - step * ev.grad_b;
            trial = evaluate(data, trial_w, trial_b, m.C, false);
            if (trial.loss <= ev.loss - armijo * step * gsq) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            break;  // no further decrease representable in floating point
        }
        prev_w = std::move(m.weights);
        prev_b = m.bias;
        prev_ev = std::move(ev);
        m.weights = std::move(trial_w);
        m.bias = trial_b;
        ev = evaluate(data, m.weights, m.bias, m.C, true);
    }
    m.iterations = it;
    m.final_loss = ev.loss;
    m.final_grad_inf = grad_inf_norm(ev);
    return m;
}

}  // namespace inflacast::baselines
