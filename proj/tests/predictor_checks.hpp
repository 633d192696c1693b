#pragma once

/* Numerical checks of the predictor, shared by the unit tests and the
 * acceptance run */

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "region_learner/predictor.hpp"

namespace predictor_checks {

using namespace region_learner;

inline double& param(PredictorModel& m, int block, Eigen::Index i)
{
    switch (block) {
    case 0: return m.w1.data()[i];
    case 1: return m.b1.data()[i];
    case 2: return m.w2.data()[i];
    default: return m.b2.data()[i];
    }
}

inline double grad(const ModelGradients& g, int block, Eigen::Index i)
{
    switch (block) {
    case 0: return g.w1.data()[i];
    case 1: return g.b1.data()[i];
    case 2: return g.w2.data()[i];
    default: return g.b2.data()[i];
    }
}

inline Eigen::Index block_size(const PredictorModel& m, int block)
{
    switch (block) {
    case 0: return m.w1.size();
    case 1: return m.b1.size();
    case 2: return m.w2.size();
    default: return m.b2.size();
    }
}

/*
 * Worst relative error between the analytic gradient and central
 * differences (h = 1e-4) over n_models random D = 8, H = 6, R = 4 models,
 * each with a 3-example batch. Inputs putting a hidden unit within 1e-3
 * of the ReLU kink are redrawn: the loss has no derivative there.
 */
inline double worst_gradient_error(int n_models, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double h = 1e-4;
    double worst = 0.0;

    for (int trial = 0; trial < n_models; ++trial) {
        auto model = PredictorModel::initialize(8, 6, 4, seed * 1000 + trial);
        for (Eigen::Index i = 0; i < model.b1.size(); ++i)
            model.b1[i] = 0.1 * normal(rng);
        for (Eigen::Index i = 0; i < model.b2.size(); ++i)
            model.b2[i] = 0.1 * normal(rng);

        std::vector<LabeledExample> batch;
        while (batch.size() < 3) {
            LabeledExample ex;
            ex.feature.resize(8);
            for (double& x : ex.feature)
                x = normal(rng);
            ex.region = static_cast<RegionId>(batch.size() % 4);
            const Eigen::Map<const Eigen::VectorXd> x(ex.feature.data(), 8);
            const Eigen::VectorXd z = model.w1 * x + model.b1;
            if ((z.array().abs() < 1e-3).any())
                continue;
            batch.push_back(std::move(ex));
        }

        const double gamma = 0.5 * (trial % 5);
        ModelGradients g;
        mean_focal_loss(model, batch, gamma, 1e-7, &g);

        for (int block = 0; block < 4; ++block) {
            for (Eigen::Index i = 0; i < block_size(model, block); ++i) {
                double& w = param(model, block, i);
                const double keep = w;
                w = keep + h;
                const double up = mean_focal_loss(model, batch, gamma, 1e-7);
                w = keep - h;
                const double down = mean_focal_loss(model, batch, gamma, 1e-7);
                w = keep;
                const double numeric = (up - down) / (2.0 * h);
                const double analytic = grad(g, block, i);
                const double denom = std::max({ std::abs(numeric), std::abs(analytic), 1e-6 });
                worst = std::max(worst, std::abs(numeric - analytic) / denom);
            }
        }
    }
    return worst;
}

/* Loss after 500 epochs (step 0.1) on a single example */
inline double overfit_one_sample()
{
    const std::vector<LabeledExample> one { { { 0.2, -0.5, 0.9, 0.1 }, 2 } };
    TrainConfig fit;
    fit.epochs = 500;
    fit.step_size = 0.1;
    fit.batch = 1;
    const auto fitted = train(PredictorModel::initialize(4, 16, 4, 5), one, fit);
    return mean_focal_loss(fitted.model, one, fit.gamma, fit.clamp_eps);
}

/*
 * Largest deviation from |p_t - o| = (1 - alpha)^t |p_0 - o| under a
 * constant observation o, over several alphas and 60 steps. Both sides
 * are computed in floating point, so the result is rounding only.
 */
inline double ema_contraction_error()
{
    double worst = 0.0;
    for (const double alpha : { 0.1, 0.25, 0.5, 0.9 }) {
        EmaState e(alpha, 3);
        const std::vector<double> p0 { 0.0, 1.0, 0.37 };
        const std::vector<double> o { 0.8, 0.2, 0.37 };
        e.update(p0);
        for (int t = 1; t <= 60; ++t) {
            const auto& p = e.update(o);
            for (std::size_t i = 0; i < 3; ++i) {
                const double expect = std::pow(1.0 - alpha, t) * std::abs(p0[i] - o[i]);
                worst = std::max(worst, std::abs(std::abs(p[i] - o[i]) - expect));
            }
        }
    }
    return worst;
}

} // namespace predictor_checks
