#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "region_learner/map_graph.hpp"

namespace region_learner {

/*
 * One-hidden-layer perceptron mapping a feature vector to independent
 * per-region confidences: sigmoid(W2 * relu(W1 * x + b1) + b2).
 * Outputs are not normalized across regions, so several regions can be
 * predicted with high confidence at once.
 */
struct PredictorModel
{
    Eigen::MatrixXd w1;   /* hidden x d_in */
    Eigen::VectorXd b1;   /* hidden */
    Eigen::MatrixXd w2;   /* n_regions x hidden */
    Eigen::VectorXd b2;   /* n_regions */
    std::uint64_t seed = 0;

    static PredictorModel zeros(std::size_t d_in, std::size_t hidden,
                                std::size_t n_regions);
    /* Uniform He (hidden) / Glorot (output) initialization from seed */
    static PredictorModel initialize(std::size_t d_in, std::size_t hidden,
                                     std::size_t n_regions, std::uint64_t seed);

    std::size_t d_in() const { return static_cast<std::size_t>(w1.cols()); }
    std::size_t hidden() const { return static_cast<std::size_t>(w1.rows()); }
    std::size_t n_regions() const { return static_cast<std::size_t>(w2.rows()); }
    bool finite() const;

    bool operator==(const PredictorModel& other) const;
};

struct TrainConfig
{
    double gamma = 2.0;
    double step_size = 0.1;
    std::size_t epochs = 50;
    std::size_t batch = 32;
    std::uint64_t seed = 0;
    double clamp_eps = 1e-7;

    void validate() const;
};

struct LabeledExample
{
    std::vector<double> feature;
    RegionId region = 0;
};

double sigmoid(double z);

/* Per-region confidences in (0, 1) */
std::vector<double> forward(const PredictorModel& model,
                            std::span<const double> feature);

/* Binary focal loss summed over regions against a one-hot target */
double focal_loss(std::span<const double> confidences, RegionId target,
                  double gamma, double clamp_eps = 1e-7);

struct ModelGradients
{
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
};

/* Mean focal loss over a set of examples and its analytic gradient */
double mean_focal_loss(const PredictorModel& model,
                       std::span<const LabeledExample> examples,
                       double gamma, double clamp_eps,
                       ModelGradients* gradients = nullptr);

struct TrainResult
{
    PredictorModel model;
    std::vector<double> loss_history;   /* mean loss per epoch */
};

/* Mini-batch gradient descent; initialization and shuffling are derived
 * from seeds only, so runs are reproducible */
TrainResult train(PredictorModel model, std::span<const LabeledExample> dataset,
                  const TrainConfig& config);

/* Per-region exponential moving average of predicted confidences */
class EmaState
{
public:
    explicit EmaState(double alpha, std::size_t n_regions = 0);

    /* p_t = alpha * o_t + (1 - alpha) * p_{t-1}; a region's first
     * observation is copied as is */
    const std::vector<double>& update(std::span<const double> observation);

    /* Appends uninitialized regions; never shrinks */
    void grow(std::size_t n_regions);

    double alpha() const { return alpha_; }
    std::size_t size() const { return p_.size(); }
    const std::vector<double>& probabilities() const { return p_; }
    bool initialized(std::size_t region) const { return initialized_.at(region); }

private:
    double alpha_;
    std::vector<double> p_;
    std::vector<bool> initialized_;
};

/* Region ids of the min(k, R) largest entries, descending; ties go to the
 * lower id */
std::vector<RegionId> top_k(std::span<const double> p, std::size_t k);

/* Binary model file: "RGNP", u16 version, u32 d_in/hidden/n_regions, then
 * W1, b1, W2, b2 as row-major little-endian float32 */
void save_model(std::ostream& os, const PredictorModel& model);
PredictorModel load_model(std::istream& is);

} // namespace region_learner
