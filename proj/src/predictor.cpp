#include "region_learner/predictor.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "region_learner/error.hpp"

namespace region_learner {

namespace {

constexpr std::array<char, 4> kModelMagic { 'R', 'G', 'N', 'P' };
constexpr std::uint16_t kModelVersion = 1;

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v)
{
    return { v.data(), static_cast<Eigen::Index>(v.size()) };
}

void fill_uniform(Eigen::MatrixXd& m, double bound, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            m(r, c) = dist(rng);
}

/* Gradient of the focal loss term of one region w.r.t. its logit, for a
 * (clamped) confidence; clamped confidences have zero gradient */
double focal_term(double sigma, bool positive, double gamma, double eps,
                  double* dlogit)
{
    const bool clamped = sigma < eps || sigma > 1.0 - eps;
    const double p = std::clamp(sigma, eps, 1.0 - eps);

    double loss = 0.0;
    double grad = 0.0;
    if (positive) {
        const double q = 1.0 - p;
        loss = -std::pow(q, gamma) * std::log(p);
        grad = gamma * p * std::pow(q, gamma) * std::log(p) - std::pow(q, gamma + 1.0);
    } else {
        const double q = 1.0 - p;
        loss = -std::pow(p, gamma) * std::log(q);
        grad = -gamma * std::pow(p, gamma) * q * std::log(q) + std::pow(p, gamma + 1.0);
    }
    if (dlogit)
        *dlogit = clamped ? 0.0 : grad;
    return loss;
}

template <typename T>
void put_le(std::ostream& os, T value)
{
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i)
        os.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu));
}

template <typename T>
T get_le(std::istream& is)
{
    static_assert(std::is_integral_v<T>);
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const int c = is.get();
        if (c == std::char_traits<char>::eof())
            throw DataError("model file truncated");
        value |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return static_cast<T>(value);
}

void put_f32(std::ostream& os, double value)
{
    put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

double get_f32(std::istream& is)
{
    return static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(is)));
}

void put_matrix(std::ostream& os, const Eigen::MatrixXd& m)
{
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            put_f32(os, m(r, c));
}

void get_matrix(std::istream& is, Eigen::MatrixXd& m)
{
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            m(r, c) = get_f32(is);
}

} // namespace

PredictorModel PredictorModel::zeros(std::size_t d_in, std::size_t hidden,
                                     std::size_t n_regions)
{
    if (d_in == 0 || hidden == 0 || n_regions == 0)
        throw ConfigError("predictor dimensions must be positive");

    const auto d = static_cast<Eigen::Index>(d_in);
    const auto h = static_cast<Eigen::Index>(hidden);
    const auto r = static_cast<Eigen::Index>(n_regions);

    PredictorModel m;
    m.w1 = Eigen::MatrixXd::Zero(h, d);
    m.b1 = Eigen::VectorXd::Zero(h);
    m.w2 = Eigen::MatrixXd::Zero(r, h);
    m.b2 = Eigen::VectorXd::Zero(r);
    return m;
}

PredictorModel PredictorModel::initialize(std::size_t d_in, std::size_t hidden,
                                          std::size_t n_regions,
                                          std::uint64_t seed)
{
    PredictorModel m = zeros(d_in, hidden, n_regions);
    m.seed = seed;

    std::mt19937_64 rng(seed);
    fill_uniform(m.w1, std::sqrt(6.0 / static_cast<double>(d_in)), rng);
    fill_uniform(m.w2, std::sqrt(6.0 / static_cast<double>(hidden + n_regions)), rng);
    return m;
}

bool PredictorModel::finite() const
{
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

bool PredictorModel::operator==(const PredictorModel& other) const
{
    return w1.rows() == other.w1.rows() && w1.cols() == other.w1.cols() &&
           w2.rows() == other.w2.rows() && w1 == other.w1 && b1 == other.b1 &&
           w2 == other.w2 && b2 == other.b2;
}

void TrainConfig::validate() const
{
    if (!(gamma >= 0.0))
        throw ConfigError("train: gamma must be >= 0");
    if (!(step_size > 0.0))
        throw ConfigError("train: step_size must be > 0");
    if (batch == 0)
        throw ConfigError("train: batch must be positive");
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5))
        throw ConfigError("train: clamp_eps must be in (0, 0.5)");
}

double sigmoid(double z)
{
    if (z >= 0.0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<double> forward(const PredictorModel& model,
                            std::span<const double> feature)
{
    if (feature.size() != model.d_in())
        throw DataError("predictor input dimension mismatch: expected " +
                        std::to_string(model.d_in()) + ", got " +
                        std::to_string(feature.size()));

    const Eigen::VectorXd hidden =
        (model.w1 * as_vector(feature) + model.b1).cwiseMax(0.0);
    const Eigen::VectorXd logits = model.w2 * hidden + model.b2;

    std::vector<double> out(static_cast<std::size_t>(logits.size()));
    for (Eigen::Index i = 0; i < logits.size(); ++i)
        out[static_cast<std::size_t>(i)] = sigmoid(logits(i));
    return out;
}

double focal_loss(std::span<const double> confidences, RegionId target,
                  double gamma, double clamp_eps)
{
    if (target >= confidences.size())
        throw DataError("focal loss target out of range");

    double loss = 0.0;
    for (std::size_t i = 0; i < confidences.size(); ++i)
        loss += focal_term(confidences[i], i == target, gamma, clamp_eps, nullptr);
    return loss;
}

double mean_focal_loss(const PredictorModel& model,
                       std::span<const LabeledExample> examples,
                       double gamma, double clamp_eps,
                       ModelGradients* gradients)
{
    if (examples.empty())
        throw DataError("empty example set");

    if (gradients) {
        gradients->w1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
        gradients->b1 = Eigen::VectorXd::Zero(model.b1.size());
        gradients->w2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols());
        gradients->b2 = Eigen::VectorXd::Zero(model.b2.size());
    }

    const std::size_t n_regions = model.n_regions();
    Eigen::VectorXd dlogits(static_cast<Eigen::Index>(n_regions));
    double total = 0.0;

    for (const LabeledExample& ex : examples) {
        if (ex.feature.size() != model.d_in())
            throw DataError("example feature dimension mismatch");
        if (ex.region >= n_regions)
            throw DataError("example label " + std::to_string(ex.region) +
                            " out of range");

        const auto x = as_vector(ex.feature);
        const Eigen::VectorXd pre = model.w1 * x + model.b1;
        const Eigen::VectorXd hidden = pre.cwiseMax(0.0);
        const Eigen::VectorXd logits = model.w2 * hidden + model.b2;

        for (std::size_t i = 0; i < n_regions; ++i) {
            const auto idx = static_cast<Eigen::Index>(i);
            total += focal_term(sigmoid(logits(idx)), i == ex.region, gamma,
                                clamp_eps, &dlogits(idx));
        }

        if (gradients) {
            gradients->w2.noalias() += dlogits * hidden.transpose();
            gradients->b2 += dlogits;
            const Eigen::VectorXd dhidden =
                (model.w2.transpose() * dlogits).cwiseProduct(
                    (pre.array() > 0.0).cast<double>().matrix());
            gradients->w1.noalias() += dhidden * x.transpose();
            gradients->b1 += dhidden;
        }
    }

    const double inv = 1.0 / static_cast<double>(examples.size());
    if (gradients) {
        gradients->w1 *= inv;
        gradients->b1 *= inv;
        gradients->w2 *= inv;
        gradients->b2 *= inv;
    }
    return total * inv;
}

TrainResult train(PredictorModel model, std::span<const LabeledExample> dataset,
                  const TrainConfig& config)
{
    config.validate();
    if (dataset.empty())
        throw DataError("training dataset is empty");
    for (const auto& ex : dataset) {
        if (ex.region >= model.n_regions())
            throw DataError("training label " + std::to_string(ex.region) +
                            " out of range for " +
                            std::to_string(model.n_regions()) + " regions");
        if (ex.feature.size() != model.d_in())
            throw DataError("training feature dimension mismatch");
    }

    TrainResult result;
    result.loss_history.reserve(config.epochs);

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<LabeledExample> batch;
    ModelGradients grads;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch) {
            const std::size_t end = std::min(order.size(), start + config.batch);
            batch.clear();
            for (std::size_t i = start; i < end; ++i)
                batch.push_back(dataset[order[i]]);

            const double loss = mean_focal_loss(model, batch, config.gamma,
                                                config.clamp_eps, &grads);
            epoch_loss += loss * static_cast<double>(batch.size());

            model.w1 -= config.step_size * grads.w1;
            model.b1 -= config.step_size * grads.b1;
            model.w2 -= config.step_size * grads.w2;
            model.b2 -= config.step_size * grads.b2;
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    }

    if (!model.finite())
        throw InvariantError("training diverged to non-finite parameters");
    result.model = std::move(model);
    return result;
}

EmaState::EmaState(double alpha, std::size_t n_regions) : alpha_(alpha)
{
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("ema alpha must be in (0, 1]");
    grow(n_regions);
}

void EmaState::grow(std::size_t n_regions)
{
    if (n_regions > p_.size()) {
        p_.resize(n_regions, 0.0);
        initialized_.resize(n_regions, false);
    }
}

const std::vector<double>& EmaState::update(std::span<const double> observation)
{
    if (observation.size() != p_.size())
        throw DataError("ema observation length " + std::to_string(observation.size()) +
                        " does not match " + std::to_string(p_.size()) + " regions");

    for (std::size_t i = 0; i < p_.size(); ++i) {
        const double o = observation[i];
        if (!(o >= 0.0 && o <= 1.0))
            throw DataError("ema observation outside [0, 1]");
        if (!initialized_[i]) {
            p_[i] = o;
            initialized_[i] = true;
        } else {
            p_[i] = std::clamp(alpha_ * o + (1.0 - alpha_) * p_[i], 0.0, 1.0);
        }
    }
    return p_;
}

std::vector<RegionId> top_k(std::span<const double> p, std::size_t k)
{
    std::vector<RegionId> ids(p.size());
    std::iota(ids.begin(), ids.end(), RegionId { 0 });

    const std::size_t n = std::min(k, p.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n),
                      ids.end(), [&](RegionId a, RegionId b) {
                          if (p[a] != p[b])
                              return p[a] > p[b];
                          return a < b;
                      });
    ids.resize(n);
    return ids;
}

void save_model(std::ostream& os, const PredictorModel& model)
{
    os.write(kModelMagic.data(), kModelMagic.size());
    put_le<std::uint16_t>(os, kModelVersion);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.d_in()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.hidden()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.n_regions()));
    put_matrix(os, model.w1);
    put_matrix(os, model.b1);
    put_matrix(os, model.w2);
    put_matrix(os, model.b2);
    if (!os)
        throw DataError("failed to write model file");
}

PredictorModel load_model(std::istream& is)
{
    std::array<char, 4> magic {};
    if (!is.read(magic.data(), magic.size()) || magic != kModelMagic)
        throw DataError("model file: bad magic");
    const auto version = get_le<std::uint16_t>(is);
    if (version != kModelVersion)
        throw DataError("model file: unsupported version " + std::to_string(version));

    const auto d_in = get_le<std::uint32_t>(is);
    const auto hidden = get_le<std::uint32_t>(is);
    const auto n_regions = get_le<std::uint32_t>(is);
    PredictorModel m = PredictorModel::zeros(d_in, hidden, n_regions);

    Eigen::MatrixXd b1(m.b1.size(), 1);
    Eigen::MatrixXd b2(m.b2.size(), 1);
    get_matrix(is, m.w1);
    get_matrix(is, b1);
    get_matrix(is, m.w2);
    get_matrix(is, b2);
    m.b1 = b1.col(0);
    m.b2 = b2.col(0);
    if (!m.finite())
        throw DataError("model file: non-finite parameters");
    return m;
}

} // namespace region_learner
