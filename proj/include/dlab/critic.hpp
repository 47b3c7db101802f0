#pragma once

#include "dlab/rng.hpp"
#include "dlab/sim.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dlab {

// Value-function input: position, velocity, mass, time to go.
constexpr int kCriticInputDim = 8;

inline Eigen::VectorXd critic_input(const LanderState& x, double t_go) {
    Eigen::VectorXd v(kCriticInputDim);
    v << x.r.x(), x.r.y(), x.r.z(), x.v.x(), x.v.y(), x.v.z(), x.m, t_go;
    return v;
}

// Per-dimension affine map onto [-1, 1]; degenerate dimensions map to 0.
struct InputScaler {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        Eigen::VectorXd z(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double span = hi(i) - lo(i);
            z(i) = span > 1e-12 ? 2.0 * (x(i) - lo(i)) / span - 1.0 : 0.0;
        }
        return z;
    }
};

inline InputScaler scaler_from_data(const Eigen::MatrixXd& X) {
    InputScaler s;
    s.lo = X.colwise().minCoeff();
    s.hi = X.colwise().maxCoeff();
    return s;
}

// Extreme-learning-machine value model: one hidden sigmoid layer with frozen
// random weights, linear output layer fitted in closed form.
struct ValueModel {
    Eigen::MatrixXd W;     // hidden x input
    Eigen::VectorXd b;     // hidden bias
    Eigen::VectorXd beta;  // output weights
    InputScaler scaler;

    Eigen::VectorXd hidden(const Eigen::VectorXd& x_raw) const {
        const Eigen::VectorXd a = W * scaler.apply(x_raw) + b;
        return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    }

    double value(const Eigen::VectorXd& x_raw) const { return beta.dot(hidden(x_raw)); }

    double value(const LanderState& x, double t_go) const {
        return value(critic_input(x, t_go));
    }
};

struct ValueFitConfig {
    double test_fraction = 0.2;
    int hidden_count = 0;       // 0 -> max(10, N/10)
    double svd_cutoff = 1e-10;  // relative to the largest singular value
    // Optional fixed scaling envelope (rows of lo/hi); empty -> from the data.
    Eigen::VectorXd scale_lo;
    Eigen::VectorXd scale_hi;
};

struct ValueFitReport {
    int hidden_count = 0;
    int n_train = 0;
    int n_test = 0;
    double rmse_train = 0.0;
    double rmse_test = 0.0;
    double nrmse_train = 0.0;  // rmse / range of all targets
    double nrmse_test = 0.0;
    int rank = 0;
};

inline int elm_default_hidden(int n_samples) {
    return std::max(10, static_cast<int>(std::lround(n_samples / 10.0)));
}

namespace detail {
inline double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
    if (pred.size() == 0) return 0.0;
    return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}
}  // namespace detail

// Fits the output layer by minimum-norm least squares on a random train/test
// split. The hidden layer (W, b ~ U(-1,1)) and the split permutation are both
// drawn from `rng`, so a fixed stream reproduces the model exactly.
inline ValueModel fit_value_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const ValueFitConfig& cfg, RandomStream& rng,
                                  ValueFitReport* report = nullptr) {
    const int N = static_cast<int>(X.rows());
    if (N < 2) throw std::invalid_argument("fit_value_model: need at least 2 samples");
    if (y.size() != N) throw std::invalid_argument("fit_value_model: X/y size mismatch");
    const int dim = static_cast<int>(X.cols());
    const int L = cfg.hidden_count > 0 ? cfg.hidden_count : elm_default_hidden(N);

    ValueModel m;
    if (cfg.scale_lo.size() == dim && cfg.scale_hi.size() == dim) {
        m.scaler.lo = cfg.scale_lo;
        m.scaler.hi = cfg.scale_hi;
    } else {
        m.scaler = scaler_from_data(X);
    }
    m.W.resize(L, dim);
    m.b.resize(L);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < dim; ++j) m.W(i, j) = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < L; ++i) m.b(i) = rng.uniform(-1.0, 1.0);

    // Fisher-Yates permutation, then test set = leading n_test entries.
    std::vector<int> idx(N);
    for (int i = 0; i < N; ++i) idx[i] = i;
    for (int i = N - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<uint64_t>(i) + 1));
        std::swap(idx[i], idx[j]);
    }
    int n_test = static_cast<int>(std::lround(cfg.test_fraction * N));
    n_test = std::max(1, std::min(n_test, N - 1));
    const int n_train = N - n_test;

    Eigen::MatrixXd Z(N, dim);
    for (int i = 0; i < N; ++i) Z.row(i) = m.scaler.apply(X.row(i).transpose()).transpose();
    Eigen::MatrixXd H = ((Z * m.W.transpose()).rowwise() + m.b.transpose())
                            .unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });

    Eigen::MatrixXd H_train(n_train, L);
    Eigen::VectorXd y_train(n_train);
    Eigen::MatrixXd H_test(n_test, L);
    Eigen::VectorXd y_test(n_test);
    for (int i = 0; i < n_test; ++i) {
        H_test.row(i) = H.row(idx[i]);
        y_test(i) = y(idx[i]);
    }
    for (int i = 0; i < n_train; ++i) {
        H_train.row(i) = H.row(idx[n_test + i]);
        y_train(i) = y(idx[n_test + i]);
    }

    // Jacobi rather than divide-and-conquer: random sigmoid layers are often
    // severely ill-conditioned and the extra accuracy matters more than speed
    // at the layer widths used here.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H_train, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(cfg.svd_cutoff);
    m.beta = svd.solve(y_train);

    if (report) {
        report->hidden_count = L;
        report->n_train = n_train;
        report->n_test = n_test;
        report->rank = static_cast<int>(svd.rank());
        report->rmse_train = detail::rmse(H_train * m.beta, y_train);
        report->rmse_test = detail::rmse(H_test * m.beta, y_test);
        const double range = y.maxCoeff() - y.minCoeff();
        const double denom = range > 1e-12 ? range : 1.0;
        report->nrmse_train = report->rmse_train / denom;
        report->nrmse_test = report->rmse_test / denom;
    }
    return m;
}

// Discounted cost-to-go targets from one episode's per-step costs:
// y_t = sum_{t' >= t} gamma^{t'-t} c_{t'}, computed by a backward pass.
inline std::vector<double> discounted_returns(const std::vector<double>& costs, double gamma) {
    std::vector<double> y(costs.size());
    double acc = 0.0;
    for (size_t i = costs.size(); i-- > 0;) {
        acc = costs[i] + gamma * acc;
        y[i] = acc;
    }
    return y;
}

// One-step bootstrapped targets y_t = c_t + gamma * v_next_t. The caller sets
// v_next for terminal transitions to zero.
inline std::vector<double> td_targets(const std::vector<double>& costs,
                                      const std::vector<double>& v_next, double gamma) {
    if (costs.size() != v_next.size())
        throw std::invalid_argument("td_targets: size mismatch");
    std::vector<double> y(costs.size());
    for (size_t i = 0; i < costs.size(); ++i) y[i] = costs[i] + gamma * v_next[i];
    return y;
}

// Advantage estimates: empirical return minus the baseline prediction.
inline std::vector<double> advantages(const std::vector<double>& returns,
                                      const std::vector<double>& values) {
    if (returns.size() != values.size())
        throw std::invalid_argument("advantages: size mismatch");
    std::vector<double> a(returns.size());
    for (size_t i = 0; i < returns.size(); ++i) a[i] = returns[i] - values[i];
    return a;
}

}  // namespace dlab
