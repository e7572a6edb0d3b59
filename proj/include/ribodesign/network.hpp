#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ribodesign/env.hpp"
#include "ribodesign/random.hpp"

namespace ribodesign {

/// Architecture of the design policy. A conv filter size of 0 disables that
/// layer; embedding_dim 0 feeds one-hot tokens forward.
struct NetworkSpec {
    int embedding_dim = 17;
    int conv1_filter_size = 0;
    int conv1_filters = 17;
    int conv2_filter_size = 0;
    int conv2_filters = 24;
    int lstm_layers = 0;
    int lstm_units = 20;
    int fc_layers = 2;
    int fc_units = 12;

    void validate() const;
    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);

using ActionVector = std::array<double, kActionCount>;

struct PolicyOutput {
    ActionVector logits{};
    ActionVector probs{};
    double value = 0.0;
};

/// Activations retained by a forward pass for backpropagation.
struct ForwardCache {
    std::vector<int> tokens;
    std::vector<Eigen::MatrixXd> sequence_activations;  // per stage, columns are positions
    std::vector<Eigen::MatrixXd> lstm_gates;             // per LSTM layer: 4U x T (post-activation)
    std::vector<Eigen::MatrixXd> lstm_cells;             // per LSTM layer: U x T
    std::vector<Eigen::VectorXd> dense_activations;      // trunk input then each FC output
    PolicyOutput output;
};

/// Embedding -> [conv] -> [conv] -> [LSTM stack | flatten] -> FC stack, with
/// a 4-way policy head and a scalar value head on the shared trunk. All
/// weights live in one flat parameter vector.
class PolicyNetwork {
public:
    PolicyNetwork(NetworkSpec spec, int window_size, Rng& rng);
    PolicyNetwork(NetworkSpec spec, int window_size, std::vector<double> parameters);

    const NetworkSpec& spec() const noexcept { return spec_; }
    int window_size() const noexcept { return window_size_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    /// Errors: ShapeMismatch when the window length differs from the configured size.
    PolicyOutput forward(const StateWindow& window) const;
    PolicyOutput forward(const StateWindow& window, ForwardCache& cache) const;

    /// Accumulates dLoss/dparams into `grad` given dLoss/dlogits and dLoss/dvalue.
    void backward(const ForwardCache& cache, const ActionVector& dlogits, double dvalue, std::span<double> grad) const;

    /// Zeroes the policy-head weights and bias (uniform output distribution).
    void zero_policy_head();

private:
    struct DenseLayer {
        std::size_t weight = 0;
        std::size_t bias = 0;
        int in = 0;
        int out = 0;
    };
    struct ConvLayer {
        std::size_t weight = 0;  // out x (in * width), block k holds tap k
        std::size_t bias = 0;
        int in = 0;
        int out = 0;
        int width = 0;
    };
    struct LstmLayer {
        std::size_t input_weight = 0;      // 4U x in
        std::size_t recurrent_weight = 0;  // 4U x U
        std::size_t bias = 0;              // 4U
        int in = 0;
        int units = 0;
    };

    void build_layout();
    void initialise(Rng& rng);

    Eigen::Map<Eigen::MatrixXd> matrix(std::span<double> storage, std::size_t offset, int rows, int cols) const;
    Eigen::Map<const Eigen::MatrixXd> matrix(std::size_t offset, int rows, int cols) const;

    NetworkSpec spec_;
    int window_size_ = 0;
    int token_dim_ = 0;
    std::size_t embedding_ = 0;
    std::vector<ConvLayer> convs_;
    std::vector<LstmLayer> lstms_;
    std::vector<DenseLayer> fcs_;
    DenseLayer policy_head_;
    DenseLayer value_head_;
    std::size_t total_ = 0;
    std::vector<double> params_;
};

/// Softmax with max-subtraction.
ActionVector softmax(const ActionVector& logits);
double entropy(const ActionVector& probs);

/// Max relative error between the analytic gradient of log pi(action|window)
/// and central finite differences with step `h`.
double policy_gradient_check(PolicyNetwork& net, const StateWindow& window, int action, double h = 1e-5);

}  // namespace ribodesign
