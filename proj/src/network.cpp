#include "ribodesign/network.hpp"

#include <algorithm>
#include <cmath>

#include "ribodesign/error.hpp"

namespace ribodesign {

void NetworkSpec::validate() const {
    auto in_range = [](int v, int lo, int hi) { return v >= lo && v <= hi; };
    const bool conv1_ok = conv1_filter_size == 0 || (in_range(conv1_filter_size, 3, 17) && conv1_filter_size % 2 == 1);
    const bool conv2_ok = conv2_filter_size == 0 || (in_range(conv2_filter_size, 3, 9) && conv2_filter_size % 2 == 1);
    const bool ok = in_range(embedding_dim, 0, 21) && conv1_ok && conv2_ok && in_range(conv1_filters, 1, 32) &&
                    in_range(conv2_filters, 1, 32) && in_range(lstm_layers, 0, 3) && in_range(lstm_units, 1, 64) &&
                    in_range(fc_layers, 1, 2) && in_range(fc_units, 8, 64);
    if (!ok) throw Error(ErrorCode::InvalidConfig, "network spec outside the configuration space");
}

nlohmann::json to_json(const NetworkSpec& s) {
    return {{"embedding_dim", s.embedding_dim},   {"conv1_filter_size", s.conv1_filter_size},
            {"conv1_filters", s.conv1_filters},   {"conv2_filter_size", s.conv2_filter_size},
            {"conv2_filters", s.conv2_filters},   {"lstm_layers", s.lstm_layers},
            {"lstm_units", s.lstm_units},         {"fc_layers", s.fc_layers},
            {"fc_units", s.fc_units}};
}

NetworkSpec network_spec_from_json(const nlohmann::json& j) {
    NetworkSpec s;
    s.embedding_dim = j.at("embedding_dim").get<int>();
    s.conv1_filter_size = j.at("conv1_filter_size").get<int>();
    s.conv1_filters = j.at("conv1_filters").get<int>();
    s.conv2_filter_size = j.at("conv2_filter_size").get<int>();
    s.conv2_filters = j.at("conv2_filters").get<int>();
    s.lstm_layers = j.at("lstm_layers").get<int>();
    s.lstm_units = j.at("lstm_units").get<int>();
    s.fc_layers = j.at("fc_layers").get<int>();
    s.fc_units = j.at("fc_units").get<int>();
    return s;
}

ActionVector softmax(const ActionVector& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    ActionVector p{};
    double z = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] = std::exp(logits[k] - m);
        z += p[k];
    }
    for (double& v : p) v /= z;
    return p;
}

double entropy(const ActionVector& probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

PolicyNetwork::PolicyNetwork(NetworkSpec spec, int window_size, Rng& rng) : spec_(spec), window_size_(window_size) {
    spec_.validate();
    if (window_size_ < 1) throw Error(ErrorCode::ShapeMismatch, "window size must be positive");
    build_layout();
    params_.assign(total_, 0.0);
    initialise(rng);
}

PolicyNetwork::PolicyNetwork(NetworkSpec spec, int window_size, std::vector<double> parameters)
    : spec_(spec), window_size_(window_size) {
    spec_.validate();
    if (window_size_ < 1) throw Error(ErrorCode::ShapeMismatch, "window size must be positive");
    build_layout();
    if (parameters.size() != total_) {
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(total_) + " parameters, got " +
                                                  std::to_string(parameters.size()));
    }
    params_ = std::move(parameters);
}

void PolicyNetwork::build_layout() {
    std::size_t offset = 0;
    auto take = [&](std::size_t n) {
        const std::size_t at = offset;
        offset += n;
        return at;
    };
    token_dim_ = spec_.embedding_dim > 0 ? spec_.embedding_dim : kVocabularySize;
    if (spec_.embedding_dim > 0) embedding_ = take(static_cast<std::size_t>(spec_.embedding_dim * kVocabularySize));

    int channels = token_dim_;
    for (auto [width, filters] : {std::pair{spec_.conv1_filter_size, spec_.conv1_filters},
                                  std::pair{spec_.conv2_filter_size, spec_.conv2_filters}}) {
        if (width == 0) continue;
        ConvLayer c;
        c.in = channels;
        c.out = filters;
        c.width = width;
        c.weight = take(static_cast<std::size_t>(c.out * c.in * c.width));
        c.bias = take(static_cast<std::size_t>(c.out));
        convs_.push_back(c);
        channels = filters;
    }

    int trunk = channels * window_size_;
    if (spec_.lstm_layers > 0) {
        int in = channels;
        for (int l = 0; l < spec_.lstm_layers; ++l) {
            LstmLayer L;
            L.in = in;
            L.units = spec_.lstm_units;
            L.input_weight = take(static_cast<std::size_t>(4 * L.units * L.in));
            L.recurrent_weight = take(static_cast<std::size_t>(4 * L.units * L.units));
            L.bias = take(static_cast<std::size_t>(4 * L.units));
            lstms_.push_back(L);
            in = L.units;
        }
        trunk = spec_.lstm_units;
    }

    int in = trunk;
    for (int l = 0; l < spec_.fc_layers; ++l) {
        DenseLayer d;
        d.in = in;
        d.out = spec_.fc_units;
        d.weight = take(static_cast<std::size_t>(d.in * d.out));
        d.bias = take(static_cast<std::size_t>(d.out));
        fcs_.push_back(d);
        in = d.out;
    }
    policy_head_ = {take(static_cast<std::size_t>(kActionCount * in)), 0, in, kActionCount};
    policy_head_.bias = take(kActionCount);
    value_head_ = {take(static_cast<std::size_t>(in)), 0, in, 1};
    value_head_.bias = take(1);
    total_ = offset;
}

void PolicyNetwork::initialise(Rng& rng) {
    auto fill = [&](std::size_t offset, std::size_t count, double scale) {
        std::uniform_real_distribution<double> u(-scale, scale);
        for (std::size_t k = 0; k < count; ++k) params_[offset + k] = u(rng);
    };
    auto fan_in_scale = [](int fan_in) { return 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1))); };

    if (spec_.embedding_dim > 0) fill(embedding_, static_cast<std::size_t>(spec_.embedding_dim * kVocabularySize), 0.5);
    for (const auto& c : convs_) fill(c.weight, static_cast<std::size_t>(c.out * c.in * c.width), fan_in_scale(c.in * c.width));
    for (const auto& L : lstms_) {
        const double s = fan_in_scale(L.in + L.units);
        fill(L.input_weight, static_cast<std::size_t>(4 * L.units * L.in), s);
        fill(L.recurrent_weight, static_cast<std::size_t>(4 * L.units * L.units), s);
        // Forget-gate bias starts at one.
        for (int u = 0; u < L.units; ++u) params_[L.bias + static_cast<std::size_t>(L.units + u)] = 1.0;
    }
    for (const auto& d : fcs_) fill(d.weight, static_cast<std::size_t>(d.in * d.out), fan_in_scale(d.in));
    fill(policy_head_.weight, static_cast<std::size_t>(policy_head_.in * kActionCount), 0.1 * fan_in_scale(policy_head_.in));
    fill(value_head_.weight, static_cast<std::size_t>(value_head_.in), fan_in_scale(value_head_.in));
}

void PolicyNetwork::zero_policy_head() {
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(policy_head_.weight), policy_head_.in * kActionCount, 0.0);
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(policy_head_.bias), kActionCount, 0.0);
}

Eigen::Map<Eigen::MatrixXd> PolicyNetwork::matrix(std::span<double> storage, std::size_t offset, int rows,
                                                  int cols) const {
    return Eigen::Map<Eigen::MatrixXd>(storage.data() + offset, rows, cols);
}

Eigen::Map<const Eigen::MatrixXd> PolicyNetwork::matrix(std::size_t offset, int rows, int cols) const {
    return Eigen::Map<const Eigen::MatrixXd>(params_.data() + offset, rows, cols);
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

PolicyOutput PolicyNetwork::forward(const StateWindow& window) const {
    ForwardCache cache;
    return forward(window, cache);
}

PolicyOutput PolicyNetwork::forward(const StateWindow& window, ForwardCache& cache) const {
    const int T = window_size_;
    if (static_cast<int>(window.tokens.size()) != T) {
        throw Error(ErrorCode::ShapeMismatch, "window has " + std::to_string(window.tokens.size()) +
                                                  " tokens, network expects " + std::to_string(T));
    }
    cache.tokens = window.tokens;
    cache.sequence_activations.clear();
    cache.lstm_gates.clear();
    cache.lstm_cells.clear();
    cache.dense_activations.clear();

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(token_dim_, T);
    for (int t = 0; t < T; ++t) {
        const int tok = window.tokens[static_cast<std::size_t>(t)];
        if (tok < 0 || tok >= kVocabularySize) throw Error(ErrorCode::ShapeMismatch, "token code out of range");
        if (spec_.embedding_dim > 0) {
            x.col(t) = matrix(embedding_, spec_.embedding_dim, kVocabularySize).col(tok);
        } else {
            x(tok, t) = 1.0;
        }
    }
    cache.sequence_activations.push_back(x);

    for (const auto& c : convs_) {
        const Eigen::MatrixXd& in = cache.sequence_activations.back();
        const auto W = matrix(c.weight, c.out, c.in * c.width);
        const auto b = matrix(c.bias, c.out, 1);
        const int pad = c.width / 2;
        Eigen::MatrixXd y(c.out, T);
        for (int t = 0; t < T; ++t) {
            Eigen::VectorXd acc = b;
            for (int k = 0; k < c.width; ++k) {
                const int src = t + k - pad;
                if (src < 0 || src >= T) continue;
                acc.noalias() += W.middleCols(k * c.in, c.in) * in.col(src);
            }
            y.col(t) = acc.array().tanh().matrix();
        }
        cache.sequence_activations.push_back(std::move(y));
    }

    Eigen::VectorXd trunk;
    if (!lstms_.empty()) {
        for (const auto& L : lstms_) {
            const Eigen::MatrixXd& in = cache.sequence_activations.back();
            const auto Wx = matrix(L.input_weight, 4 * L.units, L.in);
            const auto Wh = matrix(L.recurrent_weight, 4 * L.units, L.units);
            const auto b = matrix(L.bias, 4 * L.units, 1);
            const int U = L.units;
            Eigen::MatrixXd gates(4 * U, T);
            Eigen::MatrixXd cells(U, T);
            Eigen::MatrixXd hidden(U, T);
            Eigen::VectorXd h = Eigen::VectorXd::Zero(U);
            Eigen::VectorXd cell = Eigen::VectorXd::Zero(U);
            for (int t = 0; t < T; ++t) {
                Eigen::VectorXd z = b;
                z.noalias() += Wx * in.col(t);
                z.noalias() += Wh * h;
                for (int u = 0; u < U; ++u) {
                    z(u) = sigmoid(z(u));                  // input
                    z(U + u) = sigmoid(z(U + u));          // forget
                    z(2 * U + u) = std::tanh(z(2 * U + u));  // candidate
                    z(3 * U + u) = sigmoid(z(3 * U + u));  // output
                }
                cell = z.segment(U, U).cwiseProduct(cell) + z.segment(0, U).cwiseProduct(z.segment(2 * U, U));
                h = z.segment(3 * U, U).cwiseProduct(cell.array().tanh().matrix());
                gates.col(t) = z;
                cells.col(t) = cell;
                hidden.col(t) = h;
            }
            cache.lstm_gates.push_back(std::move(gates));
            cache.lstm_cells.push_back(std::move(cells));
            cache.sequence_activations.push_back(std::move(hidden));
        }
        trunk = cache.sequence_activations.back().col(T - 1);
    } else {
        const Eigen::MatrixXd& last = cache.sequence_activations.back();
        trunk = Eigen::Map<const Eigen::VectorXd>(last.data(), last.size());
    }
    cache.dense_activations.push_back(trunk);

    for (const auto& d : fcs_) {
        const auto W = matrix(d.weight, d.out, d.in);
        const auto b = matrix(d.bias, d.out, 1);
        Eigen::VectorXd z = b;
        z.noalias() += W * cache.dense_activations.back();
        cache.dense_activations.push_back(z.array().tanh().matrix());
    }

    const Eigen::VectorXd& h = cache.dense_activations.back();
    const auto Wp = matrix(policy_head_.weight, kActionCount, policy_head_.in);
    const auto bp = matrix(policy_head_.bias, kActionCount, 1);
    const Eigen::VectorXd logits = Wp * h + bp;
    const auto wv = matrix(value_head_.weight, 1, value_head_.in);

    PolicyOutput out;
    for (int k = 0; k < kActionCount; ++k) out.logits[static_cast<std::size_t>(k)] = logits(k);
    out.probs = softmax(out.logits);
    out.value = (wv * h)(0, 0) + params_[value_head_.bias];
    cache.output = out;
    return out;
}

void PolicyNetwork::backward(const ForwardCache& cache, const ActionVector& dlogits, double dvalue,
                             std::span<double> grad) const {
    if (grad.size() != total_) throw Error(ErrorCode::ShapeMismatch, "gradient buffer has wrong size");
    const int T = window_size_;

    // Heads.
    const Eigen::VectorXd& h_top = cache.dense_activations.back();
    Eigen::Map<const Eigen::VectorXd> dlog(dlogits.data(), kActionCount);
    matrix(grad, policy_head_.weight, kActionCount, policy_head_.in).noalias() += dlog * h_top.transpose();
    matrix(grad, policy_head_.bias, kActionCount, 1) += dlog;
    matrix(grad, value_head_.weight, 1, value_head_.in) += dvalue * h_top.transpose();
    grad[value_head_.bias] += dvalue;

    Eigen::VectorXd dh = matrix(policy_head_.weight, kActionCount, policy_head_.in).transpose() * dlog;
    dh += dvalue * matrix(value_head_.weight, 1, value_head_.in).transpose();

    for (std::size_t l = fcs_.size(); l-- > 0;) {
        const auto& d = fcs_[l];
        const Eigen::VectorXd& out = cache.dense_activations[l + 1];
        const Eigen::VectorXd& in = cache.dense_activations[l];
        const Eigen::VectorXd dz = dh.cwiseProduct((1.0 - out.array().square()).matrix());
        matrix(grad, d.weight, d.out, d.in).noalias() += dz * in.transpose();
        matrix(grad, d.bias, d.out, 1) += dz;
        dh = matrix(d.weight, d.out, d.in).transpose() * dz;
    }

    // dh is now the gradient w.r.t. the trunk input.
    const std::size_t conv_count = convs_.size();
    Eigen::MatrixXd dseq;
    if (!lstms_.empty()) {
        dseq = Eigen::MatrixXd::Zero(lstms_.back().units, T);
        dseq.col(T - 1) = dh;
        for (std::size_t l = lstms_.size(); l-- > 0;) {
            const auto& L = lstms_[l];
            const int U = L.units;
            const Eigen::MatrixXd& in = cache.sequence_activations[conv_count + l];
            const Eigen::MatrixXd& hidden = cache.sequence_activations[conv_count + l + 1];
            const Eigen::MatrixXd& gates = cache.lstm_gates[l];
            const Eigen::MatrixXd& cells = cache.lstm_cells[l];
            const auto Wx = matrix(L.input_weight, 4 * U, L.in);
            const auto Wh = matrix(L.recurrent_weight, 4 * U, U);
            auto dWx = matrix(grad, L.input_weight, 4 * U, L.in);
            auto dWh = matrix(grad, L.recurrent_weight, 4 * U, U);
            auto db = matrix(grad, L.bias, 4 * U, 1);

            Eigen::MatrixXd dinput = Eigen::MatrixXd::Zero(L.in, T);
            Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(U);
            Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(U);
            for (int t = T - 1; t >= 0; --t) {
                const Eigen::VectorXd dht = dseq.col(t) + dh_next;
                const auto i = gates.col(t).segment(0, U).array();
                const auto f = gates.col(t).segment(U, U).array();
                const auto g = gates.col(t).segment(2 * U, U).array();
                const auto o = gates.col(t).segment(3 * U, U).array();
                const Eigen::ArrayXd tc = cells.col(t).array().tanh();
                const Eigen::ArrayXd c_prev = t > 0 ? Eigen::ArrayXd(cells.col(t - 1).array()) : Eigen::ArrayXd::Zero(U);
                const Eigen::VectorXd h_prev = t > 0 ? Eigen::VectorXd(hidden.col(t - 1)) : Eigen::VectorXd::Zero(U);

                const Eigen::ArrayXd dc = dht.array() * o * (1.0 - tc.square()) + dc_next.array();
                Eigen::VectorXd dz(4 * U);
                dz.segment(0, U) = (dc * g * i * (1.0 - i)).matrix();
                dz.segment(U, U) = (dc * c_prev * f * (1.0 - f)).matrix();
                dz.segment(2 * U, U) = (dc * i * (1.0 - g.square())).matrix();
                dz.segment(3 * U, U) = (dht.array() * tc * o * (1.0 - o)).matrix();
                dc_next = (dc * f).matrix();

                dWx.noalias() += dz * in.col(t).transpose();
                dWh.noalias() += dz * h_prev.transpose();
                db += dz;
                dinput.col(t).noalias() = Wx.transpose() * dz;
                dh_next.noalias() = Wh.transpose() * dz;
            }
            dseq = std::move(dinput);
        }
    } else {
        const Eigen::MatrixXd& last = cache.sequence_activations.back();
        dseq = Eigen::Map<const Eigen::MatrixXd>(dh.data(), last.rows(), last.cols());
    }

    for (std::size_t ci = conv_count; ci-- > 0;) {
        const auto& c = convs_[ci];
        const Eigen::MatrixXd& in = cache.sequence_activations[ci];
        const Eigen::MatrixXd& out = cache.sequence_activations[ci + 1];
        const Eigen::MatrixXd dy = dseq.cwiseProduct((1.0 - out.array().square()).matrix());
        const auto W = matrix(c.weight, c.out, c.in * c.width);
        auto dW = matrix(grad, c.weight, c.out, c.in * c.width);
        matrix(grad, c.bias, c.out, 1) += dy.rowwise().sum();
        const int pad = c.width / 2;
        Eigen::MatrixXd dinput = Eigen::MatrixXd::Zero(c.in, T);
        for (int t = 0; t < T; ++t) {
            for (int k = 0; k < c.width; ++k) {
                const int src = t + k - pad;
                if (src < 0 || src >= T) continue;
                dW.middleCols(k * c.in, c.in).noalias() += dy.col(t) * in.col(src).transpose();
                dinput.col(src).noalias() += W.middleCols(k * c.in, c.in).transpose() * dy.col(t);
            }
        }
        dseq = std::move(dinput);
    }

    if (spec_.embedding_dim > 0) {
        auto dE = matrix(grad, embedding_, spec_.embedding_dim, kVocabularySize);
        for (int t = 0; t < T; ++t) dE.col(cache.tokens[static_cast<std::size_t>(t)]) += dseq.col(t);
    }
}

double policy_gradient_check(PolicyNetwork& net, const StateWindow& window, int action, double h) {
    const auto a = static_cast<std::size_t>(action);
    ForwardCache cache;
    const PolicyOutput out = net.forward(window, cache);
    ActionVector dlogits{};
    for (std::size_t k = 0; k < dlogits.size(); ++k) dlogits[k] = (k == a ? 1.0 : 0.0) - out.probs[k];
    std::vector<double> analytic(net.parameter_count(), 0.0);
    net.backward(cache, dlogits, 0.0, analytic);

    auto log_prob = [&] { return std::log(net.forward(window).probs[a]); };
    auto params = net.parameters();
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const double saved = params[p];
        params[p] = saved + h;
        const double up = log_prob();
        params[p] = saved - h;
        const double down = log_prob();
        params[p] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(numeric), std::abs(analytic[p]), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic[p]) / scale);
    }
    return worst;
}

}  // namespace ribodesign
