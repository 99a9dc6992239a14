#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmfp/core/rng.hpp"

namespace mmfp {

/// Fully connected network with tanh hidden layers and a linear output layer,
/// with hand-written backpropagation. Small enough that every gradient can be
/// checked against finite differences.
class Mlp {
public:
    struct Cache {
        std::vector<Eigen::VectorXd> act;  // act[0] = input, act[i] = output of layer i
    };

    struct Grads {
        std::vector<Eigen::MatrixXd> d_weight;
        std::vector<Eigen::VectorXd> d_bias;

        void scale(double s) {
            for (auto& m : d_weight) m *= s;
            for (auto& v : d_bias) v *= s;
        }
        void add(const Grads& o) {
            for (std::size_t i = 0; i < d_weight.size(); ++i) {
                d_weight[i] += o.d_weight[i];
                d_bias[i] += o.d_bias[i];
            }
        }
    };

    Mlp() = default;

    /// `sizes` = {input, hidden..., output}. Weights get Glorot-uniform init,
    /// biases start at zero.
    Mlp(std::vector<std::size_t> sizes, Rng& rng) : sizes_(std::move(sizes)) {
        if (sizes_.size() < 2) throw std::invalid_argument("mlp: need at least two sizes");
        for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
            const auto fan_in = static_cast<double>(sizes_[i]);
            const auto fan_out = static_cast<double>(sizes_[i + 1]);
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            Eigen::MatrixXd w(sizes_[i + 1], sizes_[i]);
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
            weights_.push_back(std::move(w));
            biases_.emplace_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sizes_[i + 1])));
        }
    }

    const std::vector<std::size_t>& sizes() const { return sizes_; }
    std::size_t input_dim() const { return sizes_.front(); }
    std::size_t output_dim() const { return sizes_.back(); }
    std::size_t layer_count() const { return weights_.size(); }

    Eigen::MatrixXd& weight(std::size_t i) { return weights_[i]; }
    Eigen::VectorXd& bias(std::size_t i) { return biases_[i]; }
    const Eigen::MatrixXd& weight(std::size_t i) const { return weights_[i]; }
    const Eigen::VectorXd& bias(std::size_t i) const { return biases_[i]; }

    Eigen::VectorXd forward(const Eigen::VectorXd& x, Cache* cache = nullptr) const {
        if (static_cast<std::size_t>(x.size()) != sizes_.front())
            throw std::invalid_argument("mlp: input dimension mismatch");
        Eigen::VectorXd a = x;
        if (cache) {
            cache->act.clear();
            cache->act.push_back(a);
        }
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            a = (weights_[i] * a + biases_[i]).eval();
            if (i + 1 < weights_.size()) a = a.array().tanh().matrix();
            if (cache) cache->act.push_back(a);
        }
        return a;
    }

    Grads zero_grads() const {
        Grads g;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            g.d_weight.emplace_back(Eigen::MatrixXd::Zero(weights_[i].rows(), weights_[i].cols()));
            g.d_bias.emplace_back(Eigen::VectorXd::Zero(biases_[i].size()));
        }
        return g;
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input.
    Eigen::VectorXd backward(const Cache& cache, const Eigen::VectorXd& d_output,
                             Grads& grads) const {
        Eigen::VectorXd delta = d_output;
        for (std::size_t i = weights_.size(); i-- > 0;) {
            // cache.act[i+1] is this layer's output; hidden layers are tanh.
            if (i + 1 < weights_.size()) {
                const auto& a = cache.act[i + 1];
                delta = (delta.array() * (1.0 - a.array().square())).matrix();
            }
            grads.d_weight[i] += delta * cache.act[i].transpose();
            grads.d_bias[i] += delta;
            delta = (weights_[i].transpose() * delta).eval();
        }
        return delta;
    }

    void sgd_step(const Grads& grads, double lr) {
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            weights_[i] -= lr * grads.d_weight[i];
            biases_[i] -= lr * grads.d_bias[i];
        }
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < weights_.size(); ++i)
            n += static_cast<std::size_t>(weights_[i].size() + biases_[i].size());
        return n;
    }

    // Flat parameter access, used by finite-difference tests and checkpoints.
    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(parameter_count());
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            out.insert(out.end(), weights_[i].data(), weights_[i].data() + weights_[i].size());
            out.insert(out.end(), biases_[i].data(), biases_[i].data() + biases_[i].size());
        }
        return out;
    }

    void unflatten(const std::vector<double>& flat) {
        if (flat.size() != parameter_count())
            throw std::invalid_argument("mlp: parameter count mismatch");
        std::size_t off = 0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            std::copy_n(flat.begin() + static_cast<long>(off),
                        static_cast<std::size_t>(weights_[i].size()), weights_[i].data());
            off += static_cast<std::size_t>(weights_[i].size());
            std::copy_n(flat.begin() + static_cast<long>(off),
                        static_cast<std::size_t>(biases_[i].size()), biases_[i].data());
            off += static_cast<std::size_t>(biases_[i].size());
        }
    }

    std::vector<double> flatten_grads(const Grads& g) const {
        std::vector<double> out;
        out.reserve(parameter_count());
        for (std::size_t i = 0; i < g.d_weight.size(); ++i) {
            out.insert(out.end(), g.d_weight[i].data(), g.d_weight[i].data() + g.d_weight[i].size());
            out.insert(out.end(), g.d_bias[i].data(), g.d_bias[i].data() + g.d_bias[i].size());
        }
        return out;
    }

private:
    std::vector<std::size_t> sizes_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

} // namespace mmfp
