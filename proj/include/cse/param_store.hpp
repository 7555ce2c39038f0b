#pragma once

#include <cmath>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "cse/common.hpp"
#include "cse/tensor.hpp"

namespace cse {

template <typename T>
struct AdamConfig {
    T lr = T(1e-3);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

// Named trainable parameters with their gradients and Adam state. Insertion
// order is the iteration order, so updates and checkpoints are deterministic.
template <typename T>
class ParamStoreT {
  public:
    struct Param {
        std::string name;
        TensorT<T> value;
        TensorT<T> grad;
        TensorT<T> m;
        TensorT<T> v;
        long step = 0;
    };

    Param& add(const std::string& name, std::vector<size_t> shape) {
        if (index_.count(name)) throw Error("param already registered: " + name);
        index_[name] = params_.size();
        params_.push_back(Param{name, TensorT<T>(shape), TensorT<T>(shape),
                                TensorT<T>(shape), TensorT<T>(shape), 0});
        return params_.back();
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    Param& get(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw Error("unknown param: " + name);
        return params_[it->second];
    }
    const Param& get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw Error("unknown param: " + name);
        return params_[it->second];
    }

    TensorT<T>& value(const std::string& name) { return get(name).value; }
    TensorT<T>& grad(const std::string& name) { return get(name).grad; }

    std::deque<Param>& params() { return params_; }
    const std::deque<Param>& params() const { return params_; }

    void zero_grads() {
        for (auto& p : params_) p.grad.fill(T(0));
    }

    // Standard Adam with bias correction; gradients are zeroed afterwards.
    void adam_step(const AdamConfig<T>& cfg) {
        for (auto& p : params_) {
            if (!p.grad.all_finite())
                throw TrainingDivergenceError("non-finite gradient in " + p.name);
            p.step += 1;
            T bc1 = T(1) - std::pow(cfg.beta1, T(p.step));
            T bc2 = T(1) - std::pow(cfg.beta2, T(p.step));
            for (size_t i = 0; i < p.value.size(); ++i) {
                T g = p.grad[i];
                p.m[i] = cfg.beta1 * p.m[i] + (T(1) - cfg.beta1) * g;
                p.v[i] = cfg.beta2 * p.v[i] + (T(1) - cfg.beta2) * g * g;
                T mhat = p.m[i] / bc1;
                T vhat = p.v[i] / bc2;
                p.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
            }
            p.grad.fill(T(0));
        }
    }

  private:
    std::deque<Param> params_;   // deque so add() never invalidates references
    std::unordered_map<std::string, size_t> index_;
};

using ParamStore = ParamStoreT<float>;

// Init helpers. Embeddings start from pretraining where available; everything
// else uses these.
template <typename T>
void init_uniform(TensorT<T>& t, std::mt19937_64& rng, double radius = 0.05) {
    for (size_t i = 0; i < t.size(); ++i)
        t[i] = static_cast<T>((draw_unit(rng) * 2.0 - 1.0) * radius);
}

// Scaled uniform (Glorot-style) for recurrent and dense matrices.
template <typename T>
void init_scaled_uniform(TensorT<T>& t, std::mt19937_64& rng) {
    double fan_in = static_cast<double>(t.cols());
    double fan_out = static_cast<double>(t.rows());
    double radius = std::sqrt(6.0 / (fan_in + fan_out));
    init_uniform(t, rng, radius);
}

}  // namespace cse
