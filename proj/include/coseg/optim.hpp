#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "coseg/nn.hpp"

namespace coseg {

// Adam with decoupled weight decay. Steps only the parameters handed in at
// construction (the strategy's trainable set).
template <typename T>
class AdamW {
public:
    struct Slot {
        Param<T>* p;
        Tensor<T> m, v;
    };

    AdamW() = default;
    explicit AdamW(std::vector<Param<T>*> params, double weight_decay = 0.01, double beta1 = 0.9,
                   double beta2 = 0.999, double eps = 1e-8)
        : wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {
        for (auto* p : params) slots_.push_back({p, Tensor<T>(p->value.shape()), Tensor<T>(p->value.shape())});
    }

    void zero_grad() {
        for (auto& s : slots_) s.p->zero_grad();
    }

    void step(double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
        for (auto& s : slots_) {
            const std::size_t n = s.p->value.size();
            for (std::size_t i = 0; i < n; ++i) {
                const double g = s.p->grad[i];
                const double m = b1_ * s.m[i] + (1.0 - b1_) * g;
                const double v = b2_ * s.v[i] + (1.0 - b2_) * g * g;
                s.m[i] = static_cast<T>(m);
                s.v[i] = static_cast<T>(v);
                const double mh = m / bc1;
                const double vh = v / bc2;
                const double upd = mh / (std::sqrt(vh) + eps_) + wd_ * s.p->value[i];
                s.p->value[i] = static_cast<T>(s.p->value[i] - lr * upd);
            }
        }
    }

    std::vector<Slot>& slots() { return slots_; }
    const std::vector<Slot>& slots() const { return slots_; }
    int64_t step_count() const { return t_; }
    void set_step_count(int64_t t) { t_ = t; }
    double weight_decay() const { return wd_; }

private:
    std::vector<Slot> slots_;
    double wd_ = 0.01, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
    int64_t t_ = 0;
};

}  // namespace coseg
