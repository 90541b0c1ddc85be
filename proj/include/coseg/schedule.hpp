#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coseg {

// Warm-up + cosine decay learning-rate schedule. eta_current always equals
// lr_at(state, state.epoch).
struct ScheduleState {
    double eta_initial = 1e-3;
    double eta_final = 0.0;
    int warmup_epochs = 0;
    int total_epochs = 1;
    int epoch = 0;
    double eta_current = 0.0;
};

inline double lr_at(const ScheduleState& s, int epoch) {
    if (epoch < 0 || epoch > s.total_epochs)
        throw std::out_of_range("lr_at: epoch " + std::to_string(epoch) + " outside [0," +
                                std::to_string(s.total_epochs) + "]");
    if (epoch < s.warmup_epochs)
        return s.eta_initial * static_cast<double>(epoch) / static_cast<double>(s.warmup_epochs);
    const int span = s.total_epochs - s.warmup_epochs;
    if (span <= 0) return s.eta_initial;
    const double progress = static_cast<double>(epoch - s.warmup_epochs) / static_cast<double>(span);
    constexpr double kPi = 3.14159265358979323846;
    return s.eta_final + 0.5 * (s.eta_initial - s.eta_final) * (1.0 + std::cos(kPi * progress));
}

inline ScheduleState make_schedule(double eta_initial, double eta_final, int warmup, int total) {
    ScheduleState s;
    s.eta_initial = eta_initial;
    s.eta_final = eta_final;
    s.warmup_epochs = warmup;
    s.total_epochs = total;
    s.epoch = 0;
    s.eta_current = lr_at(s, 0);
    return s;
}

inline void advance_to(ScheduleState& s, int epoch) {
    s.epoch = epoch;
    s.eta_current = lr_at(s, epoch);
}

// The (b_l, b_u) split of one training batch.
struct BatchPlan {
    int b_l = 0;
    int b_u = 0;
    int B = 0;
};

// Normalized progress of the learning-rate decay; drives the unlabeled
// count. Zero during warm-up (the decay has not started), clamped to [0,1]
// otherwise.
inline double lrg_fraction(const ScheduleState& s) {
    if (s.eta_initial == s.eta_final)
        throw std::invalid_argument("lrg_fraction: eta_initial must differ from eta_final");
    if (s.epoch < s.warmup_epochs) return 0.0;
    const double f = (s.eta_initial - s.eta_current) / (s.eta_initial - s.eta_final);
    return std::clamp(f, 0.0, 1.0);
}

// b_u = floor(fraction * B), b_l = B - b_u.
inline BatchPlan lrg_plan(const ScheduleState& s, int B) {
    if (B < 1) throw std::invalid_argument("lrg_plan: B must be >= 1");
    const int b_u = static_cast<int>(std::floor(lrg_fraction(s) * static_cast<double>(B)));
    return BatchPlan{B - b_u, b_u, B};
}

// Fixed half/half split used by the uniform-sampling ablation.
inline BatchPlan uniform_plan(int B) {
    if (B < 1) throw std::invalid_argument("uniform_plan: B must be >= 1");
    const int b_l = (B + 1) / 2;
    return BatchPlan{b_l, B - b_l, B};
}

}  // namespace coseg
