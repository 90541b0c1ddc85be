#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "coseg/nn.hpp"
#include "coseg/tensor.hpp"

namespace coseg {

template <typename T>
struct LossWeights {
    T w_ce = T(1);
    T w_dice = T(1);
    T w_kl = T(1);
};

enum class KlDirection { TeacherToStudent, StudentToTeacher };

inline KlDirection kl_direction_from_string(const std::string& s) {
    if (s == "teacher_to_student") return KlDirection::TeacherToStudent;
    if (s == "student_to_teacher") return KlDirection::StudentToTeacher;
    throw std::invalid_argument("kl_direction must be teacher_to_student or student_to_teacher");
}

namespace detail_loss {

constexpr double kTeacherClamp = 1e-7;

template <typename T>
void logsoftmax_voxel(const T* z, int C, std::size_t nvox, std::size_t v, double* lsm) {
    double mx = z[v];
    for (int c = 1; c < C; ++c) mx = std::max(mx, static_cast<double>(z[static_cast<std::size_t>(c) * nvox + v]));
    double denom = 0.0;
    for (int c = 0; c < C; ++c) denom += std::exp(static_cast<double>(z[static_cast<std::size_t>(c) * nvox + v]) - mx);
    const double lse = mx + std::log(denom);
    for (int c = 0; c < C; ++c) lsm[c] = static_cast<double>(z[static_cast<std::size_t>(c) * nvox + v]) - lse;
}

}  // namespace detail_loss

// Mean over voxels of -sum_c target_c * log softmax(logits)_c, in the log
// domain. Optionally writes d(loss)/d(logits).
template <typename T>
T ce_loss(const Tensor<T>& logits, const Tensor<T>& target, Tensor<T>* dlogits = nullptr) {
    require_same_shape(logits, target, "ce_loss");
    const int C = logits.dim(0);
    const std::size_t nvox = logits.spatial_size();
    const T* z = logits.data();
    const T* t = target.data();
    if (dlogits) *dlogits = Tensor<T>(logits.shape());
    std::vector<double> lsm(static_cast<std::size_t>(C));
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(nvox);
    for (std::size_t v = 0; v < nvox; ++v) {
        detail_loss::logsoftmax_voxel(z, C, nvox, v, lsm.data());
        double tsum = 0.0;
        for (int c = 0; c < C; ++c) {
            const double tc = t[static_cast<std::size_t>(c) * nvox + v];
            total -= tc * lsm[c];
            tsum += tc;
        }
        if (dlogits)
            for (int c = 0; c < C; ++c) {
                const double p = std::exp(lsm[c]);
                (*dlogits)[static_cast<std::size_t>(c) * nvox + v] =
                    static_cast<T>((tsum * p - t[static_cast<std::size_t>(c) * nvox + v]) * inv_n);
            }
    }
    return static_cast<T>(total * inv_n);
}

// Soft Dice loss: 1 - mean_c (2*sum(p*t)+eps)/(sum p + sum t + eps), sums over
// voxels. For binary tasks (C==2) only the foreground class enters the mean.
template <typename T>
T dice_loss(const Tensor<T>& probs, const Tensor<T>& target, Tensor<T>* dprobs = nullptr,
            double eps = 1e-5) {
    require_same_shape(probs, target, "dice_loss");
    const int C = probs.dim(0);
    const std::size_t nvox = probs.spatial_size();
    const int c0 = (C == 2) ? 1 : 0;
    const int nclasses = C - c0;
    const T* p = probs.data();
    const T* t = target.data();
    if (dprobs) *dprobs = Tensor<T>(probs.shape());
    double mean_dice = 0.0;
    for (int c = c0; c < C; ++c) {
        const T* pc = p + static_cast<std::size_t>(c) * nvox;
        const T* tc = t + static_cast<std::size_t>(c) * nvox;
        double inter = 0.0, psum = 0.0, tsum = 0.0;
        for (std::size_t v = 0; v < nvox; ++v) {
            inter += static_cast<double>(pc[v]) * tc[v];
            psum += pc[v];
            tsum += tc[v];
        }
        const double num = 2.0 * inter + eps;
        const double den = psum + tsum + eps;
        mean_dice += num / den;
        if (dprobs) {
            T* d = dprobs->data() + static_cast<std::size_t>(c) * nvox;
            const double inv = -1.0 / static_cast<double>(nclasses);
            for (std::size_t v = 0; v < nvox; ++v)
                d[v] = static_cast<T>(inv * (2.0 * tc[v] * den - num) / (den * den));
        }
    }
    return static_cast<T>(1.0 - mean_dice / static_cast<double>(nclasses));
}

// KL divergence between the (fixed) teacher distribution and the student's
// softmax, mean over voxels. Teacher probabilities are clamped to
// [1e-7, 1] inside the logs; exact zeros contribute nothing (0*log 0 = 0).
template <typename T>
T kl_loss(const Tensor<T>& student_logits, const Tensor<T>& teacher_probs, Tensor<T>* dlogits = nullptr,
          KlDirection dir = KlDirection::TeacherToStudent) {
    require_same_shape(student_logits, teacher_probs, "kl_loss");
    const int C = student_logits.dim(0);
    const std::size_t nvox = student_logits.spatial_size();
    const T* z = student_logits.data();
    const T* t = teacher_probs.data();
    if (dlogits) *dlogits = Tensor<T>(student_logits.shape());
    std::vector<double> lsm(static_cast<std::size_t>(C));
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(nvox);
    for (std::size_t v = 0; v < nvox; ++v) {
        detail_loss::logsoftmax_voxel(z, C, nvox, v, lsm.data());
        if (dir == KlDirection::TeacherToStudent) {
            double tsum = 0.0;
            for (int c = 0; c < C; ++c) {
                const double tc = t[static_cast<std::size_t>(c) * nvox + v];
                if (tc > 0.0) {
                    const double tcl = std::min(std::max(tc, detail_loss::kTeacherClamp), 1.0);
                    total += tc * (std::log(tcl) - lsm[c]);
                }
                tsum += tc;
            }
            if (dlogits)
                for (int c = 0; c < C; ++c)
                    (*dlogits)[static_cast<std::size_t>(c) * nvox + v] = static_cast<T>(
                        (tsum * std::exp(lsm[c]) - t[static_cast<std::size_t>(c) * nvox + v]) * inv_n);
        } else {
            // sum_c s_c (log s_c - log teacher_c), gradient through s only
            double dot = 0.0;
            std::vector<double> a(static_cast<std::size_t>(C));
            for (int c = 0; c < C; ++c) {
                const double tc = std::min(
                    std::max(static_cast<double>(t[static_cast<std::size_t>(c) * nvox + v]),
                             detail_loss::kTeacherClamp),
                    1.0);
                const double sc = std::exp(lsm[c]);
                total += sc * (lsm[c] - std::log(tc));
                a[static_cast<std::size_t>(c)] = lsm[c] - std::log(tc) + 1.0;
                dot += sc * a[static_cast<std::size_t>(c)];
            }
            if (dlogits)
                for (int c = 0; c < C; ++c) {
                    const double sc = std::exp(lsm[c]);
                    (*dlogits)[static_cast<std::size_t>(c) * nvox + v] =
                        static_cast<T>(sc * (a[static_cast<std::size_t>(c)] - dot) * inv_n);
                }
        }
    }
    return static_cast<T>(total * inv_n);
}

namespace detail_loss {

// Chain d(loss)/d(probs) through the per-voxel softmax into d(loss)/d(logits).
template <typename T>
void add_softmax_chain(const Tensor<T>& probs, const Tensor<T>& dprobs, T weight, Tensor<T>& dlogits) {
    const int C = probs.dim(0);
    const std::size_t nvox = probs.spatial_size();
    for (std::size_t v = 0; v < nvox; ++v) {
        double dot = 0.0;
        for (int c = 0; c < C; ++c)
            dot += static_cast<double>(probs[static_cast<std::size_t>(c) * nvox + v]) *
                   dprobs[static_cast<std::size_t>(c) * nvox + v];
        for (int c = 0; c < C; ++c) {
            const std::size_t i = static_cast<std::size_t>(c) * nvox + v;
            dlogits[i] += weight * static_cast<T>(probs[i] * (static_cast<double>(dprobs[i]) - dot));
        }
    }
}

}  // namespace detail_loss

// Labeled loss: w_ce * CE + w_dice * Dice, both against the ground-truth
// one-hot mask. `pred` is logits; dice consumes its softmax.
template <typename T>
T labeled_loss(const Tensor<T>& logits, const Tensor<T>& target, const LossWeights<T>& w,
               Tensor<T>* dlogits = nullptr, double dice_eps = 1e-5) {
    Tensor<T> dce, ddice;
    const T ce = ce_loss(logits, target, dlogits ? &dce : nullptr);
    const Tensor<T> probs = nn::softmax_classes(logits);
    const T dice = dice_loss(probs, target, dlogits ? &ddice : nullptr, dice_eps);
    if (dlogits) {
        *dlogits = Tensor<T>(logits.shape());
        for (std::size_t i = 0; i < dlogits->size(); ++i) (*dlogits)[i] = w.w_ce * dce[i];
        detail_loss::add_softmax_chain(probs, ddice, w.w_dice, *dlogits);
    }
    return w.w_ce * ce + w.w_dice * dice;
}

// Unlabeled loss: w_kl * KL + w_dice * Dice, both against the (detached)
// pseudo-mask.
template <typename T>
T unlabeled_loss(const Tensor<T>& logits, const Tensor<T>& pseudo, const LossWeights<T>& w,
                 Tensor<T>* dlogits = nullptr, KlDirection dir = KlDirection::TeacherToStudent,
                 double dice_eps = 1e-5) {
    Tensor<T> dkl, ddice;
    const T kl = kl_loss(logits, pseudo, dlogits ? &dkl : nullptr, dir);
    const Tensor<T> probs = nn::softmax_classes(logits);
    const T dice = dice_loss(probs, pseudo, dlogits ? &ddice : nullptr, dice_eps);
    if (dlogits) {
        *dlogits = Tensor<T>(logits.shape());
        for (std::size_t i = 0; i < dlogits->size(); ++i) (*dlogits)[i] = w.w_kl * dkl[i];
        detail_loss::add_softmax_chain(probs, ddice, w.w_dice, *dlogits);
    }
    return w.w_kl * kl + w.w_dice * dice;
}

// Batch-proportion-weighted combination of the labeled and unlabeled terms.
// A missing term contributes zero with weight zero.
inline double cotrain_loss(std::optional<double> loss_labeled, std::optional<double> loss_unlabeled,
                           int b_l, int b_u) {
    if (b_l < 0 || b_u < 0) throw std::invalid_argument("cotrain_loss: negative batch counts");
    if (b_l + b_u == 0) throw std::invalid_argument("cotrain_loss: b_l + b_u must be >= 1");
    if (b_l > 0 && !loss_labeled) throw std::invalid_argument("cotrain_loss: labeled term missing");
    if (b_u > 0 && !loss_unlabeled) throw std::invalid_argument("cotrain_loss: unlabeled term missing");
    const double total = static_cast<double>(b_l + b_u);
    double out = 0.0;
    if (b_l > 0) out += (b_l / total) * *loss_labeled;
    if (b_u > 0) out += (b_u / total) * *loss_unlabeled;
    return out;
}

}  // namespace coseg
