#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coseg/rng.hpp"
#include "coseg/tensor.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coseg {

enum class Tag { Encoder, Decoder };

// Named parameter tensor with its gradient accumulator. `head` marks the
// final class-projection layer (trainable under every fine-tuning strategy,
// excluded from the default LoRA selector).
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool trainable = true;
    Tag tag = Tag::Encoder;
    bool head = false;

    void init_shape(std::vector<int> shape) {
        value = Tensor<T>(shape);
        grad = Tensor<T>(std::move(shape));
    }
    void zero_grad() { grad.fill(T(0)); }
};

// Activation record for one forward pass. Layers push what their backward
// needs; backward pops in reverse order. Forward is const on the layers, so
// concurrent inference over a frozen model needs one Trace (or none) per
// thread.
template <typename T>
struct Trace {
    std::vector<Tensor<T>> saved;
    void push(Tensor<T> t) { saved.push_back(std::move(t)); }
    Tensor<T> pop() {
        if (saved.empty()) throw std::logic_error("Trace: pop on empty trace");
        Tensor<T> t = std::move(saved.back());
        saved.pop_back();
        return t;
    }
    void clear() { saved.clear(); }
};

// Low-rank additive update of a conv/dense weight viewed as [fan_out, fan_in]:
// W_eff = W + (alpha/r) * B * A. W stays frozen; A and B are the trainable
// parameters of the adapted layer. B starts at zero so W_eff == W at creation.
template <typename T>
struct LoraAdapter {
    Param<T> a;  // [r, fan_in]
    Param<T> b;  // [fan_out, r]
    int rank = 0;
    T scale = T(0);  // alpha / r
};

namespace nn {

// Fan-in-scaled uniform init, draws in a fixed order from `rng`.
template <typename T>
void uniform_init(Tensor<T>& t, int fan_in, RngStream& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(-s, s));
}

// --- 2D convolution, stride 1, zero padding k/2 ("same") ---------------------

template <typename T>
struct Conv2d {
    Param<T> w;  // [cout, cin, k, k]
    Param<T> b;  // [cout]
    int cin = 0, cout = 0, k = 1, pad = 0;
    std::optional<LoraAdapter<T>> lora;

    void configure(std::string name, int cin_, int cout_, int k_, Tag tag, bool head, RngStream* rng) {
        cin = cin_;
        cout = cout_;
        k = k_;
        pad = k_ / 2;
        w.name = name + ".w";
        b.name = name + ".b";
        w.tag = b.tag = tag;
        w.head = b.head = head;
        w.init_shape({cout, cin, k, k});
        b.init_shape({cout});
        if (rng)
            uniform_init(w.value, cin * k * k, *rng);  // head stays zero-initialized
    }

    int fan_in() const { return cin * k * k; }
    int fan_out() const { return cout; }

    // W + (alpha/r) B A, as the same [cout,cin,k,k] tensor (flat layout of the
    // kernel is already the [fan_out, fan_in] matrix view).
    Tensor<T> effective_weight() const {
        if (!lora) return w.value;
        Tensor<T> eff = w.value;
        const int fi = fan_in();
        const int r = lora->rank;
        for (int o = 0; o < cout; ++o)
            for (int j = 0; j < r; ++j) {
                const T bj = lora->b.value[static_cast<std::size_t>(o) * r + j] * lora->scale;
                if (bj == T(0)) continue;
                T* dst = eff.data() + static_cast<std::size_t>(o) * fi;
                const T* arow = lora->a.value.data() + static_cast<std::size_t>(j) * fi;
                for (int i = 0; i < fi; ++i) dst[i] += bj * arow[i];
            }
        return eff;
    }

    Tensor<T> forward(const Tensor<T>& x, Trace<T>* tr) const {
        if (x.rank() != 3 || x.dim(0) != cin)
            throw std::invalid_argument("Conv2d " + w.name + ": input must be [" + std::to_string(cin) +
                                        ",H,W], got " + shape_str(x.shape()));
        const int H = x.dim(1), W = x.dim(2);
        Tensor<T> y({cout, H, W});
        const Tensor<T> eff = effective_weight();
#pragma omp parallel for schedule(static)
        for (int oc = 0; oc < cout; ++oc) {
            T* yc = y.data() + static_cast<std::size_t>(oc) * H * W;
            const T bias = b.value[oc];
            for (int i = 0; i < H * W; ++i) yc[i] = bias;
            for (int ic = 0; ic < cin; ++ic) {
                const T* xc = x.data() + static_cast<std::size_t>(ic) * H * W;
                for (int kh = 0; kh < k; ++kh)
                    for (int kw = 0; kw < k; ++kw) {
                        const T coef = eff[((static_cast<std::size_t>(oc) * cin + ic) * k + kh) * k + kw];
                        if (coef == T(0)) continue;
                        const int dh = kh - pad, dw = kw - pad;
                        const int h0 = std::max(0, -dh), h1 = std::min(H, H - dh);
                        const int w0 = std::max(0, -dw), w1 = std::min(W, W - dw);
                        for (int h = h0; h < h1; ++h) {
                            T* yrow = yc + static_cast<std::size_t>(h) * W;
                            const T* xrow = xc + static_cast<std::size_t>(h + dh) * W + dw;
                            for (int ww = w0; ww < w1; ++ww) yrow[ww] += coef * xrow[ww];
                        }
                    }
            }
        }
        if (tr) tr->push(x);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, Trace<T>& tr) {
        const Tensor<T> x = tr.pop();
        const int H = x.dim(1), W = x.dim(2);
        const int fi = fan_in();
        Tensor<T> dweff({cout, cin, k, k});
        // db and dW
#pragma omp parallel for schedule(static)
        for (int oc = 0; oc < cout; ++oc) {
            const T* dyc = dy.data() + static_cast<std::size_t>(oc) * H * W;
            T db = T(0);
            for (int i = 0; i < H * W; ++i) db += dyc[i];
            b.grad[oc] += db;
            for (int ic = 0; ic < cin; ++ic) {
                const T* xc = x.data() + static_cast<std::size_t>(ic) * H * W;
                for (int kh = 0; kh < k; ++kh)
                    for (int kw = 0; kw < k; ++kw) {
                        const int dh = kh - pad, dw = kw - pad;
                        const int h0 = std::max(0, -dh), h1 = std::min(H, H - dh);
                        const int w0 = std::max(0, -dw), w1 = std::min(W, W - dw);
                        T acc = T(0);
                        for (int h = h0; h < h1; ++h) {
                            const T* dyrow = dyc + static_cast<std::size_t>(h) * W;
                            const T* xrow = xc + static_cast<std::size_t>(h + dh) * W + dw;
                            for (int ww = w0; ww < w1; ++ww) acc += dyrow[ww] * xrow[ww];
                        }
                        dweff[((static_cast<std::size_t>(oc) * cin + ic) * k + kh) * k + kw] = acc;
                    }
            }
        }
        route_weight_grad(dweff, fi);
        // dx (correlation with the kernel transposed)
        Tensor<T> dx({cin, H, W});
        const Tensor<T> eff = effective_weight();
#pragma omp parallel for schedule(static)
        for (int ic = 0; ic < cin; ++ic) {
            T* dxc = dx.data() + static_cast<std::size_t>(ic) * H * W;
            for (int oc = 0; oc < cout; ++oc) {
                const T* dyc = dy.data() + static_cast<std::size_t>(oc) * H * W;
                for (int kh = 0; kh < k; ++kh)
                    for (int kw = 0; kw < k; ++kw) {
                        const T coef = eff[((static_cast<std::size_t>(oc) * cin + ic) * k + kh) * k + kw];
                        if (coef == T(0)) continue;
                        const int dh = kh - pad, dw = kw - pad;
                        const int h0 = std::max(0, -dh), h1 = std::min(H, H - dh);
                        const int w0 = std::max(0, -dw), w1 = std::min(W, W - dw);
                        for (int h = h0; h < h1; ++h) {
                            T* dxrow = dxc + static_cast<std::size_t>(h + dh) * W + dw;
                            const T* dyrow = dyc + static_cast<std::size_t>(h) * W;
                            for (int ww = w0; ww < w1; ++ww) dxrow[ww] += coef * dyrow[ww];
                        }
                    }
            }
        }
        return dx;
    }

    void route_weight_grad(const Tensor<T>& dweff, int fi) {
        if (!lora) {
            if (w.trainable)
                for (std::size_t i = 0; i < dweff.size(); ++i) w.grad[i] += dweff[i];
            return;
        }
        const int r = lora->rank;
        // dA = scale * B^T dW, dB = scale * dW A^T
        for (int j = 0; j < r; ++j) {
            T* darow = lora->a.grad.data() + static_cast<std::size_t>(j) * fi;
            for (int o = 0; o < cout; ++o) {
                const T bj = lora->b.value[static_cast<std::size_t>(o) * r + j] * lora->scale;
                const T* dwrow = dweff.data() + static_cast<std::size_t>(o) * fi;
                if (bj != T(0))
                    for (int i = 0; i < fi; ++i) darow[i] += bj * dwrow[i];
            }
        }
        for (int o = 0; o < cout; ++o) {
            const T* dwrow = dweff.data() + static_cast<std::size_t>(o) * fi;
            T* dbrow = lora->b.grad.data() + static_cast<std::size_t>(o) * r;
            for (int j = 0; j < r; ++j) {
                const T* arow = lora->a.value.data() + static_cast<std::size_t>(j) * fi;
                T acc = T(0);
                for (int i = 0; i < fi; ++i) acc += dwrow[i] * arow[i];
                dbrow[j] += acc * lora->scale;
            }
        }
    }

    void collect(std::vector<Param<T>*>& out) {
        out.push_back(&w);
        out.push_back(&b);
        if (lora) {
            out.push_back(&lora->a);
            out.push_back(&lora->b);
        }
    }
};

// --- 3D convolution, stride 1, zero padding k/2 -------------------------------

template <typename T>
struct Conv3d {
    Param<T> w;  // [cout, cin, k, k, k]
    Param<T> b;  // [cout]
    int cin = 0, cout = 0, k = 1, pad = 0;
    std::optional<LoraAdapter<T>> lora;

    void configure(std::string name, int cin_, int cout_, int k_, Tag tag, bool head, RngStream* rng) {
        cin = cin_;
        cout = cout_;
        k = k_;
        pad = k_ / 2;
        w.name = name + ".w";
        b.name = name + ".b";
        w.tag = b.tag = tag;
        w.head = b.head = head;
        w.init_shape({cout, cin, k, k, k});
        b.init_shape({cout});
        if (rng) uniform_init(w.value, cin * k * k * k, *rng);
    }

    int fan_in() const { return cin * k * k * k; }
    int fan_out() const { return cout; }

    Tensor<T> effective_weight() const {
        if (!lora) return w.value;
        Tensor<T> eff = w.value;
        const int fi = fan_in();
        const int r = lora->rank;
        for (int o = 0; o < cout; ++o)
            for (int j = 0; j < r; ++j) {
                const T bj = lora->b.value[static_cast<std::size_t>(o) * r + j] * lora->scale;
                if (bj == T(0)) continue;
                T* dst = eff.data() + static_cast<std::size_t>(o) * fi;
                const T* arow = lora->a.value.data() + static_cast<std::size_t>(j) * fi;
                for (int i = 0; i < fi; ++i) dst[i] += bj * arow[i];
            }
        return eff;
    }

    Tensor<T> forward(const Tensor<T>& x, Trace<T>* tr) const {
        if (x.rank() != 4 || x.dim(0) != cin)
            throw std::invalid_argument("Conv3d " + w.name + ": input must be [" + std::to_string(cin) +
                                        ",H,W,D], got " + shape_str(x.shape()));
        const int H = x.dim(1), W = x.dim(2), D = x.dim(3);
        const std::size_t hw = static_cast<std::size_t>(H) * W * D;
        Tensor<T> y({cout, H, W, D});
        const Tensor<T> eff = effective_weight();
#pragma omp parallel for schedule(static)
        for (int oc = 0; oc < cout; ++oc) {
            T* yc = y.data() + static_cast<std::size_t>(oc) * hw;
            const T bias = b.value[oc];
            for (std::size_t i = 0; i < hw; ++i) yc[i] = bias;
            for (int ic = 0; ic < cin; ++ic) {
                const T* xc = x.data() + static_cast<std::size_t>(ic) * hw;
                for (int kh = 0; kh < k; ++kh)
                    for (int kw = 0; kw < k; ++kw)
                        for (int kd = 0; kd < k; ++kd) {
                            const T coef =
                                eff[(((static_cast<std::size_t>(oc) * cin + ic) * k + kh) * k + kw) * k + kd];
                            if (coef == T(0)) continue;
                            const int dh = kh - pad, dw = kw - pad, dd = kd - pad;
                            const int h0 = std::max(0, -dh), h1 = std::min(H, H - dh);
                            const int w0 = std::max(0, -dw), w1 = std::min(W, W - dw);
                            const int d0 = std::max(0, -dd), d1 = std::min(D, D - dd);
                            for (int h = h0; h < h1; ++h)
                                for (int ww = w0; ww < w1; ++ww) {
                                    T* yrow = yc + (static_cast<std::size_t>(h) * W + ww) * D;
                                    const T* xrow =
                                        xc + (static_cast<std::size_t>(h + dh) * W + (ww + dw)) * D + dd;
                                    for (int d = d0; d < d1; ++d) yrow[d] += coef * xrow[d];
                                }
                        }
            }
        }
        if (tr) tr->push(x);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, Trace<T>& tr) {
        const Tensor<T> x = tr.pop();
        const int H = x.dim(1), W = x.dim(2), D = x.dim(3);
        const std::size_t hw = static_cast<std::size_t>(H) * W * D;
        const int fi = fan_in();
        Tensor<T> dweff({cout, cin, k, k, k});
#pragma omp parallel for schedule(static)
        for (int oc = 0; oc < cout; ++oc) {
            const T* dyc = dy.data() + static_cast<std::size_t>(oc) * hw;
            T db = T(0);
            for (std::size_t i = 0; i < hw; ++i) db += dyc[i];
            b.grad[oc] += db;
            for (int ic = 0; ic < cin; ++ic) {
                const T* xc = x.data() + static_cast<std::size_t>(ic) * hw;
                for (int kh = 0; kh < k; ++kh)
                    for (int kw = 0; kw < k; ++kw)
                        for (int kd = 0; kd < k; ++kd) {
                            const int dh = kh - pad, dw = kw - pad, dd = kd - pad;
                            const int h0 = std::max(0, -dh), h1 = std::min(H, H - dh);
                            const int w0 = std::max(0, -dw), w1 = std::min(W, W - dw);
                            const int d0 = std::max(0, -dd), d1 = std::min(D, D - dd);
                            T acc = T(0);
                            for (int h = h0; h < h1; ++h)
                                for (int ww = w0; ww < w1; ++ww) {
                                    const T* dyrow = dyc + (static_cast<std::size_t>(h) * W + ww) * D;
                                    const T* xrow =
                                        xc + (static_cast<std::size_t>(h + dh) * W + (ww + dw)) * D + dd;
                                    for (int d = d0; d < d1; ++d) acc += dyrow[d] * xrow[d];
                                }
                            dweff[(((static_cast<std::size_t>(oc) * cin + ic) * k + kh) * k + kw) * k + kd] =
                                acc;
                        }
            }
        }
        route_weight_grad(dweff, fi);
        Tensor<T> dx({cin, H, W, D});
        const Tensor<T> eff = effective_weight();
#pragma omp parallel for schedule(static)
        for (int ic = 0; ic < cin; ++ic) {
            T* dxc = dx.data() + static_cast<std::size_t>(ic) * hw;
            for (int oc = 0; oc < cout; ++oc) {
                const T* dyc = dy.data() + static_cast<std::size_t>(oc) * hw;
                for (int kh = 0; kh < k; ++kh)
                    for (int kw = 0; kw < k; ++kw)
                        for (int kd = 0; kd < k; ++kd) {
                            const T coef =
                                eff[(((static_cast<std::size_t>(oc) * cin + ic) * k + kh) * k + kw) * k + kd];
                            if (coef == T(0)) continue;
                            const int dh = kh - pad, dw = kw - pad, dd = kd - pad;
                            const int h0 = std::max(0, -dh), h1 = std::min(H, H - dh);
                            const int w0 = std::max(0, -dw), w1 = std::min(W, W - dw);
                            const int d0 = std::max(0, -dd), d1 = std::min(D, D - dd);
                            for (int h = h0; h < h1; ++h)
                                for (int ww = w0; ww < w1; ++ww) {
                                    T* dxrow = dxc + (static_cast<std::size_t>(h + dh) * W + (ww + dw)) * D + dd;
                                    const T* dyrow = dyc + (static_cast<std::size_t>(h) * W + ww) * D;
                                    for (int d = d0; d < d1; ++d) dxrow[d] += coef * dyrow[d];
                                }
                        }
            }
        }
        return dx;
    }

    void route_weight_grad(const Tensor<T>& dweff, int fi) {
        if (!lora) {
            if (w.trainable)
                for (std::size_t i = 0; i < dweff.size(); ++i) w.grad[i] += dweff[i];
            return;
        }
        const int r = lora->rank;
        for (int j = 0; j < r; ++j) {
            T* darow = lora->a.grad.data() + static_cast<std::size_t>(j) * fi;
            for (int o = 0; o < cout; ++o) {
                const T bj = lora->b.value[static_cast<std::size_t>(o) * r + j] * lora->scale;
                const T* dwrow = dweff.data() + static_cast<std::size_t>(o) * fi;
                if (bj != T(0))
                    for (int i = 0; i < fi; ++i) darow[i] += bj * dwrow[i];
            }
        }
        for (int o = 0; o < cout; ++o) {
            const T* dwrow = dweff.data() + static_cast<std::size_t>(o) * fi;
            T* dbrow = lora->b.grad.data() + static_cast<std::size_t>(o) * r;
            for (int j = 0; j < r; ++j) {
                const T* arow = lora->a.value.data() + static_cast<std::size_t>(j) * fi;
                T acc = T(0);
                for (int i = 0; i < fi; ++i) acc += dwrow[i] * arow[i];
                dbrow[j] += acc * lora->scale;
            }
        }
    }

    void collect(std::vector<Param<T>*>& out) {
        out.push_back(&w);
        out.push_back(&b);
        if (lora) {
            out.push_back(&lora->a);
            out.push_back(&lora->b);
        }
    }
};

// --- activation ---------------------------------------------------------------

// SiLU x*sigmoid(x): smooth, so finite-difference gradient checks are clean.
template <typename T>
Tensor<T> silu_forward(const Tensor<T>& x, Trace<T>* tr) {
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T s = T(1) / (T(1) + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
    if (tr) tr->push(x);
    return y;
}

template <typename T>
Tensor<T> silu_backward(const Tensor<T>& dy, Trace<T>& tr) {
    const Tensor<T> x = tr.pop();
    Tensor<T> dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T s = T(1) / (T(1) + std::exp(-x[i]));
        dx[i] = dy[i] * (s + x[i] * s * (T(1) - s));
    }
    return dx;
}

// --- 2x average pooling with ceil output (windows of 1 at odd boundaries) ------

inline int pooled_dim(int n) { return (n + 1) / 2; }

template <typename T>
Tensor<T> avgpool2_2d(const Tensor<T>& x, Trace<T>* tr) {
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int Ho = pooled_dim(H), Wo = pooled_dim(W);
    Tensor<T> y({C, Ho, Wo});
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh)
            for (int ow = 0; ow < Wo; ++ow) {
                const int h1 = std::min(2 * oh + 2, H), w1 = std::min(2 * ow + 2, W);
                T acc = T(0);
                int cnt = 0;
                for (int h = 2 * oh; h < h1; ++h)
                    for (int w = 2 * ow; w < w1; ++w) {
                        acc += x.at3(c, h, w);
                        ++cnt;
                    }
                y.at3(c, oh, ow) = acc / static_cast<T>(cnt);
            }
    if (tr) {
        Tensor<T> shape_marker({3}, T(0));
        shape_marker[0] = static_cast<T>(C);
        shape_marker[1] = static_cast<T>(H);
        shape_marker[2] = static_cast<T>(W);
        tr->push(shape_marker);
    }
    return y;
}

template <typename T>
Tensor<T> avgpool2_2d_backward(const Tensor<T>& dy, Trace<T>& tr) {
    const Tensor<T> marker = tr.pop();
    const int C = static_cast<int>(marker[0]), H = static_cast<int>(marker[1]), W = static_cast<int>(marker[2]);
    Tensor<T> dx({C, H, W});
    const int Ho = pooled_dim(H), Wo = pooled_dim(W);
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh)
            for (int ow = 0; ow < Wo; ++ow) {
                const int h1 = std::min(2 * oh + 2, H), w1 = std::min(2 * ow + 2, W);
                const int cnt = (h1 - 2 * oh) * (w1 - 2 * ow);
                const T g = dy.at3(c, oh, ow) / static_cast<T>(cnt);
                for (int h = 2 * oh; h < h1; ++h)
                    for (int w = 2 * ow; w < w1; ++w) dx.at3(c, h, w) += g;
            }
    return dx;
}

template <typename T>
Tensor<T> avgpool2_3d(const Tensor<T>& x, Trace<T>* tr) {
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2), D = x.dim(3);
    const int Ho = pooled_dim(H), Wo = pooled_dim(W), Do = pooled_dim(D);
    Tensor<T> y({C, Ho, Wo, Do});
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh)
            for (int ow = 0; ow < Wo; ++ow)
                for (int od = 0; od < Do; ++od) {
                    const int h1 = std::min(2 * oh + 2, H), w1 = std::min(2 * ow + 2, W),
                              d1 = std::min(2 * od + 2, D);
                    T acc = T(0);
                    int cnt = 0;
                    for (int h = 2 * oh; h < h1; ++h)
                        for (int w = 2 * ow; w < w1; ++w)
                            for (int d = 2 * od; d < d1; ++d) {
                                acc += x.at4(c, h, w, d);
                                ++cnt;
                            }
                    y.at4(c, oh, ow, od) = acc / static_cast<T>(cnt);
                }
    if (tr) {
        Tensor<T> marker({4}, T(0));
        marker[0] = static_cast<T>(C);
        marker[1] = static_cast<T>(H);
        marker[2] = static_cast<T>(W);
        marker[3] = static_cast<T>(D);
        tr->push(marker);
    }
    return y;
}

template <typename T>
Tensor<T> avgpool2_3d_backward(const Tensor<T>& dy, Trace<T>& tr) {
    const Tensor<T> marker = tr.pop();
    const int C = static_cast<int>(marker[0]), H = static_cast<int>(marker[1]), W = static_cast<int>(marker[2]),
              D = static_cast<int>(marker[3]);
    Tensor<T> dx({C, H, W, D});
    const int Ho = pooled_dim(H), Wo = pooled_dim(W), Do = pooled_dim(D);
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh)
            for (int ow = 0; ow < Wo; ++ow)
                for (int od = 0; od < Do; ++od) {
                    const int h1 = std::min(2 * oh + 2, H), w1 = std::min(2 * ow + 2, W),
                              d1 = std::min(2 * od + 2, D);
                    const int cnt = (h1 - 2 * oh) * (w1 - 2 * ow) * (d1 - 2 * od);
                    const T g = dy.at4(c, oh, ow, od) / static_cast<T>(cnt);
                    for (int h = 2 * oh; h < h1; ++h)
                        for (int w = 2 * ow; w < w1; ++w)
                            for (int d = 2 * od; d < d1; ++d) dx.at4(c, h, w, d) += g;
                }
    return dx;
}

// --- nearest-neighbor upsample to an exact target spatial shape ----------------

template <typename T>
Tensor<T> upsample_to_2d(const Tensor<T>& x, int Ho, int Wo) {
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    Tensor<T> y({C, Ho, Wo});
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh) {
            const int ih = static_cast<int>((static_cast<int64_t>(oh) * H) / Ho);
            for (int ow = 0; ow < Wo; ++ow) {
                const int iw = static_cast<int>((static_cast<int64_t>(ow) * W) / Wo);
                y.at3(c, oh, ow) = x.at3(c, ih, iw);
            }
        }
    return y;
}

template <typename T>
Tensor<T> upsample_to_2d_backward(const Tensor<T>& dy, int Hi, int Wi) {
    const int C = dy.dim(0), Ho = dy.dim(1), Wo = dy.dim(2);
    Tensor<T> dx({C, Hi, Wi});
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh) {
            const int ih = static_cast<int>((static_cast<int64_t>(oh) * Hi) / Ho);
            for (int ow = 0; ow < Wo; ++ow) {
                const int iw = static_cast<int>((static_cast<int64_t>(ow) * Wi) / Wo);
                dx.at3(c, ih, iw) += dy.at3(c, oh, ow);
            }
        }
    return dx;
}

template <typename T>
Tensor<T> upsample_to_3d(const Tensor<T>& x, int Ho, int Wo, int Do) {
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2), D = x.dim(3);
    Tensor<T> y({C, Ho, Wo, Do});
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh) {
            const int ih = static_cast<int>((static_cast<int64_t>(oh) * H) / Ho);
            for (int ow = 0; ow < Wo; ++ow) {
                const int iw = static_cast<int>((static_cast<int64_t>(ow) * W) / Wo);
                for (int od = 0; od < Do; ++od) {
                    const int id = static_cast<int>((static_cast<int64_t>(od) * D) / Do);
                    y.at4(c, oh, ow, od) = x.at4(c, ih, iw, id);
                }
            }
        }
    return y;
}

template <typename T>
Tensor<T> upsample_to_3d_backward(const Tensor<T>& dy, int Hi, int Wi, int Di) {
    const int C = dy.dim(0), Ho = dy.dim(1), Wo = dy.dim(2), Do = dy.dim(3);
    Tensor<T> dx({C, Hi, Wi, Di});
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh) {
            const int ih = static_cast<int>((static_cast<int64_t>(oh) * Hi) / Ho);
            for (int ow = 0; ow < Wo; ++ow) {
                const int iw = static_cast<int>((static_cast<int64_t>(ow) * Wi) / Wo);
                for (int od = 0; od < Do; ++od) {
                    const int id = static_cast<int>((static_cast<int64_t>(od) * Di) / Do);
                    dx.at4(c, ih, iw, id) += dy.at4(c, oh, ow, od);
                }
            }
        }
    return dx;
}

// --- channel concat -------------------------------------------------------------

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != b.rank()) throw std::invalid_argument("concat_channels: rank mismatch");
    for (int i = 1; i < a.rank(); ++i)
        if (a.dim(i) != b.dim(i)) throw std::invalid_argument("concat_channels: spatial mismatch");
    std::vector<int> shape = a.shape();
    shape[0] = a.dim(0) + b.dim(0);
    Tensor<T> y(shape);
    std::copy(a.data(), a.data() + a.size(), y.data());
    std::copy(b.data(), b.data() + b.size(), y.data() + a.size());
    return y;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& y, int ca) {
    std::vector<int> sa = y.shape(), sb = y.shape();
    sa[0] = ca;
    sb[0] = y.dim(0) - ca;
    Tensor<T> a(sa), b(sb);
    std::copy(y.data(), y.data() + a.size(), a.data());
    std::copy(y.data() + a.size(), y.data() + y.size(), b.data());
    return {std::move(a), std::move(b)};
}

// --- per-voxel softmax over the class (leading) axis ----------------------------

template <typename T>
Tensor<T> softmax_classes(const Tensor<T>& logits) {
    const int C = logits.dim(0);
    const std::size_t nvox = logits.spatial_size();
    Tensor<T> out(logits.shape());
    const T* in = logits.data();
    T* o = out.data();
    for (std::size_t v = 0; v < nvox; ++v) {
        T mx = in[v];
        for (int c = 1; c < C; ++c) mx = std::max(mx, in[static_cast<std::size_t>(c) * nvox + v]);
        T denom = T(0);
        for (int c = 0; c < C; ++c) {
            const T e = std::exp(in[static_cast<std::size_t>(c) * nvox + v] - mx);
            o[static_cast<std::size_t>(c) * nvox + v] = e;
            denom += e;
        }
        for (int c = 0; c < C; ++c) o[static_cast<std::size_t>(c) * nvox + v] /= denom;
    }
    return out;
}

}  // namespace nn
}  // namespace coseg
