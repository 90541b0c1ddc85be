#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "coseg/model.hpp"
#include "coseg/nn.hpp"

namespace coseg {

enum class FineTuneKind { Whole, DecoderOnly, LoRA };

// Which layers receive adapters under LoRA. The head (final class
// projection) is freshly initialized rather than pretrained, so the default
// leaves it out of adaptation and fully trainable instead.
enum class LoraSelector { AllButHead, All, EncoderOnly, DecoderOnly };

struct FineTuneStrategy {
    FineTuneKind kind = FineTuneKind::LoRA;
    int rank = 4;
    double alpha = 8.0;
    LoraSelector selector = LoraSelector::AllButHead;
};

inline FineTuneKind finetune_kind_from_string(const std::string& s) {
    if (s == "whole") return FineTuneKind::Whole;
    if (s == "decoder") return FineTuneKind::DecoderOnly;
    if (s == "lora") return FineTuneKind::LoRA;
    throw std::invalid_argument("finetune.kind must be whole, decoder or lora");
}

inline std::string to_string(FineTuneKind k) {
    switch (k) {
        case FineTuneKind::Whole: return "whole";
        case FineTuneKind::DecoderOnly: return "decoder";
        case FineTuneKind::LoRA: return "lora";
    }
    return "?";
}

inline LoraSelector lora_selector_from_string(const std::string& s) {
    if (s == "all_but_head") return LoraSelector::AllButHead;
    if (s == "all") return LoraSelector::All;
    if (s == "encoder_only") return LoraSelector::EncoderOnly;
    if (s == "decoder_only") return LoraSelector::DecoderOnly;
    throw std::invalid_argument("finetune.selector must be all_but_head, all, encoder_only or decoder_only");
}

inline std::string to_string(LoraSelector s) {
    switch (s) {
        case LoraSelector::AllButHead: return "all_but_head";
        case LoraSelector::All: return "all";
        case LoraSelector::EncoderOnly: return "encoder_only";
        case LoraSelector::DecoderOnly: return "decoder_only";
    }
    return "?";
}

namespace detail_adapt {

inline bool selector_matches(LoraSelector sel, Tag tag, bool head) {
    switch (sel) {
        case LoraSelector::AllButHead: return !head;
        case LoraSelector::All: return true;
        case LoraSelector::EncoderOnly: return tag == Tag::Encoder;
        case LoraSelector::DecoderOnly: return tag == Tag::Decoder && !head;
    }
    return false;
}

template <typename ConvT, typename T>
void attach_lora(ConvT& conv, int rank, double alpha, RngStream& rng) {
    const int fi = conv.fan_in();
    const int fo = conv.fan_out();
    if (rank < 1 || rank > std::min(fi, fo))
        throw std::invalid_argument("LoRA rank " + std::to_string(rank) + " exceeds min(fan_in,fan_out)=" +
                                    std::to_string(std::min(fi, fo)) + " for layer " + conv.w.name);
    LoraAdapter<T> ad;
    ad.rank = rank;
    ad.scale = static_cast<T>(alpha / rank);
    ad.a.name = conv.w.name + ".lora_a";
    ad.b.name = conv.w.name + ".lora_b";
    ad.a.tag = ad.b.tag = conv.w.tag;
    ad.a.init_shape({rank, fi});
    ad.b.init_shape({fo, rank});  // zero, so the adapted forward equals the base forward
    nn::uniform_init(ad.a.value, fi, rng);
    conv.lora.emplace(std::move(ad));
}

template <typename T, typename ConvT>
void apply_to_convs(std::vector<ConvT*> convs, const FineTuneStrategy& s, RngStream& rng) {
    for (auto* c : convs) c->lora.reset();
    switch (s.kind) {
        case FineTuneKind::Whole:
            for (auto* c : convs) c->w.trainable = c->b.trainable = true;
            return;
        case FineTuneKind::DecoderOnly:
            for (auto* c : convs) {
                const bool train = (c->w.tag == Tag::Decoder);
                c->w.trainable = c->b.trainable = train;
            }
            return;
        case FineTuneKind::LoRA: {
            RngStream r = rng.derive("lora");
            int selected = 0;
            for (auto* c : convs) {
                if (c->w.head) {
                    c->w.trainable = c->b.trainable = true;  // fresh head, trained fully
                    continue;
                }
                c->w.trainable = false;
                c->b.trainable = true;  // biases stay trainable under LoRA
                if (selector_matches(s.selector, c->w.tag, c->w.head)) {
                    attach_lora<ConvT, T>(*c, s.rank, s.alpha, r);
                    ++selected;
                }
            }
            if (selected == 0) throw std::invalid_argument("LoRA selector matched no layers");
            return;
        }
    }
}

}  // namespace detail_adapt

// Transform the model in place for the chosen fine-tuning strategy. Output
// is unchanged at the moment of application for every strategy.
template <typename T>
void apply_strategy(SegNet2D<T>& model, const FineTuneStrategy& s, RngStream& rng) {
    detail_adapt::apply_to_convs<T>(model.conv_layers(), s, rng);
}

template <typename T, typename Net>
std::vector<Param<T>*> trainable_parameters(Net& net) {
    std::vector<Param<T>*> out;
    for (auto* p : net.parameters())
        if (p->trainable) out.push_back(p);
    return out;
}

// Fold each adapter into its base weight (W <- W + (alpha/r) B A) and drop
// the adapter. Forward outputs are preserved up to rounding.
template <typename T, typename Net>
void merge_lora(Net& net) {
    for (auto* c : net.conv_layers()) {
        if (!c->lora) continue;
        c->w.value = c->effective_weight();
        c->lora.reset();
    }
}

}  // namespace coseg
