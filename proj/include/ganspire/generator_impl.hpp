#pragma once

// Template bodies for generator.hpp.

namespace ganspire::gan {

template <class T>
ModelT<T>::ModelT(const GeneratorConfig& cfg) : config(cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    const T sqrt2 = static_cast<T>(nn::kSqrt2);
    const int d = cfg.latent_dim;
    const int R = cfg.levels;

    for (int i = 0; i < cfg.mapping_layers; ++i)
        mapping.layers.push_back(nn::make_dense<T>(d, d, sqrt2, T(0.01), rng));

    synthesis.const_input = nn::Tensor<T>(cfg.channels(0), 4, 4, T(1));
    for (int s = 0; s < cfg.slots(); ++s) {
        const int level = s / 2;
        const int C = cfg.channels(level);
        SynthesisSlot<T> slot;
        if (s > 0) {
            const int cin = (s % 2 == 0) ? cfg.channels(level - 1) : C;
            slot.conv = nn::make_conv<T>(cin, C, 3, sqrt2, false, rng);
        }
        slot.noise_strength.assign(C, T(0));
        slot.bias.assign(C, T(0));
        slot.style = nn::make_dense<T>(d, 2 * C, T(1), T(1), rng);
        synthesis.slots.push_back(std::move(slot));
    }
    synthesis.to_rgb = nn::make_conv<T>(cfg.channels(R - 1), 3, 1, T(1), true, rng);

    discriminator.from_rgb = nn::make_conv<T>(3, cfg.channels(R - 1), 1, sqrt2, true, rng);
    for (int level = R - 1; level >= 1; --level) {
        discriminator.convs.push_back(nn::make_conv<T>(cfg.channels(level), cfg.channels(level), 3, sqrt2, true, rng));
        discriminator.convs.push_back(
            nn::make_conv<T>(cfg.channels(level), cfg.channels(level - 1), 3, sqrt2, true, rng));
    }
    discriminator.convs.push_back(nn::make_conv<T>(cfg.channels(0), cfg.channels(0), 3, sqrt2, true, rng));
    discriminator.fc = nn::make_dense<T>(cfg.channels(0) * 16, cfg.channels(0), sqrt2, T(1), rng);
    discriminator.out = nn::make_dense<T>(cfg.channels(0), 1, T(1), T(1), rng);

    std::mt19937_64 noise_rng(cfg.noise_seed);
    pinned_noise = sample_noise(noise_rng);
}

template <class T>
NoiseMaps<T> ModelT<T>::sample_noise(std::mt19937_64& rng) const {
    std::normal_distribution<double> nd(0.0, 1.0);
    NoiseMaps<T> maps(config.slots());
    for (int s = 0; s < config.slots(); ++s) {
        const int res = config.resolution_at(s / 2);
        maps[s].resize(static_cast<std::size_t>(res) * res);
        for (auto& v : maps[s]) v = static_cast<T>(nd(rng));
    }
    return maps;
}

template <class T>
template <class U>
ModelT<U> ModelT<T>::cast() const {
    ModelT<U> out;
    out.config = config;
    for (const auto& l : mapping.layers) out.mapping.layers.push_back(l.template cast<U>());
    out.synthesis.const_input = synthesis.const_input.template cast<U>();
    for (const auto& s : synthesis.slots) {
        SynthesisSlot<U> slot;
        slot.conv = s.conv.template cast<U>();
        slot.noise_strength.assign(s.noise_strength.begin(), s.noise_strength.end());
        slot.bias.assign(s.bias.begin(), s.bias.end());
        slot.style = s.style.template cast<U>();
        out.synthesis.slots.push_back(std::move(slot));
    }
    out.synthesis.to_rgb = synthesis.to_rgb.template cast<U>();
    out.discriminator.from_rgb = discriminator.from_rgb.template cast<U>();
    for (const auto& c : discriminator.convs) out.discriminator.convs.push_back(c.template cast<U>());
    out.discriminator.fc = discriminator.fc.template cast<U>();
    out.discriminator.out = discriminator.out.template cast<U>();
    for (const auto& n : pinned_noise) out.pinned_noise.emplace_back(n.begin(), n.end());
    return out;
}

template <class T>
ModelT<T> ModelT<T>::zeros_like() const {
    ModelT<T> out = *this;
    out.for_each_param([](const std::string&, std::vector<T>& v) { std::fill(v.begin(), v.end(), T(0)); });
    return out;
}

template <class T>
void ModelT<T>::map_forward(const std::vector<T>& z, std::vector<T>& w, MappingCache<T>* cache) const {
    std::vector<T> x;
    const T r = nn::pixel_norm_forward(z, x);
    if (cache != nullptr) {
        cache->z = z;
        cache->norm_scale = r;
        cache->inputs.clear();
        cache->outputs.clear();
    }
    std::vector<T> y;
    for (const auto& layer : mapping.layers) {
        if (cache != nullptr) cache->inputs.push_back(x);
        nn::dense_forward(layer, x, y);
        nn::lrelu_forward(y);
        if (cache != nullptr) cache->outputs.push_back(y);
        x.swap(y);
    }
    w = std::move(x);
}

template <class T>
void ModelT<T>::map_backward(const MappingCache<T>& cache, const std::vector<T>& dw, Mapping<T>* grad) const {
    std::vector<T> d = dw;
    std::vector<T> dprev;
    for (int i = static_cast<int>(mapping.layers.size()) - 1; i >= 0; --i) {
        nn::lrelu_backward(cache.outputs[i], d);
        nn::dense_backward(mapping.layers[i], cache.inputs[i], d, grad ? &grad->layers[i] : nullptr,
                           i > 0 ? &dprev : nullptr);
        d.swap(dprev);
    }
}

template <class T>
void ModelT<T>::synth_forward(const std::vector<T>& code, const NoiseMaps<T>& noise, SynthesisCache<T>& cache) const {
    const int S = config.slots();
    const int d = config.latent_dim;
    if (code.size() != static_cast<std::size_t>(S) * d)
        throw ContractError("style code has " + std::to_string(code.size()) + " values, expected " +
                            std::to_string(S * d));
    cache.slots.resize(S);
    nn::Tensor<T> x;
    nn::Tensor<T> pre;
    std::vector<T> style_out;
    for (int s = 0; s < S; ++s) {
        const auto& slot = synthesis.slots[s];
        auto& sc = cache.slots[s];
        const int C = config.channels(s / 2);
        if (s == 0) {
            pre = synthesis.const_input;
        } else if (s % 2 == 0) {
            nn::Tensor<T> up;
            nn::upsample2x(x, up);
            sc.upsampled_from_h = x.h;
            nn::conv_forward(slot.conv, up, pre, sc.conv);
        } else {
            nn::conv_forward(slot.conv, x, pre, sc.conv);
        }
        nn::add_noise(pre, slot.noise_strength, noise[s]);
        nn::add_channel_bias(pre, slot.bias);
        nn::lrelu_forward(pre.v);
        sc.act = pre;
        sc.style_in.assign(code.begin() + static_cast<std::ptrdiff_t>(s) * d,
                           code.begin() + static_cast<std::ptrdiff_t>(s + 1) * d);
        nn::dense_forward(slot.style, sc.style_in, style_out);
        nn::adain_forward(sc.act, style_out.data(), style_out.data() + C, x, sc.adain);
    }
    nn::conv_forward(synthesis.to_rgb, x, cache.out, cache.rgb);
    nn::tanh_forward(cache.out.v);
}

template <class T>
void ModelT<T>::synth_backward(const SynthesisCache<T>& cache, const NoiseMaps<T>& noise, const nn::Tensor<T>& dout,
                               Synthesis<T>* grad, std::vector<T>* dcode) const {
    const int S = config.slots();
    const int d = config.latent_dim;
    nn::Tensor<T> dpre = dout;
    nn::tanh_backward(cache.out.v, dpre.v);
    nn::Tensor<T> dx;
    nn::conv_backward(synthesis.to_rgb, cache.rgb, dpre, grad ? &grad->to_rgb : nullptr, &dx);
    if (dcode != nullptr) dcode->assign(static_cast<std::size_t>(S) * d, T(0));

    std::vector<T> dstyle;
    std::vector<T> dw;
    nn::Tensor<T> dact;
    for (int s = S - 1; s >= 0; --s) {
        const auto& slot = synthesis.slots[s];
        const auto& sc = cache.slots[s];
        const int C = config.channels(s / 2);
        dstyle.assign(2 * C, T(0));
        nn::adain_backward(sc.adain, dx, dact, dstyle.data(), dstyle.data() + C);
        nn::dense_backward(slot.style, sc.style_in, dstyle, grad ? &grad->slots[s].style : nullptr,
                           dcode ? &dw : nullptr);
        if (dcode != nullptr) std::copy(dw.begin(), dw.end(), dcode->begin() + static_cast<std::ptrdiff_t>(s) * d);
        nn::lrelu_backward(sc.act.v, dact.v);
        if (grad != nullptr) {
            nn::channel_bias_backward(dact, grad->slots[s].bias);
            nn::noise_backward(dact, noise[s], grad->slots[s].noise_strength);
        }
        auto* gconv = grad ? &grad->slots[s].conv : nullptr;
        if (s == 0) {
            if (grad != nullptr)
                for (std::size_t i = 0; i < dact.v.size(); ++i) grad->const_input.v[i] += dact.v[i];
        } else if (s % 2 == 0) {
            nn::Tensor<T> dup;
            nn::conv_backward(slot.conv, sc.conv, dact, gconv, &dup);
            nn::upsample2x_backward(dup, dx);
        } else {
            nn::conv_backward(slot.conv, sc.conv, dact, gconv, &dx);
        }
    }
}

template <class T>
T ModelT<T>::disc_forward(const nn::Tensor<T>& image, DiscriminatorCache<T>* cache) const {
    const int res = config.final_resolution();
    if (image.c != 3 || image.h != res || image.w != res)
        throw ContractError("discriminator expects 3x" + std::to_string(res) + "x" + std::to_string(res) +
                            " input, got " + std::to_string(image.c) + "x" + std::to_string(image.h) + "x" +
                            std::to_string(image.w));
    DiscriminatorCache<T> local;
    DiscriminatorCache<T>& c = cache ? *cache : local;
    const auto& D = discriminator;
    c.convs.resize(D.convs.size());
    c.conv_acts.resize(D.convs.size());

    nn::conv_forward(D.from_rgb, image, c.from_rgb_act, c.from_rgb);
    nn::lrelu_forward(c.from_rgb_act.v);
    nn::Tensor<T> x = c.from_rgb_act;
    const std::size_t blocks = (D.convs.size() - 1) / 2;
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t j = 2 * b; j < 2 * b + 2; ++j) {
            nn::conv_forward(D.convs[j], x, c.conv_acts[j], c.convs[j]);
            nn::lrelu_forward(c.conv_acts[j].v);
            x = c.conv_acts[j];
        }
        nn::avgpool2x(c.conv_acts[2 * b + 1], x);
    }
    const std::size_t last = D.convs.size() - 1;
    nn::conv_forward(D.convs[last], x, c.conv_acts[last], c.convs[last]);
    nn::lrelu_forward(c.conv_acts[last].v);
    c.flat = c.conv_acts[last].v;
    nn::dense_forward(D.fc, c.flat, c.fc_act);
    nn::lrelu_forward(c.fc_act);
    std::vector<T> logit;
    nn::dense_forward(D.out, c.fc_act, logit);
    return logit[0];
}

template <class T>
void ModelT<T>::disc_backward(const DiscriminatorCache<T>& c, T dlogit, Discriminator<T>* grad,
                              nn::Tensor<T>* dimage) const {
    const auto& D = discriminator;
    std::vector<T> dh;
    nn::dense_backward(D.out, c.fc_act, std::vector<T>{dlogit}, grad ? &grad->out : nullptr, &dh);
    nn::lrelu_backward(c.fc_act, dh);
    std::vector<T> dflat;
    nn::dense_backward(D.fc, c.flat, dh, grad ? &grad->fc : nullptr, &dflat);

    const std::size_t last = D.convs.size() - 1;
    nn::Tensor<T> dy = c.conv_acts[last];
    dy.v = std::move(dflat);
    nn::lrelu_backward(c.conv_acts[last].v, dy.v);
    nn::Tensor<T> dx;
    nn::conv_backward(D.convs[last], c.convs[last], dy, grad ? &grad->convs[last] : nullptr, &dx);

    const std::size_t blocks = (D.convs.size() - 1) / 2;
    for (std::size_t b = blocks; b-- > 0;) {
        nn::avgpool2x_backward(dx, dy);
        for (std::size_t j = 2 * b + 2; j-- > 2 * b;) {
            nn::lrelu_backward(c.conv_acts[j].v, dy.v);
            nn::conv_backward(D.convs[j], c.convs[j], dy, grad ? &grad->convs[j] : nullptr, &dx);
            dy = dx;
        }
        dx = dy;
    }
    nn::lrelu_backward(c.from_rgb_act.v, dx.v);
    nn::conv_backward(D.from_rgb, c.from_rgb, dx, grad ? &grad->from_rgb : nullptr, dimage);
}

}  // namespace ganspire::gan
