#pragma once

namespace ganspire::encoder {

template <class T, class Core>
double code_loss_and_gradient(const gan::ModelT<T>& model, const Core& core, double calibration_max,
                              const perception::EmbeddingT<T>& target, const std::vector<T>& code,
                              std::vector<T>* dcode) {
    gan::SynthesisCache<T> cache;
    model.synth_forward(code, model.pinned_noise, cache);
    // tanh output in [-1, 1] -> [0, 1] image, without clamping.
    nn::Tensor<T> img = cache.out;
    for (auto& v : img.v) v = T(0.5) * (v + T(1));
    nn::Tensor<T> g;
    const double raw = core.raw_and_gradient(img, target, dcode ? &g : nullptr);
    if (dcode != nullptr) {
        const T s = static_cast<T>(0.5 / calibration_max);
        for (auto& v : g.v) v *= s;
        model.synth_backward(cache, model.pinned_noise, g, nullptr, dcode);
    }
    return raw / calibration_max;
}

}  // namespace ganspire::encoder
