#include "ganspire/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ganspire/errors.hpp"
#include "ganspire/fid.hpp"
#include "ganspire/simd/kernels.hpp"

namespace ganspire::gan {

double learning_rate_for_resolution(int resolution) {
    if (resolution <= 128) return 0.0015;
    if (resolution <= 512) return 0.002;
    return 0.003;
}

bool EarlyStopper::push(double value) {
    if (count_ == 0 || value < best_) {
        best_ = value;
        best_index_ = count_;
    }
    if (count_ > 0 && value > last_)
        ++rising_;
    else
        rising_ = 0;
    last_ = value;
    ++count_;
    if (rising_ >= patience_) stopped_ = true;
    return stopped_;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"max_steps", c.max_steps},   {"batch", c.batch},
                       {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
                       {"beta2", c.beta2},           {"adam_eps", c.adam_eps},
                       {"r1_gamma", c.r1_gamma},     {"r1_fd_eps", c.r1_fd_eps},
                       {"hyper_interval", c.hyper_interval}, {"fid_interval", c.fid_interval},
                       {"fid_samples", c.fid_samples}, {"patience", c.patience},
                       {"mixing_prob", c.mixing_prob}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    c.max_steps = j.value("max_steps", c.max_steps);
    c.batch = j.value("batch", c.batch);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.r1_gamma = j.value("r1_gamma", c.r1_gamma);
    c.r1_fd_eps = j.value("r1_fd_eps", c.r1_fd_eps);
    c.hyper_interval = j.value("hyper_interval", c.hyper_interval);
    c.fid_interval = j.value("fid_interval", c.fid_interval);
    c.fid_samples = j.value("fid_samples", c.fid_samples);
    c.patience = j.value("patience", c.patience);
    c.mixing_prob = j.value("mixing_prob", c.mixing_prob);
    c.seed = j.value("seed", c.seed);
}

namespace {

using Params = std::vector<std::vector<float>*>;

class Adam {
public:
    explicit Adam(const Params& params) {
        for (auto* p : params) {
            m_.emplace_back(p->size(), 0.0f);
            v_.emplace_back(p->size(), 0.0f);
        }
    }

    void step(const Params& params, const Params& grads, double lr, double b1, double b2, double eps) {
        ++t_;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        const double alpha = lr * std::sqrt(c2) / c1;
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& p = *params[k];
            const auto& g = *grads[k];
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = static_cast<float>(b1 * m[i] + (1.0 - b1) * g[i]);
                v[i] = static_cast<float>(b2 * v[i] + (1.0 - b2) * g[i] * g[i]);
                p[i] -= static_cast<float>(alpha * m[i] / (std::sqrt(static_cast<double>(v[i])) + eps));
            }
        }
    }

private:
    std::vector<std::vector<float>> m_, v_;
    std::int64_t t_ = 0;
};

template <class Net>
Params collect(Net& net) {
    Params out;
    net.for_each_param([&](const std::string&, std::vector<float>& v) { out.push_back(&v); });
    return out;
}

void zero(const Params& ps) {
    for (auto* p : ps) std::fill(p->begin(), p->end(), 0.0f);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool all_finite(const Params& ps) {
    for (const auto* p : ps)
        for (float v : *p)
            if (!std::isfinite(v)) return false;
    return true;
}

// Generator forward with fresh noise. With probability `mixing_prob` the
// code switches from w1 to w2 at a random crossover slot (style mixing).
struct Fake {
    MappingCache<float> map1, map2;
    int crossover = 0;  // rows >= crossover come from w2; == S when unmixed
    SynthesisCache<float> synth;
    NoiseMaps<float> noise;
};

void generate(const Model& model, double mixing_prob, std::mt19937_64& rng, Fake& f) {
    const int S = model.config.slots();
    const int d = model.config.latent_dim;
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<float> z(d), w1, w2;
    for (auto& v : z) v = static_cast<float>(nd(rng));
    model.map_forward(z, w1, &f.map1);
    StyleCode code = broadcast(w1, S);
    f.crossover = S;
    if (mixing_prob > 0 && std::bernoulli_distribution(mixing_prob)(rng)) {
        for (auto& v : z) v = static_cast<float>(nd(rng));
        model.map_forward(z, w2, &f.map2);
        f.crossover = std::uniform_int_distribution<int>(1, S - 1)(rng);
        for (int s = f.crossover; s < S; ++s) std::copy(w2.begin(), w2.end(), code.row(s).begin());
    }
    f.noise = model.sample_noise(rng);
    model.synth_forward(code.values, f.noise, f.synth);
}

}  // namespace

TrainResult train(std::span<const Image> corpus, const GeneratorConfig& gcfg, const TrainConfig& tcfg,
                  const ProgressFn& progress) {
    if (corpus.empty()) throw InputError("training corpus is empty");
    const int res = gcfg.final_resolution();
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (corpus[i].width != res || corpus[i].height != res)
            throw InputError("corpus image " + std::to_string(i) + " is " + std::to_string(corpus[i].width) + "x" +
                             std::to_string(corpus[i].height) + ", generator resolution is " + std::to_string(res));
    if (tcfg.batch < 1 || tcfg.max_steps < 1 || tcfg.fid_interval < 1 || tcfg.hyper_interval < 1)
        throw InputError("invalid training configuration");

    Model model(gcfg);
    Model grad = model.zeros_like();
    Model tmp = model.zeros_like();

    Params g_params = collect(model.mapping);
    for (auto* p : collect(model.synthesis)) g_params.push_back(p);
    Params g_grads = collect(grad.mapping);
    for (auto* p : collect(grad.synthesis)) g_grads.push_back(p);
    const Params d_params = collect(model.discriminator);
    const Params d_grads = collect(grad.discriminator);
    const Params tmp_grads = collect(tmp.discriminator);
    Adam adam_g(g_params), adam_d(d_params);

    std::vector<nn::Tensor<float>> reals;
    reals.reserve(corpus.size());
    for (const auto& img : corpus) reals.push_back(to_network_input(img));

    const fid::FeatureExtractor fx;
    std::vector<std::vector<double>> real_features;
    {
        std::mt19937_64 pick(tcfg.seed ^ 0x5eedULL);
        std::vector<std::size_t> idx(corpus.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), pick);
        const std::size_t n = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(2, tcfg.fid_samples)));
        for (std::size_t i = 0; i < n; ++i) real_features.push_back(fx.features(corpus[idx[i]]));
    }
    // Fixed evaluation latents so successive FID values are comparable.
    std::vector<std::vector<float>> eval_z;
    {
        std::mt19937_64 erng(tcfg.seed ^ 0xfeedULL);
        for (int i = 0; i < std::max(2, tcfg.fid_samples); ++i) eval_z.push_back(random_latent(model, erng));
    }
    auto evaluate_fid = [&]() {
        std::vector<std::vector<double>> fake;
        for (const auto& z : eval_z) fake.push_back(fx.features(synthesize(model, broadcast(map_latent(model, z), gcfg.slots()))));
        return fid::compute_fid(real_features, fake);
    };

    TrainResult result;
    EarlyStopper stopper(tcfg.patience);
    std::mt19937_64 rng(tcfg.seed);
    std::uniform_int_distribution<std::size_t> pick_real(0, reals.size() - 1);
    const float inv_b = 1.0f / static_cast<float>(tcfg.batch);
    double lr = tcfg.learning_rate > 0 ? tcfg.learning_rate : learning_rate_for_resolution(res);
    std::size_t fid_evals = 0;

    for (std::int64_t step = 1; step <= tcfg.max_steps; ++step) {
        if ((step - 1) % tcfg.hyper_interval == 0)
            lr = tcfg.learning_rate > 0 ? tcfg.learning_rate : learning_rate_for_resolution(res);
        StepLog log;
        log.step = step;
        log.learning_rate = lr;

        // Discriminator step.
        zero(d_grads);
        for (int b = 0; b < tcfg.batch; ++b) {
            Fake f;
            generate(model, tcfg.mixing_prob, rng, f);
            DiscriminatorCache<float> dc;
            const double lf = model.disc_forward(f.synth.out, &dc);
            log.d_loss += softplus(lf) / tcfg.batch;
            model.disc_backward(dc, static_cast<float>(sigmoid(lf)) * inv_b, &grad.discriminator, nullptr);

            const auto& x = reals[pick_real(rng)];
            const double lr_logit = model.disc_forward(x, &dc);
            log.d_loss += softplus(-lr_logit) / tcfg.batch;
            model.disc_backward(dc, static_cast<float>(-sigmoid(-lr_logit)) * inv_b, &grad.discriminator, nullptr);

            if (tcfg.r1_gamma > 0) {
                // R1 = gamma/2 |grad_x D(x)|^2. Its parameter gradient is the
                // mixed second derivative applied to g = grad_x D(x), taken as
                // a central difference of grad_theta D along g.
                nn::Tensor<float> g;
                model.disc_backward(dc, 1.0f, nullptr, &g);
                const double gnorm2 = simd::dot(g.v.data(), g.v.data(), g.size());
                const double gnorm = std::sqrt(gnorm2);
                log.r1 += 0.5 * tcfg.r1_gamma * gnorm2 / tcfg.batch;
                if (gnorm > 0) {
                    const float h = static_cast<float>(tcfg.r1_fd_eps);
                    const float coef = static_cast<float>(tcfg.r1_gamma * gnorm / (2.0 * tcfg.r1_fd_eps)) * inv_b;
                    for (int sign : {1, -1}) {
                        nn::Tensor<float> xp = x;
                        simd::axpy(sign * h / static_cast<float>(gnorm), g.v.data(), xp.v.data(), xp.size());
                        zero(tmp_grads);
                        DiscriminatorCache<float> pc;
                        model.disc_forward(xp, &pc);
                        model.disc_backward(pc, 1.0f, &tmp.discriminator, nullptr);
                        for (std::size_t k = 0; k < d_grads.size(); ++k)
                            simd::axpy(sign * coef, tmp_grads[k]->data(), d_grads[k]->data(), d_grads[k]->size());
                    }
                }
            }
        }
        if (!std::isfinite(log.d_loss) || !std::isfinite(log.r1) || !all_finite(d_grads))
            throw DivergenceError("discriminator loss became non-finite at step " + std::to_string(step) +
                                  " (d_loss=" + std::to_string(log.d_loss) + ", r1=" + std::to_string(log.r1) + ")");
        adam_d.step(d_params, d_grads, lr, tcfg.beta1, tcfg.beta2, tcfg.adam_eps);

        // Generator step.
        zero(g_grads);
        for (int b = 0; b < tcfg.batch; ++b) {
            Fake f;
            generate(model, tcfg.mixing_prob, rng, f);
            DiscriminatorCache<float> dc;
            const double l = model.disc_forward(f.synth.out, &dc);
            log.g_loss += softplus(-l) / tcfg.batch;
            nn::Tensor<float> dimg;
            model.disc_backward(dc, static_cast<float>(-sigmoid(-l)) * inv_b, nullptr, &dimg);
            std::vector<float> dcode;
            model.synth_backward(f.synth, f.noise, dimg, &grad.synthesis, &dcode);
            std::vector<float> dw1(gcfg.latent_dim, 0.0f), dw2(gcfg.latent_dim, 0.0f);
            for (int s = 0; s < gcfg.slots(); ++s) {
                auto& dst = s < f.crossover ? dw1 : dw2;
                simd::axpy(1.0f, dcode.data() + static_cast<std::size_t>(s) * gcfg.latent_dim, dst.data(), dst.size());
            }
            model.map_backward(f.map1, dw1, &grad.mapping);
            if (f.crossover < gcfg.slots()) model.map_backward(f.map2, dw2, &grad.mapping);
        }
        if (!std::isfinite(log.g_loss) || !all_finite(g_grads))
            throw DivergenceError("generator loss became non-finite at step " + std::to_string(step) +
                                  " (g_loss=" + std::to_string(log.g_loss) + ")");
        adam_g.step(g_params, g_grads, lr, tcfg.beta1, tcfg.beta2, tcfg.adam_eps);

        result.log.push_back(log);
        result.steps_run = step;

        std::optional<double> fid_value;
        if (step % tcfg.fid_interval == 0 || step == tcfg.max_steps) {
            fid_value = fid_evals < tcfg.injected_fid.size() ? tcfg.injected_fid[fid_evals] : evaluate_fid();
            ++fid_evals;
            result.fid_history.push_back({step, *fid_value});
            stopper.push(*fid_value);
            if (stopper.best_index() + 1 == stopper.size()) {
                result.best.model = model;
                result.best.step = step;
            }
        }
        if (progress) progress(log, fid_value);
        if (stopper.stopped()) {
            result.early_stopped = true;
            break;
        }
    }
    result.best.fid_history = result.fid_history;
    return result;
}

}  // namespace ganspire::gan
