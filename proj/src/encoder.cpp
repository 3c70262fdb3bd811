#include "ganspire/encoder.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ganspire/errors.hpp"
#include "ganspire/simd/kernels.hpp"

namespace ganspire::encoder {

void EncodeConfig::validate() const {
    if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
    if (!(step_size > 0)) throw InputError("step_size must be > 0");
    if (init_mode != "mean_w" && init_mode != "seeded_random")
        throw InputError("init_mode must be mean_w or seeded_random, got '" + init_mode + "'");
    if (mean_w_samples < 1) throw InputError("mean_w_samples must be >= 1");
}

void to_json(nlohmann::json& j, const EncodeConfig& c) {
    j = nlohmann::json{{"max_iterations", c.max_iterations}, {"step_size", c.step_size},
                       {"init_mode", c.init_mode},           {"loss_floor", c.loss_floor},
                       {"seed", c.seed},                     {"mean_w_samples", c.mean_w_samples},
                       {"pixel_weight", c.pixel_weight}};
}

void from_json(const nlohmann::json& j, EncodeConfig& c) {
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.step_size = j.value("step_size", c.step_size);
    c.init_mode = j.value("init_mode", c.init_mode);
    c.loss_floor = j.value("loss_floor", c.loss_floor);
    c.seed = j.value("seed", c.seed);
    c.mean_w_samples = j.value("mean_w_samples", c.mean_w_samples);
    c.pixel_weight = j.value("pixel_weight", c.pixel_weight);
}

gan::StyleCode initial_code(const gan::Model& model, const EncodeConfig& cfg, const std::vector<float>* cached_mean_w) {
    const int S = model.config.slots();
    if (cfg.init_mode == "mean_w") {
        if (cached_mean_w != nullptr) return gan::broadcast(*cached_mean_w, S);
        return gan::broadcast(gan::mean_w(model, cfg.mean_w_samples, cfg.seed), S);
    }
    std::mt19937_64 rng(cfg.seed);
    return gan::broadcast(gan::map_latent(model, gan::random_latent(model, rng)), S);
}

namespace {

class Objective {
public:
    Objective(const Image& target, const gan::Model& model, const perception::Backend& backend, double pixel_weight)
        : target_(target), model_(model), backend_(backend), emb_(backend.embed(target)), pw_(pixel_weight) {}

    double operator()(const gan::StyleCode& code, std::vector<float>* dcode) const {
        gan::SynthesisCache<float> cache;
        model_.synth_forward(code.values, model_.pinned_noise, cache);
        Image img(cache.out.w, cache.out.h);
        for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = 0.5f * (cache.out.v[i] + 1.0f);
        Image g;
        double loss = backend_.loss_and_gradient(img, emb_, dcode ? &g : nullptr);
        if (pw_ > 0) {
            const double n = static_cast<double>(img.data.size());
            loss += pw_ * simd::sum_sq_diff(img.data.data(), target_.data.data(), img.data.size()) / n;
            if (dcode != nullptr)
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    g.data[i] += static_cast<float>(2.0 * pw_ / n) * (img.data[i] - target_.data[i]);
        }
        if (dcode != nullptr) {
            nn::Tensor<float> dout(3, img.height, img.width);
            for (std::size_t i = 0; i < dout.v.size(); ++i) dout.v[i] = 0.5f * g.data[i];
            model_.synth_backward(cache, model_.pinned_noise, dout, nullptr, dcode);
        }
        return loss;
    }

private:
    const Image& target_;
    const gan::Model& model_;
    const perception::Backend& backend_;
    perception::Embedding emb_;
    double pw_;
};

std::string trace_text(const std::vector<double>& trace) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < trace.size(); ++i) os << (i ? ", " : "") << trace[i];
    os << "]";
    return os.str();
}

}  // namespace

EncodeResult encode(const Image& target, const gan::Model& model, const perception::Backend& backend,
                    const EncodeConfig& cfg, const std::vector<float>* cached_mean_w) {
    cfg.validate();
    const int res = model.config.final_resolution();
    if (target.width != res || target.height != res)
        throw ContractError("encode target is " + std::to_string(target.width) + "x" + std::to_string(target.height) +
                            ", generator resolution is " + std::to_string(res));

    const Objective objective(target, model, backend, cfg.pixel_weight);
    gan::StyleCode code = initial_code(model, cfg, cached_mean_w);
    EncodeResult r;
    r.code = code;
    std::vector<float> grad;

    for (int it = 0; it <= cfg.max_iterations; ++it) {
        const bool last = it == cfg.max_iterations;
        const double loss = objective(code, last ? nullptr : &grad);
        r.iterate_trace.push_back(loss);
        if (!std::isfinite(loss))
            throw DivergenceError("encode: non-finite loss at iteration " + std::to_string(it) +
                                  "; trace so far " + trace_text(r.iterate_trace));
        bool finite_code = true;
        for (float v : code.values) finite_code = finite_code && std::isfinite(v);
        if (it == 0 || (finite_code && loss < r.final_loss)) {
            r.final_loss = loss;
            r.code = code;
            r.best_iteration = it;
        }
        r.loss_trace.push_back(r.final_loss);
        if (last || r.final_loss <= cfg.loss_floor) break;
        simd::axpy(static_cast<float>(-cfg.step_size), grad.data(), code.values.data(), code.values.size());
    }
    return r;
}

void save_code(const std::filesystem::path& path, const gan::StyleCode& code, double final_loss) {
    std::string bytes;
    bytes.reserve(code.values.size() * 4);
    for (float f : code.values) {
        const auto bits = std::bit_cast<std::uint32_t>(f);
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    std::ofstream side(path.string() + ".json", std::ios::trunc);
    side << nlohmann::json{{"slots", code.slots}, {"dim", code.dim}, {"final_loss", final_loss}}.dump(2) << "\n";
}

gan::StyleCode load_code(const std::filesystem::path& path) {
    nlohmann::json side;
    try {
        std::ifstream in(path.string() + ".json");
        if (!in) throw InputError("missing sidecar " + path.string() + ".json");
        side = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ".json", e.what());
    }
    gan::StyleCode code(side.at("slots").get<int>(), side.at("dim").get<int>());
    const auto bytes = read_file_bytes(path);
    if (bytes.size() != code.values.size() * 4)
        throw ParseError(path.string(), "expected " + std::to_string(code.values.size() * 4) + " bytes, found " +
                                            std::to_string(bytes.size()));
    for (std::size_t i = 0; i < code.values.size(); ++i) {
        const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                                   (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                                   (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                                   (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
        code.values[i] = std::bit_cast<float>(bits);
    }
    return code;
}

}  // namespace ganspire::encoder
