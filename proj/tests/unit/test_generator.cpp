#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ganspire/checkpoint.hpp"
#include "ganspire/errors.hpp"
#include "ganspire/generator.hpp"
#include "test_util.hpp"

using namespace ganspire;
using namespace ganspire::gan;

namespace {

using DModel = ModelT<double>;

DModel perturbed_double_model(std::uint64_t seed) {
    DModel m = Model(testutil::tiny_config()).cast<double>();
    std::mt19937_64 rng(seed);
    for (auto& s : m.synthesis.slots) {
        testutil::randomize(s.noise_strength, rng, 0.3);
        testutil::randomize(s.bias, rng, 0.3);
    }
    testutil::randomize(m.synthesis.const_input.v, rng, 1.0);
    return m;
}

double synth_objective(const DModel& m, const std::vector<double>& code, const nn::Tensor<double>& r) {
    SynthesisCache<double> c;
    m.synth_forward(code, m.pinned_noise, c);
    double acc = 0;
    for (std::size_t i = 0; i < r.v.size(); ++i) acc += c.out.v[i] * r.v[i];
    return acc;
}

}  // namespace

TEST(GeneratorConfig, SlotsAndResolution) {
    GeneratorConfig c;
    c.levels = 4;
    EXPECT_EQ(c.slots(), 8);
    EXPECT_EQ(c.final_resolution(), 32);
    c.levels = 8;
    EXPECT_EQ(c.slots(), 16);
    EXPECT_EQ(c.final_resolution(), 512);
    c.levels = 1;
    EXPECT_THROW(c.validate(), InputError);
}

TEST(GeneratorConfig, JsonRoundTrip) {
    GeneratorConfig c = testutil::tiny_config();
    c.seed = 99;
    nlohmann::json j = c;
    GeneratorConfig d = j.get<GeneratorConfig>();
    EXPECT_EQ(d.levels, c.levels);
    EXPECT_EQ(d.latent_dim, c.latent_dim);
    EXPECT_EQ(d.seed, 99u);
}

TEST(Broadcast, EveryRowEqualsW) {
    std::vector<float> w = {1.5f, -2.0f, 0.25f};
    for (int S : {2, 16}) {
        StyleCode code = broadcast(w, S);
        ASSERT_EQ(code.slots, S);
        for (int s = 0; s < S; ++s)
            for (std::size_t k = 0; k < w.size(); ++k) EXPECT_EQ(code.row(s)[k], w[k]);
    }
}

TEST(MapLatent, DeterministicAndValidated) {
    Model m(testutil::tiny_config());
    std::vector<float> z(8, 0.0f);
    auto w1 = map_latent(m, z);
    auto w2 = map_latent(m, z);
    EXPECT_EQ(w1, w2);
    for (float v : w1) EXPECT_TRUE(std::isfinite(v));
    EXPECT_THROW(map_latent(m, std::vector<float>(7, 0.0f)), InputError);
    z[3] = std::nanf("");
    EXPECT_THROW(map_latent(m, z), InputError);
}

TEST(Synthesize, ShapeRangeAndDeterminism) {
    Model m(testutil::tiny_config());
    std::mt19937_64 rng(3);
    StyleCode code = broadcast(map_latent(m, random_latent(m, rng)), m.config.slots());
    Image a = synthesize(m, code);
    Image b = synthesize(m, code);
    EXPECT_EQ(a.width, 16);
    EXPECT_EQ(a.height, 16);
    EXPECT_EQ(a, b);
    for (float v : a.data) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
    StyleCode bad(m.config.slots() - 1, m.config.latent_dim);
    EXPECT_THROW(synthesize(m, bad), ContractError);
}

TEST(Discriminator, TotalAndShapeChecked) {
    Model m(testutil::tiny_config());
    EXPECT_TRUE(std::isfinite(discriminator_score(m, Image(16, 16, 0.0f))));
    EXPECT_TRUE(std::isfinite(discriminator_score(m, Image(16, 16, 1.0f))));
    std::mt19937_64 rng(1);
    Image x = testutil::random_image(rng, 16, 16);
    EXPECT_EQ(discriminator_score(m, x), discriminator_score(m, x));
    EXPECT_THROW(discriminator_score(m, Image(8, 8)), ContractError);
}

TEST(GeneratorGradients, SynthesisCodeAndParameters) {
    DModel m = perturbed_double_model(5);
    std::mt19937_64 rng(8);
    std::vector<double> code(static_cast<std::size_t>(m.config.slots()) * m.config.latent_dim);
    testutil::randomize(code, rng, 1.0);
    nn::Tensor<double> r(3, 16, 16);
    testutil::randomize(r.v, rng, 1.0);

    SynthesisCache<double> cache;
    m.synth_forward(code, m.pinned_noise, cache);
    Synthesis<double> grad = m.zeros_like().synthesis;
    std::vector<double> dcode;
    m.synth_backward(cache, m.pinned_noise, r, &grad, &dcode);

    const double h = 1e-6;
    std::uniform_int_distribution<std::size_t> pick(0, code.size() - 1);
    for (int t = 0; t < 12; ++t) {
        const std::size_t i = pick(rng);
        auto cp = code, cm = code;
        cp[i] += h;
        cm[i] -= h;
        const double fd = (synth_objective(m, cp, r) - synth_objective(m, cm, r)) / (2 * h);
        EXPECT_LT(testutil::rel_err(fd, dcode[i]), 1e-4) << "code index " << i;
    }

    // Parameter gradients, one entry per tensor.
    std::vector<std::pair<std::string, std::vector<double>*>> params, grads;
    m.synthesis.for_each_param([&](const std::string& n, std::vector<double>& v) { params.push_back({n, &v}); });
    grad.for_each_param([&](const std::string& n, std::vector<double>& v) { grads.push_back({n, &v}); });
    ASSERT_EQ(params.size(), grads.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& v = *params[k].second;
        const std::size_t i = v.size() / 2;
        const double orig = v[i];
        v[i] = orig + h;
        const double fp = synth_objective(m, code, r);
        v[i] = orig - h;
        const double fm = synth_objective(m, code, r);
        v[i] = orig;
        const double fd = (fp - fm) / (2 * h);
        const double an = (*grads[k].second)[i];
        if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9) continue;
        EXPECT_LT(testutil::rel_err(fd, an), 1e-4) << params[k].first;
    }
}

TEST(GeneratorGradients, DiscriminatorInputAndParameters) {
    DModel m = perturbed_double_model(6);
    std::mt19937_64 rng(9);
    nn::Tensor<double> x(3, 16, 16);
    testutil::randomize(x.v, rng, 0.5);

    DiscriminatorCache<double> cache;
    m.disc_forward(x, &cache);
    Discriminator<double> grad = m.zeros_like().discriminator;
    nn::Tensor<double> dx;
    m.disc_backward(cache, 1.0, &grad, &dx);

    const double h = 1e-6;
    std::uniform_int_distribution<std::size_t> pick(0, x.v.size() - 1);
    for (int t = 0; t < 12; ++t) {
        const std::size_t i = pick(rng);
        auto xp = x, xm = x;
        xp.v[i] += h;
        xm.v[i] -= h;
        const double fd = (m.disc_forward(xp, nullptr) - m.disc_forward(xm, nullptr)) / (2 * h);
        EXPECT_LT(testutil::rel_err(fd, dx.v[i]), 1e-4) << "pixel " << i;
    }
    std::vector<std::pair<std::string, std::vector<double>*>> params, grads;
    m.discriminator.for_each_param([&](const std::string& n, std::vector<double>& v) { params.push_back({n, &v}); });
    grad.for_each_param([&](const std::string& n, std::vector<double>& v) { grads.push_back({n, &v}); });
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& v = *params[k].second;
        const std::size_t i = v.size() / 3;
        const double orig = v[i];
        v[i] = orig + h;
        const double fp = m.disc_forward(x, nullptr);
        v[i] = orig - h;
        const double fm = m.disc_forward(x, nullptr);
        v[i] = orig;
        const double fd = (fp - fm) / (2 * h);
        const double an = (*grads[k].second)[i];
        if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9) continue;
        EXPECT_LT(testutil::rel_err(fd, an), 1e-4) << params[k].first;
    }
}

TEST(GeneratorGradients, MappingNetwork) {
    DModel m = perturbed_double_model(7);
    std::mt19937_64 rng(10);
    std::vector<double> z(8), r(8);
    testutil::randomize(z, rng, 1.0);
    testutil::randomize(r, rng, 1.0);
    auto objective = [&](const DModel& mm) {
        std::vector<double> w;
        mm.map_forward(z, w, nullptr);
        double acc = 0;
        for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * r[i];
        return acc;
    };
    MappingCache<double> cache;
    std::vector<double> w;
    m.map_forward(z, w, &cache);
    Mapping<double> grad = m.zeros_like().mapping;
    m.map_backward(cache, r, &grad);
    const double h = 1e-6;
    for (std::size_t l = 0; l < m.mapping.layers.size(); ++l) {
        for (std::size_t i : {std::size_t{0}, std::size_t{17}}) {
            auto& v = m.mapping.layers[l].weight;
            const double orig = v[i];
            v[i] = orig + h;
            const double fp = objective(m);
            v[i] = orig - h;
            const double fm = objective(m);
            v[i] = orig;
            EXPECT_LT(testutil::rel_err((fp - fm) / (2 * h), grad.layers[l].weight[i]), 1e-4) << "layer " << l;
        }
    }
}

TEST(Checkpoint, RoundTripIsBitExact) {
    Checkpoint ck;
    ck.model = Model(testutil::tiny_config());
    std::mt19937_64 rng(4);
    ck.model.for_each_param([&](const std::string&, std::vector<float>& v) { testutil::randomize(v, rng, 0.7); });
    ck.step = 120;
    ck.fid_history = {{50, 31.5}, {100, 29.25}, {120, 30.0}};
    const auto dir = testutil::temp_dir("ckpt");
    save_checkpoint(ck, dir / "a.ckpt");
    Checkpoint back = load_checkpoint(dir / "a.ckpt");
    EXPECT_EQ(back.step, 120);
    EXPECT_EQ(back.fid_history, ck.fid_history);
    std::vector<std::vector<float>> a, b;
    ck.model.for_each_param([&](const std::string&, const std::vector<float>& v) { a.push_back(v); });
    back.model.for_each_param([&](const std::string&, const std::vector<float>& v) { b.push_back(v); });
    EXPECT_EQ(a, b);
    StyleCode code = broadcast(map_latent(ck.model, random_latent(ck.model, rng)), ck.model.config.slots());
    EXPECT_EQ(synthesize(ck.model, code), synthesize(back.model, code));

    // Saving the loaded checkpoint reproduces the file byte for byte.
    save_checkpoint(back, dir / "b.ckpt");
    EXPECT_EQ(read_file_bytes(dir / "a.ckpt"), read_file_bytes(dir / "b.ckpt"));
}

TEST(Checkpoint, RejectsCorruptFiles) {
    const auto dir = testutil::temp_dir("ckpt_bad");
    const std::string junk = "not a checkpoint at all";
    write_file_bytes(dir / "junk.ckpt", std::span<const std::uint8_t>(
                                            reinterpret_cast<const std::uint8_t*>(junk.data()), junk.size()));
    EXPECT_THROW(load_checkpoint(dir / "junk.ckpt"), ParseError);

    Checkpoint ck;
    ck.model = Model(testutil::tiny_config());
    save_checkpoint(ck, dir / "ok.ckpt");
    auto bytes = read_file_bytes(dir / "ok.ckpt");
    bytes.resize(bytes.size() - 100);
    write_file_bytes(dir / "trunc.ckpt", bytes);
    EXPECT_THROW(load_checkpoint(dir / "trunc.ckpt"), ParseError);

    ck.fid_history = {{10, 1.0}, {10, 2.0}};
    EXPECT_THROW(save_checkpoint(ck, dir / "x.ckpt"), ContractError);
}
