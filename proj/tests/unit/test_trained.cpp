// Properties of the trained toy model (built by the toy ctest fixture).

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "toy_checks.hpp"

using namespace ganspire;

namespace {

const toy::World& world() {
    static const auto w = toy::load();
    return *w;
}

}  // namespace

TEST(TrainedModel, FineSlotChangesLessThanCoarseSlot) {
    const auto d = toy::slot_deltas(world().model(), 20, 1234);
    std::string all;
    for (double v : d) all += std::to_string(v) + " ";
    EXPECT_LT(d.back(), d.front()) << "per-slot mean |pixel delta|: " << all;
}

TEST(TrainedModel, DiscriminatorPrefersRealOverNoise) {
    const auto m = toy::discriminator_means(world().model(), world().corpus, 50, 77);
    EXPECT_GT(m.real, m.noise) << "real " << m.real << " noise " << m.noise;
}

TEST(TrainedModel, TrainingLogIsFinite) {
    std::ifstream log(world().dir / "train_log.jsonl");
    ASSERT_TRUE(log);
    std::size_t lines = 0, fids = 0;
    for (std::string line; std::getline(log, line); ++lines) {
        const auto j = nlohmann::json::parse(line);
        for (const char* k : {"d_loss", "g_loss", "r1"}) EXPECT_TRUE(std::isfinite(j.at(k).get<double>())) << line;
        fids += j.contains("fid");
    }
    EXPECT_GT(lines, 0u);
    EXPECT_GT(fids, 0u);
    EXPECT_FALSE(world().ckpt.fid_history.empty());
    EXPECT_EQ(world().model().config.final_resolution(), 32);
    EXPECT_EQ(world().model().config.slots(), 8);
}

TEST(TrainedModel, EncoderReducesLoss) {
    const auto runs = toy::encoder_runs(world().model(), *world().backend, 10, 2024);
    int below = 0, halved = 0;
    for (const auto& r : runs) {
        below += r.final < r.initial;
        halved += r.final < 0.5 * r.initial;
    }
    EXPECT_EQ(below, 10);
    EXPECT_GE(halved, 8);
}
