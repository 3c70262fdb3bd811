#pragma once

// Procedural Rico-like fixtures: phone-shaped UI screenshots drawn from a
// small component vocabulary, each with a matching view hierarchy whose
// nodes carry "componentLabel" and "class" fields.

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/image.hpp"

namespace ganspire::synth {

// The label vocabulary (Rico's semantic component names).
const std::vector<std::string>& component_vocabulary();

struct Screen {
    Rgb8Image image;
    nlohmann::json hierarchy;  // {"activity": {"root": ...}}
    std::set<std::string> labels;
};

// A screen whose hierarchy has exactly `unique_labels` distinct component
// labels (1 .. vocabulary size).
Screen make_screen(std::mt19937_64& rng, int unique_labels, int width = 72, int height = 128);

struct FixtureOptions {
    int count = 66;
    int min_labels = 1;
    int max_labels = 11;
    int width = 72;
    int height = 128;
    std::uint64_t seed = 5;
};

// Writes <dir>/<id>.png and <dir>/<id>.json. Label counts cycle through
// [min_labels, max_labels] in a seeded order, so every count is represented
// once count >= the range width. Returns the ids in write order.
std::vector<std::string> write_fixture_corpus(const std::filesystem::path& dir, const FixtureOptions& opts);

}  // namespace ganspire::synth
