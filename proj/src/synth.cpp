#include "ganspire/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "ganspire/errors.hpp"

namespace ganspire::synth {

namespace {

using Color = std::array<int, 3>;

struct Theme {
    Color background;
    Color primary;
    Color accent;
    Color ink;
    Color surface;
};

Color jitter(std::mt19937_64& rng, Color c, int amount) {
    std::uniform_int_distribution<int> d(-amount, amount);
    for (auto& v : c) v = std::clamp(v + d(rng), 0, 255);
    return c;
}

Theme make_theme(std::mt19937_64& rng) {
    static const std::vector<Color> primaries = {{33, 150, 243}, {244, 67, 54},  {76, 175, 80}, {255, 152, 0},
                                                  {156, 39, 176}, {0, 150, 136},  {63, 81, 181}, {233, 30, 99},
                                                  {96, 125, 139}, {121, 85, 72}};
    std::uniform_int_distribution<std::size_t> pick(0, primaries.size() - 1);
    std::bernoulli_distribution dark(0.2);
    Theme t;
    t.primary = jitter(rng, primaries[pick(rng)], 20);
    t.accent = jitter(rng, primaries[pick(rng)], 20);
    if (dark(rng)) {
        t.background = jitter(rng, {33, 33, 38}, 8);
        t.ink = {230, 230, 230};
        t.surface = jitter(rng, {60, 60, 66}, 8);
    } else {
        t.background = jitter(rng, {247, 247, 247}, 6);
        t.ink = jitter(rng, {40, 40, 40}, 10);
        t.surface = {255, 255, 255};
    }
    return t;
}

struct Canvas {
    Rgb8Image& img;
    void fill(int x1, int y1, int x2, int y2, Color c) {
        x1 = std::max(x1, 0);
        y1 = std::max(y1, 0);
        x2 = std::min(x2, img.width);
        y2 = std::min(y2, img.height);
        for (int y = y1; y < y2; ++y)
            for (int x = x1; x < x2; ++x) {
                auto* p = img.at(x, y);
                for (int k = 0; k < 3; ++k) p[k] = static_cast<std::uint8_t>(c[k]);
            }
    }
    void gradient(int x1, int y1, int x2, int y2, Color a, Color b) {
        const int h = std::max(1, y2 - y1);
        for (int y = y1; y < y2; ++y) {
            Color c;
            for (int k = 0; k < 3; ++k) c[k] = a[k] + (b[k] - a[k]) * (y - y1) / h;
            fill(x1, y, x2, y + 1, c);
        }
    }
    void outline(int x1, int y1, int x2, int y2, Color c) {
        fill(x1, y1, x2, y1 + 1, c);
        fill(x1, y2 - 1, x2, y2, c);
        fill(x1, y1, x1 + 1, y2, c);
        fill(x2 - 1, y1, x2, y2, c);
    }
};

int typical_height(const std::string& label, int H) {
    if (label == "Text") return H / 16;
    if (label == "Icon" || label == "Checkbox" || label == "Radio Button" || label == "On/Off Switch") return H / 14;
    if (label == "Image" || label == "Video" || label == "Map View" || label == "Web View") return H / 4;
    if (label == "Background Image") return H / 3;
    if (label == "Card" || label == "Modal" || label == "Advertisement") return H / 5;
    if (label == "List Item" || label == "Drawer") return H / 9;
    if (label == "Date Picker") return H / 4;
    return H / 11;
}

void draw(Canvas& cv, std::mt19937_64& rng, const std::string& label, const Theme& t, int x1, int y1, int x2, int y2) {
    const int w = x2 - x1;
    const int h = y2 - y1;
    std::uniform_int_distribution<int> frac(40, 95);
    if (label == "Text") {
        cv.fill(x1, y1 + h / 4, x1 + w * frac(rng) / 100, y1 + h / 4 + std::max(1, h / 3), t.ink);
    } else if (label == "Image" || label == "Background Image" || label == "Video") {
        cv.gradient(x1, y1, x2, y2, jitter(rng, t.accent, 60), jitter(rng, t.primary, 60));
        if (label == "Video") cv.fill(x1 + w / 2 - 2, y1 + h / 2 - 2, x1 + w / 2 + 3, y1 + h / 2 + 3, {255, 255, 255});
    } else if (label == "Map View") {
        cv.fill(x1, y1, x2, y2, {225, 232, 210});
        for (int gx = x1; gx < x2; gx += 9) cv.fill(gx, y1, gx + 1, y2, {250, 250, 250});
        for (int gy = y1; gy < y2; gy += 7) cv.fill(x1, gy, x2, gy + 1, {250, 250, 250});
    } else if (label == "Icon") {
        cv.fill(x1, y1, x1 + h, y2, t.accent);
    } else if (label == "Text Button" || label == "Button Bar") {
        cv.fill(x1 + w / 8, y1, x2 - w / 8, y2, t.accent);
        cv.fill(x1 + w / 3, y1 + h / 2, x2 - w / 3, y1 + h / 2 + 1, {255, 255, 255});
    } else if (label == "Input") {
        cv.fill(x1, y1, x2, y2, t.surface);
        cv.fill(x1, y2 - 1, x2, y2, t.primary);
    } else if (label == "List Item" || label == "Drawer") {
        cv.fill(x1, y1, x2, y2, t.surface);
        cv.fill(x1 + 2, y1 + 2, x1 + h - 2, y2 - 2, jitter(rng, t.primary, 40));
        cv.fill(x1 + h + 2, y1 + h / 3, x2 - w / 4, y1 + h / 3 + 1, t.ink);
        cv.fill(x1, y2 - 1, x2, y2, {200, 200, 200});
    } else if (label == "Card" || label == "Modal" || label == "Advertisement") {
        cv.fill(x1 + 1, y1 + 1, x2 + 1, y2 + 1, {180, 180, 180});
        cv.fill(x1, y1, x2, y2, label == "Advertisement" ? jitter(rng, {250, 230, 160}, 20) : t.surface);
        cv.fill(x1 + 3, y1 + 3, x2 - 3, y1 + h / 2, jitter(rng, t.accent, 50));
        cv.fill(x1 + 3, y1 + h / 2 + 3, x2 - w / 3, y1 + h / 2 + 4, t.ink);
    } else if (label == "Toolbar" || label == "Bottom Navigation" || label == "Multi-Tab") {
        cv.fill(x1, y1, x2, y2, t.primary);
        for (int i = 1; i <= 3; ++i) cv.fill(x1 + i * w / 4 - 2, y1 + h / 3, x1 + i * w / 4 + 2, y2 - h / 3, {255, 255, 255});
    } else if (label == "Checkbox" || label == "Radio Button" || label == "On/Off Switch" || label == "Switch") {
        cv.outline(x1, y1, x1 + h, y2, t.accent);
        cv.fill(x1 + h + 3, y1 + h / 3, x2 - w / 3, y1 + h / 3 + 1, t.ink);
    } else if (label == "Slider" || label == "Pager Indicator" || label == "Number Stepper") {
        cv.fill(x1, y1 + h / 2, x2, y1 + h / 2 + 1, {160, 160, 160});
        const int k = x1 + w * frac(rng) / 100;
        cv.fill(k - 2, y1 + h / 2 - 2, k + 3, y1 + h / 2 + 3, t.accent);
    } else if (label == "Date Picker") {
        cv.fill(x1, y1, x2, y2, t.surface);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 5; ++c)
                cv.fill(x1 + 2 + c * (w - 4) / 5, y1 + 2 + r * (h - 4) / 4, x1 + c * (w - 4) / 5 + (w - 4) / 5,
                        y1 + r * (h - 4) / 4 + (h - 4) / 4, (r + c) % 3 ? Color{225, 225, 225} : t.accent);
    } else {
        cv.fill(x1, y1, x2, y2, jitter(rng, t.surface, 30));
        cv.outline(x1, y1, x2, y2, jitter(rng, t.primary, 30));
    }
}

}  // namespace

const std::vector<std::string>& component_vocabulary() {
    static const std::vector<std::string> v = {
        "Text",          "Image",         "Icon",          "Text Button",      "Toolbar",     "List Item",
        "Input",         "Card",          "Drawer",        "Web View",         "Background Image",
        "Radio Button",  "Checkbox",      "Modal",         "Slider",           "Advertisement",
        "Pager Indicator", "Button Bar",  "On/Off Switch", "Multi-Tab",        "Bottom Navigation",
        "Date Picker",   "Map View",      "Number Stepper", "Video"};
    return v;
}

Screen make_screen(std::mt19937_64& rng, int unique_labels, int width, int height) {
    const auto& vocab = component_vocabulary();
    if (unique_labels < 1 || unique_labels > static_cast<int>(vocab.size()))
        throw InputError("unique_labels must be in 1.." + std::to_string(vocab.size()));

    // Common components are more likely, as in real screens.
    std::vector<double> weights(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) weights[i] = 1.0 / (1.0 + 0.25 * static_cast<double>(i));
    std::vector<std::string> chosen;
    while (static_cast<int>(chosen.size()) < unique_labels) {
        std::discrete_distribution<std::size_t> d(weights.begin(), weights.end());
        const std::size_t k = d(rng);
        chosen.push_back(vocab[k]);
        weights[k] = 0.0;
    }

    Screen s;
    s.image = Rgb8Image(width, height);
    const Theme theme = make_theme(rng);
    Canvas cv{s.image};
    cv.fill(0, 0, width, height, theme.background);
    cv.fill(0, 0, width, height / 32 + 1, jitter(rng, theme.primary, 30));  // status bar

    // Node list: every chosen label at least once, plus a few repeats.
    std::vector<std::string> nodes = chosen;
    std::uniform_int_distribution<int> extra(0, 3);
    std::uniform_int_distribution<std::size_t> pick(0, chosen.size() - 1);
    for (int i = extra(rng); i > 0; --i) nodes.push_back(chosen[pick(rng)]);
    std::shuffle(nodes.begin(), nodes.end(), rng);
    // Bars stay at their natural edges.
    std::stable_partition(nodes.begin(), nodes.end(), [](const std::string& l) { return l == "Toolbar"; });
    std::stable_partition(nodes.begin(), nodes.end(), [](const std::string& l) { return l != "Bottom Navigation"; });

    nlohmann::json children = nlohmann::json::array();
    int y = height / 32 + 1;
    const int margin = std::max(1, width / 24);
    for (const auto& label : nodes) {
        int h = typical_height(label, height);
        const bool full_bleed = label == "Toolbar" || label == "Bottom Navigation" || label == "Background Image" ||
                                label == "Multi-Tab";
        int x1 = full_bleed ? 0 : margin;
        int x2 = full_bleed ? width : width - margin;
        int y1 = y;
        if (label == "Bottom Navigation") y1 = std::max(y, height - h);
        if (y1 + h > height) {
            // Out of room: overlay in a random slot, like floating elements.
            std::uniform_int_distribution<int> yy(0, std::max(0, height - h));
            y1 = yy(rng);
        } else {
            y = y1 + h + std::max(1, height / 64);
        }
        draw(cv, rng, label, theme, x1, y1, x2, y1 + h);
        children.push_back({{"componentLabel", label},
                            {"class", "android.widget.FrameLayout"},
                            {"bounds", {x1, y1, x2, y1 + h}},
                            {"children", nlohmann::json::array()}});
    }
    // Some components nest one level down, as in real hierarchies.
    if (children.size() > 2) {
        nlohmann::json inner = children.back();
        children.erase(children.end() - 1);
        children.back()["children"].push_back(inner);
    }
    nlohmann::json root = {{"componentLabel", chosen.front()},
                           {"class", "com.android.internal.policy.PhoneWindow$DecorView"},
                           {"bounds", {0, 0, width, height}},
                           {"children", children}};
    s.hierarchy = {{"activity", {{"root", root}}}};
    s.labels.insert(chosen.begin(), chosen.end());
    return s;
}

std::vector<std::string> write_fixture_corpus(const std::filesystem::path& dir, const FixtureOptions& opts) {
    if (opts.count < 1 || opts.min_labels < 1 || opts.max_labels < opts.min_labels)
        throw InputError("invalid fixture options");
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(opts.seed);
    const int span = opts.max_labels - opts.min_labels + 1;
    std::vector<int> counts;
    for (int i = 0; i < opts.count; ++i) counts.push_back(opts.min_labels + i % span);
    std::shuffle(counts.begin(), counts.end(), rng);

    std::vector<std::string> ids;
    for (int i = 0; i < opts.count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "ui%05d", i);
        const Screen s = make_screen(rng, counts[i], opts.width, opts.height);
        write_png(dir / (std::string(id) + ".png"), s.image);
        const std::string text = s.hierarchy.dump(1);
        write_file_bytes(dir / (std::string(id) + ".json"),
                         std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
        ids.emplace_back(id);
    }
    return ids;
}

}  // namespace ganspire::synth
