#include "ganspire/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "ganspire/errors.hpp"

namespace ganspire::gan {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'P', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    for (std::size_t i = 1; i < ckpt.fid_history.size(); ++i)
        if (ckpt.fid_history[i].step <= ckpt.fid_history[i - 1].step)
            throw ContractError("checkpoint FID history is not strictly increasing in step");

    nlohmann::json tensors = nlohmann::json::array();
    std::string payload;
    std::size_t offset = 0;
    ckpt.model.for_each_param([&](const std::string& name, const std::vector<float>& v) {
        tensors.push_back({{"name", name}, {"offset", offset}, {"count", v.size()}});
        offset += v.size();
        for (float f : v) put_u32(payload, std::bit_cast<std::uint32_t>(f));
    });
    nlohmann::json history = nlohmann::json::array();
    for (const auto& r : ckpt.fid_history) history.push_back({{"step", r.step}, {"value", r.value}});
    const nlohmann::json header = {{"format", "ganspire-checkpoint/1"},
                                   {"config", ckpt.model.config},
                                   {"step", ckpt.step},
                                   {"fid_history", history},
                                   {"tensors", tensors}};
    const std::string h = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    std::uint64_t n = h.size();
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((n >> (8 * i)) & 0xFF));
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw InputError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string where = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint " + where);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw ParseError(where, "not a ganspire checkpoint (bad magic)");
    const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint64_t hlen = get_u64(u + 8);
    if (hlen > bytes.size() - 16) throw ParseError(where, "truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(16, hlen));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where, std::string("header: ") + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.model = Model(header.at("config").get<GeneratorConfig>());
        ckpt.step = header.at("step").get<std::int64_t>();
        for (const auto& r : header.at("fid_history"))
            ckpt.fid_history.push_back({r.at("step").get<std::int64_t>(), r.at("value").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where, std::string("header: ") + e.what());
    }

    const unsigned char* data = u + 16 + hlen;
    const std::size_t available = (bytes.size() - 16 - hlen) / 4;
    std::map<std::string, std::pair<std::size_t, std::size_t>> table;
    for (const auto& t : header.at("tensors"))
        table[t.at("name").get<std::string>()] = {t.at("offset").get<std::size_t>(), t.at("count").get<std::size_t>()};

    ckpt.model.for_each_param([&](const std::string& name, std::vector<float>& v) {
        auto it = table.find(name);
        if (it == table.end()) throw ParseError(where, "missing tensor " + name);
        const auto [off, count] = it->second;
        if (count != v.size())
            throw ParseError(where, "tensor " + name + " has " + std::to_string(count) + " values, expected " +
                                        std::to_string(v.size()));
        if (off + count > available) throw ParseError(where, "tensor " + name + " is truncated");
        for (std::size_t i = 0; i < count; ++i) {
            const unsigned char* p = data + 4 * (off + i);
            const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                                       (static_cast<std::uint32_t>(p[2]) << 16) |
                                       (static_cast<std::uint32_t>(p[3]) << 24);
            v[i] = std::bit_cast<float>(bits);
        }
    });
    for (std::size_t i = 1; i < ckpt.fid_history.size(); ++i)
        if (ckpt.fid_history[i].step <= ckpt.fid_history[i - 1].step)
            throw ParseError(where, "FID history is not strictly increasing in step");
    return ckpt;
}

}  // namespace ganspire::gan
