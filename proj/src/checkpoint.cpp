#include "skipstep/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "skipstep/errors.hpp"

namespace skipstep {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'S', 'K', 'S', 'T', 'M', 'L', 'P', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
        throw IoError("checkpoint " + path.string() + " is truncated");
    return value;
}

}  // namespace

void save_checkpoint(const MlpDenoiser& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.timesteps()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.embed_dim()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.widths().size()));
    for (std::size_t w : model.widths()) put<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    for (const auto& layer : model.layers()) {
        for (double w : layer.weight) put<double>(out, w);
        for (double b : layer.bias) put<double>(out, b);
    }
    if (!out) throw IoError("failed writing " + path.string());
}

MlpDenoiser load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw IoError(path.string() + " is not a skipstep checkpoint");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kVersion)
        throw IoError("checkpoint " + path.string() + " has unsupported version " + std::to_string(version));
    const auto T = get<std::uint32_t>(in, path);
    const auto embed = get<std::uint32_t>(in, path);
    const auto count = get<std::uint32_t>(in, path);
    if (count < 2 || count > 64) throw IoError("checkpoint " + path.string() + " has implausible layer count");
    std::vector<std::size_t> widths;
    for (std::uint32_t i = 0; i < count; ++i) widths.push_back(get<std::uint32_t>(in, path));
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        DenseLayer layer;
        layer.in = widths[l] + (l == 0 ? embed : 0);
        layer.out = widths[l + 1];
        layer.weight.resize(layer.in * layer.out);
        layer.bias.resize(layer.out);
        for (double& w : layer.weight) w = get<double>(in, path);
        for (double& b : layer.bias) b = get<double>(in, path);
        layers.push_back(std::move(layer));
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw IoError("checkpoint " + path.string() + " has trailing bytes");
    try {
        return MlpDenoiser(std::move(widths), static_cast<int>(T), embed, std::move(layers));
    } catch (const ConfigError& e) {
        throw IoError("checkpoint " + path.string() + ": " + e.what());
    }
}

}  // namespace skipstep
