#include "ecg/checkpoint.hpp"

#include "ecg/binary_io.hpp"

namespace ecg {
namespace {

std::string shape_text(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i)
        s += (i ? ", " : "") + std::to_string(shape[i]);
    return s + ")";
}

void require_shapes(const ModelParams& params, const ModelConfig& config) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> expected;
    try {
        expected = parameter_shapes(config);
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("invalid model config: ") + e.what());
    }
    if (expected.size() != params.tensors.size())
        throw CheckpointError("checkpoint holds " + std::to_string(params.tensors.size()) +
                              " tensors, model needs " + std::to_string(expected.size()));
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& t = params.tensors[i];
        if (t.name != expected[i].first)
            throw CheckpointError("tensor " + std::to_string(i) + " is " + t.name +
                                  ", expected " + expected[i].first);
        if (t.value.shape() != expected[i].second)
            throw CheckpointError("tensor " + t.name + " has shape " + t.value.shape_string() +
                                  ", model expects " + shape_text(expected[i].second));
    }
}

} // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params) {
    binary::Writer w;
    w.bytes("ECGM");
    w.u16(kCheckpointVersion);
    w.str32(params.config.to_text());
    w.u32(static_cast<std::uint32_t>(params.tensors.size()));
    for (const auto& t : params.tensors) {
        w.str16(t.name);
        w.u8(static_cast<std::uint8_t>(t.value.rank()));
        for (auto d : t.value.shape())
            w.u32(static_cast<std::uint32_t>(d));
        for (float v : t.value.values())
            w.f32(v);
    }
    return std::move(w.buffer());
}

ModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    binary::Reader<CheckpointError> r(bytes);
    if (r.bytes(4) != "ECGM")
        throw CheckpointError("not a model checkpoint (bad magic)");
    if (const auto version = r.u16(); version != kCheckpointVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                              " (expected " + std::to_string(kCheckpointVersion) + ")");
    ModelParams params;
    try {
        params.config = ModelConfig::from_text(r.str32());
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("corrupt config block: ") + e.what());
    }
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor<float> t;
        t.name = r.str16();
        const std::size_t rank = r.u8();
        if (rank == 0 || rank > 3)
            throw CheckpointError("tensor " + t.name + " has invalid rank " + std::to_string(rank));
        std::vector<std::size_t> shape(rank);
        std::size_t count_values = 1;
        for (auto& d : shape) {
            d = r.u32();
            count_values *= d;
        }
        if (count_values > bytes.size())
            throw CheckpointError("tensor " + t.name + " claims more data than the file holds");
        std::vector<float> data(count_values);
        for (auto& v : data)
            v = r.f32();
        t.value = Tensor(std::move(shape), std::move(data));
        params.tensors.push_back(std::move(t));
    }
    if (!r.at_end())
        throw CheckpointError("trailing bytes after tensor data");
    require_shapes(params, params.config);
    return params;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
    binary::write_file(path.string(), serialize_checkpoint(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    try {
        bytes = binary::read_file(path.string());
    } catch (const IoError& e) {
        throw CheckpointError(e.what());
    }
    return deserialize_checkpoint(bytes);
}

ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
    auto params = load_checkpoint(path);
    require_shapes(params, expected);
    // Geometry fields that leave shapes unchanged still change the network.
    auto stored = params.config;
    stored.seed = expected.seed;
    if (!(stored == expected))
        throw CheckpointError("checkpoint config differs from the requested model:\n" +
                              params.config.to_text() + "vs\n" + expected.to_text());
    return params;
}

} // namespace ecg
