#include "cellmorph/train/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <map>

#include "cellmorph/core/error.hpp"

namespace cellmorph::train {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

using json = nlohmann::json;

void write_bytes(std::ostream& os, const void* data, std::size_t n) {
    os.write(static_cast<const char*>(data), std::streamsize(n));
}

template <typename T>
void write_pod(std::ostream& os, T v) {
    write_bytes(os, &v, sizeof(T));
}

void read_bytes(std::istream& is, void* data, std::size_t n, const std::string& path) {
    is.read(static_cast<char*>(data), std::streamsize(n));
    if (std::size_t(is.gcount()) != n)
        throw ValidationError(path + ": truncated checkpoint");
}

template <typename T>
T read_pod(std::istream& is, const std::string& path) {
    T v{};
    read_bytes(is, &v, sizeof(T), path);
    return v;
}

json meta_to_json(const CheckpointMeta& meta) {
    return json{{"preset", meta.preset},
                {"model_kind", meta.model_kind},
                {"categories", meta.categories},
                {"stage", meta.stage},
                {"epoch", meta.epoch},
                {"weights_fingerprint", meta.weights_fingerprint},
                {"input_fingerprint", meta.input_fingerprint}};
}

CheckpointMeta meta_from_json(const json& j, const std::string& path) {
    try {
        CheckpointMeta meta;
        meta.preset = j.at("preset").get<std::string>();
        meta.model_kind = j.at("model_kind").get<std::string>();
        meta.categories = j.at("categories").get<std::vector<std::string>>();
        meta.stage = j.at("stage").get<std::string>();
        meta.epoch = j.at("epoch").get<int>();
        meta.weights_fingerprint = j.at("weights_fingerprint").get<std::uint64_t>();
        meta.input_fingerprint = j.at("input_fingerprint").get<std::uint64_t>();
        return meta;
    } catch (const json::exception& e) {
        throw ValidationError(path + ": bad checkpoint header: " + e.what());
    }
}

CheckpointMeta read_header(std::istream& is, const std::string& path) {
    char magic[4];
    read_bytes(is, magic, 4, path);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw ValidationError(path + ": not a checkpoint file");
    const auto version = read_pod<std::uint32_t>(is, path);
    if (version != kVersion)
        throw ValidationError(path + ": unsupported checkpoint version " +
                              std::to_string(version));
    const auto hlen = read_pod<std::uint64_t>(is, path);
    std::string header(hlen, '\0');
    read_bytes(is, header.data(), hlen, path);
    json j;
    try {
        j = json::parse(header);
    } catch (const json::exception& e) {
        throw ValidationError(path + ": bad checkpoint header: " + e.what());
    }
    return meta_from_json(j, path);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                     const nn::ParamRefs<float>& params) {
    CheckpointMeta stamped = meta;
    stamped.weights_fingerprint = nn::fingerprint(params);

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ValidationError(tmp.string() + ": cannot open for writing");
        write_bytes(os, kMagic, 4);
        write_pod(os, kVersion);
        const std::string header = meta_to_json(stamped).dump();
        write_pod(os, std::uint64_t(header.size()));
        write_bytes(os, header.data(), header.size());
        write_pod(os, std::uint64_t(params.size()));
        for (const auto* p : params) {
            write_pod(os, std::uint32_t(p->name.size()));
            write_bytes(os, p->name.data(), p->name.size());
            write_pod(os, std::uint64_t(p->value.size()));
            write_bytes(os, p->value.data(), std::size_t(p->value.size()) * sizeof(float));
        }
        os.flush();
        if (!os) throw ValidationError(tmp.string() + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

CheckpointMeta peek_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError(path.string() + ": cannot open checkpoint");
    return read_header(is, path.string());
}

CheckpointMeta load_checkpoint(const std::filesystem::path& path,
                               const nn::ParamRefs<float>& params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError(path.string() + ": cannot open checkpoint");
    const CheckpointMeta meta = read_header(is, path.string());

    std::map<std::string, nn::Param<float>*> by_name;
    for (auto* p : params) by_name[p->name] = p;
    if (by_name.size() != params.size())
        throw ValidationError(path.string() + ": model has duplicate parameter names");

    const auto count = read_pod<std::uint64_t>(is, path.string());
    if (count != params.size())
        throw ValidationError(path.string() + ": checkpoint holds " + std::to_string(count) +
                              " tensors, model expects " + std::to_string(params.size()));
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto nlen = read_pod<std::uint32_t>(is, path.string());
        std::string name(nlen, '\0');
        read_bytes(is, name.data(), nlen, path.string());
        const auto size = read_pod<std::uint64_t>(is, path.string());
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw ValidationError(path.string() + ": tensor " + name +
                                  " does not exist in the model");
        if (std::uint64_t(it->second->value.size()) != size)
            throw ValidationError(path.string() + ": tensor " + name + " has " +
                                  std::to_string(size) + " values, model expects " +
                                  std::to_string(it->second->value.size()));
        read_bytes(is, it->second->value.data(), std::size_t(size) * sizeof(float),
                   path.string());
    }
    if (nn::fingerprint(params) != meta.weights_fingerprint)
        throw ValidationError(path.string() + ": weight fingerprint mismatch, file corrupt");
    return meta;
}

}  // namespace cellmorph::train
