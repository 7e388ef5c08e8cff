#ifndef UCN_CHECKPOINT_HPP
#define UCN_CHECKPOINT_HPP

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ucn/config.hpp"
#include "ucn/model.hpp"
#include "ucn/optimizer.hpp"

// Checkpoint file layout (all integers little-endian):
//   8 bytes   magic "UCNCKPT\0"
//   u32       format version (1)
//   u64       manifest length in bytes
//   ...       manifest: compact JSON (config, progress counters, dtype,
//             ordered tensor descriptors with name/shape/role)
//   ...       payload: raw tensor data, contiguous, in manifest order
// The manifest key order is sorted by the JSON library and the payload order
// follows the model's stable tensor ordering, so identical state produces
// identical bytes.
namespace ucn {

inline constexpr char kCkptMagic[8] = {'U', 'C', 'N', 'C', 'K', 'P', 'T', '\0'};
inline constexpr uint32_t kCkptVersion = 1;

struct CheckpointInfo {
    RunConfig config;
    int epochs_completed = 0;
    int64_t iterations = 0;
    std::string dtype;
    bool has_adam = false;
};

namespace detail {

template <typename T>
struct TensorRec {
    std::string name;
    std::string role;  // param | state | adam_m | adam_v
    Tensor<T> tensor;
};

template <typename T>
std::vector<TensorRec<T>> checkpoint_tensors(const UCloudNet<T>& model, const AdamState<T>* adam) {
    std::vector<TensorRec<T>> recs;
    std::vector<NamedTensor<T>> named = model.named_tensors();
    for (NamedTensor<T>& nt : named)
        recs.push_back({nt.name, nt.trainable ? "param" : "state", nt.tensor});
    if (adam) {
        std::vector<NamedTensor<T>> params = model.trainable_parameters();
        if (adam->m.size() != params.size())
            throw ValueError("checkpoint: Adam state size " + std::to_string(adam->m.size()) +
                             " does not match " + std::to_string(params.size()) + " parameters");
        for (size_t i = 0; i < params.size(); ++i)
            recs.push_back({"adam.m." + params[i].name, "adam_m", adam->m[i]});
        for (size_t i = 0; i < params.size(); ++i)
            recs.push_back({"adam.v." + params[i].name, "adam_v", adam->v[i]});
    }
    return recs;
}

inline void write_exact(std::ofstream& out, const void* p, size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_exact(std::ifstream& in, void* p, size_t n, const std::string& path) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw IoError("checkpoint truncated: " + path);
}

}  // namespace detail

template <typename T>
void save_checkpoint(const std::string& path, const UCloudNet<T>& model, const AdamState<T>* adam,
                     const RunConfig& cfg, int epochs_completed, int64_t iterations) {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    auto recs = detail::checkpoint_tensors(model, adam);

    nlohmann::json manifest;
    manifest["config"] = cfg;
    manifest["epochs_completed"] = epochs_completed;
    manifest["iterations"] = iterations;
    manifest["dtype"] = std::is_same_v<T, float> ? "f32" : "f64";
    manifest["adam_t"] = adam ? adam->t : int64_t(-1);
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& r : recs) {
        const Shape& s = r.tensor.shape();
        tensors.push_back({{"name", r.name},
                           {"role", r.role},
                           {"shape", {s.n, s.c, s.h, s.w}}});
    }
    manifest["tensors"] = tensors;
    const std::string mstr = manifest.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    detail::write_exact(out, kCkptMagic, sizeof(kCkptMagic));
    detail::write_exact(out, &kCkptVersion, sizeof(kCkptVersion));
    const uint64_t mlen = mstr.size();
    detail::write_exact(out, &mlen, sizeof(mlen));
    detail::write_exact(out, mstr.data(), mstr.size());
    for (const auto& r : recs)
        detail::write_exact(out, r.tensor.data().data(), sizeof(T) * r.tensor.data().size());
    if (!out) throw IoError("checkpoint write failed: " + path);
}

// Manifest only; used to discover k/dtype before constructing the model.
inline CheckpointInfo peek_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    detail::read_exact(in, magic, sizeof(magic), path);
    if (std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw IoError("not a checkpoint file: " + path);
    uint32_t ver = 0;
    detail::read_exact(in, &ver, sizeof(ver), path);
    if (ver != kCkptVersion)
        throw IoError("checkpoint version " + std::to_string(ver) + " unsupported (expected " +
                      std::to_string(kCkptVersion) + "): " + path);
    uint64_t mlen = 0;
    detail::read_exact(in, &mlen, sizeof(mlen), path);
    std::string mstr(mlen, '\0');
    detail::read_exact(in, mstr.data(), mlen, path);
    nlohmann::json manifest = nlohmann::json::parse(mstr, nullptr, false);
    if (manifest.is_discarded()) throw IoError("checkpoint manifest is not valid JSON: " + path);

    CheckpointInfo info;
    info.config = manifest.at("config").get<RunConfig>();
    info.epochs_completed = manifest.at("epochs_completed").get<int>();
    info.iterations = manifest.at("iterations").get<int64_t>();
    info.dtype = manifest.at("dtype").get<std::string>();
    info.has_adam = manifest.at("adam_t").get<int64_t>() >= 0;
    return info;
}

// Loads tensor data into an already-constructed model (and Adam state when
// requested). The manifest's name/shape list must match the model's expected
// list exactly; the first mismatch is named in the error.
template <typename T>
CheckpointInfo load_checkpoint(const std::string& path, UCloudNet<T>& model, AdamState<T>* adam) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    detail::read_exact(in, magic, sizeof(magic), path);
    if (std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw IoError("not a checkpoint file: " + path);
    uint32_t ver = 0;
    detail::read_exact(in, &ver, sizeof(ver), path);
    if (ver != kCkptVersion)
        throw IoError("checkpoint version " + std::to_string(ver) + " unsupported: " + path);
    uint64_t mlen = 0;
    detail::read_exact(in, &mlen, sizeof(mlen), path);
    std::string mstr(mlen, '\0');
    detail::read_exact(in, mstr.data(), mlen, path);
    nlohmann::json manifest = nlohmann::json::parse(mstr, nullptr, false);
    if (manifest.is_discarded()) throw IoError("checkpoint manifest is not valid JSON: " + path);

    CheckpointInfo info;
    info.config = manifest.at("config").get<RunConfig>();
    info.epochs_completed = manifest.at("epochs_completed").get<int>();
    info.iterations = manifest.at("iterations").get<int64_t>();
    info.dtype = manifest.at("dtype").get<std::string>();
    const int64_t adam_t = manifest.at("adam_t").get<int64_t>();
    info.has_adam = adam_t >= 0;

    const std::string want_dtype = std::is_same_v<T, float> ? "f32" : "f64";
    if (info.dtype != want_dtype)
        throw IoError("checkpoint dtype " + info.dtype + " does not match requested " + want_dtype);
    if (adam && !info.has_adam)
        throw IoError("checkpoint has no optimizer state; cannot resume from " + path);

    if (adam) {
        adam->init(model.trainable_parameters());
        adam->t = adam_t;
    }
    auto recs = detail::checkpoint_tensors(model, adam);
    const auto& tensors = manifest.at("tensors");
    // Loading with adam == nullptr (evaluation) skips trailing moment
    // tensors; the model-owned prefix must still match exactly.
    if (!adam && info.has_adam) {
        if (tensors.size() < recs.size())
            throw IoError("checkpoint lists " + std::to_string(tensors.size()) +
                          " tensors, expected at least " + std::to_string(recs.size()) + ": " + path);
    } else if (tensors.size() != recs.size()) {
        throw IoError("checkpoint lists " + std::to_string(tensors.size()) + " tensors, expected " +
                      std::to_string(recs.size()) + " (model k=" + std::to_string(model.k()) +
                      "): " + path);
    }

    for (size_t i = 0; i < recs.size(); ++i) {
        const auto& tj = tensors.at(i);
        const std::string name = tj.at("name").get<std::string>();
        if (name != recs[i].name)
            throw IoError("checkpoint tensor " + std::to_string(i) + " is '" + name +
                          "', expected '" + recs[i].name + "': " + path);
        const auto& sj = tj.at("shape");
        Shape s{sj.at(0).get<int64_t>(), sj.at(1).get<int64_t>(), sj.at(2).get<int64_t>(),
                sj.at(3).get<int64_t>()};
        if (!(s == recs[i].tensor.shape()))
            throw IoError("checkpoint tensor '" + name + "' has shape " + s.str() + ", expected " +
                          recs[i].tensor.shape().str() + ": " + path);
    }

    for (auto& r : recs)
        detail::read_exact(in, r.tensor.data().data(), sizeof(T) * r.tensor.data().size(), path);
    return info;
}

}  // namespace ucn

#endif  // UCN_CHECKPOINT_HPP
