#pragma once

// Checkpoint container: a binary blob with an embedded JSON header followed
// by raw little-endian tensor payloads. Keys in the header are sorted, so
// identical state serializes to identical bytes.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "signsynth/core/optim.hpp"
#include "signsynth/core/tensor.hpp"
#include "signsynth/errors.hpp"

namespace signsynth::nn {

inline constexpr char kCheckpointMagic[4] = {'S', 'S', 'C', 'P'};
inline constexpr int kCheckpointSchemaVersion = 1;

template <typename S>
constexpr const char* dtype_name() {
    if constexpr (std::is_same_v<S, float>)
        return "f32";
    else
        return "f64";
}

class CheckpointWriter {
  public:
    CheckpointWriter() { header_["schema_version"] = kCheckpointSchemaVersion; }

    nlohmann::json& header() { return header_; }

    template <typename S>
    void add(const std::string& name, const TensorT<S>& t) {
        nlohmann::json entry;
        entry["dtype"] = dtype_name<S>();
        entry["shape"] = t.shape();
        entry["offset"] = data_.size();
        const std::size_t bytes = static_cast<std::size_t>(t.size()) * sizeof(S);
        const std::size_t at = data_.size();
        data_.resize(at + bytes);
        std::memcpy(data_.data() + at, t.data(), bytes);
        tensors_[name] = entry;
    }

    template <typename S>
    void add_registry(const std::string& prefix, const ParamRegistryT<S>& registry) {
        for (const auto& p : registry.params()) add(prefix + "." + p.name, p.var.value());
    }

    template <typename S>
    void add_adam(const std::string& prefix, AdamT<S>& opt) {
        header_["optim"][prefix]["step"] = opt.step_count();
        for (std::size_t i = 0; i < opt.moment1().size(); ++i) {
            add(prefix + ".m" + std::to_string(i), opt.moment1()[i]);
            add(prefix + ".v" + std::to_string(i), opt.moment2()[i]);
        }
    }

    void save(const std::filesystem::path& path) {
        header_["tensors"] = tensors_;
        const std::string hdr = header_.dump();
        std::ofstream os(path, std::ios::binary);
        if (!os) throw IoError("cannot open for write: " + path.string());
        os.write(kCheckpointMagic, 4);
        const std::uint64_t hlen = hdr.size();
        os.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
        os.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
        os.write(reinterpret_cast<const char*>(data_.data()),
                 static_cast<std::streamsize>(data_.size()));
        if (!os) throw IoError("write failed: " + path.string());
    }

  private:
    nlohmann::json header_;
    nlohmann::json tensors_ = nlohmann::json::object();
    std::vector<unsigned char> data_;
};

class CheckpointReader {
  public:
    explicit CheckpointReader(const std::filesystem::path& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw IoError("cannot open checkpoint: " + path.string());
        char magic[4];
        is.read(magic, 4);
        if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
            throw ParseError("not a checkpoint file: " + path.string());
        std::uint64_t hlen = 0;
        is.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
        std::string hdr(hlen, '\0');
        is.read(hdr.data(), static_cast<std::streamsize>(hlen));
        if (!is) throw ParseError("truncated checkpoint header: " + path.string());
        header_ = nlohmann::json::parse(hdr, nullptr, false);
        if (header_.is_discarded())
            throw ParseError("invalid checkpoint header JSON: " + path.string());
        data_.assign(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
    }

    const nlohmann::json& header() const { return header_; }

    bool has(const std::string& name) const { return header_["tensors"].contains(name); }

    template <typename S>
    TensorT<S> get(const std::string& name) const {
        if (!has(name)) throw SchemaError("checkpoint: missing tensor " + name);
        const auto& e = header_["tensors"][name];
        if (e["dtype"].get<std::string>() != dtype_name<S>())
            throw SchemaError("checkpoint: dtype mismatch for " + name);
        std::vector<int> shape = e["shape"].get<std::vector<int>>();
        TensorT<S> t(shape);
        const std::size_t off = e["offset"].get<std::size_t>();
        const std::size_t bytes = static_cast<std::size_t>(t.size()) * sizeof(S);
        if (off + bytes > data_.size()) throw ParseError("checkpoint: truncated payload");
        std::memcpy(t.data(), data_.data() + off, bytes);
        return t;
    }

    template <typename S>
    void load_registry(const std::string& prefix, ParamRegistryT<S>& registry) const {
        for (auto& p : registry.params()) {
            TensorT<S> t = get<S>(prefix + "." + p.name);
            if (!t.same_shape(p.var.value()))
                throw SchemaError("checkpoint: shape mismatch for " + prefix + "." + p.name);
            p.var.value() = std::move(t);
        }
    }

    template <typename S>
    void load_adam(const std::string& prefix, AdamT<S>& opt) const {
        opt.set_step_count(header_["optim"][prefix]["step"].get<std::int64_t>());
        for (std::size_t i = 0; i < opt.moment1().size(); ++i) {
            opt.moment1()[i] = get<S>(prefix + ".m" + std::to_string(i));
            opt.moment2()[i] = get<S>(prefix + ".v" + std::to_string(i));
        }
    }

  private:
    nlohmann::json header_;
    std::vector<unsigned char> data_;
};

}  // namespace signsynth::nn
