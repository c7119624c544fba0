#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "dygmamba/model.hpp"

namespace dygmamba {

// Binary checkpoint: magic, version, config header, then named parameter
// blobs with shape headers. Floats are raw little-endian 64-bit (the build
// targets little-endian hosts).
inline constexpr uint32_t kCheckpointMagic = 0x44474d42;  // "DGMB"
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ostream& out, T x) {
    out.write(reinterpret_cast<const char*>(&x), sizeof x);
}

template <typename T>
T read_pod(std::istream& in) {
    T x{};
    in.read(reinterpret_cast<char*>(&x), sizeof x);
    require(bool(in), ErrorKind::parse, "checkpoint: truncated file");
    return x;
}

inline void write_config(std::ostream& out, const ModelConfig& c) {
    write_pod<int32_t>(out, c.rho);
    write_pod<int32_t>(out, c.patch);
    write_pod<int32_t>(out, c.k);
    write_pod<int32_t>(out, c.d);
    write_pod<int32_t>(out, c.d_ssm);
    write_pod<double>(out, c.gamma);
    write_pod<int32_t>(out, c.l_n);
    write_pod<int32_t>(out, c.l_t);
    write_pod<int32_t>(out, c.d_n);
    write_pod<int32_t>(out, c.d_e);
    write_pod<int32_t>(out, c.d_t);
    write_pod<int32_t>(out, c.d_f);
    write_pod<double>(out, c.dropout);
    write_pod<int32_t>(out, int32_t(c.variant));
    write_pod<uint64_t>(out, c.seed);
}

inline ModelConfig read_config(std::istream& in) {
    ModelConfig c;
    c.rho = read_pod<int32_t>(in);
    c.patch = read_pod<int32_t>(in);
    c.k = read_pod<int32_t>(in);
    c.d = read_pod<int32_t>(in);
    c.d_ssm = read_pod<int32_t>(in);
    c.gamma = read_pod<double>(in);
    c.l_n = read_pod<int32_t>(in);
    c.l_t = read_pod<int32_t>(in);
    c.d_n = read_pod<int32_t>(in);
    c.d_e = read_pod<int32_t>(in);
    c.d_t = read_pod<int32_t>(in);
    c.d_f = read_pod<int32_t>(in);
    c.dropout = read_pod<double>(in);
    c.variant = Variant(read_pod<int32_t>(in));
    c.seed = read_pod<uint64_t>(in);
    return c;
}

}  // namespace detail

inline void save_checkpoint(Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    detail::write_pod(out, kCheckpointMagic);
    detail::write_pod(out, kCheckpointVersion);
    detail::write_config(out, model.config);
    auto params = model.parameters();
    detail::write_pod<uint32_t>(out, uint32_t(params.size()));
    for (Parameter* p : params) {
        detail::write_pod<uint32_t>(out, uint32_t(p->name.size()));
        out.write(p->name.data(), std::streamsize(p->name.size()));
        detail::write_pod<int32_t>(out, p->value.rows);
        detail::write_pod<int32_t>(out, p->value.cols);
        out.write(reinterpret_cast<const char*>(p->value.v.data()),
                  std::streamsize(p->value.size() * sizeof(double)));
    }
    require(out.good(), ErrorKind::io, "checkpoint write failed: " + path);
}

inline Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open checkpoint " + path);
    require(detail::read_pod<uint32_t>(in) == kCheckpointMagic, ErrorKind::parse,
            "checkpoint: bad magic in " + path);
    require(detail::read_pod<uint32_t>(in) == kCheckpointVersion, ErrorKind::parse,
            "checkpoint: unsupported version");
    ModelConfig cfg = detail::read_config(in);
    Model model = Model::init(cfg);
    auto params = model.parameters();
    uint32_t count = detail::read_pod<uint32_t>(in);
    require(count == params.size(), ErrorKind::parse,
            "checkpoint: parameter count mismatch (got " + std::to_string(count) + ", model has " +
                std::to_string(params.size()) + ")");
    for (Parameter* p : params) {
        uint32_t len = detail::read_pod<uint32_t>(in);
        std::string name(len, '\0');
        in.read(name.data(), len);
        require(name == p->name, ErrorKind::parse,
                "checkpoint: parameter order mismatch at '" + name + "'");
        int32_t rows = detail::read_pod<int32_t>(in);
        int32_t cols = detail::read_pod<int32_t>(in);
        require(rows == p->value.rows && cols == p->value.cols, ErrorKind::dimension,
                "checkpoint: shape mismatch for '" + name + "'");
        in.read(reinterpret_cast<char*>(p->value.v.data()),
                std::streamsize(p->value.size() * sizeof(double)));
        require(bool(in), ErrorKind::parse, "checkpoint: truncated blob for '" + name + "'");
    }
    return model;
}

}  // namespace dygmamba
