#include "garm/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace garm::harness {

namespace {

constexpr char kMagic[8] = {'G', 'A', 'R', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_i64(std::ostream& out, std::int64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::int64_t read_i64(std::istream& in) {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_tensor(std::ostream& out, const std::string& name, const std::vector<double>& v) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string& path, const learn::ValueModel& model,
                     const learn::AdamState& adam, std::int64_t step,
                     std::uint64_t config_fingerprint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u64(out, config_fingerprint);
    write_i64(out, step);
    write_i64(out, adam.t);

    std::uint32_t count = 0;
    model.visit_params([&](const std::string&, const std::vector<double>&) { ++count; });
    count += static_cast<std::uint32_t>(adam.moments.size() * 2);
    write_u32(out, count);

    model.visit_params([&](const std::string& name, const std::vector<double>& v) {
        write_tensor(out, name, v);
    });
    for (const auto& [name, mv] : adam.moments) {
        write_tensor(out, "adam.m." + name, mv.first);
        write_tensor(out, "adam.v." + name, mv.second);
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

CheckpointInfo load_checkpoint(const std::string& path, learn::ValueModel& model,
                               learn::AdamState& adam) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

    CheckpointInfo info;
    info.config_fingerprint = read_u64(in);
    info.step = read_i64(in);
    adam.t = read_i64(in);
    std::uint32_t count = read_u32(in);

    std::map<std::string, std::vector<double>> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        std::uint64_t values = read_u64(in);
        std::vector<double> data(values);
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(values * sizeof(double)));
        if (!in) throw std::runtime_error("truncated checkpoint: " + path);
        tensors[name] = std::move(data);
    }

    model.visit_params([&](const std::string& name, std::vector<double>& v) {
        auto it = tensors.find(name);
        if (it == tensors.end())
            throw std::runtime_error("checkpoint is missing tensor " + name);
        if (it->second.size() != v.size())
            throw std::runtime_error("checkpoint tensor " + name + " has wrong size");
        v = it->second;
    });
    adam.moments.clear();
    for (const auto& [name, data] : tensors) {
        if (name.rfind("adam.m.", 0) == 0) adam.moments[name.substr(7)].first = data;
        if (name.rfind("adam.v.", 0) == 0) adam.moments[name.substr(7)].second = data;
    }
    return info;
}

}  // namespace garm::harness
