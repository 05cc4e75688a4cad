#include "unpaired_sr/param_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

namespace unpaired_sr {

namespace {

constexpr char kMagic[8] = {'U', 'S', 'R', 'C', 'K', 'P', 'T', '\n'};
constexpr uint8_t kTagF32 = 0;
constexpr uint8_t kTagI64 = 1;
constexpr uint64_t kFnvOffset = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void fnv(uint64_t& h, const void* data, size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= kFnvPrime;
    }
}

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw CheckpointError("truncated checkpoint");
    return value;
}

torch::Tensor normalized(const torch::Tensor& t) {
    auto v = t.detach().to(torch::kCPU);
    if (v.scalar_type() != torch::kInt64) v = v.to(torch::kFloat32);
    return v.contiguous().clone();
}

}  // namespace

ParamStore ParamStore::capture(const torch::nn::Module& module, const std::string& prefix) {
    ParamStore store;
    for (const auto& item : module.named_parameters()) store.add(prefix + item.key(), item.value());
    return store;
}

void ParamStore::restore(torch::nn::Module& module, const std::string& prefix) const {
    torch::NoGradGuard no_grad;
    for (auto& item : module.named_parameters()) {
        const auto name = prefix + item.key();
        if (!contains(name)) throw CheckpointError("missing parameter " + name);
        const auto& src = at(name);
        if (src.sizes() != item.value().sizes()) throw CheckpointError("shape mismatch for " + name);
        item.value().copy_(src);
    }
}

void ParamStore::add(const std::string& name, const torch::Tensor& value) {
    if (contains(name)) throw CheckpointError("duplicate entry " + name);
    entries_.push_back({name, normalized(value)});
}

void ParamStore::append(const ParamStore& other) {
    for (const auto& e : other.entries_) add(e.name, e.value);
}

bool ParamStore::contains(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return true;
    }
    return false;
}

const torch::Tensor& ParamStore::at(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e.value;
    }
    throw CheckpointError("no entry named " + name);
}

int64_t ParamStore::element_count() const {
    int64_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
}

uint64_t ParamStore::checksum() const {
    uint64_t h = kFnvOffset;
    for (const auto& e : entries_) {
        fnv(h, e.name.data(), e.name.size());
        for (auto d : e.value.sizes()) fnv(h, &d, sizeof(d));
        fnv(h, e.value.data_ptr(), static_cast<size_t>(e.value.nbytes()));
    }
    return h;
}

bool ParamStore::bit_equal(const ParamStore& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || a.value.scalar_type() != b.value.scalar_type() || a.value.sizes() != b.value.sizes()) {
            return false;
        }
        if (std::memcmp(a.value.data_ptr(), b.value.data_ptr(), static_cast<size_t>(a.value.nbytes())) != 0) {
            return false;
        }
    }
    return true;
}

void write_param_stream(std::ostream& out, const ParamStore& store) {
    put<uint32_t>(out, static_cast<uint32_t>(store.size()));
    for (const auto& e : store.entries()) {
        put<uint32_t>(out, static_cast<uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put<uint8_t>(out, e.value.scalar_type() == torch::kInt64 ? kTagI64 : kTagF32);
        put<uint32_t>(out, static_cast<uint32_t>(e.value.dim()));
        for (auto d : e.value.sizes()) put<int64_t>(out, d);
        out.write(static_cast<const char*>(e.value.data_ptr()), static_cast<std::streamsize>(e.value.nbytes()));
    }
}

ParamStore read_param_stream(std::istream& in) {
    ParamStore store;
    const auto count = get<uint32_t>(in);
    for (uint32_t i = 0; i < count; ++i) {
        const auto name_len = get<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto tag = get<uint8_t>(in);
        if (tag != kTagF32 && tag != kTagI64) throw CheckpointError("unknown dtype tag for " + name);
        const auto rank = get<uint32_t>(in);
        std::vector<int64_t> dims(rank);
        for (auto& d : dims) d = get<int64_t>(in);
        auto value = torch::empty(dims, tag == kTagI64 ? torch::kInt64 : torch::kFloat32);
        in.read(static_cast<char*>(value.data_ptr()), static_cast<std::streamsize>(value.nbytes()));
        if (!in) throw CheckpointError("truncated payload for " + name);
        store.add(name, value);
    }
    return store;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write checkpoint " + path.string());
        nlohmann::json header = {{"format_version", ckpt.header.format_version},
                                 {"stage", ckpt.header.stage},
                                 {"step", ckpt.header.step},
                                 {"config_digest", ckpt.header.config_digest},
                                 {"seed", ckpt.header.seed},
                                 {"networks", ckpt.header.networks}};
        const auto text = header.dump();
        out.write(kMagic, sizeof(kMagic));
        put<uint32_t>(out, static_cast<uint32_t>(text.size()));
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        write_param_stream(out, ckpt.entries);
        if (!out) throw IoError("failed writing checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw CheckpointError("not a checkpoint: " + path.string());
    const auto header_len = get<uint32_t>(in);
    std::string text(header_len, '\0');
    in.read(text.data(), header_len);
    Checkpoint ckpt;
    try {
        const auto header = nlohmann::json::parse(text);
        ckpt.header.format_version = header.at("format_version").get<int>();
        ckpt.header.stage = header.at("stage").get<int>();
        ckpt.header.step = header.at("step").get<int64_t>();
        ckpt.header.config_digest = header.at("config_digest").get<std::string>();
        ckpt.header.seed = header.at("seed").get<uint64_t>();
        ckpt.header.networks = header.value("networks", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("bad checkpoint header in " + path.string() + ": " + e.what());
    }
    if (ckpt.header.format_version != 1) throw CheckpointError("unsupported checkpoint version");
    ckpt.entries = read_param_stream(in);
    return ckpt;
}

std::string digest_hex(const std::string& text) {
    uint64_t h = kFnvOffset;
    fnv(h, text.data(), text.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace unpaired_sr
