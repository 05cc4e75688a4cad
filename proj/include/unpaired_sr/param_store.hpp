#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "unpaired_sr/errors.hpp"

namespace unpaired_sr {

/// Ordered, uniquely named tensors (network parameters, optimizer moments).
/// Values are detached CPU copies, float32 or int64.
class ParamStore {
public:
    struct Entry {
        std::string name;
        torch::Tensor value;
    };

    /// Copies every parameter of `module`, names prefixed with `prefix`.
    static ParamStore capture(const torch::nn::Module& module, const std::string& prefix = "");

    /// Writes stored values back into `module`; every parameter must be present with matching shape.
    void restore(torch::nn::Module& module, const std::string& prefix = "") const;

    void add(const std::string& name, const torch::Tensor& value);
    void append(const ParamStore& other);

    [[nodiscard]] bool contains(const std::string& name) const;
    [[nodiscard]] const torch::Tensor& at(const std::string& name) const;
    [[nodiscard]] const std::vector<Entry>& entries() const { return entries_; }
    [[nodiscard]] size_t size() const { return entries_.size(); }
    [[nodiscard]] int64_t element_count() const;

    /// FNV-1a over names, shapes and raw payload bytes.
    [[nodiscard]] uint64_t checksum() const;

    /// Bitwise equality of names, dtypes, shapes and payloads.
    [[nodiscard]] bool bit_equal(const ParamStore& other) const;

private:
    std::vector<Entry> entries_;
};

/// Fixed-size header of a checkpoint file.
struct CheckpointHeader {
    int format_version = 1;
    int stage = 0;
    int64_t step = 0;
    std::string config_digest;
    uint64_t seed = 0;
    nlohmann::json networks = nlohmann::json::object();  ///< specs needed to rebuild the networks
};

struct Checkpoint {
    CheckpointHeader header;
    ParamStore entries;
};

/// Binary layout: magic "USRCKPT\n", u32 header length, header JSON, u32 entry count,
/// then per entry: u32 name length, name, u8 dtype tag (0 = f32, 1 = i64), u32 rank,
/// i64 dims, little-endian payload.
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

void write_param_stream(std::ostream& out, const ParamStore& store);
ParamStore read_param_stream(std::istream& in);

/// FNV-1a 64-bit, hex encoded.
std::string digest_hex(const std::string& text);

}  // namespace unpaired_sr
