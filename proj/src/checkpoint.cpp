#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "drpriv/config.hpp"
#include "drpriv/io.hpp"
#include "drpriv/trainer.hpp"

namespace drpriv {

namespace {

constexpr char kMagic[8] = {'D', 'R', 'P', 'R', 'I', 'V', 'C', 'K'};
constexpr std::uint8_t kDtypeF64 = 0;

// --- little-endian byte-level writers/readers -------------------------------

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

void put_bytes(std::string& out, const std::string& s) { out.append(s); }

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size())
            throw std::runtime_error("checkpoint: truncated file (needed " + std::to_string(n) +
                                     " bytes at offset " + std::to_string(pos) + ")");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v = 0.0;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

// --- named tensor directory -------------------------------------------------

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    put_bytes(out, name);
    put_u8(out, kDtypeF64);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u64(out, d);
    for (double v : t.vec()) put_f64(out, v);
}

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

NamedTensor get_tensor(Reader& r) {
    NamedTensor nt;
    const std::uint32_t name_len = r.u32();
    nt.name = r.bytes(name_len);
    const std::uint8_t dtype = r.u8();
    if (dtype != kDtypeF64)
        throw std::runtime_error("checkpoint: tensor '" + nt.name + "': unsupported dtype " +
                                 std::to_string(dtype));
    const std::uint32_t ndim = r.u32();
    if (ndim > 8)
        throw std::runtime_error("checkpoint: tensor '" + nt.name + "': implausible rank " +
                                 std::to_string(ndim));
    std::vector<std::size_t> shape(ndim);
    std::size_t total = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        const std::uint64_t d = r.u64();
        if (d == 0 || d > (1ULL << 32))
            throw std::runtime_error("checkpoint: tensor '" + nt.name + "': bad dimension " +
                                     std::to_string(d));
        shape[i] = static_cast<std::size_t>(d);
        total *= shape[i];
    }
    r.need(total * 8);
    std::vector<double> data(total);
    for (std::size_t i = 0; i < total; ++i) data[i] = r.f64();
    nt.tensor = Tensor(std::move(shape), std::move(data));
    return nt;
}

// --- structured-text block ---------------------------------------------------

// The schema-backed keys (model geometry/widths + training hyperparameters)
// travel through a RunConfig carrier so the checkpoint reuses the single
// config schema instead of duplicating every field name.
KvLines checkpoint_text(const Checkpoint& ckpt) {
    KvLines kv;
    kv.add("bundle.image_h", std::to_string(ckpt.bundle.image_h));
    kv.add("bundle.image_w", std::to_string(ckpt.bundle.image_w));
    kv.add("bundle.num_levels", std::to_string(ckpt.bundle.num_levels));
    kv.add("bundle.init_seed", std::to_string(ckpt.bundle.init_seed));
    kv.add("bundle.config_hash", ckpt.bundle.config_hash);

    RunConfig carrier;
    carrier.training = ckpt.config;
    carrier.d_prime = ckpt.bundle.d_prime;
    carrier.widths = ckpt.bundle.widths;
    for (const std::string& key : config_keys_with_prefix("model."))
        kv.add(key, config_get_key(carrier, key));
    for (const std::string& key : config_keys_with_prefix("training."))
        kv.add(key, config_get_key(carrier, key));

    kv.add("target.cov", format_exact(ckpt.target.cov));
    kv.add("rng.state", ckpt.rng_state);

    kv.add("history.count", std::to_string(ckpt.history.size()));
    for (std::size_t i = 0; i < ckpt.history.size(); ++i) {
        const IterationRecord& rec = ckpt.history[i];
        kv.add("history.row" + std::to_string(i),
               join_csv({format_exact(rec.l_r), format_exact(rec.l_d), format_exact(rec.l_c),
                         format_exact(rec.l_g), format_exact(rec.mean_distance),
                         format_exact(rec.max_param_delta)}));
    }
    return kv;
}

void apply_checkpoint_text(Checkpoint& ckpt, const KvLines& kv) {
    ckpt.bundle.image_h = static_cast<std::size_t>(parse_u64_strict(kv.get("bundle.image_h")));
    ckpt.bundle.image_w = static_cast<std::size_t>(parse_u64_strict(kv.get("bundle.image_w")));
    ckpt.bundle.num_levels = static_cast<int>(parse_u64_strict(kv.get("bundle.num_levels")));
    ckpt.bundle.init_seed = parse_u64_strict(kv.get("bundle.init_seed"));
    ckpt.bundle.config_hash = kv.get("bundle.config_hash");

    RunConfig carrier;
    for (const std::string& key : config_keys_with_prefix("model."))
        config_set_key(carrier, key, kv.get(key));
    for (const std::string& key : config_keys_with_prefix("training."))
        config_set_key(carrier, key, kv.get(key));
    ckpt.config = carrier.training;
    ckpt.bundle.d_prime = carrier.d_prime;
    ckpt.bundle.widths = carrier.widths;

    ckpt.target.cov = parse_double_strict(kv.get("target.cov"));
    ckpt.rng_state = kv.get("rng.state");

    const std::size_t count = static_cast<std::size_t>(parse_u64_strict(kv.get("history.count")));
    ckpt.history.clear();
    ckpt.history.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::string& row = kv.get("history.row" + std::to_string(i));
        const std::vector<std::string> fields = split_csv_line(row);
        if (fields.size() != 6)
            throw std::runtime_error("checkpoint: history row " + std::to_string(i) +
                                     " has " + std::to_string(fields.size()) +
                                     " fields (expected 6)");
        IterationRecord rec;
        rec.l_r = parse_double_strict(fields[0]);
        rec.l_d = parse_double_strict(fields[1]);
        rec.l_c = parse_double_strict(fields[2]);
        rec.l_g = parse_double_strict(fields[3]);
        rec.mean_distance = parse_double_strict(fields[4]);
        rec.max_param_delta = parse_double_strict(fields[5]);
        ckpt.history.push_back(rec);
    }
}

const std::pair<const char*, ParamSet ModelBundle::*> kParamGroups[] = {
    {"gen", &ModelBundle::gen_params},
    {"rec", &ModelBundle::rec_params},
    {"disc", &ModelBundle::disc_params},
    {"cls", &ModelBundle::cls_params},
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, ckpt.format_version);

    std::size_t tensor_count = 1;  // target.mean
    for (const auto& [prefix, member] : kParamGroups)
        tensor_count += (ckpt.bundle.*member).tensors.size();
    put_u64(out, tensor_count);

    for (const auto& [prefix, member] : kParamGroups)
        for (const auto& [name, tensor] : (ckpt.bundle.*member).tensors)
            put_tensor(out, std::string(prefix) + "." + name, tensor);
    put_tensor(out, "target.mean", ckpt.target.mean);

    const std::string text = checkpoint_text(ckpt).serialize();
    put_u64(out, text.size());
    put_bytes(out, text);

    put_u64(out, fnv1a64(out.data(), out.size()));
    write_text_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string buf = read_text_file(path);

    if (buf.size() < sizeof(kMagic) + 4 + 8 + 8 + 8)
        throw std::runtime_error("checkpoint: " + path.string() + ": file too short");
    if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint: " + path.string() + ": bad magic");

    // Verify the trailing checksum before trusting any interior structure.
    {
        Reader tail{buf, buf.size() - 8};
        const std::uint64_t stored = tail.u64();
        const std::uint64_t actual = fnv1a64(buf.data(), buf.size() - 8);
        if (stored != actual)
            throw std::runtime_error("checkpoint: " + path.string() +
                                     ": checksum mismatch (corrupt or truncated file)");
    }

    Reader r{buf, sizeof(kMagic)};
    Checkpoint ckpt;
    ckpt.format_version = r.u32();
    if (ckpt.format_version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: " + path.string() + ": unsupported format version " +
                                 std::to_string(ckpt.format_version) + " (expected " +
                                 std::to_string(kCheckpointVersion) + ")");

    const std::uint64_t tensor_count = r.u64();
    std::vector<NamedTensor> tensors;
    tensors.reserve(static_cast<std::size_t>(tensor_count));
    for (std::uint64_t i = 0; i < tensor_count; ++i) tensors.push_back(get_tensor(r));

    const std::uint64_t text_len = r.u64();
    const std::string text = r.bytes(static_cast<std::size_t>(text_len));
    if (r.pos != buf.size() - 8)
        throw std::runtime_error("checkpoint: " + path.string() + ": trailing garbage");

    apply_checkpoint_text(ckpt, KvLines::parse(text));

    // Rebuild the architecture from the stored geometry, then overwrite
    // the freshly initialized parameters with the stored tensors.
    ModelBundle rebuilt =
        build_models(ckpt.bundle.image_h, ckpt.bundle.image_w, ckpt.bundle.d_prime,
                     ckpt.bundle.num_levels, ckpt.bundle.widths, ckpt.bundle.init_seed);
    if (rebuilt.config_hash != ckpt.bundle.config_hash)
        throw std::runtime_error("checkpoint: " + path.string() +
                                 ": architecture hash mismatch (stored " +
                                 ckpt.bundle.config_hash + ", rebuilt " + rebuilt.config_hash +
                                 ")");

    bool have_target_mean = false;
    for (NamedTensor& nt : tensors) {
        if (nt.name == "target.mean") {
            ckpt.target.mean = std::move(nt.tensor);
            have_target_mean = true;
            continue;
        }
        const std::size_t dot = nt.name.find('.');
        const std::string group = nt.name.substr(0, dot);
        const std::string local = dot == std::string::npos ? "" : nt.name.substr(dot + 1);
        ParamSet* params = nullptr;
        for (const auto& [prefix, member] : kParamGroups)
            if (group == prefix) params = &(rebuilt.*member);
        if (!params)
            throw std::runtime_error("checkpoint: " + path.string() + ": unexpected tensor '" +
                                     nt.name + "'");
        const auto it = params->tensors.find(local);
        if (it == params->tensors.end())
            throw std::runtime_error("checkpoint: " + path.string() + ": unexpected tensor '" +
                                     nt.name + "'");
        if (it->second.shape() != nt.tensor.shape())
            throw std::runtime_error("checkpoint: " + path.string() + ": tensor '" + nt.name +
                                     "' has shape " + Tensor::shape_string(nt.tensor.shape()) +
                                     " (expected " + Tensor::shape_string(it->second.shape()) +
                                     ")");
        it->second = std::move(nt.tensor);
    }
    if (!have_target_mean)
        throw std::runtime_error("checkpoint: " + path.string() + ": missing target.mean tensor");
    for (const auto& [prefix, member] : kParamGroups) {
        // Every rebuilt parameter must have been overwritten exactly once;
        // counting suffices because names were matched against the rebuilt set.
        std::size_t expected = (rebuilt.*member).tensors.size();
        std::size_t seen = 0;
        for (const NamedTensor& nt : tensors)
            if (nt.name.rfind(std::string(prefix) + ".", 0) == 0) ++seen;
        if (seen != expected)
            throw std::runtime_error("checkpoint: " + path.string() + ": parameter group '" +
                                     prefix + "' has " + std::to_string(seen) +
                                     " tensors (expected " + std::to_string(expected) + ")");
    }

    ckpt.bundle = std::move(rebuilt);
    return ckpt;
}

}  // namespace drpriv
