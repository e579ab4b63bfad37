#include "diffmts/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "json_config.hpp"

namespace diffmts {

Precision precision_from_string(const std::string& s) {
    if (s == "f32") return Precision::F32;
    if (s == "f64") return Precision::F64;
    throw ConfigError("unknown precision '" + s + "' (expected f32 or f64)");
}

std::string to_string(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }

void round_to_f32(ParamMap& params) {
    for (auto& [name, array] : params) {
        (void)name;
        for (std::size_t i = 0; i < array.size(); ++i) {
            array[i] = static_cast<double>(static_cast<float>(array[i]));
        }
    }
}

namespace {

constexpr char kMagic[4] = {'D', 'M', 'T', 'S'};

void put_bytes(std::ostream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void put_u16(std::ostream& out, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    put_bytes(out, b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put_bytes(out, b, 8);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

// Reader that tracks the byte offset for error reporting.
struct Reader {
    std::istream& in;
    std::size_t offset = 0;

    void bytes(void* data, std::size_t n, const char* what) {
        in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) {
            throw FormatError(std::string("checkpoint truncated while reading ") + what, offset);
        }
        offset += n;
    }
    std::uint16_t u16(const char* what) {
        unsigned char b[2];
        bytes(b, 2, what);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32(const char* what) {
        unsigned char b[4];
        bytes(b, 4, what);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::uint64_t u64(const char* what) {
        unsigned char b[8];
        bytes(b, 8, what);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    bool at_eof() {
        in.peek();
        return in.eof();
    }
};

void write_array(std::ostream& out, const std::string& name, const Array& a, Precision prec) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    put_bytes(out, name.data(), name.size());
    out.put(prec == Precision::F32 ? '\x00' : '\x01');
    out.put(static_cast<char>(a.rank()));
    for (std::size_t d = 0; d < a.rank(); ++d) put_u32(out, static_cast<std::uint32_t>(a.dim(d)));
    if (prec == Precision::F32) {
        for (std::size_t i = 0; i < a.size(); ++i) put_f32(out, static_cast<float>(a[i]));
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) put_f64(out, a[i]);
    }
}

struct NamedArray {
    std::string name;
    Array array;
};

NamedArray read_array(Reader& r) {
    const std::uint32_t name_len = r.u32("array name length");
    if (name_len > 4096) throw FormatError("array name implausibly long", r.offset);
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len, "array name");
    unsigned char dtype = 0, ndim = 0;
    r.bytes(&dtype, 1, "dtype");
    r.bytes(&ndim, 1, "ndim");
    if (dtype > 1) throw FormatError("unknown dtype code " + std::to_string(dtype), r.offset);
    Shape shape(ndim);
    for (std::size_t d = 0; d < ndim; ++d) shape[d] = r.u32("array dims");
    Array a(shape);
    if (dtype == 0) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = static_cast<double>(std::bit_cast<float>(r.u32("array values")));
        }
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = std::bit_cast<double>(r.u64("array values"));
        }
    }
    return {std::move(name), std::move(a)};
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::json rng;
    for (const auto& [name, state] : ckpt.rng_state) rng[name] = std::to_string(state);

    std::size_t array_count = ckpt.params.size() + ckpt.adam.m.size() + ckpt.adam.v.size();
    if (ckpt.norm.fitted) array_count += 2;

    nlohmann::json meta{{"model", model_config_to_json(ckpt.model)},
                        {"schedule",
                         {{"kind", to_string(ckpt.schedule_kind)},
                          {"steps", ckpt.schedule_steps},
                          {"offset", ckpt.schedule_offset}}},
                        {"precision", to_string(ckpt.precision)},
                        {"epoch", ckpt.epoch},
                        {"adam_step", ckpt.adam.step},
                        {"rng", rng},
                        {"norm_fitted", ckpt.norm.fitted},
                        {"arrays", array_count}};
    const std::string meta_str = meta.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write checkpoint: " + path);
        put_bytes(out, kMagic, 4);
        put_u16(out, kCheckpointVersion);
        put_u32(out, static_cast<std::uint32_t>(meta_str.size()));
        put_bytes(out, meta_str.data(), meta_str.size());
        for (const auto& [name, a] : ckpt.params) write_array(out, name, a, ckpt.precision);
        for (const auto& [name, a] : ckpt.adam.m) {
            write_array(out, "adam.m." + name, a, ckpt.precision);
        }
        for (const auto& [name, a] : ckpt.adam.v) {
            write_array(out, "adam.v." + name, a, ckpt.precision);
        }
        if (ckpt.norm.fitted) {
            write_array(out, "norm.min", Array({ckpt.norm.min.size()}, ckpt.norm.min),
                        Precision::F64);
            write_array(out, "norm.max", Array({ckpt.norm.max.size()}, ckpt.norm.max),
                        Precision::F64);
        }
        if (!out) throw IoError("failed writing checkpoint: " + path);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IoError("cannot move checkpoint into place: " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    Reader r{in};

    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("not a checkpoint file (bad magic)", 0);
    }
    const std::uint16_t version = r.u16("version");
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint version " + std::to_string(version) +
                           " not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint32_t meta_len = r.u32("metadata length");
    std::string meta_str(meta_len, '\0');
    r.bytes(meta_str.data(), meta_len, "metadata");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint metadata is not valid JSON: ") + e.what(), 10);
    }

    Checkpoint ckpt;
    try {
        ckpt.model = model_config_from_json(meta.at("model"));
        ckpt.schedule_kind = schedule_kind_from_string(meta.at("schedule").at("kind"));
        ckpt.schedule_steps = meta.at("schedule").at("steps").get<std::size_t>();
        ckpt.schedule_offset = meta.at("schedule").at("offset").get<double>();
        ckpt.precision = precision_from_string(meta.at("precision"));
        ckpt.epoch = meta.at("epoch").get<std::int64_t>();
        ckpt.adam.step = meta.at("adam_step").get<std::int64_t>();
        for (const auto& [name, state] : meta.at("rng").items()) {
            ckpt.rng_state[name] = std::stoull(state.get<std::string>());
        }
        ckpt.norm.fitted = meta.at("norm_fitted").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint metadata incomplete: ") + e.what(), 10);
    }

    const std::size_t array_count = meta.at("arrays").get<std::size_t>();
    for (std::size_t i = 0; i < array_count; ++i) {
        NamedArray na = read_array(r);
        if (na.name.rfind("adam.m.", 0) == 0) {
            ckpt.adam.m.emplace(na.name.substr(7), std::move(na.array));
        } else if (na.name.rfind("adam.v.", 0) == 0) {
            ckpt.adam.v.emplace(na.name.substr(7), std::move(na.array));
        } else if (na.name == "norm.min") {
            ckpt.norm.min = na.array.values();
        } else if (na.name == "norm.max") {
            ckpt.norm.max = na.array.values();
        } else {
            ckpt.params.emplace(std::move(na.name), std::move(na.array));
        }
    }
    if (!r.at_eof()) throw FormatError("trailing data after last array record", r.offset);
    if (ckpt.norm.fitted && (ckpt.norm.min.empty() || ckpt.norm.max.empty())) {
        throw FormatError("normalization statistics missing from checkpoint", r.offset);
    }
    return ckpt;
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for hashing: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (in.eof()) break;
    }
    return h;
}

}  // namespace diffmts
