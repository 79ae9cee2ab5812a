#include "abbie/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "abbie/config.hpp"

namespace abbie {

namespace {

constexpr char kMagic[4] = {'A', 'B', 'B', 'I'};
constexpr uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    os.write(buf, sizeof(T));
}

template <class T>
T take(std::istream& is, const char* what) {
    char buf[sizeof(T)];
    is.read(buf, sizeof(T));
    if (is.gcount() != sizeof(T)) throw FormatError(std::string("checkpoint truncated at ") + what);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<uint32_t>(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& is, const char* what) {
    const uint32_t n = take<uint32_t>(is, what);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (is.gcount() != static_cast<std::streamsize>(n))
        throw FormatError(std::string("checkpoint truncated at ") + what);
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint '" + path + "'");
    os.write(kMagic, 4);
    put<uint32_t>(os, ckpt.version);
    put<uint64_t>(os, static_cast<uint64_t>(ckpt.config_blob.size()));
    os.write(ckpt.config_blob.data(), static_cast<std::streamsize>(ckpt.config_blob.size()));
    put<uint32_t>(os, static_cast<uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        put<uint16_t>(os, static_cast<uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<uint8_t>(os, static_cast<uint8_t>(t.ndim()));
        for (int i = 0; i < t.ndim(); ++i) put<uint64_t>(os, static_cast<uint64_t>(t.dim(i)));
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(float)));
    }
    put<uint8_t>(os, ckpt.has_optimizer ? 1 : 0);
    put<uint64_t>(os, ckpt.step);
    put<uint64_t>(os, ckpt.tokens_seen);
    put_string(os, ckpt.data_stream);
    put_string(os, ckpt.depth_stream);
    if (!os) throw IoError("failed while writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("'" + path + "' is not a checkpoint (bad magic)");
    Checkpoint c;
    c.version = take<uint32_t>(is, "version");
    if (c.version != kVersion)
        throw FormatError("checkpoint version " + std::to_string(c.version) + " unsupported (want " +
                          std::to_string(kVersion) + ")");
    const uint64_t blob_len = take<uint64_t>(is, "config length");
    c.config_blob.resize(blob_len);
    is.read(c.config_blob.data(), static_cast<std::streamsize>(blob_len));
    if (is.gcount() != static_cast<std::streamsize>(blob_len))
        throw FormatError("checkpoint truncated at config blob");
    const uint32_t count = take<uint32_t>(is, "tensor count");
    c.tensors.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t name_len = take<uint16_t>(is, "tensor name length");
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (is.gcount() != name_len) throw FormatError("checkpoint truncated at tensor name");
        const uint8_t ndim = take<uint8_t>(is, "tensor rank");
        Shape shape(ndim);
        for (uint8_t d = 0; d < ndim; ++d)
            shape[d] = static_cast<int64_t>(take<uint64_t>(is, "tensor dims"));
        std::vector<float> vals(static_cast<size_t>(numel(shape)));
        is.read(reinterpret_cast<char*>(vals.data()),
                static_cast<std::streamsize>(vals.size() * sizeof(float)));
        if (is.gcount() != static_cast<std::streamsize>(vals.size() * sizeof(float)))
            throw FormatError("checkpoint truncated at tensor '" + name + "'");
        c.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(vals)));
    }
    c.has_optimizer = take<uint8_t>(is, "optimizer flag") != 0;
    c.step = take<uint64_t>(is, "step");
    c.tokens_seen = take<uint64_t>(is, "tokens seen");
    c.data_stream = take_string(is, "data stream state");
    c.depth_stream = take_string(is, "depth stream state");
    return c;
}

Checkpoint make_checkpoint(Model& model, const AdamWState* opt, uint64_t step,
                           uint64_t tokens_seen, const std::string& data_stream,
                           const std::string& depth_stream) {
    Checkpoint c;
    c.config_blob = model_config_ini(model.config);
    c.step = step;
    c.tokens_seen = tokens_seen;
    c.data_stream = data_stream;
    c.depth_stream = depth_stream;
    model.params.for_each([&](const std::string& name, Tensor& t) {
        c.tensors.emplace_back("param." + name, Tensor(t.shape(), t.values()));
    });
    if (opt) {
        c.has_optimizer = true;
        size_t i = 0;
        model.params.for_each([&](const std::string& name, Tensor& t) {
            if (i >= opt->slots.size())
                throw UsageError("make_checkpoint: optimizer state misaligned with params");
            c.tensors.emplace_back("adam.m." + name, Tensor(t.shape(), opt->slots[i].m));
            c.tensors.emplace_back("adam.v." + name, Tensor(t.shape(), opt->slots[i].v));
            ++i;
        });
        // Slot the optimizer step counter in as the checkpoint step when they
        // agree; they always do in the trainer, which asserts it.
    }
    return c;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
    const ModelConfig cfg = parse_model_config_ini(ckpt.config_blob);
    Model model = Model::init(cfg);
    std::map<std::string, const Tensor*> table;
    for (const auto& [name, t] : ckpt.tensors) table[name] = &t;
    model.params.for_each([&](const std::string& name, Tensor& t) {
        auto it = table.find("param." + name);
        if (it == table.end()) throw FormatError("checkpoint missing tensor 'param." + name + "'");
        if (it->second->shape() != t.shape())
            throw FormatError("checkpoint tensor 'param." + name + "' has shape " +
                              shape_str(it->second->shape()) + ", model expects " + shape_str(t.shape()));
        t.values() = it->second->values();
    });
    return model;
}

AdamWState optimizer_from_checkpoint(const Checkpoint& ckpt, Model& model) {
    if (!ckpt.has_optimizer) throw UsageError("checkpoint carries no optimizer state");
    std::map<std::string, const Tensor*> table;
    for (const auto& [name, t] : ckpt.tensors) table[name] = &t;
    AdamWState st;
    st.step = static_cast<int64_t>(ckpt.step);
    model.params.for_each([&](const std::string& name, Tensor& t) {
        auto m = table.find("adam.m." + name);
        auto v = table.find("adam.v." + name);
        if (m == table.end() || v == table.end())
            throw FormatError("checkpoint missing optimizer state for '" + name + "'");
        if (m->second->size() != t.size() || v->second->size() != t.size())
            throw FormatError("optimizer state size mismatch for '" + name + "'");
        AdamWState::Slot slot;
        slot.m = m->second->values();
        slot.v = v->second->values();
        st.slots.push_back(std::move(slot));
    });
    return st;
}

}  // namespace abbie
