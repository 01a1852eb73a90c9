#include "pilotstack/nn/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "pilotstack/errors.hpp"

namespace pilotstack::nn {

static_assert(std::endian::native == std::endian::little, "weight files are written little-endian");

namespace {

constexpr char kMagic[4] = {'P', 'S', 'W', 'T'};

template <typename T>
constexpr std::uint8_t dtype_code() {
    return std::is_same_v<T, float> ? 0 : 1;
}

class Writer {
public:
    template <typename V>
    void put(V v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(V));
    }
    void put_raw(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes.insert(bytes.end(), p, p + n);
    }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    template <typename V>
    V get() {
        V v;
        std::memcpy(&v, take(sizeof(V)), sizeof(V));
        return v;
    }
    const std::uint8_t* take(std::size_t n) {
        if (n > size_ - pos_) throw CorruptDataError("weight file truncated");
        const auto* p = data_ + pos_;
        pos_ += n;
        return p;
    }
    bool done() const { return pos_ == size_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths.
    while (n > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        crc = crc32(crc, data, chunk);
        data += chunk;
        n -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

template <typename T>
std::vector<std::uint8_t> serialize_weights(const ModelWeights<T>& weights) {
    Writer w;
    w.put_raw(kMagic, 4);
    w.put<std::uint32_t>(kWeightsSchemaVersion);
    w.put<std::uint64_t>(weights.fingerprint);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(weights.tensors.size()));
    for (std::size_t i = 0; i < weights.tensors.size(); ++i) {
        const auto& name = weights.names.at(i);
        const auto& t = weights.tensors[i];
        w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
        w.put_raw(name.data(), name.size());
        w.put<std::uint8_t>(dtype_code<T>());
        w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) w.put<std::uint64_t>(d);
        w.put_raw(t.data(), t.size() * sizeof(T));
    }
    w.put<std::uint32_t>(crc32_of(w.bytes.data(), w.bytes.size()));
    return std::move(w.bytes);
}

template <typename T>
ModelWeights<T> deserialize_weights(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 + 4 + 8 + 4 + 4) throw CorruptDataError("weight file too short");
    const std::size_t body = bytes.size() - 4;
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, bytes.data() + body, 4);
    if (crc32_of(bytes.data(), body) != stored_crc) throw CorruptDataError("weight file checksum mismatch");

    Reader r(bytes.data(), body);
    if (std::memcmp(r.take(4), kMagic, 4) != 0) throw CorruptDataError("not a weight file (bad magic)");
    const auto version = r.get<std::uint32_t>();
    if (version != kWeightsSchemaVersion) {
        throw CorruptDataError("unsupported weight file version " + std::to_string(version));
    }
    ModelWeights<T> weights;
    weights.fingerprint = r.get<std::uint64_t>();
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = r.get<std::uint32_t>();
        const auto* name = r.take(name_len);
        weights.names.emplace_back(reinterpret_cast<const char*>(name), name_len);
        const auto dtype = r.get<std::uint8_t>();
        if (dtype > 1) throw CorruptDataError("unknown tensor dtype in weight file");
        const auto rank = r.get<std::uint32_t>();
        if (rank > 8) throw CorruptDataError("implausible tensor rank in weight file");
        Shape shape;
        for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
        const std::size_t n = element_count(shape);
        std::vector<T> data(n);
        if (dtype == dtype_code<T>()) {
            std::memcpy(data.data(), r.take(n * sizeof(T)), n * sizeof(T));
        } else if (dtype == 0) {
            std::vector<float> raw(n);
            std::memcpy(raw.data(), r.take(n * sizeof(float)), n * sizeof(float));
            std::copy(raw.begin(), raw.end(), data.begin());
        } else {
            std::vector<double> raw(n);
            std::memcpy(raw.data(), r.take(n * sizeof(double)), n * sizeof(double));
            for (std::size_t k = 0; k < n; ++k) data[k] = static_cast<T>(raw[k]);
        }
        weights.tensors.emplace_back(std::move(shape), std::move(data));
    }
    if (!r.done()) throw CorruptDataError("trailing bytes in weight file");
    return weights;
}

template <typename T>
void save_weights(const ModelWeights<T>& weights, const std::filesystem::path& path) {
    if (weights.fingerprint == 0) throw ConfigError("weights carry no spec fingerprint");
    const auto bytes = serialize_weights(weights);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("cannot write weight file " + path.string());
}

template <typename T>
ModelWeights<T> load_weights(const std::filesystem::path& path, const Network<T>& net) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open weight file " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ModelWeights<T> weights = deserialize_weights<T>(bytes);
    net.check_weights(weights);
    return weights;
}

std::uint32_t file_crc32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return crc32_of(bytes.data(), bytes.size());
}

template std::vector<std::uint8_t> serialize_weights(const ModelWeights<float>&);
template std::vector<std::uint8_t> serialize_weights(const ModelWeights<double>&);
template ModelWeights<float> deserialize_weights<float>(const std::vector<std::uint8_t>&);
template ModelWeights<double> deserialize_weights<double>(const std::vector<std::uint8_t>&);
template void save_weights(const ModelWeights<float>&, const std::filesystem::path&);
template void save_weights(const ModelWeights<double>&, const std::filesystem::path&);
template ModelWeights<float> load_weights(const std::filesystem::path&, const Network<float>&);
template ModelWeights<double> load_weights(const std::filesystem::path&, const Network<double>&);

}  // namespace pilotstack::nn
