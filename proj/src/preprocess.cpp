#include "athena/preprocess.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>

namespace athena {

std::vector<std::uint8_t> packet_model_bytes(const RawPacket& pkt, int d) {
    std::vector<std::uint8_t> bytes;
    if (pkt.ip_offset) {
        const std::size_t ip = *pkt.ip_offset;
        bytes.assign(pkt.frame.begin() + static_cast<std::ptrdiff_t>(ip), pkt.frame.end());
        if (bytes.size() >= 20) bytes.erase(bytes.begin() + 12, bytes.begin() + 20);  // src/dst addresses
    } else if (pkt.frame.size() > 14) {
        bytes.assign(pkt.frame.begin() + 14, pkt.frame.end());
    } else {
        bytes = pkt.frame;
    }
    bytes.resize(static_cast<std::size_t>(d), 0);
    return bytes;
}

PreparedSample preprocess_flow(const Flow& flow, int d, int max_len) {
    if (flow.packets.empty()) throw DataError("cannot preprocess an empty flow");
    const int n = static_cast<int>(flow.packets.size());
    if (n > max_len) throw ContractViolation("flow longer than the model cap; ingestion should have split it");

    PreparedSample s;
    s.n = n;
    s.d = d;
    s.max_len = max_len;
    s.label = flow.label.value_or(0);
    s.bytes.resize(static_cast<std::size_t>(n) * d);
    s.timestamps.resize(n);

    const double t0 = flow.packets.front().capture_time;
    for (int i = 0; i < n; ++i) {
        auto row = packet_model_bytes(flow.packets[i], d);
        std::memcpy(s.bytes.data() + static_cast<std::size_t>(i) * d, row.data(), static_cast<std::size_t>(d));
        s.timestamps[i] = flow.packets[i].capture_time - t0;
    }
    return s;
}

// ---------------------------------------------------------------------------
// dataset container

namespace {

constexpr char kDatasetMagic[8] = {'A', 'T', 'H', 'D', 'S', 'E', 'T', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("dataset file truncated");
    return v;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    dataset.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());

    os.write(kDatasetMagic, sizeof(kDatasetMagic));
    write_pod<std::uint32_t>(os, 1);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(dataset.d));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(dataset.max_len));
    write_pod<std::uint16_t>(os, static_cast<std::uint16_t>(dataset.class_names.size()));
    for (const auto& name : dataset.class_names) {
        write_pod<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    write_pod<std::uint64_t>(os, dataset.samples.size());
    for (const auto& s : dataset.samples) {
        write_pod<std::uint16_t>(os, static_cast<std::uint16_t>(s->label));
        write_pod<std::uint16_t>(os, static_cast<std::uint16_t>(s->n));
        os.write(reinterpret_cast<const char*>(s->timestamps.data()),
                 static_cast<std::streamsize>(s->n * sizeof(double)));
        os.write(reinterpret_cast<const char*>(s->bytes.data()), static_cast<std::streamsize>(s->bytes.size()));
    }
    if (!os) throw IoError("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open dataset file: " + path.string());

    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0)
        throw DataError("not a prepared dataset file: " + path.string());
    if (read_pod<std::uint32_t>(is) != 1) throw DataError("unsupported dataset file version");

    Dataset out;
    out.d = static_cast<int>(read_pod<std::uint32_t>(is));
    out.max_len = static_cast<int>(read_pod<std::uint32_t>(is));
    auto n_classes = read_pod<std::uint16_t>(is);
    for (int i = 0; i < n_classes; ++i) {
        auto len = read_pod<std::uint16_t>(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        if (!is) throw DataError("dataset file truncated in class table");
        out.class_names.push_back(std::move(name));
    }
    auto count = read_pod<std::uint64_t>(is);
    out.samples.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        auto s = std::make_shared<PreparedSample>();
        s->d = out.d;
        s->max_len = out.max_len;
        s->label = read_pod<std::uint16_t>(is);
        s->n = read_pod<std::uint16_t>(is);
        if (s->n < 1 || s->n > out.max_len) throw DataError("dataset file corrupted: flow length out of range");
        s->timestamps.resize(s->n);
        is.read(reinterpret_cast<char*>(s->timestamps.data()),
                static_cast<std::streamsize>(s->n * sizeof(double)));
        s->bytes.resize(static_cast<std::size_t>(s->n) * out.d);
        is.read(reinterpret_cast<char*>(s->bytes.data()), static_cast<std::streamsize>(s->bytes.size()));
        if (!is) throw DataError("dataset file truncated in flow records");
        s->id = i;
        s->origin_id = i;
        out.samples.push_back(std::move(s));
    }
    out.validate();
    return out;
}

void export_dataset_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    constexpr char hex[] = "0123456789abcdef";
    for (const auto& s : dataset.samples) {
        nlohmann::json row;
        row["label"] = dataset.class_names.at(s->label);
        row["n"] = s->n;
        row["timestamps"] = std::vector<double>(s->timestamps.data(), s->timestamps.data() + s->n);
        std::vector<std::string> packets;
        packets.reserve(s->n);
        for (int i = 0; i < s->n; ++i) {
            std::string h;
            h.reserve(2 * s->d);
            for (int j = 0; j < s->d; ++j) {
                auto b = s->byte_at(i, j);
                h.push_back(hex[b >> 4]);
                h.push_back(hex[b & 0xf]);
            }
            packets.push_back(std::move(h));
        }
        row["packets"] = packets;
        os << row.dump() << '\n';
    }
    if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace athena
