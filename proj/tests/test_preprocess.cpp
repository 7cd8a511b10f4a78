#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

#include "athena/preprocess.hpp"

#include <fstream>

using namespace athena;
using namespace athena::testing;

namespace {

Flow flow_from_packets(std::vector<RawPacket> packets, int label = 0) {
    Flow f;
    f.key = make_flow_key(packets.front(), 0);
    f.packets = std::move(packets);
    f.label = label;
    return f;
}

void check_invariants(const PreparedSample& s) {
    REQUIRE(s.n >= 1);
    REQUIRE(s.n <= s.max_len);
    Mat f = s.feature_matrix();
    Vec t = s.timestamp_vector();
    Vec m = s.mask();
    REQUIRE(f.rows() == s.max_len);
    REQUIRE(f.cols() == s.d);
    CHECK(t[0] == 0.0);
    CHECK(f.minCoeff() >= 0.0);
    CHECK(f.maxCoeff() <= 1.0);
    for (int i = 0; i < s.max_len; ++i) {
        if (i < s.n) {
            CHECK(m[i] == 1.0);
            if (i > 0) CHECK(t[i] >= t[i - 1]);
        } else {
            CHECK(m[i] == 0.0);
            CHECK(t[i] == 0.0);
            CHECK(f.row(i).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

}  // namespace

TEST_CASE("single 500-byte packet: first 448 bytes survive, padding rows zero") {
    std::vector<std::uint8_t> payload(500 - 28);  // IP(20 w/o addrs would be 12) nudged below
    // build a frame whose post-strip byte count exceeds d=448
    payload.resize(600);
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<std::uint8_t>(i & 0xff);
    auto pkt = parse_frame(1.0, build_frame(0x0a000001, 0x0a000002, 10, 20, proto::kTcp, payload), 0);

    auto sample = preprocess_flow(flow_from_packets({pkt}), 448, 30);
    CHECK(sample.n == 1);
    check_invariants(sample);

    auto stripped = packet_model_bytes(pkt, 448);
    CHECK(stripped.size() == 448);
    // row 0 equals the first 448 post-strip bytes, normalized
    Mat f = sample.feature_matrix();
    for (int j = 0; j < 448; ++j) CHECK(f(0, j) == doctest::Approx(stripped[j] / 255.0).epsilon(1e-12));
}

TEST_CASE("byte scaling endpoints: 255 -> 1.0 and 0 -> 0.0") {
    std::vector<std::uint8_t> payload(64, 0);
    payload[0] = 255;
    payload[1] = 0;
    auto pkt = parse_frame(0.0, build_frame(1, 2, 3, 4, proto::kUdp, payload), 0);
    auto sample = preprocess_flow(flow_from_packets({pkt}), 448, 30);
    auto row = packet_model_bytes(pkt, 448);
    // locate the payload start: 12 (trimmed IP header) + 8 (UDP header)
    CHECK(row[20] == 255);
    Mat f = sample.feature_matrix();
    CHECK(f(0, 20) == 1.0);
    CHECK(f(0, 21) == 0.0);
}

TEST_CASE("ethernet header is gone and ip addresses are deleted from the header") {
    std::vector<std::uint8_t> payload(32, 0xee);
    auto pkt = parse_frame(0.0, build_frame(0xc0a80101, 0xc0a80102, 1111, 2222, proto::kTcp, payload), 0);
    auto bytes = packet_model_bytes(pkt, 448);

    // byte 0 is the IP version/IHL byte, not an Ethernet MAC byte
    CHECK(bytes[0] == 0x45);
    // the 8 address bytes are deleted: TTL/proto (offsets 8,9) stay put,
    // and what used to sit after the addresses (the TCP header) moves up to offset 12
    CHECK(bytes[8] == 64);
    CHECK(bytes[9] == proto::kTcp);
    CHECK(bytes[12] == (1111 >> 8));
    CHECK(bytes[13] == (1111 & 0xff));
    // no 192.168.x.x octet sequence survives anywhere in the row
    for (std::size_t i = 0; i + 1 < bytes.size(); ++i) CHECK_FALSE((bytes[i] == 0xc0 && bytes[i + 1] == 0xa8));
}

TEST_CASE("timestamps become seconds relative to the first packet") {
    std::vector<RawPacket> packets{
        make_tcp_packet(100.0, "10.0.0.1", 1, "10.0.0.2", 2, 0),
        make_tcp_packet(100.5, "10.0.0.1", 1, "10.0.0.2", 2, 1),
        make_tcp_packet(102.0, "10.0.0.1", 1, "10.0.0.2", 2, 2),
    };
    auto sample = preprocess_flow(flow_from_packets(std::move(packets)), 448, 30);
    CHECK(sample.timestamps[0] == 0.0);
    CHECK(sample.timestamps[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sample.timestamps[2] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("empty flow is an invalid input") {
    Flow f;
    CHECK_THROWS_AS(preprocess_flow(f, 448, 30), DataError);
}

TEST_CASE("prepared-sample invariants hold under a 10k-case property test") {
    Rng rng(99);
    for (int iter = 0; iter < 10000; ++iter) {
        int n = static_cast<int>(rng.uniform_int(1, 30));
        std::vector<RawPacket> packets;
        double t = rng.uniform(0.0, 1000.0);
        for (int i = 0; i < n; ++i) {
            t += rng.uniform(0.0, 3.0);
            std::vector<std::uint8_t> payload(static_cast<std::size_t>(rng.uniform_int(0, 600)));
            for (auto& b : payload) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
            auto src = "10.0.0." + std::to_string(rng.uniform_int(1, 200));
            packets.push_back(parse_frame(
                t, build_frame(ip_from_string(src), 0x0a000001, static_cast<std::uint16_t>(rng.uniform_int(1, 65535)),
                               80, rng.bernoulli(0.5) ? proto::kTcp : proto::kUdp, payload),
                static_cast<std::uint64_t>(i)));
        }
        int d = rng.bernoulli(0.5) ? 448 : static_cast<int>(rng.uniform_int(16, 512));
        auto sample = preprocess_flow(flow_from_packets(std::move(packets)), d, 30);
        CHECK(sample.n == n);
        check_invariants(sample);
    }
}

TEST_CASE("dataset container round-trips losslessly") {
    Rng rng(123);
    Dataset ds = random_dataset({"benign", "scan"}, 20, 64, 30, rng);
    auto dir = temp_dir("dataset-io");
    auto path = dir / "data.athd";
    save_dataset(ds, path);
    Dataset back = load_dataset(path);

    REQUIRE(back.size() == ds.size());
    CHECK(back.class_names == ds.class_names);
    CHECK(back.d == ds.d);
    CHECK(back.max_len == ds.max_len);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.samples[i]->label == ds.samples[i]->label);
        CHECK(back.samples[i]->n == ds.samples[i]->n);
        CHECK(back.samples[i]->bytes == ds.samples[i]->bytes);
        CHECK((back.samples[i]->timestamps - ds.samples[i]->timestamps).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("dataset loader rejects corrupted files") {
    Rng rng(5);
    Dataset ds = random_dataset({"a", "b"}, 3, 32, 30, rng);
    auto dir = temp_dir("dataset-corrupt");
    auto path = dir / "data.athd";
    save_dataset(ds, path);

    auto size = std::filesystem::file_size(path);
    std::string blob(size, '\0');
    {
        std::ifstream is(path, std::ios::binary);
        is.read(blob.data(), static_cast<std::streamsize>(size));
    }
    auto cut = dir / "cut.athd";
    {
        std::ofstream os(cut, std::ios::binary);
        os.write(blob.data(), static_cast<std::streamsize>(size - 7));
    }
    CHECK_THROWS_AS(load_dataset(cut), DataError);
    CHECK_THROWS_AS(load_dataset("/nonexistent.athd"), IoError);
}

TEST_CASE("jsonl exporter writes one record per flow") {
    Rng rng(7);
    Dataset ds = random_dataset({"benign", "scan"}, 2, 16, 30, rng);
    auto dir = temp_dir("dataset-jsonl");
    auto path = dir / "debug.jsonl";
    export_dataset_jsonl(ds, path);

    std::ifstream is(path);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(is, line)) {
        ++lines;
        CHECK(line.find("\"label\"") != std::string::npos);
        CHECK(line.find("\"packets\"") != std::string::npos);
    }
    CHECK(lines == ds.size());
}
