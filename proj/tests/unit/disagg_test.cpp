// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <filesystem>
#include <thread>

#include <fmt/format.h>
#include <gtest/gtest.h>
#include <unistd.h>

#include "mixquant/disagg.hpp"

namespace mixquant {
namespace {

namespace fs = std::filesystem;

Model toy(std::uint64_t seed) { return Model(init_weights(make_config(64, 32, 2, 2, 64, seed))); }

GenerateRequest request(ExecutionMode mode, std::vector<TokenId> prompt, std::uint32_t n) {
    GenerateRequest r;
    r.mode = mode;
    r.prompt = std::move(prompt);
    r.sampler.max_new_tokens = n;
    return r;
}

fs::path scratch_dir(const std::string& tag) {
    static int counter = 0;
    const fs::path p =
        fs::temp_directory_path() / fmt::format("mixquant-{}-{}-{}", tag, ::getpid(), counter++);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<Frame> exchange(FrameHandler& h, const std::vector<Frame>& in) {
    std::vector<std::uint8_t> bytes;
    for (const Frame& f : in) {
        const auto e = encode_frame(f);
        bytes.insert(bytes.end(), e.begin(), e.end());
    }
    BufferTransport t(bytes);
    serve_connection(h, t);
    return decode_frames(t.output());
}

TEST(KvBlob, RoundTripIsBitExact) {
    const Model model = toy(1);
    const std::vector<TokenId> prompt = {3, 1, 4, 1, 5, 9};
    const PrefillResult r = model.prefill(prompt, Precision::Nvfp4);
    const auto bytes = serialize_kv(r.cache, model.digest(), prompt, r.logits);
    const KvBlob blob = deserialize_kv(bytes, model.config().max_seq_len);
    EXPECT_EQ(blob.config_digest, model.digest());
    EXPECT_EQ(blob.prompt, prompt);
    EXPECT_TRUE(blob.cache == r.cache);
    EXPECT_EQ(blob.last_logits, r.logits);
    EXPECT_EQ(serialize_kv(blob.cache, blob.config_digest, blob.prompt, blob.last_logits), bytes);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "MXQK");
}

TEST(KvBlob, EverySingleByteCorruptionIsRejected) {
    const Model model = toy(2);
    const std::vector<TokenId> prompt = {7, 7};
    const PrefillResult r = model.prefill(prompt, Precision::High);
    const auto bytes = serialize_kv(r.cache, model.digest(), prompt, r.logits);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        for (std::uint8_t flip : {std::uint8_t{0x01}, std::uint8_t{0x80}}) {
            auto bad = bytes;
            bad[i] ^= flip;
            try {
                deserialize_kv(bad, model.config().max_seq_len);
                ADD_FAILURE() << "byte " << i << " accepted";
            } catch (const Error& e) {
                ASSERT_EQ(e.kind(), ErrorKind::Integrity) << "byte " << i;
            }
        }
    }
    auto truncated = bytes;
    truncated.pop_back();
    EXPECT_THROW(deserialize_kv(truncated, model.config().max_seq_len), Error);
}

TEST(KvBlob, RejectsEmptyCacheAndLengthMismatch) {
    const Model model = toy(3);
    const KvCache empty = model.new_cache();
    const std::vector<float> logits(64, 0.0f);
    EXPECT_THROW(serialize_kv(empty, model.digest(), std::vector<TokenId>{}, logits), Error);
    const PrefillResult r = model.prefill(std::vector<TokenId>{1, 2, 3}, Precision::High);
    EXPECT_THROW(serialize_kv(r.cache, model.digest(), std::vector<TokenId>{1, 2}, r.logits), Error);
}

TEST(KvBlob, CapacityBelowSequenceIsOverflow) {
    const Model model = toy(3);
    const std::vector<TokenId> prompt = {1, 2, 3, 4};
    const PrefillResult r = model.prefill(prompt, Precision::High);
    const auto bytes = serialize_kv(r.cache, model.digest(), prompt, r.logits);
    try {
        deserialize_kv(bytes, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ContextOverflow);
    }
}

TEST(Frames, EncodeDecode) {
    const Frame f{FrameType::Tokens, {1, 2, 3}};
    const auto bytes = encode_frame(f);
    const std::vector<std::uint8_t> want = {0, 0, 0, 4, 4, 1, 2, 3};
    EXPECT_EQ(bytes, want);
    auto two = bytes;
    two.insert(two.end(), bytes.begin(), bytes.end());
    EXPECT_EQ(decode_frames(two), (std::vector<Frame>{f, f}));
    two.pop_back();
    EXPECT_THROW(decode_frames(two), Error);
    const std::vector<std::uint8_t> zero_len = {0, 0, 0, 0};
    EXPECT_THROW(decode_frames(zero_len), Error);
}

TEST(Frames, MessageRoundTrips) {
    EXPECT_EQ(parse_hello(make_hello(0x0123456789abcdefull)), 0x0123456789abcdefull);
    const ErrorInfo e = parse_error(make_error(WireError::CrcMismatch, "bad crc"));
    EXPECT_EQ(e.code, WireError::CrcMismatch);
    EXPECT_EQ(e.message, "bad crc");
    EXPECT_EQ(parse_tokens(make_tokens("a\nb\n")), "a\nb\n");

    GenerateRequest req = request(ExecutionMode::P16D4, {5, 6, 7}, 9);
    req.sampler.strategy = SamplingStrategy::Temperature;
    req.sampler.temperature = 0.7f;
    req.sampler.seed = 1234567890123ull;
    req.sampler.stop_token = 4;
    EXPECT_EQ(parse_generate_request(make_generate_request(req)), req);

    Frame truncated = make_generate_request(req);
    truncated.payload.pop_back();
    EXPECT_THROW(parse_generate_request(truncated), Error);
}

TEST(Endpoint, Parse) {
    EXPECT_EQ(parse_endpoint("127.0.0.1:8080"), (std::pair<std::string, std::uint16_t>{"127.0.0.1", 8080}));
    EXPECT_THROW(parse_endpoint("localhost"), Error);
    EXPECT_THROW(parse_endpoint("localhost:99999"), Error);
}

TEST(Services, DigestMismatchIsReported) {
    const Model model = toy(4);
    PrefillService prefill(model, Precision::Nvfp4);
    const auto out = exchange(prefill, {make_hello(model.digest() ^ 1)});
    ASSERT_EQ(out.size(), 1u);
    ASSERT_EQ(out[0].type, FrameType::Error);
    EXPECT_EQ(parse_error(out[0]).code, WireError::DigestMismatch);
}

TEST(Services, UnknownFrameIsMalformedAndCloses) {
    const Model model = toy(4);
    DecodeService decode(model);
    const auto out = exchange(decode, {Frame{static_cast<FrameType>(42), {}}, make_hello(0)});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(parse_error(out[0]).code, WireError::Malformed);
}

TEST(Services, PrefillErrors) {
    const Model model = toy(4);
    PrefillService prefill(model, Precision::Nvfp4);
    std::vector<TokenId> long_prompt(65, 1);
    auto out = exchange(prefill, {make_generate_request(request(ExecutionMode::MixQuant, long_prompt, 1))});
    EXPECT_EQ(parse_error(out.at(0)).code, WireError::ContextOverflow);
    out = exchange(prefill, {make_generate_request(request(ExecutionMode::MixQuant, {999}, 1))});
    EXPECT_EQ(parse_error(out.at(0)).code, WireError::BadRequest);
    out = exchange(prefill, {make_generate_request(request(ExecutionMode::Baseline16, {1}, 1))});
    EXPECT_EQ(parse_error(out.at(0)).code, WireError::BadRequest);
}

TEST(Services, CorruptBlobIsCrcMismatch) {
    const Model model = toy(5);
    const std::vector<TokenId> prompt = {1, 2, 3};
    const PrefillResult r = model.prefill(prompt, Precision::Nvfp4);
    auto bytes = serialize_kv(r.cache, model.digest(), prompt, r.logits);
    bytes[40] ^= 0x10;
    DecodeService decode(model);
    const auto out = exchange(decode, {Frame{FrameType::KvBlob, bytes}});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(parse_error(out[0]).code, WireError::CrcMismatch);
}

TEST(Services, BlobFromAnotherModelIsDigestMismatch) {
    const Model a = toy(5);
    const Model b = toy(6);
    const std::vector<TokenId> prompt = {1, 2, 3};
    const PrefillResult r = a.prefill(prompt, Precision::Nvfp4);
    DecodeService decode(b);
    const auto out =
        exchange(decode, {Frame{FrameType::KvBlob, serialize_kv(r.cache, a.digest(), prompt, r.logits)}});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(parse_error(out[0]).code, WireError::DigestMismatch);
}

TEST(Services, DecodeWithoutBlobIsRejected) {
    const Model model = toy(5);
    DecodeService decode(model);
    const auto out = exchange(decode, {make_generate_request(request(ExecutionMode::MixQuant, {1}, 2))});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].type, FrameType::Error);
}

class EndToEnd : public ::testing::TestWithParam<ExecutionMode> {};

TEST_P(EndToEnd, TcpMatchesMonolithic) {
    const ExecutionMode mode = GetParam();
    const Model model = toy(11);
    PrefillService prefill(model, prefill_precision(mode));
    DecodeService decode(model);
    TcpListener pl("127.0.0.1", 0);
    TcpListener dl("127.0.0.1", 0);
    std::thread ps([&] { serve_tcp(prefill, pl, 1); });
    std::thread ds([&] { serve_tcp(decode, dl, 1); });

    const GenerateRequest req = request(mode, {2, 7, 1, 8, 2, 8}, 10);
    std::string remote;
    {
        SocketTransport p = SocketTransport::connect("127.0.0.1", pl.port());
        SocketTransport d = SocketTransport::connect("127.0.0.1", dl.port());
        remote = run_disaggregated(p, d, req);
    }
    ps.join();
    ds.join();
    EXPECT_EQ(remote, dump_trajectory(generate(model, req.prompt, mode, req.sampler)));
}

TEST_P(EndToEnd, SpoolMatchesMonolithicAndTcpBytes) {
    const ExecutionMode mode = GetParam();
    const Model model = toy(12);
    const GenerateRequest req = request(mode, {9, 9, 4}, 8);

    const fs::path pdir = scratch_dir("prefill");
    const fs::path ddir = scratch_dir("decode");
    PrefillService prefill(model, prefill_precision(mode));
    DecodeService decode(model);
    std::thread ps([&] { serve_spool(prefill, pdir, 1); });
    std::thread ds([&] { serve_spool(decode, ddir, 1); });
    SpoolClientTransport p(pdir);
    SpoolClientTransport d(ddir);
    RecordingTransport rp(p);
    RecordingTransport rd(d);
    const std::string spooled = run_disaggregated(rp, rd, req);
    ps.join();
    ds.join();
    EXPECT_EQ(spooled, dump_trajectory(generate(model, req.prompt, mode, req.sampler)));

    // The same request over TCP moves identical bytes.
    PrefillService prefill2(model, prefill_precision(mode));
    DecodeService decode2(model);
    TcpListener pl("127.0.0.1", 0);
    TcpListener dl("127.0.0.1", 0);
    std::thread ps2([&] { serve_tcp(prefill2, pl, 1); });
    std::thread ds2([&] { serve_tcp(decode2, dl, 1); });
    std::vector<std::uint8_t> tcp_sent_p, tcp_recv_p, tcp_sent_d, tcp_recv_d;
    {
        SocketTransport sp = SocketTransport::connect("127.0.0.1", pl.port());
        SocketTransport sd = SocketTransport::connect("127.0.0.1", dl.port());
        RecordingTransport tp(sp);
        RecordingTransport td(sd);
        run_disaggregated(tp, td, req);
        tcp_sent_p = tp.sent();
        tcp_recv_p = tp.received();
        tcp_sent_d = td.sent();
        tcp_recv_d = td.received();
    }
    ps2.join();
    ds2.join();
    EXPECT_EQ(tcp_sent_p, rp.sent());
    EXPECT_EQ(tcp_recv_p, rp.received());
    EXPECT_EQ(tcp_sent_d, rd.sent());
    EXPECT_EQ(tcp_recv_d, rd.received());
    EXPECT_EQ(p.request_bytes(), rp.sent());
    fs::remove_all(pdir);
    fs::remove_all(ddir);
}

INSTANTIATE_TEST_SUITE_P(AllModes, EndToEnd, ::testing::ValuesIn(kAllModes),
                         [](const auto& info) {
                             std::string name(to_string(info.param));
                             std::replace(name.begin(), name.end(), '-', '_');
                             return name;
                         });

TEST(EndToEnd, RemoteErrorSurfacesOnClient) {
    const Model model = toy(13);
    PrefillService prefill(model, Precision::Nvfp4);
    DecodeService decode(model);
    TcpListener pl("127.0.0.1", 0);
    std::thread ps([&] { serve_tcp(prefill, pl, 1); });
    {
        SocketTransport p = SocketTransport::connect("127.0.0.1", pl.port());
        std::vector<std::uint8_t> none;
        BufferTransport d(none);
        try {
            run_disaggregated(p, d, request(ExecutionMode::MixQuant, {5000}, 3));
            ADD_FAILURE();
        } catch (const RemoteError& e) {
            EXPECT_EQ(e.code(), WireError::BadRequest);
        }
    }
    ps.join();
}

}  // namespace
}  // namespace mixquant
