// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
#include "mixquant/disagg.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <iostream>
#include <thread>

#include <fmt/format.h>

#include "mixquant/bytes.hpp"

namespace mixquant {

namespace {

constexpr std::size_t kCrcSize = 4;

ErrorKind kind_for(WireError code) {
    switch (code) {
        case WireError::DigestMismatch:
        case WireError::CrcMismatch: return ErrorKind::Integrity;
        case WireError::ContextOverflow: return ErrorKind::ContextOverflow;
        default: return ErrorKind::Protocol;
    }
}

std::string_view wire_error_name(WireError code) {
    switch (code) {
        case WireError::Malformed: return "malformed";
        case WireError::DigestMismatch: return "digest-mismatch";
        case WireError::CrcMismatch: return "crc-mismatch";
        case WireError::ContextOverflow: return "context-overflow";
        case WireError::BadRequest: return "bad-request";
        case WireError::Internal: return "internal";
    }
    return "unknown";
}

std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

std::uint32_t checked_frame_length(std::uint32_t len) {
    if (len == 0 || len > kMaxFrameLength) {
        fail(ErrorKind::Protocol, fmt::format("invalid frame length {}", len));
    }
    return len;
}

[[noreturn]] void fail_errno(const std::string& what) {
    fail(ErrorKind::Io, fmt::format("{}: {}", what, std::strerror(errno)));
}

// Reads exactly n bytes. Returns false on EOF before the first byte.
bool read_exact(int fd, std::uint8_t* dst, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::recv(fd, dst + got, n - got, 0);
        if (r == 0) {
            if (got == 0) return false;
            fail(ErrorKind::Protocol, "connection closed mid-frame");
        }
        if (r < 0) {
            if (errno == EINTR) continue;
            fail_errno("recv");
        }
        got += static_cast<std::size_t>(r);
    }
    return true;
}

Frame expect_frame(Transport& t, FrameType expected, std::string_view peer) {
    std::optional<Frame> f = t.receive();
    if (!f) fail(ErrorKind::Protocol, fmt::format("{} worker closed the connection", peer));
    if (f->type == FrameType::Error) throw RemoteError(parse_error(*f));
    if (f->type != expected) {
        fail(ErrorKind::Protocol, fmt::format("{} worker sent frame type {} where {} was expected", peer,
                                              static_cast<int>(f->type), static_cast<int>(expected)));
    }
    return std::move(*f);
}

std::optional<Frame> hello_reply(const Model& model, const Frame& f) {
    const std::uint64_t wanted = parse_hello(f);
    if (wanted != 0 && wanted != model.digest()) {
        return make_error(WireError::DigestMismatch,
                          fmt::format("peer expects model digest {:016x}, worker has {:016x}", wanted, model.digest()));
    }
    return make_hello(model.digest());
}

Frame unknown_frame_error(const Frame& f) {
    return make_error(WireError::Malformed, fmt::format("unknown frame type {}", static_cast<int>(f.type)));
}

}  // namespace

// ---------------------------------------------------------------------------
// KV blob

std::vector<std::uint8_t> serialize_kv(const KvCache& kv, std::uint64_t config_digest,
                                       std::span<const TokenId> prompt, std::span<const float> last_logits) {
    if (kv.length() == 0) {
        fail(ErrorKind::Shape, "serialize_kv: empty cache (prefill must precede transfer)");
    }
    if (kv.length() != prompt.size()) {
        fail(ErrorKind::Shape, fmt::format("serialize_kv: cache length {} != prompt length {}", kv.length(),
                                           prompt.size()));
    }
    ByteWriter w;
    w.put_magic("MXQK");
    w.put_u32(kKvBlobVersion);
    w.put_u64(config_digest);
    w.put_u32(static_cast<std::uint32_t>(kv.n_layers()));
    w.put_u32(static_cast<std::uint32_t>(kv.n_heads()));
    w.put_u32(static_cast<std::uint32_t>(kv.head_dim()));
    w.put_u32(static_cast<std::uint32_t>(kv.length()));
    w.put_u32(static_cast<std::uint32_t>(prompt.size()));
    for (TokenId t : prompt) w.put_u32(static_cast<std::uint32_t>(t));
    for (std::size_t l = 0; l < kv.n_layers(); ++l) {
        for (float v : kv.layer_keys(l)) w.put_f32(v);
        for (float v : kv.layer_values(l)) w.put_f32(v);
    }
    w.put_u32(static_cast<std::uint32_t>(last_logits.size()));
    for (float v : last_logits) w.put_f32(v);
    w.put_u32(crc32_ieee(w.bytes()));
    return w.take();
}

KvBlob deserialize_kv(std::span<const std::uint8_t> bytes, std::size_t max_seq_len) {
    if (bytes.size() < kCrcSize) fail(ErrorKind::Format, "KV blob shorter than its checksum");
    const auto body = bytes.first(bytes.size() - kCrcSize);
    ByteReader trailer(bytes.last(kCrcSize));
    if (trailer.u32() != crc32_ieee(body)) {
        fail(ErrorKind::Integrity, "KV blob CRC-32 mismatch");
    }
    ByteReader r(body);
    r.expect_magic("MXQK");
    if (const auto version = r.u32(); version != kKvBlobVersion) {
        fail(ErrorKind::Format, fmt::format("KV blob: unsupported version {}", version));
    }
    KvBlob blob;
    blob.config_digest = r.u64();
    const std::size_t n_layers = r.u32();
    const std::size_t n_heads = r.u32();
    const std::size_t head_dim = r.u32();
    const std::size_t seq_len = r.u32();
    const std::size_t prompt_len = r.u32();
    if (seq_len == 0 || prompt_len != seq_len) {
        fail(ErrorKind::Format, "KV blob: prompt length must equal a nonzero sequence length");
    }
    if (seq_len > max_seq_len) {
        fail(ErrorKind::ContextOverflow,
             fmt::format("KV blob: {} positions exceed max_seq_len {}", seq_len, max_seq_len));
    }
    const std::size_t payload = seq_len * n_heads * head_dim;
    // Bound the allocation by what the buffer can actually hold.
    if (n_layers == 0 || payload == 0 || r.remaining() / 4 < prompt_len + 2 * n_layers * payload + 1) {
        fail(ErrorKind::Format, "KV blob: header does not match payload size");
    }
    blob.prompt.resize(prompt_len);
    for (TokenId& t : blob.prompt) t = static_cast<TokenId>(r.u32());
    std::vector<std::vector<float>> keys(n_layers), values(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        keys[l].resize(payload);
        for (float& v : keys[l]) v = r.f32();
        values[l].resize(payload);
        for (float& v : values[l]) v = r.f32();
    }
    const std::size_t vocab = r.u32();
    if (r.remaining() != vocab * 4) fail(ErrorKind::Format, "KV blob: logits section size mismatch");
    blob.last_logits.resize(vocab);
    for (float& v : blob.last_logits) v = r.f32();
    blob.cache = KvCache::from_payloads(n_heads, head_dim, max_seq_len, seq_len, std::move(keys), std::move(values));
    return blob;
}

// ---------------------------------------------------------------------------
// Frames

bool is_known_frame_type(FrameType t) {
    const auto v = static_cast<std::uint8_t>(t);
    return v >= static_cast<std::uint8_t>(FrameType::Hello) && v <= static_cast<std::uint8_t>(FrameType::Error);
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
    const auto len = static_cast<std::uint32_t>(f.payload.size() + 1);
    checked_frame_length(len);
    std::vector<std::uint8_t> out;
    out.reserve(len + 4);
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(len >> shift));
    out.push_back(static_cast<std::uint8_t>(f.type));
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

std::vector<Frame> decode_frames(std::span<const std::uint8_t> bytes) {
    std::vector<Frame> frames;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 4) fail(ErrorKind::Protocol, "truncated frame header");
        const std::uint32_t len = checked_frame_length(read_be32(bytes.data() + pos));
        pos += 4;
        if (bytes.size() - pos < len) fail(ErrorKind::Protocol, "truncated frame payload");
        Frame f;
        f.type = static_cast<FrameType>(bytes[pos]);
        f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos + 1),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
        frames.push_back(std::move(f));
        pos += len;
    }
    return frames;
}

Frame make_hello(std::uint64_t digest) {
    ByteWriter w;
    w.put_u64(digest);
    return Frame{FrameType::Hello, w.take()};
}

std::uint64_t parse_hello(const Frame& f) {
    ByteReader r(f.payload);
    const std::uint64_t digest = r.u64();
    if (r.remaining() != 0) fail(ErrorKind::Format, "HELLO: trailing bytes");
    return digest;
}

Frame make_error(WireError code, const std::string& message) {
    ByteWriter w;
    w.put_u32(static_cast<std::uint32_t>(code));
    w.put_bytes({reinterpret_cast<const std::uint8_t*>(message.data()), message.size()});
    return Frame{FrameType::Error, w.take()};
}

ErrorInfo parse_error(const Frame& f) {
    ByteReader r(f.payload);
    ErrorInfo info;
    info.code = static_cast<WireError>(r.u32());
    auto rest = r.take(r.remaining());
    info.message.assign(rest.begin(), rest.end());
    return info;
}

Frame make_tokens(const std::string& dump) {
    return Frame{FrameType::Tokens, std::vector<std::uint8_t>(dump.begin(), dump.end())};
}

std::string parse_tokens(const Frame& f) {
    return std::string(f.payload.begin(), f.payload.end());
}

Frame make_generate_request(const GenerateRequest& req) {
    ByteWriter w;
    std::uint8_t mode_index = 0;
    while (kAllModes[mode_index] != req.mode) ++mode_index;
    w.put_u8(mode_index);
    w.put_u32(static_cast<std::uint32_t>(req.prompt.size()));
    for (TokenId t : req.prompt) w.put_u32(static_cast<std::uint32_t>(t));
    w.put_u8(req.sampler.strategy == SamplingStrategy::Greedy ? 0 : 1);
    w.put_f32(req.sampler.temperature);
    w.put_u64(req.sampler.seed);
    w.put_u32(req.sampler.max_new_tokens);
    w.put_u8(req.sampler.stop_token ? 1 : 0);
    w.put_u32(static_cast<std::uint32_t>(req.sampler.stop_token.value_or(0)));
    return Frame{FrameType::GenerateReq, w.take()};
}

GenerateRequest parse_generate_request(const Frame& f) {
    ByteReader r(f.payload);
    GenerateRequest req;
    const std::uint8_t mode_index = r.u8();
    if (mode_index >= std::size(kAllModes)) fail(ErrorKind::Format, "GENERATE_REQ: unknown mode");
    req.mode = kAllModes[mode_index];
    const std::uint32_t n = r.u32();
    if (r.remaining() / 4 < n) fail(ErrorKind::Format, "GENERATE_REQ: prompt length exceeds payload");
    req.prompt.resize(n);
    for (TokenId& t : req.prompt) t = static_cast<TokenId>(r.u32());
    const std::uint8_t strategy = r.u8();
    if (strategy > 1) fail(ErrorKind::Format, "GENERATE_REQ: unknown sampling strategy");
    req.sampler.strategy = strategy == 0 ? SamplingStrategy::Greedy : SamplingStrategy::Temperature;
    req.sampler.temperature = r.f32();
    req.sampler.seed = r.u64();
    req.sampler.max_new_tokens = r.u32();
    const std::uint8_t has_stop = r.u8();
    const auto stop = static_cast<TokenId>(r.u32());
    if (has_stop > 1) fail(ErrorKind::Format, "GENERATE_REQ: bad stop flag");
    if (has_stop) req.sampler.stop_token = stop;
    if (r.remaining() != 0) fail(ErrorKind::Format, "GENERATE_REQ: trailing bytes");
    return req;
}

RemoteError::RemoteError(ErrorInfo info)
    : Error(kind_for(info.code), fmt::format("worker error [{}]: {}", wire_error_name(info.code), info.message)),
      info_(std::move(info)) {}

// ---------------------------------------------------------------------------
// Transports

SocketTransport::~SocketTransport() {
    if (fd_ >= 0) ::close(fd_);
}

SocketTransport SocketTransport::connect(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
        fail(ErrorKind::Io, fmt::format("resolve {}:{}: {}", host, port, ::gai_strerror(rc)));
    }
    int fd = -1;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) fail(ErrorKind::Io, fmt::format("connect {}:{} failed", host, port));
    return SocketTransport(fd);
}

void SocketTransport::send(const Frame& f) {
    const auto bytes = encode_frame(f);
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t w = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR) continue;
            fail_errno("send");
        }
        sent += static_cast<std::size_t>(w);
    }
}

std::optional<Frame> SocketTransport::receive() {
    std::uint8_t header[4];
    if (!read_exact(fd_, header, 4)) return std::nullopt;
    const std::uint32_t len = checked_frame_length(read_be32(header));
    std::vector<std::uint8_t> body(len);
    if (!read_exact(fd_, body.data(), len)) fail(ErrorKind::Protocol, "connection closed mid-frame");
    Frame f;
    f.type = static_cast<FrameType>(body[0]);
    f.payload.assign(body.begin() + 1, body.end());
    return f;
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
        fail(ErrorKind::Io, fmt::format("resolve {}:{}: {}", host, port, ::gai_strerror(rc)));
    }
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd_ < 0) continue;
        const int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(fd_, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd_, 16) == 0) break;
        ::close(fd_);
        fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) fail(ErrorKind::Io, fmt::format("cannot listen on {}:{}", host, port));
    sockaddr_storage addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    if (addr.ss_family == AF_INET) {
        port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    } else {
        port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
    }
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

SocketTransport TcpListener::accept() {
    while (true) {
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd >= 0) return SocketTransport(fd);
        if (errno != EINTR) fail_errno("accept");
    }
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size()) {
        fail(ErrorKind::InvalidValue, fmt::format("endpoint '{}' is not host:port", endpoint));
    }
    const std::string port_text = endpoint.substr(colon + 1);
    std::size_t used = 0;
    unsigned long port = 0;
    try {
        port = std::stoul(port_text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != port_text.size() || port > 65535) {
        fail(ErrorKind::InvalidValue, fmt::format("endpoint '{}' has an invalid port", endpoint));
    }
    return {endpoint.substr(0, colon), static_cast<std::uint16_t>(port)};
}

void BufferTransport::send(const Frame& f) {
    const auto bytes = encode_frame(f);
    output_.insert(output_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> BufferTransport::receive() {
    if (pos_ == input_.size()) return std::nullopt;
    if (input_.size() - pos_ < 4) fail(ErrorKind::Protocol, "truncated frame header");
    const std::uint32_t len = checked_frame_length(read_be32(input_.data() + pos_));
    if (input_.size() - pos_ - 4 < len) fail(ErrorKind::Protocol, "truncated frame payload");
    auto frames = decode_frames(std::span(input_).subspan(pos_, 4 + len));
    pos_ += 4 + len;
    return std::move(frames.front());
}

SpoolClientTransport::SpoolClientTransport(std::filesystem::path dir, std::chrono::milliseconds timeout)
    : dir_(std::move(dir)), timeout_(timeout) {
    static std::atomic<std::uint64_t> counter{0};
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    name_ = fmt::format("{:020}-{}-{}", std::chrono::duration_cast<std::chrono::nanoseconds>(now).count(),
                        ::getpid(), counter++);
}

void SpoolClientTransport::send(const Frame& f) {
    if (exchanged_) fail(ErrorKind::Protocol, "spool transport: request already submitted");
    const auto bytes = encode_frame(f);
    request_.insert(request_.end(), bytes.begin(), bytes.end());
}

void SpoolClientTransport::exchange() {
    namespace fs = std::filesystem;
    exchanged_ = true;
    const fs::path tmp = dir_ / (name_ + ".req.tmp");
    const fs::path req = dir_ / (name_ + ".req");
    const fs::path resp = dir_ / (name_ + ".resp");
    write_file(tmp.string(), request_);
    fs::rename(tmp, req);
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (!fs::exists(resp)) {
        if (std::chrono::steady_clock::now() > deadline) {
            fail(ErrorKind::Io, fmt::format("spool: no response for {} after {} ms", req.string(), timeout_.count()));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    response_ = read_file(resp.string());
    fs::remove(resp);
    frames_ = decode_frames(response_);
}

std::optional<Frame> SpoolClientTransport::receive() {
    if (!exchanged_) exchange();
    if (next_ == frames_.size()) return std::nullopt;
    return frames_[next_++];
}

void RecordingTransport::send(const Frame& f) {
    const auto bytes = encode_frame(f);
    sent_.insert(sent_.end(), bytes.begin(), bytes.end());
    inner_.send(f);
}

std::optional<Frame> RecordingTransport::receive() {
    auto f = inner_.receive();
    if (f) {
        const auto bytes = encode_frame(*f);
        received_.insert(received_.end(), bytes.begin(), bytes.end());
    }
    return f;
}

// ---------------------------------------------------------------------------
// Workers

std::vector<Frame> PrefillService::handle(const Frame& f, bool& close) {
    switch (f.type) {
        case FrameType::Hello: {
            try {
                return {*hello_reply(model_, f)};
            } catch (const Error& e) {
                close = true;
                return {make_error(WireError::Malformed, e.what())};
            }
        }
        case FrameType::GenerateReq: {
            GenerateRequest req;
            try {
                req = parse_generate_request(f);
            } catch (const Error& e) {
                close = true;
                return {make_error(WireError::Malformed, e.what())};
            }
            if (req.prompt.empty()) return {make_error(WireError::BadRequest, "empty prompt")};
            if (prefill_precision(req.mode) != precision_) {
                return {make_error(WireError::BadRequest,
                                   fmt::format("mode {} prefills at {}, this worker runs {}", to_string(req.mode),
                                               to_string(prefill_precision(req.mode)), to_string(precision_)))};
            }
            if (req.prompt.size() > model_.config().max_seq_len) {
                return {make_error(WireError::ContextOverflow,
                                   fmt::format("prompt of {} tokens exceeds max_seq_len {}", req.prompt.size(),
                                               model_.config().max_seq_len))};
            }
            try {
                const PrefillResult r = model_.prefill(req.prompt, precision_);
                return {Frame{FrameType::KvBlob, serialize_kv(r.cache, model_.digest(), req.prompt, r.logits)}};
            } catch (const Error& e) {
                return {make_error(WireError::BadRequest, e.what())};
            }
        }
        default:
            if (!is_known_frame_type(f.type)) {
                close = true;
                return {unknown_frame_error(f)};
            }
            return {make_error(WireError::BadRequest,
                               fmt::format("prefill worker does not accept frame type {}", static_cast<int>(f.type)))};
    }
}

std::vector<Frame> DecodeService::handle(const Frame& f, bool& close) {
    const ModelConfig& cfg = model_.config();
    switch (f.type) {
        case FrameType::Hello: {
            try {
                return {*hello_reply(model_, f)};
            } catch (const Error& e) {
                close = true;
                return {make_error(WireError::Malformed, e.what())};
            }
        }
        case FrameType::KvBlob: {
            blob_.reset();
            KvBlob blob;
            try {
                blob = deserialize_kv(f.payload, cfg.max_seq_len);
            } catch (const Error& e) {
                const WireError code = e.kind() == ErrorKind::Integrity         ? WireError::CrcMismatch
                                       : e.kind() == ErrorKind::ContextOverflow ? WireError::ContextOverflow
                                                                                : WireError::Malformed;
                return {make_error(code, e.what())};
            }
            if (blob.config_digest != model_.digest()) {
                return {make_error(WireError::DigestMismatch,
                                   fmt::format("KV blob digest {:016x} does not match loaded model {:016x}",
                                               blob.config_digest, model_.digest()))};
            }
            if (blob.cache.n_layers() != cfg.n_layers || blob.cache.n_heads() != cfg.n_heads ||
                blob.cache.head_dim() != cfg.head_dim || blob.last_logits.size() != cfg.vocab_size) {
                return {make_error(WireError::BadRequest, "KV blob geometry does not match the loaded model")};
            }
            blob_ = std::move(blob);
            return {};
        }
        case FrameType::GenerateReq: {
            GenerateRequest req;
            try {
                req = parse_generate_request(f);
            } catch (const Error& e) {
                close = true;
                return {make_error(WireError::Malformed, e.what())};
            }
            if (!blob_) return {make_error(WireError::BadRequest, "GENERATE_REQ before a valid KV_BLOB")};
            if (req.prompt != blob_->prompt) {
                blob_.reset();
                return {make_error(WireError::BadRequest, "GENERATE_REQ prompt differs from the KV blob prompt")};
            }
            KvBlob blob = std::move(*blob_);
            blob_.reset();
            try {
                Trajectory t;
                t.mode = req.mode;
                t.sampler = req.sampler;
                t.config_digest = model_.digest();
                t.prompt = req.prompt;
                t.steps = decode_loop(model_, blob.cache, std::move(blob.last_logits), decode_precision(req.mode),
                                      req.sampler);
                return {make_tokens(dump_trajectory(t))};
            } catch (const Error& e) {
                const WireError code =
                    e.kind() == ErrorKind::ContextOverflow ? WireError::ContextOverflow : WireError::BadRequest;
                return {make_error(code, e.what())};
            }
        }
        default:
            if (!is_known_frame_type(f.type)) {
                close = true;
                return {unknown_frame_error(f)};
            }
            return {make_error(WireError::BadRequest,
                               fmt::format("decode worker does not accept frame type {}", static_cast<int>(f.type)))};
    }
}

void serve_connection(FrameHandler& handler, Transport& transport) {
    handler.reset();
    while (true) {
        std::optional<Frame> f;
        try {
            f = transport.receive();
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Protocol) throw;
            try {
                transport.send(make_error(WireError::Malformed, e.what()));
            } catch (const Error&) {
                // Peer is gone; nothing left to report to.
            }
            return;
        }
        if (!f) return;
        bool close = false;
        for (const Frame& reply : handler.handle(*f, close)) transport.send(reply);
        if (close) return;
    }
}

void serve_tcp(FrameHandler& handler, TcpListener& listener, std::size_t max_connections) {
    for (std::size_t served = 0; max_connections == 0 || served < max_connections; ++served) {
        SocketTransport conn = listener.accept();
        try {
            serve_connection(handler, conn);
        } catch (const Error& e) {
            std::cerr << "worker: connection dropped: " << e.what() << '\n';
        }
    }
}

void serve_spool(FrameHandler& handler, const std::filesystem::path& dir, std::size_t max_requests,
                 std::chrono::milliseconds poll) {
    namespace fs = std::filesystem;
    std::size_t served = 0;
    while (max_requests == 0 || served < max_requests) {
        std::vector<fs::path> pending;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".req") pending.push_back(entry.path());
        }
        if (pending.empty()) {
            std::this_thread::sleep_for(poll);
            continue;
        }
        std::sort(pending.begin(), pending.end());
        for (const fs::path& req : pending) {
            if (max_requests != 0 && served >= max_requests) break;
            BufferTransport transport(read_file(req.string()));
            serve_connection(handler, transport);
            const fs::path stem = req.parent_path() / req.stem();
            const fs::path tmp = stem.string() + ".resp.tmp";
            write_file(tmp.string(), transport.output());
            fs::rename(tmp, stem.string() + ".resp");
            fs::remove(req);
            ++served;
        }
    }
}

// ---------------------------------------------------------------------------
// Coordinator

std::string run_disaggregated(Transport& prefill, Transport& decode, const GenerateRequest& req) {
    const Frame request = make_generate_request(req);
    prefill.send(make_hello(0));
    prefill.send(request);
    expect_frame(prefill, FrameType::Hello, "prefill");
    Frame blob = expect_frame(prefill, FrameType::KvBlob, "prefill");

    decode.send(make_hello(0));
    decode.send(blob);
    decode.send(request);
    expect_frame(decode, FrameType::Hello, "decode");
    return parse_tokens(expect_frame(decode, FrameType::Tokens, "decode"));
}

}  // namespace mixquant
