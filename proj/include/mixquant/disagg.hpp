// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// Prefill/decode worker split. A prefill worker turns a prompt into a KV
// blob; a decode worker loads the blob and runs the decode loop.
//
// Frame: u32 big-endian length of (type byte + payload), u8 type, payload.
// Numeric payload fields are little-endian.
//
// KV blob (little-endian):
//   "MXQK" | u32 version | u64 config digest
//   | u32 n_layers | u32 n_heads | u32 head_dim | u32 seq_len
//   | u32 prompt_len | i32 token * prompt_len
//   | per layer: K then V, f32 [seq, head, dim]
//   | u32 vocab_size | f32 last-position logits * vocab_size
//   | u32 CRC-32 of every preceding byte
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <string>
#include <vector>

#include "mixquant/engine.hpp"
#include "mixquant/error.hpp"
#include "mixquant/transformer.hpp"

namespace mixquant {

// ---------------------------------------------------------------------------
// KV blob

inline constexpr std::uint32_t kKvBlobVersion = 1;

struct KvBlob {
    std::uint64_t config_digest = 0;
    std::vector<TokenId> prompt;
    KvCache cache;
    std::vector<float> last_logits;
};

std::vector<std::uint8_t> serialize_kv(const KvCache& kv, std::uint64_t config_digest,
                                       std::span<const TokenId> prompt, std::span<const float> last_logits);

/// Verifies the CRC before parsing anything else. The rebuilt cache gets
/// `max_seq_len` as its capacity.
KvBlob deserialize_kv(std::span<const std::uint8_t> bytes, std::size_t max_seq_len);

// ---------------------------------------------------------------------------
// Frames

enum class FrameType : std::uint8_t {
    Hello = 1,
    KvBlob = 2,
    GenerateReq = 3,
    Tokens = 4,
    Error = 5,
};

bool is_known_frame_type(FrameType t);

struct Frame {
    FrameType type = FrameType::Hello;
    std::vector<std::uint8_t> payload;

    bool operator==(const Frame&) const = default;
};

inline constexpr std::uint32_t kMaxFrameLength = 1u << 30;

std::vector<std::uint8_t> encode_frame(const Frame& f);

/// Splits a byte buffer holding whole frames. Throws Error(Protocol) on a
/// truncated or oversized frame.
std::vector<Frame> decode_frames(std::span<const std::uint8_t> bytes);

enum class WireError : std::uint32_t {
    Malformed = 1,
    DigestMismatch = 2,
    CrcMismatch = 3,
    ContextOverflow = 4,
    BadRequest = 5,
    Internal = 6,
};

struct ErrorInfo {
    WireError code = WireError::Internal;
    std::string message;
};

Frame make_hello(std::uint64_t digest);
std::uint64_t parse_hello(const Frame& f);
Frame make_error(WireError code, const std::string& message);
ErrorInfo parse_error(const Frame& f);
Frame make_tokens(const std::string& dump);
std::string parse_tokens(const Frame& f);

struct GenerateRequest {
    ExecutionMode mode = ExecutionMode::MixQuant;
    std::vector<TokenId> prompt;
    SamplerSpec sampler;

    bool operator==(const GenerateRequest&) const = default;
};

Frame make_generate_request(const GenerateRequest& req);
GenerateRequest parse_generate_request(const Frame& f);

/// Raised on the client side when a worker answers with an ERROR frame.
class RemoteError : public Error {
  public:
    explicit RemoteError(ErrorInfo info);
    WireError code() const noexcept { return info_.code; }

  private:
    ErrorInfo info_;
};

// ---------------------------------------------------------------------------
// Transports

class Transport {
  public:
    virtual ~Transport() = default;
    virtual void send(const Frame& f) = 0;
    /// Next frame, or nullopt on a clean end of stream.
    virtual std::optional<Frame> receive() = 0;
};

/// Connected TCP stream (owns the descriptor).
class SocketTransport final : public Transport {
  public:
    explicit SocketTransport(int fd) : fd_(fd) {}
    ~SocketTransport() override;
    SocketTransport(SocketTransport&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    SocketTransport& operator=(SocketTransport&&) = delete;

    static SocketTransport connect(const std::string& host, std::uint16_t port);

    void send(const Frame& f) override;
    std::optional<Frame> receive() override;

  private:
    int fd_ = -1;
};

class TcpListener {
  public:
    TcpListener(const std::string& host, std::uint16_t port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const { return port_; }
    SocketTransport accept();

  private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

/// "host:port" with a numeric or resolvable host.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

/// Frames from an in-memory byte buffer; sent frames are appended to an
/// output buffer. Used by the spool worker for one request file.
class BufferTransport final : public Transport {
  public:
    explicit BufferTransport(std::vector<std::uint8_t> input) : input_(std::move(input)) {}

    void send(const Frame& f) override;
    std::optional<Frame> receive() override;

    const std::vector<std::uint8_t>& output() const { return output_; }

  private:
    std::vector<std::uint8_t> input_;
    std::size_t pos_ = 0;
    std::vector<std::uint8_t> output_;
};

/// Client side of the file spool: buffers outgoing frames, then on the
/// first receive() publishes `<dir>/<name>.req` and waits for the worker's
/// `<dir>/<name>.resp`.
class SpoolClientTransport final : public Transport {
  public:
    SpoolClientTransport(std::filesystem::path dir, std::chrono::milliseconds timeout = std::chrono::seconds(60));

    void send(const Frame& f) override;
    std::optional<Frame> receive() override;

    const std::vector<std::uint8_t>& request_bytes() const { return request_; }
    const std::vector<std::uint8_t>& response_bytes() const { return response_; }

  private:
    void exchange();

    std::filesystem::path dir_;
    std::string name_;
    std::chrono::milliseconds timeout_;
    std::vector<std::uint8_t> request_;
    std::vector<std::uint8_t> response_;
    std::vector<Frame> frames_;
    std::size_t next_ = 0;
    bool exchanged_ = false;
};

/// Tees every frame's encoded bytes in both directions.
class RecordingTransport final : public Transport {
  public:
    explicit RecordingTransport(Transport& inner) : inner_(inner) {}

    void send(const Frame& f) override;
    std::optional<Frame> receive() override;

    const std::vector<std::uint8_t>& sent() const { return sent_; }
    const std::vector<std::uint8_t>& received() const { return received_; }

  private:
    Transport& inner_;
    std::vector<std::uint8_t> sent_;
    std::vector<std::uint8_t> received_;
};

// ---------------------------------------------------------------------------
// Workers

class FrameHandler {
  public:
    virtual ~FrameHandler() = default;
    /// Replies to one frame. Setting `close` ends the connection after the
    /// replies are sent.
    virtual std::vector<Frame> handle(const Frame& f, bool& close) = 0;
    /// Forget per-connection state.
    virtual void reset() {}
};

/// Answers GENERATE_REQ with KV_BLOB, running prefill at `precision`.
class PrefillService final : public FrameHandler {
  public:
    PrefillService(const Model& model, Precision precision) : model_(model), precision_(precision) {}
    std::vector<Frame> handle(const Frame& f, bool& close) override;

  private:
    const Model& model_;
    Precision precision_;
};

/// Accepts KV_BLOB then GENERATE_REQ and answers TOKENS, decoding at the
/// request mode's decode precision.
class DecodeService final : public FrameHandler {
  public:
    explicit DecodeService(const Model& model) : model_(model) {}
    std::vector<Frame> handle(const Frame& f, bool& close) override;
    void reset() override { blob_.reset(); }

  private:
    const Model& model_;
    std::optional<KvBlob> blob_;
};

/// Serves frames until end of stream or a closing reply.
void serve_connection(FrameHandler& handler, Transport& transport);

/// Accepts and serves connections one at a time; 0 means no limit.
void serve_tcp(FrameHandler& handler, TcpListener& listener, std::size_t max_connections = 0);

/// Processes `<dir>/*.req` files in name order, each as one connection,
/// writing `<name>.resp` atomically. Returns after `max_requests` (0 means
/// run forever).
void serve_spool(FrameHandler& handler, const std::filesystem::path& dir, std::size_t max_requests = 0,
                 std::chrono::milliseconds poll = std::chrono::milliseconds(5));

// ---------------------------------------------------------------------------
// Coordinator

/// Drives one request through a prefill worker then a decode worker and
/// returns the trajectory dump carried by the TOKENS frame.
std::string run_disaggregated(Transport& prefill, Transport& decode, const GenerateRequest& req);

}  // namespace mixquant
