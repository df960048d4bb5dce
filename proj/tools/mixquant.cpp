// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// mixquant: model init, generation, disaggregated workers, analysis
// reports and self-tests. Data goes to stdout, diagnostics to stderr.
// Exit status: 0 success, 1 runtime failure, 2 usage error.
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mixquant/analysis.hpp"
#include "mixquant/disagg.hpp"
#include "mixquant/engine.hpp"
#include "mixquant/error.hpp"
#include "mixquant/formats.hpp"
#include "mixquant/model.hpp"
#include "mixquant/selfcheck.hpp"
#include "mixquant/transformer.hpp"

namespace mq = mixquant;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<mq::TokenId> parse_tokens(const std::string& text) {
    std::vector<mq::TokenId> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || v < 0 || v > INT32_MAX) {
            throw UsageError(fmt::format("bad token id '{}' in '{}'", item, text));
        }
        out.push_back(static_cast<mq::TokenId>(v));
    }
    if (out.empty()) throw UsageError("empty token list");
    return out;
}

// --model FILE or --toy-seed N (default toy geometry).
struct ModelSource {
    std::string path;
    std::optional<std::uint64_t> toy_seed;

    void add(CLI::App* cmd) {
        auto* m = cmd->add_option("--model", path, "MXQW weight file")->check(CLI::ExistingFile);
        auto* t = cmd->add_option("--toy-seed", toy_seed, "Build the default toy model from this seed");
        m->excludes(t);
    }

    mq::ModelWeights load() const {
        if (!path.empty()) return mq::load_weights(path);
        if (!toy_seed) throw UsageError("one of --model or --toy-seed is required");
        mq::ModelConfig cfg;
        cfg.seed = *toy_seed;
        return mq::init_weights(cfg);
    }
};

struct SamplerFlags {
    bool greedy = false;
    std::optional<float> temperature;
    std::optional<std::uint64_t> seed;
    std::uint32_t max_new = 16;
    std::optional<mq::TokenId> stop;

    void add(CLI::App* cmd) {
        auto* g = cmd->add_flag("--greedy", greedy, "Greedy decoding (default)");
        auto* t = cmd->add_option("--temperature", temperature, "Temperature sampling");
        g->excludes(t);
        cmd->add_option("--seed", seed, "Sampling seed (required with --temperature)");
        cmd->add_option("--max-new", max_new, "Tokens to generate")->check(CLI::Range(1u, 1u << 20));
        cmd->add_option("--stop", stop, "Stop token id");
    }

    mq::SamplerSpec spec() const {
        mq::SamplerSpec s;
        s.max_new_tokens = max_new;
        s.stop_token = stop;
        if (temperature) {
            if (!seed) throw UsageError("--temperature needs an explicit --seed");
            s.strategy = mq::SamplingStrategy::Temperature;
            s.temperature = *temperature;
            s.seed = *seed;
            if (!(*temperature > 0.0f) || !std::isfinite(*temperature)) {
                throw UsageError("--temperature must be positive and finite");
            }
        } else if (seed) {
            throw UsageError("--seed only applies to --temperature sampling");
        }
        return s;
    }
};

const CLI::IsMember kModeNames({"baseline16", "uniform-fp4", "mixquant", "p16d4"});
const CLI::IsMember kPrecisionNames({"high", "nvfp4"});

mq::Precision parse_precision(const std::string& name) {
    return name == "nvfp4" ? mq::Precision::Nvfp4 : mq::Precision::High;
}

std::unique_ptr<mq::Transport> open_transport(const std::string& endpoint, const std::string& dir) {
    if (!endpoint.empty()) {
        const auto [host, port] = mq::parse_endpoint(endpoint);
        return std::make_unique<mq::SocketTransport>(mq::SocketTransport::connect(host, port));
    }
    return std::make_unique<mq::SpoolClientTransport>(dir);
}

// Logs every ERROR reply a worker sends.
class LoggingHandler final : public mq::FrameHandler {
  public:
    LoggingHandler(std::string name, mq::FrameHandler& inner) : name_(std::move(name)), inner_(inner) {}

    std::vector<mq::Frame> handle(const mq::Frame& f, bool& close) override {
        auto replies = inner_.handle(f, close);
        for (const mq::Frame& r : replies) {
            if (r.type == mq::FrameType::Error) {
                const mq::ErrorInfo info = mq::parse_error(r);
                std::cerr << fmt::format("{}: sent ERROR code={} {}\n", name_, static_cast<unsigned>(info.code),
                                         info.message);
            }
        }
        return replies;
    }
    void reset() override { inner_.reset(); }

  private:
    std::string name_;
    mq::FrameHandler& inner_;
};

struct WorkerFlags {
    std::string model;
    std::string listen;
    std::string blob_dir;
    std::size_t max_connections = 0;
    bool once = false;

    void add(CLI::App* cmd) {
        cmd->add_option("--model", model, "MXQW weight file")->required()->check(CLI::ExistingFile);
        auto* transport = cmd->add_option_group("transport", "Exactly one of --listen or --blob-dir");
        transport->add_option("--listen", listen, "Serve TCP on host:port (port 0 picks one)");
        transport->add_option("--blob-dir", blob_dir, "Serve the file spool in this directory")
            ->check(CLI::ExistingDirectory);
        transport->require_option(1);
        cmd->add_option("--max-connections", max_connections, "Stop after this many connections (0: forever)");
        cmd->add_flag("--once", once, "Serve a single connection");
    }

    void serve(const std::string& name, mq::FrameHandler& inner) const {
        LoggingHandler handler(name, inner);
        const std::size_t limit = once ? 1 : max_connections;
        if (!listen.empty()) {
            const auto [host, port] = mq::parse_endpoint(listen);
            mq::TcpListener listener(host, port);
            std::cout << fmt::format("listening {}:{}", host, listener.port()) << std::endl;
            mq::serve_tcp(handler, listener, limit);
        } else {
            std::cout << fmt::format("spooling {}", blob_dir) << std::endl;
            mq::serve_spool(handler, blob_dir, limit);
        }
    }
};

std::vector<std::vector<mq::TokenId>> read_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) mq::fail(mq::ErrorKind::Io, fmt::format("cannot open corpus '{}'", path));
    std::vector<std::vector<mq::TokenId>> corpus;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        try {
            corpus.push_back(parse_tokens(line));
        } catch (const UsageError& e) {
            mq::fail(mq::ErrorKind::Format, fmt::format("corpus '{}': {}", path, e.what()));
        }
    }
    return corpus;
}

int run(int argc, char** argv) {
    CLI::App app{"Phase-aware NVFP4 inference toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "mixquant 1.0.0");

    // init-model
    auto* init = app.add_subcommand("init-model", "Write seeded random weights");
    std::string init_out;
    std::uint64_t init_seed = 0;
    std::uint32_t vocab = 256, d_model = 64, layers = 2, heads = 4, ffn = 0, max_seq = 512;
    init->add_option("--out", init_out, "Output MXQW path")->required();
    init->add_option("--seed", init_seed, "Initialization seed")->required();
    init->add_option("--vocab", vocab, "Vocabulary size")->check(CLI::PositiveNumber);
    init->add_option("--d-model", d_model, "Model width");
    init->add_option("--layers", layers, "Decoder layers")->check(CLI::PositiveNumber);
    init->add_option("--heads", heads, "Attention heads")->check(CLI::PositiveNumber);
    init->add_option("--ffn", ffn, "MLP hidden width (0: 4*d_model)");
    init->add_option("--max-seq", max_seq, "Context length")->check(CLI::PositiveNumber);

    // generate
    auto* gen = app.add_subcommand("generate", "Generate under one execution mode");
    ModelSource gen_model;
    SamplerFlags gen_sampler;
    std::string gen_prompt;
    std::string gen_mode = "mixquant";
    std::string prefill_ep, decode_ep, prefill_dir, decode_dir;
    gen_model.add(gen);
    gen_sampler.add(gen);
    gen->add_option("--prompt-tokens", gen_prompt, "Comma-separated token ids")->required();
    gen->add_option("--mode", gen_mode, "Execution mode")->check(kModeNames);
    auto* pe = gen->add_option("--prefill", prefill_ep, "Prefill worker host:port");
    auto* pd = gen->add_option("--prefill-dir", prefill_dir, "Prefill worker spool directory")
                   ->check(CLI::ExistingDirectory);
    auto* de = gen->add_option("--decode", decode_ep, "Decode worker host:port");
    auto* dd = gen->add_option("--decode-dir", decode_dir, "Decode worker spool directory")
                   ->check(CLI::ExistingDirectory);
    pe->excludes(pd);
    de->excludes(dd);

    // compare-modes
    auto* cmp = app.add_subcommand("compare-modes", "Run all four modes and report divergence from baseline16");
    ModelSource cmp_model;
    SamplerFlags cmp_sampler;
    std::string cmp_prompt, cmp_format = "text";
    cmp_model.add(cmp);
    cmp_sampler.add(cmp);
    cmp->add_option("--prompt-tokens", cmp_prompt, "Comma-separated token ids")->required();
    cmp->add_option("--format", cmp_format, "text or json")->check(CLI::IsMember({"text", "json"}));

    // analyze-attn
    auto* attn = app.add_subcommand("analyze-attn", "Top-k attention mass at the last prompt position");
    ModelSource attn_model;
    std::string attn_prompt, attn_format = "text";
    std::vector<std::size_t> attn_ks;
    std::string attn_precision = "high";
    attn_model.add(attn);
    attn->add_option("--prompt-tokens", attn_prompt, "Comma-separated token ids")->required();
    attn->add_option("--k", attn_ks, "k values (default: 3.125% of the prompt, rounded up)")->delimiter(',');
    attn->add_option("--precision", attn_precision, "Prefill precision")->check(kPrecisionNames);
    attn->add_option("--format", attn_format, "text or json")->check(CLI::IsMember({"text", "json"}));

    // cost
    auto* cost = app.add_subcommand("cost", "Closed-form MAC counts and modeled speedup");
    std::uint32_t c_vocab = 256, c_d = 256, c_layers = 2, c_heads = 4, c_ffn = 1024;
    std::size_t c_len = 2048, c_gen = 1;
    double c_ratio = 3.0;
    std::string c_mode;
    std::string cost_format = "text";
    cost->add_option("--vocab", c_vocab, "Vocabulary size")->check(CLI::PositiveNumber);
    cost->add_option("--d-model", c_d, "Model width");
    cost->add_option("--layers", c_layers, "Decoder layers")->check(CLI::PositiveNumber);
    cost->add_option("--heads", c_heads, "Attention heads")->check(CLI::PositiveNumber);
    cost->add_option("--ffn", c_ffn, "MLP hidden width");
    cost->add_option("--prompt-len", c_len, "Prompt length L")->check(CLI::PositiveNumber);
    cost->add_option("--generated", c_gen, "Generated tokens T")->check(CLI::PositiveNumber);
    cost->add_option("--ratio", c_ratio, "FP4 : high-precision throughput ratio");
    cost->add_option("--mode", c_mode, "One mode (default: all)")->check(kModeNames);
    cost->add_option("--format", cost_format, "text or json")->check(CLI::IsMember({"text", "json"}));

    // perplexity
    auto* ppl = app.add_subcommand("perplexity", "Teacher-forced perplexity over a token corpus");
    ModelSource ppl_model;
    std::string corpus_path;
    std::string ppl_mode;
    ppl_model.add(ppl);
    ppl->add_option("--corpus", corpus_path, "One comma-separated sequence per line")
        ->required()
        ->check(CLI::ExistingFile);
    ppl->add_option("--mode", ppl_mode, "One mode (default: all)")->check(kModeNames);

    // workers
    auto* pw = app.add_subcommand("prefill-worker", "Serve prefill requests");
    WorkerFlags pw_flags;
    std::string pw_precision = "nvfp4";
    pw_flags.add(pw);
    pw->add_option("--precision", pw_precision, "Prefill precision")->check(kPrecisionNames);

    auto* dw = app.add_subcommand("decode-worker", "Serve decode requests");
    WorkerFlags dw_flags;
    dw_flags.add(dw);

    // dump-formats
    auto* dump = app.add_subcommand("dump-formats", "Print the FP4 and FP8 grid tables");
    std::string which = "all";
    dump->add_option("--table", which, "fp4, fp8 or all")->check(CLI::IsMember({"fp4", "fp8", "all"}));

    auto* self = app.add_subcommand("selftest", "Run the oracle-backed property suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (init->parsed()) {
            const mq::ModelConfig cfg = mq::make_config(vocab, d_model, layers, heads, max_seq, init_seed, ffn);
            const mq::ModelWeights w = mq::init_weights(cfg);
            mq::save_weights(init_out, w);
            std::cout << fmt::format("model {} digest={:016x}\n", init_out, cfg.digest());
        } else if (gen->parsed()) {
            const auto prompt = parse_tokens(gen_prompt);
            const mq::SamplerSpec sampler = gen_sampler.spec();
            const bool remote = !prefill_ep.empty() || !prefill_dir.empty() || !decode_ep.empty() || !decode_dir.empty();
            if (remote) {
                if ((prefill_ep.empty() && prefill_dir.empty()) || (decode_ep.empty() && decode_dir.empty())) {
                    throw UsageError("disaggregated generation needs both a prefill and a decode worker");
                }
                auto prefill = open_transport(prefill_ep, prefill_dir);
                auto decode = open_transport(decode_ep, decode_dir);
                std::cout << mq::run_disaggregated(*prefill, *decode, {mq::parse_mode(gen_mode), prompt, sampler});
            } else {
                const mq::Model model(gen_model.load());
                std::cout << mq::dump_trajectory(mq::generate(model, prompt, mq::parse_mode(gen_mode), sampler));
            }
        } else if (cmp->parsed()) {
            const auto prompt = parse_tokens(cmp_prompt);
            const mq::SamplerSpec sampler = cmp_sampler.spec();
            const mq::Model model(cmp_model.load());
            const mq::ModeComparison c = mq::compare_modes(model, prompt, sampler);
            std::cout << (cmp_format == "json" ? mq::to_json(c) : mq::to_text(c));
        } else if (attn->parsed()) {
            const auto prompt = parse_tokens(attn_prompt);
            const mq::Model model(attn_model.load());
            if (attn_ks.empty()) {
                attn_ks.push_back(std::max<std::size_t>(1, (prompt.size() * 3125 + 99999) / 100000));
            }
            const mq::PrefillResult r = model.prefill(prompt, parse_precision(attn_precision), true);
            const mq::TopKMassReport rep = mq::topk_mass(*r.attention, attn_ks);
            std::cout << (attn_format == "json" ? mq::to_json(rep) : mq::to_text(rep));
        } else if (cost->parsed()) {
            mq::ModelConfig cfg = mq::make_config(c_vocab, c_d, c_layers, c_heads, static_cast<std::uint32_t>(c_len),
                                                  0, c_ffn);
            std::vector<mq::ExecutionMode> modes;
            if (!c_mode.empty()) {
                modes.push_back(mq::parse_mode(c_mode));
            } else {
                modes.assign(std::begin(mq::kAllModes), std::end(mq::kAllModes));
            }
            for (mq::ExecutionMode m : modes) {
                const mq::CostReport r = mq::cost_model(cfg, c_len, c_gen, m, c_ratio);
                std::cout << (cost_format == "json" ? mq::to_json(r) : mq::to_text(r));
            }
        } else if (ppl->parsed()) {
            const auto corpus = read_corpus(corpus_path);
            const mq::Model model(ppl_model.load());
            std::vector<mq::ExecutionMode> modes;
            if (!ppl_mode.empty()) {
                modes.push_back(mq::parse_mode(ppl_mode));
            } else {
                modes.assign(std::begin(mq::kAllModes), std::end(mq::kAllModes));
            }
            for (mq::ExecutionMode m : modes) {
                std::cout << fmt::format("perplexity mode={} value={}\n", mq::to_string(m),
                                         mq::perplexity(model, m, corpus));
            }
        } else if (pw->parsed()) {
            const mq::Model model(mq::load_weights(pw_flags.model));
            mq::PrefillService service(model, parse_precision(pw_precision));
            pw_flags.serve("prefill-worker", service);
        } else if (dw->parsed()) {
            const mq::Model model(mq::load_weights(dw_flags.model));
            mq::DecodeService service(model);
            dw_flags.serve("decode-worker", service);
        } else if (dump->parsed()) {
            if (which != "fp8") std::cout << "# fp4 e2m1\n" << mq::fp4_table();
            if (which != "fp4") std::cout << "# fp8 e4m3\n" << mq::fp8_table();
        } else if (self->parsed()) {
            return mq::run_selftest(std::cout) ? 0 : kExitRuntime;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const mq::Error& e) {
        std::cerr << fmt::format("error[{}]: {}\n", mq::to_string(e.kind()), e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
