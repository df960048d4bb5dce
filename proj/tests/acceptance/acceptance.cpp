// Copyright (c) 2026, The MixQuant Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Sizes, seeds and tolerances are fixed below.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

#include "mixquant/analysis.hpp"
#include "mixquant/disagg.hpp"
#include "mixquant/engine.hpp"
#include "mixquant/formats.hpp"
#include "mixquant/selfcheck.hpp"

namespace mq = mixquant;
namespace fs = std::filesystem;

namespace {

// AC1
constexpr std::size_t kFp4Samples = 1'000'000;
constexpr double kFp4BudgetSeconds = 10.0;
// AC2
constexpr std::size_t kPropertyBlocks = 10'000;
// AC4
constexpr std::size_t kGemmInstances = 1'000;
constexpr std::size_t kGemmMaxMN = 64;
constexpr std::size_t kGemmMaxK = 1024;
constexpr double kGemmRelTol = 1e-5;
// AC5
constexpr std::size_t kIdentityPairs = 10;
// AC6
constexpr double kTeacherForcingRelTol = 1e-5;
// AC7
constexpr std::size_t kDisaggCases = 5;
constexpr double kDisaggBudgetSeconds = 60.0;
// AC8
constexpr std::size_t kTopkMatrices = 1'000;
constexpr double kTopkTol = 1e-6;
constexpr double kKlSelfTol = 1e-9;
// AC9
constexpr double kPrefillShareTarget = 0.95;
// AC10
constexpr std::size_t kCompareModels = 20;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string summarize(const mq::CheckResult& r) {
    std::string s = fmt::format("{}: cases={} failures={}", r.name, r.cases, r.failures);
    if (r.blocks != 0) s += fmt::format(" blocks={}", r.blocks);
    if (r.out_of_domain != 0) s += fmt::format(" subnormal_scale_violations={}", r.out_of_domain);
    if (!r.detail.empty()) s += fmt::format(" first=\"{}\"", r.detail);
    return s;
}

std::vector<mq::TokenId> seeded_prompt(std::uint64_t seed, std::size_t len, std::uint32_t vocab) {
    mq::SplitMix64 rng(seed ^ 0x5eedull);
    std::vector<mq::TokenId> p(len);
    for (auto& t : p) t = static_cast<mq::TokenId>(rng.next() % vocab);
    return p;
}

mq::SamplerSpec greedy(std::uint32_t n) {
    mq::SamplerSpec s;
    s.max_new_tokens = n;
    return s;
}

// ---------------------------------------------------------------------------

Outcome ac1_formats() {
    const auto t0 = std::chrono::steady_clock::now();
    const mq::CheckResult tables = mq::check_format_tables();
    const mq::CheckResult proj = mq::check_fp4_projection(kFp4Samples, 101);
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = tables.passed() && proj.passed() && proj.cases >= kFp4Samples && secs < kFp4BudgetSeconds;
    o.detail = fmt::format("{}; {}; {:.2f}s (limit {}s)", summarize(tables), summarize(proj), secs, kFp4BudgetSeconds);
    return o;
}

// Idempotence is asserted literally: a violation on a subnormal block scale
// still counts, and is shown separately.
Outcome ac2_quantizer() {
    const mq::CheckResult idem = mq::check_idempotence(kPropertyBlocks, 201);
    const mq::CheckResult pow2 = mq::check_pow2_equivariance(kPropertyBlocks, 202);
    const mq::CheckResult zero = mq::check_zero_blocks(kPropertyBlocks, 203);
    const mq::CheckResult bound = mq::check_no_clip_bound(kPropertyBlocks, 204);
    const std::size_t idem_violations = idem.failures + idem.out_of_domain;
    Outcome o;
    bool enough = true;
    for (const mq::CheckResult* r : {&idem, &pow2, &zero, &bound}) enough = enough && r->blocks >= kPropertyBlocks;
    o.pass = enough && idem_violations == 0 && pow2.passed() && zero.passed() && bound.passed();
    o.detail = fmt::format("idempotence: blocks={} violations={} (normal-scale={} subnormal-scale={}); {}; {}; {}",
                           idem.blocks, idem_violations, idem.failures, idem.out_of_domain, summarize(pow2),
                           summarize(zero), summarize(bound));
    return o;
}

Outcome ac3_worked_example() {
    const mq::CheckResult r = mq::check_worked_example();
    return {r.passed(), summarize(r)};
}

Outcome ac4_qgemm() {
    const mq::CheckResult r = mq::check_qgemm(kGemmInstances, 401, kGemmMaxMN, kGemmMaxK, kGemmRelTol);
    return {r.passed() && r.cases >= kGemmInstances, summarize(r)};
}

Outcome ac5_identity_collapse() {
    std::size_t mismatches = 0;
    for (std::uint64_t seed = 0; seed < kIdentityPairs; ++seed) {
        const mq::Model model(mq::init_weights(mq::make_config(128, 64, 2, 4, 128, 500 + seed)),
                              mq::QuantizerKind::Identity);
        const auto prompt = seeded_prompt(seed, 8 + seed, 128);
        const mq::Trajectory base = mq::generate(model, prompt, mq::ExecutionMode::Baseline16, greedy(16));
        for (mq::ExecutionMode m : mq::kAllModes) {
            const mq::Trajectory t = mq::generate(model, prompt, m, greedy(16));
            bool same = t.steps.size() == base.steps.size();
            for (std::size_t s = 0; same && s < t.steps.size(); ++s) {
                same = t.steps[s].token == base.steps[s].token && t.steps[s].log_probs == base.steps[s].log_probs;
            }
            if (!same) ++mismatches;
        }
    }
    return {mismatches == 0, fmt::format("pairs={} modes=4 mismatches={}", kIdentityPairs, mismatches)};
}

double rel_error(std::span<const float> got, std::span<const float> want) {
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        diff = std::max(diff, std::fabs(static_cast<double>(got[i]) - static_cast<double>(want[i])));
        scale = std::max(scale, std::fabs(static_cast<double>(want[i])));
    }
    return diff / std::max(scale, 1e-30);
}

// Relative error is max |delta| over the logit row divided by max |reference|.
Outcome ac6_teacher_forcing() {
    struct Case {
        std::uint32_t d, layers, heads, len, prefix;
    };
    const std::array<Case, 3> cases = {{{64, 2, 4, 96, 17}, {128, 3, 8, 256, 1}, {256, 4, 8, 512, 200}}};
    double worst = 0.0;
    std::size_t positions = 0;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        const Case& k = cases[c];
        const mq::Model model(mq::init_weights(mq::make_config(256, k.d, k.layers, k.heads, k.len, 600 + c)));
        const auto tokens = seeded_prompt(600 + c, k.len, 256);
        for (mq::Precision p : {mq::Precision::High, mq::Precision::Nvfp4}) {
            const mq::Matrix full = model.forward_sequence(tokens, p);
            mq::PrefillResult r = model.prefill(std::span(tokens).first(k.prefix), p);
            worst = std::max(worst, rel_error(r.logits, full.row(k.prefix - 1)));
            ++positions;
            for (std::size_t pos = k.prefix; pos < tokens.size(); ++pos) {
                const auto logits = model.decode_step(r.cache, tokens[pos], p);
                worst = std::max(worst, rel_error(logits, full.row(pos)));
                ++positions;
            }
        }
    }
    return {worst <= kTeacherForcingRelTol,
            fmt::format("configs={} positions={} max_rel_error={:.3e} (tol {:.0e})", cases.size(), positions, worst,
                        kTeacherForcingRelTol)};
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / fmt::format("mixquant-accept-{}-{}", tag, ::getpid());
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string run_tcp(const mq::Model& model, const mq::GenerateRequest& req) {
    mq::PrefillService prefill(model, mq::prefill_precision(req.mode));
    mq::DecodeService decode(model);
    mq::TcpListener pl("127.0.0.1", 0);
    mq::TcpListener dl("127.0.0.1", 0);
    std::thread ps([&] { mq::serve_tcp(prefill, pl, 1); });
    std::thread ds([&] { mq::serve_tcp(decode, dl, 1); });
    std::string out;
    try {
        mq::SocketTransport p = mq::SocketTransport::connect("127.0.0.1", pl.port());
        mq::SocketTransport d = mq::SocketTransport::connect("127.0.0.1", dl.port());
        out = mq::run_disaggregated(p, d, req);
    } catch (...) {
        ps.join();
        ds.join();
        throw;
    }
    ps.join();
    ds.join();
    return out;
}

std::string run_spool(const mq::Model& model, const mq::GenerateRequest& req, const fs::path& root) {
    const fs::path pdir = root / "prefill";
    const fs::path ddir = root / "decode";
    fs::create_directories(pdir);
    fs::create_directories(ddir);
    mq::PrefillService prefill(model, mq::prefill_precision(req.mode));
    mq::DecodeService decode(model);
    std::thread ps([&] { mq::serve_spool(prefill, pdir, 1); });
    std::thread ds([&] { mq::serve_spool(decode, ddir, 1); });
    std::string out;
    try {
        mq::SpoolClientTransport p(pdir);
        mq::SpoolClientTransport d(ddir);
        out = mq::run_disaggregated(p, d, req);
    } catch (...) {
        ps.join();
        ds.join();
        throw;
    }
    ps.join();
    ds.join();
    return out;
}

Outcome ac7_disaggregation() {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path root = fresh_dir("spool");
    std::size_t runs = 0, mismatches = 0;
    std::size_t blobs = 0, blob_failures = 0;
    std::size_t corruptions = 0, accepted = 0;
    std::string first;
    for (std::uint64_t c = 0; c < kDisaggCases; ++c) {
        const mq::Model model(mq::init_weights(mq::make_config(128, 64, 2, 4, 128, 700 + c)));
        mq::GenerateRequest req;
        req.prompt = seeded_prompt(700 + c, 6 + 3 * c, 128);
        req.sampler = greedy(12);

        for (mq::ExecutionMode m : mq::kAllModes) {
            req.mode = m;
            const std::string want = mq::dump_trajectory(mq::generate(model, req.prompt, m, req.sampler));
            const std::string tcp = run_tcp(model, req);
            const std::string spool = run_spool(model, req, root / fmt::format("{}-{}", c, mq::to_string(m)));
            runs += 2;
            for (const std::string* got : {&tcp, &spool}) {
                if (*got != want) {
                    ++mismatches;
                    if (first.empty()) first = fmt::format("case {} mode {}", c, mq::to_string(m));
                }
            }
        }

        const mq::PrefillResult r = model.prefill(req.prompt, mq::Precision::Nvfp4);
        const auto bytes = mq::serialize_kv(r.cache, model.digest(), req.prompt, r.logits);
        const mq::KvBlob blob = mq::deserialize_kv(bytes, model.config().max_seq_len);
        ++blobs;
        if (!(blob.cache == r.cache) || blob.last_logits != r.logits || blob.prompt != req.prompt ||
            mq::serialize_kv(blob.cache, blob.config_digest, blob.prompt, blob.last_logits) != bytes) {
            ++blob_failures;
        }
        for (std::size_t i = 0; i < bytes.size(); ++i) {
            auto bad = bytes;
            bad[i] ^= static_cast<std::uint8_t>(1u << (i % 8));
            ++corruptions;
            try {
                mq::deserialize_kv(bad, model.config().max_seq_len);
                ++accepted;
            } catch (const mq::Error&) {
            }
        }
    }
    fs::remove_all(root);
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = mismatches == 0 && blob_failures == 0 && accepted == 0 && secs < kDisaggBudgetSeconds;
    o.detail = fmt::format(
        "cases={} transport_runs={} mismatches={}{} blob_round_trips={} blob_failures={} corruptions={} "
        "accepted={} {:.2f}s (limit {}s)",
        kDisaggCases, runs, mismatches, first.empty() ? "" : " first=" + first, blobs, blob_failures, corruptions,
        accepted, secs, kDisaggBudgetSeconds);
    return o;
}

Outcome ac8_metrics() {
    const mq::CheckResult topk = mq::check_topk(kTopkMatrices, 801, kTopkTol);
    const mq::CheckResult kl = mq::check_kl_self(kTopkMatrices, 802, kKlSelfTol);

    // Uniform and one-hot rows must come out exactly.
    std::size_t exact_failures = 0;
    for (std::size_t n : {1u, 2u, 7u, 32u, 64u, 128u}) {
        mq::AttentionRecord a;
        a.query_position = n - 1;
        a.n_layers = 1;
        a.n_heads = 2;
        a.weights.assign(2 * n, 0.0f);
        for (std::size_t i = 0; i < n; ++i) a.weights[i] = 1.0f / static_cast<float>(n);
        a.weights[n + (n - 1) / 2] = 1.0f;
        for (std::size_t k = 1; k <= n; ++k) {
            const mq::TopKMassReport r = mq::topk_mass(a, k);
            const double uniform_ref = static_cast<double>(k) / static_cast<double>(n);
            if (std::fabs(r.fractions[0][0] - uniform_ref) > 1e-6) ++exact_failures;
            if (r.fractions[0][1] != 1.0) ++exact_failures;
        }
    }
    Outcome o;
    o.pass = topk.passed() && topk.cases >= kTopkMatrices && kl.passed() && exact_failures == 0;
    o.detail = fmt::format("{}; {}; uniform/one-hot failures={}", summarize(topk), summarize(kl), exact_failures);
    return o;
}

// d_model=256, ffn=1024, L=2048; layers and vocab are the cost command defaults.
Outcome ac9_cost() {
    const mq::ModelConfig cfg = mq::make_config(256, 256, 2, 4, 2048, 0, 1024);
    const mq::CostReport mix = mq::cost_model(cfg, 2048, 1, mq::ExecutionMode::MixQuant, 3.0);
    const double linear_share = mix.prefill.fp4_linear_fraction();
    const double total_share = mix.prefill.fp4_fraction();
    bool unity = true;
    for (mq::ExecutionMode m : mq::kAllModes) {
        const mq::CostReport one = mq::cost_model(cfg, 2048, 1, m, 1.0);
        unity = unity && one.prefill_speedup() == 1.0 && one.decode_speedup() == 1.0;
    }
    Outcome o;
    o.pass = linear_share == 1.0 && total_share >= kPrefillShareTarget && unity;
    o.detail = fmt::format(
        "prefill fp4 share: linear={} total={:.6f} (target >= {}; attention={} of {} MACs); ratio=1 speedup exact={}; "
        "ratio=3 modeled prefill speedup={:.4f} (reported)",
        linear_share, total_share, kPrefillShareTarget, mix.prefill.attention, mix.prefill.total(),
        unity ? "yes" : "no", mix.prefill_speedup());
    return o;
}

std::string run_command(const std::string& cmd) {
    std::string out;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) return out;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    if (::pclose(pipe) != 0) out = "<exit status nonzero>" + out;
    return out;
}

// Each seeded model runs through the CLI twice and in process once.
Outcome ac10_divergence() {
    std::size_t differing = 0, cli_vs_lib = 0, diverged = 0;
    const std::string cli = MIXQUANT_CLI_PATH;
    for (std::uint64_t seed = 0; seed < kCompareModels; ++seed) {
        mq::ModelConfig cfg;
        cfg.seed = 1000 + seed;
        const mq::Model model(mq::init_weights(cfg));
        const auto prompt = seeded_prompt(1000 + seed, 12, cfg.vocab_size);
        std::string ids;
        for (std::size_t i = 0; i < prompt.size(); ++i) ids += (i ? "," : "") + std::to_string(prompt[i]);
        const std::string cmd = fmt::format("{} compare-modes --toy-seed {} --prompt-tokens {} --max-new 24 --format json",
                                            cli, cfg.seed, ids);
        const std::string a = run_command(cmd);
        const std::string b = run_command(cmd);
        if (a != b || a.empty()) ++differing;
        const mq::ModeComparison c = mq::compare_modes(model, prompt, greedy(24));
        if (mq::to_json(c) != a) ++cli_vs_lib;
        for (const mq::DivergenceReport& r : c.reports) diverged += r.first_divergence ? 1 : 0;
    }
    return {differing == 0 && cli_vs_lib == 0,
            fmt::format("models={} rerun_differences={} cli_vs_library_differences={} diverging_reports={}",
                        kCompareModels, differing, cli_vs_lib, diverged)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"AC1", ac1_formats},          {"AC2", ac2_quantizer},         {"AC3", ac3_worked_example},
        {"AC4", ac4_qgemm},            {"AC5", ac5_identity_collapse}, {"AC6", ac6_teacher_forcing},
        {"AC7", ac7_disaggregation},   {"AC8", ac8_metrics},           {"AC9", ac9_cost},
        {"AC10", ac10_divergence},
    };
    int failed = 0;
    for (const auto& [id, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        if (!o.pass) ++failed;
        std::fputs(fmt::format("{} {} {}\n", id, o.pass ? "PASS" : "FAIL", o.detail).c_str(), stdout);
        std::fflush(stdout);
    }
    std::fputs(fmt::format("acceptance: {} of {} criteria passed\n", criteria.size() - failed, criteria.size()).c_str(),
               stdout);
    return failed == 0 ? 0 : 1;
}
