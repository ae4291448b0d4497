// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "permhe/ckks/ckks.hpp"
#include "permhe/cli/commands.hpp"
#include "permhe/he/clear.hpp"
#include "permhe/model/reference.hpp"
#include "permhe/model/synthetic.hpp"
#include "permhe/protocol/audit.hpp"
#include "permhe/protocol/inference.hpp"
#include "test_util.hpp"

using namespace permhe;
using namespace permhe::protocol;
using he::ClearBackend;
using he::HEParams;
using ckks::CkksBackend;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ClearBackend& clear_be() {
  static const ClearBackend be(HEParams::clear(4096));
  return be;
}
const CkksBackend& ckks_be() {
  static const CkksBackend be(HEParams::ckks_lite());
  return be;
}

// Triple-loop product, kept separate from the library's own.
SquareMatrix oracle_matmul(const SquareMatrix& w, const SquareMatrix& v) {
  const std::size_t n = w.order();
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < n; ++k) s += static_cast<long double>(w(i, k)) * v(k, j);
      out(i, j) = static_cast<double>(s);
    }
  return out;
}

std::vector<double> entries(const SquareMatrix& m) { return {m.entries().begin(), m.entries().end()}; }

std::size_t count_kind(const transport::Transcript& t, MessageKind k) {
  std::size_t c = 0;
  for (const auto& e : t.entries()) c += e.kind == static_cast<std::uint8_t>(k);
  return c;
}

// Every protocol session run here is audited and tallied for criterion 5.
struct AuditTally {
  std::size_t sessions = 0, views = 0, findings = 0, entries = 0;
  std::uint64_t bytes_scanned = 0;
  std::string first_problem;
} g_audit;

template <he::Backend B>
InferenceRun<B> audited_session(const B& be, const model::ModelSpec& spec, const std::vector<std::vector<double>>& xs,
                                std::uint64_t seed, bool scan,
                                const std::function<void(const transport::Transcript&)>& inspect = {}) {
  RunOptions opt;
  opt.client.seed = seed;
  opt.client.capture_payloads = scan;
  opt.server.capture_payloads = scan;
  auto run = run_inference(be, make_plan(spec), xs, opt);
  std::vector<double> client_values;
  for (const auto& x : xs) client_values.insert(client_values.end(), x.begin(), x.end());
  const AuditSecrets secrets{client_values, model_values(spec)};
  ++g_audit.sessions;
  for (const auto* view : {&run.client_view, &run.server_view}) {
    const auto r = audit_transcript(*view, secrets, scan);
    ++g_audit.views;
    g_audit.findings += r.findings.size();
    g_audit.entries += r.entries;
    g_audit.bytes_scanned += r.bytes_scanned;
    if (!r.clean() && g_audit.first_problem.empty()) g_audit.first_problem = r.summary();
  }
  if (inspect) inspect(run.client_view);
  // Payload copies are no longer needed once audited.
  run.client_view = transport::Transcript(false);
  run.server_view = transport::Transcript(false);
  return run;
}

Verdict permutation_identity() {
  Timer timer;
  Prng rng(101, "acceptance/permute");
  double worst = 0;
  std::size_t inexact = 0;
  for (std::size_t n = 1; n <= 16; ++n)
    for (int trial = 0; trial < 200; ++trial) {
      const auto w = testutil::random_matrix(rng, n), v = testutil::random_matrix(rng, n);
      worst = std::max(worst, testutil::relative_error(entries(permuted_matmul(w, v)), entries(oracle_matmul(w, v))));
      const auto wi = testutil::random_int_matrix(rng, n, -8, 8), vi = testutil::random_int_matrix(rng, n, -8, 8);
      inexact += !(permuted_matmul(wi, vi) == oracle_matmul(wi, vi));
    }
  const double secs = timer.seconds();
  return {worst <= 1e-9 && inexact == 0 && secs < 5,
          fmt("n=1..16 x 200 pairs: max rel err %.2e (<= 1e-9), %zu inexact integer products, %.2f s (< 5 s)", worst,
              inexact, secs)};
}

template <he::Backend B>
SquareMatrix encrypted_matf(const B& be, const SquareMatrix& w, const SquareMatrix& v, const SquareMatrix& b,
                            Prng& rng) {
  const auto keys = be.keygen(rng);
  const auto v_set = client_prepare_input(be, keys.public_key, v, rng);
  const auto w_set = encode_weight_set(be, w, 1);
  const std::size_t slots = be.params().slot_count;
  const auto bias = be.encode_add_operand(encode_matrix(b, slots), be.fresh_level() - 1, be.fresh_scale());
  const auto layout = make_layout(w.order(), 1, slots);
  const auto c = matf_server(be, std::span<const typename B::MulOperand>(w_set),
                             std::span<const typename B::Ciphertext>(v_set), bias, layout);
  return decode_matrix(be.decrypt(keys.secret_key, c));
}

SquareMatrix add(SquareMatrix a, const SquareMatrix& b) {
  for (std::size_t i = 0; i < a.order(); ++i)
    for (std::size_t j = 0; j < a.order(); ++j) a(i, j) += b(i, j);
  return a;
}

Verdict matf_correctness() {
  Timer timer;
  Prng rng(102, "acceptance/matf");
  std::size_t clear_inexact = 0, clear_cases = 0;
  double clear_real = 0;
  for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 13u, 16u, 31u, 32u, 48u, 64u}) {
    const auto w = testutil::random_int_matrix(rng, n, -8, 8), v = testutil::random_int_matrix(rng, n, -8, 8),
               b = testutil::random_int_matrix(rng, n, -8, 8);
    clear_inexact += !(encrypted_matf(clear_be(), w, v, b, rng) == add(oracle_matmul(w, v), b));
    const auto wr = testutil::random_matrix(rng, n), vr = testutil::random_matrix(rng, n),
               br = testutil::random_matrix(rng, n);
    clear_real = std::max(clear_real, testutil::max_abs_diff(entries(encrypted_matf(clear_be(), wr, vr, br, rng)),
                                                             entries(add(oracle_matmul(wr, vr), br))));
    ++clear_cases;
  }
  double ckks_worst = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const std::size_t n = 1 + i * 31 / 49;  // spans 1..32
    const auto w = testutil::random_matrix(rng, n), v = testutil::random_matrix(rng, n),
               b = testutil::random_matrix(rng, n);
    ckks_worst = std::max(ckks_worst, testutil::max_abs_diff(entries(encrypted_matf(ckks_be(), w, v, b, rng)),
                                                             entries(add(oracle_matmul(w, v), b))));
  }
  const double secs = timer.seconds();
  return {clear_inexact == 0 && clear_real < 1e-12 && ckks_worst <= 1e-3 && secs < 60,
          fmt("clear: %zu/%zu integer cases exact for n<=64 (real-valued max err %.1e); ckks_lite: 50 instances "
              "n=1..32 max abs err %.2e (<= 1e-3); %.1f s (< 60 s)",
              clear_cases - clear_inexact, clear_cases, clear_real, ckks_worst, secs)};
}

Verdict end_to_end_agreement() {
  Timer timer;
  Prng rng(103, "acceptance/e2e");
  const auto spec = model::random_mlp(rng, {64, 16, 10}, model::Activation::relu);
  const std::size_t per_session = make_plan(spec).min_order();
  std::vector<std::vector<double>> inputs;
  for (int i = 0; i < 100; ++i) inputs.push_back(testutil::random_vector(rng, 64, 0, 1));
  std::size_t agree = 0, sessions = 0;
  double worst = 0;
  for (std::size_t start = 0; start < inputs.size(); start += per_session) {
    const std::vector<std::vector<double>> chunk(inputs.begin() + static_cast<std::ptrdiff_t>(start),
                                                 inputs.begin() + static_cast<std::ptrdiff_t>(
                                                                      std::min(inputs.size(), start + per_session)));
    const auto run = audited_session(ckks_be(), spec, chunk, 1000 + sessions, true);
    ++sessions;
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const auto ref = model::reference_infer(spec, chunk[i]);
      agree += run.outcome.classes[i] == model::argmax(ref);
      worst = std::max(worst, testutil::max_abs_diff(run.outcome.logits[i], ref));
    }
  }
  return {agree >= 99 && worst < 1e-2,
          fmt("64->16->10 relu, 100 inputs in %zu ckks_lite sessions: argmax agreement %zu/100 (>= 99), max logit "
              "deviation %.2e (< 1e-2), %.1f s",
              sessions, agree, worst, timer.seconds())};
}

Verdict round_count() {
  Prng rng(104, "acceptance/rounds");
  std::size_t checked = 0, wrong = 0;
  std::string first;
  auto check = [&](const transport::Transcript& t, std::size_t m, const std::string& label) {
    ++checked;
    // Initial upload is the stage-0 INPUT_SET; each round is an NLNF_REQ answered by an INPUT_SET.
    const auto& es = t.entries();
    std::size_t uploads_before_first_req = 0, req = 0, answered = 0;
    bool seen_req = false;
    for (std::size_t i = 0; i < es.size(); ++i) {
      const auto k = static_cast<MessageKind>(es[i].kind);
      if (k == MessageKind::input_set && !seen_req) ++uploads_before_first_req;
      if (k == MessageKind::nlnf_req) {
        seen_req = true;
        ++req;
        answered += i + 1 < es.size() && static_cast<MessageKind>(es[i + 1].kind) == MessageKind::input_set &&
                    es[i + 1].direction == transport::Direction::upload;
      }
    }
    const bool ok = req == m && answered == m && uploads_before_first_req == 1 &&
                    count_kind(t, MessageKind::input_set) == m + 1 && count_kind(t, MessageKind::result) == 1 &&
                    static_cast<MessageKind>(es.back().kind) == MessageKind::result;
    if (!ok) {
      ++wrong;
      if (first.empty()) first = label;
    }
  };
  for (std::size_t m_act = 0; m_act <= 4; ++m_act) {
    std::vector<std::size_t> dims{10};
    for (std::size_t i = 0; i <= m_act; ++i) dims.push_back(9 - i);
    const auto spec = model::random_mlp(rng, dims, m_act % 2 ? model::Activation::relu : model::Activation::tanh);
    const auto x = testutil::random_vector(rng, 10, 0, 1);
    audited_session(clear_be(), spec, {x}, 7, false,
                    [&](const auto& t) { check(t, m_act, "clear m=" + std::to_string(m_act)); });
    auto trailing = spec;
    trailing.layers.emplace_back(model::ActivationLayer{model::Activation::sigmoid});
    audited_session(clear_be(), trailing, {x}, 7, false,
                    [&](const auto& t) { check(t, m_act + 1, "clear trailing m=" + std::to_string(m_act + 1)); });
  }
  for (std::size_t m_act : {1u, 2u}) {
    std::vector<std::size_t> dims{12};
    for (std::size_t i = 0; i <= m_act; ++i) dims.push_back(10 - 2 * i);
    const auto spec = model::random_mlp(rng, dims, model::Activation::relu);
    audited_session(ckks_be(), spec, {testutil::random_vector(rng, 12, 0, 1)}, 8, true,
                    [&](const auto& t) { check(t, m_act, "ckks m=" + std::to_string(m_act)); });
  }
  return {wrong == 0, fmt("%zu models with m=0..5 activation layers (affine and trailing, clear and ckks_lite): %zu "
                          "with round structure other than 1 upload + m NLNF_REQ/INPUT_SET + 1 RESULT%s%s",
                          checked, wrong, first.empty() ? "" : ", first: ", first.c_str())};
}

// Audits the sessions collected by the other criteria, plus a batched one.
Verdict transcript_hygiene() {
  Prng rng(105, "acceptance/audit");
  const auto spec = model::random_mlp(rng, {20, 12, 8, 4}, model::Activation::square);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 6; ++i) xs.push_back(testutil::random_vector(rng, 20, 0, 1));
  audited_session(ckks_be(), spec, xs, 9, true);
  audited_session(clear_be(), spec, xs, 9, false);
  return {g_audit.findings == 0 && g_audit.sessions > 0,
          fmt("%zu sessions, %zu views, %zu messages, %.1f MB byte-scanned for the other party's values: %zu findings%s%s",
              g_audit.sessions, g_audit.views, g_audit.entries, static_cast<double>(g_audit.bytes_scanned) / 1048576.0,
              g_audit.findings, g_audit.first_problem.empty() ? "" : ", first: ", g_audit.first_problem.c_str())};
}

template <he::Backend Inner>
std::string packing_case(const Inner& inner, std::size_t d, bool& ok, Prng& rng) {
  he::OpCounts counts;
  const he::Counted<Inner> be(inner, counts);
  const std::size_t slots = be.params().slot_count;
  const auto keys = be.keygen(rng);
  const auto w = testutil::random_int_matrix(rng, d, -4, 4);
  const auto zero = SquareMatrix(d);
  std::string out;
  double per_matrix_g1 = 0;
  for (std::size_t g : {1u, 2u, 4u}) {
    std::vector<SquareMatrix> vs;
    for (std::size_t t = 0; t < g; ++t) vs.push_back(testutil::random_int_matrix(rng, d, -4, 4));

    counts.reset();
    std::size_t unbatched_cts = 0;
    for (const auto& v : vs) {
      const auto v_set = client_prepare_input(be, keys.public_key, v, rng);
      unbatched_cts += v_set.size();
    }
    const std::uint64_t unbatched_encrypts = counts.encrypt;

    counts.reset();
    const auto v_set = client_prepare_input(be, keys.public_key, std::span<const SquareMatrix>(vs), rng);
    const std::uint64_t batched_encrypts = counts.encrypt;
    const auto w_set = encode_weight_set(be, w, g);
    const std::vector<SquareMatrix> zeros(g, zero);
    const auto bias = be.encode_add_operand(encode_batch(zeros, slots), be.fresh_level() - 1, be.fresh_scale());
    counts.reset();
    const auto c = matf_server(be, std::span<const typename Inner::MulOperand>(w_set),
                               std::span<const typename Inner::Ciphertext>(v_set), bias, make_layout(d, g, slots));
    const double per_matrix = static_cast<double>(counts.evals()) / static_cast<double>(g);
    const std::uint64_t mul_per_pack = counts.mul_pt;
    if (g == 1) per_matrix_g1 = per_matrix;
    const double predicted = per_matrix_g1 / static_cast<double>(g);
    const double dev = std::fabs(per_matrix - predicted) / predicted;

    const auto outs = decode_batch(be.decrypt(keys.secret_key, c));
    double err = 0;
    for (std::size_t t = 0; t < g; ++t)
      err = std::max(err, testutil::max_abs_diff(entries(outs[t]), entries(oracle_matmul(w, vs[t]))));

    const bool case_ok = unbatched_cts == g * v_set.size() && unbatched_encrypts == g * batched_encrypts &&
                         mul_per_pack == d && dev <= 0.10 && err < 1e-3;
    ok = ok && case_ok;
    out += fmt(" g=%zu: %zu vs %zu cts, %.1f ops/matrix (pred %.1f, %+.1f%%);", g, v_set.size(), unbatched_cts,
               per_matrix, predicted, 100 * (per_matrix - predicted) / predicted);
  }
  return out;
}

Verdict packing_parallelization() {
  Prng rng(106, "acceptance/packing");
  bool ok = true;
  std::string detail = "clear d=16:";
  detail += packing_case(clear_be(), 16, ok, rng);
  detail += " ckks_lite d=16:";
  detail += packing_case(ckks_be(), 16, ok, rng);
  return {ok, detail};
}

Verdict ckks_numerics() {
  Timer timer;
  Prng rng(107, "acceptance/ckks");
  const auto& be = ckks_be();
  const auto& ctx = be.context();
  const std::size_t n = be.ring_dim();
  std::size_t ntt_mismatch = 0;
  for (int e = 0; e < 10000; ++e) {
    ckks::RingElement r(n, ctx.size(), ckks::Domain::coefficient);
    for (std::size_t i = 0; i < ctx.size(); ++i)
      for (auto& x : r.residues(i)) x = rng.below(ctx.modulus(i).value());
    ntt_mismatch += ckks::ntt_inverse(ctx, ckks::ntt_forward(ctx, r)) != r;
  }
  const double ntt_secs = timer.seconds();

  double enc_worst = 0;
  for (int t = 0; t < 20; ++t) {
    const PackedPlaintext v{testutil::random_vector(rng, n / 2), {}};
    const auto back = ckks::cano_decode(be, ckks::cano_encode(be, v, 0x1.0p30), 0x1.0p30);
    enc_worst = std::max(enc_worst, testutil::relative_error(back.slots, v.slots));
  }

  double mul_worst = 0;
  const auto keys = be.keygen(rng);
  for (int t = 0; t < 20; ++t) {
    const PackedPlaintext a{testutil::random_vector(rng, n / 2), {}}, b{testutil::random_vector(rng, n / 2), {}};
    const auto c = be.mul_pt(be.encrypt(keys.public_key, a, rng), be.encode_mul_operand(b, be.fresh_level()));
    const auto got = be.decrypt(keys.secret_key, c);
    std::vector<double> expect(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j) expect[j] = a.slots[j] * b.slots[j];
    mul_worst = std::max(mul_worst, testutil::max_abs_diff(got.slots, expect));
  }
  const double secs = timer.seconds();
  return {ntt_mismatch == 0 && enc_worst < 0x1.0p-20 && mul_worst < 1e-4 && secs < 60,
          fmt("NTT roundtrip: %zu/10000 N=%zu elements differ (%.1f s); encode/decode rel err %.2e (< 2^-20 = %.2e); "
              "mul_pt+rescale max err %.2e (< 1e-4); %.1f s (< 60 s)",
              ntt_mismatch, n, ntt_secs, enc_worst, 0x1.0p-20, mul_worst, secs)};
}

Verdict report_reproduction() {
  Prng rng(108, "acceptance/report");
  const auto spec = model::random_mlp(rng, {64, 16, 10}, model::Activation::relu);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(testutil::random_vector(rng, 64, 0, 1));
  const auto run = audited_session(ckks_be(), spec, xs, 77, false);
  const auto& rep = run.outcome.report;
  const std::uint64_t frame_bytes = run.channel_upload_bytes + run.channel_download_bytes;
  const double total_mb = rep.total_comm_mb();
  const bool exact = total_mb == static_cast<double>(frame_bytes) / transport::kBytesPerMb &&
                     rep.total_upload_bytes() == run.channel_upload_bytes &&
                     rep.total_download_bytes() == run.channel_download_bytes;
  const std::string table = rep.table();
  bool has_rows = table.find("Total") != std::string::npos;
  for (auto p : transport::kPhases) has_rows = has_rows && table.find(transport::display_name(p)) != std::string::npos;

  // The same check through the CLI bench command, twice with one seed.
  cli::RunConfig c;
  c.local = true;
  c.backend = "ckks_lite";
  c.model = std::string(PERMHE_SOURCE_DIR) + "/models/mlp_64_16_10.json";
  c.input = std::string(PERMHE_SOURCE_DIR) + "/models/samples_64.csv";
  c.count = 4;
  c.trials = 2;
  c.seed = 21;
  std::ostringstream sink;
  const auto a = cli::cmd_bench(c, sink), b = cli::cmd_bench(c, sink);
  bool same = true;
  for (std::size_t t = 0; t < a.trials.size(); ++t)
    for (std::size_t p = 0; p < transport::kPhaseCount; ++p)
      same = same && a.trials[t].rows[p].upload_bytes == b.trials[t].rows[p].upload_bytes &&
             a.trials[t].rows[p].download_bytes == b.trials[t].rows[p].download_bytes &&
             a.trials[t].rows[p].comm_bytes() == a.trials[0].rows[p].comm_bytes();
  return {exact && has_rows && same,
          fmt("Total %.6f MB == %llu frame bytes / 2^20 %s; table has 4 phases + Total: %s; seeded bench runs "
              "(2 x %zu trials) identical comm columns: %s; latency %.1f ms (reported only)",
              total_mb, static_cast<unsigned long long>(frame_bytes), exact ? "exactly" : "NOT exactly",
              has_rows ? "yes" : "no", a.trials.size(), same ? "yes" : "no", rep.total_latency_ms())};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"permutation identity", permutation_identity},
      {"MatF correctness", matf_correctness},
      {"end-to-end agreement", end_to_end_agreement},
      {"round count", round_count},
      {"transcript hygiene", transcript_hygiene},
      {"packing parallelization", packing_parallelization},
      {"ckks_lite numerics", ckks_numerics},
      {"report reproduction", report_reproduction},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s [%zu] %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
