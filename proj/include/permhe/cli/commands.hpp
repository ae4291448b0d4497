// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <list>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "permhe/ckks/ckks.hpp"
#include "permhe/he/clear.hpp"
#include "permhe/model/io.hpp"
#include "permhe/model/samples.hpp"
#include "permhe/model/synthetic.hpp"
#include "permhe/protocol/inference.hpp"

namespace permhe::cli {

struct RunConfig {
  std::string role;  // serve | infer | bench
  std::string addr = "127.0.0.1:7878";
  std::string model;
  std::string input;
  std::string input_format;  // csv | raw-idx; empty guesses from the extension
  std::string backend = "ckks_lite";
  std::uint32_t ring_dim = 8192;
  std::uint32_t scale_bits = 30;
  std::size_t workers = 1;  // intra-MatF threads
  std::size_t batch = 1;    // matrices per ciphertext
  std::size_t count = 1;    // inputs per session
  std::optional<std::uint64_t> seed;
  std::size_t trials = 1;
  std::string report;  // CSV output path
  bool local = false;  // infer/bench against an in-process server
  std::size_t sessions = 0;  // serve: stop after this many sessions (0 = until signaled)
};

inline he::HEParams make_params(const RunConfig& c) {
  try {
    he::HEParams p;
    const auto scheme = he::parse_scheme(c.backend);
    if (scheme == he::SchemeId::clear) {
      p = he::HEParams::clear(c.ring_dim / 2);
    } else {
      he::CkksParams k;
      k.ring_dim = c.ring_dim;
      k.scale_bits = c.scale_bits;
      p = he::HEParams::ckks_lite(k);
    }
    p.validate();
    return p;
  } catch (const Error& e) {
    throw Error(ErrorCode::config, e.what());
  }
}

/// Calls f with the backend the config selects.
template <class F>
decltype(auto) with_backend(const RunConfig& c, F&& f) {
  const auto params = make_params(c);
  if (params.scheme == he::SchemeId::clear) {
    const he::ClearBackend be(params);
    return f(be);
  }
  const ckks::CkksBackend be(params);
  return f(be);
}

inline std::vector<std::vector<double>> load_inputs(const RunConfig& c) {
  require(!c.input.empty(), ErrorCode::config, "--input is required");
  const auto fmt = c.input_format.empty() ? model::guess_sample_format(c.input) : model::parse_sample_format(c.input_format);
  const auto samples = model::load_samples(c.input, fmt);
  require(c.count >= 1, ErrorCode::config, "--count must be at least 1");
  require(samples.size() >= c.count, ErrorCode::config,
          c.input + " holds " + std::to_string(samples.size()) + " samples, " + std::to_string(c.count) + " requested");
  std::vector<std::vector<double>> xs;
  for (std::size_t i = 0; i < c.count; ++i) xs.push_back(samples[i].values);
  return xs;
}

inline std::vector<std::optional<int>> load_labels(const RunConfig& c) {
  const auto fmt = c.input_format.empty() ? model::guess_sample_format(c.input) : model::parse_sample_format(c.input_format);
  const auto samples = model::load_samples(c.input, fmt);
  std::vector<std::optional<int>> out;
  for (std::size_t i = 0; i < c.count && i < samples.size(); ++i) out.push_back(samples[i].label);
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::io, "cannot write " + path);
  out << text;
  require(out.good(), ErrorCode::io, "short write to " + path);
}

/// One client session against a remote server or an in-process one.
template <he::Backend B>
protocol::ClientOutcome client_session(const B& be, const RunConfig& c, const std::vector<std::vector<double>>& xs,
                                       const protocol::ExecutionPlan* local_plan) {
  protocol::RunOptions opt;
  opt.client.seed = c.seed;
  opt.client.batch = c.batch;
  opt.workers = c.workers;
  if (local_plan) return protocol::run_inference(be, *local_plan, xs, opt).outcome;
  auto ch = transport::tcp_connect(transport::Endpoint::parse(c.addr));
  protocol::ClientSession<B> session(be, *ch, opt.client);
  return session.run(xs);
}

inline std::string format_vector(const std::vector<double>& v) {
  std::ostringstream s;
  s.precision(6);
  s << '[';
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  s << ']';
  return s.str();
}

struct InferResult {
  protocol::ClientOutcome outcome;
  std::vector<std::vector<double>> reference;  // filled in local mode
};

inline InferResult cmd_infer(const RunConfig& c, std::ostream& out) {
  const auto xs = load_inputs(c);
  const auto labels = load_labels(c);
  std::optional<model::ModelSpec> spec;
  std::optional<protocol::ExecutionPlan> plan;
  if (c.local) {
    require(!c.model.empty(), ErrorCode::config, "--local needs --model");
    spec = model::load_model(c.model);
    plan = protocol::make_plan(*spec);
  }
  InferResult r;
  r.outcome = with_backend(c, [&](const auto& be) { return client_session(be, c, xs, plan ? &*plan : nullptr); });
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << "sample " << i << ": class " << r.outcome.classes[i];
    if (labels[i]) out << " (label " << *labels[i] << ")";
    if (spec) {
      r.reference.push_back(model::reference_infer(*spec, xs[i]));
      out << " reference " << model::argmax(r.reference.back());
    }
    out << "\n  logits " << format_vector(r.outcome.logits[i]) << "\n";
  }
  out << "nlnf rounds: " << r.outcome.nlnf_rounds << "\n" << r.outcome.report.table();
  if (!c.report.empty()) write_text(c.report, r.outcome.report.csv());
  return r;
}

struct BenchResult {
  std::vector<transport::PhaseReport> trials;
  transport::PhaseReport mean;

  std::string csv() const {
    std::string s = "trial," + transport::PhaseReport::csv_header();
    for (std::size_t t = 0; t < trials.size(); ++t) s += trials[t].csv_rows(std::to_string(t + 1) + ",");
    s += mean.csv_rows("mean,");
    return s;
  }
};

inline BenchResult cmd_bench(const RunConfig& c, std::ostream& out) {
  require(c.trials >= 1, ErrorCode::config, "--trials must be at least 1");
  const auto xs = load_inputs(c);
  std::optional<protocol::ExecutionPlan> plan;
  if (c.local) {
    require(!c.model.empty(), ErrorCode::config, "--local needs --model");
    plan = protocol::make_plan(model::load_model(c.model));
  }
  BenchResult r;
  with_backend(c, [&](const auto& be) {
    for (std::size_t t = 0; t < c.trials; ++t) {
      r.trials.push_back(client_session(be, c, xs, plan ? &*plan : nullptr).report);
      out << "trial " << t + 1 << "\n" << r.trials.back().table();
    }
    return 0;
  });
  r.mean = transport::PhaseReport::mean(r.trials);
  out << "mean over " << c.trials << " trials\n" << r.mean.table();
  if (!c.report.empty()) write_text(c.report, r.csv());
  return r;
}

/// Accept loop: one thread per session, each driving its own ServerSession.
/// Returns once `stop` is set or `sessions` sessions have been accepted and
/// finished.
inline void cmd_serve(const RunConfig& c, std::ostream& out, const std::atomic<bool>* stop = nullptr,
                      const std::function<void(const transport::Endpoint&)>& on_listen = {}) {
  require(!c.model.empty(), ErrorCode::config, "--model is required");
  const auto spec = model::load_model(c.model);
  const auto plan = protocol::make_plan(spec);
  const auto ep = transport::Endpoint::parse(c.addr);
  with_backend(c, [&](const auto& be) {
    using B = std::decay_t<decltype(be)>;
    transport::TcpListener listener(ep);
    out << "listening on " << listener.endpoint().str() << std::endl;
    spdlog::info("serving {} ({} stages, {} activations) with {} on {}", c.model, plan.stages.size(),
                 plan.activation_count(), c.backend, listener.endpoint().str());
    if (on_listen) on_listen(listener.endpoint());
    protocol::WorkerPool pool(c.workers);
    std::list<std::thread> workers;
    std::atomic<std::size_t> served{0}, failed{0};
    std::size_t accepted = 0;
    while (!(stop && stop->load()) && (c.sessions == 0 || accepted < c.sessions)) {
      auto ch = listener.accept(100);
      if (!ch) continue;
      const std::size_t id = ++accepted;
      workers.emplace_back([&, id, ch = std::shared_ptr<transport::TcpChannel>(std::move(ch))]() mutable {
        protocol::ServerSession<B> session(be, plan, *ch, pool);
        try {
          session.run();
          const auto& st = session.stats();
          ++served;
          spdlog::info("session {}: {} inputs, set model {:.1f} ms, dnn {:.1f} ms, in {} B, out {} B", id, st.inputs,
                       st.set_model_ms, st.dnn_ms, ch->bytes_read(), ch->bytes_written());
        } catch (const std::exception& e) {
          ++failed;
          spdlog::warn("session {} failed: {}", id, e.what());
        }
        ch->close();
      });
    }
    for (auto& t : workers) t.join();
    out << "served " << served.load() << " sessions, " << failed.load() << " failed" << std::endl;
    return 0;
  });
}

inline void cmd_make_model(const std::string& kind, const std::vector<std::size_t>& dims, const std::string& activation,
                           std::uint64_t seed, const std::string& path, std::ostream& out) {
  Prng rng(seed, "make-model");
  const auto act = model::parse_activation(activation);
  model::ModelSpec m;
  if (kind == "mlp")
    m = model::random_mlp(rng, dims, act);
  else if (kind == "lenet5")
    m = model::lenet5_shaped(rng, act);
  else
    throw Error(ErrorCode::config, "unknown model kind '" + kind + "' (mlp | lenet5)");
  const auto out_dim = model::validate(m);
  model::save_model(m, path);
  out << "wrote " << path << ": " << m.layers.size() << " layers, " << m.input_dim << " -> " << out_dim << "\n";
}

inline void cmd_make_samples(std::size_t count, std::size_t dim, std::size_t classes, std::uint64_t seed,
                             const std::string& path, std::ostream& out) {
  require(dim >= 1 && classes >= 1, ErrorCode::config, "sample dimension and class count must be positive");
  Prng rng(seed, "make-samples");
  std::string text = "label";
  for (std::size_t k = 0; k < dim; ++k) text += ",p" + std::to_string(k);
  text += "\n";
  for (std::size_t i = 0; i < count; ++i) {
    text += std::to_string(rng.below(classes));
    for (std::size_t k = 0; k < dim; ++k) text += "," + std::to_string(rng.below(256));
    text += "\n";
  }
  write_text(path, text);
  out << "wrote " << count << " samples of " << dim << " gray levels to " << path << "\n";
}

}  // namespace permhe::cli
