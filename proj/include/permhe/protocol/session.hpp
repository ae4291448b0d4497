// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <spdlog/spdlog.h>

#include <chrono>
#include <optional>
#include <string_view>
#include <vector>

#include "permhe/model/reference.hpp"
#include "permhe/protocol/link.hpp"
#include "permhe/protocol/matf.hpp"
#include "permhe/transport/metrics.hpp"

namespace permhe::protocol {

struct ClientConfig {
  std::optional<std::uint64_t> seed;  // unset draws keys and noise from the OS
  std::size_t batch = 1;              // matrices per ciphertext
  bool capture_payloads = false;
  std::size_t max_payload = transport::kDefaultMaxPayload;
};

struct ClientOutcome {
  std::vector<std::vector<double>> logits;
  std::vector<std::size_t> classes;
  transport::PhaseReport report;
  std::size_t nlnf_rounds = 0;
};

/// Client{Idle -> Uploading -> AwaitingNlnF* -> Done}. Holds the only
/// secret key of the session.
template <he::Backend B>
class ClientSession {
 public:
  enum class State { idle, uploading, awaiting_nlnf, done, failed };

  ClientSession(const B& backend, transport::Channel& channel, ClientConfig config = {})
      : be_(backend),
        config_(config),
        transcript_(config.capture_payloads),
        link_(channel, transcript_, Role::client, config.max_payload),
        rng_(config.seed ? Prng(*config.seed, "client") : Prng()) {}

  State state() const { return state_; }
  const transport::Transcript& transcript() const { return transcript_; }

  ClientOutcome run(const std::vector<std::vector<double>>& inputs) {
    require(state_ == State::idle, ErrorCode::protocol, "client session already used");
    try {
      return drive(inputs);
    } catch (const Error& e) {
      state_ = State::failed;
      if (e.category() != ErrorCategory::transport && !remote_abort_) link_.send_error(e);
      throw;
    }
  }

 private:
  using Phase = transport::Phase;

  Received expect(MessageKind want, std::string_view doing) {
    Received r = link_.recv();
    if (r.kind == MessageKind::error) {
      remote_abort_ = true;
      raise_remote(r, "server");
    }
    if (r.kind != want) raise_unexpected(r.kind, doing);
    return r;
  }

  ClientOutcome drive(const std::vector<std::vector<double>>& inputs) {
    require(!inputs.empty() && inputs.size() <= 0xFFFF, ErrorCode::config, "a session carries 1..65535 inputs");
    const std::size_t dim = inputs.front().size();
    for (const auto& x : inputs) require(x.size() == dim, ErrorCode::shape, "inputs of different length");
    require(config_.batch >= 1 && config_.batch <= 0xFFFF, ErrorCode::config, "batch out of range");
    const Placement place{config_.batch, inputs.size()};

    meter_.start(Phase::client_encode_encrypt);
    const auto keys = be_.keygen(rng_);
    ByteWriter pk;
    be_.serialize_public_key(keys.public_key, pk);
    Hello hello{be_.params(), std::move(pk).take(), static_cast<std::uint32_t>(dim),
                static_cast<std::uint16_t>(place.batch), static_cast<std::uint16_t>(place.count)};
    meter_.record(Phase::client_encode_encrypt, transport::Direction::upload,
                  link_.send(MessageKind::hello, hello.encode()));
    state_ = State::uploading;

    meter_.enter(Phase::server_set_model);
    const Received ack_frame = expect(MessageKind::model_ack, "waiting for the model description");
    meter_.record(Phase::server_set_model, transport::Direction::download, ack_frame.frame_bytes);
    const ModelAck ack = ModelAck::decode(ack_frame.payload);
    require(ack.input_dim == dim, ErrorCode::protocol, "server model expects a different input size");
    const auto& stages = ack.stages;

    meter_.enter(Phase::client_encode_encrypt);
    {
      const auto pack = scatter_inputs(inputs, stages[0].order, place);
      InputSet<B> set{0, client_prepare_input(be_, keys.public_key, std::span<const SquareMatrix>(pack), rng_)};
      meter_.record(Phase::client_encode_encrypt, transport::Direction::upload,
                    link_.send(MessageKind::input_set, set.encode(be_)));
    }

    meter_.enter(Phase::server_dnn_computation);
    state_ = State::awaiting_nlnf;
    ClientOutcome out;
    std::size_t stage = 0;
    bool terminal_sent = false;
    while (true) {
      Received r = link_.recv();
      if (r.kind == MessageKind::nlnf_req) {
        meter_.record(Phase::server_dnn_computation, transport::Direction::download, r.frame_bytes);
        require(!terminal_sent && stages[stage].activation.has_value(), ErrorCode::protocol,
                "activation request where none is due");
        auto req = NlnfRequest<B>::decode(be_, r.payload);
        require(req.stage == stage, ErrorCode::protocol,
                "activation request for stage " + std::to_string(req.stage) + ", expected " + std::to_string(stage));
        const StageShape* next = stage + 1 < stages.size() ? &stages[stage + 1] : nullptr;
        InputSet<B> reply{static_cast<std::uint32_t>(stage + 1),
                          nlnf_client(be_, keys.secret_key, keys.public_key, req.ciphertext, stages[stage], next,
                                      place, rng_)};
        meter_.record(Phase::server_dnn_computation, transport::Direction::upload,
                      link_.send(MessageKind::input_set, reply.encode(be_)));
        ++out.nlnf_rounds;
        if (next) ++stage;
        else terminal_sent = true;
      } else if (r.kind == MessageKind::result) {
        meter_.record(Phase::client_decrypt_decode, transport::Direction::download, r.frame_bytes);
        const bool due = stage + 1 == stages.size() && (terminal_sent || !stages[stage].activation);
        require(due, ErrorCode::protocol, "result arrived before the last stage finished");
        meter_.enter(Phase::client_decrypt_decode);
        const auto ct = decode_result(be_, r.payload);
        const auto& last = stages.back();
        require(Layout(ct.layout) ==
                    Layout{static_cast<std::uint16_t>(last.order), static_cast<std::uint16_t>(place.batch)},
                ErrorCode::layout, "result has an unexpected layout");
        const auto pack = decode_batch(be_.decrypt(keys.secret_key, ct));
        out.logits = gather_outputs(pack, last.rows, place);
        for (const auto& y : out.logits) out.classes.push_back(model::argmax(y));
        break;
      } else if (r.kind == MessageKind::error) {
        remote_abort_ = true;
        raise_remote(r, "server");
      } else {
        raise_unexpected(r.kind, "awaiting activation requests");
      }
    }
    meter_.finish();
    state_ = State::done;
    out.report = meter_.report();
    return out;
  }

  const B& be_;
  ClientConfig config_;
  transport::Transcript transcript_;
  Link link_;
  Prng rng_;
  transport::Meter meter_;
  State state_ = State::idle;
  bool remote_abort_ = false;
};

struct ServerConfig {
  bool capture_payloads = false;
  std::size_t max_payload = transport::kDefaultMaxPayload;
};

struct ServerStats {
  double set_model_ms = 0;
  double dnn_ms = 0;
  std::size_t inputs = 0;
  std::size_t matf_calls = 0;
};

/// Server{Idle -> ModelSet -> Evaluating -> AwaitingClient* -> Done}. The
/// type holds a public key only; there is no slot a secret key could occupy.
template <he::Backend B>
class ServerSession {
 public:
  enum class State { idle, model_set, evaluating, awaiting_client, done, failed };

  ServerSession(const B& backend, const ExecutionPlan& plan, transport::Channel& channel,
                const WorkerPool& pool = WorkerPool{}, ServerConfig config = {})
      : be_(backend),
        plan_(plan),
        pool_(pool),
        transcript_(config.capture_payloads),
        link_(channel, transcript_, Role::server, config.max_payload) {}

  State state() const { return state_; }
  const transport::Transcript& transcript() const { return transcript_; }
  const ServerStats& stats() const { return stats_; }

  void run() {
    require(state_ == State::idle, ErrorCode::protocol, "server session already used");
    try {
      drive();
    } catch (const Error& e) {
      state_ = State::failed;
      if (e.category() != ErrorCategory::transport && !remote_abort_) link_.send_error(e);
      throw;
    }
  }

 private:
  using Clock = std::chrono::steady_clock;

  Received expect(MessageKind want, std::string_view doing) {
    Received r = link_.recv();
    if (r.kind == MessageKind::error) {
      remote_abort_ = true;
      raise_remote(r, "client");
    }
    if (r.kind != want) raise_unexpected(r.kind, doing);
    return r;
  }

  InputSet<B> expect_inputs(std::uint32_t stage, std::size_t count, std::string_view doing) {
    const Received r = expect(MessageKind::input_set, doing);
    auto set = InputSet<B>::decode(be_, r.payload);
    require(set.stage == stage, ErrorCode::protocol,
            "input set for stage " + std::to_string(set.stage) + ", expected " + std::to_string(stage));
    require(set.ciphertexts.size() == count, ErrorCode::protocol,
            "input set holds " + std::to_string(set.ciphertexts.size()) + " ciphertexts, expected " +
                std::to_string(count));
    return set;
  }

  void drive() {
    const Received hello_frame = expect(MessageKind::hello, "waiting for a client");
    const auto t0 = Clock::now();
    const Hello hello = Hello::decode(hello_frame.payload);
    require(hello.params.fingerprint() == be_.params().fingerprint(), ErrorCode::params,
            "client parameters (" + std::string(he::to_string(hello.params.scheme)) +
                ") do not match the server's");
    {
      ByteReader r(hello.public_key);
      public_key_.emplace(be_.deserialize_public_key(r));
      r.expect_end();
    }
    require(hello.input_dim == plan_.input_dim, ErrorCode::shape,
            "client input has " + std::to_string(hello.input_dim) + " values, model expects " +
                std::to_string(plan_.input_dim));
    require(hello.batch >= 1 && hello.input_count >= 1, ErrorCode::protocol, "empty batch");
    const Placement place{hello.batch, hello.input_count};
    require(place.columns_needed() <= plan_.min_order(), ErrorCode::capacity,
            std::to_string(place.count) + " inputs exceed the " + std::to_string(place.batch * plan_.min_order()) +
                " this model can carry per session at batch " + std::to_string(place.batch));
    require(be_.fresh_level() >= 1, ErrorCode::level, "parameters leave no level for the linear layers");

    std::vector<EncodedStage<B>> encoded;
    encoded.reserve(plan_.stages.size());
    for (const auto& s : plan_.stages) encoded.push_back(encode_stage(be_, s, place, pool_));
    link_.send(MessageKind::model_ack, ModelAck{static_cast<std::uint32_t>(plan_.input_dim), plan_.shapes()}.encode());
    state_ = State::model_set;
    const auto t1 = Clock::now();
    stats_.set_model_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    stats_.inputs = place.count;

    auto inputs = expect_inputs(0, plan_.stages[0].order(), "waiting for the encrypted input");
    const auto t2 = Clock::now();
    state_ = State::evaluating;
    for (std::size_t s = 0; s < plan_.stages.size(); ++s) {
      auto out = matf_server(be_, encoded[s], std::span<const typename B::Ciphertext>(inputs.ciphertexts), pool_);
      ++stats_.matf_calls;
      const bool last = s + 1 == plan_.stages.size();
      if (!plan_.stages[s].activation) {
        link_.send(MessageKind::result, encode_result(be_, out));
        break;
      }
      link_.send(MessageKind::nlnf_req, NlnfRequest<B>{static_cast<std::uint32_t>(s), std::move(out)}.encode(be_));
      state_ = State::awaiting_client;
      inputs = expect_inputs(static_cast<std::uint32_t>(s + 1), last ? 1 : plan_.stages[s + 1].order(),
                             "waiting for the activation reply");
      state_ = State::evaluating;
      if (last) {
        const auto& ct = inputs.ciphertexts.front();
        require(Layout(ct.layout) == encoded[s].layout, ErrorCode::layout, "final activation reply has the wrong layout");
        link_.send(MessageKind::result, encode_result(be_, ct));
      }
    }
    stats_.dnn_ms = std::chrono::duration<double, std::milli>(Clock::now() - t2).count();
    state_ = State::done;
  }

  const B& be_;
  const ExecutionPlan& plan_;
  const WorkerPool& pool_;
  transport::Transcript transcript_;
  Link link_;
  std::optional<typename B::PublicKey> public_key_;
  State state_ = State::idle;
  ServerStats stats_;
  bool remote_abort_ = false;
};

}  // namespace permhe::protocol
