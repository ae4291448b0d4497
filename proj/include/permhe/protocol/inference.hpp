// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <exception>
#include <thread>

#include "permhe/protocol/session.hpp"

namespace permhe::protocol {

template <he::Backend B>
struct InferenceRun {
  ClientOutcome outcome;
  transport::Transcript client_view;
  transport::Transcript server_view;
  ServerStats server_stats;
  std::uint64_t channel_upload_bytes = 0;    // raw counter on the client end
  std::uint64_t channel_download_bytes = 0;
};

struct RunOptions {
  ClientConfig client;
  ServerConfig server;
  std::size_t workers = 1;
};

/// Both parties in one process, connected by the given channel pair. The
/// server runs on its own thread.
template <he::Backend B>
InferenceRun<B> run_session(const B& be, const ExecutionPlan& plan, const std::vector<std::vector<double>>& inputs,
                            const RunOptions& opt, transport::Channel& client_end, transport::Channel& server_end) {
  WorkerPool pool(opt.workers);
  ServerSession<B> server(be, plan, server_end, pool, opt.server);
  std::exception_ptr server_error;
  std::thread worker([&] {
    try {
      server.run();
    } catch (...) {
      server_error = std::current_exception();
    }
    server_end.close();
  });
  ClientSession<B> client(be, client_end, opt.client);
  std::exception_ptr client_error;
  ClientOutcome outcome;
  try {
    outcome = client.run(inputs);
  } catch (...) {
    client_error = std::current_exception();
    client_end.close();
  }
  worker.join();
  // The server's own failure explains a client-side disconnect better.
  if (server_error && (!client_error || [&] {
        try {
          std::rethrow_exception(client_error);
        } catch (const Error& e) {
          return e.category() == ErrorCategory::transport;
        } catch (...) {
          return false;
        }
      }()))
    std::rethrow_exception(server_error);
  if (client_error) std::rethrow_exception(client_error);
  InferenceRun<B> run{std::move(outcome), client.transcript(), server.transcript(), server.stats(),
                      client_end.bytes_written(), client_end.bytes_read()};
  return run;
}

/// In-process inference over a loopback channel.
template <he::Backend B>
InferenceRun<B> run_inference(const B& be, const ExecutionPlan& plan, const std::vector<std::vector<double>>& inputs,
                              const RunOptions& opt = {}) {
  auto [client_end, server_end] = transport::make_loopback_pair();
  return run_session(be, plan, inputs, opt, *client_end, *server_end);
}

}  // namespace permhe::protocol
