// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "permhe/he/backend.hpp"
#include "permhe/model/layers.hpp"
#include "permhe/packing.hpp"
#include "permhe/permute.hpp"
#include "permhe/protocol/plan.hpp"
#include "permhe/protocol/workers.hpp"

namespace permhe::protocol {

/// Server-side weights of one stage, encoded once per session.
template <he::Backend B>
struct EncodedStage {
  std::vector<typename B::MulOperand> weights;  // phi^k(sigma(W)) for k = 0..n-1
  typename B::AddOperand bias;
  Layout layout;
};

template <he::Backend B>
std::vector<typename B::MulOperand> encode_weight_set(const B& be, const SquareMatrix& w, std::size_t batch,
                                                      const WorkerPool& pool = WorkerPool{}) {
  const std::size_t n = w.order();
  const std::size_t slots = be.params().slot_count;
  make_layout(n, batch, slots);
  const SquareMatrix s = sigma(w);
  std::vector<std::optional<typename B::MulOperand>> ops(n);
  pool.parallel_for(n, [&](std::size_t k) {
    const std::vector<SquareMatrix> copies(batch, phi(s, k));
    ops[k].emplace(be.encode_mul_operand(encode_batch(copies, slots), be.fresh_level()));
  });
  std::vector<typename B::MulOperand> out;
  out.reserve(n);
  for (auto& o : ops) out.push_back(std::move(*o));
  return out;
}

template <he::Backend B>
EncodedStage<B> encode_stage(const B& be, const Stage& stage, const Placement& place,
                             const WorkerPool& pool = WorkerPool{}) {
  const std::size_t slots = be.params().slot_count;
  const Layout layout = make_layout(stage.order(), place.batch, slots);
  auto w = encode_weight_set(be, stage.weights, place.batch, pool);
  auto b = be.encode_add_operand(encode_batch(stage.bias_pack(place), slots), be.fresh_level() - 1, be.fresh_scale());
  return EncodedStage<B>{std::move(w), std::move(b), layout};
}

/// Sum over k of phi^k(sigma W) (.) V_k, plus B. Products may run on
/// several workers; the sum is always taken in k order so the result does
/// not depend on scheduling.
template <he::Backend B>
typename B::Ciphertext matf_server(const B& be, std::span<const typename B::MulOperand> w_set,
                                   std::span<const typename B::Ciphertext> v_set, const typename B::AddOperand& bias,
                                   const Layout& layout, const WorkerPool& pool = WorkerPool{}) {
  require(!v_set.empty(), ErrorCode::dimension, "matf: empty input set");
  require(w_set.size() == v_set.size(), ErrorCode::dimension,
          "matf: " + std::to_string(w_set.size()) + " weight operands for " + std::to_string(v_set.size()) +
              " input ciphertexts");
  require(v_set.size() == layout.order, ErrorCode::dimension, "matf: input set size differs from matrix order");
  for (const auto& v : v_set) {
    require(Layout(v.layout) == layout, ErrorCode::layout, "matf: input ciphertext layout differs from the weights");
    require(v.level == be.fresh_level(), ErrorCode::level,
            "matf: input ciphertext at level " + std::to_string(v.level) + ", expected a fresh encryption");
    require(v.level >= 1, ErrorCode::level, "matf: no multiplicative level left");
  }
  std::vector<std::optional<typename B::Ciphertext>> terms(v_set.size());
  pool.parallel_for(v_set.size(), [&](std::size_t k) { terms[k].emplace(be.mul_pt(v_set[k], w_set[k])); });
  typename B::Ciphertext acc = std::move(*terms[0]);
  for (std::size_t k = 1; k < terms.size(); ++k) acc = be.add_ct(acc, *terms[k]);
  return be.add_pt(acc, bias);
}

template <he::Backend B>
typename B::Ciphertext matf_server(const B& be, const EncodedStage<B>& stage,
                                   std::span<const typename B::Ciphertext> v_set, const WorkerPool& pool = WorkerPool{}) {
  return matf_server(be, std::span<const typename B::MulOperand>(stage.weights), v_set, stage.bias, stage.layout, pool);
}

/// Client side: ciphertext k encrypts psi^k(tau V) for every matrix of the pack.
template <he::Backend B>
std::vector<typename B::Ciphertext> client_prepare_input(const B& be, const typename B::PublicKey& pk,
                                                         std::span<const SquareMatrix> pack, Prng& rng) {
  require(!pack.empty(), ErrorCode::dimension, "prepare_input: empty pack");
  const std::size_t n = pack.front().order();
  const std::size_t slots = be.params().slot_count;
  std::vector<SquareMatrix> taus;
  taus.reserve(pack.size());
  for (const auto& v : pack) {
    require(v.order() == n, ErrorCode::dimension, "prepare_input: matrices of different order");
    taus.push_back(tau(v));
  }
  std::vector<typename B::Ciphertext> out;
  out.reserve(n);
  std::vector<SquareMatrix> shifted(pack.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t t = 0; t < taus.size(); ++t) shifted[t] = psi(taus[t], k);
    out.push_back(be.encrypt(pk, encode_batch(shifted, slots), rng));
  }
  return out;
}

template <he::Backend B>
std::vector<typename B::Ciphertext> client_prepare_input(const B& be, const typename B::PublicKey& pk,
                                                         const SquareMatrix& v, Prng& rng) {
  return client_prepare_input(be, pk, std::span<const SquareMatrix>(&v, 1), rng);
}

/// Client half of the non-linear round: decrypt, keep the true output rows,
/// apply the activation exactly.
template <he::Backend B>
std::vector<std::vector<double>> nlnf_decrypt_activate(const B& be, const typename B::SecretKey& sk,
                                                       const typename B::Ciphertext& c, const StageShape& shape,
                                                       const Placement& place) {
  require(shape.activation.has_value(), ErrorCode::activation, "stage has no activation to evaluate");
  require(Layout(c.layout) == Layout{static_cast<std::uint16_t>(shape.order), static_cast<std::uint16_t>(place.batch)},
          ErrorCode::layout, "activation request has an unexpected layout");
  auto ys = gather_outputs(decode_batch(be.decrypt(sk, c)), shape.rows, place);
  for (auto& y : ys)
    for (auto& v : y) v = model::apply(*shape.activation, v);
  return ys;
}

/// Full client reply to an activation request: the next stage's prepared
/// input set, or a single fresh encryption when the stage was terminal.
template <he::Backend B>
std::vector<typename B::Ciphertext> nlnf_client(const B& be, const typename B::SecretKey& sk,
                                                const typename B::PublicKey& pk, const typename B::Ciphertext& c,
                                                const StageShape& shape, const StageShape* next,
                                                const Placement& place, Prng& rng) {
  const auto ys = nlnf_decrypt_activate(be, sk, c, shape, place);
  if (next == nullptr) {
    const auto pack = scatter_inputs(ys, shape.order, place);
    return {be.encrypt(pk, encode_batch(pack, be.params().slot_count), rng)};
  }
  require(next->cols == shape.rows, ErrorCode::dimension, "next stage does not consume this stage's output");
  const auto pack = scatter_inputs(ys, next->order, place);
  return client_prepare_input(be, pk, std::span<const SquareMatrix>(pack), rng);
}

}  // namespace permhe::protocol
